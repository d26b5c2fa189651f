use crate::rng::{self, Rng};

use super::FieldModel;

pub const DEFAULT_BURN_IN: usize = 100;

/// Heat-bath dynamics: each sweep resamples every slot, in spiral order, from
/// its exact conditional.
pub struct GlauberSampler<'a, M: FieldModel + ?Sized> {
    model: &'a M,
    config: Vec<u8>,
    rng: Rng,
    scratch: Vec<f64>,
}

impl<'a, M: FieldModel + ?Sized> GlauberSampler<'a, M> {
    pub fn new(model: &'a M, init: Vec<u8>, rng: Rng) -> Self {
        assert_eq!(init.len(), model.volume().len());
        GlauberSampler { model, config: init, rng, scratch: Vec::new() }
    }

    pub fn sweep(&mut self) {
        self.model.heat_bath_sweep(&mut self.config, &mut self.rng, &mut self.scratch);
    }

    pub fn run(&mut self, sweeps: usize) {
        for _ in 0..sweeps {
            self.sweep();
        }
    }

    pub fn config(&self) -> &[u8] {
        &self.config
    }

    pub fn into_config(self) -> Vec<u8> {
        self.config
    }
}

/// One configuration after `sweeps` heat-bath sweeps from `init`, using the
/// generator of run `run` under `seed`.
pub fn glauber_sample<M: FieldModel + ?Sized>(
    model: &M,
    init: &[u8],
    sweeps: usize,
    seed: u64,
    run: u64,
) -> Vec<u8> {
    let mut s = GlauberSampler::new(model, init.to_vec(), rng::stream(seed, run));
    s.run(sweeps.max(1));
    s.into_config()
}
