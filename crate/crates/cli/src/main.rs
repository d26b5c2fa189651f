use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use couplab::verify::{
    coupling_matrix_experiment, creme_experiment, exact_battery, hoeffding_reduction,
    lowtemp_experiment, tail_experiment, transport_experiment, BoundReport, ExperimentConfig,
};
use couplab::Error;
use sha2::{Digest, Sha256};

#[derive(Parser, Debug)]
#[command(name = "couplab", version, about = "Exact and Monte Carlo checks of coupling-based concentration bounds")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the seed in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory for artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,

    /// Overrides every Monte Carlo sample count in the configuration.
    #[arg(long, global = true)]
    samples: Option<usize>,

    /// Worker threads; 0 picks one per core.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Exact battery over enumerable models.
    Battery,
    /// Simulated tail of one function.
    Tail,
    /// Exact coupling matrices or one simulated row.
    CouplingMatrix,
    /// Optimal coupling of two laws and the mean-difference check.
    Transport,
    /// High-temperature Ising experiment.
    Creme,
    /// Low-temperature Ising experiment.
    Lowtemp,
    /// Every section present in the configuration, in one report.
    Report,
}

impl Command {
    fn label(self) -> &'static str {
        match self {
            Command::Battery => "battery",
            Command::Tail => "tail",
            Command::CouplingMatrix => "coupling-matrix",
            Command::Transport => "transport",
            Command::Creme => "creme",
            Command::Lowtemp => "lowtemp",
            Command::Report => "report",
        }
    }
}

/// Failure with its exit status: 2 for bad input, 3 for capacity.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if matches!(e, Error::Capacity { .. }) { 3 } else { 2 };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { code: 2, message: e.to_string() }
    }
}

fn bad_input(message: impl Into<String>) -> Failure {
    Failure { code: 2, message: message.into() }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(exact_failures) => {
            if exact_failures > 0 {
                eprintln!("{exact_failures} exact-path check(s) failed");
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| bad_input("--config is required"))?;
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        config.seed = Some(seed);
    }
    if let Some(n) = cli.samples {
        if let Some(t) = config.tail.as_mut() {
            t.samples = n;
        }
        if let Some(c) = config.creme.as_mut() {
            c.samples = n;
        }
        if let Some(l) = config.lowtemp.as_mut() {
            l.tail_samples = n;
        }
        if let Some(m) = config.coupling_matrix.as_mut() {
            m.runs = n;
        }
    }
    config.validate()?;
    Ok(config)
}

/// Names artifacts `<command>-<config hash>-s<seed>`.
struct Artifacts {
    dir: PathBuf,
    stem: String,
}

impl Artifacts {
    fn new(dir: &Path, command: Command, config: &ExperimentConfig) -> Result<Self, Failure> {
        let canonical = serde_json::to_vec(config).map_err(|e| bad_input(e.to_string()))?;
        let hash = hex::encode(Sha256::digest(&canonical));
        let seed = config.seed.map_or_else(|| "none".to_string(), |s| s.to_string());
        fs::create_dir_all(dir)?;
        Ok(Artifacts { dir: dir.to_path_buf(), stem: format!("{}-{}-s{}", command.label(), &hash[..12], seed) })
    }

    fn path(&self, suffix: &str) -> PathBuf {
        self.dir.join(format!("{}.{suffix}", self.stem))
    }

    fn writer(&self, suffix: &str) -> Result<BufWriter<File>, Failure> {
        Ok(BufWriter::new(File::create(self.path(suffix))?))
    }

    fn json<T: serde::Serialize>(&self, suffix: &str, value: &T) -> Result<(), Failure> {
        let mut w = self.writer(suffix)?;
        serde_json::to_writer_pretty(&mut w, value).map_err(|e| bad_input(e.to_string()))?;
        w.flush()?;
        Ok(())
    }

    fn report(&self, report: &BoundReport) -> Result<(), Failure> {
        report.write_json(self.writer("report.json")?)?;
        report.write_csv(self.writer("report.csv")?)?;
        Ok(())
    }

    fn samples(&self, mean_batch: &[f64], values: &[f64]) -> Result<(), Failure> {
        let mut w = self.writer("samples.csv")?;
        writeln!(w, "index,mean_batch,value")?;
        for (i, (m, v)) in mean_batch.iter().zip(values).enumerate() {
            writeln!(w, "{i},{m:e},{v:e}")?;
        }
        w.flush()?;
        Ok(())
    }
}

fn missing(section: &str) -> Failure {
    bad_input(format!("the configuration has no `{section}` section"))
}

fn seed_of(config: &ExperimentConfig) -> Result<u64, Failure> {
    config.seed.ok_or_else(|| bad_input("a seed is required"))
}

/// Runs one section, writing its artifacts; `None` when the section is absent.
fn run_section(command: Command, config: &ExperimentConfig, art: &Artifacts) -> Result<Option<BoundReport>, Failure> {
    Ok(match command {
        Command::Battery => {
            let Some(b) = &config.battery else { return Ok(None) };
            let mut r = exact_battery(b)?;
            r.extend(hoeffding_reduction(b.t_points)?);
            Some(r)
        }
        Command::Tail => {
            let Some(t) = &config.tail else { return Ok(None) };
            let out = tail_experiment(t, seed_of(config)?)?;
            art.samples(&out.samples.mean_batch, &out.samples.values)?;
            art.json("tail.json", &(&out.tail, &out.exact))?;
            Some(out.report)
        }
        Command::CouplingMatrix => {
            let Some(m) = &config.coupling_matrix else { return Ok(None) };
            let out = coupling_matrix_experiment(m, config.seed)?;
            for (name, matrix) in &out.matrices {
                matrix.write_csv(art.writer(&format!("{name}.csv"))?)?;
            }
            if let Some(row) = &out.row {
                art.json("row.json", row)?;
            }
            Some(out.report)
        }
        Command::Transport => {
            let Some(t) = &config.transport else { return Ok(None) };
            let out = transport_experiment(t, seed_of(config)?)?;
            out.solution.write_triplets(art.writer("plan.csv")?)?;
            art.json("sardine.json", &out.sardine)?;
            Some(out.report)
        }
        Command::Creme => {
            let Some(c) = &config.creme else { return Ok(None) };
            let out = creme_experiment(c, seed_of(config)?)?;
            if let Some(s) = &out.samples {
                art.samples(&s.mean_batch, &s.values)?;
            }
            art.json("creme.json", &out)?;
            Some(out.report)
        }
        Command::Lowtemp => {
            let Some(l) = &config.lowtemp else { return Ok(None) };
            let out = lowtemp_experiment(l, seed_of(config)?)?;
            art.json("profile.json", &out.profile)?;
            Some(out.report)
        }
        Command::Report => unreachable!("handled by run"),
    })
}

fn run(cli: &Cli) -> Result<usize, Failure> {
    let config = load_config(cli)?;
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(|e| bad_input(e.to_string()))?;
    }
    let art = Artifacts::new(&cli.out, cli.command, &config)?;
    let report = if cli.command == Command::Report {
        let mut all = BoundReport::new(config.name.clone(), config.seed);
        for c in [
            Command::Battery,
            Command::Tail,
            Command::CouplingMatrix,
            Command::Transport,
            Command::Creme,
            Command::Lowtemp,
        ] {
            let sub = Artifacts { dir: art.dir.clone(), stem: format!("{}.{}", art.stem, c.label()) };
            if let Some(r) = run_section(c, &config, &sub)? {
                all.extend(r);
            }
        }
        if all.rows.is_empty() {
            return Err(bad_input("the configuration has no experiment sections"));
        }
        all
    } else {
        let mut r = run_section(cli.command, &config, &art)?.ok_or_else(|| missing(&cli.command.label().replace('-', "_")))?;
        r.experiment = format!("{}: {}", config.name, r.experiment);
        r.seed = config.seed;
        r
    };
    art.report(&report)?;
    // a closed stdout (e.g. piped into `head`) is not an error
    let mut stdout = std::io::stdout().lock();
    let _ = write!(stdout, "{}", report.summary());
    let _ = writeln!(stdout, "artifacts: {}", art.path("*").display());
    Ok(report.exact_failures())
}
