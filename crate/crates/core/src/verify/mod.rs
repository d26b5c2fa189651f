//! Experiments that compare the bounds with exact or simulated tails.

mod battery;
mod config;
mod creme;
mod lowtemp;
mod report;
mod runs;
mod tail;

pub use battery::*;
pub use config::*;
pub use creme::*;
pub use lowtemp::*;
pub use report::*;
pub use runs::*;
pub use tail::*;
