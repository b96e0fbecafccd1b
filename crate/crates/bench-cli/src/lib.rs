//! Benchmark and demo harness over the particle runtime: synthetic data,
//! epoch-timing scaling runs, a 1D regression uncertainty demo, and CSV
//! emission.

mod data;
mod regress;
mod scale;

pub use data::gen_synthetic;
pub use regress::{
    gap_vs_support_std, regression_dataset, run_regression_demo, write_regression_csv,
    RegressionResult, GAP_HALF_WIDTH,
};
pub use scale::{
    run_scaling, write_epoch_csv, write_scaling_csv, write_slowdown_csv, EpochSample,
    ScalingReport, SlowdownRow, TimingRow,
};

use std::str::FromStr;

#[derive(thiserror::Error, Debug)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Runtime(#[from] particle_runtime::RuntimeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<autodiff_core::Error> for BenchError {
    fn from(e: autodiff_core::Error) -> Self {
        BenchError::Runtime(particle_runtime::RuntimeError::Numeric(e))
    }
}

pub type Result<T> = std::result::Result<T, BenchError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algo {
    Svgd,
    Ensemble,
    Swag,
}

impl Algo {
    pub fn name(self) -> &'static str {
        match self {
            Algo::Svgd => "svgd",
            Algo::Ensemble => "ensemble",
            Algo::Swag => "swag",
        }
    }
}

impl FromStr for Algo {
    type Err = BenchError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "svgd" => Ok(Algo::Svgd),
            "ensemble" => Ok(Algo::Ensemble),
            "swag" => Ok(Algo::Swag),
            other => Err(BenchError::Config(format!(
                "unknown algorithm '{other}' (expected svgd, ensemble, or swag)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    /// Layer widths (D values) to benchmark.
    pub widths: Vec<usize>,
    /// Hidden D x D layers per network.
    pub layers: usize,
    /// Particle counts to benchmark.
    pub particles: Vec<usize>,
    pub devices: usize,
    pub active_capacity: usize,
    pub epochs: usize,
    pub batches: usize,
    pub batch_size: usize,
    pub algo: Algo,
    pub seed: u64,
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive: [(&str, usize); 6] = [
            ("layers", self.layers),
            ("devices", self.devices),
            ("active", self.active_capacity),
            ("epochs", self.epochs),
            ("batches", self.batches),
            ("batch-size", self.batch_size),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(BenchError::Config(format!("{name} must be positive")));
            }
        }
        if self.widths.is_empty() || self.widths.iter().any(|&d| d == 0) {
            return Err(BenchError::Config("--d needs at least one positive width".into()));
        }
        if self.particles.is_empty() || self.particles.iter().any(|&p| p == 0) {
            return Err(BenchError::Config(
                "--particles needs at least one positive count".into(),
            ));
        }
        Ok(())
    }
}
