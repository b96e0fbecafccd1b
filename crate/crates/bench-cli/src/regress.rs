//! 1D regression demo: trains on a sine wave with a hole in the inputs and
//! emits the predictive mean and spread over a dense grid.

use std::io::Write;

use autodiff_core::{Activation, MlpArch, PriorSpec, Tensor};
use inference_algos::{
    ppush_predict, swag_sample, train_ensemble_centralized, train_svgd, train_swag, Batches,
    SvgdConfig,
};
use particle_runtime::{ParticleInit, ParticleNn};

use crate::{Algo, BenchError, Result};

/// Inputs in (-GAP_HALF_WIDTH, GAP_HALF_WIDTH) carry no training data.
pub const GAP_HALF_WIDTH: f64 = 0.2;

const GRID_POINTS: usize = 101;
const TRAIN_POINTS: usize = 64;
const SWAG_SAMPLES: usize = 32;

fn target(x: f64) -> f64 {
    (std::f64::consts::TAU * x).sin()
}

fn demo_arch() -> MlpArch {
    MlpArch::new(vec![1, 16, 16, 1], Activation::Tanh).unwrap()
}

/// Two batches of 32 points each, evenly spaced over the support
/// [-1, -0.2] u [0.2, 1], alternating between batches. Noise free.
pub fn regression_dataset() -> Batches {
    let half = TRAIN_POINTS / 2;
    let mut xs = Vec::with_capacity(TRAIN_POINTS);
    for i in 0..half {
        let t = i as f64 / (half - 1) as f64;
        xs.push(-1.0 + t * (1.0 - GAP_HALF_WIDTH));
    }
    for i in 0..half {
        let t = i as f64 / (half - 1) as f64;
        xs.push(GAP_HALF_WIDTH + t * (1.0 - GAP_HALF_WIDTH));
    }
    let mut batches = Vec::new();
    for parity in 0..2 {
        let bx: Vec<f64> = xs.iter().copied().skip(parity).step_by(2).collect();
        let by: Vec<f64> = bx.iter().map(|&x| target(x)).collect();
        let rows = bx.len();
        batches.push((
            Tensor::matrix(rows, 1, bx).unwrap(),
            Tensor::matrix(rows, 1, by).unwrap(),
        ));
    }
    batches
}

#[derive(Debug, Clone)]
pub struct RegressionResult {
    pub xs: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// One output column per particle, ascending pid order.
    pub per_particle: Vec<Vec<f64>>,
}

pub fn run_regression_demo(
    algo: Algo,
    n_particles: usize,
    epochs: usize,
    seed: u64,
) -> Result<RegressionResult> {
    if n_particles == 0 {
        return Err(BenchError::Config("need at least one particle".into()));
    }
    let data = regression_dataset();
    let seeds: Vec<u64> = (0..n_particles as u64).map(|i| seed.wrapping_add(i)).collect();
    let mut pnn = ParticleNn::new(demo_arch(), 1, n_particles.max(SWAG_SAMPLES))?;

    let pids = match algo {
        Algo::Svgd => {
            let cfg = SvgdConfig::new(3.0, 0.1, PriorSpec::gaussian(2.0)?);
            train_svgd(&mut pnn, n_particles, &data, epochs, &cfg, &seeds)?
        }
        Algo::Ensemble => {
            train_ensemble_centralized(&mut pnn, n_particles, &data, epochs, 0.1, &seeds)?
        }
        Algo::Swag => {
            // one SWAG chain; the predictive particles are posterior draws
            let posterior =
                train_swag(&mut pnn, epochs / 2, epochs - epochs / 2, &data, 0.1, seed)?;
            let mut sample_pids = Vec::with_capacity(SWAG_SAMPLES);
            for i in 0..SWAG_SAMPLES as u64 {
                let draw = swag_sample(&posterior, seed.wrapping_add(1000 + i));
                sample_pids.push(pnn.pinit(None, ParticleInit::Params(draw), None)?);
            }
            sample_pids
        }
    };

    let xs: Vec<f64> = (0..GRID_POINTS)
        .map(|i| -1.0 + 2.0 * i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let grid = Tensor::matrix(GRID_POINTS, 1, xs.clone())?;
    let summary = ppush_predict(&pnn, &pids, &grid)?;
    Ok(RegressionResult {
        xs,
        mean: summary.mean.data().to_vec(),
        std: summary.std.data().to_vec(),
        per_particle: summary.outputs.values().map(|t| t.data().to_vec()).collect(),
    })
}

/// Mean predictive std over grid points inside the data gap versus over the
/// training support.
pub fn gap_vs_support_std(res: &RegressionResult) -> (f64, f64) {
    let mut gap = (0.0, 0usize);
    let mut support = (0.0, 0usize);
    for (x, s) in res.xs.iter().zip(res.std.iter()) {
        if x.abs() < GAP_HALF_WIDTH {
            gap = (gap.0 + s, gap.1 + 1);
        } else {
            support = (support.0 + s, support.1 + 1);
        }
    }
    (gap.0 / gap.1 as f64, support.0 / support.1 as f64)
}

pub fn write_regression_csv(res: &RegressionResult, w: &mut dyn Write) -> std::io::Result<()> {
    write!(w, "x,mean,std")?;
    for i in 0..res.per_particle.len() {
        write!(w, ",y{i}")?;
    }
    writeln!(w)?;
    for row in 0..res.xs.len() {
        write!(w, "{},{},{}", res.xs[row], res.mean[row], res.std[row])?;
        for col in &res.per_particle {
            write!(w, ",{}", col[row])?;
        }
        writeln!(w)?;
    }
    Ok(())
}
