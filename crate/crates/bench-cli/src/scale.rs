//! Epoch-timing scaling runs and their CSV serializations.

use std::io::Write;
use std::time::Instant;

use autodiff_core::{Activation, MlpArch, PriorSpec};
use inference_algos::{
    ensemble_epoch, init_ensemble, init_svgd, register_moment_hooks, svgd_epoch, swag_batch,
    Batches, SvgdConfig,
};
use particle_runtime::{ParticleId, ParticleNn};

use crate::{Algo, BenchConfig, Result};

#[derive(Debug, Clone)]
pub struct TimingRow {
    pub algorithm: &'static str,
    pub particles: usize,
    pub devices: usize,
    pub active_capacity: usize,
    pub d: usize,
    pub mean_epoch_seconds: f64,
    pub epochs_measured: usize,
}

/// One raw per-epoch wall-clock sample, emitted so timing variance can be
/// inspected downstream.
#[derive(Debug, Clone)]
pub struct EpochSample {
    pub algorithm: &'static str,
    pub d: usize,
    pub particles: usize,
    pub epoch: usize,
    pub seconds: f64,
}

/// Mean-epoch-time ratio between two widths at a fixed particle count.
#[derive(Debug, Clone)]
pub struct SlowdownRow {
    pub algorithm: &'static str,
    pub particles: usize,
    pub d_small: usize,
    pub d_large: usize,
    pub ratio: f64,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub rows: Vec<TimingRow>,
    pub epoch_samples: Vec<EpochSample>,
    pub slowdowns: Vec<SlowdownRow>,
    /// Final-epoch mean loss per (d, particles) cell, in row order.
    pub final_losses: Vec<(usize, usize, f64)>,
}

enum Cell {
    Svgd(Vec<ParticleId>),
    Ensemble(Vec<ParticleId>),
    // (param, mom1, mom2) per independent chain
    Swag(Vec<(ParticleId, ParticleId, ParticleId)>),
}

fn build_cell(pnn: &mut ParticleNn, cfg: &BenchConfig, p: usize) -> Result<Cell> {
    let seeds: Vec<u64> = (0..p as u64).map(|i| cfg.seed.wrapping_add(i)).collect();
    Ok(match cfg.algo {
        Algo::Svgd => {
            let svgd = SvgdConfig::new(10.0, 1e-3, PriorSpec::Uniform);
            Cell::Svgd(init_svgd(pnn, p, &svgd, &seeds)?)
        }
        Algo::Ensemble => Cell::Ensemble(init_ensemble(pnn, p, 1e-3, &seeds)?),
        Algo::Swag => {
            let mut chains = Vec::with_capacity(p);
            for &seed in &seeds {
                let pid = pnn.pinit(
                    None,
                    particle_runtime::ParticleInit::Seed(seed),
                    Some(autodiff_core::Sgd { lr: 1e-3 }),
                )?;
                let init = pnn.pget_sync(pid)?;
                let (m1, m2) = register_moment_hooks(pnn, pid, &init)?;
                chains.push((pid, m1, m2));
            }
            Cell::Swag(chains)
        }
    })
}

fn run_epoch(pnn: &ParticleNn, cell: &Cell, data: &Batches) -> Result<f64> {
    Ok(match cell {
        Cell::Svgd(pids) => svgd_epoch(pnn, pids, data)?,
        Cell::Ensemble(pids) => {
            let losses = ensemble_epoch(pnn, pids, data)?;
            losses.iter().sum::<f64>() / losses.len() as f64
        }
        Cell::Swag(chains) => {
            let mut total = 0.0;
            let mut count = 0usize;
            for (x, y) in data {
                for &(pid, m1, m2) in chains {
                    total += swag_batch(pnn, pid, m1, m2, x, y)?;
                    count += 1;
                }
            }
            total / count as f64
        }
    })
}

/// Runs every (width, particle count) cell sequentially. Timing covers the
/// training epochs only; handle construction and data generation are
/// excluded, context-switch copies are included.
pub fn run_scaling(cfg: &BenchConfig) -> Result<ScalingReport> {
    cfg.validate()?;
    let mut report = ScalingReport {
        rows: Vec::new(),
        epoch_samples: Vec::new(),
        slowdowns: Vec::new(),
        final_losses: Vec::new(),
    };
    for &d in &cfg.widths {
        let data = crate::gen_synthetic(d, cfg.batches, cfg.batch_size, cfg.seed);
        for &p in &cfg.particles {
            eprintln!("scale: algo={} D={d} particles={p}", cfg.algo.name());
            let mut dims = vec![d; cfg.layers + 1];
            dims.push(1);
            let arch = MlpArch::new(dims, Activation::Tanh)?;
            let mut pnn = ParticleNn::new(arch, cfg.devices, cfg.active_capacity)?;
            let cell = build_cell(&mut pnn, cfg, p)?;
            let mut total = 0.0;
            let mut last_loss = f64::NAN;
            for epoch in 0..cfg.epochs {
                let t0 = Instant::now();
                last_loss = run_epoch(&pnn, &cell, &data)?;
                let secs = t0.elapsed().as_secs_f64();
                total += secs;
                report.epoch_samples.push(EpochSample {
                    algorithm: cfg.algo.name(),
                    d,
                    particles: p,
                    epoch,
                    seconds: secs,
                });
            }
            report.rows.push(TimingRow {
                algorithm: cfg.algo.name(),
                particles: p,
                devices: cfg.devices,
                active_capacity: cfg.active_capacity,
                d,
                mean_epoch_seconds: total / cfg.epochs as f64,
                epochs_measured: cfg.epochs,
            });
            report.final_losses.push((d, p, last_loss));
        }
    }
    // slowdown ratios between adjacent widths at each particle count
    let mut widths = cfg.widths.clone();
    widths.sort_unstable();
    widths.dedup();
    for pair in widths.windows(2) {
        for &p in &cfg.particles {
            let mean_of = |d: usize| {
                report
                    .rows
                    .iter()
                    .find(|r| r.d == d && r.particles == p)
                    .map(|r| r.mean_epoch_seconds)
            };
            if let (Some(small), Some(large)) = (mean_of(pair[0]), mean_of(pair[1])) {
                report.slowdowns.push(SlowdownRow {
                    algorithm: cfg.algo.name(),
                    particles: p,
                    d_small: pair[0],
                    d_large: pair[1],
                    ratio: large / small,
                });
            }
        }
    }
    Ok(report)
}

pub fn write_scaling_csv(rows: &[TimingRow], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        w,
        "algorithm,particles,devices,active_capacity,D,mean_epoch_seconds,epochs_measured"
    )?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            r.algorithm,
            r.particles,
            r.devices,
            r.active_capacity,
            r.d,
            r.mean_epoch_seconds,
            r.epochs_measured
        )?;
    }
    Ok(())
}

pub fn write_epoch_csv(samples: &[EpochSample], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "algorithm,D,particles,epoch,seconds")?;
    for s in samples {
        writeln!(w, "{},{},{},{},{}", s.algorithm, s.d, s.particles, s.epoch, s.seconds)?;
    }
    Ok(())
}

pub fn write_slowdown_csv(rows: &[SlowdownRow], w: &mut dyn Write) -> std::io::Result<()> {
    writeln!(w, "algorithm,particles,d_small,d_large,ratio")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.algorithm, r.particles, r.d_small, r.d_large, r.ratio
        )?;
    }
    Ok(())
}
