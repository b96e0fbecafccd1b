//! End-to-end acceptance suite. All nine criteria run sequentially inside a
//! single test so wall-clock measurements never share the machine, and each
//! criterion prints its own pass/fail line.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::mpsc;
use std::time::{Duration, Instant};

use autodiff_core::{
    forward, mse_loss, mse_loss_tape, sgd_step, Activation, MlpArch, ParamSet, PriorSpec, Sgd,
    Tensor,
};
use bench_cli::{
    gap_vs_support_std, run_regression_demo, run_scaling, Algo, BenchConfig,
};
use inference_algos::{
    init_svgd, register_moment_hooks, swag_batch, swag_sample, train_ensemble_centralized,
    train_ensemble_distributed, train_svgd, SvgdConfig, SwagPosterior,
};
use particle_runtime::{LossKind, ParticleInit, ParticleNn, StepMode};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

// ------------------------------------------------------------------ helpers

fn budget(start: Instant, secs: u64, what: &str) {
    let took = start.elapsed();
    assert!(
        took < Duration::from_secs(secs),
        "{what} took {took:?}, budget {secs} s"
    );
}

fn make_batches(seed: u64, batches: usize, batch_size: usize, dim: usize) -> Vec<(Tensor, Tensor)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..batches)
        .map(|_| {
            let x: Vec<f64> =
                (0..batch_size * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let y: Vec<f64> =
                (0..batch_size).map(|i| (x[i * dim] * 2.0).sin()).collect();
            (
                Tensor::matrix(batch_size, dim, x).unwrap(),
                Tensor::matrix(batch_size, 1, y).unwrap(),
            )
        })
        .collect()
}

fn direct_sgd(arch: &MlpArch, seed: u64, data: &[(Tensor, Tensor)], steps: usize, lr: f64) -> Vec<f64> {
    let mut params = ParamSet::init(arch, seed);
    let mut it = data.iter().cycle();
    for _ in 0..steps {
        let (x, y) = it.next().unwrap();
        let (_, tape) = forward(arch, &params, x).unwrap();
        params.zero_grads();
        mse_loss_tape(tape, y).unwrap().backward(arch, &mut params).unwrap();
        sgd_step(&mut params, lr).unwrap();
    }
    params.flatten()
}

// --------------------------------------------------------------- criteria

/// 50 random (arch, params, batch) triples against central finite differences.
fn criterion_1_gradient_fidelity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..50 {
        let depth = rng.gen_range(1..=4usize);
        let mut dims = vec![rng.gen_range(1..=8usize)];
        for _ in 0..depth {
            dims.push(rng.gen_range(1..=8usize));
        }
        let act = if rng.gen_bool(0.5) { Activation::Tanh } else { Activation::Identity };
        let arch = MlpArch::new(dims, act).unwrap();
        let rows = rng.gen_range(1..=4usize);
        let x: Vec<f64> =
            (0..rows * arch.input_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> =
            (0..rows * arch.output_dim()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x = Tensor::matrix(rows, arch.input_dim(), x).unwrap();
        let y = Tensor::matrix(rows, arch.output_dim(), y).unwrap();

        let mut params = ParamSet::init(&arch, rng.gen());
        let (_, tape) = forward(&arch, &params, &x).unwrap();
        params.zero_grads();
        mse_loss_tape(tape, &y).unwrap().backward(&arch, &mut params).unwrap();
        let grads = params.flatten_grads().unwrap();

        let flat = params.flatten();
        let h = 1e-5;
        for i in 0..flat.len() {
            let mut plus = flat.clone();
            plus[i] += h;
            let pp = params.unflatten(&plus).unwrap();
            let lp = mse_loss(&forward(&arch, &pp, &x).unwrap().0, &y).unwrap();
            let mut minus = flat.clone();
            minus[i] -= h;
            let pm = params.unflatten(&minus).unwrap();
            let lm = mse_loss(&forward(&arch, &pm, &x).unwrap().0, &y).unwrap();
            let fd = (lp - lm) / (2.0 * h);
            let tol = 1e-5 * fd.abs().max(grads[i].abs()) + 1e-8;
            assert!(
                (grads[i] - fd).abs() <= tol,
                "component {i}: autodiff {} vs finite difference {fd}",
                grads[i]
            );
        }
    }
    budget(start, 10, "gradient fidelity");
}

/// One particle with a uniform prior reduces to plain SGD over 100 steps.
fn criterion_2_svgd_degeneracy() {
    let start = Instant::now();
    let arch = MlpArch::new(vec![2, 6, 1], Activation::Tanh).unwrap();
    let data = make_batches(2, 1, 16, 2);
    let lr = 0.05;
    let mut pnn = ParticleNn::new(arch.clone(), 1, 1).unwrap();
    let cfg = SvgdConfig::new(1.0, lr, PriorSpec::Uniform);
    let pids = train_svgd(&mut pnn, 1, &data, 100, &cfg, &[5]).unwrap();
    let got = pnn.pget_sync(pids[0]).unwrap().flatten();
    let expect = direct_sgd(&arch, 5, &data, 100, lr);
    for (g, e) in got.iter().zip(expect.iter()) {
        assert!((g - e).abs() <= 1e-10 * e.abs().max(1e-12), "{g} vs {e}");
    }
    budget(start, 5, "SVGD degeneracy");
}

/// One svgd_update on a 2-parameter net vs an independent double loop.
fn criterion_3_svgd_brute_force() {
    let start = Instant::now();
    let tiny = MlpArch::new(vec![1, 1], Activation::Identity).unwrap();
    let x = Tensor::matrix(4, 1, vec![0.7, -0.4, 1.5, 0.2]).unwrap();
    let y = Tensor::matrix(4, 1, vec![0.9, -0.1, 2.1, 0.4]).unwrap();
    let (l, lr, sigma) = (0.6, 0.08, 1.5);
    let cfg = SvgdConfig::new(l, lr, PriorSpec::gaussian(sigma).unwrap());
    let mut pnn = ParticleNn::new(tiny, 1, 4).unwrap();
    let pids = init_svgd(&mut pnn, 3, &cfg, &[21, 22, 23]).unwrap();

    let events: Vec<_> = pids
        .iter()
        .map(|&p| pnn.pstep(p, LossKind::Mse, &x, &y, StepMode::GradOnly).unwrap())
        .collect();
    pnn.pjoin(events).unwrap();
    let thetas: Vec<Vec<f64>> =
        pids.iter().map(|&p| pnn.pget_sync(p).unwrap().flatten()).collect();
    let grads: Vec<Vec<f64>> = pids
        .iter()
        .map(|&p| pnn.pget_sync(p).unwrap().flatten_grads().unwrap())
        .collect();

    let mut expect = Vec::new();
    for i in 0..3 {
        let mut phi = [0.0; 2];
        for j in 0..3 {
            let mut sq = 0.0;
            for d in 0..2 {
                sq += (thetas[j][d] - thetas[i][d]).powi(2);
            }
            let k = (-sq / (2.0 * l * l)).exp();
            for d in 0..2 {
                let g_j = -grads[j][d] - thetas[j][d] / (sigma * sigma);
                phi[d] += k * g_j - (thetas[j][d] - thetas[i][d]) / (l * l) * k;
            }
        }
        expect.push([
            thetas[i][0] + lr * phi[0] / 3.0,
            thetas[i][1] + lr * phi[1] / 3.0,
        ]);
    }

    let updates: Vec<_> = pids.iter().map(|&p| pnn.psend(p, "SVGD_UPDATE").unwrap()).collect();
    pnn.pjoin(updates).unwrap();
    for (i, &p) in pids.iter().enumerate() {
        let got = pnn.pget_sync(p).unwrap().flatten();
        for d in 0..2 {
            assert!((got[d] - expect[i][d]).abs() < 1e-12);
        }
    }
    budget(start, 1, "SVGD brute force");
}

/// 200 streaming moment updates vs snapshot-list statistics, then a Monte
/// Carlo check of the sampler against the posterior mean.
fn criterion_4_swag_oracle() {
    let start = Instant::now();
    let arch = MlpArch::new(vec![2, 4, 1], Activation::Tanh).unwrap();
    let data = make_batches(4, 4, 8, 2);
    let lr = 0.05;
    let mut pnn = ParticleNn::new(arch, 1, 4).unwrap();
    let pid = pnn.pinit(None, ParticleInit::Seed(6), Some(Sgd { lr })).unwrap();
    for _ in 0..2 {
        for (x, y) in &data {
            pnn.pstep_sync(pid, LossKind::Mse, x, y, StepMode::Optimize).unwrap();
        }
    }
    let init = pnn.pget_sync(pid).unwrap();
    let (mom1, mom2) = register_moment_hooks(&mut pnn, pid, &init).unwrap();
    let mut snapshots = vec![init.flatten()];
    for _ in 0..50 {
        for (x, y) in &data {
            swag_batch(&pnn, pid, mom1, mom2, x, y).unwrap();
            snapshots.push(pnn.pget_sync(pid).unwrap().flatten());
        }
    }
    assert_eq!(snapshots.len(), 201);
    let k = snapshots.len() as f64;
    let dim = snapshots[0].len();
    let mut mean = vec![0.0; dim];
    let mut mom2_expect = vec![0.0; dim];
    for snap in &snapshots {
        for d in 0..dim {
            mean[d] += snap[d] / k;
            mom2_expect[d] += snap[d] * snap[d] / k;
        }
    }
    let got_mean = pnn.pget_sync(mom1).unwrap();
    let got_mom2 = pnn.pget_sync(mom2).unwrap();
    for d in 0..dim {
        assert!((got_mean.flatten()[d] - mean[d]).abs() <= 1e-10 * mean[d].abs().max(1.0));
        assert!(
            (got_mom2.flatten()[d] - mom2_expect[d]).abs()
                <= 1e-10 * mom2_expect[d].abs().max(1.0)
        );
    }

    let posterior = SwagPosterior { mean: got_mean, mom2: got_mom2, n: 201 };
    let sigma: Vec<f64> = posterior.variance().iter().map(|v| v.sqrt()).collect();
    let draws = 10_000u64;
    let mut mc = vec![0.0; dim];
    for s in 0..draws {
        for (acc, v) in mc.iter_mut().zip(swag_sample(&posterior, 7000 + s).flatten()) {
            *acc += v / draws as f64;
        }
    }
    let pm = posterior.mean.flatten();
    for d in 0..dim {
        assert!(
            (mc[d] - pm[d]).abs() <= 4.0 * sigma[d] / 100.0,
            "component {d}: MC mean {} vs posterior mean {}",
            mc[d],
            pm[d]
        );
    }
    budget(start, 30, "SWAG oracle");
}

/// Centralized and hook-driven ensembles agree bit for bit.
fn criterion_5_ensemble_equivalence() {
    let start = Instant::now();
    let arch = MlpArch::new(vec![2, 6, 1], Activation::Tanh).unwrap();
    let data = make_batches(5, 4, 8, 2);
    let seeds = [31u64, 32, 33];

    let mut central = ParticleNn::new(arch.clone(), 2, 2).unwrap();
    let cpids = train_ensemble_centralized(&mut central, 3, &data, 5, 0.05, &seeds).unwrap();
    let expect: Vec<Vec<f64>> =
        cpids.iter().map(|&p| central.pget_sync(p).unwrap().flatten()).collect();

    let mut dist = ParticleNn::new(arch, 2, 2).unwrap();
    let data_c = data.clone();
    let dpids =
        train_ensemble_distributed(&mut dist, 3, move || data_c.clone(), 5, 0.05, &seeds).unwrap();
    for (i, &p) in dpids.iter().enumerate() {
        assert_eq!(dist.pget_sync(p).unwrap().flatten(), expect[i]);
    }
    budget(start, 10, "ensemble equivalence");
}

fn svgd_16_run(devices: usize, capacity: usize) -> Vec<Vec<f64>> {
    let arch = MlpArch::new(vec![2, 4, 1], Activation::Tanh).unwrap();
    let data = make_batches(6, 2, 8, 2);
    let cfg = SvgdConfig::new(1.0, 0.05, PriorSpec::gaussian(1.0).unwrap());
    let seeds: Vec<u64> = (100..116).collect();
    let mut pnn = ParticleNn::new(arch, devices, capacity).unwrap();
    let pids = train_svgd(&mut pnn, 16, &data, 3, &cfg, &seeds).unwrap();
    pids.iter().map(|&p| pnn.pget_sync(p).unwrap().flatten()).collect()
}

/// 16-particle all-to-all gathers finish under a watchdog on 2, 3, and 4
/// loops, and the result is placement and capacity invariant.
fn criterion_6_concurrency_soundness() {
    let mut reference: Option<Vec<Vec<f64>>> = None;
    for devices in [2usize, 3, 4] {
        for capacity in [1usize, 2, 16] {
            let (tx, rx) = mpsc::channel();
            let handle = std::thread::spawn(move || {
                let out = svgd_16_run(devices, capacity);
                let _ = tx.send(out);
            });
            let out = rx
                .recv_timeout(Duration::from_secs(60))
                .unwrap_or_else(|_| panic!("watchdog: {devices} loops capacity {capacity}"));
            handle.join().unwrap();
            match &reference {
                None => reference = Some(out),
                Some(r) => assert_eq!(
                    &out, r,
                    "result differs at {devices} loops capacity {capacity}"
                ),
            }
        }
    }
}

fn fit_exponent(points: &[(usize, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|(p, _)| (*p as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|(_, t)| t.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    cov / var
}

fn scaling_cfg(widths: Vec<usize>, particles: Vec<usize>, devices: usize) -> BenchConfig {
    // small batches keep the per-step matmul from masking the all-to-all
    // communication term that carries the quadratic growth
    BenchConfig {
        widths,
        layers: 10,
        particles,
        devices,
        active_capacity: 16,
        epochs: 1,
        batches: 5,
        batch_size: 32,
        algo: Algo::Svgd,
        seed: 0,
    }
}

/// SVGD epoch time grows about quadratically in the particle count.
fn criterion_7_quadratic_scaling() {
    let start = Instant::now();
    let mut exponents = Vec::new();
    let mut one_worker_p8 = Vec::new();
    for run in 0..3 {
        let report = run_scaling(&scaling_cfg(vec![256], vec![2, 4, 8, 16], 1)).unwrap();
        let points: Vec<(usize, f64)> =
            report.rows.iter().map(|r| (r.particles, r.mean_epoch_seconds)).collect();
        let e = fit_exponent(&points);
        println!("  run {run}: exponent {e:.3}");
        one_worker_p8.push(points.iter().find(|(p, _)| *p == 8).unwrap().1);
        exponents.push(e);
    }
    exponents.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = exponents[1];
    println!("  median exponent {median:.3}");
    assert!((1.7..=2.3).contains(&median), "median exponent {median} outside [1.7, 2.3]");

    // multi-worker substitute property: with 2 workers and 8 particles the
    // epoch must not cost more than 110% of the 1-worker epoch; reported
    // only when the host lacks 2 cores
    one_worker_p8.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let single = one_worker_p8[1];
    let report = run_scaling(&scaling_cfg(vec![256], vec![8], 2)).unwrap();
    let dual = report.rows[0].mean_epoch_seconds;
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    println!("  2-worker/1-worker epoch ratio {:.3} on {cores} core(s)", dual / single);
    if cores >= 2 {
        assert!(dual <= 1.10 * single, "2-worker epoch {dual} vs 1-worker {single}");
    }
    budget(start, 600, "quadratic scaling");
}

/// Doubling D quadruples the work in theory; the measured slowdown at 16
/// particles must land in [2.5, 4.5], and stays below 4.5 at 1 particle.
fn criterion_8_slowdown_trend() {
    let mut cfg = scaling_cfg(vec![128, 256], vec![1, 16], 1);
    // ensemble with full batches: per-particle compute carries the D^2
    // ratio, and there is no all-to-all term whose cache behavior would
    // skew the comparison between widths
    cfg.algo = Algo::Ensemble;
    cfg.batches = 10;
    cfg.batch_size = 128;
    cfg.epochs = 2;
    let report = run_scaling(&cfg).unwrap();
    for row in &report.slowdowns {
        println!("  particles {}: slowdown {:.3}", row.particles, row.ratio);
        if row.particles == 16 {
            assert!((2.5..=4.5).contains(&row.ratio), "16-particle slowdown {}", row.ratio);
        } else {
            assert!((1.0..=4.5).contains(&row.ratio), "1-particle slowdown {}", row.ratio);
        }
    }
}

/// The regression demo is more uncertain inside the data gap, 3 seeds of 3.
fn criterion_9_uncertainty() {
    let start = Instant::now();
    for seed in [0u64, 1, 2] {
        let res = run_regression_demo(Algo::Svgd, 8, 2000, seed).unwrap();
        let (gap, support) = gap_vs_support_std(&res);
        println!("  seed {seed}: gap std {gap:.4}, support std {support:.4}");
        assert!(gap > support, "seed {seed}: gap {gap} not above support {support}");
    }
    budget(start, 120, "uncertainty property");
}

#[test]
fn acceptance_criteria() {
    let criteria: Vec<(&str, fn())> = vec![
        ("gradient fidelity vs finite differences", criterion_1_gradient_fidelity),
        ("SVGD single-particle degeneracy to SGD", criterion_2_svgd_degeneracy),
        ("SVGD three-particle brute-force oracle", criterion_3_svgd_brute_force),
        ("SWAG streaming oracle and sampler MC", criterion_4_swag_oracle),
        ("ensemble centralized/distributed equivalence", criterion_5_ensemble_equivalence),
        ("concurrency soundness and invariance", criterion_6_concurrency_soundness),
        ("quadratic scaling in particle count", criterion_7_quadratic_scaling),
        ("slowdown trend across layer widths", criterion_8_slowdown_trend),
        ("uncertainty above the data gap", criterion_9_uncertainty),
    ];
    let mut failures = Vec::new();
    for (i, (name, body)) in criteria.iter().enumerate() {
        let n = i + 1;
        println!("criterion {n} ({name}): running");
        match catch_unwind(AssertUnwindSafe(body)) {
            Ok(()) => println!("criterion {n} ({name}): pass"),
            Err(cause) => {
                let msg = cause
                    .downcast_ref::<String>()
                    .map(String::as_str)
                    .or_else(|| cause.downcast_ref::<&str>().copied())
                    .unwrap_or("panic");
                println!("criterion {n} ({name}): FAIL - {msg}");
                failures.push(n);
            }
        }
    }
    assert!(failures.is_empty(), "failed criteria: {failures:?}");
}
