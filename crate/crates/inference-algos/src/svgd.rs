//! Stein variational gradient descent over particles, using the runtime's
//! all-to-all gather inside a per-particle update hook.

use std::sync::Arc;

use autodiff_core::{prior_logdensity_grad, sq_exp_kernel, sq_exp_kernel_grad_arg1, PriorSpec};
use particle_runtime::{
    HookState, LossKind, ParticleCtx, ParticleId, ParticleInit, ParticleNn, Result, RuntimeError,
    StateValue, StepMode,
};

use crate::Batches;

const SVGD_HOOK: &str = "SVGD_UPDATE";

/// Coefficient scheme for the update direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SvgdWeighting {
    /// phi(theta_i) = (1/n) sum_j [ k(theta_j, theta_i) g_j + grad_j k ],
    /// with g_j = -grad loss_j + grad log p(theta_j); theta += lr * phi.
    Canonical,
    /// Compatibility scheme weighting the likelihood term by k alone and
    /// only the kernel-gradient term by 1/n, with a descent-style sign.
    PaperCompat,
}

#[derive(Debug, Clone, Copy)]
pub struct SvgdConfig {
    pub bandwidth: f64,
    pub lr: f64,
    pub prior: PriorSpec,
    pub weighting: SvgdWeighting,
}

impl SvgdConfig {
    pub fn new(bandwidth: f64, lr: f64, prior: PriorSpec) -> Self {
        SvgdConfig { bandwidth, lr, prior, weighting: SvgdWeighting::Canonical }
    }
}

/// The SVGD_UPDATE hook body: gathers every other particle's parameters and
/// gradients, accumulates the update direction iterating in ascending pid
/// order, and applies theta_i <- theta_i + lr * phi in place.
pub fn svgd_update(ctx: &ParticleCtx<'_>, cfg: &SvgdConfig) -> Result<()> {
    let me = ctx.pid();
    let all = ctx.particles();
    let n = all.len() as f64;
    let others: Vec<ParticleId> = all.iter().copied().filter(|&p| p != me).collect();
    let snapshots = ctx.gather(&others)?;
    let own = ctx.params();
    let flat_i = own.flatten();
    let l = cfg.bandwidth;

    let mut acc = vec![0.0; flat_i.len()];
    for &j in &all {
        let pj = if j == me { &own } else { &snapshots[&j] };
        let flat_j = pj.flatten();
        let k = sq_exp_kernel(&flat_j, &flat_i, l).map_err(RuntimeError::Numeric)?;
        let k_grad =
            sq_exp_kernel_grad_arg1(&flat_j, &flat_i, l).map_err(RuntimeError::Numeric)?;
        let loss_grad = pj.flatten_grads().map_err(RuntimeError::Numeric)?;
        let prior_grad = prior_logdensity_grad(cfg.prior, pj);
        match cfg.weighting {
            SvgdWeighting::Canonical => {
                for d in 0..acc.len() {
                    acc[d] += k * (-loss_grad[d] + prior_grad[d]) + k_grad[d];
                }
            }
            SvgdWeighting::PaperCompat => {
                for d in 0..acc.len() {
                    acc[d] += k * loss_grad[d] + prior_grad[d] + k_grad[d] / n;
                }
            }
        }
    }
    let step = match cfg.weighting {
        SvgdWeighting::Canonical => {
            for v in &mut acc {
                *v /= n;
            }
            cfg.lr
        }
        SvgdWeighting::PaperCompat => -cfg.lr,
    };
    ctx.with_params_mut(|p| p.add_scaled(&acc, step)).map_err(RuntimeError::Numeric)
}

fn config_from_state(state: &HookState) -> Result<SvgdConfig> {
    Ok(SvgdConfig {
        bandwidth: state.float("kernel_bandwidth")?,
        lr: state.float("lr")?,
        prior: state.prior("prior")?,
        weighting: if state.int("paper_compat")? != 0 {
            SvgdWeighting::PaperCompat
        } else {
            SvgdWeighting::Canonical
        },
    })
}

/// Creates `n` optimizer-less particles and registers the SVGD update hook
/// on each, with the configuration stored in the hook state map.
pub fn init_svgd(
    pnn: &mut ParticleNn,
    n: usize,
    cfg: &SvgdConfig,
    seeds: &[u64],
) -> Result<Vec<ParticleId>> {
    assert_eq!(seeds.len(), n, "one seed per particle");
    if cfg.bandwidth <= 0.0 || cfg.lr <= 0.0 {
        return Err(RuntimeError::InvalidConfig(
            "bandwidth and lr must be positive".into(),
        ));
    }
    let mut pids = Vec::with_capacity(n);
    for &seed in seeds {
        pids.push(pnn.pinit(None, ParticleInit::Seed(seed), None)?);
    }
    let state = HookState::new()
        .with("kernel_bandwidth", StateValue::Float(cfg.bandwidth))
        .with("lr", StateValue::Float(cfg.lr))
        .with("prior", StateValue::Prior(cfg.prior))
        .with(
            "paper_compat",
            StateValue::Int((cfg.weighting == SvgdWeighting::PaperCompat) as i64),
        );
    for &pid in &pids {
        pnn.phook_register(
            pid,
            SVGD_HOOK,
            Arc::new(|ctx: &ParticleCtx<'_>, state: &mut HookState| {
                let cfg = config_from_state(state)?;
                svgd_update(ctx, &cfg)
            }),
            state.clone(),
        )?;
    }
    Ok(pids)
}

/// One SVGD epoch: per batch, a synchronized gradient-only step round
/// followed by a synchronized update round. Returns the mean batch loss
/// across particles from the gradient round.
pub fn svgd_epoch(pnn: &ParticleNn, pids: &[ParticleId], data: &Batches) -> Result<f64> {
    let mut total = 0.0;
    let mut count = 0usize;
    for (x, y) in data {
        let events: Vec<_> = pids
            .iter()
            .map(|&p| pnn.pstep(p, LossKind::Mse, x, y, StepMode::GradOnly))
            .collect::<Result<_>>()?;
        for payload in pnn.pjoin(events)? {
            total += payload.into_loss()?;
            count += 1;
        }
        let updates: Vec<_> =
            pids.iter().map(|&p| pnn.psend(p, SVGD_HOOK)).collect::<Result<_>>()?;
        pnn.pjoin(updates)?;
    }
    Ok(total / count.max(1) as f64)
}

/// Full SVGD training run.
pub fn train_svgd(
    pnn: &mut ParticleNn,
    n: usize,
    data: &Batches,
    epochs: usize,
    cfg: &SvgdConfig,
    seeds: &[u64],
) -> Result<Vec<ParticleId>> {
    let pids = init_svgd(pnn, n, cfg, seeds)?;
    for _ in 0..epochs {
        svgd_epoch(pnn, &pids, data)?;
    }
    Ok(pids)
}
