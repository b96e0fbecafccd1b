//! Deep ensembles: independently trained particles, synchronized either per
//! batch by the coordinator or trained entirely inside per-particle hooks.

use std::sync::Arc;

use autodiff_core::Sgd;
use particle_runtime::{
    HookState, LossKind, ParticleCtx, ParticleId, ParticleInit, ParticleNn, Result, StepMode,
};

use crate::Batches;

/// Creates `n` seeded particles with plain SGD optimizers.
pub fn init_ensemble(
    pnn: &mut ParticleNn,
    n: usize,
    lr: f64,
    seeds: &[u64],
) -> Result<Vec<ParticleId>> {
    assert_eq!(seeds.len(), n, "one seed per particle");
    let mut pids = Vec::with_capacity(n);
    for &seed in seeds {
        pids.push(pnn.pinit(None, ParticleInit::Seed(seed), Some(Sgd { lr }))?);
    }
    Ok(pids)
}

/// One centralized epoch: per batch, async steps on every particle followed
/// by a join. Returns each particle's loss on the final batch.
pub fn ensemble_epoch(
    pnn: &ParticleNn,
    pids: &[ParticleId],
    data: &Batches,
) -> Result<Vec<f64>> {
    let mut losses = vec![0.0; pids.len()];
    for (x, y) in data {
        let mut events = Vec::with_capacity(pids.len());
        for &pid in pids {
            events.push(pnn.pstep(pid, LossKind::Mse, x, y, StepMode::Optimize)?);
        }
        for (i, payload) in pnn.pjoin(events)?.into_iter().enumerate() {
            losses[i] = payload.into_loss()?;
        }
    }
    Ok(losses)
}

/// Centralized deep ensemble: creates the particles, then trains them with a
/// per-batch synchronization barrier.
pub fn train_ensemble_centralized(
    pnn: &mut ParticleNn,
    n: usize,
    data: &Batches,
    epochs: usize,
    lr: f64,
    seeds: &[u64],
) -> Result<Vec<ParticleId>> {
    let pids = init_ensemble(pnn, n, lr, seeds)?;
    for _ in 0..epochs {
        ensemble_epoch(pnn, &pids, data)?;
    }
    Ok(pids)
}

/// Hook body for the hook-driven ensemble: the whole training loop runs on
/// the particle's own event loop.
pub fn ensemble_main(ctx: &ParticleCtx<'_>, data: &Batches, epochs: usize) -> Result<()> {
    for _ in 0..epochs {
        for (x, y) in data {
            ctx.step(LossKind::Mse, x, y, StepMode::Optimize)?;
        }
    }
    Ok(())
}

/// Hook-driven deep ensemble: each particle trains independently inside an
/// `ENSEMBLE_MAIN` hook; the only synchronization is the final join.
/// `make_batches` yields an identically-ordered loader per particle.
pub fn train_ensemble_distributed(
    pnn: &mut ParticleNn,
    n: usize,
    make_batches: impl Fn() -> Batches,
    epochs: usize,
    lr: f64,
    seeds: &[u64],
) -> Result<Vec<ParticleId>> {
    let pids = init_ensemble(pnn, n, lr, seeds)?;
    for &pid in &pids {
        let data = make_batches();
        pnn.phook_register(
            pid,
            "ENSEMBLE_MAIN",
            Arc::new(move |ctx: &ParticleCtx<'_>, _state: &mut HookState| {
                ensemble_main(ctx, &data, epochs)
            }),
            HookState::new(),
        )?;
    }
    let events: Vec<_> = pids
        .iter()
        .map(|&pid| pnn.psend(pid, "ENSEMBLE_MAIN"))
        .collect::<Result<_>>()?;
    pnn.pjoin(events)?;
    Ok(pids)
}
