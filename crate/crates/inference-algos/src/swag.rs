//! Diagonal SWAG: a parameter particle plus two moment particles that track
//! streaming first and second raw moments of the parameter snapshots.

use std::sync::Arc;

use autodiff_core::{ParamSet, Sgd, Tensor};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use particle_runtime::{
    HookState, LossKind, ParticleCtx, ParticleId, ParticleInit, ParticleNn, Result, StateValue,
    StepMode,
};

use crate::Batches;

pub const MOM1_HOOK: &str = "SWAG_1st_MOMENT";
pub const MOM2_HOOK: &str = "SWAG_2nd_MOMENT";

/// Streaming Gaussian posterior approximation: first moment, second raw
/// moment, and the snapshot count.
#[derive(Debug, Clone)]
pub struct SwagPosterior {
    pub mean: ParamSet,
    pub mom2: ParamSet,
    pub n: u64,
}

impl SwagPosterior {
    /// Elementwise variance max(mom2 - mean^2, 0) over the flat vector.
    pub fn variance(&self) -> Vec<f64> {
        self.mean
            .flatten()
            .iter()
            .zip(self.mom2.flatten().iter())
            .map(|(m, m2)| (m2 - m * m).max(0.0))
            .collect()
    }
}

/// Draws theta = mean + sqrt(variance) .* z with z standard normal.
pub fn swag_sample(posterior: &SwagPosterior, seed: u64) -> ParamSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = posterior.mean.flatten();
    let std: Vec<f64> = posterior.variance().iter().map(|v| v.sqrt()).collect();
    let sample: Vec<f64> = mean
        .iter()
        .zip(std.iter())
        .map(|(m, s)| {
            let z: f64 = standard_normal(&mut rng);
            m + s * z
        })
        .collect();
    posterior.mean.unflatten(&sample).unwrap()
}

fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; one draw per call keeps sampling order seed-stable
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn moment_hook(param_pid: ParticleId, second: bool) -> particle_runtime::HookProc {
    Arc::new(move |ctx: &ParticleCtx<'_>, state: &mut HookState| {
        let evt = ctx.get(param_pid)?;
        let theta = ctx.join(vec![evt])?.remove(0).into_snapshot()?;
        let flat = theta.flatten();
        let n = state.int("n")? as f64;
        ctx.with_params_mut(|mine| {
            let mut idx = 0;
            for (_, t) in mine.tensors_mut() {
                for v in t.data_mut() {
                    let obs = if second { flat[idx] * flat[idx] } else { flat[idx] };
                    *v = (*v * n + obs) / (n + 1.0);
                    idx += 1;
                }
            }
        });
        state.set("n", StateValue::Int(n as i64 + 1));
        Ok(())
    })
}

/// Creates the two moment particles initialized to `init` (the parameter
/// particle's post-pretraining snapshot) and registers their streaming
/// update hooks with n starting at 1.
pub fn register_moment_hooks(
    pnn: &mut ParticleNn,
    param_pid: ParticleId,
    init: &ParamSet,
) -> Result<(ParticleId, ParticleId)> {
    let mut stripped = init.clone();
    for (_, t) in stripped.tensors_mut() {
        t.clear_grad();
    }
    let mom1 = pnn.pinit(None, ParticleInit::Params(stripped.clone()), None)?;
    pnn.phook_register(
        mom1,
        MOM1_HOOK,
        moment_hook(param_pid, false),
        HookState::new().with("n", StateValue::Int(1)),
    )?;
    let mut squared = stripped.clone();
    for (_, t) in squared.tensors_mut() {
        for v in t.data_mut() {
            *v *= *v;
        }
    }
    let mom2 = pnn.pinit(None, ParticleInit::Params(squared), None)?;
    pnn.phook_register(
        mom2,
        MOM2_HOOK,
        moment_hook(param_pid, true),
        HookState::new().with("n", StateValue::Int(1)),
    )?;
    Ok((mom1, mom2))
}

/// One SWAG batch: synchronous step on the parameter particle, then both
/// moment updates asynchronously, joined before returning.
pub fn swag_batch(
    pnn: &ParticleNn,
    param_pid: ParticleId,
    mom1: ParticleId,
    mom2: ParticleId,
    x: &Tensor,
    y: &Tensor,
) -> Result<f64> {
    let loss = pnn.pstep_sync(param_pid, LossKind::Mse, x, y, StepMode::Optimize)?;
    let e1 = pnn.psend(mom1, MOM1_HOOK)?;
    let e2 = pnn.psend(mom2, MOM2_HOOK)?;
    pnn.pjoin(vec![e1, e2])?;
    Ok(loss)
}

/// SGD pretraining followed by SWAG moment tracking, one update per batch.
pub fn train_swag(
    pnn: &mut ParticleNn,
    pretrain_epochs: usize,
    swag_epochs: usize,
    data: &Batches,
    lr: f64,
    seed: u64,
) -> Result<SwagPosterior> {
    let param_pid = pnn.pinit(None, ParticleInit::Seed(seed), Some(Sgd { lr }))?;
    for _ in 0..pretrain_epochs {
        for (x, y) in data {
            pnn.pstep_sync(param_pid, LossKind::Mse, x, y, StepMode::Optimize)?;
        }
    }
    let snapshot = pnn.pget_sync(param_pid)?;
    let (mom1, mom2) = register_moment_hooks(pnn, param_pid, &snapshot)?;
    let mut n = 1u64;
    for _ in 0..swag_epochs {
        for (x, y) in data {
            swag_batch(pnn, param_pid, mom1, mom2, x, y)?;
            n += 1;
        }
    }
    Ok(SwagPosterior { mean: pnn.pget_sync(mom1)?, mom2: pnn.pget_sync(mom2)?, n })
}
