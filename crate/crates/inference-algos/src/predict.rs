//! Particle pushforward of a forward pass: per-particle outputs plus an
//! elementwise mean and population standard deviation.

use std::collections::BTreeMap;

use autodiff_core::Tensor;
use particle_runtime::{ParticleId, ParticleNn, Result, RuntimeError};

#[derive(Debug, Clone)]
pub struct PredictiveSummary {
    pub outputs: BTreeMap<ParticleId, Tensor>,
    pub mean: Tensor,
    pub std: Tensor,
}

/// Runs an async forward on every pid, joins, and summarizes. Accumulation
/// iterates pids in ascending order so the result is independent of the
/// argument order.
pub fn ppush_predict(
    pnn: &ParticleNn,
    pids: &[ParticleId],
    x: &Tensor,
) -> Result<PredictiveSummary> {
    if pids.is_empty() {
        return Err(RuntimeError::InvalidConfig("ppush_predict needs at least one pid".into()));
    }
    let events: Vec<_> = pids.iter().map(|&p| pnn.pforward(p, x)).collect::<Result<_>>()?;
    let mut outputs = BTreeMap::new();
    for (&pid, payload) in pids.iter().zip(pnn.pjoin(events)?) {
        outputs.insert(pid, payload.into_output()?);
    }

    let n = outputs.len() as f64;
    let shape = outputs.values().next().unwrap().shape().to_vec();
    let numel = outputs.values().next().unwrap().numel();

    let mut mean = vec![0.0; numel];
    for out in outputs.values() {
        for (m, v) in mean.iter_mut().zip(out.data()) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut var = vec![0.0; numel];
    for out in outputs.values() {
        for (s, (v, m)) in var.iter_mut().zip(out.data().iter().zip(mean.iter())) {
            let d = v - m;
            *s += d * d;
        }
    }
    let std: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();

    Ok(PredictiveSummary {
        outputs,
        mean: Tensor::new(shape.clone(), mean).map_err(RuntimeError::Numeric)?,
        std: Tensor::new(shape, std).map_err(RuntimeError::Numeric)?,
    })
}
