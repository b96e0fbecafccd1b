use std::sync::Arc;

use autodiff_core::{ParamSet, Sgd, Tensor};

use crate::event::EventSlot;
use crate::hook::{HookProc, HookState};
use crate::ParticleId;

/// Loss selection for a step message.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
}

/// Whether a step applies the optimizer update or stops after backward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// forward, zero grads, loss, backward, optimizer update
    Optimize,
    /// forward, zero grads, loss, backward only
    GradOnly,
}

/// Initial parameter source for a new particle.
#[derive(Debug, Clone)]
pub enum ParticleInit {
    /// Seeded per-layer uniform init in +-1/sqrt(d_in).
    Seed(u64),
    /// Explicit parameter values (must match the handle's architecture).
    Params(ParamSet),
}

/// Which view of a particle a Get returns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum GetView {
    /// Snapshot published at the particle's last step (used by in-hook
    /// gathers, so results do not depend on hook scheduling).
    Published,
    /// Live parameters; the coordinator synchronizes before asking.
    Live,
}

/// Wire messages processed by a device event loop. Every variant except
/// `Shutdown` carries the completion slot of exactly one pending event.
pub(crate) enum Message {
    Create {
        pid: ParticleId,
        init: ParticleInit,
        optimizer: Option<Sgd>,
        slot: Arc<EventSlot>,
    },
    Register {
        pid: ParticleId,
        device: usize,
        slot: Arc<EventSlot>,
    },
    Step {
        pid: ParticleId,
        loss: LossKind,
        data: Tensor,
        label: Tensor,
        mode: StepMode,
        slot: Arc<EventSlot>,
    },
    Forward {
        pid: ParticleId,
        data: Tensor,
        slot: Arc<EventSlot>,
    },
    Get {
        pid: ParticleId,
        view: GetView,
        slot: Arc<EventSlot>,
    },
    RegisterHook {
        pid: ParticleId,
        name: String,
        proc: HookProc,
        state: HookState,
        slot: Arc<EventSlot>,
    },
    Hook {
        pid: ParticleId,
        name: String,
        slot: Arc<EventSlot>,
    },
    Shutdown,
}
