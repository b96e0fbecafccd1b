use thiserror::Error;

use crate::ParticleId;

/// Runtime failures. Clone-able so a loop can complete an event with the
/// error instead of dying.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum RuntimeError {
    #[error("unknown particle {0}")]
    UnknownParticle(ParticleId),
    #[error("invalid device {device} (have {num_devices})")]
    InvalidDevice { device: usize, num_devices: usize },
    #[error("hook {name:?} already registered on particle {pid}")]
    DuplicateHook { pid: ParticleId, name: String },
    #[error("no hook {name:?} on particle {pid}")]
    UnknownHook { pid: ParticleId, name: String },
    #[error("particle {0} has no optimizer")]
    NoOptimizer(ParticleId),
    #[error("numeric error: {0}")]
    Numeric(#[from] autodiff_core::Error),
    #[error("event completed with an unexpected payload kind")]
    UnexpectedPayload,
    #[error("hook state error: {0}")]
    HookState(String),
    #[error("device event loop disconnected")]
    Disconnected,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = std::result::Result<T, RuntimeError>;
