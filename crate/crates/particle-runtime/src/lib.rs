//! Particle runtime: a particle neural network handle spawning one device
//! event loop per simulated device, with asynchronous step/forward/get/hook
//! primitives, join-based synchronization, and LRU active-set context
//! switching.

use std::fmt;

mod active_set;
mod device;
mod error;
mod event;
mod handle;
mod hook;
mod message;

pub use device::ParticleCtx;
pub use error::{Result, RuntimeError};
pub use event::{EventHandle, Payload};
pub use handle::ParticleNn;
pub use hook::{HookProc, HookState, StateValue};
pub use message::{LossKind, ParticleInit, StepMode};

/// Particle identifier, unique per particle neural network and assigned in
/// creation order starting at 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParticleId(pub u64);

impl fmt::Display for ParticleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}
