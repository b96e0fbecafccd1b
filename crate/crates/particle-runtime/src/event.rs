use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Condvar, Mutex};

use autodiff_core::{ParamSet, Tensor};

use crate::error::{Result, RuntimeError};

static NEXT_EVENT_ID: AtomicU64 = AtomicU64::new(0);

/// Value delivered through an event completion slot.
#[derive(Debug, Clone)]
pub enum Payload {
    Unit,
    Loss(f64),
    Output(Tensor),
    Snapshot(ParamSet),
}

impl Payload {
    pub fn into_loss(self) -> Result<f64> {
        match self {
            Payload::Loss(v) => Ok(v),
            _ => Err(RuntimeError::UnexpectedPayload),
        }
    }

    pub fn into_output(self) -> Result<Tensor> {
        match self {
            Payload::Output(t) => Ok(t),
            _ => Err(RuntimeError::UnexpectedPayload),
        }
    }

    pub fn into_snapshot(self) -> Result<ParamSet> {
        match self {
            Payload::Snapshot(p) => Ok(p),
            _ => Err(RuntimeError::UnexpectedPayload),
        }
    }
}

/// One-shot completion slot shared between the requester and the owning loop.
#[derive(Debug)]
pub(crate) struct EventSlot {
    state: Mutex<Option<Result<Payload>>>,
    cv: Condvar,
}

impl EventSlot {
    pub(crate) fn new() -> Arc<Self> {
        Arc::new(EventSlot { state: Mutex::new(None), cv: Condvar::new() })
    }

    pub(crate) fn complete(&self, result: Result<Payload>) {
        let mut guard = self.state.lock().unwrap();
        debug_assert!(guard.is_none(), "event completed twice");
        *guard = Some(result);
        self.cv.notify_all();
    }

    pub(crate) fn is_complete(&self) -> bool {
        self.state.lock().unwrap().is_some()
    }

    /// Blocks until completed, then takes the result.
    pub(crate) fn wait_take(&self) -> Result<Payload> {
        let mut guard = self.state.lock().unwrap();
        while guard.is_none() {
            guard = self.cv.wait(guard).unwrap();
        }
        guard.take().unwrap()
    }
}

/// Handle to a pending asynchronous operation. Joining consumes the handle,
/// so an event is joinable exactly once.
#[derive(Debug)]
pub struct EventHandle {
    id: u64,
    pub(crate) slot: Arc<EventSlot>,
}

impl EventHandle {
    pub(crate) fn new(slot: Arc<EventSlot>) -> Self {
        EventHandle { id: NEXT_EVENT_ID.fetch_add(1, Ordering::Relaxed), slot }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn is_complete(&self) -> bool {
        self.slot.is_complete()
    }
}
