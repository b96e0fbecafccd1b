use std::collections::HashMap;
use std::sync::Arc;

use autodiff_core::{ParamSet, PriorSpec};

use crate::device::ParticleCtx;
use crate::error::{Result, RuntimeError};

/// Values storable in a hook's private state map.
#[derive(Debug, Clone)]
pub enum StateValue {
    Int(i64),
    Float(f64),
    Bool(bool),
    Params(ParamSet),
    Prior(PriorSpec),
}

/// Per-hook mutable state, persisted across invocations on the owning loop.
#[derive(Debug, Clone, Default)]
pub struct HookState {
    map: HashMap<String, StateValue>,
}

impl HookState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, key: &str, value: StateValue) -> Self {
        self.map.insert(key.to_string(), value);
        self
    }

    pub fn set(&mut self, key: &str, value: StateValue) {
        self.map.insert(key.to_string(), value);
    }

    pub fn get(&self, key: &str) -> Option<&StateValue> {
        self.map.get(key)
    }

    pub fn int(&self, key: &str) -> Result<i64> {
        match self.map.get(key) {
            Some(StateValue::Int(v)) => Ok(*v),
            _ => Err(RuntimeError::HookState(format!("missing int {key:?}"))),
        }
    }

    pub fn float(&self, key: &str) -> Result<f64> {
        match self.map.get(key) {
            Some(StateValue::Float(v)) => Ok(*v),
            _ => Err(RuntimeError::HookState(format!("missing float {key:?}"))),
        }
    }

    pub fn prior(&self, key: &str) -> Result<PriorSpec> {
        match self.map.get(key) {
            Some(StateValue::Prior(p)) => Ok(*p),
            _ => Err(RuntimeError::HookState(format!("missing prior {key:?}"))),
        }
    }
}

/// Hook body: runs on the owning device event loop with a particle context
/// and the hook's private state.
pub type HookProc = Arc<dyn Fn(&ParticleCtx<'_>, &mut HookState) -> Result<()> + Send + Sync>;
