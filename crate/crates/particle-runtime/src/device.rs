//! Device event loop: one worker thread per simulated device, processing
//! messages for the particles it owns. Hooks execute here; while a hook is
//! blocked in `join`, the loop keeps servicing inbound `Get` requests (and
//! only those) so all-to-all gathers cannot deadlock.

use std::cell::RefCell;
use std::collections::{BTreeMap, HashMap, VecDeque};
use std::sync::Arc;
use std::time::Duration;

use autodiff_core::{forward, mse_loss_tape, sgd_step, MlpArch, ParamSet, Sgd, Tensor};
use crossbeam_channel::{Receiver, RecvTimeoutError, Sender};

use crate::active_set::ActiveSet;
use crate::error::{Result, RuntimeError};
use crate::event::{EventHandle, EventSlot, Payload};
use crate::hook::{HookProc, HookState};
use crate::message::{GetView, LossKind, Message, ParticleInit, StepMode};
use crate::ParticleId;

/// Per-particle storage. Parameters live either in the device arena
/// (`device_params`) or the host store (`host_params`); a context switch
/// copies between the two. `published` is the snapshot peers see through
/// in-hook gets, refreshed at the end of every step.
struct ParticleSlot {
    optimizer: Option<Sgd>,
    device_params: Option<ParamSet>,
    host_params: Option<ParamSet>,
    published: ParamSet,
}

impl ParticleSlot {
    fn new(params: ParamSet, optimizer: Option<Sgd>) -> Self {
        let published = params.clone();
        ParticleSlot { optimizer, device_params: None, host_params: Some(params), published }
    }

    fn params(&self) -> &ParamSet {
        self.device_params.as_ref().or(self.host_params.as_ref()).unwrap()
    }

    fn params_mut(&mut self) -> &mut ParamSet {
        self.device_params.as_mut().or(self.host_params.as_mut()).unwrap()
    }

    /// Host store -> device arena copy.
    fn load(&mut self) {
        if self.device_params.is_none() {
            let host = self.host_params.take().unwrap();
            self.device_params = Some(host.clone());
        }
    }

    /// Device arena -> host store copy.
    fn evict(&mut self) {
        if let Some(dev) = self.device_params.take() {
            self.host_params = Some(dev.clone());
        }
    }

    fn publish(&mut self) {
        self.published = self.params().clone();
    }
}

struct HookEntry {
    proc: HookProc,
    state: RefCell<HookState>,
}

pub(crate) struct LoopCore {
    device_id: usize,
    arch: MlpArch,
    senders: Vec<Sender<Message>>,
    rx: Receiver<Message>,
    registry: HashMap<ParticleId, usize>,
    particles: HashMap<ParticleId, RefCell<ParticleSlot>>,
    hooks: HashMap<(ParticleId, String), HookEntry>,
    active: RefCell<ActiveSet>,
    deferred: RefCell<VecDeque<Message>>,
}

impl LoopCore {
    pub(crate) fn new(
        device_id: usize,
        arch: MlpArch,
        senders: Vec<Sender<Message>>,
        rx: Receiver<Message>,
        active_capacity: usize,
    ) -> Self {
        LoopCore {
            device_id,
            arch,
            senders,
            rx,
            registry: HashMap::new(),
            particles: HashMap::new(),
            hooks: HashMap::new(),
            active: RefCell::new(ActiveSet::new(active_capacity)),
            deferred: RefCell::new(VecDeque::new()),
        }
    }

    /// Worker entry point: drains deferred messages first, then the queue.
    pub(crate) fn run(mut self) {
        loop {
            let msg = {
                let front = self.deferred.borrow_mut().pop_front();
                match front {
                    Some(m) => m,
                    None => match self.rx.recv() {
                        Ok(m) => m,
                        Err(_) => break,
                    },
                }
            };
            if !self.dispatch(msg) {
                break;
            }
        }
    }

    fn dispatch(&mut self, msg: Message) -> bool {
        match msg {
            Message::Create { pid, init, optimizer, slot } => {
                let params = match init {
                    ParticleInit::Seed(seed) => ParamSet::init(&self.arch, seed),
                    ParticleInit::Params(p) => p,
                };
                let result = if !params.matches(&self.arch) {
                    Err(RuntimeError::Numeric(autodiff_core::Error::InvalidArch(
                        "initial params do not match arch".into(),
                    )))
                } else {
                    self.particles.insert(pid, RefCell::new(ParticleSlot::new(params, optimizer)));
                    Ok(Payload::Unit)
                };
                slot.complete(result);
            }
            Message::Register { pid, device, slot } => {
                self.registry.insert(pid, device);
                slot.complete(Ok(Payload::Unit));
            }
            Message::Step { pid, loss, data, label, mode, slot } => {
                let result = self.do_step(pid, loss, &data, &label, mode).map(Payload::Loss);
                slot.complete(result);
            }
            Message::Forward { pid, data, slot } => {
                let result = self.do_forward(pid, &data).map(Payload::Output);
                slot.complete(result);
            }
            Message::Get { pid, view, slot } => self.serve_get(pid, view, &slot),
            Message::RegisterHook { pid, name, proc, state, slot } => {
                let result = if !self.particles.contains_key(&pid) {
                    Err(RuntimeError::UnknownParticle(pid))
                } else if self.hooks.contains_key(&(pid, name.clone())) {
                    Err(RuntimeError::DuplicateHook { pid, name: name.clone() })
                } else {
                    self.hooks
                        .insert((pid, name), HookEntry { proc, state: RefCell::new(state) });
                    Ok(Payload::Unit)
                };
                slot.complete(result);
            }
            Message::Hook { pid, name, slot } => {
                let result = self.run_hook(pid, &name);
                slot.complete(result.map(|()| Payload::Unit));
            }
            Message::Shutdown => return false,
        }
        true
    }

    /// Ensures `pid` is device-resident, evicting the LRU particle if the
    /// active set is full. Touches recency.
    fn activate(&self, pid: ParticleId) -> Result<()> {
        if !self.particles.contains_key(&pid) {
            return Err(RuntimeError::UnknownParticle(pid));
        }
        let mut active = self.active.borrow_mut();
        if active.contains(pid) {
            active.touch(pid);
            return Ok(());
        }
        if let Some(victim) = active.admit(pid) {
            self.particles[&victim].borrow_mut().evict();
        }
        self.particles[&pid].borrow_mut().load();
        Ok(())
    }

    fn touch_recency(&self, pid: ParticleId) {
        let mut active = self.active.borrow_mut();
        if active.contains(pid) {
            active.touch(pid);
        }
    }

    fn do_step(
        &self,
        pid: ParticleId,
        _loss: LossKind,
        data: &Tensor,
        label: &Tensor,
        mode: StepMode,
    ) -> Result<f64> {
        self.activate(pid)?;
        let cell = &self.particles[&pid];
        let mut p = cell.borrow_mut();
        let optimizer = p.optimizer;
        let params = p.params_mut();
        let (_, tape) = forward(&self.arch, params, data)?;
        params.zero_grads();
        let lt = mse_loss_tape(tape, label)?;
        let loss = lt.loss();
        lt.backward(&self.arch, params)?;
        if mode == StepMode::Optimize {
            let sgd = optimizer.ok_or(RuntimeError::NoOptimizer(pid))?;
            sgd_step(params, sgd.lr)?;
        }
        p.publish();
        Ok(loss)
    }

    fn do_forward(&self, pid: ParticleId, data: &Tensor) -> Result<Tensor> {
        self.activate(pid)?;
        let p = self.particles[&pid].borrow();
        let (out, _) = forward(&self.arch, p.params(), data)?;
        Ok(out)
    }

    /// Serves a snapshot request. Reads from wherever the particle resides;
    /// no context switch is needed for a copy-out.
    fn serve_get(&self, pid: ParticleId, view: GetView, slot: &Arc<EventSlot>) {
        let result = match self.particles.get(&pid) {
            None => Err(RuntimeError::UnknownParticle(pid)),
            Some(cell) => {
                self.touch_recency(pid);
                let p = cell.borrow();
                let snap = match view {
                    GetView::Published => p.published.clone(),
                    GetView::Live => p.params().clone(),
                };
                Ok(Payload::Snapshot(snap))
            }
        };
        slot.complete(result);
    }

    fn run_hook(&self, pid: ParticleId, name: &str) -> Result<()> {
        if !self.particles.contains_key(&pid) {
            return Err(RuntimeError::UnknownParticle(pid));
        }
        let entry = self
            .hooks
            .get(&(pid, name.to_string()))
            .ok_or_else(|| RuntimeError::UnknownHook { pid, name: name.to_string() })?;
        self.touch_recency(pid);
        let proc = Arc::clone(&entry.proc);
        let mut state = entry.state.borrow_mut();
        let ctx = ParticleCtx { core: self, pid };
        proc(&ctx, &mut state)
    }
}

/// View of the runtime handed to hook bodies. All methods take `&self`;
/// the hook runs on the owning loop's worker thread.
pub struct ParticleCtx<'a> {
    core: &'a LoopCore,
    pid: ParticleId,
}

impl ParticleCtx<'_> {
    pub fn pid(&self) -> ParticleId {
        self.pid
    }

    pub fn device(&self) -> usize {
        self.core.device_id
    }

    pub fn arch(&self) -> &MlpArch {
        &self.core.arch
    }

    /// All particle ids in the network, ascending.
    pub fn particles(&self) -> Vec<ParticleId> {
        let mut pids: Vec<ParticleId> = self.core.registry.keys().copied().collect();
        pids.sort();
        pids
    }

    /// Asynchronously fetches a snapshot (parameters + gradients) of
    /// `target` as of its last completed step. Local targets are served
    /// without crossing a queue.
    pub fn get(&self, target: ParticleId) -> Result<EventHandle> {
        let slot = EventSlot::new();
        match self.core.registry.get(&target) {
            None => return Err(RuntimeError::UnknownParticle(target)),
            Some(&dev) if dev == self.core.device_id => {
                self.core.serve_get(target, GetView::Published, &slot);
            }
            Some(&dev) => {
                self.core.senders[dev]
                    .send(Message::Get { pid: target, view: GetView::Published, slot: slot.clone() })
                    .map_err(|_| RuntimeError::Disconnected)?;
            }
        }
        Ok(EventHandle::new(slot))
    }

    /// Blocks until every event completes, servicing inbound `Get` requests
    /// meanwhile (other messages are deferred, never reentered).
    pub fn join(&self, events: Vec<EventHandle>) -> Result<Vec<Payload>> {
        loop {
            if events.iter().all(|e| e.slot.is_complete()) {
                return events.into_iter().map(|e| e.slot.wait_take()).collect();
            }
            match self.core.rx.recv_timeout(Duration::from_micros(100)) {
                Ok(Message::Get { pid, view, slot }) => self.core.serve_get(pid, view, &slot),
                Ok(other) => self.core.deferred.borrow_mut().push_back(other),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => {
                    // senders gone; pending slots can still be completed by
                    // other live loops, so keep spinning on completion only
                    if events.iter().all(|e| e.slot.is_complete()) {
                        return events.into_iter().map(|e| e.slot.wait_take()).collect();
                    }
                    return Err(RuntimeError::Disconnected);
                }
            }
        }
    }

    /// Gathers snapshots for `targets`, keyed by pid.
    pub fn gather(&self, targets: &[ParticleId]) -> Result<BTreeMap<ParticleId, ParamSet>> {
        let mut events = Vec::with_capacity(targets.len());
        for &t in targets {
            events.push(self.get(t)?);
        }
        let payloads = self.join(events)?;
        let mut out = BTreeMap::new();
        for (&t, payload) in targets.iter().zip(payloads) {
            out.insert(t, payload.into_snapshot()?);
        }
        Ok(out)
    }

    /// Full optimization step (or gradient-only) on this hook's own particle.
    pub fn step(&self, loss: LossKind, data: &Tensor, label: &Tensor, mode: StepMode) -> Result<f64> {
        self.core.do_step(self.pid, loss, data, label, mode)
    }

    /// Clone of own parameters, including gradient buffers.
    pub fn params(&self) -> ParamSet {
        self.core.particles[&self.pid].borrow().params().clone()
    }

    /// Scoped mutable access to own parameters.
    pub fn with_params_mut<R>(&self, f: impl FnOnce(&mut ParamSet) -> R) -> R {
        let mut p = self.core.particles[&self.pid].borrow_mut();
        f(p.params_mut())
    }
}
