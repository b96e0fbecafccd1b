use std::thread::JoinHandle;

use autodiff_core::{MlpArch, ParamSet, Sgd, Tensor};
use crossbeam_channel::{unbounded, Sender};

use crate::device::LoopCore;
use crate::error::{Result, RuntimeError};
use crate::event::{EventHandle, EventSlot, Payload};
use crate::hook::{HookProc, HookState};
use crate::message::{GetView, LossKind, Message, ParticleInit, StepMode};
use crate::ParticleId;

/// Coordinator handle over a set of device event loops. Creates particles,
/// issues asynchronous step/forward/get/hook operations, and synchronizes
/// via `pjoin`.
pub struct ParticleNn {
    arch: MlpArch,
    senders: Vec<Sender<Message>>,
    workers: Vec<JoinHandle<()>>,
    registry: Vec<(ParticleId, usize)>,
    next_pid: u64,
}

impl ParticleNn {
    /// Spawns `num_devices` event loops, each with an active set of
    /// `active_capacity` particles.
    pub fn new(arch: MlpArch, num_devices: usize, active_capacity: usize) -> Result<Self> {
        if num_devices == 0 {
            return Err(RuntimeError::InvalidConfig("need at least one device".into()));
        }
        if active_capacity == 0 {
            return Err(RuntimeError::InvalidConfig("active capacity must be >= 1".into()));
        }
        let mut senders = Vec::with_capacity(num_devices);
        let mut receivers = Vec::with_capacity(num_devices);
        for _ in 0..num_devices {
            let (tx, rx) = unbounded();
            senders.push(tx);
            receivers.push(rx);
        }
        let mut workers = Vec::with_capacity(num_devices);
        for (device_id, rx) in receivers.into_iter().enumerate() {
            let core =
                LoopCore::new(device_id, arch.clone(), senders.clone(), rx, active_capacity);
            workers.push(
                std::thread::Builder::new()
                    .name(format!("device-loop-{device_id}"))
                    .spawn(move || core.run())
                    .expect("spawn device loop"),
            );
        }
        Ok(ParticleNn { arch, senders, workers, registry: Vec::new(), next_pid: 0 })
    }

    pub fn arch(&self) -> &MlpArch {
        &self.arch
    }

    pub fn num_devices(&self) -> usize {
        self.senders.len()
    }

    pub fn num_particles(&self) -> usize {
        self.registry.len()
    }

    /// All particle ids, ascending (creation order).
    pub fn particles(&self) -> Vec<ParticleId> {
        self.registry.iter().map(|&(pid, _)| pid).collect()
    }

    pub fn device_of(&self, pid: ParticleId) -> Result<usize> {
        self.registry
            .iter()
            .find(|&&(p, _)| p == pid)
            .map(|&(_, d)| d)
            .ok_or(RuntimeError::UnknownParticle(pid))
    }

    fn sender_for(&self, pid: ParticleId) -> Result<&Sender<Message>> {
        Ok(&self.senders[self.device_of(pid)?])
    }

    fn send(&self, device: usize, msg: Message) -> Result<()> {
        self.senders[device].send(msg).map_err(|_| RuntimeError::Disconnected)
    }

    /// Creates a particle. Placement defaults to round-robin by pid; the pid
    /// is broadcast to every loop before this returns.
    pub fn pinit(
        &mut self,
        device: Option<usize>,
        init: ParticleInit,
        optimizer: Option<Sgd>,
    ) -> Result<ParticleId> {
        let num_devices = self.num_devices();
        let device = match device {
            Some(d) if d >= num_devices => {
                return Err(RuntimeError::InvalidDevice { device: d, num_devices })
            }
            Some(d) => d,
            None => (self.next_pid as usize) % num_devices,
        };
        let pid = ParticleId(self.next_pid);
        self.next_pid += 1;

        let mut events = Vec::new();
        for d in 0..num_devices {
            let slot = EventSlot::new();
            self.send(d, Message::Register { pid, device, slot: slot.clone() })?;
            events.push(EventHandle::new(slot));
        }
        let slot = EventSlot::new();
        self.send(device, Message::Create { pid, init, optimizer, slot: slot.clone() })?;
        events.push(EventHandle::new(slot));
        self.pjoin(events)?;
        self.registry.push((pid, device));
        Ok(pid)
    }

    /// Asynchronous optimization (or gradient-only) step; the event resolves
    /// to the batch loss.
    pub fn pstep(
        &self,
        pid: ParticleId,
        loss: LossKind,
        data: &Tensor,
        label: &Tensor,
        mode: StepMode,
    ) -> Result<EventHandle> {
        let slot = EventSlot::new();
        self.sender_for(pid)?
            .send(Message::Step {
                pid,
                loss,
                data: data.clone(),
                label: label.clone(),
                mode,
                slot: slot.clone(),
            })
            .map_err(|_| RuntimeError::Disconnected)?;
        Ok(EventHandle::new(slot))
    }

    /// Synchronous step: issues the async step and blocks for the loss.
    pub fn pstep_sync(
        &self,
        pid: ParticleId,
        loss: LossKind,
        data: &Tensor,
        label: &Tensor,
        mode: StepMode,
    ) -> Result<f64> {
        let evt = self.pstep(pid, loss, data, label, mode)?;
        self.pjoin(vec![evt])?.remove(0).into_loss()
    }

    /// Asynchronous forward pass; the event resolves to the output tensor.
    pub fn pforward(&self, pid: ParticleId, data: &Tensor) -> Result<EventHandle> {
        let slot = EventSlot::new();
        self.sender_for(pid)?
            .send(Message::Forward { pid, data: data.clone(), slot: slot.clone() })
            .map_err(|_| RuntimeError::Disconnected)?;
        Ok(EventHandle::new(slot))
    }

    pub fn pforward_sync(&self, pid: ParticleId, data: &Tensor) -> Result<Tensor> {
        let evt = self.pforward(pid, data)?;
        self.pjoin(vec![evt])?.remove(0).into_output()
    }

    /// Snapshot of a particle's live parameters (including gradients).
    /// Callers synchronize outstanding work first via `pjoin`.
    pub fn pget(&self, pid: ParticleId) -> Result<EventHandle> {
        let slot = EventSlot::new();
        self.sender_for(pid)?
            .send(Message::Get { pid, view: GetView::Live, slot: slot.clone() })
            .map_err(|_| RuntimeError::Disconnected)?;
        Ok(EventHandle::new(slot))
    }

    pub fn pget_sync(&self, pid: ParticleId) -> Result<ParamSet> {
        let evt = self.pget(pid)?;
        self.pjoin(vec![evt])?.remove(0).into_snapshot()
    }

    /// Registers a named hook with its private state on `pid`'s loop.
    pub fn phook_register(
        &self,
        pid: ParticleId,
        name: &str,
        proc: HookProc,
        state: HookState,
    ) -> Result<()> {
        let slot = EventSlot::new();
        self.sender_for(pid)?
            .send(Message::RegisterHook {
                pid,
                name: name.to_string(),
                proc,
                state,
                slot: slot.clone(),
            })
            .map_err(|_| RuntimeError::Disconnected)?;
        self.pjoin(vec![EventHandle::new(slot)])?;
        Ok(())
    }

    /// Triggers a registered hook; the event resolves when the hook returns.
    pub fn psend(&self, pid: ParticleId, name: &str) -> Result<EventHandle> {
        let slot = EventSlot::new();
        self.sender_for(pid)?
            .send(Message::Hook { pid, name: name.to_string(), slot: slot.clone() })
            .map_err(|_| RuntimeError::Disconnected)?;
        Ok(EventHandle::new(slot))
    }

    pub fn psend_sync(&self, pid: ParticleId, name: &str) -> Result<()> {
        let evt = self.psend(pid, name)?;
        self.pjoin(vec![evt])?;
        Ok(())
    }

    /// Blocks until all events complete; payloads are returned in argument
    /// order. An event that completed with an error re-raises here.
    pub fn pjoin(&self, events: Vec<EventHandle>) -> Result<Vec<Payload>> {
        events.into_iter().map(|e| e.slot.wait_take()).collect()
    }

    /// Stops all device event loops and joins their threads.
    pub fn shutdown(mut self) {
        self.shutdown_inner();
    }

    fn shutdown_inner(&mut self) {
        for tx in &self.senders {
            let _ = tx.send(Message::Shutdown);
        }
        for worker in self.workers.drain(..) {
            let _ = worker.join();
        }
    }
}

impl Drop for ParticleNn {
    fn drop(&mut self) {
        self.shutdown_inner();
    }
}
