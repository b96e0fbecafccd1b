use crate::ParticleId;

/// Bounded set of device-resident particles with LRU replacement.
/// `recency` is ordered least- to most-recently used.
#[derive(Debug)]
pub(crate) struct ActiveSet {
    capacity: usize,
    recency: Vec<ParticleId>,
    evictions: Vec<ParticleId>,
}

impl ActiveSet {
    pub(crate) fn new(capacity: usize) -> Self {
        assert!(capacity >= 1);
        ActiveSet { capacity, recency: Vec::new(), evictions: Vec::new() }
    }

    pub(crate) fn contains(&self, pid: ParticleId) -> bool {
        self.recency.contains(&pid)
    }

    /// Marks `pid` most recently used if present.
    pub(crate) fn touch(&mut self, pid: ParticleId) {
        if let Some(pos) = self.recency.iter().position(|&p| p == pid) {
            let p = self.recency.remove(pos);
            self.recency.push(p);
        }
    }

    /// Makes room for and records `pid` as resident, returning the evicted
    /// particle when the set was full. `pid` must not already be resident.
    pub(crate) fn admit(&mut self, pid: ParticleId) -> Option<ParticleId> {
        debug_assert!(!self.contains(pid));
        let evicted = if self.recency.len() == self.capacity {
            let victim = self.recency.remove(0);
            self.evictions.push(victim);
            Some(victim)
        } else {
            None
        };
        self.recency.push(pid);
        evicted
    }

    #[cfg(test)]
    pub(crate) fn evictions(&self) -> &[ParticleId] {
        &self.evictions
    }
}
