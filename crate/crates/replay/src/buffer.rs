use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};

use rand::Rng;

use crate::sum_tree::SumTree;
use crate::{ReplayConfig, ReplayError};

/// Episode priority from per-step absolute TD errors:
/// `eta · max + (1 - eta) · mean`, zero for an empty list.
pub fn episode_priority(td_errors: &[f64], eta: f64) -> f64 {
    if td_errors.is_empty() {
        return 0.0;
    }
    let max = td_errors.iter().fold(0.0f64, |m, &d| m.max(d.abs()));
    let mean = td_errors.iter().map(|d| d.abs()).sum::<f64>() / td_errors.len() as f64;
    eta * max + (1.0 - eta) * mean
}

/// A sampled batch. `ids` identify the episodes for priority updates.
#[derive(Debug, Clone)]
pub struct Sample<E> {
    pub ids: Vec<u64>,
    pub episodes: Vec<Arc<E>>,
    /// Importance weights normalized so the largest in the batch is 1.
    pub weights: Vec<f64>,
    pub probabilities: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayMetrics {
    pub size: usize,
    pub added: u64,
    pub sampled: u64,
}

#[derive(Debug)]
struct Inner<E> {
    slots: Vec<Option<(u64, Arc<E>)>>,
    tree: SumTree,
    next_id: u64,
    len: usize,
}

/// Prioritized replay over whole episodes with FIFO eviction.
///
/// Producers add fully built episodes; an episode becomes visible to the sampler in
/// one step under a short critical section, so a sample never observes a partial
/// episode. Ids grow monotonically and slot `id % capacity` is reused, so an id
/// whose episode has been evicted is recognized as stale.
#[derive(Debug)]
pub struct PrioritizedReplay<E> {
    cfg: ReplayConfig,
    inner: Mutex<Inner<E>>,
    added: AtomicU64,
    sampled: AtomicU64,
}

impl<E> PrioritizedReplay<E> {
    pub fn new(cfg: ReplayConfig) -> Result<Self, ReplayError> {
        cfg.validate()?;
        Ok(Self {
            inner: Mutex::new(Inner {
                slots: (0..cfg.capacity).map(|_| None).collect(),
                tree: SumTree::new(cfg.capacity),
                next_id: 0,
                len: 0,
            }),
            cfg,
            added: AtomicU64::new(0),
            sampled: AtomicU64::new(0),
        })
    }

    pub fn config(&self) -> &ReplayConfig {
        &self.cfg
    }

    fn lock(&self) -> MutexGuard<'_, Inner<E>> {
        self.inner.lock().unwrap_or_else(|e| e.into_inner())
    }

    pub fn len(&self) -> usize {
        self.lock().len
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_warm(&self) -> bool {
        self.len() >= self.cfg.warmup
    }

    pub fn metrics(&self) -> ReplayMetrics {
        ReplayMetrics {
            size: self.len(),
            added: self.added.load(Ordering::Relaxed),
            sampled: self.sampled.load(Ordering::Relaxed),
        }
    }

    /// Total of the stored (exponentiated) priorities.
    pub fn total_priority(&self) -> f64 {
        self.lock().tree.total()
    }

    /// Direct sum over leaves, for consistency checks against the tree root.
    pub fn leaf_priority_sum(&self) -> f64 {
        self.lock().tree.leaf_sum()
    }

    /// `priority^alpha`; with alpha = 0 every episode, zero-priority ones included,
    /// gets the same mass.
    fn scaled(&self, priority: f64) -> f64 {
        priority.powf(self.cfg.priority_exponent)
    }

    /// Store an episode with a raw priority (before the exponent); evicts the
    /// oldest episode at capacity. Returns the new id.
    pub fn add(&self, episode: E, priority: f64) -> Result<u64, ReplayError> {
        if !(priority >= 0.0 && priority.is_finite()) {
            return Err(ReplayError::InvalidPriority(priority));
        }
        let scaled = self.scaled(priority);
        let episode = Arc::new(episode);
        let mut inner = self.lock();
        let id = inner.next_id;
        inner.next_id += 1;
        let slot = (id % self.cfg.capacity as u64) as usize;
        if inner.slots[slot].is_none() {
            inner.len += 1;
        }
        inner.slots[slot] = Some((id, episode));
        inner.tree.set(slot, scaled);
        drop(inner);
        self.added.fetch_add(1, Ordering::Relaxed);
        Ok(id)
    }

    /// Ids currently stored, oldest first.
    pub fn stored_ids(&self) -> Vec<u64> {
        let inner = self.lock();
        let mut ids: Vec<u64> = inner.slots.iter().flatten().map(|(id, _)| *id).collect();
        ids.sort_unstable();
        ids
    }

    /// Draw `batch` episodes with replacement, `P(i) ∝ priority_i^alpha`.
    pub fn sample<R: Rng + ?Sized>(&self, batch: usize, rng: &mut R) -> Result<Sample<E>, ReplayError> {
        let inner = self.lock();
        if inner.len < self.cfg.warmup.max(1) {
            return Err(ReplayError::NotWarm {
                size: inner.len,
                warmup: self.cfg.warmup,
            });
        }
        let total = inner.tree.total();
        if total <= 0.0 {
            return Err(ReplayError::ZeroPriority);
        }
        let mut out = Sample {
            ids: Vec::with_capacity(batch),
            episodes: Vec::with_capacity(batch),
            weights: Vec::with_capacity(batch),
            probabilities: Vec::with_capacity(batch),
        };
        let n = inner.len as f64;
        while out.ids.len() < batch {
            let leaf = inner.tree.find(rng.gen::<f64>() * total);
            let p = inner.tree.get(leaf);
            // a draw can only land on an empty range through rounding at the edges
            let Some((id, ep)) = inner.slots.get(leaf).and_then(|s| s.as_ref()).filter(|_| p > 0.0) else {
                continue;
            };
            let prob = p / total;
            out.ids.push(*id);
            out.episodes.push(Arc::clone(ep));
            out.probabilities.push(prob);
            out.weights.push((n * prob).powf(-self.cfg.is_exponent));
        }
        drop(inner);
        let max = out.weights.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            out.weights.iter_mut().for_each(|w| *w /= max);
        }
        self.sampled.fetch_add(batch as u64, Ordering::Relaxed);
        Ok(out)
    }

    /// Replace the priority of `id` with the episode priority of `td_errors`.
    /// Stale ids are ignored; returns whether the episode was still stored.
    pub fn update_td(&self, id: u64, td_errors: &[f64]) -> bool {
        self.update_priority(id, episode_priority(td_errors, self.cfg.eta))
    }

    pub fn update_priority(&self, id: u64, priority: f64) -> bool {
        if !(priority >= 0.0 && priority.is_finite()) {
            return false;
        }
        let scaled = self.scaled(priority);
        let mut inner = self.lock();
        let slot = (id % self.cfg.capacity as u64) as usize;
        match inner.slots[slot] {
            Some((stored, _)) if stored == id => {
                inner.tree.set(slot, scaled);
                true
            }
            _ => false,
        }
    }

    pub fn update_priorities(&self, ids: &[u64], td_errors: &[Vec<f64>]) -> usize {
        ids.iter()
            .zip(td_errors)
            .filter(|(&id, td)| self.update_td(id, td))
            .count()
    }
}
