//! Parameter publication. The trainer owns a private network and publishes
//! immutable copies; actors and the evaluator only ever hold a complete one.

use std::sync::{Arc, Mutex};

use sad_nn::NetParams;

#[derive(Debug)]
pub struct Snapshot {
    pub version: u64,
    /// Trainer updates behind these parameters.
    pub update: u64,
    pub params: NetParams<f32>,
    /// Checksum taken at publication.
    pub checksum: u64,
}

impl Snapshot {
    pub fn new(version: u64, update: u64, params: NetParams<f32>) -> Self {
        let checksum = params.checksum();
        Self {
            version,
            update,
            params,
            checksum,
        }
    }

    /// Recompute the checksum and compare with the published one.
    pub fn verify(&self) -> bool {
        self.params.checksum() == self.checksum
    }
}

/// Holder of the latest snapshot. The lock guards only an `Arc` swap, never a
/// network evaluation.
#[derive(Debug)]
pub struct SnapshotCell {
    latest: Mutex<Arc<Snapshot>>,
}

impl SnapshotCell {
    pub fn new(params: NetParams<f32>) -> Self {
        Self {
            latest: Mutex::new(Arc::new(Snapshot::new(0, 0, params))),
        }
    }

    /// Publish a copy of `params`, trained for `update` steps, under the next
    /// version number.
    pub fn publish(&self, params: &NetParams<f32>, update: u64) -> u64 {
        // hash outside the lock
        let mut next = Snapshot::new(0, update, params.clone());
        let mut guard = self.latest.lock().expect("snapshot lock poisoned");
        next.version = guard.version + 1;
        let version = next.version;
        *guard = Arc::new(next);
        version
    }

    pub fn latest(&self) -> Arc<Snapshot> {
        let snap = self.latest.lock().expect("snapshot lock poisoned").clone();
        debug_assert!(snap.verify(), "torn snapshot v{}", snap.version);
        snap
    }

    pub fn version(&self) -> u64 {
        self.latest.lock().expect("snapshot lock poisoned").version
    }
}

/// A reader that re-fetches only when a newer version exists, so the debug
/// checksum check runs once per published version.
#[derive(Debug)]
pub struct SnapshotReader<'a> {
    cell: &'a SnapshotCell,
    held: Arc<Snapshot>,
}

impl<'a> SnapshotReader<'a> {
    pub fn new(cell: &'a SnapshotCell) -> Self {
        Self { cell, held: cell.latest() }
    }

    pub fn current(&mut self) -> &Arc<Snapshot> {
        if self.cell.version() != self.held.version {
            self.held = self.cell.latest();
        }
        &self.held
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;
    use sad_nn::NetConfig;

    fn net(seed: u64) -> NetParams<f32> {
        NetParams::init(NetConfig::new(6, 4, 0).with_hidden(8), &mut StdRng::seed_from_u64(seed))
    }

    #[test]
    fn publish_bumps_version_and_keeps_old_readers_intact() {
        let cell = SnapshotCell::new(net(0));
        let old = cell.latest();
        let fresh = net(1);
        assert_eq!(cell.publish(&fresh, 5), 1);
        assert_eq!(old.version, 0);
        assert!(old.verify());
        let new = cell.latest();
        assert_eq!(new.version, 1);
        assert_eq!(new.checksum, fresh.checksum());
        assert_eq!(new.update, 5);
    }

    #[test]
    fn concurrent_readers_never_see_a_torn_snapshot() {
        let cell = SnapshotCell::new(net(0));
        let nets: Vec<_> = (1..20).map(net).collect();
        std::thread::scope(|s| {
            for _ in 0..3 {
                s.spawn(|| {
                    let mut reader = SnapshotReader::new(&cell);
                    let mut last = 0;
                    for _ in 0..200 {
                        let snap = reader.current();
                        assert!(snap.verify());
                        assert!(snap.version >= last);
                        last = snap.version;
                    }
                });
            }
            for n in &nets {
                cell.publish(n, 0);
            }
        });
        assert_eq!(cell.version(), 19);
    }
}
