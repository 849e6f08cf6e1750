use std::collections::BTreeMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

/// Concurrent memo table with hit/miss accounting.
///
/// Lookups take a shared lock; inserts take the write lock and keep the
/// first value written for a key.
#[derive(Debug)]
pub(crate) struct MemoTable<K, V> {
    entries: RwLock<BTreeMap<K, V>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<K: Ord + Clone, V: Clone> Default for MemoTable<K, V> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K: Ord + Clone, V: Clone> MemoTable<K, V> {
    pub fn new() -> Self {
        MemoTable {
            entries: RwLock::new(BTreeMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn from_entries(entries: impl IntoIterator<Item = (K, V)>) -> Self {
        let table = Self::new();
        *table.entries.write().expect("memo lock") = entries.into_iter().collect();
        table
    }

    pub fn lookup(&self, key: &K) -> Option<V> {
        let found = self.entries.read().expect("memo lock").get(key).cloned();
        match found {
            Some(_) => self.hits.fetch_add(1, Ordering::Relaxed),
            None => self.misses.fetch_add(1, Ordering::Relaxed),
        };
        found
    }

    /// Returns the value now stored under `key`.
    pub fn insert(&self, key: K, value: V) -> V {
        self.entries
            .write()
            .expect("memo lock")
            .entry(key)
            .or_insert(value)
            .clone()
    }

    pub fn clear(&self) {
        self.entries.write().expect("memo lock").clear();
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("memo lock").len()
    }

    pub fn snapshot(&self) -> Vec<(K, V)> {
        self.entries
            .read()
            .expect("memo lock")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect()
    }

    pub fn hits(&self) -> u64 {
        self.hits.load(Ordering::Relaxed)
    }

    pub fn misses(&self) -> u64 {
        self.misses.load(Ordering::Relaxed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn first_writer_wins_and_counts() {
        let t: MemoTable<u32, &str> = MemoTable::new();
        assert_eq!(t.lookup(&1), None);
        assert_eq!(t.insert(1, "a"), "a");
        assert_eq!(t.insert(1, "b"), "a");
        assert_eq!(t.lookup(&1), Some("a"));
        assert_eq!((t.hits(), t.misses()), (1, 1));
    }

    #[test]
    fn concurrent_inserts_converge() {
        let t = Arc::new(MemoTable::<u32, u32>::new());
        let handles: Vec<_> = (0..8)
            .map(|w| {
                let t = Arc::clone(&t);
                std::thread::spawn(move || {
                    for k in 0..100 {
                        let stored = t.insert(k, w);
                        assert_eq!(t.lookup(&k), Some(stored));
                    }
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        assert_eq!(t.len(), 100);
    }
}
