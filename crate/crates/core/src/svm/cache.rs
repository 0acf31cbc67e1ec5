use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// Least-recently-used cache of kernel rows, bounded by a byte budget.
///
/// At least two rows are always kept: a solver step needs both rows of its
/// working pair.
#[derive(Debug)]
pub(crate) struct RowCache {
    capacity: usize,
    rows: HashMap<usize, (Arc<[f64]>, u64)>,
    by_age: BTreeMap<u64, usize>,
    clock: u64,
    pub(crate) hits: u64,
    pub(crate) misses: u64,
}

impl RowCache {
    pub(crate) fn new(cache_bytes: usize, row_len: usize) -> Self {
        let row_bytes = row_len.max(1) * std::mem::size_of::<f64>();
        RowCache {
            capacity: (cache_bytes / row_bytes).max(2),
            rows: HashMap::new(),
            by_age: BTreeMap::new(),
            clock: 0,
            hits: 0,
            misses: 0,
        }
    }

    #[cfg(test)]
    pub(crate) fn capacity(&self) -> usize {
        self.capacity
    }

    pub(crate) fn get(&mut self, key: usize) -> Option<Arc<[f64]>> {
        self.clock += 1;
        let clock = self.clock;
        match self.rows.get_mut(&key) {
            Some((row, age)) => {
                self.by_age.remove(age);
                *age = clock;
                self.by_age.insert(clock, key);
                self.hits += 1;
                Some(Arc::clone(row))
            }
            None => {
                self.misses += 1;
                None
            }
        }
    }

    pub(crate) fn insert(&mut self, key: usize, row: Arc<[f64]>) {
        self.clock += 1;
        if let Some((_, age)) = self.rows.remove(&key) {
            self.by_age.remove(&age);
        }
        while self.rows.len() >= self.capacity {
            let Some((_, oldest)) = self.by_age.pop_first() else { break };
            self.rows.remove(&oldest);
        }
        self.rows.insert(key, (row, self.clock));
        self.by_age.insert(self.clock, key);
    }

    #[cfg(test)]
    pub(crate) fn len(&self) -> usize {
        self.rows.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(v: f64) -> Arc<[f64]> {
        Arc::from(vec![v; 4])
    }

    #[test]
    fn evicts_least_recently_used() {
        // 4 f64 per row, budget for 3 rows
        let mut c = RowCache::new(3 * 4 * 8, 4);
        assert_eq!(c.capacity(), 3);
        c.insert(0, row(0.0));
        c.insert(1, row(1.0));
        c.insert(2, row(2.0));
        assert!(c.get(0).is_some());
        c.insert(3, row(3.0));
        assert!(c.get(1).is_none());
        assert_eq!(c.get(0).unwrap()[0], 0.0);
        assert!(c.get(2).is_some());
        assert!(c.get(3).is_some());
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn keeps_at_least_two_rows() {
        let mut c = RowCache::new(0, 1000);
        assert_eq!(c.capacity(), 2);
        c.insert(5, row(5.0));
        c.insert(6, row(6.0));
        assert!(c.get(5).is_some() && c.get(6).is_some());
        c.insert(7, row(7.0));
        assert_eq!(c.len(), 2);
        assert!(c.get(5).is_none());
    }

    #[test]
    fn reinsert_replaces() {
        let mut c = RowCache::new(1 << 20, 4);
        c.insert(1, row(1.0));
        c.insert(1, row(9.0));
        assert_eq!(c.len(), 1);
        assert_eq!(c.get(1).unwrap()[0], 9.0);
    }
}
