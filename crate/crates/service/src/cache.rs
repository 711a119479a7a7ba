//! Result cache keyed by (target id, config digest) that coalesces
//! concurrent requests for the same key into one computation.

use std::collections::HashMap;
use std::future::Future;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use ideareader_core::pipeline::StageTiming;
use tokio::sync::OnceCell;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey {
    pub target: String,
    pub digest: String,
}

#[derive(Debug)]
pub struct CachedResult {
    /// Canonical result document bytes.
    pub bytes: Vec<u8>,
    pub report: String,
    pub timings: Vec<StageTiming>,
}

type Slot = Arc<OnceCell<Arc<CachedResult>>>;

#[derive(Debug, Default)]
pub struct ResultCache {
    slots: Mutex<HashMap<CacheKey, Slot>>,
    computations: AtomicUsize,
}

impl ResultCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, key: &CacheKey) -> Option<Arc<CachedResult>> {
        let slots = self.slots.lock().expect("cache lock");
        slots.get(key).and_then(|slot| slot.get().cloned())
    }

    /// Returns the cached entry or runs `compute` once for all concurrent
    /// callers of the same key. A failed computation caches nothing.
    pub async fn get_or_compute<F, Fut, E>(&self, key: CacheKey, compute: F) -> Result<Arc<CachedResult>, E>
    where
        F: FnOnce() -> Fut,
        Fut: Future<Output = Result<CachedResult, E>>,
    {
        let slot = {
            let mut slots = self.slots.lock().expect("cache lock");
            slots.entry(key).or_default().clone()
        };
        slot.get_or_try_init(|| async {
            self.computations.fetch_add(1, Ordering::SeqCst);
            compute().await.map(Arc::new)
        })
        .await
        .cloned()
    }

    /// Number of computations started so far.
    pub fn computations(&self) -> usize {
        self.computations.load(Ordering::SeqCst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn key(t: &str) -> CacheKey {
        CacheKey {
            target: t.into(),
            digest: "d".into(),
        }
    }

    fn entry(byte: u8) -> CachedResult {
        CachedResult {
            bytes: vec![byte],
            report: String::new(),
            timings: vec![],
        }
    }

    #[tokio::test(flavor = "multi_thread", worker_threads = 4)]
    async fn concurrent_callers_share_one_computation() {
        let cache = Arc::new(ResultCache::new());
        let mut handles = Vec::new();
        for _ in 0..8 {
            let cache = cache.clone();
            handles.push(tokio::spawn(async move {
                cache
                    .get_or_compute(key("a"), || async {
                        tokio::time::sleep(Duration::from_millis(50)).await;
                        Ok::<_, ()>(entry(7))
                    })
                    .await
                    .unwrap()
                    .bytes
                    .clone()
            }));
        }
        for h in handles {
            assert_eq!(h.await.unwrap(), vec![7]);
        }
        assert_eq!(cache.computations(), 1);
        assert_eq!(cache.get(&key("a")).unwrap().bytes, vec![7]);
        assert!(cache.get(&key("b")).is_none());
    }

    #[tokio::test]
    async fn failures_are_not_cached() {
        let cache = ResultCache::new();
        let r = cache.get_or_compute(key("a"), || async { Err::<CachedResult, _>("boom") }).await;
        assert!(r.is_err());
        assert!(cache.get(&key("a")).is_none());
        let r = cache.get_or_compute(key("a"), || async { Ok::<_, &str>(entry(1)) }).await;
        assert_eq!(r.unwrap().bytes, vec![1]);
        assert_eq!(cache.computations(), 2);
    }
}
