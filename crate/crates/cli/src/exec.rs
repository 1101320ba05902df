//! Thread-pool evaluation of independent runs.

use fragrd_core::thresholds::{Executor, ProbeResult};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

/// Applies `f` to every item on up to `workers` scoped threads. Results
/// are returned in input order whatever the completion order.
pub fn par_map<T: Sync, R: Send>(workers: usize, items: &[T], f: &(dyn Fn(&T) -> R + Sync)) -> Vec<R> {
    let threads = workers.min(items.len());
    if threads <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every slot filled")).collect()
}

#[derive(Clone, Copy, Debug)]
pub struct Threaded {
    pub workers: usize,
}

impl Executor for Threaded {
    fn map(&self, sigmas: &[f64], probe: &(dyn Fn(f64) -> ProbeResult + Sync)) -> Vec<ProbeResult> {
        par_map(self.workers, sigmas, &|s: &f64| probe(*s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..50).collect();
        let out = par_map(4, &items, &|&i| {
            std::thread::sleep(std::time::Duration::from_micros((50 - i) * 20));
            i * i
        });
        assert_eq!(out, items.iter().map(|i| i * i).collect::<Vec<_>>());
    }
}
