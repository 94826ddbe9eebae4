//! Deterministic fan-out for scan points and compare legs: tasks are pulled
//! from an index counter by a capped worker pool and merged back in index
//! order, so the output never depends on scheduling.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::error::HarnessError;

/// Worker cap: `KGFACTOR_THREADS` if set (must be a positive integer),
/// otherwise the machine's available parallelism.
pub fn thread_cap() -> Result<usize, HarnessError> {
    match std::env::var("KGFACTOR_THREADS") {
        Ok(raw) => match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => Err(HarnessError::Config(format!(
                "KGFACTOR_THREADS must be a positive integer, got '{raw}'"
            ))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Run `f(0..n)` on up to `threads` workers and return the results in index
/// order.
pub fn map_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<T>>> = Mutex::new((0..n).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..threads.min(n) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= n {
                    break;
                }
                let result = f(i);
                slots.lock().expect("worker panicked holding the slot lock")[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .expect("worker panicked holding the slot lock")
        .into_iter()
        .map(|slot| slot.expect("every index is visited exactly once"))
        .collect()
}
