use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;
use std::thread;

pub const WORKERS_ENV: &str = "NSRLAB_WORKERS";

/// Worker count from `NSRLAB_WORKERS` if set and valid, else `fallback`.
pub fn workers_from_env(fallback: usize) -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&w| w > 0)
        .unwrap_or(fallback)
        .max(1)
}

/// Runs `run` on every job with up to `workers` threads and hands results
/// to `sink` in job order, as soon as each prefix is complete.
pub fn run_ordered<J, R, F, S>(jobs: &[J], workers: usize, run: F, mut sink: S)
where
    J: Sync,
    R: Send,
    F: Fn(&J) -> R + Sync,
    S: FnMut(usize, R),
{
    let workers = workers.clamp(1, jobs.len().max(1));
    if workers == 1 {
        for (i, job) in jobs.iter().enumerate() {
            sink(i, run(job));
        }
        return;
    }
    let next = AtomicUsize::new(0);
    let (tx, rx) = mpsc::channel();
    thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (next, run) = (&next, &run);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                if tx.send((i, run(job))).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        let mut pending = BTreeMap::new();
        let mut emit = 0;
        for (i, r) in rx {
            pending.insert(i, r);
            while let Some(r) = pending.remove(&emit) {
                sink(emit, r);
                emit += 1;
            }
        }
    });
}
