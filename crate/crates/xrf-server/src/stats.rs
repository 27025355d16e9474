use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::Mutex;

use xrf_core::wire::{EndpointStat, StatsReport};
use xrf_metrics::{now_unix_micros, process_cpu_micros};

/// Per-endpoint wall/CPU aggregates plus the first-arrival/last-completion
/// pair the harness uses as the server-side wall timer.
#[derive(Debug, Default)]
pub struct ServerStats {
    first_arrival: AtomicU64,
    last_completion: AtomicU64,
    total: AtomicU64,
    endpoints: Mutex<HashMap<&'static str, EndpointStat>>,
}

impl ServerStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Called at handler start; the first call after a reset pins the
    /// wall-timer origin.
    pub fn record_arrival(&self, unix_micros: u64) {
        let _ = self
            .first_arrival
            .compare_exchange(0, unix_micros, Ordering::SeqCst, Ordering::SeqCst);
    }

    pub fn record_completion(
        &self,
        endpoint: &'static str,
        wall_micros: u64,
        cpu_micros: u64,
        unix_micros: u64,
    ) {
        self.last_completion.fetch_max(unix_micros, Ordering::SeqCst);
        self.total.fetch_add(1, Ordering::Relaxed);
        let mut map = self.endpoints.lock();
        let agg = map.entry(endpoint).or_default();
        agg.count += 1;
        agg.wall_micros += wall_micros;
        agg.cpu_micros += cpu_micros;
    }

    pub fn snapshot(&self) -> StatsReport {
        let endpoints = self
            .endpoints
            .lock()
            .iter()
            .map(|(k, v)| ((*k).to_owned(), *v))
            .collect();
        StatsReport {
            process_cpu_micros: process_cpu_micros(),
            unix_micros: now_unix_micros(),
            first_arrival_micros: self.first_arrival.load(Ordering::SeqCst),
            last_completion_micros: self.last_completion.load(Ordering::SeqCst),
            total_requests: self.total.load(Ordering::Relaxed),
            endpoints,
        }
    }

    pub fn reset(&self) {
        self.first_arrival.store(0, Ordering::SeqCst);
        self.last_completion.store(0, Ordering::SeqCst);
        self.total.store(0, Ordering::Relaxed);
        self.endpoints.lock().clear();
    }
}
