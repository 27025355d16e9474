//! Timing primitives used across the XRF workspace.
//!
//! Two clocks matter for the operational measurements: wall time (elapsed
//! real time) and CPU time (active processor time). CPU time is read per
//! thread for request handlers and per process for whole-run accounting.

use std::time::Instant;

/// CPU time consumed by the calling thread, in microseconds.
///
/// Only meaningful when the measured section runs entirely on one OS thread.
pub fn thread_cpu_micros() -> u64 {
    clock_micros(libc::CLOCK_THREAD_CPUTIME_ID)
}

/// CPU time (user + system) consumed by the whole process, in microseconds.
pub fn process_cpu_micros() -> u64 {
    // getrusage covers all threads, unlike CLOCK_PROCESS_CPUTIME_ID on some
    // older kernels.
    let mut usage: libc::rusage = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::getrusage(libc::RUSAGE_SELF, &mut usage) };
    if rc != 0 {
        return 0;
    }
    timeval_micros(usage.ru_utime) + timeval_micros(usage.ru_stime)
}

/// Microseconds since the Unix epoch.
pub fn now_unix_micros() -> u64 {
    use std::time::{SystemTime, UNIX_EPOCH};
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_micros() as u64)
        .unwrap_or(0)
}

/// Seconds since the Unix epoch.
pub fn now_unix_secs() -> u64 {
    now_unix_micros() / 1_000_000
}

fn clock_micros(clock: libc::clockid_t) -> u64 {
    let mut ts = libc::timespec {
        tv_sec: 0,
        tv_nsec: 0,
    };
    let rc = unsafe { libc::clock_gettime(clock, &mut ts) };
    if rc != 0 {
        return 0;
    }
    ts.tv_sec as u64 * 1_000_000 + ts.tv_nsec as u64 / 1_000
}

fn timeval_micros(tv: libc::timeval) -> u64 {
    tv.tv_sec as u64 * 1_000_000 + tv.tv_usec as u64
}

/// Measures wall and thread-CPU time over one section of code.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    wall_start: Instant,
    cpu_start: u64,
}

impl Stopwatch {
    pub fn start() -> Self {
        Self {
            wall_start: Instant::now(),
            cpu_start: thread_cpu_micros(),
        }
    }

    /// (wall_micros, cpu_micros) elapsed since `start`.
    pub fn elapsed(&self) -> (u64, u64) {
        let wall = self.wall_start.elapsed().as_micros() as u64;
        let cpu = thread_cpu_micros().saturating_sub(self.cpu_start);
        (wall, cpu)
    }
}

/// Nearest-rank percentile of an unsorted sample; `p` in [0, 100].
pub fn percentile(samples: &[f64], p: f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite sample"));
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

/// Median via nearest-rank (lower middle for even-length samples).
pub fn median(samples: &[f64]) -> f64 {
    percentile(samples, 50.0)
}

pub fn mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Coefficient of variation (stddev / mean); 0 for degenerate input.
pub fn coefficient_of_variation(samples: &[f64]) -> f64 {
    let m = mean(samples);
    if samples.len() < 2 || m == 0.0 {
        return 0.0;
    }
    let var = samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (samples.len() - 1) as f64;
    var.sqrt() / m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thread_cpu_is_monotonic_under_work() {
        let before = thread_cpu_micros();
        let mut acc = 0u64;
        for i in 0..2_000_000u64 {
            acc = acc.wrapping_add(i * i);
        }
        std::hint::black_box(acc);
        assert!(thread_cpu_micros() >= before);
    }

    #[test]
    fn process_cpu_at_least_thread_cpu_progression() {
        let p0 = process_cpu_micros();
        let mut acc = 0u64;
        for i in 0..2_000_000u64 {
            acc = acc.wrapping_add(i.rotate_left(7));
        }
        std::hint::black_box(acc);
        assert!(process_cpu_micros() >= p0);
    }

    #[test]
    fn percentile_nearest_rank() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        assert_eq!(percentile(&xs, 50.0), 5.0);
        assert_eq!(percentile(&xs, 95.0), 10.0);
        assert_eq!(percentile(&xs, 100.0), 10.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(percentile(&[], 50.0), 0.0);
    }

    #[test]
    fn p95_never_below_p50() {
        let xs: Vec<f64> = (0..257).map(|i| ((i * 37) % 101) as f64).collect();
        assert!(percentile(&xs, 95.0) >= percentile(&xs, 50.0));
    }

    #[test]
    fn cv_of_constant_sample_is_zero() {
        assert_eq!(coefficient_of_variation(&[4.0, 4.0, 4.0]), 0.0);
        assert!(coefficient_of_variation(&[1.0, 2.0, 3.0]) > 0.0);
    }
}
