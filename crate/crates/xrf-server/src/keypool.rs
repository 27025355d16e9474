use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crossbeam_channel::{bounded, Receiver, RecvTimeoutError, Sender};

use xrf_crypto::KeyPair;

/// Background pre-generation of per-token RSA key pairs.
///
/// Every issued token gets a fresh, never-used pair, but generating one
/// inline (hundreds of milliseconds) would dwarf the rest of the token
/// handler. Refill threads keep a bounded buffer topped up instead; the
/// handler blocks on `take` only when demand outruns generation. The number
/// of refill threads follows the server's worker count so key throughput
/// scales with the same knob as request handling.
pub struct KeyPool {
    rx: Receiver<KeyPair>,
    stop: Arc<AtomicBool>,
    threads: Vec<std::thread::JoinHandle<()>>,
}

impl KeyPool {
    pub fn spawn(capacity: usize, refill_threads: usize) -> Self {
        let capacity = capacity.max(1);
        let refill_threads = refill_threads.max(1);
        let (tx, rx) = bounded::<KeyPair>(capacity);
        let stop = Arc::new(AtomicBool::new(false));

        let threads = (0..refill_threads)
            .map(|i| {
                let tx: Sender<KeyPair> = tx.clone();
                let stop = Arc::clone(&stop);
                std::thread::Builder::new()
                    .name(format!("xrf-keygen-{i}"))
                    .spawn(move || {
                        while !stop.load(Ordering::Relaxed) {
                            let key = match KeyPair::generate() {
                                Ok(k) => k,
                                Err(e) => {
                                    tracing::error!("key generation failed: {e}");
                                    std::thread::sleep(Duration::from_millis(100));
                                    continue;
                                }
                            };
                            let mut key = Some(key);
                            while let Some(k) = key.take() {
                                if stop.load(Ordering::Relaxed) {
                                    return;
                                }
                                match tx.send_timeout(k, Duration::from_millis(200)) {
                                    Ok(()) => {}
                                    Err(crossbeam_channel::SendTimeoutError::Timeout(k)) => {
                                        key = Some(k);
                                    }
                                    Err(crossbeam_channel::SendTimeoutError::Disconnected(_)) => {
                                        return;
                                    }
                                }
                            }
                        }
                    })
                    .expect("spawn keygen thread")
            })
            .collect();

        Self { rx, stop, threads }
    }

    /// Blocks up to `timeout` for a fresh key pair.
    pub fn take(&self, timeout: Duration) -> Option<KeyPair> {
        match self.rx.recv_timeout(timeout) {
            Ok(key) => Some(key),
            Err(RecvTimeoutError::Timeout) | Err(RecvTimeoutError::Disconnected) => None,
        }
    }

    pub fn available(&self) -> usize {
        self.rx.len()
    }
}

impl Drop for KeyPool {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::Relaxed);
        // unblock senders parked on a full buffer
        while self.rx.try_recv().is_ok() {}
        for handle in self.threads.drain(..) {
            let _ = handle.join();
        }
    }
}
