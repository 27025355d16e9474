use std::time::Duration;

use tokio::sync::mpsc::UnboundedReceiver;
use uuid::Uuid;

use xrf_core::wire::paths;
use xrf_core::{ProfileUpdate, XAppProfile};

/// One fan-out: the updated profile and the consumers to tell about it,
/// addressed by their registered `endpointAddress`.
#[derive(Debug)]
pub struct NotifyJob {
    pub profile: XAppProfile,
    pub targets: Vec<(Uuid, String)>,
}

/// Delivers profile updates to consumers, best effort with one retry.
/// Failures are logged, never propagated back to the update caller.
pub async fn notify_worker(mut rx: UnboundedReceiver<NotifyJob>) {
    let client = reqwest::Client::builder()
        .timeout(Duration::from_secs(2))
        .build()
        .expect("notifier http client");

    while let Some(job) = rx.recv().await {
        let update = ProfileUpdate::from(&job.profile);
        for (consumer, addr) in &job.targets {
            let url = format!("http://{addr}{}", paths::CLIENT_PROFILE_UPDATE);
            let mut last_error = String::new();
            let mut delivered = false;
            for attempt in 0..2u8 {
                if attempt > 0 {
                    tokio::time::sleep(Duration::from_millis(50)).await;
                }
                match client.put(&url).json(&update).send().await {
                    Ok(resp) if resp.status().is_success() => {
                        delivered = true;
                        break;
                    }
                    Ok(resp) => last_error = format!("status {}", resp.status()),
                    Err(e) => last_error = e.to_string(),
                }
            }
            if !delivered {
                tracing::warn!(
                    consumer = %consumer,
                    url = %url,
                    "profile-update notification failed after retry: {last_error}"
                );
            }
        }
    }
}
