use std::collections::HashMap;

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use rand::RngCore;
use uuid::Uuid;

/// Short-lived opaque credentials handed out by initial authentication and
/// echoed by the client on registration and token requests.
#[derive(Debug, Default)]
pub struct SessionStore {
    sessions: HashMap<String, Session>,
}

#[derive(Debug, Clone, Copy)]
struct Session {
    principal: Uuid,
    expires_at: u64,
}

impl SessionStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn create(&mut self, principal: Uuid, now: u64, ttl_secs: u64) -> String {
        let mut bytes = [0u8; 32];
        rand::thread_rng().fill_bytes(&mut bytes);
        let token = URL_SAFE_NO_PAD.encode(bytes);
        self.sessions.insert(
            token.clone(),
            Session { principal, expires_at: now + ttl_secs },
        );
        token
    }

    /// The principal behind a session credential, if it is still live.
    pub fn principal(&self, token: &str, now: u64) -> Option<Uuid> {
        self.sessions
            .get(token)
            .filter(|s| s.expires_at > now)
            .map(|s| s.principal)
    }

    pub fn purge_expired(&mut self, now: u64) {
        self.sessions.retain(|_, s| s.expires_at > now);
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }
}
