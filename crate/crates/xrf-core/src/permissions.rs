use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::scope::Scope;

/// offering code -> endpoint path -> allowed scopes.
pub type Rules = BTreeMap<String, BTreeMap<String, BTreeSet<Scope>>>;

/// Outstanding exclusive (write) grant on one provider endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExclusiveGrant {
    pub consumer: Uuid,
    pub expires_at: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("endpoint already has a live exclusive grant for consumer {holder} until {expires_at}")]
pub struct GrantConflict {
    pub holder: Uuid,
    pub expires_at: u64,
}

/// Access rules per offering plus the live exclusive-grant state.
///
/// The rules are static deployment configuration; the grants mutate only
/// under the server's store lock.
#[derive(Debug, Clone, Default)]
pub struct PermissionsMatrix {
    rules: Rules,
    exclusive: HashMap<(Uuid, String), ExclusiveGrant>,
}

impl PermissionsMatrix {
    pub fn from_rules(rules: Rules) -> Self {
        Self {
            rules,
            exclusive: HashMap::new(),
        }
    }

    pub fn rules(&self) -> &Rules {
        &self.rules
    }

    /// True iff `(endpoint, scope)` is listed under `offering`. Unknown
    /// offerings or endpoints are simply not allowed.
    pub fn scope_allowed(&self, offering: &str, endpoint: &str, scope: Scope) -> bool {
        self.rules
            .get(offering)
            .and_then(|endpoints| endpoints.get(endpoint))
            .is_some_and(|scopes| scopes.contains(&scope))
    }

    /// The grant currently blocking writes on `(provider, endpoint)`, if any.
    pub fn live_exclusive(&self, provider: Uuid, endpoint: &str, now: u64) -> Option<ExclusiveGrant> {
        self.exclusive
            .get(&(provider, endpoint.to_owned()))
            .copied()
            .filter(|g| g.expires_at > now)
    }

    /// Atomically claims the exclusive slot for `(provider, endpoint)`.
    ///
    /// Fails while any unexpired grant is held, including one held by the
    /// same consumer; an expired leftover is replaced.
    pub fn reserve_exclusive(
        &mut self,
        provider: Uuid,
        endpoint: &str,
        consumer: Uuid,
        expires_at: u64,
        now: u64,
    ) -> Result<(), GrantConflict> {
        if let Some(live) = self.live_exclusive(provider, endpoint, now) {
            return Err(GrantConflict {
                holder: live.consumer,
                expires_at: live.expires_at,
            });
        }
        self.exclusive.insert(
            (provider, endpoint.to_owned()),
            ExclusiveGrant { consumer, expires_at },
        );
        Ok(())
    }

    /// Drops the grant on `(provider, endpoint)`, e.g. to roll back a
    /// reservation whose token issuance failed.
    pub fn release_exclusive(&mut self, provider: Uuid, endpoint: &str) -> Option<ExclusiveGrant> {
        self.exclusive.remove(&(provider, endpoint.to_owned()))
    }

    /// Removes grants with `expires_at <= now`; returns what was released.
    pub fn expire_exclusive(&mut self, now: u64) -> Vec<(Uuid, String, ExclusiveGrant)> {
        let expired: Vec<(Uuid, String)> = self
            .exclusive
            .iter()
            .filter(|(_, g)| g.expires_at <= now)
            .map(|(k, _)| k.clone())
            .collect();
        expired
            .into_iter()
            .map(|key| {
                let grant = self.exclusive.remove(&key).expect("key collected above");
                (key.0, key.1, grant)
            })
            .collect()
    }

    pub fn exclusive_grants(&self) -> impl Iterator<Item = (&(Uuid, String), &ExclusiveGrant)> {
        self.exclusive.iter()
    }
}
