use std::collections::{HashMap, HashSet};

use uuid::Uuid;

use xrf_core::{
    GrantConflict, PermissionsMatrix, ProfileUpdate, Scope, TokenClaims, XAppProfile, XAppStatus,
};
use xrf_crypto::KeyPair;

/// A registered profile together with the authenticated principal that
/// registered it. The owner is what makes UUID collisions detectable.
#[derive(Debug, Clone)]
pub struct StoredProfile {
    pub profile: XAppProfile,
    pub owner: Uuid,
}

/// One issued token: the signing key pair (published via JWKS, used for
/// introspection) and the claims it covers.
#[derive(Debug, Clone)]
pub struct TokenRecord {
    pub keypair: KeyPair,
    pub claims: TokenClaims,
    /// Set once expiry accounting (load decrement, grant release) has run.
    pub released: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RegistryError {
    #[error("unknown principal {0}")]
    UnknownPrincipal(Uuid),
    #[error("profile {0} is owned by a different principal")]
    OwnerMismatch(Uuid),
    #[error("requested scope not allowed by the permissions matrix")]
    ScopeNotAllowed,
    #[error("{0}")]
    WriteConflict(GrantConflict),
    #[error("unknown instance {0}")]
    UnknownInstance(Uuid),
}

/// In-memory key-value store behind the server: profiles, the consumer
/// relation used for update notifications, issued token records, and the
/// permissions matrix with its exclusive-grant state.
///
/// All mutation happens under the server's single store lock; the struct
/// itself is plain data.
pub struct Registry {
    profiles: HashMap<Uuid, StoredProfile>,
    consumers_of: HashMap<Uuid, HashSet<Uuid>>,
    token_keys: HashMap<Uuid, TokenRecord>,
    matrix: PermissionsMatrix,
    /// How long expired token records stay resolvable for introspection/JWKS.
    key_retention_secs: u64,
}

impl Registry {
    pub fn new(matrix: PermissionsMatrix, key_retention_secs: u64) -> Self {
        Self {
            profiles: HashMap::new(),
            consumers_of: HashMap::new(),
            token_keys: HashMap::new(),
            matrix,
            key_retention_secs,
        }
    }

    pub fn matrix(&self) -> &PermissionsMatrix {
        &self.matrix
    }

    pub fn profile(&self, id: &Uuid) -> Option<&StoredProfile> {
        self.profiles.get(id)
    }

    pub fn profile_count(&self) -> usize {
        self.profiles.len()
    }

    /// Upserts a profile for `owner`. The stored record always has status
    /// AVAILABLE and a load recomputed from the live token records, so a
    /// re-registration cannot skew the load accounting.
    pub fn register(
        &mut self,
        mut profile: XAppProfile,
        owner: Uuid,
        now: u64,
    ) -> Result<(), RegistryError> {
        if let Some(existing) = self.profiles.get(&profile.instance_id) {
            if existing.owner != owner {
                return Err(RegistryError::OwnerMismatch(profile.instance_id));
            }
        }
        profile.status = XAppStatus::Available;
        profile.load = self.live_token_count(profile.instance_id, now);
        self.profiles.insert(profile.instance_id, StoredProfile { profile, owner });
        Ok(())
    }

    /// Applies a partial update and returns the updated profile plus the
    /// notification targets: `(consumer uuid, consumer endpointAddress)`.
    pub fn update_profile(
        &mut self,
        update: &ProfileUpdate,
    ) -> Result<(XAppProfile, Vec<(Uuid, String)>), RegistryError> {
        let stored = self
            .profiles
            .get_mut(&update.instance_id)
            .ok_or(RegistryError::UnknownInstance(update.instance_id))?;
        update.apply(&mut stored.profile);
        let updated = stored.profile.clone();

        let targets = self
            .consumers_of
            .get(&update.instance_id)
            .map(|consumers| {
                consumers
                    .iter()
                    .filter_map(|c| {
                        self.profiles
                            .get(c)
                            .map(|p| (*c, p.profile.endpoint_address.clone()))
                    })
                    .collect()
            })
            .unwrap_or_default();
        Ok((updated, targets))
    }

    /// All AVAILABLE profiles matching offering and location exactly, never
    /// including the requester itself. Sorted by instance id so responses
    /// are deterministic.
    pub fn discover(
        &self,
        offering: &str,
        location: &str,
        requester: Option<Uuid>,
    ) -> Vec<XAppProfile> {
        let mut matches: Vec<XAppProfile> = self
            .profiles
            .values()
            .map(|s| &s.profile)
            .filter(|p| {
                p.status == XAppStatus::Available
                    && p.offering == offering
                    && p.location == location
                    && Some(p.instance_id) != requester
            })
            .cloned()
            .collect();
        matches.sort_by_key(|p| p.instance_id);
        matches
    }

    /// First half of token issuance, executed atomically under the store
    /// lock: principal/ownership checks, the permissions matrix, and the
    /// exclusive-grant reservation for WRITE. The caller then signs the
    /// token outside the lock and either records it or rolls back.
    #[allow(clippy::too_many_arguments)]
    pub fn prepare_token(
        &mut self,
        consumer: Uuid,
        provider: Uuid,
        endpoint: &str,
        scope: Scope,
        session_principal: Uuid,
        now: u64,
        ttl_secs: u64,
    ) -> Result<u64, RegistryError> {
        let consumer_stored = self
            .profiles
            .get(&consumer)
            .ok_or(RegistryError::UnknownPrincipal(consumer))?;
        if consumer_stored.owner != session_principal {
            return Err(RegistryError::OwnerMismatch(consumer));
        }
        let provider_stored = self
            .profiles
            .get(&provider)
            .ok_or(RegistryError::UnknownPrincipal(provider))?;

        if !self
            .matrix
            .scope_allowed(&provider_stored.profile.offering, endpoint, scope)
        {
            return Err(RegistryError::ScopeNotAllowed);
        }

        let expires_at = now + ttl_secs;
        if scope == Scope::Write {
            self.matrix
                .reserve_exclusive(provider, endpoint, consumer, expires_at, now)
                .map_err(RegistryError::WriteConflict)?;
        }
        Ok(expires_at)
    }

    /// Rolls back a WRITE reservation whose token could not be issued.
    pub fn rollback_reservation(&mut self, provider: Uuid, endpoint: &str, scope: Scope) {
        if scope == Scope::Write {
            self.matrix.release_exclusive(provider, endpoint);
        }
    }

    /// Second half of issuance: store the token record, bump the provider's
    /// load, and remember the consumer for update notifications.
    pub fn record_issued(&mut self, keypair: KeyPair, claims: TokenClaims) {
        let provider = claims.aud;
        let consumer = claims.sub;
        self.token_keys.insert(
            keypair.kid,
            TokenRecord { keypair, claims, released: false },
        );
        if let Some(stored) = self.profiles.get_mut(&provider) {
            stored.profile.load += 1;
        }
        self.consumers_of.entry(provider).or_default().insert(consumer);
    }

    pub fn token_record(&self, kid: &Uuid) -> Option<&TokenRecord> {
        self.token_keys.get(kid)
    }

    /// Releases expired grants and token records: decrements provider load,
    /// frees WRITE exclusivity, prunes the consumer relation, and finally
    /// forgets records past the retention window. Returns how many tokens
    /// were released by this call.
    pub fn expire(&mut self, now: u64) -> usize {
        self.matrix.expire_exclusive(now);

        let newly_expired: Vec<Uuid> = self
            .token_keys
            .iter()
            .filter(|(_, rec)| !rec.released && rec.claims.exp <= now)
            .map(|(kid, _)| *kid)
            .collect();

        for kid in &newly_expired {
            let (provider, consumer) = {
                let rec = self.token_keys.get_mut(kid).expect("collected above");
                rec.released = true;
                (rec.claims.aud, rec.claims.sub)
            };
            if let Some(stored) = self.profiles.get_mut(&provider) {
                stored.profile.load = stored.profile.load.saturating_sub(1);
            }
            // drop the consumer once its last live token for this provider is gone
            let still_consuming = self.token_keys.values().any(|r| {
                !r.released && r.claims.aud == provider && r.claims.sub == consumer
            });
            if !still_consuming {
                if let Some(set) = self.consumers_of.get_mut(&provider) {
                    set.remove(&consumer);
                    if set.is_empty() {
                        self.consumers_of.remove(&provider);
                    }
                }
            }
        }

        let retention = self.key_retention_secs;
        self.token_keys
            .retain(|_, rec| rec.claims.exp + retention > now);

        newly_expired.len()
    }

    /// Unexpired, unreleased tokens granted against `provider`.
    pub fn live_token_count(&self, provider: Uuid, now: u64) -> u64 {
        self.token_keys
            .values()
            .filter(|r| !r.released && r.claims.aud == provider && r.claims.exp > now)
            .count() as u64
    }

    pub fn consumers_of(&self, provider: &Uuid) -> Option<&HashSet<Uuid>> {
        self.consumers_of.get(provider)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use xrf_core::{OfferingVocabulary, Rules};

    fn vocab() -> OfferingVocabulary {
        OfferingVocabulary::new(["KPIMON", "TRAFFIC-STEER"])
    }

    fn rules() -> Rules {
        serde_json::from_value(serde_json::json!({
            "KPIMON": {"/metrics": ["read"], "/control": ["read", "write"]},
            "TRAFFIC-STEER": {"/steer": ["read", "write"]}
        }))
        .unwrap()
    }

    fn registry() -> Registry {
        Registry::new(PermissionsMatrix::from_rules(rules()), 300)
    }

    fn profile(offering: &str, location: &str) -> XAppProfile {
        XAppProfile::new("p", offering, location, "127.0.0.1:9000", &vocab()).unwrap()
    }

    fn test_keypair() -> KeyPair {
        use std::sync::OnceLock;
        static KEY: OnceLock<KeyPair> = OnceLock::new();
        // per-token kid uniqueness is irrelevant to these registry tests
        KEY.get_or_init(|| KeyPair::generate().unwrap()).clone()
    }

    fn issue(reg: &mut Registry, consumer: Uuid, provider: Uuid, endpoint: &str, scope: Scope, owner: Uuid, now: u64) -> Result<u64, RegistryError> {
        let exp = reg.prepare_token(consumer, provider, endpoint, scope, owner, now, 100)?;
        let mut kp = test_keypair();
        kp.kid = Uuid::new_v4();
        reg.record_issued(
            kp,
            TokenClaims {
                iss: "xrf".into(),
                sub: consumer,
                aud: provider,
                scope,
                exp,
                endpoint: endpoint.into(),
            },
        );
        Ok(exp)
    }

    #[test]
    fn register_is_idempotent_upsert_with_owner_guard() {
        let mut reg = registry();
        let owner = Uuid::new_v4();
        let mut p = profile("KPIMON", "edge-A");
        reg.register(p.clone(), owner, 0).unwrap();
        assert_eq!(reg.profile(&p.instance_id).unwrap().profile.status, XAppStatus::Available);

        p.instance_name = "renamed".into();
        reg.register(p.clone(), owner, 0).unwrap();
        assert_eq!(reg.profile(&p.instance_id).unwrap().profile.instance_name, "renamed");

        let err = reg.register(p, Uuid::new_v4(), 0).unwrap_err();
        assert!(matches!(err, RegistryError::OwnerMismatch(_)));
    }

    #[test]
    fn discovery_filters_status_offering_location_and_requester() {
        let mut reg = registry();
        let owner = Uuid::new_v4();
        let a = profile("KPIMON", "edge1");
        let b = profile("KPIMON", "edge1");
        let c = profile("TRAFFIC-STEER", "edge1");
        let d = profile("KPIMON", "edge2");
        let mut e = profile("KPIMON", "edge1");
        for p in [&a, &b, &c, &d] {
            reg.register(p.clone(), owner, 0).unwrap();
        }
        reg.register(e.clone(), owner, 0).unwrap();
        // suspend e after registration
        e.status = XAppStatus::Suspended;
        let update = ProfileUpdate {
            instance_id: e.instance_id,
            status: Some(XAppStatus::Suspended),
            ..Default::default()
        };
        reg.update_profile(&update).unwrap();

        let found = reg.discover("KPIMON", "edge1", Some(b.instance_id));
        let ids: Vec<Uuid> = found.iter().map(|p| p.instance_id).collect();
        assert!(ids.contains(&a.instance_id));
        assert!(!ids.contains(&b.instance_id), "requester must be excluded");
        assert!(!ids.contains(&c.instance_id), "offering mismatch");
        assert!(!ids.contains(&d.instance_id), "location mismatch");
        assert!(!ids.contains(&e.instance_id), "suspended profile excluded");
    }

    #[test]
    fn discovery_matches_brute_force_filter_on_random_registries() {
        use rand::prelude::*;
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        let offerings = ["KPIMON", "TRAFFIC-STEER"];
        let locations = ["edge1", "edge2", "edge3"];

        for _ in 0..40 {
            let mut reg = registry();
            let owner = Uuid::new_v4();
            let n = rng.gen_range(0..200);
            let mut all = Vec::new();
            for _ in 0..n {
                let mut p = profile(
                    offerings[rng.gen_range(0..offerings.len())],
                    locations[rng.gen_range(0..locations.len())],
                );
                reg.register(p.clone(), owner, 0).unwrap();
                if rng.gen_bool(0.25) {
                    let update = ProfileUpdate {
                        instance_id: p.instance_id,
                        status: Some(XAppStatus::Suspended),
                        ..Default::default()
                    };
                    reg.update_profile(&update).unwrap();
                    p.status = XAppStatus::Suspended;
                } else {
                    p.status = XAppStatus::Available;
                }
                all.push(p);
            }

            let offering = offerings[rng.gen_range(0..offerings.len())];
            let location = locations[rng.gen_range(0..locations.len())];
            let requester = all.first().map(|p| p.instance_id);

            let got: Vec<Uuid> = reg
                .discover(offering, location, requester)
                .iter()
                .map(|p| p.instance_id)
                .collect();
            let mut expected: Vec<Uuid> = all
                .iter()
                .filter(|p| {
                    p.status == XAppStatus::Available
                        && p.offering == offering
                        && p.location == location
                        && Some(p.instance_id) != requester
                })
                .map(|p| p.instance_id)
                .collect();
            expected.sort();
            assert_eq!(got, expected);
        }
    }

    #[test]
    fn write_exclusivity_and_rollback() {
        let mut reg = registry();
        let owner = Uuid::new_v4();
        let provider = profile("KPIMON", "edge1");
        let c1 = profile("TRAFFIC-STEER", "edge1");
        let c2 = profile("TRAFFIC-STEER", "edge1");
        for p in [&provider, &c1, &c2] {
            reg.register(p.clone(), owner, 0).unwrap();
        }

        issue(&mut reg, c1.instance_id, provider.instance_id, "/control", Scope::Write, owner, 0)
            .unwrap();
        let err = issue(&mut reg, c2.instance_id, provider.instance_id, "/control", Scope::Write, owner, 1)
            .unwrap_err();
        assert!(matches!(err, RegistryError::WriteConflict(_)));

        // reads are not blocked by a write grant
        issue(&mut reg, c2.instance_id, provider.instance_id, "/control", Scope::Read, owner, 1)
            .unwrap();

        // a reservation rolled back frees the slot
        let exp = reg
            .prepare_token(c2.instance_id, provider.instance_id, "/steer", Scope::Write, owner, 0, 100);
        assert!(matches!(exp, Err(RegistryError::ScopeNotAllowed)), "offering rules apply");
        reg.expire(200);
        reg.prepare_token(c2.instance_id, provider.instance_id, "/control", Scope::Write, owner, 200, 100)
            .unwrap();
        reg.rollback_reservation(provider.instance_id, "/control", Scope::Write);
        reg.prepare_token(c1.instance_id, provider.instance_id, "/control", Scope::Write, owner, 200, 100)
            .unwrap();
    }

    #[test]
    fn expire_releases_grants_and_decrements_load() {
        let mut reg = registry();
        let owner = Uuid::new_v4();
        let provider = profile("KPIMON", "edge1");
        let consumer = profile("TRAFFIC-STEER", "edge1");
        reg.register(provider.clone(), owner, 0).unwrap();
        reg.register(consumer.clone(), owner, 0).unwrap();

        issue(&mut reg, consumer.instance_id, provider.instance_id, "/control", Scope::Write, owner, 0)
            .unwrap();
        assert_eq!(reg.profile(&provider.instance_id).unwrap().profile.load, 1);
        assert_eq!(reg.expire(50), 0, "nothing expired yet");

        assert_eq!(reg.expire(100), 1);
        assert_eq!(reg.profile(&provider.instance_id).unwrap().profile.load, 0);
        assert!(reg.consumers_of(&provider.instance_id).is_none());
        // repeated expiry never double-decrements or goes below zero
        assert_eq!(reg.expire(101), 0);
        assert_eq!(reg.profile(&provider.instance_id).unwrap().profile.load, 0);
        // slot is free again
        reg.prepare_token(consumer.instance_id, provider.instance_id, "/control", Scope::Write, owner, 101, 100)
            .unwrap();
    }

    #[test]
    fn load_equals_live_token_recount_after_random_sequences() {
        use rand::prelude::*;
        let mut rng = rand::rngs::StdRng::seed_from_u64(99);
        let mut reg = registry();
        let owner = Uuid::new_v4();

        let providers: Vec<XAppProfile> = (0..3).map(|_| profile("KPIMON", "edge1")).collect();
        let consumers: Vec<XAppProfile> =
            (0..5).map(|_| profile("TRAFFIC-STEER", "edge1")).collect();
        for p in providers.iter().chain(consumers.iter()) {
            reg.register(p.clone(), owner, 0).unwrap();
        }

        let mut now = 0u64;
        for _ in 0..300 {
            now += rng.gen_range(0..40);
            if rng.gen_bool(0.7) {
                let c = &consumers[rng.gen_range(0..consumers.len())];
                let p = &providers[rng.gen_range(0..providers.len())];
                let _ = issue(
                    &mut reg,
                    c.instance_id,
                    p.instance_id,
                    "/metrics",
                    Scope::Read,
                    owner,
                    now,
                );
            } else {
                reg.expire(now);
            }

            reg.expire(now);
            for p in &providers {
                assert_eq!(
                    reg.profile(&p.instance_id).unwrap().profile.load,
                    reg.live_token_count(p.instance_id, now),
                    "load diverged from live-token recount at t={now}"
                );
            }
        }
    }

    #[test]
    fn update_profile_returns_consumer_targets() {
        let mut reg = registry();
        let owner = Uuid::new_v4();
        let provider = profile("KPIMON", "edge1");
        let c1 = profile("TRAFFIC-STEER", "edge1");
        let c2 = profile("TRAFFIC-STEER", "edge1");
        for p in [&provider, &c1, &c2] {
            reg.register(p.clone(), owner, 0).unwrap();
        }
        issue(&mut reg, c1.instance_id, provider.instance_id, "/metrics", Scope::Read, owner, 0).unwrap();
        issue(&mut reg, c2.instance_id, provider.instance_id, "/metrics", Scope::Read, owner, 0).unwrap();

        let update = ProfileUpdate {
            instance_id: provider.instance_id,
            status: Some(XAppStatus::Suspended),
            ..Default::default()
        };
        let (updated, targets) = reg.update_profile(&update).unwrap();
        assert_eq!(updated.status, XAppStatus::Suspended);
        assert_eq!(targets.len(), 2);

        let unknown = ProfileUpdate { instance_id: Uuid::new_v4(), ..Default::default() };
        assert!(matches!(
            reg.update_profile(&unknown).unwrap_err(),
            RegistryError::UnknownInstance(_)
        ));
    }
}
