use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::scope::Scope;
use crate::token::TokenClaims;

/// Header carrying the opaque session credential a client receives from
/// initial authentication and echoes on authenticated requests.
pub const SESSION_HEADER: &str = "x-xrf-session";

/// REST endpoint paths. The first seven are served by the XRF server, the
/// rest by a client's sidecar listener.
pub mod paths {
    pub const INITIAL_AUTH: &str = "/initialAuthentication";
    pub const REGISTRATION: &str = "/registrationHandler";
    pub const PROFILE_UPDATE: &str = "/profileUpdateHandler";
    pub const DISCOVERY: &str = "/xAppDiscoveryHandler";
    pub const ACCESS_TOKEN: &str = "/accessTokenRequest";
    pub const INTROSPECTION: &str = "/tokenIntrospection";
    pub const JWKS: &str = "/jwksRequestHandler";
    pub const STATS: &str = "/stats";
    pub const STATS_RESET: &str = "/stats/reset";

    pub const CLIENT_PROFILE_UPDATE: &str = "/profileUpdate";
}

/// Body of `POST /initialAuthentication`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuthRequest {
    pub client: Uuid,
    /// Base64 challenge envelope payload.
    pub challenge: String,
}

/// Successful counter-challenge response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuthResponse {
    pub counter: String,
    pub session: String,
}

/// Body of `POST /accessTokenRequest`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenRequest {
    pub consumer: Uuid,
    pub provider: Uuid,
    pub endpoint: String,
    pub scope: Scope,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TokenResponse {
    pub access_token: String,
    pub token_type: String,
    pub expires_in: u64,
}

/// Body of `POST /tokenIntrospection`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntrospectionRequest {
    pub token: String,
}

/// RFC 7662-style introspection result: `active` plus the claims when the
/// token verified.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IntrospectionResponse {
    pub active: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iss: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub: Option<Uuid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub aud: Option<Uuid>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scope: Option<Scope>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exp: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint: Option<String>,
}

impl IntrospectionResponse {
    pub fn inactive() -> Self {
        Self::default()
    }

    pub fn active(claims: &TokenClaims) -> Self {
        Self {
            active: true,
            iss: Some(claims.iss.clone()),
            sub: Some(claims.sub),
            aud: Some(claims.aud),
            scope: Some(claims.scope),
            exp: Some(claims.exp),
            endpoint: Some(claims.endpoint.clone()),
        }
    }

    /// Reassembles the claims when the response says the token is active.
    pub fn claims(&self) -> Option<TokenClaims> {
        if !self.active {
            return None;
        }
        Some(TokenClaims {
            iss: self.iss.clone()?,
            sub: self.sub?,
            aud: self.aud?,
            scope: self.scope?,
            exp: self.exp?,
            endpoint: self.endpoint.clone()?,
        })
    }
}

/// Machine-readable error body used for every non-2xx response.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
    pub detail: String,
}

/// Per-endpoint aggregate served at `GET /stats` for the bench harness.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointStat {
    pub count: u64,
    pub wall_micros: u64,
    pub cpu_micros: u64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct StatsReport {
    /// Process-wide CPU time (user + system) at snapshot time.
    pub process_cpu_micros: u64,
    pub unix_micros: u64,
    /// First request arrival since the last reset; 0 when none seen.
    pub first_arrival_micros: u64,
    /// Completion instant of the most recent request.
    pub last_completion_micros: u64,
    pub total_requests: u64,
    pub endpoints: BTreeMap<String, EndpointStat>,
}

impl StatsReport {
    /// Wall span between first arrival and last completion, in seconds.
    pub fn span_secs(&self) -> f64 {
        if self.first_arrival_micros == 0 || self.last_completion_micros <= self.first_arrival_micros
        {
            return 0.0;
        }
        (self.last_completion_micros - self.first_arrival_micros) as f64 / 1e6
    }
}
