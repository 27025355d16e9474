use std::collections::HashMap;
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Query, State};
use axum::http::{HeaderMap, StatusCode};
use axum::response::{IntoResponse, Json, Response};
use axum::routing::{get, post, put};
use axum::Router;
use parking_lot::Mutex;
use tokio::sync::mpsc;
use uuid::Uuid;

use xrf_core::wire::{
    paths, AuthRequest, AuthResponse, ErrorBody, IntrospectionRequest, IntrospectionResponse,
    TokenRequest, TokenResponse, SESSION_HEADER,
};
use xrf_core::{OfferingVocabulary, ProfileUpdate, TokenClaims, XAppProfile};
use xrf_crypto::{
    build_counter, jwks_entry, open_challenge, verify_token_signature, ChallengeEnvelope,
    ChallengeError, KeyPair, SignedToken, TrustStore, VerifyError,
};
use xrf_metrics::{now_unix_micros, now_unix_secs, Stopwatch};

use crate::config::{LoadedConfig, ServerConfig};
use crate::keypool::KeyPool;
use crate::notify::{notify_worker, NotifyJob};
use crate::registry::{Registry, RegistryError};
use crate::sessions::SessionStore;
use crate::stats::ServerStats;

/// How long a token request may wait for a pre-generated key pair before
/// giving up and rolling back its reservation.
const KEY_WAIT: Duration = Duration::from_secs(60);

pub struct XrfState {
    pub config: ServerConfig,
    pub vocabulary: OfferingVocabulary,
    pub trust: TrustStore,
    pub identity: KeyPair,
    pub registry: Mutex<Registry>,
    pub sessions: Mutex<SessionStore>,
    pub stats: ServerStats,
    pub pool: KeyPool,
    notify_tx: mpsc::UnboundedSender<NotifyJob>,
    notify_rx: Mutex<Option<mpsc::UnboundedReceiver<NotifyJob>>>,
}

impl XrfState {
    pub fn new(loaded: LoadedConfig) -> Arc<Self> {
        let (notify_tx, notify_rx) = mpsc::unbounded_channel();
        let pool = KeyPool::spawn(loaded.config.key_pool_capacity, loaded.config.workers);
        let registry = Registry::new(loaded.matrix, loaded.config.key_retention_secs);
        Arc::new(Self {
            vocabulary: loaded.vocabulary,
            trust: loaded.trust,
            identity: loaded.identity,
            registry: Mutex::new(registry),
            sessions: Mutex::new(SessionStore::new()),
            stats: ServerStats::new(),
            pool,
            notify_tx,
            notify_rx: Mutex::new(Some(notify_rx)),
            config: loaded.config,
        })
    }
}

pub fn router(state: Arc<XrfState>) -> Router {
    Router::new()
        .route(paths::INITIAL_AUTH, post(initial_auth))
        .route(paths::REGISTRATION, put(registration))
        .route(paths::PROFILE_UPDATE, put(profile_update))
        .route(paths::DISCOVERY, get(discovery))
        .route(paths::ACCESS_TOKEN, post(access_token))
        .route(paths::INTROSPECTION, post(introspection))
        .route(paths::JWKS, get(jwks))
        .route(paths::STATS, get(stats))
        .route(paths::STATS_RESET, post(stats_reset))
        .with_state(state)
}

pub async fn bind(addr: &str) -> std::io::Result<(tokio::net::TcpListener, std::net::SocketAddr)> {
    let listener = tokio::net::TcpListener::bind(addr).await?;
    let local = listener.local_addr()?;
    Ok((listener, local))
}

/// Runs the service until `shutdown` resolves. Spawns the notification
/// worker and the expiry sweeper alongside the acceptor.
pub async fn run(
    state: Arc<XrfState>,
    listener: tokio::net::TcpListener,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    if let Some(rx) = state.notify_rx.lock().take() {
        tokio::spawn(notify_worker(rx));
    }
    tokio::spawn(sweeper(Arc::clone(&state)));
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

async fn sweeper(state: Arc<XrfState>) {
    let mut tick = tokio::time::interval(Duration::from_millis(500));
    tick.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Delay);
    loop {
        tick.tick().await;
        let now = now_unix_secs();
        state.registry.lock().expire(now);
        state.sessions.lock().purge_expired(now);
    }
}

fn error_response(status: StatusCode, error: &str, detail: impl Into<String>) -> Response {
    (
        status,
        Json(ErrorBody {
            error: error.to_owned(),
            detail: detail.into(),
        }),
    )
        .into_response()
}

/// Wraps a synchronous handler core: pins the server wall timer, measures
/// per-request wall and thread-CPU time, and emits the access-log line.
/// The closure must not await, so the thread-CPU reading stays valid.
fn instrumented<F>(state: &XrfState, endpoint: &'static str, f: F) -> Response
where
    F: FnOnce() -> Response,
{
    state.stats.record_arrival(now_unix_micros());
    let sw = Stopwatch::start();
    let resp = f();
    let (wall, cpu) = sw.elapsed();
    state.stats.record_completion(endpoint, wall, cpu, now_unix_micros());
    if state.config.access_log {
        println!(
            "{}",
            serde_json::json!({
                "endpoint": endpoint,
                "status": resp.status().as_u16(),
                "wall_micros": wall,
                "cpu_micros": cpu,
            })
        );
    }
    resp
}

fn session_principal(state: &XrfState, headers: &HeaderMap) -> Option<Uuid> {
    let token = headers.get(SESSION_HEADER)?.to_str().ok()?;
    state.sessions.lock().principal(token, now_unix_secs())
}

fn parse_body<T: serde::de::DeserializeOwned>(body: &Bytes) -> Result<T, Response> {
    serde_json::from_slice(body)
        .map_err(|e| error_response(StatusCode::BAD_REQUEST, "bad-request", format!("body: {e}")))
}

async fn initial_auth(State(state): State<Arc<XrfState>>, body: Bytes) -> Response {
    instrumented(&state, paths::INITIAL_AUTH, || {
        let req: AuthRequest = match parse_body(&body) {
            Ok(r) => r,
            Err(resp) => return resp,
        };
        let Some(client_pub) = state.trust.lookup(&req.client) else {
            return error_response(
                StatusCode::UNAUTHORIZED,
                "unknown-principal",
                format!("{} is not in the trust store", req.client),
            );
        };

        let envelope = ChallengeEnvelope { payload: req.challenge };
        let m = match open_challenge(&envelope, state.identity.private(), client_pub) {
            Ok(m) => m,
            Err(ChallengeError::Malformed(detail)) => {
                return error_response(StatusCode::BAD_REQUEST, "malformed-challenge", detail)
            }
            Err(ChallengeError::SignatureInvalid) => {
                return error_response(StatusCode::UNAUTHORIZED, "signature-invalid", "")
            }
            Err(ChallengeError::DecryptFailed) => {
                return error_response(StatusCode::UNAUTHORIZED, "decrypt-failed", "")
            }
            Err(e) => {
                return error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            }
        };

        let counter = match build_counter(&m, state.identity.private(), client_pub) {
            Ok(c) => c,
            Err(e) => {
                return error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            }
        };
        let session = state.sessions.lock().create(
            req.client,
            now_unix_secs(),
            state.config.session_ttl_secs,
        );
        Json(AuthResponse { counter: counter.payload, session }).into_response()
    })
}

async fn registration(
    State(state): State<Arc<XrfState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    instrumented(&state, paths::REGISTRATION, || {
        let Some(principal) = session_principal(&state, &headers) else {
            return error_response(StatusCode::UNAUTHORIZED, "unauthenticated", "");
        };
        let profile: XAppProfile = match parse_body(&body) {
            Ok(p) => p,
            Err(resp) => return resp,
        };
        if let Err(e) = profile.validate(&state.vocabulary) {
            return error_response(StatusCode::BAD_REQUEST, "invalid-profile", e.to_string());
        }
        match state.registry.lock().register(profile, principal, now_unix_secs()) {
            Ok(()) => StatusCode::OK.into_response(),
            Err(RegistryError::OwnerMismatch(id)) => error_response(
                StatusCode::CONFLICT,
                "uuid-collision",
                format!("instance {id} belongs to another principal"),
            ),
            Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    })
}

async fn profile_update(State(state): State<Arc<XrfState>>, body: Bytes) -> Response {
    instrumented(&state, paths::PROFILE_UPDATE, || {
        let update: ProfileUpdate = match parse_body(&body) {
            Ok(u) => u,
            Err(resp) => return resp,
        };
        if let Some(offering) = &update.offering {
            if !state.vocabulary.contains(offering) {
                return error_response(
                    StatusCode::BAD_REQUEST,
                    "invalid-profile",
                    format!("offering code {offering:?} is not in the configured vocabulary"),
                );
            }
        }
        match state.registry.lock().update_profile(&update) {
            Ok((profile, targets)) => {
                if !targets.is_empty() {
                    let _ = state.notify_tx.send(NotifyJob { profile, targets });
                }
                StatusCode::OK.into_response()
            }
            Err(RegistryError::UnknownInstance(id)) => error_response(
                StatusCode::NOT_FOUND,
                "unknown-instance",
                format!("no profile registered for {id}"),
            ),
            Err(e) => error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string()),
        }
    })
}

async fn discovery(
    State(state): State<Arc<XrfState>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    instrumented(&state, paths::DISCOVERY, || {
        let Some(offering) = params.get("xAppOffering") else {
            return error_response(StatusCode::BAD_REQUEST, "bad-query", "missing xAppOffering");
        };
        let Some(location) = params.get("xAppLocation") else {
            return error_response(StatusCode::BAD_REQUEST, "bad-query", "missing xAppLocation");
        };
        let requester = match params.get("requester") {
            None => None,
            Some(raw) => match Uuid::parse_str(raw) {
                Ok(id) => Some(id),
                Err(e) => {
                    return error_response(
                        StatusCode::BAD_REQUEST,
                        "bad-query",
                        format!("requester: {e}"),
                    )
                }
            },
        };
        let profiles = state.registry.lock().discover(offering, location, requester);
        Json(profiles).into_response()
    })
}

async fn access_token(
    State(state): State<Arc<XrfState>>,
    headers: HeaderMap,
    body: Bytes,
) -> Response {
    instrumented(&state, paths::ACCESS_TOKEN, || {
        let Some(principal) = session_principal(&state, &headers) else {
            return error_response(StatusCode::UNAUTHORIZED, "unauthenticated", "");
        };
        let req: TokenRequest = match parse_body(&body) {
            Ok(r) => r,
            Err(resp) => return resp,
        };

        let now = now_unix_secs();
        let ttl = state.config.token_ttl_secs;
        let exp = match state.registry.lock().prepare_token(
            req.consumer,
            req.provider,
            &req.endpoint,
            req.scope,
            principal,
            now,
            ttl,
        ) {
            Ok(exp) => exp,
            Err(RegistryError::UnknownPrincipal(id)) => {
                return error_response(
                    StatusCode::NOT_FOUND,
                    "unknown-principal",
                    format!("{id} is not registered"),
                )
            }
            Err(RegistryError::OwnerMismatch(id)) => {
                return error_response(
                    StatusCode::UNAUTHORIZED,
                    "not-owner",
                    format!("session does not own consumer profile {id}"),
                )
            }
            Err(RegistryError::ScopeNotAllowed) => {
                return error_response(
                    StatusCode::FORBIDDEN,
                    "scope-not-allowed",
                    format!("{} {} not permitted for this offering", req.scope, req.endpoint),
                )
            }
            Err(RegistryError::WriteConflict(conflict)) => {
                return error_response(
                    StatusCode::CONFLICT,
                    "write-conflict",
                    conflict.to_string(),
                )
            }
            Err(e) => {
                return error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string())
            }
        };

        // signing happens outside the store lock; only the reservation above
        // needed atomicity
        let Some(keypair) = state.pool.take(KEY_WAIT) else {
            state
                .registry
                .lock()
                .rollback_reservation(req.provider, &req.endpoint, req.scope);
            return error_response(
                StatusCode::SERVICE_UNAVAILABLE,
                "key-pool-exhausted",
                "no signing key became available in time",
            );
        };
        let claims = TokenClaims {
            iss: state.config.issuer.clone(),
            sub: req.consumer,
            aud: req.provider,
            scope: req.scope,
            exp,
            endpoint: req.endpoint.clone(),
        };
        let token = match xrf_crypto::issue_jwt(&claims, &keypair, now) {
            Ok(t) => t,
            Err(e) => {
                state
                    .registry
                    .lock()
                    .rollback_reservation(req.provider, &req.endpoint, req.scope);
                return error_response(StatusCode::INTERNAL_SERVER_ERROR, "internal", e.to_string());
            }
        };
        state.registry.lock().record_issued(keypair, claims);

        Json(TokenResponse {
            access_token: token.compact,
            token_type: "Bearer".to_owned(),
            expires_in: ttl,
        })
        .into_response()
    })
}

async fn introspection(State(state): State<Arc<XrfState>>, body: Bytes) -> Response {
    instrumented(&state, paths::INTROSPECTION, || {
        let req: IntrospectionRequest = match parse_body(&body) {
            Ok(r) => r,
            Err(resp) => return resp,
        };
        let token = SignedToken::new(req.token);
        let header = match token.decode_header() {
            Ok(h) => h,
            Err(VerifyError::Malformed(detail)) => {
                return error_response(StatusCode::BAD_REQUEST, "malformed-token", detail)
            }
            Err(e) => return error_response(StatusCode::BAD_REQUEST, "malformed-token", e.to_string()),
        };

        let public = state
            .registry
            .lock()
            .token_record(&header.kid)
            .map(|rec| rec.keypair.public().clone());
        let Some(public) = public else {
            return Json(IntrospectionResponse::inactive()).into_response();
        };

        match verify_token_signature(&token, &public) {
            Ok(claims) if claims.exp > now_unix_secs() => {
                Json(IntrospectionResponse::active(&claims)).into_response()
            }
            _ => Json(IntrospectionResponse::inactive()).into_response(),
        }
    })
}

async fn jwks(
    State(state): State<Arc<XrfState>>,
    Query(params): Query<HashMap<String, String>>,
) -> Response {
    instrumented(&state, paths::JWKS, || {
        let Some(raw) = params.get("kid") else {
            return error_response(StatusCode::BAD_REQUEST, "bad-query", "missing kid");
        };
        let kid = match Uuid::parse_str(raw) {
            Ok(k) => k,
            Err(e) => {
                return error_response(StatusCode::BAD_REQUEST, "bad-query", format!("kid: {e}"))
            }
        };
        let keypair = state
            .registry
            .lock()
            .token_record(&kid)
            .map(|rec| rec.keypair.clone());
        match keypair {
            Some(kp) => Json(jwks_entry(&kp)).into_response(),
            None => error_response(
                StatusCode::NOT_FOUND,
                "unknown-kid",
                format!("no key published under {kid}"),
            ),
        }
    })
}

async fn stats(State(state): State<Arc<XrfState>>) -> Response {
    Json(state.stats.snapshot()).into_response()
}

async fn stats_reset(State(state): State<Arc<XrfState>>) -> Response {
    state.stats.reset();
    StatusCode::OK.into_response()
}
