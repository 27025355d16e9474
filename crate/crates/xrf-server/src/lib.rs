//! The XRF server.
//!
//! An HTTP service over an in-memory registry: mutual challenge-response
//! authentication, xApp profile registration and discovery, access-token
//! issuance gated by the permissions matrix (with single-holder WRITE
//! exclusivity), RFC 7662-style introspection, a JWKS endpoint for
//! per-token public keys, and best-effort profile-update fan-out to
//! consumers.
//!
//! Request handlers run synchronous cores on a configurable number of
//! worker threads; all registry mutation goes through one coarse store
//! lock, which keeps the exclusivity invariant trivial to uphold under
//! arbitrary interleaving.

pub mod config;
pub mod http;
pub mod keypool;
pub mod notify;
pub mod registry;
pub mod sessions;
pub mod stats;

pub use config::{ConfigError, LoadedConfig, ServerConfig};
pub use http::{bind, router, run, XrfState};
pub use keypool::KeyPool;
pub use registry::{Registry, RegistryError, StoredProfile, TokenRecord};
