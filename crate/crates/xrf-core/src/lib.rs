//! Domain model for the XRF framework.
//!
//! Everything in this crate is a plain value with no I/O: xApp profiles and
//! their registry metadata, token claims, the permissions matrix that gates
//! access-token scopes, and the provider-selection rule used after discovery.
//! The server owns all mutation; these types are safe to copy between
//! concurrent workers.

pub mod permissions;
pub mod profile;
pub mod scope;
pub mod select;
pub mod token;
pub mod wire;

pub use permissions::{ExclusiveGrant, GrantConflict, PermissionsMatrix, Rules};
pub use profile::{OfferingVocabulary, ProfileError, ProfileUpdate, XAppProfile, XAppStatus};
pub use scope::Scope;
pub use select::{select_provider, SelectError};
pub use token::{ClaimsError, TokenClaims, TokenHeader};
