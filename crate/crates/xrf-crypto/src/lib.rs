//! Cryptography for the XRF framework.
//!
//! Three concerns live here: the mutual challenge-response authentication
//! between client and server (a signed random nonce wrapped in a hybrid
//! RSA-OAEP / AES-256-GCM envelope), RS256 JWT issuance and verification,
//! and JWKS publication of per-token public keys.
//!
//! All operations are pure functions over value inputs and safe for
//! unrestricted concurrent use. Nothing here fails open: any signature or
//! authentication failure surfaces as an error, never as a default value.

pub mod challenge;
pub mod jwks;
pub mod jwt;
pub mod keys;

pub use challenge::{
    build_challenge, build_counter, fresh_nonce, open_challenge, verify_counter, ChallengeEnvelope,
    ChallengeError, Nonce, NONCE_LEN,
};
pub use jwks::{jwks_entry, public_key_from_jwk, Jwk, JwksError};
pub use jwt::{issue_jwt, verify_jwt, verify_token_signature, JwtError, SignedToken, VerifyError};
pub use keys::{KeyError, KeyPair, TrustStore};

#[cfg(test)]
pub(crate) mod testkeys {
    use std::sync::OnceLock;

    use crate::keys::KeyPair;

    /// Three key pairs shared across the unit-test binary; RSA generation is
    /// too slow to repeat per test.
    pub fn trio() -> &'static [KeyPair; 3] {
        static KEYS: OnceLock<[KeyPair; 3]> = OnceLock::new();
        KEYS.get_or_init(|| {
            [
                KeyPair::generate().unwrap(),
                KeyPair::generate().unwrap(),
                KeyPair::generate().unwrap(),
            ]
        })
    }
}
