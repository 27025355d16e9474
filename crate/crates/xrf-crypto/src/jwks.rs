use base64::engine::general_purpose::URL_SAFE_NO_PAD as B64URL;
use base64::Engine;
use rsa::traits::PublicKeyParts;
use rsa::{BigUint, RsaPublicKey};
use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::keys::KeyPair;

/// One RSA entry of a JSON Web Key Set: modulus and exponent are
/// Base64url-encoded big-endian bytes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Jwk {
    pub kty: String,
    pub kid: Uuid,
    pub n: String,
    pub e: String,
}

#[derive(Debug, thiserror::Error)]
pub enum JwksError {
    #[error("unsupported key type {0:?}")]
    UnsupportedKeyType(String),
    #[error("bad base64url in {field}: {detail}")]
    BadEncoding { field: &'static str, detail: String },
    #[error("numbers do not form a usable RSA key: {0}")]
    BadKey(String),
}

/// Publishes the public half of a token-signing key pair.
pub fn jwks_entry(key: &KeyPair) -> Jwk {
    Jwk {
        kty: "RSA".to_owned(),
        kid: key.kid,
        n: B64URL.encode(key.public().n().to_bytes_be()),
        e: B64URL.encode(key.public().e().to_bytes_be()),
    }
}

/// Rebuilds the verification key from a published entry.
pub fn public_key_from_jwk(jwk: &Jwk) -> Result<RsaPublicKey, JwksError> {
    if jwk.kty != "RSA" {
        return Err(JwksError::UnsupportedKeyType(jwk.kty.clone()));
    }
    let n = B64URL.decode(&jwk.n).map_err(|e| JwksError::BadEncoding {
        field: "n",
        detail: e.to_string(),
    })?;
    let e = B64URL.decode(&jwk.e).map_err(|e| JwksError::BadEncoding {
        field: "e",
        detail: e.to_string(),
    })?;
    RsaPublicKey::new(BigUint::from_bytes_be(&n), BigUint::from_bytes_be(&e))
        .map_err(|e| JwksError::BadKey(e.to_string()))
}
