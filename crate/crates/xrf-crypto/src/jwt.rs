use base64::engine::general_purpose::URL_SAFE_NO_PAD as B64URL;
use base64::Engine;
use rsa::signature::{SignatureEncoding, Signer, Verifier};
use rsa::RsaPublicKey;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use uuid::Uuid;

use xrf_core::token::{ClaimsError, TokenClaims, TokenHeader};

use crate::keys::KeyPair;

/// A compact JWS: `base64url(header).base64url(payload).base64url(signature)`,
/// Base64url without padding throughout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignedToken {
    pub compact: String,
}

#[derive(Debug, thiserror::Error)]
pub enum JwtError {
    #[error("invalid claims: {0}")]
    InvalidClaims(#[from] ClaimsError),
    #[error("token encoding failed: {0}")]
    Encoding(String),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum VerifyError {
    #[error("malformed token: {0}")]
    Malformed(String),
    #[error("token signature invalid")]
    BadSignature,
    #[error("token expired")]
    Expired,
    #[error("token audience mismatch: expected {expected}, token has {actual}")]
    AudienceMismatch { expected: Uuid, actual: Uuid },
}

impl SignedToken {
    pub fn new(compact: impl Into<String>) -> Self {
        Self { compact: compact.into() }
    }

    fn segments(&self) -> Result<(&str, &str, &str), VerifyError> {
        let mut parts = self.compact.split('.');
        match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(h), Some(p), Some(s), None) if !h.is_empty() && !p.is_empty() && !s.is_empty() => {
                Ok((h, p, s))
            }
            _ => Err(VerifyError::Malformed(
                "expected exactly three non-empty dot-separated segments".into(),
            )),
        }
    }

    /// Parses and validates the header segment without touching the
    /// signature. Used to learn the `kid` before a key is available.
    pub fn decode_header(&self) -> Result<TokenHeader, VerifyError> {
        let (h, _, _) = self.segments()?;
        let bytes = B64URL
            .decode(h)
            .map_err(|e| VerifyError::Malformed(format!("header base64url: {e}")))?;
        let header: TokenHeader = serde_json::from_slice(&bytes)
            .map_err(|e| VerifyError::Malformed(format!("header json: {e}")))?;
        header.validate().map_err(VerifyError::Malformed)?;
        Ok(header)
    }
}

/// Signs `claims` into a compact RS256 token under `key`.
///
/// `now` is the issuance instant used to check the claim invariants.
pub fn issue_jwt(claims: &TokenClaims, key: &KeyPair, now: u64) -> Result<SignedToken, JwtError> {
    claims.validate_at(now)?;
    let header = TokenHeader::new(key.kid);

    let header_b64 = B64URL.encode(
        serde_json::to_vec(&header).map_err(|e| JwtError::Encoding(e.to_string()))?,
    );
    let payload_b64 = B64URL.encode(
        serde_json::to_vec(claims).map_err(|e| JwtError::Encoding(e.to_string()))?,
    );
    let signing_input = format!("{header_b64}.{payload_b64}");

    let signing_key = rsa::pkcs1v15::SigningKey::<Sha256>::new(key.private().clone());
    let signature = signing_key.sign(signing_input.as_bytes()).to_bytes();

    Ok(SignedToken {
        compact: format!("{signing_input}.{}", B64URL.encode(&signature)),
    })
}

/// Checks structure and signature only, returning the claims. Expiry and
/// audience are the caller's concern (token introspection checks expiry but
/// not audience; full validation is `verify_jwt`).
pub fn verify_token_signature(
    token: &SignedToken,
    public: &RsaPublicKey,
) -> Result<TokenClaims, VerifyError> {
    let (header_b64, payload_b64, sig_b64) = token.segments()?;
    token.decode_header()?;

    let signature_bytes = B64URL
        .decode(sig_b64)
        .map_err(|e| VerifyError::Malformed(format!("signature base64url: {e}")))?;
    let signature = rsa::pkcs1v15::Signature::try_from(signature_bytes.as_slice())
        .map_err(|_| VerifyError::BadSignature)?;

    let signing_input = format!("{header_b64}.{payload_b64}");
    let verifying_key = rsa::pkcs1v15::VerifyingKey::<Sha256>::new(public.clone());
    verifying_key
        .verify(signing_input.as_bytes(), &signature)
        .map_err(|_| VerifyError::BadSignature)?;

    // only decode the payload once the signature is known good
    let payload_bytes = B64URL
        .decode(payload_b64)
        .map_err(|e| VerifyError::Malformed(format!("payload base64url: {e}")))?;
    serde_json::from_slice(&payload_bytes)
        .map_err(|e| VerifyError::Malformed(format!("payload json: {e}")))
}

/// Full validation: signature, expiry (`exp > now`, so `now == exp` is
/// already expired), and audience.
pub fn verify_jwt(
    token: &SignedToken,
    public: &RsaPublicKey,
    expected_aud: Uuid,
    now: u64,
) -> Result<TokenClaims, VerifyError> {
    let claims = verify_token_signature(token, public)?;
    if now >= claims.exp {
        return Err(VerifyError::Expired);
    }
    if claims.aud != expected_aud {
        return Err(VerifyError::AudienceMismatch {
            expected: expected_aud,
            actual: claims.aud,
        });
    }
    Ok(claims)
}
