//! Cross-checks the hand-rolled compact token codec against an independent
//! RFC 7519 implementation (`jsonwebtoken`). The production code never links
//! that crate; it exists only as an oracle here.

use std::sync::OnceLock;

use uuid::Uuid;
use xrf_core::{Scope, TokenClaims};
use xrf_crypto::{issue_jwt, jwks_entry, public_key_from_jwk, verify_jwt, KeyPair, SignedToken};

fn key() -> &'static KeyPair {
    static KEY: OnceLock<KeyPair> = OnceLock::new();
    KEY.get_or_init(|| KeyPair::generate().unwrap())
}

fn sample_claims(aud: Uuid) -> TokenClaims {
    TokenClaims {
        iss: "xrf".into(),
        sub: Uuid::new_v4(),
        aud,
        scope: Scope::Read,
        exp: xrf_metricsless_now() + 300,
        endpoint: "/metrics".into(),
    }
}

// wall clock without depending on xrf-metrics here
fn xrf_metricsless_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .unwrap()
        .as_secs()
}

#[test]
fn our_tokens_validate_under_jsonwebtoken() {
    let aud = Uuid::new_v4();
    let claims = sample_claims(aud);
    let token = issue_jwt(&claims, key(), claims.exp - 300).unwrap();

    let decoding =
        jsonwebtoken::DecodingKey::from_rsa_pem(key().public_pem().unwrap().as_bytes()).unwrap();
    let mut validation = jsonwebtoken::Validation::new(jsonwebtoken::Algorithm::RS256);
    validation.leeway = 0;
    validation.set_audience(&[aud.to_string()]);

    let decoded =
        jsonwebtoken::decode::<serde_json::Value>(&token.compact, &decoding, &validation).unwrap();
    assert_eq!(decoded.header.alg, jsonwebtoken::Algorithm::RS256);
    assert_eq!(decoded.header.kid.as_deref(), Some(key().kid.to_string().as_str()));
    assert_eq!(decoded.claims["sub"], claims.sub.to_string());
    assert_eq!(decoded.claims["scope"], "read");
    assert_eq!(decoded.claims["endpoint"], "/metrics");
    assert_eq!(decoded.claims["exp"], claims.exp);
}

#[test]
fn jsonwebtoken_issued_tokens_validate_under_ours() {
    let aud = Uuid::new_v4();
    let claims = sample_claims(aud);

    let header = jsonwebtoken::Header {
        alg: jsonwebtoken::Algorithm::RS256,
        kid: Some(key().kid.to_string()),
        ..Default::default()
    };
    let encoding =
        jsonwebtoken::EncodingKey::from_rsa_pem(key().private_pem().unwrap().as_bytes()).unwrap();
    let compact = jsonwebtoken::encode(&header, &claims, &encoding).unwrap();

    let verified = verify_jwt(
        &SignedToken::new(compact),
        key().public(),
        aud,
        claims.exp - 10,
    )
    .unwrap();
    assert_eq!(verified, claims);
}

#[test]
fn jsonwebtoken_accepts_key_rebuilt_from_our_jwks_entry() {
    let aud = Uuid::new_v4();
    let claims = sample_claims(aud);
    let token = issue_jwt(&claims, key(), claims.exp - 300).unwrap();

    let jwk = jwks_entry(key());
    let decoding = jsonwebtoken::DecodingKey::from_rsa_components(&jwk.n, &jwk.e).unwrap();
    let mut validation = jsonwebtoken::Validation::new(jsonwebtoken::Algorithm::RS256);
    validation.leeway = 0;
    validation.set_audience(&[aud.to_string()]);
    assert!(jsonwebtoken::decode::<serde_json::Value>(&token.compact, &decoding, &validation).is_ok());

    // and the rebuilt rsa key agrees with the original
    assert_eq!(&public_key_from_jwk(&jwk).unwrap(), key().public());
}
