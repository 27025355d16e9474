use aes_gcm::aead::{Aead, KeyInit};
use aes_gcm::{Aes256Gcm, Key, Nonce as GcmNonce};
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine;
use rand::RngCore;
use rsa::signature::{SignatureEncoding, Signer, Verifier};
use rsa::{Oaep, RsaPrivateKey, RsaPublicKey};
use serde::{Deserialize, Serialize};
use sha2::Sha256;

pub const NONCE_LEN: usize = 32;
const CONTENT_KEY_LEN: usize = 32;
const GCM_IV_LEN: usize = 12;

/// The random number exchanged during mutual authentication.
pub type Nonce = [u8; NONCE_LEN];

pub fn fresh_nonce() -> Nonce {
    let mut m = [0u8; NONCE_LEN];
    rand::thread_rng().fill_bytes(&mut m);
    m
}

/// Base64/JSON envelope carrying a signed-and-encrypted nonce.
///
/// The payload is standard Base64 (with padding) of a JSON object
/// `{ek, iv, ct}`: an RSA-OAEP wrapped AES-256-GCM content key, the GCM IV,
/// and the ciphertext of the inner `{m, sig}` JSON. Only the holder of the
/// recipient's private key can open it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ChallengeEnvelope {
    pub payload: String,
}

#[derive(Debug, thiserror::Error)]
pub enum ChallengeError {
    #[error("malformed envelope: {0}")]
    Malformed(String),
    #[error("envelope decryption failed")]
    DecryptFailed,
    #[error("nonce signature verification failed")]
    SignatureInvalid,
    #[error("envelope encryption failed: {0}")]
    EncryptFailed(String),
}

#[derive(Serialize, Deserialize)]
struct Outer {
    ek: String,
    iv: String,
    ct: String,
}

#[derive(Serialize, Deserialize)]
struct Inner {
    m: String,
    sig: String,
}

fn seal(m: &Nonce, signer: &RsaPrivateKey, recipient: &RsaPublicKey) -> Result<ChallengeEnvelope, ChallengeError> {
    let signing_key = rsa::pkcs1v15::SigningKey::<Sha256>::new(signer.clone());
    let sig = signing_key.sign(m).to_bytes();

    let inner = serde_json::to_vec(&Inner {
        m: BASE64.encode(m),
        sig: BASE64.encode(&sig),
    })
    .map_err(|e| ChallengeError::EncryptFailed(e.to_string()))?;

    let mut rng = rand::thread_rng();
    let mut content_key = [0u8; CONTENT_KEY_LEN];
    rng.fill_bytes(&mut content_key);
    let mut iv = [0u8; GCM_IV_LEN];
    rng.fill_bytes(&mut iv);

    let cipher = Aes256Gcm::new(Key::<Aes256Gcm>::from_slice(&content_key));
    let ct = cipher
        .encrypt(GcmNonce::from_slice(&iv), inner.as_slice())
        .map_err(|e| ChallengeError::EncryptFailed(e.to_string()))?;

    let ek = recipient
        .encrypt(&mut rng, Oaep::new::<Sha256>(), &content_key)
        .map_err(|e| ChallengeError::EncryptFailed(e.to_string()))?;

    let outer = serde_json::to_vec(&Outer {
        ek: BASE64.encode(&ek),
        iv: BASE64.encode(iv),
        ct: BASE64.encode(&ct),
    })
    .map_err(|e| ChallengeError::EncryptFailed(e.to_string()))?;

    Ok(ChallengeEnvelope {
        payload: BASE64.encode(&outer),
    })
}

fn unseal(
    env: &ChallengeEnvelope,
    own: &RsaPrivateKey,
    sender: &RsaPublicKey,
) -> Result<Nonce, ChallengeError> {
    let outer_bytes = BASE64
        .decode(&env.payload)
        .map_err(|e| ChallengeError::Malformed(format!("payload base64: {e}")))?;
    let outer: Outer = serde_json::from_slice(&outer_bytes)
        .map_err(|e| ChallengeError::Malformed(format!("outer json: {e}")))?;

    let ek = BASE64
        .decode(&outer.ek)
        .map_err(|e| ChallengeError::Malformed(format!("ek base64: {e}")))?;
    let iv = BASE64
        .decode(&outer.iv)
        .map_err(|e| ChallengeError::Malformed(format!("iv base64: {e}")))?;
    let ct = BASE64
        .decode(&outer.ct)
        .map_err(|e| ChallengeError::Malformed(format!("ct base64: {e}")))?;
    if iv.len() != GCM_IV_LEN {
        return Err(ChallengeError::Malformed(format!("iv length {}", iv.len())));
    }

    let content_key = own
        .decrypt(Oaep::new::<Sha256>(), &ek)
        .map_err(|_| ChallengeError::DecryptFailed)?;
    if content_key.len() != CONTENT_KEY_LEN {
        return Err(ChallengeError::DecryptFailed);
    }

    let cipher = Aes256Gcm::new(Key::<Aes256Gcm>::from_slice(&content_key));
    let inner_bytes = cipher
        .decrypt(GcmNonce::from_slice(&iv), ct.as_slice())
        .map_err(|_| ChallengeError::DecryptFailed)?;

    let inner: Inner = serde_json::from_slice(&inner_bytes)
        .map_err(|e| ChallengeError::Malformed(format!("inner json: {e}")))?;
    let m_bytes = BASE64
        .decode(&inner.m)
        .map_err(|e| ChallengeError::Malformed(format!("m base64: {e}")))?;
    let sig = BASE64
        .decode(&inner.sig)
        .map_err(|e| ChallengeError::Malformed(format!("sig base64: {e}")))?;
    let m: Nonce = m_bytes
        .try_into()
        .map_err(|_| ChallengeError::Malformed("nonce length".into()))?;

    let verifying_key = rsa::pkcs1v15::VerifyingKey::<Sha256>::new(sender.clone());
    let signature = rsa::pkcs1v15::Signature::try_from(sig.as_slice())
        .map_err(|_| ChallengeError::SignatureInvalid)?;
    verifying_key
        .verify(&m, &signature)
        .map_err(|_| ChallengeError::SignatureInvalid)?;

    Ok(m)
}

/// Signs `m` with the caller's private key and envelopes `(m, sig)` for the
/// peer. First message of the mutual authentication flow.
pub fn build_challenge(
    m: &Nonce,
    signer_private: &RsaPrivateKey,
    peer_public: &RsaPublicKey,
) -> Result<ChallengeEnvelope, ChallengeError> {
    seal(m, signer_private, peer_public)
}

/// Opens a challenge: decrypts with the caller's private key and returns `m`
/// iff the signature over it verifies under the claimed sender's public key.
pub fn open_challenge(
    env: &ChallengeEnvelope,
    own_private: &RsaPrivateKey,
    peer_public: &RsaPublicKey,
) -> Result<Nonce, ChallengeError> {
    unseal(env, own_private, peer_public)
}

/// The responder's counter-message: the same construction with roles
/// swapped, echoing the nonce it received.
pub fn build_counter(
    m: &Nonce,
    own_private: &RsaPrivateKey,
    peer_public: &RsaPublicKey,
) -> Result<ChallengeEnvelope, ChallengeError> {
    seal(m, own_private, peer_public)
}

/// Opens a counter-challenge and checks it echoes the in-flight nonce.
///
/// `Ok(false)` means the envelope opened but the peer is not authenticated:
/// either the signature did not verify or the echoed nonce differs from
/// `expected` (which also rejects replays of counters for earlier nonces).
pub fn verify_counter(
    env: &ChallengeEnvelope,
    own_private: &RsaPrivateKey,
    peer_public: &RsaPublicKey,
    expected: &Nonce,
) -> Result<bool, ChallengeError> {
    match unseal(env, own_private, peer_public) {
        Ok(m) => Ok(m == *expected),
        Err(ChallengeError::SignatureInvalid) => Ok(false),
        Err(other) => Err(other),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testkeys;

    #[test]
    fn round_trip_recovers_nonce() {
        let [client, server, _] = testkeys::trio();
        let m = fresh_nonce();
        let env = build_challenge(&m, client.private(), server.public()).unwrap();
        let opened = open_challenge(&env, server.private(), client.public()).unwrap();
        assert_eq!(opened, m);
    }

    #[test]
    fn wrong_private_key_cannot_open() {
        let [client, server, third] = testkeys::trio();
        let m = fresh_nonce();
        let env = build_challenge(&m, client.private(), server.public()).unwrap();
        let err = open_challenge(&env, third.private(), client.public()).unwrap_err();
        assert!(matches!(err, ChallengeError::DecryptFailed));
    }

    #[test]
    fn signature_by_third_key_is_rejected_distinctly() {
        let [client, server, third] = testkeys::trio();
        let m = fresh_nonce();
        // signed by `third`, but the server verifies against `client`'s key
        let env = build_challenge(&m, third.private(), server.public()).unwrap();
        let err = open_challenge(&env, server.private(), client.public()).unwrap_err();
        assert!(matches!(err, ChallengeError::SignatureInvalid));
    }

    #[test]
    fn outer_json_has_expected_schema() {
        let [client, server, _] = testkeys::trio();
        let env = build_challenge(&fresh_nonce(), client.private(), server.public()).unwrap();
        // independent parse, not via the Outer struct
        let bytes = BASE64.decode(&env.payload).unwrap();
        let value: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
        let obj = value.as_object().unwrap();
        assert_eq!(obj.len(), 3);
        for field in ["ek", "iv", "ct"] {
            let encoded = obj[field].as_str().unwrap();
            assert!(BASE64.decode(encoded).is_ok(), "{field} must be base64");
        }
    }

    #[test]
    fn mutual_flow_with_honest_parties() {
        let [client, server, _] = testkeys::trio();
        let m = fresh_nonce();
        let challenge = build_challenge(&m, client.private(), server.public()).unwrap();
        let received = open_challenge(&challenge, server.private(), client.public()).unwrap();
        let counter = build_counter(&received, server.private(), client.public()).unwrap();
        assert!(verify_counter(&counter, client.private(), server.public(), &m).unwrap());
    }

    #[test]
    fn counter_with_different_nonce_is_rejected() {
        let [client, server, _] = testkeys::trio();
        let m = fresh_nonce();
        let m_prime = fresh_nonce();
        let counter = build_counter(&m_prime, server.private(), client.public()).unwrap();
        assert!(!verify_counter(&counter, client.private(), server.public(), &m).unwrap());
    }

    #[test]
    fn replayed_counter_fails_for_new_nonce() {
        let [client, server, _] = testkeys::trio();
        // first exchange, attacker records the counter
        let m1 = fresh_nonce();
        let recorded = build_counter(&m1, server.private(), client.public()).unwrap();
        assert!(verify_counter(&recorded, client.private(), server.public(), &m1).unwrap());
        // replay against a fresh challenge nonce
        let m2 = fresh_nonce();
        assert!(!verify_counter(&recorded, client.private(), server.public(), &m2).unwrap());
    }

    #[test]
    fn bit_flips_never_recover_the_nonce() {
        let [client, server, _] = testkeys::trio();
        let m = fresh_nonce();
        let env = build_challenge(&m, client.private(), server.public()).unwrap();
        let bytes = BASE64.decode(&env.payload).unwrap();

        let mut hits = 0;
        for i in (0..bytes.len()).step_by((bytes.len() / 64).max(1)) {
            let mut mutated = bytes.clone();
            mutated[i] ^= 0x01;
            let tampered = ChallengeEnvelope {
                payload: BASE64.encode(&mutated),
            };
            match open_challenge(&tampered, server.private(), client.public()) {
                Ok(recovered) => assert_ne!(recovered, m, "tampered envelope yielded the nonce"),
                Err(_) => hits += 1,
            }
        }
        assert!(hits > 0);
    }

    #[test]
    fn garbage_payload_is_malformed() {
        let [client, server, _] = testkeys::trio();
        let env = ChallengeEnvelope {
            payload: "not base64 at all!!!".into(),
        };
        assert!(matches!(
            open_challenge(&env, server.private(), client.public()).unwrap_err(),
            ChallengeError::Malformed(_)
        ));
    }
}
