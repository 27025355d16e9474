use std::collections::HashMap;
use std::path::Path;

use rsa::pkcs8::{DecodePrivateKey, DecodePublicKey, EncodePrivateKey, EncodePublicKey, LineEnding};
use rsa::{RsaPrivateKey, RsaPublicKey};
use uuid::Uuid;

pub const RSA_BITS: usize = 2048;

#[derive(Debug, thiserror::Error)]
pub enum KeyError {
    #[error("key generation failed: {0}")]
    Generation(rsa::Error),
    #[error("PEM encoding failed: {0}")]
    PemEncode(String),
    #[error("PEM decoding failed: {0}")]
    PemDecode(String),
    #[error("trust store file {path}: {detail}")]
    TrustStoreFile { path: String, detail: String },
}

/// An RSA key pair with the key id it is published under.
#[derive(Debug, Clone)]
pub struct KeyPair {
    pub kid: Uuid,
    private: RsaPrivateKey,
    public: RsaPublicKey,
}

impl KeyPair {
    /// Generates a fresh 2048-bit pair with a fresh kid.
    pub fn generate() -> Result<Self, KeyError> {
        let mut rng = rand::thread_rng();
        let private = RsaPrivateKey::new(&mut rng, RSA_BITS).map_err(KeyError::Generation)?;
        let public = RsaPublicKey::from(&private);
        Ok(Self {
            kid: Uuid::new_v4(),
            private,
            public,
        })
    }

    pub fn from_private(kid: Uuid, private: RsaPrivateKey) -> Self {
        let public = RsaPublicKey::from(&private);
        Self { kid, private, public }
    }

    pub fn private(&self) -> &RsaPrivateKey {
        &self.private
    }

    pub fn public(&self) -> &RsaPublicKey {
        &self.public
    }

    /// PKCS#8 PEM of the private half.
    pub fn private_pem(&self) -> Result<String, KeyError> {
        self.private
            .to_pkcs8_pem(LineEnding::LF)
            .map(|z| z.to_string())
            .map_err(|e| KeyError::PemEncode(e.to_string()))
    }

    /// SPKI PEM of the public half.
    pub fn public_pem(&self) -> Result<String, KeyError> {
        self.public
            .to_public_key_pem(LineEnding::LF)
            .map_err(|e| KeyError::PemEncode(e.to_string()))
    }

    pub fn from_private_pem(kid: Uuid, pem: &str) -> Result<Self, KeyError> {
        let private =
            RsaPrivateKey::from_pkcs8_pem(pem).map_err(|e| KeyError::PemDecode(e.to_string()))?;
        Ok(Self::from_private(kid, private))
    }
}

pub fn public_key_from_pem(pem: &str) -> Result<RsaPublicKey, KeyError> {
    RsaPublicKey::from_public_key_pem(pem).map_err(|e| KeyError::PemDecode(e.to_string()))
}

/// Pre-shared public keys of the principals a party is willing to talk to.
///
/// Provisioned from configuration at startup; the protocol assumes both
/// sides already hold the peer's public key before the first challenge.
#[derive(Debug, Clone, Default)]
pub struct TrustStore {
    keys: HashMap<Uuid, RsaPublicKey>,
}

impl TrustStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, principal: Uuid, key: RsaPublicKey) {
        self.keys.insert(principal, key);
    }

    pub fn lookup(&self, principal: &Uuid) -> Option<&RsaPublicKey> {
        self.keys.get(principal)
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Serializes as a JSON object mapping principal UUID to public key PEM.
    pub fn to_json(&self) -> Result<String, KeyError> {
        let mut map = std::collections::BTreeMap::new();
        for (uuid, key) in &self.keys {
            let pem = key
                .to_public_key_pem(LineEnding::LF)
                .map_err(|e| KeyError::PemEncode(e.to_string()))?;
            map.insert(uuid.to_string(), pem);
        }
        serde_json::to_string_pretty(&map).map_err(|e| KeyError::PemEncode(e.to_string()))
    }

    pub fn from_json(json: &str) -> Result<Self, KeyError> {
        let map: std::collections::BTreeMap<String, String> =
            serde_json::from_str(json).map_err(|e| KeyError::PemDecode(e.to_string()))?;
        let mut store = Self::new();
        for (uuid, pem) in map {
            let principal = Uuid::parse_str(&uuid)
                .map_err(|e| KeyError::PemDecode(format!("bad principal uuid {uuid:?}: {e}")))?;
            store.insert(principal, public_key_from_pem(&pem)?);
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self, KeyError> {
        let text = std::fs::read_to_string(path).map_err(|e| KeyError::TrustStoreFile {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| KeyError::TrustStoreFile {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), KeyError> {
        std::fs::write(path, self.to_json()?).map_err(|e| KeyError::TrustStoreFile {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    }
}
