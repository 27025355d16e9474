use std::path::{Path, PathBuf};

use uuid::Uuid;

use xrf_core::{OfferingVocabulary, PermissionsMatrix, Rules};
use xrf_crypto::{KeyPair, TrustStore};

pub const DEFAULT_TOKEN_TTL_SECS: u64 = 300;
pub const DEFAULT_SESSION_TTL_SECS: u64 = 600;
pub const DEFAULT_KEY_POOL_CAPACITY: usize = 64;
pub const DEFAULT_KEY_RETENTION_SECS: u64 = 300;

/// Offerings accepted when no vocabulary file is configured.
pub const DEFAULT_OFFERINGS: &[&str] = &["KPIMON", "TRAFFIC-STEER", "RC"];

/// Permissions rules used when no matrix file is configured.
pub fn default_rules() -> Rules {
    serde_json::from_value(serde_json::json!({
        "KPIMON": {"/metrics": ["read"], "/control": ["read", "write"]},
        "TRAFFIC-STEER": {"/steer": ["read", "write"]},
        "RC": {"/policy": ["read", "write"]}
    }))
    .expect("default rules are well-formed")
}

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub listen: String,
    /// Request-handling concurrency level; also sizes the key-pool refill.
    pub workers: usize,
    pub token_ttl_secs: u64,
    pub permissions_path: Option<PathBuf>,
    pub trust_store_path: PathBuf,
    pub offerings_path: Option<PathBuf>,
    /// PKCS#8 PEM private key the server authenticates with.
    pub identity_path: PathBuf,
    pub issuer: String,
    pub key_pool_capacity: usize,
    pub session_ttl_secs: u64,
    pub key_retention_secs: u64,
    /// One JSON line per request on stdout.
    pub access_log: bool,
}

impl ServerConfig {
    pub fn new(trust_store_path: PathBuf, identity_path: PathBuf) -> Self {
        Self {
            listen: "127.0.0.1:8080".to_owned(),
            workers: 4,
            token_ttl_secs: DEFAULT_TOKEN_TTL_SECS,
            permissions_path: None,
            trust_store_path,
            offerings_path: None,
            identity_path,
            issuer: "xrf".to_owned(),
            key_pool_capacity: DEFAULT_KEY_POOL_CAPACITY,
            session_ttl_secs: DEFAULT_SESSION_TTL_SECS,
            key_retention_secs: DEFAULT_KEY_RETENTION_SECS,
            access_log: true,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.workers == 0 {
            return Err(ConfigError::Invalid("workers must be >= 1".into()));
        }
        if self.token_ttl_secs == 0 {
            return Err(ConfigError::Invalid("token TTL must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {detail}")]
    File { path: String, detail: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

fn read_file(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::File {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Everything loaded from disk that the running server needs.
pub struct LoadedConfig {
    pub config: ServerConfig,
    pub matrix: PermissionsMatrix,
    pub vocabulary: OfferingVocabulary,
    pub trust: TrustStore,
    pub identity: KeyPair,
}

impl LoadedConfig {
    pub fn load(config: ServerConfig) -> Result<Self, ConfigError> {
        config.validate()?;

        let rules: Rules = match &config.permissions_path {
            Some(path) => serde_json::from_str(&read_file(path)?).map_err(|e| ConfigError::File {
                path: path.display().to_string(),
                detail: format!("permissions matrix parse: {e}"),
            })?,
            None => default_rules(),
        };

        let vocabulary = match &config.offerings_path {
            Some(path) => {
                serde_json::from_str(&read_file(path)?).map_err(|e| ConfigError::File {
                    path: path.display().to_string(),
                    detail: format!("offering vocabulary parse: {e}"),
                })?
            }
            None => OfferingVocabulary::new(DEFAULT_OFFERINGS.iter().copied()),
        };

        let trust = TrustStore::load(&config.trust_store_path).map_err(|e| ConfigError::File {
            path: config.trust_store_path.display().to_string(),
            detail: e.to_string(),
        })?;

        let identity_pem = read_file(&config.identity_path)?;
        // a <uuid>.pem filename doubles as the key id; otherwise assign one
        let kid = config
            .identity_path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| Uuid::parse_str(s).ok())
            .unwrap_or_else(Uuid::new_v4);
        let identity = KeyPair::from_private_pem(kid, &identity_pem).map_err(|e| {
            ConfigError::File {
                path: config.identity_path.display().to_string(),
                detail: e.to_string(),
            }
        })?;

        // every offering referenced by the rules should be a known code
        for offering in rules.keys() {
            if !vocabulary.contains(offering) {
                return Err(ConfigError::Invalid(format!(
                    "permissions matrix references offering {offering:?} missing from the vocabulary"
                )));
            }
        }

        Ok(Self {
            config,
            matrix: PermissionsMatrix::from_rules(rules),
            vocabulary,
            trust,
            identity,
        })
    }
}
