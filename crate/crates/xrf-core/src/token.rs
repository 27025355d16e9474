use serde::{Deserialize, Serialize};
use uuid::Uuid;

use crate::scope::Scope;

/// JWT payload claims for one access grant.
///
/// `endpoint` narrows the grant to a single ServiceRequestAPI path on the
/// provider identified by `aud`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenClaims {
    pub iss: String,
    pub sub: Uuid,
    pub aud: Uuid,
    pub scope: Scope,
    pub exp: u64,
    pub endpoint: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ClaimsError {
    #[error("token expiry {exp} is not after issuance time {now}")]
    ExpNotInFuture { exp: u64, now: u64 },
    #[error("token subject equals audience ({0})")]
    SubjectEqualsAudience(Uuid),
}

impl TokenClaims {
    /// Claim invariants at issuance time: expiry strictly in the future and
    /// a consumer distinct from the provider.
    pub fn validate_at(&self, now: u64) -> Result<(), ClaimsError> {
        if self.exp <= now {
            return Err(ClaimsError::ExpNotInFuture { exp: self.exp, now });
        }
        if self.sub == self.aud {
            return Err(ClaimsError::SubjectEqualsAudience(self.sub));
        }
        Ok(())
    }
}

pub const TOKEN_ALG: &str = "RS256";
pub const TOKEN_TYP: &str = "JWT";

/// JWT header. `alg` and `typ` are fixed literals; `kid` names the key pair
/// that signed the token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenHeader {
    pub alg: String,
    pub typ: String,
    pub kid: Uuid,
}

impl TokenHeader {
    pub fn new(kid: Uuid) -> Self {
        Self {
            alg: TOKEN_ALG.to_owned(),
            typ: TOKEN_TYP.to_owned(),
            kid,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.alg != TOKEN_ALG {
            return Err(format!("unsupported alg {:?}", self.alg));
        }
        if self.typ != TOKEN_TYP {
            return Err(format!("unsupported typ {:?}", self.typ));
        }
        Ok(())
    }
}
