use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use uuid::Uuid;

/// Availability status of a registered xApp instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum XAppStatus {
    Registering,
    Available,
    Suspended,
    Deregistered,
}

/// Closed set of offering codes the registry accepts.
///
/// The codes themselves are deployment configuration (loaded from a file by
/// the server), not hard-coded here.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct OfferingVocabulary {
    codes: BTreeSet<String>,
}

impl OfferingVocabulary {
    pub fn new<I, S>(codes: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            codes: codes.into_iter().map(Into::into).collect(),
        }
    }

    pub fn contains(&self, code: &str) -> bool {
        self.codes.contains(code)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.codes.iter().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }
}

pub const MAX_NAME_CHARS: usize = 128;

/// Registry record for one xApp instance.
///
/// Field names on the wire are exactly the profile metadata keys
/// (`xAppInstanceID`, `xAppInstanceName`, ...); `endpointAddress` is the
/// reachable host:port of the instance's own service/notification listener.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct XAppProfile {
    #[serde(rename = "xAppInstanceID")]
    pub instance_id: Uuid,
    #[serde(rename = "xAppInstanceName")]
    pub instance_name: String,
    #[serde(rename = "xAppOffering")]
    pub offering: String,
    #[serde(rename = "xAppStatus")]
    pub status: XAppStatus,
    #[serde(rename = "xAppLocation")]
    pub location: String,
    #[serde(rename = "xAppLoad")]
    pub load: u64,
    #[serde(rename = "endpointAddress")]
    pub endpoint_address: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProfileError {
    #[error("instance name must not be empty")]
    EmptyName,
    #[error("instance name is {0} characters, maximum is {MAX_NAME_CHARS}")]
    NameTooLong(usize),
    #[error("offering code {0:?} is not in the configured vocabulary")]
    UnknownOffering(String),
    #[error("endpoint address must not be empty")]
    EmptyEndpoint,
}

impl XAppProfile {
    /// Builds a fresh profile for a newly instantiated xApp: random instance
    /// UUID, `REGISTERING` status, zero load.
    pub fn new(
        name: &str,
        offering: &str,
        location: &str,
        endpoint_address: &str,
        vocabulary: &OfferingVocabulary,
    ) -> Result<Self, ProfileError> {
        let profile = Self {
            instance_id: Uuid::new_v4(),
            instance_name: name.to_owned(),
            offering: offering.to_owned(),
            status: XAppStatus::Registering,
            location: location.to_owned(),
            load: 0,
            endpoint_address: endpoint_address.to_owned(),
        };
        profile.validate(vocabulary)?;
        Ok(profile)
    }

    /// Checks the profile invariants against a vocabulary. UUID validity and
    /// non-negative load are enforced by the field types.
    pub fn validate(&self, vocabulary: &OfferingVocabulary) -> Result<(), ProfileError> {
        let chars = self.instance_name.chars().count();
        if chars == 0 {
            return Err(ProfileError::EmptyName);
        }
        if chars > MAX_NAME_CHARS {
            return Err(ProfileError::NameTooLong(chars));
        }
        if !vocabulary.contains(&self.offering) {
            return Err(ProfileError::UnknownOffering(self.offering.clone()));
        }
        if self.endpoint_address.is_empty() {
            return Err(ProfileError::EmptyEndpoint);
        }
        Ok(())
    }
}

/// Partial profile change sent to `ProfileUpdateHandler` and fanned out to
/// consumers through their `ProfileUpdate` endpoint. Absent fields are left
/// untouched.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileUpdate {
    #[serde(rename = "xAppInstanceID")]
    pub instance_id: Uuid,
    #[serde(rename = "xAppInstanceName", skip_serializing_if = "Option::is_none")]
    pub instance_name: Option<String>,
    #[serde(rename = "xAppOffering", skip_serializing_if = "Option::is_none")]
    pub offering: Option<String>,
    #[serde(rename = "xAppStatus", skip_serializing_if = "Option::is_none")]
    pub status: Option<XAppStatus>,
    #[serde(rename = "xAppLocation", skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(rename = "xAppLoad", skip_serializing_if = "Option::is_none")]
    pub load: Option<u64>,
    #[serde(rename = "endpointAddress", skip_serializing_if = "Option::is_none")]
    pub endpoint_address: Option<String>,
}

impl From<&XAppProfile> for ProfileUpdate {
    /// A full-profile update, e.g. what the server fans out to consumers
    /// after a merge.
    fn from(p: &XAppProfile) -> Self {
        Self {
            instance_id: p.instance_id,
            instance_name: Some(p.instance_name.clone()),
            offering: Some(p.offering.clone()),
            status: Some(p.status),
            location: Some(p.location.clone()),
            load: Some(p.load),
            endpoint_address: Some(p.endpoint_address.clone()),
        }
    }
}

impl ProfileUpdate {
    pub fn apply(&self, profile: &mut XAppProfile) {
        if let Some(name) = &self.instance_name {
            profile.instance_name = name.clone();
        }
        if let Some(offering) = &self.offering {
            profile.offering = offering.clone();
        }
        if let Some(status) = self.status {
            profile.status = status;
        }
        if let Some(location) = &self.location {
            profile.location = location.clone();
        }
        if let Some(load) = self.load {
            profile.load = load;
        }
        if let Some(addr) = &self.endpoint_address {
            profile.endpoint_address = addr.clone();
        }
    }
}
