use serde::{Deserialize, Serialize};

/// Access type carried by a token grant. Wire form is lowercase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scope {
    Read,
    Write,
}

impl std::fmt::Display for Scope {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scope::Read => f.write_str("read"),
            Scope::Write => f.write_str("write"),
        }
    }
}

impl std::str::FromStr for Scope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "read" => Ok(Scope::Read),
            "write" => Ok(Scope::Write),
            other => Err(format!("unknown scope {other:?}, expected \"read\" or \"write\"")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_form_is_lowercase() {
        assert_eq!(serde_json::to_string(&Scope::Read).unwrap(), "\"read\"");
        assert_eq!(serde_json::to_string(&Scope::Write).unwrap(), "\"write\"");
        assert_eq!(serde_json::from_str::<Scope>("\"write\"").unwrap(), Scope::Write);
        assert!(serde_json::from_str::<Scope>("\"WRITE\"").is_err());
    }
}
