use crate::profile::XAppProfile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("no candidate providers to select from")]
pub struct SelectError;

/// Picks the provider with the lowest current load from a discovery result.
///
/// Ties break on the lexicographically smallest instance UUID so the choice
/// is deterministic regardless of response ordering.
pub fn select_provider(candidates: &[XAppProfile]) -> Result<&XAppProfile, SelectError> {
    candidates
        .iter()
        .min_by_key(|p| (p.load, p.instance_id))
        .ok_or(SelectError)
}
