//! Access-control engine: controller-gated mutations, permission checks,
//! chain-replayed policy state, and the on-chain audit trail.
//!
//! Policy state is a materialized view. Every mutation is committed as a
//! block first and folded into state second, through the same fold used by
//! [`replay_state`], so the live view is always reproducible from the
//! chain alone.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::consensus::{commit_block, ConsensusError, Validator};
use crate::ledger::{BlockPayload, Chain};

pub use crate::ledger::{AuthorityRole, PolicyStatus};

// ---------------------------------------------------------------------------
// Actions
// ---------------------------------------------------------------------------

/// Scope of an `UpdatePermission` action: per-user grants and revocations,
/// and activation toggles on the policy itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PermissionUpdate {
    Grant {
        user_id: String,
        functionality_name: String,
    },
    Revoke {
        user_id: String,
        functionality_name: String,
    },
    SetStatus {
        functionality_name: String,
        status: PolicyStatus,
    },
}

/// The six controller actions, with their arguments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ControlAction {
    Onboarding {
        user_id: String,
        authority_role: AuthorityRole,
        org_role: String,
    },
    AssignRole {
        user_id: String,
        org_role: String,
    },
    CreatePolicy {
        functionality_name: String,
    },
    UpdatePermission(PermissionUpdate),
    CheckControl {
        user_id: String,
        functionality_name: String,
    },
    AuditTrail {
        filter: AuditFilter,
    },
}

impl ControlAction {
    /// Action name as recorded in audit entries.
    pub fn name(&self) -> &'static str {
        match self {
            ControlAction::Onboarding { .. } => "Onboarding",
            ControlAction::AssignRole { .. } => "AssignRole",
            ControlAction::CreatePolicy { .. } => "CreatePolicy",
            ControlAction::UpdatePermission(_) => "UpdatePermission",
            ControlAction::CheckControl { .. } => "CheckControl",
            ControlAction::AuditTrail { .. } => "AuditTrail",
        }
    }
}

// ---------------------------------------------------------------------------
// State
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct UserRecord {
    pub authority_role: AuthorityRole,
    pub org_role: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyRecord {
    pub status: PolicyStatus,
    pub permitted: BTreeSet<String>,
}

/// Materialized access-control view: users and the policies dictionary
/// (functionality name → status and permitted user ids).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyState {
    pub users: BTreeMap<String, UserRecord>,
    pub policies: BTreeMap<String, PolicyRecord>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ApplyError {
    #[error("unknown user: {0}")]
    UnknownUser(String),
    #[error("unknown functionality: {0}")]
    UnknownFunctionality(String),
}

impl PolicyState {
    pub fn new() -> PolicyState {
        PolicyState::default()
    }

    /// Referential checks for a payload without mutating anything.
    pub fn check_payload(&self, payload: &BlockPayload) -> Result<(), ApplyError> {
        let user_ok = |user_id: &str| -> Result<(), ApplyError> {
            if self.users.contains_key(user_id) {
                Ok(())
            } else {
                Err(ApplyError::UnknownUser(user_id.to_string()))
            }
        };
        let policy_ok = |name: &str| -> Result<(), ApplyError> {
            if self.policies.contains_key(name) {
                Ok(())
            } else {
                Err(ApplyError::UnknownFunctionality(name.to_string()))
            }
        };
        match payload {
            BlockPayload::AssignRole { user_id, .. } => user_ok(user_id),
            BlockPayload::SetPolicyStatus {
                functionality_name, ..
            } => policy_ok(functionality_name),
            BlockPayload::GrantPermission {
                user_id,
                functionality_name,
            }
            | BlockPayload::RevokePermission {
                user_id,
                functionality_name,
            } => {
                user_ok(user_id)?;
                policy_ok(functionality_name)
            }
            _ => Ok(()),
        }
    }

    /// Fold one payload into the view. Genesis, audit entries and anchors
    /// carry no policy state and are no-ops. Re-onboards and re-grants are
    /// idempotent.
    pub fn apply(&mut self, payload: &BlockPayload) -> Result<(), ApplyError> {
        self.check_payload(payload)?;
        match payload {
            BlockPayload::OnboardUser {
                user_id,
                authority_role,
                org_role,
            } => {
                self.users.insert(
                    user_id.clone(),
                    UserRecord {
                        authority_role: *authority_role,
                        org_role: org_role.clone(),
                    },
                );
            }
            BlockPayload::AssignRole { user_id, org_role } => {
                self.users.get_mut(user_id).expect("checked above").org_role = org_role.clone();
            }
            BlockPayload::CreatePolicy { functionality_name } => {
                self.policies
                    .entry(functionality_name.clone())
                    .or_insert_with(|| PolicyRecord {
                        status: PolicyStatus::Activated,
                        permitted: BTreeSet::new(),
                    });
            }
            BlockPayload::SetPolicyStatus {
                functionality_name,
                status,
            } => {
                self.policies
                    .get_mut(functionality_name)
                    .expect("checked above")
                    .status = *status;
            }
            BlockPayload::GrantPermission {
                user_id,
                functionality_name,
            } => {
                self.policies
                    .get_mut(functionality_name)
                    .expect("checked above")
                    .permitted
                    .insert(user_id.clone());
            }
            BlockPayload::RevokePermission {
                user_id,
                functionality_name,
            } => {
                self.policies
                    .get_mut(functionality_name)
                    .expect("checked above")
                    .permitted
                    .remove(user_id);
            }
            BlockPayload::Genesis
            | BlockPayload::AuditEntry { .. }
            | BlockPayload::Anchor { .. } => {}
        }
        Ok(())
    }

    /// True iff the functionality exists, is Activated, and the user is in
    /// its permitted set.
    pub fn check_permission(&self, user_id: &str, functionality_name: &str) -> bool {
        self.policies
            .get(functionality_name)
            .map(|policy| {
                policy.status == PolicyStatus::Activated && policy.permitted.contains(user_id)
            })
            .unwrap_or(false)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("replay failed at block {block_index}: {source}")]
pub struct ReplayError {
    pub block_index: u64,
    pub source: ApplyError,
}

/// Rebuild policy state by folding every block from genesis.
pub fn replay_state(chain: &Chain) -> Result<PolicyState, ReplayError> {
    let mut state = PolicyState::new();
    for block in chain.blocks() {
        state.apply(&block.payload).map_err(|source| ReplayError {
            block_index: block.index,
            source,
        })?;
    }
    Ok(state)
}

// ---------------------------------------------------------------------------
// Audit trail
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Severity {
    Info,
    Alert,
}

/// View of one on-chain audit entry. Severity is derived: every denied
/// action is an Alert.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AuditRecord {
    pub user_id: String,
    pub action: String,
    pub timestamp: i64,
    pub valid_action: bool,
    pub severity: Severity,
}

/// Filter over the audit trail; unset fields match everything.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AuditFilter {
    pub user_id: Option<String>,
    pub from: Option<i64>,
    pub to: Option<i64>,
    pub valid_action: Option<bool>,
}

impl AuditFilter {
    fn matches(&self, record: &AuditRecord) -> bool {
        if let Some(user_id) = &self.user_id {
            if record.user_id != *user_id {
                return false;
            }
        }
        if let Some(from) = self.from {
            if record.timestamp < from {
                return false;
            }
        }
        if let Some(to) = self.to {
            if record.timestamp > to {
                return false;
            }
        }
        if let Some(valid) = self.valid_action {
            if record.valid_action != valid {
                return false;
            }
        }
        true
    }
}

/// All audit entries matching `filter`, in block order.
pub fn audit_trail(chain: &Chain, filter: &AuditFilter) -> Vec<AuditRecord> {
    chain
        .blocks()
        .iter()
        .filter_map(|block| match &block.payload {
            BlockPayload::AuditEntry {
                user_id,
                action,
                timestamp,
                valid_action,
            } => Some(AuditRecord {
                user_id: user_id.clone(),
                action: action.clone(),
                timestamp: *timestamp,
                valid_action: *valid_action,
                severity: if *valid_action {
                    Severity::Info
                } else {
                    Severity::Alert
                },
            }),
            _ => None,
        })
        .filter(|record| filter.matches(record))
        .collect()
}

// ---------------------------------------------------------------------------
// Dynamic access control
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ControlError {
    #[error("unknown user: {0}")]
    UnknownUser(String),
    #[error("unknown functionality: {0}")]
    UnknownFunctionality(String),
    #[error("consensus rejected the transaction: {approvals} approvals, {rejections} rejections")]
    ConsensusRejected { approvals: u32, rejections: u32 },
    #[error("audit entry could not be committed")]
    AuditUnrecorded,
    #[error(transparent)]
    Consensus(ConsensusError),
}

/// Result of one `update_access_control` call: the Algorithm-1 verdict
/// plus whatever the action produced.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlOutcome {
    /// False iff the actor's role is not Controller.
    pub valid_action: bool,
    /// Index of the committed state-bearing block, if the action produced
    /// one.
    pub state_block: Option<u64>,
    /// Index of the committed audit entry for this call.
    pub audit_block: Option<u64>,
    /// Argument or consensus failure. Set only on Controller calls; a
    /// denied actor is not an error, just an invalid action.
    pub error: Option<ControlError>,
    /// `CheckControl` result.
    pub has_permission: Option<bool>,
    /// `AuditTrail` result.
    pub audit_records: Option<Vec<AuditRecord>>,
}

impl ControlOutcome {
    fn denied() -> ControlOutcome {
        ControlOutcome {
            valid_action: false,
            state_block: None,
            audit_block: None,
            error: None,
            has_permission: None,
            audit_records: None,
        }
    }

    fn allowed() -> ControlOutcome {
        ControlOutcome {
            valid_action: true,
            ..ControlOutcome::denied()
        }
    }
}

fn apply_error_to_control(err: ApplyError) -> ControlError {
    match err {
        ApplyError::UnknownUser(u) => ControlError::UnknownUser(u),
        ApplyError::UnknownFunctionality(f) => ControlError::UnknownFunctionality(f),
    }
}

/// Commit one audit entry block for an access decision. Denials also
/// emit an administrator alert on the log.
pub fn record_audit(
    chain: &mut Chain,
    panel: &[Validator],
    user_id: &str,
    action: &str,
    now: i64,
    valid_action: bool,
) -> Result<u64, ConsensusError> {
    if !valid_action {
        log::warn!("alert: denied {action} by user {user_id} at {now}");
    }
    let receipt = commit_block(
        chain,
        panel,
        BlockPayload::AuditEntry {
            user_id: user_id.to_string(),
            action: action.to_string(),
            timestamp: now,
            valid_action,
        },
        now,
    )?;
    Ok(receipt.block_index)
}

/// Manage and update access permissions based on the actor's role.
///
/// Controllers may execute all six actions; any other role yields
/// `valid_action == false` and no state change. Mutating actions are
/// committed through consensus and folded into `state`; `CheckControl`
/// and `AuditTrail` are read-only. Every call, allowed or denied, commits
/// exactly one audit entry.
pub fn update_access_control(
    chain: &mut Chain,
    state: &mut PolicyState,
    panel: &[Validator],
    actor_id: &str,
    actor_role: AuthorityRole,
    action: &ControlAction,
    now: i64,
) -> ControlOutcome {
    let mut outcome = if actor_role == AuthorityRole::Controller {
        let mut outcome = ControlOutcome::allowed();
        let payload = match action {
            ControlAction::Onboarding {
                user_id,
                authority_role,
                org_role,
            } => Some(BlockPayload::OnboardUser {
                user_id: user_id.clone(),
                authority_role: *authority_role,
                org_role: org_role.clone(),
            }),
            ControlAction::AssignRole { user_id, org_role } => Some(BlockPayload::AssignRole {
                user_id: user_id.clone(),
                org_role: org_role.clone(),
            }),
            ControlAction::CreatePolicy { functionality_name } => {
                Some(BlockPayload::CreatePolicy {
                    functionality_name: functionality_name.clone(),
                })
            }
            ControlAction::UpdatePermission(update) => Some(match update {
                PermissionUpdate::Grant {
                    user_id,
                    functionality_name,
                } => BlockPayload::GrantPermission {
                    user_id: user_id.clone(),
                    functionality_name: functionality_name.clone(),
                },
                PermissionUpdate::Revoke {
                    user_id,
                    functionality_name,
                } => BlockPayload::RevokePermission {
                    user_id: user_id.clone(),
                    functionality_name: functionality_name.clone(),
                },
                PermissionUpdate::SetStatus {
                    functionality_name,
                    status,
                } => BlockPayload::SetPolicyStatus {
                    functionality_name: functionality_name.clone(),
                    status: *status,
                },
            }),
            ControlAction::CheckControl {
                user_id,
                functionality_name,
            } => {
                outcome.has_permission = Some(state.check_permission(user_id, functionality_name));
                None
            }
            ControlAction::AuditTrail { filter } => {
                outcome.audit_records = Some(audit_trail(chain, filter));
                None
            }
        };
        if let Some(payload) = payload {
            match state.check_payload(&payload) {
                Err(err) => outcome.error = Some(apply_error_to_control(err)),
                Ok(()) => match commit_block(chain, panel, payload.clone(), now) {
                    Ok(receipt) => {
                        state
                            .apply(&payload)
                            .expect("payload checked before commit");
                        outcome.state_block = Some(receipt.block_index);
                    }
                    Err(ConsensusError::Rejected {
                        approvals,
                        rejections,
                    }) => {
                        outcome.error = Some(ControlError::ConsensusRejected {
                            approvals,
                            rejections,
                        });
                    }
                    Err(other) => outcome.error = Some(ControlError::Consensus(other)),
                },
            }
        }
        outcome
    } else {
        // Only the admin controller can update policies.
        ControlOutcome::denied()
    };

    match record_audit(
        chain,
        panel,
        actor_id,
        action.name(),
        now,
        outcome.valid_action,
    ) {
        Ok(index) => outcome.audit_block = Some(index),
        Err(_) if outcome.error.is_none() => {
            outcome.error = Some(ControlError::AuditUnrecorded);
        }
        Err(_) => {}
    }
    outcome
}

/// Commit the first controller directly, bypassing the Algorithm-1 gate
/// that no controller yet exists to pass. Used once at service startup.
pub fn bootstrap_controller(
    chain: &mut Chain,
    state: &mut PolicyState,
    panel: &[Validator],
    user_id: &str,
    org_role: &str,
    now: i64,
) -> Result<u64, ConsensusError> {
    let payload = BlockPayload::OnboardUser {
        user_id: user_id.to_string(),
        authority_role: AuthorityRole::Controller,
        org_role: org_role.to_string(),
    };
    let receipt = commit_block(chain, panel, payload.clone(), now)?;
    state
        .apply(&payload)
        .expect("onboard payload always applies");
    Ok(receipt.block_index)
}

#[cfg(test)]
mod tests;
