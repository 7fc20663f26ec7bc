use proptest::prelude::*;

use super::*;
use crate::consensus::Validator;
use crate::ledger::ValidationReport;

const T0: i64 = 1_700_000_000;
const ADMIN: &str = "admin-1";

struct Fixture {
    chain: Chain,
    state: PolicyState,
    panel: Vec<Validator>,
    now: i64,
    calls: u64,
}

impl Fixture {
    fn new() -> Fixture {
        let mut fixture =
            Fixture::with_panel((0..5).map(|i| Validator::honest(format!("v{i}"))).collect());
        bootstrap_controller(
            &mut fixture.chain,
            &mut fixture.state,
            &fixture.panel,
            ADMIN,
            "Admin",
            T0,
        )
        .unwrap();
        fixture
    }

    fn with_panel(panel: Vec<Validator>) -> Fixture {
        Fixture {
            chain: Chain::new(T0),
            state: PolicyState::new(),
            panel,
            now: T0,
            calls: 0,
        }
    }

    fn run(&mut self, actor: &str, role: AuthorityRole, action: ControlAction) -> ControlOutcome {
        self.now += 1;
        self.calls += 1;
        update_access_control(
            &mut self.chain,
            &mut self.state,
            &self.panel,
            actor,
            role,
            &action,
            self.now,
        )
    }

    fn admin(&mut self, action: ControlAction) -> ControlOutcome {
        self.run(ADMIN, AuthorityRole::Controller, action)
    }

    fn audit_count(&self) -> usize {
        audit_trail(&self.chain, &AuditFilter::default()).len()
    }
}

fn onboard(user_id: &str) -> ControlAction {
    ControlAction::Onboarding {
        user_id: user_id.into(),
        authority_role: AuthorityRole::User,
        org_role: "HR".into(),
    }
}

fn create(functionality: &str) -> ControlAction {
    ControlAction::CreatePolicy {
        functionality_name: functionality.into(),
    }
}

fn grant(user_id: &str, functionality: &str) -> ControlAction {
    ControlAction::UpdatePermission(PermissionUpdate::Grant {
        user_id: user_id.into(),
        functionality_name: functionality.into(),
    })
}

fn revoke(user_id: &str, functionality: &str) -> ControlAction {
    ControlAction::UpdatePermission(PermissionUpdate::Revoke {
        user_id: user_id.into(),
        functionality_name: functionality.into(),
    })
}

fn set_status(functionality: &str, status: PolicyStatus) -> ControlAction {
    ControlAction::UpdatePermission(PermissionUpdate::SetStatus {
        functionality_name: functionality.into(),
        status,
    })
}

#[test]
fn worked_example_onboard_create_grant_check() {
    let mut fx = Fixture::new();

    let onboarded = fx.admin(onboard("123"));
    let created = fx.admin(create("HR Data Access"));
    let granted = fx.admin(grant("123", "HR Data Access"));
    for outcome in [&onboarded, &created, &granted] {
        assert!(outcome.valid_action);
        assert!(outcome.error.is_none());
        assert!(outcome.state_block.is_some());
        assert!(outcome.audit_block.is_some());
    }

    assert!(fx.state.check_permission("123", "HR Data Access"));
    assert!(!fx.state.check_permission("124", "HR Data Access"));
    assert!(fx.chain.validate().is_valid());
}

#[test]
fn user_role_is_denied_and_state_unchanged() {
    let mut fx = Fixture::new();
    let before = fx.state.clone();

    let outcome = fx.run("mallory", AuthorityRole::User, onboard("mallory-2"));
    assert!(!outcome.valid_action);
    assert!(outcome.state_block.is_none());
    assert!(outcome.error.is_none());
    assert_eq!(fx.state, before);

    let trail = audit_trail(&fx.chain, &AuditFilter::default());
    assert_eq!(trail.len(), 1);
    assert_eq!(trail[0].user_id, "mallory");
    assert!(!trail[0].valid_action);
    assert_eq!(trail[0].severity, Severity::Alert);
}

#[test]
fn grant_for_unknown_functionality_reports_error_without_state_change() {
    let mut fx = Fixture::new();
    fx.admin(onboard("123"));
    let before = fx.state.clone();

    let outcome = fx.admin(grant("123", "X"));
    assert!(outcome.valid_action, "the actor was authorized");
    assert_eq!(
        outcome.error,
        Some(ControlError::UnknownFunctionality("X".into()))
    );
    assert!(outcome.state_block.is_none());
    assert!(outcome.audit_block.is_some(), "bad args are still audited");
    assert_eq!(fx.state, before);
}

#[test]
fn deactivated_policy_denies_even_when_granted() {
    let mut fx = Fixture::new();
    fx.admin(onboard("123"));
    fx.admin(create("Financial Transactions Data"));
    fx.admin(grant("123", "Financial Transactions Data"));
    assert!(fx
        .state
        .check_permission("123", "Financial Transactions Data"));

    fx.admin(set_status(
        "Financial Transactions Data",
        PolicyStatus::Deactivated,
    ));
    assert!(!fx
        .state
        .check_permission("123", "Financial Transactions Data"));

    fx.admin(set_status(
        "Financial Transactions Data",
        PolicyStatus::Activated,
    ));
    assert!(fx
        .state
        .check_permission("123", "Financial Transactions Data"));
}

#[test]
fn revocation_removes_permission() {
    let mut fx = Fixture::new();
    fx.admin(onboard("123"));
    fx.admin(create("HR Data Access"));
    fx.admin(grant("123", "HR Data Access"));
    fx.admin(revoke("123", "HR Data Access"));
    assert!(!fx.state.check_permission("123", "HR Data Access"));
}

#[test]
fn regrant_and_reonboard_are_idempotent_but_still_audited() {
    let mut fx = Fixture::new();
    fx.admin(onboard("123"));
    fx.admin(create("HR Data Access"));
    fx.admin(grant("123", "HR Data Access"));
    let state_before = fx.state.clone();
    let audits_before = fx.audit_count();

    let outcome = fx.admin(grant("123", "HR Data Access"));
    assert!(outcome.valid_action);
    assert!(outcome.error.is_none());
    assert_eq!(fx.state, state_before);
    assert_eq!(fx.audit_count(), audits_before + 1);

    // Re-creating a policy keeps its permitted set.
    fx.admin(create("HR Data Access"));
    assert!(fx.state.check_permission("123", "HR Data Access"));
}

#[test]
fn check_control_and_audit_trail_emit_no_state_blocks() {
    let mut fx = Fixture::new();
    fx.admin(onboard("123"));
    fx.admin(create("HR Data Access"));
    fx.admin(grant("123", "HR Data Access"));
    let state_blocks_before = count_state_blocks(&fx.chain);

    let checked = fx.admin(ControlAction::CheckControl {
        user_id: "123".into(),
        functionality_name: "HR Data Access".into(),
    });
    assert_eq!(checked.has_permission, Some(true));
    assert!(checked.state_block.is_none());

    let trail = fx.admin(ControlAction::AuditTrail {
        filter: AuditFilter::default(),
    });
    assert!(trail.audit_records.is_some());
    assert!(trail.state_block.is_none());

    assert_eq!(count_state_blocks(&fx.chain), state_blocks_before);
}

#[test]
fn check_control_by_user_role_is_denied() {
    let mut fx = Fixture::new();
    let outcome = fx.run(
        "123",
        AuthorityRole::User,
        ControlAction::CheckControl {
            user_id: "123".into(),
            functionality_name: "HR Data Access".into(),
        },
    );
    assert!(!outcome.valid_action);
    assert_eq!(outcome.has_permission, None);
}

#[test]
fn consensus_rejection_leaves_state_unchanged() {
    let mut panel: Vec<Validator> = (0..2).map(|i| Validator::honest(format!("v{i}"))).collect();
    for i in 0..3 {
        panel.push(Validator::always_reject(format!("r{i}")));
    }
    let mut fx = Fixture::with_panel(panel);
    // Seed a controller directly; the rejecting panel would refuse it.
    fx.state
        .apply(&BlockPayload::OnboardUser {
            user_id: ADMIN.into(),
            authority_role: AuthorityRole::Controller,
            org_role: "Admin".into(),
        })
        .unwrap();
    let before = fx.state.clone();

    let outcome = fx.admin(onboard("123"));
    assert!(outcome.valid_action);
    assert!(matches!(
        outcome.error,
        Some(ControlError::ConsensusRejected {
            approvals: 2,
            rejections: 3
        })
    ));
    assert!(outcome.state_block.is_none());
    assert_eq!(fx.state, before);
    assert_eq!(fx.chain.len(), 1, "nothing committed past genesis");
}

#[test]
fn replay_of_genesis_only_chain_is_empty() {
    let chain = Chain::new(T0);
    let state = replay_state(&chain).unwrap();
    assert!(state.users.is_empty());
    assert!(state.policies.is_empty());
}

#[test]
fn replay_matches_live_state_for_worked_example() {
    let mut fx = Fixture::new();
    fx.admin(onboard("123"));
    fx.admin(create("HR Data Access"));
    fx.admin(grant("123", "HR Data Access"));

    let replayed = replay_state(&fx.chain).unwrap();
    assert_eq!(replayed, fx.state);
}

#[test]
fn replay_error_names_block_index_for_hand_built_chains() {
    let mut chain = Chain::new(T0);
    let block = chain
        .propose(
            BlockPayload::GrantPermission {
                user_id: "nobody".into(),
                functionality_name: "nothing".into(),
            },
            T0,
        )
        .unwrap();
    chain.append(block).unwrap();
    let err = replay_state(&chain).unwrap_err();
    assert_eq!(err.block_index, 1);
    assert_eq!(err.source, ApplyError::UnknownUser("nobody".into()));
}

#[test]
fn audit_trail_on_fresh_chain_is_empty() {
    let chain = Chain::new(T0);
    assert!(audit_trail(&chain, &AuditFilter::default()).is_empty());
}

#[test]
fn audit_filters_select_subsets() {
    let mut fx = Fixture::new();
    fx.admin(onboard("123"));
    fx.run("123", AuthorityRole::User, create("Sneaky Policy"));
    fx.admin(create("HR Data Access"));

    let all = audit_trail(&fx.chain, &AuditFilter::default());
    assert_eq!(all.len(), 3);

    let denied = audit_trail(
        &fx.chain,
        &AuditFilter {
            valid_action: Some(false),
            ..AuditFilter::default()
        },
    );
    assert_eq!(denied.len(), 1);
    assert_eq!(denied[0].user_id, "123");
    assert_eq!(denied[0].severity, Severity::Alert);

    let by_user = audit_trail(
        &fx.chain,
        &AuditFilter {
            user_id: Some(ADMIN.into()),
            ..AuditFilter::default()
        },
    );
    assert_eq!(by_user.len(), 2);
    assert!(by_user.iter().all(|r| r.user_id == ADMIN));
}

fn count_state_blocks(chain: &Chain) -> usize {
    chain
        .blocks()
        .iter()
        .filter(|b| b.payload.is_state_bearing())
        .count()
}

// ---------------------------------------------------------------------------
// Randomized action sequences
// ---------------------------------------------------------------------------

fn arb_user() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("u1".to_string()),
        Just("u2".to_string()),
        Just("u3".to_string()),
        Just("ghost".to_string()),
    ]
}

fn arb_functionality() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("General Data".to_string()),
        Just("HR Data Access".to_string()),
        Just("Sales Data".to_string()),
        Just("ghost-fn".to_string()),
    ]
}

pub(crate) fn arb_action() -> impl Strategy<Value = ControlAction> {
    prop_oneof![
        (arb_user(), any::<bool>()).prop_map(|(user_id, ctrl)| ControlAction::Onboarding {
            user_id,
            authority_role: if ctrl {
                AuthorityRole::Controller
            } else {
                AuthorityRole::User
            },
            org_role: "HR".into(),
        }),
        arb_user().prop_map(|user_id| ControlAction::AssignRole {
            user_id,
            org_role: "Finance".into(),
        }),
        arb_functionality()
            .prop_map(|functionality_name| ControlAction::CreatePolicy { functionality_name }),
        (arb_user(), arb_functionality()).prop_map(|(user_id, functionality_name)| {
            ControlAction::UpdatePermission(PermissionUpdate::Grant {
                user_id,
                functionality_name,
            })
        }),
        (arb_user(), arb_functionality()).prop_map(|(user_id, functionality_name)| {
            ControlAction::UpdatePermission(PermissionUpdate::Revoke {
                user_id,
                functionality_name,
            })
        }),
        (arb_functionality(), any::<bool>()).prop_map(|(functionality_name, on)| {
            ControlAction::UpdatePermission(PermissionUpdate::SetStatus {
                functionality_name,
                status: if on {
                    PolicyStatus::Activated
                } else {
                    PolicyStatus::Deactivated
                },
            })
        }),
        (arb_user(), arb_functionality()).prop_map(|(user_id, functionality_name)| {
            ControlAction::CheckControl {
                user_id,
                functionality_name,
            }
        }),
        Just(ControlAction::AuditTrail {
            filter: AuditFilter::default(),
        }),
    ]
}

proptest! {
    /// Live state always equals a from-genesis replay, whatever happened.
    #[test]
    fn live_state_equals_replay(
        actions in proptest::collection::vec((arb_action(), 0u8..10), 1..40),
    ) {
        let mut fx = Fixture::new();
        for (action, roll) in actions {
            // Mostly controller calls, some denied user attempts.
            let role = if roll < 7 {
                AuthorityRole::Controller
            } else {
                AuthorityRole::User
            };
            fx.run(ADMIN, role, action);
        }
        prop_assert!(fx.chain.validate().is_valid());
        prop_assert_eq!(replay_state(&fx.chain).unwrap(), fx.state);
    }

    /// Exactly one audit entry per update_access_control call, and every
    /// state-bearing block comes from a Controller call.
    #[test]
    fn audit_completeness_and_authorization_gate(
        actions in proptest::collection::vec((arb_action(), 0u8..10), 1..30),
    ) {
        let mut fx = Fixture::new();
        let mut controller_calls = 0u64;
        for (action, roll) in actions {
            let role = if roll < 7 {
                AuthorityRole::Controller
            } else {
                AuthorityRole::User
            };
            if role == AuthorityRole::Controller {
                controller_calls += 1;
            }
            fx.run(ADMIN, role, action);
        }
        prop_assert_eq!(fx.audit_count() as u64, fx.calls);
        // Genesis and the bootstrap onboard predate any calls.
        let state_blocks = count_state_blocks(&fx.chain) as u64 - 1;
        prop_assert!(state_blocks <= controller_calls);
    }

    /// Granting one permission never revokes another.
    #[test]
    fn check_permission_is_monotone_in_grants(
        actions in proptest::collection::vec(arb_action(), 1..25),
        user in arb_user(),
        functionality in arb_functionality(),
    ) {
        let mut fx = Fixture::new();
        fx.admin(onboard(&user));
        fx.admin(create(&functionality));
        for action in actions {
            fx.admin(action);
        }
        let users: Vec<String> = fx.state.users.keys().cloned().collect();
        let policies: Vec<String> = fx.state.policies.keys().cloned().collect();
        let granted_before: Vec<(String, String)> = users
            .iter()
            .flat_map(|u| policies.iter().map(move |p| (u.clone(), p.clone())))
            .filter(|(u, p)| fx.state.check_permission(u, p))
            .collect();

        fx.admin(grant(&user, &functionality));

        for (u, p) in granted_before {
            prop_assert!(fx.state.check_permission(&u, &p));
        }
    }
}

#[test]
fn validation_still_passes_after_long_runs() {
    let mut fx = Fixture::new();
    for i in 0..30 {
        fx.admin(onboard(&format!("user-{i}")));
    }
    assert_eq!(fx.chain.validate(), ValidationReport::Valid);
}
