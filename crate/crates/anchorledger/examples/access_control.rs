//! The controller onboards an employee, creates a policy, grants the
//! permission, and the audit trail records every decision, including a
//! denied attempt by a non-controller.
//!
//! ```bash
//! cargo run --example access_control
//! ```

use anchorledger::consensus::Validator;
use anchorledger::ledger::{AuthorityRole, Chain};
use anchorledger::policy::{
    audit_trail, bootstrap_controller, replay_state, update_access_control, AuditFilter,
    ControlAction, PermissionUpdate, PolicyState,
};

fn main() {
    let panel: Vec<Validator> = (0..5).map(|i| Validator::honest(format!("v{i}"))).collect();
    let mut chain = Chain::new(1_700_000_000);
    let mut state = PolicyState::new();
    bootstrap_controller(
        &mut chain,
        &mut state,
        &panel,
        "admin",
        "Admin",
        1_700_000_000,
    )
    .expect("honest panel commits the bootstrap");

    let mut now = 1_700_000_000;
    let mut run = |actor: &str,
                   role: AuthorityRole,
                   action: ControlAction,
                   chain: &mut Chain,
                   state: &mut PolicyState| {
        now += 1;
        let outcome = update_access_control(chain, state, &panel, actor, role, &action, now);
        println!(
            "{actor:<8} {:<16} validAction={} {}",
            action.name(),
            outcome.valid_action,
            outcome
                .error
                .as_ref()
                .map(|e| format!("({e})"))
                .unwrap_or_default()
        );
        outcome
    };

    run(
        "admin",
        AuthorityRole::Controller,
        ControlAction::Onboarding {
            user_id: "123".into(),
            authority_role: AuthorityRole::User,
            org_role: "HR".into(),
        },
        &mut chain,
        &mut state,
    );
    run(
        "admin",
        AuthorityRole::Controller,
        ControlAction::CreatePolicy {
            functionality_name: "HR Data Access".into(),
        },
        &mut chain,
        &mut state,
    );
    run(
        "admin",
        AuthorityRole::Controller,
        ControlAction::UpdatePermission(PermissionUpdate::Grant {
            user_id: "123".into(),
            functionality_name: "HR Data Access".into(),
        }),
        &mut chain,
        &mut state,
    );
    // An ordinary user trying a controller action is denied and audited.
    run(
        "123",
        AuthorityRole::User,
        ControlAction::CreatePolicy {
            functionality_name: "Backdoor".into(),
        },
        &mut chain,
        &mut state,
    );

    println!();
    println!(
        "check_permission(\"123\", \"HR Data Access\") = {}",
        state.check_permission("123", "HR Data Access")
    );
    println!(
        "check_permission(\"124\", \"HR Data Access\") = {}",
        state.check_permission("124", "HR Data Access")
    );

    // The whole state is reproducible from the chain alone.
    let replayed = replay_state(&chain).unwrap();
    println!("replay_state(chain) == live state: {}", replayed == state);

    println!();
    println!("audit trail:");
    for record in audit_trail(&chain, &AuditFilter::default()) {
        println!(
            "  t={} user={:<6} action={:<16} valid={:<5} {:?}",
            record.timestamp, record.user_id, record.action, record.valid_action, record.severity
        );
    }
}
