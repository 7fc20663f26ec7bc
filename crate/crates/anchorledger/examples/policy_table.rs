//! Build a six-policy state with mixed activation and render the access
//! policies table a user would see: EXECUTE for active policies, ACCESS
//! DENIED for deactivated ones.
//!
//! ```bash
//! cargo run --example policy_table
//! ```

use anchorledger::consensus::Validator;
use anchorledger::ledger::{AuthorityRole, Chain, PolicyStatus};
use anchorledger::policy::{
    bootstrap_controller, update_access_control, ControlAction, PermissionUpdate, PolicyState,
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
    .unwrap();

    let policies = [
        ("General Data", PolicyStatus::Activated),
        ("Financial Transactions Data", PolicyStatus::Deactivated),
        ("HR Employees Data", PolicyStatus::Activated),
        ("HR Access Data", PolicyStatus::Activated),
        ("Super Admin Data", PolicyStatus::Deactivated),
        ("Sales Data", PolicyStatus::Deactivated),
    ];
    let mut now = 1_700_000_000;
    for (name, status) in policies {
        now += 1;
        update_access_control(
            &mut chain,
            &mut state,
            &panel,
            "admin",
            AuthorityRole::Controller,
            &ControlAction::CreatePolicy {
                functionality_name: name.into(),
            },
            now,
        );
        if status == PolicyStatus::Deactivated {
            now += 1;
            update_access_control(
                &mut chain,
                &mut state,
                &panel,
                "admin",
                AuthorityRole::Controller,
                &ControlAction::UpdatePermission(PermissionUpdate::SetStatus {
                    functionality_name: name.into(),
                    status,
                }),
                now,
            );
        }
    }

    let name_width = state
        .policies
        .keys()
        .map(String::len)
        .max()
        .unwrap_or(0)
        .max("ACCESS POLICY NAME FOR SYSTEM FUNCTIONALITY".len());
    println!(
        "{:<name_width$} | {:<11} | ACTION",
        "ACCESS POLICY NAME FOR SYSTEM FUNCTIONALITY", "STATUS"
    );
    for (name, record) in &state.policies {
        let (status, action) = match record.status {
            PolicyStatus::Activated => ("ACTIVATED", "EXECUTE"),
            PolicyStatus::Deactivated => ("DEACTIVATED", "ACCESS DENIED"),
        };
        println!("{name:<name_width$} | {status:<11} | {action}");
    }
    println!();
    println!("({} blocks committed for this state)", chain.len());
}
