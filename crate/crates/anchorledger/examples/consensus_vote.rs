//! Vote candidate blocks past panels with increasing numbers of faulty
//! validators: strict majority commits, anything less rejects.
//!
//! ```bash
//! cargo run --example consensus_vote
//! ```

use anchorledger::consensus::{commit_block, run_vote, Validator};
use anchorledger::ledger::{BlockPayload, Chain};

fn main() {
    let chain = Chain::new(1_700_000_000);
    let candidate = chain
        .propose(
            BlockPayload::CreatePolicy {
                functionality_name: "General Data".into(),
            },
            1_700_000_001,
        )
        .unwrap();

    for faulty in 0..=3 {
        let mut panel: Vec<Validator> = (0..5 - faulty)
            .map(|i| Validator::honest(format!("honest-{i}")))
            .collect();
        for i in 0..faulty {
            panel.push(Validator::always_reject(format!("faulty-{i}")));
        }
        let result = run_vote(&panel, &chain, &candidate).unwrap();
        println!(
            "{faulty} rejecting validator(s): {} approvals, {} rejections -> {:?}",
            result.approvals, result.rejections, result.outcome
        );
    }

    // A seeded random voter is deterministic per candidate.
    let panel = vec![
        Validator::honest("h0"),
        Validator::honest("h1"),
        Validator::random_vote("coin", 42),
    ];
    let first = run_vote(&panel, &chain, &candidate).unwrap();
    let second = run_vote(&panel, &chain, &candidate).unwrap();
    println!(
        "seeded random voter voted {:?} twice in a row: {}",
        first.per_validator["coin"],
        first == second
    );

    // commit_block wires propose -> vote -> append.
    let mut chain = chain;
    let receipt = commit_block(
        &mut chain,
        &panel,
        BlockPayload::CreatePolicy {
            functionality_name: "Sales Data".into(),
        },
        1_700_000_002,
    );
    match receipt {
        Ok(receipt) => println!(
            "committed block {} with {} approvals",
            receipt.block_index, receipt.vote.approvals
        ),
        Err(e) => println!("commit refused: {e}"),
    }
}
