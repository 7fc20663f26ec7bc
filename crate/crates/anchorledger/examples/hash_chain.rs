//! Build a hash-linked chain, tamper with a committed block, and watch
//! validation pinpoint the damage.
//!
//! ```bash
//! cargo run --example hash_chain
//! ```

use anchorledger::ledger::{BlockPayload, Chain, ValidationReport};

fn main() {
    let mut chain = Chain::new(1_700_000_000);
    for (i, name) in ["General Data", "HR Data Access", "Sales Data"]
        .iter()
        .enumerate()
    {
        let block = chain
            .propose(
                BlockPayload::CreatePolicy {
                    functionality_name: name.to_string(),
                },
                1_700_000_000 + i as i64,
            )
            .expect("timestamp is fresh");
        chain.append(block).expect("candidate links correctly");
    }

    println!("committed {} blocks:", chain.len());
    for block in chain.blocks() {
        println!(
            "  #{} {:<12} {}",
            block.index,
            block.payload.kind(),
            block.block_hash
        );
    }
    println!("validate: {:?}", chain.validate());

    // Tamper with block 2's payload without recomputing its hash.
    let mut blocks = chain.blocks().to_vec();
    if let BlockPayload::CreatePolicy { functionality_name } = &mut blocks[2].payload {
        functionality_name.push('!');
    }
    let tampered = Chain::from_blocks(blocks);
    match tampered.validate() {
        ValidationReport::Invalid { index, check } => {
            println!("tampered copy: invalid at block {index} ({check})");
        }
        ValidationReport::Valid => unreachable!("tampering must be detected"),
    }

    // A forged but self-consistent replacement still breaks the linkage
    // of the block after it.
    let mut blocks = chain.blocks().to_vec();
    let forged = anchorledger::ledger::Block::new(
        1,
        blocks[1].timestamp,
        blocks[1].prev_hash,
        BlockPayload::CreatePolicy {
            functionality_name: "Forged Policy".into(),
        },
    );
    blocks[1] = forged;
    let forged_chain = Chain::from_blocks(blocks);
    println!("forged block 1: {:?}", forged_chain.validate());
}
