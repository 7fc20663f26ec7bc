//! The integrity flow: upload content off-chain, anchor its hash and
//! certificate on-chain, verify it, then tamper with the store and
//! verify again.
//!
//! ```bash
//! cargo run --example anchor_and_verify
//! ```

use anchorledger::consensus::Validator;
use anchorledger::ledger::Chain;
use anchorledger::trust::{link_off_chain_to_on_chain, verify, MemoryStore};

fn main() {
    let panel: Vec<Validator> = (0..5).map(|i| Validator::honest(format!("v{i}"))).collect();
    let mut chain = Chain::new(1_700_000_000);
    let mut store = MemoryStore::new();
    let content = b"quarterly-report.pdf bytes".to_vec();

    let receipt = link_off_chain_to_on_chain(
        &mut store,
        &mut chain,
        &panel,
        "server-1",
        "123",
        &content,
        86_400,
        1_700_000_000,
    )
    .expect("honest panel anchors the content");
    println!("fileContentHash: {}", receipt.file_content_hash);
    println!("certificateId:   {}", receipt.certificate_id);
    println!(
        "anchored in block {} (expiry {})",
        receipt.block_index, receipt.expiry
    );

    // The anchor is a fixed-size record no matter how large the file is.
    let payload = &chain.get(receipt.block_index).unwrap().payload;
    println!(
        "anchor payload encodes to {} bytes for a {}-byte file",
        anchorledger::ledger::canonical_encode(payload)
            .unwrap()
            .len(),
        content.len()
    );

    let report = verify(&receipt.file_content_hash, &chain, &store, 1_700_000_100);
    println!();
    println!(
        "verify (untampered): {:?} {:?}",
        report.verdict, report.reasons
    );

    // One flipped byte in the stored copy and verification refuses it.
    let mut mutated = content.clone();
    mutated[3] ^= 0x01;
    store.tamper_file(&receipt.file_content_hash, mutated);
    let report = verify(&receipt.file_content_hash, &chain, &store, 1_700_000_100);
    println!(
        "verify (tampered):   {:?} {:?}",
        report.verdict, report.reasons
    );
    println!(
        "anchorFound={} hashMatches={} certificateValid={} expired={}",
        report.anchor_found, report.hash_matches, report.certificate_valid, report.expired
    );

    // Content nobody anchored is never trusted, stored or not.
    let stray = anchorledger::trust::hash_file_contents(b"unanchored bytes");
    let report = verify(&stray, &chain, &store, 1_700_000_100);
    println!();
    println!(
        "verify (no anchor): {:?} {:?}",
        report.verdict, report.reasons
    );
}
