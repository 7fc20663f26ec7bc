//! Third-party auditing with no service running: load a persisted chain
//! file and store directory, validate the chain end to end, and verify
//! every anchor, before and after simulated tampering.
//!
//! ```bash
//! cargo run --example offline_audit
//! ```

use anchorledger::consensus::Validator;
use anchorledger::ledger::{read_chain_file, BlockPayload, Chain, ChainStore};
use anchorledger::trust::{link_off_chain_to_on_chain, verify, DirStore};

fn main() -> anyhow::Result<()> {
    let dir = tempfile::tempdir()?;
    let chain_path = dir.path().join("ledger.chain");
    let store_path = dir.path().join("store");
    let panel: Vec<Validator> = (0..5).map(|i| Validator::honest(format!("v{i}"))).collect();

    // A producer writes some anchored documents and persists everything.
    let mut chain = Chain::new(1_700_000_000);
    let mut store = DirStore::open(&store_path)?;
    for (i, doc) in ["alpha bytes", "beta bytes", "gamma bytes"]
        .iter()
        .enumerate()
    {
        link_off_chain_to_on_chain(
            &mut store,
            &mut chain,
            &panel,
            "server-1",
            "123",
            doc.as_bytes(),
            86_400,
            1_700_000_000 + i as i64,
        )?;
    }
    ChainStore::create(&chain_path, &chain)?;
    println!("persisted {} blocks and {} documents", chain.len(), 3);

    // An auditor, later and elsewhere, loads both artifacts fresh.
    let loaded = read_chain_file(&chain_path)?;
    println!("chain file validates: {:?}", loaded.chain.validate());
    let store = DirStore::open(&store_path)?;
    let now = 1_700_000_100;
    for block in loaded.chain.blocks() {
        if let BlockPayload::Anchor {
            file_content_hash, ..
        } = &block.payload
        {
            let report = verify(file_content_hash, &loaded.chain, &store, now);
            println!(
                "  block {} {} -> {:?}",
                block.index, file_content_hash, report.verdict
            );
        }
    }

    // Someone edits a stored file; re-auditing flags exactly that anchor.
    let victim = loaded
        .chain
        .blocks()
        .iter()
        .find_map(|b| match &b.payload {
            BlockPayload::Anchor {
                file_content_hash, ..
            } => Some(*file_content_hash),
            _ => None,
        })
        .expect("an anchor exists");
    std::fs::write(store.file_path(&victim), b"edited on disk")?;
    println!();
    println!("after editing one stored file:");
    for block in loaded.chain.blocks() {
        if let BlockPayload::Anchor {
            file_content_hash, ..
        } = &block.payload
        {
            let report = verify(file_content_hash, &loaded.chain, &store, now);
            println!(
                "  block {} -> {:?} {:?}",
                block.index, report.verdict, report.reasons
            );
        }
    }
    Ok(())
}
