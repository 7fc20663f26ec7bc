//! Offline auditing: validate a chain file and verify a store directory
//! against it, with no running service. A third party holding only the
//! artifacts can run these.

use std::path::Path;

use serde_json::json;

use crate::ledger::{read_chain_file, BlockPayload, ChainFileError, ValidationReport};
use crate::service::system_clock;
use crate::trust::{verify, DirStore};

use super::CliError;

/// Validate every block of a chain file. Exit 0 when valid, 1 when any
/// check fails (including unparseable tampered lines).
pub fn chain_verify(file: &Path, json_output: bool) -> Result<i32, CliError> {
    let loaded = match read_chain_file(file) {
        Ok(loaded) => loaded,
        Err(ChainFileError::Parse { line, source }) => {
            if json_output {
                println!(
                    "{}",
                    json!({ "valid": false, "failingLine": line, "check": "line parse" })
                );
            } else {
                println!("INVALID: line {line} does not parse: {source}");
            }
            return Ok(1);
        }
        Err(ChainFileError::Io(e)) => return Err(CliError::Io(e)),
    };
    if loaded.recovered_partial_line {
        eprintln!("note: dropped a partial trailing line (crash recovery)");
    }
    match loaded.chain.validate() {
        ValidationReport::Valid => {
            if json_output {
                println!("{}", json!({ "valid": true }));
            } else {
                println!("VALID: {} blocks", loaded.chain.len());
            }
            Ok(0)
        }
        report @ ValidationReport::Invalid { index, check } => {
            if json_output {
                println!("{}", serde_json::to_value(report).expect("serializes"));
            } else {
                println!("INVALID: block {index} fails {check}");
            }
            Ok(1)
        }
    }
}

/// Validate the chain file, then run integrity verification for every
/// anchor against the store directory. Exit 0 only when the chain is
/// valid and every anchor verifies Trusted right now.
pub fn store_verify(dir: &Path, chain_file: &Path, json_output: bool) -> Result<i32, CliError> {
    let loaded = match read_chain_file(chain_file) {
        Ok(loaded) => loaded,
        Err(ChainFileError::Parse { line, source }) => {
            if !json_output {
                println!("INVALID CHAIN: line {line} does not parse: {source}");
            } else {
                println!(
                    "{}",
                    json!({ "chain": { "valid": false, "failingLine": line }, "anchors": [] })
                );
            }
            return Ok(1);
        }
        Err(ChainFileError::Io(e)) => return Err(CliError::Io(e)),
    };
    let chain = loaded.chain;
    let chain_report = chain.validate();
    if let ValidationReport::Invalid { index, check } = chain_report {
        if json_output {
            println!("{}", json!({ "chain": chain_report, "anchors": [] }));
        } else {
            println!("INVALID CHAIN: block {index} fails {check}");
        }
        return Ok(1);
    }

    let store = DirStore::open(dir).map_err(|e| CliError::Usage(e.to_string()))?;
    let now = system_clock();
    let mut rows = Vec::new();
    let mut all_trusted = true;
    for block in chain.blocks() {
        if let BlockPayload::Anchor {
            file_content_hash, ..
        } = &block.payload
        {
            let report = verify(file_content_hash, &chain, &store, now);
            all_trusted &= report.is_trusted();
            rows.push((block.index, *file_content_hash, report));
        }
    }

    if json_output {
        let anchors: Vec<_> = rows
            .iter()
            .map(|(index, hash, report)| {
                json!({ "blockIndex": index, "fileContentHash": hash, "report": report })
            })
            .collect();
        println!("{}", json!({ "chain": chain_report, "anchors": anchors }));
    } else {
        println!("chain: VALID ({} blocks)", chain.len());
        if rows.is_empty() {
            println!("no anchors on chain");
        }
        for (index, hash, report) in &rows {
            if report.is_trusted() {
                println!("block {index}: {hash} TRUSTED");
            } else {
                println!(
                    "block {index}: {hash} UNTRUSTED ({})",
                    report.reasons.join(", ")
                );
            }
        }
    }
    Ok(if all_trusted { 0 } else { 1 })
}
