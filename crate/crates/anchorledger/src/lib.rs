//! Ledger-anchored access control and data integrity for off-chain
//! storage.
//!
//! Access-control state and fixed-size content hashes are committed to an
//! append-only, vote-approved, hash-chained ledger; file bytes and their
//! certificates live in a content-addressed store. The split keeps the
//! ledger footprint constant per record while making every policy
//! decision auditable and every stored byte verifiable against its
//! on-chain anchor.
//!
//! # Modules
//!
//! - [`ledger`]: canonical encoding, hashing, blocks, chain validation
//!   and chain-file persistence.
//! - [`consensus`]: voting panels and majority commitment of candidate
//!   blocks.
//! - [`policy`]: controller-gated mutations, permission checks, state
//!   replay and the audit trail.
//! - [`auth`]: salted credentials and MAC-authenticated session tokens.
//! - [`trust`]: content-addressed stores, self-authenticating
//!   certificates, anchoring and verification.
//! - [`service`]: the composed node, its JSON config, and the HTTP API.
//! - [`cli`]: the `anchorledger` binary: online subcommands plus
//!   offline chain and store auditing.
//!
//! # Examples
//!
//! Each major capability has a runnable example:
//!
//! ```bash
//! cargo run --example hash_chain        # tamper-evident block chain
//! cargo run --example consensus_vote    # voting panels and fault counts
//! cargo run --example access_control    # onboard/create/grant/check + audit
//! cargo run --example session_tokens    # credentials and token lifecycle
//! cargo run --example anchor_and_verify # off-chain bytes, on-chain anchors
//! cargo run --example policy_table      # the policies table users see
//! cargo run --example service_roundtrip # full flow over HTTP
//! cargo run --example offline_audit     # third-party auditing of the files
//! ```

pub mod auth;
pub mod cli;
pub mod consensus;
pub mod ledger;
pub mod policy;
pub mod service;
pub mod trust;
