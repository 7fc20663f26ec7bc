//! The service node: configuration, startup, and the stateful composition
//! of ledger, consensus, policy, auth and trust behind the HTTP API.
//!
//! A node owns the chain, the replayed policy state, the validator panel
//! and the off-chain stores. All mutations funnel through it one at a
//! time; every committed block is appended to the chain file before the
//! call returns.

mod api;
mod http;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auth::{
    encode_token, validate_token, AuthError, CredentialStore, Rejection, SessionToken, TokenError,
    TokenKey, TokenKeyError,
};
use crate::consensus::{ConsensusError, Validator, ValidatorSpec};
use crate::ledger::{
    Chain, ChainFileError, ChainStore, ContentHash, ValidationCheck, ValidationReport,
};
use crate::policy::{
    record_audit, replay_state, update_access_control, ControlAction, ControlOutcome, PolicyState,
    ReplayError,
};
use crate::trust::{
    link_off_chain_to_on_chain, AccessDenial, AnchorReceipt, DigitalCertificate, DirStore,
    MemoryStore, OffChainStore, StoreError, TrustError, VerificationReport,
};

pub use api::{dispatch, ApiRequest, ApiResponse, SharedNode};
pub use http::{router, serve, system_clock, AppState};

/// Environment variable that overrides the configured token key.
pub const TOKEN_KEY_ENV: &str = "ANCHORLEDGER_TOKEN_KEY";

fn default_token_ttl() -> i64 {
    3600
}

/// Service configuration, one JSON document.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ServiceConfig {
    /// Address the HTTP listener binds, e.g. "127.0.0.1:8646".
    pub listen_addr: String,
    /// 32-byte token key as 64 hex characters. The ANCHORLEDGER_TOKEN_KEY
    /// environment variable takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_key_hex: Option<String>,
    #[serde(default = "default_token_ttl")]
    pub token_ttl_seconds: i64,
    /// User id committed as the first controller on a fresh chain.
    pub bootstrap_controller: String,
    pub validators: Vec<ValidatorSpec>,
    pub chain_file: PathBuf,
    pub store_dir: PathBuf,
    /// Identifier written into every certificate this node issues.
    pub server_id: String,
}

impl ServiceConfig {
    pub fn load(path: &Path) -> Result<ServiceConfig, StartupError> {
        let raw = std::fs::read(path)
            .map_err(|e| StartupError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_slice(&raw)
            .map_err(|e| StartupError::Config(format!("invalid config {}: {e}", path.display())))
    }

    /// Resolve the token key, preferring the environment override.
    pub fn token_key(&self, env_override: Option<&str>) -> Result<TokenKey, StartupError> {
        let hex = env_override
            .map(str::to_string)
            .or_else(|| self.token_key_hex.clone())
            .ok_or_else(|| {
                StartupError::Config(format!("no token key: set tokenKeyHex or {TOKEN_KEY_ENV}"))
            })?;
        TokenKey::from_hex(&hex).map_err(StartupError::TokenKey)
    }

    pub fn panel(&self) -> Result<Vec<Validator>, StartupError> {
        if self.validators.is_empty() {
            return Err(StartupError::Config("validator panel is empty".into()));
        }
        self.validators
            .iter()
            .cloned()
            .map(|spec| spec.into_validator().map_err(StartupError::Consensus))
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error("config: {0}")]
    Config(String),
    #[error("token key: {0}")]
    TokenKey(TokenKeyError),
    #[error("chain file: {0}")]
    ChainFile(#[from] ChainFileError),
    #[error("persisted chain is invalid at block {index}: {check}")]
    InvalidChain { index: u64, check: ValidationCheck },
    #[error("persisted chain does not replay: {0}")]
    Replay(#[from] ReplayError),
    #[error("bootstrap commit failed: {0}")]
    Consensus(#[from] ConsensusError),
    #[error("off-chain store: {0}")]
    Store(#[from] StoreError),
    #[error("credential store: {0}")]
    Auth(#[from] AuthError),
}

/// Errors surfaced by node operations beyond their domain results.
#[derive(Debug, Error)]
pub enum NodeError {
    #[error("chain persistence: {0}")]
    Persist(#[from] ChainFileError),
}

/// One block summary for chain listings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct BlockSummary {
    pub index: u64,
    pub timestamp: i64,
    pub payload_kind: String,
    pub block_hash: ContentHash,
}

/// Outcome of a data write: the anchor receipt or the reason it was
/// refused.
#[derive(Debug)]
pub enum PutOutcome {
    Anchored(AnchorReceipt),
    PermissionDenied,
    Unanchored {
        file_content_hash: ContentHash,
        approvals: u32,
        rejections: u32,
    },
    BadRequest(String),
}

/// Outcome of a gated data read.
#[derive(Debug)]
pub enum GetOutcome {
    Ok {
        content: Vec<u8>,
        certificate: DigitalCertificate,
    },
    PermissionDenied,
    Untrusted(VerificationReport),
}

/// The composed service node, generic over the off-chain store backend.
pub struct Node<S: OffChainStore> {
    chain: Chain,
    state: PolicyState,
    panel: Vec<Validator>,
    store: S,
    credentials: CredentialStore,
    token_key: TokenKey,
    token_ttl: i64,
    server_id: String,
    chain_store: Option<ChainStore>,
    persisted: u64,
}

impl Node<DirStore> {
    /// Full startup: load or create the chain file, replay policy state,
    /// and commit the bootstrap controller as block 1 on a fresh chain.
    /// Refuses to start over an invalid chain file.
    pub fn start(
        config: &ServiceConfig,
        env_token_key: Option<&str>,
        now: i64,
    ) -> Result<Node<DirStore>, StartupError> {
        let token_key = config.token_key(env_token_key)?;
        let panel = config.panel()?;
        let store = DirStore::open(&config.store_dir)?;
        let credentials = CredentialStore::open(config.store_dir.join("users"))?;

        let (chain, state, chain_store) = if config.chain_file.exists() {
            let (chain_store, loaded) = ChainStore::open(&config.chain_file)?;
            if loaded.recovered_partial_line {
                eprintln!(
                    "anchorledger: recovered from partial trailing line in {}",
                    config.chain_file.display()
                );
            }
            let chain = loaded.chain;
            if let ValidationReport::Invalid { index, check } = chain.validate() {
                return Err(StartupError::InvalidChain { index, check });
            }
            let state = replay_state(&chain)?;
            (chain, state, chain_store)
        } else {
            let mut chain = Chain::new(now);
            let mut state = PolicyState::new();
            crate::policy::bootstrap_controller(
                &mut chain,
                &mut state,
                &panel,
                &config.bootstrap_controller,
                "Admin",
                now,
            )?;
            let chain_store = ChainStore::create(&config.chain_file, &chain)?;
            (chain, state, chain_store)
        };

        let persisted = chain.len();
        Ok(Node {
            chain,
            state,
            panel,
            store,
            credentials,
            token_key,
            token_ttl: config.token_ttl_seconds,
            server_id: config.server_id.clone(),
            chain_store: Some(chain_store),
            persisted,
        })
    }
}

impl Node<MemoryStore> {
    /// In-memory node without persistence, for tests and examples.
    pub fn in_memory(
        bootstrap_controller: &str,
        panel: Vec<Validator>,
        token_key: TokenKey,
        token_ttl: i64,
        server_id: &str,
        now: i64,
    ) -> Result<Node<MemoryStore>, StartupError> {
        let mut chain = Chain::new(now);
        let mut state = PolicyState::new();
        crate::policy::bootstrap_controller(
            &mut chain,
            &mut state,
            &panel,
            bootstrap_controller,
            "Admin",
            now,
        )?;
        let persisted = chain.len();
        Ok(Node {
            chain,
            state,
            panel,
            store: MemoryStore::new(),
            credentials: CredentialStore::in_memory(),
            token_key,
            token_ttl,
            server_id: server_id.to_string(),
            chain_store: None,
            persisted,
        })
    }

    /// Test hook into the in-memory store.
    pub fn store_mut(&mut self) -> &mut MemoryStore {
        &mut self.store
    }
}

impl<S: OffChainStore> std::fmt::Debug for Node<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Node")
            .field("server_id", &self.server_id)
            .field("chain_len", &self.chain.len())
            .finish_non_exhaustive()
    }
}

impl<S: OffChainStore> Node<S> {
    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn state(&self) -> &PolicyState {
        &self.state
    }

    pub fn server_id(&self) -> &str {
        &self.server_id
    }

    /// Append any newly committed blocks to the chain file.
    pub fn flush(&mut self) -> Result<(), NodeError> {
        if let Some(chain_store) = &self.chain_store {
            while self.persisted < self.chain.len() {
                let block = self.chain.get(self.persisted).expect("in range");
                chain_store.append(block)?;
                self.persisted += 1;
            }
        } else {
            self.persisted = self.chain.len();
        }
        Ok(())
    }

    /// Register a credential for an onboarded user.
    pub fn register(&mut self, user_id: &str, secret: &[u8]) -> Result<(), AuthError> {
        self.credentials
            .register(user_id, secret, &self.state)
            .map(|_| ())
    }

    /// Compare credentials and mint a session token. The role is read
    /// from the on-chain policy state at login time. Every call commits
    /// one audit entry; failures carry no detail and audit as alerts.
    pub fn authenticate(
        &mut self,
        user_id: &str,
        secret: &[u8],
        now: i64,
    ) -> Result<String, Rejection> {
        let accepted = self.credentials.verify(user_id, secret);
        let role = self.state.users.get(user_id).map(|u| u.authority_role);
        let result = match (accepted, role) {
            (true, Some(role)) => {
                let token = SessionToken::issue(user_id, role, now, self.token_ttl);
                Ok(encode_token(&token, &self.token_key))
            }
            _ => Err(Rejection),
        };
        let _ = record_audit(
            &mut self.chain,
            &self.panel,
            user_id,
            "Login",
            now,
            result.is_ok(),
        );
        result
    }

    /// Decode and check a presented bearer token.
    pub fn validate(&self, encoded: &str, now: i64) -> Result<SessionToken, TokenError> {
        validate_token(encoded, &self.token_key, now)
    }

    /// Run one controller action through the access-control gate.
    pub fn control(
        &mut self,
        actor: &SessionToken,
        action: &ControlAction,
        now: i64,
    ) -> ControlOutcome {
        update_access_control(
            &mut self.chain,
            &mut self.state,
            &self.panel,
            &actor.user_id,
            actor.role,
            action,
            now,
        )
    }

    /// Permission-gated data write: issue a certificate, store the bytes,
    /// and anchor them on-chain. Audited as a DataAccess decision.
    pub fn put_data(
        &mut self,
        actor: &SessionToken,
        functionality_name: &str,
        content: &[u8],
        ttl: i64,
        now: i64,
    ) -> PutOutcome {
        if !self
            .state
            .check_permission(&actor.user_id, functionality_name)
        {
            let _ = record_audit(
                &mut self.chain,
                &self.panel,
                &actor.user_id,
                "DataAccess",
                now,
                false,
            );
            return PutOutcome::PermissionDenied;
        }
        let server_id = self.server_id.clone();
        let result = link_off_chain_to_on_chain(
            &mut self.store,
            &mut self.chain,
            &self.panel,
            &server_id,
            &actor.user_id,
            content,
            ttl,
            now,
        );
        let _ = record_audit(
            &mut self.chain,
            &self.panel,
            &actor.user_id,
            "DataAccess",
            now,
            true,
        );
        match result {
            Ok(receipt) => PutOutcome::Anchored(receipt),
            Err(TrustError::Unanchored {
                file_content_hash,
                approvals,
                rejections,
            }) => PutOutcome::Unanchored {
                file_content_hash,
                approvals,
                rejections,
            },
            Err(TrustError::NonPositiveTtl(ttl)) => {
                PutOutcome::BadRequest(format!("ttlSeconds must be positive, got {ttl}"))
            }
            Err(other) => PutOutcome::BadRequest(other.to_string()),
        }
    }

    /// Permission-gated, integrity-gated data read. Audited as a
    /// DataAccess decision; denials audit as alerts.
    pub fn get_data(
        &mut self,
        actor: &SessionToken,
        file_content_hash: &ContentHash,
        functionality_name: &str,
        now: i64,
    ) -> GetOutcome {
        let result = crate::trust::get_file(
            &self.store,
            &self.chain,
            actor,
            &self.state,
            file_content_hash,
            functionality_name,
            now,
        );
        let granted = result.is_ok();
        let _ = record_audit(
            &mut self.chain,
            &self.panel,
            &actor.user_id,
            "DataAccess",
            now,
            granted,
        );
        match result {
            Ok((content, certificate)) => GetOutcome::Ok {
                content,
                certificate,
            },
            Err(AccessDenial::PermissionDenied { .. }) => GetOutcome::PermissionDenied,
            Err(AccessDenial::Untrusted(report)) => GetOutcome::Untrusted(report),
        }
    }

    /// Public integrity check; no token required.
    pub fn verify_content(&self, file_content_hash: &ContentHash, now: i64) -> VerificationReport {
        crate::trust::verify(file_content_hash, &self.chain, &self.store, now)
    }

    pub fn chain_summaries(&self) -> Vec<BlockSummary> {
        self.chain
            .blocks()
            .iter()
            .map(|block| BlockSummary {
                index: block.index,
                timestamp: block.timestamp,
                payload_kind: block.payload.kind().to_string(),
                block_hash: block.block_hash,
            })
            .collect()
    }

    pub fn validate_chain(&self) -> ValidationReport {
        self.chain.validate()
    }
}

/// Convenience used by tests and examples: a fresh in-memory node with an
/// all-honest panel of five.
pub fn honest_panel_of(n: usize) -> Vec<Validator> {
    (0..n).map(|i| Validator::honest(format!("v{i}"))).collect()
}
