//! Append-only hash-chained block store.
//!
//! Every record the system commits (policy mutations, audit entries,
//! off-chain anchors) is one block. A block's hash covers its index,
//! timestamp, previous hash and payload, so any mutation of committed
//! history is detectable by recomputation.

mod canonical;
mod persist;

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use canonical::{canonical_encode, canonical_encode_string, EncodeError};
pub use persist::{read_chain_file, ChainFileError, ChainStore, LoadedChain};

/// Length of a content hash in bytes.
pub const HASH_LEN: usize = 32;

// ---------------------------------------------------------------------------
// ContentHash
// ---------------------------------------------------------------------------

/// A SHA-256 digest, rendered as 64 lowercase hex characters.
///
/// The single fixed-size reference type: block hashes, file content hashes
/// and certificate ids are all `ContentHash` values.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentHash([u8; HASH_LEN]);

impl ContentHash {
    /// The all-zero hash; previous-hash of the genesis block.
    pub const ZERO: ContentHash = ContentHash([0u8; HASH_LEN]);

    pub fn as_bytes(&self) -> &[u8; HASH_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    /// Parse from exactly 64 lowercase hex characters.
    pub fn from_hex(s: &str) -> Result<Self, ParseHashError> {
        if s.len() != 2 * HASH_LEN {
            return Err(ParseHashError::Length(s.len()));
        }
        if s.bytes().any(|b| !matches!(b, b'0'..=b'9' | b'a'..=b'f')) {
            return Err(ParseHashError::Alphabet);
        }
        let mut bytes = [0u8; HASH_LEN];
        hex::decode_to_slice(s, &mut bytes).map_err(|_| ParseHashError::Alphabet)?;
        Ok(ContentHash(bytes))
    }
}

impl From<[u8; HASH_LEN]> for ContentHash {
    fn from(bytes: [u8; HASH_LEN]) -> Self {
        ContentHash(bytes)
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl fmt::Debug for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ContentHash({}..)", &self.to_hex()[..12])
    }
}

impl std::str::FromStr for ContentHash {
    type Err = ParseHashError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ContentHash::from_hex(s)
    }
}

impl Serialize for ContentHash {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for ContentHash {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        ContentHash::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseHashError {
    #[error("content hash must be 64 hex characters, got {0}")]
    Length(usize),
    #[error("content hash must use only [0-9a-f]")]
    Alphabet,
}

/// SHA-256 of `data`. The one hashing rule used system-wide.
pub fn hash_bytes(data: &[u8]) -> ContentHash {
    let digest: [u8; HASH_LEN] = Sha256::digest(data).into();
    ContentHash(digest)
}

// ---------------------------------------------------------------------------
// Payloads
// ---------------------------------------------------------------------------

/// Authority role distinguishing admin controllers from ordinary users.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuthorityRole {
    Controller,
    User,
}

impl fmt::Display for AuthorityRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AuthorityRole::Controller => "Controller",
            AuthorityRole::User => "User",
        })
    }
}

/// Activation status of an access policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PolicyStatus {
    Activated,
    Deactivated,
}

impl fmt::Display for PolicyStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PolicyStatus::Activated => "Activated",
            PolicyStatus::Deactivated => "Deactivated",
        })
    }
}

/// The single record a block commits. Exactly one variant per block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum BlockPayload {
    /// First block of every chain; carries no state.
    Genesis,
    #[serde(rename_all = "camelCase")]
    OnboardUser {
        user_id: String,
        authority_role: AuthorityRole,
        org_role: String,
    },
    #[serde(rename_all = "camelCase")]
    AssignRole { user_id: String, org_role: String },
    #[serde(rename_all = "camelCase")]
    CreatePolicy { functionality_name: String },
    #[serde(rename_all = "camelCase")]
    SetPolicyStatus {
        functionality_name: String,
        status: PolicyStatus,
    },
    #[serde(rename_all = "camelCase")]
    GrantPermission {
        user_id: String,
        functionality_name: String,
    },
    #[serde(rename_all = "camelCase")]
    RevokePermission {
        user_id: String,
        functionality_name: String,
    },
    /// One audit record per access decision.
    #[serde(rename_all = "camelCase")]
    AuditEntry {
        user_id: String,
        action: String,
        timestamp: i64,
        valid_action: bool,
    },
    /// Binds off-chain content and its certificate to the chain.
    #[serde(rename_all = "camelCase")]
    Anchor {
        file_content_hash: ContentHash,
        certificate_id: ContentHash,
        server_id: String,
        user_id: String,
        expiry: i64,
    },
}

impl BlockPayload {
    /// Short payload kind name, as shown in chain listings.
    pub fn kind(&self) -> &'static str {
        match self {
            BlockPayload::Genesis => "Genesis",
            BlockPayload::OnboardUser { .. } => "OnboardUser",
            BlockPayload::AssignRole { .. } => "AssignRole",
            BlockPayload::CreatePolicy { .. } => "CreatePolicy",
            BlockPayload::SetPolicyStatus { .. } => "SetPolicyStatus",
            BlockPayload::GrantPermission { .. } => "GrantPermission",
            BlockPayload::RevokePermission { .. } => "RevokePermission",
            BlockPayload::AuditEntry { .. } => "AuditEntry",
            BlockPayload::Anchor { .. } => "Anchor",
        }
    }

    /// True for payloads that mutate policy state when folded.
    pub fn is_state_bearing(&self) -> bool {
        !matches!(
            self,
            BlockPayload::Genesis | BlockPayload::AuditEntry { .. } | BlockPayload::Anchor { .. }
        )
    }
}

// ---------------------------------------------------------------------------
// Block
// ---------------------------------------------------------------------------

/// One committed record plus its position and linkage in the chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Block {
    pub index: u64,
    pub timestamp: i64,
    pub prev_hash: ContentHash,
    pub payload: BlockPayload,
    pub block_hash: ContentHash,
}

/// Hash preimage: every block field except `blockHash` itself.
#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct HashPreimage<'a> {
    index: u64,
    timestamp: i64,
    prev_hash: &'a ContentHash,
    payload: &'a BlockPayload,
}

/// Compute a block hash from its constituent fields.
pub fn compute_block_hash(
    index: u64,
    timestamp: i64,
    prev_hash: &ContentHash,
    payload: &BlockPayload,
) -> ContentHash {
    let preimage = HashPreimage {
        index,
        timestamp,
        prev_hash,
        payload,
    };
    let bytes = canonical_encode(&preimage).expect("block preimage has a canonical form");
    hash_bytes(&bytes)
}

impl Block {
    pub fn new(index: u64, timestamp: i64, prev_hash: ContentHash, payload: BlockPayload) -> Block {
        let block_hash = compute_block_hash(index, timestamp, &prev_hash, &payload);
        Block {
            index,
            timestamp,
            prev_hash,
            payload,
            block_hash,
        }
    }

    /// Recompute this block's hash from its stored fields.
    pub fn recompute_hash(&self) -> ContentHash {
        compute_block_hash(self.index, self.timestamp, &self.prev_hash, &self.payload)
    }
}

// ---------------------------------------------------------------------------
// Validation report
// ---------------------------------------------------------------------------

/// Which structural check failed during validation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidationCheck {
    #[serde(rename = "hash recomputation")]
    HashRecomputation,
    #[serde(rename = "prevHash linkage")]
    PrevHashLinkage,
    #[serde(rename = "index continuity")]
    IndexContinuity,
    #[serde(rename = "timestamp monotonicity")]
    TimestampMonotonicity,
    #[serde(rename = "genesis form")]
    GenesisForm,
}

impl fmt::Display for ValidationCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ValidationCheck::HashRecomputation => "hash recomputation",
            ValidationCheck::PrevHashLinkage => "prevHash linkage",
            ValidationCheck::IndexContinuity => "index continuity",
            ValidationCheck::TimestampMonotonicity => "timestamp monotonicity",
            ValidationCheck::GenesisForm => "genesis form",
        })
    }
}

/// Outcome of validating a chain end to end. Invalidity reports the
/// smallest block index at which a check fails, and which check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationReport {
    Valid,
    Invalid { index: u64, check: ValidationCheck },
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        matches!(self, ValidationReport::Valid)
    }
}

impl Serialize for ValidationReport {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        use serde::ser::SerializeMap;
        match self {
            ValidationReport::Valid => {
                let mut map = serializer.serialize_map(Some(1))?;
                map.serialize_entry("valid", &true)?;
                map.end()
            }
            ValidationReport::Invalid { index, check } => {
                let mut map = serializer.serialize_map(Some(3))?;
                map.serialize_entry("check", check)?;
                map.serialize_entry("failingIndex", index)?;
                map.serialize_entry("valid", &false)?;
                map.end()
            }
        }
    }
}

impl<'de> Deserialize<'de> for ValidationReport {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(rename_all = "camelCase")]
        struct Raw {
            valid: bool,
            failing_index: Option<u64>,
            check: Option<ValidationCheck>,
        }
        let raw = Raw::deserialize(deserializer)?;
        if raw.valid {
            Ok(ValidationReport::Valid)
        } else {
            match (raw.failing_index, raw.check) {
                (Some(index), Some(check)) => Ok(ValidationReport::Invalid { index, check }),
                _ => Err(serde::de::Error::custom(
                    "invalid report requires failingIndex and check",
                )),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Chain
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum LedgerError {
    #[error("stale timestamp: {proposed} precedes chain tip timestamp {tip}")]
    StaleTimestamp { proposed: i64, tip: i64 },
    #[error("bad-index: expected {expected}, block carries {actual}")]
    BadIndex { expected: u64, actual: u64 },
    #[error("bad-linkage: prevHash does not match the chain tip hash")]
    BadLinkage,
    #[error("bad-hash: blockHash does not match recomputation")]
    BadHash,
    #[error("block index {0} out of range")]
    NotFound(u64),
}

/// The ordered, hash-linked sequence of committed blocks.
///
/// `propose` builds a linked candidate without mutating the chain, so a
/// consensus round can sit between proposal and `append`. `append` re-runs
/// the linkage checks and refuses anything inconsistent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Chain {
    blocks: Vec<Block>,
}

impl Chain {
    /// Fresh chain holding only the genesis block.
    pub fn new(genesis_timestamp: i64) -> Chain {
        let genesis = Block::new(
            0,
            genesis_timestamp,
            ContentHash::ZERO,
            BlockPayload::Genesis,
        );
        Chain {
            blocks: vec![genesis],
        }
    }

    /// Wrap an existing block sequence without checking it.
    /// Run [`Chain::validate`] before trusting the result.
    pub fn from_blocks(blocks: Vec<Block>) -> Chain {
        Chain { blocks }
    }

    pub fn len(&self) -> u64 {
        self.blocks.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn tip(&self) -> Option<&Block> {
        self.blocks.last()
    }

    /// The block at `index`.
    pub fn get(&self, index: u64) -> Result<&Block, LedgerError> {
        self.blocks
            .get(index as usize)
            .ok_or(LedgerError::NotFound(index))
    }

    /// Build a candidate block extending this chain. The chain itself is
    /// not modified.
    pub fn propose(&self, payload: BlockPayload, timestamp: i64) -> Result<Block, LedgerError> {
        let (prev_hash, tip_timestamp) = match self.tip() {
            Some(tip) => (tip.block_hash, tip.timestamp),
            None => (ContentHash::ZERO, i64::MIN),
        };
        if timestamp < tip_timestamp {
            return Err(LedgerError::StaleTimestamp {
                proposed: timestamp,
                tip: tip_timestamp,
            });
        }
        Ok(Block::new(self.len(), timestamp, prev_hash, payload))
    }

    /// Append a candidate after re-verifying index, linkage, hash and
    /// timestamp. On error the chain is unchanged.
    ///
    /// Consensus approval is the caller's responsibility; the service
    /// layer only appends committed candidates.
    pub fn append(&mut self, block: Block) -> Result<&Block, LedgerError> {
        let expected = self.len();
        if block.index != expected {
            return Err(LedgerError::BadIndex {
                expected,
                actual: block.index,
            });
        }
        if let Some(tip) = self.tip() {
            if block.prev_hash != tip.block_hash {
                return Err(LedgerError::BadLinkage);
            }
            if block.timestamp < tip.timestamp {
                return Err(LedgerError::StaleTimestamp {
                    proposed: block.timestamp,
                    tip: tip.timestamp,
                });
            }
        } else if block.prev_hash != ContentHash::ZERO {
            return Err(LedgerError::BadLinkage);
        }
        if block.recompute_hash() != block.block_hash {
            return Err(LedgerError::BadHash);
        }
        self.blocks.push(block);
        Ok(self.blocks.last().expect("just pushed"))
    }

    /// Validate the whole chain. Reports the smallest failing index.
    pub fn validate(&self) -> ValidationReport {
        let Some(genesis) = self.blocks.first() else {
            return ValidationReport::Invalid {
                index: 0,
                check: ValidationCheck::GenesisForm,
            };
        };
        if genesis.index != 0 {
            return ValidationReport::Invalid {
                index: 0,
                check: ValidationCheck::IndexContinuity,
            };
        }
        if genesis.prev_hash != ContentHash::ZERO {
            return ValidationReport::Invalid {
                index: 0,
                check: ValidationCheck::PrevHashLinkage,
            };
        }
        if !matches!(genesis.payload, BlockPayload::Genesis) {
            return ValidationReport::Invalid {
                index: 0,
                check: ValidationCheck::GenesisForm,
            };
        }
        if genesis.recompute_hash() != genesis.block_hash {
            return ValidationReport::Invalid {
                index: 0,
                check: ValidationCheck::HashRecomputation,
            };
        }
        for (prev, block) in self.blocks.iter().zip(self.blocks.iter().skip(1)) {
            let index = prev.index + 1;
            if block.index != index {
                return ValidationReport::Invalid {
                    index,
                    check: ValidationCheck::IndexContinuity,
                };
            }
            if block.timestamp < prev.timestamp {
                return ValidationReport::Invalid {
                    index,
                    check: ValidationCheck::TimestampMonotonicity,
                };
            }
            if block.prev_hash != prev.block_hash {
                return ValidationReport::Invalid {
                    index,
                    check: ValidationCheck::PrevHashLinkage,
                };
            }
            if block.recompute_hash() != block.block_hash {
                return ValidationReport::Invalid {
                    index,
                    check: ValidationCheck::HashRecomputation,
                };
            }
        }
        ValidationReport::Valid
    }
}
