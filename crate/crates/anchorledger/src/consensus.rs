//! Voting-based agreement on candidate blocks.
//!
//! A panel of in-process validators votes one synchronous round per
//! candidate; a strict majority of approvals commits it. Honest validators
//! vote by re-deriving the candidate checks themselves, so agreement with
//! the ledger's own append acceptance is a checked property, not an
//! assumption.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ledger::{compute_block_hash, Block, BlockPayload, Chain, LedgerError};

/// How a validator decides its vote.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidatorBehavior {
    /// Approves iff [`validate_candidate`] passes.
    Honest,
    /// Rejects everything.
    AlwaysReject,
    /// Votes by a generator seeded from `seed` and the candidate hash.
    RandomVote { seed: u64 },
}

/// One member of a voting panel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Validator {
    pub validator_id: String,
    pub behavior: ValidatorBehavior,
}

impl Validator {
    pub fn honest(id: impl Into<String>) -> Validator {
        Validator {
            validator_id: id.into(),
            behavior: ValidatorBehavior::Honest,
        }
    }

    pub fn always_reject(id: impl Into<String>) -> Validator {
        Validator {
            validator_id: id.into(),
            behavior: ValidatorBehavior::AlwaysReject,
        }
    }

    pub fn random_vote(id: impl Into<String>, seed: u64) -> Validator {
        Validator {
            validator_id: id.into(),
            behavior: ValidatorBehavior::RandomVote { seed },
        }
    }
}

/// Panel entry as written in the service config file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ValidatorSpec {
    pub validator_id: String,
    pub behavior: BehaviorKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BehaviorKind {
    Honest,
    AlwaysReject,
    RandomVote,
}

impl ValidatorSpec {
    pub fn into_validator(self) -> Result<Validator, ConsensusError> {
        let behavior = match self.behavior {
            BehaviorKind::Honest => ValidatorBehavior::Honest,
            BehaviorKind::AlwaysReject => ValidatorBehavior::AlwaysReject,
            BehaviorKind::RandomVote => ValidatorBehavior::RandomVote {
                seed: self
                    .seed
                    .ok_or_else(|| ConsensusError::MissingSeed(self.validator_id.clone()))?,
            },
        };
        Ok(Validator {
            validator_id: self.validator_id,
            behavior,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Vote {
    Approve,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VoteOutcome {
    Committed,
    Rejected,
}

/// Tally of one voting round.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VoteResult {
    pub approvals: u32,
    pub rejections: u32,
    pub outcome: VoteOutcome,
    pub per_validator: BTreeMap<String, Vote>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ConsensusError {
    #[error("validator panel is empty")]
    EmptyPanel,
    #[error("duplicate validatorId in panel: {0}")]
    DuplicateValidatorId(String),
    #[error("validator {0} uses RandomVote but no seed is configured")]
    MissingSeed(String),
    #[error("candidate rejected by vote: {approvals} approvals, {rejections} rejections")]
    Rejected { approvals: u32, rejections: u32 },
    #[error(transparent)]
    Ledger(#[from] LedgerError),
}

/// A validator's own derivation of whether `candidate` may extend
/// `chain_view`: index continuity, prevHash linkage, hash recomputation
/// and timestamp monotonicity, all re-derived here rather than delegated
/// to the ledger's append path. Payload well-formedness is guaranteed by
/// the typed payload itself (enforced at decode time for wire input).
pub fn validate_candidate(chain_view: &Chain, candidate: &Block) -> bool {
    let Some(tip) = chain_view.tip() else {
        return false;
    };
    if candidate.index != chain_view.len() {
        return false;
    }
    if candidate.prev_hash != tip.block_hash {
        return false;
    }
    if candidate.timestamp < tip.timestamp {
        return false;
    }
    let recomputed = compute_block_hash(
        candidate.index,
        candidate.timestamp,
        &candidate.prev_hash,
        &candidate.payload,
    );
    recomputed == candidate.block_hash
}

fn cast_vote(validator: &Validator, chain_view: &Chain, candidate: &Block) -> Vote {
    match validator.behavior {
        ValidatorBehavior::Honest => {
            if validate_candidate(chain_view, candidate) {
                Vote::Approve
            } else {
                Vote::Reject
            }
        }
        ValidatorBehavior::AlwaysReject => Vote::Reject,
        ValidatorBehavior::RandomVote { seed } => {
            let prefix = u64::from_le_bytes(
                candidate.block_hash.as_bytes()[..8]
                    .try_into()
                    .expect("hash is 32 bytes"),
            );
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ prefix);
            if rng.random_bool(0.5) {
                Vote::Approve
            } else {
                Vote::Reject
            }
        }
    }
}

/// Run one voting round over `panel`. Outcome is Committed iff approvals
/// form a strict majority of the panel.
pub fn run_vote(
    panel: &[Validator],
    chain_view: &Chain,
    candidate: &Block,
) -> Result<VoteResult, ConsensusError> {
    if panel.is_empty() {
        return Err(ConsensusError::EmptyPanel);
    }
    let mut per_validator = BTreeMap::new();
    let mut approvals = 0u32;
    for validator in panel {
        let vote = cast_vote(validator, chain_view, candidate);
        if per_validator
            .insert(validator.validator_id.clone(), vote)
            .is_some()
        {
            return Err(ConsensusError::DuplicateValidatorId(
                validator.validator_id.clone(),
            ));
        }
        if vote == Vote::Approve {
            approvals += 1;
        }
    }
    let panel_size = panel.len() as u32;
    let rejections = panel_size - approvals;
    let outcome = if 2 * approvals > panel_size {
        VoteOutcome::Committed
    } else {
        VoteOutcome::Rejected
    };
    Ok(VoteResult {
        approvals,
        rejections,
        outcome,
        per_validator,
    })
}

/// Receipt for a payload committed through a vote.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommitReceipt {
    pub block_index: u64,
    pub vote: VoteResult,
}

/// Propose `payload` on `chain`, run the panel vote, and append on a
/// Committed outcome. On rejection the chain is unchanged.
pub fn commit_block(
    chain: &mut Chain,
    panel: &[Validator],
    payload: BlockPayload,
    timestamp: i64,
) -> Result<CommitReceipt, ConsensusError> {
    let candidate = chain.propose(payload, timestamp)?;
    let vote = run_vote(panel, chain, &candidate)?;
    match vote.outcome {
        VoteOutcome::Committed => {
            let block = chain.append(candidate)?;
            Ok(CommitReceipt {
                block_index: block.index,
                vote,
            })
        }
        VoteOutcome::Rejected => Err(ConsensusError::Rejected {
            approvals: vote.approvals,
            rejections: vote.rejections,
        }),
    }
}
