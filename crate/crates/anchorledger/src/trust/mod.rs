//! Off-chain data trust: content-addressed storage, CA-free certificates,
//! on-chain anchoring, and integrity verification.
//!
//! A certificate's id is the hash of its own body, so certificates are
//! tamper-evident without an issuing authority; their legitimacy comes
//! from the on-chain anchor that binds them to a content hash. `verify`
//! proves, at any time, that stored bytes still match their anchor.

mod store;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auth::SessionToken;
use crate::consensus::{commit_block, ConsensusError, Validator};
use crate::ledger::{canonical_encode, hash_bytes, BlockPayload, Chain, ContentHash};
use crate::policy::PolicyState;

pub use store::{DirStore, MemoryStore, OffChainStore, StoreError};

// ---------------------------------------------------------------------------
// Certificates
// ---------------------------------------------------------------------------

/// Self-authenticating certificate: `certificate_id` is the hash of the
/// four body fields, recomputable by anyone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DigitalCertificate {
    pub server_id: String,
    pub user_id: String,
    pub expiry: i64,
    pub file_content_hash: ContentHash,
    pub certificate_id: ContentHash,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct CertificateBody<'a> {
    server_id: &'a str,
    user_id: &'a str,
    expiry: i64,
    file_content_hash: &'a ContentHash,
}

/// Hash of a certificate body's canonical encoding.
pub fn certificate_id(
    server_id: &str,
    user_id: &str,
    expiry: i64,
    file_content_hash: &ContentHash,
) -> ContentHash {
    let body = CertificateBody {
        server_id,
        user_id,
        expiry,
        file_content_hash,
    };
    let bytes = canonical_encode(&body).expect("certificate body has a canonical form");
    hash_bytes(&bytes)
}

impl DigitalCertificate {
    /// Recompute the id from the stored body fields.
    pub fn recompute_id(&self) -> ContentHash {
        certificate_id(
            &self.server_id,
            &self.user_id,
            self.expiry,
            &self.file_content_hash,
        )
    }
}

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

#[derive(Debug, Error)]
pub enum TrustError {
    #[error("certificate ttl must be positive, got {0}")]
    NonPositiveTtl(i64),
    #[error("integrity: {0}")]
    Integrity(&'static str),
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(
        "consensus rejected the anchor ({approvals} approvals, {rejections} rejections); \
         content {file_content_hash} is uploaded but unanchored"
    )]
    Unanchored {
        file_content_hash: ContentHash,
        approvals: u32,
        rejections: u32,
    },
    #[error(transparent)]
    Consensus(ConsensusError),
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Hash file contents. Identical to the ledger hashing rule; one rule
/// system-wide.
pub fn hash_file_contents(file_content: &[u8]) -> ContentHash {
    hash_bytes(file_content)
}

/// Create a certificate for `file_content` expiring at `now + ttl`.
pub fn issue_certificate(
    server_id: &str,
    user_id: &str,
    file_content: &[u8],
    ttl: i64,
    now: i64,
) -> Result<DigitalCertificate, TrustError> {
    if ttl <= 0 {
        return Err(TrustError::NonPositiveTtl(ttl));
    }
    let expiry = now + ttl;
    let file_content_hash = hash_file_contents(file_content);
    Ok(DigitalCertificate {
        server_id: server_id.to_string(),
        user_id: user_id.to_string(),
        expiry,
        file_content_hash,
        certificate_id: certificate_id(server_id, user_id, expiry, &file_content_hash),
    })
}

/// Store file bytes and a certificate document after checking both keys
/// recompute from their values. On error the store is unchanged.
pub fn upload_data<S: OffChainStore>(
    store: &mut S,
    file_content_hash: &ContentHash,
    file_content: &[u8],
    cert_id: &ContentHash,
    certificate: &DigitalCertificate,
) -> Result<(), TrustError> {
    if hash_file_contents(file_content) != *file_content_hash {
        return Err(TrustError::Integrity(
            "fileContentHash does not match file content",
        ));
    }
    if certificate.certificate_id != *cert_id || certificate.recompute_id() != *cert_id {
        return Err(TrustError::Integrity(
            "certificateId does not match certificate body",
        ));
    }
    store.put_file(file_content_hash, file_content)?;
    store.put_certificate(certificate)?;
    Ok(())
}

/// Receipt for content linked on-chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AnchorReceipt {
    pub file_content_hash: ContentHash,
    pub certificate_id: ContentHash,
    pub block_index: u64,
    pub expiry: i64,
}

/// Issue a certificate, upload content off-chain, then anchor both on
/// the chain through a consensus vote.
///
/// Upload happens first: if the vote rejects the anchor, the content stays
/// in the store (content addressing makes the orphan harmless and a retry
/// idempotent) and the error carries the hash for that retry.
#[allow(clippy::too_many_arguments)]
pub fn link_off_chain_to_on_chain<S: OffChainStore>(
    store: &mut S,
    chain: &mut Chain,
    panel: &[Validator],
    server_id: &str,
    user_id: &str,
    file_content: &[u8],
    ttl: i64,
    now: i64,
) -> Result<AnchorReceipt, TrustError> {
    let certificate = issue_certificate(server_id, user_id, file_content, ttl, now)?;
    let file_content_hash = certificate.file_content_hash;
    upload_data(
        store,
        &file_content_hash,
        file_content,
        &certificate.certificate_id,
        &certificate,
    )?;
    let payload = BlockPayload::Anchor {
        file_content_hash,
        certificate_id: certificate.certificate_id,
        server_id: server_id.to_string(),
        user_id: user_id.to_string(),
        expiry: certificate.expiry,
    };
    match commit_block(chain, panel, payload, now) {
        Ok(receipt) => Ok(AnchorReceipt {
            file_content_hash,
            certificate_id: certificate.certificate_id,
            block_index: receipt.block_index,
            expiry: certificate.expiry,
        }),
        Err(ConsensusError::Rejected {
            approvals,
            rejections,
        }) => Err(TrustError::Unanchored {
            file_content_hash,
            approvals,
            rejections,
        }),
        Err(other) => Err(TrustError::Consensus(other)),
    }
}

// ---------------------------------------------------------------------------
// Verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Trusted,
    Untrusted,
}

/// Outcome of checking stored bytes against their on-chain anchor.
/// Trusted requires all four component checks to hold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct VerificationReport {
    pub anchor_found: bool,
    pub hash_matches: bool,
    pub certificate_valid: bool,
    pub expired: bool,
    pub verdict: Verdict,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub reasons: Vec<String>,
}

impl VerificationReport {
    pub fn is_trusted(&self) -> bool {
        self.verdict == Verdict::Trusted
    }
}

struct AnchorView<'a> {
    certificate_id: &'a ContentHash,
    expiry: i64,
}

fn latest_anchor<'a>(chain: &'a Chain, hash: &ContentHash) -> Option<AnchorView<'a>> {
    chain.blocks().iter().rev().find_map(|block| {
        if let BlockPayload::Anchor {
            file_content_hash,
            certificate_id,
            expiry,
            ..
        } = &block.payload
        {
            (file_content_hash == hash).then_some(AnchorView {
                certificate_id,
                expiry: *expiry,
            })
        } else {
            None
        }
    })
}

/// Check a content hash against the chain and store: locate the latest
/// anchor, recompute the stored bytes' hash, recompute the certificate id,
/// and test expiry. Every failure mode is a report field, not an error.
pub fn verify<S: OffChainStore>(
    file_content_hash: &ContentHash,
    chain: &Chain,
    store: &S,
    now: i64,
) -> VerificationReport {
    let mut reasons = Vec::new();

    let anchor = latest_anchor(chain, file_content_hash);
    let anchor_found = anchor.is_some();
    if !anchor_found {
        reasons.push("no anchor on chain".to_string());
    }

    let hash_matches = match store.get_file(file_content_hash) {
        Ok(Some(bytes)) => {
            if hash_file_contents(&bytes) == *file_content_hash {
                true
            } else {
                reasons.push("hash mismatch".to_string());
                false
            }
        }
        Ok(None) => {
            reasons.push("stored file missing".to_string());
            false
        }
        Err(_) => {
            reasons.push("stored file unreadable".to_string());
            false
        }
    };

    let certificate_valid = match &anchor {
        Some(anchor) => match store.get_certificate(anchor.certificate_id) {
            Ok(Some(certificate)) => {
                let recomputed = certificate.recompute_id();
                if recomputed == *anchor.certificate_id
                    && certificate.certificate_id == *anchor.certificate_id
                    && certificate.file_content_hash == *file_content_hash
                {
                    true
                } else {
                    reasons.push("certificate invalid".to_string());
                    false
                }
            }
            Ok(None) => {
                reasons.push("certificate missing".to_string());
                false
            }
            Err(_) => {
                reasons.push("certificate unreadable".to_string());
                false
            }
        },
        None => false,
    };

    let expired = match &anchor {
        Some(anchor) if now >= anchor.expiry => {
            reasons.push("expired".to_string());
            true
        }
        _ => false,
    };

    let trusted = anchor_found && hash_matches && certificate_valid && !expired;
    VerificationReport {
        anchor_found,
        hash_matches,
        certificate_valid,
        expired,
        verdict: if trusted {
            Verdict::Trusted
        } else {
            Verdict::Untrusted
        },
        reasons,
    }
}

// ---------------------------------------------------------------------------
// Gated reads
// ---------------------------------------------------------------------------

/// Why a gated read was refused.
#[derive(Debug, Error)]
pub enum AccessDenial {
    #[error("permission denied: {user_id} may not access {functionality_name}")]
    PermissionDenied {
        user_id: String,
        functionality_name: String,
    },
    #[error("data failed integrity verification")]
    Untrusted(VerificationReport),
}

/// Permission-gated, integrity-gated content read. Returns the bytes and
/// their certificate only when the token's user holds the functionality
/// permission and `verify` reports Trusted. The service layer audits
/// every call.
pub fn get_file<S: OffChainStore>(
    store: &S,
    chain: &Chain,
    token: &SessionToken,
    state: &PolicyState,
    file_content_hash: &ContentHash,
    functionality_name: &str,
    now: i64,
) -> Result<(Vec<u8>, DigitalCertificate), AccessDenial> {
    if !state.check_permission(&token.user_id, functionality_name) {
        return Err(AccessDenial::PermissionDenied {
            user_id: token.user_id.clone(),
            functionality_name: functionality_name.to_string(),
        });
    }
    let report = verify(file_content_hash, chain, store, now);
    if !report.is_trusted() {
        return Err(AccessDenial::Untrusted(report));
    }
    let anchor = latest_anchor(chain, file_content_hash).expect("verified anchor exists");
    let content = store
        .get_file(file_content_hash)
        .ok()
        .flatten()
        .expect("verified file exists");
    let certificate = store
        .get_certificate(anchor.certificate_id)
        .ok()
        .flatten()
        .expect("verified certificate exists");
    Ok((content, certificate))
}

#[cfg(test)]
mod tests;
