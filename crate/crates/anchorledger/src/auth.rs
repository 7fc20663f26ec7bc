//! Credential verification and session-token lifecycle.
//!
//! Secrets are never stored: a credential keeps a random salt and the hash
//! of salt‖secret. Session tokens carry the user id, role and validity
//! window, authenticated by an HMAC-SHA-256 tag under the service's token
//! key; claims are readable but not forgeable.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use base64::engine::general_purpose::URL_SAFE_NO_PAD;
use base64::Engine;
use hmac::{Hmac, Mac};
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::Sha256;
use thiserror::Error;

use crate::ledger::{canonical_encode, hash_bytes, AuthorityRole, ContentHash};
use crate::policy::PolicyState;

type HmacSha256 = Hmac<Sha256>;

pub const SALT_LEN: usize = 16;
pub const TOKEN_KEY_LEN: usize = 32;

// ---------------------------------------------------------------------------
// Token key
// ---------------------------------------------------------------------------

/// 32-byte service key for token MACs.
#[derive(Clone, PartialEq, Eq)]
pub struct TokenKey([u8; TOKEN_KEY_LEN]);

impl TokenKey {
    pub fn from_bytes(bytes: [u8; TOKEN_KEY_LEN]) -> TokenKey {
        TokenKey(bytes)
    }

    pub fn from_hex(s: &str) -> Result<TokenKey, TokenKeyError> {
        let bytes = hex::decode(s).map_err(|_| TokenKeyError::NotHex)?;
        let bytes: [u8; TOKEN_KEY_LEN] =
            bytes.try_into().map_err(|_| TokenKeyError::WrongLength)?;
        Ok(TokenKey(bytes))
    }

    fn mac(&self, data: &[u8]) -> Vec<u8> {
        let mut mac = HmacSha256::new_from_slice(&self.0).expect("hmac accepts any key length");
        mac.update(data);
        mac.finalize().into_bytes().to_vec()
    }

    fn verify_mac(&self, data: &[u8], tag: &[u8]) -> bool {
        let mut mac = HmacSha256::new_from_slice(&self.0).expect("hmac accepts any key length");
        mac.update(data);
        // Constant-time comparison.
        mac.verify_slice(tag).is_ok()
    }
}

impl std::fmt::Debug for TokenKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("TokenKey(..)")
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenKeyError {
    #[error("token key must be hex")]
    NotHex,
    #[error("token key must be 32 bytes (64 hex characters)")]
    WrongLength,
}

// ---------------------------------------------------------------------------
// Session tokens
// ---------------------------------------------------------------------------

/// Token claims: the user's id, role and time validity. The MAC tag lives
/// in the encoded form produced by [`encode_token`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SessionToken {
    pub user_id: String,
    pub role: AuthorityRole,
    pub issued_at: i64,
    pub expires_at: i64,
}

impl SessionToken {
    pub fn issue(
        user_id: impl Into<String>,
        role: AuthorityRole,
        now: i64,
        ttl: i64,
    ) -> SessionToken {
        SessionToken {
            user_id: user_id.into(),
            role,
            issued_at: now,
            expires_at: now + ttl,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenError {
    #[error("malformed token encoding")]
    Format,
    #[error("token MAC does not verify")]
    Forgery,
    #[error("token expired")]
    Expired,
}

/// `base64url(claims)` ‖ "." ‖ `base64url(mac)`, where claims are the
/// canonical JSON encoding and the MAC is HMAC-SHA-256 over those bytes.
pub fn encode_token(token: &SessionToken, key: &TokenKey) -> String {
    let claims = canonical_encode(token).expect("claims have a canonical form");
    let tag = key.mac(&claims);
    format!(
        "{}.{}",
        URL_SAFE_NO_PAD.encode(&claims),
        URL_SAFE_NO_PAD.encode(tag)
    )
}

/// Decode and verify an encoded token. Claims come back only if the MAC
/// verifies and `now` is strictly before the expiry.
pub fn validate_token(encoded: &str, key: &TokenKey, now: i64) -> Result<SessionToken, TokenError> {
    let mut parts = encoded.split('.');
    let (Some(claims_b64), Some(tag_b64), None) = (parts.next(), parts.next(), parts.next()) else {
        return Err(TokenError::Format);
    };
    let claims = URL_SAFE_NO_PAD
        .decode(claims_b64)
        .map_err(|_| TokenError::Format)?;
    let tag = URL_SAFE_NO_PAD
        .decode(tag_b64)
        .map_err(|_| TokenError::Format)?;
    if !key.verify_mac(&claims, &tag) {
        return Err(TokenError::Forgery);
    }
    let token: SessionToken = serde_json::from_slice(&claims).map_err(|_| TokenError::Format)?;
    if now >= token.expires_at {
        return Err(TokenError::Expired);
    }
    Ok(token)
}

// ---------------------------------------------------------------------------
// Credentials
// ---------------------------------------------------------------------------

/// Salted verifier for one user. The secret itself is never kept.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Credential {
    pub user_id: String,
    #[serde(with = "salt_hex")]
    pub salt: [u8; SALT_LEN],
    pub verifier: ContentHash,
}

mod salt_hex {
    use super::SALT_LEN;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(salt: &[u8; SALT_LEN], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(salt))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<[u8; SALT_LEN], D::Error> {
        let text = String::deserialize(d)?;
        let bytes = hex::decode(&text).map_err(serde::de::Error::custom)?;
        bytes
            .try_into()
            .map_err(|_| serde::de::Error::custom("salt must be 16 bytes"))
    }
}

fn verifier_for(salt: &[u8; SALT_LEN], secret: &[u8]) -> ContentHash {
    let mut preimage = Vec::with_capacity(SALT_LEN + secret.len());
    preimage.extend_from_slice(salt);
    preimage.extend_from_slice(secret);
    hash_bytes(&preimage)
}

#[derive(Debug, Error)]
pub enum AuthError {
    #[error("unknown user: {0}")]
    UnknownUser(String),
    #[error("credential already registered for user: {0}")]
    AlreadyRegistered(String),
    #[error("credential store io: {0}")]
    Io(#[from] std::io::Error),
    #[error("credential store entry {0} is malformed: {1}")]
    Malformed(String, serde_json::Error),
}

/// Uniform authentication failure: carries nothing that would distinguish
/// an unknown user from a wrong secret.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rejection;

impl std::fmt::Display for Rejection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("authentication rejected")
    }
}

/// Off-chain user store holding one credential per user id. Optionally
/// directory-backed (`users/` under the service store root).
#[derive(Debug)]
pub struct CredentialStore {
    records: BTreeMap<String, Credential>,
    dir: Option<PathBuf>,
}

impl CredentialStore {
    pub fn in_memory() -> CredentialStore {
        CredentialStore {
            records: BTreeMap::new(),
            dir: None,
        }
    }

    /// Open a directory-backed store, loading any existing records.
    pub fn open(dir: impl Into<PathBuf>) -> Result<CredentialStore, AuthError> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut records = BTreeMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().and_then(|e| e.to_str()) != Some("json") {
                continue;
            }
            let raw = fs::read(&path)?;
            let credential: Credential = serde_json::from_slice(&raw)
                .map_err(|e| AuthError::Malformed(path.display().to_string(), e))?;
            records.insert(credential.user_id.clone(), credential);
        }
        Ok(CredentialStore {
            records,
            dir: Some(dir),
        })
    }

    pub fn contains(&self, user_id: &str) -> bool {
        self.records.contains_key(user_id)
    }

    /// Register a credential for an onboarded user with a fresh random
    /// salt. One credential per user id.
    pub fn register(
        &mut self,
        user_id: &str,
        secret: &[u8],
        state: &PolicyState,
    ) -> Result<&Credential, AuthError> {
        if !state.users.contains_key(user_id) {
            return Err(AuthError::UnknownUser(user_id.to_string()));
        }
        if self.records.contains_key(user_id) {
            return Err(AuthError::AlreadyRegistered(user_id.to_string()));
        }
        let mut salt = [0u8; SALT_LEN];
        rand::rng().fill(&mut salt[..]);
        let credential = Credential {
            user_id: user_id.to_string(),
            salt,
            verifier: verifier_for(&salt, secret),
        };
        if let Some(dir) = &self.dir {
            let path = credential_path(dir, user_id);
            let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
            fs::write(&tmp, serde_json::to_vec_pretty(&credential)?)?;
            fs::rename(&tmp, &path)?;
        }
        Ok(self
            .records
            .entry(user_id.to_string())
            .or_insert(credential))
    }

    /// Compare a presented secret against the stored verifier. Unknown
    /// users and wrong secrets are indistinguishable.
    pub fn verify(&self, user_id: &str, secret: &[u8]) -> bool {
        match self.records.get(user_id) {
            Some(credential) => verifier_for(&credential.salt, secret) == credential.verifier,
            None => false,
        }
    }
}

fn credential_path(dir: &Path, user_id: &str) -> PathBuf {
    // Hex filenames keep arbitrary user ids path-safe.
    dir.join(format!("{}.json", hex::encode(user_id.as_bytes())))
}

impl From<serde_json::Error> for AuthError {
    fn from(e: serde_json::Error) -> Self {
        AuthError::Io(std::io::Error::other(e))
    }
}
