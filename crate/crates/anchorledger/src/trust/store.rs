//! Off-chain storage backends: file bytes keyed by content hash and
//! certificate documents keyed by certificate id.
//!
//! The backends are dumb key-value stores; integrity checks live in the
//! upload and verify operations so no backend can weaken them.

use std::collections::BTreeMap;
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::ledger::{canonical_encode, ContentHash};

use super::DigitalCertificate;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store io: {0}")]
    Io(#[from] std::io::Error),
    #[error("store entry {0} is malformed: {1}")]
    Corrupt(String, serde_json::Error),
}

/// Content-addressed storage for file bytes and certificate documents.
pub trait OffChainStore {
    fn put_file(&mut self, hash: &ContentHash, content: &[u8]) -> Result<(), StoreError>;
    fn get_file(&self, hash: &ContentHash) -> Result<Option<Vec<u8>>, StoreError>;
    fn put_certificate(&mut self, certificate: &DigitalCertificate) -> Result<(), StoreError>;
    fn get_certificate(
        &self,
        certificate_id: &ContentHash,
    ) -> Result<Option<DigitalCertificate>, StoreError>;
}

/// In-memory store for tests and examples.
#[derive(Debug, Default)]
pub struct MemoryStore {
    files: BTreeMap<ContentHash, Vec<u8>>,
    certificates: BTreeMap<ContentHash, DigitalCertificate>,
}

impl MemoryStore {
    pub fn new() -> MemoryStore {
        MemoryStore::default()
    }

    pub fn file_count(&self) -> usize {
        self.files.len()
    }

    pub fn certificate_count(&self) -> usize {
        self.certificates.len()
    }

    /// Test hook: overwrite stored bytes without touching the key.
    pub fn tamper_file(&mut self, hash: &ContentHash, content: Vec<u8>) {
        self.files.insert(*hash, content);
    }

    /// Test hook: swap the document stored under a certificate id.
    pub fn tamper_certificate(&mut self, id: &ContentHash, certificate: DigitalCertificate) {
        self.certificates.insert(*id, certificate);
    }
}

impl OffChainStore for MemoryStore {
    fn put_file(&mut self, hash: &ContentHash, content: &[u8]) -> Result<(), StoreError> {
        self.files.entry(*hash).or_insert_with(|| content.to_vec());
        Ok(())
    }

    fn get_file(&self, hash: &ContentHash) -> Result<Option<Vec<u8>>, StoreError> {
        Ok(self.files.get(hash).cloned())
    }

    fn put_certificate(&mut self, certificate: &DigitalCertificate) -> Result<(), StoreError> {
        self.certificates
            .entry(certificate.certificate_id)
            .or_insert_with(|| certificate.clone());
        Ok(())
    }

    fn get_certificate(
        &self,
        certificate_id: &ContentHash,
    ) -> Result<Option<DigitalCertificate>, StoreError> {
        Ok(self.certificates.get(certificate_id).cloned())
    }
}

/// Directory-backed store: `files/<first2>/<hash>` for content and
/// `certs/<certificateId>.json` for certificate documents.
#[derive(Debug, Clone)]
pub struct DirStore {
    root: PathBuf,
}

impl DirStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<DirStore, StoreError> {
        let root = root.into();
        fs::create_dir_all(root.join("files"))?;
        fs::create_dir_all(root.join("certs"))?;
        Ok(DirStore { root })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn file_path(&self, hash: &ContentHash) -> PathBuf {
        let hex = hash.to_hex();
        self.root.join("files").join(&hex[..2]).join(hex)
    }

    pub fn certificate_path(&self, certificate_id: &ContentHash) -> PathBuf {
        self.root
            .join("certs")
            .join(format!("{}.json", certificate_id.to_hex()))
    }
}

fn read_optional(path: &Path) -> Result<Option<Vec<u8>>, StoreError> {
    match fs::read(path) {
        Ok(bytes) => Ok(Some(bytes)),
        Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
        Err(e) => Err(StoreError::Io(e)),
    }
}

/// Write through a same-directory temp file and rename, so an object only
/// ever appears under its final name complete. A torn write never
/// poisons a content-addressed key.
fn write_atomic(path: &Path, content: &[u8]) -> Result<(), StoreError> {
    let dir = path.parent().expect("store paths have a parent");
    fs::create_dir_all(dir)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(format!(".tmp-{}", std::process::id()));
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, content)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

impl OffChainStore for DirStore {
    fn put_file(&mut self, hash: &ContentHash, content: &[u8]) -> Result<(), StoreError> {
        let path = self.file_path(hash);
        if path.exists() {
            // Content-addressed: an existing key already holds these bytes.
            return Ok(());
        }
        write_atomic(&path, content)
    }

    fn get_file(&self, hash: &ContentHash) -> Result<Option<Vec<u8>>, StoreError> {
        read_optional(&self.file_path(hash))
    }

    fn put_certificate(&mut self, certificate: &DigitalCertificate) -> Result<(), StoreError> {
        let path = self.certificate_path(&certificate.certificate_id);
        if path.exists() {
            return Ok(());
        }
        let bytes = canonical_encode(certificate).expect("certificates have a canonical form");
        write_atomic(&path, &bytes)
    }

    fn get_certificate(
        &self,
        certificate_id: &ContentHash,
    ) -> Result<Option<DigitalCertificate>, StoreError> {
        let path = self.certificate_path(certificate_id);
        match read_optional(&path)? {
            Some(bytes) => serde_json::from_slice(&bytes)
                .map(Some)
                .map_err(|e| StoreError::Corrupt(path.display().to_string(), e)),
            None => Ok(None),
        }
    }
}
