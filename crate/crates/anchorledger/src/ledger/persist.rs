//! Chain file persistence: one canonical-JSON block per line, LF endings.
//!
//! The file is append-only in normal operation. A crash mid-append can
//! leave a partial trailing line; loading tolerates that by dropping the
//! tail and reporting it, and [`ChainStore::open`] truncates the file so
//! later appends continue from the last complete block.

use std::fs::{File, OpenOptions};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::{canonical_encode, Block, Chain};

#[derive(Debug, Error)]
pub enum ChainFileError {
    #[error("chain file io: {0}")]
    Io(#[from] std::io::Error),
    #[error("chain file line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
}

/// Result of reading a chain file.
#[derive(Debug)]
pub struct LoadedChain {
    pub chain: Chain,
    /// True when a partial trailing line was dropped during recovery.
    pub recovered_partial_line: bool,
}

struct ParsedFile {
    blocks: Vec<Block>,
    recovered: bool,
    /// Byte length of the complete-line prefix.
    valid_len: u64,
    /// True when the final line parsed but lost its LF terminator.
    missing_final_newline: bool,
}

/// Read a chain file without modifying it.
///
/// An unterminated final line that fails to parse is treated as a
/// crash-truncated append and dropped; a malformed line anywhere else is
/// an error.
pub fn read_chain_file(path: &Path) -> Result<LoadedChain, ChainFileError> {
    let mut raw = Vec::new();
    File::open(path)?.read_to_end(&mut raw)?;
    let parsed = parse_lines(&raw)?;
    Ok(LoadedChain {
        chain: Chain::from_blocks(parsed.blocks),
        recovered_partial_line: parsed.recovered,
    })
}

fn parse_lines(raw: &[u8]) -> Result<ParsedFile, ChainFileError> {
    let mut parsed = ParsedFile {
        blocks: Vec::new(),
        recovered: false,
        valid_len: 0,
        missing_final_newline: false,
    };
    let mut line_no = 0usize;
    let mut rest = raw;
    while !rest.is_empty() {
        line_no += 1;
        let (line, consumed, terminated) = match rest.iter().position(|&b| b == b'\n') {
            Some(pos) => (&rest[..pos], pos + 1, true),
            None => (rest, rest.len(), false),
        };
        match serde_json::from_slice::<Block>(line) {
            Ok(block) => {
                parsed.blocks.push(block);
                parsed.valid_len += consumed as u64;
                parsed.missing_final_newline = !terminated;
            }
            Err(_) if !terminated => {
                parsed.recovered = true;
                break;
            }
            Err(source) => {
                return Err(ChainFileError::Parse {
                    line: line_no,
                    source,
                });
            }
        }
        rest = &rest[consumed..];
    }
    Ok(parsed)
}

/// File-backed append-only chain storage.
pub struct ChainStore {
    path: PathBuf,
}

impl ChainStore {
    /// Open an existing chain file for reading and appending.
    ///
    /// If a partial trailing line is found it is physically truncated away
    /// so subsequent appends extend the last complete block.
    pub fn open(path: impl Into<PathBuf>) -> Result<(ChainStore, LoadedChain), ChainFileError> {
        let path = path.into();
        let mut raw = Vec::new();
        File::open(&path)?.read_to_end(&mut raw)?;
        let parsed = parse_lines(&raw)?;
        if parsed.recovered {
            let file = OpenOptions::new().write(true).open(&path)?;
            file.set_len(parsed.valid_len)?;
            file.sync_all()?;
        } else if parsed.missing_final_newline {
            let mut file = OpenOptions::new().append(true).open(&path)?;
            file.write_all(b"\n")?;
            file.sync_all()?;
        }
        let loaded = LoadedChain {
            chain: Chain::from_blocks(parsed.blocks),
            recovered_partial_line: parsed.recovered,
        };
        Ok((ChainStore { path }, loaded))
    }

    /// Create a new chain file holding `chain`'s blocks. Fails if the file
    /// already exists.
    pub fn create(path: impl Into<PathBuf>, chain: &Chain) -> Result<ChainStore, ChainFileError> {
        let path = path.into();
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent)?;
            }
        }
        let mut file = OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)?;
        for block in chain.blocks() {
            file.write_all(&block_line(block))?;
        }
        file.sync_all()?;
        Ok(ChainStore { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Append one block as a canonical JSON line. A write torn by a crash
    /// is recovered as a partial trailing line on the next open.
    pub fn append(&self, block: &Block) -> Result<(), ChainFileError> {
        let mut file = OpenOptions::new().append(true).open(&self.path)?;
        file.write_all(&block_line(block))?;
        Ok(())
    }
}

fn block_line(block: &Block) -> Vec<u8> {
    let mut line = canonical_encode(block).expect("blocks have a canonical form");
    line.push(b'\n');
    line
}
