//! Streaming JSONL input, atomic output and per-item error bookkeeping.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tempfile::NamedTempFile;

/// Lines handed to the worker pool at once.
pub const CHUNK_LINES: usize = 2048;

#[derive(Debug, Clone)]
pub struct Line {
    /// 1-based line number in the input file.
    pub number: usize,
    pub text: String,
}

/// Reads non-blank lines in chunks of at most `CHUNK_LINES`.
pub struct LineChunks {
    reader: BufReader<File>,
    path: PathBuf,
    number: usize,
    done: bool,
}

impl LineChunks {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
        Ok(Self {
            reader: BufReader::new(file),
            path: path.to_path_buf(),
            number: 0,
            done: false,
        })
    }
}

impl Iterator for LineChunks {
    type Item = Result<Vec<Line>>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let mut chunk = Vec::new();
        while chunk.len() < CHUNK_LINES {
            let mut text = String::new();
            match self.reader.read_line(&mut text) {
                Ok(0) => {
                    self.done = true;
                    break;
                }
                Ok(_) => {
                    self.number += 1;
                    if !text.trim().is_empty() {
                        chunk.push(Line {
                            number: self.number,
                            text,
                        });
                    }
                }
                Err(e) => {
                    self.done = true;
                    return Some(Err(anyhow::Error::new(e).context(format!(
                        "reading {} after line {}",
                        self.path.display(),
                        self.number
                    ))));
                }
            }
        }
        if chunk.is_empty() && self.done {
            None
        } else {
            Some(Ok(chunk))
        }
    }
}

/// A file that only appears at its target path once committed.
pub struct AtomicFile {
    writer: BufWriter<NamedTempFile>,
    target: PathBuf,
}

impl AtomicFile {
    pub fn create(target: &Path) -> Result<Self> {
        let dir = match target.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let tmp = NamedTempFile::new_in(dir)
            .with_context(|| format!("cannot create a temporary file in {}", dir.display()))?;
        Ok(Self {
            writer: BufWriter::new(tmp),
            target: target.to_path_buf(),
        })
    }

    pub fn commit(self) -> Result<()> {
        let tmp = self
            .writer
            .into_inner()
            .map_err(|e| e.into_error())
            .with_context(|| format!("writing {}", self.target.display()))?;
        tmp.as_file().sync_all()?;
        tmp.persist(&self.target)
            .map_err(|e| e.error)
            .with_context(|| format!("cannot move output into {}", self.target.display()))?;
        Ok(())
    }
}

impl Write for AtomicFile {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.writer.write(buf)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.writer.flush()
    }
}

pub fn write_atomic(target: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = AtomicFile::create(target)?;
    f.write_all(bytes)?;
    f.commit()
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ItemError {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub message: String,
}

impl ItemError {
    pub fn at_line(line: usize, message: impl ToString) -> Self {
        Self {
            line: Some(line),
            id: None,
            message: message.to_string(),
        }
    }

    pub fn with_id(mut self, id: &str) -> Self {
        self.id = Some(id.to_string());
        self
    }
}

impl std::fmt::Display for ItemError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if let Some(line) = self.line {
            write!(f, "line {line}: ")?;
        }
        if let Some(id) = &self.id {
            write!(f, "[{id}] ")?;
        }
        f.write_str(&self.message)
    }
}

/// Machine-readable run summary written by `--errors-json`.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunSummary {
    pub command: String,
    pub n_items: usize,
    pub n_written: usize,
    pub n_filtered: usize,
    pub n_errors: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fatal: Option<String>,
    pub errors: Vec<ItemError>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub filtered: Vec<ItemError>,
}

impl RunSummary {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            ..Self::default()
        }
    }

    pub fn error(&mut self, e: ItemError) {
        eprintln!("error: {e}");
        self.n_errors += 1;
        self.errors.push(e);
    }

    pub fn filter(&mut self, e: ItemError) {
        eprintln!("filtered: {e}");
        self.n_filtered += 1;
        self.filtered.push(e);
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// Independent random stream for one purpose and item index.
pub fn item_rng(seed: u64, purpose: u8, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((purpose as u64) << 56) | (index & ((1 << 56) - 1)));
    rng
}

pub const STREAM_SHUFFLE: u8 = 1;
pub const STREAM_BARGE_IN: u8 = 2;
pub const STREAM_SIMULATE: u8 = 3;

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_independent_and_stable() {
        let a: u64 = item_rng(7, 1, 0).random();
        let b: u64 = item_rng(7, 1, 1).random();
        let c: u64 = item_rng(7, 2, 0).random();
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, item_rng(7, 1, 0).random::<u64>());
    }

    #[test]
    fn chunks_skip_blank_lines_but_keep_numbers() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("in.jsonl");
        std::fs::write(&p, "a\n\n  \nb\n").unwrap();
        let lines: Vec<Line> = LineChunks::open(&p)
            .unwrap()
            .flat_map(|c| c.unwrap())
            .collect();
        assert_eq!(
            lines.iter().map(|l| l.number).collect::<Vec<_>>(),
            vec![1, 4]
        );
    }

    #[test]
    fn atomic_file_appears_only_on_commit() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("out.txt");
        {
            let mut f = AtomicFile::create(&p).unwrap();
            f.write_all(b"partial").unwrap();
        }
        assert!(!p.exists());
        let mut f = AtomicFile::create(&p).unwrap();
        f.write_all(b"done").unwrap();
        f.commit().unwrap();
        assert_eq!(std::fs::read_to_string(&p).unwrap(), "done");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
