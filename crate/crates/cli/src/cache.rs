//! Per-`n` cache of good-monomial bases and pairing matrices.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use keel::intersect::{pairing_matrix, PairingMatrix, PairingMatrixJson};
use keel::trees::{enumerate_stable_trees, TreeJson};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const FORMAT: &str = "keel-cache/1";
pub const ENV: &str = "KEEL_CACHE_DIR";

#[derive(Debug, Serialize, Deserialize)]
struct CacheFile {
    format: String,
    n: usize,
    /// Good monomials by degree, in enumeration order.
    bases: Vec<Vec<TreeJson>>,
    /// Pairing of degree `r` against `n - 3 - r`, indexed by `r`.
    pairings: Vec<PairingMatrixJson>,
}

pub struct Cache {
    dir: Option<PathBuf>,
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.display().to_string(), source }
}

impl Cache {
    pub fn new(dir: Option<PathBuf>) -> Self {
        Cache { dir }
    }

    fn path(&self, n: usize) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(format!("m0n-{n}.json")))
    }

    /// Pairing matrices for every degree, read from the cache when a file
    /// of the current format with matching bases exists.
    pub fn pairings(&self, n: usize) -> CliResult<Vec<PairingMatrix>> {
        let bases: Vec<Vec<TreeJson>> = (0..=n - 3)
            .map(|r| Ok(enumerate_stable_trees(n, r)?.iter().map(TreeJson::from).collect()))
            .collect::<keel::Result<_>>()?;
        if let Some(path) = self.path(n) {
            if let Some(found) = load(&path, n, &bases) {
                return Ok(found);
            }
        }
        let ms: Vec<PairingMatrix> = (0..=n - 3).map(|r| pairing_matrix(n, r, false)).collect::<keel::Result<_>>()?;
        if let Some(path) = self.path(n) {
            let file = CacheFile {
                format: FORMAT.into(),
                n,
                bases,
                pairings: ms.iter().map(PairingMatrix::to_json).collect(),
            };
            store(&path, &file)?;
        }
        Ok(ms)
    }
}

/// A stale, foreign or corrupt file is a miss.
fn load(path: &Path, n: usize, bases: &[Vec<TreeJson>]) -> Option<Vec<PairingMatrix>> {
    let text = fs::read_to_string(path).ok()?;
    let file: CacheFile = serde_json::from_str(&text).ok()?;
    if file.format != FORMAT || file.n != n || file.bases != bases || file.pairings.len() != bases.len() {
        return None;
    }
    let ms: Vec<PairingMatrix> =
        file.pairings.iter().map(PairingMatrix::from_json).collect::<keel::Result<_>>().ok()?;
    let consistent = ms.iter().enumerate().all(|(r, m)| {
        m.n == n
            && m.r == r
            && !m.invariant
            && m.row_basis.iter().map(TreeJson::from).eq(bases[r].iter().cloned())
            && m.col_basis.iter().map(TreeJson::from).eq(bases[n - 3 - r].iter().cloned())
    });
    consistent.then_some(ms)
}

fn store(path: &Path, file: &CacheFile) -> CliResult<()> {
    let dir = path.parent().expect("cache files live in a directory");
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(dir))?;
    serde_json::to_writer(&mut tmp, file)?;
    tmp.flush().map_err(io(path))?;
    tmp.persist(path).map_err(|e| CliError::Io { path: path.display().to_string(), source: e.error })?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn miss_then_hit() {
        let dir = tempfile::tempdir().unwrap();
        let cache = Cache::new(Some(dir.path().to_path_buf()));
        let first = cache.pairings(5).unwrap();
        assert!(dir.path().join("m0n-5.json").exists());
        let second = cache.pairings(5).unwrap();
        assert_eq!(first, second);
        assert_eq!(Cache::new(None).pairings(5).unwrap(), first);
    }

    #[test]
    fn corrupt_file_is_recomputed() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("m0n-5.json"), "{\"format\":\"keel-cache/0\"}").unwrap();
        let cache = Cache::new(Some(dir.path().to_path_buf()));
        assert_eq!(cache.pairings(5).unwrap(), Cache::new(None).pairings(5).unwrap());
        let text = fs::read_to_string(dir.path().join("m0n-5.json")).unwrap();
        assert!(text.contains(FORMAT));
    }
}
