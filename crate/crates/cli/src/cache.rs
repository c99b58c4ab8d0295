//! Solver artifacts under `<out>/<config hash>/`.
//!
//! Each file carries a `# config_hash=` line. A missing file, an unreadable
//! table or a hash that differs from the current configuration is a cache
//! miss; nothing stale is ever loaded.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use quickdet::io::Metadata;
use quickdet::protocol::ActionKernel;
use quickdet::solver::{Policy, ValueTable};

use crate::error::{CliError, CliResult};

pub const KERNEL: &str = "kernel.csv";
pub const VALUE: &str = "value.csv";
pub const POLICY: &str = "policy.csv";

pub struct Cache {
    dir: PathBuf,
    hash: String,
}

/// Writes `path` through a sibling temp file and a rename, so readers see
/// either the old file or the complete new one.
pub fn write_atomic<F>(path: &Path, fill: F) -> CliResult<()>
where
    F: FnOnce(&mut BufWriter<File>) -> CliResult<()>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let result = (|| {
        let mut w = BufWriter::new(File::create(&tmp)?);
        fill(&mut w)?;
        w.flush()?;
        w.get_ref().sync_all()?;
        drop(w);
        fs::rename(&tmp, path)?;
        Ok(())
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

impl Cache {
    pub fn new(out: &Path, hash: &str) -> Self {
        Self { dir: out.join(hash), hash: hash.to_string() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn metadata(&self) -> Metadata {
        let mut meta = Metadata::new();
        meta.insert("config_hash".into(), self.hash.clone());
        meta
    }

    /// Stores all three artifacts. If any write fails, the ones already
    /// written are removed again.
    pub fn store(&self, kernel: &ActionKernel, value: &ValueTable, policy: &Policy) -> CliResult<()> {
        let meta = self.metadata();
        let result = write_atomic(&self.dir.join(KERNEL), |w| Ok(kernel.write_csv(w, &meta)?))
            .and_then(|_| write_atomic(&self.dir.join(VALUE), |w| Ok(value.write_csv(policy, w, &meta)?)))
            .and_then(|_| write_atomic(&self.dir.join(POLICY), |w| Ok(policy.write_csv(w, &meta)?)));
        if result.is_err() {
            for name in [KERNEL, VALUE, POLICY] {
                let _ = fs::remove_file(self.dir.join(name));
            }
        }
        result
    }

    fn open(&self, name: &str) -> CliResult<File> {
        let path = self.dir.join(name);
        File::open(&path).map_err(|e| {
            CliError::CacheMiss(format!("{} is not available ({e}); run `solve` with this configuration first", path.display()))
        })
    }

    fn check(&self, name: &str, meta: &Metadata) -> CliResult<()> {
        match meta.get("config_hash") {
            Some(h) if *h == self.hash => Ok(()),
            found => Err(CliError::CacheMiss(format!(
                "{} was written for config hash {}, expected {}",
                self.dir.join(name).display(),
                found.map(String::as_str).unwrap_or("<none>"),
                self.hash
            ))),
        }
    }

    fn unreadable(&self, name: &str, e: quickdet::Error) -> CliError {
        CliError::CacheMiss(format!("{} is unreadable: {e}", self.dir.join(name).display()))
    }

    pub fn load_kernel(&self) -> CliResult<ActionKernel> {
        let (kernel, meta) = ActionKernel::read_csv(self.open(KERNEL)?).map_err(|e| self.unreadable(KERNEL, e))?;
        self.check(KERNEL, &meta)?;
        Ok(kernel)
    }

    pub fn load_policy(&self) -> CliResult<Policy> {
        let (policy, meta) = Policy::read_csv(self.open(POLICY)?).map_err(|e| self.unreadable(POLICY, e))?;
        self.check(POLICY, &meta)?;
        Ok(policy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use quickdet::solver::BeliefGrid;

    fn scratch(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!("quickdet-cache-{tag}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&dir);
        dir
    }

    #[test]
    fn policy_roundtrip_and_hash_mismatch() {
        let out = scratch("roundtrip");
        let grid = BeliefGrid::new(4).unwrap();
        let policy = Policy::threshold_rule(grid, 0.5);
        let cache = Cache::new(&out, "aaaa");
        write_atomic(&cache.dir().join(POLICY), |w| Ok(policy.write_csv(w, &cache.metadata())?)).unwrap();
        assert_eq!(cache.load_policy().unwrap(), policy);
        // same file, different expected hash
        let other = Cache { dir: cache.dir().to_path_buf(), hash: "bbbb".into() };
        assert_eq!(other.load_policy().unwrap_err().code(), 4);
        assert_eq!(cache.load_kernel().unwrap_err().code(), 4);
        fs::remove_dir_all(&out).unwrap();
    }

    #[test]
    fn failed_write_leaves_nothing_behind() {
        let out = scratch("partial");
        let path = out.join("x.csv");
        let err = write_atomic(&path, |w| {
            w.write_all(b"half")?;
            Err(CliError::Numerical("boom".into()))
        })
        .unwrap_err();
        assert_eq!(err.code(), 3);
        assert_eq!(fs::read_dir(&out).unwrap().count(), 0);
        fs::remove_dir_all(&out).unwrap();
    }
}
