//! All-or-nothing output files: everything is written to temporaries next
//! to the targets and renamed into place only once every output succeeded.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub struct OutputSet {
    pending: Vec<(PathBuf, PathBuf)>,
    committed: bool,
}

impl OutputSet {
    pub fn new() -> Self {
        Self {
            pending: Vec::new(),
            committed: false,
        }
    }

    /// A temporary path that becomes `target` on commit.
    pub fn stage(&mut self, target: &Path) -> PathBuf {
        let name = target.file_name().and_then(|n| n.to_str()).unwrap_or("output");
        let tmp = target.with_file_name(format!(".{name}.partial-{}", std::process::id()));
        self.pending.push((tmp.clone(), target.to_path_buf()));
        tmp
    }

    /// Stages `target` and writes it through `f`.
    pub fn write_with<F>(&mut self, target: &Path, f: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let tmp = self.stage(target);
        let mut w = BufWriter::new(File::create(&tmp).with_context(|| format!("cannot create {}", target.display()))?);
        f(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut done = Vec::new();
        for (tmp, target) in &self.pending {
            std::fs::rename(tmp, target).with_context(|| format!("cannot write {}", target.display()))?;
            done.push(target.clone());
        }
        self.committed = true;
        Ok(done)
    }
}

impl Drop for OutputSet {
    fn drop(&mut self) {
        if !self.committed {
            for (tmp, _) in &self.pending {
                let _ = std::fs::remove_file(tmp);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uncommitted_outputs_vanish() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("a.csv");
        {
            let mut set = OutputSet::new();
            set.write_with(&target, |w| Ok(writeln!(w, "x")?)).unwrap();
        }
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);

        let mut set = OutputSet::new();
        set.write_with(&target, |w| Ok(writeln!(w, "x")?)).unwrap();
        set.commit().unwrap();
        assert_eq!(std::fs::read_to_string(&target).unwrap(), "x\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
