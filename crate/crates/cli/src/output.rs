//! Output directory staging: files are written to a sibling staging directory
//! and moved into place only when every artifact has been produced.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};

#[derive(Debug)]
pub struct Staging {
    root: PathBuf,
    out: PathBuf,
    files: Vec<String>,
    committed: bool,
}

impl Staging {
    pub fn new(out: &Path) -> Result<Self> {
        let out = std::path::absolute(out).map_err(CliError::io(out))?;
        let parent = out.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."));
        let name = out
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| "out".to_string());
        fs::create_dir_all(&parent).map_err(CliError::io(&parent))?;
        let root = parent.join(format!(".{name}.staging-{}", std::process::id()));
        if root.exists() {
            fs::remove_dir_all(&root).map_err(CliError::io(&root))?;
        }
        fs::create_dir_all(&root).map_err(CliError::io(&root))?;
        Ok(Self {
            root,
            out,
            files: Vec::new(),
            committed: false,
        })
    }

    pub fn out_dir(&self) -> &Path {
        &self.out
    }

    /// Writes `rel` through `body` into the staging area.
    pub fn write<F>(&mut self, rel: &str, body: F) -> Result<()>
    where
        F: FnOnce(&mut BufWriter<File>) -> Result<()>,
    {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(CliError::io(dir))?;
        }
        let file = File::create(&path).map_err(CliError::io(&path))?;
        let mut writer = BufWriter::new(file);
        body(&mut writer)?;
        writer.flush().map_err(CliError::io(&path))?;
        self.files.push(rel.to_string());
        Ok(())
    }

    pub fn write_bytes(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        let path = self.root.join(rel);
        self.write(rel, |w| w.write_all(bytes).map_err(CliError::io(path)))
    }

    /// Moves every staged file into the output directory.
    pub fn commit(mut self) -> Result<Vec<PathBuf>> {
        let mut moved = Vec::with_capacity(self.files.len());
        for rel in &self.files {
            let dest = self.out.join(rel);
            let step = dest
                .parent()
                .map_or(Ok(()), fs::create_dir_all)
                .and_then(|_| fs::rename(self.root.join(rel), &dest));
            if let Err(source) = step {
                for done in &moved {
                    let _ = fs::remove_file(done);
                }
                return Err(CliError::Io { path: dest, source });
            }
            moved.push(dest);
        }
        self.committed = true;
        let _ = fs::remove_dir_all(&self.root);
        Ok(moved)
    }
}

impl Drop for Staging {
    fn drop(&mut self) {
        if !self.committed {
            let _ = fs::remove_dir_all(&self.root);
        }
    }
}
