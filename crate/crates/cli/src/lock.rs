use std::fs::{self, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

pub const LOCK_FILE: &str = ".sacreddetect.lock";

/// Exclusive claim on an output root, released on drop.
#[derive(Debug)]
pub struct RootLock {
    path: PathBuf,
}

impl RootLock {
    pub fn acquire(root: &Path) -> io::Result<Self> {
        fs::create_dir_all(root)?;
        let path = root.join(LOCK_FILE);
        let mut f = OpenOptions::new().write(true).create_new(true).open(&path)?;
        writeln!(f, "{}", std::process::id())?;
        Ok(Self { path })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for RootLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exclusive_until_dropped() {
        let dir = tempfile::tempdir().unwrap();
        let a = RootLock::acquire(dir.path()).unwrap();
        assert_eq!(RootLock::acquire(dir.path()).unwrap_err().kind(), io::ErrorKind::AlreadyExists);
        drop(a);
        assert!(RootLock::acquire(dir.path()).is_ok());
    }
}
