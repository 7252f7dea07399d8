//! All-or-nothing output: every file of a command is staged in a temporary
//! file inside the output directory and renamed into place only after all
//! of them were written.

use std::io::Write;
use std::path::Path;

use tempfile::NamedTempFile;

pub struct Artifact {
    pub name: &'static str,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn text(name: &'static str, text: String) -> Self {
        Self { name, bytes: text.into_bytes() }
    }

    pub fn json<T: serde::Serialize>(name: &'static str, value: &T) -> Self {
        let mut text = serde_json::to_string_pretty(value).expect("output types serialize");
        text.push('\n');
        Self::text(name, text)
    }
}

pub fn write_all(dir: &Path, artifacts: Vec<Artifact>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut staged = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let mut tmp = NamedTempFile::new_in(dir)?;
        tmp.write_all(&a.bytes)?;
        tmp.as_file().sync_all()?;
        staged.push((tmp, dir.join(a.name)));
    }
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| e.error)?;
    }
    Ok(())
}
