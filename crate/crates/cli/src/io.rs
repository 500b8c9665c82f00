use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use anyhow::Context;

pub fn is_std(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn open(path: &Path) -> anyhow::Result<Box<dyn BufRead>> {
    if is_std(path) {
        return Ok(Box::new(BufReader::new(std::io::stdin())));
    }
    let f = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    Ok(Box::new(BufReader::new(f)))
}

pub fn read_to_string(path: &Path) -> anyhow::Result<String> {
    let mut s = String::new();
    open(path)?.read_to_string(&mut s).with_context(|| format!("reading {}", path.display()))?;
    Ok(s)
}

/// Writes the whole output at once, creating parent directories.
pub fn write(path: &Path, contents: &[u8]) -> anyhow::Result<()> {
    if is_std(path) {
        let mut out = std::io::stdout().lock();
        out.write_all(contents)?;
        return Ok(out.flush()?);
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

/// One JSON document per line.
pub fn jsonl<T: serde::Serialize>(items: &[T]) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    for it in items {
        serde_json::to_writer(&mut buf, it)?;
        buf.push(b'\n');
    }
    Ok(buf)
}
