use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::task::SyntheticTask;
use super::SimError;

/// Writes one task per line.
pub fn write_suite(path: &Path, tasks: &[SyntheticTask]) -> Result<(), SimError> {
    let mut w = BufWriter::new(File::create(path)?);
    for t in tasks {
        serde_json::to_writer(&mut w, t).map_err(std::io::Error::other)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_suite(path: &Path) -> Result<Vec<SyntheticTask>, SimError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let task = serde_json::from_str(&line).map_err(|e| SimError::SuiteParse {
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(task);
    }
    Ok(out)
}
