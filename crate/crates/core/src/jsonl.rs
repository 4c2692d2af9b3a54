//! JSONL file helpers.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonlError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: io::Error,
    },
    #[error("{path}:{line}: {source}")]
    Parse {
        path: String,
        line: usize,
        #[source]
        source: serde_json::Error,
    },
}

fn io_err(path: &Path, source: io::Error) -> JsonlError {
    JsonlError::Io { path: path.display().to_string(), source }
}

/// Reads a whole JSONL file; any malformed line is an error.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, JsonlError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|source| JsonlError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            source,
        })?;
        out.push(item);
    }
    Ok(out)
}

/// Writes items as one JSON object per line, atomically (temp + rename).
pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<(), JsonlError> {
    let mut buf = Vec::new();
    for item in items {
        serde_json::to_writer(&mut buf, item).map_err(|source| JsonlError::Parse {
            path: path.display().to_string(),
            line: 0,
            source,
        })?;
        buf.push(b'\n');
    }
    write_atomic(path, &buf).map_err(|e| io_err(path, e))
}

/// Writes bytes to a temp file in the target directory, then renames over
/// the destination so readers never observe partial content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(bytes)?;
        w.flush()?;
    }
    fs::rename(&tmp, path)
}

/// Writes a single pretty JSON document atomically.
pub fn write_json_pretty<T: Serialize>(path: &Path, value: &T) -> Result<(), JsonlError> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(|source| JsonlError::Parse {
        path: path.display().to_string(),
        line: 0,
        source,
    })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes).map_err(|e| io_err(path, e))
}

/// Reads a single JSON document.
pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, JsonlError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    serde_json::from_slice(&bytes).map_err(|source| JsonlError::Parse {
        path: path.display().to_string(),
        line: 0,
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Row {
        id: String,
        n: i64,
    }

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rows.jsonl");
        let rows = vec![Row { id: "a".into(), n: 1 }, Row { id: "b".into(), n: -2 }];
        write_jsonl(&path, &rows).unwrap();
        let back: Vec<Row> = read_jsonl(&path).unwrap();
        assert_eq!(back, rows);
    }

    #[test]
    fn parse_error_carries_line_number() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        fs::write(&path, "{\"id\":\"a\",\"n\":1}\nnot json\n").unwrap();
        let err = read_jsonl::<Row>(&path).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
    }
}
