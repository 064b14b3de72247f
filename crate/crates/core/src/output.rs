//! Output documents and atomic file writes.
//!
//! Every document carries a header naming the command, the config digest and
//! the seed, so an artifact can be traced back to the run that produced it.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_digest: String,
    pub seed: Option<u64>,
}

impl Header {
    pub fn new(command: &str, config_digest: String, seed: Option<u64>) -> Self {
        Header {
            tool: "pkgnet",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_owned(),
            config_digest,
            seed,
        }
    }

    fn comment_line(&self) -> String {
        let seed = self.seed.map_or_else(|| "none".to_owned(), |s| s.to_string());
        format!(
            "# {} {} command={} config_digest={} seed={}\n",
            self.tool, self.version, self.command, self.config_digest, seed
        )
    }
}

#[derive(Serialize)]
struct Document<'a, T> {
    header: &'a Header,
    result: &'a T,
}

/// Pretty JSON `{"header": ..., "result": ...}` with a trailing newline.
pub fn json_document<T: Serialize>(header: &Header, result: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(&Document { header, result }).expect("serialisable result");
    out.push(b'\n');
    out
}

/// CSV preceded by a `#` header comment line.
pub fn csv_document<I, R>(header: &Header, columns: &[&str], rows: I) -> Vec<u8>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut out = header.comment_line().into_bytes();
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(columns).expect("in-memory write");
    for row in rows {
        w.write_record(row).expect("in-memory write");
    }
    w.flush().expect("in-memory write");
    drop(w);
    out
}

/// Shortest round-trip text for a float; empty for non-finite values.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

/// Write through a temporary file in the target directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let err = |e| Error::io(path.display().to_string(), e);
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(err)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(err)?;
    tmp.write_all(bytes).map_err(err)?;
    tmp.as_file().sync_all().map_err(err)?;
    tmp.persist(path).map_err(|e| err(e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn header() -> Header {
        Header::new("simulate", "ab12".into(), Some(42))
    }

    #[test]
    fn json_has_header_and_result() {
        let doc = json_document(&header(), &serde_json::json!({"mean": 0.5}));
        let v: serde_json::Value = serde_json::from_slice(&doc).unwrap();
        assert_eq!(v["header"]["seed"], 42);
        assert_eq!(v["header"]["config_digest"], "ab12");
        assert_eq!(v["result"]["mean"], 0.5);
        assert_eq!(*doc.last().unwrap(), b'\n');
    }

    #[test]
    fn csv_quotes_and_comments() {
        let doc = csv_document(
            &header(),
            &["label", "value"],
            [vec!["a,b".to_string(), fmt_f64(0.1)], vec!["c".into(), fmt_f64(f64::NAN)]],
        );
        let text = String::from_utf8(doc).unwrap();
        let expected = format!(
            "# pkgnet {} command=simulate config_digest=ab12 seed=42\nlabel,value\n\"a,b\",0.1\nc,\n",
            env!("CARGO_PKG_VERSION")
        );
        assert_eq!(text, expected);
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
