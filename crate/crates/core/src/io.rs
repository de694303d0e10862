//! Output files. Each begins with one header line
//!
//! ```text
//! # greenfem 0.1.0 config_sha256=<64 hex digits> seed=<n>
//! ```
//!
//! and all floating-point values are written with 17 significant digits.

use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::green::GreenTable;
use crate::mixed::FemSolution;
use crate::report::VerificationReport;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Header {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
}

impl Header {
    pub fn new(config_hash: String, seed: u64) -> Self {
        Self {
            version: VERSION.to_string(),
            config_hash,
            seed,
        }
    }

    pub fn line(&self) -> String {
        format!("# greenfem {} config_sha256={} seed={}", self.version, self.config_hash, self.seed)
    }

    pub fn parse(line: &str) -> Result<Header> {
        let bad = || Error::Config(format!("malformed output header `{line}`"));
        let rest = line.strip_prefix("# greenfem ").ok_or_else(bad)?;
        let mut it = rest.split_whitespace();
        let version = it.next().ok_or_else(bad)?.to_string();
        let config_hash = it
            .next()
            .and_then(|s| s.strip_prefix("config_sha256="))
            .ok_or_else(bad)?
            .to_string();
        let seed = it
            .next()
            .and_then(|s| s.strip_prefix("seed="))
            .and_then(|s| s.parse().ok())
            .ok_or_else(bad)?;
        if it.next().is_some() || config_hash.len() != 64 {
            return Err(bad());
        }
        Ok(Header {
            version,
            config_hash,
            seed,
        })
    }
}

/// SHA-256 over the canonical config text and, when present, the domain
/// file contents, so two runs share a hash exactly when their inputs agree.
pub fn config_hash(canonical: &str, domain_text: Option<&str>) -> String {
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    if let Some(d) = domain_text {
        h.update(b"\0domain\0");
        h.update(d.as_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Output directory whose files all carry the same header.
#[derive(Clone, Debug)]
pub struct OutputDir {
    dir: PathBuf,
    header: Header,
}

impl OutputDir {
    pub fn create(dir: &Path, header: Header) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            header,
        })
    }

    pub fn header(&self) -> &Header {
        &self.header
    }

    pub fn write(&self, name: &str, body: &str) -> Result<PathBuf> {
        let path = self.dir.join(name);
        fs::write(&path, format!("{}\n{body}", self.header.line()))?;
        Ok(path)
    }
}

/// Splits a written file into its header and body.
pub fn read_output(path: &Path) -> Result<(Header, String)> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Config(format!("file not found: {}", path.display())),
        _ => Error::Io(e),
    })?;
    let (first, body) = text.split_once('\n').unwrap_or((&text, ""));
    Ok((Header::parse(first)?, body.to_string()))
}

pub fn solution_csv(u: &FemSolution) -> String {
    let cols: Vec<String> = (1..=u.m()).map(|c| format!("u{c}")).collect();
    format!("node,y1,y2,{}\n{}", cols.join(","), u.to_csv())
}

pub fn green_csv(table: &GreenTable) -> String {
    format!("{}\n{}", GreenTable::CSV_HEADER, table.to_csv())
}

pub const REPORT_CSV_HEADER: &str = "check,quantity,value";

pub fn reports_text(reports: &[VerificationReport]) -> String {
    reports.iter().map(|r| r.to_text()).collect::<Vec<_>>().join("\n")
}

pub fn reports_csv(reports: &[VerificationReport]) -> String {
    let mut s = format!("{REPORT_CSV_HEADER}\n");
    for r in reports {
        s.push_str(&r.csv_rows());
    }
    s
}

/// `(check, pass)` for every check in a report CSV body, in file order.
pub fn report_outcomes(csv_body: &str) -> Result<Vec<(String, bool)>> {
    let mut lines = csv_body.lines();
    if lines.next() != Some(REPORT_CSV_HEADER) {
        return Err(Error::Config("report CSV lacks its column header".into()));
    }
    let mut out = Vec::new();
    for line in lines {
        let mut f = line.splitn(3, ',');
        if let (Some(check), Some("pass"), Some(v)) = (f.next(), f.next(), f.next()) {
            out.push((check.to_string(), v.trim() == "1"));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_round_trip() {
        let h = Header::new(config_hash("h = 0.1\n", Some("v 0 0\n")), 42);
        let back = Header::parse(&h.line()).unwrap();
        assert_eq!(back, h);
        assert!(Header::parse("# greenfem 0.1.0 config_sha256=abc seed=1").is_err());
        assert!(Header::parse("node,y1,y2").is_err());
    }

    #[test]
    fn hash_depends_on_all_inputs() {
        // SHA-256 of the empty string
        assert_eq!(
            config_hash("", None),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        let a = config_hash("h = 0.1\n", Some("M 4\n"));
        assert_ne!(a, config_hash("h = 0.1\n", Some("M 5\n")));
        assert_ne!(a, config_hash("h = 0.2\n", Some("M 4\n")));
        assert_ne!(a, config_hash("h = 0.1\n", None));
    }

    #[test]
    fn written_files_start_with_header() {
        let dir = tempfile::tempdir().unwrap();
        let out = OutputDir::create(dir.path(), Header::new(config_hash("", None), 7)).unwrap();
        let mut r = VerificationReport::new("demo");
        r.quantity("x", 0.1);
        r.set_pass(true);
        let mut s = VerificationReport::new("other");
        s.set_pass(false);
        let path = out.write("report.csv", &reports_csv(&[r, s])).unwrap();
        let (h, body) = read_output(&path).unwrap();
        assert_eq!(h.seed, 7);
        assert!(body.contains("demo,x,1.0000000000000001e-1"));
        assert_eq!(
            report_outcomes(&body).unwrap(),
            vec![("demo".to_string(), true), ("other".to_string(), false)]
        );
    }
}
