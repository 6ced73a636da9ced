//! Observation stream manifests.
//!
//! ```text
//! width=64
//! height=64
//! blurSize=5
//! keepProb=0.3
//! noiseSigma=5
//! masterSeed=0
//! count=2
//! 0 1234 5678
//! 1 9012 3456
//! ```

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use stoprox_core::degradation::{record_for, DegradationConfig, ObservationRecord};

use crate::error::{Error, Result};

const HEADER_KEYS: [&str; 7] = ["width", "height", "blurSize", "keepProb", "noiseSigma", "masterSeed", "count"];

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub config: DegradationConfig,
    pub records: Vec<ObservationRecord>,
}

impl Manifest {
    /// The first `count` records of the stream seeded by `config.master_seed`.
    pub fn generate(config: DegradationConfig, count: usize) -> Self {
        let records = (0..count).map(|n| record_for(&config, n)).collect();
        Self { config, records }
    }

    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        // floats use the shortest representation that parses back exactly
        let _ = writeln!(s, "width={}", c.width);
        let _ = writeln!(s, "height={}", c.height);
        let _ = writeln!(s, "blurSize={}", c.blur_size);
        let _ = writeln!(s, "keepProb={:?}", c.keep_prob);
        let _ = writeln!(s, "noiseSigma={:?}", c.noise_sigma);
        let _ = writeln!(s, "masterSeed={}", c.master_seed);
        let _ = writeln!(s, "count={}", self.records.len());
        for r in &self.records {
            let _ = writeln!(s, "{} {} {}", r.index, r.mask_seed, r.noise_seed);
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::parse(path, line, msg);
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let mut values = [None::<&str>; 7];
        for (slot, key) in values.iter_mut().zip(HEADER_KEYS) {
            let (no, line) = lines.next().ok_or_else(|| err(text.lines().count() + 1, format!("missing `{key}=`")))?;
            let (k, v) = line.split_once('=').ok_or_else(|| err(no, format!("expected `{key}=<value>`")))?;
            if k.trim() != key {
                return Err(err(no, format!("expected key `{key}`, found `{}`", k.trim())));
            }
            *slot = Some(v.trim());
        }
        let [w, h, b, p, s, m, c] = values.map(|v| v.expect("filled above"));
        let num = |line: usize, v: &str, what: &str| -> Result<f64> {
            v.parse().map_err(|_| Error::parse(path, line, format!("bad {what} `{v}`")))
        };
        let int = |line: usize, v: &str, what: &str| -> Result<u64> {
            v.parse().map_err(|_| Error::parse(path, line, format!("bad {what} `{v}`")))
        };
        let config = DegradationConfig {
            width: int(1, w, "width")? as usize,
            height: int(2, h, "height")? as usize,
            blur_size: int(3, b, "blurSize")? as usize,
            keep_prob: num(4, p, "keepProb")?,
            noise_sigma: num(5, s, "noiseSigma")?,
            master_seed: int(6, m, "masterSeed")?,
        };
        config.validate().map_err(|e| err(1, e.to_string()))?;
        let count = int(7, c, "count")? as usize;

        let mut records = Vec::with_capacity(count);
        for expected in 0..count {
            let no = 8 + expected;
            let (_, line) = lines
                .next()
                .ok_or_else(|| err(no, format!("truncated: record {expected} of {count} missing")))?;
            let fields: Vec<&str> = line.split_ascii_whitespace().collect();
            if fields.len() != 3 {
                return Err(err(no, format!("expected `n maskSeed noiseSeed`, found `{line}`")));
            }
            let index = int(no, fields[0], "record index")? as usize;
            if index != expected {
                return Err(err(no, format!("record index {index}, expected {expected}")));
            }
            records.push(ObservationRecord {
                index,
                mask_seed: int(no, fields[1], "maskSeed")?,
                noise_seed: int(no, fields[2], "noiseSeed")?,
            });
        }
        if let Some((no, line)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(err(no, format!("unexpected trailing line `{line}`")));
        }
        Ok(Self { config, records })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> DegradationConfig {
        DegradationConfig::standard(16, 12, 7)
    }

    #[test]
    fn round_trip() {
        let m = Manifest::generate(cfg(), 100);
        let back = Manifest::parse(&m.to_text(), Path::new("m.txt")).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn empty_manifest() {
        let m = Manifest::generate(cfg(), 0);
        assert!(m.to_text().contains("count=0"));
        assert_eq!(Manifest::parse(&m.to_text(), Path::new("m")).unwrap().records.len(), 0);
    }

    #[test]
    fn truncated_names_line() {
        let text = Manifest::generate(cfg(), 5).to_text();
        let cut: String = text.lines().take(10).map(|l| format!("{l}\n")).collect();
        match Manifest::parse(&cut, Path::new("m")).unwrap_err() {
            Error::Parse { line, message, .. } => {
                assert_eq!(line, 11);
                assert!(message.contains("truncated"));
            }
            other => panic!("{other}"),
        }
    }

    #[test]
    fn bad_field_names_line() {
        let text = Manifest::generate(cfg(), 2).to_text().replace("keepProb=0.3", "keepProb=abc");
        match Manifest::parse(&text, Path::new("m")).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("{other}"),
        }
    }
}
