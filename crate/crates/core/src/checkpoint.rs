//! Plain-text checkpoints of a [`PauliSum`].
//!
//! ```text
//! # itpp pauli-sum checkpoint
//! format_version = 1
//! n_qubits = 3
//! terms = 2
//! next_index = 5
//! meta.step = 10
//! ---
//! 0 0 1.00000000000000000e0 0
//! 1 4 -2.50000000000000000e-1 3
//! ```
//!
//! Rows are `x_hex z_hex coefficient insertion_index` in canonical string
//! order. Loading restores insertion order from the indices, so a reloaded
//! state continues exactly like the one that was written.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::opsum::PauliSum;
use crate::pauli::PauliString;
use crate::scalar::Real;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "# itpp pauli-sum checkpoint";

/// A stored state together with free-form `meta.*` entries.
#[derive(Debug, Clone)]
pub struct Checkpoint<T> {
    pub state: PauliSum<T>,
    pub metadata: BTreeMap<String, String>,
}

impl<T: Real> PartialEq for Checkpoint<T> {
    fn eq(&self, other: &Self) -> bool {
        self.state == other.state && self.metadata == other.metadata
    }
}

impl<T: Real> Checkpoint<T> {
    pub fn new(state: PauliSum<T>) -> Self {
        Checkpoint {
            state,
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.to_string(), value.to_string());
        self
    }

    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let s = &self.state;
        writeln!(out, "{MAGIC}")?;
        writeln!(out, "format_version = {FORMAT_VERSION}")?;
        writeln!(out, "n_qubits = {}", s.n_qubits())?;
        writeln!(out, "terms = {}", s.len())?;
        writeln!(out, "next_index = {}", s.next_index())?;
        for (k, v) in &self.metadata {
            writeln!(out, "meta.{k} = {v}")?;
        }
        writeln!(out, "---")?;
        for (p, term) in s.canonical_terms() {
            let (x, z) = p.to_hex();
            writeln!(out, "{x} {z} {:.17e} {}", term.coefficient, term.index)?;
        }
        out.flush()
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let fail = |line: usize, message: String| Error::Format { line, message };
        let mut lines = input.lines().enumerate();
        let mut header: BTreeMap<String, String> = BTreeMap::new();
        let mut metadata = BTreeMap::new();
        let mut saw_magic = false;
        for (i, line) in lines.by_ref() {
            let line = line.map_err(|e| fail(i + 1, e.to_string()))?;
            let line = line.trim();
            if i == 0 {
                if line != MAGIC {
                    return Err(fail(1, "missing checkpoint header".into()));
                }
                saw_magic = true;
                continue;
            }
            if line == "---" {
                break;
            }
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| fail(i + 1, format!("expected key = value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim().to_string());
            match k.strip_prefix("meta.") {
                Some(meta) => {
                    metadata.insert(meta.to_string(), v);
                }
                None => {
                    header.insert(k.to_string(), v);
                }
            }
        }
        if !saw_magic {
            return Err(fail(1, "empty checkpoint".into()));
        }
        let field = |key: &str| -> Result<u64> {
            header
                .get(key)
                .ok_or_else(|| fail(0, format!("missing header field {key}")))?
                .parse()
                .map_err(|_| fail(0, format!("invalid header field {key}")))
        };
        let version = field("format_version")?;
        if version != FORMAT_VERSION as u64 {
            return Err(fail(0, format!("unsupported format version {version}")));
        }
        let n_qubits = field("n_qubits")? as usize;
        let expected = field("terms")? as usize;
        let next_index = field("next_index")?;
        if n_qubits == 0 {
            return Err(fail(0, "n_qubits must be positive".into()));
        }

        let mut rows = Vec::with_capacity(expected);
        for (i, line) in lines {
            let line = line.map_err(|e| fail(i + 1, e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 4 {
                return Err(fail(i + 1, format!("expected 4 columns, got {}", cols.len())));
            }
            let p = PauliString::from_hex(n_qubits, cols[0], cols[1]).map_err(|e| match e {
                Error::Format { message, .. } => fail(i + 1, message),
                other => other,
            })?;
            let c: T = cols[2]
                .parse()
                .map_err(|_| fail(i + 1, format!("invalid coefficient {:?}", cols[2])))?;
            let index: u64 = cols[3]
                .parse()
                .map_err(|_| fail(i + 1, format!("invalid index {:?}", cols[3])))?;
            rows.push((p, c, index));
        }
        if rows.len() != expected {
            return Err(fail(0, format!("header declares {expected} terms, found {}", rows.len())));
        }
        let state = PauliSum::from_indexed_rows(n_qubits, rows, next_index)?;
        Ok(Checkpoint { state, metadata })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PauliSum<f64> {
        let mut s = PauliSum::identity(5);
        for (p, c) in [("ZZIII", -0.1), ("IXIII", 1.0 / 3.0), ("YYIII", 2.0e-17)] {
            s.add_term(p.parse().unwrap(), c).unwrap();
        }
        s
    }

    #[test]
    fn round_trip_preserves_order_and_indices() {
        let cp = Checkpoint::new(sample()).with_meta("step", 7);
        let mut buf = Vec::new();
        cp.write_to(&mut buf).unwrap();
        let back = Checkpoint::<f64>::read_from(buf.as_slice()).unwrap();
        assert_eq!(back, cp);
        let order: Vec<_> = back.state.iter_terms().map(|(p, t)| (p.clone(), *t)).collect();
        let orig: Vec<_> = cp.state.iter_terms().map(|(p, t)| (p.clone(), *t)).collect();
        assert_eq!(order, orig);
        assert_eq!(back.state.next_index(), cp.state.next_index());
        assert_eq!(back.metadata["step"], "7");
    }

    #[test]
    fn rows_are_canonical() {
        let mut buf = Vec::new();
        Checkpoint::new(sample()).write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let body: Vec<&str> = text.split("---\n").nth(1).unwrap().lines().collect();
        assert_eq!(body.len(), 4);
        assert!(body[0].starts_with("00 00 1.00000000000000000e0"));
    }

    #[test]
    fn rejects_corruption() {
        let mut buf = Vec::new();
        Checkpoint::new(sample()).write_to(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let short = text.replace("terms = 4", "terms = 5");
        assert!(Checkpoint::<f64>::read_from(short.as_bytes()).is_err());
        let bad_version = text.replace("format_version = 1", "format_version = 9");
        assert!(Checkpoint::<f64>::read_from(bad_version.as_bytes()).is_err());
        assert!(Checkpoint::<f64>::read_from("hello\n".as_bytes()).is_err());
    }
}
