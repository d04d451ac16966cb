//! Trajectory CSV files, summary records and atomic file writes.

use std::fmt::Write as _;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use anyhow::{bail, Context};

pub const TRAJECTORY_MAGIC: &str = "# itpp-trajectory v1 tau_convention=beta";

/// One CSV row; optional fields are written empty.
#[derive(Debug, Clone, Default)]
pub struct Row {
    pub tau: f64,
    pub energy: f64,
    pub rel_error: Option<f64>,
    pub n_terms: Option<usize>,
    pub purity: f64,
    pub wall_time_s: f64,
    pub observables: Vec<f64>,
    pub energy_2tau: Option<f64>,
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Prints `-0` as `0`.
fn num(x: f64) -> f64 {
    x + 0.0
}

impl Row {
    fn line(&self, squared: bool) -> String {
        let mut s = format!(
            "{},{},{},{},{},{}",
            num(self.tau),
            num(self.energy),
            opt(self.rel_error.map(num)),
            opt(self.n_terms),
            num(self.purity),
            num(self.wall_time_s)
        );
        for o in &self.observables {
            write!(s, ",{}", num(*o)).unwrap();
        }
        if squared {
            write!(s, ",{}", opt(self.energy_2tau.map(num))).unwrap();
        }
        s.push('\n');
        s
    }
}

/// Comment lines plus the column line.
pub fn trajectory_header(comments: &[(String, String)], n_observables: usize, squared: bool) -> String {
    let mut s = format!("{TRAJECTORY_MAGIC}\n");
    for (k, v) in comments {
        writeln!(s, "# {k} = {v}").unwrap();
    }
    s.push_str("tau,energy,rel_error,n_terms,purity,wall_time_s");
    for k in 1..=n_observables {
        write!(s, ",obs_{k}").unwrap();
    }
    if squared {
        s.push_str(",energy_2tau");
    }
    s.push('\n');
    s
}

/// Row-at-a-time CSV writer; every row reaches the file before the next
/// gate runs.
pub struct TrajectoryCsv {
    file: File,
    squared: bool,
    pub rows: usize,
}

impl TrajectoryCsv {
    pub fn create(path: &Path, header: &str, squared: bool) -> anyhow::Result<Self> {
        let mut file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        file.write_all(header.as_bytes())?;
        Ok(TrajectoryCsv { file, squared, rows: 0 })
    }

    /// Keeps the header and the first `rows` data rows of an existing file
    /// and appends after them.
    pub fn reopen(path: &Path, rows: usize, squared: bool) -> anyhow::Result<Self> {
        let reader = BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?);
        let mut keep = 0u64;
        let mut seen_columns = false;
        let mut data = 0usize;
        for line in reader.split(b'\n') {
            let line = line?;
            if data == rows && seen_columns {
                break;
            }
            if !seen_columns {
                if line.first() != Some(&b'#') {
                    seen_columns = true;
                }
            } else {
                data += 1;
            }
            keep += line.len() as u64 + 1;
        }
        if !seen_columns || data < rows {
            bail!("{} has {data} data rows, checkpoint expects {rows}", path.display());
        }
        let file = OpenOptions::new().write(true).open(path)?;
        file.set_len(keep)?;
        let mut file = OpenOptions::new().append(true).open(path)?;
        file.flush()?;
        Ok(TrajectoryCsv { file, squared, rows })
    }

    pub fn write(&mut self, row: &Row) -> anyhow::Result<()> {
        self.file.write_all(row.line(self.squared).as_bytes())?;
        self.file.flush()?;
        self.rows += 1;
        Ok(())
    }
}

/// `key = value` lines.
#[derive(Debug, Clone, Default)]
pub struct Summary {
    pub entries: Vec<(String, String)>,
}

impl Summary {
    pub fn add(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn text(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, write: impl FnOnce(&mut File) -> std::io::Result<()>) -> anyhow::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = std::path::PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp).with_context(|| format!("cannot create {}", tmp.display()))?;
        write(&mut f)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", tmp.display()))?;
    Ok(())
}
