//! Run configuration: sectioned `key = value` files plus `--key value` overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use itpp::opsum::parse_real;
use itpp::{build_tfim, read_term_file, Hamiltonian, PauliSum, ScheduleConfig, TfimParams, TruncationPolicy};

/// Invalid configuration or command line; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

pub fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Every key with its section and default. Keys are unique across sections.
pub const KEYS: &[(&str, &str, &str)] = &[
    ("model", "model", "tfim"),
    ("model", "n", "10"),
    ("model", "j", "1"),
    ("model", "h", "0.5"),
    ("model", "term_file", ""),
    ("model", "ordering", "default"),
    ("schedule", "delta_tau", "0.04"),
    ("schedule", "tau_final", "20"),
    ("schedule", "sample", "step"),
    ("truncation", "policy", "none"),
    ("truncation", "trace_epsilon", "1e-300"),
    ("output", "out_dir", "."),
    ("output", "observables", ""),
    ("output", "reference", "auto"),
    ("output", "max_dense_qubits", "14"),
    ("output", "checkpoint_every", "0"),
    ("output", "squared_estimator", "off"),
    ("output", "timing", "off"),
];

/// Raw key/value settings after defaults, file and overrides are layered.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            values: KEYS.iter().map(|(_, k, v)| (k.to_string(), v.to_string())).collect(),
        }
    }
}

fn section_of(key: &str) -> Option<&'static str> {
    KEYS.iter().find(|(_, k, _)| *k == key).map(|(s, _, _)| *s)
}

impl Settings {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let mut s = Settings::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(sec, _, _)| *sec == name) {
                    return Err(usage(format!("line {}: unknown section [{name}]", i + 1)));
                }
                section = Some(name.to_string());
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("line {}: expected `key = value`, got {line:?}", i + 1)))?;
            let k = k.trim();
            let expected = section_of(k).ok_or_else(|| usage(format!("line {}: unknown key {k:?}", i + 1)))?;
            if let Some(sec) = &section {
                if sec != expected {
                    return Err(usage(format!("line {}: key {k:?} belongs in [{expected}], not [{sec}]", i + 1)));
                }
            }
            s.values.insert(k.to_string(), v.trim().to_string());
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> anyhow::Result<()> {
        if section_of(key).is_none() {
            return Err(usage(format!("unknown key {key:?}")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.values.iter()
    }

    /// Canonical sectioned text, loadable by [`Settings::parse`].
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (sec, k, _) in KEYS {
            if *sec != current {
                if !current.is_empty() {
                    out.push('\n');
                }
                out.push_str(&format!("[{sec}]\n"));
                current = sec;
            }
            out.push_str(&format!("{k} = {}\n", self.get(k)));
        }
        out
    }

    pub fn resolve(&self) -> anyhow::Result<RunConfig> {
        RunConfig::from_settings(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Tfim(TfimParams<f64>),
    TermFile(PathBuf),
}

impl fmt::Display for ModelSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelSpec::Tfim(p) => write!(f, "tfim n={} j={} h={}", p.n, p.j, p.h),
            ModelSpec::TermFile(path) => write!(f, "term_file {}", path.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Reference {
    Auto,
    Ed,
    Bdg,
    None,
    Given(f64),
}

/// Validated experiment knobs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub settings: Settings,
    pub model: ModelSpec,
    pub ordering: Option<Vec<usize>>,
    pub delta_tau: f64,
    pub tau_final: f64,
    pub per_gate: bool,
    pub policy: TruncationPolicy<f64>,
    pub trace_epsilon: f64,
    pub out_dir: PathBuf,
    pub observables: Vec<(String, PauliSum<f64>)>,
    pub reference: Reference,
    pub max_dense_qubits: usize,
    pub checkpoint_every: usize,
    pub squared_estimator: bool,
    pub timing: bool,
}

fn real(s: &Settings, key: &str) -> anyhow::Result<f64> {
    parse_real::<f64>(s.get(key)).ok_or_else(|| usage(format!("{key}: invalid number {:?}", s.get(key))))
}

fn count(s: &Settings, key: &str) -> anyhow::Result<usize> {
    s.get(key)
        .replace('_', "")
        .parse()
        .map_err(|_| usage(format!("{key}: invalid count {:?}", s.get(key))))
}

fn switch(s: &Settings, key: &str) -> anyhow::Result<bool> {
    match s.get(key) {
        "on" | "true" | "yes" | "1" => Ok(true),
        "off" | "false" | "no" | "0" => Ok(false),
        other => Err(usage(format!("{key}: expected on/off, got {other:?}"))),
    }
}

impl RunConfig {
    pub fn from_settings(s: &Settings) -> anyhow::Result<Self> {
        let model = match s.get("model") {
            "tfim" => {
                let n = count(s, "n")?;
                if n < 2 {
                    return Err(usage(format!("n: TFIM needs at least 2 spins, got {n}")));
                }
                ModelSpec::Tfim(TfimParams::new(n, real(s, "j")?, real(s, "h")?))
            }
            "file" => {
                let path = s.get("term_file");
                if path.is_empty() {
                    return Err(usage("model = file requires term_file"));
                }
                ModelSpec::TermFile(PathBuf::from(path))
            }
            other => return Err(usage(format!("model: expected tfim or file, got {other:?}"))),
        };
        let ordering = match s.get("ordering") {
            "default" | "" => None,
            text => Some(
                text.split(',')
                    .map(|t| t.trim().parse::<usize>())
                    .collect::<Result<Vec<_>, _>>()
                    .map_err(|_| usage(format!("ordering: expected default or a comma list, got {text:?}")))?,
            ),
        };
        let delta_tau = real(s, "delta_tau")?;
        let tau_final = real(s, "tau_final")?;
        ScheduleConfig::new(delta_tau, tau_final).map_err(|e| usage(e.to_string()))?;
        let per_gate = match s.get("sample") {
            "step" => false,
            "gate" => true,
            other => return Err(usage(format!("sample: expected step or gate, got {other:?}"))),
        };
        let policy: TruncationPolicy<f64> = s
            .get("policy")
            .parse()
            .map_err(|e| usage(format!("policy: {e}")))?;
        let trace_epsilon = real(s, "trace_epsilon")?;
        if !(trace_epsilon >= 0.0) {
            return Err(usage("trace_epsilon must be >= 0"));
        }
        let observables = s
            .get("observables")
            .split(';')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                PauliSum::parse(t)
                    .map(|o| (t.to_string(), o))
                    .map_err(|e| usage(format!("observables: {t:?}: {e}")))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let reference = match s.get("reference") {
            "auto" => Reference::Auto,
            "ed" => Reference::Ed,
            "bdg" => Reference::Bdg,
            "none" => Reference::None,
            other => Reference::Given(
                parse_real(other).ok_or_else(|| usage(format!("reference: expected auto, ed, bdg, none or a number, got {other:?}")))?,
            ),
        };
        Ok(RunConfig {
            settings: s.clone(),
            model,
            ordering,
            delta_tau,
            tau_final,
            per_gate,
            policy,
            trace_epsilon,
            out_dir: PathBuf::from(s.get("out_dir")),
            observables,
            reference,
            max_dense_qubits: count(s, "max_dense_qubits")?,
            checkpoint_every: count(s, "checkpoint_every")?,
            squared_estimator: switch(s, "squared_estimator")?,
            timing: switch(s, "timing")?,
        })
    }

    pub fn schedule(&self) -> ScheduleConfig<f64> {
        let s = ScheduleConfig::new(self.delta_tau, self.tau_final).expect("validated");
        match &self.ordering {
            Some(o) => s.with_ordering(o.clone()),
            None => s,
        }
    }

    pub fn hamiltonian(&self) -> anyhow::Result<Hamiltonian<f64>> {
        let h = match &self.model {
            ModelSpec::Tfim(p) => build_tfim(p)?,
            ModelSpec::TermFile(path) => {
                let file = std::fs::File::open(path)
                    .map_err(|e| usage(format!("cannot read term file {}: {e}", path.display())))?;
                read_term_file(std::io::BufReader::new(file)).map_err(|e| usage(format!("{}: {e}", path.display())))?
            }
        };
        for (text, o) in &self.observables {
            if o.n_qubits() != h.n_qubits() {
                return Err(usage(format!(
                    "observable {text:?} has {} qubits, model has {}",
                    o.n_qubits(),
                    h.n_qubits()
                )));
            }
        }
        Ok(h)
    }
}
