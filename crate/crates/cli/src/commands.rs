//! Subcommand implementations.

use std::fs::{self, File};
use std::io::{BufReader, Write};
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, Context};
use itpp::oracle::{bdg_ground_energy, reference_table, write_reference_csv, DenseOracle, DenseSample};
use itpp::{expectation, relative_error, Checkpoint, Hamiltonian, Itpp, PauliSum, TrajectoryRecord};

use crate::config::{usage, ModelSpec, Reference, RunConfig, Settings, KEYS};
use crate::output::{trajectory_header, write_atomic, Row, Summary, TrajectoryCsv};

pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const CONFIG_FILE: &str = "config.txt";
pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const EXACT_FILE: &str = "exact_ite.csv";
pub const DENSE_TROTTER_FILE: &str = "dense_trotter.csv";
pub const SWEEP_FILE: &str = "sweep.csv";

/// Reference energy and where it came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedReference {
    pub value: Option<f64>,
    pub source: &'static str,
}

pub fn resolve_reference(cfg: &RunConfig, h: &Hamiltonian<f64>) -> anyhow::Result<ResolvedReference> {
    let ed = || -> anyhow::Result<ResolvedReference> {
        let e0 = DenseOracle::new(cfg.max_dense_qubits).ground_energy(h)?;
        Ok(ResolvedReference {
            value: Some(e0),
            source: "ed",
        })
    };
    let bdg = || -> anyhow::Result<ResolvedReference> {
        match &cfg.model {
            ModelSpec::Tfim(p) => Ok(ResolvedReference {
                value: Some(bdg_ground_energy(p)?),
                source: "bdg",
            }),
            ModelSpec::TermFile(_) => Err(usage("reference = bdg needs model = tfim")),
        }
    };
    match cfg.reference {
        Reference::Given(e0) => Ok(ResolvedReference {
            value: Some(e0),
            source: "given",
        }),
        Reference::None => Ok(ResolvedReference {
            value: None,
            source: "none",
        }),
        Reference::Ed => ed(),
        Reference::Bdg => bdg(),
        Reference::Auto if h.n_qubits() <= cfg.max_dense_qubits => ed(),
        Reference::Auto if matches!(cfg.model, ModelSpec::Tfim(_)) => bdg(),
        Reference::Auto => Ok(ResolvedReference {
            value: None,
            source: "none",
        }),
    }
}

fn header_comments(cfg: &RunConfig, reference: &ResolvedReference, method: &str) -> Vec<(String, String)> {
    let mut c = vec![
        ("method".to_string(), method.to_string()),
        ("model".to_string(), cfg.model.to_string()),
        ("policy".to_string(), cfg.policy.to_string()),
        ("delta_tau".to_string(), cfg.delta_tau.to_string()),
        ("sample".to_string(), cfg.settings.get("sample").to_string()),
        (
            "reference".to_string(),
            format!("{} {}", reference.value.map(|v| v.to_string()).unwrap_or_default(), reference.source)
                .trim()
                .to_string(),
        ),
    ];
    for (k, (text, _)) in cfg.observables.iter().enumerate() {
        c.push((format!("obs_{}", k + 1), text.clone()));
    }
    c
}

fn row_from_record(rec: &TrajectoryRecord<f64>, timing: bool) -> Row {
    Row {
        tau: rec.tau,
        energy: rec.energy,
        rel_error: rec.relative_error,
        n_terms: Some(rec.n_terms),
        purity: rec.purity,
        wall_time_s: if timing { rec.wall_time_s } else { 0.0 },
        observables: rec.observables.clone(),
        energy_2tau: rec.energy_doubled,
    }
}

/// Progress restored from a checkpoint.
pub struct ResumePoint {
    pub state: PauliSum<f64>,
    pub completed_steps: usize,
    pub elapsed_s: f64,
    pub csv_rows: usize,
    pub max_terms: usize,
    pub reference: ResolvedReference,
}

fn meta<'a>(ck: &'a Checkpoint<f64>, key: &str) -> anyhow::Result<&'a str> {
    ck.metadata
        .get(key)
        .map(String::as_str)
        .ok_or_else(|| anyhow!("checkpoint has no {key} entry"))
}

#[allow(clippy::too_many_arguments)]
fn write_checkpoint(
    path: &Path,
    cfg: &RunConfig,
    state: &PauliSum<f64>,
    step: usize,
    tau: f64,
    elapsed_s: f64,
    csv_rows: usize,
    max_terms: usize,
    reference: &ResolvedReference,
) -> anyhow::Result<()> {
    let mut ck = Checkpoint::new(state.clone())
        .with_meta("step", step)
        .with_meta("tau", tau)
        .with_meta("elapsed_s", elapsed_s)
        .with_meta("csv_rows", csv_rows)
        .with_meta("max_terms", max_terms)
        .with_meta("reference", reference.value.map(|v| v.to_string()).unwrap_or_default())
        .with_meta("reference_source", reference.source);
    for (k, v) in cfg.settings.iter() {
        ck = ck.with_meta(&format!("config.{k}"), v);
    }
    write_atomic(path, |f| ck.write_to(std::io::BufWriter::new(f)))
}

pub fn read_checkpoint(path: &Path) -> anyhow::Result<(Settings, ResumePoint)> {
    let file = File::open(path).with_context(|| format!("cannot open checkpoint {}", path.display()))?;
    let ck = Checkpoint::<f64>::read_from(BufReader::new(file)).with_context(|| format!("{}", path.display()))?;
    let mut settings = Settings::default();
    for (_, k, _) in KEYS {
        settings.set(k, meta(&ck, &format!("config.{k}"))?)?;
    }
    let num = |key: &str| -> anyhow::Result<usize> {
        meta(&ck, key)?
            .parse()
            .map_err(|_| anyhow!("checkpoint entry {key} is not a count"))
    };
    let reference_text = meta(&ck, "reference")?;
    let reference = ResolvedReference {
        value: if reference_text.is_empty() {
            None
        } else {
            Some(reference_text.parse().map_err(|_| anyhow!("checkpoint reference is not a number"))?)
        },
        source: match meta(&ck, "reference_source")? {
            "ed" => "ed",
            "bdg" => "bdg",
            "given" => "given",
            _ => "none",
        },
    };
    let point = ResumePoint {
        completed_steps: num("step")?,
        elapsed_s: meta(&ck, "elapsed_s")?.parse().unwrap_or(0.0),
        csv_rows: num("csv_rows")?,
        max_terms: num("max_terms")?,
        reference,
        state: ck.state,
    };
    Ok((settings, point))
}

/// Runs the propagation for one configuration, writing the trajectory,
/// periodic checkpoints and the summary into `cfg.out_dir`.
pub fn execute(command: &str, cfg: &RunConfig, resume: Option<ResumePoint>) -> anyhow::Result<Summary> {
    let clock = Instant::now();
    let h = cfg.hamiltonian()?;
    let reference = match &resume {
        Some(r) => r.reference,
        None => resolve_reference(cfg, &h)?,
    };
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    write_atomic(&cfg.out_dir.join(CONFIG_FILE), |f| f.write_all(cfg.settings.to_text().as_bytes()))?;
    let traj_path = cfg.out_dir.join(TRAJECTORY_FILE);
    let ck_path = cfg.out_dir.join(CHECKPOINT_FILE);
    let mut csv = match &resume {
        Some(r) => TrajectoryCsv::reopen(&traj_path, r.csv_rows, cfg.squared_estimator)?,
        None => {
            let header = trajectory_header(
                &header_comments(cfg, &reference, "itpp"),
                cfg.observables.len(),
                cfg.squared_estimator,
            );
            TrajectoryCsv::create(&traj_path, &header, cfg.squared_estimator)?
        }
    };
    let schedule = cfg.schedule();
    let n_steps = schedule.n_steps();
    let mut max_terms = resume.as_ref().map_or(0, |r| r.max_terms);

    let mut runner = Itpp::new(&h, schedule.clone())
        .policy(cfg.policy.clone())
        .observables(cfg.observables.iter().map(|(_, o)| o.clone()).collect())
        .reference_energy(reference.value)
        .sample_every_gate(cfg.per_gate)
        .squared_estimator(cfg.squared_estimator)
        .trace_epsilon(cfg.trace_epsilon);
    let start_step = resume.as_ref().map_or(0, |r| r.completed_steps);
    if let Some(r) = resume {
        runner = runner.resume_from(r.state, r.completed_steps, r.elapsed_s);
    }

    let mut failure: Option<anyhow::Error> = None;
    let result = runner.run_with(|rec, state| {
        let mut step = || -> anyhow::Result<()> {
            csv.write(&row_from_record(rec, cfg.timing))?;
            max_terms = max_terms.max(rec.n_terms);
            let at_boundary = rec.gate.is_none() && rec.step > 0;
            if cfg.checkpoint_every > 0 && at_boundary && (rec.step % cfg.checkpoint_every == 0 || rec.step == n_steps) {
                let elapsed = if cfg.timing { rec.wall_time_s } else { 0.0 };
                write_checkpoint(&ck_path, cfg, state, rec.step, rec.tau, elapsed, csv.rows, max_terms, &reference)?;
            }
            Ok(())
        };
        match step() {
            Ok(()) => ControlFlow::Continue(()),
            Err(e) => {
                failure = Some(e);
                ControlFlow::Break(())
            }
        }
    });

    let mut summary = Summary::default();
    summary.add("command", command);
    summary.add("model", &cfg.model);
    summary.add("n_qubits", h.n_qubits());
    summary.add("hamiltonian_terms", h.len());
    summary.add("policy", &cfg.policy);
    summary.add("delta_tau", cfg.delta_tau);
    summary.add("tau_final", cfg.tau_final);
    summary.add("tau_convention", "beta");
    summary.add("reference_energy", reference.value.map(|v| v.to_string()).unwrap_or_default());
    summary.add("reference_source", reference.source);
    let error = match (failure, result) {
        (Some(e), _) => Some(e),
        (None, Err(e)) => Some(e.into()),
        (None, Ok(out)) => {
            let h_sum = h.to_pauli_sum();
            let energy = expectation(&h_sum, &out.state)?;
            summary.add("steps_completed", out.completed_steps.max(start_step));
            summary.add("final_tau", schedule.tau_at(out.completed_steps.max(start_step)));
            summary.add("final_energy", energy + 0.0);
            summary.add(
                "final_rel_error",
                reference
                    .value
                    .map(|e0| relative_error(energy, e0).map(|r| r.to_string()))
                    .transpose()?
                    .unwrap_or_default(),
            );
            summary.add("final_n_terms", out.state.len());
            summary.add("max_n_terms", max_terms.max(out.state.len()));
            None
        }
    };
    summary.add("trajectory_rows", csv.rows);
    match &error {
        None => summary.add("status", "ok"),
        Some(e) => summary.add("status", format!("failed: {}", one_line(e))),
    }
    summary.add("runtime_s", clock.elapsed().as_secs_f64());
    write_atomic(&cfg.out_dir.join(SUMMARY_FILE), |f| f.write_all(summary.text().as_bytes()))?;
    match error {
        Some(e) => Err(e),
        None => Ok(summary),
    }
}

fn one_line(e: &anyhow::Error) -> String {
    format!("{e:#}").replace(['\n', ','], " ")
}

pub fn run_itpp(settings: &Settings) -> anyhow::Result<()> {
    let cfg = settings.resolve()?;
    let summary = execute("run-itpp", &cfg, None)?;
    print!("{}", summary.text());
    Ok(())
}

pub fn resume(checkpoint: &Path, overrides: &[(String, String)]) -> anyhow::Result<()> {
    let (mut settings, point) = read_checkpoint(checkpoint)?;
    for (k, v) in overrides {
        settings.set(k, v)?;
    }
    let cfg = settings.resolve()?;
    let summary = execute("resume", &cfg, Some(point))?;
    print!("{}", summary.text());
    Ok(())
}

fn dense_rows(samples: &[DenseSample], doubled: Option<&[DenseSample]>, reference: Option<f64>) -> anyhow::Result<Vec<Row>> {
    samples
        .iter()
        .enumerate()
        .map(|(k, s)| {
            Ok(Row {
                tau: s.tau,
                energy: s.energy,
                rel_error: reference.map(|e0| relative_error(s.energy, e0)).transpose()?,
                n_terms: None,
                purity: s.purity,
                wall_time_s: 0.0,
                observables: s.observables.clone(),
                energy_2tau: doubled.map(|d| d[k].energy),
            })
        })
        .collect()
}

/// Dense exact and dense Trotterized imaginary-time evolution on the
/// schedule's step grid, in the trajectory CSV schema.
pub fn exact(settings: &Settings) -> anyhow::Result<()> {
    let clock = Instant::now();
    let cfg = settings.resolve()?;
    let h = cfg.hamiltonian()?;
    let oracle = DenseOracle::new(cfg.max_dense_qubits);
    let schedule = cfg.schedule();
    let taus: Vec<f64> = (0..=schedule.n_steps()).map(|k| schedule.tau_at(k)).collect();
    let observables: Vec<PauliSum<f64>> = cfg.observables.iter().map(|(_, o)| o.clone()).collect();
    let exact = oracle.exact_ite(&h, &taus, &observables)?;
    let doubled = if cfg.squared_estimator {
        let t2: Vec<f64> = taus.iter().map(|t| 2.0 * t).collect();
        Some(oracle.exact_ite(&h, &t2, &[])?)
    } else {
        None
    };
    let trotter = oracle.trotter_ite(&h, &schedule, &observables)?;
    let reference = resolve_reference(&cfg, &h)?;
    fs::create_dir_all(&cfg.out_dir).with_context(|| format!("cannot create {}", cfg.out_dir.display()))?;
    for (file, method, samples, doubled) in [
        (EXACT_FILE, "dense_exact_ite", &exact, doubled.as_deref()),
        (DENSE_TROTTER_FILE, "dense_trotter_ite", &trotter, None),
    ] {
        let header = trajectory_header(
            &header_comments(&cfg, &reference, method),
            cfg.observables.len(),
            cfg.squared_estimator,
        );
        let mut csv = TrajectoryCsv::create(&cfg.out_dir.join(file), &header, cfg.squared_estimator)?;
        for row in dense_rows(samples, doubled, reference.value)? {
            csv.write(&row)?;
        }
    }
    let mut summary = Summary::default();
    summary.add("command", "exact");
    summary.add("model", &cfg.model);
    summary.add("n_qubits", h.n_qubits());
    summary.add("delta_tau", cfg.delta_tau);
    summary.add("tau_final", cfg.tau_final);
    summary.add("tau_convention", "beta");
    summary.add("final_exact_energy", exact.last().map(|s| s.energy).unwrap_or(f64::NAN));
    summary.add("final_trotter_energy", trotter.last().map(|s| s.energy).unwrap_or(f64::NAN));
    summary.add("reference_energy", reference.value.map(|v| v.to_string()).unwrap_or_default());
    summary.add("reference_source", reference.source);
    summary.add("status", "ok");
    summary.add("runtime_s", clock.elapsed().as_secs_f64());
    write_atomic(&cfg.out_dir.join(SUMMARY_FILE), |f| f.write_all(summary.text().as_bytes()))?;
    print!("{}", summary.text());
    Ok(())
}

/// Prints `n,J,h,E0` rows and optionally writes them to `csv`.
pub fn bdg(sizes: &[usize], j: f64, h: f64, csv: Option<&Path>) -> anyhow::Result<()> {
    if sizes.is_empty() {
        return Err(usage("bdg: no chain lengths given"));
    }
    if let Some(&n) = sizes.iter().find(|&&n| n < 2) {
        return Err(usage(format!("bdg: chain length must be at least 2, got {n}")));
    }
    let table = reference_table(sizes, j, h)?;
    let mut out = Vec::new();
    write_reference_csv(&table, &mut out)?;
    std::io::stdout().write_all(&out)?;
    if let Some(path) = csv {
        write_atomic(path, |f| f.write_all(&out))?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Axis {
    Threshold,
    N,
    FixedK,
    DeltaTau,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::Threshold => "threshold",
            Axis::N => "n",
            Axis::FixedK => "fixed_k",
            Axis::DeltaTau => "delta_tau",
        }
    }

    fn apply(self, settings: &mut Settings, value: &str) -> anyhow::Result<()> {
        match self {
            Axis::Threshold => settings.set("policy", &format!("threshold={value}")),
            Axis::FixedK => settings.set("policy", &format!("fixed_k={value}")),
            Axis::N => settings.set("n", value),
            Axis::DeltaTau => settings.set("delta_tau", value),
        }
    }
}

pub fn parse_axis_values(text: &str) -> anyhow::Result<Vec<String>> {
    let values: Vec<String> = text
        .split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(str::to_string)
        .collect();
    if values.is_empty() {
        return Err(usage("sweep: the axis has no values"));
    }
    Ok(values)
}

const SWEEP_COLUMNS: [&str; 10] = [
    "final_tau",
    "final_energy",
    "final_rel_error",
    "final_n_terms",
    "max_n_terms",
    "reference_energy",
    "reference_source",
    "steps_completed",
    "trajectory_rows",
    "runtime_s",
];

/// Runs one configuration per axis value in `out_dir/<axis>_<k>` and
/// aggregates the summaries. A failing point is recorded and skipped.
pub fn sweep(base: &Settings, axis: Axis, values: &[String]) -> anyhow::Result<()> {
    if values.is_empty() {
        return Err(usage("sweep: the axis has no values"));
    }
    let root = base.resolve()?;
    fs::create_dir_all(&root.out_dir).with_context(|| format!("cannot create {}", root.out_dir.display()))?;
    let columns: Vec<&str> = SWEEP_COLUMNS
        .iter()
        .copied()
        .filter(|c| root.timing || *c != "runtime_s")
        .collect();
    let mut table = format!("axis,value,status,{}\n", columns.join(","));
    let mut failures = 0;
    for (k, value) in values.iter().enumerate() {
        let dir: PathBuf = root.out_dir.join(format!("{}_{k}", axis.name()));
        let point = || -> anyhow::Result<Summary> {
            let mut s = base.clone();
            axis.apply(&mut s, value)?;
            s.set("out_dir", dir.to_str().ok_or_else(|| anyhow!("non-UTF-8 output path"))?)?;
            let cfg = s.resolve()?;
            execute("sweep", &cfg, None)
        };
        let (status, summary) = match point() {
            Ok(summary) => ("ok".to_string(), summary),
            Err(e) => {
                failures += 1;
                eprintln!("sweep point {}={value} failed: {e:#}", axis.name());
                (format!("failed: {}", one_line(&e)), Summary::default())
            }
        };
        let fields: Vec<&str> = columns.iter().map(|c| summary.get(c).unwrap_or("")).collect();
        table.push_str(&format!("{},{value},{status},{}\n", axis.name(), fields.join(",")));
    }
    write_atomic(&root.out_dir.join(SWEEP_FILE), |f| f.write_all(table.as_bytes()))?;
    print!("{table}");
    if failures > 0 {
        eprintln!("{failures} of {} sweep points failed", values.len());
    }
    Ok(())
}
