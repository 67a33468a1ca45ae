//! Command-line front end: configuration, dispatch and file output.

pub mod config;
pub mod output;
pub mod svg;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::ensembles::{build_coupling, sample_h, EnsembleSpec, SpectralNormalization, SymmetryClass};
use crate::error::{Error, Result};
use crate::experiments::{
    run_sweep, scale_statistics, trace_levels, EventKind, LevelEvent, Scaling, SweepResult,
};
use crate::hamiltonian::{build_effective, QuantizationOracle, SymmetryVariant};
use crate::perturbation::{hermitian_eigen, scales};
use crate::rng::RngStream;
use crate::spectral::spectrum_of;

use config::{
    parse, resolve_oracle, resolve_perturb, resolve_sweep, resolve_trace, MuUnit, OracleConfig,
    OracleFile, Overrides, PerturbFile, SweepFile, TraceFile,
};
use output::{fmt_f64, to_json_bytes, write_atomic, OutputSet, Table};

#[derive(Debug, Parser)]
#[command(name = "ptbreak", version, about = "PT-symmetry breaking in random-matrix models of coupled absorbing and amplifying regions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Complex-level fraction over a (μ, T) grid.
    Sweep(CommonArgs),
    /// Eigenvalue trajectories along a parameter path.
    Trace(CommonArgs),
    /// Scattering-quantization self-check of the eigenvalues.
    Oracle(CommonArgs),
    /// Ensemble statistics of the perturbative transition scales.
    Perturb(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON configuration; omitted keys take their defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, default_value = "ptbreak-out")]
    pub out: PathBuf,
    /// Master seed, overriding the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// μ axis scale of the heatmap: mu0, mu0prime or muTprime.
    #[arg(long)]
    pub scale: Option<Scaling>,
    /// Also write an SVG plot.
    #[arg(long)]
    pub svg: bool,
    /// M = 1000, N = 50 instead of the desk-scale defaults.
    #[arg(long)]
    pub paper_scale: bool,
    /// Unit of μ values in the configuration: mu0 (default) or delta.
    #[arg(long)]
    pub mu_unit: Option<MuUnit>,
}

/// Files written by a command and the exit code it asks for.
#[derive(Debug)]
pub struct Outcome {
    pub files: Vec<String>,
    pub exit_code: i32,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            scale: self.scale,
            svg: self.svg,
            paper_scale: self.paper_scale,
            mu_unit: self.mu_unit,
        }
    }

    fn read_config<T: for<'de> serde::Deserialize<'de> + Default>(&self) -> Result<T> {
        match &self.config {
            None => Ok(T::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| {
                    Error::Config(format!("cannot read configuration {}: {e}", p.display()))
                })?;
                parse(&text)
            }
        }
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code. Errors are reported on stderr.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("ptbreak: {e}");
        return e.exit_code();
    }
    crate::sequential_kernels();
    match run(&cli) {
        Ok(outcome) => outcome.exit_code,
        Err(e) => {
            eprintln!("ptbreak: {e}");
            e.exit_code()
        }
    }
}

/// Applies `PTBREAK_THREADS` to the global worker pool.
fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("PTBREAK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("PTBREAK_THREADS={v:?} is not a positive integer")))?;
    // a pool that already exists (repeated calls in one process) is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let start = Instant::now();
    let (name, args, outcome) = match &cli.command {
        Command::Sweep(a) => ("sweep", a, cmd_sweep(a.read_config()?, &a.overrides(), &a.out)?),
        Command::Trace(a) => ("trace", a, cmd_trace(a.read_config()?, &a.overrides(), &a.out)?),
        Command::Oracle(a) => ("oracle", a, cmd_oracle(a.read_config()?, &a.overrides(), &a.out)?),
        Command::Perturb(a) => ("perturb", a, cmd_perturb(a.read_config()?, &a.overrides(), &a.out)?),
    };
    let secs = start.elapsed().as_secs_f64();
    eprintln!(
        "ptbreak {name}: wrote {} to {} in {secs:.2} s",
        outcome.files.join(", "),
        args.out.display()
    );
    write_atomic(&args.out, "timing.txt", format!("{name} {secs:.3} s\n").as_bytes())?;
    Ok(outcome)
}

pub fn sweep_csv(result: &SweepResult) -> Result<Vec<u8>> {
    let cfg = &result.config;
    let mut t = Table::new(&[
        "class",
        "variant",
        "T",
        "mu",
        "mu_over_mu0",
        "mu_over_mu0prime",
        "mu_over_muTprime",
        "f",
        "stderr",
        "n_levels",
        "n_realizations",
    ])?;
    let channels = cfg.ensemble.channels;
    for cell in &result.cells {
        let (f, err, levels) = match cell.estimate {
            Some(e) => (e.f, e.stderr, e.n_levels_counted),
            None => (f64::NAN, f64::NAN, 0),
        };
        t.row([
            cfg.ensemble.class.name().to_string(),
            cfg.variant.name().to_string(),
            fmt_f64(cell.t),
            fmt_f64(cell.mu),
            fmt_f64(cell.mu_over_mu0),
            fmt_f64(cell.mu_over_mu0 * Scaling::Mu0Prime.factor(channels, cell.t)),
            fmt_f64(cell.mu_over_mu0 * Scaling::MuTPrime.factor(channels, cell.t)),
            fmt_f64(f),
            fmt_f64(err),
            levels.to_string(),
            cfg.realizations.to_string(),
        ])?;
    }
    t.into_bytes()
}

pub fn cmd_sweep(file: SweepFile, o: &Overrides, out: &Path) -> Result<Outcome> {
    let run = resolve_sweep(file, o)?;
    let result = run_sweep(&run.config)?;
    let mut set = OutputSet::new(out);
    set.add("fractions.csv", sweep_csv(&result)?);
    if run.svg {
        set.add("heatmap.svg", svg::heatmap(&result, run.scale).into_bytes());
    }
    let diagnostics: Vec<String> = result
        .diagnostics()
        .map(|c| {
            format!(
                "T={} mu_over_mu0={}: {}",
                fmt_f64(c.t),
                fmt_f64(c.mu_over_mu0),
                c.diagnostic.as_deref().unwrap_or_default()
            )
        })
        .collect();
    let exit_code = if diagnostics.is_empty() { 0 } else { 3 };
    for d in &diagnostics {
        eprintln!("ptbreak sweep: cell failed: {d}");
    }
    let files = set.commit("sweep", &run.echo, diagnostics)?;
    Ok(Outcome { files, exit_code })
}

fn events_csv<'a>(events: impl Iterator<Item = &'a LevelEvent>) -> Result<Vec<u8>> {
    let mut t = Table::new(&["parameter", "level_id_a", "level_id_b", "re_E"])?;
    for e in events {
        t.row([
            fmt_f64(e.parameter),
            e.level_a.to_string(),
            e.level_b.to_string(),
            fmt_f64(e.energy),
        ])?;
    }
    t.into_bytes()
}

pub fn cmd_trace(file: TraceFile, o: &Overrides, out: &Path) -> Result<Outcome> {
    let run = resolve_trace(file, o)?;
    let trace = trace_levels(&run.config)?;
    let mut t = Table::new(&["step", "stage", "T", "mu", "level_id", "re_E", "im_E"])?;
    for (step, p) in trace.points.iter().enumerate() {
        for (level, tr) in trace.trajectories.iter().enumerate() {
            let z = tr[step];
            t.row([
                step.to_string(),
                p.stage.to_string(),
                fmt_f64(p.t),
                fmt_f64(p.mu),
                level.to_string(),
                fmt_f64(z.re),
                fmt_f64(z.im),
            ])?;
        }
    }
    let mut set = OutputSet::new(out);
    set.add("trajectories.csv", t.into_bytes()?);
    set.add(
        "events.csv",
        events_csv(trace.events.iter().filter(|e| e.kind == EventKind::Coalescence))?,
    );
    set.add(
        "decoalescences.csv",
        events_csv(trace.events.iter().filter(|e| e.kind == EventKind::Decoalescence))?,
    );
    if run.svg {
        set.add("flow.svg", svg::flow(&trace).into_bytes());
    }
    let mut notes = Vec::new();
    if trace.unresolved_ambiguities > 0 {
        notes.push(format!(
            "{} assignment ties persisted after {} step halvings",
            trace.unresolved_ambiguities,
            crate::experiments::MAX_REFINEMENTS
        ));
    }
    let files = set.commit("trace", &run.echo, notes)?;
    Ok(Outcome { files, exit_code: 0 })
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleInstance {
    pub class: SymmetryClass,
    pub index: usize,
    pub t: f64,
    pub mu_over_mu0: f64,
    pub n_eigenvalues: usize,
    pub max_residual: f64,
    /// Random points over the spectral region, clear of eigenvalues and
    /// scattering poles.
    pub n_generic_probes: usize,
    pub min_generic_residual: f64,
    /// Points `0.3Δ` to the right of each eigenvalue, where clear.
    pub n_adjacent_probes: usize,
    pub min_adjacent_residual: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecoupledCheck {
    pub class: SymmetryClass,
    pub mu_over_mu0: f64,
    /// `max |E - (ε_k ∓ iμ)|` over the spectrum, relative to `max |E|`.
    pub max_relative_deviation: f64,
    pub pass: bool,
}

/// Pass/fail refers to the residuals at eigenvalues and the decoupled
/// check; the probe residuals are reported for comparison against
/// `off_spectrum_threshold`.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub schema_version: u32,
    pub config: OracleConfig,
    pub instances: Vec<OracleInstance>,
    pub decoupled: Vec<DecoupledCheck>,
    pub max_residual: f64,
    pub min_generic_residual: f64,
    pub min_adjacent_residual: f64,
    pub off_spectrum_pass: bool,
    pub pass: bool,
}

/// Probe geometry in units of `Δ`: offset of the adjacent probes, and the
/// distance every probe keeps from eigenvalues and from the poles of the
/// scattering matrices (where the relative residual is meaningless).
const PROBE_OFFSET: f64 = 0.3;
const PROBE_CLEARANCE: f64 = 0.25;
const GENERIC_PROBES: usize = 64;

fn oracle_instance(c: &OracleConfig, class: SymmetryClass, index: usize, stream_index: u64) -> Result<OracleInstance> {
    let spec = EnsembleSpec { class, dim: c.dim, channels: c.channels, seed: c.seed };
    let norm = SpectralNormalization::standard(c.dim);
    let delta = norm.delta0;
    let mut stream = RngStream::child(c.seed, stream_index);
    let h = sample_h(&spec, &norm, &mut stream)?;
    let t = c.t_min + (1.0 - c.t_min) * stream.uniform();
    let x = c.mu_max * stream.uniform();
    let mu = x * scales(c.channels, t, delta)?.mu0;
    let coupling = build_coupling(c.dim, c.channels, t, delta)?;
    let assembled = match c.corrupt_gamma {
        Some(g) => coupling.with_scaled_gamma(g),
        None => coupling.clone(),
    };
    let heff = build_effective(h.as_ref(), &assembled, mu, SymmetryVariant::PT)?;
    let eigs = spectrum_of(&heff)?.eigenvalues().to_vec();
    let oracle = QuantizationOracle::new(h.as_ref(), &coupling, mu)?;
    let mut max_residual: f64 = 0.0;
    for &e in &eigs {
        max_residual = max_residual.max(oracle.residual(e)?);
    }

    let poles = oracle.poles()?;
    let clear = |z: faer::c64| {
        eigs.iter()
            .chain(&poles)
            .all(|w| (z - w).norm() >= PROBE_CLEARANCE * delta)
    };
    let (mut n_adj, mut min_adj) = (0, f64::INFINITY);
    for &e in &eigs {
        let probe = e + PROBE_OFFSET * delta;
        if clear(probe) {
            n_adj += 1;
            min_adj = min_adj.min(oracle.residual(probe)?);
        }
    }
    let re_max = norm.radius(c.dim);
    let im_max = eigs.iter().map(|z| z.im.abs()).fold(0.0, f64::max) + delta;
    let (mut n_gen, mut min_gen) = (0, f64::INFINITY);
    for _ in 0..GENERIC_PROBES {
        let probe = faer::c64::new(
            re_max * (2.0 * stream.uniform() - 1.0),
            im_max * (2.0 * stream.uniform() - 1.0),
        );
        if clear(probe) {
            n_gen += 1;
            min_gen = min_gen.min(oracle.residual(probe)?);
        }
    }
    Ok(OracleInstance {
        class,
        index,
        t,
        mu_over_mu0: x,
        n_eigenvalues: eigs.len(),
        max_residual,
        n_generic_probes: n_gen,
        min_generic_residual: min_gen,
        n_adjacent_probes: n_adj,
        min_adjacent_residual: min_adj,
        pass: max_residual < c.threshold,
        error: None,
    })
}

fn decoupled_check(c: &OracleConfig, class: SymmetryClass, stream_index: u64) -> Result<DecoupledCheck> {
    let spec = EnsembleSpec { class, dim: c.dim, channels: c.channels, seed: c.seed };
    let norm = SpectralNormalization::standard(c.dim);
    let h = sample_h(&spec, &norm, &mut RngStream::child(c.seed, stream_index))?;
    let x = 0.5 * c.mu_max.max(1.0);
    let mu = x * scales(c.channels, 0.0, norm.delta0)?.mu0;
    let coupling = build_coupling(c.dim, c.channels, 0.0, norm.delta0)?;
    let heff = build_effective(h.as_ref(), &coupling, mu, SymmetryVariant::PT)?;
    let eigs = spectrum_of(&heff)?.eigenvalues().to_vec();
    let (eps, _) = hermitian_eigen(h.as_ref())?;
    let mut expected: Vec<faer::c64> = eps
        .iter()
        .flat_map(|&e| [faer::c64::new(e, -mu), faer::c64::new(e, mu)])
        .collect();
    expected.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    let scale = eigs.iter().map(|z| z.norm()).fold(0.0, f64::max);
    // greedy nearest matching is exact here: the spectrum is ε_k ∓ iμ
    let mut used = vec![false; expected.len()];
    let mut worst: f64 = 0.0;
    for z in &eigs {
        let (k, d) = expected
            .iter()
            .enumerate()
            .filter(|(k, _)| !used[*k])
            .map(|(k, w)| (k, (z - w).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .ok_or_else(|| Error::Integrity("spectrum larger than expected".into()))?;
        used[k] = true;
        worst = worst.max(d);
    }
    let rel = worst / scale;
    Ok(DecoupledCheck { class, mu_over_mu0: x, max_relative_deviation: rel, pass: rel < c.threshold })
}

pub fn run_oracle(c: &OracleConfig) -> Result<OracleReport> {
    crate::sequential_kernels();
    let mut instances = Vec::new();
    let mut decoupled = Vec::new();
    for (ci, &class) in c.classes.iter().enumerate() {
        for i in 0..c.instances {
            let stream_index = (ci * c.instances + i) as u64;
            let inst = oracle_instance(c, class, i, stream_index).or_else(|e| match e {
                Error::Numerical { .. } | Error::NoConvergence(_) => Ok(OracleInstance {
                    class,
                    index: i,
                    t: f64::NAN,
                    mu_over_mu0: f64::NAN,
                    n_eigenvalues: 0,
                    max_residual: f64::NAN,
                    n_generic_probes: 0,
                    min_generic_residual: f64::NAN,
                    n_adjacent_probes: 0,
                    min_adjacent_residual: f64::NAN,
                    pass: false,
                    error: Some(e.to_string()),
                }),
                other => Err(other),
            })?;
            instances.push(inst);
        }
        let stream_index = (c.classes.len() * c.instances + ci) as u64;
        decoupled.push(decoupled_check(c, class, stream_index)?);
    }
    let max_residual = instances.iter().map(|i| i.max_residual).fold(0.0, f64::max);
    let min_of = |f: fn(&OracleInstance) -> f64| instances.iter().map(f).fold(f64::INFINITY, f64::min);
    let min_generic = min_of(|i| i.min_generic_residual);
    let min_adjacent = min_of(|i| i.min_adjacent_residual);
    let pass = instances.iter().all(|i| i.pass) && decoupled.iter().all(|d| d.pass);
    Ok(OracleReport {
        schema_version: output::SCHEMA_VERSION,
        config: c.clone(),
        instances,
        decoupled,
        max_residual,
        min_generic_residual: min_generic,
        min_adjacent_residual: min_adjacent,
        off_spectrum_pass: min_generic > c.off_spectrum_threshold,
        pass,
    })
}

pub fn cmd_oracle(file: OracleFile, o: &Overrides, out: &Path) -> Result<Outcome> {
    let (config, echo) = resolve_oracle(file, o)?;
    let report = run_oracle(&config)?;
    let mut set = OutputSet::new(out);
    set.add("oracle.json", to_json_bytes(&report)?);
    let mut notes = Vec::new();
    if !report.pass {
        notes.push(format!(
            "quantization check failed: max residual {} (threshold {})",
            fmt_f64(report.max_residual),
            fmt_f64(config.threshold)
        ));
    }
    if !report.off_spectrum_pass {
        notes.push(format!(
            "off-spectrum residual {} below {}",
            fmt_f64(report.min_generic_residual),
            fmt_f64(config.off_spectrum_threshold)
        ));
    }
    for n in &notes {
        eprintln!("ptbreak oracle: {n}");
    }
    let files = set.commit("oracle", &echo, notes)?;
    Ok(Outcome { files, exit_code: if report.pass { 0 } else { 3 } })
}

pub fn cmd_perturb(file: PerturbFile, o: &Overrides, out: &Path) -> Result<Outcome> {
    let (config, echo) = resolve_perturb(file, o)?;
    let rows = scale_statistics(&config)?;
    let mut t = Table::new(&[
        "class",
        "T",
        "realizations",
        "mu0",
        "mu_t",
        "mu_t_prime",
        "mu0_prime",
        "n_levels",
        "mean_quasi_degenerate_mu",
        "quasi_degenerate_over_mu_t",
        "quasi_degenerate_over_mu_t_prime",
        "n_pairs",
        "median_mu_critical",
        "median_mu_critical_over_mu0",
        "overlap_sq_times_n",
        "perturbative_overlap_sq_times_n",
    ])?;
    for r in &rows {
        t.row([
            r.class.name().to_string(),
            fmt_f64(r.t),
            r.realizations.to_string(),
            fmt_f64(r.mu0),
            fmt_f64(r.mu_t),
            fmt_f64(r.mu_t_prime),
            fmt_f64(r.mu0_prime),
            r.n_levels.to_string(),
            fmt_f64(r.mean_quasi_degenerate_mu),
            fmt_f64(r.quasi_degenerate_over_mu_t),
            fmt_f64(r.quasi_degenerate_over_mu_t_prime),
            r.n_pairs.to_string(),
            fmt_f64(r.median_mu_critical),
            fmt_f64(r.median_mu_critical_over_mu0),
            fmt_f64(r.overlap_sq_times_n),
            fmt_f64(r.perturbative_overlap_sq_times_n),
        ])?;
    }
    let mut set = OutputSet::new(out);
    set.add("scales.csv", t.into_bytes()?);
    let files = set.commit("perturb", &echo, vec![])?;
    Ok(Outcome { files, exit_code: 0 })
}
