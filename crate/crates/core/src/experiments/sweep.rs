use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{build_coupling, sample_h, EnsembleSpec, SpectralNormalization, SymmetryClass};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_effective, SymmetryVariant};
use crate::perturbation::{scales, CharacteristicScales};
use crate::rng::RngStream;
use crate::spectral::{classify, spectrum_of, FractionEstimate, LevelCounts, DEFAULT_TOLERANCE_REL};

/// Monte Carlo sweep over a `(μ, T)` grid. `ensemble.seed` is the master seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub ensemble: EnsembleSpec,
    pub variant: SymmetryVariant,
    /// Absorption rates in units of `μ₀`.
    pub mu_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub realizations: usize,
    /// Window half-width as a fraction of the semicircle radius.
    #[serde(default = "default_window_fraction")]
    pub window_fraction: f64,
    /// Classification tolerance in units of `Δ`.
    #[serde(default = "default_tolerance")]
    pub tolerance_rel: f64,
}

fn default_window_fraction() -> f64 {
    crate::ensembles::DEFAULT_WINDOW_FRACTION
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE_REL
}

impl SweepConfig {
    /// Desk-scale defaults: `M = 200`, `N = 20`, 100 realizations, `μ/μ₀` on
    /// `0` plus 15 geometric points in `[0.04, 4]`, 16 geometric `T` in
    /// `[0.01, 1]`.
    pub fn desk(class: SymmetryClass, variant: SymmetryVariant, seed: u64) -> Self {
        Self {
            ensemble: EnsembleSpec { class, dim: 200, channels: 20, seed },
            variant,
            mu_grid: std::iter::once(0.0).chain(geometric(0.04, 4.0, 15)).collect(),
            t_grid: geometric(0.01, 1.0, 16),
            realizations: 100,
            window_fraction: default_window_fraction(),
            tolerance_rel: default_tolerance(),
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.ensemble.seed
    }

    pub fn normalization(&self) -> SpectralNormalization {
        let dim = self.ensemble.dim;
        SpectralNormalization::with_sigma(1.0 / (dim as f64).sqrt(), dim, self.window_fraction)
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        check_grid("mu_grid", &self.mu_grid, |x| x >= 0.0)?;
        check_grid("t_grid", &self.t_grid, |t| t > 0.0 && t <= 1.0)?;
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::Config(format!(
                "window_fraction {} must lie in (0, 1]",
                self.window_fraction
            )));
        }
        if !(self.tolerance_rel > 0.0 && self.tolerance_rel.is_finite()) {
            return Err(Error::Config("tolerance_rel must be positive".into()));
        }
        Ok(())
    }
}

/// `n` points from `lo` to `hi` inclusive, equally spaced in `log`.
pub fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let r = (hi / lo).ln() / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo * (r * i as f64).exp() })
                .collect()
        }
    }
}

fn check_grid(name: &str, grid: &[f64], admissible: impl Fn(f64) -> bool) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config(format!("{name} is empty")));
    }
    if let Some(x) = grid.iter().find(|x| !x.is_finite() || !admissible(**x)) {
        return Err(Error::Config(format!("{name} contains inadmissible value {x}")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config(format!("{name} must be strictly increasing")));
    }
    Ok(())
}

/// One grid cell. Exactly one of `estimate` and `diagnostic` is set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub t: f64,
    pub mu_over_mu0: f64,
    /// Absolute absorption rate in the energy units of `H`.
    pub mu: f64,
    pub scales: CharacteristicScales,
    pub estimate: Option<FractionEstimate>,
    pub diagnostic: Option<String>,
    /// Per-realization window census, in realization order.
    #[serde(skip)]
    pub counts: Vec<LevelCounts>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub version: String,
    pub delta0: f64,
    /// Cells ordered by `T` (outer) then `μ` (inner).
    pub cells: Vec<SweepCell>,
    /// Wall-clock start, seconds since the Unix epoch. Not part of the
    /// serialized payload so identical configs give identical bytes.
    #[serde(skip)]
    pub started_at: u64,
}

impl SweepResult {
    pub fn cell(&self, t_index: usize, mu_index: usize) -> &SweepCell {
        &self.cells[t_index * self.config.mu_grid.len() + mu_index]
    }

    /// Cells of the column at `t_grid[t_index]`, in `μ` order.
    pub fn column(&self, t_index: usize) -> &[SweepCell] {
        let n = self.config.mu_grid.len();
        &self.cells[t_index * n..(t_index + 1) * n]
    }

    pub fn column_index(&self, t: f64) -> Result<usize> {
        self.config
            .t_grid
            .iter()
            .position(|&x| (x - t).abs() <= 1e-12 * x.abs().max(1.0))
            .ok_or_else(|| Error::Range(format!("T = {t} is not a column of the sweep grid")))
    }

    pub fn diagnostics(&self) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().filter(|c| c.diagnostic.is_some())
    }

    /// Fraction of realizations whose complex-level count never decreases
    /// along each `μ` column. Reported, not enforced.
    pub fn per_realization_monotonicity(&self) -> f64 {
        let n_t = self.config.t_grid.len();
        let n_r = self.config.realizations;
        let mut good = 0usize;
        let mut total = 0usize;
        for ti in 0..n_t {
            let col = self.column(ti);
            if col.iter().any(|c| c.counts.len() != n_r) {
                continue;
            }
            for r in 0..n_r {
                total += 1;
                if col.windows(2).all(|w| w[1].counts[r].complex >= w[0].counts[r].complex) {
                    good += 1;
                }
            }
        }
        if total == 0 {
            f64::NAN
        } else {
            good as f64 / total as f64
        }
    }
}

type CellOutcome = std::result::Result<LevelCounts, String>;

fn realization_counts(config: &SweepConfig, delta0: f64, r: usize) -> Vec<CellOutcome> {
    let spec = &config.ensemble;
    let norm = config.normalization();
    let n_cells = config.t_grid.len() * config.mu_grid.len();
    let mut stream = RngStream::child(config.master_seed(), r as u64);
    let h = match sample_h(spec, &norm, &mut stream) {
        Ok(h) => h,
        Err(e) => return vec![Err(e.to_string()); n_cells],
    };
    let tol = config.tolerance_rel * delta0;
    let mut out = Vec::with_capacity(n_cells);
    for &t in &config.t_grid {
        let setup = build_coupling(spec.dim, spec.channels, t, delta0)
            .and_then(|c| scales(spec.channels, t, delta0).map(|s| (c, s)));
        let (coupling, sc) = match setup {
            Ok(x) => x,
            Err(e) => {
                out.extend(std::iter::repeat_n(Err(e.to_string()), config.mu_grid.len()));
                continue;
            }
        };
        for &x in &config.mu_grid {
            let outcome = build_effective(h.as_ref(), &coupling, x * sc.mu0, config.variant)
                .map(|heff| heff.with_realization(config.master_seed(), r as u64))
                .and_then(|heff| {
                    let spectrum = spectrum_of(&heff)?;
                    classify(&spectrum, norm.window_half_width, tol)
                })
                .map(|c| c.counts())
                .map_err(|e| format!("realization {r}: {e}"));
            out.push(outcome);
        }
    }
    out
}

/// Runs the sweep. Realization `r` draws `H` from `child(master_seed, r)` and
/// reuses it for every cell. Realizations run in parallel; results are
/// reduced in realization order, so the output does not depend on
/// scheduling. A failing cell carries a diagnostic instead of an estimate.
pub fn run_sweep(config: &SweepConfig) -> Result<SweepResult> {
    crate::sequential_kernels();
    config.validate()?;
    let started_at = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let norm = config.normalization();
    let delta0 = norm.delta0;
    let per_realization: Vec<Vec<CellOutcome>> = (0..config.realizations)
        .into_par_iter()
        .map(|r| realization_counts(config, delta0, r))
        .collect();

    let n_mu = config.mu_grid.len();
    let mut cells = Vec::with_capacity(config.t_grid.len() * n_mu);
    for (ti, &t) in config.t_grid.iter().enumerate() {
        let sc = scales(config.ensemble.channels, t, delta0)?;
        for (mi, &x) in config.mu_grid.iter().enumerate() {
            let k = ti * n_mu + mi;
            let mut counts = Vec::with_capacity(config.realizations);
            let mut diagnostic = None;
            for outcome in per_realization.iter().map(|v| &v[k]) {
                match outcome {
                    Ok(c) => counts.push(*c),
                    Err(msg) => {
                        diagnostic = Some(msg.clone());
                        break;
                    }
                }
            }
            let estimate = match diagnostic {
                Some(_) => None,
                None => match FractionEstimate::from_counts(&counts) {
                    Ok(e) => Some(e),
                    Err(e) => {
                        diagnostic = Some(e.to_string());
                        None
                    }
                },
            };
            if diagnostic.is_some() {
                counts.clear();
            }
            cells.push(SweepCell {
                t,
                mu_over_mu0: x,
                mu: x * sc.mu0,
                scales: sc,
                estimate,
                diagnostic,
                counts,
            });
        }
    }
    Ok(SweepResult {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        delta0,
        cells,
        started_at,
    })
}
