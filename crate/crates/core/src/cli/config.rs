//! JSON run records. Every field is optional in the file; [`resolve`]
//! functions fill in defaults and flag overrides and return both the
//! library configuration and a fully explicit echo of the record, which
//! reproduces the run when fed back through `--config`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::ensembles::SymmetryClass;
use crate::error::{Error, Result};
use crate::experiments::{geometric, PerturbConfig, Scaling, SweepConfig, TraceConfig, Waypoint};
use crate::hamiltonian::SymmetryVariant;

/// Unit of `μ` values supplied in a configuration file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MuUnit {
    /// `μ₀ = √N Δ / 2π`.
    #[default]
    Mu0,
    /// Mean level spacing `Δ`.
    Delta,
}

impl MuUnit {
    /// Factor converting a value in this unit to units of `μ₀`.
    fn to_mu0(self, channels: usize) -> f64 {
        match self {
            MuUnit::Mu0 => 1.0,
            MuUnit::Delta => 2.0 * PI / (channels as f64).sqrt(),
        }
    }
}

impl std::str::FromStr for MuUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu0" => Ok(MuUnit::Mu0),
            "delta" => Ok(MuUnit::Delta),
            _ => Err(Error::Config(format!("unknown mu unit {s:?} (expected mu0 or delta)"))),
        }
    }
}

/// Command-line overrides shared by every command.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub scale: Option<Scaling>,
    pub svg: bool,
    pub paper_scale: bool,
    pub mu_unit: Option<MuUnit>,
}

pub const DEFAULT_SEED: u64 = 20_240_607;

pub fn parse<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
}

fn convert(values: &[f64], unit: MuUnit, channels: usize) -> Vec<f64> {
    let k = unit.to_mu0(channels);
    values.iter().map(|x| x * k).collect()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepFile {
    pub class: Option<SymmetryClass>,
    pub variant: Option<SymmetryVariant>,
    pub dim: Option<usize>,
    pub channels: Option<usize>,
    pub seed: Option<u64>,
    pub mu_unit: Option<MuUnit>,
    pub mu_grid: Option<Vec<f64>>,
    pub t_grid: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub window_fraction: Option<f64>,
    pub tolerance_rel: Option<f64>,
    pub svg: Option<bool>,
    pub scale: Option<Scaling>,
}

#[derive(Clone, Debug)]
pub struct SweepRun {
    pub config: SweepConfig,
    pub svg: bool,
    pub scale: Scaling,
    pub echo: SweepFile,
}

pub fn resolve_sweep(file: SweepFile, o: &Overrides) -> Result<SweepRun> {
    let class = file.class.unwrap_or(SymmetryClass::Orthogonal);
    let variant = file.variant.unwrap_or(SymmetryVariant::PT);
    let seed = o.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let mut config = SweepConfig::desk(class, variant, seed);
    if o.paper_scale {
        config.ensemble.dim = 1000;
        config.ensemble.channels = 50;
    }
    if let Some(m) = file.dim {
        config.ensemble.dim = m;
    }
    if let Some(n) = file.channels {
        config.ensemble.channels = n;
    }
    let unit = o.mu_unit.or(file.mu_unit).unwrap_or_default();
    if let Some(g) = &file.mu_grid {
        config.mu_grid = convert(g, unit, config.ensemble.channels);
    }
    if let Some(g) = file.t_grid {
        config.t_grid = g;
    }
    if let Some(r) = file.realizations {
        config.realizations = r;
    }
    if let Some(w) = file.window_fraction {
        config.window_fraction = w;
    }
    if let Some(t) = file.tolerance_rel {
        config.tolerance_rel = t;
    }
    config.validate()?;
    let svg = o.svg || file.svg.unwrap_or(false);
    let scale = o.scale.or(file.scale).unwrap_or(Scaling::Mu0);
    let echo = SweepFile {
        class: Some(class),
        variant: Some(variant),
        dim: Some(config.ensemble.dim),
        channels: Some(config.ensemble.channels),
        seed: Some(seed),
        mu_unit: Some(MuUnit::Mu0),
        mu_grid: Some(config.mu_grid.clone()),
        t_grid: Some(config.t_grid.clone()),
        realizations: Some(config.realizations),
        window_fraction: Some(config.window_fraction),
        tolerance_rel: Some(config.tolerance_rel),
        svg: Some(svg),
        scale: Some(scale),
    };
    Ok(SweepRun { config, svg, scale, echo })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceFile {
    pub class: Option<SymmetryClass>,
    pub variant: Option<SymmetryVariant>,
    pub dim: Option<usize>,
    pub channels: Option<usize>,
    pub seed: Option<u64>,
    pub mu_unit: Option<MuUnit>,
    pub path: Option<Vec<Waypoint>>,
    pub steps: Option<usize>,
    pub tolerance_rel: Option<f64>,
    pub svg: Option<bool>,
}

#[derive(Clone, Debug)]
pub struct TraceRun {
    pub config: TraceConfig,
    pub svg: bool,
    pub echo: TraceFile,
}

pub fn resolve_trace(file: TraceFile, o: &Overrides) -> Result<TraceRun> {
    if o.paper_scale {
        return Err(Error::Config("--paper-scale applies to sweep and perturb only".into()));
    }
    let class = file.class.unwrap_or(SymmetryClass::Orthogonal);
    let variant = file.variant.unwrap_or(SymmetryVariant::PT);
    let seed = o.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
    let mut config = TraceConfig::two_stage(class, variant, seed);
    if let Some(m) = file.dim {
        config.ensemble.dim = m;
    }
    if let Some(n) = file.channels {
        config.ensemble.channels = n;
    }
    let unit = o.mu_unit.or(file.mu_unit).unwrap_or_default();
    if let Some(path) = file.path {
        let k = unit.to_mu0(config.ensemble.channels);
        config.path = path.into_iter().map(|w| Waypoint { t: w.t, mu: w.mu * k }).collect();
    }
    if let Some(s) = file.steps {
        config.steps = s;
    }
    if let Some(t) = file.tolerance_rel {
        config.tolerance_rel = t;
    }
    config.validate()?;
    let svg = o.svg || file.svg.unwrap_or(false);
    let echo = TraceFile {
        class: Some(class),
        variant: Some(variant),
        dim: Some(config.ensemble.dim),
        channels: Some(config.ensemble.channels),
        seed: Some(seed),
        mu_unit: Some(MuUnit::Mu0),
        path: Some(config.path.clone()),
        steps: Some(config.steps),
        tolerance_rel: Some(config.tolerance_rel),
        svg: Some(svg),
    };
    Ok(TraceRun { config, svg, echo })
}

/// Parameters of the quantization self-check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub classes: Vec<SymmetryClass>,
    pub dim: usize,
    pub channels: usize,
    /// Instances per class. Each draws `T` uniformly from `[t_min, 1]` and
    /// `μ/μ₀` uniformly from `[0, mu_max]`.
    pub instances: usize,
    pub t_min: f64,
    pub mu_max: f64,
    pub seed: u64,
    /// Largest acceptable residual at an eigenvalue.
    pub threshold: f64,
    /// Smallest acceptable residual away from the spectrum.
    pub off_spectrum_threshold: f64,
    /// Test hook: multiplies every `γ_m` used by the scattering side, so the
    /// residuals no longer vanish. Must be absent in real runs.
    pub corrupt_gamma: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleFile {
    pub classes: Option<Vec<SymmetryClass>>,
    pub dim: Option<usize>,
    pub channels: Option<usize>,
    pub instances: Option<usize>,
    pub t_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub seed: Option<u64>,
    pub threshold: Option<f64>,
    pub off_spectrum_threshold: Option<f64>,
    pub corrupt_gamma: Option<f64>,
}

pub fn resolve_oracle(file: OracleFile, o: &Overrides) -> Result<(OracleConfig, OracleFile)> {
    if o.paper_scale {
        return Err(Error::Config("--paper-scale applies to sweep and perturb only".into()));
    }
    let c = OracleConfig {
        classes: file
            .classes
            .unwrap_or_else(|| vec![SymmetryClass::Orthogonal, SymmetryClass::Unitary]),
        dim: file.dim.unwrap_or(60),
        channels: file.channels.unwrap_or(8),
        instances: file.instances.unwrap_or(10),
        t_min: file.t_min.unwrap_or(0.05),
        mu_max: file.mu_max.unwrap_or(3.0),
        seed: o.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        threshold: file.threshold.unwrap_or(1e-8),
        off_spectrum_threshold: file.off_spectrum_threshold.unwrap_or(1e-3),
        corrupt_gamma: file.corrupt_gamma,
    };
    if c.classes.is_empty() || c.instances == 0 {
        return Err(Error::Config("oracle needs at least one class and one instance".into()));
    }
    if c.channels == 0 || c.channels > c.dim || c.dim < 2 {
        return Err(Error::Config(format!(
            "need 1 <= channels <= dim and dim >= 2, got N = {}, M = {}",
            c.channels, c.dim
        )));
    }
    if !(c.t_min > 0.0 && c.t_min <= 1.0) || !(c.mu_max >= 0.0 && c.mu_max.is_finite()) {
        return Err(Error::Config("t_min must lie in (0, 1] and mu_max must be >= 0".into()));
    }
    if !(c.threshold > 0.0) || !(c.off_spectrum_threshold > 0.0) {
        return Err(Error::Config("thresholds must be positive".into()));
    }
    if let Some(g) = c.corrupt_gamma {
        if !g.is_finite() {
            return Err(Error::Config("corrupt_gamma must be finite".into()));
        }
    }
    let echo = OracleFile {
        classes: Some(c.classes.clone()),
        dim: Some(c.dim),
        channels: Some(c.channels),
        instances: Some(c.instances),
        t_min: Some(c.t_min),
        mu_max: Some(c.mu_max),
        seed: Some(c.seed),
        threshold: Some(c.threshold),
        off_spectrum_threshold: Some(c.off_spectrum_threshold),
        corrupt_gamma: c.corrupt_gamma,
    };
    Ok((c, echo))
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbFile {
    pub classes: Option<Vec<SymmetryClass>>,
    pub dim: Option<usize>,
    pub channels: Option<usize>,
    pub t_values: Option<Vec<f64>>,
    pub realizations: Option<usize>,
    pub seed: Option<u64>,
    pub window_fraction: Option<f64>,
}

pub fn resolve_perturb(file: PerturbFile, o: &Overrides) -> Result<(PerturbConfig, PerturbFile)> {
    let (dim, channels) = if o.paper_scale { (1000, 50) } else { (200, 20) };
    let c = PerturbConfig {
        classes: file
            .classes
            .unwrap_or_else(|| vec![SymmetryClass::Orthogonal, SymmetryClass::Unitary]),
        dim: file.dim.unwrap_or(dim),
        channels: file.channels.unwrap_or(channels),
        t_values: file.t_values.unwrap_or_else(|| geometric(0.01, 1.0, 5)),
        realizations: file.realizations.unwrap_or(20),
        seed: o.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
        window_fraction: file
            .window_fraction
            .unwrap_or(crate::ensembles::DEFAULT_WINDOW_FRACTION),
    };
    c.validate()?;
    let echo = PerturbFile {
        classes: Some(c.classes.clone()),
        dim: Some(c.dim),
        channels: Some(c.channels),
        t_values: Some(c.t_values.clone()),
        realizations: Some(c.realizations),
        seed: Some(c.seed),
        window_fraction: Some(c.window_fraction),
    };
    Ok((c, echo))
}
