use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::sweep::SweepResult;

/// Transition scale where the complex fraction reaches one half, in units
/// of `μ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MuHalf {
    pub value: f64,
    pub stderr: f64,
}

/// Locates `f = 1/2` on a column `(mu[i], f[i] ± err[i])`.
///
/// The column is made monotone by a running maximum before the linear
/// interpolation, so noise after the first crossing cannot introduce a second
/// one. The uncertainty is `σ_f / slope` with `σ_f` interpolated linearly
/// between the bracketing cells.
pub fn mu_half_of_column(mu: &[f64], f: &[f64], err: &[f64]) -> Result<MuHalf> {
    if mu.len() != f.len() || mu.len() != err.len() {
        return Err(Error::param("column arrays differ in length"));
    }
    // running maximum, remembering which cell supplied each value
    let mut env: Vec<(f64, usize)> = Vec::with_capacity(f.len());
    for (i, &x) in f.iter().enumerate() {
        match env.last() {
            Some(&(best, j)) if best >= x => env.push((best, j)),
            _ => env.push((x, i)),
        }
    }
    let i = env
        .iter()
        .position(|&(x, _)| x >= 0.5)
        .ok_or_else(|| Error::Range("complex fraction never reaches 1/2".into()))?;
    let (fi, si) = env[i];
    if fi == 0.5 {
        let slope = local_slope(mu, &env, i);
        let stderr = if slope > 0.0 { err[si] / slope } else { f64::INFINITY };
        return Ok(MuHalf { value: mu[i], stderr });
    }
    if i == 0 {
        return Err(Error::Range(format!(
            "complex fraction already {fi} at the lowest grid point μ = {}",
            mu[0]
        )));
    }
    let (f0, s0) = env[i - 1];
    let slope = (fi - f0) / (mu[i] - mu[i - 1]);
    let w = (0.5 - f0) / (fi - f0);
    let value = mu[i - 1] + w * (mu[i] - mu[i - 1]);
    let sigma = (1.0 - w) * err[s0] + w * err[si];
    Ok(MuHalf { value, stderr: sigma / slope })
}

fn local_slope(mu: &[f64], env: &[(f64, usize)], i: usize) -> f64 {
    let lo = i.saturating_sub(1);
    let hi = (i + 1).min(mu.len() - 1);
    if hi == lo {
        return 0.0;
    }
    (env[hi].0 - env[lo].0) / (mu[hi] - mu[lo])
}

/// `μ_half` of the column at transmission `t`, in units of `μ₀`.
pub fn extract_mu_half(result: &SweepResult, t: f64) -> Result<MuHalf> {
    let ti = result.column_index(t)?;
    let col = result.column(ti);
    let mut f = Vec::with_capacity(col.len());
    let mut err = Vec::with_capacity(col.len());
    for cell in col {
        let e = cell.estimate.ok_or_else(|| {
            Error::Range(format!(
                "column T = {t}: cell μ/μ₀ = {} failed: {}",
                cell.mu_over_mu0,
                cell.diagnostic.as_deref().unwrap_or("no estimate")
            ))
        })?;
        f.push(e.f);
        err.push(e.stderr);
    }
    mu_half_of_column(&result.config.mu_grid, &f, &err)
        .map_err(|e| Error::Range(format!("column T = {t}: {e}")))
}

/// Unit for the `μ` axis when comparing columns.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scaling {
    #[serde(rename = "mu0")]
    Mu0,
    #[serde(rename = "mu0prime")]
    Mu0Prime,
    #[serde(rename = "muTprime")]
    MuTPrime,
}

impl Scaling {
    pub fn name(self) -> &'static str {
        match self {
            Scaling::Mu0 => "mu0",
            Scaling::Mu0Prime => "mu0prime",
            Scaling::MuTPrime => "muTprime",
        }
    }

    /// Factor converting `μ/μ₀` to `μ/scale` at transmission `t`.
    pub fn factor(self, channels: usize, t: f64) -> f64 {
        match self {
            Scaling::Mu0 => 1.0,
            Scaling::Mu0Prime => (1.0 + 1.0 / (channels as f64 * t)).sqrt(),
            Scaling::MuTPrime => 1.0 / t.sqrt(),
        }
    }
}

impl std::str::FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mu0" => Ok(Scaling::Mu0),
            "mu0prime" => Ok(Scaling::Mu0Prime),
            "muTprime" => Ok(Scaling::MuTPrime),
            _ => Err(Error::Config(format!(
                "unknown scale {s:?} (expected mu0, mu0prime or muTprime)"
            ))),
        }
    }
}

/// Points on the common abscissa used by [`collapse_diagnostic`].
pub const COLLAPSE_SAMPLES: usize = 65;

/// RMS across-column spread of `f` after rescaling every column's `μ` axis.
pub fn collapse_diagnostic(result: &SweepResult, scaling: Scaling) -> Result<f64> {
    let all: Vec<usize> = (0..result.config.t_grid.len()).collect();
    collapse_diagnostic_columns(result, scaling, &all)
}

/// [`collapse_diagnostic`] restricted to the given column indices.
pub fn collapse_diagnostic_columns(
    result: &SweepResult,
    scaling: Scaling,
    columns: &[usize],
) -> Result<f64> {
    if columns.len() < 2 {
        return Err(Error::Range("collapse needs at least two T columns".into()));
    }
    let channels = result.config.ensemble.channels;
    let mut curves = Vec::with_capacity(columns.len());
    for &ti in columns {
        let t = *result
            .config
            .t_grid
            .get(ti)
            .ok_or_else(|| Error::Range(format!("column index {ti} out of range")))?;
        let k = scaling.factor(channels, t);
        let mut x = Vec::new();
        let mut f = Vec::new();
        for cell in result.column(ti) {
            let e = cell.estimate.ok_or_else(|| {
                Error::Range(format!("cell T = {t}, μ/μ₀ = {} has no estimate", cell.mu_over_mu0))
            })?;
            x.push(cell.mu_over_mu0 * k);
            f.push(e.f);
        }
        curves.push((x, f));
    }
    collapse_spread(&curves)
}

/// RMS over a common grid of the population standard deviation across
/// curves. Each curve is `(x ascending, y)` and is interpolated linearly.
pub fn collapse_spread(curves: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
    let lo = curves.iter().map(|(x, _)| x[0]).fold(f64::NEG_INFINITY, f64::max);
    let hi = curves.iter().map(|(x, _)| x[x.len() - 1]).fold(f64::INFINITY, f64::min);
    if !(hi > lo) {
        return Err(Error::Range(format!(
            "rescaled columns do not overlap (common range [{lo}, {hi}])"
        )));
    }
    let n = COLLAPSE_SAMPLES;
    let mut sum_var = 0.0;
    for k in 0..n {
        let x = lo + (hi - lo) * k as f64 / (n - 1) as f64;
        let ys: Vec<f64> = curves.iter().map(|(cx, cy)| interpolate(cx, cy, x)).collect();
        let mean = ys.iter().sum::<f64>() / ys.len() as f64;
        sum_var += ys.iter().map(|y| (y - mean).powi(2)).sum::<f64>() / ys.len() as f64;
    }
    Ok((sum_var / n as f64).sqrt())
}

fn interpolate(x: &[f64], y: &[f64], at: f64) -> f64 {
    let j = x.partition_point(|&v| v < at);
    if j == 0 {
        return y[0];
    }
    if j == x.len() {
        return y[x.len() - 1];
    }
    let w = (at - x[j - 1]) / (x[j] - x[j - 1]);
    y[j - 1] + w * (y[j] - y[j - 1])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn exact_grid_hit() {
        let m = mu_half_of_column(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.25, 0.5, 0.75], &[0.0; 4]).unwrap();
        assert_eq!(m.value, 2.0);
    }

    #[test]
    fn linear_interpolation() {
        let m = mu_half_of_column(&[0.0, 1.0, 2.0], &[0.0, 0.4, 0.6], &[0.0, 0.02, 0.02]).unwrap();
        assert_relative_eq!(m.value, 1.5, epsilon = 1e-15);
        assert_relative_eq!(m.stderr, 0.02 / 0.2, epsilon = 1e-12);
    }

    #[test]
    fn non_monotone_noise_uses_first_crossing() {
        let m = mu_half_of_column(&[0.0, 1.0, 2.0, 3.0], &[0.0, 0.6, 0.45, 0.9], &[0.0; 4]).unwrap();
        assert_relative_eq!(m.value, 1.0 / 1.2, epsilon = 1e-12);
    }

    #[test]
    fn no_crossing_is_range_error() {
        assert!(matches!(
            mu_half_of_column(&[0.0, 1.0], &[0.0, 0.3], &[0.0; 2]),
            Err(Error::Range(_))
        ));
        assert!(matches!(
            mu_half_of_column(&[1.0, 2.0], &[0.7, 0.9], &[0.0; 2]),
            Err(Error::Range(_))
        ));
    }

    #[test]
    fn identical_curves_collapse_exactly() {
        let c = (vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 1.0]);
        assert_eq!(collapse_spread(&[c.clone(), c.clone(), c]).unwrap(), 0.0);
    }

    #[test]
    fn shifted_curves_have_spread() {
        let a = (vec![0.0, 1.0, 2.0], vec![0.0, 0.0, 0.0]);
        let b = (vec![0.0, 1.0, 2.0], vec![1.0, 1.0, 1.0]);
        assert_relative_eq!(collapse_spread(&[a, b]).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn disjoint_curves_rejected() {
        let a = (vec![0.0, 1.0], vec![0.0, 1.0]);
        let b = (vec![2.0, 3.0], vec![0.0, 1.0]);
        assert!(matches!(collapse_spread(&[a, b]), Err(Error::Range(_))));
    }

    #[test]
    fn scaling_factors() {
        assert_eq!(Scaling::Mu0.factor(20, 0.3), 1.0);
        assert_relative_eq!(Scaling::Mu0Prime.factor(10, 0.1), 2f64.sqrt());
        assert_relative_eq!(Scaling::MuTPrime.factor(10, 0.25), 2.0);
        assert_eq!("muTprime".parse::<Scaling>().unwrap(), Scaling::MuTPrime);
        assert!("x".parse::<Scaling>().is_err());
    }
}
