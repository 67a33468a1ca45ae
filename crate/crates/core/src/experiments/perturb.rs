use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensembles::{build_coupling, sample_h, EnsembleSpec, SpectralNormalization, SymmetryClass};
use crate::error::{Error, Result};
use crate::perturbation::{quasi_degenerate_mus, scales, ParityDecomposition};
use crate::rng::RngStream;

/// Ensemble statistics of the two perturbative routes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbConfig {
    pub classes: Vec<SymmetryClass>,
    pub dim: usize,
    pub channels: usize,
    pub t_values: Vec<f64>,
    pub realizations: usize,
    pub seed: u64,
    #[serde(default = "default_window_fraction")]
    pub window_fraction: f64,
}

fn default_window_fraction() -> f64 {
    crate::ensembles::DEFAULT_WINDOW_FRACTION
}

impl PerturbConfig {
    pub fn validate(&self) -> Result<()> {
        if self.classes.is_empty() || self.t_values.is_empty() {
            return Err(Error::Config("classes and t_values must be non-empty".into()));
        }
        for &class in &self.classes {
            EnsembleSpec { class, dim: self.dim, channels: self.channels, seed: self.seed }
                .validate()?;
        }
        if let Some(t) = self.t_values.iter().find(|t| !(**t > 0.0 && **t <= 1.0)) {
            return Err(Error::Config(format!("transmission {t} outside (0, 1]")));
        }
        if self.realizations == 0 {
            return Err(Error::Config("realizations must be at least 1".into()));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(Error::Config("window_fraction must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// One `(class, T)` row. Energies in the units of `H`; ratio columns are
/// dimensionless.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleStatistics {
    pub class: SymmetryClass,
    pub t: f64,
    pub realizations: usize,
    pub mu0: f64,
    pub mu_t: f64,
    pub mu_t_prime: f64,
    pub mu0_prime: f64,
    /// Levels of `H` inside the window, summed over realizations.
    pub n_levels: usize,
    pub mean_quasi_degenerate_mu: f64,
    pub quasi_degenerate_over_mu_t: f64,
    pub quasi_degenerate_over_mu_t_prime: f64,
    /// Crossing pairs inside the window, summed over realizations.
    pub n_pairs: usize,
    pub median_mu_critical: f64,
    pub median_mu_critical_over_mu0: f64,
    /// `N · mean |⟨ψ^(k+)|ψ^(l-)⟩|²` from exact eigenvectors.
    pub overlap_sq_times_n: f64,
    /// Same from the first-order estimate; flagged pairs excluded.
    pub perturbative_overlap_sq_times_n: f64,
}

#[derive(Default)]
struct Samples {
    qd: Vec<f64>,
    mu_c: Vec<f64>,
    overlap_sq: Vec<f64>,
    pert_sq: Vec<f64>,
}

fn realization(config: &PerturbConfig, class: SymmetryClass, t: f64, r: usize) -> Result<Samples> {
    let spec = EnsembleSpec { class, dim: config.dim, channels: config.channels, seed: config.seed };
    let norm = SpectralNormalization::with_sigma(
        1.0 / (config.dim as f64).sqrt(),
        config.dim,
        config.window_fraction,
    );
    let h = sample_h(&spec, &norm, &mut RngStream::child(config.seed, r as u64))?;
    let coupling = build_coupling(config.dim, config.channels, t, norm.delta0)?;
    let w = norm.window_half_width;
    let mut out = Samples::default();
    out.qd = quasi_degenerate_mus(h.as_ref(), &coupling)?
        .into_iter()
        .filter(|(e, _)| e.abs() <= w)
        .map(|(_, mu)| mu)
        .collect();
    let parity = ParityDecomposition::new(h.as_ref(), &coupling)?;
    for pair in parity.crossing_pairs(w) {
        out.mu_c.push(pair.mu_critical);
        out.overlap_sq.push(pair.overlap.norm_sqr());
        let p = parity.overlap_perturbative(pair.plus_index, pair.minus_index);
        if !p.flagged && p.value.norm_sqr().is_finite() {
            out.pert_sq.push(p.value.norm_sqr());
        }
    }
    Ok(out)
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Rows ordered by class (as listed) then `T`. Realization `r` draws `H`
/// from `child(seed, r)`.
pub fn scale_statistics(config: &PerturbConfig) -> Result<Vec<ScaleStatistics>> {
    crate::sequential_kernels();
    config.validate()?;
    let delta0 = SpectralNormalization::standard(config.dim).delta0;
    let mut rows = Vec::new();
    for &class in &config.classes {
        for &t in &config.t_values {
            let per: Vec<Samples> = (0..config.realizations)
                .into_par_iter()
                .map(|r| realization(config, class, t, r))
                .collect::<Result<_>>()?;
            let mut all = Samples::default();
            for s in per {
                all.qd.extend(s.qd);
                all.mu_c.extend(s.mu_c);
                all.overlap_sq.extend(s.overlap_sq);
                all.pert_sq.extend(s.pert_sq);
            }
            let sc = scales(config.channels, t, delta0)?;
            let n = config.channels as f64;
            let qd = mean(&all.qd);
            let med = median(all.mu_c.clone());
            rows.push(ScaleStatistics {
                class,
                t,
                realizations: config.realizations,
                mu0: sc.mu0,
                mu_t: sc.mu_t,
                mu_t_prime: sc.mu_t_prime,
                mu0_prime: sc.mu0_prime,
                n_levels: all.qd.len(),
                mean_quasi_degenerate_mu: qd,
                quasi_degenerate_over_mu_t: qd / sc.mu_t,
                quasi_degenerate_over_mu_t_prime: qd / sc.mu_t_prime,
                n_pairs: all.mu_c.len(),
                median_mu_critical: med,
                median_mu_critical_over_mu0: med / sc.mu0,
                overlap_sq_times_n: n * mean(&all.overlap_sq),
                perturbative_overlap_sq_times_n: n * mean(&all.pert_sq),
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_and_mean() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(vec![]).is_nan());
        assert_eq!(mean(&[1.0, 3.0]), 2.0);
    }

    #[test]
    fn rows_cover_classes_and_transmissions() {
        let c = PerturbConfig {
            classes: vec![SymmetryClass::Orthogonal, SymmetryClass::Unitary],
            dim: 32,
            channels: 4,
            t_values: vec![0.1, 1.0],
            realizations: 3,
            seed: 5,
            window_fraction: 0.5,
        };
        let rows = scale_statistics(&c).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows[2].class, SymmetryClass::Unitary);
        assert_eq!(rows[1].t, 1.0);
        for r in &rows {
            assert!(r.n_levels > 0 && r.n_pairs > 0);
            assert!(r.mean_quasi_degenerate_mu > 0.0);
        }
        assert_eq!(rows, scale_statistics(&c).unwrap());
    }

    #[test]
    fn rejects_bad_transmission() {
        let c = PerturbConfig {
            classes: vec![SymmetryClass::Orthogonal],
            dim: 8,
            channels: 2,
            t_values: vec![0.0],
            realizations: 1,
            seed: 0,
            window_fraction: 0.25,
        };
        assert!(matches!(scale_statistics(&c), Err(Error::Config(_))));
    }
}
