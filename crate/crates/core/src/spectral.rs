//! Eigenvalues of the effective Hamiltonians, classification into real
//! levels and complex-conjugate pairs, and the complex-level fraction `f`.

use std::cmp::Ordering;

use faer::{c64, MatRef};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::EffectiveHamiltonian;

/// Relative classification tolerance: `|Im E| ≤ 1e-8·Δ` counts as real.
pub const DEFAULT_TOLERANCE_REL: f64 = 1e-8;

/// Pair-matching slack, in units of the classification tolerance.
const PAIR_SLACK: f64 = 10.0;

#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<c64>,
    source: String,
}

impl Spectrum {
    /// Sorts by `(Re, Im)`.
    pub fn new(mut eigenvalues: Vec<c64>, source: impl Into<String>) -> Self {
        eigenvalues.sort_by(cmp_re_im);
        Self {
            eigenvalues,
            source: source.into(),
        }
    }

    pub fn eigenvalues(&self) -> &[c64] {
        &self.eigenvalues
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }
}

fn cmp_re_im(a: &c64, b: &c64) -> Ordering {
    a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im))
}

fn check_finite_square<T: Copy>(a: MatRef<'_, T>, finite: impl Fn(T) -> bool) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(Error::param(format!(
            "eigenvalues of a non-square {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !finite(a[(i, j)]) {
                return Err(Error::param(format!("non-finite entry at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

/// All eigenvalues of a general complex matrix (complex Schur form).
pub fn eigenvalues(a: MatRef<'_, c64>, source: &str) -> Result<Spectrum> {
    check_finite_square(a, |z: c64| z.re.is_finite() && z.im.is_finite())?;
    let ev = a
        .eigenvalues()
        .map_err(|_| Error::NoConvergence(source.to_string()))?;
    Ok(Spectrum::new(ev, source))
}

/// All eigenvalues of a general real matrix (real Schur form); complex
/// eigenvalues come out as exact conjugate pairs.
pub fn eigenvalues_real(a: MatRef<'_, f64>, source: &str) -> Result<Spectrum> {
    check_finite_square(a, f64::is_finite)?;
    let ev = a
        .eigenvalues()
        .map_err(|_| Error::NoConvergence(source.to_string()))?;
    Ok(Spectrum::new(ev, source))
}

/// Spectrum of an effective Hamiltonian.
///
/// PT-symmetric matrices go through their real form; everything else through
/// the complex solver.
pub fn spectrum_of(heff: &EffectiveHamiltonian) -> Result<Spectrum> {
    let source = format!("{} mu={}", heff.params(), heff.mu());
    match heff.real_form() {
        Some(real) => eigenvalues_real(real.as_ref(), &source),
        None => eigenvalues(heff.matrix(), &source),
    }
}

/// Same as [`spectrum_of`] but always through the complex solver.
pub fn spectrum_of_complex(heff: &EffectiveHamiltonian) -> Result<Spectrum> {
    let source = format!("{} mu={}", heff.params(), heff.mu());
    eigenvalues(heff.matrix(), &source)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifiedSpectrum {
    pub real_levels: Vec<f64>,
    /// Upper member (`Im > 0`) of each conjugate pair.
    pub conjugate_pairs: Vec<c64>,
    pub window_half_width: f64,
    pub tolerance: f64,
}

impl ClassifiedSpectrum {
    /// Levels belonging to complex-conjugate pairs.
    pub fn n_complex(&self) -> usize {
        2 * self.conjugate_pairs.len()
    }

    pub fn n_levels(&self) -> usize {
        self.n_complex() + self.real_levels.len()
    }

    pub fn counts(&self) -> LevelCounts {
        LevelCounts {
            complex: self.n_complex(),
            total: self.n_levels(),
        }
    }
}

/// Partitions `spectrum` into real levels and conjugate pairs and keeps those
/// with `|Re E| ≤ window_half_width`.
///
/// Complex eigenvalues are paired greedily in order of `Re E` with the nearest
/// unmatched conjugate candidate within `10·tolerance` in both `Re` and `Im`.
/// A complex eigenvalue left without a partner is an integrity error.
pub fn classify(
    spectrum: &Spectrum,
    window_half_width: f64,
    tolerance: f64,
) -> Result<ClassifiedSpectrum> {
    if !(tolerance > 0.0) {
        return Err(Error::param(format!("tolerance {tolerance} must be positive")));
    }
    if !(window_half_width >= 0.0) {
        return Err(Error::param("window half-width must be non-negative"));
    }
    let slack = PAIR_SLACK * tolerance;

    let mut real_levels = Vec::new();
    let mut upper: Vec<c64> = Vec::new();
    let mut lower: Vec<c64> = Vec::new();
    for &z in spectrum.eigenvalues() {
        if z.im.abs() <= tolerance {
            real_levels.push(z.re);
        } else if z.im > 0.0 {
            upper.push(z);
        } else {
            lower.push(z);
        }
    }
    upper.sort_by(cmp_re_im);
    lower.sort_by(cmp_re_im);

    let mut taken = vec![false; lower.len()];
    let mut pairs = Vec::with_capacity(upper.len());
    for &z in &upper {
        let start = lower.partition_point(|w| w.re < z.re - slack);
        let best = lower[start..]
            .iter()
            .enumerate()
            .take_while(|(_, w)| w.re <= z.re + slack)
            .filter(|&(k, w)| !taken[start + k] && (w.im + z.im).abs() <= slack)
            .map(|(k, w)| (start + k, (z - w.conj()).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        match best {
            Some((k, _)) => {
                taken[k] = true;
                let w = lower[k];
                pairs.push(c64::new(0.5 * (z.re + w.re), 0.5 * (z.im - w.im)));
            }
            None => {
                return Err(Error::Integrity(format!(
                    "eigenvalue {z} has no conjugate partner ({})",
                    spectrum.source()
                )))
            }
        }
    }
    if let Some(k) = taken.iter().position(|&t| !t) {
        return Err(Error::Integrity(format!(
            "eigenvalue {} has no conjugate partner ({})",
            lower[k],
            spectrum.source()
        )));
    }

    real_levels.retain(|e| e.abs() <= window_half_width);
    real_levels.sort_by(f64::total_cmp);
    pairs.retain(|z| z.re.abs() <= window_half_width);
    pairs.sort_by(cmp_re_im);
    Ok(ClassifiedSpectrum {
        real_levels,
        conjugate_pairs: pairs,
        window_half_width,
        tolerance,
    })
}

/// Window census of one realization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelCounts {
    pub complex: usize,
    pub total: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FractionEstimate {
    pub f: f64,
    pub stderr: f64,
    pub n_realizations: usize,
    pub n_levels_counted: usize,
    /// Realizations dropped because their window held no levels.
    pub n_skipped: usize,
}

impl FractionEstimate {
    /// Ratio-of-sums estimate with a delete-one jackknife error over
    /// realizations.
    pub fn from_counts(counts: &[LevelCounts]) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::param("complex fraction of an empty ensemble"));
        }
        let kept: Vec<LevelCounts> = counts.iter().copied().filter(|c| c.total > 0).collect();
        let n_skipped = counts.len() - kept.len();
        let total: usize = kept.iter().map(|c| c.total).sum();
        let complex: usize = kept.iter().map(|c| c.complex).sum();
        if total == 0 {
            return Err(Error::Range("every realization has an empty window".into()));
        }
        let f = complex as f64 / total as f64;
        let n = kept.len();
        let stderr = if n < 2 {
            0.0
        } else {
            let loo: Vec<f64> = kept
                .iter()
                .map(|c| {
                    let d = total - c.total;
                    if d == 0 {
                        f
                    } else {
                        (complex - c.complex) as f64 / d as f64
                    }
                })
                .collect();
            let mean = loo.iter().sum::<f64>() / n as f64;
            let ss: f64 = loo.iter().map(|x| (x - mean).powi(2)).sum();
            ((n - 1) as f64 / n as f64 * ss).sqrt()
        };
        Ok(Self {
            f,
            stderr,
            n_realizations: counts.len(),
            n_levels_counted: total,
            n_skipped,
        })
    }
}

/// Ensemble-averaged fraction of complex levels inside the window.
pub fn complex_fraction(instances: &[ClassifiedSpectrum]) -> Result<FractionEstimate> {
    let first = instances
        .first()
        .ok_or_else(|| Error::param("complex fraction of an empty ensemble"))?;
    if instances.iter().any(|c| {
        c.window_half_width != first.window_half_width || c.tolerance != first.tolerance
    }) {
        return Err(Error::param("instances were classified with different window settings"));
    }
    let counts: Vec<LevelCounts> = instances.iter().map(ClassifiedSpectrum::counts).collect();
    FractionEstimate::from_counts(&counts)
}
