//! Two-level reductions behind the symmetry-breaking transition and the
//! characteristic absorption scales they predict.
//!
//! * Quasi-degenerate route: at weak coupling the degenerate copies of a
//!   level `ε_k` of `H` split by `|Σ_m (ψ_m^(k))² γ_m|`, which is also the
//!   `μ` at which they turn complex.
//! * Crossing route: in the parity basis a level of `H + Γ` and an adjacent
//!   level of `H - Γ` are mixed by `iμ⟨ψ^(k+)|ψ^(l-)⟩` and coalesce at
//!   `μ = |ε_k⁺ - ε_l⁻| / (2|⟨ψ^(k+)|ψ^(l-)⟩|)`.

use std::f64::consts::PI;

use faer::{c64, Mat, MatRef, Side};
use serde::{Deserialize, Serialize};

use crate::ensembles::ChannelCoupling;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacteristicScales {
    /// `√N Δ / 2π`: strong-coupling scale of the crossing route.
    pub mu0: f64,
    /// `N √T Δ / 2π`: weak-coupling scale, orthogonal class.
    pub mu_t: f64,
    /// `√(NT) Δ / 2π = √T μ₀`: unitary class.
    pub mu_t_prime: f64,
    /// `μ₀ / √(1 + 1/NT)`: interpolates between `μ_T` and `μ₀`.
    pub mu0_prime: f64,
    /// Threshold transmission `1/N` where the two routes exchange predominance.
    pub t_c: f64,
}

pub fn scales(channels: usize, t: f64, delta0: f64) -> Result<CharacteristicScales> {
    if channels == 0 {
        return Err(Error::param("channel count must be positive"));
    }
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param(format!("transmission T = {t} outside [0, 1]")));
    }
    let n = channels as f64;
    let mu0 = n.sqrt() * delta0 / (2.0 * PI);
    let nt = n * t;
    Ok(CharacteristicScales {
        mu0,
        mu_t: n * t.sqrt() * delta0 / (2.0 * PI),
        mu_t_prime: nt.sqrt() * delta0 / (2.0 * PI),
        mu0_prime: if t == 0.0 { 0.0 } else { mu0 / (1.0 + 1.0 / nt).sqrt() },
        t_c: 1.0 / n,
    })
}

/// Eigen-decomposition of a hermitian matrix, ascending eigenvalues.
/// Real matrices are diagonalized in real arithmetic so the eigenvectors
/// come out real.
pub fn hermitian_eigen(h: MatRef<'_, c64>) -> Result<(Vec<f64>, Mat<c64>)> {
    let n = h.nrows();
    let is_real = (0..n).all(|i| (0..n).all(|j| h[(i, j)].im == 0.0));
    if is_real {
        let re = Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)].re);
        let evd = re
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::NoConvergence("real symmetric eigenproblem".into()))?;
        let vals = evd.S().column_vector().iter().copied().collect();
        let u = evd.U();
        Ok((vals, Mat::from_fn(n, n, |i, j| c64::new(u[(i, j)], 0.0))))
    } else {
        let evd = h
            .self_adjoint_eigen(Side::Lower)
            .map_err(|_| Error::NoConvergence("hermitian eigenproblem".into()))?;
        let vals = evd.S().column_vector().iter().map(|z| z.re).collect();
        Ok((vals, evd.U().to_owned()))
    }
}

fn check_dims(h: MatRef<'_, c64>, coupling: &ChannelCoupling) -> Result<()> {
    if h.nrows() != h.ncols() || h.nrows() != coupling.dim() {
        return Err(Error::param(format!(
            "H is {}x{} but the coupling has dimension {}",
            h.nrows(),
            h.ncols(),
            coupling.dim()
        )));
    }
    Ok(())
}

/// `|Σ_m ψ_m² γ_m|` for a normalized `ψ`. The square is of the amplitude,
/// so complex phases can cancel.
pub fn quasi_degenerate_mu_from_vector(psi: &[c64], gamma: &[f64]) -> Result<f64> {
    if psi.len() != gamma.len() {
        return Err(Error::param("eigenvector and coupling lengths differ"));
    }
    let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(Error::param(format!("eigenvector is not normalized (|ψ|² = {norm})")));
    }
    let s: c64 = psi.iter().zip(gamma).map(|(z, &g)| z * z * g).sum();
    Ok(s.norm())
}

/// Splitting scale of level `k` (ascending order) of `H`.
pub fn quasi_degenerate_mu(h: MatRef<'_, c64>, coupling: &ChannelCoupling, k: usize) -> Result<f64> {
    check_dims(h, coupling)?;
    if k >= h.nrows() {
        return Err(Error::param(format!("level index {k} out of range")));
    }
    let (_, u) = hermitian_eigen(h)?;
    let psi: Vec<c64> = u.col(k).iter().copied().collect();
    quasi_degenerate_mu_from_vector(&psi, coupling.gamma())
}

/// `(ε_k, μ_k)` for every level of `H`.
pub fn quasi_degenerate_mus(h: MatRef<'_, c64>, coupling: &ChannelCoupling) -> Result<Vec<(f64, f64)>> {
    check_dims(h, coupling)?;
    let (vals, u) = hermitian_eigen(h)?;
    vals.iter()
        .enumerate()
        .map(|(k, &e)| {
            let psi: Vec<c64> = u.col(k).iter().copied().collect();
            quasi_degenerate_mu_from_vector(&psi, coupling.gamma()).map(|mu| (e, mu))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingPair {
    pub plus_index: usize,
    pub minus_index: usize,
    pub eps_plus: f64,
    pub eps_minus: f64,
    /// `⟨ψ^(k+)|ψ^(l-)⟩` from exact eigenvectors.
    pub overlap: c64,
    /// `|ε⁺ - ε⁻| / (2|overlap|)`.
    pub mu_critical: f64,
}

/// Perturbative overlap with a flag for values to keep out of averages.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerturbativeOverlap {
    pub value: c64,
    /// Vanishing denominator, or `k == l` where the first-order expansion
    /// does not apply.
    pub flagged: bool,
}

/// Eigen-decompositions of `H + Γ` and `H - Γ`.
pub struct ParityDecomposition {
    eps_plus: Vec<f64>,
    vec_plus: Mat<c64>,
    eps_minus: Vec<f64>,
    vec_minus: Mat<c64>,
    gamma: Vec<f64>,
}

impl ParityDecomposition {
    pub fn new(h: MatRef<'_, c64>, coupling: &ChannelCoupling) -> Result<Self> {
        check_dims(h, coupling)?;
        let m = h.nrows();
        let gamma = coupling.gamma().to_vec();
        let shifted = |sign: f64| {
            Mat::<c64>::from_fn(m, m, |i, j| {
                if i == j {
                    h[(i, j)] + c64::new(sign * gamma[i], 0.0)
                } else {
                    h[(i, j)]
                }
            })
        };
        let (eps_plus, vec_plus) = hermitian_eigen(shifted(1.0).as_ref())?;
        let (eps_minus, vec_minus) = hermitian_eigen(shifted(-1.0).as_ref())?;
        Ok(Self {
            eps_plus,
            vec_plus,
            eps_minus,
            vec_minus,
            gamma,
        })
    }

    pub fn eps_plus(&self) -> &[f64] {
        &self.eps_plus
    }

    pub fn eps_minus(&self) -> &[f64] {
        &self.eps_minus
    }

    /// `⟨ψ^(k+)|ψ^(l-)⟩`.
    pub fn overlap(&self, k: usize, l: usize) -> c64 {
        self.vec_plus
            .col(k)
            .iter()
            .zip(self.vec_minus.col(l).iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// Each `+` level inside the window paired with its nearest `-` level.
    pub fn crossing_pairs(&self, window_half_width: f64) -> Vec<CrossingPair> {
        let mut out = Vec::new();
        if self.eps_minus.is_empty() {
            return out;
        }
        for (k, &ep) in self.eps_plus.iter().enumerate() {
            if ep.abs() > window_half_width {
                continue;
            }
            // strict < keeps the smaller index on ties
            let mut l = 0;
            for (j, &em) in self.eps_minus.iter().enumerate() {
                if (em - ep).abs() < (self.eps_minus[l] - ep).abs() {
                    l = j;
                }
            }
            let overlap = self.overlap(k, l);
            let gap = (ep - self.eps_minus[l]).abs();
            let mu_critical = if gap == 0.0 {
                0.0
            } else if overlap.norm() == 0.0 {
                f64::INFINITY
            } else {
                gap / (2.0 * overlap.norm())
            };
            out.push(CrossingPair {
                plus_index: k,
                minus_index: l,
                eps_plus: ep,
                eps_minus: self.eps_minus[l],
                overlap,
                mu_critical,
            });
        }
        out
    }

    /// `⟨ψ^(k+)|2Γ|ψ^(l+)⟩ / (-⟨ψ^(l+)|2Γ|ψ^(l+)⟩)`: first-order estimate of
    /// `⟨ψ^(k+)|ψ^(l-)⟩`, with the energy denominator replaced by the level
    /// shift of `l` under `2Γ`.
    pub fn overlap_perturbative(&self, k: usize, l: usize) -> PerturbativeOverlap {
        let bra = self.vec_plus.col(k);
        let ket = self.vec_plus.col(l);
        let numerator: c64 = (0..self.gamma.len())
            .map(|m| bra[m].conj() * 2.0 * self.gamma[m] * ket[m])
            .sum();
        let denominator: f64 = -(0..self.gamma.len())
            .map(|m| 2.0 * self.gamma[m] * ket[m].norm_sqr())
            .sum::<f64>();
        if numerator == c64::new(0.0, 0.0) {
            return PerturbativeOverlap {
                value: numerator,
                flagged: k == l,
            };
        }
        let scale = self.gamma.iter().copied().fold(0.0, f64::max);
        if denominator.abs() <= 1e-14 * scale {
            return PerturbativeOverlap {
                value: c64::new(f64::NAN, f64::NAN),
                flagged: true,
            };
        }
        PerturbativeOverlap {
            value: numerator / denominator,
            flagged: k == l,
        }
    }
}

/// Adjacent `(+, -)` level pairs inside the window, with exact overlaps.
///
/// Meaningful where the parity basis is block diagonal at `μ = 0`: the
/// orthogonal class, or the PTT' variant of either class.
pub fn crossing_pairs(
    h: MatRef<'_, c64>,
    coupling: &ChannelCoupling,
    window_half_width: f64,
) -> Result<Vec<CrossingPair>> {
    Ok(ParityDecomposition::new(h, coupling)?.crossing_pairs(window_half_width))
}

pub fn overlap_perturbative(
    h: MatRef<'_, c64>,
    coupling: &ChannelCoupling,
    k: usize,
    l: usize,
) -> Result<PerturbativeOverlap> {
    if k >= h.nrows() || l >= h.nrows() {
        return Err(Error::param("level index out of range"));
    }
    Ok(ParityDecomposition::new(h, coupling)?.overlap_perturbative(k, l))
}
