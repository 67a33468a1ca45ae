//! Scattering description of the two subsystems and the barrier, used as an
//! independent route to the spectrum of the effective Hamiltonian.

use faer::prelude::*;
use faer::{c64, Mat, MatRef};

use crate::ensembles::ChannelCoupling;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Side {
    /// Absorbing subsystem, `S_L(E; μ)`.
    Left,
    /// Amplifying subsystem, `S_R(E; -μ)`.
    Right,
}

/// Tunnel barrier with reflection `r = -√(1-T)` and transmission `t = i√T`
/// in every open channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarrierScattering {
    pub r: c64,
    pub t: c64,
}

impl BarrierScattering {
    pub fn new(transmission: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&transmission) {
            return Err(Error::param(format!(
                "transmission T = {transmission} outside [0, 1]"
            )));
        }
        Ok(Self {
            r: c64::new(-(1.0 - transmission).sqrt(), 0.0),
            t: c64::new(0.0, transmission.sqrt()),
        })
    }

    /// `[[r, t], [t, r]] ⊗ 1_N`.
    pub fn matrix(&self, channels: usize) -> Mat<c64> {
        let n = channels;
        Mat::from_fn(2 * n, 2 * n, |i, j| {
            if i % n != j % n {
                c64::new(0.0, 0.0)
            } else if i / n == j / n {
                self.r
            } else {
                self.t
            }
        })
    }
}

/// `S_L = 1 - 2i V†(E - iμ - H + iVV†)⁻¹V` or
/// `S_R = 1 - 2i V†(E + iμ - H* + iVV†)⁻¹V`.
///
/// `V` is the `M x N` matrix with `V[c][c] = √v_c` on the open channels.
pub fn scattering_matrix(
    side: Side,
    energy: c64,
    h: MatRef<'_, c64>,
    coupling: &ChannelCoupling,
    mu: f64,
) -> Result<Mat<c64>> {
    let m = h.nrows();
    let n = coupling.channels();
    if h.ncols() != m || coupling.dim() != m {
        return Err(Error::param("scattering: H and coupling dimensions disagree"));
    }
    let v = coupling.v();
    let shift = match side {
        Side::Left => energy - c64::new(0.0, mu),
        Side::Right => energy + c64::new(0.0, mu),
    };
    let resolvent_inv = Mat::<c64>::from_fn(m, m, |i, j| {
        let hij = match side {
            Side::Left => h[(i, j)],
            Side::Right => h[(i, j)].conj(),
        };
        let mut x = -hij;
        if i == j {
            x += shift + c64::new(0.0, v[i]);
        }
        x
    });

    let lu = resolvent_inv.partial_piv_lu();
    let condition = pivot_condition(lu.U());
    let rhs = Mat::<c64>::from_fn(m, n, |i, c| {
        if i == c {
            c64::new(v[c].sqrt(), 0.0)
        } else {
            c64::new(0.0, 0.0)
        }
    });
    let x = lu.solve(&rhs);
    if !condition.is_finite() || condition > 1e14 || !all_finite(x.as_ref()) {
        return Err(Error::Numerical {
            message: format!("singular resolvent at E = {energy}"),
            condition,
        });
    }
    let minus_two_i = c64::new(0.0, -2.0);
    Ok(Mat::from_fn(n, n, |c, d| {
        let id = if c == d { 1.0 } else { 0.0 };
        c64::new(id, 0.0) + minus_two_i * c64::new(v[c].sqrt(), 0.0) * x[(c, d)]
    }))
}

/// Ratio of largest to smallest LU pivot magnitude.
fn pivot_condition(u: MatRef<'_, c64>) -> f64 {
    let pivots = (0..u.nrows()).map(|i| u[(i, i)].norm());
    let (lo, hi) = pivots.fold((f64::INFINITY, 0.0f64), |(lo, hi), p| (lo.min(p), hi.max(p)));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn all_finite(a: MatRef<'_, c64>) -> bool {
    (0..a.nrows()).all(|i| (0..a.ncols()).all(|j| a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))
}

/// Evaluates the barrier quantization condition for a fixed `(H, Γ, μ)`.
#[derive(Clone, Copy)]
pub struct QuantizationOracle<'a> {
    h: MatRef<'a, c64>,
    coupling: &'a ChannelCoupling,
    mu: f64,
    barrier: BarrierScattering,
}

impl<'a> QuantizationOracle<'a> {
    pub fn new(h: MatRef<'a, c64>, coupling: &'a ChannelCoupling, mu: f64) -> Result<Self> {
        Ok(Self {
            h,
            coupling,
            mu,
            barrier: BarrierScattering::new(coupling.transmission())?,
        })
    }

    /// Poles of `S_L` and `S_R`: the eigenvalues of `H + iμ - iVV†` and
    /// `H* - iμ - iVV†`. The relative residual carries no information close
    /// to them, where the largest singular value diverges.
    pub fn poles(&self) -> Result<Vec<c64>> {
        let m = self.h.nrows();
        let vv: Vec<f64> = self.coupling.v().iter().map(|v| v * v).collect();
        let shifted = |conj: bool, shift: f64| {
            Mat::<c64>::from_fn(m, m, |i, j| {
                let x = if conj { self.h[(i, j)].conj() } else { self.h[(i, j)] };
                if i == j {
                    x + c64::new(0.0, shift - vv[i])
                } else {
                    x
                }
            })
        };
        let mut out = Vec::with_capacity(2 * m);
        for (conj, shift) in [(false, self.mu), (true, -self.mu)] {
            let a = shifted(conj, shift);
            let ev = a.eigenvalues().map_err(|_| {
                Error::NoConvergence("eigenvalues of the scattering resolvent".into())
            })?;
            out.extend(ev);
        }
        Ok(out)
    }

    /// Smallest singular value of `B·diag(S_L, S_R) - 1`, relative to the
    /// largest. Vanishes exactly at eigenvalues of the effective Hamiltonian.
    pub fn residual(&self, energy: c64) -> Result<f64> {
        let n = self.coupling.channels();
        let s_l = scattering_matrix(Side::Left, energy, self.h, self.coupling, self.mu)?;
        let s_r = scattering_matrix(Side::Right, energy, self.h, self.coupling, self.mu)?;
        let b = self.barrier.matrix(n);
        let s = Mat::<c64>::from_fn(2 * n, 2 * n, |i, j| match (i / n, j / n) {
            (0, 0) => s_l[(i, j)],
            (1, 1) => s_r[(i - n, j - n)],
            _ => c64::new(0.0, 0.0),
        });
        let mut k = &b * &s;
        for i in 0..2 * n {
            k[(i, i)] -= c64::new(1.0, 0.0);
        }
        let sv = k.singular_values().map_err(|_| Error::Numerical {
            message: format!("SVD of quantization matrix did not converge at E = {energy}"),
            condition: f64::NAN,
        })?;
        let hi = sv.first().copied().unwrap_or(0.0);
        let lo = sv.last().copied().unwrap_or(0.0);
        if hi == 0.0 {
            return Ok(0.0);
        }
        Ok(lo / hi)
    }
}

pub fn quantization_residual(
    energy: c64,
    h: MatRef<'_, c64>,
    coupling: &ChannelCoupling,
    mu: f64,
) -> Result<f64> {
    QuantizationOracle::new(h, coupling, mu)?.residual(energy)
}
