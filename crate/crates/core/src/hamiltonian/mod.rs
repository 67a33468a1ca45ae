//! Effective non-hermitian Hamiltonians of the coupled loss/gain system.
//!
//! The two variants share the layout
//!
//! ```text
//!   PT:   [[H - iμ, Γ], [Γ, H* + iμ]]
//!   PTT': [[H - iμ, Γ], [Γ, H  + iμ]]
//! ```
//!
//! and coincide whenever `H` is real.

mod scattering;

pub use scattering::{
    quantization_residual, scattering_matrix, BarrierScattering, QuantizationOracle, Side,
};

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Serialize};

use crate::ensembles::{ChannelCoupling, SymmetryClass};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SymmetryVariant {
    /// Loss/gain parts related by parity and complex conjugation.
    #[serde(rename = "pt")]
    PT,
    /// Parity, time reversal and transposition; the amplifying part carries
    /// `H` instead of `H*`.
    #[serde(rename = "ptt_prime")]
    PTTprime,
}

impl SymmetryVariant {
    pub fn name(self) -> &'static str {
        match self {
            SymmetryVariant::PT => "pt",
            SymmetryVariant::PTTprime => "ptt_prime",
        }
    }
}

impl std::fmt::Display for SymmetryVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Where an effective Hamiltonian came from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianParams {
    pub class: SymmetryClass,
    pub variant: SymmetryVariant,
    pub transmission: f64,
    pub dim: usize,
    pub channels: usize,
    /// `(master seed, realization index)` when `H` was sampled.
    pub realization: Option<(u64, u64)>,
}

impl std::fmt::Display for HamiltonianParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}/{} M={} N={} T={}",
            self.class, self.variant, self.dim, self.channels, self.transmission
        )?;
        if let Some((seed, r)) = self.realization {
            write!(f, " seed={seed} realization={r}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct EffectiveHamiltonian {
    matrix: Mat<c64>,
    mu: f64,
    params: HamiltonianParams,
}

impl EffectiveHamiltonian {
    pub fn matrix(&self) -> MatRef<'_, c64> {
        self.matrix.as_ref()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn params(&self) -> &HamiltonianParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.dim
    }

    pub fn with_realization(mut self, seed: u64, index: u64) -> Self {
        self.params.realization = Some((seed, index));
        self
    }

    /// True when `P 𝓗* P = 𝓗`, with `P` swapping the two subsystems.
    /// Holds for the PT variant of either class and for any real `H`.
    pub fn is_pt_symmetric(&self) -> bool {
        let m = self.params.dim;
        let a = self.matrix.as_ref();
        (0..m).all(|i| {
            (0..m).all(|j| {
                a[(i, j)] == a[(i + m, j + m)].conj()
                    && a[(i, j + m)] == a[(i + m, j)].conj()
            })
        })
    }

    /// Real matrix unitarily similar to `𝓗`, available whenever `𝓗` is PT
    /// symmetric.
    ///
    /// With `W = (1/√2)[[I, iI], [I, -iI]]` (so that `W* = P W`),
    /// `W† 𝓗 W = [[Re A + Γ, -Im A], [Im A, Re A - Γ]]`, where `A = H - iμ`
    /// is the absorbing block. Its real Schur form yields exactly conjugate
    /// eigenvalue pairs.
    pub fn real_form(&self) -> Option<Mat<f64>> {
        if !self.is_pt_symmetric() {
            return None;
        }
        let m = self.params.dim;
        let a = self.matrix.as_ref();
        Some(Mat::<f64>::from_fn(2 * m, 2 * m, |i, j| {
            let (bi, bj) = (i / m, j / m);
            let (p, q) = (i % m, j % m);
            let block = a[(p, q)];
            let gamma = a[(p, q + m)].re;
            match (bi, bj) {
                (0, 0) => block.re + gamma,
                (0, 1) => -block.im,
                (1, 0) => block.im,
                _ => block.re - gamma,
            }
        }))
    }
}

fn check_hermitian(h: MatRef<'_, c64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::param(format!(
            "H must be square, got {}x{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let m = h.nrows();
    let scale = (0..m)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .map(|(i, j)| h[(i, j)].norm())
        .fold(0.0f64, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for i in 0..m {
        for j in i..m {
            if (h[(i, j)] - h[(j, i)].conj()).norm() > tol {
                return Err(Error::param(format!("H is not hermitian at ({i}, {j})")));
            }
        }
    }
    Ok(())
}

fn infer_class(h: MatRef<'_, c64>) -> SymmetryClass {
    let m = h.nrows();
    let real = (0..m).all(|i| (0..m).all(|j| h[(i, j)].im == 0.0));
    if real {
        SymmetryClass::Orthogonal
    } else {
        SymmetryClass::Unitary
    }
}

/// Assembles the `2M x 2M` effective Hamiltonian for the given variant.
pub fn build_effective(
    h: MatRef<'_, c64>,
    coupling: &ChannelCoupling,
    mu: f64,
    variant: SymmetryVariant,
) -> Result<EffectiveHamiltonian> {
    check_hermitian(h)?;
    let m = h.nrows();
    if coupling.dim() != m {
        return Err(Error::param(format!(
            "coupling has dimension {} but H is {m}x{m}",
            coupling.dim()
        )));
    }
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::param(format!("absorption rate μ = {mu} must be finite and >= 0")));
    }
    let gamma = coupling.gamma();
    let i_mu = c64::new(0.0, mu);
    let matrix = Mat::<c64>::from_fn(2 * m, 2 * m, |i, j| {
        let (p, q) = (i % m, j % m);
        match (i / m, j / m) {
            (0, 0) => {
                let x = h[(p, q)];
                if p == q {
                    x - i_mu
                } else {
                    x
                }
            }
            (1, 1) => {
                let x = match variant {
                    SymmetryVariant::PT => h[(p, q)].conj(),
                    SymmetryVariant::PTTprime => h[(p, q)],
                };
                if p == q {
                    x + i_mu
                } else {
                    x
                }
            }
            _ => {
                if p == q {
                    c64::new(gamma[p], 0.0)
                } else {
                    c64::new(0.0, 0.0)
                }
            }
        }
    });
    Ok(EffectiveHamiltonian {
        matrix,
        mu,
        params: HamiltonianParams {
            class: infer_class(h),
            variant,
            transmission: coupling.transmission(),
            dim: m,
            channels: coupling.channels(),
            realization: None,
        },
    })
}

/// `U 𝓗 U†` with `U = (1/√2)[[I, I], [-I, I]]`.
///
/// For a PT-symmetric `𝓗 = [[A, Γ], [Γ, A*]]` this gives
/// `[[Re A + Γ, -i Im A], [-i Im A, Re A - Γ]]`; for real `H` that is
/// `[[H + Γ, iμ], [iμ, H - Γ]]`. The PTT' variant gives
/// `[[H + Γ, iμ], [iμ, H - Γ]]` with complex `H`.
pub fn parity_transform(heff: &EffectiveHamiltonian) -> Mat<c64> {
    let m = heff.dim();
    let x = heff.matrix();
    // blocks [[A, B], [C, D]] -> ½[[A+B+C+D, B+D-A-C], [C+D-A-B, A+D-B-C]]
    Mat::<c64>::from_fn(2 * m, 2 * m, |i, j| {
        let (p, q) = (i % m, j % m);
        let a = x[(p, q)];
        let b = x[(p, q + m)];
        let c = x[(p + m, q)];
        let d = x[(p + m, q + m)];
        let s = match (i / m, j / m) {
            (0, 0) => a + b + c + d,
            (0, 1) => b + d - a - c,
            (1, 0) => c + d - a - b,
            _ => a + d - b - c,
        };
        s * 0.5
    })
}
