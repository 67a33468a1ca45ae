//! Gaussian random-matrix ensembles, spectral normalization and the
//! channel-coupling data (`VV†` and `Γ`) of the two-part system.

use std::f64::consts::PI;

use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Symmetry class of the hermitian limit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryClass {
    /// Real symmetric `H` (GOE); the hermitian limit is time-reversal symmetric.
    Orthogonal,
    /// Complex hermitian `H` (GUE).
    Unitary,
}

impl SymmetryClass {
    pub fn name(self) -> &'static str {
        match self {
            SymmetryClass::Orthogonal => "orthogonal",
            SymmetryClass::Unitary => "unitary",
        }
    }
}

impl std::fmt::Display for SymmetryClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleSpec {
    pub class: SymmetryClass,
    /// Dimension `M` of each subsystem Hamiltonian.
    pub dim: usize,
    /// Number `N` of open channels through the barrier.
    pub channels: usize,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn new(class: SymmetryClass, dim: usize, channels: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            class,
            dim,
            channels,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::param("matrix dimension M must be positive"));
        }
        if self.channels == 0 || self.channels > self.dim {
            return Err(Error::param(format!(
                "channel count N = {} must satisfy 1 <= N <= M = {}",
                self.channels, self.dim
            )));
        }
        Ok(())
    }
}

/// Scale of the sampled `H` and the quantities derived from it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralNormalization {
    /// Off-diagonal standard deviation of `H`.
    pub sigma: f64,
    /// Mean level spacing at the band center.
    pub delta0: f64,
    /// Half-width of the central energy window, in absolute energy units.
    pub window_half_width: f64,
}

/// Default window half-width as a fraction of the semicircle radius.
pub const DEFAULT_WINDOW_FRACTION: f64 = 0.25;

impl SpectralNormalization {
    /// `sigma = 1/√M`: semicircle radius 2 and `Δ = π/M`.
    pub fn standard(dim: usize) -> Self {
        Self::with_sigma(1.0 / (dim as f64).sqrt(), dim, DEFAULT_WINDOW_FRACTION)
    }

    pub fn with_sigma(sigma: f64, dim: usize, window_fraction: f64) -> Self {
        let radius = 2.0 * sigma * (dim as f64).sqrt();
        Self {
            sigma,
            delta0: mean_level_spacing_for(sigma, dim),
            window_half_width: window_fraction * radius,
        }
    }

    pub fn radius(&self, dim: usize) -> f64 {
        2.0 * self.sigma * (dim as f64).sqrt()
    }

    /// Semicircle density of states at `energy`.
    pub fn semicircle_density(&self, dim: usize, energy: f64) -> f64 {
        let r = self.radius(dim);
        if energy.abs() >= r {
            return 0.0;
        }
        dim as f64 * 2.0 / (PI * r * r) * (r * r - energy * energy).sqrt()
    }
}

fn mean_level_spacing_for(sigma: f64, dim: usize) -> f64 {
    PI * sigma / (dim as f64).sqrt()
}

/// Mean level spacing `Δ` at the band center, `π·sigma/√M`.
///
/// This is the value used wherever an energy scale is expressed in units of
/// the level spacing.
pub fn mean_level_spacing(norm: &SpectralNormalization, dim: usize) -> f64 {
    debug_assert!(dim >= 2, "a level spacing needs at least two levels");
    mean_level_spacing_for(norm.sigma, dim)
}

/// Samples `H` from the ensemble selected by `spec.class`.
///
/// Orthogonal: real symmetric, off-diagonal variance `sigma²`, diagonal
/// variance `2 sigma²`. Unitary: hermitian, off-diagonal real and imaginary
/// parts each of variance `sigma²/2`, real diagonal of variance `sigma²`.
/// Entries are drawn row by row over the upper triangle.
pub fn sample_h(
    spec: &EnsembleSpec,
    norm: &SpectralNormalization,
    stream: &mut RngStream,
) -> Result<Mat<c64>> {
    spec.validate()?;
    if !(norm.sigma > 0.0 && norm.sigma.is_finite()) {
        return Err(Error::param("sigma must be positive and finite"));
    }
    let m = spec.dim;
    let sigma = norm.sigma;
    let mut h = Mat::<c64>::zeros(m, m);
    match spec.class {
        SymmetryClass::Orthogonal => {
            let diag = sigma * std::f64::consts::SQRT_2;
            for i in 0..m {
                h[(i, i)] = c64::new(diag * stream.normal(), 0.0);
                for j in i + 1..m {
                    let x = sigma * stream.normal();
                    h[(i, j)] = c64::new(x, 0.0);
                    h[(j, i)] = c64::new(x, 0.0);
                }
            }
        }
        SymmetryClass::Unitary => {
            let off = sigma * std::f64::consts::FRAC_1_SQRT_2;
            for i in 0..m {
                h[(i, i)] = c64::new(sigma * stream.normal(), 0.0);
                for j in i + 1..m {
                    let re = off * stream.normal();
                    let im = off * stream.normal();
                    h[(i, j)] = c64::new(re, im);
                    h[(j, i)] = c64::new(re, -im);
                }
            }
        }
    }
    Ok(h)
}

/// Diagonals of `VV†` and `Γ`; open channels occupy basis indices `0..N`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelCoupling {
    v: Vec<f64>,
    gamma: Vec<f64>,
    t: f64,
    channels: usize,
}

impl ChannelCoupling {
    pub fn v(&self) -> &[f64] {
        &self.v
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    /// Barrier transmission probability.
    pub fn transmission(&self) -> f64 {
        self.t
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn gamma_open(&self) -> f64 {
        self.gamma.first().copied().unwrap_or(0.0)
    }

    pub fn v_open(&self) -> f64 {
        self.v.first().copied().unwrap_or(0.0)
    }

    /// Same channels and transmission with every `γ_m` multiplied by
    /// `factor`. Only meaningful as a negative control for the quantization
    /// oracle.
    pub fn with_scaled_gamma(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.gamma.iter_mut().for_each(|g| *g *= factor);
        out
    }
}

/// `γ = [√T/(1+√(1−T))]·ΔM/π`.
pub fn gamma_open(t: f64, delta0: f64, dim: usize) -> f64 {
    t.sqrt() / (1.0 + (1.0 - t).sqrt()) * delta0 * dim as f64 / PI
}

pub fn build_coupling(dim: usize, channels: usize, t: f64, delta0: f64) -> Result<ChannelCoupling> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::param(format!("transmission T = {t} outside [0, 1]")));
    }
    if channels == 0 || channels > dim {
        return Err(Error::param(format!(
            "channel count N = {channels} must satisfy 1 <= N <= M = {dim}"
        )));
    }
    if !(delta0 > 0.0 && delta0.is_finite()) {
        return Err(Error::param("level spacing must be positive and finite"));
    }
    let v_open = delta0 * dim as f64 / PI;
    let g_open = gamma_open(t, delta0, dim);
    let v = (0..dim).map(|m| if m < channels { v_open } else { 0.0 }).collect();
    let gamma = (0..dim).map(|m| if m < channels { g_open } else { 0.0 }).collect();
    Ok(ChannelCoupling {
        v,
        gamma,
        t,
        channels,
    })
}
