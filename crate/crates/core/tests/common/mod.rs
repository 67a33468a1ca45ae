#![allow(dead_code)]

use faer::{c64, Mat};
use ptbreak::ensembles::{
    build_coupling, sample_h, ChannelCoupling, EnsembleSpec, SpectralNormalization, SymmetryClass,
};
use ptbreak::rng::RngStream;

pub const SEED: u64 = 20_240_607;

pub struct Instance {
    pub h: Mat<c64>,
    pub coupling: ChannelCoupling,
    pub delta: f64,
}

pub fn spec(class: SymmetryClass, dim: usize, channels: usize, seed: u64) -> EnsembleSpec {
    EnsembleSpec::new(class, dim, channels, seed).unwrap()
}

/// `H` for realization `index` plus the coupling at transmission `t`.
pub fn instance(class: SymmetryClass, dim: usize, channels: usize, t: f64, seed: u64, index: u64) -> Instance {
    let norm = SpectralNormalization::standard(dim);
    let mut stream = RngStream::child(seed, index);
    let h = sample_h(&spec(class, dim, channels, seed), &norm, &mut stream).unwrap();
    let coupling = build_coupling(dim, channels, t, norm.delta0).unwrap();
    Instance { h, coupling, delta: norm.delta0 }
}

pub fn hermitian_eigenvalues(h: &Mat<c64>) -> Vec<f64> {
    let mut ev: Vec<f64> = h.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn max_abs_diff(a: &Mat<c64>, b: &Mat<c64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut out = 0.0f64;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            out = out.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    out
}

pub fn max_abs(a: &Mat<c64>) -> f64 {
    max_abs_diff(a, &Mat::zeros(a.nrows(), a.ncols()))
}

/// Parity-basis form written out block by block from `H`, `Γ` and `μ`:
/// `[[Re H + Γ, -i Im H + iμ], [-i Im H + iμ, Re H - Γ]]` for PT, and
/// `[[H + Γ, iμ], [iμ, H - Γ]]` for PTT'.
pub fn direct_parity_form(h: &Mat<c64>, gamma: &[f64], mu: f64, pt_variant: bool) -> Mat<c64> {
    let m = h.nrows();
    let i = c64::new(0.0, 1.0);
    Mat::from_fn(2 * m, 2 * m, |r, c| {
        let (p, q) = (r % m, c % m);
        let x = h[(p, q)];
        let g = if p == q { gamma[p] } else { 0.0 };
        let imu = if p == q { i * mu } else { c64::new(0.0, 0.0) };
        let diag_part = if pt_variant { c64::new(x.re, 0.0) } else { x };
        let off_part = if pt_variant { -i * x.im } else { c64::new(0.0, 0.0) };
        match (r / m, c / m) {
            (0, 0) => diag_part + g,
            (1, 1) => diag_part - g,
            _ => off_part + imu,
        }
    })
}

/// Pearson correlation coefficient.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    sxy / (sxx * syy).sqrt()
}
