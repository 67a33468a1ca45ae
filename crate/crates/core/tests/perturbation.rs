mod common;

use common::{correlation, instance, SEED};
use ptbreak::ensembles::{SpectralNormalization, SymmetryClass};
use ptbreak::experiments::{scale_statistics, PerturbConfig};
use ptbreak::perturbation::{quasi_degenerate_mu, quasi_degenerate_mus, scales, ParityDecomposition};

fn mean_quasi_degenerate(class: SymmetryClass, dim: usize, channels: usize, t: f64, realizations: u64) -> (f64, f64) {
    let mut acc = Vec::new();
    let mut gamma_over_m = 0.0;
    for r in 0..realizations {
        let inst = instance(class, dim, channels, t, SEED, r);
        gamma_over_m = inst.coupling.gamma_open() / dim as f64;
        acc.extend(quasi_degenerate_mus(inst.h.as_ref(), &inst.coupling).unwrap().into_iter().map(|(_, mu)| mu));
    }
    (acc.iter().sum::<f64>() / acc.len() as f64, gamma_over_m)
}

#[test]
fn orthogonal_quasi_degenerate_scale_is_mu_t() {
    let (dim, channels, t) = (160, 20, 0.01);
    let (mean, gamma_over_m) = mean_quasi_degenerate(SymmetryClass::Orthogonal, dim, channels, t, 20);
    // real eigenvectors: E[ψ_m²] = 1/M exactly
    let expected = channels as f64 * gamma_over_m;
    assert!((mean / expected - 1.0).abs() < 0.05, "{mean} vs {expected}");
    let mu_t = scales(channels, t, SpectralNormalization::standard(dim).delta0).unwrap().mu_t;
    assert!((mean / mu_t - 1.0).abs() < 0.05, "{mean} vs μ_T = {mu_t}");
}

#[test]
fn unitary_quasi_degenerate_scale_is_smaller_by_root_n() {
    for channels in [16usize, 64] {
        let dim = 8 * channels;
        let (orth, _) = mean_quasi_degenerate(SymmetryClass::Orthogonal, dim, channels, 0.01, 10);
        let (unit, _) = mean_quasi_degenerate(SymmetryClass::Unitary, dim, channels, 0.01, 10);
        let root_n = (channels as f64).sqrt();
        let ratio = orth / unit;
        assert!(ratio > root_n / 2.0 && ratio < 2.0 * root_n, "N = {channels}: ratio {ratio}");
    }
}

fn crossing_statistics(realizations: u64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let (dim, channels) = (200, 20);
    let norm = SpectralNormalization::standard(dim);
    let (mut mu_c, mut exact, mut perturbative) = (Vec::new(), Vec::new(), Vec::new());
    for r in 0..realizations {
        let inst = instance(SymmetryClass::Orthogonal, dim, channels, 1.0, SEED, r);
        let parity = ParityDecomposition::new(inst.h.as_ref(), &inst.coupling).unwrap();
        for pair in parity.crossing_pairs(norm.window_half_width) {
            mu_c.push(pair.mu_critical);
            let p = parity.overlap_perturbative(pair.plus_index, pair.minus_index);
            if !p.flagged {
                exact.push(pair.overlap.norm());
                perturbative.push(p.value.norm());
            }
        }
    }
    (mu_c, exact, perturbative)
}

#[test]
fn crossing_pairs_set_the_strong_coupling_scale() {
    let (mut mu_c, exact, _) = crossing_statistics(20);
    mu_c.sort_by(f64::total_cmp);
    let median = mu_c[mu_c.len() / 2];
    let mu0 = scales(20, 1.0, SpectralNormalization::standard(200).delta0).unwrap().mu0;
    assert!(median > mu0 / 2.0 && median < 2.0 * mu0, "median {median} vs μ₀ {mu0}");
    let mean_sq = exact.iter().map(|o| o * o).sum::<f64>() / exact.len() as f64;
    assert!(mean_sq * 20.0 > 0.5 && mean_sq * 20.0 < 2.0, "N⟨|o|²⟩ = {}", mean_sq * 20.0);
}

#[test]
fn perturbative_overlap_has_the_right_magnitude() {
    let (_, exact, perturbative) = crossing_statistics(20);
    let ms = |v: &[f64]| v.iter().map(|o| o * o).sum::<f64>() / v.len() as f64;
    let ratio = ms(&perturbative) / ms(&exact);
    assert!(ratio > 0.5 && ratio < 2.0, "mean-square ratio {ratio}");
}

#[test]
#[ignore = "pair-by-pair correlation of the first-order overlap with the exact one is weak; see README"]
fn perturbative_overlap_correlates_with_exact() {
    let (_, exact, perturbative) = crossing_statistics(20);
    let rho = correlation(&exact, &perturbative);
    assert!(rho > 0.5, "correlation {rho}");
}

#[test]
fn batch_and_single_level_evaluations_agree() {
    let inst = instance(SymmetryClass::Unitary, 40, 6, 0.3, SEED, 8);
    let batch = quasi_degenerate_mus(inst.h.as_ref(), &inst.coupling).unwrap();
    for k in [0, 17, 39] {
        let single = quasi_degenerate_mu(inst.h.as_ref(), &inst.coupling, k).unwrap();
        assert!((single - batch[k].1).abs() < 1e-12 * single.max(1e-300));
    }
}

#[test]
fn no_barrier_coupling_means_no_mixing() {
    let inst = instance(SymmetryClass::Orthogonal, 60, 6, 0.0, SEED, 1);
    let parity = ParityDecomposition::new(inst.h.as_ref(), &inst.coupling).unwrap();
    for k in 0..10 {
        for l in 0..10 {
            if k != l {
                assert_eq!(parity.overlap_perturbative(k, l).value.norm(), 0.0);
            }
        }
    }
    assert!(parity.crossing_pairs(1.0).iter().all(|p| p.mu_critical == 0.0));
}

#[test]
fn scale_report_rows_track_analytic_scales() {
    let rows = scale_statistics(&PerturbConfig {
        classes: vec![SymmetryClass::Orthogonal, SymmetryClass::Unitary],
        dim: 160,
        channels: 20,
        t_values: vec![0.01, 1.0],
        realizations: 10,
        seed: SEED,
        window_fraction: 0.25,
    })
    .unwrap();
    assert_eq!(rows.len(), 4);
    let orth_weak = &rows[0];
    let unit_weak = &rows[2];
    assert!((orth_weak.quasi_degenerate_over_mu_t - 1.0).abs() < 0.2);
    assert!(unit_weak.quasi_degenerate_over_mu_t_prime > 0.5 && unit_weak.quasi_degenerate_over_mu_t_prime < 2.0);
    let orth_strong = &rows[1];
    assert!(orth_strong.median_mu_critical_over_mu0 > 0.5 && orth_strong.median_mu_critical_over_mu0 < 2.0);
    assert!(orth_strong.overlap_sq_times_n > 0.5 && orth_strong.overlap_sq_times_n < 2.0);
}
