mod common;

use common::{hermitian_eigenvalues, instance, SEED};
use faer::{c64, Mat};
use ptbreak::ensembles::build_coupling;
use ptbreak::ensembles::{EnsembleSpec, SymmetryClass};
use ptbreak::experiments::{
    run_sweep, trace_levels, EventKind, LevelFlowTrace, SweepConfig, TraceConfig, Waypoint,
};
use ptbreak::hamiltonian::SymmetryVariant;
use ptbreak::spectral::{FractionEstimate, DEFAULT_TOLERANCE_REL};
use std::sync::OnceLock;

fn cell(class: SymmetryClass, t: f64, mu_over_mu0: f64, realizations: usize) -> FractionEstimate {
    let config = SweepConfig {
        ensemble: EnsembleSpec::new(class, 200, 20, SEED).unwrap(),
        variant: SymmetryVariant::PT,
        mu_grid: vec![mu_over_mu0],
        t_grid: vec![t],
        realizations,
        window_fraction: 0.25,
        tolerance_rel: DEFAULT_TOLERANCE_REL,
    };
    run_sweep(&config).unwrap().cells[0].estimate.unwrap()
}

#[test]
fn hermitian_column_is_real_at_every_transmission() {
    let mut config = SweepConfig::desk(SymmetryClass::Unitary, SymmetryVariant::PT, SEED);
    config.mu_grid = vec![0.0];
    config.realizations = 10;
    let result = run_sweep(&config).unwrap();
    assert_eq!(result.cells.len(), 16);
    for c in &result.cells {
        let e = c.estimate.unwrap();
        assert_eq!(e.f, 0.0, "T = {}", c.t);
        assert_eq!(e.n_realizations, 10);
    }
}

#[test]
fn deep_broken_phase_is_mostly_complex() {
    let e = cell(SymmetryClass::Orthogonal, 1.0, 4.0, 100);
    assert!(e.f > 0.5, "f = {}", e.f);
}

#[test]
fn unitary_class_breaks_earlier_at_weak_coupling() {
    let t: f64 = 0.05;
    // μ = 0.5 μ_T' = 0.5 √T μ₀
    let x = 0.5 * t.sqrt();
    let orth = cell(SymmetryClass::Orthogonal, t, x, 100);
    let unit = cell(SymmetryClass::Unitary, t, x, 100);
    let combined = (orth.stderr.powi(2) + unit.stderr.powi(2)).sqrt();
    assert!(unit.f - orth.f > 3.0 * combined, "unitary {unit:?} vs orthogonal {orth:?}");
}

fn stage_one(class: SymmetryClass, dim: usize, channels: usize, seed: u64) -> TraceConfig {
    TraceConfig {
        ensemble: EnsembleSpec::new(class, dim, channels, seed).unwrap(),
        variant: SymmetryVariant::PT,
        path: vec![Waypoint { t: 0.0, mu: 0.0 }, Waypoint { t: 1.0, mu: 0.0 }],
        steps: 50,
        tolerance_rel: DEFAULT_TOLERANCE_REL,
    }
}

fn two_stage_orthogonal() -> &'static LevelFlowTrace {
    static TRACE: OnceLock<LevelFlowTrace> = OnceLock::new();
    TRACE.get_or_init(|| {
        let config = TraceConfig::two_stage(SymmetryClass::Orthogonal, SymmetryVariant::PT, SEED);
        trace_levels(&config).unwrap()
    })
}

/// Smallest distance between neighbouring levels inside the central quarter
/// of the band, over steps with `T ≥ 0.25`. Below that every level is still
/// close to the exact doublet it forms at `T = 0` in either class.
fn min_gap(trace: &LevelFlowTrace) -> f64 {
    let w = 0.5;
    let mut out = f64::INFINITY;
    for step in (0..trace.points.len()).filter(|&k| trace.points[k].t >= 0.25) {
        let mut re: Vec<f64> = trace.trajectories.iter().map(|tr| tr[step].re).filter(|e| e.abs() <= w).collect();
        re.sort_by(f64::total_cmp);
        for pair in re.windows(2) {
            out = out.min(pair[1] - pair[0]);
        }
    }
    out / trace.delta0
}

#[test]
fn orthogonal_stage_one_has_two_crossing_families() {
    let trace = two_stage_orthogonal();
    let stage = trace.stage_range(0);
    for level in 0..trace.n_levels() {
        for step in stage.clone() {
            assert!(trace.is_real(level, step), "level {level} complex at step {step}");
        }
    }
    let disp = trace.stage_displacement(0);
    let rising: Vec<usize> = (0..disp.len()).filter(|&i| disp[i] > 0.0).collect();
    let falling: Vec<usize> = (0..disp.len()).filter(|&i| disp[i] < 0.0).collect();
    assert!(rising.len() > disp.len() / 3 && falling.len() > disp.len() / 3);

    // a rising and a falling level swap order somewhere along the stage
    let (first, last) = (stage.start, stage.end - 1);
    let crossings = rising
        .iter()
        .flat_map(|&a| falling.iter().map(move |&b| (a, b)))
        .filter(|&(a, b)| {
            let before = trace.trajectories[a][first].re - trace.trajectories[b][first].re;
            let after = trace.trajectories[a][last].re - trace.trajectories[b][last].re;
            before < 0.0 && after > 0.0
        })
        .count();
    assert!(crossings > 0);
}

#[test]
fn unitary_stage_one_repels_more_than_orthogonal() {
    let seeds = 20;
    let mut wins = 0;
    let mut ratios = Vec::new();
    for s in 0..seeds {
        let seed = SEED + s;
        let o = min_gap(&trace_levels(&stage_one(SymmetryClass::Orthogonal, 40, 4, seed)).unwrap());
        let u = min_gap(&trace_levels(&stage_one(SymmetryClass::Unitary, 40, 4, seed)).unwrap());
        if u > o {
            wins += 1;
        }
        ratios.push(u / o);
    }
    ratios.sort_by(f64::total_cmp);
    assert!(wins >= 15, "unitary gap larger in {wins}/{seeds} seeds; ratios {ratios:?}");
}

#[test]
fn first_coalescences_join_opposite_families() {
    let trace = two_stage_orthogonal();
    let disp = trace.stage_displacement(0);
    let mut went_complex = vec![false; trace.n_levels()];
    let mut checked = 0;
    for e in &trace.events {
        if e.kind != EventKind::Coalescence {
            continue;
        }
        let fresh = !went_complex[e.level_a] && !went_complex[e.level_b];
        went_complex[e.level_a] = true;
        went_complex[e.level_b] = true;
        if !fresh {
            continue;
        }
        checked += 1;
        assert!(
            disp[e.level_a].signum() != disp[e.level_b].signum(),
            "levels {} and {} rise together in stage one",
            e.level_a,
            e.level_b
        );
    }
    assert!(checked > 0, "no coalescences along the second stage");
}

#[test]
fn level_census_is_conserved() {
    let trace = two_stage_orthogonal();
    assert_eq!(trace.n_levels(), 2 * trace.config.ensemble.dim);
    assert!(trace.trajectories.iter().all(|tr| tr.len() == trace.points.len()));
    for e in &trace.events {
        assert!(e.level_a < e.level_b);
    }
    let complex_at = |step: usize| (0..trace.n_levels()).filter(|&l| !trace.is_real(l, step)).count() as i64;
    for step in 1..trace.points.len() {
        let (lo, hi) = (trace.points[step - 1].s, trace.points[step].s);
        let net: i64 = trace
            .events
            .iter()
            .filter(|e| e.parameter > lo && e.parameter <= hi)
            .map(|e| match e.kind {
                EventKind::Coalescence => 2,
                EventKind::Decoalescence => -2,
            })
            .sum();
        assert_eq!(complex_at(step) - complex_at(step - 1), net, "step {step}");
    }
}

#[test]
fn orthogonal_stage_one_levels_stay_in_their_parity_family() {
    // at μ = 0 the "+" and "-" levels are exactly the spectra of H ± Γ
    let trace = two_stage_orthogonal();
    let spec = &trace.config.ensemble;
    let inst = instance(spec.class, spec.dim, spec.channels, 1.0, spec.seed, 0);
    let disp = trace.stage_displacement(0);
    let shifted = |gamma: &[f64], sign: f64| {
        hermitian_eigenvalues(&Mat::<c64>::from_fn(spec.dim, spec.dim, |i, j| {
            inst.h[(i, j)] + if i == j { c64::new(sign * gamma[i], 0.0) } else { c64::new(0.0, 0.0) }
        }))
    };
    for step in trace.stage_range(0).skip(1) {
        let coupling = build_coupling(spec.dim, spec.channels, trace.points[step].t, inst.delta).unwrap();
        let plus = shifted(coupling.gamma(), 1.0);
        let minus = shifted(coupling.gamma(), -1.0);
        let dist = |set: &[f64], e: f64| set.iter().map(|x| (x - e).abs()).fold(f64::INFINITY, f64::min);
        for level in 0..trace.n_levels() {
            let e = trace.trajectories[level][step].re;
            let own = if disp[level] > 0.0 { &plus } else { &minus };
            assert!(dist(own, e) < 1e-9, "level {level} left its family at step {step}");
        }
    }
}
