use faer::{c64, Mat};
use serde::{Deserialize, Serialize};

use crate::ensembles::{build_coupling, gamma_open, sample_h, EnsembleSpec, SpectralNormalization, SymmetryClass};
use crate::error::{Error, Result};
use crate::hamiltonian::{build_effective, SymmetryVariant};
use crate::perturbation::{hermitian_eigen, scales};
use crate::rng::RngStream;
use crate::spectral::{spectrum_of, DEFAULT_TOLERANCE_REL};

use super::assignment::min_cost_assignment;

/// Costs of two matchings closer than this are treated as a tie.
pub const AMBIGUITY_COST: f64 = 1e-12;
/// Maximum number of step halvings, both for assignment ties and for
/// localizing coalescences.
pub const MAX_REFINEMENTS: usize = 6;
/// A step is also halved when some level lands farther than this many `Δ`
/// from its extrapolated position.
pub const PREDICTION_SLACK: f64 = 0.1;
/// Between hermitian points a step is halved when some level keeps less
/// than this weight in the eigenspace it is matched to.
pub const OVERLAP_FLOOR: f64 = 0.5;

/// A corner of the parameter path; `mu` in units of `μ₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub ensemble: EnsembleSpec,
    pub variant: SymmetryVariant,
    pub path: Vec<Waypoint>,
    /// Steps per path segment.
    pub steps: usize,
    /// Reality tolerance in units of `Δ`.
    #[serde(default = "default_tolerance")]
    pub tolerance_rel: f64,
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE_REL
}

impl TraceConfig {
    /// `M = 100`, `N = 10`; `T: 0 → 1` at `μ = 0`, then `μ: 0 → 4μ₀` at `T = 1`.
    pub fn two_stage(class: SymmetryClass, variant: SymmetryVariant, seed: u64) -> Self {
        Self {
            ensemble: EnsembleSpec { class, dim: 100, channels: 10, seed },
            variant,
            path: vec![
                Waypoint { t: 0.0, mu: 0.0 },
                Waypoint { t: 1.0, mu: 0.0 },
                Waypoint { t: 1.0, mu: 4.0 },
            ],
            steps: 50,
            tolerance_rel: default_tolerance(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.ensemble.validate()?;
        if self.path.len() < 2 {
            return Err(Error::Config(format!(
                "path needs at least two waypoints, got {}",
                self.path.len()
            )));
        }
        if let Some(w) = self
            .path
            .iter()
            .find(|w| !(0.0..=1.0).contains(&w.t) || !(w.mu >= 0.0 && w.mu.is_finite()))
        {
            return Err(Error::Config(format!(
                "waypoint (T = {}, μ/μ₀ = {}) outside T ∈ [0, 1], μ ≥ 0",
                w.t, w.mu
            )));
        }
        if self.steps < 2 {
            return Err(Error::Config("at least two steps per path segment".into()));
        }
        if !(self.tolerance_rel > 0.0 && self.tolerance_rel.is_finite()) {
            return Err(Error::Config("tolerance_rel must be positive".into()));
        }
        Ok(())
    }
}

/// Location on the path. `s` runs from 0 to the number of segments; segment
/// `i` covers `[i, i + 1]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathPoint {
    pub s: f64,
    pub stage: usize,
    pub t: f64,
    pub mu_over_mu0: f64,
    pub mu: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    /// Two real levels merge and leave the real axis as a conjugate pair.
    Coalescence,
    /// A conjugate pair returns to the real axis.
    Decoalescence,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelEvent {
    pub kind: EventKind,
    /// Path coordinate `s` of the first point past the event.
    pub parameter: f64,
    pub t: f64,
    pub mu_over_mu0: f64,
    pub level_a: usize,
    pub level_b: usize,
    /// Real part of the pair at `parameter`.
    pub energy: f64,
    /// Gap between the two real levels at the last point before the event.
    pub precursor_gap: f64,
    /// Whether that gap fell below `Δ/100`.
    pub resolved: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelFlowTrace {
    pub config: TraceConfig,
    pub delta0: f64,
    pub mu0: f64,
    pub tolerance: f64,
    pub points: Vec<PathPoint>,
    /// `trajectories[level][step]`.
    pub trajectories: Vec<Vec<c64>>,
    pub events: Vec<LevelEvent>,
    /// Assignment ties that forced a smaller step.
    pub ambiguous_steps: usize,
    /// Steps halved because a match was poor: the extrapolation missed by
    /// more than [`PREDICTION_SLACK`]`·Δ`, or an eigenvector overlap fell
    /// below [`OVERLAP_FLOOR`].
    pub refined_steps: usize,
    /// Ties still present after the last permitted halving.
    pub unresolved_ambiguities: usize,
}

impl LevelFlowTrace {
    pub fn n_levels(&self) -> usize {
        self.trajectories.len()
    }

    /// Steps belonging to segment `stage`, including its starting corner.
    pub fn stage_range(&self, stage: usize) -> std::ops::Range<usize> {
        let n = self.config.steps;
        stage * n..(stage + 1) * n + 1
    }

    /// Change of `Re E` of every level across segment `stage`; its sign
    /// separates the rising and falling families.
    pub fn stage_displacement(&self, stage: usize) -> Vec<f64> {
        let r = self.stage_range(stage);
        self.trajectories
            .iter()
            .map(|tr| tr[r.end - 1].re - tr[r.start].re)
            .collect()
    }

    pub fn is_real(&self, level: usize, step: usize) -> bool {
        self.trajectories[level][step].im.abs() <= self.tolerance
    }
}

struct Context<'a> {
    config: &'a TraceConfig,
    h: faer::Mat<c64>,
    delta0: f64,
    mu0: f64,
    tolerance: f64,
}

impl Context<'_> {
    fn point(&self, s: f64) -> PathPoint {
        let last = self.config.path.len() - 2;
        let stage = (s.floor() as usize).min(last);
        let w = s - stage as f64;
        let (a, b) = (self.config.path[stage], self.config.path[stage + 1]);
        let t = (a.t + w * (b.t - a.t)).clamp(0.0, 1.0);
        let x = a.mu + w * (b.mu - a.mu);
        PathPoint { s, stage, t, mu_over_mu0: x, mu: x * self.mu0 }
    }

    /// Coordinate in which the effective Hamiltonian is linear along the
    /// segment containing `s`: `γ(T)` where `T` varies, otherwise `μ`.
    /// Extrapolating in `T` itself would run into the square-root behavior
    /// of `γ` at both ends of `[0, 1]`.
    fn coordinate(&self, segment: usize, s: f64) -> f64 {
        let (a, b) = (self.config.path[segment], self.config.path[segment + 1]);
        let p = self.point(s);
        if a.t != b.t {
            gamma_open(p.t, self.delta0, self.config.ensemble.dim)
        } else {
            p.mu
        }
    }

    fn eigenvalues(&self, s: f64) -> Result<Vec<c64>> {
        Ok(self.sample(s)?.values)
    }

    fn sample(&self, s: f64) -> Result<Sample> {
        let p = self.point(s);
        let spec = &self.config.ensemble;
        let coupling = build_coupling(spec.dim, spec.channels, p.t, self.delta0)?;
        let heff = build_effective(self.h.as_ref(), &coupling, p.mu, self.config.variant)?;
        let mut values = spectrum_of(&heff)?.eigenvalues().to_vec();
        if p.mu != 0.0 {
            return Ok(Sample { values, vectors: None });
        }
        // hermitian point: both lists are ascending, so columns line up
        let (_, u) = hermitian_eigen(heff.matrix())?;
        values.sort_by(|a, b| a.re.total_cmp(&b.re));
        Ok(Sample { values, vectors: Some(u) })
    }
}

/// Spectrum at one path point. Hermitian points also carry orthonormal
/// eigenvectors, column `i` belonging to `values[i]`.
#[derive(Clone)]
struct Sample {
    values: Vec<c64>,
    vectors: Option<Mat<c64>>,
}

impl Sample {
    fn permuted(self, order: &[usize]) -> Sample {
        Sample {
            values: order.iter().map(|&j| self.values[j]).collect(),
            vectors: self
                .vectors
                .map(|u| Mat::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])])),
        }
    }
}

#[derive(Clone)]
struct History {
    prev2: Option<(f64, Vec<c64>)>,
    s: f64,
    values: Vec<c64>,
    vectors: Option<Mat<c64>>,
}

impl History {
    /// Linear extrapolation to `s_new` in the coordinate `q`.
    fn predict(&self, s_new: f64, q: impl Fn(f64) -> f64) -> Vec<c64> {
        // velocity is only meaningful inside one straight segment
        let segment_start = self.s.floor();
        match &self.prev2 {
            Some((s2, v2)) if *s2 >= segment_start => {
                let (q0, q1, q2) = (q(s_new), q(self.s), q(*s2));
                let k = if q1 != q2 { (q0 - q1) / (q1 - q2) } else { 0.0 };
                self.values.iter().zip(v2).map(|(a, b)| a + (a - b) * k).collect()
            }
            _ => self.values.clone(),
        }
    }

    fn advanced(&self, s: f64, sample: Sample) -> History {
        History {
            prev2: Some((self.s, self.values.clone())),
            s,
            values: sample.values,
            vectors: sample.vectors,
        }
    }
}

/// `1 - Σ|⟨u_k|v_j⟩|²` over the sources `k` degenerate with `i`: the weight of
/// target `j` outside the eigenspace of source `i`. Levels of different
/// symmetry sectors have orthogonal eigenvectors, so exact crossings keep
/// their labels however coarse the step.
fn overlap_cost(values: &[c64], u: &Mat<c64>, v: &Mat<c64>) -> Vec<f64> {
    let n = values.len();
    let g = u.adjoint() * v;
    let mut cost = vec![0.0; n * n];
    for i in 0..n {
        let cluster: Vec<usize> = (0..n).filter(|&k| same(values[k], values[i])).collect();
        for j in 0..n {
            let w: f64 = cluster.iter().map(|&k| g[(k, j)].norm_sqr()).sum();
            cost[i * n + j] = (1.0 - w).max(0.0);
        }
    }
    cost
}

fn same(a: c64, b: c64) -> bool {
    (a - b).norm() <= AMBIGUITY_COST * (1.0 + a.norm())
}

struct Tracker<'a> {
    ctx: Context<'a>,
    events: Vec<LevelEvent>,
    ambiguous_steps: usize,
    refined_steps: usize,
    unresolved: usize,
}

impl Tracker<'_> {
    /// Orders `new` (the spectrum at `s_new`) by continuation from `hist`:
    /// by eigenvector overlap between hermitian points, otherwise by distance
    /// to the extrapolated values.
    fn advance(&mut self, hist: &History, s_new: f64, new: Sample, depth: usize) -> Result<Sample> {
        let n = hist.values.len();
        let (cost, reference, limit) = match (&hist.vectors, &new.vectors) {
            (Some(u), Some(v)) => (overlap_cost(&hist.values, u, v), hist.values.clone(), 1.0 - OVERLAP_FLOOR),
            _ => {
                let segment = hist.s.floor() as usize;
                let pred = hist.predict(s_new, |x| self.ctx.coordinate(segment, x));
                let mut cost = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        cost[i * n + j] = (pred[i] - new.values[j]).norm();
                    }
                }
                (cost, pred, PREDICTION_SLACK * self.ctx.delta0)
            }
        };
        let assign = min_cost_assignment(&cost, n);
        let tie = has_tie(&cost, &assign, &reference, &new.values);
        let miss = assign
            .iter()
            .enumerate()
            .map(|(i, &j)| cost[i * n + j])
            .fold(0.0, f64::max);
        let poor = miss > limit;
        if tie || poor {
            if depth < MAX_REFINEMENTS {
                if tie {
                    self.ambiguous_steps += 1;
                } else {
                    self.refined_steps += 1;
                }
                let s_mid = 0.5 * (hist.s + s_new);
                let mid_sample = self.ctx.sample(s_mid)?;
                let mid = self.advance(hist, s_mid, mid_sample, depth + 1)?;
                let hist_mid = hist.advanced(s_mid, mid);
                return self.advance(&hist_mid, s_new, new, depth + 1);
            }
            if tie {
                self.unresolved += 1;
            }
        }
        let ordered = new.permuted(&assign);
        self.record_events(hist, s_new, &ordered.values)?;
        Ok(ordered)
    }

    fn record_events(&mut self, hist: &History, s_new: f64, new: &[c64]) -> Result<()> {
        let tol = self.ctx.tolerance;
        let real = |z: c64| z.im.abs() <= tol;
        let old = &hist.values;
        let born: Vec<usize> = (0..new.len()).filter(|&i| real(old[i]) && !real(new[i])).collect();
        let died: Vec<usize> = (0..new.len()).filter(|&i| !real(old[i]) && real(new[i])).collect();

        for (a, b) in conjugate_partners(&born, new) {
            let ev = self.localize_coalescence(hist, s_new, old[a].re, old[b].re, new[a])?;
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.events.push(LevelEvent { level_a: lo, level_b: hi, ..ev });
        }
        for (a, b) in conjugate_partners(&died, old) {
            let p = self.ctx.point(s_new);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            self.events.push(LevelEvent {
                kind: EventKind::Decoalescence,
                parameter: s_new,
                t: p.t,
                mu_over_mu0: p.mu_over_mu0,
                level_a: lo,
                level_b: hi,
                energy: 0.5 * (new[a].re + new[b].re),
                precursor_gap: (new[a].re - new[b].re).abs(),
                resolved: true,
            });
        }
        Ok(())
    }

    /// Bisects between the last real point and the first complex point.
    fn localize_coalescence(
        &self,
        hist: &History,
        s_new: f64,
        ea: f64,
        eb: f64,
        pair: c64,
    ) -> Result<LevelEvent> {
        let tol = self.ctx.tolerance;
        let (mut lo, mut hi) = (hist.s, s_new);
        let (c_lo, c_hi) = (0.5 * (ea + eb), pair.re);
        let mut gap = (ea - eb).abs();
        let mut energy = pair.re;
        for _ in 0..MAX_REFINEMENTS {
            if gap < self.ctx.delta0 / 100.0 {
                break;
            }
            let mid = 0.5 * (lo + hi);
            let center = c_lo + (c_hi - c_lo) * (mid - hist.s) / (s_new - hist.s);
            let mut vals = self.ctx.eigenvalues(mid)?;
            vals.sort_by(|x, y| (x - center).norm().total_cmp(&(y - center).norm()));
            let (z1, z2) = (vals[0], vals[1]);
            let r1 = z1.im.abs() <= tol;
            let r2 = z2.im.abs() <= tol;
            if r1 && r2 {
                lo = mid;
                gap = (z1.re - z2.re).abs();
            } else if !r1 && !r2 && same(z1, z2.conj()) {
                hi = mid;
                energy = z1.re;
            } else {
                break;
            }
        }
        let p = self.ctx.point(hi);
        Ok(LevelEvent {
            kind: EventKind::Coalescence,
            parameter: hi,
            t: p.t,
            mu_over_mu0: p.mu_over_mu0,
            level_a: 0,
            level_b: 0,
            energy,
            precursor_gap: gap,
            resolved: gap < self.ctx.delta0 / 100.0,
        })
    }
}

/// Pairs the listed levels by their values being complex conjugates,
/// nearest first.
fn conjugate_partners(levels: &[usize], values: &[c64]) -> Vec<(usize, usize)> {
    let mut upper: Vec<usize> = levels.iter().copied().filter(|&i| values[i].im > 0.0).collect();
    let mut lower: Vec<usize> = levels.iter().copied().filter(|&i| values[i].im <= 0.0).collect();
    upper.sort_unstable();
    let mut out = Vec::new();
    for a in upper {
        let best = lower
            .iter()
            .enumerate()
            .min_by(|x, y| {
                let dx = (values[a] - values[*x.1].conj()).norm();
                let dy = (values[a] - values[*y.1].conj()).norm();
                dx.total_cmp(&dy)
            })
            .map(|(k, _)| k);
        if let Some(k) = best {
            out.push((a, lower.swap_remove(k)));
        }
    }
    out
}

/// Whether swapping the targets of two rows changes the total cost by less
/// than [`AMBIGUITY_COST`]. Swaps between indistinguishable histories, or
/// between targets that are equal or mutually conjugate, are labeling
/// conventions and do not count.
fn has_tie(cost: &[f64], assign: &[usize], pred: &[c64], new: &[c64]) -> bool {
    let n = assign.len();
    for i in 0..n {
        for k in i + 1..n {
            let (j, l) = (assign[i], assign[k]);
            let here = cost[i * n + j] + cost[k * n + l];
            let swapped = cost[i * n + l] + cost[k * n + j];
            if (swapped - here).abs() > AMBIGUITY_COST {
                continue;
            }
            let conventional = same(pred[i], pred[k])
                || same(pred[i], pred[k].conj())
                || same(new[j], new[l])
                || same(new[j], new[l].conj());
            if !conventional {
                return true;
            }
        }
    }
    false
}

/// Follows every eigenvalue of the effective Hamiltonian along the path.
///
/// `H` is drawn from `child(seed, 0)`. Consecutive spectra are matched by a
/// minimum-cost assignment: between hermitian points (`μ = 0`) the cost is the
/// eigenvector mismatch, elsewhere the distance to a linear extrapolation of
/// the previous two points. Either lets real levels pass through each other
/// instead of being sorted apart. Ties and poor matches halve the step.
pub fn trace_levels(config: &TraceConfig) -> Result<LevelFlowTrace> {
    crate::sequential_kernels();
    config.validate()?;
    let spec = &config.ensemble;
    let norm = SpectralNormalization::standard(spec.dim);
    let delta0 = norm.delta0;
    let h = sample_h(spec, &norm, &mut RngStream::child(spec.seed, 0))?;
    let mu0 = scales(spec.channels, 0.0, delta0)?.mu0;
    let ctx = Context {
        config,
        h,
        delta0,
        mu0,
        tolerance: config.tolerance_rel * delta0,
    };
    let mut tracker = Tracker {
        ctx,
        events: Vec::new(),
        ambiguous_steps: 0,
        refined_steps: 0,
        unresolved: 0,
    };

    let n_stages = config.path.len() - 1;
    let first = tracker.ctx.sample(0.0)?;
    let n = first.values.len();
    let mut points = vec![tracker.ctx.point(0.0)];
    let mut trajectories: Vec<Vec<c64>> = first.values.iter().map(|&z| vec![z]).collect();
    let mut hist = History { prev2: None, s: 0.0, values: first.values, vectors: first.vectors };
    for stage in 0..n_stages {
        for k in 1..=config.steps {
            let s = stage as f64 + k as f64 / config.steps as f64;
            let new = tracker.ctx.sample(s)?;
            if new.values.len() != n {
                return Err(Error::Integrity(format!(
                    "spectrum size changed from {n} to {} at s = {s}",
                    new.values.len()
                )));
            }
            let ordered = tracker.advance(&hist, s, new, 0)?;
            for (tr, &z) in trajectories.iter_mut().zip(&ordered.values) {
                tr.push(z);
            }
            let mut p = tracker.ctx.point(s);
            p.stage = stage;
            points.push(p);
            hist = hist.advanced(s, ordered);
        }
    }
    let Tracker { ctx, events, ambiguous_steps, refined_steps, unresolved } = tracker;
    Ok(LevelFlowTrace {
        config: config.clone(),
        delta0,
        mu0,
        tolerance: ctx.tolerance,
        points,
        trajectories,
        events,
        ambiguous_steps,
        refined_steps,
        unresolved_ambiguities: unresolved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(class: SymmetryClass) -> TraceConfig {
        let mut c = TraceConfig::two_stage(class, SymmetryVariant::PT, 3);
        c.ensemble.dim = 24;
        c.ensemble.channels = 4;
        c.steps = 20;
        c
    }

    #[test]
    fn path_validation() {
        let mut c = small(SymmetryClass::Orthogonal);
        c.path.clear();
        assert!(matches!(c.validate(), Err(Error::Config(_))));
        let mut c = small(SymmetryClass::Orthogonal);
        c.path[1].t = 1.5;
        assert!(c.validate().is_err());
        let mut c = small(SymmetryClass::Orthogonal);
        c.steps = 1;
        assert!(c.validate().is_err());
    }

    #[test]
    fn one_value_per_step_for_every_level() {
        let tr = trace_levels(&small(SymmetryClass::Unitary)).unwrap();
        assert_eq!(tr.n_levels(), 48);
        assert_eq!(tr.points.len(), 41);
        assert!(tr.trajectories.iter().all(|t| t.len() == 41));
        assert_eq!(tr.stage_range(1), 20..41);
        assert_eq!(tr.points[20].stage, 0);
        assert_eq!(tr.points[21].stage, 1);
    }

    #[test]
    fn each_step_is_a_permutation_of_the_spectrum() {
        let c = small(SymmetryClass::Orthogonal);
        let tr = trace_levels(&c).unwrap();
        for step in [0, 7, 20, 33, 40] {
            let mut got: Vec<c64> = tr.trajectories.iter().map(|t| t[step]).collect();
            got.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
            let ctx_vals = {
                let spec = &c.ensemble;
                let norm = SpectralNormalization::standard(spec.dim);
                let h = sample_h(spec, &norm, &mut RngStream::child(spec.seed, 0)).unwrap();
                let p = tr.points[step];
                let coupling = build_coupling(spec.dim, spec.channels, p.t, norm.delta0).unwrap();
                let heff = build_effective(h.as_ref(), &coupling, p.mu, c.variant).unwrap();
                spectrum_of(&heff).unwrap().eigenvalues().to_vec()
            };
            assert_eq!(got, ctx_vals);
        }
    }

    #[test]
    fn pure_distance_would_forbid_crossings_but_predictor_allows_them() {
        // two straight lines crossing between samples
        let hist = History {
            prev2: Some((0.1, vec![c64::new(-1.0, 0.0), c64::new(1.0, 0.0)])),
            s: 0.2,
            values: vec![c64::new(-0.2, 0.0), c64::new(0.2, 0.0)],
            vectors: None,
        };
        let pred = hist.predict(0.3, |x| x);
        let new = [c64::new(-0.6, 0.0), c64::new(0.6, 0.0)];
        let n = 2;
        let cost: Vec<f64> = (0..4).map(|k| (pred[k / n] - new[k % n]).norm()).collect();
        assert_eq!(min_cost_assignment(&cost, n), vec![1, 0]);
        // across a segment corner the extrapolation is dropped
        let corner = History { s: 1.0, ..hist.clone() };
        assert_eq!(corner.predict(1.1, |x| x), corner.values);
        // extrapolation follows the supplied coordinate, not the step count
        let sq = hist.predict(0.3, |x| x * x);
        assert!((sq[0].re - (-0.2 + 0.8 * 5.0 / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn overlap_cost_follows_eigenvectors_and_merges_degenerate_sources() {
        let e = |k: usize| Mat::<c64>::from_fn(3, 1, |i, _| c64::new(if i == k { 1.0 } else { 0.0 }, 0.0));
        let u = Mat::<c64>::from_fn(3, 3, |i, j| e(j)[(i, 0)]);
        // targets listed in the opposite order: levels 0 and 2 crossed
        let v = Mat::<c64>::from_fn(3, 3, |i, j| e(2 - j)[(i, 0)]);
        let vals = [c64::new(-1.0, 0.0), c64::new(0.0, 0.0), c64::new(1.0, 0.0)];
        let cost = overlap_cost(&vals, &u, &v);
        assert_eq!(min_cost_assignment(&cost, 3), vec![2, 1, 0]);
        // degenerate sources 0 and 1 share their eigenspace
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let mixed = Mat::<c64>::from_fn(3, 3, |i, j| match (i, j) {
            (2, 2) => c64::new(1.0, 0.0),
            (0, 0) | (1, 0) | (0, 1) => c64::new(r, 0.0),
            (1, 1) => c64::new(-r, 0.0),
            _ => c64::new(0.0, 0.0),
        });
        let vals = [c64::new(0.0, 0.0), c64::new(0.0, 0.0), c64::new(1.0, 0.0)];
        let cost = overlap_cost(&vals, &u, &mixed);
        assert!(cost[0] < 1e-15 && cost[1] < 1e-15 && cost[8] < 1e-15);
        assert!(!has_tie(&cost, &[0, 1, 2], &vals, &vals));
    }

    #[test]
    fn conjugate_targets_are_not_ties() {
        let pred = [c64::new(0.0, 0.0), c64::new(0.1, 0.0)];
        let new = [c64::new(0.05, 0.1), c64::new(0.05, -0.1)];
        let cost: Vec<f64> = (0..4).map(|k| (pred[k / 2] - new[k % 2]).norm()).collect();
        assert!(!has_tie(&cost, &[0, 1], &pred, &new));
        let pred = [c64::new(-0.1, 0.0), c64::new(0.1, 0.0)];
        let new = [c64::new(0.0, 0.5), c64::new(0.0, -0.7)];
        let cost: Vec<f64> = (0..4).map(|k| (pred[k / 2] - new[k % 2]).norm()).collect();
        assert!(has_tie(&cost, &[0, 1], &pred, &new));
    }
}
