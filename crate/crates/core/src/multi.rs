//! Multivariate recovery: univariate solves along the axes (or a generic
//! basis), a candidate set per atom, adaptively chosen extra lines and a small
//! linear solve per atom.

use std::f64::consts::FRAC_PI_2;
use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::line::{
    assert_hypotheses, retrieve_line_detailed, LabeledProjection, LineDiagnostics, LineOptions,
};
use crate::signal::{
    distance, dot, is_collision_free, norm_sq, normalize, Atom, LineSampleSet, SparseSignal,
    StructureKernel,
};

/// Source of intensity samples along lines through the origin.
pub trait LineSampler: Sync {
    fn sample(&self, direction: &[f64], step: f64, m_max: usize) -> Result<LineSampleSet>;
}

impl LineSampler for SparseSignal {
    fn sample(&self, direction: &[f64], step: f64, m_max: usize) -> Result<LineSampleSet> {
        self.sample_line(direction, step, m_max)
    }
}

impl<S: LineSampler + ?Sized> LineSampler for &S {
    fn sample(&self, direction: &[f64], step: f64, m_max: usize) -> Result<LineSampleSet> {
        (**self).sample(direction, step, m_max)
    }
}

/// Wraps a sampler and counts lines and individual samples handed out.
#[derive(Debug)]
pub struct CountingSampler<S> {
    inner: S,
    lines: AtomicUsize,
    samples: AtomicUsize,
}

impl<S> CountingSampler<S> {
    pub fn new(inner: S) -> Self {
        CountingSampler {
            inner,
            lines: AtomicUsize::new(0),
            samples: AtomicUsize::new(0),
        }
    }

    pub fn lines(&self) -> usize {
        self.lines.load(Ordering::Relaxed)
    }

    pub fn samples(&self) -> usize {
        self.samples.load(Ordering::Relaxed)
    }

    pub fn into_inner(self) -> S {
        self.inner
    }
}

impl<S: LineSampler> LineSampler for CountingSampler<S> {
    fn sample(&self, direction: &[f64], step: f64, m_max: usize) -> Result<LineSampleSet> {
        let set = self.inner.sample(direction, step, m_max)?;
        self.lines.fetch_add(1, Ordering::Relaxed);
        self.samples.fetch_add(set.values.len(), Ordering::Relaxed);
        Ok(set)
    }
}

/// Precomputed sample sets, looked up by direction (up to sign, since the
/// intensity is even) and step.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SampleBank {
    pub sets: Vec<LineSampleSet>,
}

impl SampleBank {
    pub fn new(sets: Vec<LineSampleSet>) -> Self {
        SampleBank { sets }
    }
}

impl LineSampler for SampleBank {
    fn sample(&self, direction: &[f64], step: f64, m_max: usize) -> Result<LineSampleSet> {
        let same_line = |s: &LineSampleSet| {
            s.direction.len() == direction.len()
                && (s.step - step).abs() <= 1e-12 * step
                && (distance(&s.direction, direction) < 1e-9
                    || s.direction
                        .iter()
                        .zip(direction)
                        .all(|(a, b)| (a + b).abs() < 1e-9))
        };
        let set = self.sets.iter().find(|s| same_line(s)).ok_or_else(|| {
            Error::InvalidInput(format!(
                "no stored samples for direction {direction:?} at step {step}"
            ))
        })?;
        if set.values.len() < m_max + 1 {
            return Err(Error::InvalidInput(format!(
                "stored line {direction:?} has {} samples, {} requested",
                set.values.len(),
                m_max + 1
            )));
        }
        LineSampleSet::new(direction.to_vec(), step, set.values[..=m_max].to_vec())
    }
}

/// Base directions (axes or a generic basis) and adaptive directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionBundle {
    pub base: Vec<Vec<f64>>,
    pub adaptive: Vec<Vec<f64>>,
}

impl DirectionBundle {
    pub fn all(&self) -> Vec<Vec<f64>> {
        self.base.iter().chain(&self.adaptive).cloned().collect()
    }
}

pub fn axis(dim: usize, d: usize) -> Vec<f64> {
    let mut e = vec![0.0; dim];
    e[d] = 1.0;
    e
}

/// `alignment[d][n]` is the index on line `d` of the atom at index `n` on line 0.
pub fn match_by_modulus(lines: &[&LabeledProjection], tol: f64) -> Result<Vec<Vec<usize>>> {
    let Some(reference) = lines.first() else {
        return Ok(Vec::new());
    };
    let n = reference.len();
    let mut alignment = Vec::with_capacity(lines.len());
    for (d, line) in lines.iter().enumerate() {
        if line.len() != n {
            return Err(Error::InvalidInput(format!(
                "line {d} has {} atoms, line 0 has {n}",
                line.len()
            )));
        }
        let moduli = line.moduli();
        let mut sorted = moduli.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[1] - w[0] <= 2.0 * tol) {
            return Err(Error::AmbiguousMatch { line: d });
        }
        let mut used = vec![false; n];
        let mut map = Vec::with_capacity(n);
        for target in reference.moduli() {
            let (j, _) = moduli
                .iter()
                .enumerate()
                .map(|(j, m)| (j, (m - target).abs()))
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty line");
            if used[j] {
                return Err(Error::AmbiguousMatch { line: d });
            }
            used[j] = true;
            map.push(j);
        }
        alignment.push(map);
    }
    Ok(alignment)
}

/// For each anchor atom, the up to `2^{D−1}` points compatible with the base
/// line solutions (one per choice of reflection on lines `2..D`).
#[derive(Debug, Clone)]
pub struct CandidateSet {
    base: Vec<Vec<f64>>,
    /// `[anchor][flip mask]`, in base coordinates `(⟨ψ_d, x⟩)_d`.
    base_coords: Vec<Vec<Vec<f64>>>,
    /// Same points in space coordinates.
    points: Vec<Vec<Vec<f64>>>,
    coeffs: Vec<Complex64>,
}

impl CandidateSet {
    pub fn dim(&self) -> usize {
        self.base.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn flips(&self) -> usize {
        1 << (self.dim() - 1)
    }

    pub fn base(&self) -> &[Vec<f64>] {
        &self.base
    }

    pub fn anchor(&self, n: usize) -> &[Vec<f64>] {
        &self.points[n]
    }

    pub fn anchor_base_coords(&self, n: usize) -> &[Vec<f64>] {
        &self.base_coords[n]
    }

    /// Coefficients of the anchor line.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Candidate translations under one global choice of reflections.
    pub fn configuration(&self, mask: usize) -> Vec<Vec<f64>> {
        self.points.iter().map(|k| k[mask].clone()).collect()
    }

    pub fn all_points(&self) -> Vec<Vec<f64>> {
        self.points.iter().flatten().cloned().collect()
    }

    pub fn diameter(&self) -> f64 {
        crate::signal::diameter(&self.all_points())
    }
}

pub fn build_candidates(
    axis_solutions: &[&LabeledProjection],
    alignment: &[Vec<usize>],
) -> CandidateSet {
    let dim = axis_solutions.len();
    let base: Vec<Vec<f64>> = (0..dim).map(|d| axis(dim, d)).collect();
    build_candidates_in_basis(axis_solutions, alignment, &base).expect("axes form a basis")
}

/// Candidates for solutions along an arbitrary basis `ψ_1..ψ_D`: the points
/// `x` with `⟨ψ_d, x⟩` equal to the (possibly reflected) line positions.
pub fn build_candidates_in_basis(
    solutions: &[&LabeledProjection],
    alignment: &[Vec<usize>],
    base: &[Vec<f64>],
) -> Result<CandidateSet> {
    let dim = base.len();
    if dim == 0 || solutions.len() != dim || alignment.len() != dim {
        return Err(Error::InvalidInput(format!(
            "{} solutions and {} alignments for {dim} base directions",
            solutions.len(),
            alignment.len()
        )));
    }
    let inverse = basis_inverse(base)?;
    let n = solutions[0].len();
    let flips = 1usize << (dim - 1);
    let mut base_coords = Vec::with_capacity(n);
    let mut points = Vec::with_capacity(n);
    #[allow(clippy::needless_range_loop)]
    for n1 in 0..n {
        let mut ys = Vec::with_capacity(flips);
        let mut xs = Vec::with_capacity(flips);
        for mask in 0..flips {
            let y: Vec<f64> = (0..dim)
                .map(|d| {
                    let line = solutions[d];
                    let p = line.positions()[alignment[d][n1]];
                    if d > 0 && mask >> (d - 1) & 1 == 1 {
                        line.extent() - p
                    } else {
                        p
                    }
                })
                .collect();
            let x = &inverse * DVector::from_column_slice(&y);
            xs.push(x.iter().copied().collect());
            ys.push(y);
        }
        base_coords.push(ys);
        points.push(xs);
    }
    Ok(CandidateSet {
        base: base.to_vec(),
        base_coords,
        points,
        coeffs: solutions[0].coeffs().to_vec(),
    })
}

/// Matrix with the directions as rows, after a conditioning check.
fn direction_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let dim = rows.len();
    if rows.iter().any(|r| r.len() != dim) {
        return Err(Error::InvalidInput(
            "directions do not form a square system".into(),
        ));
    }
    let m = DMatrix::from_fn(dim, dim, |i, j| rows[i][j]);
    let sv = m.singular_values();
    let (hi, lo) = (sv.max(), sv.min());
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if !(cond <= 1e12) {
        return Err(Error::SingularBasis(cond));
    }
    Ok(m)
}

fn basis_inverse(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let m = direction_matrix(rows)?;
    let cond = f64::INFINITY;
    m.try_inverse().ok_or(Error::SingularBasis(cond))
}

/// Acceptance thresholds for adaptive directions, relative to the candidate
/// set diameter where applicable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectionCriteria {
    pub sep_min_rel: f64,
    pub collision_gap_rel: f64,
    /// Minimum norm of the component orthogonal to the span of the previous
    /// directions.
    pub min_independence: f64,
    /// Admissible random draws compared before the best conditioned one is
    /// kept; 1 keeps the first admissible draw.
    pub pool: usize,
}

impl Default for DirectionCriteria {
    fn default() -> Self {
        DirectionCriteria {
            sep_min_rel: 1e-6,
            collision_gap_rel: 1e-9,
            min_independence: 1e-3,
            pool: 128,
        }
    }
}

/// `min_{x∈𝔎_N} ⟨θ,x⟩ − max_{x∈𝔎_1} ⟨θ,x⟩`; positive when `θ` orders the
/// outer anchors.
pub fn ordering_margin(candidates: &CandidateSet, theta: &[f64]) -> f64 {
    let n = candidates.len();
    let first = candidates
        .anchor(0)
        .iter()
        .map(|x| dot(theta, x))
        .fold(f64::NEG_INFINITY, f64::max);
    let last = candidates
        .anchor(n - 1)
        .iter()
        .map(|x| dot(theta, x))
        .fold(f64::INFINITY, f64::min);
    last - first
}

fn orthogonal_residual(span: &[Vec<f64>], v: &[f64]) -> f64 {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for s in span {
        let mut u = s.clone();
        for b in &basis {
            let c = dot(&u, b);
            u.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
        let norm = norm_sq(&u).sqrt();
        if norm > 1e-12 {
            basis.push(u.iter().map(|x| x / norm).collect());
        }
    }
    let mut r = v.to_vec();
    for b in &basis {
        let c = dot(&r, b);
        r.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
    }
    norm_sq(&r).sqrt()
}

/// Validates `theta` as an adaptive direction. Returns the orientation
/// (`theta` or `−theta`) under which it orders the outer anchors.
pub fn check_adaptive_direction(
    candidates: &CandidateSet,
    excluded_span: &[Vec<f64>],
    theta: &[f64],
    criteria: &DirectionCriteria,
) -> std::result::Result<Vec<f64>, String> {
    if theta.len() != candidates.dim() {
        return Err(format!("direction has {} components", theta.len()));
    }
    let norm = norm_sq(theta).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(format!("direction has norm {norm}"));
    }
    let residual = orthogonal_residual(excluded_span, theta);
    if residual < criteria.min_independence {
        return Err(format!(
            "nearly dependent on earlier directions (residual {residual:.3e})"
        ));
    }
    let diam = candidates.diameter();
    let sep_min = criteria.sep_min_rel * diam;
    let forward = ordering_margin(candidates, theta);
    let flipped: Vec<f64> = theta.iter().map(|x| -x).collect();
    let backward = ordering_margin(candidates, &flipped);
    let oriented = if forward >= sep_min {
        theta.to_vec()
    } else if backward >= sep_min {
        flipped
    } else {
        return Err(format!(
            "outer anchors not separated (margins {forward:.3e}, {backward:.3e}; need {sep_min:.3e})"
        ));
    };
    let gap = criteria.collision_gap_rel * diam;
    for mask in 0..candidates.flips() {
        let projected: Vec<f64> = candidates
            .configuration(mask)
            .iter()
            .map(|x| dot(&oriented, x))
            .collect();
        if !is_collision_free(&projected, gap) {
            return Err(format!(
                "projection of candidate configuration {mask} has collisions"
            ));
        }
    }
    Ok(oriented)
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random::<f64>();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| gaussian(rng)).collect();
        if norm_sq(&v) > 1e-20 {
            return normalize(&v);
        }
    }
}

/// Uniform draw on the cap of half-angle `half_angle` around the unit vector `axis`.
fn random_in_cone<R: Rng + ?Sized>(rng: &mut R, axis: &[f64], half_angle: f64) -> Vec<f64> {
    let dim = axis.len();
    if dim == 1 {
        return axis.to_vec();
    }
    let u = loop {
        let mut u = random_unit(rng, dim);
        let c = dot(&u, axis);
        u.iter_mut().zip(axis).for_each(|(x, a)| *x -= c * a);
        if norm_sq(&u) > 1e-12 {
            break normalize(&u);
        }
    };
    let cos_phi = 1.0 - rng.random::<f64>() * (1.0 - half_angle.cos());
    let sin_phi = (1.0 - cos_phi * cos_phi).max(0.0).sqrt();
    axis.iter()
        .zip(&u)
        .map(|(a, b)| cos_phi * a + sin_phi * b)
        .collect()
}

/// Draws directions until one passes [`check_adaptive_direction`]. Draws
/// alternate between the hemisphere around the anchor direction and cones
/// with log-uniform half-angles between 1e−3 and π/2; the narrow cones reach
/// anchors that are barely ordered. Among the
/// first `criteria.pool` admissible draws the one with the best
/// [`direction_quality`] is returned, with the number of draws used.
pub fn choose_adaptive_direction<R: Rng + ?Sized>(
    candidates: &CandidateSet,
    excluded_span: &[Vec<f64>],
    criteria: &DirectionCriteria,
    rng: &mut R,
    max_tries: usize,
) -> Result<(Vec<f64>, usize)> {
    let anchor = &candidates.base()[0];
    let wanted = criteria.pool.max(1);
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut admissible = 0;
    for attempt in 0..max_tries {
        let half_angle = if attempt % 2 == 0 {
            FRAC_PI_2
        } else {
            (1e-3f64.ln() + rng.random::<f64>() * (FRAC_PI_2 / 1e-3).ln()).exp()
        };
        let theta = random_in_cone(rng, anchor, half_angle);
        let Ok(theta) = check_adaptive_direction(candidates, excluded_span, &theta, criteria)
        else {
            continue;
        };
        let score = direction_quality(candidates, &theta);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, theta));
        }
        admissible += 1;
        if admissible == wanted {
            return Ok((best.expect("admissible draw").1, attempt + 1));
        }
    }
    best.map(|(_, theta)| (theta, max_tries))
        .ok_or(Error::DirectionSearchExhausted(max_tries))
}

/// Smallest gap between projected differences over all candidate
/// configurations, relative to the diameter. The line fit degrades quickly as
/// this gap shrinks, while independence only enters the final linear solve.
pub fn direction_quality(candidates: &CandidateSet, theta: &[f64]) -> f64 {
    let diam = candidates.diameter().max(f64::MIN_POSITIVE);
    let gap = (0..candidates.flips())
        .map(|mask| {
            let projected: Vec<f64> = candidates
                .configuration(mask)
                .iter()
                .map(|x| dot(theta, x))
                .collect();
            crate::signal::min_difference_gap(&projected)
        })
        .fold(f64::INFINITY, f64::min);
    let gap = if gap.is_finite() { gap } else { diam };
    gap / diam
}

/// An adaptive line solution with its reflection fixed and its atoms aligned
/// to the anchor line.
#[derive(Debug, Clone, PartialEq)]
pub struct OrientedLine {
    pub direction: Vec<f64>,
    pub projection: LabeledProjection,
    /// `alignment[n]` is the index on this line of anchor atom `n`.
    pub alignment: Vec<usize>,
    pub reflected: bool,
}

/// Aligns `line` to `anchor` by modulus and reflects it if needed so that
/// anchor atom 0 projects below anchor atom `N−1`.
pub fn orient_line(
    anchor: &LabeledProjection,
    direction: &[f64],
    line: &LabeledProjection,
    tol: f64,
    index: usize,
) -> Result<OrientedLine> {
    let alignment = match_by_modulus(&[anchor, line], tol).map_err(|e| match e {
        Error::AmbiguousMatch { .. } => Error::AmbiguousMatch { line: index },
        other => other,
    })?;
    let mut map = alignment[1].clone();
    let n = map.len();
    let p = line.positions();
    if n > 1 && p[map[0]] > p[map[n - 1]] {
        map.iter_mut().for_each(|j| *j = n - 1 - *j);
        return Ok(OrientedLine {
            direction: direction.to_vec(),
            projection: line.reflected(),
            alignment: map,
            reflected: true,
        });
    }
    Ok(OrientedLine {
        direction: direction.to_vec(),
        projection: line.clone(),
        alignment: map,
        reflected: false,
    })
}

/// Solves `⟨anchor_direction, T_n⟩ = anchor position`, `⟨θ_d, T_n⟩ = adaptive
/// position` for every anchor atom, then checks each solution against its
/// candidates. Translations are returned shifted to coordinate-wise minimum 0.
pub fn resolve_translations(
    candidates: &CandidateSet,
    anchor: &LabeledProjection,
    adaptive: &[OrientedLine],
    snap_tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let dim = candidates.dim();
    if adaptive.len() + 1 != dim {
        return Err(Error::InvalidInput(format!(
            "{} adaptive lines for dimension {dim}",
            adaptive.len()
        )));
    }
    let mut rows = vec![candidates.base()[0].clone()];
    rows.extend(adaptive.iter().map(|l| l.direction.clone()));
    let lu = direction_matrix(&rows)?.lu();
    let n = anchor.len();
    let mut translations = Vec::with_capacity(n);
    for n1 in 0..n {
        let mut rhs = vec![anchor.positions()[n1]];
        rhs.extend(
            adaptive
                .iter()
                .map(|l| l.projection.positions()[l.alignment[n1]]),
        );
        let t = lu
            .solve(&DVector::from_vec(rhs))
            .ok_or(Error::SingularBasis(f64::INFINITY))?;
        translations.push(t.iter().copied().collect::<Vec<f64>>());
    }
    shift_to_origin(&mut translations);

    let mut coords: Vec<Vec<f64>> = translations
        .iter()
        .map(|t| candidates.base().iter().map(|b| dot(b, t)).collect())
        .collect();
    shift_to_origin(&mut coords);
    for (n1, y) in coords.iter().enumerate() {
        let nearest = candidates
            .anchor_base_coords(n1)
            .iter()
            .map(|c| distance(c, y))
            .fold(f64::INFINITY, f64::min);
        if !(nearest <= snap_tol) {
            return Err(Error::CandidateMismatch {
                atom: n1,
                distance: nearest,
                tol: snap_tol,
            });
        }
    }
    Ok(translations)
}

fn shift_to_origin(points: &mut [Vec<f64>]) {
    let Some(first) = points.first() else { return };
    let mut lo = first.clone();
    for p in points.iter() {
        lo.iter_mut().zip(p).for_each(|(l, x)| *l = l.min(*x));
    }
    for p in points.iter_mut() {
        p.iter_mut().zip(&lo).for_each(|(x, l)| *x -= l);
    }
}

/// How the adaptive directions are obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdaptiveDirections {
    /// Random search seeded for reproducibility.
    Random { seed: u64 },
    /// Caller-supplied directions, validated before use.
    Fixed(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdConfig {
    pub n: usize,
    pub step: f64,
    pub m_max: usize,
    pub adaptive: AdaptiveDirections,
    pub max_tries: usize,
    pub criteria: DirectionCriteria,
    /// Modulus matching tolerance relative to the largest anchor modulus.
    pub modulus_tol_rel: f64,
    /// Candidate consistency tolerance relative to the candidate diameter.
    pub snap_tol_rel: f64,
    pub line: LineOptions,
    /// Worker threads for the per-line solves; 1 solves sequentially.
    pub threads: usize,
}

impl NdConfig {
    pub fn new(n: usize, step: f64, m_max: usize) -> Self {
        NdConfig {
            n,
            step,
            m_max,
            adaptive: AdaptiveDirections::Random { seed: 0 },
            max_tries: 1000,
            criteria: DirectionCriteria::default(),
            modulus_tol_rel: 1e-4,
            snap_tol_rel: 1e-6,
            line: LineOptions::default(),
            threads: 1,
        }
    }

    /// Smallest admissible `M` for `n` atoms.
    pub fn minimal_m(n: usize) -> usize {
        2 * n * n.saturating_sub(1) + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineReport {
    pub direction: Vec<f64>,
    /// The line solution as recovered, before any reflection.
    pub projection: LabeledProjection,
    pub samples: usize,
    pub diagnostics: LineDiagnostics,
    pub reflected: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NdReport {
    pub lines: Vec<LineReport>,
    pub directions: DirectionBundle,
    pub samples_used: usize,
    /// Draws spent by the random direction search.
    pub draws: usize,
    /// Ordering margin of each adaptive direction on the candidate set.
    pub candidate_margins: Vec<f64>,
    /// `⟨θ, T_N − T_1⟩` on the recovered translations.
    pub recovered_margins: Vec<f64>,
    /// Generic mode only: whether the second base direction served as anchor.
    pub role_swapped: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdSolution {
    pub signal: SparseSignal,
    pub report: NdReport,
}

struct SolvedLine {
    projection: LabeledProjection,
    diagnostics: LineDiagnostics,
    samples: usize,
}

fn solve_line<S: LineSampler + ?Sized>(
    sampler: &S,
    kernel: &StructureKernel,
    direction: &[f64],
    config: &NdConfig,
    index: usize,
) -> Result<SolvedLine> {
    let set = sampler.sample(direction, config.step, config.m_max)?;
    if set.m_max() != config.m_max {
        return Err(Error::InvalidInput(format!(
            "sampler returned {} samples on line {index}, expected {}",
            set.values.len(),
            config.m_max + 1
        )));
    }
    let (projection, diagnostics) = retrieve_line_detailed(&set, kernel, config.n, &config.line)?;
    let gap = config.criteria.collision_gap_rel * projection.extent();
    let check = assert_hypotheses(projection.positions(), &projection.moduli(), gap);
    if !check.collision_free {
        return Err(Error::HypothesisViolation {
            line: index,
            reason: format!(
                "difference gap {:.3e} below {gap:.3e}",
                check.min_difference_gap
            ),
        });
    }
    Ok(SolvedLine {
        projection,
        diagnostics,
        samples: set.values.len(),
    })
}

/// Solves several lines, concurrently when `threads > 1`. Errors are reported
/// for the first failing line in input order.
fn solve_lines<S: LineSampler + ?Sized>(
    sampler: &S,
    kernel: &StructureKernel,
    directions: &[(usize, Vec<f64>)],
    config: &NdConfig,
) -> Result<Vec<SolvedLine>> {
    if config.threads <= 1 || directions.len() <= 1 {
        return directions
            .iter()
            .map(|(i, d)| solve_line(sampler, kernel, d, config, *i))
            .collect();
    }
    let mut out = Vec::with_capacity(directions.len());
    for chunk in directions.chunks(config.threads) {
        let results: Vec<Result<SolvedLine>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|(i, d)| scope.spawn(move || solve_line(sampler, kernel, d, config, *i)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("line solver panicked"))
                .collect()
        });
        for r in results {
            out.push(r?);
        }
    }
    Ok(out)
}

fn validate_config(dim: usize, config: &NdConfig) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidInput("dimension must be positive".into()));
    }
    if config.n == 0 {
        return Err(Error::InvalidInput(
            "number of atoms must be positive".into(),
        ));
    }
    if !(config.step > 0.0 && config.step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {}",
            config.step
        )));
    }
    let required = NdConfig::minimal_m(config.n);
    if config.m_max < required {
        return Err(Error::InvalidInput(format!(
            "M = {} but N = {} needs M >= {required}",
            config.m_max, config.n
        )));
    }
    Ok(())
}

fn modulus_tol(anchor: &LabeledProjection, config: &NdConfig) -> f64 {
    config.modulus_tol_rel * anchor.moduli().iter().copied().fold(0.0, f64::max)
}

fn assemble(
    dim: usize,
    kernel: StructureKernel,
    coeffs: &[Complex64],
    translations: Vec<Vec<f64>>,
) -> Result<SparseSignal> {
    let atoms = coeffs
        .iter()
        .zip(translations)
        .map(|(c, t)| Atom { c: *c, t })
        .collect();
    SparseSignal::new(dim, kernel, atoms)
}

fn recovered_margins(translations: &[Vec<f64>], adaptive: &[OrientedLine]) -> Vec<f64> {
    let n = translations.len();
    adaptive
        .iter()
        .map(|l| dot(&l.direction, &translations[n - 1]) - dot(&l.direction, &translations[0]))
        .collect()
}

/// Recovers a `dim`-variate signal from `2·dim − 1` sampled lines: the axes
/// plus `dim − 1` adaptive directions.
pub fn retrieve_nd<S: LineSampler + ?Sized>(
    sampler: &S,
    dim: usize,
    kernel: StructureKernel,
    config: &NdConfig,
) -> Result<NdSolution> {
    validate_config(dim, config)?;
    kernel.validate()?;
    let axes: Vec<(usize, Vec<f64>)> = (0..dim).map(|d| (d, axis(dim, d))).collect();
    let base_lines = solve_lines(sampler, &kernel, &axes, config)?;
    let mut reports: Vec<LineReport> = base_lines
        .iter()
        .zip(&axes)
        .map(|(l, (_, d))| LineReport {
            direction: d.clone(),
            projection: l.projection.clone(),
            samples: l.samples,
            diagnostics: l.diagnostics.clone(),
            reflected: false,
        })
        .collect();
    let anchor = &base_lines[0].projection;

    if dim == 1 {
        let translations = anchor.positions().iter().map(|p| vec![*p]).collect();
        let signal = assemble(1, kernel, anchor.coeffs(), translations)?;
        let samples_used = reports.iter().map(|r| r.samples).sum();
        return Ok(NdSolution {
            signal,
            report: NdReport {
                lines: reports,
                directions: DirectionBundle {
                    base: vec![vec![1.0]],
                    adaptive: Vec::new(),
                },
                samples_used,
                draws: 0,
                candidate_margins: Vec::new(),
                recovered_margins: Vec::new(),
                role_swapped: false,
            },
        });
    }

    let tol = modulus_tol(anchor, config);
    let refs: Vec<&LabeledProjection> = base_lines.iter().map(|l| &l.projection).collect();
    let alignment = match_by_modulus(&refs, tol)?;
    let candidates = build_candidates(&refs, &alignment);

    let mut span = vec![axis(dim, 0)];
    let mut thetas = Vec::with_capacity(dim - 1);
    let mut draws = 0;
    match &config.adaptive {
        AdaptiveDirections::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            for _ in 1..dim {
                let (theta, used) = choose_adaptive_direction(
                    &candidates,
                    &span,
                    &config.criteria,
                    &mut rng,
                    config.max_tries,
                )?;
                draws += used;
                span.push(theta.clone());
                thetas.push(theta);
            }
        }
        AdaptiveDirections::Fixed(fixed) => {
            if fixed.len() != dim - 1 {
                return Err(Error::InvalidInput(format!(
                    "{} adaptive directions given, dimension {dim} needs {}",
                    fixed.len(),
                    dim - 1
                )));
            }
            for (index, theta) in fixed.iter().enumerate() {
                let theta = check_adaptive_direction(&candidates, &span, theta, &config.criteria)
                    .map_err(|reason| Error::DirectionRejected { index, reason })?;
                span.push(theta.clone());
                thetas.push(theta);
            }
        }
    }

    let requests: Vec<(usize, Vec<f64>)> = thetas
        .iter()
        .enumerate()
        .map(|(i, t)| (dim + i, t.clone()))
        .collect();
    let adaptive_lines = solve_lines(sampler, &kernel, &requests, config)?;
    let mut oriented = Vec::with_capacity(dim - 1);
    for ((index, theta), line) in requests.iter().zip(&adaptive_lines) {
        let o = orient_line(anchor, theta, &line.projection, tol, *index)?;
        reports.push(LineReport {
            direction: theta.clone(),
            projection: line.projection.clone(),
            samples: line.samples,
            diagnostics: line.diagnostics.clone(),
            reflected: o.reflected,
        });
        oriented.push(o);
    }

    let snap_tol = config.snap_tol_rel * candidates.diameter();
    let translations = resolve_translations(&candidates, anchor, &oriented, snap_tol)?;
    let candidate_margins = thetas
        .iter()
        .map(|t| ordering_margin(&candidates, t))
        .collect();
    let recovered = recovered_margins(&translations, &oriented);
    let signal = assemble(dim, kernel, anchor.coeffs(), translations)?;
    let samples_used = reports.iter().map(|r| r.samples).sum();
    Ok(NdSolution {
        signal,
        report: NdReport {
            lines: reports,
            directions: DirectionBundle {
                base: (0..dim).map(|d| axis(dim, d)).collect(),
                adaptive: thetas,
            },
            samples_used,
            draws,
            candidate_margins,
            recovered_margins: recovered,
            role_swapped: false,
        },
    })
}

/// Bivariate recovery from three fixed, pairwise independent directions.
/// The first two serve as base; if the third does not order the outer
/// anchors, the roles of the first two are swapped.
pub fn retrieve_2d_generic<S: LineSampler + ?Sized>(
    sampler: &S,
    directions: &[Vec<f64>; 3],
    kernel: StructureKernel,
    config: &NdConfig,
) -> Result<NdSolution> {
    validate_config(2, config)?;
    kernel.validate()?;
    for (i, d) in directions.iter().enumerate() {
        crate::signal::check_unit(d, 2).map_err(|_| {
            Error::InvalidInput(format!("direction {i} must be a unit vector in the plane"))
        })?;
    }
    for i in 0..3 {
        for j in i + 1..3 {
            let (a, b) = (&directions[i], &directions[j]);
            if (a[0] * b[1] - a[1] * b[0]).abs() < 1e-8 {
                return Err(Error::GenericityFailure);
            }
        }
    }
    let requests: Vec<(usize, Vec<f64>)> = directions.iter().cloned().enumerate().collect();
    let lines = solve_lines(sampler, &kernel, &requests, config)?;

    for (first, second) in [(0usize, 1usize), (1, 0)] {
        let anchor = &lines[first].projection;
        let tol = modulus_tol(anchor, config);
        let refs = [anchor, &lines[second].projection];
        let alignment = match_by_modulus(&refs, tol)?;
        let base = vec![directions[first].clone(), directions[second].clone()];
        let candidates = build_candidates_in_basis(&refs, &alignment, &base)?;
        let Ok(theta) =
            check_adaptive_direction(&candidates, &base[..1], &directions[2], &config.criteria)
        else {
            continue;
        };
        let oriented = orient_line(anchor, &theta, &lines[2].projection, tol, 2)?;
        let snap_tol = config.snap_tol_rel * candidates.diameter();
        let translations = resolve_translations(
            &candidates,
            anchor,
            std::slice::from_ref(&oriented),
            snap_tol,
        )?;
        let recovered = recovered_margins(&translations, std::slice::from_ref(&oriented));
        let reports = [first, second, 2]
            .iter()
            .map(|&i| LineReport {
                direction: directions[i].clone(),
                projection: lines[i].projection.clone(),
                samples: lines[i].samples,
                diagnostics: lines[i].diagnostics.clone(),
                reflected: i == 2 && oriented.reflected,
            })
            .collect::<Vec<_>>();
        let samples_used = reports.iter().map(|r| r.samples).sum();
        let signal = assemble(2, kernel, anchor.coeffs(), translations)?;
        return Ok(NdSolution {
            signal,
            report: NdReport {
                lines: reports,
                directions: DirectionBundle {
                    base,
                    adaptive: vec![theta.clone()],
                },
                samples_used,
                draws: 0,
                candidate_margins: vec![ordering_margin(&candidates, &theta)],
                recovered_margins: recovered,
                role_swapped: first == 1,
            },
        });
    }
    Err(Error::GenericityFailure)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::auto_step;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn proj(positions: &[f64], moduli: &[f64]) -> LabeledProjection {
        let coeffs: Vec<Complex64> = moduli.iter().map(|m| cx(*m, 0.0)).collect();
        LabeledProjection::new(positions.to_vec(), coeffs).unwrap()
    }

    fn five_sources() -> SparseSignal {
        crate::synth::five_gaussian_sources()
    }

    #[test]
    fn modulus_alignment() {
        let a = proj(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]);
        let b = proj(&[0.0, 1.0, 2.0], &[3.0, 1.0, 2.0]);
        let al = match_by_modulus(&[&a, &b], 1e-6).unwrap();
        assert_eq!(al[1], vec![1, 2, 0]);
        assert_eq!(al[0], vec![0, 1, 2]);
    }

    #[test]
    fn modulus_near_tie_is_ambiguous() {
        let a = proj(&[0.0, 1.0, 2.0], &[1.0, 1.0 + 1e-12, 3.0]);
        assert!(matches!(
            match_by_modulus(&[&a, &a], 1e-6),
            Err(Error::AmbiguousMatch { line: 0 })
        ));
    }

    #[test]
    fn candidates_are_reflection_pairs() {
        let e1 = proj(&[0.0, 1.0, 2.0], &[1.0, 2.0, 3.0]);
        let e2 = proj(&[0.0, 4.0, 7.0], &[1.0, 2.0, 3.0]);
        let al = match_by_modulus(&[&e1, &e2], 1e-6).unwrap();
        let c = build_candidates(&[&e1, &e2], &al);
        assert_eq!(c.flips(), 2);
        assert_eq!(c.anchor(1), &[vec![1.0, 4.0], vec![1.0, 3.0]]);
        for n in 0..3 {
            assert!(c.anchor(n).iter().all(|x| x[0] == e1.positions()[n]));
        }
    }

    #[test]
    fn three_dimensional_candidates() {
        let e1 = proj(&[0.0, 1.0], &[1.0, 2.0]);
        let e2 = proj(&[0.0, 3.0], &[1.0, 2.0]);
        let e3 = proj(&[0.0, 5.0], &[2.0, 1.0]);
        let al = match_by_modulus(&[&e1, &e2, &e3], 1e-6).unwrap();
        let c = build_candidates(&[&e1, &e2, &e3], &al);
        assert_eq!(c.anchor(0).len(), 4);
        assert!(c.anchor(0).contains(&vec![0.0, 0.0, 5.0]));
        assert!(c.anchor(0).contains(&vec![0.0, 3.0, 0.0]));
    }

    #[test]
    fn axis_direction_orders_separated_anchors() {
        let e1 = proj(&[0.0, 10.0], &[1.0, 2.0]);
        let e2 = proj(&[0.0, 5.0], &[1.0, 2.0]);
        let al = match_by_modulus(&[&e1, &e2], 1e-6).unwrap();
        let c = build_candidates(&[&e1, &e2], &al);
        assert_eq!(ordering_margin(&c, &[1.0, 0.0]), 10.0);
        // Collision gap 0 since N = 2 projections can't collide.
        let theta = check_adaptive_direction(&c, &[], &[1.0, 0.0], &DirectionCriteria::default());
        assert_eq!(theta.unwrap(), vec![1.0, 0.0]);
        // Independence of e_1 fails.
        assert!(check_adaptive_direction(
            &c,
            &[vec![1.0, 0.0]],
            &[1.0, 0.0],
            &DirectionCriteria::default()
        )
        .is_err());
        // Along e_2 the anchors overlap.
        assert!(ordering_margin(&c, &[0.0, 1.0]) < 0.0);
        assert!(
            check_adaptive_direction(&c, &[], &[0.0, 1.0], &DirectionCriteria::default()).is_err()
        );
    }

    #[test]
    fn identity_system_returns_candidate() {
        let e1 = proj(&[0.0, 2.0, 6.0], &[1.0, 2.0, 3.0]);
        let e2 = proj(&[0.0, 3.0, 4.0], &[2.0, 3.0, 1.0]);
        let al = match_by_modulus(&[&e1, &e2], 1e-6).unwrap();
        let c = build_candidates(&[&e1, &e2], &al);
        let adaptive = OrientedLine {
            direction: vec![0.0, 1.0],
            projection: e2.clone(),
            alignment: al[1].clone(),
            reflected: false,
        };
        let t = resolve_translations(&c, &e1, &[adaptive], 1e-9).unwrap();
        assert_eq!(t, vec![vec![0.0, 4.0], vec![2.0, 0.0], vec![6.0, 3.0]]);
    }

    #[test]
    fn exact_projections_in_three_dimensions() {
        let truth = SparseSignal::from_parts(
            StructureKernel::Dirac,
            &[cx(1.0, 0.0), cx(0.0, 2.0), cx(-3.0, 0.5)],
            &[
                vec![0.0, 1.0, 2.0],
                vec![3.0, 0.2, 1.1],
                vec![1.7, 2.9, 0.0],
            ],
        )
        .unwrap();
        let project = |dir: &[f64]| {
            let p = crate::signal::project(&truth.translations(), dir);
            LabeledProjection::from_unsorted(&p, &truth.coeffs()).unwrap()
        };
        let lines: Vec<LabeledProjection> = (0..3).map(|d| project(&axis(3, d))).collect();
        let refs: Vec<&LabeledProjection> = lines.iter().collect();
        let al = match_by_modulus(&refs, 1e-6).unwrap();
        let c = build_candidates(&refs, &al);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let q = random_unit(&mut rng, 3);
        let thetas = [
            normalize(&[0.8, 0.5, 0.3]),
            normalize(&[0.2, 0.1, -0.9 + 0.0 * q[0]]),
        ];
        let mut oriented = Vec::new();
        for (i, th) in thetas.iter().enumerate() {
            let th = check_adaptive_direction(&c, &[axis(3, 0)], th, &DirectionCriteria::default())
                .unwrap_or_else(|_| th.clone());
            oriented.push(orient_line(&lines[0], &th, &project(&th), 1e-6, 3 + i).unwrap());
        }
        let t = resolve_translations(&c, &lines[0], &oriented, 1e-8).unwrap();
        let rec = assemble(3, StructureKernel::Dirac, lines[0].coeffs(), t).unwrap();
        let err = crate::ambiguity::best_match_error(&truth, &rec).unwrap();
        assert!(err.t_err < 1e-10, "{}", err.t_err);
    }

    #[test]
    fn five_source_fixed_direction_is_valid() {
        let s = five_sources();
        let h = auto_step(&s.translations());
        let mut config = NdConfig::new(5, h, 99);
        config.adaptive = AdaptiveDirections::Fixed(vec![crate::synth::five_source_direction()]);
        let sol = retrieve_nd(&s, 2, s.kernel(), &config).unwrap();
        let err = crate::ambiguity::best_match_error(&s, &sol.signal).unwrap();
        assert!(err.t_err <= 1e-6, "{}", err.t_err);
        assert!(err.c_err <= 1e-3, "{}", err.c_err);
        assert!(sol.report.recovered_margins[0] > 0.0);
    }

    #[test]
    fn one_dimension_degenerates_to_line() {
        let s = SparseSignal::from_parts(
            StructureKernel::Dirac,
            &[cx(1.0, 0.0), cx(2.0, 1.0), cx(0.5, -0.5)],
            &[vec![0.0], vec![1.3], vec![3.1]],
        )
        .unwrap();
        let config = NdConfig::new(3, 0.4, 13);
        let sol = retrieve_nd(&s, 1, StructureKernel::Dirac, &config).unwrap();
        let line = crate::line::retrieve_line(
            &s.sample_line(&[1.0], 0.4, 13).unwrap(),
            &StructureKernel::Dirac,
            3,
            &LineOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.signal.coeffs(), line.coeffs());
        assert_eq!(sol.report.samples_used, 14);
    }

    #[test]
    fn dependent_generic_directions_fail() {
        let s = five_sources();
        let h = auto_step(&s.translations());
        let config = NdConfig::new(5, h, 99);
        let dirs = [vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0]];
        assert!(matches!(
            retrieve_2d_generic(&s, &dirs, s.kernel(), &config),
            Err(Error::GenericityFailure)
        ));
    }

    #[test]
    fn sample_bank_matches_up_to_sign() {
        let s = five_sources();
        let set = s.sample_line(&[0.6, 0.8], 0.03, 10).unwrap();
        let bank = SampleBank::new(vec![set.clone()]);
        let got = bank.sample(&[-0.6, -0.8], 0.03, 5).unwrap();
        assert_eq!(got.values, set.values[..6].to_vec());
        assert!(bank.sample(&[1.0, 0.0], 0.03, 5).is_err());
        assert!(bank.sample(&[0.6, 0.8], 0.03, 11).is_err());
    }
}
