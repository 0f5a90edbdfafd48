//! Phase retrieval on the line.
//!
//! The squared intensity of a univariate point signal, divided by the kernel
//! intensity, is an exponential sum whose positive frequencies are the pairwise
//! differences `T_n − T_k` with amplitudes `c_n c̄_k`. Once Prony's method has
//! produced these pairs, the support is rebuilt from both ends inwards: the
//! largest unexplained difference always ends at `T_1` or at `T_N`, and the
//! two possible placements are told apart by their amplitudes.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prony::{apm, refine, ExponentialSum, PronyConfig, RootMethod, Term};
use crate::signal::{min_difference_gap, LineSampleSet, StructureKernel};

/// Relative tolerance below which `|c_1|` and `|c_N|` count as equal.
pub const DEFAULT_OUTER_TIE_TOL: f64 = 1e-6;
/// Unit-circle tolerances tried after the configured one when APM returns
/// too few frequencies.
pub const FALLBACK_CIRCLE_TOLERANCES: [f64; 4] = [1e-4, 1e-3, 1e-2, 1e-1];
/// A fitted exponential sum must reproduce every sample to this fraction of
/// the largest sample.
pub const FIT_TOLERANCE: f64 = 1e-8;

/// Ties between the two placement residuals within this relative margin are rejected.
const PLACEMENT_TIE_TOL: f64 = 1e-12;

/// Recovered univariate signal, shift-normalized so the first position is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProjectionRepr")]
pub struct LabeledProjection {
    positions: Vec<f64>,
    coeffs: Vec<Complex64>,
}

#[derive(Deserialize)]
struct ProjectionRepr {
    positions: Vec<f64>,
    coeffs: Vec<Complex64>,
}

impl TryFrom<ProjectionRepr> for LabeledProjection {
    type Error = Error;

    fn try_from(repr: ProjectionRepr) -> Result<Self> {
        LabeledProjection::new(repr.positions, repr.coeffs)
    }
}

impl LabeledProjection {
    pub fn new(positions: Vec<f64>, coeffs: Vec<Complex64>) -> Result<Self> {
        if positions.is_empty() || positions.len() != coeffs.len() {
            return Err(Error::InvalidInput(format!(
                "{} positions but {} coefficients",
                positions.len(),
                coeffs.len()
            )));
        }
        if positions[0] != 0.0 {
            return Err(Error::InvalidInput("first position must be 0".into()));
        }
        if positions.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(
                "positions must be strictly increasing".into(),
            ));
        }
        if coeffs.iter().any(|c| c.norm() == 0.0) {
            return Err(Error::InvalidInput("coefficients must be nonzero".into()));
        }
        Ok(LabeledProjection { positions, coeffs })
    }

    /// Sorts `(position, coefficient)` pairs and shifts the smallest position to 0.
    pub fn from_unsorted(positions: &[f64], coeffs: &[Complex64]) -> Result<Self> {
        let mut pairs: Vec<(f64, Complex64)> = positions
            .iter()
            .copied()
            .zip(coeffs.iter().copied())
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let base = pairs.first().map_or(0.0, |p| p.0);
        let (p, c) = pairs.into_iter().map(|(t, c)| (t - base, c)).unzip();
        LabeledProjection::new(p, c)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn moduli(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.norm()).collect()
    }

    /// Largest position, `T_N`.
    pub fn extent(&self) -> f64 {
        *self.positions.last().unwrap()
    }

    /// Conjugate reflection `t → T_N − t`, `c → c̄`, re-sorted.
    pub fn reflected(&self) -> LabeledProjection {
        let extent = self.extent();
        let positions = self.positions.iter().rev().map(|t| extent - t).collect();
        let coeffs = self.coeffs.iter().rev().map(|c| c.conj()).collect();
        LabeledProjection { positions, coeffs }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoolEntry {
    pub tau: f64,
    pub gamma: Complex64,
    pub consumed: bool,
}

/// Positive frequencies of the intensity with their amplitudes, in increasing `τ`.
#[derive(Debug, Clone)]
pub struct DifferencePool {
    entries: Vec<PoolEntry>,
}

impl DifferencePool {
    pub fn new(terms: &[Term]) -> Self {
        let mut entries: Vec<PoolEntry> = terms
            .iter()
            .map(|t| PoolEntry {
                tau: t.tau,
                gamma: t.gamma,
                consumed: false,
            })
            .collect();
        entries.sort_by(|a, b| a.tau.total_cmp(&b.tau));
        DifferencePool { entries }
    }

    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn remaining(&self) -> usize {
        self.entries.iter().filter(|e| !e.consumed).count()
    }

    pub fn largest_unconsumed(&self) -> Option<usize> {
        self.entries.iter().rposition(|e| !e.consumed)
    }

    /// The unique entry within `tol` of `target`; with `unconsumed_only`
    /// consumed entries are ignored.
    pub fn find(&self, target: f64, tol: f64, unconsumed_only: bool) -> Result<usize> {
        let mut hits = self
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| !(unconsumed_only && e.consumed))
            .filter(|(_, e)| (e.tau - target).abs() <= tol);
        match (hits.next(), hits.next()) {
            (Some((i, _)), None) => Ok(i),
            _ => Err(Error::MatchNotFound { target, tol }),
        }
    }

    fn consume(&mut self, index: usize) -> Result<()> {
        let entry = &mut self.entries[index];
        if entry.consumed {
            return Err(Error::MatchNotFound {
                target: entry.tau,
                tol: 0.0,
            });
        }
        entry.consumed = true;
        Ok(())
    }

    /// Consumes the unconsumed entry matching `target`.
    fn consume_match(&mut self, target: f64, tol: f64) -> Result<()> {
        let index = self.find(target, tol, true)?;
        self.consume(index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineOptions {
    /// Frequency matching tolerance; `None` picks
    /// `min(0.25 · smallest frequency gap, 1e−6 · τ_L)`.
    pub match_tol: Option<f64>,
    /// Relative tolerance for the `|c_1| ≠ |c_N|` hypothesis.
    pub outer_tie_tol: f64,
    pub circle_tolerance: f64,
    pub amp_threshold: Option<f64>,
    /// Order handed to APM; `None` picks `min(2L, ⌊(M−1)/4⌋)`.
    pub prony_order: Option<usize>,
}

impl Default for LineOptions {
    fn default() -> Self {
        LineOptions {
            match_tol: None,
            outer_tie_tol: DEFAULT_OUTER_TIE_TOL,
            circle_tolerance: 1e-6,
            amp_threshold: None,
            prony_order: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LineDiagnostics {
    pub terms: usize,
    pub match_tol: f64,
    pub pool_size: usize,
    pub consumed: usize,
}

pub fn retrieve_line(
    samples: &LineSampleSet,
    kernel: &StructureKernel,
    n: usize,
    opts: &LineOptions,
) -> Result<LabeledProjection> {
    retrieve_line_detailed(samples, kernel, n, opts).map(|(p, _)| p)
}

pub fn retrieve_line_detailed(
    samples: &LineSampleSet,
    kernel: &StructureKernel,
    n: usize,
    opts: &LineOptions,
) -> Result<(LabeledProjection, LineDiagnostics)> {
    samples.validate()?;
    kernel.validate()?;
    if n == 0 {
        return Err(Error::InvalidInput(
            "number of atoms must be positive".into(),
        ));
    }
    let required = 2 * n * (n - 1) + 1;
    if samples.m_max() < required {
        return Err(Error::InvalidInput(format!(
            "M = {} but N = {n} needs M >= {required}",
            samples.m_max()
        )));
    }
    let e = samples.deconvolved(kernel)?;
    if n == 1 {
        let mean = e.iter().sum::<f64>() / e.len() as f64;
        let projection = LabeledProjection::new(vec![0.0], vec![Complex64::new(mean.sqrt(), 0.0)])?;
        return Ok((
            projection,
            LineDiagnostics {
                terms: 1,
                ..Default::default()
            },
        ));
    }
    let l = n * (n - 1) / 2;
    let sum = fit_exponential_sum(&e, samples.step, l, opts)?;
    recover_from_sum(&sum, n, opts)
}

/// Runs APM with an overestimated order. If that does not give `l` positive
/// frequencies that reproduce the samples, retries with the shift-pencil root
/// extraction, looser unit-circle tolerances and other orders, keeping the `l`
/// dominant terms and polishing them. A candidate is accepted only if it
/// reproduces the samples.
fn fit_exponential_sum(
    e: &[f64],
    step: f64,
    l: usize,
    opts: &LineOptions,
) -> Result<ExponentialSum> {
    let m_max = e.len() - 1;
    let widest = (m_max - 1) / 4;
    let first = opts
        .prony_order
        .unwrap_or_else(|| (2 * l).min(widest))
        .max(l);
    let mut loose = vec![opts.circle_tolerance];
    loose.extend(
        FALLBACK_CIRCLE_TOLERANCES
            .iter()
            .filter(|t| **t > opts.circle_tolerance),
    );
    let strict = vec![opts.circle_tolerance];
    // Loose circle tolerances only after the pencil: a polynomial fit admitted
    // that way can reproduce the samples to 1e−9 with frequencies still 1e−5 off.
    let mut attempts = vec![(RootMethod::Polynomial, first, strict)];
    if opts.prony_order.is_none() {
        attempts.push((RootMethod::Pencil, l, loose.clone()));
        let mut more: Vec<usize> = vec![first];
        more.extend(
            [widest.min(4 * l).max(l), l]
                .into_iter()
                .filter(|o| *o != first),
        );
        more.dedup();
        attempts.extend(
            more.into_iter()
                .map(|o| (RootMethod::Polynomial, o, loose.clone())),
        );
    } else {
        attempts[0].2 = loose;
    }
    let scale = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));

    let mut last_err = None;
    for (method, order, tolerances) in &attempts {
        let mut config = PronyConfig::new(*order, step);
        config.amp_threshold = opts.amp_threshold;
        config.method = *method;
        for &tol in tolerances {
            config.circle_tolerance = tol;
            let sum = match apm(e, &config) {
                Ok(sum) => sum,
                Err(err @ (Error::NoUnimodularRoots | Error::RankDeficient(_))) => {
                    last_err = Some(err);
                    continue;
                }
                Err(err) => return Err(err),
            };
            let found = sum.term_count();
            let candidate = if sum.order() == l {
                sum
            } else if sum.order() > l {
                refine(e, step, &dominant_terms(&sum, l)?)
            } else {
                last_err = Some(Error::WrongTermCount {
                    expected: 2 * l + 1,
                    found,
                });
                continue;
            };
            if max_residual(e, step, &candidate) <= FIT_TOLERANCE * scale {
                return Ok(candidate);
            }
            last_err = Some(Error::WrongTermCount {
                expected: 2 * l + 1,
                found,
            });
        }
    }
    Err(last_err.unwrap_or(Error::NoUnimodularRoots))
}

fn dominant_terms(sum: &ExponentialSum, l: usize) -> Result<ExponentialSum> {
    let mut by_amp: Vec<Term> = sum.positive_terms().to_vec();
    by_amp.sort_by(|a, b| b.gamma.norm().total_cmp(&a.gamma.norm()));
    by_amp.truncate(l);
    by_amp.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let mut terms = vec![sum.terms()[0]];
    terms.extend(by_amp);
    ExponentialSum::new(terms)
}

fn max_residual(e: &[f64], step: f64, sum: &ExponentialSum) -> f64 {
    e.iter()
        .enumerate()
        .map(|(m, v)| (sum.evaluate(step * m as f64) - v).abs())
        .fold(0.0, f64::max)
}

/// Keeps exactly `L` positive terms, or fails with `WrongTermCount`.
fn select_terms(sum: &ExponentialSum, l: usize) -> Result<Vec<Term>> {
    let expected = 2 * l + 1;
    let found = sum.term_count();
    let positive = sum.positive_terms();
    if positive.len() < l {
        return Err(Error::WrongTermCount { expected, found });
    }
    if positive.len() == l {
        return Ok(positive.to_vec());
    }
    let mut by_amp: Vec<Term> = positive.to_vec();
    by_amp.sort_by(|a, b| b.gamma.norm().total_cmp(&a.gamma.norm()));
    let scale = by_amp[0].gamma.norm().max(sum.constant().abs());
    if by_amp[l..].iter().any(|t| t.gamma.norm() >= 1e-6 * scale) {
        return Err(Error::WrongTermCount { expected, found });
    }
    by_amp.truncate(l);
    by_amp.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    Ok(by_amp)
}

/// Disentangles the difference pool of an exponential sum into `n` atoms.
pub fn recover_from_sum(
    sum: &ExponentialSum,
    n: usize,
    opts: &LineOptions,
) -> Result<(LabeledProjection, LineDiagnostics)> {
    if n < 2 {
        return Err(Error::InvalidInput(
            "support recovery from differences needs at least two atoms".into(),
        ));
    }
    let l = n * (n - 1) / 2;
    let terms = select_terms(sum, l)?;
    let mut pool = DifferencePool::new(&terms);
    let tau_max = pool.entries()[l - 1].tau;
    let match_tol = opts.match_tol.unwrap_or_else(|| {
        let mut gap = pool.entries()[0].tau;
        for w in pool.entries().windows(2) {
            gap = gap.min(w[1].tau - w[0].tau);
        }
        (0.25 * gap).min(1e-6 * tau_max)
    });
    let mut diag = LineDiagnostics {
        terms: 2 * l + 1,
        match_tol,
        pool_size: l,
        consumed: 0,
    };

    if n == 2 {
        // |c_1|² and |c_2|² are the roots of x² − γ_0 x + |γ_1|².
        let entry = pool.entries()[0];
        let g0 = sum.constant();
        let disc = (g0 * g0 - 4.0 * entry.gamma.norm_sqr()).max(0.0).sqrt();
        let c1 = (0.5 * (g0 + disc)).sqrt();
        let c2 = entry.gamma / c1;
        pool.consume(0)?;
        diag.consumed = 1;
        let projection =
            LabeledProjection::new(vec![0.0, entry.tau], vec![Complex64::new(c1, 0.0), c2])?;
        return Ok((projection, diag));
    }

    let last = l - 1;
    let second = l - 2;
    let t_n = pool.entries()[last].tau;
    let t_n1 = pool.entries()[second].tau;
    let g_last = pool.entries()[last].gamma;
    let g_second = pool.entries()[second].gamma;
    let inner = pool.find(t_n - t_n1, match_tol, false)?;
    if inner == last || inner == second {
        return Err(Error::MatchNotFound {
            target: t_n - t_n1,
            tol: match_tol,
        });
    }
    let g_inner = pool.entries()[inner].gamma;
    let c1 = (g_last * g_second.conj() / g_inner).norm().sqrt();
    let c_n = g_last / c1;
    let c_n1 = g_second / c1;
    if (c1 - c_n.norm()).abs() <= opts.outer_tie_tol * c1.max(c_n.norm()) {
        return Err(Error::OuterModulusTie {
            first: c1,
            last: c_n.norm(),
        });
    }
    for index in [last, second, inner] {
        pool.consume(index)?;
    }

    let mut positions = vec![0.0, t_n, t_n1];
    let mut coeffs = vec![Complex64::new(c1, 0.0), c_n, c_n1];
    while let Some(big) = pool.largest_unconsumed() {
        if positions.len() == n {
            return Err(Error::WrongTermCount {
                expected: 2 * l + 1,
                found: 2 * l + 1 + 2 * pool.remaining(),
            });
        }
        let big_entry = pool.entries()[big];
        let partner = pool.find(t_n - big_entry.tau, match_tol, false)?;
        let partner_entry = pool.entries()[partner];
        let d_right = big_entry.gamma / c1;
        let d_left = partner_entry.gamma / c1;
        let res_right = (c_n * d_right.conj() - partner_entry.gamma).norm();
        let res_left = (c_n * d_left.conj() - big_entry.gamma).norm();
        if (res_right - res_left).abs() <= PLACEMENT_TIE_TOL * res_right.max(res_left) {
            return Err(Error::OuterModulusTie {
                first: c1,
                last: c_n.norm(),
            });
        }
        let (position, coeff) = if res_right < res_left {
            (big_entry.tau, d_right)
        } else {
            (partner_entry.tau, d_left)
        };
        for &other in &positions {
            pool.consume_match((position - other).abs(), match_tol)?;
        }
        positions.push(position);
        coeffs.push(coeff);
    }
    if positions.len() != n {
        return Err(Error::WrongTermCount {
            expected: n * (n - 1) + 1,
            found: positions.len() * (positions.len() - 1) + 1,
        });
    }
    diag.consumed = l - pool.remaining();
    Ok((LabeledProjection::from_unsorted(&positions, &coeffs)?, diag))
}

/// Certification of the univariate recovery hypotheses for a candidate instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisReport {
    pub collision_free: bool,
    pub min_difference_gap: f64,
    /// `||c_1| − |c_N|| / max(|c_1|, |c_N|)` for the outermost atoms.
    pub outer_modulus_separation: f64,
    pub outer_moduli_distinct: bool,
}

impl HypothesisReport {
    pub fn passes(&self) -> bool {
        self.collision_free && self.outer_moduli_distinct
    }
}

pub fn assert_hypotheses(positions: &[f64], moduli: &[f64], gap: f64) -> HypothesisReport {
    let min_gap = min_difference_gap(positions);
    let (mut lo, mut hi) = (0usize, 0usize);
    for (i, p) in positions.iter().enumerate() {
        if *p < positions[lo] {
            lo = i;
        }
        if *p > positions[hi] {
            hi = i;
        }
    }
    let separation = if positions.len() < 2 {
        1.0
    } else {
        let (a, b) = (moduli[lo], moduli[hi]);
        (a - b).abs() / a.max(b)
    };
    HypothesisReport {
        collision_free: min_gap > gap,
        min_difference_gap: min_gap,
        outer_modulus_separation: separation,
        outer_moduli_distinct: positions.len() < 3 || separation > DEFAULT_OUTER_TIE_TOL,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SparseSignal;

    fn cx(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn samples(coeffs: &[Complex64], positions: &[f64], h: f64, m: usize) -> LineSampleSet {
        let t: Vec<Vec<f64>> = positions.iter().map(|&p| vec![p]).collect();
        SparseSignal::from_parts(StructureKernel::Dirac, coeffs, &t)
            .unwrap()
            .sample_line(&[1.0], h, m)
            .unwrap()
    }

    /// Equal to `truth` up to global phase, or to its conjugate reflection.
    fn equivalent(
        got: &LabeledProjection,
        positions: &[f64],
        coeffs: &[Complex64],
        tol: f64,
    ) -> bool {
        let truth = LabeledProjection::from_unsorted(positions, coeffs).unwrap();
        [truth.clone(), truth.reflected()].iter().any(|t| {
            let phase = t.coeffs()[0] / t.coeffs()[0].norm();
            let anchor = got.coeffs()[0] / got.coeffs()[0].norm();
            let rot = anchor / phase;
            t.positions()
                .iter()
                .zip(got.positions())
                .all(|(a, b)| (a - b).abs() < tol)
                && t.coeffs()
                    .iter()
                    .zip(got.coeffs())
                    .all(|(a, b)| (a * rot - b).norm() < tol)
        })
    }

    #[test]
    fn single_atom() {
        let s = samples(&[cx(3.0, 4.0)], &[2.0], 0.5, 1);
        let got = retrieve_line(&s, &StructureKernel::Dirac, 1, &LineOptions::default()).unwrap();
        assert_eq!(got.positions(), &[0.0]);
        assert!((got.coeffs()[0].norm() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn two_atoms() {
        let coeffs = [cx(1.0, 0.0), cx(0.0, 2.0)];
        let s = samples(&coeffs, &[0.0, 1.0], 1.0, 8);
        let got = retrieve_line(&s, &StructureKernel::Dirac, 2, &LineOptions::default()).unwrap();
        assert!(equivalent(&got, &[0.0, 1.0], &coeffs, 1e-8), "{got:?}");
    }

    #[test]
    fn four_atoms_with_gaussian_kernel() {
        let coeffs = [cx(1.0, 0.5), cx(-2.0, 0.3), cx(0.4, 1.1), cx(2.5, -1.0)];
        let positions = [0.3, 1.4, 4.1, 5.0];
        let kernel = StructureKernel::gaussian(0.2).unwrap();
        let t: Vec<Vec<f64>> = positions.iter().map(|&p| vec![p]).collect();
        let s = SparseSignal::from_parts(kernel, &coeffs, &t)
            .unwrap()
            .sample_line(&[1.0], 0.3, 40)
            .unwrap();
        let got = retrieve_line(&s, &kernel, 4, &LineOptions::default()).unwrap();
        assert!(equivalent(&got, &positions, &coeffs, 1e-7), "{got:?}");
    }

    #[test]
    fn exact_sum_recovery_without_prony() {
        let coeffs = [
            cx(1.0, 0.0),
            cx(3.0, 1.0),
            cx(-0.5, 2.0),
            cx(1.5, -1.5),
            cx(0.2, 0.9),
        ];
        let positions = [0.0, 1.0, 3.5, 7.25, 8.0];
        let sum = ExponentialSum::from_point_signal(&coeffs, &positions).unwrap();
        let (got, diag) = recover_from_sum(&sum, 5, &LineOptions::default()).unwrap();
        assert_eq!(diag.consumed, 10);
        assert!(equivalent(&got, &positions, &coeffs, 1e-12), "{got:?}");
    }

    #[test]
    fn too_few_samples() {
        let s = samples(
            &[cx(1.0, 0.0), cx(2.0, 0.0), cx(3.0, 0.0)],
            &[0.0, 1.0, 3.0],
            0.3,
            12,
        );
        assert!(matches!(
            retrieve_line(&s, &StructureKernel::Dirac, 3, &LineOptions::default()),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn wrong_atom_count_is_detected() {
        let coeffs = [cx(1.0, 0.0), cx(2.0, 0.5), cx(0.7, -1.0)];
        let s = samples(&coeffs, &[0.0, 1.0, 3.0], 0.3, 40);
        let err = retrieve_line(&s, &StructureKernel::Dirac, 4, &LineOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn equal_outer_moduli_are_rejected() {
        let coeffs = [cx(1.0, 0.0), cx(2.0, 0.5), cx(0.3, 0.1), cx(0.0, 1.0)];
        let sum = ExponentialSum::from_point_signal(&coeffs, &[0.0, 1.0, 3.0, 7.0]).unwrap();
        assert!(matches!(
            recover_from_sum(&sum, 4, &LineOptions::default()),
            Err(Error::OuterModulusTie { .. })
        ));
    }

    #[test]
    fn colliding_support_fails_matching() {
        // differences 1, 1, 2 collide; the pool has only two distinct entries
        let sum = ExponentialSum::from_point_signal(
            &[cx(1.0, 0.0), cx(2.0, 0.0), cx(3.0, 0.0)],
            &[0.0, 1.0, 2.0],
        )
        .unwrap();
        assert!(recover_from_sum(&sum, 3, &LineOptions::default()).is_err());
    }

    #[test]
    fn reflection_is_an_involution() {
        let p = LabeledProjection::new(
            vec![0.0, 1.0, 4.0],
            vec![cx(1.0, 1.0), cx(2.0, 0.0), cx(0.0, -3.0)],
        )
        .unwrap();
        let r = p.reflected();
        assert_eq!(r.positions(), &[0.0, 3.0, 4.0]);
        assert_eq!(r.coeffs()[0], cx(0.0, 3.0));
        assert_eq!(r.reflected(), p);
    }

    #[test]
    fn hypothesis_examples() {
        assert!(assert_hypotheses(&[0.0, 1.0, 3.0], &[1.0, 5.0, 2.0], 1e-9).passes());
        let bad = assert_hypotheses(&[0.0, 1.0, 2.0], &[1.0, 5.0, 2.0], 1e-9);
        assert!(!bad.collision_free && !bad.passes());
        assert!(!assert_hypotheses(&[0.0, 1.0, 3.0], &[2.0, 5.0, 2.0], 1e-9).passes());
    }
}
