//! Approximative Prony method for symmetric non-negative exponential sums
//!
//! `E(ω) = γ_0 + Σ_{ℓ=1}^{L} (γ_ℓ e^{−iωτ_ℓ} + γ̄_ℓ e^{iωτ_ℓ})`
//!
//! Parameters are estimated from the equispaced samples `E(hm)`, `m = 0..=M`:
//! the kernel vector of the sample Hankel matrix gives the Prony polynomial,
//! its unimodular roots the frequencies, and an over-determined Vandermonde
//! system the amplitudes.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One non-negative frequency of an [`ExponentialSum`] with its amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub tau: f64,
    pub gamma: Complex64,
}

/// Symmetric exponential sum, stored through its terms `ℓ = 0..=L`.
///
/// The negative half is implied by `τ_{−ℓ} = −τ_ℓ`, `γ_{−ℓ} = γ̄_ℓ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SumRepr")]
pub struct ExponentialSum {
    terms: Vec<Term>,
}

#[derive(Deserialize)]
struct SumRepr {
    terms: Vec<Term>,
}

impl TryFrom<SumRepr> for ExponentialSum {
    type Error = Error;

    fn try_from(repr: SumRepr) -> Result<Self> {
        ExponentialSum::new(repr.terms)
    }
}

impl ExponentialSum {
    /// `terms[0]` must be the real constant term at `τ = 0`; the remaining
    /// frequencies must be positive and strictly increasing.
    pub fn new(terms: Vec<Term>) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::InvalidInput("exponential sum needs a constant term".into()))?;
        if first.tau != 0.0 || first.gamma.im != 0.0 {
            return Err(Error::InvalidInput(
                "constant term must sit at tau = 0 with a real amplitude".into(),
            ));
        }
        for w in terms.windows(2) {
            if !(w[1].tau > w[0].tau) {
                return Err(Error::InvalidInput(
                    "frequencies must be strictly increasing".into(),
                ));
            }
        }
        if terms.iter().any(|t| t.gamma.norm() == 0.0) {
            return Err(Error::InvalidInput("amplitudes must be nonzero".into()));
        }
        Ok(ExponentialSum { terms })
    }

    /// Collects `c_n c̄_k` at `τ = t_n − t_k` for a univariate point signal,
    /// merging frequencies that agree exactly.
    pub fn from_point_signal(coeffs: &[Complex64], positions: &[f64]) -> Result<Self> {
        let mut dc = 0.0;
        let mut pairs: Vec<Term> = Vec::new();
        for (n, (&cn, &tn)) in coeffs.iter().zip(positions).enumerate() {
            dc += cn.norm_sqr();
            for (k, (&ck, &tk)) in coeffs.iter().zip(positions).enumerate() {
                if n == k || tn <= tk {
                    continue;
                }
                let tau = tn - tk;
                let gamma = cn * ck.conj();
                match pairs.iter_mut().find(|t| t.tau == tau) {
                    Some(t) => t.gamma += gamma,
                    None => pairs.push(Term { tau, gamma }),
                }
            }
        }
        pairs.sort_by(|a, b| a.tau.total_cmp(&b.tau));
        let mut terms = vec![Term {
            tau: 0.0,
            gamma: Complex64::new(dc, 0.0),
        }];
        terms.extend(pairs);
        ExponentialSum::new(terms)
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    /// `L`, the number of positive frequencies.
    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    /// Total number of terms `2L + 1`.
    pub fn term_count(&self) -> usize {
        2 * self.order() + 1
    }

    pub fn constant(&self) -> f64 {
        self.terms[0].gamma.re
    }

    pub fn positive_terms(&self) -> &[Term] {
        &self.terms[1..]
    }

    /// All `2L + 1` pairs `(τ_ℓ, γ_ℓ)`, `ℓ = −L..=L`, in increasing `τ`.
    pub fn full_spectrum(&self) -> Vec<(f64, Complex64)> {
        let mut out: Vec<(f64, Complex64)> = self
            .positive_terms()
            .iter()
            .rev()
            .map(|t| (-t.tau, t.gamma.conj()))
            .collect();
        out.extend(self.terms.iter().map(|t| (t.tau, t.gamma)));
        out
    }

    pub fn evaluate(&self, omega: f64) -> f64 {
        self.constant()
            + self
                .positive_terms()
                .iter()
                .map(|t| 2.0 * (t.gamma * Complex64::cis(-omega * t.tau)).re)
                .sum::<f64>()
    }

    pub fn sample(&self, step: f64, m_max: usize) -> Vec<f64> {
        (0..=m_max)
            .map(|m| self.evaluate(step * m as f64))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PronyConfig {
    /// Upper estimate for `L`.
    pub l_max: usize,
    /// Sampling step `h`.
    pub step: f64,
    /// Terms with `|γ_ℓ|` below this are dropped; `None` means `1e−8 · max_m |E(hm)|`.
    pub amp_threshold: Option<f64>,
    /// Roots with `||z| − 1|` above this are discarded.
    pub circle_tolerance: f64,
    /// Polish the fitted parameters against the samples with [`refine`].
    pub refine: bool,
    pub method: RootMethod,
}

/// How the frequencies are extracted from the sample Hankel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RootMethod {
    /// Roots of the polynomial given by the Hankel kernel vector.
    #[default]
    Polynomial,
    /// Eigenvalues of the shift operator on the dominant `2L + 1` dimensional
    /// row space. `l_max` is then taken as the exact order. Avoids forming the
    /// polynomial, whose roots are badly conditioned when frequencies cluster.
    Pencil,
}

impl PronyConfig {
    pub fn new(l_max: usize, step: f64) -> Self {
        PronyConfig {
            l_max,
            step,
            amp_threshold: None,
            circle_tolerance: 1e-6,
            refine: true,
            method: RootMethod::Polynomial,
        }
    }
}

/// APM output together with the intermediate quantities it was derived from.
#[derive(Debug, Clone)]
pub struct PronyFit {
    pub sum: ExponentialSum,
    /// Coefficients `λ_0..λ_{2L+1}` of the Prony polynomial (unit norm, positive leading);
    /// empty for [`RootMethod::Pencil`].
    pub lambda: Vec<f64>,
    /// Singular values of the Hankel matrix, descending.
    pub singular_values: Vec<f64>,
    /// All roots of the Prony polynomial before the unit-circle filter.
    pub roots: Vec<Complex64>,
    /// Imaginary part of the fitted constant term before it was discarded.
    pub dc_imag: f64,
}

pub fn apm(samples: &[f64], config: &PronyConfig) -> Result<ExponentialSum> {
    apm_fit(samples, config).map(|fit| fit.sum)
}

pub fn apm_fit(samples: &[f64], config: &PronyConfig) -> Result<PronyFit> {
    let l = config.l_max;
    if l == 0 {
        return Err(Error::InvalidInput("l_max must be at least 1".into()));
    }
    if !(config.step > 0.0 && config.step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "step must be positive, got {}",
            config.step
        )));
    }
    if config.circle_tolerance < 0.0 || config.amp_threshold.is_some_and(|a| a < 0.0) {
        return Err(Error::InvalidInput(
            "tolerances must be non-negative".into(),
        ));
    }
    if samples.len() < 4 * l + 2 {
        return Err(Error::InvalidInput(format!(
            "{} samples given, APM with L = {l} needs M >= {} (i.e. {} samples)",
            samples.len(),
            4 * l + 1,
            4 * l + 2
        )));
    }
    if let Some(bad) = samples.iter().find(|v| !v.is_finite()) {
        return Err(Error::InvalidInput(format!("non-finite sample {bad}")));
    }
    let scale = samples.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if !(scale > 0.0) {
        return Err(Error::RankDeficient(scale));
    }
    let e: Vec<f64> = samples.iter().map(|v| v / scale).collect();
    let (lambda, singular_values, roots) = match config.method {
        RootMethod::Polynomial => polynomial_roots(&e, l, scale)?,
        RootMethod::Pencil => pencil_roots(&e, 2 * l + 1, scale)?,
    };
    let kept: Vec<Complex64> = roots
        .iter()
        .copied()
        .filter(|z| (z.norm() - 1.0).abs() <= config.circle_tolerance)
        .collect();
    if kept.is_empty() {
        return Err(Error::NoUnimodularRoots);
    }

    let mut taus = pair_frequencies(&kept, config.step);
    let threshold = config.amp_threshold.unwrap_or(1e-8 * scale) / scale;
    let (mut amps, mut dc, mut dc_imag) = vandermonde_fit(&e, &taus, config.step)?;
    let keep: Vec<bool> = amps.iter().map(|g| g.norm() >= threshold).collect();
    if keep.iter().any(|k| !k) {
        taus = taus
            .into_iter()
            .zip(&keep)
            .filter_map(|(t, &k)| k.then_some(t))
            .collect();
        (amps, dc, dc_imag) = vandermonde_fit(&e, &taus, config.step)?;
    }
    let mut terms = vec![Term {
        tau: 0.0,
        gamma: Complex64::new(dc * scale, 0.0),
    }];
    terms.extend(taus.iter().zip(&amps).map(|(&tau, &g)| Term {
        tau,
        gamma: g * scale,
    }));
    let mut sum = ExponentialSum::new(terms)?;
    if config.refine {
        sum = refine(samples, config.step, &sum);
    }
    Ok(PronyFit {
        sum,
        lambda,
        singular_values,
        roots,
        dc_imag: dc_imag * scale,
    })
}

type RootStage = (Vec<f64>, Vec<f64>, Vec<Complex64>);

fn polynomial_roots(e: &[f64], l: usize, scale: f64) -> Result<RootStage> {
    let m_max = e.len() - 1;

    // (E(h(k+m)))_{m,k}, m = 0..M−2L−1, k = 0..2L+1; zero rows are appended
    // when the matrix is wide so the thin SVD still exposes the kernel vector.
    let rows = m_max - 2 * l;
    let cols = 2 * l + 2;
    let hankel = DMatrix::from_fn(
        rows.max(cols),
        cols,
        |m, k| if m < rows { e[m + k] } else { 0.0 },
    );
    let svd = hankel.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i] * scale)
        .collect();
    let s_max = singular_values[0];
    if !(s_max > f64::EPSILON * scale) {
        return Err(Error::RankDeficient(s_max));
    }
    let smallest = *order.last().unwrap();
    let mut lambda: Vec<f64> = v_t.row(smallest).iter().copied().collect();
    let lead = lambda
        .iter()
        .rev()
        .copied()
        .find(|x| x.abs() > 1e-14)
        .unwrap_or(1.0);
    if lead < 0.0 {
        lambda.iter_mut().for_each(|x| *x = -*x);
    }

    let roots = poly_roots(&lambda);
    Ok((lambda, singular_values, roots))
}

fn pencil_roots(e: &[f64], rank: usize, scale: f64) -> Result<RootStage> {
    let n = e.len();
    let cols = (n / 2).max(rank + 1);
    let rows = n + 1 - cols;
    let hankel = DMatrix::from_fn(rows, cols, |m, k| e[m + k]);
    let svd = hankel.svd(false, true);
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order
        .iter()
        .map(|&i| svd.singular_values[i] * scale)
        .collect();
    let s_max = singular_values[0];
    if !(s_max > f64::EPSILON * scale) {
        return Err(Error::RankDeficient(s_max));
    }
    // Row space basis V; with B the (z^k) Vandermonde columns, V = BT and the
    // one-step shift gives V_2 = V_1 T⁻¹ diag(z) T.
    let v = DMatrix::from_fn(cols, rank, |k, j| v_t[(order[j], k)]);
    let v1 = v.rows(0, cols - 1).into_owned();
    let v2 = v.rows(1, cols - 1).into_owned();
    let phi = v1
        .svd(true, true)
        .solve(&v2, 1e-14)
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let roots = phi.complex_eigenvalues().iter().copied().collect();
    Ok((Vec::new(), singular_values, roots))
}

/// Positive frequencies from unimodular roots `z = e^{−ihτ}`, conjugate pairs averaged.
///
/// Real roots near `+1` belong to `τ_0 = 0`, which is always part of the model;
/// real roots near `−1` lie on the aliasing boundary and are dropped.
fn pair_frequencies(roots: &[Complex64], step: f64) -> Vec<f64> {
    let mut lower: Vec<Complex64> = roots.iter().copied().filter(|z| z.im < 0.0).collect();
    let mut upper: Vec<Complex64> = roots.iter().copied().filter(|z| z.im > 0.0).collect();
    lower.sort_by(|a, b| a.arg().total_cmp(&b.arg()));
    upper.sort_by(|a, b| a.arg().total_cmp(&b.arg()));

    let mut taus = Vec::with_capacity(lower.len().max(upper.len()));
    let mut used = vec![false; upper.len()];
    for z in &lower {
        let partner = upper
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .min_by(|(_, a), (_, b)| {
                (a.conj().arg() - z.arg())
                    .abs()
                    .total_cmp(&(b.conj().arg() - z.arg()).abs())
            })
            .map(|(j, w)| (j, *w));
        let merged = match partner {
            Some((j, w)) if (w.conj().arg() - z.arg()).abs() < 1e-6 => {
                used[j] = true;
                (z + w.conj()) * 0.5
            }
            _ => *z,
        };
        taus.push(-merged.arg() / step);
    }
    for (j, w) in upper.iter().enumerate() {
        if !used[j] {
            taus.push(w.arg() / step);
        }
    }
    taus.retain(|t| t * step > 1e-9);
    taus.sort_by(f64::total_cmp);
    taus
}

/// Least-squares amplitudes on the full symmetric frequency set, re-symmetrized.
///
/// Returns the positive-frequency amplitudes, the real constant term and the
/// discarded imaginary part of the constant term.
fn vandermonde_fit(e: &[f64], taus: &[f64], step: f64) -> Result<(Vec<Complex64>, f64, f64)> {
    let k = taus.len();
    let cols = 2 * k + 1;
    let mut freqs = Vec::with_capacity(cols);
    freqs.push(0.0);
    freqs.extend(taus.iter().copied());
    freqs.extend(taus.iter().map(|t| -t));
    let v = DMatrix::from_fn(e.len(), cols, |m, j| {
        Complex64::cis(-step * m as f64 * freqs[j])
    });
    let b = DVector::from_iterator(e.len(), e.iter().map(|&x| Complex64::new(x, 0.0)));
    let x = v
        .svd(true, true)
        .solve(&b, 1e-14)
        .map_err(|msg| Error::InvalidInput(msg.to_string()))?;
    let amps = (0..k)
        .map(|j| (x[1 + j] + x[1 + k + j].conj()) * 0.5)
        .collect();
    Ok((amps, x[0].re, x[0].im))
}

fn model_residual(e: &[f64], params: &[f64], l: usize) -> Vec<f64> {
    e.iter()
        .enumerate()
        .map(|(m, &v)| {
            let mut f = params[0];
            for j in 0..l {
                let phase = m as f64 * params[1 + 2 * l + j];
                f += 2.0 * (params[1 + 2 * j] * phase.cos() + params[2 + 2 * j] * phase.sin());
            }
            f - v
        })
        .collect()
}

/// Levenberg–Marquardt polish of all frequencies and amplitudes against the
/// samples `E(hm)`, keeping the number of terms fixed.
///
/// Falls back to `sum` unchanged if the iteration does not lower the residual
/// or would break the ordering of the frequencies.
pub fn refine(samples: &[f64], step: f64, sum: &ExponentialSum) -> ExponentialSum {
    let l = sum.order();
    let scale = samples.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    if l == 0 || !(scale > 0.0) || !scale.is_finite() || samples.len() < 3 * l + 1 {
        return sum.clone();
    }
    let e: Vec<f64> = samples.iter().map(|v| v / scale).collect();
    // [γ_0, Re γ_1, Im γ_1, …, Re γ_L, Im γ_L, hτ_1, …, hτ_L]
    let mut params = Vec::with_capacity(1 + 3 * l);
    params.push(sum.constant() / scale);
    for t in sum.positive_terms() {
        params.push(t.gamma.re / scale);
        params.push(t.gamma.im / scale);
    }
    params.extend(sum.positive_terms().iter().map(|t| t.tau * step));
    let p = params.len();
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let mut residual = model_residual(&e, &params, l);
    let initial_cost = cost(&residual);
    let mut current = initial_cost;
    let mut mu: f64 = 1e-6;
    for _ in 0..100 {
        if current <= 1e-32 * e.len() as f64 {
            break;
        }
        let jac = DMatrix::from_fn(e.len(), p, |m, k| {
            let mf = m as f64;
            if k == 0 {
                1.0
            } else if k <= 2 * l {
                let j = (k - 1) / 2;
                let phase = mf * params[1 + 2 * l + j];
                if k % 2 == 1 {
                    2.0 * phase.cos()
                } else {
                    2.0 * phase.sin()
                }
            } else {
                let j = k - 1 - 2 * l;
                let phase = mf * params[k];
                let (a, b) = (params[1 + 2 * j], params[2 + 2 * j]);
                2.0 * mf * (b * phase.cos() - a * phase.sin())
            }
        });
        let mut improved = false;
        for _ in 0..30 {
            let diag: Vec<f64> = (0..p).map(|k| jac.column(k).norm().max(1e-300)).collect();
            let aug = DMatrix::from_fn(e.len() + p, p, |i, k| {
                if i < e.len() {
                    jac[(i, k)]
                } else if i - e.len() == k {
                    mu.sqrt() * diag[k]
                } else {
                    0.0
                }
            });
            let rhs = DVector::from_fn(
                e.len() + p,
                |i, _| if i < e.len() { -residual[i] } else { 0.0 },
            );
            let Ok(delta) = aug.svd(true, true).solve(&rhs, 0.0) else {
                break;
            };
            let trial: Vec<f64> = params
                .iter()
                .zip(delta.iter())
                .map(|(x, d)| x + d)
                .collect();
            let trial_residual = model_residual(&e, &trial, l);
            let trial_cost = cost(&trial_residual);
            if trial_cost < current {
                let rel_step = delta.norm() / DVector::from_column_slice(&params).norm();
                params = trial;
                residual = trial_residual;
                let gain = current - trial_cost;
                current = trial_cost;
                mu = (mu / 10.0).max(1e-15);
                improved = gain > 1e-15 * current || rel_step > 1e-15;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !(current < initial_cost) {
        return sum.clone();
    }
    let mut terms = vec![Term {
        tau: 0.0,
        gamma: Complex64::new(params[0] * scale, 0.0),
    }];
    terms.extend((0..l).map(|j| Term {
        tau: params[1 + 2 * l + j] / step,
        gamma: Complex64::new(params[1 + 2 * j], params[2 + 2 * j]) * scale,
    }));
    ExponentialSum::new(terms).unwrap_or_else(|_| sum.clone())
}

#[inline]
fn horner(coeffs: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Roots of `Σ coeffs[k] z^k` from the companion matrix of its monic
/// normalization, each polished by a few guarded Newton steps.
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let max = coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs()));
    let mut degree = coeffs.len().saturating_sub(1);
    while degree > 0 && coeffs[degree].abs() <= 1e-14 * max {
        degree -= 1;
    }
    if degree == 0 {
        return Vec::new();
    }
    let coeffs = &coeffs[..=degree];
    let lead = coeffs[degree];
    let companion = DMatrix::from_fn(degree, degree, |i, j| {
        if j == degree - 1 {
            -coeffs[i] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    companion
        .complex_eigenvalues()
        .iter()
        .map(|&z| {
            let mut z = z;
            let (mut p, _) = horner(coeffs, z);
            for _ in 0..4 {
                let (_, dp) = horner(coeffs, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let candidate = z - p / dp;
                let (pc, _) = horner(coeffs, candidate);
                if pc.norm() < p.norm() {
                    z = candidate;
                    p = pc;
                } else {
                    break;
                }
            }
            z
        })
        .collect()
}
