//! Removal of the inevitable ambiguities (global phase, global shift and
//! conjugate reflection) and the error metrics computed after removing them.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{distance, Atom, SparseSignal};

/// `x ↦ ±x + shift`, `c ↦ e^{iα} c` (conjugated first when reflected).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmbiguityFrame {
    pub shift: Vec<f64>,
    pub phase: f64,
    pub reflected: bool,
}

impl AmbiguityFrame {
    pub fn identity(dim: usize) -> Self {
        AmbiguityFrame {
            shift: vec![0.0; dim],
            phase: 0.0,
            reflected: false,
        }
    }

    pub fn inverse(&self) -> Self {
        if self.reflected {
            // c' = e^{iα} c̄  ⇒  c = e^{iα} c̄'; t' = x_0 − t  ⇒  t = x_0 − t'
            self.clone()
        } else {
            AmbiguityFrame {
                shift: self.shift.iter().map(|x| -x).collect(),
                phase: wrap_phase(-self.phase),
                reflected: false,
            }
        }
    }
}

/// Maps an angle to `(−π, π]`.
pub fn wrap_phase(alpha: f64) -> f64 {
    let mut a = alpha.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

/// # Panics
///
/// If the frame's shift has a different dimension than the signal.
pub fn apply_frame(signal: &SparseSignal, frame: &AmbiguityFrame) -> SparseSignal {
    assert_eq!(frame.shift.len(), signal.dim(), "frame dimension mismatch");
    let rot = Complex64::cis(frame.phase);
    let atoms = signal
        .atoms()
        .iter()
        .map(|a| {
            let (c, sign) = if frame.reflected {
                (a.c.conj(), -1.0)
            } else {
                (a.c, 1.0)
            };
            Atom {
                c: rot * c,
                t: a.t
                    .iter()
                    .zip(&frame.shift)
                    .map(|(x, s)| sign * x + s)
                    .collect(),
            }
        })
        .collect();
    SparseSignal::new(signal.dim(), signal.kernel(), atoms).expect("frames preserve validity")
}

/// Shifts so that every coordinate has minimum 0 over the atoms.
pub fn canonicalize(signal: &SparseSignal) -> (SparseSignal, AmbiguityFrame) {
    let mut shift = vec![f64::INFINITY; signal.dim()];
    for atom in signal.atoms() {
        for (s, x) in shift.iter_mut().zip(&atom.t) {
            *s = s.min(*x);
        }
    }
    let frame = AmbiguityFrame {
        shift: shift
            .iter()
            .map(|s| if s.is_finite() { -s } else { 0.0 })
            .collect(),
        phase: 0.0,
        reflected: false,
    };
    (apply_frame(signal, &frame), frame)
}

/// Outcome of comparing a recovered signal against the truth.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    /// `max_n ‖T_n − T'_n‖` after normalization.
    pub t_err: f64,
    /// `min_α max_n |c_n − e^{iα} c'_n|`.
    pub c_err: f64,
    /// Maps the recovered signal onto the truth: `apply_frame(recovered, frame) ≈ truth`.
    pub frame: AmbiguityFrame,
    /// `permutation[n]` is the recovered atom matched to truth atom `n`.
    pub permutation: Vec<usize>,
}

/// JSON error report `{"t_err", "c_err", "reflected", "alpha", "shift"}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub t_err: f64,
    pub c_err: f64,
    pub reflected: bool,
    pub alpha: f64,
    pub shift: Vec<f64>,
}

impl From<&MatchReport> for ErrorReport {
    fn from(r: &MatchReport) -> Self {
        ErrorReport {
            t_err: r.t_err,
            c_err: r.c_err,
            reflected: r.frame.reflected,
            alpha: r.frame.phase,
            shift: r.frame.shift.clone(),
        }
    }
}

pub fn best_match_error(truth: &SparseSignal, recovered: &SparseSignal) -> Result<MatchReport> {
    if truth.len() != recovered.len() || truth.dim() != recovered.dim() {
        return Err(Error::InvalidInput(format!(
            "cannot compare N = {}, D = {} against N = {}, D = {}",
            truth.len(),
            truth.dim(),
            recovered.len(),
            recovered.dim()
        )));
    }
    let dim = truth.dim();
    let (truth_c, truth_frame) = canonicalize(truth);
    let mut best: Option<MatchReport> = None;
    for reflected in [false, true] {
        let flip = AmbiguityFrame {
            shift: vec![0.0; dim],
            phase: 0.0,
            reflected,
        };
        let oriented = apply_frame(recovered, &flip);
        let (rec_c, rec_frame) = canonicalize(&oriented);
        let Some(permutation) = nearest_assignment(&truth_c, &rec_c) else {
            continue;
        };
        let t_err = permutation
            .iter()
            .enumerate()
            .map(|(n, &j)| distance(&truth_c.atoms()[n].t, &rec_c.atoms()[j].t))
            .fold(0.0, f64::max);
        let pairs: Vec<(Complex64, Complex64)> = permutation
            .iter()
            .enumerate()
            .map(|(n, &j)| (truth_c.atoms()[n].c, rec_c.atoms()[j].c))
            .collect();
        let (alpha, c_err) = optimal_phase(&pairs);
        let candidate = MatchReport {
            t_err,
            c_err,
            frame: AmbiguityFrame {
                shift: rec_frame
                    .shift
                    .iter()
                    .zip(&truth_frame.shift)
                    .map(|(r, t)| r - t)
                    .collect(),
                phase: alpha,
                reflected,
            },
            permutation,
        };
        // Centrally symmetric supports fit both orientations equally well;
        // the coefficients then decide.
        let tie = 1e-9 * truth_c.diameter().max(f64::MIN_POSITIVE);
        let better = best.as_ref().is_none_or(|b| {
            if (candidate.t_err - b.t_err).abs() <= tie {
                candidate.c_err < b.c_err
            } else {
                candidate.t_err < b.t_err
            }
        });
        if better {
            best = Some(candidate);
        }
    }
    best.ok_or(Error::MatchingFailed)
}

/// Nearest recovered atom for every truth atom, if that assignment is a bijection.
fn nearest_assignment(truth: &SparseSignal, recovered: &SparseSignal) -> Option<Vec<usize>> {
    let mut used = vec![false; recovered.len()];
    let mut perm = Vec::with_capacity(truth.len());
    for a in truth.atoms() {
        let (j, _) = recovered
            .atoms()
            .iter()
            .enumerate()
            .map(|(j, b)| (j, distance(&a.t, &b.t)))
            .min_by(|x, y| x.1.total_cmp(&y.1))?;
        if used[j] {
            return None;
        }
        used[j] = true;
        perm.push(j);
    }
    Some(perm)
}

fn phase_objective(pairs: &[(Complex64, Complex64)], alpha: f64) -> f64 {
    let rot = Complex64::cis(alpha);
    pairs
        .iter()
        .map(|(c, r)| (c - rot * r).norm())
        .fold(0.0, f64::max)
}

/// Minimizes `max_n |c_n − e^{iα} c'_n|` over `α ∈ (−π, π]`.
///
/// A coarse scan brackets the global minimum, golden-section search then
/// narrows the bracket to `1e−10`.
pub fn optimal_phase(pairs: &[(Complex64, Complex64)]) -> (f64, f64) {
    if pairs.is_empty() {
        return (0.0, 0.0);
    }
    const GRID: usize = 720;
    let step = 2.0 * PI / GRID as f64;
    let (mut best_alpha, mut best_val) = (0.0, f64::INFINITY);
    for i in 0..GRID {
        let alpha = -PI + step * (i + 1) as f64;
        let v = phase_objective(pairs, alpha);
        if v < best_val {
            best_val = v;
            best_alpha = alpha;
        }
    }
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (best_alpha - step, best_alpha + step);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = phase_objective(pairs, x1);
    let mut f2 = phase_objective(pairs, x2);
    while hi - lo > 1e-10 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = phase_objective(pairs, x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = phase_objective(pairs, x2);
        }
    }
    let alpha = 0.5 * (lo + hi);
    let val = phase_objective(pairs, alpha);
    if val <= best_val {
        (wrap_phase(alpha), val)
    } else {
        (wrap_phase(best_alpha), best_val)
    }
}
