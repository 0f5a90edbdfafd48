//! Exhaustive reference solvers used to cross-check the main pipeline.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::ambiguity::{best_match_error, canonicalize};
use crate::error::{Error, Result};
use crate::line::LabeledProjection;
use crate::multi::DirectionBundle;
use crate::signal::{dot, Atom, SparseSignal, StructureKernel};

/// The `N(N−1)/2` positive pairwise differences of a point set, descending.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceMultiset {
    diffs: Vec<f64>,
    n: usize,
}

impl DifferenceMultiset {
    pub fn new(mut diffs: Vec<f64>) -> Result<Self> {
        let k = diffs.len();
        let n = ((1.0 + (1.0 + 8.0 * k as f64).sqrt()) / 2.0).round() as usize;
        if n * (n - 1) / 2 != k {
            return Err(Error::InvalidInput(format!(
                "{k} differences is not N(N-1)/2 for any N"
            )));
        }
        if diffs.iter().any(|d| !(*d > 0.0) || !d.is_finite()) {
            return Err(Error::InvalidInput(
                "differences must be positive and finite".into(),
            ));
        }
        diffs.sort_by(|a, b| b.total_cmp(a));
        Ok(DifferenceMultiset { diffs, n })
    }

    pub fn from_positions(positions: &[f64]) -> Result<Self> {
        let mut diffs = Vec::new();
        for (i, a) in positions.iter().enumerate() {
            for b in &positions[i + 1..] {
                diffs.push((a - b).abs());
            }
        }
        Self::new(diffs)
    }

    /// Descending.
    pub fn diffs(&self) -> &[f64] {
        &self.diffs
    }

    pub fn atoms(&self) -> usize {
        self.n
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnpikeResult {
    /// Position sets starting at 0, one per class up to reflection.
    pub solutions: Vec<Vec<f64>>,
    /// Whether the step budget ran out before the search finished.
    pub exhausted: bool,
}

struct Turnpike<'a> {
    diffs: &'a [f64],
    used: Vec<bool>,
    tol: f64,
    n: usize,
    steps: usize,
    budget: usize,
    found: Vec<Vec<f64>>,
}

impl Turnpike<'_> {
    /// Marks one unused difference near each of `targets`; undoes and fails if
    /// any is missing.
    fn take(&mut self, targets: &[f64]) -> Option<Vec<usize>> {
        let mut taken = Vec::with_capacity(targets.len());
        for &t in targets {
            let hit = self
                .diffs
                .iter()
                .enumerate()
                .filter(|(i, d)| !self.used[*i] && (*d - t).abs() <= self.tol)
                .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
                .map(|(i, _)| i);
            match hit {
                Some(i) => {
                    self.used[i] = true;
                    taken.push(i);
                }
                None => {
                    self.release(&taken);
                    return None;
                }
            }
        }
        Some(taken)
    }

    fn release(&mut self, taken: &[usize]) {
        for &i in taken {
            self.used[i] = false;
        }
    }

    fn search(&mut self, points: &mut Vec<f64>) {
        self.steps += 1;
        if self.steps > self.budget {
            return;
        }
        let Some(largest) = self.used.iter().position(|u| !u) else {
            if points.len() == self.n {
                let mut p = points.clone();
                p.sort_by(f64::total_cmp);
                self.found.push(p);
            }
            return;
        };
        if points.len() >= self.n {
            return;
        }
        let y = self.diffs[largest];
        let width = points[1];
        for candidate in [y, width - y] {
            let targets: Vec<f64> = points.iter().map(|p| (candidate - p).abs()).collect();
            if let Some(taken) = self.take(&targets) {
                points.push(candidate);
                self.search(points);
                points.pop();
                self.release(&taken);
            }
            if (width - 2.0 * y).abs() <= self.tol {
                break;
            }
        }
    }
}

fn same_set(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

fn reflect_set(p: &[f64]) -> Vec<f64> {
    let width = p.last().copied().unwrap_or(0.0);
    p.iter().rev().map(|x| width - x).collect()
}

/// All supports `0 = t_1 < … < t_N` whose differences match `diffs` within
/// `tol`, one representative per reflection class. The search visits at most
/// `budget` nodes.
pub fn turnpike_solve(
    diffs: &DifferenceMultiset,
    n: usize,
    tol: f64,
    budget: usize,
) -> TurnpikeResult {
    if n != diffs.atoms() {
        return TurnpikeResult {
            solutions: Vec::new(),
            exhausted: false,
        };
    }
    if n == 1 {
        return TurnpikeResult {
            solutions: vec![vec![0.0]],
            exhausted: false,
        };
    }
    let mut state = Turnpike {
        diffs: diffs.diffs(),
        used: vec![false; diffs.diffs().len()],
        tol,
        n,
        steps: 0,
        budget,
        found: Vec::new(),
    };
    state.used[0] = true;
    let mut points = vec![0.0, diffs.diffs()[0]];
    state.search(&mut points);
    let exhausted = state.steps > budget;
    let mut classes: Vec<Vec<f64>> = Vec::new();
    for s in state.found {
        let r = reflect_set(&s);
        if !classes
            .iter()
            .any(|c| same_set(c, &s, tol) || same_set(c, &r, tol))
        {
            classes.push(s);
        }
    }
    TurnpikeResult {
        solutions: classes,
        exhausted,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssemblyTolerance {
    pub position: f64,
    pub modulus: f64,
}

/// Does the labeled point set `(positions, moduli)` equal `line` up to shift
/// and reflection?
fn reproduces(
    positions: &[f64],
    moduli: &[f64],
    line: &LabeledProjection,
    tol: AssemblyTolerance,
) -> bool {
    let mut order: Vec<usize> = (0..positions.len()).collect();
    order.sort_by(|&a, &b| positions[a].total_cmp(&positions[b]));
    let lo = positions[order[0]];
    let target_mod = line.moduli();
    let target = line.positions();
    let ext = line.extent();
    let n = order.len();
    let forward = order.iter().enumerate().all(|(k, &i)| {
        (positions[i] - lo - target[k]).abs() <= tol.position
            && (moduli[i] - target_mod[k]).abs() <= tol.modulus
    });
    let backward = order.iter().enumerate().all(|(k, &i)| {
        (positions[i] - lo - (ext - target[n - 1 - k])).abs() <= tol.position
            && (moduli[i] - target_mod[n - 1 - k]).abs() <= tol.modulus
    });
    forward || backward
}

/// All bijections `n ↦ π(n)` with `|a[n]| ≈ |b[π(n)]|`.
fn modulus_permutations(a: &[f64], b: &[f64], tol: f64) -> Vec<Vec<usize>> {
    fn go(
        a: &[f64],
        b: &[f64],
        tol: f64,
        used: &mut [bool],
        cur: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        let i = cur.len();
        if i == a.len() {
            out.push(cur.clone());
            return;
        }
        for j in 0..b.len() {
            if !used[j] && (a[i] - b[j]).abs() <= tol {
                used[j] = true;
                cur.push(j);
                go(a, b, tol, used, cur, out);
                cur.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(
        a,
        b,
        tol,
        &mut vec![false; b.len()],
        &mut Vec::new(),
        &mut out,
    );
    out
}

/// Every translation set whose projections reproduce all line solutions,
/// up to the inevitable ambiguities.
///
/// Enumerates all modulus-consistent alignments between the base lines and
/// all `2^{(D−1)N}` per-atom reflection choices, independent of any ordering
/// argument. Coefficients are taken from the first base line.
pub fn assembly_oracle(
    base_solutions: &[LabeledProjection],
    adaptive_solutions: &[LabeledProjection],
    directions: &DirectionBundle,
    kernel: StructureKernel,
    tol: AssemblyTolerance,
) -> Result<Vec<SparseSignal>> {
    let dim = directions.base.len();
    if dim == 0
        || base_solutions.len() != dim
        || adaptive_solutions.len() != directions.adaptive.len()
        || directions.all().iter().any(|d| d.len() != dim)
    {
        return Err(Error::InvalidInput(
            "solutions do not match the direction bundle".into(),
        ));
    }
    let n = base_solutions[0].len();
    if base_solutions
        .iter()
        .chain(adaptive_solutions)
        .any(|l| l.len() != n)
    {
        return Err(Error::InvalidInput(
            "all lines must carry the same number of atoms".into(),
        ));
    }
    let flip_bits = (dim - 1) * n;
    if flip_bits > 20 {
        return Err(Error::InvalidInput(format!(
            "{flip_bits} reflection bits is too many to enumerate"
        )));
    }
    let psi = DMatrix::from_fn(dim, dim, |i, j| directions.base[i][j]);
    let inverse = psi
        .try_inverse()
        .ok_or(Error::SingularBasis(f64::INFINITY))?;

    let anchor = &base_solutions[0];
    let anchor_mod = anchor.moduli();
    let per_line: Vec<Vec<Vec<usize>>> = base_solutions[1..]
        .iter()
        .map(|l| modulus_permutations(&anchor_mod, &l.moduli(), tol.modulus))
        .collect();
    let mut alignments: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for options in &per_line {
        alignments = alignments
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |p| {
                    let mut next = prefix.clone();
                    next.push(p.clone());
                    next
                })
            })
            .collect();
    }

    let all_dirs = directions.all();
    let all_lines: Vec<&LabeledProjection> =
        base_solutions.iter().chain(adaptive_solutions).collect();
    let mut classes: Vec<SparseSignal> = Vec::new();
    for alignment in &alignments {
        for flips in 0u64..(1u64 << flip_bits) {
            let translations: Vec<Vec<f64>> = (0..n)
                .map(|a| {
                    let mut y = vec![anchor.positions()[a]];
                    for d in 1..dim {
                        let line = &base_solutions[d];
                        let p = line.positions()[alignment[d - 1][a]];
                        let bit = (a * (dim - 1) + d - 1) as u64;
                        y.push(if flips >> bit & 1 == 1 {
                            line.extent() - p
                        } else {
                            p
                        });
                    }
                    (&inverse * DVector::from_vec(y)).iter().copied().collect()
                })
                .collect();
            let consistent = all_dirs.iter().zip(&all_lines).all(|(dir, line)| {
                let proj: Vec<f64> = translations.iter().map(|t| dot(dir, t)).collect();
                reproduces(&proj, &anchor_mod, line, tol)
            });
            if !consistent {
                continue;
            }
            let atoms: Vec<Atom> = translations
                .into_iter()
                .zip(anchor.coeffs())
                .map(|(t, c)| Atom { c: *c, t })
                .collect();
            let Ok(signal) = SparseSignal::new(dim, kernel, atoms) else {
                continue;
            };
            let signal = canonicalize(&signal).0;
            let known = classes.iter().any(|c| {
                best_match_error(c, &signal).is_ok_and(|e| e.t_err <= tol.position * 10.0)
            });
            if !known {
                classes.push(signal);
            }
        }
    }
    Ok(classes)
}

/// Exact line solution of a known signal along `direction`.
pub fn exact_projection(signal: &SparseSignal, direction: &[f64]) -> Result<LabeledProjection> {
    let positions: Vec<f64> = signal
        .atoms()
        .iter()
        .map(|a| dot(direction, &a.t))
        .collect();
    let coeffs: Vec<Complex64> = signal.coeffs();
    LabeledProjection::from_unsorted(&positions, &coeffs)
}
