//! Sparse structured signals, their Fourier intensities and line sampling.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative collision threshold used when no explicit gap is given.
pub const DEFAULT_COLLISION_GAP: f64 = 1e-9;

/// The known building block every atom is a translate of.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StructureKernel {
    Dirac,
    /// Isotropic Gaussian density with standard deviation `sigma`.
    Gaussian {
        sigma: f64,
    },
}

impl StructureKernel {
    pub fn gaussian(sigma: f64) -> Result<Self> {
        let kernel = StructureKernel::Gaussian { sigma };
        kernel.validate()?;
        Ok(kernel)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            StructureKernel::Dirac => Ok(()),
            StructureKernel::Gaussian { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            StructureKernel::Gaussian { sigma } => Err(Error::InvalidInput(format!(
                "gaussian sigma must be positive, got {sigma}"
            ))),
        }
    }

    /// `ν̂(ω)` as a function of `‖ω‖²`; real and strictly positive for both kernels.
    pub fn fourier_value_sq_norm(&self, omega_norm_sq: f64) -> f64 {
        match *self {
            StructureKernel::Dirac => 1.0,
            StructureKernel::Gaussian { sigma } => (-0.5 * sigma * sigma * omega_norm_sq).exp(),
        }
    }

    pub fn fourier_value(&self, omega: &[f64]) -> f64 {
        self.fourier_value_sq_norm(norm_sq(omega))
    }

    /// `|ν̂(ω)|²` at a point on a line through the origin, `ω = t ζ` with `‖ζ‖ = 1`.
    pub fn intensity_on_line(&self, t: f64) -> f64 {
        let v = self.fourier_value_sq_norm(t * t);
        v * v
    }

    /// Spatial density of the kernel; `None` for the Dirac measure.
    pub fn density(&self, x: &[f64]) -> Option<f64> {
        match *self {
            StructureKernel::Dirac => None,
            StructureKernel::Gaussian { sigma } => {
                let d = x.len() as f64;
                let norm = (2.0 * PI * sigma * sigma).powf(-0.5 * d);
                Some(norm * (-norm_sq(x) / (2.0 * sigma * sigma)).exp())
            }
        }
    }
}

/// One translate `c ν(· − t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub c: Complex64,
    pub t: Vec<f64>,
}

#[derive(Debug, Deserialize)]
struct SignalRepr {
    dim: usize,
    kernel: StructureKernel,
    atoms: Vec<Atom>,
}

/// `μ = Σ c_n ν(· − T_n)` in `ℝ^D`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalRepr")]
pub struct SparseSignal {
    dim: usize,
    kernel: StructureKernel,
    atoms: Vec<Atom>,
}

impl TryFrom<SignalRepr> for SparseSignal {
    type Error = Error;

    fn try_from(repr: SignalRepr) -> Result<Self> {
        SparseSignal::new(repr.dim, repr.kernel, repr.atoms)
    }
}

impl SparseSignal {
    pub fn new(dim: usize, kernel: StructureKernel, atoms: Vec<Atom>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        kernel.validate()?;
        for (n, atom) in atoms.iter().enumerate() {
            if atom.t.len() != dim {
                return Err(Error::InvalidInput(format!(
                    "atom {n} has {} coordinates, expected {dim}",
                    atom.t.len()
                )));
            }
            if atom.c.norm() == 0.0 || !atom.c.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "atom {n} has a zero coefficient"
                )));
            }
            if atom.t.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "atom {n} has a non-finite translation"
                )));
            }
        }
        for i in 0..atoms.len() {
            for j in i + 1..atoms.len() {
                if atoms[i].t == atoms[j].t {
                    return Err(Error::InvalidInput(format!(
                        "atoms {i} and {j} share a translation"
                    )));
                }
            }
        }
        Ok(SparseSignal { dim, kernel, atoms })
    }

    pub fn from_parts(
        kernel: StructureKernel,
        coeffs: &[Complex64],
        translations: &[Vec<f64>],
    ) -> Result<Self> {
        if coeffs.len() != translations.len() {
            return Err(Error::InvalidInput(format!(
                "{} coefficients but {} translations",
                coeffs.len(),
                translations.len()
            )));
        }
        let dim = translations.first().map_or(1, Vec::len);
        let atoms = coeffs
            .iter()
            .zip(translations)
            .map(|(&c, t)| Atom { c, t: t.clone() })
            .collect();
        SparseSignal::new(dim, kernel, atoms)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn kernel(&self) -> StructureKernel {
        self.kernel
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn coeffs(&self) -> Vec<Complex64> {
        self.atoms.iter().map(|a| a.c).collect()
    }

    pub fn translations(&self) -> Vec<Vec<f64>> {
        self.atoms.iter().map(|a| a.t.clone()).collect()
    }

    pub fn with_kernel(mut self, kernel: StructureKernel) -> Self {
        self.kernel = kernel;
        self
    }

    pub fn diameter(&self) -> f64 {
        diameter(&self.translations())
    }

    /// The univariate signal seen along `ζ`: same coefficients, positions `⟨ζ, T_n⟩`.
    pub fn project_onto(&self, zeta: &[f64]) -> SparseSignal {
        let atoms = self
            .atoms
            .iter()
            .map(|a| Atom {
                c: a.c,
                t: vec![dot(zeta, &a.t)],
            })
            .collect();
        SparseSignal {
            dim: 1,
            kernel: self.kernel,
            atoms,
        }
    }

    /// `|μ̂(ω)|² = |ν̂(ω)|² · |Σ c_n e^{−i⟨ω,T_n⟩}|²` by direct summation.
    pub fn fourier_intensity(&self, omega: &[f64]) -> f64 {
        let sum: Complex64 = self
            .atoms
            .iter()
            .map(|a| a.c * Complex64::cis(-dot(omega, &a.t)))
            .sum();
        let nu = self.kernel.fourier_value(omega);
        nu * nu * sum.norm_sqr()
    }

    /// Same quantity through the double sum `Σ_{n,k} c_n c̄_k e^{−i⟨ω,T_n−T_k⟩}`.
    pub fn fourier_intensity_double_sum(&self, omega: &[f64]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for a in &self.atoms {
            for b in &self.atoms {
                let phase = dot(omega, &a.t) - dot(omega, &b.t);
                acc += a.c * b.c.conj() * Complex64::cis(-phase);
            }
        }
        let nu = self.kernel.fourier_value(omega);
        nu * nu * acc.re
    }

    /// Modulus of the spatial density `|Σ c_n ν(x − T_n)|`; `None` for Dirac signals.
    pub fn density_modulus(&self, x: &[f64]) -> Option<f64> {
        let mut acc = Complex64::new(0.0, 0.0);
        let mut shifted = vec![0.0; self.dim];
        for a in &self.atoms {
            for (s, (xi, ti)) in shifted.iter_mut().zip(x.iter().zip(&a.t)) {
                *s = xi - ti;
            }
            acc += a.c * self.kernel.density(&shifted)?;
        }
        Some(acc.norm())
    }

    /// Samples `|μ̂(h m ζ)|²` for `m = 0..=m_max`.
    pub fn sample_line(&self, zeta: &[f64], step: f64, m_max: usize) -> Result<LineSampleSet> {
        check_unit(zeta, self.dim)?;
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "step must be positive, got {step}"
            )));
        }
        let projected = project(&self.translations(), zeta);
        let spread = spread(&projected);
        if step * spread >= PI {
            return Err(Error::StepTooLarge {
                step,
                product: step * spread,
            });
        }
        let values = (0..=m_max)
            .map(|m| {
                let omega: Vec<f64> = zeta.iter().map(|z| z * step * m as f64).collect();
                self.fourier_intensity(&omega)
            })
            .collect();
        Ok(LineSampleSet {
            direction: zeta.to_vec(),
            step,
            values,
        })
    }
}

/// Equispaced squared-intensity samples along one line through the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LineSampleSet {
    pub direction: Vec<f64>,
    pub step: f64,
    pub values: Vec<f64>,
}

impl LineSampleSet {
    pub fn new(direction: Vec<f64>, step: f64, values: Vec<f64>) -> Result<Self> {
        let set = LineSampleSet {
            direction,
            step,
            values,
        };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        check_unit(&self.direction, self.direction.len())?;
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "step must be positive, got {}",
                self.step
            )));
        }
        if self.values.is_empty() {
            return Err(Error::InvalidInput("sample set is empty".into()));
        }
        if let Some(v) = self.values.iter().find(|v| !(**v >= 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "intensity samples must be finite and non-negative, got {v}"
            )));
        }
        Ok(())
    }

    /// Index of the last sample.
    pub fn m_max(&self) -> usize {
        self.values.len() - 1
    }

    /// Samples divided by `|ν̂(hmζ)|²`, i.e. the exponential sum `E(hm)`.
    /// Fails where the kernel transform underflows.
    pub fn deconvolved(&self, kernel: &StructureKernel) -> Result<Vec<f64>> {
        self.values
            .iter()
            .enumerate()
            .map(|(m, v)| {
                let t = self.step * m as f64;
                let k = kernel.intensity_on_line(t);
                let e = v / k;
                if k > f64::MIN_POSITIVE && e.is_finite() {
                    Ok(e)
                } else {
                    Err(Error::InvalidInput(format!(
                        "kernel transform vanishes at |omega| = {t}; reduce h * M"
                    )))
                }
            })
            .collect()
    }
}

pub(crate) fn check_unit(zeta: &[f64], dim: usize) -> Result<()> {
    if zeta.len() != dim {
        return Err(Error::InvalidInput(format!(
            "direction has {} components, expected {dim}",
            zeta.len()
        )));
    }
    let norm = norm_sq(zeta).sqrt();
    if (norm - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "direction must have unit norm, got {norm}"
        )));
    }
    Ok(())
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

pub fn normalize(v: &[f64]) -> Vec<f64> {
    let n = norm_sq(v).sqrt();
    v.iter().map(|x| x / n).collect()
}

/// `[⟨ζ, T_n⟩]` in input order.
pub fn project(translations: &[Vec<f64>], zeta: &[f64]) -> Vec<f64> {
    translations.iter().map(|t| dot(zeta, t)).collect()
}

/// Largest pairwise distance.
pub fn diameter(points: &[Vec<f64>]) -> f64 {
    let mut best = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            best = best.max(distance(a, b));
        }
    }
    best
}

fn spread(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    if values.is_empty() {
        0.0
    } else {
        hi - lo
    }
}

/// Step `π / (2 · max ‖T_n − T_k‖)`; `1` for a single atom.
pub fn auto_step(translations: &[Vec<f64>]) -> f64 {
    let diam = diameter(translations);
    if diam > 0.0 {
        PI / (2.0 * diam)
    } else {
        1.0
    }
}

/// Smallest separation among all ordered pairwise differences `v_n − v_k`, `n ≠ k`.
///
/// A family is collision-free at gap `g` exactly when this exceeds `g`.
/// Returns `+∞` for fewer than two values.
pub fn min_difference_gap(values: &[f64]) -> f64 {
    let mut diffs = Vec::with_capacity(values.len() * values.len());
    for (n, a) in values.iter().enumerate() {
        for (k, b) in values.iter().enumerate() {
            if n != k {
                diffs.push(a - b);
            }
        }
    }
    diffs.sort_by(f64::total_cmp);
    diffs
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min)
}

pub fn is_collision_free(values: &[f64], gap: f64) -> bool {
    min_difference_gap(values) > gap
}

/// Vector version of [`is_collision_free`]: all `T_n − T_k` pairwise separated by more than `gap`.
pub fn is_collision_free_vectors(points: &[Vec<f64>], gap: f64) -> bool {
    let mut diffs = Vec::new();
    for (n, a) in points.iter().enumerate() {
        for (k, b) in points.iter().enumerate() {
            if n != k {
                diffs.push(a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>());
            }
        }
    }
    for (i, a) in diffs.iter().enumerate() {
        for b in &diffs[i + 1..] {
            if distance(a, b) <= gap {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn single_spike_has_constant_intensity() {
        let s =
            SparseSignal::from_parts(StructureKernel::Dirac, &[c(2.0, 0.0)], &[vec![0.3, -1.7]])
                .unwrap();
        for omega in [[0.0, 0.0], [1.0, 2.0], [-5.0, 0.25]] {
            assert!((s.fourier_intensity(&omega) - 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn two_spikes_interfere_destructively_at_pi() {
        let s = SparseSignal::from_parts(
            StructureKernel::Dirac,
            &[c(1.0, 0.0), c(1.0, 0.0)],
            &[vec![0.0], vec![1.0]],
        )
        .unwrap();
        assert!(s.fourier_intensity(&[PI]).abs() < 1e-24);
    }

    #[test]
    fn double_sum_agrees_with_direct_sum() {
        let s = SparseSignal::from_parts(
            StructureKernel::gaussian(0.7).unwrap(),
            &[c(1.0, 2.0), c(-0.5, 0.1), c(3.0, -1.0)],
            &[vec![0.0, 1.0], vec![2.5, -1.0], vec![0.3, 0.9]],
        )
        .unwrap();
        for omega in [[0.1, 0.2], [1.3, -0.4], [-2.0, 0.7]] {
            let a = s.fourier_intensity(&omega);
            let b = s.fourier_intensity_double_sum(&omega);
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-300));
        }
    }

    #[test]
    fn sampling_at_zero_only() {
        let s = SparseSignal::from_parts(
            StructureKernel::Dirac,
            &[c(1.0, 1.0), c(2.0, 0.0)],
            &[vec![0.0], vec![1.0]],
        )
        .unwrap();
        let line = s.sample_line(&[1.0], 0.5, 0).unwrap();
        assert_eq!(line.values.len(), 1);
        assert!((line.values[0] - s.fourier_intensity(&[0.0])).abs() < 1e-12);
    }

    #[test]
    fn two_atom_line_matches_expanded_formula() {
        let (c1, c2) = (c(0.8, -0.3), c(-1.1, 0.6));
        let (t1, t2) = (0.4, 2.9);
        let s = SparseSignal::from_parts(StructureKernel::Dirac, &[c1, c2], &[vec![t1], vec![t2]])
            .unwrap();
        let h = 0.3;
        let line = s.sample_line(&[1.0], h, 12).unwrap();
        for (m, v) in line.values.iter().enumerate() {
            let w = h * m as f64;
            let expected = c1.norm_sqr()
                + c2.norm_sqr()
                + 2.0 * (c1 * c2.conj() * Complex64::cis(-w * (t1 - t2))).re;
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn aliasing_step_is_rejected() {
        let s = SparseSignal::from_parts(
            StructureKernel::Dirac,
            &[c(1.0, 0.0), c(2.0, 0.0)],
            &[vec![0.0], vec![10.0]],
        )
        .unwrap();
        assert!(matches!(
            s.sample_line(&[1.0], 0.5, 4),
            Err(Error::StepTooLarge { .. })
        ));
        assert!(matches!(
            s.sample_line(&[0.5], 0.1, 4),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn projection_examples() {
        let t = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        assert_eq!(project(&t, &[1.0, 0.0]), vec![1.0, 0.0]);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let p = project(&[vec![2.0, 3.0], vec![-1.0, 0.5]], &[r, r]);
        assert!((p[0] - 5.0 * r).abs() < 1e-15 && (p[1] + 0.5 * r).abs() < 1e-15);
    }

    #[test]
    fn collision_examples() {
        assert!(is_collision_free(&[0.0, 1.0, 3.0], 1e-9));
        assert!(!is_collision_free(&[0.0, 1.0, 2.0], 1e-9));
        assert!(is_collision_free_vectors(
            &[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 3.0]],
            1e-9
        ));
        assert!(!is_collision_free_vectors(
            &[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]],
            1e-9
        ));
    }

    #[test]
    fn invalid_signals_are_rejected() {
        assert!(
            SparseSignal::from_parts(StructureKernel::Dirac, &[c(0.0, 0.0)], &[vec![0.0]]).is_err()
        );
        assert!(SparseSignal::from_parts(
            StructureKernel::Dirac,
            &[c(1.0, 0.0), c(1.0, 0.0)],
            &[vec![1.0], vec![1.0]]
        )
        .is_err());
        assert!(StructureKernel::gaussian(-1.0).is_err());
    }

    #[test]
    fn signal_json_shape() {
        let s = SparseSignal::from_parts(
            StructureKernel::gaussian(0.5).unwrap(),
            &[c(1.5, -2.0)],
            &[vec![0.25, 4.0]],
        )
        .unwrap();
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(
            json,
            serde_json::json!({
                "dim": 2,
                "kernel": {"kind": "gaussian", "sigma": 0.5},
                "atoms": [{"c": [1.5, -2.0], "t": [0.25, 4.0]}]
            })
        );
        let back: SparseSignal = serde_json::from_value(json).unwrap();
        assert_eq!(back, s);
        let bad = serde_json::json!({"dim": 2, "kernel": {"kind": "dirac"}, "atoms": [{"c": [1.0, 0.0], "t": [1.0]}]});
        assert!(serde_json::from_value::<SparseSignal>(bad).is_err());
    }
}
