//! Test instances: the five-source Gaussian example and seeded random
//! instances satisfying the recovery hypotheses.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::line::assert_hypotheses;
use crate::signal::{diameter, min_difference_gap, project, Atom, SparseSignal, StructureKernel};

/// Samples per line in the five-source example (`M = 99`).
pub const FIVE_SOURCE_SAMPLES_PER_LINE: usize = 100;
/// Angle of the third line in the five-source example, in units of π.
pub const FIVE_SOURCE_ANGLE_PI: f64 = 0.143;

/// Five Gaussian sources with standard deviation 1/2.
pub fn five_gaussian_sources() -> SparseSignal {
    let coeffs = [
        Complex64::new(7.293, 5.115),
        Complex64::new(30.665, 2.258),
        Complex64::new(2.740, 22.286),
        Complex64::new(1.576, 49.834),
        Complex64::new(17.400, 46.587),
    ];
    let translations = [
        vec![27.374, 27.258],
        vec![13.065, 32.008],
        vec![8.847, 37.665],
        vec![0.000, 13.874],
        vec![23.876, 0.000],
    ];
    SparseSignal::from_parts(
        StructureKernel::Gaussian { sigma: 0.5 },
        &coeffs,
        &translations,
    )
    .expect("valid preset")
}

/// The adaptive direction used with [`five_gaussian_sources`].
pub fn five_source_direction() -> Vec<f64> {
    let phi = FIVE_SOURCE_ANGLE_PI * PI;
    vec![phi.cos(), phi.sin()]
}

pub fn preset(name: &str) -> Option<SparseSignal> {
    match name {
        "paper-table1" => Some(five_gaussian_sources()),
        _ => None,
    }
}

/// Parameters of the random instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub dim: usize,
    pub n: usize,
    pub kernel: StructureKernel,
    /// Translations are drawn uniformly from `[0, extent]^D`.
    pub extent: f64,
    /// Minimum gap between distinct pairwise differences of every axis
    /// projection, relative to the diameter.
    pub min_gap_rel: f64,
    /// Extra directions whose projections must satisfy the same gap.
    pub extra_directions: Vec<Vec<f64>>,
    pub min_modulus: f64,
    pub max_modulus: f64,
    /// Minimum gap between any two coefficient moduli, relative to the largest.
    pub min_modulus_gap_rel: f64,
    /// Minimum relative modulus separation of the outermost atoms along every
    /// checked direction.
    pub outer_modulus_sep_rel: f64,
    pub max_attempts: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            dim: 2,
            n: 3,
            kernel: StructureKernel::Dirac,
            extent: 40.0,
            min_gap_rel: 0.01,
            extra_directions: Vec::new(),
            min_modulus: 1.0,
            max_modulus: 50.0,
            min_modulus_gap_rel: 0.02,
            outer_modulus_sep_rel: 0.1,
            max_attempts: 10_000,
        }
    }
}

impl SynthConfig {
    pub fn new(dim: usize, n: usize, kernel: StructureKernel) -> Self {
        SynthConfig {
            dim,
            n,
            kernel,
            ..Default::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.n == 0 {
            return Err(Error::InvalidInput(
                "dimension and atom count must be positive".into(),
            ));
        }
        if !(self.extent > 0.0)
            || !(self.min_modulus > 0.0)
            || !(self.max_modulus >= self.min_modulus)
        {
            return Err(Error::InvalidInput(
                "extent and modulus range must be positive".into(),
            ));
        }
        if self.extra_directions.iter().any(|d| d.len() != self.dim) {
            return Err(Error::InvalidInput(
                "extra direction has wrong dimension".into(),
            ));
        }
        self.kernel.validate()
    }
}

/// Checks the generator's acceptance conditions on an existing signal.
pub fn satisfies(signal: &SparseSignal, config: &SynthConfig) -> bool {
    let translations = signal.translations();
    let diam = diameter(&translations);
    if signal.len() > 1 && diam <= 0.0 {
        return false;
    }
    let gap = config.min_gap_rel * diam;
    let axes = (0..signal.dim()).map(|d| crate::multi::axis(signal.dim(), d));
    let moduli: Vec<f64> = signal.coeffs().iter().map(|c| c.norm()).collect();
    for dir in axes.chain(config.extra_directions.iter().cloned()) {
        let projected = project(&translations, &dir);
        if signal.len() > 1 && min_difference_gap(&projected) <= gap {
            return false;
        }
        if signal.len() > 2 {
            let report = assert_hypotheses(&projected, &moduli, gap);
            if report.outer_modulus_separation < config.outer_modulus_sep_rel {
                return false;
            }
        }
    }
    let mut moduli = moduli;
    moduli.sort_by(f64::total_cmp);
    let top = moduli.last().copied().unwrap_or(0.0);
    moduli
        .windows(2)
        .all(|w| w[1] - w[0] >= config.min_modulus_gap_rel * top)
}

/// Rejection sampling until [`satisfies`] holds.
pub fn synthesize<R: Rng + ?Sized>(config: &SynthConfig, rng: &mut R) -> Result<SparseSignal> {
    config.validate()?;
    for _ in 0..config.max_attempts {
        let atoms: Vec<Atom> = (0..config.n)
            .map(|_| {
                let modulus = rng.random_range(config.min_modulus..=config.max_modulus);
                let phase = rng.random_range(0.0..TAU);
                Atom {
                    c: Complex64::from_polar(modulus, phase),
                    t: (0..config.dim)
                        .map(|_| rng.random_range(0.0..=config.extent))
                        .collect(),
                }
            })
            .collect();
        let Ok(signal) = SparseSignal::new(config.dim, config.kernel, atoms) else {
            continue;
        };
        if satisfies(&signal, config) {
            return Ok(signal);
        }
    }
    Err(Error::SynthesisExhausted(config.max_attempts))
}

pub fn synthesize_seeded(config: &SynthConfig, seed: u64) -> Result<SparseSignal> {
    synthesize(config, &mut ChaCha8Rng::seed_from_u64(seed))
}
