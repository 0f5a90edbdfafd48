//! Shared fixtures for the benchmarks.

use std::f64::consts::PI;

use phaseline_core::prony::Term;
use phaseline_core::synth::{synthesize_seeded, SynthConfig};
use phaseline_core::{auto_step, ExponentialSum, LineSampleSet, SparseSignal, StructureKernel};

/// Exact exponential sum with `l` equispaced positive frequencies in `(0, π/h)`.
pub fn exponential_sum(l: usize, h: f64) -> ExponentialSum {
    let mut terms = vec![Term {
        tau: 0.0,
        gamma: num_complex::Complex64::new(l as f64 + 1.0, 0.0),
    }];
    terms.extend((1..=l).map(|k| Term {
        tau: PI * k as f64 / ((l + 1) as f64 * h),
        gamma: num_complex::Complex64::from_polar(1.0 + 0.3 * k as f64, 0.7 * k as f64),
    }));
    ExponentialSum::new(terms).expect("valid sum")
}

/// Seeded point signal with a well separated support and its automatic step.
pub fn signal(dim: usize, n: usize, seed: u64) -> (SparseSignal, f64) {
    let config = SynthConfig {
        min_gap_rel: 0.02,
        ..SynthConfig::new(dim, n, StructureKernel::Dirac)
    };
    let s = synthesize_seeded(&config, seed).expect("fixture");
    let h = auto_step(&s.translations());
    (s, h)
}

pub fn line_samples(n: usize, m_max: usize, seed: u64) -> (LineSampleSet, StructureKernel) {
    let (s, h) = signal(1, n, seed);
    (
        s.sample_line(&[1.0], h, m_max).expect("fixture"),
        s.kernel(),
    )
}
