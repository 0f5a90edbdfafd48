#![allow(dead_code)]

use phaseline_core::synth::{synthesize_seeded, SynthConfig};
use phaseline_core::{
    auto_step, best_match_error, LabeledProjection, SparseSignal, StructureKernel,
};

/// Largest sample index for random instances.
pub const M_RANDOM: usize = 199;
/// Minimal difference gap of random supports, relative to the diameter.
pub const GAP_REL: f64 = 0.02;

pub fn random_config(dim: usize, n: usize) -> SynthConfig {
    SynthConfig {
        min_gap_rel: GAP_REL,
        ..SynthConfig::new(dim, n, StructureKernel::Dirac)
    }
}

/// Seeded instance and its automatic step. Gaussian instances get
/// `σ = min(1/2, 3/(hM))` so the kernel transform stays above `e^{−9}` on
/// the sampled band.
pub fn random_instance(dim: usize, n: usize, gaussian: bool, seed: u64) -> (SparseSignal, f64) {
    random_instance_with(&random_config(dim, n), gaussian, seed)
}

pub fn random_instance_with(
    config: &SynthConfig,
    gaussian: bool,
    seed: u64,
) -> (SparseSignal, f64) {
    let signal = synthesize_seeded(config, seed).expect("instance");
    let h = auto_step(&signal.translations());
    if gaussian {
        let sigma = (3.0 / (h * M_RANDOM as f64)).min(0.5);
        (signal.with_kernel(StructureKernel::Gaussian { sigma }), h)
    } else {
        (signal, h)
    }
}

/// Translation and coefficient errors relative to the diameter and the
/// largest modulus.
pub fn rel_errors(truth: &SparseSignal, recovered: &SparseSignal) -> (f64, f64) {
    let r = best_match_error(truth, recovered).expect("comparable signals");
    let diam = truth.diameter().max(f64::MIN_POSITIVE);
    let cmax = truth.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    (r.t_err / diam, r.c_err / cmax)
}

pub fn line_signal(p: &LabeledProjection, kernel: StructureKernel) -> SparseSignal {
    let t: Vec<Vec<f64>> = p.positions().iter().map(|x| vec![*x]).collect();
    SparseSignal::from_parts(kernel, p.coeffs(), &t).expect("valid line solution")
}
