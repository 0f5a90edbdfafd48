use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use phaseline_core::multi::axis;
use phaseline_core::oracle::{
    assembly_oracle, turnpike_solve, AssemblyTolerance, DifferenceMultiset,
};
use phaseline_core::{
    auto_step, best_match_error, retrieve_2d_generic, retrieve_nd, AdaptiveDirections,
    CountingSampler, ErrorReport, LineSampleSet, LineSampler, NdConfig, NdSolution, SampleBank,
    SparseSignal, StructureKernel,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{read_signal, DirectionSpec, ExperimentConfig, SampleFile, StepSpec};
use crate::error::CliError;
use crate::plot;

/// Writes `value` as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(phaseline_core::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}

fn out_dir(config: &ExperimentConfig) -> PathBuf {
    config.out.clone().unwrap_or_else(|| PathBuf::from("."))
}

fn require_signal(config: &ExperimentConfig) -> Result<SparseSignal, CliError> {
    config.load_signal()?.ok_or_else(|| {
        CliError::Validation("no signal given (use --preset, --signal or a config)".into())
    })
}

fn resolve_step(step: StepSpec, signal: &SparseSignal) -> Result<f64, CliError> {
    match step {
        StepSpec::Auto => Ok(auto_step(&signal.translations())),
        StepSpec::Value(h) if h > 0.0 && h.is_finite() => Ok(h),
        StepSpec::Value(h) => Err(CliError::Validation(format!(
            "step must be positive, got {h}"
        ))),
    }
}

fn check_m(m: usize, n: usize) -> Result<(), CliError> {
    let needed = NdConfig::minimal_m(n);
    if m < needed {
        return Err(CliError::Validation(format!(
            "M = {m} is below the {needed} ({} samples per line) needed for N = {n}",
            needed + 1
        )));
    }
    Ok(())
}

/// Three pairwise well separated planar directions.
fn random_generic(seed: u64) -> [Vec<f64>; 3] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let a: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.0..PI));
        let separated = (0..3).all(|i| (i + 1..3).all(|j| (a[i] - a[j]).sin().abs() > 0.2));
        if separated {
            return a.map(|x| vec![x.cos(), x.sin()]);
        }
    }
}

/// Lines the solver will request, when they are known before solving.
fn planned_lines(config: &ExperimentConfig, dim: usize) -> Result<Option<Vec<Vec<f64>>>, CliError> {
    let explicit = config.directions.explicit(dim)?;
    if config.generic {
        return Ok(Some(match explicit {
            Some(d) => d,
            None => random_generic(config.seed).to_vec(),
        }));
    }
    let axes: Vec<Vec<f64>> = (0..dim).map(|d| axis(dim, d)).collect();
    Ok(match (explicit, &config.directions) {
        (Some(extra), _) => Some(axes.into_iter().chain(extra).collect()),
        (None, DirectionSpec::Axes) => Some(axes),
        (None, _) if dim == 1 => Some(axes),
        _ => None,
    })
}

pub fn cmd_synth(config: &ExperimentConfig) -> Result<serde_json::Value, CliError> {
    let signal = require_signal(config)?;
    let out = out_dir(config);
    let signal_path = out.join("signal.json");
    write_json(&signal_path, &signal)?;
    let mut summary = json!({
        "signal": signal_path,
        "dim": signal.dim(),
        "n": signal.len(),
        "seed": config.seed,
    });
    if let (Some(m), Some(lines)) = (config.m, planned_lines(config, signal.dim())?) {
        check_m(m, signal.len())?;
        let step = resolve_step(config.step, &signal)?;
        let sets = lines
            .iter()
            .map(|d| signal.sample_line(d, step, m))
            .collect::<Result<Vec<LineSampleSet>, _>>()?;
        let file = SampleFile {
            dim: signal.dim(),
            n: signal.len(),
            kernel: signal.kernel(),
            sets,
        };
        let samples_path = out.join("samples.json");
        write_json(&samples_path, &file)?;
        summary["samples"] = json!(samples_path);
    }
    Ok(summary)
}

struct SolveRun {
    solution: NdSolution,
    truth: Option<SparseSignal>,
    n: usize,
    step: f64,
    m: usize,
    lines_consumed: usize,
    samples_consumed: usize,
    seconds: f64,
}

fn solve(config: &ExperimentConfig) -> Result<SolveRun, CliError> {
    let truth = config.load_signal()?;
    let stored = match &config.samples {
        Some(path) => {
            let file: SampleFile = serde_json::from_str(&crate::config::read(path)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            Some(file)
        }
        None => None,
    };
    let (dim, n, kernel): (usize, usize, StructureKernel) = match (&stored, &truth) {
        (Some(f), _) => (f.dim, f.n, f.kernel),
        (None, Some(s)) => (s.dim(), s.len(), s.kernel()),
        (None, None) => return Err(CliError::Validation("no signal or samples given".into())),
    };
    let step = match (&stored, &truth) {
        (Some(f), _) => match (config.step, f.sets.first()) {
            (StepSpec::Value(h), _) => h,
            (StepSpec::Auto, Some(set)) => set.step,
            (StepSpec::Auto, None) => {
                return Err(CliError::Validation("sample file has no lines".into()))
            }
        },
        (None, Some(s)) => resolve_step(config.step, s)?,
        (None, None) => unreachable!(),
    };
    let m = match (config.m, &stored) {
        (Some(m), _) => m,
        (None, Some(f)) => f.sets.iter().map(LineSampleSet::m_max).min().unwrap_or(0),
        (None, None) => NdConfig::minimal_m(n),
    };
    check_m(m, n)?;

    let mut nd = NdConfig::new(n, step, m);
    nd.threads = config.threads();
    let t = &config.tolerances;
    if let Some(x) = t.circle {
        nd.line.circle_tolerance = x;
    }
    nd.line.amp_threshold = t.amp_threshold.or(nd.line.amp_threshold);
    nd.line.match_tol = t.match_tol.or(nd.line.match_tol);
    if let Some(x) = t.outer_tie_rel {
        nd.line.outer_tie_tol = x;
    }
    if let Some(x) = t.modulus_rel {
        nd.modulus_tol_rel = x;
    }
    if let Some(x) = t.snap_rel {
        nd.snap_tol_rel = x;
    }

    let (solution, lines_consumed, samples_consumed, seconds) = {
        let bank;
        let inner: &dyn LineSampler = match (&stored, &truth) {
            (Some(f), _) => {
                bank = SampleBank::new(f.sets.clone());
                &bank
            }
            (None, Some(s)) => s,
            (None, None) => unreachable!(),
        };
        let sampler = CountingSampler::new(inner);
        let started = Instant::now();
        let solution = if config.generic {
            if dim != 2 {
                return Err(CliError::Validation(format!(
                    "generic mode needs D = 2, got {dim}"
                )));
            }
            let lines = planned_lines(config, dim)?.expect("generic lines are always planned");
            let directions: [Vec<f64>; 3] = lines.try_into().map_err(|l: Vec<Vec<f64>>| {
                CliError::Validation(format!("generic mode needs 3 directions, got {}", l.len()))
            })?;
            retrieve_2d_generic(&sampler, &directions, kernel, &nd)?
        } else {
            nd.adaptive = match (config.directions.explicit(dim)?, &config.directions) {
                (Some(fixed), _) => AdaptiveDirections::Fixed(fixed),
                (None, DirectionSpec::Axes) if dim > 1 => {
                    return Err(CliError::Validation(format!(
                        "the axes alone do not determine a signal of dimension {dim}"
                    )))
                }
                _ => AdaptiveDirections::Random { seed: config.seed },
            };
            retrieve_nd(&sampler, dim, kernel, &nd)?
        };
        (
            solution,
            sampler.lines(),
            sampler.samples(),
            started.elapsed().as_secs_f64(),
        )
    };
    Ok(SolveRun {
        solution,
        truth,
        n,
        step,
        m,
        lines_consumed,
        samples_consumed,
        seconds,
    })
}

pub fn cmd_solve(config: &ExperimentConfig) -> Result<serde_json::Value, CliError> {
    let run = solve(config)?;
    let out = out_dir(config);
    let solution_path = out.join("solution.json");
    write_json(&solution_path, &run.solution.signal)?;
    let dim = run.solution.signal.dim();
    let error = match &run.truth {
        Some(truth) => Some(ErrorReport::from(&best_match_error(
            truth,
            &run.solution.signal,
        )?)),
        None => None,
    };
    let report = json!({
        "seed": config.seed,
        "mode": if config.generic { "generic" } else { "adaptive" },
        "dim": dim,
        "n": run.n,
        "m": run.m,
        "step": run.step,
        "threads": config.threads(),
        "lines_consumed": run.lines_consumed,
        "samples_consumed": run.samples_consumed,
        "expected_samples": (2 * dim - 1) * (run.m + 1),
        "pipeline": run.solution.report,
        "error": error,
        "timings": {"solve_seconds": run.seconds},
    });
    let report_path = out.join("report.json");
    write_json(&report_path, &report)?;
    Ok(json!({
        "solution": solution_path,
        "report": report_path,
        "samples_consumed": run.samples_consumed,
        "error": error,
    }))
}

pub fn cmd_eval(
    truth: &Path,
    solution: &Path,
    out: Option<&Path>,
) -> Result<serde_json::Value, CliError> {
    let truth = read_signal(truth)?;
    let solution = read_signal(solution)?;
    let report = ErrorReport::from(&best_match_error(&truth, &solution)?);
    if let Some(dir) = out {
        write_json(&dir.join("eval.json"), &report)?;
    }
    Ok(serde_json::to_value(&report).map_err(phaseline_core::Error::from)?)
}

pub fn cmd_plotdata(
    config: &ExperimentConfig,
    solution: Option<&Path>,
    report: Option<&Path>,
    grid: usize,
) -> Result<serde_json::Value, CliError> {
    let signal = require_signal(config)?;
    let recovered = solution.map(read_signal).transpose()?;
    let (lines, step, m) = match report {
        Some(path) => {
            let r: serde_json::Value = serde_json::from_str(&crate::config::read(path)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let dirs = r["pipeline"]["lines"]
                .as_array()
                .map(|ls| {
                    ls.iter()
                        .filter_map(|l| {
                            serde_json::from_value::<Vec<f64>>(l["direction"].clone()).ok()
                        })
                        .collect::<Vec<_>>()
                })
                .ok_or_else(|| {
                    CliError::Validation(format!("{}: no line directions", path.display()))
                })?;
            let step = r["step"].as_f64();
            let m = r["m"].as_u64().map(|m| m as usize);
            (Some(dirs), step, m)
        }
        None => (planned_lines(config, signal.dim())?, None, config.m),
    };
    let step = match step {
        Some(h) => h,
        None => resolve_step(config.step, &signal)?,
    };
    let m = m.unwrap_or_else(|| NdConfig::minimal_m(signal.len()));
    let files = plot::export(
        &out_dir(config),
        &signal,
        recovered.as_ref(),
        lines.as_deref(),
        step,
        m,
        grid,
    )?;
    Ok(json!({ "files": files }))
}

pub fn cmd_oracle(config: &ExperimentConfig) -> Result<serde_json::Value, CliError> {
    let run = solve(config)?;
    let truth = run.truth.as_ref().ok_or_else(|| {
        CliError::Validation("the oracle cross-check needs the true signal".into())
    })?;
    let solved = &run.solution.signal;
    let diam = truth.diameter().max(f64::MIN_POSITIVE);
    let cmax = truth.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let report = if solved.dim() == 1 {
        let positions: Vec<f64> = truth.atoms().iter().map(|a| a.t[0]).collect();
        let diffs = DifferenceMultiset::from_positions(&positions)?;
        let result = turnpike_solve(&diffs, truth.len(), 1e-9 * diam, 1_000_000);
        let mut mine: Vec<f64> = solved.atoms().iter().map(|a| a.t[0]).collect();
        mine.sort_by(f64::total_cmp);
        let lo = mine[0];
        mine.iter_mut().for_each(|x| *x -= lo);
        let width = *mine.last().unwrap_or(&0.0);
        let close =
            |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-8 * diam);
        let reflected: Vec<f64> = mine.iter().rev().map(|x| width - x).collect();
        let matching = result
            .solutions
            .iter()
            .position(|s| close(s, &mine) || close(s, &reflected));
        json!({
            "oracle": "turnpike",
            "classes": result.solutions.len(),
            "exhausted": result.exhausted,
            "matching_class": matching,
            "supports": result.solutions,
        })
    } else {
        let dim = solved.dim();
        let lines = &run.solution.report.lines;
        let projections: Vec<_> = lines.iter().map(|l| l.projection.clone()).collect();
        let tol = AssemblyTolerance {
            position: 1e-6 * diam,
            modulus: 1e-6 * cmax,
        };
        let classes = assembly_oracle(
            &projections[..dim],
            &projections[dim..],
            &run.solution.report.directions,
            solved.kernel(),
            tol,
        )?;
        let errors = classes
            .iter()
            .map(|c| best_match_error(c, solved).map(|r| ErrorReport::from(&r)))
            .collect::<Result<Vec<_>, _>>()?;
        let matching = errors
            .iter()
            .position(|e| e.t_err <= 1e-8 * diam && e.c_err <= 1e-6 * cmax);
        json!({
            "oracle": "assembly",
            "classes": classes.len(),
            "matching_class": matching,
            "class_errors": errors,
        })
    };
    write_json(&out_dir(config).join("oracle.json"), &report)?;
    Ok(report)
}
