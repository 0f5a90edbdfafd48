//! Tabular exports for figures: density and intensity grids, sampling lines,
//! and a true-versus-recovered scatter.

use std::path::{Path, PathBuf};

use phaseline_core::{apply_frame, best_match_error, SparseSignal, StructureKernel};

use crate::error::CliError;

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    let io = |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    let file = std::fs::File::create(path).map_err(io)?;
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

fn write_rows(
    path: &Path,
    header: &[String],
    rows: impl Iterator<Item = Vec<String>>,
) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(header).map_err(csv_err(path))?;
    for row in rows {
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn axis_names(prefix: &str, dim: usize) -> Vec<String> {
    (1..=dim).map(|d| format!("{prefix}_{d}")).collect()
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

/// Evaluates `f` on a `grid × grid` lattice over `[lo, hi]²`, `x` fastest.
fn grid_rows(
    lo: [f64; 2],
    hi: [f64; 2],
    grid: usize,
    f: impl Fn(f64, f64) -> f64,
) -> impl Iterator<Item = Vec<String>> {
    let xs = linspace(lo[0], hi[0], grid);
    let ys = linspace(lo[1], hi[1], grid);
    ys.into_iter().flat_map(move |y| {
        let row: Vec<Vec<String>> = xs
            .iter()
            .map(|&x| vec![x.to_string(), y.to_string(), f(x, y).to_string()])
            .collect();
        row
    })
}

/// Writes the exports into `out` and returns the paths written. Grids are
/// only produced for planar Gaussian signals; point signals get the scatter
/// (and the lines, when known).
pub fn export(
    out: &Path,
    truth: &SparseSignal,
    recovered: Option<&SparseSignal>,
    lines: Option<&[Vec<f64>]>,
    step: f64,
    m: usize,
    grid: usize,
) -> Result<Vec<PathBuf>, CliError> {
    if grid == 0 {
        return Err(CliError::Validation("grid size must be positive".into()));
    }
    let dim = truth.dim();
    let mut written = Vec::new();

    let mut header = vec!["atom".to_string(), "source".to_string()];
    header.extend(axis_names("t", dim));
    header.extend(["re", "im", "modulus"].map(String::from));
    let row = |n: usize, source: &str, a: &phaseline_core::signal::Atom| {
        let mut r = vec![n.to_string(), source.to_string()];
        r.extend(a.t.iter().map(f64::to_string));
        r.extend([a.c.re, a.c.im, a.c.norm()].map(|x| x.to_string()));
        r
    };
    let mut rows: Vec<Vec<String>> = truth
        .atoms()
        .iter()
        .enumerate()
        .map(|(n, a)| row(n, "truth", a))
        .collect();
    if let Some(rec) = recovered {
        let report = best_match_error(truth, rec)?;
        let aligned = apply_frame(rec, &report.frame);
        for (n, &j) in report.permutation.iter().enumerate() {
            rows.push(row(n, "recovered", &aligned.atoms()[j]));
        }
    }
    let path = out.join("scatter.csv");
    write_rows(&path, &header, rows.into_iter())?;
    written.push(path);

    if let Some(lines) = lines {
        let mut header = vec!["line".to_string(), "step".to_string(), "m_max".to_string()];
        header.extend(axis_names("zeta", dim));
        header.extend(axis_names("end", dim));
        let extent = step * m as f64;
        let rows = lines.iter().enumerate().map(|(i, z)| {
            let mut r = vec![i.to_string(), step.to_string(), m.to_string()];
            r.extend(z.iter().map(f64::to_string));
            r.extend(z.iter().map(|x| (x * extent).to_string()));
            r
        });
        let path = out.join("lines.csv");
        write_rows(&path, &header, rows)?;
        written.push(path);
    }

    if let (StructureKernel::Gaussian { sigma }, 2) = (truth.kernel(), dim) {
        let t = truth.translations();
        let pad = 4.0 * sigma;
        let lo = [0, 1].map(|d| t.iter().map(|p| p[d]).fold(f64::INFINITY, f64::min) - pad);
        let hi = [0, 1].map(|d| t.iter().map(|p| p[d]).fold(f64::NEG_INFINITY, f64::max) + pad);
        let header = ["x", "y", "density"].map(String::from);
        let path = out.join("density.csv");
        write_rows(
            &path,
            &header,
            grid_rows(lo, hi, grid, |x, y| {
                truth.density_modulus(&[x, y]).unwrap_or(0.0)
            }),
        )?;
        written.push(path);

        let band = step * m as f64;
        let header = ["omega_x", "omega_y", "intensity"].map(String::from);
        let path = out.join("intensity.csv");
        write_rows(
            &path,
            &header,
            grid_rows([-band; 2], [band; 2], grid, |x, y| {
                truth.fourier_intensity(&[x, y])
            }),
        )?;
        written.push(path);
    }
    Ok(written)
}
