//! Gnuplot data files and a plotting script from trace CSVs.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{CliError, Result};
use crate::formats;
use crate::trace::{format_f64, read_trace, TraceRecord};

/// Marker for absent values; the script declares it with `set datafile missing`.
pub const MISSING: &str = "?";

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    pub rows: Vec<TraceRecord>,
}

impl Series {
    pub fn load(path: &Path) -> Result<Self> {
        let bytes = formats::read_bytes(path)?;
        let rows = read_trace(bytes.as_slice())
            .map_err(|e| CliError::Malformed(format!("{}: {e}", path.display())))?;
        if rows.is_empty() {
            return Err(CliError::Malformed(format!("{}: trace has no rows", path.display())));
        }
        Ok(Self { label: label_for(path), rows })
    }

    pub fn objective_is_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].objective <= w[0].objective + 1e-9 * (1.0 + w[0].objective.abs()))
    }

    fn min_objective(&self) -> f64 {
        self.rows.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min)
    }
}

fn label_for(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    match path.parent().and_then(Path::file_name) {
        Some(dir) if stem == "trace" => dir.to_string_lossy().into_owned(),
        _ => stem,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map(format_f64).unwrap_or_else(|| MISSING.to_string())
}

/// `k F gap residual_sq lyapunov psnr`, where `gap = F − min F` with the
/// zero at the minimum written as missing so log scales stay valid.
pub fn series_data(s: &Series) -> String {
    let f_min = s.min_objective();
    let mut out = format!("# {}\n# k F gap residual_sq lyapunov psnr\n", s.label);
    for r in &s.rows {
        let gap = r.objective - f_min;
        let _ = writeln!(
            out,
            "{} {} {} {} {} {}",
            r.k,
            format_f64(r.objective),
            cell((gap > 0.0).then_some(gap)),
            cell(r.residual_sq),
            cell(r.lyapunov),
            cell(r.psnr.filter(|p| p.is_finite())),
        );
    }
    out
}

/// One row per `k` present in any trace: `k`, then `F` of every series,
/// then `residual_sq` of every series.
pub fn comparison_data(series: &[Series]) -> String {
    let ks: BTreeSet<usize> = series.iter().flat_map(|s| s.rows.iter().map(|r| r.k)).collect();
    let mut out = String::from("# k");
    for s in series {
        let _ = write!(out, " F[{}]", s.label);
    }
    for s in series {
        let _ = write!(out, " residual_sq[{}]", s.label);
    }
    out.push('\n');
    for k in ks {
        let found: Vec<Option<&TraceRecord>> = series
            .iter()
            .map(|s| s.rows.binary_search_by_key(&k, |r| r.k).ok().map(|i| &s.rows[i]))
            .collect();
        let _ = write!(out, "{k}");
        for r in &found {
            let _ = write!(out, " {}", cell(r.map(|r| r.objective)));
        }
        for r in &found {
            let _ = write!(out, " {}", cell(r.and_then(|r| r.residual_sq)));
        }
        out.push('\n');
    }
    out
}

/// Script rendering `objective.png` (log y) and `residual.png` (log y).
/// Plots `F` directly when every value is positive, otherwise `F − min F`.
pub fn gnuplot_script(series: &[Series], files: &[String]) -> String {
    let positive = series.iter().all(|s| s.min_objective() > 0.0);
    let (column, ylabel) = if positive { (2, "F(x_k)") } else { (3, "F(x_k) - min F") };
    let plot = |col: usize| {
        series
            .iter()
            .zip(files)
            .map(|(s, f)| format!("'{f}' using 1:{col} with lines title '{}'", s.label.replace('\'', "")))
            .collect::<Vec<_>>()
            .join(", \\\n     ")
    };
    let mut out = String::new();
    out.push_str("# gnuplot curves.gp\n");
    out.push_str("set datafile missing '?'\nset terminal pngcairo size 800,500\nset logscale y\nset xlabel 'k'\nset grid\n");
    let _ = writeln!(out, "set output 'objective.png'\nset ylabel '{ylabel}'\nplot {}", plot(column));
    let _ = writeln!(out, "set output 'residual.png'\nset ylabel '|x_(k+1) - x_k|^2'\nplot {}", plot(4));
    out
}

/// Files written by [`write_curves`].
#[derive(Debug, Clone)]
pub struct CurvesOutput {
    pub files: Vec<PathBuf>,
    /// Labels of series whose `F` increases somewhere.
    pub non_monotone: Vec<String>,
}

pub fn write_curves(traces: &[PathBuf], out: &Path) -> Result<CurvesOutput> {
    if traces.is_empty() {
        return Err(CliError::Usage("no trace files given".into()));
    }
    let series = traces.iter().map(|p| Series::load(p)).collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let names: Vec<String> = (0..series.len()).map(|i| format!("curve{}.dat", i + 1)).collect();
    let mut files = Vec::new();
    let mut write = |name: &str, text: String| -> Result<()> {
        let path = out.join(name);
        formats::write_bytes(&path, text.as_bytes())?;
        files.push(path);
        Ok(())
    };
    for (s, name) in series.iter().zip(&names) {
        write(name, series_data(s))?;
    }
    write("comparison.dat", comparison_data(&series))?;
    write("curves.gp", gnuplot_script(&series, &names))?;
    let non_monotone =
        series.iter().filter(|s| !s.objective_is_monotone()).map(|s| s.label.clone()).collect();
    Ok(CurvesOutput { files, non_monotone })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(label: &str, ks: &[usize], f: &[f64]) -> Series {
        let rows = ks
            .iter()
            .zip(f)
            .map(|(&k, &objective)| TraceRecord {
                k,
                objective,
                lyapunov: None,
                residual_sq: (k > 0).then_some(1.0 / k as f64),
                psnr: None,
                elapsed_s: None,
            })
            .collect();
        Series { label: label.into(), rows }
    }

    #[test]
    fn data_file_keeps_order_and_marks_missing() {
        let s = series("pgd", &[0, 1, 2], &[3.0, 2.0, 1.5]);
        assert!(s.objective_is_monotone());
        let text = series_data(&s);
        let rows: Vec<&str> = text.lines().skip(2).collect();
        assert_eq!(rows, ["0 3 1.5 ? ? ?", "1 2 0.5 1 ? ?", "2 1.5 ? 0.5 ? ?"]);
    }

    #[test]
    fn comparison_aligns_k() {
        let a = series("pgd", &[0, 1, 2], &[3.0, 2.0, 1.0]);
        let b = series("alpha", &[0, 1], &[3.0, 1.0]);
        let text = comparison_data(&[a, b]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# k F[pgd] F[alpha] residual_sq[pgd] residual_sq[alpha]");
        assert_eq!(lines[3], "2 1 ? 0.5 ?");
    }

    #[test]
    fn script_switches_to_gap_for_nonpositive_objectives() {
        let a = series("a", &[0, 1], &[1.0, -1.0]);
        let gp = gnuplot_script(&[a], &["curve1.dat".into()]);
        assert!(gp.contains("using 1:3"));
        let b = series("b", &[0, 1], &[2.0, 1.0]);
        assert!(gnuplot_script(&[b], &["curve1.dat".into()]).contains("using 1:2"));
    }

    #[test]
    fn labels() {
        assert_eq!(label_for(Path::new("runs/pgd/trace.csv")), "pgd");
        assert_eq!(label_for(Path::new("runs/alpha.csv")), "alpha");
    }
}
