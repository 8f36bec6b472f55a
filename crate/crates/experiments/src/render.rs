//! Plots regenerated from a stored report's series, so a results directory
//! can be re-rendered without rerunning anything.

use std::collections::BTreeSet;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use pinn_core::field::SolutionField;

use crate::plot::{heatmap, LinePlot};
use crate::report::ExperimentReport;
use crate::stats::linear_fit;
use crate::ExperimentError;

/// Times of the five slice overlays stored by the Burgers experiment.
pub const SLICE_TIMES: [f64; 5] = [0.0, 0.25, 0.5, 0.75, 1.0];

pub fn slice_key(k: usize, name: &str) -> String {
    format!("slice.{k}.{name}")
}

#[derive(Debug, Default)]
pub struct Rendered {
    pub written: Vec<PathBuf>,
    /// Plots that could not be drawn, with the reason.
    pub skipped: Vec<String>,
}

struct Sink<'a> {
    dir: &'a Path,
    done: Rendered,
}

impl Sink<'_> {
    fn put(&mut self, name: &str, svg: String) -> Result<(), ExperimentError> {
        let dir = self.dir.join("plots");
        fs::create_dir_all(&dir).map_err(|e| ExperimentError::io(&dir, e))?;
        let p = dir.join(format!("{name}.svg"));
        fs::write(&p, svg).map_err(|e| ExperimentError::io(&p, e))?;
        self.done.written.push(p);
        Ok(())
    }

    fn skip(&mut self, why: String) {
        self.done.skipped.push(why);
    }
}

fn zip(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().copied().zip(b.iter().copied()).collect()
}

/// Writes `plots/*.svg` under `dir` from the series in `rep`, plus a heatmap
/// for every binary field file found in `dir`.
pub fn emit_plots(rep: &ExperimentReport, dir: &Path) -> Result<Rendered, ExperimentError> {
    let mut s = Sink { dir, done: Rendered::default() };
    let series = |name: &str| rep.series.get(name).map(Vec::as_slice);

    let losses: Vec<_> = rep.series.iter().filter(|(k, _)| k.ends_with("loss")).collect();
    if !losses.is_empty() {
        let mut p = LinePlot::new(&format!("{} loss", rep.experiment), "log entry", "loss");
        p.log_y = true;
        for (k, v) in losses {
            p.add(k, v.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect());
        }
        s.put("loss_curves", p.to_svg())?;
    }

    match rep.experiment.as_str() {
        "C" => match (series("amplitude"), series("l2_error")) {
            (Some(a), Some(e)) => {
                let mut p = LinePlot::new("error vs far amplitude", "A", "L2(D) error").with_markers();
                p.add("||v - u||", zip(a, e));
                s.put("error_vs_amplitude", p.to_svg())?;
            }
            _ => s.skip("C: missing amplitude or l2_error series".into()),
        },
        "D1" => match series("n") {
            Some(n) => {
                let mut p = LinePlot::new("step construction error", "n", "L2 error").log_log().with_markers();
                for (k, v) in rep.series.range("error.".to_string()..) {
                    if let Some(name) = k.strip_prefix("error.") {
                        p.add(name, zip(n, v));
                    }
                }
                s.put("step_error", p.to_svg())?;
            }
            None => s.skip("D1: missing n series".into()),
        },
        "D2" => match (series("p"), series("dx"), series("error")) {
            (Some(ps), Some(dxs), Some(err)) => {
                let distinct: BTreeSet<u64> = ps.iter().map(|&p| p as u64).collect();
                for p in distinct {
                    let pts: Vec<(f64, f64)> = (0..ps.len())
                        .filter(|&i| ps[i] as u64 == p && dxs[i] > 0.0 && err[i] > 0.0)
                        .map(|i| (dxs[i], err[i]))
                        .collect();
                    let mut plot = LinePlot::new(&format!("p = {p}"), "dx", "L2 error").log_log().with_markers();
                    let lx: Vec<f64> = pts.iter().map(|q| q.0.ln()).collect();
                    let ly: Vec<f64> = pts.iter().map(|q| q.1.ln()).collect();
                    if let Some((slope, icpt)) = linear_fit(&lx, &ly) {
                        let fit = pts.iter().map(|q| (q.0, (icpt + slope * q.0.ln()).exp())).collect();
                        plot.add(&format!("fit slope {slope:.3}"), fit);
                    }
                    plot.add("measured", pts);
                    s.put(&format!("scaling_p{p}"), plot.to_svg())?;
                }
            }
            _ => s.skip("D2: missing p, dx or error series".into()),
        },
        "E" => {
            for (k, t) in SLICE_TIMES.iter().enumerate() {
                let Some(x) = series(&slice_key(k, "x")) else {
                    s.skip(format!("E: missing slice {k}"));
                    continue;
                };
                let prefix = format!("slice.{k}.");
                let mut p = LinePlot::new(&format!("u(x, {t})"), "x", "u");
                for (name, v) in rep.series.range(prefix.clone()..) {
                    let Some(label) = name.strip_prefix(&prefix) else { break };
                    if label != "x" {
                        p.add(label, zip(x, v));
                    }
                }
                s.put(&format!("slice_{k}"), p.to_svg())?;
            }
            for (what, xs, ys) in [("width", "widths", "width_rel_l2_error"), ("depth", "depths", "depth_rel_l2_error")] {
                match (series(xs), series(ys)) {
                    (Some(x), Some(y)) => {
                        let mut p = LinePlot::new(&format!("data-fit error vs {what}"), what, "relative L2 error").with_markers();
                        p.log_y = true;
                        p.add("data fit", zip(x, y));
                        s.put(&format!("error_vs_{what}"), p.to_svg())?;
                    }
                    _ => s.skip(format!("E: missing {xs} series")),
                }
            }
        }
        _ => {}
    }

    let mut bins: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.extension().is_some_and(|e| e == "bin")).collect(),
        Err(_) => Vec::new(),
    };
    bins.sort();
    for b in bins {
        let stem = b.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let file = fs::File::open(&b).map_err(|e| ExperimentError::io(&b, e))?;
        match SolutionField::<f64>::read_binary(BufReader::new(file)) {
            Ok(f) => s.put(&format!("{stem}_heatmap"), heatmap(&f, &stem, 200))?,
            Err(e) => s.skip(format!("{}: {e}", b.display())),
        }
    }
    Ok(s.done)
}
