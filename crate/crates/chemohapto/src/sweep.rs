//! Parameter sweeps over a base configuration.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use chemohapto_core::KineticSpec;
use rayon::prelude::*;

use crate::config::RunConfig;
use crate::io;
use crate::run::{run_to_dir, Prepared, Report};

pub const MAX_POINTS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AxisName {
    Chi,
    Mu,
    K,
    MassScale,
    Tau,
}

impl AxisName {
    pub fn as_str(&self) -> &'static str {
        match self {
            AxisName::Chi => "chi",
            AxisName::Mu => "mu",
            AxisName::K => "k",
            AxisName::MassScale => "mass_scale",
            AxisName::Tau => "tau",
        }
    }
}

/// `name=start:stop:steps[:log]`
#[derive(Clone, Debug, PartialEq)]
pub struct Axis {
    pub name: AxisName,
    pub values: Vec<f64>,
}

impl FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (name, range) = s
            .split_once('=')
            .context("axis must look like name=start:stop:steps[:log]")?;
        let name = match name.trim() {
            "chi" => AxisName::Chi,
            "mu" => AxisName::Mu,
            "k" => AxisName::K,
            "mass_scale" => AxisName::MassScale,
            "tau" => AxisName::Tau,
            other => bail!("unknown axis {other:?}: expected chi, mu, k, mass_scale or tau"),
        };
        let parts: Vec<&str> = range.split(':').collect();
        let log = match parts.as_slice() {
            [_, _, _] => false,
            [_, _, _, "log"] => true,
            _ => bail!("axis {s:?}: expected start:stop:steps[:log]"),
        };
        let start: f64 = parts[0]
            .parse()
            .with_context(|| format!("axis {s:?}: bad start"))?;
        let stop: f64 = parts[1]
            .parse()
            .with_context(|| format!("axis {s:?}: bad stop"))?;
        let steps: usize = parts[2]
            .parse()
            .with_context(|| format!("axis {s:?}: bad step count"))?;
        if steps == 0 {
            bail!("axis {s:?}: step count must be >= 1");
        }
        if !(start.is_finite() && stop.is_finite()) {
            bail!("axis {s:?}: bounds must be finite");
        }
        if log && !(start > 0.0 && stop > 0.0) {
            bail!("axis {s:?}: log spacing needs positive bounds");
        }
        let values = (0..steps)
            .map(|i| {
                if i == 0 {
                    return start;
                }
                if i == steps - 1 {
                    return stop;
                }
                let t = i as f64 / (steps - 1) as f64;
                if log {
                    (start.ln() + t * (stop.ln() - start.ln())).exp()
                } else {
                    start + t * (stop - start)
                }
            })
            .collect();
        Ok(Axis { name, values })
    }
}

/// Sets one axis value on a configuration.
pub fn apply(cfg: &mut RunConfig, name: AxisName, value: f64) -> Result<()> {
    match name {
        AxisName::Chi => cfg.model.chi = value,
        AxisName::Tau => cfg.model.tau = value,
        AxisName::MassScale => cfg.initial.mass_scale = value,
        AxisName::Mu => match &mut cfg.model.kinetics {
            KineticSpec::Logistic { mu } | KineticSpec::IterLog { mu, .. } => *mu = value,
            other => bail!("axis mu needs logistic or iter_log kinetics, found {other:?}"),
        },
        AxisName::K => {
            if value.fract() != 0.0 || value < 1.0 {
                bail!("axis k takes positive integers, got {value}");
            }
            match &mut cfg.model.kinetics {
                KineticSpec::IterLog { k, .. } => *k = value as u32,
                other => bail!("axis k needs iter_log kinetics, found {other:?}"),
            }
        }
    }
    Ok(())
}

/// Cartesian product of the axes, last axis fastest.
pub fn points(axes: &[Axis]) -> Result<Vec<Vec<f64>>> {
    let total = axes.iter().try_fold(1usize, |n, a| n.checked_mul(a.values.len()));
    match total {
        Some(n) if n <= MAX_POINTS => {}
        _ => bail!("sweep has more than {MAX_POINTS} points"),
    }
    let mut out = vec![Vec::new()];
    for a in axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                a.values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PointResult {
    pub index: usize,
    pub values: Vec<f64>,
    pub report: Option<Report>,
    pub error: Option<String>,
}

impl PointResult {
    /// `satisfied`, `not_satisfied` or `unknown`.
    pub fn verdict(&self) -> &'static str {
        match self.report.as_ref().and_then(|r| r.threshold.as_ref()) {
            Some(t) if t.condition_case.is_satisfied() => "satisfied",
            Some(_) => "not_satisfied",
            None => "unknown",
        }
    }

    pub fn classification(&self) -> &str {
        self.report
            .as_ref()
            .and_then(|r| r.run.as_ref())
            .and_then(|r| r.classification.as_deref())
            .unwrap_or("unclassified")
    }
}

fn run_point(
    base_cfg: &RunConfig,
    base: &Path,
    axes: &[Axis],
    index: usize,
    values: &[f64],
    dir: &Path,
) -> PointResult {
    let result = (|| -> Result<Report> {
        let mut cfg = base_cfg.clone();
        for (a, &v) in axes.iter().zip(values) {
            apply(&mut cfg, a.name, v)?;
        }
        let point_dir = dir.join(format!("point-{index:05}"));
        cfg.output.dir = point_dir.clone();
        let prep = Prepared::new(cfg, base)?;
        std::fs::create_dir_all(&point_dir)?;
        io::write_text(&point_dir.join("config.toml"), &prep.config.to_toml()?)?;
        Ok(run_to_dir(&prep, &point_dir)?.1)
    })();
    match result {
        Ok(report) => PointResult {
            index,
            values: values.to_vec(),
            error: report.run.as_ref().and_then(|r| r.failure.clone()),
            report: Some(report),
        },
        Err(e) => PointResult {
            index,
            values: values.to_vec(),
            report: None,
            error: Some(format!("{e:#}")),
        },
    }
}

/// Runs every point on a pool of `threads` workers. Each point writes into
/// its own subdirectory of `dir`; failures are recorded and skipped.
pub fn run_sweep(
    cfg: &RunConfig,
    base: &Path,
    axes: &[Axis],
    dir: &Path,
    threads: usize,
) -> Result<Vec<PointResult>> {
    let pts = points(axes)?;
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()?;
    let results: Vec<PointResult> = pool.install(|| {
        pts.par_iter()
            .enumerate()
            .map(|(i, p)| run_point(cfg, base, axes, i, p, dir))
            .collect()
    });
    io::write_text(&dir.join("sweep.csv"), &sweep_csv(axes, &results))?;
    io::write_text(&dir.join("summary.txt"), &confusion_summary(&results))?;
    Ok(results)
}

fn csv_cell(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn sweep_csv(axes: &[Axis], results: &[PointResult]) -> String {
    let mut s = String::from("index");
    for a in axes {
        write!(s, ",{}", a.name.as_str()).unwrap();
    }
    s.push_str(",condition_case,verdict,classification,status,diverged_at,peak_linf_u,peak_l2_u,peak_grad_v_l4,error\n");
    for r in results {
        write!(s, "{}", r.index).unwrap();
        for v in &r.values {
            write!(s, ",{v:.16e}").unwrap();
        }
        let case = r
            .report
            .as_ref()
            .and_then(|x| x.threshold.as_ref())
            .map_or("", |t| t.condition_case.as_str());
        let run = r.report.as_ref().and_then(|x| x.run.as_ref());
        let num = |v: Option<f64>| v.map_or(String::new(), |v| format!("{v:.16e}"));
        writeln!(
            s,
            ",{case},{},{},{},{},{},{},{},{}",
            r.verdict(),
            r.classification(),
            run.map_or("", |x| x.status.as_str()),
            num(run.and_then(|x| x.diverged_at)),
            num(run.map(|x| x.peaks.linf_u)),
            num(run.map(|x| x.peaks.l2_u)),
            num(run.map(|x| x.peaks.grad_v_l4)),
            csv_cell(r.error.as_deref().unwrap_or(""))
        )
        .unwrap();
    }
    s
}

/// Verdict-by-classification count table.
pub fn confusion_summary(results: &[PointResult]) -> String {
    const VERDICTS: [&str; 3] = ["satisfied", "not_satisfied", "unknown"];
    const CLASSES: [&str; 4] = ["bounded_plateau", "growing", "diverged", "unclassified"];
    let mut s = format!("{:<16}", "verdict");
    for c in CLASSES {
        write!(s, " {c:>16}").unwrap();
    }
    s.push('\n');
    for v in VERDICTS {
        write!(s, "{v:<16}").unwrap();
        for c in CLASSES {
            let n = results
                .iter()
                .filter(|r| r.verdict() == v && r.classification() == c)
                .count();
            write!(s, " {n:>16}").unwrap();
        }
        s.push('\n');
    }
    let failed = results.iter().filter(|r| r.error.is_some()).count();
    writeln!(s, "points {}  failed {failed}", results.len()).unwrap();
    s
}
