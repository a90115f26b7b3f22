use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use psrecon::boundary::QuadratureRule;
use psrecon::geometry::{Model, Point};
use psrecon::io::fmt_f64;
use psrecon::numeric::stats::{mean, median, standard_error};
use psrecon::processes::Configuration;
use psrecon::psmeasure::{
    conformal_density_moments, critical_exponent, critical_exponent_window, fourier_coeffs, harmonic_measure_coeffs,
    ps_empirical, MeasureComparison,
};
use psrecon::reconstruct::{ReconstructionTrace, DISK_S_GRID};
use psrecon::variance::{
    decay_ratio, failure_ratio, mc_variance, scan_spread, up_exp_scan, variance_bound_check, QuadSpec, RadialWeight,
    StatWeight, Statistic, ValueSpace, FAILURE_BOUND,
};
use psrecon::verify::{self, VerifyOptions};
use psrecon::{Error, Result};

use crate::config::RunConfig;

/// Writer for a path, or stdout for `-`.
pub fn open_out(path: &str) -> Result<Box<dyn Write>> {
    if path == "-" {
        Ok(Box::new(BufWriter::new(io::stdout().lock())))
    } else {
        let f = File::create(path).map_err(|e| Error::Usage(format!("cannot create {path}: {e}")))?;
        Ok(Box::new(BufWriter::new(f)))
    }
}

fn write_json<T: serde::Serialize>(path: &str, value: &T) -> Result<()> {
    let mut w = open_out(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Runs the verification suite; `Ok(false)` when a check fails.
pub fn verify(filter: Option<String>, perturb: f64, out: &str) -> Result<bool> {
    let checks = verify::run(&VerifyOptions { filter, perturb })?;
    let mut w = open_out(out)?;
    for c in &checks {
        writeln!(w, "{c}")?;
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    writeln!(w, "{} checks, {} passed, {} failed", checks.len(), checks.len() - failed, failed)?;
    w.flush()?;
    if checks.is_empty() {
        return Err(Error::Usage("filter matched no checks".into()));
    }
    Ok(failed == 0)
}

pub fn sample(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.sampler()?;
    let conf = spec.sample(cfg.u64_or("replication", 0)?)?;
    let mut w = open_out(cfg.out())?;
    conf.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn default_grid(model: Model) -> Vec<f64> {
    let h = model.entropy();
    DISK_S_GRID.iter().map(|s| h + (s - 1.0)).collect()
}

fn rep_path(out: &str, rep: u64) -> PathBuf {
    let p = Path::new(out);
    let stem = p.file_stem().and_then(|s| s.to_str()).unwrap_or("trace");
    p.with_file_name(format!("{stem}.rep{rep}.csv"))
}

pub fn reconstruct(cfg: &RunConfig) -> Result<()> {
    let n_reps = cfg.usize_or("n_reps", 1)?;
    if let Some(input) = cfg.get("input") {
        let f = File::open(input).map_err(|e| Error::Usage(format!("cannot open {input}: {e}")))?;
        let conf = Configuration::read_csv(BufReader::new(f))?;
        let model = conf.model();
        let grid = cfg.list("s_grid")?.unwrap_or_else(|| default_grid(model));
        let trace = ReconstructionTrace::compute(&conf, &cfg.point("z", model)?, &grid, &cfg.target(model)?)?;
        let mut w = open_out(cfg.out())?;
        trace.write_csv(&mut w)?;
        w.flush()?;
        return Ok(());
    }
    let spec = cfg.sampler()?;
    let model = spec.model;
    let z = cfg.point("z", model)?;
    let f = cfg.target(model)?;
    let grid = cfg.list("s_grid")?.unwrap_or_else(|| default_grid(model));
    if n_reps <= 1 {
        let trace = ReconstructionTrace::compute(&spec.sample(0)?, &z, &grid, &f)?;
        let mut w = open_out(cfg.out())?;
        trace.write_csv(&mut w)?;
        w.flush()?;
        return Ok(());
    }
    let out = cfg.out();
    if out == "-" {
        return Err(Error::Usage("ensemble reconstruction writes several files; set `out` to a path".into()));
    }
    let traces = spec.ensemble(n_reps, |_, conf| ReconstructionTrace::compute(conf, &z, &grid, &f))?;
    for (rep, t) in traces.iter().enumerate() {
        let mut w = open_out(rep_path(out, rep as u64).to_str().expect("utf-8 path"))?;
        t.write_csv(&mut w)?;
        w.flush()?;
    }
    let mut w = open_out(out)?;
    writeln!(w, "# n_reps={n_reps}")?;
    writeln!(w, "s,median_abs_err,mean_abs_err,mean_ratio_re,mean_ratio_im,mean_num_re,mean_num_im,num_stderr,reference_re,reference_im,tail_fraction")?;
    for k in 0..traces[0].rows.len() {
        let rows: Vec<_> = traces.iter().map(|t| t.rows[k]).collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.abs_err).collect();
        let col = |g: &dyn Fn(&psrecon::reconstruct::TraceRow) -> f64| rows.iter().map(g).collect::<Vec<f64>>();
        let num_re = col(&|r| r.numerator.re);
        let num_im = col(&|r| r.numerator.im);
        let num_se = standard_error(&num_re).hypot(standard_error(&num_im));
        let r0 = rows[0];
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{},{}",
            fmt_f64(r0.s),
            fmt_f64(median(&errs)),
            fmt_f64(mean(&errs)),
            fmt_f64(mean(&col(&|r| r.ratio.re))),
            fmt_f64(mean(&col(&|r| r.ratio.im))),
            fmt_f64(mean(&num_re)),
            fmt_f64(mean(&num_im)),
            fmt_f64(num_se),
            fmt_f64(r0.reference.re),
            fmt_f64(r0.reference.im),
            fmt_f64(r0.tail_fraction)
        )?;
    }
    w.flush()?;
    Ok(())
}

fn stat_weight(cfg: &RunConfig) -> Result<StatWeight> {
    let text = cfg.get("weight").ok_or_else(|| Error::Usage("variance needs a `weight`".into()))?;
    match text.strip_prefix("exp:") {
        Some(s) => Ok(StatWeight::Exponential(
            s.trim().parse().map_err(|_| Error::Usage(format!("bad exponent in `{text}`")))?,
        )),
        None => Ok(StatWeight::Radial(text.parse()?)),
    }
}

fn space(cfg: &RunConfig) -> Result<ValueSpace> {
    cfg.get("space").unwrap_or("scalar").parse()
}

pub fn variance(cfg: &RunConfig) -> Result<()> {
    let quad = QuadSpec::default();
    let mode = cfg.get("mode").unwrap_or("report");
    match mode {
        "report" => {
            let spec = cfg.sampler()?;
            let mut stat = Statistic::new(stat_weight(cfg)?, cfg.point("z", spec.model)?, space(cfg)?);
            stat.n_max = cfg.usize_or("n_max", stat.n_max)?;
            let report = mc_variance(&spec, &stat, cfg.usize_or("n_reps", 1000)?, &quad)?;
            write_json(cfg.out(), &report)
        }
        "bound" => {
            let spec = cfg.sampler()?;
            let stat = Statistic::new(stat_weight(cfg)?, cfg.point("z", spec.model)?, ValueSpace::Scalar);
            let probe = |p: &Point| -> Complex64 {
                let conf = Configuration::from_points(spec.model, vec![p.clone()]).expect("one interior point");
                stat.weights(&conf)[0].into()
            };
            let report = variance_bound_check(&spec, probe, cfg.usize_or("n_reps", 1000)?)?;
            write_json(cfg.out(), &report)
        }
        "scan" => {
            let spec = cfg.sampler()?;
            let z = cfg.point("z", spec.model)?;
            let grid = cfg.list("s_grid")?.unwrap_or_else(|| vec![1.5, 1.3, 1.2]);
            let rows =
                up_exp_scan(&spec, &z, &grid, space(cfg)?, cfg.usize_or("n_max", 64)?, cfg.usize_or("n_reps", 100)?)?;
            let path = cfg.get("scan_out").unwrap_or(cfg.out());
            let mut w = open_out(path)?;
            writeln!(w, "# spread={}", fmt_f64(scan_spread(&rows)))?;
            writeln!(w, "s,variance,stderr,scaled")?;
            for r in &rows {
                writeln!(w, "{},{},{},{}", fmt_f64(r.s), fmt_f64(r.variance), fmt_f64(r.stderr), fmt_f64(r.scaled))?;
            }
            w.flush()?;
            Ok(())
        }
        "failure-scan" => {
            let z = cfg.point("z", Model::DISK)?;
            let mut w = open_out(cfg.scan_or_out())?;
            writeln!(w, "weight,ratio,bound")?;
            for weight in RadialWeight::failure_family() {
                let r = failure_ratio(&weight, &z, &quad)?;
                writeln!(w, "{weight},{},{}", fmt_f64(r), fmt_f64(FAILURE_BOUND))?;
            }
            w.flush()?;
            Ok(())
        }
        "decay" => {
            let z = cfg.point("z", Model::DISK)?;
            let grid = cfg.list("s_grid")?.unwrap_or_else(|| vec![1.1, 1.01, 1.001]);
            let mut w = open_out(cfg.scan_or_out())?;
            writeln!(w, "s,ratio,ratio_log")?;
            for s in grid {
                let r = decay_ratio(s, &z, &quad)?;
                writeln!(w, "{},{},{}", fmt_f64(s), fmt_f64(r), fmt_f64(r * (1.0 / (s - 1.0)).ln()))?;
            }
            w.flush()?;
            Ok(())
        }
        other => Err(Error::Usage(format!("unknown variance mode `{other}`"))),
    }
}

impl RunConfig {
    fn scan_or_out(&self) -> &str {
        self.get("scan_out").unwrap_or(self.out())
    }
}

pub fn psmeasure(cfg: &RunConfig) -> Result<()> {
    let spec = cfg.sampler()?;
    let model = spec.model;
    let y = cfg.point("y", model)?;
    let s = cfg.f64_or("s", model.entropy() + 0.2)?;
    let n_reps = cfg.usize_or("n_reps", 1)?;
    let n_max = cfg.usize_or("n_max", 8)?;
    let (empirical, reference) = if model == Model::DISK {
        let per_rep = spec.ensemble(n_reps, |_, conf| fourier_coeffs(&ps_empirical(conf, &y, s)?, n_max))?;
        let emp =
            (0..=n_max).map(|n| per_rep.iter().map(|c| c[n]).sum::<Complex64>() / n_reps as f64).collect::<Vec<_>>();
        (emp, harmonic_measure_coeffs(&y, n_max)?)
    } else {
        // Sphere models: first and second moments, flattened into the same columns.
        let per_rep = spec.ensemble(n_reps, |_, conf| ps_empirical(conf, &y, s)?.moments())?;
        let flat = |m: &psrecon::psmeasure::Moments| m.first.iter().chain(&m.second).copied().collect::<Vec<f64>>();
        let rows: Vec<Vec<f64>> = per_rep.iter().map(flat).collect();
        let emp = (0..rows[0].len())
            .map(|k| Complex64::new(rows.iter().map(|r| r[k]).sum::<f64>() / n_reps as f64, 0.0))
            .collect();
        let reference = flat(&conformal_density_moments(&y, &QuadratureRule::default_for(model))?);
        (emp, reference.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    };
    let cmp = MeasureComparison::new(empirical, reference)?;
    let mut w = open_out(cfg.out())?;
    writeln!(w, "# model={model}")?;
    writeln!(w, "# s={}", fmt_f64(s))?;
    writeln!(w, "# n_reps={n_reps}")?;
    cmp.write_csv(&mut w)?;
    w.flush()?;
    if let Some(path) = cfg.get("exponent_out") {
        let report = match cfg.list("exponent_window")? {
            Some(win) if win.len() == 3 => {
                let confs = spec.ensemble(n_reps, |_, conf| Ok(conf.clone()))?;
                critical_exponent_window(&confs, win[0], win[1], win[2])?
            }
            Some(_) => return Err(Error::Usage("`exponent_window` takes lo,hi,step".into())),
            None => critical_exponent(&spec.sample(0)?)?,
        };
        write_json(path, &report)?;
    }
    Ok(())
}
