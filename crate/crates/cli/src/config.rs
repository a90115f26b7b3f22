//! Plain-text `key = value` run configuration.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use psrecon::boundary::{BoundaryFunction, FourierSeries, QuadratureRule};
use psrecon::geometry::{BoundaryPoint, Model, Point};
use psrecon::processes::{ProcessKind, SamplerSpec};
use psrecon::reconstruct::TargetFunction;
use psrecon::{Error, Result};

/// Every accepted key with its documented default.
pub const KEYS: &[(&str, &str)] = &[
    ("model", "disk | complex-ball:D | real-ball:M (default disk)"),
    ("process", "poisson | gaf (default poisson)"),
    ("lambda", "Poisson intensity (default 1)"),
    ("R", "Poisson truncation radius (default 10)"),
    ("N", "GAF polynomial degree (default 256)"),
    ("r_edge", "GAF retention radius (default 0.9)"),
    ("seed", "master seed (default 0)"),
    ("replication", "replication index for `sample` (default 0)"),
    ("n_reps", "number of replications (default 1; variance needs >= 100)"),
    ("input", "configuration CSV to use instead of sampling (reconstruct)"),
    ("z", "base point, comma-separated real coordinates (default origin)"),
    ("y", "psmeasure base point (default origin)"),
    ("s", "psmeasure exponent (default h + 0.2)"),
    ("s_grid", "comma-separated exponents"),
    ("target", "constant:C | fourier:n=re[/im];... | pole:x1,x2,... | file:PATH (default constant:1)"),
    ("weight", "constant:C | indicator:RHO | ws:S | table:r/v;... | exp:S"),
    ("space", "scalar | hardy | l2 (default scalar)"),
    ("n_max", "truncation order of Fourier/Hardy vectors"),
    ("mode", "variance mode: report | scan | bound | failure-scan | decay (default report)"),
    ("out", "output path, - for stdout (default -)"),
    ("scan_out", "secondary CSV path for variance scans"),
    ("exponent_out", "JSON path for the psmeasure critical-exponent report"),
    ("exponent_window", "lo,hi,step for a pooled critical-exponent fit"),
];

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<String, String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Usage(format!("config line {}: expected `key = value`", i + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Usage(format!("cannot read {}: {e}", path.display())))?;
        RunConfig::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(Error::Usage(format!("unknown config key `{key}`")));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        self.get(key).map_or(Ok(default), |v| parse_num(key, v))
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        self.get(key).map_or(Ok(default), |v| {
            v.parse().map_err(|_| Error::Usage(format!("`{key}` must be a nonnegative integer, got `{v}`")))
        })
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        self.get(key).map_or(Ok(default), |v| {
            v.parse().map_err(|_| Error::Usage(format!("`{key}` must be a nonnegative integer, got `{v}`")))
        })
    }

    pub fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.get(key).map(|v| v.split(',').map(|t| parse_num(key, t.trim())).collect()).transpose()
    }

    pub fn model(&self) -> Result<Model> {
        self.get("model").unwrap_or("disk").parse()
    }

    pub fn point(&self, key: &str, model: Model) -> Result<Point> {
        match self.list(key)? {
            None => Ok(Point::origin(model)),
            Some(c) => Point::new(model, &c),
        }
    }

    pub fn out(&self) -> &str {
        self.get("out").unwrap_or("-")
    }

    pub fn sampler(&self) -> Result<SamplerSpec> {
        let model = self.model()?;
        let seed = self.u64_or("seed", 0)?;
        let kind: ProcessKind = self.get("process").unwrap_or("poisson").parse()?;
        match kind {
            ProcessKind::Poisson => {
                SamplerSpec::poisson(model, self.f64_or("lambda", 1.0)?, self.f64_or("R", 10.0)?, seed)
            }
            ProcessKind::GafZeros => {
                if model != Model::DISK {
                    return Err(Error::Usage(format!("GAF zeros live on the disk, not on {model}")));
                }
                SamplerSpec::gaf(self.usize_or("N", 256)?, self.f64_or("r_edge", 0.9)?, seed)
            }
        }
    }

    pub fn target(&self, model: Model) -> Result<TargetFunction> {
        parse_target(self.get("target").unwrap_or("constant:1"), model)
    }
}

fn parse_num(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>().map_err(|_| Error::Usage(format!("`{key}` expects a number, got `{v}`")))
}

pub fn parse_target(text: &str, model: Model) -> Result<TargetFunction> {
    let (kind, arg) = text.split_once(':').ok_or_else(|| Error::Usage(format!("bad target `{text}`")))?;
    match kind.trim() {
        "constant" => Ok(TargetFunction::constant(parse_num("target", arg.trim())?)),
        "pole" => {
            let c: Vec<f64> = arg.split(',').map(|t| parse_num("target", t.trim())).collect::<Result<_>>()?;
            Ok(TargetFunction::KernelPole(BoundaryPoint::from_direction(model, &c)?))
        }
        "fourier" => {
            if model != Model::DISK {
                return Err(Error::Usage("Fourier targets need the disk".into()));
            }
            let mut terms = Vec::new();
            for item in arg.split(';') {
                let (n, c) = item.split_once('=').ok_or_else(|| Error::Usage(format!("bad Fourier term `{item}`")))?;
                let n: i64 = n.trim().parse().map_err(|_| Error::Usage(format!("bad Fourier order `{n}`")))?;
                let (re, im) = match c.split_once('/') {
                    Some((re, im)) => (parse_num("target", re.trim())?, parse_num("target", im.trim())?),
                    None => (parse_num("target", c.trim())?, 0.0),
                };
                terms.push((n, Complex64::new(re, im)));
            }
            let n_max = terms.iter().map(|(n, _)| n.unsigned_abs() as usize).max().unwrap_or(0);
            let g = BoundaryFunction::Fourier(FourierSeries::from_terms(n_max, &terms)?);
            Ok(TargetFunction::BoundaryData { g, rule: QuadratureRule::default_for(model) })
        }
        "file" => {
            let file = std::fs::File::open(arg.trim()).map_err(|e| Error::Usage(format!("cannot open {arg}: {e}")))?;
            let (g, rule) = BoundaryFunction::read_csv(model, std::io::BufReader::new(file))?;
            Ok(TargetFunction::BoundaryData { g, rule: rule.unwrap_or_else(|| QuadratureRule::default_for(model)) })
        }
        other => Err(Error::Usage(format!("unknown target kind `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_rejects_unknown_keys() {
        let cfg = RunConfig::parse("# comment\nmodel = disk\nlambda = 2 # trailing\n\nR=4").unwrap();
        assert_eq!(cfg.f64_or("lambda", 1.0).unwrap(), 2.0);
        assert_eq!(cfg.f64_or("R", 1.0).unwrap(), 4.0);
        assert!(RunConfig::parse("colour = red").is_err());
        assert!(RunConfig::parse("model disk").is_err());
    }

    #[test]
    fn gaf_needs_the_disk() {
        let cfg = RunConfig::parse("process = gaf\nmodel = complex-ball:2").unwrap();
        assert!(matches!(cfg.sampler(), Err(Error::Usage(_))));
    }

    #[test]
    fn targets() {
        let f = parse_target("fourier:0=1;1=1;-1=1", Model::DISK).unwrap();
        let v = f.eval(&Point::disk(Complex64::new(0.2, 0.0)).unwrap()).unwrap();
        assert!((v - Complex64::new(1.4, 0.0)).norm() < 1e-12);
        assert!(parse_target("pole:1,0", Model::DISK).is_ok());
        assert!(parse_target("wave:1", Model::DISK).is_err());
    }
}
