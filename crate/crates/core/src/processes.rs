//! Seeded samplers: zeros of the truncated hyperbolic Gaussian analytic
//! function on the disk, and invariant Poisson processes on every model.
//!
//! Replication `i` of master seed `s` always draws from stream `i` of key
//! `s`, so ensembles are reproducible regardless of scheduling.

use std::f64::consts::PI;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use rayon::prelude::*;

use crate::boundary::random_direction;
use crate::error::{Error, Result};
use crate::geometry::{ball_volume, radial_density, Coords, Model, ModelKind, Point, BOUNDARY_MARGIN};
use crate::io::{fmt_f64, parse_f64, parse_header, split_fields};
use crate::numeric::quad::GaussLegendre;
use crate::numeric::rng::replication_rng;

/// Aberth sweep limit before reporting non-convergence.
pub const MAX_SWEEPS: usize = 500;

/// Retained roots must satisfy `|p(root)| ≤ ROOT_RESIDUAL · max|gₙ|`.
pub const ROOT_RESIDUAL: f64 = 1e-10;

/// Series-tail size above which a GAF truncation draws a warning.
pub const GAF_TAIL_WARN: f64 = 1e-6;

/// Knots in the tabulated radial CDF.
const CDF_KNOTS: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProcessKind {
    GafZeros,
    Poisson,
}

impl fmt::Display for ProcessKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProcessKind::GafZeros => "gaf-zeros",
            ProcessKind::Poisson => "poisson",
        })
    }
}

impl FromStr for ProcessKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gaf-zeros" | "gaf" => Ok(ProcessKind::GafZeros),
            "poisson" => Ok(ProcessKind::Poisson),
            other => Err(Error::Usage(format!("unknown process `{other}` (expected gaf-zeros or poisson)"))),
        }
    }
}

/// Everything needed to regenerate a configuration.
///
/// Fields that do not apply to the process kind hold NaN; equality compares
/// bit patterns so that such specs still compare equal.
#[derive(Debug, Clone, Copy)]
pub struct SamplerSpec {
    pub kind: ProcessKind,
    pub model: Model,
    /// Intensity (Poisson only).
    pub lambda: f64,
    /// Hyperbolic truncation radius (Poisson only).
    pub radius: f64,
    /// Polynomial degree (GAF only).
    pub degree: usize,
    /// Euclidean cutoff (GAF only).
    pub r_edge: f64,
    pub seed: u64,
}

impl PartialEq for SamplerSpec {
    fn eq(&self, o: &Self) -> bool {
        self.kind == o.kind
            && self.model == o.model
            && self.lambda.to_bits() == o.lambda.to_bits()
            && self.radius.to_bits() == o.radius.to_bits()
            && self.degree == o.degree
            && self.r_edge.to_bits() == o.r_edge.to_bits()
            && self.seed == o.seed
    }
}

impl SamplerSpec {
    pub fn poisson(model: Model, lambda: f64, radius: f64, seed: u64) -> Result<SamplerSpec> {
        let spec = SamplerSpec { kind: ProcessKind::Poisson, model, lambda, radius, degree: 0, r_edge: f64::NAN, seed };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaf(degree: usize, r_edge: f64, seed: u64) -> Result<SamplerSpec> {
        let spec = SamplerSpec {
            kind: ProcessKind::GafZeros,
            model: Model::DISK,
            lambda: f64::NAN,
            radius: f64::NAN,
            degree,
            r_edge,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        match self.kind {
            ProcessKind::GafZeros => {
                if self.model.kind() != ModelKind::PoincareDisk {
                    return Err(Error::Usage(format!("GAF zeros live on the disk, not on {}", self.model)));
                }
                if self.degree < 8 {
                    return Err(Error::Usage(format!("GAF degree must be at least 8, got {}", self.degree)));
                }
                if !(self.r_edge > 0.0 && self.r_edge <= 0.95) {
                    return Err(Error::Usage(format!("r_edge must lie in (0, 0.95], got {}", self.r_edge)));
                }
                // Standard deviation of the dropped tail Σ_{n>N} g_n zⁿ at |z| = r_edge.
                let tail = self.r_edge.powi(self.degree as i32 + 1) / (1.0 - self.r_edge * self.r_edge).sqrt();
                if tail > GAF_TAIL_WARN {
                    log::warn!(
                        "GAF degree {} leaves a series tail of size {tail:.1e} at r_edge = {}; edge roots may be biased",
                        self.degree,
                        self.r_edge
                    );
                }
            }
            ProcessKind::Poisson => {
                if !(self.lambda > 0.0) || !self.lambda.is_finite() {
                    return Err(Error::Usage(format!("intensity must be positive, got {}", self.lambda)));
                }
                if !(self.radius > 0.0) || !self.radius.is_finite() {
                    return Err(Error::Usage(format!("truncation radius must be positive, got {}", self.radius)));
                }
                if (0.5 * self.radius).tanh() >= 1.0 - BOUNDARY_MARGIN {
                    return Err(Error::Domain(format!(
                        "truncation radius {} puts points within {BOUNDARY_MARGIN:e} of the boundary",
                        self.radius
                    )));
                }
            }
        }
        Ok(())
    }

    /// Largest hyperbolic distance from the origin a sample point can have.
    pub fn truncation_radius(&self) -> f64 {
        match self.kind {
            ProcessKind::Poisson => self.radius,
            ProcessKind::GafZeros => 2.0 * self.r_edge.atanh(),
        }
    }

    /// Expected number of points.
    pub fn expected_count(&self) -> Result<f64> {
        match self.kind {
            ProcessKind::Poisson => Ok(self.lambda * ball_volume(self.model, self.radius)?),
            ProcessKind::GafZeros => Ok(self.r_edge * self.r_edge / (1.0 - self.r_edge * self.r_edge)),
        }
    }

    /// Draws replication `replication` of this spec.
    pub fn sample(&self, replication: u64) -> Result<Configuration> {
        self.validate()?;
        let mut rng = replication_rng(self.seed, replication);
        let points = match self.kind {
            ProcessKind::GafZeros => gaf_points(self.degree, self.r_edge, &mut rng)?,
            ProcessKind::Poisson => {
                let sampler = RadialSampler::new(self.model, self.radius)?;
                poisson_points(self.model, self.lambda, &sampler, &mut rng)?
            }
        };
        Ok(Configuration { model: self.model, points, meta: ConfigMeta { spec: *self, replication } })
    }

    /// Runs `f` on replications `0..n_reps` in parallel; results come back in
    /// replication order.
    pub fn ensemble<T, F>(&self, n_reps: usize, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(u64, &Configuration) -> Result<T> + Sync,
    {
        self.validate()?;
        let sampler = match self.kind {
            ProcessKind::Poisson => Some(RadialSampler::new(self.model, self.radius)?),
            ProcessKind::GafZeros => None,
        };
        (0..n_reps as u64)
            .into_par_iter()
            .map(|rep| {
                let wrap = |e: Error| Error::Replication { replication: rep, source: Box::new(e) };
                let mut rng = replication_rng(self.seed, rep);
                let points = match &sampler {
                    Some(s) => poisson_points(self.model, self.lambda, s, &mut rng),
                    None => gaf_points(self.degree, self.r_edge, &mut rng),
                }
                .map_err(wrap)?;
                let conf =
                    Configuration { model: self.model, points, meta: ConfigMeta { spec: *self, replication: rep } };
                f(rep, &conf).map_err(wrap)
            })
            .collect()
    }
}

/// Generation metadata of a configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConfigMeta {
    pub spec: SamplerSpec,
    pub replication: u64,
}

/// A finite seeded point sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    model: Model,
    points: Vec<Point>,
    meta: ConfigMeta,
}

impl Configuration {
    /// A configuration built from explicit points (tests, synthetic inputs).
    ///
    /// The metadata records a Poisson spec whose radius is the largest point radius.
    pub fn from_points(model: Model, points: Vec<Point>) -> Result<Configuration> {
        if let Some(p) = points.iter().find(|p| p.model() != model) {
            return Err(Error::Usage(format!("point in {} added to a {} configuration", p.model(), model)));
        }
        let radius = points.iter().map(crate::geometry::geodesic_radius).fold(0.0, f64::max);
        let spec = SamplerSpec {
            kind: ProcessKind::Poisson,
            model,
            lambda: f64::NAN,
            radius,
            degree: 0,
            r_edge: f64::NAN,
            seed: 0,
        };
        Ok(Configuration { model, points, meta: ConfigMeta { spec, replication: 0 } })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn meta(&self) -> &ConfigMeta {
        &self.meta
    }

    /// Intensity when known (sampled Poisson configurations).
    pub fn lambda(&self) -> Option<f64> {
        let l = self.meta.spec.lambda;
        (self.meta.spec.kind == ProcessKind::Poisson && l.is_finite()).then_some(l)
    }

    /// Multiple of `μ_M` giving the first intensity: `λ` for Poisson, `1/π`
    /// for GAF zeros on the disk.
    pub fn intensity_factor(&self) -> Option<f64> {
        match self.meta.spec.kind {
            ProcessKind::Poisson => self.lambda(),
            ProcessKind::GafZeros => Some(1.0 / PI),
        }
    }

    pub fn truncation_radius(&self) -> f64 {
        self.meta.spec.truncation_radius()
    }

    /// Same points in a new order.
    pub fn permuted(&self, order: &[usize]) -> Result<Configuration> {
        let mut seen = vec![false; self.points.len()];
        if order.len() != self.points.len()
            || order.iter().any(|&i| i >= seen.len() || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::Usage("permutation must list every index exactly once".into()));
        }
        Ok(Configuration { points: order.iter().map(|&i| self.points[i].clone()).collect(), ..self.clone() })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let spec = &self.meta.spec;
        writeln!(w, "# model={}", self.model)?;
        writeln!(w, "# process={}", spec.kind)?;
        writeln!(w, "# seed={}", spec.seed)?;
        writeln!(w, "# replication={}", self.meta.replication)?;
        match spec.kind {
            ProcessKind::Poisson => {
                writeln!(w, "# lambda={}", fmt_f64(spec.lambda))?;
                writeln!(w, "# R={}", fmt_f64(spec.radius))?;
            }
            ProcessKind::GafZeros => {
                writeln!(w, "# N={}", spec.degree)?;
                writeln!(w, "# r_edge={}", fmt_f64(spec.r_edge))?;
                writeln!(w, "# R={}", fmt_f64(spec.truncation_radius()))?;
            }
        }
        if self.model.kind() == ModelKind::PoincareDisk {
            writeln!(w, "re,im")?;
        } else {
            let head: Vec<String> = (1..=self.model.real_dim()).map(|k| format!("x{k}")).collect();
            writeln!(w, "{}", head.join(","))?;
        }
        for p in &self.points {
            let row: Vec<String> = p.coords().iter().map(|c| fmt_f64(*c)).collect();
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Configuration> {
        let mut model: Option<Model> = None;
        let mut kind = ProcessKind::Poisson;
        let mut seed = 0u64;
        let mut replication = 0u64;
        let (mut lambda, mut radius, mut r_edge) = (f64::NAN, f64::NAN, f64::NAN);
        let mut degree = 0usize;
        let mut points = Vec::new();
        let mut header_seen = false;
        for line in r.lines() {
            let line = line?;
            let t = line.trim();
            if t.is_empty() {
                continue;
            }
            if t.starts_with('#') {
                if let Some((k, v)) = parse_header(t) {
                    let bad = |what: &str| Error::Parse(format!("bad {what} header `{v}`"));
                    match k {
                        "model" => model = Some(v.parse()?),
                        "process" => kind = v.parse()?,
                        "seed" => seed = v.parse().map_err(|_| bad("seed"))?,
                        "replication" => replication = v.parse().map_err(|_| bad("replication"))?,
                        "lambda" => lambda = parse_f64(v, "lambda")?,
                        "R" => radius = parse_f64(v, "R")?,
                        "N" => degree = v.parse().map_err(|_| bad("N"))?,
                        "r_edge" => r_edge = parse_f64(v, "r_edge")?,
                        _ => {}
                    }
                }
                continue;
            }
            let model = model.ok_or_else(|| Error::Parse("configuration file lacks a `# model=` header".into()))?;
            if !header_seen {
                header_seen = true;
                continue;
            }
            let coords: Vec<f64> = split_fields(t).iter().map(|f| parse_f64(f, "coordinate")).collect::<Result<_>>()?;
            points.push(Point::new(model, &coords)?);
        }
        let model = model.ok_or_else(|| Error::Parse("configuration file lacks a `# model=` header".into()))?;
        if kind == ProcessKind::GafZeros {
            radius = f64::NAN;
        }
        let spec = SamplerSpec { kind, model, lambda, radius, degree, r_edge, seed };
        Ok(Configuration { model, points, meta: ConfigMeta { spec, replication } })
    }
}

/// Zeros of `Σ gₙ zⁿ` in `|z| ≤ r_edge` for one seed.
pub fn sample_gaf_zeros(degree: usize, r_edge: f64, seed: u64) -> Result<Configuration> {
    SamplerSpec::gaf(degree, r_edge, seed)?.sample(0)
}

/// Invariant Poisson process of intensity `λ μ_M` restricted to `B(o, R)`.
pub fn sample_poisson(model: Model, lambda: f64, radius: f64, seed: u64) -> Result<Configuration> {
    SamplerSpec::poisson(model, lambda, radius, seed)?.sample(0)
}

/// First intensity against Lebesgue measure.
pub fn first_intensity(spec: &SamplerSpec, x: &Point) -> Result<f64> {
    if x.model() != spec.model {
        return Err(Error::Usage(format!("point in {} but process on {}", x.model(), spec.model)));
    }
    let density = (1.0 - x.norm_sq()).powi(-spec.model.density_exponent());
    Ok(match spec.kind {
        ProcessKind::Poisson => spec.lambda * density,
        ProcessKind::GafZeros => density / PI,
    })
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

fn gaf_points<R: Rng + ?Sized>(degree: usize, r_edge: f64, rng: &mut R) -> Result<Vec<Point>> {
    let coeffs: Vec<Complex64> = (0..=degree).map(|_| complex_gaussian(rng)).collect();
    let roots = polynomial_roots(&coeffs)?;
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut out = Vec::new();
    for z in roots {
        if z.norm() <= r_edge {
            let res = horner(&coeffs, z).0.norm();
            if res > ROOT_RESIDUAL * scale {
                return Err(Error::RootNonConvergence { sweeps: MAX_SWEEPS, worst_residual: res / scale });
            }
            out.push(Point::disk(z)?);
        }
    }
    Ok(out)
}

/// `(p(z), p'(z))` by Horner's rule; coefficients in increasing degree.
fn horner(coeffs: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Newton ratio `p(z)/p'(z)`, using the reversed polynomial for `|z| > 1`
/// so that high powers never overflow.
fn newton_ratio(coeffs: &[Complex64], z: Complex64) -> Complex64 {
    if z.norm_sqr() <= 1.0 {
        let (p, dp) = horner(coeffs, z);
        return p / dp;
    }
    // p(z) = zᴺ q(w), w = 1/z, q(w) = Σ g_{N−k} wᵏ; p/p' = z / (N − w q'/q).
    let n = (coeffs.len() - 1) as f64;
    let w = z.inv();
    let mut q = Complex64::new(0.0, 0.0);
    let mut dq = Complex64::new(0.0, 0.0);
    for c in coeffs {
        dq = dq * w + q;
        q = q * w + c;
    }
    z / (n - w * dq / q)
}

/// All roots of `Σ gₖ zᵏ` by Aberth–Ehrlich iteration.
///
/// Leading coefficients negligible against the largest one are dropped, and
/// exact zeros at the origin are factored out first.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if !(scale > 0.0) || !scale.is_finite() {
        return Err(Error::Domain("polynomial coefficients must be finite and not all zero".into()));
    }
    let mut top = coeffs.len() - 1;
    while top > 0 && coeffs[top].norm() <= 1e-14 * scale {
        top -= 1;
    }
    let low = coeffs.iter().position(|c| *c != Complex64::new(0.0, 0.0)).unwrap_or(0);
    let mut roots = vec![Complex64::new(0.0, 0.0); low];
    if top <= low {
        return Ok(roots);
    }
    let poly = &coeffs[low..=top];
    let n = poly.len() - 1;
    let lead = poly[n].norm();
    // Cauchy bound 1 + max |g_k / g_N|.
    let bound = 1.0 + poly[..n].iter().map(|c| c.norm() / lead).fold(0.0, f64::max);
    let mut z = initial_guesses(poly, bound);
    let mut done = vec![false; n];
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut max_step = 0.0f64;
        for i in 0..n {
            if done[i] {
                continue;
            }
            let ratio = newton_ratio(poly, z[i]);
            let mut repulsion = Complex64::new(0.0, 0.0);
            for (j, zj) in z.iter().enumerate() {
                if j != i {
                    repulsion += (z[i] - zj).inv();
                }
            }
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                continue;
            }
            z[i] -= step;
            let rel = step.norm() / z[i].norm().max(1.0);
            if rel < 1e-13 {
                done[i] = true;
            }
            max_step = max_step.max(rel);
        }
        if max_step < 1e-13 {
            converged = true;
            break;
        }
    }
    if !converged {
        let worst = z.iter().map(|r| horner(poly, *r).0.norm() / scale).fold(0.0, f64::max);
        return Err(Error::RootNonConvergence { sweeps: MAX_SWEEPS, worst_residual: worst });
    }
    for r in &mut z {
        let step = newton_ratio(poly, *r);
        if step.is_finite() {
            *r -= step;
        }
    }
    roots.extend(z);
    Ok(roots)
}

/// Starting points on the circles of the Newton polygon of `ln|g_k|`: each
/// upper-hull edge from `k₀` to `k₁` carries `k₁ − k₀` guesses at radius
/// `(|g_{k₀}|/|g_{k₁}|)^{1/(k₁−k₀)}`, capped by the Cauchy bound.
fn initial_guesses(poly: &[Complex64], bound: f64) -> Vec<Complex64> {
    let n = poly.len() - 1;
    let logs: Vec<f64> = poly.iter().map(|c| if c.norm() > 0.0 { c.norm().ln() } else { f64::NEG_INFINITY }).collect();
    let mut hull: Vec<usize> = Vec::new();
    for k in 0..=n {
        if logs[k] == f64::NEG_INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop b when it lies on or below the chord from a to k.
            let cross = (b - a) as f64 * (logs[k] - logs[a]) - (k - a) as f64 * (logs[b] - logs[a]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut z = Vec::with_capacity(n);
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let m = b - a;
        let radius = ((logs[a] - logs[b]) / m as f64).exp().min(bound);
        let offset = 2.0 * PI * z.len() as f64 / n as f64 + 0.4;
        for j in 0..m {
            z.push(Complex64::from_polar(radius, offset + 2.0 * PI * j as f64 / m as f64));
        }
    }
    z
}

/// Inverse of the normalized radial CDF `μ(B(o,u)) / μ(B(o,R))`.
#[derive(Debug, Clone)]
pub(crate) struct RadialSampler {
    model: Model,
    radius: f64,
    /// Tabulated unnormalized CDF at equally spaced knots (real balls, m ≥ 3).
    table: Vec<f64>,
}

impl RadialSampler {
    pub(crate) fn new(model: Model, radius: f64) -> Result<RadialSampler> {
        let mut table = Vec::new();
        if model.kind() == ModelKind::RealBall && model.dim() > 2 {
            let rule = GaussLegendre::cached(16);
            let h = radius / CDF_KNOTS as f64;
            table.reserve(CDF_KNOTS + 1);
            table.push(0.0);
            let mut acc = 0.0;
            for k in 0..CDF_KNOTS {
                acc += rule.integrate(k as f64 * h, (k + 1) as f64 * h, |u| radial_density(model, u));
                table.push(acc);
            }
        }
        Ok(RadialSampler { model, radius, table })
    }

    /// Geodesic radius with CDF value `f ∈ [0, 1)`.
    pub(crate) fn invert(&self, f: f64) -> f64 {
        let half_r = 0.5 * self.radius;
        match self.model.kind() {
            ModelKind::PoincareDisk => 2.0 * (f.sqrt() * half_r.sinh()).asinh(),
            ModelKind::ComplexBall => 2.0 * (f.powf(0.5 / self.model.dim() as f64) * half_r.sinh()).asinh(),
            ModelKind::RealBall if self.model.dim() == 2 => 2.0 * (f.sqrt() * half_r.sinh()).asinh(),
            ModelKind::RealBall => self.invert_table(f),
        }
    }

    fn invert_table(&self, f: f64) -> f64 {
        let total = *self.table.last().expect("table has knots");
        let target = f * total;
        let h = self.radius / CDF_KNOTS as f64;
        let k = self.table.partition_point(|&v| v <= target).clamp(1, CDF_KNOTS) - 1;
        let (mut lo, mut hi) = (k as f64 * h, (k + 1) as f64 * h);
        let base = self.table[k];
        let rule = GaussLegendre::cached(16);
        let cdf = |u: f64| base + rule.integrate(k as f64 * h, u, |t| radial_density(self.model, t));
        // Safeguarded Newton on the bracketing knot interval.
        let span = self.table[k + 1] - base;
        let mut u = if span > 0.0 { lo + h * (target - base) / span } else { lo };
        for _ in 0..100 {
            let g = cdf(u) - target;
            if g > 0.0 {
                hi = u;
            } else {
                lo = u;
            }
            if hi - lo <= 1e-12 {
                break;
            }
            let d = radial_density(self.model, u);
            let step = g / d;
            if d > 0.0 && step.abs() <= 1e-13 * u.max(1.0) {
                u = (u - step).clamp(lo, hi);
                break;
            }
            let next = u - step;
            u = if d > 0.0 && next > lo && next < hi { next } else { 0.5 * (lo + hi) };
        }
        u
    }
}

fn poisson_points<R: Rng + ?Sized>(
    model: Model,
    lambda: f64,
    sampler: &RadialSampler,
    rng: &mut R,
) -> Result<Vec<Point>> {
    let mean = lambda * ball_volume(model, sampler.radius)?;
    let count =
        Poisson::new(mean).map_err(|e| Error::Domain(format!("Poisson mean {mean}: {e}")))?.sample(rng) as usize;
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let u = sampler.invert(rng.random::<f64>());
        let t = (0.5 * u).tanh();
        let coords: Coords = if model.kind() == ModelKind::PoincareDisk {
            let th = 2.0 * PI * rng.random::<f64>();
            [t * th.cos(), t * th.sin()].into_iter().collect()
        } else {
            random_direction(model, rng).coords().iter().map(|c| t * c).collect()
        };
        points.push(Point::from_raw(model, coords));
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::geodesic_radius;

    #[test]
    fn roots_of_known_polynomial() {
        // (z − 0.5)(z + 0.25i)(z − 2)(z − 3 + i)
        let want = [c(0.5, 0.0), c(0.0, -0.25), c(2.0, 0.0), c(3.0, -1.0)];
        let mut coeffs = vec![c(1.0, 0.0)];
        for r in want {
            let mut next = vec![c(0.0, 0.0); coeffs.len() + 1];
            for (k, a) in coeffs.iter().enumerate() {
                next[k + 1] += a;
                next[k] -= a * r;
            }
            coeffs = next;
        }
        let roots = polynomial_roots(&coeffs).unwrap();
        for w in want {
            assert!(roots.iter().any(|r| (r - w).norm() < 1e-12), "{w} not in {roots:?}");
        }
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn degree_reduction_and_zero_roots() {
        let roots = polynomial_roots(&[c(0.0, 0.0), c(-1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(roots.len(), 2);
        assert!(roots.iter().any(|r| r.norm() == 0.0));
        assert!(roots.iter().any(|r| (r - 1.0).norm() < 1e-14));
    }

    #[test]
    fn gaf_roots_meet_residual_contract_and_are_deterministic() {
        let a = sample_gaf_zeros(256, 0.9, 11).unwrap();
        let b = sample_gaf_zeros(256, 0.9, 11).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_empty());
        assert!(a.points().iter().all(|p| p.norm() <= 0.9));
        let other = sample_gaf_zeros(256, 0.9, 12).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn spec_validation() {
        assert!(matches!(SamplerSpec::gaf(4, 0.5, 0), Err(Error::Usage(_))));
        assert!(matches!(SamplerSpec::gaf(64, 0.99, 0), Err(Error::Usage(_))));
        assert!(matches!(SamplerSpec::poisson(Model::DISK, 0.0, 1.0, 0), Err(Error::Usage(_))));
        let mut s = SamplerSpec::gaf(64, 0.5, 0).unwrap();
        s.model = Model::real_ball(3).unwrap();
        assert!(s.validate().is_err());
    }

    #[test]
    fn first_intensity_examples() {
        let gaf = SamplerSpec::gaf(64, 0.5, 0).unwrap();
        let o = Point::origin(Model::DISK);
        assert!((first_intensity(&gaf, &o).unwrap() - 1.0 / PI).abs() < 1e-15);
        let p = SamplerSpec::poisson(Model::DISK, 2.0, 1.0, 0).unwrap();
        let x = Point::disk(c(0.5, 0.0)).unwrap();
        assert!((first_intensity(&p, &x).unwrap() - 2.0 / 0.5625).abs() < 1e-14);
        // ∫_{|z|<t} ρ₁ dV = t²/(1−t²) by radial quadrature.
        let t: f64 = 0.7;
        let q = GaussLegendre::new(64)
            .integrate(0.0, t, |r| 2.0 * PI * r * first_intensity(&gaf, &Point::disk(c(r, 0.0)).unwrap()).unwrap());
        assert!((q - t * t / (1.0 - t * t)).abs() < 1e-12);
    }

    #[test]
    fn small_radius_is_almost_surely_empty() {
        assert!(ball_volume(Model::DISK, 0.01).unwrap() < 1e-3);
        let conf = sample_poisson(Model::DISK, 1.0, 0.01, 5).unwrap();
        assert!(conf.len() <= 1);
    }

    #[test]
    fn radial_inversion_matches_cdf() {
        for model in
            [Model::DISK, Model::complex_ball(2).unwrap(), Model::real_ball(3).unwrap(), Model::real_ball(5).unwrap()]
        {
            let r = 6.0;
            let s = RadialSampler::new(model, r).unwrap();
            let total = ball_volume(model, r).unwrap();
            for f in [1e-6, 0.01, 0.3, 0.5, 0.9, 0.999999] {
                let u = s.invert(f);
                let got = ball_volume(model, u).unwrap() / total;
                assert!((got - f).abs() <= 1e-11 * f.max(1e-3), "{model} f={f}: {got}");
            }
        }
    }

    #[test]
    fn poisson_points_stay_inside_truncation() {
        let m = Model::real_ball(3).unwrap();
        let conf = sample_poisson(m, 1.0, 4.0, 9).unwrap();
        assert!(conf.points().iter().all(|p| geodesic_radius(p) <= 4.0 + 1e-12));
        assert_eq!(conf, sample_poisson(m, 1.0, 4.0, 9).unwrap());
    }

    #[test]
    fn csv_round_trip() {
        for conf in [
            sample_gaf_zeros(64, 0.5, 3).unwrap(),
            sample_poisson(Model::complex_ball(2).unwrap(), 1.0, 2.0, 4).unwrap(),
        ] {
            let mut buf = Vec::new();
            conf.write_csv(&mut buf).unwrap();
            let back = Configuration::read_csv(buf.as_slice()).unwrap();
            assert_eq!(back.points(), conf.points());
            assert_eq!(back.meta().replication, conf.meta().replication);
            assert_eq!(back.meta().spec.kind, conf.meta().spec.kind);
            let mut again = Vec::new();
            back.write_csv(&mut again).unwrap();
            assert_eq!(again, buf);
        }
    }

    #[test]
    fn ensemble_is_order_independent() {
        let spec = SamplerSpec::poisson(Model::DISK, 1.0, 3.0, 77).unwrap();
        let counts = spec.ensemble(16, |_, c| Ok(c.len())).unwrap();
        for (rep, n) in counts.iter().enumerate() {
            assert_eq!(spec.sample(rep as u64).unwrap().len(), *n);
        }
    }
}
