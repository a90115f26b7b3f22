//! Empirical Patterson–Sullivan boundary measures, their comparison with the
//! conformal density seen from a base point, and critical-exponent estimates.
//!
//! Interior points are projected radially to the boundary. Mass concentrates
//! far out as `s` approaches the entropy, where the projection moves a
//! continuous test function by little; pair results with the tail fraction of
//! the exponent in use.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::Serialize;

use crate::boundary::QuadratureRule;
use crate::error::{Error, Result};
use crate::geometry::{
    dist_origin_raw, dist_raw, poisson_kernel_raw, radial_density, BoundaryPoint, Model, ModelKind, Point,
};
use crate::io::fmt_f64;
use crate::numeric::quad::{integrate, Tolerance, MAX_EVALS};
use crate::numeric::stats::linear_fit;
use crate::numeric::sum::{CompensatedSum, ComplexSum};
use crate::processes::Configuration;

/// Where a weighted boundary sample came from.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSource {
    pub replication: u64,
    pub base: Point,
    /// Exponent, or NaN for unweighted ball counts.
    pub s: f64,
}

/// Atoms `(direction, weight)` on the boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedBoundarySample {
    model: Model,
    directions: Vec<BoundaryPoint>,
    weights: Vec<f64>,
    total: f64,
    normalized: bool,
    source: SampleSource,
}

impl WeightedBoundarySample {
    pub fn model(&self) -> Model {
        self.model
    }

    pub fn directions(&self) -> &[BoundaryPoint] {
        &self.directions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Total mass before normalization.
    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn source(&self) -> &SampleSource {
        &self.source
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Probability version; `total` keeps the original mass.
    pub fn normalized(&self) -> Result<WeightedBoundarySample> {
        if !(self.total > 0.0) {
            return Err(Error::Degenerate("boundary sample has no mass".into()));
        }
        let mut out = self.clone();
        if !self.normalized {
            out.weights.iter_mut().for_each(|w| *w /= self.total);
            out.normalized = true;
        }
        Ok(out)
    }

    /// `∫ξ` and `∫ξ_iξ_j` of the normalized measure, in real coordinates.
    pub fn moments(&self) -> Result<Moments> {
        let n = self.normalized()?;
        let dim = self.model.real_dim();
        let mut first = vec![CompensatedSum::new(); dim];
        let mut second = vec![CompensatedSum::new(); dim * dim];
        for (d, w) in n.directions.iter().zip(&n.weights) {
            let c = d.coords();
            for i in 0..dim {
                first[i].add(w * c[i]);
                for j in 0..dim {
                    second[i * dim + j].add(w * c[i] * c[j]);
                }
            }
        }
        Ok(Moments {
            first: first.iter().map(|s| s.value()).collect(),
            second: second.iter().map(|s| s.value()).collect(),
        })
    }
}

fn project(model: Model, p: &Point) -> BoundaryPoint {
    p.direction().unwrap_or_else(|| {
        log::warn!("point at the origin projected to the first basis direction");
        BoundaryPoint::e1(model)
    })
}

/// `Σ_x e^{−s d(y,x)} δ_{x/|x|}`.
pub fn ps_empirical(conf: &Configuration, y: &Point, s: f64) -> Result<WeightedBoundarySample> {
    let model = conf.model();
    if y.model() != model {
        return Err(Error::Usage("base point and configuration live in different models".into()));
    }
    if !(s > model.entropy()) {
        return Err(Error::Divergent { s, h: model.entropy() });
    }
    if conf.is_empty() {
        return Err(Error::Degenerate("empty configuration has no boundary measure".into()));
    }
    let at_origin = y.norm_sq() == 0.0;
    let weights: Vec<f64> = conf
        .points()
        .iter()
        .map(|p| {
            let d = if at_origin { dist_origin_raw(p.coords()) } else { dist_raw(model, y.coords(), p.coords()) };
            (-s * d).exp()
        })
        .collect();
    let total = weights.iter().copied().collect::<CompensatedSum>().value();
    Ok(WeightedBoundarySample {
        model,
        directions: conf.points().iter().map(|p| project(model, p)).collect(),
        weights,
        total,
        normalized: false,
        source: SampleSource { replication: conf.meta().replication, base: y.clone(), s },
    })
}

/// Unit atoms at the directions of the points in `B(o, r)`.
pub fn ball_route_sample(conf: &Configuration, r: f64) -> Result<WeightedBoundarySample> {
    let model = conf.model();
    let mut directions = Vec::new();
    for p in conf.points() {
        if dist_origin_raw(p.coords()) < r {
            directions.push(project(model, p));
        }
    }
    if directions.is_empty() {
        return Err(Error::Degenerate(format!("no points within radius {r}")));
    }
    let n = directions.len();
    Ok(WeightedBoundarySample {
        model,
        directions,
        weights: vec![1.0; n],
        total: n as f64,
        normalized: false,
        source: SampleSource { replication: conf.meta().replication, base: Point::origin(model), s: f64::NAN },
    })
}

/// `ĉ_n = Σ wᵢ e^{−inθᵢ} / Σ wᵢ` for `0 ≤ n ≤ n_max` (disk only).
pub fn fourier_coeffs(sample: &WeightedBoundarySample, n_max: usize) -> Result<Vec<Complex64>> {
    if sample.model.kind() != ModelKind::PoincareDisk {
        return Err(Error::Usage("Fourier coefficients need the disk; use moments on spheres".into()));
    }
    if !(sample.total > 0.0) {
        return Err(Error::Degenerate("boundary sample has no mass".into()));
    }
    let scale = if sample.normalized { 1.0 } else { 1.0 / sample.total };
    let mut acc = vec![ComplexSum::new(); n_max + 1];
    for (d, w) in sample.directions.iter().zip(&sample.weights) {
        let step = d.to_complex().conj();
        let mut e = Complex64::new(scale * w, 0.0);
        for a in acc.iter_mut() {
            a.add(e);
            e *= step;
        }
    }
    let mut out: Vec<Complex64> = acc.iter().map(|a| a.value()).collect();
    out[0] = Complex64::new(1.0, 0.0);
    Ok(out)
}

/// Fourier coefficients `ȳⁿ` of the harmonic measure seen from `y`.
pub fn harmonic_measure_coeffs(y: &Point, n_max: usize) -> Result<Vec<Complex64>> {
    if y.model().kind() != ModelKind::PoincareDisk {
        return Err(Error::Usage("harmonic measure coefficients are defined on the disk".into()));
    }
    let c = y.to_complex().conj();
    let mut out = Vec::with_capacity(n_max + 1);
    let mut e = Complex64::new(1.0, 0.0);
    for _ in 0..=n_max {
        out.push(e);
        e *= c;
    }
    Ok(out)
}

/// Fourier coefficients of the radial projection of `μ` restricted to
/// `B(o, r)` and normalized (disk only).
///
/// The density factorizes into radial and angular parts, so each
/// coefficient is the radial mass ratio times a trapezoidal circle average.
pub fn ball_average_coeffs(model: Model, r: f64, n_max: usize) -> Result<Vec<Complex64>> {
    if model.kind() != ModelKind::PoincareDisk {
        return Err(Error::Usage("ball average coefficients are defined on the disk".into()));
    }
    if !(r > 0.0) {
        return Err(Error::Usage(format!("ball radius must be positive, got {r}")));
    }
    let tol = Tolerance::new(1e-300, 1e-13);
    let mass = integrate(|u| radial_density(model, u), &[0.0, r], tol, MAX_EVALS)?.value;
    let closed = crate::geometry::ball_volume(model, r)?;
    let radial = mass / closed;
    let m = 2 * n_max + 8;
    Ok((0..=n_max)
        .map(|n| {
            let angular = (0..m)
                .map(|j| Complex64::from_polar(1.0, -(n as f64) * 2.0 * PI * j as f64 / m as f64))
                .collect::<ComplexSum>()
                .value()
                / m as f64;
            angular * radial
        })
        .collect())
}

/// First and second moments of a boundary measure in real coordinates;
/// `second` is row-major `real_dim × real_dim`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Moments {
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

impl Moments {
    /// Largest entrywise difference.
    pub fn max_gap(&self, other: &Moments) -> f64 {
        self.first
            .iter()
            .zip(&other.first)
            .chain(self.second.iter().zip(&other.second))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Moments of the conformal density `P(y, ξ) dσ(ξ)` by boundary quadrature.
pub fn conformal_density_moments(y: &Point, rule: &QuadratureRule) -> Result<Moments> {
    let model = y.model();
    if rule.model() != model {
        return Err(Error::Usage("rule and base point live in different models".into()));
    }
    let dim = model.real_dim();
    let mut mass = CompensatedSum::new();
    let mut first = vec![CompensatedSum::new(); dim];
    let mut second = vec![CompensatedSum::new(); dim * dim];
    for (xi, w) in rule.nodes().iter().zip(rule.weights()) {
        let c = xi.coords();
        let k = w * poisson_kernel_raw(model, y.coords(), c);
        mass.add(k);
        for i in 0..dim {
            first[i].add(k * c[i]);
            for j in 0..dim {
                second[i * dim + j].add(k * c[i] * c[j]);
            }
        }
    }
    let m = mass.value();
    Ok(Moments {
        first: first.iter().map(|s| s.value() / m).collect(),
        second: second.iter().map(|s| s.value() / m).collect(),
    })
}

/// Empirical coefficients against a reference.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureComparison {
    pub empirical: Vec<Complex64>,
    pub reference: Vec<Complex64>,
    pub max_gap: f64,
    /// Weighted Kolmogorov–Smirnov distance of the angles to the reference CDF.
    pub ks: Option<f64>,
}

impl MeasureComparison {
    pub fn new(empirical: Vec<Complex64>, reference: Vec<Complex64>) -> Result<MeasureComparison> {
        if empirical.len() != reference.len() {
            return Err(Error::Usage("coefficient vectors differ in length".into()));
        }
        let max_gap = empirical.iter().zip(&reference).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        Ok(MeasureComparison { empirical, reference, max_gap, ks: None })
    }

    /// Compares a disk sample with the harmonic measure seen from `y`,
    /// including the Kolmogorov–Smirnov distance.
    pub fn against_harmonic(sample: &WeightedBoundarySample, y: &Point, n_max: usize) -> Result<MeasureComparison> {
        let mut c = MeasureComparison::new(fourier_coeffs(sample, n_max)?, harmonic_measure_coeffs(y, n_max)?)?;
        c.ks = Some(harmonic_ks(sample, y)?);
        Ok(c)
    }

    pub const CSV_HEADER: &'static str = "n,emp_re,emp_im,ref_re,ref_im,abs_gap";

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        if let Some(ks) = self.ks {
            writeln!(w, "# ks={}", fmt_f64(ks))?;
        }
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for (n, (e, r)) in self.empirical.iter().zip(&self.reference).enumerate() {
            writeln!(
                w,
                "{n},{},{},{},{},{}",
                fmt_f64(e.re),
                fmt_f64(e.im),
                fmt_f64(r.re),
                fmt_f64(r.im),
                fmt_f64((e - r).norm())
            )?;
        }
        Ok(())
    }
}

/// CDF of the harmonic measure from `y = ρe^{iφ}` on angles `φ − π + ψ`, `ψ ∈ [0, 2π]`.
fn harmonic_cdf(rho: f64, psi: f64) -> f64 {
    // Centered at the pole: G(t) = ½ + atan(((1+ρ)/(1−ρ)) tan(t/2))/π for t ∈ (−π, π).
    let t = psi - PI;
    if t <= -PI {
        return 0.0;
    }
    if t >= PI {
        return 1.0;
    }
    0.5 + (((1.0 + rho) / (1.0 - rho)) * (0.5 * t).tan()).atan() / PI
}

fn harmonic_ks(sample: &WeightedBoundarySample, y: &Point) -> Result<f64> {
    let n = sample.normalized()?;
    let yc = y.to_complex();
    let (rho, phi) = (yc.norm(), yc.arg());
    let mut atoms: Vec<(f64, f64)> =
        n.directions.iter().zip(&n.weights).map(|(d, w)| ((d.angle() - phi + PI).rem_euclid(2.0 * PI), *w)).collect();
    atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut cum = 0.0;
    let mut ks: f64 = 0.0;
    for (psi, w) in atoms {
        let f = harmonic_cdf(rho, psi);
        ks = ks.max((f - cum).abs());
        cum += w;
        ks = ks.max((f - cum).abs());
    }
    Ok(ks)
}

/// Critical-exponent fit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentReport {
    pub slope: f64,
    pub stderr: f64,
    pub residual_rms: f64,
    pub window: (f64, f64),
}

/// Minimum points and radius for [`critical_exponent`].
pub const MIN_POINTS: usize = 100;
pub const MIN_RADIUS: f64 = 6.0;

/// Slope of `log #(X ∩ B(o, r))` in `r` over `r ∈ [R/3, R − 1]`, unit knots.
pub fn critical_exponent(conf: &Configuration) -> Result<ExponentReport> {
    let radius = conf.truncation_radius();
    if conf.len() < MIN_POINTS || !(radius >= MIN_RADIUS) {
        return Err(Error::InsufficientData(format!(
            "critical exponent needs ≥ {MIN_POINTS} points and R ≥ {MIN_RADIUS}; got {} points, R = {radius}",
            conf.len()
        )));
    }
    critical_exponent_window(std::slice::from_ref(conf), radius / 3.0, radius - 1.0, 1.0)
}

/// Slope fit of the log of counts pooled over `confs` on the knots
/// `lo, lo + step, …` up to `hi`.
pub fn critical_exponent_window(confs: &[Configuration], lo: f64, hi: f64, step: f64) -> Result<ExponentReport> {
    if !(lo > 0.0 && hi > lo && step > 0.0) {
        return Err(Error::Usage(format!("bad exponent window [{lo}, {hi}] step {step}")));
    }
    let knots: Vec<f64> = (0..).map(|k| lo + step * k as f64).take_while(|r| *r <= hi + 1e-12).collect();
    if knots.len() < 3 {
        return Err(Error::InsufficientData("exponent window needs at least 3 knots".into()));
    }
    let mut counts = vec![0usize; knots.len()];
    for conf in confs {
        for p in conf.points() {
            let d = dist_origin_raw(p.coords());
            for (c, r) in counts.iter_mut().zip(&knots) {
                if d < *r {
                    *c += 1;
                }
            }
        }
    }
    if counts[0] == 0 {
        return Err(Error::InsufficientData(format!("no points within radius {lo}")));
    }
    let logs: Vec<f64> = counts.iter().map(|c| (*c as f64).ln()).collect();
    let fit = linear_fit(&knots, &logs).ok_or_else(|| Error::InsufficientData("degenerate exponent fit".into()))?;
    Ok(ExponentReport { slope: fit.slope, stderr: fit.slope_stderr, residual_rms: fit.residual_rms, window: (lo, hi) })
}

/// Per-shell increments of `Σ e^{−exponent·d(o,x)}` over `k ≤ d(o,x) < k+1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ShellRow {
    pub shell: usize,
    pub increment: f64,
    pub partial_sum: f64,
}

/// Partial sums by unit shell, covering `⌈R⌉` shells.
pub fn divergence_diagnostic(conf: &Configuration, exponent: f64) -> Result<Vec<ShellRow>> {
    if !(exponent >= 0.0) {
        return Err(Error::Usage(format!("exponent must be nonnegative, got {exponent}")));
    }
    let dists: Vec<f64> = conf.points().iter().map(|p| dist_origin_raw(p.coords())).collect();
    let radius = conf.truncation_radius();
    let mut len = if radius.is_finite() { radius.ceil() as usize } else { 0 };
    if let Some(m) = dists.iter().copied().reduce(f64::max) {
        len = len.max(m.floor() as usize + 1);
    }
    let mut shells = vec![CompensatedSum::new(); len];
    for d in dists {
        shells[d.floor() as usize].add((-exponent * d).exp());
    }
    let mut partial = CompensatedSum::new();
    Ok(shells
        .iter()
        .enumerate()
        .map(|(k, s)| {
            partial.add(s.value());
            ShellRow { shell: k, increment: s.value(), partial_sum: partial.value() }
        })
        .collect())
}
