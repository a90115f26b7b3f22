//! Variances of weighted linear statistics: closed forms under the Bergman
//! determinantal process (GAF zeros) and the Poisson process, the angular
//! residue identities behind them, and Monte Carlo cross-checks.
//!
//! Radial double integrals are written in the gap variables `p = 1 − |η|²`,
//! `q = 1 − |ξ|²`, where `1 − |ηξ|² = p + q − pq` carries no cancellation.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{dist_origin_raw, dist_raw, radial_density, Model, ModelKind, Point};
use crate::numeric::quad::{integrate, integrate_2d, GaussLegendre, Tolerance, MAX_EVALS, MAX_EVALS_2D};
use crate::numeric::stats::{mean, variance_with_jackknife};
use crate::numeric::sum::{CompensatedSum, ComplexSum};
use crate::processes::{Configuration, ProcessKind, SamplerSpec};
use crate::reconstruct::{one_minus_moved_sq, weighted_kernel_sum, Basis};

/// Supports beyond this radius trigger a warning: the kernels grow like
/// `(1 − |ηξ|²)^{−5}` towards the boundary.
pub const SUPPORT_WARN: f64 = 0.95;

/// Default truncation of Hardy/L² statistic vectors.
pub const STAT_ORDER: usize = 128;

/// A radial weight `W(x)`, described through `|x|`.
#[derive(Debug, Clone, PartialEq)]
pub enum RadialWeight {
    Constant(f64),
    /// `1(|x| ≤ ρ)`.
    Indicator(f64),
    /// `W_s(x) = (1 − |x|²)^s · 1(|x|² ≤ 2 − s)`, `1 < s < 2`.
    Ws(f64),
    /// Piecewise linear in `|x|` through `(radius, value)` knots, zero past the last knot.
    Table(Vec<(f64, f64)>),
}

impl fmt::Display for RadialWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialWeight::Constant(c) => write!(f, "constant:{c}"),
            RadialWeight::Indicator(r) => write!(f, "indicator:{r}"),
            RadialWeight::Ws(s) => write!(f, "ws:{s}"),
            RadialWeight::Table(k) => {
                let parts: Vec<String> = k.iter().map(|(r, v)| format!("{r}/{v}")).collect();
                write!(f, "table:{}", parts.join(";"))
            }
        }
    }
}

impl FromStr for RadialWeight {
    type Err = Error;

    /// `constant:C`, `indicator:RHO`, `ws:S` or `table:r1/v1;r2/v2;…`.
    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s.trim().split_once(':').ok_or_else(|| Error::Usage(format!("bad weight `{s}`")))?;
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| Error::Usage(format!("bad number `{t}` in weight")));
        let w = match kind.trim() {
            "constant" => RadialWeight::Constant(num(arg)?),
            "indicator" => RadialWeight::Indicator(num(arg)?),
            "ws" => RadialWeight::Ws(num(arg)?),
            "table" => {
                let knots = arg
                    .split(';')
                    .map(|kv| {
                        let (r, v) = kv.split_once('/').ok_or_else(|| Error::Usage(format!("bad knot `{kv}`")))?;
                        Ok((num(r)?, num(v)?))
                    })
                    .collect::<Result<Vec<_>>>()?;
                RadialWeight::Table(knots)
            }
            other => return Err(Error::Usage(format!("unknown weight kind `{other}`"))),
        };
        w.validate()?;
        Ok(w)
    }
}

impl RadialWeight {
    pub fn validate(&self) -> Result<()> {
        match self {
            RadialWeight::Constant(c) if !c.is_finite() => Err(Error::Usage("weight constant must be finite".into())),
            RadialWeight::Indicator(r) if !(*r > 0.0 && *r < 1.0) => {
                Err(Error::Usage(format!("indicator radius must lie in (0, 1), got {r}")))
            }
            RadialWeight::Ws(s) if !(*s > 1.0 && *s < 2.0) => {
                Err(Error::Usage(format!("W_s needs 1 < s < 2, got {s}")))
            }
            RadialWeight::Table(k) => {
                if k.is_empty() {
                    return Err(Error::Usage("weight table needs knots".into()));
                }
                if k.windows(2).any(|w| !(w[1].0 > w[0].0)) || k[0].0 < 0.0 || k.last().map_or(true, |l| l.0 >= 1.0) {
                    return Err(Error::Usage("table radii must increase within [0, 1)".into()));
                }
                if k.iter().any(|(_, v)| !(*v >= 0.0) || !v.is_finite()) {
                    return Err(Error::Usage("table values must be nonnegative".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, RadialWeight::Constant(_))
    }

    /// Euclidean radius outside which the weight vanishes (1 for nonzero constants).
    pub fn support_radius(&self) -> f64 {
        match self {
            RadialWeight::Constant(c) => {
                if *c == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            RadialWeight::Indicator(r) => *r,
            RadialWeight::Ws(s) => (2.0 - s).sqrt(),
            RadialWeight::Table(k) => k.last().map_or(0.0, |l| l.0),
        }
    }

    /// Weight at a point with `1 − |x|² = gap`.
    pub fn eval_gap(&self, gap: f64) -> f64 {
        match self {
            RadialWeight::Constant(c) => *c,
            RadialWeight::Indicator(r) => {
                if gap >= (1.0 - r) * (1.0 + r) {
                    1.0
                } else {
                    0.0
                }
            }
            RadialWeight::Ws(s) => {
                if gap >= s - 1.0 {
                    gap.powf(*s)
                } else {
                    0.0
                }
            }
            RadialWeight::Table(k) => self.eval_table(k, (1.0 - gap).max(0.0).sqrt()),
        }
    }

    /// Weight at Euclidean radius `r`.
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            RadialWeight::Table(k) => self.eval_table(k, r),
            _ => self.eval_gap((1.0 - r) * (1.0 + r)),
        }
    }

    fn eval_table(&self, k: &[(f64, f64)], r: f64) -> f64 {
        let last = k[k.len() - 1];
        if r > last.0 {
            return 0.0;
        }
        if r <= k[0].0 {
            return k[0].1;
        }
        let i = k.partition_point(|(kr, _)| *kr < r);
        let (r0, v0) = k[i - 1];
        let (r1, v1) = k[i];
        v0 + (v1 - v0) * (r - r0) / (r1 - r0)
    }

    /// Gap values `1 − r²` of the kinks and jumps, in increasing order, plus
    /// geometric refinements towards the smallest one.
    fn gap_breaks(&self) -> Vec<f64> {
        let mut b = vec![0.0, 1.0];
        let radii: Vec<f64> = match self {
            RadialWeight::Constant(_) => vec![],
            RadialWeight::Indicator(r) => vec![*r],
            RadialWeight::Ws(_) => vec![self.support_radius()],
            RadialWeight::Table(k) => k.iter().map(|(r, _)| *r).collect(),
        };
        for r in radii {
            let g = (1.0 - r) * (1.0 + r);
            b.push(g);
            let mut h = 2.0 * g;
            while h < 1.0 {
                b.push(h);
                h *= 2.0;
            }
        }
        b.retain(|x| (0.0..=1.0).contains(x));
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// The 14 weights of the impossibility scan: indicators of radius
    /// 0.2, 0.3, …, 0.8 and `W_s` at 7 equally spaced `s` from 1.1 to 1.9.
    pub fn failure_family() -> Vec<RadialWeight> {
        let mut v: Vec<RadialWeight> = (2..=8).map(|k| RadialWeight::Indicator(k as f64 / 10.0)).collect();
        v.extend((0..7).map(|k| RadialWeight::Ws(1.1 + 0.8 * k as f64 / 6.0)));
        v
    }
}

/// Accuracy settings for the closed-form double integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub tol: Tolerance,
    pub max_evals: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { tol: Tolerance::new(1e-14, 1e-11), max_evals: MAX_EVALS_2D }
    }
}

fn check_disk_point(z: &Point) -> Result<f64> {
    if z.model().kind() != ModelKind::PoincareDisk {
        return Err(Error::Usage(format!("variance formulas live on the disk, not on {}", z.model())));
    }
    Ok(z.norm_sq())
}

fn check_support(w: &RadialWeight) -> Result<()> {
    w.validate()?;
    let r = w.support_radius();
    if r >= 1.0 {
        return Err(Error::Usage(format!("weight {w} is not compactly supported")));
    }
    // W_s supports approach the boundary as s ↓ 1 by construction.
    if r > SUPPORT_WARN && !matches!(w, RadialWeight::Ws(_)) {
        log::warn!("weight {w} reaches radius {r:.6} > {SUPPORT_WARN}; kernels are steep near its support edge");
    }
    Ok(())
}

/// `∬ (v(p) − v(q))² kernel(u, 1−u) dp dq` over the unit square.
fn gap_double_integral(w: &RadialWeight, quad: &QuadSpec, kernel: impl Fn(f64, f64) -> f64) -> Result<f64> {
    let breaks = w.gap_breaks();
    let f = |p: f64, q: f64| {
        let d = w.eval_gap(p) - w.eval_gap(q);
        if d == 0.0 {
            return 0.0;
        }
        let u = (1.0 - p) * (1.0 - q);
        let omu = p + q - p * q;
        d * d * kernel(u, omu)
    };
    Ok(integrate_2d(f, &breaks, &breaks, quad.tol, quad.max_evals)?.value)
}

/// Variance of `Σ W(φ_z(x)) S_x` in `H²` under GAF zeros:
/// `(1/(2(1−|z|²))) ∬ |W(η)−W(ξ)|² (1 + 2u + 2t + tu)/(π²(1−u)⁴) dV dV`
/// with `u = |ηξ|²`, `t = |z|²u`.
pub fn var_hardy_closed(w: &RadialWeight, z: &Point, quad: &QuadSpec) -> Result<f64> {
    let z2 = check_disk_point(z)?;
    if w.is_constant() {
        return Ok(0.0);
    }
    check_support(w)?;
    let integral = gap_double_integral(w, quad, |u, omu| {
        let t = z2 * u;
        (1.0 + 2.0 * u + 2.0 * t + t * u) / omu.powi(4)
    })?;
    Ok(integral / (2.0 * (1.0 - z2)))
}

/// Variance of the scalar statistic `Σ W(φ_z(x))` under GAF zeros (independent of `z`).
pub fn var_scalar_gaf(w: &RadialWeight, quad: &QuadSpec) -> Result<f64> {
    if w.is_constant() {
        return Ok(0.0);
    }
    check_support(w)?;
    Ok(0.5 * gap_double_integral(w, quad, |u, omu| (1.0 + u) / omu.powi(3))?)
}

/// Variance of `Σ W(φ_z(x)) P_x` in `L²(𝕋)` under GAF zeros.
///
/// `⟨P_x, P_y⟩ = 2 Re S(y, x) − 1`, so this is twice the Hardy variance
/// minus the scalar one.
pub fn var_l2_gaf(w: &RadialWeight, z: &Point, quad: &QuadSpec) -> Result<f64> {
    Ok(2.0 * var_hardy_closed(w, z, quad)? - var_scalar_gaf(w, quad)?)
}

/// Bergman vector variance with its two-sided bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BergmanVariance {
    pub value: f64,
    /// The simplified integral with kernel `(1 − |ηξ|²)^{−5}/π³`.
    pub lower: f64,
    /// 36 times the simplified integral.
    pub upper: f64,
}

/// Variance of `Σ W(φ_{z_o}(x)) K^x` in `A²` under GAF zeros.
pub fn var_bergman_closed(w: &RadialWeight, z_o: &Point, quad: &QuadSpec) -> Result<BergmanVariance> {
    let z2 = check_disk_point(z_o)?;
    if w.is_constant() {
        return Ok(BergmanVariance { value: 0.0, lower: 0.0, upper: 0.0 });
    }
    check_support(w)?;
    let pre = 1.0 / (2.0 * PI * (1.0 - z2) * (1.0 - z2));
    let value = gap_double_integral(w, quad, |u, omu| {
        let t = z2 * u;
        ((1.0 + 8.0 * t + 3.0 * t * t) * omu + 4.0 * u * (1.0 + 4.0 * t + t * t)) / omu.powi(5)
    })?;
    let simple = gap_double_integral(w, quad, |_, omu| 1.0 / omu.powi(5))?;
    Ok(BergmanVariance { value: pre * value, lower: pre * simple, upper: 36.0 * pre * simple })
}

/// `E Σ W(φ_z(x))` under GAF zeros: `∫ W dμ/π = ∫₀¹ v(p)/p² dp`.
pub fn expected_gaf_weight_sum(w: &RadialWeight) -> Result<f64> {
    if w.is_constant() {
        return Err(Error::Usage("constant weights have infinite expected sum".into()));
    }
    check_support(w)?;
    if let RadialWeight::Ws(s) = w {
        return Ok(crate::reconstruct::expected_w_s_sum(*s));
    }
    let breaks = w.gap_breaks();
    Ok(integrate(
        |p| if p > 0.0 { w.eval_gap(p) / (p * p) } else { 0.0 },
        &breaks,
        Tolerance::new(1e-300, 1e-13),
        MAX_EVALS,
    )?
    .value)
}

/// `Var / (E Σ W)²` for the Bergman vector statistic; bounded below by `π²/64`.
pub fn failure_ratio(w: &RadialWeight, z_o: &Point, quad: &QuadSpec) -> Result<f64> {
    let e = expected_gaf_weight_sum(w)?;
    if !(e > 0.0) {
        return Err(Error::Usage(format!("weight {w} vanishes identically")));
    }
    Ok(var_bergman_closed(w, z_o, quad)?.value / (e * e))
}

/// Lower bound on every failure ratio.
pub const FAILURE_BOUND: f64 = PI * PI / 64.0;

/// `Var[Σ W_s(φ_z(x)) S_x] / (E Σ W_s)²` for `1 < s < 1.25`.
pub fn decay_ratio(s: f64, z: &Point, quad: &QuadSpec) -> Result<f64> {
    if !(s > 1.0 && s < 1.25) {
        return Err(Error::Usage(format!("the decay ratio is defined for 1 < s < 1.25, got {s}")));
    }
    let e = crate::reconstruct::expected_w_s_sum(s);
    Ok(var_hardy_closed(&RadialWeight::Ws(s), z, quad)? / (e * e))
}

/// Largest `|φ_z(y)|` over the support `|y| ≤ ρ_max` of the weight.
pub fn support_image_radius(w: &RadialWeight, z: &Point) -> f64 {
    let a = z.norm();
    let r = w.support_radius();
    (a + r) / (1.0 + a * r)
}

/// Product rule for [`var_hardy_general`].
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralQuad {
    /// Gauss–Legendre nodes per radial piece.
    pub radial_nodes: usize,
    /// Equally spaced angles; the error decays like `ρ_max^angular_nodes`.
    pub angular_nodes: usize,
    /// Radii where `g` jumps or kinks; the support radius is added automatically.
    pub radial_breaks: Vec<f64>,
}

impl Default for GeneralQuad {
    fn default() -> Self {
        GeneralQuad { radial_nodes: 48, angular_nodes: 64, radial_breaks: Vec::new() }
    }
}

/// `½ ∬ (g(z) − g(w))² Re L_S(z, w) dV dV` with `L_S = S|K|²`, for real `g`
/// vanishing outside `|x| ≤ support`.
///
/// The formula only holds for real-valued `g`, which the signature enforces.
/// `Re L_S(z,w) = (1 − Re zw̄)/(π²|1 − zw̄|⁶)`.
pub fn var_hardy_general(g: impl Fn(Complex64) -> f64, support: f64, quad: &GeneralQuad) -> Result<f64> {
    if !(support > 0.0 && support < 1.0) {
        return Err(Error::Usage(format!("support radius must lie in (0, 1), got {support}")));
    }
    if quad.radial_nodes == 0 || quad.angular_nodes == 0 {
        return Err(Error::Usage("general quadrature needs nodes".into()));
    }
    let mut cuts: Vec<f64> = quad.radial_breaks.iter().copied().filter(|r| *r > 0.0 && *r < 1.0).collect();
    cuts.extend([0.0, support, 1.0]);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();
    let gl = GaussLegendre::new(quad.radial_nodes);
    let m = quad.angular_nodes;
    let dtheta = 2.0 * PI / m as f64;
    let mut nodes: Vec<(Complex64, f64, f64)> = Vec::new();
    for w in cuts.windows(2) {
        for (r, wr) in gl.mapped(w[0], w[1]) {
            for j in 0..m {
                let z = Complex64::from_polar(r, dtheta * j as f64);
                nodes.push((z, wr * r * dtheta, g(z)));
            }
        }
    }
    let mut total = CompensatedSum::new();
    for (i, (zi, wi, gi)) in nodes.iter().enumerate() {
        let mut row = 0.0;
        for (zj, wj, gj) in &nodes[i + 1..] {
            let d = gi - gj;
            if d == 0.0 {
                continue;
            }
            let a = zi * zj.conj();
            let one_minus = Complex64::new(1.0 - a.re, -a.im);
            let m2 = one_minus.norm_sqr();
            row += wj * d * d * (1.0 - a.re) / (m2 * m2 * m2);
        }
        total.add(wi * row);
    }
    // Pairs were visited once; Re L_S is symmetric, so the ½ cancels the doubling.
    Ok(total.value() / (PI * PI))
}

/// Residue identities checked by direct angular or planar quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Identity {
    /// `avg_θ S(z, we^{−iθ})|K(z, we^{−iθ})|²`.
    I2 { z: Complex64, w: Complex64 },
    /// `avg_θ K(z, we^{−iθ})|K(z, we^{−iθ})|²`.
    I9 { z: Complex64, w: Complex64 },
    /// Double angular average entering the Hardy vector variance.
    I3 { eta: Complex64, xi: Complex64, z_o: Complex64 },
    /// Double angular average entering the Bergman vector variance.
    I10 { eta: Complex64, xi: Complex64, z_o: Complex64 },
    /// Single angular average behind `I10`.
    I11 { eta: Complex64, xi: Complex64, z_o: Complex64 },
    /// `∫ S(z,w)|K(z,w)|² dV(w) = S(z,z)K(z,z)`.
    RepHardy { z: Complex64 },
    /// `∫ K(z,w)|K(z,w)|² dV(w) = K(z,z)²`.
    Rep { z: Complex64 },
}

impl Identity {
    pub fn name(&self) -> &'static str {
        match self {
            Identity::I2 { .. } => "I2",
            Identity::I9 { .. } => "I9",
            Identity::I3 { .. } => "I3",
            Identity::I10 { .. } => "I10",
            Identity::I11 { .. } => "I11",
            Identity::RepHardy { .. } => "rep-hardy",
            Identity::Rep { .. } => "rep-bergman",
        }
    }

    fn params(&self) -> Vec<Complex64> {
        match *self {
            Identity::I2 { z, w } | Identity::I9 { z, w } => vec![z, w],
            Identity::I3 { eta, xi, z_o } | Identity::I10 { eta, xi, z_o } | Identity::I11 { eta, xi, z_o } => {
                vec![eta, xi, z_o]
            }
            Identity::RepHardy { z } | Identity::Rep { z } => vec![z],
        }
    }
}

/// Both sides of an identity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityCheck {
    pub lhs: Complex64,
    pub rhs: Complex64,
}

impl IdentityCheck {
    pub fn relative_error(&self) -> f64 {
        (self.lhs - self.rhs).norm() / self.rhs.norm().max(1e-300)
    }
}

fn szego(a: Complex64, b: Complex64) -> Complex64 {
    (Complex64::new(1.0, 0.0) - a * b.conj()).inv()
}

fn bergman(a: Complex64, b: Complex64) -> Complex64 {
    let d = Complex64::new(1.0, 0.0) - a * b.conj();
    (PI * d * d).inv()
}

fn circle_avg(m: usize, f: impl Fn(Complex64) -> Complex64) -> Complex64 {
    let mut s = ComplexSum::new();
    for j in 0..m {
        s.add(f(Complex64::from_polar(1.0, 2.0 * PI * j as f64 / m as f64)));
    }
    s.value() / m as f64
}

/// Evaluates both sides; `angular_nodes` equally spaced angles per circle.
pub fn identity_angular(id: &Identity, angular_nodes: usize) -> Result<IdentityCheck> {
    if id.params().iter().any(|p| !(p.norm() < 1.0)) {
        return Err(Error::Domain(format!("{} parameters must lie inside the disk", id.name())));
    }
    if angular_nodes < 8 {
        return Err(Error::Usage("identity quadrature needs at least 8 angles".into()));
    }
    let m = angular_nodes;
    let one = Complex64::new(1.0, 0.0);
    let check = match *id {
        Identity::I2 { z, w } => {
            let lhs = circle_avg(m, |e| {
                let we = w * e.conj();
                szego(z, we) * bergman(z, we).norm_sqr()
            });
            let x = (z * w).norm_sqr();
            let rhs = (1.0 / (1.0 - x).powi(3) + 3.0 * x / (1.0 - x).powi(4)) / (PI * PI);
            IdentityCheck { lhs, rhs: rhs.into() }
        }
        Identity::I9 { z, w } => {
            let lhs = circle_avg(m, |e| {
                let we = w * e.conj();
                bergman(z, we) * bergman(z, we).norm_sqr()
            });
            let x = (z * w).norm_sqr();
            IdentityCheck { lhs, rhs: ((1.0 + 3.0 * x) / (PI.powi(3) * (1.0 - x).powi(5))).into() }
        }
        Identity::I11 { eta, xi, z_o } => {
            let lhs = circle_avg(m, |e| {
                let a = eta * e;
                let f = one - z_o.conj() * a;
                f * f * bergman(a, xi) * bergman(a, xi).norm_sqr()
            });
            let x = (eta * xi).norm_sqr();
            let y = z_o.conj() * eta.norm_sqr() * xi;
            let rhs = ((one - y) * (one - 3.0 * y) / (1.0 - x).powi(4)
                + 4.0 * x * (one - y) * (one - y) / (1.0 - x).powi(5))
                / PI.powi(3);
            IdentityCheck { lhs, rhs }
        }
        Identity::I10 { eta, xi, z_o } => {
            let lhs = circle_avg(m, |e1| {
                let a = eta * e1;
                let f1 = one - z_o.conj() * a;
                circle_avg(m, |e2| {
                    let b = xi * e2;
                    let f2 = one - z_o * b.conj();
                    f1 * f1 * f2 * f2 * bergman(a, b) * bergman(a, b).norm_sqr()
                })
            });
            let x = (eta * xi).norm_sqr();
            let t = z_o.norm_sqr() * x;
            let rhs = ((1.0 + 8.0 * t + 3.0 * t * t) / (1.0 - x).powi(4)
                + 4.0 * x * (1.0 + 4.0 * t + t * t) / (1.0 - x).powi(5))
                / PI.powi(3);
            IdentityCheck { lhs, rhs: rhs.into() }
        }
        Identity::I3 { eta, xi, z_o } => {
            let lhs = circle_avg(m, |e1| {
                let a = eta * e1;
                let f1 = one - z_o.conj() * a;
                circle_avg(m, |e2| {
                    let b = xi * e2.conj();
                    let f2 = one - z_o * b.conj();
                    f1 * f2 * szego(a, b) * bergman(a, b).norm_sqr()
                })
            });
            let x = (eta * xi).norm_sqr();
            let t = z_o.norm_sqr() * x;
            let rhs = (1.0 + 2.0 * x + 2.0 * t + t * x) / (PI * PI * (1.0 - x).powi(4));
            IdentityCheck { lhs, rhs: rhs.into() }
        }
        Identity::RepHardy { z } => {
            let lhs = planar_integral(m, |w| szego(z, w) * bergman(z, w).norm_sqr())?;
            IdentityCheck { lhs, rhs: (1.0 / (PI * (1.0 - z.norm_sqr()).powi(3))).into() }
        }
        Identity::Rep { z } => {
            let lhs = planar_integral(m, |w| bergman(z, w) * bergman(z, w).norm_sqr())?;
            IdentityCheck { lhs, rhs: (1.0 / (PI * PI * (1.0 - z.norm_sqr()).powi(4))).into() }
        }
    };
    Ok(check)
}

/// `∫_𝔻 f dV` by adaptive radial quadrature of trapezoidal circle averages.
fn planar_integral(m: usize, f: impl Fn(Complex64) -> Complex64) -> Result<Complex64> {
    let tol = Tolerance::new(1e-15, 1e-13);
    let ring = |r: f64| circle_avg(m, |e| f(r * e)) * (2.0 * PI * r);
    let re = integrate(|r| ring(r).re, &[0.0, 0.5, 1.0], tol, MAX_EVALS)?.value;
    let im = integrate(|r| ring(r).im, &[0.0, 0.5, 1.0], tol, MAX_EVALS)?.value;
    Ok(Complex64::new(re, im))
}

/// Value carried by each point of a linear statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ValueSpace {
    Scalar,
    /// Szegő kernels `S_x` in `H²` (disk).
    Hardy,
    /// Poisson kernels `P_x` in `L²(𝕋)` (disk).
    L2,
}

impl FromStr for ValueSpace {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "scalar" => Ok(ValueSpace::Scalar),
            "hardy" | "h2" => Ok(ValueSpace::Hardy),
            "l2" => Ok(ValueSpace::L2),
            other => Err(Error::Usage(format!("unknown value space `{other}`"))),
        }
    }
}

/// Per-point weight of a linear statistic.
#[derive(Debug, Clone, PartialEq)]
pub enum StatWeight {
    /// `W(φ_z(x))`.
    Radial(RadialWeight),
    /// `e^{−s d(z,x)}`.
    Exponential(f64),
}

/// `Σ_x weight(x)·value(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Statistic {
    pub weight: StatWeight,
    pub z: Point,
    pub space: ValueSpace,
    /// Truncation order of Hardy/L² vectors.
    pub n_max: usize,
}

impl Statistic {
    pub fn new(weight: StatWeight, z: Point, space: ValueSpace) -> Statistic {
        Statistic { weight, z, space, n_max: STAT_ORDER }
    }

    fn check(&self, model: Model) -> Result<()> {
        if self.z.model() != model {
            return Err(Error::Usage("statistic base point and process model differ".into()));
        }
        if self.space != ValueSpace::Scalar && model.kind() != ModelKind::PoincareDisk {
            return Err(Error::Usage("Hardy and L² statistics are implemented on the disk only".into()));
        }
        match &self.weight {
            StatWeight::Radial(w) => w.validate(),
            StatWeight::Exponential(s) if !(*s > 0.0) => {
                Err(Error::Usage(format!("exponent must be positive, got {s}")))
            }
            StatWeight::Exponential(_) => Ok(()),
        }
    }

    /// Weights of every point of `conf`.
    pub fn weights(&self, conf: &Configuration) -> Vec<f64> {
        let model = conf.model();
        let z = &self.z;
        conf.points()
            .iter()
            .map(|p| match &self.weight {
                StatWeight::Radial(w) => {
                    let gap = if model.kind() == ModelKind::PoincareDisk {
                        one_minus_moved_sq(z.to_complex(), p.to_complex())
                    } else {
                        let c = (0.5 * dist_raw(model, z.coords(), p.coords())).cosh();
                        1.0 / (c * c)
                    };
                    w.eval_gap(gap)
                }
                StatWeight::Exponential(s) => {
                    let d = if z.norm_sq() == 0.0 {
                        dist_origin_raw(p.coords())
                    } else {
                        dist_raw(model, z.coords(), p.coords())
                    };
                    (-s * d).exp()
                }
            })
            .collect()
    }

    /// Coordinates of the statistic on one configuration.
    pub fn evaluate(&self, conf: &Configuration) -> Result<Vec<Complex64>> {
        self.check(conf.model())?;
        let w = self.weights(conf);
        match self.space {
            ValueSpace::Scalar => Ok(vec![w.iter().copied().collect::<CompensatedSum>().value().into()]),
            ValueSpace::Hardy | ValueSpace::L2 => {
                let basis =
                    if self.space == ValueSpace::Hardy { Basis::Hardy(self.n_max) } else { Basis::Fourier(self.n_max) };
                Ok(weighted_kernel_sum(conf.model(), conf.points().iter().zip(w), basis)?.coeffs().to_vec())
            }
        }
    }
}

/// Closed form next to its Monte Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceReport {
    /// NaN (written as null) when no closed form applies.
    pub closed_form: f64,
    pub mc_estimate: f64,
    pub mc_stderr: f64,
    pub n_reps: usize,
    /// `|closed − mc| ≤ 3·stderr` and relative gap ≤ 0.05.
    pub pass: bool,
}

impl VarianceReport {
    fn new(closed_form: f64, mc_estimate: f64, mc_stderr: f64, n_reps: usize) -> VarianceReport {
        let mut r = VarianceReport { closed_form, mc_estimate, mc_stderr, n_reps, pass: false };
        r.pass = r.within_stderr(3.0) && r.relative_gap() <= 0.05;
        r
    }

    pub fn gap(&self) -> f64 {
        (self.closed_form - self.mc_estimate).abs()
    }

    pub fn relative_gap(&self) -> f64 {
        if self.closed_form == 0.0 && self.mc_estimate == 0.0 {
            return 0.0;
        }
        self.gap() / self.closed_form.abs()
    }

    pub fn within_stderr(&self, k: f64) -> bool {
        self.closed_form.is_finite() && self.gap() <= k * self.mc_stderr
    }
}

/// Sample variance of vector observations with its jackknife standard error.
pub fn vector_variance(obs: &[Vec<Complex64>]) -> (f64, f64) {
    let n = obs.len();
    if n < 3 {
        return (f64::NAN, f64::NAN);
    }
    let dim = obs[0].len();
    let mut mean_v = vec![ComplexSum::new(); dim];
    for o in obs {
        for (m, c) in mean_v.iter_mut().zip(o) {
            m.add(*c);
        }
    }
    let mean_v: Vec<Complex64> = mean_v.iter().map(|m| m.value() / n as f64).collect();
    let sq: Vec<f64> = obs
        .iter()
        .map(|o| o.iter().zip(&mean_v).map(|(a, b)| (a - b).norm_sqr()).collect::<CompensatedSum>().value())
        .collect();
    variance_with_jackknife(&sq)
}

/// Exact variance of the statistic when a closed form is known: the
/// determinantal formulas for GAF zeros, Campbell's formula for Poisson.
pub fn closed_variance(spec: &SamplerSpec, stat: &Statistic, quad: &QuadSpec) -> Result<Option<f64>> {
    stat.check(spec.model)?;
    match (spec.kind, &stat.weight) {
        (ProcessKind::GafZeros, StatWeight::Radial(w)) => {
            if support_image_radius(w, &stat.z) > spec.r_edge && !w.is_constant() {
                log::warn!("weight support reaches beyond r_edge = {}; the sample misses part of it", spec.r_edge);
            }
            Ok(Some(match stat.space {
                ValueSpace::Scalar => var_scalar_gaf(w, quad)?,
                ValueSpace::Hardy => var_hardy_closed(w, &stat.z, quad)?,
                ValueSpace::L2 => var_l2_gaf(w, &stat.z, quad)?,
            }))
        }
        (ProcessKind::Poisson, _) => campbell_variance(spec, stat).map(Some),
        _ => Ok(None),
    }
}

/// `λ ∫_{B(o,R)} weight(x)² ‖value(x)‖² dμ(x)`.
///
/// Radial weights must have their support image inside the truncation ball
/// (the formula then ignores truncation); exponential weights need `z = o`.
pub fn campbell_variance(spec: &SamplerSpec, stat: &Statistic) -> Result<f64> {
    let model = spec.model;
    let lambda = spec.lambda;
    let radius = spec.radius;
    let tol = Tolerance::new(1e-300, 1e-11);
    let z_dist = dist_origin_raw(stat.z.coords());
    match (&stat.weight, stat.space) {
        (StatWeight::Radial(w), ValueSpace::Scalar) => {
            if w.is_constant() {
                let c = if let RadialWeight::Constant(c) = w { *c } else { 0.0 };
                return Ok(lambda * c * c * crate::geometry::ball_volume(model, radius)?);
            }
            let reach = 2.0 * w.support_radius().atanh();
            if reach + z_dist > radius + 1e-12 {
                return Err(Error::Usage("weight support extends beyond the truncation radius".into()));
            }
            let f = |u: f64| {
                let c = (0.5 * u).cosh();
                let v = w.eval_gap(1.0 / (c * c));
                v * v * radial_density(model, u)
            };
            let mut breaks: Vec<f64> =
                w.gap_breaks().iter().filter(|g| **g > 0.0).map(|g| 2.0 * (1.0 - g).sqrt().atanh()).collect();
            breaks.retain(|u| *u <= reach);
            breaks.extend([0.0, reach]);
            breaks.sort_by(f64::total_cmp);
            breaks.dedup();
            Ok(lambda * integrate(f, &breaks, tol, MAX_EVALS)?.value)
        }
        (StatWeight::Radial(w), space) => {
            // Disk vectors: substitute y = φ_z(x) and average ‖v(φ_z x)‖² over circles.
            if w.is_constant() {
                return Err(Error::Usage("constant weights make vector statistics infinite".into()));
            }
            let reach = 2.0 * w.support_radius().atanh();
            if reach + z_dist > radius + 1e-12 {
                return Err(Error::Usage("weight support extends beyond the truncation radius".into()));
            }
            let zc = stat.z.to_complex();
            let n1 = (stat.n_max + 1) as i32;
            let norm_sq = |x: Complex64| {
                let r2 = x.norm_sqr();
                let tail = r2.powi(n1);
                match space {
                    ValueSpace::Hardy => (1.0 - tail) / (1.0 - r2),
                    _ => (1.0 + r2 - 2.0 * tail) / (1.0 - r2),
                }
            };
            let m = 256;
            // dμ = ½ dρ dθ/(1−ρ)² with ρ = |x|², written in the gap g = 1 − ρ.
            let f = |g: f64| {
                let v = w.eval_gap(g);
                if v == 0.0 {
                    return 0.0;
                }
                let r = (1.0 - g).max(0.0).sqrt();
                let avg = circle_avg(m, |e| {
                    let x = r * e;
                    let y = (zc - x) / (Complex64::new(1.0, 0.0) - zc.conj() * x);
                    norm_sq(y).into()
                })
                .re;
                v * v * avg * PI / (g * g)
            };
            Ok(lambda * integrate(f, &w.gap_breaks(), tol, MAX_EVALS)?.value)
        }
        (StatWeight::Exponential(s), ValueSpace::Scalar) => {
            if z_dist != 0.0 {
                return Err(Error::Usage("exponential Campbell variance is implemented for z = o".into()));
            }
            let total = crate::reconstruct::sigma_bar(model, 1.0, &stat.z, 2.0 * s)?;
            let tail = crate::reconstruct::tail_fraction(model, &stat.z, 2.0 * s, radius)?;
            Ok(lambda * total * (1.0 - tail))
        }
        (StatWeight::Exponential(_), _) => {
            Err(Error::Usage("no closed variance for exponentially weighted vector statistics".into()))
        }
    }
}

/// Monte Carlo variance of `stat` over `n_reps` replications of `spec`.
pub fn mc_variance(spec: &SamplerSpec, stat: &Statistic, n_reps: usize, quad: &QuadSpec) -> Result<VarianceReport> {
    if n_reps < 100 {
        return Err(Error::Usage(format!("Monte Carlo variance needs at least 100 replications, got {n_reps}")));
    }
    stat.check(spec.model)?;
    if spec.kind == ProcessKind::GafZeros {
        if let StatWeight::Radial(w) = &stat.weight {
            let img = support_image_radius(w, &stat.z);
            if img > spec.r_edge && !w.is_constant() {
                return Err(Error::Usage(format!(
                    "weight support maps to radius {img:.4} beyond r_edge = {}",
                    spec.r_edge
                )));
            }
        }
    }
    let obs = spec.ensemble(n_reps, |_, conf| stat.evaluate(conf))?;
    let (est, se) = vector_variance(&obs);
    let closed = closed_variance(spec, stat, quad)?.unwrap_or(f64::NAN);
    Ok(VarianceReport::new(closed, est, se, n_reps))
}

/// Empirical check of `Var(Σf) ≤ C·E(Σ|f|²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    pub variance: f64,
    pub second_moment: f64,
    pub ratio: f64,
    pub ratio_stderr: f64,
    /// 1 for nonnegative `f`, 16 otherwise.
    pub constant: f64,
    pub pass: bool,
}

/// Runs the variance-bound check; `C = 1` when every observed value of `f`
/// is real and nonnegative, `C = 16` otherwise.
pub fn variance_bound_check(
    spec: &SamplerSpec,
    f: impl Fn(&Point) -> Complex64 + Sync,
    n_reps: usize,
) -> Result<BoundReport> {
    if n_reps < 3 {
        return Err(Error::Usage("bound check needs at least 3 replications".into()));
    }
    let per_rep = spec.ensemble(n_reps, |_, conf| {
        let mut sum = ComplexSum::new();
        let mut sq = CompensatedSum::new();
        let mut nonneg = true;
        for p in conf.points() {
            let v = f(p);
            nonneg &= v.im == 0.0 && v.re >= 0.0;
            sum.add(v);
            sq.add(v.norm_sqr());
        }
        Ok((sum.value(), sq.value(), nonneg))
    })?;
    let nonneg = per_rep.iter().all(|r| r.2);
    let constant = if nonneg { 1.0 } else { 16.0 };
    let n = n_reps as f64;
    let xs: Vec<Complex64> = per_rep.iter().map(|r| r.0).collect();
    let ys: Vec<f64> = per_rep.iter().map(|r| r.1).collect();
    let m: Complex64 = xs.iter().copied().collect::<ComplexSum>().value() / n;
    let d: Vec<f64> = xs.iter().map(|x| (x - m).norm_sqr()).collect();
    let (variance, _) = variance_with_jackknife(&d);
    let second_moment = mean(&ys);
    if second_moment == 0.0 {
        return Ok(BoundReport {
            variance,
            second_moment,
            ratio: 0.0,
            ratio_stderr: 0.0,
            constant,
            pass: variance == 0.0,
        });
    }
    // Jackknife of the ratio from leave-one-out variances and means.
    let total_d: f64 = d.iter().copied().collect::<CompensatedSum>().value();
    let total_y: f64 = ys.iter().copied().collect::<CompensatedSum>().value();
    let loo: Vec<f64> = d
        .iter()
        .zip(&ys)
        .map(|(di, yi)| ((total_d - di * n / (n - 1.0)) / (n - 2.0)) / ((total_y - yi) / (n - 1.0)))
        .collect();
    let lm = mean(&loo);
    let ratio_stderr = ((n - 1.0) / n * loo.iter().map(|v| (v - lm) * (v - lm)).sum::<f64>()).sqrt();
    let ratio = variance / second_moment;
    Ok(BoundReport {
        variance,
        second_moment,
        ratio,
        ratio_stderr,
        constant,
        pass: ratio <= constant + 3.0 * ratio_stderr,
    })
}

/// One row of the exponential-weight variance scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub s: f64,
    pub variance: f64,
    pub stderr: f64,
    /// `(1 − e^{−(s−h)})·variance`.
    pub scaled: f64,
}

/// Monte Carlo variance of the kernel statistic `Σ e^{−s d(z,x)} v(x)` on a
/// grid of exponents, reusing each configuration across the grid.
pub fn up_exp_scan(
    spec: &SamplerSpec,
    z: &Point,
    s_grid: &[f64],
    space: ValueSpace,
    n_max: usize,
    n_reps: usize,
) -> Result<Vec<ScanRow>> {
    let h = spec.model.entropy();
    if let Some(s) = s_grid.iter().find(|s| !(**s > h)) {
        return Err(Error::Divergent { s: *s, h });
    }
    if n_reps < 3 {
        return Err(Error::Usage("scan needs at least 3 replications".into()));
    }
    let stats: Vec<Statistic> =
        s_grid.iter().map(|s| Statistic { weight: StatWeight::Exponential(*s), z: z.clone(), space, n_max }).collect();
    let obs = spec.ensemble(n_reps, |_, conf| stats.iter().map(|st| st.evaluate(conf)).collect::<Result<Vec<_>>>())?;
    let mut rows = Vec::with_capacity(s_grid.len());
    for (k, s) in s_grid.iter().enumerate() {
        let column: Vec<Vec<Complex64>> = obs.iter().map(|o| o[k].clone()).collect();
        let (variance, stderr) = vector_variance(&column);
        rows.push(ScanRow { s: *s, variance, stderr, scaled: (1.0 - (-(s - h)).exp()) * variance });
    }
    Ok(rows)
}

/// `max/min` of the scaled variances of a scan.
pub fn scan_spread(rows: &[ScanRow]) -> f64 {
    let max = rows.iter().map(|r| r.scaled).fold(f64::NEG_INFINITY, f64::max);
    let min = rows.iter().map(|r| r.scaled).fold(f64::INFINITY, f64::min);
    max / min
}
