//! Ball models of rank-one hyperbolic spaces.
//!
//! Three models share one coordinate convention: a point is a real vector
//! strictly inside the unit ball. The Poincaré disk and the complex ball
//! 𝔻_d store complex coordinates as interleaved `(re, im)` pairs; the real
//! ball 𝔹_m stores plain coordinates. The disk is the complex ball with
//! `d = 1` and also the real ball with `m = 2`; all three give the same
//! distance, Busemann cocycle and Poisson kernel.
//!
//! Volume measures are `dV/(1−|x|²)^k` with `k = 2, d+1, m`, and the
//! Poisson kernel of each model is `exp(−h·B_ξ(x, o))` with volume
//! entropy `h = 1, d, m−1`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::numeric::quad::{integrate, Tolerance, MAX_EVALS};

/// Points with `|x| ≥ 1 − BOUNDARY_MARGIN` are rejected.
pub const BOUNDARY_MARGIN: f64 = 1e-14;

pub(crate) type Coords = SmallVec<[f64; 4]>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelKind {
    PoincareDisk,
    ComplexBall,
    RealBall,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Model {
    kind: ModelKind,
    dim: usize,
}

impl Model {
    pub const DISK: Model = Model { kind: ModelKind::PoincareDisk, dim: 1 };

    /// Complex hyperbolic ball of complex dimension `d ≥ 1`.
    pub fn complex_ball(d: usize) -> Result<Model> {
        if d == 0 {
            return Err(Error::Usage("complex ball dimension must be at least 1".into()));
        }
        Ok(Model { kind: ModelKind::ComplexBall, dim: d })
    }

    /// Real hyperbolic ball of real dimension `m ≥ 2`.
    pub fn real_ball(m: usize) -> Result<Model> {
        if m < 2 {
            return Err(Error::Usage("real ball dimension must be at least 2".into()));
        }
        Ok(Model { kind: ModelKind::RealBall, dim: m })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    /// Complex dimension `d` for complex balls, `m` for real balls, 1 for the disk.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Volume entropy: exponential growth rate of `μ(B(o, r))`.
    pub fn entropy(&self) -> f64 {
        match self.kind {
            ModelKind::PoincareDisk => 1.0,
            ModelKind::ComplexBall => self.dim as f64,
            ModelKind::RealBall => (self.dim - 1) as f64,
        }
    }

    /// Number of real coordinates of a point.
    pub fn real_dim(&self) -> usize {
        match self.kind {
            ModelKind::PoincareDisk => 2,
            ModelKind::ComplexBall => 2 * self.dim,
            ModelKind::RealBall => self.dim,
        }
    }

    /// Exponent `k` of the volume density `(1−|x|²)^{−k}`.
    pub fn density_exponent(&self) -> i32 {
        match self.kind {
            ModelKind::PoincareDisk => 2,
            ModelKind::ComplexBall => self.dim as i32 + 1,
            ModelKind::RealBall => self.dim as i32,
        }
    }

    /// True for the three parameterizations of the hyperbolic plane.
    pub fn is_planar(&self) -> bool {
        self.real_dim() == 2
    }

    fn is_hermitian(&self) -> bool {
        !matches!(self.kind, ModelKind::RealBall)
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::PoincareDisk => write!(f, "disk"),
            ModelKind::ComplexBall => write!(f, "complex-ball:{}", self.dim),
            ModelKind::RealBall => write!(f, "real-ball:{}", self.dim),
        }
    }
}

impl FromStr for Model {
    type Err = Error;

    fn from_str(s: &str) -> Result<Model> {
        let s = s.trim();
        if s == "disk" {
            return Ok(Model::DISK);
        }
        let (name, dim) = s
            .split_once(':')
            .ok_or_else(|| Error::Parse(format!("model `{s}`: expected disk, complex-ball:D or real-ball:M")))?;
        let dim: usize = dim.trim().parse().map_err(|_| Error::Parse(format!("model `{s}`: bad dimension")))?;
        match name.trim() {
            "complex-ball" | "complex" => Model::complex_ball(dim),
            "real-ball" | "real" => Model::real_ball(dim),
            other => Err(Error::Parse(format!("unknown model kind `{other}`"))),
        }
    }
}

/// A point strictly inside the unit ball of its model.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    model: Model,
    coords: Coords,
}

impl Point {
    pub fn new(model: Model, coords: &[f64]) -> Result<Point> {
        if coords.len() != model.real_dim() {
            return Err(Error::Usage(format!(
                "{model} points have {} real coordinates, got {}",
                model.real_dim(),
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinates {coords:?}")));
        }
        let norm = norm_sq(coords).sqrt();
        if norm >= 1.0 - BOUNDARY_MARGIN {
            return Err(Error::Domain(format!("|x| = {norm} is not strictly inside the unit ball")));
        }
        Ok(Point { model, coords: Coords::from_slice(coords) })
    }

    pub fn origin(model: Model) -> Point {
        Point { model, coords: smallvec::smallvec![0.0; model.real_dim()] }
    }

    pub fn disk(z: Complex64) -> Result<Point> {
        Point::new(Model::DISK, &[z.re, z.im])
    }

    /// Point of a complex model from complex coordinates.
    pub fn from_complex(model: Model, z: &[Complex64]) -> Result<Point> {
        if !model.is_hermitian() {
            return Err(Error::Usage(format!("{model} has real coordinates")));
        }
        let flat: Coords = z.iter().flat_map(|c| [c.re, c.im]).collect();
        Point::new(model, &flat)
    }

    /// Skips validation; callers guarantee the coordinates are interior.
    pub(crate) fn from_raw(model: Model, coords: Coords) -> Point {
        debug_assert_eq!(coords.len(), model.real_dim());
        Point { model, coords }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.coords)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// `x₀ + i·x₁`; meaningful for planar models.
    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.coords[0], self.coords[1])
    }

    /// The same coordinates viewed in another model with as many real coordinates.
    pub fn retag(&self, model: Model) -> Result<Point> {
        Point::new(model, &self.coords)
    }

    /// Radial projection `x/|x|`; `None` at the origin.
    pub fn direction(&self) -> Option<BoundaryPoint> {
        let n = self.norm();
        if n == 0.0 {
            return None;
        }
        Some(BoundaryPoint { model: self.model, coords: self.coords.iter().map(|c| c / n).collect() })
    }
}

/// A point of the unit sphere bounding a model.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryPoint {
    model: Model,
    coords: Coords,
}

impl BoundaryPoint {
    /// Accepts coordinates within 1e−12 of unit norm and renormalizes them.
    pub fn new(model: Model, coords: &[f64]) -> Result<BoundaryPoint> {
        if coords.len() != model.real_dim() {
            return Err(Error::Usage(format!(
                "{model} boundary points have {} real coordinates, got {}",
                model.real_dim(),
                coords.len()
            )));
        }
        let n = norm_sq(coords).sqrt();
        if !n.is_finite() || (n - 1.0).abs() > 1e-12 {
            return Err(Error::Domain(format!("boundary point has norm {n}")));
        }
        Ok(BoundaryPoint { model, coords: coords.iter().map(|c| c / n).collect() })
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn from_direction(model: Model, v: &[f64]) -> Result<BoundaryPoint> {
        let n = norm_sq(v).sqrt();
        if !(n > 0.0) || !n.is_finite() {
            return Err(Error::Domain("direction vector must be nonzero and finite".into()));
        }
        let unit: Coords = v.iter().map(|c| c / n).collect();
        BoundaryPoint::new(model, &unit)
    }

    /// `e^{iθ}` on the unit circle.
    pub fn from_angle(theta: f64) -> BoundaryPoint {
        BoundaryPoint { model: Model::DISK, coords: smallvec::smallvec![theta.cos(), theta.sin()] }
    }

    /// First standard basis vector, used as a conventional direction.
    pub fn e1(model: Model) -> BoundaryPoint {
        let mut coords: Coords = smallvec::smallvec![0.0; model.real_dim()];
        coords[0] = 1.0;
        BoundaryPoint { model, coords }
    }

    pub(crate) fn from_raw(model: Model, coords: Coords) -> BoundaryPoint {
        BoundaryPoint { model, coords }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(self.coords[0], self.coords[1])
    }

    pub fn angle(&self) -> f64 {
        self.coords[1].atan2(self.coords[0])
    }

    pub fn retag(&self, model: Model) -> Result<BoundaryPoint> {
        BoundaryPoint::new(model, &self.coords)
    }
}

#[inline]
pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum()
}

#[inline]
fn diff_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Hermitian product `⟨a, b⟩ = Σ a_k·conj(b_k)` of interleaved complex vectors.
#[inline]
fn hermitian(a: &[f64], b: &[f64]) -> Complex64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (ac, bc) in a.chunks_exact(2).zip(b.chunks_exact(2)) {
        re += ac[0] * bc[0] + ac[1] * bc[1];
        im += ac[1] * bc[0] - ac[0] * bc[1];
    }
    Complex64::new(re, im)
}

/// `|a|²|b|² − |⟨a,b⟩|²` written as a sum of squares (Lagrange identity).
#[inline]
fn lagrange_defect(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() / 2;
    let mut acc = 0.0;
    for j in 0..n {
        let aj = Complex64::new(a[2 * j], a[2 * j + 1]);
        let bj = Complex64::new(b[2 * j], b[2 * j + 1]);
        for k in (j + 1)..n {
            let ak = Complex64::new(a[2 * k], a[2 * k + 1]);
            let bk = Complex64::new(b[2 * k], b[2 * k + 1]);
            acc += (aj * bk - ak * bj).norm_sqr();
        }
    }
    acc
}

/// Distance on raw coordinates of a model; no validation.
///
/// With `num = |φ_x(y)|²·D` and `p = (1−|x|²)(1−|y|²)` one has
/// `1 − |φ_x(y)|² = p/(num + p)`, so the distance
/// `log((1+r)/(1−r)) = 2·log(1+r) + log(1 + num/p)` is evaluated without
/// cancellation for both nearby and far-apart points.
#[inline]
pub(crate) fn dist_raw(model: Model, x: &[f64], y: &[f64]) -> f64 {
    let mut num = diff_sq(x, y);
    if model.is_hermitian() && x.len() > 2 {
        num = (num - lagrange_defect(x, y)).max(0.0);
    }
    let p = (1.0 - norm_sq(x)) * (1.0 - norm_sq(y));
    let r = (num / (num + p)).sqrt();
    2.0 * r.ln_1p() + (num / p).ln_1p()
}

/// Distance from the origin, `log((1+|x|)/(1−|x|))`.
#[inline]
pub(crate) fn dist_origin_raw(x: &[f64]) -> f64 {
    let r = norm_sq(x).sqrt();
    2.0 * r.atanh()
}

fn check_model(model: Model, got: Model, what: &str) -> Result<()> {
    if model != got {
        return Err(Error::Usage(format!("{what} belongs to {got}, expected {model}")));
    }
    Ok(())
}

/// Hyperbolic distance `d(x, y)`.
pub fn dist(model: Model, x: &Point, y: &Point) -> Result<f64> {
    check_model(model, x.model, "first point")?;
    check_model(model, y.model, "second point")?;
    Ok(dist_raw(model, &x.coords, &y.coords))
}

/// The involutive isometry exchanging `w` and the origin.
///
/// Complex models use `φ_w`, real balls use `ψ_a`; `φ_0(z) = −z`.
pub fn involution(model: Model, w: &Point, x: &Point) -> Result<Point> {
    check_model(model, w.model, "center")?;
    check_model(model, x.model, "point")?;
    Ok(Point::from_raw(model, involution_raw(model, &w.coords, &x.coords)))
}

pub(crate) fn involution_raw(model: Model, w: &[f64], x: &[f64]) -> Coords {
    let w2 = norm_sq(w);
    if model.is_hermitian() {
        if w2 == 0.0 {
            return x.iter().map(|c| -c).collect();
        }
        let zw = hermitian(x, w);
        let scale = zw / w2;
        let s = (1.0 - w2).sqrt();
        let denom = Complex64::new(1.0, 0.0) - zw;
        let mut out = Coords::with_capacity(x.len());
        for (wc, xc) in w.chunks_exact(2).zip(x.chunks_exact(2)) {
            let wk = Complex64::new(wc[0], wc[1]);
            let xk = Complex64::new(xc[0], xc[1]);
            let proj = scale * wk;
            let v = (wk - proj - s * (xk - proj)) / denom;
            out.push(v.re);
            out.push(v.im);
        }
        out
    } else {
        let d2 = diff_sq(x, w);
        let q = 1.0 - w2;
        let denom = d2 + q * (1.0 - norm_sq(x));
        w.iter().zip(x).map(|(a, b)| (a * d2 + q * (a - b)) / denom).collect()
    }
}

/// `log A(x)` where `B_ξ(x, y) = log A(x) − log A(y)`.
#[inline]
fn horo_log(model: Model, xi: &[f64], x: &[f64]) -> f64 {
    let gap =
        if model.is_hermitian() { (Complex64::new(1.0, 0.0) - hermitian(x, xi)).norm_sqr() } else { diff_sq(x, xi) };
    gap.ln() - (1.0 - norm_sq(x)).ln()
}

/// Busemann cocycle `B_ξ(x, y)` from the closed formulas.
///
/// Complex models: `log[(1−|y|²)|1−⟨x,ξ⟩|² / ((1−|x|²)|1−⟨y,ξ⟩|²)]`.
/// Real balls: `log[(|x−ξ|²/(1−|x|²)) / (|y−ξ|²/(1−|y|²))]`.
pub fn busemann(model: Model, xi: &BoundaryPoint, x: &Point, y: &Point) -> Result<f64> {
    check_model(model, xi.model, "boundary point")?;
    check_model(model, x.model, "first point")?;
    check_model(model, y.model, "second point")?;
    Ok(horo_log(model, &xi.coords, &x.coords) - horo_log(model, &xi.coords, &y.coords))
}

/// Poisson kernel of the model: `P`, `P^b` or `P^h`.
pub fn poisson_kernel(model: Model, x: &Point, xi: &BoundaryPoint) -> Result<f64> {
    check_model(model, xi.model, "boundary point")?;
    check_model(model, x.model, "point")?;
    Ok(poisson_kernel_raw(model, &x.coords, &xi.coords))
}

#[inline]
pub(crate) fn poisson_kernel_raw(model: Model, x: &[f64], xi: &[f64]) -> f64 {
    let gap =
        if model.is_hermitian() { (Complex64::new(1.0, 0.0) - hermitian(x, xi)).norm_sqr() } else { diff_sq(x, xi) };
    let base = (1.0 - norm_sq(x)) / gap;
    match model.kind {
        ModelKind::PoincareDisk => base,
        _ => base.powf(model.entropy()),
    }
}

/// Density of `μ_M` against Lebesgue measure.
pub fn volume_density(model: Model, x: &Point) -> Result<f64> {
    check_model(model, x.model, "point")?;
    Ok((1.0 - x.norm_sq()).powi(-model.density_exponent()))
}

/// Surface area of the unit sphere in `ℝⁿ`.
pub fn unit_sphere_area(n: usize) -> f64 {
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * unit_sphere_area(n - 2) / (n - 2) as f64,
    }
}

fn ln_sinh(x: f64) -> f64 {
    if x > 20.0 {
        x - std::f64::consts::LN_2 + (-(-2.0 * x).exp()).ln_1p()
    } else {
        x.sinh().ln()
    }
}

fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a - std::f64::consts::LN_2 + (-2.0 * a).exp().ln_1p()
}

/// Logarithm of `d/dr μ(B(o, r))` at geodesic radius `u > 0`.
///
/// In geodesic polar coordinates `|x| = tanh(u/2)`, so
/// `dμ = (ω_n/2)·sinh^{n−1}(u/2)·cosh^{2k−1−n}(u/2) du dσ`.
pub fn log_radial_density(model: Model, u: f64) -> f64 {
    let n = model.real_dim() as f64;
    let k = model.density_exponent() as f64;
    let half = 0.5 * u;
    (0.5 * unit_sphere_area(model.real_dim())).ln() + (n - 1.0) * ln_sinh(half) + (2.0 * k - 1.0 - n) * ln_cosh(half)
}

/// `d/dr μ(B(o, r))` at `r = u`.
pub fn radial_density(model: Model, u: f64) -> f64 {
    if u <= 0.0 {
        return if model.real_dim() == 1 { 0.5 * unit_sphere_area(1) } else { 0.0 };
    }
    log_radial_density(model, u).exp()
}

/// `μ_M(B(o, r))`.
///
/// The disk uses `π sinh²(r/2)`; other models integrate the radial density
/// adaptively in geodesic radius, to relative accuracy 1e−13.
pub fn ball_volume(model: Model, r: f64) -> Result<f64> {
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::Usage(format!("ball radius must be finite and nonnegative, got {r}")));
    }
    if r == 0.0 {
        return Ok(0.0);
    }
    if model.kind == ModelKind::PoincareDisk {
        let s = (0.5 * r).sinh();
        return Ok(PI * s * s);
    }
    let res = integrate(|u| radial_density(model, u), &[0.0, r], Tolerance::new(1e-300, 1e-13), MAX_EVALS)?;
    Ok(res.value)
}

/// Geodesic radius `d(o, x)` of a point.
pub fn geodesic_radius(x: &Point) -> f64 {
    dist_origin_raw(&x.coords)
}

/// Euclidean norm of a point at geodesic radius `u`.
pub fn euclidean_radius(u: f64) -> f64 {
    (0.5 * u).tanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn entropies() {
        assert_eq!(Model::DISK.entropy(), 1.0);
        assert_eq!(Model::complex_ball(3).unwrap().entropy(), 3.0);
        assert_eq!(Model::real_ball(4).unwrap().entropy(), 3.0);
        assert!(Model::complex_ball(0).is_err());
        assert!(Model::real_ball(1).is_err());
    }

    #[test]
    fn model_round_trips_through_text() {
        for m in [Model::DISK, Model::complex_ball(2).unwrap(), Model::real_ball(3).unwrap()] {
            assert_eq!(m.to_string().parse::<Model>().unwrap(), m);
        }
        assert!("sphere:2".parse::<Model>().is_err());
    }

    #[test]
    fn rejects_points_on_or_near_the_boundary() {
        assert!(Point::disk(c(1.0, 0.0)).is_err());
        assert!(Point::disk(c(1.0 - 1e-15, 0.0)).is_err());
        assert!(Point::disk(c(1.0 - 1e-13, 0.0)).is_ok());
        assert!(Point::new(Model::DISK, &[0.1]).is_err());
    }

    #[test]
    fn disk_distances() {
        let o = Point::origin(Model::DISK);
        let half = Point::disk(c(0.5, 0.0)).unwrap();
        assert!((dist(Model::DISK, &o, &half).unwrap() - 3f64.ln()).abs() < 1e-15);
        assert_eq!(dist(Model::DISK, &half, &half).unwrap(), 0.0);
    }

    #[test]
    fn disk_distance_matches_line_element_integral() {
        // Geodesic through 0.3 and 0.5i: map 0.3 to the origin, the geodesic
        // becomes a diameter, and ds = 2|dz|/(1−|z|²) integrates to
        // 2·atanh(|φ(0.5i)|). Here we integrate the line element directly.
        let a = c(0.3, 0.0);
        let b = c(0.0, 0.5);
        let phi = |z: Complex64| (a - z) / (c(1.0, 0.0) - a.conj() * z);
        let end = phi(b).norm();
        let rule = crate::numeric::quad::GaussLegendre::new(64);
        let arc = rule.integrate(0.0, end, |t| 2.0 / (1.0 - t * t));
        let x = Point::disk(a).unwrap();
        let y = Point::disk(b).unwrap();
        let d = dist(Model::DISK, &x, &y).unwrap();
        assert!((d - arc).abs() < 1e-12, "{d} vs {arc}");
        assert!((d - 1.3150).abs() < 2e-4);
    }

    #[test]
    fn involution_fixed_identities_complex_ball() {
        let m = Model::complex_ball(2).unwrap();
        let w = Point::from_complex(m, &[c(0.3, -0.1), c(0.2, 0.4)]).unwrap();
        let o = Point::origin(m);
        let img = involution(m, &w, &o).unwrap();
        for (a, b) in img.coords().iter().zip(w.coords()) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(involution(m, &w, &w).unwrap().norm() < 1e-15);
        let z = Point::from_complex(m, &[c(0.1, 0.2), c(-0.3, 0.05)]).unwrap();
        let neg = involution(m, &o, &z).unwrap();
        for (a, b) in neg.coords().iter().zip(z.coords()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn real_ball_involution_value() {
        // ψ_a(x) for a = (0.2,0,0), x = (0,0.3,0): |x−a|² = 0.13, 1−|a|² = 0.96,
        // 1−|x|² = 0.91, denominator 0.13 + 0.8736 = 1.0036.
        let m = Model::real_ball(3).unwrap();
        let a = Point::new(m, &[0.2, 0.0, 0.0]).unwrap();
        let x = Point::new(m, &[0.0, 0.3, 0.0]).unwrap();
        let y = involution(m, &a, &x).unwrap();
        let want = [(0.2 * 0.13 + 0.96 * 0.2) / 1.0036, (0.96 * -0.3) / 1.0036, 0.0];
        for (g, w) in y.coords().iter().zip(want) {
            assert!((g - w).abs() < 1e-15);
        }
        let back = involution(m, &a, &y).unwrap();
        for (g, w) in back.coords().iter().zip(x.coords()) {
            assert!((g - w).abs() < 1e-15);
        }
        assert!((dist(m, &a, &y).unwrap() - dist(m, &Point::origin(m), &x).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn busemann_example() {
        let m = Model::real_ball(2).unwrap();
        let xi = BoundaryPoint::new(m, &[1.0, 0.0]).unwrap();
        let x = Point::new(m, &[0.5, 0.0]).unwrap();
        let o = Point::origin(m);
        let b = busemann(m, &xi, &x, &o).unwrap();
        assert!((b + 3f64.ln()).abs() < 1e-15);
        assert_eq!(busemann(m, &xi, &o, &o).unwrap(), 0.0);
    }

    #[test]
    fn poisson_kernel_examples() {
        let one = BoundaryPoint::from_angle(0.0);
        let half = Point::disk(c(0.5, 0.0)).unwrap();
        assert!((poisson_kernel(Model::DISK, &half, &one).unwrap() - 3.0).abs() < 1e-14);
        assert_eq!(poisson_kernel(Model::DISK, &Point::origin(Model::DISK), &one).unwrap(), 1.0);

        let m = Model::complex_ball(2).unwrap();
        let w = Point::from_complex(m, &[c(0.3, 0.0), c(0.0, 0.1)]).unwrap();
        let zeta = BoundaryPoint::new(m, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let p = poisson_kernel(m, &w, &zeta).unwrap();
        // (1 − 0.1)² / |1 − 0.3|⁴
        let want = 0.9f64.powi(2) / 0.7f64.powi(4);
        assert!((p - want).abs() < 1e-13 * want);
        let b = busemann(m, &zeta, &w, &Point::origin(m)).unwrap();
        assert!((p - (-2.0 * b).exp()).abs() < 1e-12 * p);
    }

    #[test]
    fn volume_density_examples() {
        let d = volume_density(Model::DISK, &Point::disk(c(0.5, 0.0)).unwrap()).unwrap();
        assert!((d - 1.0 / 0.5625).abs() < 1e-14);
        let m = Model::real_ball(3).unwrap();
        let v = volume_density(m, &Point::new(m, &[0.0, 0.5, 0.0]).unwrap()).unwrap();
        assert!((v - 1.0 / 0.75f64.powi(3)).abs() < 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(4) - 2.0 * PI * PI).abs() < 1e-13);
    }

    /// Oracle: 2π∫₀^{tanh(r/2)} t(1−t²)^{−2} dt in the Euclidean radius.
    fn disk_volume_oracle(r: f64) -> f64 {
        let t = (0.5 * r).tanh();
        let rule = crate::numeric::quad::GaussLegendre::new(64);
        2.0 * PI * rule.integrate(0.0, t, |s| s / (1.0 - s * s).powi(2))
    }

    #[test]
    fn ball_volume_disk() {
        assert_eq!(ball_volume(Model::DISK, 0.0).unwrap(), 0.0);
        let v = ball_volume(Model::DISK, 2.0).unwrap();
        assert!((v - disk_volume_oracle(2.0)).abs() < 1e-10);
        assert!((v - 4.3388).abs() < 1e-4);
        let big = ball_volume(Model::DISK, 20.0).unwrap() / (PI * 20f64.exp() / 4.0);
        assert!((big - 1.0).abs() < 1e-8);
        assert!(ball_volume(Model::DISK, -1.0).is_err());
    }

    #[test]
    fn ball_volume_quadrature_matches_closed_forms() {
        // Real ball m=2 must reproduce the disk.
        let m2 = Model::real_ball(2).unwrap();
        let c1 = Model::complex_ball(1).unwrap();
        for r in [0.3, 2.0, 7.5] {
            let disk = ball_volume(Model::DISK, r).unwrap();
            assert!((ball_volume(m2, r).unwrap() - disk).abs() < 1e-12 * disk.max(1.0));
            assert!((ball_volume(c1, r).unwrap() - disk).abs() < 1e-12 * disk.max(1.0));
        }
        // Real ball m=3: (π/2)(sinh(2r)/4 − r/2).
        let m3 = Model::real_ball(3).unwrap();
        for r in [0.5f64, 3.0, 9.0] {
            let want = 0.5 * PI * ((2.0 * r).sinh() / 4.0 - r / 2.0);
            let got = ball_volume(m3, r).unwrap();
            assert!((got - want).abs() < 1e-11 * want, "r={r}: {got} vs {want}");
        }
        // Complex ball d: (π^d/d!)·sinh^{2d}(r/2).
        for d in [2usize, 3] {
            let m = Model::complex_ball(d).unwrap();
            let fact: f64 = (1..=d).map(|k| k as f64).product();
            for r in [0.5f64, 4.0] {
                let want = PI.powi(d as i32) / fact * (0.5 * r).sinh().powi(2 * d as i32);
                let got = ball_volume(m, r).unwrap();
                assert!((got - want).abs() < 1e-11 * want, "d={d} r={r}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn mismatched_models_are_usage_errors() {
        let x = Point::origin(Model::DISK);
        let m = Model::real_ball(2).unwrap();
        let y = Point::origin(m);
        assert!(matches!(dist(Model::DISK, &x, &y), Err(Error::Usage(_))));
    }
}
