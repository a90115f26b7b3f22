//! Boundary data, quadrature on the boundary sphere, Poisson extension,
//! kernel vectors and mean-value residuals.
//!
//! Disk boundary functions are finite Fourier series; on higher spheres they
//! are node values of an equal-weight Monte Carlo rule. Kernel vectors are
//! stored in orthonormal coordinates (node values are pre-scaled by
//! `√weight`) so every norm is Euclidean.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::geometry::{
    ball_volume, dist_origin_raw, involution_raw, poisson_kernel_raw, radial_density, BoundaryPoint, Model, Point,
};
use crate::io::{fmt_f64, parse_f64, split_fields};
use crate::numeric::quad::GaussLegendre;
use crate::numeric::rng::replication_rng;
use crate::numeric::stats;
use crate::numeric::sum::{CompensatedSum, ComplexSum};

/// Default number of Monte Carlo nodes on spheres of dimension ≥ 3.
pub const SPHERE_NODES: usize = 4096;

/// Default truncation order of disk Fourier representations.
pub const FOURIER_ORDER: usize = 64;

/// Default truncation order of Hardy-space coefficient vectors.
pub const HARDY_ORDER: usize = 128;

/// Positive weights summing to 1 on boundary nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    model: Model,
    nodes: Vec<BoundaryPoint>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    /// `n` equally spaced nodes on the circle; exact for `e^{ikθ}`, `0 < |k| < n`.
    pub fn circle(n: usize) -> Result<QuadratureRule> {
        if n == 0 {
            return Err(Error::Usage("circle rule needs at least one node".into()));
        }
        let nodes = (0..n).map(|k| BoundaryPoint::from_angle(2.0 * PI * k as f64 / n as f64)).collect();
        Ok(QuadratureRule { model: Model::DISK, nodes, weights: vec![1.0 / n as f64; n] })
    }

    /// `n` seeded uniform nodes on the boundary sphere with equal weights.
    pub fn sphere_monte_carlo(model: Model, n: usize, seed: u64) -> Result<QuadratureRule> {
        if n == 0 {
            return Err(Error::Usage("sphere rule needs at least one node".into()));
        }
        let mut rng = replication_rng(seed, 0);
        let nodes = (0..n).map(|_| random_direction(model, &mut rng)).collect();
        Ok(QuadratureRule { model, nodes, weights: vec![1.0 / n as f64; n] })
    }

    /// Circle rule with 256 nodes for planar models, 4096 seeded nodes otherwise.
    pub fn default_for(model: Model) -> QuadratureRule {
        if model.is_planar() {
            let mut rule = QuadratureRule::circle(256).expect("nonzero size");
            rule.model = model;
            rule.nodes = rule.nodes.iter().map(|n| n.retag(model).expect("same dimension")).collect();
            rule
        } else {
            QuadratureRule::sphere_monte_carlo(model, SPHERE_NODES, 0x5eed).expect("nonzero size")
        }
    }

    /// Arbitrary nodes; weights are normalized to sum 1.
    pub fn new(model: Model, nodes: Vec<BoundaryPoint>, weights: Vec<f64>) -> Result<QuadratureRule> {
        if nodes.is_empty() || nodes.len() != weights.len() {
            return Err(Error::Usage("rule needs equally many nodes and weights, at least one".into()));
        }
        if nodes.iter().any(|n| n.model() != model) {
            return Err(Error::Usage("rule nodes must belong to the rule's model".into()));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::Domain("rule weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        Ok(QuadratureRule { model, nodes, weights: weights.iter().map(|w| w / total).collect() })
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn nodes(&self) -> &[BoundaryPoint] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ wᵢ f(ξᵢ)`.
    pub fn integrate(&self, mut f: impl FnMut(&BoundaryPoint) -> Complex64) -> Complex64 {
        let mut s = ComplexSum::new();
        for (n, w) in self.nodes.iter().zip(&self.weights) {
            s.add(*w * f(n));
        }
        s.value()
    }
}

/// Uniform direction on the unit sphere of `model` (normalized Gaussian vector).
pub(crate) fn random_direction<R: Rng + ?Sized>(model: Model, rng: &mut R) -> BoundaryPoint {
    loop {
        let v: SmallVec<[f64; 4]> = (0..model.real_dim()).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-300 {
            return BoundaryPoint::from_raw(model, v.iter().map(|c| c / n).collect());
        }
    }
}

/// Finite Fourier series `Σ_{|n| ≤ n_max} c_n e^{inθ}` on the circle.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierSeries {
    n_max: usize,
    coeffs: Vec<Complex64>,
}

impl FourierSeries {
    pub fn zeros(n_max: usize) -> FourierSeries {
        FourierSeries { n_max, coeffs: vec![Complex64::new(0.0, 0.0); 2 * n_max + 1] }
    }

    /// Series with the listed `(n, c_n)` terms and truncation order `n_max`.
    pub fn from_terms(n_max: usize, terms: &[(i64, Complex64)]) -> Result<FourierSeries> {
        let mut s = FourierSeries::zeros(n_max);
        for &(n, c) in terms {
            if n.unsigned_abs() as usize > n_max {
                return Err(Error::Usage(format!("Fourier index {n} exceeds n_max = {n_max}")));
            }
            s.coeffs[(n + n_max as i64) as usize] += c;
        }
        Ok(s)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn coeff(&self, n: i64) -> Complex64 {
        if n.unsigned_abs() as usize > self.n_max {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[(n + self.n_max as i64) as usize]
    }

    /// Largest `|n|` with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        (0..=self.n_max)
            .rev()
            .find(|&k| {
                self.coeff(k as i64) != Complex64::new(0.0, 0.0) || self.coeff(-(k as i64)) != Complex64::new(0.0, 0.0)
            })
            .unwrap_or(0)
    }

    /// True when `c_{−n} = conj(c_n)` to `1e−14`, i.e. the function is real.
    pub fn is_real(&self) -> bool {
        (0..=self.n_max as i64).all(|n| (self.coeff(-n) - self.coeff(n).conj()).norm() <= 1e-14)
    }

    pub fn eval_angle(&self, theta: f64) -> Complex64 {
        let d = self.degree() as i64;
        let mut s = ComplexSum::new();
        for n in -d..=d {
            s.add(self.coeff(n) * Complex64::from_polar(1.0, n as f64 * theta));
        }
        s.value()
    }

    /// Harmonic extension `Σ_{n≥0} c_n z^n + Σ_{n<0} c_n z̄^{|n|}`.
    pub fn extend(&self, z: Complex64) -> Complex64 {
        let d = self.degree();
        let mut s = ComplexSum::new();
        s.add(self.coeff(0));
        let mut pz = Complex64::new(1.0, 0.0);
        let mut pzbar = Complex64::new(1.0, 0.0);
        for n in 1..=d {
            pz *= z;
            pzbar *= z.conj();
            s.add(self.coeff(n as i64) * pz);
            s.add(self.coeff(-(n as i64)) * pzbar);
        }
        s.value()
    }
}

/// A square-integrable function on the boundary sphere.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryFunction {
    /// Disk data as a finite Fourier series.
    Fourier(FourierSeries),
    /// Values at the nodes of a [`QuadratureRule`], in node order.
    Nodes(Vec<Complex64>),
}

impl BoundaryFunction {
    pub fn constant(c: f64) -> BoundaryFunction {
        BoundaryFunction::Fourier(FourierSeries::from_terms(0, &[(0, Complex64::new(c, 0.0))]).expect("index 0"))
    }

    /// Samples `f` at the rule's nodes.
    pub fn from_fn(rule: &QuadratureRule, f: impl Fn(&BoundaryPoint) -> Complex64) -> BoundaryFunction {
        BoundaryFunction::Nodes(rule.nodes.iter().map(f).collect())
    }

    fn node_values(&self, rule: &QuadratureRule) -> Result<Vec<Complex64>> {
        match self {
            BoundaryFunction::Nodes(v) => {
                if v.len() != rule.len() {
                    return Err(Error::Usage(format!(
                        "boundary function has {} node values, rule has {} nodes",
                        v.len(),
                        rule.len()
                    )));
                }
                Ok(v.clone())
            }
            BoundaryFunction::Fourier(s) => {
                if !rule.model.is_planar() {
                    return Err(Error::Usage(format!("Fourier data cannot live on the {} boundary", rule.model)));
                }
                Ok(rule.nodes.iter().map(|n| s.eval_angle(n.angle())).collect())
            }
        }
    }

    /// Writes `n,re,im` rows (Fourier) or `x1..,re,im` rows (nodes).
    pub fn write_csv<W: Write>(&self, rule: Option<&QuadratureRule>, mut w: W) -> Result<()> {
        match self {
            BoundaryFunction::Fourier(s) => {
                writeln!(w, "n,re,im")?;
                for n in -(s.n_max as i64)..=(s.n_max as i64) {
                    let c = s.coeff(n);
                    writeln!(w, "{n},{},{}", fmt_f64(c.re), fmt_f64(c.im))?;
                }
            }
            BoundaryFunction::Nodes(v) => {
                let rule = rule.ok_or_else(|| Error::Usage("node data needs its rule to be written".into()))?;
                let vals = self.node_values(rule)?;
                let dim = rule.model.real_dim();
                let head: Vec<String> = (1..=dim).map(|k| format!("x{k}")).collect();
                writeln!(w, "{},re,im", head.join(","))?;
                for (node, c) in rule.nodes.iter().zip(&vals) {
                    let coords: Vec<String> = node.coords().iter().map(|x| fmt_f64(*x)).collect();
                    writeln!(w, "{},{},{}", coords.join(","), fmt_f64(c.re), fmt_f64(c.im))?;
                }
                let _ = v;
            }
        }
        Ok(())
    }

    /// Reads either CSV layout; node files yield an equal-weight rule on their nodes.
    pub fn read_csv<R: BufRead>(model: Model, r: R) -> Result<(BoundaryFunction, Option<QuadratureRule>)> {
        let mut lines =
            r.lines().filter(|l| l.as_ref().map(|s| !s.trim().is_empty() && !s.starts_with('#')).unwrap_or(true));
        let header = lines.next().ok_or_else(|| Error::Parse("empty boundary file".into()))??;
        let cols = split_fields(&header);
        if cols.first() == Some(&"n") {
            let mut terms = Vec::new();
            for line in lines {
                let line = line?;
                let f = split_fields(&line);
                if f.len() != 3 {
                    return Err(Error::Parse(format!("expected n,re,im: `{line}`")));
                }
                let n: i64 = f[0].parse().map_err(|_| Error::Parse(format!("bad index `{}`", f[0])))?;
                terms.push((n, Complex64::new(parse_f64(f[1], "re")?, parse_f64(f[2], "im")?)));
            }
            let n_max = terms.iter().map(|(n, _)| n.unsigned_abs() as usize).max().unwrap_or(0);
            Ok((BoundaryFunction::Fourier(FourierSeries::from_terms(n_max, &terms)?), None))
        } else {
            let dim = model.real_dim();
            if cols.len() != dim + 2 {
                return Err(Error::Parse(format!("expected {} coordinate columns plus re,im", dim)));
            }
            let mut nodes = Vec::new();
            let mut vals = Vec::new();
            for line in lines {
                let line = line?;
                let f = split_fields(&line);
                if f.len() != dim + 2 {
                    return Err(Error::Parse(format!("wrong field count: `{line}`")));
                }
                let coords: Vec<f64> = f[..dim].iter().map(|s| parse_f64(s, "coordinate")).collect::<Result<_>>()?;
                nodes.push(BoundaryPoint::new(model, &coords)?);
                vals.push(Complex64::new(parse_f64(f[dim], "re")?, parse_f64(f[dim + 1], "im")?));
            }
            let n = nodes.len();
            let rule = QuadratureRule::new(model, nodes, vec![1.0; n])?;
            Ok((BoundaryFunction::Nodes(vals), Some(rule)))
        }
    }
}

fn check_rule_point(rule: &QuadratureRule, x: &Point) -> Result<()> {
    if rule.model != x.model() {
        return Err(Error::Usage(format!("point in {} but rule on {}", x.model(), rule.model)));
    }
    Ok(())
}

/// Poisson extension `P[g](x) = ∫ P(x, ξ) g(ξ) dσ(ξ)`.
///
/// Fourier data is extended exactly through the kernel's Fourier series;
/// node data uses the rule.
pub fn poisson_extend(g: &BoundaryFunction, x: &Point, rule: &QuadratureRule) -> Result<Complex64> {
    check_rule_point(rule, x)?;
    match g {
        BoundaryFunction::Fourier(s) => {
            if !rule.model.is_planar() {
                return Err(Error::Usage(format!("Fourier data cannot live on the {} boundary", rule.model)));
            }
            Ok(s.extend(x.to_complex()))
        }
        BoundaryFunction::Nodes(v) => {
            if v.len() != rule.len() {
                return Err(Error::Usage("node values do not match the rule".into()));
            }
            let mut s = ComplexSum::new();
            for ((node, w), val) in rule.nodes.iter().zip(&rule.weights).zip(v) {
                s.add(*val * (*w * poisson_kernel_raw(rule.model, x.coords(), node.coords())));
            }
            Ok(s.value())
        }
    }
}

/// `⟨f, g⟩ = ∫ f·conj(g) dσ`.
pub fn l2_inner(f: &BoundaryFunction, g: &BoundaryFunction, rule: &QuadratureRule) -> Result<Complex64> {
    if let (BoundaryFunction::Fourier(a), BoundaryFunction::Fourier(b)) = (f, g) {
        if !rule.model.is_planar() {
            return Err(Error::Usage(format!("Fourier data cannot live on the {} boundary", rule.model)));
        }
        let n = a.n_max.min(b.n_max) as i64;
        return Ok((-n..=n).map(|k| a.coeff(k) * b.coeff(k).conj()).collect::<ComplexSum>().value());
    }
    let fv = f.node_values(rule)?;
    let gv = g.node_values(rule)?;
    Ok(fv.iter().zip(&gv).zip(&rule.weights).map(|((a, b), w)| *w * a * b.conj()).collect::<ComplexSum>().value())
}

/// `∫ P(x, ξ)² dσ(ξ)` by the rule.
pub fn kernel_l2_norm_sq(model: Model, x: &Point, rule: &QuadratureRule) -> Result<f64> {
    if x.model() != model {
        return Err(Error::Usage(format!("point in {} but model {}", x.model(), model)));
    }
    check_rule_point(rule, x)?;
    Ok(rule
        .nodes
        .iter()
        .zip(&rule.weights)
        .map(|(n, w)| {
            let p = poisson_kernel_raw(model, x.coords(), n.coords());
            w * p * p
        })
        .collect::<CompensatedSum>()
        .value())
}

/// `‖P_x‖² / e^{h·d(o,x)}`: the constant in the kernel growth bound at `x`.
pub fn kernel_growth_constant(model: Model, x: &Point, norm_sq: f64) -> f64 {
    norm_sq / (model.entropy() * dist_origin_raw(x.coords())).exp()
}

/// Hilbert space carrying a [`KernelVector`], in orthonormal coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelSpace {
    /// `L²(𝕋)`, coordinates `c_n`, `−n_max ≤ n ≤ n_max`.
    CircleFourier { n_max: usize },
    /// Hardy space `H²`, coordinates of `zⁿ`, `0 ≤ n ≤ n_max`.
    Hardy { n_max: usize },
    /// Bergman space `A²`, coordinates of `√((n+1)/π)·zⁿ`.
    Bergman { n_max: usize },
    /// `L²(σ)` on a rule with `len` nodes, coordinates `√wᵢ·v(ξᵢ)`.
    Nodes { len: usize },
}

impl KernelSpace {
    pub fn len(&self) -> usize {
        match *self {
            KernelSpace::CircleFourier { n_max } => 2 * n_max + 1,
            KernelSpace::Hardy { n_max } | KernelSpace::Bergman { n_max } => n_max + 1,
            KernelSpace::Nodes { len } => len,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Truncated coordinates of a kernel function or of a weighted sum of them.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelVector {
    space: KernelSpace,
    coeffs: Vec<Complex64>,
}

impl KernelVector {
    pub fn zeros(space: KernelSpace) -> KernelVector {
        KernelVector { space, coeffs: vec![Complex64::new(0.0, 0.0); space.len()] }
    }

    /// Disk Poisson kernel `P_x`: `c_n = x̄ⁿ`, `c_{−n} = xⁿ`.
    pub fn poisson(x: Complex64, n_max: usize) -> KernelVector {
        let mut v = KernelVector::zeros(KernelSpace::CircleFourier { n_max });
        v.add_poisson(1.0, x);
        v
    }

    /// Szegő kernel `S_x(w) = 1/(1 − x̄w)`: coefficients `x̄ⁿ`.
    pub fn szego(x: Complex64, n_max: usize) -> KernelVector {
        let mut v = KernelVector::zeros(KernelSpace::Hardy { n_max });
        v.add_szego(1.0, x);
        v
    }

    /// Bergman kernel `K^x(z) = 1/(π(1 − z x̄)²)` in the orthonormal monomial basis.
    pub fn bergman(x: Complex64, n_max: usize) -> KernelVector {
        let mut v = KernelVector::zeros(KernelSpace::Bergman { n_max });
        let mut p = Complex64::new(1.0, 0.0);
        for (n, c) in v.coeffs.iter_mut().enumerate() {
            *c = ((n as f64 + 1.0) / PI).sqrt() * p;
            p *= x.conj();
        }
        v
    }

    /// `P_x` sampled at the rule nodes.
    pub fn poisson_nodes(model: Model, x: &Point, rule: &QuadratureRule) -> Result<KernelVector> {
        check_rule_point(rule, x)?;
        if x.model() != model {
            return Err(Error::Usage("point and model disagree".into()));
        }
        let mut v = KernelVector::zeros(KernelSpace::Nodes { len: rule.len() });
        v.add_poisson_nodes(1.0, x.coords(), rule);
        Ok(v)
    }

    pub fn space(&self) -> KernelSpace {
        self.space
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `e^{inθ}` (circle) or `zⁿ` (Hardy/Bergman); node index otherwise.
    pub fn coeff(&self, n: i64) -> Complex64 {
        let idx = match self.space {
            KernelSpace::CircleFourier { n_max } => n + n_max as i64,
            _ => n,
        };
        if idx < 0 || idx as usize >= self.coeffs.len() {
            return Complex64::new(0.0, 0.0);
        }
        self.coeffs[idx as usize]
    }

    pub(crate) fn add_poisson(&mut self, weight: f64, x: Complex64) {
        let KernelSpace::CircleFourier { n_max } = self.space else { panic!("add_poisson on {:?}", self.space) };
        self.coeffs[n_max] += weight;
        let mut p = Complex64::new(weight, 0.0);
        for n in 1..=n_max {
            p *= x;
            // p = weight·xⁿ
            self.coeffs[n_max + n] += p.conj();
            self.coeffs[n_max - n] += p;
        }
    }

    pub(crate) fn add_szego(&mut self, weight: f64, x: Complex64) {
        let mut p = Complex64::new(weight, 0.0);
        for c in self.coeffs.iter_mut() {
            *c += p;
            p *= x.conj();
        }
    }

    pub(crate) fn add_poisson_nodes(&mut self, weight: f64, x: &[f64], rule: &QuadratureRule) {
        for ((c, node), w) in self.coeffs.iter_mut().zip(&rule.nodes).zip(&rule.weights) {
            *c += weight * w.sqrt() * poisson_kernel_raw(rule.model, x, node.coords());
        }
    }

    pub fn scale(&mut self, a: f64) {
        for c in &mut self.coeffs {
            *c *= a;
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).collect::<CompensatedSum>().value()
    }

    pub fn dist_sq(&self, other: &KernelVector) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::Usage("kernel vectors live in different spaces".into()));
        }
        Ok(self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| (a - b).norm_sqr()).collect::<CompensatedSum>().value())
    }

    /// `⟨g, V⟩`: for `V = Σ wₓ P_x` this is `Σ wₓ P[g](x)`.
    pub fn pair(&self, g: &BoundaryFunction, rule: &QuadratureRule) -> Result<Complex64> {
        match (self.space, g) {
            (KernelSpace::CircleFourier { n_max }, BoundaryFunction::Fourier(s)) => {
                let n = n_max.min(s.n_max) as i64;
                Ok((-n..=n).map(|k| s.coeff(k) * self.coeff(k).conj()).collect::<ComplexSum>().value())
            }
            (KernelSpace::Nodes { len }, _) => {
                if len != rule.len() {
                    return Err(Error::Usage("kernel vector and rule sizes differ".into()));
                }
                let vals = g.node_values(rule)?;
                Ok(vals
                    .iter()
                    .zip(&self.coeffs)
                    .zip(&rule.weights)
                    .map(|((v, c), w)| w.sqrt() * v * c.conj())
                    .collect::<ComplexSum>()
                    .value())
            }
            (space, _) => Err(Error::Usage(format!("cannot pair boundary data with a {space:?} vector"))),
        }
    }
}

/// Angular part of an interior quadrature.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngularNodes {
    /// Equally spaced angles (planar models only).
    Uniform(usize),
    /// Seeded uniform directions; the result carries a standard error.
    MonteCarlo { n: usize, seed: u64 },
}

/// Product rule in geodesic polar coordinates about a center.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteriorQuadrature {
    pub radial_nodes: usize,
    pub angular: AngularNodes,
}

impl InteriorQuadrature {
    /// 64 × 128 Gauss–Legendre × uniform on planar models, 64 × 4096 Monte Carlo otherwise.
    pub fn default_for(model: Model) -> InteriorQuadrature {
        let angular = if model.is_planar() {
            AngularNodes::Uniform(128)
        } else {
            AngularNodes::MonteCarlo { n: SPHERE_NODES, seed: 0x5eed }
        };
        InteriorQuadrature { radial_nodes: 64, angular }
    }
}

/// An average with its Monte Carlo standard error (0 for deterministic rules).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Invariant average `(1/μ(B(x₀,r))) ∫_{B(x₀,r)} f dμ`.
///
/// The ball is pulled back to `B(o, r)` by the involution at `x₀`, which
/// preserves `μ`. The normalization uses the same radial rule as the
/// integral, so constants average exactly.
pub fn ball_average(
    model: Model,
    x0: &Point,
    r: f64,
    f: impl Fn(&[f64]) -> f64,
    quad: &InteriorQuadrature,
) -> Result<Estimate> {
    if x0.model() != model {
        return Err(Error::Usage("center and model disagree".into()));
    }
    if !(r > 0.0) || !r.is_finite() {
        return Err(Error::Usage(format!("ball radius must be positive, got {r}")));
    }
    if quad.radial_nodes == 0 {
        return Err(Error::Usage("interior quadrature needs radial nodes".into()));
    }
    let gl = GaussLegendre::new(quad.radial_nodes);
    let radial: Vec<(f64, f64)> =
        gl.mapped(0.0, r).map(|(u, w)| ((0.5 * u).tanh(), w * radial_density(model, u))).collect();
    let mass: f64 = radial.iter().map(|(_, w)| w).sum();
    let line = |dir: &[f64]| -> f64 {
        let mut s = CompensatedSum::new();
        let mut y: SmallVec<[f64; 4]> = SmallVec::from_slice(dir);
        for &(t, w) in &radial {
            for (yc, dc) in y.iter_mut().zip(dir) {
                *yc = t * dc;
            }
            let x = involution_raw(model, x0.coords(), &y);
            s.add(w * f(&x));
        }
        s.value() / mass
    };
    match quad.angular {
        AngularNodes::Uniform(n) => {
            if !model.is_planar() {
                return Err(Error::Usage("uniform angular nodes need a planar model".into()));
            }
            if n == 0 {
                return Err(Error::Usage("interior quadrature needs angular nodes".into()));
            }
            let v: CompensatedSum = (0..n)
                .map(|j| {
                    let th = 2.0 * PI * j as f64 / n as f64;
                    line(&[th.cos(), th.sin()])
                })
                .collect();
            Ok(Estimate { value: v.value() / n as f64, stderr: 0.0 })
        }
        AngularNodes::MonteCarlo { n, seed } => {
            if n < 4 {
                return Err(Error::Usage("Monte Carlo angular rule needs at least four nodes".into()));
            }
            // Antithetic pairs (v, −v) cancel the odd part of the angular profile.
            let mut rng = replication_rng(seed, 0);
            let samples: Vec<f64> = (0..n / 2)
                .map(|_| {
                    let v = random_direction(model, &mut rng);
                    let neg: SmallVec<[f64; 4]> = v.coords().iter().map(|c| -c).collect();
                    0.5 * (line(v.coords()) + line(&neg))
                })
                .collect();
            Ok(Estimate { value: stats::mean(&samples), stderr: stats::standard_error(&samples) })
        }
    }
}

/// Outcome of a mean-value check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MvpResidual {
    /// `|P(x₀, ξ) − ball average|`.
    pub residual: f64,
    pub kernel_value: f64,
    pub average: f64,
    /// Standard error of the average (0 for deterministic rules).
    pub stderr: f64,
}

/// Residual of the invariant mean value property for the Poisson kernel.
pub fn mvp_residual(
    model: Model,
    x0: &Point,
    xi: &BoundaryPoint,
    r: f64,
    quad: &InteriorQuadrature,
) -> Result<MvpResidual> {
    if xi.model() != model {
        return Err(Error::Usage("boundary point and model disagree".into()));
    }
    let kernel_value = poisson_kernel_raw(model, x0.coords(), xi.coords());
    let avg = ball_average(model, x0, r, |x| poisson_kernel_raw(model, x, xi.coords()), quad)?;
    Ok(MvpResidual { residual: (kernel_value - avg.value).abs(), kernel_value, average: avg.value, stderr: avg.stderr })
}

/// `μ(B(o, r))` from the radial rule of `quad`; consistent with [`ball_average`].
pub fn ball_volume_by_rule(model: Model, r: f64, quad: &InteriorQuadrature) -> f64 {
    GaussLegendre::new(quad.radial_nodes).integrate(0.0, r, |u| radial_density(model, u))
}

/// Checks that the rule's ball volume agrees with the adaptive one.
pub fn ball_volume_consistency(model: Model, r: f64, quad: &InteriorQuadrature) -> Result<f64> {
    let exact = ball_volume(model, r)?;
    Ok((ball_volume_by_rule(model, r, quad) - exact).abs() / exact)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn circle_rule_exact_on_monomials() {
        let rule = QuadratureRule::circle(64).unwrap();
        assert!((rule.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        for k in 1..64i32 {
            let v = rule.integrate(|n| Complex64::from_polar(1.0, k as f64 * n.angle()));
            assert!(v.norm() < 1e-13, "k={k}: {v}");
        }
    }

    #[test]
    fn poisson_extend_examples() {
        let rule = QuadratureRule::circle(128).unwrap();
        let one = BoundaryFunction::constant(1.0);
        let x = Point::disk(c(0.3, 0.4)).unwrap();
        assert!((poisson_extend(&one, &x, &rule).unwrap() - 1.0).norm() < 1e-15);
        let zeta = BoundaryFunction::Fourier(FourierSeries::from_terms(4, &[(1, c(1.0, 0.0))]).unwrap());
        let v = poisson_extend(&zeta, &Point::disk(c(0.3, 0.0)).unwrap(), &rule).unwrap();
        assert!((v - 0.3).norm() < 1e-15);
        let g = FourierSeries::from_terms(3, &[(0, c(2.0, 1.0)), (2, c(0.5, 0.0)), (-3, c(0.0, 1.0))]).unwrap();
        let at0 = poisson_extend(&BoundaryFunction::Fourier(g), &Point::origin(Model::DISK), &rule).unwrap();
        assert_eq!(at0, c(2.0, 1.0));
    }

    #[test]
    fn fourier_and_node_extensions_agree() {
        let rule = QuadratureRule::circle(256).unwrap();
        let s =
            FourierSeries::from_terms(5, &[(0, c(1.0, 0.0)), (1, c(0.5, -0.2)), (-1, c(0.5, 0.2)), (5, c(0.1, 0.0))])
                .unwrap();
        let nodes = BoundaryFunction::from_fn(&rule, |n| s.eval_angle(n.angle()));
        let x = Point::disk(c(-0.4, 0.55)).unwrap();
        let a = poisson_extend(&BoundaryFunction::Fourier(s), &x, &rule).unwrap();
        let b = poisson_extend(&nodes, &x, &rule).unwrap();
        assert!((a - b).norm() < 1e-13, "{a} vs {b}");
    }

    #[test]
    fn inner_products() {
        let rule = QuadratureRule::circle(256).unwrap();
        let one = BoundaryFunction::constant(1.0);
        assert!((l2_inner(&one, &one, &rule).unwrap() - 1.0).norm() < 1e-15);
        let z = BoundaryFunction::Fourier(FourierSeries::from_terms(1, &[(1, c(1.0, 0.0))]).unwrap());
        assert!((l2_inner(&z, &z, &rule).unwrap() - 1.0).norm() < 1e-15);
        // ⟨P_{0.5}, P_{0.5}⟩ by node quadrature versus Fourier coefficients.
        let p = BoundaryFunction::from_fn(&rule, |n| c(poisson_kernel_raw(Model::DISK, &[0.5, 0.0], n.coords()), 0.0));
        let v = l2_inner(&p, &p, &rule).unwrap();
        assert!((v.re - 5.0 / 3.0).abs() < 1e-13 && v.im.abs() < 1e-15);
        let fourier = KernelVector::poisson(c(0.5, 0.0), 64).norm_sq();
        assert!((fourier - 5.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn kernel_norm_examples() {
        let rule = QuadratureRule::circle(256).unwrap();
        let o = Point::origin(Model::DISK);
        assert!((kernel_l2_norm_sq(Model::DISK, &o, &rule).unwrap() - 1.0).abs() < 1e-15);
        let x = Point::disk(c(0.5, 0.0)).unwrap();
        let v = kernel_l2_norm_sq(Model::DISK, &x, &rule).unwrap();
        assert!((v - 5.0 / 3.0).abs() < 1e-13);
        // e^{d(0,0.5)} = 3
        assert!((kernel_growth_constant(Model::DISK, &x, v) - 5.0 / 9.0).abs() < 1e-13);
    }

    #[test]
    fn truncated_kernel_norms_increase_to_closed_forms() {
        let x = c(0.6, -0.3);
        let r2 = x.norm_sqr();
        let mut prev = 0.0;
        for n in [4usize, 8, 16, 32, 64, 128] {
            let v = KernelVector::poisson(x, n).norm_sq();
            assert!(v >= prev);
            prev = v;
        }
        assert!((prev - (1.0 + r2) / (1.0 - r2)).abs() < 1e-12);
        assert!((KernelVector::szego(x, 128).norm_sq() - 1.0 / (1.0 - r2)).abs() < 1e-12);
        assert!((KernelVector::bergman(x, 200).norm_sq() - 1.0 / (PI * (1.0 - r2).powi(2))).abs() < 1e-10);
    }

    #[test]
    fn pairing_reproduces_extension_sum() {
        let rule = QuadratureRule::circle(256).unwrap();
        let g =
            FourierSeries::from_terms(64, &[(0, c(1.0, 0.0)), (1, c(1.0, 0.0)), (-1, c(1.0, 0.0)), (2, c(0.0, 0.3))])
                .unwrap();
        let pts = [c(0.1, 0.2), c(-0.5, 0.3), c(0.7, -0.1)];
        let wts = [0.5, 1.25, 2.0];
        let mut v = KernelVector::zeros(KernelSpace::CircleFourier { n_max: 64 });
        let mut direct = c(0.0, 0.0);
        for (p, w) in pts.iter().zip(wts) {
            v.add_poisson(w, *p);
            direct += w * g.extend(*p);
        }
        let paired = v.pair(&BoundaryFunction::Fourier(g), &rule).unwrap();
        assert!((paired - direct).norm() < 1e-13);
    }

    #[test]
    fn mvp_constant_is_exact_and_disk_kernel_residual_small() {
        let q = InteriorQuadrature::default_for(Model::DISK);
        let x0 = Point::disk(c(0.3, -0.2)).unwrap();
        let avg = ball_average(Model::DISK, &x0, 1.5, |_| 1.0, &q).unwrap();
        assert!((avg.value - 1.0).abs() < 1e-15);
        let r =
            mvp_residual(Model::DISK, &Point::origin(Model::DISK), &BoundaryPoint::from_angle(0.0), 1.0, &q).unwrap();
        assert!(r.residual <= 1e-6, "{r:?}");
        assert_eq!(r.stderr, 0.0);
    }

    #[test]
    fn mvp_complex_ball_within_monte_carlo_error() {
        let m = Model::complex_ball(2).unwrap();
        let x0 = Point::from_complex(m, &[c(0.2, 0.0), c(0.0, 0.0)]).unwrap();
        let xi = BoundaryPoint::new(m, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let r = mvp_residual(m, &x0, &xi, 0.8, &InteriorQuadrature::default_for(m)).unwrap();
        assert!(r.stderr > 0.0 && r.stderr < 0.02, "{r:?}");
        assert!(r.residual <= 4.0 * r.stderr, "{r:?}");
    }

    #[test]
    fn radial_mean_value_of_extension() {
        // Radial mean-value check: a weight supported in |x| ≤ 0.6 averages
        // u∘φ_z to u(z)·mass for u the extension of a degree-5 polynomial.
        let rule = QuadratureRule::circle(128).unwrap();
        let s = FourierSeries::from_terms(
            5,
            &[(0, c(0.7, 0.0)), (1, c(0.2, 0.1)), (-2, c(-0.4, 0.3)), (3, c(0.05, 0.0)), (-5, c(0.0, 0.25))],
        )
        .unwrap();
        let g = BoundaryFunction::Fourier(s.clone());
        let z = Point::disk(c(0.35, -0.25)).unwrap();
        let nu = |t: f64| if t <= 0.6 { (0.6 - t) * (1.0 + t * t) } else { 0.0 };
        let gl = GaussLegendre::new(64);
        let mut integral = c(0.0, 0.0);
        let mut mass = 0.0;
        for (t, w) in gl.mapped(0.0, 0.6) {
            for j in 0..128 {
                let th = 2.0 * PI * j as f64 / 128.0;
                let y = [t * th.cos(), t * th.sin()];
                let x = involution_raw(Model::DISK, z.coords(), &y);
                let u = poisson_extend(&g, &Point::new(Model::DISK, &x).unwrap(), &rule).unwrap();
                let dw = w * nu(t) * t * (2.0 * PI / 128.0);
                integral += dw * u;
                mass += dw;
            }
        }
        let want = s.extend(z.to_complex()) * mass;
        assert!((integral - want).norm() <= 1e-6 * want.norm());
    }

    #[test]
    fn csv_round_trip_fourier_and_nodes() {
        let s = FourierSeries::from_terms(2, &[(-2, c(0.1, 0.2)), (1, c(-3.0, 0.5))]).unwrap();
        let g = BoundaryFunction::Fourier(s);
        let mut buf = Vec::new();
        g.write_csv(None, &mut buf).unwrap();
        let (back, rule) = BoundaryFunction::read_csv(Model::DISK, buf.as_slice()).unwrap();
        assert_eq!(back, g);
        assert!(rule.is_none());

        let m = Model::real_ball(3).unwrap();
        let rule = QuadratureRule::sphere_monte_carlo(m, 16, 3).unwrap();
        let nodes = BoundaryFunction::from_fn(&rule, |n| c(n.coords()[2], 0.0));
        let mut buf = Vec::new();
        nodes.write_csv(Some(&rule), &mut buf).unwrap();
        let (back, back_rule) = BoundaryFunction::read_csv(m, buf.as_slice()).unwrap();
        assert_eq!(back, nodes);
        assert_eq!(back_rule.unwrap().len(), 16);
    }

    #[test]
    fn model_mismatch_rejected() {
        let rule = QuadratureRule::circle(8).unwrap();
        let m = Model::real_ball(3).unwrap();
        let x = Point::origin(m);
        assert!(matches!(poisson_extend(&BoundaryFunction::constant(1.0), &x, &rule), Err(Error::Usage(_))));
    }
}
