//! Deterministic verification suite: geometry invariants, residue
//! identities, mean-value residuals and closed-form cross-checks.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::boundary::{mvp_residual, random_direction, InteriorQuadrature, QuadratureRule};
use crate::error::Result;
use crate::geometry::{
    ball_volume, busemann, dist, involution, poisson_kernel, radial_density, BoundaryPoint, Model, Point,
};
use crate::numeric::quad::{integrate, Tolerance, MAX_EVALS};
use crate::numeric::rng::{replication_rng, Rng as ChaRng};
use crate::psmeasure::harmonic_measure_coeffs;
use crate::reconstruct::{expected_w_s_sum, sigma_bar};
use crate::variance::{
    decay_ratio, failure_ratio, identity_angular, var_hardy_closed, var_hardy_general, GeneralQuad, Identity, QuadSpec,
    RadialWeight, FAILURE_BOUND,
};

/// Check families, selectable by name.
pub const GROUPS: [&str; 5] = ["geometry", "residue", "mvp", "closed-form", "variance"];

/// Random cases per model in the geometry group.
pub const GEOMETRY_CASES: usize = 1000;

/// Random tuples per identity in the residue group.
pub const RESIDUE_TUPLES: usize = 50;

const SEED: u64 = 0x0dd5_eed5;

/// One verification outcome: `pass` iff `error ≤ tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub group: &'static str,
    pub name: String,
    pub error: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<4} {:<12} {:<44} error={:.3e} tol={:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.group,
            self.name,
            self.error,
            self.tolerance
        )
    }
}

/// Suite options.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VerifyOptions {
    /// Group name, or a substring of check names.
    pub filter: Option<String>,
    /// Relative perturbation applied to every closed-form reference value;
    /// any nonzero value of order 1e−3 must make the suite fail.
    pub perturb: f64,
}

struct Suite {
    perturb: f64,
    checks: Vec<Check>,
}

impl Suite {
    fn reference(&self, v: f64) -> f64 {
        v * (1.0 + self.perturb)
    }

    fn push(&mut self, group: &'static str, name: impl Into<String>, error: f64, tolerance: f64) {
        let pass = error <= tolerance;
        self.checks.push(Check { group, name: name.into(), error, tolerance, pass });
    }

    /// Relative error of `value` against a perturbable closed form.
    fn relative(&mut self, group: &'static str, name: impl Into<String>, value: f64, closed: f64, tol: f64) {
        let r = self.reference(closed);
        self.push(group, name, (value - r).abs() / r.abs().max(1e-300), tol);
    }
}

/// Runs the suite and returns every check, passing or not.
pub fn run(opts: &VerifyOptions) -> Result<Vec<Check>> {
    let mut suite = Suite { perturb: opts.perturb, checks: Vec::new() };
    let wanted_group = opts.filter.as_deref().filter(|f| GROUPS.contains(f));
    let run_group = |g: &str| wanted_group.map_or(true, |w| w == g);
    if run_group("geometry") {
        geometry_checks(&mut suite)?;
    }
    if run_group("residue") {
        residue_checks(&mut suite)?;
    }
    if run_group("mvp") {
        mvp_checks(&mut suite)?;
    }
    if run_group("closed-form") {
        closed_form_checks(&mut suite)?;
    }
    if run_group("variance") {
        variance_checks(&mut suite)?;
    }
    let mut checks = suite.checks;
    if let (Some(f), None) = (opts.filter.as_deref(), wanted_group) {
        checks.retain(|c| c.name.contains(f));
    }
    Ok(checks)
}

/// Models exercised by the geometry group.
pub fn geometry_models() -> Vec<Model> {
    vec![
        Model::DISK,
        Model::complex_ball(2).expect("valid"),
        Model::complex_ball(3).expect("valid"),
        Model::real_ball(3).expect("valid"),
        Model::real_ball(4).expect("valid"),
    ]
}

/// Point with Euclidean radius uniform in `[0, 0.95)` and uniform direction.
pub(crate) fn random_point(model: Model, rng: &mut ChaRng) -> Point {
    let dir = random_direction(model, rng);
    let r = 0.95 * rng.random::<f64>();
    let coords: Vec<f64> = dir.coords().iter().map(|c| r * c).collect();
    Point::new(model, &coords).expect("inside the ball")
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn geometry_checks(suite: &mut Suite) -> Result<()> {
    for (mi, model) in geometry_models().into_iter().enumerate() {
        let mut rng = replication_rng(SEED, mi as u64);
        let o = Point::origin(model);
        let h = model.entropy();
        let mut inv2: f64 = 0.0;
        let mut swap: f64 = 0.0;
        let mut sym: f64 = 0.0;
        let mut isometry: f64 = 0.0;
        let mut triangle: f64 = 0.0;
        let mut cocycle: f64 = 0.0;
        let mut kernel: f64 = 0.0;
        for _ in 0..GEOMETRY_CASES {
            let x = random_point(model, &mut rng);
            let y = random_point(model, &mut rng);
            let w = random_point(model, &mut rng);
            let xi = random_direction(model, &mut rng);
            let back = involution(model, &w, &involution(model, &w, &x)?)?;
            inv2 = inv2.max(max_abs_diff(back.coords(), x.coords()));
            swap = swap
                .max(involution(model, &w, &w)?.norm())
                .max(max_abs_diff(involution(model, &w, &o)?.coords(), w.coords()));
            let dxy = dist(model, &x, &y)?;
            sym = sym.max((dxy - dist(model, &y, &x)?).abs() / dxy.max(1.0));
            let moved = dist(model, &involution(model, &w, &x)?, &involution(model, &w, &y)?)?;
            isometry = isometry.max((moved - dxy).abs() / dxy.max(1.0));
            let (dxw, dwy) = (dist(model, &x, &w)?, dist(model, &w, &y)?);
            triangle = triangle.max((dxy - dxw - dwy).max(0.0));
            let b = busemann(model, &xi, &x, &y)? + busemann(model, &xi, &y, &w)? - busemann(model, &xi, &x, &w)?;
            cocycle = cocycle.max(b.abs());
            let p = poisson_kernel(model, &x, &xi)?;
            let e = suite.reference((-h * busemann(model, &xi, &x, &o)?).exp());
            kernel = kernel.max((p - e).abs() / p);
        }
        suite.push("geometry", format!("{model} involution squared"), inv2, 1e-10);
        suite.push("geometry", format!("{model} involution swaps w and o"), swap, 1e-10);
        suite.push("geometry", format!("{model} distance symmetry"), sym, 1e-10);
        suite.push("geometry", format!("{model} involution isometry"), isometry, 1e-10);
        suite.push("geometry", format!("{model} triangle inequality"), triangle, 1e-10);
        suite.push("geometry", format!("{model} busemann cocycle"), cocycle, 1e-10);
        suite.push("geometry", format!("{model} kernel vs busemann"), kernel, 1e-10);
    }
    Ok(())
}

/// Angular nodes for the residue identities; the trapezoid error decays
/// like `0.64^nodes` for moduli up to 0.8.
pub const RESIDUE_ANGLES: usize = 96;

/// Random identity instances with all moduli ≤ 0.8.
pub fn residue_instances(tuples: usize, seed: u64) -> Vec<Identity> {
    let mut rng = replication_rng(seed, 0);
    let mut draw = || Complex64::from_polar(0.8 * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>());
    let mut out = Vec::new();
    for _ in 0..tuples {
        let (a, b, z) = (draw(), draw(), draw());
        out.extend([
            Identity::I2 { z: a, w: b },
            Identity::I9 { z: a, w: b },
            Identity::I3 { eta: a, xi: b, z_o: z },
            Identity::I10 { eta: a, xi: b, z_o: z },
            Identity::I11 { eta: a, xi: b, z_o: z },
            Identity::RepHardy { z: a },
            Identity::Rep { z: a },
        ]);
    }
    out
}

fn residue_checks(suite: &mut Suite) -> Result<()> {
    let mut worst: Vec<(&'static str, f64)> = Vec::new();
    for id in residue_instances(RESIDUE_TUPLES, SEED) {
        let angles = if matches!(id, Identity::RepHardy { .. } | Identity::Rep { .. }) { 256 } else { RESIDUE_ANGLES };
        let mut c = identity_angular(&id, angles)?;
        c.rhs *= 1.0 + suite.perturb;
        let e = c.relative_error();
        match worst.iter_mut().find(|(n, _)| *n == id.name()) {
            Some(w) => w.1 = w.1.max(e),
            None => worst.push((id.name(), e)),
        }
    }
    for (name, e) in worst {
        suite.push("residue", format!("{name} on {RESIDUE_TUPLES} random tuples"), e, 1e-8);
    }
    let zero = Complex64::new(0.0, 0.0);
    let half = Complex64::new(0.5, 0.0);
    // Decimal values are compared to half a unit in their last quoted digit.
    let spots = [
        ("rep-hardy at 0", Identity::RepHardy { z: zero }, 1.0 / PI, 1e-14),
        ("rep-bergman at 0", Identity::Rep { z: zero }, 1.0 / (PI * PI), 1e-14),
        ("I10 at the origin", Identity::I10 { eta: zero, xi: zero, z_o: half }, 1.0 / PI.powi(3), 1e-14),
        ("rep-hardy at 0.5", Identity::RepHardy { z: half }, 0.754512, 5e-7),
        ("rep-bergman at 0.5", Identity::Rep { z: half }, 0.32022, 5e-6),
    ];
    for (name, id, tabulated, half_digit) in spots {
        let c = identity_angular(&id, 256)?;
        let r = suite.reference(c.rhs.re);
        suite.push("residue", format!("{name} tabulated value"), (r - tabulated).abs(), half_digit);
        suite.push("residue", format!("{name} quadrature"), (c.lhs - r).norm() / r, 1e-8);
    }
    Ok(())
}

/// Radius of the mean-value balls.
pub const MVP_RADIUS: f64 = 1.0;

/// Mean-value residuals on the disk (deterministic), `ℂH²` and `ℝH³` (Monte Carlo).
pub fn mvp_cases() -> Result<Vec<(Model, f64, f64)>> {
    let mut out = Vec::new();
    let disk = Model::DISK;
    let x0 = Point::disk(Complex64::new(0.3, 0.2))?;
    let r =
        mvp_residual(disk, &x0, &BoundaryPoint::from_angle(1.0), MVP_RADIUS, &InteriorQuadrature::default_for(disk))?;
    out.push((disk, r.residual, r.stderr));
    let cb = Model::complex_ball(2)?;
    let x0 = Point::new(cb, &[0.3, -0.1, 0.2, 0.1])?;
    let xi = BoundaryPoint::from_direction(cb, &[1.0, 0.5, -0.5, 0.2])?;
    let r = mvp_residual(cb, &x0, &xi, MVP_RADIUS, &InteriorQuadrature::default_for(cb))?;
    out.push((cb, r.residual, r.stderr));
    let rb = Model::real_ball(3)?;
    let x0 = Point::new(rb, &[0.2, 0.3, -0.1])?;
    let xi = BoundaryPoint::from_direction(rb, &[0.0, 1.0, 1.0])?;
    let r = mvp_residual(rb, &x0, &xi, MVP_RADIUS, &InteriorQuadrature::default_for(rb))?;
    out.push((rb, r.residual, r.stderr));
    Ok(out)
}

fn mvp_checks(suite: &mut Suite) -> Result<()> {
    for (model, residual, se) in mvp_cases()? {
        if se == 0.0 {
            suite.push("mvp", format!("{model} mean-value residual"), residual, 1e-6);
        } else {
            suite.push("mvp", format!("{model} mean-value residual / 4 SE"), residual / (4.0 * se), 1.0);
        }
    }
    Ok(())
}

fn closed_form_checks(suite: &mut Suite) -> Result<()> {
    let disk = Model::DISK;
    let o = Point::origin(disk);
    let tol = Tolerance::new(1e-300, 1e-13);
    // Exponential sum by radial quadrature against λπ/(2(s²−1)).
    let s = 2.0;
    let radial =
        integrate(|u| (-s * u).exp() * radial_density(disk, u), &[0.0, 1.0, 4.0, 16.0, 80.0], tol, MAX_EVALS)?.value;
    suite.relative("closed-form", "disk exponential sum s=2", radial, PI / 6.0, 1e-10);
    suite.relative("closed-form", "disk exponential sum closed form", sigma_bar(disk, 1.0, &o, s)?, PI / 6.0, 1e-14);
    let near = 0.001 * sigma_bar(disk, 1.0, &o, 1.001)?;
    suite.push("closed-form", "exponential sum limit (s−1)·σ̄ → π/4", (near - suite.reference(PI / 4.0)).abs(), 1e-3);
    for r in [0.5, 3.0, 8.0] {
        let q = integrate(|u| radial_density(disk, u), &[0.0, r], tol, MAX_EVALS)?.value;
        suite.relative("closed-form", format!("disk ball volume r={r}"), q, PI * (0.5 * r).sinh().powi(2), 1e-12);
        suite.relative(
            "closed-form",
            format!("disk ball volume routine r={r}"),
            ball_volume(disk, r)?,
            PI * (0.5 * r).sinh().powi(2),
            1e-12,
        );
    }
    // GAF first intensity over {|z| < t}: ∫ 2πρ/(π(1−ρ²)²) dρ.
    for t in [0.3, 0.5, 0.7] {
        let q = integrate(|rho| 2.0 * rho / (1.0 - rho * rho).powi(2), &[0.0, t], tol, MAX_EVALS)?.value;
        suite.relative("closed-form", format!("GAF expected count |z|<{t}"), q, t * t / (1.0 - t * t), 1e-12);
    }
    let y = Point::disk(Complex64::new(0.3, 0.4))?;
    let coeffs = harmonic_measure_coeffs(&y, 8)?;
    let rule = QuadratureRule::circle(512)?;
    let mut worst: f64 = 0.0;
    for (n, c) in coeffs.iter().enumerate() {
        let q = rule.integrate(|xi| {
            let b = busemann(disk, xi, &y, &o).expect("same model");
            (-b).exp() * Complex64::from_polar(1.0, -(n as f64) * xi.angle())
        });
        worst = worst.max((q - c * (1.0 + suite.perturb)).norm());
    }
    suite.push("closed-form", "harmonic measure coefficients vs busemann", worst, 1e-10);
    suite.relative(
        "closed-form",
        "expected W_s sum at s=1.5",
        expected_w_s_sum(1.5),
        (1.0 - 0.5f64.sqrt()) / 0.5,
        1e-14,
    );
    Ok(())
}

fn variance_checks(suite: &mut Suite) -> Result<()> {
    let o = Point::origin(Model::DISK);
    let quad = QuadSpec::default();
    let w = RadialWeight::Indicator(0.5);
    let closed = var_hardy_closed(&w, &o, &quad)?;
    let general = var_hardy_general(
        |x| w.eval(x.norm()),
        0.5,
        &GeneralQuad { radial_nodes: 40, angular_nodes: 64, radial_breaks: vec![] },
    )?;
    suite.relative("variance", "Hardy variance: general vs radial route", general, closed, 1e-8);
    suite.relative("variance", "indicator(0.5) failure ratio reference", failure_ratio(&w, &o, &quad)?, 1.104606, 2e-5);
    let mut violation: f64 = 0.0;
    for weight in RadialWeight::failure_family() {
        violation = violation.max(suite.reference(FAILURE_BOUND) - failure_ratio(&weight, &o, &quad)?);
    }
    suite.push("variance", "failure ratio ≥ π²/64 on 14 weights", violation.max(0.0), 0.0);
    let ratios: Vec<f64> = [1.1, 1.01, 1.001].iter().map(|s| decay_ratio(*s, &o, &quad)).collect::<Result<_>>()?;
    let increase = ratios.windows(2).map(|w| (w[1] - w[0]).max(0.0)).fold(0.0, f64::max);
    suite.push("variance", "decay ratio monotone along s ↓ 1", increase, 0.0);
    suite.relative("variance", "decay ratio at s=1.1 reference", ratios[0], 0.253893, 2e-5);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residue_group_passes_and_filters() {
        let checks = run(&VerifyOptions { filter: Some("residue".into()), perturb: 0.0 }).unwrap();
        assert!(!checks.is_empty());
        assert!(checks.iter().all(|c| c.group == "residue"));
        assert!(checks.iter().all(|c| c.pass), "{checks:#?}");
    }

    #[test]
    fn perturbation_is_detected_in_every_group() {
        for g in ["geometry", "residue", "closed-form", "variance"] {
            let checks = run(&VerifyOptions { filter: Some(g.into()), perturb: 1e-3 }).unwrap();
            assert!(checks.iter().any(|c| !c.pass), "group {g} missed the perturbation");
        }
    }

    #[test]
    fn name_filter() {
        let checks = run(&VerifyOptions { filter: Some("ball volume".into()), perturb: 0.0 }).unwrap();
        assert!(checks.len() >= 3 && checks.iter().all(|c| c.name.contains("ball volume") && c.pass));
    }
}
