//! Gauss–Legendre rules and a globally adaptive integrator built on them.

use std::cell::Cell;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Default cap on integrand evaluations for one adaptive integral.
pub const MAX_EVALS: usize = 1 << 20;

/// Cap for nested two-dimensional integrals, counting inner evaluations.
pub const MAX_EVALS_2D: usize = 1 << 26;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Computes an `n`-point rule by Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut deriv = 0.0;
            for _ in 0..100 {
                let (p, dp) = legendre_with_derivative(n, x);
                deriv = dp;
                let step = p / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            let (_, dp) = legendre_with_derivative(n, x);
            if dp.is_finite() {
                deriv = dp;
            }
            let w = 2.0 / ((1.0 - x * x) * deriv * deriv);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Cached rules for the sizes used throughout the crate.
    pub fn cached(n: usize) -> &'static GaussLegendre {
        static R10: OnceLock<GaussLegendre> = OnceLock::new();
        static R16: OnceLock<GaussLegendre> = OnceLock::new();
        static R32: OnceLock<GaussLegendre> = OnceLock::new();
        static R64: OnceLock<GaussLegendre> = OnceLock::new();
        match n {
            10 => R10.get_or_init(|| GaussLegendre::new(10)),
            16 => R16.get_or_init(|| GaussLegendre::new(16)),
            32 => R32.get_or_init(|| GaussLegendre::new(32)),
            64 => R64.get_or_init(|| GaussLegendre::new(64)),
            _ => panic!("no cached Gauss–Legendre rule with {n} nodes"),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped affinely onto `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Fixed-rule approximation of `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let (p, prev) = if n == 1 { (x, 1.0) } else { (p1, p0) };
    let dp = n as f64 * (x * p - prev) / (x * x - 1.0);
    (p, dp)
}

/// Stopping rule `error ≤ max(abs, rel·|value|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
}

impl Tolerance {
    pub const fn new(abs: f64, rel: f64) -> Self {
        Self { abs, rel }
    }

    pub const fn absolute(abs: f64) -> Self {
        Self { abs, rel: 0.0 }
    }

    pub const fn relative(rel: f64) -> Self {
        Self { abs: 0.0, rel }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub error: f64,
    pub evals: usize,
}

const RULE_SIZE: usize = 10;

struct Segment {
    a: f64,
    b: f64,
    coarse: f64,
    left: f64,
    right: f64,
}

impl Segment {
    fn fine(&self) -> f64 {
        self.left + self.right
    }

    fn error(&self) -> f64 {
        (self.fine() - self.coarse).abs()
    }
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error().total_cmp(&other.error())
    }
}

/// Globally adaptive Gauss–Legendre integration of `f` over `[breaks[0], breaks[last]]`.
///
/// Each segment compares the 10-point rule on the whole segment with the
/// rule on its two halves; the segment with the largest discrepancy is
/// bisected until the summed discrepancy meets `tol`. Interior `breaks`
/// should sit on known kinks or jumps of `f`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, breaks: &[f64], tol: Tolerance, max_evals: usize) -> Result<Integral> {
    if breaks.len() < 2 {
        return Err(Error::Usage("integration needs at least two break points".into()));
    }
    if breaks.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Usage(format!("break points must be nondecreasing: {breaks:?}")));
    }
    let rule = GaussLegendre::cached(RULE_SIZE);
    let mut evals = 0usize;
    let mut apply = |a: f64, b: f64, evals: &mut usize| {
        *evals += RULE_SIZE;
        rule.integrate(a, b, &mut f)
    };

    let mut heap = BinaryHeap::new();
    let mut frozen: Vec<Segment> = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        if b == a {
            continue;
        }
        let m = 0.5 * (a + b);
        let coarse = apply(a, b, &mut evals);
        let left = apply(a, m, &mut evals);
        let right = apply(m, b, &mut evals);
        heap.push(Segment { a, b, coarse, left, right });
    }

    let totals = |heap: &BinaryHeap<Segment>, frozen: &[Segment]| {
        heap.iter().chain(frozen.iter()).fold((0.0, 0.0), |(v, e), s| (v + s.fine(), e + s.error()))
    };
    let (mut value, mut error) = totals(&heap, &frozen);
    loop {
        if !value.is_finite() || !error.is_finite() {
            return Err(Error::Quadrature { value, error, evals });
        }
        if error <= tol.target(value) {
            // Running sums drift; confirm with a fresh pass.
            let (v, e) = totals(&heap, &frozen);
            value = v;
            error = e;
            if error <= tol.target(value) {
                return Ok(Integral { value, error, evals });
            }
        }
        let Some(worst) = heap.pop() else {
            return Err(Error::Quadrature { value, error, evals });
        };
        if evals + 4 * RULE_SIZE > max_evals {
            heap.push(worst);
            let (value, error) = totals(&heap, &frozen);
            return Err(Error::Quadrature { value, error, evals });
        }
        let m = 0.5 * (worst.a + worst.b);
        let lm = 0.5 * (worst.a + m);
        let rm = 0.5 * (m + worst.b);
        if !(worst.a < lm && lm < m && m < rm && rm < worst.b) {
            // No longer splittable in floating point.
            frozen.push(worst);
            if heap.is_empty() {
                let (value, error) = totals(&heap, &frozen);
                return Err(Error::Quadrature { value, error, evals });
            }
            continue;
        }
        let left = Segment {
            a: worst.a,
            b: m,
            coarse: worst.left,
            left: apply(worst.a, lm, &mut evals),
            right: apply(lm, m, &mut evals),
        };
        let right = Segment {
            a: m,
            b: worst.b,
            coarse: worst.right,
            left: apply(m, rm, &mut evals),
            right: apply(rm, worst.b, &mut evals),
        };
        value += left.fine() + right.fine() - worst.fine();
        error += left.error() + right.error() - worst.error();
        heap.push(left);
        heap.push(right);
    }
}

/// Nested adaptive integration of `f(x, y)` over a rectangle.
///
/// The inner integral is solved to a tenth of the outer tolerance; the
/// evaluation budget counts inner evaluations.
pub fn integrate_2d<F: Fn(f64, f64) -> f64>(
    f: F,
    x_breaks: &[f64],
    y_breaks: &[f64],
    tol: Tolerance,
    max_evals: usize,
) -> Result<Integral> {
    let used = Cell::new(0usize);
    let failure: Cell<Option<Error>> = Cell::new(None);
    let width = (x_breaks.last().copied().unwrap_or(0.0) - x_breaks.first().copied().unwrap_or(0.0)).abs();
    let inner_tol = Tolerance::new(0.1 * tol.abs / width.max(1e-300), 0.1 * tol.rel);
    let outer = integrate(
        |x| {
            let remaining = max_evals.saturating_sub(used.get());
            match integrate(|y| f(x, y), y_breaks, inner_tol, remaining) {
                Ok(r) => {
                    used.set(used.get() + r.evals);
                    r.value
                }
                Err(e) => {
                    if let Error::Quadrature { evals, .. } = e {
                        used.set(used.get() + evals);
                    }
                    failure.set(Some(e));
                    f64::NAN
                }
            }
        },
        x_breaks,
        tol,
        max_evals,
    );
    if let Some(e) = failure.take() {
        return Err(e);
    }
    let r = outer?;
    Ok(Integral { value: r.value, error: r.error, evals: used.get() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        for n in [1usize, 2, 5, 10, 16, 64] {
            let rule = GaussLegendre::new(n);
            let w: f64 = rule.weights.iter().sum();
            assert!((w - 2.0).abs() < 1e-13, "n={n}: weights sum {w}");
            for deg in 0..(2 * n) {
                let got = rule.integrate(0.0, 1.0, |x| x.powi(deg as i32));
                let want = 1.0 / (deg as f64 + 1.0);
                assert!((got - want).abs() < 1e-13, "n={n} deg={deg}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn nodes_are_symmetric_and_sorted() {
        let rule = GaussLegendre::new(17);
        for i in 0..17 {
            assert!((rule.nodes[i] + rule.nodes[16 - i]).abs() < 1e-15);
        }
        assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} dx = 2
        let r = integrate(|x| 1.0 / x.sqrt(), &[0.0, 1.0], Tolerance::absolute(1e-10), MAX_EVALS).unwrap();
        assert!((r.value - 2.0).abs() < 1e-9, "{r:?}");
    }

    #[test]
    fn adaptive_with_break_at_jump() {
        let r = integrate(|x| if x < 0.3 { 1.0 } else { 0.0 }, &[0.0, 0.3, 1.0], Tolerance::absolute(1e-14), MAX_EVALS)
            .unwrap();
        assert!((r.value - 0.3).abs() < 1e-14);
    }

    #[test]
    fn adaptive_reports_budget_exhaustion() {
        let e = integrate(|x| (1.0 / x).sin() / x, &[1e-12, 1.0], Tolerance::absolute(1e-15), 2000).unwrap_err();
        assert!(matches!(e, Error::Quadrature { .. }));
    }

    #[test]
    fn two_dimensional_gaussian_product() {
        // ∫∫_{[0,1]^2} e^{-x-y} = (1 - e^{-1})^2
        let r = integrate_2d(|x, y| (-x - y).exp(), &[0.0, 1.0], &[0.0, 1.0], Tolerance::new(1e-13, 0.0), MAX_EVALS_2D)
            .unwrap();
        let want = (1.0 - (-1.0f64).exp()).powi(2);
        assert!((r.value - want).abs() < 1e-12);
    }
}
