use num_complex::Complex64;
use proptest::prelude::*;

use psrecon::geometry::{busemann, dist, involution, poisson_kernel, BoundaryPoint, Model, Point};

fn models() -> impl Strategy<Value = Model> {
    prop_oneof![
        Just(Model::DISK),
        Just(Model::complex_ball(2).unwrap()),
        Just(Model::complex_ball(3).unwrap()),
        Just(Model::real_ball(3).unwrap()),
        Just(Model::real_ball(4).unwrap()),
    ]
}

/// Direction vector plus a radius in `[0, max)`.
fn raw(dim: usize, max: f64) -> impl Strategy<Value = (Vec<f64>, f64)> {
    (prop::collection::vec(-1.0..1.0f64, dim), 0.0..max)
}

fn point(model: Model, (v, r): &(Vec<f64>, f64)) -> Option<Point> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < 1e-6 {
        return None;
    }
    Point::new(model, &v.iter().map(|x| r * x / n).collect::<Vec<_>>()).ok()
}

fn boundary(model: Model, v: &[f64]) -> Option<BoundaryPoint> {
    BoundaryPoint::from_direction(model, v).ok()
}

fn norm_diff(a: &Point, b: &Point) -> f64 {
    a.coords().iter().zip(b.coords()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// A model, `n` raw points and a raw boundary direction.
type Case = (Model, Vec<(Vec<f64>, f64)>, Vec<f64>);

fn with_model(n: usize, max: f64) -> impl Strategy<Value = Case> {
    models().prop_flat_map(move |m| {
        let dim = m.real_dim();
        (Just(m), prop::collection::vec(raw(dim, max), n), prop::collection::vec(-1.0..1.0f64, dim))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn involution_is_an_isometric_involution((m, pts, _) in with_model(3, 0.95)) {
        let (Some(w), Some(x), Some(y)) = (point(m, &pts[0]), point(m, &pts[1]), point(m, &pts[2])) else { return Ok(()); };
        let back = involution(m, &w, &involution(m, &w, &x).unwrap()).unwrap();
        prop_assert!(norm_diff(&back, &x) <= 1e-12);
        let d = dist(m, &x, &y).unwrap();
        let moved = dist(m, &involution(m, &w, &x).unwrap(), &involution(m, &w, &y).unwrap()).unwrap();
        prop_assert!((moved - d).abs() <= 1e-10 * d.max(1.0));
        // The involution swaps w and o.
        prop_assert!(involution(m, &w, &w).unwrap().norm() <= 1e-12);
    }

    #[test]
    fn distance_is_a_metric((m, pts, _) in with_model(3, 0.95)) {
        let (Some(x), Some(y), Some(z)) = (point(m, &pts[0]), point(m, &pts[1]), point(m, &pts[2])) else { return Ok(()); };
        let (xy, yx) = (dist(m, &x, &y).unwrap(), dist(m, &y, &x).unwrap());
        prop_assert!(xy >= 0.0);
        prop_assert!((xy - yx).abs() <= 1e-12 * xy.max(1.0));
        prop_assert!(xy <= dist(m, &x, &z).unwrap() + dist(m, &z, &y).unwrap() + 1e-10);
        prop_assert!(dist(m, &x, &x).unwrap() <= 1e-7);
    }

    #[test]
    fn busemann_cocycle_and_kernel((m, pts, xi) in with_model(3, 0.95)) {
        let (Some(x), Some(y), Some(z)) = (point(m, &pts[0]), point(m, &pts[1]), point(m, &pts[2])) else { return Ok(()); };
        let Some(xi) = boundary(m, &xi) else { return Ok(()); };
        let b = |a: &Point, c: &Point| busemann(m, &xi, a, c).unwrap();
        let scale = dist(m, &x, &y).unwrap() + dist(m, &y, &z).unwrap() + 1.0;
        prop_assert!((b(&x, &z) - b(&x, &y) - b(&y, &z)).abs() <= 1e-10 * scale);
        prop_assert!(b(&x, &y).abs() <= dist(m, &x, &y).unwrap() + 1e-10);
        let o = Point::origin(m);
        let k = poisson_kernel(m, &x, &xi).unwrap();
        let e = (-m.entropy() * b(&x, &o)).exp();
        prop_assert!((k - e).abs() <= 1e-12 * e);
    }

    #[test]
    fn disk_parameterizations_agree(a in raw(2, 0.95), b in raw(2, 0.95), t in 0.0..std::f64::consts::TAU) {
        let cb1 = Model::complex_ball(1).unwrap();
        let rb2 = Model::real_ball(2).unwrap();
        let (Some(x), Some(y)) = (point(Model::DISK, &a), point(Model::DISK, &b)) else { return Ok(()); };
        let xi = BoundaryPoint::from_angle(t);
        let d = dist(Model::DISK, &x, &y).unwrap();
        let k = poisson_kernel(Model::DISK, &x, &xi).unwrap();
        let bu = busemann(Model::DISK, &xi, &x, &y).unwrap();
        for m in [cb1, rb2] {
            let (xm, ym, xim) = (x.retag(m).unwrap(), y.retag(m).unwrap(), xi.retag(m).unwrap());
            prop_assert!((dist(m, &xm, &ym).unwrap() - d).abs() <= 1e-10 * d.max(1.0));
            prop_assert!((poisson_kernel(m, &xm, &xim).unwrap() - k).abs() <= 1e-12 * k.max(1.0));
            prop_assert!((busemann(m, &xim, &xm, &ym).unwrap() - bu).abs() <= 1e-10 * d.max(1.0));
        }
        prop_assert_eq!(cb1.entropy(), 1.0);
        prop_assert_eq!(rb2.entropy(), 1.0);
    }

    #[test]
    fn points_outside_the_ball_are_rejected(v in prop::collection::vec(-1.0..1.0f64, 2), r in 1.0..3.0f64) {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(n > 1e-6);
        prop_assert!(Point::new(Model::DISK, &[r * v[0] / n, r * v[1] / n]).is_err());
        prop_assert!(Point::disk(Complex64::new(r, 0.0)).is_err());
    }
}
