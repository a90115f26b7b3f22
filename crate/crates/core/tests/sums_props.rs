use num_complex::Complex64;
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use psrecon::geometry::{dist, BoundaryPoint, Model, Point};
use psrecon::processes::Configuration;
use psrecon::psmeasure::{fourier_coeffs, ps_empirical};
use psrecon::reconstruct::{kernel_statistic, ratio_reconstruct, shell_sums, sigma, Basis, TargetFunction};

fn disk_points(max: f64) -> impl Strategy<Value = Vec<Complex64>> {
    prop::collection::vec((0.0..max, 0.0..std::f64::consts::TAU).prop_map(|(r, t)| Complex64::from_polar(r, t)), 1..200)
}

fn conf(points: &[Complex64]) -> Configuration {
    Configuration::from_points(Model::DISK, points.iter().map(|z| Point::disk(*z).unwrap()).collect()).unwrap()
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / a.norm().max(1e-300)
}

fn rel_vec(a: &[Complex64], b: &[Complex64]) -> f64 {
    let scale = a.iter().map(|c| c.norm()).fold(0.0, f64::max).max(1e-300);
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max) / scale
}

fn targets() -> Vec<TargetFunction> {
    vec![TargetFunction::constant(1.0), TargetFunction::KernelPole(BoundaryPoint::from_angle(0.7))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sums_ignore_point_order(
        pts in disk_points(0.999),
        seed in any::<u64>(),
        zr in 0.0..0.6f64,
        s in 1.05..3.0f64,
    ) {
        let a = conf(&pts);
        let mut order: Vec<usize> = (0..pts.len()).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let b = a.permuted(&order).unwrap();
        let z = Point::disk(Complex64::new(zr, 0.1)).unwrap();
        let (sa, sb) = (sigma(&a, &z, s).unwrap(), sigma(&b, &z, s).unwrap());
        prop_assert!((sa - sb).abs() <= 1e-12 * sa);
        for f in targets() {
            let (ra, rb) = (ratio_reconstruct(&a, &z, s, &f).unwrap(), ratio_reconstruct(&b, &z, s, &f).unwrap());
            prop_assert!(rel(ra.numerator, rb.numerator) <= 1e-12);
            prop_assert!(rel_vec(&shell_sums(&a, &z, s, &f).unwrap(), &shell_sums(&b, &z, s, &f).unwrap()) <= 1e-12);
        }
        for basis in [Basis::Hardy(16), Basis::Fourier(16)] {
            let ka = kernel_statistic(&a, &z, s, basis).unwrap();
            let kb = kernel_statistic(&b, &z, s, basis).unwrap();
            prop_assert!(rel_vec(ka.coeffs(), kb.coeffs()) <= 1e-12);
        }
    }

    #[test]
    fn shells_add_up_to_the_direct_sum(pts in disk_points(0.9999), s in 1.01..3.0f64) {
        let c = conf(&pts);
        let z = Point::disk(Complex64::new(0.3, -0.2)).unwrap();
        for f in targets() {
            let shells = shell_sums(&c, &z, s, &f).unwrap();
            let direct = ratio_reconstruct(&c, &z, s, &f).unwrap().numerator;
            let total: Complex64 = shells.iter().sum();
            prop_assert!(shells.iter().map(|t| t.norm()).sum::<f64>().is_finite());
            prop_assert!((total - direct).norm() <= 1e-12 * direct.norm().max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn ratio_ignores_a_common_anchor(pts in disk_points(0.99), s in 1.05..2.5f64, anchor in 0usize..200) {
        let c = conf(&pts);
        let z = Point::disk(Complex64::new(-0.2, 0.25)).unwrap();
        let x0 = &c.points()[anchor % c.len()];
        let d0 = dist(Model::DISK, &z, x0).unwrap();
        for f in targets() {
            let (mut num, mut den) = (Complex64::new(0.0, 0.0), 0.0);
            for p in c.points() {
                let w = (-s * (dist(Model::DISK, &z, p).unwrap() - d0)).exp();
                num += w * f.eval(p).unwrap();
                den += w;
            }
            let r = ratio_reconstruct(&c, &z, s, &f).unwrap().ratio;
            prop_assert!(rel(r, num / den) <= 1e-12);
        }
    }

    #[test]
    fn boundary_coefficients_match_direct_sums(pts in disk_points(0.999), s in 1.05..3.0f64, yr in 0.0..0.8f64) {
        let c = conf(&pts);
        let y = Point::disk(Complex64::new(0.0, yr)).unwrap();
        let sample = ps_empirical(&c, &y, s).unwrap();
        prop_assert!((sample.total() - sigma(&c, &y, s).unwrap()).abs() <= 1e-12 * sample.total());
        let coeffs = fourier_coeffs(&sample, 6).unwrap();
        prop_assert_eq!(coeffs[0], Complex64::new(1.0, 0.0));
        let weights: Vec<f64> = c.points().iter().map(|p| (-s * dist(Model::DISK, &y, p).unwrap()).exp()).collect();
        let total: f64 = weights.iter().sum();
        for (n, cn) in coeffs.iter().enumerate().skip(1) {
            let direct: Complex64 = c
                .points()
                .iter()
                .zip(&weights)
                .map(|(p, w)| {
                    let theta = if p.norm() == 0.0 { 0.0 } else { p.to_complex().arg() };
                    w * Complex64::from_polar(1.0, -(n as f64) * theta)
                })
                .sum::<Complex64>()
                / total;
            prop_assert!((cn - direct).norm() <= 1e-12);
        }
    }
}
