use proptest::prelude::*;

use psrecon::geometry::{dist, Model, Point};
use psrecon::processes::{Configuration, SamplerSpec};

fn models() -> impl Strategy<Value = Model> {
    prop_oneof![Just(Model::DISK), Just(Model::complex_ball(2).unwrap()), Just(Model::real_ball(3).unwrap())]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn poisson_samples_stay_inside_the_truncation_ball(model in models(), radius in 1.0..4.0f64, seed in any::<u64>(), rep in 0u64..1000) {
        let spec = SamplerSpec::poisson(model, 1.5, radius, seed).unwrap();
        let conf = spec.sample(rep).unwrap();
        let o = Point::origin(model);
        for p in conf.points() {
            prop_assert!(p.norm() < 1.0);
            prop_assert!(dist(model, &o, p).unwrap() <= radius * (1.0 + 1e-12));
        }
        let again = spec.sample(rep).unwrap();
        prop_assert_eq!(conf.points(), again.points());
    }

    #[test]
    fn ensembles_reproduce_single_draws(seed in any::<u64>(), n in 1usize..6) {
        let spec = SamplerSpec::poisson(Model::DISK, 1.0, 3.0, seed).unwrap();
        let all = spec.ensemble(n, |_, c| Ok(c.points().to_vec())).unwrap();
        for (rep, pts) in all.iter().enumerate() {
            let single = spec.sample(rep as u64).unwrap();
            prop_assert_eq!(pts.as_slice(), single.points());
        }
    }

    #[test]
    fn gaf_zeros_stay_inside_r_edge(seed in any::<u64>(), r_edge in 0.3..0.9f64) {
        let conf = SamplerSpec::gaf(64, r_edge, seed).unwrap().sample(0).unwrap();
        prop_assert!(conf.points().iter().all(|p| p.norm() <= r_edge));
    }

    #[test]
    fn csv_round_trip_is_exact(model in models(), seed in any::<u64>()) {
        let conf = SamplerSpec::poisson(model, 1.0, 2.5, seed).unwrap().sample(3).unwrap();
        let mut buf = Vec::new();
        conf.write_csv(&mut buf).unwrap();
        let back = Configuration::read_csv(buf.as_slice()).unwrap();
        prop_assert_eq!(back.model(), model);
        prop_assert_eq!(back.points(), conf.points());
    }
}
