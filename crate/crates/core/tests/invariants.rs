//! Cross-module properties on random small instances.

use htexp::channel::{capacity, expurgated_fixed, InputDist};
use htexp::exponents::{multiletter_k1, onebit_exponent, uncoded_exponent, zero_capacity_exponent, HTInstance};
use htexp::info::kl_joint;
use htexp::projection::{t_set_projection, TKind};
use htexp::simulator::{exact_np_errors, PairSource};
use htexp::{Alphabet, CondDist, FiniteDist, JointDist};
use proptest::prelude::*;

fn normalise(raw: &[f64]) -> Vec<f64> {
    let s: f64 = raw.iter().sum();
    raw.iter().map(|x| x / s).collect()
}

fn ab(name: &str, n: usize) -> Alphabet {
    Alphabet::new(name, n).unwrap()
}

fn joint_uv(raw: &[f64]) -> JointDist {
    JointDist::new(vec![ab("U", 2), ab("V", 2)], normalise(raw)).unwrap()
}

fn channel(a: f64, b: f64) -> CondDist {
    CondDist::new(ab("X", 2), ab("Y", 2), vec![vec![1.0 - a, a], vec![b, 1.0 - b]]).unwrap()
}

fn cells(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..1.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn uncoded_below_single_letter_search(p in cells(4), q in cells(4), a in 0.01f64..0.49, b in 0.01f64..0.49) {
        let inst = HTInstance::new(joint_uv(&p), joint_uv(&q), channel(a, b), 1.0).unwrap();
        let u = uncoded_exponent(&inst).unwrap().value_nats;
        let k1 = multiletter_k1(&inst, 0.1).unwrap().value_nats;
        prop_assert!(k1 >= u - 1e-9);
        // data processing: nothing beats seeing (U, V) directly
        prop_assert!(k1 <= kl_joint(&inst.p_uv, &inst.q_uv).unwrap() + 1e-9);
    }

    #[test]
    fn zero_capacity_equals_one_bit(p in cells(4), q in cells(4), r in 0.05f64..0.95) {
        let flat = CondDist::new(ab("X", 2), ab("Y", 2), vec![vec![r, 1.0 - r]; 2]).unwrap();
        let inst = HTInstance::new(joint_uv(&p), joint_uv(&q), flat, 1.0).unwrap();
        let z = zero_capacity_exponent(&inst).unwrap().value_nats;
        prop_assert_eq!(z, onebit_exponent(&inst).unwrap().value_nats);
        prop_assert!((z - inst.side_info_divergence().unwrap()).abs() < 1e-15);
    }

    #[test]
    fn one_bit_between_side_information_and_centralized(p in cells(4), q in cells(4), a in 0.01f64..0.49, tau in 0.0f64..3.0) {
        let inst = HTInstance::new(joint_uv(&p), joint_uv(&q), channel(a, a), tau).unwrap();
        let v = onebit_exponent(&inst).unwrap().value_nats;
        prop_assert!(v >= inst.side_info_divergence().unwrap() - 1e-12);
        prop_assert!(v <= kl_joint(&inst.p_uv, &inst.q_uv).unwrap() + 1e-9);
    }

    #[test]
    fn projection_lower_bounds_feasible_points(p in cells(8), q in cells(8), mix in 0.0f64..1.0) {
        let axes = || vec![ab("U", 2), ab("V", 2), ab("W", 2)];
        let pj = JointDist::new(axes(), normalise(&p)).unwrap();
        let qj = JointDist::new(axes(), normalise(&q)).unwrap();
        let r = t_set_projection(TKind::T3, &pj, &qj).unwrap();
        // P_UW P_V|... any joint with the same (U,W) and V marginals is feasible;
        // mixing P with P_UW x P_V keeps both marginals
        let indep = JointDist::product(&pj.marginalize(&["U", "W"]).unwrap(), &pj.marginalize(&["V"]).unwrap())
            .unwrap()
            .permute(&["U", "V", "W"])
            .unwrap();
        let f: Vec<f64> = pj.probs().iter().zip(indep.probs()).map(|(a, b)| mix * a + (1.0 - mix) * b).collect();
        let fj = JointDist::new(axes(), f).unwrap();
        prop_assert!(kl_joint(&fj, &qj).unwrap() >= r.value - 1e-9);
    }

    #[test]
    fn larger_eps_never_raises_beta(p in cells(4), q in cells(4), n in 1usize..40) {
        let src = PairSource::new(joint_uv(&p), joint_uv(&q)).unwrap();
        let mut prev = f64::INFINITY;
        for eps in [0.05, 0.1, 0.2, 0.4] {
            let r = exact_np_errors(&src, n, eps, 1e-3).unwrap();
            prop_assert!(r.beta_lo <= r.beta_hi);
            prop_assert!(r.alpha <= eps + 1e-12);
            prop_assert!(r.beta_hi <= prev + 1e-15);
            prev = r.beta_hi;
        }
    }

    #[test]
    fn capacity_bounds_and_expurgated_monotone(a in 0.0f64..1.0, b in 0.0f64..1.0, px in 0.05f64..0.95) {
        let ch = channel(a, b);
        let (c, _) = capacity(&ch, 1e-10).unwrap();
        prop_assert!((-1e-12..=std::f64::consts::LN_2 + 1e-12).contains(&c));
        let input = InputDist::iid(&FiniteDist::new(ab("X", 2), vec![px, 1.0 - px]).unwrap()).unwrap();
        let mut prev = f64::INFINITY;
        for k in 0..10 {
            let v = expurgated_fixed(0.07 * k as f64, &input, &ch).unwrap().value;
            prop_assert!(v <= prev + 1e-12);
            prev = v;
        }
    }
}
