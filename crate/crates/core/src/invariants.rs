//! Property-based invariants across modules.

use num_complex::Complex64;
use proptest::prelude::*;

use crate::cli::ExperimentConfig;
use crate::fields::{divergence3, make_div_free, random_field, FieldVector, ScalarField};
use crate::leaves::{
    d_sigma, preimage_decompose, sample_leaf, sample_profile, strip_piece_bound,
    subdivide_by_strips_detailed, TestNormalization,
};
use crate::map::{
    apply_inverse, apply_map, backward_region, forward_region, grid_pullback_table, Alpha,
    TorusPoint,
};
use crate::norms::{strong_stable_on, weak_on, NormParams, SampleSet};
use crate::operators::{
    apply_heat, apply_l_infty, compose_inverse, pushforward_ideal, OperatorContext,
};
use crate::shear::ShearProfile;

fn alpha_strategy() -> impl Strategy<Value = Alpha> {
    (1u32..=16).prop_map(|k| Alpha::new(2 * k).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn map_inverse_round_trip(x in 0.0f64..1.0, y in 0.0f64..1.0, alpha in alpha_strategy()) {
        let p = TorusPoint::new(x, y);
        let q = apply_map(p, alpha);
        let back = apply_inverse(q, alpha);
        prop_assert!(back.distance(&p) < 1e-12 * alpha.squared().max(1.0));
        prop_assert_eq!(backward_region(q, alpha).index, forward_region(p, alpha).index);
    }

    #[test]
    fn lattice_map_is_a_bijection(half in 1usize..40, alpha in alpha_strategy()) {
        prop_assert!(grid_pullback_table(2 * half, alpha).unwrap().is_bijection());
    }

    #[test]
    fn fourier_round_trip_and_heat_contraction(seed in 0u64..1000, eps in 0.0f64..1e-2) {
        let f = random_field(seed, 0.5, 7, 16).unwrap();
        let c = &f.c[0];
        let back = ScalarField::from_coefficients(16, c.coefficients()).unwrap();
        prop_assert!(back.sub(c).unwrap().norm() <= 1e-12 * c.norm());
        prop_assert!(apply_heat(&f, eps).unwrap().norm() <= f.norm() * (1.0 + 1e-12));
    }

    #[test]
    fn div_free_completion(seed in 0u64..1000) {
        let b = make_div_free(&random_field(seed, 1.0, 7, 32).unwrap());
        prop_assert!(divergence3(&b).norm() <= 1e-10 * b.norm().max(1.0));
    }

    #[test]
    fn transport_is_linear_and_isometric(seed in 0u64..1000, alpha in alpha_strategy(), a in -2.0f64..2.0) {
        let ctx = OperatorContext::new(alpha, 16, &ShearProfile::zero(2), 0.0).unwrap();
        let h = random_field(seed, 1.0, 4, 16).unwrap();
        let f = &h.c[1];
        prop_assert!((compose_inverse(f, &ctx).unwrap().norm() - f.norm()).abs() <= 1e-12 * f.norm());
        let mut scaled = h.clone();
        scaled.scale(Complex64::new(a, 0.0));
        let mut lhs = pushforward_ideal(&scaled, &ctx).unwrap();
        let rhs = pushforward_ideal(&h, &ctx).unwrap();
        lhs.axpy(Complex64::new(-a, 0.0), &rhs);
        prop_assert!(lhs.norm() <= 1e-12 * rhs.norm().max(1.0));
        let twice = apply_l_infty(&apply_l_infty(&h).unwrap()).unwrap();
        prop_assert!(twice.norm() <= 1e-12 * h.norm());
    }

    #[test]
    fn strip_pieces_tile_the_leaf(seed in 0u64..100_000, alpha in alpha_strategy()) {
        let w = sample_leaf(seed, alpha);
        let pieces = subdivide_by_strips_detailed(&w, alpha);
        prop_assert!(pieces.len() <= strip_piece_bound(&w, alpha));
        prop_assert_eq!(pieces[0].t0, 0.0);
        prop_assert_eq!(pieces.last().unwrap().t1, w.len());
        let pre = preimage_decompose(&w, alpha).unwrap();
        prop_assert!(pre.iter().all(|l| l.len() <= 1.0 && l.len() > 0.0));
    }

    #[test]
    fn leaf_metric_is_symmetric(s1 in 0u64..10_000, s2 in 0u64..10_000, s3 in 0u64..10_000) {
        let a = Alpha::new(8).unwrap();
        let (u, v, w) = (sample_leaf(s1, a), sample_leaf(s2, a), sample_leaf(s3, a));
        prop_assert_eq!(d_sigma(&u, &v), d_sigma(&v, &u));
        prop_assert!(d_sigma(&u, &w) <= d_sigma(&u, &v) + d_sigma(&v, &w) + 1e-12);
        prop_assert_eq!(d_sigma(&u, &u), 0.0);
    }

    #[test]
    fn test_function_normalization(seed in 0u64..10_000, len in 0.01f64..1.0) {
        let p = sample_profile(seed, len);
        let c1 = p.normalized(TestNormalization::C1, len);
        prop_assert!((c1.c1_norm() - 1.0).abs() < 1e-9);
        let s = p.normalized(TestNormalization::Strong { sigma: 0.4, q: 0.5 }, len);
        prop_assert!((s.cq_norm(0.5) - len.powf(-0.4)).abs() < 1e-9 * len.powf(-0.4));
        // a C¹-normalized function has strong norm at most 3 |W|^{-σ}
        prop_assert!(c1.cq_norm(0.5) <= 3.0 * len.powf(-0.4) * (1.0 + 1e-12));
    }

    #[test]
    fn config_hash_round_trip(a in prop::collection::vec(1u32..20, 1..4), n in 2usize..200) {
        let mut c = ExperimentConfig::default();
        c.set("alpha", &a.iter().map(|v| (2 * v).to_string()).collect::<Vec<_>>().join(",")).unwrap();
        c.set("grid_n", &(2 * n + 20).to_string()).unwrap();
        let mut d = ExperimentConfig::default();
        for (k, v) in c.canonical() {
            d.set(k, &v).unwrap();
        }
        prop_assert_eq!(c.hash(), d.hash());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn estimators_grow_with_the_sample_set(seed in 0u64..1000, fseed in 0u64..1000) {
        let p = NormParams::defaults(Alpha::new(8).unwrap()).with_samples(16, 4);
        let f = random_field(fseed, 1.0, 6, 32).unwrap();
        let s = SampleSet::new(seed, &p);
        let both = s.union(&SampleSet::new(seed + 1, &p));
        prop_assert!(weak_on(&f, &both).value >= weak_on(&f, &s).value);
        prop_assert!(strong_stable_on(&f, &both, &p).value >= strong_stable_on(&f, &s, &p).value);
        prop_assert!(weak_on(&f, &s).value <= 3.0 * strong_stable_on(&f, &s, &p).value);
    }
}
