//! Invariants checked on random inputs.

use std::sync::Arc;

use proptest::prelude::*;

use dunkl_core::config::RunConfig;
use dunkl_core::kernels::{KernelConfig, KernelEvaluator, RieszMethod};
use dunkl_core::measure::{Ball, WeightedMeasure};
use dunkl_core::operators::{assemble_riesz, Commutator};
use dunkl_core::reflection::{dist, norm, reflect, ReflectionGroup, RootSystemSpec};
use dunkl_core::spaces::{
    bmo_norm, median_split, weighted_lower_median, BallFamily, Grid, GridFunction, OscillationMode,
};

fn vec_in(n: usize, half: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-half..half, n)
}

fn z2n_measure(kappas: &[f64]) -> Arc<WeightedMeasure> {
    Arc::new(WeightedMeasure::new(&RootSystemSpec::z2n(kappas).unwrap()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reflection_is_an_isometric_involution(a in vec_in(3, 2.0), x in vec_in(3, 5.0)) {
        prop_assume!(norm(&a) > 1e-3);
        let y = reflect(&a, &x).unwrap();
        let back = reflect(&a, &y).unwrap();
        prop_assert!(dist(&back, &x) <= 1e-12 * (1.0 + norm(&x)));
        prop_assert!((norm(&y) - norm(&x)).abs() <= 1e-12 * (1.0 + norm(&x)));
    }

    #[test]
    fn dihedral_groups_are_closed(m in 2usize..9, ka in 0.0f64..2.0, kb in 0.0f64..2.0) {
        // Odd m has a single root orbit.
        let kb = if m % 2 == 1 { ka } else { kb };
        let spec = RootSystemSpec::dihedral(m, ka, kb).unwrap();
        let g = ReflectionGroup::generate(&spec, 64).unwrap();
        prop_assert_eq!(g.order(), 2 * m);
        for a in g.elements() {
            prop_assert!(a.orthogonality_defect() <= 1e-12);
            for b in g.elements() {
                prop_assert!(g.find(&a.compose(b)).is_some());
            }
        }
    }

    #[test]
    fn orbit_distance_is_invariant_and_dominated(
        m in 2usize..7,
        x in vec_in(2, 4.0),
        y in vec_in(2, 4.0),
    ) {
        let g = ReflectionGroup::generate(&RootSystemSpec::dihedral(m, 1.0, 1.0).unwrap(), 64).unwrap();
        let d = g.orbit_distance(&x, &y);
        prop_assert!(d <= dist(&x, &y) + 1e-12);
        prop_assert!((d - g.orbit_distance(&y, &x)).abs() <= 1e-12);
        for e in g.elements() {
            prop_assert!((g.orbit_distance(&e.apply(&x), &y) - d).abs() <= 1e-10);
        }
        prop_assert_eq!(2 * m % g.orbit(&x).len(), 0);
    }

    #[test]
    fn ball_measure_is_homogeneous(
        k0 in 0.0f64..2.0,
        k1 in 0.0f64..2.0,
        c in vec_in(2, 3.0),
        r in 0.1f64..2.0,
        lambda in 0.2f64..5.0,
    ) {
        let m = z2n_measure(&[k0, k1]);
        let b = Ball::new(c, r).unwrap();
        let v = m.ball_measure(&b, 1e-7).unwrap().value;
        let vs = m.ball_measure(&b.scaled(lambda), 1e-7).unwrap().value;
        let expect = v * lambda.powf(m.homogeneous_dim());
        prop_assert!((vs - expect).abs() <= 1e-5 * expect, "{} vs {}", vs, expect);
    }

    #[test]
    fn heat_kernel_is_positive_and_symmetric(
        kappa in 0.1f64..2.0,
        t in 0.05f64..5.0,
        x in vec_in(1, 3.0),
        y in vec_in(1, 3.0),
    ) {
        let ke = KernelEvaluator::new(z2n_measure(&[kappa]), KernelConfig::default()).unwrap();
        let a = ke.heat_kernel(t, &x, &y).unwrap();
        let b = ke.heat_kernel(t, &y, &x).unwrap();
        prop_assert!(a > 0.0);
        prop_assert!((a - b).abs() <= 1e-8 * a);
    }

    #[test]
    fn riesz_kernel_is_antisymmetric(
        kappa in 0.1f64..2.0,
        x in vec_in(2, 3.0),
        y in vec_in(2, 3.0),
        j in 0usize..2,
    ) {
        let ke = KernelEvaluator::new(z2n_measure(&[kappa, 0.5]), KernelConfig::default()).unwrap();
        prop_assume!(ke.measure().group().orbit_distance(&x, &y) > 0.05);
        let a = ke.riesz_kernel(RieszMethod::Translated, j, &x, &y).unwrap().value;
        let b = ke.riesz_kernel(RieszMethod::Translated, j, &y, &x).unwrap().value;
        prop_assert!((a + b).abs() <= 1e-8 * a.abs().max(b.abs()), "{} vs {}", a, b);
    }

    #[test]
    fn lower_median_splits_the_mass(
        atoms in prop::collection::vec((0i32..6, 0.01f64..1.0), 1..40),
    ) {
        let atoms: Vec<(f64, f64)> = atoms.into_iter().map(|(v, w)| (v as f64, w)).collect();
        let m = weighted_lower_median(&atoms);
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        let below: f64 = atoms.iter().filter(|a| a.0 < m).map(|a| a.1).sum();
        let at_most: f64 = atoms.iter().filter(|a| a.0 <= m).map(|a| a.1).sum();
        prop_assert!(2.0 * below < total);
        prop_assert!(2.0 * at_most >= total);
        prop_assert!(atoms.iter().any(|a| a.0 == m));
    }

    #[test]
    fn median_split_holds_for_random_symbols(
        seed_vals in prop::collection::vec(0i32..5, 400),
        x0 in -2.5f64..2.5,
        r in 0.2f64..0.4,
    ) {
        let grid = Arc::new(Grid::symmetric(z2n_measure(&[1.0]), 4.0, 400).unwrap());
        let b = GridFunction::from_values(grid, seed_vals.into_iter().map(f64::from).collect()).unwrap();
        let ball = Ball::new(vec![x0], r).unwrap();
        let tilde = Ball::new(vec![x0 + 5.0 * r], r).unwrap();
        prop_assume!(x0 + 6.0 * r < 4.0);
        prop_assert!(median_split(&b, &ball, &tilde).is_ok());
    }

    #[test]
    fn family_sup_grows_with_the_family(
        center in -2.0f64..2.0,
        r_min in 0.05f64..0.5,
        extra in prop::collection::vec(-3.0f64..3.0, 1..6),
    ) {
        let grid = Arc::new(Grid::symmetric(z2n_measure(&[1.0]), 4.0, 800).unwrap());
        let b = GridFunction::from_fn(grid, |x| (x[0] - center).abs().max(1e-12).ln());
        let small = BallFamily::new(vec![vec![0.0], vec![center]], BallFamily::dyadic_radii(r_min, 2.0)).unwrap();
        let mut centers = vec![vec![0.0], vec![center]];
        centers.extend(extra.into_iter().map(|c| vec![c]));
        let big = BallFamily::new(centers, BallFamily::dyadic_radii(r_min / 2.0, 2.0)).unwrap();
        for mode in [OscillationMode::Euclidean, OscillationMode::Orbit] {
            prop_assert!(bmo_norm(&b, mode, &big).sup >= bmo_norm(&b, mode, &small).sup);
        }
    }

    #[test]
    fn seed_and_kappa_survive_a_config_round_trip(seed in any::<u64>(), kappa in 0.0f64..10.0) {
        let text = format!("seed = {seed}\n[group]\npreset = \"z2n\"\nkappa = [{kappa:?}]\n");
        let cfg = RunConfig::from_toml(&text).unwrap();
        prop_assert_eq!(RunConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn commutator_routes_agree_and_vanish_on_constants(
        kappa in 0.0f64..1.5,
        b in prop::collection::vec(-1.0f64..1.0, 48),
        f in prop::collection::vec(-1.0f64..1.0, 48),
        c in -3.0f64..3.0,
    ) {
        let m = z2n_measure(&[kappa]);
        let ke = KernelEvaluator::new(m.clone(), KernelConfig::default()).unwrap();
        let grid = Arc::new(Grid::symmetric(m, 3.0, 48).unwrap());
        let t = assemble_riesz(&ke, grid.clone(), 0, 1e-6, RieszMethod::Translated).unwrap();
        let f = GridFunction::from_values(grid.clone(), f).unwrap();
        let b = GridFunction::from_values(grid.clone(), b).unwrap();
        let comm = Commutator::new(&t, &b).unwrap();
        let p = comm.apply_fn(&f).unwrap();
        let q = comm.apply_factored(&f).unwrap();
        let scale = p.values().iter().fold(1e-300f64, |a, v| a.max(v.abs()));
        for (u, v) in p.values().iter().zip(q.values()) {
            prop_assert!((u - v).abs() <= 1e-12 * scale);
        }
        // [b + c, T] = [b, T]
        let shifted = b.map(|v| v + c);
        let s = Commutator::new(&t, &shifted).unwrap().apply_factored(&f).unwrap();
        for (u, v) in s.values().iter().zip(q.values()) {
            prop_assert!((u - v).abs() <= 1e-10 * scale.max(1.0));
        }
        let zero = Commutator::new(&t, &GridFunction::constant(grid, c)).unwrap().apply_factored(&f).unwrap();
        prop_assert!(zero.values().iter().all(|v| *v == 0.0));
    }
}
