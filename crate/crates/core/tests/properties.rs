use infoinv::comgeo::{gbit_model, hull_fit, min_tensor, BilinearState, VPolytope};
use infoinv::invsep::{
    g_measure, is_css, is_product, lambda_tau, ppt_verdict, FKind, MeasureConfig, PptVerdict, QuantumPolytope, CSS_TOL,
};
use infoinv::matcore::{hermitian_eig, kron, partial_trace, DimSplit, NormKind, Subsystem};
use infoinv::qstate::{
    density_from_pure, marginals, pi_map, purity, random_mixed, random_pure, random_unitary, DensityMatrix,
};
use proptest::prelude::*;

fn dims() -> impl Strategy<Value = DimSplit> {
    (1usize..=3, 1usize..=3).prop_map(|(a, b)| DimSplit::new(a, b).unwrap())
}

fn single(d: usize) -> DimSplit {
    DimSplit::new(d, 1).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pi_is_idempotent(split in dims(), rank in 1usize..=9, seed in any::<u64>()) {
        let rank = rank.min(split.total());
        let rho = random_mixed(split, rank, seed).unwrap();
        let once = pi_map(&rho);
        let twice = pi_map(&once);
        prop_assert!((twice.matrix() - once.matrix()).frobenius() <= 1e-12);
    }

    #[test]
    fn partial_trace_recovers_factors(da in 1usize..=3, db in 1usize..=3, s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_mixed(single(da), da, s1).unwrap();
        let b = random_mixed(single(db), db, s2).unwrap();
        let split = DimSplit::new(da, db).unwrap();
        let ab = kron(a.matrix(), b.matrix());
        let ra = partial_trace(&ab, split, Subsystem::B).unwrap();
        let rb = partial_trace(&ab, split, Subsystem::A).unwrap();
        prop_assert!((&ra - a.matrix()).frobenius() <= 1e-14);
        prop_assert!((&rb - b.matrix()).frobenius() <= 1e-14);
    }

    #[test]
    fn eigendecomposition_reconstructs(split in dims(), seed in any::<u64>()) {
        let rho = random_mixed(split, split.total(), seed).unwrap();
        let eig = hermitian_eig(rho.matrix()).unwrap();
        prop_assert!((&eig.reconstruct() - rho.matrix()).frobenius() <= 1e-12);
        prop_assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(eig.values.iter().all(|&l| l >= -1e-12));
    }

    #[test]
    fn measures_are_local_unitary_invariant(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = random_mixed(DimSplit::qubits(), rank, seed).unwrap();
        let u = random_unitary(2, seed.wrapping_add(1)).unwrap();
        let v = random_unitary(2, seed.wrapping_add(2)).unwrap();
        let rotated = rho.local_unitary(&u, &v).unwrap();
        for norm in [NormKind::Frobenius, NormKind::Trace] {
            let cfg = MeasureConfig::new(FKind::Identity, norm);
            prop_assert!((g_measure(&rho, cfg) - g_measure(&rotated, cfg)).abs() <= 1e-9);
        }
    }

    #[test]
    fn measure_vanishes_exactly_on_products(split in dims(), seed in any::<u64>()) {
        let a = random_mixed(single(split.dim_a), split.dim_a, seed).unwrap();
        let b = random_mixed(single(split.dim_b), split.dim_b, seed ^ 0x5555).unwrap();
        let prod = DensityMatrix::tensor(&a, &b).with_split(split).unwrap();
        for norm in NormKind::ALL {
            prop_assert!(g_measure(&prod, MeasureConfig::new(FKind::Identity, norm)) <= 1e-12);
        }
        prop_assert!(is_product(&prod, 1e-10));
    }

    #[test]
    fn singleton_lambda_tau_matches_pi(seed in any::<u64>(), rank in 1usize..=4) {
        let rho = random_mixed(DimSplit::qubits(), rank, seed).unwrap();
        let lt = lambda_tau(&QuantumPolytope::singleton(rho.clone()));
        prop_assert_eq!(lt.vertices().len(), 1);
        let pi = pi_map(&rho);
        prop_assert_eq!(lt.vertices()[0].matrix(), pi.matrix());
    }

    #[test]
    fn pure_css_iff_unit_marginal_purity(seed in any::<u64>()) {
        let rho = density_from_pure(&random_pure(DimSplit::qubits(), seed));
        let css = is_css(&QuantumPolytope::singleton(rho.clone()), CSS_TOL).unwrap();
        let (a, b) = marginals(&rho);
        prop_assert_eq!(css, purity(&a) >= 1.0 - 1e-10);
        if ppt_verdict(&rho) == PptVerdict::Entangled {
            prop_assert!(purity(&a) <= 1.0 - 1e-8 && purity(&b) <= 1.0 - 1e-8);
        }
    }

    #[test]
    fn hull_fit_recovers_interior_points(
        raw in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 4), 2..8),
        w in proptest::collection::vec(0.01f64..1.0, 8),
    ) {
        let p = VPolytope::new(4, raw.clone()).unwrap();
        let total: f64 = w[..raw.len()].iter().sum();
        let mut x = vec![0.0; 4];
        for (v, wi) in raw.iter().zip(&w) {
            for (xk, vk) in x.iter_mut().zip(v) {
                *xk += wi / total * vk;
            }
        }
        let fit = hull_fit(&x, &p).unwrap();
        prop_assert!(fit.residual <= 1e-9);
        prop_assert!((fit.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(fit.weights.iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn separations_are_valid_certificates(
        raw in proptest::collection::vec(proptest::collection::vec(-1.0f64..1.0, 3), 1..6),
        dir in proptest::collection::vec(-1.0f64..1.0, 3),
    ) {
        let p = VPolytope::new(3, raw).unwrap();
        let len = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        prop_assume!(len > 0.1);
        // Every vertex lies in the unit cube, so this point is outside.
        let x: Vec<f64> = dir.iter().map(|d| 3.0 * d / len).collect();
        let fit = hull_fit(&x, &p).unwrap();
        prop_assert!(fit.residual > 0.0);
        let sep = fit.separation.expect("outside point has a certificate");
        let margin = sep.verify(&x, &p).expect("every vertex on the near side");
        prop_assert!(margin > 0.0);
    }

    #[test]
    fn gbit_products_are_separable(i in 0usize..4, j in 0usize..4, k in 0usize..4, l in 0usize..4, t in 0.0f64..=1.0) {
        let g = gbit_model();
        let v = g.vertices();
        let p1 = BilinearState::product(&v[i], &v[j]);
        let p2 = BilinearState::product(&v[k], &v[l]);
        let mix: Vec<f64> = p1.coords().iter().zip(p2.coords()).map(|(a, b)| t * a + (1.0 - t) * b).collect();
        prop_assert!(hull_fit(&mix, &min_tensor(&g, &g)).unwrap().residual <= 1e-9);
    }
}
