use std::sync::Arc;

use ellreg_core::cordes::{
    cordes_delta, cordes_delta_matrix, hessian_identity_check, k_eps_margin, k_eps_prime_margin, k_eps_prime_prefactor,
    unproved_nirenberg_threshold, EigenList,
};
use ellreg_core::grid::{Grid2, GridFunction};
use ellreg_core::SymmetricMatrix2;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn rotate(a: SymmetricMatrix2, th: f64) -> SymmetricMatrix2 {
    let (s, c) = th.sin_cos();
    a.congruence(ellreg_core::Matrix2([[c, -s], [s, c]]))
}

#[test]
fn frozen_values() {
    assert_eq!(k_eps_margin(&EigenList::new(vec![1.0, 2.0]).unwrap()).unwrap(), 8.0 / 9.0);
    assert_eq!(k_eps_prime_prefactor(3), 2.75);
    assert_eq!(cordes_delta(SymmetricMatrix2::IDENTITY).unwrap(), 1.0);
    assert_eq!(cordes_delta_matrix(&DMatrix::identity(3, 3)).unwrap(), 1.0);
    assert_eq!(unproved_nirenberg_threshold(3), Some(2.0));
    assert_eq!(unproved_nirenberg_threshold(2), None);
    assert!(k_eps_margin(&EigenList::new(vec![1.0, -1.0]).unwrap()).is_err());
}

#[test]
fn identity_check_on_smooth_fields() {
    let g = Arc::new(Grid2::unit_disk(65).unwrap());
    for u in [
        GridFunction::from_fn(g.clone(), |x, y| x * x * x - 3.0 * x * y * y),
        GridFunction::from_fn(g.clone(), |x, y| x.exp() * y.cos()),
        GridFunction::from_fn(g.clone(), |x, y| 0.3 * x * x - x * y + 2.0 * y * y),
    ] {
        let n = u.sup_norm();
        assert!(hessian_identity_check(&u).unwrap() <= 1e-10 * (1.0 + n * n));
    }
}

fn eigen(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..10.0, n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn margins_are_scale_invariant(v in eigen(3), t in 0.01f64..100.0) {
        let a = EigenList::new(v.clone()).unwrap();
        let b = EigenList::new(v.iter().map(|x| x * t).collect()).unwrap();
        let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * (1.0 + x.abs());
        prop_assert!(close(k_eps_margin(&a).unwrap(), k_eps_margin(&b).unwrap()));
        prop_assert!(close(k_eps_prime_margin(&a).unwrap(), k_eps_prime_margin(&b).unwrap()));
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(v.clone()));
        prop_assert!(close(cordes_delta_matrix(&m).unwrap(), cordes_delta_matrix(&(m.clone() * t)).unwrap()));
    }

    #[test]
    fn plane_coincidence(v in eigen(2)) {
        let a = EigenList::new(v).unwrap();
        prop_assert_eq!(k_eps_margin(&a).unwrap(), k_eps_prime_margin(&a).unwrap());
    }

    #[test]
    fn prime_condition_is_stronger(n in 3usize..7, seed in prop::collection::vec(0.05f64..10.0, 7)) {
        let a = EigenList::new(seed[..n].to_vec()).unwrap();
        prop_assert!(k_eps_prime_margin(&a).unwrap() <= k_eps_margin(&a).unwrap() + 1e-15);
    }

    #[test]
    fn delta_is_rotation_invariant(a in 0.05f64..10.0, b in -2.0f64..2.0, c in 0.05f64..10.0, th in 0.0f64..6.3) {
        let m = SymmetricMatrix2::new(a, b, c);
        prop_assume!(m.trace() != 0.0);
        let d = cordes_delta(m).unwrap();
        prop_assert!((cordes_delta(rotate(m, th)).unwrap() - d).abs() <= 1e-10);
    }
}
