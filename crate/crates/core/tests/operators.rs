use ellreg_core::acceptance::catalog;
use ellreg_core::operators::{derivative_oscillation, normalize, residual_audit, OperatorSpec, Perturbation};
use ellreg_core::SymmetricMatrix2;
use proptest::prelude::*;

fn sym(scale: f64) -> impl Strategy<Value = SymmetricMatrix2> {
    (-scale..scale, -scale..scale, -scale..scale).prop_map(|(a, b, c)| SymmetricMatrix2::new(a, b, c))
}

fn psd(scale: f64) -> impl Strategy<Value = SymmetricMatrix2> {
    (0.0..scale, 0.0..scale, -1.0f64..1.0).prop_map(|(p, q, t)| {
        let r = t * (p * q).sqrt();
        SymmetricMatrix2::new(p, r, q)
    })
}

fn spd() -> impl Strategy<Value = SymmetricMatrix2> {
    (0.2f64..5.0, 0.2f64..5.0, 0.0f64..std::f64::consts::PI).prop_map(|(a, b, th)| {
        let (s, c) = th.sin_cos();
        SymmetricMatrix2::new(a * c * c + b * s * s, (a - b) * s * c, a * s * s + b * c * c)
    })
}

#[test]
fn residual_audit_within_eps_for_catalog() {
    for (j, spec) in catalog().iter().enumerate() {
        let a = residual_audit(spec, 10_000, 7 + j as u64);
        assert!(a <= spec.eps, "{:?}: audit {a} > eps {}", spec.perturbation, spec.eps);
        assert!(derivative_oscillation(spec, 2_000, 7) <= spec.eps * (1.0 + 1e-12));
    }
}

#[test]
fn audits_are_seed_deterministic() {
    let spec = catalog()[3];
    assert_eq!(residual_audit(&spec, 500, 11), residual_audit(&spec, 500, 11));
}

#[test]
fn rejects_eps_at_lambda_min() {
    assert!(OperatorSpec::new(SymmetricMatrix2::diag(0.5, 2.0), 0.5, Perturbation::Sine).is_err());
    assert!(OperatorSpec::new(SymmetricMatrix2::diag(-1.0, 2.0), 0.0, Perturbation::None).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ellipticity_bracket(idx in 0usize..6, m in sym(20.0), p in psd(5.0)) {
        let spec = catalog()[idx];
        let b = spec.effective_bounds();
        let d = spec.evaluate(m + p) - spec.evaluate(m);
        let tr = p.trace();
        let slack = 1e-12 * (1.0 + m.frobenius() + p.frobenius());
        prop_assert!(d >= b.lambda * tr - slack, "{d} < {} ", b.lambda * tr);
        prop_assert!(d <= b.big_lambda * tr + slack, "{d} > {}", b.big_lambda * tr);
    }

    #[test]
    fn zero_at_zero(idx in 0usize..6) {
        prop_assert_eq!(catalog()[idx].evaluate(SymmetricMatrix2::ZERO), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn gradient_matches_finite_differences(idx in 0usize..6, m in sym(3.0)) {
        let spec = catalog()[idx];
        let g = spec.gradient(m);
        let h = 1e-6;
        let dirs = [
            (SymmetricMatrix2::new(1.0, 0.0, 0.0), g.m11),
            (SymmetricMatrix2::new(0.0, 1.0, 0.0), 2.0 * g.m12),
            (SymmetricMatrix2::new(0.0, 0.0, 1.0), g.m22),
        ];
        for (e, exact) in dirs {
            let fd = (spec.evaluate(m + e.scaled(h)) - spec.evaluate(m - e.scaled(h))) / (2.0 * h);
            prop_assert!((fd - exact).abs() <= 1e-5 * (1.0 + exact.abs()), "fd {fd} vs {exact}");
        }
    }

    #[test]
    fn normalization_reaches_identity(w in spd(), frac in 0.0f64..0.9, sine in any::<bool>()) {
        let eps = frac * w.eigenvalues().0;
        let p = if sine { Perturbation::Sine } else { Perturbation::None };
        let spec = OperatorSpec::new(w, eps, p).unwrap();
        let r = normalize(&spec).unwrap();
        let a = r.a.to_matrix();
        let aaw = a * a.transpose() * w.to_matrix();
        prop_assert!(aaw.max_abs_diff(ellreg_core::Matrix2::IDENTITY) <= 1e-12 * (1.0 + w.op_norm() / w.eigenvalues().0));
        let g0 = r.transformed.gradient(SymmetricMatrix2::ZERO);
        prop_assert!((g0 - SymmetricMatrix2::IDENTITY).frobenius() <= 1e-10);
        prop_assert!(r.new_eps <= eps / w.eigenvalues().0 * (1.0 + 1e-12));
        let again = normalize(&r.transformed).unwrap();
        prop_assert!((again.a - SymmetricMatrix2::IDENTITY).frobenius() <= 1e-10);
    }
}
