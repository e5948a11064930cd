use std::sync::Arc;

use ellreg_core::grid::{Grid2, GridFunction, Shape};
use ellreg_core::operators::{OperatorSpec, Perturbation};
use ellreg_core::solver::{direct_linear_solve, hessian, solve_fully_nonlinear, solve_laplace_dirichlet, SolveOptions};
use ellreg_core::SymmetricMatrix2;
use proptest::prelude::*;

fn disk(n: usize) -> Arc<Grid2> {
    Arc::new(Grid2::new(Shape::Disk, n, 1.0).unwrap())
}

fn boundary(g: &Arc<Grid2>, c: [f64; 5]) -> GridFunction {
    GridFunction::from_fn(g.clone(), move |x, y| {
        let t = y.atan2(x);
        c[0] + c[1] * t.cos() + c[2] * (2.0 * t).sin() + c[3] * (5.0 * t).cos() + c[4] * x * y * y
    })
}

#[test]
fn grid_text_round_trip() {
    let g = disk(17);
    let u = GridFunction::from_fn(g, |x, y| x - 0.25 * y * y);
    let back = GridFunction::from_text(&u.to_text()).unwrap();
    assert_eq!(back.to_text(), u.to_text());
    assert!(u.to_text().starts_with("grid disk 17 1"));
}

#[test]
fn truncated_grid_file_reports_line() {
    let err = GridFunction::from_text("grid square 17 1\n0 0 0\n").unwrap_err();
    assert!(err.line >= 2, "{err}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn discrete_maximum_principle(c in prop::array::uniform5(-1.0f64..1.0)) {
        let g = disk(33);
        let b = boundary(&g, c);
        let r = solve_laplace_dirichlet(&b, &g, SolveOptions::default()).unwrap();
        let (lo, hi) = g.boundary_nodes().map(|i| b.value(i)).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        for i in g.interior_nodes() {
            let v = r.solution.value(i);
            prop_assert!(v >= lo - 1e-10 && v <= hi + 1e-10, "{v} outside [{lo}, {hi}]");
        }
    }

    #[test]
    fn linear_operator_matches_direct_solve(
        c in prop::array::uniform5(-1.0f64..1.0),
        w in (1.0f64..3.0, -0.4f64..0.4, 1.0f64..3.0),
    ) {
        let g = disk(33);
        let spec = OperatorSpec::new(SymmetricMatrix2::new(w.0, w.1, w.2), 0.0, Perturbation::None).unwrap();
        let b = boundary(&g, c);
        let opts = SolveOptions { tol: Some(1e-12), ..Default::default() };
        let it = solve_fully_nonlinear(&spec, None, &b, &g, opts).unwrap();
        prop_assert!(it.summary.final_residual <= 1e-12);
        let direct = direct_linear_solve(&spec, None, &b, &g).unwrap();
        let diff = it.solution.linear_combination(1.0, &direct, -1.0).unwrap().sup_norm();
        prop_assert!(diff <= 1e-8, "difference {diff:e}");
    }

    #[test]
    fn hessian_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, c in prop::array::uniform5(-1.0f64..1.0)) {
        let g = disk(25);
        let u = boundary(&g, c);
        let v = GridFunction::from_fn(g.clone(), |x, y| (2.0 * x).sin() * y.exp());
        let w = u.linear_combination(a, &v, b).unwrap();
        let (hu, hv, hw) = (hessian(&u).unwrap(), hessian(&v).unwrap(), hessian(&w).unwrap());
        for (i, m) in hw.nodes() {
            let expect = hu.at(i).unwrap().scaled(a) + hv.at(i).unwrap().scaled(b);
            let scale = (1.0 + a.abs() * u.sup_norm() + b.abs() * v.sup_norm()) / (g.h() * g.h());
            prop_assert!((m - expect).frobenius() <= 1e-14 * scale);
        }
    }
}
