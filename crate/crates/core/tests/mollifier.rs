use std::sync::Arc;

use ellreg_core::grid::{Grid2, GridFunction, Shape};
use ellreg_core::mollifier::{discrete_kernel, mollify, normalize, BumpKernel};
use proptest::prelude::*;

fn grid(n: usize) -> Arc<Grid2> {
    Arc::new(Grid2::new(Shape::Square, n, 1.0).unwrap())
}

/// Trigonometric field with random coefficients and frequencies.
fn field(g: &Arc<Grid2>, c: [f64; 4], k: [f64; 2]) -> GridFunction {
    GridFunction::from_fn(g.clone(), move |x, y| {
        c[0] + c[1] * (k[0] * x).sin() + c[2] * (k[1] * y).cos() + c[3] * (k[0] * x + k[1] * y).sin()
    })
}

#[test]
fn normalizing_constant_gives_unit_mass() {
    let c = normalize(2).unwrap();
    let k = BumpKernel::new(2, 0.1).unwrap();
    assert!(c > 0.0);
    assert!(k.value(&[0.0, 0.0]) > 0.0);
    assert_eq!(k.value(&[0.1, 0.0]), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn discrete_mass_is_exactly_one(gamma in 0.01f64..0.19, cells in 2.0f64..12.0) {
        let k = discrete_kernel(gamma, gamma / cells).unwrap();
        prop_assert_eq!(k.mass(), 1.0);
    }

    #[test]
    fn mollification_does_not_increase_sup(
        c in prop::array::uniform4(-2.0f64..2.0),
        k in prop::array::uniform2(0.5f64..25.0),
        gamma in 0.13f64..0.19,
    ) {
        let g = grid(33);
        let u = field(&g, c, k);
        let m = mollify(&u, gamma).unwrap();
        prop_assert!(m.sup_norm() <= u.sup_norm());
    }

    #[test]
    fn commutes_with_affine_addition(
        c in prop::array::uniform4(-2.0f64..2.0),
        l in prop::array::uniform3(-3.0f64..3.0),
    ) {
        let g = grid(41);
        let u = field(&g, c, [3.0, 5.0]);
        let lin = GridFunction::from_fn(g.clone(), move |x, y| l[0] + l[1] * x + l[2] * y);
        let sum = u.linear_combination(1.0, &lin, 1.0).unwrap();
        let lhs = mollify(&sum, 0.15).unwrap();
        let rhs = mollify(&u, 0.15).unwrap().linear_combination(1.0, &mollify(&lin, 0.15).unwrap(), 1.0).unwrap();
        let ml = mollify(&lin, 0.15).unwrap();
        for i in lhs.defined_nodes() {
            let (x, y) = g.coord(i);
            prop_assert!((ml.value(i) - (l[0] + l[1] * x + l[2] * y)).abs() <= 1e-12 * (1.0 + lin.sup_norm()));
            prop_assert!((lhs.value(i) - rhs.value(i)).abs() <= 1e-12 * (1.0 + sum.sup_norm()));
        }
    }
}
