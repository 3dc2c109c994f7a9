use std::collections::HashMap;

use gradmech::expr::{check_homogeneity, parse, Expr};
use gradmech::strings::{BivectorLagrangian, GraphSurface, SurfaceGrid};
use gradmech::tulczyjew::{alpha, alpha_inverse, DoublePoint};
use proptest::prelude::*;

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        Just(Expr::var("x")),
        Just(Expr::var("y")),
        (-4i32..=4).prop_map(|c| Expr::constant(c as f64 / 2.0)),
    ]
}

/// Expressions that evaluate without domain errors on all of R^2.
fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a + b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a - b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a * b),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| a / (1.0 + b.pow(2.0))),
            inner.clone().prop_map(|a| a.sin()),
            inner.clone().prop_map(|a| a.cos()),
            inner.clone().prop_map(|a| a.sin().exp()),
            (inner, 0u8..4).prop_map(|(a, k)| a.pow(k as f64)),
        ]
    })
}

fn at(x: f64, y: f64) -> HashMap<String, f64> {
    HashMap::from([("x".to_string(), x), ("y".to_string(), y)])
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn printed_expressions_parse_back(e in expr(), x in -2.0..2.0f64, y in -2.0..2.0f64) {
        let back = parse(&e.to_string()).unwrap();
        let (u, v) = (e.eval(&at(x, y)).unwrap(), back.eval(&at(x, y)).unwrap());
        prop_assert!(close(u, v, 1e-12), "{e} -> {back}: {u} vs {v}");
    }

    #[test]
    fn derivative_is_linear(f in expr(), g in expr(), a in -3.0..3.0f64, b in -3.0..3.0f64,
                            x in -1.5..1.5f64, y in -1.5..1.5f64) {
        let lhs = (a * f.clone() + b * g.clone()).diff("x").eval(&at(x, y)).unwrap();
        let rhs = a * f.diff("x").eval(&at(x, y)).unwrap() + b * g.diff("x").eval(&at(x, y)).unwrap();
        prop_assert!(close(lhs, rhs, 1e-10), "{lhs} vs {rhs}");
    }

    #[test]
    fn derivative_matches_central_difference(f in expr(), x in -1.0..1.0f64, y in -1.0..1.0f64) {
        let h = 1e-5;
        let fd = (f.eval(&at(x + h, y)).unwrap() - f.eval(&at(x - h, y)).unwrap()) / (2.0 * h);
        let d = f.diff("x").eval(&at(x, y)).unwrap();
        // Truncation error of the central difference is f''' h^2 / 6.
        let curv = f.diff("x").diff("x").diff("x").eval(&at(x, y)).unwrap().abs();
        prop_assert!((fd - d).abs() <= 1e-6 * (1.0 + d.abs()) + curv * h * h, "{d} vs {fd}");
    }

    #[test]
    fn alpha_round_trip(v in proptest::collection::vec(-1e3..1e3f64, 8)) {
        let d = DoublePoint::new(v[0..2].to_vec(), v[2..4].to_vec(), v[4..6].to_vec(), v[6..8].to_vec()).unwrap();
        let a = alpha(&d);
        prop_assert_eq!(&a.xdot, &d.xdot);
        prop_assert_eq!(&a.pdot, &d.pdot);
        prop_assert_eq!(&a.p, &d.p);
        prop_assert_eq!(alpha_inverse(&a), d);
    }

    #[test]
    fn area_is_one_homogeneous_at_any_scale(m in 2usize..5) {
        let area = BivectorLagrangian::area(m).unwrap();
        let chart = area.chart().unwrap();
        prop_assert!(check_homogeneity(area.expr(), &chart, 1));
        prop_assert!(!check_homogeneity(area.expr(), &chart, 2));
    }

    #[test]
    fn graph_csv_is_exact(nx in 5usize..9, ny in 5usize..9, seed in proptest::collection::vec(-1e6..1e6f64, 81)) {
        let g = GraphSurface::new((-1.0, 2.0), (0.5, 3.0), nx, ny, seed[..nx * ny].to_vec()).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let back = GraphSurface::read_csv(&buf[..]).unwrap();
        prop_assert_eq!(&back.z, &g.z);
        let grid = SurfaceGrid::from_graph(&g);
        let mut buf = Vec::new();
        grid.write_csv(&mut buf).unwrap();
        prop_assert_eq!(SurfaceGrid::read_csv(&buf[..]).unwrap().values, grid.values);
    }
}
