use fragrd_core::geom::{self, delta1_oracle_1d, indices, IndexOptions};
use fragrd_core::math;
use fragrd_core::{Point, SetExpr};
use proptest::prelude::*;

fn intervals() -> impl Strategy<Value = Vec<(f64, f64)>> {
    prop::collection::vec((0.1f64..3.0, 0.2f64..2.0), 1..5).prop_map(|parts| {
        let mut x = -2.0;
        parts
            .into_iter()
            .map(|(gap, len)| {
                let a = x + gap;
                x = a + len;
                (a, x)
            })
            .collect()
    })
}

fn balls_2d() -> impl Strategy<Value = SetExpr> {
    prop::collection::vec((-3.0f64..3.0, -3.0f64..3.0, 0.4f64..1.5), 1..4).prop_map(|bs| {
        let parts = bs.into_iter().map(|(x, y, r)| SetExpr::ball(2, Point::xy(x, y), r).unwrap()).collect();
        SetExpr::union(parts).unwrap()
    })
}

fn coarse(expr: &SetExpr) -> IndexOptions {
    let m = geom::measure_expr(expr, 0.02).unwrap().value;
    IndexOptions { h: Some(math::equimeasurable_radius(m, expr.dim()) / 60.0), ..Default::default() }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn one_dimensional_closed_form_and_oracle(iv in intervals()) {
        let e = SetExpr::intervals(&iv).unwrap();
        let rep = indices(&e, &IndexOptions::default()).unwrap();
        let closed = (rep.rho - rep.r_e) / (rep.rho + rep.r_e);
        prop_assert!((rep.delta_h - closed).abs() <= 1e-3, "{} vs {}", rep.delta_h, closed);
        let oracle = delta1_oracle_1d(&iv).unwrap();
        prop_assert!((rep.delta1 - oracle.delta1).abs() <= 3.0 * rep.h / oracle.measure);
    }

    #[test]
    fn indices_stay_in_range(e in balls_2d()) {
        let rep = indices(&e, &coarse(&e)).unwrap();
        prop_assert!((0.0..1.0).contains(&rep.delta1));
        prop_assert!((0.0..1.0).contains(&rep.delta_h));
        prop_assert!(rep.r_e <= rep.rho + rep.h);
        prop_assert!(rep.rho + rep.h >= rep.diameter / 2.0);
        prop_assert!(rep.delta_h >= rep.delta_h_lower_bound - rep.tolerance);
    }

    #[test]
    fn proposition_one_constants(e in balls_2d()) {
        let rep = indices(&e, &coarse(&e)).unwrap();
        let n = 2.0f64;
        prop_assert!(rep.delta1 <= 4.0 * n * 3.0 * rep.delta_h + 0.02);
        prop_assert!(1.0 - rep.delta_h <= 8.0 * n.sqrt() * (1.0 - rep.delta1).sqrt() + 0.02);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 6, ..ProptestConfig::default() })]

    #[test]
    fn similarity_invariance(e in balls_2d(), mu in 0.5f64..2.0, vx in -5.0f64..5.0, vy in -5.0f64..5.0) {
        let a = indices(&e, &coarse(&e)).unwrap();
        let moved = e.scale(mu).unwrap().translate(Point::xy(vx, vy));
        let b = indices(&moved, &coarse(&moved)).unwrap();
        let tol = a.tolerance + b.tolerance;
        prop_assert!((a.delta1 - b.delta1).abs() <= tol, "δ1 {} vs {}", a.delta1, b.delta1);
        prop_assert!((a.delta_h - b.delta_h).abs() <= tol, "δH {} vs {}", a.delta_h, b.delta_h);
    }

    #[test]
    fn d1_is_a_metric(a in intervals(), b in intervals(), c in intervals()) {
        let (a, b, c) = (SetExpr::intervals(&a).unwrap(), SetExpr::intervals(&b).unwrap(), SetExpr::intervals(&c).unwrap());
        let h = 0.01;
        let ab = geom::d1_expr(&a, &b, h).unwrap().value;
        let ba = geom::d1_expr(&b, &a, h).unwrap().value;
        let bc = geom::d1_expr(&b, &c, h).unwrap().value;
        let ac = geom::d1_expr(&a, &c, h).unwrap().value;
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ac <= ab + bc + 1e-9);
        prop_assert!(geom::d1_expr(&a, &a, h).unwrap().value.abs() < 1e-12);
    }
}

#[test]
fn rasterized_balls_have_small_indices() {
    for dim in [1, 2] {
        for r in [0.5, 1.0, 3.0] {
            let e = SetExpr::ball(dim, Point::ORIGIN, r).unwrap();
            let rep = indices(&e, &IndexOptions::default()).unwrap();
            assert!(rep.delta1 <= rep.tolerance.max(0.02), "N={dim} r={r}: δ1 {}", rep.delta1);
            assert!(rep.delta_h <= rep.tolerance.max(0.02), "N={dim} r={r}: δH {}", rep.delta_h);
        }
    }
}

#[test]
fn worked_examples() {
    let two = SetExpr::intervals(&[(0.0, 2.0), (10.0, 12.0)]).unwrap();
    let rep = indices(&two, &IndexOptions::default()).unwrap();
    assert!((rep.delta1 - 0.5).abs() <= rep.tolerance);
    let gap = SetExpr::intervals(&[(0.0, 1.0), (3.0, 4.0)]).unwrap();
    let rep = indices(&gap, &IndexOptions::default()).unwrap();
    assert!((rep.delta_h - 1.0 / 3.0).abs() <= rep.tolerance);
    assert!((rep.x_e.0[0] - 2.0).abs() < 1e-9 && (rep.rho - 2.0).abs() <= rep.h);
}
