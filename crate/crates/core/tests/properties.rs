use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use cocycle_lab::base::{BaseSystem, QNum};
use cocycle_lab::cocycle::{Cocycle, Generator};
use cocycle_lab::perturb::steer_direction;
use cocycle_lab::scenarios::{winding_number, DirectionField};
use cocycle_lab::sl2::{self, Mat2, TangentVec};
use cocycle_lab::towers::{build_castle, decompose_height, frobenius_threshold};

fn unimodular() -> impl Strategy<Value = Mat2> {
    (0.0..TAU, -4.0..4.0f64, 0.0..TAU)
        .prop_map(|(a, t, b)| sl2::rotation(a) * Mat2::diag(t.exp()) * sl2::rotation(b))
}

fn line_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(PI);
    d.min(PI - d)
}

proptest! {
    #[test]
    fn products_stay_unimodular(a in unimodular(), b in unimodular()) {
        let p = a * b;
        let scale = a.frobenius() * b.frobenius();
        prop_assert!((p.det() - 1.0).abs() <= 1e-12 * scale * scale);
    }

    #[test]
    fn norm_is_inverse_invariant(a in unimodular()) {
        let n = sl2::operator_norm(&a);
        prop_assert!(n >= 1.0);
        prop_assert!((n - sl2::operator_norm(&a.inverse())).abs() <= 1e-12 * n);
    }

    #[test]
    fn singular_axes_are_orthonormal_and_extremal(a in unimodular()) {
        prop_assume!(sl2::operator_norm(&a) > 1.0 + 1e-6);
        let axes = sl2::singular_axes(&a).unwrap();
        let dot = axes.u[0] * axes.s[0] + axes.u[1] * axes.s[1];
        prop_assert!(dot.abs() < 1e-12);
        let up = a.apply(axes.u);
        let down = a.apply(axes.s);
        prop_assert!((up[0].hypot(up[1]) - axes.norm).abs() <= 1e-9 * axes.norm);
        prop_assert!((down[0].hypot(down[1]) * axes.norm - 1.0).abs() <= 1e-9 * axes.norm * axes.norm);
    }

    #[test]
    fn exp_inverts_log(p in -1.5..1.5f64, q in -1.5..1.5f64, r in -1.5..1.5f64) {
        let m = sl2::exp_map(&TangentVec { p, q, r });
        let back = sl2::log_map(&m).unwrap();
        prop_assert!(sl2::exp_map(&back).distance(&m) <= 1e-9 * m.frobenius());
    }

    #[test]
    fn heights_decompose_above_threshold(height in 1usize..60, extra in 0usize..500) {
        let n = frobenius_threshold(height) + extra;
        let (short, tall) = decompose_height(n, height).unwrap();
        prop_assert_eq!(short * height + tall * (height + 1), n);
        prop_assert!(short <= height);
    }

    #[test]
    fn gap_below_threshold_is_not_representable(height in 2usize..40) {
        prop_assert!(decompose_height(frobenius_threshold(height) - 1, height).is_err());
    }

    #[test]
    fn reduced_positions_lie_in_unit_interval(n in -(1i128 << 40)..(1i128 << 40), k in -100_000i64..100_000) {
        let rot = BaseSystem::golden().rotation().unwrap().clone();
        let x = rot.q_position(QNum { n, k });
        prop_assert!((0.0..1.0).contains(&x));
    }

    #[test]
    fn winding_of_linear_fields(degree in -4i64..=4, phase in 0.0..PI) {
        let field = DirectionField::from_fn(512, |t| (degree as f64 * t + phase).rem_euclid(PI));
        prop_assert_eq!(winding_number(&field).unwrap(), degree);
    }

    #[test]
    fn rotation_cocycles_never_grow(offset in 0.0..1.0f64, winding in -3i64..=3, x in 0.0..1.0f64) {
        let co = Cocycle::new(BaseSystem::golden(), Generator::Rotation { offset, winding }).unwrap();
        prop_assert!(co.log_norm_of_product(&co.base().point(x), 5000) < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn castles_are_exact(height in 2usize..30, silver in any::<bool>()) {
        let sys = if silver { BaseSystem::silver() } else { BaseSystem::golden() };
        let castle = build_castle(&sys, height).unwrap();
        prop_assert!(castle.towers.iter().all(|t| t.height == height || t.height == height + 1));
        let report = castle.check(&sys).unwrap();
        prop_assert!(report.pass(), "{:?}", report);
    }

    #[test]
    fn steering_reaches_the_target_within_budget(x in 0.0..1.0f64, from in 0.0..PI, to in 0.0..PI) {
        let eps = 0.1;
        let co = Cocycle::new(BaseSystem::golden(), Generator::Schrodinger { energy: 0.0, coupling: 3.0 }).unwrap();
        let p = co.base().point(x);
        let block = steer_direction(&co, &p, [from.cos(), from.sin()], [to.cos(), to.sin()], eps, 1000).unwrap();
        let mut theta = from;
        for (j, m) in block.matrices.iter().enumerate() {
            prop_assert!(m.distance(&co.value(&co.base().step(&p, j as i64))) < eps);
            let v = m.apply([theta.cos(), theta.sin()]);
            theta = v[1].atan2(v[0]);
        }
        prop_assert!(line_gap(theta, to) < 1e-6);
    }
}
