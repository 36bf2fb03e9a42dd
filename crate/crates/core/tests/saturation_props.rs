//! Saturation algebra, checked on 10⁴ random samples per property.

mod common;

use nalgebra::DMatrix;
use proptest::prelude::*;
use rdsat::grid::{sup_norm, Grid};
use rdsat::lmi::linalg::{block_sym, schur_psd};
use rdsat::lmi::{m2_scalar, minimal_d, Mat, SymMatrix};
use rdsat::saturation::{
    deadzone, delta, delta_bound_indicator, delta_bound_l2, delta_bound_pointwise, delta_bound_sup, sat_scalar,
    sector_check, SectorOutcome,
};

const CASES: u32 = 10_000;

fn cfg() -> ProptestConfig {
    ProptestConfig {
        cases: CASES,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// Gain, sector matrix and state with `|(K − C)z|_∞ ≤ ℓ`.
fn sector_case() -> impl Strategy<Value = (Mat, Mat, Vec<f64>, Vec<f64>, f64)> {
    (1usize..5, 1usize..4).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-10.0..10.0f64, m * n),
            prop::collection::vec(-3.0..3.0f64, m * n),
            prop::collection::vec(-5.0..5.0f64, n),
            prop::collection::vec(0.01..20.0f64, m),
            0.05..5.0f64,
            0.0..1.0f64,
        )
            .prop_map(move |(k, e, z, d, level, shrink)| {
                let k = Mat::from_row_slice(m, n, &k);
                let mut e = Mat::from_row_slice(m, n, &e);
                let zv = nalgebra::DVector::from_column_slice(&z);
                let ez = (&e * &zv).amax();
                if ez > level {
                    e *= shrink * level / ez;
                }
                (k.clone(), k - e, z, d, level)
            })
    })
}

fn shape(grid: &Grid, coeffs: &[f64]) -> Vec<f64> {
    grid.sample(|x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(j, c)| c * ((j + 1) as f64 * std::f64::consts::PI * x / grid.length).sin())
            .sum::<f64>()
            + coeffs[0] * x
    })
}

fn spd(n: usize, raw: &[f64], shift: f64) -> SymMatrix {
    let l = Mat::from_row_slice(n, n, &raw[..n * n]);
    SymMatrix::sym_part(&(&l * l.transpose() + Mat::identity(n, n) * shift))
}

proptest! {
    #![proptest_config(cfg())]

    #[test]
    fn sector_inequality_nonpositive((k, c, z, d, level) in sector_case()) {
        let out = sector_check(&z, &k, &c, &d, level).unwrap();
        let SectorOutcome::Value(v) = out else {
            return Err(TestCaseError::fail(format!("precondition reported violated: {out:?}")));
        };
        // hand-rolled value from the definitions
        let zv = nalgebra::DVector::from_column_slice(&z);
        let kz = &k * &zv;
        let cz = &c * &zv;
        let mut oracle = 0.0;
        for j in 0..d.len() {
            let phi = sat_scalar(kz[j], level) - kz[j];
            oracle += phi * d[j] * (phi + cz[j]);
        }
        prop_assert!(oracle <= 1e-9 * (1.0 + oracle.abs()), "oracle {oracle}");
        prop_assert!((v - oracle).abs() <= 1e-9 * (1.0 + oracle.abs()));
        prop_assert!(v <= 1e-9 * (1.0 + v.abs()));
    }

    #[test]
    fn deadzone_vanishes_only_inside(v in prop::collection::vec(-10.0..10.0f64, 1..6), level in 0.05..5.0f64) {
        for (x, p) in v.iter().zip(deadzone(&v, level)) {
            if x.abs() <= level {
                prop_assert_eq!(p, 0.0);
            } else {
                prop_assert!((p.abs() - (x.abs() - level)).abs() < 1e-12);
                prop_assert!(p * x < 0.0);
            }
        }
    }

    #[test]
    fn scalar_difference_bound(r in -50.0..50.0f64, k in -50.0..50.0f64, level in 0.01..5.0f64) {
        let d = delta(&[r], k, level)[0];
        prop_assert!(d.abs() <= delta_bound_pointwise(r, level) * (1.0 + 1e-14));
    }

    #[test]
    fn scalar_difference_zero_in_linear_regime(r in -10.0..10.0f64, u in -1.0..1.0f64, level in 0.01..5.0f64) {
        // |k| ≤ ℓ and |rk| ≤ ℓ
        let k = u * level / r.abs().max(1.0);
        prop_assert_eq!(delta(&[r], k, level)[0], 0.0);
    }

    #[test]
    fn function_difference_zero_in_linear_regime(
        coeffs in prop::collection::vec(-3.0..3.0f64, 1..5),
        u in -1.0..1.0f64,
        level in 0.05..5.0f64,
    ) {
        let grid = Grid::new(2.0, 101).unwrap();
        let b = shape(&grid, &coeffs);
        let k = u * level / sup_norm(&b).max(1.0);
        prop_assert!(delta(&b, k, level).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn function_difference_bounds(
        coeffs in prop::collection::vec(-3.0..3.0f64, 1..5),
        k in -20.0..20.0f64,
        level in 0.05..5.0f64,
    ) {
        let grid = Grid::new(2.0, 101).unwrap();
        let b = shape(&grid, &coeffs);
        let d = delta(&b, k, level);
        let l2 = grid.l2_norm(&d);
        let tol = 1e-12 * (1.0 + l2);
        prop_assert!(l2 <= delta_bound_l2(&grid, &b, level) + tol);
        prop_assert!(sup_norm(&d) <= delta_bound_sup(&b, level) * (1.0 + 1e-14));
        if k.abs() <= level {
            prop_assert!(l2 <= delta_bound_indicator(&grid, &b, k, level) + tol);
        }
    }

    #[test]
    fn schur_test_matches_full_spectrum(
        n in 1usize..4,
        m in 1usize..3,
        a_raw in prop::collection::vec(-2.0..2.0f64, 9),
        b_raw in prop::collection::vec(-2.0..2.0f64, 6),
        c_raw in prop::collection::vec(-2.0..2.0f64, 4),
        shift in -1.0..3.0f64,
    ) {
        let a = SymMatrix::sym_part(&(Mat::from_row_slice(n, n, &a_raw[..n * n]) * Mat::from_row_slice(n, n, &a_raw[..n * n]).transpose() + Mat::identity(n, n) * shift));
        let b = Mat::from_row_slice(m, n, &b_raw[..m * n]);
        let c = spd(m, &c_raw, 0.2);
        let full = block_sym(&a, &b, &c).unwrap().to_dense();
        let lam = common::lambda_min_oracle(&DMatrix::from(full));
        prop_assume!(lam.abs() > 1e-7);
        prop_assert_eq!(schur_psd(&a, &b, &c).unwrap(), lam > 0.0);
    }

    #[test]
    fn minimal_scaling_is_the_threshold(
        n in 1usize..4,
        raw in prop::collection::vec(-1.5..1.5f64, 9),
        k in prop::collection::vec(-5.0..5.0f64, 3),
        c in prop::collection::vec(-5.0..5.0f64, 3),
        level in 0.2..3.0f64,
    ) {
        let pt = spd(n, &raw, 0.5);
        let k = Mat::from_row_slice(1, n, &k[..n]);
        let c = Mat::from_row_slice(1, n, &c[..n]);
        prop_assume!((&k - &c).amax() > 1e-3);
        let a = minimal_d(&pt, &k, &c, level).unwrap().value;
        let at = |d: f64| common::lambda_min_oracle(&m2_scalar(&pt, &c, &k, d, level).to_dense());
        prop_assert!(at(a + 1e-6) > 0.0, "above a* = {a}: {}", at(a + 1e-6));
        prop_assert!(at(a - 1e-6) < 0.0, "below a* = {a}: {}", at(a - 1e-6));
        prop_assert!(at(a + 1.0) >= at(a + 1e-6));
    }
}
