mod common;

use std::f64::consts::{PI, TAU};

use common::SplitMix;
use proptest::prelude::*;
use viewfit_core::geometry::{Dimensions, Pose};
use viewfit_core::orientation::*;

const H: f64 = 1e-6;

fn close(fd: f64, analytic: f64) -> bool {
    (fd - analytic).abs() <= 1e-6 * analytic.abs().max(1.0)
}

fn angle_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

#[test]
fn local_orientation_matches_alpha_formula() {
    let mut rng = SplitMix(1);
    for _ in 0..10_000 {
        let ry = rng.uniform(-PI, PI);
        let t = [rng.uniform(-30.0, 30.0), rng.uniform(-2.0, 3.0), rng.uniform(0.5, 80.0)];
        let got = local_orientation(&Pose::new(ry, t)).unwrap().radians();
        let alpha = ry - t[0].atan2(t[2]);
        assert!(angle_diff(got, alpha) < 1e-12);
        assert!((0.0..TAU).contains(&got));
    }
}

#[test]
fn local_global_round_trip() {
    let mut rng = SplitMix(2);
    for _ in 0..10_000 {
        let ry = rng.uniform(-PI, PI);
        let ray = RayAngle::from_radians(rng.uniform(-1.5, 1.5));
        let back = yaw_from_local(global_to_local(-ry, ray), ray);
        assert!(angle_diff(back, ry) < 1e-12);

        let l = LocalOrientation::new(rng.uniform(0.0, TAU));
        let again = global_to_local(local_to_global(l, ray), ray);
        assert!(angle_diff(again.radians(), l.radians()) < 1e-12);
    }
}

#[test]
fn multibin_encode_decode_round_trip() {
    let mut rng = SplitMix(3);
    for n_bins in [2, 3, 4, 8] {
        for _ in 0..10_000 {
            let theta = LocalOrientation::new(rng.uniform(0.0, TAU));
            let enc = multibin_encode(theta, n_bins, 0.1).unwrap();
            let covering: Vec<usize> = enc.covering().collect();
            assert!(!covering.is_empty() && covering.len() <= 2);
            // Any covering bin, given its exact residual, decodes to the angle.
            for &k in &covering {
                let mut conf = vec![0.0; n_bins];
                conf[k] = 1.0;
                let sc: Vec<(f64, f64)> = enc.targets.iter().map(|t| (t.residual.sin(), t.residual.cos())).collect();
                let got = multibin_decode(&enc, &conf, &sc).unwrap();
                assert!(angle_diff(got.radians(), theta.radians()) < 1e-12);
            }
        }
    }
}

#[test]
fn overlap_zero_covers_exactly_once() {
    let mut rng = SplitMix(4);
    for _ in 0..10_000 {
        let theta = LocalOrientation::new(rng.uniform(0.0, TAU));
        for n in [2, 4, 6] {
            assert_eq!(multibin_encode(theta, n, 0.0).unwrap().n_covering(), 1);
        }
    }
}

#[test]
fn angle_loss_gradient_matches_finite_difference() {
    let mut rng = SplitMix(5);
    for _ in 0..100 {
        let theta = LocalOrientation::new(rng.uniform(0.0, TAU));
        let enc = multibin_encode(theta, 2, 0.1).unwrap();
        let pred = vec![rng.uniform(-PI, PI), rng.uniform(-PI, PI)];
        let g = loss_ang_grad(theta, &enc, &pred).unwrap();
        for i in 0..2 {
            let (mut up, mut dn) = (pred.clone(), pred.clone());
            up[i] += H;
            dn[i] -= H;
            let fd = (loss_ang(theta, &enc, &up).unwrap() - loss_ang(theta, &enc, &dn).unwrap()) / (2.0 * H);
            assert!(close(fd, g[i]), "bin {i}: fd {fd} vs {}", g[i]);
        }
    }
}

#[test]
fn dimension_loss_gradient_matches_finite_difference() {
    let mut rng = SplitMix(6);
    let mean = Dimensions::new(3.9, 1.5, 1.6).unwrap();
    for _ in 0..100 {
        let truth = Dimensions::new(rng.uniform(3.0, 5.0), rng.uniform(1.2, 2.0), rng.uniform(1.3, 2.0)).unwrap();
        let pred = [rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)];
        let g = loss_dims_grad(&truth, &mean, &pred);
        for i in 0..3 {
            let (mut up, mut dn) = (pred, pred);
            up[i] += H;
            dn[i] -= H;
            let fd = (loss_dims(&truth, &mean, &up) - loss_dims(&truth, &mean, &dn)) / (2.0 * H);
            assert!(close(fd, g[i]));
        }
    }
}

#[test]
fn softmax_loss_gradient_matches_finite_difference() {
    let mut rng = SplitMix(7);
    for _ in 0..100 {
        let n = 2 + (rng.next_u64() % 15) as usize;
        let logits: Vec<f64> = (0..n).map(|_| rng.uniform(-5.0, 5.0)).collect();
        let k = (rng.next_u64() % n as u64) as usize;
        let g = loss_softmax_grad(k, &logits).unwrap();
        assert!(g.iter().sum::<f64>().abs() < 1e-12);
        for i in 0..n {
            let (mut up, mut dn) = (logits.clone(), logits.clone());
            up[i] += H;
            dn[i] -= H;
            let fd = (loss_softmax(k, &up).unwrap() - loss_softmax(k, &dn).unwrap()) / (2.0 * H);
            assert!(close(fd, g[i]));
        }
    }
}

#[test]
fn softmax_is_stable_for_large_logits() {
    let l = loss_softmax(0, &[1000.0, 0.0, -1000.0]).unwrap();
    assert!(l.is_finite() && l < 1e-12);
    let l = loss_softmax(2, &[1000.0, 0.0, -1000.0]).unwrap();
    assert!((l - 2000.0).abs() < 1e-9);
}

#[test]
fn total_loss_with_unit_parts() {
    let parts = LossParts { dims: 1.0, ang: 1.0, conf: 1.0, view: 1.0 };
    assert_eq!(loss_total(&parts, &LossWeights::default()), 17.0);
    assert_eq!(loss_total(&LossParts::default(), &LossWeights::default()), 0.0);
}

proptest! {
    #[test]
    fn softmax_shift_invariance(
        logits in prop::collection::vec(-20.0f64..20.0, 2..20),
        shift in -100.0f64..100.0,
        pick in 0usize..64,
    ) {
        let k = pick % logits.len();
        let shifted: Vec<f64> = logits.iter().map(|x| x + shift).collect();
        let a = loss_softmax(k, &logits).unwrap();
        let b = loss_softmax(k, &shifted).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
        prop_assert!(a >= 0.0);
    }

    #[test]
    fn angle_loss_is_bounded_and_minimal_at_truth(theta in 0.0f64..TAU, n in 2usize..9, overlap in 0.0f64..0.3) {
        let theta = LocalOrientation::new(theta);
        let enc = multibin_encode(theta, n, overlap).unwrap();
        let exact: Vec<f64> = enc.targets.iter().map(|t| t.residual).collect();
        let best = loss_ang(theta, &enc, &exact).unwrap();
        prop_assert!((best + 1.0).abs() < 1e-12);
        let off: Vec<f64> = exact.iter().map(|r| r + 0.5).collect();
        let worse = loss_ang(theta, &enc, &off).unwrap();
        prop_assert!(worse > best && worse <= 1.0);
    }

    #[test]
    fn dimension_loss_is_nonnegative_and_zero_at_truth(
        l in 2.0f64..6.0, h in 1.0f64..2.5, w in 1.2f64..2.2,
    ) {
        let mean = Dimensions::new(3.9, 1.5, 1.6).unwrap();
        let truth = Dimensions::new(l, h, w).unwrap();
        let exact = [l - 3.9, h - 1.5, w - 1.6];
        prop_assert!(loss_dims(&truth, &mean, &exact) < 1e-24);
        prop_assert!(loss_dims(&truth, &mean, &[0.0; 3]) >= 0.0);
    }
}
