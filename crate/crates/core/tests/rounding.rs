mod common;

use nalgebra::Vector3;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdpik::harness::{generate_observations, Asset, ObservationMode};
use sdpik::local_ik::{fit_error, random_init, solve_local, PenaltyConfig};
use sdpik::rounding::{sdp_ik, SdpIkOptions};
use sdpik::{Joint, Observation, Skeleton};

const HALF_DEGREE: f64 = std::f64::consts::PI / 360.0;

/// Two hinges about z with unit bones; reach is 2.
fn planar_two_link() -> Skeleton {
    Skeleton::new(
        "planar",
        vec![
            Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -3.0, 3.0),
            Joint::revolute(2, 1, Vector3::z(), Vector3::x(), -2.5, 2.5),
            Joint::fixed(3, 2, Vector3::x()),
        ],
    )
    .unwrap()
}

#[test]
fn planar_chain_matches_grid_and_local_optima() {
    let s = planar_two_link();
    // Root pinned at the origin with a tip target out of reach and an elbow
    // target off the plane: the optimum is strictly positive.
    let obs = Observation::from_pairs([
        (1, Vector3::zeros()),
        (2, Vector3::new(0.2, 0.9, 0.3)),
        (3, Vector3::new(-1.6, 1.9, 0.0)),
    ])
    .unwrap();
    let (grid_min, _) = common::grid_minimum(&s, &obs, HALF_DEGREE);
    assert!(grid_min > 1e-2);

    let r = sdp_ik(&s, &obs, &SdpIkOptions::default()).unwrap();
    let refined = fit_error(&s, &obs, &r.theta).unwrap();
    assert!(r.sdp_bound <= grid_min + 1e-6, "bound {} vs grid {grid_min}", r.sdp_bound);
    assert!(refined <= grid_min + 1e-6, "refined {refined} vs grid {grid_min}");

    let cfg = PenaltyConfig::default();
    let best_local = (0..20)
        .map(|seed| solve_local(&s, &obs, &random_init(&s, seed), &cfg).unwrap())
        .map(|l| fit_error(&s, &obs, &l.theta).unwrap())
        .fold(f64::INFINITY, f64::min);
    assert!(refined <= best_local + 1e-9, "refined {refined} vs best local {best_local}");
}

#[test]
fn bound_never_exceeds_grid_minimum() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for k in 0..6 {
        let (s, obs) = common::small_instance(&mut rng, 2, 0.3);
        let (grid_min, _) = common::grid_minimum(&s, &obs, HALF_DEGREE);
        let r = sdp_ik(&s, &obs, &SdpIkOptions::default()).unwrap();
        assert!(r.solver_succeeded(), "instance {k}: {}", r.diagnostics.solver.status);
        assert!(r.sdp_bound <= grid_min + 1e-5, "instance {k}: bound {} vs grid {grid_min}", r.sdp_bound);
        assert!(r.tightness_gap >= -1e-5, "instance {k}: gap {}", r.tightness_gap);
    }
}

#[test]
fn unreachable_target_gives_positive_bound() {
    let s = planar_two_link();
    // Tip 5 units from the pinned root: the best fit leaves at least (5 - 2)^2
    // split between root and tip residuals, i.e. 9/2 with both free to move.
    let obs = Observation::from_pairs([(1, Vector3::zeros()), (3, Vector3::new(5.0, 0.0, 0.0))]).unwrap();
    let r = sdp_ik(&s, &obs, &SdpIkOptions::default()).unwrap();
    let refined = fit_error(&s, &obs, &r.theta).unwrap();
    assert!((refined - 4.5).abs() < 1e-6, "{refined}");
    assert!(r.sdp_bound <= refined + 1e-6);
    assert!(r.sdp_bound > 0.0);
}

#[test]
fn rescaled_instance_gives_the_same_angles() {
    let s = Asset::MiniHand.skeleton();
    let theta = &Asset::MiniHand.poses()[3];
    let obs = generate_observations(&s, theta, ObservationMode::All).unwrap();
    let big = Skeleton::new(
        "hand-cm",
        s.joints().iter().map(|j| Joint { bone: j.bone * 100.0, ..j.clone() }).collect(),
    )
    .unwrap();
    let big_obs = obs.with_targets(obs.entries().iter().map(|e| e.target * 100.0));
    let opts = SdpIkOptions::default();
    let (a, b) = (sdp_ik(&s, &obs, &opts).unwrap(), sdp_ik(&big, &big_obs, &opts).unwrap());
    for (x, y) in a.theta.angles.iter().zip(&b.theta.angles) {
        assert!((x - y).abs() < 1e-6, "{x} vs {y}");
    }
    assert!((a.diagnostics.length_scale * 100.0 - b.diagnostics.length_scale).abs() < 1e-12);
}

#[test]
fn exact_fits_on_the_body_are_recovered() {
    let s = Asset::MiniBody.skeleton();
    for (k, theta) in Asset::MiniBody.poses().iter().take(10).enumerate() {
        let obs = generate_observations(&s, theta, ObservationMode::All).unwrap();
        let r = sdp_ik(&s, &obs, &SdpIkOptions::default()).unwrap();
        assert!(r.refined_cost < 1e-5, "pose {k}: {}", r.refined_cost);
        assert!(r.refined_cost <= r.rounded_cost + 1e-12);
        assert!(r.diagnostics.clamped.is_empty(), "pose {k}: {:?}", r.diagnostics.clamped);
    }
}
