//! Seeded fixtures shared by the benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sdpik::harness::generate::{chain, random_pose};
use sdpik::harness::{generate_observations, Asset, ObservationMode};
use sdpik::{Observation, ParamVector, Skeleton};

/// A random chain with every joint observed at a random pose.
pub fn chain_instance(revolute: usize, seed: u64) -> (Skeleton, Observation, ParamVector) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = chain(revolute, &mut rng);
    let theta = random_pose(&s, 0.5, &mut rng);
    let obs = generate_observations(&s, &theta, ObservationMode::All).expect("generated pose is valid");
    (s, obs, theta)
}

/// The first shipped pose of an asset, fully observed.
pub fn asset_instance(asset: Asset) -> (Skeleton, Observation, ParamVector) {
    let s = asset.skeleton();
    let theta = asset.poses().swap_remove(0);
    let obs = generate_observations(&s, &theta, ObservationMode::All).expect("shipped pose is valid");
    (s, obs, theta)
}
