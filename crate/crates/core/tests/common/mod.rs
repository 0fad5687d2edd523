//! Oracles shared by the integration suites.

#![allow(dead_code)]

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use sdpik::harness::generate::{chain, random_pose, star};
use sdpik::kinematics::{forward_kinematics, joint_rotation};
use sdpik::{JointLimits, Observation, ParamVector, Skeleton};

/// Grid points covering `[lower, upper]` with spacing at most `step`, endpoints included.
pub fn interval_grid(lower: f64, upper: f64, step: f64) -> Vec<f64> {
    let n = ((upper - lower) / step).ceil().max(1.0) as usize;
    (0..=n).map(|k| lower + (upper - lower) * k as f64 / n as f64).collect()
}

/// Minimum of the fit error over a dense angle grid, with the root translation
/// eliminated in closed form (the mean residual). Returns the minimum and its
/// minimizer.
///
/// Exhaustive over every revolute joint, so only usable for a few of them.
pub fn grid_minimum(skeleton: &Skeleton, obs: &Observation, step: f64) -> (f64, ParamVector) {
    let joints = skeleton.joints();
    let n = joints.len();
    let revolute: Vec<usize> = (0..n).filter(|&j| !joints[j].is_fixed()).collect();
    assert!(revolute.len() <= 4, "grid oracle is exhaustive");
    let grids: Vec<Vec<(f64, Matrix3<f64>)>> = revolute
        .iter()
        .map(|&j| match joints[j].limits {
            JointLimits::Range { lower, upper } => {
                interval_grid(lower, upper, step).into_iter().map(|a| (a, joint_rotation(&joints[j], a))).collect()
            }
            JointLimits::Fixed => unreachable!(),
        })
        .collect();
    let parent: Vec<Option<usize>> = (0..n).map(|j| skeleton.parent_index(j)).collect();
    let targets: Vec<(usize, Vector3<f64>)> = obs.entries().iter().map(|e| (e.joint - 1, e.target)).collect();

    struct State {
        rot: Vec<Matrix3<f64>>,
        pos: Vec<Vector3<f64>>,
        angle: Vec<f64>,
        local: Vec<Matrix3<f64>>,
        best: f64,
        best_angles: Vec<f64>,
    }
    let mut st = State {
        rot: vec![Matrix3::identity(); n],
        pos: vec![Vector3::zeros(); n],
        angle: vec![0.0; n],
        local: vec![Matrix3::identity(); n],
        best: f64::INFINITY,
        best_angles: vec![0.0; n],
    };
    let fill = |st: &mut State, from: usize, to: usize| {
        for j in from..to {
            let (pr, pp) = match parent[j] {
                Some(p) => (st.rot[p], st.pos[p]),
                None => (Matrix3::identity(), Vector3::zeros()),
            };
            st.pos[j] = pp + pr * joints[j].bone;
            st.rot[j] = pr * st.local[j];
        }
    };
    fn recurse(
        d: usize,
        st: &mut State,
        revolute: &[usize],
        grids: &[Vec<(f64, Matrix3<f64>)>],
        n: usize,
        targets: &[(usize, Vector3<f64>)],
        fill: &dyn Fn(&mut State, usize, usize),
    ) {
        let j = revolute[d];
        let next = revolute.get(d + 1).copied().unwrap_or(n);
        for &(a, k) in &grids[d] {
            st.angle[j] = a;
            st.local[j] = k;
            fill(st, j, next);
            if d + 1 < revolute.len() {
                recurse(d + 1, st, revolute, grids, n, targets, fill);
            } else {
                let mut sum = Vector3::zeros();
                let mut sq = 0.0;
                for &(idx, y) in targets {
                    let r = y - st.pos[idx];
                    sum += r;
                    sq += r.norm_squared();
                }
                let f = sq - sum.norm_squared() / targets.len() as f64;
                if f < st.best {
                    st.best = f;
                    st.best_angles.clone_from(&st.angle);
                }
            }
        }
    }
    let first = revolute.first().copied().unwrap_or(n);
    fill(&mut st, 0, first);
    if revolute.is_empty() {
        let theta = ParamVector::zeros(n);
        let x = forward_kinematics(skeleton, &theta).unwrap();
        let mean = targets.iter().map(|&(i, y)| y - x[i]).sum::<Vector3<f64>>() / targets.len() as f64;
        let theta = ParamVector::new(mean, vec![0.0; n]);
        return (sdpik::local_ik::fit_error(skeleton, obs, &theta).unwrap(), theta);
    }
    recurse(0, &mut st, &revolute, &grids, n, &targets, &fill);
    let zero_t = ParamVector::new(Vector3::zeros(), st.best_angles.clone());
    let x = forward_kinematics(skeleton, &zero_t).unwrap();
    let mean = targets.iter().map(|&(i, y)| y - x[i]).sum::<Vector3<f64>>() / targets.len() as f64;
    (st.best.max(0.0), ParamVector::new(mean, st.best_angles))
}

/// Small random instance: a chain or a two-armed star with at most
/// `max_revolute` revolute joints, targets perturbed off the reachable set.
pub fn small_instance<R: Rng>(rng: &mut R, max_revolute: usize, perturbation: f64) -> (Skeleton, Observation) {
    let skeleton = if max_revolute >= 3 && rng.random_bool(0.3) {
        star(2, 1, rng)
    } else {
        chain(rng.random_range(1..=max_revolute), rng)
    };
    let theta = random_pose(&skeleton, 0.5, rng);
    let x = forward_kinematics(&skeleton, &theta).unwrap();
    let all = rng.random_bool(0.5);
    let ids: Vec<usize> = if all {
        (1..=skeleton.len()).collect()
    } else {
        let mut ids: Vec<usize> = skeleton.leaves().iter().map(|l| l + 1).collect();
        ids.insert(0, 1);
        ids
    };
    let obs = Observation::from_pairs(ids.into_iter().map(|id| {
        let noise = Vector3::from_fn(|_, _| rng.random_range(-perturbation..=perturbation));
        (id, x[id - 1] + noise)
    }))
    .unwrap();
    (skeleton, obs)
}
