use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::kinematics::{JointLimits, ParamVector, Skeleton};

/// Samples joint angles uniformly within their limits and the root translation
/// uniformly in a centered cube of half-width `half_width`.
pub fn random_init_with<R: Rng + ?Sized>(skeleton: &Skeleton, half_width: f64, rng: &mut R) -> ParamVector {
    let mut sample = |lo: f64, hi: f64| if hi > lo { rng.random_range(lo..=hi) } else { lo };
    let translation = Vector3::new(
        sample(-half_width, half_width),
        sample(-half_width, half_width),
        sample(-half_width, half_width),
    );
    let angles = skeleton
        .joints()
        .iter()
        .map(|j| match j.limits {
            JointLimits::Fixed => 0.0,
            JointLimits::Range { lower, upper } => sample(lower, upper),
        })
        .collect();
    ParamVector::new(translation, angles)
}

/// [`random_init_with`] using a translation box of half-width equal to the total
/// bone length, drawing from the caller's RNG.
pub fn random_init_rng<R: Rng + ?Sized>(skeleton: &Skeleton, rng: &mut R) -> ParamVector {
    random_init_with(skeleton, skeleton.total_bone_length(), rng)
}

/// Deterministic random initialization from a seed.
pub fn random_init(skeleton: &Skeleton, seed: u64) -> ParamVector {
    random_init_rng(skeleton, &mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::Joint;

    fn skel() -> Skeleton {
        Skeleton::new(
            "s",
            vec![
                Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -1.0, 2.0),
                Joint::revolute(2, 1, Vector3::x(), Vector3::new(0.0, 1.0, 0.0), 0.3, 0.3),
                Joint::fixed(3, 2, Vector3::new(0.0, 0.5, 0.0)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn degenerate_and_fixed() {
        let s = skel();
        for seed in 0..20 {
            let p = random_init(&s, seed);
            assert_eq!(p.angles[1], 0.3);
            assert_eq!(p.angles[2], 0.0);
            assert!(p.respects_limits(&s));
            assert!(p.translation.amax() <= 1.5);
        }
        assert_eq!(random_init(&s, 7), random_init(&s, 7));
        assert_ne!(random_init(&s, 7), random_init(&s, 8));
    }

    #[test]
    fn sample_mean_near_midpoint() {
        let s = skel();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let n = 100_000;
        let mut sum = 0.0;
        let mut tsum = Vector3::zeros();
        for _ in 0..n {
            let p = random_init_rng(&s, &mut rng);
            sum += p.angles[0];
            tsum += p.translation;
        }
        let mean = sum / n as f64;
        // Interval [-1, 2]: midpoint 0.5, width 3.
        assert!((mean - 0.5).abs() < 0.01 * 3.0, "{mean}");
        assert!((tsum / n as f64).amax() < 0.01 * 3.0);
    }
}
