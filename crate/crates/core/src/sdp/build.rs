use super::constraints::{
    canonical_constraints, conjugation_constraints, epigraph_block, joint_limit_constraints, lifted_rotation_constraints,
    multiplication_block, HalfSpace,
};
use super::layout::{vec_index, Allocator, JointVars, LiftedRotation, RevoluteVars, RotationRef, VariableLayout, LIFT_LEN};
use super::program::{Affine, ConeBlock, ConicProgram, LinearEquality};
use crate::error::Result;
use crate::kinematics::{axis_frame, Observation, Skeleton};

/// Compiles an IK instance into the convex relaxation.
///
/// Block census for `R` revolute joints, `O` observed joints and `H` limited
/// revolute joints (width below a full turn): `3R` blocks of size 10, `R` of
/// size 9, `R` of size 3, `O` of size 4, plus one diagonal block of size `H`
/// when `H > 0`.
pub fn build_sdp(skeleton: &Skeleton, obs: &Observation) -> Result<(ConicProgram, VariableLayout)> {
    obs.validate(skeleton)?;
    let layout = allocate(skeleton, obs);
    let mut program = ConicProgram::new(layout.num_vars);
    let mut half_spaces: Vec<(String, usize, usize, HalfSpace)> = Vec::new();

    for (idx, joint) in skeleton.joints().iter().enumerate() {
        let vars = &layout.joints[idx];
        let label = format!("joint{}", joint.id);
        let parent_rot = match skeleton.parent_index(idx) {
            Some(p) => layout.joints[p].rotation,
            None => RotationRef::Identity,
        };
        let parent_pos = skeleton.parent_index(idx).map(|p| layout.joints[p].position.start).unwrap_or(layout.translation.start);

        // p_j = p_parent + R_parent v_j
        for a in 0..3 {
            let mut expr = Affine::var(vars.position.start + a).plus(&Affine::var(parent_pos + a).scaled(-1.0));
            for b in 0..3 {
                expr = expr.plus(&parent_rot.entry(a, b).scaled(-joint.bone[b]));
            }
            program.add_equality(LinearEquality::zero(expr));
        }

        let Some(rv) = &vars.revolute else { continue };
        for (rot, name) in [(&rv.global, "global"), (&rv.relative, "relative"), (&rv.canonical, "canonical")] {
            let (block, eqs) = lifted_rotation_constraints(rot, &format!("{label}/{name}"));
            program.add_block(block);
            program.equalities.extend(eqs);
        }
        program.add_block(multiplication_block(rv.global.rotation(), parent_rot, rv.relative.rotation(), &label));
        program.equalities.extend(canonical_constraints(rv.canonical.r.start, rv.cos, rv.sin));
        program.equalities.extend(conjugation_constraints(rv.relative.r.start, rv.cos, rv.sin, &axis_frame(&joint.axis)));
        let (disc, half) = joint_limit_constraints(rv.cos, rv.sin, &joint.limits, &label);
        program.add_block(disc);
        if let Some(h) = half {
            half_spaces.push((label, rv.cos, rv.sin, h));
        }
    }

    for (entry, &(joint_idx, q)) in obs.entries().iter().zip(&layout.epigraph) {
        let target = [entry.target.x, entry.target.y, entry.target.z];
        program.add_block(epigraph_block(q, layout.joints[joint_idx].position.start, &target, &format!("joint{}", entry.joint)));
        program.objective[q] = 1.0;
    }

    if !half_spaces.is_empty() {
        let mut block = ConeBlock::diagonal(half_spaces.len(), "limits");
        for (d, (_, c, s, h)) in half_spaces.iter().enumerate() {
            block.add_constant(d, d, -h.offset);
            block.add_coefficient(*c, d, d, h.normal[0]);
            block.add_coefficient(*s, d, d, h.normal[1]);
        }
        program.add_block(block);
    }
    program.canonicalize();
    Ok((program, layout))
}

fn allocate(skeleton: &Skeleton, obs: &Observation) -> VariableLayout {
    let mut alloc = Allocator::default();
    let translation = alloc.take(3);
    let mut joints: Vec<JointVars> = Vec::with_capacity(skeleton.len());
    for (idx, joint) in skeleton.joints().iter().enumerate() {
        let position = alloc.take(3);
        if joint.is_fixed() {
            let rotation = skeleton.parent_index(idx).map(|p| joints[p].rotation).unwrap_or(RotationRef::Identity);
            joints.push(JointVars { position, rotation, revolute: None });
            continue;
        }
        let global = alloc.take(9);
        let relative = alloc.take(9);
        let canonical = alloc.take(9);
        let cos = alloc.one();
        let sin = alloc.one();
        let lifts = [alloc.take(LIFT_LEN), alloc.take(LIFT_LEN), alloc.take(LIFT_LEN)];
        let [gl, rl, cl] = lifts;
        let rv = RevoluteVars {
            global: LiftedRotation { r: global, lift: gl },
            relative: LiftedRotation { r: relative, lift: rl },
            canonical: LiftedRotation { r: canonical, lift: cl },
            cos,
            sin,
        };
        joints.push(JointVars { position, rotation: rv.global.rotation(), revolute: Some(rv) });
    }
    let epigraph = obs.entries().iter().map(|e| (e.joint - 1, alloc.one())).collect();
    VariableLayout { num_vars: alloc.total(), translation, joints, epigraph }
}

/// Reads a rotation matrix out of a solution vector.
pub fn rotation_value(rot: RotationRef, x: &[f64]) -> nalgebra::Matrix3<f64> {
    match rot {
        RotationRef::Identity => nalgebra::Matrix3::identity(),
        RotationRef::Vars(start) => nalgebra::Matrix3::from_fn(|r, c| x[start + vec_index(r, c)]),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::{forward_kinematics, Joint, JointLimits, ParamVector};
    use crate::sdp::embed::embed_ground_truth;
    use crate::sdp::program::BlockKind;
    use nalgebra::{DMatrix, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn unit(rng: &mut impl Rng) -> Vector3<f64> {
        Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)).normalize()
    }

    // Random tree with a mix of limited, free and fixed joints.
    fn random_tree(rng: &mut impl Rng, n: usize) -> Skeleton {
        let joints = (1..=n)
            .map(|id| {
                let parent = if id == 1 { 0 } else { rng.random_range(1..id) };
                let bone = if id == 1 { Vector3::zeros() } else { unit(rng) * rng.random_range(0.1..0.5) };
                match rng.random_range(0..5) {
                    0 => Joint::fixed(id, parent, bone),
                    1 => Joint::revolute(id, parent, unit(rng), bone, -PI, PI),
                    _ => {
                        let lo = rng.random_range(-PI..PI);
                        let hi = lo + rng.random_range(0.0..2.0 * PI);
                        Joint::revolute(id, parent, unit(rng), bone, lo, hi)
                    }
                }
            })
            .collect();
        Skeleton::new("random", joints).unwrap()
    }

    fn random_pose(rng: &mut impl Rng, s: &Skeleton) -> ParamVector {
        crate::local_ik::random_init_rng(s, rng)
    }

    fn all_observed(s: &Skeleton, p: &ParamVector) -> Observation {
        let x = forward_kinematics(s, p).unwrap();
        Observation::from_pairs((1..=s.len()).map(|i| (i, x[i - 1]))).unwrap()
    }

    #[test]
    fn single_joint_census() {
        let s = Skeleton::new("one", vec![Joint::revolute(1, 0, Vector3::z(), Vector3::x(), -1.0, 1.0)]).unwrap();
        let obs = Observation::from_pairs([(1, Vector3::x())]).unwrap();
        let (p, layout) = build_sdp(&s, &obs).unwrap();
        let census = p.census();
        assert_eq!(census.count(BlockKind::Psd, 10), 3);
        assert_eq!(census.count(BlockKind::Psd, 9), 1);
        assert_eq!(census.count(BlockKind::Psd, 3), 1);
        assert_eq!(census.count(BlockKind::Psd, 4), 1);
        assert_eq!(census.count(BlockKind::Diagonal, 1), 1);
        assert_eq!(p.blocks.len(), 7);
        assert_eq!(layout.num_vars, 3 + 3 + 27 + 2 + 3 * 45 + 1);
        p.validate().unwrap();
    }

    #[test]
    fn census_formula_and_contiguous_layout() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let n = rng.random_range(1..10);
            let s = random_tree(&mut rng, n);
            let pose = random_pose(&mut rng, &s);
            let mut obs = all_observed(&s, &pose);
            if n > 2 {
                obs = Observation::new(obs.entries()[..n / 2].to_vec()).unwrap();
            }
            let (p, layout) = build_sdp(&s, &obs).unwrap();
            let r = s.revolute_count();
            let h = s.joints().iter().filter(|j| HalfSpace::for_limits(&j.limits).is_some()).count();
            let census = p.census();
            assert_eq!(census.count(BlockKind::Psd, 10), 3 * r);
            assert_eq!(census.count(BlockKind::Psd, 9), r);
            assert_eq!(census.count(BlockKind::Psd, 3), r);
            assert_eq!(census.count(BlockKind::Psd, 4), obs.len());
            assert_eq!(census.count(BlockKind::Diagonal, h), usize::from(h > 0));
            assert!(census.psd_sizes().all(|k| [3, 4, 9, 10].contains(&k)));

            let ranges = layout.ranges();
            assert_eq!(ranges[0].start, 0);
            for w in ranges.windows(2) {
                assert_eq!(w[0].end, w[1].start);
            }
            assert_eq!(ranges.last().unwrap().end, layout.num_vars);
            p.validate().unwrap();
        }
    }

    #[test]
    fn fixed_joints_have_no_rotation_variables() {
        let s = Skeleton::new(
            "arm",
            vec![
                Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -1.0, 1.0),
                Joint::fixed(2, 1, Vector3::x()),
                Joint::fixed(3, 2, Vector3::x()),
            ],
        )
        .unwrap();
        let obs = Observation::from_pairs([(3, Vector3::x())]).unwrap();
        let (_, layout) = build_sdp(&s, &obs).unwrap();
        assert!(layout.joints[1].revolute.is_none());
        assert_eq!(layout.joints[1].rotation, layout.joints[0].rotation);
        assert_eq!(layout.joints[2].rotation, layout.joints[0].rotation);
    }

    #[test]
    fn ground_truth_is_feasible() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let n = rng.random_range(1..=10);
            let s = random_tree(&mut rng, n);
            let pose = random_pose(&mut rng, &s);
            let obs = all_observed(&s, &pose);
            let (p, layout) = build_sdp(&s, &obs).unwrap();
            let e = embed_ground_truth(&s, &obs, &pose, &p, &layout).unwrap();
            assert!(e.report.max_equality_residual < 1e-9, "{:?}", e.report);
            assert!(e.report.min_psd_eigenvalue > -1e-9, "{:?}", e.report);
            assert!(e.report.min_diagonal_entry > -1e-9, "{:?}", e.report);
            assert!(e.report.objective.abs() < 1e-20);
        }
    }

    #[test]
    fn limit_violation_breaks_half_space() {
        let s = Skeleton::new(
            "arm",
            vec![
                Joint::revolute(1, 0, Vector3::z(), Vector3::zeros(), -0.5, 0.5),
                Joint::fixed(2, 1, Vector3::x()),
            ],
        )
        .unwrap();
        let pose = ParamVector::new(Vector3::zeros(), vec![0.9, 0.0]);
        let obs = all_observed(&s, &pose);
        let (p, layout) = build_sdp(&s, &obs).unwrap();
        let e = embed_ground_truth(&s, &obs, &pose, &p, &layout).unwrap();
        assert!(e.report.max_equality_residual < 1e-12);
        assert!(e.report.min_diagonal_entry < 0.0);
        assert!(!e.report.is_feasible(1e-9));
        let limits = &s.joints()[0].limits;
        assert!(matches!(limits, JointLimits::Range { .. }));
    }

    #[test]
    fn equalities_are_linearly_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for n in [1, 2, 3, 5] {
            let s = random_tree(&mut rng, n);
            let pose = random_pose(&mut rng, &s);
            let obs = all_observed(&s, &pose);
            let (p, _) = build_sdp(&s, &obs).unwrap();
            let mut a = DMatrix::<f64>::zeros(p.equalities.len(), p.num_vars);
            for (row, e) in p.equalities.iter().enumerate() {
                for &(col, v) in &e.terms {
                    a[(row, col)] += v;
                }
            }
            let sv = a.singular_values();
            assert!(sv.min() > 1e-8, "rank deficient: smallest singular value {}", sv.min());
        }
    }
}
