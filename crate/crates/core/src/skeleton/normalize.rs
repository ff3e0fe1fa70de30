use serde::{Deserialize, Serialize};

use super::{
    limb_traversal_order, norm, sub, Frame, JointId, SkeletonSequence, Vec3, LIMBS, NUM_LIMBS,
};
use crate::error::{Error, Result};

/// Below this a limb has no usable direction.
pub const DEGENERATE_LENGTH: f64 = 1e-9;

/// Per-limb target lengths, fit on training data and stored with the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceLengths {
    pub lengths: [f64; NUM_LIMBS],
}

impl ReferenceLengths {
    pub fn new(lengths: [f64; NUM_LIMBS]) -> Result<Self> {
        if let Some((l, &len)) = lengths
            .iter()
            .enumerate()
            .find(|(_, &len)| !(len.is_finite() && len > DEGENERATE_LENGTH))
        {
            return Err(Error::DegenerateLimb {
                limb: l,
                detail: format!("reference length {len}"),
            });
        }
        Ok(ReferenceLengths { lengths })
    }
}

/// Mean length of every limb over all training frames.
pub fn fit_reference_lengths(training: &[SkeletonSequence]) -> Result<ReferenceLengths> {
    let mut sums = [0.0f64; NUM_LIMBS];
    let mut count = 0usize;
    for frame in training.iter().flat_map(|s| &s.frames) {
        for (sum, limb) in sums.iter_mut().zip(LIMBS) {
            *sum += norm(sub(frame[limb.child.index()], frame[limb.parent.index()]));
        }
        count += 1;
    }
    if count == 0 {
        return Err(Error::Invalid(
            "no training frames to fit reference lengths".into(),
        ));
    }
    let mut lengths = [0.0; NUM_LIMBS];
    for (l, s) in lengths.iter_mut().zip(sums) {
        *l = s / count as f64;
    }
    ReferenceLengths::new(lengths)
}

/// Rescales every limb to its reference length while keeping its direction,
/// walking the tree out from HipCenter, then moves Head to the origin.
///
/// A limb that collapses to a point in some frame reuses its direction from
/// the most recent frame where it was well defined.
pub fn normalize(seq: &SkeletonSequence, reference: &ReferenceLengths) -> Result<SkeletonSequence> {
    let mut last_dir: [Option<Vec3>; NUM_LIMBS] = [None; NUM_LIMBS];
    let mut frames = Vec::with_capacity(seq.frames.len());
    for (f, src) in seq.frames.iter().enumerate() {
        let mut out: Frame = *src;
        for &l in limb_traversal_order() {
            let limb = LIMBS[l];
            let d = sub(src[limb.child.index()], src[limb.parent.index()]);
            let len = norm(d);
            let dir = if len > DEGENERATE_LENGTH {
                [d[0] / len, d[1] / len, d[2] / len]
            } else {
                last_dir[l].ok_or_else(|| Error::DegenerateLimb {
                    limb: l,
                    detail: format!("zero length in frame {f} with no earlier direction"),
                })?
            };
            last_dir[l] = Some(dir);
            let p = out[limb.parent.index()];
            let r = reference.lengths[l];
            out[limb.child.index()] = [p[0] + r * dir[0], p[1] + r * dir[1], p[2] + r * dir[2]];
        }
        let head = out[JointId::HEAD.index()];
        for j in out.iter_mut() {
            *j = sub(*j, head);
        }
        frames.push(out);
    }
    Ok(SkeletonSequence {
        frames,
        label: seq.label,
        subject: seq.subject,
        instance: seq.instance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::skeleton::testutil::t_pose;
    use crate::skeleton::NUM_JOINTS;
    use proptest::prelude::*;

    fn seq(frames: Vec<Frame>) -> SkeletonSequence {
        SkeletonSequence {
            frames,
            label: 1,
            subject: 1,
            instance: 1,
        }
    }

    fn limb_len(f: &Frame, l: usize) -> f64 {
        norm(sub(f[LIMBS[l].child.index()], f[LIMBS[l].parent.index()]))
    }

    #[test]
    fn mean_of_constant_and_of_two() {
        let f = t_pose();
        let r = fit_reference_lengths(&[seq(vec![f; 4])]).unwrap();
        assert!((r.lengths[6] - 0.25).abs() < 1e-12);

        // head limb 0.2 in one frame, 0.4 in the other
        let mut g = f;
        g[JointId::HEAD.index()] = [0.0, 1.9, 2.0];
        let r = fit_reference_lengths(&[seq(vec![f]), seq(vec![g])]).unwrap();
        assert!((r.lengths[0] - 0.3).abs() < 1e-12);
    }

    #[test]
    fn collapsed_limb_is_degenerate() {
        let mut f = t_pose();
        f[JointId::WRIST_LEFT.index()] = f[JointId::ELBOW_LEFT.index()];
        let err = fit_reference_lengths(&[seq(vec![f; 3])]).unwrap_err();
        assert!(
            matches!(err, Error::DegenerateLimb { limb: 3, .. }),
            "{err}"
        );
    }

    #[test]
    fn fixed_point_up_to_translation() {
        let f = t_pose();
        let r = fit_reference_lengths(&[seq(vec![f])]).unwrap();
        let out = normalize(&seq(vec![f]), &r).unwrap();
        let head = f[JointId::HEAD.index()];
        for (got, joint) in out.frames[0].iter().zip(&f) {
            let expected = sub(*joint, head);
            for (g, e) in got.iter().zip(&expected) {
                assert!((g - e).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_limb_rescaled_along_direction() {
        let mut f = t_pose();
        // right forearm: length 0.6 along +x
        f[JointId::WRIST_RIGHT.index()] = [1.05, 1.45, 2.0];
        let mut lengths = fit_reference_lengths(&[seq(vec![t_pose()])])
            .unwrap()
            .lengths;
        lengths[6] = 0.3;
        let r = ReferenceLengths::new(lengths).unwrap();
        let out = normalize(&seq(vec![f]), &r).unwrap();
        let o = &out.frames[0];
        let d = sub(
            o[JointId::WRIST_RIGHT.index()],
            o[JointId::ELBOW_RIGHT.index()],
        );
        assert!((d[0] - 0.3).abs() < 1e-12 && d[1].abs() < 1e-12 && d[2].abs() < 1e-12);
    }

    #[test]
    fn zero_length_limb_reuses_previous_direction() {
        let f = t_pose();
        let mut g = f;
        g[JointId::WRIST_RIGHT.index()] = g[JointId::ELBOW_RIGHT.index()];
        let r = fit_reference_lengths(&[seq(vec![f])]).unwrap();
        let out = normalize(&seq(vec![f, g]), &r).unwrap();
        let d = sub(
            out.frames[1][JointId::WRIST_RIGHT.index()],
            out.frames[1][JointId::ELBOW_RIGHT.index()],
        );
        assert!((d[0] - 0.25).abs() < 1e-12);

        // degenerate in the first frame has nothing to fall back on
        assert!(normalize(&seq(vec![g, f]), &r).is_err());
    }

    #[test]
    fn unused_joints_translated_only() {
        let f = t_pose();
        let mut lengths = [0.5; NUM_LIMBS];
        lengths[0] = 0.2;
        let r = ReferenceLengths::new(lengths).unwrap();
        let out = normalize(&seq(vec![f]), &r).unwrap();
        let o = out.frames[0];
        // hip center is the fixed root; the offset it moved by is the head translation
        let shift = sub(
            o[JointId::HIP_CENTER.index()],
            f[JointId::HIP_CENTER.index()],
        );
        for j in [JointId::SPINE, JointId::HAND_LEFT, JointId::FOOT_RIGHT] {
            let moved = sub(o[j.index()], f[j.index()]);
            for a in 0..3 {
                assert!((moved[a] - shift[a]).abs() < 1e-12);
            }
        }
    }

    fn jittered(base: Frame, noise: &[f64]) -> Frame {
        let mut f = base;
        for (j, p) in f.iter_mut().enumerate() {
            for a in 0..3 {
                p[a] += noise[j * 3 + a];
            }
        }
        f
    }

    proptest! {
        #[test]
        fn normalize_invariants(
            noise in prop::collection::vec(-0.05f64..0.05, NUM_JOINTS * 3),
            scale in 0.5f64..2.0,
        ) {
            let f = jittered(t_pose(), &noise).map(|p| p.map(|c| c * scale));
            let r = fit_reference_lengths(&[seq(vec![t_pose()])]).unwrap();
            let once = normalize(&seq(vec![f]), &r).unwrap();
            let o = &once.frames[0];
            for l in 0..NUM_LIMBS {
                prop_assert!((limb_len(o, l) - r.lengths[l]).abs() <= 1e-6);
                let a = sub(f[LIMBS[l].child.index()], f[LIMBS[l].parent.index()]);
                let b = sub(o[LIMBS[l].child.index()], o[LIMBS[l].parent.index()]);
                let cos = (a[0] * b[0] + a[1] * b[1] + a[2] * b[2]) / (norm(a) * norm(b));
                prop_assert!((cos - 1.0).abs() <= 1e-9);
            }
            prop_assert!(norm(o[JointId::HEAD.index()]) <= 1e-9);
            let twice = normalize(&once, &r).unwrap();
            for (p, q) in o.iter().zip(&twice.frames[0]) {
                for a in 0..3 {
                    prop_assert!((p[a] - q[a]).abs() <= 1e-6);
                }
            }
        }
    }
}
