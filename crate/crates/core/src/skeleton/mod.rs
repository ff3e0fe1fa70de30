//! Kinect skeleton topology, sequence loading and limb-length normalization.

mod io;
mod normalize;

pub use io::{
    load_manifest, load_skeleton_file, parse_manifest, write_canonical, ManifestRow,
    MANIFEST_HEADER,
};
pub use normalize::{fit_reference_lengths, normalize, ReferenceLengths};

pub const NUM_JOINTS: usize = 20;
pub const NUM_LIMBS: usize = 14;
pub const NUM_PARTS: usize = 7;

/// A 3D point or vector, in meters.
pub type Vec3 = [f64; 3];

/// One skeleton frame: all 20 Kinect joints in SDK order.
pub type Frame = [Vec3; NUM_JOINTS];

/// Index of a joint in the Kinect 20-joint order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JointId(pub u8);

impl JointId {
    pub const HIP_CENTER: JointId = JointId(0);
    pub const SPINE: JointId = JointId(1);
    pub const SHOULDER_CENTER: JointId = JointId(2);
    pub const HEAD: JointId = JointId(3);
    pub const SHOULDER_LEFT: JointId = JointId(4);
    pub const ELBOW_LEFT: JointId = JointId(5);
    pub const WRIST_LEFT: JointId = JointId(6);
    pub const HAND_LEFT: JointId = JointId(7);
    pub const SHOULDER_RIGHT: JointId = JointId(8);
    pub const ELBOW_RIGHT: JointId = JointId(9);
    pub const WRIST_RIGHT: JointId = JointId(10);
    pub const HAND_RIGHT: JointId = JointId(11);
    pub const HIP_LEFT: JointId = JointId(12);
    pub const KNEE_LEFT: JointId = JointId(13);
    pub const ANKLE_LEFT: JointId = JointId(14);
    pub const FOOT_LEFT: JointId = JointId(15);
    pub const HIP_RIGHT: JointId = JointId(16);
    pub const KNEE_RIGHT: JointId = JointId(17);
    pub const ANKLE_RIGHT: JointId = JointId(18);
    pub const FOOT_RIGHT: JointId = JointId(19);

    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// Hands, feet and spine are too noisy in Kinect tracking and carry no limb.
    pub fn is_used(self) -> bool {
        !matches!(
            self,
            JointId::HAND_LEFT
                | JointId::HAND_RIGHT
                | JointId::FOOT_LEFT
                | JointId::FOOT_RIGHT
                | JointId::SPINE
        )
    }

    pub fn name(self) -> &'static str {
        JOINT_NAMES[self.index()]
    }

    pub fn all() -> impl Iterator<Item = JointId> {
        (0..NUM_JOINTS as u8).map(JointId)
    }
}

const JOINT_NAMES: [&str; NUM_JOINTS] = [
    "HipCenter",
    "Spine",
    "ShoulderCenter",
    "Head",
    "ShoulderLeft",
    "ElbowLeft",
    "WristLeft",
    "HandLeft",
    "ShoulderRight",
    "ElbowRight",
    "WristRight",
    "HandRight",
    "HipLeft",
    "KneeLeft",
    "AnkleLeft",
    "FootLeft",
    "HipRight",
    "KneeRight",
    "AnkleRight",
    "FootRight",
];

/// A directed limb. `parent` is the joint nearer to HipCenter and acts as the
/// reference joint (sphere center) for the orientation of `child`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Limb {
    pub parent: JointId,
    pub child: JointId,
}

const fn limb(parent: JointId, child: JointId) -> Limb {
    Limb { parent, child }
}

/// The 14 limbs over the 15 used joints.
pub const LIMBS: [Limb; NUM_LIMBS] = [
    limb(JointId::SHOULDER_CENTER, JointId::HEAD),
    limb(JointId::SHOULDER_CENTER, JointId::SHOULDER_LEFT),
    limb(JointId::SHOULDER_LEFT, JointId::ELBOW_LEFT),
    limb(JointId::ELBOW_LEFT, JointId::WRIST_LEFT),
    limb(JointId::SHOULDER_CENTER, JointId::SHOULDER_RIGHT),
    limb(JointId::SHOULDER_RIGHT, JointId::ELBOW_RIGHT),
    limb(JointId::ELBOW_RIGHT, JointId::WRIST_RIGHT),
    limb(JointId::HIP_CENTER, JointId::SHOULDER_CENTER),
    limb(JointId::HIP_CENTER, JointId::HIP_LEFT),
    limb(JointId::HIP_LEFT, JointId::KNEE_LEFT),
    limb(JointId::KNEE_LEFT, JointId::ANKLE_LEFT),
    limb(JointId::HIP_CENTER, JointId::HIP_RIGHT),
    limb(JointId::HIP_RIGHT, JointId::KNEE_RIGHT),
    limb(JointId::KNEE_RIGHT, JointId::ANKLE_RIGHT),
];

/// Limb indices of each body part. The torso limb (ShoulderCenter-HipCenter,
/// index 7) is shared by the left and right hip parts.
pub const PARTS: [&[usize]; NUM_PARTS] = [
    &[0],
    &[1, 2, 3],
    &[4, 5, 6],
    &[7, 8],
    &[9, 10],
    &[7, 11],
    &[12, 13],
];

/// Limb indices in an order where every limb's parent joint has already been
/// placed, starting from HipCenter.
pub(crate) fn limb_traversal_order() -> &'static [usize; NUM_LIMBS] {
    &TRAVERSAL
}

const TRAVERSAL: [usize; NUM_LIMBS] = [7, 0, 1, 2, 3, 4, 5, 6, 8, 9, 10, 11, 12, 13];

/// One performed action: a sequence of frames plus its metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    pub frames: Vec<Frame>,
    pub label: u32,
    pub subject: u32,
    pub instance: u32,
}

impl SkeletonSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }
}

pub(crate) fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}
