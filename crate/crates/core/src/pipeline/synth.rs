//! Deterministic synthetic skeleton actions.
//!
//! Each class is a motion program: per-limb directions as a function of the
//! normalized time `u` in `[0, 1)`, posed on the 14-limb tree by forward
//! kinematics. Subjects differ in limb lengths and a small per-limb posture
//! bias; instances differ in timing and coordinate noise.
//!
//! Classes 1 and 2 form an order pair: both sweep the same grid of
//! (left arm, right arm) elevations, class 1 with the right arm as the fast
//! axis and class 2 with the left arm as the fast axis. Class 2's frames are
//! a permutation of class 1's frames for the same subject and instance, so
//! their per-frame poses are identical as multisets and only windows spanning
//! several frames can tell them apart. An exact time reversal would not do:
//! reversing a sequence maps every window onto a window with the same item
//! set.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::skeleton::{
    limb_traversal_order, write_canonical, Frame, JointId, SkeletonSequence, Vec3, LIMBS,
    MANIFEST_HEADER, NUM_JOINTS, NUM_LIMBS,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub classes: u32,
    pub subjects: u32,
    pub instances: u32,
    pub frames: usize,
    pub seed: u64,
    /// Standard deviation of coordinate noise, meters.
    pub noise: f64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            classes: 4,
            subjects: 6,
            instances: 2,
            frames: 40,
            seed: 0,
            noise: 0.004,
        }
    }
}

impl SynthSpec {
    fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.subjects == 0 || self.instances == 0 || self.frames == 0 {
            return Err(Error::Config(
                "synthetic counts must all be at least 1".into(),
            ));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Config(
                "noise must be a finite non-negative number".into(),
            ));
        }
        Ok(())
    }
}

const BASE_LENGTHS: [f64; NUM_LIMBS] = [
    0.20, 0.18, 0.28, 0.25, 0.18, 0.28, 0.25, 0.50, 0.10, 0.42, 0.40, 0.10, 0.42, 0.40,
];

const DOWN: Vec3 = [0.0, -1.0, 0.0];
const UP: Vec3 = [0.0, 1.0, 0.0];

fn unit(v: Vec3) -> Vec3 {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

fn rest_pose() -> [Vec3; NUM_LIMBS] {
    [
        UP,
        [-1.0, 0.0, 0.0],
        DOWN,
        DOWN,
        [1.0, 0.0, 0.0],
        DOWN,
        DOWN,
        UP,
        unit([-0.3, -0.1, 0.0]),
        DOWN,
        DOWN,
        unit([0.3, -0.1, 0.0]),
        DOWN,
        DOWN,
    ]
}

/// Forward raise by `deg` degrees from hanging down.
fn raise(deg: f64) -> Vec3 {
    let r = deg.to_radians();
    [0.0, -r.cos(), r.sin()]
}

/// Sideways raise; `side` is -1 for left, +1 for right.
fn abduct(deg: f64, side: f64) -> Vec3 {
    let r = deg.to_radians();
    [side * r.sin(), -r.cos(), 0.0]
}

/// Triangle wave in `[0, 1]` with `reps` peaks over `u in [0, 1)`.
fn tri(u: f64, reps: f64) -> f64 {
    let x = (u * reps).fract();
    1.0 - (2.0 * x - 1.0).abs()
}

const GRID_SLOW: [f64; 4] = [0.0, 45.0, 90.0, 135.0];
const GRID_FAST: [f64; 5] = [0.0, 45.0, 90.0, 135.0, 180.0];

fn grid_cell(u: f64) -> (usize, usize) {
    let cells = GRID_SLOW.len() * GRID_FAST.len();
    let cell = ((u * cells as f64) as usize).min(cells - 1);
    (cell / GRID_FAST.len(), cell % GRID_FAST.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Motion {
    Grid,
    Squat,
    Wave,
    Kick,
    Bow,
    Reach,
}

const ATOMIC: [Motion; 5] = [
    Motion::Squat,
    Motion::Wave,
    Motion::Kick,
    Motion::Bow,
    Motion::Reach,
];

impl Motion {
    fn apply(self, u: f64, dirs: &mut [Vec3; NUM_LIMBS]) {
        match self {
            Motion::Grid => {
                let (slow, fast) = grid_cell(u);
                dirs[2] = raise(GRID_SLOW[slow]);
                dirs[3] = raise(GRID_SLOW[slow]);
                dirs[5] = raise(GRID_FAST[fast]);
                dirs[6] = raise(GRID_FAST[fast]);
            }
            Motion::Squat => {
                let th = 90.0 * tri(u, 1.0);
                dirs[9] = raise(th);
                dirs[12] = raise(th);
                for l in [2, 3, 5, 6] {
                    dirs[l] = raise(90.0);
                }
            }
            Motion::Wave => {
                let th = 160.0 * tri(u, 2.0);
                dirs[2] = abduct(th, -1.0);
                dirs[3] = abduct(th, -1.0);
                dirs[5] = abduct(th, 1.0);
                dirs[6] = abduct(th, 1.0);
            }
            Motion::Kick => {
                let th = 80.0 * tri(u, 2.0);
                dirs[12] = raise(th);
                dirs[13] = raise(0.5 * th);
            }
            Motion::Bow => {
                let th = 60.0f64.to_radians() * tri(u, 1.0);
                dirs[7] = [0.0, th.cos(), th.sin()];
                dirs[0] = [0.0, (1.3 * th).cos(), (1.3 * th).sin()];
            }
            Motion::Reach => {
                let th = 180.0 * tri(u, 1.0);
                dirs[5] = abduct(th, 1.0);
                dirs[6] = abduct(th, 1.0);
                dirs[2] = raise(45.0);
                dirs[3] = raise(45.0);
            }
        }
    }
}

/// Motion programs of a class (1-based). Classes past the single programs
/// combine two of them.
fn class_motions(class: u32) -> Vec<Motion> {
    match class {
        1 | 2 => vec![Motion::Grid],
        3..=7 => vec![ATOMIC[class as usize - 3]],
        _ => {
            let idx = (class - 8) as usize;
            let a = idx % ATOMIC.len();
            let b = (a + 1 + (idx / ATOMIC.len()) % (ATOMIC.len() - 1)) % ATOMIC.len();
            vec![ATOMIC[a], ATOMIC[b]]
        }
    }
}

struct Body {
    lengths: [f64; NUM_LIMBS],
    bias: [Vec3; NUM_LIMBS],
}

fn subject_body(seed: u64, subject: u32) -> Body {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(subject as u64);
    let scale = rng.gen_range(0.85..1.15);
    let mut lengths = BASE_LENGTHS;
    for l in lengths.iter_mut() {
        *l *= scale * rng.gen_range(0.92..1.08);
    }
    let mut bias = [[0.0; 3]; NUM_LIMBS];
    for b in bias.iter_mut() {
        for c in b.iter_mut() {
            *c = rng.gen_range(-0.03..0.03);
        }
    }
    Body { lengths, bias }
}

fn pose(body: &Body, dirs: &[Vec3; NUM_LIMBS], root: Vec3) -> Frame {
    let mut f = [[0.0; 3]; NUM_JOINTS];
    f[JointId::HIP_CENTER.index()] = root;
    for &l in limb_traversal_order() {
        let d = dirs[l];
        let b = body.bias[l];
        let d = unit([d[0] + b[0], d[1] + b[1], d[2] + b[2]]);
        let p = f[LIMBS[l].parent.index()];
        let len = body.lengths[l];
        f[LIMBS[l].child.index()] = [p[0] + len * d[0], p[1] + len * d[1], p[2] + len * d[2]];
    }
    let at = |f: &Frame, j: JointId| f[j.index()];
    let hc = at(&f, JointId::HIP_CENTER);
    let sc = at(&f, JointId::SHOULDER_CENTER);
    f[JointId::SPINE.index()] = [
        (hc[0] + sc[0]) / 2.0,
        (hc[1] + sc[1]) / 2.0,
        (hc[2] + sc[2]) / 2.0,
    ];
    for (hand, wrist, elbow) in [
        (JointId::HAND_LEFT, JointId::WRIST_LEFT, JointId::ELBOW_LEFT),
        (
            JointId::HAND_RIGHT,
            JointId::WRIST_RIGHT,
            JointId::ELBOW_RIGHT,
        ),
    ] {
        let (w, e) = (at(&f, wrist), at(&f, elbow));
        f[hand.index()] = [
            w[0] + 0.3 * (w[0] - e[0]),
            w[1] + 0.3 * (w[1] - e[1]),
            w[2] + 0.3 * (w[2] - e[2]),
        ];
    }
    for (foot, ankle) in [
        (JointId::FOOT_LEFT, JointId::ANKLE_LEFT),
        (JointId::FOOT_RIGHT, JointId::ANKLE_RIGHT),
    ] {
        let a = at(&f, ankle);
        f[foot.index()] = [a[0], a[1] - 0.05, a[2] + 0.1];
    }
    f
}

fn instance_rng(seed: u64, class: u32, subject: u32, instance: u32) -> ChaCha8Rng {
    // the order pair shares its noise stream
    let class = if class == 2 { 1 } else { class };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((class as u64) << 42) | ((subject as u64) << 21) | instance as u64 | (1 << 63));
    rng
}

/// Frames of one action instance.
pub fn generate_frames(spec: &SynthSpec, class: u32, subject: u32, instance: u32) -> Vec<Frame> {
    let body = subject_body(spec.seed, subject);
    let mut rng = instance_rng(spec.seed, class, subject, instance);
    let motions = class_motions(class);
    let warp = rng.gen_range(0.9..1.1);
    let root = [
        rng.gen_range(-0.2..0.2),
        1.0,
        2.5 + rng.gen_range(-0.2..0.2),
    ];
    let noise = Normal::new(0.0, spec.noise.max(0.0)).expect("finite noise");
    let n = spec.frames;

    let mut frames: Vec<Frame> = (0..n)
        .map(|t| {
            let u = (t as f64 + 0.5) / n as f64;
            let mut dirs = rest_pose();
            for m in &motions {
                let u = if *m == Motion::Grid { u } else { u.powf(warp) };
                m.apply(u, &mut dirs);
            }
            let mut f = pose(&body, &dirs, root);
            if spec.noise > 0.0 {
                for p in f.iter_mut() {
                    for c in p.iter_mut() {
                        *c += noise.sample(&mut rng);
                    }
                }
            }
            f
        })
        .collect();

    if class == 2 {
        // transpose the grid traversal: the left arm becomes the fast axis
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&t| {
            let (slow, fast) = grid_cell((t as f64 + 0.5) / n as f64);
            (fast, slow, t)
        });
        frames = order.into_iter().map(|t| frames[t]).collect();
    }
    frames
}

/// All sequences, subject-major, then class, then instance.
pub fn generate_sequences(spec: &SynthSpec) -> Result<Vec<SkeletonSequence>> {
    spec.validate()?;
    let mut out = Vec::new();
    for subject in 1..=spec.subjects {
        for class in 1..=spec.classes {
            for instance in 1..=spec.instances {
                out.push(SkeletonSequence {
                    frames: generate_frames(spec, class, subject, instance),
                    label: class,
                    subject,
                    instance,
                });
            }
        }
    }
    Ok(out)
}

pub fn file_name(class: u32, subject: u32, instance: u32) -> String {
    format!("a{class:02}_s{subject:02}_e{instance:02}_skeleton.txt")
}

/// Writes one canonical skeleton file per sequence plus `manifest.csv`, and
/// returns the manifest path.
pub fn generate_synthetic(spec: &SynthSpec, out_dir: &Path) -> Result<PathBuf> {
    let seqs = generate_sequences(spec)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut manifest = format!("{MANIFEST_HEADER}\n");
    for s in &seqs {
        let name = file_name(s.label, s.subject, s.instance);
        write_canonical(&out_dir.join(&name), &s.frames)?;
        manifest += &format!("{name},{},{},{}\n", s.label, s.subject, s.instance);
    }
    let path = out_dir.join("manifest.csv");
    fs::write(&path, manifest).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::EncoderConfig;
    use crate::features::PartEncoder;
    use crate::skeleton::{fit_reference_lengths, normalize};
    use crate::transactions::{build_transactions, WindowConfig};

    fn small() -> SynthSpec {
        SynthSpec {
            classes: 3,
            subjects: 2,
            instances: 1,
            frames: 40,
            seed: 3,
            noise: 0.004,
        }
    }

    #[test]
    fn counts() {
        let spec = SynthSpec::default();
        let seqs = generate_sequences(&spec).unwrap();
        assert_eq!(seqs.len(), 48);
        assert!(seqs.iter().all(|s| s.len() == 40));
    }

    #[test]
    fn deterministic() {
        assert_eq!(
            generate_sequences(&small()).unwrap(),
            generate_sequences(&small()).unwrap()
        );
        let other = SynthSpec { seed: 4, ..small() };
        assert_ne!(
            generate_sequences(&small()).unwrap(),
            generate_sequences(&other).unwrap()
        );
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(generate_sequences(&SynthSpec {
            frames: 0,
            ..small()
        })
        .is_err());
    }

    #[test]
    fn order_pair_is_a_frame_permutation() {
        let spec = small();
        let a = generate_frames(&spec, 1, 2, 1);
        let b = generate_frames(&spec, 2, 2, 1);
        assert_ne!(a, b);
        let key = |f: &Frame| f.iter().flatten().map(|c| c.to_bits()).collect::<Vec<_>>();
        let mut ka: Vec<_> = a.iter().map(key).collect();
        let mut kb: Vec<_> = b.iter().map(key).collect();
        ka.sort();
        kb.sort();
        assert_eq!(ka, kb);
    }

    fn windows(frames: &[Frame], window: usize) -> Vec<Vec<u32>> {
        let seq = SkeletonSequence {
            frames: frames.to_vec(),
            label: 1,
            subject: 1,
            instance: 1,
        };
        let r = fit_reference_lengths(std::slice::from_ref(&seq)).unwrap();
        let enc = PartEncoder::new(&EncoderConfig::new(0.15, 200).unwrap()).unwrap();
        let parts = enc
            .encode_frames(&normalize(&seq, &r).unwrap().frames)
            .unwrap();
        let mut t: Vec<_> = build_transactions(&parts, &WindowConfig { window, stride: 1 }, 0)
            .unwrap()
            .into_iter()
            .map(|t| t.items)
            .collect();
        t.sort();
        t
    }

    #[test]
    fn order_pair_collapses_only_without_temporal_windows() {
        let spec = small();
        let a = generate_frames(&spec, 1, 1, 1);
        let b = generate_frames(&spec, 2, 1, 1);
        assert_eq!(windows(&a, 1), windows(&b, 1));
        assert_ne!(windows(&a, 3), windows(&b, 3));
    }

    #[test]
    fn exact_time_reversal_is_invisible_to_windows() {
        let spec = small();
        let fwd = generate_frames(&spec, 3, 1, 1);
        let rev: Vec<_> = fwd.iter().rev().copied().collect();
        for c in [1, 2, 3, 5] {
            assert_eq!(windows(&fwd, c), windows(&rev, c));
        }
    }

    #[test]
    fn files_and_manifest() {
        let dir = tempfile::TempDir::new().unwrap();
        let spec = SynthSpec {
            classes: 2,
            subjects: 1,
            instances: 2,
            frames: 5,
            ..small()
        };
        let m = generate_synthetic(&spec, dir.path()).unwrap();
        let rows = crate::skeleton::parse_manifest(&m).unwrap();
        assert_eq!(rows.len(), 4);
        let seqs = crate::skeleton::load_manifest(&m).unwrap();
        assert_eq!(seqs[3].label, 2);
        assert_eq!(seqs[3].instance, 2);
        assert_eq!(seqs[0].frames.len(), 5);
    }

    #[test]
    fn many_classes_have_programs() {
        for c in 1..=30 {
            assert!(!class_motions(c).is_empty());
        }
        assert_ne!(class_motions(8), class_motions(9));
    }
}
