//! Quantized limb orientations and part-state items.
//!
//! Each limb's unit direction (child minus parent, normalized) is quantized
//! per axis into {-1, 0, 1}, giving one of 27 limb states. The limb states of
//! a body part are packed base-27 and folded into that part's slice of the
//! `ndf` item alphabet, so one frame yields 7 items.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::skeleton::{norm, sub, Frame, Vec3, LIMBS, NUM_LIMBS, NUM_PARTS, PARTS};

pub const LIMB_STATES: u32 = 27;

/// An itemset member, in `1..=ndf`.
pub type Item = u32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EncoderConfig {
    pub threshold: f64,
    pub ndf: u32,
    #[serde(default = "default_dof_weights")]
    pub dof_weights: [f64; NUM_PARTS],
}

/// Number of limbs in each part.
pub fn default_dof_weights() -> [f64; NUM_PARTS] {
    PARTS.map(|p| p.len() as f64)
}

impl EncoderConfig {
    pub fn new(threshold: f64, ndf: u32) -> Result<Self> {
        let cfg = EncoderConfig {
            threshold,
            ndf,
            dof_weights: default_dof_weights(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Config(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.ndf < NUM_PARTS as u32 {
            return Err(Error::Config(format!(
                "ndf must be at least 7, got {}",
                self.ndf
            )));
        }
        if self
            .dof_weights
            .iter()
            .any(|w| !(w.is_finite() && *w > 0.0))
        {
            return Err(Error::Config("every dof weight must be positive".into()));
        }
        Ok(())
    }

    /// Number of item values given to each part.
    ///
    /// Proportional to the dof weights, at least 1 each. When rounding
    /// overshoots `ndf`, the largest budget (lowest index on ties) gives up
    /// one state at a time.
    pub fn budgets(&self) -> [u32; NUM_PARTS] {
        let total: f64 = self.dof_weights.iter().sum();
        let mut b = self
            .dof_weights
            .map(|w| ((self.ndf as f64 * w / total).round() as u32).max(1));
        while b.iter().sum::<u32>() > self.ndf {
            let (i, _) = b
                .iter()
                .enumerate()
                .rev()
                .max_by_key(|(_, &v)| v)
                .expect("seven parts");
            b[i] -= 1;
        }
        b
    }

    /// First item of part `p` is `offsets()[p] + 1`.
    pub fn offsets(&self) -> [u32; NUM_PARTS] {
        let b = self.budgets();
        let mut o = [0; NUM_PARTS];
        for p in 1..NUM_PARTS {
            o[p] = o[p - 1] + b[p - 1];
        }
        o
    }
}

/// 14 limb states, one per limb, each in `0..27`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LimbStateFrame(pub [u8; NUM_LIMBS]);

/// The 7 part-state items of one frame, one per part.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct PartStateFrame(pub [Item; NUM_PARTS]);

/// Unit vector pointing from `parent` to `child`.
pub fn limb_unit_vector(child: Vec3, parent: Vec3) -> Result<Vec3> {
    let d = sub(child, parent);
    let len = norm(d);
    if len <= 1e-9 {
        return Err(Error::DegenerateLimb {
            limb: usize::MAX,
            detail: format!("joints coincide (distance {len:e})"),
        });
    }
    Ok([d[0] / len, d[1] / len, d[2] / len])
}

pub fn quantize_axis(delta: f64, threshold: f64) -> i8 {
    if delta.abs() <= threshold {
        0
    } else if delta > threshold {
        1
    } else {
        -1
    }
}

/// Packs the quantized axes as `(qx+1)*9 + (qy+1)*3 + (qz+1)`.
pub fn limb_state(unit: Vec3, threshold: f64) -> u8 {
    let q = unit.map(|c| (quantize_axis(c, threshold) + 1) as u8);
    q[0] * 9 + q[1] * 3 + q[2]
}

pub fn limb_states(frame: &Frame, threshold: f64) -> Result<LimbStateFrame> {
    let mut s = [0u8; NUM_LIMBS];
    for (l, (state, limb)) in s.iter_mut().zip(LIMBS).enumerate() {
        let u = limb_unit_vector(frame[limb.child.index()], frame[limb.parent.index()]).map_err(
            |_| Error::DegenerateLimb {
                limb: l,
                detail: "joints coincide".into(),
            },
        )?;
        *state = limb_state(u, threshold);
    }
    Ok(LimbStateFrame(s))
}

/// Maps limb states to part items.
#[derive(Debug, Clone)]
pub struct PartEncoder {
    threshold: f64,
    budgets: [u32; NUM_PARTS],
    offsets: [u32; NUM_PARTS],
}

impl PartEncoder {
    pub fn new(cfg: &EncoderConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(PartEncoder {
            threshold: cfg.threshold,
            budgets: cfg.budgets(),
            offsets: cfg.offsets(),
        })
    }

    pub fn parts(&self, limbs: &LimbStateFrame) -> PartStateFrame {
        let mut items = [0; NUM_PARTS];
        for (p, item) in items.iter_mut().enumerate() {
            let raw = PARTS[p]
                .iter()
                .rev()
                .fold(0u32, |acc, &l| acc * LIMB_STATES + limbs.0[l] as u32);
            *item = self.offsets[p] + raw % self.budgets[p] + 1;
        }
        PartStateFrame(items)
    }

    pub fn encode_frame(&self, frame: &Frame) -> Result<PartStateFrame> {
        Ok(self.parts(&limb_states(frame, self.threshold)?))
    }

    pub fn encode_frames(&self, frames: &[Frame]) -> Result<Vec<PartStateFrame>> {
        frames.iter().map(|f| self.encode_frame(f)).collect()
    }
}

pub fn encode_frame(frame: &Frame, cfg: &EncoderConfig) -> Result<PartStateFrame> {
    PartEncoder::new(cfg)?.encode_frame(frame)
}
