use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kernel::{kernel_matrix, kernel_rooted, rooted};
use super::smo::solve;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmConfig {
    #[serde(default = "default_reg")]
    pub reg: f64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_passes")]
    pub max_passes: usize,
}

fn default_reg() -> f64 {
    1.0
}
fn default_tol() -> f64 {
    1e-3
}
fn default_max_passes() -> usize {
    100
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            reg: default_reg(),
            tol: default_tol(),
            max_passes: default_max_passes(),
        }
    }
}

impl SvmConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.reg) || !positive(self.tol) || self.max_passes == 0 {
            return Err(Error::Config(format!(
                "svm needs reg > 0, tol > 0 and max_passes >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// One binary problem, `positive` vs `negative` class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairModel {
    pub positive: u32,
    pub negative: u32,
    /// Indices into [`SvmModel::support_vectors`].
    pub support: Vec<usize>,
    /// Dual variables of the support vectors, each in `[0, reg]`.
    pub alpha: Vec<f64>,
    /// `+1` for the positive class, `-1` otherwise.
    pub sign: Vec<i8>,
    pub rho: f64,
}

impl PairModel {
    fn decision(&self, k_to_sv: &[f64]) -> f64 {
        self.support
            .iter()
            .zip(&self.alpha)
            .zip(&self.sign)
            .map(|((&s, &a), &y)| a * y as f64 * k_to_sv[s])
            .sum::<f64>()
            - self.rho
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub classes: Vec<u32>,
    pub dim: usize,
    pub support_vectors: Vec<Vec<u32>>,
    pub pairs: Vec<PairModel>,
}

/// Per-pair solver diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub positive: u32,
    pub negative: u32,
    pub iterations: usize,
    pub converged: bool,
    pub gap: f64,
    /// All histograms of both classes are identical; the pair has no margin.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingReport {
    pub pairs: Vec<PairReport>,
}

/// One-vs-one training: an SMO problem for every pair of classes.
/// Support indices, dual weights, signs, rho and diagnostics of one pair.
type SolvedPair = (Vec<usize>, Vec<f64>, Vec<f64>, f64, PairReport);

pub fn train(
    samples: &[Vec<u32>],
    labels: &[u32],
    cfg: &SvmConfig,
) -> Result<(SvmModel, TrainingReport)> {
    cfg.validate()?;
    if samples.len() != labels.len() {
        return Err(Error::LengthMismatch {
            expected: samples.len(),
            actual: labels.len(),
        });
    }
    let classes: Vec<u32> = {
        let mut c = labels.to_vec();
        c.sort_unstable();
        c.dedup();
        c
    };
    if classes.len() < 2 {
        return Err(Error::Invalid(
            "svm training needs at least 2 classes".into(),
        ));
    }
    let dim = samples[0].len();
    let gram = kernel_matrix(samples)?;

    let mut pairs = Vec::new();
    for (a, &pos) in classes.iter().enumerate() {
        for &neg in &classes[a + 1..] {
            pairs.push((pos, neg));
        }
    }
    let solved: Vec<SolvedPair> = pairs
        .par_iter()
        .map(|&(pos, neg)| {
            let idx: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i] == pos || labels[i] == neg)
                .collect();
            let y: Vec<f64> = idx
                .iter()
                .map(|&i| if labels[i] == pos { 1.0 } else { -1.0 })
                .collect();
            let degenerate = idx.iter().all(|&i| samples[i] == samples[idx[0]]);
            if degenerate {
                let report = PairReport {
                    positive: pos,
                    negative: neg,
                    iterations: 0,
                    converged: true,
                    gap: 0.0,
                    degenerate,
                };
                return (idx, vec![0.0; y.len()], y, 0.0, report);
            }
            let k: Vec<Vec<f64>> = idx
                .iter()
                .map(|&i| idx.iter().map(|&j| gram[i][j]).collect())
                .collect();
            let sol = solve(&k, &y, cfg.reg, cfg.tol, cfg.max_passes * idx.len().max(1));
            let report = PairReport {
                positive: pos,
                negative: neg,
                iterations: sol.iterations,
                converged: sol.converged,
                gap: sol.gap,
                degenerate,
            };
            (idx, sol.alpha, y, sol.rho, report)
        })
        .collect();

    // support vectors pooled across pairs, numbered by first training index
    let mut pool: BTreeMap<usize, usize> = BTreeMap::new();
    for (idx, alpha, ..) in &solved {
        for (&i, &a) in idx.iter().zip(alpha) {
            if a > 0.0 {
                pool.insert(i, 0);
            }
        }
    }
    for (slot, v) in pool.values_mut().enumerate() {
        *v = slot;
    }
    let support_vectors = pool.keys().map(|&i| samples[i].clone()).collect();

    let mut report = TrainingReport::default();
    let mut pair_models = Vec::with_capacity(solved.len());
    for (idx, alpha, y, rho, pr) in solved {
        let mut m = PairModel {
            positive: pr.positive,
            negative: pr.negative,
            support: Vec::new(),
            alpha: Vec::new(),
            sign: Vec::new(),
            rho,
        };
        for ((&i, &a), &yi) in idx.iter().zip(&alpha).zip(&y) {
            if a > 0.0 {
                m.support.push(pool[&i]);
                m.alpha.push(a);
                m.sign.push(if yi > 0.0 { 1 } else { -1 });
            }
        }
        pair_models.push(m);
        report.pairs.push(pr);
    }
    Ok((
        SvmModel {
            classes,
            dim,
            support_vectors,
            pairs: pair_models,
        },
        report,
    ))
}

impl SvmModel {
    /// Decision values of every pair, in `pairs` order.
    pub fn decisions(&self, feature: &[u32]) -> Result<Vec<f64>> {
        if feature.len() != self.dim {
            return Err(Error::LengthMismatch {
                expected: self.dim,
                actual: feature.len(),
            });
        }
        let x = rooted(feature);
        let k: Vec<f64> = self
            .support_vectors
            .iter()
            .map(|sv| kernel_rooted(&x, &rooted(sv)))
            .collect();
        Ok(self.pairs.iter().map(|p| p.decision(&k)).collect())
    }
}

/// Majority vote over pairs; ties go to the larger summed decision value,
/// then to the smaller class id.
pub fn predict(model: &SvmModel, feature: &[u32]) -> Result<u32> {
    let dec = model.decisions(feature)?;
    let pos_of = |c: u32| {
        model
            .classes
            .binary_search(&c)
            .expect("pair class in model")
    };
    let mut votes = vec![0usize; model.classes.len()];
    let mut sums = vec![0.0f64; model.classes.len()];
    for (p, &d) in model.pairs.iter().zip(&dec) {
        let (a, b) = (pos_of(p.positive), pos_of(p.negative));
        if d >= 0.0 {
            votes[a] += 1;
        } else {
            votes[b] += 1;
        }
        sums[a] += d;
        sums[b] -= d;
    }
    let mut best = 0;
    for c in 1..model.classes.len() {
        if votes[c] > votes[best] || (votes[c] == votes[best] && sums[c] > sums[best]) {
            best = c;
        }
    }
    Ok(model.classes[best])
}
