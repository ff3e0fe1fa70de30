//! Grid search over pipeline parameters with a subject-wise holdout inside
//! the training split.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::PipelineConfig;
use super::run::{evaluate_on, split_sequences, train_on};
use crate::error::{Error, Result};
use crate::skeleton::SkeletonSequence;

/// Candidate values per parameter. A missing list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub threshold: Option<Vec<f64>>,
    pub ndf: Option<Vec<u32>>,
    pub window: Option<Vec<usize>>,
    pub k: Option<Vec<usize>>,
    pub min_support: Option<Vec<usize>>,
    pub max_support: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub threshold: f64,
    pub ndf: u32,
    pub window: usize,
    pub k: usize,
    pub min_support: usize,
    pub max_support: usize,
}

impl GridPoint {
    fn of(cfg: &PipelineConfig) -> Self {
        GridPoint {
            threshold: cfg.features.threshold,
            ndf: cfg.features.ndf,
            window: cfg.windows.window,
            k: cfg.selection.k,
            min_support: cfg.mining.min_support,
            max_support: cfg.mining.max_support,
        }
    }

    pub fn apply(&self, base: &PipelineConfig) -> PipelineConfig {
        let mut c = base.clone();
        c.features.threshold = self.threshold;
        c.features.ndf = self.ndf;
        c.windows.window = self.window;
        c.selection.k = self.k;
        c.mining.min_support = self.min_support;
        c.mining.max_support = self.max_support;
        c
    }
}

fn values<T: Clone>(list: &Option<Vec<T>>, base: T, name: &str) -> Result<Vec<T>> {
    match list {
        None => Ok(vec![base]),
        Some(v) if v.is_empty() => Err(Error::Config(format!("empty grid for `{name}`"))),
        Some(v) => Ok(v.clone()),
    }
}

impl Grid {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    /// Cartesian product, last parameter varying fastest.
    pub fn points(&self, base: &PipelineConfig) -> Result<Vec<GridPoint>> {
        let b = GridPoint::of(base);
        let thresholds = values(&self.threshold, b.threshold, "threshold")?;
        let ndfs = values(&self.ndf, b.ndf, "ndf")?;
        let windows = values(&self.window, b.window, "window")?;
        let ks = values(&self.k, b.k, "k")?;
        let mins = values(&self.min_support, b.min_support, "min_support")?;
        let maxs = values(&self.max_support, b.max_support, "max_support")?;
        let mut out = Vec::new();
        for &threshold in &thresholds {
            for &ndf in &ndfs {
                for &window in &windows {
                    for &k in &ks {
                        for &min_support in &mins {
                            for &max_support in &maxs {
                                out.push(GridPoint {
                                    threshold,
                                    ndf,
                                    window,
                                    k,
                                    min_support,
                                    max_support,
                                });
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub point: GridPoint,
    /// Validation accuracy in percent; `None` when the run failed.
    pub accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub fit_subjects: Vec<u32>,
    pub validation_subjects: Vec<u32>,
    pub results: Vec<GridResult>,
    pub best: usize,
}

impl CrossvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

/// Shuffles the training subjects with the config seed and holds out the
/// last third.
pub fn holdout_subjects(subjects: &[u32], seed: u64) -> Result<(Vec<u32>, Vec<u32>)> {
    let mut s = subjects.to_vec();
    s.sort_unstable();
    s.dedup();
    if s.len() < 3 {
        return Err(Error::Invalid(format!(
            "cross-validation needs at least 3 training subjects, found {}",
            s.len()
        )));
    }
    s.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_fit = (2 * s.len()).div_ceil(3);
    let validation = s.split_off(n_fit);
    Ok((s, validation))
}

/// Best result: highest accuracy, then smaller K, then smaller NDF, then
/// grid order.
fn best_index(results: &[GridResult]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, r) in results.iter().enumerate() {
        let Some(acc) = r.accuracy else { continue };
        let better = match best {
            None => true,
            Some(b) => {
                let (bp, bacc) = (
                    &results[b].point,
                    results[b].accuracy.unwrap_or(f64::NEG_INFINITY),
                );
                acc > bacc || (acc == bacc && (r.point.k, r.point.ndf) < (bp.k, bp.ndf))
            }
        };
        if better {
            best = Some(i);
        }
    }
    best
}

/// Runs every grid point on the holdout and returns the winning config
/// (with the base split) together with the full report.
pub fn run_crossval(
    base: &PipelineConfig,
    seqs: Vec<SkeletonSequence>,
    grid: &Grid,
) -> Result<(PipelineConfig, CrossvalReport)> {
    base.validate()?;
    let points = grid.points(base)?;
    let (train, _) = split_sequences(seqs, &base.split);
    let subjects: Vec<u32> = train.iter().map(|s| s.subject).collect();
    let (fit_subjects, validation_subjects) = holdout_subjects(&subjects, base.seed)?;
    let (fit, validation): (Vec<_>, Vec<_>) = train
        .into_iter()
        .partition(|s| fit_subjects.contains(&s.subject));

    let results: Vec<GridResult> = points
        .into_iter()
        .map(|point| {
            let cfg = point.apply(base);
            let outcome = cfg
                .validate()
                .and_then(|_| train_on(&cfg, &fit))
                .and_then(|a| evaluate_on(&a.model, &validation));
            match outcome {
                Ok((report, _)) => GridResult {
                    point,
                    accuracy: Some(report.accuracy),
                    error: None,
                },
                Err(e) => GridResult {
                    point,
                    accuracy: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let best = best_index(&results).ok_or_else(|| {
        Error::Invalid("every grid point failed; see the per-point errors".into())
    })?;
    let cfg = results[best].point.apply(base);
    Ok((
        cfg,
        CrossvalReport {
            fit_subjects,
            validation_subjects,
            results,
            best,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn point(k: usize, ndf: u32) -> GridPoint {
        GridPoint {
            threshold: 0.15,
            ndf,
            window: 3,
            k,
            min_support: 3,
            max_support: 60,
        }
    }

    fn result(k: usize, ndf: u32, acc: Option<f64>) -> GridResult {
        GridResult {
            point: point(k, ndf),
            accuracy: acc,
            error: None,
        }
    }

    #[test]
    fn singleton_grid_is_base() {
        let base = PipelineConfig::synthetic();
        let pts = Grid::default().points(&base).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].apply(&base), base);
    }

    #[test]
    fn product_order() {
        let grid = Grid {
            k: Some(vec![10, 20]),
            ndf: Some(vec![100, 200, 300]),
            ..Grid::default()
        };
        let pts = grid.points(&PipelineConfig::synthetic()).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!((pts[0].ndf, pts[0].k), (100, 10));
        assert_eq!((pts[1].ndf, pts[1].k), (100, 20));
        assert_eq!((pts[5].ndf, pts[5].k), (300, 20));
    }

    #[test]
    fn empty_list_rejected() {
        let grid = Grid::from_toml("k = []").unwrap();
        assert!(matches!(
            grid.points(&PipelineConfig::synthetic()),
            Err(Error::Config(_))
        ));
        assert!(Grid::from_toml("beta = [1]").is_err());
    }

    #[test]
    fn argmax_and_ties() {
        let r = vec![
            result(50, 200, Some(80.0)),
            result(10, 200, Some(90.0)),
            result(5, 100, None),
        ];
        assert_eq!(best_index(&r), Some(1));
        let r = vec![
            result(50, 200, Some(90.0)),
            result(10, 300, Some(90.0)),
            result(10, 100, Some(90.0)),
        ];
        assert_eq!(best_index(&r), Some(2));
        let r = vec![result(10, 100, Some(90.0)), result(10, 100, Some(90.0))];
        assert_eq!(best_index(&r), Some(0));
        assert_eq!(best_index(&[result(1, 1, None)]), None);
    }

    #[test]
    fn holdout_is_seeded_partition() {
        let (fit, val) = holdout_subjects(&[3, 1, 2, 2, 4, 5, 6], 9).unwrap();
        assert_eq!((fit.len(), val.len()), (4, 2));
        let mut all: Vec<_> = fit.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, vec![1, 2, 3, 4, 5, 6]);
        assert_eq!(
            holdout_subjects(&[1, 2, 3, 4, 5, 6], 9).unwrap(),
            (fit, val)
        );
        assert!(holdout_subjects(&[1, 2], 0).is_err());
    }
}
