//! Relevance scoring and greedy selection of mined patterns.
//!
//! A pattern's relevance is `S(t) = D(t) * O(t)`: discriminability is one
//! minus the normalized class entropy of the pattern's occurrences, and
//! representativity is how close the pattern's distribution over actions is
//! to the ideal "spread evenly over one class" distribution. Selection then
//! adds patterns one at a time by gain, penalizing redundancy with patterns
//! already chosen.
//!
//! KL divergences use natural logs and no smoothing: `p > 0` against `q = 0`
//! is `+inf`.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miner::{count_frequencies, Pattern};
use crate::transactions::{join_items, parse_items, TransactionDb};

/// Relative gap under which two gains count as tied.
pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectorConfig {
    pub k: usize,
    /// Keep only the this many most relevant candidates before the greedy
    /// loop. `None` keeps all.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_candidates: Option<usize>,
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if self.max_candidates == Some(0) {
            return Err(Error::Config("max_candidates must be at least 1".into()));
        }
        Ok(())
    }
}

/// Labels of the training actions, indexed like `Pattern::per_action_freq`.
#[derive(Debug, Clone)]
pub struct ActionLabels {
    labels: Vec<u32>,
    num_classes: u32,
    class_sizes: Vec<usize>,
}

impl ActionLabels {
    pub fn new(labels: Vec<u32>, num_classes: u32) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::Invalid(format!(
                "pattern scoring needs at least 2 classes, got {num_classes}"
            )));
        }
        let mut class_sizes = vec![0; num_classes as usize];
        for &l in &labels {
            if l < 1 || l > num_classes {
                return Err(Error::Invalid(format!(
                    "label {l} outside 1..={num_classes}"
                )));
            }
            class_sizes[l as usize - 1] += 1;
        }
        Ok(ActionLabels {
            labels,
            num_classes,
            class_sizes,
        })
    }

    pub fn from_db(db: &TransactionDb) -> Result<Self> {
        Self::new(db.labels(), db.num_classes)
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn num_classes(&self) -> u32 {
        self.num_classes
    }
}

fn total(freqs: &[u32]) -> u64 {
    freqs.iter().map(|&f| f as u64).sum()
}

/// `p(A_j|t)`: the pattern's occurrences spread over actions.
pub fn action_posterior(freqs: &[u32]) -> Result<Vec<f64>> {
    let n = total(freqs);
    if n == 0 {
        return Err(Error::Invalid("pattern never occurs".into()));
    }
    Ok(freqs.iter().map(|&f| f as f64 / n as f64).collect())
}

/// `p(c|t)` for classes `1..=num_classes`, returned at index `c - 1`.
pub fn class_posterior(freqs: &[u32], labels: &ActionLabels) -> Result<Vec<f64>> {
    let n = total(freqs);
    if n == 0 {
        return Err(Error::Invalid("pattern never occurs".into()));
    }
    let mut per_class = vec![0u64; labels.num_classes as usize];
    for (&f, &l) in freqs.iter().zip(&labels.labels) {
        per_class[l as usize - 1] += f as u64;
    }
    Ok(per_class.into_iter().map(|c| c as f64 / n as f64).collect())
}

/// `1 + sum_c p log p / log(num_classes)`, clamped to `[0, 1]`.
pub fn discriminability(p_class: &[f64], num_classes: usize) -> f64 {
    let neg_entropy: f64 = p_class
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| p * p.ln())
        .sum();
    (1.0 + neg_entropy / (num_classes as f64).ln()).clamp(0.0, 1.0)
}

/// Best over classes of `exp(-KL(uniform over class c || p(A|t)))`.
pub fn representativity(p_action: &[f64], labels: &ActionLabels) -> f64 {
    let mut best = 0.0f64;
    for c in 1..=labels.num_classes {
        let n_c = labels.class_sizes[c as usize - 1];
        if n_c == 0 {
            continue;
        }
        let q = 1.0 / n_c as f64;
        let mut kl = 0.0;
        let mut finite = true;
        for (&p, &l) in p_action.iter().zip(&labels.labels) {
            if l != c {
                continue;
            }
            if p == 0.0 {
                finite = false;
                break;
            }
            kl += q * (q / p).ln();
        }
        if finite {
            best = best.max((-kl).exp());
        }
    }
    best.clamp(0.0, 1.0)
}

/// Scores of one candidate pattern.
#[derive(Debug, Clone)]
pub struct PatternStats<'a> {
    pub pattern: &'a Pattern,
    pub p_action: Vec<f64>,
    pub p_class: Vec<f64>,
    /// `p(t)`: share of all candidate occurrences that belong to this pattern.
    pub prob: f64,
    pub discriminability: f64,
    pub representativity: f64,
    pub relevance: f64,
}

impl<'a> PatternStats<'a> {
    /// `candidate_mass` is the summed support of the whole candidate set.
    pub fn new(pattern: &'a Pattern, labels: &ActionLabels, candidate_mass: u64) -> Result<Self> {
        if pattern.per_action_freq.len() != labels.labels.len() {
            return Err(Error::LengthMismatch {
                expected: labels.labels.len(),
                actual: pattern.per_action_freq.len(),
            });
        }
        let p_action = action_posterior(&pattern.per_action_freq)?;
        let p_class = class_posterior(&pattern.per_action_freq, labels)?;
        let d = discriminability(&p_class, labels.num_classes as usize);
        let o = representativity(&p_action, labels);
        Ok(PatternStats {
            pattern,
            prob: total(&pattern.per_action_freq) as f64 / candidate_mass as f64,
            p_action,
            p_class,
            discriminability: d,
            representativity: o,
            relevance: d * o,
        })
    }
}

/// `sum p ln(p/q)` over the support of `p`, where `p = f/nf` and `q = m/nm`.
fn kl_counts(f: &[u32], nf: u64, m: &[u64], nm: u64) -> f64 {
    let mut kl = 0.0;
    for (&fi, &mi) in f.iter().zip(m) {
        if fi == 0 {
            continue;
        }
        if mi == 0 {
            return f64::INFINITY;
        }
        let p = fi as f64 / nf as f64;
        let q = mi as f64 / nm as f64;
        kl += p * (p / q).ln();
    }
    kl
}

/// Redundancy `R(s, t)`: near 1 when both patterns occur in the same actions
/// in the same proportions.
pub fn redundancy(s: &PatternStats, t: &PatternStats) -> f64 {
    let (fs, ft) = (&s.pattern.per_action_freq, &t.pattern.per_action_freq);
    let merged: Vec<u64> = fs
        .iter()
        .zip(ft)
        .map(|(&a, &b)| a as u64 + b as u64)
        .collect();
    let (ns, nt) = (total(fs), total(ft));
    let nm = ns + nt;
    let div = t.prob * kl_counts(ft, nt, &merged, nm) + s.prob * kl_counts(fs, ns, &merged, nm);
    (-div).exp().clamp(0.0, 1.0)
}

fn redundancy_penalty(s: &PatternStats, t: &PatternStats) -> f64 {
    redundancy(s, t) * t.relevance.min(s.relevance)
}

/// `G(t) = S(t) - max_s R(s,t) * min(S(t), S(s))`.
pub fn gain(t: &PatternStats, selected: &[&PatternStats]) -> f64 {
    let worst = selected
        .iter()
        .map(|s| redundancy_penalty(s, t))
        .fold(0.0, f64::max);
    t.relevance - worst
}

/// True when `a` beats `b` by more than the tie tolerance.
pub(crate) fn clearly_greater(a: f64, b: f64) -> bool {
    a - b > TIE_EPS * a.abs().max(b.abs()).max(1.0)
}

/// A pattern picked by [`select_top_k`], in selection order.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectedPattern {
    pub pattern: Pattern,
    pub relevance: f64,
    pub gain: f64,
}

/// Greedy top-`k` selection by gain. Ties go to the lexicographically
/// smallest item list; the loop stops once the best gain is not positive
/// beyond the tie tolerance.
pub fn select_top_k(
    patterns: &[Pattern],
    labels: &ActionLabels,
    cfg: &SelectorConfig,
) -> Result<Vec<SelectedPattern>> {
    cfg.validate()?;
    if patterns.is_empty() {
        return Err(Error::Invalid(
            "no candidate patterns to select from".into(),
        ));
    }
    let mass: u64 = patterns.iter().map(|p| total(&p.per_action_freq)).sum();
    let mut order: Vec<usize> = (0..patterns.len()).collect();
    order.sort_by(|&a, &b| patterns[a].items.cmp(&patterns[b].items));

    let stats: Vec<PatternStats> = order
        .par_iter()
        .map(|&i| PatternStats::new(&patterns[i], labels, mass))
        .collect::<Result<_>>()?;

    // zero-relevance candidates can never reach a positive gain
    let mut cand: Vec<usize> = (0..stats.len())
        .filter(|&i| clearly_greater(stats[i].relevance, 0.0))
        .collect();
    if let Some(cap) = cfg.max_candidates {
        if cand.len() > cap {
            // stable sort keeps lexicographic order among equal relevance
            cand.sort_by(|&a, &b| stats[b].relevance.total_cmp(&stats[a].relevance));
            cand.truncate(cap);
            cand.sort_unstable();
        }
    }

    let mut penalty = vec![0.0f64; cand.len()];
    let mut taken = vec![false; cand.len()];
    let mut selected = Vec::new();
    while selected.len() < cfg.k {
        let mut best: Option<(usize, f64)> = None;
        for (ci, &i) in cand.iter().enumerate() {
            if taken[ci] {
                continue;
            }
            let g = stats[i].relevance - penalty[ci];
            match best {
                Some((_, bg)) if !clearly_greater(g, bg) => {}
                _ => best = Some((ci, g)),
            }
        }
        let Some((ci, g)) = best else { break };
        if !clearly_greater(g, 0.0) {
            break;
        }
        taken[ci] = true;
        let s = &stats[cand[ci]];
        selected.push(SelectedPattern {
            pattern: s.pattern.clone(),
            relevance: s.relevance,
            gain: g,
        });
        penalty
            .par_iter_mut()
            .zip(cand.par_iter())
            .zip(taken.par_iter())
            .filter(|(_, &t)| !t)
            .for_each(|((pen, &i), _)| {
                let p = redundancy_penalty(s, &stats[i]);
                if p > *pen {
                    *pen = p;
                }
            });
    }
    Ok(selected)
}

/// `<rank> <S(t)> : i1 i2 ... ik`, ranks from 1, relevance in shortest
/// round-trip form.
pub fn write_selected(selected: &[SelectedPattern]) -> String {
    let mut out = String::new();
    for (r, s) in selected.iter().enumerate() {
        let _ = writeln!(
            out,
            "{} {} : {}",
            r + 1,
            s.relevance,
            join_items(&s.pattern.items)
        );
    }
    out
}

/// Reads a selected-pattern file, recounting frequencies against `db`.
/// Relevance round-trips exactly; gain comes back as NaN.
pub fn read_selected(path: &Path, text: &str, db: &TransactionDb) -> Result<Vec<SelectedPattern>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (head, items) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(path, lineno, "expected `<rank> <S> : items`"))?;
        let mut head = head.split_whitespace();
        let rank: usize = head
            .next()
            .and_then(|r| r.parse().ok())
            .ok_or_else(|| Error::parse(path, lineno, "bad rank"))?;
        if rank != out.len() + 1 {
            return Err(Error::parse(path, lineno, "ranks must count up from 1"));
        }
        let relevance: f64 = head
            .next()
            .and_then(|r| r.parse().ok())
            .ok_or_else(|| Error::parse(path, lineno, "bad relevance"))?;
        let items = parse_items(path, lineno, items)?;
        let per_action_freq = count_frequencies(&items, db);
        out.push(SelectedPattern {
            pattern: Pattern {
                support: per_action_freq.iter().map(|&f| f as usize).sum(),
                items,
                per_action_freq,
            },
            relevance,
            gain: f64::NAN,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pat(items: &[u32], freq: &[u32]) -> Pattern {
        Pattern {
            items: items.to_vec(),
            support: freq.iter().map(|&f| f as usize).sum(),
            per_action_freq: freq.to_vec(),
        }
    }

    fn labels(l: &[u32], n: u32) -> ActionLabels {
        ActionLabels::new(l.to_vec(), n).unwrap()
    }

    #[test]
    fn class_posterior_examples() {
        let lab = labels(&[1, 2], 2);
        assert_eq!(class_posterior(&[2, 6], &lab).unwrap(), vec![0.25, 0.75]);
        assert_eq!(class_posterior(&[3, 0], &lab).unwrap(), vec![1.0, 0.0]);
        let lab4 = labels(&[1, 2, 3, 4], 4);
        assert_eq!(
            class_posterior(&[5, 5, 5, 5], &lab4).unwrap(),
            vec![0.25; 4]
        );
        assert!(class_posterior(&[0, 0], &lab).is_err());
    }

    #[test]
    fn discriminability_examples() {
        assert_eq!(discriminability(&[1.0, 0.0], 2), 1.0);
        assert!(discriminability(&[0.25; 4], 4).abs() < 1e-12);
        let expected = 1.0 + (0.25f64 * 0.25f64.log2() + 0.75 * 0.75f64.log2());
        assert!((discriminability(&[0.25, 0.75], 2) - expected).abs() < 1e-12);
        assert!((discriminability(&[0.25, 0.75], 2) - 0.188722).abs() < 1e-5);
    }

    #[test]
    fn representativity_examples() {
        let lab = labels(&[1, 1, 2, 2], 2);
        assert!((representativity(&[0.5, 0.5, 0.0, 0.0], &lab) - 1.0).abs() < 1e-12);
        assert!((representativity(&[0.25; 4], &lab) - 0.5).abs() < 1e-12);
        assert_eq!(representativity(&[1.0, 0.0, 0.0, 0.0], &lab), 0.0);
        assert_eq!(representativity(&[0.5, 0.0, 0.5, 0.0], &lab), 0.0);
    }

    #[test]
    fn redundancy_examples() {
        let lab = labels(&[1, 2], 2);
        let t = pat(&[1], &[1, 0]);
        let s = pat(&[2], &[0, 1]);
        let st = PatternStats::new(&t, &lab, 2).unwrap();
        let ss = PatternStats::new(&s, &lab, 2).unwrap();
        assert!((redundancy(&ss, &st) - 0.5).abs() < 1e-12);
        assert_eq!(redundancy(&st, &st), 1.0);

        let a = pat(&[1], &[2, 6]);
        let b = pat(&[2], &[1, 3]);
        let sa = PatternStats::new(&a, &lab, 12).unwrap();
        let sb = PatternStats::new(&b, &lab, 12).unwrap();
        assert!((redundancy(&sa, &sb) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gain_examples() {
        let lab = labels(&[1, 2], 2);
        let p = pat(&[1], &[4, 0]);
        let mut t = PatternStats::new(&p, &lab, 4).unwrap();
        t.relevance = 0.8;
        assert_eq!(gain(&t, &[]), 0.8);
        let dup = t.clone();
        assert_eq!(gain(&t, &[&dup]), 0.0);
    }

    #[test]
    fn gain_with_half_redundant_partner() {
        let lab = labels(&[1, 2], 2);
        let (a, b) = (pat(&[1], &[1, 0]), pat(&[2], &[0, 1]));
        let mut t = PatternStats::new(&a, &lab, 2).unwrap();
        let mut s = PatternStats::new(&b, &lab, 2).unwrap();
        t.relevance = 0.8;
        s.relevance = 0.6;
        // R = 0.5
        assert!((gain(&t, &[&s]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn identical_patterns_select_once() {
        let lab = labels(&[1, 1, 2, 2], 2);
        let pats = vec![pat(&[1], &[3, 3, 0, 0]), pat(&[2], &[3, 3, 0, 0])];
        let sel = select_top_k(
            &pats,
            &lab,
            &SelectorConfig {
                k: 2,
                max_candidates: None,
            },
        )
        .unwrap();
        assert_eq!(sel.len(), 1);
        assert_eq!(sel[0].pattern.items, vec![1]);
    }

    #[test]
    fn k_larger_than_candidates() {
        let lab = labels(&[1, 1, 2, 2], 2);
        let pats = vec![
            pat(&[1], &[3, 3, 0, 0]),
            pat(&[2], &[0, 0, 2, 2]),
            // relevance 0: occurs everywhere evenly
            pat(&[3], &[1, 1, 1, 1]),
        ];
        let sel = select_top_k(
            &pats,
            &lab,
            &SelectorConfig {
                k: 10,
                max_candidates: None,
            },
        )
        .unwrap();
        let items: Vec<_> = sel.iter().map(|s| s.pattern.items.clone()).collect();
        assert_eq!(items, vec![vec![1], vec![2]]);
    }

    #[test]
    fn candidate_cap_keeps_most_relevant() {
        let lab = labels(&[1, 1, 2, 2], 2);
        let pats = vec![
            pat(&[1], &[3, 1, 0, 0]),
            pat(&[2], &[0, 0, 2, 2]),
            pat(&[3], &[2, 2, 1, 0]),
        ];
        let sel = select_top_k(
            &pats,
            &lab,
            &SelectorConfig {
                k: 10,
                max_candidates: Some(1),
            },
        )
        .unwrap();
        assert_eq!(sel.len(), 1);
        assert_eq!(sel[0].pattern.items, vec![2]);
    }

    #[test]
    fn selected_file_round_trip() {
        use crate::transactions::{assemble_db, ActionTransactions, Transaction};
        let db = assemble_db(
            vec![
                ActionTransactions {
                    transactions: vec![Transaction {
                        items: vec![1, 2],
                        action: 0,
                    }],
                    label: 1,
                    subject: 1,
                },
                ActionTransactions {
                    transactions: vec![Transaction {
                        items: vec![2, 3],
                        action: 1,
                    }],
                    label: 2,
                    subject: 1,
                },
            ],
            10,
        )
        .unwrap();
        let sel = vec![SelectedPattern {
            pattern: pat(&[1, 2], &[1, 0]),
            relevance: 0.5,
            gain: 0.5,
        }];
        let text = write_selected(&sel);
        assert_eq!(text, "1 0.5 : 1 2\n");
        let back = read_selected(Path::new("s"), &text, &db).unwrap();
        assert_eq!(back[0].pattern, sel[0].pattern);
        assert_eq!(back[0].relevance, 0.5);
    }

    proptest! {
        #[test]
        fn scores_bounded_and_symmetric(
            fa in prop::collection::vec(0u32..6, 6),
            fb in prop::collection::vec(0u32..6, 6),
            scale in 1u32..5,
        ) {
            prop_assume!(fa.iter().sum::<u32>() > 0 && fb.iter().sum::<u32>() > 0);
            let lab = labels(&[1, 1, 2, 2, 3, 3], 3);
            let a = pat(&[1], &fa);
            let b = pat(&[2], &fb);
            let mass = (a.support + b.support) as u64;
            let sa = PatternStats::new(&a, &lab, mass).unwrap();
            let sb = PatternStats::new(&b, &lab, mass).unwrap();
            for s in [&sa, &sb] {
                prop_assert!((0.0..=1.0).contains(&s.discriminability));
                prop_assert!((0.0..=1.0).contains(&s.representativity));
                prop_assert!((s.p_action.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!((s.p_class.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
            let r = redundancy(&sa, &sb);
            prop_assert!((0.0..=1.0).contains(&r));
            prop_assert!((r - redundancy(&sb, &sa)).abs() <= 1e-9);

            // ratio-based scores ignore a common factor
            let scaled = pat(&[1], &fa.iter().map(|f| f * scale).collect::<Vec<_>>());
            let ss = PatternStats::new(&scaled, &lab, mass).unwrap();
            prop_assert!((ss.discriminability - sa.discriminability).abs() < 1e-12);
            prop_assert!((ss.representativity - sa.representativity).abs() < 1e-12);
            for (x, y) in ss.p_action.iter().zip(&sa.p_action) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }
}
