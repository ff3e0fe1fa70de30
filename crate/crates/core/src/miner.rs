//! Closed frequent itemset mining.
//!
//! Depth-first LCM: every closed itemset `Q` other than the root closure has
//! exactly one parent `P` from which it is reached by a prefix-preserving
//! closure extension, i.e. `Q = clo(P + e)` with `e` greater than the core
//! item of `P` and `Q` agreeing with `P` on all items below `e`. Occurrence
//! lists are delivered per branch, so each node only scans the transactions
//! that contain it.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Item;
use crate::transactions::{join_items, parse_items, Transaction, TransactionDb};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinerConfig {
    pub min_support: usize,
    pub max_support: usize,
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_support < 1 || self.min_support > self.max_support {
            return Err(Error::Config(format!(
                "need 1 <= min_support <= max_support, got {} / {}",
                self.min_support, self.max_support
            )));
        }
        Ok(())
    }
}

/// A closed frequent itemset with its per-action occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pattern {
    pub items: Vec<Item>,
    pub support: usize,
    /// `per_action_freq[j]` = number of transactions of action `j` containing
    /// the pattern.
    pub per_action_freq: Vec<u32>,
}

/// Linear-merge subset test over two ascending item lists.
pub fn is_subset(pattern: &[Item], transaction: &[Item]) -> bool {
    let mut it = transaction.iter();
    'outer: for p in pattern {
        for t in it.by_ref() {
            match t.cmp(p) {
                std::cmp::Ordering::Less => continue,
                std::cmp::Ordering::Equal => continue 'outer,
                std::cmp::Ordering::Greater => return false,
            }
        }
        return false;
    }
    true
}

pub fn contains(pattern: &Pattern, transaction: &Transaction) -> bool {
    is_subset(&pattern.items, &transaction.items)
}

/// Recounts `F(t|A_j)` for every action by scanning the database.
pub fn count_frequencies(items: &[Item], db: &TransactionDb) -> Vec<u32> {
    let mut freq = vec![0u32; db.actions.len()];
    for t in &db.transactions {
        if is_subset(items, &t.items) {
            freq[t.action] += 1;
        }
    }
    freq
}

struct Miner<'a> {
    /// Transactions restricted to frequent items, as dense item ranks.
    tx: Vec<Vec<u32>>,
    action_of: Vec<usize>,
    num_actions: usize,
    /// Rank back to item value; ranks preserve item order.
    item_of: &'a [Item],
    cfg: MinerConfig,
}

impl Miner<'_> {
    fn emit(&self, closed: &[u32], occ: &[u32], out: &mut Vec<Pattern>) {
        if closed.is_empty() || occ.len() > self.cfg.max_support {
            return;
        }
        let mut per_action_freq = vec![0u32; self.num_actions];
        for &t in occ {
            per_action_freq[self.action_of[t as usize]] += 1;
        }
        out.push(Pattern {
            items: closed.iter().map(|&r| self.item_of[r as usize]).collect(),
            support: occ.len(),
            per_action_freq,
        });
    }

    /// Items present in every transaction of `occ`.
    fn closure(&self, occ: &[u32], counts: &mut [u32]) -> Vec<u32> {
        let mut touched = Vec::new();
        for &t in occ {
            for &i in &self.tx[t as usize] {
                if counts[i as usize] == 0 {
                    touched.push(i);
                }
                counts[i as usize] += 1;
            }
        }
        let n = occ.len() as u32;
        let mut closed: Vec<u32> = touched
            .iter()
            .copied()
            .filter(|&i| counts[i as usize] == n)
            .collect();
        for i in touched {
            counts[i as usize] = 0;
        }
        closed.sort_unstable();
        closed
    }

    /// Occurrence lists of `i` within `occ` for every item above `core`.
    fn deliver(&self, occ: &[u32], core: Option<u32>) -> Vec<(u32, Vec<u32>)> {
        let mut buckets: Vec<Vec<u32>> = vec![Vec::new(); self.item_of.len()];
        let lo = core.map_or(0, |c| c + 1);
        for &t in occ {
            for &i in &self.tx[t as usize] {
                if i >= lo {
                    buckets[i as usize].push(t);
                }
            }
        }
        buckets
            .into_iter()
            .enumerate()
            .filter(|(_, b)| b.len() >= self.cfg.min_support)
            .map(|(i, b)| (i as u32, b))
            .collect()
    }

    /// Tries the extension of `parent` by `e`; returns the child closure when
    /// it is prefix preserving.
    fn ppc_child(
        &self,
        parent: &[u32],
        e: u32,
        occ_e: &[u32],
        counts: &mut [u32],
    ) -> Option<Vec<u32>> {
        if parent.binary_search(&e).is_ok() {
            return None;
        }
        let q = self.closure(occ_e, counts);
        // parent is a subset of q; any new item below e breaks the prefix
        let below = |s: &[u32]| s.partition_point(|&i| i < e);
        if below(&q) != below(parent) {
            return None;
        }
        Some(q)
    }

    fn expand(
        &self,
        p: &[u32],
        occ: &[u32],
        core: Option<u32>,
        counts: &mut Vec<u32>,
        out: &mut Vec<Pattern>,
    ) {
        for (e, occ_e) in self.deliver(occ, core) {
            if let Some(q) = self.ppc_child(p, e, &occ_e, counts) {
                self.emit(&q, &occ_e, out);
                self.expand(&q, &occ_e, Some(e), counts, out);
            }
        }
    }
}

/// All closed itemsets with `min_support <= support <= max_support`, sorted
/// by item list. `min_support` prunes the search; `max_support` only filters
/// the output.
pub fn mine_closed(db: &TransactionDb, cfg: &MinerConfig) -> Result<Vec<Pattern>> {
    cfg.validate()?;
    if db.is_empty() {
        return Err(Error::Invalid(
            "cannot mine an empty transaction database".into(),
        ));
    }

    let max_item = db
        .transactions
        .iter()
        .flat_map(|t| t.items.last())
        .copied()
        .max()
        .unwrap_or(0) as usize;
    let mut freq = vec![0usize; max_item + 1];
    for t in &db.transactions {
        for &i in &t.items {
            freq[i as usize] += 1;
        }
    }
    let item_of: Vec<Item> = (0..=max_item as Item)
        .filter(|&i| freq[i as usize] >= cfg.min_support)
        .collect();
    let mut rank = vec![u32::MAX; max_item + 1];
    for (r, &i) in item_of.iter().enumerate() {
        rank[i as usize] = r as u32;
    }
    let tx: Vec<Vec<u32>> = db
        .transactions
        .iter()
        .map(|t| {
            t.items
                .iter()
                .map(|&i| rank[i as usize])
                .filter(|&r| r != u32::MAX)
                .collect()
        })
        .collect();

    let miner = Miner {
        tx,
        action_of: db.transactions.iter().map(|t| t.action).collect(),
        num_actions: db.actions.len(),
        item_of: &item_of,
        cfg: *cfg,
    };

    let all: Vec<u32> = (0..db.len() as u32).collect();
    if all.len() < cfg.min_support {
        return Ok(Vec::new());
    }
    let mut counts = vec![0u32; item_of.len()];
    let root = miner.closure(&all, &mut counts);
    let mut out = Vec::new();
    miner.emit(&root, &all, &mut out);

    let branches = miner.deliver(&all, None);
    let mut rest: Vec<Pattern> = branches
        .into_par_iter()
        .flat_map_iter(|(e, occ_e)| {
            let mut counts = vec![0u32; miner.item_of.len()];
            let mut local = Vec::new();
            if let Some(q) = miner.ppc_child(&root, e, &occ_e, &mut counts) {
                miner.emit(&q, &occ_e, &mut local);
                miner.expand(&q, &occ_e, Some(e), &mut counts, &mut local);
            }
            local
        })
        .collect();
    out.append(&mut rest);
    out.sort_unstable_by(|a, b| a.items.cmp(&b.items));
    Ok(out)
}

/// `<support>: i1 i2 ... ik`, one pattern per line.
pub fn write_patterns(patterns: &[Pattern]) -> String {
    let mut out = String::new();
    for p in patterns {
        let _ = writeln!(out, "{}: {}", p.support, join_items(&p.items));
    }
    out
}

/// Reads a pattern dump; per-action frequencies are recounted against `db`.
pub fn read_patterns(path: &Path, text: &str, db: &TransactionDb) -> Result<Vec<Pattern>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (support, items) = line
            .split_once(':')
            .ok_or_else(|| Error::parse(path, lineno, "expected `<support>: items`"))?;
        let support: usize = support
            .trim()
            .parse()
            .map_err(|_| Error::parse(path, lineno, "bad support"))?;
        let items = parse_items(path, lineno, items)?;
        let per_action_freq = count_frequencies(&items, db);
        let recount: usize = per_action_freq.iter().map(|&f| f as usize).sum();
        if recount != support {
            return Err(Error::parse(
                path,
                lineno,
                format!("support {support} disagrees with the database ({recount})"),
            ));
        }
        out.push(Pattern {
            items,
            support,
            per_action_freq,
        });
    }
    Ok(out)
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::transactions::{assemble_db, ActionTransactions};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn db_of(actions: &[&[&[Item]]]) -> TransactionDb {
        let per_action = actions
            .iter()
            .enumerate()
            .map(|(j, txs)| ActionTransactions {
                transactions: txs
                    .iter()
                    .map(|t| Transaction {
                        items: t.to_vec(),
                        action: j,
                    })
                    .collect(),
                label: j as u32 + 1,
                subject: 1,
            })
            .collect();
        assemble_db(per_action, 1000).unwrap()
    }

    fn pairs(ps: &[Pattern]) -> Vec<(Vec<Item>, usize)> {
        ps.iter().map(|p| (p.items.clone(), p.support)).collect()
    }

    #[test]
    fn three_transaction_example() {
        let db = db_of(&[&[&[1, 2], &[1, 2, 3], &[1, 3]]]);
        let got = mine_closed(
            &db,
            &MinerConfig {
                min_support: 2,
                max_support: 3,
            },
        )
        .unwrap();
        assert_eq!(
            pairs(&got),
            vec![(vec![1], 3), (vec![1, 2], 2), (vec![1, 3], 2)]
        );

        let got = mine_closed(
            &db,
            &MinerConfig {
                min_support: 2,
                max_support: 2,
            },
        )
        .unwrap();
        assert_eq!(pairs(&got), vec![(vec![1, 2], 2), (vec![1, 3], 2)]);
    }

    #[test]
    fn identical_transactions() {
        let db = db_of(&[&[&[4, 9], &[4, 9]], &[&[4, 9]]]);
        let got = mine_closed(
            &db,
            &MinerConfig {
                min_support: 1,
                max_support: 10,
            },
        )
        .unwrap();
        assert_eq!(pairs(&got), vec![(vec![4, 9], 3)]);
        assert_eq!(got[0].per_action_freq, vec![2, 1]);
    }

    #[test]
    fn subset_test() {
        assert!(is_subset(&[1, 3], &[1, 2, 3]));
        assert!(!is_subset(&[1, 4], &[1, 2, 3]));
        assert!(!is_subset(&[0], &[1, 2, 3]));
        assert!(!is_subset(&[4], &[1, 2, 3]));
        assert!(is_subset(&[3], &[3]));
    }

    #[test]
    fn frequency_examples() {
        let db = db_of(&[&[&[1, 2], &[1, 2, 5], &[1, 2, 7]], &[&[3, 4]]]);
        assert_eq!(count_frequencies(&[1, 2], &db), vec![3, 0]);
        let single = db_of(&[&[&[1, 2], &[1, 2, 3], &[1, 3]]]);
        assert_eq!(count_frequencies(&[1, 2], &single), vec![2]);
    }

    fn random_db(rng: &mut ChaCha8Rng) -> Vec<Vec<Item>> {
        let n_items = rng.gen_range(1..=12);
        let n_tx = rng.gen_range(1..=30);
        let density = rng.gen_range(0.2..0.8);
        (0..n_tx)
            .map(|_| {
                let mut t: Vec<Item> = (1..=n_items).filter(|_| rng.gen_bool(density)).collect();
                if t.is_empty() {
                    t.push(rng.gen_range(1..=n_items));
                }
                t
            })
            .collect()
    }

    #[test]
    fn matches_brute_force_and_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..60 {
            let raw = random_db(&mut rng);
            let min = rng.gen_range(1..=5);
            let max = rng.gen_range(min..=30);
            // split into up to 3 actions
            let cut1 = raw.len() / 3;
            let cut2 = 2 * raw.len() / 3;
            let groups: Vec<&[Vec<Item>]> = [&raw[..cut1], &raw[cut1..cut2], &raw[cut2..]]
                .into_iter()
                .filter(|g| !g.is_empty())
                .collect();
            let per_action = groups
                .iter()
                .enumerate()
                .map(|(j, g)| ActionTransactions {
                    transactions: g
                        .iter()
                        .map(|t| Transaction {
                            items: t.clone(),
                            action: j,
                        })
                        .collect(),
                    label: 1,
                    subject: 1,
                })
                .collect();
            let db = assemble_db(per_action, 100).unwrap();
            let cfg = MinerConfig {
                min_support: min,
                max_support: max,
            };
            let got = mine_closed(&db, &cfg).unwrap();
            assert_eq!(pairs(&got), oracle::brute_force_closed(&raw, min, max));
            for p in &got {
                assert_eq!(p.per_action_freq, count_frequencies(&p.items, &db));
                assert_eq!(p.per_action_freq.iter().sum::<u32>() as usize, p.support);
                for drop in 0..p.items.len() {
                    let mut sub = p.items.clone();
                    sub.remove(drop);
                    if !sub.is_empty() {
                        let s: u32 = count_frequencies(&sub, &db).iter().sum();
                        assert!(s as usize >= p.support);
                    }
                }
            }
            let mut items: Vec<_> = got.iter().map(|p| &p.items).collect();
            items.dedup();
            assert_eq!(items.len(), got.len());
        }
    }

    #[test]
    fn pattern_dump_round_trip() {
        let db = db_of(&[&[&[1, 2], &[1, 2, 3]], &[&[1, 3]]]);
        let pats = mine_closed(
            &db,
            &MinerConfig {
                min_support: 1,
                max_support: 9,
            },
        )
        .unwrap();
        let text = write_patterns(&pats);
        assert!(text.starts_with("3: 1\n"));
        let back = read_patterns(Path::new("p"), &text, &db).unwrap();
        assert_eq!(back, pats);
        assert!(read_patterns(Path::new("p"), "5: 1\n", &db).is_err());
    }
}
