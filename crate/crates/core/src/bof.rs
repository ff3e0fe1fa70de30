//! Bag-of-FLPs: per-action occurrence counts of the selected patterns.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::miner::{is_subset, Pattern};
use crate::transactions::Transaction;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagOfFlps {
    pub counts: Vec<u32>,
    pub label: Option<u32>,
}

/// `counts[i]` is the number of the action's transactions containing pattern `i`.
pub fn encode_action(transactions: &[Transaction], selected: &[Pattern]) -> Result<BagOfFlps> {
    if selected.is_empty() {
        return Err(Error::Invalid("no selected patterns to encode with".into()));
    }
    let counts = selected
        .iter()
        .map(|p| {
            transactions
                .iter()
                .filter(|t| is_subset(&p.items, &t.items))
                .count() as u32
        })
        .collect();
    Ok(BagOfFlps {
        counts,
        label: None,
    })
}

/// One feature row per action: `label,subject,count_1,...,count_K`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureRow {
    pub label: u32,
    pub subject: u32,
    pub counts: Vec<u32>,
}

pub fn write_features(rows: &[FeatureRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = write!(out, "{},{}", r.label, r.subject);
        for c in &r.counts {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
    }
    out
}

pub fn read_features(path: &Path, text: &str) -> Result<Vec<FeatureRow>> {
    let mut rows: Vec<FeatureRow> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let vals = line
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<u32>()
                    .map_err(|_| Error::parse(path, lineno, format!("bad integer `{v}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if vals.len() < 3 {
            return Err(Error::parse(
                path,
                lineno,
                "expected label, subject and at least one count",
            ));
        }
        if let Some(first) = rows.first() {
            if first.counts.len() != vals.len() - 2 {
                return Err(Error::parse(
                    path,
                    lineno,
                    "row length differs from the first row",
                ));
            }
        }
        rows.push(FeatureRow {
            label: vals[0],
            subject: vals[1],
            counts: vals[2..].to_vec(),
        });
    }
    Ok(rows)
}
