//! Sliding-window transactions over per-frame part states.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{Item, PartStateFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    pub window: usize,
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_stride() -> usize {
    1
}

impl WindowConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window == 0 || self.stride == 0 {
            return Err(Error::Config(format!(
                "window and stride must be at least 1, got {} / {}",
                self.window, self.stride
            )));
        }
        Ok(())
    }

    /// Transactions produced for a sequence of `frames` frames.
    pub fn count(&self, frames: usize) -> usize {
        if frames < self.window {
            1
        } else {
            (frames - self.window) / self.stride + 1
        }
    }
}

/// Sorted, duplicate-free items from one window, tagged with the action that
/// produced it.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Transaction {
    pub items: Vec<Item>,
    pub action: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionMeta {
    pub label: u32,
    pub subject: u32,
    pub num_transactions: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransactionDb {
    pub transactions: Vec<Transaction>,
    pub actions: Vec<ActionMeta>,
    pub num_classes: u32,
}

impl TransactionDb {
    pub fn labels(&self) -> Vec<u32> {
        self.actions.iter().map(|a| a.label).collect()
    }

    pub fn len(&self) -> usize {
        self.transactions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transactions.is_empty()
    }

    /// Transactions of one action, contiguous because [`assemble_db`] keeps
    /// actions in order.
    pub fn action_transactions(&self, action: usize) -> &[Transaction] {
        let start = self.transactions.partition_point(|t| t.action < action);
        let end = self.transactions.partition_point(|t| t.action <= action);
        &self.transactions[start..end]
    }
}

fn window_items(frames: &[PartStateFrame]) -> Vec<Item> {
    let mut items: Vec<Item> = frames.iter().flat_map(|f| f.0).collect();
    items.sort_unstable();
    items.dedup();
    items
}

/// One transaction per window start `0, stride, 2*stride, ...` while the
/// window fits; a sequence shorter than the window yields a single
/// transaction over all of its frames.
pub fn build_transactions(
    frames: &[PartStateFrame],
    cfg: &WindowConfig,
    action: usize,
) -> Result<Vec<Transaction>> {
    cfg.validate()?;
    if frames.is_empty() {
        return Err(Error::Invalid(format!("action {action} has no frames")));
    }
    if frames.len() < cfg.window {
        return Ok(vec![Transaction {
            items: window_items(frames),
            action,
        }]);
    }
    Ok((0..=frames.len() - cfg.window)
        .step_by(cfg.stride)
        .map(|s| Transaction {
            items: window_items(&frames[s..s + cfg.window]),
            action,
        })
        .collect())
}

/// Per-action input to [`assemble_db`].
#[derive(Debug, Clone)]
pub struct ActionTransactions {
    pub transactions: Vec<Transaction>,
    pub label: u32,
    pub subject: u32,
}

/// Concatenates per-action transactions, renumbering actions by position.
pub fn assemble_db(per_action: Vec<ActionTransactions>, ndf: u32) -> Result<TransactionDb> {
    if per_action.is_empty() {
        return Err(Error::Invalid("no actions to assemble".into()));
    }
    let mut transactions = Vec::new();
    let mut actions = Vec::with_capacity(per_action.len());
    for (j, a) in per_action.into_iter().enumerate() {
        if a.label < 1 {
            return Err(Error::Invalid(format!("action {j} has label 0")));
        }
        if a.transactions.is_empty() {
            return Err(Error::Invalid(format!("action {j} has no transactions")));
        }
        actions.push(ActionMeta {
            label: a.label,
            subject: a.subject,
            num_transactions: a.transactions.len(),
        });
        for mut t in a.transactions {
            if let Some(&bad) = t.items.iter().find(|&&i| i == 0 || i > ndf) {
                return Err(Error::Invalid(format!(
                    "item {bad} in action {j} is outside 1..={ndf}"
                )));
            }
            if t.items.is_empty() || t.items.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invalid(format!(
                    "transaction of action {j} is not a sorted non-empty set"
                )));
            }
            t.action = j;
            transactions.push(t);
        }
    }
    let num_classes = actions.iter().map(|a| a.label).max().unwrap_or(0);
    Ok(TransactionDb {
        transactions,
        actions,
        num_classes,
    })
}

/// Text dump: per action a `# action=<j> label=<c>` header, then one
/// transaction per line as ascending space-separated items.
pub fn write_dump(db: &TransactionDb) -> String {
    let mut out = String::new();
    for (j, meta) in db.actions.iter().enumerate() {
        let _ = writeln!(out, "# action={j} label={}", meta.label);
        for t in db.action_transactions(j) {
            out.push_str(&join_items(&t.items));
            out.push('\n');
        }
    }
    out
}

pub(crate) fn join_items(items: &[Item]) -> String {
    let mut s = String::with_capacity(items.len() * 4);
    for (i, item) in items.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{item}");
    }
    s
}

pub(crate) fn parse_items(path: &Path, line: usize, text: &str) -> Result<Vec<Item>> {
    let items = text
        .split_whitespace()
        .map(|t| {
            t.parse::<Item>()
                .map_err(|_| Error::parse(path, line, format!("bad item `{t}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    if items.is_empty() || items.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::parse(
            path,
            line,
            "items must be non-empty and strictly ascending",
        ));
    }
    Ok(items)
}

/// Parses a dump written by [`write_dump`]. Subjects are not part of the
/// dump and come back as 0.
pub fn read_dump(path: &Path, text: &str, ndf: u32) -> Result<TransactionDb> {
    let mut per_action: Vec<ActionTransactions> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let mut action = None;
            let mut label = None;
            for kv in header.split_whitespace() {
                match kv.split_once('=') {
                    Some(("action", v)) => action = v.parse::<usize>().ok(),
                    Some(("label", v)) => label = v.parse::<u32>().ok(),
                    _ => return Err(Error::parse(path, lineno, format!("unexpected `{kv}`"))),
                }
            }
            match (action, label) {
                (Some(a), Some(l)) if a == per_action.len() => {
                    per_action.push(ActionTransactions {
                        transactions: Vec::new(),
                        label: l,
                        subject: 0,
                    })
                }
                _ => {
                    return Err(Error::parse(
                        path,
                        lineno,
                        "bad or out-of-order action header",
                    ))
                }
            }
            continue;
        }
        let items = parse_items(path, lineno, line)?;
        let j = per_action.len().checked_sub(1).ok_or_else(|| {
            Error::parse(path, lineno, "transaction before the first action header")
        })?;
        per_action[j]
            .transactions
            .push(Transaction { items, action: j });
    }
    assemble_db(per_action, ndf)
}
