use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: u32,
    pub predicted: u32,
    pub subject: u32,
    pub instance: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassAccuracy {
    pub class: u32,
    pub correct: usize,
    pub total: usize,
    /// Percent; 0 when the class has no test samples.
    pub accuracy: f64,
}

/// Evaluation summary. Confusion rows are true classes `1..=num_classes`,
/// columns are predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Percent.
    pub accuracy: f64,
    pub num_classes: u32,
    pub num_test: usize,
    pub selected_patterns: usize,
    pub per_class: Vec<ClassAccuracy>,
    pub confusion: Vec<Vec<usize>>,
    pub predictions: Vec<Prediction>,
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

impl EvalReport {
    pub fn from_predictions(
        num_classes: u32,
        predictions: Vec<Prediction>,
        selected_patterns: usize,
    ) -> Self {
        let n = predictions
            .iter()
            .flat_map(|p| [p.label, p.predicted])
            .max()
            .unwrap_or(0)
            .max(num_classes) as usize;
        let mut confusion = vec![vec![0usize; n]; n];
        for p in &predictions {
            confusion[p.label as usize - 1][p.predicted as usize - 1] += 1;
        }
        let per_class = (0..n)
            .map(|c| {
                let total: usize = confusion[c].iter().sum();
                ClassAccuracy {
                    class: c as u32 + 1,
                    correct: confusion[c][c],
                    total,
                    accuracy: percent(confusion[c][c], total),
                }
            })
            .collect();
        let trace: usize = (0..n).map(|c| confusion[c][c]).sum();
        EvalReport {
            accuracy: percent(trace, predictions.len()),
            num_classes: n as u32,
            num_test: predictions.len(),
            selected_patterns,
            per_class,
            confusion,
            predictions,
        }
    }

    /// Accuracy in percent over test samples whose true class is `a` or `b`.
    pub fn pair_accuracy(&self, a: u32, b: u32) -> f64 {
        let of_pair: Vec<_> = self
            .predictions
            .iter()
            .filter(|p| p.label == a || p.label == b)
            .collect();
        percent(
            of_pair.iter().filter(|p| p.predicted == p.label).count(),
            of_pair.len(),
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Header row of predicted classes, then one row per true class.
    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in 1..=self.num_classes {
            let _ = write!(out, ",{c}");
        }
        out.push('\n');
        for (r, row) in self.confusion.iter().enumerate() {
            let _ = write!(out, "{}", r + 1);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}
