use rayon::prelude::*;

use crate::error::{Error, Result};

/// Square-root histogram intersection: `sum_i min(sqrt(l_i), sqrt(m_i))`.
pub fn kernel(l: &[u32], m: &[u32]) -> Result<f64> {
    if l.len() != m.len() {
        return Err(Error::LengthMismatch {
            expected: l.len(),
            actual: m.len(),
        });
    }
    Ok(l.iter()
        .zip(m)
        .map(|(&a, &b)| (a.min(b) as f64).sqrt())
        .sum())
}

/// Same kernel on pre-rooted histograms.
pub(crate) fn kernel_rooted(l: &[f64], m: &[f64]) -> f64 {
    l.iter().zip(m).map(|(a, b)| a.min(*b)).sum()
}

pub(crate) fn rooted(h: &[u32]) -> Vec<f64> {
    h.iter().map(|&c| (c as f64).sqrt()).collect()
}

/// Full Gram matrix, row-major, computed row by row in parallel.
pub fn kernel_matrix(samples: &[Vec<u32>]) -> Result<Vec<Vec<f64>>> {
    if let Some(first) = samples.first() {
        if let Some(bad) = samples.iter().find(|s| s.len() != first.len()) {
            return Err(Error::LengthMismatch {
                expected: first.len(),
                actual: bad.len(),
            });
        }
    }
    let roots: Vec<Vec<f64>> = samples.iter().map(|s| rooted(s)).collect();
    Ok(roots
        .par_iter()
        .map(|a| roots.iter().map(|b| kernel_rooted(a, b)).collect())
        .collect())
}
