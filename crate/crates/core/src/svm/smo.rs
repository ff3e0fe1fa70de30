//! SMO for the binary C-SVM dual on a precomputed kernel matrix.
//!
//! Minimizes `f(a) = 1/2 a'Qa - sum(a)` with `Q_ij = y_i y_j K_ij`,
//! `0 <= a_i <= C` and `y'a = 0`. Working pairs are chosen by maximal
//! violation for `i` and second-order gain for `j`; the loop ends when the
//! KKT gap `m(a) - M(a)` drops below `tol`.

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    /// Decision function is `sum_i alpha_i y_i K(x_i, x) - rho`.
    pub rho: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final KKT gap `m(a) - M(a)`.
    pub gap: f64,
    /// Dual objective `sum(a) - 1/2 a'Qa` after each iteration, starting at 0.
    pub objective: Vec<f64>,
}

fn in_up(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a < c) || (y < 0.0 && a > 0.0)
}

fn in_low(y: f64, a: f64, c: f64) -> bool {
    (y > 0.0 && a > 0.0) || (y < 0.0 && a < c)
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    // Qa = grad + 1
    alpha
        .iter()
        .zip(grad)
        .map(|(a, g)| a - 0.5 * a * (g + 1.0))
        .sum()
}

/// `k` is the kernel matrix, `y` holds +1/-1 labels.
pub fn solve(k: &[Vec<f64>], y: &[f64], c: f64, tol: f64, max_iter: usize) -> SmoSolution {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * k[i][j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let mut objective = vec![0.0];
    let mut iterations = 0;
    let mut gap;

    loop {
        // i: maximal violator from the up set
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        let mut gmin = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(y[t], alpha[t], c) && v > gmax {
                gmax = v;
                i_sel = Some(t);
            }
            if in_low(y[t], alpha[t], c) && v < gmin {
                gmin = v;
            }
        }
        gap = gmax - gmin;
        let Some(i) = i_sel else { break };
        if gap < tol || iterations >= max_iter {
            break;
        }

        // j: best second-order decrease among low-set violators
        let mut j_sel = None;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(y[t], alpha[t], c) {
                continue;
            }
            let b = gmax + y[t] * grad[t];
            if b <= 0.0 {
                continue;
            }
            let mut a = k[i][i] + k[t][t] - 2.0 * k[i][t];
            if a <= 0.0 {
                a = TAU;
            }
            let obj = -(b * b) / a;
            if obj < best {
                best = obj;
                j_sel = Some(t);
            }
        }
        let Some(j) = j_sel else { break };

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for (t, g) in grad.iter_mut().enumerate() {
            *g += q(t, i) * di + q(t, j) * dj;
        }
        iterations += 1;
        objective.push(dual_objective(&alpha, &grad));
    }

    let rho = compute_rho(&alpha, &grad, y, c);
    SmoSolution {
        converged: gap < tol,
        alpha,
        rho,
        iterations,
        gap,
        objective,
    }
}

/// Average of `y_i grad_i` over free variables, else the midpoint of the
/// feasible interval.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut sum_free, mut n_free) = (0.0, 0usize);
    for t in 0..y.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                ub = ub.min(yg);
            } else {
                lb = lb.max(yg);
            }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else if ub.is_finite() && lb.is_finite() {
        (ub + lb) / 2.0
    } else if ub.is_finite() {
        ub
    } else if lb.is_finite() {
        lb
    } else {
        0.0
    }
}
