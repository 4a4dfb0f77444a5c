//! Cyclic (round-robin) gradient boosting of per-term lookup tables.
//!
//! Each round visits every term once in a fixed order. For a term, the
//! current gradients are histogrammed over the term's grid cells once per
//! inner bag, a shallow tree is fitted per bag, and the bag-averaged leaf
//! values scaled by the learning rate are added to the term's scores. Logits
//! are refreshed before the next term sees them.

use rand::Rng;

use super::config::{GradientMode, TrainConfig};
use super::tree::{fit_tree, Histogram};
use crate::rng;

/// Log-loss probability clamp.
pub const PROB_EPS: f64 = 1e-12;

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Inverse of [`sigmoid`].
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Negative log-likelihood of one label under logit `f`, probability clamped
/// to `[PROB_EPS, 1 - PROB_EPS]`.
#[inline]
pub fn log_loss_term(y: u8, f: f64) -> f64 {
    let p = if y == 1 { sigmoid(f) } else { sigmoid(-f) };
    -p.clamp(PROB_EPS, 1.0 - PROB_EPS).ln()
}

pub fn mean_log_loss(labels: &[u8], logits: &[f64]) -> f64 {
    if labels.is_empty() {
        return 0.0;
    }
    labels.iter().zip(logits).map(|(&y, &f)| log_loss_term(y, f)).sum::<f64>() / labels.len() as f64
}

/// Gradient (residual) and hessian at logit `f`. Both tails are computed
/// without cancellation so updates keep flowing at extreme logits.
#[inline]
fn grad_hess(y: u8, f: f64, mode: GradientMode) -> (f64, f64) {
    let p = sigmoid(f);
    let q = sigmoid(-f);
    let g = if y == 1 { q } else { -p };
    match mode {
        GradientMode::Newton => (g, p * q),
        GradientMode::FirstOrder => (g, 1.0),
    }
}

/// A term's view of the data: the grid cell of every row.
pub(crate) struct TermGrid {
    pub cells: Vec<u32>,
    pub nx: usize,
    pub ny: usize,
}

impl TermGrid {
    pub fn main(codes: &[u32], n_bins: usize) -> Self {
        TermGrid { cells: codes.to_vec(), nx: n_bins, ny: 1 }
    }

    pub fn pair(a: &[u32], nx: usize, b: &[u32], ny: usize) -> Self {
        let cells = a.iter().zip(b).map(|(&x, &y)| x * ny as u32 + y).collect();
        TermGrid { cells, nx, ny }
    }

    pub fn n_cells(&self) -> usize {
        self.nx * self.ny
    }
}

/// Rows and resampling weights of one outer bag.
#[derive(Debug, Clone)]
pub(crate) struct Bag {
    /// Distinct training rows of this bag.
    pub rows: Vec<usize>,
    /// Outer multiplicity of each entry of `rows`.
    pub weights: Vec<f64>,
    /// Per inner bag, the weight of each entry of `rows`.
    pub inner: Vec<Vec<f64>>,
    pub validation: Vec<usize>,
}

impl Bag {
    /// Splits off a validation set, bootstraps the remainder when
    /// `config.outer_bags > 1`, and draws the inner bags. Depends only on
    /// `(config.seed, index, n_rows)`.
    pub fn draw(n_rows: usize, config: &TrainConfig, index: usize) -> Bag {
        let mut rng = rng::stream_rng(config.seed, rng::STREAM_OUTER_BAG, index as u64);
        let mut order: Vec<usize> = (0..n_rows).collect();
        let n_val = if config.validation_fraction > 0.0 {
            ((n_rows as f64) * config.validation_fraction).round() as usize
        } else {
            0
        };
        let n_val = n_val.min(n_rows.saturating_sub(2));
        // partial Fisher-Yates: the first n_val positions become validation
        for i in 0..n_val {
            let j = rng.random_range(i..n_rows);
            order.swap(i, j);
        }
        let mut validation = order[..n_val].to_vec();
        validation.sort_unstable();
        let mut train = order[n_val..].to_vec();
        train.sort_unstable();

        let mut counts = vec![1.0; train.len()];
        if config.outer_bags > 1 {
            counts = vec![0.0; train.len()];
            for _ in 0..train.len() {
                counts[rng.random_range(0..train.len())] += 1.0;
            }
        }
        let (rows, weights): (Vec<usize>, Vec<f64>) =
            train.into_iter().zip(counts).filter(|&(_, c)| c > 0.0).unzip();

        let inner = if config.inner_bags > 1 {
            // expand the outer sample, then bootstrap over its slots
            let slots: Vec<usize> = weights
                .iter()
                .enumerate()
                .flat_map(|(k, &w)| std::iter::repeat_n(k, w as usize))
                .collect();
            (0..config.inner_bags)
                .map(|_| {
                    let mut w = vec![0.0; rows.len()];
                    for _ in 0..slots.len() {
                        w[slots[rng.random_range(0..slots.len())]] += 1.0;
                    }
                    w
                })
                .collect()
        } else {
            vec![weights.clone()]
        };
        Bag { rows, weights, inner, validation }
    }

    /// Log-odds of the weighted class prevalence, clamped away from ±∞.
    pub fn prior_logit(&self, labels: &[u8]) -> f64 {
        let total: f64 = self.weights.iter().sum();
        let pos: f64 = self.rows.iter().zip(&self.weights).map(|(&r, &w)| labels[r] as f64 * w).sum();
        let p = (pos / total).clamp(1e-6, 1.0 - 1e-6);
        logit(p)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct BoostOutcome {
    pub scores: Vec<Vec<f64>>,
    pub training_loss: Vec<f64>,
    pub validation_loss: Vec<f64>,
    /// Number of completed rounds whose scores were kept.
    pub rounds_kept: usize,
}

pub(crate) fn weighted_loss(labels: &[u8], rows: &[usize], weights: &[f64], logits: &[f64]) -> f64 {
    let total: f64 = weights.iter().sum();
    rows.iter()
        .zip(weights)
        .zip(logits)
        .map(|((&r, &w), &f)| w * log_loss_term(labels[r], f))
        .sum::<f64>()
        / total
}

/// Boosts `terms` on top of the fixed per-row `base` logits (indexed by
/// dataset row).
pub(crate) fn cyclic_boost(
    terms: &[TermGrid],
    base: &[f64],
    labels: &[u8],
    bag: &Bag,
    config: &TrainConfig,
) -> BoostOutcome {
    let mut scores: Vec<Vec<f64>> = terms.iter().map(|t| vec![0.0; t.n_cells()]).collect();
    let mut f_train: Vec<f64> = bag.rows.iter().map(|&r| base[r]).collect();
    let mut f_val: Vec<f64> = bag.validation.iter().map(|&r| base[r]).collect();
    let val_labels: Vec<u8> = bag.validation.iter().map(|&r| labels[r]).collect();
    let mut hists: Vec<Vec<Histogram>> = terms
        .iter()
        .map(|t| (0..bag.inner.len()).map(|_| Histogram::new(t.nx, t.ny)).collect())
        .collect();
    let n_inner = bag.inner.len() as f64;
    let mut gh: Vec<(f64, f64)> = vec![(0.0, 0.0); bag.rows.len()];

    let mut out = BoostOutcome {
        scores: Vec::new(),
        training_loss: Vec::new(),
        validation_loss: Vec::new(),
        rounds_kept: 0,
    };
    if terms.is_empty() {
        out.scores = scores;
        return out;
    }
    let early_stop = !bag.validation.is_empty();
    let mut best_val = if early_stop { mean_log_loss(&val_labels, &f_val) } else { f64::INFINITY };
    let mut best_scores = scores.clone();
    let mut best_round = 0;

    for round in 1..=config.boosting_rounds {
        for (t, term) in terms.iter().enumerate() {
            for (k, &r) in bag.rows.iter().enumerate() {
                gh[k] = grad_hess(labels[r], f_train[k], config.gradient);
            }
            let mut update = vec![0.0; term.n_cells()];
            for (hist, weights) in hists[t].iter_mut().zip(&bag.inner) {
                hist.clear();
                for (k, &r) in bag.rows.iter().enumerate() {
                    let w = weights[k];
                    if w != 0.0 {
                        hist.add(term.cells[r] as usize, w * gh[k].0, w * gh[k].1);
                    }
                }
                for (u, v) in update.iter_mut().zip(fit_tree(hist, config.max_leaves_per_tree)) {
                    *u += v;
                }
            }
            let step = config.learning_rate / n_inner;
            for u in update.iter_mut() {
                *u *= step;
            }
            for (s, u) in scores[t].iter_mut().zip(&update) {
                *s += u;
            }
            for (k, &r) in bag.rows.iter().enumerate() {
                f_train[k] += update[term.cells[r] as usize];
            }
            for (k, &r) in bag.validation.iter().enumerate() {
                f_val[k] += update[term.cells[r] as usize];
            }
        }
        out.training_loss.push(weighted_loss(labels, &bag.rows, &bag.weights, &f_train));
        if early_stop {
            let v = mean_log_loss(&val_labels, &f_val);
            out.validation_loss.push(v);
            if v < best_val {
                best_val = v;
                best_round = round;
                best_scores.clone_from(&scores);
            } else if round - best_round >= config.early_stop_patience {
                break;
            }
        }
    }

    if early_stop {
        out.scores = best_scores;
        out.rounds_kept = best_round;
    } else {
        out.scores = scores;
        out.rounds_kept = out.training_loss.len();
    }
    out
}
