//! FAST interaction ranking.
//!
//! For a candidate pair the residuals are histogrammed over the 2D bin grid.
//! Every combination of one cut per axis defines a four-region
//! piecewise-constant predictor; its SSE reduction over the overall mean is
//! `Σ_regions S²/N − S_total²/N_total`. Region sums come from 2D cumulative
//! sums, so one pair costs `O(bins_i × bins_j)` after the histogram pass.

use rayon::prelude::*;

use super::binning::BinnedDataset;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankedPair {
    pub pair: (usize, usize),
    pub score: f64,
}

/// All `(i, j)` with `i < j < n_features`.
pub fn all_pairs(n_features: usize) -> Vec<(usize, usize)> {
    (0..n_features).flat_map(|i| (i + 1..n_features).map(move |j| (i, j))).collect()
}

/// SSE reduction contributed by regions with sums `s` and counts `n`.
#[inline]
pub fn region_fit(s: [f64; 4], n: [f64; 4], total_s: f64, total_n: f64) -> f64 {
    let mut fit = 0.0;
    for r in 0..4 {
        if n[r] > 0.0 {
            fit += s[r] * s[r] / n[r];
        }
    }
    fit - total_s * total_s / total_n
}

/// Best four-region SSE reduction for one pair of bin-code columns.
pub fn pair_score(a: &[u32], nx: usize, b: &[u32], ny: usize, residuals: &[f64]) -> f64 {
    if residuals.is_empty() || nx < 2 || ny < 2 {
        return 0.0;
    }
    let (nx1, ny1) = (nx + 1, ny + 1);
    let mut sum = vec![0.0; nx * ny];
    let mut cnt = vec![0.0; nx * ny];
    for ((&x, &y), &r) in a.iter().zip(b).zip(residuals) {
        let cell = x as usize * ny + y as usize;
        sum[cell] += r;
        cnt[cell] += 1.0;
    }
    // cum[x][y] = totals over bins < x on axis i and < y on axis j
    let mut cs = vec![0.0; nx1 * ny1];
    let mut cn = vec![0.0; nx1 * ny1];
    for x in 0..nx {
        let mut rs = 0.0;
        let mut rn = 0.0;
        for y in 0..ny {
            rs += sum[x * ny + y];
            rn += cnt[x * ny + y];
            cs[(x + 1) * ny1 + y + 1] = cs[x * ny1 + y + 1] + rs;
            cn[(x + 1) * ny1 + y + 1] = cn[x * ny1 + y + 1] + rn;
        }
    }
    let total_s = cs[nx * ny1 + ny];
    let total_n = cn[nx * ny1 + ny];

    let mut best = 0.0;
    for ci in 1..nx {
        let row_s = cs[ci * ny1 + ny];
        let row_n = cn[ci * ny1 + ny];
        for cj in 1..ny {
            let ll_s = cs[ci * ny1 + cj];
            let ll_n = cn[ci * ny1 + cj];
            let col_s = cs[nx * ny1 + cj];
            let col_n = cn[nx * ny1 + cj];
            let lr_s = row_s - ll_s;
            let lr_n = row_n - ll_n;
            let rl_s = col_s - ll_s;
            let rl_n = col_n - ll_n;
            let rr_s = total_s - ll_s - lr_s - rl_s;
            let rr_n = total_n - ll_n - lr_n - rl_n;
            let gain = region_fit([ll_s, lr_s, rl_s, rr_s], [ll_n, lr_n, rl_n, rr_n], total_s, total_n);
            if gain > best {
                best = gain;
            }
        }
    }
    best
}

/// Scores `candidates` on the pair bins of `binned` and sorts them by
/// descending score, ties broken by `(i, j)`.
pub fn fast_rank_pairs(
    binned: &BinnedDataset,
    residuals: &[f64],
    candidates: &[(usize, usize)],
) -> Vec<RankedPair> {
    let mut ranked: Vec<RankedPair> = candidates
        .par_iter()
        .map(|&(i, j)| RankedPair {
            pair: (i, j),
            score: pair_score(&binned.pair[i], binned.pair_bins[i], &binned.pair[j], binned.pair_bins[j], residuals),
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.pair.cmp(&b.pair)));
    ranked
}
