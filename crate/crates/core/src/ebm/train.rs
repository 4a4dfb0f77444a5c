//! Two-stage training: bagged main effects, FAST pair selection, bagged pair
//! effects on top of the frozen main model, then term-wise averaging and
//! centering.

use rayon::prelude::*;

use super::binning::{bin_data, BinDefinition, BinnedDataset};
use super::boost::{cyclic_boost, sigmoid, Bag, TermGrid};
use super::config::TrainConfig;
use super::fast::{all_pairs, fast_rank_pairs, RankedPair};
use super::model::{EbmModel, MainTerm, PairTerm, Term, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::features::{fit_scaler, is_missing, FeatureMatrix, ScalerParams};

/// Bag-averaged main-effect fit, centered on the training rows.
#[derive(Debug, Clone)]
pub struct MainEffectsFit {
    pub intercept: f64,
    /// Per feature, one score per main bin.
    pub scores: Vec<Vec<f64>>,
    /// Per outer bag, the held-out log loss after every completed round.
    pub validation_loss: Vec<Vec<f64>>,
    /// Per outer bag, the training log loss after every completed round.
    pub training_loss: Vec<Vec<f64>>,
    /// Per outer bag, the number of rounds whose scores were kept.
    pub rounds_kept: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct PairEffectsFit {
    pub pairs: Vec<(usize, usize)>,
    /// Per pair, a row-major grid over the two features' pair bins.
    pub scores: Vec<Vec<f64>>,
    /// Added to the intercept by centering.
    pub intercept_shift: f64,
    pub warnings: Vec<String>,
}

/// Everything [`train`] learns along the way.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub model: EbmModel,
    pub ranked_pairs: Vec<RankedPair>,
    pub main_rounds_kept: Vec<usize>,
    pub warnings: Vec<String>,
}

fn check_labels(labels: &[u8], n_rows: usize) -> Result<()> {
    if labels.len() != n_rows {
        return Err(Error::Schema(format!("{} labels for {} rows", labels.len(), n_rows)));
    }
    if n_rows < 2 {
        return Err(Error::Validation("at least 2 training rows required".into()));
    }
    if labels.iter().any(|&y| y > 1) {
        return Err(Error::Validation("labels must be 0 or 1".into()));
    }
    let pos = labels.iter().filter(|&&y| y == 1).count();
    if pos == 0 || pos == n_rows {
        return Err(Error::DegenerateLabels("degenerate labels: only one class present".into()));
    }
    Ok(())
}

fn main_grids(binned: &BinnedDataset) -> Vec<TermGrid> {
    binned.main.iter().zip(&binned.main_bins).map(|(c, &nb)| TermGrid::main(c, nb)).collect()
}

fn pair_grids(binned: &BinnedDataset, pairs: &[(usize, usize)]) -> Vec<TermGrid> {
    pairs
        .iter()
        .map(|&(i, j)| TermGrid::pair(&binned.pair[i], binned.pair_bins[i], &binned.pair[j], binned.pair_bins[j]))
        .collect()
}

/// Logits of every row under one set of term scores.
fn term_logits(intercept: f64, grids: &[TermGrid], scores: &[Vec<f64>], n_rows: usize) -> Vec<f64> {
    let mut f = vec![intercept; n_rows];
    for (grid, s) in grids.iter().zip(scores) {
        for (fr, &cell) in f.iter_mut().zip(&grid.cells) {
            *fr += s[cell as usize];
        }
    }
    f
}

/// Element-wise mean of per-bag score tables, summed in bag order.
fn average_scores(per_bag: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let n = per_bag.len() as f64;
    let mut acc: Vec<Vec<f64>> = per_bag[0].iter().map(|t| vec![0.0; t.len()]).collect();
    for bag in per_bag {
        for (a, t) in acc.iter_mut().zip(bag) {
            for (x, y) in a.iter_mut().zip(t) {
                *x += y;
            }
        }
    }
    for a in acc.iter_mut() {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
    acc
}

fn average(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Shifts every table to mean 0 over the training rows and returns the total
/// shift for the intercept.
fn center(grids: &[TermGrid], scores: &mut [Vec<f64>]) -> f64 {
    let mut shift = 0.0;
    for (grid, s) in grids.iter().zip(scores.iter_mut()) {
        let n = grid.cells.len() as f64;
        let mean = grid.cells.iter().map(|&c| s[c as usize]).sum::<f64>() / n;
        for v in s.iter_mut() {
            *v -= mean;
        }
        shift += mean;
    }
    shift
}

struct BagMain {
    intercept: f64,
    scores: Vec<Vec<f64>>,
    training_loss: Vec<f64>,
    validation_loss: Vec<f64>,
    rounds_kept: usize,
}

fn fit_bags_main(binned: &BinnedDataset, labels: &[u8], config: &TrainConfig, bags: &[Bag]) -> Vec<BagMain> {
    let grids = main_grids(binned);
    bags.par_iter()
        .map(|bag| {
            let intercept = bag.prior_logit(labels);
            let base = vec![intercept; binned.n_rows];
            let out = cyclic_boost(&grids, &base, labels, bag, config);
            BagMain {
                intercept,
                scores: out.scores,
                training_loss: out.training_loss,
                validation_loss: out.validation_loss,
                rounds_kept: out.rounds_kept,
            }
        })
        .collect()
}

fn draw_bags(n_rows: usize, config: &TrainConfig) -> Vec<Bag> {
    (0..config.outer_bags).into_par_iter().map(|b| Bag::draw(n_rows, config, b)).collect()
}

/// Fits the main-effect terms, bagged and averaged, then centers them.
pub fn train_main_effects(binned: &BinnedDataset, labels: &[u8], config: &TrainConfig) -> Result<MainEffectsFit> {
    config.validate()?;
    check_labels(labels, binned.n_rows)?;
    let bags = draw_bags(binned.n_rows, config);
    let fits = fit_bags_main(binned, labels, config, &bags);
    let intercepts: Vec<f64> = fits.iter().map(|f| f.intercept).collect();
    let per_bag: Vec<Vec<Vec<f64>>> = fits.iter().map(|f| f.scores.clone()).collect();
    let mut scores = average_scores(&per_bag);
    let shift = center(&main_grids(binned), &mut scores);
    Ok(MainEffectsFit {
        intercept: average(&intercepts) + shift,
        scores,
        validation_loss: fits.iter().map(|f| f.validation_loss.clone()).collect(),
        training_loss: fits.iter().map(|f| f.training_loss.clone()).collect(),
        rounds_kept: fits.iter().map(|f| f.rounds_kept).collect(),
    })
}

/// Fits pair terms on top of a frozen main-effects model. Every bag boosts
/// from the same frozen logits; the per-bag pair tables are averaged and
/// centered.
pub fn train_pair_effects(
    binned: &BinnedDataset,
    labels: &[u8],
    main: &MainEffectsFit,
    pairs: &[(usize, usize)],
    config: &TrainConfig,
) -> Result<PairEffectsFit> {
    config.validate()?;
    check_labels(labels, binned.n_rows)?;
    let base = term_logits(main.intercept, &main_grids(binned), &main.scores, binned.n_rows);
    let bags = draw_bags(binned.n_rows, config);
    fit_pairs_on_bases(binned, labels, pairs, config, &bags, |_| base.clone())
}

fn fit_pairs_on_bases(
    binned: &BinnedDataset,
    labels: &[u8],
    pairs: &[(usize, usize)],
    config: &TrainConfig,
    bags: &[Bag],
    base_for: impl Fn(usize) -> Vec<f64> + Sync,
) -> Result<PairEffectsFit> {
    let d = binned.n_features();
    let mut warnings = Vec::new();
    for &(i, j) in pairs {
        if i == j || i >= d || j >= d {
            return Err(Error::Argument(format!("invalid pair ({i}, {j})")));
        }
    }
    let available = d * d.saturating_sub(1) / 2;
    let mut pairs = pairs.to_vec();
    if pairs.len() > available {
        warnings.push(format!("requested {} pairs but only {available} exist; truncated", pairs.len()));
        pairs.truncate(available);
    }
    if pairs.is_empty() {
        return Ok(PairEffectsFit { pairs, scores: Vec::new(), intercept_shift: 0.0, warnings });
    }
    let grids = pair_grids(binned, &pairs);
    let per_bag: Vec<Vec<Vec<f64>>> = bags
        .par_iter()
        .enumerate()
        .map(|(b, bag)| cyclic_boost(&grids, &base_for(b), labels, bag, config).scores)
        .collect();
    let mut scores = average_scores(&per_bag);
    let intercept_shift = center(&grids, &mut scores);
    Ok(PairEffectsFit { pairs, scores, intercept_shift, warnings })
}

/// Orders rows by their values and label so the fit does not depend on the
/// incoming row order.
fn canonical_order(rows: &[Vec<f64>], labels: &[u8]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.sort_by(|&a, &b| {
        rows[a]
            .iter()
            .zip(&rows[b])
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(labels[a].cmp(&labels[b]))
    });
    idx
}

fn fit_scaler_for(columns: &[String], rows: &[Vec<f64>], config: &TrainConfig) -> Result<ScalerParams> {
    for name in &config.unscaled_features {
        if !columns.contains(name) {
            return Err(Error::Argument(format!("unscaled feature {name:?} is not a matrix column")));
        }
    }
    let mut scaler = fit_scaler(rows)?;
    for (c, name) in columns.iter().enumerate() {
        if !config.scale || config.unscaled_features.contains(name) {
            scaler.disable_column(c);
        }
    }
    Ok(scaler)
}

fn fit_bin_definitions(
    columns: &[String],
    scaled: &[Vec<f64>],
    config: &TrainConfig,
) -> Result<Vec<BinDefinition>> {
    (0..columns.len())
        .map(|c| {
            let values: Vec<f64> = scaled.iter().map(|r| r[c]).collect();
            if values.iter().all(|v| is_missing(*v)) {
                Ok(BinDefinition {
                    feature: columns[c].clone(),
                    cuts: Vec::new(),
                    has_missing: true,
                    interaction_cuts: Vec::new(),
                })
            } else {
                BinDefinition::fit(&columns[c], &values, config.max_bins, config.max_interaction_bins)
            }
        })
        .collect()
}

/// Trains the full model: scaler, bins, bagged main effects, FAST-ranked
/// pairs and bagged pair effects.
pub fn train(matrix: &FeatureMatrix, config: &TrainConfig) -> Result<EbmModel> {
    Ok(train_with_report(matrix, config)?.model)
}

pub fn train_with_report(matrix: &FeatureMatrix, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    matrix.validate()?;
    check_labels(&matrix.labels, matrix.n_rows())?;

    let order = canonical_order(&matrix.rows, &matrix.labels);
    let rows: Vec<Vec<f64>> = order.iter().map(|&i| matrix.rows[i].clone()).collect();
    let labels: Vec<u8> = order.iter().map(|&i| matrix.labels[i]).collect();
    let n = rows.len();

    let scaler = fit_scaler_for(&matrix.columns, &rows, config)?;
    let scaled: Vec<Vec<f64>> = rows.iter().map(|r| scaler.apply_row(r)).collect();
    let bins = fit_bin_definitions(&matrix.columns, &scaled, config)?;
    let binned = bin_data(&scaled, &bins)?;

    let bags = draw_bags(n, config);
    let fits = fit_bags_main(&binned, &labels, config, &bags);
    let grids = main_grids(&binned);
    let mut intercept = average(&fits.iter().map(|f| f.intercept).collect::<Vec<_>>());
    let per_bag: Vec<Vec<Vec<f64>>> = fits.iter().map(|f| f.scores.clone()).collect();
    let mut main_scores = average_scores(&per_bag);

    let mut warnings = Vec::new();
    let mut ranked = Vec::new();
    let mut pair_fit = None;
    if config.n_interactions > 0 && binned.n_features() >= 2 {
        let f = term_logits(intercept, &grids, &main_scores, n);
        let residuals: Vec<f64> =
            labels.iter().zip(&f).map(|(&y, &fi)| y as f64 - sigmoid(fi)).collect();
        ranked = fast_rank_pairs(&binned, &residuals, &all_pairs(binned.n_features()));
        if config.n_interactions > ranked.len() {
            warnings.push(format!(
                "requested {} interactions but only {} pairs exist; truncated",
                config.n_interactions,
                ranked.len()
            ));
        }
        let top: Vec<(usize, usize)> = ranked.iter().take(config.n_interactions).map(|r| r.pair).collect();
        let bases: Vec<Vec<f64>> = fits.iter().map(|bm| term_logits(bm.intercept, &grids, &bm.scores, n)).collect();
        let fit = fit_pairs_on_bases(&binned, &labels, &top, config, &bags, |b| bases[b].clone())?;
        warnings.extend(fit.warnings.iter().cloned());
        pair_fit = Some(fit);
    } else if config.n_interactions > 0 {
        warnings.push("fewer than two features; no interactions fitted".into());
    }

    intercept += center(&grids, &mut main_scores);
    let mut terms: Vec<Term> = Vec::new();
    for (feature, mut scores) in main_scores.into_iter().enumerate() {
        if !bins[feature].has_missing {
            scores[0] = 0.0;
        }
        terms.push(Term::Main(MainTerm { feature, scores }));
    }
    if let Some(fit) = pair_fit {
        intercept += fit.intercept_shift;
        for (&(i, j), flat) in fit.pairs.iter().zip(fit.scores) {
            let ny = binned.pair_bins[j];
            let mut grid: Vec<Vec<f64>> = flat.chunks(ny).map(<[f64]>::to_vec).collect();
            if !bins[i].has_missing {
                grid[0].iter_mut().for_each(|v| *v = 0.0);
            }
            if !bins[j].has_missing {
                grid.iter_mut().for_each(|r| r[0] = 0.0);
            }
            terms.push(Term::Pair(PairTerm { features: [i, j], scores: grid }));
        }
    }

    let model = EbmModel {
        format_version: FORMAT_VERSION,
        link: "logit".into(),
        intercept,
        feature_schema: matrix.columns.clone(),
        scaler,
        bins,
        terms,
        config: config.clone(),
    };
    model.validate()?;
    Ok(TrainReport {
        model,
        ranked_pairs: ranked,
        main_rounds_kept: fits.iter().map(|f| f.rounds_kept).collect(),
        warnings,
    })
}
