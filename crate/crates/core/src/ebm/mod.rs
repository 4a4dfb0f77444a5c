//! Explainable boosting machine: an additive logit model of per-feature and
//! per-pair lookup tables fitted by cyclic gradient boosting.

pub mod binning;
pub mod boost;
pub mod config;
pub mod fast;
pub mod model;
pub mod train;
pub mod tree;

pub use binning::{bin_data, fit_cuts, BinDefinition, BinnedDataset, MISSING_BIN};
pub use boost::{log_loss_term, logit, mean_log_loss, sigmoid};
pub use config::{GradientMode, Profile, TrainConfig};
pub use fast::{all_pairs, fast_rank_pairs, RankedPair};
pub use model::{load_model, save_model, EbmModel, MainTerm, PairTerm, Term, FORMAT_VERSION};
pub use train::{train, train_main_effects, train_pair_effects, train_with_report, MainEffectsFit, PairEffectsFit, TrainReport};
