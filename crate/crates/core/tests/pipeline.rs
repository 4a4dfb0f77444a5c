use pestcast::ebm::{self, EbmModel, TrainConfig};
use pestcast::features::{self, Case, FeatureConfig, FeatureMatrix};
use pestcast::synthgen::{self, SynthConfig};
use pestcast::{dataset, eval, explain};

fn featurize(cfg: &SynthConfig) -> FeatureMatrix {
    let data = synthgen::generate(cfg).unwrap();
    let fc = FeatureConfig::default();
    let assembly = dataset::assemble_raw_instances(&data.traps, &data.weather, &data.vi, fc.window_days, fc.n_lags).unwrap();
    features::build_feature_matrix(&assembly.instances, &fc).unwrap()
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

#[test]
fn default_network_yields_about_526_instances() {
    let m = featurize(&SynthConfig::default());
    assert!((473..=579).contains(&m.n_rows()), "{} instances", m.n_rows());
    assert_eq!(m.trap_ids().len(), 26);
    let p = m.prevalence();
    assert!((0.25..=0.75).contains(&p), "prevalence {p}");
}

#[test]
fn generated_files_are_byte_identical_for_a_seed() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synthgen::generate(&SynthConfig::with_seed(7)).unwrap().write_to_dir(a.path()).unwrap();
    synthgen::generate(&SynthConfig::with_seed(7)).unwrap().write_to_dir(b.path()).unwrap();
    for name in ["traps.csv", "weather.csv", "vi.csv", "generator_meta.json"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
}

#[test]
fn written_csvs_reload_to_the_same_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthgen::generate(&SynthConfig::with_seed(3)).unwrap();
    data.write_to_dir(dir.path()).unwrap();
    let traps = dataset::load_trap_csv(dir.path().join("traps.csv")).unwrap();
    let weather = dataset::load_weather_csv(dir.path().join("weather.csv")).unwrap();
    let vi = dataset::load_vi_csv(dir.path().join("vi.csv")).unwrap();
    let fc = FeatureConfig::default();
    let from_disk = dataset::assemble_raw_instances(&traps, &weather, &vi, fc.window_days, fc.n_lags).unwrap();
    let matrix = features::build_feature_matrix(&from_disk.instances, &fc).unwrap();

    let path = dir.path().join("matrix.csv");
    matrix.save(&path).unwrap();
    let back = FeatureMatrix::load(&path).unwrap();
    assert_eq!(back.columns, matrix.columns);
    assert_eq!(back.labels, matrix.labels);
    assert_eq!(back.meta, matrix.meta);
    for (r, s) in back.rows.iter().zip(&matrix.rows) {
        for (a, b) in r.iter().zip(s) {
            assert!(a.to_bits() == b.to_bits() || (a.is_nan() && b.is_nan()));
        }
    }
}

#[test]
fn case_a_adds_exactly_the_lag_columns() {
    let a = featurize(&SynthConfig::with_seed(1));
    let b = a.for_case(Case::B).unwrap();
    assert_eq!(a.n_cols(), b.n_cols() + 3);
    assert!(b.columns.iter().all(|c| !features::is_lag_column(c)));
    assert_eq!(a.columns, FeatureConfig::default().column_names());
}

#[test]
fn desk_model_separates_training_data() {
    let m = featurize(&SynthConfig::default());
    let model = ebm::train(&m, &TrainConfig::desk()).unwrap();
    let proba = model.predict_proba_matrix(&m).unwrap();
    let auc = eval::auc(&proba, &m.labels).unwrap();
    assert!(auc > 0.8, "training AUC {auc}");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    model.save(&path).unwrap();
    let back = EbmModel::load(&path).unwrap();
    assert_eq!(back, model);
    assert_eq!(back.predict_proba_matrix(&m).unwrap(), proba);
}

#[test]
fn null_signal_gives_chance_level_auc() {
    let m = featurize(&SynthConfig::with_seed(42).null_signal());
    let b = m.for_case(Case::B).unwrap();
    let result = eval::repeated_random_split_eval(&b, &TrainConfig::desk(), 10, 0.7, 42).unwrap();
    let auc = result.summary.auc.mean;
    assert!((auc - 0.5).abs() <= 0.07, "null-signal AUC {auc}");
}

#[test]
fn catches_track_temperature_more_as_its_coefficient_grows() {
    let coefs = [0.0, 0.2, 0.4, 0.6, 0.8];
    let mut mean_corr = vec![0.0; coefs.len()];
    for seed in 0..10 {
        for (k, &c) in coefs.iter().enumerate() {
            let mut cfg = SynthConfig::with_seed(seed);
            cfg.population.temp_coef = c;
            let m = featurize(&cfg);
            let gdd = m.column(m.column_index("gdd_acc").unwrap());
            let catches: Vec<f64> = m.meta.iter().map(|x| x.raw_catches as f64).collect();
            mean_corr[k] += pearson(&gdd, &catches) / 10.0;
        }
    }
    assert!(mean_corr.windows(2).all(|w| w[1] > w[0]), "{mean_corr:?}");
}

#[test]
fn global_importance_ignores_reference_row_order() {
    let m = featurize(&SynthConfig::with_seed(5));
    let cfg = TrainConfig { outer_bags: 2, inner_bags: 2, boosting_rounds: 200, ..TrainConfig::desk() };
    let model = ebm::train(&m, &cfg).unwrap();
    let forward = explain::global_importance(&model, &m).unwrap();
    let reversed: Vec<usize> = (0..m.n_rows()).rev().collect();
    let backward = explain::global_importance(&model, &m.subset(&reversed)).unwrap();
    let names = |r: &explain::GlobalImportanceReport| r.entries.iter().map(|e| e.term.clone()).collect::<Vec<_>>();
    assert_eq!(names(&forward), names(&backward));
    for (a, b) in forward.entries.iter().zip(&backward.entries) {
        assert!((a.value - b.value).abs() <= 1e-12 * a.value.max(1.0));
    }
}

#[test]
fn borderline_predictions_have_opposing_contributions() {
    let m = featurize(&SynthConfig::with_seed(42));
    let model = ebm::train(&m, &TrainConfig::desk()).unwrap();
    let mut borderline = 0;
    for row in &m.rows {
        let e = explain::local_explanation(&model, row).unwrap();
        if (e.probability - 0.5).abs() <= 0.05 {
            borderline += 1;
            assert!(e.contributions.iter().any(|c| c.value > 0.0));
            assert!(e.contributions.iter().any(|c| c.value < 0.0));
        }
    }
    assert!(borderline > 0);
}

#[test]
fn evaluation_is_reproducible_and_single_split_matches_direct_training() {
    let m = featurize(&SynthConfig::with_seed(11));
    let cfg = TrainConfig { outer_bags: 2, inner_bags: 2, boosting_rounds: 150, ..TrainConfig::desk() };
    let first = eval::repeated_random_split_eval(&m, &cfg, 2, 0.7, 9).unwrap();
    let second = eval::repeated_random_split_eval(&m, &cfg, 2, 0.7, 9).unwrap();
    assert_eq!(first, second);

    let one = eval::repeated_random_split_eval(&m, &cfg, 1, 0.7, 9).unwrap();
    let split = &one.splits[0];
    let model = ebm::train(&m.subset(&split.train_rows), &cfg).unwrap();
    let proba = model.predict_proba_matrix(&m.subset(&split.test_rows)).unwrap();
    assert_eq!(proba, split.proba);
    let test_labels: Vec<u8> = split.test_rows.iter().map(|&r| m.labels[r]).collect();
    assert_eq!(one.summary.auc.mean, eval::auc(&proba, &test_labels).unwrap());
    assert_eq!(one.summary.auc.std, 0.0);
}

#[test]
fn test_rows_do_not_influence_the_split_model() {
    let m = featurize(&SynthConfig::with_seed(12));
    let cfg = TrainConfig { outer_bags: 2, inner_bags: 1, boosting_rounds: 100, ..TrainConfig::desk() };
    let (train_rows, test_rows, _) = eval::random_split(&m.labels, 0.7, 1, 0).unwrap();
    let mut perturbed = m.clone();
    for &r in &test_rows {
        for v in &mut perturbed.rows[r] {
            *v += 1000.0;
        }
    }
    let a = eval::evaluate_split(&m, &cfg, &train_rows, &test_rows).unwrap();
    let b = eval::evaluate_split(&perturbed, &cfg, &train_rows, &test_rows).unwrap();
    let model_a = ebm::train(&m.subset(&train_rows), &cfg).unwrap();
    let model_b = ebm::train(&perturbed.subset(&train_rows), &cfg).unwrap();
    assert_eq!(model_a, model_b);
    assert_eq!(a.train_rows, b.train_rows);
}
