use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pestcast::ebm::{self, TrainConfig};
use pestcast::features::{Case, FeatureConfig};
use pestcast::{dataset, eval, explain, features, synthgen};

fn to_py(e: pestcast::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_case(case: &str) -> PyResult<Case> {
    case.parse().map_err(to_py)
}

fn train_config(profile: &str, seed: u64, config_json: Option<&str>) -> PyResult<TrainConfig> {
    let mut cfg = match config_json {
        Some(text) => serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?,
        None => TrainConfig::for_profile(profile.parse().map_err(to_py)?),
    };
    cfg.seed = seed;
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Labelled feature table with trap/date metadata.
#[pyclass(name = "FeatureMatrix", module = "pestcast_py")]
pub struct PyFeatureMatrix {
    inner: features::FeatureMatrix,
}

#[pymethods]
impl PyFeatureMatrix {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyFeatureMatrix { inner: features::FeatureMatrix::load(path).map_err(to_py)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    #[getter]
    fn columns(&self) -> Vec<String> {
        self.inner.columns.clone()
    }

    #[getter]
    fn labels(&self) -> Vec<u8> {
        self.inner.labels.clone()
    }

    #[getter]
    fn trap_ids(&self) -> Vec<String> {
        self.inner.meta.iter().map(|m| m.trap_id.clone()).collect()
    }

    #[getter]
    fn n_rows(&self) -> usize {
        self.inner.n_rows()
    }

    /// Rows as lists of floats; missing values are NaN.
    fn rows(&self) -> Vec<Vec<f64>> {
        self.inner.rows.clone()
    }

    fn for_case(&self, case: &str) -> PyResult<Self> {
        Ok(PyFeatureMatrix { inner: self.inner.for_case(parse_case(case)?).map_err(to_py)? })
    }

    fn prevalence(&self) -> f64 {
        self.inner.prevalence()
    }

    fn __len__(&self) -> usize {
        self.inner.n_rows()
    }
}

/// Trained additive model.
#[pyclass(name = "EbmModel", module = "pestcast_py")]
pub struct PyEbmModel {
    inner: ebm::EbmModel,
}

#[pymethods]
impl PyEbmModel {
    #[staticmethod]
    #[pyo3(signature = (matrix, profile = "desk", seed = 42, config_json = None))]
    fn train(py: Python<'_>, matrix: &PyFeatureMatrix, profile: &str, seed: u64, config_json: Option<&str>) -> PyResult<Self> {
        let cfg = train_config(profile, seed, config_json)?;
        let m = matrix.inner.clone();
        let inner = py.detach(move || ebm::train(&m, &cfg)).map_err(to_py)?;
        Ok(PyEbmModel { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        Ok(PyEbmModel { inner: ebm::load_model(path).map_err(to_py)? })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(PyEbmModel { inner: ebm::EbmModel::from_json(text).map_err(to_py)? })
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.inner.save(path).map_err(to_py)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(to_py)
    }

    #[getter]
    fn intercept(&self) -> f64 {
        self.inner.intercept
    }

    #[getter]
    fn feature_schema(&self) -> Vec<String> {
        self.inner.feature_schema.clone()
    }

    fn term_names(&self) -> Vec<String> {
        self.inner.term_names()
    }

    fn predict_logit(&self, row: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_logit(&row).map_err(to_py)
    }

    fn predict_proba(&self, row: Vec<f64>) -> PyResult<f64> {
        self.inner.predict_proba(&row).map_err(to_py)
    }

    #[pyo3(signature = (row, cutoff = 0.5))]
    fn predict_class(&self, row: Vec<f64>, cutoff: f64) -> PyResult<u8> {
        self.inner.predict_class(&row, cutoff).map_err(to_py)
    }

    fn predict_proba_matrix(&self, matrix: &PyFeatureMatrix) -> PyResult<Vec<f64>> {
        self.inner.predict_proba_matrix(&matrix.inner).map_err(to_py)
    }

    /// `(term, mean |contribution|)` pairs, most important first.
    fn global_importance(&self, reference: &PyFeatureMatrix) -> PyResult<Vec<(String, f64)>> {
        let report = explain::global_importance(&self.inner, &reference.inner).map_err(to_py)?;
        Ok(report.entries.into_iter().map(|e| (e.term, e.value)).collect())
    }

    /// `(intercept, [(term, contribution)], probability)` for one row.
    fn local_explanation(&self, row: Vec<f64>) -> PyResult<(f64, Vec<(String, f64)>, f64)> {
        let e = explain::local_explanation(&self.inner, &row).map_err(to_py)?;
        let probability = e.probability;
        Ok((e.intercept, e.contributions.into_iter().map(|c| (c.term, c.value)).collect(), probability))
    }
}

/// Writes a synthetic trap network to `out_dir`.
#[pyfunction]
#[pyo3(signature = (out_dir, seed = 42, null_signal = false))]
fn generate(out_dir: &str, seed: u64, null_signal: bool) -> PyResult<()> {
    let mut cfg = synthgen::SynthConfig::with_seed(seed);
    if null_signal {
        cfg = cfg.null_signal();
    }
    synthgen::generate(&cfg).and_then(|d| d.write_to_dir(out_dir)).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (traps, weather, vi, case = "A"))]
fn featurize(traps: &str, weather: &str, vi: &str, case: &str) -> PyResult<PyFeatureMatrix> {
    let cfg = FeatureConfig { case: parse_case(case)?, ..FeatureConfig::default() };
    let t = dataset::load_trap_csv(traps).map_err(to_py)?;
    let w = dataset::load_weather_csv(weather).map_err(to_py)?;
    let v = dataset::load_vi_csv(vi).map_err(to_py)?;
    let assembly = dataset::assemble_raw_instances(&t, &w, &v, cfg.window_days, cfg.n_lags).map_err(to_py)?;
    let inner = features::build_feature_matrix(&assembly.instances, &cfg).map_err(to_py)?;
    Ok(PyFeatureMatrix { inner })
}

#[pyfunction]
fn auc(scores: Vec<f64>, labels: Vec<u8>) -> PyResult<f64> {
    eval::auc(&scores, &labels).map_err(to_py)
}

/// Repeated random-split metrics as a JSON string.
#[pyfunction]
#[pyo3(signature = (matrix, n_splits = 10, train_frac = 0.7, seed = 42, profile = "desk"))]
fn evaluate(py: Python<'_>, matrix: &PyFeatureMatrix, n_splits: usize, train_frac: f64, seed: u64, profile: &str) -> PyResult<String> {
    let cfg = train_config(profile, seed, None)?;
    let m = matrix.inner.clone();
    let result = py
        .detach(move || eval::repeated_random_split_eval(&m, &cfg, n_splits, train_frac, seed))
        .map_err(to_py)?;
    pestcast::json::to_string(&result.summary).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pymodule]
fn pestcast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("MODEL_FORMAT_VERSION", ebm::FORMAT_VERSION)?;
    m.add_class::<PyFeatureMatrix>()?;
    m.add_class::<PyEbmModel>()?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_function(wrap_pyfunction!(featurize, m)?)?;
    m.add_function(wrap_pyfunction!(auc, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}
