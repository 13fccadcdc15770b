//! Python bindings: `import pyclutchsim`.

use std::collections::HashMap;

use clutchsim::mlp::TrainingData;
use clutchsim::sweep::EngagementSample;
use clutchsim::{Config, Configuration, Error, MlpModel, TorqueSet};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config { .. } | Error::Domain(_) | Error::InvalidParams(_) | Error::Dimension { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_configuration(s: &str) -> PyResult<Configuration> {
    s.parse().map_err(|e: Error| PyValueError::new_err(e.to_string()))
}

/// Clutch, driveline and scenario parameters loaded from a TOML file or the
/// built-in defaults.
#[pyclass(name = "Simulator", module = "pyclutchsim")]
struct PySimulator {
    cfg: Config,
}

#[pymethods]
impl PySimulator {
    #[new]
    #[pyo3(signature = (config_path=None, configuration=None, seed=None))]
    fn new(config_path: Option<&str>, configuration: Option<&str>, seed: Option<u64>) -> PyResult<Self> {
        let mut cfg = match config_path {
            Some(p) => Config::load(p).map_err(to_py)?,
            None => Config::default(),
        };
        if let Some(c) = configuration {
            cfg.set_configuration(parse_configuration(c)?);
        }
        if let Some(s) = seed {
            cfg.set_seed(s);
        }
        Ok(Self { cfg })
    }

    #[getter]
    fn configuration(&self) -> String {
        self.cfg.driveline.configuration.to_string()
    }

    /// Effective parameters as TOML.
    fn to_toml(&self) -> String {
        self.cfg.to_toml()
    }

    #[pyo3(signature = (shoe_mass=None, preload=None))]
    fn onset_speed(&self, shoe_mass: Option<f64>, preload: Option<f64>) -> PyResult<f64> {
        let mut p = self.cfg.clutch_params();
        if let Some(m) = shoe_mass {
            p = p.with_shoe_mass(m);
        }
        if let Some(f) = preload {
            p = p.with_preload(f);
        }
        clutchsim::onset_speed(&p).map_err(to_py)
    }

    fn transmitted_torque(&self, omega: f64) -> PyResult<f64> {
        clutchsim::transmitted_torque(omega, &self.cfg.clutch_params()).map_err(to_py)
    }

    fn torque_capacity(&self, omega: f64) -> PyResult<f64> {
        clutchsim::torque_capacity(omega, &self.cfg.clutch_params()).map_err(to_py)
    }

    /// `(alpha_input, alpha_second, one_way_torque)` in first gear.
    fn solve_first_gear(&self, input_torque: f64, output_torque: f64, centrifugal_torque: f64) -> PyResult<(f64, f64, f64)> {
        let t = TorqueSet { input_torque, output_torque, centrifugal_torque };
        let s = clutchsim::solve_first_gear(&t, &self.cfg.driveline_params()).map_err(to_py)?;
        Ok((s.alpha_input, s.alpha_second, s.one_way_torque))
    }

    /// `(alpha_input, alpha_second)` in second gear with the clutch slipping.
    fn solve_second_gear_slipping(&self, input_torque: f64, output_torque: f64, centrifugal_torque: f64) -> PyResult<(f64, f64)> {
        let t = TorqueSet { input_torque, output_torque, centrifugal_torque };
        let s = clutchsim::solve_second_gear_slipping(&t, &self.cfg.driveline_params()).map_err(to_py)?;
        Ok((s.alpha_input, s.alpha_second))
    }

    /// `(alpha, hold_torque)` with the clutch locked.
    fn solve_locked(&self, input_torque: f64, output_torque: f64) -> PyResult<(f64, f64)> {
        let t = TorqueSet { input_torque, output_torque, centrifugal_torque: 0.0 };
        let s = clutchsim::solve_locked(&t, &self.cfg.driveline_params()).map_err(to_py)?;
        Ok((s.alpha, s.hold_torque))
    }

    /// Runs the shift scenario; returns trace columns plus `modes` and energy totals.
    fn simulate(&self, py: Python<'_>) -> PyResult<HashMap<String, Py<PyAny>>> {
        let trace = py
            .detach(|| {
                clutchsim::run_scenario(
                    &self.cfg.shift_scenario(),
                    &self.cfg.clutch_params(),
                    &self.cfg.driveline_params(),
                    &self.cfg.sim_config(),
                )
            })
            .map_err(to_py)?;
        let col = |f: fn(&clutchsim::sim::TraceRow) -> f64| -> Vec<f64> { trace.rows.iter().map(f).collect() };
        let mut out: HashMap<String, Py<PyAny>> = HashMap::new();
        out.insert("t".into(), col(|r| r.t).into_pyobject(py)?.into_any().unbind());
        out.insert("omega_input".into(), col(|r| r.omega_input).into_pyobject(py)?.into_any().unbind());
        out.insert("omega_driven".into(), col(|r| r.omega_driven).into_pyobject(py)?.into_any().unbind());
        out.insert("T_centrifugal".into(), col(|r| r.clutch_torque).into_pyobject(py)?.into_any().unbind());
        out.insert("E_dissipated".into(), col(|r| r.dissipated_energy).into_pyobject(py)?.into_any().unbind());
        let mode: Vec<&str> = trace.rows.iter().map(|r| r.mode.label()).collect();
        out.insert("mode".into(), mode.into_pyobject(py)?.into_any().unbind());
        let modes: Vec<&str> = trace.mode_sequence().iter().map(|m| m.label()).collect();
        out.insert("modes".into(), modes.into_pyobject(py)?.into_any().unbind());
        out.insert("input_work".into(), trace.input_work.into_pyobject(py)?.into_any().unbind());
        out.insert("energy_imbalance".into(), trace.energy_imbalance().into_pyobject(py)?.into_any().unbind());
        Ok(out)
    }

    /// Input speed at full engagement, or `None`.
    fn full_engagement_speed(&self, py: Python<'_>, shoe_mass: f64, preload: f64) -> PyResult<Option<f64>> {
        let clutch = self.cfg.clutch_params().with_shoe_mass(shoe_mass).with_preload(preload);
        py.detach(|| {
            clutchsim::full_engagement_speed(
                &clutch,
                &self.cfg.driveline_params(),
                &self.cfg.engagement_scenario(),
                &self.cfg.sim_config(),
            )
        })
        .map(|e| e.speed())
        .map_err(to_py)
    }

    /// `[(shoe_mass, preload, speed or None)]` over the configured grid.
    fn sweep(&self, py: Python<'_>) -> PyResult<Vec<(f64, f64, Option<f64>)>> {
        let surface = py
            .detach(|| {
                clutchsim::sweep_engagement_speed(
                    &self.cfg.grid_spec(),
                    &self.cfg.clutch_params(),
                    &self.cfg.driveline_params(),
                    &self.cfg.engagement_scenario(),
                    &self.cfg.sim_config(),
                )
            })
            .map_err(to_py)?;
        Ok(surface.iter().map(|p| (p.shoe_mass, p.preload, p.engagement.speed())).collect())
    }

    /// `[(shoe_mass, preload, engaged)]` labelled by the simulator.
    fn dataset(&self, py: Python<'_>) -> PyResult<Vec<(f64, f64, bool)>> {
        let ds = py.detach(|| self.generate()).map_err(to_py)?;
        Ok(ds.samples.iter().map(|s| (s.shoe_mass, s.preload, s.engaged)).collect())
    }

    /// Generates the dataset and trains the classifier on it.
    fn train(&self, py: Python<'_>) -> PyResult<(PyModel, f64)> {
        let (model, metrics) = py
            .detach(|| {
                let ds = self.generate()?;
                clutchsim::train(&TrainingData::from(&ds), &self.cfg.mlp_spec(2), &self.cfg.train_config())
            })
            .map_err(to_py)?;
        Ok((PyModel { model }, metrics.validation_accuracy))
    }

    fn __repr__(&self) -> String {
        format!("Simulator(configuration={:?})", self.configuration())
    }
}

impl PySimulator {
    fn generate(&self) -> clutchsim::Result<clutchsim::EngagementDataset> {
        clutchsim::generate_dataset(
            &self.cfg.grid_spec(),
            &self.cfg.clutch_params(),
            &self.cfg.driveline_params(),
            &self.cfg.engagement_scenario(),
            &self.cfg.sim_config(),
            self.cfg.train.seed,
        )
    }
}

/// Trained engagement classifier.
#[pyclass(name = "Model", module = "pyclutchsim")]
struct PyModel {
    model: MlpModel,
}

#[pymethods]
impl PyModel {
    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        MlpModel::load(path).map(|model| Self { model }).map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        MlpModel::from_json(text, "<string>").map(|model| Self { model }).map_err(to_py)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        self.model.save(path).map_err(to_py)
    }

    fn to_json(&self) -> String {
        self.model.to_json()
    }

    fn predict_proba(&self, shoe_mass: f64, preload: f64) -> PyResult<f64> {
        self.model.forward(&[shoe_mass, preload]).map_err(to_py)
    }

    fn predict(&self, shoe_mass: f64, preload: f64) -> PyResult<bool> {
        clutchsim::predict_engagement(&self.model, shoe_mass, preload, &[]).map_err(to_py)
    }

    #[getter]
    fn parameter_count(&self) -> usize {
        self.model.parameter_count()
    }
}

/// Engagement label used by the datasets.
#[pyfunction]
fn engaged_label(full_engagement_speed: Option<f64>, operating_speed_max: f64) -> bool {
    EngagementSample::label(full_engagement_speed, operating_speed_max)
}

#[pyfunction]
fn default_config() -> &'static str {
    clutchsim::config::DEFAULT_CONFIG
}

#[pymodule]
fn pyclutchsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySimulator>()?;
    m.add_class::<PyModel>()?;
    m.add_function(wrap_pyfunction!(engaged_label, m)?)?;
    m.add_function(wrap_pyfunction!(default_config, m)?)?;
    Ok(())
}
