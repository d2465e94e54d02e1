//! Python bindings: instances, the exact solvers, the metaheuristics and the
//! dominance helpers.

use std::collections::{BTreeMap, HashMap};

use pyo3::create_exception;
use pyo3::exceptions::{PyIOError, PyException, PyValueError};
use pyo3::prelude::*;

use evrp::exact::{self, ExactError, ExactSolver, SweepDirection};
use evrp::instance::{self, LevelPowers, LoadError, Preset, Shape, VehicleParams};
use evrp::metaheuristics::{self, GAConfig, PSOConfig};
use evrp::{model, pareto, Point2, Weights};

create_exception!(pyevrp, InfeasibleError, PyException, "No plan satisfies the constraints.");

fn value_err(e: impl ToString) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn exact_err(e: ExactError) -> PyErr {
    match e {
        ExactError::Infeasible(msg) => InfeasibleError::new_err(msg),
        other => value_err(other),
    }
}

fn weights(w: Option<(f64, f64)>) -> PyResult<Weights> {
    match w {
        None => Ok(Weights::NORMALIZED),
        Some((t, c)) => Weights::new(t, c).map_err(value_err),
    }
}

/// A seeded or loaded problem instance.
#[pyclass(name = "Instance", module = "pyevrp", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: instance::Instance,
}

#[pymethods]
impl PyInstance {
    /// Generates from a preset name (`instance1`..`instance4`) or an explicit
    /// shape. Vehicle parameters default to the standard vehicle.
    #[staticmethod]
    #[pyo3(signature = (seed, preset=None, levels=None, max_per_level=None, p_edge=None, speed=None, capacity=None, mileage=None, initial_soc=None))]
    #[allow(clippy::too_many_arguments)]
    fn generate(
        seed: u64,
        preset: Option<&str>,
        levels: Option<usize>,
        max_per_level: Option<usize>,
        p_edge: Option<f64>,
        speed: Option<f64>,
        capacity: Option<f64>,
        mileage: Option<f64>,
        initial_soc: Option<f64>,
    ) -> PyResult<Self> {
        let shape = match (preset, levels, max_per_level, p_edge) {
            (Some(p), None, None, None) => p.parse::<Preset>().map_err(value_err)?.shape(),
            (None, Some(l), Some(m), Some(p)) => Shape::new(l, m, p),
            _ => return Err(value_err("give either preset or all of levels, max_per_level and p_edge")),
        };
        let d = VehicleParams::default();
        let params = VehicleParams {
            speed: speed.unwrap_or(d.speed),
            capacity: capacity.unwrap_or(d.capacity),
            mileage: mileage.unwrap_or(d.mileage),
            initial_soc: initial_soc.unwrap_or(d.initial_soc),
        };
        let inner = instance::generate_instance(shape, params, LevelPowers::default(), seed).map_err(value_err)?;
        Ok(PyInstance { inner })
    }

    #[staticmethod]
    fn load(path: &str) -> PyResult<Self> {
        match instance::load(path) {
            Ok(inner) => Ok(PyInstance { inner }),
            Err(LoadError::Io(e)) => Err(PyIOError::new_err(e.to_string())),
            Err(e) => Err(value_err(e)),
        }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        instance::load_str(text).map(|inner| PyInstance { inner }).map_err(value_err)
    }

    fn to_json(&self) -> String {
        instance::to_json(&self.inner)
    }

    fn save(&self, path: &str) -> PyResult<()> {
        instance::save(&self.inner, path).map_err(|e| PyIOError::new_err(e.to_string()))
    }

    /// Human-readable descriptions of every validation failure.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().iter().map(ToString::to_string).collect()
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    /// Every S -> D path as a list of node ids, in lexicographic order.
    fn paths(&self) -> PyResult<Vec<Vec<usize>>> {
        exact::enumerate_paths(&self.inner.graph, exact::DEFAULT_PATH_CAP).map_err(exact_err)
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Instance(nodes={}, edges={})", self.inner.node_count(), self.inner.graph.edges().len())
    }
}

/// A path plus the fraction of a full battery bought at each charging stop.
#[pyclass(name = "RouteSolution", module = "pyevrp", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyRouteSolution {
    path: Vec<usize>,
    charge: BTreeMap<usize, f64>,
}

impl PyRouteSolution {
    fn to_core(&self) -> model::RouteSolution {
        model::RouteSolution {
            path: self.path.clone(),
            charge: self.charge.clone(),
        }
    }

    fn from_core(s: model::RouteSolution) -> Self {
        PyRouteSolution {
            path: s.path,
            charge: s.charge,
        }
    }
}

#[pymethods]
impl PyRouteSolution {
    #[new]
    #[pyo3(signature = (path, charge=None))]
    fn new(path: Vec<usize>, charge: Option<HashMap<usize, f64>>) -> Self {
        PyRouteSolution {
            path,
            charge: charge.unwrap_or_default().into_iter().collect(),
        }
    }

    fn __repr__(&self) -> String {
        format!("RouteSolution(path={:?}, charge={:?})", self.path, self.charge)
    }
}

#[pyclass(name = "FrontPoint", module = "pyevrp", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyFrontPoint {
    time_h: f64,
    cost: f64,
    solution: PyRouteSolution,
}

impl From<exact::FrontPoint> for PyFrontPoint {
    fn from(p: exact::FrontPoint) -> Self {
        PyFrontPoint {
            time_h: p.objectives.time_h,
            cost: p.objectives.cost,
            solution: PyRouteSolution::from_core(p.solution),
        }
    }
}

#[pymethods]
impl PyFrontPoint {
    fn __repr__(&self) -> String {
        format!("FrontPoint(time_h={}, cost={}, path={:?})", self.time_h, self.cost, self.solution.path)
    }
}

#[pyclass(name = "EpochRecord", module = "pyevrp", get_all, frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyEpochRecord {
    epoch: usize,
    best_fitness: f64,
    best_time_h: Option<f64>,
    best_cost: Option<f64>,
    diversity: f64,
    exploration_pct: f64,
    exploitation_pct: f64,
}

#[pyclass(name = "RunOutcome", module = "pyevrp", get_all, frozen, skip_from_py_object)]
struct PyRunOutcome {
    fitness: f64,
    feasible: bool,
    solution: Option<PyRouteSolution>,
    time_h: Option<f64>,
    cost: Option<f64>,
    history: Vec<PyEpochRecord>,
}

impl From<metaheuristics::RunOutcome> for PyRunOutcome {
    fn from(o: metaheuristics::RunOutcome) -> Self {
        PyRunOutcome {
            fitness: o.fitness,
            feasible: o.is_feasible(),
            time_h: o.objectives.map(|x| x.time_h),
            cost: o.objectives.map(|x| x.cost),
            solution: o.solution.map(PyRouteSolution::from_core),
            history: o
                .history
                .epochs
                .into_iter()
                .map(|e| PyEpochRecord {
                    epoch: e.epoch,
                    best_fitness: e.best_fitness,
                    best_time_h: e.best_time_h,
                    best_cost: e.best_cost,
                    diversity: e.diversity,
                    exploration_pct: e.exploration_pct,
                    exploitation_pct: e.exploitation_pct,
                })
                .collect(),
        }
    }
}

/// `(time_h, cost)` of a feasible plan; raises `InfeasibleError` otherwise.
#[pyfunction]
fn evaluate(inst: &PyInstance, solution: &PyRouteSolution) -> PyResult<(f64, f64)> {
    let o = model::evaluate(&inst.inner, &solution.to_core()).map_err(|e| InfeasibleError::new_err(e.to_string()))?;
    Ok((o.time_h, o.cost))
}

/// `(feasible, [(constraint, location, magnitude), ...])`.
#[pyfunction]
fn check_feasible(inst: &PyInstance, solution: &PyRouteSolution) -> (bool, Vec<(String, String, f64)>) {
    let r = model::evaluation_record(&inst.inner, &solution.to_core());
    (r.feasible, r.violations.into_iter().map(|v| (v.constraint, v.at, v.magnitude)).collect())
}

fn solver(inst: &PyInstance) -> PyResult<ExactSolver<'_>> {
    ExactSolver::new(&inst.inner).map_err(exact_err)
}

#[pyfunction]
fn min_time(inst: &PyInstance) -> PyResult<PyFrontPoint> {
    solver(inst)?.min_time().map(Into::into).map_err(exact_err)
}

#[pyfunction]
fn min_cost(inst: &PyInstance) -> PyResult<PyFrontPoint> {
    solver(inst)?.min_cost().map(Into::into).map_err(exact_err)
}

/// Pareto front from an epsilon-constraint sweep, sorted by time. `step`
/// defaults to a twentieth of the objective range; `converse` bounds time
/// and minimizes cost instead.
#[pyfunction]
#[pyo3(signature = (inst, step=None, converse=false))]
fn epsilon_constraint(inst: &PyInstance, step: Option<f64>, converse: bool) -> PyResult<Vec<PyFrontPoint>> {
    let direction = if converse {
        SweepDirection::CostUnderTime
    } else {
        SweepDirection::TimeUnderCost
    };
    let front = solver(inst)?.epsilon_constraint(step, direction).map_err(exact_err)?;
    Ok(front.points.into_iter().map(Into::into).collect())
}

/// Brute-force front over charge amounts on a `grid_n` grid.
#[pyfunction]
#[pyo3(signature = (inst, grid_n=50, cap=exact::DEFAULT_ORACLE_CAP))]
fn grid_oracle(inst: &PyInstance, grid_n: u32, cap: u128) -> PyResult<Vec<PyFrontPoint>> {
    let front = exact::grid_oracle(&inst.inner, grid_n, cap).map_err(exact_err)?;
    Ok(front.points.into_iter().map(Into::into).collect())
}

#[pyfunction]
#[pyo3(signature = (inst, population=1000, epochs=1000, p_crossover=0.4, p_mutation=0.4, seed=0, weights=None))]
#[allow(clippy::too_many_arguments)]
fn run_ga(
    py: Python<'_>,
    inst: &PyInstance,
    population: usize,
    epochs: usize,
    p_crossover: f64,
    p_mutation: f64,
    seed: u64,
    weights: Option<(f64, f64)>,
) -> PyResult<PyRunOutcome> {
    let cfg = GAConfig {
        population,
        epochs,
        p_crossover,
        p_mutation,
        seed,
    };
    let w = self::weights(weights)?;
    let out = py.detach(|| metaheuristics::run_ga(&inst.inner, &cfg, w)).map_err(value_err)?;
    Ok(out.into())
}

#[pyfunction]
#[pyo3(signature = (inst, population=1000, epochs=1000, seed=0, w_start=0.1, w_end=0.5, c1=2.5, c2=2.5, weights=None))]
#[allow(clippy::too_many_arguments)]
fn run_pso(
    py: Python<'_>,
    inst: &PyInstance,
    population: usize,
    epochs: usize,
    seed: u64,
    w_start: f64,
    w_end: f64,
    c1: f64,
    c2: f64,
    weights: Option<(f64, f64)>,
) -> PyResult<PyRunOutcome> {
    let cfg = PSOConfig {
        population,
        epochs,
        seed,
        w_start,
        w_end,
        c1,
        c2,
    };
    let w = self::weights(weights)?;
    let out = py.detach(|| metaheuristics::run_pso(&inst.inner, &cfg, w)).map_err(value_err)?;
    Ok(out.into())
}

fn points(v: &[(f64, f64)]) -> Vec<Point2> {
    v.iter().map(|&(t, c)| Point2::new(t, c)).collect()
}

/// Whether `(time_h, cost)` point `a` dominates `b`.
#[pyfunction]
fn dominates(a: (f64, f64), b: (f64, f64)) -> bool {
    pareto::dominates(&Point2::new(a.0, a.1), &Point2::new(b.0, b.1))
}

/// Nondominated subset, sorted by time, with near-duplicates merged.
#[pyfunction]
fn filter_nondominated(pts: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    let tagged = points(&pts).into_iter().map(|p| (p, ())).collect();
    pareto::filter_nondominated(tagged).into_iter().map(|(p, ())| (p.time_h, p.cost)).collect()
}

/// `(a_dominated_by_b, b_dominated_by_a, mutual_nondominated, a_standing,
/// b_standing)` where standings are `dominated`, `dominating` or
/// `nondominated`.
#[pyfunction]
fn front_compare(a: Vec<(f64, f64)>, b: Vec<(f64, f64)>) -> (usize, usize, usize, Vec<String>, Vec<String>) {
    let r = pareto::front_compare(&points(&a), &points(&b));
    let names = |s: Vec<pareto::Standing>| s.iter().map(ToString::to_string).collect();
    (r.a_dominated_by_b, r.b_dominated_by_a, r.mutual_nondominated, names(r.a_standing), names(r.b_standing))
}

#[pymodule]
fn pyevrp(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("InfeasibleError", m.py().get_type::<InfeasibleError>())?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyRouteSolution>()?;
    m.add_class::<PyFrontPoint>()?;
    m.add_class::<PyEpochRecord>()?;
    m.add_class::<PyRunOutcome>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(check_feasible, m)?)?;
    m.add_function(wrap_pyfunction!(min_time, m)?)?;
    m.add_function(wrap_pyfunction!(min_cost, m)?)?;
    m.add_function(wrap_pyfunction!(epsilon_constraint, m)?)?;
    m.add_function(wrap_pyfunction!(grid_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_ga, m)?)?;
    m.add_function(wrap_pyfunction!(run_pso, m)?)?;
    m.add_function(wrap_pyfunction!(dominates, m)?)?;
    m.add_function(wrap_pyfunction!(filter_nondominated, m)?)?;
    m.add_function(wrap_pyfunction!(front_compare, m)?)?;
    Ok(())
}
