//! Python bindings. Vectors are lists of complex numbers, operators are
//! wrapped, and structured reports come back as JSON strings.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use ugleason::bases::{branching_basis as core_branching_basis, search_unentangled_basis, OrthonormalBasis};
use ugleason::experiment::{counterexample_frame, run_counterexample, run_roundtrip, DEFAULT_EXTRA_SAMPLES};
use ugleason::frame::{audit_weight as core_audit_weight, pathological_profile, BasisFamily, FrameFunction, FrameSamples};
use ugleason::linalg::{
    random_psd as core_random_psd, simple_tensor_factor as core_factor, Operator, SpaceSpec, UnitVector,
};
use ugleason::multimeasure::dyadic_decompose as core_dyadic;
use ugleason::reconstruct::{holdout_validate as core_holdout, reconstruct as core_reconstruct, solve_t, DesignSystem};
use ugleason::reconstruct::ReconstructionResult;

create_exception!(ugleason, UgleasonError, PyValueError);

fn err(e: impl std::fmt::Display) -> PyErr {
    UgleasonError::new_err(e.to_string())
}

fn space(dims: Vec<usize>) -> PyResult<SpaceSpec> {
    SpaceSpec::new(dims).map_err(err)
}

fn unit(components: Vec<Complex64>) -> PyResult<UnitVector> {
    UnitVector::from_components(components).map_err(err)
}

fn components(v: &UnitVector) -> Vec<Complex64> {
    v.as_vector().iter().copied().collect()
}

fn families(names: Option<Vec<String>>) -> PyResult<Vec<BasisFamily>> {
    match names {
        None => Ok(BasisFamily::ALL.to_vec()),
        Some(ns) => ns.iter().map(|n| n.parse().map_err(err)).collect(),
    }
}

#[pyclass(name = "Operator", module = "ugleason", from_py_object)]
#[derive(Clone)]
struct PyOperator(Operator);

#[pymethods]
impl PyOperator {
    #[new]
    fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        Operator::from_rows(&rows).map(Self).map_err(err)
    }

    #[staticmethod]
    fn identity(d: usize) -> Self {
        Self(Operator::identity(d))
    }

    #[staticmethod]
    fn random_psd(d: usize, seed: u64) -> Self {
        Self(core_random_psd(d, seed))
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text).map(Self).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn to_list(&self) -> Vec<Vec<Complex64>> {
        let m = self.0.matrix();
        (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
    }

    fn trace(&self) -> Complex64 {
        self.0.trace()
    }

    fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    /// `‖self − other‖_F`.
    fn distance(&self, other: &PyOperator) -> PyResult<f64> {
        if self.0.dim() != other.0.dim() {
            return Err(err(format!("dimensions {} and {} differ", self.0.dim(), other.0.dim())));
        }
        Ok(self.0.sub(&other.0).frobenius_norm())
    }

    fn __repr__(&self) -> String {
        format!("Operator(dim={})", self.0.dim())
    }
}

#[pyclass(name = "FrameFunction", module = "ugleason", from_py_object)]
#[derive(Clone)]
struct PyFrame(FrameFunction);

#[pymethods]
impl PyFrame {
    /// `ν ↦ Tr((⊗ νₖνₖ†) T)`; `T` must be positive semidefinite.
    #[staticmethod]
    fn operator_induced(dims: Vec<usize>, t: &PyOperator) -> PyResult<Self> {
        FrameFunction::operator_induced(space(dims)?, t.0.clone()).map(Self).map_err(err)
    }

    /// The `ℂ²` frame function `x ↦ q(|x₀|²)`.
    #[staticmethod]
    #[pyo3(signature = (profile = "sine"))]
    fn pathological(profile: &str) -> PyResult<Self> {
        let p = pathological_profile(profile).map_err(err)?;
        FrameFunction::dim2_pathological(p, UnitVector::basis(2, 0)).map(Self).map_err(err)
    }

    #[staticmethod]
    fn product(frames: Vec<PyFrame>) -> PyResult<Self> {
        FrameFunction::product(frames.into_iter().map(|f| f.0).collect()).map(Self).map_err(err)
    }

    /// The product frame used by the counterexample run.
    #[staticmethod]
    #[pyo3(signature = (dims, seed = 0))]
    fn counterexample(dims: Vec<usize>, seed: u64) -> PyResult<Self> {
        counterexample_frame(&space(dims)?, seed).map(Self).map_err(err)
    }

    #[getter]
    fn dims(&self) -> Vec<usize> {
        self.0.space().dims().to_vec()
    }

    #[getter]
    fn declared_weight(&self) -> Option<f64> {
        self.0.declared_weight()
    }

    fn __call__(&self, factors: Vec<Vec<Complex64>>) -> PyResult<f64> {
        let nu = factors.into_iter().map(unit).collect::<PyResult<Vec<_>>>()?;
        self.0.eval(&nu).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("FrameFunction(dims={:?})", self.0.space().dims())
    }
}

#[pyclass(name = "Reconstruction", module = "ugleason", from_py_object)]
#[derive(Clone)]
struct PyReconstruction(ReconstructionResult);

#[pymethods]
impl PyReconstruction {
    #[getter(T)]
    fn t_hat(&self) -> PyOperator {
        PyOperator(self.0.t_hat.clone())
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.0.residual
    }

    #[getter]
    fn condition(&self) -> f64 {
        self.0.condition
    }

    #[getter]
    fn unique(&self) -> bool {
        self.0.unique
    }

    #[getter]
    fn rank(&self) -> usize {
        self.0.rank
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!(
            "Reconstruction(residual={:.3e}, condition={:.3e}, unique={}, rank={})",
            self.0.residual, self.0.condition, self.0.unique, self.0.rank
        )
    }
}

/// Reconstruct `T` from the spanning grid of `f`.
#[pyfunction]
fn reconstruct(f: &PyFrame) -> PyResult<PyReconstruction> {
    core_reconstruct(&f.0).map(PyReconstruction).map_err(err)
}

/// Reconstruct `T` from a frame-samples JSON document.
#[pyfunction]
fn reconstruct_samples(text: &str) -> PyResult<PyReconstruction> {
    let samples: FrameSamples = serde_json::from_str(text).map_err(err)?;
    let ds = DesignSystem::from_samples(&samples).map_err(err)?;
    solve_t(&ds).map(PyReconstruction).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (f, r, trials = 500, seed = 0))]
fn holdout_validate(f: &PyFrame, r: &PyReconstruction, trials: usize, seed: u64) -> PyResult<f64> {
    core_holdout(&f.0, &r.0, trials, seed).map_err(err)
}

/// Weight audit report as JSON.
#[pyfunction]
#[pyo3(signature = (f, families = None, trials = 20, seed = 0, tol = 1e-9))]
fn audit_weight(f: &PyFrame, families: Option<Vec<String>>, trials: usize, seed: u64, tol: f64) -> PyResult<String> {
    let fams = self::families(families)?;
    let report = core_audit_weight(&f.0, f.0.space(), &fams, trials, seed, tol).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

/// Round-trip report as JSON.
#[pyfunction]
#[pyo3(signature = (dims, seed = 0, extra = DEFAULT_EXTRA_SAMPLES))]
fn roundtrip(dims: Vec<usize>, seed: u64, extra: usize) -> PyResult<String> {
    let rt = run_roundtrip(&space(dims)?, seed, extra).map_err(err)?;
    serde_json::to_string(&rt.report).map_err(err)
}

/// Counterexample report as JSON.
#[pyfunction]
#[pyo3(signature = (dims, seed = 0, trials = 20, families = None, tol = 1e-9))]
fn counterexample(dims: Vec<usize>, seed: u64, trials: usize, families: Option<Vec<String>>, tol: f64) -> PyResult<String> {
    let fams = self::families(families)?;
    let report = run_counterexample(&space(dims)?, seed, trials, &fams, tol).map_err(err)?;
    serde_json::to_string(&report).map_err(err)
}

/// `(scale, [p₁, …, p_J])` with `x ≈ scale · Σ 2⁻ʲ pⱼ`.
#[pyfunction]
#[pyo3(signature = (x, depth = 30))]
fn dyadic_decompose(x: &PyOperator, depth: usize) -> PyResult<(f64, Vec<PyOperator>)> {
    let dec = core_dyadic(&x.0, depth).map_err(err)?;
    Ok((dec.scale, dec.projections.iter().map(|p| PyOperator(p.op().clone())).collect()))
}

/// Factors of a simple tensor, or `None` if it is entangled beyond `tol`.
#[pyfunction]
#[pyo3(signature = (v, dims, tol = 1e-10))]
fn simple_tensor_factor(v: Vec<Complex64>, dims: Vec<usize>, tol: f64) -> PyResult<Option<Vec<Vec<Complex64>>>> {
    let factoring = core_factor(&unit(v)?, &space(dims)?, tol).map_err(err)?;
    Ok(factoring.factors().map(|fs| fs.iter().map(components).collect()))
}

fn basis_vectors(b: &OrthonormalBasis) -> Vec<Vec<Complex64>> {
    b.vectors().iter().map(components).collect()
}

/// Vectors of a random branching (non-product) unentangled basis.
#[pyfunction]
#[pyo3(signature = (dims, seed = 0))]
fn branching_basis(dims: Vec<usize>, seed: u64) -> PyResult<Vec<Vec<Complex64>>> {
    core_branching_basis(&space(dims)?, seed).map(|b| basis_vectors(&b)).map_err(err)
}

/// Vectors of a searched unentangled basis, or `None` if the search gave up.
#[pyfunction]
#[pyo3(signature = (dims, seed = 0, attempts = 2000))]
fn search_basis(dims: Vec<usize>, seed: u64, attempts: usize) -> PyResult<Option<Vec<Vec<Complex64>>>> {
    let outcome = search_unentangled_basis(&space(dims)?, seed, attempts).map_err(err)?;
    Ok(outcome.basis().map(|b| basis_vectors(&b)))
}

#[pymodule]
#[pyo3(name = "ugleason")]
fn ugleason_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("UgleasonError", m.py().get_type::<UgleasonError>())?;
    m.add_class::<PyOperator>()?;
    m.add_class::<PyFrame>()?;
    m.add_class::<PyReconstruction>()?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct_samples, m)?)?;
    m.add_function(wrap_pyfunction!(holdout_validate, m)?)?;
    m.add_function(wrap_pyfunction!(audit_weight, m)?)?;
    m.add_function(wrap_pyfunction!(roundtrip, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample, m)?)?;
    m.add_function(wrap_pyfunction!(dyadic_decompose, m)?)?;
    m.add_function(wrap_pyfunction!(simple_tensor_factor, m)?)?;
    m.add_function(wrap_pyfunction!(branching_basis, m)?)?;
    m.add_function(wrap_pyfunction!(search_basis, m)?)?;
    Ok(())
}
