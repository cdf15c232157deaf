//! Python bindings: cones, number theory helpers, triangulation and audits.

use num_bigint::BigInt;
use num_rational::BigRational;
use pyo3::exceptions::{PyOverflowError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use conetri::error::Error;
use conetri::format::{BoundRecord, TriangulationFile};
use conetri::linalg::{self, IntMatrix};
use conetri::unimodular::{pipeline_finres, Strategy};
use conetri::verify::{self, BoundReport};
use conetri::{bpft, generators, numtheory, SimplicialCone};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvariantViolation(_) => PyRuntimeError::new_err(e.to_string()),
        Error::CapExceeded { .. } | Error::RejectionBudget(_) => PyOverflowError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn matrix(rows: Vec<Vec<BigInt>>) -> PyResult<IntMatrix> {
    IntMatrix::from_rows(rows).map_err(py_err)
}

fn fraction<'py>(py: Python<'py>, q: &BigRational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((q.numer().clone(), q.denom().clone()))
}

/// A full-dimensional simplicial cone given by integer generators (rows).
#[pyclass(name = "Cone", module = "conetri_py", frozen, from_py_object)]
#[derive(Clone)]
struct PyCone {
    inner: SimplicialCone,
}

#[pymethods]
impl PyCone {
    /// Rows are primitivized; a singular matrix raises `ValueError`.
    #[new]
    fn new(generators: Vec<Vec<BigInt>>) -> PyResult<Self> {
        let inner = SimplicialCone::new(&matrix(generators)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.dimension()
    }

    #[getter]
    fn generators(&self) -> Vec<Vec<BigInt>> {
        self.inner.generators().to_rows()
    }

    #[getter]
    fn multiplicity(&self) -> BigInt {
        self.inner.multiplicity().clone()
    }

    fn is_unimodular(&self) -> bool {
        self.inner.is_unimodular()
    }

    /// Smallest `t` with `x ∈ t·Π(C)` as a `Fraction`.
    fn dilation<'py>(&self, py: Python<'py>, x: Vec<BigInt>) -> PyResult<Bound<'py, PyAny>> {
        let dil = self.inner.dilation(&x).map_err(py_err)?;
        fraction(py, dil.value())
    }

    fn contains(&self, x: Vec<BigInt>) -> bool {
        self.inner.contains_point(&x, conetri::cone::Containment::Closed)
    }

    fn stellar_subdivide(&self, x: Vec<BigInt>) -> PyResult<Vec<PyCone>> {
        let pieces = self.inner.stellar_subdivide(&x).map_err(py_err)?;
        Ok(pieces.into_iter().map(|inner| PyCone { inner }).collect())
    }

    #[pyo3(signature = (cap = conetri::cone::DEFAULT_HILBERT_CAP))]
    fn hilbert_basis(&self, cap: u64) -> PyResult<Vec<Vec<BigInt>>> {
        Ok(self.inner.hilbert_basis(cap).map_err(py_err)?.elements)
    }

    fn to_json(&self) -> String {
        conetri::format::cone_to_json(&self.inner)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = conetri::format::parse_cone(text).map_err(py_err)?;
        Ok(Self { inner })
    }

    fn __eq__(&self, other: &PyCone) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!("Cone({:?}, multiplicity={})", self.generators(), self.inner.multiplicity())
    }
}

fn cones(pieces: &[SimplicialCone]) -> Vec<PyCone> {
    pieces.iter().cloned().map(|inner| PyCone { inner }).collect()
}

fn report_dict<'py>(py: Python<'py>, r: &BoundReport) -> PyResult<Bound<'py, PyDict>> {
    let rec = BoundRecord::from(r);
    let d = PyDict::new(py);
    d.set_item("bound_name", rec.bound_name)?;
    d.set_item("bound_value", rec.bound_value)?;
    d.set_item("measured", rec.measured)?;
    d.set_item("satisfied", rec.satisfied)?;
    d.set_item("outcome", rec.outcome)?;
    d.set_item("checked", rec.checked)?;
    d.set_item("violations", rec.violations)?;
    d.set_item("skipped", rec.skipped)?;
    d.set_item("witness", r.witnesses.clone())?;
    d.set_item("informational", rec.informational)?;
    d.set_item("note", rec.note)?;
    Ok(d)
}

fn report_list<'py>(py: Python<'py>, reports: &[BoundReport]) -> PyResult<Vec<Bound<'py, PyDict>>> {
    reports.iter().map(|r| report_dict(py, r)).collect()
}

/// Outcome of the bounded-prime-factor triangulation.
#[pyclass(name = "BpftResult", module = "conetri_py", frozen)]
struct PyBpft {
    state: bpft::TriangulationState,
}

#[pymethods]
impl PyBpft {
    #[getter]
    fn root(&self) -> PyCone {
        PyCone {
            inner: self.state.root().clone(),
        }
    }

    #[getter]
    fn pieces(&self) -> Vec<PyCone> {
        cones(&self.state.current_cones())
    }

    #[getter]
    fn chi(&self) -> Vec<i64> {
        self.state.current().map(bpft::LabeledCone::chi).collect()
    }

    #[getter]
    fn subdivision_vectors(&self) -> Vec<Vec<BigInt>> {
        self.state.subdivision_vectors().map(<[BigInt]>::to_vec).collect()
    }

    /// `(p, vector)` for every step of the main loop.
    #[getter]
    fn steps(&self) -> Vec<(BigInt, Vec<BigInt>)> {
        self.state.steps().iter().map(|s| (s.p.clone(), s.vector.clone())).collect()
    }

    fn audit<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let reports = py.detach(|| verify::audit_bpft_bounds(&self.state));
        report_list(py, &reports)
    }

    fn to_json(&self) -> PyResult<String> {
        let file = TriangulationFile::from_bpft(&self.state, &verify::audit_bpft_bounds(&self.state)).map_err(py_err)?;
        Ok(file.to_json())
    }

    fn __len__(&self) -> usize {
        self.state.current_ids().len()
    }
}

/// A unimodular triangulation produced by one of the pipelines.
#[pyclass(name = "Triangulation", module = "conetri_py", frozen)]
struct PyTriangulation {
    inner: conetri::UnimodularTriangulation,
}

#[pymethods]
impl PyTriangulation {
    #[getter]
    fn method(&self) -> &'static str {
        self.inner.strategy.name()
    }

    #[getter]
    fn pieces(&self) -> Vec<PyCone> {
        cones(&self.inner.pieces)
    }

    #[getter]
    fn subdivision_vectors(&self) -> Vec<Vec<BigInt>> {
        self.inner.subdivision_vectors.clone()
    }

    #[getter]
    fn max_dilation<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, self.inner.max_dilation.value())
    }

    fn audit<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let reports = py.detach(|| verify::audit_unimodular_all(&self.inner));
        report_list(py, &reports)
    }

    fn to_json(&self) -> PyResult<String> {
        let reports = verify::audit_unimodular_all(&self.inner);
        Ok(TriangulationFile::from_unimodular(&self.inner, &reports).map_err(py_err)?.to_json())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
fn determinant(rows: Vec<Vec<BigInt>>) -> PyResult<BigInt> {
    linalg::determinant(&matrix(rows)?).map_err(py_err)
}

/// `(diagonal, left, right)` with `left · m · right = diag(diagonal)`.
#[pyfunction]
#[allow(clippy::type_complexity)]
fn snf(rows: Vec<Vec<BigInt>>) -> PyResult<(Vec<BigInt>, Vec<Vec<BigInt>>, Vec<Vec<BigInt>>)> {
    let s = linalg::smith_normal_form(&matrix(rows)?).map_err(py_err)?;
    Ok((s.diag, s.left.to_rows(), s.right.to_rows()))
}

#[pyfunction]
fn factorize(n: BigInt) -> PyResult<Vec<(BigInt, u32)>> {
    Ok(numtheory::factorize(&n).map_err(py_err)?.pairs().to_vec())
}

#[pyfunction]
fn p_max(n: BigInt) -> PyResult<BigInt> {
    numtheory::p_max(&n).map_err(py_err)
}

#[pyfunction]
fn is_prime(n: BigInt) -> bool {
    numtheory::is_prime(&n)
}

#[pyfunction]
fn threshold_exceeded(p: BigInt, d: usize) -> bool {
    numtheory::threshold_exceeded(&p, d)
}

#[pyfunction]
fn h_sequence(d: usize, k: i64) -> BigInt {
    numtheory::h_sequence(d, k)
}

#[pyfunction]
fn prime_example(d: usize) -> PyResult<PyCone> {
    Ok(PyCone {
        inner: generators::prime_example(d).map_err(py_err)?,
    })
}

#[pyfunction]
fn two_dim_prime(n: BigInt) -> PyResult<PyCone> {
    Ok(PyCone {
        inner: generators::two_dim_prime(&n).map_err(py_err)?,
    })
}

#[pyfunction]
#[pyo3(signature = (d, seed, max_entry = 10))]
fn random_cone(d: usize, seed: u64, max_entry: u64) -> PyResult<PyCone> {
    let spec = generators::ConeSpec::random(d, seed, max_entry);
    Ok(PyCone {
        inner: generators::random_cone(&spec).map_err(py_err)?,
    })
}

#[pyfunction]
fn run_bpft(py: Python<'_>, cone: &PyCone) -> PyResult<PyBpft> {
    let state = py.detach(|| bpft::run_bpft(&cone.inner)).map_err(py_err)?;
    Ok(PyBpft { state })
}

/// Unimodular triangulation by `"naive"`, `"bpft-naive"` or `"bpft-transfer"`.
#[pyfunction]
#[pyo3(signature = (cone, method = "bpft-transfer"))]
fn triangulate(py: Python<'_>, cone: &PyCone, method: &str) -> PyResult<PyTriangulation> {
    let strategy: Strategy = method.parse().map_err(PyValueError::new_err)?;
    let inner = py.detach(|| pipeline_finres(&cone.inner, strategy)).map_err(py_err)?;
    Ok(PyTriangulation { inner })
}

/// Monte Carlo partition check of `pieces` against `root`.
#[pyfunction]
#[pyo3(signature = (root, pieces, samples = 2_000, seed = 0))]
fn check_partition<'py>(
    py: Python<'py>,
    root: &PyCone,
    pieces: Vec<PyCone>,
    samples: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let pieces: Vec<SimplicialCone> = pieces.into_iter().map(|c| c.inner).collect();
    let v = py.detach(|| verify::check_partition(&root.inner, &pieces, samples, seed));
    let d = PyDict::new(py);
    d.set_item("valid", v.is_valid())?;
    d.set_item("samples", v.samples)?;
    d.set_item("covered_once", v.covered_once)?;
    d.set_item("uncovered", v.uncovered)?;
    d.set_item("multiply_covered", v.multiply_covered)?;
    d.set_item("containment_failures", v.containment_failures)?;
    d.set_item("boundary_redraws", v.boundary_redraws)?;
    Ok(d)
}

/// Dilation audit of arbitrary unimodular pieces against the root.
#[pyfunction]
fn audit_unimodular<'py>(py: Python<'py>, root: &PyCone, pieces: Vec<PyCone>) -> PyResult<Bound<'py, PyDict>> {
    let pieces: Vec<SimplicialCone> = pieces.into_iter().map(|c| c.inner).collect();
    report_dict(py, &verify::audit_unimodular_pieces(&root.inner, &pieces))
}

#[pymodule]
fn conetri_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCone>()?;
    m.add_class::<PyBpft>()?;
    m.add_class::<PyTriangulation>()?;
    m.add_function(wrap_pyfunction!(determinant, m)?)?;
    m.add_function(wrap_pyfunction!(snf, m)?)?;
    m.add_function(wrap_pyfunction!(factorize, m)?)?;
    m.add_function(wrap_pyfunction!(p_max, m)?)?;
    m.add_function(wrap_pyfunction!(is_prime, m)?)?;
    m.add_function(wrap_pyfunction!(threshold_exceeded, m)?)?;
    m.add_function(wrap_pyfunction!(h_sequence, m)?)?;
    m.add_function(wrap_pyfunction!(prime_example, m)?)?;
    m.add_function(wrap_pyfunction!(two_dim_prime, m)?)?;
    m.add_function(wrap_pyfunction!(random_cone, m)?)?;
    m.add_function(wrap_pyfunction!(run_bpft, m)?)?;
    m.add_function(wrap_pyfunction!(triangulate, m)?)?;
    m.add_function(wrap_pyfunction!(check_partition, m)?)?;
    m.add_function(wrap_pyfunction!(audit_unimodular, m)?)?;
    m.add("TAU", numtheory::constants().tau.to_f64())?;
    Ok(())
}
