//! Python module `cfdim`: alphabets, words, dimension bounds, sweeps,
//! verification suites and rendering.

use std::time::Duration;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use cfdim_core::alphabet::{parse_alphabet, parse_ceiling, AlphabetSpec, CeilingMode};
use cfdim_core::distortion::{derivative_modulus, distortion_bounds, DiskPoint};
use cfdim_core::enumeration::EnumOptions;
use cfdim_core::render::svg_string;
use cfdim_core::report::{run_table, run_verify, table_csv, RunRecord, Suite, VerifyOptions};
use cfdim_core::{check_duality, dimension_bounds, sweep, GaussianInt, SolverOptions};

fn err(e: cfdim_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn spec_from(alphabet: &str, ceiling: Option<&str>, ceiling_mode: &str) -> PyResult<AlphabetSpec> {
    let mode: CeilingMode = ceiling_mode.parse().map_err(err)?;
    let mut spec = parse_alphabet(alphabet)
        .map_err(err)?
        .with_ceiling_mode(mode);
    if let Some(c) = ceiling {
        spec = spec.with_ceiling(parse_ceiling(c).map_err(err)?);
    }
    Ok(spec)
}

/// A digit alphabet, finite after applying the ceiling.
#[pyclass(name = "Alphabet", module = "cfdim", frozen)]
struct PyAlphabet {
    spec: AlphabetSpec,
    inner: cfdim_core::Alphabet,
}

#[pymethods]
impl PyAlphabet {
    #[new]
    #[pyo3(signature = (spec, ceiling=None, ceiling_mode="value"))]
    fn new(spec: &str, ceiling: Option<&str>, ceiling_mode: &str) -> PyResult<Self> {
        let spec = spec_from(spec, ceiling, ceiling_mode)?;
        let inner = spec.materialize().map_err(err)?;
        Ok(PyAlphabet { spec, inner })
    }

    #[getter]
    fn digits(&self) -> Vec<String> {
        self.inner.digits().iter().map(|d| d.to_string()).collect()
    }

    #[getter]
    fn is_real(&self) -> bool {
        self.inner.is_real()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Alphabet({:?}, {} digits)",
            self.spec.to_string(),
            self.inner.len()
        )
    }

    /// SVG picture of the disk images at depth 1 or 2.
    #[pyo3(signature = (depth=2))]
    fn render_svg(&self, depth: usize) -> PyResult<String> {
        svg_string(&self.inner, depth).map_err(err)
    }

    /// `T_k^-` and `T_k^+` with their run metadata.
    #[pyo3(signature = (k, tol=None, threads=1, clamp_one=false))]
    fn bounds(
        &self,
        py: Python<'_>,
        k: u32,
        tol: Option<f64>,
        threads: usize,
        clamp_one: bool,
    ) -> PyResult<Bounds> {
        let opts = solver_options(tol, threads, clamp_one);
        let b = py
            .detach(|| dimension_bounds(&self.inner, k, &opts))
            .map_err(err)?;
        Ok(Bounds {
            record: RunRecord::new(&self.spec, &self.inner, &b, threads, true),
        })
    }

    /// Bounds for every `k` in `1..=k_max`.
    #[pyo3(signature = (k_max, tol=None, threads=1))]
    fn sweep(
        &self,
        py: Python<'_>,
        k_max: u32,
        tol: Option<f64>,
        threads: usize,
    ) -> PyResult<Vec<Bounds>> {
        let opts = solver_options(tol, threads, false);
        let s = py
            .detach(|| sweep(&self.inner, k_max, &opts))
            .map_err(err)?;
        Ok(s.bounds
            .iter()
            .map(|b| Bounds {
                record: RunRecord::new(&self.spec, &self.inner, b, threads, true),
            })
            .collect())
    }
}

fn solver_options(tol: Option<f64>, threads: usize, clamp_one: bool) -> SolverOptions {
    let mut opts = SolverOptions {
        tol,
        clamp_one,
        enumeration: EnumOptions::from_env(),
        ..Default::default()
    };
    opts.enumeration.threads = threads.max(1);
    opts
}

#[pyclass(module = "cfdim", frozen)]
struct Bounds {
    record: RunRecord,
}

#[pymethods]
impl Bounds {
    #[getter]
    fn k(&self) -> u32 {
        self.record.k
    }

    /// `None` when the lower curve has no root.
    #[getter]
    fn t_minus(&self) -> Option<f64> {
        self.record.t_minus.value()
    }

    #[getter]
    fn t_plus(&self) -> Option<f64> {
        self.record.t_plus.value()
    }

    #[getter]
    fn term_count(&self) -> u64 {
        self.record.term_count
    }

    #[getter]
    fn tolerance(&self) -> f64 {
        self.record.tolerance
    }

    fn to_json(&self) -> String {
        self.record.to_json()
    }

    fn __repr__(&self) -> String {
        let f = |x: Option<f64>| x.map_or("None".to_string(), |v| format!("{v:.9}"));
        format!(
            "Bounds(k={}, t_minus={}, t_plus={})",
            self.record.k,
            f(self.t_minus()),
            f(self.t_plus())
        )
    }
}

fn parse_digit(obj: &Bound<'_, PyAny>) -> PyResult<GaussianInt> {
    if let Ok(n) = obj.extract::<i64>() {
        return Ok(GaussianInt::real(n));
    }
    let s: String = obj.extract()?;
    s.parse().map_err(err)
}

/// A finite word of continued-fraction digits.
#[pyclass(name = "Word", module = "cfdim", frozen)]
struct PyWord {
    inner: cfdim_core::Word,
}

#[pymethods]
impl PyWord {
    /// Digits are ints or strings such as `"2-3i"`.
    #[new]
    fn new(digits: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let digits = digits
            .iter()
            .map(parse_digit)
            .collect::<PyResult<Vec<_>>>()?;
        Ok(PyWord {
            inner: cfdim_core::Word::new(digits).map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!("Word{}", self.inner)
    }

    /// Denominator `q(z)` at a complex point.
    fn q_at(&self, z: num_complex_py::C) -> num_complex_py::C {
        let q = self.inner.state().q_at(z.into());
        q.into()
    }

    /// The convergent `p/q` as exact strings.
    fn value(&self) -> (String, String) {
        let v = cfdim_core::convergent_value(&self.inner);
        (v.num.to_string(), v.den.to_string())
    }

    fn check_duality<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let r = check_duality(&self.inner);
        let d = PyDict::new(py);
        d.set_item("shift_identity", r.shift_identity)?;
        d.set_item("reversal_symmetry", r.reversal_symmetry)?;
        d.set_item("unit_shift_identity", r.unit_shift_identity)?;
        Ok(d)
    }

    /// `(|1+a|^-2, |1+a|^2)` for the dual word, as floats.
    fn distortion_bounds(&self) -> (f64, f64) {
        let b = distortion_bounds(&self.inner);
        (b.lower_f64(), b.upper_f64())
    }

    fn derivative_modulus(&self, z: num_complex_py::C) -> PyResult<f64> {
        let p = DiskPoint::new(z.into()).map_err(err)?;
        Ok(derivative_modulus(&self.inner, p))
    }
}

mod num_complex_py {
    use num_complex::Complex64;
    use pyo3::prelude::*;
    use pyo3::types::PyComplex;

    /// Python `complex` <-> `Complex64`.
    pub struct C(pub Complex64);

    impl<'a, 'py> FromPyObject<'a, 'py> for C {
        type Error = PyErr;
        fn extract(obj: Borrowed<'a, 'py, PyAny>) -> PyResult<Self> {
            if let Ok(c) = obj.cast::<PyComplex>() {
                return Ok(C(Complex64::new(c.real(), c.imag())));
            }
            Ok(C(Complex64::new(obj.extract::<f64>()?, 0.0)))
        }
    }

    impl<'py> IntoPyObject<'py> for C {
        type Target = PyComplex;
        type Output = Bound<'py, PyComplex>;
        type Error = std::convert::Infallible;
        fn into_pyobject(self, py: Python<'py>) -> Result<Self::Output, Self::Error> {
            Ok(PyComplex::from_doubles(py, self.0.re, self.0.im))
        }
    }

    impl From<C> for Complex64 {
        fn from(c: C) -> Self {
            c.0
        }
    }

    impl From<Complex64> for C {
        fn from(c: Complex64) -> Self {
            C(c)
        }
    }
}

/// Runs a property suite; returns `(passed, report_text)`.
#[pyfunction]
#[pyo3(signature = (suite="all", seed=0))]
fn verify(py: Python<'_>, suite: &str, seed: u64) -> PyResult<(bool, String)> {
    let suite: Suite = suite.parse().map_err(err)?;
    let opts = VerifyOptions {
        seed,
        ..Default::default()
    };
    let r = py.detach(|| run_verify(suite, &opts)).map_err(err)?;
    Ok((r.passed(), r.to_text()))
}

/// Recomputes a published table as CSV.
#[pyfunction]
#[pyo3(signature = (table_id, budget_secs=None, threads=1, clamp_one=false))]
fn table(
    py: Python<'_>,
    table_id: u8,
    budget_secs: Option<f64>,
    threads: usize,
    clamp_one: bool,
) -> PyResult<String> {
    let opts = solver_options(None, threads, clamp_one);
    let budget = budget_secs.map(Duration::from_secs_f64);
    let rows = py
        .detach(|| run_table(table_id, budget, &opts))
        .map_err(err)?;
    Ok(table_csv(&rows))
}

/// Shorthand for `Alphabet(spec, ...).bounds(k)`.
#[pyfunction]
#[pyo3(signature = (alphabet, k, ceiling=None, ceiling_mode="value", tol=None, threads=1, clamp_one=false))]
#[allow(clippy::too_many_arguments)]
fn bounds(
    py: Python<'_>,
    alphabet: &str,
    k: u32,
    ceiling: Option<&str>,
    ceiling_mode: &str,
    tol: Option<f64>,
    threads: usize,
    clamp_one: bool,
) -> PyResult<Bounds> {
    PyAlphabet::new(alphabet, ceiling, ceiling_mode)?.bounds(py, k, tol, threads, clamp_one)
}

#[pymodule]
fn cfdim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyAlphabet>()?;
    m.add_class::<PyWord>()?;
    m.add_class::<Bounds>()?;
    m.add_function(wrap_pyfunction!(bounds, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(table, m)?)?;
    m.add("CONVENTION", cfdim_core::report::CONVENTION)?;
    m.add("__version__", cfdim_core::report::VERSION)?;
    Ok(())
}
