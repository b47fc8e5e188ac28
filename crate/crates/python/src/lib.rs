//! Python bindings: images, per-patch codes, code maps, descriptors and the
//! sign test. The module is importable as `looptex`.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict};

use looptex::kernels::{DescriptorKind, Encoder, KirschResponses, Patch3, RankKey};
use looptex::{AccuracyRecord, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn parse<T: std::str::FromStr>(s: &str) -> PyResult<T>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| PyValueError::new_err(e.to_string()))
}

fn encoder(kind: &str, k: u8, rank_key: &str) -> PyResult<Encoder> {
    Encoder::new(parse::<DescriptorKind>(kind)?, k, parse::<RankKey>(rank_key)?).map_err(to_py)
}

/// 8-bit grayscale image, row-major.
#[pyclass(name = "GrayImage", module = "looptex", frozen)]
struct PyGrayImage(looptex::GrayImage);

#[pymethods]
impl PyGrayImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<u8>) -> PyResult<Self> {
        looptex::GrayImage::new(width, height, data).map(Self).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    /// Raw pixels as `bytes`.
    fn data<'py>(&self, py: Python<'py>) -> Bound<'py, PyBytes> {
        PyBytes::new(py, self.0.data())
    }

    fn get(&self, x: usize, y: usize) -> PyResult<u8> {
        if x >= self.0.width() || y >= self.0.height() {
            return Err(PyValueError::new_err(format!("({x}, {y}) outside {}x{}", self.0.width(), self.0.height())));
        }
        Ok(self.0.get(x, y))
    }

    /// Clockwise rotation by `quarter_turns` x 90 degrees.
    #[pyo3(signature = (quarter_turns=1))]
    fn rotate(&self, quarter_turns: usize) -> Self {
        Self(self.0.rotate_quarter_turns(quarter_turns))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("GrayImage({}x{})", self.0.width(), self.0.height())
    }
}

#[pyfunction]
fn load_pgm(path: PathBuf) -> PyResult<PyGrayImage> {
    looptex::load_pgm(path).map(PyGrayImage).map_err(to_py)
}

#[pyfunction]
fn save_pgm(img: &PyGrayImage, path: PathBuf) -> PyResult<()> {
    looptex::save_pgm(&img.0, path).map_err(to_py)
}

/// Kirsch responses of a patch given as center plus the clockwise ring
/// starting at the top-left neighbor.
#[pyfunction]
fn kirsch_responses(center: u8, neighbors: [u8; 8]) -> [i32; 8] {
    looptex::kernels::kirsch_responses(&Patch3::new(center, neighbors)).0
}

/// Rank exponents (0 = weakest) of eight responses.
#[pyfunction]
#[pyo3(signature = (responses, rank_key="signed"))]
fn rank_exponents(responses: [i32; 8], rank_key: &str) -> PyResult<[u32; 8]> {
    let w = looptex::kernels::rank_exponents(&KirschResponses(responses), parse(rank_key)?).exponents;
    // u8 arrays would surface as `bytes`
    Ok(w.map(u32::from))
}

/// Code of one patch for the given descriptor kind.
#[pyfunction]
#[pyo3(signature = (kind, center, neighbors, k=3, rank_key="signed"))]
fn patch_code(kind: &str, center: u8, neighbors: [u8; 8], k: u8, rank_key: &str) -> PyResult<u16> {
    Ok(encoder(kind, k, rank_key)?.encode(&Patch3::new(center, neighbors)).value())
}

/// `(width, height, codes)` for every interior pixel.
#[pyfunction]
#[pyo3(signature = (img, kind="loop", k=3, rank_key="signed"))]
fn code_map(py: Python<'_>, img: &PyGrayImage, kind: &str, k: u8, rank_key: &str) -> PyResult<(usize, usize, Vec<u16>)> {
    let enc = encoder(kind, k, rank_key)?;
    let map = py.detach(|| looptex::code_map(&img.0, &enc)).map_err(to_py)?;
    Ok((map.width, map.height, map.data))
}

/// Concatenated per-level histograms, level 0 first.
#[pyfunction]
#[pyo3(signature = (img, kind="loop", levels=3, k=3, rank_key="signed"))]
fn describe(py: Python<'_>, img: &PyGrayImage, kind: &str, levels: usize, k: u8, rank_key: &str) -> PyResult<Vec<f64>> {
    let enc = encoder(kind, k, rank_key)?;
    let d = py.detach(|| looptex::describe(&img.0, &enc, levels)).map_err(to_py)?;
    Ok(d.vector)
}

#[pyfunction]
fn chi2_distance(h: Vec<f64>, g: Vec<f64>) -> PyResult<f64> {
    looptex::chi2_distance(&h, &g).map_err(to_py)
}

#[pyfunction]
fn binom_one_tail(n: u64, wins: u64) -> PyResult<f64> {
    looptex::binom_one_tail(n, wins).map_err(to_py)
}

#[pyfunction]
fn bonferroni(alpha: f64, comparisons: u32) -> PyResult<f64> {
    looptex::bonferroni(alpha, comparisons).map_err(to_py)
}

fn records(accuracies: &[f64]) -> Vec<AccuracyRecord> {
    accuracies
        .iter()
        .enumerate()
        .map(|(fold, &accuracy)| AccuracyRecord {
            descriptor: String::new(),
            classifier: String::new(),
            dataset: String::new(),
            fold,
            accuracy,
            n_test: 0,
            seed: 0,
        })
        .collect()
}

/// One-tailed sign test on paired accuracies (`a[i]` against `b[i]`).
#[pyfunction]
#[pyo3(signature = (a, b, alpha=0.05, comparisons=1))]
fn sign_test<'py>(py: Python<'py>, a: Vec<f64>, b: Vec<f64>, alpha: f64, comparisons: u32) -> PyResult<Bound<'py, PyDict>> {
    if a.len() != b.len() {
        return Err(PyValueError::new_err(format!("paired lists differ in length: {} vs {}", a.len(), b.len())));
    }
    let t = looptex::sign_test(&records(&a), &records(&b), alpha, comparisons).map_err(to_py)?;
    let out = PyDict::new(py);
    out.set_item("n", t.n)?;
    out.set_item("wins", t.wins)?;
    out.set_item("losses", t.losses())?;
    out.set_item("ties", t.ties)?;
    out.set_item("p_one_tail", t.p_one_tail)?;
    out.set_item("alpha_corrected", t.alpha_corrected)?;
    out.set_item("significant", t.significant)?;
    out.set_item("verdict", t.verdict())?;
    Ok(out)
}

#[pymodule]
#[pyo3(name = "looptex")]
fn looptex_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyGrayImage>()?;
    m.add("KINDS", DescriptorKind::ALL.map(|k| k.name()).to_vec())?;
    m.add_function(wrap_pyfunction!(load_pgm, m)?)?;
    m.add_function(wrap_pyfunction!(save_pgm, m)?)?;
    m.add_function(wrap_pyfunction!(kirsch_responses, m)?)?;
    m.add_function(wrap_pyfunction!(rank_exponents, m)?)?;
    m.add_function(wrap_pyfunction!(patch_code, m)?)?;
    m.add_function(wrap_pyfunction!(code_map, m)?)?;
    m.add_function(wrap_pyfunction!(describe, m)?)?;
    m.add_function(wrap_pyfunction!(chi2_distance, m)?)?;
    m.add_function(wrap_pyfunction!(binom_one_tail, m)?)?;
    m.add_function(wrap_pyfunction!(bonferroni, m)?)?;
    m.add_function(wrap_pyfunction!(sign_test, m)?)?;
    Ok(())
}
