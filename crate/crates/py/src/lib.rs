//! Python bindings. Rasters cross the boundary as 2-D float64 arrays and
//! masks as 2-D uint8 arrays; library errors surface as `ValueError`.

use numpy::ndarray::Array2;
use numpy::{IntoPyArray, PyArray1, PyArray2, PyReadonlyArray2};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use smdenoise::baselines;
use smdenoise::diagnostics::{self, TraceSet};
use smdenoise::metrics;
use smdenoise::synth::{self, SynthConfig};
use smdenoise::{LatticeWeights, PriorVariant, Raster, SpotMask};

fn err(e: smdenoise::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_raster(a: &PyReadonlyArray2<'_, f64>) -> PyResult<Raster> {
    let view = a.as_array();
    let (rows, cols) = view.dim();
    Raster::new(rows, cols, view.iter().copied().collect()).map_err(err)
}

fn to_mask(a: &PyReadonlyArray2<'_, u8>) -> PyResult<SpotMask> {
    let view = a.as_array();
    let (rows, cols) = view.dim();
    SpotMask::new(rows, cols, view.iter().copied().collect()).map_err(err)
}

fn raster_out<'py>(py: Python<'py>, r: &Raster) -> Bound<'py, PyArray2<f64>> {
    Array2::from_shape_vec(r.shape(), r.data().to_vec()).expect("raster shape").into_pyarray(py)
}

fn mask_out<'py>(py: Python<'py>, m: &SpotMask) -> Bound<'py, PyArray2<u8>> {
    Array2::from_shape_vec(m.shape(), m.data().to_vec()).expect("mask shape").into_pyarray(py)
}

fn parse_variant(name: &str) -> PyResult<PriorVariant> {
    name.parse().map_err(err)
}

/// Sampler hyper-parameters; defaults match the synthetic-image configuration.
#[pyclass(name = "HyperParams", module = "smdenoise", skip_from_py_object)]
#[derive(Clone)]
struct PyHyperParams {
    inner: smdenoise::HyperParams,
}

#[pymethods]
impl PyHyperParams {
    /// `burn_in` defaults to `iterations // 2`.
    #[new]
    #[pyo3(signature = (
        *, alpha_l=1.0, beta_l=10.0, alpha_f=10.0, beta_f=0.01, gamma_precision=1e-3,
        lam=LatticeWeights::DEFAULT_LAMBDA, h=0.1, iterations=100, window=7, burn_in=None, seed=0
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        alpha_l: f64,
        beta_l: f64,
        alpha_f: f64,
        beta_f: f64,
        gamma_precision: f64,
        lam: f64,
        h: f64,
        iterations: usize,
        window: usize,
        burn_in: Option<usize>,
        seed: u64,
    ) -> PyResult<Self> {
        let inner = smdenoise::HyperParams {
            alpha_l,
            beta_l,
            alpha_f,
            beta_f,
            gamma_precision,
            lambda: lam,
            h,
            iterations,
            window,
            burn_in: burn_in.unwrap_or(iterations / 2),
            seed,
        };
        inner.validate().map_err(err)?;
        Ok(PyHyperParams { inner })
    }

    #[getter]
    fn alpha_l(&self) -> f64 {
        self.inner.alpha_l
    }

    #[getter]
    fn beta_l(&self) -> f64 {
        self.inner.beta_l
    }

    #[getter]
    fn alpha_f(&self) -> f64 {
        self.inner.alpha_f
    }

    #[getter]
    fn beta_f(&self) -> f64 {
        self.inner.beta_f
    }

    #[getter]
    fn gamma_precision(&self) -> f64 {
        self.inner.gamma_precision
    }

    #[getter]
    fn h(&self) -> f64 {
        self.inner.h
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn window(&self) -> usize {
        self.inner.window
    }

    #[getter]
    fn burn_in(&self) -> usize {
        self.inner.burn_in
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    /// Background–background weight; `lambda` is a Python keyword.
    #[getter]
    fn lam(&self) -> f64 {
        self.inner.lambda
    }

    fn __repr__(&self) -> String {
        let hp = &self.inner;
        format!(
            "HyperParams(alpha_l={}, beta_l={}, alpha_f={}, beta_f={}, gamma_precision={}, lam={}, h={}, \
             iterations={}, window={}, burn_in={}, seed={})",
            hp.alpha_l, hp.beta_l, hp.alpha_f, hp.beta_f, hp.gamma_precision, hp.lambda, hp.h,
            hp.iterations, hp.window, hp.burn_in, hp.seed
        )
    }
}

/// Sparse symmetric lattice precision `Q = DᵀD`.
#[pyclass(name = "PrecisionMatrix", module = "smdenoise", frozen)]
struct PyPrecision {
    inner: smdenoise::PrecisionMatrix,
}

#[pymethods]
impl PyPrecision {
    /// `(n1, n2)` lattice the matrix is defined on.
    #[getter]
    fn lattice(&self) -> (usize, usize) {
        self.inner.lattice()
    }

    #[getter]
    fn order(&self) -> usize {
        self.inner.order()
    }

    #[getter]
    fn nnz(&self) -> usize {
        self.inner.nnz()
    }

    fn get(&self, r: usize, c: usize) -> PyResult<f64> {
        let n = self.inner.order();
        if r >= n || c >= n {
            return Err(PyValueError::new_err(format!("index ({r}, {c}) outside order {n}")));
        }
        Ok(self.inner.get(r, c))
    }

    fn to_dense<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyArray2<f64>>> {
        let rows = self.inner.to_dense().map_err(err)?;
        let n = rows.len();
        Ok(Array2::from_shape_vec((n, n), rows.concat()).expect("square").into_pyarray(py))
    }

    /// `Qx` for a raster-shaped `x`.
    fn matvec<'py>(&self, py: Python<'py>, x: PyReadonlyArray2<'py, f64>) -> PyResult<Bound<'py, PyArray2<f64>>> {
        let x = self.lattice_vector(&x)?;
        let y = Raster::new(x.rows(), x.cols(), self.inner.mul_vec(x.data())).map_err(err)?;
        Ok(raster_out(py, &y))
    }

    /// `xᵀQx` for a raster-shaped `x`.
    fn quad_form(&self, x: PyReadonlyArray2<'_, f64>) -> PyResult<f64> {
        Ok(self.inner.quad_form(self.lattice_vector(&x)?.data()))
    }

    fn __repr__(&self) -> String {
        let (n1, n2) = self.inner.lattice();
        format!("PrecisionMatrix(lattice={n1}x{n2}, nnz={})", self.inner.nnz())
    }
}

impl PyPrecision {
    fn lattice_vector(&self, x: &PyReadonlyArray2<'_, f64>) -> PyResult<Raster> {
        let x = to_raster(x)?;
        if x.shape() != self.inner.lattice() {
            return Err(PyValueError::new_err(format!(
                "array shape {:?} does not match lattice {:?}",
                x.shape(),
                self.inner.lattice()
            )));
        }
        Ok(x)
    }
}

/// Output of one sampler run; images are in the input's units.
#[pyclass(name = "DenoiseResult", module = "smdenoise", frozen)]
struct PyDenoiseResult {
    inner: smdenoise::DenoiseResult,
}

#[pymethods]
impl PyDenoiseResult {
    /// Post-burn-in average of the noise-free image `f + Zγ`.
    #[getter]
    fn posterior_mean<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        raster_out(py, &self.inner.posterior_mean)
    }

    /// Post-burn-in average of the latent field `f` alone.
    #[getter]
    fn field_mean<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        raster_out(py, &self.inner.field_mean)
    }

    #[getter]
    fn final_mask<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<u8>> {
        mask_out(py, &self.inner.final_mask)
    }

    /// `(T, 2)` array of `(κ_l, κ_f)` per iteration, normalized units.
    #[getter]
    fn theta_trace<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        let flat: Vec<f64> = self.inner.theta_trace.iter().flat_map(|&(l, f)| [l, f]).collect();
        Array2::from_shape_vec((self.inner.theta_trace.len(), 2), flat).expect("trace").into_pyarray(py)
    }

    /// `(T, 3)` array of γ per iteration, normalized units.
    #[getter]
    fn gamma_trace<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        let flat: Vec<f64> = self.inner.gamma_trace.iter().flatten().copied().collect();
        Array2::from_shape_vec((self.inner.gamma_trace.len(), 3), flat).expect("trace").into_pyarray(py)
    }

    #[getter]
    fn accepted_iterations(&self) -> usize {
        self.inner.accepted_iterations
    }

    /// `(offset, scale)` mapping the input to `[0, 1]` as `(y − offset) / scale`.
    #[getter]
    fn normalization(&self) -> (f64, f64) {
        (self.inner.normalization.offset, self.inner.normalization.scale)
    }

    fn __repr__(&self) -> String {
        let (n1, n2) = self.inner.posterior_mean.shape();
        format!(
            "DenoiseResult(lattice={n1}x{n2}, accepted_iterations={}, spots={})",
            self.inner.accepted_iterations,
            self.inner.final_mask.spot_count()
        )
    }
}

fn hyper_or_default(hp: Option<PyRef<'_, PyHyperParams>>) -> smdenoise::HyperParams {
    hp.map(|h| h.inner.clone()).unwrap_or_default()
}

/// Runs the Gibbs sampler on `y` and returns the averaged estimate.
#[pyfunction]
#[pyo3(signature = (y, variant="higmrf", hyper=None))]
fn denoise(
    py: Python<'_>,
    y: PyReadonlyArray2<'_, f64>,
    variant: &str,
    hyper: Option<PyRef<'_, PyHyperParams>>,
) -> PyResult<PyDenoiseResult> {
    let y = to_raster(&y)?;
    let variant = parse_variant(variant)?;
    let hp = hyper_or_default(hyper);
    let inner = py.detach(|| smdenoise::denoise(&y, &hp, variant)).map_err(err)?;
    Ok(PyDenoiseResult { inner })
}

/// Runs `chains` independent chains seeded `seed, seed + 1, …`.
#[pyfunction]
#[pyo3(signature = (y, chains=4, variant="higmrf", hyper=None))]
fn denoise_chains(
    py: Python<'_>,
    y: PyReadonlyArray2<'_, f64>,
    chains: usize,
    variant: &str,
    hyper: Option<PyRef<'_, PyHyperParams>>,
) -> PyResult<Vec<PyDenoiseResult>> {
    let y = to_raster(&y)?;
    let variant = parse_variant(variant)?;
    let hp = hyper_or_default(hyper);
    let runs = py.detach(|| smdenoise::denoise_chains(&y, &hp, variant, chains)).map_err(err)?;
    Ok(runs.into_iter().map(|inner| PyDenoiseResult { inner }).collect())
}

#[pyfunction]
fn igmrf_precision(n1: usize, n2: usize) -> PyResult<PyPrecision> {
    Ok(PyPrecision { inner: smdenoise::build_igmrf_precision(n1, n2).map_err(err)? })
}

/// Mask-weighted precision; background–background differences carry weight `lam`.
#[pyfunction]
#[pyo3(signature = (mask, lam=LatticeWeights::DEFAULT_LAMBDA))]
fn higmrf_precision(mask: PyReadonlyArray2<'_, u8>, lam: f64) -> PyResult<PyPrecision> {
    let mask = to_mask(&mask)?;
    let (n1, n2) = mask.shape();
    let weights = LatticeWeights::new(lam).map_err(err)?;
    Ok(PyPrecision { inner: smdenoise::build_higmrf_precision(n1, n2, &mask, weights).map_err(err)? })
}

/// Local-threshold spot mask: 1 where `f ≥ μ_local + h·σ_local`.
#[pyfunction]
#[pyo3(signature = (f, h=0.1, window=7))]
fn get_binary_image<'py>(
    py: Python<'py>,
    f: PyReadonlyArray2<'py, f64>,
    h: f64,
    window: usize,
) -> PyResult<Bound<'py, PyArray2<u8>>> {
    let mask = smdenoise::get_binary_image(&to_raster(&f)?, h, window).map_err(err)?;
    Ok(mask_out(py, &mask))
}

#[pyfunction]
fn rmse(estimate: PyReadonlyArray2<'_, f64>, truth: PyReadonlyArray2<'_, f64>) -> PyResult<f64> {
    metrics::rmse(&to_raster(&estimate)?, &to_raster(&truth)?).map_err(err)
}

#[pyfunction]
fn psnr(estimate: PyReadonlyArray2<'_, f64>, truth: PyReadonlyArray2<'_, f64>) -> PyResult<f64> {
    metrics::psnr(&to_raster(&estimate)?, &to_raster(&truth)?).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (estimate, truth, bins=metrics::DEFAULT_KLD_BINS))]
fn kld(estimate: PyReadonlyArray2<'_, f64>, truth: PyReadonlyArray2<'_, f64>, bins: usize) -> PyResult<f64> {
    metrics::kld(&to_raster(&estimate)?, &to_raster(&truth)?, bins).map_err(err)
}

/// Global universal quality index.
#[pyfunction]
fn ssim(estimate: PyReadonlyArray2<'_, f64>, truth: PyReadonlyArray2<'_, f64>) -> PyResult<f64> {
    metrics::ssim(&to_raster(&estimate)?, &to_raster(&truth)?).map_err(err)
}

/// All four metrics as a dict.
#[pyfunction]
fn evaluate<'py>(
    py: Python<'py>,
    estimate: PyReadonlyArray2<'py, f64>,
    truth: PyReadonlyArray2<'py, f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let r = metrics::evaluate(&to_raster(&estimate)?, &to_raster(&truth)?).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("rmse", r.rmse)?;
    d.set_item("psnr_db", r.psnr_db)?;
    d.set_item("kld", r.kld)?;
    d.set_item("ssim", r.ssim)?;
    Ok(d)
}

/// PSRF of `m` equal-length chains given as an `(m, L)` array.
#[pyfunction]
fn psrf(chains: PyReadonlyArray2<'_, f64>) -> PyResult<f64> {
    let view = chains.as_array();
    let traces = TraceSet::new(view.rows().into_iter().map(|r| r.to_vec()).collect()).map_err(err)?;
    diagnostics::psrf(&traces).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (y, sigma=1.0, size=5))]
fn gaussian_filter<'py>(py: Python<'py>, y: PyReadonlyArray2<'py, f64>, sigma: f64, size: usize) -> PyResult<Bound<'py, PyArray2<f64>>> {
    Ok(raster_out(py, &baselines::gaussian_filter(&to_raster(&y)?, sigma, size).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (y, size=3))]
fn average_filter<'py>(py: Python<'py>, y: PyReadonlyArray2<'py, f64>, size: usize) -> PyResult<Bound<'py, PyArray2<f64>>> {
    Ok(raster_out(py, &baselines::average_filter(&to_raster(&y)?, size).map_err(err)?))
}

#[pyfunction]
#[pyo3(signature = (y, size=5))]
fn wiener_filter<'py>(py: Python<'py>, y: PyReadonlyArray2<'py, f64>, size: usize) -> PyResult<Bound<'py, PyArray2<f64>>> {
    Ok(raster_out(py, &baselines::wiener_filter(&to_raster(&y)?, size).map_err(err)?))
}

/// Non-local means; `h` is in the input's intensity units.
#[pyfunction]
#[pyo3(signature = (y, patch=5, search=11, h=0.1))]
fn nlm_filter<'py>(
    py: Python<'py>,
    y: PyReadonlyArray2<'py, f64>,
    patch: usize,
    search: usize,
    h: f64,
) -> PyResult<Bound<'py, PyArray2<f64>>> {
    Ok(raster_out(py, &baselines::nlm_filter(&to_raster(&y)?, patch, search, h).map_err(err)?))
}

/// One synthetic (truth, noisy) pair as a dict with keys `truth`, `noisy`,
/// `spots` (`(k, 3)` array of row, col, amplitude), `target_snr_db` and
/// `realized_snr_db`. Image `index` is reproducible on its own.
#[pyfunction]
#[pyo3(signature = (
    index=0, *, seed=0, n1=30, n2=30, spots_min=3, spots_max=8, amplitude_min=0.5, amplitude_max=1.0,
    psf_sigma=1.2, snr_db_min=5.0, snr_db_max=10.0
))]
#[allow(clippy::too_many_arguments)]
fn synth_pair<'py>(
    py: Python<'py>,
    index: usize,
    seed: u64,
    n1: usize,
    n2: usize,
    spots_min: usize,
    spots_max: usize,
    amplitude_min: f64,
    amplitude_max: f64,
    psf_sigma: f64,
    snr_db_min: f64,
    snr_db_max: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = SynthConfig {
        n1,
        n2,
        n_images: index + 1,
        spots_min,
        spots_max,
        amplitude_min,
        amplitude_max,
        psf_sigma,
        snr_db_min,
        snr_db_max,
        seed,
    };
    cfg.validate().map_err(err)?;
    let pair = synth::generate_pair(&cfg, index).map_err(err)?;
    let spots: Vec<f64> = pair.spots.iter().flat_map(|s| [s.row, s.col, s.amplitude]).collect();
    let d = PyDict::new(py);
    d.set_item("truth", raster_out(py, &pair.truth))?;
    d.set_item("noisy", raster_out(py, &pair.noisy))?;
    d.set_item(
        "spots",
        Array2::from_shape_vec((pair.spots.len(), 3), spots).expect("spot table").into_pyarray(py),
    )?;
    d.set_item("target_snr_db", pair.target_snr_db)?;
    d.set_item("realized_snr_db", pair.realized_snr_db)?;
    Ok(d)
}

/// SNR in dB of `signal` against an additive noise realization.
#[pyfunction]
fn snr_db(signal: PyReadonlyArray2<'_, f64>, noise: PyReadonlyArray2<'_, f64>) -> PyResult<f64> {
    let noise = to_raster(&noise)?;
    Ok(synth::snr_db(&to_raster(&signal)?, noise.data()))
}

/// Design matrix `Z` as an `(n1·n2, 3)` array in row-major pixel order.
#[pyfunction]
fn design_matrix<'py>(py: Python<'py>, n1: usize, n2: usize) -> Bound<'py, PyArray2<f64>> {
    let z = smdenoise::make_design(n1, n2);
    let flat: Vec<f64> = (0..n1 * n2).flat_map(|p| *z.row(p)).collect();
    Array2::from_shape_vec((n1 * n2, 3), flat).expect("design").into_pyarray(py)
}

/// Flat row-major indices of the in-lattice 4-neighbours of `(i, j)`.
#[pyfunction]
fn neighbors<'py>(py: Python<'py>, i: usize, j: usize, n1: usize, n2: usize) -> PyResult<Bound<'py, PyArray1<u64>>> {
    let nb = smdenoise::neighbors(i, j, n1, n2).map_err(err)?;
    Ok(nb.into_iter().map(|(k, l)| (k * n2 + l) as u64).collect::<Vec<_>>().into_pyarray(py))
}

#[pymodule]
#[pyo3(name = "smdenoise")]
fn smdenoise_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHyperParams>()?;
    m.add_class::<PyPrecision>()?;
    m.add_class::<PyDenoiseResult>()?;
    m.add_function(wrap_pyfunction!(denoise, m)?)?;
    m.add_function(wrap_pyfunction!(denoise_chains, m)?)?;
    m.add_function(wrap_pyfunction!(igmrf_precision, m)?)?;
    m.add_function(wrap_pyfunction!(higmrf_precision, m)?)?;
    m.add_function(wrap_pyfunction!(get_binary_image, m)?)?;
    m.add_function(wrap_pyfunction!(design_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(neighbors, m)?)?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(kld, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(psrf, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_filter, m)?)?;
    m.add_function(wrap_pyfunction!(average_filter, m)?)?;
    m.add_function(wrap_pyfunction!(wiener_filter, m)?)?;
    m.add_function(wrap_pyfunction!(nlm_filter, m)?)?;
    m.add_function(wrap_pyfunction!(synth_pair, m)?)?;
    m.add_function(wrap_pyfunction!(snr_db, m)?)?;
    m.add("DEFAULT_LAMBDA", LatticeWeights::DEFAULT_LAMBDA)?;
    Ok(())
}
