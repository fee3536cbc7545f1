//! Single-detector observables: transition probability and effective
//! temperature.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{integrate_windowed_1d, Integrand1d, Part, QuadResult, QuadSpec, Support};
use crate::wightman::{eval_single_z, TrajectoryParams};

const SQRT_PI: f64 = 1.772453850905516;

/// Energy gap, Gaussian switching width and coupling of one detector.
///
/// Observables are reported with the overall coupling stripped off
/// (`L/λ²`, `C/λ²`, `I/λ²`); `lambda` is carried only for oracle paths that
/// reassemble the physical density matrix.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DetectorParams {
    /// Energy gap Ω; may be negative for temperature probes.
    pub omega: f64,
    /// Gaussian switching width σ > 0.
    pub sigma: f64,
    /// Coupling λ.
    pub lambda: f64,
}

impl DetectorParams {
    pub fn new(omega: f64, sigma: f64, lambda: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("sigma must be > 0, got {sigma}")));
        }
        if !lambda.is_finite() || !omega.is_finite() {
            return Err(Error::InvalidInput("omega and lambda must be finite".into()));
        }
        Ok(Self { omega, sigma, lambda })
    }
}

/// Transition probability with quadrature diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResponseResult {
    /// L_jj / λ², nonnegative up to `err`.
    pub prob_over_lambda2: f64,
    pub err: f64,
    pub meta: QuadResult,
}

/// Descent depth for the response contour: aims at the saddle `2Ωσ²` of the
/// windowed phase but stays above the nearest kernel pole and inside the
/// window.
fn descent_depth(traj: &TrajectoryParams, omega: f64, sigma: f64) -> f64 {
    if omega <= 0.0 {
        return 0.0;
    }
    (2.0 * omega * sigma * sigma).min(0.35 * traj.pole_gap())
}

/// Excitation probability of a single detector on the given trajectory,
/// `L_jj/λ² = σ√π ∫ du e^{-u²/4σ²} e^{-iΩu} W(u - iε)`, extrapolated ε → 0.
pub fn transition_probability(
    traj: &TrajectoryParams,
    det: &DetectorParams,
    spec: &QuadSpec,
) -> Result<ResponseResult> {
    let kernel = |z: Complex64| eval_single_z(traj, z);
    let integrand = Integrand1d {
        kernel: &kernel,
        omega: det.omega,
        sigma: det.sigma,
        support: Support::FullLine,
        part: Part::Full,
        singular_points: &[],
        descent_depth: descent_depth(traj, det.omega, det.sigma),
    };
    let r = integrate_windowed_1d(&integrand, spec)?;
    let scale = det.sigma * SQRT_PI;
    let value = scale * r.value;
    let err = scale * r.err_estimate;
    // the exact value is real; the imaginary residue is a free diagnostic
    let im_budget = (10.0 * spec.rel_tol * value.re.abs()).max(10.0 * (err + spec.abs_floor));
    if value.im.abs() > im_budget {
        return Err(Error::NumericFailure { dtau: f64::NAN, eps: value.im });
    }
    Ok(ResponseResult {
        prob_over_lambda2: value.re,
        err,
        meta: QuadResult { value, err_estimate: err, ..r },
    })
}

/// Effective temperature from the excitation/de-excitation ratio,
/// `T = Ω / ln(F(-Ω)/F(Ω))`, both response values under the same spec.
pub fn effective_temperature(
    traj: &TrajectoryParams,
    det: &DetectorParams,
    spec: &QuadSpec,
) -> Result<f64> {
    if det.omega == 0.0 {
        return Err(Error::InvalidInput("effective temperature needs omega != 0".into()));
    }
    let up = transition_probability(traj, det, spec)?;
    let down = transition_probability(
        traj,
        &DetectorParams { omega: -det.omega, ..*det },
        spec,
    )?;
    let (f_up, f_down) = (up.prob_over_lambda2, down.prob_over_lambda2);
    if f_up <= up.err || f_down <= down.err {
        return Err(Error::UndefinedTemperature(format!(
            "response not positive beyond error: F(Ω)={f_up:.3e}±{:.1e}, F(-Ω)={f_down:.3e}±{:.1e}",
            up.err, down.err
        )));
    }
    let t = det.omega / (f_down / f_up).ln();
    if !t.is_finite() || t <= 0.0 {
        return Err(Error::UndefinedTemperature(format!(
            "ratio F(-Ω)/F(Ω) = {:.6e} gives no positive temperature",
            f_down / f_up
        )));
    }
    Ok(t)
}

/// One grid point of a response sweep, in σ-units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ResponsePoint {
    pub a_sigma: f64,
    pub bbar: f64,
    pub omega_sigma: f64,
}

/// One computed sweep row; failures are recorded, not fatal.
#[derive(Debug, Clone)]
pub struct ResponseRow {
    pub index: usize,
    pub point: ResponsePoint,
    pub result: Result<ResponseResult>,
}

fn response_row(index: usize, point: ResponsePoint, spec: &QuadSpec) -> ResponseRow {
    let result = TrajectoryParams::new(point.a_sigma, point.bbar).and_then(|traj| {
        let det = DetectorParams::new(point.omega_sigma, 1.0, 1.0)?;
        transition_probability(&traj, &det, spec)
    });
    ResponseRow { index, point, result }
}

/// Evaluate the response on a parameter grid; rows are independent and the
/// output order is the input order.
pub fn response_sweep(points: &[ResponsePoint], spec: &QuadSpec) -> Vec<ResponseRow> {
    response_sweep_with(points, spec, crate::exec::Parallelism::Parallel)
}

/// Sweep with explicit execution mode (benchmarks compare the two).
pub fn response_sweep_with(
    points: &[ResponsePoint],
    spec: &QuadSpec,
    mode: crate::exec::Parallelism,
) -> Vec<ResponseRow> {
    crate::exec::map_indexed(points.len(), mode, |i| response_row(i, points[i], spec))
}
