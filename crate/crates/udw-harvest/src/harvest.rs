//! Two-detector density-matrix elements and correlation measures.
//!
//! At second order in the coupling the joint state is fixed by the
//! transition probabilities `L_AA = L_BB`, the cross element `L_AB` and the
//! pair element `M`, all divided by λ². Stationary arrangements reduce to
//! single integrals over the time difference; nonstationary ones need the
//! time-ordered double integral. `M` splits into the state-dependent
//! anticommutator part `M+` (Re of the kernel) and the state-independent
//! commutator part `M-` (Im), with `M = M+ + i M-`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quad::{
    integrate_timeordered_2d, integrate_windowed_1d, Domain2, Integrand1d, Integrand2d, Part,
    Part2, QuadSpec, Support,
};
use crate::response::{transition_probability, DetectorParams};
use crate::wightman::{eval_pair_raw, eval_pair_stationary_z, PairConfig, PairFlavor, TrajectoryParams};

const SQRT_PI: f64 = 1.772453850905516;

/// Per-element absolute error estimates.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BlockErrors {
    pub laa: f64,
    pub lbb: f64,
    pub lab: f64,
    pub m: f64,
    pub m_plus: f64,
    pub m_minus: f64,
}

/// Second-order density-matrix data, all divided by λ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrixBlocks {
    pub laa: f64,
    pub lbb: f64,
    pub lab: Complex64,
    pub m: Complex64,
    pub m_plus: Complex64,
    pub m_minus: Complex64,
    pub err: BlockErrors,
}

impl DensityMatrixBlocks {
    /// `|m - (m+ + i m-)|`; zero in exact arithmetic.
    pub fn closure_defect(&self) -> f64 {
        (self.m - (self.m_plus + Complex64::i() * self.m_minus)).norm()
    }

    pub fn closure_budget(&self) -> f64 {
        self.err.m + self.err.m_plus + self.err.m_minus
    }

    /// `laa*lbb - |lab|^2`; nonnegative up to quadrature error for a
    /// positive-semidefinite two-point kernel.
    pub fn cauchy_schwarz_margin(&self) -> f64 {
        self.laa * self.lbb - self.lab.norm_sqr()
    }
}

/// Correlation measures of one pair configuration, all divided by λ².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationReport {
    pub concurrence: f64,
    pub concurrence_plus: f64,
    pub concurrence_minus: f64,
    pub mutual_info: f64,
    pub l_plus: f64,
    pub l_minus: f64,
}

/// Stationary pair elements via the single-integral reductions:
///
/// ```text
/// M/λ²    = -2σ√π e^{-Ω²σ²} ∫_0^∞ du e^{-u²/4σ²} W_s(u - iε)
/// L_AB/λ² =   σ√π ∫_R  du e^{-u²/4σ²} e^{-iΩu} W_s(u - iε)
/// ```
///
/// with `M±` from the same half-line integral of Re/Im of `W_s`.
pub fn elements_stationary(
    cfg: &PairConfig,
    det: &DetectorParams,
    spec: &QuadSpec,
) -> Result<DensityMatrixBlocks> {
    if cfg.flavor != PairFlavor::Stationary {
        return Err(Error::InvalidInput("elements_stationary needs a stationary config".into()));
    }
    let sigma = det.sigma;
    let poles = cfg.light_cone_crossings(spec.window_halfwidth * sigma);
    let kernel = |z: Complex64| eval_pair_stationary_z(cfg, z);

    let half_line = |part: Part| -> Result<(Complex64, f64)> {
        let integrand = Integrand1d {
            kernel: &kernel,
            omega: 0.0,
            sigma,
            support: Support::PositiveHalf,
            part,
            singular_points: &poles,
            descent_depth: 0.0,
        };
        let r = integrate_windowed_1d(&integrand, spec)?;
        let pref = -2.0 * sigma * SQRT_PI * (-det.omega * det.omega * sigma * sigma).exp();
        Ok((pref * r.value, pref.abs() * r.err_estimate))
    };

    let (m, m_err) = half_line(Part::Full)?;
    let (m_plus, mp_err) = half_line(Part::Re)?;
    let (m_minus, mm_err) = half_line(Part::Im)?;

    let lab_integrand = Integrand1d {
        kernel: &kernel,
        omega: det.omega,
        sigma,
        support: Support::FullLine,
        part: Part::Full,
        singular_points: &poles,
        descent_depth: 0.0,
    };
    let lab_r = integrate_windowed_1d(&lab_integrand, spec)?;
    let lab = sigma * SQRT_PI * lab_r.value;
    let lab_err = sigma * SQRT_PI * lab_r.err_estimate;

    let resp = transition_probability(&cfg.traj, det, spec)?;

    Ok(DensityMatrixBlocks {
        laa: resp.prob_over_lambda2,
        lbb: resp.prob_over_lambda2,
        lab,
        m,
        m_plus,
        m_minus,
        err: BlockErrors {
            laa: resp.err,
            lbb: resp.err,
            lab: lab_err,
            m: m_err,
            m_plus: mp_err,
            m_minus: mm_err,
        },
    })
}

/// Pair elements via the time-ordered double integral, for either flavor.
///
/// This is the only route for nonstationary arrangements and doubles as the
/// independent cross-check of the stationary single-integral reductions.
pub fn elements_via_timeordered_2d(
    cfg: &PairConfig,
    det: &DetectorParams,
    spec: &QuadSpec,
) -> Result<DensityMatrixBlocks> {
    let sigma = det.sigma;
    let omega = det.omega;
    let u_breaks = cfg.light_cone_crossings(spec.window_halfwidth * sigma * std::f64::consts::SQRT_2);
    let kernel = |ta: f64, tb: f64, eps: f64| eval_pair_raw(cfg, ta, tb, eps);

    let run = |phases: (f64, f64), domain: Domain2, part: Part2| -> Result<(Complex64, f64)> {
        let integrand = Integrand2d {
            kernel: &kernel,
            phases,
            sigma,
            domain,
            part,
            u_breaks: &u_breaks,
        };
        let r = integrate_timeordered_2d(&integrand, spec)?;
        Ok((r.value, r.err_estimate))
    };

    // L_AB carries the phase in the time difference, M in the time sum.
    let (lab, lab_err) = run((omega, -omega), Domain2::FullPlane, Part2::Full)?;

    let (m_fwd, e_fwd) = run((omega, omega), Domain2::UPositive, Part2::Full)?;
    let (m_rev, e_rev) = run((omega, omega), Domain2::UNegative, Part2::Conj)?;
    let m = -(m_fwd + m_rev);

    let (mp, mp_err) = run((omega, omega), Domain2::FullPlane, Part2::Re)?;
    let m_plus = -mp;

    let (mi_pos, ei_pos) = run((omega, omega), Domain2::UPositive, Part2::Im)?;
    let (mi_neg, ei_neg) = run((omega, omega), Domain2::UNegative, Part2::Im)?;
    let m_minus = -(mi_pos - mi_neg);

    let resp = transition_probability(&cfg.traj, det, spec)?;

    Ok(DensityMatrixBlocks {
        laa: resp.prob_over_lambda2,
        lbb: resp.prob_over_lambda2,
        lab,
        m,
        m_plus,
        m_minus,
        err: BlockErrors {
            laa: resp.err,
            lbb: resp.err,
            lab: lab_err,
            m: e_fwd + e_rev,
            m_plus: mp_err,
            m_minus: ei_pos + ei_neg,
        },
    })
}

/// Nonstationary pair elements (time-ordered double integrals).
pub fn elements_nonstationary(
    cfg: &PairConfig,
    det: &DetectorParams,
    spec: &QuadSpec,
) -> Result<DensityMatrixBlocks> {
    if cfg.flavor != PairFlavor::Nonstationary {
        return Err(Error::InvalidInput(
            "elements_nonstationary needs a nonstationary config".into(),
        ));
    }
    elements_via_timeordered_2d(cfg, det, spec)
}

fn validate_probabilities(blocks: &DensityMatrixBlocks) -> Result<(f64, f64)> {
    let tol_a = blocks.err.laa + 1e-12;
    let tol_b = blocks.err.lbb + 1e-12;
    if blocks.laa < -tol_a || blocks.lbb < -tol_b {
        return Err(Error::InvalidInput(format!(
            "negative transition probability beyond tolerance: laa={}, lbb={}",
            blocks.laa, blocks.lbb
        )));
    }
    Ok((blocks.laa.max(0.0), blocks.lbb.max(0.0)))
}

/// Concurrence and its anticommutator/commutator split:
/// `C = 2 max(0, |m| - sqrt(laa lbb))`, same with `m±` for `C±`.
pub fn concurrence(blocks: &DensityMatrixBlocks) -> Result<(f64, f64, f64)> {
    let (laa, lbb) = validate_probabilities(blocks)?;
    if laa == 0.0 && lbb == 0.0 {
        // no response at this order: ground state
        return Ok((0.0, 0.0, 0.0));
    }
    let noise = (laa * lbb).sqrt();
    let c = 2.0 * (blocks.m.norm() - noise).max(0.0);
    let c_plus = 2.0 * (blocks.m_plus.norm() - noise).max(0.0);
    let c_minus = 2.0 * (blocks.m_minus.norm() - noise).max(0.0);
    Ok((c, c_plus, c_minus))
}

fn x_ln_x(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Quantum mutual information `I = L+ ln L+ + L- ln L- - laa ln laa - lbb ln lbb`
/// with `L± = (laa + lbb ± sqrt((laa-lbb)² + 4|lab|²)) / 2`.
///
/// The λ² normalization cancels between the four logarithms because
/// `L+ + L- = laa + lbb`; `0 ln 0 = 0` by continuity.
pub fn mutual_information(blocks: &DensityMatrixBlocks) -> Result<(f64, f64, f64)> {
    let (laa, lbb) = validate_probabilities(blocks)?;
    if laa == 0.0 && lbb == 0.0 {
        return Ok((0.0, 0.0, 0.0));
    }
    let root = ((laa - lbb) * (laa - lbb) + 4.0 * blocks.lab.norm_sqr()).sqrt();
    let l_plus = 0.5 * (laa + lbb + root);
    let mut l_minus = 0.5 * (laa + lbb - root);
    let tol = blocks.err.laa + blocks.err.lbb + 2.0 * blocks.err.lab * blocks.lab.norm() + 1e-12;
    if l_minus < -tol {
        return Err(Error::InvalidInput(format!(
            "cross correlation exceeds Cauchy-Schwarz beyond tolerance: L- = {l_minus}"
        )));
    }
    if l_minus < 0.0 {
        l_minus = 0.0;
    }
    let info = x_ln_x(l_plus) + x_ln_x(l_minus) - x_ln_x(laa) - x_ln_x(lbb);
    Ok((info, l_plus, l_minus))
}

/// Bundle both measures into one report.
pub fn correlation_report(blocks: &DensityMatrixBlocks) -> Result<CorrelationReport> {
    let (concurrence, concurrence_plus, concurrence_minus) = concurrence(blocks)?;
    let (mutual_info, l_plus, l_minus) = mutual_information(blocks)?;
    Ok(CorrelationReport {
        concurrence,
        concurrence_plus,
        concurrence_minus,
        mutual_info,
        l_plus,
        l_minus,
    })
}

/// Quadrature controls for a harvest sweep: stationary rows integrate on the
/// line, nonstationary rows on the plane.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HarvestSpec {
    pub quad_1d: QuadSpec,
    pub quad_2d: QuadSpec,
}

impl HarvestSpec {
    pub fn for_sigma(sigma: f64) -> Self {
        Self { quad_1d: QuadSpec::default_1d(sigma), quad_2d: QuadSpec::for_2d(sigma) }
    }
}

/// One grid point of a harvest sweep, in σ-units.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct HarvestPoint {
    pub a_sigma: f64,
    pub bbar: f64,
    pub omega_sigma: f64,
    pub l_sigma: f64,
    pub flavor: PairFlavor,
}

/// One computed harvest row.
#[derive(Debug, Clone)]
pub struct HarvestRow {
    pub index: usize,
    pub point: HarvestPoint,
    pub result: Result<(DensityMatrixBlocks, CorrelationReport)>,
}

/// Compute blocks and measures for one parameter point (σ = 1 internally;
/// all inputs are σ-scaled).
pub fn harvest_point(point: &HarvestPoint, spec: &HarvestSpec) -> Result<(DensityMatrixBlocks, CorrelationReport)> {
    let traj = TrajectoryParams::new(point.a_sigma, point.bbar)?;
    let det = DetectorParams::new(point.omega_sigma, 1.0, 1.0)?;
    let cfg = PairConfig::new(traj, point.l_sigma, point.flavor)?;
    let blocks = match point.flavor {
        PairFlavor::Stationary => elements_stationary(&cfg, &det, &spec.quad_1d)?,
        PairFlavor::Nonstationary => elements_nonstationary(&cfg, &det, &spec.quad_2d)?,
    };
    let report = correlation_report(&blocks)?;
    Ok((blocks, report))
}

/// Evaluate the harvesting measures on a parameter grid; rows are independent
/// and the output order is the input order.
pub fn harvest_sweep(points: &[HarvestPoint], spec: &HarvestSpec) -> Vec<HarvestRow> {
    harvest_sweep_with(points, spec, crate::exec::Parallelism::Parallel)
}

/// Sweep with explicit execution mode (benchmarks compare the two).
pub fn harvest_sweep_with(
    points: &[HarvestPoint],
    spec: &HarvestSpec,
    mode: crate::exec::Parallelism,
) -> Vec<HarvestRow> {
    crate::exec::map_indexed(points.len(), mode, |i| HarvestRow {
        index: i,
        point: points[i],
        result: harvest_point(&points[i], spec),
    })
}
