//! Trajectory catalog and regulated vacuum Wightman-function evaluators.
//!
//! All four planar uniform-acceleration motions (linear, catenary, cusped,
//! circular) share one kernel written in terms of the acceleration `a` and the
//! torsion ratio `bbar = b/a`:
//!
//! ```text
//! W(dt) = -1/(4 pi^2) * 1 / D(dt - i eps)
//! D(z)  = -bbar^2/(1-bbar^2) z^2 + 4 sinh^2( sqrt(1-bbar^2) a z / 2 ) / ((1-bbar^2)^2 a^2)
//! ```
//!
//! For `bbar > 1` the square root is imaginary and `sinh` turns into `sin`;
//! near `bbar = 1` both closed forms cancel catastrophically and the kernel is
//! evaluated by its everywhere-convergent series in `c2 = (1-bbar^2) a^2`.
//! The regulator always enters as `dt -> dt - i eps`, never through the
//! pair-time sum.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Series/closed-form switch: the series in `c2 z^2` is used when
/// `|c2 z^2| < SERIES_CUT`, where it converges geometrically and avoids the
/// cancellation between the `sinh^2` and `z^2` terms that grows like
/// `12/|c z|^2` as `c -> 0`.
const SERIES_CUT: f64 = 25.0;

/// Motion class selected by the torsion ratio.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionClass {
    Linear,
    Catenary,
    Cusped,
    Circular,
}

/// Proper acceleration magnitude and torsion ratio of one trajectory.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrajectoryParams {
    /// Proper acceleration magnitude, a > 0.
    pub a: f64,
    /// Torsion ratio b/a: 0 linear, (0,1) catenary, 1 cusped, >1 circular.
    pub bbar: f64,
}

impl TrajectoryParams {
    pub fn new(a: f64, bbar: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidInput(format!("acceleration must be > 0, got {a}")));
        }
        if !(bbar >= 0.0) || !bbar.is_finite() {
            return Err(Error::InvalidInput(format!("torsion ratio must be >= 0, got {bbar}")));
        }
        Ok(Self { a, bbar })
    }

    pub fn motion_class(&self) -> MotionClass {
        if self.bbar == 0.0 {
            MotionClass::Linear
        } else if self.bbar < 1.0 {
            MotionClass::Catenary
        } else if self.bbar == 1.0 {
            MotionClass::Cusped
        } else {
            MotionClass::Circular
        }
    }

    /// Signed squared frequency `c2 = (1 - bbar^2) a^2` of the kernel
    /// denominator; negative for circular motion.
    pub fn c2(&self) -> f64 {
        (1.0 - self.bbar * self.bbar) * self.a * self.a
    }

    /// Imaginary-axis distance from the real line to the nearest pole of the
    /// single-detector kernel, i.e. the first y > 0 with D(-i y) = 0.
    ///
    /// Bounds how far an integration contour may be pushed into the lower
    /// half-plane. For `bbar < 1` the poles sit on the lattice
    /// `2 pi k / (a sqrt(1 - bbar^2))` (linear: pure `sinh^2` zeros); for
    /// `bbar >= 1` the first axis zero of `D(-i y)` is found by scan and
    /// bisection.
    pub fn pole_gap(&self) -> f64 {
        let c2 = self.c2();
        if c2 > 0.0 {
            let lattice = 2.0 * std::f64::consts::PI / c2.sqrt();
            if self.bbar == 0.0 {
                return lattice;
            }
            // catenary: D(-iy) = bbar^2/(1-bbar^2) y^2 - 4 sin^2(c y/2)/((1-bbar^2)^2 a^2)
            // has its first zero strictly inside the first lattice period
            let f = |y: f64| self.denom(Complex64::new(0.0, -y)).re;
            return first_positive_root(f, lattice).unwrap_or(lattice).min(lattice);
        }
        // cusped: D(-iy) = y^2 (a^2 y^2/12 - 1) -> root at sqrt(12)/a
        if c2 == 0.0 {
            return 12f64.sqrt() / self.a;
        }
        // circular: -gamma^2 y^2 + 4 R^2 sinh^2(q y / 2) crosses zero once
        let f = |y: f64| self.denom(Complex64::new(0.0, -y)).re;
        let q = (-c2).sqrt();
        // sinh growth guarantees a root below ~ (2/q) asinh(gamma q / smth) + margin;
        // scan a generous window instead of solving the transcendental bound
        let upper = 40.0 / q + 40.0 / self.a;
        first_positive_root(f, upper).unwrap_or(upper)
    }

    /// Unified denominator D(z) at complex time separation.
    pub fn denom(&self, z: Complex64) -> Complex64 {
        denom_c2(self.a, self.bbar, self.c2(), z)
    }
}

fn first_positive_root(f: impl Fn(f64) -> f64, upper: f64) -> Option<f64> {
    let n = 4000;
    let mut prev_y = upper * 1e-6;
    let mut prev = f(prev_y);
    for i in 1..=n {
        let y = upper * (i as f64) / (n as f64);
        let v = f(y);
        if v == 0.0 {
            return Some(y);
        }
        if (prev < 0.0) != (v < 0.0) {
            let (mut lo, mut hi) = (prev_y, y);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if (f(mid) < 0.0) == (prev < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-14 * upper {
                    break;
                }
            }
            return Some(0.5 * (lo + hi));
        }
        prev_y = y;
        prev = v;
    }
    None
}

/// D(z) with the signed squared frequency passed explicitly.
fn denom_c2(a: f64, bbar: f64, c2: f64, z: Complex64) -> Complex64 {
    let z2 = z * z;
    if (c2 * z2).norm() < SERIES_CUT {
        return denom_series(a, c2, z2);
    }
    if c2 > 0.0 {
        let c = c2.sqrt();
        let s = (0.5 * c * z).sinh();
        let om = 1.0 - bbar * bbar;
        -(bbar * bbar / om) * z2 + 4.0 / (om * om * a * a) * s * s
    } else {
        let q = (-c2).sqrt();
        let s = (0.5 * q * z).sin();
        let bb = bbar * bbar;
        (bb / (bb - 1.0)) * z2 - 4.0 / ((bb - 1.0) * (bb - 1.0) * a * a) * s * s
    }
}

/// Series form `D = z^2 + a^2 z^4/12 + a^2 sum_{n>=3} 2 c2^{n-2} z^{2n}/(2n)!`,
/// exact for any `c2` (it is the Taylor series of the closed form in z).
fn denom_series(a: f64, c2: f64, z2: Complex64) -> Complex64 {
    let mut term = a * a / 12.0 * z2 * z2;
    let mut total = z2 + term;
    let mut n = 2usize;
    loop {
        n += 1;
        term = term * c2 * z2 / ((2 * n - 1) as f64 * (2 * n) as f64);
        total += term;
        if term.norm() < 1e-18 * total.norm() || n > 80 {
            return total;
        }
    }
}

/// Odd factor of the nonstationary cross term:
/// `g(z) = sinh(sqrt(c2) z / 2) / sqrt(c2)`, continued through `c2 <= 0`.
fn cross_g(c2: f64, z: Complex64) -> Complex64 {
    let z2 = z * z;
    if (c2 * z2).norm() < SERIES_CUT {
        let mut term = 0.5 * z;
        let mut total = term;
        let mut k = 0usize;
        loop {
            k += 1;
            term = term * c2 * z2 / (4.0 * (2 * k) as f64 * (2 * k + 1) as f64);
            total += term;
            if term.norm() < 1e-18 * total.norm() || k > 80 {
                return total;
            }
        }
    } else if c2 > 0.0 {
        let c = c2.sqrt();
        (0.5 * c * z).sinh() / c
    } else {
        let q = (-c2).sqrt();
        (0.5 * q * z).sin() / q
    }
}

/// Proper-time difference with its regulator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulatedTime {
    pub dtau: f64,
    pub eps: f64,
}

impl RegulatedTime {
    pub fn new(dtau: f64, eps: f64) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("regulator must be > 0, got {eps}")));
        }
        Ok(Self { dtau, eps })
    }

    fn z(&self) -> Complex64 {
        Complex64::new(self.dtau, -self.eps)
    }
}

/// Quantities derived from (a, bbar) for circular motion.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircularDerived {
    /// Orbit radius.
    pub r: f64,
    /// Coordinate angular velocity omega = b (1 - a^2/b^2).
    pub omega: f64,
    /// Lorentz factor.
    pub gamma: f64,
    /// Orbital speed v = a/b < 1.
    pub v: f64,
}

/// Radius, angular velocity, Lorentz factor and speed of the circular orbit.
pub fn circular_derived(traj: &TrajectoryParams) -> Result<CircularDerived> {
    if traj.bbar <= 1.0 {
        return Err(Error::Domain(format!(
            "circular motion requires bbar > 1, got {}",
            traj.bbar
        )));
    }
    let b = traj.a * traj.bbar;
    let v = traj.a / b;
    let omega = b * (1.0 - (traj.a / b) * (traj.a / b));
    let gamma = 1.0 / (1.0 - v * v).sqrt();
    let r = v / omega;
    Ok(CircularDerived { r, omega, gamma, v })
}

fn finite_or_err(w: Complex64, dtau: f64, eps: f64) -> Result<Complex64> {
    if w.re.is_finite() && w.im.is_finite() {
        Ok(w)
    } else {
        Err(Error::NumericFailure { dtau, eps })
    }
}

const FOUR_PI2: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

/// Single-detector vacuum kernel `W(dtau - i eps)` for any of the four motions.
pub fn eval_single(traj: &TrajectoryParams, t: RegulatedTime) -> Result<Complex64> {
    let w = eval_single_z(traj, t.z());
    finite_or_err(w, t.dtau, t.eps)
}

/// Single-detector kernel at an arbitrary complex time separation.
///
/// Analytic off the pole set of D; used by the contour-descent quadrature.
pub fn eval_single_z(traj: &TrajectoryParams, z: Complex64) -> Complex64 {
    -1.0 / (FOUR_PI2 * traj.denom(z))
}

/// Cusped-limit kernel with denominator `z^2 + a^2 z^4 / 12`.
pub fn eval_cusped_series(a: f64, t: RegulatedTime) -> Result<Complex64> {
    let z = t.z();
    let z2 = z * z;
    let w = -1.0 / (FOUR_PI2 * (z2 + a * a / 12.0 * z2 * z2));
    finite_or_err(w, t.dtau, t.eps)
}

/// Pair arrangement flavor: separation perpendicular to the plane of motion
/// (stationary) or inside it (nonstationary).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum PairFlavor {
    Stationary,
    Nonstationary,
}

/// Two identical detectors on congruent trajectories at proper separation L.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairConfig {
    pub traj: TrajectoryParams,
    pub l: f64,
    pub flavor: PairFlavor,
}

impl PairConfig {
    pub fn new(traj: TrajectoryParams, l: f64, flavor: PairFlavor) -> Result<Self> {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(Error::InvalidInput(format!("separation must be >= 0, got {l}")));
        }
        Ok(Self { traj, l, flavor })
    }

    /// Real part of the stationary pair denominator, `D(u) - L^2`.
    ///
    /// Zero crossings are light-cone contacts between the two worldlines; the
    /// quadrature splits panels there.
    pub fn stationary_denominator(&self, u: f64) -> f64 {
        self.traj.denom(Complex64::new(u, 0.0)).re - self.l * self.l
    }

    /// Light-cone contact points of the stationary denominator inside
    /// `|u| <= half_width` (positive side; the kernel is even so crossings
    /// come in symmetric pairs).
    pub fn light_cone_crossings(&self, half_width: f64) -> Vec<f64> {
        crate::quad::detect_real_poles(
            &|u| self.stationary_denominator(u),
            1e-9 * half_width,
            half_width,
            self.scan_points(half_width),
        )
    }

    fn scan_points(&self, half_width: f64) -> usize {
        // resolve the sin^2 oscillation of circular denominators
        let c2 = self.traj.c2();
        let osc = if c2 < 0.0 { (-c2).sqrt() * half_width } else { 0.0 };
        (4096usize).max((20.0 * osc) as usize)
    }
}

/// Pair kernel `W(x_A(tau_a), x_B(tau_b))` with regulator `eps` applied to the
/// proper-time difference.
pub fn eval_pair(cfg: &PairConfig, tau_a: f64, tau_b: f64, eps: f64) -> Result<Complex64> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("regulator must be > 0, got {eps}")));
    }
    let w = eval_pair_raw(cfg, tau_a, tau_b, eps);
    finite_or_err(w, tau_a - tau_b, eps)
}

pub(crate) fn eval_pair_raw(cfg: &PairConfig, tau_a: f64, tau_b: f64, eps: f64) -> Complex64 {
    let z = Complex64::new(tau_a - tau_b, -eps);
    let traj = &cfg.traj;
    let mut den = traj.denom(z) - cfg.l * cfg.l;
    if cfg.flavor == PairFlavor::Nonstationary {
        let c2 = traj.c2();
        let splus = Complex64::new(tau_a + tau_b, 0.0);
        den -= 4.0 * cfg.l * traj.a * cross_g(c2, z) * cross_g(c2, splus);
    }
    -1.0 / (FOUR_PI2 * den)
}

/// Pair kernel with the operator order reversed, `W(x_B(tau_b), x_A(tau_a))`.
///
/// Equal to the complex conjugate of [`eval_pair`] because the unregulated
/// denominator is real; the reversed order only flips the sign of the
/// regulator.
pub fn eval_pair_reversed(cfg: &PairConfig, tau_a: f64, tau_b: f64, eps: f64) -> Result<Complex64> {
    Ok(eval_pair(cfg, tau_a, tau_b, eps)?.conj())
}

/// Stationary pair kernel at complex separation (analytic continuation).
pub fn eval_pair_stationary_z(cfg: &PairConfig, z: Complex64) -> Complex64 {
    -1.0 / (FOUR_PI2 * (cfg.traj.denom(z) - cfg.l * cfg.l))
}
