//! Finite-blocklength rate under the normal approximation and its inversion
//! to the smallest SNR that sustains a required short-packet rate.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Short-packet link requirement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UrllcParams {
    pub bandwidth_hz: f64,
    pub tau_s: f64,
    /// Stored and validated (`tau <= latency`) but otherwise unused.
    pub latency_budget_s: f64,
    /// Blocklength in channel uses, `round(B * tau)`.
    pub blocklength: u64,
    pub eps_max: f64,
    /// Required rate in bits per channel use.
    pub r_req: f64,
}

impl UrllcParams {
    pub fn new(
        bandwidth_hz: f64,
        tau_s: f64,
        latency_budget_s: f64,
        eps_max: f64,
        r_req: f64,
    ) -> Result<Self> {
        if !(tau_s > 0.0 && tau_s <= latency_budget_s) {
            return Err(Error::InvalidInput(format!(
                "transmission duration must satisfy 0 < tau <= latency budget (tau = {tau_s}, budget = {latency_budget_s})"
            )));
        }
        if !(bandwidth_hz > 0.0 && bandwidth_hz.is_finite()) {
            return Err(Error::InvalidInput("bandwidth must be positive".into()));
        }
        let n = (bandwidth_hz * tau_s).round();
        if n < 1.0 {
            return Err(Error::InvalidInput(format!(
                "blocklength B*tau = {} rounds below one channel use",
                bandwidth_hz * tau_s
            )));
        }
        if !(eps_max > 0.0 && eps_max < 0.5) {
            return Err(Error::InvalidInput(format!(
                "target error probability must lie in (0, 0.5), got {eps_max}"
            )));
        }
        if !(r_req >= 0.0 && r_req.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "required rate must be nonnegative, got {r_req}"
            )));
        }
        Ok(Self {
            bandwidth_hz,
            tau_s,
            latency_budget_s,
            blocklength: n as u64,
            eps_max,
            r_req,
        })
    }
}

impl Default for UrllcParams {
    /// 180 kHz for 1 ms (n = 180), error target 1e-5, 0.5 bit per channel use.
    fn default() -> Self {
        Self::new(180e3, 1e-3, 1e-3, 1e-5, 0.5).expect("default URLLC parameters are valid")
    }
}

/// Standard normal tail `Q(x) = P(Z > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Rational approximation of the standard normal quantile (relative error
/// around 1e-9), used as the starting point for Newton refinement.
fn normal_quantile_seed(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549671010060190e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Inverse Gaussian Q-function: returns `x` with `Q(x) = p`.
pub fn q_inv(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::Domain(format!("q_inv requires p in (0, 1), got {p}")));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    // Q(x) = p  <=>  Phi(-x) = p
    let mut x = -normal_quantile_seed(p);
    for _ in 0..4 {
        let pdf = normal_pdf(x);
        if pdf == 0.0 {
            break;
        }
        let step = (q_function(x) - p) / pdf;
        x += step;
        if step.abs() <= 1e-15 * x.abs().max(1.0) {
            break;
        }
    }
    Ok(x)
}

/// Channel dispersion `V(gamma)` in squared bits per channel use.
pub fn dispersion(gamma: f64) -> f64 {
    let frac = gamma * (gamma + 2.0) / ((1.0 + gamma) * (1.0 + gamma));
    frac * LOG2_E * LOG2_E
}

/// Achievable rate (bits per channel use) at SNR `gamma`, blocklength `n`
/// and error probability `eps`.
pub fn fb_rate(gamma: f64, n: u64, eps: f64) -> Result<f64> {
    let q = q_inv(eps)?;
    Ok(fb_rate_with_qinv(gamma, n, q))
}

fn fb_rate_with_qinv(gamma: f64, n: u64, q: f64) -> f64 {
    let n = n as f64;
    (1.0 + gamma).log2() - (dispersion(gamma) / n).sqrt() * q + n.log2() / (2.0 * n)
}

const GAMMA_CAP: f64 = 1_152_921_504_606_846_976.0; // 2^60
const SCAN_POINTS: usize = 4097;

/// Smallest SNR `gamma >= 0` whose finite-blocklength rate meets `r_req`.
///
/// The bracket `[0, gamma_hi]` grows by doubling from 1. A grid scan over
/// the bracket locates the first feasible grid point and checks that no
/// later grid point drops back below the requirement; bisection then pins
/// the crossing. The returned value is always on the feasible side.
pub fn gamma_min(params: &UrllcParams) -> Result<f64> {
    let n = params.blocklength;
    if n == 0 {
        return Err(Error::InvalidInput("blocklength must be at least 1".into()));
    }
    let q = q_inv(params.eps_max)?;
    let rate = |g: f64| fb_rate_with_qinv(g, n, q);
    let target = params.r_req;

    if rate(0.0) >= target {
        return Ok(0.0);
    }

    let mut hi = 1.0;
    while rate(hi) < target {
        hi *= 2.0;
        if hi > GAMMA_CAP {
            return Err(Error::ModelRegime(format!(
                "required rate {target} not reached below gamma = 2^60"
            )));
        }
    }

    let step = hi / (SCAN_POINTS - 1) as f64;
    let mut first_feasible = None;
    for i in 0..SCAN_POINTS {
        let g = i as f64 * step;
        let r = rate(g);
        match first_feasible {
            None if r >= target => first_feasible = Some(i),
            Some(_) if r < target - 1e-12 => {
                return Err(Error::ModelRegime(format!(
                    "rate falls back below the requirement at gamma = {g} after the first crossing"
                )));
            }
            _ => {}
        }
    }
    let idx = first_feasible.expect("gamma_hi is feasible by construction");
    let mut lo = (idx - 1) as f64 * step;
    let mut hi = idx as f64 * step;
    while hi - lo > 1e-13 * hi.max(1e-300) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if rate(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// `gamma - gamma_min(params)`; nonnegative iff the link is URLLC-feasible.
pub fn snr_margin(gamma: f64, params: &UrllcParams) -> Result<f64> {
    Ok(gamma - gamma_min(params)?)
}
