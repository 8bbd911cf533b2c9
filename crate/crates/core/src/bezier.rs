//! Bernstein-basis curves, derivative control points and the time-scaled
//! segment representation used by every graph vertex.
//!
//! A segment is a pair of curves of equal degree on `xi in [0, 1]`: a planar
//! shape curve `r(xi)` and a scalar, strictly increasing time-scaling curve
//! `h(xi)`. Physical time is `t = h(xi)`, so velocity and acceleration follow
//! from the chain rule.

use crate::error::{Error, Result};

/// Highest degree for which binomial coefficients and falling factorials are
/// computed exactly in `u64`.
pub const MAX_DEGREE: usize = 20;

/// Lower bound on every first-derivative control point of a timing curve.
pub const MIN_TIMING_DERIVATIVE: f64 = 1e-3;

pub fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        // exact: acc * (n - i) is divisible by (i + 1)
        acc = acc * (n - i) as u64 / (i + 1) as u64;
    }
    acc
}

/// `m! / (m - p)!`
pub fn falling_factorial(m: usize, p: usize) -> u64 {
    ((m - p + 1)..=m).map(|v| v as u64).product()
}

/// Weights `w_j` such that the `p`-th derivative control points of a degree-`m`
/// curve are `sum_j w_j P_{k+j}`, `j = 0..=p`.
pub fn derivative_weights(m: usize, p: usize) -> Result<Vec<f64>> {
    if p > m {
        return Err(Error::Domain(format!(
            "derivative order {p} exceeds degree {m}"
        )));
    }
    if m > MAX_DEGREE {
        return Err(Error::Domain(format!(
            "degree {m} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    let scale = falling_factorial(m, p) as i128;
    Ok((0..=p)
        .map(|j| {
            let sign: i128 = if (p - j) % 2 == 0 { 1 } else { -1 };
            (sign * scale * binomial(p, j) as i128) as f64
        })
        .collect())
}

/// `B_k^m(xi) = C(m, k) xi^k (1 - xi)^(m - k)`
pub fn bernstein_value(m: usize, k: usize, xi: f64) -> Result<f64> {
    if k > m {
        return Err(Error::Domain(format!(
            "Bernstein index {k} out of range for degree {m}"
        )));
    }
    if m > MAX_DEGREE {
        return Err(Error::Domain(format!(
            "degree {m} exceeds the supported maximum {MAX_DEGREE}"
        )));
    }
    Ok(binomial(m, k) as f64 * xi.powi(k as i32) * (1.0 - xi).powi((m - k) as i32))
}

/// Bézier curve with control points in `D` dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct BezierCurve<const D: usize> {
    control_points: Vec<[f64; D]>,
}

pub type ShapeCurve = BezierCurve<2>;
pub type TimingCurve = BezierCurve<1>;

impl<const D: usize> BezierCurve<D> {
    pub fn new(control_points: Vec<[f64; D]>) -> Result<Self> {
        if control_points.is_empty() {
            return Err(Error::Domain("a curve needs at least one control point".into()));
        }
        if control_points.len() - 1 > MAX_DEGREE {
            return Err(Error::Domain(format!(
                "degree {} exceeds the supported maximum {MAX_DEGREE}",
                control_points.len() - 1
            )));
        }
        Ok(Self { control_points })
    }

    pub fn degree(&self) -> usize {
        self.control_points.len() - 1
    }

    pub fn control_points(&self) -> &[[f64; D]] {
        &self.control_points
    }

    pub fn first(&self) -> [f64; D] {
        self.control_points[0]
    }

    pub fn last(&self) -> [f64; D] {
        self.control_points[self.degree()]
    }

    /// De Casteljau evaluation.
    pub fn eval(&self, xi: f64) -> [f64; D] {
        let mut work = self.control_points.clone();
        let n = work.len();
        for level in 1..n {
            for i in 0..n - level {
                for d in 0..D {
                    work[i][d] = (1.0 - xi) * work[i][d] + xi * work[i + 1][d];
                }
            }
        }
        work[0]
    }

    /// Direct Bernstein-sum evaluation.
    pub fn eval_bernstein(&self, xi: f64) -> [f64; D] {
        let m = self.degree();
        let mut out = [0.0; D];
        for (k, p) in self.control_points.iter().enumerate() {
            let b = binomial(m, k) as f64 * xi.powi(k as i32) * (1.0 - xi).powi((m - k) as i32);
            for d in 0..D {
                out[d] += b * p[d];
            }
        }
        out
    }

    /// Curve of the `p`-th derivative with respect to `xi`.
    pub fn derivative(&self, p: usize) -> Result<Self> {
        let m = self.degree();
        let w = derivative_weights(m, p)?;
        let pts = (0..=m - p)
            .map(|k| {
                let mut out = [0.0; D];
                for (j, wj) in w.iter().enumerate() {
                    for d in 0..D {
                        out[d] += wj * self.control_points[k + j][d];
                    }
                }
                out
            })
            .collect();
        Ok(Self {
            control_points: pts,
        })
    }

    /// Value of the `p`-th derivative at `xi`.
    pub fn derivative_at(&self, p: usize, xi: f64) -> Result<[f64; D]> {
        Ok(self.derivative(p)?.eval(xi))
    }
}

/// Derivative control-point curve (free-function form).
pub fn derivative_ctrl<const D: usize>(curve: &BezierCurve<D>, p: usize) -> Result<BezierCurve<D>> {
    curve.derivative(p)
}

fn norm2(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

const GL_NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

fn gauss_legendre<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS.iter())
        .map(|(x, w)| w * f(mid + half * x))
        .sum::<f64>()
        * half
}

fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let mid = 0.5 * (a + b);
    let left = gauss_legendre(f, a, mid);
    let right = gauss_legendre(f, mid, b);
    if depth == 0 || (left + right - whole).abs() <= tol {
        return left + right;
    }
    adaptive(f, a, mid, left, 0.5 * tol, depth - 1) + adaptive(f, mid, b, right, 0.5 * tol, depth - 1)
}

/// Length of a planar curve by adaptive Gauss-Legendre quadrature of the
/// parametric speed, to relative tolerance `tol`.
pub fn arc_length(curve: &ShapeCurve, tol: f64) -> f64 {
    if curve.degree() == 0 {
        return 0.0;
    }
    let d = curve.derivative(1).expect("first derivative exists for degree >= 1");
    let speed = |xi: f64| norm2(d.eval(xi));
    // coarse estimate sets the absolute budget
    let coarse: f64 = (0..8)
        .map(|i| gauss_legendre(&speed, i as f64 / 8.0, (i + 1) as f64 / 8.0))
        .sum();
    if coarse == 0.0 {
        return 0.0;
    }
    let abs_tol = 0.25 * tol * coarse;
    let whole = gauss_legendre(&speed, 0.0, 1.0);
    adaptive(&speed, 0.0, 1.0, whole, abs_tol, 40)
}

/// One graph vertex's trajectory piece.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentPair {
    pub shape: ShapeCurve,
    pub timing: TimingCurve,
}

/// Time, position, velocity and acceleration at one curve parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub t: f64,
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    pub acceleration: [f64; 2],
}

impl Kinematics {
    pub fn speed(&self) -> f64 {
        norm2(self.velocity)
    }

    pub fn acceleration_norm(&self) -> f64 {
        norm2(self.acceleration)
    }
}

impl SegmentPair {
    pub fn new(shape: ShapeCurve, timing: TimingCurve) -> Result<Self> {
        if shape.degree() != timing.degree() {
            return Err(Error::Domain(format!(
                "shape degree {} differs from timing degree {}",
                shape.degree(),
                timing.degree()
            )));
        }
        if shape.degree() == 0 {
            return Err(Error::Domain("segments need degree at least 1".into()));
        }
        Ok(Self { shape, timing })
    }

    pub fn degree(&self) -> usize {
        self.shape.degree()
    }

    pub fn start_time(&self) -> f64 {
        self.timing.first()[0]
    }

    pub fn end_time(&self) -> f64 {
        self.timing.last()[0]
    }

    pub fn duration(&self) -> f64 {
        self.end_time() - self.start_time()
    }

    /// Smallest first-derivative control point of the timing curve.
    pub fn min_timing_derivative(&self) -> f64 {
        self.timing
            .derivative(1)
            .expect("degree >= 1")
            .control_points()
            .iter()
            .map(|p| p[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Curve parameter at physical time `t`, by bisection on the monotone
    /// timing curve.
    pub fn time_sample(&self, t: f64) -> Result<f64> {
        let t0 = self.start_time();
        let t1 = self.end_time();
        let slack = 1e-12 * t0.abs().max(t1.abs()).max(1.0);
        if !(t >= t0 - slack && t <= t1 + slack) {
            return Err(Error::Domain(format!(
                "time {t} outside segment range [{t0}, {t1}]"
            )));
        }
        if t <= t0 {
            return Ok(0.0);
        }
        if t >= t1 {
            return Ok(1.0);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if self.timing.eval(mid)[0] < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn kinematics(&self, xi: f64) -> Result<Kinematics> {
        let r1 = self.shape.derivative_at(1, xi)?;
        let h1 = self.timing.derivative_at(1, xi)?[0];
        if !(h1 > 0.0) {
            return Err(Error::Domain(format!(
                "timing derivative {h1} is not positive at xi = {xi}; segment is corrupted"
            )));
        }
        let (r2, h2) = if self.degree() >= 2 {
            (self.shape.derivative_at(2, xi)?, self.timing.derivative_at(2, xi)?[0])
        } else {
            ([0.0; 2], 0.0)
        };
        let velocity = [r1[0] / h1, r1[1] / h1];
        let h1_3 = h1 * h1 * h1;
        let acceleration = [
            (r2[0] * h1 - r1[0] * h2) / h1_3,
            (r2[1] * h1 - r1[1] * h2) / h1_3,
        ];
        Ok(Kinematics {
            t: self.timing.eval(xi)[0],
            position: self.shape.eval(xi),
            velocity,
            acceleration,
        })
    }
}
