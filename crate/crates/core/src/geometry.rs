//! Long knots in `R^n`: the resolved double-point immersion, the clutching
//! frame, the rotated family and the little 2-balls action on framed knots.
//!
//! Points are plain `Vec<f64>` of length `n`; rotations in `SO(n-1)` act on
//! the first `n-1` coordinates and fix the `x_n` axis.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("vector has norm {0}, expected 1")]
    NonUnitVector(f64),
    #[error("resolution vector is not perpendicular to the crossing tangents (dot {0:e})")]
    NonPerpendicular(f64),
    #[error("expected a vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid immersion spec: {0}")]
    InvalidSpec(String),
    #[error("little balls {0} and {1} overlap")]
    OverlappingBalls(usize, usize),
    #[error("little ball {0} does not fit in the unit disk")]
    BallOutside(usize),
    #[error("expected {balls} knots for {balls} balls, got {knots}")]
    ArityMismatch { balls: usize, knots: usize },
}

const UNIT_TOL: f64 = 1e-12;

/// `exp(1 - 1/(1-x^2))` on `|x| < 1`, zero outside, with its derivative.
pub fn smooth_bump(x: f64) -> (f64, f64) {
    if x.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let q = 1.0 - x * x;
    let v = (1.0 - 1.0 / q).exp();
    (v, v * (-2.0 * x / (q * q)))
}

/// Bump of height `height` on `(center - half_width, center + half_width)`
/// in the `x_1` direction, used to lift a strand over another.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lift {
    pub center: f64,
    pub half_width: f64,
    pub height: f64,
}

/// Base curve `t -> (L(t), rho(t) sin th(t), t - rho(t) cos th(t))` in the
/// coordinates `(x_1, x_{n-1}, x_n)`, where `rho = E(t) (alpha + beta t^2)`
/// with `E` the unit smooth bump, `th = theta0 + omega t`, and `L` a sum of
/// lifts. It equals the `x_n` axis for `|t| >= 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmCurve {
    pub alpha: f64,
    pub beta: f64,
    pub theta0: f64,
    pub omega: f64,
    #[serde(default)]
    pub lifts: Vec<Lift>,
}

impl ArmCurve {
    /// Arm curve whose double points sit at `xi`, which must satisfy
    /// `xi3 - xi1 = xi4 - xi2`, with `rho` symmetric.
    pub fn figure8(xi: [f64; 4]) -> Result<Self, GeometryError> {
        let period = xi[2] - xi[0];
        if (xi[3] - xi[1] - period).abs() > 1e-12 || xi.iter().any(|x| x.abs() >= 1.0) {
            return Err(GeometryError::InvalidSpec("figure8-default needs xi3 - xi1 = xi4 - xi2 inside (-1, 1)".into()));
        }
        if (xi[0] + xi[3]).abs() > 1e-12 || (xi[1] + xi[2]).abs() > 1e-12 {
            return Err(GeometryError::InvalidSpec("figure8-default needs xi symmetric about 0".into()));
        }
        let alpha = 0.1;
        // the arm points up at xi1, xi3 and down at xi2, xi4, so both double
        // points reduce to rho(xi4) - rho(xi3) = period for even rho
        let e4 = smooth_bump(xi[3]).0;
        let e3 = smooth_bump(xi[2]).0;
        let beta = (period - alpha * (e4 - e3)) / (e4 * xi[3] * xi[3] - e3 * xi[2] * xi[2]);
        let omega = 2.0 * PI / period;
        let theta0 = PI - omega * xi[0];
        let lifts = vec![Lift { center: 0.42, half_width: 0.12, height: 0.4 }, Lift { center: 0.82, half_width: 0.16, height: 0.4 }];
        Ok(ArmCurve { alpha, beta, theta0, omega, lifts })
    }

    /// `((x_1, x_{n-1}, x_n), derivative)` at `t`.
    pub fn eval(&self, t: f64) -> ([f64; 3], [f64; 3]) {
        let (e, de) = smooth_bump(t);
        let poly = self.alpha + self.beta * t * t;
        let rho = e * poly;
        let drho = de * poly + e * 2.0 * self.beta * t;
        let th = self.theta0 + self.omega * t;
        let (s, c) = th.sin_cos();
        let mut lift = 0.0;
        let mut dlift = 0.0;
        for l in &self.lifts {
            let (b, db) = smooth_bump((t - l.center) / l.half_width);
            lift += l.height * b;
            dlift += l.height * db / l.half_width;
        }
        let p = [lift, rho * s, t - rho * c];
        let d = [dlift, drho * s + rho * c * self.omega, 1.0 - drho * c + rho * s * self.omega];
        (p, d)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveSpec {
    Named(String),
    Arm(ArmCurve),
}

/// How `delta` enters the displacement `delta * exp(1/((t-xi)^2 - eps^2))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BumpScale {
    /// `delta` is the prefactor, so the peak displacement is
    /// `delta * exp(-1/eps^2)`.
    Literal,
    /// `delta` is the peak displacement; the prefactor is
    /// `delta * exp(1/eps^2)`.
    #[default]
    Peak,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImmersionSpec {
    pub xi: [f64; 4],
    pub eps: [f64; 2],
    pub delta: [f64; 2],
    pub n: usize,
    pub curve: CurveSpec,
    #[serde(default)]
    pub bump: BumpScale,
}

impl Default for ImmersionSpec {
    fn default() -> Self {
        let eps = 0.05;
        ImmersionSpec {
            xi: [-0.6, -0.2, 0.2, 0.6],
            eps: [eps, eps],
            delta: [eps * eps, eps * eps],
            n: 5,
            curve: CurveSpec::Named("figure8-default".into()),
            bump: BumpScale::Peak,
        }
    }
}

impl ImmersionSpec {
    pub fn with_n(mut self, n: usize) -> Self {
        self.n = n;
        self
    }

    pub fn with_eps(mut self, eps: [f64; 2]) -> Self {
        self.eps = eps;
        self.delta = [eps[0] * eps[0], eps[1] * eps[1]];
        self
    }

    pub fn from_json(text: &str) -> Result<Self, GeometryError> {
        serde_json::from_str(text).map_err(|e| GeometryError::InvalidSpec(e.to_string()))
    }

    pub fn build(&self) -> Result<Immersion, GeometryError> {
        Immersion::new(self.clone())
    }
}

/// A validated immersion with two transversal double points.
#[derive(Debug, Clone)]
pub struct Immersion {
    spec: ImmersionSpec,
    curve: ArmCurve,
}

impl Immersion {
    pub fn new(spec: ImmersionSpec) -> Result<Self, GeometryError> {
        if spec.n < 3 {
            return Err(GeometryError::InvalidSpec(format!("n = {} is below 3", spec.n)));
        }
        let xi = spec.xi;
        if !(xi[0] < xi[1] && xi[1] < xi[2] && xi[2] < xi[3]) {
            return Err(GeometryError::InvalidSpec("xi must be increasing".into()));
        }
        if spec.eps.iter().chain(&spec.delta).any(|v| !(*v > 0.0)) {
            return Err(GeometryError::InvalidSpec("eps and delta must be positive".into()));
        }
        if xi[0] + spec.eps[0] >= xi[1] - spec.eps[1] {
            return Err(GeometryError::InvalidSpec("resolution windows overlap".into()));
        }
        let curve = match &spec.curve {
            CurveSpec::Named(name) if name == "figure8-default" => ArmCurve::figure8(xi)?,
            CurveSpec::Named(name) => return Err(GeometryError::InvalidSpec(format!("unknown curve `{name}`"))),
            CurveSpec::Arm(a) => a.clone(),
        };
        let imm = Immersion { spec, curve };
        for i in 0..2 {
            let (p, dp) = imm.curve.eval(xi[i]);
            let (q, dq) = imm.curve.eval(xi[i + 2]);
            let gap = (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>().sqrt();
            if gap > 1e-9 {
                return Err(GeometryError::InvalidSpec(format!("f(xi{}) and f(xi{}) differ by {gap:e}", i + 1, i + 3)));
            }
            if p[0] != 0.0 || dp[0] != 0.0 || dq[0] != 0.0 {
                return Err(GeometryError::InvalidSpec("curve must be planar at the double points".into()));
            }
            let cross = dp[1] * dq[2] - dp[2] * dq[1];
            let norm = (dp[1].hypot(dp[2])) * (dq[1].hypot(dq[2]));
            if cross.abs() < 1e-6 * norm {
                return Err(GeometryError::InvalidSpec(format!("double point {} is not transversal", i + 1)));
            }
        }
        Ok(imm)
    }

    pub fn spec(&self) -> &ImmersionSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.spec.n
    }

    pub fn curve(&self) -> &ArmCurve {
        &self.curve
    }

    /// Double point `z_i`, `i` in `{0, 1}`.
    pub fn double_point(&self, i: usize) -> Vec<f64> {
        self.base(self.spec.xi[i]).0
    }

    /// `(f(t), f'(t))` for the unresolved immersion.
    pub fn base(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.spec.n;
        let (p, d) = self.curve.eval(t);
        let mut x = vec![0.0; n];
        let mut dx = vec![0.0; n];
        x[0] = p[0];
        dx[0] = d[0];
        x[n - 2] = p[1];
        dx[n - 2] = d[1];
        x[n - 1] = p[2];
        dx[n - 1] = d[2];
        (x, dx)
    }

    /// Scalar displacement profile of window `i` and its derivative.
    pub fn displacement(&self, i: usize, t: f64) -> (f64, f64) {
        let (xi, eps, delta) = (self.spec.xi[i], self.spec.eps[i], self.spec.delta[i]);
        let s = t - xi;
        let q = s * s - eps * eps;
        if q >= 0.0 {
            return (0.0, 0.0);
        }
        let shift = match self.spec.bump {
            BumpScale::Literal => 0.0,
            BumpScale::Peak => 1.0 / (eps * eps),
        };
        let v = delta * (1.0 / q + shift).exp();
        (v, v * (-2.0 * s / (q * q)))
    }

    /// Embeds `u` in `R^{n-2}` as a vector of `R^n` normal to the curve plane.
    pub fn embed_normal(&self, u: &[f64]) -> Result<Vec<f64>, GeometryError> {
        let n = self.spec.n;
        if u.len() != n - 2 {
            return Err(GeometryError::DimensionMismatch { expected: n - 2, got: u.len() });
        }
        let mut v = vec![0.0; n];
        v[..n - 2].copy_from_slice(u);
        Ok(v)
    }

    fn check_normal(&self, i: usize, u: &[f64]) -> Result<(), GeometryError> {
        let n = self.spec.n;
        if u.len() != n {
            return Err(GeometryError::DimensionMismatch { expected: n, got: u.len() });
        }
        let norm = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > UNIT_TOL {
            return Err(GeometryError::NonUnitVector(norm));
        }
        for t in [self.spec.xi[i], self.spec.xi[i + 2]] {
            let d = self.base(t).1;
            let dn = d.iter().map(|x| x * x).sum::<f64>().sqrt();
            let dot = u.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>() / dn;
            if dot.abs() > UNIT_TOL {
                return Err(GeometryError::NonPerpendicular(dot));
            }
        }
        Ok(())
    }

    /// Point and tangent of the resolution `alpha(V)(u1, u2)` at `t`, for
    /// already validated `u1`, `u2` in `R^n`.
    pub fn resolved(&self, u: [&[f64]; 2], t: f64) -> (Vec<f64>, Vec<f64>) {
        let (mut x, mut dx) = self.base(t);
        for (i, ui) in u.iter().enumerate() {
            let (b, db) = self.displacement(i, t);
            if b != 0.0 || db != 0.0 {
                for k in 0..x.len() {
                    x[k] += b * ui[k];
                    dx[k] += db * ui[k];
                }
            }
        }
        (x, dx)
    }
}

/// A long knot `R -> R^n`, equal to the `x_n` axis for `|t| >= 1`.
#[derive(Clone)]
pub struct LongKnot {
    n: usize,
    f: Arc<dyn Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync>,
}

impl std::fmt::Debug for LongKnot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LongKnot").field("n", &self.n).finish_non_exhaustive()
    }
}

impl LongKnot {
    pub fn new(n: usize, f: impl Fn(f64) -> (Vec<f64>, Vec<f64>) + Send + Sync + 'static) -> Self {
        LongKnot { n, f: Arc::new(f) }
    }

    pub fn trivial(n: usize) -> Self {
        LongKnot::new(n, move |t| (axis_point(n, t), axis_point(n, 1.0)))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        (self.f)(t).0
    }

    pub fn deriv(&self, t: f64) -> Vec<f64> {
        (self.f)(t).1
    }

    pub fn eval_with_deriv(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        (self.f)(t)
    }
}

pub fn axis_point(n: usize, t: f64) -> Vec<f64> {
    let mut x = vec![0.0; n];
    x[n - 1] = t;
    x
}

/// The resolution `alpha(V)(u1, u2)` of the immersion; `u_i` are unit
/// vectors of `R^n` perpendicular to both tangents at the `i`-th double
/// point.
pub fn resolve(imm: &Immersion, u1: &[f64], u2: &[f64]) -> Result<LongKnot, GeometryError> {
    imm.check_normal(0, u1)?;
    imm.check_normal(1, u2)?;
    let imm = imm.clone();
    let (u1, u2) = (u1.to_vec(), u2.to_vec());
    Ok(LongKnot::new(imm.n(), move |t| imm.resolved([&u1, &u2], t)))
}

/// The suspension coordinate `(sqrt(1-s^2) u, s)` of `[s, u]`, clamped to the
/// poles for `|s| >= 1`.
pub fn suspension_point(s: f64, u: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; u.len() + 1];
    if s >= 1.0 {
        w[u.len()] = 1.0;
    } else if s <= -1.0 {
        w[u.len()] = -1.0;
    } else {
        let r = (1.0 - s * s).sqrt();
        for (wk, uk) in w.iter_mut().zip(u) {
            *wk = r * uk;
        }
        w[u.len()] = s;
    }
    w
}

/// Reflection `I - 2 w w^T` across the hyperplane orthogonal to unit `w`.
pub fn householder(w: &[f64]) -> DMatrix<f64> {
    let m = w.len();
    DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.0 } - 2.0 * w[i] * w[j])
}

/// The clutching map `e'[s, u] = H_{x_{n-1}} H_{[s,u]}` in `SO(n-1)`, for
/// `u` a unit vector of `R^{n-2}`.
pub fn clutching(s: f64, u: &[f64]) -> DMatrix<f64> {
    let m = u.len() + 1;
    if s.abs() >= 1.0 {
        return DMatrix::identity(m, m);
    }
    let mut h = householder(&suspension_point(s, u));
    // left multiplication by H_{x_{n-1}} negates the last row
    for j in 0..m {
        h[(m - 1, j)] = -h[(m - 1, j)];
    }
    h
}

/// Applies `r` in `SO(n-1)` to the first `n-1` coordinates of `x`.
pub fn rotate(r: &DMatrix<f64>, x: &[f64]) -> Vec<f64> {
    let m = r.nrows();
    let mut y = x.to_vec();
    for i in 0..m {
        y[i] = (0..m).map(|j| r[(i, j)] * x[j]).sum();
    }
    y
}

/// `Lambda'_tau([s, u0], u1, u2)(t)`: the resolution rotated about the
/// `x_n` axis by `e'[(2 - tau) s + (1 - tau) x_n, u0]`.
pub fn lambda(imm: &Immersion, s: f64, u0: &[f64], u1: &[f64], u2: &[f64], t: f64, tau: f64) -> Result<Vec<f64>, GeometryError> {
    let n = imm.n();
    if u0.len() != n - 2 {
        return Err(GeometryError::DimensionMismatch { expected: n - 2, got: u0.len() });
    }
    let norm = u0.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > UNIT_TOL {
        return Err(GeometryError::NonUnitVector(norm));
    }
    imm.check_normal(0, u1)?;
    imm.check_normal(1, u2)?;
    let v = imm.resolved([u1, u2], t).0;
    let arg = (2.0 - tau) * s + (1.0 - tau) * v[n - 1];
    Ok(rotate(&clutching(arg, u0), &v))
}

type CoreFn = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
type FrameFn = Arc<dyn Fn(f64) -> DMatrix<f64> + Send + Sync>;

/// A framed long knot in the reduced form `g(x, t) = (F(t) x + a(t), h(t))`
/// for `x` in `R^{n-1}`: the core curve is `(a(t), h(t))` and `F(t)` is the
/// frame in `SO(n-1)`. Both are trivial for `|t| >= 1`.
#[derive(Clone)]
pub struct FramedKnot {
    n: usize,
    core: CoreFn,
    frame: FrameFn,
}

impl std::fmt::Debug for FramedKnot {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FramedKnot").field("n", &self.n).finish_non_exhaustive()
    }
}

impl FramedKnot {
    pub fn new(
        n: usize,
        core: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static,
        frame: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        FramedKnot { n, core: Arc::new(core), frame: Arc::new(frame) }
    }

    pub fn trivial(n: usize) -> Self {
        FramedKnot::new(n, move |t| axis_point(n, t), move |_| DMatrix::identity(n - 1, n - 1))
    }

    /// A long knot with the trivial frame.
    pub fn from_knot(knot: &LongKnot) -> Self {
        let n = knot.n();
        let k = knot.clone();
        FramedKnot::new(n, move |t| k.eval(t), move |_| DMatrix::identity(n - 1, n - 1))
    }

    /// The straight axis carrying the frame loop `gamma`, i.e.
    /// `(x, t) -> (gamma(t) x, t)`.
    pub fn from_frame_loop(n: usize, gamma: impl Fn(f64) -> DMatrix<f64> + Send + Sync + 'static) -> Self {
        FramedKnot::new(n, move |t| axis_point(n, t), gamma)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn core(&self, t: f64) -> Vec<f64> {
        (self.core)(t)
    }

    pub fn frame(&self, t: f64) -> DMatrix<f64> {
        (self.frame)(t)
    }

    /// `g(x, t)` for `x` in `R^{n-1}`.
    pub fn apply(&self, x: &[f64], t: f64) -> Vec<f64> {
        let c = self.core(t);
        let f = self.frame(t);
        let m = self.n - 1;
        let mut y = c.clone();
        for i in 0..m {
            y[i] += (0..m).map(|j| f[(i, j)] * x[j]).sum::<f64>();
        }
        y
    }

    /// `self o other`.
    pub fn compose(&self, other: &FramedKnot) -> FramedKnot {
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        let n = self.n;
        FramedKnot::new(
            n,
            move |t| {
                let inner = b.core(t);
                let h = inner[n - 1];
                let mut y = rotate(&a.frame(h), &inner);
                let outer = a.core(h);
                for i in 0..n - 1 {
                    y[i] += outer[i];
                }
                y[n - 1] = outer[n - 1];
                y
            },
            move |t| {
                let h = b2.core(t)[n - 1];
                a2.frame(h) * b2.frame(t)
            },
        )
    }

    /// `mu_l(f) = (id x l~) o f o (id x l~^{-1})`.
    pub fn reparam(&self, l: LittleInterval) -> FramedKnot {
        let (f, g) = (self.clone(), self.clone());
        let n = self.n;
        FramedKnot::new(
            n,
            move |t| {
                let mut y = f.core(l.inverse(t));
                y[n - 1] = l.extend(y[n - 1]);
                y
            },
            move |t| g.frame(l.inverse(t)),
        )
    }

    /// Forgets the frame; the tangent is a central difference of the core.
    pub fn forget_frame(&self) -> LongKnot {
        let f = self.clone();
        LongKnot::new(self.n, move |t| {
            let h = 1e-6;
            let (p, q) = (f.core(t + h), f.core(t - h));
            (f.core(t), p.iter().zip(&q).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        })
    }
}

/// The little 1-ball `l(t) = a t + b`, extended to `R` with slope 1 outside
/// `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LittleInterval {
    pub a: f64,
    pub b: f64,
}

impl LittleInterval {
    pub const IDENTITY: LittleInterval = LittleInterval { a: 1.0, b: 0.0 };

    pub fn extend(&self, t: f64) -> f64 {
        if t >= 1.0 {
            t - 1.0 + self.a + self.b
        } else if t <= -1.0 {
            t + 1.0 - self.a + self.b
        } else {
            self.a * t + self.b
        }
    }

    pub fn inverse(&self, y: f64) -> f64 {
        let (lo, hi) = (self.b - self.a, self.b + self.a);
        if y >= hi {
            y - hi + 1.0
        } else if y <= lo {
            y - lo - 1.0
        } else {
            (y - self.b) / self.a
        }
    }

    /// `self o other`.
    pub fn compose(&self, other: &LittleInterval) -> LittleInterval {
        LittleInterval { a: self.a * other.a, b: self.a * other.b + self.b }
    }
}

/// A little 2-ball, stored by its image: `b(B^2)` is the disk of the given
/// radius about `center`, so `b(x) = radius * x + center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LittleBall {
    pub center: [f64; 2],
    pub radius: f64,
}

impl LittleBall {
    pub const IDENTITY: LittleBall = LittleBall { center: [0.0, 0.0], radius: 1.0 };

    pub fn fits(&self) -> bool {
        self.radius > 0.0 && self.center[0].hypot(self.center[1]) + self.radius <= 1.0 + 1e-12
    }

    /// The little 1-ball onto the first-coordinate projection of the image.
    pub fn interval(&self) -> LittleInterval {
        LittleInterval { a: self.radius, b: self.center[0] }
    }

    /// Lowest second coordinate of the image.
    pub fn t_b(&self) -> f64 {
        self.center[1] - self.radius
    }

    /// `self o inner`.
    pub fn compose(&self, inner: &LittleBall) -> LittleBall {
        LittleBall {
            center: [self.radius * inner.center[0] + self.center[0], self.radius * inner.center[1] + self.center[1]],
            radius: self.radius * inner.radius,
        }
    }

    fn overlaps(&self, other: &LittleBall) -> bool {
        let d = (self.center[0] - other.center[0]).hypot(self.center[1] - other.center[1]);
        d < self.radius + other.radius - 1e-12
    }
}

/// The action `kappa(k)`: reparametrize each knot into its ball's interval
/// and compose in order of increasing `t_b`.
pub fn operad_act(balls: &[LittleBall], knots: &[FramedKnot]) -> Result<FramedKnot, GeometryError> {
    if balls.len() != knots.len() || balls.is_empty() {
        return Err(GeometryError::ArityMismatch { balls: balls.len(), knots: knots.len() });
    }
    for (i, b) in balls.iter().enumerate() {
        if !b.fits() {
            return Err(GeometryError::BallOutside(i));
        }
        for (j, c) in balls.iter().enumerate().skip(i + 1) {
            if b.overlaps(c) {
                return Err(GeometryError::OverlappingBalls(i, j));
            }
        }
    }
    let mut order: Vec<usize> = (0..balls.len()).collect();
    order.sort_by(|&i, &j| balls[i].t_b().total_cmp(&balls[j].t_b()).then(i.cmp(&j)));
    let mut acc = knots[order[0]].reparam(balls[order[0]].interval());
    for &i in &order[1..] {
        acc = acc.compose(&knots[i].reparam(balls[i].interval()));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn imm() -> Immersion {
        ImmersionSpec::default().build().unwrap()
    }

    fn e(n: usize, i: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        v
    }

    #[test]
    fn default_double_points() {
        let imm = imm();
        for i in 0..2 {
            let a = imm.base(imm.spec().xi[i]).0;
            let b = imm.base(imm.spec().xi[i + 2]).0;
            for k in 0..5 {
                assert!((a[k] - b[k]).abs() < 1e-12);
            }
        }
        assert_ne!(imm.double_point(0), imm.double_point(1));
    }

    #[test]
    fn axis_outside_unit_interval() {
        let imm = imm();
        let k = resolve(&imm, &e(5, 0), &e(5, 1)).unwrap();
        for t in [-3.0, -1.0, 1.0, 1.7] {
            assert_eq!(k.eval(t), axis_point(5, t));
        }
    }

    #[test]
    fn displacement_scales() {
        let spec = ImmersionSpec { bump: BumpScale::Literal, ..Default::default() };
        let lit = spec.build().unwrap();
        let (d, _) = lit.displacement(0, -0.6);
        let expected = 0.05f64.powi(2) * (-1.0 / 0.05f64.powi(2)).exp();
        assert!((d - expected).abs() <= 1e-12 * expected);
        let (p, _) = imm().displacement(1, -0.2);
        assert!((p - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_normals() {
        let imm = imm();
        assert!(matches!(resolve(&imm, &[0.5, 0.0, 0.0, 0.0, 0.0], &e(5, 0)), Err(GeometryError::NonUnitVector(_))));
        assert!(matches!(resolve(&imm, &e(5, 4), &e(5, 0)), Err(GeometryError::NonPerpendicular(_))));
    }

    #[test]
    fn clutching_poles_and_equator() {
        let u = [0.0, 0.6, 0.8];
        assert_eq!(clutching(1.0, &u), DMatrix::identity(4, 4));
        assert_eq!(clutching(-1.0, &u), DMatrix::identity(4, 4));
        let r = clutching(0.0, &[1.0, 0.0, 0.0]);
        let expected = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-1.0, 1.0, 1.0, -1.0]));
        assert!((r - expected).abs().max() < 1e-15);
    }

    #[test]
    fn intervals() {
        let l = LittleInterval { a: 0.3, b: -0.2 };
        for t in [-2.5, -1.0, -0.3, 0.0, 0.9, 1.0, 4.0] {
            assert!((l.inverse(l.extend(t)) - t).abs() < 1e-14);
        }
        let m = LittleInterval { a: 0.5, b: 0.4 };
        let lm = l.compose(&m);
        for t in [-0.9, 0.0, 0.7] {
            assert!((lm.extend(t) - l.extend(m.extend(t))).abs() < 1e-14);
        }
    }

    #[test]
    fn overlapping_balls_rejected() {
        let a = LittleBall { center: [0.0, 0.0], radius: 0.5 };
        let b = LittleBall { center: [0.3, 0.0], radius: 0.3 };
        let f = FramedKnot::trivial(5);
        assert_eq!(operad_act(&[a, b], &[f.clone(), f]).unwrap_err(), GeometryError::OverlappingBalls(0, 1));
    }
}
