//! Monte-Carlo configuration space integrals.
//!
//! An integral is described by a [`Domain`] (a product of sampled factors)
//! and a map into a product of unit spheres, given as the list of vectors
//! whose directions are the sphere coordinates. The integrand at a sample is
//! the pullback of the product of normalized volume forms, computed as one
//! determinant of a central-difference Jacobian in oriented orthonormal
//! frames, divided by the proposal density.
//!
//! Sampling is split into fixed-size chunks; chunk `c` of term `j` draws from
//! a ChaCha8 stream selected by `(j, c)`, and chunk statistics are merged in
//! chunk order, so results depend only on the seed and the sample count.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_traits::ToPrimitive;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::differential::delta_vec;
use crate::geometry::{clutching, householder, rotate, GeometryError, Immersion};
use crate::graph::{Graph, GraphVector, HalfEdgeOrder};

pub const FD_STEP: f64 = 1e-5;
const CHUNK: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntegratorError {
    #[error("points coincide")]
    CoincidentPoints,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("estimate {value} has stderr {stderr} above {threshold}")]
    NonConvergent { value: f64, stderr: f64, threshold: f64 },
    #[error("v3 = v4 lies on the diagonal")]
    OnDiagonal,
    #[error("(v3)_n (v4)_n = {0} is not positive")]
    OutsideA(f64),
    #[error("vector has norm {0}, expected 1")]
    NonUnitVector(f64),
    #[error("ambient dimension {0} is not supported here")]
    UnsupportedDimension(usize),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Monte-Carlo value with its standard error and provenance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub value: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
}

impl MCEstimate {
    pub fn within(&self, target: f64, abs_tol: f64, sigmas: f64) -> bool {
        (self.value - target).abs() <= abs_tol.max(sigmas * self.stderr)
    }
}

/// Unit vector `(x - y)/|x - y|`.
pub fn gauss(x: &[f64], y: &[f64]) -> Result<Vec<f64>, IntegratorError> {
    if x.len() != y.len() {
        return Err(IntegratorError::DimensionMismatch(format!("{} vs {}", x.len(), y.len())));
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let r = norm(&d);
    if r == 0.0 || !r.is_finite() {
        return Err(IntegratorError::CoincidentPoints);
    }
    Ok(d.into_iter().map(|v| v / r).collect())
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

/// Volume of the unit sphere `S^{m-1}` in `R^m`.
pub fn sphere_volume(m: usize) -> f64 {
    // |S^{m-1}| = 2 pi^{m/2} / Gamma(m/2), by the recursion |S^{m+1}| = 2 pi/m |S^{m-1}|
    let mut v = if m % 2 == 0 { 2.0 * PI } else { 2.0 };
    let mut k = if m % 2 == 0 { 2 } else { 1 };
    while k < m {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// Tangent frame at unit `w` in `R^m`, ordered so that `(w, f_1, ..)` is
/// positively oriented.
pub fn oriented_frame(w: &[f64]) -> Vec<Vec<f64>> {
    let m = w.len();
    // Householder reflection taking e_1 to w; its other columns span w-perp
    let mut v = w.to_vec();
    v[0] -= 1.0;
    let nv = norm(&v);
    let h = if nv < 1e-12 {
        DMatrix::identity(m, m)
    } else {
        householder(&v.iter().map(|x| x / nv).collect::<Vec<_>>())
    };
    let mut frame: Vec<Vec<f64>> = (1..m).map(|j| (0..m).map(|i| h[(i, j)]).collect()).collect();
    let mut full = DMatrix::zeros(m, m);
    for i in 0..m {
        full[(i, 0)] = w[i];
        for (j, f) in frame.iter().enumerate() {
            full[(i, j + 1)] = f[i];
        }
    }
    if m > 1 && full.determinant() < 0.0 {
        for x in frame[0].iter_mut() {
            *x = -*x;
        }
    }
    frame
}

/// Uniform point on the unit sphere of `R^m`.
pub fn uniform_sphere<R: Rng + ?Sized>(m: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..m).map(|_| standard_normal(rng)).collect();
        let r = norm(&v);
        if r > 1e-12 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    // Box-Muller; one value per call keeps the stream layout simple
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * PI * u2).cos()
}

/// Component of a one-dimensional proposal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Component1D {
    Uniform { lo: f64, hi: f64 },
    Cauchy { center: f64, scale: f64 },
}

/// Mixture proposal on `R`, optionally truncated to `[lo, hi]` (each
/// component is renormalized on the range).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture1D {
    pub components: Vec<(f64, Component1D)>,
    pub range: Option<(f64, f64)>,
}

impl Mixture1D {
    pub fn new(components: Vec<(f64, Component1D)>, range: Option<(f64, f64)>) -> Self {
        let total: f64 = components.iter().map(|c| c.0).sum();
        let components = components.into_iter().map(|(w, c)| (w / total, c)).collect();
        Mixture1D { components, range }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Mixture1D::new(vec![(1.0, Component1D::Uniform { lo, hi })], Some((lo, hi)))
    }

    fn cauchy_cdf(c: f64, s: f64, x: f64) -> f64 {
        0.5 + ((x - c) / s).atan() / PI
    }

    fn bounds(&self, comp: &Component1D) -> (f64, f64) {
        match *comp {
            Component1D::Uniform { lo, hi } => match self.range {
                Some((a, b)) => (lo.max(a), hi.min(b)),
                None => (lo, hi),
            },
            Component1D::Cauchy { .. } => self.range.unwrap_or((f64::NEG_INFINITY, f64::INFINITY)),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let mut pick: f64 = rng.gen();
        let mut comp = &self.components[self.components.len() - 1].1;
        for (w, c) in &self.components {
            if pick < *w {
                comp = c;
                break;
            }
            pick -= w;
        }
        let (a, b) = self.bounds(comp);
        let u: f64 = rng.gen();
        match *comp {
            Component1D::Uniform { .. } => a + (b - a) * u,
            Component1D::Cauchy { center, scale } => {
                let (fa, fb) = (Self::cauchy_cdf(center, scale, a), Self::cauchy_cdf(center, scale, b));
                let p = fa + (fb - fa) * u;
                let x = center + scale * (PI * (p - 0.5)).tan();
                x.clamp(a, b)
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        if let Some((a, b)) = self.range {
            if x < a || x > b {
                return 0.0;
            }
        }
        let mut q = 0.0;
        for (w, comp) in &self.components {
            let (a, b) = self.bounds(comp);
            if x < a || x > b {
                continue;
            }
            q += w * match *comp {
                Component1D::Uniform { .. } => 1.0 / (b - a),
                Component1D::Cauchy { center, scale } => {
                    let mass = Self::cauchy_cdf(center, scale, b) - Self::cauchy_cdf(center, scale, a);
                    let z = (x - center) / scale;
                    1.0 / (PI * scale * (1.0 + z * z)) / mass
                }
            };
        }
        q
    }
}

/// Proposal for a free point of `R^n`: the compactifying map
/// `y -> y/(1-|y|^2)` from the uniform unit ball, plus radial half-Cauchy
/// shells around anchor points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreeProposal {
    pub ball_weight: f64,
    /// fixed anchors: `(point, scale, weight)`
    pub fixed: Vec<(Vec<f64>, f64, f64)>,
    /// total weight shared by the anchors the integrand supplies per sample
    pub dynamic_weight: f64,
    pub dynamic_scale: f64,
}

impl FreeProposal {
    fn ball_density(n: usize, x: &[f64]) -> f64 {
        let big = norm(x);
        let vn = sphere_volume(n) / n as f64;
        if big == 0.0 {
            return 1.0 / vn;
        }
        let r = ((1.0 + 4.0 * big * big).sqrt() - 1.0) / (2.0 * big);
        let q = 1.0 - r * r;
        let jac = (1.0 + r * r) / (q * q) * (1.0 / q).powi(n as i32 - 1);
        1.0 / (vn * jac)
    }

    fn shell_density(n: usize, x: &[f64], a: &[f64], s: f64) -> f64 {
        let r = x.iter().zip(a).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        if r == 0.0 {
            return f64::INFINITY;
        }
        let pr = 2.0 / (PI * s * (1.0 + (r / s) * (r / s)));
        pr / (sphere_volume(n) * r.powi(n as i32 - 1))
    }

    fn weights(&self, dynamic: usize) -> (f64, Vec<f64>, f64) {
        let dyn_w = if dynamic > 0 { self.dynamic_weight } else { 0.0 };
        let total = self.ball_weight + self.fixed.iter().map(|f| f.2).sum::<f64>() + dyn_w;
        let each = if dynamic > 0 { dyn_w / total / dynamic as f64 } else { 0.0 };
        (self.ball_weight / total, self.fixed.iter().map(|f| f.2 / total).collect(), each)
    }

    pub fn sample(&self, n: usize, anchors: &[Vec<f64>], rng: &mut impl Rng) -> Vec<f64> {
        let (wb, wf, wd) = self.weights(anchors.len());
        let mut pick: f64 = rng.gen();
        let shell = |a: &[f64], s: f64, rng: &mut dyn rand::RngCore| {
            let u: f64 = rng.gen();
            let r = s * (PI * u / 2.0).tan();
            let dir = uniform_sphere(n, rng);
            a.iter().zip(&dir).map(|(p, d)| p + r * d).collect::<Vec<f64>>()
        };
        if pick < wb {
            let dir = uniform_sphere(n, rng);
            let r = rng.gen::<f64>().powf(1.0 / n as f64);
            let scale = r / (1.0 - r * r);
            return dir.into_iter().map(|d| d * scale).collect();
        }
        pick -= wb;
        for ((a, s, _), w) in self.fixed.iter().zip(&wf) {
            if pick < *w {
                return shell(a, *s, rng);
            }
            pick -= w;
        }
        let idx = ((pick / wd) as usize).min(anchors.len().saturating_sub(1));
        if anchors.is_empty() {
            return shell(&self.fixed[self.fixed.len() - 1].0, self.fixed[self.fixed.len() - 1].1, rng);
        }
        shell(&anchors[idx], self.dynamic_scale, rng)
    }

    pub fn density(&self, n: usize, x: &[f64], anchors: &[Vec<f64>]) -> f64 {
        let (wb, wf, wd) = self.weights(anchors.len());
        let mut q = wb * Self::ball_density(n, x);
        for ((a, s, _), w) in self.fixed.iter().zip(&wf) {
            q += w * Self::shell_density(n, x, a, *s);
        }
        for a in anchors {
            q += wd * Self::shell_density(n, x, a, self.dynamic_scale);
        }
        q
    }
}

/// One factor of a sampled domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    /// a real parameter
    Scalar(Mixture1D),
    /// the unit sphere of `R^m`, sampled uniformly
    Sphere(usize),
    /// `k` ordered reals, `t_1 <= .. <= t_k`, drawn i.i.d. and sorted
    Ordered(usize, Mixture1D),
    /// a point of `R^n`
    Free(usize, FreeProposal),
}

impl Factor {
    pub fn dim(&self) -> usize {
        match self {
            Factor::Scalar(_) => 1,
            Factor::Sphere(m) => m - 1,
            Factor::Ordered(k, _) => *k,
            Factor::Free(n, _) => *n,
        }
    }
}

/// A map from a product domain into `(S^{n-1})^e`.
pub trait SphereMap: Sync {
    /// Target spheres live in `R^n`.
    fn n(&self) -> usize;
    fn factors(&self) -> &[Factor];
    /// Pushes the `e` vectors whose directions are the map's value; returns
    /// false when a direction is undefined.
    fn directions(&self, values: &[Vec<f64>], out: &mut Vec<Vec<f64>>) -> bool;
    /// Anchor points for the proposal of free factor `factor`, computed from
    /// the factors before it.
    fn anchors(&self, _values: &[Vec<f64>], _factor: usize) -> Vec<Vec<f64>> {
        Vec::new()
    }
}

fn domain_dim(factors: &[Factor]) -> usize {
    factors.iter().map(Factor::dim).sum()
}

fn unit_directions(raw: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    raw.iter()
        .map(|v| {
            let r = norm(v);
            (r > 0.0 && r.is_finite()).then(|| v.iter().map(|x| x / r).collect())
        })
        .collect()
}

/// Pullback of the normalized volume form at `values`, in the oriented
/// coordinate frame of the domain.
pub fn pullback_density<M: SphereMap + ?Sized>(map: &M, values: &[Vec<f64>]) -> Option<f64> {
    let n = map.n();
    let factors = map.factors();
    let d = domain_dim(factors);
    let mut raw = Vec::new();
    if !map.directions(values, &mut raw) {
        return None;
    }
    let e = raw.len();
    if e * (n - 1) != d {
        return None;
    }
    let base = unit_directions(&raw)?;
    let frames: Vec<Vec<Vec<f64>>> = base.iter().map(|w| oriented_frame(w)).collect();
    let mut jac = DMatrix::<f64>::zeros(d, d);
    let mut col = 0;
    let mut buf = Vec::new();
    let mut perturbed = values.to_vec();
    for (fi, factor) in factors.iter().enumerate() {
        let tangents: Vec<Vec<f64>> = match factor {
            Factor::Sphere(_) => oriented_frame(&values[fi]),
            _ => (0..factor.dim())
                .map(|k| {
                    let mut v = vec![0.0; factor.dim()];
                    v[k] = 1.0;
                    v
                })
                .collect(),
        };
        for tan in tangents {
            let mut dirs = [Vec::new(), Vec::new()];
            for (slot, sign) in [1.0, -1.0].iter().enumerate() {
                let moved: Vec<f64> = values[fi].iter().zip(&tan).map(|(x, t)| x + sign * FD_STEP * t).collect();
                perturbed[fi] = match factor {
                    Factor::Sphere(_) => {
                        let r = norm(&moved);
                        moved.into_iter().map(|x| x / r).collect()
                    }
                    _ => moved,
                };
                buf.clear();
                if !map.directions(&perturbed, &mut buf) {
                    return None;
                }
                dirs[slot] = unit_directions(&buf)?.concat();
            }
            perturbed[fi] = values[fi].clone();
            for (k, frame) in frames.iter().enumerate() {
                for (a, f) in frame.iter().enumerate() {
                    let mut s = 0.0;
                    for i in 0..n {
                        s += f[i] * (dirs[0][k * n + i] - dirs[1][k * n + i]);
                    }
                    jac[(k * (n - 1) + a, col)] = s / (2.0 * FD_STEP);
                }
            }
            col += 1;
        }
    }
    let vol = sphere_volume(n);
    Some(jac.determinant() / vol.powi(e as i32))
}

/// Draws one point of the domain and returns it with its proposal density.
pub fn sample_domain<M: SphereMap + ?Sized>(map: &M, rng: &mut impl Rng) -> (Vec<Vec<f64>>, f64) {
    let mut values: Vec<Vec<f64>> = Vec::new();
    let mut q = 1.0;
    for (fi, factor) in map.factors().iter().enumerate() {
        let v = match factor {
            Factor::Scalar(mix) => {
                let t = mix.sample(rng);
                q *= mix.density(t);
                vec![t]
            }
            Factor::Sphere(m) => {
                q /= sphere_volume(*m);
                uniform_sphere(*m, rng)
            }
            Factor::Ordered(k, mix) => {
                let mut ts: Vec<f64> = (0..*k).map(|_| mix.sample(rng)).collect();
                ts.sort_by(f64::total_cmp);
                let mut fact = 1.0;
                for (i, t) in ts.iter().enumerate() {
                    fact *= (i + 1) as f64;
                    q *= mix.density(*t);
                }
                q *= fact;
                ts
            }
            Factor::Free(n, prop) => {
                let anchors = map.anchors(&values, fi);
                let x = prop.sample(*n, &anchors, rng);
                q *= prop.density(*n, &x, &anchors);
                x
            }
        };
        values.push(v);
    }
    (values, q)
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.count == 0 {
            return other;
        }
        if other.count == 0 {
            return self;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        Moments {
            count: n,
            mean: self.mean + d * other.count as f64 / n as f64,
            m2: self.m2 + other.m2 + d * d * self.count as f64 * other.count as f64 / n as f64,
        }
    }
}

/// Runs `draw` for `samples` samples split into chunks with independent
/// ChaCha8 streams; `family` separates unrelated estimates with one seed.
pub fn monte_carlo<F>(samples: u64, seed: u64, family: u64, draw: F) -> MCEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((family << 40) | c);
            let count = CHUNK.min(samples - c * CHUNK);
            let mut m = Moments::default();
            for _ in 0..count {
                m.push(draw(&mut rng));
            }
            m
        })
        .collect();
    let total = parts.into_iter().fold(Moments::default(), Moments::merge);
    let stderr = if total.count > 1 { (total.m2 / (total.count - 1) as f64 / total.count as f64).sqrt() } else { f64::INFINITY };
    MCEstimate { value: total.mean, stderr, samples, seed }
}

/// Integral of the pullback over the whole domain.
pub fn integrate<M: SphereMap + ?Sized>(map: &M, samples: u64, seed: u64, family: u64) -> MCEstimate {
    monte_carlo(samples, seed, family, |rng| {
        let (values, q) = sample_domain(map, rng);
        if q == 0.0 || !q.is_finite() {
            return 0.0;
        }
        match pullback_density(map, &values) {
            Some(v) if v.is_finite() => v / q,
            _ => 0.0,
        }
    })
}

/// Gauss map of two parametrized cycles: `phi(a, b) = gauss(A(a), B(b))`.
pub struct LinkingMap<A, B> {
    n: usize,
    factors: Vec<Factor>,
    split: usize,
    a: A,
    b: B,
}

impl<A, B> SphereMap for LinkingMap<A, B>
where
    A: Fn(&[Vec<f64>]) -> Vec<f64> + Sync,
    B: Fn(&[Vec<f64>]) -> Vec<f64> + Sync,
{
    fn n(&self) -> usize {
        self.n
    }

    fn factors(&self) -> &[Factor] {
        &self.factors
    }

    fn directions(&self, values: &[Vec<f64>], out: &mut Vec<Vec<f64>>) -> bool {
        let x = (self.a)(&values[..self.split]);
        let y = (self.b)(&values[self.split..]);
        out.push(x.iter().zip(&y).map(|(p, q)| p - q).collect());
        true
    }
}

/// Linking integral of the cycle `a` (parametrized by `a_factors`) with the
/// cycle `b`, with the normalized volume form of `S^{n-1}`.
pub fn linking<A, B>(
    n: usize,
    a_factors: Vec<Factor>,
    a: A,
    b_factors: Vec<Factor>,
    b: B,
    samples: u64,
    seed: u64,
) -> Result<MCEstimate, IntegratorError>
where
    A: Fn(&[Vec<f64>]) -> Vec<f64> + Sync,
    B: Fn(&[Vec<f64>]) -> Vec<f64> + Sync,
{
    let da = domain_dim(&a_factors);
    let db = domain_dim(&b_factors);
    if da + db != n - 1 {
        return Err(IntegratorError::DimensionMismatch(format!("cycle dimensions {da} + {db} != {}", n - 1)));
    }
    let split = a_factors.len();
    let mut factors = a_factors;
    factors.extend(b_factors);
    let map = LinkingMap { n, factors, split, a, b };
    Ok(integrate(&map, samples, seed, 0))
}

/// Named linking configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkPreset {
    /// two round circles in `R^3` forming a Hopf link
    Hopf,
    /// two far-apart round circles in `R^3`
    Unlinked,
    /// the sphere of resolutions at the first double point against the
    /// segment of the other strand through it
    S1VsI1,
    /// same for the second double point
    S2VsI2,
}

impl LinkPreset {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "hopf" => Some(LinkPreset::Hopf),
            "unlinked" => Some(LinkPreset::Unlinked),
            "s1-vs-i1" => Some(LinkPreset::S1VsI1),
            "s2-vs-i2" => Some(LinkPreset::S2VsI2),
            _ => None,
        }
    }
}

/// Circles used by the `Hopf` and `Unlinked` presets: `A(a)` is the unit
/// circle in the `x_1 x_2` plane, `B(b)` the unit circle in the `x_1 x_3`
/// plane centred at `(offset, 0, 0)`, traversed so that the Hopf pair links
/// positively.
pub fn circle_pair(offset: f64) -> (impl Fn(f64) -> [f64; 3] + Sync + Copy, impl Fn(f64) -> [f64; 3] + Sync + Copy) {
    let a = |s: f64| [s.cos(), s.sin(), 0.0];
    let b = move |s: f64| [offset + s.cos(), 0.0, s.sin()];
    (a, b)
}

/// Linking number estimate for a preset; `spec` is used by the resolution
/// presets.
pub fn linking_preset(preset: LinkPreset, imm: Option<&Immersion>, samples: u64, seed: u64) -> Result<MCEstimate, IntegratorError> {
    match preset {
        LinkPreset::Hopf | LinkPreset::Unlinked => {
            let (a, b) = circle_pair(if preset == LinkPreset::Hopf { 1.0 } else { 5.0 });
            let whole = || vec![Factor::Scalar(Mixture1D::uniform(0.0, 2.0 * PI))];
            linking(3, whole(), move |v| a(v[0][0]).to_vec(), whole(), move |v| b(v[0][0]).to_vec(), samples, seed)
        }
        LinkPreset::S1VsI1 | LinkPreset::S2VsI2 => {
            let imm = imm.ok_or_else(|| IntegratorError::DimensionMismatch("resolution presets need an immersion".into()))?;
            let n = imm.n();
            let i = if preset == LinkPreset::S1VsI1 { 0 } else { 1 };
            let spec = imm.spec();
            let (xi, eps) = (spec.xi[i], spec.eps[i]);
            let xj = spec.xi[i + 2];
            let narrow = eps * eps;
            let window = |c: f64, s: f64| {
                Mixture1D::new(
                    vec![(0.2, Component1D::Uniform { lo: c - eps, hi: c + eps }), (0.8, Component1D::Cauchy { center: c, scale: s })],
                    Some((c - eps, c + eps)),
                )
            };
            let a_factors = vec![Factor::Scalar(window(xi, narrow)), Factor::Sphere(n - 2)];
            let b_factors = vec![Factor::Scalar(window(xj, narrow / 4.0))];
            let imm_a = imm.clone();
            let imm_b = imm.clone();
            let filler = imm.embed_normal(&unit(n - 2, 0))?;
            linking(
                n,
                b_factors,
                move |v| imm_b.base(v[0][0]).0,
                a_factors,
                move |v| {
                    let u = imm_a.embed_normal(&v[1]).expect("sphere sample has n-2 coordinates");
                    let us: [&[f64]; 2] = if i == 0 { [&u, &filler] } else { [&filler, &u] };
                    imm_a.resolved(us, v[0][0]).0
                },
                samples,
                seed,
            )
        }
    }
}

fn unit(m: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; m];
    v[i] = 1.0;
    v
}

/// Deterministic trapezoid quadrature of the Gauss linking integral for two
/// closed curves given with derivatives, signed as the degree of
/// `(a, b) -> (A(a) - B(b)) / |A(a) - B(b)|` like [`linking`].
pub fn gauss_linking_quadrature(
    a: impl Fn(f64) -> ([f64; 3], [f64; 3]),
    b: impl Fn(f64) -> ([f64; 3], [f64; 3]),
    nodes: usize,
) -> f64 {
    let h = 2.0 * PI / nodes as f64;
    let mut total = 0.0;
    for i in 0..nodes {
        let (p, dp) = a(i as f64 * h);
        for j in 0..nodes {
            let (q, dq) = b(j as f64 * h);
            let d = [q[0] - p[0], q[1] - p[1], q[2] - p[2]];
            let cross = [dp[1] * dq[2] - dp[2] * dq[1], dp[2] * dq[0] - dp[0] * dq[2], dp[0] * dq[1] - dp[1] * dq[0]];
            let r = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
            total += (d[0] * cross[0] + d[1] * cross[1] + d[2] * cross[2]) / (r * r * r);
        }
    }
    total * h * h / (4.0 * PI)
}

/// The cycle a pairing integrates over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CycleKind {
    /// resolutions `alpha(V)(u1, u2)`, dimension `2(n-3)`
    Alpha,
    /// `e[s, u0] alpha(V)(u1, u2)`, dimension `3n-8`
    Lambda,
}

impl CycleKind {
    pub fn dim(&self, n: usize) -> usize {
        match self {
            CycleKind::Alpha => 2 * (n - 3),
            CycleKind::Lambda => 3 * n - 8,
        }
    }
}

/// Proposal settings for a pairing; scales are in the knot parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Strata {
    /// weight of the broad uniform component on `[-box_half, box_half]`
    pub broad_weight: f64,
    pub box_half: f64,
    /// weight of each Cauchy component centred at a double-point parameter
    pub window_weight: f64,
    pub window_scale: f64,
    pub free: FreeProposal,
}

impl Strata {
    pub fn for_immersion(imm: &Immersion) -> Self {
        let spec = imm.spec();
        let scale = spec.eps[0].min(spec.eps[1]).powi(2) / 8.0;
        let z: Vec<Vec<f64>> = (0..2).map(|i| imm.double_point(i)).collect();
        Strata {
            broad_weight: 0.04,
            box_half: 2.0,
            window_weight: 0.24,
            window_scale: scale,
            free: FreeProposal {
                ball_weight: 0.2,
                fixed: z.into_iter().map(|p| (p, 16.0 * scale, 0.1)).collect(),
                dynamic_weight: 0.6,
                dynamic_scale: 16.0 * scale,
            },
        }
    }

    fn interval_mixture(&self, imm: &Immersion) -> Mixture1D {
        let mut comps = vec![(self.broad_weight, Component1D::Uniform { lo: -self.box_half, hi: self.box_half })];
        for &c in &imm.spec().xi {
            comps.push((self.window_weight, Component1D::Cauchy { center: c, scale: self.window_scale }));
        }
        Mixture1D::new(comps, None)
    }
}

/// Configuration space integral map of one graph over a cycle.
struct GraphMap<'a> {
    imm: &'a Immersion,
    graph: &'a Graph,
    cycle: CycleKind,
    factors: Vec<Factor>,
    cycle_factors: usize,
}

impl GraphMap<'_> {
    fn knot(&self, values: &[Vec<f64>], t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.imm.n();
        let (rot, u1, u2) = match self.cycle {
            CycleKind::Alpha => (None, &values[0], &values[1]),
            CycleKind::Lambda => {
                let w = &values[0];
                let s = w[n - 2];
                let r = (1.0 - s * s).max(0.0).sqrt();
                let u0: Vec<f64> = if r > 0.0 { w[..n - 2].iter().map(|x| x / r).collect() } else { unit(n - 2, 0) };
                (Some(clutching(s, &u0)), &values[1], &values[2])
            }
        };
        let mut a = vec![0.0; n];
        let mut b = vec![0.0; n];
        a[..n - 2].copy_from_slice(u1);
        b[..n - 2].copy_from_slice(u2);
        let (x, dx) = self.imm.resolved([&a, &b], t);
        match rot {
            None => (x, dx),
            Some(r) => (rotate(&r, &x), rotate(&r, &dx)),
        }
    }

    fn points(&self, values: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let vi = self.graph.vi();
        let mut pts = Vec::new();
        let mut tangents = Vec::new();
        if vi > 0 {
            for &t in &values[self.cycle_factors] {
                let (x, dx) = self.knot(values, t);
                pts.push(x);
                tangents.push(dx);
            }
        }
        let first_free = self.cycle_factors + usize::from(vi > 0);
        for v in &values[first_free..] {
            pts.push(v.clone());
        }
        (pts, tangents)
    }
}

impl SphereMap for GraphMap<'_> {
    fn n(&self) -> usize {
        self.imm.n()
    }

    fn factors(&self) -> &[Factor] {
        &self.factors
    }

    fn directions(&self, values: &[Vec<f64>], out: &mut Vec<Vec<f64>>) -> bool {
        let (pts, tangents) = self.points(values);
        for &(a, b) in self.graph.edges() {
            let (p, q) = (&pts[a as usize - 1], &pts[b as usize - 1]);
            out.push(p.iter().zip(q).map(|(x, y)| x - y).collect());
        }
        for &(v, flag) in self.graph.loops() {
            let sign = if flag == HalfEdgeOrder::Plus { 1.0 } else { -1.0 };
            out.push(tangents[v as usize - 1].iter().map(|x| sign * x).collect());
        }
        true
    }

    fn anchors(&self, values: &[Vec<f64>], _factor: usize) -> Vec<Vec<f64>> {
        if self.graph.vi() == 0 {
            return Vec::new();
        }
        values[self.cycle_factors].iter().map(|&t| self.knot(values, t).0).collect()
    }
}

/// A pairing job: a cochain integrated over a cycle built from an immersion.
#[derive(Debug, Clone)]
pub struct PairingProblem {
    pub cochain: GraphVector,
    pub cycle: CycleKind,
    pub immersion: Immersion,
    pub samples: u64,
    pub seed: u64,
    pub strata: Strata,
    /// report non-convergence when the final stderr exceeds this
    pub max_stderr: Option<f64>,
}

impl PairingProblem {
    pub fn new(cochain: GraphVector, cycle: CycleKind, immersion: Immersion, samples: u64, seed: u64) -> Self {
        let strata = Strata::for_immersion(&immersion);
        PairingProblem { cochain, cycle, immersion, samples, seed, strata, max_stderr: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermEstimate {
    pub graph: String,
    pub coefficient: f64,
    pub estimate: MCEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingReport {
    pub estimate: MCEstimate,
    pub terms: Vec<TermEstimate>,
    pub strata: Strata,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl PairingReport {
    /// `Err(NonConvergent)` when the run did not meet its stderr threshold.
    pub fn check(&self, threshold: f64) -> Result<&Self, IntegratorError> {
        if self.estimate.stderr > threshold {
            return Err(IntegratorError::NonConvergent { value: self.estimate.value, stderr: self.estimate.stderr, threshold });
        }
        Ok(self)
    }
}

/// Checks `dim(cycle) + v_i + n v_f = (n-1) e` for every term.
pub fn check_dimensions(cochain: &GraphVector, cycle: CycleKind, n: usize) -> Result<(), IntegratorError> {
    for (g, _) in cochain.iter() {
        let lhs = cycle.dim(n) + g.vi() + n * g.vf();
        let rhs = (n - 1) * g.num_edges();
        if lhs != rhs {
            return Err(IntegratorError::DimensionMismatch(format!("{g}: cycle {} + vi + n vf = {lhs}, (n-1) e = {rhs}", cycle.dim(n))));
        }
    }
    Ok(())
}

/// Estimates the pairing of the cochain's configuration space integral with
/// the cycle. Terms are integrated independently with equal sample counts.
pub fn pairing(problem: &PairingProblem) -> Result<PairingReport, IntegratorError> {
    let n = problem.immersion.n();
    if n % 2 == 0 || n < 5 {
        return Err(IntegratorError::UnsupportedDimension(n));
    }
    check_dimensions(&problem.cochain, problem.cycle, n)?;
    let mut warnings = Vec::new();
    if !delta_vec(&problem.cochain).map(|d| d.is_zero()).unwrap_or(false) {
        warnings.push("cochain is not a cocycle; the value is chain-level, not class-level".to_string());
    }
    let mut terms = Vec::new();
    let (mut value, mut var) = (0.0, 0.0);
    for (idx, (g, c)) in problem.cochain.iter().enumerate() {
        let coefficient = c.to_f64().unwrap_or(f64::NAN);
        let mut factors = match problem.cycle {
            CycleKind::Alpha => vec![Factor::Sphere(n - 2), Factor::Sphere(n - 2)],
            CycleKind::Lambda => vec![Factor::Sphere(n - 1), Factor::Sphere(n - 2), Factor::Sphere(n - 2)],
        };
        let cycle_factors = factors.len();
        if g.vi() > 0 {
            factors.push(Factor::Ordered(g.vi() as usize, problem.strata.interval_mixture(&problem.immersion)));
        }
        for _ in 0..g.vf() {
            factors.push(Factor::Free(n, problem.strata.free.clone()));
        }
        let map = GraphMap { imm: &problem.immersion, graph: g, cycle: problem.cycle, factors, cycle_factors };
        let est = integrate(&map, problem.samples, problem.seed, idx as u64 + 1);
        value += coefficient * est.value;
        var += (coefficient * est.stderr).powi(2);
        terms.push(TermEstimate { graph: g.to_string(), coefficient, estimate: est });
    }
    let estimate = MCEstimate { value, stderr: var.sqrt(), samples: problem.samples, seed: problem.seed };
    let converged = problem.max_stderr.map_or(true, |m| estimate.stderr <= m);
    if !converged {
        warnings.push(format!("stderr {} above threshold", estimate.stderr));
    }
    Ok(PairingReport { estimate, terms, strata: problem.strata.clone(), converged, warnings })
}

/// A point of `N = Sigma S^{n-3} x S^{n-2} x Conf_0(R, 2)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preimage {
    pub s: f64,
    pub u: Vec<f64>,
    /// on the unit sphere of the hyperplane `x_{n-1} = 0`
    pub p1: Vec<f64>,
    /// `x_{n-1}` coordinates of `P_3` and `P_4`, with `c4 < c3`
    pub c3: f64,
    pub c4: f64,
    pub residual: f64,
    /// sign of the Jacobian determinant of `F` in oriented charts
    pub jacobian_sign: i8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringReport {
    pub preimages: Vec<Preimage>,
    pub signs_agree: bool,
}

/// `F([s,u], P1, (P4, P3)) = (e[s,u](P1-P3)/|..|, e[s,u](P1-P4)/|..|)`
/// with `[s,u]` given by its suspension point `w` in `S^{n-2}`.
fn covering_map(w: &[f64], p1: &[f64], c3: f64, c4: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = p1.len();
    let mut r = householder(w);
    for j in 0..n - 1 {
        r[(n - 2, j)] = -r[(n - 2, j)];
    }
    let image = |c: f64| {
        let mut d = p1.to_vec();
        d[n - 2] -= c;
        let m = norm(&d);
        (m > 0.0).then(|| rotate(&r, &d).into_iter().map(|x| x / m).collect::<Vec<f64>>())
    };
    Some((image(c3)?, image(c4)?))
}

/// Inverts the map of the rotated-sphere computation at `(v3, v4)`: every
/// solution found by the constructive argument, with residuals and local
/// degree signs.
pub fn covering_check(v3: &[f64], v4: &[f64], n: usize) -> Result<CoveringReport, IntegratorError> {
    if n < 4 || v3.len() != n || v4.len() != n {
        return Err(IntegratorError::DimensionMismatch(format!("expected vectors of length {n}")));
    }
    for v in [v3, v4] {
        let m = norm(v);
        if (m - 1.0).abs() > 1e-9 {
            return Err(IntegratorError::NonUnitVector(m));
        }
    }
    if v3.iter().zip(v4).all(|(a, b)| (a - b).abs() < 1e-12) {
        return Err(IntegratorError::OnDiagonal);
    }
    let prod = v3[n - 1] * v4[n - 1];
    if prod <= 0.0 {
        return Err(IntegratorError::OutsideA(prod));
    }
    // the line H(v3, v4) cap {x_n = 0}
    let d: Vec<f64> = v3.iter().zip(v4).map(|(a, b)| v4[n - 1] * a - v3[n - 1] * b).collect();
    let dn = norm(&d);
    let d: Vec<f64> = d.iter().map(|x| x / dn).collect();
    // unit vector of H orthogonal to d, with n-th coordinate of the sign of (v3)_n
    let proj = dot(v3, &d);
    let mut q: Vec<f64> = v3.iter().zip(&d).map(|(a, b)| a - proj * b).collect();
    let qn = norm(&q);
    q.iter_mut().for_each(|x| *x /= qn);
    if q[n - 1].signum() != v3[n - 1].signum() {
        q.iter_mut().for_each(|x| *x = -*x);
    }
    let mut preimages = Vec::new();
    for sigma in [1.0, -1.0] {
        // e[s,u] e_{n-1} = sigma d: 2 s^2 - 1 = sigma d_{n-1}
        let s2 = ((1.0 + sigma * d[n - 2]) / 2.0).clamp(0.0, 1.0);
        for ssign in [1.0, -1.0] {
            let s = ssign * s2.sqrt();
            let c = 2.0 * s * (1.0 - s * s).max(0.0).sqrt();
            if c.abs() < 1e-14 {
                continue;
            }
            let u: Vec<f64> = d[..n - 2].iter().map(|x| -sigma * x / c).collect();
            let mut w: Vec<f64> = u.iter().map(|x| x * (1.0 - s * s).sqrt()).collect();
            w.push(s);
            let mut r = householder(&w);
            for j in 0..n - 1 {
                r[(n - 2, j)] = -r[(n - 2, j)];
            }
            let rt = r.transpose();
            let p1 = rotate(&rt, &q);
            let coord = |v: &[f64]| {
                let lam = q[n - 1] / v[n - 1];
                let pt: Vec<f64> = q.iter().zip(v).map(|(a, b)| a - lam * b).collect();
                rotate(&rt, &pt)[n - 2]
            };
            let (c3, c4) = (coord(v3), coord(v4));
            if !(c4 < c3) {
                continue;
            }
            let Some((f3, f4)) = covering_map(&w, &p1, c3, c4) else { continue };
            let residual = f3.iter().zip(v3).chain(f4.iter().zip(v4)).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            if residual > 1e-8 {
                continue;
            }
            let jacobian_sign = covering_jacobian_sign(&w, &p1, c3, c4);
            preimages.push(Preimage { s, u, p1, c3, c4, residual, jacobian_sign });
        }
    }
    let signs_agree = preimages.windows(2).all(|p| p[0].jacobian_sign == p[1].jacobian_sign);
    Ok(CoveringReport { preimages, signs_agree })
}

/// Sign of `det dF` with `N` oriented by outward frames on `S^{n-2}` (for
/// `[s,u]` via `w`) and on `M` (inside `{x_{n-1} = 0}`), then `(c4, c3)`;
/// `(S^{n-1})^2` by outward frames.
fn covering_jacobian_sign(w: &[f64], p1: &[f64], c3: f64, c4: f64) -> i8 {
    let n = p1.len();
    let (f3, f4) = covering_map(w, p1, c3, c4).expect("regular point");
    let frames = [oriented_frame(&f3), oriented_frame(&f4)];
    // M lives in the coordinates other than x_{n-1}
    let pm: Vec<f64> = p1.iter().enumerate().filter(|(i, _)| *i != n - 2).map(|(_, x)| *x).collect();
    let lift = |v: &[f64]| {
        let mut out = v.to_vec();
        out.insert(n - 2, 0.0);
        out
    };
    let wf = oriented_frame(w);
    let mf: Vec<Vec<f64>> = oriented_frame(&pm).iter().map(|f| lift(f)).collect();
    let h = FD_STEP;
    let d = 2 * (n - 1);
    let mut jac = DMatrix::<f64>::zeros(d, d);
    let eval = |w: &[f64], p: &[f64], c3: f64, c4: f64| covering_map(w, p, c3, c4).expect("regular point");
    let normed = |v: Vec<f64>| {
        let m = norm(&v);
        v.into_iter().map(|x| x / m).collect::<Vec<f64>>()
    };
    let mut cols: Vec<((Vec<f64>, Vec<f64>), (Vec<f64>, Vec<f64>))> = Vec::new();
    for f in &wf {
        let wp = normed(w.iter().zip(f).map(|(a, b)| a + h * b).collect());
        let wm = normed(w.iter().zip(f).map(|(a, b)| a - h * b).collect());
        cols.push((eval(&wp, p1, c3, c4), eval(&wm, p1, c3, c4)));
    }
    for f in &mf {
        let pp = normed(p1.iter().zip(f).map(|(a, b)| a + h * b).collect());
        let pm = normed(p1.iter().zip(f).map(|(a, b)| a - h * b).collect());
        cols.push((eval(w, &pp, c3, c4), eval(w, &pm, c3, c4)));
    }
    cols.push((eval(w, p1, c3, c4 + h), eval(w, p1, c3, c4 - h)));
    cols.push((eval(w, p1, c3 + h, c4), eval(w, p1, c3 - h, c4)));
    for (j, ((a3, a4), (b3, b4))) in cols.iter().enumerate() {
        for (k, (pa, pb)) in [(a3, b3), (a4, b4)].into_iter().enumerate() {
            for (r, f) in frames[k].iter().enumerate() {
                let diff: f64 = (0..n).map(|i| f[i] * (pa[i] - pb[i])).sum();
                jac[(k * (n - 1) + r, j)] = diff / (2.0 * h);
            }
        }
    }
    let det = jac.determinant();
    if det > 0.0 {
        1
    } else if det < 0.0 {
        -1
    } else {
        0
    }
}

/// `count` random targets in `Int A \ Delta`.
pub fn random_targets(n: usize, count: usize, seed: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let a = uniform_sphere(n, &mut rng);
        let mut b = uniform_sphere(n, &mut rng);
        if a[n - 1].abs() < 1e-3 || b[n - 1].abs() < 1e-3 {
            continue;
        }
        if a[n - 1] * b[n - 1] < 0.0 {
            b[n - 1] = -b[n - 1];
        }
        out.push((a, b));
    }
    out
}
