//! Lower bounds for the scalar curvature of `(T⊥L, h_{p,q})`.
//!
//! The fibre-radial part of the scalar curvature, after bounding the base
//! terms by constants, is the one-variable function
//! `Φ(t) = c₁ − c₂ t/(1+t)^p + (1+t)^{p−2}/(1+qt)² · P(t)` with a cubic `P`.
//! [`find_pq`] searches a fixed grid for `(p, q)` making `Φ > 0` on `t ≥ 0`
//! and returns an explicit certificate; [`scalar_bound_pipeline`] turns that
//! into `S̃ > D` on a submanifold and re-checks the inequality directly.

use rayon::prelude::*;

use crate::curvature::{abc_coeffs, scalar_curvature};
use crate::error::{GeomError, Result};
use crate::fd::FdConfig;
use crate::manifold::EmbeddedSubmanifold;
use crate::pq_metric::{omega_sqrtq, weight, NormalPoint, PQParams};
use crate::submanifold::BaseGeometry;

/// `Φ` for fixed constants, codimension and metric parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiSpec {
    pub c1: f64,
    pub c2: f64,
    pub dprime: usize,
    pub pq: PQParams,
    /// `[α₀, α₁, α₂, α₃]`, with `P(t) = α₀t³ + α₁t² + α₂t + α₃`.
    pub alpha: [f64; 4],
}

/// Coefficients of `P`.
pub fn phi_alphas(pq: &PQParams, dprime: usize) -> [f64; 4] {
    let (p, q) = (pq.p, pq.q);
    let dp = dprime as f64;
    [
        (dp - 2.0) * q * q,
        q * (dp * (1.0 + 2.0 * p + 2.0 * q - p * p) - 6.0 * p + 2.0 * p * p - 4.0 * q),
        2.0 * q * (p + dp) + q * (dp - 2.0) * (2.0 * p + q) + p * (dp - 2.0) * (2.0 - p),
        dp * (2.0 * p + q),
    ]
}

/// `α₁` in the sign pattern `−q(6p + 2p² − 4q + d'(1 + 2p + 2q − p²))`.
/// It does not reproduce the vertical scalar term; kept for comparison.
pub fn alpha1_display(pq: &PQParams, dprime: usize) -> f64 {
    let (p, q) = (pq.p, pq.q);
    let dp = dprime as f64;
    -q * (6.0 * p + 2.0 * p * p - 4.0 * q + dp * (1.0 + 2.0 * p + 2.0 * q - p * p))
}

impl PhiSpec {
    pub fn new(c1: f64, c2: f64, dprime: usize, pq: PQParams) -> Result<Self> {
        if dprime < 2 {
            return Err(GeomError::InvalidInput(format!(
                "codimension {dprime} < 2 has no radial estimate"
            )));
        }
        Ok(PhiSpec {
            c1,
            c2,
            dprime,
            pq,
            alpha: phi_alphas(&pq, dprime),
        })
    }

    pub fn poly(&self, t: f64) -> f64 {
        let [a0, a1, a2, a3] = self.alpha;
        ((a0 * t + a1) * t + a2) * t + a3
    }
}

/// `Φ(t)` from the polynomial form.
pub fn phi_eval(spec: &PhiSpec, t: f64) -> f64 {
    let (p, q) = (spec.pq.p, spec.pq.q);
    spec.c1 - spec.c2 * t / (1.0 + t).powf(p)
        + (1.0 + t).powf(p - 2.0) / (1.0 + q * t).powi(2) * spec.poly(t)
}

/// `Φ(t)` from the curvature coefficients `a, b` directly:
/// `c₁ − c₂tω^p + ω^{−p}ω_√q(2at + b(d' + (d'−2)qt))`.
pub fn phi_eval_direct(spec: &PhiSpec, t: f64) -> f64 {
    let pq = &spec.pq;
    let k = abc_coeffs(pq, t);
    let w = weight(pq, t);
    let dp = spec.dprime as f64;
    spec.c1 - spec.c2 * t * w
        + omega_sqrtq(t, pq.q) / w * (2.0 * k.a * t + k.b * (dp + (dp - 2.0) * pq.q * t))
}

/// Largest `t` covered by the sampled part of a certificate.
pub const T_MAX: f64 = 1e6;
/// Number of log-spaced grid points on `(0, T_MAX]`.
pub const GRID_POINTS: usize = 10_000;

/// How the region `t > T_MAX` was handled.
#[derive(Debug, Clone, PartialEq)]
pub struct TailRule {
    /// Exponent of the dominant power of `t` as `t → ∞`.
    pub exponent: f64,
    /// Its coefficient; the tail is accepted when this is positive.
    pub coefficient: f64,
    /// Minimum over the spot checks at `10⁷ … 10¹²`.
    pub spot_min: f64,
}

/// Evidence that `Φ > 0` on `t ≥ 0`: a sampled minimum with local
/// refinement on `[0, T_MAX]` plus the dominant-power sign beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivityCertificate {
    pub pq: PQParams,
    pub min_value: f64,
    pub argmin: f64,
    pub grid_points: usize,
    pub t_max: f64,
    pub tail: TailRule,
    pub positive: bool,
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn tail_rule(spec: &PhiSpec) -> (f64, f64) {
    let (p, q) = (spec.pq.p, spec.pq.q);
    let mut terms: Vec<(f64, f64)> = Vec::new();
    if spec.c1 != 0.0 {
        terms.push((0.0, spec.c1));
    }
    if spec.c2 != 0.0 {
        terms.push((1.0 - p, -spec.c2));
    }
    if let Some(deg) = (0..4).find(|&i| spec.alpha[i] != 0.0).map(|i| 3 - i) {
        let lead = spec.alpha[3 - deg];
        if q > 0.0 {
            terms.push((p - 4.0 + deg as f64, lead / (q * q)));
        } else {
            terms.push((p - 2.0 + deg as f64, lead));
        }
    }
    let Some(top) = terms.iter().map(|t| t.0).reduce(f64::max) else {
        return (0.0, 0.0);
    };
    let coeff = terms
        .iter()
        .filter(|t| (t.0 - top).abs() < 1e-12)
        .map(|t| t.1)
        .sum();
    (top, coeff)
}

/// Builds the positivity certificate for one `Φ`.
pub fn certify(spec: &PhiSpec) -> PositivityCertificate {
    let f = |t: f64| phi_eval(spec, t);
    let lmin = 1e-6f64.ln();
    let lmax = T_MAX.ln();
    let mut ts = Vec::with_capacity(GRID_POINTS + 1);
    ts.push(0.0);
    for i in 0..GRID_POINTS {
        ts.push((lmin + (lmax - lmin) * i as f64 / (GRID_POINTS - 1) as f64).exp());
    }
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    let mut best = (0.0, f64::INFINITY);
    for (i, &v) in vals.iter().enumerate() {
        if v.is_nan() {
            best = (ts[i], f64::NAN);
            break;
        }
        if v < best.1 {
            best = (ts[i], v);
        }
        let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
        let right = vals.get(i + 1).copied().unwrap_or(f64::INFINITY);
        if v <= left && v <= right && i > 0 && i + 1 < vals.len() {
            let (x, y) = golden_min(f, ts[i - 1], ts[i + 1]);
            if y < best.1 {
                best = (x, y);
            }
        }
    }
    let (exponent, coefficient) = tail_rule(spec);
    let spot_min = (7..=12)
        .map(|e| f(10f64.powi(e)))
        .fold(f64::INFINITY, f64::min);
    let positive = best.1 > 0.0 && coefficient > 0.0 && spot_min > 0.0;
    PositivityCertificate {
        pq: spec.pq,
        min_value: best.1,
        argmin: best.0,
        grid_points: ts.len(),
        t_max: T_MAX,
        tail: TailRule {
            exponent,
            coefficient,
            spot_min,
        },
        positive,
    }
}

/// The `(p, q)` cells searched, in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    pub p_values: Vec<f64>,
    pub q_values: Vec<f64>,
}

impl Default for SearchGrid {
    /// `p = 0, ¼, −¼, ½, −½, … , ±8` and `q ∈ {0} ∪ {2^k/16 : k = 0..10}`.
    fn default() -> Self {
        SearchGrid::new(8.0, 0.25, 64.0)
    }
}

impl SearchGrid {
    /// `p` alternates outward from 0 in steps of `p_step` up to `p_max`;
    /// `q` is 0 followed by doublings from `1/16` up to `q_max`.
    pub fn new(p_max: f64, p_step: f64, q_max: f64) -> Self {
        let mut p_values = vec![0.0];
        let n = (p_max / p_step).round() as i64;
        for i in 1..=n {
            p_values.push(i as f64 * p_step);
            p_values.push(-(i as f64) * p_step);
        }
        let mut q_values = vec![0.0];
        let mut q = 1.0 / 16.0;
        while q <= q_max * (1.0 + 1e-12) {
            q_values.push(q);
            q *= 2.0;
        }
        SearchGrid { p_values, q_values }
    }

    pub fn len(&self) -> usize {
        self.p_values.len() * self.q_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell `i = p_index · |q_values| + q_index`.
    pub fn cell(&self, i: usize) -> PQParams {
        let nq = self.q_values.len();
        PQParams {
            p: self.p_values[i / nq],
            q: self.q_values[i % nq],
        }
    }
}

/// Certificates for every cell, in cell order.
pub fn scan_cells(c1: f64, c2: f64, dprime: usize, grid: &SearchGrid) -> Result<Vec<PositivityCertificate>> {
    (0..grid.len())
        .into_par_iter()
        .map(|i| Ok(certify(&PhiSpec::new(c1, c2, dprime, grid.cell(i))?)))
        .collect()
}

/// First cell (in grid order) with a positive certificate.
pub fn find_pq_in(c1: f64, c2: f64, dprime: usize, grid: &SearchGrid) -> Result<PositivityCertificate> {
    if dprime < 2 {
        return Err(GeomError::InvalidInput(format!(
            "codimension {dprime} < 2 has no radial estimate"
        )));
    }
    (0..grid.len())
        .into_par_iter()
        .find_map_first(|i| {
            let spec = PhiSpec::new(c1, c2, dprime, grid.cell(i)).ok()?;
            let cert = certify(&spec);
            cert.positive.then_some(cert)
        })
        .ok_or_else(|| {
            GeomError::NotFound(format!(
                "no positive certificate among {} cells for c1={c1}, c2={c2}, d'={dprime}",
                grid.len()
            ))
        })
}

/// [`find_pq_in`] over the default grid.
pub fn find_pq(c1: f64, c2: f64, dprime: usize) -> Result<PositivityCertificate> {
    find_pq_in(c1, c2, dprime, &SearchGrid::default())
}

/// Which base quantity a constant bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundedQuantity {
    /// `|S|`
    Scalar,
    /// `|R⊥(X,Y)ξ| ≤ C|X||Y||ξ|`
    NormalCurvature,
    /// `|R̂(ξ,η)X| ≤ C|ξ||η||X|`
    AdjointCurvature,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundednessCertificate {
    pub quantity: BoundedQuantity,
    pub constant: f64,
    pub sample_max: f64,
}

/// Options for [`scalar_bound_pipeline`].
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOptions {
    /// Relative safety margin on measured bounds.
    pub margin: f64,
    /// Added to every measured bound so `C > 0`.
    pub floor: f64,
    /// Use this `C` instead of measuring one; it is still checked.
    pub constant: Option<f64>,
    /// Fibre points are also checked at these multiples of each sample.
    pub radial_scales: Vec<f64>,
    pub grid: SearchGrid,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            margin: 0.1,
            floor: 1e-6,
            constant: None,
            radial_scales: vec![0.0, 1.0, 10.0, 100.0],
            grid: SearchGrid::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineReport {
    pub pq: PQParams,
    pub c1: f64,
    pub c2: f64,
    pub bounds: Vec<BoundednessCertificate>,
    pub certificate: PositivityCertificate,
    /// Smallest directly evaluated `S̃` over all checked points.
    pub min_scalar: f64,
    pub points_checked: usize,
    /// `min_scalar > D`.
    pub passed: bool,
}

/// Measured bounds of `|S|`, `R⊥` and `R̂` over the samples.
pub fn measure_bounds(
    sub: &EmbeddedSubmanifold,
    samples: &[NormalPoint],
    cfg: &FdConfig,
) -> Result<[f64; 3]> {
    let mut m = [0.0f64; 3];
    for theta in samples {
        let bg = BaseGeometry::compute(sub, &theta.u, cfg)?;
        m[0] = m[0].max(bg.scalar.abs());
        m[1] = m[1].max(bg.normal_curvature_bound());
        m[2] = m[2].max(bg.adjoint_curvature_bound());
    }
    Ok(m)
}

/// Measured constant `C` and the coefficients `c₁`, `c₂` fed to the search.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConstants {
    pub constant: f64,
    pub c1: f64,
    pub c2: f64,
    pub bounds: Vec<BoundednessCertificate>,
}

/// `c₁ = −(C + D)/(d'−1)` and `c₂ = 3 max(d,d')² max(C, C²)/(4(d'−1))`,
/// which dominates the `R⊥` term for any `C`.
pub fn pipeline_constants(
    sub: &EmbeddedSubmanifold,
    target: f64,
    samples: &[NormalPoint],
    cfg: &FdConfig,
    opts: &PipelineOptions,
) -> Result<PipelineConstants> {
    let (d, k) = (sub.dim_base(), sub.codim());
    if k < 2 {
        return Err(GeomError::InvalidInput(format!(
            "{} has codimension {k}; the estimate needs codimension ≥ 2",
            sub.name()
        )));
    }
    if !(target >= 0.0) {
        return Err(GeomError::InvalidInput(format!("target D = {target} must be ≥ 0")));
    }
    let measured = measure_bounds(sub, samples, cfg)?;
    let c = match opts.constant {
        Some(c) => c,
        None => measured.iter().copied().fold(0.0, f64::max) * (1.0 + opts.margin) + opts.floor,
    };
    let quantities = [
        BoundedQuantity::Scalar,
        BoundedQuantity::NormalCurvature,
        BoundedQuantity::AdjointCurvature,
    ];
    let bounds: Vec<BoundednessCertificate> = quantities
        .iter()
        .zip(measured)
        .map(|(&quantity, sample_max)| BoundednessCertificate {
            quantity,
            constant: c,
            sample_max,
        })
        .collect();
    if let Some(b) = bounds.iter().find(|b| b.sample_max > b.constant) {
        return Err(GeomError::Certificate(format!(
            "{:?} reaches {:e} > C = {:e}",
            b.quantity, b.sample_max, b.constant
        )));
    }
    let kf = (k - 1) as f64;
    let dm = d.max(k) as f64;
    Ok(PipelineConstants {
        constant: c,
        c1: -(c + target) / kf,
        c2: 3.0 * dm * dm * c.max(c * c) / (4.0 * kf),
        bounds,
    })
}

/// Finds `(p, q)` with `S̃ > D` on `sub` and checks it on every sample.
pub fn scalar_bound_pipeline(
    sub: &EmbeddedSubmanifold,
    target: f64,
    samples: &[NormalPoint],
    cfg: &FdConfig,
    opts: &PipelineOptions,
) -> Result<PipelineReport> {
    let k = sub.codim();
    let PipelineConstants { c1, c2, bounds, .. } = pipeline_constants(sub, target, samples, cfg, opts)?;
    let certificate = find_pq_in(c1, c2, k, &opts.grid)?;
    let pq = certificate.pq;
    let mut min_scalar = f64::INFINITY;
    let mut points = 0;
    for theta in samples {
        let bg = BaseGeometry::compute(sub, &theta.u, cfg)?;
        for &r in &opts.radial_scales {
            let th = NormalPoint::new(theta.u.clone(), &theta.t * r);
            min_scalar = min_scalar.min(scalar_curvature(&pq, &bg, &th));
            points += 1;
        }
    }
    Ok(PipelineReport {
        pq,
        c1,
        c2,
        bounds,
        certificate,
        min_scalar,
        points_checked: points,
        passed: min_scalar > target,
    })
}
