//! The (p,q)-metric on the normal bundle, its Levi-Civita connection on
//! lifted fields, Lie brackets of lifts, and derivatives of lifted bundle
//! morphisms.
//!
//! Lifted fields are always those whose horizontal part has constant
//! coordinate components and whose vertical part has constant frame
//! components. Base brackets `[X, Y]` of such fields vanish.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::submanifold::BaseGeometry;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PQParams {
    pub p: f64,
    pub q: f64,
}

impl PQParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !p.is_finite() || !q.is_finite() || q < 0.0 {
            return Err(GeomError::InvalidInput(format!(
                "need finite p and q >= 0, got p={p}, q={q}"
            )));
        }
        Ok(PQParams { p, q })
    }

    /// `(0, 0)`.
    pub fn sasaki() -> Self {
        PQParams { p: 0.0, q: 0.0 }
    }
}

/// A point of the normal bundle: base parameters and frame components.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalPoint {
    pub u: Vec<f64>,
    pub t: DVector<f64>,
    norm_sq: f64,
}

impl NormalPoint {
    pub fn new(u: Vec<f64>, t: DVector<f64>) -> Self {
        let norm_sq = t.norm_squared();
        NormalPoint { u, t, norm_sq }
    }

    pub fn zero(u: Vec<f64>, codim: usize) -> Self {
        Self::new(u, DVector::zeros(codim))
    }

    /// `|θ|²`.
    pub fn norm_sq(&self) -> f64 {
        self.norm_sq
    }

    /// `θ` as an ambient vector.
    pub fn ambient(&self, bg: &BaseGeometry) -> DVector<f64> {
        &bg.frame * &self.t
    }
}

/// Tangent vector of the normal bundle split as horizontal (coordinate
/// components) plus vertical (frame components).
#[derive(Debug, Clone, PartialEq)]
pub struct TotalTangent {
    pub h: DVector<f64>,
    pub v: DVector<f64>,
}

impl TotalTangent {
    pub fn new(h: DVector<f64>, v: DVector<f64>) -> Self {
        TotalTangent { h, v }
    }

    pub fn zero(d: usize, k: usize) -> Self {
        TotalTangent {
            h: DVector::zeros(d),
            v: DVector::zeros(k),
        }
    }

    /// `X^h`.
    pub fn horizontal(x: DVector<f64>, k: usize) -> Self {
        TotalTangent {
            h: x,
            v: DVector::zeros(k),
        }
    }

    /// `η^v`.
    pub fn vertical(eta: DVector<f64>, d: usize) -> Self {
        TotalTangent {
            h: DVector::zeros(d),
            v: eta,
        }
    }

    /// The canonical vertical field `Θ` at `θ`.
    pub fn canonical(theta: &NormalPoint, d: usize) -> Self {
        Self::vertical(theta.t.clone(), d)
    }

    /// Basis vector `a` of the lifted coordinate frame: `∂_a^h` for `a < d`,
    /// `ξ_{a-d}^v` otherwise.
    pub fn basis(a: usize, d: usize, k: usize) -> Self {
        let mut t = Self::zero(d, k);
        if a < d {
            t.h[a] = 1.0;
        } else {
            t.v[a - d] = 1.0;
        }
        t
    }

    pub fn amax(&self) -> f64 {
        self.h.amax().max(self.v.amax())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.h.iter().chain(self.v.iter()).copied().collect()
    }
}

impl Add for TotalTangent {
    type Output = TotalTangent;
    fn add(self, o: TotalTangent) -> TotalTangent {
        TotalTangent::new(self.h + o.h, self.v + o.v)
    }
}

impl Sub for TotalTangent {
    type Output = TotalTangent;
    fn sub(self, o: TotalTangent) -> TotalTangent {
        TotalTangent::new(self.h - o.h, self.v - o.v)
    }
}

impl Mul<f64> for TotalTangent {
    type Output = TotalTangent;
    fn mul(self, c: f64) -> TotalTangent {
        TotalTangent::new(self.h * c, self.v * c)
    }
}

impl Neg for TotalTangent {
    type Output = TotalTangent;
    fn neg(self) -> TotalTangent {
        self * -1.0
    }
}

/// `ω = 1/(1+s)`, `s = |θ|²`.
pub fn omega(s: f64) -> f64 {
    1.0 / (1.0 + s)
}

/// `ω_√q = 1/(1+qs)`.
pub fn omega_sqrtq(s: f64, q: f64) -> f64 {
    1.0 / (1.0 + q * s)
}

/// Vertical weight `ω^p`.
pub fn weight(pq: &PQParams, s: f64) -> f64 {
    omega(s).powf(pq.p)
}

/// `(ν, μ)` of the vertical connection.
pub fn nu_mu(pq: &PQParams, s: f64) -> (f64, f64) {
    let w = omega(s);
    let den = pq.q * s + 1.0;
    (pq.p * pq.q * w / den, (pq.q + pq.p * w) / den)
}

/// `h_{p,q}(A, B)` at `θ`.
pub fn metric_eval(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
) -> f64 {
    metric_eval_with(pq, &bg.metric, &theta.t, a, b)
}

/// `h_{p,q}(A, B)` given only the induced metric `g` and the fibre point `t`.
pub fn metric_eval_with(
    pq: &PQParams,
    g: &DMatrix<f64>,
    t: &DVector<f64>,
    a: &TotalTangent,
    b: &TotalTangent,
) -> f64 {
    let w = weight(pq, t.norm_squared());
    (a.h.transpose() * g * &b.h)[(0, 0)] + w * (a.v.dot(&b.v) + pq.q * a.v.dot(t) * b.v.dot(t))
}

/// Gram matrix of `h_{p,q}` on the lifted coordinate frame.
pub fn metric_matrix(pq: &PQParams, bg: &BaseGeometry, theta: &NormalPoint) -> DMatrix<f64> {
    let (d, k) = (bg.dim_base, bg.codim);
    let basis: Vec<TotalTangent> = (0..d + k).map(|a| TotalTangent::basis(a, d, k)).collect();
    DMatrix::from_fn(d + k, d + k, |a, b| metric_eval(pq, bg, theta, &basis[a], &basis[b]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LcCase {
    HH,
    HV,
    VH,
    VV,
}

/// `∇̃` evaluated on one pair of lifts.
#[derive(Debug, Clone, PartialEq)]
pub struct ConnectionValue {
    pub case: LcCase,
    pub value: TotalTangent,
}

/// Closed-form Levi-Civita connection on one pair of lifts. For `HH` both
/// inputs are base vectors, for `HV` the first is a base vector and the
/// second a normal vector, and so on.
pub fn levi_civita(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    case: LcCase,
    first: &DVector<f64>,
    second: &DVector<f64>,
) -> ConnectionValue {
    let (d, k) = (bg.dim_base, bg.codim);
    let s = theta.norm_sq();
    let w = weight(pq, s);
    let t = &theta.t;
    let value = match case {
        LcCase::HH => TotalTangent::new(
            bg.nabla(first, second),
            bg.rperp_apply(first, second, t) * -0.5,
        ),
        LcCase::HV => TotalTangent::new(
            bg.rhat_apply(t, second, first) * (0.5 * w),
            bg.nabla_normal(first, second),
        ),
        LcCase::VH => TotalTangent::horizontal(bg.rhat_apply(t, first, second) * (0.5 * w), k),
        LcCase::VV => {
            let (nu, mu) = nu_mu(pq, s);
            let (xt, et) = (first.dot(t), second.dot(t));
            let pw = pq.p * omega(s);
            let v = (second * xt + first * et) * -pw + t * (nu * xt * et + mu * first.dot(second));
            TotalTangent::vertical(v, d)
        }
    };
    ConnectionValue { case, value }
}

/// `∇̃_A B` for general lifted fields, by bilinearity over the four cases.
pub fn connection(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
) -> TotalTangent {
    levi_civita(pq, bg, theta, LcCase::HH, &a.h, &b.h).value
        + levi_civita(pq, bg, theta, LcCase::HV, &a.h, &b.v).value
        + levi_civita(pq, bg, theta, LcCase::VH, &a.v, &b.h).value
        + levi_civita(pq, bg, theta, LcCase::VV, &a.v, &b.v).value
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BracketCase {
    /// `[ξ^v, η^v]`
    VV,
    /// `[X^h, η^v]`
    HV,
    /// `[X^h, Y^h]`
    HH,
    /// `[ξ^v, Θ]`; the second input is ignored.
    VTheta,
    /// `[X^h, Θ]`; the second input is ignored.
    HTheta,
}

/// Lie bracket of lifts.
pub fn bracket_lifts(
    bg: &BaseGeometry,
    theta: &NormalPoint,
    case: BracketCase,
    first: &DVector<f64>,
    second: &DVector<f64>,
) -> TotalTangent {
    let (d, k) = (bg.dim_base, bg.codim);
    match case {
        BracketCase::VV => TotalTangent::zero(d, k),
        BracketCase::HV => TotalTangent::vertical(bg.nabla_normal(first, second), d),
        BracketCase::HH => TotalTangent::vertical(-bg.rperp_apply(first, second, &theta.t), d),
        BracketCase::VTheta => TotalTangent::vertical(first.clone(), d),
        BracketCase::HTheta => TotalTangent::zero(d, k),
    }
}

/// `[A, B]` for general lifted fields.
pub fn bracket(bg: &BaseGeometry, theta: &NormalPoint, a: &TotalTangent, b: &TotalTangent) -> TotalTangent {
    bracket_lifts(bg, theta, BracketCase::HH, &a.h, &b.h)
        + bracket_lifts(bg, theta, BracketCase::HV, &a.h, &b.v)
        - bracket_lifts(bg, theta, BracketCase::HV, &b.h, &a.v)
}

/// Derivative of the function `h(B, C)` along `A`, for lifted fields `B, C`.
///
/// Uses the rules: horizontal lifts preserve `|θ|²`, `X^h⟨η,θ⟩ = ⟨∇⊥_X η,θ⟩`,
/// `ξ^v⟨η,θ⟩ = ⟨ξ,η⟩`, and `∂_i g` from metric compatibility of `Γ`.
pub fn metric_derivative(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
    c: &TotalTangent,
) -> f64 {
    let s = theta.norm_sq();
    let w = weight(pq, s);
    let t = &theta.t;
    // X(⟨Y,Z⟩) = ⟨∇_X Y, Z⟩ + ⟨Y, ∇_X Z⟩
    let base = bg.inner(&bg.nabla(&a.h, &b.h), &c.h) + bg.inner(&b.h, &bg.nabla(&a.h, &c.h));
    // derivative of ⟨η, θ⟩ along A
    let dpair = |eta: &DVector<f64>| bg.nabla_normal(&a.h, eta).dot(t) + eta.dot(&a.v);
    let ds = 2.0 * a.v.dot(t);
    let dw = -pq.p * omega(s) * w * ds;
    let (bt, ct) = (b.v.dot(t), c.v.dot(t));
    let inner_v = b.v.dot(&c.v) + pq.q * bt * ct;
    let dinner_v = bg.nabla_normal(&a.h, &b.v).dot(&c.v)
        + b.v.dot(&bg.nabla_normal(&a.h, &c.v))
        + pq.q * (dpair(&b.v) * ct + bt * dpair(&c.v));
    base + dw * inner_v + w * dinner_v
}

/// `2h(∇̃_A B, C)` minus the Koszul right-hand side.
pub fn koszul_residual(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
    c: &TotalTangent,
) -> f64 {
    let h = |x: &TotalTangent, y: &TotalTangent| metric_eval(pq, bg, theta, x, y);
    let lhs = 2.0 * h(&connection(pq, bg, theta, a, b), c);
    let rhs = metric_derivative(pq, bg, theta, a, b, c) + metric_derivative(pq, bg, theta, b, a, c)
        - metric_derivative(pq, bg, theta, c, a, b)
        + h(&bracket(bg, theta, a, b), c)
        - h(&bracket(bg, theta, a, c), b)
        - h(&bracket(bg, theta, b, c), a);
    lhs - rhs
}

/// A bundle morphism to be lifted, given by components against the frames,
/// with optional covariant derivatives `∇_{∂_i}` per coordinate direction.
#[derive(Debug, Clone, PartialEq)]
pub enum Morphism {
    /// `F: T⊥L → T⊥L` as a `d' × d'` matrix; lifted as `θ ↦ (Fθ)^v`.
    Vertical {
        f: DMatrix<f64>,
        nabla: Option<Vec<DMatrix<f64>>>,
    },
    /// `G: T⊥L → TL` as a `d × d'` matrix; lifted as `θ ↦ (Gθ)^h`.
    Horizontal {
        g: DMatrix<f64>,
        nabla: Option<Vec<DMatrix<f64>>>,
    },
}

impl Morphism {
    /// The identity of `T⊥L`, whose vertical lift is `Θ`. It is parallel.
    pub fn identity(bg: &BaseGeometry) -> Self {
        let k = bg.codim;
        Morphism::Vertical {
            f: DMatrix::identity(k, k),
            nabla: Some(vec![DMatrix::zeros(k, k); bg.dim_base]),
        }
    }
}

/// Direction of differentiation.
#[derive(Debug, Clone, PartialEq)]
pub enum Direction {
    Vertical(DVector<f64>),
    Horizontal(DVector<f64>),
}

fn contract(nabla: &[DMatrix<f64>], x: &DVector<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(nabla[0].nrows(), nabla[0].ncols());
    for (i, n) in nabla.iter().enumerate() {
        m += n * x[i];
    }
    m
}

/// `∇̃_{dir}` of the lift of a bundle morphism.
pub fn lift_derivative_morphism(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    morphism: &Morphism,
    direction: &Direction,
) -> Result<TotalTangent> {
    let (d, k) = (bg.dim_base, bg.codim);
    let s = theta.norm_sq();
    let w = weight(pq, s);
    let t = &theta.t;
    let missing = || {
        GeomError::UnsupportedMorphism(
            "horizontal derivative needs the morphism's covariant derivative data".into(),
        )
    };
    Ok(match (morphism, direction) {
        (Morphism::Vertical { f, .. }, Direction::Vertical(xi)) => {
            let (nu, mu) = nu_mu(pq, s);
            let ft = f * t;
            let (xt, ftt) = (xi.dot(t), ft.dot(t));
            let pw = pq.p * omega(s);
            let v = f * xi - (&ft * xt + xi * ftt) * pw + t * (mu * xi.dot(&ft) + nu * xt * ftt);
            TotalTangent::vertical(v, d)
        }
        (Morphism::Horizontal { g, .. }, Direction::Vertical(xi)) => {
            let gt = g * t;
            TotalTangent::horizontal(g * xi + bg.rhat_apply(t, xi, &gt) * (0.5 * w), k)
        }
        (Morphism::Vertical { f, nabla }, Direction::Horizontal(x)) => {
            let nabla = nabla.as_ref().ok_or_else(missing)?;
            let ft = f * t;
            TotalTangent::new(bg.rhat_apply(t, &ft, x) * (0.5 * w), contract(nabla, x) * t)
        }
        (Morphism::Horizontal { g, nabla }, Direction::Horizontal(x)) => {
            let nabla = nabla.as_ref().ok_or_else(missing)?;
            let gt = g * t;
            TotalTangent::new(contract(nabla, x) * t, bg.rperp_apply(x, &gt, t) * -0.5)
        }
    })
}
