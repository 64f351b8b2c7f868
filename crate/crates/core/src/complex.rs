//! Almost-complex structure `J̃` on the normal bundle of a totally real
//! `L^k ⊂ R^{2k}`, its fundamental form, and the conformal-Kähler checks.
//!
//! `J̃ξ^v = a(Jξ)^h + b⟨ξ,θ⟩(Jθ)^h` and `J̃X^h = c(JX)^v + d⟨JX,θ⟩Θ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::fd::FdConfig;
use crate::manifold::EmbeddedSubmanifold;
use crate::oracle::{TotalChart, Variant};
use crate::pq_metric::{metric_eval, omega, weight, NormalPoint, PQParams, TotalTangent};
use crate::submanifold::{normal_frame_in_gauge, BaseGeometry, Gauge};

/// Largest `|⟨J∂_i f, ∂_j f⟩|` accepted as totally real.
pub const TOTALLY_REAL_TOLERANCE: f64 = 1e-10;

/// The four coefficient functions of `J̃` at one fibre radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JTildeCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// `β = q/(1 + √(1+qs))`.
fn beta(q: f64, s: f64) -> f64 {
    q / (1.0 + (1.0 + q * s).sqrt())
}

/// Regular branch of the coefficients at `s = |θ|²`.
pub fn jtilde_coeffs(pq: &PQParams, s: f64) -> JTildeCoeffs {
    let w = weight(pq, s);
    let r = (1.0 + pq.q * s).sqrt();
    JTildeCoeffs {
        a: w.sqrt(),
        b: w.sqrt() * beta(pq.q, s),
        c: 1.0 / w.sqrt(),
        d: -pq.q / (w.sqrt() * (1.0 + pq.q * s + r)),
    }
}

/// Residuals of the seven scalar conditions for `J̃² = −1` and
/// `h(J̃·, J̃·) = h`.
pub fn coefficient_residuals(pq: &PQParams, s: f64, k: &JTildeCoeffs) -> [f64; 7] {
    let w = weight(pq, s);
    let q = pq.q;
    let JTildeCoeffs { a, b, c, d } = *k;
    [
        a * c - 1.0,
        a * d + b * (c + d * s),
        c * b + d * (a + b * s),
        a * a - w,
        c * c * w - 1.0,
        (2.0 * a * b + b * b * s) / (a * a) - q,
        q * d * d * s * s + (d * d + 2.0 * c * d * q) * s + 2.0 * c * d + c * c * q,
    ]
}

/// `J` restricted to the frames: normal → tangent coordinates and
/// tangent → normal frame components.
#[derive(Debug, Clone, PartialEq)]
pub struct JFrames {
    pub metric: DMatrix<f64>,
    pub normal_to_tangent: DMatrix<f64>,
    pub tangent_to_normal: DMatrix<f64>,
}

impl JFrames {
    pub fn from_geometry(bg: &BaseGeometry) -> Result<Self> {
        match (&bg.j_normal_to_tangent, &bg.j_tangent_to_normal) {
            (Some(n), Some(t)) => Ok(JFrames {
                metric: bg.metric.clone(),
                normal_to_tangent: n.clone(),
                tangent_to_normal: t.clone(),
            }),
            _ => Err(GeomError::Structure("no ambient complex structure".into())),
        }
    }

    /// Built directly from the chart in a fixed frame gauge.
    pub fn at(sub: &EmbeddedSubmanifold, u: &[f64], gauge: &Gauge) -> Result<Self> {
        let j = sub
            .complex()
            .ok_or_else(|| GeomError::Structure(format!("{} has no complex structure", sub.name())))?;
        let (_, d1) = sub.first_jet(u)?;
        let t = DMatrix::from_columns(&d1);
        let g = t.transpose() * &t;
        let ginv = g
            .clone()
            .try_inverse()
            .ok_or(GeomError::SingularMetric(0.0))?;
        let frame = normal_frame_in_gauge(sub, u, gauge)?;
        Ok(JFrames {
            normal_to_tangent: &ginv * t.transpose() * j.matrix() * &frame,
            tangent_to_normal: frame.transpose() * j.matrix() * &t,
            metric: g,
        })
    }

    fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.metric * y)[(0, 0)]
    }
}

/// Checks the complex setting at `u`: ambient `J`, `n = 2d`, and `L` totally
/// real there.
pub fn require_totally_real(sub: &EmbeddedSubmanifold, u: &[f64]) -> Result<()> {
    if sub.complex().is_none() {
        return Err(GeomError::Structure(format!("{} has no complex structure", sub.name())));
    }
    let defect = sub.totally_real_defect(u)?;
    if !(defect <= TOTALLY_REAL_TOLERANCE) {
        return Err(GeomError::Structure(format!(
            "{} is not totally real at {u:?} (defect {defect:e})",
            sub.name()
        )));
    }
    Ok(())
}

/// `J̃A` given the frame data of `J`.
pub fn apply_jtilde_with(pq: &PQParams, jf: &JFrames, t: &DVector<f64>, a: &TotalTangent) -> TotalTangent {
    let k = jtilde_coeffs(pq, t.norm_squared());
    let jt = &jf.normal_to_tangent * t;
    let jh = &jf.tangent_to_normal * &a.h;
    let h = &jf.normal_to_tangent * &a.v * k.a + jt * (k.b * a.v.dot(t));
    let v = &jh * k.c + t * (k.d * jh.dot(t));
    TotalTangent::new(h, v)
}

/// `J̃A` at `θ`.
pub fn apply_jtilde(pq: &PQParams, bg: &BaseGeometry, theta: &NormalPoint, a: &TotalTangent) -> Result<TotalTangent> {
    Ok(apply_jtilde_with(pq, &JFrames::from_geometry(bg)?, &theta.t, a))
}

/// Components `J̃^a_b` of `J̃` in the chart coordinates at `x`
/// (column `b` is `J̃∂_b`).
pub fn chart_jtilde(chart: &TotalChart, pq: &PQParams, x: &[f64]) -> Result<DMatrix<f64>> {
    let sub = chart.submanifold();
    let d = sub.dim_base();
    let n = chart.dim();
    let jf = JFrames::at(sub, &x[..d], chart.gauge())?;
    let t = DVector::from_column_slice(&x[d..]);
    let mut m = DMatrix::zeros(n, n);
    for b in 0..n {
        let mut e = DVector::zeros(n);
        e[b] = 1.0;
        let tb = chart.tangent_from_coords(x, &e)?;
        let jb = apply_jtilde_with(pq, &jf, &t, &tb);
        m.set_column(b, &chart.coords_from_tangent(x, &jb)?);
    }
    Ok(m)
}

/// Components `φ_{ab} = h(∂_a, J̃∂_b)` in the chart coordinates at `x`.
pub fn chart_fundamental_form(chart: &TotalChart, pq: &PQParams, x: &[f64]) -> Result<DMatrix<f64>> {
    Ok(chart.total_metric_components(pq, x)? * chart_jtilde(chart, pq, x)?)
}

/// Sign of `β` in the mixed fundamental form and in `dφ`, `α`: `+β` for the
/// corrected forms, `−β` for the display ones.
fn beta_sign(variant: Variant) -> f64 {
    match variant {
        Variant::Corrected => 1.0,
        Variant::Display => -1.0,
    }
}

/// `φ(X^h, ξ^v) = ω^{p/2}(⟨X,Jξ⟩ ± β⟨ξ,θ⟩⟨X,Jθ⟩)`; `φ` vanishes on pairs of
/// the same type.
fn phi_hv(pq: &PQParams, jf: &JFrames, t: &DVector<f64>, x: &DVector<f64>, xi: &DVector<f64>, variant: Variant) -> f64 {
    let s = t.norm_squared();
    let w = weight(pq, s);
    let jxi = &jf.normal_to_tangent * xi;
    let jt = &jf.normal_to_tangent * t;
    w.sqrt() * (jf.inner(x, &jxi) + beta_sign(variant) * beta(pq.q, s) * xi.dot(t) * jf.inner(x, &jt))
}

/// Closed-form fundamental form `φ(A, B)`.
pub fn fundamental_form(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
    variant: Variant,
) -> Result<f64> {
    let jf = JFrames::from_geometry(bg)?;
    let t = &theta.t;
    Ok(phi_hv(pq, &jf, t, &a.h, &b.v, variant) - phi_hv(pq, &jf, t, &b.h, &a.v, variant))
}

/// `φ(A, B) = h(A, J̃B)` evaluated directly.
pub fn fundamental_form_direct(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
) -> Result<f64> {
    let jb = apply_jtilde(pq, bg, theta, b)?;
    Ok(metric_eval(pq, bg, theta, a, &jb))
}

/// The factor `pω ± β` shared by `dφ` and `α`.
fn conformal_factor(pq: &PQParams, s: f64, variant: Variant) -> f64 {
    pq.p * omega(s) + beta_sign(variant) * beta(pq.q, s)
}

/// `dφ(ξ^v, η^v, X^h)`; the only nonzero slot type.
fn dphi_vvh(pq: &PQParams, jf: &JFrames, t: &DVector<f64>, xi: &DVector<f64>, eta: &DVector<f64>, x: &DVector<f64>, variant: Variant) -> f64 {
    let s = t.norm_squared();
    let w = weight(pq, s);
    let jxi = &jf.normal_to_tangent * xi;
    let jeta = &jf.normal_to_tangent * eta;
    w.sqrt()
        * conformal_factor(pq, s, variant)
        * (xi.dot(t) * jf.inner(x, &jeta) - eta.dot(t) * jf.inner(x, &jxi))
}

/// Closed-form `dφ(A, B, C)`, with `dφ(A,B,C) = Aφ(B,C) − Bφ(A,C) + Cφ(A,B)
/// − φ([A,B],C) + φ([A,C],B) − φ([B,C],A)`.
pub fn dphi(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
    c: &TotalTangent,
    variant: Variant,
) -> Result<f64> {
    let jf = JFrames::from_geometry(bg)?;
    let t = &theta.t;
    Ok(dphi_vvh(pq, &jf, t, &a.v, &b.v, &c.h, variant)
        + dphi_vvh(pq, &jf, t, &b.v, &c.v, &a.h, variant)
        + dphi_vvh(pq, &jf, t, &c.v, &a.v, &b.h, variant))
}

/// `α(A) = −(pω ± β)⟨A^v, θ⟩`; horizontal vectors are annihilated.
pub fn alpha_form(pq: &PQParams, theta: &NormalPoint, a: &TotalTangent, variant: Variant) -> f64 {
    -conformal_factor(pq, theta.norm_sq(), variant) * a.v.dot(&theta.t)
}

/// `(λα ∧ φ)(A,B,C) = λ(α(A)φ(B,C) − α(B)φ(A,C) + α(C)φ(A,B))`; `λ = 1`
/// except in negative controls.
#[allow(clippy::too_many_arguments)]
pub fn alpha_wedge_phi(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
    c: &TotalTangent,
    variant: Variant,
    alpha_scale: f64,
) -> Result<f64> {
    let al = |x: &TotalTangent| alpha_scale * alpha_form(pq, theta, x, variant);
    let ph = |x: &TotalTangent, y: &TotalTangent| fundamental_form(pq, bg, theta, x, y, variant);
    Ok(al(a) * ph(b, c)? - al(b) * ph(a, c)? + al(c) * ph(a, b)?)
}

/// Nijenhuis torsion for `p = q = 0`, normalised as
/// `½Ñ(A,B) = [J̃A,J̃B] − [A,B] − J̃[A,J̃B] − J̃[J̃A,B]`.
pub fn nijenhuis_p0q0(bg: &BaseGeometry, theta: &NormalPoint, a: &TotalTangent, b: &TotalTangent) -> Result<TotalTangent> {
    let jf = JFrames::from_geometry(bg)?;
    let (d, k) = (bg.dim_base, bg.codim);
    let t = &theta.t;
    let jn = |eta: &DVector<f64>| &jf.normal_to_tangent * eta;
    let hh = |x: &DVector<f64>, y: &DVector<f64>| TotalTangent::vertical(bg.rperp_apply(x, y, t) * 2.0, d);
    let vv = |xi: &DVector<f64>, eta: &DVector<f64>| {
        TotalTangent::vertical(bg.rperp_apply(&jn(eta), &jn(xi), t) * 2.0, d)
    };
    let hv = |x: &DVector<f64>, xi: &DVector<f64>| {
        TotalTangent::horizontal(jn(&bg.rperp_apply(x, &jn(xi), t)) * 2.0, k)
    };
    Ok(hh(&a.h, &b.h) + vv(&a.v, &b.v) + hv(&a.h, &b.v) - hv(&b.h, &a.v))
}

/// `Ñ` on the lifted coordinate frame when `p = q = 0`; a `StructureError`
/// otherwise.
pub fn nijenhuis_checked(pq: &PQParams, bg: &BaseGeometry, theta: &NormalPoint, a: &TotalTangent, b: &TotalTangent) -> Result<TotalTangent> {
    if pq.p != 0.0 || pq.q != 0.0 {
        return Err(GeomError::Structure(
            "closed-form torsion is only available for p = q = 0".into(),
        ));
    }
    nijenhuis_p0q0(bg, theta, a, b)
}

/// The constant sectional curvature forced on `L` when `J̃` is integrable.
pub fn hermitian_constant_k(pq: &PQParams) -> f64 {
    let (p, q) = (pq.p, pq.q);
    let r = (1.0 + q).sqrt();
    2f64.powf(p - 1.0) * (p + p * r + 2.0 * q) / (r * (1.0 + r))
}

fn lifted_basis(bg: &BaseGeometry) -> Vec<TotalTangent> {
    let (d, k) = (bg.dim_base, bg.codim);
    (0..d + k).map(|a| TotalTangent::basis(a, d, k)).collect()
}

/// Result of [`lck_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct LckReport {
    /// `max |dφ − λα∧φ|` over lifted-frame triples and samples.
    pub max_residual: f64,
    pub max_dphi: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub witness: Option<String>,
    pub samples: usize,
}

/// Tests `dφ = λα ∧ φ` on every lifted-frame triple at every sample.
pub fn lck_check(
    sub: &EmbeddedSubmanifold,
    pq: &PQParams,
    samples: &[NormalPoint],
    cfg: &FdConfig,
    alpha_scale: f64,
    tolerance: f64,
) -> Result<LckReport> {
    let mut max_residual = 0.0f64;
    let mut max_dphi = 0.0f64;
    let mut witness = None;
    for theta in samples {
        require_totally_real(sub, &theta.u)?;
        let bg = BaseGeometry::compute(sub, &theta.u, cfg)?;
        let e = lifted_basis(&bg);
        let n = e.len();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let lhs = dphi(pq, &bg, theta, &e[a], &e[b], &e[c], Variant::Corrected)?;
                    let rhs = alpha_wedge_phi(pq, &bg, theta, &e[a], &e[b], &e[c], Variant::Corrected, alpha_scale)?;
                    max_dphi = max_dphi.max(lhs.abs());
                    let r = (lhs - rhs).abs();
                    if !(r <= max_residual) {
                        max_residual = r;
                        witness = Some(format!(
                            "u={:?} t={:?} (e{a},e{b},e{c}): dφ={lhs:e} α∧φ={rhs:e}",
                            theta.u,
                            theta.t.as_slice()
                        ));
                    }
                }
            }
        }
    }
    let passed = max_residual < tolerance;
    Ok(LckReport {
        max_residual,
        max_dphi,
        tolerance,
        passed,
        witness: if passed { None } else { witness },
        samples: samples.len(),
    })
}

/// Result of [`kahler_check`].
#[derive(Debug, Clone, PartialEq)]
pub struct KahlerVerdict {
    pub kahler: bool,
    pub max_normal_curvature: f64,
    pub max_dphi: f64,
    /// Only computed for `p = q = 0`.
    pub max_nijenhuis: Option<f64>,
    /// `dφ ≡ 0` and `Ñ ≡ 0` on the samples agree with the verdict.
    pub consistent: bool,
    pub witness: Option<String>,
}

/// Kähler iff `p = q = 0` and `R⊥ ≡ 0`, cross-checked against the computed
/// `dφ` and `Ñ`.
pub fn kahler_check(
    sub: &EmbeddedSubmanifold,
    pq: &PQParams,
    samples: &[NormalPoint],
    cfg: &FdConfig,
    tolerance: f64,
) -> Result<KahlerVerdict> {
    let zero = pq.p == 0.0 && pq.q == 0.0;
    let mut max_r = 0.0f64;
    let mut max_dphi = 0.0f64;
    let mut max_n = 0.0f64;
    let mut dphi_witness = None;
    let mut n_witness = None;
    for theta in samples {
        require_totally_real(sub, &theta.u)?;
        let bg = BaseGeometry::compute(sub, &theta.u, cfg)?;
        max_r = max_r.max(bg.max_normal_curvature());
        let e = lifted_basis(&bg);
        let n = e.len();
        for a in 0..n {
            for b in a + 1..n {
                for c in b + 1..n {
                    let v = dphi(pq, &bg, theta, &e[a], &e[b], &e[c], Variant::Corrected)?.abs();
                    if v > max_dphi {
                        max_dphi = v;
                        dphi_witness = Some(format!("dφ(e{a},e{b},e{c}) = {v:e} at u={:?}", theta.u));
                    }
                }
                if zero {
                    let v = nijenhuis_p0q0(&bg, theta, &e[a], &e[b])?.amax();
                    if v > max_n {
                        max_n = v;
                        n_witness = Some(format!("Ñ(e{a},e{b}) = {v:e} at u={:?}", theta.u));
                    }
                }
            }
        }
    }
    let kahler = zero && max_r < tolerance;
    let integrable_and_closed = max_dphi < tolerance && (!zero || max_n < tolerance);
    let consistent = kahler == (zero && integrable_and_closed);
    let witness = if kahler {
        None
    } else if max_dphi >= tolerance {
        dphi_witness
    } else {
        n_witness.or_else(|| Some(format!("p={}, q={}", pq.p, pq.q)))
    };
    Ok(KahlerVerdict {
        kahler,
        max_normal_curvature: max_r,
        max_dphi,
        max_nijenhuis: zero.then_some(max_n),
        consistent,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::lookup;

    #[test]
    fn coefficients() {
        let k = jtilde_coeffs(&PQParams::sasaki(), 2.0);
        assert_eq!((k.a, k.b, k.c, k.d), (1.0, 0.0, 1.0, 0.0));
        let k = jtilde_coeffs(&PQParams::new(0.0, 3.0).unwrap(), 0.0);
        assert_eq!((k.a, k.b, k.c, k.d), (1.0, 1.5, 1.0, -1.5));
        for &(p, q, s) in &[(1.0, 1.0, 0.5), (-2.0, 7.0, 3.0), (3.0, 0.2, 40.0)] {
            let pq = PQParams::new(p, q).unwrap();
            let k = jtilde_coeffs(&pq, s);
            for r in coefficient_residuals(&pq, s, &k) {
                assert!(r.abs() < 1e-12, "{p} {q} {s}: {r}");
            }
        }
    }

    #[test]
    fn constant_curvature_values() {
        let k = |p, q| hermitian_constant_k(&PQParams::new(p, q).unwrap());
        assert_eq!(k(0.0, 0.0), 0.0);
        assert_eq!(k(0.0, 3.0), 0.5);
        assert_eq!(k(1.0, 0.0), 1.0);
    }

    #[test]
    fn jtilde_squares_to_minus_one() {
        let sub = lookup("lagrangian_graph_r4", None).unwrap();
        let u = [0.2, -0.3];
        let bg = BaseGeometry::compute(&sub, &u, &FdConfig::default()).unwrap();
        let theta = NormalPoint::new(u.to_vec(), DVector::from_vec(vec![0.6, -0.8]));
        let pq = PQParams::new(-1.0, 2.0).unwrap();
        for a in lifted_basis(&bg) {
            let jja = apply_jtilde(&pq, &bg, &theta, &apply_jtilde(&pq, &bg, &theta, &a).unwrap()).unwrap();
            assert!((jja + a).amax() < 1e-12);
        }
    }

    #[test]
    fn not_totally_real() {
        let sub = lookup("graph_surface_r4", None).unwrap();
        assert!(matches!(require_totally_real(&sub, &[0.0, 0.0]), Err(GeomError::Structure(_))));
    }
}
