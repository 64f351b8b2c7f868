//! Closed-form curvature of the normal bundle under `h_{p,q}`.
//!
//! Sign convention matches the base: `R̃(A,B)C = ∇̃_A∇̃_B C − ∇̃_B∇̃_A C − ∇̃_{[A,B]}C`.
//! Three of the six slot formulas exist in two forms (see [`Variant`]); the
//! corrected one is the default everywhere.

use nalgebra::DVector;

use crate::error::{GeomError, Result};
use crate::fd::FdConfig;
use crate::manifold::EmbeddedSubmanifold;
use crate::oracle::Variant;
use crate::pq_metric::{metric_eval, nu_mu, omega, omega_sqrtq, weight, NormalPoint, PQParams, TotalTangent};
use crate::submanifold::{unit, BaseGeometry};

/// Which lifts sit in the three slots of `R̃(·,·)·`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Slots {
    /// `R̃(X^h, Y^h)Z^h`
    HHH,
    /// `R̃(X^h, Y^h)η^v`
    HHV,
    /// `R̃(X^h, η^v)Z^h`
    HVH,
    /// `R̃(X^h, η^v)ξ^v`
    HVV,
    /// `R̃(ξ^v, η^v)Z^h`
    VVH,
    /// `R̃(ξ^v, η^v)ζ^v`
    VVV,
}

impl Slots {
    pub const ALL: [Slots; 6] = [
        Slots::HHH,
        Slots::HHV,
        Slots::HVH,
        Slots::HVV,
        Slots::VVH,
        Slots::VVV,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            Slots::HHH => "HHH",
            Slots::HHV => "HHV",
            Slots::HVH => "HVH",
            Slots::HVV => "HVV",
            Slots::VVH => "VVH",
            Slots::VVV => "VVV",
        }
    }

    /// `true` for the slots whose two forms differ.
    pub fn has_variants(&self) -> bool {
        matches!(self, Slots::HHH | Slots::HHV | Slots::VVH)
    }

    /// Whether each slot takes a base vector (`true`) or a normal vector.
    fn kinds(&self) -> [bool; 3] {
        match self {
            Slots::HHH => [true, true, true],
            Slots::HHV => [true, true, false],
            Slots::HVH => [true, false, true],
            Slots::HVV => [true, false, false],
            Slots::VVH => [false, false, true],
            Slots::VVV => [false, false, false],
        }
    }

    /// The three inputs as lifted tangents.
    pub fn lift(
        &self,
        d: usize,
        k: usize,
        inputs: [&DVector<f64>; 3],
    ) -> [TotalTangent; 3] {
        let kinds = self.kinds();
        let one = |i: usize| {
            if kinds[i] {
                TotalTangent::horizontal(inputs[i].clone(), k)
            } else {
                TotalTangent::vertical(inputs[i].clone(), d)
            }
        };
        [one(0), one(1), one(2)]
    }

    /// Dimensions `(len x, len y, len z)` expected for the inputs.
    pub fn input_dims(&self, d: usize, k: usize) -> [usize; 3] {
        self.kinds().map(|h| if h { d } else { k })
    }
}

/// Coefficients `a, b, c` of the vertical curvature
/// `R̃(ξ,η)ζ = a⟨ζ,θ⟩(⟨η,θ⟩ξ − ⟨ξ,θ⟩η) + b(⟨η,ζ⟩ξ − ⟨ξ,ζ⟩η)
///           + c(⟨ξ,θ⟩⟨η,ζ⟩ − ⟨η,θ⟩⟨ξ,ζ⟩)Θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerticalCurvatureCoeffs {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

/// `a, b, c` as rational functions of `s = |θ|²`.
pub fn abc_coeffs(pq: &PQParams, s: f64) -> VerticalCurvatureCoeffs {
    let (p, q) = (pq.p, pq.q);
    let w = omega(s);
    let den = 1.0 + q * s;
    VerticalCurvatureCoeffs {
        a: p * w * w * (p + q - 2.0 - q * s) / den,
        b: (2.0 * p * w - p * p * s * w * w + q) / den,
        c: (p * q * w - q * q + w * w * (p * p - 2.0 * p * (1.0 + q) + p * q * (p - 4.0) * s))
            / (den * den),
    }
}

/// `a, b, c` assembled from `ν`, `μ`, `ω`, `ω_√q` as in the expanded
/// vertical formula. Agrees with [`abc_coeffs`]; kept as a second route.
pub fn abc_from_display(pq: &PQParams, s: f64) -> VerticalCurvatureCoeffs {
    let p = pq.p;
    let q = pq.q;
    let w = omega(s);
    let wq = omega_sqrtq(s, q);
    let (nu, _) = nu_mu(pq, s);
    VerticalCurvatureCoeffs {
        a: -(nu - w * (2.0 * nu + p * (p - 2.0) * wq * w)),
        b: wq * (q + p * w * (2.0 * w - (p - 2.0) * (1.0 - w))),
        c: -wq * (wq * (q * q - p * (p - 2.0) * w * w) + nu * ((p - 2.0) * w + 3.0 - p)),
    }
}

/// `a − q·b − ω_√q·c`, the residual of the relation as usually quoted.
pub fn eqabc_residual_stated(pq: &PQParams, s: f64) -> f64 {
    let k = abc_coeffs(pq, s);
    k.a - pq.q * k.b - omega_sqrtq(s, pq.q) * k.c
}

/// `a − q·b − c/ω_√q`, the relation the coefficients actually satisfy.
pub fn eqabc_residual_corrected(pq: &PQParams, s: f64) -> f64 {
    let k = abc_coeffs(pq, s);
    k.a - pq.q * k.b - k.c * (1.0 + pq.q * s)
}

/// `R̃` on one slot combination. `inputs` are base vectors (coordinate
/// components) or normal vectors (frame components) as the slots dictate.
pub fn curvature_tensor(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    slots: Slots,
    inputs: [&DVector<f64>; 3],
    variant: Variant,
) -> TotalTangent {
    let (d, k) = (bg.dim_base, bg.codim);
    let t = &theta.t;
    let s = theta.norm_sq();
    let w = weight(pq, s);
    let om = omega(s);
    let pw1 = pq.p * om * w;
    let (_, mu) = nu_mu(pq, s);
    let [x, y, z] = inputs;
    let rh = |a: &DVector<f64>, b: &DVector<f64>, v: &DVector<f64>| bg.rhat_apply(a, b, v);
    let rp = |a: &DVector<f64>, b: &DVector<f64>, v: &DVector<f64>| bg.rperp_apply(a, b, v);
    match slots {
        Slots::HHH => {
            let h = bg.riemann_apply(x, y, z)
                - (rh(t, &rp(y, z, t), x) - rh(t, &rp(x, z, t), y) - rh(t, &rp(x, y, t), z) * 2.0)
                    * (0.25 * w);
            let v = match variant {
                Variant::Corrected => bg.cov_rperp_apply(z, x, y, t) * 0.5,
                Variant::Display => DVector::zeros(k),
            };
            TotalTangent::new(h, v)
        }
        Slots::HHV => {
            let eta = z;
            let h = (bg.cov_rhat_apply(x, t, eta, y) - bg.cov_rhat_apply(y, t, eta, x)) * (0.5 * w);
            let rxy_t = rp(x, y, t);
            let coef = match variant {
                Variant::Corrected => pq.p * om,
                Variant::Display => pq.p * w,
            };
            let v = rp(x, y, eta)
                + (rp(y, &rh(t, eta, x), t) - rp(x, &rh(t, eta, y), t)) * (0.25 * w)
                - &rxy_t * (coef * eta.dot(t))
                + t * (mu * rxy_t.dot(eta));
            TotalTangent::new(h, v)
        }
        Slots::HVH => {
            let (eta, z) = (y, z);
            let h = bg.cov_rhat_apply(x, t, eta, z) * (0.5 * w);
            let rxz_t = rp(x, z, t);
            let v = rp(x, z, eta) * 0.5 - &rxz_t * (0.5 * pq.p * om * eta.dot(t))
                - rp(x, &rh(t, eta, z), t) * (0.25 * w)
                + t * (0.5 * mu * rxz_t.dot(eta));
            TotalTangent::new(h, v)
        }
        Slots::HVV => {
            let (eta, xi) = (y, z);
            let h = (rh(t, xi, x) * eta.dot(t) - rh(t, eta, x) * xi.dot(t)) * (0.5 * pw1)
                - rh(eta, xi, x) * (0.5 * w)
                - rh(t, eta, &rh(t, xi, x)) * (0.25 * w * w);
            TotalTangent::horizontal(h, k)
        }
        Slots::VVH => {
            let (xi, eta) = (x, y);
            let h = match variant {
                Variant::Corrected => {
                    rh(xi, eta, z) * w
                        + (rh(t, xi, z) * eta.dot(t) - rh(t, eta, z) * xi.dot(t)) * pw1
                        + (rh(t, xi, &rh(t, eta, z)) - rh(t, eta, &rh(t, xi, z))) * (0.25 * w * w)
                }
                Variant::Display => {
                    rh(xi, eta, z) * w
                        + (rh(t, xi, z) * eta.dot(xi) - rh(t, eta, z) * xi.dot(t)) * pw1
                }
            };
            TotalTangent::horizontal(h, k)
        }
        Slots::VVV => {
            let (xi, eta, zeta) = (x, y, z);
            let c = match variant {
                Variant::Corrected => abc_coeffs(pq, s),
                Variant::Display => abc_from_display(pq, s),
            };
            let (xt, et, zt) = (xi.dot(t), eta.dot(t), zeta.dot(t));
            let v = (xi * et - eta * xt) * (c.a * zt)
                + (xi * eta.dot(zeta) - eta * xi.dot(zeta)) * c.b
                + t * (c.c * (xt * eta.dot(zeta) - et * xi.dot(zeta)));
            TotalTangent::vertical(v, d)
        }
    }
}

/// `R̃(A,B)C` for arbitrary split tangents, assembled from the six slot
/// formulas by trilinearity and antisymmetry in the first pair.
pub fn curvature_apply(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
    c: &TotalTangent,
    variant: Variant,
) -> TotalTangent {
    let r = |slots, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>| {
        curvature_tensor(pq, bg, theta, slots, [x, y, z], variant)
    };
    r(Slots::HHH, &a.h, &b.h, &c.h)
        + r(Slots::HHV, &a.h, &b.h, &c.v)
        + r(Slots::HVH, &a.h, &b.v, &c.h)
        - r(Slots::HVH, &b.h, &a.v, &c.h)
        + r(Slots::HVV, &a.h, &b.v, &c.v)
        - r(Slots::HVV, &b.h, &a.v, &c.v)
        + r(Slots::VVH, &a.v, &b.v, &c.h)
        + r(Slots::VVV, &a.v, &b.v, &c.v)
}

/// The kind of plane a sectional curvature is requested for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlaneType {
    /// `X^h ∧ Y^h`
    HH,
    /// `X^h ∧ η^v`
    HV,
    /// `ξ^v ∧ η^v`
    VV,
}

impl PlaneType {
    pub fn label(&self) -> &'static str {
        match self {
            PlaneType::HH => "HH",
            PlaneType::HV => "HV",
            PlaneType::VV => "VV",
        }
    }
}

/// A sectional curvature together with the plane it belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct SectionalValue {
    pub plane: PlaneType,
    pub first: TotalTangent,
    pub second: TotalTangent,
    pub value: f64,
}

/// Closed-form sectional curvature of a lifted plane. The inputs must be
/// orthonormal: `X, Y` in the induced metric, `ξ, η` in the fibre. For `HV`
/// the inputs are a unit `X` and a unit `η`.
///
/// `variant` only matters for `HV`: the corrected denominator is
/// `1 + q⟨η,θ⟩²`, the display one `1 + (q⟨η,θ⟩)²`.
pub fn sectional(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    plane: PlaneType,
    first: &DVector<f64>,
    second: &DVector<f64>,
    variant: Variant,
) -> Result<SectionalValue> {
    let (d, k) = (bg.dim_base, bg.codim);
    let t = &theta.t;
    let s = theta.norm_sq();
    let w = weight(pq, s);
    let (value, a, b) = match plane {
        PlaneType::HH => {
            if d < 2 {
                return Err(GeomError::Dimension("HH planes need dim L ≥ 2".into()));
            }
            let r = bg.rperp_apply(first, second, t);
            (
                bg.sectional(first, second) - 0.75 * w * r.norm_squared(),
                TotalTangent::horizontal(first.clone(), k),
                TotalTangent::horizontal(second.clone(), k),
            )
        }
        PlaneType::HV => {
            let value = if d == 1 || k == 1 {
                0.0
            } else {
                let et = second.dot(t);
                let den = match variant {
                    Variant::Corrected => 1.0 + pq.q * et * et,
                    Variant::Display => 1.0 + (pq.q * et).powi(2),
                };
                let r = bg.rhat_apply(t, second, first);
                0.25 * w * bg.inner(&r, &r) / den
            };
            (
                value,
                TotalTangent::horizontal(first.clone(), k),
                TotalTangent::vertical(second.clone(), d),
            )
        }
        PlaneType::VV => {
            if k < 2 {
                return Err(GeomError::Dimension("VV planes need codim L ≥ 2".into()));
            }
            let c = abc_coeffs(pq, s);
            let r2 = first.dot(t).powi(2) + second.dot(t).powi(2);
            (
                (c.b + c.a * r2) / (w * (1.0 + pq.q * r2)),
                TotalTangent::vertical(first.clone(), d),
                TotalTangent::vertical(second.clone(), d),
            )
        }
    };
    Ok(SectionalValue {
        plane,
        first: a,
        second: b,
        value,
    })
}

/// Sectional curvature of the plane spanned by two arbitrary independent
/// tangents, computed from the full tensor.
pub fn sectional_general(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
    a: &TotalTangent,
    b: &TotalTangent,
) -> f64 {
    let h = |x: &TotalTangent, y: &TotalTangent| metric_eval(pq, bg, theta, x, y);
    let r = curvature_apply(pq, bg, theta, a, b, b, Variant::Corrected);
    h(&r, a) / (h(a, a) * h(b, b) - h(a, b).powi(2))
}

/// Orthonormal basis of the fibre with `θ/|θ|` first when `θ ≠ 0`.
pub fn adapted_normal_basis(theta: &NormalPoint) -> Vec<DVector<f64>> {
    let k = theta.t.len();
    let n = theta.t.norm();
    let mut out: Vec<DVector<f64>> = Vec::with_capacity(k);
    if n > 0.0 {
        out.push(&theta.t / n);
    }
    for i in 0..k {
        if out.len() == k {
            break;
        }
        let mut v = unit(k, i);
        for _ in 0..2 {
            for e in &out {
                let c = e.dot(&v);
                v -= e * c;
            }
        }
        let nv = v.norm();
        if nv > 1e-8 {
            out.push(v / nv);
        }
    }
    out
}

/// `(E_1..E_d, F_1..F_{d'})`, orthonormal for `h_{p,q}` at `θ`. Horizontal
/// lifts of an orthonormal tangent basis, then vertical lifts of the adapted
/// fibre basis; `F_1` along `θ` is scaled by `(ω_√q/ω^p)^{1/2}`, the others by
/// `ω^{−p/2}`.
pub fn orthonormal_total_basis(pq: &PQParams, bg: &BaseGeometry, theta: &NormalPoint) -> Vec<TotalTangent> {
    let (d, k) = (bg.dim_base, bg.codim);
    let s = theta.norm_sq();
    let w = weight(pq, s);
    let mut out: Vec<TotalTangent> = bg
        .orthonormal_tangent_basis()
        .into_iter()
        .map(|x| TotalTangent::horizontal(x, k))
        .collect();
    for (i, xi) in adapted_normal_basis(theta).into_iter().enumerate() {
        let scale = if i == 0 && s > 0.0 {
            (omega_sqrtq(s, pq.q) / w).sqrt()
        } else {
            w.powf(-0.5)
        };
        out.push(TotalTangent::vertical(xi * scale, d));
    }
    out
}

/// Scalar curvature at `θ` from the closed-form sum.
pub fn scalar_curvature(pq: &PQParams, bg: &BaseGeometry, theta: &NormalPoint) -> f64 {
    let (d, k) = (bg.dim_base, bg.codim);
    let t = &theta.t;
    let s = theta.norm_sq();
    let w = weight(pq, s);
    let e = bg.orthonormal_tangent_basis();
    let mut rperp_sum = 0.0;
    let mut rhat_sum = 0.0;
    for x in &e {
        for y in &e {
            rperp_sum += bg.rperp_apply(x, y, t).norm_squared();
        }
        for j in 0..k {
            let r = bg.rhat_apply(t, &unit(k, j), x);
            rhat_sum += bg.inner(&r, &r);
        }
    }
    let _ = d;
    let c = abc_coeffs(pq, s);
    let kf = k as f64;
    let vertical =
        (kf - 1.0) / w * omega_sqrtq(s, pq.q) * (2.0 * c.a * s + c.b * (kf + (kf - 2.0) * pq.q * s));
    bg.scalar - 0.75 * w * rperp_sum + 0.5 * w * rhat_sum + vertical
}

/// `2 Σ_{i<j} K̃(E_i ∧ E_j)` over [`orthonormal_total_basis`], using the full
/// tensor. An independent route to the scalar curvature.
pub fn scalar_from_sectionals(pq: &PQParams, bg: &BaseGeometry, theta: &NormalPoint) -> f64 {
    let e = orthonormal_total_basis(pq, bg, theta);
    let mut sum = 0.0;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let r = curvature_apply(pq, bg, theta, &e[i], &e[j], &e[j], Variant::Corrected);
            sum += metric_eval(pq, bg, theta, &r, &e[i]);
        }
    }
    2.0 * sum
}

/// Default threshold below which closed-form curvature counts as zero.
pub const FLAT_TOLERANCE: f64 = 1e-7;

/// Outcome of a flatness test over a sample set.
#[derive(Debug, Clone, PartialEq)]
pub struct FlatnessReport {
    pub flat: bool,
    pub max_component: f64,
    pub tolerance: f64,
    /// Location and slots of the largest component when not flat.
    pub witness: Option<String>,
    pub samples: usize,
}

/// Largest component of `R̃` over all lifted coordinate-frame triples at `θ`.
/// Returns the value together with the triple `(a, b, c)` reaching it.
pub fn max_curvature_component(
    pq: &PQParams,
    bg: &BaseGeometry,
    theta: &NormalPoint,
) -> (f64, (usize, usize, usize)) {
    let (d, k) = (bg.dim_base, bg.codim);
    let n = d + k;
    let basis: Vec<TotalTangent> = (0..n).map(|a| TotalTangent::basis(a, d, k)).collect();
    let mut best = (0.0, (0, 0, 0));
    for a in 0..n {
        for b in a + 1..n {
            for c in 0..n {
                let r = curvature_apply(pq, bg, theta, &basis[a], &basis[b], &basis[c], Variant::Corrected);
                let m = r.amax();
                if !(m <= best.0) {
                    best = (m, (a, b, c));
                }
            }
        }
    }
    best
}

/// `R̃ ≡ 0` on every sample, judged by [`max_curvature_component`].
pub fn flatness_check(
    sub: &EmbeddedSubmanifold,
    pq: &PQParams,
    samples: &[NormalPoint],
    cfg: &FdConfig,
    tolerance: f64,
) -> Result<FlatnessReport> {
    let mut max = 0.0;
    let mut witness = None;
    for theta in samples {
        let bg = BaseGeometry::compute(sub, &theta.u, cfg)?;
        let (m, (a, b, c)) = max_curvature_component(pq, &bg, theta);
        if !(m <= max) {
            max = m;
            witness = Some(format!(
                "u={:?} t={:?} R(e{a},e{b})e{c} component {m:e}",
                theta.u,
                theta.t.as_slice()
            ));
        }
    }
    let flat = max < tolerance;
    Ok(FlatnessReport {
        flat,
        max_component: max,
        tolerance,
        witness: if flat { None } else { witness },
        samples: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::lookup;

    fn geom(name: &str, u: &[f64]) -> BaseGeometry {
        BaseGeometry::compute(&lookup(name, None).unwrap(), u, &FdConfig::default()).unwrap()
    }

    #[test]
    fn abc_at_zero_section() {
        let pq = PQParams::new(1.5, 2.0).unwrap();
        let k = abc_coeffs(&pq, 0.0);
        assert!((k.a - 1.5 * 1.5).abs() < 1e-14);
        assert!((k.b - 5.0).abs() < 1e-14);
        assert!((k.c - (2.25 - 9.0 + 3.0 - 4.0)).abs() < 1e-14);
        let z = abc_coeffs(&PQParams::sasaki(), 3.0);
        assert_eq!((z.a, z.b, z.c), (0.0, 0.0, 0.0));
    }

    #[test]
    fn both_abc_routes_agree() {
        for &(p, q, s) in &[(1.0, 1.0, 1.0), (-2.0, 3.0, 0.4), (3.5, 0.0, 7.0), (0.5, 9.0, 50.0)] {
            let pq = PQParams::new(p, q).unwrap();
            let (x, y) = (abc_coeffs(&pq, s), abc_from_display(&pq, s));
            assert!((x.a - y.a).abs() < 1e-12);
            assert!((x.b - y.b).abs() < 1e-12);
            assert!((x.c - y.c).abs() < 1e-12);
            assert!(eqabc_residual_corrected(&pq, s).abs() < 1e-12);
        }
        let k = abc_coeffs(&PQParams::new(1.0, 1.0).unwrap(), 1.0);
        assert!((k.a + 0.125).abs() < 1e-15 && (k.b - 0.875).abs() < 1e-15 && (k.c + 0.5).abs() < 1e-15);
    }

    #[test]
    fn basis_is_orthonormal() {
        let bg = geom("graph_surface_r4", &[0.3, -0.2]);
        let pq = PQParams::new(-1.0, 2.0).unwrap();
        let theta = NormalPoint::new(vec![0.3, -0.2], DVector::from_vec(vec![0.7, -0.4]));
        let e = orthonormal_total_basis(&pq, &bg, &theta);
        for i in 0..4 {
            for j in 0..4 {
                let g = metric_eval(&pq, &bg, &theta, &e[i], &e[j]);
                assert!((g - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn scalar_routes_agree() {
        let bg = geom("graph_surface_r4", &[0.3, -0.2]);
        for &(p, q) in &[(1.0, 1.0), (0.0, 0.0), (-1.0, 2.0), (2.0, 0.0)] {
            let pq = PQParams::new(p, q).unwrap();
            let theta = NormalPoint::new(vec![0.3, -0.2], DVector::from_vec(vec![0.7, -0.4]));
            let a = scalar_curvature(&pq, &bg, &theta);
            let b = scalar_from_sectionals(&pq, &bg, &theta);
            assert!((a - b).abs() < 1e-8, "{p} {q}: {a} vs {b}");
        }
    }

    #[test]
    fn vv_sectional_at_zero() {
        let bg = geom("plane_r2_in_r4", &[0.0, 0.0]);
        let theta = NormalPoint::zero(vec![0.0, 0.0], 2);
        let pq = PQParams::new(1.0, 1.0).unwrap();
        let k = sectional(&pq, &bg, &theta, PlaneType::VV, &unit(2, 0), &unit(2, 1), Variant::Corrected)
            .unwrap();
        assert!((k.value - 3.0).abs() < 1e-14);
        let g = sectional_general(&pq, &bg, &theta, &k.first, &k.second);
        assert!((g - 3.0).abs() < 1e-12);
    }
}
