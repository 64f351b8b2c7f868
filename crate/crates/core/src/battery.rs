//! The verification battery: every closed form against the coordinate
//! oracle (or a second closed-form route), over presets × `(p,q)` × samples.
//!
//! Ordinary rows fail the run when outside tolerance. Rows for formulas that
//! exist in two forms are adjudications: both forms are scored against the
//! oracle and the verdict is reported, but they never fail the run.

use std::cell::RefCell;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::complex::{
    alpha_wedge_phi, apply_jtilde, chart_fundamental_form, chart_jtilde, coefficient_residuals, dphi,
    fundamental_form, fundamental_form_direct, jtilde_coeffs, nijenhuis_p0q0,
};
use crate::curvature::{
    abc_coeffs, abc_from_display, curvature_apply, curvature_tensor, orthonormal_total_basis,
    scalar_curvature, scalar_from_sectionals, sectional, PlaneType, Slots,
};
use crate::error::Result;
use crate::estimates::{alpha1_display, phi_eval, phi_eval_direct, PhiSpec};
use crate::fd::{partial4, FdConfig};
use crate::manifold::{builtin_presets, lookup, EmbeddedSubmanifold};
use crate::oracle::{adjudicate, ComparisonReport, OracleConfig, TotalChart, Variant, Verdict};
use crate::pq_metric::{
    bracket_lifts, connection, koszul_residual, metric_eval, omega_sqrtq, BracketCase, NormalPoint,
    PQParams, TotalTangent,
};
use crate::sampling::{sample_points, SampleSpec};
use crate::submanifold::{unit, BaseGeometry};

/// Tolerances of the ordinary rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Closed-form connection against oracle Christoffels.
    pub connection: f64,
    /// Closed-form curvature, sectional and form derivatives against the oracle.
    pub oracle: f64,
    /// Scalar curvature against the oracle (a sum of many curvature terms).
    pub oracle_scalar: f64,
    /// Oracle brackets.
    pub bracket: f64,
    /// Identities between closed forms.
    pub closed: f64,
    /// Identities between closed forms involving no finite differences at all.
    pub exact: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            connection: 1e-5,
            oracle: 1e-4,
            oracle_scalar: 1e-3,
            bracket: 1e-5,
            closed: 1e-9,
            exact: 1e-11,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, k: f64) -> Self {
        Tolerances {
            connection: self.connection * k,
            oracle: self.oracle * k,
            oracle_scalar: self.oracle_scalar * k,
            bracket: self.bracket * k,
            closed: self.closed * k,
            exact: self.exact * k,
        }
    }
}

/// Test hook: multiplies the closed-form values of one quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub quantity: String,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryConfig {
    pub presets: Vec<String>,
    pub pq: Vec<PQParams>,
    pub samples: SampleSpec,
    pub fd: FdConfig,
    pub oracle: OracleConfig,
    pub tolerances: Tolerances,
    pub perturb: Option<Perturbation>,
}

/// The `(p,q)` pairs of the default battery.
pub fn default_pq_grid() -> Vec<PQParams> {
    [(0.0, 0.0), (1.0, 1.0), (-1.0, 2.0), (2.0, 0.0)]
        .iter()
        .map(|&(p, q)| PQParams { p, q })
        .collect()
}

impl Default for BatteryConfig {
    fn default() -> Self {
        BatteryConfig {
            presets: builtin_presets().iter().map(|p| p.name.to_string()).collect(),
            pq: default_pq_grid(),
            samples: SampleSpec::default(),
            fd: FdConfig::default(),
            oracle: OracleConfig::default(),
            tolerances: Tolerances::default(),
            perturb: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowKind {
    Check,
    Adjudication,
}

/// One line of the verification report.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    /// Preset name, or `*` for rows aggregated over the whole battery.
    pub preset: String,
    /// `None` on rows aggregated over all `(p,q)`.
    pub pq: Option<PQParams>,
    pub kind: RowKind,
    pub report: ComparisonReport,
    /// `pass`/`fail` for checks; the adjudication verdict otherwise.
    pub verdict: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BatteryReport {
    pub rows: Vec<ReportRow>,
    pub failures: usize,
}

impl BatteryReport {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }

    /// Global verdict for an adjudicated quantity.
    pub fn verdict(&self, quantity: &str) -> Option<&str> {
        self.rows
            .iter()
            .find(|r| r.preset == "*" && r.kind == RowKind::Adjudication && r.report.quantity == quantity)
            .map(|r| r.verdict.as_str())
    }
}

/// Quantities that are adjudicated rather than checked.
pub const ADJUDICATED: [&str; 9] = [
    "curvature_HHH",
    "curvature_HHV",
    "curvature_VVH",
    "sectional_HV_denominator",
    "dphi_beta_sign",
    "phi_mixed_sign",
    "phi_alpha1",
    "eqabc",
    "eqabc_self_test",
];

struct Entry {
    quantity: &'static str,
    variant: Option<Variant>,
    closed: Vec<f64>,
    oracle: Vec<f64>,
    tol: f64,
}

struct Ctx<'a> {
    cfg: &'a BatteryConfig,
    pq: PQParams,
    bg: BaseGeometry,
    theta: NormalPoint,
    chart: TotalChart<'a>,
    x: Vec<f64>,
    basis: Vec<TotalTangent>,
    coords: Vec<DVector<f64>>,
    g: DMatrix<f64>,
    out: RefCell<Vec<Entry>>,
}

impl Ctx<'_> {
    fn push(&self, quantity: &'static str, variant: Option<Variant>, mut closed: Vec<f64>, oracle: Vec<f64>, tol: f64) {
        if let Some(p) = &self.cfg.perturb {
            if p.quantity == quantity {
                closed.iter_mut().for_each(|v| *v *= p.factor);
            }
        }
        self.out.borrow_mut().push(Entry {
            quantity,
            variant,
            closed,
            oracle,
            tol,
        });
    }

    fn coords(&self, a: &TotalTangent) -> DVector<f64> {
        self.chart
            .coords_from_tangent(&self.x, a)
            .expect("chart point already validated")
    }

    fn h(&self, a: &TotalTangent, b: &TotalTangent) -> f64 {
        metric_eval(&self.pq, &self.bg, &self.theta, a, b)
    }
}

fn oracle_sectional(r: &crate::oracle::ChartRiemann, g: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let ip = |x: &DVector<f64>, y: &DVector<f64>| (x.transpose() * g * y)[(0, 0)];
    ip(&r.apply(a, b, b), a) / (ip(a, a) * ip(b, b) - ip(a, b).powi(2))
}

fn run_sample(cfg: &BatteryConfig, sub: &EmbeddedSubmanifold, pq: PQParams, theta: &NormalPoint) -> Result<Vec<Entry>> {
    let tol = cfg.tolerances;
    let bg = BaseGeometry::compute(sub, &theta.u, &cfg.fd)?;
    let chart = TotalChart::with_gauge(sub, bg.gauge.clone());
    let x = TotalChart::point(&theta.u, &theta.t);
    let (d, k) = (bg.dim_base, bg.codim);
    let n = d + k;
    let basis: Vec<TotalTangent> = (0..n).map(|a| TotalTangent::basis(a, d, k)).collect();
    let coords = basis
        .iter()
        .map(|b| chart.coords_from_tangent(&x, b))
        .collect::<Result<Vec<_>>>()?;
    let g = chart.total_metric_components(&pq, &x)?;
    let c = Ctx {
        cfg,
        pq,
        bg,
        theta: theta.clone(),
        chart,
        x,
        basis,
        coords,
        g,
        out: RefCell::new(Vec::new()),
    };

    // Connection and Koszul.
    let (mut cl, mut or, mut kz) = (Vec::new(), Vec::new(), Vec::new());
    let gamma = c.chart.fd_christoffel(&pq, &c.x, cfg.oracle.metric)?;
    for a in 0..n {
        for b in 0..n {
            let v = connection(&pq, &c.bg, &c.theta, &c.basis[a], &c.basis[b]);
            cl.extend(c.coords(&v).iter());
            let bb = c.basis[b].clone();
            let field = c.chart.lifted_field(&bb);
            let mut o = DVector::zeros(n);
            for e in 0..n {
                if c.coords[a][e] != 0.0 {
                    o += DVector::from_vec(partial4(&field, &c.x, e, cfg.oracle.metric)?) * c.coords[a][e];
                }
            }
            let w0 = &c.coords[b];
            for m in 0..n {
                o[m] += (c.coords[a].transpose() * &gamma[m] * w0)[(0, 0)];
            }
            or.extend(o.iter());
            for e in 0..n {
                kz.push(koszul_residual(&pq, &c.bg, &c.theta, &c.basis[a], &c.basis[b], &c.basis[e]));
            }
        }
    }
    c.push("connection", None, cl, or, tol.connection);
    let zeros = vec![0.0; kz.len()];
    c.push("koszul", None, kz, zeros, tol.closed);

    // Brackets.
    let theta_field = |y: &[f64]| -> Result<Vec<f64>> {
        let t = DVector::from_column_slice(&y[d..]);
        Ok(c.chart
            .coords_from_tangent(y, &TotalTangent::vertical(t, d))?
            .as_slice()
            .to_vec())
    };
    let (mut cl, mut or) = (Vec::new(), Vec::new());
    for i in 0..d {
        let xi = TotalTangent::horizontal(unit(d, i), k);
        for j in 0..d {
            let yj = TotalTangent::horizontal(unit(d, j), k);
            let cf = bracket_lifts(&c.bg, &c.theta, BracketCase::HH, &unit(d, i), &unit(d, j));
            cl.extend(c.coords(&cf).iter());
            or.extend(c.chart.fd_lie_bracket(&c.x, c.chart.lifted_field(&xi), c.chart.lifted_field(&yj), cfg.oracle.metric)?.iter());
        }
        for j in 0..k {
            let ej = TotalTangent::vertical(unit(k, j), d);
            let cf = bracket_lifts(&c.bg, &c.theta, BracketCase::HV, &unit(d, i), &unit(k, j));
            cl.extend(c.coords(&cf).iter());
            or.extend(c.chart.fd_lie_bracket(&c.x, c.chart.lifted_field(&xi), c.chart.lifted_field(&ej), cfg.oracle.metric)?.iter());
        }
        let cf = bracket_lifts(&c.bg, &c.theta, BracketCase::HTheta, &unit(d, i), &unit(k, 0));
        cl.extend(c.coords(&cf).iter());
        or.extend(c.chart.fd_lie_bracket(&c.x, c.chart.lifted_field(&xi), theta_field, cfg.oracle.metric)?.iter());
    }
    for j in 0..k {
        let ej = TotalTangent::vertical(unit(k, j), d);
        let cf = bracket_lifts(&c.bg, &c.theta, BracketCase::VTheta, &unit(k, j), &unit(k, j));
        cl.extend(c.coords(&cf).iter());
        or.extend(c.chart.fd_lie_bracket(&c.x, c.chart.lifted_field(&ej), theta_field, cfg.oracle.metric)?.iter());
    }
    c.push("bracket", None, cl, or, tol.bracket);

    // Curvature tensor, symmetries.
    let riem = c.chart.fd_riemann(&pq, &c.x, &cfg.oracle)?;
    let mut r = vec![TotalTangent::zero(d, k); n * n * n];
    let (mut cl, mut or) = (Vec::new(), Vec::new());
    for a in 0..n {
        for b in 0..n {
            for e in 0..n {
                let v = curvature_apply(&pq, &c.bg, &c.theta, &c.basis[a], &c.basis[b], &c.basis[e], Variant::Corrected);
                cl.extend(c.coords(&v).iter());
                or.extend(riem.apply(&c.coords[a], &c.coords[b], &c.coords[e]).iter());
                r[(a * n + b) * n + e] = v;
            }
        }
    }
    c.push("curvature", None, cl, or, tol.oracle);
    let rr = |a: usize, b: usize, e: usize, f: usize| c.h(&r[(a * n + b) * n + e], &c.basis[f]);
    let (mut anti, mut pair, mut bianchi) = (Vec::new(), Vec::new(), Vec::new());
    for a in 0..n {
        for b in 0..n {
            for e in 0..n {
                for f in 0..n {
                    anti.push(rr(a, b, e, f) + rr(b, a, e, f));
                    pair.push(rr(a, b, e, f) - rr(e, f, a, b));
                }
                let s = r[(a * n + b) * n + e].clone() + r[(b * n + e) * n + a].clone() + r[(e * n + a) * n + b].clone();
                bianchi.extend(s.to_vec());
            }
        }
    }
    for (name, v) in [("antisymmetry", anti), ("pair_symmetry", pair), ("first_bianchi", bianchi)] {
        let z = vec![0.0; v.len()];
        c.push(name, None, v, z, tol.closed);
    }

    // Slot variants.
    for (slots, name) in [
        (Slots::HHH, "curvature_HHH"),
        (Slots::HHV, "curvature_HHV"),
        (Slots::VVH, "curvature_VVH"),
    ] {
        let dims = slots.input_dims(d, k);
        let (mut cd, mut cc, mut or) = (Vec::new(), Vec::new(), Vec::new());
        for i in 0..dims[0] {
            for j in 0..dims[1] {
                for l in 0..dims[2] {
                    let (a, b, e) = (unit(dims[0], i), unit(dims[1], j), unit(dims[2], l));
                    let lifts = slots.lift(d, k, [&a, &b, &e]);
                    let cs: Vec<DVector<f64>> = lifts.iter().map(|t| c.coords(t)).collect();
                    or.extend(riem.apply(&cs[0], &cs[1], &cs[2]).iter());
                    let vd = curvature_tensor(&pq, &c.bg, &c.theta, slots, [&a, &b, &e], Variant::Display);
                    let vc = curvature_tensor(&pq, &c.bg, &c.theta, slots, [&a, &b, &e], Variant::Corrected);
                    cd.extend(c.coords(&vd).iter());
                    cc.extend(c.coords(&vc).iter());
                }
            }
        }
        c.push(name, Some(Variant::Display), cd, or.clone(), tol.oracle);
        c.push(name, Some(Variant::Corrected), cc, or, tol.oracle);
    }

    // Sectional curvatures.
    let et = c.bg.orthonormal_tangent_basis();
    let en = crate::curvature::adapted_normal_basis(&c.theta);
    let ko = |a: &TotalTangent, b: &TotalTangent| oracle_sectional(&riem, &c.g, &c.coords(a), &c.coords(b));
    let (mut cl, mut or) = (Vec::new(), Vec::new());
    if d >= 2 {
        let s = sectional(&pq, &c.bg, &c.theta, PlaneType::HH, &et[0], &et[1], Variant::Corrected)?;
        cl.push(s.value);
        or.push(ko(&s.first, &s.second));
    }
    if k >= 2 {
        let s = sectional(&pq, &c.bg, &c.theta, PlaneType::VV, &en[0], &en[1], Variant::Corrected)?;
        cl.push(s.value);
        or.push(ko(&s.first, &s.second));
    }
    for xe in &et {
        let s = sectional(&pq, &c.bg, &c.theta, PlaneType::HV, xe, &en[en.len() - 1], Variant::Corrected)?;
        cl.push(s.value);
        or.push(ko(&s.first, &s.second));
    }
    c.push("sectional", None, cl, or, tol.oracle);
    if k >= 2 {
        // A fibre direction neither along nor orthogonal to θ.
        let eta = (&en[0] + &en[1]) / 2f64.sqrt();
        let (mut cd, mut cc, mut or) = (Vec::new(), Vec::new(), Vec::new());
        for xe in &et {
            let sd = sectional(&pq, &c.bg, &c.theta, PlaneType::HV, xe, &eta, Variant::Display)?;
            let sc = sectional(&pq, &c.bg, &c.theta, PlaneType::HV, xe, &eta, Variant::Corrected)?;
            cd.push(sd.value);
            cc.push(sc.value);
            or.push(ko(&sc.first, &sc.second));
        }
        c.push("sectional_HV_denominator", Some(Variant::Display), cd, or.clone(), tol.oracle);
        c.push("sectional_HV_denominator", Some(Variant::Corrected), cc, or, tol.oracle);
    }

    // Scalar curvature and the orthonormal basis.
    let e = orthonormal_total_basis(&pq, &c.bg, &c.theta);
    let mut gram = Vec::new();
    for a in &e {
        for b in &e {
            gram.push(c.h(a, b));
        }
    }
    let ident: Vec<f64> = (0..n * n).map(|i| if i / n == i % n { 1.0 } else { 0.0 }).collect();
    c.push("orthonormal_basis", None, gram, ident, tol.exact);
    let s_closed = scalar_curvature(&pq, &c.bg, &c.theta);
    let s_sum = scalar_from_sectionals(&pq, &c.bg, &c.theta);
    c.push("scalar_consistency", None, vec![s_closed], vec![s_sum], 1e-8);
    let mut s_or = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            s_or += 2.0 * ko(&e[i], &e[j]);
        }
    }
    c.push("scalar_oracle", None, vec![s_closed], vec![s_or], tol.oracle_scalar);

    // Vertical coefficients.
    let s = c.theta.norm_sq();
    let kc = abc_coeffs(&pq, s);
    let kd = abc_from_display(&pq, s);
    c.push("abc_routes", None, vec![kc.a, kc.b, kc.c], vec![kd.a, kd.b, kd.c], tol.exact);
    let wq = omega_sqrtq(s, pq.q);
    let lhs = kd.a - pq.q * kd.b;
    c.push("eqabc", Some(Variant::Display), vec![wq * kc.c], vec![lhs], 1e-12);
    c.push("eqabc", Some(Variant::Corrected), vec![kc.c / wq], vec![lhs], 1e-12);
    let same = kc.a - pq.q * kc.b;
    c.push("eqabc_self_test", Some(Variant::Display), vec![same], vec![lhs], 1e-12);
    c.push("eqabc_self_test", Some(Variant::Corrected), vec![same], vec![lhs], 1e-12);
    let rperp_theta: Vec<f64> = (0..d)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| c.bg.rperp_apply(&unit(d, i), &unit(d, j), &c.theta.t).dot(&c.theta.t))
        .collect();
    let z = vec![0.0; rperp_theta.len()];
    c.push("rperp_theta_theta", None, rperp_theta, z, tol.closed);

    if k >= 2 {
        let spec = PhiSpec::new(-0.5, 0.75, k, pq)?;
        let mut alt = spec;
        alt.alpha[1] = alpha1_display(&pq, k);
        let ts = [0.0, 0.3, 1.0, 4.0, 25.0];
        let direct: Vec<f64> = ts.iter().map(|&t| phi_eval_direct(&spec, t)).collect();
        let vc: Vec<f64> = ts.iter().map(|&t| phi_eval(&spec, t)).collect();
        let vd: Vec<f64> = ts.iter().map(|&t| phi_eval(&alt, t)).collect();
        c.push("phi_alpha1", Some(Variant::Display), vd, direct.clone(), 1e-9);
        c.push("phi_alpha1", Some(Variant::Corrected), vc, direct, 1e-9);
    }

    if sub.complex().is_some() && crate::complex::require_totally_real(sub, &theta.u).is_ok() {
        complex_rows(&c, &riem)?;
    }
    Ok(c.out.into_inner())
}

fn complex_rows(c: &Ctx, _riem: &crate::oracle::ChartRiemann) -> Result<()> {
    let tol = c.cfg.tolerances;
    let pq = c.pq;
    let n = c.basis.len();
    let s = c.theta.norm_sq();
    let kj = jtilde_coeffs(&pq, s);
    let res = coefficient_residuals(&pq, s, &kj);
    c.push("jtilde_coefficients", None, res.to_vec(), vec![0.0; res.len()], 1e-12);

    let (mut sq, mut iso, mut phi_c, mut phi_d) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let j: Vec<TotalTangent> = c
        .basis
        .iter()
        .map(|a| apply_jtilde(&pq, &c.bg, &c.theta, a))
        .collect::<Result<_>>()?;
    for a in 0..n {
        let jja = apply_jtilde(&pq, &c.bg, &c.theta, &j[a])?;
        sq.extend((jja + c.basis[a].clone()).to_vec());
        for b in 0..n {
            iso.push(c.h(&j[a], &j[b]) - c.h(&c.basis[a], &c.basis[b]));
            phi_c.push(fundamental_form(&pq, &c.bg, &c.theta, &c.basis[a], &c.basis[b], Variant::Corrected)?);
            phi_d.push(fundamental_form_direct(&pq, &c.bg, &c.theta, &c.basis[a], &c.basis[b])?);
        }
    }
    let z = vec![0.0; sq.len()];
    c.push("jtilde_square", None, sq, z, tol.exact);
    let z = vec![0.0; iso.len()];
    c.push("jtilde_isometry", None, iso, z, tol.exact);
    c.push("phi_direct", None, phi_c, phi_d, tol.exact);

    let phi0 = chart_fundamental_form(&c.chart, &pq, &c.x)?;
    let (mut pd, mut pc, mut po) = (Vec::new(), Vec::new(), Vec::new());
    for a in 0..n {
        for b in 0..n {
            pd.push(fundamental_form(&pq, &c.bg, &c.theta, &c.basis[a], &c.basis[b], Variant::Display)?);
            pc.push(fundamental_form(&pq, &c.bg, &c.theta, &c.basis[a], &c.basis[b], Variant::Corrected)?);
            po.push((c.coords[a].transpose() * &phi0 * &c.coords[b])[(0, 0)]);
        }
    }
    c.push("phi_mixed_sign", Some(Variant::Display), pd, po.clone(), tol.exact);
    c.push("phi_mixed_sign", Some(Variant::Corrected), pc, po, tol.exact);

    let dphi_o = c
        .chart
        .fd_exterior_derivative(&c.x, |y| chart_fundamental_form(&c.chart, &pq, y), c.cfg.oracle.metric)?;
    let (mut lck, mut dd, mut dc, mut oracle, mut wedge) = (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for a in 0..n {
        for b in a + 1..n {
            for e in b + 1..n {
                let (ba, bb, be) = (&c.basis[a], &c.basis[b], &c.basis[e]);
                let v = dphi(&pq, &c.bg, &c.theta, ba, bb, be, Variant::Corrected)?;
                let w = alpha_wedge_phi(&pq, &c.bg, &c.theta, ba, bb, be, Variant::Corrected, 1.0)?;
                lck.push(v - w);
                dc.push(v);
                dd.push(dphi(&pq, &c.bg, &c.theta, ba, bb, be, Variant::Display)?);
                wedge.push(w);
                let mut o = 0.0;
                for i in 0..n {
                    for jj in 0..n {
                        for l in 0..n {
                            o += dphi_o[(i * n + jj) * n + l] * c.coords[a][i] * c.coords[b][jj] * c.coords[e][l];
                        }
                    }
                }
                oracle.push(o);
            }
        }
    }
    let z = vec![0.0; lck.len()];
    c.push("lck_closed", None, lck, z, tol.closed);
    c.push("lck_oracle", None, wedge, oracle.clone(), tol.oracle);
    c.push("dphi_beta_sign", Some(Variant::Display), dd, oracle.clone(), tol.oracle);
    c.push("dphi_beta_sign", Some(Variant::Corrected), dc, oracle, tol.oracle);

    if pq.p == 0.0 && pq.q == 0.0 {
        let nij = c
            .chart
            .fd_nijenhuis(&c.x, |y| chart_jtilde(&c.chart, &pq, y), c.cfg.oracle.metric)?;
        let (mut cl, mut or) = (Vec::new(), Vec::new());
        for a in 0..n {
            for b in 0..n {
                let v = nijenhuis_p0q0(&c.bg, &c.theta, &c.basis[a], &c.basis[b])? * 0.5;
                cl.extend(c.coords(&v).iter());
                let mut o = DVector::zeros(n);
                for i in 0..n {
                    for jj in 0..n {
                        o += &nij[i * n + jj] * (c.coords[a][i] * c.coords[b][jj]);
                    }
                }
                or.extend(o.iter());
            }
        }
        c.push("nijenhuis", None, cl, or, tol.oracle);
    }
    Ok(())
}

#[derive(Default)]
struct Group {
    quantity: &'static str,
    variant: Option<Variant>,
    report: Option<ComparisonReport>,
    per_sample: Vec<Vec<f64>>,
    oracle: Vec<Vec<f64>>,
}

fn group(entries: Vec<Vec<Entry>>) -> Vec<Group> {
    let mut groups: Vec<Group> = Vec::new();
    for sample in entries {
        for e in sample {
            let idx = match groups.iter().position(|g| g.quantity == e.quantity && g.variant == e.variant) {
                Some(i) => i,
                None => {
                    groups.push(Group {
                        quantity: e.quantity,
                        variant: e.variant,
                        ..Group::default()
                    });
                    groups.len() - 1
                }
            };
            let g = &mut groups[idx];
            let r = g.report.get_or_insert_with(|| {
                let mut r = ComparisonReport::new(e.quantity, e.tol);
                r.variant = e.variant;
                r
            });
            r.record_all(&e.closed, &e.oracle);
            if e.closed.len() != e.oracle.len() {
                r.record(f64::NAN, 0.0);
            }
            r.finish_sample();
            g.per_sample.push(e.closed);
            g.oracle.push(e.oracle);
        }
    }
    groups
}

fn verdict_label(v: &Verdict, degenerate: bool) -> String {
    let base = match v {
        Verdict::Selected(var) => format!("selected:{}", var.label()),
        Verdict::Inconclusive => "inconclusive".to_string(),
    };
    if degenerate {
        format!("{base};degenerate")
    } else {
        base
    }
}

struct Cell {
    preset: String,
    pq: PQParams,
    groups: Vec<Group>,
}

fn adjudication_rows(
    preset: &str,
    pq: Option<PQParams>,
    quantity: &'static str,
    display: &[Vec<f64>],
    corrected: &[Vec<f64>],
    oracle: &[Vec<f64>],
    tol: f64,
) -> Vec<ReportRow> {
    let adj = adjudicate(quantity, display, corrected, oracle, tol);
    let label = verdict_label(&adj.verdict, adj.degenerate);
    [adj.display, adj.corrected]
        .into_iter()
        .map(|report| ReportRow {
            preset: preset.to_string(),
            pq,
            kind: RowKind::Adjudication,
            report,
            verdict: label.clone(),
        })
        .collect()
}

/// Runs the battery. Rows come out in a fixed order: cells in preset then
/// `(p,q)` order, quantities in evaluation order, then the global
/// adjudication rows.
pub fn run_battery(cfg: &BatteryConfig) -> Result<BatteryReport> {
    let subs: Vec<EmbeddedSubmanifold> = cfg
        .presets
        .iter()
        .map(|name| lookup(name, None))
        .collect::<Result<_>>()?;
    run_battery_on(&subs, cfg)
}

/// [`run_battery`] on explicit submanifolds; `cfg.presets` is ignored.
pub fn run_battery_on(subs: &[EmbeddedSubmanifold], cfg: &BatteryConfig) -> Result<BatteryReport> {
    let jobs: Vec<(usize, PQParams)> = (0..subs.len())
        .flat_map(|i| cfg.pq.iter().map(move |&pq| (i, pq)))
        .collect();
    let cells: Vec<Cell> = jobs
        .par_iter()
        .map(|&(i, pq)| {
            let sub = &subs[i];
            let samples = sample_points(sub, &cfg.samples);
            let entries = samples
                .iter()
                .map(|theta| run_sample(cfg, sub, pq, theta))
                .collect::<Result<Vec<_>>>()?;
            Ok(Cell {
                preset: sub.name().to_string(),
                pq,
                groups: group(entries),
            })
        })
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    for cell in &cells {
        for g in &cell.groups {
            if g.variant.is_some() {
                continue;
            }
            let report = g.report.clone().expect("group has a report");
            let verdict = if report.passed { "pass" } else { "fail" }.to_string();
            rows.push(ReportRow {
                preset: cell.preset.clone(),
                pq: Some(cell.pq),
                kind: RowKind::Check,
                report,
                verdict,
            });
        }
        for &q in &ADJUDICATED {
            let (Some(gd), Some(gc)) = (
                cell.groups.iter().find(|g| g.quantity == q && g.variant == Some(Variant::Display)),
                cell.groups.iter().find(|g| g.quantity == q && g.variant == Some(Variant::Corrected)),
            ) else {
                continue;
            };
            let tol = gd.report.as_ref().map(|r| r.tolerance).unwrap_or(0.0);
            rows.extend(adjudication_rows(&cell.preset, Some(cell.pq), q, &gd.per_sample, &gc.per_sample, &gd.oracle, tol));
        }
    }
    for &q in &ADJUDICATED {
        let (mut dv, mut cv, mut ov, mut tol) = (Vec::new(), Vec::new(), Vec::new(), 0.0);
        for cell in &cells {
            for g in &cell.groups {
                if g.quantity != q {
                    continue;
                }
                tol = g.report.as_ref().map(|r| r.tolerance).unwrap_or(tol);
                match g.variant {
                    Some(Variant::Display) => {
                        dv.extend(g.per_sample.iter().cloned());
                        ov.extend(g.oracle.iter().cloned());
                    }
                    Some(Variant::Corrected) => cv.extend(g.per_sample.iter().cloned()),
                    None => {}
                }
            }
        }
        if !ov.is_empty() {
            rows.extend(adjudication_rows("*", None, q, &dv, &cv, &ov, tol));
        }
    }
    let failures = rows
        .iter()
        .filter(|r| r.kind == RowKind::Check && !r.report.passed)
        .count();
    Ok(BatteryReport { rows, failures })
}
