//! Acceptance run: one PASS/FAIL line per criterion. Exits non-zero when any
//! criterion fails.

use std::time::{Duration, Instant};

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use pqbundle::battery::{default_pq_grid, run_battery, BatteryConfig, RowKind, ADJUDICATED};
use pqbundle::complex::{
    alpha_wedge_phi, apply_jtilde, chart_fundamental_form, coefficient_residuals, hermitian_constant_k,
    jtilde_coeffs, kahler_check, lck_check,
};
use pqbundle::curvature::{
    adapted_normal_basis, eqabc_residual_corrected, eqabc_residual_stated, flatness_check, scalar_curvature,
    scalar_from_sectionals, sectional, PlaneType,
};
use pqbundle::estimates::{phi_alphas, scalar_bound_pipeline, PipelineOptions};
use pqbundle::fd::FdConfig;
use pqbundle::manifold::{builtin_presets, lookup, CORE_PRESETS};
use pqbundle::oracle::{OracleConfig, TotalChart, Variant};
use pqbundle::pq_metric::{connection, metric_eval, NormalPoint, PQParams, TotalTangent};
use pqbundle::sampling::{sample_points, SampleSpec};
use pqbundle::submanifold::BaseGeometry;
use pqbundle::Result;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn lifted_basis(d: usize, k: usize) -> Vec<TotalTangent> {
    (0..d + k).map(|a| TotalTangent::basis(a, d, k)).collect()
}

fn c1_eqabc() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut stated, mut corrected) = (0.0f64, 0.0f64);
    for _ in 0..1000 {
        let pq = PQParams::new(rng.random_range(-5.0..=5.0), rng.random_range(0.0..=10.0))?;
        let s = rng.random_range(0.0..=100.0);
        stated = stated.max(eqabc_residual_stated(&pq, s).abs());
        corrected = corrected.max(eqabc_residual_corrected(&pq, s).abs());
    }
    outcome(
        stated < 1e-12,
        format!("max |a - qb - w_sqrtq c| = {stated:.3e} (tol 1e-12); with c/w_sqrtq instead: {corrected:.3e}"),
    )
}

fn c2_connection() -> Result<Outcome> {
    let cfg = FdConfig::default();
    let oc = OracleConfig::default();
    let mut worst = 0.0f64;
    let mut count = 0;
    for name in CORE_PRESETS {
        let sub = lookup(name, None)?;
        for theta in sample_points(&sub, &SampleSpec::default()) {
            let bg = BaseGeometry::compute(&sub, &theta.u, &cfg)?;
            let chart = TotalChart::with_gauge(&sub, bg.gauge.clone());
            let x = TotalChart::point(&theta.u, &theta.t);
            let basis = lifted_basis(bg.dim_base, bg.codim);
            for pq in default_pq_grid() {
                for a in &basis {
                    let ca = chart.coords_from_tangent(&x, a)?;
                    for b in &basis {
                        let closed = chart.coords_from_tangent(&x, &connection(&pq, &bg, &theta, a, b))?;
                        let oracle = chart.covariant_derivative(&pq, &x, &ca, chart.lifted_field(b), oc.metric)?;
                        worst = worst.max((closed - oracle).amax());
                    }
                }
                count += 1;
            }
        }
    }
    outcome(worst <= 1e-5, format!("max deviation {worst:.3e} over {count} (preset, pq, sample) points (tol 1e-5)"))
}

fn c3_curvature() -> Result<Outcome> {
    let report = run_battery(&BatteryConfig::default())?;
    let curv: Vec<_> = report
        .rows
        .iter()
        .filter(|r| r.kind == RowKind::Check && r.report.quantity == "curvature")
        .collect();
    let worst = curv.iter().map(|r| r.report.max_deviation).fold(0.0, f64::max);
    let all_curv = curv.iter().all(|r| r.report.passed) && curv.len() == builtin_presets().len() * 4;
    let mut verdicts = Vec::new();
    let mut one_each = true;
    for q in ADJUDICATED {
        let v = report.verdict(q).unwrap_or("missing");
        if q == "eqabc_self_test" {
            one_each &= v.contains("degenerate");
        } else {
            one_each &= v.starts_with("selected:");
        }
        verdicts.push(format!("{q}={v}"));
    }
    outcome(
        all_curv && one_each,
        format!("max curvature deviation {worst:.3e} (tol 1e-4); {}", verdicts.join(" ")),
    )
}

fn c4_flatness() -> Result<Outcome> {
    let fd = FdConfig::default();
    let spec = SampleSpec::default();
    let plane = lookup("plane_r2_in_r4", None)?;
    let samples = sample_points(&plane, &spec);
    let sasaki = PQParams::sasaki();
    let closed = flatness_check(&plane, &sasaki, &samples, &fd, 1e-9)?;
    let mut oracle = 0.0f64;
    for theta in &samples {
        let chart = TotalChart::new(&plane, &theta.u)?;
        let r = chart.fd_riemann(&sasaki, &TotalChart::point(&theta.u, &theta.t), &OracleConfig::default())?;
        oracle = oracle.max(r.data.iter().fold(0.0, |m, v| m.max(v.abs())));
    }
    let pq = PQParams::new(1.0, 1.0)?;
    let u = vec![0.3, -0.4];
    let theta = NormalPoint::zero(u.clone(), 2);
    let bg = BaseGeometry::compute(&plane, &u, &fd)?;
    let en = adapted_normal_basis(&theta);
    let sv = sectional(&pq, &bg, &theta, PlaneType::VV, &en[0], &en[1], Variant::Corrected)?;
    let chart = TotalChart::with_gauge(&plane, bg.gauge.clone());
    let x = TotalChart::point(&u, &theta.t);
    let r = chart.fd_riemann(&pq, &x, &OracleConfig::default())?;
    let g = chart.total_metric_components(&pq, &x)?;
    let (a, b) = (chart.coords_from_tangent(&x, &sv.first)?, chart.coords_from_tangent(&x, &sv.second)?);
    let ip = |v: &DVector<f64>, w: &DVector<f64>| (v.transpose() * &g * w)[(0, 0)];
    let k_oracle = ip(&r.apply(&a, &b, &b), &a) / (ip(&a, &a) * ip(&b, &b) - ip(&a, &b).powi(2));
    let curve = lookup("curve_in_r2", None)?;
    let cs = sample_points(&curve, &spec);
    let mut curve_max = 0.0f64;
    for (p, q) in [(0.0, 0.0), (7.0, 2.0)] {
        let rep = flatness_check(&curve, &PQParams::new(p, q)?, &cs, &fd, 1e-9)?;
        curve_max = curve_max.max(rep.max_component);
    }
    let pass = closed.max_component < 1e-9
        && oracle < 1e-6
        && (sv.value - 3.0).abs() < 1e-10
        && (k_oracle - 3.0).abs() < 1e-3
        && curve_max < 1e-9;
    outcome(
        pass,
        format!(
            "plane (0,0): closed {:.1e}, oracle {oracle:.1e}; plane (1,1) VV at zero section: closed {}, oracle {k_oracle:.6}; curve max {curve_max:.1e}",
            closed.max_component, sv.value
        ),
    )
}

fn c5_scalar() -> Result<Outcome> {
    let fd = FdConfig::default();
    let (mut sum_err, mut zero_err) = (0.0f64, 0.0f64);
    for p in builtin_presets() {
        let sub = lookup(p.name, None)?;
        let k = sub.codim() as f64;
        for theta in sample_points(&sub, &SampleSpec::default()) {
            let bg = BaseGeometry::compute(&sub, &theta.u, &fd)?;
            let zero = NormalPoint::zero(theta.u.clone(), sub.codim());
            for pq in default_pq_grid() {
                let s = scalar_curvature(&pq, &bg, &theta);
                sum_err = sum_err.max((s - scalar_from_sectionals(&pq, &bg, &theta)).abs());
                let want = bg.scalar + k * (k - 1.0) * (2.0 * pq.p + pq.q);
                zero_err = zero_err.max((scalar_curvature(&pq, &bg, &zero) - want).abs());
            }
        }
    }
    outcome(
        sum_err < 1e-8 && zero_err < 1e-10,
        format!("vs twice the sectional sum {sum_err:.3e} (tol 1e-8); zero section {zero_err:.3e} (tol 1e-10)"),
    )
}

fn c6_positivity() -> Result<Outcome> {
    let fd = FdConfig::default();
    let opts = PipelineOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, target) in [("plane_r2_in_r4", 10.0), ("helix_r1_in_r3", 0.0)] {
        let sub = lookup(name, None)?;
        let samples = sample_points(&sub, &SampleSpec::default());
        let rep = scalar_bound_pipeline(&sub, target, &samples, &fd, &opts)?;
        // Independent re-evaluation at the sampled points.
        let mut min = f64::INFINITY;
        for theta in &samples {
            let bg = BaseGeometry::compute(&sub, &theta.u, &fd)?;
            min = min.min(scalar_curvature(&rep.pq, &bg, theta));
        }
        pass &= rep.passed && min > target;
        parts.push(format!(
            "{name}: (p,q)=({},{}) min S {min:.4} > {target} over samples, {:.4} over {} radial points",
            rep.pq.p, rep.pq.q, rep.min_scalar, rep.points_checked
        ));
    }
    outcome(pass, parts.join("; "))
}

fn c7_almost_hermitian() -> Result<Outcome> {
    let sub = lookup("lagrangian_rk_in_r2k", Some(2))?;
    let fd = FdConfig::default();
    let (mut sq, mut iso, mut coef) = (0.0f64, 0.0f64, 0.0f64);
    for theta in sample_points(&sub, &SampleSpec::default()) {
        let bg = BaseGeometry::compute(&sub, &theta.u, &fd)?;
        let basis = lifted_basis(bg.dim_base, bg.codim);
        for pq in default_pq_grid() {
            let s = theta.norm_sq();
            for r in coefficient_residuals(&pq, s, &jtilde_coeffs(&pq, s)) {
                coef = coef.max(r.abs());
            }
            let j: Vec<TotalTangent> = basis.iter().map(|a| apply_jtilde(&pq, &bg, &theta, a)).collect::<Result<_>>()?;
            for (a, ja) in basis.iter().zip(&j) {
                let jja = apply_jtilde(&pq, &bg, &theta, ja)?;
                sq = sq.max((jja + a.clone()).amax());
                for (b, jb) in basis.iter().zip(&j) {
                    iso = iso.max((metric_eval(&pq, &bg, &theta, ja, jb) - metric_eval(&pq, &bg, &theta, a, b)).abs());
                }
            }
        }
    }
    outcome(
        sq < 1e-11 && iso < 1e-11 && coef < 1e-12,
        format!("|J^2 + I| {sq:.3e}, |h(J.,J.) - h| {iso:.3e} (tol 1e-11); coefficient residuals {coef:.3e} (tol 1e-12)"),
    )
}

fn c8_lck() -> Result<Outcome> {
    let fd = FdConfig::default();
    let oc = OracleConfig::default();
    let (mut closed, mut oracle, mut dphi0) = (0.0f64, 0.0f64, 0.0f64);
    let mut kahler_ok = true;
    let mut notes = Vec::new();
    for name in ["lagrangian_rk_in_r2k", "lagrangian_graph_r4"] {
        let sub = lookup(name, None)?;
        let samples = sample_points(&sub, &SampleSpec::default());
        for pq in default_pq_grid() {
            let rep = lck_check(&sub, &pq, &samples, &fd, 1.0, 1e-9)?;
            closed = closed.max(rep.max_residual);
            if pq.p == 0.0 && pq.q == 0.0 {
                dphi0 = dphi0.max(rep.max_dphi);
                let kv = kahler_check(&sub, &pq, &samples, &fd, 1e-7)?;
                kahler_ok &= kv.consistent && kv.kahler == (kv.max_normal_curvature < 1e-7);
                notes.push(format!("{name} kahler={} (max R_perp {:.2e})", kv.kahler, kv.max_normal_curvature));
            }
            for theta in &samples {
                let bg = BaseGeometry::compute(&sub, &theta.u, &fd)?;
                let chart = TotalChart::with_gauge(&sub, bg.gauge.clone());
                let x = TotalChart::point(&theta.u, &theta.t);
                let dphi = chart.fd_exterior_derivative(&x, |y| chart_fundamental_form(&chart, &pq, y), oc.metric)?;
                let basis = lifted_basis(bg.dim_base, bg.codim);
                let coords: Vec<DVector<f64>> =
                    basis.iter().map(|b| chart.coords_from_tangent(&x, b)).collect::<Result<_>>()?;
                let n = basis.len();
                for a in 0..n {
                    for b in a + 1..n {
                        for c in b + 1..n {
                            let w = alpha_wedge_phi(&pq, &bg, theta, &basis[a], &basis[b], &basis[c], Variant::Corrected, 1.0)?;
                            let mut o = 0.0;
                            for i in 0..n {
                                for j in 0..n {
                                    for l in 0..n {
                                        o += dphi[(i * n + j) * n + l] * coords[a][i] * coords[b][j] * coords[c][l];
                                    }
                                }
                            }
                            oracle = oracle.max((o - w).abs());
                        }
                    }
                }
            }
        }
    }
    outcome(
        closed < 1e-9 && oracle < 1e-4 && dphi0 < 1e-9 && kahler_ok,
        format!(
            "closed {closed:.3e} (tol 1e-9), oracle {oracle:.3e} (tol 1e-4), |dphi| at p=q=0 {dphi0:.1e}; {}",
            notes.join(", ")
        ),
    )
}

fn c9_formulas() -> Result<Outcome> {
    let k = |p, q| -> Result<f64> { Ok(hermitian_constant_k(&PQParams::new(p, q)?)) };
    let exact = k(0.0, 0.0)? == 0.0 && k(0.0, 3.0)? == 0.5 && k(1.0, 0.0)? == 1.0;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ids = true;
    for _ in 0..1000 {
        let (p, q) = (rng.random_range(-10.0..=10.0), rng.random_range(0.0..=50.0));
        let d: usize = rng.random_range(2..=12);
        let a = phi_alphas(&PQParams::new(p, q)?, d);
        let df = d as f64;
        ids &= a[0] == (df - 2.0) * q * q && a[3] == df * (2.0 * p + q);
    }
    outcome(exact && ids, format!("K(0,0), K(0,3), K(1,0) = {}, {}, {}; alpha0/alpha3 identities exact: {ids}", k(0.0, 0.0)?, k(0.0, 3.0)?, k(1.0, 0.0)?))
}

fn c10_determinism() -> Result<Outcome> {
    let render = || -> std::result::Result<Vec<u8>, String> {
        let cfg = pqbundle_cli::RunConfig::default();
        let out = pqbundle_cli::execute(pqbundle_cli::Command::Verify, &cfg).map_err(|e| e.to_string())?;
        let header = format!(
            "# config_hash={} seed={}",
            pqbundle_cli::config_hash(&cfg).map_err(|e| e.to_string())?,
            cfg.samples.seed
        );
        let mut buf = Vec::new();
        out.table.write(&mut buf, &header).map_err(|e| e.to_string())?;
        Ok(buf)
    };
    match (render(), render()) {
        (Ok(a), Ok(b)) => outcome(a == b && !a.is_empty(), format!("two verify reports, {} bytes, identical: {}", a.len(), a == b)),
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("verify failed: {e}")),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Result<Outcome>, Option<Duration>); 10] = [
        ("vertical coefficient identity", c1_eqabc, Some(Duration::from_secs(1))),
        ("Levi-Civita connection vs oracle", c2_connection, Some(Duration::from_secs(30))),
        ("curvature vs oracle and adjudication", c3_curvature, Some(Duration::from_secs(120))),
        ("flatness", c4_flatness, None),
        ("scalar curvature consistency", c5_scalar, None),
        ("positivity pipeline", c6_positivity, Some(Duration::from_secs(60))),
        ("almost-Hermitian structure", c7_almost_hermitian, None),
        ("LCK identity and Kahler verdict", c8_lck, None),
        ("formula evaluators", c9_formulas, None),
        ("determinism of verify", c10_determinism, None),
    ];
    let mut failed = 0;
    for (i, (name, f, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = f();
        let dt = start.elapsed();
        let (pass, detail) = match res {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let in_time = budget.map_or(true, |b| dt <= b);
        let ok = pass && in_time;
        if !ok {
            failed += 1;
        }
        let budget = budget.map(|b| format!(" / budget {:.0}s", b.as_secs_f64())).unwrap_or_default();
        println!(
            "criterion {:>2} {}: {} ({}) [{:.2}s{}]",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            name,
            detail,
            dt.as_secs_f64(),
            budget
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
