use rayon::prelude::*;

use pqbundle::battery::{run_battery, run_battery_on, RowKind};
use pqbundle::complex::{hermitian_constant_k, kahler_check, lck_check};
use pqbundle::curvature::{adapted_normal_basis, scalar_curvature, scalar_from_sectionals, sectional, PlaneType};
use pqbundle::estimates::{pipeline_constants, scalar_bound_pipeline, scan_cells};
use pqbundle::manifold::{builtin_presets, EmbeddedSubmanifold};
use pqbundle::oracle::Variant;
use pqbundle::pq_metric::{NormalPoint, PQParams};
use pqbundle::sampling::sample_points;
use pqbundle::submanifold::BaseGeometry;
use pqbundle::GeomError;

use crate::output::{num, opt, Table};
use crate::{CliError, Outcome, RunConfig};

fn require_sub(cfg: &RunConfig) -> Result<EmbeddedSubmanifold, CliError> {
    cfg.submanifold()?
        .ok_or_else(|| CliError::Config("this command needs a [submanifold] block or --preset".into()))
}

fn indexed(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

pub fn presets() -> Result<Outcome, CliError> {
    let mut t = Table::new(["name", "dim_base", "ambient_dim", "exact_derivatives", "complex_structure", "description"]);
    for p in builtin_presets() {
        t.push(vec![
            p.name.into(),
            p.dim_base.to_string(),
            p.ambient_dim.to_string(),
            p.exact_derivatives.to_string(),
            p.complex_structure.to_string(),
            p.description.into(),
        ]);
    }
    Ok(Outcome { table: t, ok: true })
}

pub fn base_geometry(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sub = require_sub(cfg)?;
    let (d, k) = (sub.dim_base(), sub.codim());
    let mut header = vec!["sample".to_string()];
    header.extend(indexed("u", d));
    for i in 0..d {
        for j in i..d {
            header.push(format!("g_{i}{j}"));
        }
    }
    header.push("scalar".into());
    header.push("rperp_max".into());
    for i in 0..d {
        for a in 0..k {
            for b in 0..k {
                header.push(format!("A_{i}_{a}{b}"));
            }
        }
    }
    for i in 0..d {
        for j in i + 1..d {
            for a in 0..k {
                for b in a + 1..k {
                    header.push(format!("R_{i}{j}_{a}{b}"));
                }
            }
        }
    }
    let mut table = Table::new(header);
    let samples = sample_points(&sub, &cfg.sample_spec());
    let fd = cfg.fd_config();
    let rows: Vec<Vec<String>> = samples
        .par_iter()
        .enumerate()
        .map(|(s, theta)| {
            let bg = BaseGeometry::compute(&sub, &theta.u, &fd)?;
            let mut r = vec![s.to_string()];
            r.extend(theta.u.iter().map(|&x| num(x)));
            for i in 0..d {
                for j in i..d {
                    r.push(num(bg.metric[(i, j)]));
                }
            }
            r.push(num(bg.scalar));
            r.push(num(bg.max_normal_curvature()));
            for i in 0..d {
                for a in 0..k {
                    for b in 0..k {
                        r.push(num(bg.connection[i][(a, b)]));
                    }
                }
            }
            for i in 0..d {
                for j in i + 1..d {
                    for a in 0..k {
                        for b in a + 1..k {
                            r.push(num(bg.normal_curvature[i * d + j][(a, b)]));
                        }
                    }
                }
            }
            Ok(r)
        })
        .collect::<Result<_, GeomError>>()?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Outcome { table, ok: true })
}

pub fn curvature_table(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sub = require_sub(cfg)?;
    let (d, k) = (sub.dim_base(), sub.codim());
    let pqs = cfg.pq_pairs()?;
    let mut header: Vec<String> = ["p", "q", "sample", "fibre"].map(String::from).to_vec();
    header.extend(indexed("u", d));
    header.extend(indexed("t", k));
    header.extend(
        ["theta_sq", "base_scalar", "scalar", "scalar_from_sectionals", "sectional_hh", "sectional_hv", "sectional_vv"]
            .map(String::from),
    );
    let mut table = Table::new(header);
    let samples = sample_points(&sub, &cfg.sample_spec());
    let fd = cfg.fd_config();
    let geoms: Vec<BaseGeometry> = samples
        .par_iter()
        .map(|th| BaseGeometry::compute(&sub, &th.u, &fd))
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(PQParams, usize, bool)> = pqs
        .iter()
        .flat_map(|&pq| (0..samples.len()).flat_map(move |s| [(pq, s, true), (pq, s, false)]))
        .collect();
    let rows: Vec<Vec<String>> = jobs
        .par_iter()
        .map(|&(pq, s, zero)| {
            let bg = &geoms[s];
            let theta = if zero {
                NormalPoint::zero(samples[s].u.clone(), k)
            } else {
                samples[s].clone()
            };
            let et = bg.orthonormal_tangent_basis();
            let en = adapted_normal_basis(&theta);
            let sec = |plane, a: &_, b: &_| -> Result<f64, GeomError> {
                Ok(sectional(&pq, bg, &theta, plane, a, b, Variant::Corrected)?.value)
            };
            let hh = if d >= 2 { Some(sec(PlaneType::HH, &et[0], &et[1])?) } else { None };
            let eta = if k >= 2 {
                (&en[0] + &en[1]) / 2f64.sqrt()
            } else {
                en[0].clone()
            };
            let hv = sec(PlaneType::HV, &et[0], &eta)?;
            let vv = if k >= 2 { Some(sec(PlaneType::VV, &en[0], &en[1])?) } else { None };
            let mut r = vec![num(pq.p), num(pq.q), s.to_string(), if zero { "zero" } else { "sample" }.to_string()];
            r.extend(theta.u.iter().map(|&x| num(x)));
            r.extend(theta.t.iter().map(|&x| num(x)));
            r.push(num(theta.norm_sq()));
            r.push(num(bg.scalar));
            r.push(num(scalar_curvature(&pq, bg, &theta)));
            r.push(num(scalar_from_sectionals(&pq, bg, &theta)));
            r.push(opt(hh));
            r.push(num(hv));
            r.push(opt(vv));
            Ok(r)
        })
        .collect::<Result<_, GeomError>>()?;
    rows.into_iter().for_each(|r| table.push(r));
    Ok(Outcome { table, ok: true })
}

pub fn scan_pq(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sub = require_sub(cfg)?;
    let target = cfg.scan.as_ref().map(|s| s.target).unwrap_or(0.0);
    let opts = cfg.pipeline_options();
    let samples = sample_points(&sub, &cfg.sample_spec());
    let fd = cfg.fd_config();
    let consts = pipeline_constants(&sub, target, &samples, &fd, &opts)?;
    let cells = scan_cells(consts.c1, consts.c2, sub.codim(), &opts.grid)?;
    let report = match scalar_bound_pipeline(&sub, target, &samples, &fd, &opts) {
        Ok(r) => Some(r),
        Err(GeomError::NotFound(msg)) => {
            eprintln!("no (p,q) found: {msg}");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let mut table = Table::new([
        "p", "q", "target", "constant", "c1", "c2", "phi_min", "phi_argmin", "positive", "selected", "min_scalar",
        "points_checked", "passed",
    ]);
    for c in &cells {
        let chosen = report.as_ref().filter(|r| r.pq == c.pq);
        table.push(vec![
            num(c.pq.p),
            num(c.pq.q),
            num(target),
            num(consts.constant),
            num(consts.c1),
            num(consts.c2),
            num(c.min_value),
            num(c.argmin),
            c.positive.to_string(),
            chosen.is_some().to_string(),
            opt(chosen.map(|r| r.min_scalar)),
            chosen.map(|r| r.points_checked.to_string()).unwrap_or_default(),
            chosen.map(|r| r.passed.to_string()).unwrap_or_default(),
        ]);
    }
    let ok = report.map(|r| r.passed).unwrap_or(true);
    Ok(Outcome { table, ok })
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let bcfg = cfg.battery_config();
    let report = match cfg.submanifold()? {
        Some(sub) => run_battery_on(&[sub], &bcfg)?,
        None => run_battery(&bcfg)?,
    };
    let mut table = Table::new([
        "preset", "p", "q", "kind", "quantity", "variant", "closed_form", "oracle", "max_deviation", "tolerance",
        "samples", "verdict",
    ]);
    for r in &report.rows {
        let c = &r.report;
        table.push(vec![
            r.preset.clone(),
            r.pq.map(|pq| num(pq.p)).unwrap_or_else(|| "*".into()),
            r.pq.map(|pq| num(pq.q)).unwrap_or_else(|| "*".into()),
            match r.kind {
                RowKind::Check => "check",
                RowKind::Adjudication => "adjudication",
            }
            .into(),
            c.quantity.clone(),
            c.variant.map(|v| v.label().to_string()).unwrap_or_default(),
            num(c.closed_form),
            num(c.oracle),
            num(c.max_deviation),
            num(c.tolerance),
            c.samples.to_string(),
            r.verdict.clone(),
        ]);
    }
    Ok(Outcome { table, ok: report.passed() })
}

pub fn complex_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let sub = require_sub(cfg)?;
    let opts = cfg.complex.clone().unwrap_or_default();
    let pqs = cfg.pq_pairs()?;
    let samples = sample_points(&sub, &cfg.sample_spec());
    let fd = cfg.fd_config();
    let results = pqs
        .par_iter()
        .map(|pq| {
            let lck = lck_check(&sub, pq, &samples, &fd, opts.alpha_scale, opts.tolerance)?;
            let kv = kahler_check(&sub, pq, &samples, &fd, opts.kahler_tolerance)?;
            Ok((*pq, lck, kv))
        })
        .collect::<Result<Vec<_>, GeomError>>()?;
    let mut table = Table::new([
        "p", "q", "lck_max_residual", "lck", "max_dphi", "almost_kahler", "max_normal_curvature", "max_nijenhuis",
        "kahler", "consistent", "hermitian_constant_k",
    ]);
    let mut ok = true;
    for (pq, lck, kv) in results {
        ok &= lck.passed && kv.consistent;
        table.push(vec![
            num(pq.p),
            num(pq.q),
            num(lck.max_residual),
            if lck.passed { "pass" } else { "fail" }.into(),
            num(lck.max_dphi),
            if lck.max_dphi < opts.tolerance { "pass" } else { "fail" }.into(),
            num(kv.max_normal_curvature),
            opt(kv.max_nijenhuis),
            if kv.kahler { "pass" } else { "fail" }.into(),
            kv.consistent.to_string(),
            num(hermitian_constant_k(&pq)),
        ]);
    }
    Ok(Outcome { table, ok })
}
