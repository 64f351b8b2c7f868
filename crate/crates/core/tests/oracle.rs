use nalgebra::{DMatrix, DVector};

use pqbundle::complex::{chart_fundamental_form, chart_jtilde, dphi, fundamental_form, nijenhuis_p0q0};
use pqbundle::curvature::{curvature_tensor, Slots};
use pqbundle::fd::{observed_order, FdConfig};
use pqbundle::manifold::lookup;
use pqbundle::oracle::{OracleConfig, TotalChart, Variant};
use pqbundle::pq_metric::{connection, metric_eval, NormalPoint, PQParams, TotalTangent};
use pqbundle::submanifold::{unit, BaseGeometry};

struct At {
    bg: BaseGeometry,
    theta: NormalPoint,
    x: Vec<f64>,
    basis: Vec<TotalTangent>,
    coords: Vec<DVector<f64>>,
}

fn at<'a>(sub: &'a pqbundle::manifold::EmbeddedSubmanifold, u: &[f64], t: &[f64]) -> (TotalChart<'a>, At) {
    let bg = BaseGeometry::compute(sub, u, &FdConfig::default()).unwrap();
    let chart = TotalChart::with_gauge(sub, bg.gauge.clone());
    let theta = NormalPoint::new(u.to_vec(), DVector::from_column_slice(t));
    let x = TotalChart::point(u, &theta.t);
    let (d, k) = (bg.dim_base, bg.codim);
    let basis: Vec<TotalTangent> = (0..d + k).map(|a| TotalTangent::basis(a, d, k)).collect();
    let coords = basis.iter().map(|b| chart.coords_from_tangent(&x, b).unwrap()).collect();
    (chart, At { bg, theta, x, basis, coords })
}

#[test]
fn metric_components() {
    let plane = lookup("plane_r2_in_r4", None).unwrap();
    let chart = TotalChart::new(&plane, &[0.4, 0.1]).unwrap();
    let g = chart.total_metric_components(&PQParams::sasaki(), &[0.4, 0.1, 0.5, -1.0]).unwrap();
    assert!((g - DMatrix::<f64>::identity(4, 4)).amax() < 1e-15);

    let sub = lookup("graph_surface_r4", None).unwrap();
    let pq = PQParams::new(1.0, 1.0).unwrap();
    let (chart, a) = at(&sub, &[0.3, -0.2], &[0.0, 0.0]);
    let g = chart.total_metric_components(&pq, &a.x).unwrap();
    assert!(g.view((0, 2), (2, 2)).amax() < 1e-15);
    assert!((g.view((2, 2), (2, 2)) - DMatrix::<f64>::identity(2, 2)).amax() < 1e-15);
    assert!((g.view((0, 0), (2, 2)) - &a.bg.metric).amax() < 1e-13);

    let (chart, a) = at(&sub, &[0.3, -0.2], &[0.7, -0.4]);
    let g = chart.total_metric_components(&pq, &a.x).unwrap();
    assert!(g.clone().symmetric_eigenvalues().min() > 1e-3);
    for i in 0..4 {
        for j in 0..4 {
            let h = metric_eval(&pq, &a.bg, &a.theta, &a.basis[i], &a.basis[j]);
            let c = (a.coords[i].transpose() * &g * &a.coords[j])[(0, 0)];
            assert!((h - c).abs() < 1e-13);
        }
    }
}

#[test]
fn christoffels() {
    let plane = lookup("plane_r2_in_r4", None).unwrap();
    let chart = TotalChart::new(&plane, &[0.0, 0.0]).unwrap();
    let gamma = chart.fd_christoffel(&PQParams::sasaki(), &[0.0, 0.0, 0.3, 0.2], 1e-3).unwrap();
    assert!(gamma.iter().all(|m| m.amax() < 1e-8));

    // Vertical-vertical block vanishes on the zero section.
    let sub = lookup("graph_surface_r4", None).unwrap();
    let pq = PQParams::new(1.0, 1.0).unwrap();
    let (chart, a) = at(&sub, &[0.3, -0.2], &[0.0, 0.0]);
    let gamma = chart.fd_christoffel(&pq, &a.x, 1e-3).unwrap();
    for m in &gamma {
        assert!((m - m.transpose()).amax() < 1e-12);
        assert!(m.view((2, 2), (2, 2)).amax() < 1e-6);
    }

    // Step halving against the closed-form connection.
    let (chart, a) = at(&sub, &[0.3, -0.2], &[0.7, -0.4]);
    let err = |h: f64| {
        let mut e = 0.0f64;
        for i in 0..4 {
            for j in 0..4 {
                let c = chart
                    .coords_from_tangent(&a.x, &connection(&pq, &a.bg, &a.theta, &a.basis[i], &a.basis[j]))
                    .unwrap();
                let o = chart.covariant_derivative(&pq, &a.x, &a.coords[i], chart.lifted_field(&a.basis[j]), h).unwrap();
                e = e.max((c - o).amax());
            }
        }
        e
    };
    let (e1, e2) = (err(4e-2), err(2e-2));
    assert!(observed_order(e1, e2) >= 1.9, "{e1:e} {e2:e}");
    assert!(err(1e-3) < 1e-8);
}

#[test]
fn riemann_on_graph_surface() {
    let sub = lookup("graph_surface_r4", None).unwrap();
    let (chart, a) = at(&sub, &[0.3, -0.2], &[0.7, -0.4]);
    for (p, q) in [(0.0, 0.0), (1.0, 1.0), (-1.0, 2.0), (2.0, 0.0)] {
        let pq = PQParams::new(p, q).unwrap();
        let r = chart.fd_riemann(&pq, &a.x, &OracleConfig::default()).unwrap();
        let g = chart.total_metric_components(&pq, &a.x).unwrap();
        let n = 4;
        let low = |i: usize, j: usize, k: usize, l: usize| {
            (r.apply(&a.coords[i], &a.coords[j], &a.coords[k]).transpose() * &g * &a.coords[l])[(0, 0)]
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let bianchi = r.apply(&unit(n, i), &unit(n, j), &unit(n, k))
                        + r.apply(&unit(n, j), &unit(n, k), &unit(n, i))
                        + r.apply(&unit(n, k), &unit(n, i), &unit(n, j));
                    assert!(bianchi.amax() < 1e-4);
                    for l in 0..n {
                        assert!((low(i, j, k, l) + low(i, j, l, k)).abs() < 1e-4);
                    }
                }
            }
        }
        // Each slot family against the oracle; the display forms of the
        // three corrected slots must miss wherever they differ.
        for s in Slots::ALL {
            let dims = s.input_dims(2, 2);
            let (mut ec, mut ed) = (0.0f64, 0.0f64);
            for i in 0..dims[0] {
                for j in 0..dims[1] {
                    for l in 0..dims[2] {
                        let v = [unit(dims[0], i), unit(dims[1], j), unit(dims[2], l)];
                        let lifts = s.lift(2, 2, [&v[0], &v[1], &v[2]]);
                        let cs: Vec<_> = lifts.iter().map(|t| chart.coords_from_tangent(&a.x, t).unwrap()).collect();
                        let o = r.apply(&cs[0], &cs[1], &cs[2]);
                        for (var, e) in [(Variant::Corrected, &mut ec), (Variant::Display, &mut ed)] {
                            let c = curvature_tensor(&pq, &a.bg, &a.theta, s, [&v[0], &v[1], &v[2]], var);
                            *e = e.max((chart.coords_from_tangent(&a.x, &c).unwrap() - &o).amax());
                        }
                    }
                }
            }
            assert!(ec < 1e-4, "{} corrected {ec:e}", s.label());
            let differs = match s {
                Slots::HHH => true,
                Slots::HHV => p != 0.0 && p != 1.0,
                Slots::VVH => p != 0.0,
                _ => false,
            };
            if differs {
                assert!(ed > 1e-2, "{} display {ed:e} at p={p} q={q}", s.label());
            }
        }
    }
}

#[test]
fn vv_sectional_on_zero_section() {
    let plane = lookup("plane_r2_in_r4", None).unwrap();
    let pq = PQParams::new(1.0, 1.0).unwrap();
    let (chart, a) = at(&plane, &[0.1, 0.2], &[0.0, 0.0]);
    let r = chart.fd_riemann(&pq, &a.x, &OracleConfig::default()).unwrap();
    let g = chart.total_metric_components(&pq, &a.x).unwrap();
    let (e, f) = (&a.coords[2], &a.coords[3]);
    let ip = |v: &DVector<f64>, w: &DVector<f64>| (v.transpose() * &g * w)[(0, 0)];
    let k = ip(&r.apply(e, f, f), e) / (ip(e, e) * ip(f, f) - ip(e, f).powi(2));
    assert!((k - 3.0).abs() < 1e-3);
}

#[test]
fn lie_brackets() {
    let sub = lookup("graph_surface_r4", None).unwrap();
    let (chart, a) = at(&sub, &[0.3, -0.2], &[0.7, -0.4]);
    let h = 1e-3;
    let coord = |i: usize| move |_: &[f64]| Ok(unit(4, i).as_slice().to_vec());
    assert!(chart.fd_lie_bracket(&a.x, coord(0), coord(3), h).unwrap().amax() < 1e-12);

    let theta_field = |y: &[f64]| {
        let t = DVector::from_column_slice(&y[2..]);
        Ok(chart.coords_from_tangent(y, &TotalTangent::vertical(t, 2))?.as_slice().to_vec())
    };
    for al in 0..2 {
        let xi = TotalTangent::vertical(unit(2, al), 2);
        let b = chart.fd_lie_bracket(&a.x, chart.lifted_field(&xi), theta_field, h).unwrap();
        assert!((b - chart.coords_from_tangent(&a.x, &xi).unwrap()).amax() < 1e-6);
    }
    let (x, y) = (TotalTangent::horizontal(unit(2, 0), 2), TotalTangent::horizontal(unit(2, 1), 2));
    let b = chart.fd_lie_bracket(&a.x, chart.lifted_field(&x), chart.lifted_field(&y), h).unwrap();
    let b = chart.tangent_from_coords(&a.x, &b).unwrap();
    let want = -a.bg.rperp_apply(&unit(2, 0), &unit(2, 1), &a.theta.t);
    assert!(b.h.amax() < 1e-6);
    assert!((b.v - want).amax() < 1e-5);
}

#[test]
fn exterior_derivatives_and_torsion() {
    let sub = lookup("lagrangian_graph_r4", None).unwrap();
    let (chart, a) = at(&sub, &[0.2, -0.3], &[0.6, -0.8]);
    let constant = DMatrix::from_fn(4, 4, |i, j| (i as f64) - (j as f64));
    let d0 = chart.fd_exterior_derivative(&a.x, |_| Ok(constant.clone()), 1e-3).unwrap();
    assert!(d0.iter().all(|v| v.abs() < 1e-12));

    for (p, q) in [(0.0, 0.0), (1.0, 1.0), (-1.0, 2.0)] {
        let pq = PQParams::new(p, q).unwrap();
        let phi0 = chart_fundamental_form(&chart, &pq, &a.x).unwrap();
        let dphi_o = chart.fd_exterior_derivative(&a.x, |y| chart_fundamental_form(&chart, &pq, y), 1e-3).unwrap();
        let (mut ef, mut ec, mut ed) = (0.0f64, 0.0f64, 0.0f64);
        for i in 0..4 {
            for j in 0..4 {
                let f = fundamental_form(&pq, &a.bg, &a.theta, &a.basis[i], &a.basis[j], Variant::Corrected).unwrap();
                ef = ef.max((f - (a.coords[i].transpose() * &phi0 * &a.coords[j])[(0, 0)]).abs());
                for k in 0..4 {
                    let mut o = 0.0;
                    for r in 0..4 {
                        for s in 0..4 {
                            for t in 0..4 {
                                o += dphi_o[(r * 4 + s) * 4 + t] * a.coords[i][r] * a.coords[j][s] * a.coords[k][t];
                            }
                        }
                    }
                    let args = (&a.basis[i], &a.basis[j], &a.basis[k]);
                    ec = ec.max((dphi(&pq, &a.bg, &a.theta, args.0, args.1, args.2, Variant::Corrected).unwrap() - o).abs());
                    ed = ed.max((dphi(&pq, &a.bg, &a.theta, args.0, args.1, args.2, Variant::Display).unwrap() - o).abs());
                    if p == 0.0 && q == 0.0 {
                        assert!(o.abs() < 1e-6);
                    }
                }
            }
        }
        assert!(ef < 1e-12);
        assert!(ec < 1e-4);
        if q != 0.0 {
            assert!(ed > 1e-2);
        }
    }

    let pq = PQParams::sasaki();
    let nij = chart.fd_nijenhuis(&a.x, |y| chart_jtilde(&chart, &pq, y), 1e-3).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let c = nijenhuis_p0q0(&a.bg, &a.theta, &a.basis[i], &a.basis[j]).unwrap() * 0.5;
            let c = chart.coords_from_tangent(&a.x, &c).unwrap();
            let mut o = DVector::zeros(4);
            for r in 0..4 {
                for s in 0..4 {
                    o += &nij[r * 4 + s] * (a.coords[i][r] * a.coords[j][s]);
                }
            }
            assert!((c - o).amax() < 1e-4);
        }
    }
}
