//! Brute-force coordinate layer on the normal bundle.
//!
//! Coordinates are `(u, t)`: base parameters and frame components, with the
//! frame gauge fixed at construction. A coordinate vector converts to a split
//! tangent as `∂_{u^i} ↦ (e_i, A_i t)` and `∂_{t^α} ↦ (0, e_α)`. Everything
//! downstream (Christoffels, curvature, brackets, exterior derivatives,
//! Nijenhuis torsion) is central finite differences of the metric
//! components and field coefficients in these coordinates.

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::fd::partial4;
use crate::manifold::EmbeddedSubmanifold;
use crate::pq_metric::{metric_eval_with, PQParams, TotalTangent};
use crate::submanifold::{choose_gauge, normal_connection_in_gauge, Gauge};

/// Oracle step sizes: `metric` for first derivatives of the metric
/// components and field coefficients, `curvature` for the second layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    pub metric: f64,
    pub curvature: f64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            metric: 5e-4,
            curvature: 1.25e-3,
        }
    }
}

/// Coordinates `(u, t)` on the normal bundle over one chart.
#[derive(Debug, Clone)]
pub struct TotalChart<'a> {
    sub: &'a EmbeddedSubmanifold,
    gauge: Gauge,
}

/// Riemann tensor `R^a_{bcd}` of the total space in chart coordinates,
/// with `R(∂_c, ∂_d)∂_b = R^a_{bcd} ∂_a`.
#[derive(Debug, Clone)]
pub struct ChartRiemann {
    pub dim: usize,
    pub data: Vec<f64>,
}

impl ChartRiemann {
    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        let n = self.dim;
        self.data[((a * n + b) * n + c) * n + d]
    }

    /// `R(X, Y)Z` on coordinate vectors.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |a, _| {
            let mut s = 0.0;
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        s += self.get(a, b, c, d) * z[b] * x[c] * y[d];
                    }
                }
            }
            s
        })
    }
}

impl<'a> TotalChart<'a> {
    /// Chart with the frame gauge chosen at `u`.
    pub fn new(sub: &'a EmbeddedSubmanifold, u: &[f64]) -> Result<Self> {
        Ok(TotalChart {
            sub,
            gauge: choose_gauge(sub, u)?,
        })
    }

    pub fn with_gauge(sub: &'a EmbeddedSubmanifold, gauge: Gauge) -> Self {
        TotalChart { sub, gauge }
    }

    pub fn gauge(&self) -> &Gauge {
        &self.gauge
    }

    pub fn submanifold(&self) -> &'a EmbeddedSubmanifold {
        self.sub
    }

    /// `d + d'`.
    pub fn dim(&self) -> usize {
        self.sub.ambient_dim()
    }

    /// Chart point from base parameters and fibre components.
    pub fn point(u: &[f64], t: &DVector<f64>) -> Vec<f64> {
        u.iter().chain(t.iter()).copied().collect()
    }

    fn split<'x>(&self, x: &'x [f64]) -> (&'x [f64], DVector<f64>) {
        let d = self.sub.dim_base();
        (&x[..d], DVector::from_column_slice(&x[d..]))
    }

    fn induced_metric(&self, u: &[f64]) -> Result<DMatrix<f64>> {
        let (_, d1) = self.sub.first_jet(u)?;
        let t = DMatrix::from_columns(&d1);
        Ok(t.transpose() * &t)
    }

    /// Split tangent of a coordinate vector at `x`.
    pub fn tangent_from_coords(&self, x: &[f64], c: &DVector<f64>) -> Result<TotalTangent> {
        let (u, t) = self.split(x);
        let a = normal_connection_in_gauge(self.sub, u, &self.gauge)?;
        Ok(self.tangent_from_coords_with(&a, &t, c))
    }

    fn tangent_from_coords_with(
        &self,
        a: &[DMatrix<f64>],
        t: &DVector<f64>,
        c: &DVector<f64>,
    ) -> TotalTangent {
        let d = self.sub.dim_base();
        let h = c.rows(0, d).into_owned();
        let mut v = c.rows(d, c.len() - d).into_owned();
        for i in 0..d {
            v += &a[i] * t * h[i];
        }
        TotalTangent::new(h, v)
    }

    /// Coordinate vector of a split tangent at `x`.
    pub fn coords_from_tangent(&self, x: &[f64], a: &TotalTangent) -> Result<DVector<f64>> {
        let (u, t) = self.split(x);
        let conn = normal_connection_in_gauge(self.sub, u, &self.gauge)?;
        Ok(self.coords_from_tangent_with(&conn, &t, a))
    }

    fn coords_from_tangent_with(
        &self,
        conn: &[DMatrix<f64>],
        t: &DVector<f64>,
        a: &TotalTangent,
    ) -> DVector<f64> {
        let d = self.sub.dim_base();
        let mut v = a.v.clone();
        for i in 0..d {
            v -= &conn[i] * t * a.h[i];
        }
        DVector::from_iterator(d + v.len(), a.h.iter().chain(v.iter()).copied())
    }

    /// Coordinate coefficients of the lift of `a` (constant coordinate and
    /// frame components) as a field on the chart.
    pub fn lifted_field<'s>(
        &'s self,
        a: &'s TotalTangent,
    ) -> impl Fn(&[f64]) -> Result<Vec<f64>> + 's {
        move |x: &[f64]| Ok(self.coords_from_tangent(x, a)?.as_slice().to_vec())
    }

    /// Metric components `G_ab` at `x`.
    pub fn total_metric_components(&self, pq: &PQParams, x: &[f64]) -> Result<DMatrix<f64>> {
        let (u, t) = self.split(x);
        let g = self.induced_metric(u)?;
        let conn = normal_connection_in_gauge(self.sub, u, &self.gauge)?;
        let n = self.dim();
        let basis: Vec<TotalTangent> = (0..n)
            .map(|a| {
                let mut e = DVector::zeros(n);
                e[a] = 1.0;
                self.tangent_from_coords_with(&conn, &t, &e)
            })
            .collect();
        Ok(DMatrix::from_fn(n, n, |a, b| {
            metric_eval_with(pq, &g, &t, &basis[a], &basis[b])
        }))
    }

    fn check(&self, x: &[f64], reach: f64) -> Result<()> {
        self.sub.check_stencil(&x[..self.sub.dim_base()], reach)
    }

    /// Christoffel symbols `Γ^c_{ab}` (as `gamma[c][(a, b)]`) from differenced
    /// metric components.
    pub fn fd_christoffel(&self, pq: &PQParams, x: &[f64], h: f64) -> Result<Vec<DMatrix<f64>>> {
        self.check(x, 2.0 * h)?;
        let n = self.dim();
        let ginv = self
            .total_metric_components(pq, x)?
            .try_inverse()
            .ok_or(crate::error::GeomError::SingularMetric(0.0))?;
        let f = |y: &[f64]| Ok(self.total_metric_components(pq, y)?.as_slice().to_vec());
        let dg: Vec<DMatrix<f64>> = (0..n)
            .map(|a| Ok(DMatrix::from_vec(n, n, partial4(f, x, a, h)?)))
            .collect::<Result<_>>()?;
        Ok((0..n)
            .map(|c| {
                DMatrix::from_fn(n, n, |a, b| {
                    0.5 * (0..n)
                        .map(|e| ginv[(c, e)] * (dg[a][(b, e)] + dg[b][(a, e)] - dg[e][(a, b)]))
                        .sum::<f64>()
                })
            })
            .collect())
    }

    /// Riemann tensor from differenced Christoffels.
    pub fn fd_riemann(&self, pq: &PQParams, x: &[f64], cfg: &OracleConfig) -> Result<ChartRiemann> {
        self.check(x, 2.0 * (cfg.metric + cfg.curvature))?;
        let n = self.dim();
        let gamma = self.fd_christoffel(pq, x, cfg.metric)?;
        let f = |y: &[f64]| {
            Ok(self
                .fd_christoffel(pq, y, cfg.metric)?
                .iter()
                .flat_map(|m| m.iter().copied())
                .collect::<Vec<f64>>())
        };
        let dgamma: Vec<Vec<DMatrix<f64>>> = (0..n)
            .map(|c| {
                let v = partial4(f, x, c, cfg.curvature)?;
                Ok(v.chunks(n * n)
                    .map(|ch| DMatrix::from_column_slice(n, n, ch))
                    .collect())
            })
            .collect::<Result<_>>()?;
        let mut data = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut r = dgamma[c][a][(d, b)] - dgamma[d][a][(c, b)];
                        for e in 0..n {
                            r += gamma[a][(c, e)] * gamma[e][(d, b)]
                                - gamma[a][(d, e)] * gamma[e][(c, b)];
                        }
                        data[((a * n + b) * n + c) * n + d] = r;
                    }
                }
            }
        }
        Ok(ChartRiemann { dim: n, data })
    }

    /// `∇_V W` at `x` for a coordinate vector `v` and a field `w` given by
    /// its coordinate coefficients.
    pub fn covariant_derivative<F>(
        &self,
        pq: &PQParams,
        x: &[f64],
        v: &DVector<f64>,
        w: F,
        h: f64,
    ) -> Result<DVector<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let n = self.dim();
        let gamma = self.fd_christoffel(pq, x, h)?;
        let w0 = DVector::from_vec(w(x)?);
        let mut out = DVector::zeros(n);
        for a in 0..n {
            if v[a] != 0.0 {
                out += DVector::from_vec(partial4(&w, x, a, h)?) * v[a];
            }
        }
        for c in 0..n {
            out[c] += (v.transpose() * &gamma[c] * &w0)[(0, 0)];
        }
        Ok(out)
    }

    /// Directional derivative `V(f)` of coordinate coefficients.
    fn directional<F>(&self, x: &[f64], v: &[f64], f: &F, h: f64) -> Result<DVector<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let mut out: Option<DVector<f64>> = None;
        for (a, &va) in v.iter().enumerate() {
            if va == 0.0 {
                continue;
            }
            let d = DVector::from_vec(partial4(f, x, a, h)?) * va;
            out = Some(match out {
                Some(o) => o + d,
                None => d,
            });
        }
        Ok(out.unwrap_or_else(|| DVector::zeros(f(x).map(|w| w.len()).unwrap_or(0))))
    }

    /// `[V, W]` at `x` for two coordinate-coefficient fields.
    pub fn fd_lie_bracket<F, G>(&self, x: &[f64], v: F, w: G, h: f64) -> Result<DVector<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
        G: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        self.check(x, 2.0 * h)?;
        let v0 = v(x)?;
        let w0 = w(x)?;
        Ok(self.directional(x, &v0, &w, h)? - self.directional(x, &w0, &v, h)?)
    }

    /// `dφ_{abc} = ∂_a φ_{bc} + ∂_b φ_{ca} + ∂_c φ_{ab}` for a 2-form given by
    /// its component matrix, flattened as `(a*n + b)*n + c`.
    pub fn fd_exterior_derivative<F>(&self, x: &[f64], form: F, h: f64) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<DMatrix<f64>>,
    {
        self.check(x, 2.0 * h)?;
        let n = self.dim();
        let f = |y: &[f64]| Ok(form(y)?.as_slice().to_vec());
        let dphi: Vec<DMatrix<f64>> = (0..n)
            .map(|a| Ok(DMatrix::from_vec(n, n, partial4(f, x, a, h)?)))
            .collect::<Result<_>>()?;
        let mut out = vec![0.0; n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    out[(a * n + b) * n + c] =
                        dphi[a][(b, c)] + dphi[b][(c, a)] + dphi[c][(a, b)];
                }
            }
        }
        Ok(out)
    }

    /// Nijenhuis torsion `[JA,JB] − J[JA,B] − J[A,JB] − [A,B]` on coordinate
    /// vectors, from a field of endomorphisms `J` (column `b` is `J∂_b`).
    /// Entry `b*n + c` is the torsion of `(∂_b, ∂_c)`.
    pub fn fd_nijenhuis<F>(&self, x: &[f64], j: F, h: f64) -> Result<Vec<DVector<f64>>>
    where
        F: Fn(&[f64]) -> Result<DMatrix<f64>>,
    {
        self.check(x, 2.0 * h)?;
        let n = self.dim();
        let j0 = j(x)?;
        let f = |y: &[f64]| Ok(j(y)?.as_slice().to_vec());
        let dj: Vec<DMatrix<f64>> = (0..n)
            .map(|a| Ok(DMatrix::from_vec(n, n, partial4(f, x, a, h)?)))
            .collect::<Result<_>>()?;
        let mut out = Vec::with_capacity(n * n);
        for b in 0..n {
            for c in 0..n {
                out.push(DVector::from_fn(n, |a, _| {
                    let mut s = 0.0;
                    for d in 0..n {
                        s += j0[(d, b)] * dj[d][(a, c)] - j0[(d, c)] * dj[d][(a, b)]
                            - j0[(a, d)] * dj[b][(d, c)]
                            + j0[(a, d)] * dj[c][(d, b)];
                    }
                    s
                }));
            }
        }
        Ok(out)
    }
}

/// Which display a value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// The form as originally displayed.
    Display,
    /// The form that re-derivation gives.
    Corrected,
}

impl Variant {
    pub fn label(&self) -> &'static str {
        match self {
            Variant::Display => "display",
            Variant::Corrected => "corrected",
        }
    }
}

/// One closed-form versus oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub quantity: String,
    pub closed_form: f64,
    pub oracle: f64,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Set for rows that belong to an adjudication of two displayed variants.
    pub variant: Option<Variant>,
    pub samples: usize,
}

impl ComparisonReport {
    pub fn new(quantity: &str, tolerance: f64) -> Self {
        ComparisonReport {
            quantity: quantity.to_string(),
            closed_form: 0.0,
            oracle: 0.0,
            max_deviation: 0.0,
            tolerance,
            passed: true,
            variant: None,
            samples: 0,
        }
    }

    /// Folds one pair of values into the running maximum.
    pub fn record(&mut self, closed: f64, oracle: f64) {
        let dev = (closed - oracle).abs();
        if !(dev <= self.max_deviation) {
            self.max_deviation = if dev.is_nan() { f64::INFINITY } else { dev };
            self.closed_form = closed;
            self.oracle = oracle;
        }
        self.passed = self.max_deviation <= self.tolerance;
    }

    pub fn record_all(&mut self, closed: &[f64], oracle: &[f64]) {
        for (c, o) in closed.iter().zip(oracle) {
            self.record(*c, *o);
        }
    }

    pub fn finish_sample(&mut self) {
        self.samples += 1;
    }

    pub fn merge(&mut self, other: &ComparisonReport) {
        if !(other.max_deviation <= self.max_deviation) {
            self.max_deviation = other.max_deviation;
            self.closed_form = other.closed_form;
            self.oracle = other.oracle;
        }
        self.samples += other.samples;
        self.passed = self.max_deviation <= self.tolerance;
    }
}

/// Outcome of comparing two displayed variants against the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Selected(Variant),
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Adjudication {
    pub quantity: String,
    pub display: ComparisonReport,
    pub corrected: ComparisonReport,
    /// `(display deviation, corrected deviation)` per sample.
    pub per_sample: Vec<(f64, f64)>,
    /// Both variants produced identical values everywhere.
    pub degenerate: bool,
    pub verdict: Verdict,
}

/// Scores the two variants of a displayed quantity against oracle values.
/// Each entry of the three slices is one sample, a list of components.
pub fn adjudicate(
    quantity: &str,
    display: &[Vec<f64>],
    corrected: &[Vec<f64>],
    oracle: &[Vec<f64>],
    tolerance: f64,
) -> Adjudication {
    let mut rd = ComparisonReport::new(quantity, tolerance);
    rd.variant = Some(Variant::Display);
    let mut rc = ComparisonReport::new(quantity, tolerance);
    rc.variant = Some(Variant::Corrected);
    let mut per_sample = Vec::with_capacity(oracle.len());
    let mut degenerate = true;
    for ((dv, cv), ov) in display.iter().zip(corrected).zip(oracle) {
        let mut sd = ComparisonReport::new(quantity, tolerance);
        let mut sc = ComparisonReport::new(quantity, tolerance);
        sd.record_all(dv, ov);
        sc.record_all(cv, ov);
        sd.finish_sample();
        sc.finish_sample();
        degenerate &= dv == cv;
        per_sample.push((sd.max_deviation, sc.max_deviation));
        rd.merge(&sd);
        rc.merge(&sc);
    }
    let verdict = match (rd.passed, rc.passed) {
        (true, false) => Verdict::Selected(Variant::Display),
        (false, true) => Verdict::Selected(Variant::Corrected),
        _ => Verdict::Inconclusive,
    };
    Adjudication {
        quantity: quantity.to_string(),
        display: rd,
        corrected: rc,
        per_sample,
        degenerate,
        verdict,
    }
}
