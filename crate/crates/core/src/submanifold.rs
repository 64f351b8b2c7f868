//! Induced geometry of an embedded submanifold: metric, Levi-Civita
//! connection and curvature of the base, orthonormal normal frame, normal
//! connection, normal curvature, its adjoint and covariant derivatives.
//!
//! Conventions. `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_{[X,Y]}Z`. Normal sections
//! are stored as component vectors against the frame `ξ_1..ξ_{d'}`, and
//! `A_i[(β,α)] = ⟨∂_i ξ_α, ξ_β⟩`, so `∇⊥_i σ = ∂_i σ + A_i σ`.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::fd::{partial4, FdConfig};
use crate::manifold::EmbeddedSubmanifold;

/// Residual below which a Gram–Schmidt pivot counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-8;
/// Pivots with a projected residual at least this large are preferred when a
/// gauge is chosen, so the frame stays well conditioned nearby.
pub const PIVOT_PREFERENCE: f64 = 0.3;

/// The ambient basis vectors used to build the normal frame, in order.
///
/// A gauge is fixed at one point and reused at every nearby stencil point, so
/// frame fields built from it are smooth there.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Gauge {
    pivots: Vec<usize>,
}

impl Gauge {
    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }
}

fn tangent_matrix(d1: &[DVector<f64>]) -> DMatrix<f64> {
    DMatrix::from_columns(d1)
}

fn invert_metric(g: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = g.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if !(min > RANK_TOLERANCE) {
        return Err(GeomError::SingularMetric(min));
    }
    g.clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or(GeomError::SingularMetric(min))
}

fn normal_projector(t: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = t.nrows();
    let g = t.transpose() * t;
    let ginv = invert_metric(&g)?;
    Ok(DMatrix::identity(n, n) - t * ginv * t.transpose())
}

/// Gram–Schmidt of `P e_k` over the candidate indices. Returns accepted
/// vectors and their pivots; candidates with residual below `threshold` are
/// skipped when `skip` is set and rejected otherwise.
fn gram_schmidt(
    proj: &DMatrix<f64>,
    candidates: &[usize],
    want: usize,
    threshold: f64,
    skip: bool,
) -> Result<(Vec<DVector<f64>>, Vec<usize>)> {
    let mut frame: Vec<DVector<f64>> = Vec::with_capacity(want);
    let mut pivots = Vec::with_capacity(want);
    for &k in candidates {
        if frame.len() == want {
            break;
        }
        let mut v = proj.column(k).into_owned();
        for e in &frame {
            let c = e.dot(&v);
            v -= e * c;
        }
        // second pass keeps orthogonality at roundoff level
        for e in &frame {
            let c = e.dot(&v);
            v -= e * c;
        }
        let r = v.norm();
        if r < threshold {
            if skip {
                continue;
            }
            return Err(GeomError::FrameDegeneracy(format!(
                "pivot e_{k} residual {r:e} below {threshold:e}"
            )));
        }
        frame.push(v / r);
        pivots.push(k);
    }
    if frame.len() < want {
        return Err(GeomError::FrameDegeneracy(format!(
            "found {} of {want} normal directions",
            frame.len()
        )));
    }
    Ok((frame, pivots))
}

/// Chooses the frame gauge at `u`.
pub fn choose_gauge(sub: &EmbeddedSubmanifold, u: &[f64]) -> Result<Gauge> {
    let (_, d1) = sub.first_jet(u)?;
    let proj = normal_projector(&tangent_matrix(&d1))?;
    let all: Vec<usize> = (0..sub.ambient_dim()).collect();
    let want = sub.codim();
    let pivots = match gram_schmidt(&proj, &all, want, PIVOT_PREFERENCE, true) {
        Ok((_, p)) => p,
        Err(_) => gram_schmidt(&proj, &all, want, RANK_TOLERANCE, true)?.1,
    };
    Ok(Gauge { pivots })
}

/// Orthonormal normal frame at `u` in the given gauge, as an `n × d'` matrix.
pub fn normal_frame_in_gauge(
    sub: &EmbeddedSubmanifold,
    u: &[f64],
    gauge: &Gauge,
) -> Result<DMatrix<f64>> {
    let (_, d1) = sub.first_jet(u)?;
    let proj = normal_projector(&tangent_matrix(&d1))?;
    let (frame, _) = gram_schmidt(&proj, &gauge.pivots, sub.codim(), RANK_TOLERANCE, false)?;
    Ok(DMatrix::from_columns(&frame))
}

/// Orthonormal normal frame at `u` together with the gauge chosen there.
pub fn normal_frame(sub: &EmbeddedSubmanifold, u: &[f64]) -> Result<(DMatrix<f64>, Gauge)> {
    let gauge = choose_gauge(sub, u)?;
    Ok((normal_frame_in_gauge(sub, u, &gauge)?, gauge))
}

/// Largest change of the frame between `u` and each stencil neighbour at
/// distance `h`, in the fixed gauge of `u`.
pub fn frame_continuity(
    sub: &EmbeddedSubmanifold,
    u: &[f64],
    gauge: &Gauge,
    h: f64,
) -> Result<f64> {
    let centre = normal_frame_in_gauge(sub, u, gauge)?;
    let mut worst = 0.0_f64;
    for i in 0..u.len() {
        for s in [-2.0, -1.0, 1.0, 2.0] {
            let mut y = u.to_vec();
            y[i] += s * h;
            let f = normal_frame_in_gauge(sub, &y, gauge)?;
            worst = worst.max((f - &centre).amax());
        }
    }
    Ok(worst)
}

fn flat(ms: &[DMatrix<f64>]) -> Vec<f64> {
    ms.iter().flat_map(|m| m.iter().copied()).collect()
}

fn unflat(v: &[f64], rows: usize, cols: usize) -> Vec<DMatrix<f64>> {
    v.chunks(rows * cols)
        .map(|c| DMatrix::from_column_slice(rows, cols, c))
        .collect()
}

/// Frame at `u` and its exact partials `∂_i Ξ`, obtained by differentiating
/// the Gram–Schmidt recursion with the chart's second derivatives.
pub fn normal_frame_with_derivatives(
    sub: &EmbeddedSubmanifold,
    u: &[f64],
    gauge: &Gauge,
) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
    let d = sub.dim_base();
    let n = sub.ambient_dim();
    let (_, d1) = sub.first_jet(u)?;
    let d2 = sub.chart_derivatives(u, 2)?;
    let t = tangent_matrix(&d1);
    let ginv = invert_metric(&(t.transpose() * &t))?;
    let proj = DMatrix::identity(n, n) - &t * &ginv * t.transpose();
    let (frame, _) = gram_schmidt(&proj, &gauge.pivots, sub.codim(), RANK_TOLERANCE, false)?;

    let mut derivs = Vec::with_capacity(d);
    for i in 0..d {
        let dt = DMatrix::from_fn(n, d, |r, j| d2[j * d + i][r]);
        let dg = dt.transpose() * &t + t.transpose() * &dt;
        let dginv = -(&ginv * dg * &ginv);
        let dproj = -(&dt * &ginv * t.transpose()
            + &t * dginv * t.transpose()
            + &t * &ginv * dt.transpose());
        let mut dxi: Vec<DVector<f64>> = Vec::with_capacity(frame.len());
        for (slot, &k) in gauge.pivots.iter().enumerate() {
            let x = proj.column(k).into_owned();
            let dx = dproj.column(k).into_owned();
            let mut v = x.clone();
            let mut dv = dx.clone();
            for j in 0..slot {
                let c = frame[j].dot(&x);
                let dc = dxi[j].dot(&x) + frame[j].dot(&dx);
                v -= &frame[j] * c;
                dv -= &frame[j] * dc + &dxi[j] * c;
            }
            let r = v.norm();
            let e = &frame[slot];
            dxi.push((&dv - e * e.dot(&dv)) / r);
        }
        derivs.push(DMatrix::from_columns(&dxi));
    }
    Ok((DMatrix::from_columns(&frame), derivs))
}

/// Normal connection matrices `A_i` at `u`, one `d' × d'` matrix per `i`.
pub fn normal_connection_in_gauge(
    sub: &EmbeddedSubmanifold,
    u: &[f64],
    gauge: &Gauge,
) -> Result<Vec<DMatrix<f64>>> {
    let (frame, derivs) = normal_frame_with_derivatives(sub, u, gauge)?;
    Ok(derivs.iter().map(|dx| frame.transpose() * dx).collect())
}

/// Same matrices from a fourth-order difference of the frame with step `h`.
pub fn normal_connection_fd(
    sub: &EmbeddedSubmanifold,
    u: &[f64],
    gauge: &Gauge,
    h: f64,
) -> Result<Vec<DMatrix<f64>>> {
    sub.check_stencil(u, 2.0 * h)?;
    let n = sub.ambient_dim();
    let k = sub.codim();
    let frame = normal_frame_in_gauge(sub, u, gauge)?;
    let f = |y: &[f64]| normal_frame_in_gauge(sub, y, gauge).map(|m| m.as_slice().to_vec());
    (0..u.len())
        .map(|i| {
            let dxi = DMatrix::from_vec(n, k, partial4(f, u, i, h)?);
            Ok(frame.transpose() * dxi)
        })
        .collect()
}

/// `R⊥_{ij} = ∂_i A_j − ∂_j A_i + A_i A_j − A_j A_i`, flattened as `i*d + j`.
pub fn normal_curvature_in_gauge(
    sub: &EmbeddedSubmanifold,
    u: &[f64],
    gauge: &Gauge,
    cfg: &FdConfig,
) -> Result<Vec<DMatrix<f64>>> {
    let d = sub.dim_base();
    let k = sub.codim();
    sub.check_stencil(u, 2.0 * cfg.connection)?;
    let a = normal_connection_in_gauge(sub, u, gauge)?;
    let fa = |y: &[f64]| normal_connection_in_gauge(sub, y, gauge).map(|m| flat(&m));
    let da: Vec<Vec<DMatrix<f64>>> = (0..d)
        .map(|i| Ok(unflat(&partial4(fa, u, i, cfg.connection)?, k, k)))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(&da[i][j] - &da[j][i] + &a[i] * &a[j] - &a[j] * &a[i]);
        }
    }
    Ok(out)
}

/// Base geometry at one parameter point.
#[derive(Debug, Clone)]
pub struct BaseGeometry {
    pub u: Vec<f64>,
    pub dim_base: usize,
    pub codim: usize,
    pub point: DVector<f64>,
    /// `n × d`, columns `∂_i f`.
    pub tangents: DMatrix<f64>,
    pub metric: DMatrix<f64>,
    pub metric_inv: DMatrix<f64>,
    /// `christoffel[k][(i, j)] = Γ^k_{ij}`.
    pub christoffel: Vec<DMatrix<f64>>,
    /// `R^a_{bcd}` at `((a*d + b)*d + c)*d + e`, with `R(∂_c,∂_e)∂_b = R^a_{bce} ∂_a`.
    pub riemann: Vec<f64>,
    pub scalar: f64,
    pub gauge: Gauge,
    /// `n × d'`, columns `ξ_α`.
    pub frame: DMatrix<f64>,
    /// Second fundamental form in frame components, flattened as `i*d + j`.
    pub second_fundamental: Vec<DVector<f64>>,
    pub connection: Vec<DMatrix<f64>>,
    pub normal_curvature: Vec<DMatrix<f64>>,
    /// `(∇_k R⊥)_{ij}` at `(k*d + i)*d + j`.
    pub cov_normal_curvature: Vec<DMatrix<f64>>,
    /// Column `α`: components of `Jξ_α` in the coordinate frame.
    pub j_normal_to_tangent: Option<DMatrix<f64>>,
    /// Column `i`: frame components of `J∂_i f`.
    pub j_tangent_to_normal: Option<DMatrix<f64>>,
}

impl BaseGeometry {
    /// Computes everything at `u`, choosing the frame gauge there.
    pub fn compute(sub: &EmbeddedSubmanifold, u: &[f64], cfg: &FdConfig) -> Result<Self> {
        let gauge = choose_gauge(sub, u)?;
        Self::compute_in_gauge(sub, u, &gauge, cfg)
    }

    pub fn compute_in_gauge(
        sub: &EmbeddedSubmanifold,
        u: &[f64],
        gauge: &Gauge,
        cfg: &FdConfig,
    ) -> Result<Self> {
        sub.check_stencil(u, cfg.reach())?;
        let d = sub.dim_base();
        let k = sub.codim();
        let jet = sub.jet(u)?;
        let t = tangent_matrix(&jet.d1);
        let g = t.transpose() * &t;
        let ginv = invert_metric(&g)?;

        let f2 = |i: usize, j: usize| &jet.d2[i * d + j];
        let f3 = |i: usize, j: usize, m: usize| &jet.d3[(i * d + j) * d + m];

        // Γ^k_ij = g^{kl} ⟨f_ij, f_l⟩
        let lower: Vec<DMatrix<f64>> = (0..d)
            .map(|l| DMatrix::from_fn(d, d, |i, j| f2(i, j).dot(&jet.d1[l])))
            .collect();
        let christoffel: Vec<DMatrix<f64>> = (0..d)
            .map(|kk| {
                DMatrix::from_fn(d, d, |i, j| {
                    (0..d).map(|l| ginv[(kk, l)] * lower[l][(i, j)]).sum()
                })
            })
            .collect();

        // ∂_m Γ^k_ij from third derivatives
        let dginv: Vec<DMatrix<f64>> = (0..d)
            .map(|m| {
                let dg = DMatrix::from_fn(d, d, |a, b| {
                    f2(a, m).dot(&jet.d1[b]) + jet.d1[a].dot(f2(b, m))
                });
                -(&ginv * dg * &ginv)
            })
            .collect();
        let dgamma = |m: usize, kk: usize, i: usize, j: usize| -> f64 {
            (0..d)
                .map(|l| {
                    dginv[m][(kk, l)] * lower[l][(i, j)]
                        + ginv[(kk, l)] * (f3(i, j, m).dot(&jet.d1[l]) + f2(i, j).dot(f2(l, m)))
                })
                .sum()
        };
        let mut riemann = vec![0.0; d * d * d * d];
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        let mut r = dgamma(c, a, e, b) - dgamma(e, a, c, b);
                        for m in 0..d {
                            r += christoffel[a][(c, m)] * christoffel[m][(e, b)]
                                - christoffel[a][(e, m)] * christoffel[m][(c, b)];
                        }
                        riemann[((a * d + b) * d + c) * d + e] = r;
                    }
                }
            }
        }
        let mut scalar = 0.0;
        for b in 0..d {
            for e in 0..d {
                let ric: f64 = (0..d).map(|a| riemann[((a * d + b) * d + a) * d + e]).sum();
                scalar += ginv[(b, e)] * ric;
            }
        }

        let frame = normal_frame_in_gauge(sub, u, gauge)?;
        let second_fundamental = (0..d * d)
            .map(|ij| frame.transpose() * &jet.d2[ij])
            .collect();
        let connection = normal_connection_in_gauge(sub, u, gauge)?;
        let normal_curvature = normal_curvature_in_gauge(sub, u, gauge, cfg)?;

        let fr = |y: &[f64]| normal_curvature_in_gauge(sub, y, gauge, cfg).map(|m| flat(&m));
        let drp: Vec<Vec<DMatrix<f64>>> = (0..d)
            .map(|m| Ok(unflat(&partial4(fr, u, m, cfg.curvature)?, k, k)))
            .collect::<Result<_>>()?;
        let mut cov = Vec::with_capacity(d * d * d);
        for m in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let mut v = drp[m][i * d + j].clone() + &connection[m]
                        * &normal_curvature[i * d + j]
                        - &normal_curvature[i * d + j] * &connection[m];
                    for l in 0..d {
                        v -= &normal_curvature[l * d + j] * christoffel[l][(m, i)];
                        v -= &normal_curvature[i * d + l] * christoffel[l][(m, j)];
                    }
                    cov.push(v);
                }
            }
        }

        let (jn, jt) = match sub.complex() {
            Some(j) => {
                let jm = j.matrix();
                (
                    Some(&ginv * t.transpose() * jm * &frame),
                    Some(frame.transpose() * jm * &t),
                )
            }
            None => (None, None),
        };

        Ok(BaseGeometry {
            u: u.to_vec(),
            dim_base: d,
            codim: k,
            point: jet.value,
            tangents: t,
            metric: g,
            metric_inv: ginv,
            christoffel,
            riemann,
            scalar,
            gauge: gauge.clone(),
            frame,
            second_fundamental,
            connection,
            normal_curvature,
            cov_normal_curvature: cov,
            j_normal_to_tangent: jn,
            j_tangent_to_normal: jt,
        })
    }

    pub fn inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        (x.transpose() * &self.metric * y)[(0, 0)]
    }

    /// `∇_X Y` for fields with constant coordinate components.
    pub fn nabla(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim_base, |k, _| {
            (x.transpose() * &self.christoffel[k] * y)[(0, 0)]
        })
    }

    /// `R(X,Y)Z`.
    pub fn riemann_apply(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        let d = self.dim_base;
        let mut out = DVector::zeros(d);
        for a in 0..d {
            let mut s = 0.0;
            for b in 0..d {
                for c in 0..d {
                    for e in 0..d {
                        s += self.riemann[((a * d + b) * d + c) * d + e] * z[b] * x[c] * y[e];
                    }
                }
            }
            out[a] = s;
        }
        out
    }

    /// Sectional curvature of the plane spanned by `X, Y`.
    pub fn sectional(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let num = self.inner(&self.riemann_apply(x, y, y), x);
        let den = self.inner(x, x) * self.inner(y, y) - self.inner(x, y).powi(2);
        num / den
    }

    /// `∇⊥_X η` for a section with constant frame components.
    pub fn nabla_normal(&self, x: &DVector<f64>, eta: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.codim);
        for i in 0..self.dim_base {
            out += &self.connection[i] * eta * x[i];
        }
        out
    }

    /// The endomorphism `R⊥(X,Y)` of the normal fibre.
    pub fn rperp(&self, x: &DVector<f64>, y: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim_base;
        let mut m = DMatrix::zeros(self.codim, self.codim);
        for i in 0..d {
            for j in 0..d {
                let c = x[i] * y[j];
                if c != 0.0 {
                    m += &self.normal_curvature[i * d + j] * c;
                }
            }
        }
        m
    }

    /// `R⊥(X,Y)σ`.
    pub fn rperp_apply(&self, x: &DVector<f64>, y: &DVector<f64>, s: &DVector<f64>) -> DVector<f64> {
        self.rperp(x, y) * s
    }

    /// `(∇⊥_Z R⊥)(X,Y)σ`.
    pub fn cov_rperp_apply(
        &self,
        z: &DVector<f64>,
        x: &DVector<f64>,
        y: &DVector<f64>,
        s: &DVector<f64>,
    ) -> DVector<f64> {
        let d = self.dim_base;
        let mut m = DMatrix::zeros(self.codim, self.codim);
        for kk in 0..d {
            for i in 0..d {
                for j in 0..d {
                    let c = z[kk] * x[i] * y[j];
                    if c != 0.0 {
                        m += &self.cov_normal_curvature[(kk * d + i) * d + j] * c;
                    }
                }
            }
        }
        m * s
    }

    fn raise(&self, lower: DVector<f64>) -> DVector<f64> {
        &self.metric_inv * lower
    }

    /// `R̂(ξ,η)X`, defined by `⟨R̂(ξ,η)X, Y⟩ = ⟨R⊥(X,Y)ξ, η⟩`.
    pub fn rhat_apply(&self, xi: &DVector<f64>, eta: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let d = self.dim_base;
        let lower = DVector::from_fn(d, |l, _| {
            let mut el = DVector::zeros(d);
            el[l] = 1.0;
            eta.dot(&self.rperp_apply(x, &el, xi))
        });
        self.raise(lower)
    }

    /// `(∇_X R̂)(ξ,η)Z`, dual to `(∇⊥_X R⊥)(Z,·)`.
    pub fn cov_rhat_apply(
        &self,
        x: &DVector<f64>,
        xi: &DVector<f64>,
        eta: &DVector<f64>,
        z: &DVector<f64>,
    ) -> DVector<f64> {
        let d = self.dim_base;
        let lower = DVector::from_fn(d, |l, _| {
            let mut el = DVector::zeros(d);
            el[l] = 1.0;
            eta.dot(&self.cov_rperp_apply(x, z, &el, xi))
        });
        self.raise(lower)
    }

    /// Orthonormal basis of the tangent space under the induced metric, as
    /// coordinate vectors.
    pub fn orthonormal_tangent_basis(&self) -> Vec<DVector<f64>> {
        let d = self.dim_base;
        let mut out: Vec<DVector<f64>> = Vec::with_capacity(d);
        for i in 0..d {
            let mut v = DVector::zeros(d);
            v[i] = 1.0;
            for _ in 0..2 {
                for e in &out {
                    let c = self.inner(e, &v);
                    v -= e * c;
                }
            }
            let nv = self.inner(&v, &v).sqrt();
            out.push(v / nv);
        }
        out
    }

    /// Components of `Jη` in the coordinate frame.
    pub fn j_normal(&self, eta: &DVector<f64>) -> Result<DVector<f64>> {
        self.j_normal_to_tangent
            .as_ref()
            .map(|m| m * eta)
            .ok_or_else(|| GeomError::Structure("no ambient complex structure".into()))
    }

    /// Frame components of `JX`.
    pub fn j_tangent(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.j_tangent_to_normal
            .as_ref()
            .map(|m| m * x)
            .ok_or_else(|| GeomError::Structure("no ambient complex structure".into()))
    }

    /// `max |R⊥_{ij}|` over coordinate pairs and frame entries.
    pub fn max_normal_curvature(&self) -> f64 {
        self.normal_curvature
            .iter()
            .map(|m| m.amax())
            .fold(0.0, f64::max)
    }

    /// Frobenius bound `C` with `|R⊥(X,Y)ξ| ≤ C|X||Y||ξ|`, taken over an
    /// orthonormal tangent basis. The same number bounds `R̂`.
    pub fn normal_curvature_bound(&self) -> f64 {
        let e = self.orthonormal_tangent_basis();
        let mut s = 0.0;
        for x in &e {
            for y in &e {
                s += self.rperp(x, y).norm_squared();
            }
        }
        s.sqrt()
    }

    /// Same bound computed from `R̂` on orthonormal inputs.
    pub fn adjoint_curvature_bound(&self) -> f64 {
        let e = self.orthonormal_tangent_basis();
        let mut s = 0.0;
        for a in 0..self.codim {
            for b in 0..self.codim {
                let xa = unit(self.codim, a);
                let xb = unit(self.codim, b);
                for x in &e {
                    let v = self.rhat_apply(&xa, &xb, x);
                    s += self.inner(&v, &v);
                }
            }
        }
        s.sqrt()
    }
}

/// `e_i` in `R^n`.
pub fn unit(n: usize, i: usize) -> DVector<f64> {
    let mut v = DVector::zeros(n);
    v[i] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::lookup;

    fn bg(name: &str, u: &[f64]) -> BaseGeometry {
        BaseGeometry::compute(&lookup(name, None).unwrap(), u, &FdConfig::default()).unwrap()
    }

    #[test]
    fn plane_is_trivial() {
        let b = bg("plane_r2_in_r4", &[0.3, -0.2]);
        assert_eq!(b.metric, DMatrix::identity(2, 2));
        assert_eq!(b.frame.column(0).as_slice(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(b.frame.column(1).as_slice(), &[0.0, 0.0, 0.0, 1.0]);
        assert!(b.connection.iter().all(|a| a.amax() == 0.0));
        assert!(b.riemann.iter().all(|r| *r == 0.0));
        assert!(b.max_normal_curvature() == 0.0);
    }

    #[test]
    fn helix_metric_and_connection() {
        let b = bg("helix_r1_in_r3", &[0.4]);
        assert!((b.metric[(0, 0)] - 2.0).abs() < 1e-15);
        assert!(b.christoffel[0][(0, 0)].abs() < 1e-15);
        assert!(b.connection[0].amax() > 1e-2);
        let a = &b.connection[0];
        assert!((a + a.transpose()).amax() < 1e-12);
    }

    #[test]
    fn sphere_curvature_and_normal() {
        let u = [0.0, 0.5];
        let b = bg("sphere_s2_in_r3", &u);
        let x = unit(2, 0);
        let y = unit(2, 1);
        assert!((b.sectional(&x, &y) - 1.0).abs() < 1e-12);
        assert!((b.scalar - 2.0).abs() < 1e-12);
        let n = b.frame.column(0).into_owned();
        let p = b.point.clone();
        assert!((n.dot(&p).abs() - 1.0).abs() < 1e-12);
        // classical Γ^φ_λλ = sin φ cos φ, Γ^λ_φλ = −tan φ at φ = 0.3
        let b = bg("sphere_s2_in_r3", &[0.3, 0.1]);
        assert!((b.christoffel[0][(1, 1)] - 0.3f64.sin() * 0.3f64.cos()).abs() < 1e-14);
        assert!((b.christoffel[1][(0, 1)] + 0.3f64.tan()).abs() < 1e-14);
    }

    #[test]
    fn frame_is_orthonormal_and_normal() {
        for name in ["helix_r1_in_r3", "graph_surface_r4", "sphere_s2_in_r3"] {
            let sub = lookup(name, None).unwrap();
            let u: Vec<f64> = sub.domain().iter().map(|(a, b)| 0.3 * a + 0.7 * b - 0.1).collect();
            let (f, gauge) = normal_frame(&sub, &u).unwrap();
            let k = sub.codim();
            assert!((f.transpose() * &f - DMatrix::identity(k, k)).amax() < 1e-12);
            let d1 = sub.chart_derivatives(&u, 1).unwrap();
            for t in d1 {
                assert!((f.transpose() * t).amax() < 1e-12);
            }
            assert!(frame_continuity(&sub, &u, &gauge, 1e-3).unwrap() < 1e-2);
        }
    }

    #[test]
    fn exact_connection_matches_differenced_frame() {
        for name in ["helix_r1_in_r3", "graph_surface_r4", "lagrangian_graph_r4"] {
            let sub = lookup(name, None).unwrap();
            let u: Vec<f64> = sub.domain().iter().map(|(a, b)| 0.6 * a + 0.4 * b + 0.05).collect();
            let gauge = choose_gauge(&sub, &u).unwrap();
            let exact = normal_connection_in_gauge(&sub, &u, &gauge).unwrap();
            let err = |h: f64| {
                let fd = normal_connection_fd(&sub, &u, &gauge, h).unwrap();
                exact.iter().zip(&fd).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max)
            };
            let (e1, e2) = (err(1e-3), err(5e-4));
            assert!(e2 < 1e-8, "{name}: {e2}");
            assert!(e2 < 1e-11 || e1 / e2 > 8.0, "{name}: {e1} {e2}");
            for a in &exact {
                assert!((a + a.transpose()).amax() < 1e-14);
            }
        }
    }

    #[test]
    fn graph_surface_has_normal_curvature() {
        let b = bg("graph_surface_r4", &[0.0, 0.0]);
        assert!(b.max_normal_curvature() > 0.5);
        let r = &b.normal_curvature[1];
        assert!((r + r.transpose()).amax() < 1e-12, "{r}");
        assert!((r + &b.normal_curvature[2]).amax() < 1e-12);
    }
}
