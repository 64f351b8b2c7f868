//! Parametric charts of submanifolds of Euclidean space.
//!
//! A chart is stored as a sum of separable terms per ambient component, each
//! term a product of one-variable factors (monomials, cosines, sines). That
//! covers every builtin preset and lets derivatives of any order be taken
//! exactly.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

/// Slack allowed when testing whether a point sits in the domain box.
const DOMAIN_SLACK: f64 = 1e-12;

/// One-variable factor of a separable term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Factor {
    Pow(u32),
    Cos,
    Sin,
}

impl Factor {
    /// `m`-th derivative evaluated at `x`.
    pub fn derivative(&self, x: f64, m: usize) -> f64 {
        match *self {
            Factor::Pow(k) => {
                let k = k as usize;
                if m > k {
                    return 0.0;
                }
                let falling: f64 = (0..m).map(|j| (k - j) as f64).product();
                falling * x.powi((k - m) as i32)
            }
            Factor::Cos => match m % 4 {
                0 => x.cos(),
                1 => -x.sin(),
                2 => -x.cos(),
                _ => x.sin(),
            },
            Factor::Sin => match m % 4 {
                0 => x.sin(),
                1 => x.cos(),
                2 => -x.sin(),
                _ => -x.cos(),
            },
        }
    }
}

/// `coeff · Π_i factors[i](u^i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub coeff: f64,
    pub factors: Vec<Factor>,
}

impl Term {
    pub fn new(coeff: f64, factors: Vec<Factor>) -> Self {
        Term { coeff, factors }
    }

    /// Monomial `coeff · Π (u^i)^{powers[i]}`.
    pub fn monomial(coeff: f64, powers: &[u32]) -> Self {
        Term {
            coeff,
            factors: powers.iter().map(|&k| Factor::Pow(k)).collect(),
        }
    }

    /// Mixed partial derivative; `counts[i]` is the number of derivatives in `u^i`.
    fn derivative(&self, u: &[f64], counts: &[usize]) -> f64 {
        let mut acc = self.coeff;
        for (i, f) in self.factors.iter().enumerate() {
            acc *= f.derivative(u[i], counts[i]);
            if acc == 0.0 {
                return 0.0;
            }
        }
        acc
    }
}

/// Linear complex structure on the ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientComplexStructure {
    j: DMatrix<f64>,
}

impl AmbientComplexStructure {
    /// `J(x, y) = (-y, x)` on `R^k × R^k`.
    pub fn standard(k: usize) -> Self {
        let mut j = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            j[(k + i, i)] = 1.0;
            j[(i, k + i)] = -1.0;
        }
        AmbientComplexStructure { j }
    }

    /// Validates `J² = -I` and orthogonality to 1e-14.
    pub fn new(j: DMatrix<f64>) -> Result<Self> {
        let n = j.nrows();
        if n != j.ncols() || n % 2 != 0 {
            return Err(GeomError::InvalidInput(format!(
                "complex structure must be square of even size, got {}x{}",
                j.nrows(),
                j.ncols()
            )));
        }
        let id = DMatrix::<f64>::identity(n, n);
        let sq = (&j * &j + &id).amax();
        let orth = (j.transpose() * &j - &id).amax();
        if sq > 1e-14 || orth > 1e-14 {
            return Err(GeomError::InvalidInput(format!(
                "not an orthogonal complex structure (|J²+I| = {sq:e}, |JᵀJ-I| = {orth:e})"
            )));
        }
        Ok(AmbientComplexStructure { j })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.j * v
    }
}

/// Where a chart came from.
#[derive(Debug, Clone, PartialEq)]
pub enum ChartSource {
    Preset(String),
    Coefficients,
}

/// Chart value and exact (or finite-difference) partials up to order 3.
///
/// Multi-indices are flattened lexicographically: `d2[i*d + j]` is `∂_i∂_j f`
/// and `d3[(i*d + j)*d + k]` is `∂_i∂_j∂_k f`.
#[derive(Debug, Clone)]
pub struct ChartJet {
    pub value: DVector<f64>,
    pub d1: Vec<DVector<f64>>,
    pub d2: Vec<DVector<f64>>,
    pub d3: Vec<DVector<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSubmanifold {
    name: String,
    source: ChartSource,
    d: usize,
    n: usize,
    components: Vec<Vec<Term>>,
    domain: Vec<(f64, f64)>,
    complex: Option<AmbientComplexStructure>,
    fd_step: Option<f64>,
}

impl EmbeddedSubmanifold {
    /// Builds a chart from per-component term lists. `domain` has one closed
    /// interval per parameter.
    pub fn new(
        name: &str,
        d: usize,
        components: Vec<Vec<Term>>,
        domain: Vec<(f64, f64)>,
    ) -> Result<Self> {
        let n = components.len();
        if d < 1 || d >= n {
            return Err(GeomError::InvalidInput(format!(
                "need 1 <= dim_base < ambient_dim, got d={d}, n={n}"
            )));
        }
        if domain.len() != d {
            return Err(GeomError::InvalidInput(format!(
                "domain box has {} intervals for {d} parameters",
                domain.len()
            )));
        }
        for &(lo, hi) in &domain {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(GeomError::InvalidInput(format!(
                    "bad domain interval [{lo}, {hi}]"
                )));
            }
        }
        for (c, terms) in components.iter().enumerate() {
            for t in terms {
                if t.factors.len() != d || !t.coeff.is_finite() {
                    return Err(GeomError::InvalidInput(format!(
                        "component {c}: every term needs {d} factors and a finite coefficient"
                    )));
                }
            }
        }
        Ok(EmbeddedSubmanifold {
            name: name.to_string(),
            source: ChartSource::Coefficients,
            d,
            n,
            components,
            domain,
            complex: None,
            fd_step: None,
        })
    }

    fn preset(
        name: &str,
        d: usize,
        components: Vec<Vec<Term>>,
        domain: Vec<(f64, f64)>,
    ) -> Self {
        let mut s = Self::new(name, d, components, domain).expect("valid preset");
        s.source = ChartSource::Preset(name.to_string());
        s
    }

    /// Attaches an ambient complex structure; requires `n = 2d`.
    pub fn with_complex_structure(mut self, j: AmbientComplexStructure) -> Result<Self> {
        if j.matrix().nrows() != self.n || self.n != 2 * self.d {
            return Err(GeomError::Structure(format!(
                "complex structure needs ambient dimension 2d (d={}, n={}, J is {}x{})",
                self.d,
                self.n,
                j.matrix().nrows(),
                j.matrix().ncols()
            )));
        }
        self.complex = Some(j);
        Ok(self)
    }

    /// Switches chart derivatives to second-order central differences.
    pub fn with_fd_step(mut self, step: f64) -> Result<Self> {
        if !(step.is_finite() && step > 0.0) {
            return Err(GeomError::InvalidInput(format!("bad fd step {step}")));
        }
        self.fd_step = Some(step);
        Ok(self)
    }

    /// `1e-4` times the widest side of the domain box.
    pub fn default_fd_step(&self) -> f64 {
        let w = self
            .domain
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(0.0_f64, f64::max);
        1e-4 * w
    }

    pub fn name(&self) -> &str {
        &self.name
    }
    pub fn source(&self) -> &ChartSource {
        &self.source
    }
    pub fn dim_base(&self) -> usize {
        self.d
    }
    pub fn ambient_dim(&self) -> usize {
        self.n
    }
    pub fn codim(&self) -> usize {
        self.n - self.d
    }
    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }
    pub fn complex(&self) -> Option<&AmbientComplexStructure> {
        self.complex.as_ref()
    }
    pub fn fd_step(&self) -> Option<f64> {
        self.fd_step
    }
    pub fn components(&self) -> &[Vec<Term>] {
        &self.components
    }
    /// Highest derivative order served without finite differencing.
    pub fn derivative_order_available(&self) -> usize {
        if self.fd_step.is_some() {
            0
        } else {
            3
        }
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        u.len() == self.d
            && u.iter()
                .zip(&self.domain)
                .all(|(x, (lo, hi))| *x >= lo - DOMAIN_SLACK && *x <= hi + DOMAIN_SLACK)
    }

    fn check_domain(&self, u: &[f64]) -> Result<()> {
        if self.contains(u) {
            Ok(())
        } else {
            Err(GeomError::Domain { point: u.to_vec() })
        }
    }

    /// Fails with `Step` unless the box of half-width `reach` around `u` fits.
    pub fn check_stencil(&self, u: &[f64], reach: f64) -> Result<()> {
        self.check_domain(u)?;
        let ok = u
            .iter()
            .zip(&self.domain)
            .all(|(x, (lo, hi))| x - reach >= lo - DOMAIN_SLACK && x + reach <= hi + DOMAIN_SLACK);
        if ok {
            Ok(())
        } else {
            Err(GeomError::Step {
                point: u.to_vec(),
                step: reach,
            })
        }
    }

    fn raw_partial(&self, u: &[f64], counts: &[usize]) -> DVector<f64> {
        DVector::from_iterator(
            self.n,
            self.components
                .iter()
                .map(|terms| terms.iter().map(|t| t.derivative(u, counts)).sum()),
        )
    }

    /// `f(u)`.
    pub fn evaluate_chart(&self, u: &[f64]) -> Result<DVector<f64>> {
        self.check_domain(u)?;
        Ok(self.raw_partial(u, &vec![0; self.d]))
    }

    fn multi_indices(&self, order: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..order {
            out = out
                .into_iter()
                .flat_map(|m| {
                    (0..self.d).map(move |i| {
                        let mut m = m.clone();
                        m.push(i);
                        m
                    })
                })
                .collect();
        }
        out
    }

    fn exact_partials(&self, u: &[f64], order: usize) -> Vec<DVector<f64>> {
        self.multi_indices(order)
            .into_iter()
            .map(|idx| {
                let mut counts = vec![0; self.d];
                for i in idx {
                    counts[i] += 1;
                }
                self.raw_partial(u, &counts)
            })
            .collect()
    }

    /// Second-order central finite-difference partials of the given order,
    /// built from chart evaluations only.
    pub fn fd_chart_derivatives(
        &self,
        u: &[f64],
        order: usize,
        step: f64,
    ) -> Result<Vec<DVector<f64>>> {
        self.check_stencil(u, order as f64 * step)?;
        let scale = (2.0 * step).powi(order as i32);
        Ok(self
            .multi_indices(order)
            .into_iter()
            .map(|idx| {
                let mut acc = DVector::zeros(self.n);
                for mask in 0..(1usize << order) {
                    let mut y = u.to_vec();
                    let mut sign = 1.0;
                    for (b, &i) in idx.iter().enumerate() {
                        if mask >> b & 1 == 1 {
                            y[i] += step;
                        } else {
                            y[i] -= step;
                            sign = -sign;
                        }
                    }
                    acc += self.raw_partial(&y, &vec![0; self.d]) * sign;
                }
                acc / scale
            })
            .collect())
    }

    /// Partials of `f` of the given order (1, 2 or 3), flattened lexicographically.
    pub fn chart_derivatives(&self, u: &[f64], order: usize) -> Result<Vec<DVector<f64>>> {
        if !(1..=3).contains(&order) {
            return Err(GeomError::InvalidInput(format!(
                "derivative order {order} not in 1..=3"
            )));
        }
        self.check_domain(u)?;
        match self.fd_step {
            None => Ok(self.exact_partials(u, order)),
            Some(h) => self.fd_chart_derivatives(u, order, h),
        }
    }

    /// Value and partials up to order 3.
    pub fn jet(&self, u: &[f64]) -> Result<ChartJet> {
        Ok(ChartJet {
            value: self.evaluate_chart(u)?,
            d1: self.chart_derivatives(u, 1)?,
            d2: self.chart_derivatives(u, 2)?,
            d3: self.chart_derivatives(u, 3)?,
        })
    }

    /// Value and first partials only.
    pub fn first_jet(&self, u: &[f64]) -> Result<(DVector<f64>, Vec<DVector<f64>>)> {
        Ok((self.evaluate_chart(u)?, self.chart_derivatives(u, 1)?))
    }

    /// Largest `|⟨J∂_i f, ∂_j f⟩|`; zero for a totally real chart.
    pub fn totally_real_defect(&self, u: &[f64]) -> Result<f64> {
        let j = self
            .complex
            .as_ref()
            .ok_or_else(|| GeomError::Structure(format!("{} has no complex structure", self.name)))?;
        let d1 = self.chart_derivatives(u, 1)?;
        let mut worst = 0.0_f64;
        for a in &d1 {
            let ja = j.apply(a);
            for b in &d1 {
                worst = worst.max(ja.dot(b).abs());
            }
        }
        Ok(worst)
    }
}

/// Catalogue entry for a builtin embedding.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetInfo {
    pub name: &'static str,
    pub dim_base: usize,
    pub ambient_dim: usize,
    pub exact_derivatives: bool,
    pub complex_structure: bool,
    pub description: &'static str,
}

/// Presets exercised by the default verification grid.
pub const CORE_PRESETS: [&str; 6] = [
    "plane_r2_in_r4",
    "curve_in_r2",
    "helix_r1_in_r3",
    "sphere_s2_in_r3",
    "graph_surface_r4",
    "lagrangian_rk_in_r2k",
];

pub fn builtin_presets() -> Vec<PresetInfo> {
    vec![
        PresetInfo {
            name: "plane_r2_in_r4",
            dim_base: 2,
            ambient_dim: 4,
            exact_derivatives: true,
            complex_structure: false,
            description: "(u1, u2, 0, 0); flat base, flat normal connection",
        },
        PresetInfo {
            name: "curve_in_r2",
            dim_base: 1,
            ambient_dim: 2,
            exact_derivatives: true,
            complex_structure: false,
            description: "unit circle (cos s, sin s)",
        },
        PresetInfo {
            name: "helix_r1_in_r3",
            dim_base: 1,
            ambient_dim: 3,
            exact_derivatives: true,
            complex_structure: false,
            description: "helix (cos s, sin s, s)",
        },
        PresetInfo {
            name: "sphere_s2_in_r3",
            dim_base: 2,
            ambient_dim: 3,
            exact_derivatives: true,
            complex_structure: false,
            description: "unit sphere in latitude/longitude",
        },
        PresetInfo {
            name: "graph_surface_r4",
            dim_base: 2,
            ambient_dim: 4,
            exact_derivatives: true,
            complex_structure: false,
            description: "(u1, u2, u1 u2, u1² - u2²); curved normal connection",
        },
        PresetInfo {
            name: "lagrangian_rk_in_r2k",
            dim_base: 2,
            ambient_dim: 4,
            exact_derivatives: true,
            complex_structure: true,
            description: "(u, 0) in R^k × R^k with J(x, y) = (-y, x); k defaults to 2",
        },
        PresetInfo {
            name: "lagrangian_graph_r4",
            dim_base: 2,
            ambient_dim: 4,
            exact_derivatives: true,
            complex_structure: true,
            description: "(u1, u2, (u1² - u2²)/2, -u1 u2); Lagrangian with curved normal connection",
        },
    ]
}

/// Looks up a builtin preset. `k` only applies to `lagrangian_rk_in_r2k`.
pub fn lookup(name: &str, k: Option<usize>) -> Result<EmbeddedSubmanifold> {
    use Factor::{Cos, Pow, Sin};
    let m = Term::monomial;
    let sub = match name {
        "plane_r2_in_r4" => EmbeddedSubmanifold::preset(
            name,
            2,
            vec![vec![m(1.0, &[1, 0])], vec![m(1.0, &[0, 1])], vec![], vec![]],
            vec![(-2.0, 2.0); 2],
        ),
        "curve_in_r2" => EmbeddedSubmanifold::preset(
            name,
            1,
            vec![vec![Term::new(1.0, vec![Cos])], vec![Term::new(1.0, vec![Sin])]],
            vec![(-3.0, 3.0)],
        ),
        "helix_r1_in_r3" => EmbeddedSubmanifold::preset(
            name,
            1,
            vec![
                vec![Term::new(1.0, vec![Cos])],
                vec![Term::new(1.0, vec![Sin])],
                vec![m(1.0, &[1])],
            ],
            vec![(-3.0, 3.0)],
        ),
        "sphere_s2_in_r3" => EmbeddedSubmanifold::preset(
            name,
            2,
            vec![
                vec![Term::new(1.0, vec![Cos, Cos])],
                vec![Term::new(1.0, vec![Cos, Sin])],
                vec![Term::new(1.0, vec![Sin, Pow(0)])],
            ],
            vec![(-1.2, 1.2), (-3.0, 3.0)],
        ),
        "graph_surface_r4" => EmbeddedSubmanifold::preset(
            name,
            2,
            vec![
                vec![m(1.0, &[1, 0])],
                vec![m(1.0, &[0, 1])],
                vec![m(1.0, &[1, 1])],
                vec![m(1.0, &[2, 0]), m(-1.0, &[0, 2])],
            ],
            vec![(-1.0, 1.0); 2],
        ),
        "lagrangian_rk_in_r2k" => {
            let k = k.unwrap_or(2);
            if k == 0 {
                return Err(GeomError::InvalidInput("k must be positive".into()));
            }
            let mut comps = Vec::with_capacity(2 * k);
            for i in 0..k {
                let mut p = vec![0; k];
                p[i] = 1;
                comps.push(vec![m(1.0, &p)]);
            }
            comps.extend((0..k).map(|_| vec![]));
            EmbeddedSubmanifold::preset(name, k, comps, vec![(-2.0, 2.0); k])
                .with_complex_structure(AmbientComplexStructure::standard(k))?
        }
        "lagrangian_graph_r4" => EmbeddedSubmanifold::preset(
            name,
            2,
            vec![
                vec![m(1.0, &[1, 0])],
                vec![m(1.0, &[0, 1])],
                vec![m(0.5, &[2, 0]), m(-0.5, &[0, 2])],
                vec![m(-1.0, &[1, 1])],
            ],
            vec![(-1.0, 1.0); 2],
        )
        .with_complex_structure(AmbientComplexStructure::standard(2))?,
        other => {
            return Err(GeomError::InvalidInput(format!("unknown preset '{other}'")));
        }
    };
    if k.is_some() && name != "lagrangian_rk_in_r2k" {
        return Err(GeomError::InvalidInput(format!(
            "preset '{name}' takes no k parameter"
        )));
    }
    Ok(sub)
}
