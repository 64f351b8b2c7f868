//! TOML run configuration.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use pqbundle::battery::{default_pq_grid, BatteryConfig, Perturbation};
use pqbundle::estimates::{PipelineOptions, SearchGrid};
use pqbundle::fd::FdConfig;
use pqbundle::manifold::{lookup, AmbientComplexStructure, EmbeddedSubmanifold, Factor, Term};
use pqbundle::oracle::OracleConfig;
use pqbundle::pq_metric::PQParams;
use pqbundle::sampling::SampleSpec;

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub submanifold: Option<SubmanifoldBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pq: Option<PqBlock>,
    #[serde(default)]
    pub samples: SamplesBlock,
    #[serde(default)]
    pub fd: FdBlock,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scan: Option<ScanBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verify: Option<VerifyBlock>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex: Option<ComplexBlock>,
    /// Output path; `--out` wins.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

/// A builtin preset, or a chart given as separable terms per ambient component.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubmanifoldBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dim_base: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub domain: Option<Vec<[f64; 2]>>,
    /// One list of terms per ambient coordinate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<Vec<TermSpec>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fd_step: Option<f64>,
    /// `"standard"` or an explicit row-major matrix.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub complex_structure: Option<ComplexSpec>,
}

/// `coeff · Π factors[i](u^i)`; factors are `"1"`, `"u"`, `"u^N"`, `"cos"`, `"sin"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coeff: f64,
    pub factors: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexSpec {
    Named(String),
    Matrix(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PqBlock {
    pub pairs: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplesBlock {
    pub count: usize,
    pub seed: u64,
    pub t_radius: f64,
    pub margin: f64,
}

impl Default for SamplesBlock {
    fn default() -> Self {
        let s = SampleSpec::default();
        SamplesBlock {
            count: s.count,
            seed: s.seed,
            t_radius: s.t_radius,
            margin: s.margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FdBlock {
    pub connection: f64,
    pub curvature: f64,
    pub oracle_metric: f64,
    pub oracle_curvature: f64,
}

impl Default for FdBlock {
    fn default() -> Self {
        let (f, o) = (FdConfig::default(), OracleConfig::default());
        FdBlock {
            connection: f.connection,
            curvature: f.curvature,
            oracle_metric: o.metric,
            oracle_curvature: o.curvature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanBlock {
    /// The lower bound `D` to beat.
    pub target: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
    pub margin: f64,
    pub floor: f64,
    pub radial_scales: Vec<f64>,
    pub p_max: f64,
    pub p_step: f64,
    pub q_max: f64,
}

impl Default for ScanBlock {
    fn default() -> Self {
        let o = PipelineOptions::default();
        ScanBlock {
            target: 0.0,
            constant: None,
            margin: o.margin,
            floor: o.floor,
            radial_scales: o.radial_scales,
            p_max: 8.0,
            p_step: 0.25,
            q_max: 64.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    /// Defaults to every builtin preset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub presets: Option<Vec<String>>,
    /// Multiplies every battery tolerance.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol_scale: Option<f64>,
    /// Test hook: scale the closed-form values of one quantity.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturb: Option<PerturbBlock>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbBlock {
    pub quantity: String,
    pub factor: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComplexBlock {
    /// For the LCK identity and `dφ = 0`.
    pub tolerance: f64,
    /// For `R⊥ ≡ 0` in the Kähler verdict.
    pub kahler_tolerance: f64,
    pub alpha_scale: f64,
}

impl Default for ComplexBlock {
    fn default() -> Self {
        ComplexBlock {
            tolerance: 1e-9,
            kahler_tolerance: 1e-7,
            alpha_scale: 1.0,
        }
    }
}

fn bad(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn parse_factor(s: &str) -> Result<Factor, CliError> {
    match s.trim() {
        "1" => Ok(Factor::Pow(0)),
        "u" => Ok(Factor::Pow(1)),
        "cos" => Ok(Factor::Cos),
        "sin" => Ok(Factor::Sin),
        other => other
            .strip_prefix("u^")
            .and_then(|k| k.parse::<u32>().ok())
            .map(Factor::Pow)
            .ok_or_else(|| bad(format!("unknown factor {other:?}"))),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| bad(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| bad(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.pq_pairs()?;
        let s = &self.samples;
        if s.count == 0 || !(s.t_radius >= 0.0) || !(s.margin >= 0.0) {
            return Err(bad("samples: need count > 0, t_radius ≥ 0, margin ≥ 0"));
        }
        let f = &self.fd;
        if [f.connection, f.curvature, f.oracle_metric, f.oracle_curvature]
            .iter()
            .any(|h| !(h.is_finite() && *h > 0.0))
        {
            return Err(bad("fd steps must be positive"));
        }
        if let Some(v) = &self.verify {
            if let Some(t) = v.tol_scale {
                if !(t.is_finite() && t > 0.0) {
                    return Err(bad("verify.tol_scale must be positive"));
                }
            }
        }
        if let Some(sc) = &self.scan {
            if !(sc.p_step > 0.0 && sc.p_max >= 0.0 && sc.q_max >= 0.0) {
                return Err(bad("scan grid needs p_step > 0, p_max ≥ 0, q_max ≥ 0"));
            }
        }
        Ok(())
    }

    /// `(p, q)` pairs; the default grid when none are given.
    pub fn pq_pairs(&self) -> Result<Vec<PQParams>, CliError> {
        match &self.pq {
            None => Ok(default_pq_grid()),
            Some(b) if b.pairs.is_empty() => Err(bad("pq.pairs is empty")),
            Some(b) => b
                .pairs
                .iter()
                .map(|&[p, q]| PQParams::new(p, q).map_err(|e| bad(e.to_string())))
                .collect(),
        }
    }

    pub fn sample_spec(&self) -> SampleSpec {
        let s = &self.samples;
        SampleSpec {
            count: s.count,
            seed: s.seed,
            t_radius: s.t_radius,
            margin: s.margin,
        }
    }

    pub fn fd_config(&self) -> FdConfig {
        FdConfig {
            connection: self.fd.connection,
            curvature: self.fd.curvature,
        }
    }

    pub fn oracle_config(&self) -> OracleConfig {
        OracleConfig {
            metric: self.fd.oracle_metric,
            curvature: self.fd.oracle_curvature,
        }
    }

    pub fn pipeline_options(&self) -> PipelineOptions {
        let sc = self.scan.clone().unwrap_or_default();
        PipelineOptions {
            margin: sc.margin,
            floor: sc.floor,
            constant: sc.constant,
            radial_scales: sc.radial_scales,
            grid: SearchGrid::new(sc.p_max, sc.p_step, sc.q_max),
        }
    }

    pub fn battery_config(&self) -> BatteryConfig {
        let mut cfg = BatteryConfig {
            samples: self.sample_spec(),
            fd: self.fd_config(),
            oracle: self.oracle_config(),
            ..BatteryConfig::default()
        };
        if let Ok(pq) = self.pq_pairs() {
            cfg.pq = pq;
        }
        if let Some(v) = &self.verify {
            if let Some(p) = &v.presets {
                cfg.presets = p.clone();
            }
            if let Some(t) = v.tol_scale {
                cfg.tolerances = cfg.tolerances.scaled(t);
            }
            cfg.perturb = v.perturb.as_ref().map(|p| Perturbation {
                quantity: p.quantity.clone(),
                factor: p.factor,
            });
        }
        cfg
    }

    /// Builds the configured submanifold, if there is a block.
    pub fn submanifold(&self) -> Result<Option<EmbeddedSubmanifold>, CliError> {
        self.submanifold.as_ref().map(build_submanifold).transpose()
    }
}

fn build_submanifold(b: &SubmanifoldBlock) -> Result<EmbeddedSubmanifold, CliError> {
    let mut sub = match (&b.preset, &b.components) {
        (Some(_), Some(_)) => return Err(bad("submanifold: give either preset or components, not both")),
        (None, None) => return Err(bad("submanifold: need a preset or components")),
        (Some(name), None) => lookup(name, b.k)?,
        (None, Some(comps)) => {
            let d = b.dim_base.ok_or_else(|| bad("submanifold.dim_base is required for a chart"))?;
            let domain = b.domain.as_ref().ok_or_else(|| bad("submanifold.domain is required for a chart"))?;
            let terms = comps
                .iter()
                .map(|c| {
                    c.iter()
                        .map(|t| {
                            if t.factors.len() != d {
                                return Err(bad(format!("term needs {d} factors, got {}", t.factors.len())));
                            }
                            let f = t.factors.iter().map(|s| parse_factor(s)).collect::<Result<_, _>>()?;
                            Ok(Term::new(t.coeff, f))
                        })
                        .collect::<Result<Vec<_>, _>>()
                })
                .collect::<Result<Vec<_>, _>>()?;
            let name = b.name.clone().unwrap_or_else(|| "user_chart".to_string());
            EmbeddedSubmanifold::new(&name, d, terms, domain.iter().map(|&[a, z]| (a, z)).collect())?
        }
    };
    if let Some(h) = b.fd_step {
        sub = sub.with_fd_step(h)?;
    }
    if let Some(j) = &b.complex_structure {
        let n = sub.ambient_dim();
        let acs = match j {
            ComplexSpec::Named(s) if s == "standard" => {
                if n % 2 != 0 {
                    return Err(bad("standard complex structure needs even ambient dimension"));
                }
                AmbientComplexStructure::standard(n / 2)
            }
            ComplexSpec::Named(s) => return Err(bad(format!("unknown complex structure {s:?}"))),
            ComplexSpec::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(bad(format!("complex structure must be {n}x{n}")));
                }
                let flat: Vec<f64> = rows.iter().flatten().copied().collect();
                AmbientComplexStructure::new(DMatrix::from_row_slice(n, n, &flat))?
            }
        };
        sub = sub.with_complex_structure(acs)?;
    }
    Ok(sub)
}
