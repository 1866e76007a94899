// SPDX-License-Identifier: Apache-2.0

//! Run configuration: strict TOML with `[model]`, `[bath]`, `[dynamics]`,
//! `[analysis]`, `[sweep]` and `[output]` sections, dotted `key=value`
//! overrides, and a set of bundled canonical configurations.

use serde::{Deserialize, Serialize};

use crate::analysis::SweepAxis;
use crate::direct::IntegrationOptions;
use crate::error::{Error, Result};
use crate::laplace::{SpectralDensityParams, DEFAULT_TOL_STEADY};
use crate::lattice::{fibonacci_beta, golden_beta, ModelKind, ModelSpec};

/// Bundled configurations, addressable by name instead of a path.
pub const BUNDLED: &[(&str, &str)] = &[
    ("table1_k2", include_str!("../configs/table1_k2.toml")),
    ("table1_k3", include_str!("../configs/table1_k3.toml")),
    ("tableA2_gaah", include_str!("../configs/tableA2_gaah.toml")),
    ("fig3_k2", include_str!("../configs/fig3_k2.toml")),
    ("fig3_k3", include_str!("../configs/fig3_k3.toml")),
    ("figA1", include_str!("../configs/figA1.toml")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindName {
    Mosaic,
    Aah,
    Gaah,
}

/// One value or a list; lists fan a run out into variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BetaSetting {
    Value(f64),
    /// `"golden"`.
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub kind: KindName,
    #[serde(default)]
    pub kappa: Option<usize>,
    #[serde(default)]
    pub a: Option<OneOrMany>,
    pub n: usize,
    pub delta: f64,
    #[serde(default)]
    pub phi: f64,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub beta: Option<BetaSetting>,
    /// Use the Fibonacci approximant `F_{m−1}/F_m` instead of `beta`.
    #[serde(default)]
    pub fibonacci: Option<u32>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BathSection {
    pub eta: f64,
    #[serde(default = "one")]
    pub omega_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DynamicsSection {
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "default_step")]
    pub step: f64,
    #[serde(default = "default_decimation")]
    pub decimation: usize,
    /// Also run the O((T/h)²) Volterra integrator.
    #[serde(default = "yes")]
    pub volterra: bool,
}

fn default_horizon() -> f64 {
    50.0
}
fn default_step() -> f64 {
    1e-3
}
fn default_decimation() -> usize {
    10
}
fn yes() -> bool {
    true
}

impl Default for DynamicsSection {
    fn default() -> Self {
        DynamicsSection {
            horizon: default_horizon(),
            step: default_step(),
            decimation: default_decimation(),
            volterra: true,
        }
    }
}

/// `"all"` or a list of descending-order level indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateSelector {
    Keyword(String),
    Levels(Vec<usize>),
}

impl Default for StateSelector {
    fn default() -> Self {
        StateSelector::Keyword("all".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSection {
    #[serde(default)]
    pub initial_states: StateSelector,
    /// Explicit real initial amplitudes (normalized on load), evolved in
    /// addition to the selected levels.
    #[serde(default)]
    pub initial_vector: Option<Vec<f64>>,
    #[serde(default = "default_tol_steady")]
    pub tol_steady: f64,
    /// Residue reconstruction vs auxiliary ODE, sup-norm.
    #[serde(default = "default_oracle_tol")]
    pub oracle_tol: f64,
    /// Volterra vs auxiliary ODE, sup-norm.
    #[serde(default = "default_volterra_tol")]
    pub volterra_tol: f64,
    /// Bisection tolerance in `t` for crossing refinement.
    #[serde(default = "default_crossing_tol")]
    pub crossing_tol: f64,
}

fn default_tol_steady() -> f64 {
    DEFAULT_TOL_STEADY
}
fn default_oracle_tol() -> f64 {
    1e-6
}
fn default_volterra_tol() -> f64 {
    1e-5
}
fn default_crossing_tol() -> f64 {
    1e-4
}

impl Default for AnalysisSection {
    fn default() -> Self {
        AnalysisSection {
            initial_states: StateSelector::default(),
            initial_vector: None,
            tol_steady: default_tol_steady(),
            oracle_tol: default_oracle_tol(),
            volterra_tol: default_volterra_tol(),
            crossing_tol: default_crossing_tol(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisName {
    Delta,
    N,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub axis: AxisName,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct OutputSection {
    #[serde(default)]
    pub dir: Option<String>,
    /// Emit a matplotlib script stub next to the CSVs.
    #[serde(default)]
    pub plot_stub: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub bath: BathSection,
    #[serde(default)]
    pub dynamics: DynamicsSection,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub sweep: Option<SweepSection>,
    #[serde(default)]
    pub output: OutputSection,
}

/// A model instance plus the file-name tag distinguishing it from siblings.
#[derive(Debug, Clone, PartialEq)]
pub struct Variant {
    pub tag: String,
    pub spec: ModelSpec,
}

impl RunConfig {
    /// Parse TOML text, apply `key=value` overrides, and validate.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::Config(format!("invalid TOML: {e}")))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// `source` is a file path or a bundled config name.
    pub fn load(source: &str, overrides: &[String]) -> Result<(Self, String)> {
        let text = match std::fs::read_to_string(source) {
            Ok(t) => t,
            Err(e) => match bundled(source) {
                Some(t) => t.to_string(),
                None => {
                    return Err(Error::Config(format!(
                        "cannot read config '{source}' ({e}); bundled configs: {}",
                        BUNDLED
                            .iter()
                            .map(|(n, _)| *n)
                            .collect::<Vec<_>>()
                            .join(", ")
                    )))
                }
            },
        };
        let cfg = Self::from_toml_str(&text, overrides)?;
        Ok((cfg, text))
    }

    pub fn validate(&self) -> Result<()> {
        let variants = self.variants()?;
        for v in &variants {
            v.spec
                .validate()
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.bath_params()?;
        let d = &self.dynamics;
        IntegrationOptions::new(d.horizon, d.step, d.decimation)
            .steps()
            .map_err(|e| Error::Config(e.to_string()))?;
        let a = &self.analysis;
        for (name, v) in [
            ("analysis.tol_steady", a.tol_steady),
            ("analysis.oracle_tol", a.oracle_tol),
            ("analysis.volterra_tol", a.volterra_tol),
            ("analysis.crossing_tol", a.crossing_tol),
        ] {
            if !(v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let StateSelector::Keyword(k) = &a.initial_states {
            if k != "all" {
                return Err(Error::Config(format!(
                    "analysis.initial_states must be \"all\" or a list of level indices, got \"{k}\""
                )));
            }
        }
        if let StateSelector::Levels(levels) = &a.initial_states {
            if let Some(&bad) = levels.iter().find(|&&j| j >= self.model.n) {
                return Err(Error::Config(format!(
                    "initial level {bad} out of range for N = {}",
                    self.model.n
                )));
            }
        }
        if let Some(v) = &a.initial_vector {
            if v.len() != self.model.n {
                return Err(Error::Config(format!(
                    "analysis.initial_vector has {} entries, expected N = {}",
                    v.len(),
                    self.model.n
                )));
            }
            if !(v.iter().map(|x| x * x).sum::<f64>() > 0.0) {
                return Err(Error::Config("analysis.initial_vector is zero".into()));
            }
        }
        if let Some(s) = &self.sweep {
            self.sweep_axis_of(s)?;
        }
        Ok(())
    }

    fn beta(&self) -> Result<f64> {
        match (&self.model.beta, self.model.fibonacci) {
            (Some(_), Some(_)) => Err(Error::Config(
                "set either model.beta or model.fibonacci, not both".into(),
            )),
            (_, Some(m)) => fibonacci_beta(m).map_err(|e| Error::Config(e.to_string())),
            (None, None) => Ok(golden_beta()),
            (Some(BetaSetting::Value(b)), None) => Ok(*b),
            (Some(BetaSetting::Named(s)), None) if s == "golden" => Ok(golden_beta()),
            (Some(BetaSetting::Named(s)), None) => {
                Err(Error::Config(format!("unknown model.beta \"{s}\"")))
            }
        }
    }

    pub fn variants(&self) -> Result<Vec<Variant>> {
        let m = &self.model;
        let beta = self.beta()?;
        let make = |kind: ModelKind| {
            ModelSpec::new(kind, m.n, m.delta, m.phi)
                .with_lambda(m.lambda)
                .with_beta(beta)
        };
        match m.kind {
            KindName::Mosaic => {
                if m.a.is_some() {
                    return Err(Error::Config(
                        "model.a applies to kind = \"gaah\" only".into(),
                    ));
                }
                let kappa = m
                    .kappa
                    .ok_or_else(|| Error::Config("mosaic model needs model.kappa".into()))?;
                Ok(vec![Variant {
                    tag: String::new(),
                    spec: make(ModelKind::Mosaic { kappa }),
                }])
            }
            KindName::Aah => {
                if m.a.is_some() || m.kappa.is_some() {
                    return Err(Error::Config("aah model takes neither kappa nor a".into()));
                }
                Ok(vec![Variant {
                    tag: String::new(),
                    spec: make(ModelKind::Aah),
                }])
            }
            KindName::Gaah => {
                if m.kappa.is_some() {
                    return Err(Error::Config(
                        "model.kappa applies to kind = \"mosaic\" only".into(),
                    ));
                }
                let values =
                    m.a.as_ref()
                        .ok_or_else(|| Error::Config("gaah model needs model.a".into()))?
                        .values();
                if values.is_empty() {
                    return Err(Error::Config("model.a list is empty".into()));
                }
                let many = values.len() > 1;
                Ok(values
                    .into_iter()
                    .map(|a| Variant {
                        tag: if many {
                            format!("_a{a:+}")
                        } else {
                            String::new()
                        },
                        spec: make(ModelKind::Gaah { a }),
                    })
                    .collect())
            }
        }
    }

    pub fn bath_params(&self) -> Result<SpectralDensityParams> {
        SpectralDensityParams::new(self.bath.eta, self.bath.omega_c)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn integration(&self) -> IntegrationOptions {
        IntegrationOptions::new(
            self.dynamics.horizon,
            self.dynamics.step,
            self.dynamics.decimation,
        )
    }

    fn sweep_axis_of(&self, s: &SweepSection) -> Result<SweepAxis> {
        if s.values.is_empty() {
            return Err(Error::Config("sweep.values is empty".into()));
        }
        Ok(match s.axis {
            AxisName::Delta => SweepAxis::Delta(s.values.clone()),
            AxisName::N => {
                let ns = s
                    .values
                    .iter()
                    .map(|&v| {
                        if v >= 2.0 && v.fract() == 0.0 {
                            Ok(v as usize)
                        } else {
                            Err(Error::Config(format!(
                                "sweep N value {v} is not an integer >= 2"
                            )))
                        }
                    })
                    .collect::<Result<Vec<_>>>()?;
                SweepAxis::N(ns)
            }
        })
    }

    pub fn sweep_axis(&self) -> Result<SweepAxis> {
        let s = self
            .sweep
            .as_ref()
            .ok_or_else(|| Error::Config("no [sweep] section (axis, values)".into()))?;
        self.sweep_axis_of(s)
    }

    pub fn selected_levels(&self) -> Vec<usize> {
        match &self.analysis.initial_states {
            StateSelector::Levels(v) => v.clone(),
            StateSelector::Keyword(_) => (0..self.model.n).collect(),
        }
    }
}

/// Set `section.key = value` in a TOML table. The value is parsed as a TOML
/// literal when possible, else taken as a bare string.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override '{assignment}' is not key=value")))?;
    let key = key.trim();
    let raw = raw.trim();
    let value = match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or(toml::Value::String(raw.into())),
        Err(_) => toml::Value::String(raw.into()),
    };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key '{key}'")));
    }
    let mut cur = table;
    for p in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override '{key}': '{p}' is not a section")))?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_configs_parse() {
        for (name, text) in BUNDLED {
            let cfg = RunConfig::from_toml_str(text, &[]).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(!cfg.variants().unwrap().is_empty());
        }
    }

    #[test]
    fn table1_k2_is_canonical() {
        let cfg = RunConfig::from_toml_str(bundled("table1_k2").unwrap(), &[]).unwrap();
        let v = cfg.variants().unwrap();
        assert_eq!(v[0].spec, ModelSpec::mosaic(2, 12, 2.0, 0.0));
        let p = cfg.bath_params().unwrap();
        assert_eq!((p.eta, p.omega_c), (0.1, 1.0));
    }

    #[test]
    fn gaah_list_fans_out() {
        let cfg = RunConfig::from_toml_str(bundled("tableA2_gaah").unwrap(), &[]).unwrap();
        let v = cfg.variants().unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v[0].tag, "_a+0.5");
        assert_eq!(v[1].tag, "_a-0.5");
        assert_eq!(v[1].spec.n, 8);
    }

    #[test]
    fn overrides_apply() {
        let cfg = RunConfig::from_toml_str(
            bundled("table1_k2").unwrap(),
            &[
                "model.n=610".into(),
                "bath.eta = 0".into(),
                "output.dir=some/where".into(),
            ],
        )
        .unwrap();
        assert_eq!(cfg.model.n, 610);
        assert_eq!(cfg.bath.eta, 0.0);
        assert_eq!(cfg.output.dir.as_deref(), Some("some/where"));
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = bundled("table1_k2").unwrap();
        assert!(RunConfig::from_toml_str(text, &["model.kapa=3".into()]).is_err());
        assert!(RunConfig::from_toml_str(text, &["extra.x=1".into()]).is_err());
        assert!(RunConfig::from_toml_str(text, &["model.n".into()]).is_err());
    }

    #[test]
    fn invalid_values_rejected() {
        let text = bundled("table1_k2").unwrap();
        for bad in [
            "model.n=1",
            "model.kappa=0",
            "bath.omega_c=0",
            "bath.eta=-1",
            "dynamics.step=0",
            "analysis.initial_states=[12]",
            "analysis.initial_states=\"some\"",
            "model.beta=\"silver\"",
        ] {
            assert!(
                RunConfig::from_toml_str(text, &[bad.into()]).is_err(),
                "{bad}"
            );
        }
    }

    #[test]
    fn fibonacci_beta_option() {
        let cfg =
            RunConfig::from_toml_str(bundled("figA1").unwrap(), &["model.fibonacci=15".into()])
                .unwrap();
        assert_eq!(cfg.variants().unwrap()[0].spec.beta, 377.0 / 610.0);
    }

    #[test]
    fn empty_sweep_values_rejected() {
        let text = bundled("table1_k2").unwrap();
        let err = RunConfig::from_toml_str(
            text,
            &["sweep.axis=\"delta\"".into(), "sweep.values=[]".into()],
        );
        assert!(err.is_err());
    }
}
