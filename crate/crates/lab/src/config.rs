//! Run configuration: flat `key = value` text split into `[section]`s.
//!
//! ```text
//! [model]
//! damping = 1
//! self_weight = 1
//! edge_weight = -1
//!
//! [attention]
//! low_offset = -0.01   # u_low = u_c - 0.01
//! high_offset = 0.6
//! threshold = 0.4
//! ```
//!
//! Attention bounds are offsets from the critical attention, which is always
//! computed from the graph. Unknown sections and keys are rejected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cascade_core::cascade::CascadeCriteria;
use cascade_core::dynamics::{ModelParams, DEFAULT_HILL_EXPONENT};
use cascade_core::integrate::{IntegratorConfig, Method};
use cascade_core::sweep::{linspace, SweepConfig};

use crate::error::{LabError, LabResult};

const SECTIONS: [&str; 8] = [
    "model",
    "attention",
    "integrator",
    "cascade",
    "simulate",
    "bifurcate",
    "threshold",
    "sweep",
];

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    line: usize,
    value: String,
}

/// Parsed but untyped configuration text.
#[derive(Debug, Clone)]
pub struct KeyValues {
    source_name: String,
    sections: BTreeMap<String, BTreeMap<String, Entry>>,
}

impl KeyValues {
    pub fn parse(text: &str, source_name: &str) -> LabResult<Self> {
        let mut sections: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            if let Some(name) = body.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        LabError::parse(source_name, line, "unterminated section header")
                    })?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(LabError::parse(
                        source_name,
                        line,
                        format!("unknown section [{name}]"),
                    ));
                }
                sections.entry(name.to_string()).or_default();
                current = Some(name.to_string());
                continue;
            }
            let (key, value) = body.split_once('=').ok_or_else(|| {
                LabError::parse(
                    source_name,
                    line,
                    format!("expected `key = value`, got `{body}`"),
                )
            })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(LabError::parse(source_name, line, "empty key or value"));
            }
            let section = current.as_ref().ok_or_else(|| {
                LabError::parse(source_name, line, "key outside of any [section]")
            })?;
            let entries = sections.get_mut(section).expect("section registered");
            let entry = Entry {
                line,
                value: value.to_string(),
            };
            if let Some(prev) = entries.insert(key.to_string(), entry) {
                return Err(LabError::parse(
                    source_name,
                    line,
                    format!("duplicate key `{key}` (first set on line {})", prev.line),
                ));
            }
        }
        Ok(Self {
            source_name: source_name.to_string(),
            sections,
        })
    }

    pub fn has_section(&self, section: &str) -> bool {
        self.sections.contains_key(section)
    }

    fn take(&mut self, section: &str, key: &str) -> Option<Entry> {
        self.sections.get_mut(section)?.remove(key)
    }

    fn err(&self, line: usize, msg: impl Into<String>) -> LabError {
        LabError::parse(&self.source_name, line, msg)
    }

    fn take_parsed<T: std::str::FromStr>(
        &mut self,
        section: &str,
        key: &str,
        what: &str,
    ) -> LabResult<Option<T>> {
        match self.take(section, key) {
            None => Ok(None),
            Some(e) => e.value.parse().map(Some).map_err(|_| {
                self.err(
                    e.line,
                    format!("[{section}] {key}: expected {what}, got `{}`", e.value),
                )
            }),
        }
    }

    fn f64_or(&mut self, section: &str, key: &str, default: f64) -> LabResult<f64> {
        Ok(self
            .take_parsed(section, key, "a number")?
            .unwrap_or(default))
    }

    fn list(&mut self, section: &str, key: &str) -> LabResult<Option<Vec<f64>>> {
        let Some(e) = self.take(section, key) else {
            return Ok(None);
        };
        parse_list(&e.value).map(Some).ok_or_else(|| {
            self.err(
                e.line,
                format!(
                    "[{section}] {key}: expected a list of numbers, got `{}`",
                    e.value
                ),
            )
        })
    }

    /// Fails on the first key nobody asked for.
    fn finish(self) -> LabResult<()> {
        let leftover = self
            .sections
            .iter()
            .flat_map(|(s, m)| m.iter().map(move |(k, e)| (s, k, e.line)))
            .min_by_key(|x| x.2);
        match leftover {
            Some((s, k, line)) => Err(self.err(line, format!("unknown key `{k}` in [{s}]"))),
            None => Ok(()),
        }
    }
}

/// Comma- or whitespace-separated numbers.
pub fn parse_list(s: &str) -> Option<Vec<f64>> {
    let v: Option<Vec<f64>> = s
        .split(|c: char| c == ',' || c.is_whitespace())
        .filter(|t| !t.is_empty())
        .map(|t| t.parse().ok())
        .collect();
    v.filter(|v| !v.is_empty() && v.iter().all(|x| x.is_finite()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelSection {
    pub damping: f64,
    pub self_weight: f64,
    pub edge_weight: f64,
    /// Explicit input vector.
    pub input: Option<Vec<f64>>,
    /// Multiple of the critical eigenvector added to the input.
    pub input_centrality: f64,
}

impl ModelSection {
    /// Parameters with zero input on `n` agents.
    pub fn unforced(&self, n: usize) -> cascade_core::Result<ModelParams> {
        ModelParams::unforced(self.damping, self.self_weight, self.edge_weight, n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionSection {
    pub low_offset: f64,
    pub high_offset: f64,
    pub threshold: f64,
    pub hill_exponent: u32,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionSpec {
    /// The critical eigenvector.
    Centrality,
    /// Normalised to unit length.
    Explicit(Vec<f64>),
    /// Unit vector with the given alignment to the critical eigenvector,
    /// completed with `completion` (default: the basis vector least aligned
    /// with it).
    Aligned {
        alignment: f64,
        completion: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BifurcationMode {
    FixedU,
    CoupledInput,
}

impl BifurcationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            BifurcationMode::FixedU => "fixed_u",
            BifurcationMode::CoupledInput => "coupled_input",
        }
    }
}

impl std::str::FromStr for BifurcationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fixed_u" => Ok(BifurcationMode::FixedU),
            "coupled_input" => Ok(BifurcationMode::CoupledInput),
            _ => Err(format!(
                "unknown bifurcation mode `{s}` (fixed_u or coupled_input)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulateSection {
    /// Draw the input i.i.d. `N(0, sigma^2)` from the run seed.
    pub input_sigma: Option<f64>,
    pub initial_x: Option<Vec<f64>>,
    /// Draw the initial opinions i.i.d. `N(0, sigma^2)` after the input.
    pub initial_x_sigma: Option<f64>,
    /// One value for every agent, or one per agent.
    pub initial_u: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BifurcateSection {
    pub mode: Option<BifurcationMode>,
    pub param_min: Option<f64>,
    pub param_max: Option<f64>,
    pub max_step: f64,
    pub direction: DirectionSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSection {
    pub direction: DirectionSpec,
    pub bracket_hi: f64,
    pub rel_width: f64,
    /// Also continue the weak branch to its fold.
    pub fold_check: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSection {
    pub magnitudes: Vec<f64>,
    pub runs_per_magnitude: usize,
    pub alignment_bins: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub graph_path: Option<PathBuf>,
    pub model: ModelSection,
    pub attention: AttentionSection,
    pub integrator: IntegratorConfig,
    pub theta_x: f64,
    pub attention_fraction: f64,
    pub simulate: SimulateSection,
    pub bifurcate: BifurcateSection,
    pub threshold: ThresholdSection,
    pub sweep: Option<SweepSection>,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::parse("", "<defaults>", None).expect("defaults are valid")
    }
}

impl RunConfig {
    /// `base_dir` resolves a relative `graph` path.
    pub fn parse(text: &str, source_name: &str, base_dir: Option<&Path>) -> LabResult<Self> {
        let mut kv = KeyValues::parse(text, source_name)?;
        let graph_path = kv
            .take("model", "graph")
            .map(|e| PathBuf::from(e.value))
            .map(|p| match base_dir {
                Some(dir) if p.is_relative() => dir.join(p),
                _ => p,
            });
        let model = ModelSection {
            damping: kv.f64_or("model", "damping", 1.0)?,
            self_weight: kv.f64_or("model", "self_weight", 1.0)?,
            edge_weight: kv.f64_or("model", "edge_weight", 1.0)?,
            input: kv.list("model", "input")?,
            input_centrality: kv.f64_or("model", "input_centrality", 0.0)?,
        };
        let attention = AttentionSection {
            low_offset: kv.f64_or("attention", "low_offset", -0.01)?,
            high_offset: kv.f64_or("attention", "high_offset", 0.6)?,
            threshold: kv.f64_or("attention", "threshold", 0.4)?,
            hill_exponent: kv
                .take_parsed("attention", "hill_exponent", "a positive integer")?
                .unwrap_or(DEFAULT_HILL_EXPONENT),
            tau: kv.f64_or("attention", "tau", 10.0)?,
        };
        let method = match kv.take("integrator", "method") {
            None => Method::Rk45Adaptive,
            Some(e) => match e.value.as_str() {
                "rk45" => Method::Rk45Adaptive,
                "rk4" => Method::Rk4Fixed,
                other => {
                    return Err(kv.err(
                        e.line,
                        format!("[integrator] method: expected rk45 or rk4, got `{other}`"),
                    ))
                }
            },
        };
        let defaults = IntegratorConfig::rk45(500.0);
        let integrator = IntegratorConfig {
            method,
            step: kv.f64_or("integrator", "step", defaults.step)?,
            rel_tol: kv.f64_or("integrator", "rel_tol", defaults.rel_tol)?,
            abs_tol: kv.f64_or("integrator", "abs_tol", defaults.abs_tol)?,
            t_end: kv.f64_or("integrator", "t_end", defaults.t_end)?,
            record_stride: kv
                .take_parsed("integrator", "record_stride", "a positive integer")?
                .unwrap_or(1),
        };
        let crit = CascadeCriteria::default();
        let theta_x = kv.f64_or("cascade", "theta_x", crit.theta_x)?;
        let attention_fraction =
            kv.f64_or("cascade", "attention_fraction", crit.attention_fraction)?;
        let initial_u = kv
            .list("simulate", "initial_u")?
            .unwrap_or_else(|| vec![0.0]);
        let simulate = SimulateSection {
            input_sigma: kv.take_parsed("simulate", "input_sigma", "a number")?,
            initial_x: kv.list("simulate", "initial_x")?,
            initial_x_sigma: kv.take_parsed("simulate", "initial_x_sigma", "a number")?,
            initial_u,
        };
        let mode = match kv.take("bifurcate", "mode") {
            None => None,
            Some(e) => Some(e.value.parse().map_err(|m: String| kv.err(e.line, m))?),
        };
        let bifurcate = BifurcateSection {
            mode,
            param_min: kv.take_parsed("bifurcate", "param_min", "a number")?,
            param_max: kv.take_parsed("bifurcate", "param_max", "a number")?,
            max_step: kv.f64_or("bifurcate", "max_step", 5e-2)?,
            direction: direction_spec(&mut kv, "bifurcate")?,
        };
        let threshold = ThresholdSection {
            direction: direction_spec(&mut kv, "threshold")?,
            bracket_hi: kv.f64_or("threshold", "bracket_hi", 0.1)?,
            rel_width: kv.f64_or(
                "threshold",
                "rel_width",
                cascade_core::threshold::DEFAULT_RELATIVE_WIDTH,
            )?,
            fold_check: kv
                .take_parsed("threshold", "fold_check", "true or false")?
                .unwrap_or(true),
        };
        let sweep = if kv.has_section("sweep") {
            let magnitudes = match kv.list("sweep", "magnitudes")? {
                Some(m) => m,
                None => {
                    let lo = kv.f64_or("sweep", "magnitude_min", 0.0)?;
                    let hi = kv.f64_or("sweep", "magnitude_max", 0.1)?;
                    let count = kv
                        .take_parsed("sweep", "magnitude_count", "a positive integer")?
                        .unwrap_or(8);
                    linspace(lo, hi, count)
                }
            };
            Some(SweepSection {
                magnitudes,
                runs_per_magnitude: kv
                    .take_parsed("sweep", "runs_per_magnitude", "a positive integer")?
                    .unwrap_or(50),
                alignment_bins: kv
                    .take_parsed("sweep", "alignment_bins", "a positive integer")?
                    .unwrap_or(5),
            })
        } else {
            None
        };
        kv.finish()?;
        let cfg = RunConfig {
            graph_path,
            model,
            attention,
            integrator,
            theta_x,
            attention_fraction,
            simulate,
            bifurcate,
            threshold,
            sweep,
            seed: 0,
            output_dir: PathBuf::from("."),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::parse(&text, &path.display().to_string(), path.parent())
    }

    /// Re-checks every constraint that does not need the graph.
    pub fn validate(&self) -> LabResult<()> {
        let bad = |m: &str| Err(LabError::Config(m.to_string()));
        self.model.unforced(1)?;
        if let Some(b) = &self.model.input {
            if b.iter().any(|v| !v.is_finite()) {
                return bad("[model] input must be finite");
            }
        }
        let a = &self.attention;
        if !(a.high_offset > a.low_offset) {
            return bad("[attention] high_offset must exceed low_offset");
        }
        if !(a.high_offset > 0.0) {
            return bad("[attention] high_offset must be positive so that u_high exceeds u_c");
        }
        if !(a.threshold > 0.0) || a.hill_exponent == 0 || !(a.tau > 0.0) {
            return bad("[attention] threshold, hill_exponent and tau must be positive");
        }
        self.integrator.validate()?;
        self.criteria()?;
        for s in [self.simulate.input_sigma, self.simulate.initial_x_sigma]
            .into_iter()
            .flatten()
        {
            if !(s >= 0.0) {
                return bad("[simulate] standard deviations must be nonnegative");
            }
        }
        if self.simulate.initial_x.is_some() && self.simulate.initial_x_sigma.is_some() {
            return bad("[simulate] give either initial_x or initial_x_sigma");
        }
        if self.simulate.input_sigma.is_some()
            && (self.model.input.is_some() || self.model.input_centrality != 0.0)
        {
            return bad("[simulate] input_sigma replaces the [model] input; drop one of them");
        }
        if let (Some(lo), Some(hi)) = (self.bifurcate.param_min, self.bifurcate.param_max) {
            if !(hi > lo) {
                return bad("[bifurcate] param_max must exceed param_min");
            }
        }
        if !(self.bifurcate.max_step > 0.0) {
            return bad("[bifurcate] max_step must be positive");
        }
        let t = &self.threshold;
        if !(t.bracket_hi > 0.0) || !(t.rel_width > 0.0 && t.rel_width < 1.0) {
            return bad("[threshold] bracket_hi must be positive and rel_width in (0, 1)");
        }
        if let Some(s) = &self.sweep {
            self.sweep_config_from(s)?.validate()?;
        }
        Ok(())
    }

    pub fn criteria(&self) -> cascade_core::Result<CascadeCriteria> {
        CascadeCriteria::new(self.theta_x, self.attention_fraction, self.integrator.t_end)
    }

    /// Sets the horizon of both the integrator and the cascade test.
    pub fn with_t_end(mut self, t_end: f64) -> LabResult<Self> {
        self.integrator.t_end = t_end;
        self.validate()?;
        Ok(self)
    }

    fn sweep_config_from(&self, s: &SweepSection) -> LabResult<SweepConfig> {
        let p = self.model.unforced(1)?;
        Ok(SweepConfig {
            magnitudes: s.magnitudes.clone(),
            runs_per_magnitude: s.runs_per_magnitude,
            alignment_bins: s.alignment_bins,
            rng_seed: self.seed,
            regime: p.regime(),
        })
    }

    /// Sweep settings with the run seed; the desk-scale grid when the file
    /// has no `[sweep]` section.
    pub fn sweep_config(&self) -> LabResult<SweepConfig> {
        match &self.sweep {
            Some(s) => self.sweep_config_from(s),
            None => Ok(SweepConfig::desk_scale(
                self.seed,
                self.model.unforced(1)?.regime(),
            )),
        }
    }
}

fn direction_spec(kv: &mut KeyValues, section: &str) -> LabResult<DirectionSpec> {
    let direction = kv.take(section, "direction");
    let alignment: Option<f64> = kv.take_parsed(section, "alignment", "a number")?;
    let completion = kv.list(section, "completion")?;
    match (direction, alignment) {
        (Some(e), Some(_)) => Err(kv.err(
            e.line,
            format!("[{section}] give either direction or alignment"),
        )),
        (Some(e), None) => {
            if completion.is_some() {
                return Err(kv.err(
                    e.line,
                    format!("[{section}] completion only applies with alignment"),
                ));
            }
            if e.value == "centrality" {
                Ok(DirectionSpec::Centrality)
            } else {
                let v = parse_list(&e.value).ok_or_else(|| {
                    kv.err(
                        e.line,
                        format!(
                            "[{section}] direction: expected `centrality` or a vector, got `{}`",
                            e.value
                        ),
                    )
                })?;
                if v.iter().all(|x| *x == 0.0) {
                    return Err(kv.err(e.line, format!("[{section}] direction must be nonzero")));
                }
                Ok(DirectionSpec::Explicit(v))
            }
        }
        (None, Some(a)) => {
            if !(a.abs() <= 1.0) {
                return Err(LabError::Config(format!(
                    "[{section}] alignment must lie in [-1, 1]"
                )));
            }
            Ok(DirectionSpec::Aligned {
                alignment: a,
                completion,
            })
        }
        (None, None) => {
            if completion.is_some() {
                return Err(LabError::Config(format!(
                    "[{section}] completion only applies with alignment"
                )));
            }
            Ok(DirectionSpec::Centrality)
        }
    }
}
