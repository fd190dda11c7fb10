//! Plain-text run configuration: INI sections with `key = value` lines.
//!
//! ```text
//! [system]
//! preset = wright
//!
//! [run]
//! steps = 20
//! points_per_box = 100
//! seed = 7
//! checkpoint_every = 5
//! ```

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use ini::{Ini, Properties};

use crate::boxcover::BoxRegion;
use crate::dde::{DdeSystem, HistorySegment};
use crate::embedding::{EmbeddingConfig, Observable, ObservableLayout};
use crate::error::{Error, Result};
use crate::models::{self, linear_system};
use crate::subdivision::RunConfig;
use crate::synthetic::SyntheticKind;

/// What is being iterated.
#[derive(Debug, Clone)]
pub enum Target {
    Delay {
        system: DdeSystem,
        embedding: EmbeddingConfig,
        /// Constant history for direct simulation.
        initial: Vec<f64>,
    },
    Synthetic(SyntheticKind),
}

impl Target {
    pub fn dim(&self, domain: &BoxRegion) -> usize {
        match self {
            Target::Delay { embedding, .. } => embedding.dim(),
            Target::Synthetic(_) => domain.dim(),
        }
    }
}

/// Artifacts written by `run`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Artifact {
    Covering,
    Checkpoints,
    Report,
    Centers,
}

impl Artifact {
    fn parse(s: &str) -> Result<Self> {
        match s {
            "covering" => Ok(Artifact::Covering),
            "checkpoints" => Ok(Artifact::Checkpoints),
            "report" => Ok(Artifact::Report),
            "centers" => Ok(Artifact::Centers),
            other => Err(Error::Config(format!(
                "unknown artifact {other:?}; expected covering, checkpoints, report or centers"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct OutputConfig {
    pub directory: PathBuf,
    pub emit: BTreeSet<Artifact>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: PathBuf::from("out"),
            emit: [Artifact::Covering, Artifact::Checkpoints, Artifact::Report]
                .into_iter()
                .collect(),
        }
    }
}

/// Parameters of a direct simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulateConfig {
    pub transient: f64,
    pub samples: usize,
    pub spacing: f64,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            transient: 200.0,
            samples: 500,
            spacing: 0.25,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Config {
    pub name: String,
    pub target: Target,
    pub domain: BoxRegion,
    pub excluded: Vec<BoxRegion>,
    pub run: RunConfig,
    /// Write a covering every this many depths; 0 disables.
    pub checkpoint_every: u32,
    /// First depth eligible for a checkpoint.
    pub checkpoint_start: u32,
    pub output: OutputConfig,
    pub simulate: SimulateConfig,
    /// The text the configuration was parsed from.
    pub source: String,
}

const SECTIONS: [&str; 8] = [
    "system",
    "embedding",
    "observable",
    "domain",
    "excluded",
    "run",
    "output",
    "simulate",
];

fn err(section: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("[{section}] {msg}"))
}

struct Section<'a> {
    name: &'a str,
    props: Option<&'a Properties>,
}

impl<'a> Section<'a> {
    fn new(name: &'a str, props: Option<&'a Properties>, allowed: &[&str]) -> Result<Self> {
        if let Some(p) = props {
            for (key, _) in p.iter() {
                if !allowed.contains(&key) {
                    return Err(err(name, format!("unknown key {key:?}")));
                }
            }
        }
        Ok(Section { name, props })
    }

    fn raw(&self, key: &str) -> Option<&'a str> {
        self.props.and_then(|p| p.get(key)).map(str::trim)
    }

    fn parse<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        self.raw(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|e| err(self.name, format!("{key} = {v:?}: {e}")))
            })
            .transpose()
    }

    fn required<T: std::str::FromStr>(&self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.parse(key)?
            .ok_or_else(|| err(self.name, format!("missing key {key:?}")))
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        self.raw(key)
            .map(|v| {
                v.split(|c: char| c == ',' || c.is_whitespace())
                    .filter(|s| !s.is_empty())
                    .map(|s| {
                        s.parse::<f64>()
                            .map_err(|e| err(self.name, format!("{key}: {s:?}: {e}")))
                    })
                    .collect()
            })
            .transpose()
    }
}

fn parse_box(section: &Section, k: usize) -> Result<Option<BoxRegion>> {
    let lower = section.list("lower")?;
    let upper = section.list("upper")?;
    let center = section.list("center")?;
    let radius = section.list("radius")?;
    let widen = |v: Vec<f64>, what: &str| -> Result<Vec<f64>> {
        match v.len() {
            1 => Ok(vec![v[0]; k]),
            n if n == k => Ok(v),
            n => Err(err(
                section.name,
                format!("{what} has {n} values, expected 1 or k = {k}"),
            )),
        }
    };
    let region = match (lower, upper, center, radius) {
        (None, None, None, None) => return Ok(None),
        (Some(lo), Some(hi), None, None) => {
            BoxRegion::from_bounds(&widen(lo, "lower")?, &widen(hi, "upper")?)
        }
        (None, None, Some(c), Some(r)) => {
            BoxRegion::new(widen(c, "center")?, widen(r, "radius")?)
        }
        _ => {
            return Err(err(
                section.name,
                "give either lower and upper, or center and radius",
            ))
        }
    };
    region.map(Some).map_err(|e| err(section.name, e))
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Config::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let ini = Ini::load_from_str_noescape(text)
            .map_err(|e| Error::Config(format!("malformed configuration: {e}")))?;
        for (name, props) in ini.iter() {
            match name {
                None if props.is_empty() => {}
                None => return Err(Error::Config("keys outside any section".into())),
                Some(s) if !SECTIONS.contains(&s) => {
                    return Err(Error::Config(format!("unknown section [{s}]")))
                }
                Some(_) => {}
            }
        }
        for single in ["system", "embedding", "domain", "run", "output", "simulate"] {
            if ini.section_all(Some(single)).count() > 1 {
                return Err(Error::Config(format!("section [{single}] appears twice")));
            }
        }

        let system = Section::new(
            "system",
            ini.section(Some("system")),
            &["preset", "rhs", "synthetic", "a", "b", "tau", "dim", "target", "initial"],
        )?;
        if system.props.is_none() {
            return Err(Error::Config("missing section [system]".into()));
        }
        let embedding = Section::new(
            "embedding",
            ini.section(Some("embedding")),
            &["k", "m", "K", "d_bound", "sigma_bound", "p", "step"],
        )?;
        let observables: Vec<Section> = ini
            .section_all(Some("observable"))
            .map(|p| Section::new("observable", Some(p), &["component", "nu", "count", "divisor"]))
            .collect::<Result<_>>()?;

        let selectors = ["preset", "rhs", "synthetic"]
            .iter()
            .filter(|k| system.raw(k).is_some())
            .count();
        if selectors != 1 {
            return Err(err("system", "give exactly one of preset, rhs, synthetic"));
        }

        let (name, target, mut domain, mut excluded) = if let Some(p) = system.raw("preset") {
            let pr = models::preset(p)?;
            for key in ["a", "b", "tau", "dim", "target"] {
                if system.raw(key).is_some() {
                    return Err(err("system", format!("{key} is not used with a preset")));
                }
            }
            let initial = system.list("initial")?.unwrap_or(pr.initial);
            let emb = build_embedding(&embedding, &observables, &pr.system, Some(pr.embedding))?;
            (
                pr.name.to_string(),
                Target::Delay {
                    system: pr.system,
                    embedding: emb,
                    initial,
                },
                Some(pr.domain),
                pr.excluded,
            )
        } else if let Some(rhs) = system.raw("rhs") {
            if rhs != "linear" {
                return Err(err("system", format!("unknown rhs {rhs:?}; expected linear")));
            }
            let sys = linear_system(
                system.required("a")?,
                system.required("b")?,
                system.required("tau")?,
            )?;
            let initial = system.list("initial")?.unwrap_or_else(|| vec![0.1]);
            let emb = build_embedding(&embedding, &observables, &sys, None)?;
            (
                "linear".to_string(),
                Target::Delay {
                    system: sys,
                    embedding: emb,
                    initial,
                },
                None,
                Vec::new(),
            )
        } else {
            let kind_name = system.raw("synthetic").expect("checked");
            if embedding.props.is_some() || !observables.is_empty() {
                return Err(err("embedding", "not used with a synthetic map"));
            }
            let dim: usize = system.parse("dim")?.unwrap_or(2);
            let mut kind = SyntheticKind::from_name(kind_name, dim)?;
            if let Some(t) = system.list("target")? {
                if !matches!(kind, SyntheticKind::Constant(_)) {
                    return Err(err("system", "target is only used by the constant map"));
                }
                kind = SyntheticKind::Constant(t);
                kind.check_dim(dim)?;
            }
            let domain = kind.default_domain(dim);
            (kind.name().to_string(), Target::Synthetic(kind), Some(domain), Vec::new())
        };

        let k = match &target {
            Target::Delay { embedding, .. } => embedding.dim(),
            Target::Synthetic(_) => domain.as_ref().map(|d| d.dim()).unwrap_or(0),
        };

        let dom = Section::new(
            "domain",
            ini.section(Some("domain")),
            &["lower", "upper", "center", "radius"],
        )?;
        if let Some(q) = parse_box(&dom, k)? {
            domain = Some(q);
        }
        let domain = domain.ok_or_else(|| err("domain", "the study region Q is required"))?;
        if domain.dim() != k {
            return Err(err("domain", format!("Q has dimension {}, expected k = {k}", domain.dim())));
        }
        let extra: Vec<BoxRegion> = ini
            .section_all(Some("excluded"))
            .map(|p| {
                let s = Section::new("excluded", Some(p), &["lower", "upper", "center", "radius"])?;
                parse_box(&s, k)?.ok_or_else(|| err("excluded", "empty section"))
            })
            .collect::<Result<_>>()?;
        if !extra.is_empty() {
            excluded = extra;
        }

        let run_s = Section::new(
            "run",
            ini.section(Some("run")),
            &[
                "steps",
                "points_per_box",
                "seed",
                "threads",
                "checkpoint_every",
                "checkpoint_start",
                "max_payloads_per_box",
            ],
        )?;
        let defaults = RunConfig::default();
        let run = RunConfig {
            steps: run_s.parse("steps")?.unwrap_or(defaults.steps),
            points_per_box: run_s.parse("points_per_box")?.unwrap_or(defaults.points_per_box),
            seed: run_s.parse("seed")?.unwrap_or(defaults.seed),
            max_payloads_per_box: run_s
                .parse("max_payloads_per_box")?
                .unwrap_or(defaults.max_payloads_per_box),
            threads: run_s.parse("threads")?,
        };
        run.validate()?;
        let checkpoint_every = run_s.parse("checkpoint_every")?.unwrap_or(0);
        let checkpoint_start = run_s.parse("checkpoint_start")?.unwrap_or(0);

        let out_s = Section::new("output", ini.section(Some("output")), &["directory", "emit"])?;
        let mut output = OutputConfig::default();
        if let Some(d) = out_s.raw("directory") {
            output.directory = PathBuf::from(d);
        }
        if let Some(e) = out_s.raw("emit") {
            output.emit = e
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .map(Artifact::parse)
                .collect::<Result<_>>()?;
        }

        let sim_s = Section::new(
            "simulate",
            ini.section(Some("simulate")),
            &["transient", "samples", "spacing"],
        )?;
        let sd = SimulateConfig::default();
        let simulate = SimulateConfig {
            transient: sim_s.parse("transient")?.unwrap_or(sd.transient),
            samples: sim_s.parse("samples")?.unwrap_or(sd.samples),
            spacing: sim_s.parse("spacing")?.unwrap_or(sd.spacing),
        };

        Ok(Config {
            name,
            target,
            domain,
            excluded,
            run,
            checkpoint_every,
            checkpoint_start,
            output,
            simulate,
            source: text.to_string(),
        })
    }

    pub fn dim(&self) -> usize {
        self.target.dim(&self.domain)
    }

    /// Whether a checkpoint covering is written after reaching `depth`.
    pub fn is_checkpoint(&self, depth: u32) -> bool {
        self.checkpoint_every > 0
            && depth >= self.checkpoint_start
            && depth % self.checkpoint_every == 0
    }

    /// Constant initial history for direct simulations.
    pub fn initial_history(&self) -> Result<HistorySegment> {
        match &self.target {
            Target::Delay {
                system, initial, ..
            } => {
                if initial.len() != system.dim() {
                    return Err(err(
                        "system",
                        format!(
                            "initial has {} values, the system has dimension {}",
                            initial.len(),
                            system.dim()
                        ),
                    ));
                }
                HistorySegment::constant(system.tau(), initial)
            }
            Target::Synthetic(_) => Err(Error::Config(
                "synthetic maps have no delay history to simulate".into(),
            )),
        }
    }
}

fn build_embedding(
    s: &Section,
    observables: &[Section],
    sys: &DdeSystem,
    base: Option<EmbeddingConfig>,
) -> Result<EmbeddingConfig> {
    let tau = sys.tau();
    let k: Option<usize> = s.parse("k")?;
    let divisor: Option<usize> = s.parse("K")?;
    let layout = if !observables.is_empty() {
        let obs = observables
            .iter()
            .map(|o| {
                let component: usize = o.required("component")?;
                if component == 0 {
                    return Err(err("observable", "components are numbered from 1"));
                }
                Ok(Observable::new(
                    component - 1,
                    o.parse("nu")?.unwrap_or(0.0),
                    o.parse("count")?.unwrap_or(1),
                    o.parse("divisor")?.unwrap_or(1),
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        let divisor = divisor.ok_or_else(|| err("embedding", "K is required with observables"))?;
        ObservableLayout::new(tau, sys.dim(), divisor, obs)?
    } else if let Some(k) = k {
        if sys.dim() != 1 {
            return Err(err(
                "embedding",
                "a vector-valued system needs [observable] sections",
            ));
        }
        match divisor {
            None => ObservableLayout::scalar(tau, k)?,
            Some(d) => ObservableLayout::new(tau, 1, d, vec![Observable::new(0, -tau, k, d)])?,
        }
    } else if let Some(b) = &base {
        if divisor.is_some() {
            return Err(err("embedding", "K needs k or [observable] sections"));
        }
        b.layout.clone()
    } else {
        return Err(err("embedding", "missing key \"k\""));
    };
    if let Some(k) = k {
        if k != layout.dim() {
            return Err(err(
                "embedding",
                format!("k = {k} but the observables give {}", layout.dim()),
            ));
        }
    }
    let m = match (s.parse("m")?, &base) {
        (Some(m), _) => m,
        (None, Some(b)) => b.m,
        (None, None) => return Err(err("embedding", "missing key \"m\"")),
    };
    if m == 0 {
        return Err(err("embedding", "m must be positive"));
    }
    let mut cfg = EmbeddingConfig::new(layout, m);
    cfg.d_bound = s.parse("d_bound")?;
    cfg.sigma_bound = s.parse("sigma_bound")?;
    if let Some(p) = s.parse("p")? {
        cfg.extras = p;
    }
    if let Some(h) = s.parse("step")? {
        cfg.step = h;
    }
    cfg.validate()?;
    Ok(cfg)
}
