//! Run configuration read from a TOML file.
//!
//! Relative paths are resolved against the directory holding the config
//! file. Unset keys take the defaults below.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use pathx_core::dataset::RecencyMode;
use pathx_core::explain::{ScorerKind, SentenceTemplate};
use pathx_core::kg::{KgConfig, LogBase};
use pathx_core::metrics::DEFAULT_BETA;
use pathx_core::recommenders::{ModelKind, ModelSpec};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::interactions::InteractionSchema;
use crate::io::triples::{ItemMarker, LabelFormat, TripleFormat};
use crate::io::{parse_delimiter, Column};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    dataset: RawDataset,
    kg: RawKg,
    #[serde(default = "default_folds")]
    folds: usize,
    #[serde(default)]
    models: Vec<RawModel>,
    #[serde(default)]
    scorers: Vec<String>,
    #[serde(default = "default_ks")]
    ks: Vec<usize>,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_out")]
    out: PathBuf,
    #[serde(default = "default_alpha")]
    alpha: f64,
    #[serde(default = "default_beta")]
    beta: f64,
    #[serde(default)]
    template: Option<RawTemplate>,
}

fn default_folds() -> usize {
    10
}
fn default_ks() -> Vec<usize> {
    vec![1, 5]
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_alpha() -> f64 {
    0.5
}
fn default_beta() -> f64 {
    DEFAULT_BETA
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    path: PathBuf,
    #[serde(default)]
    preset: Option<String>,
    delimiter: Option<String>,
    header: Option<bool>,
    user: Option<Column>,
    item: Option<Column>,
    rating: Option<Column>,
    timestamp: Option<Column>,
    weight: Option<Column>,
    recency: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKg {
    path: PathBuf,
    delimiter: Option<String>,
    header: Option<bool>,
    head: Option<Column>,
    relation: Option<Column>,
    tail: Option<Column>,
    /// `"heads"`, `"interactions"` or a column.
    items: Option<toml::Value>,
    labels: Option<PathBuf>,
    hierarchy: Option<Vec<String>>,
    log_base: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    kind: String,
    #[serde(default)]
    params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTemplate {
    items_noun: String,
    verb: String,
}

/// Where catalog items come from when reading the triple file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ItemSource {
    Marker(ItemMarker),
    /// Items are the ids appearing in the interaction file.
    Interactions,
}

#[derive(Debug, Clone)]
pub struct KgSource {
    pub path: PathBuf,
    pub format: TripleFormat,
    pub items: ItemSource,
    pub labels: Option<(PathBuf, LabelFormat)>,
    pub config: KgConfig,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dataset: PathBuf,
    pub schema: InteractionSchema,
    pub kg: KgSource,
    pub folds: usize,
    pub models: Vec<ModelSpec>,
    pub scorers: Vec<ScorerKind>,
    pub ks: Vec<usize>,
    pub seed: u64,
    pub out: PathBuf,
    pub alpha: f64,
    pub beta: f64,
    pub template: SentenceTemplate,
}

fn config_err(e: impl std::fmt::Display) -> Error {
    Error::Config(e.to_string())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn recency(s: &str) -> Result<RecencyMode> {
    match s {
        "timestamp" => Ok(RecencyMode::Timestamp),
        "weight" => Ok(RecencyMode::Weight),
        _ => Err(Error::Config(format!("recency must be `timestamp` or `weight`, got `{s}`"))),
    }
}

impl RawDataset {
    fn schema(&self) -> Result<InteractionSchema> {
        let mut s = match self.preset.as_deref() {
            None | Some("movielens") => InteractionSchema::movielens(),
            Some("lastfm") => InteractionSchema::lastfm(),
            Some(p) => return Err(Error::Config(format!("unknown dataset preset `{p}`"))),
        };
        if let Some(d) = &self.delimiter {
            s.delimiter = parse_delimiter(d)?;
        }
        if let Some(h) = self.header {
            s.header = h;
        }
        if let Some(c) = &self.user {
            s.user = c.clone();
        }
        if let Some(c) = &self.item {
            s.item = c.clone();
        }
        if self.rating.is_some() {
            s.rating = self.rating.clone();
        }
        if self.timestamp.is_some() {
            s.timestamp = self.timestamp.clone();
        }
        if self.weight.is_some() {
            s.weight = self.weight.clone();
        }
        if let Some(r) = &self.recency {
            s.recency = recency(r)?;
        }
        Ok(s)
    }
}

impl RawKg {
    fn source(&self, base: &Path) -> Result<KgSource> {
        let mut format = TripleFormat::canonical();
        if let Some(d) = &self.delimiter {
            format.delimiter = parse_delimiter(d)?;
        }
        if let Some(h) = self.header {
            format.header = h;
        }
        for (slot, v) in [(&mut format.head, &self.head), (&mut format.relation, &self.relation), (&mut format.tail, &self.tail)] {
            if let Some(c) = v {
                *slot = c.clone();
            }
        }
        let items = match &self.items {
            None => ItemSource::Marker(format.items.clone()),
            Some(toml::Value::String(s)) if s == "heads" => ItemSource::Marker(ItemMarker::Heads),
            Some(toml::Value::String(s)) if s == "interactions" => ItemSource::Interactions,
            Some(toml::Value::Integer(i)) if *i >= 0 => ItemSource::Marker(ItemMarker::Column(Column::Index(*i as usize))),
            Some(toml::Value::Table(t)) => match t.get("column") {
                Some(toml::Value::Integer(i)) if *i >= 0 => {
                    ItemSource::Marker(ItemMarker::Column(Column::Index(*i as usize)))
                }
                Some(toml::Value::String(n)) => ItemSource::Marker(ItemMarker::Column(Column::Name(n.clone()))),
                _ => return Err(Error::Config("kg.items table needs a `column` key".into())),
            },
            Some(v) => return Err(Error::Config(format!("kg.items: unsupported value `{v}`"))),
        };
        if let ItemSource::Marker(m) = &items {
            format.items = m.clone();
        }
        let mut config = KgConfig::default();
        if let Some(h) = &self.hierarchy {
            config.hierarchy_edges = h.clone();
        }
        config.log_base = match self.log_base.as_deref() {
            None | Some("e") | Some("natural") => LogBase::Natural,
            Some("10") | Some("ten") => LogBase::Ten,
            Some(b) => return Err(Error::Config(format!("log_base must be `natural` or `10`, got `{b}`"))),
        };
        Ok(KgSource {
            path: resolve(base, &self.path),
            format,
            items,
            labels: self.labels.as_ref().map(|p| (resolve(base, p), LabelFormat::canonical())),
            config,
        })
    }
}

/// Default models: every kind with its default parameters.
pub fn default_models() -> Vec<ModelSpec> {
    ModelKind::ALL.iter().map(|&k| ModelSpec::new(k)).collect()
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base)
    }

    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(config_err)?;
        let models = if raw.models.is_empty() {
            default_models()
        } else {
            raw.models
                .iter()
                .map(|m| {
                    let kind: ModelKind = m.kind.parse().map_err(config_err)?;
                    let spec = ModelSpec { kind, params: m.params.clone() };
                    spec.validate().map_err(config_err)?;
                    Ok(spec)
                })
                .collect::<Result<_>>()?
        };
        let scorers = if raw.scorers.is_empty() {
            ScorerKind::ALL.to_vec()
        } else {
            raw.scorers.iter().map(|s| s.parse().map_err(config_err)).collect::<Result<_>>()?
        };
        let template = raw
            .template
            .map(|t| SentenceTemplate { items_noun: t.items_noun, verb: t.verb })
            .unwrap_or_default();
        let cfg = RunConfig {
            dataset: resolve(base, &raw.dataset.path),
            schema: raw.dataset.schema()?,
            kg: raw.kg.source(base)?,
            folds: raw.folds,
            models,
            scorers,
            ks: raw.ks,
            seed: raw.seed,
            out: resolve(base, &raw.out),
            alpha: raw.alpha,
            beta: raw.beta,
            template,
        };
        cfg.validate_values()?;
        Ok(cfg)
    }

    fn validate_values(&self) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::Config(format!("folds must be >= 2, got {}", self.folds)));
        }
        if self.ks.is_empty() || self.ks.contains(&0) {
            return Err(Error::Config("ks must be a non-empty list of values >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::Config(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::Config(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        let models: BTreeSet<ModelKind> = self.models.iter().map(|m| m.kind).collect();
        if models.len() != self.models.len() {
            return Err(Error::Config("each model kind may appear once".into()));
        }
        let scorers: BTreeSet<ScorerKind> = self.scorers.iter().copied().collect();
        if scorers.len() != self.scorers.len() {
            return Err(Error::Config("each scorer may appear once".into()));
        }
        Ok(())
    }

    /// Checks that every input file exists.
    pub fn check_paths(&self) -> Result<()> {
        let mut paths = vec![("dataset", &self.dataset), ("kg", &self.kg.path)];
        if let Some((p, _)) = &self.kg.labels {
            paths.push(("labels", p));
        }
        for (what, p) in paths {
            if !p.is_file() {
                return Err(Error::Config(format!("{what} file `{}` does not exist", p.display())));
            }
        }
        Ok(())
    }

    pub fn max_k(&self) -> usize {
        self.ks.iter().copied().max().unwrap_or(1)
    }
}
