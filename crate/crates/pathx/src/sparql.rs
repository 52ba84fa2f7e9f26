//! Knowledge-graph extraction from a SPARQL endpoint (Wikidata layout).
//!
//! Items are looked up in batches, either by entity id (`Q…`) or through an
//! identifier property such as IMDb (`P345`). Only whitelisted direct
//! claims are kept; blocklisted properties are dropped even when
//! whitelisted. Results are cached as a canonical triple file plus a label
//! file so offline runs never touch the network.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::time::Duration;

use pathx_core::kg::{GraphBuilder, KgConfig, KnowledgeGraph};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::triples::{write_labels, write_triples};

pub const WIKIDATA_ENDPOINT: &str = "https://query.wikidata.org/sparql";
const ENTITY_PREFIX: &str = "http://www.wikidata.org/entity/";
const DIRECT_PREFIX: &str = "http://www.wikidata.org/prop/direct/";

/// Movie edge types: property id and the label used as relation name.
pub const MOVIE_EDGES: [(&str, &str); 23] = [
    ("P57", "director"),
    ("P58", "screenwriter"),
    ("P86", "composer"),
    ("P136", "genre"),
    ("P161", "cast member"),
    ("P162", "producer"),
    ("P166", "award received"),
    ("P344", "director of photography"),
    ("P495", "country of origin"),
    ("P915", "filming location"),
    ("P921", "main subject"),
    ("P1040", "film editor"),
    ("P1411", "nominated for"),
    ("P1476", "title"),
    ("P170", "creator"),
    ("P840", "narrative location"),
    ("P2515", "costume designer"),
    ("P175", "performer"),
    ("P272", "production company"),
    ("P179", "part of the series"),
    ("P725", "voice actor"),
    ("P1431", "executive producer"),
    ("P2554", "production designer"),
];

/// Identifier and descriptive properties that are unique per item.
pub const DEFAULT_BLOCKLIST: [&str; 10] = [
    "P345", "P2142", "P2130", "P2047", "P1258", "P1265", "P1562", "P480", "P646", "P2603",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeSpec {
    pub pid: String,
    pub label: String,
}

pub fn movie_edges() -> Vec<EdgeSpec> {
    MOVIE_EDGES.iter().map(|(p, l)| EdgeSpec { pid: p.to_string(), label: l.to_string() }).collect()
}

/// How dataset items map onto endpoint entities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IdKind {
    /// External ids are entity ids such as `Q134773`.
    Entity,
    /// External ids are literal values of this identifier property.
    Property(String),
}

#[derive(Debug, Clone)]
pub struct SparqlConfig {
    pub endpoint: String,
    pub user_agent: String,
    pub batch: usize,
    pub retries: u32,
    pub backoff: Duration,
    pub timeout: Duration,
    pub language: String,
    pub blocklist: BTreeSet<String>,
}

impl Default for SparqlConfig {
    fn default() -> Self {
        SparqlConfig {
            endpoint: WIKIDATA_ENDPOINT.to_string(),
            user_agent: concat!("pathx/", env!("CARGO_PKG_VERSION")).to_string(),
            batch: 50,
            retries: 3,
            backoff: Duration::from_millis(500),
            timeout: Duration::from_secs(60),
            language: "en".to_string(),
            blocklist: DEFAULT_BLOCKLIST.iter().map(|s| s.to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Extraction {
    pub triples: BTreeSet<(String, String, String)>,
    pub labels: BTreeMap<String, String>,
    /// Items (dataset ids) that were queried.
    pub items: BTreeSet<String>,
    /// Items the endpoint returned nothing for.
    pub skipped: Vec<String>,
    /// Items whose batch failed after every retry.
    pub failed: Vec<String>,
}

impl Extraction {
    pub fn graph(&self, config: KgConfig) -> Result<KnowledgeGraph> {
        let mut b = GraphBuilder::new();
        for (h, r, t) in &self.triples {
            b.add_triple(h, r, t)?;
        }
        for i in &self.items {
            if b.contains(i) {
                b.mark_item(i);
            }
        }
        for (id, l) in &self.labels {
            if b.contains(id) {
                b.set_label(id, l);
            }
        }
        Ok(b.build(config))
    }

    /// Writes `<path>` (triples) and `<path>.labels` (labels).
    pub fn write_cache(&self, path: &Path) -> Result<KnowledgeGraph> {
        let g = self.graph(KgConfig::default())?;
        write_triples(&g, path)?;
        write_labels(&g, &labels_path(path))?;
        Ok(g)
    }

    /// Turns failed ids into an error.
    pub fn ensure_complete(&self) -> Result<()> {
        if self.failed.is_empty() {
            Ok(())
        } else {
            Err(Error::PartialExtraction { failed: self.failed.clone() })
        }
    }
}

pub fn labels_path(triples: &Path) -> std::path::PathBuf {
    let mut s = triples.as_os_str().to_owned();
    s.push(".labels");
    s.into()
}

#[derive(Deserialize)]
struct Response {
    results: Results,
}

#[derive(Deserialize)]
struct Results {
    bindings: Vec<BTreeMap<String, Term>>,
}

#[derive(Deserialize)]
struct Term {
    #[serde(rename = "type")]
    kind: String,
    value: String,
}

fn escape_literal(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

fn valid_entity(s: &str) -> bool {
    s.len() > 1 && s.starts_with('Q') && s[1..].bytes().all(|b| b.is_ascii_digit())
}

/// Builds the query for one batch of external ids.
pub fn batch_query(ids: &[&str], kind: &IdKind, edges: &[EdgeSpec], language: &str) -> String {
    let props: Vec<String> = edges.iter().map(|e| format!("wdt:{}", e.pid)).collect();
    let lookup = match kind {
        IdKind::Entity => {
            let vals: Vec<String> = ids.iter().map(|i| format!("wd:{i}")).collect();
            format!("VALUES ?item {{ {} }}\n  BIND(STRAFTER(STR(?item), \"{ENTITY_PREFIX}\") AS ?key)", vals.join(" "))
        }
        IdKind::Property(pid) => {
            let vals: Vec<String> = ids.iter().map(|i| format!("\"{}\"", escape_literal(i))).collect();
            format!("VALUES ?key {{ {} }}\n  ?item wdt:{pid} ?key .", vals.join(" "))
        }
    };
    format!(
        "SELECT ?key ?prop ?value ?valueLabel WHERE {{\n  {lookup}\n  VALUES ?prop {{ {} }}\n  ?item ?prop ?value .\n  SERVICE wikibase:label {{ bd:serviceParam wikibase:language \"{language}\". }}\n}}",
        props.join(" ")
    )
}

pub struct SparqlClient {
    cfg: SparqlConfig,
    agent: ureq::Agent,
}

impl SparqlClient {
    pub fn new(cfg: SparqlConfig) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(cfg.timeout))
            .http_status_as_error(false)
            .user_agent(cfg.user_agent.as_str())
            .build()
            .into();
        SparqlClient { cfg, agent }
    }

    fn post(&self, query: &str) -> Result<String> {
        let mut resp = self
            .agent
            .post(&self.cfg.endpoint)
            .header("Accept", "application/sparql-results+json")
            .send_form([("query", query)])
            .map_err(|e| Error::Sparql(e.to_string()))?;
        let status = resp.status();
        let body = resp.body_mut().read_to_string().map_err(|e| Error::Sparql(e.to_string()))?;
        if !status.is_success() {
            return Err(Error::Sparql(format!("HTTP {status}")));
        }
        Ok(body)
    }

    /// Runs a query with bounded retries and returns the result bindings.
    fn select(&self, query: &str) -> Result<Vec<BTreeMap<String, Term>>> {
        let mut last = None;
        for attempt in 0..=self.cfg.retries {
            if attempt > 0 {
                std::thread::sleep(self.cfg.backoff * attempt);
            }
            match self.post(query).and_then(|b| {
                serde_json::from_str::<Response>(&b).map_err(|e| Error::Sparql(format!("bad response: {e}")))
            }) {
                Ok(r) => return Ok(r.results.bindings),
                Err(e) => {
                    log::warn!("sparql attempt {} failed: {e}", attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(last.unwrap_or_else(|| Error::Sparql("no attempt made".into())))
    }

    /// Extracts whitelisted claims for every item of `id_map`
    /// (dataset id → external id).
    pub fn extract(&self, id_map: &BTreeMap<String, String>, kind: &IdKind, whitelist: &[EdgeSpec]) -> Result<Extraction> {
        let edges: Vec<EdgeSpec> =
            whitelist.iter().filter(|e| !self.cfg.blocklist.contains(&e.pid)).cloned().collect();
        if edges.is_empty() && !id_map.is_empty() {
            return Err(Error::Config("edge whitelist is empty after applying the blocklist".into()));
        }
        if self.cfg.batch == 0 {
            return Err(Error::Config("batch size must be positive".into()));
        }
        let label_of: BTreeMap<&str, &str> = edges.iter().map(|e| (e.pid.as_str(), e.label.as_str())).collect();
        let mut by_external: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        let mut out = Extraction::default();
        for (item, ext) in id_map {
            if matches!(kind, IdKind::Entity) && !valid_entity(ext) {
                log::warn!("skipping {item}: `{ext}` is not an entity id");
                out.skipped.push(item.clone());
                continue;
            }
            by_external.entry(ext.as_str()).or_default().push(item.as_str());
        }
        let externals: Vec<&str> = by_external.keys().copied().collect();
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for chunk in externals.chunks(self.cfg.batch) {
            let q = batch_query(chunk, kind, &edges, &self.cfg.language);
            let rows = match self.select(&q) {
                Ok(r) => r,
                Err(e) => {
                    log::error!("batch of {} ids failed: {e}", chunk.len());
                    out.failed.extend(chunk.iter().flat_map(|x| by_external[x].iter().map(|s| s.to_string())));
                    continue;
                }
            };
            for row in rows {
                let (Some(key), Some(prop), Some(value)) = (row.get("key"), row.get("prop"), row.get("value")) else {
                    continue;
                };
                let Some(items) = by_external.get(key.value.as_str()) else { continue };
                let pid = prop.value.strip_prefix(DIRECT_PREFIX).unwrap_or(&prop.value);
                let Some(rel) = label_of.get(pid) else { continue };
                let tail = if value.kind == "uri" {
                    value.value.strip_prefix(ENTITY_PREFIX).unwrap_or(&value.value).to_string()
                } else {
                    value.value.clone()
                };
                if tail.is_empty() {
                    continue;
                }
                if let Some(l) = row.get("valueLabel").filter(|l| l.value != tail) {
                    out.labels.insert(tail.clone(), l.value.clone());
                }
                for item in items {
                    if *item != tail {
                        out.triples.insert((item.to_string(), rel.to_string(), tail.clone()));
                    }
                }
                seen.insert(by_external.get_key_value(key.value.as_str()).map(|(k, _)| *k).unwrap_or(""));
            }
        }
        for (ext, items) in &by_external {
            let failed = items.iter().any(|i| out.failed.iter().any(|f| f == i));
            if !seen.contains(ext) && !failed {
                log::info!("no claims for `{ext}`; skipped");
                out.skipped.extend(items.iter().map(|s| s.to_string()));
            }
        }
        out.items = id_map.keys().cloned().collect();
        out.skipped.sort();
        out.failed.sort();
        Ok(out)
    }
}

/// Reads `item → external id` pairs from a delimited file with a header,
/// e.g. MovieLens `links.csv` (`movieId`, `imdbId`). Rows with an empty
/// external id are skipped. `pad` left-pads numeric ids with zeros and
/// `prefix` is prepended when missing (`7` and `tt` turn `114709` into
/// `tt0114709`).
pub fn read_id_map(
    path: &Path,
    delimiter: u8,
    item: &crate::io::Column,
    external: &crate::io::Column,
    pad: usize,
    prefix: &str,
) -> Result<BTreeMap<String, String>> {
    let mut rdr = crate::io::reader(path, delimiter, true)?;
    let headers = rdr.headers().map_err(|e| crate::io::csv_err(path, e))?.clone();
    let (i, x) = (item.resolve(Some(&headers), path)?, external.resolve(Some(&headers), path)?);
    let mut out = BTreeMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| crate::io::csv_err(path, e))?;
        let (id, ext) = (crate::io::field(&rec, i, path, "item")?, crate::io::field(&rec, x, path, "external id")?);
        if id.is_empty() || ext.is_empty() {
            continue;
        }
        let mut ext = if ext.bytes().all(|b| b.is_ascii_digit()) { format!("{ext:0>pad$}") } else { ext.to_owned() };
        if !ext.starts_with(prefix) {
            ext.insert_str(0, prefix);
        }
        out.insert(id.to_owned(), ext);
    }
    Ok(out)
}
