use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};
use pathx::config::RunConfig;
use pathx::error::Error;
use pathx::io::interactions::load_interactions;
use pathx::io::triples::{write_labels, write_triples};
use pathx::io::{parse_delimiter, Column};
use pathx::pipeline::{explain_items, load_kg, prepare, run_offline_eval, UserHistory};
use pathx::report::{read_all, render_markdown};
use pathx::sparql::{labels_path, movie_edges, read_id_map, IdKind, SparqlClient, SparqlConfig};
use pathx::trial::service::serve;
use pathx::trial::store::EventLog;
use pathx::trial::{load_questions, Trial, TrialConfig};
use pathx_core::explain::ScorerKind;
use pathx_core::recommenders::{fit, ModelKind, ModelSpec};

const EXIT_CONFIG: u8 = 2;
const EXIT_PARTIAL: u8 = 3;

#[derive(Parser)]
#[command(name = "pathx", version, about = "Knowledge-graph path explanations and their offline metrics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum IdKindArg {
    /// External ids are Wikidata entity ids (Q…).
    Entity,
    /// External ids are IMDb ids (P345).
    Imdb,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a canonical triple file, from a SPARQL endpoint (with --links)
    /// or from the triple file named in --config.
    Ingest {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Item → external id file with a header, e.g. links.csv.
        #[arg(long)]
        links: Option<PathBuf>,
        #[arg(long, default_value = "movieId")]
        item_column: String,
        #[arg(long, default_value = "imdbId")]
        external_column: String,
        #[arg(long, default_value = ",")]
        delimiter: String,
        #[arg(long, value_enum, default_value = "imdb")]
        id_kind: IdKindArg,
        #[arg(long, default_value = pathx::sparql::WIKIDATA_ENDPOINT)]
        endpoint: String,
        #[arg(long, default_value_t = 50)]
        batch: usize,
        #[arg(long, default_value_t = 3)]
        retries: u32,
        /// Output triple file; labels go next to it with a `.labels` suffix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the offline evaluation.
    Eval {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Cutoffs, repeatable.
        #[arg(long)]
        k: Vec<usize>,
    },
    /// Recommend for one user on the full data and print explanations.
    Explain {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        user: String,
        #[arg(long, default_value = "ease")]
        model: String,
        /// Scorers, repeatable; defaults to the configured ones.
        #[arg(long)]
        scorer: Vec<String>,
        #[arg(long, default_value_t = 5)]
        k: usize,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Re-render report.md from the CSV files of an eval run.
    Report {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Run the trial HTTP service.
    Serve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, env = "PATHX_PORT", default_value_t = 8080)]
        port: u16,
        #[arg(long, env = "PATHX_DATA_DIR", default_value = "trial-data")]
        data_dir: PathBuf,
        /// Seeds sessions and ids; random ids when unset.
        #[arg(long, env = "PATHX_SEED")]
        seed: Option<u64>,
        /// Questionnaire TOML replacing the bundled one.
        #[arg(long)]
        questions: Option<PathBuf>,
        #[arg(long, default_value = "127.0.0.1")]
        host: std::net::IpAddr,
    },
}

fn config_error(e: &anyhow::Error) -> bool {
    e.chain().any(|c| {
        matches!(
            c.downcast_ref::<Error>(),
            Some(Error::Config(_) | Error::MissingColumn { .. } | Error::Parse { .. } | Error::Io { .. })
        )
    })
}

fn load_config(path: &Path, seed: Option<u64>, out: Option<PathBuf>, ks: Vec<usize>) -> anyhow::Result<RunConfig> {
    let mut cfg = RunConfig::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(o) = out {
        cfg.out = o;
    }
    if !ks.is_empty() {
        if ks.contains(&0) {
            return Err(Error::Config("--k values must be >= 1".into()).into());
        }
        cfg.ks = ks;
    }
    cfg.check_paths()?;
    Ok(cfg)
}

/// Returns `true` when the run was partial.
fn run(cmd: Cmd) -> anyhow::Result<bool> {
    match cmd {
        Cmd::Ingest { config, links, item_column, external_column, delimiter, id_kind, endpoint, batch, retries, out } => {
            if let Some(links) = links {
                let (pad, prefix, kind) = match id_kind {
                    IdKindArg::Imdb => (7, "tt", IdKind::Property("P345".into())),
                    IdKindArg::Entity => (0, "", IdKind::Entity),
                };
                let ids = read_id_map(
                    &links,
                    parse_delimiter(&delimiter)?,
                    &Column::name(&item_column),
                    &Column::name(&external_column),
                    pad,
                    prefix,
                )?;
                let client = SparqlClient::new(SparqlConfig {
                    endpoint,
                    batch,
                    retries,
                    backoff: Duration::from_millis(1000),
                    ..SparqlConfig::default()
                });
                let x = client.extract(&ids, &kind, &movie_edges())?;
                let g = x.write_cache(&out)?;
                let st = g.stats();
                println!(
                    "{} triples, {} entities, {} items; {} ids skipped, {} failed",
                    st.triples,
                    st.entities,
                    st.items,
                    x.skipped.len(),
                    x.failed.len()
                );
                if let Err(e) = x.ensure_complete() {
                    eprintln!("{e}");
                    return Ok(true);
                }
                return Ok(false);
            }
            let config = config.ok_or_else(|| Error::Config("ingest needs --links or --config".into()))?;
            let cfg = load_config(&config, None, None, Vec::new())?;
            let raw = load_interactions(&cfg.dataset, &cfg.schema)?;
            let g = load_kg(&cfg, &raw)?;
            write_triples(&g, &out)?;
            write_labels(&g, &labels_path(&out))?;
            let st = g.stats();
            println!(
                "{} triples ({} duplicates dropped), {} entities, {} edge types, {} items",
                st.triples, st.duplicates_dropped, st.entities, st.edge_types, st.items
            );
            Ok(false)
        }
        Cmd::Eval { config, seed, out, k } => {
            let cfg = load_config(&config, seed, out, k)?;
            let table = run_offline_eval(&cfg)?;
            println!("wrote {}", cfg.out.join("report.md").display());
            for e in &table.errors {
                eprintln!("error: fold {:?} {:?} {:?} {}: {}", e.fold, e.model, e.scorer, e.stage, e.message);
            }
            Ok(!table.errors.is_empty())
        }
        Cmd::Explain { config, user, model, scorer, k, seed } => {
            let cfg = load_config(&config, seed, None, Vec::new())?;
            let kind: ModelKind = model.parse().map_err(|e: pathx_core::Error| Error::Config(e.to_string()))?;
            let scorers: Vec<ScorerKind> = if scorer.is_empty() {
                cfg.scorers.clone()
            } else {
                scorer
                    .iter()
                    .map(|s| s.parse().map_err(|e: pathx_core::Error| Error::Config(e.to_string())))
                    .collect::<Result<_, _>>()?
            };
            let spec = cfg.models.iter().find(|m| m.kind == kind).cloned().unwrap_or_else(|| ModelSpec::new(kind));
            let p = prepare(&cfg)?;
            let m = fit(&spec, &p.data, Some(&p.graph), cfg.seed)?;
            let list = m.recommend(&user, k);
            if list.fallback {
                eprintln!("user {user} is unknown; showing the popularity list");
            }
            let mut history: BTreeMap<String, f64> = BTreeMap::new();
            for ((u, i), r) in p.data.recency_index() {
                if u == user {
                    history.insert(i.to_owned(), r);
                }
            }
            let h = UserHistory::new(&p.graph, history.into_iter().collect());
            let items: Vec<String> = list.item_ids().map(str::to_owned).collect();
            for s in scorers {
                println!("[{}]", s.display());
                for (rank, x) in explain_items(&p.graph, &h, &items, s, cfg.alpha, &cfg.template).iter().enumerate() {
                    match &x.explanation {
                        Some(e) => println!("{}. {}: {}", rank + 1, x.item, e.sentence),
                        None => println!("{}. {}: (no shared attribute)", rank + 1, x.item),
                    }
                }
            }
            Ok(false)
        }
        Cmd::Report { dir } => {
            let t = read_all(&dir)?;
            let md = dir.join("report.md");
            std::fs::write(&md, render_markdown(&t)).map_err(|e| Error::io(&md, e))?;
            println!("wrote {}", md.display());
            Ok(!t.errors.is_empty())
        }
        Cmd::Serve { config, port, data_dir, seed, questions, host } => {
            let cfg = load_config(&config, None, None, Vec::new())?;
            let p = prepare(&cfg)?;
            std::fs::create_dir_all(&data_dir).map_err(|e| Error::io(&data_dir, e))?;
            let log = EventLog::open(&data_dir.join("trial-events.ndjson"))?;
            let tc = TrialConfig {
                seed: seed.unwrap_or(cfg.seed),
                id_seed: seed,
                alpha: cfg.alpha,
                template: cfg.template.clone(),
                questions: load_questions(questions.as_deref())?,
                ..TrialConfig::default()
            };
            let trial = Arc::new(Trial::new(p.graph, &p.covered, p.data, tc, log)?);
            let rt = tokio::runtime::Runtime::new().context("starting runtime")?;
            rt.block_on(serve(trial, SocketAddr::new(host, port)))?;
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(EXIT_PARTIAL),
        Err(e) => {
            eprintln!("error: {e:#}");
            if config_error(&e) {
                ExitCode::from(EXIT_CONFIG)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
