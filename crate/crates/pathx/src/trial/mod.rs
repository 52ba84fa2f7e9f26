//! Within-subjects trial: sessions, elicitation, paired explanations with
//! randomized sides, Likert answers and export.

pub mod service;
pub mod store;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::{Arc, Mutex};

use pathx_core::dataset::{seeded_shuffle, Dataset, Interaction};
use pathx_core::explain::{ScorerKind, SentenceTemplate};
use pathx_core::kg::KnowledgeGraph;
use pathx_core::recommenders::{fit, ModelKind, ModelSpec};
use pathx_core::trial::{
    validate_profile, validate_responses, Demographics, LikertAnswer, ResolvedAnswer, ResponseCounts, SessionState,
    Side, SideAssignment, COMPARED, COMPARISON_SIZE, ELICITATION_SIZE, QUESTION_COUNT,
};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pipeline::{explain_items, UserHistory};
use store::{AnswerRecord, BundleEntry, DemographicsRecord, Event, EventLog, SessionRecord};

const DEFAULT_QUESTIONS: &str = include_str!("../../data/questions.toml");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: u8,
    pub goal: String,
    pub text: String,
}

#[derive(Deserialize)]
struct QuestionFile {
    question: Vec<Question>,
}

/// Parses a questionnaire; ids 1..=6 must each appear once. Returned in id
/// order.
pub fn parse_questions(text: &str) -> Result<Vec<Question>> {
    let f: QuestionFile = toml::from_str(text).map_err(|e| Error::Config(format!("questions: {e}")))?;
    let mut qs = f.question;
    qs.sort_by_key(|q| q.id);
    let ids: Vec<u8> = qs.iter().map(|q| q.id).collect();
    let expected: Vec<u8> = (1..=QUESTION_COUNT as u8).collect();
    if ids != expected {
        return Err(Error::Config(format!("questions must have ids 1 to {QUESTION_COUNT} once each, got {ids:?}")));
    }
    Ok(qs)
}

pub fn load_questions(path: Option<&Path>) -> Result<Vec<Question>> {
    match path {
        Some(p) => parse_questions(&std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?),
        None => parse_questions(DEFAULT_QUESTIONS),
    }
}

/// Failure of a trial operation, mapped to an HTTP status by the service.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrialError {
    NotFound(String),
    Invalid { message: String, fields: Vec<String> },
    Conflict(String),
    Internal(String),
}

impl std::fmt::Display for TrialError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TrialError::NotFound(m) | TrialError::Conflict(m) | TrialError::Internal(m) => f.write_str(m),
            TrialError::Invalid { message, .. } => f.write_str(message),
        }
    }
}

impl std::error::Error for TrialError {}

fn invalid(message: impl Into<String>) -> TrialError {
    TrialError::Invalid { message: message.into(), fields: Vec::new() }
}

fn internal(e: impl std::fmt::Display) -> TrialError {
    TrialError::Internal(e.to_string())
}

pub type TrialResult<T> = std::result::Result<T, TrialError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogItem {
    pub id: String,
    pub label: String,
}

/// What a participant sees: sides only, never scorer names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonEntry {
    pub item: String,
    pub label: String,
    pub a: Option<String>,
    pub b: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonView {
    pub session: String,
    pub entries: Vec<ComparisonEntry>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseInput {
    pub question: u8,
    pub answer: LikertAnswerName,
}

/// Likert answer as it appears in payloads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LikertAnswerName {
    MuchMoreA,
    MoreA,
    Equal,
    MoreB,
    MuchMoreB,
}

impl From<LikertAnswerName> for LikertAnswer {
    fn from(a: LikertAnswerName) -> Self {
        match a {
            LikertAnswerName::MuchMoreA => LikertAnswer::MuchMoreA,
            LikertAnswerName::MoreA => LikertAnswer::MoreA,
            LikertAnswerName::Equal => LikertAnswer::Equal,
            LikertAnswerName::MoreB => LikertAnswer::MoreB,
            LikertAnswerName::MuchMoreB => LikertAnswer::MuchMoreB,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportQuestion {
    pub id: u8,
    pub goal: String,
    pub text: String,
    /// Count per resolved answer label, in scale order.
    pub counts: Vec<(String, usize)>,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportRow {
    pub session: String,
    pub side_a: String,
    pub side_b: String,
    pub question: u8,
    pub goal: String,
    pub answer: String,
    pub resolved: String,
    pub favoured: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Export {
    /// Set when no session has completed.
    pub empty: bool,
    pub completed_sessions: usize,
    pub scale: Vec<String>,
    pub questions: Vec<ExportQuestion>,
    pub rows: Vec<ExportRow>,
}

impl Export {
    /// One line per raw row, or a single marker line when empty.
    pub fn to_csv(&self) -> String {
        if self.empty {
            return "# empty export: no completed session\n".to_owned();
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let _ = w.write_record(["session", "side_a", "side_b", "question", "goal", "answer", "resolved", "favoured"]);
        for r in &self.rows {
            let q = r.question.to_string();
            let _ = w.write_record([
                r.session.as_str(),
                &r.side_a,
                &r.side_b,
                &q,
                &r.goal,
                &r.answer,
                &r.resolved,
                r.favoured.as_deref().unwrap_or(""),
            ]);
        }
        String::from_utf8(w.into_inner().unwrap_or_default()).unwrap_or_default()
    }
}

/// Seed derived from the session id, the deployment seed and a purpose tag.
pub fn session_seed(session: &str, seed: u64, purpose: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(purpose.as_bytes());
    h.update([0]);
    h.update(session.as_bytes());
    h.update(seed.to_le_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest has 32 bytes"))
}

/// Side assignment of a session: a fair coin from the session seed.
pub fn sides_for(session: &str, seed: u64) -> SideAssignment {
    SideAssignment::from_coin(session_seed(session, seed, "sides") & 1 == 0)
}

pub struct TrialConfig {
    pub seed: u64,
    /// `None` draws session ids from OS entropy.
    pub id_seed: Option<u64>,
    pub alpha: f64,
    pub ease_lambda: f64,
    pub template: SentenceTemplate,
    pub questions: Vec<Question>,
}

impl Default for TrialConfig {
    fn default() -> Self {
        TrialConfig {
            seed: 0,
            id_seed: Some(0),
            alpha: 0.5,
            ease_lambda: 500.0,
            template: SentenceTemplate::default(),
            questions: parse_questions(DEFAULT_QUESTIONS).expect("bundled questions are valid"),
        }
    }
}

pub struct Trial {
    graph: KnowledgeGraph,
    /// Binarized interactions the comparison model trains on.
    train: Dataset,
    /// Elicitation catalog (unshuffled, best first).
    catalog: Vec<String>,
    catalog_set: BTreeSet<String>,
    cfg: TrialConfig,
    log: EventLog,
    ids: Mutex<ChaCha8Rng>,
    locks: Mutex<BTreeMap<String, Arc<Mutex<()>>>>,
}

/// Identifier of the synthetic user standing for a participant.
const SYNTHETIC_PREFIX: &str = "\u{0}session:";

impl Trial {
    /// `rated` keeps the original ratings (for elicitation); `train` is the
    /// binarized data for the comparison model.
    pub fn new(graph: KnowledgeGraph, rated: &Dataset, train: Dataset, cfg: TrialConfig, log: EventLog) -> Result<Self> {
        let catalog: Vec<String> = rated
            .elicitation_ranking(ELICITATION_SIZE)
            .into_iter()
            .map(|(i, _)| i)
            .filter(|i| graph.node(i).is_some_and(|n| graph.is_item(n)))
            .collect();
        if catalog.len() < pathx_core::trial::PROFILE_SIZE {
            return Err(Error::Config(format!(
                "elicitation catalog has {} explainable items, fewer than a profile",
                catalog.len()
            )));
        }
        let ids = match cfg.id_seed {
            Some(s) => ChaCha8Rng::seed_from_u64(s),
            None => ChaCha8Rng::from_entropy(),
        };
        Ok(Trial {
            catalog_set: catalog.iter().cloned().collect(),
            catalog,
            graph,
            train,
            cfg,
            log,
            ids: Mutex::new(ids),
            locks: Mutex::new(BTreeMap::new()),
        })
    }

    pub fn questions(&self) -> &[Question] {
        &self.cfg.questions
    }

    pub fn log(&self) -> &EventLog {
        &self.log
    }

    fn session_lock(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().expect("lock table poisoned");
        Arc::clone(locks.entry(id.to_owned()).or_default())
    }

    fn record(&self, id: &str) -> TrialResult<SessionRecord> {
        self.log
            .snapshot()
            .sessions
            .get(id)
            .cloned()
            .ok_or_else(|| TrialError::NotFound(format!("unknown session `{id}`")))
    }

    fn new_id(&self) -> String {
        let mut rng = self.ids.lock().expect("id generator poisoned");
        let mut bytes = [0u8; 16];
        rng.fill_bytes(&mut bytes);
        bytes.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn create_session(&self, d: DemographicsRecord) -> TrialResult<String> {
        let missing = Demographics::from(&d).missing_fields();
        if !missing.is_empty() {
            return Err(TrialError::Invalid {
                message: format!("missing demographic fields: {}", missing.join(", ")),
                fields: missing.iter().map(|s| s.to_string()).collect(),
            });
        }
        let id = self.new_id();
        self.log.append(&[Event::SessionCreated { session: id.clone(), demographics: d }]).map_err(internal)?;
        Ok(id)
    }

    pub fn state(&self, id: &str) -> TrialResult<SessionState> {
        Ok(self.record(id)?.state)
    }

    /// The elicitation catalog in this session's stable random order.
    pub fn elicitation(&self, id: &str) -> TrialResult<Vec<CatalogItem>> {
        self.record(id)?;
        let order = seeded_shuffle(self.catalog.clone(), session_seed(id, self.cfg.seed, "elicitation"));
        Ok(order
            .into_iter()
            .map(|i| {
                let label = self.graph.node(&i).map_or(i.clone(), |n| self.graph.label(n).to_owned());
                CatalogItem { id: i, label }
            })
            .collect())
    }

    fn view(&self, r: &SessionRecord) -> ComparisonView {
        let (a, b) = (r.side_a.clone().unwrap_or_default(), r.side_b.clone().unwrap_or_default());
        ComparisonView {
            session: r.id.clone(),
            entries: r
                .bundle
                .iter()
                .map(|e| ComparisonEntry {
                    item: e.item.clone(),
                    label: e.label.clone(),
                    a: e.explanations.get(&a).cloned().flatten(),
                    b: e.explanations.get(&b).cloned().flatten(),
                })
                .collect(),
        }
    }

    /// Builds the comparison for a profile: EASE refit with the profile as
    /// an extra user, top recommendations, both compared scorers.
    pub fn build_bundle(&self, id: &str, items: &[String]) -> Result<(SideAssignment, Vec<BundleEntry>)> {
        let user = format!("{SYNTHETIC_PREFIX}{id}");
        let mut rows: Vec<Interaction> = self.train.interactions().to_vec();
        // later picks count as more recent
        for (t, i) in items.iter().enumerate() {
            rows.push(Interaction::new(user.clone(), i.clone()).with_rating(1.0).with_timestamp(t as i64).with_weight((t + 1) as f64));
        }
        let data = Dataset::new(rows, self.train.recency_mode())?;
        let spec = ModelSpec::new(ModelKind::Ease).with("lambda", self.cfg.ease_lambda);
        let model = fit(&spec, &data, Some(&self.graph), self.cfg.seed)?;
        let recs: Vec<String> = model.recommend(&user, COMPARISON_SIZE).item_ids().map(str::to_owned).collect();
        let history = UserHistory::new(
            &self.graph,
            items.iter().enumerate().map(|(t, i)| (i.clone(), t as f64)).collect(),
        );
        let mut per_scorer: BTreeMap<ScorerKind, Vec<Option<String>>> = BTreeMap::new();
        for kind in COMPARED {
            let xs = explain_items(&self.graph, &history, &recs, kind, self.cfg.alpha, &self.cfg.template);
            per_scorer.insert(kind, xs.into_iter().map(|x| x.explanation.map(|e| e.sentence)).collect());
        }
        let entries = recs
            .iter()
            .enumerate()
            .map(|(pos, item)| BundleEntry {
                item: item.clone(),
                label: self.graph.node(item).map_or(item.clone(), |n| self.graph.label(n).to_owned()),
                explanations: COMPARED.iter().map(|k| (k.as_str().to_owned(), per_scorer[k][pos].clone())).collect(),
            })
            .collect();
        Ok((sides_for(id, self.cfg.seed), entries))
    }

    pub fn submit_profile(&self, id: &str, items: Vec<String>) -> TrialResult<ComparisonView> {
        let lock = self.session_lock(id);
        let _guard = lock.lock().expect("session lock poisoned");
        let r = self.record(id)?;
        if r.state != SessionState::Created {
            return Err(TrialError::Conflict(format!("session is {}, profile already submitted", r.state)));
        }
        validate_profile(&items, &self.catalog_set).map_err(|e| invalid(e.to_string()))?;
        let (sides, entries) = self.build_bundle(id, &items).map_err(internal)?;
        self.log
            .append(&[
                Event::Profile { session: id.to_owned(), items },
                Event::Bundle {
                    session: id.to_owned(),
                    side_a: sides.scorer(Side::A).as_str().to_owned(),
                    side_b: sides.scorer(Side::B).as_str().to_owned(),
                    entries,
                },
            ])
            .map_err(internal)?;
        Ok(self.view(&self.record(id)?))
    }

    pub fn comparison(&self, id: &str) -> TrialResult<ComparisonView> {
        let r = self.record(id)?;
        if r.state == SessionState::Created {
            return Err(TrialError::Conflict("no profile submitted yet".into()));
        }
        Ok(self.view(&r))
    }

    fn assignment(r: &SessionRecord) -> TrialResult<SideAssignment> {
        let parse = |s: &Option<String>| -> TrialResult<ScorerKind> {
            s.as_deref().ok_or_else(|| internal("missing side"))?.parse().map_err(internal)
        };
        SideAssignment::new(parse(&r.side_a)?, parse(&r.side_b)?).map_err(internal)
    }

    pub fn submit_responses(&self, id: &str, responses: &[ResponseInput]) -> TrialResult<SessionState> {
        let lock = self.session_lock(id);
        let _guard = lock.lock().expect("session lock poisoned");
        let r = self.record(id)?;
        match r.state {
            SessionState::Profiled => {}
            SessionState::Completed => return Err(TrialError::Conflict("session already completed".into())),
            SessionState::Created => return Err(TrialError::Conflict("no profile submitted yet".into())),
        }
        let pairs: Vec<(u8, LikertAnswer)> = responses.iter().map(|x| (x.question, x.answer.into())).collect();
        let answers = validate_responses(&pairs).map_err(|e| invalid(e.to_string()))?;
        let sides = Self::assignment(&r)?;
        let records = answers
            .iter()
            .enumerate()
            .map(|(q, a)| {
                let resolved = a.resolve(&sides);
                AnswerRecord {
                    question: q as u8 + 1,
                    goal: self.cfg.questions[q].goal.clone(),
                    answer: a.as_str().to_owned(),
                    favoured: resolved.favoured().map(|k| k.as_str().to_owned()),
                    resolved: resolved.label(),
                }
            })
            .collect();
        self.log.append(&[Event::Responses { session: id.to_owned(), answers: records }]).map_err(internal)?;
        Ok(SessionState::Completed)
    }

    pub fn export(&self) -> TrialResult<Export> {
        export(&self.log.snapshot(), &self.cfg.questions)
    }
}

/// Per-question counts and raw rows over completed sessions.
pub fn export(snap: &store::Snapshot, questions: &[Question]) -> TrialResult<Export> {
    let mut counts = ResponseCounts::default();
    let mut rows = Vec::new();
    let mut completed = 0;
    for s in snap.completed() {
        completed += 1;
        for a in &s.answers {
            let resolved: ResolvedAnswer = a.resolved.parse().map_err(internal)?;
            counts.add(a.question, resolved).map_err(internal)?;
            rows.push(ExportRow {
                session: s.id.clone(),
                side_a: s.side_a.clone().unwrap_or_default(),
                side_b: s.side_b.clone().unwrap_or_default(),
                question: a.question,
                goal: a.goal.clone(),
                answer: a.answer.clone(),
                resolved: a.resolved.clone(),
                favoured: a.favoured.clone(),
            });
        }
    }
    let scale: Vec<String> = ResolvedAnswer::scale().iter().map(ResolvedAnswer::label).collect();
    let questions = questions
        .iter()
        .map(|q| ExportQuestion {
            id: q.id,
            goal: q.goal.clone(),
            text: q.text.clone(),
            counts: scale.iter().cloned().zip(counts.counts[usize::from(q.id) - 1]).collect(),
            total: counts.total(q.id),
        })
        .collect();
    Ok(Export { empty: completed == 0, completed_sessions: completed, scale, questions, rows })
}
