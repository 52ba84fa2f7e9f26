//! Post-hoc attribute scorers and explanation rendering.
//!
//! An explanation connects items the user interacted with to a recommended
//! item through an attribute they share in the knowledge graph. Three
//! scorers rank the shared attributes:
//!
//! * **ExpLOD**: `(α·n(p,I_u)/|I_u| + β·n(p,I_r)/|I_r|) · IDF(p)`, where `n`
//!   counts links (triples), over directly shared attributes.
//! * **ExpLOD v2**: a broader attribute `b` sums the ExpLOD scores of its
//!   children and multiplies by `IDF(b)`; attributes without children keep
//!   their ExpLOD score. Candidates include one-hop broader attributes.
//! * **PEM**: `(|Ī(p,I_u)|/|I_u|) / (|Ī(p,C)|/|C|) · log|I(p,C)|` where `Ī`
//!   counts items connected directly or through one child, and `I` counts
//!   direct items only. Scores are floored at zero when `|I(p,C)| <= 1`.

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NodeId};

pub const MAX_ATTRIBUTES: usize = 3;
pub const MAX_LINKED_ITEMS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScorerKind {
    ExpLod,
    ExpLodV2,
    Pem,
}

impl ScorerKind {
    pub const ALL: [ScorerKind; 3] = [ScorerKind::ExpLod, ScorerKind::ExpLodV2, ScorerKind::Pem];

    pub fn as_str(self) -> &'static str {
        match self {
            ScorerKind::ExpLod => "explod",
            ScorerKind::ExpLodV2 => "explod_v2",
            ScorerKind::Pem => "pem",
        }
    }

    pub fn display(self) -> &'static str {
        match self {
            ScorerKind::ExpLod => "ExpLOD",
            ScorerKind::ExpLodV2 => "ExpLOD v2",
            ScorerKind::Pem => "PEM",
        }
    }

    /// Whether candidates and linked items may go through one hierarchy hop.
    pub fn hierarchical(self) -> bool {
        !matches!(self, ScorerKind::ExpLod)
    }
}

impl fmt::Display for ScorerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScorerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScorerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::InvalidParam {
                name: "scorer".into(),
                reason: alloc::format!("unknown scorer `{s}`"),
            })
    }
}

/// Inputs shared by the scorers for one explanation request.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreContext {
    profile: Vec<NodeId>,
    recommended: Vec<NodeId>,
    /// `None` means every item of the graph.
    catalog: Option<BTreeSet<NodeId>>,
    alpha: f64,
    beta: f64,
}

fn resolve_items(g: &KnowledgeGraph, ids: &[&str]) -> Result<Vec<NodeId>> {
    let mut out = Vec::with_capacity(ids.len());
    for id in ids {
        let n = g.node(id).ok_or_else(|| Error::UnknownEntity((*id).to_owned()))?;
        out.push(n);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

impl ScoreContext {
    /// `alpha` weighs the profile term; the recommendation term gets
    /// `1 - alpha`.
    pub fn new(
        g: &KnowledgeGraph,
        profile: &[&str],
        recommended: &[&str],
        alpha: f64,
    ) -> Result<Self> {
        let profile = resolve_items(g, profile)?;
        let recommended = resolve_items(g, recommended)?;
        Self::from_nodes(profile, recommended, alpha)
    }

    pub fn from_nodes(
        mut profile: Vec<NodeId>,
        mut recommended: Vec<NodeId>,
        alpha: f64,
    ) -> Result<Self> {
        profile.sort_unstable();
        profile.dedup();
        recommended.sort_unstable();
        recommended.dedup();
        if profile.is_empty() {
            return Err(Error::Empty("profile items"));
        }
        if recommended.is_empty() {
            return Err(Error::Empty("recommended items"));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidParam { name: "alpha".into(), reason: "must lie in [0, 1]".into() });
        }
        if recommended.iter().any(|r| profile.binary_search(r).is_ok()) {
            return Err(Error::InvalidParam {
                name: "recommended".into(),
                reason: "overlaps the profile".into(),
            });
        }
        Ok(ScoreContext { profile, recommended, catalog: None, alpha, beta: 1.0 - alpha })
    }

    /// Restricts `C` to an explicit item set; profile and recommended items
    /// must belong to it.
    pub fn with_catalog(mut self, catalog: BTreeSet<NodeId>) -> Result<Self> {
        if self.profile.iter().chain(&self.recommended).any(|i| !catalog.contains(i)) {
            return Err(Error::InvalidParam {
                name: "catalog".into(),
                reason: "profile and recommended items must be in the catalog".into(),
            });
        }
        self.catalog = Some(catalog);
        Ok(self)
    }

    pub fn profile(&self) -> &[NodeId] {
        &self.profile
    }

    pub fn recommended(&self) -> &[NodeId] {
        &self.recommended
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    fn catalog_size(&self, g: &KnowledgeGraph) -> usize {
        self.catalog.as_ref().map_or(g.item_count(), BTreeSet::len)
    }

    fn in_catalog(&self, g: &KnowledgeGraph, i: NodeId) -> bool {
        match &self.catalog {
            Some(c) => c.contains(&i),
            None => g.is_item(i),
        }
    }
}

fn link_total(g: &KnowledgeGraph, items: &[NodeId], p: NodeId) -> usize {
    items.iter().map(|&i| g.link_count(i, p)).sum()
}

/// ExpLOD score of `p`. `None` when `p` is linked to no item (IDF undefined).
pub fn explod_score(g: &KnowledgeGraph, ctx: &ScoreContext, p: NodeId) -> Option<f64> {
    let idf = g.idf_of(p)?;
    let nu = link_total(g, &ctx.profile, p) as f64 / ctx.profile.len() as f64;
    let nr = link_total(g, &ctx.recommended, p) as f64 / ctx.recommended.len() as f64;
    Some((ctx.alpha * nu + ctx.beta * nr) * idf)
}

/// ExpLOD v2 score of `b`.
pub fn explod_v2_score(g: &KnowledgeGraph, ctx: &ScoreContext, b: NodeId) -> Option<f64> {
    let children = g.children(b);
    if children.is_empty() {
        return explod_score(g, ctx, b);
    }
    let idf_b = g.idf_of(b)?;
    let sum: f64 = children
        .iter()
        .map(|&c| explod_score(g, ctx, c).unwrap_or(0.0))
        .sum();
    Some(sum * idf_b)
}

/// PEM score of `p`. `None` when no catalog item reaches `p`.
pub fn pem_score(g: &KnowledgeGraph, ctx: &ScoreContext, p: NodeId) -> Option<f64> {
    let reach = g.items_with(p, true);
    let in_catalog = reach.iter().filter(|&&i| ctx.in_catalog(g, i)).count();
    if in_catalog == 0 {
        return None;
    }
    let in_profile = reach
        .iter()
        .filter(|i| ctx.profile.binary_search(i).is_ok())
        .count();
    let direct = g
        .direct_items(p)
        .iter()
        .filter(|&&i| ctx.in_catalog(g, i))
        .count();
    if direct <= 1 {
        return Some(0.0);
    }
    let penalty = g.config().log_base.log(direct as f64);
    let profile_share = in_profile as f64 / ctx.profile.len() as f64;
    let catalog_share = in_catalog as f64 / ctx.catalog_size(g) as f64;
    Some(profile_share / catalog_share * penalty)
}

pub fn score(g: &KnowledgeGraph, ctx: &ScoreContext, kind: ScorerKind, p: NodeId) -> Option<f64> {
    match kind {
        ScorerKind::ExpLod => explod_score(g, ctx, p),
        ScorerKind::ExpLodV2 => explod_v2_score(g, ctx, p),
        ScorerKind::Pem => pem_score(g, ctx, p),
    }
}

fn str_score(
    g: &KnowledgeGraph,
    ctx: &ScoreContext,
    kind: ScorerKind,
    p: &str,
) -> Result<f64> {
    let n = g.node(p).ok_or_else(|| Error::UnknownEntity(p.to_owned()))?;
    score(g, ctx, kind, n).ok_or_else(|| Error::UnlinkedAttribute(p.to_owned()))
}

/// ExpLOD score by attribute id.
pub fn score_explod(g: &KnowledgeGraph, ctx: &ScoreContext, p: &str) -> Result<f64> {
    str_score(g, ctx, ScorerKind::ExpLod, p)
}

/// ExpLOD v2 score by attribute id.
pub fn score_explod_v2(g: &KnowledgeGraph, ctx: &ScoreContext, b: &str) -> Result<f64> {
    str_score(g, ctx, ScorerKind::ExpLodV2, b)
}

/// PEM score by attribute id.
pub fn score_pem(g: &KnowledgeGraph, ctx: &ScoreContext, p: &str) -> Result<f64> {
    str_score(g, ctx, ScorerKind::Pem, p)
}

/// Attributes an item reaches: its direct attributes, plus their broader
/// attributes when `hierarchical`.
pub fn connected_attributes(g: &KnowledgeGraph, item: NodeId, hierarchical: bool) -> BTreeSet<NodeId> {
    let mut out = BTreeSet::new();
    for &(a, _) in g.links(item) {
        out.insert(a);
        if hierarchical {
            out.extend(g.parents(a).iter().copied());
        }
    }
    out
}

/// Whether `item` reaches `attr` directly, or through one child when
/// `hierarchical`.
pub fn reaches(g: &KnowledgeGraph, item: NodeId, attr: NodeId, hierarchical: bool) -> bool {
    g.links(item).iter().any(|&(a, _)| {
        a == attr || (hierarchical && g.parents(a).binary_search(&attr).is_ok())
    })
}

/// Attributes reachable from both a profile item and a recommended item.
pub fn candidate_attributes(g: &KnowledgeGraph, ctx: &ScoreContext, kind: ScorerKind) -> BTreeSet<NodeId> {
    let h = kind.hierarchical();
    let mut rec = BTreeSet::new();
    for &r in &ctx.recommended {
        rec.extend(connected_attributes(g, r, h));
    }
    let mut out = BTreeSet::new();
    for &i in &ctx.profile {
        for a in connected_attributes(g, i, h) {
            if rec.contains(&a) {
                out.insert(a);
            }
        }
    }
    out
}

/// Shared attributes ranked by score (descending, then id ascending).
/// Attributes whose score is undefined are left out. Empty when nothing is
/// shared.
pub fn rank_attributes(g: &KnowledgeGraph, ctx: &ScoreContext, kind: ScorerKind) -> Vec<(NodeId, f64)> {
    let mut ranked: Vec<(NodeId, f64)> = candidate_attributes(g, ctx, kind)
        .into_iter()
        .filter_map(|a| score(g, ctx, kind, a).map(|s| (a, s)))
        .collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| g.name(a.0).cmp(g.name(b.0))));
    ranked
}

/// Wording of the rendered sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceTemplate {
    /// Plural noun for items, e.g. "movies".
    pub items_noun: String,
    /// Verb that applies to the recommendation, e.g. "watch".
    pub verb: String,
}

impl Default for SentenceTemplate {
    fn default() -> Self {
        SentenceTemplate { items_noun: "movies".into(), verb: "watch".into() }
    }
}

impl SentenceTemplate {
    pub fn render(&self, items: &[&str], attributes: &[(&str, &str)], recommendation: &str) -> String {
        let items = items.join(", ");
        let attrs: Vec<String> = attributes
            .iter()
            .map(|(edge, attr)| alloc::format!("{edge} {attr}"))
            .collect();
        alloc::format!(
            "Like the {} {} that has the {} {} {}, that has the same property",
            self.items_noun,
            items,
            attrs.join(" and the "),
            self.verb,
            recommendation
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShownAttribute {
    pub id: String,
    pub edge: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Explanation {
    pub recommended: String,
    pub attributes: Vec<ShownAttribute>,
    pub linked_items: Vec<String>,
    pub sentence: String,
}

impl Explanation {
    /// The top-ranked attribute.
    pub fn primary(&self) -> Option<&str> {
        self.attributes.first().map(|a| a.id.as_str())
    }
}

/// Display limits for [`build_explanation`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExplanationLimits {
    pub max_attributes: usize,
    pub max_items: usize,
}

impl Default for ExplanationLimits {
    fn default() -> Self {
        ExplanationLimits { max_attributes: MAX_ATTRIBUTES, max_items: MAX_LINKED_ITEMS }
    }
}

/// Edge type used in the sentence: among the triples joining `rec` to `attr`
/// (or to a child of `attr` when hierarchical) the lexicographically smallest
/// label.
fn sentence_edge(g: &KnowledgeGraph, rec: NodeId, attr: NodeId, hierarchical: bool) -> &str {
    let direct = g
        .links(rec)
        .iter()
        .filter(|(a, _)| *a == attr)
        .map(|&(_, r)| g.relation_name(r))
        .min();
    if let Some(e) = direct {
        return e;
    }
    let via_child = if hierarchical {
        g.links(rec)
            .iter()
            .filter(|(a, _)| g.parents(*a).binary_search(&attr).is_ok())
            .map(|&(_, r)| g.relation_name(r))
            .min()
    } else {
        None
    };
    via_child.unwrap_or("")
}

/// Builds the explanation for the context's single recommended item from a
/// ranked attribute list.
///
/// The top attribute is always shown. Further attributes are shown only
/// when their score ties the top score exactly, and only while at least one
/// profile item reaches every shown attribute. Linked items are the profile
/// items reaching all shown attributes, most recent first, capped at
/// `limits.max_items`. Returns `None` for an empty ranking.
pub fn build_explanation(
    g: &KnowledgeGraph,
    ctx: &ScoreContext,
    kind: ScorerKind,
    ranked: &[(NodeId, f64)],
    recency: &dyn Fn(NodeId) -> f64,
    limits: ExplanationLimits,
    template: &SentenceTemplate,
) -> Option<Explanation> {
    let &(top, top_score) = ranked.first()?;
    let rec = *ctx.recommended.first()?;
    let h = kind.hierarchical();

    let mut linked: Vec<NodeId> = ctx
        .profile
        .iter()
        .copied()
        .filter(|&i| reaches(g, i, top, h))
        .collect();
    let mut shown = alloc::vec![(top, top_score)];
    for &(a, s) in &ranked[1..] {
        if shown.len() >= limits.max_attributes.max(1) || s != top_score {
            break;
        }
        let narrowed: Vec<NodeId> = linked.iter().copied().filter(|&i| reaches(g, i, a, h)).collect();
        if !narrowed.is_empty() {
            linked = narrowed;
            shown.push((a, s));
        }
    }
    linked.sort_by(|&a, &b| recency(b).total_cmp(&recency(a)).then_with(|| g.name(a).cmp(g.name(b))));
    linked.truncate(limits.max_items.max(1));

    let attributes: Vec<ShownAttribute> = shown
        .iter()
        .map(|&(a, s)| ShownAttribute {
            id: g.name(a).to_owned(),
            edge: sentence_edge(g, rec, a, h).to_owned(),
            score: s,
        })
        .collect();
    let item_labels: Vec<&str> = linked.iter().map(|&i| g.label(i)).collect();
    let attr_phrases: Vec<(&str, &str)> = shown
        .iter()
        .zip(&attributes)
        .map(|(&(a, _), sa)| (sa.edge.as_str(), g.label(a)))
        .collect();
    let sentence = template.render(&item_labels, &attr_phrases, g.label(rec));
    Some(Explanation {
        recommended: g.name(rec).to_owned(),
        attributes,
        linked_items: linked.iter().map(|&i| g.name(i).to_owned()).collect(),
        sentence,
    })
}

/// Ranks and builds in one call for a single recommended item.
pub fn explain(
    g: &KnowledgeGraph,
    ctx: &ScoreContext,
    kind: ScorerKind,
    recency: &dyn Fn(NodeId) -> f64,
    template: &SentenceTemplate,
) -> Option<Explanation> {
    let ranked = rank_attributes(g, ctx, kind);
    build_explanation(g, ctx, kind, &ranked, recency, ExplanationLimits::default(), template)
}
