//! In-memory knowledge graph.
//!
//! Entities and edge types are interned into dense indices at build time. The
//! graph is immutable once built, so every index (tail-reference counts,
//! item/attribute adjacency, one-hop hierarchy, IDF cache) is computed once in
//! [`GraphBuilder::build`].

use alloc::borrow::ToOwned;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// Opaque entity identifier (a Wikidata Q-id, a dataset item id, a literal).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(String);

impl EntityId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::InvalidTriple("empty entity id".into()));
        }
        Ok(EntityId(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EntityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Relation label on a triple, e.g. `genre` or `cast member`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EdgeType(String);

impl EdgeType {
    pub fn new(label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if label.is_empty() {
            return Err(Error::InvalidTriple("empty edge type".into()));
        }
        Ok(EdgeType(label))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for EdgeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub head: EntityId,
    pub relation: EdgeType,
    pub tail: EntityId,
}

/// Dense handle of an entity inside one [`KnowledgeGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

/// Dense handle of an edge type inside one [`KnowledgeGraph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LogBase {
    #[default]
    Natural,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            LogBase::Natural => libm::log(x),
            LogBase::Ten => libm::log10(x),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KgConfig {
    /// Edge types read as child -> broader links.
    pub hierarchy_edges: Vec<String>,
    pub log_base: LogBase,
}

impl Default for KgConfig {
    fn default() -> Self {
        KgConfig {
            hierarchy_edges: alloc::vec!["instance of".to_owned(), "subclass of".to_owned()],
            log_base: LogBase::Natural,
        }
    }
}

/// Accumulates triples before freezing them into a [`KnowledgeGraph`].
#[derive(Debug, Default, Clone)]
pub struct GraphBuilder {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
    relations: Vec<String>,
    rel_index: BTreeMap<String, u32>,
    triples: BTreeSet<(u32, u32, u32)>,
    items: BTreeSet<u32>,
    labels: BTreeMap<u32, String>,
    duplicates: usize,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    fn intern(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.index.insert(name.to_owned(), id);
        id
    }

    fn intern_rel(&mut self, name: &str) -> u32 {
        if let Some(&id) = self.rel_index.get(name) {
            return id;
        }
        let id = self.relations.len() as u32;
        self.relations.push(name.to_owned());
        self.rel_index.insert(name.to_owned(), id);
        id
    }

    /// Adds a triple. Returns `Ok(false)` when it was already present.
    pub fn add_triple(&mut self, head: &str, relation: &str, tail: &str) -> Result<bool> {
        if head.is_empty() || relation.is_empty() || tail.is_empty() {
            return Err(Error::InvalidTriple(alloc::format!(
                "empty field in ({head}, {relation}, {tail})"
            )));
        }
        if head == tail {
            return Err(Error::InvalidTriple(alloc::format!("self loop on `{head}`")));
        }
        let h = self.intern(head);
        let r = self.intern_rel(relation);
        let t = self.intern(tail);
        let fresh = self.triples.insert((h, r, t));
        if !fresh {
            self.duplicates += 1;
        }
        Ok(fresh)
    }

    pub fn add(&mut self, triple: &Triple) -> Result<bool> {
        self.add_triple(triple.head.as_str(), triple.relation.as_str(), triple.tail.as_str())
    }

    /// Flags an entity as a catalog item, registering it if needed.
    pub fn mark_item(&mut self, entity: &str) {
        if entity.is_empty() {
            return;
        }
        let id = self.intern(entity);
        self.items.insert(id);
    }

    /// Human-readable label used when rendering sentences.
    pub fn set_label(&mut self, entity: &str, label: &str) {
        if entity.is_empty() {
            return;
        }
        let id = self.intern(entity);
        self.labels.insert(id, label.to_owned());
    }

    /// Whether `entity` already appears in a triple or was marked.
    pub fn contains(&self, entity: &str) -> bool {
        self.index.contains_key(entity)
    }

    pub fn duplicates(&self) -> usize {
        self.duplicates
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    /// Marks every head of a non-hierarchy triple as an item. Used when the
    /// input carries no explicit item marker.
    pub fn mark_heads_as_items(&mut self, hierarchy_edges: &[String]) {
        let hier: BTreeSet<u32> = hierarchy_edges
            .iter()
            .filter_map(|e| self.rel_index.get(e.as_str()).copied())
            .collect();
        let heads: Vec<u32> = self
            .triples
            .iter()
            .filter(|(_, r, _)| !hier.contains(r))
            .map(|&(h, _, _)| h)
            .collect();
        self.items.extend(heads);
    }

    /// Renumbers nodes and relations in name order so that the built graph
    /// does not depend on insertion order.
    fn canonicalize(self) -> Self {
        let mut order: Vec<u32> = (0..self.names.len() as u32).collect();
        order.sort_by(|&a, &b| self.names[a as usize].cmp(&self.names[b as usize]));
        let mut node_map = alloc::vec![0u32; order.len()];
        for (new, &old) in order.iter().enumerate() {
            node_map[old as usize] = new as u32;
        }
        let mut rel_order: Vec<u32> = (0..self.relations.len() as u32).collect();
        rel_order.sort_by(|&a, &b| self.relations[a as usize].cmp(&self.relations[b as usize]));
        let mut rel_map = alloc::vec![0u32; rel_order.len()];
        for (new, &old) in rel_order.iter().enumerate() {
            rel_map[old as usize] = new as u32;
        }
        let names: Vec<String> = order.iter().map(|&o| self.names[o as usize].clone()).collect();
        let relations: Vec<String> = rel_order.iter().map(|&o| self.relations[o as usize].clone()).collect();
        GraphBuilder {
            index: names.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect(),
            rel_index: relations.iter().enumerate().map(|(i, n)| (n.clone(), i as u32)).collect(),
            triples: self
                .triples
                .iter()
                .map(|&(h, r, t)| (node_map[h as usize], rel_map[r as usize], node_map[t as usize]))
                .collect(),
            items: self.items.iter().map(|&i| node_map[i as usize]).collect(),
            labels: self.labels.into_iter().map(|(k, v)| (node_map[k as usize], v)).collect(),
            names,
            relations,
            duplicates: self.duplicates,
        }
    }

    pub fn build(self, config: KgConfig) -> KnowledgeGraph {
        let this = self.canonicalize();
        let n = this.names.len();
        let mut is_item = alloc::vec![false; n];
        for &i in &this.items {
            is_item[i as usize] = true;
        }
        let hier_rels: BTreeSet<u32> = config
            .hierarchy_edges
            .iter()
            .filter_map(|e| this.rel_index.get(e.as_str()).copied())
            .collect();

        let mut popularity = alloc::vec![0u32; n];
        let mut item_links: Vec<Vec<(NodeId, RelId)>> = alloc::vec![Vec::new(); n];
        let mut attr_items: Vec<Vec<NodeId>> = alloc::vec![Vec::new(); n];
        let mut children: Vec<Vec<NodeId>> = alloc::vec![Vec::new(); n];
        let mut parents: Vec<Vec<NodeId>> = alloc::vec![Vec::new(); n];
        let mut adjacency: Vec<Vec<NodeId>> = alloc::vec![Vec::new(); n];

        let triples: Vec<(u32, u32, u32)> = this.triples.into_iter().collect();
        for &(h, r, t) in &triples {
            popularity[t as usize] += 1;
            adjacency[h as usize].push(NodeId(t));
            adjacency[t as usize].push(NodeId(h));
            let (hi, ti) = (is_item[h as usize], is_item[t as usize]);
            if hi && !ti {
                item_links[h as usize].push((NodeId(t), RelId(r)));
                attr_items[t as usize].push(NodeId(h));
            }
            if hier_rels.contains(&r) && !hi && !ti {
                children[t as usize].push(NodeId(h));
                parents[h as usize].push(NodeId(t));
            }
        }
        for list in attr_items
            .iter_mut()
            .chain(children.iter_mut())
            .chain(parents.iter_mut())
            .chain(adjacency.iter_mut())
        {
            list.sort_unstable();
            list.dedup();
        }

        let n_items = is_item.iter().filter(|&&b| b).count();
        let idf = attr_items
            .iter()
            .map(|items| {
                if items.is_empty() {
                    None
                } else {
                    Some(config.log_base.log(n_items as f64 / items.len() as f64))
                }
            })
            .collect();

        let mut item_nodes: Vec<NodeId> =
            (0..n as u32).filter(|&i| is_item[i as usize]).map(NodeId).collect();
        item_nodes.sort_by(|a, b| this.names[a.idx()].cmp(&this.names[b.idx()]));

        KnowledgeGraph {
            names: this.names,
            index: this.index,
            relations: this.relations,
            rel_index: this.rel_index,
            triples,
            is_item,
            item_nodes,
            labels: this.labels,
            popularity,
            item_links,
            attr_items,
            children,
            parents,
            adjacency,
            idf,
            hier_rels,
            duplicates: this.duplicates,
            config,
        }
    }
}

/// Immutable triple store. Safe to share across threads.
#[derive(Debug, Clone)]
pub struct KnowledgeGraph {
    names: Vec<String>,
    index: BTreeMap<String, u32>,
    relations: Vec<String>,
    rel_index: BTreeMap<String, u32>,
    triples: Vec<(u32, u32, u32)>,
    is_item: Vec<bool>,
    item_nodes: Vec<NodeId>,
    labels: BTreeMap<u32, String>,
    popularity: Vec<u32>,
    item_links: Vec<Vec<(NodeId, RelId)>>,
    attr_items: Vec<Vec<NodeId>>,
    children: Vec<Vec<NodeId>>,
    parents: Vec<Vec<NodeId>>,
    adjacency: Vec<Vec<NodeId>>,
    idf: Vec<Option<f64>>,
    hier_rels: BTreeSet<u32>,
    duplicates: usize,
    config: KgConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GraphStats {
    pub entities: usize,
    pub triples: usize,
    pub edge_types: usize,
    pub items: usize,
    pub duplicates_dropped: usize,
}

impl KnowledgeGraph {
    pub fn empty(config: KgConfig) -> Self {
        GraphBuilder::new().build(config)
    }

    pub fn config(&self) -> &KgConfig {
        &self.config
    }

    pub fn stats(&self) -> GraphStats {
        GraphStats {
            entities: self.names.len(),
            triples: self.triples.len(),
            edge_types: self.relations.len(),
            items: self.item_nodes.len(),
            duplicates_dropped: self.duplicates,
        }
    }

    pub fn node(&self, id: &str) -> Option<NodeId> {
        self.index.get(id).map(|&i| NodeId(i))
    }

    fn require(&self, id: &str) -> Result<NodeId> {
        self.node(id).ok_or_else(|| Error::UnknownEntity(id.to_owned()))
    }

    pub fn name(&self, n: NodeId) -> &str {
        &self.names[n.idx()]
    }

    /// Label if one was registered, else the id.
    pub fn label(&self, n: NodeId) -> &str {
        self.labels.get(&n.0).map(String::as_str).unwrap_or_else(|| self.name(n))
    }

    pub fn relation_name(&self, r: RelId) -> &str {
        &self.relations[r.0 as usize]
    }

    pub fn relation(&self, label: &str) -> Option<RelId> {
        self.rel_index.get(label).map(|&r| RelId(r))
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn is_item(&self, n: NodeId) -> bool {
        self.is_item[n.idx()]
    }

    /// Catalog items, sorted by id.
    pub fn items(&self) -> &[NodeId] {
        &self.item_nodes
    }

    pub fn item_count(&self) -> usize {
        self.item_nodes.len()
    }

    pub fn is_hierarchy(&self, r: RelId) -> bool {
        self.hier_rels.contains(&r.0)
    }

    /// All triples, in canonical (interned) order.
    pub fn triples(&self) -> impl Iterator<Item = (&str, &str, &str)> + '_ {
        self.triples.iter().map(move |&(h, r, t)| {
            (
                self.names[h as usize].as_str(),
                self.relations[r as usize].as_str(),
                self.names[t as usize].as_str(),
            )
        })
    }

    /// Every registered label, keyed by entity id.
    pub fn labels(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.labels
            .iter()
            .map(move |(&k, v)| (self.names[k as usize].as_str(), v.as_str()))
    }

    /// Number of triples referencing `e` as tail.
    pub fn attribute_popularity(&self, e: &str) -> Result<u32> {
        Ok(self.popularity[self.require(e)?.idx()])
    }

    pub fn popularity_of(&self, n: NodeId) -> u32 {
        self.popularity[n.idx()]
    }

    /// `log(N / df_p)` where `N` is the item count and `df_p` the number of
    /// items directly linked to `p`.
    pub fn idf(&self, p: &str) -> Result<f64> {
        let n = self.require(p)?;
        self.idf_of(n).ok_or_else(|| Error::UnlinkedAttribute(p.to_owned()))
    }

    pub fn idf_of(&self, p: NodeId) -> Option<f64> {
        self.idf[p.idx()]
    }

    /// Attributes linked to `b` through a hierarchy edge with `b` as tail.
    /// Direct children only.
    pub fn children_of(&self, b: &str) -> BTreeSet<&str> {
        match self.node(b) {
            Some(n) => self.children[n.idx()].iter().map(|&c| self.name(c)).collect(),
            None => BTreeSet::new(),
        }
    }

    pub fn children(&self, b: NodeId) -> &[NodeId] {
        &self.children[b.idx()]
    }

    pub fn parents(&self, c: NodeId) -> &[NodeId] {
        &self.parents[c.idx()]
    }

    /// Items linked to `p`; with `transitive` also items linked to a direct
    /// child of `p`.
    pub fn items_with_attribute(&self, p: &str, transitive: bool) -> Result<BTreeSet<&str>> {
        let n = self.require(p)?;
        Ok(self
            .items_with(n, transitive)
            .into_iter()
            .map(|i| self.name(i))
            .collect())
    }

    pub fn items_with(&self, p: NodeId, transitive: bool) -> Vec<NodeId> {
        let mut out = self.attr_items[p.idx()].clone();
        if transitive {
            for &c in &self.children[p.idx()] {
                out.extend_from_slice(&self.attr_items[c.idx()]);
            }
            out.sort_unstable();
            out.dedup();
        }
        out
    }

    /// Items directly linked to `p` (sorted by node id).
    pub fn direct_items(&self, p: NodeId) -> &[NodeId] {
        &self.attr_items[p.idx()]
    }

    /// Item -> attribute links of `item` as (attribute, edge type), one per
    /// distinct triple.
    pub fn links(&self, item: NodeId) -> &[(NodeId, RelId)] {
        &self.item_links[item.idx()]
    }

    /// Number of distinct triples joining `item` and `attr`.
    pub fn link_count(&self, item: NodeId, attr: NodeId) -> usize {
        self.item_links[item.idx()].iter().filter(|(a, _)| *a == attr).count()
    }

    /// Undirected neighbourhood of a node (deduplicated).
    pub fn neighbours(&self, n: NodeId) -> &[NodeId] {
        &self.adjacency[n.idx()]
    }

    /// Triple count per edge type, sorted by count descending then label.
    pub fn edge_type_distribution(&self) -> Vec<(&str, usize)> {
        let mut counts = alloc::vec![0usize; self.relations.len()];
        for &(_, r, _) in &self.triples {
            counts[r as usize] += 1;
        }
        let mut out: Vec<(&str, usize)> = self
            .relations
            .iter()
            .map(String::as_str)
            .zip(counts)
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        out
    }

    /// For one edge type, number of item nodes pointing at each attribute,
    /// sorted by count descending then id.
    pub fn attribute_distribution(&self, edge: &str) -> Vec<(&str, usize)> {
        let Some(rel) = self.relation(edge) else {
            return Vec::new();
        };
        let mut counts: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
        for &(h, r, t) in &self.triples {
            if r == rel.0 && self.is_item[h as usize] {
                counts.entry(t).or_default().insert(h);
            }
        }
        let mut out: Vec<(&str, usize)> = counts
            .into_iter()
            .map(|(t, hs)| (self.names[t as usize].as_str(), hs.len()))
            .collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        out
    }

    /// Whether `item` has at least one triple in the graph.
    pub fn covers(&self, item: &str) -> bool {
        self.node(item)
            .map(|n| !self.adjacency[n.idx()].is_empty())
            .unwrap_or(false)
    }
}
