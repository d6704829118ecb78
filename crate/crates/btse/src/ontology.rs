//! Sound-class registry, query vectors and the class ontology graph.
//!
//! The registry maps the twenty supported target classes to positions in a
//! multi-hot query vector; the network's label embedding consumes those
//! vectors. The ontology graph is a DAG over a broader class taxonomy
//! (e.g. the AudioSet hierarchy) used to pick *other* classes for scene
//! synthesis: classes with no hierarchical relationship to any target, so
//! distractor sounds are never accidental supersets or subsets of what the
//! network is asked to extract.

use std::collections::{BTreeSet, HashMap, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The twenty extraction classes, in query-vector order.
pub const DEFAULT_CLASSES: [&str; 20] = [
    "alarm_clock",
    "baby_cry",
    "birds_chirping",
    "car_horn",
    "cat",
    "rooster_crow",
    "computer_typing",
    "cricket",
    "dog",
    "door_knock",
    "glass_breaking",
    "gunshot",
    "hammer",
    "music",
    "ocean",
    "singing",
    "siren",
    "speech",
    "thunderstorm",
    "toilet_flush",
];

/// Ordered set of class labels; the order fixes query-vector bit positions
/// and is serialized with trained weights.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ClassRegistry {
    labels: Vec<String>,
}

impl Default for ClassRegistry {
    fn default() -> Self {
        Self { labels: DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect() }
    }
}

impl ClassRegistry {
    pub fn from_labels(labels: Vec<String>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::Argument("registry needs at least one class".into()));
        }
        let mut seen = BTreeSet::new();
        for l in &labels {
            if !seen.insert(l.clone()) {
                return Err(Error::Format(format!("duplicate class label {l:?}")));
            }
        }
        Ok(Self { labels })
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let labels: Vec<String> = serde_json::from_str(&text)?;
        Self::from_labels(labels)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index_of(label).is_some()
    }

    /// Multi-hot query for a set of labels. Every label must be in the
    /// registry; unknown labels are reported by name.
    pub fn query_from_labels<S: AsRef<str>>(&self, labels: &[S]) -> Result<QueryVector> {
        if labels.is_empty() {
            return Err(Error::Argument("at least one target label is required".into()));
        }
        let mut bits = vec![false; self.labels.len()];
        for l in labels {
            let l = l.as_ref();
            let idx = self.index_of(l).ok_or_else(|| {
                Error::Lookup(format!(
                    "unknown class {l:?}; valid classes: {}",
                    self.labels.join(", ")
                ))
            })?;
            bits[idx] = true;
        }
        Ok(QueryVector { bits })
    }
}

/// Multi-hot class selector of registry length.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryVector {
    bits: Vec<bool>,
}

impl QueryVector {
    pub fn zeros(len: usize) -> Self {
        Self { bits: vec![false; len] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn any_set(&self) -> bool {
        self.bits.iter().any(|&b| b)
    }

    pub fn bit(&self, i: usize) -> bool {
        self.bits[i]
    }

    /// Dense {0.0, 1.0} view for the label-embedding matmul.
    pub fn to_dense(&self) -> Vec<f32> {
        self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

/// A directed acyclic graph of class labels; edges point parent → child.
#[derive(Debug, Clone)]
pub struct OntologyGraph {
    nodes: Vec<String>,
    index: HashMap<String, usize>,
    children: Vec<Vec<usize>>,
    parents: Vec<Vec<usize>>,
}

impl OntologyGraph {
    /// Build and validate: endpoints must be declared nodes, labels must be
    /// unique and the edge set must be acyclic.
    pub fn new(nodes: Vec<String>, edges: Vec<(String, String)>) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, n) in nodes.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(Error::Format(format!("duplicate node {n:?}")));
            }
        }
        let mut children = vec![Vec::new(); nodes.len()];
        let mut parents = vec![Vec::new(); nodes.len()];
        for (from, to) in &edges {
            let f = *index
                .get(from)
                .ok_or_else(|| Error::Format(format!("edge references unknown node {from:?}")))?;
            let t = *index
                .get(to)
                .ok_or_else(|| Error::Format(format!("edge references unknown node {to:?}")))?;
            children[f].push(t);
            parents[t].push(f);
        }
        let graph = Self { nodes, index, children, parents };
        graph.check_acyclic()?;
        Ok(graph)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: GraphFile = serde_json::from_str(&text)?;
        Self::new(file.nodes, file.edges)
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn n_edges(&self) -> usize {
        self.children.iter().map(Vec::len).sum()
    }

    fn check_acyclic(&self) -> Result<()> {
        // Kahn's algorithm: if a topological order doesn't cover every
        // node, the remainder contains a cycle.
        let mut indegree: Vec<usize> = self.parents.iter().map(Vec::len).collect();
        let mut queue: VecDeque<usize> =
            indegree.iter().enumerate().filter(|(_, &d)| d == 0).map(|(i, _)| i).collect();
        let mut visited = 0;
        while let Some(n) = queue.pop_front() {
            visited += 1;
            for &c in &self.children[n] {
                indegree[c] -= 1;
                if indegree[c] == 0 {
                    queue.push_back(c);
                }
            }
        }
        if visited != self.nodes.len() {
            return Err(Error::Format("ontology graph contains a cycle".into()));
        }
        Ok(())
    }

    fn reach(&self, starts: &[usize], forward: bool) -> Vec<bool> {
        let adj = if forward { &self.children } else { &self.parents };
        let mut seen = vec![false; self.nodes.len()];
        let mut queue: VecDeque<usize> = starts.iter().copied().collect();
        for &s in starts {
            seen[s] = true;
        }
        while let Some(n) = queue.pop_front() {
            for &m in &adj[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    /// Classes with no directed path to or from any target node — the pool
    /// of safe distractor classes. Returned in declaration order.
    pub fn other_classes<S: AsRef<str>>(&self, targets: &[S]) -> Result<Vec<String>> {
        if targets.is_empty() {
            return Err(Error::Argument("target set must not be empty".into()));
        }
        let mut target_idx = Vec::with_capacity(targets.len());
        for t in targets {
            let t = t.as_ref();
            let idx = self
                .index
                .get(t)
                .ok_or_else(|| Error::Argument(format!("target {t:?} is not in the graph")))?;
            target_idx.push(*idx);
        }
        let descendants = self.reach(&target_idx, true);
        let ancestors = self.reach(&target_idx, false);
        Ok((0..self.nodes.len())
            .filter(|&i| !descendants[i] && !ancestors[i])
            .map(|i| self.nodes[i].clone())
            .collect())
    }
}
