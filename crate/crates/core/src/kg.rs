//! Triple-file parsing, entity/relation dictionaries, and the sparse binary
//! adjacency tensor. Input is TSV with one `head<TAB>relation<TAB>tail`
//! triple per line; absent triples are treated as false (closed world).

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

/// A fact, stored as dense integer ids into the owning [`KgIndex`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub head: usize,
    pub rel: usize,
    pub tail: usize,
}

/// Bidirectional dictionaries between labels and dense ids. Ids are assigned
/// first-come-first-served and never reused, so parsing the same file twice
/// with fresh indices yields identical maps.
#[derive(Debug, Clone, Default)]
pub struct KgIndex {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_ids: HashMap<String, usize>,
    relation_ids: HashMap<String, usize>,
}

impl KgIndex {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn n_e(&self) -> usize {
        self.entities.len()
    }

    pub fn n_r(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_id(&mut self, label: &str) -> usize {
        if let Some(&id) = self.entity_ids.get(label) {
            return id;
        }
        let id = self.entities.len();
        self.entities.push(label.to_string());
        self.entity_ids.insert(label.to_string(), id);
        id
    }

    pub fn relation_id(&mut self, label: &str) -> usize {
        if let Some(&id) = self.relation_ids.get(label) {
            return id;
        }
        let id = self.relations.len();
        self.relations.push(label.to_string());
        self.relation_ids.insert(label.to_string(), id);
        id
    }

    pub fn entity_label(&self, id: usize) -> Option<&str> {
        self.entities.get(id).map(String::as_str)
    }

    pub fn relation_label(&self, id: usize) -> Option<&str> {
        self.relations.get(id).map(String::as_str)
    }

    pub fn lookup_entity(&self, label: &str) -> Option<usize> {
        self.entity_ids.get(label).copied()
    }

    pub fn lookup_relation(&self, label: &str) -> Option<usize> {
        self.relation_ids.get(label).copied()
    }

    /// Writes `id<TAB>label` lines ordered by id.
    pub fn write_entities_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (id, label) in self.entities.iter().enumerate() {
            writeln!(w, "{id}\t{label}")?;
        }
        Ok(())
    }

    /// Writes `id<TAB>label` lines ordered by id.
    pub fn write_relations_tsv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (id, label) in self.relations.iter().enumerate() {
            writeln!(w, "{id}\t{label}")?;
        }
        Ok(())
    }
}

/// Result of parsing a triple file: unique triples in first-seen order plus
/// the number of duplicate lines that were dropped.
#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub triples: Vec<Triple>,
    pub duplicates: usize,
}

/// Parses line-oriented `head<TAB>relation<TAB>tail` text, extending `index`
/// in place. Blank lines are skipped; a line with anything other than three
/// tab-separated fields is an error. Duplicate triples are dropped and
/// counted (tensor entries are binary, so multiplicity carries nothing).
pub fn parse_triples<R: BufRead>(reader: R, index: &mut KgIndex) -> Result<ParseOutcome> {
    let mut triples = Vec::new();
    let mut seen = HashSet::new();
    let mut duplicates = 0usize;
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split('\t');
        let (head, rel, tail) = match (fields.next(), fields.next(), fields.next(), fields.next()) {
            (Some(h), Some(r), Some(t), None) => (h, r, t),
            _ => return Err(Error::MalformedLine { line: lineno + 1 }),
        };
        let triple = Triple {
            head: index.entity_id(head),
            rel: index.relation_id(rel),
            tail: index.entity_id(tail),
        };
        if seen.insert(triple) {
            triples.push(triple);
        } else {
            duplicates += 1;
        }
    }
    if triples.is_empty() {
        return Err(Error::EmptyInput);
    }
    Ok(ParseOutcome {
        triples,
        duplicates,
    })
}

/// Sparse binary third-order tensor over (head entity, relation, tail
/// entity). Presence of an index triple encodes a 1; everything else is 0.
/// Built once, then immutable and safe to share across threads.
#[derive(Debug, Clone)]
pub struct AdjacencyTensor {
    n_e: usize,
    n_r: usize,
    present: HashSet<Triple>,
}

impl AdjacencyTensor {
    pub fn n_e(&self) -> usize {
        self.n_e
    }

    pub fn n_r(&self) -> usize {
        self.n_r
    }

    pub fn len(&self) -> usize {
        self.present.len()
    }

    pub fn is_empty(&self) -> bool {
        self.present.is_empty()
    }

    pub fn contains(&self, head: usize, rel: usize, tail: usize) -> bool {
        self.present.contains(&Triple { head, rel, tail })
    }

    /// All stored triples in ascending (head, rel, tail) order.
    pub fn sorted_triples(&self) -> Vec<Triple> {
        let mut v: Vec<Triple> = self.present.iter().copied().collect();
        v.sort_unstable();
        v
    }

    /// Triple count per relation id.
    pub fn relation_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.n_r];
        for t in &self.present {
            counts[t.rel] += 1;
        }
        counts
    }

    /// Emits the tensor back to TSV using the index labels, sorted by ids, so
    /// that re-parsing reproduces the same `present` set.
    pub fn write_tsv<W: Write>(&self, index: &KgIndex, mut w: W) -> Result<()> {
        for t in self.sorted_triples() {
            let head = index
                .entity_label(t.head)
                .ok_or(Error::OutOfBounds { what: "entity", id: t.head, bound: index.n_e() })?;
            let rel = index
                .relation_label(t.rel)
                .ok_or(Error::OutOfBounds { what: "relation", id: t.rel, bound: index.n_r() })?;
            let tail = index
                .entity_label(t.tail)
                .ok_or(Error::OutOfBounds { what: "entity", id: t.tail, bound: index.n_e() })?;
            writeln!(w, "{head}\t{rel}\t{tail}")?;
        }
        Ok(())
    }
}

/// Materializes the adjacency tensor for `triples` under `index`, with set
/// semantics (duplicates collapse).
pub fn build_tensor(triples: &[Triple], index: &KgIndex) -> Result<AdjacencyTensor> {
    let n_e = index.n_e();
    let n_r = index.n_r();
    let mut present = HashSet::with_capacity(triples.len());
    for t in triples {
        if t.head >= n_e {
            return Err(Error::OutOfBounds { what: "entity", id: t.head, bound: n_e });
        }
        if t.tail >= n_e {
            return Err(Error::OutOfBounds { what: "entity", id: t.tail, bound: n_e });
        }
        if t.rel >= n_r {
            return Err(Error::OutOfBounds { what: "relation", id: t.rel, bound: n_r });
        }
        present.insert(*t);
    }
    Ok(AdjacencyTensor { n_e, n_r, present })
}

/// A relation pair where at least 90% of the first relation's triples appear
/// reversed under the second. Datasets are expected to arrive with inverses
/// already removed; this is a validation signal, not an error.
#[derive(Debug, Clone, PartialEq)]
pub struct InverseRelationWarning {
    pub rel: usize,
    pub inverse: usize,
    pub fraction: f64,
}

/// Scans for near-inverse relation pairs, returned sorted by (rel, inverse).
pub fn inverse_relation_warnings(tensor: &AdjacencyTensor) -> Vec<InverseRelationWarning> {
    // reversed (tail, head) pair -> relations asserting it
    let mut reversed: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for t in &tensor.present {
        reversed.entry((t.head, t.tail)).or_default().push(t.rel);
    }
    let counts = tensor.relation_counts();
    let n_r = tensor.n_r();
    let mut pair_counts: HashMap<(usize, usize), usize> = HashMap::new();
    for t in &tensor.present {
        if let Some(rels) = reversed.get(&(t.tail, t.head)) {
            for &r_prime in rels {
                if r_prime != t.rel {
                    *pair_counts.entry((t.rel, r_prime)).or_default() += 1;
                }
            }
        }
    }
    let mut warnings: Vec<InverseRelationWarning> = pair_counts
        .into_iter()
        .filter_map(|((rel, inverse), c)| {
            debug_assert!(rel < n_r && inverse < n_r);
            let total = counts[rel];
            let fraction = c as f64 / total as f64;
            (total > 0 && fraction >= 0.9).then_some(InverseRelationWarning {
                rel,
                inverse,
                fraction,
            })
        })
        .collect();
    warnings.sort_by_key(|w| (w.rel, w.inverse));
    warnings
}
