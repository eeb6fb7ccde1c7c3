use std::collections::BTreeMap;

use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `domain^arity` table a relation may occupy.
const MAX_TABLE: usize = 1 << 26;

/// A relation of fixed arity over the domain of its structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    arity: usize,
    tuples: Vec<Vec<usize>>,
}

impl Relation {
    pub fn new(arity: usize, mut tuples: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(t) = tuples.iter().find(|t| t.len() != arity) {
            return Err(Error::input(format!("tuple {t:?} does not have arity {arity}")));
        }
        tuples.sort_unstable();
        tuples.dedup();
        Ok(Relation { arity, tuples })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn tuples(&self) -> &[Vec<usize>] {
        &self.tuples
    }
}

/// A finite relational structure on `{0, …, domain_size-1}`.
///
/// Relations are stored as dense truth tables for constant-time lookups.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteStructure {
    domain_size: usize,
    relations: BTreeMap<String, (Relation, FixedBitSet)>,
    order: Option<Vec<usize>>,
}

impl FiniteStructure {
    pub fn new(domain_size: usize) -> Result<Self> {
        if domain_size == 0 {
            return Err(Error::input("domain must be nonempty"));
        }
        Ok(FiniteStructure { domain_size, relations: BTreeMap::new(), order: None })
    }

    pub fn domain_size(&self) -> usize {
        self.domain_size
    }

    pub fn add_relation(&mut self, name: &str, relation: Relation) -> Result<()> {
        if !is_relation_name(name) {
            return Err(Error::input(format!("`{name}` is not a usable relation name")));
        }
        let size = self
            .domain_size
            .checked_pow(relation.arity as u32)
            .filter(|&s| s <= MAX_TABLE)
            .ok_or_else(|| Error::input(format!("relation `{name}` table too large")))?;
        let mut table = FixedBitSet::with_capacity(size);
        for t in &relation.tuples {
            if let Some(&v) = t.iter().find(|&&v| v >= self.domain_size) {
                return Err(Error::input(format!("element {v} outside domain of size {}", self.domain_size)));
            }
            table.insert(self.flat(t));
        }
        self.relations.insert(name.to_string(), (relation, table));
        Ok(())
    }

    /// Designates a linear order as a permutation listing elements from least to greatest.
    pub fn set_order(&mut self, order: Vec<usize>) -> Result<()> {
        let mut seen = vec![false; self.domain_size];
        if order.len() != self.domain_size
            || order.iter().any(|&v| v >= self.domain_size || std::mem::replace(&mut seen[v], true))
        {
            return Err(Error::input("order must list every domain element exactly once"));
        }
        self.order = Some(order);
        Ok(())
    }

    pub fn order(&self) -> Option<&[usize]> {
        self.order.as_deref()
    }

    pub fn relation(&self, name: &str) -> Option<&Relation> {
        self.relations.get(name).map(|(r, _)| r)
    }

    pub fn relation_names(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    pub(crate) fn table(&self, name: &str) -> Option<(usize, &FixedBitSet)> {
        self.relations.get(name).map(|(r, t)| (r.arity, t))
    }

    pub(crate) fn flat(&self, tuple: &[usize]) -> usize {
        tuple.iter().fold(0, |acc, &v| acc * self.domain_size + v)
    }

    /// Row-major index of a tuple in `domain^len`, most significant coordinate first.
    pub fn tuple_index(&self, tuple: &[usize]) -> usize {
        self.flat(tuple)
    }

    /// Inverse of [`FiniteStructure::tuple_index`] for tuples of length `len`.
    pub fn tuple_at(&self, mut index: usize, len: usize) -> Vec<usize> {
        let mut t = vec![0; len];
        for slot in t.iter_mut().rev() {
            *slot = index % self.domain_size;
            index /= self.domain_size;
        }
        t
    }

    pub fn holds(&self, name: &str, tuple: &[usize]) -> bool {
        match self.relations.get(name) {
            Some((r, t)) if r.arity == tuple.len() && tuple.iter().all(|&v| v < self.domain_size) => {
                t.contains(self.flat(tuple))
            }
            _ => false,
        }
    }

    pub fn to_file(&self) -> StructureFile {
        StructureFile {
            domain: self.domain_size,
            relations: self
                .relations
                .iter()
                .map(|(k, (r, _))| (k.clone(), RelationFile { arity: r.arity, tuples: r.tuples.clone() }))
                .collect(),
            order: self.order.clone(),
        }
    }
}

pub(crate) fn is_relation_name(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        && !matches!(name, "and" | "or" | "not" | "true" | "false")
        && crate::fmodel::formula::parse_var(name).is_none()
}

/// JSON form `{"domain":k, "relations":{name:{"arity":a,"tuples":[…]}}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFile {
    pub domain: usize,
    #[serde(default)]
    pub relations: BTreeMap<String, RelationFile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationFile {
    pub arity: usize,
    pub tuples: Vec<Vec<usize>>,
}

impl StructureFile {
    pub fn to_structure(&self) -> Result<FiniteStructure> {
        let mut s = FiniteStructure::new(self.domain)?;
        for (name, r) in &self.relations {
            s.add_relation(name, Relation::new(r.arity, r.tuples.clone())?)?;
        }
        if let Some(o) = &self.order {
            s.set_order(o.clone())?;
        }
        Ok(s)
    }
}
