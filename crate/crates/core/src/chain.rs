//! Slot chains: paths through the schema made of reference slots and their
//! inverses.
//!
//! A forward slot maps an object to the single object it references; an
//! inverse slot maps an object to every object referencing it. A chain is
//! multi-valued as soon as it crosses one inverse slot.

use std::collections::BTreeSet;
use std::fmt;

use rand::Rng;

use crate::rng::weighted_index;
use crate::schema::{RelationalSchema, SlotId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub slot: SlotId,
    pub inverted: bool,
}

impl Slot {
    pub fn forward(slot: SlotId) -> Self {
        Slot { slot, inverted: false }
    }

    pub fn inverse(slot: SlotId) -> Self {
        Slot { slot, inverted: true }
    }

    pub fn start_class(&self, schema: &RelationalSchema) -> usize {
        let s = schema.slot(self.slot);
        if self.inverted {
            s.target
        } else {
            s.owner
        }
    }

    pub fn end_class(&self, schema: &RelationalSchema) -> usize {
        let s = schema.slot(self.slot);
        if self.inverted {
            s.owner
        } else {
            s.target
        }
    }

    /// Path segment: the slot name, prefixed with `~` when inverted.
    pub fn segment(&self, schema: &RelationalSchema) -> String {
        let name = &schema.slot(self.slot).name;
        if self.inverted {
            format!("~{name}")
        } else {
            name.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotChain {
    pub source: usize,
    pub slots: Vec<Slot>,
}

impl SlotChain {
    pub fn empty(source: usize) -> Self {
        SlotChain {
            source,
            slots: Vec::new(),
        }
    }

    pub fn new(source: usize, slots: Vec<Slot>) -> Self {
        SlotChain { source, slots }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    /// Structural rule: any inverse slot makes the chain one-to-many.
    pub fn is_multi_valued(&self) -> bool {
        self.slots.iter().any(|s| s.inverted)
    }

    /// Class reached at the end of the chain, or `None` if two adjacent
    /// slots do not compose.
    pub fn end_class(&self, schema: &RelationalSchema) -> Option<usize> {
        let mut at = self.source;
        for s in &self.slots {
            if s.slot.0 >= schema.slots.len() || s.start_class(schema) != at {
                return None;
            }
            at = s.end_class(schema);
        }
        Some(at)
    }

    pub fn is_well_composed(&self, schema: &RelationalSchema) -> bool {
        self.source < schema.class_count() && self.end_class(schema).is_some()
    }

    /// Slash-joined path, e.g. `~clazz2fkatt23/clazz1fkatt13`. Empty for the
    /// empty chain.
    pub fn path(&self, schema: &RelationalSchema) -> String {
        self.slots
            .iter()
            .map(|s| s.segment(schema))
            .collect::<Vec<_>>()
            .join("/")
    }

    /// Parses a path produced by [`SlotChain::path`] starting at `source`.
    pub fn parse_path(schema: &RelationalSchema, source: usize, path: &str) -> Result<Self> {
        let mut slots = Vec::new();
        if !path.is_empty() {
            for seg in path.split('/') {
                let (name, inverted) = match seg.strip_prefix('~') {
                    Some(rest) => (rest, true),
                    None => (seg, false),
                };
                let id = schema
                    .slot_by_name(name)
                    .ok_or_else(|| Error::invalid(format!("unknown slot {name}")))?;
                slots.push(Slot { slot: id, inverted });
            }
        }
        let chain = SlotChain { source, slots };
        if chain.end_class(schema).is_none() {
            return Err(Error::invalid(format!("slot chain {path} does not compose")));
        }
        Ok(chain)
    }

    /// Human-readable form such as `clazz2.clazz2fkatt23^-1.att0`.
    pub fn dotted(&self, schema: &RelationalSchema, attribute: &str) -> String {
        let mut out = schema.classes[self.source].name.clone();
        for s in &self.slots {
            out.push('.');
            out.push_str(&schema.slot(s.slot).name);
            if s.inverted {
                out.push_str("^-1");
            }
        }
        out.push('.');
        out.push_str(attribute);
        out
    }

    pub fn display<'a>(&'a self, schema: &'a RelationalSchema) -> ChainDisplay<'a> {
        ChainDisplay { chain: self, schema }
    }
}

pub struct ChainDisplay<'a> {
    chain: &'a SlotChain,
    schema: &'a RelationalSchema,
}

impl fmt::Display for ChainDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.chain.is_empty() {
            write!(f, "<empty from {}>", self.schema.classes[self.chain.source].name)
        } else {
            write!(f, "{}", self.chain.path(self.schema))
        }
    }
}

/// Drops trailing `(rho^-1, rho)` pairs until none is left.
pub fn simplify_slot_chain(chain: &SlotChain) -> SlotChain {
    let mut slots = chain.slots.clone();
    while let [.., a, b] = slots.as_slice() {
        if a.inverted && !b.inverted && a.slot == b.slot {
            slots.truncate(slots.len() - 2);
        } else {
            break;
        }
    }
    SlotChain {
        source: chain.source,
        slots,
    }
}

/// Every chain of length `0..=k_max` from `from` to `to`, keeping one
/// representative per simplified form. Sorted by length, then slots.
pub fn enumerate_slot_chains(schema: &RelationalSchema, from: usize, to: usize, k_max: usize) -> Vec<SlotChain> {
    let n = schema.class_count();
    // moves available from each class, in slot order
    let mut moves: Vec<Vec<Slot>> = vec![Vec::new(); n];
    for (i, s) in schema.slots.iter().enumerate() {
        moves[s.owner].push(Slot::forward(SlotId(i)));
        moves[s.target].push(Slot::inverse(SlotId(i)));
    }
    for m in &mut moves {
        m.sort();
    }

    let mut found = BTreeSet::new();
    let mut path = Vec::with_capacity(k_max);
    walk(&moves, schema, from, to, k_max, &mut path, &mut found);

    let mut out: Vec<SlotChain> = found
        .into_iter()
        .map(|slots| SlotChain { source: from, slots })
        .collect();
    out.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.slots.cmp(&b.slots)));
    out
}

fn walk(
    moves: &[Vec<Slot>],
    schema: &RelationalSchema,
    at: usize,
    to: usize,
    budget: usize,
    path: &mut Vec<Slot>,
    found: &mut BTreeSet<Vec<Slot>>,
) {
    if at == to {
        let simplified = simplify_slot_chain(&SlotChain::new(0, path.clone()));
        found.insert(simplified.slots);
    }
    if budget == 0 {
        return;
    }
    for &m in &moves[at] {
        path.push(m);
        walk(moves, schema, m.end_class(schema), to, budget - 1, path, found);
        path.pop();
    }
}

/// Draw probabilities for candidate chains: weight `exp(-l / count(l))`
/// where `count(l)` is the number of candidates of length `l`, normalized.
pub fn slot_chain_weights(chains: &[SlotChain]) -> Result<Vec<f64>> {
    if chains.is_empty() {
        return Err(Error::NoCandidate);
    }
    let max_len = chains.iter().map(SlotChain::len).max().unwrap_or(0);
    let mut occurrences = vec![0usize; max_len + 1];
    for c in chains {
        occurrences[c.len()] += 1;
    }
    let raw: Vec<f64> = chains
        .iter()
        .map(|c| (-(c.len() as f64) / occurrences[c.len()] as f64).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Index of a candidate drawn with the probabilities of
/// [`slot_chain_weights`].
pub fn draw_slot_chain<R: Rng + ?Sized>(chains: &[SlotChain], rng: &mut R) -> Result<usize> {
    let weights = slot_chain_weights(chains)?;
    weighted_index(rng, &weights).ok_or(Error::NoCandidate)
}
