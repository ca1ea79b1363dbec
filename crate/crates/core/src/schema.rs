//! Relational schemas: classes, categorical attributes and reference slots.

use std::collections::{BTreeSet, HashSet};

use rand::Rng;

use crate::dag::{self, Dag, DagPolicy};
use crate::deps::Aggregator;
use crate::report::{Finding, ValidationReport};
use crate::rng::poisson;
use crate::{Error, Result};

/// Index into [`RelationalSchema::slots`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SlotId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    pub states: Vec<String>,
}

impl AttributeDef {
    /// Attribute with canonical state labels `v0..v{k-1}`.
    pub fn with_cardinality(name: impl Into<String>, k: usize) -> Self {
        AttributeDef {
            name: name.into(),
            states: (0..k).map(|s| format!("v{s}")).collect(),
        }
    }

    pub fn cardinality(&self) -> usize {
        self.states.len()
    }
}

/// A foreign key of `owner` referencing the primary key of `target`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceSlot {
    pub name: String,
    pub owner: usize,
    pub target: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDef {
    pub name: String,
    pub primary_key: String,
    pub attributes: Vec<AttributeDef>,
    /// Slots owned by this class, ascending.
    pub reference_slots: Vec<SlotId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationalSchema {
    pub classes: Vec<ClassDef>,
    pub slots: Vec<ReferenceSlot>,
    /// Class graph; an edge `i -> j` means class `i` references class `j`.
    pub class_dag: Dag,
}

impl RelationalSchema {
    /// Assembles a schema from classes and slots, deriving each class's slot
    /// list and the class graph.
    pub fn new(mut classes: Vec<ClassDef>, slots: Vec<ReferenceSlot>) -> Result<Self> {
        for c in &mut classes {
            c.reference_slots.clear();
        }
        for (i, s) in slots.iter().enumerate() {
            let owner = classes
                .get_mut(s.owner)
                .ok_or_else(|| Error::invalid(format!("slot {} has unknown owner {}", s.name, s.owner)))?;
            owner.reference_slots.push(SlotId(i));
        }
        let class_dag = Dag::from_edges(classes.len(), slots.iter().map(|s| (s.owner, s.target)))?;
        Ok(RelationalSchema {
            classes,
            slots,
            class_dag,
        })
    }

    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    pub fn slot(&self, id: SlotId) -> &ReferenceSlot {
        &self.slots[id.0]
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.name == name)
    }

    pub fn slot_by_name(&self, name: &str) -> Option<SlotId> {
        self.slots.iter().position(|s| s.name == name).map(SlotId)
    }

    /// Slots whose target is `class`, ascending.
    pub fn incoming_slots(&self, class: usize) -> impl Iterator<Item = SlotId> + '_ {
        self.slots
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.target == class)
            .map(|(i, _)| SlotId(i))
    }

    pub fn attribute(&self, class: usize, attribute: usize) -> &AttributeDef {
        &self.classes[class].attributes[attribute]
    }

    pub fn attribute_count(&self) -> usize {
        self.classes.iter().map(|c| c.attributes.len()).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationPolicy {
    /// Descriptive attributes per class are `1 + Poisson(attr_lambda)`.
    pub attr_lambda: f64,
    /// States per attribute are `2 + Poisson(state_lambda)`.
    pub state_lambda: f64,
    /// Chain settings for the class graph.
    pub dag_policy: DagPolicy,
    /// Chain settings for the per-class attribute sub-DAGs. Its parent limit
    /// also caps inter-class parents.
    pub attribute_dag_policy: DagPolicy,
    /// Random pairs tried per inter-class edge before giving up on it.
    pub inter_class_attempts: usize,
    pub aggregators: Vec<Aggregator>,
}

impl Default for GenerationPolicy {
    fn default() -> Self {
        GenerationPolicy {
            attr_lambda: 1.0,
            state_lambda: 1.0,
            dag_policy: DagPolicy::default(),
            attribute_dag_policy: DagPolicy {
                max_parents: Some(3),
                ..DagPolicy::default()
            },
            inter_class_attempts: 50,
            aggregators: vec![Aggregator::Mode],
        }
    }
}

impl GenerationPolicy {
    pub fn validate(&self) -> Result<()> {
        if !(self.attr_lambda > 0.0 && self.attr_lambda.is_finite()) {
            return Err(Error::invalid(format!("attr_lambda must be > 0, got {}", self.attr_lambda)));
        }
        if !(self.state_lambda > 0.0 && self.state_lambda.is_finite()) {
            return Err(Error::invalid(format!("state_lambda must be > 0, got {}", self.state_lambda)));
        }
        if self.aggregators.is_empty() {
            return Err(Error::invalid("aggregator list is empty"));
        }
        Ok(())
    }
}

pub fn class_name(i: usize) -> String {
    format!("clazz{i}")
}

pub fn primary_key_name(i: usize) -> String {
    format!("clazz{i}id")
}

/// Foreign key held by `owner` on `target`: `clazz{target}fkatt{target}{owner}`.
pub fn foreign_key_name(owner: usize, target: usize) -> String {
    format!("clazz{target}fkatt{target}{owner}")
}

/// Generates a random schema with `n` classes over a connected class DAG.
pub fn generate_schema<R: Rng + ?Sized>(n: usize, policy: &GenerationPolicy, rng: &mut R) -> Result<RelationalSchema> {
    if n == 0 {
        return Err(Error::invalid("schema needs at least one class"));
    }
    policy.validate()?;
    let class_dag = dag::generate_connected_dag(n, &policy.dag_policy, rng)?;

    let classes = (0..n)
        .map(|i| {
            let attr_count = 1 + poisson(rng, policy.attr_lambda);
            let attributes = (0..attr_count)
                .map(|k| AttributeDef::with_cardinality(format!("att{k}"), 2 + poisson(rng, policy.state_lambda)))
                .collect();
            ClassDef {
                name: class_name(i),
                primary_key: primary_key_name(i),
                attributes,
                reference_slots: Vec::new(),
            }
        })
        .collect();

    let slots = class_dag
        .edges()
        .map(|(owner, target)| ReferenceSlot {
            name: foreign_key_name(owner, target),
            owner,
            target,
        })
        .collect();

    RelationalSchema::new(classes, slots)
}

/// Checks every schema invariant and reports all violations found.
pub fn validate_schema(s: &RelationalSchema) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = s.classes.len();
    if n == 0 {
        report.push(Finding::Empty("schema has no classes".into()));
        return report;
    }

    let mut valid_edges = Vec::new();
    for (i, slot) in s.slots.iter().enumerate() {
        if slot.owner >= n || slot.target >= n {
            report.push(Finding::DanglingSlot(format!(
                "slot {} links {} -> {} outside {n} classes",
                slot.name, slot.owner, slot.target
            )));
            continue;
        }
        if slot.owner == slot.target {
            report.push(Finding::Cycle(format!("slot {} references its own class", slot.name)));
            continue;
        }
        if !s.classes[slot.owner].reference_slots.contains(&SlotId(i)) {
            report.push(Finding::DanglingSlot(format!(
                "slot {} not listed by owner {}",
                slot.name, s.classes[slot.owner].name
            )));
        }
        valid_edges.push((slot.owner, slot.target));
    }
    for c in &s.classes {
        for id in &c.reference_slots {
            if id.0 >= s.slots.len() {
                report.push(Finding::DanglingSlot(format!("class {} lists unknown slot #{}", c.name, id.0)));
            }
        }
    }

    let edge_set: BTreeSet<(usize, usize)> = valid_edges.iter().copied().collect();
    if edge_set.len() != valid_edges.len() {
        report.push(Finding::Bijection("two slots link the same class pair".into()));
    }
    let dag_edges: BTreeSet<(usize, usize)> = s.class_dag.edges().collect();
    if s.class_dag.node_count() != n || dag_edges != edge_set {
        report.push(Finding::Bijection("reference slots and class graph edges differ".into()));
    }

    if dag::topo_sort(n, edge_set.iter().copied()).is_err() {
        report.push(Finding::Cycle("reference slots form a referential cycle".into()));
    } else if let Ok(g) = Dag::from_edges(n, edge_set.iter().copied()) {
        if !dag::is_weakly_connected(&g) {
            report.push(Finding::Disconnected("class graph has more than one component".into()));
        }
    }

    let mut class_names = HashSet::new();
    for c in &s.classes {
        if !class_names.insert(c.name.as_str()) {
            report.push(Finding::NameCollision(format!("duplicate class name {}", c.name)));
        }
        if c.attributes.is_empty() {
            report.push(Finding::Empty(format!("class {} has no descriptive attribute", c.name)));
        }
        let mut names = HashSet::new();
        names.insert(c.primary_key.as_str());
        let slot_names = c
            .reference_slots
            .iter()
            .filter_map(|id| s.slots.get(id.0))
            .map(|sl| sl.name.as_str());
        for name in c.attributes.iter().map(|a| a.name.as_str()).chain(slot_names) {
            if !names.insert(name) {
                report.push(Finding::NameCollision(format!("class {}: column {name} defined twice", c.name)));
            }
        }
        for a in &c.attributes {
            if a.states.len() < 2 {
                report.push(Finding::Domain(format!(
                    "{}.{} has {} state(s)",
                    c.name,
                    a.name,
                    a.states.len()
                )));
            }
            let uniq: HashSet<&str> = a.states.iter().map(String::as_str).collect();
            if uniq.len() != a.states.len() {
                report.push(Finding::Domain(format!("{}.{} repeats a state label", c.name, a.name)));
            }
        }
    }
    let mut slot_names = HashSet::new();
    for sl in &s.slots {
        if !slot_names.insert(sl.name.as_str()) {
            report.push(Finding::NameCollision(format!("duplicate slot name {}", sl.name)));
        }
    }
    report
}
