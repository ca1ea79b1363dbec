//! Ground Bayesian network over a skeleton, and forward sampling of a
//! database instance from it.

use std::collections::BTreeSet;

use rand::Rng;

use crate::chain::SlotChain;
use crate::cpd::Prm;
use crate::dag::topo_sort_adjacency;
use crate::deps::Aggregator;
use crate::report::{Finding, ValidationReport};
use crate::schema::RelationalSchema;
use crate::skeleton::{Link, ObjectRef, RelationalSkeleton};
use crate::{Error, Result};

/// Objects reached from `start` by following `chain`, as a set.
pub fn resolve_slot_chain(
    schema: &RelationalSchema,
    sk: &RelationalSkeleton,
    start: ObjectRef,
    chain: &SlotChain,
) -> BTreeSet<ObjectRef> {
    let class = chain.end_class(schema).unwrap_or(start.class);
    resolve_ids(sk, start.id, chain)
        .into_iter()
        .map(|id| ObjectRef::new(class, id))
        .collect()
}

/// Ids of the objects reached from `start_id`, sorted and deduplicated.
pub(crate) fn resolve_ids(sk: &RelationalSkeleton, start_id: usize, chain: &SlotChain) -> Vec<usize> {
    let mut frontier = vec![start_id];
    for s in &chain.slots {
        let mut next = Vec::new();
        if s.inverted {
            for &id in &frontier {
                next.extend_from_slice(sk.referrers(s.slot, id));
            }
        } else {
            next.extend(frontier.iter().filter_map(|&id| sk.target(s.slot, id)));
        }
        next.sort_unstable();
        next.dedup();
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    frontier
}

/// Most frequent state; ties go to the lowest index and the empty multiset
/// gives state 0.
pub fn aggregate_mode(values: &[usize], domain: usize) -> usize {
    let mut counts = vec![0usize; domain.max(1)];
    for &v in values {
        if let Some(c) = counts.get_mut(v) {
            *c += 1;
        }
    }
    let mut best = 0;
    for (s, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = s;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AggregateParent {
    pub aggregator: Aggregator,
    /// Contributing ground nodes; may be empty.
    pub nodes: Vec<usize>,
    pub domain: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GbnParent {
    Node(usize),
    Aggregate(AggregateParent),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GbnNode {
    pub object: ObjectRef,
    pub attribute: usize,
    /// Aligned with the parent order of the attribute's CPD.
    pub parents: Vec<GbnParent>,
}

#[derive(Debug, Clone)]
pub struct GroundBayesianNetwork<'a> {
    pub prm: &'a Prm,
    pub skeleton: &'a RelationalSkeleton,
    pub nodes: Vec<GbnNode>,
    /// Topological order of `nodes`.
    pub order: Vec<usize>,
    base: Vec<usize>,
}

impl GroundBayesianNetwork<'_> {
    /// Index of the node for `attribute` of `object`.
    pub fn node_index(&self, object: ObjectRef, attribute: usize) -> usize {
        let width = self.prm.schema.classes[object.class].attributes.len();
        self.base[object.class] + object.id * width + attribute
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Parent -> child edges, aggregate contributors included.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.nodes.iter().enumerate().flat_map(|(child, node)| {
            node.parents.iter().flat_map(move |p| {
                let sources: Vec<usize> = match p {
                    GbnParent::Node(i) => vec![*i],
                    GbnParent::Aggregate(a) => a.nodes.clone(),
                };
                sources.into_iter().map(move |s| (s, child))
            })
        })
    }
}

/// Instantiates `prm` over `sk`: one node per (object, descriptive
/// attribute), parents resolved through each dependency's slot chain.
pub fn ground<'a>(prm: &'a Prm, sk: &'a RelationalSkeleton) -> Result<GroundBayesianNetwork<'a>> {
    let schema = &prm.schema;
    if sk.counts.len() != schema.class_count() {
        return Err(Error::SchemaMismatch(format!(
            "skeleton has {} classes, schema {}",
            sk.counts.len(),
            schema.class_count()
        )));
    }
    let mut base = Vec::with_capacity(schema.class_count());
    let mut acc = 0;
    for (c, class) in schema.classes.iter().enumerate() {
        base.push(acc);
        acc += sk.counts[c] * class.attributes.len();
    }
    let index = |o: ObjectRef, a: usize| base[o.class] + o.id * schema.classes[o.class].attributes.len() + a;

    let mut nodes = Vec::with_capacity(acc);
    for (c, class) in schema.classes.iter().enumerate() {
        for id in 0..sk.counts[c] {
            for a in 0..class.attributes.len() {
                let cpd = prm.cpd(crate::AttributeNode::new(c, a));
                let mut parents = Vec::with_capacity(cpd.parents.len());
                for &d in &cpd.parents {
                    let dep = &prm.structure.dependencies[d];
                    let reached = resolve_ids(sk, id, &dep.slot_chain);
                    let pa = dep.parent.attribute;
                    let pc = dep.parent.class;
                    match dep.aggregator {
                        Some(aggregator) => parents.push(GbnParent::Aggregate(AggregateParent {
                            aggregator,
                            nodes: reached.iter().map(|&o| index(ObjectRef::new(pc, o), pa)).collect(),
                            domain: schema.attribute(pc, pa).cardinality(),
                        })),
                        None => match reached.as_slice() {
                            [o] => parents.push(GbnParent::Node(index(ObjectRef::new(pc, *o), pa))),
                            _ => {
                                return Err(Error::Invariant(format!(
                                    "{}#{id}: single-valued chain {} reached {} objects",
                                    class.name,
                                    dep.slot_chain.display(schema),
                                    reached.len()
                                )))
                            }
                        },
                    }
                }
                nodes.push(GbnNode {
                    object: ObjectRef::new(c, id),
                    attribute: a,
                    parents,
                });
            }
        }
    }

    let mut gbn = GroundBayesianNetwork {
        prm,
        skeleton: sk,
        nodes,
        order: Vec::new(),
        base,
    };
    let mut succ = vec![Vec::new(); gbn.nodes.len()];
    let mut indeg = vec![0usize; gbn.nodes.len()];
    for (u, v) in gbn.edges() {
        succ[u].push(v);
        indeg[v] += 1;
    }
    gbn.order = topo_sort_adjacency(&succ, &mut indeg)
        .map_err(|_| Error::Invariant("ground network has a directed cycle".into()))?;
    Ok(gbn)
}

/// A populated database instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    /// Row count per class; primary keys run `0..count`.
    pub counts: Vec<usize>,
    /// Per schema slot, the referenced id for each owner row.
    pub foreign_keys: Vec<Vec<usize>>,
    /// `values[class][attribute][row]` is a state index.
    pub values: Vec<Vec<Vec<usize>>>,
    /// Aggregates evaluated over an empty set while sampling.
    pub empty_aggregates: usize,
}

impl Dataset {
    /// Dataset with no rows.
    pub fn empty(schema: &RelationalSchema) -> Self {
        Dataset {
            counts: vec![0; schema.class_count()],
            foreign_keys: vec![Vec::new(); schema.slots.len()],
            values: schema.classes.iter().map(|c| vec![Vec::new(); c.attributes.len()]).collect(),
            empty_aggregates: 0,
        }
    }

    pub fn total_rows(&self) -> usize {
        self.counts.iter().sum()
    }

    /// Rebuilds the skeleton encoded by the foreign keys.
    pub fn skeleton(&self, schema: &RelationalSchema) -> RelationalSkeleton {
        let mut links = Vec::new();
        for (s, fks) in self.foreign_keys.iter().enumerate() {
            let Some(slot) = schema.slots.get(s) else { continue };
            for (owner, &target) in fks.iter().enumerate() {
                links.push(Link {
                    slot: crate::SlotId(s),
                    source: ObjectRef::new(slot.owner, owner),
                    target: ObjectRef::new(slot.target, target),
                });
            }
        }
        RelationalSkeleton::new(schema, self.counts.clone(), links)
    }

    /// Referential integrity and domain checks.
    pub fn check(&self, schema: &RelationalSchema) -> ValidationReport {
        let mut report = ValidationReport::default();
        if self.counts.len() != schema.class_count()
            || self.foreign_keys.len() != schema.slots.len()
            || self.values.len() != schema.class_count()
        {
            report.push(Finding::DanglingObject("dataset shape does not match the schema".into()));
            return report;
        }
        for (s, fks) in self.foreign_keys.iter().enumerate() {
            let slot = &schema.slots[s];
            if fks.len() != self.counts[slot.owner] {
                report.push(Finding::Totality(format!(
                    "{}: {} keys for {} rows",
                    slot.name,
                    fks.len(),
                    self.counts[slot.owner]
                )));
            }
            let bad = fks.iter().filter(|&&t| t >= self.counts[slot.target]).count();
            if bad > 0 {
                report.push(Finding::DanglingObject(format!("{}: {bad} key(s) name no row", slot.name)));
            }
        }
        for (c, class) in schema.classes.iter().enumerate() {
            if self.values[c].len() != class.attributes.len() {
                report.push(Finding::Domain(format!("{}: attribute columns do not match", class.name)));
                continue;
            }
            for (a, attr) in class.attributes.iter().enumerate() {
                let col = &self.values[c][a];
                if col.len() != self.counts[c] {
                    report.push(Finding::Totality(format!("{}.{}: column length", class.name, attr.name)));
                }
                if col.iter().any(|&v| v >= attr.cardinality()) {
                    report.push(Finding::Domain(format!("{}.{}: value out of domain", class.name, attr.name)));
                }
            }
        }
        report
    }
}

/// Draws one complete instantiation in topological order.
pub fn forward_sample<R: Rng + ?Sized>(gbn: &GroundBayesianNetwork<'_>, rng: &mut R) -> Dataset {
    let prm = gbn.prm;
    let schema = &prm.schema;
    let mut state = vec![usize::MAX; gbn.nodes.len()];
    let mut empty_aggregates = 0;
    let mut config = Vec::new();
    let mut pool = Vec::new();

    for &i in &gbn.order {
        let node = &gbn.nodes[i];
        config.clear();
        for p in &node.parents {
            let s = match p {
                GbnParent::Node(j) => state[*j],
                GbnParent::Aggregate(agg) => {
                    if agg.nodes.is_empty() {
                        empty_aggregates += 1;
                    }
                    pool.clear();
                    pool.extend(agg.nodes.iter().map(|&j| state[j]));
                    agg.aggregator.apply(&pool, agg.domain)
                }
            };
            config.push(s);
        }
        let cpd = prm.cpd(crate::AttributeNode::new(node.object.class, node.attribute));
        state[i] = sample_categorical(cpd.row(&config), rng);
    }

    let values = schema
        .classes
        .iter()
        .enumerate()
        .map(|(c, class)| {
            (0..class.attributes.len())
                .map(|a| {
                    (0..gbn.skeleton.counts[c])
                        .map(|id| state[gbn.node_index(ObjectRef::new(c, id), a)])
                        .collect()
                })
                .collect()
        })
        .collect();
    let foreign_keys = schema
        .slots
        .iter()
        .enumerate()
        .map(|(s, slot)| {
            (0..gbn.skeleton.counts[slot.owner])
                .map(|id| gbn.skeleton.target(crate::SlotId(s), id).unwrap_or(usize::MAX))
                .collect()
        })
        .collect();

    Dataset {
        counts: gbn.skeleton.counts.clone(),
        foreign_keys,
        values,
        empty_aggregates,
    }
}

fn sample_categorical<R: Rng + ?Sized>(row: &[f64], rng: &mut R) -> usize {
    let mut r: f64 = rng.random();
    for (s, &p) in row.iter().enumerate() {
        if r < p {
            return s;
        }
        r -= p;
    }
    // rounding: land on the last state with mass
    row.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_examples() {
        assert_eq!(aggregate_mode(&[1, 0, 1], 2), 1);
        assert_eq!(aggregate_mode(&[0, 1], 2), 0);
        assert_eq!(aggregate_mode(&[], 2), 0);
        assert_eq!(aggregate_mode(&[2, 2, 1, 1], 3), 1);
    }

    #[test]
    fn categorical_respects_zero_mass() {
        let mut rng = crate::rng::seeded(0);
        for _ in 0..1000 {
            assert_eq!(sample_categorical(&[0.0, 1.0, 0.0], &mut rng), 1);
        }
    }
}
