//! Relational skeletons: objects of each class and the links filling their
//! reference slots.
//!
//! Generation repeats depth-first passes over the class graph. A pass creates
//! one object of a root class (a class nobody references) and walks its
//! reference slots: each slot links either to a fresh object of the
//! referenced class, which is then expanded in turn, or to an existing one
//! picked by preferential attachment. The choice follows a Chinese
//! Restaurant Process, so popular objects keep attracting links and the
//! indegree distribution is heavy-tailed.

use std::collections::HashSet;

use rand::Rng;

use crate::dag;
use crate::report::{Finding, ValidationReport};
use crate::rng::weighted_index;
use crate::schema::{RelationalSchema, SlotId};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ObjectRef {
    pub class: usize,
    pub id: usize,
}

impl ObjectRef {
    pub fn new(class: usize, id: usize) -> Self {
        ObjectRef { class, id }
    }
}

/// `source` fills `slot` with `target`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Link {
    pub slot: SlotId,
    pub source: ObjectRef,
    pub target: ObjectRef,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RelationalSkeleton {
    /// Object count per class; ids run `0..count`.
    pub counts: Vec<usize>,
    pub links: Vec<Link>,
    /// Objects created by each generation pass.
    pub passes: Vec<usize>,
    forward: Vec<Vec<Option<usize>>>,
    inverse: Vec<Vec<Vec<usize>>>,
}

impl RelationalSkeleton {
    /// Indexes `links` for traversal. Links that do not fit the schema are
    /// kept in `links` but left out of the index; [`validate_skeleton`]
    /// reports them.
    pub fn new(schema: &RelationalSchema, counts: Vec<usize>, links: Vec<Link>) -> Self {
        let mut forward: Vec<Vec<Option<usize>>> = Vec::with_capacity(schema.slots.len());
        let mut inverse: Vec<Vec<Vec<usize>>> = Vec::with_capacity(schema.slots.len());
        for s in &schema.slots {
            forward.push(vec![None; counts.get(s.owner).copied().unwrap_or(0)]);
            inverse.push(vec![Vec::new(); counts.get(s.target).copied().unwrap_or(0)]);
        }
        for l in &links {
            let Some(s) = schema.slots.get(l.slot.0) else { continue };
            if l.source.class != s.owner || l.target.class != s.target {
                continue;
            }
            let fwd = &mut forward[l.slot.0];
            if l.source.id >= fwd.len() || l.target.id >= inverse[l.slot.0].len() || fwd[l.source.id].is_some() {
                continue;
            }
            fwd[l.source.id] = Some(l.target.id);
            inverse[l.slot.0][l.target.id].push(l.source.id);
        }
        RelationalSkeleton {
            counts,
            links,
            passes: Vec::new(),
            forward,
            inverse,
        }
    }

    pub fn total_objects(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn objects(&self, class: usize) -> impl Iterator<Item = ObjectRef> {
        (0..self.counts[class]).map(move |id| ObjectRef::new(class, id))
    }

    /// Object referenced by `owner_id` through `slot`.
    pub fn target(&self, slot: SlotId, owner_id: usize) -> Option<usize> {
        self.forward.get(slot.0)?.get(owner_id).copied().flatten()
    }

    /// Objects referencing `target_id` through `slot`, in link order.
    pub fn referrers(&self, slot: SlotId, target_id: usize) -> &[usize] {
        self.inverse
            .get(slot.0)
            .and_then(|v| v.get(target_id))
            .map_or(&[], Vec::as_slice)
    }

    /// Number of links pointing at each object of `class`, over all slots.
    pub fn indegrees(&self, schema: &RelationalSchema, class: usize) -> Vec<usize> {
        let mut deg = vec![0; self.counts[class]];
        for slot in schema.incoming_slots(class) {
            for (id, d) in deg.iter_mut().enumerate() {
                *d += self.referrers(slot, id).len();
            }
        }
        deg
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrpConfig {
    /// Concentration: larger values create fresh objects more often.
    pub alpha: f64,
    /// Generation stops once at least this many objects exist.
    pub n_total: usize,
}

impl CrpConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("CRP alpha must be > 0, got {}", self.alpha)));
        }
        if self.n_total == 0 {
            return Err(Error::invalid("object total must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrpChoice {
    New,
    /// Index into the candidate list.
    Existing(usize),
}

/// Probability that the `n_p`-th parent object links to a fresh child.
pub fn p_new(n_p: usize, alpha: f64) -> f64 {
    alpha / ((n_p as f64 - 1.0) + alpha)
}

/// One CRP step for a parent class holding `n_p` objects (including the one
/// being linked). `existing` holds the indegree of each candidate child.
///
/// Picks a fresh object with probability `alpha / (n_p - 1 + alpha)`,
/// otherwise a candidate with probability proportional to its indegree.
/// With no candidates the fresh object is forced.
pub fn crp_choose<R: Rng + ?Sized>(existing: &[usize], n_p: usize, alpha: f64, rng: &mut R) -> CrpChoice {
    let r: f64 = rng.random();
    if existing.is_empty() || r < p_new(n_p, alpha) {
        return CrpChoice::New;
    }
    CrpChoice::Existing(pick_existing(existing, rng))
}

/// Preferential attachment: a candidate with probability proportional to its
/// indegree, uniform if every indegree is zero. `existing` must be non-empty.
pub fn pick_existing<R: Rng + ?Sized>(existing: &[usize], rng: &mut R) -> usize {
    let weights: Vec<f64> = existing.iter().map(|&d| d as f64).collect();
    weighted_index(rng, &weights).unwrap_or_else(|| rng.random_range(0..existing.len()))
}

struct Builder<'a> {
    schema: &'a RelationalSchema,
    alpha: f64,
    counts: Vec<usize>,
    indegree: Vec<Vec<usize>>,
    links: Vec<Link>,
    visited: Vec<bool>,
    created: usize,
}

impl Builder<'_> {
    fn create(&mut self, class: usize) -> ObjectRef {
        let id = self.counts[class];
        self.counts[class] += 1;
        self.indegree[class].push(0);
        self.created += 1;
        ObjectRef::new(class, id)
    }

    fn expand<R: Rng + ?Sized>(&mut self, obj: ObjectRef, rng: &mut R) {
        self.visited[obj.class] = true;
        let n_p = self.counts[obj.class];
        let schema = self.schema;
        for &slot in &schema.classes[obj.class].reference_slots {
            let child_class = schema.slot(slot).target;
            // a class already expanded in this pass only receives links to
            // existing objects, which bounds a pass to one object per class
            let choice = if self.visited[child_class] {
                CrpChoice::Existing(pick_existing(&self.indegree[child_class], rng))
            } else {
                crp_choose(&self.indegree[child_class], n_p, self.alpha, rng)
            };
            let target = match choice {
                CrpChoice::Existing(i) => ObjectRef::new(child_class, i),
                CrpChoice::New => self.create(child_class),
            };
            self.indegree[child_class][target.id] += 1;
            self.links.push(Link {
                slot,
                source: obj,
                target,
            });
            if choice == CrpChoice::New {
                self.expand(target, rng);
            }
        }
    }
}

/// Generates a skeleton with at least `cfg.n_total` objects.
pub fn generate_skeleton<R: Rng + ?Sized>(
    schema: &RelationalSchema,
    cfg: &CrpConfig,
    rng: &mut R,
) -> Result<RelationalSkeleton> {
    cfg.validate()?;
    let n = schema.class_count();
    if n == 0 {
        return Err(Error::invalid("schema has no classes"));
    }
    let roots = schema.class_dag.roots();
    let mut b = Builder {
        schema,
        alpha: cfg.alpha,
        counts: vec![0; n],
        indegree: vec![Vec::new(); n],
        links: Vec::new(),
        visited: vec![false; n],
        created: 0,
    };
    let mut passes = Vec::new();
    let mut total = 0;
    while total < cfg.n_total {
        // each root together with its descendants forms one subgraph
        let root = if roots.len() > 1 {
            roots[rng.random_range(0..roots.len())]
        } else {
            roots[0]
        };
        b.visited.iter_mut().for_each(|v| *v = false);
        b.created = 0;
        let obj = b.create(root);
        b.expand(obj, rng);
        passes.push(b.created);
        total += b.created;
    }
    let mut sk = RelationalSkeleton::new(schema, b.counts, b.links);
    sk.passes = passes;
    Ok(sk)
}

/// Checks the k-partite skeleton properties: acyclic object graph, links
/// oriented owner to referenced class, exactly one target per
/// (object, slot), and every slot of every object filled.
pub fn validate_skeleton(sk: &RelationalSkeleton, schema: &RelationalSchema) -> ValidationReport {
    let mut report = ValidationReport::default();
    let n = schema.class_count();
    if sk.counts.len() != n {
        report.push(Finding::DanglingObject(format!(
            "{} object counts for {n} classes",
            sk.counts.len()
        )));
        return report;
    }

    let mut offsets = Vec::with_capacity(n);
    let mut acc = 0;
    for &c in &sk.counts {
        offsets.push(acc);
        acc += c;
    }
    let total = acc;
    let mut seen = HashSet::new();
    let mut edges = Vec::with_capacity(sk.links.len());
    for l in &sk.links {
        let Some(slot) = schema.slots.get(l.slot.0) else {
            report.push(Finding::DanglingSlot(format!("link uses unknown slot #{}", l.slot.0)));
            continue;
        };
        let in_range = |o: &ObjectRef| o.class < n && o.id < sk.counts[o.class];
        if !in_range(&l.source) || !in_range(&l.target) {
            report.push(Finding::DanglingObject(format!(
                "{} link {:?} -> {:?} names a missing object",
                slot.name, l.source, l.target
            )));
            continue;
        }
        if l.source.class != slot.owner || l.target.class != slot.target {
            report.push(Finding::Orientation(format!(
                "{} link runs {} -> {}, slot runs {} -> {}",
                slot.name,
                schema.classes[l.source.class].name,
                schema.classes[l.target.class].name,
                schema.classes[slot.owner].name,
                schema.classes[slot.target].name
            )));
        }
        if !seen.insert((l.slot, l.source)) {
            report.push(Finding::OutDegree(format!(
                "{}#{} fills {} more than once",
                schema.classes[l.source.class].name, l.source.id, slot.name
            )));
        }
        edges.push((offsets[l.source.class] + l.source.id, offsets[l.target.class] + l.target.id));
    }

    for (c, class) in schema.classes.iter().enumerate() {
        for &slot in &class.reference_slots {
            let missing = (0..sk.counts[c])
                .filter(|&id| !seen.contains(&(slot, ObjectRef::new(c, id))))
                .count();
            if missing > 0 {
                report.push(Finding::Totality(format!(
                    "{missing} object(s) of {} leave {} unassigned",
                    class.name,
                    schema.slot(slot).name
                )));
            }
        }
    }

    if dag::topo_sort(total, edges).is_err() {
        report.push(Finding::Cycle("object graph has a directed cycle".into()));
    }
    report
}
