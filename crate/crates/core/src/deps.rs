//! Attribute-level dependency structure of a PRM.
//!
//! Generation runs in two phases. First each class gets its own random
//! sub-DAG over its attributes, and inter-class edges are added between the
//! resulting components while keeping the union acyclic. Then every
//! inter-class edge is annotated with a slot chain drawn from the candidates
//! up to the maximum chain length, shorter chains being more likely.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use log::warn;
use rand::Rng;

use crate::chain::{draw_slot_chain, enumerate_slot_chains, SlotChain};
use crate::dag::{self, Dag};
use crate::rng::poisson;
use crate::schema::{GenerationPolicy, RelationalSchema};
use crate::{Error, Result};

/// Upper bound on retries of the inter-class phase.
const INTER_CLASS_RETRIES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeNode {
    pub class: usize,
    pub attribute: usize,
}

impl AttributeNode {
    pub fn new(class: usize, attribute: usize) -> Self {
        AttributeNode { class, attribute }
    }

    /// `class.attribute` using schema names.
    pub fn qualified(&self, schema: &RelationalSchema) -> String {
        let c = &schema.classes[self.class];
        format!("{}.{}", c.name, c.attributes[self.attribute].name)
    }
}

/// Summary of a multiset of categorical values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Aggregator {
    /// Most frequent state, ties to the lowest index, empty set to state 0.
    Mode,
}

impl Aggregator {
    pub const ALL: [Aggregator; 1] = [Aggregator::Mode];

    pub fn name(&self) -> &'static str {
        match self {
            Aggregator::Mode => "MODE",
        }
    }

    /// Applies the aggregator. The output lies in `0..domain`.
    pub fn apply(&self, values: &[usize], domain: usize) -> usize {
        match self {
            Aggregator::Mode => crate::ground::aggregate_mode(values, domain),
        }
    }
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Aggregator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Aggregator::ALL
            .into_iter()
            .find(|a| a.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown aggregator {s}")))
    }
}

/// `parent` influences `child` through `slot_chain`, which runs from the
/// child's class to the parent's class.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dependency {
    pub child: AttributeNode,
    pub parent: AttributeNode,
    pub slot_chain: SlotChain,
    pub aggregator: Option<Aggregator>,
}

impl Dependency {
    pub fn intra(child: AttributeNode, parent: AttributeNode) -> Self {
        Dependency {
            child,
            parent,
            slot_chain: SlotChain::empty(child.class),
            aggregator: None,
        }
    }

    /// e.g. `MODE(clazz2.clazz2fkatt23^-1.att0) -> clazz2.att3`
    pub fn describe(&self, schema: &RelationalSchema) -> String {
        let parent_name = &schema.attribute(self.parent.class, self.parent.attribute).name;
        let inner = self.slot_chain.dotted(schema, parent_name);
        let lhs = match self.aggregator {
            Some(a) => format!("{a}({inner})"),
            None => inner,
        };
        format!("{lhs} -> {}", self.child.qualified(schema))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DependencyStructure {
    pub dependencies: Vec<Dependency>,
    /// Effective maximum chain length used when chains were assigned; 0
    /// before assignment.
    pub k_max: usize,
}

impl DependencyStructure {
    /// Dependencies whose child is `node`, in stored order.
    pub fn parents_of(&self, node: AttributeNode) -> impl Iterator<Item = (usize, &Dependency)> {
        self.dependencies
            .iter()
            .enumerate()
            .filter(move |(_, d)| d.child == node)
    }

    /// Attribute graph (parent -> child) over global attribute indices; see
    /// [`attribute_offsets`].
    pub fn attribute_graph(&self, schema: &RelationalSchema) -> Result<Dag> {
        let offsets = attribute_offsets(schema);
        let idx = |a: &AttributeNode| offsets[a.class] + a.attribute;
        Dag::from_edges(
            schema.attribute_count(),
            self.dependencies.iter().map(|d| (idx(&d.parent), idx(&d.child))),
        )
    }

    /// Whether the attribute graph (ignoring chains) is acyclic.
    pub fn is_acyclic(&self, schema: &RelationalSchema) -> bool {
        let offsets = attribute_offsets(schema);
        let idx = |a: &AttributeNode| offsets[a.class] + a.attribute;
        dag::topo_sort(
            schema.attribute_count(),
            self.dependencies.iter().map(|d| (idx(&d.parent), idx(&d.child))),
        )
        .is_ok()
    }

    /// Sorts dependencies by child, then parent class, parent attribute,
    /// chain length and chain path. CPD parent order follows this order.
    pub fn canonicalize(&mut self, schema: &RelationalSchema) {
        self.dependencies.sort_by_cached_key(|d| {
            (
                d.child,
                d.parent.class,
                d.parent.attribute,
                d.slot_chain.len(),
                d.slot_chain.path(schema),
            )
        });
    }

    /// Copy without the dependency at `index`.
    pub fn without(&self, index: usize) -> Self {
        let mut out = self.clone();
        out.dependencies.remove(index);
        out
    }
}

/// Offset of each class's first attribute in the global attribute numbering.
pub fn attribute_offsets(schema: &RelationalSchema) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(schema.class_count());
    let mut acc = 0;
    for c in &schema.classes {
        offsets.push(acc);
        acc += c.attributes.len();
    }
    offsets
}

/// Builds the attribute-level DAG: one random sub-DAG per class, then
/// inter-class edges until the class components are connected. All
/// dependencies carry the empty chain; see [`assign_slot_chains`].
pub fn generate_dependency_structure<R: Rng + ?Sized>(
    schema: &RelationalSchema,
    policy: &GenerationPolicy,
    rng: &mut R,
) -> Result<DependencyStructure> {
    let n_classes = schema.class_count();
    let offsets = attribute_offsets(schema);
    let total = schema.attribute_count();
    let node_of = |g: usize| {
        let class = offsets.partition_point(|&o| o <= g) - 1;
        AttributeNode::new(class, g - offsets[class])
    };

    let mut intra = Vec::new();
    for (c, class) in schema.classes.iter().enumerate() {
        let sub = dag::generate_random_dag(class.attributes.len(), &policy.attribute_dag_policy, rng)?;
        for (u, v) in sub.edges() {
            intra.push((offsets[c] + u, offsets[c] + v));
        }
    }

    let mut edges = intra.clone();
    if n_classes > 1 {
        let max_parents = policy.attribute_dag_policy.max_parents;
        let mut retries = 0;
        loop {
            let mut adj = vec![vec![false; total]; total];
            let mut indeg = vec![0usize; total];
            for &(u, v) in &intra {
                adj[u][v] = true;
                indeg[v] += 1;
            }
            let mut inter = Vec::new();
            let target = 1 + poisson(rng, (n_classes - 1) as f64);
            for _ in 0..target {
                for _ in 0..policy.inter_class_attempts {
                    let child = rng.random_range(0..total);
                    let child_class = node_of(child).class;
                    let others = total - schema.classes[child_class].attributes.len();
                    let mut pick = rng.random_range(0..others);
                    // skip over the child's own class
                    if pick >= offsets[child_class] {
                        pick += schema.classes[child_class].attributes.len();
                    }
                    let parent = pick;
                    if adj[parent][child]
                        || max_parents.is_some_and(|m| indeg[child] >= m)
                        || reaches(&adj, child, parent)
                    {
                        continue;
                    }
                    adj[parent][child] = true;
                    indeg[child] += 1;
                    inter.push((parent, child));
                    break;
                }
            }
            if classes_connected(n_classes, inter.iter().map(|&(p, c)| (node_of(p).class, node_of(c).class))) {
                edges.extend(inter);
                break;
            }
            retries += 1;
            if retries >= INTER_CLASS_RETRIES {
                return Err(Error::RejectionBudget {
                    nodes: n_classes,
                    rejections: retries,
                });
            }
        }
    }

    let mut structure = DependencyStructure {
        dependencies: edges
            .into_iter()
            .map(|(p, c)| Dependency::intra(node_of(c), node_of(p)))
            .collect(),
        k_max: 0,
    };
    structure.canonicalize(schema);
    Ok(structure)
}

fn reaches(adj: &[Vec<bool>], from: usize, to: usize) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for (w, &on) in adj[u].iter().enumerate() {
            if on && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    false
}

fn classes_connected(n: usize, pairs: impl Iterator<Item = (usize, usize)>) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    let mut components = n;
    for (a, b) in pairs {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra] = rb;
            components -= 1;
        }
    }
    components == 1
}

/// Annotates every inter-class dependency with a slot chain drawn from the
/// candidates of length up to `max(k_max, N - 1)`. Multi-valued chains get
/// an aggregator drawn uniformly from `aggregators`. Intra-class dependencies
/// keep the empty chain. A dependency with no candidate is dropped.
pub fn assign_slot_chains<R: Rng + ?Sized>(
    schema: &RelationalSchema,
    structure: &DependencyStructure,
    k_max: usize,
    aggregators: &[Aggregator],
    rng: &mut R,
) -> Result<DependencyStructure> {
    if aggregators.is_empty() {
        return Err(Error::invalid("aggregator list is empty"));
    }
    let effective = k_max.max(schema.class_count().saturating_sub(1));
    let mut candidates: HashMap<(usize, usize), Vec<SlotChain>> = HashMap::new();
    let mut out = Vec::with_capacity(structure.dependencies.len());

    for dep in &structure.dependencies {
        let (from, to) = (dep.child.class, dep.parent.class);
        if from == to {
            out.push(Dependency::intra(dep.child, dep.parent));
            continue;
        }
        let chains = candidates
            .entry((from, to))
            .or_insert_with(|| enumerate_slot_chains(schema, from, to, effective));
        if chains.is_empty() {
            warn!(
                "dropping dependency {} -> {}: no slot chain within length {effective}",
                dep.parent.qualified(schema),
                dep.child.qualified(schema)
            );
            continue;
        }
        let pick = draw_slot_chain(chains, rng)?;
        let chain = chains[pick].clone();
        let aggregator = if chain.is_multi_valued() {
            Some(aggregators[rng.random_range(0..aggregators.len())])
        } else {
            None
        };
        out.push(Dependency {
            child: dep.child,
            parent: dep.parent,
            slot_chain: chain,
            aggregator,
        });
    }

    let mut assigned = DependencyStructure {
        dependencies: out,
        k_max: effective,
    };
    assigned.canonicalize(schema);
    Ok(assigned)
}
