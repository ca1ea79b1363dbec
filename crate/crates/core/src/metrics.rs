//! Structure scoring and sampling diagnostics.
//!
//! The score is the relational Bayesian Dirichlet score: for every attribute
//! and every parent configuration `u`, the log Dirichlet-multinomial marginal
//! likelihood of the child counts, minus a slot-chain length penalty.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};

use statrs::function::gamma::ln_gamma;

use crate::cpd::Prm;
use crate::deps::{AttributeNode, DependencyStructure};
use crate::ground::{resolve_ids, Dataset};
use crate::schema::RelationalSchema;
use crate::skeleton::RelationalSkeleton;
use crate::{Error, Result};

/// Counts `C[v, u]` for one attribute.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyCounts {
    pub child: AttributeNode,
    /// Dependency indices of the parents, in structure order.
    pub parents: Vec<usize>,
    pub parent_cards: Vec<usize>,
    pub states: usize,
    /// Row-major: `counts[u * states + v]`.
    pub counts: Vec<u64>,
}

impl FamilyCounts {
    pub fn configurations(&self) -> usize {
        self.parent_cards.iter().product()
    }

    pub fn row(&self, u: usize) -> &[u64] {
        &self.counts[u * self.states..(u + 1) * self.states]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyCounts {
    /// One family per attribute, ordered by (class, attribute).
    pub families: Vec<FamilyCounts>,
}

/// Pseudo-counts `alpha[v, u]`, laid out like [`FamilyCounts::counts`].
#[derive(Debug, Clone, PartialEq)]
pub struct DirichletPrior {
    pub families: Vec<Vec<f64>>,
}

impl DirichletPrior {
    pub fn symmetric(counts: &ContingencyCounts, alpha: f64) -> Self {
        DirichletPrior {
            families: counts.families.iter().map(|f| vec![alpha; f.counts.len()]).collect(),
        }
    }
}

/// How the chain-length penalty is summed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Penalty {
    /// Once per parent configuration, as the score is written.
    #[default]
    PerConfiguration,
    /// Once per parent chain.
    PerParent,
}

/// Tallies, for every object, the child state against the parent
/// configuration seen through each dependency's slot chain.
pub fn count_contingencies(
    schema: &RelationalSchema,
    structure: &DependencyStructure,
    sk: &RelationalSkeleton,
    dataset: &Dataset,
) -> Result<ContingencyCounts> {
    if dataset.counts.len() != schema.class_count() || dataset.values.len() != schema.class_count() {
        return Err(Error::SchemaMismatch("dataset classes do not match the schema".into()));
    }
    if sk.counts != dataset.counts {
        return Err(Error::SchemaMismatch("skeleton and dataset row counts differ".into()));
    }
    for d in &structure.dependencies {
        for node in [d.child, d.parent] {
            if node.class >= schema.class_count() || node.attribute >= schema.classes[node.class].attributes.len() {
                return Err(Error::SchemaMismatch(format!("dependency names unknown attribute {node:?}")));
            }
        }
        if d.slot_chain.source != d.child.class || d.slot_chain.end_class(schema) != Some(d.parent.class) {
            return Err(Error::SchemaMismatch(format!(
                "chain {} does not lead from {} to {}",
                d.slot_chain.display(schema),
                d.child.qualified(schema),
                d.parent.qualified(schema)
            )));
        }
    }

    let mut families = Vec::with_capacity(schema.attribute_count());
    for (c, class) in schema.classes.iter().enumerate() {
        if dataset.values[c].len() != class.attributes.len() {
            return Err(Error::SchemaMismatch(format!("{}: attribute columns differ", class.name)));
        }
        for (a, attr) in class.attributes.iter().enumerate() {
            let child = AttributeNode::new(c, a);
            let parents: Vec<usize> = structure.parents_of(child).map(|(i, _)| i).collect();
            let parent_cards: Vec<usize> = parents
                .iter()
                .map(|&i| {
                    let p = structure.dependencies[i].parent;
                    schema.attribute(p.class, p.attribute).cardinality()
                })
                .collect();
            let states = attr.cardinality();
            let configs: usize = parent_cards.iter().product();
            let mut counts = vec![0u64; configs * states];
            let mut pool = Vec::new();
            for id in 0..dataset.counts[c] {
                let mut u = 0;
                for (k, &i) in parents.iter().enumerate() {
                    let dep = &structure.dependencies[i];
                    let reached = resolve_ids(sk, id, &dep.slot_chain);
                    let column = &dataset.values[dep.parent.class][dep.parent.attribute];
                    let s = match dep.aggregator {
                        Some(agg) => {
                            pool.clear();
                            pool.extend(reached.iter().map(|&o| column[o]));
                            agg.apply(&pool, parent_cards[k])
                        }
                        None => match reached.as_slice() {
                            [o] => column[*o],
                            _ => {
                                return Err(Error::SchemaMismatch(format!(
                                    "single-valued chain from {}#{id} reached {} rows",
                                    class.name,
                                    reached.len()
                                )))
                            }
                        },
                    };
                    u = u * parent_cards[k] + s;
                }
                let v = dataset.values[c][a][id];
                counts[u * states + v] += 1;
            }
            families.push(FamilyCounts {
                child,
                parents,
                parent_cards,
                states,
                counts,
            });
        }
    }
    Ok(ContingencyCounts { families })
}

/// `ln DM(C, alpha)` for one parent configuration, in log-Gamma form.
pub fn log_dirichlet_multinomial(counts: &[u64], alpha: &[f64]) -> f64 {
    let alpha_sum: f64 = alpha.iter().sum();
    let count_sum: f64 = counts.iter().map(|&c| c as f64).sum();
    let mut out = ln_gamma(alpha_sum) - ln_gamma(alpha_sum + count_sum);
    for (&c, &a) in counts.iter().zip(alpha) {
        if c > 0 {
            out += ln_gamma(a + c as f64) - ln_gamma(a);
        }
    }
    out
}

/// Score contribution of one attribute family.
pub fn family_score(
    structure: &DependencyStructure,
    family: &FamilyCounts,
    prior: &[f64],
    penalty: Penalty,
) -> f64 {
    let s = family.states;
    let data: f64 = (0..family.configurations())
        .map(|u| log_dirichlet_multinomial(family.row(u), &prior[u * s..(u + 1) * s]))
        .sum();
    let lengths: usize = family
        .parents
        .iter()
        .map(|&i| structure.dependencies[i].slot_chain.len())
        .sum();
    let repeats = match penalty {
        Penalty::PerConfiguration => family.configurations(),
        Penalty::PerParent => 1,
    };
    data - (repeats * lengths) as f64
}

pub fn rbd_score(
    structure: &DependencyStructure,
    counts: &ContingencyCounts,
    prior: &DirichletPrior,
    penalty: Penalty,
) -> Result<f64> {
    if prior.families.len() != counts.families.len() {
        return Err(Error::invalid("prior and counts cover different attributes"));
    }
    let mut total = 0.0;
    for (family, alpha) in counts.families.iter().zip(&prior.families) {
        if alpha.len() != family.counts.len() {
            return Err(Error::invalid(format!("prior shape differs for {:?}", family.child)));
        }
        if alpha.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
            return Err(Error::invalid("Dirichlet pseudo-counts must be > 0"));
        }
        for &i in &family.parents {
            if i >= structure.dependencies.len() || structure.dependencies[i].child != family.child {
                return Err(Error::invalid("counts were computed for a different structure"));
            }
        }
        total += family_score(structure, family, alpha, penalty);
    }
    Ok(total)
}

/// Sampling diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    /// L1 distance between empirical marginal and CPD row, per parentless
    /// attribute.
    pub parentless_l1: Vec<(AttributeNode, f64)>,
    /// Indegree histogram (indegree -> objects) for each referenced class.
    pub indegree: Vec<(usize, BTreeMap<usize, usize>)>,
    pub empty_aggregates: usize,
}

impl Diagnostics {
    pub fn max_l1(&self) -> f64 {
        self.parentless_l1.iter().map(|x| x.1).fold(0.0, f64::max)
    }

    /// `key = value` lines.
    pub fn render(&self, schema: &RelationalSchema) -> String {
        let mut out = String::new();
        for (node, l1) in &self.parentless_l1 {
            let _ = writeln!(out, "marginal_l1.{} = {l1:.6}", node.qualified(schema));
        }
        let _ = writeln!(out, "marginal_l1.max = {:.6}", self.max_l1());
        for (class, hist) in &self.indegree {
            let name = &schema.classes[*class].name;
            let max = hist.keys().next_back().copied().unwrap_or(0);
            let _ = writeln!(out, "indegree.{name}.max = {max}");
            let text = hist.iter().map(|(d, n)| format!("{d}:{n}")).collect::<Vec<_>>().join(" ");
            let _ = writeln!(out, "indegree.{name}.histogram = {text}");
        }
        let _ = writeln!(out, "empty_aggregates = {}", self.empty_aggregates);
        out
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} parentless attributes, max L1 {:.4}, {} empty aggregates",
            self.parentless_l1.len(),
            self.max_l1(),
            self.empty_aggregates
        )
    }
}

pub fn marginal_report(prm: &Prm, sk: &RelationalSkeleton, dataset: &Dataset) -> Diagnostics {
    let schema = &prm.schema;
    let mut parentless_l1 = Vec::new();
    for cpd in &prm.cpds {
        if !cpd.parents.is_empty() {
            continue;
        }
        let column = &dataset.values[cpd.child.class][cpd.child.attribute];
        let row = &cpd.rows[0];
        let mut freq = vec![0usize; row.len()];
        for &v in column {
            freq[v] += 1;
        }
        let n = column.len().max(1) as f64;
        let l1 = if column.is_empty() {
            0.0
        } else {
            freq.iter().zip(row).map(|(&c, &p)| (c as f64 / n - p).abs()).sum()
        };
        parentless_l1.push((cpd.child, l1));
    }
    let indegree = (0..schema.class_count())
        .filter(|&c| schema.incoming_slots(c).next().is_some())
        .map(|c| {
            let mut hist = BTreeMap::new();
            for d in sk.indegrees(schema, c) {
                *hist.entry(d).or_insert(0) += 1;
            }
            (c, hist)
        })
        .collect();
    Diagnostics {
        parentless_l1,
        indegree,
        empty_aggregates: dataset.empty_aggregates,
    }
}
