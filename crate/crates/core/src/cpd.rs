//! Conditional probability tables and the assembled PRM.

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::deps::{attribute_offsets, AttributeNode, DependencyStructure};
use crate::schema::RelationalSchema;
use crate::{Error, Result};

/// Tolerance on row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// `P(child | parents)`. Rows are indexed by the parents' joint state in
/// mixed radix, first parent most significant.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpd {
    pub child: AttributeNode,
    /// Indices into [`DependencyStructure::dependencies`], in canonical order.
    pub parents: Vec<usize>,
    /// Domain size of each parent, aligned with `parents`.
    pub parent_cards: Vec<usize>,
    pub rows: Vec<Vec<f64>>,
}

impl Cpd {
    pub fn row_count(&self) -> usize {
        self.parent_cards.iter().product()
    }

    /// Row index of a parent configuration.
    pub fn row_index(&self, states: &[usize]) -> usize {
        debug_assert_eq!(states.len(), self.parent_cards.len());
        states
            .iter()
            .zip(&self.parent_cards)
            .fold(0, |acc, (&s, &card)| acc * card + s)
    }

    pub fn row(&self, states: &[usize]) -> &[f64] {
        &self.rows[self.row_index(states)]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prm {
    pub schema: RelationalSchema,
    pub structure: DependencyStructure,
    /// One table per descriptive attribute, ordered by (class, attribute).
    pub cpds: Vec<Cpd>,
    pub k_max: usize,
}

impl Prm {
    pub fn cpd(&self, node: AttributeNode) -> &Cpd {
        &self.cpds[attribute_offsets(&self.schema)[node.class] + node.attribute]
    }

    /// Checks table count, parent alignment, coverage and normalization.
    pub fn check(&self) -> Result<()> {
        let expected = self.schema.attribute_count();
        if self.cpds.len() != expected {
            return Err(Error::Invariant(format!("{} tables for {expected} attributes", self.cpds.len())));
        }
        let offsets = attribute_offsets(&self.schema);
        for (c, class) in self.schema.classes.iter().enumerate() {
            for a in 0..class.attributes.len() {
                let node = AttributeNode::new(c, a);
                let cpd = &self.cpds[offsets[c] + a];
                let name = node.qualified(&self.schema);
                if cpd.child != node {
                    return Err(Error::Invariant(format!("table for {name} is out of order")));
                }
                let expected: Vec<usize> = self.structure.parents_of(node).map(|(i, _)| i).collect();
                if cpd.parents != expected {
                    return Err(Error::Invariant(format!("{name}: parents do not match the structure")));
                }
                let cards: Vec<usize> = cpd
                    .parents
                    .iter()
                    .map(|&i| {
                        let p = self.structure.dependencies[i].parent;
                        self.schema.attribute(p.class, p.attribute).cardinality()
                    })
                    .collect();
                if cpd.parent_cards != cards {
                    return Err(Error::Invariant(format!("{name}: parent domains do not match")));
                }
                if cpd.rows.len() != cpd.row_count() {
                    return Err(Error::Invariant(format!(
                        "{name}: {} rows, expected {}",
                        cpd.rows.len(),
                        cpd.row_count()
                    )));
                }
                let k = class.attributes[a].cardinality();
                for row in &cpd.rows {
                    if row.len() != k {
                        return Err(Error::Invariant(format!("{name}: row of width {} for {k} states", row.len())));
                    }
                    check_row(row).map_err(|m| Error::Invariant(format!("{name}: {m}")))?;
                }
            }
        }
        Ok(())
    }
}

pub(crate) fn check_row(row: &[f64]) -> std::result::Result<(), String> {
    if row.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
        return Err("row has a negative or non-finite entry".into());
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
        return Err(format!("row sums to {sum}"));
    }
    Ok(())
}

/// One row drawn from a symmetric Dirichlet via normalized Gamma draws.
pub fn dirichlet_row<R: Rng + ?Sized>(k: usize, gamma: &Gamma<f64>, rng: &mut R) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = (0..k).map(|_| gamma.sample(rng)).collect();
        let total: f64 = draws.iter().sum();
        // very small concentrations can underflow every component
        if total > 0.0 && total.is_finite() {
            return draws.into_iter().map(|x| x / total).collect();
        }
    }
}

/// Draws every CPD row from a symmetric Dirichlet(`dirichlet_alpha`).
pub fn generate_cpds<R: Rng + ?Sized>(
    schema: &RelationalSchema,
    structure: &DependencyStructure,
    dirichlet_alpha: f64,
    rng: &mut R,
) -> Result<Prm> {
    if !(dirichlet_alpha > 0.0 && dirichlet_alpha.is_finite()) {
        return Err(Error::invalid(format!("Dirichlet alpha must be > 0, got {dirichlet_alpha}")));
    }
    let gamma = Gamma::new(dirichlet_alpha, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    let mut cpds = Vec::with_capacity(schema.attribute_count());
    for (c, class) in schema.classes.iter().enumerate() {
        for (a, attr) in class.attributes.iter().enumerate() {
            let node = AttributeNode::new(c, a);
            let parents: Vec<usize> = structure.parents_of(node).map(|(i, _)| i).collect();
            let parent_cards: Vec<usize> = parents
                .iter()
                .map(|&i| {
                    let p = structure.dependencies[i].parent;
                    schema.attribute(p.class, p.attribute).cardinality()
                })
                .collect();
            let row_count: usize = parent_cards.iter().product();
            let rows = (0..row_count)
                .map(|_| dirichlet_row(attr.cardinality(), &gamma, rng))
                .collect();
            cpds.push(Cpd {
                child: node,
                parents,
                parent_cards,
                rows,
            });
        }
    }
    Ok(Prm {
        schema: schema.clone(),
        structure: structure.clone(),
        cpds,
        k_max: structure.k_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deps::Dependency;
    use crate::rng::seeded;
    use crate::schema::{AttributeDef, ClassDef};

    fn one_class(cards: &[usize]) -> RelationalSchema {
        RelationalSchema::new(
            vec![ClassDef {
                name: "c".into(),
                primary_key: "c_id".into(),
                attributes: cards
                    .iter()
                    .enumerate()
                    .map(|(i, &k)| AttributeDef::with_cardinality(format!("a{i}"), k))
                    .collect(),
                reference_slots: vec![],
            }],
            vec![],
        )
        .unwrap()
    }

    #[test]
    fn parentless_binary_row() {
        let schema = one_class(&[2]);
        let prm = generate_cpds(&schema, &DependencyStructure::default(), 1.0, &mut seeded(0)).unwrap();
        assert_eq!(prm.cpds[0].rows.len(), 1);
        assert_eq!(prm.cpds[0].rows[0].len(), 2);
        assert!((prm.cpds[0].rows[0].iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prm.check().unwrap();
    }

    #[test]
    fn three_state_parent_gives_three_rows() {
        let schema = one_class(&[3, 2]);
        let structure = DependencyStructure {
            dependencies: vec![Dependency::intra(AttributeNode::new(0, 1), AttributeNode::new(0, 0))],
            k_max: 0,
        };
        let prm = generate_cpds(&schema, &structure, 1.0, &mut seeded(3)).unwrap();
        assert_eq!(prm.cpd(AttributeNode::new(0, 1)).rows.len(), 3);
        assert_eq!(prm.cpd(AttributeNode::new(0, 0)).rows.len(), 1);
        prm.check().unwrap();
    }

    #[test]
    fn non_positive_alpha_rejected() {
        let schema = one_class(&[2]);
        for alpha in [0.0, -1.0, f64::NAN] {
            assert!(generate_cpds(&schema, &DependencyStructure::default(), alpha, &mut seeded(0)).is_err());
        }
    }

    #[test]
    fn tiny_alpha_still_normalizes() {
        let gamma = Gamma::new(1e-4, 1.0).unwrap();
        let mut rng = seeded(8);
        for _ in 0..200 {
            let row = dirichlet_row(4, &gamma, &mut rng);
            check_row(&row).unwrap();
        }
    }

    #[test]
    fn row_index_is_mixed_radix() {
        let cpd = Cpd {
            child: AttributeNode::new(0, 0),
            parents: vec![0, 1],
            parent_cards: vec![3, 2],
            rows: vec![vec![1.0]; 6],
        };
        assert_eq!(cpd.row_index(&[0, 0]), 0);
        assert_eq!(cpd.row_index(&[0, 1]), 1);
        assert_eq!(cpd.row_index(&[2, 1]), 5);
    }
}
