//! Fixtures and brute-force oracles shared by the integration tests. The
//! oracles deliberately avoid the library's indexes and helpers.

#![allow(dead_code)]

use std::collections::{BTreeSet, HashMap};

use prmgen_core::chain::{Slot, SlotChain};
use prmgen_core::{
    AttributeDef, ClassDef, Dataset, ObjectRef, ReferenceSlot, RelationalSchema, RelationalSkeleton, SlotId,
};
use prmgen_core::{Link, Prm};

pub const MOVIE: usize = 0;
pub const USER: usize = 1;
pub const VOTE: usize = 2;
pub const VOTE_MOVIE: SlotId = SlotId(0);
pub const VOTE_USER: SlotId = SlotId(1);

fn states(labels: &[&str]) -> Vec<String> {
    labels.iter().map(|s| s.to_string()).collect()
}

/// Movie(genre), User(age), Vote(rating); Vote references Movie and User.
pub fn movie_schema() -> RelationalSchema {
    let class = |name: &str, attr: &str, labels: &[&str]| ClassDef {
        name: name.into(),
        primary_key: format!("{}_id", name.to_lowercase()),
        attributes: vec![AttributeDef {
            name: attr.into(),
            states: states(labels),
        }],
        reference_slots: vec![],
    };
    RelationalSchema::new(
        vec![
            class("Movie", "genre", &["drama", "comedy", "action"]),
            class("User", "age", &["young", "old"]),
            class("Vote", "rating", &["low", "mid", "high"]),
        ],
        vec![
            ReferenceSlot {
                name: "Movie".into(),
                owner: VOTE,
                target: MOVIE,
            },
            ReferenceSlot {
                name: "User".into(),
                owner: VOTE,
                target: USER,
            },
        ],
    )
    .unwrap()
}

/// Three users, five movies, nine votes. User U1 (id 0) voted for movies
/// m1 and m2 (ids 0 and 1).
pub fn movie_skeleton(schema: &RelationalSchema) -> RelationalSkeleton {
    let votes = [(0, 0), (0, 1), (1, 1), (1, 2), (1, 3), (2, 2), (2, 4), (2, 0), (1, 4)];
    let mut links = Vec::new();
    for (v, &(user, movie)) in votes.iter().enumerate() {
        links.push(Link {
            slot: VOTE_MOVIE,
            source: ObjectRef::new(VOTE, v),
            target: ObjectRef::new(MOVIE, movie),
        });
        links.push(Link {
            slot: VOTE_USER,
            source: ObjectRef::new(VOTE, v),
            target: ObjectRef::new(USER, user),
        });
    }
    RelationalSkeleton::new(schema, vec![5, 3, 9], links)
}

/// Every labeled DAG on `n` nodes, by filtering all digraphs without
/// self-loops. Each DAG is its sorted edge list.
pub fn all_dags(n: usize) -> Vec<Vec<(usize, usize)>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
        .collect();
    (0u64..1 << pairs.len())
        .map(|mask| {
            pairs
                .iter()
                .enumerate()
                .filter(|(i, _)| mask >> i & 1 == 1)
                .map(|(_, &e)| e)
                .collect::<Vec<_>>()
        })
        .filter(|edges| is_acyclic(n, edges))
        .collect()
}

/// Cycle check by three-colour depth-first search.
pub fn is_acyclic(n: usize, edges: &[(usize, usize)]) -> bool {
    let mut succ = vec![Vec::new(); n];
    for &(a, b) in edges {
        succ[a].push(b);
    }
    // 0 = unvisited, 1 = on the stack, 2 = finished
    let mut colour = vec![0u8; n];
    for root in 0..n {
        if colour[root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        colour[root] = 1;
        while let Some(&mut (u, ref mut next)) = stack.last_mut() {
            if let Some(&v) = succ[u].get(*next) {
                *next += 1;
                match colour[v] {
                    0 => {
                        colour[v] = 1;
                        stack.push((v, 0));
                    }
                    1 => return false,
                    _ => {}
                }
            } else {
                colour[u] = 2;
                stack.pop();
            }
        }
    }
    true
}

/// Weak connectivity by flood fill over the undirected edge list.
pub fn is_connected(n: usize, edges: &[(usize, usize)]) -> bool {
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0];
    seen[0] = true;
    while let Some(u) = stack.pop() {
        for &(a, b) in edges {
            for (x, y) in [(a, b), (b, a)] {
                if x == u && !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
    }
    seen.iter().all(|&s| s)
}

/// Object set reached by scanning the raw link list for each slot.
pub fn traverse(sk: &RelationalSkeleton, start: ObjectRef, chain: &SlotChain) -> BTreeSet<ObjectRef> {
    let mut current = BTreeSet::from([start]);
    for Slot { slot, inverted } in &chain.slots {
        let mut next = BTreeSet::new();
        for l in sk.links.iter().filter(|l| l.slot == *slot) {
            if *inverted && current.contains(&l.target) {
                next.insert(l.source);
            }
            if !*inverted && current.contains(&l.source) {
                next.insert(l.target);
            }
        }
        current = next;
    }
    current
}

/// A composable walk of exactly `len` slots from `from`, or `None` when the
/// walk gets stuck. Every slot is used forward or inverted with equal odds.
pub fn random_walk(
    schema: &RelationalSchema,
    from: usize,
    len: usize,
    mut coin: impl FnMut(usize) -> usize,
) -> Option<SlotChain> {
    let mut class = from;
    let mut slots = Vec::new();
    for _ in 0..len {
        let moves: Vec<Slot> = schema
            .slots
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                let mut m = Vec::new();
                if s.owner == class {
                    m.push(Slot::forward(SlotId(i)));
                }
                if s.target == class {
                    m.push(Slot::inverse(SlotId(i)));
                }
                m
            })
            .collect();
        if moves.is_empty() {
            return None;
        }
        let s = moves[coin(moves.len())];
        class = if s.inverted {
            schema.slots[s.slot.0].owner
        } else {
            schema.slots[s.slot.0].target
        };
        slots.push(s);
    }
    Some(SlotChain::new(from, slots))
}

/// Counts `C[v, u]` per attribute with a double loop over rows and
/// dependencies, resolving every chain through [`traverse`].
pub fn naive_counts(prm: &Prm, sk: &RelationalSkeleton, data: &Dataset) -> Vec<Vec<u64>> {
    let schema = &prm.schema;
    let mut out = Vec::new();
    for (c, class) in schema.classes.iter().enumerate() {
        for (a, attr) in class.attributes.iter().enumerate() {
            let deps: Vec<_> = prm
                .structure
                .dependencies
                .iter()
                .filter(|d| d.child.class == c && d.child.attribute == a)
                .collect();
            let cards: Vec<usize> = deps
                .iter()
                .map(|d| schema.classes[d.parent.class].attributes[d.parent.attribute].states.len())
                .collect();
            let k = attr.states.len();
            let mut table = vec![0u64; cards.iter().product::<usize>() * k];
            for row in 0..data.counts[c] {
                let mut u = 0;
                for (d, &card) in deps.iter().zip(&cards) {
                    let reached = traverse(sk, ObjectRef::new(c, row), &d.slot_chain);
                    let column = &data.values[d.parent.class][d.parent.attribute];
                    let values: Vec<usize> = reached.iter().map(|o| column[o.id]).collect();
                    let state = if d.aggregator.is_some() {
                        mode(&values, card)
                    } else {
                        assert_eq!(values.len(), 1, "single-valued chain reached {} objects", values.len());
                        values[0]
                    };
                    u = u * card + state;
                }
                table[u * k + data.values[c][a][row]] += 1;
            }
            out.push(table);
        }
    }
    out
}

/// Most frequent value, lowest on ties, 0 when empty.
pub fn mode(values: &[usize], card: usize) -> usize {
    let mut freq: HashMap<usize, usize> = HashMap::new();
    for &v in values {
        *freq.entry(v).or_default() += 1;
    }
    (0..card).max_by_key(|v| (freq.get(v).copied().unwrap_or(0), std::cmp::Reverse(*v))).unwrap_or(0)
}

/// Pearson statistic of `observed` against equal expected counts.
pub fn chi_square_uniform(observed: &[u64]) -> f64 {
    let total: u64 = observed.iter().sum();
    let expected = total as f64 / observed.len() as f64;
    observed.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum()
}
