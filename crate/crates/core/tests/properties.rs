mod common;

use common::*;
use prmgen_core::chain::{simplify_slot_chain, Slot, SlotChain};
use prmgen_core::dag::{generate_random_dag, topological_order, DagPolicy};
use prmgen_core::deps::attribute_offsets;
use prmgen_core::ground::ground;
use prmgen_core::io::{parse_prm, serialize_prm};
use prmgen_core::pipeline::{generate, generate_prm, RunConfig};
use prmgen_core::rng::seeded;
use prmgen_core::schema::{foreign_key_name, generate_schema, validate_schema};
use prmgen_core::skeleton::{generate_skeleton, validate_skeleton};
use prmgen_core::{AttributeNode, CrpConfig, GenerationPolicy, ObjectRef, SlotId};
use proptest::prelude::*;
use rand::Rng;

fn config() -> impl Strategy<Value = RunConfig> {
    (1usize..=6, 1usize..=4, 0.2f64..20.0, 10usize..400, any::<u64>(), 0.1f64..5.0).prop_map(
        |(classes, k_max, alpha, objects, seed, dirichlet)| RunConfig {
            classes,
            k_max,
            alpha,
            objects,
            seed,
            dirichlet,
            ..RunConfig::default()
        },
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schemas_are_connected_dags(n in 1usize..=7, seed: u64) {
        let schema = generate_schema(n, &GenerationPolicy::default(), &mut seeded(seed)).unwrap();
        let edges: Vec<_> = schema.slots.iter().map(|s| (s.owner, s.target)).collect();
        prop_assert!(is_acyclic(n, &edges));
        prop_assert!(is_connected(n, &edges));
        prop_assert!(validate_schema(&schema).is_empty());
        for s in &schema.slots {
            prop_assert_eq!(&s.name, &foreign_key_name(s.owner, s.target));
        }
        for c in &schema.classes {
            prop_assert!(!c.attributes.is_empty());
            prop_assert!(c.attributes.iter().all(|a| a.cardinality() >= 2));
        }
    }

    #[test]
    fn random_dags_sort_topologically(n in 1usize..=8, cap in 0usize..=3, seed: u64) {
        let policy = DagPolicy { max_parents: Some(cap), ..DagPolicy::default() };
        let g = generate_random_dag(n, &policy, &mut seeded(seed)).unwrap();
        let edges: Vec<_> = g.edges().collect();
        prop_assert!(is_acyclic(n, &edges));
        let order = topological_order(&g).unwrap();
        let mut position = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            position[v] = i;
        }
        prop_assert!(edges.iter().all(|&(u, v)| position[u] < position[v]));
        prop_assert!((0..n).all(|v| g.parents(v).count() <= cap));
    }

    #[test]
    fn dependencies_are_sound(cfg in config()) {
        let prm = generate_prm(&cfg).unwrap();
        let schema = &prm.schema;
        let offsets = attribute_offsets(schema);
        let edges: Vec<_> = prm.structure.dependencies.iter()
            .map(|d| (offsets[d.parent.class] + d.parent.attribute, offsets[d.child.class] + d.child.attribute))
            .collect();
        prop_assert!(is_acyclic(schema.attribute_count(), &edges));
        let limit = cfg.k_max.max(schema.class_count() - 1);
        for d in &prm.structure.dependencies {
            prop_assert_eq!(d.slot_chain.source, d.child.class);
            prop_assert_eq!(d.slot_chain.end_class(schema), Some(d.parent.class));
            prop_assert!(d.slot_chain.len() <= limit);
            prop_assert_eq!(d.aggregator.is_some(), d.slot_chain.is_multi_valued());
            prop_assert_eq!(&simplify_slot_chain(&d.slot_chain), &d.slot_chain);
            prop_assert_eq!(d.slot_chain.is_empty(), d.child.class == d.parent.class);
        }
        for (c, class) in schema.classes.iter().enumerate() {
            for a in 0..class.attributes.len() {
                prop_assert!(prm.structure.parents_of(AttributeNode::new(c, a)).count() <= 3);
            }
        }
        prop_assert!(prm.check().is_ok());
    }

    #[test]
    fn skeletons_satisfy_the_k_partite_rules(cfg in config()) {
        let g = generate(&cfg).unwrap();
        let schema = &g.prm.schema;
        let n = schema.class_count();
        prop_assert!(validate_skeleton(&g.skeleton, schema).is_empty());
        let total = g.skeleton.total_objects();
        prop_assert!(total >= cfg.objects && total < cfg.objects + n);
        prop_assert_eq!(g.skeleton.passes.iter().sum::<usize>(), total);
        prop_assert!(g.skeleton.passes.iter().all(|&p| (1..=n).contains(&p)));
        for l in &g.skeleton.links {
            let slot = &schema.slots[l.slot.0];
            prop_assert_eq!((l.source.class, l.target.class), (slot.owner, slot.target));
        }
    }

    #[test]
    fn ground_network_is_acyclic_and_data_is_consistent(cfg in config()) {
        let g = generate(&cfg).unwrap();
        let gbn = ground(&g.prm, &g.skeleton).unwrap();
        let edges: Vec<_> = gbn.edges().collect();
        prop_assert!(is_acyclic(gbn.len(), &edges));
        let mut position = vec![0; gbn.len()];
        for (i, &v) in gbn.order.iter().enumerate() {
            position[v] = i;
        }
        prop_assert!(edges.iter().all(|&(u, v)| position[u] < position[v]));
        prop_assert!(g.dataset.check(&g.prm.schema).is_empty());
        prop_assert_eq!(g.dataset.skeleton(&g.prm.schema).links.len(), g.skeleton.links.len());
    }

    #[test]
    fn generation_is_reproducible(cfg in config()) {
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        prop_assert_eq!(a.prm, b.prm);
        prop_assert_eq!(a.skeleton, b.skeleton);
        prop_assert_eq!(a.dataset, b.dataset);
    }

    #[test]
    fn model_documents_round_trip(cfg in config()) {
        let prm = generate_prm(&cfg).unwrap();
        prop_assert_eq!(parse_prm(&serialize_prm(&prm)).unwrap(), prm);
    }

    #[test]
    fn simplification_is_idempotent_and_shortening(
        slots in proptest::collection::vec((0usize..4, any::<bool>()), 0..10)
    ) {
        let chain = SlotChain::new(
            0,
            slots.into_iter().map(|(s, inv)| Slot { slot: SlotId(s), inverted: inv }).collect(),
        );
        let once = simplify_slot_chain(&chain);
        prop_assert_eq!(&simplify_slot_chain(&once), &once);
        prop_assert!(once.len() <= chain.len());
        prop_assert_eq!((chain.len() - once.len()) % 2, 0);
        prop_assert_eq!(&chain.slots[..once.len()], &once.slots[..]);
    }

    /// Dropping a trailing (rho^-1, rho) pair can only add objects: the pair
    /// maps a set to its members that have a referrer through rho.
    #[test]
    fn simplified_chain_reaches_a_superset(n in 2usize..=5, seed: u64, len in 1usize..=5) {
        let schema = generate_schema(n, &GenerationPolicy::default(), &mut seeded(seed)).unwrap();
        let sk = generate_skeleton(&schema, &CrpConfig { alpha: 1.0, n_total: 60 }, &mut seeded(seed ^ 1)).unwrap();
        let mut rng = seeded(seed ^ 2);
        let from = rng.random_range(0..n);
        let chain = random_walk(&schema, from, len, |k| rng.random_range(0..k)).unwrap();
        let simple = simplify_slot_chain(&chain);
        for id in 0..sk.counts[from] {
            let start = ObjectRef::new(from, id);
            let full = traverse(&sk, start, &chain);
            prop_assert!(full.is_subset(&traverse(&sk, start, &simple)));
        }
    }
}
