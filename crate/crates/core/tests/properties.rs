//! Randomized invariants over generated spaces, traces, and settings.

use conex_core::sampler::evolve::{
    crossover_count, mutation_count, plan_generation, propose_child,
};
use conex_core::{
    compare, signature_from_trace, space_from_toml, space_to_toml, AcceptancePolicy,
    ConfigurationSpace, Direction, ParamKind, ParameterSpec, RuleSet, Value,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_candidates(kind: ParamKind) -> BoxedStrategy<Vec<Value>> {
    match kind {
        ParamKind::Boolean => Just(vec![Value::Bool(false), Value::Bool(true)]).boxed(),
        ParamKind::Integer => prop::collection::btree_set(-1000i64..1000, 2..6)
            .prop_map(|s| s.into_iter().map(Value::Int).collect())
            .boxed(),
        ParamKind::Float => prop::collection::btree_set(-400i32..400, 2..6)
            .prop_map(|s| s.into_iter().map(|i| Value::Float(f64::from(i) * 0.25)).collect())
            .boxed(),
        ParamKind::Categorical | ParamKind::String => {
            prop::collection::btree_set("[a-f]{1,4}", 2..6)
                .prop_map(|s| s.into_iter().map(Value::Str).collect())
                .boxed()
        }
    }
}

fn arb_param(index: usize) -> impl Strategy<Value = ParameterSpec> {
    prop_oneof![
        Just(ParamKind::Boolean),
        Just(ParamKind::Integer),
        Just(ParamKind::Float),
        Just(ParamKind::Categorical),
        Just(ParamKind::String),
    ]
    .prop_flat_map(move |kind| {
        (arb_candidates(kind), any::<prop::sample::Index>()).prop_map(
            move |(candidates, default_at)| {
                let default = candidates[default_at.index(candidates.len())].clone();
                ParameterSpec {
                    name: format!("p{index}"),
                    kind,
                    default,
                    candidates,
                    relevant: true,
                    unit: None,
                }
            },
        )
    })
}

fn arb_space() -> impl Strategy<Value = ConfigurationSpace> {
    (1usize..=5)
        .prop_flat_map(|n| {
            let params: Vec<_> = (0..n).map(arb_param).collect();
            params
        })
        .prop_map(|params| ConfigurationSpace::new("prop".into(), params).unwrap())
}

fn arb_trace() -> impl Strategy<Value = String> {
    let arg = prop_oneof![
        (0i64..100).prop_map(|n| n.to_string()),
        "[a-d]{1,3}".prop_map(|t| format!("\"{t}\"")),
        prop::bool::ANY.prop_map(|b| b.to_string()),
    ];
    let line = ("[a-e]{1,6}", prop::collection::vec(arg, 0..4))
        .prop_map(|(name, args)| format!("{name}({})", args.join(", ")));
    prop::collection::vec(line, 0..12).prop_map(|lines| lines.join("\n"))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn random_configurations_assign_every_relevant_parameter(
        space in arb_space(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let config = space.random_configuration(&mut rng);
        for p in space.relevant() {
            let v = config.get(&p.name).expect("relevant parameter assigned");
            prop_assert!(p.candidates.contains(v), "{}={v:?}", p.name);
        }
        prop_assert_eq!(config.values.len(), space.dimensionality());
    }

    #[test]
    fn space_toml_round_trips(space in arb_space()) {
        let text = space_to_toml(&space);
        let back = space_from_toml(&text).unwrap();
        prop_assert_eq!(space, back);
    }

    #[test]
    fn similarity_is_symmetric_and_bounded(a in arb_trace(), b in arb_trace()) {
        let sa = signature_from_trace(&a).unwrap();
        let sb = signature_from_trace(&b).unwrap();
        let ab = compare(&sa, &sb);
        let ba = compare(&sb, &sa);
        prop_assert_eq!(ab, ba);
        for part in [ab.sequence, ab.term_sets, ab.term_frequencies, ab.numeric_args, ab.overall] {
            prop_assert!((0.0..=1.0).contains(&part), "{ab:?}");
        }
        let self_sim = compare(&sa, &sa);
        prop_assert_eq!(self_sim.overall, 1.0);
    }

    #[test]
    fn full_crossover_without_mutation_reproduces_best(
        space in arb_space(),
        seed in any::<u64>(),
    ) {
        let rules = RuleSet::empty(&space);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let best = space.random_configuration(&mut rng);
        let parent = space.random_configuration(&mut rng);
        let plan = plan_generation(&mut rng, space.dimensionality(), 1.0, 0.0);
        prop_assert!(plan.mutation.is_empty());
        let child =
            propose_child(&space, &rules, &best, &parent, &plan, &mut rng, 20, 1000).unwrap();
        prop_assert_eq!(child, best);
    }

    // Populations are never empty: settings validation rejects size 0.
    #[test]
    fn subset_counts_follow_ceiling_arithmetic(
        n in 1usize..500,
        cf in 0.0f64..=1.0,
        mf in 0.0f64..=1.0,
    ) {
        prop_assert_eq!(crossover_count(n, cf), (cf * n as f64).ceil() as usize);
        let expect_m = if mf == 0.0 { 0 } else { ((mf * n as f64).ceil() as usize).max(1) };
        prop_assert_eq!(mutation_count(n, mf), expect_m);
    }

    #[test]
    fn acceptance_probability_is_monotone_in_delta(
        best in 1.0f64..1e6,
        worse in 1.0f64..1e6,
        better in 1.0f64..1e6,
    ) {
        let policy = AcceptancePolicy::new(50.0, Direction::Minimize);
        let (lo, hi) = if worse >= better { (better, worse) } else { (worse, better) };
        let d_hi = policy.delta(best, lo).unwrap();
        let d_lo = policy.delta(best, hi).unwrap();
        prop_assert!(d_hi >= d_lo);
        prop_assert!(
            policy.acceptance_probability(d_hi) >= policy.acceptance_probability(d_lo)
        );
    }

    #[test]
    fn acceptance_consumes_one_draw_regardless_of_outcome(seed in any::<u64>()) {
        let policy = AcceptancePolicy::new(50.0, Direction::Minimize);
        // An sure accept and a near-sure reject must leave the rng stream in
        // the same position, or resumed runs would diverge.
        let mut accepting = ChaCha8Rng::seed_from_u64(seed);
        let mut rejecting = ChaCha8Rng::seed_from_u64(seed);
        let a = policy.accept(&mut accepting, 100.0, 50.0).unwrap();
        prop_assert!(a.accepted);
        let _ = policy.accept(&mut rejecting, 100.0, 1e9).unwrap();
        use rand::RngCore;
        prop_assert_eq!(accepting.next_u64(), rejecting.next_u64());
    }
}
