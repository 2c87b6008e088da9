use colorsim::audit::{audit_state, exact_step_expectations, AuditOptions, Scope};
use colorsim::dynamics::{rng_from_seed, step_uniform};
use colorsim::state::monochromatic_components;
use colorsim::{ColoringState, Graph};
use num_bigint::BigInt;
use num_rational::BigRational;
use proptest::prelude::*;

/// A graph on `n ≤ 12` vertices with an arbitrary coloring from `1..=Δ+1`.
fn instance() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, Vec<u32>)> {
    (2usize..=12).prop_flat_map(|n| {
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
            .collect();
        let m = pairs.len();
        (
            Just(n),
            prop::sample::subsequence(pairs, 0..=m),
            prop::collection::vec(0u32..1000, n),
        )
    })
}

fn build(n: usize, edges: &[(usize, usize)]) -> Graph {
    Graph::from_edges(n, edges.iter().copied())
}

fn coloring(g: &Graph, raw: &[u32]) -> (u32, Vec<u32>) {
    let k = g.max_degree() as u32 + 1;
    (k, raw.iter().map(|c| c % k + 1).collect())
}

fn int(x: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn every_claim_holds((n, edges, raw) in instance()) {
        let g = build(n, &edges);
        let (k, colors) = coloring(&g, &raw);
        let s = ColoringState::init_fixed(&g, k, &colors).unwrap();
        let report = audit_state(&s, AuditOptions::default()).unwrap();
        let bad: Vec<_> = report.violations().collect();
        prop_assert!(bad.is_empty(), "{:?}", bad);
    }

    #[test]
    fn potential_is_sandwiched((n, edges, raw) in instance()) {
        let g = build(n, &edges);
        let (k, colors) = coloring(&g, &raw);
        let s = ColoringState::init_fixed(&g, k, &colors).unwrap();
        let m = int(s.mono_edge_count() as usize);
        let phi = s.potential();
        prop_assert!(m <= phi && phi <= &m * int(2));
    }

    #[test]
    fn whole_state_is_weighted_component_average((n, edges, raw) in instance()) {
        let g = build(n, &edges);
        let (k, colors) = coloring(&g, &raw);
        let s = ColoringState::init_fixed(&g, k, &colors).unwrap();
        prop_assume!(!s.is_proper());
        let whole = exact_step_expectations(&s, Scope::WholeState).unwrap();
        let view = monochromatic_components(&s);
        let total = int(view.total_vertices());
        let mut e_phi = int(0);
        let mut e_m = int(0);
        for comp in &view.components {
            let e = exact_step_expectations(&s, Scope::Component(comp)).unwrap();
            let w = int(comp.size()) / &total;
            e_phi += &w * e.e_phi;
            e_m += &w * e.e_m;
        }
        prop_assert_eq!(whole.e_phi, e_phi);
        prop_assert_eq!(whole.e_m, e_m);
    }

    #[test]
    fn relabeling_vertices_changes_nothing(
        (n, edges, raw) in instance(),
        shuffle_seed in any::<u64>(),
    ) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng_from_seed(shuffle_seed));
        let g = build(n, &edges);
        let h = build(n, &edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect::<Vec<_>>());
        let (k, colors) = coloring(&g, &raw);
        let mut moved = vec![0; n];
        for v in 0..n {
            moved[perm[v]] = colors[v];
        }
        let a = ColoringState::init_fixed(&g, k, &colors).unwrap();
        let b = ColoringState::init_fixed(&h, k, &moved).unwrap();
        prop_assert_eq!(a.potential(), b.potential());
        prop_assert_eq!(a.conflicted().len(), b.conflicted().len());
        prop_assert_eq!(a.isolated_edge_count(), b.isolated_edge_count());
        if !a.is_proper() {
            let ea = exact_step_expectations(&a, Scope::WholeState).unwrap();
            let eb = exact_step_expectations(&b, Scope::WholeState).unwrap();
            prop_assert_eq!(ea, eb);
        }
    }

    #[test]
    fn incremental_state_tracks_oracle(
        (n, edges, raw) in instance(),
        moves in prop::collection::vec((0usize..12, 0u32..1000), 1..60),
    ) {
        let g = build(n, &edges);
        let (k, colors) = coloring(&g, &raw);
        let mut s = ColoringState::init_fixed(&g, k, &colors).unwrap();
        for (v, c) in moves {
            s.recolor(v % n, c % k + 1);
            prop_assert_eq!(s.derived(), s.recompute_all());
        }
    }

    #[test]
    fn uniform_steps_never_leave_palette((n, edges, raw) in instance(), seed in any::<u64>()) {
        let g = build(n, &edges);
        let (k, colors) = coloring(&g, &raw);
        let mut s = ColoringState::init_fixed(&g, k, &colors).unwrap();
        let mut rng = rng_from_seed(seed);
        for _ in 0..200 {
            if step_uniform(&mut s, &mut rng).is_err() {
                break;
            }
            prop_assert!(s.colors().iter().all(|&c| (1..=k).contains(&c)));
        }
        prop_assert_eq!(s.derived(), s.recompute_all());
    }
}
