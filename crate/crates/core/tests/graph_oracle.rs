//! Criterion checks against the separation oracle in `common`.

mod common;

use causal_bounds::graph::{check_backdoor, check_frontdoor, enumerate_paths, path_blocked};
use causal_bounds::Dag;
use common::{backdoor_oracle, build, frontdoor_oracle, names, refs, Plain};
use proptest::prelude::*;

/// A random DAG on 3..=6 vertices (edges follow a random order) with random
/// disjoint role sets.
fn case() -> impl Strategy<Value = (Plain, Vec<usize>, Vec<usize>, Vec<usize>)> {
    (3usize..=6)
        .prop_flat_map(|n| {
            let ids: Vec<usize> = (0..n).collect();
            (
                Just(n),
                Just(ids.clone()).prop_shuffle(),
                proptest::collection::vec(0u8..8, n * (n - 1) / 2),
                Just(ids).prop_shuffle(),
                (0u8..10, 0u8..10, 1usize..=3),
            )
        })
        .prop_map(|(n, order, coins, perm, (a, b, nz))| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if coins[k] < 3 {
                        edges.push((order[i], order[j]));
                    }
                    k += 1;
                }
            }
            let nx = 1 + usize::from(n >= 5 && a < 3);
            let ny = 1 + usize::from(n >= 6 && b < 3);
            let nz = nz.min(n - nx - ny);
            let xs = perm[..nx].to_vec();
            let ys = perm[nx..nx + ny].to_vec();
            let zs = perm[nx + ny..nx + ny + nz].to_vec();
            (Plain { n, edges }, xs, ys, zs)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn criteria_agree_with_separation_oracle((g, xs, ys, zs) in case()) {
        let dag = build(g.n, &g.edges);
        let nm = names(g.n);
        let report = check_backdoor(&dag, &refs(&nm, &xs), &refs(&nm, &ys), &refs(&nm, &zs)).unwrap();
        prop_assert_eq!(report.satisfied(), backdoor_oracle(&g, &xs, &ys, &zs), "backdoor {:?} {:?} {:?} {:?}", g.edges, xs, ys, zs);
        prop_assert_eq!(report.satisfied(), report.violations().is_empty());

        let report = check_frontdoor(&dag, &nm[xs[0]], &nm[ys[0]], &refs(&nm, &zs)).unwrap();
        prop_assert_eq!(report.satisfied(), frontdoor_oracle(&g, xs[0], ys[0], &zs), "frontdoor {:?} {} {} {:?}", g.edges, xs[0], ys[0], zs);
        prop_assert_eq!(report.satisfied(), report.violations().is_empty());
    }

    #[test]
    fn isolated_vertex_changes_nothing((g, xs, ys, zs) in case()) {
        let dag = build(g.n, &g.edges);
        let mut bigger = build(g.n, &g.edges);
        bigger.add_vertex("Isolated", vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let nm = names(g.n);
        let (x, y, z) = (refs(&nm, &xs), refs(&nm, &ys), refs(&nm, &zs));
        prop_assert_eq!(
            check_backdoor(&dag, &x, &y, &z).unwrap().satisfied(),
            check_backdoor(&bigger, &x, &y, &z).unwrap().satisfied()
        );
        prop_assert_eq!(
            check_frontdoor(&dag, x[0], y[0], &z).unwrap().satisfied(),
            check_frontdoor(&bigger, x[0], y[0], &z).unwrap().satisfied()
        );
    }

    #[test]
    fn paths_are_simple_and_unique((g, xs, ys, _zs) in case()) {
        let dag = build(g.n, &g.edges);
        let nm = names(g.n);
        let paths = enumerate_paths(&dag, &nm[xs[0]], &nm[ys[0]]).unwrap();
        let mut seen = std::collections::HashSet::new();
        for p in &paths {
            let mut vs = p.vertices.clone();
            prop_assert!(seen.insert(vs.clone()));
            vs.sort_unstable();
            vs.dedup();
            prop_assert_eq!(vs.len(), p.vertices.len());
            // Conditioning on every interior non-collider blocks the path.
            let noncolliders: Vec<usize> = (1..p.vertices.len() - 1)
                .filter(|&i| !p.is_collider_at(i))
                .map(|i| p.vertices[i])
                .collect();
            if !noncolliders.is_empty() {
                prop_assert!(path_blocked(p, &noncolliders, &dag));
            }
        }
    }
}

#[test]
fn named_graphs() {
    let fig1 = Dag::parse("Z: 0 1\nX: 0 1\nY: 0 1\nZ -> X\nZ -> Y\nX -> Y\n").unwrap();
    assert!(check_backdoor(&fig1, &["X"], &["Y"], &["Z"]).unwrap().satisfied());

    let napkin = Dag::parse(
        "W: 0 1\nZ: 0 1\nX: 0 1\nY: 0 1\nV: 0 1\nU: 0 1\nW -> Z -> X -> Y\nV -> W\nV -> X\nU -> W\nU -> Y\n",
    )
    .unwrap();
    let bd = check_backdoor(&napkin, &["X"], &["Y"], &["Z"]).unwrap();
    assert!(!bd.satisfied());
    assert!(bd.violations().iter().any(|v| v.contains("X←V→W←U→Y")));
    let fd = check_frontdoor(&napkin, "X", "Y", &["Z"]).unwrap();
    assert!(!fd.satisfied());
    assert!(fd.violations().iter().any(|v| v.contains("X→Y")));
}
