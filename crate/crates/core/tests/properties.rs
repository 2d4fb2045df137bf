use std::collections::{BTreeMap, HashMap};

use acrwl::corpus::{
    formula_phi1, formula_phi2, formula_phi_gadlin_fo, gadget_corpus, gadgetise, inf_c2_truncation,
    Truncation,
};
use acrwl::experiment::{digraph_from_mask, random_graph};
use acrwl::gnn::{check_psi, gadlin_classifier, lin_classifier, run_classifier};
use acrwl::logic::random::FormulaSampler;
use acrwl::logic::{
    classify, count, evaluate, evaluate_naive, exactly, metrics, normalize_c2, Assignment, Formula,
    NormalizeError,
};
use acrwl::wl::{run_wl, ColorId};
use acrwl::{Graph, NeighborhoodKind, Node};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn pair(u: Node, v: Node) -> Assignment {
    [("x".to_string(), u), ("y".to_string(), v)].into()
}

/// `u ~ v` iff same colour, as a sorted list of classes.
fn partition(colors: &[ColorId]) -> Vec<Vec<Node>> {
    let mut classes: BTreeMap<ColorId, Vec<Node>> = BTreeMap::new();
    for (v, &c) in colors.iter().enumerate() {
        classes.entry(c).or_default().push(v);
    }
    let mut out: Vec<Vec<Node>> = classes.into_values().collect();
    out.sort();
    out
}

fn refines(fine: &[ColorId], coarse: &[ColorId]) -> bool {
    let mut map = HashMap::new();
    fine.iter()
        .zip(coarse)
        .all(|(f, c)| *map.entry(*f).or_insert(*c) == *c)
}

/// Colour refinement with exact multisets over the four pair kinds.
fn classical_wl(g: &Graph) -> Vec<usize> {
    let mut colors: Vec<usize> = {
        let mut ids = HashMap::new();
        g.nodes()
            .map(|v| {
                let n = ids.len();
                *ids.entry(g.label(v).to_vec()).or_insert(n)
            })
            .collect()
    };
    loop {
        let sigs: Vec<_> = g
            .nodes()
            .map(|v| {
                let kinds = [
                    NeighborhoodKind::Both,
                    NeighborhoodKind::InOnly,
                    NeighborhoodKind::OutOnly,
                    NeighborhoodKind::NonNeighbor,
                ];
                let ms: Vec<Vec<usize>> = kinds
                    .iter()
                    .map(|&k| {
                        let mut m: Vec<usize> = g.neighbors(v, k).unwrap().iter().map(|&w| colors[w]).collect();
                        m.sort_unstable();
                        m
                    })
                    .collect();
                (colors[v], ms)
            })
            .collect();
        let mut ids = HashMap::new();
        let next: Vec<usize> = sigs
            .into_iter()
            .map(|s| {
                let n = ids.len();
                *ids.entry(s).or_insert(n)
            })
            .collect();
        if partition(&next) == partition(&colors) {
            return next;
        }
        colors = next;
    }
}

fn random_perm(r: &mut ChaCha8Rng, n: usize) -> Vec<Node> {
    let mut p: Vec<Node> = (0..n).collect();
    p.shuffle(r);
    p
}

#[test]
fn linear_order_checks_agree_exhaustively() {
    for n in 1..=5usize {
        for mask in 0..1u64 << (n * (n - 1)) {
            let g = digraph_from_mask(n, mask);
            assert_eq!(g.is_strict_linear_order(), g.is_strict_linear_order_alt(), "n={n} mask={mask}");
        }
    }
}

#[test]
fn normal_form_is_sound() {
    let mut r = rng(2);
    let sampler = FormulaSampler::binary(2, 2, 2);
    let graphs: Vec<Graph> = (0..30)
        .map(|_| {
            let n = r.gen_range(1..=5);
            random_graph(&mut r, n, 2, 0.4)
        })
        .collect();
    let mut checked = 0;
    while checked < 200 {
        let f = sampler.sample(&mut r);
        let nf = match normalize_c2(&f) {
            Ok(nf) => nf,
            Err(NormalizeError::TooManyDisjuncts(_)) => continue,
            Err(e) => panic!("{f}: {e}"),
        };
        let g2 = nf.to_formula();
        let (m1, m2) = (metrics(&f), metrics(&g2));
        assert!(m2.depth <= m1.depth && m2.counting_rank <= m1.counting_rank, "{f}");
        for g in &graphs {
            for u in g.nodes() {
                for v in g.nodes() {
                    assert_eq!(
                        evaluate(g, &f, &pair(u, v)).unwrap(),
                        evaluate(g, &g2, &pair(u, v)).unwrap(),
                        "{f} vs {g2} at ({u},{v}) on {g:?}"
                    );
                }
            }
        }
        checked += 1;
    }
}

#[test]
fn exact_counts_match_direct_count() {
    let mut r = rng(3);
    for _ in 0..40 {
        let n = r.gen_range(1..=7);
        let g = random_graph(&mut r, n, 1, 0.5);
        for k in 0..=5u32 {
            let f = exactly(k, "y", acrwl::logic::edge("x", "y"));
            let at_least = count(k.max(1), "y", acrwl::logic::edge("x", "y"));
            for v in g.nodes() {
                let a: Assignment = [("x".to_string(), v)].into();
                assert_eq!(evaluate(&g, &f, &a).unwrap(), g.out_degree(v) == k as usize);
                assert_eq!(evaluate(&g, &at_least, &a).unwrap(), g.out_degree(v) >= k.max(1) as usize);
            }
        }
    }
}

#[test]
fn desugaring_preserves_meaning() {
    let mut r = rng(4);
    let sampler = FormulaSampler::binary(3, 3, 2);
    for _ in 0..150 {
        let f = sampler.sample(&mut r);
        let d = f.desugar();
        let n = r.gen_range(1..=4);
        let g = random_graph(&mut r, n, 2, 0.5);
        for u in g.nodes() {
            for v in g.nodes() {
                assert_eq!(
                    evaluate_naive(&g, &f, &pair(u, v)).unwrap(),
                    evaluate_naive(&g, &d, &pair(u, v)).unwrap(),
                    "{f}"
                );
            }
        }
    }
}

#[test]
fn wl_refines_and_matches_classical() {
    let mut r = rng(5);
    for _ in 0..60 {
        let n = r.gen_range(1..=7);
        let d = r.gen_range(0..=2);
        let g = random_graph(&mut r, n, d, 0.4);
        let run = run_wl(std::slice::from_ref(&g), n.max(1), n + 1);
        let rounds = &run.graphs[0].rounds;
        for k in 0..rounds.len() - 1 {
            assert!(refines(&rounds[k + 1], &rounds[k]));
        }
        assert_eq!(partition(&rounds[n + 1]), partition(&classical_wl(&g)), "{g:?}");
    }
}

#[test]
fn symmetric_graphs_ignore_direction_components() {
    let mut r = rng(6);
    for _ in 0..30 {
        let n = r.gen_range(2..=6);
        let mut g = Graph::new(n, 1);
        for u in 0..n {
            g.set_predicate(u, 1, r.gen_bool(0.5)).unwrap();
            for v in u + 1..n {
                if r.gen_bool(0.5) {
                    g.add_undirected_edge(u, v).unwrap();
                }
            }
        }
        let run = run_wl(std::slice::from_ref(&g), 2, 1);
        for &col in &run.graphs[0].rounds[1] {
            let ms = run.table.get(col).unwrap().multisets().unwrap();
            assert!(ms[1].is_empty() && ms[2].is_empty());
        }
    }
}

#[test]
fn equivariance_under_permutation() {
    let mut r = rng(7);
    let corpus = gadget_corpus(3, 4, 11);
    let model = gadlin_classifier();
    let phi = formula_phi_gadlin_fo();
    for entry in corpus.iter().filter(|e| e.graph.num_nodes() <= 40) {
        let g = &entry.graph;
        let out = run_classifier(g, &model).unwrap();
        let truth = classify(g, &phi).unwrap();
        for _ in 0..10 {
            let p = random_perm(&mut r, g.num_nodes());
            let h = g.permuted(&p);
            let out_h = run_classifier(&h, &model).unwrap();
            let truth_h = classify(&h, &phi).unwrap();
            let run = run_wl(&[g.clone(), h.clone()], 2, 2);
            for v in g.nodes() {
                assert_eq!(out[v], out_h[p[v]], "{}", entry.name);
                assert_eq!(truth[v], truth_h[p[v]], "{}", entry.name);
                assert_eq!(run.graphs[0].rounds[2][v], run.graphs[1].rounds[2][p[v]]);
            }
        }
    }
    let lin = lin_classifier();
    for _ in 0..100 {
        let n = r.gen_range(1..=6);
        let g = random_graph(&mut r, n, 0, 0.5);
        let p = random_perm(&mut r, n);
        let (a, b) = (run_classifier(&g, &lin).unwrap(), run_classifier(&g.permuted(&p), &lin).unwrap());
        for v in g.nodes() {
            assert_eq!(a[v], b[p[v]]);
        }
    }
}

#[test]
fn classifiers_are_constant_per_graph() {
    for entry in gadget_corpus(4, 10, 1) {
        let out = run_classifier(&entry.graph, &gadlin_classifier()).unwrap();
        assert!(out.iter().all(|&b| b == out[0]), "{}", entry.name);
    }
}

#[test]
fn gadgetised_digraphs_satisfy_local_constraints() {
    let mut r = rng(8);
    let empty = Assignment::new();
    for _ in 0..40 {
        let n = r.gen_range(1..=6);
        let g = gadgetise(&random_graph(&mut r, n, 0, 0.5));
        assert!(evaluate(&g, &formula_phi1(), &empty).unwrap());
        assert!(evaluate(&g, &formula_phi2(), &empty).unwrap());
    }
}

#[test]
fn truncations_are_two_variable() {
    for b in 1..=5 {
        for t in [Truncation::DistinctOutdegree, Truncation::GadgetPsi] {
            assert!(metrics(&inf_c2_truncation(t, b).unwrap()).is_c2);
        }
    }
}

#[test]
fn psi_check_matches_truncation_on_random_gadgets() {
    let mut r = rng(9);
    let empty = Assignment::new();
    for _ in 0..40 {
        let n = r.gen_range(1..=5);
        let g = gadgetise(&random_graph(&mut r, n, 0, 0.5));
        let f = inf_c2_truncation(Truncation::GadgetPsi, n).unwrap();
        assert_eq!(evaluate(&g, &f, &empty).unwrap(), check_psi(&g), "{g:?}");
    }
}

fn arb_graph() -> impl Strategy<Value = Graph> {
    (1usize..=5, 0usize..=2).prop_flat_map(|(n, d)| {
        (
            proptest::collection::vec(any::<bool>(), n * n),
            proptest::collection::vec(any::<bool>(), n * d),
        )
            .prop_map(move |(adj, labels)| {
                let mut g = Graph::new(n, d);
                for u in 0..n {
                    for v in (0..n).filter(|&v| v != u) {
                        if adj[u * n + v] {
                            g.add_edge(u, v).unwrap();
                        }
                    }
                    g.set_label(u, labels[u * d..(u + 1) * d].to_vec()).unwrap();
                }
                g
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn memoised_evaluator_matches_naive(g in arb_graph(), seed in any::<u64>()) {
        let f: Formula = FormulaSampler::binary(3, 3, 2).sample(&mut rng(seed));
        for u in g.nodes() {
            for v in g.nodes() {
                prop_assert_eq!(
                    evaluate(&g, &f, &pair(u, v)).unwrap(),
                    evaluate_naive(&g, &f, &pair(u, v)).unwrap(),
                    "{}", f
                );
            }
        }
    }

    #[test]
    fn neighbourhood_kinds_partition_nodes(g in arb_graph()) {
        for v in g.nodes() {
            let mut all: Vec<Node> = [
                NeighborhoodKind::Both,
                NeighborhoodKind::InOnly,
                NeighborhoodKind::OutOnly,
                NeighborhoodKind::NonNeighbor,
            ]
            .iter()
            .flat_map(|&k| g.neighbors(v, k).unwrap())
            .collect();
            all.push(v);
            all.sort_unstable();
            prop_assert_eq!(all, g.nodes().collect::<Vec<_>>());
        }
    }

    #[test]
    fn graph_json_round_trips(g in arb_graph()) {
        let text = g.to_json();
        let back = Graph::from_json(&text).unwrap();
        prop_assert_eq!(&back, &g);
        prop_assert_eq!(back.to_json(), text);
    }

    #[test]
    fn lin_model_is_the_order_test(g in arb_graph()) {
        let mut h = Graph::new(g.num_nodes(), 0);
        for (u, v) in g.edges() {
            h.add_edge(u, v).unwrap();
        }
        let out = run_classifier(&h, &lin_classifier()).unwrap();
        prop_assert!(out.iter().all(|&b| b == h.is_strict_linear_order()));
    }
}
