use super::*;
use crate::heap::{HeapGraph, MutatorOp, NodeNames, StoreState};
use crate::set::{nodes, NodeId, NodeSet};
use crate::testutil::{arb_graph, arb_graph_with_roots, arb_subset, bfs, bfs_plus};
use proptest::prelude::*;

// A..J as 0..9
fn bug_layout() -> HeapGraph {
    let (a, b, c, d, e, f, g, h, i, j) = (0, 1, 2, 3, 4, 5, 6, 7, 8, 9);
    HeapGraph::from_arcs(
        10,
        [
            (a, b),
            (a, c),
            (b, c),
            (b, d),
            (c, a),
            (c, i),
            (c, d),
            (d, e),
            (i, j),
            (f, g),
            (g, h),
            (h, f),
            (h, e),
        ],
    )
}

fn chain3() -> HeapGraph {
    HeapGraph::from_arcs(3, [(0, 1), (1, 2)])
}

#[test]
fn closure_of_chain_is_reachable_set() {
    let g = chain3();
    let f = GraphFn::extension(&g);
    assert_eq!(closure(&f, &nodes([0])), bfs(&g, &nodes([0])));
    assert_eq!(closure(&f, &nodes([0])), nodes([0, 1, 2]));
    assert_eq!(closure(&f, &NodeSet::new()), NodeSet::new());
}

#[test]
fn closure_of_identity_is_seed() {
    let id = FnOf::new(NodeSet::full(5), |x: &NodeSet| x.clone());
    assert_eq!(closure(&id, &nodes([1, 3])), nodes([1, 3]));
}

#[test]
fn transitive_closure_excludes_unreached_seed() {
    let g = HeapGraph::from_arcs(2, [(0, 1)]);
    let f = GraphFn::image(&g);
    assert_eq!(transitive_closure(&f, &nodes([0])), nodes([1]));
    assert_eq!(transitive_closure(&f, &nodes([0])), bfs_plus(&g, &nodes([0])));

    // pre-root rho = 2 -> a = 0 -> b = 1
    let g = HeapGraph::from_arcs(3, [(2, 0), (0, 1)]);
    let f = GraphFn::image(&g);
    assert_eq!(transitive_closure(&f, &nodes([2])), nodes([0, 1]));
    assert_eq!(bfs_plus(&g, &nodes([2])), nodes([0, 1]));

    let id = FnOf::new(NodeSet::full(4), |x: &NodeSet| x.clone());
    assert_eq!(transitive_closure(&id, &nodes([2, 3])), nodes([2, 3]));
}

#[test]
fn kleene_chain_of_rooted_function_is_reachable_set() {
    let g = bug_layout();
    let f = GraphFn::rooted(&g, &nodes([0]));
    assert_eq!(kleene_chain(&f), bfs(&g, &nodes([0])));
    let empty = FnOf::new(NodeSet::full(3), |_: &NodeSet| NodeSet::new());
    assert_eq!(kleene_chain(&empty), NodeSet::new());
    assert_eq!(kleene_iterates(&empty).len(), 1);
}

#[test]
fn dead_programs_on_bug_layout() {
    let g = bug_layout();
    let roots = nodes([0]);
    let dead = nodes([5, 6, 7]);
    assert_eq!(raw_dead_iteration(&g, &roots), dead);
    assert_eq!(workset_dead_iteration(&g, &roots), dead);
    assert_eq!(optimized_workset_dead_iteration(&g, &roots).0, dead);
}

#[test]
fn dead_programs_trivial_cases() {
    let g = bug_layout();
    let all = g.nodes();
    assert!(raw_dead_iteration(&g, &all).is_empty());
    assert!(workset_dead_iteration(&g, &all).is_empty());
    assert!(optimized_workset_dead_iteration(&g, &all).0.is_empty());

    let single = HeapGraph::new(1);
    assert_eq!(workset_dead_iteration(&single, &NodeSet::new()), nodes([0]));
    assert_eq!(raw_dead_iteration(&single, &NodeSet::new()), nodes([0]));

    assert!(workset_dead_iteration(&chain3(), &nodes([0])).is_empty());

    let (dead, log) = optimized_workset_dead_iteration(&HeapGraph::new(0), &NodeSet::new());
    assert!(dead.is_empty());
    assert_eq!(log.len(), 1);
}

#[test]
fn optimized_program_starts_with_roots() {
    let g = bug_layout();
    let (_, log) = optimized_workset_dead_iteration(&g, &nodes([0, 5]));
    assert_eq!(log[0].ws, nodes([0, 5]));
    assert_eq!(log[0].w, g.nodes());
}

#[test]
fn chooser_outside_workset_is_rejected() {
    let g = chain3();
    let err = workset_dead_iteration_with(&g, &nodes([0]), |_| NodeId(2)).unwrap_err();
    assert_eq!(err, FixpointError::InvalidChoice(NodeId(2)));
    // highest-first chooser reaches the same answer
    let out = workset_dead_iteration_with(&g, &nodes([0]), |ws| ws.iter().last().unwrap()).unwrap();
    assert!(out.is_empty());
}

#[test]
fn dead_programs_agree_on_all_three_node_graphs() {
    // every multigraph-free arc set on 3 nodes, every root set
    let pairs: Vec<(u32, u32)> = (0..3).flat_map(|a| (0..3).map(move |b| (a, b))).collect();
    for mask in 0u32..(1 << pairs.len()) {
        let arcs = pairs
            .iter()
            .enumerate()
            .filter(|(i, _)| mask & (1 << i) != 0)
            .map(|(_, &p)| p);
        let g = HeapGraph::from_arcs(3, arcs);
        for roots in NodeSet::all_subsets(3) {
            let expect = g.nodes().difference(&bfs(&g, &roots));
            assert_eq!(raw_dead_iteration(&g, &roots), expect);
            assert_eq!(workset_dead_iteration(&g, &roots), expect);
            assert_eq!(optimized_workset_dead_iteration(&g, &roots).0, expect);
        }
    }
}

#[test]
fn macro_steps_reproduce_kleene_iteration() {
    let g = bug_layout();
    let f = GraphFn::extension(&g);
    let fs = FnSequence::constant(f.clone());
    let seq = micro_step_run(&fs, &nodes([0]), &mut MacroStep, StepRule::Inflationary).unwrap();
    for w in seq.steps.windows(2) {
        assert_eq!(w[1], f.apply(&w[0]));
    }
    assert_eq!(*seq.last(), bfs(&g, &nodes([0])));
}

#[test]
fn bad_proposals_are_policy_faults() {
    let fs = FnSequence::constant(GraphFn::extension(&chain3()));
    let mut stutter = |s: &NodeSet, _: &NodeSet| s.clone();
    let err = micro_step_run(&fs, &nodes([0]), &mut stutter, StepRule::Inflationary).unwrap_err();
    assert!(matches!(err, FixpointError::PolicyFault { step: 0, .. }));
    let mut overshoot = |_: &NodeSet, _: &NodeSet| nodes([0, 1, 2]);
    let err = micro_step_run(&fs, &nodes([0]), &mut overshoot, StepRule::Inflationary).unwrap_err();
    assert!(matches!(err, FixpointError::PolicyFault { .. }));
    let image = FnSequence::constant(GraphFn::image(&chain3()));
    let err = micro_step_run(&image, &nodes([0]), &mut LowestFirst, StepRule::Inflationary).unwrap_err();
    assert_eq!(err, FixpointError::NotInflationary { step: 0 });
}

#[test]
fn non_reflexive_rule_from_pre_root_image() {
    // pre-root 2 -> 0 -> 1; start at sucs(pre-root)
    let g = HeapGraph::from_arcs(3, [(2, 0), (0, 1)]);
    let fs = FnSequence::images_from_graphs([&g]);
    let r = GraphFn::image(&g).apply(&nodes([2]));
    let seq = micro_step_run(&fs, &r, &mut LowestFirst, StepRule::NonReflexive).unwrap();
    assert_eq!(*seq.last(), nodes([0, 1]));
    assert!(!seq.last().contains(NodeId(2)));
}

#[test]
fn shrinking_sequence_is_sandwiched() {
    // delete arcs of the bug layout one by one
    let mut g = bug_layout();
    let mut graphs = vec![g.clone()];
    for (a, b) in [(3, 4), (0, 2), (1, 3)] {
        g.remove_arc(NodeId(a), NodeId(b));
        graphs.push(g.clone());
    }
    let fs = FnSequence::from_graphs(&graphs);
    let r = nodes([0]);
    let seq = micro_step_run(&fs, &r, &mut LowestFirst, StepRule::Inflationary).unwrap();
    let last = graphs.last().unwrap();
    assert!(bfs(last, &r).is_subset(seq.last()));
    assert!(seq.last().is_subset(&bfs(&graphs[0], &r)));
}

#[test]
fn lemma_checks_pass_on_bug_layout() {
    let g = bug_layout();
    let f = GraphFn::extension(&g);
    let samples: Vec<NodeSet> = [nodes([0]), nodes([5]), nodes([]), nodes([3, 8])].into();
    let report = check_closure_lemmas(&f, &samples);
    assert!(report.passed(), "{report:?}");
    assert!(report.verdict(LemmaId::ClosureProperties).unwrap().checked > 0);
    assert!(report.verdict(LemmaId::ClosureInvariance).unwrap().checked > 0);
}

#[test]
fn lemma_checks_catch_a_growing_closure() {
    // an arc from the closure to a node outside it (not a legal mutation)
    let g1 = HeapGraph::from_arcs(4, [(0, 1), (1, 2)]);
    let g2 = HeapGraph::from_arcs(4, [(0, 1), (1, 2), (2, 3)]);
    let fs = FnSequence::from_graphs([&g1, &g2]);
    let mut report = LemmaReport::new();
    report.antitone(&fs, &nodes([0]), &[nodes([0])]);
    assert!(!report.passed());
}

fn legal_versions(g: HeapGraph, roots: &NodeSet, picks: &[(u8, u8, u8)]) -> Vec<HeapGraph> {
    let n = g.memory_size();
    let mut store = StoreState::new(g, [], vec![roots.to_vec()], NodeNames::numbered(n)).unwrap();
    let mut out = vec![store.graph().clone()];
    for &(k, x, y) in picks {
        let act = store.active().to_vec();
        if act.is_empty() {
            break;
        }
        let a = act[x as usize % act.len()];
        let op = if k % 2 == 0 {
            MutatorOp::AddArc(a, act[y as usize % act.len()])
        } else {
            let out: Vec<NodeId> = store.graph().successors(a).collect();
            if out.is_empty() {
                continue;
            }
            MutatorOp::DelArc(a, out[y as usize % out.len()])
        };
        store.apply(&op).unwrap();
        out.push(store.graph().clone());
    }
    out
}

proptest! {
    #[test]
    fn constructed_functions_are_monotone((g, x) in arb_graph_with_roots(12, 30), extra in arb_subset(12)) {
        let y = x.union(&extra.intersection(&g.nodes()));
        for f in [GraphFn::extension(&g), GraphFn::image(&g), GraphFn::rooted(&g, &x)] {
            prop_assert!(monotone_on(&f, &x, &y));
        }
    }

    #[test]
    fn closure_matches_oracle((g, x) in arb_graph_with_roots(20, 50)) {
        prop_assert_eq!(closure(&GraphFn::extension(&g), &x), bfs(&g, &x));
        prop_assert_eq!(transitive_closure(&GraphFn::image(&g), &x), bfs_plus(&g, &x));
        let f = GraphFn::rooted(&g, &x);
        let chain = kleene_iterates(&f);
        prop_assert!(chain.len() <= g.memory_size() + 1);
        prop_assert_eq!(chain.last().unwrap(), &bfs(&g, &x));
    }

    #[test]
    fn dead_programs_match_oracle((g, roots) in arb_graph_with_roots(20, 60)) {
        let expect = g.nodes().difference(&bfs(&g, &roots));
        prop_assert_eq!(&raw_dead_iteration(&g, &roots), &expect);
        prop_assert_eq!(&workset_dead_iteration(&g, &roots), &expect);
        let (dead, log) = optimized_workset_dead_iteration(&g, &roots);
        prop_assert_eq!(&dead, &expect);
        for e in &log {
            prop_assert_eq!(&e.ws, &workset_candidates(&g, &roots, &e.w));
        }
    }

    #[test]
    fn workset_chooser_does_not_matter((g, roots) in arb_graph_with_roots(15, 40), seed in any::<u64>()) {
        let mut k = seed;
        let out = workset_dead_iteration_with(&g, &roots, |ws| {
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let v = ws.to_vec();
            v[(k >> 33) as usize % v.len()]
        }).unwrap();
        prop_assert_eq!(out, raw_dead_iteration(&g, &roots));
    }

    #[test]
    fn micro_step_sequences_are_well_formed((g, r) in arb_graph_with_roots(15, 40), take_all in any::<bool>()) {
        let fs = FnSequence::constant(GraphFn::extension(&g));
        let seq = if take_all {
            micro_step_run(&fs, &r, &mut MacroStep, StepRule::Inflationary)
        } else {
            micro_step_run(&fs, &r, &mut LowestFirst, StepRule::Inflationary)
        }.unwrap();
        let f = fs.at(0);
        for w in seq.steps.windows(2) {
            prop_assert!(w[0].is_strict_subset(&w[1]));
            prop_assert!(w[1].is_subset(&f.apply(&w[0])));
        }
        prop_assert_eq!(&f.apply(seq.last()), seq.last());
        prop_assert!(seq.len() <= g.memory_size() + 1);
        prop_assert_eq!(seq.last(), &bfs(&g, &r));
    }

    #[test]
    fn closure_laws_hold(g in arb_graph(10, 25), samples in proptest::collection::vec(arb_subset(10), 1..6)) {
        let samples: Vec<NodeSet> = samples.into_iter().map(|s| s.intersection(&g.nodes())).collect();
        let report = check_closure_lemmas(&GraphFn::extension(&g), &samples);
        prop_assert!(report.passed(), "{:?}", report);
        let report = check_closure_lemmas(&GraphFn::image(&g), &samples);
        prop_assert!(report.passed(), "{:?}", report);
    }

    #[test]
    fn legal_mutation_sequences_cage_closed_sets(
        (g, r) in arb_graph_with_roots(8, 16),
        picks in proptest::collection::vec((any::<u8>(), any::<u8>(), any::<u8>()), 0..12),
        extra in arb_subset(8),
    ) {
        let versions = legal_versions(g, &r, &picks);
        let fs = FnSequence::from_graphs(&versions);
        for i in 0..versions.len() - 1 {
            // any x ⊇ r closed under version i
            let x = bfs(&versions[i], &r.union(&extra.intersection(&versions[i].nodes())));
            prop_assert!(fs.at(i + 1).apply(&x).is_subset(&x), "caged broken at {}", i);
        }
        let mut report = LemmaReport::new();
        report.antitone(&fs, &r, &[r.clone(), r.union(&extra.intersection(&versions[0].nodes()))]);
        let seq = micro_step_run(&fs, &r, &mut LowestFirst, StepRule::Inflationary).unwrap();
        report.decreasing(&fs, &seq);
        prop_assert!(report.passed(), "{:?}", report);
        let end = &versions[seq.fn_index.last().copied().unwrap().min(versions.len() - 1)];
        prop_assert!(bfs(end, &r).is_subset(seq.last()));
        prop_assert!(seq.last().is_subset(&bfs(&versions[0], &r)));
    }
}
