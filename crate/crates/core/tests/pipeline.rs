use l22embed::embed::{embed_case_dispatch, Branch, EmbedderConfig};
use l22embed::fixtures::{generate, FixtureKind};
use l22embed::graph::{brute_force_phi, Graph};
use l22embed::io::parse_graph;
use l22embed::rounding::{sparsest_cut_pipeline, CutSource};
use l22embed::sdp::SdpOptions;

#[test]
fn random_graphs_match_oracle_within_two() {
    let cfg = EmbedderConfig::new(0.5);
    for seed in 0..8 {
        let g = Graph::gnp(9, 0.4, 100 + seed).unwrap();
        if !g.is_connected() {
            continue;
        }
        let res = sparsest_cut_pipeline(&g, &cfg, &SdpOptions::default()).unwrap();
        let phi = brute_force_phi(&g).unwrap().sparsity;
        assert!(res.phi() >= phi - 1e-12);
        assert!(
            res.phi() <= 2.0 * phi + 1e-12,
            "seed {seed}: {} vs {phi}",
            res.phi()
        );
        assert!(res.diagnostics.phi_sdp <= phi + 1e-5);
        assert!(res.diagnostics.von_neumann.holds);
    }
}

#[test]
fn pipeline_on_parsed_path() {
    let g = parse_graph("graph 4\n1 2 1\n2 3 1\n3 4 1\n").unwrap();
    let res = sparsest_cut_pipeline(&g, &EmbedderConfig::new(0.5), &SdpOptions::default()).unwrap();
    let js = res.to_json();
    assert_eq!(js["phi"], 0.25);
    assert_eq!(js["cut"], serde_json::json!([1, 2]));
    assert_eq!(res.source, CutSource::Embedding);
}

#[test]
fn regular_graph_uses_both_roundings() {
    let g = Graph::cycle(10).unwrap();
    let res = sparsest_cut_pipeline(&g, &EmbedderConfig::new(0.5), &SdpOptions::default()).unwrap();
    assert!(res.diagnostics.cheeger_cut.is_some());
    assert!(res.diagnostics.embedding_cut.is_some());
    assert_eq!(res.phi(), brute_force_phi(&g).unwrap().sparsity);
}

#[test]
fn too_large_and_disconnected_rejected() {
    let cfg = EmbedderConfig::new(0.5);
    let big = Graph::cycle(40).unwrap();
    assert!(sparsest_cut_pipeline(&big, &cfg, &SdpOptions::default()).is_err());
    let split = Graph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
    assert!(sparsest_cut_pipeline(&split, &cfg, &SdpOptions::default()).is_err());
}

#[test]
fn simplex_and_planted_fixtures_embed() {
    let cfg = EmbedderConfig::new(0.5);
    let simplex = generate(&FixtureKind::Simplex { k: 30 }, 0).unwrap().points;
    let res = embed_case_dispatch(&simplex, &cfg).unwrap();
    assert_eq!(res.report.contraction_violations, 0);

    let planted = generate(&FixtureKind::planted(4, 12, 0.02), 1).unwrap();
    let res = embed_case_dispatch(&planted.points, &cfg).unwrap();
    assert_ne!(res.branch, Branch::ZeroSpread);
    assert_eq!(res.report.contraction_violations, 0);
}

#[test]
fn seeds_reproduce() {
    let ps = generate(&FixtureKind::Hypercube { dim: 7 }, 0)
        .unwrap()
        .points;
    let cfg = EmbedderConfig::new(0.5).with_seed(42);
    let a = embed_case_dispatch(&ps, &cfg).unwrap();
    let b = embed_case_dispatch(&ps, &cfg).unwrap();
    assert_eq!(a.to_json(true), b.to_json(true));
}
