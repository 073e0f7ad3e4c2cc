//! Acceptance suite. Runs every criterion in order and prints one PASS or
//! FAIL line per criterion; exits nonzero when any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::*;
use swdrank::config::EngineConfig;
use swdrank::corpus::{classify_relation, RelationKind};
use swdrank::engine::{bench, build, compare_inits, ingest_dir, query, BenchOptions, RankedDoc};
use swdrank::graph::TransferDataGraph;
use swdrank::hits::{hits, oracle_hits, HitsRun, SubEdge, SubGraph, SubGraphParams};
use swdrank::rank::{compute_objectrank, oracle_rank, InitMode, RankParams};
use swdrank::store::{load_state, save_state};
use swdrank::synth::{synthetic_suite, write_corpus};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Oracle comparisons stop on an L1 residual of 1e-10, which bounds the
/// remaining error by `d / (1 - d) * 1e-10`.
const ORACLE_PARAMS: RankParams = RankParams {
    damping: 0.85,
    epsilon: 1e-10,
    max_iter: 400,
    init: InitMode::InRatio,
};

fn linf(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))
}

const OWL: &str = "http://www.w3.org/2002/07/owl#";
const DAML: &str = "http://www.daml.org/2001/03/daml+oil#";
const RDFS: &str = "http://www.w3.org/2000/01/rdf-schema#";

fn relation_table() -> Outcome {
    let start = Instant::now();
    let rows: [(RelationKind, &[&str]); 4] = [
        (RelationKind::TermRef, &["owl:termRef", "daml:termRef"]),
        (RelationKind::Imports, &["owl:imports", "daml:imports"]),
        (
            RelationKind::Extends,
            &[
                "rdfs:subClassOf",
                "rdfs:subPropertyOf",
                "owl:disjointWith",
                "owl:equivalentClass",
                "owl:equivalentProperty",
                "owl:complementOf",
                "owl:inverseOf",
                "owl:intersectionOf",
                "owl:unionOf",
                "daml:sameClassAs",
                "daml:samePropertyAs",
                "daml:inverseOf",
                "daml:disjointWith",
                "daml:complementOf",
                "daml:unionOf",
                "daml:disjointUnionOf",
                "daml:ntersectionOf",
            ],
        ),
        (
            RelationKind::PriorVersion,
            &[
                "owl:priorVersion",
                "owl:DeprecatedProperty",
                "owl:DeprecatedClass",
                "owl:backwardCompatibleWith",
                "owl:incompatibleWith",
            ],
        ),
    ];
    let full = |compact: &str| {
        let (prefix, local) = compact.split_once(':').unwrap();
        let ns = match prefix {
            "owl" => OWL,
            "daml" => DAML,
            _ => RDFS,
        };
        format!("{ns}{local}")
    };
    let mut listed = 0;
    for (kind, predicates) in rows {
        for p in predicates {
            listed += 1;
            for form in [p.to_string(), full(p)] {
                let got = classify_relation(&form);
                check(got == kind, || format!("{form} -> {got:?}, expected {kind:?}"))?;
            }
        }
    }
    check(listed == 26, || format!("{listed} listed predicates"))?;
    let unlisted = [
        "rdf:type".to_string(),
        "rdfs:label".to_string(),
        "rdfs:comment".to_string(),
        "rdfs:domain".to_string(),
        "rdfs:range".to_string(),
        format!("{OWL}sameAs"),
        format!("{OWL}versionInfo"),
        "http://xmlns.com/foaf/0.1/knows".to_string(),
        "http://purl.org/dc/elements/1.1/creator".to_string(),
        "http://example.org/ns#imports".to_string(),
    ];
    for p in &unlisted {
        let got = classify_relation(p);
        check(got == RelationKind::None, || format!("{p} -> {got:?}, expected None"))?;
    }
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!(
        "26 listed + {} unlisted predicates in {:.2?}",
        unlisted.len(),
        start.elapsed()
    ))
}

fn rank_oracle() -> Outcome {
    let start = Instant::now();
    let mut r = rng(0x0b1ec7);
    let mut worst: f64 = 0.0;
    let mut worst_tight: f64 = 0.0;
    for case in 0..200 {
        let g = random_transfer_graph(&mut r, 50);
        let oracle = oracle_rank(&g, 0.85).map_err(|e| format!("case {case}: {e}"))?;
        let got = compute_objectrank(&g, &RankParams::default()).map_err(|e| format!("case {case}: {e}"))?;
        let err = linf(&got.scores, &oracle);
        worst = worst.max(err);
        check(err <= 1e-8, || format!("case {case}: L-inf {err:e}"))?;
        let tight = compute_objectrank(&g, &ORACLE_PARAMS).map_err(|e| format!("case {case}: {e}"))?;
        worst_tight = worst_tight.max(linf(&tight.scores, &oracle));
    }
    within(start.elapsed(), Duration::from_secs(30))?;
    Ok(format!(
        "200/200 graphs at default parameters, worst L-inf {worst:.2e} ({worst_tight:.2e} at epsilon 1e-10), {:.2?}",
        start.elapsed()
    ))
}

fn hand_fixed_points() -> Outcome {
    let params = RankParams {
        epsilon: 1e-13,
        ..RankParams::default()
    };
    let cases: [(&str, TransferDataGraph, Vec<f64>); 3] = [
        (
            "mutual",
            TransferDataGraph::from_weights(2, &[(0, 1, 1.0), (1, 0, 1.0)]).unwrap(),
            vec![1.0, 1.0],
        ),
        (
            "chain",
            TransferDataGraph::from_weights(2, &[(0, 1, 1.0)]).unwrap(),
            vec![0.15, 0.2775],
        ),
        ("isolated", TransferDataGraph::from_weights(1, &[]).unwrap(), vec![0.15]),
    ];
    let mut worst: f64 = 0.0;
    for (name, g, expected) in cases {
        for init in [InitMode::Uniform, InitMode::InRatio] {
            let got = compute_objectrank(&g, &RankParams { init, ..params }).map_err(|e| e.to_string())?;
            let err = linf(&got.scores, &expected);
            worst = worst.max(err);
            check(err <= 1e-9, || {
                format!("{name} ({init:?}): {:?} vs {expected:?}", got.scores)
            })?;
        }
    }
    Ok(format!("mutual, chain, isolated; worst error {worst:.1e}"))
}

fn pagerank_reduction() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut worst_default: f64 = 0.0;
    for case in 0..20u64 {
        let n = 5 + (case as usize * 7) % 40;
        let (g, links) = single_type_graph(0x9a9e + case, n);
        let expected = pagerank(n, &links, 0.85);
        let got = compute_objectrank(&g, &ORACLE_PARAMS).map_err(|e| e.to_string())?;
        let err = linf(&got.scores, &expected);
        worst = worst.max(err);
        check(err <= 1e-8, || format!("case {case}: L-inf {err:e}"))?;
        let loose = compute_objectrank(&g, &RankParams::default()).map_err(|e| e.to_string())?;
        worst_default = worst_default.max(linf(&loose.scores, &expected));
    }
    Ok(format!(
        "20/20 graphs at epsilon 1e-10, worst L-inf {worst:.2e} ({worst_default:.2e} at epsilon 1e-8)"
    ))
}

fn hits_correctness() -> Outcome {
    // h1=0 -> a1=2, h1 -> a2=3, h2=1 -> a1.
    let four = SubGraph {
        nodes: vec![0, 1, 2, 3],
        seeds: vec![0],
        edges: [(0, 2), (0, 3), (1, 2)]
            .into_iter()
            .map(|(from, to)| SubEdge { from, to, weight: 1.0 })
            .collect(),
    };
    let unweighted = SubGraphParams {
        weighted: false,
        ..SubGraphParams::default()
    };
    let s = hits(&four, &unweighted).map_err(|e| e.to_string())?;
    let lambda = (3.0 + 5f64.sqrt()) / 2.0;
    let major = 1.0 / (1.0 + (lambda - 2.0f64).powi(2)).sqrt();
    let minor = (lambda - 2.0) * major;
    let expect_a = [0.0, 0.0, major, minor];
    let expect_h = [major, minor, 0.0, 0.0];
    check(linf(&s.authority, &expect_a) <= 1e-4, || {
        format!("authority {:?}", s.authority)
    })?;
    check(linf(&s.hub, &expect_h) <= 1e-4, || format!("hub {:?}", s.hub))?;
    check((major - 0.8507).abs() < 1e-4 && (minor - 0.5257).abs() < 1e-4, || {
        "derivation".into()
    })?;

    let mut r = rng(0x4175);
    let mut norm_worst: f64 = 0.0;
    let mut steps = 0;
    let mut capped = 0;
    let mut weight_worst: f64 = 0.0;
    let mut worst_residual: f64 = 0.0;
    for case in 0..100 {
        let sub = random_subgraph(&mut r, 30);
        let weighted = case % 2 == 0;
        let mut run = HitsRun::new(&sub, weighted, 1.0).map_err(|e| e.to_string())?;
        for _ in 0..SubGraphParams::default().max_iter {
            let change = run.step();
            steps += 1;
            for v in [run.authority(), run.hub()] {
                norm_worst = norm_worst.max((v.iter().map(|x| x * x).sum::<f64>() - 1.0).abs());
            }
            if change < 1e-10 {
                break;
            }
        }
        let default_run = hits(
            &sub,
            &SubGraphParams {
                weighted,
                ..SubGraphParams::default()
            },
        )
        .map_err(|e| e.to_string())?;
        if default_run.iterations_used >= SubGraphParams::default().max_iter {
            capped += 1;
        }
        let s = hits(&sub, &converged_hits(weighted)).map_err(|e| e.to_string())?;
        let o = oracle_hits(&sub, weighted);
        worst_residual = worst_residual.max(oracle_residual(&sub, weighted, &o));
        let gap = max_gap(&s.authority, &o.authority).max(max_gap(&s.hub, &o.hub));
        weight_worst = weight_worst.max(gap);
        check(gap <= 1e-6, || format!("case {case}: weights differ by {gap:e}"))?;
        check(same_ranking(&s.authority, &o.authority, HITS_GAP), || {
            format!("case {case}: authority order")
        })?;
        check(same_ranking(&s.hub, &o.hub, HITS_GAP), || {
            format!("case {case}: hub order")
        })?;
    }
    check(norm_worst <= 1e-9, || format!("square-sum drift {norm_worst:e}"))?;
    Ok(format!(
        "4-node ({major:.4}, {minor:.4}); norm drift {norm_worst:.1e} over {steps} steps; \
         100/100 oracle rankings agree, worst weight gap {weight_worst:.1e} ({capped} need more than the default 100 steps, oracle residual {worst_residual:.0e})"
    ))
}

/// Oracle weights closer than this count as tied when comparing orders.
const HITS_GAP: f64 = 1e-9;

fn init_suite() -> Outcome {
    let params = RankParams::default();
    let mut lines = Vec::new();
    let mut failures = Vec::new();
    let mut ratios = Vec::new();
    for (i, g) in synthetic_suite().iter().enumerate() {
        let cmp = compare_inits(g, &params).map_err(|e| e.to_string())?;
        ratios.push(cmp.ratio());
        lines.push(format!(
            "      graph {i}: uniform {:>3}  inratio {:>3}  ratio {:.3}",
            cmp.uniform_iterations,
            cmp.inratio_iterations,
            cmp.ratio()
        ));
        if cmp.inratio_iterations as f64 > 1.05 * cmp.uniform_iterations as f64 {
            failures.push(i);
        }
    }
    println!("{}", lines.join("\n"));
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    check(failures.is_empty(), || {
        format!("InRatio above 1.05x Uniform on graphs {failures:?}")
    })?;
    Ok(format!(
        "10/10 graphs within 1.05x; mean InRatio/Uniform ratio {mean:.3}"
    ))
}

fn bench_shape() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_corpus(dir.path(), 1000, 2024).map_err(|e| e.to_string())?;
    let config = EngineConfig::default();
    let (mut state, summary) = ingest_dir(dir.path(), &config).map_err(|e| e.to_string())?;
    check(summary.docs == 1000, || format!("{} docs ingested", summary.docs))?;
    build(&mut state, &config.rank, false).map_err(|e| e.to_string())?;

    let start = Instant::now();
    let rows = bench(&state, &BenchOptions::default()).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    check(rows.len() == 24, || format!("{} rows", rows.len()))?;
    for pair in rows.windows(2) {
        if pair[0].n == pair[1].n {
            check(
                pair[1].c > pair[0].c && pair[1].subgraph_nodes >= pair[0].subgraph_nodes,
                || {
                    format!(
                        "n={}: size {} at c={} then {} at c={}",
                        pair[0].n, pair[0].subgraph_nodes, pair[0].c, pair[1].subgraph_nodes, pair[1].c
                    )
                },
            )?;
        }
    }
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!("24 rows, sizes monotone in c, 1000-doc bench in {elapsed:.2?}"))
}

fn determinism() -> Outcome {
    let config = EngineConfig::default();
    for case in 0..50u64 {
        let docs = (case as usize * 13) % 60;
        let state = {
            let corpus = swdrank::synth::synthetic_corpus(docs, case);
            let parsed: Vec<_> = corpus
                .iter()
                .enumerate()
                .map(|(i, d)| swdrank::corpus::parse_document(&d.source, &d.uri, i, &config.tokenizer).unwrap())
                .collect();
            let paths: Vec<String> = corpus.iter().map(|d| d.file_name.clone()).collect();
            let (mut state, _) =
                swdrank::engine::assemble_state(&parsed, &paths, &config).map_err(|e| e.to_string())?;
            if case % 3 != 0 {
                build(&mut state, &config.rank, false).map_err(|e| e.to_string())?;
            }
            state
        };
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        save_state(&state, dir.path()).map_err(|e| e.to_string())?;
        let loaded = load_state(dir.path()).map_err(|e| e.to_string())?;
        check(loaded == state, || {
            format!("case {case}: state differs after round trip")
        })?;
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    save_state(&fixture_state(), dir.path()).map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for _ in 0..3 {
        let state = load_state(dir.path()).map_err(|e| e.to_string())?;
        let result = query(&state, GOLDEN_QUERY, &config.tokenizer, &golden_settings()).map_err(|e| e.to_string())?;
        outputs.push(result.to_json(false));
    }
    check(outputs.windows(2).all(|w| w[0] == w[1]), || {
        "query output differs between runs".into()
    })?;
    Ok("50/50 states round-trip; repeated query output byte-identical".into())
}

fn fixture_golden() -> Outcome {
    let state = fixture_state();
    let damping = state.rank_params.map(|p| p.damping);
    check(damping == Some(0.85), || format!("built with damping {damping:?}"))?;
    let golden = load_golden();
    let result = query(&state, GOLDEN_QUERY, &Default::default(), &golden_settings()).map_err(|e| e.to_string())?;
    let seeds: Vec<usize> = serde_json::from_value(golden["seeds"].clone()).map_err(|e| e.to_string())?;
    check(result.seeds == seeds, || {
        format!("seeds {:?} vs golden {seeds:?}", result.seeds)
    })?;
    let top_k = golden["top_k"].as_u64().unwrap_or(10) as usize;
    let pairs = |l: &[RankedDoc]| l.iter().map(|r| (r.doc_id, r.weight)).collect::<Vec<_>>();
    list_matches(&pairs(&result.authorities), &golden["authorities"], top_k)
        .map_err(|e| format!("authorities: {e}"))?;
    list_matches(&pairs(&result.hubs), &golden["hubs"], top_k).map_err(|e| format!("hubs: {e}"))?;
    Ok(format!(
        "20 docs, {} authorities and {} hubs match the oracle golden",
        result.authorities.len(),
        result.hubs.len()
    ))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("relation table", relation_table),
        ("ranking vs linear solve", rank_oracle),
        ("hand fixed points", hand_fixed_points),
        ("PageRank reduction", pagerank_reduction),
        ("HITS correctness", hits_correctness),
        ("initialization iterations", init_suite),
        ("bench shape", bench_shape),
        ("determinism and round trip", determinism),
        ("fixture golden", fixture_golden),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS  {}. {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {}. {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
