//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::sync::{Arc, Barrier};
use std::time::{Duration, Instant};

use ideareader::{AppState, BackgroundServer};
use ideareader_core::clustering::{kernel_kmeans, kernel_kmeans_from_seeds, kmeans_plus_plus_seeds};
use ideareader_core::embedding::spectral_propagate;
use ideareader_core::pipeline::{run_pipeline, MachineReadingResult, PipelineConfig};
use ideareader_core::synthetic::TARGET_ID;
use ideareader_core::text::split_sentences;
use ideareader_core::tree::render_report;
use ideareader_core::{Direction, EmbeddingMatrix, KernelKind, KernelMatrix, ResultDocument, Stage};
use ideareader_testkit::dense::{mean_intra_block_cosine, normalize_rows};
use ideareader_testkit::graphs::{corpus_from_edges, expansion_oracle, node_id, pagerank_oracle, random_dag, random_digraph};
use ideareader_testkit::kmeans::{best_bipartition, linear_kernel, lloyd_from_seeds, planted_clouds, random_points, unit_embedding};
use ideareader_testkit::metrics::same_partition;
use ideareader_testkit::provenance::summary_has_source;
use ideareader_testkit::{adjusted_rand_index, check_golden, planted_topics, synthetic_corpus};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn within(start: Instant, limit: Duration) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    ensure!(elapsed < limit, "took {elapsed:?}, limit {limit:?}");
    Ok(elapsed)
}

fn pagerank_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let start = Instant::now();
    let mut worst = 0.0f64;
    for case in 0..50 {
        let (n, edges) = random_digraph(&mut rng, 8);
        let (_, graph) = corpus_from_edges(n, &edges);
        let nodes: BTreeSet<String> = (0..n).map(node_id).collect();
        let got = graph.pagerank(&nodes, 0.85, 1e-10, 200).map_err(|e| e.to_string())?;
        let want = pagerank_oracle(n, &edges, 0.85);
        for (i, w) in want.iter().enumerate() {
            worst = worst.max((got[&node_id(i)] - w).abs());
        }
        let total: f64 = got.values().sum();
        ensure!((total - 1.0).abs() <= 1e-9, "case {case}: scores sum to {total}");
    }
    ensure!(worst <= 1e-8, "max deviation {worst:e}");
    let elapsed = within(start, Duration::from_secs(1))?;
    Ok(format!("50 graphs, max deviation {worst:.1e}, {elapsed:.0?}"))
}

fn expansion_rule_conformance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    for case in 0..100 {
        let n = rng.random_range(2..400);
        let max_out = rng.random_range(1..5);
        let edges = random_dag(&mut rng, n, max_out);
        let (_, graph) = corpus_from_edges(n, &edges);
        let follow_references = case % 2 == 0;
        let offset = rng.random_range(0..n.min(20));
        let root = if follow_references { offset } else { n - 1 - offset };
        let direction = if follow_references { Direction::References } else { Direction::Citations };
        let got = graph.expand(&node_id(root), direction, 100, 5).map_err(|e| e.to_string())?;
        let (want, exhausted) = expansion_oracle(n, &edges, root, follow_references, 100, 5);
        let want: Vec<(String, u32)> = want.into_iter().map(|(v, h)| (node_id(v), h)).collect();
        let got_members: Vec<(String, u32)> = got.members.clone().into_iter().collect();
        ensure!(got_members == want, "case {case}: member set differs from level BFS");
        ensure!(got.exhausted == exhausted, "case {case}: exhaustion flag differs");

        let mut nodes: BTreeSet<String> = got.members.keys().cloned().collect();
        nodes.insert(node_id(root));
        let scores = graph.pagerank(&nodes, 0.85, 1e-10, 200).map_err(|e| e.to_string())?;
        let candidates = got.select_top(&scores, 100).map_err(|e| e.to_string())?;
        ensure!(
            candidates.len() == got.len().min(100),
            "case {case}: {} candidates from {} expanded",
            candidates.len(),
            got.len()
        );
    }
    Ok("100 DAGs agree with level BFS".into())
}

fn kernel_kmeans_correctness() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    for case in 0..50u64 {
        let n = rng.random_range(4..40);
        let dim = rng.random_range(2..6);
        let points = random_points(&mut rng, n, dim);
        let kind = if case % 2 == 0 { KernelKind::Linear } else { KernelKind::Gaussian { gamma: 1.0 } };
        let kernel = KernelMatrix::compute(&unit_embedding(&points), kind);
        let k = rng.random_range(1..=n.min(6));
        let a = kernel_kmeans(&kernel, k, case, 100, 1e-9).map_err(|e| e.to_string())?;
        ensure!(
            a.history.windows(2).all(|w| w[1] <= w[0] + 1e-12),
            "case {case}: objective rose {:?}",
            a.history
        );
    }
    for case in 0..50u64 {
        let n = rng.random_range(3..=12);
        let dim = rng.random_range(1..4);
        let points = random_points(&mut rng, n, dim);
        let kernel = linear_kernel(&points);
        let k = rng.random_range(1..=n.min(4));
        let seeds = kmeans_plus_plus_seeds(&kernel, k, case).map_err(|e| e.to_string())?;
        let a = kernel_kmeans_from_seeds(&kernel, &seeds, 100, 0.0);
        ensure!(a.labels == lloyd_from_seeds(&points, &seeds, 100), "case {case}: labels differ from Lloyd");
    }
    let centers = vec![vec![5.0, 5.0], vec![-5.0, -5.0]];
    let (points, planted) = planted_clouds(&mut rng, &centers, 4, 0.5);
    let best = best_bipartition(&points);
    ensure!(same_partition(&best, &planted), "exhaustive optimum is not the planted split");
    let kernel = linear_kernel(&points);
    for seed in 0..10 {
        let a = kernel_kmeans(&kernel, 2, seed, 100, 1e-9).map_err(|e| e.to_string())?;
        ensure!(same_partition(&a.labels, &best), "seed {seed} missed the planted split");
    }
    let elapsed = within(start, Duration::from_secs(5))?;
    Ok(format!("monotone, Lloyd-equivalent, planted split for seeds 0-9, {elapsed:.0?}"))
}

fn run(target: &str) -> Result<MachineReadingResult, String> {
    let (store, graph) = synthetic_corpus();
    run_pipeline(&store, &graph, target, &PipelineConfig::default()).map_err(|e| e.to_string())
}

fn topic_recovery() -> Outcome {
    let planted = planted_topics();
    let start = Instant::now();
    let result = run(TARGET_ID)?;
    let elapsed = within(start, Duration::from_secs(30))?;
    let assignment = &result.assignments[&Direction::References];
    let truth: Vec<&str> = assignment.ids.iter().map(|id| planted[id].as_str()).collect();
    let ari = adjusted_rand_index(&assignment.labels, &truth);
    ensure!(ari >= 0.8, "ARI {ari:.4} with k = {}", assignment.k);
    Ok(format!("ARI {ari:.4}, k = {}, {elapsed:.0?}", assignment.k))
}

fn spectral_propagation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let n = 20;
    let blocks: Vec<usize> = (0..n).map(|i| i / 10).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let p = if blocks[i] == blocks[j] { 0.5 } else { 0.03 };
            if rng.random_bool(p) {
                edges.push((i, j));
            }
        }
    }
    let mut rows = DMatrix::<f64>::zeros(n, 6);
    for i in 0..n {
        for c in 0..6 {
            let base = if c / 3 == blocks[i] { 1.0 } else { 0.0 };
            rows[(i, c)] = base + rng.random_range(-0.8..0.8);
        }
    }
    let rows = normalize_rows(rows);
    let data: Vec<f64> = (0..n).flat_map(|i| rows.row(i).iter().copied().collect::<Vec<_>>()).collect();
    let (_, graph) = corpus_from_edges(n, &edges);
    let emb = EmbeddingMatrix::from_rows((0..n).map(node_id).collect(), 6, data, Stage::Fused);
    let as_rows = |m: &EmbeddingMatrix<f64>| m.rows().map(<[f64]>::to_vec).collect::<Vec<_>>();

    let before = mean_intra_block_cosine(&as_rows(&emb), &blocks);
    let after = mean_intra_block_cosine(&as_rows(&spectral_propagate(&graph, &emb, 3, 0.5)), &blocks);
    ensure!(after > before, "intra-block cosine {before:.4} -> {after:.4}");

    let same = spectral_propagate(&graph, &emb, 3, 1.0);
    let drift = emb
        .rows()
        .zip(same.rows())
        .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
        .fold(0.0f64, f64::max);
    ensure!(drift <= 1e-12, "mix = 1 moved a row by {drift:e}");
    Ok(format!("intra-block cosine {before:.4} -> {after:.4}, identity drift {drift:.1e}"))
}

fn structural_limits() -> Outcome {
    let (store, graph) = synthetic_corpus();
    let mut targets = vec![TARGET_ID.to_string(), "r0-000".into(), "r2-001".into(), "c1-000".into()];
    targets.extend(
        store
            .iter()
            .find(|p| p.reference_ids.is_empty() && graph.citation_count(&p.id) >= 3)
            .map(|p| p.id.clone()),
    );
    let mut cards_seen = 0;
    for target in &targets {
        let result = run(target)?;
        for (direction, count) in &result.candidates {
            ensure!(*count <= 100, "{target}: {count} {direction:?} candidates");
        }
        let doc = &result.document;
        for card in doc.topics_inspiring.iter().chain(&doc.topics_influenced) {
            cards_seen += 1;
            ensure!(!card.label.trim().is_empty(), "{target}: card without heading");
            ensure!(
                split_sentences(&card.general_sentence).len() == 1,
                "{target}: {:?} has {} general sentences",
                card.label,
                split_sentences(&card.general_sentence).len()
            );
            ensure!((1..=5).contains(&card.papers.len()), "{target}: {} papers in {:?}", card.papers.len(), card.label);
            for p in &card.papers {
                ensure!(
                    split_sentences(&p.summary_sentence).len() == 1 && p.summary_sentence.starts_with(&p.citation_tag),
                    "{target}: summary for {} is not one aligned sentence",
                    p.id
                );
            }
        }
    }
    Ok(format!("{} targets, {cards_seen} cards", targets.len()))
}

fn determinism_golden() -> Outcome {
    let first = run(TARGET_ID)?;
    let second = run(TARGET_ID)?;
    ensure!(first.bytes == second.bytes, "result bytes differ between runs");
    let report = render_report(&first.document);
    ensure!(report == render_report(&second.document), "report differs between runs");
    check_golden("golden_result.json", &first.bytes)?;
    check_golden("golden_report.html", report.as_bytes())?;
    Ok(format!("{} result bytes and {} report bytes match the golden files", first.bytes.len(), report.len()))
}

fn provenance_audit() -> Outcome {
    let (store, _) = synthetic_corpus();
    let mut checked = 0;
    for target in [TARGET_ID, "r1-000", "c2-001"] {
        let doc = run(target)?.document;
        for card in doc.topics_inspiring.iter().chain(&doc.topics_influenced) {
            for p in &card.papers {
                let paper = store.get(&p.id).ok_or_else(|| format!("card cites unknown paper {}", p.id))?;
                ensure!(
                    summary_has_source(paper, &p.citation_tag, &p.summary_sentence),
                    "{}: {:?} has no source sentence",
                    p.id,
                    p.summary_sentence
                );
                checked += 1;
            }
        }
    }
    Ok(format!("{checked} summary sentences traced"))
}

struct Reply {
    status: u16,
    content_type: String,
    body: Vec<u8>,
}

fn call(agent: &ureq::Agent, method: &str, url: &str, body: &str) -> Result<Reply, String> {
    let response = match method {
        "GET" => agent.get(url).call(),
        _ => agent.post(url).send(body),
    };
    let mut response = response.map_err(|e| format!("{method} {url}: {e}"))?;
    let content_type = response
        .headers()
        .get("content-type")
        .and_then(|v| v.to_str().ok())
        .unwrap_or_default()
        .to_string();
    let body = response.body_mut().read_to_vec().map_err(|e| e.to_string())?;
    Ok(Reply {
        status: response.status().as_u16(),
        content_type,
        body,
    })
}

fn service_contract() -> Outcome {
    let (store, _) = synthetic_corpus();
    let state = AppState::new(store, PipelineConfig::default());
    let server = BackgroundServer::start(state.clone(), "127.0.0.1:0".parse().unwrap()).map_err(|e| e.to_string())?;
    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let expect = |method: &str, path: &str, body: &str, status: u16| -> Result<Reply, String> {
        let reply = call(&agent, method, &server.url(path), body)?;
        ensure!(reply.status == status, "{method} {path}: {} instead of {status}", reply.status);
        Ok(reply)
    };

    expect("GET", "/api/papers?q=graph", "", 200)?;
    expect("GET", "/api/papers?q=graph&limit=-1", "", 400)?;
    expect("GET", "/api/papers/target", "", 200)?;
    expect("GET", "/api/papers/nope", "", 404)?;
    expect("GET", "/api/ideaflow/target", "", 404)?;
    expect("GET", "/api/ideaflow/target/report", "", 404)?;
    expect("GET", "/api/ideaflow/nope", "", 404)?;
    expect("POST", "/api/ideaflow/nope", "", 404)?;
    expect("POST", "/api/ideaflow/target", "{broken", 400)?;
    ensure!(state.cache.computations() == 0, "rejected requests started a computation");

    let barrier = Arc::new(Barrier::new(2));
    let url = server.url("/api/ideaflow/target");
    let workers: Vec<_> = (0..2)
        .map(|_| {
            let (barrier, url, agent) = (barrier.clone(), url.clone(), agent.clone());
            std::thread::spawn(move || {
                barrier.wait();
                call(&agent, "POST", &url, "")
            })
        })
        .collect();
    let mut replies = Vec::new();
    for w in workers {
        replies.push(w.join().map_err(|_| "POST thread panicked".to_string())??);
    }
    ensure!(replies.iter().all(|r| r.status == 200), "concurrent POST failed");
    ensure!(replies[0].body == replies[1].body, "concurrent POSTs returned different documents");
    ensure!(state.cache.computations() == 1, "{} computations for two POSTs", state.cache.computations());

    let doc = ResultDocument::from_bytes(&replies[0].body).map_err(|e| e.to_string())?;
    ensure!(doc.config_digest == state.config.digest(), "digest differs from the server config");
    let cached = expect("GET", "/api/ideaflow/target", "", 200)?;
    ensure!(cached.body == replies[0].body, "cached GET bytes differ from computed bytes");
    let report = expect("GET", "/api/ideaflow/target/report", "", 200)?;
    ensure!(report.content_type.starts_with("text/html"), "report served as {:?}", report.content_type);
    ensure!(report.body == render_report(&doc).into_bytes(), "served report differs from rendered report");
    ensure!(state.cache.computations() == 1, "GETs triggered a computation");
    Ok("status codes, coalescing and cache bytes hold".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("pagerank oracle equivalence", pagerank_oracle_equivalence),
        ("expansion rule conformance", expansion_rule_conformance),
        ("kernel k-means correctness", kernel_kmeans_correctness),
        ("topic recovery end-to-end", topic_recovery),
        ("spectral propagation property", spectral_propagation),
        ("structural limits", structural_limits),
        ("determinism golden", determinism_golden),
        ("survey text provenance audit", provenance_audit),
        ("service contract", service_contract),
    ];
    let mut failures = 0;
    for (name, check) in criteria {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
