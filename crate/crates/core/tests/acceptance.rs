//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod oracles;

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rsrag_core::bench::{
    emit_report, emit_sweep, run_task, sweep, Pipeline, PipelineConfig, Report, ReportFormat, SweepGrid, REPORT_JSON,
};
use rsrag_core::context::chunk_entry_id;
use rsrag_core::embedding::{mock_embed, EmbedderProfile, EmbeddingVector, MockEmbedder};
use rsrag_core::ingest::{build_store, image_entry_id, IngestOptions};
use rsrag_core::knowledge::{load_dataset, render_knowledge_document, write_dataset, Dataset, Split, TaskExample, TaskKind};
use rsrag_core::metrics::{bleu_n, cider, meteor, rouge_l, tokenize};
use rsrag_core::retrieval::{retrieve, Query, RetrievalConfig};
use rsrag_core::store::{AnnParams, CollectionEntry, CollectionKind, Payload, StoreError, VectorStore};
use rsrag_core::synthetic::{synthetic_dataset, synthetic_record, SyntheticSpec};

use oracles::*;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("{what} took {took:?}, limit {limit:?}"))
}

fn entry(id: String, record: String, vector: EmbeddingVector) -> CollectionEntry {
    CollectionEntry {
        entry_id: id,
        record_id: record,
        vector,
        payload: Payload::new(),
    }
}

fn planted_query(seed: u64, dim: usize) -> Query {
    Query {
        text_embedding: Some(mock_embed(format!("qt{seed}").as_bytes(), dim, "acceptance")),
        image_embedding: Some(mock_embed(format!("qi{seed}").as_bytes(), dim, "acceptance")),
        ..Query::default()
    }
}

// 1
fn retrieval_oracle_equivalence() -> Result<String, String> {
    let start = Instant::now();
    let e = MockEmbedder::new(64);
    let records: Vec<_> = (0..1000).map(|i| synthetic_record(i, 21)).collect();
    let (store, _) = build_store(&records, &e, &IngestOptions::default()).map_err(|e| e.to_string())?;
    let tau = store.len(CollectionKind::Text).max(store.len(CollectionKind::Image));
    let mut queries: Vec<Query> = (0..8).map(|s| planted_query(s, 64)).collect();
    // queries that hit stored entries exactly
    for i in [3usize, 512, 999] {
        let mut q = Query::both(
            render_knowledge_document(&records[i]).text(),
            records[i].image_ref.clone().unwrap(),
        );
        q.embed(&e).map_err(|e| e.to_string())?;
        queries.push(q);
    }
    let mut cells = 0;
    for top_k in [1, 3, 5] {
        for alpha in [0.3, 0.5, 0.7, 0.9] {
            let cfg = RetrievalConfig {
                tau,
                top_k,
                alpha,
                exact_search: true,
            };
            for (qi, q) in queries.iter().enumerate() {
                let got = retrieve(&store, q, &cfg).map_err(|e| e.to_string())?.candidates;
                let want = brute_force_ranking(
                    &store,
                    q.text_embedding.as_ref().map(|v| v.values()),
                    q.image_embedding.as_ref().map(|v| v.values()),
                    alpha,
                    top_k,
                );
                ensure(got.len() == want.len(), || format!("k={top_k} a={alpha} q={qi}: length differs"))?;
                for (g, w) in got.iter().zip(&want) {
                    ensure(g.record_id == w.record_id, || {
                        format!("k={top_k} a={alpha} q={qi}: {} != {}", g.record_id, w.record_id)
                    })?;
                    let err = (g.fused - w.fused).abs().max((g.s_t - w.s_t).abs()).max((g.s_i - w.s_i).abs());
                    ensure(err <= 1e-9, || format!("k={top_k} a={alpha} q={qi}: score error {err:e}"))?;
                }
            }
            cells += 1;
        }
    }
    within(Duration::from_secs(30), start, "oracle comparison")?;
    Ok(format!(
        "{cells} cells x {} queries over 1000 records match brute force",
        queries.len()
    ))
}

// 2
fn endpoint_ranking_invariance() -> Result<String, String> {
    let dim = 32;
    for corpus in 0..100u64 {
        let mut store = VectorStore::new(dim);
        for r in 0..200usize {
            let rid = format!("r{r:03}");
            let chunks = 1 + (r + corpus as usize) % 3;
            for c in 0..chunks {
                let v = mock_embed(format!("{corpus}/{r}/{c}").as_bytes(), dim, "text");
                store
                    .upsert(CollectionKind::Text, entry(chunk_entry_id(&rid, c), rid.clone(), v))
                    .map_err(|e| e.to_string())?;
            }
            // every tenth record shares its image with the previous one to force ties
            let src = if r % 10 == 9 { r - 1 } else { r };
            let v = mock_embed(format!("{corpus}/{src}/img").as_bytes(), dim, "image");
            store
                .upsert(CollectionKind::Image, entry(image_entry_id(&rid), rid.clone(), v))
                .map_err(|e| e.to_string())?;
        }
        let q = planted_query(corpus, dim);
        let tau = store.len(CollectionKind::Text);
        for (alpha, text_side) in [(1.0, false), (0.0, true)] {
            let cfg = RetrievalConfig {
                tau,
                top_k: 200,
                alpha,
                exact_search: true,
            };
            let got: Vec<String> = retrieve(&store, &q, &cfg)
                .map_err(|e| e.to_string())?
                .candidates
                .into_iter()
                .map(|c| c.record_id)
                .collect();
            let (qt, qi) = (q.text_embedding.as_ref().unwrap().values(), q.image_embedding.as_ref().unwrap().values());
            let mut want: Vec<(f64, String)> = (0..200)
                .map(|r| {
                    let rid = format!("r{r:03}");
                    let s = if text_side {
                        side_score(&store, CollectionKind::Text, &rid, Some(qt))
                    } else {
                        side_score(&store, CollectionKind::Image, &rid, Some(qi))
                    };
                    (s, rid)
                })
                .collect();
            want.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then_with(|| a.1.cmp(&b.1)));
            let want: Vec<String> = want.into_iter().map(|w| w.1).collect();
            ensure(got == want, || format!("corpus {corpus}, alpha {alpha}: permutation differs"))?;
        }
    }
    Ok("100 corpora x 200 records: alpha=1 matches image ranking, alpha=0 matches text ranking".into())
}

// 3
fn ann_quality() -> Result<String, String> {
    let start = Instant::now();
    let dim = 64;
    let mut store = VectorStore::with_params(dim, AnnParams::default());
    for i in 0..10_000 {
        let v = mock_embed(format!("ann{i}").as_bytes(), dim, "ann");
        store
            .upsert(CollectionKind::Image, entry(format!("e{i:05}"), format!("r{i:05}"), v))
            .map_err(|e| e.to_string())?;
    }
    store.build_index();
    let build = start.elapsed();
    let mut found = 0;
    for qn in 0..100 {
        let q = mock_embed(format!("query{qn}").as_bytes(), dim, "ann-q");
        let exact = exact_top_entries(&store, CollectionKind::Image, q.values(), 10);
        let approx = store.search_ann(CollectionKind::Image, &q, 10).map_err(|e| e.to_string())?;
        found += approx.iter().filter(|h| exact.contains(&h.entry_id)).count();
    }
    let recall = found as f64 / 1000.0;
    within(Duration::from_secs(60), start, "ANN build and queries")?;
    ensure(recall >= 0.95, || format!("recall@10 = {recall:.3} < 0.95"))?;
    Ok(format!(
        "recall@10 = {recall:.3} over 100 queries, 10000 x 64 vectors (build {build:.1?}, total {:.1?})",
        start.elapsed()
    ))
}

// 4
fn metric_oracles() -> Result<String, String> {
    let t = |s: &str| tokenize(s);
    let close = |name: &str, lib: f64, oracle: f64, want: f64, tol: f64| {
        ensure((lib - want).abs() <= tol && (oracle - want).abs() <= tol, || {
            format!("{name}: library {lib}, oracle {oracle}, expected {want}")
        })
    };
    let c = t("the cat sat");
    let r = vec![t("the cat sat on the mat")];
    close("BLEU-1", bleu_n(&c, &r, 1).unwrap(), bleu(&c, &r, 1), 0.367879, 1e-6)?;
    let r2 = vec![t("the cat on the mat sat")];
    close("ROUGE-L", rouge_l(&c, &r2).unwrap(), rouge_l_oracle(&c, &r2), 0.628866, 1e-6)?;
    let abc = t("a b c");
    close("METEOR", meteor(&abc, &[abc.clone()]).unwrap(), oracles::meteor(&abc, &[abc.clone()]), 0.981481, 1e-6)?;
    let items = vec![(t("red tower"), vec![t("red tower")]), (t("blue lake"), vec![t("blue lake")])];
    close("CIDEr", cider(&items).unwrap(), oracles::cider(&items), 5.0, 1e-9)?;
    let single = vec![(t("red tower"), vec![t("red tower")])];
    let (lib, orc) = (cider(&single).unwrap(), oracles::cider(&single));
    ensure(lib == 0.0 && orc == 0.0, || format!("single-item CIDEr: library {lib}, oracle {orc}"))?;
    ensure(naive_tokens("The cat, sat.") == t("The cat, sat."), || "tokenizer disagrees with oracle".into())?;
    Ok("BLEU-1 0.367879, ROUGE-L 0.628866, METEOR 0.981481, CIDEr 5.0 and 0; library equals oracle".into())
}

fn rouge_l_oracle(c: &[String], r: &[Vec<String>]) -> f64 {
    oracles::rouge_l(c, r)
}

fn mock_pipeline(dataset: &Dataset, task: TaskKind, dim: usize, f: impl FnOnce(&mut PipelineConfig)) -> Result<Pipeline, String> {
    let e = MockEmbedder::new(dim);
    let (store, _) = build_store(dataset.records(), &e, &IngestOptions::default()).map_err(|e| e.to_string())?;
    let mut cfg = PipelineConfig::for_task(task);
    cfg.embedder = EmbedderProfile::mock(dim);
    f(&mut cfg);
    Pipeline::from_config(Arc::new(store), cfg).map_err(|e| e.to_string())
}

// 5
fn closed_loop_echo() -> Result<String, String> {
    let d = synthetic_dataset(&SyntheticSpec::single_task(20, TaskKind::Captioning, 42)).map_err(|e| e.to_string())?;
    let p = mock_pipeline(&d, TaskKind::Captioning, 64, |c| {
        c.top_k = 1;
        c.alpha = 0.9;
    })?;
    let run = run_task(TaskKind::Captioning, &d, &p).map_err(|e| e.to_string())?;
    let m = run.report.metrics;
    ensure(run.report.n_examples == 20, || format!("{} examples", run.report.n_examples))?;
    ensure(m.bleu1 == 1.0 && m.rouge_l == 1.0, || format!("BLEU-1 {} ROUGE-L {}", m.bleu1, m.rouge_l))?;
    // hand per-item check: every prediction is its gold reference
    ensure(run.report.examples.iter().all(|e| e.prediction == e.gold[0]), || "prediction != gold".into())?;
    Ok(format!("20 examples: BLEU-1 {:.6}, ROUGE-L {:.6}, CIDEr {:.6}", m.bleu1, m.rouge_l, m.cider))
}

// 6
fn planted_classification() -> Result<String, String> {
    let n = 160;
    let records: Vec<_> = (0..n).map(|i| synthetic_record(i, 99)).collect();
    let examples: Vec<TaskExample> = records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let doc = render_knowledge_document(r);
            let chunk0 = rsrag_core::context::chunk_document(&doc, 256).unwrap().remove(0).text;
            TaskExample {
                example_id: format!("cls-{i:04}"),
                record_id: r.record_id.clone(),
                task: TaskKind::Classification,
                image_ref: r.image_ref.clone().unwrap(),
                query_text: chunk0,
                gold: vec![r.category.clone()],
                split: Split::Test,
            }
        })
        .collect();
    let d = Dataset::new(records, examples).map_err(|e| e.to_string())?;
    let dim = 64;
    let accuracy = |p: &Pipeline, alpha: f64| -> Result<f64, String> {
        let cfg = PipelineConfig {
            alpha,
            top_k: 1,
            ..p.config().clone()
        };
        let run = run_task(TaskKind::Classification, &d, &p.with_config(cfg).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        Ok(run.report.accuracy.map_or(0.0, |a| a.overall))
    };
    let clean = mock_pipeline(&d, TaskKind::Classification, dim, |_| {})?;
    let acc_clean = accuracy(&clean, 0.5)?;
    ensure(acc_clean == 1.0, || format!("clean accuracy at alpha=0.5 is {acc_clean}"))?;

    // replace every image vector with noise
    let mut store = clean.store().clone();
    for r in d.records() {
        let noise = mock_embed(r.record_id.as_bytes(), dim, "corrupted-image");
        store
            .upsert(CollectionKind::Image, entry(image_entry_id(&r.record_id), r.record_id.clone(), noise))
            .map_err(|e| e.to_string())?;
    }
    store.build_index();
    let corrupted = Pipeline::from_config(Arc::new(store), clean.config().clone()).map_err(|e| e.to_string())?;
    let (hi, lo) = (accuracy(&corrupted, 0.9)?, accuracy(&corrupted, 0.1)?);
    ensure(hi < lo, || format!("corrupted: accuracy at 0.9 = {hi}, at 0.1 = {lo}"))?;
    Ok(format!("clean alpha=0.5: {acc_clean:.3}; corrupted images: alpha=0.9 {hi:.3} < alpha=0.1 {lo:.3}"))
}

// 7
fn sweep_harness_shape() -> Result<String, String> {
    let d = synthetic_dataset(&SyntheticSpec::single_task(24, TaskKind::VqaWk, 8)).map_err(|e| e.to_string())?;
    let p = mock_pipeline(&d, TaskKind::VqaWk, 64, |c| {
        c.exact_search = true;
    })?;
    let golden_dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let header = "BLEU-1 BLEU-2 BLEU-3 BLEU-4 METEOR ROUGE-L CIDEr";
    let mut summary = Vec::new();
    for (name, grid, label, rows) in [
        ("sweep_top_k.txt", SweepGrid::top_k_grid(0.9), "Top-k", vec!["k=1", "k=3", "k=5"]),
        ("sweep_alpha.txt", SweepGrid::alpha_grid(1), "α", vec!["0.3", "0.5", "0.7", "0.9"]),
    ] {
        let (report, timings) = sweep(TaskKind::VqaWk, &d, &p, &grid).map_err(|e| e.to_string())?;
        let text = report.render_text();
        let lines: Vec<&str> = text.lines().collect();
        let head: Vec<&str> = lines[1].split_whitespace().collect();
        let want_head: Vec<&str> = std::iter::once(label).chain(header.split(' ')).collect();
        ensure(head == want_head, || format!("{name}: header {:?}", lines[1]))?;
        let got_rows: Vec<&str> = lines[2..].iter().map(|l| l.split(' ').next().unwrap()).collect();
        ensure(got_rows == rows, || format!("{name}: rows {got_rows:?}"))?;
        for l in &lines[2..] {
            ensure(l.split_whitespace().count() == 8, || format!("{name}: row {l:?} lacks 7 metric columns"))?;
        }
        let dir = emit_sweep(&report, &timings, out.path()).map_err(|e| e.to_string())?;
        ensure(dir.ends_with(format!("sweeps/vqa_wk/{}", report.grid_hash)), || format!("{dir:?}"))?;
        ensure(fs::read_to_string(dir.join("report.txt")).map_err(|e| e.to_string())? == text, || "report.txt differs".into())?;
        let golden = golden_dir.join(name);
        if std::env::var_os("RSRAG_UPDATE_GOLDEN").is_some() {
            fs::create_dir_all(&golden_dir).map_err(|e| e.to_string())?;
            fs::write(&golden, &text).map_err(|e| e.to_string())?;
        }
        let want = fs::read_to_string(&golden).map_err(|e| format!("{golden:?}: {e}"))?;
        ensure(text == want, || format!("{name} differs from golden:\n{text}"))?;
        summary.push(format!("{} rows", rows.len()));
    }
    Ok(format!("top-k table ({}) and alpha table ({}) match golden files", summary[0], summary[1]))
}

// 8
fn dataset_fidelity() -> Result<String, String> {
    let d = synthetic_dataset(&SyntheticSpec::full_scale()).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    write_dataset(&d, dir.path()).map_err(|e| e.to_string())?;
    let loaded = load_dataset(dir.path()).map_err(|e| e.to_string())?;
    ensure(loaded == d, || "loaded dataset differs from written one".into())?;
    let stats = loaded.stats();
    let want = [
        (TaskKind::Captioning, 14_820, 11_827, 2_993),
        (TaskKind::Classification, 14_820, 11_827, 2_993),
        (TaskKind::VqaC, 22_604, 18_103, 4_501),
        (TaskKind::VqaRsk, 14_820, 11_827, 2_993),
        (TaskKind::VqaWk, 14_820, 11_827, 2_993),
    ];
    for (task, total, train, test) in want {
        let s = stats[&task];
        ensure(s.total == total && s.train == train && s.test == test, || {
            format!("{}: {}/{}/{}", task.as_str(), s.total, s.train, s.test)
        })?;
    }
    ensure(loaded.records().len() == 14_820, || format!("{} records", loaded.records().len()))?;
    Ok("14820 records; captioning/classification/VQA_RSK/VQA_WK 14820 (11827/2993), VQA_C 22604 (18103/4501)".into())
}

fn bench_once(data_dir: &Path, out: &Path) -> Result<Vec<u8>, String> {
    let d = load_dataset(data_dir).map_err(|e| e.to_string())?;
    let e = MockEmbedder::new(64);
    let (store, _) = build_store(d.records(), &e, &IngestOptions::default()).map_err(|e| e.to_string())?;
    let snap = out.join("snapshot");
    store.persist(&snap).map_err(|e| e.to_string())?;
    let loaded = VectorStore::load(&snap).map_err(|e| e.to_string())?;
    let mut cfg = PipelineConfig::for_task(TaskKind::VqaWk);
    cfg.top_k = 3;
    let p = Pipeline::from_config(Arc::new(loaded), cfg).map_err(|e| e.to_string())?;
    let run = run_task(TaskKind::VqaWk, &d, &p).map_err(|e| e.to_string())?;
    let path = emit_report(&run.report, out, ReportFormat::MachineReadable).map_err(|e| e.to_string())?;
    fs::read(path).map_err(|e| e.to_string())
}

// 9
fn reproducibility() -> Result<String, String> {
    let d = synthetic_dataset(&SyntheticSpec {
        records: 60,
        tasks: [(TaskKind::VqaWk, (20, 40))].into_iter().collect(),
        seed: 3,
    })
    .map_err(|e| e.to_string())?;
    let root = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = root.path().join("data");
    write_dataset(&d, &data).map_err(|e| e.to_string())?;
    let a = bench_once(&data, &root.path().join("a"))?;
    let b = bench_once(&data, &root.path().join("b"))?;
    ensure(a == b, || "report.json differs between runs".into())?;
    Ok(format!("two runs wrote identical {REPORT_JSON} ({} bytes)", a.len()))
}

// 10
fn snapshot_round_trip() -> Result<String, String> {
    let e = MockEmbedder::new(64);
    let records: Vec<_> = (0..400).map(|i| synthetic_record(i, 5)).collect();
    let (store, _) = build_store(&records, &e, &IngestOptions::default()).map_err(|e| e.to_string())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let id = store.persist(dir.path()).map_err(|e| e.to_string())?;
    let (loaded, loaded_id) = VectorStore::load_with_id(dir.path()).map_err(|e| e.to_string())?;
    ensure(id == loaded_id, || "snapshot id changed".into())?;
    for qn in 0..50u64 {
        let q = mock_embed(format!("snapq{qn}").as_bytes(), 64, "snap");
        for kind in [CollectionKind::Image, CollectionKind::Text] {
            for exact in [true, false] {
                let a = store.search(kind, &q, 10, exact).map_err(|e| e.to_string())?;
                let b = loaded.search(kind, &q, 10, exact).map_err(|e| e.to_string())?;
                ensure(a == b, || format!("query {qn} {kind} exact={exact}: ranked lists differ"))?;
            }
        }
    }
    // corruption: truncated vectors, then an unknown version
    let vec_path = dir.path().join("text.vec");
    let bytes = fs::read(&vec_path).map_err(|e| e.to_string())?;
    fs::write(&vec_path, &bytes[..bytes.len() - 7]).map_err(|e| e.to_string())?;
    ensure(matches!(VectorStore::load(dir.path()), Err(StoreError::CorruptSnapshot { .. })), || {
        "truncated snapshot accepted".into()
    })?;
    fs::write(&vec_path, &bytes).map_err(|e| e.to_string())?;
    let manifest = dir.path().join("manifest.json");
    let text = fs::read_to_string(&manifest).map_err(|e| e.to_string())?;
    fs::write(&manifest, text.replace("\"format_version\": 1", "\"format_version\": 2")).map_err(|e| e.to_string())?;
    ensure(
        matches!(VectorStore::load(dir.path()), Err(StoreError::CorruptSnapshot { version: Some(2), .. })),
        || "future version accepted".into(),
    )?;
    Ok("50 queries x 2 collections x exact/ANN identical after reload; corrupt snapshots rejected".into())
}

fn main() {
    let checks: [(&str, Check); 10] = [
        ("retrieval oracle equivalence", retrieval_oracle_equivalence),
        ("endpoint ranking invariance", endpoint_ranking_invariance),
        ("ANN quality", ann_quality),
        ("metric oracles", metric_oracles),
        ("closed-loop echo", closed_loop_echo),
        ("planted-retrieval classification", planted_classification),
        ("sweep harness shape", sweep_harness_shape),
        ("dataset fidelity", dataset_fidelity),
        ("reproducibility", reproducibility),
        ("snapshot round-trip", snapshot_round_trip),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS [{}] {name}: {detail} ({:.1?})", i + 1, start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {name}: {why} ({:.1?})", i + 1, start.elapsed());
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
