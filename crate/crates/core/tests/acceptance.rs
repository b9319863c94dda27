//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

mod common;

use std::collections::HashMap;
use std::path::Path;
use std::time::{Duration, Instant};

use common::{
    boost_oracle, density_oracle, expected, fixture, knn_oracle, parse_date_oracle, weekday_oracle, Reply, StubServer,
    Xs,
};
use lucid_core::agents::{
    AgentRole, BackendError, BackendKind, ChatMessage, GenerationParams, HttpBackend, HttpConfig, ScriptedSchedule,
};
use lucid_core::ingest::{drop_columns, impute_categorical, impute_coordinates, parse_csv};
use lucid_core::orchestrator::{run_ablation, run_experiment, AgentSet, RunConfig};
use lucid_core::preprocess::{dbscan, dbscan_brute, decompose_datetime, knn_relation, min_max_scale, run_pipeline, PipelineConfig, NOISE};
use lucid_core::reporting::rescore_transcript;
use lucid_core::scoring::{learning_boost, learning_boost_gap, score_response, ScoringConstants};

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn c1_boost() -> Outcome {
    let k = ScoringConstants::default();
    ensure!(learning_boost(0, &k) == 0.0, "boost(0) = {}", learning_boost(0, &k));
    let b100 = learning_boost(100, &k);
    ensure!((b100 - 0.4966310265).abs() <= 1e-9, "boost(100) = {b100}");
    let oracle = boost_oracle(100);
    ensure!((b100 - oracle).abs() <= 1e-9, "boost(100) = {b100}, oracle {oracle}");
    for e in [1u64, 7, 14, 50, 250, 600] {
        let (v, o) = (learning_boost(e, &k), boost_oracle(e));
        ensure!((v - o).abs() <= 1e-15, "boost({e}) = {v}, oracle {o}");
    }
    // Strictly increasing boost == strictly decreasing remaining gap to the
    // asymptote. The gap stays representable over the whole range while the
    // boost itself rounds to the asymptote in f64 from about epoch 750.
    let mut last_strict = 0;
    for e in 1..=10_000u64 {
        let (g0, g1) = (learning_boost_gap(e - 1, &k), learning_boost_gap(e, &k));
        ensure!(g1 < g0, "gap not strictly decreasing at epoch {e}: {g0} -> {g1}");
        let (b0, b1) = (learning_boost(e - 1, &k), learning_boost(e, &k));
        ensure!(b1 >= b0, "f64 boost decreased at epoch {e}");
        if b1 > b0 {
            last_strict = e;
        }
    }
    Ok(format!(
        "boost(100) = {b100:.12}; strict over 0..=10000 on the exact complement; f64 boost non-decreasing, last strict step at epoch {last_strict}"
    ))
}

const WORDS: [&str; 14] = [
    "crime", "Crime", "CRIMES", "hotspot", "hotspots", "predict", "predicted", "suggest", "the", "north", "side",
    "theft", "at", "night",
];

fn random_text(rng: &mut Xs) -> String {
    let n = rng.below(40);
    let mut words: Vec<String> = (0..n).map(|_| WORDS[rng.below(WORDS.len())].to_string()).collect();
    if rng.below(5) == 0 {
        words.push("crime-hotspot,predict.".into());
    }
    words.join(if rng.below(2) == 0 { " " } else { "  " })
}

fn c2_bounds() -> Outcome {
    let k = ScoringConstants::default();
    let mut rng = Xs(0xC0FFEE);
    let mut clamped_hi = 0;
    for i in 0..10_000 {
        let role = AgentRole::ALL[rng.below(4)];
        let text = random_text(&mut rng);
        let mut history: Vec<String> = (0..rng.below(4)).map(|_| random_text(&mut rng)).collect();
        if rng.below(3) == 0 {
            history.push(format!(" {} ", text.to_uppercase()));
        }
        let epoch = rng.next() % 20_000;
        let s = score_response(role, &text, &history, epoch, &k);
        ensure!((0.0..=1.0).contains(&s.clamped), "tuple {i}: clamped {}", s.clamped);
        let sum = s.base + s.bonus + s.penalty + s.boost;
        ensure!((s.raw - sum).abs() <= 1e-12, "tuple {i}: raw {} vs sum {sum}", s.raw);
        clamped_hi += (s.raw > 1.0) as usize;
    }
    Ok(format!("10000 tuples in bounds ({clamped_hi} clamped from above)"))
}

fn c3_penalty() -> Outcome {
    let k = ScoringConstants::default();
    let mut rng = Xs(0xBEEF);
    for i in 0..2_000 {
        let role = AgentRole::ALL[rng.below(4)];
        let text = random_text(&mut rng);
        let epoch = rng.next() % 1_000;
        let fresh = score_response::<&str>(role, &text, &[], epoch, &k);
        let other = random_text(&mut rng);
        let repeated = score_response(role, &text, &[other.as_str(), text.as_str()], epoch, &k);
        ensure!(
            repeated.raw == fresh.raw - 0.05,
            "case {i}: {} vs {} - 0.05",
            repeated.raw,
            fresh.raw
        );
    }
    Ok("2000 texts: repeated.raw == fresh.raw - 0.05 bit-exactly".into())
}

fn check_partition(points: &[(f64, f64)], labels: &[i64], eps: f64, min_pts: usize) -> Result<(), String> {
    let oracle = density_oracle(points, eps, min_pts);
    let mut forward: HashMap<i64, usize> = HashMap::new();
    let mut backward: HashMap<usize, i64> = HashMap::new();
    for i in 0..points.len() {
        if let Some(comp) = oracle.component[i] {
            ensure!(labels[i] != NOISE, "core point {i} labelled noise");
            ensure!(*forward.entry(labels[i]).or_insert(comp) == comp, "label {} spans two components", labels[i]);
            ensure!(*backward.entry(comp).or_insert(labels[i]) == labels[i], "component split across labels");
        }
    }
    for i in 0..points.len() {
        if oracle.core[i] {
            continue;
        }
        if oracle.reachable[i].is_empty() {
            ensure!(labels[i] == NOISE, "point {i} unreachable but labelled {}", labels[i]);
        } else {
            let comp = forward.get(&labels[i]).copied();
            ensure!(
                comp.is_some_and(|c| oracle.reachable[i].contains(&c)),
                "border point {i} assigned to a cluster it cannot reach"
            );
        }
    }
    Ok(())
}

fn c4_dbscan() -> Outcome {
    let mut rng = Xs(0xD85C);
    let mut clusters = 0;
    for inst in 0..50 {
        let n = 1 + rng.below(200);
        let clumped = rng.below(2) == 0;
        let centers: Vec<(f64, f64)> = (0..4).map(|_| (rng.unit(), rng.unit())).collect();
        let points: Vec<(f64, f64)> = (0..n)
            .map(|_| {
                if clumped && rng.below(3) != 0 {
                    let c = centers[rng.below(4)];
                    ((c.0 + 0.05 * (rng.unit() - 0.5)).clamp(0.0, 1.0), (c.1 + 0.05 * (rng.unit() - 0.5)).clamp(0.0, 1.0))
                } else {
                    (rng.unit(), rng.unit())
                }
            })
            .collect();
        let eps = 0.01 + 0.09 * rng.unit();
        let min_pts = 1 + rng.below(8);
        for (name, labels) in [("grid", dbscan(&points, eps, min_pts)), ("brute", dbscan_brute(&points, eps, min_pts))] {
            check_partition(&points, &labels, eps, min_pts).map_err(|e| format!("instance {inst} ({name}): {e}"))?;
        }
        clusters += lucid_core::preprocess::dbscan(&points, eps, min_pts)
            .iter()
            .filter(|&&l| l != NOISE)
            .max()
            .map_or(0, |m| m + 1);
    }
    Ok(format!("50 instances match the union-find oracle ({clusters} clusters total)"))
}

fn c5_knn() -> Outcome {
    let hand = knn_relation(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0)], 2).map_err(|e| e.to_string())?;
    ensure!(hand == vec![2.0, 1.5, 2.5], "hand case gave {hand:?}");
    let mut rng = Xs(0x4E4E);
    let mut worst: f64 = 0.0;
    for inst in 0..20 {
        let n = 2 + rng.below(499);
        let points: Vec<(f64, f64)> = (0..n).map(|_| (rng.unit(), rng.unit())).collect();
        let got = knn_relation(&points, 10).map_err(|e| e.to_string())?;
        let want = knn_oracle(&points, 10);
        for (i, (a, b)) in got.iter().zip(&want).enumerate() {
            worst = worst.max((a - b).abs());
            ensure!((a - b).abs() <= 1e-9, "instance {inst}, point {i}: {a} vs {b}");
        }
    }
    Ok(format!("hand case exact; 20 instances, max deviation {worst:.1e}"))
}

fn c6_preprocess() -> Outcome {
    let exp = expected("crimes_1000");
    let parsed = parse_csv(fixture("crimes_1000.csv")).map_err(|e| e.to_string())?;
    ensure!(parsed.records.len() == 1000, "parsed {} rows", parsed.records.len());
    let dates: Vec<String> = parsed.records.iter().map(|r| r.date_text.clone()).collect();
    let pruned = drop_columns(parsed.records);
    let missing_ward = pruned.iter().filter(|r| r.ward.is_none()).count();
    ensure!(missing_ward as u64 == exp["missing_ward"].as_u64().unwrap(), "missing ward {missing_ward}");
    let clean = impute_coordinates(impute_categorical(pruned)).map_err(|e| e.to_string())?;
    let absent = clean
        .iter()
        .map(|r| {
            r.location_description.is_none() as usize
                + r.ward.is_none() as usize
                + r.community_area.is_none() as usize
                + r.latitude.is_none() as usize
                + r.longitude.is_none() as usize
        })
        .sum::<usize>();
    ensure!(absent == 0, "{absent} absent values after imputation");

    let (records, summary) = run_pipeline(&clean, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    ensure!(summary.record_count == 1000, "record count {}", summary.record_count);
    for (i, r) in records.iter().enumerate() {
        let s = &r.spatial;
        ensure!((0.0..=1.0).contains(&s.lat_norm) && (0.0..=1.0).contains(&s.lon_norm), "row {i} out of range");
        let (y, m, d, h) = parse_date_oracle(&dates[i]);
        let t = &r.temporal;
        ensure!(
            (t.year as i64, t.month as i64, t.day as i64, t.hour as i64) == (y, m, d, h),
            "row {i}: date fields differ"
        );
        ensure!(t.weekday == weekday_oracle(y, m, d), "row {i}: weekday {} for {}", t.weekday, dates[i]);
    }
    let _ = decompose_datetime(&dates[0]).map_err(|e| e.to_string())?;

    let mut rng = Xs(0x5CA1E);
    for v in 0..1000 {
        let n = 1 + rng.below(60);
        let values: Vec<f64> = (0..n).map(|_| (rng.unit() - 0.5) * 10f64.powi(rng.below(7) as i32 - 3)).collect();
        let scaled = min_max_scale(&values).map_err(|e| e.to_string())?;
        for i in 0..n {
            ensure!((0.0..=1.0).contains(&scaled[i]), "vector {v}: {} out of [0,1]", scaled[i]);
            for j in 0..n {
                if values[i] < values[j] {
                    ensure!(scaled[i] <= scaled[j], "vector {v}: order broken at ({i}, {j})");
                } else if values[i] == values[j] {
                    ensure!(scaled[i] == scaled[j], "vector {v}: ties broken at ({i}, {j})");
                }
            }
        }
    }
    Ok(format!(
        "1000 rows clean; {} clusters, noise {:.3}; weekday oracle agrees; 1000 vectors order-preserved",
        summary.cluster_count, summary.noise_fraction
    ))
}

fn base_config(out: &Path, epochs: u64, set: AgentSet) -> RunConfig {
    RunConfig {
        epochs,
        agent_set: set,
        seed: 7,
        dataset_path: fixture("crimes_1000.csv"),
        output_dir: out.to_path_buf(),
        ..Default::default()
    }
}

fn c7_replay() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut elapsed = Duration::ZERO;
    for arm in ["a", "b"] {
        let started = Instant::now();
        run_experiment(&base_config(&dir.path().join(arm), 100, AgentSet::ThreeAgent)).map_err(|e| e.to_string())?;
        elapsed += started.elapsed();
    }
    for name in ["transcript.jsonl", "scores.csv", "learning_curve.svg"] {
        let a = std::fs::read(dir.path().join("a").join(name)).map_err(|e| e.to_string())?;
        let b = std::fs::read(dir.path().join("b").join(name)).map_err(|e| e.to_string())?;
        ensure!(a == b, "{name} differs between runs");
    }
    let per_epoch = elapsed.as_secs_f64() * 1000.0 / 200.0;
    ensure!(per_epoch < 50.0, "average epoch time {per_epoch:.2} ms");
    Ok(format!("artifacts byte-identical; {per_epoch:.3} ms per epoch including preprocessing"))
}

fn c8_trend() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for set in [AgentSet::ThreeAgent, AgentSet::FourAgent] {
        let mut cfg = base_config(dir.path(), 100, set);
        cfg.backend = BackendKind::Scripted { seed: None, schedule: Some(ScriptedSchedule::non_repeating()) };
        let art = run_experiment(&cfg).map_err(|e| e.to_string())?;
        for s in &art.series {
            ensure!(
                s.values.windows(2).all(|w| w[1] >= w[0]),
                "{set:?} {}: series decreases",
                s.role
            );
            let (first, last) = (s.values[0], *s.values.last().unwrap());
            ensure!(last > first, "{set:?} {}: final {last} <= initial {first}", s.role);
        }
    }
    Ok("every role non-decreasing with final > initial in both agent sets".into())
}

fn c9_ablation() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = base_config(dir.path(), 100, AgentSet::ThreeAgent);
    let report = run_ablation(&cfg).map_err(|e| e.to_string())?;
    ensure!(report.same_data, "arms saw different data");
    let red = report.redundancy_row();
    ensure!(red.extended < red.baseline, "redundancy {} vs baseline {}", red.extended, red.baseline);
    for row in &report.rows[..3] {
        ensure!(row.extended >= row.baseline, "{}: {} < {}", row.metric, row.extended, row.baseline);
    }
    let deltas: Vec<String> = report.rows[..3].iter().map(|r| format!("{:+.3}", r.improvement)).collect();
    Ok(format!(
        "redundancy {:.1}% -> {:.1}% ({:+.1} pp); score deltas {}",
        red.baseline * 100.0,
        red.extended * 100.0,
        -red.improvement * 100.0,
        deltas.join(" ")
    ))
}

fn c10_http() -> Outcome {
    let cfg = |url: &str, retries, timeout_ms| HttpConfig {
        endpoint: url.to_string(),
        model_name: "stub-model".into(),
        timeout_ms,
        max_retries: retries,
    };
    let msgs = [ChatMessage::new("system", "be brief"), ChatMessage::new("user", "say OK")];
    let params = GenerationParams { max_tokens: 16, temperature: 0.0, seed: 7 };
    let fast = |c: HttpConfig| HttpBackend::new(c).map(|b| b.with_backoff_base(Duration::from_millis(5)));

    let stub = StubServer::start(vec![Reply::ok_text("OK")]);
    let mut b = fast(cfg(&stub.url, 0, 2000)).map_err(|e| e.to_string())?;
    let text = b.chat(&msgs, &params).map_err(|e| e.to_string())?;
    ensure!(text == "OK", "passthrough gave {text:?}");
    let rec = &stub.recorded()[0];
    ensure!(rec.method == "POST" && rec.path == "/v1/chat/completions", "{} {}", rec.method, rec.path);
    let body: serde_json::Value = serde_json::from_str(&rec.body).map_err(|e| e.to_string())?;
    let want = serde_json::json!({
        "model": "stub-model",
        "messages": [{"role": "system", "content": "be brief"}, {"role": "user", "content": "say OK"}],
        "max_tokens": 16,
        "temperature": 0.0,
        "seed": 7
    });
    ensure!(body == want, "request body {body}");

    let stub = StubServer::start(vec![Reply::raw(500, "x"), Reply::raw(500, "x"), Reply::ok_text("late OK")]);
    let mut b = fast(cfg(&stub.url, 3, 2000)).map_err(|e| e.to_string())?;
    let text = b.chat(&msgs, &params).map_err(|e| e.to_string())?;
    ensure!(text == "late OK" && b.last_retries() == 2, "retry path: {text:?}, {} retries", b.last_retries());

    let stub = StubServer::start(vec![Reply::raw(400, "bad request")]);
    let mut b = fast(cfg(&stub.url, 3, 2000)).map_err(|e| e.to_string())?;
    let r = b.chat(&msgs, &params);
    ensure!(matches!(r, Err(BackendError::Request { status: 400, .. })), "4xx gave {r:?}");
    ensure!(stub.count() == 1, "4xx was retried ({} requests)", stub.count());

    let stub = StubServer::start(vec![Reply::ok_text("slow").delayed(Duration::from_millis(600))]);
    let mut b = fast(cfg(&stub.url, 0, 100)).map_err(|e| e.to_string())?;
    let r = b.chat(&msgs, &params);
    ensure!(matches!(r, Err(BackendError::Unavailable { .. })), "timeout gave {r:?}");
    Ok("passthrough, 5xx retry, 4xx no-retry, timeout, request shape".into())
}

fn c11_rescore() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let cfg = base_config(dir.path(), 30, AgentSet::FourAgent);
    run_experiment(&cfg).map_err(|e| e.to_string())?;
    let original = std::fs::read_to_string(dir.path().join("scores.csv")).map_err(|e| e.to_string())?;
    let rescored = rescore_transcript(&dir.path().join("transcript.jsonl"), &cfg.scoring).map_err(|e| e.to_string())?;
    ensure!(rescored == original, "rescored CSV differs");
    Ok(format!("{} rows reproduced byte-identically", original.lines().count() - 1))
}

fn main() {
    let criteria: [(&str, f64, fn() -> Outcome); 11] = [
        ("scoring formula fidelity", 1.0, c1_boost),
        ("score bounds", 5.0, c2_bounds),
        ("repetition penalty contract", 1.0, c3_penalty),
        ("DBSCAN oracle equivalence", 10.0, c4_dbscan),
        ("kNN relation oracle equivalence", 10.0, c5_knn),
        ("preprocessing invariants", 5.0, c6_preprocess),
        ("deterministic replay", 60.0, c7_replay),
        ("upward learning trend", 60.0, c8_trend),
        ("ablation direction", 120.0, c9_ablation),
        ("HTTP backend contract", 10.0, c10_http),
        ("rescore idempotence", 5.0, c11_rescore),
    ];
    let mut failed = 0;
    for (i, (name, budget, check)) in criteria.iter().enumerate() {
        let started = Instant::now();
        let outcome = check();
        let secs = started.elapsed().as_secs_f64();
        let (status, detail) = match &outcome {
            Ok(d) => ("PASS", d.clone()),
            Err(d) => ("FAIL", d.clone()),
        };
        if outcome.is_err() {
            failed += 1;
        }
        let over = if secs > *budget { format!(" [over {budget}s budget]") } else { String::new() };
        println!("criterion {:>2} {name}: {status} ({secs:.2}s){over} - {detail}", i + 1);
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
