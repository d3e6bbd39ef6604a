//! Acceptance gate. Runs every primary criterion with the deterministic mock
//! provider, prints one PASS/FAIL line each and exits non-zero on any failure.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use async_trait::async_trait;
use neurowise_core::agents::{AgentSuite, ChatProvider, MockProvider, ProviderError, ProviderRequest, ProviderResponse};
use neurowise_core::config::{ServiceConfig, DEFAULT_SCENARIO_ID};
use neurowise_core::corpus::{bundled_scripts, Script};
use neurowise_core::orchestrator::{
    parse_export, replay_transcript, ContactFrequency, Gender, Orchestrator, ServiceError, StratumKey,
};
use neurowise_core::psychometrics::{
    cliffs_delta, cliffs_delta_from_u, cronbach_alpha, icc_2_1, mann_whitney_u, wilcoxon_signed_rank, EffectLabel,
    RatingMatrix,
};
use neurowise_core::Condition;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn run(id: u32, name: &str, budget: Duration, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panicked".into()))
    });
    let elapsed = start.elapsed();
    let outcome = outcome.and_then(|detail| {
        if elapsed <= budget {
            Ok(detail)
        } else {
            Err(format!("{detail}; took {elapsed:.2?}, budget {budget:?}"))
        }
    });
    match &outcome {
        Ok(detail) => println!("PASS  {id}. {name} [{elapsed:.2?}] {detail}"),
        Err(detail) => println!("FAIL  {id}. {name} [{elapsed:.2?}] {detail}"),
    }
    outcome.is_ok()
}

/// Tie-free samples of n each whose first-sample U equals `u`.
fn realize_u(n: usize, u: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(u <= n * n);
    // Shift the top x elements upward past y elements, largest first.
    let mut shifts = vec![0usize; n];
    let mut need = u;
    for s in shifts.iter_mut().rev() {
        *s = need.min(n);
        need -= *s;
    }
    let x: Vec<usize> = (0..n).map(|i| i + shifts[i]).collect();
    let y: Vec<usize> = (0..2 * n).filter(|p| !x.contains(p)).collect();
    let as_f = |v: Vec<usize>| v.into_iter().map(|p| p as f64 + 1.0).collect();
    (as_f(x), as_f(y))
}

fn brute_mwu_p(x: &[f64], y: &[f64]) -> f64 {
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let u = |mask: u32| {
        let mut s = 0.0;
        for (i, a) in pooled.iter().enumerate().filter(|(i, _)| mask >> i & 1 == 1) {
            for (_, b) in pooled.iter().enumerate().filter(|(j, _)| mask >> j & 1 == 0 && *j != i) {
                s += if a > b {
                    1.0
                } else if a == b {
                    0.5
                } else {
                    0.0
                };
            }
        }
        s
    };
    let observed = u((1 << x.len()) - 1);
    let (mut le, mut ge, mut total) = (0u64, 0u64, 0u64);
    for mask in 0u32..(1 << pooled.len()) {
        if mask.count_ones() as usize == x.len() {
            let v = u(mask);
            total += 1;
            le += u64::from(v <= observed);
            ge += u64::from(v >= observed);
        }
    }
    (2.0 * le.min(ge) as f64 / total as f64).min(1.0)
}

fn brute_wilcoxon_p(diffs: &[f64]) -> f64 {
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks: Vec<f64> = abs
        .iter()
        .map(|a| {
            let below = abs.iter().filter(|b| *b < a).count() as f64;
            let tied = abs.iter().filter(|b| *b == a).count() as f64;
            below + (tied + 1.0) / 2.0
        })
        .collect();
    let total: f64 = ranks.iter().sum();
    let observed: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let m = observed.min(total - observed);
    let n = ranks.len();
    let hits = (0u32..1 << n)
        .filter(|mask| {
            let w: f64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| ranks[i]).sum();
            w.min(total - w) <= m
        })
        .count();
    (hits as f64 / (1u64 << n) as f64).min(1.0)
}

/// ICC(2,1) straight from the two-way ANOVA definitions.
fn anova_icc(rows: &[Vec<f64>]) -> f64 {
    let (n, k) = (rows.len() as f64, rows[0].len() as f64);
    let grand = rows.iter().flatten().sum::<f64>() / (n * k);
    let ss_total: f64 = rows.iter().flatten().map(|v| (v - grand).powi(2)).sum();
    let ss_rows: f64 = rows.iter().map(|r| k * (r.iter().sum::<f64>() / k - grand).powi(2)).sum();
    let ss_cols: f64 = (0..rows[0].len())
        .map(|j| n * (rows.iter().map(|r| r[j]).sum::<f64>() / n - grand).powi(2))
        .sum();
    let msr = ss_rows / (n - 1.0);
    let msc = ss_cols / (k - 1.0);
    let mse = (ss_total - ss_rows - ss_cols) / ((n - 1.0) * (k - 1.0));
    (msr - mse) / (msr + (k - 1.0) * mse + k * (msc - mse) / n)
}

fn standardize(v: &[f64]) -> Vec<f64> {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let sd = (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt();
    v.iter().map(|x| (x - m) / sd).collect()
}

fn corr_of_standardized(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (a.len() - 1) as f64
}

fn mock_orchestrator(seed: u64, provider: Arc<dyn ChatProvider>) -> Orchestrator {
    let mut config = ServiceConfig::bundled();
    config.assignment.seed = Some(seed);
    Orchestrator::new(config, AgentSuite::bundled(), provider)
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread()
        .worker_threads(2)
        .enable_all()
        .build()
        .expect("runtime")
}

/// Mock provider with injected transient failures and optional latency.
struct Harness {
    inner: MockProvider,
    calls: AtomicU64,
    fail_one_in: u64,
    delay: Duration,
}

impl Harness {
    fn new(fail_one_in: u64, delay: Duration) -> Self {
        Self {
            inner: MockProvider::bundled(),
            calls: AtomicU64::new(0),
            fail_one_in,
            delay,
        }
    }
}

#[async_trait]
impl ChatProvider for Harness {
    async fn complete(&self, request: &ProviderRequest) -> Result<ProviderResponse, ProviderError> {
        let n = self.calls.fetch_add(1, Ordering::SeqCst) + 1;
        if !self.delay.is_zero() {
            tokio::time::sleep(self.delay).await;
        }
        if self.fail_one_in > 0 && n.wrapping_mul(0x9e3779b97f4a7c15).is_multiple_of(self.fail_one_in) {
            return Err(ProviderError::Transient {
                status: 503,
                attempts: 3,
            });
        }
        self.inner.complete(request).await
    }

    fn name(&self) -> &str {
        "acceptance-mock"
    }
}

fn criterion_1() -> Check {
    let mut out = Vec::new();
    for (u, expected) in [(57.0, -0.4933), (59.0, -0.4756)] {
        let d = cliffs_delta_from_u(u, 15, 15).map_err(|e| e.to_string())?;
        let label = EffectLabel::from_delta(d);
        ensure((d - expected).abs() <= 0.0005, || format!("U={u}: delta {d:.4}, expected {expected}"))?;
        ensure(label == EffectLabel::Large, || format!("U={u}: label {label:?}"))?;
        let (x, y) = realize_u(15, u as usize);
        let (direct, _) = cliffs_delta(&x, &y).map_err(|e| e.to_string())?;
        ensure((direct - d).abs() < 1e-12, || format!("U={u}: double loop gives {direct}"))?;
        out.push(format!("U={u} -> {d:.4} {}", label.as_str()));
    }
    Ok(out.join(", "))
}

fn criterion_2() -> Check {
    let mut out = Vec::new();
    for (u, lo, hi) in [(57usize, 0.015, 0.025), (59, 0.025, 0.035)] {
        let (x, y) = realize_u(15, u);
        let r = mann_whitney_u(&x, &y).map_err(|e| e.to_string())?;
        ensure(r.u_x == u as f64, || format!("realized U {} != {u}", r.u_x))?;
        ensure(r.exact, || format!("U={u}: normal approximation used ({})", r.test.method))?;
        let p = r.test.p_value;
        ensure((lo..=hi).contains(&p), || format!("U={u}: p {p:.6} outside [{lo}, {hi}]"))?;
        out.push(format!("U={u} p={p:.4}"));
    }
    Ok(out.join(", "))
}

fn criterion_3() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for case in 0..200 {
        let n1 = rng.random_range(1..=8);
        let n2 = rng.random_range(1..=8);
        let mut pool: Vec<f64> = (0..60).map(f64::from).collect();
        pool.shuffle(&mut rng);
        let (x, y) = (pool[..n1].to_vec(), pool[n1..n1 + n2].to_vec());
        let r = mann_whitney_u(&x, &y).map_err(|e| e.to_string())?;
        let oracle = brute_mwu_p(&x, &y);
        ensure(r.exact && r.test.p_value == oracle, || {
            format!("MWU case {case} {x:?} {y:?}: {} vs oracle {oracle}", r.test.p_value)
        })?;
    }
    for case in 0..200 {
        let n = rng.random_range(1..=12);
        let pre: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..30))).collect();
        let post: Vec<f64> = pre
            .iter()
            .map(|p| {
                let d = rng.random_range(1..=15) * if rng.random_bool(0.5) { 1 } else { -1 };
                p + f64::from(d)
            })
            .collect();
        let diffs: Vec<f64> = pre.iter().zip(&post).map(|(a, b)| b - a).collect();
        let w = wilcoxon_signed_rank(&pre, &post).map_err(|e| e.to_string())?;
        let oracle = brute_wilcoxon_p(&diffs);
        ensure(w.exact && w.test.p_value == oracle, || {
            format!("Wilcoxon case {case} {diffs:?}: {} vs oracle {oracle}", w.test.p_value)
        })?;
    }
    Ok("200 + 200 cases match enumeration exactly".into())
}

fn criterion_4() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let n = rng.random_range(2..=10);
        let k = rng.random_range(2..=4);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..k).map(|_| rng.random_range(0.0..100.0)).collect())
            .collect();
        let r = icc_2_1(&RatingMatrix::new(rows.clone()).map_err(|e| e.to_string())?, 0.95)
            .map_err(|e| format!("case {case}: {e}"))?;
        let diff = (r.icc - anova_icc(&rows)).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-9, || format!("case {case}: {} vs oracle {}", r.icc, anova_icc(&rows)))?;
    }
    let base = [12.0, 35.0, 50.0, 64.0, 80.0, 95.0];
    let perfect: Vec<Vec<f64>> = base.iter().map(|v| vec![*v, *v]).collect();
    let offset: Vec<Vec<f64>> = base.iter().map(|v| vec![*v, v + 5.0]).collect();
    let p = icc_2_1(&RatingMatrix::new(perfect).unwrap(), 0.95).map_err(|e| e.to_string())?;
    ensure(p.icc == 1.0, || format!("perfect agreement gives {}", p.icc))?;
    let o = icc_2_1(&RatingMatrix::new(offset).unwrap(), 0.95).map_err(|e| e.to_string())?;
    ensure(o.icc < 1.0, || format!("offset rater gives {}", o.icc))?;
    Ok(format!("max |diff| {worst:.1e}; perfect 1.0; offset {:.4}", o.icc))
}

fn criterion_5() -> Check {
    // Two standardized items with inter-item correlation exactly 0.7241.
    let r = 0.7241f64;
    let n = 200;
    let a = standardize(&(0..n).map(|i| (i as f64 * 0.917).sin()).collect::<Vec<_>>());
    let raw = standardize(&(0..n).map(|i| (i as f64 * 2.113 + 0.3).cos()).collect::<Vec<_>>());
    let proj = corr_of_standardized(&a, &raw);
    let orth = standardize(&raw.iter().zip(&a).map(|(b, x)| b - proj * x).collect::<Vec<_>>());
    let b: Vec<f64> = a.iter().zip(&orth).map(|(x, e)| r * x + (1.0 - r * r).sqrt() * e).collect();
    let realized = corr_of_standardized(&a, &standardize(&b));
    let items: Vec<Vec<f64>> = a.iter().zip(&b).map(|(x, y)| vec![*x, *y]).collect();
    let alpha = cronbach_alpha(&items).map_err(|e| e.to_string())?;
    ensure((realized - r).abs() < 1e-9, || format!("fixture r {realized}"))?;
    ensure((alpha - 0.84).abs() <= 0.005, || format!("alpha {alpha:.4}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let m = rng.random_range(5..40);
        let x = standardize(&(0..m).map(|_| rng.random_range(0.0..10.0)).collect::<Vec<_>>());
        let y = standardize(&(0..m).map(|_| rng.random_range(0.0..10.0)).collect::<Vec<_>>());
        let rr = corr_of_standardized(&x, &y);
        if rr <= -0.99 {
            continue;
        }
        let items: Vec<Vec<f64>> = x.iter().zip(&y).map(|(p, q)| vec![*p, *q]).collect();
        let got = cronbach_alpha(&items).map_err(|e| e.to_string())?;
        let diff = (got - 2.0 * rr / (1.0 + rr)).abs();
        worst = worst.max(diff);
        ensure(diff <= 1e-9, || format!("case {case}: alpha {got} vs {}", 2.0 * rr / (1.0 + rr)))?;
    }
    Ok(format!("alpha {alpha:.4} at r=0.7241; Spearman-Brown max |diff| {worst:.1e}"))
}

fn criterion_6() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = dir.path().join("annotations.csv");
    let report = dir.path().join("validation.json");
    let bin = env!("CARGO_BIN_EXE_neurowise");
    let corpus = Command::new(bin)
        .args(["corpus", "--seed", "1", "--out"])
        .arg(&csv)
        .env_remove("NEUROWISE_API_KEY")
        .output()
        .map_err(|e| e.to_string())?;
    ensure(corpus.status.success(), || {
        format!("corpus failed: {}", String::from_utf8_lossy(&corpus.stderr))
    })?;
    let validate = Command::new(bin)
        .args(["validate", "--format", "json", "--annotations"])
        .arg(&csv)
        .arg("--report")
        .arg(&report)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(validate.status.success(), || {
        format!("validate failed: {}", String::from_utf8_lossy(&validate.stderr))
    })?;
    let v: Value = serde_json::from_slice(&validate.stdout).map_err(|e| e.to_string())?;
    let on_disk: Value = serde_json::from_slice(&std::fs::read(&report).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(v == on_disk, || "stdout and report file differ".into())?;
    let num = |path: &[&str]| path.iter().fold(&v, |acc, k| &acc[*k]).as_f64().unwrap_or(f64::NAN);
    let (icc, r, d) = (num(&["icc", "icc"]), num(&["algorithm_vs_raters", "r"]), num(&["cohens_d"]));
    let (turns, convs) = (num(&["turns"]), num(&["conversations"]));
    ensure((turns, convs) == (63.0, 15.0), || format!("{turns} turns in {convs} conversations"))?;
    ensure((icc - 1.0).abs() < 1e-12, || format!("ICC {icc}"))?;
    ensure(r >= 0.8, || format!("r {r:.3} < 0.8"))?;
    ensure(d >= 3.0, || format!("d {d:.3} < 3.0"))?;
    Ok(format!("63 turns / 15 conversations: ICC {icc:.3}, r {r:.3}, d {d:.2}"))
}

async fn play(o: &Orchestrator, script: &Script, condition: Condition) -> Result<String, String> {
    let s = o
        .create_session_with_condition(condition, &script.scenario_id)
        .await
        .map_err(|e| e.to_string())?;
    for t in &script.turns {
        o.process_turn(&s.id, &t.text).await.map_err(|e| e.to_string())?;
    }
    o.export_session(&s.id).await.map_err(|e| e.to_string())
}

fn criterion_7() -> Check {
    let rt = runtime();
    let scripts = bundled_scripts();
    let mut transcripts = 0;
    let mut turns = 0;
    for condition in [Condition::NeuroWise, Condition::Baseline] {
        for script in &scripts {
            let (export, report) = rt.block_on(async {
                let original = mock_orchestrator(7, Arc::new(MockProvider::bundled()));
                let export = play(&original, script, condition).await?;
                let records = parse_export(&export).map_err(|e| e.to_string())?;
                let fresh = mock_orchestrator(70, Arc::new(MockProvider::bundled()));
                let report = replay_transcript(&fresh, &records).await.map_err(|e| e.to_string())?;
                Ok::<_, String>((records, report))
            })?;
            ensure(report.is_identical(), || {
                format!(
                    "{} ({condition:?}): {} mismatches, {} unplayed; first {:?}",
                    script.id,
                    report.mismatches.len(),
                    report.unplayed_turns,
                    report.mismatches.first()
                )
            })?;
            ensure(report.turns_compared == script.turns.len(), || {
                format!("{}: compared {} of {}", script.id, report.turns_compared, script.turns.len())
            })?;
            transcripts += 1;
            turns += export.len();
        }
    }
    Ok(format!("{transcripts} transcripts, {turns} turns identical"))
}

const WORDS: &[&str] = &[
    "I understand",
    "that must be hard",
    "calm down",
    "you're overreacting",
    "we could order pizza",
    "would you like",
    "I will open the window",
    "turn on the fan",
    "hurry up",
    "right now",
    "whatever",
    "it's just food",
    "sorry",
    "okay",
    "dinner",
    "routines matter",
    "stop complaining",
    "🍕",
    "¿qué?",
    "\t",
    "!!!",
    "lid",
    "quiet room",
];

fn fuzz_text(rng: &mut ChaCha8Rng) -> String {
    if rng.random_ratio(1, 50) {
        return " \n ".into();
    }
    let n = rng.random_range(1..6);
    let mut parts: Vec<String> = (0..n).map(|_| WORDS[rng.random_range(0..WORDS.len())].to_string()).collect();
    if rng.random_ratio(1, 10) {
        parts.push((0..rng.random_range(1..20)).map(|_| rng.random_range('!'..'~')).collect());
    }
    parts.join(if rng.random_bool(0.5) { " " } else { ", " })
}

async fn fuzz_condition(condition: Condition, seed: u64) -> Result<(usize, usize, usize), String> {
    let o = mock_orchestrator(seed, Arc::new(Harness::new(9, Duration::ZERO)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut session = o
        .create_session_with_condition(condition, DEFAULT_SCENARIO_ID)
        .await
        .map_err(|e| e.to_string())?;
    let (mut ok, mut failed, mut sessions) = (0, 0, 1);
    for turn in 0..1000 {
        let before = o.session_snapshot(&session.id).await.map_err(|e| e.to_string())?;
        let text = fuzz_text(&mut rng);
        match o.process_turn(&session.id, &text).await {
            Ok(result) => {
                ok += 1;
                let body = serde_json::to_value(&result).map_err(|e| e.to_string())?;
                let view = serde_json::to_value(o.session_view(&session.id).await.map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?;
                if condition == Condition::Baseline {
                    ensure(body.get("stress_view").is_none() && body.get("support").is_none(), || {
                        format!("turn {turn}: baseline result leaks {body}")
                    })?;
                    ensure(view.get("stress").is_none() && view.get("support").is_none(), || {
                        format!("turn {turn}: baseline view leaks stress or support")
                    })?;
                } else {
                    ensure(body.get("stress_view").is_some(), || format!("turn {turn}: missing stress"))?;
                }
                let after = o.session_snapshot(&session.id).await.map_err(|e| e.to_string())?;
                ensure(after.stress.level <= 100, || format!("turn {turn}: stress {}", after.stress.level))?;
                ensure(after.turns.iter().all(|t| t.stress_after <= 100 && t.stress_before <= 100), || {
                    format!("turn {turn}: recorded stress out of range")
                })?;
                if !result.session_lifecycle.is_active() {
                    session = o
                        .create_session_with_condition(condition, DEFAULT_SCENARIO_ID)
                        .await
                        .map_err(|e| e.to_string())?;
                    sessions += 1;
                }
            }
            Err(e) => {
                failed += 1;
                ensure(!e.is_conflict(), || format!("turn {turn}: unexpected conflict {e}"))?;
                let after = o.session_snapshot(&session.id).await.map_err(|e| e.to_string())?;
                ensure(after == before, || format!("turn {turn}: state changed after error {e}"))?;
            }
        }
    }
    Ok((ok, failed, sessions))
}

async fn double_sends(condition: Condition) -> Result<usize, String> {
    let o = Arc::new(mock_orchestrator(8, Arc::new(Harness::new(0, Duration::from_millis(5)))));
    let pairs = 25;
    for i in 0..pairs {
        let s = o
            .create_session_with_condition(condition, DEFAULT_SCENARIO_ID)
            .await
            .map_err(|e| e.to_string())?;
        let (a, b) = tokio::join!(o.process_turn(&s.id, "Okay."), o.process_turn(&s.id, "Hurry up."));
        let conflicts = [&a, &b]
            .iter()
            .filter(|r| matches!(r, Err(ServiceError::TurnInFlight(_))))
            .count();
        ensure(a.is_ok() != b.is_ok() && conflicts == 1, || {
            format!("pair {i}: {:?} / {:?}", a.as_ref().err(), b.as_ref().err())
        })?;
        let turns = o.session_snapshot(&s.id).await.map_err(|e| e.to_string())?.turns.len();
        ensure(turns == 1, || format!("pair {i}: {turns} turns recorded"))?;
    }
    Ok(pairs)
}

fn criterion_8() -> Check {
    let rt = runtime();
    let mut out = Vec::new();
    for (condition, seed) in [(Condition::Baseline, 81), (Condition::NeuroWise, 82)] {
        let (ok, failed, sessions) = rt.block_on(fuzz_condition(condition, seed))?;
        ensure(failed > 0, || format!("{condition:?}: no failures injected"))?;
        let pairs = rt.block_on(double_sends(condition))?;
        out.push(format!(
            "{condition:?}: {ok} ok + {failed} rejected over {sessions} sessions, {pairs} double-sends"
        ));
    }
    Ok(out.join("; "))
}

fn criterion_9() -> Check {
    let rt = runtime();
    let o = mock_orchestrator(9, Arc::new(MockProvider::bundled()));
    let strata = [
        StratumKey::new(Gender::Woman, ContactFrequency::LowModerate),
        StratumKey::new(Gender::Woman, ContactFrequency::High),
        StratumKey::new(Gender::Man, ContactFrequency::LowModerate),
        StratumKey::new(Gender::NonBinary, ContactFrequency::High),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for step in 0..1000 {
        let stratum = strata[rng.random_range(0..strata.len())];
        rt.block_on(o.create_session(stratum, DEFAULT_SCENARIO_ID))
            .map_err(|e| e.to_string())?;
        let counts = o.assignment_counts();
        for (k, c) in &counts {
            ensure(c.imbalance() <= 1, || format!("step {step}: {k:?} at {c:?}"))?;
        }
    }
    let counts = o.assignment_counts();
    let total: usize = counts.values().map(|c| c.baseline + c.neurowise).sum();
    ensure(total == 1000, || format!("{total} assignments recorded"))?;
    Ok(counts
        .values()
        .map(|c| format!("{}/{}", c.baseline, c.neurowise))
        .collect::<Vec<_>>()
        .join(" "))
}

fn main() -> ExitCode {
    // Criteria must hold without credentials.
    std::env::remove_var("NEUROWISE_API_KEY");
    let secs = Duration::from_secs;
    let results = [
        run(1, "effect-size identity anchor", secs(1), criterion_1),
        run(2, "exact-test anchors", secs(5), criterion_2),
        run(3, "oracle equivalence", secs(60), criterion_3),
        run(4, "ICC oracle and fixtures", secs(5), criterion_4),
        run(5, "Cronbach anchor", secs(5), criterion_5),
        run(6, "stress-engine validation pipeline", secs(30), criterion_6),
        run(7, "determinism and replay", secs(60), criterion_7),
        run(8, "gating and safety fuzz", secs(60), criterion_8),
        run(9, "blocked assignment", secs(30), criterion_9),
    ];
    let passed = results.iter().filter(|r| **r).count();
    println!("{passed}/{} criteria passed", results.len());
    if passed == results.len() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
