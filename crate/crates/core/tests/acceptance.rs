//! Acceptance gate. Runs without the libtest harness so that every
//! criterion prints its own PASS/FAIL line; exits nonzero if any fail.

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use gravwell::bias::{compute_user_bias, otimes, pair_contribution, BiasOptions};
use gravwell::config::AnalysisConfig;
use gravwell::gravity::{
    ideological_distance, pull_force, simulate_exit_order, EmbeddingVector, ExitDirection, MockEmbedder, SubgroupModel,
    DISTANCE_FLOOR,
};
use gravwell::metrics::{
    normalized_mae, quadratic_weighted_kappa, spearman_p_value, spearman_rho, CalibrationSample, RankSeries,
};
use gravwell::pipeline::Pipeline;
use gravwell::report;
use gravwell::scoring::{MockScorer, ScoreKind, ScoreLevel, Scorer};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    check(elapsed < limit, || format!("took {elapsed:?}, limit {limit:?}"))
}

fn uniformization() -> Outcome {
    let start = Instant::now();
    let n = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut xs: Vec<f64> = (0..n)
        .map(|_| otimes(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)).unwrap())
        .collect();
    xs.sort_by(f64::total_cmp);
    let mut ks: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let cdf = (x + 1.0) / 2.0;
        ks = ks
            .max((cdf - i as f64 / n as f64).abs())
            .max(((i + 1) as f64 / n as f64 - cdf).abs());
    }
    let critical = 1.63 / (n as f64).sqrt();
    check(ks < critical, || format!("KS {ks:.6} >= {critical:.6}"))?;
    within(start.elapsed(), Duration::from_secs(5))?;
    Ok(format!("KS {ks:.6} < {critical:.6}"))
}

fn otimes_algebra() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut pairs: Vec<(f64, f64)> = (0..10_000)
        .map(|_| (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
        .collect();
    for a in ScoreLevel::ALL {
        for b in ScoreLevel::ALL {
            pairs.push((a.value(), b.value()));
        }
    }
    for &(a, b) in &pairs {
        let r = otimes(a, b).unwrap();
        check((-1.0..=1.0).contains(&r), || format!("{a} ⊗ {b} = {r} outside [-1, 1]"))?;
        check(r == otimes(b, a).unwrap(), || format!("{a} ⊗ {b} not symmetric"))?;
        check(otimes(-a, b).unwrap() == -r, || format!("{a} ⊗ {b} not odd"))?;
        check(r.abs() >= (a * b).abs(), || format!("|{a} ⊗ {b}| < |ab|"))?;
    }
    for a in ScoreLevel::ALL {
        let v = a.value();
        check(otimes(v, 0.0).unwrap() == 0.0 && otimes(0.0, v).unwrap() == 0.0, || {
            format!("{v} ⊗ 0 != 0")
        })?;
    }
    check(otimes(1.0, 1.0).unwrap() == 1.0, || "1 ⊗ 1 != 1".into())?;
    check(otimes(-1.0, 1.0).unwrap() == -1.0, || "-1 ⊗ 1 != -1".into())?;
    check(otimes(-1.0, -1.0).unwrap() == 1.0, || "-1 ⊗ -1 != 1".into())?;
    Ok(format!("{} pairs", pairs.len()))
}

fn casework() -> Outcome {
    let start = Instant::now();
    let mut corners = 0;
    for a in ScoreLevel::ALL {
        for b in ScoreLevel::ALL {
            for c in ScoreLevel::ALL {
                let got = pair_contribution(a, b, c);
                let product = a.value() * b.value() * c.value();
                check(
                    got.signum() == product.signum() || (got == 0.0 && product == 0.0),
                    || format!("sign of ({a}, {b}, {c}) is {got}"),
                )?;
                if [a, b, c].iter().all(|l| l.value().abs() == 1.0) {
                    corners += 1;
                    check(got == product, || format!("corner ({a}, {b}, {c}) gave {got}"))?;
                }
            }
        }
    }
    check(corners == 8, || format!("{corners} corners"))?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok("125 triples, 8 exact corners".into())
}

fn bias_range() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let scorer = Scorer::mock();
    let options = BiasOptions::default();
    let (mut small, mut lo, mut hi) = (0, f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..10_000 {
        let n = rng.gen_range(0..=6);
        let h = common::random_history(&mut rng, &format!("u{i}"), n);
        let out = compute_user_bias(&h, &scorer, &options).map_err(|e| e.to_string())?;
        let m = out.score.m_a;
        check((0.5..=2.0).contains(&m), || format!("history {i} gave m_a {m}"))?;
        if out.score.n < 2 {
            small += 1;
            check(m == 1.0, || format!("history {i} with n={} gave m_a {m}", out.score.n))?;
        }
        lo = lo.min(m);
        hi = hi.max(m);
    }
    Ok(format!(
        "10000 histories, m_a in [{lo:.4}, {hi:.4}], {small} with n<2 at 1"
    ))
}

const TABLE_1: [(&str, usize, f64, f64); 18] = [
    ("science", 34473, -0.006313627858, 0.879444531350),
    ("cars", 21296, -0.01670117555, 0.992600367280),
    ("travel", 12175, 0.06979880594, 0.000000000000),
    ("math", 5951, 0.02445433064, 0.029623264415),
    ("PoliticalDiscussion", 5709, 0.05332218798, 0.000027781926),
    ("SandersForPresident", 5558, 0.07124278034, 0.000000052789),
    ("hiking", 3309, 0.02460121295, 0.078558095500),
    ("democrats", 3279, 0.05883168584, 0.000375176494),
    ("Republican", 2170, 0.0156215619, 0.233512419400),
    ("NeutralPolitics", 1822, 0.03473209878, 0.069174729100),
    ("mlb", 1641, 0.005481631386, 0.412200037400),
    ("flatearth", 1569, 0.006885212062, 0.392613688850),
    ("progressive", 639, -0.132709983, 0.999614526556),
    ("trump", 410, 0.06694829862, 0.088031117450),
    ("SocialDemocracy", 157, 0.02906175167, 0.358934180950),
    ("Freethought", 155, 0.005748803681, 0.471701557400),
    ("AmericanPolitics", 141, -0.04815776478, 0.714670301350),
    ("republicans", 84, 0.03219464244, 0.385631639750),
];

fn table_regression() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (sub, n, rho, printed) in TABLE_1 {
        let p = spearman_p_value(rho, n).map_err(|e| format!("{sub}: {e}"))?;
        let err = (p - printed).abs();
        check(err <= 2e-3, || format!("{sub}: p {p} vs printed {printed}"))?;
        worst = worst.max(err);
    }
    let sanders = spearman_p_value(0.07124278034, 5558).unwrap();
    check((sanders / 5.2789e-8 - 1.0).abs() < 1e-3, || {
        format!("SandersForPresident p {sanders:e}")
    })?;
    within(start.elapsed(), Duration::from_secs(1))?;
    Ok(format!("18 rows, max |Δp| {worst:.2e}"))
}

fn brute_kappa(h: &[usize], a: &[usize]) -> f64 {
    let w = |i: usize, j: usize| ((i as f64 - j as f64).powi(2)) / 16.0;
    let n = h.len() as f64;
    let observed: f64 = h.iter().zip(a).map(|(&i, &j)| w(i, j)).sum::<f64>() / n;
    let mut expected = 0.0;
    for &i in h {
        for &j in a {
            expected += w(i, j);
        }
    }
    expected /= n * n;
    if expected == 0.0 {
        1.0
    } else {
        1.0 - observed / expected
    }
}

fn metric_oracles() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for set in 0..50 {
        let len = rng.gen_range(1..=80);
        let h: Vec<usize> = (0..len).map(|_| rng.gen_range(0..5)).collect();
        let a: Vec<usize> = h
            .iter()
            .map(|&x| if rng.gen_bool(0.5) { x } else { rng.gen_range(0..5) })
            .collect();
        let samples: Vec<CalibrationSample> = h
            .iter()
            .zip(&a)
            .map(|(&i, &j)| CalibrationSample {
                kind: ScoreKind::Support,
                human: ScoreLevel::ALL[i],
                ai: ScoreLevel::ALL[j],
            })
            .collect();
        let k = quadratic_weighted_kappa(&samples).map_err(|e| e.to_string())?;
        let ko = brute_kappa(&h, &a);
        check((k - ko).abs() <= 1e-12, || format!("set {set}: qwk {k} vs oracle {ko}"))?;
        let mae = normalized_mae(&samples).map_err(|e| e.to_string())?;
        let total: f64 = h.iter().zip(&a).map(|(&i, &j)| (i as f64 - j as f64).abs() * 0.5).sum();
        let mo = total / len as f64 / 2.0;
        check((mae - mo).abs() <= 1e-12, || {
            format!("set {set}: nmae {mae} vs oracle {mo}")
        })?;
    }

    let ids = ["a", "b", "c", "d", "e"];
    let base = RankSeries::from_scores(ids.iter().zip(1..).map(|(id, r)| (id.to_string(), r as f64)));
    let mut perms = 0;
    for p in permutations(5) {
        let other = RankSeries::from_scores(ids.iter().zip(&p).map(|(id, &r)| (id.to_string(), (r + 1) as f64)));
        let rho = spearman_rho(&base, &other).map_err(|e| e.to_string())?;
        let d2: usize = p
            .iter()
            .enumerate()
            .map(|(i, &r)| (i as i64 - r as i64).pow(2) as usize)
            .sum();
        let expect = (20.0 - d2 as f64) / 20.0;
        check(rho == expect, || format!("permutation {p:?}: {rho} vs {expect}"))?;
        perms += 1;
    }
    Ok(format!("50 label sets to 1e-12, {perms} permutations exact"))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

const ARTIFACTS: [&str; 4] = [
    report::BIAS_FILE,
    report::FORCES_FILE,
    report::EVALUATION_FILE,
    report::DIAGNOSTICS_FILE,
];

fn golden_config(in_flight: usize, caches: Option<&Path>) -> AnalysisConfig {
    let mut config = AnalysisConfig {
        inputs: vec![common::fixture("golden.jsonl")],
        ..AnalysisConfig::default()
    };
    config.scorer.max_in_flight = in_flight;
    if let Some(dir) = caches {
        config.score_cache = Some(dir.join("scores.jsonl"));
        config.embedding_cache = Some(dir.join("embeddings.jsonl"));
    }
    config
}

fn run_golden(config: AnalysisConfig, out: &Path) -> Result<(usize, usize), String> {
    fs::create_dir_all(out).map_err(|e| e.to_string())?;
    let pipeline = Pipeline::with_backends(
        config,
        Arc::new(MockScorer::default()),
        Arc::new(MockEmbedder::default()),
    )
    .map_err(|e| e.to_string())?;
    let s = pipeline.cmd_run(out).map_err(|e| e.to_string())?;
    Ok((s.scoring_calls, s.embedding_calls))
}

fn read_artifacts(dir: &Path) -> Vec<Vec<u8>> {
    ARTIFACTS
        .iter()
        .map(|f| fs::read(dir.join(f)).unwrap_or_default())
        .collect()
}

fn determinism() -> Outcome {
    let start = Instant::now();
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let t = tmp.path();
    run_golden(golden_config(1, None), &t.join("a"))?;
    run_golden(golden_config(1, None), &t.join("b"))?;
    run_golden(golden_config(8, None), &t.join("c"))?;
    let (cold_calls, _) = run_golden(golden_config(8, Some(&t.join("cache"))), &t.join("d"))?;
    let (warm_calls, warm_embeds) = run_golden(golden_config(8, Some(&t.join("cache"))), &t.join("e"))?;

    let reference = read_artifacts(&t.join("a"));
    check(reference.iter().all(|b| !b[..].is_empty()), || {
        "missing artifact".into()
    })?;
    for run in ["b", "c", "d", "e"] {
        check(read_artifacts(&t.join(run)) == reference, || {
            format!("run {run} differs from the first")
        })?;
    }
    let rows = report::read_evaluation(&t.join("a").join(report::EVALUATION_FILE)).map_err(|e| e.to_string())?;
    check(rows.len() == 2, || format!("{} evaluation rows", rows.len()))?;
    check(cold_calls > 0, || "cold run made no scoring calls".into())?;
    check(warm_calls == 0 && warm_embeds == 0, || {
        format!("warm run made {warm_calls} scoring and {warm_embeds} embedding calls")
    })?;
    within(start.elapsed(), Duration::from_secs(10))?;
    Ok(format!("5 runs identical, cold {cold_calls} calls, warm 0"))
}

fn predicted_ranks(config: AnalysisConfig) -> Result<BTreeMap<(String, String), f64>, String> {
    let pipeline = Pipeline::with_backends(
        config,
        Arc::new(MockScorer::default()),
        Arc::new(MockEmbedder::default()),
    )
    .map_err(|e| e.to_string())?;
    let corpus = pipeline.load_corpus().map_err(|e| e.to_string())?;
    let (bias, histories) = pipeline.bias_stage(&corpus).map_err(|e| e.to_string())?;
    let forces = pipeline
        .force_stage(&corpus, &bias, &histories)
        .map_err(|e| e.to_string())?;
    Ok(forces
        .rows
        .into_iter()
        .map(|r| ((r.subreddit, r.user), r.predicted_rank))
        .collect())
}

fn gravity_invariants() -> Outcome {
    let base = predicted_ranks(golden_config(4, None))?;
    for (tm, tsm) in [(2.5, 0.3), (1e-3, 1e3), (17.0, 4.0)] {
        let mut scaled = golden_config(4, None);
        scaled.tm = tm;
        scaled.tsm = tsm;
        check(predicted_ranks(scaled)? == base, || {
            format!("ranks changed at tm={tm}, tsm={tsm}")
        })?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let g = EmbeddingVector(vec![1.0, 0.0, 0.0]);
    let model = SubgroupModel::new("s", 40.0, g.clone(), 1.0, 1.0, 25).map_err(|e| e.to_string())?;
    let mut trials = 0;
    for _ in 0..200 {
        let users: Vec<(String, f64, f64)> = (0..12)
            .map(|i| (format!("u{i}"), rng.gen_range(0.5..=2.0), rng.gen_range(0.01..=2.0)))
            .collect();
        let forces = |users: &[(String, f64, f64)]| {
            let fs: Vec<_> = users
                .iter()
                .map(|(u, m, d)| pull_force(&model, u, *m, *d).unwrap())
                .collect();
            simulate_exit_order(&fs, ExitDirection::Ascending)
        };
        let before = forces(&users);
        let who = rng.gen_range(0..users.len());
        let mut raised = users.clone();
        raised[who].1 = (raised[who].1 * rng.gen_range(1.0..1.5)).min(2.0);
        let after = forces(&raised);
        let u = &users[who].0;
        check(after[u] >= before[u], || {
            format!("raising m_a moved {u} from {} to {}", before[u], after[u])
        })?;
        trials += 1;
    }

    let d = ideological_distance(&g, &g).map_err(|e| e.to_string())?;
    check(d == DISTANCE_FLOOR, || format!("d(u, u) = {d}"))?;
    let f = pull_force(&model, "u", 2.0, d).map_err(|e| e.to_string())?;
    check(f.f_w.is_finite(), || "force at the floor is not finite".into())?;
    Ok(format!(
        "rank invariance at 3 scalings, {trials} monotonicity trials, d(u,u) = {d:e}"
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("otimes uniformization", uniformization),
        ("otimes algebra", otimes_algebra),
        ("contribution casework", casework),
        ("bias range", bias_range),
        ("p-value table regression", table_regression),
        ("metric oracles", metric_oracles),
        ("end-to-end determinism", determinism),
        ("gravity invariants", gravity_invariants),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({detail}; {secs:.2}s)", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({why}; {secs:.2}s)", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
