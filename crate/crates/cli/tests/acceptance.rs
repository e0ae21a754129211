//! Acceptance criteria, one PASS/FAIL line each.
//!
//! The long loopback run (criterion 9) needs `RESTBUF_ACCEPT_TESTBED=1`;
//! otherwise it is reported as SKIP.

use std::time::{Duration, Instant};

use restbuf_cli::recommend::recommend;
use restbuf_core::chain::{
    balance_residuals, build_transition_matrix, expected_blocked, expected_buffer_size,
    expected_buffer_size_closed, stationary, stationary_closed, stationary_numeric,
};
use restbuf_core::sim::{
    canonical_params, run_embedded, run_trace, SimConfig, CANONICAL_SCRIPT, CANONICAL_STATES,
};
use restbuf_core::ModelParams;
use restbuf_testbed::client::median;
use restbuf_testbed::experiment::{drain_check, model_reference};
use restbuf_testbed::{run_pooled, InjectionSide, TestbedConfig};

type Outcome = Result<String, String>;
type Criterion = (u32, &'static str, fn() -> Outcome);

fn params(p: f64, m: u32, k: u32) -> ModelParams {
    ModelParams::new(p, m, k).expect("valid parameters")
}

fn close(label: &str, got: f64, want: f64, tol: f64) -> Result<String, String> {
    let line = format!("{label}={got:.4} (want {want})");
    if (got - want).abs() < tol {
        Ok(line)
    } else {
        Err(line)
    }
}

fn gather(parts: Vec<Result<String, String>>) -> Outcome {
    let failed = parts.iter().any(Result::is_err);
    let text = parts
        .into_iter()
        .map(|r| r.unwrap_or_else(|e| format!("!{e}")))
        .collect::<Vec<_>>()
        .join(", ");
    if failed {
        Err(text)
    } else {
        Ok(text)
    }
}

fn within(limit: Duration, started: Instant, outcome: Outcome) -> Outcome {
    let took = started.elapsed();
    match outcome {
        Ok(text) if took > limit => Err(format!("{text}; took {took:?}, limit {limit:?}")),
        other => other,
    }
}

fn closed_form_sizes() -> Outcome {
    let t = Instant::now();
    let s1 = expected_buffer_size_closed(&params(0.2, 5, 1)).map_err(|e| e.to_string())?;
    let s2 = expected_buffer_size_closed(&params(0.2, 5, 2)).map_err(|e| e.to_string())?;
    within(
        Duration::from_secs(1),
        t,
        gather(vec![
            close("S(k=1)", s1, 3.164, 5e-4),
            close("S(k=2)", s2, 6.302, 5e-4),
        ]),
    )
}

fn steady_state_points() -> Outcome {
    let pi =
        |p: f64, k: u32, state: usize| stationary_closed(&params(p, 5, k)).map(|d| d.prob(state));
    let get = |p, k, s| pi(p, k, s).map_err(|e| e.to_string());
    gather(vec![
        close("pi(6)@0.1", get(0.1, 1, 6)?, 0.158, 5e-4),
        close("pi(11)@0.1", get(0.1, 2, 11)?, 0.045, 5e-4),
        close("pi(6)@0.3", get(0.3, 1, 6)?, 0.718, 5e-4),
        close("pi(11)@0.3", get(0.3, 2, 11)?, 0.774, 5e-4),
    ])
}

fn limits() -> Outcome {
    let mut parts = Vec::new();
    for k in [1, 2] {
        let low = expected_buffer_size_closed(&params(1e-9, 5, k)).map_err(|e| e.to_string())?;
        let high =
            expected_buffer_size_closed(&params(1.0 - 1e-9, 5, k)).map_err(|e| e.to_string())?;
        let full = (5 * k + 1) as f64;
        let line = format!("k={k}: S-1={:.1e}, M-S={:.1e}", low - 1.0, full - high);
        parts.push(if low - 1.0 < 1e-6 && full - high < 1e-3 {
            Ok(line)
        } else {
            Err(line)
        });
    }
    gather(parts)
}

fn balance_equations() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for k in [1, 2] {
        for m in [2, 5, 8] {
            for i in 1..=9 {
                let prm = params(i as f64 / 10.0, m, k);
                let dist = stationary_closed(&prm).map_err(|e| e.to_string())?;
                let res = balance_residuals(&prm, &dist).map_err(|e| e.to_string())?;
                worst = worst.max(res.max());
                count += res.len();
            }
        }
    }
    let line = format!("max residual {worst:.2e} over {count} equations");
    within(
        Duration::from_secs(1),
        t,
        if worst < 1e-12 { Ok(line) } else { Err(line) },
    )
}

fn numeric_matches_closed() -> Outcome {
    let t = Instant::now();
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let mut worst_pi: f64 = 0.0;
    for k in [1, 2] {
        for m in 1..=10 {
            for &p in &grid {
                let prm = params(p, m, k);
                let closed = stationary_closed(&prm).map_err(|e| e.to_string())?;
                let numeric = stationary_numeric(&build_transition_matrix(&prm))
                    .map_err(|e| format!("k={k} m={m} p={p}: {e}"))?;
                worst_pi = worst_pi.max(closed.max_abs_diff(&numeric));
            }
        }
    }
    let mut worst_row: f64 = 0.0;
    for k in 1..=5 {
        for m in 1..=10 {
            for &p in &grid {
                for sum in build_transition_matrix(&params(p, m, k)).row_sums() {
                    worst_row = worst_row.max((sum - 1.0).abs());
                }
            }
        }
    }
    let line = format!("max |pi diff| {worst_pi:.2e}, max |row sum - 1| {worst_row:.2e}");
    let ok = worst_pi < 1e-10 && worst_row < 1e-12;
    within(
        Duration::from_secs(5),
        t,
        if ok { Ok(line) } else { Err(line) },
    )
}

fn canonical_trace() -> Outcome {
    let t = Instant::now();
    let recs = run_trace(&canonical_params(), &CANONICAL_SCRIPT, 7).map_err(|e| e.to_string())?;
    let states: Vec<usize> = recs.iter().map(|r| r.state_before).collect();
    // blocked during epoch j, seen at observation j + 1
    let blocked: Vec<(u64, Vec<u64>)> = recs
        .iter()
        .filter(|r| !r.blocked_ids.is_empty())
        .map(|r| (r.index + 1, r.blocked_ids.clone()))
        .collect();
    let line = format!("states {states:?}, blocked {blocked:?}");
    let ok = states == CANONICAL_STATES && blocked == vec![(7, vec![11])];
    within(
        Duration::from_secs(1),
        t,
        if ok { Ok(line) } else { Err(line) },
    )
}

/// `|est - target| <= 3 sigma`, with sigma floored at `1/n`.
fn three_sigma(est: f64, ci95: f64, target: f64, n: u64) -> bool {
    let sigma = (ci95 / restbuf_core::sim::stats::Z95).max(1.0 / n as f64);
    (est - target).abs() <= 3.0 * sigma
}

fn simulation_vs_theory() -> Outcome {
    const N: u64 = 1_000_000;
    let mut misses = Vec::new();
    let mut checks = 0;
    let mut seed = 100;
    for k in [1, 2] {
        for i in 1..=9 {
            let prm = params(i as f64 / 10.0, 5, k);
            seed += 1;
            let rep = run_embedded(&SimConfig::new(prm, N, seed)).map_err(|e| e.to_string())?;
            let dist = stationary(&prm).map_err(|e| e.to_string())?;
            let s = expected_buffer_size(&dist);
            checks += 1;
            if !three_sigma(rep.s_hat, rep.s_ci95, s, rep.n_used) {
                misses.push(format!("S k={k} p={}: {:.4} vs {s:.4}", prm.p(), rep.s_hat));
            }
            for (state, pi) in dist.iter() {
                let occ = rep
                    .occupancy_of(state)
                    .map(|o| (o.freq, o.ci95))
                    .unwrap_or((0.0, 0.0));
                checks += 1;
                if !three_sigma(occ.0, occ.1, pi, rep.n_used) {
                    misses.push(format!(
                        "pi({state}) k={k} p={}: {:.5} vs {pi:.5}",
                        prm.p(),
                        occ.0
                    ));
                }
            }
        }
    }
    let mut limit_lines = Vec::new();
    for k in [1, 2] {
        for (p, limit) in [(0.01, 0.0), (0.99, 5.0)] {
            let prm = params(p, 5, k);
            seed += 1;
            let rep = run_embedded(&SimConfig::new(prm, N, seed)).map_err(|e| e.to_string())?;
            let dist = stationary(&prm).map_err(|e| e.to_string())?;
            let b = expected_blocked(&prm, &dist);
            checks += 1;
            if !three_sigma(rep.b_hat, rep.b_ci95, b, rep.n_used) {
                misses.push(format!("B k={k} p={p}: {:.4} vs {b:.4}", rep.b_hat));
            }
            limit_lines.push(format!("B(k={k},p={p})={:.4} (limit {limit})", rep.b_hat));
        }
    }
    let line = format!(
        "{checks} checks, {} outside 3 sigma; {}",
        misses.len(),
        limit_lines.join(", ")
    );
    if misses.is_empty() {
        Ok(line)
    } else {
        Err(format!("{line}; outside 3 sigma: {}", misses.join("; ")))
    }
}

fn blocking_crossover() -> Outcome {
    let b = |p: f64, k: u32| {
        let prm = params(p, 5, k);
        stationary(&prm).map(|d| expected_blocked(&prm, &d))
    };
    let mut parts = Vec::new();
    for p in [0.3, 0.4, 0.5] {
        let (b1, b2) = (
            b(p, 1).map_err(|e| e.to_string())?,
            b(p, 2).map_err(|e| e.to_string())?,
        );
        let line = format!("p={p}: B1={b1:.4} B2={b2:.4}");
        parts.push(if b2 > b1 { Ok(line) } else { Err(line) });
    }
    for (p, want) in [(0.1, 2), (0.4, 1)] {
        let rec = recommend(p, 5, &[1, 2]).map_err(|e| e.to_string())?;
        let line = format!("recommend(p={p})=k{}", rec.k);
        parts.push(if rec.k == want { Ok(line) } else { Err(line) });
    }
    // where the two curves meet, for the record
    let (mut lo, mut hi) = (0.05, 0.35);
    let gap = |p: f64| b(p, 2).unwrap() - b(p, 1).unwrap();
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if gap(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    parts.push(Ok(format!("crossover p={:.6}", 0.5 * (lo + hi))));
    gather(parts)
}

fn testbed_suite() -> Option<Outcome> {
    if std::env::var("RESTBUF_ACCEPT_TESTBED").as_deref() != Ok("1") {
        return None;
    }
    let pairs: usize = std::env::var("RESTBUF_ACCEPT_TESTBED_PAIRS")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(3);
    Some(run_testbed_suite(pairs))
}

fn run_testbed_suite(pairs: usize) -> Outcome {
    let (t, timeout) = (0.3, 1.5);
    let drain = drain_check(10, 199).map_err(|e| e.to_string())?;
    let drain_median = median(&drain).unwrap_or_default();
    let handles: Vec<_> = [1u32, 2]
        .into_iter()
        .map(|k| {
            let config = TestbedConfig {
                p: Some(0.2),
                loss_vector: None,
                m: 5,
                k,
                t_scaled: t,
                timeout_scaled: timeout,
                frame_size: 199,
                injection_side: InjectionSide::Server,
                seed: 2_000 + k as u64 * 10,
                observations: 5_000,
                warmup: 100,
                pause_scaled: None,
                keep_alive: false,
                vector_length: 100_000,
            };
            std::thread::spawn(move || (k, run_pooled(&config, pairs)))
        })
        .collect();
    let mut parts = vec![if drain_median < Duration::from_secs_f64(t) {
        Ok(format!("drain(10)={drain_median:?}"))
    } else {
        Err(format!("drain(10)={drain_median:?} not below t"))
    }];
    for h in handles {
        let (k, pooled) = h
            .join()
            .map_err(|_| "testbed thread panicked".to_string())?;
        let pooled = pooled.map_err(|e| e.to_string())?;
        let prm = ModelParams::from_timing(
            pooled.runs[0].p,
            k,
            restbuf_core::Timing::new(t, timeout).expect("valid timing"),
        )
        .map_err(|e| e.to_string())?;
        let reference =
            model_reference(prm, 1_000_000, 1_000, 77 + k as u64).map_err(|e| e.to_string())?;
        let agree = pooled.size.overlaps(&reference.size())
            && pooled.blocked.overlaps(&reference.blocked());
        let line = format!(
            "k={k} n={} S={:.3}±{:.3} (timed {:.3}±{:.3}) B={:.3}±{:.3} (timed {:.3}±{:.3}) invariants {}",
            pooled.n_used,
            pooled.size.mean,
            pooled.size.ci95,
            reference.s_hat,
            reference.s_ci95,
            pooled.blocked.mean,
            pooled.blocked.ci95,
            reference.b_hat,
            reference.b_ci95,
            if pooled.invariants_hold() { "hold" } else { "violated" },
        );
        let ok = agree && pooled.invariants_hold() && pooled.n_used >= 5_000;
        parts.push(if ok { Ok(line) } else { Err(line) });
    }
    gather(parts)
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        (1, "closed-form S at p=0.2, m=5", closed_form_sizes),
        (2, "steady-state points, m=5", steady_state_points),
        (3, "limits of S at p->0 and p->1", limits),
        (4, "balance-equation residuals", balance_equations),
        (
            5,
            "numeric solve equals closed forms",
            numeric_matches_closed,
        ),
        (6, "canonical trace replay", canonical_trace),
        (
            7,
            "simulation vs theory, 10^6 observations",
            simulation_vs_theory,
        ),
        (
            8,
            "blocking crossover and recommendation",
            blocking_crossover,
        ),
    ];
    let mut failed = 0;
    for (id, name, check) in criteria {
        let started = Instant::now();
        let outcome = check();
        let took = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {id} PASS [{took:.2}s] {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("criterion {id} FAIL [{took:.2}s] {name}: {detail}");
            }
        }
    }
    let started = Instant::now();
    match testbed_suite() {
        None => println!(
            "criterion 9 SKIP loopback testbed at x10 timers: set RESTBUF_ACCEPT_TESTBED=1 to run (about 35 min)"
        ),
        Some(Ok(detail)) => println!(
            "criterion 9 PASS [{:.0}s] loopback testbed at x10 timers: {detail}",
            started.elapsed().as_secs_f64()
        ),
        Some(Err(detail)) => {
            failed += 1;
            println!(
                "criterion 9 FAIL [{:.0}s] loopback testbed at x10 timers: {detail}",
                started.elapsed().as_secs_f64()
            );
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
