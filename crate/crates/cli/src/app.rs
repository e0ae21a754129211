use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use restbuf_core::chain::{expected_blocked, expected_buffer_size, stationary};
use restbuf_core::sim::{
    run_embedded_logged, run_embedded_with_vector_logged, run_replications, run_timed_logged,
    write_ndjson_line, LossVector, ObservationRecord, SimConfig, SimMode, SimReport, VectorMode,
};
use restbuf_core::{ModelParams, Timing};
use restbuf_testbed::experiment::model_reference;
use restbuf_testbed::{run_pooled, TestbedConfig};
use serde::Serialize;

use crate::args::*;
use crate::error::CliError;
use crate::recommend::recommend;
use crate::sweep::{run_sweep, SweepSpec, TestbedSweep};
use crate::theory::theory;
use crate::trace::{trace, Script};

/// Text to print or save, plus whether it passed its own checks.
pub struct Rendered {
    pub body: String,
    pub failure: Option<String>,
}

impl Rendered {
    fn ok(body: String) -> Self {
        Self {
            body,
            failure: None,
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn unsupported(format: Format, command: &str) -> CliError {
    CliError::Usage(format!("{command} has no {format:?} output"))
}

pub fn execute(command: &Command) -> Result<Rendered, CliError> {
    match command {
        Command::Theory(a) => cmd_theory(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Testbed(a) => cmd_testbed(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Trace(a) => cmd_trace(a),
        Command::Recommend(a) => cmd_recommend(a),
    }
}

pub fn output_args(command: &Command) -> &OutputArgs {
    match command {
        Command::Theory(a) => &a.output,
        Command::Simulate(a) => &a.output,
        Command::Testbed(a) => &a.output,
        Command::Sweep(a) => &a.output,
        Command::Trace(a) => &a.output,
        Command::Recommend(a) => &a.output,
    }
}

fn cmd_theory(a: &TheoryArgs) -> Result<Rendered, CliError> {
    let report = theory(&ModelParams::new(a.p, a.m, a.k)?)?;
    let body = match a.output.format.unwrap_or(Format::Text) {
        Format::Text => report.to_text(),
        Format::Csv => report.to_csv()?,
        Format::Json => json(&report)?,
    };
    Ok(Rendered::ok(body))
}

fn sim_params(a: &SimulateArgs, p: f64) -> Result<ModelParams, CliError> {
    match (a.t, a.timeout) {
        (Some(t), Some(timeout)) => {
            let params = ModelParams::from_timing(p, a.k, Timing::new(t, timeout)?)?;
            if let Some(m) = a.m.filter(|&m| m != params.m()) {
                return Err(CliError::Usage(format!(
                    "--m {m} disagrees with --timeout/--t = {}",
                    params.m()
                )));
            }
            Ok(params)
        }
        (None, None) => {
            let params = ModelParams::new(p, a.m.unwrap_or(5), a.k)?;
            if a.mode == ModeArg::Timed {
                // zero service time makes the clock scale irrelevant
                let t = 1.0;
                return Ok(params.with_timing(Timing::new(t, t * params.m() as f64)?)?);
            }
            Ok(params)
        }
        _ => Err(CliError::Usage(
            "give both --t and --timeout or neither".into(),
        )),
    }
}

#[derive(Serialize)]
struct SimulateOutput<'a> {
    p: f64,
    k: u32,
    m: u32,
    #[serde(rename = "M")]
    capacity: usize,
    mode: SimMode,
    #[serde(rename = "S_theory")]
    s_theory: f64,
    #[serde(rename = "B_theory")]
    b_theory: f64,
    report: &'a SimReport,
}

fn cmd_simulate(a: &SimulateArgs) -> Result<Rendered, CliError> {
    let vector = a
        .loss_vector
        .as_deref()
        .map(|path| Ok::<_, CliError>(LossVector::parse(&std::fs::read_to_string(path)?)?))
        .transpose()?;
    let p = match (&vector, a.p) {
        (Some(v), None) => v.loss_fraction(),
        (None, Some(p)) => p,
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "give --p or --loss-vector, not both".into(),
            ))
        }
        (None, None) => return Err(CliError::Usage("--p or --loss-vector is required".into())),
    };
    let params = sim_params(a, p)?;
    let mut config = SimConfig::new(params, a.observations, a.seed);
    if let Some(w) = a.warmup {
        config = config.with_warmup(w);
    }
    config.mode = a.mode.into();
    config.blocked_denominator = a.blocked_denominator.into();

    if a.replications > 1 && (vector.is_some() || a.log.is_some()) {
        return Err(CliError::Usage(
            "--replications cannot be combined with --loss-vector or --log".into(),
        ));
    }
    if vector.is_some() && config.mode == SimMode::Timed {
        return Err(CliError::Usage(
            "--loss-vector drives the embedded mode only".into(),
        ));
    }

    let mut log = a
        .log
        .as_deref()
        .map(|path| File::create(path).map(BufWriter::new))
        .transpose()?;
    let mut log_error = None;
    let mut sink = |rec: &ObservationRecord| {
        if let (Some(w), None) = (log.as_mut(), &log_error) {
            if let Err(e) = write_ndjson_line(w, rec) {
                log_error = Some(e);
            }
        }
    };
    let report = if a.replications > 1 {
        run_replications(&config, a.replications)?
    } else {
        match (&vector, config.mode) {
            (Some(v), _) => {
                let mode = if a.cyclic {
                    VectorMode::Cyclic
                } else {
                    VectorMode::Strict
                };
                run_embedded_with_vector_logged(&config, v, mode, &mut sink)?
            }
            (None, SimMode::Embedded) => run_embedded_logged(&config, &mut sink)?,
            (None, SimMode::Timed) => run_timed_logged(&config, &mut sink)?,
        }
    };
    if let Some(e) = log_error {
        return Err(e.into());
    }
    if let Some(mut w) = log {
        w.flush()?;
    }

    let dist = stationary(&params)?;
    let out = SimulateOutput {
        p,
        k: params.k(),
        m: params.m(),
        capacity: params.capacity(),
        mode: config.mode,
        s_theory: expected_buffer_size(&dist),
        b_theory: expected_blocked(&params, &dist),
        report: &report,
    };
    let body = match a.output.format.unwrap_or(Format::Text) {
        Format::Json => json(&out)?,
        Format::Text => {
            let mut s = format!(
                "p={} k={} m={} M={} ({:?}, {} observations used)\nS_sim = {:.6} ± {:.6}   S_theory = {:.6}\nB_sim = {:.6} ± {:.6}   B_theory = {:.6}\n",
                p, out.k, out.m, out.capacity, config.mode, report.n_used,
                report.s_hat, report.s_ci95, out.s_theory,
                report.b_hat, report.b_ci95, out.b_theory,
            );
            for o in &report.occupancy {
                s.push_str(&format!(
                    "pi({}) = {:.6} ± {:.6}   theory {:.6}\n",
                    o.state,
                    o.freq,
                    o.ci95,
                    dist.prob(o.state)
                ));
            }
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["state", "freq", "ci95", "pi_theory"])?;
            for o in &report.occupancy {
                w.write_record([
                    o.state.to_string(),
                    o.freq.to_string(),
                    o.ci95.to_string(),
                    dist.prob(o.state).to_string(),
                ])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv")
        }
    };
    Ok(Rendered::ok(body))
}

#[derive(Serialize)]
struct TestbedOutput {
    p: f64,
    k: u32,
    m: u32,
    #[serde(rename = "S_testbed")]
    s_testbed: f64,
    #[serde(rename = "S_testbed_ci95")]
    s_testbed_ci95: f64,
    #[serde(rename = "B_testbed")]
    b_testbed: f64,
    #[serde(rename = "B_testbed_ci95")]
    b_testbed_ci95: f64,
    n_used: u64,
    #[serde(rename = "S_timed")]
    s_timed: f64,
    #[serde(rename = "S_timed_ci95")]
    s_timed_ci95: f64,
    #[serde(rename = "B_timed")]
    b_timed: f64,
    #[serde(rename = "B_timed_ci95")]
    b_timed_ci95: f64,
    #[serde(rename = "S_theory")]
    s_theory: f64,
    #[serde(rename = "B_theory")]
    b_theory: f64,
    agrees: bool,
    invariants_hold: bool,
    violations: Vec<String>,
    drain_median_ms: f64,
    wall_clock_s: f64,
}

fn testbed_config(a: &TestbedArgs) -> Result<TestbedConfig, CliError> {
    if let Some(path) = &a.config {
        return Ok(TestbedConfig::load(path)?);
    }
    if a.p.is_some() == a.loss_vector.is_some() {
        return Err(CliError::Usage(
            "give exactly one of --p and --loss-vector".into(),
        ));
    }
    Ok(TestbedConfig {
        p: a.p,
        loss_vector: a.loss_vector.clone(),
        m: a.m,
        k: a.k,
        t_scaled: a.t,
        timeout_scaled: a.timeout,
        frame_size: a.frame_size,
        injection_side: a.injection_side.into(),
        seed: a.seed,
        observations: a.observations,
        warmup: a.warmup,
        pause_scaled: None,
        keep_alive: a.keep_alive,
        vector_length: restbuf_testbed::config::DEFAULT_VECTOR_LENGTH,
    })
}

fn cmd_testbed(a: &TestbedArgs) -> Result<Rendered, CliError> {
    let config = testbed_config(a)?;
    let vector = config.loss_vector()?;
    let params = config.params(&vector)?;
    let pooled = run_pooled(&config, a.replications.max(1))?;
    let reference = model_reference(
        params,
        (config.observations * 40).max(200_000),
        1_000,
        config.seed,
    )?;
    let dist = stationary(&params)?;
    let drain = restbuf_testbed::client::median(pooled.drain_samples()).unwrap_or_default();
    let agrees =
        pooled.size.overlaps(&reference.size()) && pooled.blocked.overlaps(&reference.blocked());
    let out = TestbedOutput {
        p: params.p(),
        k: params.k(),
        m: params.m(),
        s_testbed: pooled.size.mean,
        s_testbed_ci95: pooled.size.ci95,
        b_testbed: pooled.blocked.mean,
        b_testbed_ci95: pooled.blocked.ci95,
        n_used: pooled.n_used,
        s_timed: reference.s_hat,
        s_timed_ci95: reference.s_ci95,
        b_timed: reference.b_hat,
        b_timed_ci95: reference.b_ci95,
        s_theory: expected_buffer_size(&dist),
        b_theory: expected_blocked(&params, &dist),
        agrees,
        invariants_hold: pooled.invariants_hold(),
        violations: pooled
            .runs
            .iter()
            .flat_map(|r| r.invariants.violations.clone())
            .collect(),
        drain_median_ms: drain.as_secs_f64() * 1e3,
        wall_clock_s: pooled
            .runs
            .iter()
            .map(|r| r.report.wall_clock.as_secs_f64())
            .fold(0.0, f64::max),
    };
    let body = match a.output.format.unwrap_or(Format::Text) {
        Format::Json => json(&out)?,
        Format::Text => format!(
            "p={} k={} m={} ({} observations used, {:.1}s)\nS_testbed = {:.4} ± {:.4}   S_timed = {:.4} ± {:.4}   S_theory = {:.4}\nB_testbed = {:.4} ± {:.4}   B_timed = {:.4} ± {:.4}   B_theory = {:.4}\nintervals overlap: {}\ninvariants hold: {}\ndrain of {} messages: {:.3} ms (median)\n",
            out.p, out.k, out.m, out.n_used, out.wall_clock_s,
            out.s_testbed, out.s_testbed_ci95, out.s_timed, out.s_timed_ci95, out.s_theory,
            out.b_testbed, out.b_testbed_ci95, out.b_timed, out.b_timed_ci95, out.b_theory,
            out.agrees, out.invariants_hold, params.capacity(), out.drain_median_ms,
        ),
        Format::Csv => return Err(unsupported(Format::Csv, "testbed")),
    };
    let failure =
        (!out.invariants_hold).then(|| format!("testbed invariants: {:?}", out.violations));
    Ok(Rendered { body, failure })
}

fn cmd_sweep(a: &SweepArgs) -> Result<Rendered, CliError> {
    let spec = SweepSpec {
        p_grid: a.p.clone(),
        k_list: a.k.clone(),
        m: a.m,
        engines: a.engines.iter().copied().collect(),
        replications: a.replications,
        observations: a.observations,
        warmup: a.warmup,
        seed: a.seed,
        blocked_denominator: a.blocked_denominator.into(),
        testbed: Some(TestbedSweep {
            t: a.t,
            timeout: a.timeout,
            observations: a.testbed_observations,
            warmup: 100.min(a.testbed_observations.saturating_sub(1)),
        }),
    };
    let report = run_sweep(&spec)?;
    let body = match a.output.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv()?,
        Format::Json => json(&report)?,
        Format::Text => return Err(unsupported(Format::Text, "sweep")),
    };
    let violations = report.coherence_violations();
    let failure = (a.check && !violations.is_empty()).then(|| violations.join("; "));
    Ok(Rendered { body, failure })
}

fn cmd_trace(a: &TraceArgs) -> Result<Rendered, CliError> {
    let script = Script::from_arg(&a.script)?;
    let params = match (a.m, a.k) {
        (None, None) => None,
        (m, k) => Some(ModelParams::new(0.0, m.unwrap_or(2), k.unwrap_or(2))?),
    };
    let run = trace(&script, params, a.obs)?;
    let mut failure = run.deviation.clone();
    if let Some(expected) = &a.expect {
        let states = run.states();
        if states != *expected {
            failure = Some(format!("states {states:?}, expected {expected:?}"));
        }
    }
    let body = match a.output.format.unwrap_or(Format::Text) {
        Format::Text => run.to_text(),
        Format::Csv => run.to_csv()?,
        Format::Json => json(&run)?,
    };
    Ok(Rendered { body, failure })
}

fn cmd_recommend(a: &RecommendArgs) -> Result<Rendered, CliError> {
    let rec = recommend(a.p, a.m, &a.k)?;
    let body = match a.output.format.unwrap_or(Format::Text) {
        Format::Text => rec.to_text(),
        Format::Json => json(&rec)?,
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["k", "B", "recommended"])?;
            for c in &rec.candidates {
                w.write_record([
                    c.k.to_string(),
                    c.blocked.to_string(),
                    (c.k == rec.k).to_string(),
                ])?;
            }
            String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv")
        }
    };
    Ok(Rendered::ok(body))
}

pub fn write_output(
    path: Option<&Path>,
    body: &str,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    match path {
        Some(path) => std::fs::write(path, body)?,
        None => stdout.write_all(body.as_bytes())?,
    }
    Ok(())
}
