use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::thread;

use rayon::prelude::*;
use restbuf_core::chain::{expected_blocked, expected_buffer_size, stationary};
use restbuf_core::sim::{run_replications, BlockedDenominator, SimConfig};
use restbuf_core::ModelParams;
use restbuf_testbed::{run_experiment, InjectionSide, TestbedConfig};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

pub const FIXED_COLUMNS: [&str; 11] = [
    "p",
    "k",
    "m",
    "M",
    "S_theory",
    "S_sim",
    "S_sim_ci95",
    "S_testbed",
    "B_theory",
    "B_sim",
    "B_testbed",
];

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    Hash,
    PartialOrd,
    Ord,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Theory,
    Sim,
    Testbed,
}

/// Timers and run length for testbed points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestbedSweep {
    pub t: f64,
    pub timeout: f64,
    pub observations: u64,
    pub warmup: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub p_grid: Vec<f64>,
    pub k_list: Vec<u32>,
    pub m: u32,
    pub engines: BTreeSet<Engine>,
    pub replications: u32,
    /// Observations per replication.
    pub observations: u64,
    pub warmup: u64,
    pub seed: u64,
    pub blocked_denominator: BlockedDenominator,
    pub testbed: Option<TestbedSweep>,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.p_grid.is_empty() || self.k_list.is_empty() {
            return Err(CliError::Usage(
                "p grid and k list must be non-empty".into(),
            ));
        }
        if let Some(p) = self.p_grid.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(CliError::Usage(format!("p = {p} is outside [0, 1]")));
        }
        if self.engines.is_empty() {
            return Err(CliError::Usage("select at least one engine".into()));
        }
        if self.engines.contains(&Engine::Testbed) && self.testbed.is_none() {
            return Err(CliError::Usage(
                "the testbed engine needs --t and --timeout".into(),
            ));
        }
        for &k in &self.k_list {
            ModelParams::new(0.5, self.m, k)?;
        }
        Ok(())
    }

    /// Sweep points in output order.
    pub fn points(&self) -> Vec<(u32, f64)> {
        let mut ks = self.k_list.clone();
        ks.sort_unstable();
        ks.dedup();
        let mut ps = self.p_grid.clone();
        ps.sort_by(f64::total_cmp);
        ps.dedup();
        ks.iter()
            .flat_map(|&k| ps.iter().map(move |&p| (k, p)))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub p: f64,
    pub k: u32,
    pub m: u32,
    #[serde(rename = "M")]
    pub capacity: usize,
    #[serde(rename = "S_theory")]
    pub s_theory: Option<f64>,
    #[serde(rename = "S_sim")]
    pub s_sim: Option<f64>,
    #[serde(rename = "S_sim_ci95")]
    pub s_sim_ci95: Option<f64>,
    #[serde(rename = "S_testbed")]
    pub s_testbed: Option<f64>,
    #[serde(rename = "B_theory")]
    pub b_theory: Option<f64>,
    #[serde(rename = "B_sim")]
    pub b_sim: Option<f64>,
    #[serde(rename = "B_testbed")]
    pub b_testbed: Option<f64>,
    /// Theory when computed, otherwise simulated occupancy.
    pub pi: BTreeMap<usize, f64>,
    /// Observations behind `S_sim`, for the coherence check.
    #[serde(skip)]
    pub sim_observations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub schema_version: u32,
    pub rows: Vec<BenchRow>,
}

fn theory_sim_row(spec: &SweepSpec, index: usize, k: u32, p: f64) -> Result<BenchRow, CliError> {
    let params = ModelParams::new(p, spec.m, k)?;
    let mut row = BenchRow {
        p,
        k,
        m: spec.m,
        capacity: params.capacity(),
        s_theory: None,
        s_sim: None,
        s_sim_ci95: None,
        s_testbed: None,
        b_theory: None,
        b_sim: None,
        b_testbed: None,
        pi: BTreeMap::new(),
        sim_observations: 0,
    };
    if spec.engines.contains(&Engine::Theory) {
        let dist = stationary(&params)?;
        row.s_theory = Some(expected_buffer_size(&dist));
        row.b_theory = Some(expected_blocked(&params, &dist));
        row.pi = dist.iter().collect();
    }
    if spec.engines.contains(&Engine::Sim) {
        let mut config = SimConfig::new(params, spec.observations, spec.seed)
            .with_warmup(spec.warmup)
            .with_stream(index as u64);
        config.blocked_denominator = spec.blocked_denominator;
        let report = run_replications(&config, spec.replications)?;
        row.s_sim = Some(report.s_hat);
        row.s_sim_ci95 = Some(report.s_ci95);
        row.b_sim = Some(report.b_hat);
        row.sim_observations = report.n_used;
        if row.pi.is_empty() {
            row.pi = report.occupancy.iter().map(|o| (o.state, o.freq)).collect();
        }
    }
    Ok(row)
}

fn testbed_config(
    spec: &SweepSpec,
    tb: &TestbedSweep,
    index: usize,
    k: u32,
    p: f64,
) -> TestbedConfig {
    TestbedConfig {
        p: Some(p),
        loss_vector: None,
        m: spec.m,
        k,
        t_scaled: tb.t,
        timeout_scaled: tb.timeout,
        frame_size: restbuf_testbed::message::DEFAULT_FRAME_SIZE,
        injection_side: InjectionSide::Server,
        seed: spec.seed.wrapping_add(index as u64),
        observations: tb.observations,
        warmup: tb.warmup,
        pause_scaled: None,
        keep_alive: false,
        vector_length: restbuf_testbed::config::DEFAULT_VECTOR_LENGTH,
    }
}

/// Runs every point; output is sorted by `(k, p)` and does not depend on scheduling.
pub fn run_sweep(spec: &SweepSpec) -> Result<BenchReport, CliError> {
    spec.validate()?;
    let points = spec.points();
    let mut rows = points
        .par_iter()
        .enumerate()
        .map(|(i, &(k, p))| theory_sim_row(spec, i, k, p))
        .collect::<Result<Vec<_>, _>>()?;

    if let (true, Some(tb)) = (spec.engines.contains(&Engine::Testbed), &spec.testbed) {
        // testbed points mostly sleep, so they share the host side by side
        let handles: Vec<_> = points
            .iter()
            .enumerate()
            .map(|(i, &(k, p))| {
                let config = testbed_config(spec, tb, i, k, p);
                thread::spawn(move || run_experiment(&config))
            })
            .collect();
        for (row, handle) in rows.iter_mut().zip(handles) {
            let outcome = handle.join().expect("testbed point panicked")?;
            if !outcome.invariants.all_hold() {
                return Err(CliError::Validation(format!(
                    "testbed invariants failed at k={} p={}: {:?}",
                    row.k, row.p, outcome.invariants.violations
                )));
            }
            row.s_testbed = Some(outcome.report.s_hat);
            row.b_testbed = Some(outcome.report.b_hat);
        }
    }
    Ok(BenchReport {
        schema_version: SCHEMA_VERSION,
        rows,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl BenchReport {
    /// Union of states over all rows, ascending.
    pub fn states(&self) -> Vec<usize> {
        let set: BTreeSet<usize> = self
            .rows
            .iter()
            .flat_map(|r| r.pi.keys().copied())
            .collect();
        set.into_iter().collect()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<(), CliError> {
        let mut out = out;
        writeln!(out, "# restbuf sweep schema {}", self.schema_version)?;
        let states = self.states();
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<String> = FIXED_COLUMNS
            .iter()
            .map(|c| c.to_string())
            .chain(states.iter().map(|s| format!("pi_{s}")))
            .collect();
        w.write_record(&header)?;
        for r in &self.rows {
            let mut record = vec![
                r.p.to_string(),
                r.k.to_string(),
                r.m.to_string(),
                r.capacity.to_string(),
                cell(r.s_theory),
                cell(r.s_sim),
                cell(r.s_sim_ci95),
                cell(r.s_testbed),
                cell(r.b_theory),
                cell(r.b_sim),
                cell(r.b_testbed),
            ];
            record.extend(states.iter().map(|s| cell(r.pi.get(s).copied())));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        Ok(String::from_utf8(buf).expect("utf-8 csv"))
    }

    /// Rows where simulation and theory are more than three standard errors apart.
    ///
    /// The standard error is floored at `1/n`, since a run that never leaves
    /// one state reports a zero-width interval.
    pub fn coherence_violations(&self) -> Vec<String> {
        self.rows
            .iter()
            .filter_map(|r| {
                let (theory, sim, ci) = (r.s_theory?, r.s_sim?, r.s_sim_ci95?);
                let floor = 1.0 / r.sim_observations.max(1) as f64;
                let sigma = (ci / restbuf_core::sim::stats::Z95).max(floor);
                ((sim - theory).abs() > 3.0 * sigma).then(|| {
                    format!(
                        "k={} p={}: S_sim={sim} vs S_theory={theory} (sigma {sigma:.3e})",
                        r.k, r.p
                    )
                })
            })
            .collect()
    }
}
