use restbuf_core::chain::{
    balance_residuals, expected_blocked, expected_buffer_size, stationary, SolveMethod,
};
use restbuf_core::ModelParams;
use serde::Serialize;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StateProb {
    pub state: usize,
    pub pi: f64,
}

/// Stationary metrics for one parameter point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryReport {
    pub p: f64,
    pub k: u32,
    pub m: u32,
    #[serde(rename = "M")]
    pub capacity: usize,
    pub method: &'static str,
    pub pi: Vec<StateProb>,
    #[serde(rename = "S")]
    pub size: f64,
    #[serde(rename = "B")]
    pub blocked: f64,
    /// Largest flow-balance residual.
    pub flow_residual: f64,
    /// Largest residual of the literal equations (closed forms only).
    pub literal_residual: Option<f64>,
}

pub fn theory(params: &ModelParams) -> Result<TheoryReport, CliError> {
    let dist = stationary(params)?;
    let residuals = balance_residuals(params, &dist)?;
    let method = match dist.method() {
        SolveMethod::ClosedK1 => "closed-k1",
        SolveMethod::ClosedK2 => "closed-k2",
        SolveMethod::Numeric => "numeric",
    };
    let literal = (dist.method() != SolveMethod::Numeric).then(|| residuals.max_literal());
    Ok(TheoryReport {
        p: params.p(),
        k: params.k(),
        m: params.m(),
        capacity: params.capacity(),
        method,
        pi: dist
            .iter()
            .map(|(state, pi)| StateProb { state, pi })
            .collect(),
        size: expected_buffer_size(&dist),
        blocked: expected_blocked(params, &dist),
        flow_residual: residuals.max_flow(),
        literal_residual: literal,
    })
}

impl TheoryReport {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "p={} k={} m={} M={} ({})\nS = {:.6}\nB = {:.6}\n",
            self.p, self.k, self.m, self.capacity, self.method, self.size, self.blocked
        );
        for s in &self.pi {
            out.push_str(&format!("pi({}) = {:.6}\n", s.state, s.pi));
        }
        out.push_str(&format!("max flow residual = {:.3e}\n", self.flow_residual));
        if let Some(r) = self.literal_residual {
            out.push_str(&format!("max literal residual = {r:.3e}\n"));
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["state", "pi"])?;
        for s in &self.pi {
            w.write_record([s.state.to_string(), s.pi.to_string()])?;
        }
        w.write_record(["S".to_string(), self.size.to_string()])?;
        w.write_record(["B".to_string(), self.blocked.to_string()])?;
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"))
    }
}
