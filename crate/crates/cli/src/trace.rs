use std::path::Path;

use restbuf_core::sim::{
    canonical_params, run_trace, ObservationRecord, CANONICAL_SCRIPT, CANONICAL_STATES,
};
use restbuf_core::ModelParams;
use serde::Serialize;

use crate::error::CliError;

/// Where the attempt outcomes come from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Script {
    Canonical,
    /// Every attempt succeeds.
    AllOk,
    Outcomes(Vec<bool>),
}

impl Script {
    /// `canonical`, `all-ok`, or a path to a file of `ok`/`fail` tokens.
    pub fn from_arg(arg: &str) -> Result<Self, CliError> {
        match arg {
            "canonical" => Ok(Script::Canonical),
            "all-ok" => Ok(Script::AllOk),
            path => Self::from_file(Path::new(path)),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Tokens `ok`/`fail` (also `1`/`0`), separated by whitespace or commas; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut outcomes = Vec::new();
        for line in text.lines() {
            let line = line.split('#').next().unwrap_or("");
            for token in line.split(|c: char| c.is_whitespace() || c == ',') {
                match token.to_ascii_lowercase().as_str() {
                    "" => {}
                    "ok" | "1" => outcomes.push(true),
                    "fail" | "0" => outcomes.push(false),
                    other => {
                        return Err(CliError::Usage(format!("unknown script token `{other}`")))
                    }
                }
            }
        }
        Ok(Script::Outcomes(outcomes))
    }

    fn outcomes(&self, params: &ModelParams, observations: usize) -> Vec<bool> {
        match self {
            Script::Canonical => CANONICAL_SCRIPT.to_vec(),
            // each observation drains at most M messages
            Script::AllOk => vec![true; observations * params.capacity()],
            Script::Outcomes(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TraceRun {
    pub records: Vec<ObservationRecord>,
    /// Set when replaying the canonical script.
    pub deviation: Option<String>,
}

impl TraceRun {
    pub fn states(&self) -> Vec<usize> {
        self.records.iter().map(|r| r.state_before).collect()
    }
}

/// Replays `script`; the canonical script is checked against its known log.
pub fn trace(
    script: &Script,
    params: Option<ModelParams>,
    observations: Option<usize>,
) -> Result<TraceRun, CliError> {
    let params = params.unwrap_or_else(canonical_params);
    let observations = observations.unwrap_or(CANONICAL_STATES.len());
    let records = run_trace(
        &params,
        &script.outcomes(&params, observations),
        observations,
    )?;
    let mut run = TraceRun {
        records,
        deviation: None,
    };
    if *script == Script::Canonical {
        run.deviation = canonical_deviation(&run, &params, observations);
    }
    Ok(run)
}

fn canonical_deviation(
    run: &TraceRun,
    params: &ModelParams,
    observations: usize,
) -> Option<String> {
    if *params != canonical_params() || observations != CANONICAL_STATES.len() {
        return Some("the canonical replay needs m=2, k=2 and 7 observations".into());
    }
    let states = run.states();
    if states != CANONICAL_STATES {
        return Some(format!("states {states:?}, expected {CANONICAL_STATES:?}"));
    }
    // an arrival blocked during epoch j is seen at the timeout that makes observation j + 1
    let blocked: Vec<(u64, &[u64])> = run
        .records
        .iter()
        .filter(|r| !r.blocked_ids.is_empty())
        .map(|r| (r.index + 1, r.blocked_ids.as_slice()))
        .collect();
    if blocked != [(7, &[11u64][..])] {
        return Some(format!(
            "blocked (observation, ids) {blocked:?}, expected only q11 at 7"
        ));
    }
    None
}

fn outcome_list(attempts: &[bool]) -> String {
    attempts
        .iter()
        .map(|&ok| if ok { "ok" } else { "fail" })
        .collect::<Vec<_>>()
        .join(",")
}

impl TraceRun {
    pub fn to_text(&self) -> String {
        let mut out = String::from(
            "Ob.  before  attempts                  admitted  blocked     after (next Ob.)\n",
        );
        for r in &self.records {
            let blocked = r
                .blocked_ids
                .iter()
                .map(|id| format!("q{id}"))
                .collect::<Vec<_>>()
                .join(",");
            out.push_str(&format!(
                "{:<4} {:<7} {:<25} {:<9} {:<11} {}\n",
                r.index,
                r.state_before,
                outcome_list(&r.attempts),
                r.arrivals_admitted,
                if blocked.is_empty() {
                    "-".into()
                } else {
                    blocked
                },
                r.state_after
            ));
        }
        out
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "index",
            "state_before",
            "attempts",
            "admitted",
            "blocked_ids",
            "state_after",
        ])?;
        for r in &self.records {
            let blocked = r
                .blocked_ids
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(" ");
            w.write_record([
                r.index.to_string(),
                r.state_before.to_string(),
                outcome_list(&r.attempts),
                r.arrivals_admitted.to_string(),
                blocked,
                r.state_after.to_string(),
            ])?;
        }
        Ok(String::from_utf8(w.into_inner().map_err(|e| e.into_error())?).expect("utf-8 csv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_tokens_and_comments() {
        let s = Script::parse("ok fail # first epoch\nOK,0 1\n").unwrap();
        assert_eq!(s, Script::Outcomes(vec![true, false, true, false, true]));
        assert!(Script::parse("ok maybe").is_err());
    }

    #[test]
    fn all_ok_holds_one_message() {
        let run = trace(&Script::AllOk, None, Some(5)).unwrap();
        assert_eq!(run.states(), vec![1; 5]);
    }

    #[test]
    fn canonical_has_no_deviation() {
        let run = trace(&Script::Canonical, None, None).unwrap();
        assert_eq!(run.deviation, None);
        assert_eq!(run.states(), CANONICAL_STATES);
    }
}
