use restbuf_core::chain::{expected_blocked, stationary};
use restbuf_core::ModelParams;
use serde::Serialize;

use crate::error::CliError;

/// Relative gap below which two blocking values count as equal.
///
/// At `m = 5` the two candidate curves cross exactly at `p = 0.2`, where the
/// computed values differ only by round-off.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Candidate {
    pub k: u32,
    #[serde(rename = "B")]
    pub blocked: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Recommendation {
    pub p: f64,
    pub m: u32,
    pub k: u32,
    pub candidates: Vec<Candidate>,
    pub rationale: String,
}

/// Index of the smallest value; near-ties go to the smaller `k`.
pub fn argmin_blocked(candidates: &[Candidate]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, c) in candidates.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &candidates[b];
                let scale = cur.blocked.abs().max(c.blocked.abs());
                let tie = (cur.blocked - c.blocked).abs() <= TIE_TOLERANCE * scale;
                if tie {
                    Some(if c.k < cur.k { i } else { b })
                } else if c.blocked < cur.blocked {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Picks the candidate `k` with the least expected blocking at `(p, m)`.
pub fn recommend(p: f64, m: u32, ks: &[u32]) -> Result<Recommendation, CliError> {
    if ks.is_empty() {
        return Err(CliError::Usage("no candidate k given".into()));
    }
    let candidates = ks
        .iter()
        .map(|&k| {
            let params = ModelParams::new(p, m, k)?;
            let dist = stationary(&params)?;
            Ok(Candidate {
                k,
                blocked: expected_blocked(&params, &dist),
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let best = &candidates[argmin_blocked(&candidates).expect("non-empty")];
    let others: Vec<String> = candidates
        .iter()
        .filter(|c| c.k != best.k)
        .map(|c| format!("k={} gives B={:.6}", c.k, c.blocked))
        .collect();
    let rationale = if others.is_empty() {
        format!("only candidate k={} (B={:.6})", best.k, best.blocked)
    } else {
        format!(
            "k={} has the least expected blocking B={:.6}; {}",
            best.k,
            best.blocked,
            others.join(", ")
        )
    };
    Ok(Recommendation {
        p,
        m,
        k: best.k,
        candidates,
        rationale,
    })
}

impl Recommendation {
    pub fn to_text(&self) -> String {
        format!(
            "p={} m={}: recommended k={}\n{}\n",
            self.p, self.m, self.k, self.rationale
        )
    }
}
