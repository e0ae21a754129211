use std::collections::VecDeque;

use super::record::ObservationRecord;
use crate::error::SimError;
use crate::params::ModelParams;

/// Attempt outcomes of the canonical seven-observation scenario (`m = 2`, `k = 2`).
///
/// q1 ok; q2 lost; q2, q3, q4 ok; q5 lost; q5 ok, q6 lost; q6 lost again;
/// then q6..q10 drain.
pub const CANONICAL_SCRIPT: [bool; 14] = [
    true, false, true, true, true, false, true, false, false, true, true, true, true, true,
];

/// `state_before` of observations 1 to 7 in the canonical scenario.
pub const CANONICAL_STATES: [usize; 7] = [1, 1, 3, 1, 3, 4, 5];

/// Parameters of the canonical scenario.
pub fn canonical_params() -> ModelParams {
    ModelParams::new(0.0, 2, 2).expect("valid constant parameters")
}

/// Replays scripted attempt outcomes (`true` = delivered) for `observations` epochs.
///
/// Messages carry ids `1, 2, ...` in arrival order; blocked arrivals keep their id
/// and are reported in `blocked_ids` of the epoch during which they arrived.
pub fn run_trace(
    params: &ModelParams,
    script: &[bool],
    observations: usize,
) -> Result<Vec<ObservationRecord>, SimError> {
    let (m, capacity) = (params.arrivals(), params.capacity());
    let mut next_id = 1u64;
    let mut buffer: VecDeque<u64> = VecDeque::from([next_id]);
    next_id += 1;
    let mut cursor = 0usize;
    let mut records = Vec::with_capacity(observations);

    for index in 1..=observations {
        let state_before = buffer.len();
        let mut attempts = Vec::new();
        let mut failed = false;
        while !buffer.is_empty() {
            let ok = *script.get(cursor).ok_or(SimError::ScriptExhausted {
                consumed: cursor,
                observation: index,
            })?;
            cursor += 1;
            attempts.push(ok);
            if !ok {
                failed = true;
                break;
            }
            buffer.pop_front();
        }

        let incoming = if failed { m } else { 1 };
        let mut blocked_ids = Vec::new();
        for _ in 0..incoming {
            if buffer.len() < capacity {
                buffer.push_back(next_id);
            } else {
                blocked_ids.push(next_id);
            }
            next_id += 1;
        }

        records.push(ObservationRecord {
            index: index as u64,
            state_before,
            attempts,
            arrivals_admitted: incoming - blocked_ids.len(),
            arrivals_blocked: blocked_ids.len(),
            state_after: buffer.len(),
            blocked_ids,
        });
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_scenario() {
        let recs = run_trace(&canonical_params(), &CANONICAL_SCRIPT, 7).unwrap();
        let states: Vec<usize> = recs.iter().map(|r| r.state_before).collect();
        assert_eq!(states, CANONICAL_STATES);
        // q11 arrives during the second timeout of q6 and is dropped, so the
        // buffer read at observation 7 holds q6..q10.
        assert_eq!(recs[5].blocked_ids, vec![11]);
        assert_eq!(recs[5].state_after, 5);
        let total: usize = recs.iter().map(|r| r.arrivals_blocked).sum();
        assert_eq!(total, 1);
        assert_eq!(recs[6].attempts.len(), 5);
        assert_eq!(recs[6].state_after, 1);
    }

    #[test]
    fn all_success_stays_at_one() {
        let recs = run_trace(&canonical_params(), &[true; 5], 5).unwrap();
        assert!(recs
            .iter()
            .all(|r| r.state_before == 1 && r.state_after == 1));
    }

    #[test]
    fn all_failure_k1_pins_at_full() {
        let params = ModelParams::new(0.5, 3, 1).unwrap();
        let recs = run_trace(&params, &[false; 6], 6).unwrap();
        assert_eq!(recs[0].state_before, 1);
        assert_eq!(recs[0].arrivals_blocked, 0);
        for rec in &recs[1..] {
            assert_eq!(rec.state_before, 4);
            assert_eq!(rec.state_after, 4);
            assert_eq!(rec.arrivals_blocked, 3);
        }
    }

    #[test]
    fn short_script_is_an_error() {
        let err = run_trace(&canonical_params(), &CANONICAL_SCRIPT[..10], 7).unwrap_err();
        assert_eq!(
            err,
            SimError::ScriptExhausted {
                consumed: 10,
                observation: 7
            }
        );
    }
}
