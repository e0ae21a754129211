use std::io::{self, Write};

use serde::Serialize;

/// One observation epoch: the state read at the observation, the attempts made
/// until the next observation, and the arrivals that came in meanwhile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ObservationRecord {
    /// 1-based observation number.
    pub index: u64,
    pub state_before: usize,
    /// Outcome of each attempt, `true` for a delivered message.
    pub attempts: Vec<bool>,
    pub arrivals_admitted: usize,
    pub arrivals_blocked: usize,
    pub state_after: usize,
    /// Ids of blocked arrivals, filled only by replays that track message ids.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub blocked_ids: Vec<u64>,
}

impl ObservationRecord {
    pub fn successes_before_failure(&self) -> usize {
        self.attempts.iter().take_while(|&&ok| ok).count()
    }

    pub fn timed_out(&self) -> bool {
        self.attempts.iter().any(|&ok| !ok)
    }
}

#[derive(Serialize)]
struct LogLine {
    index: u64,
    state_before: usize,
    state_after: usize,
    blocked: usize,
}

/// Writes one `{index, state_before, state_after, blocked}` JSON object per line.
pub fn write_ndjson<'a, W: Write>(
    mut out: W,
    records: impl IntoIterator<Item = &'a ObservationRecord>,
) -> io::Result<()> {
    for rec in records {
        write_ndjson_line(&mut out, rec)?;
    }
    Ok(())
}

pub fn write_ndjson_line<W: Write>(mut out: W, rec: &ObservationRecord) -> io::Result<()> {
    let line = LogLine {
        index: rec.index,
        state_before: rec.state_before,
        state_after: rec.state_after,
        blocked: rec.arrivals_blocked,
    };
    serde_json::to_writer(&mut out, &line)?;
    out.write_all(b"\n")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ndjson_shape() {
        let rec = ObservationRecord {
            index: 6,
            state_before: 4,
            attempts: vec![false],
            arrivals_admitted: 1,
            arrivals_blocked: 1,
            state_after: 5,
            blocked_ids: vec![11],
        };
        let mut buf = Vec::new();
        write_ndjson(&mut buf, [&rec, &rec]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            r#"{"index":6,"state_before":4,"state_after":5,"blocked":1}"#
        );
        assert_eq!(text.lines().count(), 2);
        assert_eq!(rec.successes_before_failure(), 0);
        assert!(rec.timed_out());
    }
}
