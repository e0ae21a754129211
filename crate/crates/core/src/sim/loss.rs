use rand::seq::SliceRandom;
use serde::Serialize;

use super::rng::stream_rng;
use crate::error::SimError;

/// Per-attempt loss pattern: `true` means the attempt is lost until timeout.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LossVector {
    bits: Vec<bool>,
}

impl LossVector {
    pub fn new(bits: Vec<bool>) -> Result<Self, SimError> {
        if bits.is_empty() {
            return Err(SimError::EmptyVector);
        }
        Ok(Self { bits })
    }

    /// Parses `0`/`1` digits; whitespace and commas are separators.
    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut bits = Vec::new();
        for token in text.split(|c: char| c.is_whitespace() || c == ',') {
            for c in token.chars() {
                match c {
                    '0' => bits.push(false),
                    '1' => bits.push(true),
                    _ => return Err(SimError::BadToken(token.to_string())),
                }
            }
        }
        Self::new(bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn loss_fraction(&self) -> f64 {
        self.ones() as f64 / self.len() as f64
    }

    /// `0`/`1` digits without separators.
    pub fn to_text(&self) -> String {
        self.bits
            .iter()
            .map(|&b| if b { '1' } else { '0' })
            .collect()
    }
}

/// Exactly `round(fraction · length)` ones, shuffled deterministically by `seed`.
pub fn make_loss_vector(fraction: f64, length: usize, seed: u64) -> Result<LossVector, SimError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(crate::error::ModelError::InvalidProbability(fraction).into());
    }
    if length == 0 {
        return Err(SimError::EmptyVector);
    }
    let ones = (fraction * length as f64).round() as usize;
    let mut bits: Vec<bool> = (0..length).map(|i| i < ones).collect();
    bits.shuffle(&mut stream_rng(seed, 0));
    LossVector::new(bits)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_slot_vector_has_one_loss() {
        for seed in 0..20 {
            let v = make_loss_vector(0.2, 5, seed).unwrap();
            assert_eq!(v.len(), 5);
            assert_eq!(v.ones(), 1);
        }
    }

    #[test]
    fn extremes() {
        assert_eq!(make_loss_vector(0.0, 17, 3).unwrap().ones(), 0);
        assert_eq!(make_loss_vector(1.0, 17, 3).unwrap().ones(), 17);
    }

    #[test]
    fn deterministic_per_seed() {
        let a = make_loss_vector(0.3, 1000, 9).unwrap();
        let b = make_loss_vector(0.3, 1000, 9).unwrap();
        let c = make_loss_vector(0.3, 1000, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(a.ones(), 300);
    }

    #[test]
    fn parse_round_trip() {
        let v = LossVector::parse("0 0 0 1 0\n1,1").unwrap();
        assert_eq!(v.to_text(), "0001011");
        assert_eq!(LossVector::parse(&v.to_text()).unwrap(), v);
        assert!(matches!(
            LossVector::parse("01x"),
            Err(SimError::BadToken(_))
        ));
        assert_eq!(LossVector::parse(" \n"), Err(SimError::EmptyVector));
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(make_loss_vector(1.2, 5, 0).is_err());
        assert_eq!(make_loss_vector(0.2, 0, 0), Err(SimError::EmptyVector));
    }
}
