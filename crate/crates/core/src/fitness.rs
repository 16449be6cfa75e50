//! Pseudo-Boolean benchmark functions and the per-run evaluation counter.
//!
//! Maximization everywhere. Every objective evaluation made through
//! [`Objective::evaluate`] bumps the [`EvalCounter`] by exactly one; nothing is
//! cached, so evaluating the same individual twice counts twice.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ea::{Individual, Population};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FitnessError {
    #[error("jump gap {gap} outside 1..={n}")]
    BadGap { gap: usize, n: usize },
    #[error("diversity needs at least two members")]
    TooSmall,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    OneMax,
    LeadingOnes,
    Jump { gap: usize },
}

impl Objective {
    /// Raw function value; does not count as an evaluation.
    pub fn value(&self, x: &Individual) -> Result<f64, FitnessError> {
        Ok(match *self {
            Objective::OneMax => onemax_value(x) as f64,
            Objective::LeadingOnes => leading_ones_value(x) as f64,
            Objective::Jump { gap } => jump_value(x, gap)? as f64,
        })
    }

    pub fn evaluate(&self, x: &Individual, counter: &mut EvalCounter) -> Result<f64, FitnessError> {
        let v = self.value(x)?;
        counter.observe(x, v);
        Ok(v)
    }

    /// Display name used in IOH metadata.
    pub fn name(&self) -> String {
        match self {
            Objective::OneMax => "OneMax".to_owned(),
            Objective::LeadingOnes => "LeadingOnes".to_owned(),
            Objective::Jump { gap } => format!("Jump{gap}"),
        }
    }
}

pub fn onemax_value(x: &Individual) -> usize {
    x.ones()
}

pub fn leading_ones_value(x: &Individual) -> usize {
    x.bits().iter().take_while(|&&b| b).count()
}

/// `gap + |x|_1` outside the gap or at the optimum, `n - |x|_1` inside it.
pub fn jump_value(x: &Individual, gap: usize) -> Result<usize, FitnessError> {
    let n = x.len();
    if gap < 1 || gap > n {
        return Err(FitnessError::BadGap { gap, n });
    }
    let ones = x.ones();
    Ok(if ones <= n - gap || ones == n {
        gap + ones
    } else {
        n - ones
    })
}

pub fn onemax(x: &Individual, counter: &mut EvalCounter) -> f64 {
    Objective::OneMax.evaluate(x, counter).expect("onemax is total")
}

pub fn leading_ones(x: &Individual, counter: &mut EvalCounter) -> f64 {
    Objective::LeadingOnes.evaluate(x, counter).expect("leading ones is total")
}

pub fn jump(x: &Individual, gap: usize, counter: &mut EvalCounter) -> Result<f64, FitnessError> {
    Objective::Jump { gap }.evaluate(x, counter)
}

/// Mean Hamming distance over all unordered pairs. Not an objective
/// evaluation, so it takes no counter.
pub fn diversity_mean_hamming(pop: &Population) -> Result<f64, FitnessError> {
    let members = pop.members();
    if members.len() < 2 {
        return Err(FitnessError::TooSmall);
    }
    let mut total = 0usize;
    let mut pairs = 0usize;
    for (i, a) in members.iter().enumerate() {
        for b in &members[i + 1..] {
            total += a
                .hamming(b)
                .map_err(|_| FitnessError::LengthMismatch(a.len(), b.len()))?;
            pairs += 1;
        }
    }
    Ok(total as f64 / pairs as f64)
}

/// Evaluation count and best-so-far observation within one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EvalCounter {
    count: u64,
    best: Option<(f64, Individual)>,
}

impl EvalCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn best_fitness(&self) -> Option<f64> {
        self.best.as_ref().map(|(f, _)| *f)
    }

    pub fn best_individual(&self) -> Option<&Individual> {
        self.best.as_ref().map(|(_, x)| x)
    }

    /// Records one evaluation; the best only moves on strict improvement.
    pub fn observe(&mut self, x: &Individual, value: f64) {
        self.count += 1;
        match &self.best {
            Some((f, _)) if *f >= value => {}
            _ => self.best = Some((value, x.clone())),
        }
    }

    /// Folds in the evaluations of a finished child (a worker task).
    pub fn absorb(&mut self, child: &EvalCounter) {
        self.count += child.count;
        if let Some((value, x)) = &child.best {
            match &self.best {
                Some((f, _)) if *f >= *value => {}
                _ => self.best = Some((*value, x.clone())),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ind(s: &str) -> Individual {
        Individual::parse(s).unwrap()
    }

    #[test]
    fn onemax_examples() {
        let mut c = EvalCounter::new();
        assert_eq!(onemax(&ind("00000"), &mut c), 0.0);
        assert_eq!(onemax(&ind("11111"), &mut c), 5.0);
        assert_eq!(onemax(&ind("1101"), &mut c), 3.0);
        assert_eq!(c.count(), 3);
    }

    #[test]
    fn leading_ones_examples() {
        let mut c = EvalCounter::new();
        assert_eq!(leading_ones(&ind("0111"), &mut c), 0.0);
        assert_eq!(leading_ones(&ind("1111"), &mut c), 4.0);
        assert_eq!(leading_ones(&ind("1101"), &mut c), 2.0);
        assert_eq!(c.count(), 3);
    }

    #[test]
    fn jump_examples() {
        let mut c = EvalCounter::new();
        assert_eq!(jump(&ind("11111"), 2, &mut c), Ok(7.0));
        assert_eq!(jump(&ind("11100"), 2, &mut c), Ok(5.0));
        assert_eq!(jump(&ind("11110"), 2, &mut c), Ok(1.0));
        assert_eq!(jump(&ind("11110"), 0, &mut c), Err(FitnessError::BadGap { gap: 0, n: 5 }));
        assert_eq!(jump(&ind("11110"), 6, &mut c), Err(FitnessError::BadGap { gap: 6, n: 5 }));
        assert_eq!(c.count(), 3);
    }

    #[test]
    fn diversity_examples() {
        let p = |s| Population::parse(s).unwrap();
        assert_eq!(diversity_mean_hamming(&p("01,01")), Ok(0.0));
        assert_eq!(diversity_mean_hamming(&p("00,11")), Ok(2.0));
        assert_eq!(diversity_mean_hamming(&p("00,01,11")), Ok(4.0 / 3.0));
        assert_eq!(diversity_mean_hamming(&p("00")), Err(FitnessError::TooSmall));
        assert!(matches!(
            diversity_mean_hamming(&p("00,011")),
            Err(FitnessError::LengthMismatch(2, 3))
        ));
    }

    #[test]
    fn counter_tracks_best_and_absorbs() {
        let mut c = EvalCounter::new();
        assert_eq!(c.best_fitness(), None);
        onemax(&ind("100"), &mut c);
        onemax(&ind("110"), &mut c);
        onemax(&ind("011"), &mut c);
        assert_eq!(c.best_fitness(), Some(2.0));
        assert_eq!(c.best_individual(), Some(&ind("110")));

        let mut child = EvalCounter::new();
        onemax(&ind("111"), &mut child);
        c.absorb(&child);
        assert_eq!(c.count(), 4);
        assert_eq!(c.best_individual(), Some(&ind("111")));
    }
}
