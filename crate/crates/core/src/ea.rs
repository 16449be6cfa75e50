//! Bit-string individuals, populations, and the variation and selection
//! operators.
//!
//! All operators are pure: they take inputs by reference and return new
//! values. The only mutable argument is the [`RandomSource`], and the order of
//! draws from it is part of each operator's contract (the exported runtime
//! replays the same draws).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::RandomSource;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EaError {
    #[error("bad length {0}")]
    BadLength(usize),
    #[error("bad character {0:?} in bit string")]
    BadCharacter(String),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("bad probability {0}")]
    BadProbability(f64),
    #[error("bad count {0}")]
    BadCount(usize),
    #[error("empty population")]
    EmptyPopulation,
    #[error("all members have zero fitness")]
    AllZeroFitness,
    #[error("negative fitness {0}")]
    NegativeFitness(f64),
}

/// Fixed-length bit string.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Individual {
    bits: Vec<bool>,
}

impl Individual {
    pub fn from_bits(bits: Vec<bool>) -> Result<Self, EaError> {
        if bits.is_empty() {
            return Err(EaError::BadLength(0));
        }
        Ok(Self { bits })
    }

    pub fn random(n: usize, rng: &mut RandomSource) -> Result<Self, EaError> {
        if n < 1 {
            return Err(EaError::BadLength(n));
        }
        Ok(Self {
            bits: (0..n).map(|_| rng.next_bit()).collect(),
        })
    }

    /// Parses text over `{0,1}`; the empty string is rejected as well.
    pub fn parse(text: &str) -> Result<Self, EaError> {
        if text.is_empty() {
            return Err(EaError::BadCharacter(String::new()));
        }
        text.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(EaError::BadCharacter(other.to_string())),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(|bits| Self { bits })
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self {
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    pub fn hamming(&self, other: &Self) -> Result<usize, EaError> {
        check_same_len(self, other)?;
        Ok(self
            .bits
            .iter()
            .zip(&other.bits)
            .filter(|(a, b)| a != b)
            .count())
    }
}

impl fmt::Display for Individual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Individual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Individual({self})")
    }
}

impl TryFrom<String> for Individual {
    type Error = EaError;
    fn try_from(s: String) -> Result<Self, EaError> {
        Self::parse(&s)
    }
}

impl From<Individual> for String {
    fn from(ind: Individual) -> String {
        ind.to_string()
    }
}

/// Ordered, possibly empty sequence of individuals.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Population {
    members: Vec<Individual>,
}

impl Population {
    pub fn new(members: Vec<Individual>) -> Self {
        Self { members }
    }

    pub fn random(size: usize, n: usize, rng: &mut RandomSource) -> Result<Self, EaError> {
        (0..size)
            .map(|_| Individual::random(n, rng))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    /// Comma-separated bit strings; the empty string is the empty population.
    pub fn parse(text: &str) -> Result<Self, EaError> {
        if text.is_empty() {
            return Ok(Self::default());
        }
        text.split(',')
            .map(|m| Individual::parse(m.trim()))
            .collect::<Result<Vec<_>, _>>()
            .map(Self::new)
    }

    pub fn members(&self) -> &[Individual] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn push(&mut self, ind: Individual) {
        self.members.push(ind);
    }

    pub fn get(&self, index: usize) -> Option<&Individual> {
        self.members.get(index)
    }
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, m) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{m}")?;
        }
        Ok(())
    }
}

fn check_same_len(a: &Individual, b: &Individual) -> Result<(), EaError> {
    if a.len() != b.len() {
        return Err(EaError::LengthMismatch(a.len(), b.len()));
    }
    Ok(())
}

/// Child is `a[..cut] ++ b[cut..]`.
pub fn one_point_crossover_at(a: &Individual, b: &Individual, cut: usize) -> Individual {
    let bits = a.bits[..cut].iter().chain(&b.bits[cut..]).copied().collect();
    Individual { bits }
}

/// Cut drawn uniformly from `1..n`.
pub fn one_point_crossover(
    a: &Individual,
    b: &Individual,
    rng: &mut RandomSource,
) -> Result<Individual, EaError> {
    check_same_len(a, b)?;
    let n = a.len();
    if n < 2 {
        return Err(EaError::BadLength(n));
    }
    let cut = 1 + rng.below(n as u64 - 1) as usize;
    Ok(one_point_crossover_at(a, b, cut))
}

/// Child takes `b` on `[lo, hi)` and `a` elsewhere.
pub fn two_point_crossover_at(a: &Individual, b: &Individual, lo: usize, hi: usize) -> Individual {
    let bits = (0..a.len())
        .map(|i| if (lo..hi).contains(&i) { b.bits[i] } else { a.bits[i] })
        .collect();
    Individual { bits }
}

/// Cuts `lo < hi` drawn uniformly among the pairs in `1..n`: first cut from
/// `n - 1` positions, second from the remaining `n - 2`.
pub fn two_point_crossover(
    a: &Individual,
    b: &Individual,
    rng: &mut RandomSource,
) -> Result<Individual, EaError> {
    check_same_len(a, b)?;
    let n = a.len();
    if n < 3 {
        return Err(EaError::BadLength(n));
    }
    let first = 1 + rng.below(n as u64 - 1) as usize;
    let mut second = 1 + rng.below(n as u64 - 2) as usize;
    if second >= first {
        second += 1;
    }
    let (lo, hi) = if first < second { (first, second) } else { (second, first) };
    Ok(two_point_crossover_at(a, b, lo, hi))
}

/// One bit draw per position: set bit takes from `b`.
pub fn uniform_crossover(
    a: &Individual,
    b: &Individual,
    rng: &mut RandomSource,
) -> Result<Individual, EaError> {
    check_same_len(a, b)?;
    let bits = a
        .bits
        .iter()
        .zip(&b.bits)
        .map(|(&x, &y)| if rng.next_bit() { y } else { x })
        .collect();
    Ok(Individual { bits })
}

/// One `chance(p)` draw per position, in order.
pub fn mutate_per_bit(
    ind: &Individual,
    p: f64,
    rng: &mut RandomSource,
) -> Result<Individual, EaError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(EaError::BadProbability(p));
    }
    let bits = ind.bits.iter().map(|&b| b ^ rng.chance(p)).collect();
    Ok(Individual { bits })
}

/// Flips exactly `k` distinct positions chosen by a partial Fisher-Yates
/// shuffle of `0..n`.
pub fn mutate_k_bits(
    ind: &Individual,
    k: usize,
    rng: &mut RandomSource,
) -> Result<Individual, EaError> {
    let n = ind.len();
    if k > n {
        return Err(EaError::BadCount(k));
    }
    let mut positions: Vec<usize> = (0..n).collect();
    let mut bits = ind.bits.clone();
    for j in 0..k {
        let r = j + rng.below((n - j) as u64) as usize;
        positions.swap(j, r);
        bits[positions[j]] = !bits[positions[j]];
    }
    Ok(Individual { bits })
}

pub fn select_uniform<'p>(
    pop: &'p Population,
    rng: &mut RandomSource,
) -> Result<&'p Individual, EaError> {
    if pop.is_empty() {
        return Err(EaError::EmptyPopulation);
    }
    Ok(&pop.members[rng.below(pop.len() as u64) as usize])
}

/// Roulette wheel over precomputed fitness values (one per member).
///
/// Draws `r = next_f64() * total` and returns the first member whose
/// cumulative fitness exceeds `r`.
pub fn select_proportionate_by<'p>(
    pop: &'p Population,
    fitness: &[f64],
    rng: &mut RandomSource,
) -> Result<&'p Individual, EaError> {
    if pop.is_empty() {
        return Err(EaError::EmptyPopulation);
    }
    debug_assert_eq!(pop.len(), fitness.len());
    if let Some(&neg) = fitness.iter().find(|f| **f < 0.0) {
        return Err(EaError::NegativeFitness(neg));
    }
    let total: f64 = fitness.iter().sum();
    if total <= 0.0 {
        return Err(EaError::AllZeroFitness);
    }
    let r = rng.next_f64() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (i, &f) in fitness.iter().enumerate() {
        acc += f;
        if f > 0.0 {
            last_positive = i;
            if acc > r {
                return Ok(&pop.members[i]);
            }
        }
    }
    // Rounding in the running sum can leave `acc` a hair below `r`.
    Ok(&pop.members[last_positive])
}

pub fn select_fitness_proportionate<'p>(
    pop: &'p Population,
    f: impl FnMut(&Individual) -> f64,
    rng: &mut RandomSource,
) -> Result<&'p Individual, EaError> {
    let fitness: Vec<f64> = pop.members.iter().map(f).collect();
    select_proportionate_by(pop, &fitness, rng)
}

/// Index of the first maximum.
pub fn best_index(fitness: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &f) in fitness.iter().enumerate() {
        match best {
            Some(b) if fitness[b] >= f => {}
            _ => best = Some(i),
        }
    }
    best
}

pub fn best_of(
    pop: &Population,
    f: impl FnMut(&Individual) -> f64,
) -> Result<&Individual, EaError> {
    let fitness: Vec<f64> = pop.members.iter().map(f).collect();
    best_index(&fitness)
        .map(|i| &pop.members[i])
        .ok_or(EaError::EmptyPopulation)
}

pub fn merge(a: &Population, b: &Population) -> Population {
    Population::new(a.members.iter().chain(&b.members).cloned().collect())
}

/// Stable sort by descending fitness values (one per member).
pub fn sort_by_values(pop: &Population, fitness: &[f64]) -> Population {
    let mut order: Vec<usize> = (0..pop.len()).collect();
    order.sort_by(|&i, &j| fitness[j].total_cmp(&fitness[i]));
    Population::new(order.into_iter().map(|i| pop.members[i].clone()).collect())
}

pub fn sort_by_fitness(pop: &Population, f: impl FnMut(&Individual) -> f64) -> Population {
    let fitness: Vec<f64> = pop.members.iter().map(f).collect();
    sort_by_values(pop, &fitness)
}

pub fn take_first(pop: &Population, k: usize) -> Result<Population, EaError> {
    if k > pop.len() {
        return Err(EaError::BadCount(k));
    }
    Ok(Population::new(pop.members[..k].to_vec()))
}
