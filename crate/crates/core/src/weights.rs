//! Per-sample weights, kept as exact fractions so the reachable weight grid
//! can be compared without floating-point slack.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub type Fraction = Ratio<u64>;

/// Parse `"a/b"` or a plain decimal such as `"0.3333"` into an exact fraction.
pub fn parse_fraction(text: &str) -> Option<Fraction> {
    let text = text.trim();
    if let Some((num, den)) = text.split_once('/') {
        let num: u64 = num.trim().parse().ok()?;
        let den: u64 = den.trim().parse().ok()?;
        if den == 0 {
            return None;
        }
        return Some(Fraction::new(num, den));
    }
    let (int_part, frac_part) = text.split_once('.').unwrap_or((text, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let all_digits = |s: &str| s.bytes().all(|b| b.is_ascii_digit());
    if !all_digits(int_part) || !all_digits(frac_part) || frac_part.len() > 18 {
        return None;
    }
    let int: u64 = if int_part.is_empty() {
        0
    } else {
        int_part.parse().ok()?
    };
    let den = 10u64.pow(frac_part.len() as u32);
    let frac: u64 = if frac_part.is_empty() {
        0
    } else {
        frac_part.parse().ok()?
    };
    let num = int.checked_mul(den)?.checked_add(frac)?;
    Some(Fraction::new(num, den))
}

pub fn fraction_to_f64(f: Fraction) -> f64 {
    *f.numer() as f64 / *f.denom() as f64
}

/// The floor `w_min` applied to every emitted weight. Must lie in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MinWeight(Fraction);

impl MinWeight {
    pub fn new(value: Fraction) -> Result<Self> {
        if value > Fraction::from_integer(1) {
            return Err(Error::Contract(format!(
                "minimum weight {value} lies outside [0, 1]"
            )));
        }
        Ok(MinWeight(value))
    }

    pub fn value(self) -> Fraction {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        fraction_to_f64(self.0)
    }
}

impl Default for MinWeight {
    fn default() -> Self {
        MinWeight(Fraction::new(1, 3))
    }
}

impl FromStr for MinWeight {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let value = parse_fraction(s)
            .ok_or_else(|| Error::Format(format!("cannot parse minimum weight {s:?}")))?;
        MinWeight::new(value)
    }
}

impl fmt::Display for MinWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SampleWeight {
    pub weight: Fraction,
    /// Number of candidates whose prediction matched the gold labels (C).
    pub agreement_count: usize,
    /// Number of candidates actually scored; smaller than K for short pools.
    pub k_effective: usize,
}

impl SampleWeight {
    /// C / k_effective, without the floor.
    pub fn raw_ratio(&self) -> Fraction {
        Fraction::new(self.agreement_count as u64, self.k_effective as u64)
    }

    pub fn weight_f64(&self) -> f64 {
        fraction_to_f64(self.weight)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WeightTable {
    entries: BTreeMap<usize, SampleWeight>,
}

impl WeightTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert an entry; a repeated id is a consistency error.
    pub fn insert(&mut self, sample_id: usize, weight: SampleWeight) -> Result<()> {
        if self.entries.insert(sample_id, weight).is_some() {
            return Err(Error::Consistency(format!(
                "sample {sample_id} weighed twice"
            )));
        }
        Ok(())
    }

    pub fn get(&self, sample_id: usize) -> Option<&SampleWeight> {
        self.entries.get(&sample_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in ascending sample id order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, &SampleWeight)> {
        self.entries.iter().map(|(&id, w)| (id, w))
    }

    pub fn contains(&self, sample_id: usize) -> bool {
        self.entries.contains_key(&sample_id)
    }
}
