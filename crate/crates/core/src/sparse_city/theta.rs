use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::unit_f64;

/// Named distributions that can be regenerated from a manifest.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistName {
    /// Uniform over `{1, -1, 3, -3}`.
    FourPoint,
    /// Uniform over `{1, -1}`.
    Rademacher,
}

impl DistName {
    pub fn as_str(&self) -> &'static str {
        match self {
            DistName::FourPoint => "four_point",
            DistName::Rademacher => "rademacher",
        }
    }
}

impl std::str::FromStr for DistName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").as_str() {
            "four_point" => Ok(DistName::FourPoint),
            "rademacher" => Ok(DistName::Rademacher),
            other => Err(Error::Distribution(format!("unknown distribution {other:?}"))),
        }
    }
}

/// Integer representation `value = scale * level` shared by all values.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegerLevels {
    pub levels: Vec<i64>,
    pub scale: f64,
}

/// Bounded, zero-mean, finitely supported law of the diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaDistribution {
    name: Option<DistName>,
    values: Vec<f64>,
    probabilities: Vec<f64>,
    cumulative: Vec<f64>,
    bound: f64,
    normalized: bool,
    integer: Option<IntegerLevels>,
}

const MOMENT_TOL: f64 = 1e-12;

impl ThetaDistribution {
    /// Uniform over `{1, -1, 3, -3}`, scaled by `1/sqrt(5)` when `normalized`
    /// so that the second moment is one.
    pub fn four_point(normalized: bool) -> Self {
        let ints = vec![1i64, -1, 3, -3];
        let scale = if normalized { 5f64.sqrt().recip() } else { 1.0 };
        Self::from_levels(DistName::FourPoint, ints, scale, normalized)
    }

    /// Uniform signs. Already has unit second moment.
    pub fn rademacher() -> Self {
        Self::from_levels(DistName::Rademacher, vec![1, -1], 1.0, true)
    }

    pub fn named(name: DistName, normalized: bool) -> Self {
        match name {
            DistName::FourPoint => Self::four_point(normalized),
            DistName::Rademacher => Self::rademacher(),
        }
    }

    fn from_levels(name: DistName, ints: Vec<i64>, scale: f64, normalized: bool) -> Self {
        let k = ints.len();
        let values: Vec<f64> = ints.iter().map(|&v| v as f64 * scale).collect();
        let probabilities = vec![1.0 / k as f64; k];
        let bound = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Self {
            name: Some(name),
            cumulative: cumulative(&probabilities),
            values,
            probabilities,
            bound,
            normalized,
            integer: Some(IntegerLevels { levels: ints, scale }),
        }
    }

    /// Arbitrary finite law. Probabilities must sum to one and the mean must
    /// vanish. `normalized` is set when the second moment equals one.
    pub fn custom(values: Vec<f64>, probabilities: Vec<f64>) -> Result<Self> {
        if values.is_empty() || values.len() != probabilities.len() {
            return Err(Error::Distribution(
                "values and probabilities must be nonempty and of equal length".into(),
            ));
        }
        if values.len() > u8::MAX as usize + 1 {
            return Err(Error::Distribution("at most 256 support points".into()));
        }
        if values.iter().chain(&probabilities).any(|v| !v.is_finite())
            || probabilities.iter().any(|&p| p < 0.0)
        {
            return Err(Error::Distribution("non-finite value or negative probability".into()));
        }
        let total: f64 = probabilities.iter().sum();
        if (total - 1.0).abs() > MOMENT_TOL {
            return Err(Error::Distribution(format!("probabilities sum to {total}")));
        }
        let mean: f64 = values.iter().zip(&probabilities).map(|(v, p)| v * p).sum();
        if mean.abs() > MOMENT_TOL {
            return Err(Error::Distribution(format!("mean is {mean}, expected 0")));
        }
        let second: f64 = values.iter().zip(&probabilities).map(|(v, p)| v * v * p).sum();
        let bound = values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        Ok(Self {
            name: None,
            cumulative: cumulative(&probabilities),
            values,
            probabilities,
            bound,
            normalized: (second - 1.0).abs() <= MOMENT_TOL,
            integer: None,
        })
    }

    pub fn name(&self) -> Option<DistName> {
        self.name
    }

    pub fn label(&self) -> &'static str {
        self.name.map_or("custom", |n| n.as_str())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    /// `max |value|`.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn integer_levels(&self) -> Option<&IntegerLevels> {
        self.integer.as_ref()
    }

    pub fn mean(&self) -> f64 {
        self.moment(1)
    }

    pub fn second_moment(&self) -> f64 {
        self.moment(2)
    }

    fn moment(&self, p: i32) -> f64 {
        self.values
            .iter()
            .zip(&self.probabilities)
            .map(|(v, q)| v.powi(p) * q)
            .sum()
    }

    /// Index into [`values`](Self::values) drawn by inverse CDF from 53 random bits.
    pub fn sample_level<R: RngCore + ?Sized>(&self, rng: &mut R) -> u8 {
        let u = unit_f64(rng);
        let last = self.values.len() - 1;
        self.cumulative
            .iter()
            .position(|&c| u < c)
            .unwrap_or(last)
            .min(last) as u8
    }
}

fn cumulative(p: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    p.iter()
        .map(|q| {
            acc += q;
            acc
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn four_point_moments() {
        let raw = ThetaDistribution::four_point(false);
        assert_eq!(raw.mean(), 0.0);
        assert!((raw.second_moment() - 5.0).abs() < 1e-15);
        assert_eq!(raw.bound(), 3.0);
        assert!(!raw.normalized());

        let unit = ThetaDistribution::four_point(true);
        assert!(unit.mean().abs() < 1e-15);
        assert!((unit.second_moment() - 1.0).abs() < 1e-14);
        assert!((unit.bound() - 3.0 / 5f64.sqrt()).abs() < 1e-15);
        assert!(unit.normalized());
        assert_eq!(unit.integer_levels().unwrap().levels, vec![1, -1, 3, -3]);
    }

    #[test]
    fn rademacher_moments() {
        let r = ThetaDistribution::rademacher();
        assert_eq!(r.mean(), 0.0);
        assert_eq!(r.second_moment(), 1.0);
        assert_eq!(r.bound(), 1.0);
        assert_eq!(r.label(), "rademacher");
    }

    #[test]
    fn custom_validation() {
        assert!(ThetaDistribution::custom(vec![1.0, 2.0], vec![0.5, 0.5]).is_err());
        assert!(ThetaDistribution::custom(vec![1.0, -1.0], vec![0.5, 0.6]).is_err());
        assert!(ThetaDistribution::custom(vec![], vec![]).is_err());
        assert!(ThetaDistribution::custom(vec![1.0], vec![1.0, 0.0]).is_err());
        let d = ThetaDistribution::custom(vec![2.0, -1.0], vec![1.0 / 3.0, 2.0 / 3.0]).unwrap();
        assert!(!d.normalized());
        assert_eq!(d.bound(), 2.0);
        assert_eq!(d.label(), "custom");
        let u = ThetaDistribution::custom(vec![0.0, 2f64.sqrt(), -(2f64.sqrt())], vec![0.5, 0.25, 0.25])
            .unwrap();
        assert!(u.normalized());
    }

    #[test]
    fn sampling_frequencies() {
        let d = ThetaDistribution::four_point(true);
        let mut rng = crate::rng::stream(1);
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            counts[d.sample_level(&mut rng) as usize] += 1;
        }
        for c in counts {
            assert!((c as f64 / 40_000.0 - 0.25).abs() < 0.01);
        }
    }

    #[test]
    fn names_parse() {
        assert_eq!("four-point".parse::<DistName>().unwrap(), DistName::FourPoint);
        assert_eq!("rademacher".parse::<DistName>().unwrap(), DistName::Rademacher);
        assert!("gauss".parse::<DistName>().is_err());
    }
}
