//! Per-drop results and their Monte-Carlo aggregation.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RatesError {
    #[error("no drop results to summarize")]
    Empty,
    #[error("unknown {kind} '{value}'")]
    Parse { kind: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Lens,
    Upa,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Csi {
    Perfect,
    Estimated,
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Architecture::Lens => "lens",
            Architecture::Upa => "upa",
        })
    }
}

impl fmt::Display for Csi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Csi::Perfect => "perfect",
            Csi::Estimated => "estimated",
        })
    }
}

impl FromStr for Architecture {
    type Err = RatesError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "lens" => Ok(Architecture::Lens),
            "upa" => Ok(Architecture::Upa),
            _ => Err(RatesError::Parse { kind: "mode", value: s.to_string() }),
        }
    }
}

impl FromStr for Csi {
    type Err = RatesError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "perfect" => Ok(Csi::Perfect),
            "estimated" => Ok(Csi::Estimated),
            _ => Err(RatesError::Parse { kind: "csi", value: s.to_string() }),
        }
    }
}

/// Fronthaul capacity per sector in Gbps; infinite means unconstrained
/// (16-bit quantization on every antenna).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Budget(pub f64);

impl Budget {
    pub fn is_unconstrained(&self) -> bool {
        self.0.is_infinite()
    }

    fn order(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for Budget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unconstrained() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

/// Outcome of one architecture/CSI mode on one drop at one budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DropResult {
    pub drop: usize,
    pub architecture: Architecture,
    pub csi: Csi,
    pub budget: Budget,
    /// Quantization bits per sample available to each RRH.
    pub bits_per_rrh: f64,
    /// Per-user SINR. For OFDM this is the mean over subcarriers.
    pub sinr: Vec<f64>,
    /// Per-user rate in bps/Hz, overhead and CP losses included.
    pub rates: Vec<f64>,
    pub antennas_per_rrh: Vec<usize>,
    /// Streams combined for each user.
    pub streams_per_user: Vec<usize>,
}

impl DropResult {
    pub fn mean_rate(&self) -> f64 {
        mean(&self.rates)
    }
}

/// Aggregate row for one (budget, architecture, CSI) combination.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub budget: Budget,
    pub architecture: Architecture,
    pub csi: Csi,
    /// Mean per-user rate over drops and users, bps/Hz.
    pub mean_rate: f64,
    /// Standard error of the per-drop mean rate.
    pub stderr: f64,
    pub mean_antennas_per_rrh: f64,
    pub mean_streams_per_user: f64,
    pub drops: usize,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn mean_count(v: &[usize]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<usize>() as f64 / v.len() as f64
    }
}

/// Groups results by (budget, architecture, CSI), ordered by budget
/// ascending with the unconstrained budget last. Within a group drops are
/// summed in drop order so the output does not depend on input order.
pub fn summarize(results: &[DropResult]) -> Result<Vec<Summary>, RatesError> {
    if results.is_empty() {
        return Err(RatesError::Empty);
    }
    let mut sorted: Vec<&DropResult> = results.iter().collect();
    sorted.sort_by(|a, b| {
        a.budget
            .order(&b.budget)
            .then(a.architecture.cmp(&b.architecture))
            .then(a.csi.cmp(&b.csi))
            .then(a.drop.cmp(&b.drop))
    });
    let mut out = Vec::new();
    let mut start = 0;
    while start < sorted.len() {
        let head = sorted[start];
        let end = start
            + sorted[start..]
                .iter()
                .take_while(|r| {
                    r.budget.order(&head.budget).is_eq() && r.architecture == head.architecture && r.csi == head.csi
                })
                .count();
        let group = &sorted[start..end];
        let per_drop: Vec<f64> = group.iter().map(|r| r.mean_rate()).collect();
        let n = per_drop.len();
        let m = mean(&per_drop);
        let stderr = if n > 1 {
            (per_drop.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        let all_rates: Vec<f64> = group.iter().flat_map(|r| r.rates.iter().copied()).collect();
        let antennas: Vec<usize> = group.iter().flat_map(|r| r.antennas_per_rrh.iter().copied()).collect();
        let streams: Vec<usize> = group.iter().flat_map(|r| r.streams_per_user.iter().copied()).collect();
        out.push(Summary {
            budget: head.budget,
            architecture: head.architecture,
            csi: head.csi,
            mean_rate: mean(&all_rates),
            stderr,
            mean_antennas_per_rrh: mean_count(&antennas),
            mean_streams_per_user: mean_count(&streams),
            drops: n,
        });
        start = end;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn result(drop: usize, rate: f64, budget: f64) -> DropResult {
        DropResult {
            drop,
            architecture: Architecture::Lens,
            csi: Csi::Estimated,
            budget: Budget(budget),
            bits_per_rrh: 3.0,
            sinr: vec![2f64.powf(rate) - 1.0; 2],
            rates: vec![rate; 2],
            antennas_per_rrh: vec![2, 4],
            streams_per_user: vec![1, 1],
        }
    }

    #[test]
    fn single_and_pair() {
        let s = summarize(&[result(0, 1.5, 0.4)]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!((s[0].mean_rate, s[0].stderr, s[0].mean_antennas_per_rrh, s[0].drops), (1.5, 0.0, 3.0, 1));
        let s = summarize(&[result(0, 1.0, 0.4), result(1, 3.0, 0.4)]).unwrap();
        assert_eq!(s[0].mean_rate, 2.0);
        assert!((s[0].stderr - 1.0).abs() < 1e-12);
        assert_eq!(summarize(&[]), Err(RatesError::Empty));
    }

    #[test]
    fn groups_are_ordered_with_unconstrained_last() {
        let mut upa = result(0, 1.0, 2.0);
        upa.architecture = Architecture::Upa;
        let rows = summarize(&[result(0, 1.0, f64::INFINITY), upa, result(0, 1.0, 2.0), result(0, 2.0, 0.4)]).unwrap();
        let keys: Vec<(String, Architecture)> = rows.iter().map(|r| (r.budget.to_string(), r.architecture)).collect();
        assert_eq!(
            keys,
            vec![
                ("0.4".into(), Architecture::Lens),
                ("2".into(), Architecture::Lens),
                ("2".into(), Architecture::Upa),
                ("inf".into(), Architecture::Lens)
            ]
        );
    }

    #[test]
    fn parse_modes() {
        assert_eq!("LENS".parse::<Architecture>().unwrap(), Architecture::Lens);
        assert_eq!("estimated".parse::<Csi>().unwrap(), Csi::Estimated);
        assert!("dish".parse::<Architecture>().is_err());
    }

    proptest! {
        #[test]
        fn permutation_invariant(rates in prop::collection::vec(0.0f64..10.0, 1..30), seed in any::<u64>()) {
            let results: Vec<DropResult> = rates.iter().enumerate().map(|(i, r)| result(i, *r, 8.0)).collect();
            let mut shuffled = results.clone();
            let mut rng = crate::numerics::RandomStream::new(seed, "shuffle");
            for i in (1..shuffled.len()).rev() {
                let j = rng.index(i + 1);
                shuffled.swap(i, j);
            }
            prop_assert_eq!(summarize(&results).unwrap(), summarize(&shuffled).unwrap());
        }
    }
}
