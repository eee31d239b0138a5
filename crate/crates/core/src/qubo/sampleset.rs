use std::collections::BTreeMap;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use super::{BinaryVector, QuboError, QuboInstance};

/// Absolute tolerance on stored vs recomputed sample energies.
pub const ENERGY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub bits: BinaryVector,
    pub energy: f64,
    pub occurrences: u64,
}

/// Stage name -> microseconds, in insertion order.
pub type StageTimings = IndexMap<String, f64>;

/// Distinct samples from one sampler invocation, sorted by ascending energy
/// then lexicographic bits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Sample>,
    total_reads: u64,
    #[serde(default)]
    timing: StageTimings,
}

impl SampleSet {
    /// Sorts the samples and derives `total_reads` from their occurrences.
    pub fn new(mut samples: Vec<Sample>, timing: StageTimings) -> Self {
        samples.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.bits.cmp(&b.bits)));
        let total_reads = samples.iter().map(|s| s.occurrences).sum();
        Self {
            samples,
            total_reads,
            timing,
        }
    }

    /// Merges repeated reads, recomputing each distinct state's energy.
    pub fn from_reads(inst: &QuboInstance, reads: impl IntoIterator<Item = BinaryVector>, timing: StageTimings) -> Self {
        let mut counts: BTreeMap<BinaryVector, u64> = BTreeMap::new();
        for b in reads {
            *counts.entry(b).or_default() += 1;
        }
        let samples = counts
            .into_iter()
            .map(|(bits, occurrences)| Sample {
                energy: inst.energy(bits.as_slice()),
                bits,
                occurrences,
            })
            .collect();
        Self::new(samples, timing)
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn total_reads(&self) -> u64 {
        self.total_reads
    }

    pub fn timing(&self) -> &StageTimings {
        &self.timing
    }

    pub fn set_timing(&mut self, timing: StageTimings) {
        self.timing = timing;
    }

    /// Lowest-energy sample; lexicographically smallest bits on exact ties.
    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `(rank, energy, probability)` with ranks starting at 1.
    pub fn ranked_distribution(&self) -> Vec<(usize, f64, f64)> {
        let total = self.total_reads as f64;
        self.samples
            .iter()
            .enumerate()
            .map(|(i, s)| (i + 1, s.energy, s.occurrences as f64 / total))
            .collect()
    }

    /// Checks the set invariants against `inst`, with energies compared
    /// within `ENERGY_TOL` absolute.
    pub fn validate(&self, inst: &QuboInstance) -> Result<(), QuboError> {
        self.validate_with(inst, |stored, recomputed| (stored - recomputed).abs() <= ENERGY_TOL)
    }

    pub(crate) fn validate_with(
        &self,
        inst: &QuboInstance,
        energy_ok: impl Fn(f64, f64) -> bool,
    ) -> Result<(), QuboError> {
        let sum: u64 = self.samples.iter().map(|s| s.occurrences).sum();
        if sum != self.total_reads {
            return Err(QuboError::InvalidSampleSet(format!(
                "occurrences sum to {sum}, total_reads is {}",
                self.total_reads
            )));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.bits.len() != inst.n() {
                return Err(QuboError::InvalidSampleSet(format!(
                    "sample {i} has {} bits, instance has {} variables",
                    s.bits.len(),
                    inst.n()
                )));
            }
            if s.occurrences == 0 {
                return Err(QuboError::InvalidSampleSet(format!("sample {i} has zero occurrences")));
            }
            let recomputed = inst.energy(s.bits.as_slice());
            if !energy_ok(s.energy, recomputed) {
                return Err(QuboError::EnergyMismatch {
                    index: i,
                    stored: s.energy,
                    recomputed,
                });
            }
        }
        let sorted = self.samples.windows(2).all(|w| {
            w[0].energy
                .total_cmp(&w[1].energy)
                .then_with(|| w[0].bits.cmp(&w[1].bits))
                .is_lt()
        });
        if !sorted {
            return Err(QuboError::InvalidSampleSet(
                "samples not sorted by ascending energy or contain duplicates".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn inst() -> QuboInstance {
        QuboInstance::from_coeffs(array![[1.0, -1.0], [-1.0, 1.0]]).unwrap()
    }

    #[test]
    fn merges_and_sorts_reads() {
        let reads = ["01", "11", "00", "11", "10"].map(|s| BinaryVector::parse(s).unwrap());
        let ss = SampleSet::from_reads(&inst(), reads, StageTimings::new());
        assert_eq!(ss.total_reads(), 5);
        let bits: Vec<String> = ss.samples().iter().map(|s| s.bits.to_string()).collect();
        assert_eq!(bits, ["00", "11", "01", "10"]);
        assert_eq!(ss.samples()[1].occurrences, 2);
        ss.validate(&inst()).unwrap();
        let probs: f64 = ss.ranked_distribution().iter().map(|r| r.2).sum();
        assert!((probs - 1.0).abs() < 1e-12);
    }

    #[test]
    fn detects_bad_energy() {
        let ss = SampleSet::new(
            vec![Sample {
                bits: BinaryVector::parse("01").unwrap(),
                energy: 0.5,
                occurrences: 1,
            }],
            StageTimings::new(),
        );
        assert!(matches!(ss.validate(&inst()), Err(QuboError::EnergyMismatch { index: 0, .. })));
    }

    #[test]
    fn single_sample_probability_one() {
        let ss = SampleSet::from_reads(&inst(), [BinaryVector::parse("10").unwrap()], StageTimings::new());
        assert_eq!(ss.ranked_distribution(), vec![(1, 1.0, 1.0)]);
    }
}
