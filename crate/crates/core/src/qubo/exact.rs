use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::{BinaryVector, QuboError, QuboInstance, Sample, SampleSet, StageTimings};

/// Largest instance the enumerator accepts.
pub const EXACT_MAX_VARS: usize = 24;
pub const DEFAULT_KEEP: usize = 32;

struct Ranked {
    energy: f64,
    bits: Vec<u8>,
}

impl PartialEq for Ranked {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Ranked {}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ranked {
    fn cmp(&self, other: &Self) -> Ordering {
        self.energy
            .total_cmp(&other.energy)
            .then_with(|| self.bits.cmp(&other.bits))
    }
}

/// Enumerates all `2^n` states and keeps the `keep` lowest (all of them when
/// `keep` is `None`), each with one occurrence.
///
/// Energies are accumulated along a depth-first walk in the same order as
/// [`QuboInstance::energy`], so every reported energy is bitwise canonical.
pub fn solve_exact(inst: &QuboInstance, keep: Option<usize>) -> Result<SampleSet, QuboError> {
    let n = inst.n();
    if n > EXACT_MAX_VARS {
        return Err(QuboError::TooLarge {
            n,
            limit: EXACT_MAX_VARS,
        });
    }
    let keep = keep.unwrap_or(usize::MAX).max(1);
    let start = Instant::now();
    let mut heap: BinaryHeap<Ranked> = BinaryHeap::new();
    let mut bits = vec![0u8; n];
    walk(inst, &mut bits, 0, 0.0, keep, &mut heap);
    let enumerate_us = start.elapsed().as_secs_f64() * 1e6;

    let post = Instant::now();
    let samples = heap
        .into_iter()
        .map(|r| Sample {
            bits: BinaryVector::from_raw(r.bits),
            energy: r.energy,
            occurrences: 1,
        })
        .collect();
    let mut timing = StageTimings::new();
    timing.insert("Anneal time".into(), enumerate_us);
    let mut ss = SampleSet::new(samples, StageTimings::new());
    timing.insert("Post processing".into(), post.elapsed().as_secs_f64() * 1e6);
    ss.set_timing(timing);
    Ok(ss)
}

fn walk(
    inst: &QuboInstance,
    bits: &mut [u8],
    depth: usize,
    energy: f64,
    keep: usize,
    heap: &mut BinaryHeap<Ranked>,
) {
    if depth == bits.len() {
        if heap.len() < keep {
            heap.push(Ranked {
                energy,
                bits: bits.to_vec(),
            });
        } else if let Some(worst) = heap.peek() {
            let better = energy
                .total_cmp(&worst.energy)
                .then_with(|| bits[..].cmp(&worst.bits[..]))
                .is_lt();
            if better {
                heap.pop();
                heap.push(Ranked {
                    energy,
                    bits: bits.to_vec(),
                });
            }
        }
        return;
    }
    bits[depth] = 0;
    walk(inst, bits, depth + 1, energy, keep, heap);
    bits[depth] = 1;
    let e = energy + inst.row_term(bits, depth);
    walk(inst, bits, depth + 1, e, keep, heap);
    bits[depth] = 0;
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_instance_both_states() {
        let inst = QuboInstance::from_coeffs(array![[0.0]]).unwrap();
        let ss = solve_exact(&inst, None).unwrap();
        assert_eq!(ss.samples().len(), 2);
        assert!(ss.samples().iter().all(|s| s.energy == 0.0));
        assert_eq!(ss.best().unwrap().bits.as_slice(), &[0]);
    }

    #[test]
    fn hand_enumerable_spectrum() {
        let inst = QuboInstance::from_coeffs(array![[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let ss = solve_exact(&inst, None).unwrap();
        let got: Vec<(String, f64)> = ss
            .samples()
            .iter()
            .map(|s| (s.bits.to_string(), s.energy))
            .collect();
        assert_eq!(
            got,
            vec![("00".into(), 0.0), ("11".into(), 0.0), ("01".into(), 1.0), ("10".into(), 1.0)]
        );
        ss.validate(&inst).unwrap();
    }

    #[test]
    fn keep_limits_and_matches_full_spectrum() {
        let c = array![
            [0.3, -0.2, 0.5, 0.1],
            [-0.2, -0.7, 0.05, 0.4],
            [0.5, 0.05, -0.1, -0.9],
            [0.1, 0.4, -0.9, 0.2]
        ];
        let inst = QuboInstance::from_coeffs(c).unwrap();
        let full = solve_exact(&inst, None).unwrap();
        let top = solve_exact(&inst, Some(5)).unwrap();
        assert_eq!(full.samples().len(), 16);
        assert_eq!(top.samples(), &full.samples()[..5]);
        for s in full.samples() {
            assert_eq!(s.energy, inst.energy(s.bits.as_slice()));
        }
    }

    #[test]
    fn size_guard() {
        let inst = QuboInstance::from_coeffs(ndarray::Array2::zeros((25, 25))).unwrap();
        assert_eq!(
            solve_exact(&inst, Some(1)).unwrap_err(),
            QuboError::TooLarge { n: 25, limit: 24 }
        );
    }
}
