use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::qubo::{BinaryVector, QuboInstance, SampleSet, StageTimings};

/// Stage names of a device timing breakdown, in display order.
pub const TIMING_STAGES: [&str; 5] = [
    "Programming time",
    "Anneal time",
    "Readout time",
    "Readout delay",
    "Post processing",
];

/// Keys that carry a device-reported total rather than a stage.
pub const TOTAL_KEYS: [&str; 3] = ["QPU Access time", "qpu_access_time", "Total"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealRow {
    pub rank: usize,
    pub bits: String,
    pub energy: f64,
    /// Spin-domain objective `x^T q x` recovered from the energy.
    pub objective: f64,
    pub probability: f64,
    /// Index of the `{b, complement(b)}` class, numbered by first appearance.
    pub class: usize,
    pub class_probability: f64,
    pub attains_reference: bool,
}

/// Distinct solutions ranked by descending objective, with `x` / `-x`
/// twins merged into symmetry classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnnealReport {
    pub rows: Vec<AnnealRow>,
    pub total_reads: u64,
    pub reference_energy: f64,
}

/// Tolerance for marking a row as attaining the reference energy.
const REFERENCE_TOL: f64 = 1e-9;

pub fn report_anneal_distribution(inst: &QuboInstance, ss: &SampleSet, es_energy: f64) -> AnnealReport {
    let total = ss.total_reads() as f64;
    let mut class_of: HashMap<BinaryVector, usize> = HashMap::new();
    let mut class_mass: Vec<u64> = Vec::new();
    let mut classes = Vec::with_capacity(ss.samples().len());
    for s in ss.samples() {
        let class = match class_of.get(&s.bits) {
            Some(&c) => c,
            None => {
                let c = class_mass.len();
                class_mass.push(0);
                class_of.insert(s.bits.clone(), c);
                class_of.insert(s.bits.complement(), c);
                c
            }
        };
        class_mass[class] += s.occurrences;
        classes.push(class);
    }
    let tol = REFERENCE_TOL * es_energy.abs().max(1.0);
    let rows = ss
        .samples()
        .iter()
        .zip(classes)
        .enumerate()
        .map(|(i, (s, class))| AnnealRow {
            rank: i + 1,
            bits: s.bits.to_string(),
            energy: s.energy,
            objective: inst.spin_objective(s.energy),
            probability: s.occurrences as f64 / total,
            class,
            class_probability: class_mass[class] as f64 / total,
            attains_reference: (s.energy - es_energy).abs() <= tol,
        })
        .collect();
    AnnealReport {
        rows,
        total_reads: ss.total_reads(),
        reference_energy: es_energy,
    }
}

impl AnnealReport {
    /// Merged probability of the class containing the top-ranked solution.
    pub fn top_class_probability(&self) -> f64 {
        self.rows.first().map_or(0.0, |r| r.class_probability)
    }

    /// True if the top two ranks form one symmetry class.
    pub fn top_pair_is_symmetric(&self) -> bool {
        self.rows.len() >= 2 && self.rows[0].class == self.rows[1].class
    }

    /// CSV with columns `rank,bits,energy,objective,snr,probability,class,class_probability,attains_reference`.
    /// `snr_factor` maps the objective to SNR.
    pub fn to_csv(&self, snr_factor: f64) -> String {
        let mut out = String::from(
            "rank,bits,energy,objective,snr,probability,class,class_probability,attains_reference\n",
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                r.rank,
                r.bits,
                r.energy,
                r.objective,
                r.objective * snr_factor,
                r.probability,
                r.class,
                r.class_probability,
                r.attains_reference
            ));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingReport {
    pub stages: Vec<(String, f64)>,
    /// Sum of the stages.
    pub total: f64,
    /// Total reported by the device, if any.
    pub reported_total: Option<(String, f64)>,
}

/// Arranges a stage map into a table: known stages first in their
/// canonical order, then any others as given. Names pass through unchanged.
pub fn report_timing(stage_times: &StageTimings) -> TimingReport {
    let mut stages = Vec::new();
    let mut reported_total = None;
    for name in TIMING_STAGES {
        if let Some(&v) = stage_times.get(name) {
            stages.push((name.to_string(), v));
        }
    }
    for (name, &v) in stage_times {
        if TOTAL_KEYS.contains(&name.as_str()) {
            reported_total = Some((name.clone(), v));
        } else if !TIMING_STAGES.contains(&name.as_str()) {
            stages.push((name.clone(), v));
        }
    }
    let total = stages.iter().map(|(_, v)| v).sum();
    TimingReport {
        stages,
        total,
        reported_total,
    }
}

impl fmt::Display for TimingReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self
            .stages
            .iter()
            .map(|(n, _)| n.len())
            .chain(self.reported_total.iter().map(|(n, _)| n.len()))
            .max()
            .unwrap_or(0)
            .max("Total (sum of stages)".len());
        writeln!(f, "{:<width$}  {:>14}", "Time", "us")?;
        for (name, v) in &self.stages {
            writeln!(f, "{name:<width$}  {v:>14.3}")?;
        }
        writeln!(f, "{:<width$}  {:>14.3}", "Total (sum of stages)", self.total)?;
        if let Some((name, v)) = &self.reported_total {
            writeln!(f, "{name:<width$}  {v:>14.3}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qubo::{BinaryVector, Sample};
    use ndarray::array;

    #[test]
    fn timing_totals() {
        let t = StageTimings::from([("a".to_string(), 1.0), ("b".to_string(), 2.0)]);
        let r = report_timing(&t);
        assert_eq!(r.total, 3.0);
        assert_eq!(r.stages, vec![("a".to_string(), 1.0), ("b".to_string(), 2.0)]);
    }

    #[test]
    fn device_names_pass_through() {
        let t = StageTimings::from([
            ("Readout time".to_string(), 57380.0),
            ("Programming time".to_string(), 15762.0),
            ("Anneal time".to_string(), 1000.0),
            ("QPU Access time".to_string(), 94682.0),
        ]);
        let r = report_timing(&t);
        let names: Vec<&str> = r.stages.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["Programming time", "Anneal time", "Readout time"]);
        assert_eq!(r.total, 15762.0 + 1000.0 + 57380.0);
        assert_eq!(r.reported_total, Some(("QPU Access time".to_string(), 94682.0)));
        assert!(r.to_string().contains("Programming time"));
    }

    #[test]
    fn single_sample_report() {
        let inst = QuboInstance::from_coeffs(array![[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let ss = SampleSet::new(
            vec![Sample {
                bits: BinaryVector::parse("11").unwrap(),
                energy: 0.0,
                occurrences: 7,
            }],
            StageTimings::new(),
        );
        let r = report_anneal_distribution(&inst, &ss, 0.0);
        assert_eq!(r.rows.len(), 1);
        assert_eq!(r.rows[0].probability, 1.0);
        assert!(r.rows[0].attains_reference);
    }

    #[test]
    fn symmetric_twins_share_a_class() {
        let inst = QuboInstance::from_coeffs(array![[1.0, -1.0], [-1.0, 1.0]]).unwrap();
        let ss = SampleSet::from_reads(
            &inst,
            ["00", "11", "11", "01", "10", "10", "10"].map(|s| BinaryVector::parse(s).unwrap()),
            StageTimings::new(),
        );
        let r = report_anneal_distribution(&inst, &ss, 0.0);
        assert!(r.top_pair_is_symmetric());
        assert_eq!(r.rows[0].objective, r.rows[1].objective);
        assert!((r.top_class_probability() - 3.0 / 7.0).abs() < 1e-15);
        assert_eq!(r.rows[2].class, r.rows[3].class);
        assert!((r.rows[2].class_probability - 4.0 / 7.0).abs() < 1e-15);
        assert_eq!(r.rows.iter().filter(|x| x.attains_reference).count(), 2);
        let p: f64 = r.rows.iter().map(|x| x.probability).sum();
        assert!((p - 1.0).abs() < 1e-9);
    }
}
