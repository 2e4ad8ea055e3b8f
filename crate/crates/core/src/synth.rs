//! Synthetic labeled rhythmograms with a known spectral separation.
//!
//! RR interval `b` of a record is
//! `baseline + amplitude · sin(2π b / period) + N(0, noise²)`,
//! with the profile chosen by class. Record `i` draws from ChaCha stream `i`
//! of the configured seed, so generation order does not affect the output.

use std::f64::consts::PI;
use std::path::Path;

use chrono::{Duration, NaiveDate};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    disadaptation_level, write_record, ClassLabel, Gender, QuestionnaireResult, RecordMeta,
    RhythmogramRecord, RrSample,
};
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassProfile {
    pub baseline_rr_ms: f64,
    pub oscillation_amplitude_ms: f64,
    pub oscillation_period_beats: f64,
    pub noise_std_ms: f64,
}

impl ClassProfile {
    /// High-variability, relaxed profile.
    pub const RELAXED: ClassProfile = ClassProfile {
        baseline_rr_ms: 800.0,
        oscillation_amplitude_ms: 50.0,
        oscillation_period_beats: 4.0,
        noise_std_ms: 10.0,
    };

    /// Low-variability, stressed profile.
    pub const STRESSED: ClassProfile = ClassProfile {
        baseline_rr_ms: 650.0,
        oscillation_amplitude_ms: 10.0,
        oscillation_period_beats: 4.0,
        noise_std_ms: 10.0,
    };

    fn validate(&self, name: &str) -> Result<()> {
        let p = self;
        let finite = [p.baseline_rr_ms, p.oscillation_amplitude_ms, p.oscillation_period_beats, p.noise_std_ms]
            .iter()
            .all(|v| v.is_finite());
        if !finite || p.oscillation_amplitude_ms < 0.0 || p.noise_std_ms < 0.0 {
            return Err(Error::InvalidConfig(format!("{name}: parameters must be finite and non-negative")));
        }
        if p.oscillation_period_beats <= 0.0 {
            return Err(Error::InvalidConfig(format!("{name}: period must be positive")));
        }
        if p.baseline_rr_ms <= p.oscillation_amplitude_ms + 4.0 * p.noise_std_ms {
            return Err(Error::InvalidConfig(format!(
                "{name}: baseline must exceed amplitude + 4 * noise_std"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_records: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub seed: u64,
    /// Fraction of class-1 records.
    pub class_balance: f64,
    pub class0: ClassProfile,
    pub class1: ClassProfile,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_records: 200,
            min_len: 300,
            max_len: 900,
            seed: 7,
            class_balance: 0.5,
            class0: ClassProfile::RELAXED,
            class1: ClassProfile::STRESSED,
        }
    }
}

impl SynthConfig {
    /// Both classes share the class-0 profile, so nothing separates them.
    pub fn null(self) -> Self {
        Self {
            class1: self.class0,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_records == 0 {
            return Err(Error::InvalidConfig("n_records must be positive".into()));
        }
        if self.min_len < 100 || self.min_len > self.max_len {
            return Err(Error::InvalidConfig(format!(
                "length range [{}, {}] must satisfy 100 <= min <= max",
                self.min_len, self.max_len
            )));
        }
        if !(self.class_balance > 0.0 && self.class_balance < 1.0) {
            return Err(Error::InvalidConfig("class_balance must lie in (0, 1)".into()));
        }
        self.class0.validate("class0")?;
        self.class1.validate("class1")
    }

    pub fn profile(&self, class: ClassLabel) -> &ClassProfile {
        if class == ClassLabel::PRESENT {
            &self.class1
        } else {
            &self.class0
        }
    }

    /// Class of every record index; exactly `round(n · balance)` are class 1.
    pub fn class_plan(&self) -> Vec<ClassLabel> {
        let n = self.n_records;
        let ones = ((n as f64 * self.class_balance) + 0.5).floor() as usize;
        let mut classes: Vec<ClassLabel> = (0..n).map(|i| ClassLabel::from_bool(i < ones)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(u64::MAX);
        classes.shuffle(&mut rng);
        classes
    }
}

pub fn record_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Need scores whose half-up mean equals `level`.
fn scores_for_level(level: u8, rng: &mut ChaCha8Rng) -> [u8; 4] {
    loop {
        let s: [u8; 4] = std::array::from_fn(|_| rng.random_range(0..=3));
        let (_, l) = disadaptation_level(s.map(i64::from)).expect("scores in range");
        if l == level {
            return s;
        }
    }
}

pub fn generate_record(
    config: &SynthConfig,
    class: ClassLabel,
    index: usize,
    rng: &mut ChaCha8Rng,
) -> Result<RhythmogramRecord> {
    config.validate()?;
    let p = config.profile(class);
    let len = rng.random_range(config.min_len..=config.max_len);
    let noise = Normal::new(0.0, p.noise_std_ms).map_err(|e| Error::InvalidConfig(e.to_string()))?;

    let mut elapsed = 0.0;
    let mut series = Vec::with_capacity(len);
    for beat in 0..len {
        let tone = p.baseline_rr_ms
            + p.oscillation_amplitude_ms * (2.0 * PI * beat as f64 / p.oscillation_period_beats).sin();
        // RR must stay >= 1 ms so rounded timestamps strictly increase
        let rr = loop {
            let v = tone + noise.sample(rng);
            if v >= 1.0 {
                break v;
            }
        };
        elapsed += rr;
        series.push(RrSample {
            time_ms: elapsed.round() as i64,
            rr_ms: rr,
        });
    }

    let level = if class == ClassLabel::PRESENT {
        rng.random_range(2..=3)
    } else {
        rng.random_range(0..=1)
    };
    let need_scores = scores_for_level(level, rng);
    let (mean_score, _) = disadaptation_level(need_scores.map(i64::from))?;
    let ms_end = series.last().expect("non-empty").time_ms;
    let ms_begin = series[len * 4 / 5].time_ms.min(ms_end - 1);

    let start = NaiveDate::from_ymd_opt(2021, 1, 1)
        .expect("valid date")
        .and_hms_opt(8, 0, 0)
        .expect("valid time")
        + Duration::minutes(17 * index as i64);
    let gender = match rng.random_range(0..3) {
        0 => Gender::Male,
        1 => Gender::Female,
        _ => Gender::Unspecified,
    };
    let meta = RecordMeta {
        start_time: start,
        session_id: format!("rec{index:05}"),
        person_id: format!("p{:04}", index / 2),
        age: rng.random_range(18..=70),
        gender,
    };
    RhythmogramRecord::new(
        series,
        meta,
        QuestionnaireResult {
            ms_begin,
            ms_end,
            need_scores,
            mean_score,
            level,
        },
    )
}

/// All records of a corpus, in index order.
pub fn generate_records(config: &SynthConfig) -> Result<Vec<RhythmogramRecord>> {
    config.validate()?;
    let classes = config.class_plan();
    par::map_range(config.n_records, |i| {
        generate_record(config, classes[i], i, &mut record_rng(config.seed, i))
    })
    .into_iter()
    .collect()
}

/// Generates a corpus and writes one three-file directory per record under `out`.
pub fn generate_corpus(config: &SynthConfig, out: impl AsRef<Path>) -> Result<Vec<RhythmogramRecord>> {
    let out = out.as_ref();
    let records = generate_records(config)?;
    std::fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    for r in &records {
        write_record(r, out.join(r.session_id()))?;
    }
    Ok(records)
}

/// Reference classifier: mean DFT magnitude in one frequency bin, thresholded.
///
/// Computed with an explicit single-bin DFT sum rather than the spectrogram
/// path, so it can act as an independent check on the learned pipeline.
pub mod oracle {
    use super::*;
    use crate::preprocess::{standardize_segment, tail_ranges};

    pub const BIN: usize = 25;

    /// Mean single-bin magnitude over every window of every tail fragment.
    pub fn bin_magnitude(record: &RhythmogramRecord, fragment: usize, window: usize, bin: usize) -> Option<f64> {
        let rr = record.rr_values();
        let (cos, sin): (Vec<f64>, Vec<f64>) = (0..window)
            .map(|t| {
                let a = 2.0 * PI * (bin * t) as f64 / window as f64;
                (a.cos(), a.sin())
            })
            .unzip();
        let mut total = 0.0;
        let mut count = 0usize;
        for r in tail_ranges(rr.len(), fragment) {
            let z = standardize_segment(&rr[r]).ok()?;
            for start in 0..=fragment - window {
                let w = &z[start..start + window];
                let re: f64 = w.iter().zip(&cos).map(|(a, b)| a * b).sum();
                let im: f64 = w.iter().zip(&sin).map(|(a, b)| a * b).sum();
                total += (re * re + im * im).sqrt();
                count += 1;
            }
        }
        (count > 0).then(|| total / count as f64)
    }

    #[derive(Debug, Clone, Copy, PartialEq)]
    pub struct Threshold {
        pub value: f64,
        /// True when magnitudes above the threshold indicate class 1.
        pub above_is_present: bool,
    }

    impl Threshold {
        pub fn classify(&self, magnitude: f64) -> ClassLabel {
            ClassLabel::from_bool((magnitude > self.value) == self.above_is_present)
        }
    }

    /// Exhaustive best threshold on `(magnitude, label)` pairs.
    pub fn fit_threshold(samples: &[(f64, ClassLabel)]) -> Threshold {
        let mut sorted: Vec<(f64, ClassLabel)> = samples.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut best = (0usize, Threshold { value: f64::NEG_INFINITY, above_is_present: true });
        let mut candidates = vec![f64::NEG_INFINITY];
        candidates.extend(sorted.windows(2).map(|w| 0.5 * (w[0].0 + w[1].0)));
        for value in candidates {
            for above_is_present in [true, false] {
                let t = Threshold { value, above_is_present };
                let hits = sorted.iter().filter(|(m, l)| t.classify(*m) == *l).count();
                if hits > best.0 {
                    best = (hits, t);
                }
            }
        }
        best.1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{load_corpus, parse_record};
    use crate::preprocess::{fragments_from_tail, SpectrogramPlan};

    fn small(n: usize) -> SynthConfig {
        SynthConfig {
            n_records: n,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn flat_profile_gives_constant_series() {
        let cfg = SynthConfig {
            class0: ClassProfile {
                baseline_rr_ms: 750.0,
                oscillation_amplitude_ms: 0.0,
                oscillation_period_beats: 4.0,
                noise_std_ms: 0.0,
            },
            ..small(1)
        };
        let r = generate_record(&cfg, ClassLabel::ABSENT, 0, &mut record_rng(1, 0)).unwrap();
        assert!(r.rr_values().iter().all(|&v| v == 750.0));
    }

    #[test]
    fn pure_period_four_tone_peaks_at_bin_25() {
        let cfg = SynthConfig {
            class0: ClassProfile {
                noise_std_ms: 0.0,
                ..ClassProfile::RELAXED
            },
            min_len: 300,
            max_len: 300,
            ..small(1)
        };
        let r = generate_record(&cfg, ClassLabel::ABSENT, 0, &mut record_rng(5, 0)).unwrap();
        let frag = &fragments_from_tail(&r, 300)[0];
        let spec = SpectrogramPlan::new(100, 1).compute(&frag.values, frag.label).unwrap();
        for w in 0..spec.n_windows() {
            let row = spec.grid.row(w);
            let peak = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(peak, 25);
            let rest: f64 = row.iter().enumerate().filter(|(k, _)| *k != 25).map(|(_, v)| v).sum();
            assert!(rest < 1e-6 * row[25], "window {w}: leakage {rest}");
        }
    }

    #[test]
    fn same_seed_same_record() {
        let cfg = small(3);
        let a = generate_record(&cfg, ClassLabel::PRESENT, 2, &mut record_rng(9, 2)).unwrap();
        let b = generate_record(&cfg, ClassLabel::PRESENT, 2, &mut record_rng(9, 2)).unwrap();
        assert_eq!(a, b);
        assert_eq!(generate_records(&cfg).unwrap(), generate_records(&cfg).unwrap());
    }

    #[test]
    fn class_counts_and_lengths() {
        let cfg = SynthConfig {
            min_len: 120,
            max_len: 260,
            ..small(10)
        };
        let recs = generate_records(&cfg).unwrap();
        let ones = recs.iter().filter(|r| r.label() == ClassLabel::PRESENT).count();
        assert_eq!(ones, 5);
        assert!(recs.iter().all(|r| (120..=260).contains(&r.len())));
        for r in &recs {
            let (mean, level) = disadaptation_level(r.questionnaire.need_scores.map(i64::from)).unwrap();
            assert_eq!(level, r.questionnaire.level);
            assert_eq!(mean, r.questionnaire.mean_score);
        }
    }

    #[test]
    fn corpus_round_trips_through_disk() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small(6);
        let recs = generate_corpus(&cfg, dir.path()).unwrap();
        assert_eq!(load_corpus(dir.path()).unwrap(), recs);
        assert_eq!(parse_record(dir.path().join("rec00003")).unwrap(), recs[3]);
    }

    #[test]
    fn invalid_configs() {
        assert!(matches!(small(0).validate(), Err(Error::InvalidConfig(_))));
        let short = SynthConfig { min_len: 50, ..small(2) };
        assert!(short.validate().is_err());
        let noisy = SynthConfig {
            class1: ClassProfile { noise_std_ms: 200.0, ..ClassProfile::STRESSED },
            ..small(2)
        };
        assert!(noisy.validate().is_err());
    }

    #[test]
    fn threshold_fit_finds_clean_split() {
        let samples: Vec<(f64, ClassLabel)> = (0..20)
            .map(|i| (i as f64, ClassLabel::from_bool(i < 8)))
            .collect();
        let t = oracle::fit_threshold(&samples);
        assert!(!t.above_is_present);
        assert!(samples.iter().all(|(m, l)| t.classify(*m) == *l));
    }
}
