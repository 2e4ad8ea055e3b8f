//! Segmentation, standardization and spectrogram features.

use std::io::Write;
use std::ops::Range;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{ClassLabel, RhythmogramRecord};
use crate::par;

pub const SEGMENT_SIZE: usize = 100;
pub const FRAGMENT_SIZE: usize = 300;
pub const WINDOW: usize = 100;
pub const STRIDE: usize = 1;

const STD_FLOOR: f64 = 1e-12;

/// Where a slice came from: the session and its position counted from the tail.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Origin {
    pub session_id: String,
    pub index_from_tail: usize,
}

/// Standardized fixed-length slice used directly as a feature vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub values: Vec<f64>,
    pub label: ClassLabel,
    pub origin: Origin,
}

/// Standardized slice from which one spectrogram is computed.
#[derive(Debug, Clone, PartialEq)]
pub struct Fragment {
    pub values: Vec<f64>,
    pub label: ClassLabel,
    pub origin: Origin,
}

/// Z-scores `values` with the population standard deviation.
/// A (numerically) constant input maps to all zeros.
pub fn standardize_segment(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    if std < STD_FLOOR {
        return Ok(vec![0.0; values.len()]);
    }
    Ok(values.iter().map(|v| (v - mean) / std).collect())
}

/// Non-overlapping `size`-long ranges anchored at the end of a series of
/// length `len`, ordered from the tail backwards. The head remainder is
/// left uncovered.
pub fn tail_ranges(len: usize, size: usize) -> Vec<Range<usize>> {
    assert!(size > 0, "slice size must be positive");
    (0..len / size)
        .map(|k| {
            let end = len - k * size;
            end - size..end
        })
        .collect()
}

fn tail_slices(record: &RhythmogramRecord, size: usize) -> Vec<(Vec<f64>, Origin)> {
    let rr = record.rr_values();
    tail_ranges(rr.len(), size)
        .into_iter()
        .enumerate()
        .map(|(k, r)| {
            let values = standardize_segment(&rr[r]).expect("non-empty slice");
            let origin = Origin {
                session_id: record.session_id().to_string(),
                index_from_tail: k,
            };
            (values, origin)
        })
        .collect()
}

pub fn segment_from_tail(record: &RhythmogramRecord, size: usize) -> Vec<Segment> {
    assert!(size >= 2, "segment size must be at least 2");
    let label = record.label();
    tail_slices(record, size)
        .into_iter()
        .map(|(values, origin)| Segment {
            values,
            label,
            origin,
        })
        .collect()
}

pub fn fragments_from_tail(record: &RhythmogramRecord, size: usize) -> Vec<Fragment> {
    assert!(size >= 2, "fragment size must be at least 2");
    let label = record.label();
    tail_slices(record, size)
        .into_iter()
        .map(|(values, origin)| Fragment {
            values,
            label,
            origin,
        })
        .collect()
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Grid {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.data[row * self.cols + col] = v;
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Writes one matrix row per CSV line, no header.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::with_capacity(self.data.len() * 8);
        for r in 0..self.rows {
            let line: Vec<String> = self.row(r).iter().map(|v| v.to_string()).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Sliding-window DFT magnitudes: one row per window position, one column per
/// one-sided frequency bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub grid: Grid,
    pub label: ClassLabel,
}

impl Spectrogram {
    pub fn n_windows(&self) -> usize {
        self.grid.rows()
    }

    pub fn n_bins(&self) -> usize {
        self.grid.cols()
    }
}

/// Reusable plan for spectrograms with fixed window and stride.
#[derive(Clone)]
pub struct SpectrogramPlan {
    window: usize,
    stride: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl SpectrogramPlan {
    pub fn new(window: usize, stride: usize) -> Self {
        assert!(window > 0 && stride > 0, "window and stride must be positive");
        let fft = FftPlanner::new().plan_fft_forward(window);
        Self {
            window,
            stride,
            fft,
        }
    }

    pub fn n_bins(&self) -> usize {
        self.window / 2 + 1
    }

    pub fn n_windows(&self, len: usize) -> usize {
        if len < self.window {
            0
        } else {
            (len - self.window) / self.stride + 1
        }
    }

    pub fn compute(&self, values: &[f64], label: ClassLabel) -> Result<Spectrogram> {
        if values.len() < self.window {
            return Err(Error::WindowTooLarge {
                window: self.window,
                len: values.len(),
            });
        }
        let n_windows = self.n_windows(values.len());
        let n_bins = self.n_bins();
        let mut grid = Grid::zeros(n_windows, n_bins);
        let mut buf = vec![Complex::new(0.0, 0.0); self.window];
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        for w in 0..n_windows {
            let start = w * self.stride;
            for (b, &v) in buf.iter_mut().zip(&values[start..start + self.window]) {
                *b = Complex::new(v, 0.0);
            }
            self.fft.process_with_scratch(&mut buf, &mut scratch);
            for (k, c) in buf[..n_bins].iter().enumerate() {
                grid.set(w, k, c.norm());
            }
        }
        Ok(Spectrogram { grid, label })
    }
}

pub fn spectrogram(fragment: &Fragment, window: usize, stride: usize) -> Result<Spectrogram> {
    SpectrogramPlan::new(window, stride).compute(&fragment.values, fragment.label)
}

/// Row-major flattening into a feature vector.
pub fn flatten(spec: &Spectrogram) -> Vec<f64> {
    spec.grid.as_slice().to_vec()
}

pub fn unflatten(
    features: Vec<f64>,
    n_windows: usize,
    n_bins: usize,
    label: ClassLabel,
) -> Result<Spectrogram> {
    Ok(Spectrogram {
        grid: Grid::from_vec(n_windows, n_bins, features)?,
        label,
    })
}

pub fn class_mean_spectrogram(specs: &[Spectrogram], class: ClassLabel) -> Result<Spectrogram> {
    let members: Vec<&Spectrogram> = specs.iter().filter(|s| s.label == class).collect();
    let first = members.first().ok_or(Error::EmptyClass(class.value()))?;
    let (rows, cols) = (first.n_windows(), first.n_bins());
    let mut sum = vec![0.0; rows * cols];
    for s in &members {
        if s.n_windows() != rows || s.n_bins() != cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: s.n_windows() * s.n_bins(),
            });
        }
        for (acc, v) in sum.iter_mut().zip(s.grid.as_slice()) {
            *acc += v;
        }
    }
    let n = members.len() as f64;
    sum.iter_mut().for_each(|v| *v /= n);
    Ok(Spectrogram {
        grid: Grid::from_vec(rows, cols, sum)?,
        label: class,
    })
}

/// Element-wise `mean1 - mean0`.
pub fn diff_spectrogram(mean0: &Spectrogram, mean1: &Spectrogram) -> Result<Grid> {
    let (a, b) = (&mean0.grid, &mean1.grid);
    if a.rows() != b.rows() || a.cols() != b.cols() {
        return Err(Error::DimensionMismatch {
            expected: a.rows() * a.cols(),
            actual: b.rows() * b.cols(),
        });
    }
    let data = b
        .as_slice()
        .iter()
        .zip(a.as_slice())
        .map(|(y, x)| y - x)
        .collect();
    Grid::from_vec(a.rows(), a.cols(), data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    RawSegment,
    Spectrogram,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::RawSegment => "raw-segment",
            FeatureKind::Spectrogram => "spectrogram",
        }
    }
}

impl std::fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeatureParams {
    pub segment_size: usize,
    pub fragment_size: usize,
    pub window: usize,
    pub stride: usize,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            segment_size: SEGMENT_SIZE,
            fragment_size: FRAGMENT_SIZE,
            window: WINDOW,
            stride: STRIDE,
        }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        if self.segment_size < 2 {
            return Err(Error::InvalidConfig("segment size must be at least 2".into()));
        }
        if self.window == 0 || self.stride == 0 {
            return Err(Error::InvalidConfig("window and stride must be positive".into()));
        }
        if self.window > self.fragment_size {
            return Err(Error::InvalidConfig(format!(
                "window {} exceeds fragment size {}",
                self.window, self.fragment_size
            )));
        }
        Ok(())
    }

    /// Shortest record that yields at least one feature vector.
    pub fn min_record_len(&self, kind: FeatureKind) -> usize {
        match kind {
            FeatureKind::RawSegment => self.segment_size,
            FeatureKind::Spectrogram => self.fragment_size,
        }
    }

    pub fn feature_dim(&self, kind: FeatureKind) -> usize {
        match kind {
            FeatureKind::RawSegment => self.segment_size,
            FeatureKind::Spectrogram => {
                let plan_bins = self.window / 2 + 1;
                ((self.fragment_size - self.window) / self.stride + 1) * plan_bins
            }
        }
    }
}

/// Builds per-record feature vectors of one kind.
pub struct FeatureExtractor {
    kind: FeatureKind,
    params: FeatureParams,
    plan: SpectrogramPlan,
}

impl FeatureExtractor {
    pub fn new(kind: FeatureKind, params: FeatureParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            kind,
            params,
            plan: SpectrogramPlan::new(params.window, params.stride),
        })
    }

    pub fn kind(&self) -> FeatureKind {
        self.kind
    }

    pub fn params(&self) -> &FeatureParams {
        &self.params
    }

    pub fn dim(&self) -> usize {
        self.params.feature_dim(self.kind)
    }

    /// Feature vectors of one record, tail first. Empty for records that are
    /// too short.
    pub fn record_parts(&self, record: &RhythmogramRecord) -> Vec<Vec<f64>> {
        match self.kind {
            FeatureKind::RawSegment => segment_from_tail(record, self.params.segment_size)
                .into_iter()
                .map(|s| s.values)
                .collect(),
            FeatureKind::Spectrogram => self
                .record_spectrograms(record)
                .iter()
                .map(flatten)
                .collect(),
        }
    }

    pub fn record_spectrograms(&self, record: &RhythmogramRecord) -> Vec<Spectrogram> {
        fragments_from_tail(record, self.params.fragment_size)
            .iter()
            .map(|f| {
                self.plan
                    .compute(&f.values, f.label)
                    .expect("fragment is at least one window long")
            })
            .collect()
    }

    /// Like `record_parts` but fails with a message naming the minimum length.
    pub fn require_parts(&self, record: &RhythmogramRecord) -> Result<Vec<Vec<f64>>> {
        let min = self.params.min_record_len(self.kind);
        if record.len() < min {
            return Err(Error::RecordTooShort {
                session_id: record.session_id().to_string(),
                len: record.len(),
                min,
            });
        }
        Ok(self.record_parts(record))
    }

    /// Stacks the parts of every record, remembering which record each row
    /// came from.
    pub fn build(&self, records: &[&RhythmogramRecord]) -> FeatureSet {
        let per_record = par::map_slice(records, |r| self.record_parts(r));
        let mut set = FeatureSet {
            kind: self.kind,
            dim: self.dim(),
            rows: Vec::new(),
            labels: Vec::new(),
            record_index: Vec::new(),
            session_ids: records.iter().map(|r| r.session_id().to_string()).collect(),
        };
        for (i, (parts, record)) in per_record.into_iter().zip(records).enumerate() {
            let label = record.label();
            for p in parts {
                set.rows.push(p);
                set.labels.push(label);
                set.record_index.push(i);
            }
        }
        set
    }
}

/// Row-stacked feature matrix with labels and record provenance.
#[derive(Debug, Clone)]
pub struct FeatureSet {
    pub kind: FeatureKind,
    pub dim: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<ClassLabel>,
    /// Index into `session_ids` for every row.
    pub record_index: Vec<usize>,
    pub session_ids: Vec<String>,
}

impl FeatureSet {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn label_bits(&self) -> Vec<u8> {
        self.labels.iter().map(|l| l.value()).collect()
    }

    /// Sessions that contributed at least one row.
    pub fn sessions(&self) -> std::collections::BTreeSet<&str> {
        self.record_index
            .iter()
            .map(|&i| self.session_ids[i].as_str())
            .collect()
    }

    /// One vector per line with the label as the final column.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let mut header: Vec<String> = (0..self.dim).map(|i| format!("f{i}")).collect();
        header.push("label".into());
        let io = |e| Error::io(path, e);
        writeln!(w, "{}", header.join(",")).map_err(io)?;
        for (row, label) in self.rows.iter().zip(&self.labels) {
            let mut line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            line.push(label.to_string());
            writeln!(w, "{}", line.join(",")).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn record_from(rr: &[f64], level: u8) -> RhythmogramRecord {
        crate::test_support::record_from_rr("s", "p", rr, level)
    }

    // Direct O(N^2) DFT magnitude, independent of the FFT path.
    fn naive_magnitudes(x: &[f64]) -> Vec<f64> {
        let n = x.len();
        (0..=n / 2)
            .map(|k| {
                let (mut re, mut im) = (0.0, 0.0);
                for (t, v) in x.iter().enumerate() {
                    let a = -2.0 * PI * (k * t) as f64 / n as f64;
                    re += v * a.cos();
                    im += v * a.sin();
                }
                (re * re + im * im).sqrt()
            })
            .collect()
    }

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut s = seed;
        move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64
        }
    }

    #[test]
    fn standardize_examples() {
        assert_eq!(standardize_segment(&[800.0, 800.0, 800.0]).unwrap(), vec![0.0; 3]);
        assert_eq!(standardize_segment(&[0.0, 2.0]).unwrap(), vec![-1.0, 1.0]);
        assert!(matches!(standardize_segment(&[]), Err(Error::EmptyInput)));

        let mut rng = lcg(3);
        let x: Vec<f64> = (0..100).map(|_| 600.0 + 400.0 * rng()).collect();
        let z = standardize_segment(&x).unwrap();
        let mean = z.iter().sum::<f64>() / 100.0;
        let std = (z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 100.0).sqrt();
        assert!(mean.abs() < 1e-9);
        assert!((std - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tail_anchored_segmentation() {
        let rr: Vec<f64> = (0..250).map(|i| 700.0 + (i % 7) as f64 * 3.0 + i as f64).collect();
        let rec = record_from(&rr, 0);
        let segs = segment_from_tail(&rec, 100);
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].values, standardize_segment(&rr[150..250]).unwrap());
        assert_eq!(segs[1].values, standardize_segment(&rr[50..150]).unwrap());
        assert_eq!(segs[0].origin.index_from_tail, 0);
        assert_eq!(segs[1].origin.index_from_tail, 1);

        assert_eq!(segment_from_tail(&record_from(&rr[..100], 0), 100).len(), 1);
        assert!(segment_from_tail(&record_from(&rr[..99], 0), 100).is_empty());
    }

    #[test]
    fn spectrogram_dimensions_and_zero_input() {
        let frag = Fragment {
            values: vec![0.0; 300],
            label: ClassLabel::ABSENT,
            origin: Origin {
                session_id: "s".into(),
                index_from_tail: 0,
            },
        };
        let spec = spectrogram(&frag, 100, 1).unwrap();
        assert_eq!((spec.n_windows(), spec.n_bins()), (201, 51));
        assert!(spec.grid.as_slice().iter().all(|&v| v == 0.0));
        assert_eq!(flatten(&spec).len(), 10251);

        let short = Fragment {
            values: vec![1.0; 50],
            ..frag
        };
        assert!(matches!(
            spectrogram(&short, 100, 1),
            Err(Error::WindowTooLarge { window: 100, len: 50 })
        ));
    }

    #[test]
    fn exact_bin_cosine_peaks_at_half_n() {
        let x: Vec<f64> = (0..300).map(|t| (2.0 * PI * 10.0 * t as f64 / 100.0).cos()).collect();
        let spec = SpectrogramPlan::new(100, 1).compute(&x, ClassLabel::ABSENT).unwrap();
        for w in 0..spec.n_windows() {
            let row = spec.grid.row(w);
            let (arg, max) = row
                .iter()
                .enumerate()
                .fold((0, f64::MIN), |acc, (k, &v)| if v > acc.1 { (k, v) } else { acc });
            assert_eq!(arg, 10);
            assert!((max - 50.0).abs() < 1e-9, "window {w}: {max}");
        }
    }

    #[test]
    fn matches_direct_dft() {
        let mut rng = lcg(11);
        let x: Vec<f64> = (0..130).map(|_| rng() - 0.5).collect();
        let spec = SpectrogramPlan::new(100, 3).compute(&x, ClassLabel::ABSENT).unwrap();
        assert_eq!(spec.n_windows(), 11);
        for w in 0..spec.n_windows() {
            let expected = naive_magnitudes(&x[3 * w..3 * w + 100]);
            for (a, b) in spec.grid.row(w).iter().zip(&expected) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn flatten_is_row_major() {
        let mut g = Grid::zeros(201, 51);
        g.set(0, 3, 1.0);
        let v = flatten(&Spectrogram {
            grid: g,
            label: ClassLabel::ABSENT,
        });
        assert_eq!(v.iter().position(|&x| x != 0.0), Some(3));
        assert_eq!(v.iter().filter(|&&x| x != 0.0).count(), 1);

        let mut g = Grid::zeros(201, 51);
        g.set(1, 0, 2.0);
        let s = Spectrogram {
            grid: g,
            label: ClassLabel::PRESENT,
        };
        let v = flatten(&s);
        assert_eq!(v.iter().position(|&x| x != 0.0), Some(51));
        assert_eq!(unflatten(v, 201, 51, ClassLabel::PRESENT).unwrap(), s);
    }

    fn spec_filled(v: f64, label: ClassLabel) -> Spectrogram {
        Spectrogram {
            grid: Grid::from_vec(2, 3, (0..6).map(|i| v * (i + 1) as f64).collect()).unwrap(),
            label,
        }
    }

    #[test]
    fn class_means() {
        let a = spec_filled(1.0, ClassLabel::ABSENT);
        assert_eq!(class_mean_spectrogram(&[a.clone()], ClassLabel::ABSENT).unwrap(), a);

        let a3 = spec_filled(3.0, ClassLabel::ABSENT);
        let m = class_mean_spectrogram(&[a.clone(), a3], ClassLabel::ABSENT).unwrap();
        assert_eq!(m, spec_filled(2.0, ClassLabel::ABSENT));

        let b = spec_filled(5.0, ClassLabel::PRESENT);
        let m1 = class_mean_spectrogram(&[a.clone(), b.clone()], ClassLabel::PRESENT).unwrap();
        assert_eq!(m1, b);

        assert!(matches!(
            class_mean_spectrogram(&[a], ClassLabel::PRESENT),
            Err(Error::EmptyClass(1))
        ));
    }

    #[test]
    fn difference_spectrogram() {
        let a = spec_filled(1.0, ClassLabel::ABSENT);
        assert!(diff_spectrogram(&a, &a).unwrap().as_slice().iter().all(|&v| v == 0.0));

        let mut b = a.clone();
        b.grid.data.iter_mut().for_each(|v| *v += 1.0);
        assert!(diff_spectrogram(&a, &b).unwrap().as_slice().iter().all(|&v| v == 1.0));
        assert!(diff_spectrogram(&b, &a).unwrap().as_slice().iter().all(|&v| v == -1.0));

        let c = Spectrogram {
            grid: Grid::zeros(3, 3),
            label: ClassLabel::PRESENT,
        };
        assert!(matches!(diff_spectrogram(&a, &c), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn feature_params_dims() {
        let p = FeatureParams::default();
        assert_eq!(p.feature_dim(FeatureKind::RawSegment), 100);
        assert_eq!(p.feature_dim(FeatureKind::Spectrogram), 10251);
        let bad = FeatureParams {
            window: 400,
            ..p
        };
        assert!(bad.validate().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn segment_count_and_partition(len in 0usize..700, size in 2usize..150) {
                let ranges = tail_ranges(len, size);
                prop_assert_eq!(ranges.len(), len / size);
                // head remainder + slices partition [0, len)
                let head = len % size;
                let mut covered: Vec<Range<usize>> = ranges.clone();
                covered.reverse();
                let mut cursor = head;
                for r in covered {
                    prop_assert_eq!(r.start, cursor);
                    prop_assert_eq!(r.len(), size);
                    cursor = r.end;
                }
                prop_assert_eq!(cursor, len);
            }

            #[test]
            fn offsets_only_move_bin_zero(
                x in prop::collection::vec(-3.0f64..3.0, 100),
                offset in -50.0f64..50.0,
            ) {
                let shifted: Vec<f64> = x.iter().map(|v| v + offset).collect();
                let a = naive_magnitudes(&x);
                let b = naive_magnitudes(&shifted);
                let plan = SpectrogramPlan::new(100, 1);
                let sa = plan.compute(&x, ClassLabel::ABSENT).unwrap();
                let sb = plan.compute(&shifted, ClassLabel::ABSENT).unwrap();
                for k in 1..51 {
                    prop_assert!((sa.grid.get(0, k) - a[k]).abs() < 1e-9);
                    prop_assert!((sb.grid.get(0, k) - b[k]).abs() < 1e-9);
                    prop_assert!((sa.grid.get(0, k) - sb.grid.get(0, k)).abs() < 1e-9);
                }
            }

            #[test]
            fn diff_is_antisymmetric(v in prop::collection::vec(0.0f64..10.0, 12), w in prop::collection::vec(0.0f64..10.0, 12)) {
                let a = Spectrogram { grid: Grid::from_vec(3, 4, v).unwrap(), label: ClassLabel::ABSENT };
                let b = Spectrogram { grid: Grid::from_vec(3, 4, w).unwrap(), label: ClassLabel::PRESENT };
                let d1 = diff_spectrogram(&a, &b).unwrap();
                let d2 = diff_spectrogram(&b, &a).unwrap();
                for (x, y) in d1.as_slice().iter().zip(d2.as_slice()) {
                    prop_assert_eq!(*x, -*y);
                }
            }
        }
    }
}
