//! Three-file record format and questionnaire scoring.
//!
//! A record directory holds:
//!
//! * `rr_filter.csv` with header `time,RR_filter`, one row per beat;
//! * `info.csv` with header `time,session_id,person_id,old,gender`;
//! * `uad.csv` with header `ms_begin,ms_end,U1,U2,U3,U4,level,medium`.
//!
//! All files are UTF-8, comma separated, with a mandatory header row.

use std::fmt;
use std::fs::{self, File};
use std::path::{Path, PathBuf};

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

pub const RR_FILE: &str = "rr_filter.csv";
pub const INFO_FILE: &str = "info.csv";
pub const UAD_FILE: &str = "uad.csv";

const RR_HEADER: [&str; 2] = ["time", "RR_filter"];
const INFO_HEADER: [&str; 5] = ["time", "session_id", "person_id", "old", "gender"];
const UAD_HEADER: [&str; 8] = ["ms_begin", "ms_end", "U1", "U2", "U3", "U4", "level", "medium"];

const TIME_FORMATS: [&str; 2] = ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"];
const MEAN_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrSample {
    pub time_ms: i64,
    pub rr_ms: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gender {
    Male,
    Female,
    Unspecified,
}

impl Gender {
    /// Anything other than a recognisable male/female token is `Unspecified`.
    pub fn parse_lenient(s: &str) -> Self {
        match s.trim().to_ascii_lowercase().as_str() {
            "male" | "m" => Gender::Male,
            "female" | "f" => Gender::Female,
            _ => Gender::Unspecified,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Gender::Male => "male",
            Gender::Female => "female",
            Gender::Unspecified => "unspecified",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordMeta {
    pub start_time: NaiveDateTime,
    pub session_id: String,
    pub person_id: String,
    pub age: u32,
    pub gender: Gender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionnaireResult {
    pub ms_begin: i64,
    pub ms_end: i64,
    /// Safety, independence, achievement, unity.
    pub need_scores: [u8; 4],
    /// The recorded `medium` field.
    pub mean_score: f64,
    pub level: u8,
}

/// Binary disadaptation class: 0 = absent, 1 = present.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ClassLabel(u8);

impl ClassLabel {
    pub const ABSENT: ClassLabel = ClassLabel(0);
    pub const PRESENT: ClassLabel = ClassLabel(1);

    pub fn new(value: u8) -> Result<Self> {
        match value {
            0 | 1 => Ok(ClassLabel(value)),
            v => Err(Error::invariant("class label", format!("{v} is not 0 or 1"))),
        }
    }

    pub fn from_bool(present: bool) -> Self {
        ClassLabel(present as u8)
    }

    pub fn value(self) -> u8 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = Error;
    fn try_from(value: u8) -> Result<Self> {
        ClassLabel::new(value)
    }
}

impl From<ClassLabel> for u8 {
    fn from(label: ClassLabel) -> u8 {
        label.0
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// One subject session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RhythmogramRecord {
    rr_series: Vec<RrSample>,
    pub meta: RecordMeta,
    pub questionnaire: QuestionnaireResult,
}

impl RhythmogramRecord {
    pub fn new(
        rr_series: Vec<RrSample>,
        meta: RecordMeta,
        questionnaire: QuestionnaireResult,
    ) -> Result<Self> {
        let ctx = || format!("record {}", meta.session_id);
        if rr_series.is_empty() {
            return Err(Error::invariant(ctx(), "RR series is empty"));
        }
        for (i, s) in rr_series.iter().enumerate() {
            if !(s.rr_ms.is_finite() && s.rr_ms > 0.0) {
                return Err(Error::invariant(
                    ctx(),
                    format!("sample {i}: RR interval {} is not positive", s.rr_ms),
                ));
            }
            if i > 0 && s.time_ms <= rr_series[i - 1].time_ms {
                return Err(Error::invariant(
                    ctx(),
                    format!("sample {i}: time {} does not increase", s.time_ms),
                ));
            }
        }
        if meta.session_id.is_empty() || meta.person_id.is_empty() {
            return Err(Error::invariant(ctx(), "session_id and person_id must be non-empty"));
        }
        validate_questionnaire(&questionnaire).map_err(|m| Error::invariant(ctx(), m))?;
        Ok(Self {
            rr_series,
            meta,
            questionnaire,
        })
    }

    pub fn rr_series(&self) -> &[RrSample] {
        &self.rr_series
    }

    pub fn rr_values(&self) -> Vec<f64> {
        self.rr_series.iter().map(|s| s.rr_ms).collect()
    }

    pub fn len(&self) -> usize {
        self.rr_series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rr_series.is_empty()
    }

    pub fn session_id(&self) -> &str {
        &self.meta.session_id
    }

    /// Label derived from the recorded questionnaire level.
    pub fn label(&self) -> ClassLabel {
        class_label(self.questionnaire.level as i64).expect("level validated on construction")
    }
}

fn validate_questionnaire(q: &QuestionnaireResult) -> std::result::Result<(), String> {
    if q.ms_begin >= q.ms_end {
        return Err(format!("ms_begin {} is not before ms_end {}", q.ms_begin, q.ms_end));
    }
    if let Some(s) = q.need_scores.iter().find(|&&s| s > 3) {
        return Err(format!("need score {s} outside 0..=3"));
    }
    if q.level > 3 {
        return Err(format!("level {} outside 0..=3", q.level));
    }
    if !q.mean_score.is_finite() {
        return Err("mean score is not finite".into());
    }
    Ok(())
}

/// Mean of the four need scores and the level it rounds to (half-up).
pub fn disadaptation_level(need_scores: [i64; 4]) -> Result<(f64, u8)> {
    if let Some(&s) = need_scores.iter().find(|&&s| !(0..=3).contains(&s)) {
        return Err(Error::ScoreOutOfRange(s));
    }
    let sum: i64 = need_scores.iter().sum();
    let mean = sum as f64 / 4.0;
    // sum/4 rounded half-up, in integer arithmetic
    let level = ((sum + 2) / 4) as u8;
    Ok((mean, level))
}

/// Levels 0 and 1 map to class 0, levels 2 and 3 to class 1.
pub fn class_label(level: i64) -> Result<ClassLabel> {
    match level {
        0 | 1 => Ok(ClassLabel::ABSENT),
        2 | 3 => Ok(ClassLabel::PRESENT),
        l => Err(Error::LevelOutOfRange(l)),
    }
}

struct CsvFile {
    path: PathBuf,
    reader: csv::Reader<File>,
}

impl CsvFile {
    fn open(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        if !path.is_file() {
            return Err(Error::MissingFile(path));
        }
        let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(file);
        let found = reader.headers().map_err(|e| malformed(&path, 1, e.to_string()))?;
        if found.iter().ne(header.iter().copied()) {
            return Err(malformed(
                &path,
                1,
                format!("expected header {:?}, found {:?}", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
            ));
        }
        Ok(Self { path, reader })
    }

    fn rows(&mut self) -> Result<Vec<(u64, csv::StringRecord)>> {
        let mut rows = Vec::new();
        for row in self.reader.records() {
            let row = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                malformed(&self.path, line, e.to_string())
            })?;
            let line = row.position().map_or(0, |p| p.line());
            rows.push((line, row));
        }
        Ok(rows)
    }

    fn single_row(&mut self) -> Result<(u64, csv::StringRecord)> {
        let mut rows = self.rows()?;
        match rows.len() {
            1 => Ok(rows.pop().unwrap()),
            n => Err(malformed(&self.path, 2, format!("expected exactly one data row, found {n}"))),
        }
    }
}

fn malformed(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::MalformedRow {
        file: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(
    path: &Path,
    line: u64,
    row: &csv::StringRecord,
    idx: usize,
    name: &str,
) -> Result<T> {
    let raw = row.get(idx).unwrap_or("");
    raw.parse()
        .map_err(|_| malformed(path, line, format!("field {name}: cannot parse {raw:?}")))
}

fn parse_time(raw: &str) -> Option<NaiveDateTime> {
    TIME_FORMATS
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(raw, f).ok())
}

fn format_time(t: &NaiveDateTime) -> String {
    t.format(TIME_FORMATS[0]).to_string()
}

/// Reads and validates one record directory.
pub fn parse_record(dir: impl AsRef<Path>) -> Result<RhythmogramRecord> {
    let dir = dir.as_ref();

    let mut rr = CsvFile::open(dir, RR_FILE, &RR_HEADER)?;
    let mut rr_series = Vec::new();
    for (line, row) in rr.rows()? {
        let time_ms: i64 = field(&rr.path, line, &row, 0, "time")?;
        let rr_ms: f64 = field(&rr.path, line, &row, 1, "RR_filter")?;
        if !(rr_ms.is_finite() && rr_ms > 0.0) {
            return Err(Error::invariant(
                format!("{}:{line}", rr.path.display()),
                format!("RR interval {rr_ms} is not positive"),
            ));
        }
        if let Some(prev) = rr_series.last().map(|s: &RrSample| s.time_ms) {
            if time_ms <= prev {
                return Err(Error::invariant(
                    format!("{}:{line}", rr.path.display()),
                    format!("time {time_ms} does not increase past {prev}"),
                ));
            }
        }
        rr_series.push(RrSample { time_ms, rr_ms });
    }

    let mut info = CsvFile::open(dir, INFO_FILE, &INFO_HEADER)?;
    let (line, row) = info.single_row()?;
    let raw_time = row.get(0).unwrap_or("");
    let start_time = parse_time(raw_time).ok_or_else(|| {
        malformed(&info.path, line, format!("field time: cannot parse {raw_time:?}"))
    })?;
    let meta = RecordMeta {
        start_time,
        session_id: row.get(1).unwrap_or("").to_string(),
        person_id: row.get(2).unwrap_or("").to_string(),
        age: field(&info.path, line, &row, 3, "old")?,
        gender: Gender::parse_lenient(row.get(4).unwrap_or("")),
    };

    let mut uad = CsvFile::open(dir, UAD_FILE, &UAD_HEADER)?;
    let (line, row) = uad.single_row()?;
    let ctx = format!("{}:{line}", uad.path.display());
    let mut scores = [0i64; 4];
    for (k, s) in scores.iter_mut().enumerate() {
        *s = field(&uad.path, line, &row, 2 + k, UAD_HEADER[2 + k])?;
    }
    let (recomputed, _) =
        disadaptation_level(scores).map_err(|e| Error::invariant(&ctx, e.to_string()))?;
    let level: i64 = field(&uad.path, line, &row, 6, "level")?;
    class_label(level).map_err(|e| Error::invariant(&ctx, e.to_string()))?;
    let mean_score: f64 = field(&uad.path, line, &row, 7, "medium")?;
    if (mean_score - recomputed).abs() > MEAN_TOLERANCE {
        log::warn!("{ctx}: recorded medium {mean_score} differs from recomputed mean {recomputed}");
    }
    let questionnaire = QuestionnaireResult {
        ms_begin: field(&uad.path, line, &row, 0, "ms_begin")?,
        ms_end: field(&uad.path, line, &row, 1, "ms_end")?,
        need_scores: scores.map(|s| s as u8),
        mean_score,
        level: level as u8,
    };

    RhythmogramRecord::new(rr_series, meta, questionnaire)
}

fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let to_io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(header).map_err(to_io)?;
    for row in rows {
        w.write_record(row).map_err(to_io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `record` as a three-file directory; `parse_record` reads it back unchanged.
pub fn write_record(record: &RhythmogramRecord, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;

    let rows: Vec<Vec<String>> = record
        .rr_series
        .iter()
        .map(|s| vec![s.time_ms.to_string(), s.rr_ms.to_string()])
        .collect();
    write_csv(&dir.join(RR_FILE), &RR_HEADER, &rows)?;

    let m = &record.meta;
    write_csv(
        &dir.join(INFO_FILE),
        &INFO_HEADER,
        &[vec![
            format_time(&m.start_time),
            m.session_id.clone(),
            m.person_id.clone(),
            m.age.to_string(),
            m.gender.as_str().to_string(),
        ]],
    )?;

    let q = &record.questionnaire;
    let mut row = vec![q.ms_begin.to_string(), q.ms_end.to_string()];
    row.extend(q.need_scores.iter().map(|s| s.to_string()));
    row.push(q.level.to_string());
    row.push(q.mean_score.to_string());
    write_csv(&dir.join(UAD_FILE), &UAD_HEADER, &[row])
}

/// Parses every record subdirectory of `root`, in lexicographic order of name.
pub fn load_corpus(root: impl AsRef<Path>) -> Result<Vec<RhythmogramRecord>> {
    let root = root.as_ref();
    let entries = fs::read_dir(root).map_err(|e| Error::io(root, e))?;
    let mut dirs = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(root, e))?;
        let path = entry.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    par::map_slice(&dirs, |d| parse_record(d)).into_iter().collect()
}
