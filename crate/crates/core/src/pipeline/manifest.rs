//! Cohort manifest and segment annotation files.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Vowel;

pub const MANIFEST_COLUMNS: [&str; 5] = [
    "speaker_id",
    "group",
    "wav_path",
    "posteriorgram_path",
    "annotation_path",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Group {
    Control,
    Patient,
}

impl Group {
    pub const ALL: [Group; 2] = [Group::Control, Group::Patient];

    pub fn name(&self) -> &'static str {
        match self {
            Group::Control => "control",
            Group::Patient => "patient",
        }
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Group {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "control" => Ok(Group::Control),
            "patient" => Ok(Group::Patient),
            other => Err(Error::InvalidArgument(format!(
                "group must be control or patient, got {other:?}"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRow {
    pub speaker_id: String,
    pub group: Group,
    pub wav_path: PathBuf,
    pub posteriorgram_path: PathBuf,
    pub annotation_path: Option<PathBuf>,
    /// One entry per [`Manifest::metadata_columns`]; `None` when blank.
    pub metadata: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub metadata_columns: Vec<String>,
    pub rows: Vec<ManifestRow>,
    /// Relative paths in rows are resolved against this directory.
    pub base_dir: PathBuf,
}

impl Manifest {
    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

fn table_err(path: &str, line: u64, msg: impl Into<String>) -> Error {
    Error::Table {
        path: path.to_string(),
        line,
        msg: msg.into(),
    }
}

pub fn read_manifest(path: impl AsRef<Path>) -> Result<Manifest> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_manifest(file, &path.display().to_string(), base)
}

pub fn parse_manifest<R: Read>(input: R, name: &str, base_dir: PathBuf) -> Result<Manifest> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| table_err(name, 1, e.to_string()))?,
        None => return Err(table_err(name, 1, "empty manifest")),
    };
    let cols: Vec<String> = header.iter().map(|c| c.trim().to_string()).collect();
    if cols.len() < MANIFEST_COLUMNS.len()
        || cols.iter().zip(MANIFEST_COLUMNS).any(|(c, want)| c != want)
    {
        return Err(table_err(
            name,
            1,
            format!("header must start with {}", MANIFEST_COLUMNS.join(",")),
        ));
    }
    let metadata_columns: Vec<String> = cols[MANIFEST_COLUMNS.len()..].to_vec();
    let mut seen = BTreeSet::new();
    let mut rows = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            table_err(name, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let speaker_id = rec[0].trim().to_string();
        if speaker_id.is_empty() {
            return Err(table_err(name, line, "empty speaker_id"));
        }
        if !seen.insert(speaker_id.clone()) {
            return Err(table_err(name, line, format!("duplicate speaker_id {speaker_id:?}")));
        }
        let group: Group = rec[1]
            .parse()
            .map_err(|e: Error| table_err(name, line, e.to_string()))?;
        let required = |j: usize| -> Result<PathBuf> {
            let v = rec[j].trim();
            if v.is_empty() {
                Err(table_err(name, line, format!("empty {}", MANIFEST_COLUMNS[j])))
            } else {
                Ok(PathBuf::from(v))
            }
        };
        let annotation = rec[4].trim();
        let mut metadata = Vec::with_capacity(metadata_columns.len());
        for (j, col) in metadata_columns.iter().enumerate() {
            let v = rec[MANIFEST_COLUMNS.len() + j].trim();
            metadata.push(if v.is_empty() {
                None
            } else {
                let x: f64 = v.parse().map_err(|_| {
                    table_err(name, line, format!("cannot parse {v:?} in column {col}"))
                })?;
                if !x.is_finite() {
                    return Err(table_err(name, line, format!("non-finite value in column {col}")));
                }
                Some(x)
            });
        }
        rows.push(ManifestRow {
            speaker_id,
            group,
            wav_path: required(2)?,
            posteriorgram_path: required(3)?,
            annotation_path: (!annotation.is_empty()).then(|| PathBuf::from(annotation)),
            metadata,
        });
    }
    Ok(Manifest {
        metadata_columns,
        rows,
        base_dir,
    })
}

pub fn write_manifest(path: impl AsRef<Path>, m: &Manifest) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::io(path, e.into()))?;
    let header: Vec<&str> = MANIFEST_COLUMNS
        .iter()
        .copied()
        .chain(m.metadata_columns.iter().map(String::as_str))
        .collect();
    let io = |e: csv::Error| Error::io(path, e.into());
    w.write_record(&header).map_err(io)?;
    for r in &m.rows {
        let mut rec = vec![
            r.speaker_id.clone(),
            r.group.to_string(),
            r.wav_path.display().to_string(),
            r.posteriorgram_path.display().to_string(),
            r.annotation_path
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        ];
        rec.extend(r.metadata.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()));
        w.write_record(&rec).map_err(io)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// A hand-marked stable stretch of one corner vowel.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SegmentAnnotation {
    pub start_s: f64,
    pub end_s: f64,
    pub vowel: Vowel,
}

impl SegmentAnnotation {
    pub fn duration_s(&self) -> f64 {
        self.end_s - self.start_s
    }
}

/// Segments shorter than this draw a warning.
pub const MIN_SEGMENT_S: f64 = 0.030;

pub fn read_annotations(path: impl AsRef<Path>) -> Result<Vec<SegmentAnnotation>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_annotations(file, &path.display().to_string())
}

pub fn parse_annotations<R: Read>(input: R, name: &str) -> Result<Vec<SegmentAnnotation>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| table_err(name, 1, e.to_string()))?,
        None => return Err(table_err(name, 1, "empty annotation file")),
    };
    let cols: Vec<&str> = header.iter().map(str::trim).collect();
    if cols != ["start_s", "end_s", "vowel"] {
        return Err(table_err(name, 1, "header must be start_s,end_s,vowel"));
    }
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            table_err(name, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let num = |j: usize| -> Result<f64> {
            rec[j]
                .trim()
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| table_err(name, line, format!("cannot parse {:?}", &rec[j])))
        };
        let (start_s, end_s) = (num(0)?, num(1)?);
        if !(end_s > start_s) {
            return Err(table_err(name, line, "end_s must be greater than start_s"));
        }
        let vowel: Vowel = rec[2]
            .trim()
            .parse()
            .map_err(|e: Error| table_err(name, line, e.to_string()))?;
        out.push(SegmentAnnotation {
            start_s,
            end_s,
            vowel,
        });
    }
    Ok(out)
}

pub fn write_annotations(path: impl AsRef<Path>, segs: &[SegmentAnnotation]) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "start_s,end_s,vowel").map_err(io)?;
    for s in segs {
        writeln!(w, "{:.6},{:.6},{}", s.start_s, s.end_s, s.vowel).map_err(io)?;
    }
    w.flush().map_err(io)
}
