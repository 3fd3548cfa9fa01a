//! Phone posteriorgrams and corner-vowel frame selection.
//!
//! A posteriorgram holds one row of 40 English phone logits per recognizer
//! frame (45 ms window, 30 ms hop) together with the recognizer's decoded
//! top-1 phone. Frames are assigned to /a/, /i/ and /u/ if either
//!
//! 1. the decoded phone belongs to the vowel's phone set, or
//! 2. a phone of that set is among the top-k posteriors and its posterior
//!    exceeds alpha.
//!
//! A frame may land in more than one set.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Vowel;

pub const PHONE_COUNT: usize = 40;

/// Column order of the interchange file. Alphabetical, so column index order
/// and label order agree.
pub const PHONES: [&str; PHONE_COUNT] = [
    "AA", "AE", "AH", "AO", "AW", "AY", "B", "CH", "D", "DH", "EH", "ER", "EY", "F", "G", "HH",
    "IH", "IX", "IY", "JH", "K", "L", "M", "N", "NG", "OW", "OY", "P", "R", "S", "SH", "T", "TH",
    "UH", "UW", "V", "W", "Y", "Z", "ZH",
];

/// Decoded label for non-speech frames. Has no logit column.
pub const SILENCE: &str = "SIL";

pub const FRAME_WINDOW_S: f64 = 0.045;
pub const FRAME_HOP_S: f64 = 0.030;
const HOP_TOLERANCE_S: f64 = 1e-6;

pub fn phone_index(label: &str) -> Option<usize> {
    PHONES.binary_search(&label).ok()
}

pub type LogitRow = [f64; PHONE_COUNT];

#[derive(Clone, Debug, PartialEq)]
pub struct Posteriorgram {
    frame_times: Vec<(f64, f64)>,
    logits: Vec<LogitRow>,
    decoded: Vec<String>,
    /// True when `decoded` was derived from the logits because the file had
    /// no decoded column.
    decoded_derived: bool,
}

impl Posteriorgram {
    pub fn new(
        frame_times: Vec<(f64, f64)>,
        logits: Vec<LogitRow>,
        decoded: Vec<String>,
    ) -> Result<Self> {
        if frame_times.len() != logits.len() || decoded.len() != logits.len() {
            return Err(Error::InvalidArgument(format!(
                "posteriorgram length mismatch: {} times, {} logit rows, {} labels",
                frame_times.len(),
                logits.len(),
                decoded.len()
            )));
        }
        if let Some(t) = check_times(&frame_times) {
            return Err(Error::InvalidArgument(t.1));
        }
        if logits.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite logit".into()));
        }
        Ok(Posteriorgram {
            frame_times,
            logits,
            decoded,
            decoded_derived: false,
        })
    }

    /// Builds a posteriorgram whose decoded labels are the per-frame argmax.
    pub fn with_derived_decoding(frame_times: Vec<(f64, f64)>, logits: Vec<LogitRow>) -> Result<Self> {
        let decoded = derive_decoded(&logits);
        let mut pg = Self::new(frame_times, logits, decoded)?;
        pg.decoded_derived = true;
        Ok(pg)
    }

    pub fn len(&self) -> usize {
        self.logits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.logits.is_empty()
    }

    pub fn frame_times(&self) -> &[(f64, f64)] {
        &self.frame_times
    }

    pub fn logits(&self) -> &[LogitRow] {
        &self.logits
    }

    pub fn decoded(&self) -> &[String] {
        &self.decoded
    }

    pub fn decoded_derived(&self) -> bool {
        self.decoded_derived
    }

    pub fn center_s(&self, frame: usize) -> f64 {
        let (s, e) = self.frame_times[frame];
        0.5 * (s + e)
    }

    /// Frames `range`, renumbered from zero.
    pub fn slice(&self, range: std::ops::Range<usize>) -> Posteriorgram {
        Posteriorgram {
            frame_times: self.frame_times[range.clone()].to_vec(),
            logits: self.logits[range.clone()].to_vec(),
            decoded: self.decoded[range].to_vec(),
            decoded_derived: self.decoded_derived,
        }
    }
}

/// Index and message of the first timing violation.
fn check_times(times: &[(f64, f64)]) -> Option<(usize, String)> {
    for (i, &(s, e)) in times.iter().enumerate() {
        if !(s.is_finite() && e.is_finite() && e > s && s >= 0.0) {
            return Some((i, format!("invalid frame time ({s}, {e})")));
        }
        if i > 0 {
            let prev = times[i - 1].0;
            if s <= prev {
                return Some((i, format!("non-monotone start time {s} after {prev}")));
            }
            let hop = s - prev;
            if (hop - FRAME_HOP_S).abs() > HOP_TOLERANCE_S {
                return Some((i, format!("unexpected hop {hop:.6} s (expected {FRAME_HOP_S} s)")));
            }
        }
    }
    None
}

fn argmax(row: &LogitRow) -> usize {
    let mut best = 0;
    for (j, v) in row.iter().enumerate() {
        if *v > row[best] {
            best = j;
        }
    }
    best
}

/// Top-1 label per frame, first label on ties.
pub fn derive_decoded(logits: &[LogitRow]) -> Vec<String> {
    logits.iter().map(|r| PHONES[argmax(r)].to_string()).collect()
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ReadOptions {
    /// Accept files without a `decoded` column and derive it from the logits.
    pub allow_missing_decoded: bool,
}

/// Reads an interchange file, rejecting files without a decoded column.
pub fn read_posteriorgram(path: impl AsRef<Path>) -> Result<Posteriorgram> {
    read_posteriorgram_with(path, ReadOptions::default()).map(|(pg, _)| pg)
}

/// Reads an interchange file; also returns non-fatal warnings.
pub fn read_posteriorgram_with(
    path: impl AsRef<Path>,
    opts: ReadOptions,
) -> Result<(Posteriorgram, Vec<String>)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_posteriorgram(file, &path.display().to_string(), opts)
}

pub fn parse_posteriorgram<R: Read>(
    input: R,
    name: &str,
    opts: ReadOptions,
) -> Result<(Posteriorgram, Vec<String>)> {
    let err = |line: u64, msg: String| Error::Posteriorgram {
        path: name.to_string(),
        line,
        msg,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(r) => r.map_err(|e| err(1, e.to_string()))?,
        None => return Err(err(1, "empty file".into())),
    };
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < 2 || cols[0] != "start_s" || cols[1] != "end_s" {
        return Err(err(1, "header must start with start_s,end_s".into()));
    }
    let has_decoded = cols.get(2) == Some(&"decoded");
    if !has_decoded && !opts.allow_missing_decoded {
        return Err(err(1, "missing decoded column".into()));
    }
    let labels = &cols[if has_decoded { 3 } else { 2 }..];
    if labels.len() != PHONE_COUNT {
        let present: BTreeSet<&str> = labels.iter().copied().collect();
        let missing: Vec<&str> = PHONES.iter().copied().filter(|p| !present.contains(p)).collect();
        let extra: Vec<&str> = labels.iter().copied().filter(|l| phone_index(l).is_none()).collect();
        let mut msg = format!("expected {PHONE_COUNT} phone columns, found {}", labels.len());
        if !missing.is_empty() {
            msg.push_str(&format!("; missing {}", missing.join(",")));
        }
        if !extra.is_empty() {
            msg.push_str(&format!("; unknown {}", extra.join(",")));
        }
        return Err(err(1, msg));
    }
    if let Some(j) = (0..PHONE_COUNT).find(|&j| labels[j] != PHONES[j]) {
        return Err(err(
            1,
            format!("label order: column {} is {:?}, expected {:?}", j, labels[j], PHONES[j]),
        ));
    }
    let width = cols.len();
    let first_logit = width - PHONE_COUNT;

    let mut times = Vec::new();
    let mut logits = Vec::new();
    let mut decoded = Vec::new();
    let mut lines = Vec::new();
    for rec in records {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            err(line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != width {
            return Err(err(line, format!("expected {width} fields, found {}", rec.len())));
        }
        let num = |j: usize| -> Result<f64> {
            let field = &rec[j];
            let v: f64 = field
                .parse()
                .map_err(|_| err(line, format!("cannot parse {:?} in column {}", field, cols[j])))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(line, format!("non-finite value in column {}", cols[j])))
            }
        };
        times.push((num(0)?, num(1)?));
        let mut row = [0.0; PHONE_COUNT];
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = num(first_logit + j)?;
        }
        logits.push(row);
        if has_decoded {
            let d = rec[2].trim();
            if d.is_empty() {
                return Err(err(line, "empty decoded label".into()));
            }
            decoded.push(d.to_string());
        }
        lines.push(line);
    }
    if let Some((i, msg)) = check_times(&times) {
        return Err(err(lines[i], msg));
    }

    let mut warnings = Vec::new();
    let pg = if has_decoded {
        let unknown: BTreeSet<&str> = decoded
            .iter()
            .map(String::as_str)
            .filter(|d| *d != SILENCE && phone_index(d).is_none())
            .collect();
        if !unknown.is_empty() {
            warnings.push(format!(
                "{name}: decoded labels outside the phone inventory: {}",
                unknown.into_iter().collect::<Vec<_>>().join(",")
            ));
        }
        Posteriorgram::new(times, logits, decoded)?
    } else {
        warnings.push(format!("{name}: no decoded column; using per-frame argmax"));
        Posteriorgram::with_derived_decoding(times, logits)?
    };
    Ok((pg, warnings))
}

/// Writes the interchange format. Logits use the shortest representation
/// that round-trips exactly.
pub fn write_posteriorgram<W: Write>(mut out: W, pg: &Posteriorgram) -> std::io::Result<()> {
    write!(out, "start_s,end_s,decoded")?;
    for p in PHONES {
        write!(out, ",{p}")?;
    }
    writeln!(out)?;
    for ((&(s, e), row), d) in pg.frame_times.iter().zip(&pg.logits).zip(&pg.decoded) {
        write!(out, "{s:.6},{e:.6},{d}")?;
        for v in row {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &[LogitRow]) -> Vec<LogitRow> {
    logits.iter().map(softmax_row).collect()
}

pub fn softmax_row(row: &LogitRow) -> LogitRow {
    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut out = [0.0; PHONE_COUNT];
    let mut sum = 0.0;
    for (o, v) in out.iter_mut().zip(row) {
        *o = (v - max).exp();
        sum += *o;
    }
    out.iter_mut().for_each(|o| *o /= sum);
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhoneSets {
    pub a: Vec<String>,
    pub i: Vec<String>,
    pub u: Vec<String>,
}

fn labels(xs: &[&str]) -> Vec<String> {
    xs.iter().map(|s| s.to_string()).collect()
}

impl Default for PhoneSets {
    fn default() -> Self {
        PhoneSets {
            a: labels(&["AA", "AE", "AH", "AW", "AY"]),
            i: labels(&["IY", "IX", "IH"]),
            u: labels(&["UW", "UH", "OW"]),
        }
    }
}

impl PhoneSets {
    /// One phone per corner vowel.
    pub fn corner_only() -> Self {
        PhoneSets {
            a: labels(&["AA"]),
            i: labels(&["IY"]),
            u: labels(&["UW"]),
        }
    }

    pub fn get(&self, v: Vowel) -> &[String] {
        match v {
            Vowel::A => &self.a,
            Vowel::I => &self.i,
            Vowel::U => &self.u,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for v in Vowel::ALL {
            if self.get(v).is_empty() {
                return Err(Error::Config(format!("phone set for /{v}/ is empty")));
            }
        }
        Ok(())
    }

    /// Labels without a logit column. They can match the decoded sequence
    /// but never criterion 2.
    pub fn unknown_labels(&self) -> Vec<String> {
        let mut out: Vec<String> = Vowel::ALL
            .iter()
            .flat_map(|&v| self.get(v).iter())
            .filter(|l| phone_index(l).is_none())
            .cloned()
            .collect();
        out.sort();
        out.dedup();
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SelectionConfig {
    pub k: usize,
    pub alpha: f64,
    /// Replace the extended phone sets with {AA}, {IY}, {UW}.
    pub corner_only: bool,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k: 4,
            alpha: 0.2,
            corner_only: false,
        }
    }
}

impl SelectionConfig {
    pub fn validate(&self) -> Result<()> {
        if !(1..=PHONE_COUNT).contains(&self.k) {
            return Err(Error::Config(format!("k must be in 1..=40, got {}", self.k)));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        Ok(())
    }
}

/// Selected frame indices per corner vowel, ascending.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VowelFrameSets {
    pub a: Vec<usize>,
    pub i: Vec<usize>,
    pub u: Vec<usize>,
}

impl VowelFrameSets {
    pub fn get(&self, v: Vowel) -> &[usize] {
        match v {
            Vowel::A => &self.a,
            Vowel::I => &self.i,
            Vowel::U => &self.u,
        }
    }

    fn get_mut(&mut self, v: Vowel) -> &mut Vec<usize> {
        match v {
            Vowel::A => &mut self.a,
            Vowel::I => &mut self.i,
            Vowel::U => &mut self.u,
        }
    }
}

/// Indices of the `k` largest posteriors; ties broken towards the
/// alphabetically first label.
pub fn top_k(posteriors: &LogitRow, k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..PHONE_COUNT).collect();
    let cmp = |a: &usize, b: &usize| posteriors[*b].total_cmp(&posteriors[*a]).then(a.cmp(b));
    let k = k.min(PHONE_COUNT);
    if k < PHONE_COUNT {
        idx.select_nth_unstable_by(k, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}

pub fn select_corner_frames(
    pg: &Posteriorgram,
    sets: &PhoneSets,
    cfg: &SelectionConfig,
) -> VowelFrameSets {
    let corner;
    let sets = if cfg.corner_only {
        corner = PhoneSets::corner_only();
        &corner
    } else {
        sets
    };
    let columns: Vec<(Vowel, Vec<usize>)> = Vowel::ALL
        .iter()
        .map(|&v| (v, sets.get(v).iter().filter_map(|l| phone_index(l)).collect()))
        .collect();
    let mut out = VowelFrameSets::default();
    for (t, row) in pg.logits.iter().enumerate() {
        let p = softmax_row(row);
        let top = top_k(&p, cfg.k);
        let decoded = pg.decoded[t].as_str();
        for (v, cols) in &columns {
            let by_decoding = sets.get(*v).iter().any(|l| l == decoded);
            let by_posterior = || top.iter().any(|j| cols.contains(j) && p[*j] > cfg.alpha);
            if by_decoding || by_posterior() {
                out.get_mut(*v).push(t);
            }
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionStats {
    pub n_a: usize,
    pub n_i: usize,
    pub n_u: usize,
    pub overlap_ai: usize,
    pub overlap_au: usize,
    pub overlap_iu: usize,
    pub overlap_aiu: usize,
    /// Frames selected for at least one vowel.
    pub union: usize,
}

pub fn selection_stats(sets: &VowelFrameSets) -> SelectionStats {
    let a: BTreeSet<usize> = sets.a.iter().copied().collect();
    let i: BTreeSet<usize> = sets.i.iter().copied().collect();
    let u: BTreeSet<usize> = sets.u.iter().copied().collect();
    let all: BTreeSet<usize> = a.iter().chain(&i).chain(&u).copied().collect();
    SelectionStats {
        n_a: a.len(),
        n_i: i.len(),
        n_u: u.len(),
        overlap_ai: a.intersection(&i).count(),
        overlap_au: a.intersection(&u).count(),
        overlap_iu: i.intersection(&u).count(),
        overlap_aiu: a.iter().filter(|x| i.contains(x) && u.contains(x)).count(),
        union: all.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(n: usize) -> Vec<(f64, f64)> {
        (0..n)
            .map(|i| (i as f64 * FRAME_HOP_S, i as f64 * FRAME_HOP_S + FRAME_WINDOW_S))
            .collect()
    }

    /// Logit row that yields the given posteriors for the named labels,
    /// spreading the remaining mass evenly over the other 38 - n.
    fn row_with(posteriors: &[(&str, f64)]) -> LogitRow {
        let named: f64 = posteriors.iter().map(|p| p.1).sum();
        let rest = (1.0 - named) / (PHONE_COUNT - posteriors.len()) as f64;
        let mut row = [rest.ln(); PHONE_COUNT];
        for (l, p) in posteriors {
            row[phone_index(l).unwrap()] = p.ln();
        }
        row
    }

    fn pg(rows: Vec<LogitRow>, decoded: &[&str]) -> Posteriorgram {
        let n = rows.len();
        Posteriorgram::new(times(n), rows, labels(decoded)).unwrap()
    }

    #[test]
    fn inventory_is_sorted_and_unique() {
        assert!(PHONES.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(phone_index("IX"), Some(17));
    }

    #[test]
    fn softmax_examples() {
        let p = softmax_row(&[3.0; PHONE_COUNT]);
        assert!(p.iter().all(|v| (v - 0.025).abs() < 1e-15));

        let mut row = [0.0; PHONE_COUNT];
        row[5] = 1000.0;
        assert!(softmax_row(&row)[5] >= 1.0 - 1e-12);

        let mut row = [-1e9; PHONE_COUNT];
        row[0] = 1f64.ln();
        row[1] = 3f64.ln();
        let p = softmax_row(&row);
        assert!((p[0] - 0.25).abs() < 1e-12 && (p[1] - 0.75).abs() < 1e-12);
    }

    #[test]
    fn selection_examples() {
        let rows = vec![
            row_with(&[("UW", 0.46), ("UH", 0.2), ("P", 0.15)]),
            row_with(&[("IY", 0.71), ("IH", 0.1)]),
            row_with(&[("AH", 0.05)]),
            row_with(&[("N", 0.5), ("M", 0.2), ("IY", 0.19)]),
        ];
        let pg = pg(rows, &["P", "IH", "AH", "N"]);
        let s = select_corner_frames(&pg, &PhoneSets::default(), &SelectionConfig::default());
        assert_eq!(s.u, vec![0]);
        assert_eq!(s.i, vec![1]);
        assert_eq!(s.a, vec![2]);
        let st = selection_stats(&s);
        assert_eq!((st.n_a, st.n_i, st.n_u, st.union), (1, 1, 1, 3));
    }

    #[test]
    fn tie_at_rank_k_prefers_alphabetical() {
        // Everything uniform: top-4 are AA, AE, AH, AO.
        let p = [0.025; PHONE_COUNT];
        assert_eq!(top_k(&p, 4), vec![0, 1, 2, 3]);
    }

    #[test]
    fn frames_may_belong_to_several_vowels() {
        let rows = vec![row_with(&[("AA", 0.3), ("IY", 0.3), ("UW", 0.3)])];
        let pg = pg(rows, &[SILENCE]);
        let s = select_corner_frames(&pg, &PhoneSets::default(), &SelectionConfig::default());
        assert_eq!(selection_stats(&s).overlap_aiu, 1);
        assert_eq!(selection_stats(&VowelFrameSets::default()), SelectionStats::default());
    }

    #[test]
    fn corner_only_uses_single_labels() {
        let rows = vec![row_with(&[("AE", 0.9)]), row_with(&[("AA", 0.9)])];
        let pg = pg(rows, &["AE", "AA"]);
        let cfg = SelectionConfig {
            corner_only: true,
            ..Default::default()
        };
        let s = select_corner_frames(&pg, &PhoneSets::default(), &cfg);
        assert_eq!(s.a, vec![1]);
    }

    #[test]
    fn unknown_labels_are_inert() {
        let sets = PhoneSets {
            i: labels(&["IY", "XX"]),
            ..Default::default()
        };
        assert_eq!(sets.unknown_labels(), vec!["XX".to_string()]);
        let pg = pg(vec![row_with(&[("IY", 0.3)])], &["XX"]);
        let s = select_corner_frames(&pg, &sets, &SelectionConfig::default());
        assert_eq!(s.i, vec![0]);
    }

    fn header(cols: &[&str]) -> String {
        let mut h = String::from("start_s,end_s,decoded");
        for c in cols {
            h.push(',');
            h.push_str(c);
        }
        h
    }

    fn data_row(t: f64, n: usize) -> String {
        let mut r = format!("{:.6},{:.6},AA", t, t + FRAME_WINDOW_S);
        for j in 0..n {
            r.push_str(&format!(",{}", j as f64 * 0.1));
        }
        r
    }

    #[test]
    fn round_trip() {
        let rows = vec![
            row_with(&[("UW", 0.46)]),
            row_with(&[("IY", 0.71)]),
            row_with(&[("AH", 0.05)]),
        ];
        let original = pg(rows, &["UW", "IY", SILENCE]);
        let mut buf = Vec::new();
        write_posteriorgram(&mut buf, &original).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("start_s,end_s,decoded,AA,AE,AH,AO,"));
        assert!(!text.contains('\r'));
        let (back, warnings) = parse_posteriorgram(&buf[..], "mem", ReadOptions::default()).unwrap();
        assert!(warnings.is_empty());
        assert_eq!(back.logits(), original.logits());
        assert_eq!(back.decoded(), original.decoded());
        for (a, b) in back.frame_times().iter().zip(original.frame_times()) {
            assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn missing_column_is_named() {
        let cols: Vec<&str> = PHONES.iter().copied().filter(|p| *p != "ZH").collect();
        let text = format!("{}\n{}\n", header(&cols), data_row(0.0, 39));
        let e = parse_posteriorgram(text.as_bytes(), "f.csv", ReadOptions::default()).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("missing ZH"), "{msg}");
    }

    #[test]
    fn shuffled_columns_fail_label_order() {
        let mut cols = PHONES.to_vec();
        cols.swap(0, 1);
        let text = format!("{}\n{}\n", header(&cols), data_row(0.0, 40));
        let e = parse_posteriorgram(text.as_bytes(), "f.csv", ReadOptions::default()).unwrap_err();
        assert!(e.to_string().contains("label order"));
    }

    #[test]
    fn wrong_hop_is_rejected() {
        let text = format!(
            "{}\n{}\n{}\n",
            header(&PHONES),
            data_row(0.0, 40),
            data_row(0.025, 40)
        );
        let e = parse_posteriorgram(text.as_bytes(), "f.csv", ReadOptions::default()).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("unexpected hop") && msg.contains("f.csv:3"), "{msg}");
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let mut bad = data_row(0.03, 40);
        bad = bad.replace(",0.5,", ",abc,");
        let text = format!("{}\n{}\n{}\n", header(&PHONES), data_row(0.0, 40), bad);
        let e = parse_posteriorgram(text.as_bytes(), "f.csv", ReadOptions::default()).unwrap_err();
        assert!(e.to_string().starts_with("f.csv:3:"), "{e}");

        let truncated = format!("{}\n{}\n", header(&PHONES), "0.0,0.045,AA,1,2");
        let e = parse_posteriorgram(truncated.as_bytes(), "f.csv", ReadOptions::default())
            .unwrap_err();
        assert!(e.to_string().starts_with("f.csv:2:"), "{e}");
    }

    #[test]
    fn missing_decoded_column() {
        let mut h = String::from("start_s,end_s");
        for p in PHONES {
            h.push(',');
            h.push_str(p);
        }
        let mut row = String::from("0.000000,0.045000");
        for j in 0..PHONE_COUNT {
            row.push_str(if j == 18 { ",5" } else { ",0" });
        }
        let text = format!("{h}\n{row}\n");
        assert!(parse_posteriorgram(text.as_bytes(), "f", ReadOptions::default()).is_err());
        let (pg, w) = parse_posteriorgram(
            text.as_bytes(),
            "f",
            ReadOptions {
                allow_missing_decoded: true,
            },
        )
        .unwrap();
        assert!(pg.decoded_derived());
        assert_eq!(pg.decoded()[0], "IY");
        assert_eq!(w.len(), 1);
    }
}
