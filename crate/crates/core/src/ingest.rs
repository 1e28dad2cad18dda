//! Parsers for descriptor tables, landmark tracks, transcripts, lexicons
//! and label manifests.
//!
//! All parsers report 1-based line numbers in their errors and parse
//! numbers with `str::parse`, which always uses '.' as the decimal point.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use csv::{ReaderBuilder, StringRecord, Trim};

use crate::datamodel::{
    DescriptorSeries, LandmarkFrame, LandmarkSeries, Point, SessionRecord, Split, Transcript,
    Utterance, LANDMARK_COUNT,
};
use crate::error::{Error, Result};

/// Column layout of the 74-column COVAREP descriptor export.
pub fn covarep_descriptor_names() -> Vec<String> {
    let mut names: Vec<String> = [
        "F0", "VUV", "NAQ", "QOQ", "H1H2", "PSP", "MDQ", "peakSlope", "Rd", "Rd_conf", "creak",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    names.extend((0..25).map(|i| format!("MCEP_{i}")));
    names.extend((0..25).map(|i| format!("HMPDM_{i}")));
    names.extend((0..13).map(|i| format!("HMPDD_{i}")));
    names
}

/// Bindings for descriptor tables without a header row.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorColumns {
    pub names: Vec<String>,
    pub delimiter: u8,
    pub frame_period: f64,
}

impl Default for DescriptorColumns {
    fn default() -> Self {
        Self {
            names: covarep_descriptor_names(),
            delimiter: b',',
            frame_period: 0.01,
        }
    }
}

/// Column bindings for landmark tables. When the file has a header the
/// bindings are resolved from the column names `timestamp`, `x0..x67`,
/// `y0..y67`, `confidence` and `success`; otherwise the indices are used.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkColumns {
    pub timestamp: usize,
    pub x_start: usize,
    pub y_start: usize,
    pub confidence: Option<usize>,
    pub success: Option<usize>,
    /// Expected cell count per row.
    pub width: usize,
    pub delimiter: u8,
}

impl Default for LandmarkColumns {
    /// `frame, timestamp, x0..x67, y0..y67`
    fn default() -> Self {
        Self {
            timestamp: 1,
            x_start: 2,
            y_start: 2 + LANDMARK_COUNT,
            confidence: None,
            success: None,
            width: 2 + 2 * LANDMARK_COUNT,
            delimiter: b',',
        }
    }
}

impl LandmarkColumns {
    fn from_header(header: &StringRecord, fallback: &Self) -> Self {
        let find = |name: &str| {
            header
                .iter()
                .position(|c| c.trim().eq_ignore_ascii_case(name))
        };
        let (Some(x0), Some(y0)) = (find("x0"), find("y0")) else {
            return Self {
                width: header.len(),
                ..fallback.clone()
            };
        };
        Self {
            timestamp: find("timestamp").unwrap_or(fallback.timestamp),
            x_start: x0,
            y_start: y0,
            confidence: find("confidence"),
            success: find("success"),
            width: header.len(),
            delimiter: fallback.delimiter,
        }
    }
}

/// Per-format column bindings.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ColumnMap {
    pub descriptors: DescriptorColumns,
    pub landmarks: LandmarkColumns,
}

/// Counts gathered while parsing a descriptor table.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub rows: usize,
    pub nan_count: usize,
    pub had_header: bool,
}

enum Cell {
    Number(f64),
    Missing,
    Text,
}

fn classify(cell: &str) -> Cell {
    let cell = cell.trim();
    if cell.is_empty() || cell.eq_ignore_ascii_case("nan") {
        return Cell::Missing;
    }
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Cell::Number(v),
        _ => Cell::Text,
    }
}

fn is_numeric_row(record: &StringRecord) -> bool {
    record.iter().all(|c| !matches!(classify(c), Cell::Text))
}

fn line_of(record: &StringRecord) -> usize {
    record.position().map_or(0, |p| p.line() as usize)
}

fn records(text: &str, delimiter: u8, quoting: bool) -> Result<Vec<StringRecord>> {
    let mut reader = ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(Trim::All)
        .delimiter(delimiter)
        .quoting(quoting)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for result in reader.records() {
        let record = result.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        if record.iter().all(str::is_empty) {
            continue;
        }
        out.push(record);
    }
    Ok(out)
}

fn number(cell: &str, line: usize) -> Result<f64> {
    match classify(cell) {
        Cell::Number(v) => Ok(v),
        _ => Err(Error::NonNumeric {
            line,
            cell: cell.to_string(),
        }),
    }
}

/// Parse a per-frame descriptor table. Missing (`NaN` or empty) cells
/// become 0.0 and are counted in the report.
pub fn parse_descriptor_table(
    text: &str,
    columns: &DescriptorColumns,
) -> Result<(DescriptorSeries, ParseReport)> {
    let rows = records(text, columns.delimiter, true)?;
    let Some(first) = rows.first() else {
        return Err(Error::Empty("descriptor table has no rows".into()));
    };
    let had_header = !is_numeric_row(first);
    let names: Vec<String> = if had_header {
        first.iter().map(str::to_string).collect()
    } else {
        columns.names.clone()
    };
    let body = if had_header { &rows[1..] } else { &rows[..] };
    if body.is_empty() {
        return Err(Error::Empty("descriptor table has no data rows".into()));
    }

    let mut report = ParseReport {
        had_header,
        ..ParseReport::default()
    };
    let mut frames = Vec::with_capacity(body.len());
    for record in body {
        let line = line_of(record);
        if record.len() != names.len() {
            return Err(Error::RaggedRow {
                line,
                expected: names.len(),
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(names.len());
        for cell in record.iter() {
            match classify(cell) {
                Cell::Number(v) => row.push(v),
                Cell::Missing => {
                    report.nan_count += 1;
                    row.push(0.0);
                }
                Cell::Text => {
                    return Err(Error::NonNumeric {
                        line,
                        cell: cell.to_string(),
                    })
                }
            }
        }
        frames.push(row);
    }
    report.rows = frames.len();
    Ok((
        DescriptorSeries::new(names, frames, columns.frame_period)?,
        report,
    ))
}

/// Serialize a descriptor series with a header row. Values use the
/// shortest round-tripping decimal form.
pub fn write_descriptor_table(series: &DescriptorSeries) -> String {
    let mut out = series.names().join(",");
    out.push('\n');
    for row in series.frames() {
        push_row(&mut out, row.iter());
    }
    out
}

fn push_row<'a>(out: &mut String, values: impl Iterator<Item = &'a f64>) {
    for (i, v) in values.enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v}").unwrap();
    }
    out.push('\n');
}

/// Parse a 68-point landmark track.
pub fn parse_landmark_table(text: &str, columns: &LandmarkColumns) -> Result<LandmarkSeries> {
    let rows = records(text, columns.delimiter, true)?;
    let (layout, body) = match rows.first() {
        Some(first) if !is_numeric_row(first) => {
            (LandmarkColumns::from_header(first, columns), &rows[1..])
        }
        _ => (columns.clone(), &rows[..]),
    };
    if body.is_empty() {
        return Err(Error::Empty("landmark table has no data rows".into()));
    }
    let needed = [
        layout.timestamp,
        layout.x_start + LANDMARK_COUNT - 1,
        layout.y_start + LANDMARK_COUNT - 1,
    ];
    if needed.iter().any(|&i| i >= layout.width) {
        return Err(Error::Config(format!(
            "landmark layout needs {} columns, table has {}",
            needed.iter().max().unwrap() + 1,
            layout.width
        )));
    }

    let mut frames = Vec::with_capacity(body.len());
    let mut timestamps = Vec::with_capacity(body.len());
    let mut confidence = layout.confidence.map(|_| Vec::with_capacity(body.len()));
    for record in body {
        let line = line_of(record);
        if record.len() != layout.width {
            return Err(Error::WrongArity {
                line,
                expected: layout.width,
                found: record.len(),
            });
        }
        let timestamp = number(&record[layout.timestamp], line)?;
        if let Some(&prev) = timestamps.last() {
            if timestamp < prev {
                return Err(Error::NonMonotoneTimestamp { line, timestamp });
            }
        }
        let mut frame: LandmarkFrame = [Point::default(); LANDMARK_COUNT];
        for (i, point) in frame.iter_mut().enumerate() {
            *point = Point::new(
                number(&record[layout.x_start + i], line)?,
                number(&record[layout.y_start + i], line)?,
            );
        }
        if let (Some(col), Some(conf)) = (layout.confidence, confidence.as_mut()) {
            conf.push(number(&record[col], line)?);
        }
        if let Some(col) = layout.success {
            number(&record[col], line)?;
        }
        frames.push(frame);
        timestamps.push(timestamp);
    }
    LandmarkSeries::with_confidence(frames, timestamps, confidence)
}

/// Serialize a landmark track in the default `frame, timestamp, x.., y..`
/// layout, with a header.
pub fn write_landmark_table(series: &LandmarkSeries) -> String {
    let mut out = String::from("frame,timestamp");
    for axis in ["x", "y"] {
        for i in 0..LANDMARK_COUNT {
            write!(out, ",{axis}{i}").unwrap();
        }
    }
    out.push('\n');
    for (idx, (frame, ts)) in series.frames().iter().zip(series.timestamps()).enumerate() {
        let cells: Vec<f64> = std::iter::once((idx + 1) as f64)
            .chain(std::iter::once(*ts))
            .chain(frame.iter().map(|p| p.x))
            .chain(frame.iter().map(|p| p.y))
            .collect();
        push_row(&mut out, cells.iter());
    }
    out
}

/// Parse a tab-separated `start_time, stop_time, speaker, value` transcript.
/// A first row with a non-numeric start time is treated as a header.
pub fn parse_transcript(text: &str) -> Result<Transcript> {
    let rows = records(text, b'\t', false)?;
    let mut utterances = Vec::with_capacity(rows.len());
    for (i, record) in rows.iter().enumerate() {
        let line = line_of(record);
        if i == 0 && matches!(classify(&record[0]), Cell::Text) {
            continue;
        }
        let field = |idx: usize, name: &'static str| {
            record
                .get(idx)
                .ok_or(Error::MissingField { line, field: name })
        };
        let time = |idx: usize, name: &'static str| -> Result<f64> {
            let cell = field(idx, name)?;
            match classify(cell) {
                Cell::Number(v) => Ok(v),
                _ => Err(Error::MalformedTime {
                    line,
                    message: format!("{name} {cell:?} is not a number"),
                }),
            }
        };
        let start_time = time(0, "start_time")?;
        let stop_time = time(1, "stop_time")?;
        if stop_time < start_time {
            return Err(Error::MalformedTime {
                line,
                message: format!("stop_time {stop_time} precedes start_time {start_time}"),
            });
        }
        let speaker = field(2, "speaker")?.to_string();
        let text = record
            .iter()
            .skip(3)
            .collect::<Vec<_>>()
            .join("\t");
        if record.len() < 4 {
            return Err(Error::MissingField {
                line,
                field: "value",
            });
        }
        utterances.push(Utterance {
            start_time,
            stop_time,
            speaker,
            text,
        });
    }
    Transcript::new(utterances)
}

/// Serialize a transcript with the standard header.
pub fn write_transcript(transcript: &Transcript) -> String {
    let mut out = String::from("start_time\tstop_time\tspeaker\tvalue\n");
    for u in transcript.utterances() {
        writeln!(
            out,
            "{}\t{}\t{}\t{}",
            u.start_time, u.stop_time, u.speaker, u.text
        )
        .unwrap();
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexiconKind {
    Sentiment,
    Depression,
}

/// Lowercased term list. Sentiment entries carry an AFINN valence in
/// [-5, 5]; depression entries carry 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    kind: LexiconKind,
    entries: HashMap<String, i32>,
    max_words: usize,
}

impl Lexicon {
    pub fn from_entries(
        kind: LexiconKind,
        entries: impl IntoIterator<Item = (String, i32)>,
    ) -> Result<Self> {
        let mut map = HashMap::new();
        for (term, value) in entries {
            let term = normalize_term(&term);
            if term.is_empty() {
                continue;
            }
            if kind == LexiconKind::Sentiment && !(-5..=5).contains(&value) {
                return Err(Error::ValenceOutOfRange {
                    line: 0,
                    term,
                    value: value.into(),
                });
            }
            map.insert(term, if kind == LexiconKind::Depression { 1 } else { value });
        }
        if map.is_empty() {
            return Err(Error::Empty("lexicon has no entries".into()));
        }
        let max_words = map.keys().map(|k| k.split(' ').count()).max().unwrap_or(1);
        Ok(Self {
            kind,
            entries: map,
            max_words,
        })
    }

    pub fn kind(&self) -> LexiconKind {
        self.kind
    }

    pub fn get(&self, term: &str) -> Option<i32> {
        self.entries.get(term).copied()
    }

    pub fn contains(&self, term: &str) -> bool {
        self.entries.contains_key(term)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Longest entry, in words.
    pub fn max_words(&self) -> usize {
        self.max_words
    }
}

fn normalize_term(term: &str) -> String {
    term.split_whitespace()
        .collect::<Vec<_>>()
        .join(" ")
        .to_lowercase()
}

/// Load a sentiment (`term<TAB>valence`) or depression (one term per line)
/// lexicon. Later duplicates replace earlier ones.
pub fn load_lexicon(text: &str, kind: LexiconKind) -> Result<Lexicon> {
    let mut entries = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        match kind {
            LexiconKind::Depression => entries.push((raw.trim().to_string(), 1)),
            LexiconKind::Sentiment => {
                let (term, value) = raw.rsplit_once('\t').ok_or(Error::MissingField {
                    line,
                    field: "valence",
                })?;
                let value: i64 = value.trim().parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("valence {:?} is not an integer", value.trim()),
                })?;
                if !(-5..=5).contains(&value) {
                    return Err(Error::ValenceOutOfRange {
                        line,
                        term: term.trim().to_lowercase(),
                        value,
                    });
                }
                entries.push((term.to_string(), value as i32));
            }
        }
    }
    Lexicon::from_entries(kind, entries)
}

/// Parse a `session_id, phq8, gender, split` manifest. With a header row
/// the columns are located by name (`participant_id` and `phq8_score` are
/// accepted aliases); an empty phq8 cell means "unlabelled".
pub fn load_labels(text: &str) -> Result<Vec<SessionRecord>> {
    let rows = records(text, b',', true)?;
    let mut layout = [0usize, 1, 2, 3];
    let mut body = &rows[..];
    if let Some(first) = rows.first() {
        let gender_cell = first.get(2).unwrap_or("");
        if gender_cell.parse::<u8>().is_err() {
            let find = |names: &[&str]| {
                first
                    .iter()
                    .position(|c| names.iter().any(|n| c.trim().eq_ignore_ascii_case(n)))
            };
            let line = line_of(first);
            let missing = |field| Error::MissingField { line, field };
            layout = [
                find(&["session_id", "participant_id", "session"])
                    .ok_or_else(|| missing("session_id"))?,
                find(&["phq8", "phq8_score", "phq_score"]).ok_or_else(|| missing("phq8"))?,
                find(&["gender"]).ok_or_else(|| missing("gender"))?,
                find(&["split"]).ok_or_else(|| missing("split"))?,
            ];
            body = &rows[1..];
        }
    }

    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(body.len());
    for record in body {
        let line = line_of(record);
        let cell = |idx: usize, field: &'static str| {
            record.get(idx).ok_or(Error::MissingField { line, field })
        };
        let session_id = cell(layout[0], "session_id")?.to_string();
        if session_id.is_empty() {
            return Err(Error::MissingField {
                line,
                field: "session_id",
            });
        }
        let phq8_cell = cell(layout[1], "phq8")?;
        let phq8 = if phq8_cell.is_empty() {
            None
        } else {
            let value: i64 = phq8_cell.parse().map_err(|_| Error::Parse {
                line,
                message: format!("phq8 {phq8_cell:?} is not an integer"),
            })?;
            if !(0..=24).contains(&value) {
                return Err(Error::Phq8OutOfRange { line, value });
            }
            Some(value as u8)
        };
        let gender_cell = cell(layout[2], "gender")?;
        let gender = match gender_cell {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("gender {other:?} must be 0 or 1"),
                })
            }
        };
        let split: Split = cell(layout[3], "split")?
            .parse()
            .map_err(|e: Error| Error::Parse {
                line,
                message: e.to_string(),
            })?;
        if !seen.insert(session_id.clone()) {
            return Err(Error::DuplicateSession { line, session_id });
        }
        out.push(SessionRecord::new(session_id, gender, phq8, split)?);
    }
    Ok(out)
}

/// Serialize records as a manifest with a header.
pub fn write_labels(records: &[SessionRecord]) -> String {
    let mut out = String::from("session_id,phq8,gender,split\n");
    for r in records {
        let phq8 = r.phq8().map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", r.session_id(), phq8, r.gender(), r.split()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_col() -> DescriptorColumns {
        DescriptorColumns {
            names: vec!["F0".into(), "VUV".into()],
            ..DescriptorColumns::default()
        }
    }

    #[test]
    fn covarep_layout_has_74_columns() {
        let names = covarep_descriptor_names();
        assert_eq!(names.len(), 74);
        assert_eq!(names.iter().collect::<HashSet<_>>().len(), 74);
    }

    #[test]
    fn descriptor_basic() {
        let (series, report) =
            parse_descriptor_table("F0,VUV\n120.5,1\n", &DescriptorColumns::default()).unwrap();
        assert_eq!(series.names(), ["F0", "VUV"]);
        assert_eq!(series.frames(), [vec![120.5, 1.0]]);
        assert!(report.had_header);
        assert_eq!(report.nan_count, 0);
        assert_eq!(series.frame_period(), 0.01);
    }

    #[test]
    fn descriptor_nan_replacement() {
        let (series, report) =
            parse_descriptor_table("F0,VUV\nNaN,1\n100,\n", &DescriptorColumns::default())
                .unwrap();
        assert_eq!(series.frames(), [vec![0.0, 1.0], vec![100.0, 0.0]]);
        assert_eq!(report.nan_count, 2);
    }

    #[test]
    fn descriptor_headerless_uses_column_map() {
        let (series, report) = parse_descriptor_table("1,0\n2,1\n", &two_col()).unwrap();
        assert!(!report.had_header);
        assert_eq!(series.names(), ["F0", "VUV"]);
        assert_eq!(series.n_frames(), 2);
        // the default map expects 74 columns
        let err = parse_descriptor_table("1,0\n", &DescriptorColumns::default()).unwrap_err();
        assert_eq!(err.line(), Some(1));
    }

    #[test]
    fn descriptor_errors() {
        match parse_descriptor_table("F0,VUV\n1,2\n1,2,3\n", &two_col()) {
            Err(Error::RaggedRow { line, expected, found }) => {
                assert_eq!((line, expected, found), (3, 2, 3))
            }
            other => panic!("unexpected {other:?}"),
        }
        match parse_descriptor_table("F0,VUV\n1,x\n", &two_col()) {
            Err(Error::NonNumeric { line, cell }) => assert_eq!((line, cell.as_str()), (2, "x")),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_descriptor_table("", &two_col()), Err(Error::Empty(_))));
        assert!(matches!(parse_descriptor_table("F0,VUV\n", &two_col()), Err(Error::Empty(_))));
    }

    fn landmark_row(frame: usize, ts: f64, xs: impl Fn(usize) -> f64, ys: impl Fn(usize) -> f64) -> String {
        let mut cells = vec![frame.to_string(), ts.to_string()];
        cells.extend((0..68).map(|i| xs(i).to_string()));
        cells.extend((0..68).map(|i| ys(i).to_string()));
        cells.join(",") + "\n"
    }

    #[test]
    fn landmark_transcription() {
        let text = landmark_row(1, 0.0, |i| i as f64, |_| 0.0);
        let series = parse_landmark_table(&text, &LandmarkColumns::default()).unwrap();
        assert_eq!(series.len(), 1);
        assert_eq!(series.frames()[0][5], Point::new(5.0, 0.0));
    }

    #[test]
    fn landmark_header_resolution() {
        // OpenFace-style header with confidence/success and padded names
        let mut text = String::from("frame, timestamp, confidence, success");
        for axis in ["x", "y"] {
            for i in 0..68 {
                text.push_str(&format!(", {axis}{i}"));
            }
        }
        text.push('\n');
        let mut cells = vec!["1".to_string(), "0.5".into(), "0.98".into(), "1".into()];
        cells.extend((0..68).map(|i| (i * 2).to_string()));
        cells.extend((0..68).map(|i| (i * 3).to_string()));
        text.push_str(&cells.join(", "));
        text.push('\n');
        let series = parse_landmark_table(&text, &LandmarkColumns::default()).unwrap();
        assert_eq!(series.timestamps(), [0.5]);
        assert_eq!(series.frames()[0][10], Point::new(20.0, 30.0));
        assert_eq!(series.confidence(), Some(&[0.98][..]));
    }

    #[test]
    fn landmark_errors() {
        assert!(matches!(
            parse_landmark_table("", &LandmarkColumns::default()),
            Err(Error::Empty(_))
        ));
        let mut short = landmark_row(1, 0.0, |i| i as f64, |_| 0.0);
        // drop the last coordinate cell: 135 coordinates
        short.truncate(short.trim_end().rfind(',').unwrap());
        short.push('\n');
        assert!(matches!(
            parse_landmark_table(&short, &LandmarkColumns::default()),
            Err(Error::WrongArity { line: 1, expected: 138, found: 137 })
        ));
        let text = landmark_row(1, 1.0, |_| 0.0, |_| 0.0) + &landmark_row(2, 0.5, |_| 0.0, |_| 0.0);
        assert!(matches!(
            parse_landmark_table(&text, &LandmarkColumns::default()),
            Err(Error::NonMonotoneTimestamp { line: 2, .. })
        ));
    }

    #[test]
    fn transcript_parsing() {
        let t = parse_transcript("0.0\t2.5\tParticipant\thello there\n").unwrap();
        assert_eq!(t.utterances().len(), 1);
        assert_eq!(t.duration(), 2.5);
        assert_eq!(t.utterances()[0].text, "hello there");

        let t = parse_transcript("start_time\tstop_time\tspeaker\tvalue\n").unwrap();
        assert!(t.utterances().is_empty());

        match parse_transcript("start_time\tstop_time\tspeaker\tvalue\n3.0\t2.0\tEllie\thi\n") {
            Err(Error::MalformedTime { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_transcript("1.0\tabc\tEllie\thi\n"),
            Err(Error::MalformedTime { line: 1, .. })
        ));
        assert!(matches!(
            parse_transcript("1.0\t2.0\tEllie\n"),
            Err(Error::MissingField { line: 1, field: "value" })
        ));
    }

    #[test]
    fn transcript_keeps_quotes() {
        let t = parse_transcript("0\t1\tParticipant\tshe said \"no\"\n").unwrap();
        assert_eq!(t.utterances()[0].text, "she said \"no\"");
    }

    #[test]
    fn lexicons() {
        let lex = load_lexicon("abandon\t-2\ngood\t3\nGood\t2\n", LexiconKind::Sentiment).unwrap();
        assert_eq!(lex.get("abandon"), Some(-2));
        assert_eq!(lex.get("good"), Some(2));

        let dep = load_lexicon("Hopeless\n\nsad\n", LexiconKind::Depression).unwrap();
        assert!(dep.contains("hopeless"));
        assert_eq!(dep.len(), 2);

        match load_lexicon("ok\t1\nweird\t-9\n", LexiconKind::Sentiment) {
            Err(Error::ValenceOutOfRange { line, value, .. }) => assert_eq!((line, value), (2, -9)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_lexicon("\n\n", LexiconKind::Depression), Err(Error::Empty(_))));

        let phrase = load_lexicon("does not work\t-3\n", LexiconKind::Sentiment).unwrap();
        assert_eq!(phrase.max_words(), 3);
    }

    #[test]
    fn labels() {
        let recs = load_labels("s001,10,1,train\n").unwrap();
        assert_eq!(
            recs,
            vec![SessionRecord::new("s001", 1, Some(10), Split::Train).unwrap()]
        );

        let recs = load_labels("session_id,phq8,gender,split\ns002,,0,test\n").unwrap();
        assert_eq!(recs[0].phq8(), None);
        assert_eq!(recs[0].split(), Split::Test);

        let recs =
            load_labels("Participant_ID,Gender,PHQ8_Score,split\n303,0,0,dev\n").unwrap();
        assert_eq!(recs[0].session_id(), "303");
        assert_eq!(recs[0].split(), Split::Development);

        assert!(matches!(
            load_labels("s001,25,1,train\n"),
            Err(Error::Phq8OutOfRange { line: 1, value: 25 })
        ));
        assert!(matches!(
            load_labels("s001,1,1,train\ns001,2,0,train\n"),
            Err(Error::DuplicateSession { line: 2, .. })
        ));
        let written = write_labels(&load_labels("a,3,1,train\nb,,0,test\n").unwrap());
        assert_eq!(load_labels(&written).unwrap().len(), 2);
    }

    proptest! {
        #[test]
        fn descriptor_round_trip(
            ncols in 1usize..6,
            rows in prop::collection::vec(prop::collection::vec(-1e6..1e6f64, 6), 1..20),
        ) {
            let names: Vec<String> = (0..ncols).map(|i| format!("d{i}")).collect();
            let frames: Vec<Vec<f64>> = rows.into_iter().map(|r| r[..ncols].to_vec()).collect();
            let series = DescriptorSeries::new(names, frames, 0.01).unwrap();
            let text = write_descriptor_table(&series);
            let (back, report) = parse_descriptor_table(&text, &DescriptorColumns::default()).unwrap();
            prop_assert_eq!(back, series);
            prop_assert_eq!(report.nan_count, 0);
        }
    }
}
