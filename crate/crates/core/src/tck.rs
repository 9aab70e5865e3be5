//! Reading and writing MRtrix `.tck` streamline files.
//!
//! A TCK file is an ASCII header followed by a binary body:
//!
//! ```text
//! mrtrix tracks
//! datatype: Float32LE
//! count: 2
//! file: . 67
//! END
//! <x y z f32 LE triplets ...>
//! ```
//!
//! Streamlines are separated by an all-NaN triplet and the stream ends with
//! an all-Inf triplet. Only `Float32LE` bodies are supported.

use thiserror::Error;

use crate::geom::{Axis, Point3};

const MAGIC: &str = "mrtrix tracks";
const DATATYPE: &str = "Float32LE";
const TRIPLET_BYTES: usize = 12;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TckError {
    #[error("missing `mrtrix tracks` magic line")]
    MissingMagic,
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("unsupported datatype `{0}` (only Float32LE is supported)")]
    UnsupportedDatatype(String),
    #[error("bad data offset: {0}")]
    BadOffset(String),
    #[error("body truncated at byte {0}")]
    TruncatedBody(usize),
    #[error("non-finite coordinate in data triplet at byte {0}")]
    NonFiniteCoordinate(usize),
}

/// Header entries in file order. Keys may repeat (MRtrix writes repeated
/// `command_history` lines), so this is a list rather than a map.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TckHeader {
    entries: Vec<(String, String)>,
}

impl TckHeader {
    pub fn new() -> Self {
        Self::default()
    }

    /// First value recorded for `key`.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.entries.push((key.into(), value.into()));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// An ordered set of streamlines.
#[derive(Debug, Clone, Default)]
pub struct StreamlineSet {
    pub streamlines: Vec<Vec<Point3>>,
    pub header: TckHeader,
    /// Streamlines with fewer than two points that the parser discarded.
    pub dropped: usize,
}

impl StreamlineSet {
    pub fn new(streamlines: Vec<Vec<Point3>>) -> Self {
        Self {
            streamlines,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.streamlines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.streamlines.is_empty()
    }

    pub fn point_count(&self) -> usize {
        self.streamlines.iter().map(Vec::len).sum()
    }

    pub fn segment_count(&self) -> usize {
        self.streamlines
            .iter()
            .map(|s| s.len().saturating_sub(1))
            .sum()
    }

    /// Streamline geometry equality with bitwise coordinate comparison.
    pub fn same_geometry(&self, other: &StreamlineSet) -> bool {
        self.streamlines.len() == other.streamlines.len()
            && self
                .streamlines
                .iter()
                .zip(&other.streamlines)
                .all(|(a, b)| a.len() == b.len() && a.iter().zip(b).all(|(p, q)| p.bit_eq(q)))
    }
}

fn split_line(bytes: &[u8], start: usize) -> Option<(&[u8], usize)> {
    let rest = &bytes[start..];
    let end = rest.iter().position(|&b| b == b'\n')?;
    let mut line = &rest[..end];
    if line.last() == Some(&b'\r') {
        line = &line[..line.len() - 1];
    }
    Some((line, start + end + 1))
}

fn parse_offset(value: &str) -> Result<usize, TckError> {
    let mut parts = value.split_whitespace();
    match (parts.next(), parts.next(), parts.next()) {
        (Some("."), Some(off), None) => off
            .parse::<usize>()
            .map_err(|_| TckError::BadOffset(format!("`{value}` is not a byte offset"))),
        _ => Err(TckError::BadOffset(format!(
            "expected `file: . <offset>`, found `{value}`"
        ))),
    }
}

fn read_triplet(bytes: &[u8], pos: usize) -> [f32; 3] {
    let f = |o: usize| f32::from_le_bytes(bytes[pos + o..pos + o + 4].try_into().unwrap());
    [f(0), f(4), f(8)]
}

/// Parse a TCK byte stream.
pub fn parse_tck(bytes: &[u8]) -> Result<StreamlineSet, TckError> {
    let (first, mut pos) = split_line(bytes, 0).ok_or(TckError::MissingMagic)?;
    if first.trim_ascii_end() != MAGIC.as_bytes() {
        return Err(TckError::MissingMagic);
    }

    let mut header = TckHeader::new();
    loop {
        let (line, next) = split_line(bytes, pos)
            .ok_or_else(|| TckError::MalformedHeader("no END line".into()))?;
        pos = next;
        let line = std::str::from_utf8(line)
            .map_err(|_| TckError::MalformedHeader("header is not valid UTF-8".into()))?;
        if line.trim() == "END" {
            break;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once(':')
            .ok_or_else(|| TckError::MalformedHeader(format!("line `{line}` is not `key: value`")))?;
        header.push(key.trim(), value.trim());
    }
    let header_end = pos;

    match header.get("datatype") {
        Some(DATATYPE) => {}
        Some(other) => return Err(TckError::UnsupportedDatatype(other.to_string())),
        None => return Err(TckError::UnsupportedDatatype("<missing>".into())),
    }
    let offset = parse_offset(
        header
            .get("file")
            .ok_or_else(|| TckError::BadOffset("missing `file` entry".into()))?,
    )?;
    if offset < header_end || offset > bytes.len() {
        return Err(TckError::BadOffset(format!(
            "offset {offset} outside body range {header_end}..={}",
            bytes.len()
        )));
    }

    let mut streamlines = Vec::new();
    let mut dropped = 0;
    let mut current: Vec<Point3> = Vec::new();
    let mut flush = |current: &mut Vec<Point3>| {
        if current.len() >= 2 {
            streamlines.push(std::mem::take(current));
        } else {
            dropped += 1;
            current.clear();
        }
    };

    let mut pos = offset;
    loop {
        if pos + TRIPLET_BYTES > bytes.len() {
            return Err(TckError::TruncatedBody(pos));
        }
        let t = read_triplet(bytes, pos);
        if t.iter().all(|v| v.is_nan()) {
            flush(&mut current);
        } else if t.iter().all(|v| v.is_infinite()) {
            // A streamline still open at the terminator is kept rather than lost.
            if !current.is_empty() {
                flush(&mut current);
            }
            break;
        } else if t.iter().all(|v| v.is_finite()) {
            current.push(Point3::from(t));
        } else {
            return Err(TckError::NonFiniteCoordinate(pos));
        }
        pos += TRIPLET_BYTES;
    }

    Ok(StreamlineSet {
        streamlines,
        header,
        dropped,
    })
}

/// Serialize a streamline set. Header entries other than `datatype`,
/// `count` and `file` are carried over verbatim.
pub fn write_tck(set: &StreamlineSet) -> Vec<u8> {
    let mut text = String::from(MAGIC);
    text.push('\n');
    for (k, v) in set.header.iter() {
        if matches!(k, "datatype" | "count" | "file") {
            continue;
        }
        text.push_str(&format!("{k}: {v}\n"));
    }
    text.push_str(&format!("datatype: {DATATYPE}\n"));
    text.push_str(&format!("count: {}\n", set.streamlines.len()));

    // The offset is written inside the header it points past; iterate until
    // the digit count settles.
    let mut offset = text.len() + "file: . \nEND\n".len() + 1;
    loop {
        let len = text.len() + format!("file: . {offset}\nEND\n").len();
        if len == offset {
            break;
        }
        offset = len;
    }
    text.push_str(&format!("file: . {offset}\nEND\n"));
    debug_assert_eq!(text.len(), offset);

    let triplets = set.point_count() + set.streamlines.len() + 1;
    let mut out = Vec::with_capacity(offset + triplets * TRIPLET_BYTES);
    out.extend_from_slice(text.as_bytes());
    let mut put = |t: [f32; 3]| {
        for v in t {
            out.extend_from_slice(&v.to_le_bytes());
        }
    };
    for s in &set.streamlines {
        for p in s {
            put([p.x, p.y, p.z]);
        }
        put([f32::NAN; 3]);
    }
    put([f32::INFINITY; 3]);
    out
}

/// `count` parallel straight streamlines along `axis`, each `length` mm long
/// with a point every `step` mm, starting at the origin. Streamline `n` is
/// offset by `n * spacing` along the next axis (X→Y, Y→Z, Z→X).
pub fn synth_grid_lines(count: usize, spacing: f32, length: f32, step: f32, axis: Axis) -> StreamlineSet {
    assert!(count >= 1 && spacing > 0.0 && step > 0.0);
    // Tolerance keeps length/step = 10.000001 from losing the last point.
    let n_points = ((length / step) + 1e-4).floor() as usize + 1;
    let (along, across) = match axis {
        Axis::X => (0, 1),
        Axis::Y => (1, 2),
        Axis::Z => (2, 0),
    };
    let streamlines = (0..count)
        .map(|n| {
            (0..n_points)
                .map(|i| {
                    let mut c = [0.0f32; 3];
                    c[along] = i as f32 * step;
                    c[across] = n as f32 * spacing;
                    Point3::from(c)
                })
                .collect()
        })
        .collect();
    StreamlineSet::new(streamlines)
}
