//! KITTI label, detection, and calibration files.
//!
//! Object lines carry 15 whitespace-separated fields (labels) or 16 with a
//! trailing score (detections). Calibration files are `NAME: v0 v1 ...`
//! lines; only `P2` is interpreted, the rest are kept verbatim.

use std::fmt::Write as _;

use thiserror::Error;
use viewfit_core::geometry::{Box2D, Intrinsics};
use viewfit_core::record::KittiRecord;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KittiError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("record {index} has no score")]
    MissingScore { index: usize },
    #[error("no P2 entry in calibration file")]
    MissingP2,
}

fn malformed(line: usize, reason: impl Into<String>) -> KittiError {
    KittiError::MalformedLine { line, reason: reason.into() }
}

fn number(line: usize, name: &str, text: &str) -> Result<f64, KittiError> {
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(malformed(line, format!("field `{name}` is not a finite number: `{text}`"))),
    }
}

const FIELD_NAMES: [&str; 16] = [
    "type", "truncated", "occluded", "alpha", "left", "top", "right", "bottom", "height", "width",
    "length", "x", "y", "z", "rotation_y", "score",
];

fn parse_line(line_no: usize, line: &str) -> Result<KittiRecord, KittiError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 15 && fields.len() != 16 {
        return Err(malformed(line_no, format!("expected 15 or 16 fields, found {}", fields.len())));
    }
    let f = |i: usize| number(line_no, FIELD_NAMES[i], fields[i]);
    let occluded = fields[2]
        .parse::<i32>()
        .map_err(|_| malformed(line_no, format!("field `occluded` is not an integer: `{}`", fields[2])))?;
    let record = KittiRecord {
        object_type: fields[0].to_string(),
        truncated: f(1)?,
        occluded,
        alpha: f(3)?,
        bbox: Box2D { u_min: f(4)?, v_min: f(5)?, u_max: f(6)?, v_max: f(7)? },
        h: f(8)?,
        w: f(9)?,
        l: f(10)?,
        x: f(11)?,
        y: f(12)?,
        z: f(13)?,
        rotation_y: f(14)?,
        score: if fields.len() == 16 { Some(f(15)?) } else { None },
    };
    let b = &record.bbox;
    if !record.is_dont_care() && !(b.u_min <= b.u_max && b.v_min <= b.v_max) {
        return Err(malformed(line_no, "bounding box corners are out of order"));
    }
    Ok(record)
}

/// Parses a label or detection file. Blank lines are skipped; line numbers
/// in errors are 1-based.
pub fn parse_label_file(text: &str) -> Result<Vec<KittiRecord>, KittiError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(i + 1, l))
        .collect()
}

fn format_record(out: &mut String, r: &KittiRecord, score: Option<f64>) {
    let b = &r.bbox;
    write!(
        out,
        "{} {:.2} {} {:.6} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.2} {:.6}",
        r.object_type, r.truncated, r.occluded, r.alpha, b.u_min, b.v_min, b.u_max, b.v_max, r.h, r.w, r.l, r.x,
        r.y, r.z, r.rotation_y
    )
    .expect("writing to a String");
    if let Some(s) = score {
        write!(out, " {s:.6}").expect("writing to a String");
    }
    out.push('\n');
}

/// 15-field lines; any score is dropped.
pub fn write_label_file(records: &[KittiRecord]) -> String {
    let mut out = String::new();
    for r in records {
        format_record(&mut out, r, None);
    }
    out
}

/// 16-field lines. Every record needs a score.
pub fn write_detection_file(records: &[KittiRecord]) -> Result<String, KittiError> {
    let mut out = String::new();
    for (index, r) in records.iter().enumerate() {
        let score = r.score.ok_or(KittiError::MissingScore { index })?;
        format_record(&mut out, r, Some(score));
    }
    Ok(out)
}

/// Writes detections when every record is scored, labels otherwise.
pub fn write_records(records: &[KittiRecord]) -> String {
    if !records.is_empty() && records.iter().all(|r| r.score.is_some()) {
        write_detection_file(records).expect("all records are scored")
    } else {
        write_label_file(records)
    }
}

/// A parsed calibration file.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibRecord {
    pub p2: Intrinsics,
    /// Every other named entry, in file order.
    pub entries: Vec<(String, Vec<f64>)>,
    lines: Vec<String>,
}

impl CalibRecord {
    /// The original text, byte for byte.
    pub fn serialize(&self) -> String {
        self.lines.join("\n")
    }
}

pub fn parse_calib_file(text: &str) -> Result<CalibRecord, KittiError> {
    let mut p2 = None;
    let mut entries = Vec::new();
    for (i, raw) in text.split('\n').enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let (name, rest) = line
            .split_once(':')
            .ok_or_else(|| malformed(i + 1, "expected `NAME: values`"))?;
        let name = name.trim();
        if name.is_empty() || name.contains(char::is_whitespace) {
            return Err(malformed(i + 1, format!("bad entry name `{name}`")));
        }
        let values = rest
            .split_whitespace()
            .map(|v| number(i + 1, name, v))
            .collect::<Result<Vec<f64>, _>>()?;
        if name == "P2" {
            let m: [f64; 12] = values
                .as_slice()
                .try_into()
                .map_err(|_| malformed(i + 1, format!("P2 needs 12 values, found {}", values.len())))?;
            let rows = [
                [m[0], m[1], m[2], m[3]],
                [m[4], m[5], m[6], m[7]],
                [m[8], m[9], m[10], m[11]],
            ];
            p2 = Some(Intrinsics::new(rows).map_err(|e| malformed(i + 1, e.to_string()))?);
        } else {
            entries.push((name.to_string(), values));
        }
    }
    let p2 = p2.ok_or(KittiError::MissingP2)?;
    Ok(CalibRecord { p2, entries, lines: text.split('\n').map(str::to_string).collect() })
}

/// `%e`-style formatting as found in KITTI calibration files.
fn c_exp(v: f64) -> String {
    let s = format!("{v:.6e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    let sign = if exp < 0 { '-' } else { '+' };
    format!("{mantissa}e{sign}{:02}", exp.abs())
}

/// A calibration file holding only `P2`.
pub fn write_calib_file(p2: &Intrinsics) -> String {
    let values: Vec<String> = p2.matrix().iter().flatten().map(|&v| c_exp(v)).collect();
    format!("P2: {}\n", values.join(" "))
}

#[cfg(test)]
mod tests {
    use super::*;

    const CAR: &str = "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70 -1.59";

    #[test]
    fn parses_reference_line() {
        let r = &parse_label_file(CAR).unwrap()[0];
        assert_eq!(r.object_type, "Car");
        assert_eq!((r.h, r.w, r.l), (1.65, 1.67, 3.64));
        assert_eq!(r.location(), [-0.65, 1.71, 46.70]);
        assert_eq!(r.rotation_y, -1.59);
        assert_eq!(r.score, None);
    }

    #[test]
    fn empty_and_short() {
        assert!(parse_label_file("").unwrap().is_empty());
        assert!(parse_label_file("\n  \n").unwrap().is_empty());
        let short = "Car 0.00 0 -1.58 587.01 173.33 614.12 200.12 1.65 1.67 3.64 -0.65 1.71 46.70";
        assert!(matches!(parse_label_file(short), Err(KittiError::MalformedLine { line: 1, .. })));
        let text = format!("{CAR}\n\n{CAR} 0.5 extra\n");
        assert!(matches!(parse_label_file(&text), Err(KittiError::MalformedLine { line: 3, .. })));
    }

    #[test]
    fn rejects_non_numeric_and_non_finite() {
        for bad in ["1,5", "nan", "inf", "abc"] {
            let line = CAR.replacen("1.65", bad, 1);
            assert!(parse_label_file(&line).is_err(), "{bad}");
        }
        assert!(parse_label_file(&CAR.replacen(" 0 ", " 0.5 ", 1)).is_err());
    }

    #[test]
    fn detection_needs_score() {
        let mut r = parse_label_file(CAR).unwrap();
        assert_eq!(write_detection_file(&r), Err(KittiError::MissingScore { index: 0 }));
        assert_eq!(write_detection_file(&[]).unwrap(), "");
        r[0].score = Some(0.25);
        let text = write_detection_file(&r).unwrap();
        assert!(text.ends_with(" 0.250000\n"));
        assert_eq!(parse_label_file(&text).unwrap(), r);
    }

    #[test]
    fn exp_format() {
        assert_eq!(c_exp(721.5377), "7.215377e+02");
        assert_eq!(c_exp(0.002745884), "2.745884e-03");
        assert_eq!(c_exp(0.0), "0.000000e+00");
        assert_eq!(c_exp(-1.5), "-1.500000e+00");
    }

    #[test]
    fn calib_requires_p2() {
        assert_eq!(parse_calib_file("P0: 1 0 0 0 0 1 0 0 0 0 1 0\n"), Err(KittiError::MissingP2));
        assert!(matches!(parse_calib_file("P2: 1 2 3\n"), Err(KittiError::MalformedLine { line: 1, .. })));
        assert!(matches!(parse_calib_file("garbage\n"), Err(KittiError::MalformedLine { .. })));
    }
}
