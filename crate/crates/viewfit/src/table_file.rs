//! Text form of a viewpoint configuration table, plus per-frame viewpoint
//! label files.
//!
//! ```text
//! # seed=7
//! # n_samples=100000
//! # face_band=0.08
//! Down OneSide 0 : 0-4-2-0,1-5-3-1
//! ...
//! ```
//!
//! One line per class in index order. Configurations are vertex ids in
//! `u_min-u_max-v_min-v_max` order.

use thiserror::Error;
use viewfit_core::geometry::ConstraintConfig;
use viewfit_core::viewpoint::{ConfigTable, Provenance, ViewpointClass, N_CLASSES};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TableFileError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("missing header `{0}`")]
    MissingHeader(&'static str),
    #[error("no entry for viewpoint class {0}")]
    MissingClass(ViewpointClass),
    #[error("invalid table: {0}")]
    Invalid(String),
}

fn malformed(line: usize, reason: impl Into<String>) -> TableFileError {
    TableFileError::Malformed { line, reason: reason.into() }
}

pub fn format_table(table: &ConfigTable) -> String {
    let p = &table.provenance;
    let mut out = format!("# seed={}\n# n_samples={}\n# face_band={}\n", p.seed, p.n_samples, p.face_band);
    for (vp, list) in ViewpointClass::all().zip(table.entries()) {
        let configs: Vec<String> = list.iter().map(ToString::to_string).collect();
        out.push_str(&format!("{vp} : {}\n", configs.join(",")));
    }
    out
}

pub fn parse_table(text: &str) -> Result<ConfigTable, TableFileError> {
    let (mut seed, mut n_samples, mut face_band) = (None, None, None);
    let mut entries: Vec<Option<Vec<ConstraintConfig>>> = vec![None; N_CLASSES];
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let (key, value) = header
                .trim()
                .split_once('=')
                .ok_or_else(|| malformed(line_no, "header must be `# key=value`"))?;
            let bad = |_| malformed(line_no, format!("bad value for `{key}`"));
            match key.trim() {
                "seed" => seed = Some(value.trim().parse::<u64>().map_err(bad)?),
                "n_samples" => n_samples = Some(value.trim().parse::<usize>().map_err(bad)?),
                "face_band" => face_band = Some(value.trim().parse::<f64>().map_err(|_| malformed(line_no, "bad face_band"))?),
                other => return Err(malformed(line_no, format!("unknown header `{other}`"))),
            }
            continue;
        }
        let (class, list) = line
            .split_once(':')
            .ok_or_else(|| malformed(line_no, "expected `<class> : <configs>`"))?;
        let vp: ViewpointClass = class
            .trim()
            .parse()
            .map_err(|_| malformed(line_no, format!("unknown viewpoint class `{}`", class.trim())))?;
        let configs = list
            .split(',')
            .map(|c| c.trim().parse::<ConstraintConfig>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| malformed(line_no, e.to_string()))?;
        let slot = &mut entries[vp.index()];
        if slot.is_some() {
            return Err(malformed(line_no, format!("duplicate entry for {vp}")));
        }
        *slot = Some(configs);
    }
    let provenance = Provenance {
        seed: seed.ok_or(TableFileError::MissingHeader("seed"))?,
        n_samples: n_samples.ok_or(TableFileError::MissingHeader("n_samples"))?,
        face_band: face_band.ok_or(TableFileError::MissingHeader("face_band"))?,
    };
    let entries = entries
        .into_iter()
        .zip(ViewpointClass::all())
        .map(|(e, vp)| e.ok_or(TableFileError::MissingClass(vp)))
        .collect::<Result<Vec<_>, _>>()?;
    ConfigTable::new(entries, provenance).map_err(|e| TableFileError::Invalid(e.to_string()))
}

/// The table derived with the default generator (seed 7, 10^5 samples,
/// face band 0.08).
pub const FROZEN_TABLE: &str = include_str!("../data/viewpoint_table.txt");

pub fn frozen_table() -> ConfigTable {
    parse_table(FROZEN_TABLE).expect("bundled table parses")
}

/// Parses a viewpoint label file: one line per object line of the matching
/// label file, either a class such as `Down TwoSides 3` or `-` for none.
pub fn parse_viewpoint_file(text: &str) -> Result<Vec<Option<ViewpointClass>>, TableFileError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| match l.trim() {
            "-" => Ok(None),
            s => s.parse().map(Some).map_err(|_| malformed(i + 1, format!("unknown viewpoint class `{s}`"))),
        })
        .collect()
}

pub fn write_viewpoint_file(classes: &[Option<ViewpointClass>]) -> String {
    classes
        .iter()
        .map(|c| match c {
            Some(vp) => format!("{vp}\n"),
            None => "-\n".to_string(),
        })
        .collect()
}
