//! The subcommands behind the `viewfit` binary, as library functions.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;
use viewfit_core::angle::wrap_pi;
use viewfit_core::geometry::{all_configs, exhaustive_search, tight_box, Intrinsics, Pose};
use viewfit_core::metrics::{evaluate, EvalReport};
use viewfit_core::orientation::local_orientation;
use viewfit_core::record::KittiRecord;
use viewfit_core::synth::{generate_scene, SceneSpec, SynthError};
use viewfit_core::viewpoint::{
    candidates_for, classify_viewpoint, derive_table, reduced_search, ConfigTable, ViewpointClass, ViewpointError,
};

use crate::kitti::{parse_calib_file, parse_label_file, write_calib_file, write_label_file, write_records, KittiError};
use crate::report::{format_eval_report, KeyValues};
use crate::run_config::{ConfigError, RunConfig};
use crate::table_file::{format_table, frozen_table, parse_table, parse_viewpoint_file, write_viewpoint_file, TableFileError};

/// Location written for objects the solver could not place.
pub const UNSOLVED_LOCATION: [f64; 3] = [-1000.0, -1000.0, -1000.0];

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{}: {source}", path.display())]
    Kitti { path: PathBuf, source: KittiError },
    #[error("{}: {source}", path.display())]
    Table { path: PathBuf, source: TableFileError },
    #[error("{}: {reason}", path.display())]
    Input { path: PathBuf, reason: String },
    #[error("frame sets differ: {0}")]
    FrameMismatch(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Viewpoint(#[from] ViewpointError),
}

impl HarnessError {
    /// 1 for usage and configuration problems, 2 for unreadable or
    /// malformed input.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) | HarnessError::Synth(_) | HarnessError::Viewpoint(_) => 1,
            HarnessError::Io { .. }
            | HarnessError::Kitti { .. }
            | HarnessError::Table { .. }
            | HarnessError::Input { .. }
            | HarnessError::FrameMismatch(_) => 2,
        }
    }
}

fn read(path: &Path) -> Result<String, HarnessError> {
    fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

fn write(path: &Path, text: &str) -> Result<(), HarnessError> {
    fs::write(path, text).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

fn create_dir(path: &Path) -> Result<(), HarnessError> {
    fs::create_dir_all(path).map_err(|source| HarnessError::Io { path: path.to_path_buf(), source })
}

/// Sorted stems of the `*.txt` files in `dir`.
pub fn frame_stems(dir: &Path) -> Result<Vec<String>, HarnessError> {
    let io_err = |source| HarnessError::Io { path: dir.to_path_buf(), source };
    let mut stems = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.extension().is_some_and(|e| e == "txt") && path.is_file() {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                stems.push(stem.to_string());
            }
        }
    }
    stems.sort();
    Ok(stems)
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, HarnessError> {
    match path {
        Some(p) => Ok(RunConfig::parse(&read(p)?)?),
        None => Ok(RunConfig::default()),
    }
}

pub fn load_table(path: Option<&Path>) -> Result<ConfigTable, HarnessError> {
    match path {
        Some(p) => parse_table(&read(p)?).map_err(|source| HarnessError::Table { path: p.to_path_buf(), source }),
        None => Ok(frozen_table()),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Exhaustive,
    Viewpoint,
}

/// Per-object result of [`solve_frame`].
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectOutcome {
    Solved {
        t: [f64; 3],
        residual: f64,
        config: viewfit_core::geometry::ConstraintConfig,
        viewpoint: Option<ViewpointClass>,
        n_solves: usize,
    },
    Unsolved(String),
    /// DontCare lines pass through untouched.
    Skipped,
}

/// Solves every non-DontCare record of one frame.
///
/// In viewpoint mode the class comes from `viewpoints` when given,
/// otherwise from the record's own labelled pose. Records whose class
/// cannot be determined are searched exhaustively and say so in the
/// diagnostics.
pub fn solve_frame(
    intr: &Intrinsics,
    records: &[KittiRecord],
    viewpoints: Option<&[Option<ViewpointClass>]>,
    mode: Mode,
    table: &ConfigTable,
    face_band: f64,
) -> Vec<ObjectOutcome> {
    records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.is_dont_care() {
                return ObjectOutcome::Skipped;
            }
            if !r.dims().is_valid() {
                return ObjectOutcome::Unsolved("invalid dimensions".into());
            }
            if !r.bbox.is_valid() {
                return ObjectOutcome::Unsolved("empty bounding box".into());
            }
            let viewpoint = match mode {
                Mode::Exhaustive => None,
                Mode::Viewpoint => match viewpoints {
                    Some(v) => v[i],
                    None if r.z > 0.0 => Some(classify_viewpoint(&r.pose(), &r.dims(), face_band)),
                    None => None,
                },
            };
            let found = match viewpoint {
                Some(vp) => reduced_search(intr, &r.bbox, &r.dims(), r.rotation_y, table, vp)
                    .map(|s| (s, candidates_for(table, vp).len())),
                None => exhaustive_search(intr, &r.bbox, &r.dims(), r.rotation_y, all_configs()).map(|s| (s, 64)),
            };
            match found {
                Ok((s, n_solves)) => ObjectOutcome::Solved { t: s.t, residual: s.residual, config: s.config, viewpoint, n_solves },
                Err(e) => ObjectOutcome::Unsolved(e.to_string()),
            }
        })
        .collect()
}

/// Records with solved locations filled in, and one diagnostics line per
/// non-DontCare object.
pub fn apply_outcomes(stem: &str, records: &[KittiRecord], outcomes: &[ObjectOutcome], mode: Mode) -> (Vec<KittiRecord>, String, usize) {
    let mut out = records.to_vec();
    let mut diag = String::new();
    let mut failed = 0;
    for (i, (r, o)) in out.iter_mut().zip(outcomes).enumerate() {
        match o {
            ObjectOutcome::Solved { t, residual, config, viewpoint, n_solves } => {
                r.set_location(*t);
                let vp = viewpoint.map_or("-".to_string(), |v| v.to_string().replace(' ', "/"));
                let fallback = if mode == Mode::Viewpoint && viewpoint.is_none() { " fallback=exhaustive" } else { "" };
                diag.push_str(&format!(
                    "{stem} {i} config={config} residual={residual:.6e} solves={n_solves} viewpoint={vp}{fallback}\n"
                ));
            }
            ObjectOutcome::Unsolved(reason) => {
                r.set_location(UNSOLVED_LOCATION);
                failed += 1;
                diag.push_str(&format!("{stem} {i} unsolved: {reason}\n"));
            }
            ObjectOutcome::Skipped => {}
        }
    }
    (out, diag, failed)
}

pub struct SolveOptions<'a> {
    pub calib_dir: &'a Path,
    pub label_dir: &'a Path,
    pub viewpoint_dir: Option<&'a Path>,
    pub out_dir: &'a Path,
    pub mode: Mode,
    pub table: Option<&'a Path>,
    pub diag: Option<&'a Path>,
    pub config: RunConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveSummary {
    pub frames: usize,
    pub objects: usize,
    pub failed: usize,
    /// Diagnostics text, also written to `diag` when given.
    pub diagnostics: String,
}

struct FrameOutput {
    text: String,
    diag: String,
    failed: usize,
    objects: usize,
}

struct FrameInput {
    stem: String,
    intr: Intrinsics,
    records: Vec<KittiRecord>,
    viewpoints: Option<Vec<Option<ViewpointClass>>>,
}

/// Reads every input before writing anything, so a bad file leaves no
/// partial output behind.
pub fn cmd_solve(opts: &SolveOptions<'_>) -> Result<SolveSummary, HarnessError> {
    let table = match opts.mode {
        Mode::Viewpoint => load_table(opts.table)?,
        Mode::Exhaustive => frozen_table(),
    };
    let mut inputs = Vec::new();
    for stem in frame_stems(opts.label_dir)? {
        let label_path = opts.label_dir.join(format!("{stem}.txt"));
        let records = parse_label_file(&read(&label_path)?)
            .map_err(|source| HarnessError::Kitti { path: label_path.clone(), source })?;
        let calib_path = opts.calib_dir.join(format!("{stem}.txt"));
        let calib = parse_calib_file(&read(&calib_path)?)
            .map_err(|source| HarnessError::Kitti { path: calib_path.clone(), source })?;
        let viewpoints = match opts.viewpoint_dir {
            Some(dir) => {
                let path = dir.join(format!("{stem}.txt"));
                let v = parse_viewpoint_file(&read(&path)?)
                    .map_err(|source| HarnessError::Table { path: path.clone(), source })?;
                if v.len() != records.len() {
                    return Err(HarnessError::Input {
                        path,
                        reason: format!("{} viewpoint lines for {} objects", v.len(), records.len()),
                    });
                }
                Some(v)
            }
            None => None,
        };
        inputs.push(FrameInput { stem, intr: calib.p2, records, viewpoints });
    }

    let face_band = opts.config.face_band;
    let outputs: Vec<FrameOutput> = inputs
        .par_iter()
        .map(|f| {
            let outcomes = solve_frame(&f.intr, &f.records, f.viewpoints.as_deref(), opts.mode, &table, face_band);
            let (records, diag, failed) = apply_outcomes(&f.stem, &f.records, &outcomes, opts.mode);
            FrameOutput {
                text: write_records(&records),
                diag,
                failed,
                objects: records.iter().filter(|r| !r.is_dont_care()).count(),
            }
        })
        .collect();

    create_dir(opts.out_dir)?;
    let mut summary = SolveSummary { frames: outputs.len(), objects: 0, failed: 0, diagnostics: String::new() };
    for (f, o) in inputs.iter().zip(&outputs) {
        write(&opts.out_dir.join(format!("{}.txt", f.stem)), &o.text)?;
        summary.diagnostics.push_str(&o.diag);
        summary.failed += o.failed;
        summary.objects += o.objects;
    }
    if let Some(path) = opts.diag {
        write(path, &summary.diagnostics)?;
    }
    Ok(summary)
}

/// Evaluates every frame in `gt_dir` against the same-named file in
/// `det_dir`. A missing detection file counts as no detections; a
/// detection file without ground truth is an error.
pub fn cmd_eval(gt_dir: &Path, det_dir: &Path, config: &RunConfig) -> Result<(EvalReport, String), HarnessError> {
    let gt_stems = frame_stems(gt_dir)?;
    let det_stems = frame_stems(det_dir)?;
    let extra: Vec<&str> = det_stems
        .iter()
        .filter(|s| gt_stems.binary_search(s).is_err())
        .map(String::as_str)
        .collect();
    if !extra.is_empty() {
        return Err(HarnessError::FrameMismatch(format!("detections without ground truth: {}", extra.join(", "))));
    }
    let load = |dir: &Path, stem: &str| -> Result<Vec<KittiRecord>, HarnessError> {
        let path = dir.join(format!("{stem}.txt"));
        parse_label_file(&read(&path)?).map_err(|source| HarnessError::Kitti { path, source })
    };
    let mut gt = Vec::with_capacity(gt_stems.len());
    let mut det = Vec::with_capacity(gt_stems.len());
    for stem in &gt_stems {
        gt.push(load(gt_dir, stem)?);
        det.push(if det_stems.binary_search(stem).is_ok() { load(det_dir, stem)? } else { Vec::new() });
    }
    let report = evaluate(&gt, &det, &config.eval_config());
    let text = format_eval_report(&report);
    Ok((report, text))
}

/// Round to the precision label files store, so written labels are
/// self-consistent.
fn round_to(v: f64, decimals: i32) -> f64 {
    let s = 10f64.powi(decimals);
    (v * s).round() / s
}

/// Writes `label_2/`, `calib/`, and `viewpoint/` directories for `n_frames`
/// synthetic frames. Poses and sizes are rounded to label precision and the
/// boxes recomputed from the rounded values.
pub fn cmd_synth(out_dir: &Path, seed: u64, n_frames: usize, config: &RunConfig) -> Result<KeyValues, HarnessError> {
    let sampler = config.sampler();
    let per_frame = config.objects_per_frame;
    let spec = SceneSpec { seed, n_objects: n_frames * per_frame, sampler, face_band: config.face_band };
    let objects = generate_scene(&spec)?;
    let intr = sampler.intrinsics;

    let mut frames = Vec::with_capacity(n_frames);
    for chunk in objects.chunks(per_frame.max(1)) {
        let mut records = Vec::with_capacity(chunk.len());
        let mut classes = Vec::with_capacity(chunk.len());
        for o in chunk {
            let t = o.pose.t.map(|v| round_to(v, 2));
            let pose = Pose::new(round_to(o.pose.theta, 6), t);
            let dims = viewfit_core::geometry::Dimensions {
                l: round_to(o.dims.l, 2),
                h: round_to(o.dims.h, 2),
                w: round_to(o.dims.w, 2),
            };
            let bbox = tight_box(&intr, &pose, &dims).expect("rounding keeps objects in front of the camera");
            let alpha = local_orientation(&pose).map(|l| wrap_pi(l.radians())).expect("positive depth");
            records.push(KittiRecord {
                object_type: config.class.clone(),
                truncated: 0.0,
                occluded: 0,
                alpha,
                bbox,
                h: dims.h,
                w: dims.w,
                l: dims.l,
                x: t[0],
                y: t[1],
                z: t[2],
                rotation_y: pose.theta,
                score: None,
            });
            classes.push(Some(classify_viewpoint(&pose, &dims, config.face_band)));
        }
        frames.push((records, classes));
    }

    let dirs = ["label_2", "calib", "viewpoint"].map(|d| out_dir.join(d));
    for d in &dirs {
        create_dir(d)?;
    }
    let calib = write_calib_file(&intr);
    for (i, (records, classes)) in frames.iter().enumerate() {
        let name = format!("{i:06}.txt");
        write(&dirs[0].join(&name), &write_label_file(records))?;
        write(&dirs[1].join(&name), &calib)?;
        write(&dirs[2].join(&name), &write_viewpoint_file(classes))?;
    }
    let mut kv = KeyValues::default();
    kv.push("seed", seed);
    kv.push("frames", frames.len());
    kv.push("objects", objects.len());
    Ok(kv)
}

pub fn cmd_derive_table(seed: u64, n_samples: usize, config: &RunConfig) -> Result<String, HarnessError> {
    let table = derive_table(&config.sampler(), n_samples, seed, config.face_band)?;
    Ok(format_table(&table))
}

/// Times exhaustive against table-reduced search on `n_objects` synthetic
/// objects, single-threaded. Lines under `timing.` vary between runs; the
/// rest is deterministic. Zero repetitions produce an empty report.
pub fn cmd_bench(
    seed: u64,
    n_objects: usize,
    table: &ConfigTable,
    repetitions: usize,
    config: &RunConfig,
) -> Result<KeyValues, HarnessError> {
    let mut kv = KeyValues::default();
    if repetitions == 0 {
        return Ok(kv);
    }
    let sampler = config.sampler();
    let spec = SceneSpec { seed, n_objects, sampler, face_band: config.face_band };
    let objects = generate_scene(&spec)?;
    let intr = &sampler.intrinsics;

    let mut exhaustive = Vec::new();
    let mut reduced = Vec::new();
    let mut exhaustive_secs = 0.0;
    let mut reduced_secs = 0.0;
    for _ in 0..repetitions {
        let start = Instant::now();
        exhaustive = objects
            .iter()
            .map(|o| exhaustive_search(intr, &o.bbox, &o.dims, o.pose.theta, all_configs()).ok())
            .collect::<Vec<_>>();
        exhaustive_secs += start.elapsed().as_secs_f64();
        let start = Instant::now();
        reduced = objects
            .iter()
            .map(|o| reduced_search(intr, &o.bbox, &o.dims, o.pose.theta, table, o.viewpoint).ok())
            .collect::<Vec<_>>();
        reduced_secs += start.elapsed().as_secs_f64();
    }

    let n = objects.len().max(1) as f64;
    let reduced_solves: usize = objects.iter().map(|o| candidates_for(table, o.viewpoint).len()).sum();
    let agree = exhaustive
        .iter()
        .zip(&reduced)
        .filter(|(e, r)| match (e, r) {
            (Some(e), Some(r)) => (0..3).map(|k| (e.t[k] - r.t[k]).powi(2)).sum::<f64>().sqrt() < 1e-6,
            _ => false,
        })
        .count();
    let mean_reduced = reduced_solves as f64 / n;
    kv.push("seed", seed);
    kv.push("objects", objects.len());
    kv.push("repetitions", repetitions);
    kv.push("exhaustive.solves_per_object", format!("{:.6}", all_configs().len() as f64));
    kv.push("reduced.solves_per_object", format!("{mean_reduced:.6}"));
    kv.push("solve_ratio", format!("{:.6}", all_configs().len() as f64 / mean_reduced));
    kv.push("reduced.max_candidates", table.max_list_len());
    kv.push("agreement", format!("{:.6}", agree as f64 / n));
    kv.push("timing.exhaustive_seconds", format!("{exhaustive_secs:.6}"));
    kv.push("timing.reduced_seconds", format!("{reduced_secs:.6}"));
    kv.push("timing.speedup", format!("{:.3}", exhaustive_secs / reduced_secs.max(f64::MIN_POSITIVE)));
    Ok(kv)
}
