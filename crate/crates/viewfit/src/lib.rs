//! File formats and command-line harness around [`viewfit_core`]: KITTI
//! labels, detections, and calibration; viewpoint table files; run
//! configuration; and the `solve`, `eval`, `synth`, `derive-table`, and
//! `bench` subcommands.

pub mod harness;
pub mod kitti;
pub mod report;
pub mod run_config;
pub mod table_file;

