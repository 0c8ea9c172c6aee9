//! "Amount of motion" statistics for frame sequences.
//!
//! A video is a directory of `*.pgm` frames in lexicographic filename order.
//! Its statistic is the Horn–Schunck flow magnitude `√(u² + v²)` averaged over
//! every pixel of every consecutive frame pair. Flow is single scale, so large
//! displacements are underestimated; the value is meant for comparing
//! distributions, not as an absolute speed.

mod flow;
mod pgm;

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use flow::horn_schunck;
pub use pgm::{decode_pgm, encode_pgm, load_frame, save_frame};

#[derive(Debug, Error)]
pub enum MotionError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: unsupported image format {magic:?} (only binary P5 with maxval 255)")]
    UnsupportedFormat { path: PathBuf, magic: String },
    #[error("{path}: malformed PGM: {reason}")]
    Pgm { path: PathBuf, reason: String },
    #[error("{path}: pixel payload has {actual} bytes, expected {expected}")]
    Payload {
        path: PathBuf,
        expected: usize,
        actual: usize,
    },
    #[error("frame holds {len} pixels, {width}x{height} needs {}", width * height)]
    PixelCount {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("frame size mismatch: expected {expected:?}, found {found:?}")]
    FrameSize {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("frames must be at least 2x2, got {width}x{height}")]
    FrameTooSmall { width: usize, height: usize },
    #[error("need at least 2 frames, have {0}")]
    TooFewFrames(usize),
    #[error("invalid flow parameters: {0}")]
    Params(String),
    #[error("histogram: {0}")]
    Histogram(String),
}

/// Row-major grayscale frame with pixels in [0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct FrameGray {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl FrameGray {
    /// Values are clamped into [0, 1]; non-finite values become 0.
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self, MotionError> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(MotionError::PixelCount {
                width,
                height,
                len: pixels.len(),
            });
        }
        let pixels = pixels
            .into_iter()
            .map(|p| {
                if p.is_finite() {
                    p.clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect();
        Ok(FrameGray {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }
}

/// Per-pixel displacement in pixels per frame; `u` along columns (right is
/// positive), `v` along rows (down is positive).
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub width: usize,
    pub height: usize,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FlowField {
    pub fn magnitude_sum(&self) -> f64 {
        self.u.iter().zip(&self.v).map(|(u, v)| u.hypot(*v)).sum()
    }

    pub fn mean_magnitude(&self) -> f64 {
        self.magnitude_sum() / self.u.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowParams {
    /// Smoothness weight; enters the update as α².
    pub alpha: f64,
    pub iterations: usize,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            alpha: 1.0,
            iterations: 100,
        }
    }
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), MotionError> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(MotionError::Params(format!(
                "alpha {} must be positive",
                self.alpha
            )));
        }
        if self.iterations == 0 {
            return Err(MotionError::Params("iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Mean flow magnitude over all pixels and all consecutive pairs.
///
/// Pairs are processed in parallel, then summed in frame order so the result
/// does not depend on scheduling.
pub fn mean_flow_magnitude(frames: &[FrameGray], params: &FlowParams) -> Result<f64, MotionError> {
    if frames.len() < 2 {
        return Err(MotionError::TooFewFrames(frames.len()));
    }
    params.validate()?;
    let size = (frames[0].width(), frames[0].height());
    if let Some(f) = frames.iter().find(|f| (f.width(), f.height()) != size) {
        return Err(MotionError::FrameSize {
            expected: size,
            found: (f.width(), f.height()),
        });
    }
    let sums = frames
        .par_windows(2)
        .map(|pair| horn_schunck(&pair[0], &pair[1], params).map(|f| f.magnitude_sum()))
        .collect::<Result<Vec<_>, _>>()?;
    let pixels = (size.0 * size.1) as f64;
    Ok(sums.iter().sum::<f64>() / (pixels * sums.len() as f64))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistogramBin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
}

/// Half-open bins `[k·w, (k+1)·w)` from 0 through the bin holding the
/// maximum. Counts always sum to `values.len()`.
pub fn flow_histogram(values: &[f64], bin_width: f64) -> Result<Vec<HistogramBin>, MotionError> {
    if !(bin_width > 0.0 && bin_width.is_finite()) {
        return Err(MotionError::Histogram(format!(
            "bin width {bin_width} must be positive"
        )));
    }
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(MotionError::Histogram(format!(
            "value {v} is negative or not finite"
        )));
    }
    let index = |v: f64| (v / bin_width).floor() as usize;
    let Some(max) = values.iter().copied().reduce(f64::max) else {
        return Ok(Vec::new());
    };
    let mut bins: Vec<HistogramBin> = (0..=index(max))
        .map(|k| HistogramBin {
            low: k as f64 * bin_width,
            high: (k + 1) as f64 * bin_width,
            count: 0,
        })
        .collect();
    for &v in values {
        bins[index(v)].count += 1;
    }
    Ok(bins)
}

/// `*.pgm` files in `dir`, sorted by file name.
pub fn frame_paths(dir: &Path) -> Result<Vec<PathBuf>, MotionError> {
    let io_err = |source| MotionError::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_file()
            && path
                .extension()
                .is_some_and(|e| e.eq_ignore_ascii_case("pgm"))
        {
            paths.push(path);
        }
    }
    paths.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(paths)
}

pub fn load_video(dir: &Path) -> Result<Vec<FrameGray>, MotionError> {
    frame_paths(dir)?.iter().map(load_frame).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoMotion {
    pub video_id: String,
    pub mean_flow_magnitude: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MotionSummary {
    /// Sorted by video id.
    pub videos: Vec<VideoMotion>,
    /// Videos with fewer than two frames, with their frame counts.
    pub skipped: Vec<(String, usize)>,
}

/// Processes every subdirectory of `root` as one video.
pub fn analyze_root(root: &Path, params: &FlowParams) -> Result<MotionSummary, MotionError> {
    params.validate()?;
    let io_err = |source| MotionError::Io {
        path: root.to_path_buf(),
        source,
    };
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err)? {
        let path = entry.map_err(io_err)?.path();
        if path.is_dir() {
            let id = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            dirs.push((id, path));
        }
    }
    dirs.sort();

    let results = dirs
        .par_iter()
        .map(|(id, dir)| {
            let frames = load_video(dir)?;
            if frames.len() < 2 {
                return Ok(Err((id.clone(), frames.len())));
            }
            // Videos are already spread across workers.
            let stat = mean_flow_magnitude(&frames, params)?;
            Ok(Ok(VideoMotion {
                video_id: id.clone(),
                mean_flow_magnitude: stat,
            }))
        })
        .collect::<Result<Vec<_>, MotionError>>()?;

    let mut summary = MotionSummary {
        videos: Vec::new(),
        skipped: Vec::new(),
    };
    for r in results {
        match r {
            Ok(v) => summary.videos.push(v),
            Err(s) => summary.skipped.push(s),
        }
    }
    Ok(summary)
}

fn real(v: f64) -> String {
    format!("{v:?}")
}

pub fn format_video_stats(videos: &[VideoMotion]) -> String {
    let mut out = String::from("video_id,mean_flow_magnitude\n");
    for v in videos {
        let _ = writeln!(out, "{},{}", v.video_id, real(v.mean_flow_magnitude));
    }
    out
}

pub fn format_histogram(bins: &[HistogramBin]) -> String {
    let mut out = String::from("bin_low,bin_high,count\n");
    for b in bins {
        let _ = writeln!(out, "{},{},{}", real(b.low), real(b.high), b.count);
    }
    out
}
