//! Image inpainting: each color channel is completed separately from the
//! pixels that survive a corruption pattern.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::io::write_json;
use crate::harness::metrics::psnr;
use crate::harness::presets::{solve_completion, SolvePreset};
use crate::penalty::PenaltyParams;
use crate::problems::{MatrixCompletionProblem, ObservationMask};
use crate::Matrix;

/// Which pixels are lost. A lost pixel is lost in all three channels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corruption {
    /// A uniformly random set of `round(fraction * pixels)` pixels.
    RandomPixels(f64),
    /// Nonzero pixels of a mask image of the same size.
    MaskImage(PathBuf),
}

impl FromStr for Corruption {
    type Err = Error;

    /// `random:<fraction>` or `mask:<path>`.
    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            Some(("random", f)) => {
                let f: f64 = f
                    .parse()
                    .map_err(|_| Error::Parse(format!("bad corruption fraction {f:?}")))?;
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::Parameter(format!("corruption fraction {f} outside [0, 1]")));
                }
                Ok(Corruption::RandomPixels(f))
            }
            Some(("mask", p)) if !p.is_empty() => Ok(Corruption::MaskImage(PathBuf::from(p))),
            _ => Err(Error::Parse(format!(
                "corruption must be random:<fraction> or mask:<path>, got {s:?}"
            ))),
        }
    }
}

impl fmt::Display for Corruption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Corruption::RandomPixels(x) => write!(f, "random:{x}"),
            Corruption::MaskImage(p) => write!(f, "mask:{}", p.display()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImageTask {
    pub image: RgbImage,
    pub corruption: Corruption,
    pub seed: u64,
}

/// Surviving pixels plus the rendered corrupted image.
#[derive(Debug, Clone)]
pub struct CorruptedImage {
    /// Observed pixel positions on the `height x width` grid.
    pub observed: ObservationMask,
    /// Lost pixels are random colors for random corruption, white for masks.
    pub rendered: RgbImage,
}

pub fn load_rgb(path: &Path) -> Result<RgbImage> {
    Ok(image::open(path)?.to_rgb8())
}

/// Pixels with any nonzero channel are treated as missing.
pub fn load_missing_mask(path: &Path, width: u32, height: u32) -> Result<ObservationMask> {
    let mask = image::open(path)?.to_rgb8();
    if mask.dimensions() != (width, height) {
        return Err(Error::Contract(format!(
            "mask is {}x{}, image is {width}x{height}",
            mask.width(),
            mask.height()
        )));
    }
    let keep: Vec<(usize, usize)> = mask
        .enumerate_pixels()
        .filter(|(_, _, p)| p.0 == [0, 0, 0])
        .map(|(x, y, _)| (y as usize, x as usize))
        .collect();
    ObservationMask::new(height as usize, width as usize, &keep)
}

pub fn corrupt(task: &ImageTask) -> Result<CorruptedImage> {
    let (w, h) = task.image.dimensions();
    let (rows, cols) = (h as usize, w as usize);
    let mut rng = ChaCha8Rng::seed_from_u64(task.seed);
    let (observed, random_fill) = match &task.corruption {
        Corruption::RandomPixels(f) => {
            let lost = (f * (rows * cols) as f64).round() as usize;
            let mut missing = rand::seq::index::sample(&mut rng, rows * cols, lost).into_vec();
            missing.sort_unstable();
            let lost_mask = ObservationMask::from_sorted_linear(rows, cols, missing);
            (lost_mask.complement(), true)
        }
        Corruption::MaskImage(path) => (load_missing_mask(path, w, h)?, false),
    };
    let mut rendered = task.image.clone();
    for (i, j) in observed.complement().indices() {
        let fill = if random_fill {
            Rgb([rng.random(), rng.random(), rng.random()])
        } else {
            Rgb([255, 255, 255])
        };
        rendered.put_pixel(j as u32, i as u32, fill);
    }
    Ok(CorruptedImage { observed, rendered })
}

fn channel_matrix(img: &RgbImage, c: usize) -> Matrix {
    let (w, h) = img.dimensions();
    Matrix::from_fn(h as usize, w as usize, |i, j| img.get_pixel(j as u32, i as u32).0[c] as f64)
}

fn samples(img: &RgbImage) -> Vec<f64> {
    img.as_raw().iter().map(|&v| v as f64).collect()
}

/// Serializes infinite dB values as the string `"inf"`.
pub mod decibels {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() && *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Db {
            Num(f64),
            Str(String),
        }
        match Db::deserialize(d)? {
            Db::Num(v) => Ok(v),
            Db::Str(s) if s == "inf" => Ok(f64::INFINITY),
            Db::Str(s) => Err(serde::de::Error::custom(format!("bad dB value {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageResult {
    pub penalty: String,
    pub params: PenaltyParams,
    #[serde(with = "decibels")]
    pub psnr: f64,
    pub relative_error: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageReport {
    pub width: u32,
    pub height: u32,
    pub corruption: String,
    pub seed: u64,
    pub observed_pixels: usize,
    #[serde(with = "decibels")]
    pub corrupted_psnr: f64,
    pub preset: SolvePreset,
    pub results: Vec<ImageResult>,
}

#[derive(Debug, Clone)]
pub struct ImageRecovery {
    pub report: ImageReport,
    pub corrupted: RgbImage,
    /// One recovered image per penalty, in input order.
    pub recovered: Vec<RgbImage>,
    /// Wall time in seconds per penalty, in input order.
    pub wall_times: Vec<f64>,
}

/// Completes each channel with `preset`, keeps observed pixels as they
/// were, clamps the filled-in values to `[0, 255]` and rounds.
pub fn recover_channels(
    image: &RgbImage,
    observed: &ObservationMask,
    penalty: &PenaltyParams,
    preset: &SolvePreset,
) -> Result<(RgbImage, usize)> {
    let (w, h) = image.dimensions();
    if observed.shape() != (h as usize, w as usize) {
        return Err(Error::Contract("mask does not match the image".into()));
    }
    let channels: Vec<(Matrix, usize)> = (0..3)
        .into_par_iter()
        .map(|c| {
            let truth = channel_matrix(image, c);
            let problem = MatrixCompletionProblem::new(&truth, observed.clone())?;
            let (x, traces) = solve_completion(&problem, penalty, preset)?;
            let mut out = x.map(|v| v.clamp(0.0, 255.0));
            for (i, j) in observed.indices() {
                out[(i, j)] = truth[(i, j)];
            }
            Ok((out, traces.iter().map(|t| t.iterations).sum()))
        })
        .collect::<Result<_>>()?;
    let mut out = RgbImage::new(w, h);
    for (x, y, px) in out.enumerate_pixels_mut() {
        for (c, (m, _)) in channels.iter().enumerate() {
            px.0[c] = m[(y as usize, x as usize)].round() as u8;
        }
    }
    Ok((out, channels.iter().map(|(_, it)| it).sum()))
}

pub fn run_image_recovery(
    task: &ImageTask,
    penalties: &[PenaltyParams],
    preset: &SolvePreset,
) -> Result<ImageRecovery> {
    let corrupted = corrupt(task)?;
    let reference = samples(&task.image);
    let reference_norm = reference.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut results = Vec::new();
    let mut recovered = Vec::new();
    let mut wall_times = Vec::new();
    for penalty in penalties {
        let start = Instant::now();
        let (img, iterations) = recover_channels(&task.image, &corrupted.observed, penalty, preset)?;
        wall_times.push(start.elapsed().as_secs_f64());
        let got = samples(&img);
        let diff = got.iter().zip(&reference).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        results.push(ImageResult {
            penalty: penalty.kind.name().to_string(),
            params: *penalty,
            psnr: psnr(&got, &reference)?,
            relative_error: if reference_norm > 0.0 { diff / reference_norm } else { diff },
            iterations,
        });
        recovered.push(img);
    }
    let (width, height) = task.image.dimensions();
    Ok(ImageRecovery {
        report: ImageReport {
            width,
            height,
            corruption: task.corruption.to_string(),
            seed: task.seed,
            observed_pixels: corrupted.observed.len(),
            corrupted_psnr: psnr(&samples(&corrupted.rendered), &reference)?,
            preset: *preset,
            results,
        },
        corrupted: corrupted.rendered,
        recovered,
        wall_times,
    })
}

/// Writes `corrupted.png`, `recovered_<penalty>.png`, `report.json` and
/// `timing.json` into `dir`.
pub fn write_image_outputs(dir: &Path, out: &ImageRecovery) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    out.corrupted.save(dir.join("corrupted.png"))?;
    for (res, img) in out.report.results.iter().zip(&out.recovered) {
        img.save(dir.join(format!("recovered_{}.png", res.penalty)))?;
    }
    write_json(&dir.join("report.json"), &out.report)?;
    let timing: Vec<_> = out
        .report
        .results
        .iter()
        .zip(&out.wall_times)
        .map(|(r, t)| serde_json::json!({ "penalty": r.penalty, "wall_time": t }))
        .collect();
    write_json(&dir.join("timing.json"), &timing)
}

/// The committed 128x128 test image, identical to
/// `synthetic_test_image(128, 128)`.
pub fn bundled_test_image() -> RgbImage {
    image::load_from_memory(include_bytes!("../../assets/test_image.png"))
        .expect("bundled image decodes")
        .to_rgb8()
}

/// A smooth, approximately low-rank color test image.
pub fn synthetic_test_image(width: u32, height: u32) -> RgbImage {
    use std::f64::consts::PI;
    RgbImage::from_fn(width, height, |x, y| {
        let u = x as f64 / width as f64;
        let v = y as f64 / height as f64;
        let wave = (2.0 * PI * 1.5 * u).sin() * (2.0 * PI * v).cos();
        let ramp = 0.5 * (u + v);
        let band = if (0.25..0.55).contains(&v) && (0.1..0.45).contains(&u) { 1.0 } else { 0.0 };
        let block = if (0.6..0.85).contains(&v) && (0.55..0.9).contains(&u) { 1.0 } else { 0.0 };
        let r = 120.0 + 70.0 * wave + 50.0 * ramp + 40.0 * band;
        let g = 90.0 + 50.0 * (2.0 * PI * u).cos() * (PI * v).sin() + 90.0 * ramp - 30.0 * block;
        let b = 160.0 - 60.0 * wave + 30.0 * (3.0 * PI * v).sin() + 50.0 * block - 30.0 * band;
        let q = |t: f64| t.clamp(0.0, 255.0).round() as u8;
        Rgb([q(r), q(g), q(b)])
    })
}

/// A binary mask of blocky text-like strokes (white = missing).
pub fn synthetic_text_mask(width: u32, height: u32, seed: u64) -> RgbImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut mask = RgbImage::new(width, height);
    let line_height = 14;
    let mut top = 6;
    while top + line_height <= height {
        let mut left = 4;
        while left + 8 <= width {
            // one glyph: a 6x10 box with a random subset of its strokes
            let strokes = [
                (0, 0, 6, 2),
                (0, 4, 6, 2),
                (0, 8, 6, 2),
                (0, 0, 2, 10),
                (4, 0, 2, 10),
                (2, 2, 2, 6),
            ];
            for &(sx, sy, sw, sh) in &strokes {
                if rng.random_bool(0.45) {
                    for dy in 0..sh {
                        for dx in 0..sw {
                            mask.put_pixel(left + sx + dx, top + sy + dy, Rgb([255, 255, 255]));
                        }
                    }
                }
            }
            left += if rng.random_bool(0.15) { 14 } else { 8 };
        }
        top += line_height + 6;
    }
    mask
}
