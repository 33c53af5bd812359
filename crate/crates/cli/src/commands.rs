use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use dct_recover::baseline::scan_align_dc;
use dct_recover::dct::{forward_dct, DctBasis};
use dct_recover::image::{load_image, make_layout, save_image, GrayImage};
use dct_recover::lp::{write_lp_format, SolverSettings};
use dct_recover::mask::{apply_mask, FillPolicy};
use dct_recover::metrics::{score, QualityScore, Stats};
use dct_recover::model::{boundary_variation, build_problem, select_pairs, Formulation};
use dct_recover::recovery::{midpoint_reference, recover, RecoveryOptions, ReportSummary};
use dct_recover::sidecar::Sidecar;
use dct_recover::{dct::inverse_dct, Error};
use log::{info, warn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{MaskSpec, RunConfig};

#[derive(Debug, Clone)]
pub struct Erased {
    pub damaged: PathBuf,
    pub sidecar: PathBuf,
    pub unknowns_per_block: usize,
}

/// Write `<stem>_m<U>.pgm` (missing coefficients filled per `fill`) and
/// `<stem>.coeffs` (known coefficients only) into `out_dir`.
pub fn cmd_erase(
    input: &Path,
    mask: &MaskSpec,
    block_size: usize,
    fill: FillPolicy,
    out_dir: &Path,
) -> anyhow::Result<Erased> {
    let img = load_image(input)?;
    let mask = mask.build(block_size)?;
    let basis = DctBasis::new(block_size)?;
    let layout = make_layout(&img, block_size)?;
    let grid = forward_dct(&img, &layout, &basis)?;
    let side = Sidecar::new(&grid, &mask, img.bit_depth())?;
    let damaged = {
        let filled = apply_mask(&side.known, &mask, fill, &basis, img.bounds())?;
        let field = inverse_dct(&filled, &basis)?;
        GrayImage::from_real_field(img.width(), img.height(), &field, img.bounds())?
    };

    fs::create_dir_all(out_dir).map_err(|e| Error::IoFailure { path: out_dir.into(), source: e })?;
    let stem = file_stem(input);
    let out = Erased {
        damaged: out_dir.join(format!("{stem}_m{}.pgm", mask.len())),
        sidecar: out_dir.join(format!("{stem}.coeffs")),
        unknowns_per_block: mask.len(),
    };
    save_image(&damaged, &out.damaged)?;
    side.save(&out.sidecar)?;
    info!("erased {} of {} coefficients per block from {}", mask.len(), block_size * block_size, input.display());
    Ok(out)
}

fn file_stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "image".into(), |s| s.to_string_lossy().into_owned())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Global linear program
    #[default]
    Lp,
    /// Greedy block scan (DC-only masks)
    Scan,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RecoverReport {
    pub method: Method,
    pub wall_time_secs: f64,
    /// Objective evaluated on the unrounded output.
    pub boundary_variation: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lp: Option<ReportSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub quality: Option<QualityScore>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reference_quality: Option<QualityScore>,
}

impl RecoverReport {
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "method: {:?}", self.method);
        let _ = writeln!(out, "total_wall_time_secs: {:.6}", self.wall_time_secs);
        let _ = writeln!(out, "boundary_variation: {:.6}", self.boundary_variation);
        if let Some(lp) = &self.lp {
            // the summary already carries the scores
            out.push_str(&lp.to_text());
            return out;
        }
        for (prefix, q) in [("", &self.quality), ("midpoint_", &self.reference_quality)] {
            if let Some(q) = q {
                let _ = writeln!(out, "{prefix}psnr: {:.4}", q.psnr);
                let _ = writeln!(out, "{prefix}ssim: {:.6}", q.ssim);
                let _ = writeln!(out, "{prefix}shifted_psnr: {:.4}", q.shifted_psnr);
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct RecoverRequest<'a> {
    pub sidecar: &'a Path,
    pub output: &'a Path,
    pub report: Option<&'a Path>,
    pub method: Method,
    pub formulation: Formulation,
    pub solver: SolverSettings,
    pub original: Option<&'a Path>,
}

/// Recover from a sidecar; writes the image and a JSON report (next to the
/// image as `<stem>.json` unless a path is given).
pub fn cmd_recover(req: &RecoverRequest<'_>) -> anyhow::Result<(GrayImage, RecoverReport)> {
    let side = Sidecar::load(req.sidecar)?;
    let layout = *side.layout();
    let basis = DctBasis::new(layout.block_size)?;
    let range = side.range();
    let start = Instant::now();
    let (image, field, lp) = match req.method {
        Method::Lp => {
            let options = RecoveryOptions {
                formulation: req.formulation,
                solver: req.solver.clone(),
            };
            let rep = recover(&side.known, &side.mask, &basis, range, &options)?;
            info!(
                "solved {} vars / {} rows in {} iterations, {:.3}s, ~{} KiB",
                rep.num_vars,
                rep.num_rows,
                rep.solver_stats.iterations,
                rep.solver_stats.wall_time_secs,
                rep.solver_stats.memory_bytes / 1024
            );
            let summary = rep.summary();
            (rep.recovered, rep.field, Some(summary))
        }
        Method::Scan => {
            let out = scan_align_dc(&side.known, &side.mask, &basis, range)?;
            (out.image, out.field, None)
        }
    };
    let wall_time_secs = start.elapsed().as_secs_f64();
    let pairs = select_pairs(&layout, side.mask.is_dc_only());
    let mut report = RecoverReport {
        method: req.method,
        wall_time_secs,
        boundary_variation: boundary_variation(&field, layout.width(), &pairs),
        lp,
        quality: None,
        reference_quality: None,
    };
    if let Some(path) = req.original {
        let original = load_image(path)?;
        report.quality = Some(score(&original, &image)?);
        let mid = midpoint_reference(&side.known, &side.mask, &basis, range)?;
        report.reference_quality = Some(score(&original, &mid)?);
        if let Some(lp) = report.lp.as_mut() {
            lp.quality = report.quality;
            lp.reference_quality = report.reference_quality;
        }
    }

    save_image(&image, req.output)?;
    let report_path = req.report.map_or_else(|| req.output.with_extension("json"), Path::to_path_buf);
    let json = serde_json::to_string_pretty(&report)?;
    fs::write(&report_path, json).map_err(|e| Error::IoFailure { path: report_path.clone(), source: e })?;
    Ok((image, report))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub unknowns: usize,
    pub mean_psnr: f64,
    pub mean_ssim: f64,
    pub mean_time: f64,
    pub mean_shifted_psnr: f64,
    pub images: usize,
    pub failures: usize,
}

#[derive(Clone, Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SweepRow>,
    /// `(image, U or None for a load failure, message)`
    pub failures: Vec<(PathBuf, Option<usize>, String)>,
    pub table: PathBuf,
}

impl SweepOutcome {
    pub fn failure_count(&self) -> usize {
        self.failures.len()
    }
}

pub const SWEEP_HEADER: &str = "U,mean_psnr,mean_ssim,mean_time,mean_shifted_psnr,images,failures";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.4},{:.6},{:.6},{:.4},{},{}",
            r.unknowns, r.mean_psnr, r.mean_ssim, r.mean_time, r.mean_shifted_psnr, r.images, r.failures
        );
    }
    out
}

struct SweepSample {
    score: QualityScore,
    secs: f64,
}

fn sweep_one(img: &GrayImage, u: usize, config: &RunConfig) -> anyhow::Result<SweepSample> {
    let basis = DctBasis::new(config.block_size)?;
    let layout = make_layout(img, config.block_size)?;
    let grid = forward_dct(img, &layout, &basis)?;
    let mask = MaskSpec::Top(u).build(config.block_size)?;
    let side = Sidecar::new(&grid, &mask, img.bit_depth())?;
    let options = RecoveryOptions {
        formulation: config.formulation,
        solver: config.solver.clone(),
    };
    let start = Instant::now();
    let rep = recover(&side.known, &side.mask, &basis, img.bounds(), &options)?;
    let secs = start.elapsed().as_secs_f64();
    info!(
        "U={u}: {:.3}s, {} iterations, ~{} KiB",
        secs,
        rep.solver_stats.iterations,
        rep.solver_stats.memory_bytes / 1024
    );
    Ok(SweepSample {
        score: score(img, &rep.recovered)?,
        secs,
    })
}

/// For each `U` in the configured range: erase the top `U` coefficients of
/// every image, recover, score. Writes `sweep.csv` into the output directory.
pub fn cmd_sweep(config: &RunConfig) -> anyhow::Result<SweepOutcome> {
    config.validate_sweep()?;
    if config.images.is_empty() {
        return Err(Error::EmptyInput.into());
    }
    let mut failures = Vec::new();
    let mut images = Vec::new();
    for path in &config.images {
        match load_image(path).map_err(anyhow::Error::from).and_then(|img| {
            make_layout(&img, config.block_size)?;
            Ok(img)
        }) {
            Ok(img) => images.push((path.clone(), img)),
            Err(e) => {
                warn!("skipping {}: {e:#}", path.display());
                failures.push((path.clone(), None, format!("{e:#}")));
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.workers).build()?;
    let mut rows = Vec::new();
    for u in config.sweep.values() {
        let results: Vec<anyhow::Result<SweepSample>> =
            pool.install(|| images.par_iter().map(|(_, img)| sweep_one(img, u, config)).collect());
        let mut samples = Vec::new();
        let mut failed = 0;
        for ((path, _), res) in images.iter().zip(results) {
            match res {
                Ok(s) => samples.push(s),
                Err(e) => {
                    warn!("{} at U={u}: {e:#}", path.display());
                    failures.push((path.clone(), Some(u), format!("{e:#}")));
                    failed += 1;
                }
            }
        }
        let mean = |f: fn(&SweepSample) -> f64| {
            Stats::of(&samples.iter().map(f).collect::<Vec<_>>()).map_or(f64::NAN, |s| s.mean)
        };
        rows.push(SweepRow {
            unknowns: u,
            mean_psnr: mean(|s| s.score.psnr),
            mean_ssim: mean(|s| s.score.ssim),
            mean_time: mean(|s| s.secs),
            mean_shifted_psnr: mean(|s| s.score.shifted_psnr),
            images: samples.len(),
            failures: failed,
        });
    }
    fs::create_dir_all(&config.output_dir)
        .map_err(|e| Error::IoFailure { path: config.output_dir.clone(), source: e })?;
    let table = config.output_dir.join("sweep.csv");
    fs::write(&table, sweep_csv(&rows)).map_err(|e| Error::IoFailure { path: table.clone(), source: e })?;
    Ok(SweepOutcome { rows, failures, table })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompareRow {
    pub candidate: String,
    pub score: QualityScore,
    /// first candidate minus this one: psnr, ssim, shifted psnr
    pub delta: (f64, f64, f64),
}

pub const COMPARE_HEADER: &str =
    "candidate,psnr,ssim,shifted_psnr,mae,delta_psnr,delta_ssim,delta_shifted_psnr";

/// Scores of each candidate against `original`, and the first candidate's
/// advantage over each one (positive means the first is better).
pub fn cmd_compare(original: &Path, candidates: &[PathBuf]) -> anyhow::Result<Vec<CompareRow>> {
    if candidates.is_empty() {
        return Err(Error::EmptyInput.into());
    }
    let reference = load_image(original)?;
    let mut scores = Vec::with_capacity(candidates.len());
    for path in candidates {
        let img = load_image(path)?;
        scores.push(score(&reference, &img).with_context(|| format!("scoring {}", path.display()))?);
    }
    let first = scores[0];
    let diff = |a: f64, b: f64| if a == b { 0.0 } else { a - b };
    Ok(candidates
        .iter()
        .zip(scores)
        .map(|(path, s)| CompareRow {
            candidate: path.display().to_string(),
            score: s,
            delta: (
                diff(first.psnr, s.psnr),
                diff(first.ssim, s.ssim),
                diff(first.shifted_psnr, s.shifted_psnr),
            ),
        })
        .collect())
}

pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from(COMPARE_HEADER);
    out.push('\n');
    for r in rows {
        let s = &r.score;
        let _ = writeln!(
            out,
            "{},{:.4},{:.6},{:.4},{:.4},{:.4},{:.6},{:.4}",
            r.candidate, s.psnr, s.ssim, s.shifted_psnr, s.mae, r.delta.0, r.delta.1, r.delta.2
        );
    }
    out
}

/// Centred crop to `size`, or to the largest block multiple when `None`.
pub fn cmd_crop(input: &Path, output: &Path, block_size: usize, size: Option<(usize, usize)>) -> anyhow::Result<GrayImage> {
    let img = load_image(input)?;
    let out = match size {
        Some((w, h)) => {
            if w > img.width() || h > img.height() {
                return Err(Error::DimensionMismatch(format!(
                    "crop {w}x{h} larger than {}x{}",
                    img.width(),
                    img.height()
                ))
                .into());
            }
            let cropped = img.crop((img.height() - h) / 2, (img.width() - w) / 2, w, h)?;
            make_layout(&cropped, block_size)?;
            cropped
        }
        None => img.crop_to_blocks(block_size)?,
    };
    save_image(&out, output)?;
    Ok(out)
}

/// Header summary of a sidecar; optionally every stored coefficient as
/// `block,k,l,value` CSV with round-trip exact values.
pub fn cmd_inspect(sidecar: &Path, coeffs: Option<&Path>) -> anyhow::Result<String> {
    let side = Sidecar::load(sidecar)?;
    let layout = side.layout();
    let mut out = String::new();
    let _ = writeln!(out, "width: {}", layout.width());
    let _ = writeln!(out, "height: {}", layout.height());
    let _ = writeln!(out, "block_size: {}", layout.block_size);
    let _ = writeln!(out, "bit_depth: {}", side.bit_depth);
    let _ = writeln!(out, "blocks: {}", layout.block_count());
    let _ = writeln!(out, "mask: {}", side.mask);
    let _ = writeln!(out, "unknowns_per_block: {}", side.mask.len());
    if let Some(path) = coeffs {
        let n = layout.block_size;
        let mut csv = String::from("block,k,l,value\n");
        for b in 0..layout.block_count() {
            for k in 0..n {
                for l in 0..n {
                    if !side.mask.contains(k, l) {
                        let _ = writeln!(csv, "{b},{k},{l},{:?}", side.known.get(b, k, l));
                    }
                }
            }
        }
        fs::write(path, csv).map_err(|e| Error::IoFailure { path: path.into(), source: e })?;
    }
    Ok(out)
}

/// Write the recovery problem of a sidecar in CPLEX LP format.
pub fn cmd_dump_lp(sidecar: &Path, output: &Path, formulation: Formulation) -> anyhow::Result<()> {
    let side = Sidecar::load(sidecar)?;
    let basis = DctBasis::new(side.layout().block_size)?;
    let model = build_problem(&side.known, &side.mask, &basis, side.range(), formulation)?;
    let file = fs::File::create(output).map_err(|e| Error::IoFailure { path: output.into(), source: e })?;
    let mut writer = std::io::BufWriter::new(file);
    write_lp_format(&model.problem, &mut writer).context("writing LP file")?;
    Ok(())
}

/// Process exit code for an error: 3 i/o, 4 unreadable or malformed input,
/// 5 invalid parameters, 6 solver failure, 1 anything else.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::IoFailure { .. }) => 3,
        Some(Error::UnsupportedFormat(_) | Error::CorruptFile(_) | Error::NotGrayscale(_)) => 4,
        Some(
            Error::IndivisibleDimensions { .. }
            | Error::InvalidBlockSize(_)
            | Error::InvalidCount { .. }
            | Error::InvalidMask(_)
            | Error::DimensionMismatch(_)
            | Error::TooSmall { .. }
            | Error::EmptyInput
            | Error::NotDcOnlyMask,
        ) => 5,
        Some(Error::RecoveryFailed { .. }) => 6,
        None => 1,
    }
}
