//! CSV/JSON report writers.
//!
//! Every CSV starts with a versioned schema comment line followed by the
//! header row; both are golden-tested. Floats are written with 17
//! significant digits so outputs are byte-reproducible and round-trip
//! exactly through `f64`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::ar_bootstrap::BootstrapDraw;
use crate::error::{Error, Result};
use crate::experiment::consistency::ConsistencyReport;
use crate::experiment::distribution::DistributionReport;
use crate::experiment::mallows::MallowsReport;
use crate::experiment::mds::MdsReport;
use crate::function_space::{Grid, GridFunction};
use crate::kernel_regression::Prediction;
use crate::process_models::FunctionalSeries;

pub const SERIES_SCHEMA: &str = "# schema farboot.series.v1";
pub const PREDICTIONS_SCHEMA: &str = "# schema farboot.predictions.v1";
pub const DRAW_SCHEMA: &str = "# schema farboot.draw.v1";
pub const DISTRIBUTION_SUMMARY_SCHEMA: &str = "# schema farboot.distribution_summary.v1";
pub const DISTRIBUTION_SAMPLES_SCHEMA: &str = "# schema farboot.distribution_samples.v1";
pub const MALLOWS_SCHEMA: &str = "# schema farboot.mallows.v1";
pub const CONSISTENCY_SCHEMA: &str = "# schema farboot.consistency.v1";
pub const MDS_SCHEMA: &str = "# schema farboot.mds.v1";

pub const DISTRIBUTION_SUMMARY_HEADER: &str = "n,direction,h,b,r_n,q,fhat_ref,ks,ks_ref_min,ks_ref_max,mc_mean,mc_var,boot_mean,boot_var,mc_fallback,boot_fallback,valid";
pub const DISTRIBUTION_SAMPLES_HEADER: &str = "n,direction,world,rep,value";
pub const MALLOWS_HEADER: &str = "n,batch,seed_index,atoms,d2";
pub const CONSISTENCY_HEADER: &str = "n,batch,seed_index,uniform_error";
pub const MDS_HEADER: &str = "t,bound,empirical,ratio";

/// Render a float with 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let mut file = fs::File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("json serialization failed: {e}")))?;
    write_text(path, &(text + "\n"))
}

fn matrix_header(m: usize) -> String {
    let mut header = String::from("t");
    for i in 0..m {
        header.push_str(&format!(",y{i}"));
    }
    header
}

fn matrix_csv(schema: &str, items: &[GridFunction]) -> String {
    let m = items.first().map_or(0, GridFunction::len);
    let mut out = String::new();
    out.push_str(schema);
    out.push('\n');
    out.push_str(&matrix_header(m));
    out.push('\n');
    for (t, f) in items.iter().enumerate() {
        out.push_str(&t.to_string());
        for v in f.values() {
            out.push(',');
            out.push_str(&fmt_float(*v));
        }
        out.push('\n');
    }
    out
}

/// Write a series as a CSV matrix (rows = time, cols = grid points).
pub fn write_series_csv(path: &Path, series: &FunctionalSeries) -> Result<()> {
    write_text(path, &matrix_csv(SERIES_SCHEMA, series.items()))
}

/// Read a series matrix written by [`write_series_csv`] (or produced
/// externally in the same layout). The grid is implied equispaced.
pub fn read_series_csv(path: &Path) -> Result<FunctionalSeries> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    let schema = lines.next().unwrap_or_default();
    if !schema.starts_with("# schema farboot.series") {
        return Err(Error::Config(format!(
            "{}: missing series schema line, got {schema:?}",
            path.display()
        )));
    }
    let header = lines
        .next()
        .ok_or_else(|| Error::Config(format!("{}: missing header row", path.display())))?;
    let m = header.split(',').count() - 1;
    let grid = Grid::equispaced(m)?;
    let mut items = Vec::new();
    for (row, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let _t = fields.next();
        let values: Vec<f64> = fields
            .map(|f| {
                f.parse::<f64>().map_err(|e| {
                    Error::Config(format!("{} row {row}: bad float {f:?}: {e}", path.display()))
                })
            })
            .collect::<Result<_>>()?;
        items.push(GridFunction::new(grid.clone(), values)?);
    }
    FunctionalSeries::from_items(items, 0, "ingested", 0)
}

/// One prediction row for the dump CSV.
pub struct PredictionRow<'a> {
    pub target_id: String,
    pub prediction: &'a Prediction,
}

/// Write predictions: target id, fallback flag, weight sum, neighbor
/// count, then the m predicted values.
pub fn write_predictions_csv(path: &Path, rows: &[PredictionRow<'_>]) -> Result<()> {
    let m = rows.first().map_or(0, |r| r.prediction.value.len());
    let mut out = String::new();
    out.push_str(PREDICTIONS_SCHEMA);
    out.push('\n');
    out.push_str("target_id,fallback,weight_sum,neighbor_count");
    for i in 0..m {
        out.push_str(&format!(",y{i}"));
    }
    out.push('\n');
    for row in rows {
        let p = row.prediction;
        out.push_str(&format!(
            "{},{},{},{}",
            row.target_id,
            u8::from(p.fallback),
            fmt_float(p.weight_sum),
            p.neighbor_count
        ));
        for v in p.value.values() {
            out.push(',');
            out.push_str(&fmt_float(*v));
        }
        out.push('\n');
    }
    write_text(path, &out)
}

/// Sidecar metadata written next to each bootstrap draw.
#[derive(Debug, Serialize)]
pub struct DrawSidecar {
    pub schema: String,
    pub seed: u64,
    pub kappa: Vec<usize>,
    pub index_set: Vec<usize>,
    pub fallback_count: usize,
}

/// Write a bootstrap draw as a CSV matrix plus a JSON sidecar.
pub fn write_draw(dir: &Path, stem: &str, draw: &BootstrapDraw) -> Result<(PathBuf, PathBuf)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    write_text(&csv_path, &matrix_csv(DRAW_SCHEMA, draw.states()))?;
    let sidecar = DrawSidecar {
        schema: "farboot.draw_sidecar.v1".into(),
        seed: draw.seed(),
        kappa: draw.kappa().to_vec(),
        index_set: draw.pool().index_set().to_vec(),
        fallback_count: draw.fallback_count(),
    };
    let json_path = dir.join(format!("{stem}.json"));
    write_json(&json_path, &sidecar)?;
    Ok((csv_path, json_path))
}

/// Write the distribution report: summary CSV, optional samples CSV, and a
/// JSON summary.
pub fn write_distribution_report(
    dir: &Path,
    report: &DistributionReport,
    write_samples: bool,
) -> Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut out = String::new();
    out.push_str(DISTRIBUTION_SUMMARY_SCHEMA);
    out.push('\n');
    out.push_str(DISTRIBUTION_SUMMARY_HEADER);
    out.push('\n');
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.n,
            r.direction,
            fmt_float(r.h),
            fmt_float(r.b),
            fmt_float(r.r_n),
            fmt_float(r.q),
            fmt_float(r.fhat_ref),
            fmt_float(r.ks),
            fmt_float(r.ks_ref_min),
            fmt_float(r.ks_ref_max),
            fmt_float(r.mc_mean),
            fmt_float(r.mc_var),
            fmt_float(r.boot_mean),
            fmt_float(r.boot_var),
            r.mc_fallback,
            r.boot_fallback,
            u8::from(r.valid)
        ));
    }
    let summary = dir.join("distribution_summary.csv");
    write_text(&summary, &out)?;
    written.push(summary);

    if write_samples {
        let mut out = String::new();
        out.push_str(DISTRIBUTION_SAMPLES_SCHEMA);
        out.push('\n');
        out.push_str(DISTRIBUTION_SAMPLES_HEADER);
        out.push('\n');
        for s in &report.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.n,
                s.direction,
                s.world,
                s.rep,
                fmt_float(s.value)
            ));
        }
        let samples = dir.join("distribution_samples.csv");
        write_text(&samples, &out)?;
        written.push(samples);
    }

    let json = dir.join("distribution_report.json");
    write_json(&json, report)?;
    written.push(json);
    Ok(written)
}

pub fn write_mallows_report(dir: &Path, report: &MallowsReport) -> Result<Vec<PathBuf>> {
    let mut out = String::new();
    out.push_str(MALLOWS_SCHEMA);
    out.push('\n');
    out.push_str(MALLOWS_HEADER);
    out.push('\n');
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n,
            r.batch,
            r.seed_index,
            r.atoms,
            fmt_float(r.d2)
        ));
    }
    let csv = dir.join("mallows.csv");
    write_text(&csv, &out)?;
    let json = dir.join("mallows_report.json");
    write_json(&json, report)?;
    Ok(vec![csv, json])
}

pub fn write_consistency_report(dir: &Path, report: &ConsistencyReport) -> Result<Vec<PathBuf>> {
    let mut out = String::new();
    out.push_str(CONSISTENCY_SCHEMA);
    out.push('\n');
    out.push_str(CONSISTENCY_HEADER);
    out.push('\n');
    for r in &report.records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.n,
            r.batch,
            r.seed_index,
            fmt_float(r.uniform_error)
        ));
    }
    let csv = dir.join("consistency.csv");
    write_text(&csv, &out)?;
    let json = dir.join("consistency_report.json");
    write_json(&json, report)?;
    Ok(vec![csv, json])
}

pub fn write_mds_report(dir: &Path, report: &MdsReport) -> Result<Vec<PathBuf>> {
    let mut out = String::new();
    out.push_str(MDS_SCHEMA);
    out.push('\n');
    out.push_str(MDS_HEADER);
    out.push('\n');
    for p in &report.points {
        out.push_str(&format!(
            "{},{},{},{}\n",
            fmt_float(p.t),
            fmt_float(p.bound),
            fmt_float(p.empirical),
            fmt_float(p.ratio)
        ));
    }
    let csv = dir.join("mds_check.csv");
    write_text(&csv, &out)?;
    let json = dir.join("mds_report.json");
    write_json(&json, report)?;
    Ok(vec![csv, json])
}
