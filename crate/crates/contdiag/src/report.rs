//! Run configuration, machine-readable reports, and file IO conventions.
//!
//! CSV floats are printed with 17 significant digits so parsing them back
//! recovers the exact doubles; reports serialize with a fixed field order
//! and carry no timing data unless explicitly requested, so identical
//! config and build produce byte-identical outputs.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::mat2::Mat2;
use crate::pipeline::{
    CMetrics, ObstructionReport, PipelineError, StepMetrics, UnitaryTrack, ZHypothesis,
};
use crate::scalar::{HermitianField, MatrixField, TrackError};
use crate::spectral::eigenvalues;
use crate::walk::{Form, Segment};

pub const CSV_HEADER: &str =
    "t,ReU11,ImU11,ReU12,ImU12,ReU21,ImU21,ReU22,ImU22,d1,d2,offdiag_resid,unitarity_defect";

/// 17 significant digits: round-trip exact for f64.
pub fn format_float(x: f64) -> String {
    format!("{:.16e}", x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Distinct,
    C1,
    Check,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Distinct => write!(f, "distinct"),
            Mode::C1 => write!(f, "c1"),
            Mode::Check => write!(f, "check"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldSource {
    Exprs {
        f: String,
        g: String,
        h_re: String,
        h_im: String,
    },
    Csv {
        path: PathBuf,
    },
    Gallery {
        id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: FieldSource,
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub mode: Mode,
    pub options: crate::pipeline::PipelineOptions,
    pub seed: u64,
}

/// Exit codes of the CLI contract.
pub mod exit {
    pub const OK: i32 = 0;
    pub const INTERNAL: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const GAP_TOO_SMALL: i32 = 3;
    pub const OBSTRUCTION: i32 = 4;
    pub const DERIVATIVE_DISCONTINUOUS: i32 = 5;
    pub const NOT_FINITELY_MANY: i32 = 6;
}

pub fn exit_code_for(err: &PipelineError) -> i32 {
    match err {
        PipelineError::GapTooSmall { .. } => exit::GAP_TOO_SMALL,
        PipelineError::ObstructionDetected { .. } => exit::OBSTRUCTION,
        PipelineError::DerivativeDiscontinuous { .. } => exit::DERIVATIVE_DISCONTINUOUS,
        PipelineError::NotFinitelyMany { .. } => exit::NOT_FINITELY_MANY,
        PipelineError::Track(TrackError::Parse(_)) => exit::CONFIG,
        PipelineError::Track(_) => exit::CONFIG,
        _ => exit::INTERNAL,
    }
}

pub fn status_slug(code: i32) -> &'static str {
    match code {
        exit::OK => "ok",
        exit::CONFIG => "config_error",
        exit::GAP_TOO_SMALL => "gap_too_small",
        exit::OBSTRUCTION => "obstruction_detected",
        exit::DERIVATIVE_DISCONTINUOUS => "derivative_discontinuous",
        exit::NOT_FINITELY_MANY => "not_finitely_many",
        _ => "internal_error",
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentReport {
    pub start: f64,
    pub end: f64,
    pub form: &'static str,
    pub scale_re: f64,
    pub scale_im: f64,
    pub min_denominator: f64,
}

impl From<&Segment> for SegmentReport {
    fn from(s: &Segment) -> Self {
        SegmentReport {
            start: s.start,
            end: s.end,
            form: match s.form {
                Form::First => "first",
                Form::Second => "second",
            },
            scale_re: s.scale.re,
            scale_im: s.scale.im,
            min_denominator: s.min_denom,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentLogs {
    pub plus: Vec<SegmentReport>,
    pub minus: Vec<SegmentReport>,
}

/// Conventions that pin down an otherwise free choice, recorded so runs
/// are reproducible and comparable.
#[derive(Debug, Clone, Serialize)]
pub struct SignConvention {
    /// Sign of the first signed-norm segment.
    pub mu_initial_sign: i32,
    /// Column 1 follows the plus branch of the diagonalized field.
    pub branch_order: &'static str,
    /// How the handoff point alpha is selected before a crossing.
    pub handoff_rule: &'static str,
    /// How the finiteness of the coalescence set is certified.
    pub finiteness_heuristic: &'static str,
}

impl Default for SignConvention {
    fn default() -> Self {
        SignConvention {
            mu_initial_sign: -1,
            branch_order: "column 1 = plus branch, column 2 = minus branch",
            handoff_rule: "largest grid point before the crossing where the incoming \
                           denominator keeps half its crossing magnitude and the outgoing \
                           one is above tol_match",
            finiteness_heuristic: "sub-tolerance discriminant runs wider than 4 grid cells \
                                   are non-isolated; runs over half the interval are rejected",
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct OracleSummary {
    pub min_alignment: f64,
    pub min_alignment_at: f64,
    pub per_column_min: [f64; 2],
    pub max_jump: f64,
    pub max_jump_at: f64,
}

/// Randomized trace/determinant identity spot check over the field.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct IdentityCheck {
    pub samples: usize,
    pub seed: u64,
    pub max_trace_error: f64,
    pub max_det_error: f64,
}

pub fn identity_spot_check<F: MatrixField>(
    field: &F,
    seed: u64,
    samples: usize,
) -> Result<IdentityCheck, TrackError> {
    let iv = field.interval();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut max_trace = 0.0f64;
    let mut max_det = 0.0f64;
    for _ in 0..samples {
        let t = rng.gen_range(iv.a..=iv.b);
        let m = field.at(t)?;
        let e = eigenvalues(&m);
        let trace_err = (e.plus + e.minus - m.trace()).abs() / (1.0 + m.trace().abs());
        let det_err = (e.plus * e.minus - m.det()).abs()
            / ((1.0 + m.det().abs()) * (1.0 + m.frobenius_norm()));
        max_trace = max_trace.max(trace_err);
        max_det = max_det.max(det_err);
    }
    Ok(IdentityCheck {
        samples,
        seed,
        max_trace_error: max_trace,
        max_det_error: max_det,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: String,
    pub exit_code: i32,
    pub config: RunConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<StepMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub coalescence: Option<Vec<ZHypothesis>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endpoint_coalescence: Option<(bool, bool)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_metrics: Option<CMetrics>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub segments: Option<SegmentLogs>,
    pub sign_convention: SignConvention,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub obstruction: Option<ObstructionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub identity_check: Option<IdentityCheck>,
    /// Present only when timings were requested; excluded by default so
    /// reports are byte-identical across runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing_ms: Option<f64>,
}

impl RunReport {
    pub fn new(config: RunConfig, exit_code: i32) -> RunReport {
        RunReport {
            status: status_slug(exit_code).to_string(),
            exit_code,
            config,
            message: None,
            residuals: None,
            coalescence: None,
            endpoint_coalescence: None,
            c_metrics: None,
            segments: None,
            sign_convention: SignConvention::default(),
            obstruction: None,
            oracle: None,
            identity_check: None,
            timing_ms: None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Render the solution CSV for a unitary track.
pub fn write_solution_csv<W: Write>(track: &UnitaryTrack, out: &mut W) -> std::io::Result<()> {
    writeln!(out, "{}", CSV_HEADER)?;
    for (i, t) in track.grid.points().enumerate() {
        let u: &Mat2 = &track.mats[i];
        let (d1, d2) = track.diag[i];
        let cols = [
            t,
            u.0[0][0].re,
            u.0[0][0].im,
            u.0[0][1].re,
            u.0[0][1].im,
            u.0[1][0].re,
            u.0[1][0].im,
            u.0[1][1].re,
            u.0[1][1].im,
            d1,
            d2,
            track.offdiag_resid[i],
            track.unitarity_defect[i],
        ];
        let row: Vec<String> = cols.iter().map(|&x| format_float(x)).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Atomic file write: temp file in the same directory, then rename.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        ".{}.tmp",
        path.file_name()
            .map(|n| n.to_string_lossy().to_string())
            .unwrap_or_else(|| "out".to_string())
    ));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)
}

/// Parse a sample CSV with header `t,f,g,h_re,h_im` into a field.
pub fn read_sample_csv(path: &Path) -> Result<HermitianField, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {}", path.display(), e))?;
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| "empty sample file".to_string())?;
    let normalized: String = header.split(',').map(|c| c.trim()).collect::<Vec<_>>().join(",");
    if normalized != "t,f,g,h_re,h_im" {
        return Err(format!(
            "expected header `t,f,g,h_re,h_im`, found `{}`",
            header.trim()
        ));
    }
    for (lineno, line) in lines {
        let cells: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
        if cells.len() != 5 {
            return Err(format!("line {}: expected 5 columns", lineno + 1));
        }
        let mut vals = [0.0f64; 5];
        for (k, cell) in cells.iter().enumerate() {
            vals[k] = cell
                .parse()
                .map_err(|e| format!("line {}: bad number `{}`: {}", lineno + 1, cell, e))?;
        }
        rows.push((vals[0], vals[1], vals[2], vals[3], vals[4]));
    }
    HermitianField::from_samples(&rows).map_err(|e| e.to_string())
}
