//! Command-line front end: define a 2x2 hermitian field (expressions,
//! sample CSV, or a gallery entry), run a diagonalization pipeline or the
//! obstruction diagnostics, and emit deterministic CSV/JSON outputs.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use contdiag::gallery::{self, GalleryEntry};
use contdiag::oracle::{alignment_stats, pointwise_oracle};
use contdiag::pipeline::{
    check_obstruction, diagonalize_c1, diagonalize_distinct, PipelineError, PipelineOptions,
    UnitaryTrack,
};
use contdiag::report::{
    self, exit, exit_code_for, identity_spot_check, FieldSource, Mode, OracleSummary, RunConfig,
    RunReport, SegmentLogs, SegmentReport,
};
use contdiag::scalar::{Grid, HermitianField, Interval};

#[derive(Parser)]
#[command(
    name = "contdiag",
    version,
    about = "Continuous diagonalization of 2x2 hermitian matrix fields on an interval"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Construct a continuous unitary U(t) and write CSV + JSON outputs.
    Diagonalize(RunArgs),
    /// Run the obstruction diagnostics (greedy oracle + hypothesis checks).
    Check(RunArgs),
    /// Compare the constructed U(t) against the pointwise aligned oracle.
    OracleCompare(RunArgs),
    /// List or run the built-in example fields.
    Gallery(GalleryArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Distinct,
    C1,
    Check,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Distinct => Mode::Distinct,
            ModeArg::C1 => Mode::C1,
            ModeArg::Check => Mode::Check,
        }
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Expression for f(t) (real diagonal entry).
    #[arg(long, env = "CONTDIAG_F")]
    f: Option<String>,
    /// Expression for g(t) (real diagonal entry).
    #[arg(long, env = "CONTDIAG_G")]
    g: Option<String>,
    /// Expression for Re h(t); defaults to 0 when f and g are given.
    #[arg(long = "h-re", env = "CONTDIAG_H_RE")]
    h_re: Option<String>,
    /// Expression for Im h(t); defaults to 0 when f and g are given.
    #[arg(long = "h-im", env = "CONTDIAG_H_IM")]
    h_im: Option<String>,
    /// Sample CSV with header t,f,g,h_re,h_im on a uniform grid.
    #[arg(long, env = "CONTDIAG_INPUT")]
    input: Option<PathBuf>,
    /// Use a built-in gallery field by id.
    #[arg(long, env = "CONTDIAG_GALLERY")]
    gallery: Option<String>,
    /// Left endpoint (required for expression fields).
    #[arg(long, env = "CONTDIAG_A", allow_hyphen_values = true)]
    a: Option<f64>,
    /// Right endpoint (required for expression fields).
    #[arg(long, env = "CONTDIAG_B", allow_hyphen_values = true)]
    b: Option<f64>,
    /// Grid point count.
    #[arg(long, env = "CONTDIAG_N", default_value_t = 1001)]
    n: usize,
    #[arg(long, value_enum, env = "CONTDIAG_MODE")]
    mode: Option<ModeArg>,
    #[arg(long, env = "CONTDIAG_TOL_DISC")]
    tol_disc: Option<f64>,
    #[arg(long, env = "CONTDIAG_TOL_MATCH")]
    tol_match: Option<f64>,
    #[arg(long, env = "CONTDIAG_TOL_RESID")]
    tol_resid: Option<f64>,
    #[arg(long, env = "CONTDIAG_TOL_OFFDIAG")]
    tol_offdiag: Option<f64>,
    #[arg(long, env = "CONTDIAG_EPS_SWITCH")]
    eps_switch: Option<f64>,
    #[arg(long, env = "CONTDIAG_GAP_MIN")]
    gap_min: Option<f64>,
    #[arg(long, env = "CONTDIAG_MAX_SWITCHES")]
    max_switches: Option<usize>,
    #[arg(long, env = "CONTDIAG_JUMP_FACTOR")]
    jump_factor: Option<f64>,
    #[arg(long, env = "CONTDIAG_TOL_DERIV_GAP")]
    tol_deriv_gap: Option<f64>,
    #[arg(long, env = "CONTDIAG_TOL_DERIV_JUMP")]
    tol_deriv_jump: Option<f64>,
    /// Derive column 2 as the exact orthogonal complement of column 1.
    #[arg(long, env = "CONTDIAG_ORTHOGONAL_COMPLEMENT")]
    orthogonal_complement: bool,
    /// Output directory for solution.csv and report.json.
    #[arg(long, env = "CONTDIAG_OUT")]
    out: Option<PathBuf>,
    /// Print the JSON report to stdout instead of the summary.
    #[arg(long)]
    json: bool,
    /// Seed for randomized spot checks in reports.
    #[arg(long, env = "CONTDIAG_SEED", default_value_t = 0)]
    seed: u64,
    /// Include wall-clock timing in the report (breaks byte-determinism).
    #[arg(long)]
    timings: bool,
}

#[derive(Args)]
struct GalleryArgs {
    #[command(subcommand)]
    action: GalleryAction,
}

#[derive(Subcommand)]
enum GalleryAction {
    /// Print every gallery entry with its expected outcome.
    List,
    /// Run one entry and verify the expected outcome.
    Run {
        id: String,
        #[arg(long, default_value_t = 2001)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every entry and verify all expected outcomes.
    RunAll {
        #[arg(long, default_value_t = 2001)]
        n: usize,
    },
}

struct Resolved {
    field: HermitianField,
    config: RunConfig,
}

fn resolve(args: &RunArgs, default_mode: Option<Mode>) -> Result<Resolved, String> {
    let sources = [
        args.gallery.is_some(),
        args.input.is_some(),
        args.f.is_some() || args.g.is_some(),
    ]
    .iter()
    .filter(|&&x| x)
    .count();
    if sources == 0 {
        return Err("no field given: use --gallery, --input, or --f/--g/--h-re/--h-im".into());
    }
    if sources > 1 {
        return Err("give exactly one of --gallery, --input, or expression flags".into());
    }

    let mut options = PipelineOptions::default();
    if let Some(v) = args.tol_disc {
        options.tol_disc = v;
    }
    if let Some(v) = args.tol_match {
        options.tol_match = v;
    }
    if let Some(v) = args.tol_resid {
        options.tol_resid = v;
    }
    if let Some(v) = args.tol_offdiag {
        options.tol_offdiag = v;
    }
    if let Some(v) = args.eps_switch {
        options.eps_switch = v;
    }
    if let Some(v) = args.gap_min {
        options.gap_min = v;
    }
    if let Some(v) = args.max_switches {
        options.max_switches = v;
    }
    if let Some(v) = args.jump_factor {
        options.jump_factor = v;
    }
    if let Some(v) = args.tol_deriv_gap {
        options.tol_deriv_gap = v;
    }
    if let Some(v) = args.tol_deriv_jump {
        options.tol_deriv_jump = v;
    }
    options.orthogonal_complement = args.orthogonal_complement;

    for (name, value) in [
        ("tol-disc", options.tol_disc),
        ("tol-match", options.tol_match),
        ("tol-resid", options.tol_resid),
        ("tol-offdiag", options.tol_offdiag),
        ("eps-switch", options.eps_switch),
        ("gap-min", options.gap_min),
    ] {
        if !(value > 0.0) {
            return Err(format!("--{} must be positive, got {}", name, value));
        }
    }
    if args.n < 2 {
        return Err(format!("--n must be at least 2, got {}", args.n));
    }

    let (field, source, a, b, entry_mode) = if let Some(id) = &args.gallery {
        let entry: &GalleryEntry = gallery::find(id)
            .ok_or_else(|| format!("unknown gallery id `{}` (see `gallery list`)", id))?;
        let a = args.a.unwrap_or(entry.a);
        let b = args.b.unwrap_or(entry.b);
        let iv = Interval::new(a, b).map_err(|e| e.to_string())?;
        let field = HermitianField::from_exprs(entry.f, entry.g, entry.h_re, entry.h_im, iv)
            .map_err(|e| e.to_string())?;
        (
            field,
            FieldSource::Gallery { id: id.clone() },
            a,
            b,
            Some(entry.mode),
        )
    } else if let Some(path) = &args.input {
        if args.a.is_some() || args.b.is_some() {
            return Err("--a/--b come from the sample file; do not pass them with --input".into());
        }
        let field = report::read_sample_csv(path)?;
        let iv = contdiag::MatrixField::interval(&field);
        (
            field,
            FieldSource::Csv { path: path.clone() },
            iv.a,
            iv.b,
            None,
        )
    } else {
        let f = args.f.clone().ok_or("--f is required for expression fields")?;
        let g = args.g.clone().ok_or("--g is required for expression fields")?;
        let h_re = args.h_re.clone().unwrap_or_else(|| "0".to_string());
        let h_im = args.h_im.clone().unwrap_or_else(|| "0".to_string());
        let a = args.a.ok_or("--a is required for expression fields")?;
        let b = args.b.ok_or("--b is required for expression fields")?;
        let iv = Interval::new(a, b).map_err(|e| e.to_string())?;
        let field = HermitianField::from_exprs(&f, &g, &h_re, &h_im, iv)
            .map_err(|e| format!("field expressions: {}", e))?;
        (field, FieldSource::Exprs { f, g, h_re, h_im }, a, b, None)
    };

    let mode = args
        .mode
        .map(Mode::from)
        .or(entry_mode)
        .or(default_mode)
        .unwrap_or(Mode::Distinct);

    Ok(Resolved {
        field,
        config: RunConfig {
            source,
            a,
            b,
            n: args.n,
            mode,
            options,
            seed: args.seed,
        },
    })
}

/// Run the configured pipeline; on success also return the track.
fn run_pipeline(
    field: &HermitianField,
    config: &RunConfig,
) -> (RunReport, Option<UnitaryTrack>) {
    let grid = match Grid::new(config.a, config.b, config.n) {
        Ok(g) => g,
        Err(e) => {
            let mut r = RunReport::new(config.clone(), exit::CONFIG);
            r.message = Some(e.to_string());
            return (r, None);
        }
    };
    let outcome: Result<(UnitaryTrack, RunReport), PipelineError> = match config.mode {
        Mode::Distinct => diagonalize_distinct(field, &grid, &config.options).map(|track| {
            let mut r = RunReport::new(config.clone(), exit::OK);
            r.residuals = Some(track.metrics);
            r.segments = Some(segment_logs(&track));
            (track, r)
        }),
        Mode::C1 => diagonalize_c1(field, &grid, &config.options).map(|out| {
            let mut r = RunReport::new(config.clone(), exit::OK);
            r.residuals = Some(out.unitary.metrics);
            r.segments = Some(segment_logs(&out.unitary));
            r.coalescence = Some(out.decomposition.hypotheses.clone());
            r.endpoint_coalescence = Some(out.decomposition.coalescence.endpoint_flags);
            r.c_metrics = Some(out.decomposition.c_metrics);
            (out.unitary, r)
        }),
        Mode::Check => {
            return match check_obstruction(field, &grid, &config.options) {
                Ok(rep) => {
                    let mut r = RunReport::new(config.clone(), exit::OK);
                    r.obstruction = Some(rep);
                    r.identity_check = identity_spot_check(field, config.seed, 1000).ok();
                    (r, None)
                }
                Err(e) => {
                    let code = exit_code_for(&e);
                    let mut r = RunReport::new(config.clone(), code);
                    r.message = Some(e.to_string());
                    (r, None)
                }
            };
        }
    };
    match outcome {
        Ok((track, report)) => (report, Some(track)),
        Err(e) => {
            let code = exit_code_for(&e);
            let mut r = RunReport::new(config.clone(), code);
            r.message = Some(e.to_string());
            (r, None)
        }
    }
}

fn segment_logs(track: &UnitaryTrack) -> SegmentLogs {
    SegmentLogs {
        plus: track.plus_segments.iter().map(SegmentReport::from).collect(),
        minus: track.minus_segments.iter().map(SegmentReport::from).collect(),
    }
}

fn emit(
    report: &RunReport,
    track: Option<&UnitaryTrack>,
    out: Option<&PathBuf>,
    json: bool,
) -> Result<(), String> {
    if let Some(dir) = out {
        let json_bytes = report.to_json();
        report::atomic_write(&dir.join("report.json"), json_bytes.as_bytes())
            .map_err(|e| format!("writing report.json: {}", e))?;
        if let Some(track) = track {
            let mut csv = Vec::new();
            report::write_solution_csv(track, &mut csv)
                .map_err(|e| format!("rendering solution.csv: {}", e))?;
            report::atomic_write(&dir.join("solution.csv"), &csv)
                .map_err(|e| format!("writing solution.csv: {}", e))?;
        }
    }
    if json {
        print!("{}", report.to_json());
    } else {
        print_summary(report);
    }
    Ok(())
}

fn print_summary(r: &RunReport) {
    println!("status: {} (exit {})", r.status, r.exit_code);
    println!(
        "mode: {}  grid: n = {} on [{}, {}]",
        r.config.mode, r.config.n, r.config.a, r.config.b
    );
    if let Some(msg) = &r.message {
        println!("detail: {}", msg);
    }
    if let Some(m) = &r.residuals {
        println!("max unitarity defect: {:.3e}", m.max_unitarity_defect);
        println!(
            "max off-diagonal residual: {:.3e} (ratio {:.3e})",
            m.max_offdiag_resid, m.max_offdiag_ratio
        );
        println!(
            "max step jump: {:.3e} (threshold {:.3e}, data Lipschitz {:.3e})",
            m.max_step_jump, m.jump_threshold, m.lipschitz
        );
        if let Some(rd) = m.reconstruction_defect {
            println!("reconstruction defect: {:.3e}", rd);
        }
    }
    if let Some(zs) = &r.coalescence {
        println!("coalescence points: {}", zs.len());
        for z in zs {
            println!(
                "  z = {:.6e}  A' gap {:.3e}{}{}",
                z.t,
                z.a_prime_gap,
                if z.at_endpoint { "  (endpoint)" } else { "" },
                if z.isolated { "" } else { "  (non-isolated)" }
            );
        }
    }
    if let Some(seg) = &r.segments {
        println!(
            "walk switches: plus {}, minus {}",
            seg.plus.len().saturating_sub(1),
            seg.minus.len().saturating_sub(1)
        );
    }
    if let Some(ob) = &r.obstruction {
        println!(
            "oracle jump: {:.3e} at t = {:.6e} (n = {})",
            ob.base_max_jump, ob.base_jump_at, ob.base_n
        );
        println!(
            "refined jump: {:.3e} at t = {:.6e} (n = {})",
            ob.refined_max_jump, ob.refined_jump_at, ob.refined_n
        );
        println!("persistent jump: {}", ob.persistent_jump);
        println!("coalescence set finite: {}", ob.z_finite);
        for h in &ob.hypotheses {
            println!(
                "  z = {:.6e}  A' gap {:.3e}  derivative discontinuous: {}",
                h.t, h.a_prime_gap, h.deriv_discontinuous
            );
        }
    }
    if let Some(orc) = &r.oracle {
        println!(
            "oracle alignment: min {:.12} at t = {:.6e}",
            orc.min_alignment, orc.min_alignment_at
        );
    }
    if let Some(id) = &r.identity_check {
        println!(
            "identity spot check ({} samples): trace {:.3e}, det {:.3e}",
            id.samples, id.max_trace_error, id.max_det_error
        );
    }
    if let Some(ms) = r.timing_ms {
        println!("elapsed: {:.1} ms", ms);
    }
}

fn cmd_diagonalize(args: &RunArgs) -> i32 {
    let resolved = match resolve(args, None) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}", e);
            return exit::CONFIG;
        }
    };
    let started = Instant::now();
    let (mut report, track) = run_pipeline(&resolved.field, &resolved.config);
    if args.timings {
        report.timing_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    if let Err(e) = emit(&report, track.as_ref(), args.out.as_ref(), args.json) {
        eprintln!("error: {}", e);
        return exit::INTERNAL;
    }
    report.exit_code
}

fn cmd_check(args: &RunArgs) -> i32 {
    let mut resolved = match resolve(args, Some(Mode::Check)) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}", e);
            return exit::CONFIG;
        }
    };
    resolved.config.mode = Mode::Check;
    let started = Instant::now();
    let (mut report, _) = run_pipeline(&resolved.field, &resolved.config);
    if args.timings {
        report.timing_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    if let Err(e) = emit(&report, None, args.out.as_ref(), args.json) {
        eprintln!("error: {}", e);
        return exit::INTERNAL;
    }
    report.exit_code
}

fn cmd_oracle_compare(args: &RunArgs) -> i32 {
    let resolved = match resolve(args, None) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {}", e);
            return exit::CONFIG;
        }
    };
    let config = &resolved.config;
    if config.mode == Mode::Check {
        // Standalone oracle sweep: jump statistics only.
        let grid = match Grid::new(config.a, config.b, config.n) {
            Ok(g) => g,
            Err(e) => {
                eprintln!("error: {}", e);
                return exit::CONFIG;
            }
        };
        let mut report = RunReport::new(config.clone(), exit::OK);
        match pointwise_oracle(&resolved.field, &grid, None) {
            Ok(orc) => {
                report.oracle = Some(OracleSummary {
                    min_alignment: f64::NAN,
                    min_alignment_at: f64::NAN,
                    per_column_min: [f64::NAN; 2],
                    max_jump: orc.max_jump,
                    max_jump_at: orc.max_jump_at,
                });
            }
            Err(e) => {
                report.exit_code = exit::CONFIG;
                report.status = report::status_slug(exit::CONFIG).to_string();
                report.message = Some(e.to_string());
            }
        }
        if let Err(e) = emit(&report, None, args.out.as_ref(), args.json) {
            eprintln!("error: {}", e);
            return exit::INTERNAL;
        }
        return report.exit_code;
    }

    let started = Instant::now();
    let (mut report, track) = run_pipeline(&resolved.field, config);
    if let Some(track) = &track {
        let init = track.mats[0];
        match pointwise_oracle(&resolved.field, &track.grid, Some(init)) {
            Ok(orc) => {
                let stats = alignment_stats(&track.grid, &track.mats, &orc.mats);
                report.oracle = Some(OracleSummary {
                    min_alignment: stats.min_alignment,
                    min_alignment_at: stats.min_at,
                    per_column_min: stats.per_column_min,
                    max_jump: orc.max_jump,
                    max_jump_at: orc.max_jump_at,
                });
            }
            Err(e) => {
                report.message = Some(format!("oracle sweep failed: {}", e));
            }
        }
    }
    if args.timings {
        report.timing_ms = Some(started.elapsed().as_secs_f64() * 1e3);
    }
    if let Err(e) = emit(&report, track.as_ref(), args.out.as_ref(), args.json) {
        eprintln!("error: {}", e);
        return exit::INTERNAL;
    }
    report.exit_code
}

fn gallery_config(entry: &GalleryEntry, n: usize) -> RunConfig {
    RunConfig {
        source: FieldSource::Gallery {
            id: entry.id.to_string(),
        },
        a: entry.a,
        b: entry.b,
        n,
        mode: entry.mode,
        options: PipelineOptions::default(),
        seed: 0,
    }
}

fn run_gallery_entry(entry: &GalleryEntry, n: usize) -> Result<(i32, RunReport), String> {
    let field = entry.field().map_err(|e| e.to_string())?;
    let config = gallery_config(entry, n);
    let (report, _) = run_pipeline(&field, &config);
    Ok((report.exit_code, report))
}

fn cmd_gallery(action: &GalleryAction) -> i32 {
    match action {
        GalleryAction::List => {
            for e in gallery::entries() {
                println!(
                    "{:<22} {:<9} {:<36} [{}, {}]  {}",
                    e.id,
                    e.mode.to_string(),
                    e.expected.label(),
                    e.a,
                    e.b,
                    e.description
                );
            }
            exit::OK
        }
        GalleryAction::Run { id, n, out } => {
            let Some(entry) = gallery::find(id) else {
                eprintln!("error: unknown gallery id `{}`", id);
                return exit::CONFIG;
            };
            match run_gallery_entry(entry, *n) {
                Ok((code, report)) => {
                    if let Some(dir) = out {
                        if let Err(e) =
                            report::atomic_write(&dir.join("report.json"), report.to_json().as_bytes())
                        {
                            eprintln!("error: {}", e);
                            return exit::INTERNAL;
                        }
                    }
                    let want = entry.expected.exit_code();
                    if code == want {
                        println!("PASS {} (expected exit {}, got {})", entry.id, want, code);
                        exit::OK
                    } else {
                        println!("FAIL {} (expected exit {}, got {})", entry.id, want, code);
                        if let Some(m) = &report.message {
                            println!("  detail: {}", m);
                        }
                        1
                    }
                }
                Err(e) => {
                    eprintln!("error: {}", e);
                    exit::INTERNAL
                }
            }
        }
        GalleryAction::RunAll { n } => {
            let mut failures = 0usize;
            for entry in gallery::entries() {
                match run_gallery_entry(entry, *n) {
                    Ok((code, report)) => {
                        let want = entry.expected.exit_code();
                        if code == want {
                            println!("PASS {:<22} (exit {})", entry.id, code);
                        } else {
                            failures += 1;
                            println!(
                                "FAIL {:<22} (expected exit {}, got {}{})",
                                entry.id,
                                want,
                                code,
                                report
                                    .message
                                    .as_ref()
                                    .map(|m| format!(": {}", m))
                                    .unwrap_or_default()
                            );
                        }
                    }
                    Err(e) => {
                        failures += 1;
                        println!("FAIL {:<22} (error: {})", entry.id, e);
                    }
                }
            }
            let total = gallery::entries().len();
            println!("{}/{} gallery expectations hold", total - failures, total);
            if failures == 0 {
                exit::OK
            } else {
                1
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.cmd {
        Cmd::Diagonalize(args) => cmd_diagonalize(args),
        Cmd::Check(args) => cmd_check(args),
        Cmd::OracleCompare(args) => cmd_oracle_compare(args),
        Cmd::Gallery(args) => cmd_gallery(&args.action),
    };
    ExitCode::from(code.clamp(0, 255) as u8)
}
