//! Subcommand implementations. Each writes its artifacts under the output
//! directory and returns the computed data together with a JSON summary.

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use bloch_core::bands::io::write_band_table;
use bloch_core::bands::{check_convergence, compute_bands, compute_bands_converged, ConvergenceReport};
use bloch_core::oracle::{direct_p_plus, OracleConfig, OracleReport};
use bloch_core::positivity::{
    asympt_strong, asympt_weak, lambda_on_grid, lambda_scan, longest_beat_period, p_plus_multiband,
    sup_p_plus_cosine, LambdaScan, PositivityReport, SupReport, IMAG_TOL,
};
use bloch_core::{BandTable, Error as CoreError, FourierPotential, QuasiMomentumAmplitude};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::CliError;

/// Agreement required between the oracle and the spectral value.
pub const ORACLE_TOL: f64 = 1e-4;
/// Agreement required between the Λ jump at `z = 0` and `2π|f₀(0)|²`.
pub const JUMP_TOL: f64 = 1e-6;

pub const THETA_CONVENTION: &str = "Theta(0) = 1: Lambda at z = 0 reports the right limit Lambda(0+)";
pub const GAUGE_CONVENTION: &str =
    "per (z, band) the largest-modulus coefficient f_n is real and positive; ties within 1e-10 relative go to the smallest n";
pub const UNITS_CONVENTION: &str =
    "q = 1, z = kappa/q, energies in hbar^2 q^2 / (2 mu), times in 2 mu / (hbar q^2), x in 1/q";

#[derive(Debug, Clone)]
pub struct Context {
    pub cfg: RunConfig,
    pub command: &'static str,
    pub out_dir: PathBuf,
    pub bands_out: Option<PathBuf>,
    pub self_check: bool,
}

impl Context {
    pub fn new(cfg: RunConfig, command: &'static str) -> Self {
        let out_dir = PathBuf::from(cfg.output.dir.clone().unwrap_or_else(|| ".".into()));
        Context {
            cfg,
            command,
            out_dir,
            bands_out: None,
            self_check: false,
        }
    }

    /// First line of every artifact.
    pub fn metadata(&self) -> Value {
        json!({
            "tool": "bloch",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "config_sha256": self.cfg.hash(),
            "conventions": {
                "theta": THETA_CONVENTION,
                "gauge": GAUGE_CONVENTION,
                "units": UNITS_CONVENTION,
            },
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?))
}

fn write_csv(ctx: &Context, name: &str, header: &str, rows: &[String]) -> Result<PathBuf, CliError> {
    let path = ctx.path(name);
    let mut out = create(&path)?;
    writeln!(out, "{}", ctx.metadata())?;
    writeln!(out, "{header}")?;
    for r in rows {
        writeln!(out, "{r}")?;
    }
    out.flush()?;
    Ok(path)
}

fn write_json(ctx: &Context, name: &str, body: &impl Serialize) -> Result<PathBuf, CliError> {
    let path = ctx.path(name);
    let mut out = create(&path)?;
    writeln!(out, "{}", ctx.metadata())?;
    writeln!(out, "{}", serde_json::to_string(body).expect("report serializes"))?;
    out.flush()?;
    Ok(path)
}

fn numerical(what: String) -> CliError {
    CliError::Core(CoreError::NumericalFailure { what, dim: 0, z: f64::NAN })
}

/// Band table for `potential`, escalating `M` when the solver block asks for
/// a converged table.
pub fn solve_table(
    cfg: &RunConfig,
    potential: &FourierPotential,
    max_band: usize,
) -> Result<(BandTable, Option<ConvergenceReport>), CliError> {
    let grid = cfg.grid();
    if !cfg.solver.converge {
        return Ok((compute_bands(potential, &grid, max_band, cfg.solver.m)?, None));
    }
    let (table, report) = compute_bands_converged(potential, &grid, max_band, cfg.solver.m, cfg.solver.max_m)?;
    if !report.pass {
        return Err(numerical(format!(
            "M vs 2M check still failing at M = {} (max |dE| = {:e}, max |dLambda| = {:e}); raise solver.max_M",
            report.half_width, report.max_energy_deviation, report.max_lambda_deviation
        )));
    }
    Ok((table, Some(report)))
}

pub fn build_amplitude(cfg: &RunConfig, table: &BandTable) -> Result<QuasiMomentumAmplitude, CliError> {
    let a = cfg.amplitude_spec()?;
    if let Some(spec) = a.spec() {
        return Ok(QuasiMomentumAmplitude::from_spec(table.grid(), &spec)?);
    }
    let path = a.csv.as_ref().expect("validated amplitude");
    let file = File::open(path).map_err(|e| CliError::Config(format!("amplitude.csv {path}: {e}")))?;
    Ok(QuasiMomentumAmplitude::from_csv(table.grid(), BufReader::new(file))?)
}

fn amplitude_top_band(cfg: &RunConfig) -> Result<usize, CliError> {
    let a = cfg.amplitude_spec()?;
    if let Some(bands) = &a.bands {
        return Ok(bands.iter().map(|c| c.j).max().unwrap_or(0));
    }
    // Tabulated amplitudes: scan the band column.
    let path = a.csv.as_ref().expect("validated amplitude");
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("amplitude.csv {path}: {e}")))?;
    Ok(text
        .lines()
        .filter_map(|l| l.split(',').nth(1)?.trim().parse::<usize>().ok())
        .max()
        .unwrap_or(0))
}

#[derive(Debug, Clone, Serialize)]
pub struct BandsOutput {
    pub path: PathBuf,
    pub rows: usize,
    pub half_width: usize,
    pub max_band: usize,
    pub gaps: Vec<f64>,
    pub convergence: Option<ConvergenceReport>,
    pub max_norm_deviation: f64,
}

pub fn cmd_bands(ctx: &Context) -> Result<BandsOutput, CliError> {
    let cfg = &ctx.cfg;
    let potential = cfg.potential()?;
    let (table, convergence) = solve_table(cfg, &potential, cfg.solver.j_max)?;
    let path = ctx
        .bands_out
        .clone()
        .or_else(|| cfg.output.bands_file.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| ctx.path("bands.csv"));
    let mut out = create(&path)?;
    write_band_table(&table, ctx.metadata(), &mut out)?;
    out.flush()?;

    let target = 1.0 / (2.0 * std::f64::consts::PI);
    let mut max_norm_deviation: f64 = 0.0;
    for j in 0..table.band_count() {
        for iz in 0..table.grid().len() {
            let s: f64 = table.coeffs(j, iz).iter().map(|c| c.norm_sqr()).sum();
            max_norm_deviation = max_norm_deviation.max((s - target).abs());
        }
    }
    if ctx.self_check && max_norm_deviation > 1e-12 {
        return Err(CliError::SelfCheck(format!("normalization off by {max_norm_deviation:e}")));
    }
    Ok(BandsOutput {
        path,
        rows: table.grid().len() * table.band_count(),
        half_width: table.half_width(),
        max_band: table.max_band(),
        gaps: (0..table.max_band()).map(|j| table.gap_above(j)).collect(),
        convergence,
        max_norm_deviation,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaCurve {
    pub alpha: Option<f64>,
    pub half_width: usize,
    pub z: Vec<f64>,
    pub lambda: Vec<f64>,
    pub scan: LambdaScan,
}

#[derive(Debug, Clone, Serialize)]
pub struct LambdaOutput {
    pub path: PathBuf,
    pub curves: Vec<LambdaCurve>,
}

fn lambda_curve(cfg: &RunConfig, alpha: Option<f64>, potential: &FourierPotential) -> Result<LambdaCurve, CliError> {
    let band = cfg.lambda.band;
    let (table, _) = solve_table(cfg, potential, band)?;
    Ok(LambdaCurve {
        alpha,
        half_width: table.half_width(),
        z: table.grid().values().to_vec(),
        lambda: lambda_on_grid(&table, band)?,
        scan: lambda_scan(&table, band)?,
    })
}

pub fn cmd_lambda(ctx: &Context) -> Result<LambdaOutput, CliError> {
    let cfg = &ctx.cfg;
    let curves: Vec<LambdaCurve> = match &cfg.sweep {
        Some(s) => s
            .alphas()?
            .par_iter()
            .map(|&a| lambda_curve(cfg, Some(a), &FourierPotential::cosine_alpha(a)?))
            .collect::<Result<_, _>>()?,
        None => {
            let p = cfg.potential()?;
            let alpha = cfg.potential.as_ref().and_then(|pc| pc.alpha(cfg.units));
            vec![lambda_curve(cfg, alpha, &p)?]
        }
    };
    let mut rows = Vec::new();
    for c in &curves {
        let a = c.alpha.map(|a| format!("{a:?}")).unwrap_or_default();
        for (z, l) in c.z.iter().zip(&c.lambda) {
            rows.push(format!("{a},{z:?},{l:?}"));
        }
    }
    let path = write_csv(ctx, "lambda.csv", "alpha,z,lambda", &rows)?;
    if ctx.self_check {
        for c in &curves {
            if c.lambda.iter().any(|l| !(0.0..1.0).contains(l)) {
                return Err(CliError::SelfCheck(format!("Lambda outside [0, 1) for alpha = {:?}", c.alpha)));
            }
            let dev = (c.scan.jump_at_zero - c.scan.theta_term).abs();
            if dev > JUMP_TOL {
                return Err(CliError::SelfCheck(format!(
                    "Lambda jump at z = 0 differs from 2 pi |f0|^2 by {dev:e} for alpha = {:?}",
                    c.alpha
                )));
            }
        }
    }
    Ok(LambdaOutput { path, curves })
}

#[derive(Debug, Clone, Serialize)]
pub struct SupRow {
    pub report: SupReport,
    pub asympt_strong: f64,
    pub asympt_weak: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SupOutput {
    pub path: PathBuf,
    pub rows: Vec<SupRow>,
    pub strictly_decreasing: bool,
}

/// `sup P₊` at `alpha`, doubling `M` while the M vs 2M check fails.
pub fn converged_sup(alpha: f64, m: usize, max_m: usize) -> Result<SupReport, CliError> {
    let mut m = m;
    loop {
        match sup_p_plus_cosine(alpha, m) {
            Err(CoreError::NumericalFailure { .. }) if 2 * m <= max_m => m *= 2,
            other => return Ok(other?),
        }
    }
}

pub fn cmd_supp(ctx: &Context) -> Result<SupOutput, CliError> {
    let cfg = &ctx.cfg;
    let sweep = cfg
        .sweep
        .as_ref()
        .ok_or_else(|| CliError::Config("supp-sweep needs a [sweep] block".into()))?;
    let rows: Vec<SupRow> = sweep
        .alphas()?
        .par_iter()
        .map(|&a| {
            Ok(SupRow {
                report: converged_sup(a, cfg.solver.m, cfg.solver.max_m)?,
                asympt_strong: asympt_strong(a),
                asympt_weak: asympt_weak(a),
            })
        })
        .collect::<Result<_, CliError>>()?;
    let lines: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{:?},{:?},{:?},{:?},{:?},{:?}",
                r.report.alpha, r.report.sup_p, r.asympt_strong, r.asympt_weak, r.report.f00, r.report.symmetry_residual
            )
        })
        .collect();
    let path = write_csv(ctx, "supp.csv", "alpha,sup_p,asympt_strong,asympt_weak,f00,symmetry_residual", &lines)?;
    let mut sorted: Vec<(f64, f64)> = rows.iter().map(|r| (r.report.alpha, r.report.sup_p)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let strictly_decreasing = sorted.windows(2).all(|w| w[0].0 == w[1].0 || w[1].1 < w[0].1);
    if ctx.self_check {
        if !strictly_decreasing {
            return Err(CliError::SelfCheck("sup P+ is not strictly decreasing in alpha".into()));
        }
        if let Some(r) = rows.iter().find(|r| !(r.report.sup_p > 0.5 && r.report.sup_p <= 1.0)) {
            return Err(CliError::SelfCheck(format!("sup P+ = {} outside (1/2, 1]", r.report.sup_p)));
        }
    }
    Ok(SupOutput {
        path,
        rows,
        strictly_decreasing,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PposOutput {
    pub path: PathBuf,
    pub report: PositivityReport,
    pub half_width: usize,
    pub beat_period: Option<f64>,
    pub oracle: Vec<OracleReport>,
}

fn oracle_config(cfg: &RunConfig, table: &BandTable, t: f64) -> OracleConfig {
    let auto = OracleConfig::for_table(table, cfg.oracle.half_window, t);
    OracleConfig {
        samples: cfg.oracle.samples.unwrap_or(auto.samples),
        ..auto
    }
}

fn packet_table(cfg: &RunConfig) -> Result<(BandTable, QuasiMomentumAmplitude), CliError> {
    let potential = cfg.potential()?;
    let max_band = cfg.solver.j_max.max(amplitude_top_band(cfg)?);
    let (table, _) = solve_table(cfg, &potential, max_band)?;
    let amp = build_amplitude(cfg, &table)?;
    Ok((table, amp))
}

pub fn cmd_ppos(ctx: &Context) -> Result<PposOutput, CliError> {
    let cfg = &ctx.cfg;
    let times_cfg = cfg
        .times
        .as_ref()
        .ok_or_else(|| CliError::Config("ppos needs a [times] block".into()))?;
    let (table, amp) = packet_table(cfg)?;
    let beat_period = longest_beat_period(&table, &amp);
    let times = times_cfg.resolve(beat_period)?;
    let report = p_plus_multiband(&table, &amp, &times)?;
    let rows: Vec<String> = report
        .samples
        .iter()
        .map(|s| format!("{:?},{:?},{:?},{:?}", s.t, s.p_plus, report.p_bar, s.p_tilde))
        .collect();
    let path = write_csv(ctx, "ppos.csv", "t,p_plus,p_bar,p_tilde", &rows)?;

    let mut oracle = Vec::new();
    if ctx.self_check {
        let mut problems = Vec::new();
        if !report.in_unit_interval {
            problems.push("P+ outside [0, 1]".to_string());
        }
        if report.max_imag_p_tilde > IMAG_TOL {
            problems.push(format!("|Im P~| = {:e}", report.max_imag_p_tilde));
        }
        if !report.strictly_below_one {
            problems.push("P-bar is not below 1".to_string());
        }
        if !report.quadrature_ok {
            problems.push(format!("quadrature refinement differs by {:e}", report.quadrature_error));
        }
        let n = cfg.oracle.check_times.min(times.len());
        for i in 0..n {
            // Spread the checked times over the series.
            let idx = if n == 1 { 0 } else { i * (times.len() - 1) / (n - 1) };
            let r = direct_p_plus(&table, &amp, &oracle_config(cfg, &table, times[idx]))?;
            if r.abs_diff > ORACLE_TOL {
                problems.push(format!("oracle differs by {:e} at t = {}", r.abs_diff, r.t));
            }
            oracle.push(r);
        }
        if !problems.is_empty() {
            return Err(CliError::SelfCheck(problems.join("; ")));
        }
    }
    Ok(PposOutput {
        path,
        report,
        half_width: table.half_width(),
        beat_period,
        oracle,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleOutput {
    pub path: PathBuf,
    pub report: OracleReport,
}

pub fn cmd_oracle(ctx: &Context) -> Result<OracleOutput, CliError> {
    let cfg = &ctx.cfg;
    let (table, amp) = packet_table(cfg)?;
    let report = direct_p_plus(&table, &amp, &oracle_config(cfg, &table, cfg.oracle.t))?;
    let path = write_json(ctx, "oracle.json", &report)?;
    if ctx.self_check && report.abs_diff > ORACLE_TOL {
        return Err(CliError::SelfCheck(format!("oracle differs by {:e}", report.abs_diff)));
    }
    Ok(OracleOutput { path, report })
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceOutput {
    pub path: PathBuf,
    pub report: ConvergenceReport,
}

pub fn cmd_convergence(ctx: &Context) -> Result<ConvergenceOutput, CliError> {
    let cfg = &ctx.cfg;
    let potential = cfg.potential()?;
    let report = check_convergence(&potential, &cfg.grid(), cfg.solver.j_max, cfg.solver.m);
    let path = write_json(ctx, "convergence.json", &report)?;
    if ctx.self_check && !report.pass {
        return Err(CliError::SelfCheck(format!(
            "M = {} vs {} differ by {:e} in energy and {:e} in Lambda",
            report.half_width, report.doubled_half_width, report.max_energy_deviation, report.max_lambda_deviation
        )));
    }
    Ok(ConvergenceOutput { path, report })
}
