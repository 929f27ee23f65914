//! Mode orchestration behind the command-line interface. Every mode reads
//! a TOML config, writes a `summary.txt` with one PASS/FAIL line per
//! check, and reports overall success; `simulate` additionally streams
//! diagnostics and VTK snapshots, `iv-curve` writes the sweep as CSV.

use std::fmt;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::config::{parse_config_file, ConfigError};
use crate::coupling::{run_simulation, CouplingError, SimulationState};
use crate::diagnostics::DiagnosticsError;
use crate::io::{fmt_g17, write_diagnostics_csv, write_vtk, IoError};
use crate::verification::{
    eps_report_from_run, heat_mms_study, iv_study, property_suite, robin_decay_study,
    steady_self_heating_study, strip_exactness_study, VerificationError,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    VerifyPotential,
    VerifyHeat,
    IvCurve,
    EpsStudy,
    PropertySuite,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::VerifyPotential => "verify-potential",
            Mode::VerifyHeat => "verify-heat",
            Mode::IvCurve => "iv-curve",
            Mode::EpsStudy => "eps-study",
            Mode::PropertySuite => "property-suite",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
pub enum RunnerError {
    #[error("{0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Io(#[from] IoError),
    #[error("{0}")]
    Coupling(#[from] CouplingError),
    #[error("{0}")]
    Verification(#[from] VerificationError),
    #[error("{0}")]
    Diagnostics(#[from] DiagnosticsError),
    #[error("cannot create output directory {path}: {message}")]
    OutDir { path: String, message: String },
}

/// One pass/fail line of a mode's summary.
#[derive(Clone, Debug)]
pub struct CheckLine {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckLine {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        CheckLine {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// What to run and where to put the artifacts.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub mode: Mode,
    pub config_path: PathBuf,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub stride: usize,
}

impl RunManifest {
    pub fn new(mode: Mode, config_path: PathBuf, out_dir: PathBuf) -> Self {
        RunManifest {
            mode,
            config_path,
            out_dir,
            seed: 42,
            stride: 10,
        }
    }
}

/// Everything a mode produced, plus the rendered summary text.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub mode: Mode,
    pub checks: Vec<CheckLine>,
    pub info: Vec<String>,
    pub all_passed: bool,
    pub summary_path: PathBuf,
}

fn render_summary(manifest: &RunManifest, checks: &[CheckLine], info: &[String]) -> String {
    let mut out = String::new();
    out.push_str(&format!("mode: {}\n", manifest.mode));
    out.push_str(&format!("config: {}\n", manifest.config_path.display()));
    out.push_str(&format!("seed: {}\n", manifest.seed));
    out.push_str(&format!("stride: {}\n", manifest.stride));
    for line in info {
        out.push_str(line);
        out.push('\n');
    }
    for check in checks {
        let tag = if check.passed { "PASS" } else { "FAIL" };
        out.push_str(&format!("{tag} {}: {}\n", check.name, check.detail));
    }
    let overall = if checks.iter().all(|c| c.passed) {
        "PASS"
    } else {
        "FAIL"
    };
    out.push_str(&format!("overall: {overall}\n"));
    out
}

fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    std::fs::write(path, text).map_err(|e| IoError::Io {
        path: path.display().to_string(),
        source: e,
    })
}

fn run_simulate(manifest: &RunManifest) -> Result<(Vec<CheckLine>, Vec<String>), RunnerError> {
    let config = parse_config_file(&manifest.config_path)?;
    let n_steps = config.n_steps();
    let stride = manifest.stride.max(1);
    let out_dir = manifest.out_dir.clone();
    let mesh = config.mesh.clone();
    let mut snapshots = 0usize;
    let mut observer = |s: &SimulationState<'_>| -> Result<(), CouplingError> {
        let last_stage = s.stage_index + 1 == s.n_stages;
        if !last_stage || (s.step % stride != 0 && s.step != n_steps) {
            return Ok(());
        }
        let phi_path = out_dir.join(format!("phi_{:04}.vtk", s.step));
        let u_path = out_dir.join(format!("u_{:04}.vtk", s.step));
        write_vtk(&phi_path, &mesh, "phi", s.phi)
            .and_then(|_| write_vtk(&u_path, &mesh, "temperature", s.u))
            .map_err(|e| CouplingError::Observer(e.to_string()))?;
        snapshots += 1;
        Ok(())
    };
    let run = run_simulation(&config, Some(&mut observer))?;

    let stage = run.final_stage();
    write_diagnostics_csv(&manifest.out_dir.join("diag.csv"), &stage.rows)?;

    let max_balance = stage
        .rows
        .iter()
        .skip(1)
        .fold(0.0_f64, |m, r| m.max(r.balance_res.abs()));
    let last = stage.rows.last().expect("rows nonempty");
    let mut info = vec![
        format!("stages: {}", run.stages.len()),
        format!("steps per stage: {n_steps}"),
        format!("rows written: {}", stage.rows.len()),
        format!("vtk snapshots: {snapshots}"),
        format!("max |balance_res|: {}", fmt_g17(max_balance)),
    ];
    let segments = config.mesh.dirichlet_segments();
    for ((side, _), current) in segments.iter().zip(&last.currents) {
        info.push(format!("final I_{}: {}", side.name(), fmt_g17(*current)));
    }
    let current_sum: f64 = last.currents.iter().sum();
    let checks = vec![
        CheckLine::new(
            "balance_identity",
            max_balance <= 1e-7,
            format!("max |balance_res| = {} (tol 1e-7)", fmt_g17(max_balance)),
        ),
        CheckLine::new(
            "current_conservation",
            current_sum.abs() <= 1e-8,
            format!("|sum of currents| = {} (tol 1e-8)", fmt_g17(current_sum.abs())),
        ),
    ];
    Ok((checks, info))
}

fn run_verify_potential(
    manifest: &RunManifest,
) -> Result<(Vec<CheckLine>, Vec<String>), RunnerError> {
    parse_config_file(&manifest.config_path)?;
    let mut checks = Vec::new();
    let mut info = Vec::new();

    let strip = strip_exactness_study(16, &[1.5, 2.0, 3.0], &[0.0, 0.1], 1e-11)?;
    for c in &strip {
        checks.push(CheckLine::new(
            &format!("strip_exact_p{}_eps{}", c.p, c.eps),
            c.converged && c.error <= 1e-10,
            format!("max |phi - x| = {} (tol 1e-10)", fmt_g17(c.error)),
        ));
    }

    use crate::diagnostics::terminal_currents;
    use crate::mesh::Field;
    use crate::potential::{solve_with_continuation, PotentialProblem};
    let (mesh, phi_d) =
        crate::verification::strip_scenario(16).map_err(VerificationError::Mesh)?;
    let model = crate::constitutive::ConductivityModel::regularized(
        crate::constitutive::TempShape::constant(1.0),
        1.0,
        2.0,
    )
    .map_err(VerificationError::Model)?;
    let u = Field::constant(&mesh, 0.0);
    let problem = PotentialProblem {
        mesh: &mesh,
        model: &model,
        temperature: &u,
        dirichlet_values: &phi_d,
        eps: 0.0,
    };
    let (phi, _) =
        solve_with_continuation(&problem, 1e-11, 60).map_err(VerificationError::Solve)?;
    let currents = terminal_currents(&mesh, &model, &phi, &u, 0.0)?;
    let sum: f64 = currents.iter().sum();
    info.push(format!(
        "strip currents: I_left = {}, I_right = {}",
        fmt_g17(currents[0]),
        fmt_g17(currents[1])
    ));
    checks.push(CheckLine::new(
        "strip_current_left",
        (currents[0] + 1.0).abs() <= 1e-8,
        format!("I_left = {} (expect -1, tol 1e-8)", fmt_g17(currents[0])),
    ));
    checks.push(CheckLine::new(
        "strip_current_right",
        (currents[1] - 1.0).abs() <= 1e-8,
        format!("I_right = {} (expect +1, tol 1e-8)", fmt_g17(currents[1])),
    ));
    checks.push(CheckLine::new(
        "current_conservation",
        sum.abs() <= 1e-8,
        format!("|I_left + I_right| = {} (tol 1e-8)", fmt_g17(sum.abs())),
    ));

    let lo = phi.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = phi.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    checks.push(CheckLine::new(
        "maximum_principle_p2",
        lo >= -1e-10 && hi <= 1.0 + 1e-10,
        format!("range [{}, {}] within [0, 1] (tol 1e-10)", fmt_g17(lo), fmt_g17(hi)),
    ));
    Ok((checks, info))
}

fn run_verify_heat(manifest: &RunManifest) -> Result<(Vec<CheckLine>, Vec<String>), RunnerError> {
    parse_config_file(&manifest.config_path)?;
    let mut checks = Vec::new();
    let mut info = Vec::new();

    let mms = heat_mms_study()?;
    for (n, steps, e) in &mms.spatial {
        info.push(format!("mms spatial n={n} steps={steps}: L2 error {}", fmt_g17(*e)));
    }
    for (steps, e) in &mms.temporal {
        info.push(format!("mms temporal steps={steps}: L2 gap {}", fmt_g17(*e)));
    }
    checks.push(CheckLine::new(
        "mms_spatial_rate",
        (mms.spatial_rate - 2.0).abs() <= 0.3,
        format!("rate = {:.4} (expect 2.0 +/- 0.3)", mms.spatial_rate),
    ));
    checks.push(CheckLine::new(
        "mms_temporal_rate",
        (mms.temporal_rate - 1.0).abs() <= 0.3,
        format!("rate = {:.4} (expect 1.0 +/- 0.3)", mms.temporal_rate),
    ));

    let steps = 60;
    let decay = robin_decay_study(16, 1.0, 1.0, 0.0, 0.25, steps)?;
    checks.push(CheckLine::new(
        "robin_decay_recursion",
        decay.max_recursion_defect <= steps as f64 * 1e-12,
        format!(
            "max defect = {} (tol {} over {} steps)",
            fmt_g17(decay.max_recursion_defect),
            fmt_g17(steps as f64 * 1e-12),
            steps
        ),
    ));
    checks.push(CheckLine::new(
        "robin_decay_monotone",
        decay.monotone && decay.stays_above_ambient,
        format!(
            "monotone = {}, above ambient = {}, final gap = {}",
            decay.monotone,
            decay.stays_above_ambient,
            fmt_g17(decay.final_gap)
        ),
    ));

    let steady = steady_self_heating_study(16, 0.1, 20.0)?;
    checks.push(CheckLine::new(
        "steady_balance",
        steady.max_balance_residual <= 1e-7,
        format!(
            "max |balance_res| = {} (tol 1e-7)",
            fmt_g17(steady.max_balance_residual)
        ),
    ));
    checks.push(CheckLine::new(
        "steady_boundary_mean",
        (steady.final_boundary_mean - steady.expected_mean).abs() <= 1e-6,
        format!(
            "boundary mean = {} (expect {}, tol 1e-6)",
            fmt_g17(steady.final_boundary_mean),
            steady.expected_mean
        ),
    ));
    Ok((checks, info))
}

fn run_iv_curve(manifest: &RunManifest) -> Result<(Vec<CheckLine>, Vec<String>), RunnerError> {
    let config = parse_config_file(&manifest.config_path)?;
    let voltages = [
        0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0, 100.0, 1e3, 1e4, 1e5, 1e6,
    ];
    let ambient = config.heat.h;
    let report = iv_study(&config.conductivity, ambient, &voltages)?;

    let mut csv = String::from("V,I\n");
    for point in &report.points {
        csv.push_str(&format!(
            "{},{}\n",
            fmt_g17(point.voltage),
            fmt_g17(point.current)
        ));
    }
    write_text(&manifest.out_dir.join("iv.csv"), &csv)?;

    let info = vec![
        format!("model p = {}", config.conductivity.p()),
        format!("evaluated at u = {}", fmt_g17(ambient)),
        format!("points written: {}", report.points.len()),
    ];
    let checks = vec![CheckLine::new(
        "iv_monotone",
        report.monotone_nondecreasing,
        "I(V) nondecreasing over the sweep".to_string(),
    )];
    Ok((checks, info))
}

fn run_eps_study(manifest: &RunManifest) -> Result<(Vec<CheckLine>, Vec<String>), RunnerError> {
    let config = parse_config_file(&manifest.config_path)?;
    let run = run_simulation(&config, None)?;
    let report = eps_report_from_run(&config, &run)?;

    let mut info = Vec::new();
    for (i, eps) in report.eps_values.iter().enumerate() {
        info.push(format!(
            "stage {i}: eps = {}, final aug energy = {}",
            fmt_g17(*eps),
            fmt_g17(report.aug_energies[i])
        ));
    }
    for (i, d) in report.stage_diffs.iter().enumerate() {
        info.push(format!("|u({}) - u({})|_inf = {}",
            fmt_g17(report.eps_values[i]),
            fmt_g17(report.eps_values[i + 1]),
            fmt_g17(*d)
        ));
    }

    let mut checks = Vec::new();
    if report.stage_diffs.len() >= 2 {
        checks.push(CheckLine::new(
            "stage_diffs_decreasing",
            report.diffs_strictly_decreasing,
            format!("{} consecutive stage differences", report.stage_diffs.len()),
        ));
    }
    checks.push(CheckLine::new(
        "truncation_bound",
        report.truncation_defect <= 1e-12,
        format!(
            "max (|f_eps - f| - eps f^2) = {} (tol 1e-12)",
            fmt_g17(report.truncation_defect)
        ),
    ));
    Ok((checks, info))
}

fn run_property_suite(
    manifest: &RunManifest,
) -> Result<(Vec<CheckLine>, Vec<String>), RunnerError> {
    parse_config_file(&manifest.config_path)?;
    let n_samples = 100_000;
    let report = property_suite(n_samples, manifest.seed)?;
    let mut info = vec![format!("samples per model: {n_samples}")];
    let mut checks = Vec::new();
    for entry in &report.entries {
        info.push(format!(
            "{}: min gap = {}, plap margin = {}, eps margin = {}",
            entry.label,
            fmt_g17(entry.report.min_gap),
            fmt_g17(entry.report.min_plap_margin),
            fmt_g17(entry.report.min_eps_margin)
        ));
    }
    checks.push(CheckLine::new(
        "monotonicity_gaps",
        report.worst_gap >= -1e-12,
        format!("worst gap = {} (tol -1e-12)", fmt_g17(report.worst_gap)),
    ));
    checks.push(CheckLine::new(
        "plap_lower_bound",
        report.worst_plap_margin >= -1e-12,
        format!(
            "worst normalized margin = {} (tol -1e-12)",
            fmt_g17(report.worst_plap_margin)
        ),
    ));
    checks.push(CheckLine::new(
        "eps_gap_floor",
        report.worst_eps_margin >= -1e-12,
        format!(
            "worst normalized margin = {} (tol -1e-12)",
            fmt_g17(report.worst_eps_margin)
        ),
    ));
    Ok((checks, info))
}

/// Execute one mode end to end, write `summary.txt`, and report the
/// checks. Errors (bad config, solver breakdown, I/O) abort before any
/// summary is written; failed checks still produce a summary.
pub fn run(manifest: &RunManifest) -> Result<RunSummary, RunnerError> {
    std::fs::create_dir_all(&manifest.out_dir).map_err(|e| RunnerError::OutDir {
        path: manifest.out_dir.display().to_string(),
        message: e.to_string(),
    })?;
    let (checks, info) = match manifest.mode {
        Mode::Simulate => run_simulate(manifest)?,
        Mode::VerifyPotential => run_verify_potential(manifest)?,
        Mode::VerifyHeat => run_verify_heat(manifest)?,
        Mode::IvCurve => run_iv_curve(manifest)?,
        Mode::EpsStudy => run_eps_study(manifest)?,
        Mode::PropertySuite => run_property_suite(manifest)?,
    };
    let text = render_summary(manifest, &checks, &info);
    let summary_path = manifest.out_dir.join("summary.txt");
    write_text(&summary_path, &text)?;
    let all_passed = checks.iter().all(|c| c.passed);
    Ok(RunSummary {
        mode: manifest.mode,
        checks,
        info,
        all_passed,
        summary_path,
    })
}
