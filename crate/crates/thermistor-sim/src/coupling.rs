//! Time-stepping driver for the coupled system: at each backward Euler
//! step the quasi-static potential is re-solved at the new time level, the
//! (ramped, truncated) Joule source is assembled from it, and the heat
//! step advances the temperature. A short outer fixed-point loop refreshes
//! the conductivity's temperature argument within the step.
//!
//! An eps schedule turns one simulation into a continuation study: each
//! schedule entry runs the full time horizon from the same initial state,
//! with eps augmenting the potential operator and/or truncating the Joule
//! source. Diagnostics are recorded for every stage; the last stage is the
//! reported solution.

use thiserror::Error;

use crate::constitutive::{truncate_source, ConductivityModel, HeatModel};
use crate::diagnostics::{
    balance_residual, estimate_functionals, DiagnosticsError, DiagnosticsRow,
};
use crate::heat::{heat_step, HeatError, HeatStepProblem};
use crate::mesh::{gradient_per_triangle, Field, Mesh, MeshError};
use crate::potential::{solve, solve_with_continuation, PotentialProblem, SolveError};

pub const SOLVER_P_MIN: f64 = 1.2;
pub const SOLVER_P_MAX: f64 = 6.0;

#[derive(Debug, Error)]
pub enum CouplingError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error("potential solve failed at step {step} (t = {time}): {source}")]
    Potential {
        step: usize,
        time: f64,
        #[source]
        source: SolveError,
    },
    #[error(
        "potential solve did not converge at step {step} (t = {time}); residual {residual}"
    )]
    PotentialNotConverged { step: usize, time: f64, residual: f64 },
    #[error("heat step failed at step {step} (t = {time}): {source}")]
    Heat {
        step: usize,
        time: f64,
        #[source]
        source: HeatError,
    },
    #[error("heat step Picard loop stalled at step {step} (t = {time}); last diff {diff}")]
    HeatNotConverged { step: usize, time: f64, diff: f64 },
    #[error("diagnostics failed at step {step}: {source}")]
    Diagnostics {
        step: usize,
        #[source]
        source: DiagnosticsError,
    },
    #[error("observer error: {0}")]
    Observer(String),
}

/// Source modulation over the time horizon.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ramp {
    /// Full strength from t = 0.
    Constant,
    /// Linear from 0 at t = 0 to 1 at t = T/10, then constant 1.
    LinearStart,
}

impl Ramp {
    pub fn factor(&self, t: f64, t_final: f64) -> f64 {
        match self {
            Ramp::Constant => 1.0,
            Ramp::LinearStart => (10.0 * t / t_final).min(1.0),
        }
    }
}

/// Complete runtime description of one simulation.
#[derive(Clone, Debug)]
pub struct SimulationConfig {
    pub mesh: Mesh,
    pub conductivity: ConductivityModel,
    pub heat: HeatModel,
    /// Full-length field; read at Dirichlet vertices only.
    pub phi_dirichlet: Field,
    pub u_initial: Field,
    pub t_final: f64,
    pub dt: f64,
    /// Nonincreasing, nonnegative; one full run per entry.
    pub eps_schedule: Vec<f64>,
    pub eps_in_operator: bool,
    pub eps_in_source: bool,
    pub ramp: Ramp,
    /// Fixed-point refreshes of the temperature argument per step, >= 1.
    pub outer_iterations: usize,
    pub outer_tol: f64,
    pub potential_tol: f64,
    pub potential_max_iter: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    /// Exponent weight of the damped gradient functional.
    pub lambda: f64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<(), CouplingError> {
        let bad = |m: String| Err(CouplingError::InvalidConfig(m));
        if !(self.t_final > 0.0) || !self.t_final.is_finite() {
            return bad(format!("t_final must be positive, got {}", self.t_final));
        }
        if !(self.dt > 0.0) || self.dt > self.t_final {
            return bad(format!(
                "dt must lie in (0, t_final], got dt = {}, t_final = {}",
                self.dt, self.t_final
            ));
        }
        let ratio = self.t_final / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return bad(format!(
                "t_final / dt = {ratio} is not an integer; choose a commensurate dt"
            ));
        }
        if self.eps_schedule.is_empty() {
            return bad("eps_schedule must have at least one entry".to_string());
        }
        for w in self.eps_schedule.windows(2) {
            if w[1] > w[0] {
                return bad(format!(
                    "eps_schedule must be nonincreasing, got {} before {}",
                    w[0], w[1]
                ));
            }
        }
        if self.eps_schedule.iter().any(|&e| !(e >= 0.0) || !e.is_finite()) {
            return bad("eps_schedule entries must be finite and nonnegative".to_string());
        }
        let p = self.conductivity.p();
        if !(SOLVER_P_MIN..=SOLVER_P_MAX).contains(&p) {
            return bad(format!(
                "solver supports p in [{SOLVER_P_MIN}, {SOLVER_P_MAX}], got {p}"
            ));
        }
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return bad(format!("lambda must lie in (0, 1), got {}", self.lambda));
        }
        if self.outer_iterations == 0 {
            return bad("outer_iterations must be at least 1".to_string());
        }
        if !(self.outer_tol > 0.0) || !(self.potential_tol > 0.0) || !(self.picard_tol > 0.0) {
            return bad("tolerances must be positive".to_string());
        }
        if self.potential_max_iter == 0 || self.picard_max_iter == 0 {
            return bad("iteration limits must be at least 1".to_string());
        }
        if self.phi_dirichlet.len() != self.mesh.n_vertices() {
            return Err(MeshError::SizeMismatch {
                expected: self.mesh.n_vertices(),
                got: self.phi_dirichlet.len(),
            }
            .into());
        }
        if self.u_initial.len() != self.mesh.n_vertices() {
            return Err(MeshError::SizeMismatch {
                expected: self.mesh.n_vertices(),
                got: self.u_initial.len(),
            }
            .into());
        }
        self.u_initial.check_finite()?;
        self.phi_dirichlet.check_finite()?;
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    fn eps_operator(&self, eps: f64) -> f64 {
        if self.eps_in_operator {
            eps
        } else {
            0.0
        }
    }

    fn eps_source(&self, eps: f64) -> f64 {
        if self.eps_in_source {
            eps
        } else {
            0.0
        }
    }
}

/// Snapshot handed to the step observer after each recorded step.
pub struct SimulationState<'a> {
    pub stage_index: usize,
    pub n_stages: usize,
    pub eps: f64,
    pub step: usize,
    pub time: f64,
    pub phi: &'a Field,
    pub u: &'a Field,
    pub row: &'a DiagnosticsRow,
}

pub type StepObserver<'o> =
    dyn FnMut(&SimulationState<'_>) -> Result<(), CouplingError> + 'o;

/// One eps stage's full history.
#[derive(Clone, Debug)]
pub struct StageResult {
    pub eps: f64,
    pub rows: Vec<DiagnosticsRow>,
    pub final_phi: Field,
    pub final_u: Field,
}

/// All stages, in schedule order; the last is the reported solution.
#[derive(Clone, Debug)]
pub struct SimulationRun {
    pub stages: Vec<StageResult>,
}

impl SimulationRun {
    pub fn final_stage(&self) -> &StageResult {
        self.stages.last().expect("at least one stage")
    }
}

/// Ramped, truncated Joule source on each triangle at time `t`, evaluated
/// from the current potential and temperature iterate; also returns its
/// integral (the applied-power diagnostic).
fn applied_source(
    config: &SimulationConfig,
    phi: &Field,
    u: &Field,
    t: f64,
    eps_source: f64,
) -> Result<(Vec<f64>, f64), MeshError> {
    let mesh = &config.mesh;
    let grads = gradient_per_triangle(mesh, phi)?;
    let u_means = u.triangle_means(mesh);
    let ramp = config.ramp.factor(t, config.t_final);
    let mut source = Vec::with_capacity(mesh.n_triangles());
    let mut total = 0.0;
    for t_idx in 0..mesh.n_triangles() {
        let g = grads[t_idx];
        let tau = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let um = u_means[t_idx];
        let c = mesh.triangle_centroid(t_idx);
        let f = ramp
            * config.heat.alpha_at(c[0], c[1], t, um)
            * config.conductivity.sigma(um, tau)
            * tau
            * tau;
        let f_eps = truncate_source(f, eps_source);
        source.push(f_eps);
        total += mesh.triangle_area(t_idx) * f_eps;
    }
    Ok((source, total))
}

fn solve_potential(
    config: &SimulationConfig,
    u: &Field,
    eps_op: f64,
    guess: Option<&Field>,
    step: usize,
    time: f64,
) -> Result<Field, CouplingError> {
    let problem = PotentialProblem {
        mesh: &config.mesh,
        model: &config.conductivity,
        temperature: u,
        dirichlet_values: &config.phi_dirichlet,
        eps: eps_op,
    };
    let attempt = match guess {
        Some(g) => solve(&problem, g, config.potential_tol, config.potential_max_iter),
        None => solve_with_continuation(&problem, config.potential_tol, config.potential_max_iter),
    };
    let (phi, report) = attempt.map_err(|source| CouplingError::Potential { step, time, source })?;
    if report.converged {
        return Ok(phi);
    }
    // A stale warm start can strand the damped iteration; one cold restart
    // with exponent continuation is the documented recovery path.
    if guess.is_some() {
        let (phi, report) =
            solve_with_continuation(&problem, config.potential_tol, config.potential_max_iter)
                .map_err(|source| CouplingError::Potential { step, time, source })?;
        if report.converged {
            return Ok(phi);
        }
        return Err(CouplingError::PotentialNotConverged {
            step,
            time,
            residual: report.residual_norm,
        });
    }
    Err(CouplingError::PotentialNotConverged {
        step,
        time,
        residual: report.residual_norm,
    })
}

struct StepOutcome {
    phi: Field,
    u: Field,
    source: Vec<f64>,
    joule_applied: f64,
}

/// Advance one backward Euler step from `u_prev` at time `t_prev` to
/// `t_next`, refreshing the potential's temperature argument
/// `outer_iterations` times (early exit once consecutive temperature
/// candidates agree to `outer_tol`).
fn coupled_step(
    config: &SimulationConfig,
    eps: f64,
    u_prev: &Field,
    phi_warm: &Field,
    step: usize,
    t_next: f64,
) -> Result<StepOutcome, CouplingError> {
    let eps_op = config.eps_operator(eps);
    let eps_src = config.eps_source(eps);
    let mut u_iter = u_prev.clone();
    let mut phi = phi_warm.clone();
    let mut source = Vec::new();
    let mut joule_applied = 0.0;
    let mut previous_candidate: Option<Field> = None;

    for _ in 0..config.outer_iterations {
        phi = solve_potential(config, &u_iter, eps_op, Some(&phi), step, t_next)?;
        let (src, total) = applied_source(config, &phi, &u_iter, t_next, eps_src)
            .map_err(CouplingError::Mesh)?;
        source = src;
        joule_applied = total;
        let problem = HeatStepProblem {
            mesh: &config.mesh,
            heat: &config.heat,
            u_old: u_prev,
            dt: config.dt,
            source: &source,
            robin_source: None,
        };
        let (candidate, report) = heat_step(&problem, config.picard_tol, config.picard_max_iter)
            .map_err(|source| CouplingError::Heat {
                step,
                time: t_next,
                source,
            })?;
        if !report.converged {
            return Err(CouplingError::HeatNotConverged {
                step,
                time: t_next,
                diff: report.last_diff,
            });
        }
        let done = match &previous_candidate {
            Some(prev) => Field::max_norm_diff(prev, &candidate) <= config.outer_tol,
            None => false,
        };
        previous_candidate = Some(candidate.clone());
        u_iter = candidate;
        if done {
            break;
        }
    }

    Ok(StepOutcome {
        phi,
        u: u_iter,
        source,
        joule_applied,
    })
}

fn make_row(
    config: &SimulationConfig,
    phi: &Field,
    u: &Field,
    eps: f64,
    time: f64,
    step: usize,
) -> Result<DiagnosticsRow, CouplingError> {
    estimate_functionals(
        &config.mesh,
        phi,
        u,
        &config.conductivity,
        &config.heat,
        config.lambda,
        config.eps_operator(eps),
        config.eps_source(eps),
        time,
    )
    .map_err(|source| CouplingError::Diagnostics { step, source })
}

/// Run the full horizon at one fixed eps, starting from the configured
/// initial state. Row 0 records the initial data with the prospective
/// source; row k the state after step k.
pub fn run_stage(
    config: &SimulationConfig,
    eps: f64,
    stage_index: usize,
    n_stages: usize,
    observer: &mut Option<&mut StepObserver<'_>>,
) -> Result<StageResult, CouplingError> {
    let eps_op = config.eps_operator(eps);
    let eps_src = config.eps_source(eps);
    let n_steps = config.n_steps();

    let mut u = config.u_initial.clone();
    let mut phi = solve_potential(config, &u, eps_op, None, 0, 0.0)?;

    let mut rows = Vec::with_capacity(n_steps + 1);
    let mut row0 = make_row(config, &phi, &u, eps, 0.0, 0)?;
    let (_, joule0) = applied_source(config, &phi, &u, 0.0, eps_src).map_err(CouplingError::Mesh)?;
    row0.joule = joule0;
    row0.balance_res = 0.0;
    if let Some(obs) = observer.as_mut() {
        obs(&SimulationState {
            stage_index,
            n_stages,
            eps,
            step: 0,
            time: 0.0,
            phi: &phi,
            u: &u,
            row: &row0,
        })?;
    }
    rows.push(row0);

    for step in 1..=n_steps {
        let t_next = step as f64 * config.dt;
        let outcome = coupled_step(config, eps, &u, &phi, step, t_next)?;
        let mut row = make_row(config, &outcome.phi, &outcome.u, eps, t_next, step)?;
        row.joule = outcome.joule_applied;
        row.balance_res = balance_residual(
            &config.mesh,
            &config.heat,
            &u,
            &outcome.u,
            config.dt,
            &outcome.source,
        )
        .map_err(|source| CouplingError::Diagnostics { step, source })?;
        phi = outcome.phi;
        u = outcome.u;
        if let Some(obs) = observer.as_mut() {
            obs(&SimulationState {
                stage_index,
                n_stages,
                eps,
                step,
                time: t_next,
                phi: &phi,
                u: &u,
                row: &row,
            })?;
        }
        rows.push(row);
    }

    Ok(StageResult {
        eps,
        rows,
        final_phi: phi,
        final_u: u,
    })
}

/// Run every eps stage in schedule order. The observer, if any, sees every
/// recorded step of every stage (stage index included, so callers can act
/// on the final stage only).
pub fn run_simulation(
    config: &SimulationConfig,
    mut observer: Option<&mut StepObserver<'_>>,
) -> Result<SimulationRun, CouplingError> {
    config.validate()?;
    let n_stages = config.eps_schedule.len();
    let mut stages = Vec::with_capacity(n_stages);
    for (stage_index, &eps) in config.eps_schedule.iter().enumerate() {
        stages.push(run_stage(config, eps, stage_index, n_stages, &mut observer)?);
    }
    Ok(SimulationRun { stages })
}
