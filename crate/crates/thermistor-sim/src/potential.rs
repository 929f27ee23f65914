//! Quasi-static potential solver: find the P1 potential phi with
//! phi = phi_D on the Dirichlet vertices and vanishing discrete residual
//!
//!   r_i = sum_T |T| * a(u_T, |grad phi|_T) * grad phi_T . grad zeta_i = 0
//!
//! at every free vertex, where a = eps * tau^(p-2) + sigma(u, tau) is the
//! (possibly eps-augmented) conductivity coefficient, evaluated with the
//! triangle-mean temperature u_T.
//!
//! The iteration is damped Newton on the exact residual with Armijo
//! backtracking (halving, at most 30 times), warmed up by Picard (frozen
//! coefficient) for the first three iterations and falling back to Picard
//! whenever the Newton linearization is indefinite or its step is rejected.
//! Linearizations (never the residual) are regularized with delta_newton in
//! the (delta + tau^2) factors so degenerate gradients stay factorable;
//! 1/tau-type factors in the residual are guarded by tau_floor. Dirichlet
//! values are imposed bitwise: constrained entries are copied, never solved
//! for.

use thiserror::Error;

use crate::constitutive::{ConductivityKind, ConductivityModel, ModelError};
use crate::linalg::{LinalgError, SymBandMatrix};
use crate::mesh::{gradient_per_triangle, Field, Mesh, MeshError};

/// Guard for tau^(p-2) factors with p < 2 in the augmented residual.
pub const TAU_FLOOR: f64 = 1e-12;
/// Linearization-only regularization of (delta + tau^2) factors.
pub const DELTA_NEWTON: f64 = 1e-10;
/// Armijo sufficient-decrease constant.
const ARMIJO_C: f64 = 1e-4;
/// Maximum step halvings in the line search.
const MAX_HALVINGS: u32 = 30;
/// Picard iterations before Newton takes over.
const PICARD_WARMUP: usize = 3;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error("model error: {0}")]
    Model(#[from] ModelError),
    #[error("singular linearization: {context}: {source}")]
    Singular {
        context: String,
        #[source]
        source: LinalgError,
    },
    #[error("non-finite residual at iteration {iteration}")]
    NonFiniteResidual { iteration: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

/// One nonlinear solve's outcome. `converged` implies
/// `residual_norm <= tol`; callers decide how to treat failures.
#[derive(Clone, Debug)]
pub struct NonlinearSolveReport {
    pub iterations: usize,
    pub residual_norm: f64,
    pub converged: bool,
    /// Accepted line-search factors, one per iteration.
    pub damping_history: Vec<f64>,
    /// Residual max-norm before the first step and after each accepted step.
    pub residual_history: Vec<f64>,
}

/// Potential problem on a fixed mesh with frozen temperature field.
#[derive(Clone, Copy)]
pub struct PotentialProblem<'a> {
    pub mesh: &'a Mesh,
    pub model: &'a ConductivityModel,
    /// Temperature the conductivity is evaluated at (triangle means).
    pub temperature: &'a Field,
    /// Full-length field; only entries at Dirichlet vertices are read.
    pub dirichlet_values: &'a Field,
    pub eps: f64,
}

impl<'a> PotentialProblem<'a> {
    fn validate(&self) -> Result<(), SolveError> {
        if self.temperature.len() != self.mesh.n_vertices() {
            return Err(MeshError::SizeMismatch {
                expected: self.mesh.n_vertices(),
                got: self.temperature.len(),
            }
            .into());
        }
        if self.dirichlet_values.len() != self.mesh.n_vertices() {
            return Err(MeshError::SizeMismatch {
                expected: self.mesh.n_vertices(),
                got: self.dirichlet_values.len(),
            }
            .into());
        }
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(SolveError::InvalidArgument(format!(
                "eps must be finite and nonnegative, got {}",
                self.eps
            )));
        }
        self.temperature.check_finite()?;
        Ok(())
    }
}

/// Free-vertex numbering: Dirichlet vertices are excluded from the solved
/// system, preserving mesh order (so the band never widens).
struct FreeMap {
    free_of_vertex: Vec<Option<usize>>,
    vertex_of_free: Vec<usize>,
}

impl FreeMap {
    fn new(mesh: &Mesh) -> Self {
        let mut free_of_vertex = vec![None; mesh.n_vertices()];
        let mut vertex_of_free = Vec::new();
        for v in 0..mesh.n_vertices() {
            if !mesh.is_dirichlet_vertex(v) {
                free_of_vertex[v] = Some(vertex_of_free.len());
                vertex_of_free.push(v);
            }
        }
        FreeMap {
            free_of_vertex,
            vertex_of_free,
        }
    }

    fn n_free(&self) -> usize {
        self.vertex_of_free.len()
    }
}

/// Exact residual coefficient a(u, tau) = eps-term + sigma(u, tau). The
/// eps-term vanishes at tau = 0 by definition of the augmentation.
fn residual_coefficient(model: &ConductivityModel, u: f64, tau: f64, eps: f64) -> f64 {
    let eps_term = if eps > 0.0 && tau > 0.0 {
        let guarded = if model.p() < 2.0 { tau.max(TAU_FLOOR) } else { tau };
        eps * guarded.powf(model.p() - 2.0)
    } else {
        0.0
    };
    eps_term + model.sigma(u, tau)
}

/// Linearization coefficients (a, b) such that the Jacobian block on a
/// triangle is a*I + b * grad phi (x) grad phi. Regularized with
/// DELTA_NEWTON so they stay finite and positive definite at degenerate
/// gradients (a + b tau^2 > 0 for p > 1).
fn jacobian_coefficients(model: &ConductivityModel, u: f64, tau: f64, eps: f64) -> (f64, f64) {
    let p = model.p();
    let s0 = model.sigma0_at(u);
    let delta_sigma = match model.kind() {
        ConductivityKind::RegularizedPLap => model.delta(),
        ConductivityKind::PurePLap => DELTA_NEWTON,
    };
    let t2 = tau * tau;
    let base_sigma = delta_sigma + t2;
    let mut a = s0 * base_sigma.powf((p - 2.0) / 2.0);
    let mut b = s0 * (p - 2.0) * base_sigma.powf((p - 4.0) / 2.0);
    if eps > 0.0 {
        let base_eps = DELTA_NEWTON + t2;
        a += eps * base_eps.powf((p - 2.0) / 2.0);
        b += eps * (p - 2.0) * base_eps.powf((p - 4.0) / 2.0);
    }
    (a, b)
}

struct ResidualWorkspace {
    grads: Vec<[f64; 2]>,
    u_means: Vec<f64>,
}

fn triangle_data(problem: &PotentialProblem, phi: &Field) -> Result<ResidualWorkspace, SolveError> {
    let grads = gradient_per_triangle(problem.mesh, phi)?;
    let u_means = problem.temperature.triangle_means(problem.mesh);
    Ok(ResidualWorkspace { grads, u_means })
}

fn residual_from_workspace(
    problem: &PotentialProblem,
    ws: &ResidualWorkspace,
    free: &FreeMap,
) -> Vec<f64> {
    let mesh = problem.mesh;
    let mut r = vec![0.0; free.n_free()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = ws.grads[t];
        let tau = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let coef = residual_coefficient(problem.model, ws.u_means[t], tau, problem.eps);
        let area = mesh.triangle_area(t);
        let basis = mesh.basis_gradients(t);
        for a in 0..3 {
            if let Some(fi) = free.free_of_vertex[tri[a]] {
                r[fi] += area * coef * (g[0] * basis[a][0] + g[1] * basis[a][1]);
            }
        }
    }
    r
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Residual over the free vertices and its max-norm. An all-Dirichlet mesh
/// yields an empty vector with norm zero.
pub fn assemble_residual(
    problem: &PotentialProblem,
    phi: &Field,
) -> Result<(Vec<f64>, f64), SolveError> {
    problem.validate()?;
    if phi.len() != problem.mesh.n_vertices() {
        return Err(MeshError::SizeMismatch {
            expected: problem.mesh.n_vertices(),
            got: phi.len(),
        }
        .into());
    }
    let free = FreeMap::new(problem.mesh);
    let ws = triangle_data(problem, phi)?;
    let r = residual_from_workspace(problem, &ws, &free);
    let norm = max_abs(&r);
    Ok((r, norm))
}

/// Residual rows at every vertex, Dirichlet ones included, with the same
/// coefficient as the solve that produced `phi`. Summing rows over a
/// Dirichlet segment gives the terminal current through it; all rows sum to
/// zero structurally.
pub fn unconstrained_residual(
    problem: &PotentialProblem,
    phi: &Field,
) -> Result<Vec<f64>, SolveError> {
    problem.validate()?;
    let mesh = problem.mesh;
    let ws = triangle_data(problem, phi)?;
    let mut r = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = ws.grads[t];
        let tau = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let coef = residual_coefficient(problem.model, ws.u_means[t], tau, problem.eps);
        let area = mesh.triangle_area(t);
        let basis = mesh.basis_gradients(t);
        for a in 0..3 {
            r[tri[a]] += area * coef * (g[0] * basis[a][0] + g[1] * basis[a][1]);
        }
    }
    Ok(r)
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum StepKind {
    Picard,
    Newton,
}

fn assemble_step_matrix(
    problem: &PotentialProblem,
    ws: &ResidualWorkspace,
    free: &FreeMap,
    kind: StepKind,
) -> SymBandMatrix {
    let mesh = problem.mesh;
    let mut mat = SymBandMatrix::zeros(free.n_free(), mesh.band_half_width());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let g = ws.grads[t];
        let tau = (g[0] * g[0] + g[1] * g[1]).sqrt();
        let (a_c, b_c) = jacobian_coefficients(problem.model, ws.u_means[t], tau, problem.eps);
        let (a_c, b_c) = match kind {
            StepKind::Newton => (a_c, b_c),
            StepKind::Picard => (a_c, 0.0),
        };
        let area = mesh.triangle_area(t);
        let basis = mesh.basis_gradients(t);
        for a in 0..3 {
            let Some(fa) = free.free_of_vertex[tri[a]] else {
                continue;
            };
            for b in 0..3 {
                let Some(fb) = free.free_of_vertex[tri[b]] else {
                    continue;
                };
                if fb > fa {
                    continue;
                }
                let gb = basis[b];
                let ga = basis[a];
                let mut k = a_c * (ga[0] * gb[0] + ga[1] * gb[1]);
                if b_c != 0.0 {
                    k += b_c * (g[0] * ga[0] + g[1] * ga[1]) * (g[0] * gb[0] + g[1] * gb[1]);
                }
                mat.add(fa, fb, area * k);
            }
        }
    }
    mat
}

fn apply_step(phi: &Field, free: &FreeMap, direction: &[f64], s: f64) -> Field {
    let mut out = phi.clone();
    for (fi, &v) in free.vertex_of_free.iter().enumerate() {
        out.values[v] += s * direction[fi];
    }
    out
}

/// Discrete p = 2 harmonic extension of the Dirichlet data with unit
/// coefficient; the default initial guess.
pub fn harmonic_extension(mesh: &Mesh, dirichlet_values: &Field) -> Result<Field, SolveError> {
    if dirichlet_values.len() != mesh.n_vertices() {
        return Err(MeshError::SizeMismatch {
            expected: mesh.n_vertices(),
            got: dirichlet_values.len(),
        }
        .into());
    }
    let free = FreeMap::new(mesh);
    let mut phi = Field::constant(mesh, 0.0);
    for v in 0..mesh.n_vertices() {
        if mesh.is_dirichlet_vertex(v) {
            phi.values[v] = dirichlet_values.values[v];
        }
    }
    if free.n_free() == 0 {
        return Ok(phi);
    }
    let mut mat = SymBandMatrix::zeros(free.n_free(), mesh.band_half_width());
    let mut rhs = vec![0.0; free.n_free()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        let basis = mesh.basis_gradients(t);
        for a in 0..3 {
            let Some(fa) = free.free_of_vertex[tri[a]] else {
                continue;
            };
            let ga = basis[a];
            for b in 0..3 {
                let gb = basis[b];
                let k = area * (ga[0] * gb[0] + ga[1] * gb[1]);
                match free.free_of_vertex[tri[b]] {
                    Some(fb) => {
                        if fb <= fa {
                            mat.add(fa, fb, k);
                        }
                    }
                    None => rhs[fa] -= k * phi.values[tri[b]],
                }
            }
        }
    }
    let factor = mat.ldlt().map_err(|e| SolveError::Singular {
        context: "harmonic extension stiffness".to_string(),
        source: e,
    })?;
    let x = factor.solve(&rhs).map_err(|e| SolveError::Singular {
        context: "harmonic extension solve".to_string(),
        source: e,
    })?;
    for (fi, &v) in free.vertex_of_free.iter().enumerate() {
        phi.values[v] = x[fi];
    }
    Ok(phi)
}

/// Damped Newton/Picard iteration from `initial_guess`. Dirichlet entries of
/// the returned field equal `dirichlet_values` bitwise. Non-convergence
/// within `max_iter` is reported, not an error.
pub fn solve(
    problem: &PotentialProblem,
    initial_guess: &Field,
    tol: f64,
    max_iter: usize,
) -> Result<(Field, NonlinearSolveReport), SolveError> {
    problem.validate()?;
    if !(tol > 0.0) {
        return Err(SolveError::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    if initial_guess.len() != problem.mesh.n_vertices() {
        return Err(MeshError::SizeMismatch {
            expected: problem.mesh.n_vertices(),
            got: initial_guess.len(),
        }
        .into());
    }
    let mesh = problem.mesh;
    let free = FreeMap::new(mesh);
    let mut phi = initial_guess.clone();
    for v in 0..mesh.n_vertices() {
        if mesh.is_dirichlet_vertex(v) {
            phi.values[v] = problem.dirichlet_values.values[v];
        }
    }

    let mut ws = triangle_data(problem, &phi)?;
    let mut r = residual_from_workspace(problem, &ws, &free);
    let mut rn = max_abs(&r);
    if !rn.is_finite() {
        return Err(SolveError::NonFiniteResidual { iteration: 0 });
    }
    let mut residual_history = vec![rn];
    let mut damping_history = Vec::new();
    let mut converged = rn <= tol;
    let mut iterations = 0;

    while !converged && iterations < max_iter {
        let mut kind = if iterations < PICARD_WARMUP {
            StepKind::Picard
        } else {
            StepKind::Newton
        };
        let mut accepted: Option<(Field, ResidualWorkspace, Vec<f64>, f64, f64)> = None;
        loop {
            let matrix = assemble_step_matrix(problem, &ws, &free, kind);
            let factor = match matrix.ldlt() {
                Ok(f) => f,
                Err(e) => {
                    if kind == StepKind::Newton {
                        kind = StepKind::Picard;
                        continue;
                    }
                    return Err(SolveError::Singular {
                        context: format!("Picard linearization at iteration {iterations}"),
                        source: e,
                    });
                }
            };
            let neg_r: Vec<f64> = r.iter().map(|x| -x).collect();
            let direction = factor.solve(&neg_r).map_err(|e| SolveError::Singular {
                context: format!("step solve at iteration {iterations}"),
                source: e,
            })?;

            let mut s = 1.0;
            for _ in 0..=MAX_HALVINGS {
                let trial = apply_step(&phi, &free, &direction, s);
                let trial_ws = triangle_data(problem, &trial)?;
                let trial_r = residual_from_workspace(problem, &trial_ws, &free);
                let trial_rn = max_abs(&trial_r);
                if !trial_rn.is_finite() {
                    return Err(SolveError::NonFiniteResidual {
                        iteration: iterations + 1,
                    });
                }
                if trial_rn <= (1.0 - ARMIJO_C * s) * rn {
                    accepted = Some((trial, trial_ws, trial_r, trial_rn, s));
                    break;
                }
                s *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            if kind == StepKind::Newton {
                kind = StepKind::Picard;
                continue;
            }
            break;
        }
        let Some((new_phi, new_ws, new_r, new_rn, s)) = accepted else {
            // Line search exhausted for every available direction.
            break;
        };
        phi = new_phi;
        ws = new_ws;
        r = new_r;
        rn = new_rn;
        damping_history.push(s);
        residual_history.push(rn);
        iterations += 1;
        converged = rn <= tol;
    }

    phi.check_finite()?;
    Ok((
        phi,
        NonlinearSolveReport {
            iterations,
            residual_norm: rn,
            converged,
            damping_history,
            residual_history,
        },
    ))
}

/// Full solve policy: p = 2 harmonic extension as the initial guess, then
/// continuation in the exponent in steps of 0.5 whenever |p - 2| > 1, then
/// the target solve.
pub fn solve_with_continuation(
    problem: &PotentialProblem,
    tol: f64,
    max_iter: usize,
) -> Result<(Field, NonlinearSolveReport), SolveError> {
    problem.validate()?;
    let mut guess = harmonic_extension(problem.mesh, problem.dirichlet_values)?;
    let p_target = problem.model.p();
    if (p_target - 2.0).abs() > 1.0 {
        let mut stops = Vec::new();
        let step = if p_target > 2.0 { 0.5 } else { -0.5 };
        let mut p = 2.0 + step;
        while (p_target - p) * step.signum() > 1e-12 {
            stops.push(p);
            p += step;
        }
        for p_k in stops {
            let model_k = problem.model.with_exponent(p_k)?;
            let sub = PotentialProblem {
                model: &model_k,
                ..*problem
            };
            let (phi_k, _) = solve(&sub, &guess, tol.max(1e-8), max_iter)?;
            guess = phi_k;
        }
    }
    solve(problem, &guess, tol, max_iter)
}
