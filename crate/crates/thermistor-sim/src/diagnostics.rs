//! Structural diagnostics: the scalar functionals logged at every time
//! step, terminal currents through Dirichlet segments, the discrete
//! balance residual, and the randomized monotonicity suite.
//!
//! All volume functionals use the centroid rule (triangle means and
//! per-triangle gradients), boundary functionals the trapezoid rule, so
//! every column is reproducible from the persisted fields alone.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::constitutive::{
    plap_monotonicity_gap, plap_monotonicity_lower_bound, truncate_source, ConductivityModel,
    HeatModel,
};
use crate::heat::lumped_load;
use crate::mesh::{gradient_per_triangle, Field, Mesh, MeshError, Side};
use crate::potential::{unconstrained_residual, PotentialProblem, SolveError};

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error("potential residual error: {0}")]
    Solve(#[from] SolveError),
    #[error("{0}")]
    InvalidArgument(String),
}

/// One diagnostics record; serialized as one CSV row with 17 significant
/// digits per column and one trailing current column per Dirichlet segment.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRow {
    pub time: f64,
    /// integral of |u| (triangle means).
    pub l1_u: f64,
    /// lambda * integral of |grad u|^2 / (1 + |u|)^(1 + lambda).
    pub weighted_grad: f64,
    /// integral of |grad phi|^p.
    pub energy_p: f64,
    /// eps * integral of |grad phi|^p + integral of sigma |grad phi|^2.
    pub aug_energy: f64,
    /// integral of the (truncated) Joule source.
    pub joule: f64,
    /// g * boundary integral of (u - h).
    pub robin_flux: f64,
    /// Discrete balance identity defect for the step ending at `time`.
    pub balance_res: f64,
    /// Terminal current per Dirichlet segment, in canonical side order.
    pub currents: Vec<f64>,
}

/// Scalar functionals of a (phi, u) pair at one time level. `eps_operator`
/// enters the augmented energy and the current assembly; `eps_source`
/// truncates the Joule integrand. `balance_res` is left at zero for the
/// caller to fill in (it needs two consecutive temperature fields).
#[allow(clippy::too_many_arguments)]
pub fn estimate_functionals(
    mesh: &Mesh,
    phi: &Field,
    u: &Field,
    cond: &ConductivityModel,
    heat: &HeatModel,
    lambda: f64,
    eps_operator: f64,
    eps_source: f64,
    time: f64,
) -> Result<DiagnosticsRow, DiagnosticsError> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "lambda must lie in (0, 1), got {lambda}"
        )));
    }
    if !(eps_source >= 0.0) || !(eps_operator >= 0.0) {
        return Err(DiagnosticsError::InvalidArgument(
            "eps values must be nonnegative".to_string(),
        ));
    }
    let grad_phi = gradient_per_triangle(mesh, phi)?;
    let grad_u = gradient_per_triangle(mesh, u)?;
    let u_means = u.triangle_means(mesh);
    let p = cond.p();

    let mut l1_u = 0.0;
    let mut weighted_grad = 0.0;
    let mut energy_p = 0.0;
    let mut aug_energy = 0.0;
    let mut joule = 0.0;
    for t in 0..mesh.n_triangles() {
        let area = mesh.triangle_area(t);
        let um = u_means[t];
        let gp = grad_phi[t];
        let gu = grad_u[t];
        let tau = (gp[0] * gp[0] + gp[1] * gp[1]).sqrt();
        let gu2 = gu[0] * gu[0] + gu[1] * gu[1];
        l1_u += area * um.abs();
        weighted_grad += area * lambda * gu2 / (1.0 + um.abs()).powf(1.0 + lambda);
        let tau_p = tau.powf(p);
        energy_p += area * tau_p;
        let sigma = cond.sigma(um, tau);
        aug_energy += area * (eps_operator * tau_p + sigma * tau * tau);
        let c = mesh.triangle_centroid(t);
        let f = heat.alpha_at(c[0], c[1], time, um) * sigma * tau * tau;
        joule += area * truncate_source(f, eps_source);
    }

    let weights = mesh.boundary_lumped_weights();
    let mut robin_flux = 0.0;
    for v in 0..mesh.n_vertices() {
        robin_flux += heat.g * weights[v] * (u.values[v] - heat.h);
    }

    let currents = terminal_currents(mesh, cond, phi, u, eps_operator)?;

    Ok(DiagnosticsRow {
        time,
        l1_u,
        weighted_grad,
        energy_p,
        aug_energy,
        joule,
        robin_flux,
        balance_res: 0.0,
        currents,
    })
}

/// Terminal current through each Dirichlet segment: the sum of the
/// unconstrained residual rows over the segment's vertices, with the same
/// eps augmentation the solve used. Order matches
/// `mesh.dirichlet_segments()`. All currents sum to (near) zero because the
/// residual rows sum to zero identically.
pub fn terminal_currents(
    mesh: &Mesh,
    cond: &ConductivityModel,
    phi: &Field,
    u: &Field,
    eps: f64,
) -> Result<Vec<f64>, DiagnosticsError> {
    let problem = PotentialProblem {
        mesh,
        model: cond,
        temperature: u,
        dirichlet_values: phi,
        eps,
    };
    let rows = unconstrained_residual(&problem, phi)?;
    let currents = mesh
        .dirichlet_segments()
        .iter()
        .map(|(_, verts)| verts.iter().map(|&v| rows[v]).sum())
        .collect();
    Ok(currents)
}

/// Current through one specific Dirichlet side.
pub fn terminal_current(
    mesh: &Mesh,
    cond: &ConductivityModel,
    phi: &Field,
    u: &Field,
    eps: f64,
    side: Side,
) -> Result<f64, DiagnosticsError> {
    let segments = mesh.dirichlet_segments();
    let index = segments
        .iter()
        .position(|(s, _)| *s == side)
        .ok_or_else(|| {
            DiagnosticsError::InvalidArgument(format!(
                "side {} carries no Dirichlet data",
                side.name()
            ))
        })?;
    Ok(terminal_currents(mesh, cond, phi, u, eps)?[index])
}

/// Defect of the discrete balance identity over one backward Euler step:
///
///   sum_i m_i (u_new - u_old)_i / dt
///     + g sum_i b_i (u_new_i - h) - sum_i F_i.
///
/// Zero to rounding for any solution of the step system, independent of
/// Picard convergence, because the stiffness rows sum to zero.
pub fn balance_residual(
    mesh: &Mesh,
    heat: &HeatModel,
    u_old: &Field,
    u_new: &Field,
    dt: f64,
    source: &[f64],
) -> Result<f64, DiagnosticsError> {
    if u_old.len() != mesh.n_vertices() || u_new.len() != mesh.n_vertices() {
        return Err(MeshError::SizeMismatch {
            expected: mesh.n_vertices(),
            got: u_old.len().max(u_new.len()),
        }
        .into());
    }
    if source.len() != mesh.n_triangles() {
        return Err(MeshError::SizeMismatch {
            expected: mesh.n_triangles(),
            got: source.len(),
        }
        .into());
    }
    if !(dt > 0.0) {
        return Err(DiagnosticsError::InvalidArgument(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mass = mesh.lumped_mass();
    let weights = mesh.boundary_lumped_weights();
    let load = lumped_load(mesh, source);
    let mut residual = 0.0;
    for v in 0..mesh.n_vertices() {
        residual += mass[v] * (u_new.values[v] - u_old.values[v]) / dt
            + heat.g * weights[v] * (u_new.values[v] - heat.h)
            - load[v];
    }
    Ok(residual)
}

/// Boundary trapezoid mean of a vertex field: sum b_i u_i / sum b_i with
/// the Robin weights b_i. The natural scalar reading of the boundary
/// state; at the discrete steady state of the constant-source problem it
/// equals h + |Omega| mean(f) / (g |dOmega|) exactly, by the balance
/// identity.
pub fn robin_weighted_boundary_mean(mesh: &Mesh, u: &Field) -> Result<f64, DiagnosticsError> {
    if u.len() != mesh.n_vertices() {
        return Err(MeshError::SizeMismatch {
            expected: mesh.n_vertices(),
            got: u.len(),
        }
        .into());
    }
    let weights = mesh.boundary_lumped_weights();
    let mut num = 0.0;
    let mut den = 0.0;
    for v in 0..mesh.n_vertices() {
        num += weights[v] * u.values[v];
        den += weights[v];
    }
    Ok(num / den)
}

/// Randomized monotonicity audit of one conductivity model.
#[derive(Clone, Copy, Debug)]
pub struct MonotonicityReport {
    pub samples: usize,
    /// Smallest sigma-field monotonicity gap observed (raw).
    pub min_gap: f64,
    /// Smallest normalized slack of the p-Laplacian gap over its sharp
    /// lower bound: (gap_p - bound) / (1 + bound).
    pub min_plap_margin: f64,
    /// Smallest normalized slack of the eps-augmented gap over eps times
    /// the p-Laplacian gap: (gap_eps - eps gap_p) / (1 + eps gap_p).
    pub min_eps_margin: f64,
}

/// Sample `n_samples` (u, xi, eta) triples with magnitudes spread over
/// [1e-8, 1e3] (plus exact-zero and exact-equal specials) and record the
/// worst observed margins. Deterministic for a fixed seed.
pub fn check_monotonicity_suite(
    model: &ConductivityModel,
    n_samples: usize,
    seed: u64,
) -> MonotonicityReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps_grid = [1e-3, 0.1, 1.0];
    let mut report = MonotonicityReport {
        samples: n_samples,
        min_gap: f64::INFINITY,
        min_plap_margin: f64::INFINITY,
        min_eps_margin: f64::INFINITY,
    };
    let sigma_eps_flux = |u: f64, v: [f64; 2], eps: f64| -> [f64; 2] {
        let tau = (v[0] * v[0] + v[1] * v[1]).sqrt();
        let s = model.sigma_eps(u, tau, eps);
        [s * v[0], s * v[1]]
    };
    for k in 0..n_samples {
        let u: f64 = rng.gen_range(-5.0..5.0);
        let draw = |rng: &mut ChaCha8Rng| -> [f64; 2] {
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let magnitude = 10f64.powf(rng.gen_range(-8.0..3.0));
            [magnitude * angle.cos(), magnitude * angle.sin()]
        };
        let mut xi = draw(&mut rng);
        let mut eta = draw(&mut rng);
        if k % 61 == 17 {
            xi = [0.0, 0.0];
        }
        if k % 73 == 29 {
            eta = xi;
        }

        let gap = model.monotonicity_gap(u, xi, eta);
        report.min_gap = report.min_gap.min(gap);

        let gap_p = plap_monotonicity_gap(model.p(), xi, eta);
        if model.p() > 1.0 {
            let bound = plap_monotonicity_lower_bound(model.p(), xi, eta);
            let margin = (gap_p - bound) / (1.0 + bound);
            report.min_plap_margin = report.min_plap_margin.min(margin);
        }

        for &eps in &eps_grid {
            let fx = sigma_eps_flux(u, xi, eps);
            let fe = sigma_eps_flux(u, eta, eps);
            let gap_eps =
                (fx[0] - fe[0]) * (xi[0] - eta[0]) + (fx[1] - fe[1]) * (xi[1] - eta[1]);
            let floor = eps * gap_p;
            let margin = (gap_eps - floor) / (1.0 + floor);
            report.min_eps_margin = report.min_eps_margin.min(margin);
        }
    }
    report
}
