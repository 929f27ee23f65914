//! Backward Euler step for the nonlinear heat equation with a Robin
//! boundary everywhere:
//!
//!   du/dt - div(kappa(u) grad u) = f  in Omega,
//!   kappa(u) grad u . n + g (u - h) = rho  on the whole boundary,
//!
//! with rho an optional inhomogeneity used by manufactured solutions.
//! P1 elements with a lumped mass matrix, trapezoid quadrature for the
//! boundary term (so the Robin matrix is diagonal), and one triangle-mean
//! source value per triangle:
//!
//!   (M/dt + K(kappa) + g B) u_new = M/dt u_old + F + g B h 1 + B rho.
//!
//! The kappa dependence is resolved by Picard iteration on the solved
//! iterate, exiting when successive solutions agree to `picard_tol` in the
//! max norm. Every row of K sums to zero, so testing against z = 1 yields
//! the discrete balance identity exactly; diagnostics recompute it
//! independently.

use thiserror::Error;

use crate::constitutive::HeatModel;
use crate::linalg::{LinalgError, SymBandMatrix};
use crate::mesh::{Field, Mesh, MeshError};

#[derive(Debug, Error)]
pub enum HeatError {
    #[error("mesh error: {0}")]
    Mesh(#[from] MeshError),
    #[error("singular heat system: {0}")]
    Singular(#[from] LinalgError),
    #[error("{0}")]
    InvalidArgument(String),
}

/// Picard outcome for one backward Euler step.
#[derive(Clone, Copy, Debug)]
pub struct PicardReport {
    pub iterations: usize,
    /// Max-norm distance between the last two iterates.
    pub last_diff: f64,
    pub converged: bool,
}

/// One implicit step's data. `source` holds one mean value of f per
/// triangle; `robin_source` holds the optional per-vertex boundary
/// inhomogeneity rho (interior entries are ignored).
#[derive(Clone, Copy)]
pub struct HeatStepProblem<'a> {
    pub mesh: &'a Mesh,
    pub heat: &'a HeatModel,
    pub u_old: &'a Field,
    pub dt: f64,
    pub source: &'a [f64],
    pub robin_source: Option<&'a [f64]>,
}

impl<'a> HeatStepProblem<'a> {
    fn validate(&self) -> Result<(), HeatError> {
        if self.u_old.len() != self.mesh.n_vertices() {
            return Err(MeshError::SizeMismatch {
                expected: self.mesh.n_vertices(),
                got: self.u_old.len(),
            }
            .into());
        }
        if self.source.len() != self.mesh.n_triangles() {
            return Err(MeshError::SizeMismatch {
                expected: self.mesh.n_triangles(),
                got: self.source.len(),
            }
            .into());
        }
        if let Some(rho) = self.robin_source {
            if rho.len() != self.mesh.n_vertices() {
                return Err(MeshError::SizeMismatch {
                    expected: self.mesh.n_vertices(),
                    got: rho.len(),
                }
                .into());
            }
            if rho.iter().any(|x| !x.is_finite()) {
                return Err(HeatError::InvalidArgument(
                    "robin_source contains a non-finite entry".to_string(),
                ));
            }
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(HeatError::InvalidArgument(format!(
                "dt must be positive and finite, got {}",
                self.dt
            )));
        }
        if self.source.iter().any(|x| !x.is_finite()) {
            return Err(HeatError::InvalidArgument(
                "source contains a non-finite entry".to_string(),
            ));
        }
        self.u_old.check_finite()?;
        Ok(())
    }
}

/// Lumped load vector F_i = sum_{T ni i} |T| f_T / 3.
pub fn lumped_load(mesh: &Mesh, source: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; mesh.n_vertices()];
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let share = mesh.triangle_area(t) * source[t] / 3.0;
        for &v in tri {
            f[v] += share;
        }
    }
    f
}

fn assemble_system(
    problem: &HeatStepProblem,
    kappa_means: &[f64],
    mass: &[f64],
    robin_weights: &[f64],
) -> SymBandMatrix {
    let mesh = problem.mesh;
    let g = problem.heat.g;
    let mut mat = SymBandMatrix::zeros(mesh.n_vertices(), mesh.band_half_width());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let area = mesh.triangle_area(t);
        let k = kappa_means[t];
        let basis = mesh.basis_gradients(t);
        for a in 0..3 {
            let ga = basis[a];
            for b in 0..3 {
                if tri[b] > tri[a] {
                    continue;
                }
                let gb = basis[b];
                mat.add(tri[a], tri[b], area * k * (ga[0] * gb[0] + ga[1] * gb[1]));
            }
        }
    }
    for v in 0..mesh.n_vertices() {
        mat.add(v, v, mass[v] / problem.dt + g * robin_weights[v]);
    }
    mat
}

/// One backward Euler step. Non-convergence of the Picard loop within
/// `max_picard` is reported, not an error; the last iterate is returned.
pub fn heat_step(
    problem: &HeatStepProblem,
    picard_tol: f64,
    max_picard: usize,
) -> Result<(Field, PicardReport), HeatError> {
    problem.validate()?;
    if !(picard_tol > 0.0) {
        return Err(HeatError::InvalidArgument(format!(
            "picard_tol must be positive, got {picard_tol}"
        )));
    }
    if max_picard == 0 {
        return Err(HeatError::InvalidArgument(
            "max_picard must be at least 1".to_string(),
        ));
    }
    let mesh = problem.mesh;
    let heat = problem.heat;
    let mass = mesh.lumped_mass();
    let robin_weights = mesh.boundary_lumped_weights();
    let load = lumped_load(mesh, problem.source);

    let mut rhs_base = vec![0.0; mesh.n_vertices()];
    for v in 0..mesh.n_vertices() {
        rhs_base[v] = mass[v] / problem.dt * problem.u_old.values[v]
            + load[v]
            + heat.g * robin_weights[v] * heat.h;
        if let Some(rho) = problem.robin_source {
            rhs_base[v] += robin_weights[v] * rho[v];
        }
    }

    let (kappa_lo, kappa_hi) = heat.kappa_bounds();
    let kappa_is_constant = kappa_lo == kappa_hi;

    let mut iterate = problem.u_old.clone();
    let mut report = PicardReport {
        iterations: 0,
        last_diff: f64::INFINITY,
        converged: false,
    };
    for it in 1..=max_picard {
        let means = iterate.triangle_means(mesh);
        let kappa_means: Vec<f64> = means.iter().map(|&u| heat.kappa_at(u)).collect();
        let matrix = assemble_system(problem, &kappa_means, &mass, &robin_weights);
        let factor = matrix.ldlt()?;
        let solved = factor.solve(&rhs_base)?;
        let candidate = Field {
            values: solved,
        };
        report.iterations = it;
        if kappa_is_constant {
            report.last_diff = 0.0;
            report.converged = true;
            iterate = candidate;
            break;
        }
        if it > 1 {
            let diff = Field::max_norm_diff(&candidate, &iterate);
            report.last_diff = diff;
            iterate = candidate;
            if diff <= picard_tol {
                report.converged = true;
                break;
            }
        } else {
            iterate = candidate;
        }
    }
    iterate.check_finite()?;
    Ok((iterate, report))
}

/// Scalar shadow of one step, built from the same assembled sums the full
/// system uses: with V = sum m_i, S = sum b_i, F = sum F_i, R = sum b_i
/// rho_i, the spatially constant mode c obeys
///
///   (V/dt + g S) c_new = V/dt c + F + g S h + R.
#[derive(Clone, Copy, Debug)]
pub struct ConstantModeStep {
    pub volume: f64,
    pub boundary_measure: f64,
    pub source_total: f64,
    pub robin_total: f64,
    pub dt: f64,
    pub g: f64,
    pub h: f64,
}

impl ConstantModeStep {
    pub fn from_problem(problem: &HeatStepProblem) -> Result<Self, HeatError> {
        problem.validate()?;
        let mass = problem.mesh.lumped_mass();
        let robin_weights = problem.mesh.boundary_lumped_weights();
        let load = lumped_load(problem.mesh, problem.source);
        let robin_total = match problem.robin_source {
            Some(rho) => robin_weights.iter().zip(rho).map(|(b, r)| b * r).sum(),
            None => 0.0,
        };
        Ok(ConstantModeStep {
            volume: mass.iter().sum(),
            boundary_measure: robin_weights.iter().sum(),
            source_total: load.iter().sum(),
            robin_total,
            dt: problem.dt,
            g: problem.heat.g,
            h: problem.heat.h,
        })
    }

    pub fn advance(&self, c: f64) -> f64 {
        let lhs = self.volume / self.dt + self.g * self.boundary_measure;
        let rhs = self.volume / self.dt * c
            + self.source_total
            + self.g * self.boundary_measure * self.h
            + self.robin_total;
        rhs / lhs
    }

    /// Fixed point of `advance`: h + (F + R) / (g S).
    pub fn steady_value(&self) -> f64 {
        self.h + (self.source_total + self.robin_total) / (self.g * self.boundary_measure)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::{AlphaShape, TempShape};
    use crate::mesh::{build_mesh, integrate_volume, Rect, Side};

    fn square_mesh(n: usize) -> Mesh {
        build_mesh(n, n, Rect::unit_square(), &[Side::Left, Side::Right]).unwrap()
    }

    fn plain_heat(g: f64, h: f64) -> HeatModel {
        HeatModel::new(TempShape::constant(1.0), g, h, AlphaShape::Constant { value: 1.0 })
            .unwrap()
    }

    #[test]
    fn ambient_state_is_a_fixed_point() {
        let mesh = square_mesh(8);
        let heat = plain_heat(2.0, 0.7);
        let u_old = Field::constant(&mesh, 0.7);
        let source = vec![0.0; mesh.n_triangles()];
        let problem = HeatStepProblem {
            mesh: &mesh,
            heat: &heat,
            u_old: &u_old,
            dt: 0.5,
            source: &source,
            robin_source: None,
        };
        let (u_new, report) = heat_step(&problem, 1e-10, 20).unwrap();
        assert!(report.converged);
        assert!(Field::max_norm_diff(&u_new, &u_old) <= 1e-13);
    }

    #[test]
    fn constant_mode_recursion_matches_hand_values() {
        // Unit square, g = 1, h = 0, f = 1, dt = 1/4:
        //   c_{k+1} = (4 c_k + 1) / 8, so c_1 = 1/8, c_2 = 3/16.
        let mesh = square_mesh(16);
        let heat = plain_heat(1.0, 0.0);
        let u_old = Field::constant(&mesh, 0.0);
        let source = vec![1.0; mesh.n_triangles()];
        let problem = HeatStepProblem {
            mesh: &mesh,
            heat: &heat,
            u_old: &u_old,
            dt: 0.25,
            source: &source,
            robin_source: None,
        };
        let mode = ConstantModeStep::from_problem(&problem).unwrap();
        assert!((mode.volume - 1.0).abs() <= 1e-13);
        assert!((mode.boundary_measure - 4.0).abs() <= 1e-13);
        assert!((mode.source_total - 1.0).abs() <= 1e-13);
        assert_eq!(mode.robin_total, 0.0);
        let c1 = mode.advance(0.0);
        let c2 = mode.advance(c1);
        assert!((c1 - 0.125).abs() <= 1e-14);
        assert!((c2 - 0.1875).abs() <= 1e-14);
        assert!((mode.steady_value() - 0.25).abs() <= 1e-14);
    }

    #[test]
    fn discrete_balance_identity_holds_per_step() {
        let mesh = square_mesh(10);
        let heat = plain_heat(1.5, 0.2);
        let u_old = Field::from_fn(&mesh, |x, y| 0.3 + x * x - 0.4 * y);
        let source: Vec<f64> = (0..mesh.n_triangles())
            .map(|t| {
                let c = mesh.triangle_centroid(t);
                1.0 + c[0] * c[1]
            })
            .collect();
        let dt = 0.1;
        let problem = HeatStepProblem {
            mesh: &mesh,
            heat: &heat,
            u_old: &u_old,
            dt,
            source: &source,
            robin_source: None,
        };
        let (u_new, _) = heat_step(&problem, 1e-12, 30).unwrap();
        let mass = mesh.lumped_mass();
        let robin = mesh.boundary_lumped_weights();
        let load = lumped_load(&mesh, &source);
        let mut residual = 0.0;
        for v in 0..mesh.n_vertices() {
            residual += mass[v] * (u_new.values[v] - u_old.values[v]) / dt
                + heat.g * robin[v] * (u_new.values[v] - heat.h)
                - load[v];
        }
        assert!(residual.abs() <= 1e-12, "balance residual {residual}");
    }

    #[test]
    fn minimum_principle_with_nonnegative_source() {
        let mesh = square_mesh(9);
        let heat = plain_heat(1.0, 0.1);
        let u_old = Field::from_fn(&mesh, |x, y| 0.3 + 0.2 * (5.0 * x).sin().abs() + 0.1 * y);
        let source: Vec<f64> = (0..mesh.n_triangles())
            .map(|t| mesh.triangle_centroid(t)[0].max(0.0))
            .collect();
        let problem = HeatStepProblem {
            mesh: &mesh,
            heat: &heat,
            u_old: &u_old,
            dt: 0.2,
            source: &source,
            robin_source: None,
        };
        let (u_new, _) = heat_step(&problem, 1e-10, 20).unwrap();
        for &v in &u_new.values {
            assert!(v >= 0.1 - 1e-12, "minimum principle violated: {v}");
        }
    }

    #[test]
    fn unforced_solution_decays_toward_ambient() {
        let mesh = square_mesh(8);
        let heat = plain_heat(1.0, 0.0);
        let mut u = Field::from_fn(&mesh, |x, y| 1.0 + (2.0 * x + y).cos().powi(2));
        let source = vec![0.0; mesh.n_triangles()];
        let mut last_l1 = f64::INFINITY;
        for _ in 0..20 {
            let problem = HeatStepProblem {
                mesh: &mesh,
                heat: &heat,
                u_old: &u,
                dt: 0.25,
                source: &source,
                robin_source: None,
            };
            let (u_new, report) = heat_step(&problem, 1e-10, 20).unwrap();
            assert!(report.converged);
            u = u_new;
            let means = u.triangle_means(&mesh);
            let abs_means: Vec<f64> = means.iter().map(|m| m.abs()).collect();
            let l1 = integrate_volume(&mesh, &abs_means).unwrap();
            assert!(l1 < last_l1, "L1 norm failed to decay: {last_l1} -> {l1}");
            last_l1 = l1;
        }
        assert!(last_l1 < 0.2);
    }

    #[test]
    fn picard_resolves_nonlinear_conductivity() {
        let mesh = square_mesh(8);
        let kappa = TempShape::AffineClamped {
            intercept: 0.5,
            slope: 1.0,
            lo: 0.5,
            hi: 5.0,
        };
        let heat = HeatModel::new(kappa, 1.0, 0.0, AlphaShape::Constant { value: 1.0 }).unwrap();
        let u_old = Field::from_fn(&mesh, |x, y| 2.0 * x * (1.0 - x) * y);
        let source = vec![3.0; mesh.n_triangles()];
        let problem = HeatStepProblem {
            mesh: &mesh,
            heat: &heat,
            u_old: &u_old,
            dt: 0.5,
            source: &source,
            robin_source: None,
        };
        let (_, report) = heat_step(&problem, 1e-11, 40).unwrap();
        assert!(report.converged);
        assert!(report.iterations >= 2);
        assert!(report.last_diff <= 1e-11);
    }

    #[test]
    fn robin_inhomogeneity_shifts_the_steady_state() {
        // With f = 0, h = 0 and rho = g * c on the boundary, the constant
        // state u = c is stationary.
        let mesh = square_mesh(8);
        let heat = plain_heat(3.0, 0.0);
        let c = 0.8;
        let u_old = Field::constant(&mesh, c);
        let source = vec![0.0; mesh.n_triangles()];
        let rho: Vec<f64> = vec![heat.g * c; mesh.n_vertices()];
        let problem = HeatStepProblem {
            mesh: &mesh,
            heat: &heat,
            u_old: &u_old,
            dt: 0.5,
            source: &source,
            robin_source: Some(&rho),
        };
        let (u_new, _) = heat_step(&problem, 1e-10, 20).unwrap();
        assert!(Field::max_norm_diff(&u_new, &u_old) <= 1e-13);
    }

    #[test]
    fn mismatched_source_length_is_rejected() {
        let mesh = square_mesh(4);
        let heat = plain_heat(1.0, 0.0);
        let u_old = Field::constant(&mesh, 0.0);
        let source = vec![0.0; 3];
        let problem = HeatStepProblem {
            mesh: &mesh,
            heat: &heat,
            u_old: &u_old,
            dt: 0.1,
            source: &source,
            robin_source: None,
        };
        assert!(matches!(
            heat_step(&problem, 1e-10, 5),
            Err(HeatError::Mesh(MeshError::SizeMismatch { .. }))
        ));
    }
}
