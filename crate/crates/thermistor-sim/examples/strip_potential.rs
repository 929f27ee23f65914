//! Solve the strip problem (phi = 0 on the left edge, 1 on the right,
//! insulated top and bottom) where the exact potential is phi = x for
//! every exponent p and every eps, because |grad phi| is constant. The
//! solver should reproduce it to solver tolerance, and the terminal
//! currents should be -1 and +1.

use thermistor_sim::constitutive::{ConductivityModel, TempShape};
use thermistor_sim::diagnostics::terminal_currents;
use thermistor_sim::mesh::Field;
use thermistor_sim::potential::{solve_with_continuation, PotentialProblem};
use thermistor_sim::verification::{strip_exactness_study, strip_scenario};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let checks = strip_exactness_study(16, &[1.5, 2.0, 3.0, 4.0], &[0.0, 0.1], 1e-11)?;
    println!("{:>5} {:>6} {:>24} {:>10}", "p", "eps", "max |phi - x|", "converged");
    for c in &checks {
        println!("{:>5} {:>6} {:>24.16e} {:>10}", c.p, c.eps, c.error, c.converged);
    }

    let (mesh, phi_d) = strip_scenario(16)?;
    let model = ConductivityModel::regularized(TempShape::constant(1.0), 1.0, 3.0)?;
    let temperature = Field::from_fn(&mesh, |x, y| 0.5 * x + 0.2 * y);
    let problem = PotentialProblem {
        mesh: &mesh,
        model: &model,
        temperature: &temperature,
        dirichlet_values: &phi_d,
        eps: 0.0,
    };
    let (phi, report) = solve_with_continuation(&problem, 1e-11, 60)?;
    let currents = terminal_currents(&mesh, &model, &phi, &temperature, 0.0)?;
    println!();
    println!(
        "p = 3 solve: {} iterations, residual {:.3e}",
        report.iterations, report.residual_norm
    );
    println!("I_left  = {:+.16e}", currents[0]);
    println!("I_right = {:+.16e}", currents[1]);
    println!("sum     = {:+.3e}", currents[0] + currents[1]);
    Ok(())
}
