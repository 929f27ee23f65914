//! Coupled run on the unit square: current flows left to right, Joule
//! heating warms the material, and Robin cooling carries the heat out.
//! With p = 2, unit coefficients, and ambient 0, the dissipated power
//! is 1 and the boundary-weighted mean temperature settles at
//! power / (g |boundary|) = 1/4.

use thermistor_sim::coupling::run_simulation;
use thermistor_sim::diagnostics::robin_weighted_boundary_mean;
use thermistor_sim::verification::steady_self_heating_config;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = steady_self_heating_config(16, 0.1, 20.0)?;
    let run = run_simulation(&config, None)?;
    let stage = run.final_stage();

    println!(
        "{:>8} {:>14} {:>14} {:>14} {:>12}",
        "t", "joule", "robin_flux", "l1_u", "balance_res"
    );
    for row in stage.rows.iter().step_by(20) {
        println!(
            "{:>8.2} {:>14.8e} {:>14.8e} {:>14.8e} {:>12.3e}",
            row.time, row.joule, row.robin_flux, row.l1_u, row.balance_res
        );
    }

    let mean = robin_weighted_boundary_mean(&config.mesh, &stage.final_u)?;
    println!();
    println!("final boundary mean    = {mean:.12}");
    println!("expected steady value  = 0.25");
    println!("gap                    = {:+.3e}", mean - 0.25);
    Ok(())
}
