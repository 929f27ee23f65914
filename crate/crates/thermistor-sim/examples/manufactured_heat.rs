//! Convergence study for the heat stepper against the manufactured
//! solution u = e^{-t} cos(pi x) cos(pi y). The spatial sweep ties dt
//! to h^2 and should show second order; the temporal sweep compares
//! coarse marches on a fixed mesh with a fine march on the same mesh
//! and should show first order.

use thermistor_sim::verification::heat_mms_study;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = heat_mms_study()?;

    println!("spatial sweep (dt ~ h^2, error vs exact solution):");
    println!("{:>6} {:>8} {:>22}", "n", "steps", "L2 error");
    for (n, steps, e) in &report.spatial {
        println!("{n:>6} {steps:>8} {e:>22.12e}");
    }
    println!("observed spatial rate:  {:.4} (expect 2)", report.spatial_rate);

    println!();
    println!("temporal sweep (fixed 32 x 32 mesh, error vs fine march):");
    println!("{:>6} {:>22}", "steps", "L2 gap");
    for (steps, e) in &report.temporal {
        println!("{steps:>6} {e:>22.12e}");
    }
    println!("observed temporal rate: {:.4} (expect 1)", report.temporal_rate);
    Ok(())
}
