//! Spatially constant cooling: with no source and a constant initial
//! temperature, each implicit step contracts the gap to ambient by the
//! exact factor (V/dt) / (V/dt + g S). The discrete march must match
//! that closed form to roundoff, decay monotonically, and never
//! undershoot the ambient temperature.

use thermistor_sim::heat::ConstantModeStep;
use thermistor_sim::verification::robin_decay_study;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (c0, g, h, dt, steps) = (1.0, 1.0, 0.0, 0.25, 40);
    let report = robin_decay_study(16, c0, g, h, dt, steps)?;

    println!("steps                = {}", report.steps);
    println!("max recursion defect = {:.3e}", report.max_recursion_defect);
    println!("monotone decay       = {}", report.monotone);
    println!("stays above ambient  = {}", report.stays_above_ambient);
    println!("final gap to ambient = {:.6e}", report.final_gap);

    let mode = ConstantModeStep {
        volume: 1.0,
        boundary_measure: 4.0,
        source_total: 0.0,
        robin_total: 0.0,
        dt,
        g,
        h,
    };
    let ratio = (1.0 / dt) / (1.0 / dt + g * 4.0);
    let mut c = c0;
    println!();
    println!("{:>5} {:>22} {:>22}", "k", "advance(c)", "closed form");
    for k in 1..=5 {
        c = mode.advance(c);
        let closed = h + (c0 - h) * ratio.powi(k);
        println!("{k:>5} {c:>22.16e} {closed:>22.16e}");
    }
    Ok(())
}
