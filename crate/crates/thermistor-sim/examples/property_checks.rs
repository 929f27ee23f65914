//! Sampled structural checks on the conductivity flux across a zoo of
//! models: the monotonicity gap (sigma(u,|a|)a - sigma(u,|b|)b) . (a - b)
//! must be nonnegative, it must dominate an explicit p-Laplacian lower
//! bound, and the eps-regularized flux must widen the gap by at least
//! eps times that bound.

use thermistor_sim::verification::property_suite;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let report = property_suite(20_000, 7)?;

    println!(
        "{:<44} {:>13} {:>13} {:>13}",
        "model", "min gap", "plap margin", "eps margin"
    );
    for entry in &report.entries {
        println!(
            "{:<44} {:>13.3e} {:>13.3e} {:>13.3e}",
            entry.label,
            entry.report.min_gap,
            entry.report.min_plap_margin,
            entry.report.min_eps_margin
        );
    }
    println!();
    println!("worst gap over all models:    {:.3e}", report.worst_gap);
    println!("worst p-Laplacian margin:     {:.3e}", report.worst_plap_margin);
    println!("worst eps-gap margin:         {:.3e}", report.worst_eps_margin);
    println!("(margins are normalized; anything above -1e-12 is a pass)");
    Ok(())
}
