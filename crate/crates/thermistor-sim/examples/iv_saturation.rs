//! Scalar current-voltage sweep for the saturating prototype
//! sigma(u, tau) = (1 + tau^2)^{-1/2}: the current I(V) = sigma V
//! increases monotonically and saturates at 1 as V grows, a bounded
//! current response despite unbounded voltage.

use thermistor_sim::verification::{iv_study, saturation_model};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let model = saturation_model()?;
    let voltages = [0.1, 1.0, 10.0, 100.0, 1e3, 1e4, 1e6];
    let report = iv_study(&model, 0.0, &voltages)?;

    println!("{:>12} {:>22} {:>14}", "V", "I(V)", "1 - I(V)");
    for point in &report.points {
        println!(
            "{:>12.1e} {:>22.16e} {:>14.6e}",
            point.voltage,
            point.current,
            1.0 - point.current
        );
    }
    println!();
    println!("monotone nondecreasing: {}", report.monotone_nondecreasing);
    println!("I(1)    = 1/sqrt(2) up to {:+.3e}", report.points[1].current - 0.5f64.sqrt());
    Ok(())
}
