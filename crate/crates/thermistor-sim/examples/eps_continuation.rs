//! Continuation in the regularization parameter for a degenerate p = 3
//! problem: the schedule runs the full time interval once per eps, each
//! time from the same initial state. The max-norm distance between
//! consecutive stage endpoints shrinks as eps does, and the truncated
//! source never deviates from the raw one by more than eps f^2.

use thermistor_sim::verification::eps_continuation_study;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let schedule = [1.0, 0.1, 0.01, 0.001, 0.0];
    let report = eps_continuation_study(3.0, &schedule)?;

    println!("{:>10} {:>22}", "eps", "final aug energy");
    for (eps, e) in report.eps_values.iter().zip(&report.aug_energies) {
        println!("{eps:>10.0e} {e:>22.16e}");
    }

    println!();
    println!("consecutive stage endpoint gaps (max norm):");
    for (i, d) in report.stage_diffs.iter().enumerate() {
        println!(
            "  |u(eps = {:>6.0e}) - u(eps = {:>6.0e})| = {d:.6e}",
            report.eps_values[i],
            report.eps_values[i + 1]
        );
    }
    println!("strictly decreasing: {}", report.diffs_strictly_decreasing);
    println!(
        "worst truncation defect max(|f_eps - f| - eps f^2) = {:.3e}",
        report.truncation_defect
    );
    Ok(())
}
