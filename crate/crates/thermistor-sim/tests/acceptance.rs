//! End-to-end acceptance gate. Each criterion prints one PASS/FAIL
//! line (run with `--nocapture` to see them all); the test fails if
//! any criterion does.

use thermistor_sim::coupling::run_simulation;
use thermistor_sim::io::write_diagnostics_csv;
use thermistor_sim::verification::{
    eps_continuation_study, heat_mms_study, iv_study, property_suite, robin_decay_study,
    saturation_model, steady_self_heating_config, steady_self_heating_study,
    strip_exactness_study,
};

struct Gate {
    lines: Vec<(String, bool, String)>,
}

impl Gate {
    fn new() -> Self {
        Gate { lines: Vec::new() }
    }

    fn record(&mut self, name: &str, passed: bool, detail: String) {
        let tag = if passed { "PASS" } else { "FAIL" };
        println!("{tag} {name}: {detail}");
        self.lines.push((name.to_string(), passed, detail));
    }

    fn finish(self) {
        let failed: Vec<_> = self
            .lines
            .iter()
            .filter(|(_, passed, _)| !passed)
            .collect();
        assert!(
            failed.is_empty(),
            "{} of {} acceptance criteria failed: {:?}",
            failed.len(),
            self.lines.len(),
            failed
        );
    }
}

#[test]
fn acceptance() {
    let mut gate = Gate::new();

    // 1. Strip exactness: phi = x reproduced to 1e-10 for each p and eps.
    {
        let checks = strip_exactness_study(16, &[1.5, 2.0, 3.0], &[0.0, 0.1], 1e-11)
            .expect("strip study runs");
        let worst = checks.iter().fold(0.0_f64, |m, c| m.max(c.error));
        let all_ok = checks.iter().all(|c| c.converged && c.error <= 1e-10);
        gate.record(
            "1-strip-exactness",
            all_ok,
            format!(
                "{} cases (p x eps grid), worst max|phi - x| = {worst:.3e} (tol 1e-10)",
                checks.len()
            ),
        );
    }

    // 2. Monotonicity suites: 1e5 samples per model, flux monotonicity
    // gap, p-Laplacian lower bound, and the strict eps-gap all hold to
    // a -1e-12 floor.
    {
        let report = property_suite(100_000, 42).expect("property suite runs");
        let ok = report.worst_gap >= -1e-12
            && report.worst_plap_margin >= -1e-12
            && report.worst_eps_margin >= -1e-12;
        gate.record(
            "2-monotonicity-suites",
            ok,
            format!(
                "{} models x 1e5 samples; worst gap {:.3e}, plap margin {:.3e}, \
                 eps margin {:.3e} (floor -1e-12)",
                report.entries.len(),
                report.worst_gap,
                report.worst_plap_margin,
                report.worst_eps_margin
            ),
        );
    }

    // 3. Balance law on the steady self-heating scenario, plus the
    // hand-derived steady boundary mean of 1/4.
    {
        let report = steady_self_heating_study(16, 0.1, 20.0).expect("steady study runs");
        let ok = report.max_balance_residual <= 1e-7
            && (report.final_boundary_mean - 0.25).abs() <= 1e-6;
        gate.record(
            "3-balance-law",
            ok,
            format!(
                "max |balance_res| = {:.3e} (tol 1e-7), boundary mean = {:.10} \
                 (expect 0.25 +/- 1e-6)",
                report.max_balance_residual, report.final_boundary_mean
            ),
        );
    }

    // 4. Manufactured-solution convergence orders for the heat stepper.
    {
        let report = heat_mms_study().expect("mms study runs");
        let ok = (report.spatial_rate - 2.0).abs() <= 0.3
            && (report.temporal_rate - 1.0).abs() <= 0.3;
        gate.record(
            "4-manufactured-rates",
            ok,
            format!(
                "spatial rate {:.4} (expect 2.0 +/- 0.3), temporal rate {:.4} \
                 (expect 1.0 +/- 0.3)",
                report.spatial_rate, report.temporal_rate
            ),
        );
    }

    // 5. Robin decay: the marched constant mode matches the scalar
    // implicit-Euler recursion to 1e-12 per step and decays to ambient
    // monotonically from above.
    {
        let report = robin_decay_study(16, 1.0, 1.0, 0.0, 0.25, 60).expect("decay study runs");
        let ok = report.max_recursion_defect <= 1e-12
            && report.monotone
            && report.stays_above_ambient;
        gate.record(
            "5-robin-decay",
            ok,
            format!(
                "max per-step defect = {:.3e} (tol 1e-12), monotone = {}, \
                 above ambient = {}, final gap = {:.3e}",
                report.max_recursion_defect,
                report.monotone,
                report.stays_above_ambient,
                report.final_gap
            ),
        );
    }

    // 6. eps-continuation at p = 3: consecutive stage endpoints approach
    // each other strictly, and the truncated source obeys its bound.
    {
        let report = eps_continuation_study(3.0, &[1.0, 0.1, 0.01, 0.001, 0.0])
            .expect("eps study runs");
        let ok = report.diffs_strictly_decreasing && report.truncation_defect <= 1e-12;
        let diffs: Vec<String> = report.stage_diffs.iter().map(|d| format!("{d:.2e}")).collect();
        gate.record(
            "6-eps-continuation",
            ok,
            format!(
                "stage gaps [{}] strictly decreasing = {}, truncation defect {:.3e} (tol 1e-12)",
                diffs.join(", "),
                report.diffs_strictly_decreasing,
                report.truncation_defect
            ),
        );
    }

    // 7. Saturation curve: frozen current values, monotone sweep, and
    // the saturation limit.
    {
        let model = saturation_model().expect("saturation model builds");
        let report = iv_study(&model, 0.0, &[1.0, 10.0, 1000.0, 1e6]).expect("iv study runs");
        let i = |k: usize| report.points[k].current;
        let frozen = [
            (0, 0.707_106_781_186_547_6),
            (1, 0.995_037_190_209_989_2),
            (2, 0.999_999_500_000_375_0),
        ];
        let frozen_ok = frozen.iter().all(|&(k, v)| (i(k) - v).abs() <= 1e-8);
        let ok = frozen_ok && report.monotone_nondecreasing && i(3) >= 1.0 - 1e-11;
        gate.record(
            "7-saturation-curve",
            ok,
            format!(
                "I(1) = {:.10}, I(10) = {:.10}, I(1000) = {:.10} (frozen +/- 1e-8), \
                 monotone = {}, I(1e6) = 1 - {:.2e} (need <= 1e-11)",
                i(0),
                i(1),
                i(2),
                report.monotone_nondecreasing,
                1.0 - i(3)
            ),
        );
    }

    // 8. Conservation and maximum principle along the two-terminal
    // self-heating run: terminal currents cancel at every step, and the
    // p = 2 potential stays inside its boundary range.
    {
        let config = steady_self_heating_config(16, 0.1, 20.0).expect("config builds");
        let run = run_simulation(&config, None).expect("coupled run completes");
        let stage = run.final_stage();
        let worst_sum = stage
            .rows
            .iter()
            .fold(0.0_f64, |m, r| m.max(r.currents.iter().sum::<f64>().abs()));
        let lo = stage
            .final_phi
            .values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let hi = stage
            .final_phi
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let ok = worst_sum <= 1e-8 && lo >= 0.0 && hi <= 1.0 + 1e-10;
        gate.record(
            "8-conservation-max-principle",
            ok,
            format!(
                "worst |sum of currents| over {} steps = {worst_sum:.3e} (tol 1e-8), \
                 phi range [{lo:.3e}, {hi:.10}] within [0, 1 + 1e-10]",
                stage.rows.len()
            ),
        );

        // 9. Estimate functionals stay finite, with the L1 norm under a
        // frozen regression cap (steady value is about 0.2903).
        let cap = 0.4;
        let finite = stage
            .rows
            .iter()
            .all(|r| r.l1_u.is_finite() && r.weighted_grad.is_finite());
        let max_l1 = stage.rows.iter().fold(0.0_f64, |m, r| m.max(r.l1_u));
        let max_wg = stage.rows.iter().fold(0.0_f64, |m, r| m.max(r.weighted_grad));
        let ok9 = finite && max_l1 <= cap;
        gate.record(
            "9-functionals-bounded",
            ok9,
            format!(
                "all rows finite = {finite}, max l1_u = {max_l1:.6} (cap {cap}), \
                 max weighted_grad = {max_wg:.6}"
            ),
        );
    }

    // 10. Determinism: the criterion-3 run writes bitwise-identical
    // diagnostics on repetition. The pipeline is single-threaded by
    // construction, so there is no scheduling variation to chase.
    {
        let dir = tempfile::tempdir().expect("tempdir");
        let mut bytes = Vec::new();
        for i in 0..2 {
            let config = steady_self_heating_config(16, 0.1, 20.0).expect("config builds");
            let run = run_simulation(&config, None).expect("coupled run completes");
            let path = dir.path().join(format!("diag_{i}.csv"));
            write_diagnostics_csv(&path, &run.final_stage().rows).expect("csv written");
            bytes.push(std::fs::read(&path).expect("csv readable"));
        }
        let ok = bytes[0] == bytes[1] && !bytes[0].is_empty();
        gate.record(
            "10-determinism",
            ok,
            format!(
                "two runs, {} bytes each, bitwise identical = {}",
                bytes[0].len(),
                bytes[0] == bytes[1]
            ),
        );
    }

    gate.finish();
}
