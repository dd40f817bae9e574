//! Desk calibration run: prints the key Monte Carlo cells next to their
//! published targets. Run with --release.

use ccekit::dgp::PanelConfig;
use ccekit::montecarlo::{
    self, CellSpec, CriterionName, CriterionSpec, RateConfig, RateStatistic,
};
use ccekit::selection::PenaltyKind;

fn main() {
    let reps: usize = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(500);
    let seed = 20_260_811u64;

    let dgp = PanelConfig::default(); // k = 8, m = 4, weak_cs
    let criteria = vec![
        CriterionSpec { criterion: CriterionName::Mw, penalty: PenaltyKind::P1 },
        CriterionSpec { criterion: CriterionName::Mw, penalty: PenaltyKind::P2 },
        CriterionSpec { criterion: CriterionName::Dvs, penalty: PenaltyKind::P1 },
        CriterionSpec { criterion: CriterionName::Dvs, penalty: PenaltyKind::P2 },
        CriterionSpec { criterion: CriterionName::DvsAdjusted, penalty: PenaltyKind::P1 },
        CriterionSpec { criterion: CriterionName::DvsAdjusted, penalty: PenaltyKind::P2 },
    ];

    let cells = [
        (CellSpec { n: 10, t: 10, tau: 0.0 }, [9.00, 8.58, 5.12, 1.00]),
        (CellSpec { n: 100, t: 100, tau: 0.0 }, [4.01, 4.00, 4.00, 4.00]),
        (CellSpec { n: 100, t: 100, tau: 0.1 }, [4.01, 4.00, 4.00, 4.00]),
        (CellSpec { n: 100, t: 100, tau: 0.9 }, [2.25, 2.04, 2.17, 1.86]),
        (CellSpec { n: 200, t: 200, tau: 0.9 }, [3.40, 3.22, 3.38, 3.18]),
    ];
    println!("cell: avg_g per criterion (target in parens), reps = {reps}");
    for (idx, (cell, targets)) in cells.iter().enumerate() {
        let start = std::time::Instant::now();
        let res = montecarlo::run_cell(cell, &dgp, &criteria, reps, seed, idx as u64, 0)
            .expect("cell run");
        print!("N={:>3} T={:>3} tau={:.1} |", cell.n, cell.t, cell.tau);
        for (j, s) in res.per_criterion.iter().enumerate() {
            let target = if j < 4 { format!("{:.2}", targets[j]) } else { "-".into() };
            print!(
                " {}/{}: {:.3} ({})",
                s.criterion.label(),
                s.penalty.label(),
                s.avg_g,
                target
            );
        }
        println!("  [{} failures, {:.1}s]", res.per_criterion[0].failures,
            start.elapsed().as_secs_f64());
    }

    // Figure 1 shape points
    println!("\nsweep shares (mw/p1 and dvs/p1), weak_cs:");
    let sweep = montecarlo::SweepSpec {
        n: 100,
        t: 100,
        tau_grid: vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.9],
        dgp: dgp.clone(),
        criteria: vec![
            CriterionSpec { criterion: CriterionName::Mw, penalty: PenaltyKind::P1 },
            CriterionSpec { criterion: CriterionName::Dvs, penalty: PenaltyKind::P1 },
        ],
        error_modes: vec![
            ccekit::dgp::ErrorConfig::weak_cs(),
            ccekit::dgp::ErrorConfig::weak_time_cs(),
        ],
        reps: reps / 2,
        master_seed: seed + 1,
        parallelism: 0,
    };
    for row in montecarlo::tau_sweep(&sweep).expect("sweep") {
        println!(
            "  tau={:.2} {} {}: share={:.3}",
            row.tau, row.error_mode, row.criterion, row.share_misselected
        );
    }

    // Oracle candidates at 200/200
    let mut oracle_dgp = dgp.clone();
    oracle_dgp.oracle_candidates = true;
    let res = montecarlo::run_cell(
        &CellSpec { n: 200, t: 200, tau: 0.0 },
        &oracle_dgp,
        &criteria[..4],
        reps.min(200),
        seed + 2,
        0,
        0,
    )
    .expect("oracle cell");
    print!("\noracle 200/200 tau=0:");
    for s in &res.per_criterion {
        print!(" {}/{}: {:.3}", s.criterion.label(), s.penalty.label(), s.avg_g);
    }
    println!(" (targets 4.00)");

    // ER averages
    for (tau, target) in [(0.0, "4.00"), (0.9, "1.78")] {
        let avg = montecarlo::er_average(
            &CellSpec { n: 200, t: 200, tau },
            &dgp,
            false,
            false,
            reps.min(300),
            seed + 3,
            0,
        )
        .expect("er");
        println!("ER(X) 200/200 tau={tau}: {avg:.3} (target {target})");
    }

    // Rate checks
    println!("\nrate checks (fitted vs theoretical slope):");
    for (stat, tau) in [
        (RateStatistic::Prop1Under, 0.0),
        (RateStatistic::Prop1Under, 0.5),
        (RateStatistic::Prop1Under, 0.9),
        (RateStatistic::Prop1Over, 0.5),
        (RateStatistic::LemA1, 0.5),
        (RateStatistic::CorA1, 0.5),
        (RateStatistic::LemA2, 0.5),
        (RateStatistic::CorA2, 0.5),
    ] {
        let cfg = RateConfig {
            n_fixed: 200,
            t_grid: vec![100, 200, 400, 800],
            tau,
            reps: 200,
            master_seed: seed + 4,
            dgp: dgp.clone(),
            parallelism: 0,
        };
        let start = std::time::Instant::now();
        match montecarlo::rate_check(stat, &cfg) {
            Ok(r) => println!(
                "  {} tau={:.1}: fitted {:+.3} theoretical {:+.3}  medians {:?}  [{:.1}s]",
                r.statistic.label(),
                tau,
                r.fitted_slope,
                r.theoretical_slope,
                r.medians.iter().map(|m| format!("{m:.3e}")).collect::<Vec<_>>(),
                start.elapsed().as_secs_f64()
            ),
            Err(e) => println!("  {} tau={tau}: ERROR {e}", stat.label()),
        }
    }
}
