//! Diagnostic: key acceptance targets under each innovation-scale reading.

use ccekit::dgp::{ErrorConfig, InnovationScale, PanelConfig};
use ccekit::montecarlo::{self, CellSpec, CriterionName, CriterionSpec};
use ccekit::selection::PenaltyKind;

fn main() {
    let scale_arg = std::env::args().nth(1).unwrap_or_else(|| "std_dev".into());
    let reps: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(400);
    let scale = match scale_arg.as_str() {
        "variance" => InnovationScale::Variance,
        "fixed" => InnovationScale::Fixed,
        _ => InnovationScale::StdDev,
    };
    let mut dgp = PanelConfig::default();
    dgp.factor.innovation_scale = scale;
    let criteria = vec![
        CriterionSpec { criterion: CriterionName::Mw, penalty: PenaltyKind::P1 },
        CriterionSpec { criterion: CriterionName::Mw, penalty: PenaltyKind::P2 },
        CriterionSpec { criterion: CriterionName::Dvs, penalty: PenaltyKind::P1 },
        CriterionSpec { criterion: CriterionName::Dvs, penalty: PenaltyKind::P2 },
    ];

    println!("scale = {scale_arg}, reps = {reps}");
    for (cell, label) in [
        (CellSpec { n: 10, t: 10, tau: 0.0 }, "targets 9.00/8.58/5.12/1.00"),
        (CellSpec { n: 100, t: 100, tau: 0.0 }, "targets 4.01/4.00/4.00/4.00"),
        (CellSpec { n: 100, t: 100, tau: 0.1 }, "targets 4.01/4.00/4.00/4.00"),
        (CellSpec { n: 100, t: 100, tau: 0.9 }, "targets 2.25/2.04/2.17/1.86"),
    ] {
        let res = montecarlo::run_cell(&cell, &dgp, &criteria, reps, 42, 0, 0).unwrap();
        let avg: Vec<String> =
            res.per_criterion.iter().map(|s| format!("{:.3}", s.avg_g)).collect();
        println!("  ({},{},tau={:.1}): {} ({label})", cell.n, cell.t, cell.tau, avg.join("/"));
    }

    let sweep = montecarlo::SweepSpec {
        n: 100,
        t: 100,
        tau_grid: vec![0.3, 0.4, 0.5],
        dgp: dgp.clone(),
        criteria: vec![
            CriterionSpec { criterion: CriterionName::Mw, penalty: PenaltyKind::P1 },
            CriterionSpec { criterion: CriterionName::Dvs, penalty: PenaltyKind::P1 },
        ],
        error_modes: vec![ErrorConfig::weak_cs()],
        reps,
        master_seed: 43,
        parallelism: 0,
    };
    for row in montecarlo::tau_sweep(&sweep).unwrap() {
        println!("  sweep tau={:.2} {}: share={:.4}", row.tau, row.criterion, row.share_misselected);
    }

    for tau in [0.0, 0.9] {
        let avg = montecarlo::er_average(
            &CellSpec { n: 200, t: 200, tau },
            &dgp,
            false,
            false,
            reps,
            44,
            0,
        )
        .unwrap();
        println!("  ER(X) 200/200 tau={tau}: {avg:.3}");
    }
}
