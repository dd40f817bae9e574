//! Diagnostic: over/under composition of misselection near the transition.

use ccekit::dgp::PanelConfig;
use ccekit::montecarlo::{self, CellSpec, CriterionName, CriterionSpec};
use ccekit::selection::PenaltyKind;

fn main() {
    let reps: usize = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(500);
    let dgp = PanelConfig::default();
    let criteria = vec![
        CriterionSpec { criterion: CriterionName::Mw, penalty: PenaltyKind::P1 },
        CriterionSpec { criterion: CriterionName::Dvs, penalty: PenaltyKind::P1 },
    ];
    for tau in [0.3, 0.35, 0.4, 0.45, 0.5] {
        let cell = CellSpec { n: 100, t: 100, tau };
        let res = montecarlo::run_cell(&cell, &dgp, &criteria, reps, 4242, 0, 0).unwrap();
        for s in &res.per_criterion {
            println!(
                "tau={tau:.2} {}: mis={:.3} over={:.3} under={:.3} avg_g={:.3}",
                s.criterion.label(),
                s.share_misselected,
                s.share_over,
                s.share_under,
                s.avg_g
            );
        }
    }
}
