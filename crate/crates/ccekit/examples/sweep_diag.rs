//! Diagnostic: sweep shares on the low-tau range at full replication count.

use ccekit::dgp::{ErrorConfig, PanelConfig};
use ccekit::montecarlo::{self, CriterionName, CriterionSpec};
use ccekit::selection::PenaltyKind;

fn main() {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(105);
    let reps: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(500);
    let spec = montecarlo::SweepSpec {
        n: 100,
        t: 100,
        tau_grid: vec![0.1, 0.2, 0.3, 0.4],
        dgp: PanelConfig::default(),
        criteria: vec![
            CriterionSpec { criterion: CriterionName::Mw, penalty: PenaltyKind::P1 },
            CriterionSpec { criterion: CriterionName::Dvs, penalty: PenaltyKind::P1 },
        ],
        error_modes: vec![ErrorConfig::weak_cs(), ErrorConfig::weak_time_cs()],
        reps,
        master_seed: seed,
        parallelism: 0,
    };
    for row in montecarlo::tau_sweep(&spec).unwrap() {
        println!(
            "seed={seed} tau={:.2} {} {}: share={:.4}",
            row.tau, row.error_mode, row.criterion, row.share_misselected
        );
    }
}
