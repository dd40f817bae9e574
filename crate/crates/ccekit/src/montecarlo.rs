//! Replication grids, aggregation, and empirical rate checks.
//!
//! A replication is one full pipeline: generate a panel, form candidates
//! (all averages for MW, regressor averages for DVS, or oracle candidates),
//! fit the pooled CCE regression when MW is requested, build the moment
//! caches, and run the exhaustive subset scan per criterion. Replications own
//! disjoint random streams derived from `(master_seed, cell, rep)`, so
//! results do not depend on how work is scheduled across threads.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cce::{self, CandidateSet};
use crate::dgp::{self, ErrorConfig, ErrorMode, InnovationScale, PanelConfig};
use crate::rng::RngStream;
use crate::selection::{self, CriterionKind, PenaltyKind, SubsetMask};
use crate::{Error, Result};

/// One grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSpec {
    pub n: usize,
    pub t: usize,
    pub tau: f64,
}

/// Criterion family, with the adjusted objective taking its tau from the
/// cell being run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriterionName {
    Mw,
    Dvs,
    DvsAdjusted,
}

impl CriterionName {
    fn kind(&self, tau: f64) -> CriterionKind {
        match self {
            CriterionName::Mw => CriterionKind::Mw,
            CriterionName::Dvs => CriterionKind::Dvs,
            CriterionName::DvsAdjusted => CriterionKind::DvsAdjusted { tau },
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            CriterionName::Mw => "mw",
            CriterionName::Dvs => "dvs",
            CriterionName::DvsAdjusted => "dvs_adjusted",
        }
    }
}

/// One (criterion, penalty) pair to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSpec {
    pub criterion: CriterionName,
    pub penalty: PenaltyKind,
}

/// Full experiment description for a selection table.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub cells: Vec<CellSpec>,
    /// DGP template; n, T and tau are overridden per cell.
    pub dgp: PanelConfig,
    pub criteria: Vec<CriterionSpec>,
    pub reps: usize,
    pub master_seed: u64,
    /// Worker threads; 0 uses the global pool.
    pub parallelism: usize,
}

/// Why a replication produced no selection for a criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RepFailure {
    /// The pooled CCE fit could not be computed.
    Estimation,
    /// Every subset was inadmissible.
    Selection,
}

/// Selection outcome of one replication for one criterion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RepOutcome {
    pub g_hat: usize,
    pub chosen: SubsetMask,
}

/// Run one replication; outcomes line up with `criteria`.
pub fn run_replication(
    cell: &CellSpec,
    dgp_template: &PanelConfig,
    criteria: &[CriterionSpec],
    rng: &mut RngStream,
) -> Result<Vec<std::result::Result<RepOutcome, RepFailure>>> {
    let cfg = dgp_template.with_cell(cell.n, cell.t, cell.tau);
    cfg.validate()?;
    let panel = dgp::generate(&cfg, rng)?;

    let needs_mw = criteria.iter().any(|c| c.criterion == CriterionName::Mw);
    let needs_dvs = criteria.iter().any(|c| c.criterion != CriterionName::Mw);

    let (mw_cands, dvs_cands): (CandidateSet, CandidateSet) = if cfg.oracle_candidates {
        let mw = dgp::oracle_candidates(&panel.f_true, cfg.k + 1, rng)?;
        let idx: Vec<usize> = (0..cfg.k).collect();
        let dvs = CandidateSet {
            mat: mw.mat.select_cols(&idx),
            labels: mw.labels[..cfg.k].to_vec(),
            source: mw.source,
        };
        (mw, dvs)
    } else {
        let mw = cce::cs_averages(&panel);
        let dvs = cce::regressor_candidates(&mw);
        (mw, dvs)
    };

    let fit = if needs_mw {
        match cce::cce_pooled(&panel, &mw_cands) {
            Ok(f) => Some(f),
            Err(Error::Estimation(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let cache_mw = match (&fit, needs_mw) {
        (Some(f), true) => Some(selection::build_cache(&panel, &mw_cands, Some(f))?),
        _ => None,
    };
    let cache_dvs = if needs_dvs {
        Some(selection::build_cache(&panel, &dvs_cands, None)?)
    } else {
        None
    };

    let mut outcomes = Vec::with_capacity(criteria.len());
    for spec in criteria {
        let outcome = match spec.criterion {
            CriterionName::Mw => match &cache_mw {
                None => Err(RepFailure::Estimation),
                Some(cache) => match selection::select(cache, CriterionKind::Mw, spec.penalty) {
                    Ok(res) => Ok(RepOutcome { g_hat: res.g_hat, chosen: res.chosen }),
                    Err(Error::Selection(_)) => Err(RepFailure::Selection),
                    Err(e) => return Err(e),
                },
            },
            CriterionName::Dvs | CriterionName::DvsAdjusted => {
                let cache = cache_dvs.as_ref().expect("DVS cache was built above");
                let kind = spec.criterion.kind(cell.tau);
                match selection::select(cache, kind, spec.penalty) {
                    Ok(res) => Ok(RepOutcome { g_hat: res.g_hat, chosen: res.chosen }),
                    Err(Error::Selection(_)) => Err(RepFailure::Selection),
                    Err(e) => return Err(e),
                }
            }
        };
        outcomes.push(outcome);
    }
    Ok(outcomes)
}

/// Aggregates for one criterion in one cell.
#[derive(Debug, Clone)]
pub struct CriterionCellStats {
    pub criterion: CriterionName,
    pub penalty: PenaltyKind,
    pub avg_g: f64,
    /// Share of successful replications with `g_hat != m`.
    pub share_misselected: f64,
    pub share_over: f64,
    pub share_under: f64,
    pub failures: usize,
    pub reps_done: usize,
    /// More than half the replications failed.
    pub unreliable: bool,
}

/// Monte Carlo aggregates for one cell.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: CellSpec,
    pub per_criterion: Vec<CriterionCellStats>,
}

fn with_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    if threads == 0 {
        f()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("rayon pool")
            .install(f)
    }
}

/// Run every replication of one cell and aggregate.
///
/// Replication seeds derive from `(master_seed, cell_index, rep)`; the
/// aggregation runs in replication order, so the result is identical for any
/// worker count.
pub fn run_cell(
    cell: &CellSpec,
    dgp_template: &PanelConfig,
    criteria: &[CriterionSpec],
    reps: usize,
    master_seed: u64,
    cell_index: u64,
    parallelism: usize,
) -> Result<CellResult> {
    if reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    let all: Vec<Result<Vec<std::result::Result<RepOutcome, RepFailure>>>> =
        with_pool(parallelism, || {
            (0..reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng =
                        RngStream::derive(master_seed, &[cell_index, rep as u64]);
                    run_replication(cell, dgp_template, criteria, &mut rng)
                })
                .collect()
        });

    let m = dgp_template.factor.m;
    let mut stats: Vec<(f64, usize, usize, usize, usize)> =
        vec![(0.0, 0, 0, 0, 0); criteria.len()]; // (sum_g, over, under, failures, done)
    for rep_result in all {
        let outcomes = rep_result?;
        for (j, outcome) in outcomes.into_iter().enumerate() {
            match outcome {
                Ok(o) => {
                    let s = &mut stats[j];
                    s.0 += o.g_hat as f64;
                    if o.g_hat > m {
                        s.1 += 1;
                    } else if o.g_hat < m {
                        s.2 += 1;
                    }
                    s.4 += 1;
                }
                Err(_) => stats[j].3 += 1,
            }
        }
    }

    let per_criterion = criteria
        .iter()
        .zip(stats)
        .map(|(spec, (sum_g, over, under, failures, done))| {
            let d = done as f64;
            CriterionCellStats {
                criterion: spec.criterion,
                penalty: spec.penalty,
                avg_g: if done > 0 { sum_g / d } else { f64::NAN },
                share_misselected: if done > 0 { (over + under) as f64 / d } else { f64::NAN },
                share_over: if done > 0 { over as f64 / d } else { f64::NAN },
                share_under: if done > 0 { under as f64 / d } else { f64::NAN },
                failures,
                reps_done: done,
                unreliable: failures * 2 > reps,
            }
        })
        .collect();
    Ok(CellResult { cell: *cell, per_criterion })
}

/// Run every cell of an experiment.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<CellResult>> {
    if spec.cells.is_empty() {
        return Err(Error::Config("experiment has no cells".into()));
    }
    spec.cells
        .iter()
        .enumerate()
        .map(|(idx, cell)| {
            run_cell(
                cell,
                &spec.dgp,
                &spec.criteria,
                spec.reps,
                spec.master_seed,
                idx as u64,
                spec.parallelism,
            )
        })
        .collect()
}

/// Flat output row for CSV emission.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub n: usize,
    pub t: usize,
    pub tau: f64,
    pub dgp_mode: String,
    pub criterion: String,
    pub penalty: String,
    pub avg_g: f64,
    pub share_misselected: f64,
    pub share_over: f64,
    pub share_under: f64,
    pub reps: usize,
    pub failures: usize,
    pub seed: u64,
    pub unreliable: bool,
}

/// Human-readable DGP mode tag for report rows.
pub fn dgp_mode_label(cfg: &PanelConfig) -> String {
    let mode = match cfg.errors.mode {
        ErrorMode::Iid => "iid",
        ErrorMode::WeakCs => "weak_cs",
        ErrorMode::WeakTimeCs => "weak_time_cs",
        ErrorMode::NonstationaryV => "nonstationary_v",
    };
    if cfg.oracle_candidates {
        format!("{mode}+oracle")
    } else {
        mode.to_string()
    }
}

/// Flatten cell results into report rows: one row per (cell, criterion), in
/// input order. Merging disjoint result sets is plain concatenation.
pub fn aggregate(results: &[CellResult], spec: &ExperimentSpec) -> Vec<ReportRow> {
    let mode = dgp_mode_label(&spec.dgp);
    let mut rows = Vec::new();
    for cell_result in results {
        for s in &cell_result.per_criterion {
            rows.push(ReportRow {
                n: cell_result.cell.n,
                t: cell_result.cell.t,
                tau: cell_result.cell.tau,
                dgp_mode: mode.clone(),
                criterion: s.criterion.label().to_string(),
                penalty: s.penalty.label().to_string(),
                avg_g: s.avg_g,
                share_misselected: s.share_misselected,
                share_over: s.share_over,
                share_under: s.share_under,
                reps: spec.reps,
                failures: s.failures,
                seed: spec.master_seed,
                unreliable: s.unreliable,
            });
        }
    }
    rows
}

/// Sweep description: one cell size, a tau grid, one or more error modes.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub n: usize,
    pub t: usize,
    pub tau_grid: Vec<f64>,
    pub dgp: PanelConfig,
    pub criteria: Vec<CriterionSpec>,
    pub error_modes: Vec<ErrorConfig>,
    pub reps: usize,
    pub master_seed: u64,
    pub parallelism: usize,
}

/// One sweep output point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub tau: f64,
    pub criterion: String,
    pub error_mode: String,
    pub share_misselected: f64,
}

/// Misselection shares along a tau grid for each error mode and criterion.
pub fn tau_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    if spec.tau_grid.iter().any(|t| !(0.0..1.0).contains(t)) {
        return Err(Error::Config("tau grid must lie within [0, 1)".into()));
    }
    let mut rows = Vec::new();
    for (mode_idx, errors) in spec.error_modes.iter().enumerate() {
        let mut dgp = spec.dgp.clone();
        dgp.errors = errors.clone();
        let mode_label = dgp_mode_label(&dgp);
        for (tau_idx, &tau) in spec.tau_grid.iter().enumerate() {
            let cell = CellSpec { n: spec.n, t: spec.t, tau };
            let cell_index = (mode_idx * spec.tau_grid.len() + tau_idx) as u64;
            let result = run_cell(
                &cell,
                &dgp,
                &spec.criteria,
                spec.reps,
                spec.master_seed,
                cell_index,
                spec.parallelism,
            )?;
            for s in &result.per_criterion {
                rows.push(SweepRow {
                    tau,
                    criterion: s.criterion.label().to_string(),
                    error_mode: mode_label.clone(),
                    share_misselected: s.share_misselected,
                });
            }
        }
    }
    Ok(rows)
}

/// Empirical rate statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateStatistic {
    /// DVS objective gap of an under-specified subset, det-ratio scale.
    Prop1Under,
    /// DVS objective gap of an over-specified subset, det-ratio scale.
    Prop1Over,
    /// |F' Ebar| / T^(1+tau) with persistent idiosyncratics.
    LemA1,
    /// |F' Ebar| / T^(1+tau) with time-uncorrelated idiosyncratics.
    CorA1,
    /// |F' E_i| / T^(1+tau) with persistent idiosyncratics.
    LemA2,
    /// |F' E_i| / T^(1+tau) with time-uncorrelated idiosyncratics.
    CorA2,
}

impl RateStatistic {
    pub fn label(&self) -> &'static str {
        match self {
            RateStatistic::Prop1Under => "prop1_under",
            RateStatistic::Prop1Over => "prop1_over",
            RateStatistic::LemA1 => "lem_a1",
            RateStatistic::CorA1 => "cor_a1",
            RateStatistic::LemA2 => "lem_a2",
            RateStatistic::CorA2 => "cor_a2",
        }
    }

    /// Slope of `ln median` against `ln T` the asymptotics predict.
    pub fn theoretical_slope(&self, tau: f64) -> f64 {
        match self {
            RateStatistic::Prop1Under => tau,
            RateStatistic::Prop1Over => -1.0,
            RateStatistic::LemA1 | RateStatistic::LemA2 => -tau / 2.0,
            RateStatistic::CorA1 | RateStatistic::CorA2 => -(1.0 + tau) / 2.0,
        }
    }
}

/// Rate experiment description.
#[derive(Debug, Clone)]
pub struct RateConfig {
    /// Cross-section size for the T-indexed statistics (Prop1Over couples
    /// N = T instead).
    pub n_fixed: usize,
    pub t_grid: Vec<usize>,
    pub tau: f64,
    pub reps: usize,
    pub master_seed: u64,
    /// Template for k, m and loading parameters; error structure and
    /// innovation scaling are overridden per statistic.
    pub dgp: PanelConfig,
    pub parallelism: usize,
}

/// Medians of one statistic along the T grid, plus the fitted log-log slope.
#[derive(Debug, Clone)]
pub struct RateResult {
    pub statistic: RateStatistic,
    pub tau: f64,
    pub t_grid: Vec<usize>,
    pub medians: Vec<f64>,
    pub fitted_slope: f64,
    pub theoretical_slope: f64,
}

fn median(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Least-squares slope of `ln y` on `ln x`.
pub fn fit_loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::Config("slope fit needs at least 3 grid points".into()));
    }
    if ys.iter().any(|&y| y <= 0.0 || !y.is_finite()) {
        return Err(Error::Config("slope fit needs strictly positive medians".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let mx = lx.iter().sum::<f64>() / lx.len() as f64;
    let my = ly.iter().sum::<f64>() / ly.len() as f64;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if sxx == 0.0 {
        return Err(Error::Config("degenerate T grid".into()));
    }
    Ok(sxy / sxx)
}

fn rate_panel_config(
    stat: RateStatistic,
    template: &PanelConfig,
    n: usize,
    t: usize,
    tau: f64,
) -> PanelConfig {
    let mut cfg = template.with_cell(n, t, tau);
    // The asymptotic statements are written for innovations whose variance
    // does not shrink with T; the persistent-idiosyncratic statistics reuse
    // the same recursion for v.
    cfg.factor.innovation_scale = InnovationScale::Fixed;
    cfg.oracle_candidates = false;
    cfg.errors = match stat {
        RateStatistic::LemA1 | RateStatistic::LemA2 => ErrorConfig::nonstationary_v(),
        _ => ErrorConfig::weak_cs(),
    };
    cfg
}

fn rate_rep_value(
    stat: RateStatistic,
    cfg: &PanelConfig,
    rng: &mut RngStream,
) -> Result<f64> {
    let panel = dgp::generate(cfg, rng)?;
    let m = cfg.factor.m;
    match stat {
        RateStatistic::Prop1Under | RateStatistic::Prop1Over => {
            let cands = cce::regressor_candidates(&cce::cs_averages(&panel));
            let cache = selection::build_cache(&panel, &cands, None)?;
            let m0 = SubsetMask::first(m);
            let diff = match stat {
                RateStatistic::Prop1Under => selection::objective_difference(
                    &cache,
                    CriterionKind::Dvs,
                    SubsetMask::first(m - 1),
                    m0,
                )?,
                _ => selection::objective_difference(
                    &cache,
                    CriterionKind::Dvs,
                    m0,
                    SubsetMask::first(m + 1),
                )?,
            };
            // Determinant-ratio excess: the scale on which the divergence
            // rates are polynomial in T.
            Ok(diff.exp_m1())
        }
        RateStatistic::LemA1 | RateStatistic::CorA1 => {
            let n = panel.x.len();
            let t = cfg.t_periods;
            let k = cfg.k;
            let inv_n = 1.0 / n as f64;
            let mut ebar = crate::matlin::Mat::zeros(t, k + 1);
            for i in 0..n {
                for tt in 0..t {
                    ebar[(tt, 0)] += panel.eps[(tt, i)] * inv_n;
                    for l in 0..k {
                        ebar[(tt, l + 1)] += panel.v[i][(tt, l)] * inv_n;
                    }
                }
            }
            let cross = panel.f_true.tr_mul(&ebar);
            Ok(cross.frob() / (t as f64).powf(1.0 + cfg.factor.tau))
        }
        RateStatistic::LemA2 | RateStatistic::CorA2 => {
            let t = cfg.t_periods;
            let k = cfg.k;
            let mut e0 = crate::matlin::Mat::zeros(t, k + 1);
            for tt in 0..t {
                e0[(tt, 0)] = panel.eps[(tt, 0)];
                for l in 0..k {
                    e0[(tt, l + 1)] = panel.v[0][(tt, l)];
                }
            }
            let cross = panel.f_true.tr_mul(&e0);
            Ok(cross.frob() / (t as f64).powf(1.0 + cfg.factor.tau))
        }
    }
}

/// Run one rate experiment: medians per grid point and the fitted slope.
pub fn rate_check(stat: RateStatistic, cfg: &RateConfig) -> Result<RateResult> {
    if cfg.t_grid.len() < 3 {
        return Err(Error::Config("rate check needs a T grid of at least 3 points".into()));
    }
    if cfg.reps == 0 {
        return Err(Error::Config("rate check needs at least one replication".into()));
    }
    let m = cfg.dgp.factor.m;
    if matches!(stat, RateStatistic::Prop1Under) && m < 2 {
        return Err(Error::Config("the under-specified gap needs m >= 2".into()));
    }
    if matches!(stat, RateStatistic::Prop1Over) && cfg.dgp.k <= m {
        return Err(Error::Config("the over-specified gap needs k > m".into()));
    }

    let mut medians = Vec::with_capacity(cfg.t_grid.len());
    for (t_idx, &t) in cfg.t_grid.iter().enumerate() {
        let n = if stat == RateStatistic::Prop1Over { t } else { cfg.n_fixed };
        let panel_cfg = rate_panel_config(stat, &cfg.dgp, n, t, cfg.tau);
        panel_cfg.validate()?;
        let values: Vec<Result<f64>> = with_pool(cfg.parallelism, || {
            (0..cfg.reps)
                .into_par_iter()
                .map(|rep| {
                    let mut rng = RngStream::derive(
                        cfg.master_seed,
                        &[stat as u64, t_idx as u64, rep as u64],
                    );
                    rate_rep_value(stat, &panel_cfg, &mut rng)
                })
                .collect()
        });
        let values = values.into_iter().collect::<Result<Vec<f64>>>()?;
        let med = median(values);
        if med <= 0.0 || !med.is_finite() {
            return Err(Error::Selection(format!(
                "degenerate median {med} for {} at T = {t}",
                stat.label()
            )));
        }
        medians.push(med);
    }

    let ts: Vec<f64> = cfg.t_grid.iter().map(|&t| t as f64).collect();
    let fitted_slope = fit_loglog_slope(&ts, &medians)?;
    Ok(RateResult {
        statistic: stat,
        tau: cfg.tau,
        t_grid: cfg.t_grid.clone(),
        medians,
        fitted_slope,
        theoretical_slope: stat.theoretical_slope(cfg.tau),
    })
}

/// Average eigenvalue-ratio count over replications of one cell.
///
/// `include_y` switches between the regressor-average and full-average
/// variants; `scaled` applies the inverse square root of the pooled scatter
/// before averaging.
pub fn er_average(
    cell: &CellSpec,
    dgp_template: &PanelConfig,
    scaled: bool,
    include_y: bool,
    reps: usize,
    master_seed: u64,
    parallelism: usize,
) -> Result<f64> {
    if reps == 0 {
        return Err(Error::Config("need at least one replication".into()));
    }
    let cfg = dgp_template.with_cell(cell.n, cell.t, cell.tau);
    cfg.validate()?;
    let counts: Vec<Result<usize>> = with_pool(parallelism, || {
        (0..reps)
            .into_par_iter()
            .map(|rep| {
                let mut rng = RngStream::derive(master_seed, &[0, rep as u64]);
                let panel = dgp::generate(&cfg, &mut rng)?;
                let all = cce::cs_averages(&panel);
                let cands = if include_y { all } else { cce::regressor_candidates(&all) };
                let sigma = if scaled {
                    Some(cce::pooled_scatter(&panel, include_y))
                } else {
                    None
                };
                selection::er_count(&cands, scaled, sigma.as_ref(), None)
            })
            .collect()
    });
    let counts = counts.into_iter().collect::<Result<Vec<usize>>>()?;
    Ok(counts.iter().sum::<usize>() as f64 / reps as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dgp::FactorConfig;

    fn small_spec() -> ExperimentSpec {
        ExperimentSpec {
            cells: vec![CellSpec { n: 8, t: 20, tau: 0.0 }, CellSpec { n: 10, t: 25, tau: 0.5 }],
            dgp: PanelConfig {
                k: 3,
                factor: FactorConfig { m: 2, ..Default::default() },
                ..Default::default()
            },
            criteria: vec![
                CriterionSpec { criterion: CriterionName::Mw, penalty: PenaltyKind::P1 },
                CriterionSpec { criterion: CriterionName::Dvs, penalty: PenaltyKind::P2 },
            ],
            reps: 6,
            master_seed: 77,
            parallelism: 1,
        }
    }

    #[test]
    fn replication_is_deterministic() {
        let spec = small_spec();
        let cell = spec.cells[0];
        let a = run_replication(
            &cell,
            &spec.dgp,
            &spec.criteria,
            &mut RngStream::derive(1, &[0, 0]),
        )
        .unwrap();
        let b = run_replication(
            &cell,
            &spec.dgp,
            &spec.criteria,
            &mut RngStream::derive(1, &[0, 0]),
        )
        .unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replication_outcomes_are_in_range() {
        let spec = small_spec();
        let cell = spec.cells[1];
        let out = run_replication(
            &cell,
            &spec.dgp,
            &spec.criteria,
            &mut RngStream::derive(2, &[0, 0]),
        )
        .unwrap();
        for o in out.into_iter().flatten() {
            assert!(o.g_hat >= 1 && o.g_hat <= 4);
        }
    }

    #[test]
    fn cell_shares_are_consistent() {
        let spec = small_spec();
        let res = run_cell(&spec.cells[0], &spec.dgp, &spec.criteria, 8, 3, 0, 1).unwrap();
        for s in &res.per_criterion {
            assert!((s.share_over + s.share_under - s.share_misselected).abs() < 1e-15);
            assert!(s.avg_g >= 1.0 && s.avg_g <= 4.0);
            assert_eq!(s.failures + s.reps_done, 8);
        }
    }

    #[test]
    fn cell_results_do_not_depend_on_worker_count() {
        let spec = small_spec();
        let single = run_cell(&spec.cells[0], &spec.dgp, &spec.criteria, 10, 9, 0, 1).unwrap();
        let multi = run_cell(&spec.cells[0], &spec.dgp, &spec.criteria, 10, 9, 0, 4).unwrap();
        for (a, b) in single.per_criterion.iter().zip(&multi.per_criterion) {
            assert_eq!(a.avg_g.to_bits(), b.avg_g.to_bits());
            assert_eq!(a.failures, b.failures);
            assert_eq!(a.share_misselected.to_bits(), b.share_misselected.to_bits());
        }
    }

    #[test]
    fn aggregate_rows_shape_and_merge() {
        let spec = small_spec();
        let results = run_experiment(&spec).unwrap();
        let rows = aggregate(&results, &spec);
        assert_eq!(rows.len(), spec.cells.len() * spec.criteria.len());

        // concatenating per-cell aggregations matches the joint one
        let first = aggregate(&results[..1], &spec);
        let second = aggregate(&results[1..], &spec);
        let merged: Vec<ReportRow> =
            first.into_iter().chain(second.into_iter()).collect();
        assert_eq!(merged, rows);
    }

    #[test]
    fn sweep_produces_one_row_per_point_and_series() {
        let spec = SweepSpec {
            n: 8,
            t: 20,
            tau_grid: vec![0.0, 0.4, 0.8],
            dgp: PanelConfig {
                k: 3,
                factor: FactorConfig { m: 2, ..Default::default() },
                ..Default::default()
            },
            criteria: vec![CriterionSpec {
                criterion: CriterionName::Dvs,
                penalty: PenaltyKind::P1,
            }],
            error_modes: vec![ErrorConfig::weak_cs(), ErrorConfig::weak_time_cs()],
            reps: 4,
            master_seed: 5,
            parallelism: 1,
        };
        let rows = tau_sweep(&spec).unwrap();
        assert_eq!(rows.len(), 3 * 2);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.share_misselected)));
    }

    #[test]
    fn slope_fit_recovers_exact_power_law() {
        let xs = [100.0_f64, 200.0, 400.0, 800.0];
        let ys: Vec<f64> = xs.iter().map(|x| 3.0 * f64::powf(*x, -0.75)).collect();
        let slope = fit_loglog_slope(&xs, &ys).unwrap();
        assert!((slope + 0.75).abs() < 1e-12);
    }

    #[test]
    fn slope_fit_rejects_short_or_degenerate_input() {
        assert!(fit_loglog_slope(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(fit_loglog_slope(&[1.0, 2.0, 3.0], &[1.0, 0.0, 2.0]).is_err());
    }

    #[test]
    fn theoretical_slopes_echo_the_formulas() {
        let tau = 0.5;
        assert_eq!(RateStatistic::Prop1Under.theoretical_slope(tau), 0.5);
        assert_eq!(RateStatistic::Prop1Over.theoretical_slope(tau), -1.0);
        assert_eq!(RateStatistic::LemA1.theoretical_slope(tau), -0.25);
        assert_eq!(RateStatistic::CorA1.theoretical_slope(tau), -0.75);
        assert_eq!(RateStatistic::CorA2.theoretical_slope(tau), -0.75);
    }

    #[test]
    fn rate_check_rejects_short_grid() {
        let cfg = RateConfig {
            n_fixed: 10,
            t_grid: vec![20, 40],
            tau: 0.5,
            reps: 2,
            master_seed: 1,
            dgp: PanelConfig {
                k: 3,
                factor: FactorConfig { m: 2, ..Default::default() },
                ..Default::default()
            },
            parallelism: 1,
        };
        assert!(rate_check(RateStatistic::CorA1, &cfg).is_err());
    }

    #[test]
    fn rate_check_small_smoke() {
        let cfg = RateConfig {
            n_fixed: 12,
            t_grid: vec![20, 40, 80],
            tau: 0.5,
            reps: 8,
            master_seed: 11,
            dgp: PanelConfig {
                k: 3,
                factor: FactorConfig { m: 2, ..Default::default() },
                ..Default::default()
            },
            parallelism: 1,
        };
        let res = rate_check(RateStatistic::CorA1, &cfg).unwrap();
        assert_eq!(res.medians.len(), 3);
        assert!(res.medians.iter().all(|m| *m > 0.0));
        assert_eq!(res.theoretical_slope, -0.75);
        assert!(res.fitted_slope.is_finite());
    }
}
