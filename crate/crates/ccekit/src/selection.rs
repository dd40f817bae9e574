//! Information criteria over candidate subsets and the eigenvalue-ratio
//! factor count.
//!
//! Both criteria have the form `V(M) + penalty(g)` where `V` is a log moment
//! of data projected on the orthogonal complement of the selected candidates:
//!
//! - MW: `ln( (NT)^-1 sum_i nu_i' M nu_i )` + `g * p`, with `nu_i` the pooled
//!   CCE residuals under the full candidate set;
//! - DVS: `ln det( (NT)^-1 sum_i X_i' M X_i )` + `g * k * p`;
//! - the adjusted DVS objective normalizes by `N T^(1+tau)` instead of `NT`.
//!
//! The scan is exhaustive over all `2^K - 1` nonempty subsets. A
//! [`MomentCache`] reduces each subset evaluation to `g x g` and `k x k`
//! work: with `G = C'C`, `a_i = X_i'C`, `b_i = C'nu_i`,
//!
//! ```text
//! sum_i X_i' M_M X_i  = s_xx - sum_i (a_i q)(q'Gq)^+ (a_i q)'
//! sum_i nu_i' M_M nu_i = s_nn - tr( (q'Gq)^+ q' (sum_i b_i b_i') q )
//! ```
//!
//! so no T-length data is touched during the scan.

use serde::{Deserialize, Serialize};

use crate::cce::{CandidateSet, CceFit};
use crate::dgp::Panel;
use crate::matlin::{self, Mat};
use crate::{Error, Result};

/// Nonempty subset of candidate columns as a bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask(pub u32);

impl SubsetMask {
    /// Selected cardinality.
    pub fn g(&self) -> usize {
        self.0.count_ones() as usize
    }

    /// Indices of the selected columns, ascending.
    pub fn indices(&self) -> Vec<usize> {
        (0..32).filter(|j| self.0 & (1 << j) != 0).collect()
    }

    /// Mask selecting columns `0..g`.
    pub fn first(g: usize) -> SubsetMask {
        SubsetMask((1u32 << g) - 1)
    }
}

/// Penalty family from the criterion definitions:
/// `P1 = (N+T)/(NT) ln(NT/(N+T))`, `P2 = (N+T)/(NT) ln(min(N,T))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    P1,
    P2,
}

impl PenaltyKind {
    pub fn label(&self) -> &'static str {
        match self {
            PenaltyKind::P1 => "p1",
            PenaltyKind::P2 => "p2",
        }
    }
}

/// Per-unit-of-cardinality penalty weight.
pub fn penalty(kind: PenaltyKind, n_units: usize, t_periods: usize) -> f64 {
    let n = n_units as f64;
    let t = t_periods as f64;
    let lead = (n + t) / (n * t);
    match kind {
        PenaltyKind::P1 => lead * (n * t / (n + t)).ln(),
        PenaltyKind::P2 => lead * (n.min(t)).ln(),
    }
}

/// Which criterion to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CriterionKind {
    /// Residual-moment criterion on the full candidate set (K = k + 1).
    Mw,
    /// Log-determinant criterion on the regressor averages (K = k).
    Dvs,
    /// DVS with the objective normalized by `N T^(1+tau)` for the given tau.
    DvsAdjusted { tau: f64 },
}

impl CriterionKind {
    pub fn label(&self) -> &'static str {
        match self {
            CriterionKind::Mw => "mw",
            CriterionKind::Dvs => "dvs",
            CriterionKind::DvsAdjusted { .. } => "dvs_adjusted",
        }
    }

    fn needs_residuals(&self) -> bool {
        matches!(self, CriterionKind::Mw)
    }
}

/// Cross-moments that make subset evaluation independent of T.
#[derive(Debug, Clone)]
pub struct MomentCache {
    /// `C'C`, K x K.
    pub gram: Mat,
    /// `X_i'C`, one k x K block per unit.
    pub a_blocks: Vec<Mat>,
    /// `sum_i X_i'X_i`, k x k.
    pub s_xx: Mat,
    /// `C'nu_i` per unit, present when a fit was supplied.
    pub b_vecs: Option<Vec<Vec<f64>>>,
    /// `sum_i nu_i'nu_i`, present when a fit was supplied.
    pub s_nn: Option<f64>,
    pub n_units: usize,
    pub t_periods: usize,
    pub k: usize,
    pub k_cands: usize,
    /// `sum_i a_i[:,u] a_i[:,v]'` for every candidate pair, k x k each,
    /// indexed `u * K + v`.
    cross: Vec<Mat>,
    /// `sum_i b_i b_i'`, K x K.
    b_outer: Option<Mat>,
}

/// Precompute the cross-moment blocks for a candidate set; pass the pooled
/// fit whenever the MW criterion will be evaluated.
pub fn build_cache(
    panel: &Panel,
    candidates: &CandidateSet,
    fit: Option<&CceFit>,
) -> Result<MomentCache> {
    let t = panel.config.t_periods;
    let n = panel.x.len();
    let k = panel.config.k;
    let kc = candidates.mat.cols();
    if candidates.mat.rows() != t {
        return Err(Error::Dimension(format!(
            "candidate rows {} do not match panel T = {t}",
            candidates.mat.rows()
        )));
    }
    if let Some(f) = fit {
        if f.residuals.len() != n || f.residuals[0].len() != t {
            return Err(Error::Dimension("fit residuals do not match the panel".into()));
        }
    }

    let c = &candidates.mat;
    let gram = c.tr_mul(c);
    let mut s_xx = Mat::zeros(k, k);
    let mut a_blocks = Vec::with_capacity(n);
    for xi in &panel.x {
        s_xx = s_xx.add(&xi.tr_mul(xi));
        a_blocks.push(xi.tr_mul(c));
    }

    let mut cross = vec![Mat::zeros(k, k); kc * kc];
    for a in &a_blocks {
        for u in 0..kc {
            for v in 0..kc {
                let block = &mut cross[u * kc + v];
                for r in 0..k {
                    let aru = a[(r, u)];
                    if aru == 0.0 {
                        continue;
                    }
                    for s in 0..k {
                        block[(r, s)] += aru * a[(s, v)];
                    }
                }
            }
        }
    }

    let (b_vecs, s_nn, b_outer) = if let Some(f) = fit {
        let mut bs = Vec::with_capacity(n);
        let mut snn = 0.0;
        let mut outer = Mat::zeros(kc, kc);
        for resid in &f.residuals {
            let b = c.tr_mul_vec(resid);
            snn += resid.iter().map(|r| r * r).sum::<f64>();
            for u in 0..kc {
                for v in 0..kc {
                    outer[(u, v)] += b[u] * b[v];
                }
            }
            bs.push(b);
        }
        (Some(bs), Some(snn), Some(outer))
    } else {
        (None, None, None)
    };

    Ok(MomentCache {
        gram,
        a_blocks,
        s_xx,
        b_vecs,
        s_nn,
        n_units: n,
        t_periods: t,
        k,
        k_cands: kc,
        cross,
        b_outer,
    })
}

impl MomentCache {
    fn gram_sub(&self, idx: &[usize]) -> Mat {
        Mat::from_fn(idx.len(), idx.len(), |r, c| self.gram[(idx[r], idx[c])])
    }

    /// `sum_i X_i' M_M X_i` for the masked candidates.
    fn projected_xx(&self, idx: &[usize]) -> Mat {
        let g_sub = self.gram_sub(idx);
        let rtol = matlin::default_pinv_rtol(self.t_periods, idx.len());
        let g_inv = matlin::pinv(&g_sub, Some(rtol * rtol));
        let mut out = self.s_xx.clone();
        for (rr, &u) in idx.iter().enumerate() {
            for (cc, &v) in idx.iter().enumerate() {
                let w = g_inv[(rr, cc)];
                if w == 0.0 {
                    continue;
                }
                let block = &self.cross[u * self.k_cands + v];
                for r in 0..self.k {
                    for s in 0..self.k {
                        out[(r, s)] -= w * block[(r, s)];
                    }
                }
            }
        }
        out
    }

    /// `sum_i nu_i' M_M nu_i` for the masked candidates.
    fn projected_nn(&self, idx: &[usize]) -> Result<f64> {
        let (s_nn, b_outer) = match (self.s_nn, &self.b_outer) {
            (Some(s), Some(b)) => (s, b),
            _ => {
                return Err(Error::Config(
                    "MW evaluation requires a cache built with the pooled fit".into(),
                ))
            }
        };
        let g_sub = self.gram_sub(idx);
        let rtol = matlin::default_pinv_rtol(self.t_periods, idx.len());
        let g_inv = matlin::pinv(&g_sub, Some(rtol * rtol));
        let mut quad = 0.0;
        for (rr, &u) in idx.iter().enumerate() {
            for (cc, &v) in idx.iter().enumerate() {
                quad += g_inv[(rr, cc)] * b_outer[(u, v)];
            }
        }
        Ok(s_nn - quad)
    }
}

/// One admissible criterion evaluation.
#[derive(Debug, Clone, Copy)]
pub struct IcValue {
    /// Objective component `V`.
    pub objective: f64,
    /// Penalty component.
    pub penalty: f64,
    /// `objective + penalty`.
    pub total: f64,
}

/// Evaluate one subset. `Ok(None)` marks an inadmissible subset (singular
/// log-determinant argument or a non-positive residual moment); the caller
/// treats it as +infinity.
pub fn ic_value(
    cache: &MomentCache,
    crit: CriterionKind,
    pen: PenaltyKind,
    mask: SubsetMask,
) -> Result<Option<IcValue>> {
    if mask.0 == 0 {
        return Err(Error::Config("the empty subset is excluded from the search".into()));
    }
    if mask.g() > cache.k_cands {
        return Err(Error::Dimension(format!(
            "mask selects beyond the {} candidates",
            cache.k_cands
        )));
    }
    let idx = mask.indices();
    let g = idx.len() as f64;
    let nt = cache.n_units as f64 * cache.t_periods as f64;
    let p = penalty(pen, cache.n_units, cache.t_periods);

    let (objective, pen_term) = match crit {
        CriterionKind::Mw => {
            let quad = cache.projected_nn(&idx)?;
            if quad <= 0.0 || !quad.is_finite() {
                return Ok(None);
            }
            ((quad / nt).ln(), g * p)
        }
        CriterionKind::Dvs | CriterionKind::DvsAdjusted { .. } => {
            let moment = cache.projected_xx(&idx).scale(1.0 / nt);
            let sym = moment.add(&moment.t()).scale(0.5);
            let logdet = match matlin::logdet_pd(&sym, None) {
                Ok(v) => v,
                Err(Error::NotPositiveDefinite) => return Ok(None),
                Err(e) => return Err(e),
            };
            let shift = match crit {
                // ln det of the moment scaled by T^-tau per entry:
                // subtract k * tau * ln T.
                CriterionKind::DvsAdjusted { tau } => {
                    cache.k as f64 * tau * (cache.t_periods as f64).ln()
                }
                _ => 0.0,
            };
            (logdet - shift, g * cache.k as f64 * p)
        }
    };
    Ok(Some(IcValue { objective, penalty: pen_term, total: objective + pen_term }))
}

/// Table row of the exhaustive scan.
#[derive(Debug, Clone, Copy)]
pub struct IcRow {
    pub mask: SubsetMask,
    pub objective: f64,
    pub penalty: f64,
    pub total: f64,
}

/// Result of the exhaustive subset scan.
#[derive(Debug, Clone)]
pub struct SelectionResult {
    pub chosen: SubsetMask,
    pub g_hat: usize,
    pub criterion: CriterionKind,
    pub penalty_kind: PenaltyKind,
    /// Admissible subsets with their criterion values.
    pub table: Vec<IcRow>,
    /// Subsets rejected as singular.
    pub inadmissible_count: usize,
}

/// Exhaustive argmin over all nonempty subsets.
///
/// Ties break toward smaller cardinality, then smaller mask value, which
/// makes the scan a deterministic min-reduction.
pub fn select(
    cache: &MomentCache,
    crit: CriterionKind,
    pen: PenaltyKind,
) -> Result<SelectionResult> {
    if crit.needs_residuals() && cache.s_nn.is_none() {
        return Err(Error::Config("MW selection needs a cache built with the pooled fit".into()));
    }
    let kc = cache.k_cands;
    let mut table = Vec::with_capacity((1usize << kc) - 1);
    let mut inadmissible = 0usize;
    let mut best: Option<IcRow> = None;
    for bits in 1u32..(1u32 << kc) {
        let mask = SubsetMask(bits);
        match ic_value(cache, crit, pen, mask)? {
            Some(v) => {
                let row = IcRow { mask, objective: v.objective, penalty: v.penalty, total: v.total };
                let better = match &best {
                    None => true,
                    Some(b) => {
                        row.total < b.total
                            || (row.total == b.total
                                && (mask.g() < b.mask.g()
                                    || (mask.g() == b.mask.g() && mask.0 < b.mask.0)))
                    }
                };
                if better {
                    best = Some(row);
                }
                table.push(row);
            }
            None => inadmissible += 1,
        }
    }
    let best = best.ok_or_else(|| {
        Error::Selection("every candidate subset was inadmissible".into())
    })?;
    Ok(SelectionResult {
        chosen: best.mask,
        g_hat: best.mask.g(),
        criterion: crit,
        penalty_kind: pen,
        table,
        inadmissible_count: inadmissible,
    })
}

/// Objective difference `V(mask_a) - V(mask_b)`, penalties excluded.
pub fn objective_difference(
    cache: &MomentCache,
    crit: CriterionKind,
    mask_a: SubsetMask,
    mask_b: SubsetMask,
) -> Result<f64> {
    let a = ic_value(cache, crit, PenaltyKind::P1, mask_a)?
        .ok_or(Error::NotPositiveDefinite)?;
    let b = ic_value(cache, crit, PenaltyKind::P1, mask_b)?
        .ok_or(Error::NotPositiveDefinite)?;
    Ok(a.objective - b.objective)
}

/// Eigenvalue-growth-ratio factor count.
///
/// Takes the eigenvalues `l_1 >= ... >= l_K` of `T^-1 C'C` (with the
/// candidates pre-scaled by `sigma_hat^-1/2` when `scaled` is set) and
/// returns `argmax_j l_j / l_{j+1}` over `j <= j_max`; ratios whose
/// denominator has collapsed below `1e-12 l_1` are skipped as degenerate.
pub fn er_count(
    candidates: &CandidateSet,
    scaled: bool,
    sigma_hat: Option<&Mat>,
    j_max: Option<usize>,
) -> Result<usize> {
    let kc = candidates.mat.cols();
    if kc < 2 {
        return Err(Error::Config("eigenvalue ratio needs at least 2 candidates".into()));
    }
    let j_max = j_max.unwrap_or(kc - 1);
    if j_max < 1 || j_max > kc - 1 {
        return Err(Error::Config(format!("j_max must lie in [1, {}]", kc - 1)));
    }
    let c_eff = if scaled {
        let sigma = sigma_hat.ok_or_else(|| {
            Error::Config("scaled eigenvalue ratio requires the pooled scatter".into())
        })?;
        if sigma.rows() != kc || sigma.cols() != kc {
            return Err(Error::Dimension("scatter must be K x K".into()));
        }
        let root = matlin::inv_sqrt_sym(sigma)?;
        candidates.mat.mul(&root)
    } else {
        candidates.mat.clone()
    };
    let gram = c_eff.tr_mul(&c_eff).scale(1.0 / c_eff.rows() as f64);
    let eig = matlin::sym_eig(&gram)?;
    let lam = &eig.eigenvalues;
    let lead = lam[0].max(0.0);
    if lead <= 0.0 {
        return Err(Error::NotPositiveDefinite);
    }
    let mut best_j = 1usize;
    let mut best_ratio = f64::NEG_INFINITY;
    for j in 1..=j_max {
        let denom = lam[j];
        if denom <= 1e-12 * lead {
            continue;
        }
        let ratio = lam[j - 1] / denom;
        if ratio > best_ratio {
            best_ratio = ratio;
            best_j = j;
        }
    }
    Ok(best_j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cce::{self, CandidateSource};
    use crate::dgp::{self, FactorConfig, PanelConfig};
    use crate::rng::RngStream;

    fn small_panel(n: usize, t: usize, k: usize, m: usize, seed: u64) -> Panel {
        let cfg = PanelConfig {
            n_units: n,
            t_periods: t,
            k,
            factor: FactorConfig { m, ..Default::default() },
            ..Default::default()
        };
        dgp::generate(&cfg, &mut RngStream::new(seed)).unwrap()
    }

    /// T x T projection route, used as the oracle for the cache algebra.
    fn naive_objective(
        panel: &Panel,
        cands: &CandidateSet,
        fit: Option<&CceFit>,
        crit: CriterionKind,
        mask: SubsetMask,
    ) -> Option<f64> {
        let idx = mask.indices();
        let sub = cands.mat.select_cols(&idx);
        let m = matlin::annihilator(&sub);
        let nt = panel.x.len() as f64 * panel.config.t_periods as f64;
        match crit {
            CriterionKind::Mw => {
                let fit = fit.unwrap();
                let mut acc = 0.0;
                for r in &fit.residuals {
                    let mr = m.mul_vec(r);
                    acc += r.iter().zip(&mr).map(|(a, b)| a * b).sum::<f64>();
                }
                if acc <= 0.0 {
                    return None;
                }
                Some((acc / nt).ln())
            }
            CriterionKind::Dvs | CriterionKind::DvsAdjusted { .. } => {
                let kk = panel.config.k;
                let mut acc = Mat::zeros(kk, kk);
                for xi in &panel.x {
                    acc = acc.add(&xi.tr_mul(&m.mul(xi)));
                }
                let sym = acc.scale(1.0 / nt);
                let sym = sym.add(&sym.t()).scale(0.5);
                let ld = matlin::logdet_pd(&sym, None).ok()?;
                let shift = match crit {
                    CriterionKind::DvsAdjusted { tau } => {
                        kk as f64 * tau * (panel.config.t_periods as f64).ln()
                    }
                    _ => 0.0,
                };
                Some(ld - shift)
            }
        }
    }

    #[test]
    fn penalty_values() {
        let p = penalty(PenaltyKind::P1, 100, 100);
        assert!((p - 0.02 * 50.0_f64.ln()).abs() < 1e-12);
        assert!((p - 0.0782405).abs() < 1e-6);
        let p = penalty(PenaltyKind::P2, 100, 100);
        assert!((p - 0.02 * 100.0_f64.ln()).abs() < 1e-12);
        assert!((p - 0.0921034).abs() < 1e-6);
        let p = penalty(PenaltyKind::P2, 100, 10);
        assert!((p - 0.11 * 10.0_f64.ln()).abs() < 1e-12);
        assert!((p - 0.2532844).abs() < 1e-6);
    }

    #[test]
    fn cache_blocks_match_brute_force_products() {
        let panel = small_panel(2, 6, 2, 1, 5);
        let cands = cce::cs_averages(&panel);
        let fit = cce::cce_pooled(&panel, &cands).unwrap();
        let cache = build_cache(&panel, &cands, Some(&fit)).unwrap();

        let g = cands.mat.tr_mul(&cands.mat);
        assert!(cache.gram.sub(&g).max_abs() < 1e-12);
        for i in 0..2 {
            let a = panel.x[i].tr_mul(&cands.mat);
            assert!(cache.a_blocks[i].sub(&a).max_abs() < 1e-12);
            let b = cands.mat.tr_mul_vec(&fit.residuals[i]);
            for (got, want) in cache.b_vecs.as_ref().unwrap()[i].iter().zip(&b) {
                assert!((got - want).abs() < 1e-12);
            }
        }
        let sxx = panel.x[0].tr_mul(&panel.x[0]).add(&panel.x[1].tr_mul(&panel.x[1]));
        assert!(cache.s_xx.sub(&sxx).max_abs() < 1e-12);
        let snn: f64 = fit
            .residuals
            .iter()
            .map(|r| r.iter().map(|x| x * x).sum::<f64>())
            .sum();
        assert!((cache.s_nn.unwrap() - snn).abs() < 1e-10);
    }

    #[test]
    fn cache_gram_of_scaled_orthonormal_candidates() {
        let t = 9;
        let mat = Mat::from_fn(t, 3, |i, j| if i == j { (t as f64).sqrt() } else { 0.0 });
        let cands = CandidateSet {
            mat,
            labels: vec!["a".into(), "b".into(), "c".into()],
            source: CandidateSource::Oracle,
        };
        let panel = small_panel(2, t, 2, 1, 6);
        let cache = build_cache(&panel, &cands, None).unwrap();
        assert!(cache.gram.sub(&Mat::identity(3).scale(t as f64)).max_abs() < 1e-12);
    }

    #[test]
    fn cache_permutation_equivariance() {
        let panel = small_panel(3, 10, 2, 1, 7);
        let cands = cce::cs_averages(&panel);
        let cache = build_cache(&panel, &cands, None).unwrap();
        let perm = [2usize, 0, 1];
        let permuted = CandidateSet {
            mat: cands.mat.select_cols(&perm),
            labels: perm.iter().map(|&j| cands.labels[j].clone()).collect(),
            source: cands.source,
        };
        let cache_p = build_cache(&panel, &permuted, None).unwrap();
        for r in 0..3 {
            for c in 0..3 {
                assert!(
                    (cache_p.gram[(r, c)] - cache.gram[(perm[r], perm[c])]).abs() < 1e-12
                );
            }
        }
    }

    #[test]
    fn mw_zero_candidate_column_gives_identity_projection() {
        let panel = small_panel(3, 12, 2, 1, 8);
        let mut mat = cce::cs_averages(&panel).mat;
        for t in 0..12 {
            mat[(t, 0)] = 0.0;
        }
        let cands = CandidateSet {
            mat,
            labels: vec!["zero".into(), "xbar_1".into(), "xbar_2".into()],
            source: CandidateSource::CsAverages,
        };
        let full = cce::cs_averages(&panel);
        let fit = cce::cce_pooled(&panel, &full).unwrap();
        let cache = build_cache(&panel, &cands, Some(&fit)).unwrap();
        let v = ic_value(&cache, CriterionKind::Mw, PenaltyKind::P1, SubsetMask(0b001))
            .unwrap()
            .unwrap();
        let nt = 3.0 * 12.0;
        let expect = (cache.s_nn.unwrap() / nt).ln();
        assert!((v.objective - expect).abs() < 1e-12);
        assert!((v.penalty - penalty(PenaltyKind::P1, 3, 12)).abs() < 1e-12);
    }

    #[test]
    fn cache_matches_naive_projection_for_every_mask() {
        let panel = small_panel(2, 8, 2, 1, 9);
        let mw_cands = cce::cs_averages(&panel);
        let fit = cce::cce_pooled(&panel, &mw_cands).unwrap();
        let dvs_cands = cce::regressor_candidates(&mw_cands);
        let cache_mw = build_cache(&panel, &mw_cands, Some(&fit)).unwrap();
        let cache_dvs = build_cache(&panel, &dvs_cands, None).unwrap();

        for bits in 1u32..(1 << 3) {
            let mask = SubsetMask(bits);
            let got = ic_value(&cache_mw, CriterionKind::Mw, PenaltyKind::P1, mask).unwrap();
            let want = naive_objective(&panel, &mw_cands, Some(&fit), CriterionKind::Mw, mask);
            match (got, want) {
                (Some(v), Some(w)) => {
                    assert!((v.objective - w).abs() < 1e-10 * w.abs().max(1.0))
                }
                (None, None) => {}
                other => panic!("admissibility mismatch: {other:?}"),
            }
        }
        for bits in 1u32..(1 << 2) {
            let mask = SubsetMask(bits);
            let got = ic_value(&cache_dvs, CriterionKind::Dvs, PenaltyKind::P1, mask).unwrap();
            let want = naive_objective(&panel, &dvs_cands, None, CriterionKind::Dvs, mask);
            match (got, want) {
                (Some(v), Some(w)) => {
                    assert!((v.objective - w).abs() < 1e-10 * w.abs().max(1.0))
                }
                (None, None) => {}
                other => panic!("admissibility mismatch: {other:?}"),
            }
        }
    }

    #[test]
    fn adjusted_dvs_at_tau_zero_equals_dvs() {
        let panel = small_panel(4, 14, 3, 2, 10);
        let cands = cce::regressor_candidates(&cce::cs_averages(&panel));
        let cache = build_cache(&panel, &cands, None).unwrap();
        for bits in 1u32..(1 << 3) {
            let mask = SubsetMask(bits);
            let a = ic_value(&cache, CriterionKind::Dvs, PenaltyKind::P2, mask).unwrap();
            let b = ic_value(
                &cache,
                CriterionKind::DvsAdjusted { tau: 0.0 },
                PenaltyKind::P2,
                mask,
            )
            .unwrap();
            match (a, b) {
                (Some(x), Some(y)) => assert_eq!(x.total, y.total),
                (None, None) => {}
                other => panic!("admissibility mismatch: {other:?}"),
            }
        }
    }

    #[test]
    fn adjusted_dvs_shift_identity() {
        let panel = small_panel(4, 14, 3, 2, 11);
        let cands = cce::regressor_candidates(&cce::cs_averages(&panel));
        let cache = build_cache(&panel, &cands, None).unwrap();
        let tau = 0.7;
        let shift = 3.0 * tau * 14.0_f64.ln();
        for bits in 1u32..(1 << 3) {
            let mask = SubsetMask(bits);
            let plain = ic_value(&cache, CriterionKind::Dvs, PenaltyKind::P1, mask)
                .unwrap()
                .unwrap();
            let adj = ic_value(&cache, CriterionKind::DvsAdjusted { tau }, PenaltyKind::P1, mask)
                .unwrap()
                .unwrap();
            assert!((adj.objective - (plain.objective - shift)).abs() < 1e-10);
        }
    }

    #[test]
    fn select_single_candidate() {
        let panel = small_panel(3, 10, 2, 1, 12);
        let full = cce::cs_averages(&panel);
        let single = CandidateSet {
            mat: full.mat.select_cols(&[0]),
            labels: vec!["ybar".into()],
            source: CandidateSource::CsAverages,
        };
        let fit = cce::cce_pooled(&panel, &full).unwrap();
        let cache = build_cache(&panel, &single, Some(&fit)).unwrap();
        let res = select(&cache, CriterionKind::Mw, PenaltyKind::P1).unwrap();
        assert_eq!(res.chosen, SubsetMask(1));
        assert_eq!(res.g_hat, 1);
        assert_eq!(res.table.len(), 1);
    }

    #[test]
    fn select_tie_breaks_toward_smaller_mask() {
        // Duplicate columns make masks {0} and {1} score identically.
        let panel = small_panel(3, 10, 2, 1, 13);
        let avg = cce::cs_averages(&panel);
        let dup = CandidateSet {
            mat: avg.mat.select_cols(&[1, 1]),
            labels: vec!["xbar_1".into(), "xbar_1_copy".into()],
            source: CandidateSource::RegressorsOnly,
        };
        let cache = build_cache(&panel, &dup, None).unwrap();
        let res = select(&cache, CriterionKind::Dvs, PenaltyKind::P1).unwrap();
        assert_eq!(res.chosen, SubsetMask(0b01));
    }

    #[test]
    fn select_fails_when_everything_is_inadmissible() {
        // Zero residuals make every MW subset objective ln(0): inadmissible.
        let panel = small_panel(3, 10, 2, 1, 14);
        let cands = cce::cs_averages(&panel);
        let fit = CceFit {
            beta_hat: vec![0.0; 2],
            residuals: vec![vec![0.0; 10]; 3],
            condition: 1.0,
            k_cands: 3,
        };
        let cache = build_cache(&panel, &cands, Some(&fit)).unwrap();
        match select(&cache, CriterionKind::Mw, PenaltyKind::P1) {
            Err(Error::Selection(_)) => {}
            other => panic!("expected selection failure, got {other:?}"),
        }
    }

    #[test]
    fn select_permutation_equivariance() {
        let panel = small_panel(5, 18, 3, 2, 15);
        let cands = cce::regressor_candidates(&cce::cs_averages(&panel));
        let cache = build_cache(&panel, &cands, None).unwrap();
        let res = select(&cache, CriterionKind::Dvs, PenaltyKind::P1).unwrap();

        let perm = [2usize, 0, 1];
        let permuted = CandidateSet {
            mat: cands.mat.select_cols(&perm),
            labels: perm.iter().map(|&j| cands.labels[j].clone()).collect(),
            source: cands.source,
        };
        let cache_p = build_cache(&panel, &permuted, None).unwrap();
        let res_p = select(&cache_p, CriterionKind::Dvs, PenaltyKind::P1).unwrap();
        assert_eq!(res.g_hat, res_p.g_hat);
        // the chosen subset maps through the permutation
        let chosen: Vec<usize> = res.chosen.indices();
        let mut mapped: Vec<usize> = res_p
            .chosen
            .indices()
            .iter()
            .map(|&new_pos| perm[new_pos])
            .collect();
        mapped.sort_unstable();
        assert_eq!(chosen, mapped);
    }

    #[test]
    fn objective_difference_basics() {
        let panel = small_panel(4, 16, 3, 2, 16);
        let cands = cce::regressor_candidates(&cce::cs_averages(&panel));
        let cache = build_cache(&panel, &cands, None).unwrap();
        let m = SubsetMask(0b011);
        assert_eq!(objective_difference(&cache, CriterionKind::Dvs, m, m).unwrap(), 0.0);
        // nested: projecting on more columns cannot increase the objective
        let small = SubsetMask(0b001);
        let large = SubsetMask(0b111);
        let d = objective_difference(&cache, CriterionKind::Dvs, small, large).unwrap();
        assert!(d >= -1e-10, "nested monotonicity violated: {d}");
    }

    #[test]
    fn appendix_determinant_identity() {
        let panel = small_panel(6, 20, 3, 2, 17);
        let cands = cce::regressor_candidates(&cce::cs_averages(&panel));
        let cache = build_cache(&panel, &cands, None).unwrap();
        let m0 = SubsetMask(0b011); // spans the two factors
        let m = SubsetMask(0b111);
        let lhs = objective_difference(&cache, CriterionKind::Dvs, m, m0).unwrap();

        // det(I + D Q0^-1) = det(I + Q0^-1/2 D Q0^-1/2), and the latter is
        // symmetric, so it can go through the eigenvalue route.
        let nt = 6.0 * 20.0;
        let q_m = cache.projected_xx(&m.indices()).scale(1.0 / nt);
        let q_m0 = cache.projected_xx(&m0.indices()).scale(1.0 / nt);
        let q_m0 = q_m0.add(&q_m0.t()).scale(0.5);
        let diff = q_m.sub(&q_m0);
        let s = matlin::inv_sqrt_sym(&q_m0).unwrap();
        let inner = Mat::identity(3).add(&s.mul(&diff).mul(&s));
        let inner = inner.add(&inner.t()).scale(0.5);
        let rhs = matlin::logdet_pd(&inner, Some(-1.0)).unwrap();
        assert!((lhs - rhs).abs() < 1e-8, "identity gap {}", (lhs - rhs).abs());
    }

    #[test]
    fn er_count_constructed_spectrum() {
        let t = 50;
        let lams = [100.0, 100.0, 100.0, 100.0, 1.0, 1.0, 1.0, 1.0];
        let mat = Mat::from_fn(t, 8, |i, j| {
            if i == j {
                (t as f64 * lams[j]).sqrt()
            } else {
                0.0
            }
        });
        let cands = CandidateSet {
            mat,
            labels: (0..8).map(|j| format!("c{j}")).collect(),
            source: CandidateSource::Oracle,
        };
        assert_eq!(er_count(&cands, false, None, None).unwrap(), 4);
    }

    #[test]
    fn er_count_two_candidates() {
        let mat = Mat::from_fn(20, 2, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let cands = CandidateSet {
            mat,
            labels: vec!["a".into(), "b".into()],
            source: CandidateSource::Oracle,
        };
        assert_eq!(er_count(&cands, false, None, None).unwrap(), 1);
    }

    #[test]
    fn er_count_scaled_requires_pd_scatter() {
        let panel = small_panel(5, 15, 3, 2, 18);
        let cands = cce::regressor_candidates(&cce::cs_averages(&panel));
        let bad = Mat::from_diag(&[1.0, 1.0, 0.0]);
        assert!(er_count(&cands, true, Some(&bad), None).is_err());
        let sigma = cce::pooled_scatter(&panel, false);
        let got = er_count(&cands, true, Some(&sigma), None).unwrap();
        assert!((1..=2).contains(&got), "count {got} outside the 1..=j_max range");
    }
}
