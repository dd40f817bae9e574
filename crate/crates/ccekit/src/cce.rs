//! Cross-section averages and the pooled CCE fit.
//!
//! The candidate proxies for the latent factors are the per-period means of
//! the observables across units. The pooled fit projects each unit's data on
//! the orthogonal complement of the *full* candidate set and solves the
//! pooled normal equations; its residuals feed the MW information criterion,
//! which re-projects them subset by subset.

use crate::dgp::Panel;
use crate::matlin::{self, Mat};
use crate::{Error, Result};

/// Where a candidate set came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateSource {
    /// Averages of `[y, X]`: an outcome column plus one column per regressor.
    CsAverages,
    /// Averages of the regressors only.
    RegressorsOnly,
    /// True factors padded with noise columns.
    Oracle,
}

/// A T x K matrix of candidate factor proxies with column labels.
#[derive(Debug, Clone)]
pub struct CandidateSet {
    pub mat: Mat,
    pub labels: Vec<String>,
    pub source: CandidateSource,
}

impl CandidateSet {
    /// Number of candidates.
    pub fn k_cands(&self) -> usize {
        self.mat.cols()
    }
}

/// Pooled CCE fit under the full candidate set.
#[derive(Debug, Clone)]
pub struct CceFit {
    /// Pooled slope estimate (length k).
    pub beta_hat: Vec<f64>,
    /// Per-unit residuals `y_i - X_i beta_hat` (factors not subtracted).
    pub residuals: Vec<Vec<f64>>,
    /// Condition number of the pooled denominator.
    pub condition: f64,
    /// Number of candidates the projection used.
    pub k_cands: usize,
}

/// Cross-section averages of `[y, X]`: column 0 is the outcome average, the
/// remaining k columns average each regressor across units.
pub fn cs_averages(panel: &Panel) -> CandidateSet {
    let t = panel.config.t_periods;
    let n = panel.x.len();
    let k = panel.config.k;
    let inv_n = 1.0 / n as f64;
    let mut c = Mat::zeros(t, k + 1);
    for tt in 0..t {
        let mut acc = 0.0;
        for i in 0..n {
            acc += panel.y[(tt, i)];
        }
        c[(tt, 0)] = acc * inv_n;
        for l in 0..k {
            let mut acc = 0.0;
            for i in 0..n {
                acc += panel.x[i][(tt, l)];
            }
            c[(tt, l + 1)] = acc * inv_n;
        }
    }
    let mut labels = vec!["ybar".to_string()];
    labels.extend((1..=k).map(|l| format!("xbar_{l}")));
    CandidateSet { mat: c, labels, source: CandidateSource::CsAverages }
}

/// Drop the outcome average, leaving the k regressor averages.
///
/// Sets that already contain no outcome column (regressors-only or oracle)
/// pass through unchanged.
pub fn regressor_candidates(cs: &CandidateSet) -> CandidateSet {
    match cs.source {
        CandidateSource::CsAverages => {
            let idx: Vec<usize> = (1..cs.mat.cols()).collect();
            CandidateSet {
                mat: cs.mat.select_cols(&idx),
                labels: cs.labels[1..].to_vec(),
                source: CandidateSource::RegressorsOnly,
            }
        }
        CandidateSource::RegressorsOnly | CandidateSource::Oracle => cs.clone(),
    }
}

/// Pooled CCE estimator under the full candidate set.
///
/// `beta_hat` solves `sum_i X_i' M X_i b = sum_i X_i' M y_i` with `M` the
/// annihilator of the whole candidate matrix, inverted through the truncated
/// pseudoinverse. Residuals are `y_i - X_i beta_hat`; the factor part is left
/// in place for the criterion's own projection.
pub fn cce_pooled(panel: &Panel, cs: &CandidateSet) -> Result<CceFit> {
    let t = panel.config.t_periods;
    let n = panel.x.len();
    let k = panel.config.k;
    if cs.mat.rows() != t {
        return Err(Error::Dimension(format!(
            "candidate rows {} do not match panel T = {t}",
            cs.mat.rows()
        )));
    }

    let c = &cs.mat;
    let gram = c.tr_mul(c);
    let rtol = matlin::default_pinv_rtol(t, c.cols());
    let gram_inv = matlin::pinv(&gram, Some(rtol * rtol));

    // sum_i X_i' M X_i = sum_i X_i'X_i - (X_i'C) G+ (X_i'C)', and likewise
    // for the right-hand side; nothing T x T is ever formed.
    let mut denom = Mat::zeros(k, k);
    let mut numer = vec![0.0; k];
    for i in 0..n {
        let xi = &panel.x[i];
        let yi = panel.y.col(i);
        let a = xi.tr_mul(c); // k x K
        let xt_y = xi.tr_mul_vec(&yi);
        let ct_y = c.tr_mul_vec(&yi);
        denom = denom.add(&xi.tr_mul(xi)).sub(&a.mul(&gram_inv).mul_tr(&a));
        let proj = a.mul_vec(&gram_inv.mul_vec(&ct_y));
        for j in 0..k {
            numer[j] += xt_y[j] - proj[j];
        }
    }

    if !denom.all_finite() || denom.max_abs() == 0.0 {
        return Err(Error::Estimation("pooled denominator is degenerate".into()));
    }
    let eig = matlin::sym_eig(&denom.add(&denom.t()).scale(0.5))?;
    let lam_max = eig.eigenvalues[0];
    let lam_min = *eig.eigenvalues.last().unwrap();
    if lam_max <= 0.0 {
        return Err(Error::Estimation("pooled denominator is not positive".into()));
    }
    let condition = if lam_min > 0.0 { lam_max / lam_min } else { f64::INFINITY };

    let denom_inv = matlin::pinv(&denom, None);
    let beta_hat = denom_inv.mul_vec(&numer);
    if beta_hat.iter().any(|b| !b.is_finite()) {
        return Err(Error::Estimation("pooled slope estimate is non-finite".into()));
    }

    let mut residuals = Vec::with_capacity(n);
    for i in 0..n {
        let fitted = panel.x[i].mul_vec(&beta_hat);
        let mut r = panel.y.col(i);
        for (rt, ft) in r.iter_mut().zip(&fitted) {
            *rt -= ft;
        }
        residuals.push(r);
    }
    Ok(CceFit { beta_hat, residuals, condition, k_cands: c.cols() })
}

/// Pooled scatter of the demeaned unit data,
/// `(NT)^-1 sum_i (Z_i - Zbar)'(Z_i - Zbar)` with `Z_i = [y_i, X_i]`, or the
/// regressor block alone when `include_y` is false. Used to scale the data
/// for the eigenvalue-ratio variants.
pub fn pooled_scatter(panel: &Panel, include_y: bool) -> Mat {
    let t = panel.config.t_periods;
    let n = panel.x.len();
    let k = panel.config.k;
    let cols = if include_y { k + 1 } else { k };
    let averages = cs_averages(panel);

    let mut acc = Mat::zeros(cols, cols);
    let mut zi = Mat::zeros(t, cols);
    for i in 0..n {
        for tt in 0..t {
            let mut c0 = 0;
            if include_y {
                zi[(tt, 0)] = panel.y[(tt, i)] - averages.mat[(tt, 0)];
                c0 = 1;
            }
            for l in 0..k {
                zi[(tt, c0 + l)] = panel.x[i][(tt, l)] - averages.mat[(tt, l + 1)];
            }
        }
        acc = acc.add(&zi.tr_mul(&zi));
    }
    acc.scale(1.0 / (n as f64 * t as f64))
}
