//! Simulated panels with latent common factors.
//!
//! The model is `y_i = X_i b_i + F g_i + eps_i`, `X_i = F G_i + V_i` with
//! loadings `G_i = psi_i [I_m, 0]`, `g_i ~ N(mean, sd^2)` elementwise, and a
//! factor process `f_t = R f_{t-1} + u_t` whose autoregressive root
//! `r_j = 1 - q_j T^{-tau}` approaches unity as the persistence exponent
//! `tau` grows. Idiosyncratic errors are IID, weakly correlated across units
//! through a banded spillover, additionally correlated over time, or (for the
//! regressor block) generated with the same near-unit-root recursion as the
//! factors.

use serde::{Deserialize, Serialize};

use crate::cce::{CandidateSet, CandidateSource};
use crate::matlin::Mat;
use crate::rng::RngStream;
use crate::{Error, Result};

/// How the factor innovation spread is read off the |I - R^2| expression.
///
/// `StdDev` treats it as the innovation standard deviation (stationary factor
/// variance exactly 1; the simulation-table reading). `Variance` treats it as
/// the innovation variance. `Fixed` draws unit-variance innovations with no
/// scaling, which is the regime the asymptotic rate statements are written
/// in; the empirical rate checks use it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnovationScale {
    StdDev,
    Variance,
    Fixed,
}

/// Configuration of the latent factor process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorConfig {
    /// Number of factors.
    pub m: usize,
    /// Persistence exponent in `[0, 1)`.
    pub tau: f64,
    /// Lower end of the uniform support of the diagonal of Q.
    pub q_low: f64,
    /// Upper end of the uniform support of the diagonal of Q.
    pub q_high: f64,
    /// Recursion periods discarded before the sample starts.
    pub burn_in: usize,
    /// Reading of the innovation spread.
    pub innovation_scale: InnovationScale,
}

impl Default for FactorConfig {
    fn default() -> Self {
        FactorConfig {
            m: 4,
            tau: 0.0,
            q_low: 0.0,
            q_high: 2.0,
            burn_in: 50,
            innovation_scale: InnovationScale::StdDev,
        }
    }
}

impl FactorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::Config("factor count m must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.tau) {
            return Err(Error::Config(format!("tau must lie in [0, 1), got {}", self.tau)));
        }
        if self.q_low < 0.0 || self.q_high <= self.q_low {
            return Err(Error::Config("require 0 <= q_low < q_high".into()));
        }
        if self.tau == 0.0 && self.q_high > 2.0 {
            return Err(Error::Config(
                "with tau = 0 the support of q must stay within (0, 2] to keep the root inside the unit circle".into(),
            ));
        }
        Ok(())
    }
}

/// Idiosyncratic error structure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMode {
    /// Entries of `(eps_{i,t}, v_{i,t})` drawn IID standard normal.
    Iid,
    /// Weakly correlated across units (banded spillover), uncorrelated over
    /// time. The configuration behind the main simulation tables.
    WeakCs,
    /// Weakly correlated across units and over time.
    WeakTimeCs,
    /// `v` columns generated with the factor recursion (near-unit-root);
    /// `eps` keeps the WeakCs structure.
    NonstationaryV,
}

/// Parameters of the idiosyncratic error generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorConfig {
    pub mode: ErrorMode,
    /// AR coefficient of the `eps` block.
    pub rho: f64,
    /// AR coefficient of the `v` block.
    pub rho_v: f64,
    /// Cross-section spillover weight of the `eps` block.
    pub kappa: f64,
    /// Cross-section spillover weight of the `v` block.
    pub kappa_v: f64,
    /// Band half-width for the `eps` block.
    pub j_band: usize,
    /// Band half-width for the `v` block.
    pub j_band_v: usize,
}

impl ErrorConfig {
    pub fn iid() -> Self {
        ErrorConfig {
            mode: ErrorMode::Iid,
            rho: 0.0,
            rho_v: 0.0,
            kappa: 0.0,
            kappa_v: 0.0,
            j_band: 0,
            j_band_v: 0,
        }
    }

    /// Weak cross-section correlation only (`rho = rho_v = 0`).
    pub fn weak_cs() -> Self {
        ErrorConfig {
            mode: ErrorMode::WeakCs,
            rho: 0.0,
            rho_v: 0.0,
            kappa: 0.2,
            kappa_v: 0.2,
            j_band: 5,
            j_band_v: 5,
        }
    }

    /// Weak correlation over both time and units (`rho = rho_v = 0.5`).
    pub fn weak_time_cs() -> Self {
        ErrorConfig { mode: ErrorMode::WeakTimeCs, rho: 0.5, rho_v: 0.5, ..Self::weak_cs() }
    }

    /// Near-unit-root regressor idiosyncratics, WeakCs `eps`.
    pub fn nonstationary_v() -> Self {
        ErrorConfig { mode: ErrorMode::NonstationaryV, ..Self::weak_cs() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rho.abs() >= 1.0 || self.rho_v.abs() >= 1.0 {
            return Err(Error::Config("AR coefficients must satisfy |rho| < 1".into()));
        }
        if self.kappa < 0.0 || self.kappa_v < 0.0 {
            return Err(Error::Config("spillover weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Full panel configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelConfig {
    /// Cross-section units.
    pub n_units: usize,
    /// Time periods.
    pub t_periods: usize,
    /// Observed regressors per unit.
    pub k: usize,
    /// Common slope level (every regressor gets this slope).
    pub beta_level: f64,
    /// Standard deviation of the unit-specific slope deviation; 0 keeps the
    /// slopes homogeneous.
    pub slope_het_sd: f64,
    /// Mean of the loading draws.
    pub loading_mean: f64,
    /// Standard deviation of the loading draws.
    pub loading_sd: f64,
    /// Replace cross-section averages by the true factors plus noise columns.
    pub oracle_candidates: bool,
    pub factor: FactorConfig,
    pub errors: ErrorConfig,
}

impl Default for PanelConfig {
    fn default() -> Self {
        PanelConfig {
            n_units: 100,
            t_periods: 100,
            k: 8,
            beta_level: 0.5,
            slope_het_sd: 0.0,
            loading_mean: 1.0,
            loading_sd: 1.0,
            oracle_candidates: false,
            factor: FactorConfig::default(),
            errors: ErrorConfig::weak_cs(),
        }
    }
}

impl PanelConfig {
    pub fn validate(&self) -> Result<()> {
        self.factor.validate()?;
        self.errors.validate()?;
        if self.factor.m > self.k {
            return Err(Error::Config(format!(
                "need m <= k, got m = {} and k = {}",
                self.factor.m, self.k
            )));
        }
        if self.n_units < 2 {
            return Err(Error::Config("need at least 2 units".into()));
        }
        if self.t_periods <= self.k + 1 {
            return Err(Error::Config(format!(
                "need T > k + 1 = {} to leave residual degrees of freedom, got T = {}",
                self.k + 1,
                self.t_periods
            )));
        }
        if self.slope_het_sd < 0.0 || self.loading_sd < 0.0 {
            return Err(Error::Config("standard deviations must be non-negative".into()));
        }
        Ok(())
    }

    /// Same template at a different grid cell.
    pub fn with_cell(&self, n: usize, t: usize, tau: f64) -> PanelConfig {
        let mut cfg = self.clone();
        cfg.n_units = n;
        cfg.t_periods = t;
        cfg.factor.tau = tau;
        cfg
    }
}

/// One simulated panel with every latent component retained.
#[derive(Debug, Clone)]
pub struct Panel {
    /// Outcomes, T x N (column i = unit i).
    pub y: Mat,
    /// Regressors, one T x k matrix per unit.
    pub x: Vec<Mat>,
    /// True factors, T x m.
    pub f_true: Mat,
    /// Outcome loadings, N x m (row i = gamma_i).
    pub gamma: Mat,
    /// Regressor loadings, one m x k matrix per unit.
    pub big_gamma: Vec<Mat>,
    /// Outcome errors, T x N.
    pub eps: Mat,
    /// Regressor errors, one T x k matrix per unit.
    pub v: Vec<Mat>,
    /// Realized slopes, one k-vector per unit.
    pub slopes: Vec<Vec<f64>>,
    /// Configuration echo.
    pub config: PanelConfig,
}

/// Draw the diagonal persistence system `(Q, R)` with
/// `r_j = 1 - q_j T^{-tau}` and `q_j ~ U(q_low, q_high)`.
pub fn draw_factor_system(
    rng: &mut RngStream,
    cfg: &FactorConfig,
    t_periods: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    let damp = (t_periods as f64).powf(-cfg.tau);
    let mut q = Vec::with_capacity(cfg.m);
    let mut r = Vec::with_capacity(cfg.m);
    for _ in 0..cfg.m {
        let qj = rng.uniform(cfg.q_low, cfg.q_high);
        let rj = 1.0 - qj * damp;
        if rj.abs() >= 1.0 {
            return Err(Error::Config(format!(
                "autoregressive root {rj} is outside the unit circle (q = {qj}, tau = {}, T = {t_periods})",
                cfg.tau
            )));
        }
        q.push(qj);
        r.push(rj);
    }
    Ok((q, r))
}

fn innovation_sd(scale: InnovationScale, r: f64) -> f64 {
    match scale {
        InnovationScale::StdDev => (1.0 - r * r).sqrt(),
        InnovationScale::Variance => (1.0 - r * r).sqrt().sqrt(),
        InnovationScale::Fixed => 1.0,
    }
}

fn stationary_sd(scale: InnovationScale, r: f64) -> f64 {
    innovation_sd(scale, r) / (1.0 - r * r).sqrt()
}

/// Generate the T x m factor matrix: an AR(1) recursion per factor.
///
/// The recursion starts from a draw of its stationary distribution and still
/// discards `burn_in` periods. A zero start would leave slowly mixing draws
/// (small `q` at larger `tau`) visibly below their stationary variance over
/// the whole sample, biasing every persistence comparison.
pub fn gen_factors(rng: &mut RngStream, cfg: &FactorConfig, t_periods: usize) -> Result<Mat> {
    let (_q, r) = draw_factor_system(rng, cfg, t_periods)?;
    let sd: Vec<f64> = r.iter().map(|&rj| innovation_sd(cfg.innovation_scale, rj)).collect();
    let mut state: Vec<f64> = r
        .iter()
        .map(|&rj| stationary_sd(cfg.innovation_scale, rj) * rng.normal())
        .collect();
    let mut f = Mat::zeros(t_periods, cfg.m);
    for t in 0..cfg.burn_in + t_periods {
        for j in 0..cfg.m {
            state[j] = r[j] * state[j] + sd[j] * rng.normal();
        }
        if t >= cfg.burn_in {
            for j in 0..cfg.m {
                f[(t - cfg.burn_in, j)] = state[j];
            }
        }
    }
    Ok(f)
}

/// Draw the loading system: `G_i = psi_i [I_m, 0]` (m x k) and the outcome
/// loading vector `gamma_i` with IID `N(mean, sd^2)` entries.
pub fn gen_loadings(
    rng: &mut RngStream,
    n_units: usize,
    m: usize,
    k: usize,
    loading_mean: f64,
    loading_sd: f64,
) -> Result<(Vec<Mat>, Mat)> {
    if m > k {
        return Err(Error::Config("loading draw requires m <= k".into()));
    }
    let mut big_gamma = Vec::with_capacity(n_units);
    let mut gamma = Mat::zeros(n_units, m);
    for i in 0..n_units {
        let psi = loading_mean + loading_sd * rng.normal();
        let mut g = Mat::zeros(m, k);
        for j in 0..m {
            g[(j, j)] = psi;
        }
        big_gamma.push(g);
        for j in 0..m {
            gamma[(i, j)] = loading_mean + loading_sd * rng.normal();
        }
    }
    Ok((big_gamma, gamma))
}

/// 0/1 spillover weights: `w_ij = 1` when `1 <= |i - j| <= j_band`, zero
/// diagonal.
pub fn build_band_weights(n_units: usize, j_band: usize) -> Mat {
    Mat::from_fn(n_units, n_units, |i, j| {
        let dist = i.abs_diff(j);
        if dist >= 1 && dist <= j_band {
            1.0
        } else {
            0.0
        }
    })
}

fn band_sum(values: &[f64], i: usize, j_band: usize) -> f64 {
    let n = values.len();
    let lo = i.saturating_sub(j_band);
    let hi = (i + j_band).min(n - 1);
    let mut s = 0.0;
    for j in lo..=hi {
        if j != i {
            s += values[j];
        }
    }
    s
}

/// Generate idiosyncratic errors: `eps` (T x N) and per-unit `v` (T x k).
///
/// The weakly correlated modes run
/// `e_{i,t} = P_rho e_{i,t-1} + z_{w,i,t}` where the innovation mixes each
/// unit's shock with its band neighbours, scaled so that the stationary
/// variances are `m` for `eps` and 1 for `v` entries. The factor
/// configuration supplies `m`, the burn-in length, and (for NonstationaryV)
/// the recursion reused for the `v` columns.
pub fn gen_errors(
    rng: &mut RngStream,
    cfg: &ErrorConfig,
    factor: &FactorConfig,
    n_units: usize,
    t_periods: usize,
    k: usize,
) -> Result<(Mat, Vec<Mat>)> {
    cfg.validate()?;
    let mut eps = Mat::zeros(t_periods, n_units);
    let mut v: Vec<Mat> = (0..n_units).map(|_| Mat::zeros(t_periods, k)).collect();

    match cfg.mode {
        ErrorMode::Iid => {
            for t in 0..t_periods {
                for i in 0..n_units {
                    eps[(t, i)] = rng.normal();
                    for l in 0..k {
                        v[i][(t, l)] = rng.normal();
                    }
                }
            }
        }
        ErrorMode::WeakCs | ErrorMode::WeakTimeCs | ErrorMode::NonstationaryV => {
            let m = factor.m as f64;
            let scale_eps = (m * (1.0 - cfg.rho * cfg.rho)
                / (1.0 + 2.0 * cfg.j_band as f64 * cfg.kappa * cfg.kappa))
                .sqrt();
            let scale_v = ((1.0 - cfg.rho_v * cfg.rho_v)
                / (1.0 + 2.0 * cfg.j_band_v as f64 * cfg.kappa_v * cfg.kappa_v))
                .sqrt();
            let with_v_block = cfg.mode != ErrorMode::NonstationaryV;

            let mut eps_state = vec![0.0; n_units];
            let mut v_state = vec![vec![0.0; k]; n_units];
            let mut shock_eps = vec![0.0; n_units];
            let mut shock_v = vec![vec![0.0; k]; n_units];
            for t in 0..factor.burn_in + t_periods {
                for s in shock_eps.iter_mut() {
                    *s = rng.normal();
                }
                if with_v_block {
                    for row in shock_v.iter_mut() {
                        for s in row.iter_mut() {
                            *s = rng.normal();
                        }
                    }
                }
                for i in 0..n_units {
                    let z = scale_eps * (shock_eps[i] + cfg.kappa * band_sum(&shock_eps, i, cfg.j_band));
                    eps_state[i] = cfg.rho * eps_state[i] + z;
                }
                if with_v_block {
                    for i in 0..n_units {
                        for l in 0..k {
                            let mut nb = 0.0;
                            let lo = i.saturating_sub(cfg.j_band_v);
                            let hi = (i + cfg.j_band_v).min(n_units - 1);
                            for j in lo..=hi {
                                if j != i {
                                    nb += shock_v[j][l];
                                }
                            }
                            let z = scale_v * (shock_v[i][l] + cfg.kappa_v * nb);
                            v_state[i][l] = cfg.rho_v * v_state[i][l] + z;
                        }
                    }
                }
                if t >= factor.burn_in {
                    let row = t - factor.burn_in;
                    for i in 0..n_units {
                        eps[(row, i)] = eps_state[i];
                        if with_v_block {
                            for l in 0..k {
                                v[i][(row, l)] = v_state[i][l];
                            }
                        }
                    }
                }
            }

            if cfg.mode == ErrorMode::NonstationaryV {
                // v columns follow the factor recursion, independently per
                // unit and column.
                let damp = (t_periods as f64).powf(-factor.tau);
                for unit in v.iter_mut() {
                    for l in 0..k {
                        let q = rng.uniform(factor.q_low, factor.q_high);
                        let r = 1.0 - q * damp;
                        if r.abs() >= 1.0 {
                            return Err(Error::Config(format!(
                                "nonstationary v root {r} is outside the unit circle"
                            )));
                        }
                        let sd = innovation_sd(factor.innovation_scale, r);
                        let mut state = stationary_sd(factor.innovation_scale, r) * rng.normal();
                        for t in 0..factor.burn_in + t_periods {
                            state = r * state + sd * rng.normal();
                            if t >= factor.burn_in {
                                unit[(t - factor.burn_in, l)] = state;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok((eps, v))
}

/// Assemble outcomes and regressors from the generated pieces.
///
/// `X_i = F G_i + V_i` and `y_i = X_i b_i + F gamma_i + eps_i` hold exactly
/// by construction; `b_i = beta + upsilon_i` with `upsilon_i` drawn only when
/// `slope_het_sd > 0`.
pub fn assemble_panel(
    f: Mat,
    big_gamma: Vec<Mat>,
    gamma: Mat,
    eps: Mat,
    v: Vec<Mat>,
    cfg: &PanelConfig,
    rng: &mut RngStream,
) -> Result<Panel> {
    let (n, t, k, m) = (cfg.n_units, cfg.t_periods, cfg.k, cfg.factor.m);
    if f.rows() != t || f.cols() != m {
        return Err(Error::Dimension(format!(
            "factor matrix must be {t}x{m}, got {}x{}",
            f.rows(),
            f.cols()
        )));
    }
    if big_gamma.len() != n || gamma.rows() != n || gamma.cols() != m {
        return Err(Error::Dimension("loading blocks inconsistent with N, m".into()));
    }
    if eps.rows() != t || eps.cols() != n || v.len() != n {
        return Err(Error::Dimension("error blocks inconsistent with N, T".into()));
    }
    for (i, (g, vi)) in big_gamma.iter().zip(&v).enumerate() {
        if g.rows() != m || g.cols() != k || vi.rows() != t || vi.cols() != k {
            return Err(Error::Dimension(format!("unit {i} block has wrong shape")));
        }
    }

    let mut slopes = Vec::with_capacity(n);
    for _ in 0..n {
        let mut b = vec![cfg.beta_level; k];
        if cfg.slope_het_sd > 0.0 {
            for bj in b.iter_mut() {
                *bj += cfg.slope_het_sd * rng.normal();
            }
        }
        slopes.push(b);
    }

    let mut x = Vec::with_capacity(n);
    let mut y = Mat::zeros(t, n);
    for i in 0..n {
        let xi = f.mul(&big_gamma[i]).add(&v[i]);
        let xb = xi.mul_vec(&slopes[i]);
        let fg = f.mul_vec(gamma.row(i));
        for tt in 0..t {
            y[(tt, i)] = xb[tt] + fg[tt] + eps[(tt, i)];
        }
        x.push(xi);
    }
    let panel = Panel {
        y,
        x,
        f_true: f,
        gamma,
        big_gamma,
        eps,
        v,
        slopes,
        config: cfg.clone(),
    };
    debug_assert!(panel.y.all_finite() && panel.f_true.all_finite());
    Ok(panel)
}

/// Full generation pipeline: factors, loadings, errors, assembly.
pub fn generate(cfg: &PanelConfig, rng: &mut RngStream) -> Result<Panel> {
    cfg.validate()?;
    let f = gen_factors(rng, &cfg.factor, cfg.t_periods)?;
    let (big_gamma, gamma) =
        gen_loadings(rng, cfg.n_units, cfg.factor.m, cfg.k, cfg.loading_mean, cfg.loading_sd)?;
    let (eps, v) =
        gen_errors(rng, &cfg.errors, &cfg.factor, cfg.n_units, cfg.t_periods, cfg.k)?;
    assemble_panel(f, big_gamma, gamma, eps, v, cfg, rng)
}

/// Candidate set whose first `m` columns are the true factors and whose
/// remaining `k_total - m` columns are independent standard normal noise, so
/// over-selection stays possible and the subset search keeps its full size.
pub fn oracle_candidates(f: &Mat, k_total: usize, rng: &mut RngStream) -> Result<CandidateSet> {
    let m = f.cols();
    if k_total < m {
        return Err(Error::Config(format!(
            "oracle candidate count {k_total} must be >= factor count {m}"
        )));
    }
    let t = f.rows();
    let mut c = Mat::zeros(t, k_total);
    let mut labels = Vec::with_capacity(k_total);
    for j in 0..m {
        for tt in 0..t {
            c[(tt, j)] = f[(tt, j)];
        }
        labels.push(format!("factor_{}", j + 1));
    }
    for j in m..k_total {
        for tt in 0..t {
            c[(tt, j)] = rng.normal();
        }
        labels.push(format!("noise_{}", j - m + 1));
    }
    Ok(CandidateSet { mat: c, labels, source: CandidateSource::Oracle })
}
