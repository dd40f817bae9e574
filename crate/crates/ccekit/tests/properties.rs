//! Property tests for the kernel and the subset-scan algebra.

use ccekit::cce::{self, CandidateSet, CandidateSource};
use ccekit::dgp::{self, FactorConfig, PanelConfig};
use ccekit::matlin::{self, Mat};
use ccekit::rng::RngStream;
use ccekit::selection::{self, CriterionKind, PenaltyKind, SubsetMask};
use proptest::prelude::*;

fn mat_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Mat> {
    prop::collection::vec(-1.0f64..1.0, rows * cols)
        .prop_map(move |data| Mat::from_vec(rows, cols, data))
}

/// Random matrix with a controlled rank profile: a product of an
/// `rows x rank` and a `rank x cols` factor, or the zero matrix.
fn ranked_mat() -> impl Strategy<Value = Mat> {
    (1usize..=10, 1usize..=10).prop_flat_map(|(rows, cols)| {
        (0usize..=rows.min(cols)).prop_flat_map(move |rank| {
            if rank == 0 {
                Just(Mat::zeros(rows, cols)).boxed()
            } else {
                (mat_strategy(rows, rank), mat_strategy(rank, cols))
                    .prop_map(|(b, c)| b.mul(&c))
                    .boxed()
            }
        })
    })
}

/// Spectrum of the Gram matrix has no eigenvalues in the ambiguous band
/// where numerical rank is ill-determined.
fn clean_rank_gap(a: &Mat) -> bool {
    let g = a.tr_mul(a);
    let eig = match matlin::sym_eig(&g) {
        Ok(e) => e,
        Err(_) => return false,
    };
    let lam_max = eig.eigenvalues[0].max(0.0);
    if lam_max == 0.0 {
        return true;
    }
    eig.eigenvalues
        .iter()
        .all(|&l| l <= 1e-11 * lam_max || l > 1e-7 * lam_max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn penrose_conditions_hold(a in ranked_mat()) {
        prop_assume!(clean_rank_gap(&a));
        let p = matlin::pinv(&a, None);
        let scale_a = a.max_abs().max(1.0);
        let scale_p = p.max_abs().max(1.0);
        let apa = a.mul(&p).mul(&a);
        prop_assert!(apa.sub(&a).max_abs() <= 1e-8 * scale_a);
        let pap = p.mul(&a).mul(&p);
        prop_assert!(pap.sub(&p).max_abs() <= 1e-8 * scale_p);
        let ap = a.mul(&p);
        prop_assert!(ap.sub(&ap.t()).max_abs() <= 1e-8 * scale_a * scale_p);
        let pa = p.mul(&a);
        prop_assert!(pa.sub(&pa.t()).max_abs() <= 1e-8 * scale_a * scale_p);
    }

    #[test]
    fn annihilator_is_a_projection(a in ranked_mat()) {
        prop_assume!(clean_rank_gap(&a));
        let m = matlin::annihilator(&a);
        prop_assert!(m.mul(&a).max_abs() <= 1e-10 * a.max_abs().max(1.0));
        prop_assert!(m.mul(&m).sub(&m).max_abs() <= 1e-10);
        prop_assert!(m.sub(&m.t()).max_abs() <= 1e-12);
    }

    #[test]
    fn logdet_matches_eigenvalue_sum(seed in 0u64..1000, n in 2usize..=6) {
        let mut rng = RngStream::derive(seed, &[100]);
        let b = Mat::from_fn(n, n, |_, _| rng.normal());
        let a = b.tr_mul(&b).add(&Mat::identity(n).scale(0.3));
        let eig = matlin::sym_eig(&a).unwrap();
        let want: f64 = eig.eigenvalues.iter().map(|l| l.ln()).sum();
        let got = matlin::logdet_pd(&a, None).unwrap();
        prop_assert!((got - want).abs() <= 1e-8 * want.abs().max(1.0));
    }
}

fn random_panel(seed: u64, n: usize, t: usize, k: usize, m: usize) -> dgp::Panel {
    let cfg = PanelConfig {
        n_units: n,
        t_periods: t,
        k,
        factor: FactorConfig { m, ..Default::default() },
        ..Default::default()
    };
    dgp::generate(&cfg, &mut RngStream::derive(seed, &[7])).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    // Cache algebra equals the T x T projection route for every mask.
    #[test]
    fn cache_equals_naive_objective(seed in 0u64..10_000) {
        let panel = random_panel(seed, 3, 12, 3, 2);
        let mw_cands = cce::cs_averages(&panel);
        let fit = cce::cce_pooled(&panel, &mw_cands).unwrap();
        let cache = selection::build_cache(&panel, &mw_cands, Some(&fit)).unwrap();
        let nt = 3.0 * 12.0;
        for bits in 1u32..(1 << 4) {
            let mask = SubsetMask(bits);
            let sub = mw_cands.mat.select_cols(&mask.indices());
            let proj = matlin::annihilator(&sub);

            let mw = selection::ic_value(&cache, CriterionKind::Mw, PenaltyKind::P1, mask)
                .unwrap();
            let mut quad = 0.0;
            for r in &fit.residuals {
                let mr = proj.mul_vec(r);
                quad += r.iter().zip(&mr).map(|(x, y)| x * y).sum::<f64>();
            }
            match mw {
                Some(v) => {
                    let want = (quad / nt).ln();
                    prop_assert!((v.objective - want).abs() <= 1e-10 * want.abs().max(1.0));
                }
                None => prop_assert!(quad <= 1e-9 * cache.s_nn.unwrap()),
            }

            let dvs = selection::ic_value(&cache, CriterionKind::Dvs, PenaltyKind::P1, mask)
                .unwrap();
            let mut acc = Mat::zeros(3, 3);
            for xi in &panel.x {
                acc = acc.add(&xi.tr_mul(&proj.mul(xi)));
            }
            let moment = acc.scale(1.0 / nt);
            let moment = moment.add(&moment.t()).scale(0.5);
            match (dvs, matlin::logdet_pd(&moment, None)) {
                (Some(v), Ok(want)) => {
                    prop_assert!((v.objective - want).abs() <= 1e-10 * want.abs().max(1.0));
                }
                (None, Err(_)) => {}
                other => prop_assert!(false, "admissibility mismatch {other:?}"),
            }
        }
    }

    // Projecting on a superset cannot increase the objective.
    #[test]
    fn nested_subset_monotonicity(seed in 0u64..10_000) {
        let panel = random_panel(seed, 4, 14, 3, 2);
        let mw_cands = cce::cs_averages(&panel);
        let fit = cce::cce_pooled(&panel, &mw_cands).unwrap();
        let cache_mw = selection::build_cache(&panel, &mw_cands, Some(&fit)).unwrap();
        let dvs_cands = cce::regressor_candidates(&mw_cands);
        let cache_dvs = selection::build_cache(&panel, &dvs_cands, None).unwrap();

        for (cache, crit, kc) in [
            (&cache_mw, CriterionKind::Mw, 4u32),
            (&cache_dvs, CriterionKind::Dvs, 3u32),
        ] {
            for small in 1u32..(1 << kc) {
                for large in 1u32..(1 << kc) {
                    if small & large != small || small == large {
                        continue;
                    }
                    let a = selection::ic_value(cache, crit, PenaltyKind::P1, SubsetMask(small))
                        .unwrap();
                    let b = selection::ic_value(cache, crit, PenaltyKind::P1, SubsetMask(large))
                        .unwrap();
                    if let (Some(va), Some(vb)) = (a, b) {
                        prop_assert!(
                            va.objective - vb.objective >= -1e-10,
                            "nested violation: {} < {}",
                            va.objective,
                            vb.objective
                        );
                    }
                }
            }
        }
    }

    // The adjusted objective is the plain one shifted by k*tau*ln(T).
    #[test]
    fn adjusted_shift_identity(seed in 0u64..10_000, tau in 0.0f64..0.95) {
        let panel = random_panel(seed, 4, 14, 3, 2);
        let cands = cce::regressor_candidates(&cce::cs_averages(&panel));
        let cache = selection::build_cache(&panel, &cands, None).unwrap();
        let shift = 3.0 * tau * 14.0_f64.ln();
        for bits in 1u32..(1 << 3) {
            let mask = SubsetMask(bits);
            let plain =
                selection::ic_value(&cache, CriterionKind::Dvs, PenaltyKind::P1, mask).unwrap();
            let adj = selection::ic_value(
                &cache,
                CriterionKind::DvsAdjusted { tau },
                PenaltyKind::P1,
                mask,
            )
            .unwrap();
            if let (Some(p), Some(a)) = (plain, adj) {
                prop_assert!((a.objective - (p.objective - shift)).abs() <= 1e-10);
            }
        }
    }

    // Relabeling candidate columns relabels the chosen subset, g unchanged.
    #[test]
    fn selection_permutation_equivariance(seed in 0u64..10_000) {
        let panel = random_panel(seed, 5, 16, 3, 2);
        let cands = cce::regressor_candidates(&cce::cs_averages(&panel));
        let cache = selection::build_cache(&panel, &cands, None).unwrap();
        let base = selection::select(&cache, CriterionKind::Dvs, PenaltyKind::P1).unwrap();

        let perm = [1usize, 2, 0];
        let permuted = CandidateSet {
            mat: cands.mat.select_cols(&perm),
            labels: perm.iter().map(|&j| cands.labels[j].clone()).collect(),
            source: CandidateSource::RegressorsOnly,
        };
        let cache_p = selection::build_cache(&panel, &permuted, None).unwrap();
        let res_p = selection::select(&cache_p, CriterionKind::Dvs, PenaltyKind::P1).unwrap();
        prop_assert_eq!(base.g_hat, res_p.g_hat);
        let mut mapped: Vec<usize> =
            res_p.chosen.indices().iter().map(|&pos| perm[pos]).collect();
        mapped.sort_unstable();
        prop_assert_eq!(base.chosen.indices(), mapped);
    }
}
