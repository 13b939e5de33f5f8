mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;

use zadr_core::compositions::{default_component_names, load_dataset};
use zadr_core::inference::generate::simulate_responses;
use zadr_core::random::rng_from_seed;
use zadr_core::zadr::{
    analytic_gradient, binary_log_prob, loglik_mixed, loglik_simple, loglik_zadr_mixed, loglik_zadr_simple,
    pack_params, unpack_params,
};
use zadr_core::*;

const MODES: [SubcompositionMode; 2] = [SubcompositionMode::AsWritten, SubcompositionMode::Renormalized];

fn simple_link(r: usize) -> LinkSpec {
    LinkSpec::new(r, ModelKind::Simple)
}

fn mixed_link(r: usize) -> LinkSpec {
    LinkSpec::new(r, ModelKind::Mixed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn alr_round_trip(parts in prop::collection::vec(-8.0f64..8.0, 2..7), r in 0usize..6) {
        let d = parts.len();
        let r = r % d;
        let s: f64 = parts.iter().map(|v| v.exp()).sum();
        let row: Vec<f64> = parts.iter().map(|v| v.exp() / s).collect();
        let ds = load_dataset(&[row.clone()], &default_component_names(d), 1e-8).unwrap();
        let back = alr_inv(&alr(&ds, r).unwrap(), r).unwrap();
        for j in 0..d {
            prop_assert!((back.values()[(0, j)] - row[j]).abs() < 1e-12);
        }
        let z = DMatrix::from_row_slice(1, d - 1, &parts[..d - 1]);
        let z2 = alr(&alr_inv(&z, r).unwrap(), r).unwrap();
        prop_assert!((z2 - z).amax() < 1e-12);
    }

    #[test]
    fn plain_likelihoods_match_oracle(seed in any::<u64>()) {
        let inst = random_instance(seed, 10, 4, 2, false);
        let y = inst.ds.values();
        let x = inst.x.design();
        let r = inst.ref_index;
        let got = loglik_simple(&inst.b, inst.phi, &inst.ds, &inst.x, &simple_link(r)).unwrap();
        let want = oracle_loglik(&inst.b, &Precision::Phi(inst.phi), y, x, r, None);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
        let got = loglik_mixed(&inst.b, &inst.gamma, &inst.ds, &inst.x, &mixed_link(r)).unwrap();
        let want = oracle_loglik(&inst.b, &Precision::Gamma(inst.gamma.clone()), y, x, r, None);
        prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{got} vs {want}");
    }

    #[test]
    fn adjusted_likelihoods_match_oracle(seed in any::<u64>()) {
        let inst = random_instance(seed, 10, 4, 2, true);
        let zp = zero_pattern(&inst.ds);
        let y = inst.ds.values();
        let x = inst.x.design();
        let r = inst.ref_index;
        for mode in MODES {
            let got = loglik_zadr_simple(&inst.b, inst.phi, &inst.p, &inst.ds, &inst.x, &zp, &simple_link(r), mode).unwrap();
            let want = oracle_loglik(&inst.b, &Precision::Phi(inst.phi), y, x, r, Some((&inst.p, mode)));
            prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{mode:?}: {got} vs {want}");
            let got = loglik_zadr_mixed(&inst.b, &inst.gamma, &inst.p, &inst.ds, &inst.x, &zp, &mixed_link(r), mode).unwrap();
            let want = oracle_loglik(&inst.b, &Precision::Gamma(inst.gamma.clone()), y, x, r, Some((&inst.p, mode)));
            prop_assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "{mode:?}: {got} vs {want}");
        }
    }

    #[test]
    fn gradients_match_finite_differences(seed in any::<u64>()) {
        let inst = random_instance(seed, 10, 4, 2, true);
        let zp = zero_pattern(&inst.ds);
        let d = inst.ds.num_components() - 1;
        let k = inst.x.design().ncols();
        let r = inst.ref_index;
        for kind in [ModelKind::Simple, ModelKind::Mixed] {
            let link = LinkSpec::new(r, kind);
            let prec = match kind {
                ModelKind::Simple => Precision::Phi(inst.phi),
                ModelKind::Mixed => Precision::Gamma(inst.gamma.clone()),
            };
            let theta = pack_params(&inst.b, &prec);
            for mode in MODES {
                let f = |t: &[f64]| {
                    let (b, pr) = unpack_params(t, kind, d, k).unwrap();
                    oracle_loglik(&b, &pr, inst.ds.values(), inst.x.design(), r, Some((&inst.p, mode)))
                };
                let fd = central_diff(f, &theta);
                let an = analytic_gradient(&theta, &inst.ds, &inst.x, Some(&zp), &link, mode).unwrap();
                prop_assert!(rel_inf_error(&an, &fd) <= 1e-6, "{kind:?} {mode:?}: {an:?} vs {fd:?}");
            }
        }
    }

    #[test]
    fn zero_free_adjusted_equals_plain(seed in any::<u64>()) {
        let inst = random_instance(seed, 10, 4, 2, false);
        let zp = zero_pattern(&inst.ds);
        let ones = vec![1.0; inst.ds.num_components()];
        let r = inst.ref_index;
        for mode in MODES {
            let a = loglik_zadr_simple(&inst.b, inst.phi, &ones, &inst.ds, &inst.x, &zp, &simple_link(r), mode).unwrap();
            let b = loglik_simple(&inst.b, inst.phi, &inst.ds, &inst.x, &simple_link(r)).unwrap();
            prop_assert_eq!(a, b);
            let a = loglik_zadr_mixed(&inst.b, &inst.gamma, &ones, &inst.ds, &inst.x, &zp, &mixed_link(r), mode).unwrap();
            let b = loglik_mixed(&inst.b, &inst.gamma, &inst.ds, &inst.x, &mixed_link(r)).unwrap();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn binary_term_is_additively_separable(seed in any::<u64>(), shift in -1.0f64..1.0) {
        // the difference between two p vectors does not depend on (B, phi),
        // so the Dirichlet-part maximizer does not depend on p
        let inst = random_instance(seed, 10, 4, 2, true);
        let zp = zero_pattern(&inst.ds);
        let r = inst.ref_index;
        let p2: Vec<f64> = inst.p.iter().map(|v| v * 0.5 + 0.25).collect();
        let b2 = inst.b.map(|v| v + shift);
        let f = |b: &DMatrix<f64>, p: &[f64]| {
            loglik_zadr_simple(b, inst.phi, p, &inst.ds, &inst.x, &zp, &simple_link(r), SubcompositionMode::AsWritten).unwrap()
        };
        let d1 = f(&inst.b, &inst.p) - f(&inst.b, &p2);
        let d2 = f(&b2, &inst.p) - f(&b2, &p2);
        prop_assert!((d1 - d2).abs() <= 1e-9 * d1.abs().max(1.0));
    }

    #[test]
    fn permuting_non_reference_components(seed in any::<u64>()) {
        let inst = random_instance(seed, 10, 4, 2, true);
        let d = inst.ds.num_components();
        let r = inst.ref_index;
        let others: Vec<usize> = (0..d).filter(|&j| j != r).collect();
        // swap the first two non-reference components
        let (c1, c2) = (others[0], others[1]);
        let mut perm: Vec<usize> = (0..d).collect();
        perm.swap(c1, c2);
        let yp = DMatrix::from_fn(inst.ds.n(), d, |i, j| inst.ds.values()[(i, perm[j])]);
        let dsp = CompositionDataset::from_matrix(yp).unwrap();
        let row_of = |c: usize| if c < r { c } else { c - 1 };
        let mut bp = inst.b.clone();
        bp.swap_rows(row_of(c1), row_of(c2));
        let mut pp = inst.p.clone();
        pp.swap(c1, c2);
        let zp = zero_pattern(&inst.ds);
        let zpp = zero_pattern(&dsp);
        for mode in MODES {
            let a = loglik_zadr_mixed(&inst.b, &inst.gamma, &inst.p, &inst.ds, &inst.x, &zp, &mixed_link(r), mode).unwrap();
            let b = loglik_zadr_mixed(&bp, &inst.gamma, &pp, &dsp, &inst.x, &zpp, &mixed_link(r), mode).unwrap();
            prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
        }
        let m1 = ZadrModel::from_parameters(inst.b.clone(), Precision::Phi(inst.phi), r, default_component_names(d), inst.x.covariate_names().to_vec()).unwrap();
        let m2 = ZadrModel::from_parameters(bp, Precision::Phi(inst.phi), r, default_component_names(d), inst.x.covariate_names().to_vec()).unwrap();
        let f1 = fitted_values(&m1, &inst.x).unwrap();
        let f2 = fitted_values(&m2, &inst.x).unwrap();
        for i in 0..inst.ds.n() {
            for j in 0..d {
                prop_assert!((f1.values()[(i, j)] - f2.values()[(i, perm[j])]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn fitted_rows_are_compositions(seed in any::<u64>()) {
        let inst = random_instance(seed, 10, 4, 2, false);
        let d = inst.ds.num_components();
        let m = ZadrModel::from_parameters(inst.b.clone(), Precision::Phi(inst.phi), inst.ref_index, default_component_names(d), inst.x.covariate_names().to_vec()).unwrap();
        let f = fitted_values(&m, &inst.x).unwrap();
        for i in 0..f.n() {
            let s: f64 = f.row(i).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(f.row(i).iter().all(|v| *v > 0.0));
        }
    }

    #[test]
    fn binary_log_prob_is_a_log_probability(u in prop::collection::vec(any::<bool>(), 1..6), p in prop::collection::vec(0.0f64..=1.0, 6)) {
        let p = &p[..u.len()];
        let v = binary_log_prob(&u, p).unwrap();
        prop_assert!(v <= 0.0);
        let direct: f64 = u.iter().zip(p).map(|(&ui, &pi)| if ui { pi } else { 1.0 - pi }).product();
        prop_assert!((v.exp() - direct).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_draws_lie_on_the_simplex(seed in any::<u64>(), phi in 0.05f64..500.0, raw in prop::collection::vec(0.01f64..1.0, 2..6)) {
        let s: f64 = raw.iter().sum();
        let a: Vec<f64> = raw.iter().map(|v| v / s).collect();
        let params = DirichletParams::new(phi, a).unwrap();
        let draws = zadr_core::dirichlet::sample(&params, 20, seed);
        for i in 0..draws.nrows() {
            let row = draws.row(i);
            prop_assert!(row.iter().all(|v| *v >= 0.0 && v.is_finite()));
            prop_assert!((row.sum() - 1.0).abs() < 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    /// The final fit is at least as good as the initial coefficients under
    /// the zero-adjusted objective.
    #[test]
    fn final_fit_improves_on_initial(seed in 0u64..1000) {
        let truth = reference_truth();
        let x = log_depth_design();
        let mut rng = rng_from_seed(seed);
        let supports: Vec<Vec<usize>> = (0..30).map(|i| if i % 6 == 0 { vec![0, 1, 2 + (i / 6) % 2] } else { vec![0, 1, 2, 3] }).collect();
        let y = simulate_responses(&truth, &x, &supports, &mut rng).unwrap();
        let ds = CompositionDataset::from_matrix(y).unwrap().with_component_names(truth.component_names.clone()).unwrap();
        let link = LinkSpec::new(0, ModelKind::Simple);
        let out = fit(&ds, &x, &link, &FitOptions::default()).unwrap();
        let zp = zero_pattern(&ds);
        let p = estimate_p(&zp);
        let Precision::Phi(phi0) = out.initial.precision else { unreachable!() };
        let at_initial = loglik_zadr_simple(&out.initial.b, phi0, &p, &ds, &x, &zp, &link, out.final_model.zero_mode).unwrap();
        prop_assert!(out.final_model.loglik >= at_initial - 1e-9, "{} < {at_initial}", out.final_model.loglik);
    }
}
