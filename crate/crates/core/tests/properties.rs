//! Randomized invariants of every module.

use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_anm::anm::projection::is_hermitian_toeplitz;
use ris_anm::anm::{psd_project, solve_anm, toeplitz_average, AnmProblem, Penalty, SolverConfig};
use ris_anm::channel::{
    build_channel, circular_distance, effective_channel, effective_channel_from_differences,
    response_from_frequency, response_from_sine, ChannelRealization, LinkArrays, PathLossModel,
    PathSampler, PhaseControl,
};
use ris_anm::harness::RunningStats;
use ris_anm::linalg::{cis, frobenius, max_abs_diff, min_eigenvalue, numerical_rank, CMat, CVec};
use ris_anm::pipeline::{design_phase_matrix, design_beamformers, spectral_efficiency, LinkDesign};
use ris_anm::recovery::{angle_differences, gain_regressor, ls_gains, root_music, CascadedParams};
use ris_anm::signal::{ActivePlacement, BeamKind, TrainingConfig, TrainingSpec};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(r, i)| c(r, i))
}

fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = CMat> {
    prop::collection::vec(complex(), rows * cols)
        .prop_map(move |v| CMat::from_column_slice(rows, cols, &v))
}

fn realization(seed: u64, n_paths: usize) -> ChannelRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ChannelRealization::sample(&mut rng, LinkArrays::paper_default(), n_paths, n_paths, &PathSampler::default())
        .unwrap()
}

fn random_phases(seed: u64, n: usize) -> PhaseControl {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    PhaseControl::from_phases(&(0..n).map(|_| rng.random_range(0.0..6.3)).collect::<Vec<_>>())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // ------------------------------------------------------------ channel

    #[test]
    fn responses_have_unit_modulus(n in 1usize..64, s in -1.0..1.0f64) {
        for z in response_from_sine(n, s).iter() {
            prop_assert!((z.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn hop_rank_is_bounded_by_paths(seed in any::<u64>(), l in 1usize..4) {
        let real = realization(seed, l);
        prop_assert!(numerical_rank(&real.h_mr, 1e-8) <= l);
        prop_assert!(numerical_rank(&real.h_rb, 1e-8) <= l);
        let rebuilt = build_channel(&real.params_mr, real.arrays.ris, real.arrays.ms).unwrap();
        prop_assert!(max_abs_diff(&rebuilt, &real.h_mr) <= 1e-12);
    }

    #[test]
    fn effective_channel_forms_agree(seed in any::<u64>(), l in 1usize..4) {
        let real = realization(seed, l);
        let omega = random_phases(seed ^ 1, real.arrays.ris.n_elements());
        let a = effective_channel(&real, &omega).unwrap();
        let b = effective_channel_from_differences(&real, &omega).unwrap();
        prop_assert!(max_abs_diff(&a, &b) <= 1e-10 * (1.0 + frobenius(&a)));
    }

    #[test]
    fn path_loss_decreases_with_distance(d1 in 1.0..100.0f64, d2 in 1.0..100.0f64, k in 1.01..3.0f64) {
        let m = PathLossModel::default();
        prop_assert!(m.path_loss(d1 * k, None).unwrap() < m.path_loss(d1, None).unwrap());
        prop_assert!(m.path_loss(d1, Some(d2 * k)).unwrap() < m.path_loss(d1, Some(d2)).unwrap());
    }

    // ------------------------------------------------------------- signal

    #[test]
    fn schedules_select_rows_and_keep_pilots_fixed(
        seed in any::<u64>(),
        m in prop::sample::select(vec![2usize, 4, 8]),
        random_place in any::<bool>(),
    ) {
        let arrays = LinkArrays::paper_default();
        let mut spec = TrainingSpec::table_setup(1).unwrap();
        spec.n_active = m;
        spec.n_rf_ris = m;
        spec.pilot = BeamKind::RandomUnitModulus;
        spec.placement = if random_place { ActivePlacement::Random } else { ActivePlacement::Uniform };
        let cfg = TrainingConfig::generate(&spec, &arrays, 0.1, seed).unwrap();
        let h = CMat::from_fn(32, 3, |i, j| c(i as f64, j as f64));
        for k in 0..cfg.n_blocks {
            let picked = cfg.selection(k) * &h;
            for (r, &idx) in cfg.active_sets[k].iter().enumerate() {
                prop_assert_eq!(picked.row(r).into_owned(), h.row(idx).into_owned());
            }
            for (i, w) in cfg.phase_schedule[k].diagonal().iter().enumerate() {
                if cfg.active_sets[k].contains(&i) {
                    prop_assert_eq!(*w, c(0.0, 0.0));
                } else {
                    prop_assert!((w.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
        // a seed fully determines the schedule
        let again = TrainingConfig::generate(&spec, &arrays, 0.1, seed).unwrap();
        prop_assert_eq!(&again, &cfg);
    }

    // ------------------------------------------------------- projections

    #[test]
    fn psd_projection_is_idempotent(m in matrix(5, 5)) {
        let h = (&m + m.adjoint()) * c(0.5, 0.0);
        let p = psd_project(&h).unwrap();
        prop_assert!(min_eigenvalue(&p) > -1e-10);
        prop_assert!(max_abs_diff(&psd_project(&p).unwrap(), &p) < 1e-9);
    }

    #[test]
    fn toeplitz_residual_is_orthogonal(m in matrix(6, 6), d in matrix(6, 6)) {
        let t = toeplitz_average(&m);
        prop_assert!(is_hermitian_toeplitz(&t, 1e-12));
        let dir = toeplitz_average(&d);
        let inner: f64 = (&m - &t).iter().zip(dir.iter()).map(|(x, y)| (x * y.conj()).re).sum();
        prop_assert!(inner.abs() < 1e-9);
    }

    // ----------------------------------------------------------- recovery

    #[test]
    fn root_music_recovers_and_ignores_scale(
        f1 in 0.0..1.0f64,
        gap in 0.25..0.75f64,
        p2 in 0.1..1.0f64,
        scale in 1e-3..1e3f64,
    ) {
        let n = 16;
        let f2 = (f1 + gap) % 1.0;
        let mut t = CMat::zeros(n, n);
        for (f, p) in [(f1, 1.0), (f2, p2)] {
            let a = response_from_frequency(n, f);
            t += &a * a.adjoint() * c(p, 0.0);
        }
        let e = root_music(&t, 2).unwrap();
        let e2 = root_music(&(&t * c(scale, 0.0)), 2).unwrap();
        for &f in &e.freqs {
            let d = circular_distance(f, f1, 1.0).min(circular_distance(f, f2, 1.0));
            prop_assert!(d < 1e-6, "frequency {} not in {:?}", f, (f1, f2));
        }
        for (a, b) in e.freqs.iter().zip(&e2.freqs) {
            prop_assert!(circular_distance(*a, *b, 1.0) < 1e-10);
        }
    }

    #[test]
    fn ls_residual_is_orthogonal(
        left in matrix(5, 6),
        right in matrix(7, 4),
        y in matrix(5, 4),
        aod in prop::collection::vec(0.0..1.0f64, 2),
        aoa in prop::collection::vec(0.0..1.0f64, 2),
    ) {
        let yv = CVec::from_column_slice(y.as_slice());
        let g = ls_gains(&yv, &left, &right, &aod, &aoa, 1.0).unwrap();
        prop_assume!(!g.ridge_fallback);
        let phi = gain_regressor(&left, &right, &aod, &aoa, 1.0);
        let r = &yv - &phi * CVec::from_column_slice(&g.gains);
        prop_assert!((phi.adjoint() * r).norm() <= 1e-8 * phi.norm() * yv.norm());
    }

    #[test]
    fn angle_differences_invert_through_sine(
        phi in prop::collection::vec(-0.5..0.5f64, 1..4),
        theta in prop::collection::vec(-0.5..0.5f64, 1..4),
    ) {
        let phi: Vec<f64> = phi.iter().map(|s| s.asin()).collect();
        let theta: Vec<f64> = theta.iter().map(|s| s.asin()).collect();
        let d = angle_differences(&phi, &theta).unwrap();
        for (l, p) in (0..phi.len()).flat_map(|l| (0..theta.len()).map(move |p| (l, p))) {
            prop_assert!((d[(l, p)].sin() - (phi[l].sin() - theta[p].sin())).abs() < 1e-14);
        }
    }

    #[test]
    fn cascaded_ordering_matches_effective_channel(seed in any::<u64>()) {
        let real = realization(seed, 2);
        let omega = random_phases(seed ^ 2, 32);
        let cas = CascadedParams::new(
            &real.params_mr.aoa,
            &real.params_rb.aod,
            &real.params_mr.gains,
            &real.params_rb.gains,
        )
        .unwrap();
        let g = effective_channel(&real, &omega).unwrap();
        // entry i = l + p L_MR pairs MS-RIS path l with RIS-BS path p
        for (i, (d, rho)) in cas.delta_vec.iter().zip(&cas.rho_prod).enumerate() {
            let (l, p) = (i % 2, i / 2);
            let inner: Complex64 = omega
                .diagonal()
                .iter()
                .zip(response_from_sine(32, d.sin()).iter())
                .map(|(w, a)| w * a)
                .sum();
            prop_assert!((rho * inner - g[(p, l)]).norm() < 1e-10 * (1.0 + g[(p, l)].norm()));
        }
    }

    // ----------------------------------------------------------- pipeline

    #[test]
    fn phase_design_ignores_gain_scale(seed in any::<u64>(), scale in 1e-3..1e3f64) {
        let real = realization(seed, 2);
        let cas = CascadedParams::new(&real.params_mr.aoa, &real.params_rb.aod, &real.params_mr.gains, &real.params_rb.gains).unwrap();
        let mut scaled = cas.clone();
        for r in &mut scaled.rho_prod {
            *r *= scale;
        }
        prop_assert_eq!(design_phase_matrix(&cas, 32).unwrap(), design_phase_matrix(&scaled, 32).unwrap());
    }

    #[test]
    fn perfect_csi_beamformers_dominate(seed in any::<u64>(), noise in 0.0..1.0f64) {
        let real = realization(seed, 2);
        let omega = random_phases(seed ^ 3, 32);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 4);
        let perturb = |m: &CMat, rng: &mut ChaCha8Rng| {
            m + ris_anm::signal::complex_noise(rng, m.nrows(), m.ncols(), noise * frobenius(m).powi(2) / m.len() as f64)
        };
        let h_rb = perturb(&real.h_rb, &mut rng);
        let h_mr = perturb(&real.h_mr, &mut rng);
        let bf = design_beamformers(&h_rb, &omega, &h_mr).unwrap();
        let est = LinkDesign { omega_data: omega.clone(), f_ms: bf.f_ms, w_bs: bf.w_bs };
        let perfect = est.with_channels(&real.h_rb, &real.h_mr).unwrap();
        let se = |d: &LinkDesign| spectral_efficiency(&real.h_rb, &real.h_mr, d, 1.0, 1.0, 1e-3).unwrap();
        prop_assert!(se(&perfect) >= se(&est) * (1.0 - 1e-12));
    }

    // ------------------------------------------------------------ harness

    #[test]
    fn partition_aggregates_merge(xs in prop::collection::vec(-1e3..1e3f64, 2..200), cut in 0.0..1.0f64) {
        let k = ((xs.len() as f64) * cut) as usize;
        let full: RunningStats = xs.iter().copied().collect();
        let a: RunningStats = xs[..k].iter().copied().collect();
        let b: RunningStats = xs[k..].iter().copied().collect();
        let merged = a.merge(&b);
        prop_assert_eq!(merged.count(), full.count());
        prop_assert!((merged.mean() - full.mean()).abs() <= 1e-9 * (1.0 + full.mean().abs()));
        prop_assert!((merged.variance() - full.variance()).abs() <= 1e-7 * (1.0 + full.variance()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn solver_output_is_feasible_toeplitz(
        left in matrix(4, 5),
        right in matrix(4, 3),
        y in matrix(4, 3),
        reg in 0.05..2.0f64,
    ) {
        let problem = AnmProblem::new(y, left, right, reg).unwrap();
        let sol = solve_anm(&problem, &SolverConfig::default()).unwrap();
        prop_assert!(min_eigenvalue(&sol.block_matrix()) >= -1e-8);
        prop_assert!(is_hermitian_toeplitz(&sol.toeplitz_left, 0.0));
        prop_assert!(is_hermitian_toeplitz(&sol.toeplitz_right, 0.0));
    }

    #[test]
    fn merit_never_increases_under_fixed_penalty(
        left in matrix(4, 4),
        right in matrix(4, 4),
        y in matrix(4, 4),
        reg in 0.05..2.0f64,
    ) {
        let problem = AnmProblem::new(y, left, right, reg).unwrap();
        let cfg = SolverConfig {
            penalty: Penalty::Fixed(0.05),
            adaptive_penalty: false,
            relaxation: 1.0,
            trace_every: 1,
            max_iters: 400,
            ..SolverConfig::default()
        };
        let sol = solve_anm(&problem, &cfg).unwrap();
        for w in sol.diagnostics.trajectory.windows(2) {
            prop_assert!(w[1].merit <= w[0].merit * (1.0 + 1e-10) + 1e-10);
        }
    }

    #[test]
    fn solver_commutes_with_unit_modulus_rotation(
        left in matrix(4, 4),
        right in matrix(4, 3),
        y in matrix(4, 3),
        phase in 0.0..std::f64::consts::TAU,
    ) {
        let cfg = SolverConfig { abs_tol: 1e-10, rel_tol: 1e-10, max_iters: 20_000, ..SolverConfig::default() };
        let base = solve_anm(&AnmProblem::new(y.clone(), left.clone(), right.clone(), 0.5).unwrap(), &cfg).unwrap();
        let u = cis(phase);
        let rot = solve_anm(&AnmProblem::new(&y * u, &left * u, right, 0.5).unwrap(), &cfg).unwrap();
        prop_assert!(max_abs_diff(&base.h_hat, &rot.h_hat) <= 1e-6 * (1.0 + frobenius(&base.h_hat)));
    }
}

#[test]
fn broadside_response_is_all_ones() {
    assert!(response_from_sine(9, 0.0).iter().all(|z| *z == c(1.0, 0.0)));
}

#[test]
fn path_loss_at_reference_distance_is_beta0() {
    let m = PathLossModel::default();
    assert_eq!(m.path_loss(m.d0, None).unwrap(), m.beta0());
}

#[test]
fn noiseless_toeplitz_rank_matches_path_count() {
    let truth = ris_anm::channel::PathParams::new(vec![-0.4, 0.3], vec![0.2, -0.35], vec![c(1.0, 0.2), c(-0.6, 0.5)]).unwrap();
    let (n_a, n_b) = (8, 8);
    let h = build_channel(&truth, ris_anm::channel::ArrayGeometry::new(n_a).unwrap(), ris_anm::channel::ArrayGeometry::new(n_b).unwrap()).unwrap();
    let problem = AnmProblem::new(h.clone(), CMat::identity(n_a, n_a), CMat::identity(n_b, n_b), 1e-4).unwrap();
    let cfg = SolverConfig { abs_tol: 1e-10, rel_tol: 1e-9, max_iters: 50_000, ..SolverConfig::default() };
    let sol = solve_anm(&problem, &cfg).unwrap();
    assert_eq!(numerical_rank(&sol.toeplitz_left, 1e-6), 2);
    assert_eq!(numerical_rank(&sol.toeplitz_right, 1e-6), 2);
}
