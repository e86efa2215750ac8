use jc_postselect::evolution::evolve_one_atom;
use jc_postselect::fock::{auto_dimension, coherent_amplitudes, pure_density, PSD_TOL};
use jc_postselect::harness::SweepRange;
use jc_postselect::oracles::{mean_n_absorption, mean_n_postselect, postselected_state_closed_form, SeriesParams};
use jc_postselect::phase_space::{q_function, GridSpec};
use jc_postselect::{apply_channel, ChannelKind, Complex64, FieldState, InputSpec, InteractionConfig};
use ndarray::Array2;
use proptest::prelude::*;

const DIM: usize = 48;

fn coherent(alpha: Complex64, dim: usize) -> FieldState {
    pure_density(&coherent_amplitudes(alpha, dim).unwrap()).normalized().unwrap()
}

/// Two-component mixture of coherent states, generic enough to have
/// off-diagonal structure at every order.
fn mixture() -> impl Strategy<Value = FieldState> {
    (0.0..2.5f64, 0.0..std::f64::consts::TAU, 0.0..2.5f64, 0.0..std::f64::consts::TAU, 0.0..=1.0f64).prop_map(
        |(m1, p1, m2, p2, w)| {
            let a = coherent(Complex64::from_polar(m1, p1), DIM);
            let b = coherent(Complex64::from_polar(m2, p2), DIM);
            let m: Array2<Complex64> = a.matrix() * Complex64::from(w) + b.matrix() * Complex64::from(1.0 - w);
            FieldState::from_matrix(m).unwrap().normalized().unwrap()
        },
    )
}

fn max_anti_hermitian(m: &Array2<Complex64>) -> f64 {
    let mut worst: f64 = 0.0;
    for ((i, j), v) in m.indexed_iter() {
        worst = worst.max((v - m[[j, i]].conj()).norm());
    }
    worst
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn absorption_preserves_trace(rho in mixture(), r in 0.0..3.0f64, n in 1usize..8) {
        let out = apply_channel(&rho, &InteractionConfig::new(r, n, DIM).unwrap(), ChannelKind::Absorption).unwrap();
        for t in &out.per_step_trace {
            prop_assert!((t - 1.0).abs() < 1e-12, "trace {}", t);
        }
        prop_assert_eq!(out.success_probability, 1.0);
    }

    #[test]
    fn blocks_split_the_trace(rho in mixture(), r in 0.0..3.0f64) {
        let blocks = evolve_one_atom(&rho, r).unwrap();
        prop_assert!((blocks.ground_trace() + blocks.excited_trace() - 1.0).abs() < 1e-12);
        prop_assert!(blocks.ground_trace() >= -1e-15 && blocks.excited_trace() >= -1e-15);
    }

    #[test]
    fn outputs_are_density_matrices(rho in mixture(), r in 0.0..3.0f64, n in 1usize..6) {
        let config = InteractionConfig::new(r, n, DIM).unwrap();
        for kind in ChannelKind::ALL {
            let Ok(out) = apply_channel(&rho, &config, kind) else { continue };
            let m = out.final_state.matrix();
            prop_assert!(max_anti_hermitian(m) < 1e-12, "{kind}");
            prop_assert!((out.final_state.trace() - 1.0).abs() < 1e-10, "{kind}");
            prop_assert!(out.final_state.is_positive_semidefinite(PSD_TOL), "{kind}");
            prop_assert!((0.0..=1.0 + 1e-12).contains(&out.success_probability), "{kind}");
        }
    }

    #[test]
    fn ground_filter_is_cos_power(mag in 0.0..3.0f64, phase in 0.0..std::f64::consts::TAU, r in 0.0..1.5f64, n in 1usize..12) {
        let alpha = Complex64::from_polar(mag, phase);
        let dim = auto_dimension(mag * mag, true);
        let rho = coherent(alpha, dim);
        let Ok(out) = apply_channel(&rho, &InteractionConfig::new(r, n, dim).unwrap(), ChannelKind::PostselectGround) else {
            return Ok(());
        };
        let closed = postselected_state_closed_form(alpha, r, n, dim).unwrap();
        for (a, b) in out.final_state.matrix().iter().zip(closed.matrix().iter()) {
            prop_assert!((a - b).norm() < 1e-10, "{} vs {}", a, b);
        }
    }

    #[test]
    fn success_probability_never_grows(a2 in 0.0..20.0f64, r in 0.0..3.0f64) {
        let dim = auto_dimension(a2, true);
        let rho = coherent(Complex64::new(a2.sqrt(), 0.0), dim);
        let mut last = 1.0;
        for n in 1..=6 {
            let Ok(out) = apply_channel(&rho, &InteractionConfig::new(r, n, dim).unwrap(), ChannelKind::PostselectGround) else {
                break;
            };
            prop_assert!(out.success_probability <= last * (1.0 + 1e-12));
            last = out.success_probability;
        }
    }

    #[test]
    fn single_atom_means_match_series(a2 in 0.0..20.0f64, r in 0.0..3.0f64) {
        let dim = auto_dimension(a2, true);
        let rho = coherent(Complex64::new(a2.sqrt(), 0.0), dim);
        let config = InteractionConfig::new(r, 1, dim).unwrap();
        let params = SeriesParams::new(a2, r, 1).unwrap();
        let abs = apply_channel(&rho, &config, ChannelKind::Absorption).unwrap().mean_out();
        prop_assert!((abs - mean_n_absorption(&params).unwrap()).abs() < 1e-10);
        if let Ok(post) = apply_channel(&rho, &config, ChannelKind::PostselectGround) {
            prop_assert!((post.mean_out() - mean_n_postselect(&params).unwrap()).abs() < 1e-10);
        }
    }

    #[test]
    fn q_is_nonnegative_and_bounded(rho in mixture()) {
        let grid = GridSpec::new(-5.0, 5.0, -5.0, 5.0, 41, 41).unwrap();
        let q = q_function(&rho, &grid).unwrap();
        prop_assert!(q.min_value() >= -1e-14);
        prop_assert!(q.values.iter().all(|&v| v <= std::f64::consts::FRAC_1_PI + 1e-12));
    }

    #[test]
    fn squeezed_moments(mag in 0.0..2.0f64, phase in 0.0..std::f64::consts::TAU, s in 0.0..0.8f64, theta in 0.0..std::f64::consts::TAU) {
        let alpha = Complex64::from_polar(mag, phase);
        let spec = InputSpec::squeezed(alpha, s, theta);
        let dim = spec.auto_dimension(false).unwrap();
        let rho = pure_density(&spec.amplitudes(dim).unwrap()).normalized().unwrap();
        let (sh, ch) = (s.sinh(), s.cosh());
        let want_n = mag * mag + sh * sh;
        let want_a2 = alpha * alpha - Complex64::from_polar(sh * ch, theta);
        prop_assert!((rho.mean_photon_number().unwrap() - want_n).abs() < 1e-8);
        prop_assert!((rho.mean_annihilation() - alpha).norm() < 1e-8);
        prop_assert!((rho.mean_annihilation_sq() - want_a2).norm() < 1e-8);
    }

    #[test]
    fn sweep_grid_is_inclusive(min in 0.0..2.0f64, span in 0.0..3.0f64, step in 0.001..1.0f64) {
        let pts = SweepRange::new(min, min + span, step).points();
        prop_assert_eq!(pts[0], min);
        prop_assert_eq!(*pts.last().unwrap(), min + span);
        prop_assert!(pts.windows(2).all(|w| w[1] > w[0] && w[1] - w[0] <= step * (1.0 + 1e-9)));
    }
}
