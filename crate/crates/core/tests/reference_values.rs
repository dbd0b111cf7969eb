//! Hand-derived and closed-form reference values, one test per case.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex;
use optoblock::amplitude::{
    amplitude_rhs, evolve_amplitudes, steady_amplitudes, AmplitudeVector, VacuumAnchor,
};
use optoblock::analytic::{
    amplitudes, g2_analytic, g3_analytic, m_n, optimal_1pb, optimal_2pb, poisson_deviation,
    spectrum_level, PumpBranch,
};
use optoblock::fock::{annihilation, build_hamiltonians, full_hamiltonian, reduced_hamiltonian, tensor};
use optoblock::liouvillian::{build_liouvillian, evolve, g2_of_tau, steady_state, DensityMatrix};
use optoblock::observables::{g2_numeric, g3_numeric, photon_distribution, report, Source};
use optoblock::params::validate;
use optoblock::sweep::{figure_preset, run_sweep, Axis, SweepSpec};
use optoblock::{Error, Operator, Params, RegimeWarning, Truncation};

fn c(re: f64, im: f64) -> Complex<f64> {
    Complex::new(re, im)
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn quiet() -> Params {
    Params {
        drive: 0.0,
        gain: 0.0,
        ..Params::default_1pb()
    }
}

fn bare_cavity() -> Params {
    Params {
        g: 0.0,
        gain: 0.0,
        ..Params::default_1pb()
    }
}

fn pumped_1pb(delta_c: f64) -> Params {
    let p = Params::default_1pb().with_detuning(delta_c);
    optimal_1pb(&p).unwrap().apply(&p)
}

fn pumped_2pb(delta_c: f64) -> Params {
    let p = Params::default_2pb().with_detuning(delta_c);
    optimal_2pb(&p).unwrap().apply(&p)
}

// Parameters

#[test]
fn one_photon_defaults() {
    let p = Params::default_1pb();
    assert_eq!(p.g / p.omega_m, 0.05);
    assert_eq!(p.drive / p.kappa, 0.05);
    assert_eq!(p.kappa, 1.0);
    assert!(close(p.gamma_m, 1e-6 * p.omega_m, 1e-18));
    assert!(close(p.gamma_m, 1e-4, 1e-18));
}

#[test]
fn two_photon_defaults() {
    let p = Params::default_2pb();
    assert_eq!(p.g * p.g / p.omega_m, 1.0);
    assert_eq!(p.drive, 0.05);
    assert_eq!(p.kappa, 1.0);
}

#[test]
fn validation_cases() {
    assert!(validate(Params::default_1pb()).unwrap().warnings.is_empty());
    let strong = Params {
        drive: 0.5,
        ..Params::default_1pb()
    };
    assert!(validate(strong).unwrap().warnings.contains(&RegimeWarning::StrongDrive));
    let dead = Params {
        kappa: 0.0,
        ..Params::default_1pb()
    };
    assert!(matches!(validate(dead), Err(Error::NonPositiveKappa(_))));
}

// Analytic model

#[test]
fn m_n_values() {
    for g in [0.0, 3.0, 12.0] {
        let p = Params {
            g,
            ..Params::default_1pb()
        };
        assert_eq!(m_n(&p, 0), c(0.0, 1.0));
    }
    assert!((m_n(&Params::default_1pb(), 1) - c(0.5, 1.0)).norm() < 1e-15);
    assert!((m_n(&Params::default_2pb().with_detuning(2.0), 2) - c(0.0, 1.0)).norm() < 1e-15);
}

#[test]
fn undriven_amplitudes_are_vacuum() {
    let a = amplitudes(&quiet()).to_array();
    assert_eq!(a, [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
}

#[test]
fn bare_cavity_amplitudes() {
    let a = amplitudes(&bare_cavity());
    assert!((a.c1 - c(0.0, -0.1)).norm() < 1e-15);
    assert!((a.c2 - c(-2f64.sqrt() * 0.005, 0.0)).norm() < 1e-15);
}

#[test]
fn optimal_pump_nulls_c2() {
    let a = amplitudes(&pumped_1pb(0.0));
    assert!(a.c2.norm() < 1e-15 * a.c1.norm());
}

#[test]
fn analytic_g2_cases() {
    // Without coupling the three-photon term adds exactly 4E²/|M₁|², which
    // is 0.01 on resonance.
    for d in [-2.0, 0.0, 1.7] {
        let p = bare_cavity().with_detuning(d);
        let g2 = g2_analytic(&p).unwrap();
        assert!(close(g2, 1.0 + 4.0 * 0.05f64.powi(2) / m_n(&p, 1).norm_sqr(), 1e-12));
        assert!(g2 - 1.0 <= 0.01 + 1e-12);
    }
    let p = pumped_1pb(0.0);
    let a = amplitudes(&p);
    let g2 = g2_analytic(&p).unwrap();
    assert!(close(g2, 6.0 * a.c3.norm_sqr() / a.c1.norm_sqr().powi(2), 1e-15));
    assert!(g2 > 0.0 && g2 < 0.1);
    assert!(matches!(g2_analytic(&quiet()), Err(Error::ZeroDrive)));
}

#[test]
fn analytic_g3_cases() {
    let p = pumped_2pb(2.0);
    assert!(g3_analytic(&p).unwrap() < 1e-20);
    assert!(close(g3_analytic(&bare_cavity()).unwrap(), 1.0, 0.02));
    assert!(matches!(g3_analytic(&quiet()), Err(Error::ZeroDrive)));
}

#[test]
fn optimal_1pb_on_resonance_without_coupling() {
    for e in [0.01, 0.05, 0.2] {
        let p = Params {
            g: 0.0,
            drive: e,
            ..Params::default_1pb()
        };
        let o = optimal_1pb(&p).unwrap();
        assert!(close(o.gain, 2.0 * e * e, 1e-16));
        assert!(close(o.theta, FRAC_PI_2, 1e-15));
        assert_eq!(o.branch, PumpBranch::OnePhoton);
    }
}

#[test]
fn optimal_1pb_at_defaults() {
    let o = optimal_1pb(&Params::default_1pb()).unwrap();
    assert!(close(o.gain, 0.005 / 1.25f64.sqrt(), 1e-15));
    assert!(close(o.gain, 0.004472, 1e-6));
    assert!(close(o.theta, PI - 1f64.atan2(0.5), 1e-14));
    assert!(close(o.theta, 2.0344, 1e-4));
}

#[test]
fn optimal_1pb_root_on_a_grid() {
    for k in 0..41 {
        let p = Params::default_1pb()
            .with_detuning(-4.0 + 0.2 * k as f64)
            .with_pump(0.0, 0.0);
        let a = amplitudes(&optimal_1pb(&p).unwrap().apply(&p));
        assert!(a.c2.norm() < 1e-12 * a.c1.norm());
    }
}

#[test]
fn optimal_2pb_branch_and_root() {
    let o = optimal_2pb(&Params::default_2pb().with_detuning(2.0)).unwrap();
    assert_eq!(o.branch, PumpBranch::TwoPhotonMinus);
    let p = pumped_2pb(2.0);
    let a = amplitudes(&p);
    // Relative to the unpumped three-photon amplitude.
    let scale = amplitudes(&Params::default_2pb().with_detuning(2.0)).c3.norm();
    assert!(a.c3.norm() < 1e-10 * scale);
}

#[test]
fn optimal_2pb_curves_are_continuous_off_the_switch() {
    let base = Params::default_2pb();
    let threshold = 5.0 / 3.0;
    let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.01).collect();
    let pumps: Vec<_> = grid
        .iter()
        .map(|&d| optimal_2pb(&base.with_detuning(d)).unwrap())
        .collect();
    for (d, o) in grid.iter().zip(&pumps) {
        let p = o.apply(&base.with_detuning(*d));
        let unpumped = amplitudes(&base.with_detuning(*d)).c3.norm();
        assert!(amplitudes(&p).c3.norm() < 1e-10 * unpumped, "root fails at {d}");
    }
    for k in 1..grid.len() {
        if grid[k - 1] <= threshold && grid[k] > threshold {
            assert_ne!(pumps[k - 1].branch, pumps[k].branch);
            continue;
        }
        let z0 = pumps[k - 1].complex();
        let z1 = pumps[k].complex();
        assert!((z1 - z0).norm() < 0.05, "jump at {}", grid[k]);
    }
}

#[test]
fn spectrum_levels() {
    let p = Params::default_1pb().with_detuning(0.25);
    for g in [1.0, 7.0] {
        let q = Params { g, ..p };
        assert_eq!(spectrum_level(&q, 0), 0.0);
    }
    assert!(close(spectrum_level(&p, 1), 0.0, 1e-16));
    assert!(close(spectrum_level(&p, 2), -0.5, 1e-15));
}

#[test]
fn poisson_deviation_cases() {
    let mean: f64 = 0.01;
    let poisson: Vec<f64> = (0..8)
        .scan(mean.exp().recip(), |acc, n| {
            let v = *acc;
            *acc *= mean / (n + 1) as f64;
            Some(v)
        })
        .collect();
    let d = poisson_deviation(&poisson, mean).unwrap();
    assert!(d.iter().all(|x| x.abs() < 1e-13));
    assert!(matches!(poisson_deviation(&[1.0, 0.0, 0.0], 0.0), Err(Error::ZeroMean)));
}

#[test]
fn two_photon_poisson_pattern() {
    let r = report(&pumped_2pb(2.0), &Truncation::default(), Source::Lindblad).unwrap();
    assert!(r.poisson_deviations[2] > 0.0);
    assert!(r.poisson_deviations[3] < -0.99);
    // Pair creation by the pump feeds n = 4 straight from n = 2, so the
    // n = 4 entry sits above the Poisson value.
    assert!(r.poisson_deviations[4] > 0.0);
}

// Fock operators

#[test]
fn annihilation_matrices() {
    let a2: Operator = annihilation(2).unwrap();
    assert_eq!(a2.entries(), &[(0, 1, c(1.0, 0.0))]);
    let a4: Operator = annihilation(4).unwrap();
    let want: Vec<_> = (1..4).map(|n| (n - 1, n, c((n as f64).sqrt(), 0.0))).collect();
    assert_eq!(a4.entries(), want.as_slice());
    assert!(matches!(annihilation::<f64>(1), Err(Error::DimTooSmall(1))));
}

#[test]
fn tensor_cases() {
    assert_eq!(tensor(&Operator::identity(2), &Operator::identity(3)), Operator::identity(6));
    let a = tensor(&annihilation(2).unwrap(), &Operator::identity(2));
    // |1⟩⊗|0⟩ is index 2 in cavity-first ordering.
    let out = a.apply(&[c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
    assert_eq!(out, vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
    let x: Operator = annihilation(4).unwrap();
    let y = Operator::number(3).add(&annihilation(3).unwrap());
    assert_eq!(tensor(&x, &y).nnz(), x.nnz() * y.nnz());
}

#[test]
fn free_hamiltonian_diagonal() {
    let p = Params {
        g: 0.0,
        ..quiet().with_detuning(0.3)
    };
    let t = Truncation::new(4, 3).unwrap();
    let h = full_hamiltonian(&p, &t);
    for i in 0..t.dim() {
        let (na, nb) = (i / t.phonon_dim(), i % t.phonon_dim());
        assert!((h.get(i, i) - c(0.3 * na as f64 + 100.0 * nb as f64, 0.0)).norm() < 1e-12);
        for j in 0..t.dim() {
            if j != i {
                assert_eq!(h.get(i, j), c(0.0, 0.0));
            }
        }
    }
}

#[test]
fn reduced_hamiltonian_diagonals() {
    let h = reduced_hamiltonian(&Params::default_1pb(), &Truncation::new(3, 0).unwrap());
    for (n, want) in [0.0, -0.25, -1.0, -2.25].iter().enumerate() {
        assert!((h.get(n, n) - c(*want, 0.0)).norm() < 1e-14);
    }
    let p = Params::default_2pb().with_detuning(0.6);
    let h = reduced_hamiltonian(&p, &Truncation::new(6, 0).unwrap());
    for n in 0..7 {
        let nf = n as f64;
        assert!(close(h.get(n, n).re, spectrum_level(&p, n), 1e-13));
        assert!(close(h.get(n, n).re, nf * 0.6 - nf * nf, 1e-13));
    }
}

// Amplitude equations

#[test]
fn undriven_vacuum_has_zero_derivative() {
    let d = amplitude_rhs(&quiet(), &AmplitudeVector::vacuum(5)).unwrap();
    assert!(d.values.iter().all(|v| v.norm() == 0.0));
}

#[test]
fn single_photon_derivative() {
    let p = Params { g: 0.0, ..quiet() };
    let d = amplitude_rhs(&p, &AmplitudeVector::fock(4, 1)).unwrap();
    assert!((d.values[1] - c(-0.5, 0.0)).norm() < 1e-15);
}

#[test]
fn amplitude_equations_match_effective_hamiltonian() {
    let p = Params::default_2pb().with_detuning(-0.7).with_pump(0.03, 1.1);
    let state = AmplitudeVector::new((0..9).map(|k| c((k as f64).sin(), (k as f64 * 0.3).cos())).collect());
    let rhs = amplitude_rhs(&p, &state).unwrap();
    let h = build_hamiltonians(&p, &Truncation::new(8, 0).unwrap()).effective;
    for (x, y) in rhs.values.iter().zip(h.apply(&state.values)) {
        assert!((x - y * c(0.0, -1.0)).norm() < 1e-12);
    }
}

#[test]
fn vanishing_drive_keeps_amplitudes_small() {
    let p = Params {
        drive: 1e-9,
        ..quiet()
    };
    let s = steady_amplitudes(&p, &Truncation::default()).unwrap();
    assert!(s.values[1..].iter().all(|v| v.norm() < 1e-6));
}

#[test]
fn exact_amplitudes_near_the_optimum() {
    let s = steady_amplitudes(&pumped_1pb(0.0), &Truncation::default()).unwrap();
    assert!(s.values[2].norm() / s.values[1].norm() < 1e-3);
}

#[test]
fn exact_c1_matches_leading_order() {
    let p = Params::default_1pb();
    let s = steady_amplitudes(&p, &Truncation::default()).unwrap();
    let want = c(2.0 * p.drive, 0.0) / m_n(&p, 1);
    assert!((s.values[1] - want).norm() / want.norm() < 0.01);
}

#[test]
fn amplitude_evolution_cases() {
    let p = pumped_1pb(0.4);
    let init = AmplitudeVector::fock(9, 2);
    let same = evolve_amplitudes(&p, &init, 0.0, 1e-3, VacuumAnchor::Free).unwrap();
    assert_eq!(same, init);

    let bare = Params { g: 0.0, ..quiet() };
    let out = evolve_amplitudes(&bare, &AmplitudeVector::fock(5, 1), 2.0, 1e-3, VacuumAnchor::Free).unwrap();
    assert!(close(out.values[1].norm(), (-1.0f64).exp(), 1e-6));

    let t = Truncation::default();
    let driven = Params::default_1pb();
    let long = evolve_amplitudes(&driven, &AmplitudeVector::vacuum(9), 50.0, 1e-3, VacuumAnchor::Pinned).unwrap();
    let steady = steady_amplitudes(&driven, &t).unwrap();
    for (x, y) in long.values.iter().zip(&steady.values) {
        assert!((x - y).norm() < 1e-6);
    }
}

// Master equation

#[test]
fn lossless_generator_on_identity() {
    let lossless = Params {
        kappa: 0.0,
        gamma_m: 0.0,
        ..pumped_1pb(0.2)
    };
    let t = Truncation::new(4, 2).unwrap();
    let l = build_liouvillian(&lossless, &t);
    let d = t.dim();
    let mut id = vec![c(0.0, 0.0); d * d];
    for i in 0..d {
        id[i + d * i] = c(1.0 / d as f64, 0.0);
    }
    let out = l.apply(&DensityMatrix::from_column_major(d, id).unwrap());
    assert!(out.as_slice().iter().all(|v| v.norm() < 1e-12));
}

#[test]
fn generator_output_is_traceless() {
    let t = Truncation::new(4, 2).unwrap();
    let l = build_liouvillian(&pumped_2pb(1.0), &t);
    let d = t.dim();
    let data: Vec<_> = (0..d * d)
        .map(|k| {
            let (i, j) = (k % d, k / d);
            let (lo, hi) = (i.min(j) as f64, i.max(j) as f64);
            let im = if i < j { 0.3 * hi } else if i > j { -0.3 * hi } else { 0.0 };
            c((lo + 1.0).recip() + hi * 0.1, im)
        })
        .collect();
    let rho = DensityMatrix::from_column_major(d, data).unwrap();
    assert!(rho.hermiticity_error() < 1e-15);
    assert!(l.apply(&rho).trace().norm() < 1e-12);
}

#[test]
fn empty_cavity_vacuum_is_steady() {
    let p = Params { g: 0.0, ..quiet() };
    let t = Truncation::new(4, 2).unwrap();
    let l = build_liouvillian(&p, &t);
    let r = l.apply(&DensityMatrix::basis_projector(t.dim(), 0));
    assert!(r.as_slice().iter().all(|v| v.norm() < 1e-12));
}

#[test]
fn undriven_steady_state_is_vacuum() {
    let t = Truncation::new(4, 3).unwrap();
    let rho = steady_state(&build_liouvillian(&quiet(), &t)).unwrap();
    let vac = DensityMatrix::basis_projector(t.dim(), 0);
    assert!(rho.trace_distance(&vac).unwrap() < 1e-10);
}

#[test]
fn blockade_steady_state() {
    let t = Truncation::default();
    let l = build_liouvillian(&pumped_1pb(0.0), &t);
    let rho = steady_state(&l).unwrap();
    assert!(g2_numeric(&rho, &t).unwrap() < 0.1);
    let residual = l.apply(&rho);
    let norm = residual.as_slice().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    assert!(norm < 1e-9 * l.frobenius_norm());
}

#[test]
fn density_evolution_cases() {
    let t = Truncation::new(3, 1).unwrap();
    let p = pumped_1pb(0.0);
    let l = build_liouvillian(&p, &t);
    let rho0 = DensityMatrix::basis_projector(t.dim(), t.phonon_dim());
    assert_eq!(evolve(&l, &rho0, 0.0, 0.01).unwrap(), rho0);

    let bare = Params { g: 0.0, ..quiet() };
    let l = build_liouvillian(&bare, &t);
    let out = evolve(&l, &rho0, 1.0, l.max_stable_step()).unwrap();
    let n = photon_distribution(&out, &t)[1];
    assert!(close(n, (-1.0f64).exp(), 1e-5));
}

#[test]
fn delayed_correlation_starts_at_equal_time() {
    let t = Truncation::default();
    let l = build_liouvillian(&pumped_1pb(0.0), &t);
    let rho = steady_state(&l).unwrap();
    let v = g2_of_tau(&l, &rho, &[0.0, 20.0]).unwrap();
    assert!(close(v[0], g2_numeric(&rho, &t).unwrap(), 1e-8));
    assert!(close(v[1], 1.0, 0.05));
}

// Observables

#[test]
fn coherent_limit_correlations() {
    let t = Truncation::default();
    let rho = steady_state(&build_liouvillian(&bare_cavity(), &t)).unwrap();
    assert!(close(g2_numeric(&rho, &t).unwrap(), 1.0, 0.01));
    assert!(close(g3_numeric(&rho, &t).unwrap(), 1.0, 0.02));
}

#[test]
fn fock_state_correlations() {
    let t = Truncation::new(4, 1).unwrap();
    let fock = |n: usize| DensityMatrix::basis_projector(t.dim(), n * t.phonon_dim());
    assert_eq!(g2_numeric(&fock(1), &t).unwrap(), 0.0);
    assert!(close(g2_numeric(&fock(2), &t).unwrap(), 0.5, 1e-15));
    assert_eq!(g3_numeric(&fock(2), &t).unwrap(), 0.0);
    assert!(close(g3_numeric(&fock(3), &t).unwrap(), 2.0 / 9.0, 1e-15));
}

#[test]
fn distributions() {
    let t = Truncation::new(3, 2).unwrap();
    let vac = DensityMatrix::<f64>::basis_projector(t.dim(), 0);
    assert_eq!(photon_distribution(&vac, &t), vec![1.0, 0.0, 0.0, 0.0]);
    let t = Truncation::default();
    let rho = steady_state(&build_liouvillian(&pumped_1pb(0.3), &t)).unwrap();
    let d = photon_distribution(&rho, &t);
    assert!(close(d.iter().sum::<f64>(), 1.0, 1e-8));
    assert!(d[1] > 3e-3 && d[1] < 3e-2, "P1 = {}", d[1]);
}

#[test]
fn report_paths() {
    let t = Truncation::default();
    let p = Params::default_1pb();
    assert_eq!(
        report(&p, &t, Source::Analytic).unwrap().g2_zero,
        g2_analytic(&p).unwrap()
    );
    let exact = report(&p, &t, Source::AmplitudeExact).unwrap();
    let full = report(&p, &t, Source::Lindblad).unwrap();
    assert!((exact.g2_zero - full.g2_zero).abs() < 0.1 * full.g2_zero);
    let r = report(&pumped_2pb(2.0), &t, Source::Lindblad).unwrap();
    assert!(r.two_photon_blockade());
}

// Sweeps

#[test]
fn single_point_sweep_equals_report() {
    let t = Truncation::default();
    let mut s = SweepSpec::new("one", Axis::new("delta_c", 0.5, 0.5, 1), &["g2", "g3", "mean_photon", "p1"]);
    s.truncation = t;
    let p = Params::default_1pb().with_pump(0.004, 1.0);
    let out = run_sweep(&s, &p, 1).unwrap();
    let r = report(&p.with_detuning(0.5), &t, Source::Lindblad).unwrap();
    assert_eq!(out.table.rows.len(), 1);
    assert_eq!(out.table.rows[0].values, vec![r.g2_zero, r.g3_zero, r.mean_photon, r.p1]);
}

#[test]
fn heatmap_grid_csv() {
    let (mut s, p) = figure_preset("fig2c").unwrap();
    s.axis1 = Axis::new("delta_c", -1.0, 1.0, 3);
    s.axis2 = Some(Axis::new("gain", 0.0, 0.02, 2));
    s.truncation = Truncation::new(4, 2).unwrap();
    let csv = run_sweep(&s, &p, 0).unwrap().table.to_csv();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "delta_c,gain,g2,opt1_gain");
    assert_eq!(lines.len(), 1 + 6);
    assert!(lines[1].starts_with("-1.0,0.0,"));
    assert!(lines[2].starts_with("-1.0,0.02,"));
    assert!(lines[6].starts_with("1.0,0.02,"));
}

#[test]
fn preset_shapes() {
    let (s, _) = figure_preset("fig2b").unwrap();
    assert_eq!(s.axis1.parameter, "tau");
    assert_eq!(s.outputs, vec!["g2_tau"]);
    assert!(s.series.len() >= 2);
    let (s, p) = figure_preset("fig4e").unwrap();
    assert_eq!(s.axis1.values(), vec![2.0]);
    let sources: Vec<_> = s.series.iter().map(|x| x.source.unwrap()).collect();
    assert_eq!(sources, vec![Source::Analytic, Source::Lindblad]);
    assert!(s.outputs.iter().any(|o| o.starts_with("poisson_dev_")));
    assert_eq!(p.g / p.omega_m, 0.1);
    let (_, p) = figure_preset("fig4ab").unwrap();
    assert_eq!(p.g / p.omega_m, 0.1);
}
