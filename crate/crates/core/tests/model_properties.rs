use num_complex::Complex64;
use proptest::prelude::*;

use xmode_qed::circuit::{
    port_mode_couplings, quality_factors, resonance_frequency, PortLayout, ResonatorNetwork, Symmetry,
};
use xmode_qed::nv::{self, Branch, MagneticField, NvSpinModel};
use xmode_qed::qed::{self, CavityModeSpec, CoupledSystem, Lineshape, SpinEnsembleSpec};

const HZ: f64 = 1e-9; // one hertz in GHz

fn ensemble(g: f64, center: f64, gamma: f64, shape: Lineshape) -> SpinEnsembleSpec {
    SpinEnsembleSpec::with_collective_coupling(g, 1e16, center)
        .unwrap()
        .with_widths(gamma, 0.01)
        .with_lineshape(shape)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn axes_degenerate_along_100(b_mt in 0.0f64..100.0) {
        let m = NvSpinModel::default();
        let levels = m.transition_frequencies(&MagneticField::along([1.0, 0.0, 0.0], b_mt * 1e-3).unwrap()).unwrap();
        for l in &levels[1..] {
            prop_assert!((l.transition_plus_ghz - levels[0].transition_plus_ghz).abs() < HZ);
            prop_assert!((l.transition_minus_ghz - levels[0].transition_minus_ghz).abs() < HZ);
        }
    }

    #[test]
    fn field_along_axis_is_linear(b_mt in 0.0f64..100.0, axis in 0usize..4) {
        let m = NvSpinModel::default();
        let field = MagneticField::along(nv::NV_AXES[axis], b_mt * 1e-3).unwrap();
        let l = m.levels(&field, axis).unwrap();
        let zeeman = m.gyromagnetic_ratio_ghz_per_t * b_mt * 1e-3;
        prop_assert!((l.transition_plus_ghz - (m.zero_field_splitting_ghz + zeeman)).abs() < HZ);
        prop_assert!((l.transition_minus_ghz - (m.zero_field_splitting_ghz - zeeman).abs()).abs() < HZ);
    }

    #[test]
    fn transitions_ordered(b_mt in 0.0f64..200.0, x in -1.0f64..1.0, y in -1.0f64..1.0, z in 0.1f64..1.0) {
        let m = NvSpinModel::default();
        for l in m.transition_frequencies(&MagneticField::along([x, y, z], b_mt * 1e-3).unwrap()).unwrap() {
            prop_assert!(l.transition_plus_ghz >= l.transition_minus_ghz);
            prop_assert!(l.transition_minus_ghz >= 0.0);
        }
    }

    #[test]
    fn resonant_field_inverts_transition(b_mt in 0.5f64..100.0) {
        let m = NvSpinModel::default();
        let dir = [1.0, 0.0, 0.0];
        let f = m.levels(&MagneticField::along(dir, b_mt * 1e-3).unwrap(), 0).unwrap().transition_plus_ghz;
        let b = m.resonant_field(f, dir, Branch::Plus).unwrap();
        let back = m.levels(&MagneticField::along(dir, b).unwrap(), 0).unwrap().transition_plus_ghz;
        prop_assert!((back - f).abs() < 1e-6, "{} vs {}", back, f);
    }

    #[test]
    fn thermal_populations_normalized(b_mt in 0.0f64..50.0, t in 0.001f64..300.0) {
        let m = NvSpinModel::default();
        let l = m.levels(&MagneticField::along([1.0, 0.0, 0.0], b_mt * 1e-3).unwrap(), 0).unwrap();
        let p = nv::thermal_polarization(&l, t).unwrap();
        prop_assert!((p.populations.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.populations.iter().all(|&x| (0.0..=1.0).contains(&x)));
    }

    #[test]
    fn ensemble_size_linear(ppm in 0.0f64..1000.0, vol in 0.0f64..100.0, k in 0.1f64..10.0) {
        let n = nv::ensemble_size(ppm, vol).unwrap();
        let tol = 1e-12 * n.abs().max(1.0) * k;
        prop_assert!((nv::ensemble_size(ppm * k, vol).unwrap() - k * n).abs() <= tol);
        prop_assert!((nv::ensemble_size(ppm, vol * k).unwrap() - k * n).abs() <= tol);
    }

    #[test]
    fn network_xy_relabeling(cx in 1.0f64..5.0, cy in 1.0f64..5.0, lg in 0.0f64..0.5) {
        let net = |a: f64, b: f64| ResonatorNetwork {
            wing_capacitances_f: [a * 1e-12, a * 1e-12, b * 1e-12, b * 1e-12],
            wing_inductance_h: 1e-9,
            return_inductance_h: lg * 1e-9,
            cross_inductance_h: None,
            perturbation: Default::default(),
        };
        let f1 = net(cx, cy).classify_modes().unwrap().map(|m| m.frequency_ghz);
        let f2 = net(cy, cx).classify_modes().unwrap().map(|m| m.frequency_ghz);
        for (a, b) in f1.iter().zip(&f2) {
            prop_assert!((a - b).abs() < 1e-12 * a);
        }
    }

    #[test]
    fn modes_capacitance_orthogonal(cx in 1.0f64..5.0, cy in 1.0f64..5.0, frac in -0.05f64..0.05, wing in 0usize..4) {
        let base = ResonatorNetwork {
            wing_capacitances_f: [cx * 1e-12, cx * 1e-12, cy * 1e-12, cy * 1e-12],
            wing_inductance_h: 1e-9,
            return_inductance_h: 0.1e-9,
            cross_inductance_h: None,
            perturbation: Default::default(),
        };
        let net = base.with_capacitance_fraction(wing, frac);
        let modes = net.classify_modes().unwrap();
        let c = net.effective_capacitances();
        let dot = |a: &[f64; 4], b: &[f64; 4]| (0..4).map(|k| c[k] * a[k] * b[k]).sum::<f64>();
        for i in 0..4 {
            for j in 0..i {
                let (a, b) = (&modes[i].potentials, &modes[j].potentials);
                let norm = (dot(a, a) * dot(b, b)).sqrt();
                prop_assert!(dot(a, b).abs() < 1e-10 * norm);
            }
        }
    }

    #[test]
    fn q_reciprocal_sum(f in 1.0f64..10.0, ki in 0.01f64..10.0, kc in 0.01f64..10.0) {
        let q = quality_factors(f, ki, kc).unwrap();
        prop_assert!((1.0 / q.total - (1.0 / q.internal + 1.0 / q.external)).abs() < 1e-12 / q.total);
    }

    #[test]
    fn bath_is_passive(det in -200.0f64..200.0, gamma in 0.0f64..20.0, gaussian in any::<bool>()) {
        let shape = if gaussian { Lineshape::Gaussian } else { Lineshape::Lorentzian };
        let e = ensemble(5.0, 3.1598, gamma, shape);
        let s = qed::spin_susceptibility(3.1598 + det * 1e-3, &e).unwrap();
        prop_assert!(s.re >= 0.0);
    }

    #[test]
    fn transmission_bounded(det in -20.0f64..20.0, spin in -20.0f64..20.0, g in 0.0f64..20.0, ext in 0.0f64..1.0) {
        let kappa = 1.0;
        let kc = ext * kappa / 2.0;
        let mode = CavityModeSpec::new(3.1598, kappa, [1.0, -1.0, 0.0, 0.0]).with_port_coupling([kc, kc, 0.0, 0.0]);
        let sys = CoupledSystem { modes: vec![mode], spins: vec![ensemble(g.max(1e-9), 3.1598 + spin * 1e-3, 6.0, Lineshape::Lorentzian)] };
        let s = qed::transmission(3.1598 + det * 1e-3, &sys, 0, 1).unwrap();
        prop_assert!(s.norm() <= 1.0);
    }

    #[test]
    fn no_spins_is_bare_lorentzian(det in -20.0f64..20.0) {
        let mode = CavityModeSpec::new(3.2275, 0.911, [0.0, 0.0, 1.0, -1.0]).with_port_coupling([0.0, 0.0, 0.2, 0.2]);
        let mut spin = ensemble(5.0, 3.2, 6.0, Lineshape::Lorentzian);
        spin.n_spins = 0.0;
        let f = 3.2275 + det * 1e-3;
        let s = qed::transmission(f, &CoupledSystem { modes: vec![mode], spins: vec![spin] }, 2, 3).unwrap();
        let bare = Complex64::new(-0.2, 0.0) / Complex64::new(0.911, (3.2275 - f) * 1e3);
        prop_assert!((s - bare).norm() <= 1e-12 * bare.norm());
    }

    #[test]
    fn lossless_polaritons_symmetric(g in 0.1f64..20.0) {
        let p = qed::polariton_frequencies(3.1598, 0.0, g, 3.1598, 0.0);
        prop_assert!(p[0].half_linewidth_mhz.abs() < 1e-12 && p[1].half_linewidth_mhz.abs() < 1e-12);
        prop_assert!(((p[0].frequency_ghz + p[1].frequency_ghz) / 2.0 - 3.1598).abs() < 1e-13);
        prop_assert!(((p[1].frequency_ghz - p[0].frequency_ghz) * 1e3 - 2.0 * g).abs() < 1e-9);
    }

    #[test]
    fn dispersive_round_trip(g in 0.01f64..50.0, sz in prop_oneof![-1.0f64..-0.01, 0.01f64..1.0], delta in prop_oneof![-500.0f64..-1.0, 1.0f64..500.0]) {
        let chi = qed::dispersive_shift(g, sz, delta).unwrap();
        let back = qed::extract_g(chi, delta, sz).unwrap();
        prop_assert!((back - g).abs() <= 1e-12 * g);
    }

    #[test]
    fn multi_transition_additive_and_linear(g1 in 0.1f64..10.0, g2 in 0.1f64..10.0, d1 in 10.0f64..300.0, d2 in -300.0f64..-10.0, sz in -1.0f64..1.0) {
        let both = qed::multi_transition_shift(&[(g1, d1), (g2, d2)], sz).unwrap();
        let sum = qed::dispersive_shift(g1, sz, d1).unwrap() + qed::dispersive_shift(g2, sz, d2).unwrap();
        prop_assert!((both - sum).abs() < 1e-12 * (1.0 + sum.abs()));
        let doubled = qed::multi_transition_shift(&[(g1, d1), (g2, d2)], sz / 2.0).unwrap();
        prop_assert!((2.0 * doubled - both).abs() < 1e-12 * (1.0 + both.abs()));
    }
}

#[test]
fn forbidden_couplings_are_exact_zeros() {
    let net = ResonatorNetwork::reference();
    let modes = net.classify_modes().unwrap();
    let c = port_mode_couplings(&modes, &PortLayout::default());
    let idx = |s: Symmetry| modes.iter().position(|m| m.symmetry == s).unwrap();
    let (ax, ay) = (idx(Symmetry::AX), idx(Symmetry::AY));
    assert_eq!(c[ax][2], 0.0);
    assert_eq!(c[ax][3], 0.0);
    assert_eq!(c[ay][0], 0.0);
    assert_eq!(c[ay][1], 0.0);
}

#[test]
fn antisymmetric_mode_is_single_branch_lc() {
    let net = ResonatorNetwork::reference();
    let ax = net.mode(Symmetry::AX).unwrap();
    let f = resonance_frequency(net.wing_inductance_h, net.wing_capacitances_f[0]).unwrap();
    assert!((ax.frequency_ghz - f).abs() < 1e-12 * f);
}

#[test]
fn dispersive_paths_agree_at_reference_detuning() {
    // fitted cavity shift from the transmission model vs the eigenvalue shift
    let mode = CavityModeSpec::new(3.2275, 0.911, [0.0, 0.0, 1.0, -1.0]).with_port_coupling([0.0, 0.0, 0.2, 0.2]);
    let spin = ensemble(5.0, 3.2275 - 0.0677, 6.0, Lineshape::Lorentzian);
    let freqs: Vec<f64> = (0..801).map(|i| 3.2275 + (i as f64 - 400.0) * 1e-5).collect();
    let power = |spins: Vec<SpinEnsembleSpec>| -> Vec<f64> {
        let sys = CoupledSystem { modes: vec![mode], spins };
        freqs.iter().map(|&f| qed::transmission(f, &sys, 2, 3).unwrap().norm_sqr()).collect()
    };
    let m = xmode_qed::fitting::measure_dispersive_shift((&freqs, &power(vec![])), (&freqs, &power(vec![spin]))).unwrap();
    let p = qed::polariton_frequencies(3.2275, 0.911, 5.0, 3.2275 - 0.0677, 6.01);
    let eig_shift = (p[1].frequency_ghz - 3.2275) * 1e3;
    assert!((m.chi_mhz - eig_shift).abs() < 0.05 * eig_shift.abs(), "{} vs {}", m.chi_mhz, eig_shift);
}
