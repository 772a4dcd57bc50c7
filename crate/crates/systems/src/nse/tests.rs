use super::*;

fn unforced(route: ConvolutionRoute) -> NseGalerkin<f64> {
    NseGalerkin::new(&NseConfig {
        forcing: ForcingProfile::zero(),
        route,
        ..NseConfig::default()
    })
    .unwrap()
}

fn seed(rng_seed: u64, norm: f64) -> CoeffState<f64> {
    NseSeeds {
        kmax: 4,
        count: 1,
        norm_range: (norm, norm),
        rng_seed,
    }
    .generate()
    .unwrap()
    .remove(0)
}

#[test]
fn zero_state_zero_forcing_is_at_rest() {
    let fam = unforced(ConvolutionRoute::Fft);
    let u = vec![Complex::new(0.0, 0.0); 3 * fam.modes().len()];
    assert!(fam.rhs(0.3, &u).iter().all(|z| z.norm() == 0.0));
}

#[test]
fn fft_route_matches_triad_sum() {
    let fft = unforced(ConvolutionRoute::Fft);
    let direct = fft.with_route(ConvolutionRoute::Direct);
    for s in [1, 2, 3] {
        let u = fft.flatten(&seed(s, 2.0)).unwrap();
        let a = fft.advection_term(&u);
        let b = direct.advection_term(&u);
        let scale = b.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        let diff = a
            .iter()
            .zip(&b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).norm()));
        assert!(scale > 1e-3 && diff < 1e-12 * scale, "{diff} vs {scale}");
    }
}

#[test]
fn advection_conserves_energy() {
    let fam = unforced(ConvolutionRoute::Direct);
    for s in [4, 5] {
        let u = fam.flatten(&seed(s, 3.0)).unwrap();
        let b = fam.advection_term(&u);
        let work: f64 = u.iter().zip(&b).map(|(x, y)| (x.conj() * y).re).sum();
        assert!(work.abs() < 1e-10, "{work}");
        let (div, real) = fam.constraint_defects(&b);
        assert!(div < 1e-12 && real < 1e-12);
    }
}

#[test]
fn single_mode_pair_decays_at_its_rate() {
    let fam = unforced(ConvolutionRoute::Fft);
    let forcing = ForcingProfile::single([1, 2, 0], 0.8, TimeProfile::Const).unwrap();
    let coeffs = forcing.coefficients_at(0.0);
    let entries: Vec<_> = coeffs.iter().collect();
    let idx = entries.iter().map(|(k, _)| **k).collect();
    let vals = entries
        .iter()
        .flat_map(|(_, v)| v.iter().copied())
        .collect();
    let x = CoeffState::from_parts(NSE_TAG, 3, 3, idx, vals).unwrap();
    let out = fam.evolve(0.0, &x, &[0.7], 0).unwrap().remove(0);
    let ratio = fam.space().strong_norm(&out).unwrap() / fam.space().strong_norm(&x).unwrap();
    assert!((ratio - (-5.0f64 * 0.7).exp()).abs() < 1e-9, "{ratio}");
}

#[test]
fn unforced_energy_decays_at_the_dissipation_rate() {
    let fam = unforced(ConvolutionRoute::Fft);
    let u0 = fam.flatten(&seed(9, 3.0)).unwrap();
    let ts: Vec<f64> = (0..=40).map(|i| 0.025 * f64::from(i)).collect();
    let states = fam.integrate_flat(0.0, &u0, &ts).unwrap();
    let energies: Vec<(f64, f64)> = states.iter().map(|u| fam.energies(u)).collect();
    assert!(energies.windows(2).all(|w| w[1].0 <= w[0].0));
    let (div0, _) = fam.constraint_defects(&u0);
    let (div1, real1) = fam.constraint_defects(states.last().unwrap());
    assert!(div1 - div0 < 1e-8 && real1 < 1e-8);
    // d/dt |u|^2 = -2 nu |u|_V^2 by central differences.
    let h = 1e-4;
    for t in [0.1, 0.4, 0.9] {
        let around = fam.integrate_flat(0.0, &u0, &[t - h, t, t + h]).unwrap();
        let e: Vec<(f64, f64)> = around.iter().map(|u| fam.energies(u)).collect();
        let d = (e[2].0 - e[0].0) / (2.0 * h);
        assert!(
            (d + 2.0 * e[1].1).abs() < 1e-5 * e[1].1,
            "{t}: {d} vs {}",
            e[1].1
        );
    }
}

#[test]
fn shear_forcing_has_a_steady_state() {
    let fam = NseGalerkin::<f64>::new(&NseConfig::default()).unwrap();
    assert!((fam.l2b_norm_sq() - 1.0).abs() < 1e-12);
    assert!((fam.absorbing_radius() - 2.0 / (1.0 - (-1f64).exp())).abs() < 1e-9);
    let g = fam.forcing().coefficients_at(0.0);
    let mut u = vec![Complex::new(0.0, 0.0); 3 * fam.modes().len()];
    for (k, v) in &g {
        let i = fam.modes().position(k).unwrap();
        u[3 * i..3 * i + 3].copy_from_slice(v);
    }
    let r = fam.rhs(0.0, &u);
    assert!(r.iter().all(|z| z.norm() < 1e-14));
}

#[test]
fn time_shift_matches_shifted_start() {
    let forcing = ForcingProfile::single(
        [0, 1, 1],
        1.5,
        TimeProfile::Sin {
            omega: 1.0,
            phase: 0.2,
        },
    )
    .unwrap();
    let fam = NseGalerkin::<f64>::new(&NseConfig {
        forcing,
        ..NseConfig::default()
    })
    .unwrap();
    assert!(!fam.is_autonomous());
    let x = seed(3, 1.0);
    let a = fam.evolve(1.3, &x, &[2.3], 0).unwrap().remove(0);
    let b = fam
        .time_shifted(1.3)
        .evolve(0.0, &x, &[1.0], 0)
        .unwrap()
        .remove(0);
    assert!(fam.space().strong_dist(&a, &b).unwrap() < 1e-12);
}

#[test]
fn rejects_bad_states_and_forcing() {
    let fam = unforced(ConvolutionRoute::Fft);
    let c = |a: f64| Complex::new(a, 0.0);
    let compressible = CoeffState::from_parts(
        NSE_TAG,
        3,
        3,
        vec![[-1, 0, 0], [1, 0, 0]],
        vec![c(1.0), c(0.0), c(0.0), c(1.0), c(0.0), c(0.0)],
    )
    .unwrap();
    assert!(matches!(
        fam.evolve(0.0, &compressible, &[1.0], 0),
        Err(Error::InvalidState(_))
    ));
    let outside =
        CoeffState::from_parts(NSE_TAG, 3, 3, vec![[9, 0, 0]], vec![c(0.0), c(1.0), c(0.0)])
            .unwrap();
    assert!(matches!(
        fam.evolve(0.0, &outside, &[1.0], 0),
        Err(Error::InvalidState(_))
    ));
    let far = ForcingProfile::single([5, 0, 0], 1.0, TimeProfile::Const).unwrap();
    assert!(matches!(
        NseGalerkin::<f64>::new(&NseConfig {
            forcing: far,
            ..NseConfig::default()
        }),
        Err(Error::Format(_))
    ));
}

#[test]
fn single_precision_tracks_double() {
    let cfg = NseConfig::default();
    let f64fam = NseGalerkin::<f64>::new(&cfg).unwrap();
    let f32fam = NseGalerkin::<f32>::new(&NseConfig { rtol: 1e-5, ..cfg }).unwrap();
    let x = seed(11, 1.0);
    let a = f64fam.evolve(0.0, &x, &[0.5], 0).unwrap().remove(0);
    let b = f32fam
        .evolve(0.0, &x.cast::<f32>(), &[0.5], 0)
        .unwrap()
        .remove(0);
    assert!(f64fam.space().strong_dist(&a, &b.cast()).unwrap() < 1e-4);
}
