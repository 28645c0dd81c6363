use aggdiff::pde::{free_energy, pde_step, run, DiffusionScheme, PdeConfig, TimeScaling};
use aggdiff::{BoundaryKind, GridField, InteractionKernel, PressureLaw};
use proptest::prelude::*;

fn config(m: f64, scheme: DiffusionScheme) -> PdeConfig {
    let mut c = PdeConfig::new(PressureLaw::PowerLaw { m }, InteractionKernel::free(1.0, 1.0).unwrap());
    c.diffusion = scheme;
    c
}

fn schemes() -> impl Strategy<Value = DiffusionScheme> {
    prop_oneof![Just(DiffusionScheme::Explicit), Just(DiffusionScheme::SemiImplicit)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn steps_conserve_mass_and_positivity(
        values in proptest::collection::vec(0.0f64..1.2, 40..120),
        m in 2.0f64..6.0,
        scheme in schemes(),
    ) {
        prop_assume!(values.iter().sum::<f64>() > 1e-3);
        let f = GridField::new(values, -1.0, 1.0, BoundaryKind::NoFlux).unwrap();
        let cfg = config(m, scheme);
        let mut state = f.clone();
        for _ in 0..20 {
            let (next, dt) = pde_step(&state, &cfg).unwrap();
            prop_assert!(dt > 0.0);
            prop_assert!(next.min() >= 0.0);
            state = next;
        }
        prop_assert!((state.mass() - f.mass()).abs() <= 1e-12 * f.mass());
    }

    #[test]
    fn free_energy_does_not_increase(
        heights in proptest::collection::vec(0.1f64..0.9, 2..4),
        scheme in schemes(),
    ) {
        let f = GridField::from_fn(200, -2.0, 2.0, BoundaryKind::NoFlux, |x| {
            heights
                .iter()
                .enumerate()
                .map(|(k, h)| {
                    let c = -1.0 + k as f64 * 0.8;
                    h * (1.0 - (3.0 * (x - c)).powi(2)).max(0.0)
                })
                .sum()
        })
        .unwrap();
        let mut cfg = config(3.0, scheme);
        cfg.dt_max = Some(2e-3);
        let r = run(&cfg, &f, 0.2, &[]).unwrap();
        let scale = r.energy[0].abs().max(1.0);
        for w in r.energy.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-9 * scale, "{} -> {}", w[0], w[1]);
        }
    }
}

#[test]
fn semi_implicit_matches_explicit() {
    let f = GridField::from_fn(300, -1.5, 1.5, BoundaryKind::NoFlux, |x| 0.8 * (1.0 - x * x).max(0.0)).unwrap();
    let explicit = run(&config(3.0, DiffusionScheme::Explicit), &f, 0.1, &[]).unwrap();
    let mut c = config(3.0, DiffusionScheme::SemiImplicit);
    c.dt_max = Some(1e-4);
    let implicit = run(&c, &f, 0.1, &[]).unwrap();
    let d = explicit.final_state().l1_distance(implicit.final_state()).unwrap();
    assert!(d < 2e-3 * f.mass(), "L1 gap {d}");
}

#[test]
fn hele_shaw_scaling_speeds_time_by_inverse_eps() {
    let f = GridField::indicator(300, -1.5, 1.5, BoundaryKind::NoFlux, -0.7, 0.7, 0.5).unwrap();
    let mut micro = config(3.0, DiffusionScheme::SemiImplicit);
    micro.eps = 0.1;
    micro.dt_max = Some(1e-3);
    let mut hs = micro;
    hs.time_scaling = TimeScaling::HeleShaw;
    // physical time T under ε∂t covers equation time T/ε
    let a = run(&micro, &f, 0.1, &[]).unwrap();
    let b = run(&hs, &f, 0.01, &[]).unwrap();
    let d = a.final_state().l1_distance(b.final_state()).unwrap();
    assert!(d < 1e-3, "{d}");
}

#[test]
fn truncated_line_refuses_mass_at_the_edge() {
    let f = GridField::from_fn(100, -1.0, 1.0, BoundaryKind::WholeLineTruncated, |x| (1.0 - x * x).max(0.0)).unwrap();
    let mut c = config(2.0, DiffusionScheme::Explicit);
    c.interaction_weight = 0.0;
    assert!(run(&c, &f, 1.0, &[]).is_err());
    assert!(free_energy(&f, &c).unwrap().is_finite());
}
