use aggdiff::hardsphere::{
    detect_contacts, hs_energy_with, hs_simulate, min_pair_distance, project_velocity, ContactGraph,
    DesiredVelocity, HsConfig, HsRun,
};
use aggdiff::kernels::regularized_kernel;
use aggdiff::{InteractionKernel, Mollifier, MollifierShape, ParticleEnsemble};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Brute-force projection: for every subset of contacts held with equality,
/// project onto that subspace and keep the closest point satisfying all
/// constraints.
fn oracle_projection(dim: usize, n: usize, graph: &ContactGraph, v: &[f64]) -> Vec<f64> {
    let m = graph.len();
    let mut jac = DMatrix::<f64>::zeros(m, n * dim);
    for (r, c) in graph.pairs.iter().enumerate() {
        for k in 0..dim {
            jac[(r, c.i * dim + k)] = -c.e[k];
            jac[(r, c.j * dim + k)] = c.e[k];
        }
    }
    let vv = DVector::from_column_slice(v);
    let mut best: Option<(f64, DVector<f64>)> = None;
    for mask in 0u32..(1 << m) {
        let rows: Vec<usize> = (0..m).filter(|r| mask & (1 << r) != 0).collect();
        let u = if rows.is_empty() {
            vv.clone()
        } else {
            let js = jac.select_rows(rows.iter());
            let a = &js * js.transpose();
            let rhs = -(&js * &vv);
            let lambda = a.svd(true, true).solve(&rhs, 1e-12).unwrap();
            &vv + js.transpose() * lambda
        };
        if (&jac * &u).iter().all(|&w| w >= -1e-11) {
            let d = (&u - &vv).norm();
            if best.as_ref().map_or(true, |(b, _)| d < *b) {
                best = Some((d, u));
            }
        }
    }
    best.unwrap().1.as_slice().to_vec()
}

fn random_instance(rng: &mut ChaCha8Rng) -> (ParticleEnsemble, ContactGraph) {
    let delta = 0.1;
    loop {
        let ens = if rng.gen_bool(0.5) {
            let n = rng.gen_range(2..=9);
            let mut xs = vec![0.0];
            for _ in 1..n {
                let gap = if rng.gen_bool(0.65) { 0.0 } else { rng.gen_range(0.05..0.4) };
                xs.push(xs.last().unwrap() + 2.0 * delta + gap);
            }
            ParticleEnsemble::new(xs, delta).unwrap()
        } else {
            // subset of a triangular lattice with spacing 2δ
            let mut sites = Vec::new();
            for a in 0..3 {
                for b in 0..3 {
                    let x = 2.0 * delta * (a as f64 + 0.5 * b as f64);
                    let y = 2.0 * delta * (b as f64 * 3f64.sqrt() / 2.0);
                    sites.push([x, y]);
                }
            }
            let k = rng.gen_range(2..=6);
            let mut pos = Vec::new();
            for _ in 0..k {
                let s = sites.swap_remove(rng.gen_range(0..sites.len()));
                pos.extend_from_slice(&s);
            }
            ParticleEnsemble::with_dim(pos, 2, delta).unwrap()
        };
        let g = detect_contacts(&ens, 1e-6 * delta).unwrap();
        if g.len() <= 12 {
            return (ens, g);
        }
    }
}

fn in_cone(graph: &ContactGraph, dim: usize, u: &[f64], tol: f64) -> bool {
    graph.pairs.iter().all(|c| {
        let rate: f64 = (0..dim).map(|k| (u[c.j * dim + k] - u[c.i * dim + k]) * c.e[k]).sum();
        rate >= -tol
    })
}

#[test]
fn projection_matches_active_set_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let (ens, g) = random_instance(&mut rng);
        let v: Vec<f64> = (0..ens.positions().len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = project_velocity(&ens, &v, &g).unwrap();
        let oracle = oracle_projection(ens.dim(), ens.count(), &g, &v);
        assert!(r.kkt_residual <= 1e-8);
        for (a, b) in r.velocities.iter().zip(&oracle) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        assert!(r.pressures.iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn projection_beats_random_cone_members() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let (ens, g) = random_instance(&mut rng);
        let len = ens.positions().len();
        let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = project_velocity(&ens, &v, &g).unwrap().velocities;
        assert!(in_cone(&g, ens.dim(), &u, 1e-12));
        let du: f64 = u.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        for _ in 0..100 {
            let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let w = project_velocity(&ens, &raw, &g).unwrap().velocities;
            assert!(in_cone(&g, ens.dim(), &w, 1e-12));
            let dw: f64 = w.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            assert!(du <= dw + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn moreau_decomposition_is_orthogonal(
        gaps in proptest::collection::vec(prop_oneof![Just(0.0), 0.01f64..0.3], 1..10),
        seed in any::<u64>(),
    ) {
        let delta = 0.05;
        let mut xs = vec![0.0];
        for g in &gaps {
            xs.push(xs.last().unwrap() + 2.0 * delta + g);
        }
        let ens = ParticleEnsemble::new(xs, delta).unwrap();
        let g = detect_contacts(&ens, 1e-6 * delta).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v: Vec<f64> = (0..ens.count()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = project_velocity(&ens, &v, &g).unwrap();
        let orth: f64 = v.iter().zip(&r.velocities).map(|(v, u)| (v - u) * u).sum();
        prop_assert!(orth.abs() < 1e-8);
        prop_assert!(in_cone(&g, 1, &r.velocities, 1e-12));
        prop_assert!(r.pressures.iter().all(|&p| p >= 0.0));
    }
}

#[test]
fn long_attraction_run_stays_feasible_and_dissipates() {
    let n = 50;
    let delta = 0.01;
    let kernel = InteractionKernel::free(1.0, 0.1).unwrap();
    let mol = Mollifier::new(delta, MollifierShape::IndicatorBall).unwrap();
    let rk = regularized_kernel(&kernel, &mol).unwrap();
    let xs: Vec<f64> = (0..n).map(|k| -1.25 + 0.05 * k as f64 + 0.01 * (k as f64).sin()).collect();
    let ens = ParticleEnsemble::new(xs, delta).unwrap();
    let dt = 1e-3;
    let run = HsRun {
        step: HsConfig::new(dt, delta),
        t_end: 1e4 * dt,
        sample_times: vec![],
        diag_every: 1,
    };
    let tr = hs_simulate(&ens, &run, &DesiredVelocity::SelfConsistent(rk.clone()), Some(&rk)).unwrap();
    assert_eq!(tr.steps, 10_000);
    let worst = tr.min_distance.iter().copied().fold(f64::INFINITY, f64::min);
    assert!(worst >= 2.0 * delta - 1e-9 * delta, "min distance {worst}");
    for w in tr.energy.windows(2) {
        assert!(w[1] <= w[0] + 10.0 * dt * dt, "{} -> {}", w[0], w[1]);
    }
    assert!(tr.energy.last().unwrap() < &tr.energy[0]);
    // everything ends in contact clusters
    assert!(min_pair_distance(tr.final_state()) <= 2.0 * delta * (1.0 + 1e-9));
    assert!(hs_energy_with(tr.final_state(), &rk, 1e-9 * delta).unwrap().total.is_finite());
}

#[test]
fn empirical_measure_satisfies_weak_continuity_equation() {
    let delta = 0.02;
    let kernel = InteractionKernel::free(1.0, 0.1).unwrap();
    let mol = Mollifier::new(delta, MollifierShape::IndicatorBall).unwrap();
    let mode = DesiredVelocity::self_consistent(&kernel, &mol).unwrap();
    let xs: Vec<f64> = (0..30).map(|k| -0.9 + 0.06 * k as f64).collect();
    let ens = ParticleEnsemble::new(xs, delta).unwrap();
    let tests: [fn(f64) -> (f64, f64); 5] = [
        |x| (x, 1.0),
        |x| (x * x, 2.0 * x),
        |x| (x.sin(), x.cos()),
        |x| ((-x * x).exp(), -2.0 * x * (-x * x).exp()),
        |x| (x.cos() * x, x.cos() - x * x.sin()),
    ];
    for dt in [2e-3, 1e-3] {
        let cfg = HsConfig::new(dt, delta);
        let mut state = ens.clone();
        let mut worst: f64 = 0.0;
        for _ in 0..20 {
            let out = aggdiff::hardsphere::hs_step(&state, &cfg, &mode).unwrap();
            let w = state.weight();
            for psi in tests {
                let before: f64 = state.positions().iter().map(|&x| psi(x).0).sum::<f64>() * w;
                let after: f64 = out.ensemble.positions().iter().map(|&x| psi(x).0).sum::<f64>() * w;
                let flux: f64 = state
                    .positions()
                    .iter()
                    .zip(&out.projection.velocities)
                    .map(|(&x, u)| psi(x).1 * u)
                    .sum::<f64>()
                    * w;
                worst = worst.max(((after - before) / dt - flux).abs());
            }
            state = out.ensemble;
        }
        assert!(worst < 50.0 * dt, "dt {dt}: {worst}");
    }
}
