//! Soft-sphere blob particles: `ẋ_i = (1/N)Σ_j G̃_δ'(x_i − x_j) − [K_δ' ∗ f'(K_δ ∗ ρ_N)](x_i)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::kernels::{regularized_kernel, InteractionKernel, Mollifier, MollifierShape, RegularizedKernel};
use crate::metrics::{EnergyReport, FunctionalId};
use crate::numerics::GaussLegendre;
use crate::pressure::PressureLaw;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Integrator {
    Euler,
    Heun,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobConfig {
    pub law: PressureLaw,
    pub kernel: InteractionKernel,
    pub mollifier: Mollifier,
    /// Fixed step; `None` applies the stability bound at every step.
    pub dt: Option<f64>,
    pub integrator: Integrator,
    /// Evaluation grid spacing is `δ / eval_refine`.
    pub eval_refine: usize,
    /// Multiplier of the attractive term (0 switches it off).
    pub interaction_weight: f64,
}

impl BlobConfig {
    pub fn new(law: PressureLaw, kernel: InteractionKernel, mollifier: Mollifier) -> Self {
        Self {
            law,
            kernel,
            mollifier,
            dt: None,
            integrator: Integrator::Heun,
            eval_refine: 8,
            interaction_weight: 1.0,
        }
    }
}

/// Blob dynamics with its precomputed regularized kernel.
#[derive(Debug, Clone)]
pub struct BlobModel {
    cfg: BlobConfig,
    rk: RegularizedKernel,
    /// Quadrature offsets `o` with weights times `K_δ'(o)`, symmetric about 0.
    grad_stencil: Vec<(f64, f64)>,
}

/// Empirical density on a lattice `y_k = (k0 + k)·h`.
struct LatticeDensity {
    k0: i64,
    h: f64,
    mu: Vec<f64>,
}

impl BlobModel {
    pub fn new(cfg: BlobConfig) -> Result<Self> {
        if !matches!(cfg.law, PressureLaw::PowerLaw { .. }) {
            return Err(Error::config("blob dynamics needs a power-law pressure"));
        }
        cfg.law.validate()?;
        if cfg.mollifier.shape != MollifierShape::SmoothBump {
            return Err(Error::config("blob dynamics needs the smooth bump mollifier"));
        }
        if cfg.eval_refine < 4 {
            return Err(Error::config(format!(
                "evaluation grid spacing δ/{} coarser than δ/4",
                cfg.eval_refine
            )));
        }
        if let Some(dt) = cfg.dt {
            if !(dt > 0.0) || !dt.is_finite() {
                return Err(Error::config(format!("dt must be positive, got {dt}")));
            }
        }
        if !cfg.interaction_weight.is_finite() {
            return Err(Error::config("interaction weight must be finite"));
        }
        let rk = regularized_kernel(&cfg.kernel, &cfg.mollifier)?;
        // 4-point Gauss panels mirrored about the particle: node spacing ≈ δ/refine
        let d = cfg.mollifier.delta;
        let panels = (cfg.eval_refine / 4).max(1);
        let gl = GaussLegendre::new(4);
        let width = d / panels as f64;
        let mut grad_stencil = Vec::new();
        for p in 0..panels {
            let a = p as f64 * width;
            for (t, w) in gl.nodes_weights() {
                let off = a + 0.5 * width * (1.0 + t);
                let wt = 0.5 * width * w * cfg.mollifier.derivative(off);
                grad_stencil.push((off, wt));
                grad_stencil.push((-off, -wt));
            }
        }
        Ok(Self { cfg, rk, grad_stencil })
    }

    pub fn config(&self) -> &BlobConfig {
        &self.cfg
    }

    pub fn regularized(&self) -> &RegularizedKernel {
        &self.rk
    }

    fn delta(&self) -> f64 {
        self.cfg.mollifier.delta
    }

    fn spacing(&self) -> f64 {
        self.delta() / self.cfg.eval_refine as f64
    }

    fn lattice_density(&self, ens: &ParticleEnsemble) -> LatticeDensity {
        let h = self.spacing();
        let d = self.delta();
        let x = ens.positions();
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let k0 = ((lo - 2.0 * d) / h).floor() as i64;
        let k1 = ((hi + 2.0 * d) / h).ceil() as i64;
        let mut mu = vec![0.0; (k1 - k0 + 1) as usize];
        let w = ens.weight();
        let mol = &self.cfg.mollifier;
        for &xi in x {
            let a = ((xi - d) / h).ceil() as i64;
            let b = ((xi + d) / h).floor() as i64;
            for k in a..=b {
                mu[(k - k0) as usize] += w * mol.eval(k as f64 * h - xi);
            }
        }
        LatticeDensity { k0, h, mu }
    }

    /// `K_δ ∗ ρ_N` on the evaluation lattice, as `(x, μ)` pairs.
    pub fn mollified_on_lattice(&self, ens: &ParticleEnsemble) -> Vec<(f64, f64)> {
        let lat = self.lattice_density(ens);
        lat.mu
            .iter()
            .enumerate()
            .map(|(i, &m)| ((lat.k0 + i as i64) as f64 * lat.h, m))
            .collect()
    }

    /// Stable step `0.2δ²/max(1, f''(μ_max)μ_max)` for the current state.
    pub fn stable_dt(&self, ens: &ParticleEnsemble) -> Result<f64> {
        let lat = self.lattice_density(ens);
        let mu_max = lat.mu.iter().copied().fold(0.0, f64::max);
        let stiff = self.cfg.law.f_second(mu_max)? * mu_max;
        Ok(0.2 * self.delta() * self.delta() / stiff.max(1.0))
    }

    /// Pressure term `[K_δ' ∗ f'(K_δ ∗ ρ_N)](x_i)` for every particle.
    ///
    /// Gauss panels on `[x_i − δ, x_i + δ]` mirrored about the particle, so
    /// that a lone particle feels exactly no force.
    fn pressure_term(&self, ens: &ParticleEnsemble) -> Result<Vec<f64>> {
        let sorted = SortedEnsemble::new(ens.positions());
        let xs = &sorted.x;
        let d = self.delta();
        let w = ens.weight();
        let mol = &self.cfg.mollifier;
        let law = &self.cfg.law;
        let q: Vec<Result<f64>> = (0..xs.len())
            .into_par_iter()
            .map(|i| {
                let lo = xs.partition_point(|&x| x <= xs[i] - 2.0 * d);
                let hi = xs.partition_point(|&x| x < xs[i] + 2.0 * d);
                let mut acc = 0.0;
                for &(off, weight) in &self.grad_stencil {
                    // x_i − y = off
                    let y = xs[i] - off;
                    let mu = w * xs[lo..hi].iter().map(|&x| mol.eval(y - x)).sum::<f64>();
                    acc += weight * law.f_prime(mu)?;
                }
                Ok(acc)
            })
            .collect();
        let mut out = vec![0.0; xs.len()];
        for (&orig, v) in sorted.order.iter().zip(q) {
            out[orig] = v?;
        }
        Ok(out)
    }

    fn attraction_term(&self, ens: &ParticleEnsemble) -> Vec<f64> {
        attraction_sum(&self.rk, ens.positions())
    }

    pub fn velocity(&self, ens: &ParticleEnsemble) -> Result<Vec<f64>> {
        if ens.dim() != 1 {
            return Err(Error::input("blob dynamics is one-dimensional"));
        }
        let p = self.pressure_term(ens)?;
        let v: Vec<f64> = if self.cfg.interaction_weight != 0.0 {
            let a = self.attraction_term(ens);
            a.iter()
                .zip(&p)
                .map(|(a, p)| self.cfg.interaction_weight * a - p)
                .collect()
        } else {
            p.iter().map(|p| -p).collect()
        };
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::numerical("non-finite blob velocity"));
        }
        Ok(v)
    }

    /// Advances one step; returns the new state and the step used.
    pub fn step(&self, ens: &ParticleEnsemble) -> Result<(ParticleEnsemble, f64)> {
        let dt = match self.cfg.dt {
            Some(dt) => dt,
            None => self.stable_dt(ens)?,
        };
        Ok((self.step_with(ens, dt)?, dt))
    }

    pub fn step_with(&self, ens: &ParticleEnsemble, dt: f64) -> Result<ParticleEnsemble> {
        let v1 = self.velocity(ens)?;
        let x = ens.positions();
        let predictor: Vec<f64> = x.iter().zip(&v1).map(|(x, v)| x + dt * v).collect();
        match self.cfg.integrator {
            Integrator::Euler => ens.with_positions(predictor),
            Integrator::Heun => {
                let mid = ens.with_positions(predictor)?;
                let v2 = self.velocity(&mid)?;
                let next = x
                    .iter()
                    .zip(v1.iter().zip(&v2))
                    .map(|(x, (a, b))| x + 0.5 * dt * (a + b))
                    .collect();
                ens.with_positions(next)
            }
        }
    }

    /// `∫f(K_δ ∗ ρ_N)` with Gauss nodes between the kinks `x_i ± δ`.
    fn entropy_term(&self, ens: &ParticleEnsemble) -> Result<f64> {
        let d = self.delta();
        let sorted = SortedEnsemble::new(ens.positions());
        let mut breaks: Vec<f64> = sorted.x.iter().flat_map(|&x| [x - d, x + d]).collect();
        breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        breaks.dedup();
        let gl = GaussLegendre::new(8);
        let w = ens.weight();
        let mol = &self.cfg.mollifier;
        let xs = &sorted.x;
        let mut total = 0.0;
        let mut err = None;
        for win in breaks.windows(2) {
            let (a, b) = (win[0], win[1]);
            if b - a <= 0.0 {
                continue;
            }
            // particles whose support meets (a, b)
            let lo = xs.partition_point(|&x| x + d <= a);
            let hi = xs.partition_point(|&x| x - d < b);
            if lo >= hi {
                continue;
            }
            total += gl.integrate(a, b, |y| {
                let mu: f64 = xs[lo..hi].iter().map(|&x| mol.eval(y - x)).sum::<f64>() * w;
                match self.cfg.law.f(mu) {
                    Ok(v) => v,
                    Err(e) => {
                        err = Some(e);
                        0.0
                    }
                }
            });
        }
        match err {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }

    /// `E_δ = ∫f(K_δ ∗ ρ_N) − ½∬G̃_δ dρ_N dρ_N`.
    ///
    /// The alternate total evaluates the interaction as `½∫(G_ε ∗ μ)μ` with
    /// `μ = K_δ ∗ ρ_N` on a fine lattice.
    pub fn energy(&self, ens: &ParticleEnsemble) -> Result<EnergyReport> {
        let entropy = self.entropy_term(ens)?;
        let wgt = self.cfg.interaction_weight;
        let interaction = -0.5 * wgt * self.pair_sum(ens);
        let mut report = EnergyReport::from_terms(
            FunctionalId::EDelta,
            &[("entropy", entropy), ("interaction", interaction)],
        );
        let alt = -0.5 * wgt * self.pair_sum_via_density(ens)?;
        report.alternate_total = Some(entropy + alt);
        report.alternate_terms = [("entropy".to_string(), entropy), ("interaction".to_string(), alt)]
            .into_iter()
            .collect();
        Ok(report)
    }

    fn pair_sum(&self, ens: &ParticleEnsemble) -> f64 {
        pair_sum(&self.rk, ens.positions())
    }

    /// `∫(G_ε ∗ μ)μ` by the trapezoid rule on a lattice of spacing `δ/128`
    /// with the kink of `G_ε` at the diagonal corrected.
    fn pair_sum_via_density(&self, ens: &ParticleEnsemble) -> Result<f64> {
        let kern = self.rk.kernel();
        let d = self.delta();
        let h = d / 128.0;
        let x = ens.positions();
        let (lo, hi) = x
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        let k0 = ((lo - d) / h).floor() as i64;
        let k1 = ((hi + d) / h).ceil() as i64;
        let n = (k1 - k0 + 1) as usize;
        let mut mu = vec![0.0; n];
        let w = ens.weight();
        for &xi in x {
            let a = ((xi - d) / h).ceil() as i64;
            let b = ((xi + d) / h).floor() as i64;
            for kk in a..=b {
                mu[(kk - k0) as usize] += w * self.cfg.mollifier.eval(kk as f64 * h - xi);
            }
        }
        let c = kern.amplitude();
        let q = (-kern.decay_rate() * h).exp();
        let mut conv = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            acc = acc * q + mu[i];
            conv[i] = acc;
        }
        acc = 0.0;
        for i in (0..n).rev() {
            conv[i] += acc * q;
            acc = acc * q + mu[i];
        }
        let jump = 1.0 / (kern.eta * kern.scale_eps * kern.scale_eps);
        let total: f64 = (0..n)
            .map(|i| (c * h * conv[i] - h * h * jump * mu[i] / 12.0) * mu[i])
            .sum::<f64>()
            * h;
        Ok(total)
    }
}

/// Positions sorted ascending with the permutation back to input order.
struct SortedEnsemble {
    x: Vec<f64>,
    order: Vec<usize>,
}

impl SortedEnsemble {
    fn new(positions: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..positions.len()).collect();
        order.sort_by(|&a, &b| positions[a].partial_cmp(&positions[b]).unwrap());
        let x = order.iter().map(|&i| positions[i]).collect();
        Self { x, order }
    }

    /// `L_i = Σ_{x_i − x_j ≥ r} e^{−k(x_i − x_j − r)}` and the mirrored `R_i`.
    /// The membership test is the exact complement of the near-field one.
    fn far_sums(&self, r: f64, k: f64) -> (Vec<f64>, Vec<f64>) {
        let xs = &self.x;
        let n = xs.len();
        let mut left = vec![0.0; n];
        let mut right = vec![0.0; n];
        let mut s = 0.0;
        let mut t_prev = f64::NEG_INFINITY;
        let mut p = 0;
        for i in 0..n {
            let t = xs[i] - r;
            if t_prev.is_finite() {
                s *= (-k * (t - t_prev)).exp();
            }
            while p < n && xs[i] - xs[p] >= r {
                s += (-k * (t - xs[p])).exp();
                p += 1;
            }
            t_prev = t;
            left[i] = s;
        }
        s = 0.0;
        t_prev = f64::INFINITY;
        let mut p = n;
        for i in (0..n).rev() {
            let t = xs[i] + r;
            if t_prev.is_finite() {
                s *= (-k * (t_prev - t)).exp();
            }
            while p > 0 && xs[p - 1] - xs[i] >= r {
                s += (-k * (xs[p - 1] - t)).exp();
                p -= 1;
            }
            t_prev = t;
            right[i] = s;
        }
        (left, right)
    }
}

pub fn blob_velocity(ens: &ParticleEnsemble, model: &BlobModel) -> Result<Vec<f64>> {
    model.velocity(ens)
}

pub fn blob_step(ens: &ParticleEnsemble, model: &BlobModel) -> Result<ParticleEnsemble> {
    Ok(model.step(ens)?.0)
}

pub fn empirical_energy(ens: &ParticleEnsemble, model: &BlobModel) -> Result<EnergyReport> {
    model.energy(ens)
}

/// `Σ w |x_i|²`.
pub fn second_moment(ens: &ParticleEnsemble) -> f64 {
    ens.weight() * ens.positions().iter().map(|x| x * x).sum::<f64>()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlobTrajectory {
    pub sample_times: Vec<f64>,
    pub samples: Vec<ParticleEnsemble>,
    /// Diagnostics at every accepted step, starting from the initial state.
    pub times: Vec<f64>,
    pub energy_entropy: Vec<f64>,
    pub energy_interaction: Vec<f64>,
    pub second_moment: Vec<f64>,
    pub dt_history: Vec<f64>,
}

impl BlobTrajectory {
    pub fn energy(&self) -> Vec<f64> {
        self.energy_entropy
            .iter()
            .zip(&self.energy_interaction)
            .map(|(a, b)| a + b)
            .collect()
    }

    pub fn final_state(&self) -> &ParticleEnsemble {
        self.samples.last().expect("trajectory holds the initial state")
    }
}

/// Runs to time `t_end`, landing exactly on every sample time.
/// Energy is evaluated every `diag_every` steps (and at the end).
pub fn blob_simulate(
    model: &BlobModel,
    initial: &ParticleEnsemble,
    t_end: f64,
    sample_times: &[f64],
    diag_every: usize,
) -> Result<BlobTrajectory> {
    if !(t_end > 0.0) {
        return Err(Error::input(format!("final time must be positive, got {t_end}")));
    }
    let mut targets: Vec<f64> = sample_times.iter().copied().filter(|&t| t > 0.0 && t < t_end).collect();
    targets.push(t_end);
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup();

    let mut traj = BlobTrajectory {
        sample_times: vec![0.0],
        samples: vec![initial.clone()],
        times: Vec::new(),
        energy_entropy: Vec::new(),
        energy_interaction: Vec::new(),
        second_moment: Vec::new(),
        dt_history: Vec::new(),
    };
    let record = |traj: &mut BlobTrajectory, t: f64, ens: &ParticleEnsemble| -> Result<()> {
        let e = model.energy(ens)?;
        traj.times.push(t);
        traj.energy_entropy.push(e.term("entropy"));
        traj.energy_interaction.push(e.term("interaction"));
        traj.second_moment.push(second_moment(ens));
        Ok(())
    };
    record(&mut traj, 0.0, initial)?;
    let every = diag_every.max(1);
    let mut ens = initial.clone();
    let mut t = 0.0;
    let mut steps = 0usize;
    for &target in &targets {
        while t < target - 1e-14 * target.max(1.0) {
            let dt_rule = match model.cfg.dt {
                Some(dt) => dt,
                None => model.stable_dt(&ens)?,
            };
            let dt = dt_rule.min(target - t);
            ens = model.step_with(&ens, dt)?;
            t += dt;
            steps += 1;
            traj.dt_history.push(dt);
            if steps % every == 0 {
                record(&mut traj, t, &ens)?;
            }
        }
        t = target;
        traj.sample_times.push(target);
        traj.samples.push(ens.clone());
    }
    if steps % every != 0 {
        record(&mut traj, t, &ens)?;
    }
    Ok(traj)
}

/// `(1/N²)Σ_{i,j} G̃_δ(x_i − x_j)` over a 1D point set, self pairs included.
pub(crate) fn pair_sum(rk: &RegularizedKernel, positions: &[f64]) -> f64 {
    let sorted = SortedEnsemble::new(positions);
    let r = 2.0 * rk.mollifier().delta;
    let k = rk.kernel().decay_rate();
    let (left, right) = sorted.far_sums(r, k);
    let xs = &sorted.x;
    let far_scale = rk.eval(r);
    let mut total = 0.0;
    for i in 0..xs.len() {
        let mut acc = rk.eval(0.0);
        let mut j = i;
        while j > 0 && xs[i] - xs[j - 1] < r {
            j -= 1;
            acc += rk.eval(xs[i] - xs[j]);
        }
        let mut j = i + 1;
        while j < xs.len() && xs[j] - xs[i] < r {
            acc += rk.eval(xs[i] - xs[j]);
            j += 1;
        }
        total += acc + far_scale * (left[i] + right[i]);
    }
    let w = 1.0 / xs.len() as f64;
    total * w * w
}

/// `(1/N)Σ_j G̃_δ'(x_i − x_j)` for every particle of a 1D point set.
pub(crate) fn attraction_sum(rk: &RegularizedKernel, positions: &[f64]) -> Vec<f64> {
    let sorted = SortedEnsemble::new(positions);
    let r = 2.0 * rk.mollifier().delta;
    let k = rk.kernel().decay_rate();
    let far_scale = rk.eval(r);
    let (left, right) = sorted.far_sums(r, k);
    let xs = &sorted.x;
    let w = 1.0 / xs.len() as f64;
    let near: Vec<f64> = (0..xs.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            let mut j = i;
            while j > 0 && xs[i] - xs[j - 1] < r {
                j -= 1;
                acc += rk.grad(xs[i] - xs[j]);
            }
            let mut j = i + 1;
            while j < xs.len() && xs[j] - xs[i] < r {
                acc += rk.grad(xs[i] - xs[j]);
                j += 1;
            }
            acc
        })
        .collect();
    let mut out = vec![0.0; xs.len()];
    for (s, &orig) in sorted.order.iter().enumerate() {
        out[orig] = w * (near[s] + k * far_scale * (right[s] - left[s]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(delta: f64, refine: usize) -> BlobModel {
        let mut cfg = BlobConfig::new(
            PressureLaw::PowerLaw { m: 3.0 },
            InteractionKernel::free(1.0, 1.0).unwrap(),
            Mollifier::bump(delta).unwrap(),
        );
        cfg.eval_refine = refine;
        BlobModel::new(cfg).unwrap()
    }

    #[test]
    fn single_particle_is_at_rest() {
        let m = model(0.2, 8);
        let e = ParticleEnsemble::new(vec![0.37], 0.2).unwrap();
        let v = m.velocity(&e).unwrap();
        assert!(v[0].abs() < 1e-10, "{}", v[0]);
        let next = blob_step(&e, &m).unwrap();
        assert!((next.positions()[0] - 0.37).abs() < 1e-10);
    }

    #[test]
    fn mirror_pair_has_opposite_velocities() {
        let m = model(0.2, 8);
        let e = ParticleEnsemble::new(vec![-0.1, 0.1], 0.2).unwrap();
        let v = m.velocity(&e).unwrap();
        assert!((v[0] + v[1]).abs() < 1e-10);
    }

    #[test]
    fn far_sums_match_direct() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 23) as f64 * 0.13 - 1.0).collect();
        let s = SortedEnsemble::new(&xs);
        let (l, r) = s.far_sums(0.3, 2.0);
        for i in 0..xs.len() {
            let xi = s.x[i];
            let dl: f64 = s.x.iter().filter(|&&x| xi - x >= 0.3).map(|&x| (-2.0 * (xi - x - 0.3)).exp()).sum();
            let dr: f64 = s.x.iter().filter(|&&x| x - xi >= 0.3).map(|&x| (-2.0 * (x - xi - 0.3)).exp()).sum();
            assert!((l[i] - dl).abs() < 1e-12 && (r[i] - dr).abs() < 1e-12);
        }
    }

    #[test]
    fn pair_sum_matches_direct() {
        let m = model(0.05, 8);
        let xs: Vec<f64> = (0..60).map(|i| (i as f64 * 0.7).sin() * 0.8).collect();
        let e = ParticleEnsemble::new(xs.clone(), 0.05).unwrap();
        let direct: f64 = xs
            .iter()
            .flat_map(|a| xs.iter().map(move |b| a - b))
            .map(|d| m.rk.eval(d))
            .sum::<f64>()
            / 3600.0;
        assert!((m.pair_sum(&e) - direct).abs() < 1e-12);
    }

    #[test]
    fn pair_sum_counts_touching_chain_once() {
        // spacings of exactly 2δ up to rounding sit on the near/far boundary
        let m = model(0.05, 8);
        let xs: Vec<f64> = (0..40).map(|k| -0.73 + 0.1 * k as f64).collect();
        let direct: f64 = xs
            .iter()
            .flat_map(|a| xs.iter().map(move |b| a - b))
            .map(|d| m.rk.eval(d))
            .sum::<f64>()
            / 1600.0;
        assert!((pair_sum(&m.rk, &xs) - direct).abs() < 1e-12);
    }

    #[test]
    fn energy_routes_agree_and_are_translation_invariant() {
        let m = model(0.1, 8);
        let xs: Vec<f64> = (0..50).map(|i| -0.6 + 0.025 * i as f64 + 0.003 * (i as f64).sin()).collect();
        let e = ParticleEnsemble::new(xs, 0.1).unwrap();
        let r = m.energy(&e).unwrap();
        assert!((r.total - r.alternate_total.unwrap()).abs() < 1e-6, "{r:?}");
        let shifted = m.energy(&e.translated(1.0)).unwrap();
        assert!((shifted.total - r.total).abs() < 1e-10);
    }

    #[test]
    fn one_particle_energy_terms() {
        let m = model(0.2, 8);
        let e = ParticleEnsemble::new(vec![0.0], 0.2).unwrap();
        let r = m.energy(&e).unwrap();
        assert!((r.term("interaction") + 0.5 * m.rk.eval(0.0)).abs() < 1e-15);
        let mol = Mollifier::bump(0.2).unwrap();
        let f = GaussLegendre::new(20).integrate(-0.2, 0.2, |x| mol.eval(x).powi(3) / 2.0);
        assert!((r.term("entropy") - f).abs() < 1e-12);
    }

    /// Brute-force velocity of particle `i`: nested Gauss quadrature for both
    /// convolution terms with breaks at every kink.
    fn oracle_velocity(xs: &[f64], delta: f64, i: usize) -> f64 {
        let mol = Mollifier::bump(delta).unwrap();
        let g = InteractionKernel::free(1.0, 1.0).unwrap();
        let gl = GaussLegendre::new(30);
        let w = 1.0 / xs.len() as f64;
        // G̃'(d) = ∬ K(u) K(v) G'(d − u − v) du dv
        let grad_tilde = |d: f64| {
            gl.integrate_panels(-delta, delta, 8, |u| {
                mol.eval(u)
                    * gl.integrate_with_breaks(-delta, delta, &[d - u], |v| {
                        mol.eval(v) * g.derivative(d - u - v)
                    })
            })
        };
        let attraction: f64 = xs.iter().map(|&xj| w * grad_tilde(xs[i] - xj)).sum();
        let mu = |y: f64| w * xs.iter().map(|&x| mol.eval(y - x)).sum::<f64>();
        let mut breaks: Vec<f64> = xs.iter().flat_map(|&x| [x - delta, x + delta]).collect();
        breaks.push(xs[i]);
        let pressure = gl.integrate_with_breaks(xs[i] - delta, xs[i] + delta, &breaks, |y| {
            mol.derivative(xs[i] - y) * 1.5 * mu(y).powi(2)
        });
        attraction - pressure
    }

    #[test]
    fn two_particle_velocity_matches_nested_quadrature() {
        let xs = [-0.1, 0.1];
        let e = ParticleEnsemble::new(xs.to_vec(), 0.2).unwrap();
        let v = model(0.2, 32).velocity(&e).unwrap();
        assert!((v[0] - oracle_velocity(&xs, 0.2, 0)).abs() < 1e-6);
        assert!((v[1] - oracle_velocity(&xs, 0.2, 1)).abs() < 1e-6);
    }
}
