//! Hard-sphere particles: velocity projection onto the admissible cone and
//! feasibility-preserving time stepping.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::grid::GridField;
use crate::kernels::{regularized_kernel, InteractionKernel, Mollifier, RegularizedKernel};
use crate::metrics::{EnergyReport, FunctionalId};
use crate::numerics::UniformSpline;
use crate::particles::{attraction_sum, pair_sum};

/// Over-relaxation factor of the Gauss–Seidel sweep.
const SOR_OMEGA: f64 = 1.3;
const MAX_SWEEPS: usize = 100_000;
const POLISH_EVERY: usize = 10;
const MAX_RESTORATION_SWEEPS: usize = 100;

/// One pair within reach, `i < j`, with `e` the unit vector from `i` to `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub i: usize,
    pub j: usize,
    pub e: Vec<f64>,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContactGraph {
    pub dim: usize,
    pub pairs: Vec<Contact>,
}

impl ContactGraph {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionResult {
    pub velocities: Vec<f64>,
    /// `(i, j)` of each contact, aligned with `pressures`.
    pub pairs: Vec<(usize, usize)>,
    pub pressures: Vec<f64>,
    pub kkt_residual: f64,
    pub sweeps: usize,
}

impl ProjectionResult {
    pub fn pressure(&self, i: usize, j: usize) -> Option<f64> {
        let key = (i.min(j), i.max(j));
        self.pairs.iter().position(|&p| p == key).map(|k| self.pressures[k])
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// All pairs with `|x_i − x_j| ≤ reach`, sorted by `(i, j)`.
fn pairs_within(positions: &[f64], dim: usize, reach: f64) -> Vec<(usize, usize, f64)> {
    let n = positions.len() / dim;
    let mut out: Vec<(usize, usize, f64)> = if dim == 1 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| positions[a].partial_cmp(&positions[b]).unwrap());
        let mut found = Vec::new();
        for s in 0..n {
            let a = order[s];
            for &b in &order[s + 1..] {
                let d = positions[b] - positions[a];
                if d > reach {
                    break;
                }
                found.push((a.min(b), a.max(b), d));
            }
        }
        found
    } else {
        (0..n)
            .into_par_iter()
            .flat_map_iter(|i| {
                let xi = &positions[i * dim..(i + 1) * dim];
                (i + 1..n).filter_map(move |j| {
                    let d = distance(xi, &positions[j * dim..(j + 1) * dim]);
                    (d <= reach).then_some((i, j, d))
                })
            })
            .collect()
    };
    out.sort_by_key(|&(i, j, _)| (i, j));
    out
}

fn build_graph(ens: &ParticleEnsemble, reach: f64, feas_tol: f64) -> Result<ContactGraph> {
    let dim = ens.dim();
    let x = ens.positions();
    let two_delta = 2.0 * ens.delta();
    let mut pairs = Vec::new();
    for (i, j, d) in pairs_within(x, dim, reach) {
        if d < two_delta - feas_tol {
            return Err(Error::Infeasible(format!(
                "particles {i} and {j} overlap: distance {d:.3e} below {two_delta:.3e}"
            )));
        }
        let e = (0..dim).map(|k| (x[j * dim + k] - x[i * dim + k]) / d).collect();
        pairs.push(Contact { i, j, e, distance: d });
    }
    Ok(ContactGraph { dim, pairs })
}

/// Pairs within `2δ + gap_tol`. Overlaps deeper than `10⁻⁹δ` are rejected.
pub fn detect_contacts(ens: &ParticleEnsemble, gap_tol: f64) -> Result<ContactGraph> {
    detect_contacts_with(ens, gap_tol, 1e-9 * ens.delta())
}

pub fn detect_contacts_with(ens: &ParticleEnsemble, gap_tol: f64, feas_tol: f64) -> Result<ContactGraph> {
    if !(gap_tol >= 0.0) || !(feas_tol >= 0.0) {
        return Err(Error::input("contact tolerances must be nonnegative"));
    }
    build_graph(ens, 2.0 * ens.delta() + gap_tol, feas_tol)
}

/// Complementarity problem `w = Jv + JJᵀλ + s ≥ 0`, `λ ≥ 0`, `λ·w = 0`,
/// where row `c` of `J` maps velocities to the normal separation rate.
struct Lcp<'a> {
    dim: usize,
    n: usize,
    pairs: &'a [Contact],
    v: &'a [f64],
    offsets: &'a [f64],
}

impl Lcp<'_> {
    fn rate(&self, u: &[f64], c: &Contact) -> f64 {
        let d = self.dim;
        (0..d).map(|k| (u[c.j * d + k] - u[c.i * d + k]) * c.e[k]).sum()
    }

    fn apply(&self, u: &mut [f64], c: &Contact, amount: f64) {
        let d = self.dim;
        for k in 0..d {
            u[c.i * d + k] -= amount * c.e[k];
            u[c.j * d + k] += amount * c.e[k];
        }
    }

    fn velocities(&self, lambda: &[f64]) -> Vec<f64> {
        let mut u = self.v.to_vec();
        for (c, &l) in self.pairs.iter().zip(lambda) {
            if l != 0.0 {
                self.apply(&mut u, c, l);
            }
        }
        u
    }

    fn residual(&self, lambda: &[f64], u: &[f64]) -> f64 {
        self.pairs
            .iter()
            .zip(self.offsets)
            .zip(lambda)
            .map(|((c, s), &l)| l.min(self.rate(u, c) + s).abs())
            .fold(0.0, f64::max)
    }

    /// Solves the equality system on the support of `lambda` by conjugate
    /// gradients and keeps the result if it satisfies all conditions.
    fn polish(&self, lambda: &[f64], tol: f64) -> Option<(Vec<f64>, Vec<f64>, f64)> {
        let active: Vec<usize> = (0..lambda.len()).filter(|&c| lambda[c] > 0.0).collect();
        let m = active.len();
        let matvec = |x: &[f64]| -> Vec<f64> {
            let mut y = vec![0.0; self.n * self.dim];
            for (a, &c) in active.iter().enumerate() {
                self.apply(&mut y, &self.pairs[c], x[a]);
            }
            active.iter().map(|&c| self.rate(&y, &self.pairs[c])).collect()
        };
        let b: Vec<f64> = active
            .iter()
            .map(|&c| -(self.rate(self.v, &self.pairs[c]) + self.offsets[c]))
            .collect();
        let mut x: Vec<f64> = active.iter().map(|&c| lambda[c]).collect();
        if m > 0 {
            let ax = matvec(&x);
            let mut r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
            let mut p = r.clone();
            let mut rr: f64 = r.iter().map(|v| v * v).sum();
            let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            for _ in 0..(4 * m).max(50) {
                if rr.sqrt() <= 1e-15 * bnorm {
                    break;
                }
                let ap = matvec(&p);
                let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
                if !(pap > 0.0) {
                    break;
                }
                let alpha = rr / pap;
                for k in 0..m {
                    x[k] += alpha * p[k];
                    r[k] -= alpha * ap[k];
                }
                let rr_new: f64 = r.iter().map(|v| v * v).sum();
                let beta = rr_new / rr;
                rr = rr_new;
                for k in 0..m {
                    p[k] = r[k] + beta * p[k];
                }
            }
        }
        let mut full = vec![0.0; lambda.len()];
        for (a, &c) in active.iter().enumerate() {
            if x[a] < -tol {
                return None;
            }
            full[c] = x[a].max(0.0);
        }
        let u = self.velocities(&full);
        let res = self.residual(&full, &u);
        (res <= tol).then_some((full, u, res))
    }

    fn solve(&self, warm: &[f64], tol: f64) -> Result<ProjectionResult> {
        let mut lambda: Vec<f64> = warm.iter().map(|l| l.max(0.0)).collect();
        let mut u = self.velocities(&lambda);
        let finish = |lambda: Vec<f64>, u: Vec<f64>, res: f64, sweeps: usize| ProjectionResult {
            velocities: u,
            pairs: self.pairs.iter().map(|c| (c.i, c.j)).collect(),
            pressures: lambda,
            kkt_residual: res,
            sweeps,
        };
        let res = self.residual(&lambda, &u);
        if res <= tol {
            return Ok(finish(lambda, u, res, 0));
        }
        let mut res = res;
        for sweep in 1..=MAX_SWEEPS {
            for (k, c) in self.pairs.iter().enumerate() {
                let w = self.rate(&u, c) + self.offsets[k];
                let next = (lambda[k] - SOR_OMEGA * w / 2.0).max(0.0);
                let step = next - lambda[k];
                if step != 0.0 {
                    self.apply(&mut u, c, step);
                    lambda[k] = next;
                }
            }
            res = self.residual(&lambda, &u);
            if res <= tol {
                // rebuild u from λ to shed accumulated rounding
                let u = self.velocities(&lambda);
                let res = self.residual(&lambda, &u);
                if res <= tol {
                    return Ok(finish(lambda, u, res, sweep));
                }
            }
            if sweep % POLISH_EVERY == 0 {
                if let Some((l, u, r)) = self.polish(&lambda, tol) {
                    return Ok(finish(l, u, r, sweep));
                }
            }
        }
        Err(Error::NonConvergence {
            iterations: MAX_SWEEPS,
            residual: res,
        })
    }
}

fn solve_projection(
    ens: &ParticleEnsemble,
    v: &[f64],
    graph: &ContactGraph,
    offsets: &[f64],
    warm: Option<&[f64]>,
) -> Result<ProjectionResult> {
    if v.len() != ens.positions().len() {
        return Err(Error::input(format!(
            "velocity has {} components, ensemble needs {}",
            v.len(),
            ens.positions().len()
        )));
    }
    if graph.dim != ens.dim() || graph.pairs.iter().any(|c| c.j >= ens.count() || c.i >= c.j) {
        return Err(Error::input("contact graph does not match the ensemble"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical("non-finite desired velocity"));
    }
    let scale = v.iter().fold(1.0_f64, |m, x| m.max(x.abs()));
    let tol = 1e-12 * scale;
    let zeros;
    let warm = match warm {
        Some(w) if w.len() == graph.len() => w,
        _ => {
            zeros = vec![0.0; graph.len()];
            &zeros
        }
    };
    Lcp {
        dim: ens.dim(),
        n: ens.count(),
        pairs: &graph.pairs,
        v,
        offsets,
    }
    .solve(warm, tol)
}

/// Euclidean projection of `v` onto the cone of velocities that do not
/// close any listed contact.
pub fn project_velocity(ens: &ParticleEnsemble, v: &[f64], graph: &ContactGraph) -> Result<ProjectionResult> {
    project_velocity_warm(ens, v, graph, None)
}

/// As [`project_velocity`], starting the sweep from the given pressures.
pub fn project_velocity_warm(
    ens: &ParticleEnsemble,
    v: &[f64],
    graph: &ContactGraph,
    warm: Option<&[f64]>,
) -> Result<ProjectionResult> {
    solve_projection(ens, v, graph, &vec![0.0; graph.len()], warm)
}

/// Source of the desired velocity `v` before projection.
#[derive(Clone)]
pub enum DesiredVelocity {
    /// `v_i = φ'(x_i)` from a cubic spline through cell-centre samples of `φ`.
    FixedPotential(UniformSpline),
    /// Arbitrary drift `x ↦ v(x)` in any dimension.
    Drift(Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>),
    /// `v_i = (1/N)Σ_j G̃_δ'(x_i − x_j)`, the gradient of the smoothed
    /// potential generated by the particles themselves.
    SelfConsistent(RegularizedKernel),
}

impl fmt::Debug for DesiredVelocity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::FixedPotential(_) => f.write_str("FixedPotential"),
            Self::Drift(_) => f.write_str("Drift"),
            Self::SelfConsistent(rk) => f.debug_tuple("SelfConsistent").field(rk.kernel()).finish(),
        }
    }
}

impl DesiredVelocity {
    pub fn fixed_potential(phi: &GridField) -> Result<Self> {
        Ok(Self::FixedPotential(UniformSpline::new(
            phi.left + 0.5 * phi.dx(),
            phi.dx(),
            phi.values.clone(),
        )?))
    }

    pub fn drift(f: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self::Drift(Arc::new(f))
    }

    pub fn self_consistent(kernel: &InteractionKernel, mollifier: &Mollifier) -> Result<Self> {
        Ok(Self::SelfConsistent(regularized_kernel(kernel, mollifier)?))
    }
}

pub fn desired_velocity(ens: &ParticleEnsemble, mode: &DesiredVelocity) -> Result<Vec<f64>> {
    let x = ens.positions();
    let dim = ens.dim();
    let v: Vec<f64> = match mode {
        DesiredVelocity::FixedPotential(spline) => {
            if dim != 1 {
                return Err(Error::input("a gridded potential drives 1D ensembles only"));
            }
            x.par_iter().map(|&xi| spline.derivative(xi)).collect()
        }
        DesiredVelocity::Drift(f) => {
            let parts: Vec<Vec<f64>> = x.par_chunks(dim).map(|xi| f(xi)).collect();
            if parts.iter().any(|p| p.len() != dim) {
                return Err(Error::input(format!("drift must return {dim} components")));
            }
            parts.concat()
        }
        DesiredVelocity::SelfConsistent(rk) => {
            if dim != 1 {
                return Err(Error::input("self-consistent drift is one-dimensional"));
            }
            attraction_sum(rk, x)
        }
    };
    if v.iter().any(|c| !c.is_finite()) {
        return Err(Error::numerical("non-finite desired velocity"));
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsConfig {
    pub dt: f64,
    pub gap_tol: f64,
    pub feas_tol: f64,
}

impl HsConfig {
    /// Default tolerances `gap_tol = 10⁻⁶δ`, `feas_tol = 10⁻⁹δ`.
    pub fn new(dt: f64, delta: f64) -> Self {
        Self {
            dt,
            gap_tol: 1e-6 * delta,
            feas_tol: 1e-9 * delta,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::config(format!("time step must be positive, got {}", self.dt)));
        }
        if !(self.gap_tol >= 0.0) || !(self.feas_tol >= 0.0) {
            return Err(Error::config("contact tolerances must be nonnegative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HsStepOutcome {
    pub ensemble: ParticleEnsemble,
    pub projection: ProjectionResult,
    /// Largest displacement applied by the restoration pass.
    pub restoration_displacement: f64,
    pub restoration_sweeps: usize,
}

/// Pushes overlapping pairs apart symmetrically to exactly `2δ`.
fn restore(positions: &mut [f64], dim: usize, delta: f64, feas_tol: f64) -> Result<usize> {
    let two_delta = 2.0 * delta;
    let trigger = two_delta - 1e-3 * feas_tol;
    for sweep in 0..=MAX_RESTORATION_SWEEPS {
        let bad = pairs_within(positions, dim, trigger);
        let bad: Vec<_> = bad.into_iter().filter(|&(_, _, d)| d < trigger).collect();
        if bad.is_empty() {
            return Ok(sweep);
        }
        if sweep == MAX_RESTORATION_SWEEPS {
            break;
        }
        for (i, j, _) in bad {
            let xi = positions[i * dim..(i + 1) * dim].to_vec();
            let xj = positions[j * dim..(j + 1) * dim].to_vec();
            let d = distance(&xi, &xj);
            if d >= two_delta {
                continue;
            }
            let e: Vec<f64> = if d > 0.0 {
                xj.iter().zip(&xi).map(|(b, a)| (b - a) / d).collect()
            } else {
                (0..dim).map(|k| if k == 0 { 1.0 } else { 0.0 }).collect()
            };
            let push = 0.5 * (two_delta - d);
            for k in 0..dim {
                positions[i * dim + k] -= push * e[k];
                positions[j * dim + k] += push * e[k];
            }
        }
    }
    Err(Error::Infeasible(format!(
        "restoration did not separate all pairs within {MAX_RESTORATION_SWEEPS} sweeps"
    )))
}

/// One projected step.
///
/// Pairs that could meet during the step carry the catch-up constraint
/// `gap + dt·rate ≥ 0`, so a pair closing in lands exactly at `2δ`;
/// touching pairs reduce to the cone condition `rate ≥ 0`.
pub fn hs_step(ens: &ParticleEnsemble, cfg: &HsConfig, mode: &DesiredVelocity) -> Result<HsStepOutcome> {
    hs_step_warm(ens, cfg, mode, &HashMap::new())
}

fn hs_step_warm(
    ens: &ParticleEnsemble,
    cfg: &HsConfig,
    mode: &DesiredVelocity,
    warm: &HashMap<(usize, usize), f64>,
) -> Result<HsStepOutcome> {
    cfg.validate()?;
    let v = desired_velocity(ens, mode)?;
    let dim = ens.dim();
    let vmax = v
        .chunks(dim)
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    let two_delta = 2.0 * ens.delta();
    let reach = two_delta + cfg.gap_tol.max(3.0 * vmax * cfg.dt);
    let graph = build_graph(ens, reach, cfg.feas_tol)?;
    let offsets: Vec<f64> = graph
        .pairs
        .iter()
        .map(|c| {
            let gap = c.distance - two_delta;
            if gap.abs() <= cfg.feas_tol {
                0.0
            } else {
                gap / cfg.dt
            }
        })
        .collect();
    let start: Vec<f64> = graph
        .pairs
        .iter()
        .map(|c| warm.get(&(c.i, c.j)).copied().unwrap_or(0.0))
        .collect();
    let projection = solve_projection(ens, &v, &graph, &offsets, Some(&start))?;
    let moved: Vec<f64> = ens
        .positions()
        .iter()
        .zip(&projection.velocities)
        .map(|(x, u)| x + cfg.dt * u)
        .collect();
    let mut restored = moved.clone();
    let sweeps = restore(&mut restored, dim, ens.delta(), cfg.feas_tol)?;
    let displacement = restored
        .iter()
        .zip(&moved)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(HsStepOutcome {
        ensemble: ens.with_positions(restored)?,
        projection,
        restoration_displacement: displacement,
        restoration_sweeps: sweeps,
    })
}

/// Smallest pairwise distance, `+∞` for a single particle.
pub fn min_pair_distance(ens: &ParticleEnsemble) -> f64 {
    let dim = ens.dim();
    let x = ens.positions();
    if dim == 1 {
        let s = ens.sorted_positions().expect("1D ensemble");
        return s.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    }
    let n = ens.count();
    (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| distance(&x[i * dim..(i + 1) * dim], &x[j * dim..(j + 1) * dim]))
                .fold(f64::INFINITY, f64::min)
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// `−½Σ_{i≠j} w²G̃_δ(x_i − x_j)` plus the constraint term, which is `0`
/// while `K_δ ∗ ρ_N ≤ 1` and `+∞` otherwise.
pub fn hs_energy(ens: &ParticleEnsemble, kernel: &InteractionKernel, mollifier: &Mollifier) -> Result<EnergyReport> {
    let rk = regularized_kernel(kernel, mollifier)?;
    hs_energy_with(ens, &rk, 1e-9 * ens.delta())
}

pub fn hs_energy_with(ens: &ParticleEnsemble, rk: &RegularizedKernel, feas_tol: f64) -> Result<EnergyReport> {
    if ens.dim() != 1 {
        return Err(Error::input("hard-sphere energy is one-dimensional"));
    }
    let mol = rk.mollifier();
    if (mol.delta - ens.delta()).abs() > 1e-12 * ens.delta() {
        return Err(Error::input(format!(
            "mollifier radius {} differs from particle radius {}",
            mol.delta,
            ens.delta()
        )));
    }
    // with disjoint supports the peak of K_δ ∗ ρ_N is one particle's peak
    let peak = mol.normalization * ens.weight();
    if min_pair_distance(ens) < 2.0 * ens.delta() - feas_tol {
        return Ok(EnergyReport::infinite(FunctionalId::EDelta, "particles overlap"));
    }
    if peak > 1.0 + 1e-8 {
        return Ok(EnergyReport::infinite(
            FunctionalId::EDelta,
            "single-particle density exceeds the bound",
        ));
    }
    let w = ens.weight();
    let off_diagonal = pair_sum(rk, ens.positions()) - ens.count() as f64 * w * w * rk.eval(0.0);
    Ok(EnergyReport::from_terms(
        FunctionalId::EDelta,
        &[("interaction", -0.5 * off_diagonal), ("constraint", 0.0)],
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactRecord {
    pub t: f64,
    pub i: usize,
    pub j: usize,
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HsTrajectory {
    pub sample_times: Vec<f64>,
    pub samples: Vec<ParticleEnsemble>,
    /// Diagnostics at the initial state and every `diag_every` steps.
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub min_distance: Vec<f64>,
    pub restoration_displacement: Vec<f64>,
    pub contacts: Vec<ContactRecord>,
    pub steps: usize,
}

impl HsTrajectory {
    pub fn final_state(&self) -> &ParticleEnsemble {
        self.samples.last().expect("trajectory holds the initial state")
    }

    /// Largest restoration displacement over all recorded steps.
    pub fn max_restoration(&self) -> f64 {
        self.restoration_displacement.iter().copied().fold(0.0, f64::max)
    }

    pub fn contacts_csv(&self) -> String {
        let mut s = String::from("t,i,j,p_ij\n");
        for c in &self.contacts {
            s.push_str(&format!("{:.12e},{},{},{:.12e}\n", c.t, c.i, c.j, c.p));
        }
        s
    }
}

#[derive(Debug, Clone)]
pub struct HsRun {
    pub step: HsConfig,
    pub t_end: f64,
    pub sample_times: Vec<f64>,
    pub diag_every: usize,
}

/// Fixed-step run. Energy is recorded only when `energy_kernel` is given;
/// otherwise the energy column holds `NaN`.
pub fn hs_simulate(
    initial: &ParticleEnsemble,
    run: &HsRun,
    mode: &DesiredVelocity,
    energy_kernel: Option<&RegularizedKernel>,
) -> Result<HsTrajectory> {
    run.step.validate()?;
    if !(run.t_end > 0.0) {
        return Err(Error::input(format!("final time must be positive, got {}", run.t_end)));
    }
    build_graph(initial, 2.0 * initial.delta(), run.step.feas_tol)?;
    let mut targets: Vec<f64> = run
        .sample_times
        .iter()
        .copied()
        .filter(|&t| t > 0.0 && t < run.t_end)
        .collect();
    targets.push(run.t_end);
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup();

    let mut traj = HsTrajectory {
        sample_times: vec![0.0],
        samples: vec![initial.clone()],
        times: Vec::new(),
        energy: Vec::new(),
        min_distance: Vec::new(),
        restoration_displacement: Vec::new(),
        contacts: Vec::new(),
        steps: 0,
    };
    let record = |traj: &mut HsTrajectory, t: f64, ens: &ParticleEnsemble, restored: f64| -> Result<()> {
        let e = match energy_kernel {
            Some(rk) => hs_energy_with(ens, rk, run.step.feas_tol)?.total,
            None => f64::NAN,
        };
        traj.times.push(t);
        traj.energy.push(e);
        traj.min_distance.push(min_pair_distance(ens));
        traj.restoration_displacement.push(restored);
        Ok(())
    };
    record(&mut traj, 0.0, initial, 0.0)?;
    let every = run.diag_every.max(1);
    let mut ens = initial.clone();
    let mut warm: HashMap<(usize, usize), f64> = HashMap::new();
    let mut t = 0.0;
    let mut last_restore = 0.0_f64;
    for &target in &targets {
        let span = target - t;
        let count = ((span / run.step.dt) - 1e-9).ceil().max(0.0) as usize;
        for k in 0..count {
            let mut cfg = run.step;
            if k + 1 == count {
                cfg.dt = span - (count - 1) as f64 * run.step.dt;
            }
            let out = hs_step_warm(&ens, &cfg, mode, &warm)?;
            t += cfg.dt;
            traj.steps += 1;
            last_restore = last_restore.max(out.restoration_displacement);
            warm = out
                .projection
                .pairs
                .iter()
                .copied()
                .zip(out.projection.pressures.iter().copied())
                .collect();
            ens = out.ensemble;
            if traj.steps % every == 0 {
                record(&mut traj, t, &ens, last_restore)?;
                last_restore = 0.0;
                for (&(i, j), &p) in out.projection.pairs.iter().zip(&out.projection.pressures) {
                    if p > 0.0 {
                        traj.contacts.push(ContactRecord { t, i, j, p });
                    }
                }
            }
        }
        t = target;
        traj.sample_times.push(target);
        traj.samples.push(ens.clone());
    }
    if traj.steps % every != 0 {
        record(&mut traj, t, &ens, last_restore)?;
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::BoundaryKind;
    use crate::kernels::MollifierShape;

    fn line(xs: &[f64], delta: f64) -> ParticleEnsemble {
        ParticleEnsemble::new(xs.to_vec(), delta).unwrap()
    }

    #[test]
    fn contact_detection_examples() {
        let d = 0.1;
        let g = detect_contacts(&line(&[0.0, 0.3], d), 1e-6 * d).unwrap();
        assert!(g.is_empty());
        let g = detect_contacts(&line(&[0.0, 0.2], d), 1e-6 * d).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.pairs[0].e, vec![1.0]);
        let chain: Vec<f64> = (0..5).rev().map(|k| 0.2 * k as f64).collect();
        let g = detect_contacts(&line(&chain, d), 1e-6 * d).unwrap();
        assert_eq!(g.len(), 4);
        assert!(g.pairs.iter().all(|c| c.i < c.j && c.e == vec![-1.0]));
        assert!(matches!(
            detect_contacts(&line(&[0.0, 0.15], d), 0.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn head_on_and_separating_pairs() {
        let e = line(&[0.0, 0.2], 0.1);
        let g = detect_contacts(&e, 1e-7).unwrap();
        let r = project_velocity(&e, &[1.0, -1.0], &g).unwrap();
        assert!(r.velocities.iter().all(|u| u.abs() < 1e-14));
        assert!((r.pressure(0, 1).unwrap() - 1.0).abs() < 1e-14);
        let r = project_velocity(&e, &[-1.0, 1.0], &g).unwrap();
        assert_eq!(r.velocities, vec![-1.0, 1.0]);
        assert_eq!(r.pressures, vec![0.0]);
    }

    #[test]
    fn three_particle_symmetric_compression() {
        let e = line(&[-0.2, 0.0, 0.2], 0.1);
        let g = detect_contacts(&e, 1e-7).unwrap();
        let r = project_velocity(&e, &[1.0, 0.0, -1.0], &g).unwrap();
        assert!(r.velocities.iter().all(|u| u.abs() < 1e-12));
        // both contacts carry unit pressure: u₁ = 1 − p₁₂ = 0, u₃ = −1 + p₂₃ = 0
        assert!((r.pressures[0] - 1.0).abs() < 1e-12);
        assert!((r.pressures[1] - 1.0).abs() < 1e-12);
        assert!(r.kkt_residual <= 1e-10);
    }

    #[test]
    fn two_dimensional_contact_along_axis() {
        // touching along e = (1, 1)/√2; the tangential part passes through
        let d = 0.5;
        let s = 2.0 * d / 2f64.sqrt();
        let e = ParticleEnsemble::with_dim(vec![0.0, 0.0, s, s], 2, d).unwrap();
        let g = detect_contacts(&e, 1e-9).unwrap();
        assert_eq!(g.len(), 1);
        let v = [1.0, 0.0, 0.0, 0.0];
        let r = project_velocity(&e, &v, &g).unwrap();
        // normal component of the relative velocity removed, split evenly
        let u = &r.velocities;
        assert!((u[0] - 0.75).abs() < 1e-12 && (u[1] + 0.25).abs() < 1e-12);
        assert!((u[2] - 0.25).abs() < 1e-12 && (u[3] - 0.25).abs() < 1e-12);
        let orth: f64 = v.iter().zip(u).map(|(v, u)| (v - u) * u).sum();
        assert!(orth.abs() < 1e-12);
    }

    #[test]
    fn fixed_linear_potential_gives_unit_velocity() {
        let phi = GridField::from_fn(200, -2.0, 2.0, BoundaryKind::NoFlux, |x| x).unwrap();
        let mode = DesiredVelocity::fixed_potential(&phi).unwrap();
        let e = line(&[-1.0, 0.1, 0.7], 0.01);
        let v = desired_velocity(&e, &mode).unwrap();
        assert!(v.iter().all(|v| (v - 1.0).abs() < 1e-10));
    }

    #[test]
    fn even_potential_gives_antisymmetric_velocity() {
        let phi = GridField::from_fn(400, -2.0, 2.0, BoundaryKind::NoFlux, |x| (x * x).cos()).unwrap();
        let mode = DesiredVelocity::fixed_potential(&phi).unwrap();
        let e = line(&[-0.9, -0.3, 0.3, 0.9], 0.01);
        let v = desired_velocity(&e, &mode).unwrap();
        assert!((v[0] + v[3]).abs() < 1e-12 && (v[1] + v[2]).abs() < 1e-12);
    }

    fn attraction_mode(delta: f64) -> (DesiredVelocity, RegularizedKernel) {
        let k = InteractionKernel::free(1.0, 0.1).unwrap();
        let m = Mollifier::new(delta, MollifierShape::IndicatorBall).unwrap();
        let rk = regularized_kernel(&k, &m).unwrap();
        (DesiredVelocity::SelfConsistent(rk.clone()), rk)
    }

    #[test]
    fn self_consistent_pair_attracts() {
        let (mode, _) = attraction_mode(0.05);
        let v = desired_velocity(&line(&[-0.3, 0.4], 0.05), &mode).unwrap();
        assert!(v[0] > 0.0 && v[1] < 0.0);
        assert!((v[0] + v[1]).abs() < 1e-14);
    }

    #[test]
    fn touching_pair_under_compression_does_not_move() {
        let e = line(&[0.3, 0.5], 0.1);
        let mode = DesiredVelocity::drift(|x| vec![if x[0] < 0.4 { 1.0 } else { -1.0 }]);
        let out = hs_step(&e, &HsConfig::new(0.01, 0.1), &mode).unwrap();
        for (a, b) in out.ensemble.positions().iter().zip(e.positions()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn free_particle_follows_linear_potential() {
        let phi = GridField::from_fn(100, -1.0, 3.0, BoundaryKind::NoFlux, |x| x).unwrap();
        let run = HsRun {
            step: HsConfig::new(0.01, 0.01),
            t_end: 1.0,
            sample_times: vec![],
            diag_every: 10,
        };
        let mode = DesiredVelocity::fixed_potential(&phi).unwrap();
        let tr = hs_simulate(&line(&[0.2], 0.01), &run, &mode, None).unwrap();
        assert!((tr.final_state().positions()[0] - 1.2).abs() < 1e-9);
    }

    #[test]
    fn cluster_compresses_to_exact_spacing() {
        let delta = 0.02;
        let xs: Vec<f64> = (0..10).map(|k| -0.9 + 0.2 * k as f64).collect();
        let mode = DesiredVelocity::drift(|x| vec![-x[0]]);
        let run = HsRun {
            step: HsConfig::new(0.01, delta),
            t_end: 40.0,
            sample_times: vec![],
            diag_every: 100,
        };
        let tr = hs_simulate(&line(&xs, delta), &run, &mode, None).unwrap();
        let s = tr.final_state().sorted_positions().unwrap();
        for w in s.windows(2) {
            assert!((w[1] - w[0] - 2.0 * delta).abs() <= run.step.feas_tol, "{}", w[1] - w[0]);
        }
        // static balance: projected velocity vanishes and matches a fresh solve
        let fin = tr.final_state();
        let v = desired_velocity(fin, &mode).unwrap();
        let g = detect_contacts(fin, run.step.gap_tol).unwrap();
        let r = project_velocity(fin, &v, &g).unwrap();
        assert!(r.velocities.iter().all(|u| u.abs() < 1e-8));
    }

    #[test]
    fn energy_translation_invariant_and_infinite_on_overlap() {
        let (_, rk) = attraction_mode(0.05);
        let xs: Vec<f64> = (0..12).map(|k| 0.15 * k as f64 - 0.8).collect();
        let e = line(&xs, 0.05);
        let a = hs_energy_with(&e, &rk, 1e-12).unwrap();
        let b = hs_energy_with(&e.translated(1.7), &rk, 1e-12).unwrap();
        assert!(a.total.is_finite());
        assert!((a.total - b.total).abs() < 1e-10);
        let mut ys = xs.clone();
        ys[1] = ys[0] + 0.05;
        let bad = line(&ys, 0.05);
        assert!(hs_energy_with(&bad, &rk, 1e-12).unwrap().total.is_infinite());
    }
}
