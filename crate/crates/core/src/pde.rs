//! Finite-volume solvers for the macroscopic equation
//! `∂tρ + ∂x(ρ∂xφ) = ∂x(ρ∂x f'(ρ))`, its rescaled sharp-interface regimes,
//! and the limiting Stefan problem.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, GridField, GridSpec};
use crate::kernels::{solve_potential, InteractionKernel, KernelDomain, RobinBC};
use crate::numerics::solve_tridiagonal;
use crate::pressure::{DoubleWell, PressureLaw};

const MAX_RETRIES: usize = 40;
/// Mass allowed in the two outermost cells of a truncated whole-line grid.
const TRUNCATION_MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeScaling {
    Micro,
    Stefan,
    /// Same equation with `ε∂tρ` on the left.
    HeleShaw,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PotentialMode {
    /// `φ = G_ε ∗ ρ` with `ρ` extended by zero.
    FreeConvolution,
    /// `σφ − ηε²φ'' = ρ` in the domain with Robin data.
    RobinSolve(RobinBC),
    /// Free convolution on a bounded domain acting as an obstacle.
    ObstacleExtendByZero,
    /// Free convolution plus `η_w τ_ε`, `τ_ε = G_ε ∗ χ_outside`.
    EtaBoundaryDrift { eta_w: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiffusionScheme {
    Explicit,
    /// Linearly implicit step with `φ` and `P'(ρ)` lagged: face diffusivity by
    /// arithmetic mean, face density central where the cell Péclet number is
    /// at most 2 and upwind elsewhere. The matrix is an M-matrix with unit
    /// column sums for any `dt`.
    SemiImplicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    pub law: PressureLaw,
    pub kernel: InteractionKernel,
    pub eps: f64,
    pub time_scaling: TimeScaling,
    pub potential_mode: PotentialMode,
    pub dt_safety: f64,
    pub diffusion: DiffusionScheme,
    /// Multiplier of the attractive potential (0 gives pure diffusion).
    pub interaction_weight: f64,
    /// Upper bound on the step in equation time.
    pub dt_max: Option<f64>,
    /// Energy and entropy are recorded every this many steps.
    pub diag_every: usize,
}

impl PdeConfig {
    pub fn new(law: PressureLaw, kernel: InteractionKernel) -> Self {
        Self {
            law,
            kernel,
            eps: 1.0,
            time_scaling: TimeScaling::Micro,
            potential_mode: PotentialMode::FreeConvolution,
            dt_safety: 0.5,
            diffusion: DiffusionScheme::Explicit,
            interaction_weight: 1.0,
            dt_max: None,
            diag_every: 1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.law.validate()?;
        if self.law == PressureLaw::HardSphere {
            return Err(Error::config(
                "the hard-sphere law is reached through continuation, not solved directly",
            ));
        }
        if !(self.eps > 0.0) || !self.eps.is_finite() {
            return Err(Error::config(format!("eps must be positive, got {}", self.eps)));
        }
        if !(self.dt_safety > 0.0 && self.dt_safety <= 1.0) {
            return Err(Error::config(format!("dt_safety must lie in (0, 1], got {}", self.dt_safety)));
        }
        if !self.interaction_weight.is_finite() {
            return Err(Error::config("interaction weight must be finite"));
        }
        if let Some(d) = self.dt_max {
            if !(d > 0.0) {
                return Err(Error::config(format!("dt_max must be positive, got {d}")));
            }
        }
        if let PotentialMode::EtaBoundaryDrift { eta_w } = self.potential_mode {
            if !eta_w.is_finite() {
                return Err(Error::config("boundary interaction weight must be finite"));
            }
        }
        Ok(())
    }

    /// Factor between physical time and equation time.
    fn time_factor(&self) -> f64 {
        match self.time_scaling {
            TimeScaling::HeleShaw => self.eps,
            _ => 1.0,
        }
    }
}

/// Precomputed operators for one grid.
struct Stepper {
    cfg: PdeConfig,
    grid: GridSpec,
    kernel: InteractionKernel,
    tau: Option<Vec<f64>>,
}

impl Stepper {
    fn new(cfg: &PdeConfig, grid: GridSpec) -> Result<Self> {
        cfg.validate()?;
        let mut kernel = cfg.kernel.with_scale(cfg.eps)?;
        if let PotentialMode::RobinSolve(bc) = cfg.potential_mode {
            bc.validate()?;
            kernel = kernel.with_domain(KernelDomain::BoundedInterval {
                left: grid.left,
                right: grid.right,
            })?;
        }
        let tau = match cfg.potential_mode {
            PotentialMode::EtaBoundaryDrift { .. } => Some(kernel.outside_potential(&grid)),
            _ => None,
        };
        Ok(Self {
            cfg: *cfg,
            grid,
            kernel,
            tau,
        })
    }

    fn field(&self, values: Vec<f64>) -> GridField {
        GridField {
            values,
            left: self.grid.left,
            right: self.grid.right,
            bc: self.grid.bc,
        }
    }

    /// Interaction part `G ∗ ρ` (weighted), without the boundary drift.
    fn interaction(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let w = self.cfg.interaction_weight;
        if w == 0.0 {
            return Ok(vec![0.0; rho.len()]);
        }
        let phi = match self.cfg.potential_mode {
            PotentialMode::RobinSolve(bc) => {
                solve_potential(&self.field(rho.to_vec()), &self.kernel, self.cfg.eps, &bc)?.values
            }
            _ => self.kernel.convolve_cells(rho, self.grid.dx()),
        };
        Ok(phi.into_iter().map(|p| w * p).collect())
    }

    fn potential(&self, rho: &[f64]) -> Result<Vec<f64>> {
        let mut phi = self.interaction(rho)?;
        if let (Some(tau), PotentialMode::EtaBoundaryDrift { eta_w }) = (&self.tau, self.cfg.potential_mode) {
            for (p, t) in phi.iter_mut().zip(tau) {
                *p += eta_w * t;
            }
        }
        Ok(phi)
    }

    fn pressures(&self, rho: &[f64]) -> Result<Vec<f64>> {
        rho.iter().map(|&r| self.cfg.law.pressure(r)).collect()
    }

    /// Stable step in equation time for the current state.
    fn stable_dt(&self, rho: &[f64], phi: &[f64]) -> Result<f64> {
        let dx = self.grid.dx();
        let umax = phi.windows(2).map(|w| (w[1] - w[0]).abs() / dx).fold(0.0, f64::max);
        let mut dt = if umax > 0.0 { 0.5 * dx / umax } else { f64::INFINITY };
        if self.cfg.diffusion == DiffusionScheme::Explicit {
            let mut stiff = 0.0_f64;
            for &r in rho {
                stiff = stiff.max(self.cfg.law.pressure_derivative(r)?);
            }
            if stiff > 0.0 {
                dt = dt.min(0.25 * dx * dx / stiff);
            }
        }
        dt *= self.cfg.dt_safety;
        if let Some(cap) = self.cfg.dt_max {
            dt = dt.min(cap);
        }
        if !dt.is_finite() {
            dt = dx;
        }
        Ok(dt)
    }

    fn drift_fluxes(&self, rho: &[f64], phi: &[f64]) -> Vec<f64> {
        let n = rho.len();
        let dx = self.grid.dx();
        let mut flux = vec![0.0; n + 1];
        for f in 1..n {
            let u = (phi[f] - phi[f - 1]) / dx;
            flux[f] = if u > 0.0 { rho[f - 1] * u } else { rho[f] * u };
        }
        flux
    }

    /// One step of length `dt` (equation time); `None` when the step must be
    /// retried with a smaller `dt`.
    fn try_step(&self, rho: &[f64], phi: &[f64], dt: f64) -> Result<Option<Vec<f64>>> {
        let n = rho.len();
        let dx = self.grid.dx();
        let next = match self.cfg.diffusion {
            DiffusionScheme::Explicit => {
                let mut flux = self.drift_fluxes(rho, phi);
                let p = self.pressures(rho)?;
                for f in 1..n {
                    flux[f] -= (p[f] - p[f - 1]) / dx;
                }
                (0..n).map(|i| rho[i] - dt / dx * (flux[i + 1] - flux[i])).collect::<Vec<f64>>()
            }
            DiffusionScheme::SemiImplicit => {
                let mut d = Vec::with_capacity(n);
                for &v in rho {
                    d.push(self.cfg.law.pressure_derivative(v)?);
                }
                let s = dt / dx;
                let mut lower = vec![0.0; n];
                let mut diag = vec![1.0; n];
                let mut upper = vec![0.0; n];
                for f in 1..n {
                    // face flux a_l ρ_{f−1} + a_r ρ_f with a_l ≥ 0 ≥ a_r
                    let u = (phi[f] - phi[f - 1]) / dx;
                    let k = 0.5 * (d[f - 1] + d[f]) / dx;
                    let (a_l, a_r) = if u.abs() <= 2.0 * k {
                        (0.5 * u + k, 0.5 * u - k)
                    } else if u > 0.0 {
                        (u + k, -k)
                    } else {
                        (k, u - k)
                    };
                    diag[f - 1] += s * a_l;
                    upper[f - 1] += s * a_r;
                    lower[f] -= s * a_l;
                    diag[f] -= s * a_r;
                }
                solve_tridiagonal(&lower, &diag, &upper, rho)?
            }
        };
        if next.iter().any(|v| !v.is_finite()) {
            return Ok(None);
        }
        let scale = next.iter().copied().fold(0.0, f64::max);
        if next.iter().any(|&v| v < -1e-12 * scale) {
            return Ok(None);
        }
        let next: Vec<f64> = next.into_iter().map(|v| v.max(0.0)).collect();
        if exceeds(&self.cfg.law, &next) {
            return Ok(None);
        }
        Ok(Some(next))
    }
}

fn exceeds(law: &PressureLaw, rho: &[f64]) -> bool {
    law.is_singular() && rho.iter().any(|&v| v >= law.max_density())
}

/// The drift potential for the configured mode: `φ_ε`, or `φ_ε + η_w τ_ε`.
pub fn potential_field(field: &GridField, cfg: &PdeConfig) -> Result<GridField> {
    let st = Stepper::new(cfg, GridSpec::of(field))?;
    Ok(field.with_values(st.potential(&field.values)?))
}

/// `∫f(ρ) − ½∫ρ(wG∗ρ) − η_w∫ρτ_ε`, the functional dissipated by the flow.
pub fn free_energy(field: &GridField, cfg: &PdeConfig) -> Result<f64> {
    let st = Stepper::new(cfg, GridSpec::of(field))?;
    free_energy_with(&st, &field.values)
}

fn free_energy_with(st: &Stepper, rho: &[f64]) -> Result<f64> {
    let dx = st.grid.dx();
    let mut bulk = 0.0;
    for &r in rho {
        bulk += st.cfg.law.f(r)?;
    }
    let phi = st.interaction(rho)?;
    let mut e = bulk * dx - 0.5 * rho.iter().zip(&phi).map(|(r, p)| r * p).sum::<f64>() * dx;
    if let (Some(tau), PotentialMode::EtaBoundaryDrift { eta_w }) = (&st.tau, st.cfg.potential_mode) {
        e -= eta_w * rho.iter().zip(tau).map(|(r, t)| r * t).sum::<f64>() * dx;
    }
    Ok(e)
}

/// Energy in the units of the regime: the free energy for `Micro`,
/// shifted by `a·mass` (giving `𝒥_ε`) for `Stefan`, and that divided by `ε`
/// (giving `𝒢_ε`) for `HeleShaw`.
fn regime_energy(st: &Stepper, rho: &[f64], shift: f64) -> Result<f64> {
    let e = free_energy_with(st, rho)?;
    let mass: f64 = rho.iter().sum::<f64>() * st.grid.dx();
    Ok(match st.cfg.time_scaling {
        TimeScaling::Micro => e,
        TimeScaling::Stefan => e + shift * mass,
        TimeScaling::HeleShaw => (e + shift * mass) / st.cfg.eps,
    })
}

/// Samples and diagnostics of a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PdeRun {
    pub sample_times: Vec<f64>,
    pub samples: Vec<GridField>,
    /// Times at which `energy` and `entropy` were recorded.
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub entropy: Vec<f64>,
    /// Physical time step of every accepted step.
    pub dt_history: Vec<f64>,
    pub retries: usize,
    pub steps: usize,
    pub initial_mass: f64,
    /// Largest relative mass change seen over the run.
    pub mass_drift: f64,
    pub min_value: f64,
}

impl PdeRun {
    fn new(initial: &GridField) -> Self {
        Self {
            sample_times: vec![0.0],
            samples: vec![initial.clone()],
            times: Vec::new(),
            energy: Vec::new(),
            entropy: Vec::new(),
            dt_history: Vec::new(),
            retries: 0,
            steps: 0,
            initial_mass: initial.mass(),
            mass_drift: 0.0,
            min_value: initial.min(),
        }
    }

    pub fn final_state(&self) -> &GridField {
        self.samples.last().expect("run holds the initial state")
    }

    /// Sample recorded at time `t`, if any.
    pub fn sample_at(&self, t: f64) -> Option<&GridField> {
        self.sample_times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|k| &self.samples[k])
    }

    fn track(&mut self, next: &GridField) {
        let m = next.mass();
        let drift = (m - self.initial_mass).abs() / self.initial_mass.abs().max(1e-300);
        self.mass_drift = self.mass_drift.max(drift);
        self.min_value = self.min_value.min(next.min());
    }
}

fn targets(t_end: f64, sample_times: &[f64]) -> Result<Vec<f64>> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(Error::input(format!("final time must be positive, got {t_end}")));
    }
    let mut t: Vec<f64> = sample_times.iter().copied().filter(|&s| s > 0.0 && s < t_end).collect();
    t.push(t_end);
    t.sort_by(|a, b| a.partial_cmp(b).unwrap());
    t.dedup();
    Ok(t)
}

fn check_initial(initial: &GridField, law: &PressureLaw) -> Result<()> {
    if initial.min() < 0.0 {
        return Err(Error::input("initial density must be nonnegative"));
    }
    if !(initial.mass() > 0.0) {
        return Err(Error::input("initial density has zero mass"));
    }
    if exceeds(law, &initial.values) {
        return Err(Error::domain("initial density for a singular pressure", initial.max()));
    }
    Ok(())
}

fn check_truncation(field: &GridField, t: f64) -> Result<()> {
    if field.bc == BoundaryKind::WholeLineTruncated {
        let m = field.boundary_mass(2);
        if m > TRUNCATION_MASS_TOL {
            return Err(Error::numerical(format!(
                "mass {m:.3e} reached the truncation boundary at t = {t}"
            )));
        }
    }
    Ok(())
}

/// One step of physical length at most `dt`, retried with halved steps on
/// loss of positivity. Returns the new field and the step taken.
pub fn pde_step(field: &GridField, cfg: &PdeConfig) -> Result<(GridField, f64)> {
    check_initial(field, &cfg.law)?;
    let st = Stepper::new(cfg, GridSpec::of(field))?;
    let phi = st.potential(&field.values)?;
    let dt = st.stable_dt(&field.values, &phi)?;
    let (next, dt_eq, _) = advance(&st, &field.values, &phi, dt)?;
    Ok((field.with_values(next), dt_eq * cfg.time_factor()))
}

fn advance(st: &Stepper, rho: &[f64], phi: &[f64], dt: f64) -> Result<(Vec<f64>, f64, usize)> {
    let mut dt = dt;
    for retry in 0..=MAX_RETRIES {
        let attempt = match st.try_step(rho, phi, dt) {
            Ok(v) => v,
            Err(Error::Domain { .. }) => None,
            Err(e) => return Err(e),
        };
        if let Some(next) = attempt {
            return Ok((next, dt, retry));
        }
        log::debug!("step rejected at dt = {dt:.3e}; halving");
        dt *= 0.5;
    }
    Err(Error::numerical(format!(
        "no acceptable step after {MAX_RETRIES} reductions (dt = {dt:.3e})"
    )))
}

/// Integrates to `t_end`, landing on every sample time.
pub fn run(cfg: &PdeConfig, initial: &GridField, t_end: f64, sample_times: &[f64]) -> Result<PdeRun> {
    check_initial(initial, &cfg.law)?;
    let st = Stepper::new(cfg, GridSpec::of(initial))?;
    let shift = DoubleWell::new(cfg.law, cfg.kernel.sigma).map(|d| d.a_shift).unwrap_or(0.0);
    let factor = cfg.time_factor();
    let mut out = PdeRun::new(initial);
    let record = |out: &mut PdeRun, t: f64, rho: &[f64]| -> Result<()> {
        out.times.push(t);
        out.energy.push(regime_energy(&st, rho, shift)?);
        out.entropy.push(st.field(rho.to_vec()).entropy());
        Ok(())
    };
    record(&mut out, 0.0, &initial.values)?;
    let every = cfg.diag_every.max(1);
    let mut rho = initial.values.clone();
    let mut t = 0.0;
    for target in targets(t_end, sample_times)? {
        while t < target {
            let phi = st.potential(&rho)?;
            let mut dt = st.stable_dt(&rho, &phi)? * factor;
            if t + dt >= target - 1e-9 * dt {
                dt = target - t;
            }
            let (next, dt_eq, retries) = advance(&st, &rho, &phi, dt / factor)?;
            let dt_phys = if retries == 0 { dt } else { dt_eq * factor };
            t = if retries == 0 && dt == target - t { target } else { t + dt_phys };
            rho = next;
            out.retries += retries;
            out.steps += 1;
            out.dt_history.push(dt_phys);
            let f = st.field(rho.clone());
            out.track(&f);
            check_truncation(&f, t)?;
            if out.steps % every == 0 {
                record(&mut out, t, &rho)?;
            }
        }
        out.sample_times.push(target);
        out.samples.push(st.field(rho.clone()));
    }
    if out.times.last() != Some(&t) {
        record(&mut out, t, &rho)?;
    }
    Ok(out)
}

/// Checks that `ρ_in` avoids the unstable phase `(0, θ)` except in isolated
/// interface cells between an empty cell and a cell at or above `θ`.
fn check_well_prepared(initial: &GridField, theta: f64) -> Result<()> {
    let v = &initial.values;
    let n = v.len();
    let empty = |x: f64| x <= 1e-12 * theta;
    let full = |x: f64| x >= theta * (1.0 - 1e-9);
    for i in 0..n {
        if empty(v[i]) || full(v[i]) {
            continue;
        }
        let left = if i > 0 { v[i - 1] } else { 0.0 };
        let right = if i + 1 < n { v[i + 1] } else { 0.0 };
        if !((empty(left) && full(right)) || (full(left) && empty(right))) {
            return Err(Error::input(format!(
                "ill-prepared data: cell {i} holds {:.4} inside the unstable range (0, {theta:.4})",
                v[i]
            )));
        }
    }
    Ok(())
}

/// Degenerate diffusion `∂tρ = ∂x(ρ∂x h**'(ρ))` with upwinded face flux
/// `−ρ_up (π_{i+1} − π_i)/dx`, `π = h**'(ρ)`, which vanishes wherever
/// `ρ ≤ θ` on both sides of a face.
pub fn stefan_solve(
    initial: &GridField,
    dw: &DoubleWell,
    t_end: f64,
    sample_times: &[f64],
    dt_safety: f64,
) -> Result<PdeRun> {
    if !(dt_safety > 0.0 && dt_safety <= 1.0) {
        return Err(Error::config(format!("dt_safety must lie in (0, 1], got {dt_safety}")));
    }
    if dw.law == PressureLaw::HardSphere {
        return Err(Error::config("the hard-sphere Stefan problem has no diffusion in the dense phase"));
    }
    check_initial(initial, &dw.law)?;
    check_well_prepared(initial, dw.theta)?;
    let dx = initial.dx();
    let n = initial.len();
    let hull_energy = |rho: &[f64]| -> Result<f64> {
        let mut s = 0.0;
        for &r in rho {
            s += dw.h_hull(r)?;
        }
        Ok(s * dx)
    };
    let mut out = PdeRun::new(initial);
    out.times.push(0.0);
    out.energy.push(hull_energy(&initial.values)?);
    out.entropy.push(initial.entropy());
    let mut rho = initial.values.clone();
    let mut t = 0.0;
    for target in targets(t_end, sample_times)? {
        while t < target {
            let mut stiff = 0.0_f64;
            let mut pi = Vec::with_capacity(n);
            for &r in &rho {
                pi.push(dw.h_hull_prime(r)?);
                if r > dw.theta {
                    stiff = stiff.max(r * (dw.law.f_second(r)? - 1.0 / dw.sigma));
                }
            }
            let mut dt = if stiff > 0.0 {
                dt_safety * 0.25 * dx * dx / stiff
            } else {
                target - t
            };
            if t + dt >= target - 1e-9 * dt {
                dt = target - t;
            }
            let mut flux = vec![0.0; n + 1];
            for f in 1..n {
                let up = if pi[f - 1] > pi[f] { rho[f - 1] } else { rho[f] };
                flux[f] = -up * (pi[f] - pi[f - 1]) / dx;
            }
            let mut accepted = None;
            for retry in 0..=MAX_RETRIES {
                let next: Vec<f64> = (0..n).map(|i| rho[i] - dt / dx * (flux[i + 1] - flux[i])).collect();
                let scale = next.iter().copied().fold(0.0, f64::max);
                if next.iter().all(|&v| v >= -1e-12 * scale && v.is_finite()) {
                    accepted = Some((next, retry));
                    break;
                }
                dt *= 0.5;
            }
            let (next, retries) = accepted.ok_or_else(|| Error::numerical("Stefan step lost positivity"))?;
            rho = next.into_iter().map(|v| v.max(0.0)).collect();
            t = if retries == 0 && dt == target - t { target } else { t + dt };
            out.retries += retries;
            out.steps += 1;
            out.dt_history.push(dt);
            let f = initial.with_values(rho.clone());
            out.track(&f);
            check_truncation(&f, t)?;
        }
        out.times.push(t);
        out.energy.push(hull_energy(&rho)?);
        out.entropy.push(initial.with_values(rho.clone()).entropy());
        out.sample_times.push(target);
        out.samples.push(initial.with_values(rho.clone()));
    }
    Ok(out)
}

/// Edges `(left, right)` of the support `{ρ > tol}`.
pub fn support_edges(field: &GridField, tol: f64) -> Option<(f64, f64)> {
    let first = field.values.iter().position(|&v| v > tol)?;
    let last = field.values.iter().rposition(|&v| v > tol)?;
    let dx = field.dx();
    Some((field.left + first as f64 * dx, field.left + (last + 1) as f64 * dx))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ContinuationSchedule {
    LargeM(Vec<f64>),
    /// Template singular law with its `α` replaced by each listed value.
    SingularAlpha(PressureLaw, Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContinuationReport {
    pub parameters: Vec<f64>,
    pub finals: Vec<GridField>,
    pub max_density: Vec<f64>,
    /// `max ρ − 1`, clipped at zero.
    pub overshoot: Vec<f64>,
    /// L¹ distance between consecutive members of the family.
    pub successive_l1: Vec<f64>,
    /// Ratios of consecutive entries of `successive_l1`.
    pub cauchy_ratios: Vec<f64>,
    /// `‖p(1 − ρ)‖_{L¹}` with `p = f'(ρ)`.
    pub complementarity: Vec<f64>,
}

/// Runs the same scenario along a schedule of increasingly stiff pressure
/// laws approaching the hard-sphere constraint `ρ ≤ 1`.
pub fn incompressible_continuation(
    base: &PdeConfig,
    initial: &GridField,
    t_end: f64,
    schedule: &ContinuationSchedule,
) -> Result<ContinuationReport> {
    let capacity = initial.right - initial.left;
    if initial.mass() > capacity {
        return Err(Error::input(format!(
            "mass {} exceeds the domain capacity {capacity}",
            initial.mass()
        )));
    }
    let (params, laws): (Vec<f64>, Vec<PressureLaw>) = match schedule {
        ContinuationSchedule::LargeM(ms) => ms.iter().map(|&m| (m, PressureLaw::PowerLaw { m })).unzip(),
        ContinuationSchedule::SingularAlpha(template, alphas) => {
            let make = |alpha: f64| match template {
                PressureLaw::SingularReciprocal { .. } => Ok(PressureLaw::SingularReciprocal { alpha }),
                PressureLaw::SingularLog { .. } => Ok(PressureLaw::SingularLog { alpha }),
                _ => Err(Error::config("alpha continuation needs a singular pressure law")),
            };
            let laws = alphas.iter().map(|&a| make(a)).collect::<Result<Vec<_>>>()?;
            (alphas.clone(), laws)
        }
    };
    if params.len() < 2 {
        return Err(Error::config("continuation needs at least two schedule entries"));
    }
    let finals = laws
        .par_iter()
        .map(|&law| {
            let cfg = PdeConfig { law, ..*base };
            run(&cfg, initial, t_end, &[]).map(|r| r.final_state().clone())
        })
        .collect::<Result<Vec<GridField>>>()?;
    let max_density: Vec<f64> = finals.iter().map(GridField::max).collect();
    let overshoot = max_density.iter().map(|m| (m - 1.0).max(0.0)).collect();
    let successive_l1 = finals
        .windows(2)
        .map(|w| w[0].l1_distance(&w[1]))
        .collect::<Result<Vec<f64>>>()?;
    let cauchy_ratios = successive_l1.windows(2).map(|w| w[1] / w[0]).collect();
    let mut complementarity = Vec::with_capacity(finals.len());
    for (f, law) in finals.iter().zip(&laws) {
        let mut s = 0.0;
        for &r in &f.values {
            s += (law.f_prime(r)? * (1.0 - r)).abs();
        }
        complementarity.push(s * f.dx());
    }
    Ok(ContinuationReport {
        parameters: params,
        finals,
        max_density,
        overshoot,
        successive_l1,
        cauchy_ratios,
        complementarity,
    })
}

/// Snapshot CSV with columns `x_center,rho,phi,pressure`.
pub fn snapshot_csv(field: &GridField, cfg: &PdeConfig) -> Result<String> {
    let phi = potential_field(field, cfg)?;
    let mut s = String::from("x_center,rho,phi,pressure\n");
    for i in 0..field.len() {
        let r = field.values[i];
        s.push_str(&format!(
            "{:.12e},{:.12e},{:.12e},{:.12e}\n",
            field.center(i),
            r,
            phi.values[i],
            cfg.law.pressure(r)?
        ));
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(m: f64) -> PdeConfig {
        PdeConfig::new(PressureLaw::PowerLaw { m }, InteractionKernel::free(1.0, 1.0).unwrap())
    }

    fn bump(cells: usize, half: f64) -> GridField {
        GridField::from_fn(cells, -half, half, BoundaryKind::NoFlux, |x| {
            (1.0 - 4.0 * x * x).max(0.0)
        })
        .unwrap()
    }

    #[test]
    fn constant_state_is_stationary() {
        let mut c = cfg(2.0);
        c.interaction_weight = 0.0;
        let f = GridField::new(vec![0.7; 50], 0.0, 1.0, BoundaryKind::NoFlux).unwrap();
        let (g, dt) = pde_step(&f, &c).unwrap();
        assert!(dt > 0.0);
        assert_eq!(g.values, f.values);
        // constant potential from the boundary-layer mode with zero weights
        c.potential_mode = PotentialMode::EtaBoundaryDrift { eta_w: 0.0 };
        assert_eq!(pde_step(&f, &c).unwrap().0.values, f.values);
    }

    #[test]
    fn mass_conserved_over_a_thousand_steps() {
        for scheme in [DiffusionScheme::Explicit, DiffusionScheme::SemiImplicit] {
            let mut c = cfg(3.0);
            c.diffusion = scheme;
            c.dt_max = Some(1e-3);
            let f = bump(200, 1.5);
            let mut g = f.clone();
            for _ in 0..1000 {
                g = pde_step(&g, &c).unwrap().0;
            }
            assert!(g.min() >= 0.0);
            assert!((g.mass() - f.mass()).abs() / f.mass() < 1e-12);
        }
    }

    #[test]
    fn potential_field_examples() {
        let c = cfg(3.0);
        let zero = GridField::zeros(40, -1.0, 1.0, BoundaryKind::NoFlux).unwrap();
        assert!(potential_field(&zero, &c).unwrap().values.iter().all(|&v| v == 0.0));

        let mut robin = cfg(3.0);
        robin.kernel = InteractionKernel::free(2.0, 1.0).unwrap();
        robin.eps = 0.1;
        robin.potential_mode = PotentialMode::RobinSolve(RobinBC::neumann());
        let c3 = GridField::new(vec![0.3; 40], -1.0, 1.0, BoundaryKind::NoFlux).unwrap();
        let phi = potential_field(&c3, &robin).unwrap();
        assert!(phi.values.iter().all(|v| (v - 0.15).abs() < 1e-12));

        let mut obst = robin;
        obst.potential_mode = PotentialMode::ObstacleExtendByZero;
        let one = GridField::new(vec![1.0; 400], 0.0, 1.0, BoundaryKind::NoFlux).unwrap();
        let phi = potential_field(&one, &obst).unwrap();
        assert!(phi.values[0] < 0.5 / 2.0 * 1.05 && phi.values[0] > 0.5 / 2.0 * 0.9);
        // ½σ⁻¹(2 − e^{−κa} − e^{−κb}) averaged over the cell
        let k = 2f64.sqrt() / 0.1;
        let exact = 0.5 * (1.0 - (-k * 0.5).exp());
        assert!((phi.values[200] - exact).abs() < 1e-4);
    }

    #[test]
    fn energy_decreases_along_aggregation() {
        let mut c = cfg(3.0);
        c.kernel = InteractionKernel::free(0.5, 0.5).unwrap();
        let f = bump(150, 1.5);
        let r = run(&c, &f, 0.2, &[0.1]).unwrap();
        for (w, t) in r.energy.windows(2).zip(r.times.windows(2)) {
            assert!(w[1] <= w[0] + 10.0 * (t[1] - t[0]) * r.dt_history[0]);
        }
        assert!(r.energy.last().unwrap() < &r.energy[0]);
        assert!(r.sample_at(0.1).is_some());
        assert!(r.mass_drift < 1e-12);
    }

    #[test]
    fn stationary_stefan_plateau() {
        let dw = DoubleWell::new(PressureLaw::PowerLaw { m: 3.0 }, 1.0).unwrap();
        let f = GridField::indicator(300, -1.5, 1.5, BoundaryKind::NoFlux, -0.5, 0.5, dw.theta).unwrap();
        let r = stefan_solve(&f, &dw, 1.0, &[], 0.5).unwrap();
        assert!(r.final_state().l1_distance(&f).unwrap() < 1e-8);
    }

    #[test]
    fn ill_prepared_stefan_data_rejected() {
        let dw = DoubleWell::new(PressureLaw::PowerLaw { m: 3.0 }, 1.0).unwrap();
        let f = bump(100, 1.5);
        assert!(matches!(stefan_solve(&f, &dw, 0.1, &[], 0.5), Err(Error::Input(_))));
    }

    #[test]
    fn stefan_front_expands_and_conserves_mass() {
        let dw = DoubleWell::new(PressureLaw::PowerLaw { m: 3.0 }, 1.0).unwrap();
        let f = GridField::indicator(240, -1.5, 1.5, BoundaryKind::NoFlux, -0.5, 0.5, 2.0 * dw.theta).unwrap();
        let r = stefan_solve(&f, &dw, 0.2, &[0.05, 0.1, 0.15], 0.5).unwrap();
        let mut prev = support_edges(&f, 1e-12).unwrap();
        for s in &r.samples[1..] {
            let e = support_edges(s, 1e-12).unwrap();
            assert!(e.0 <= prev.0 && e.1 >= prev.1);
            prev = e;
        }
        assert!(prev.1 > 0.5);
        assert!(r.mass_drift < 1e-12);
        for w in r.energy.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn hard_sphere_law_needs_continuation() {
        let c = PdeConfig::new(PressureLaw::HardSphere, InteractionKernel::free(1.0, 1.0).unwrap());
        assert!(matches!(pde_step(&bump(10, 1.0), &c), Err(Error::Config(_))));
    }
}
