//! Building models and initial data from a [`Scenario`], running it, and
//! writing its artifacts.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::config::{Scenario, Tier};
use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, GridField, GridSpec};
use crate::hardsphere::{hs_simulate, DesiredVelocity, HsConfig, HsRun, HsTrajectory};
use crate::io::write_atomic;
use crate::kernels::{regularized_kernel, InteractionKernel, Mollifier, MollifierShape, RobinBC};
use crate::metrics::{dissipation_check, energy_g_eps, energy_g_eta_eps, energy_j_eps, EnergyReport};
use crate::particles::{blob_simulate, BlobConfig, BlobModel, BlobTrajectory, Integrator};
use crate::pde::{run, snapshot_csv, stefan_solve, DiffusionScheme, PdeConfig, PdeRun, PotentialMode, TimeScaling};
use crate::pressure::{DoubleWell, PressureLaw};

/// Name of the generator behind every seeded draw.
pub const RNG_ALGORITHM: &str = "ChaCha8";

/// Environment variable holding the sweep worker budget.
pub const WORKERS_ENV: &str = "AGGDIFF_WORKERS";

/// Hard-sphere step used when `particles.dt = auto`.
const HS_DEFAULT_DT: f64 = 1e-3;

pub fn law(s: &Scenario) -> Result<PressureLaw> {
    let law = match s.get("model.law")? {
        "power" => PressureLaw::PowerLaw { m: s.real("model.m")? },
        "hard_sphere" => PressureLaw::HardSphere,
        "reciprocal" => PressureLaw::SingularReciprocal { alpha: s.real("model.alpha")? },
        "log" => PressureLaw::SingularLog { alpha: s.real("model.alpha")? },
        other => return Err(Error::config(format!("unknown law `{other}`"))),
    };
    law.validate()?;
    Ok(law)
}

pub fn kernel(s: &Scenario) -> Result<InteractionKernel> {
    InteractionKernel::free(s.real("model.sigma")?, s.real("model.eta")?)
}

pub fn grid(s: &Scenario) -> Result<GridSpec> {
    let bc = match s.get("grid.bc")? {
        "whole_line" => BoundaryKind::WholeLineTruncated,
        _ => BoundaryKind::NoFlux,
    };
    GridSpec::new(s.count("grid.cells")?, s.real("grid.left")?, s.real("grid.right")?, bc)
}

fn plateau_value(s: &Scenario) -> Result<f64> {
    match s.get("initial.value")? {
        "theta" => Ok(DoubleWell::new(law(s)?, s.real("model.sigma")?)?.theta),
        v => v
            .parse()
            .map_err(|_| Error::config(format!("initial.value: bad number `{v}`"))),
    }
}

/// Initial density of the given profile kind on the scenario grid.
fn profile_field(s: &Scenario, kind: &str) -> Result<GridField> {
    let g = grid(s)?;
    let c = s.real("initial.center")?;
    let w = s.real("initial.width")?;
    let h = s.real("initial.height")?;
    let bump = move |x: f64, c: f64| {
        let u = 2.0 * (x - c) / w;
        h * (1.0 - u * u).max(0.0)
    };
    let field = match kind {
        "bump" => GridField::from_fn(g.cells, g.left, g.right, g.bc, |x| bump(x, c))?,
        "two_bumps" => {
            let half = 0.5 * s.real("initial.separation")?;
            GridField::from_fn(g.cells, g.left, g.right, g.bc, |x| bump(x, c - half) + bump(x, c + half))?
        }
        "plateau" => GridField::indicator(
            g.cells,
            g.left,
            g.right,
            g.bc,
            s.real("initial.a")?,
            s.real("initial.b")?,
            plateau_value(s)?,
        )?,
        other => return Err(Error::config(format!("initial.kind `{other}` is not a grid profile"))),
    };
    if !(field.mass() > 0.0) {
        return Err(Error::config("initial density has no mass on the grid"));
    }
    Ok(field)
}

/// Grid initial data for the continuum tiers.
pub fn initial_field(s: &Scenario) -> Result<GridField> {
    profile_field(s, s.get("initial.kind")?)
}

/// Positions from a text file, one per line; blank lines and `#` comments
/// are skipped.
pub fn read_positions(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| Error::Parse {
            kind: "positions",
            line: idx + 1,
            message: format!("expected a finite position, got `{line}`"),
        })?;
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::input("position file holds no particles"));
    }
    Ok(out)
}

/// Initial ensemble for the particle tiers, with the largest shift applied
/// to make a hard-sphere ensemble feasible (0 otherwise).
///
/// Grid profiles are placed at the quantiles `F⁻¹((i + ½)/N)`; `sampled`
/// draws `F⁻¹((i + U_i)/N)` from the seeded generator. Empirical files are
/// used as given.
pub fn initial_particles(s: &Scenario) -> Result<(ParticleEnsemble, f64)> {
    let delta = s.real("particles.delta")?;
    let n = s.count("particles.n")?;
    let ens = match s.get("initial.kind")? {
        "empirical" => {
            let path = s.get("initial.file")?;
            let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{path}: {e}")))?;
            ParticleEnsemble::new(read_positions(&text)?, delta)?
        }
        "sampled" => {
            let density = profile_field(s, s.get("initial.density")?)?;
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed()?);
            ParticleEnsemble::from_density_stratified(&density, n, delta, &mut rng)?
        }
        kind => ParticleEnsemble::from_density_quantiles(&profile_field(s, kind)?, n, delta)?,
    };
    if s.tier == Tier::HardSphere && s.get("initial.kind")? != "empirical" {
        return spread_apart(&ens);
    }
    Ok((ens, 0.0))
}

/// Left-to-right sweep enforcing gaps of `2δ`, then a shift restoring the
/// centre of mass.
fn spread_apart(ens: &ParticleEnsemble) -> Result<(ParticleEnsemble, f64)> {
    let x = ens.sorted_positions()?;
    let gap = 2.0 * ens.delta() * (1.0 + 1e-9);
    let mut y = x.clone();
    for i in 1..y.len() {
        y[i] = y[i].max(y[i - 1] + gap);
    }
    let shift = (x.iter().sum::<f64>() - y.iter().sum::<f64>()) / x.len() as f64;
    let mut moved: f64 = 0.0;
    for (a, b) in x.iter().zip(y.iter_mut()) {
        *b += shift;
        moved = moved.max((*b - a).abs());
    }
    Ok((ens.with_positions(y)?, moved))
}

pub fn blob_config(s: &Scenario) -> Result<BlobConfig> {
    let shape = match s.get("particles.mollifier")? {
        "indicator" => MollifierShape::IndicatorBall,
        _ => MollifierShape::SmoothBump,
    };
    let mut c = BlobConfig::new(law(s)?, kernel(s)?, Mollifier::new(s.real("particles.delta")?, shape)?);
    c.dt = s.optional_real("particles.dt")?;
    c.integrator = match s.get("particles.integrator")? {
        "euler" => Integrator::Euler,
        _ => Integrator::Heun,
    };
    c.eval_refine = s.count("particles.eval_refine")?;
    c.interaction_weight = s.real("model.interaction")?;
    Ok(c)
}

pub fn pde_config(s: &Scenario) -> Result<PdeConfig> {
    let mut c = PdeConfig::new(law(s)?, kernel(s)?);
    c.eps = s.real("pde.eps")?;
    c.time_scaling = match s.get("pde.scaling")? {
        "stefan" => TimeScaling::Stefan,
        "hele_shaw" => TimeScaling::HeleShaw,
        _ => TimeScaling::Micro,
    };
    c.potential_mode = match s.get("pde.potential")? {
        "robin" => PotentialMode::RobinSolve(RobinBC::new(s.real("pde.robin_a")?, s.real("pde.robin_b")?)?),
        "obstacle" => PotentialMode::ObstacleExtendByZero,
        "eta_drift" => PotentialMode::EtaBoundaryDrift { eta_w: s.real("pde.eta_w")? },
        _ => PotentialMode::FreeConvolution,
    };
    c.diffusion = match s.get("pde.scheme")? {
        "semi_implicit" => DiffusionScheme::SemiImplicit,
        _ => DiffusionScheme::Explicit,
    };
    c.dt_safety = s.real("pde.dt_safety")?;
    c.dt_max = s.optional_real("pde.dt_max")?;
    c.diag_every = s.count("pde.diag_every")?;
    c.interaction_weight = s.real("model.interaction")?;
    c.validate()?;
    Ok(c)
}

/// A state at one sample time.
#[derive(Debug, Clone, PartialEq)]
pub enum State {
    Field(GridField),
    Particles(ParticleEnsemble),
}

/// In-memory result of one scenario.
#[derive(Debug, Clone)]
pub enum Outcome {
    Blob(BlobTrajectory),
    HardSphere(HsTrajectory),
    Pde(PdeRun),
    Stefan(PdeRun),
    Energy(EnergyReport),
}

impl Outcome {
    /// Recorded `(t, state)` pairs including `t = 0`; empty for the energy tier.
    pub fn states(&self) -> Vec<(f64, State)> {
        match self {
            Outcome::Blob(t) => t.sample_times.iter().zip(&t.samples).map(|(&a, b)| (a, State::Particles(b.clone()))).collect(),
            Outcome::HardSphere(t) => t.sample_times.iter().zip(&t.samples).map(|(&a, b)| (a, State::Particles(b.clone()))).collect(),
            Outcome::Pde(r) | Outcome::Stefan(r) => {
                r.sample_times.iter().zip(&r.samples).map(|(&a, b)| (a, State::Field(b.clone()))).collect()
            }
            Outcome::Energy(_) => Vec::new(),
        }
    }

    fn steps(&self) -> usize {
        match self {
            Outcome::Blob(t) => t.dt_history.len(),
            Outcome::HardSphere(t) => t.steps,
            Outcome::Pde(r) | Outcome::Stefan(r) => r.steps,
            Outcome::Energy(_) => 0,
        }
    }

    /// Last recorded energy, or the total for the energy tier.
    pub fn final_energy(&self) -> Option<f64> {
        match self {
            Outcome::Blob(t) => t.energy().last().copied(),
            Outcome::HardSphere(t) => t.energy.last().copied().filter(|e| e.is_finite()),
            Outcome::Pde(r) | Outcome::Stefan(r) => r.energy.last().copied(),
            Outcome::Energy(e) => Some(e.total),
        }
    }
}

/// Result of [`simulate`]: the outcome plus its JSON summary (without the
/// file list).
#[derive(Debug, Clone)]
pub struct Simulated {
    pub outcome: Outcome,
    pub summary: Value,
}

fn dt_summary(history: &[f64]) -> Value {
    if history.is_empty() {
        return json!({ "count": 0 });
    }
    let min = history.iter().copied().fold(f64::INFINITY, f64::min);
    let max = history.iter().copied().fold(0.0, f64::max);
    let mean = history.iter().sum::<f64>() / history.len() as f64;
    // at most ~1000 (step, dt) pairs, evenly strided, always keeping the last
    let stride = history.len().div_ceil(1000);
    let mut thinned: Vec<(usize, f64)> = history.iter().copied().enumerate().step_by(stride).collect();
    if thinned.last().map(|p| p.0) != Some(history.len() - 1) {
        thinned.push((history.len() - 1, history[history.len() - 1]));
    }
    json!({ "count": history.len(), "min": min, "max": max, "mean": mean, "history": thinned })
}

fn dissipation_json(series: &[f64], tol: f64) -> Result<Value> {
    let finite: Vec<f64> = series.iter().copied().filter(|e| e.is_finite()).collect();
    if finite.len() < 2 {
        return Ok(json!({ "checked": false }));
    }
    let d = dissipation_check(&finite, tol)?;
    Ok(json!({
        "checked": true,
        "pass": d.pass,
        "tolerance_per_record": tol,
        "worst_increase": d.worst_increase,
        "worst_index": d.worst_index,
    }))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Runs a scenario without touching the filesystem.
pub fn simulate(s: &Scenario) -> Result<Simulated> {
    simulate_inner(s).map_err(|e| e.in_scenario(&s.id))
}

fn simulate_inner(s: &Scenario) -> Result<Simulated> {
    if s.sweep.is_some() {
        return Err(Error::config("a sweep scenario runs through run_sweep"));
    }
    let start = Instant::now();
    let t_end = s.real("scenario.t_end")?;
    let samples = s.reals("scenario.samples")?;
    let (outcome, conservation, dissipation, dt_hist) = match s.tier {
        Tier::Blob => {
            let (ens, _) = initial_particles(s)?;
            let model = BlobModel::new(blob_config(s)?)?;
            let every = s.count("particles.diag_every")?;
            let traj = blob_simulate(&model, &ens, t_end, &samples, every)?;
            let dt_max = traj.dt_history.iter().copied().fold(0.0, f64::max);
            let tol = 10.0 * dt_max * dt_max * ens.count() as f64 * every as f64;
            let drift = (mean(traj.final_state().positions()) - mean(ens.positions())).abs();
            let cons = json!({ "particles": ens.count(), "mass": ens.total_mass(), "mean_position_drift": drift });
            let diss = dissipation_json(&traj.energy(), tol)?;
            let h = traj.dt_history.clone();
            (Outcome::Blob(traj), cons, diss, h)
        }
        Tier::HardSphere => {
            let (ens, adjust) = initial_particles(s)?;
            let bc = blob_config(s)?;
            let mode = DesiredVelocity::self_consistent(&bc.kernel, &bc.mollifier)?;
            let rk = regularized_kernel(&bc.kernel, &bc.mollifier)?;
            let dt = bc.dt.unwrap_or(HS_DEFAULT_DT);
            let run_cfg = HsRun {
                step: HsConfig::new(dt, ens.delta()),
                t_end,
                sample_times: samples.clone(),
                diag_every: s.count("particles.diag_every")?,
            };
            let traj = hs_simulate(&ens, &run_cfg, &mode, Some(&rk))?;
            let min_d = traj.min_distance.iter().copied().fold(f64::INFINITY, f64::min);
            let cons = json!({
                "particles": ens.count(),
                "initial_spread_displacement": adjust,
                "min_pair_distance": min_d,
                "min_pair_distance_over_2delta": min_d / (2.0 * ens.delta()),
                "max_restoration_displacement": traj.max_restoration(),
            });
            let tol = 10.0 * dt * dt * ens.count() as f64 * run_cfg.diag_every as f64;
            let diss = dissipation_json(&traj.energy, tol)?;
            let steps = traj.steps;
            (Outcome::HardSphere(traj), cons, diss, vec![dt; steps])
        }
        Tier::Pde | Tier::Stefan => {
            let init = initial_field(s)?;
            let r = if s.tier == Tier::Pde {
                run(&pde_config(s)?, &init, t_end, &samples)?
            } else {
                let dw = DoubleWell::new(law(s)?, s.real("model.sigma")?)?;
                stefan_solve(&init, &dw, t_end, &samples, s.real("pde.dt_safety")?)?
            };
            let dt_max = r.dt_history.iter().copied().fold(0.0, f64::max);
            let every = s.count("pde.diag_every")? as f64;
            let cons = json!({
                "initial_mass": r.initial_mass,
                "relative_mass_drift": r.mass_drift,
                "min_value": r.min_value,
                "retries": r.retries,
            });
            let diss = dissipation_json(&r.energy, 10.0 * dt_max * dt_max * every)?;
            let h = r.dt_history.clone();
            let o = if s.tier == Tier::Pde { Outcome::Pde(r) } else { Outcome::Stefan(r) };
            (o, cons, diss, h)
        }
        Tier::EnergyStudy => {
            let init = initial_field(s)?;
            let dw = DoubleWell::new(law(s)?, s.real("model.sigma")?)?;
            let k = kernel(s)?;
            let eps = s.real("pde.eps")?;
            let rep = match s.get("pde.functional")? {
                "j_eps" => energy_j_eps(&init, &dw, &k, eps)?,
                "g_eta_eps" => energy_g_eta_eps(&init, &dw, &k, eps, s.real("pde.eta_w")?)?,
                _ => energy_g_eps(&init, &dw, &k, eps)?,
            };
            let cons = json!({ "mass": init.mass() });
            (Outcome::Energy(rep), cons, json!({ "checked": false }), Vec::new())
        }
    };
    let summary = json!({
        "id": s.id,
        "tier": s.tier.name(),
        "params": s.params,
        "rng": { "algorithm": RNG_ALGORITHM, "seed": s.seed()? },
        "seconds": start.elapsed().as_secs_f64(),
        "steps": outcome.steps(),
        "final_energy": outcome.final_energy(),
        "dt": dt_summary(&dt_hist),
        "conservation": conservation,
        "dissipation": dissipation,
    });
    Ok(Simulated { outcome, summary })
}

/// Artifacts a tier can write, in output order.
pub fn artifacts(tier: Tier) -> &'static [&'static str] {
    match tier {
        Tier::Blob => &["trajectory", "diagnostics"],
        Tier::HardSphere => &["trajectory", "contacts", "diagnostics"],
        Tier::Pde | Tier::Stefan => &["snapshots", "series"],
        Tier::EnergyStudy => &["energy"],
    }
}

fn selected(s: &Scenario) -> Result<Vec<&'static str>> {
    let all = artifacts(s.tier);
    let asked: Vec<&str> = s.get("scenario.outputs")?.split(',').map(str::trim).filter(|x| !x.is_empty()).collect();
    if asked.is_empty() {
        return Ok(all.to_vec());
    }
    for a in &asked {
        if !all.contains(a) {
            return Err(Error::config(format!(
                "output `{a}` is not produced by the {} tier (choose from {})",
                s.tier,
                all.join(", ")
            )));
        }
    }
    Ok(all.iter().copied().filter(|a| asked.contains(a)).collect())
}

fn e12(v: f64) -> String {
    format!("{v:.12e}")
}

fn trajectory_csv(times: &[f64], samples: &[ParticleEnsemble]) -> String {
    let mut out = String::from("t,i,x_i\n");
    for (t, ens) in times.iter().zip(samples) {
        for (i, x) in ens.positions().iter().enumerate() {
            out.push_str(&format!("{},{i},{}\n", e12(*t), e12(*x)));
        }
    }
    out
}

fn render(s: &Scenario, sim: &Simulated) -> Result<Vec<(String, String)>> {
    let mut files = Vec::new();
    for name in selected(s)? {
        match (&sim.outcome, name) {
            (Outcome::Blob(t), "trajectory") => files.push(("trajectory.csv".into(), trajectory_csv(&t.sample_times, &t.samples))),
            (Outcome::Blob(t), "diagnostics") => {
                let mut out = String::from("t,energy_entropy,energy_interaction,energy,second_moment\n");
                for k in 0..t.times.len() {
                    let (a, b) = (t.energy_entropy[k], t.energy_interaction[k]);
                    out.push_str(&format!("{},{},{},{},{}\n", e12(t.times[k]), e12(a), e12(b), e12(a + b), e12(t.second_moment[k])));
                }
                files.push(("diagnostics.csv".into(), out));
            }
            (Outcome::HardSphere(t), "trajectory") => files.push(("trajectory.csv".into(), trajectory_csv(&t.sample_times, &t.samples))),
            (Outcome::HardSphere(t), "contacts") => files.push(("contacts.csv".into(), t.contacts_csv())),
            (Outcome::HardSphere(t), "diagnostics") => {
                let mut out = String::from("t,energy,min_distance,restoration_displacement\n");
                for k in 0..t.times.len() {
                    out.push_str(&format!(
                        "{},{},{},{}\n",
                        e12(t.times[k]),
                        e12(t.energy[k]),
                        e12(t.min_distance[k]),
                        e12(t.restoration_displacement[k])
                    ));
                }
                files.push(("diagnostics.csv".into(), out));
            }
            (Outcome::Pde(r) | Outcome::Stefan(r), "snapshots") => {
                // Stefan snapshots carry the model potential G ∗ ρ in the φ column
                let cfg = match s.tier {
                    Tier::Pde => pde_config(s)?,
                    _ => PdeConfig::new(law(s)?, kernel(s)?),
                };
                for (k, f) in r.samples.iter().enumerate() {
                    files.push((format!("snapshot_{k:03}.csv"), snapshot_csv(f, &cfg)?));
                }
            }
            (Outcome::Pde(r) | Outcome::Stefan(r), "series") => {
                let mut out = String::from("t,energy,entropy\n");
                for k in 0..r.times.len() {
                    out.push_str(&format!("{},{},{}\n", e12(r.times[k]), e12(r.energy[k]), e12(r.entropy[k])));
                }
                files.push(("series.csv".into(), out));
            }
            (Outcome::Energy(e), "energy") => {
                let text = serde_json::to_string_pretty(e).map_err(|e| Error::Io(e.to_string()))?;
                files.push(("energy.json".into(), text + "\n"));
            }
            _ => unreachable!("artifact list matches the outcome"),
        }
    }
    Ok(files)
}

/// Report of a finished scenario.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub id: String,
    pub dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub summary: Value,
    pub outcome: Outcome,
}

/// Runs a scenario and writes its artifacts and `summary.json` under
/// `out_dir/<id>/`, each file atomically.
pub fn run_scenario(s: &Scenario, out_dir: &Path) -> Result<RunReport> {
    let sim = simulate(s)?;
    let dir = out_dir.join(&s.id);
    let mut files = Vec::new();
    for (name, text) in render(s, &sim).map_err(|e| e.in_scenario(&s.id))? {
        let p = dir.join(name);
        write_atomic(&p, text.as_bytes()).map_err(|e| e.in_scenario(&s.id))?;
        files.push(p);
    }
    let mut summary = sim.summary;
    summary["files"] = json!(files.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect::<Vec<_>>());
    let p = dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
    write_atomic(&p, (text + "\n").as_bytes()).map_err(|e| e.in_scenario(&s.id))?;
    files.push(p);
    log::info!("scenario {} finished: {} files in {}", s.id, files.len(), dir.display());
    Ok(RunReport {
        id: s.id.clone(),
        dir,
        files,
        summary,
        outcome: sim.outcome,
    })
}

/// Worker budget from the environment, defaulting to the available cores.
pub fn worker_budget() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// One line of the sweep table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub id: String,
    pub value: f64,
    pub ok: bool,
    pub steps: usize,
    pub final_energy: Option<f64>,
    pub seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub table: PathBuf,
    /// Errors of failed children, in sweep order.
    pub errors: Vec<Error>,
}

/// Runs every child of a sweep, at most `workers` at a time, and writes
/// `sweep_summary.csv` with one row per child. Child failures are recorded
/// in their row and do not stop the others.
pub fn run_sweep(s: &Scenario, out_dir: &Path, workers: usize) -> Result<SweepReport> {
    let sweep = s
        .sweep
        .as_ref()
        .ok_or_else(|| Error::config(format!("scenario {} has no [sweep] section", s.id)))?;
    let children = s.children()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::config(format!("cannot start {workers} workers: {e}")))?;
    let dir = out_dir.join(&s.id);
    let results: Vec<Result<RunReport>> = pool.install(|| children.par_iter().map(|c| run_scenario(c, &dir)).collect());
    let mut rows = Vec::new();
    let mut errors = Vec::new();
    for ((c, v), r) in children.iter().zip(&sweep.values).zip(results) {
        rows.push(match r {
            Ok(rep) => SweepRow {
                id: c.id.clone(),
                value: *v,
                ok: true,
                steps: rep.summary["steps"].as_u64().unwrap_or(0) as usize,
                final_energy: rep.outcome.final_energy(),
                seconds: rep.summary["seconds"].as_f64().unwrap_or(0.0),
                error: None,
            },
            Err(e) => {
                log::error!("{e}");
                let row = SweepRow {
                    id: c.id.clone(),
                    value: *v,
                    ok: false,
                    steps: 0,
                    final_energy: None,
                    seconds: 0.0,
                    error: Some(e.to_string()),
                };
                errors.push(e);
                row
            }
        });
    }
    let mut out = format!("id,{},status,steps,final_energy,seconds,error\n", sweep.key);
    for r in &rows {
        out.push_str(&format!(
            "{},{},{},{},{},{:.3},{}\n",
            r.id,
            r.value,
            if r.ok { "ok" } else { "error" },
            r.steps,
            r.final_energy.map_or(String::new(), e12),
            r.seconds,
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";")
        ));
    }
    let table = dir.join("sweep_summary.csv");
    write_atomic(&table, out.as_bytes())?;
    Ok(SweepReport { rows, table, errors })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;

    #[test]
    fn positions_file_reports_bad_line() {
        assert_eq!(read_positions("0.1\n# c\n\n-0.2\n").unwrap(), vec![0.1, -0.2]);
        match read_positions("0.1\nx\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn hard_sphere_placement_is_feasible() {
        let s = parse_config("[scenario]\nid = h\ntier = hard_sphere\n[particles]\nn = 50\ndelta = 0.02\n").unwrap();
        let (ens, moved) = initial_particles(&s).unwrap();
        assert!(moved > 0.0);
        assert!(crate::hardsphere::min_pair_distance(&ens) >= 2.0 * 0.02);
    }

    #[test]
    fn plateau_defaults_to_theta() {
        let s = parse_config("[scenario]\nid = p\ntier = pde\n[initial]\nkind = plateau\n").unwrap();
        let f = initial_field(&s).unwrap();
        assert!((f.max() - 0.5).abs() < 1e-12);
        assert!((f.mass() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sampled_data_follow_the_seed() {
        let text = "[scenario]\nid = r\ntier = blob\nseed = 7\n[initial]\nkind = sampled\n";
        let a = initial_particles(&parse_config(text).unwrap()).unwrap().0;
        let b = initial_particles(&parse_config(text).unwrap()).unwrap().0;
        let c = initial_particles(&parse_config(&text.replace("7", "8")).unwrap()).unwrap().0;
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn unknown_output_rejected() {
        let s = parse_config("[scenario]\nid = e\ntier = energy\noutputs = trajectory\n").unwrap();
        let err = simulate(&s).and_then(|sim| render(&s, &sim)).unwrap_err();
        assert!(matches!(err, Error::Config(_)), "{err}");
    }
}
