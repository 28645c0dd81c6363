//! Convergence studies: one scenario parameter refined over a list of
//! values, each run compared with a reference at matched times.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::Scenario;
use super::scenario::{simulate, Outcome, State};
use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::kernels::Density;
use crate::metrics::wasserstein1d;

/// What each run is compared with.
#[derive(Debug, Clone)]
pub enum Reference {
    /// The run at the last value of the list.
    FinestSelf,
    /// An independent scenario, e.g. a fine PDE run for a particle sweep.
    Oracle(Scenario),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    L1,
    Wasserstein1,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub value: f64,
    /// Largest distance over the matched times.
    pub distance: f64,
    /// Distance at each matched time.
    pub per_time: Vec<f64>,
    /// `distance / previous distance`; `None` on the first row.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub key: String,
    pub metric: Metric,
    pub times: Vec<f64>,
    pub rows: Vec<StudyRow>,
    /// Least-squares slope of `log distance` against `log |value|`.
    pub fitted_order: Option<f64>,
    /// Set when the distances fail to decrease strictly along the list.
    pub non_monotone: bool,
}

impl ConvergenceTable {
    pub fn distances(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.distance).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!("{},distance,ratio\n", self.key);
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.12e},{}\n",
                r.value,
                r.distance,
                r.ratio.map_or(String::new(), |x| format!("{x:.6}"))
            ));
        }
        s
    }
}

/// Linear interpolation in time between recorded states. Fields blend cell
/// values; ensembles blend sorted positions, which is the displacement
/// interpolation between the two empirical measures.
pub fn state_at(states: &[(f64, State)], t: f64) -> Result<State> {
    let tol = 1e-12 * t.abs().max(1.0);
    if let Some((_, s)) = states.iter().find(|(s, _)| (s - t).abs() <= tol) {
        return Ok(s.clone());
    }
    let k = states
        .windows(2)
        .position(|w| w[0].0 < t && t < w[1].0)
        .ok_or_else(|| Error::input(format!("time {t} lies outside the recorded samples")))?;
    let ((t0, a), (t1, b)) = (&states[k], &states[k + 1]);
    let w = (t - t0) / (t1 - t0);
    match (a, b) {
        (State::Field(a), State::Field(b)) if a.same_grid(b) => Ok(State::Field(
            a.with_values(a.values.iter().zip(&b.values).map(|(x, y)| (1.0 - w) * x + w * y).collect()),
        )),
        (State::Particles(a), State::Particles(b)) if a.count() == b.count() => {
            let (xa, xb) = (a.sorted_positions()?, b.sorted_positions()?);
            let x = xa.iter().zip(&xb).map(|(x, y)| (1.0 - w) * x + w * y).collect();
            Ok(State::Particles(ParticleEnsemble::new(x, a.delta())?))
        }
        _ => Err(Error::input("cannot interpolate between states of different shape")),
    }
}

fn density(s: &State) -> Density<'_> {
    match s {
        State::Field(f) => Density::Field(f),
        State::Particles(p) => Density::Particles(p),
    }
}

/// L¹ for two fields (the first remapped onto the second's grid if they
/// differ), 1-Wasserstein otherwise.
pub fn distance(a: &State, b: &State) -> Result<(f64, Metric)> {
    match (a, b) {
        (State::Field(x), State::Field(y)) => {
            let d = if x.same_grid(y) {
                x.l1_distance(y)?
            } else {
                x.remap(y.len(), y.left, y.right)?.l1_distance(y)?
            };
            Ok((d, Metric::L1))
        }
        _ => Ok((wasserstein1d(density(a), density(b))?, Metric::Wasserstein1)),
    }
}

fn fit_order(values: &[f64], distances: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = values
        .iter()
        .zip(distances)
        .filter(|(v, d)| v.abs() > 0.0 && **d > 0.0)
        .map(|(v, d)| (v.abs().ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs `base` at every value of `key` and measures each run against the
/// reference at the base sample times and `t_end`. Runs proceed in
/// parallel. A non-monotone distance sequence is flagged, not an error.
pub fn convergence_study(base: &Scenario, key: &str, values: &[f64], reference: &Reference) -> Result<ConvergenceTable> {
    if values.len() < 3 {
        return Err(Error::config("a convergence study needs at least three values"));
    }
    let mut base = base.clone();
    base.sweep = None;
    let t_end = base.real("scenario.t_end")?;
    let mut times: Vec<f64> = base.reals("scenario.samples")?;
    times.push(t_end);
    let runs: Vec<Scenario> = values
        .iter()
        .map(|&v| {
            let mut c = base.with_param(key, v)?;
            c.id = format!("{}_{v}", base.id);
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let outcomes: Vec<Outcome> = runs.par_iter().map(|c| simulate(c).map(|s| s.outcome)).collect::<Result<_>>()?;
    let (candidates, reference_states): (&[Outcome], Vec<(f64, State)>) = match reference {
        Reference::FinestSelf => (&outcomes[..outcomes.len() - 1], outcomes[outcomes.len() - 1].states()),
        Reference::Oracle(s) => (&outcomes[..], simulate(s)?.outcome.states()),
    };
    let mut rows: Vec<StudyRow> = Vec::new();
    let mut metric = Metric::L1;
    for (o, &v) in candidates.iter().zip(values) {
        let states = o.states();
        let mut per_time = Vec::new();
        for &t in &times {
            let (d, m) = distance(&state_at(&states, t)?, &state_at(&reference_states, t)?)?;
            metric = m;
            per_time.push(d);
        }
        let d = per_time.iter().copied().fold(0.0, f64::max);
        let ratio = rows.last().map(|r| d / r.distance);
        rows.push(StudyRow { value: v, distance: d, per_time, ratio });
    }
    let distances: Vec<f64> = rows.iter().map(|r| r.distance).collect();
    let non_monotone = distances.windows(2).any(|w| !(w[1] < w[0]));
    if non_monotone {
        log::warn!("convergence study over {key}: distances {distances:?} are not strictly decreasing");
    }
    Ok(ConvergenceTable {
        key: key.to_string(),
        metric,
        times,
        fitted_order: fit_order(&values[..rows.len()], &distances),
        rows,
        non_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{BoundaryKind, GridField};
    use crate::harness::config::parse_config;

    #[test]
    fn fitted_order_of_a_power_law() {
        let v = [0.4, 0.2, 0.1];
        let d: Vec<f64> = v.iter().map(|x: &f64| 3.0 * x * x).collect();
        assert!((fit_order(&v, &d).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn interpolation_is_linear_in_time() {
        let a = GridField::new(vec![0.0, 2.0], 0.0, 1.0, BoundaryKind::NoFlux).unwrap();
        let b = a.with_values(vec![1.0, 0.0]);
        let states = vec![(0.0, State::Field(a)), (2.0, State::Field(b))];
        match state_at(&states, 0.5).unwrap() {
            State::Field(f) => assert_eq!(f.values, vec![0.25, 1.5]),
            _ => unreachable!(),
        }
        assert!(state_at(&states, 3.0).is_err());
        let p = ParticleEnsemble::new(vec![0.0, 1.0], 0.1).unwrap();
        let q = ParticleEnsemble::new(vec![2.0, 1.0], 0.1).unwrap();
        let states = vec![(0.0, State::Particles(p)), (1.0, State::Particles(q))];
        match state_at(&states, 0.5).unwrap() {
            State::Particles(e) => assert_eq!(e.positions(), &[0.5, 1.5]),
            _ => unreachable!(),
        }
    }

    #[test]
    fn grid_refinement_against_finest_self() {
        let text = "[scenario]\nid = g\ntier = pde\nt_end = 0.05\nsamples = 0.02\n\
                    [model]\ninteraction = 0\n[grid]\ncells = 50\n[pde]\nscheme = semi_implicit\ndt_max = 1e-3\n";
        let base = parse_config(text).unwrap();
        let t = convergence_study(&base, "grid.cells", &[50.0, 100.0, 200.0, 800.0], &Reference::FinestSelf).unwrap();
        assert_eq!(t.metric, Metric::L1);
        assert_eq!(t.rows.len(), 3);
        assert!(!t.non_monotone, "{:?}", t.distances());
        assert!(t.fitted_order.unwrap() < 0.0);
        assert!(convergence_study(&base, "grid.cells", &[50.0, 100.0], &Reference::FinestSelf).is_err());
    }
}
