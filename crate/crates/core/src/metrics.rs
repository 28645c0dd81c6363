//! Distances, energies and interface diagnostics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridField, GridSpec};
use crate::kernels::{Density, InteractionKernel, RobinBC};
use crate::pressure::{DoubleWell, PressureLaw};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FunctionalId {
    EF,
    EDelta,
    JEps,
    GEps,
    GEtaEps,
}

/// Evaluated functional with its term breakdown.
///
/// `alternate_total` holds an independent evaluation when the functional
/// has one; `flags` carries non-fatal observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub functional: FunctionalId,
    pub terms: BTreeMap<String, f64>,
    pub total: f64,
    pub alternate_total: Option<f64>,
    /// Term breakdown of the alternate route.
    pub alternate_terms: BTreeMap<String, f64>,
    pub flags: Vec<String>,
}

impl EnergyReport {
    pub fn from_terms(functional: FunctionalId, terms: &[(&str, f64)]) -> Self {
        let map: BTreeMap<String, f64> = terms.iter().map(|(k, v)| (k.to_string(), *v)).collect();
        let total = terms.iter().map(|(_, v)| v).sum();
        Self {
            functional,
            terms: map,
            total,
            alternate_total: None,
            alternate_terms: BTreeMap::new(),
            flags: Vec::new(),
        }
    }

    pub fn term(&self, name: &str) -> f64 {
        self.terms.get(name).copied().unwrap_or(0.0)
    }

    /// Relative gap between the two evaluation routes, if both exist.
    pub fn route_gap(&self) -> Option<f64> {
        self.alternate_total
            .map(|alt| (alt - self.total).abs() / self.total.abs().max(alt.abs()).max(1e-300))
    }

    fn scaled(mut self, functional: FunctionalId, factor: f64) -> Self {
        self.functional = functional;
        for v in self.terms.values_mut() {
            *v *= factor;
        }
        self.total *= factor;
        self.alternate_total = self.alternate_total.map(|a| a * factor);
        for v in self.alternate_terms.values_mut() {
            *v *= factor;
        }
        self
    }

    pub(crate) fn infinite(functional: FunctionalId, why: &str) -> Self {
        Self {
            functional,
            terms: BTreeMap::new(),
            total: f64::INFINITY,
            alternate_total: None,
            alternate_terms: BTreeMap::new(),
            flags: vec![why.to_string()],
        }
    }
}

/// One linear piece `s ∈ [s0, s1] ↦ q0 + (q1 − q0)(s − s0)/(s1 − s0)` of a
/// quantile function.
#[derive(Debug, Clone, Copy)]
struct QuantilePiece {
    s0: f64,
    s1: f64,
    q0: f64,
    q1: f64,
}

impl QuantilePiece {
    fn at(&self, s: f64) -> f64 {
        if self.s1 <= self.s0 {
            return self.q0;
        }
        self.q0 + (self.q1 - self.q0) * (s - self.s0) / (self.s1 - self.s0)
    }
}

fn quantile_pieces(density: Density<'_>) -> Result<(Vec<QuantilePiece>, f64)> {
    match density {
        Density::Particles(ens) => {
            let x = ens.sorted_positions()?;
            let n = x.len() as f64;
            let pieces = x
                .iter()
                .enumerate()
                .map(|(i, &q)| QuantilePiece {
                    s0: i as f64 / n,
                    s1: (i + 1) as f64 / n,
                    q0: q,
                    q1: q,
                })
                .collect();
            Ok((pieces, ens.total_mass()))
        }
        Density::Field(field) => {
            if field.min() < 0.0 {
                return Err(Error::input("Wasserstein distance needs a nonnegative field"));
            }
            let mass = field.mass();
            if !(mass > 0.0) {
                return Err(Error::input("Wasserstein distance of a zero-mass field"));
            }
            let dx = field.dx();
            let mut pieces = Vec::new();
            let mut acc = 0.0;
            for (i, &v) in field.values.iter().enumerate() {
                if v <= 0.0 {
                    continue;
                }
                let s0 = acc;
                acc += v * dx / mass;
                let a = field.left + i as f64 * dx;
                pieces.push(QuantilePiece {
                    s0,
                    s1: acc,
                    q0: a,
                    q1: a + dx,
                });
            }
            if let Some(last) = pieces.last_mut() {
                last.s1 = 1.0;
            }
            Ok((pieces, mass))
        }
    }
}

/// Exact `W₂` between two 1D measures via their quantile functions.
///
/// Inputs of unequal mass are renormalized to probability measures; the
/// returned flag records that this happened.
pub fn wasserstein1d_detailed(mu: Density<'_>, nu: Density<'_>) -> Result<(f64, bool)> {
    let (a, ma) = quantile_pieces(mu)?;
    let (b, mb) = quantile_pieces(nu)?;
    let renormalized = (ma - mb).abs() > 1e-8 * ma.max(mb);
    if renormalized {
        log::warn!("Wasserstein inputs have masses {ma} and {mb}; renormalizing");
    }
    let (mut i, mut j) = (0usize, 0usize);
    let mut s = 0.0;
    let mut total = 0.0;
    while i < a.len() && j < b.len() {
        let end = a[i].s1.min(b[j].s1);
        if end > s {
            let d0 = a[i].at(s) - b[j].at(s);
            let d1 = a[i].at(end) - b[j].at(end);
            total += (end - s) * (d0 * d0 + d0 * d1 + d1 * d1) / 3.0;
            s = end;
        }
        if a[i].s1 <= end {
            i += 1;
        }
        if b[j].s1 <= end {
            j += 1;
        }
    }
    Ok((total.max(0.0).sqrt(), renormalized))
}

pub fn wasserstein1d(mu: Density<'_>, nu: Density<'_>) -> Result<f64> {
    Ok(wasserstein1d_detailed(mu, nu)?.0)
}

fn law_sum<F: Fn(f64) -> Result<f64>>(field: &GridField, f: F) -> Result<f64> {
    let mut s = 0.0;
    for &v in &field.values {
        s += f(v)?;
    }
    Ok(s * field.dx())
}

fn exceeds_domain(field: &GridField, law: &PressureLaw) -> bool {
    field.values.iter().any(|&v| law.f(v).is_err())
}

/// `𝒥_ε[ρ] = ∫h(ρ) + ¼∬G_ε(x−y)[ρ(x)−ρ(y)]²` for piecewise constant `ρ`
/// extended by zero off the grid.
///
/// The main route uses the exact cell convolution; the alternate route
/// writes the quadratic form through `φ = G_ε ∗ ρ`, solved cell by cell.
pub fn energy_j_eps(field: &GridField, dw: &DoubleWell, kernel: &InteractionKernel, eps: f64) -> Result<EnergyReport> {
    if field.min() < 0.0 {
        return Err(Error::input("energy needs a nonnegative field"));
    }
    if exceeds_domain(field, &dw.law) {
        return Ok(EnergyReport::infinite(FunctionalId::JEps, "density outside the pressure-law domain"));
    }
    let k = kernel.with_scale(eps)?;
    let dx = field.dx();
    let well = law_sum(field, |v| dw.h(v))?;
    let phi = k.convolve_cells(&field.values, dx);
    let sq: f64 = field.values.iter().map(|v| v * v).sum::<f64>() * dx;
    let cross: f64 = field.values.iter().zip(&phi).map(|(r, p)| r * p).sum::<f64>() * dx;
    let interaction = sq / (2.0 * k.sigma) - 0.5 * cross;
    let mut report = EnergyReport::from_terms(
        FunctionalId::JEps,
        &[("double_well", well), ("interaction", interaction)],
    );
    let (mismatch, dirichlet) = quadratic_form_via_potential(&field.values, dx, &k);
    report.alternate_terms = [
        ("double_well".to_string(), well),
        ("mismatch".to_string(), mismatch),
        ("dirichlet_like".to_string(), dirichlet),
    ]
    .into_iter()
    .collect();
    report.alternate_total = Some(well + mismatch + dirichlet);
    if well > 1e-12 * (1.0 + field.mass()) {
        report.flags.push("bulk double-well energy present".into());
    }
    Ok(report)
}

/// Returns `(1/(2σ))∫(ρ − σφ)²` and `(ηε²/2)∫|φ'|²` over the whole line,
/// where `σφ − ηε²φ'' = ρ` with `ρ` piecewise constant on the cells.
///
/// In each cell `u = φ − ρ_i/σ` solves `u'' = k²u`, so `φ` is determined by
/// its face values, which follow from continuity of `φ'` and decay outside.
fn quadratic_form_via_potential(rho: &[f64], h: f64, kernel: &InteractionKernel) -> (f64, f64) {
    let n = rho.len();
    let sigma = kernel.sigma;
    let k = kernel.decay_rate();
    let d = kernel.eta * kernel.scale_eps * kernel.scale_eps;
    let x = k * h;
    let p: Vec<f64> = rho.iter().map(|r| r / sigma).collect();
    // rows multiplied through by sinh(kh); cosh(kh) − 1 = 2 sinh²(kh/2)
    let cm1 = 2.0 * (0.5 * x).sinh().powi(2);
    let ch = 1.0 + cm1;
    let m = n + 1;
    let lower = vec![-1.0; m];
    let upper = vec![-1.0; m];
    let mut diag = vec![2.0 * ch; m];
    let mut rhs = vec![0.0; m];
    diag[0] = x.exp();
    diag[n] = x.exp();
    rhs[0] = p[0] * cm1;
    rhs[n] = p[n - 1] * cm1;
    for j in 1..n {
        rhs[j] = (p[j - 1] + p[j]) * cm1;
    }
    let faces = crate::numerics::solve_tridiagonal(&lower, &diag, &upper, &rhs)
        .expect("diagonally dominant face system");

    let (coth, csch) = if x > 1e-3 {
        let e2 = (-2.0 * x).exp();
        ((1.0 + e2) / (1.0 - e2), 2.0 * (-x).exp() / (1.0 - e2))
    } else {
        (0.0, 0.0)
    };
    let gl = crate::numerics::GaussLegendre::new(10);
    let mut u2 = 0.0;
    let mut du2 = 0.0;
    for i in 0..n {
        let alpha = faces[i] - p[i];
        let beta = faces[i + 1] - p[i];
        if x > 0.5 {
            let int_u2 = (alpha * alpha + beta * beta) * (coth - x * csch * csch) / (2.0 * k)
                + alpha * beta * csch * (h * coth - 1.0 / k);
            let du0 = k * (-alpha * coth + beta * csch);
            let du1 = k * (-alpha * csch + beta * coth);
            u2 += int_u2;
            du2 += beta * du1 - alpha * du0 - k * k * int_u2;
        } else {
            let s = x.sinh();
            let u = |t: f64| (alpha * (k * (h - t)).sinh() + beta * (k * t).sinh()) / s;
            let du = |t: f64| k * (-alpha * (k * (h - t)).cosh() + beta * (k * t).cosh()) / s;
            u2 += gl.integrate(0.0, h, |t| u(t).powi(2));
            du2 += gl.integrate(0.0, h, |t| du(t).powi(2));
        }
    }
    // exterior tails φ = F e^{−k·dist}
    let ext = faces[0] * faces[0] + faces[n] * faces[n];
    let mismatch = 0.5 * sigma * (u2 + ext / (2.0 * k));
    let dirichlet = 0.5 * d * (du2 + k * ext / 2.0);
    (mismatch, dirichlet)
}

/// `𝒢_ε = ε⁻¹𝒥_ε`.
pub fn energy_g_eps(field: &GridField, dw: &DoubleWell, kernel: &InteractionKernel, eps: f64) -> Result<EnergyReport> {
    Ok(energy_j_eps(field, dw, kernel, eps)?.scaled(FunctionalId::GEps, 1.0 / eps))
}

/// Boundary-weighted energy on a bounded interval:
/// `ε⁻¹∫[f_∞(ρ) + ½φ(1−ρ)] + (½ − η)ε⁻¹∫ρτ` with `φ = G_ε ∗ ρ` (ρ extended
/// by zero) and `τ = G_ε ∗ χ_{outside}`.
pub fn energy_g_eta_eps(
    field: &GridField,
    dw: &DoubleWell,
    kernel: &InteractionKernel,
    eps: f64,
    eta_w: f64,
) -> Result<EnergyReport> {
    if dw.law != PressureLaw::HardSphere {
        return Err(Error::input("boundary-weighted energy is defined for the hard-sphere law"));
    }
    if field.min() < 0.0 {
        return Err(Error::input("energy needs a nonnegative field"));
    }
    if field.max() > 1.0 + 1e-12 {
        return Ok(EnergyReport::infinite(FunctionalId::GEtaEps, "density above 1"));
    }
    let k = kernel.with_scale(eps)?;
    let dx = field.dx();
    let phi = k.convolve_cells(&field.values, dx);
    let tau = k.outside_potential(&GridSpec::of(field));
    let bulk: f64 = field
        .values
        .iter()
        .zip(&phi)
        .map(|(r, p)| 0.5 * p * (1.0 - r))
        .sum::<f64>()
        * dx
        / eps;
    let layer: f64 = field.values.iter().zip(&tau).map(|(r, t)| r * t).sum::<f64>() * dx / eps;
    let boundary = (0.5 - eta_w) * layer;
    let mut report = EnergyReport::from_terms(FunctionalId::GEtaEps, &[("bulk", bulk), ("boundary", boundary)]);
    if !(0.0..=0.5).contains(&eta_w) {
        log::warn!("boundary weight {eta_w} outside [0, 1/2]");
        report.flags.push(format!("boundary weight {eta_w} outside [0, 1/2]"));
    }
    Ok(report)
}

/// Sharp-interface limit `γθ · (number of interfaces)` of `𝒢_ε`.
pub fn sharp_interface_energy(dw: &DoubleWell, interfaces: usize) -> Result<f64> {
    Ok(dw.surface_tension()? * dw.theta * interfaces as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ContactSpec {
    Robin(RobinBC),
    Eta(f64),
}

/// Contact angle `α ∈ [0, π]`: `cos α = −min(1, 2a/(a + √σ b))` for Robin
/// data, `cos α = 2η − 1` for the boundary weight form.
pub fn contact_angle(spec: ContactSpec, sigma: f64) -> Result<f64> {
    let cos = match spec {
        ContactSpec::Robin(bc) => {
            RobinBC::new(bc.a, bc.b)?;
            -(2.0 * bc.a / (bc.a + sigma.sqrt() * bc.b)).min(1.0)
        }
        ContactSpec::Eta(eta) => (2.0 * eta - 1.0).clamp(-1.0, 1.0),
    };
    Ok(cos.acos())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterfaceDiagnostics {
    /// Measure of `{0.1θ < ρ < 0.9θ}` for the piecewise-linear interpolant
    /// through cell centers.
    pub width: f64,
    /// `θ/2` level crossings.
    pub positions: Vec<f64>,
    /// Mean of the cells at or above `0.9θ`.
    pub plateau_value: Option<f64>,
    pub perimeter_count: usize,
}

pub fn interface_diagnostics(field: &GridField, dw: &DoubleWell) -> InterfaceDiagnostics {
    let theta = dw.theta;
    let (lo, hi, mid) = (0.1 * theta, 0.9 * theta, 0.5 * theta);
    let dx = field.dx();
    let v = &field.values;
    let mut width = 0.0;
    let mut positions = Vec::new();
    for i in 0..v.len().saturating_sub(1) {
        let (a, b) = (v[i], v[i + 1]);
        width += dx * band_fraction(a, b, lo, hi);
        if (a - mid) * (b - mid) < 0.0 {
            let t = (mid - a) / (b - a);
            positions.push(field.center(i) + t * dx);
        }
    }
    let bulk: Vec<f64> = v.iter().copied().filter(|&x| x >= hi).collect();
    let plateau_value = if bulk.is_empty() {
        None
    } else {
        Some(bulk.iter().sum::<f64>() / bulk.len() as f64)
    };
    InterfaceDiagnostics {
        width,
        perimeter_count: positions.len(),
        positions,
        plateau_value,
    }
}

/// Fraction of `t ∈ [0, 1]` with `lo < a + (b − a)t < hi`.
fn band_fraction(a: f64, b: f64, lo: f64, hi: f64) -> f64 {
    if a == b {
        return if a > lo && a < hi { 1.0 } else { 0.0 };
    }
    let t_lo = (lo - a) / (b - a);
    let t_hi = (hi - a) / (b - a);
    let (t0, t1) = if t_lo < t_hi { (t_lo, t_hi) } else { (t_hi, t_lo) };
    (t1.min(1.0) - t0.max(0.0)).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissipationResult {
    pub pass: bool,
    /// Largest single-step increase (≤ 0 when the series never rises).
    pub worst_increase: f64,
    /// Index of the step `k → k+1` with the largest increase.
    pub worst_index: usize,
}

/// Checks `E_{k+1} ≤ E_k + tol` for every step.
pub fn dissipation_check(series: &[f64], tolerance_per_step: f64) -> Result<DissipationResult> {
    if series.len() < 2 {
        return Err(Error::input("dissipation check needs at least two samples"));
    }
    let mut worst = f64::NEG_INFINITY;
    let mut idx = 0;
    for (k, w) in series.windows(2).enumerate() {
        let inc = w[1] - w[0];
        if inc > worst {
            worst = inc;
            idx = k;
        }
    }
    Ok(DissipationResult {
        pass: worst <= tolerance_per_step,
        worst_increase: worst,
        worst_index: idx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::ParticleEnsemble;
    use crate::grid::BoundaryKind;

    #[test]
    fn wasserstein_point_masses_and_translation() {
        let a = ParticleEnsemble::new(vec![0.0], 0.1).unwrap();
        let b = ParticleEnsemble::new(vec![1.0], 0.1).unwrap();
        let d = wasserstein1d(Density::Particles(&a), Density::Particles(&b)).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        let u0 = GridField::indicator(40, -1.0, 3.0, BoundaryKind::NoFlux, 0.0, 1.0, 1.0).unwrap();
        let u1 = GridField::indicator(40, -1.0, 3.0, BoundaryKind::NoFlux, 1.0, 2.0, 1.0).unwrap();
        let d = wasserstein1d(Density::Field(&u0), Density::Field(&u1)).unwrap();
        assert!((d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wasserstein_three_points_matches_enumeration() {
        let xs = [0.3, -1.2, 2.0];
        let ys = [0.9, 0.1, -0.4];
        let a = ParticleEnsemble::new(xs.to_vec(), 0.1).unwrap();
        let b = ParticleEnsemble::new(ys.to_vec(), 0.1).unwrap();
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let best = perms
            .iter()
            .map(|p| (0..3).map(|i| (xs[i] - ys[p[i]]).powi(2)).sum::<f64>() / 3.0)
            .fold(f64::INFINITY, f64::min)
            .sqrt();
        let d = wasserstein1d(Density::Particles(&a), Density::Particles(&b)).unwrap();
        assert!((d - best).abs() < 1e-14);
    }

    #[test]
    fn wasserstein_field_vs_particles() {
        // uniform on [0,1] against its own midpoint quantiles: W₂² = 1/(12N²)
        let u = GridField::indicator(10, 0.0, 1.0, BoundaryKind::NoFlux, 0.0, 1.0, 1.0).unwrap();
        let e = ParticleEnsemble::from_density_quantiles(&u, 5, 0.01).unwrap();
        let d = wasserstein1d(Density::Field(&u), Density::Particles(&e)).unwrap();
        assert!((d - (1.0f64 / 300.0).sqrt()).abs() < 1e-14);
    }

    fn hs() -> DoubleWell {
        DoubleWell::new(PressureLaw::HardSphere, 1.0).unwrap()
    }

    #[test]
    fn dual_routes_agree() {
        let k = InteractionKernel::free(1.3, 0.7).unwrap();
        let dw = DoubleWell::new(PressureLaw::PowerLaw { m: 3.0 }, 1.3).unwrap();
        for (eps, n) in [(1.0, 50), (0.05, 400), (0.01, 100), (0.3, 2000)] {
            let f = GridField::from_fn(n, -1.0, 1.0, BoundaryKind::NoFlux, |x| {
                (1.0 + (5.0 * x).sin()).max(0.0) * 0.4
            })
            .unwrap();
            let r = energy_j_eps(&f, &dw, &k, eps).unwrap();
            assert!(r.route_gap().unwrap() < 1e-10, "{eps} {n}: {:?}", r);
        }
    }

    #[test]
    fn sharp_step_has_no_well_energy() {
        let dw = DoubleWell::new(PressureLaw::PowerLaw { m: 3.0 }, 1.0).unwrap();
        let k = InteractionKernel::free(1.0, 1.0).unwrap();
        let f = GridField::indicator(300, -1.0, 2.0, BoundaryKind::NoFlux, 0.0, 1.0, dw.theta).unwrap();
        let r = energy_j_eps(&f, &dw, &k, 0.05).unwrap();
        assert!(r.term("double_well").abs() < 1e-15);
    }

    #[test]
    fn hard_sphere_g_eps_near_limit() {
        let k = InteractionKernel::free(1.0, 1.0).unwrap();
        let f = GridField::indicator(20000, -0.5, 1.5, BoundaryKind::NoFlux, 0.0, 1.0, 1.0).unwrap();
        let r = energy_g_eps(&f, &hs(), &k, 0.01).unwrap();
        assert!((r.total - 0.5).abs() < 0.01, "{}", r.total);
        let over = f.with_values(f.values.iter().map(|v| v * 1.01).collect());
        assert!(energy_g_eps(&over, &hs(), &k, 0.01).unwrap().total.is_infinite());
    }

    #[test]
    fn eta_energy_weights() {
        let k = InteractionKernel::free(1.0, 1.0).unwrap();
        let f = GridField::indicator(10000, 0.0, 1.0, BoundaryKind::NoFlux, 0.0, 0.3, 1.0).unwrap();
        for (eta, target) in [(0.5, 0.25), (0.25, 0.375), (0.0, 0.5)] {
            let r = energy_g_eta_eps(&f, &hs(), &k, 0.01, eta).unwrap();
            assert!((r.total / target - 1.0).abs() < 0.05, "{eta}: {}", r.total);
        }
        let z = f.with_values(vec![0.0; 10000]);
        assert_eq!(energy_g_eta_eps(&z, &hs(), &k, 0.01, 0.0).unwrap().total, 0.0);
    }

    #[test]
    fn contact_angles() {
        use std::f64::consts::PI;
        let a = contact_angle(ContactSpec::Robin(RobinBC { a: 0.0, b: 1.0 }), 1.0).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-15);
        let a = contact_angle(ContactSpec::Robin(RobinBC { a: 1.0, b: 0.0 }), 1.0).unwrap();
        assert!((a - PI).abs() < 1e-15);
        let a = contact_angle(ContactSpec::Eta(0.5), 1.0).unwrap();
        assert!((a - PI / 2.0).abs() < 1e-15);
        for eta in [0.0, 0.1, 0.25, 0.4, 0.5] {
            let a = contact_angle(ContactSpec::Eta(eta), 1.0).unwrap();
            assert!((a.cos() - (2.0 * eta - 1.0)).abs() < 1e-15);
        }
    }

    #[test]
    fn interface_of_exact_step() {
        let dw = DoubleWell::new(PressureLaw::PowerLaw { m: 3.0 }, 1.0).unwrap();
        let f = GridField::indicator(300, -1.5, 1.5, BoundaryKind::NoFlux, -1.0, 1.0, dw.theta).unwrap();
        let d = interface_diagnostics(&f, &dw);
        assert_eq!(d.perimeter_count, 2);
        assert!((d.positions[0] + 1.0).abs() < 1e-12 && (d.positions[1] - 1.0).abs() < 1e-12);
        assert!(d.width <= 2.0 * f.dx() + 1e-12);
        assert_eq!(d.plateau_value, Some(dw.theta));
        let low = GridField::from_fn(100, -1.0, 1.0, BoundaryKind::NoFlux, |x| 0.3 * (-x * x).exp()).unwrap();
        assert_eq!(interface_diagnostics(&low, &dw).plateau_value, None);
    }

    #[test]
    fn dissipation() {
        assert!(dissipation_check(&[3.0, 2.0, 1.0], 0.0).unwrap().pass);
        let r = dissipation_check(&[3.0, 2.0, 2.2, 1.0], 0.1).unwrap();
        assert!(!r.pass);
        assert_eq!(r.worst_index, 1);
        assert!(dissipation_check(&[1.0], 0.1).is_err());
    }
}
