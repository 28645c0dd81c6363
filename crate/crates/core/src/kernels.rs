//! Interaction kernel `σG − ηG'' = δ₀`, mollifiers, the regularized kernel
//! `G̃_δ = K_δ ∗ G ∗ K_δ` and the bounded-interval potential solver.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::ensemble::ParticleEnsemble;
use crate::error::{Error, Result};
use crate::grid::{BoundaryKind, GridField, GridSpec};
use crate::numerics::{solve_tridiagonal, GaussLegendre, HermiteTable};

/// Relative size of the neglected exponential tail.
pub const TRUNCATION_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum KernelDomain {
    FreeSpace1D,
    BoundedInterval { left: f64, right: f64 },
}

/// Green function of `σG − ηΔG = δ₀` in 1D, optionally rescaled to
/// `G_ε(x) = ε⁻¹G(x/ε)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractionKernel {
    pub sigma: f64,
    pub eta: f64,
    pub domain: KernelDomain,
    pub scale_eps: f64,
}

impl InteractionKernel {
    pub fn new(sigma: f64, eta: f64, domain: KernelDomain, scale_eps: f64) -> Result<Self> {
        for (name, v) in [("sigma", sigma), ("eta", eta), ("scale_eps", scale_eps)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::input(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if let KernelDomain::BoundedInterval { left, right } = domain {
            if !(right > left) || !left.is_finite() || !right.is_finite() {
                return Err(Error::input(format!("invalid kernel interval [{left}, {right}]")));
            }
        }
        Ok(Self {
            sigma,
            eta,
            domain,
            scale_eps,
        })
    }

    /// Unscaled free-space kernel.
    pub fn free(sigma: f64, eta: f64) -> Result<Self> {
        Self::new(sigma, eta, KernelDomain::FreeSpace1D, 1.0)
    }

    pub fn with_scale(&self, eps: f64) -> Result<Self> {
        Self::new(self.sigma, self.eta, self.domain, eps)
    }

    pub fn with_domain(&self, domain: KernelDomain) -> Result<Self> {
        Self::new(self.sigma, self.eta, domain, self.scale_eps)
    }

    /// Decay rate `κ` of `G_ε(x) = A e^{−κ|x|}`.
    pub fn decay_rate(&self) -> f64 {
        (self.sigma / self.eta).sqrt() / self.scale_eps
    }

    /// Peak value `A = G_ε(0)`.
    pub fn amplitude(&self) -> f64 {
        1.0 / (2.0 * (self.sigma * self.eta).sqrt() * self.scale_eps)
    }

    /// `G_ε(x)` without domain checks.
    pub fn value(&self, x: f64) -> f64 {
        self.amplitude() * (-self.decay_rate() * x.abs()).exp()
    }

    /// `G_ε'(x)`, taken as 0 at the kink.
    pub fn derivative(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        -self.decay_rate() * x.signum() * self.value(x)
    }

    /// Half-width `L` beyond which `G_ε < tol · G_ε(0)`.
    pub fn truncation_radius(&self, tol: f64) -> f64 {
        (1.0 / tol).ln() / self.decay_rate()
    }

    /// Closed-form second moment `∫ z² G_ε dz`.
    pub fn second_moment_exact(&self) -> f64 {
        4.0 * self.amplitude() / self.decay_rate().powi(3)
    }

    /// `(x, G_ε(x))` samples on `[−L, L]` for plotting.
    pub fn tabulate(&self, points: usize) -> Vec<(f64, f64)> {
        let l = self.truncation_radius(TRUNCATION_TOL);
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let x = -l + 2.0 * l * i as f64 / (n - 1) as f64;
                (x, self.value(x))
            })
            .collect()
    }

    /// Cell averages of `G_ε ∗ ρ` for piecewise constant `ρ` extended by zero
    /// outside the listed cells. Exact up to rounding, `O(N)`.
    pub fn convolve_cells(&self, values: &[f64], dx: f64) -> Vec<f64> {
        let n = values.len();
        let w = CellWeights::new(self, dx);
        let mut out = vec![0.0; n];
        let mut acc = 0.0;
        for i in 0..n {
            out[i] = w.w0 * values[i] + w.a * acc;
            acc = w.q * acc + values[i];
        }
        acc = 0.0;
        for i in (0..n).rev() {
            out[i] += w.a * acc;
            acc = w.q * acc + values[i];
        }
        for o in &mut out {
            *o /= dx;
        }
        out
    }

    /// Cell averages of `G_ε ∗ χ_{ℝ∖[left,right]}` on the grid.
    pub fn outside_potential(&self, grid: &GridSpec) -> Vec<f64> {
        let k = self.decay_rate();
        let dx = grid.dx();
        let avg = -(-k * dx).exp_m1() / (k * dx);
        let c = 1.0 / (2.0 * self.sigma);
        (0..grid.cells)
            .map(|i| {
                let a = i as f64 * dx;
                let b = (grid.cells - 1 - i) as f64 * dx;
                c * avg * ((-k * a).exp() + (-k * b).exp())
            })
            .collect()
    }
}

/// Double cell integrals of `G_ε`: `W_0` for a cell with itself and
/// `a q^{|k|−1}` for cells `k ≠ 0` apart.
struct CellWeights {
    w0: f64,
    a: f64,
    q: f64,
}

impl CellWeights {
    fn new(kernel: &InteractionKernel, dx: f64) -> Self {
        let c = kernel.amplitude();
        let k = kernel.decay_rate();
        let x = k * dx;
        let one_minus_q = -(-x).exp_m1();
        // x − (1 − e^{−x}) loses everything to cancellation for small x
        let core = if x < 1e-3 {
            x * x / 2.0 - x.powi(3) / 6.0 + x.powi(4) / 24.0 - x.powi(5) / 120.0
        } else {
            x - one_minus_q
        };
        Self {
            w0: 2.0 * c * core / (k * k),
            a: c * one_minus_q * one_minus_q / (k * k),
            q: (-x).exp(),
        }
    }
}

/// Evaluates the free-space kernel `G_ε(x)`.
pub fn green_eval(kernel: &InteractionKernel, x: f64) -> Result<f64> {
    if kernel.domain != KernelDomain::FreeSpace1D {
        return Err(Error::input("green_eval needs a free-space kernel"));
    }
    if !x.is_finite() {
        return Err(Error::input(format!("kernel argument must be finite, got {x}")));
    }
    Ok(kernel.value(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MollifierShape {
    IndicatorBall,
    SmoothBump,
}

/// Unit-mass mollifier supported on `[−δ, δ]`.
///
/// `SmoothBump` is `(15/16δ)(1 − (x/δ)²)²`; `IndicatorBall` is `1/(2δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mollifier {
    pub delta: f64,
    pub shape: MollifierShape,
    pub normalization: f64,
}

impl Mollifier {
    pub fn new(delta: f64, shape: MollifierShape) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::input(format!("mollifier radius must be positive, got {delta}")));
        }
        let normalization = match shape {
            MollifierShape::IndicatorBall => 0.5 / delta,
            MollifierShape::SmoothBump => 15.0 / (16.0 * delta),
        };
        Ok(Self {
            delta,
            shape,
            normalization,
        })
    }

    pub fn bump(delta: f64) -> Result<Self> {
        Self::new(delta, MollifierShape::SmoothBump)
    }

    pub fn indicator(delta: f64) -> Result<Self> {
        Self::new(delta, MollifierShape::IndicatorBall)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let u = x / self.delta;
        if u.abs() > 1.0 {
            return 0.0;
        }
        match self.shape {
            MollifierShape::IndicatorBall => self.normalization,
            MollifierShape::SmoothBump => {
                let s = 1.0 - u * u;
                self.normalization * s * s
            }
        }
    }

    /// `K_δ'(x)`; zero for the indicator away from its jumps.
    pub fn derivative(&self, x: f64) -> f64 {
        let u = x / self.delta;
        if u.abs() >= 1.0 {
            return 0.0;
        }
        match self.shape {
            MollifierShape::IndicatorBall => 0.0,
            MollifierShape::SmoothBump => {
                -4.0 * self.normalization * u * (1.0 - u * u) / self.delta
            }
        }
    }

    /// `∫_{−∞}^x K_δ`.
    pub fn cdf(&self, x: f64) -> f64 {
        let u = x / self.delta;
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return 1.0;
        }
        match self.shape {
            MollifierShape::IndicatorBall => 0.5 * (u + 1.0),
            MollifierShape::SmoothBump => {
                0.5 + 15.0 / 16.0 * (u - 2.0 * u.powi(3) / 3.0 + u.powi(5) / 5.0)
            }
        }
    }

    /// `∫_{−∞}^x cdf`, equal to `x` for `x ≥ δ`.
    pub fn cdf_integral(&self, x: f64) -> f64 {
        let u = x / self.delta;
        if u <= -1.0 {
            return 0.0;
        }
        if u >= 1.0 {
            return x;
        }
        let d = self.delta;
        match self.shape {
            MollifierShape::IndicatorBall => d * (u + 1.0) * (u + 1.0) / 4.0,
            MollifierShape::SmoothBump => {
                let u2 = u * u;
                d * (0.5 * (u + 1.0)
                    + 15.0 / 16.0
                        * (u2 / 2.0 - u2 * u2 / 6.0 + u2 * u2 * u2 / 30.0 - 11.0 / 30.0))
            }
        }
    }

    /// Autocorrelation `(K_δ ∗ K_δ)(z)`, supported on `[−2δ, 2δ]`.
    pub fn autocorrelation(&self, z: f64) -> f64 {
        let d = self.delta;
        let lo = (z - d).max(-d);
        let hi = (z + d).min(d);
        if hi <= lo {
            return 0.0;
        }
        match self.shape {
            MollifierShape::IndicatorBall => self.normalization * self.normalization * (hi - lo),
            // integrand is a degree-8 polynomial, so 5 nodes are exact
            MollifierShape::SmoothBump => {
                gauss8().integrate(lo, hi, |y| self.eval(y) * self.eval(z - y))
            }
        }
    }

    /// Cell averages of `K_δ ∗ χ_{cell}` over a cell `s = k·dx` away, i.e.
    /// `(1/dx)∬ K_δ(x − y)` over two cells of width `dx`.
    fn cell_pair_weight(&self, s: f64, dx: f64) -> f64 {
        (self.cdf_integral(s + dx) - 2.0 * self.cdf_integral(s) + self.cdf_integral(s - dx)) / dx
    }
}

fn gauss8() -> &'static GaussLegendre {
    use std::sync::OnceLock;
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(8))
}

fn gauss20() -> &'static GaussLegendre {
    use std::sync::OnceLock;
    static GL: OnceLock<GaussLegendre> = OnceLock::new();
    GL.get_or_init(|| GaussLegendre::new(20))
}

/// Robin data for `aφ + εb ∇φ·n = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RobinBC {
    pub a: f64,
    pub b: f64,
}

impl RobinBC {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let bc = Self { a, b };
        bc.validate()?;
        Ok(bc)
    }

    pub fn neumann() -> Self {
        Self { a: 0.0, b: 1.0 }
    }

    pub fn dirichlet() -> Self {
        Self { a: 1.0, b: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a >= 0.0) || !(self.b >= 0.0) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::BoundaryCondition(format!(
                "Robin coefficients must be nonnegative, got a={}, b={}",
                self.a, self.b
            )));
        }
        if self.a + self.b <= 0.0 {
            return Err(Error::BoundaryCondition("Robin coefficients a = b = 0".into()));
        }
        Ok(())
    }
}

/// Density input for [`mollify`].
#[derive(Debug, Clone, Copy)]
pub enum Density<'a> {
    Field(&'a GridField),
    Particles(&'a ParticleEnsemble),
}

/// Cell averages of `K_δ ∗ ρ` on `target`.
///
/// On `NoFlux` grids the mollifier tail that would leave the interval is
/// reflected back, so mass and constants are preserved. Grid inputs must
/// live on `target` itself.
pub fn mollify(density: Density<'_>, mollifier: &Mollifier, target: &GridSpec) -> Result<GridField> {
    let dx = target.dx();
    let reflect = target.bc == BoundaryKind::NoFlux;
    if reflect && mollifier.delta > target.right - target.left {
        return Err(Error::config("mollifier wider than the reflecting domain"));
    }
    match density {
        Density::Particles(ens) => {
            if ens.count() == 0 {
                return Err(Error::input("cannot mollify an empty ensemble"));
            }
            if ens.dim() != 1 {
                return Err(Error::input("grid mollification needs a 1D ensemble"));
            }
            if dx > mollifier.delta / 4.0 {
                return Err(Error::config(format!(
                    "grid spacing {dx} coarser than δ/4 = {}",
                    mollifier.delta / 4.0
                )));
            }
            let mut out = target.zeros();
            let w = ens.weight();
            let mut deposit = |x: f64| {
                let lo = x - mollifier.delta;
                let hi = x + mollifier.delta;
                let i0 = (((lo - target.left) / dx).floor().max(0.0)) as usize;
                let i1 = ((((hi - target.left) / dx).ceil()).max(0.0) as usize).min(target.cells);
                for i in i0..i1 {
                    let a = target.left + i as f64 * dx;
                    out.values[i] += w * (mollifier.cdf(a + dx - x) - mollifier.cdf(a - x)) / dx;
                }
            };
            for &x in ens.positions() {
                deposit(x);
                if reflect {
                    if x - mollifier.delta < target.left {
                        deposit(2.0 * target.left - x);
                    }
                    if x + mollifier.delta > target.right {
                        deposit(2.0 * target.right - x);
                    }
                }
            }
            Ok(out)
        }
        Density::Field(field) => {
            if !field.same_grid(&target.zeros()) {
                return Err(Error::input("field mollification requires the target grid to match"));
            }
            let n = field.len() as isize;
            let r = (mollifier.delta / dx).ceil() as isize + 1;
            let weights: Vec<f64> = (-r..=r)
                .map(|k| mollifier.cell_pair_weight(k as f64 * dx, dx))
                .collect();
            let fetch = |j: isize| -> f64 {
                if (0..n).contains(&j) {
                    field.values[j as usize]
                } else if !reflect {
                    0.0
                } else if j < 0 {
                    let m = -1 - j;
                    if m < n {
                        field.values[m as usize]
                    } else {
                        0.0
                    }
                } else {
                    let m = 2 * n - 1 - j;
                    if m >= 0 {
                        field.values[m as usize]
                    } else {
                        0.0
                    }
                }
            };
            let values = (0..n)
                .map(|i| {
                    (-r..=r)
                        .map(|k| weights[(k + r) as usize] * fetch(i - k))
                        .sum::<f64>()
                })
                .collect();
            Ok(field.with_values(values))
        }
    }
}

/// `K_δ ∗ ρ_N` evaluated pointwise.
pub fn mollified_point(ens: &ParticleEnsemble, mollifier: &Mollifier, x: f64) -> f64 {
    ens.weight()
        * ens
            .positions()
            .iter()
            .map(|&p| mollifier.eval(x - p))
            .sum::<f64>()
}

/// Tabulated `G̃_δ = K_δ ∗ G_ε ∗ K_δ` and its derivative.
///
/// Inside `|x| < 2δ` both are cubic Hermite tables; the slopes of the
/// derivative table come from `σG̃ − ηε²G̃'' = K_δ ∗ K_δ`. Beyond `2δ` the
/// kernel is a pure exponential and is evaluated in closed form.
#[derive(Debug, Clone)]
pub struct RegularizedKernel {
    kernel: InteractionKernel,
    mollifier: Mollifier,
    value: HermiteTable,
    grad: HermiteTable,
    tail: f64,
}

impl RegularizedKernel {
    pub fn kernel(&self) -> &InteractionKernel {
        &self.kernel
    }

    pub fn mollifier(&self) -> &Mollifier {
        &self.mollifier
    }

    pub fn spacing(&self) -> f64 {
        self.value.spacing()
    }

    fn support(&self) -> f64 {
        2.0 * self.mollifier.delta
    }

    pub fn eval(&self, x: f64) -> f64 {
        let ax = x.abs();
        let s = self.support();
        if ax >= s {
            self.kernel.amplitude() * self.tail * (-self.kernel.decay_rate() * (ax - s)).exp()
        } else {
            self.value.eval_even(ax)
        }
    }

    pub fn grad(&self, x: f64) -> f64 {
        let ax = x.abs();
        let s = self.support();
        let g = if ax >= s {
            -self.kernel.decay_rate() * self.eval(ax)
        } else {
            self.grad.eval_odd(ax)
        };
        if x < 0.0 {
            -g
        } else {
            g
        }
    }

    /// `∫ G̃_δ`: exact integral of the Hermite interpolant plus the closed-form tail.
    pub fn integral(&self) -> f64 {
        let h = self.value.spacing();
        let v = self.value.node_values();
        let d = self.grad.node_values();
        let inner: f64 = (0..v.len() - 1)
            .map(|k| h * (v[k] + v[k + 1]) / 2.0 + h * h * (d[k] - d[k + 1]) / 12.0)
            .sum();
        let tail = self.kernel.amplitude() * self.tail / self.kernel.decay_rate();
        2.0 * (inner + tail)
    }

    /// `(x, G̃_δ(x))` samples on `[−x_max, x_max]`.
    pub fn tabulate(&self, x_max: f64, points: usize) -> Vec<(f64, f64)> {
        let n = points.max(2);
        (0..n)
            .map(|i| {
                let x = -x_max + 2.0 * x_max * i as f64 / (n - 1) as f64;
                (x, self.eval(x))
            })
            .collect()
    }
}

/// Default table spacing as a fraction of `δ`.
pub const DEFAULT_TABLE_REFINE: f64 = 64.0;

/// Builds `G̃_δ` with table spacing `δ/64`.
pub fn regularized_kernel(kernel: &InteractionKernel, mollifier: &Mollifier) -> Result<RegularizedKernel> {
    regularized_kernel_with_spacing(kernel, mollifier, mollifier.delta / DEFAULT_TABLE_REFINE)
}

pub fn regularized_kernel_with_spacing(
    kernel: &InteractionKernel,
    mollifier: &Mollifier,
    spacing: f64,
) -> Result<RegularizedKernel> {
    if kernel.domain != KernelDomain::FreeSpace1D {
        return Err(Error::input("regularized kernel needs a free-space kernel"));
    }
    let delta = mollifier.delta;
    if !(spacing > 0.0) || spacing > delta / 8.0 {
        return Err(Error::config(format!(
            "regularized kernel table spacing {spacing} coarser than δ/8 = {}",
            delta / 8.0
        )));
    }
    let s = 2.0 * delta;
    let n = (s / spacing).ceil() as usize;
    let h = s / n as f64;
    let c = kernel.amplitude();
    let k = kernel.decay_rate();
    let gl = gauss20();
    let l = |z: f64| mollifier.autocorrelation(z);
    // four panels per piece keeps e^{κz} well resolved for small ε
    let integrate = |a: f64, b: f64, f: &dyn Fn(f64) -> f64| {
        if b > a {
            gl.integrate_panels(a, b, 4, f)
        } else {
            0.0
        }
    };
    let both = |x: f64| -> (f64, f64) {
        let left_v = |z: f64| (-k * (x - z)).exp() * l(z);
        let right_v = |z: f64| (-k * (z - x)).exp() * l(z);
        // pieces: [−2δ, min(0,x)], [0, x], [x, 2δ] with x ≥ 0
        let lower = integrate(-s, 0.0, &left_v) + integrate(0.0, x, &left_v);
        let upper = integrate(x, s, &right_v);
        (c * (lower + upper), c * k * (upper - lower))
    };
    let mut values = Vec::with_capacity(n + 1);
    let mut grads = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let (v, g) = both(i as f64 * h);
        values.push(v);
        grads.push(g);
    }
    grads[0] = 0.0;
    let eta_eps2 = kernel.eta * kernel.scale_eps * kernel.scale_eps;
    let second: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(i, v)| (kernel.sigma * v - l(i as f64 * h)) / eta_eps2)
        .collect();
    // G̃(x) = c e^{−κ(x−2δ)} ∫ e^{κ(z−2δ)} L(z) dz for x ≥ 2δ
    let tail = integrate(-s, 0.0, &|z: f64| (k * (z - s)).exp() * l(z))
        + integrate(0.0, s, &|z: f64| (k * (z - s)).exp() * l(z));
    Ok(RegularizedKernel {
        kernel: *kernel,
        mollifier: *mollifier,
        value: HermiteTable::new(h, values, grads.clone()),
        grad: HermiteTable::new(h, grads, second),
        tail,
    })
}

fn check_bounded(kernel: &InteractionKernel, grid: &GridSpec) -> Result<()> {
    match kernel.domain {
        KernelDomain::BoundedInterval { left, right } => {
            let tol = 1e-12 * (1.0 + left.abs().max(right.abs()));
            if (left - grid.left).abs() > tol || (right - grid.right).abs() > tol {
                return Err(Error::input(format!(
                    "grid [{}, {}] does not match kernel interval [{left}, {right}]",
                    grid.left, grid.right
                )));
            }
            Ok(())
        }
        KernelDomain::FreeSpace1D => Err(Error::input("bounded solve needs a bounded-interval kernel")),
    }
}

/// Assembles `σφ − ηε²φ'' = ρ` with ghost cells enforcing
/// `aφ + εb∇φ·n = g` on both faces.
fn robin_system(
    n: usize,
    dx: f64,
    kernel: &InteractionKernel,
    eps: f64,
    bc: &RobinBC,
) -> (Vec<f64>, Vec<f64>, Vec<f64>, f64, f64) {
    let d = kernel.eta * eps * eps / (dx * dx);
    let mut lower = vec![-d; n];
    let mut diag = vec![kernel.sigma + 2.0 * d; n];
    let mut upper = vec![-d; n];
    lower[0] = 0.0;
    upper[n - 1] = 0.0;
    // φ_ghost = (g − φ_edge (a/2 − εb/dx)) / (a/2 + εb/dx)
    let p = 0.5 * bc.a - eps * bc.b / dx;
    let q = 0.5 * bc.a + eps * bc.b / dx;
    diag[0] += d * p / q;
    diag[n - 1] += d * p / q;
    // contribution of g to the edge rows
    let g_coeff = d / q;
    (lower, diag, upper, g_coeff, p / q)
}

/// Solves `σφ − ηε²φ'' = ρ` on the kernel's interval with Robin data
/// `aφ + εb∇φ·n = 0`.
pub fn solve_potential(rho: &GridField, kernel: &InteractionKernel, eps: f64, bc: &RobinBC) -> Result<GridField> {
    solve_robin(rho, kernel, eps, bc, 0.0)
}

fn solve_robin(rho: &GridField, kernel: &InteractionKernel, eps: f64, bc: &RobinBC, g: f64) -> Result<GridField> {
    bc.validate()?;
    if !(eps > 0.0) {
        return Err(Error::input(format!("eps must be positive, got {eps}")));
    }
    check_bounded(kernel, &GridSpec::of(rho))?;
    if rho.min() < 0.0 {
        return Err(Error::input("potential source must be nonnegative"));
    }
    let n = rho.len();
    let (lower, diag, upper, g_coeff, _) = robin_system(n, rho.dx(), kernel, eps, bc);
    let mut rhs = rho.values.clone();
    rhs[0] += g_coeff * g;
    rhs[n - 1] += g_coeff * g;
    let phi = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
    Ok(rho.with_values(phi))
}

/// Max-norm residual of the discrete potential equation.
pub fn potential_residual(
    phi: &GridField,
    rho: &GridField,
    kernel: &InteractionKernel,
    eps: f64,
    bc: &RobinBC,
) -> f64 {
    let n = rho.len();
    let (lower, diag, upper, _, _) = robin_system(n, rho.dx(), kernel, eps, bc);
    (0..n)
        .map(|i| {
            let mut r = diag[i] * phi.values[i] - rho.values[i];
            if i > 0 {
                r += lower[i] * phi.values[i - 1];
            }
            if i + 1 < n {
                r += upper[i] * phi.values[i + 1];
            }
            r.abs()
        })
        .fold(0.0, f64::max)
}

/// Boundary-layer field `στ − ηε²τ'' = 0`, `aτ + εb∇τ·n = a/σ`.
pub fn tau_field(kernel: &InteractionKernel, eps: f64, bc: &RobinBC, grid: &GridSpec) -> Result<GridField> {
    let zero = grid.zeros();
    solve_robin(&zero, kernel, eps, bc, bc.a / kernel.sigma)
}

/// Closed-form half-line layer `τ(t) = a e^{−κt/ε} / (σ(a + bκ))`,
/// `κ = √(σ/η)`, at distance `t` from the wall.
pub fn tau_half_line(kernel: &InteractionKernel, eps: f64, bc: &RobinBC, t: f64) -> f64 {
    let k = (kernel.sigma / kernel.eta).sqrt();
    bc.a / (kernel.sigma * (bc.a + bc.b * k)) * (-k * t / eps).exp()
}

/// Writes `(x, value)` pairs as a two-column CSV.
pub fn write_table_csv(path: &Path, rows: &[(f64, f64)]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "x,value")?;
    for (x, v) in rows {
        writeln!(buf, "{x:.17e},{v:.17e}")?;
    }
    crate::io::write_atomic(path, &buf)
}
