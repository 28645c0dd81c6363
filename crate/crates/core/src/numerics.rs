//! Small numerical building blocks shared by the solvers: quadrature rules,
//! a bracketed scalar minimizer, a tridiagonal solver and cubic Hermite
//! tables.

use crate::error::{Error, Result};

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = (n + 1) / 2;
        for i in 0..m {
            // Chebyshev initial guess, then Newton on P_n.
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    /// Nodes and weights on `[-1, 1]`.
    pub fn nodes_weights(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }

    /// Integrates `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (b + a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Integrates `f` over `[a, b]` split into `panels` equal pieces.
    pub fn integrate_panels<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        panels: usize,
        mut f: F,
    ) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }

    /// Integrates over `[a, b]` with panel boundaries at every breakpoint that
    /// falls strictly inside the interval.
    pub fn integrate_with_breaks<F: FnMut(f64) -> f64>(
        &self,
        a: f64,
        b: f64,
        breaks: &[f64],
        mut f: F,
    ) -> f64 {
        let mut pts: Vec<f64> = breaks.iter().copied().filter(|&x| x > a && x < b).collect();
        pts.push(a);
        pts.push(b);
        pts.sort_by(|x, y| x.partial_cmp(y).unwrap());
        pts.dedup();
        pts.windows(2)
            .map(|w| self.integrate(w[0], w[1], &mut f))
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
}

/// Adaptive Simpson quadrature to absolute tolerance `tol`.
///
/// Fails when the recursion depth cap is hit with the local error still
/// above its share of the tolerance.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature> {
    const MAX_DEPTH: usize = 50;
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut evals = 3;
    let mut worst = 0.0;
    let mut failed = false;
    let value = simpson_rec(
        &f, a, b, fa, fm, fb, whole, tol, MAX_DEPTH, &mut evals, &mut worst, &mut failed,
    );
    if failed {
        return Err(Error::numerical(format!(
            "adaptive quadrature did not converge on [{a}, {b}] (local error {worst:e}, tol {tol:e}, {evals} evaluations)"
        )));
    }
    Ok(Quadrature {
        value,
        error_estimate: worst,
        evaluations: evals,
    })
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
    evals: &mut usize,
    worst: &mut f64,
    failed: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *evals += 2;
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let diff = left + right - whole;
    if depth == 0 {
        if diff.abs() > 15.0 * tol {
            *failed = true;
        }
        *worst = worst.max(diff.abs() / 15.0);
        return left + right + diff / 15.0;
    }
    if diff.abs() <= 15.0 * tol {
        *worst = worst.max(diff.abs() / 15.0);
        return left + right + diff / 15.0;
    }
    simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, evals, worst, failed)
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, evals, worst, failed)
}

/// Composite Simpson rule on equally spaced samples (odd count required;
/// an even count falls back to Simpson plus a final trapezoid).
pub fn simpson_samples(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        _ => {
            let odd = if n % 2 == 1 { n } else { n - 1 };
            let mut s = values[0] + values[odd - 1];
            for (i, v) in values.iter().enumerate().take(odd - 1).skip(1) {
                s += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = s * h / 3.0;
            if odd < n {
                total += 0.5 * h * (values[n - 2] + values[n - 1]);
            }
            total
        }
    }
}

/// Golden-section minimization of `f` on `[a, b]` to abscissa tolerance `tol`.
/// Returns `(argmin, min)`; the endpoints are included as candidates.
pub fn golden_section<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (lo0, hi0) = (a, b);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut iter = 0;
    while (b - a).abs() > tol && iter < 400 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        iter += 1;
    }
    let x = 0.5 * (a + b);
    let mut best = (x, f(x));
    for cand in [lo0, hi0] {
        let v = f(cand);
        if v < best.1 {
            best = (cand, v);
        }
    }
    best
}

/// Solves a tridiagonal system with the Thomas algorithm.
/// `lower[i]` multiplies `x[i-1]` in row `i` (`lower[0]` unused), `upper[i]`
/// multiplies `x[i+1]` (`upper[n-1]` unused).
pub fn solve_tridiagonal(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::input("tridiagonal system with mismatched lengths"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(Error::numerical("singular tridiagonal system"));
    }
    c[0] = upper[0] / denom;
    d[0] = rhs[0] / denom;
    for i in 1..n {
        denom = diag[i] - lower[i] * c[i - 1];
        if denom == 0.0 || !denom.is_finite() {
            return Err(Error::numerical("singular tridiagonal system"));
        }
        c[i] = if i + 1 < n { upper[i] / denom } else { 0.0 };
        d[i] = (rhs[i] - lower[i] * d[i - 1]) / denom;
    }
    let mut x = vec![0.0; n];
    x[n - 1] = d[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d[i] - c[i] * x[i + 1];
    }
    Ok(x)
}

/// Even function tabulated on `[0, x_max]` with values and first
/// derivatives; evaluated by cubic Hermite interpolation and reflected for
/// negative arguments. Beyond the table the function is taken to be zero.
#[derive(Debug, Clone)]
pub struct HermiteTable {
    h: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl HermiteTable {
    pub fn new(h: f64, values: Vec<f64>, slopes: Vec<f64>) -> Self {
        assert_eq!(values.len(), slopes.len());
        Self { h, values, slopes }
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn x_max(&self) -> f64 {
        self.h * (self.values.len() - 1) as f64
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node_values(&self) -> &[f64] {
        &self.values
    }

    /// Interpolated value at `|x|` (the table stores an even function).
    pub fn eval_even(&self, x: f64) -> f64 {
        self.eval_pos(x.abs())
    }

    /// Interpolated value for an odd function stored on the positive axis.
    pub fn eval_odd(&self, x: f64) -> f64 {
        let v = self.eval_pos(x.abs());
        if x < 0.0 {
            -v
        } else {
            v
        }
    }

    fn eval_pos(&self, x: f64) -> f64 {
        let n = self.values.len();
        let s = x / self.h;
        if s >= (n - 1) as f64 {
            return 0.0;
        }
        let k = s.floor() as usize;
        let t = s - k as f64;
        let (y0, y1) = (self.values[k], self.values[k + 1]);
        let (m0, m1) = (self.slopes[k] * self.h, self.slopes[k + 1] * self.h);
        let t2 = t * t;
        let t3 = t2 * t;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * y0 + h10 * m0 + h01 * y1 + h11 * m1
    }
}

/// Natural cubic spline through equally spaced samples, used to interpolate
/// grid functions at off-grid points.
#[derive(Debug, Clone)]
pub struct UniformSpline {
    x0: f64,
    h: f64,
    y: Vec<f64>,
    m: Vec<f64>,
}

impl UniformSpline {
    pub fn new(x0: f64, h: f64, y: Vec<f64>) -> Result<Self> {
        let n = y.len();
        if n < 2 {
            return Err(Error::input("spline needs at least two samples"));
        }
        let mut m = vec![0.0; n];
        if n > 2 {
            let k = n - 2;
            let lower = vec![1.0; k];
            let diag = vec![4.0; k];
            let upper = vec![1.0; k];
            let rhs: Vec<f64> = (1..n - 1)
                .map(|i| 6.0 * (y[i + 1] - 2.0 * y[i] + y[i - 1]) / (h * h))
                .collect();
            let inner = solve_tridiagonal(&lower, &diag, &upper, &rhs)?;
            m[1..n - 1].copy_from_slice(&inner);
        }
        Ok(Self { x0, h, y, m })
    }

    /// First derivative of the spline.
    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.y.len();
        let s = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        let a = 1.0 - t;
        (self.y[k + 1] - self.y[k]) / self.h
            + ((1.0 - 3.0 * a * a) * self.m[k] + (3.0 * t * t - 1.0) * self.m[k + 1]) * self.h / 6.0
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.y.len();
        let s = ((x - self.x0) / self.h).clamp(0.0, (n - 1) as f64);
        let k = (s.floor() as usize).min(n - 2);
        let t = s - k as f64;
        let a = 1.0 - t;
        let h2 = self.h * self.h;
        a * self.y[k]
            + t * self.y[k + 1]
            + ((a * a * a - a) * self.m[k] + (t * t * t - t) * self.m[k + 1]) * h2 / 6.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(6);
        let v = gl.integrate(-1.0, 2.0, |x| x.powi(11) - 3.0 * x.powi(4) + 1.0);
        let exact = (2f64.powi(12) - 1.0) / 12.0 - 3.0 * (32.0 + 1.0) / 5.0 + 3.0;
        assert!((v - exact).abs() < 1e-10 * exact.abs());
    }

    #[test]
    fn adaptive_simpson_handles_a_kink() {
        let q = adaptive_simpson(|x: f64| (x - 0.3).abs(), 0.0, 1.0, 1e-12).unwrap();
        assert!((q.value - (0.09 + 0.49) / 2.0).abs() < 1e-10);
    }

    #[test]
    fn tridiagonal_matches_dense_solve() {
        let lower = [0.0, -1.0, -1.0, -1.0];
        let diag = [4.0, 4.0, 4.0, 4.0];
        let upper = [-1.0, -1.0, -1.0, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let rhs: Vec<f64> = (0..4)
            .map(|i| {
                diag[i] * x[i]
                    + if i > 0 { lower[i] * x[i - 1] } else { 0.0 }
                    + if i < 3 { upper[i] * x[i + 1] } else { 0.0 }
            })
            .collect();
        let sol = solve_tridiagonal(&lower, &diag, &upper, &rhs).unwrap();
        for (a, b) in sol.iter().zip(x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn golden_section_finds_interior_and_endpoint_minima() {
        let (x, _) = golden_section(|x| (x - 0.7).powi(2), 0.0, 2.0, 1e-10);
        assert!((x - 0.7).abs() < 1e-8);
        let (x, _) = golden_section(|x| x, 0.0, 1.0, 1e-10);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn spline_reproduces_cubic_in_interior() {
        let h = 0.01;
        let y: Vec<f64> = (0..201).map(|i| (i as f64 * h).sin()).collect();
        let s = UniformSpline::new(0.0, h, y).unwrap();
        assert!((s.eval(1.0051) - 1.0051f64.sin()).abs() < 1e-9);
    }
}
