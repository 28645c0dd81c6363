//! Pressure laws and the double-well machinery built on them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{InteractionKernel, KernelDomain};
use crate::numerics::{adaptive_simpson, golden_section};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum PressureLaw {
    /// `f(ρ) = ρ^m/(m−1)`.
    PowerLaw { m: f64 },
    /// `f = 0` on `[0, 1]`, `+∞` above.
    HardSphere,
    /// `f'(ρ) = αρ/(1−ρ)`.
    SingularReciprocal { alpha: f64 },
    /// `f'(ρ) = −α log(1−ρ)`.
    SingularLog { alpha: f64 },
}

impl PressureLaw {
    pub fn power(m: f64) -> Result<Self> {
        let law = PressureLaw::PowerLaw { m };
        law.validate()?;
        Ok(law)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            PressureLaw::PowerLaw { m } if !(m > 1.0) || !m.is_finite() => {
                Err(Error::input(format!("power-law exponent must exceed 1, got {m}")))
            }
            PressureLaw::SingularReciprocal { alpha } | PressureLaw::SingularLog { alpha }
                if !(alpha > 0.0) || !alpha.is_finite() =>
            {
                Err(Error::input(format!("singular pressure needs alpha > 0, got {alpha}")))
            }
            _ => Ok(()),
        }
    }

    pub fn is_singular(&self) -> bool {
        !matches!(self, PressureLaw::PowerLaw { .. })
    }

    /// Upper end of the admissible density range (`∞` for power laws).
    pub fn max_density(&self) -> f64 {
        match self {
            PressureLaw::PowerLaw { .. } => f64::INFINITY,
            _ => 1.0,
        }
    }

    fn check(&self, rho: f64) -> Result<()> {
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::domain("density", rho));
        }
        match self {
            PressureLaw::PowerLaw { .. } => Ok(()),
            PressureLaw::HardSphere if rho > 1.0 => Err(Error::domain("hard-sphere pressure", rho)),
            PressureLaw::HardSphere => Ok(()),
            _ if rho >= 1.0 => Err(Error::domain("singular pressure", rho)),
            _ => Ok(()),
        }
    }

    pub fn f(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(match *self {
            PressureLaw::PowerLaw { m } => rho.powf(m) / (m - 1.0),
            PressureLaw::HardSphere => 0.0,
            PressureLaw::SingularReciprocal { alpha } => alpha * (-rho - (-rho).ln_1p()),
            PressureLaw::SingularLog { alpha } => {
                let l = if rho == 0.0 { 0.0 } else { (1.0 - rho) * (-rho).ln_1p() };
                alpha * (l + rho)
            }
        })
    }

    pub fn f_prime(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(match *self {
            PressureLaw::PowerLaw { m } => m * rho.powf(m - 1.0) / (m - 1.0),
            PressureLaw::HardSphere => 0.0,
            PressureLaw::SingularReciprocal { alpha } => alpha * rho / (1.0 - rho),
            PressureLaw::SingularLog { alpha } => -alpha * (-rho).ln_1p(),
        })
    }

    pub fn f_second(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(match *self {
            PressureLaw::PowerLaw { m } => m * rho.powf(m - 2.0),
            PressureLaw::HardSphere => 0.0,
            PressureLaw::SingularReciprocal { alpha } => alpha / ((1.0 - rho) * (1.0 - rho)),
            PressureLaw::SingularLog { alpha } => alpha / (1.0 - rho),
        })
    }

    /// `P(ρ) = ρf'(ρ) − f(ρ)`, so that `ρ∇f'(ρ) = ∇P(ρ)`.
    pub fn pressure(&self, rho: f64) -> Result<f64> {
        self.check(rho)?;
        Ok(match *self {
            PressureLaw::PowerLaw { m } => rho.powf(m),
            PressureLaw::HardSphere => 0.0,
            PressureLaw::SingularReciprocal { alpha } => {
                alpha * (rho / (1.0 - rho) + (-rho).ln_1p())
            }
            PressureLaw::SingularLog { alpha } => alpha * (-rho - (-rho).ln_1p()),
        })
    }

    /// `P'(ρ) = ρf''(ρ)`.
    pub fn pressure_derivative(&self, rho: f64) -> Result<f64> {
        Ok(rho * self.f_second(rho)?)
    }
}

/// Evaluates `f(ρ)`.
pub fn f_eval(law: &PressureLaw, rho: f64) -> Result<f64> {
    law.f(rho)
}

/// Evaluates `f'(ρ)`.
pub fn f_prime(law: &PressureLaw, rho: f64) -> Result<f64> {
    law.f_prime(rho)
}

/// Stable well `θ_m = (1/(2σ))^{1/(m−2)}` of the power-law double well.
pub fn theta_star(m: f64, sigma: f64) -> Result<f64> {
    if !(m > 2.0) || !m.is_finite() {
        return Err(Error::domain("theta_star exponent (needs m > 2)", m));
    }
    if !(sigma > 0.0) {
        return Err(Error::input(format!("sigma must be positive, got {sigma}")));
    }
    Ok((0.5 / sigma).powf(1.0 / (m - 2.0)))
}

/// `h(ρ) = f(ρ) − ρ²/(2σ) + aρ` with `a` chosen so that `h(0) = h(θ) = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleWell {
    pub law: PressureLaw,
    pub sigma: f64,
    pub theta: f64,
    pub a_shift: f64,
}

impl DoubleWell {
    pub fn new(law: PressureLaw, sigma: f64) -> Result<Self> {
        law.validate()?;
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::input(format!("sigma must be positive, got {sigma}")));
        }
        let (theta, a_shift) = match law {
            PressureLaw::PowerLaw { m } => {
                let theta = theta_star(m, sigma)?;
                (theta, (m - 2.0) * theta.powf(m - 1.0) / (m - 1.0))
            }
            PressureLaw::HardSphere => (1.0, 0.5 / sigma),
            _ => {
                // common tangent with the origin: P(θ) = θ²/(2σ), a = θ/σ − f'(θ)
                let alpha = match law {
                    PressureLaw::SingularReciprocal { alpha } | PressureLaw::SingularLog { alpha } => alpha,
                    _ => unreachable!(),
                };
                if alpha * sigma >= 1.0 {
                    return Err(Error::domain(
                        "singular double well (needs alpha·sigma < 1 for phase separation)",
                        alpha * sigma,
                    ));
                }
                let gap = |r: f64| law.pressure(r).unwrap() - r * r / (2.0 * sigma);
                let (mut lo, mut hi) = (1e-9, 1.0 - 1e-15);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if gap(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let theta = 0.5 * (lo + hi);
                (theta, theta / sigma - law.f_prime(theta)?)
            }
        };
        Ok(Self {
            law,
            sigma,
            theta,
            a_shift,
        })
    }

    pub fn h(&self, rho: f64) -> Result<f64> {
        Ok(self.law.f(rho)? - rho * rho / (2.0 * self.sigma) + self.a_shift * rho)
    }

    pub fn h_prime(&self, rho: f64) -> Result<f64> {
        Ok(self.law.f_prime(rho)? - rho / self.sigma + self.a_shift)
    }

    /// Convex hull `h**`: zero on `[0, θ]`, `h` beyond.
    pub fn h_hull(&self, rho: f64) -> Result<f64> {
        self.law.f(rho)?;
        if rho <= self.theta {
            Ok(0.0)
        } else {
            self.h(rho)
        }
    }

    pub fn h_hull_prime(&self, rho: f64) -> Result<f64> {
        self.law.f(rho)?;
        if rho <= self.theta {
            Ok(0.0)
        } else {
            self.h_prime(rho)
        }
    }

    /// `g(s) = inf_{ρ≥0} [h(ρ) + (ρ − σs)²/(2σ)]`.
    ///
    /// The objective equals `f(ρ) + (a − s)ρ + σs²/2`, convex in `ρ`.
    pub fn cell_potential(&self, s: f64) -> Result<f64> {
        if !(s >= 0.0) || !s.is_finite() {
            return Err(Error::domain("cell potential argument", s));
        }
        let base = 0.5 * self.sigma * s * s;
        let slope = self.a_shift - s;
        let inner = match self.law {
            PressureLaw::HardSphere => slope.min(0.0),
            PressureLaw::PowerLaw { m } => {
                if slope >= 0.0 {
                    0.0
                } else {
                    let rho = (-slope * (m - 1.0) / m).powf(1.0 / (m - 1.0));
                    self.law.f(rho)? + slope * rho
                }
            }
            _ => {
                if slope >= 0.0 {
                    0.0
                } else {
                    let obj = |r: f64| self.law.f(r).unwrap_or(f64::INFINITY) + slope * r;
                    golden_section(obj, 0.0, 1.0 - 1e-14, 1e-12).1
                }
            }
        };
        Ok((inner + base).max(0.0))
    }

    /// `γ = (1/θ)∫₀^{θ/σ} √(2g(s)) ds`.
    pub fn surface_tension(&self) -> Result<f64> {
        let end = self.theta / self.sigma;
        let integrand = |s: f64| (2.0 * self.cell_potential(s).unwrap_or(0.0)).sqrt();
        // scale of the integral is about √σ·end²; tolerance relative to it
        let scale = self.sigma.sqrt() * end * end;
        let mid = self.a_shift.clamp(0.0, end);
        let left = adaptive_simpson(integrand, 0.0, mid, 1e-10 * scale)?;
        let right = adaptive_simpson(integrand, mid, end, 1e-10 * scale)?;
        Ok((left.value + right.value) / self.theta)
    }
}

/// Evaluates `h(ρ)`.
pub fn h_eval(dw: &DoubleWell, rho: f64) -> Result<f64> {
    dw.h(rho)
}

/// Evaluates `h**(ρ)`.
pub fn h_hull_eval(dw: &DoubleWell, rho: f64) -> Result<f64> {
    dw.h_hull(rho)
}

pub fn cell_potential_g(dw: &DoubleWell, s: f64) -> Result<f64> {
    dw.cell_potential(s)
}

pub fn surface_tension_gamma(dw: &DoubleWell) -> Result<f64> {
    dw.surface_tension()
}

/// Second moment `β = ∫ z² G_ε(z) dz` by adaptive quadrature.
pub fn beta_moment(kernel: &InteractionKernel) -> Result<f64> {
    if kernel.domain != KernelDomain::FreeSpace1D {
        return Err(Error::input("beta_moment needs a free-space kernel"));
    }
    let l = kernel.truncation_radius(1e-18);
    let scale = kernel.second_moment_exact();
    let q = adaptive_simpson(|z| z * z * kernel.value(z), 0.0, l, 1e-12 * scale)?;
    let beta = 2.0 * q.value;
    if !beta.is_finite() {
        return Err(Error::numerical("second moment of the kernel diverged"));
    }
    Ok(beta)
}
