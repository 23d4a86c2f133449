//! Lévy measures `Λ` of the subordinator `ξ` with `e^{−ξ}` the mass of the
//! fragment containing the tagged leaf, and the rates they induce:
//!
//! `Φ(n:m) = C(n,m) ∫ e^{−(n−m)x}(1−e^{−x})^m Λ(dx)`, `Φ(n) = Σ_m Φ(n:m)`.
//!
//! `Φ(n:m)/Φ(n)` is the probability that the first bush hanging off the
//! spine of a tree on `n + 1` labels carries `m` of the `n` untagged labels.

use alloc::boxed::Box;
use alloc::sync::Arc;
use core::fmt;

use crate::error::{bail, Result};
use crate::pd::{self, PdParams};
use crate::quad;
use crate::special::{binomial, ln_gamma};

pub type DensityFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum LevyKernel {
    /// `Λ_{α,θ}` of the `PD*(α, θ)` dislocation measure.
    PdStar(PdParams),
    /// Binary Brownian dislocation measure: `c(1−e^{−x})^{−3/2}e^{−x/2}` with
    /// `c = √(2/π)`.
    Brownian,
    /// `c(1−e^{−x})^{−b−1}e^{−bx}`, `0 < b < 1`: the kernels whose spinal
    /// compositions are reversible.
    Reversible { b: f64, c: f64 },
    /// `C·Λ` for another kernel.
    Scaled(f64, Box<LevyKernel>),
    /// An arbitrary density; rates come from quadrature.
    Density(DensityFn),
}

impl fmt::Debug for LevyKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LevyKernel::PdStar(p) => write!(f, "PdStar({}, {})", p.alpha(), p.theta()),
            LevyKernel::Brownian => write!(f, "Brownian"),
            LevyKernel::Reversible { b, c } => write!(f, "Reversible {{ b: {b}, c: {c} }}"),
            LevyKernel::Scaled(s, k) => write!(f, "Scaled({s}, {k:?})"),
            LevyKernel::Density(_) => write!(f, "Density(<fn>)"),
        }
    }
}

/// `√(2/π)`, the constant of the Brownian dislocation density.
pub const BROWNIAN_CONSTANT: f64 = 0.797_884_560_802_865_4;

impl LevyKernel {
    pub fn reversible(b: f64, c: f64) -> Result<Self> {
        if !(b > 0.0 && b < 1.0) || !(c > 0.0) {
            bail!(Domain, "reversible kernel needs 0 < b < 1 and c > 0");
        }
        Ok(LevyKernel::Reversible { b, c })
    }

    pub fn from_density<F>(f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        LevyKernel::Density(Arc::new(f))
    }

    pub fn scaled(self, factor: f64) -> Result<Self> {
        if !(factor > 0.0) || !factor.is_finite() {
            bail!(Domain, "scale factor must be positive");
        }
        Ok(LevyKernel::Scaled(factor, Box::new(self)))
    }

    /// Kernel as a density function of `x`, dropping any closed forms.
    pub fn as_density(&self) -> LevyKernel {
        let k = self.clone();
        LevyKernel::from_density(move |x| k.density(x).unwrap_or(f64::NAN))
    }

    /// Density of `Λ` at `x > 0`.
    pub fn density(&self, x: f64) -> Result<f64> {
        if !(x > 0.0) {
            bail!(Domain, "Lévy density needs x > 0, got {x}");
        }
        Ok(match self {
            LevyKernel::PdStar(p) => pd::levy_density(p, x)?,
            LevyKernel::Brownian => reversible_density(0.5, BROWNIAN_CONSTANT, x),
            LevyKernel::Reversible { b, c } => reversible_density(*b, *c, x),
            LevyKernel::Scaled(s, k) => s * k.density(x)?,
            LevyKernel::Density(f) => f(x),
        })
    }

    /// `Φ(n:m)`, closed form where one exists.
    pub fn block_rate(&self, n: usize, m: usize) -> Result<f64> {
        if m == 0 || m > n {
            bail!(
                Validation,
                "block rate needs 1 <= m <= n, got n = {n}, m = {m}"
            );
        }
        match self {
            LevyKernel::PdStar(p) => pd::block_rate_closed(p, n, m),
            LevyKernel::Brownian => Ok(reversible_rate(0.5, BROWNIAN_CONSTANT, n, m)),
            LevyKernel::Reversible { b, c } => Ok(reversible_rate(*b, *c, n, m)),
            LevyKernel::Scaled(s, k) => Ok(s * k.block_rate(n, m)?),
            LevyKernel::Density(_) => self.block_rate_quadrature(n, m),
        }
    }

    /// `Φ(n:m)` by quadrature of the density after `z = e^{−x}`:
    /// `C(n,m) ∫_0^1 z^{n−m−1}(1−z)^m Λ(−ln z) dz`.
    pub fn block_rate_quadrature(&self, n: usize, m: usize) -> Result<f64> {
        if m == 0 || m > n {
            bail!(
                Validation,
                "block rate needs 1 <= m <= n, got n = {n}, m = {m}"
            );
        }
        let mut bad = None;
        let v = quad::integrate(
            |node| {
                let (z, w) = (node.from_lo, node.to_hi);
                let x = if w < 0.5 {
                    -libm::log1p(-w)
                } else {
                    -libm::log(z)
                };
                match self.density(x) {
                    Ok(d) => libm::pow(z, (n - m) as f64 - 1.0) * libm::pow(w, m as f64) * d,
                    Err(e) => {
                        bad = Some(e);
                        0.0
                    }
                }
            },
            0.0,
            1.0,
        )?;
        if let Some(e) = bad {
            return Err(e);
        }
        Ok(binomial(n, m) * v)
    }

    /// `Φ(n) = Σ_{m=1}^{n} Φ(n:m)`.
    pub fn total_rate(&self, n: usize) -> Result<f64> {
        if n == 0 {
            bail!(Validation, "Φ(n) needs n >= 1");
        }
        (1..=n).map(|m| self.block_rate(n, m)).sum()
    }

    /// `Φ(n:m)/Φ(n)`.
    pub fn first_bush_prob(&self, n: usize, m: usize) -> Result<f64> {
        let total = self.total_rate(n)?;
        if !(total > 0.0) {
            bail!(Numeric, "vanishing total rate Φ({n})");
        }
        Ok(self.block_rate(n, m)? / total)
    }

    /// `∫(1 − e^{−x}) Λ(dx) = Φ(1)` by quadrature; an error means the
    /// integrability condition fails numerically.
    pub fn check_integrability(&self) -> Result<f64> {
        let v = self.block_rate_quadrature(1, 1)?;
        if !v.is_finite() || v <= 0.0 {
            bail!(Numeric, "∫(1 ∧ x) Λ(dx) is not finite and positive: {v}");
        }
        Ok(v)
    }

    /// The `b` of the reversible form `c(1−e^{−x})^{−b−1}e^{−bx}` when the
    /// kernel is known to have it.
    pub fn reversible_index(&self) -> Option<f64> {
        match self {
            LevyKernel::PdStar(p) if p.is_stable() => Some(1.0 - p.alpha()),
            LevyKernel::Brownian => Some(0.5),
            LevyKernel::Reversible { b, .. } => Some(*b),
            LevyKernel::Scaled(_, k) => k.reversible_index(),
            _ => None,
        }
    }
}

fn reversible_density(b: f64, c: f64, x: f64) -> f64 {
    let one_minus = -libm::expm1(-x);
    c * libm::pow(one_minus, -b - 1.0) * libm::exp(-b * x)
}

fn reversible_rate(b: f64, c: f64, n: usize, m: usize) -> f64 {
    let (nf, mf) = (n as f64, m as f64);
    let ln_b = ln_gamma(nf - mf + b) + ln_gamma(mf - b) - ln_gamma(nf);
    binomial(n, m) * c * libm::exp(ln_b)
}

/// Brownian split rate `p_ν(n1, n2) = √(2/π)·B(n1 − 1/2, n2 − 1/2)`, obtained by
/// symmetrising `ν_2(s_1 ∈ dx) = √(2/π) x^{−3/2}(1−x)^{−3/2}dx` on `[1/2, 1)`.
pub fn brownian_split_rate(n1: usize, n2: usize) -> f64 {
    let (a, b) = (n1 as f64 - 0.5, n2 as f64 - 0.5);
    BROWNIAN_CONSTANT * libm::exp(ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b))
}

/// Same quantity by direct quadrature of the dislocation density on
/// `[1/2, 1)`: `∫ (x^{n1}(1−x)^{n2} + x^{n2}(1−x)^{n1}) ν_2(s_1 ∈ dx)`.
pub fn brownian_split_rate_quadrature(n1: usize, n2: usize) -> Result<f64> {
    let (a, b) = (n1 as f64, n2 as f64);
    let v = quad::integrate(
        |node| {
            let x = node.x;
            let y = node.to_hi;
            let dens = libm::pow(x, -1.5) * libm::pow(y, -1.5);
            (libm::pow(x, a) * libm::pow(y, b) + libm::pow(x, b) * libm::pow(y, a)) * dens
        },
        0.5,
        1.0,
    )?;
    Ok(BROWNIAN_CONSTANT * v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::PI;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn brownian_constant() {
        assert!(((2.0 / PI).sqrt() - BROWNIAN_CONSTANT).abs() < 1e-16);
    }

    #[test]
    fn pdstar_closed_form_matches_quadrature() {
        for &(a, t) in &[
            (0.6, -1.0),
            (0.75, -0.8),
            (0.9, -0.45),
            (0.75, -1.4),
            (0.4, 0.7),
        ] {
            let k = LevyKernel::PdStar(PdParams::new(a, t).unwrap());
            for n in 1..=9 {
                for m in 1..=n {
                    let c = k.block_rate(n, m).unwrap();
                    let q = k.block_rate_quadrature(n, m).unwrap();
                    assert!(rel(q, c) < 1e-9, "a={a} t={t} n={n} m={m}: {q} vs {c}");
                }
            }
        }
    }

    #[test]
    fn brownian_rates_and_split_closed_form() {
        for n1 in 1..7 {
            for n2 in 1..7 {
                let c = brownian_split_rate(n1, n2);
                let q = brownian_split_rate_quadrature(n1, n2).unwrap();
                assert!(rel(q, c) < 1e-10, "({n1},{n2})");
            }
        }
        let k = LevyKernel::Brownian;
        for n in 1..8 {
            for m in 1..=n {
                let c = k.block_rate(n, m).unwrap();
                let q = k.block_rate_quadrature(n, m).unwrap();
                assert!(rel(q, c) < 1e-9);
            }
        }
    }

    #[test]
    fn brownian_total_rate_counts_binary_splits() {
        // Φ(n−1) = ½ Σ_{n1} C(n, n1) p_ν(n1, n − n1)
        let k = LevyKernel::Brownian;
        for n in 2..10 {
            let s: f64 = (1..n)
                .map(|n1| binomial(n, n1) * brownian_split_rate(n1, n - n1))
                .sum::<f64>()
                / 2.0;
            assert!(rel(k.total_rate(n - 1).unwrap(), s) < 1e-12);
        }
    }

    #[test]
    fn stable_is_reversible_form() {
        let p = PdParams::stable(0.7).unwrap();
        let stable = LevyKernel::PdStar(p);
        let rev = LevyKernel::reversible(0.3, pd::levy_constant(&p)).unwrap();
        for n in 1..8 {
            for m in 1..=n {
                assert!(
                    rel(
                        rev.block_rate(n, m).unwrap(),
                        stable.block_rate(n, m).unwrap()
                    ) < 1e-12
                );
            }
        }
        assert_eq!(stable.reversible_index(), Some(1.0 - 0.7));
    }

    #[test]
    fn density_variant_uses_quadrature() {
        let p = PdParams::new(0.8, -0.9).unwrap();
        let closed = LevyKernel::PdStar(p);
        let generic = closed.as_density();
        for n in 1..6 {
            assert!(
                rel(
                    generic.total_rate(n).unwrap(),
                    closed.total_rate(n).unwrap()
                ) < 1e-9
            );
        }
        assert!(closed.check_integrability().unwrap() > 0.0);
    }

    #[test]
    fn pdstar_density_pulls_back_to_size_biased_density() {
        // ∫_a^b c s^{-α}(1-s)^{α+θ-1} ds = ∫ Λ(dx) over x ∈ (-ln b, -ln a)
        let p = PdParams::new(0.75, -0.8).unwrap();
        let c = pd::levy_constant(&p);
        let (lo, hi) = (0.2, 0.9);
        let s_side = quad::integrate(
            |n| c * n.x.powf(-0.75) * n.x.mul_add(-1.0, 1.0).powf(0.75 - 0.8 - 1.0),
            lo,
            hi,
        )
        .unwrap();
        let x_side =
            quad::integrate(|n| pd::levy_density(&p, n.x).unwrap(), -hi.ln(), -lo.ln()).unwrap();
        assert!(rel(x_side, s_side) < 1e-10);
    }

    #[test]
    fn rate_range_errors() {
        let k = LevyKernel::Brownian;
        assert!(k.block_rate(3, 0).is_err());
        assert!(k.block_rate(3, 4).is_err());
        assert!(LevyKernel::reversible(1.2, 1.0).is_err());
    }
}
