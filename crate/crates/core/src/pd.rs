//! Two-parameter Poisson–Dirichlet laws `PD(α, θ)` and their sigma-finite
//! continuation `PD*(α, θ)`.
//!
//! Rate indexing follows the tagged-fragment convention: `Φ(n)` is the total
//! rate of splits visible on `n + 1` labels, so [`total_rate`]`(n)` equals
//! [`laplace_exponent`]`(n − 1)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp1};

use crate::error::{bail, Result};
use crate::partition::{Composition, MassPartition, SetPartition};
use crate::special::{digamma, gamma, ln_gamma, ln_gamma_signed, ln_rising_signed, rgamma};
use crate::Label;

/// Below this distance from `θ = −α` the digamma limit replaces the generic
/// branch of the rate formulas.
pub const SINGULAR_BAND: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `θ > −α`: `PD(α, θ)` is a probability law.
    Probability,
    /// `−2α < θ ≤ −α`: only the infinite measure `PD*(α, θ)` exists.
    Extended,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PdParams {
    alpha: f64,
    theta: f64,
}

impl PdParams {
    /// Requires `0 < α < 1` and `θ > −2α`.
    pub fn new(alpha: f64, theta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            bail!(Domain, "alpha must lie in (0, 1), got {alpha}");
        }
        if !theta.is_finite() || theta <= -2.0 * alpha {
            bail!(
                Domain,
                "theta must exceed -2 alpha = {}, got {theta}",
                -2.0 * alpha
            );
        }
        Ok(PdParams { alpha, theta })
    }

    /// The stable case `θ = −1`, `α ∈ (1/2, 1)`.
    pub fn stable(alpha: f64) -> Result<Self> {
        if !(alpha > 0.5 && alpha < 1.0) {
            bail!(
                Domain,
                "the stable family needs alpha in (1/2, 1), got {alpha}"
            );
        }
        Self::new(alpha, -1.0)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Stable index `β = 1/α`.
    pub fn beta(&self) -> f64 {
        1.0 / self.alpha
    }

    pub fn regime(&self) -> Regime {
        if self.theta > -self.alpha {
            Regime::Probability
        } else {
            Regime::Extended
        }
    }

    pub fn is_stable(&self) -> bool {
        self.theta == -1.0
    }

    /// Parameters `(α, θ + α)` of the factor law of `PD*(α, θ)`.
    pub fn factor(&self) -> PdParams {
        PdParams {
            alpha: self.alpha,
            theta: self.theta + self.alpha,
        }
    }

    fn require_probability(&self, what: &str) -> Result<()> {
        if self.regime() != Regime::Probability {
            bail!(
                Domain,
                "{what} needs theta > -alpha (got alpha = {}, theta = {})",
                self.alpha,
                self.theta
            );
        }
        Ok(())
    }
}

fn ln_rising(x: f64, n: usize) -> f64 {
    let (l, s) = ln_rising_signed(x, n);
    debug_assert!(s > 0.0);
    l
}

fn require_parts(c: &Composition) -> Result<()> {
    if c.k() == 0 {
        bail!(Validation, "empty composition");
    }
    Ok(())
}

/// Ewens–Pitman EPPF of `PD(α, θ)` at the block sizes `c`.
pub fn eppf_pd(params: &PdParams, c: &Composition) -> Result<f64> {
    params.require_probability("eppf_pd")?;
    require_parts(c)?;
    let (a, t) = (params.alpha, params.theta);
    let k = c.k();
    let mut ln = (k - 1) as f64 * libm::log(a) + ln_rising(1.0 + t / a, k - 1)
        - ln_rising(1.0 + t, c.n() - 1);
    for &p in c.parts() {
        ln += ln_rising(1.0 - a, p - 1);
    }
    Ok(libm::exp(ln))
}

/// Normalising constant `Γ(1 + θ/α)/Γ(1 + θ)` relating `PD*` to `PD` for
/// `θ > −α`.
pub fn pdstar_scale(params: &PdParams) -> Result<f64> {
    params.require_probability("pdstar_scale")?;
    let (a, t) = (params.alpha, params.theta);
    Ok(libm::exp(ln_gamma(1.0 + t / a) - ln_gamma(1.0 + t)))
}

/// Exchangeable partition rate function of `PD*(α, θ)`.
///
/// Finite whenever the composition has at least two parts. For a single
/// part it is finite only for `θ > −α` and `+∞` otherwise.
pub fn eprf_pdstar(params: &PdParams, c: &Composition) -> Result<f64> {
    require_parts(c)?;
    let (a, t) = (params.alpha, params.theta);
    let k = c.k();
    if k == 1 && params.regime() == Regime::Extended {
        return Ok(f64::INFINITY);
    }
    let mut ln =
        (k - 1) as f64 * libm::log(a) + ln_gamma(k as f64 + t / a) - ln_gamma(c.n() as f64 + t);
    for &p in c.parts() {
        ln += ln_rising(1.0 - a, p - 1);
    }
    Ok(libm::exp(ln))
}

/// `c_{α,θ} = αΓ(2+θ/α)/(Γ(1−α)Γ(1+α+θ))`, the constant in front of the
/// size-biased and Lévy densities.
pub fn levy_constant(params: &PdParams) -> f64 {
    let (a, t) = (params.alpha, params.theta);
    a * libm::exp(ln_gamma(2.0 + t / a) - ln_gamma(1.0 - a) - ln_gamma(1.0 + a + t))
}

/// Total rate `Φ(n − 1) = P_ν(Π_n ≠ {[n]})` of splits visible on `[n]`.
///
/// Uses `Γ(1+θ/α)·[1/Γ(1+θ) − Γ(n−α)/(Γ(1−α)Γ(n+θ))]`, which is regular at
/// `θ = −1`, and the digamma limit next to `θ = −α`.
pub fn total_rate(params: &PdParams, n: usize) -> Result<f64> {
    if n < 2 {
        bail!(Validation, "total_rate needs n >= 2, got {n}");
    }
    let (a, t) = (params.alpha, params.theta);
    let nf = n as f64;
    if libm::fabs(t + a) < SINGULAR_BAND {
        return Ok(a / gamma(1.0 - a) * (digamma(nf - a) - digamma(1.0 - a)));
    }
    let (lg, sg) = ln_gamma_signed(1.0 + t / a);
    let second = libm::exp(ln_gamma(nf - a) - ln_gamma(1.0 - a)) * rgamma(nf + t);
    let bracket = rgamma(1.0 + t) - second;
    Ok(sg * libm::exp(lg) * bracket)
}

/// Laplace exponent `Φ_{α,θ}(z)` of the tagged-fragment subordinator.
pub fn laplace_exponent(params: &PdParams, z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        bail!(Domain, "laplace_exponent needs z > 0, got {z}");
    }
    let (a, t) = (params.alpha, params.theta);
    if libm::fabs(t + a) < SINGULAR_BAND {
        return Ok(a / gamma(1.0 - a) * (digamma(z + 1.0 - a) - digamma(1.0 - a)));
    }
    let front = a * gamma(2.0 + t / a) / ((a + t) * gamma(1.0 - a));
    let head = (1.0 + t) * libm::exp(ln_gamma(1.0 - a) - ln_gamma(2.0 + t));
    let tail = (z + 1.0 + t) * libm::exp(ln_gamma(z + 1.0 - a) - ln_gamma(z + 2.0 + t));
    Ok(front * (head - tail))
}

/// Density of the Lévy measure `Λ_{α,θ}` at `x > 0`.
pub fn levy_density(params: &PdParams, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        bail!(Domain, "levy_density needs x > 0, got {x}");
    }
    let (a, t) = (params.alpha, params.theta);
    let one_minus = -libm::expm1(-x);
    Ok(levy_constant(params) * libm::exp(-x * (1.0 - a)) * libm::pow(one_minus, a + t - 1.0))
}

/// Closed-form `Φ(n:m) = C(n,m)·c_{α,θ}·B(n−m+1−α, m+α+θ)`.
pub fn block_rate_closed(params: &PdParams, n: usize, m: usize) -> Result<f64> {
    if m == 0 || m > n {
        bail!(
            Validation,
            "block rate needs 1 <= m <= n, got n = {n}, m = {m}"
        );
    }
    let (a, t) = (params.alpha, params.theta);
    let (nf, mf) = (n as f64, m as f64);
    let ln_b = ln_gamma(nf - mf + 1.0 - a) + ln_gamma(mf + a + t) - ln_gamma(nf + 1.0 + t);
    Ok(crate::special::binomial(n, m) * levy_constant(params) * libm::exp(ln_b))
}

/// First `k` size-biased frequencies `W_1, (1−W_1)W_2, …` with
/// `W_i ~ beta(1 − α, iα + θ)`.
pub fn stick_breaking_sample<R: Rng + ?Sized>(
    params: &PdParams,
    k: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    params.require_probability("stick_breaking_sample")?;
    if k == 0 {
        bail!(Validation, "stick breaking needs k >= 1");
    }
    let (a, t) = (params.alpha, params.theta);
    let mut out = Vec::with_capacity(k);
    let mut rest = 1.0;
    for i in 1..=k {
        let w = Beta::new(1.0 - a, i as f64 * a + t)
            .map_err(|e| crate::Error::Numeric(alloc::format!("beta sampler: {e}")))?
            .sample(rng);
        out.push(rest * w);
        rest *= 1.0 - w;
    }
    Ok(out)
}

/// Sequential (Chinese restaurant) sampler for the `PD(α, θ)` partition of
/// `[n]`.
pub fn crp_sample_partition<R: Rng + ?Sized>(
    params: &PdParams,
    n: usize,
    rng: &mut R,
) -> Result<SetPartition> {
    if n == 0 {
        bail!(Validation, "n must be positive");
    }
    let labels: Vec<Label> = (1..=n as Label).collect();
    crp_sample_on(params, &labels, rng)
}

/// As [`crp_sample_partition`] on an arbitrary sorted label list.
pub fn crp_sample_on<R: Rng + ?Sized>(
    params: &PdParams,
    labels: &[Label],
    rng: &mut R,
) -> Result<SetPartition> {
    params.require_probability("crp_sample_partition")?;
    let (a, t) = (params.alpha, params.theta);
    let mut blocks: Vec<Vec<Label>> = Vec::new();
    for (seated, &x) in labels.iter().enumerate() {
        if seated == 0 {
            blocks.push(vec![x]);
            continue;
        }
        let u = rng.random::<f64>() * (seated as f64 + t);
        let mut acc = 0.0;
        let mut chosen = None;
        for (j, b) in blocks.iter().enumerate() {
            acc += b.len() as f64 - a;
            if u < acc {
                chosen = Some(j);
                break;
            }
        }
        match chosen {
            Some(j) => blocks[j].push(x),
            None => blocks.push(vec![x]),
        }
    }
    SetPartition::canonicalize(blocks)
}

/// Truncation estimator `Γ(1−α)·j·s_j^α` of the α-diversity at the last
/// available index.
pub fn alpha_diversity(s: &MassPartition, alpha: f64) -> Result<f64> {
    let j = s.freqs().len();
    if j < 10 {
        bail!(
            Validation,
            "alpha diversity needs at least 10 frequencies, got {j}"
        );
    }
    alpha_diversity_at(s, alpha, j)
}

/// Truncation estimator of the α-diversity at index `j` (1-based).
pub fn alpha_diversity_at(s: &MassPartition, alpha: f64, j: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!(Domain, "alpha must lie in (0, 1), got {alpha}");
    }
    if j == 0 || j > s.freqs().len() {
        bail!(Validation, "index {j} outside 1..={}", s.freqs().len());
    }
    Ok(gamma(1.0 - alpha) * j as f64 * libm::pow(s.freqs()[j - 1], alpha))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Jumps below this size are not simulated; their expected total mass
    /// is added to `T` instead.
    pub truncation: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { truncation: 1e-4 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub draws: usize,
    pub truncation: f64,
    /// Expected mass of the unsimulated jumps, added to every `T`.
    pub compensation: f64,
    /// Mean number of simulated jumps per draw.
    pub mean_jumps: f64,
}

/// Monte Carlo estimate of `∫ f dPD*(α, θ) = E[T^{−θ} f(Δ_1/T, Δ_2/T, …)]`
/// where `Δ_1 > Δ_2 > …` are the points of a Poisson process with intensity
/// `α/Γ(1−α)·x^{−α−1}dx` and `T = ΣΔ_i`.
///
/// Points are generated in decreasing order by inverting the tail
/// `x^{−α}/Γ(1−α)` at the arrival times of a unit-rate process. The mass of
/// the points below `truncation` enters `T` through its mean
/// `α ε^{1−α}/Γ(2−α)`; those points are reported as dust.
pub fn poisson_stable_oracle<R, F>(
    alpha: f64,
    theta: f64,
    mut f: F,
    rng: &mut R,
    draws: usize,
    opts: OracleOptions,
) -> Result<OracleEstimate>
where
    R: Rng + ?Sized,
    F: FnMut(&MassPartition) -> f64,
{
    if !(alpha > 0.0 && alpha < 1.0) {
        bail!(Domain, "alpha must lie in (0, 1), got {alpha}");
    }
    if draws == 0 {
        bail!(Validation, "the oracle needs at least one draw");
    }
    if !(opts.truncation > 0.0) {
        bail!(Validation, "truncation must be positive");
    }
    let eps = opts.truncation;
    let g = gamma(1.0 - alpha);
    let compensation = alpha * libm::pow(eps, 1.0 - alpha) / gamma(2.0 - alpha);
    let mut mean = 0.0;
    let mut m2 = 0.0;
    let mut jumps_total = 0usize;
    let mut jumps: Vec<f64> = Vec::new();
    for i in 0..draws {
        jumps.clear();
        let mut arrival = 0.0;
        loop {
            let e: f64 = Exp1.sample(rng);
            arrival += e;
            let d = libm::pow(g * arrival, -1.0 / alpha);
            if d < eps {
                break;
            }
            jumps.push(d);
        }
        jumps_total += jumps.len();
        let total: f64 = jumps.iter().sum::<f64>() + compensation;
        let freqs: Vec<f64> = jumps.iter().map(|d| d / total).collect();
        let s = MassPartition::with_tolerance(freqs, 1e-9)?;
        let v = libm::pow(total, -theta) * f(&s);
        let delta = v - mean;
        mean += delta / (i + 1) as f64;
        m2 += delta * (v - mean);
    }
    let var = if draws > 1 {
        m2 / (draws - 1) as f64
    } else {
        0.0
    };
    Ok(OracleEstimate {
        mean,
        std_error: libm::sqrt(var / draws as f64),
        draws,
        truncation: eps,
        compensation,
        mean_jumps: jumps_total as f64 / draws as f64,
    })
}
