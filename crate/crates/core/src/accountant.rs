//! Rényi-DP accountant for the Poisson-subsampled Gaussian mechanism.
//!
//! Each charged step adds, per order α, the RDP of one application of the
//! sampled Gaussian with sampling ratio `q` and noise multiplier `σ`:
//!
//! ```text
//! RDP(α) = ln A_α / (α − 1),
//! A_α    = E_{z ~ N(0, σ²)} [ ((1 − q) + q·exp((2z − 1) / (2σ²)))^α ]
//! ```
//!
//! Integer orders use the binomial expansion
//! `A_α = Σ_k C(α, k) (1 − q)^{α−k} q^k exp((k² − k) / (2σ²))`; fractional
//! orders integrate the expectation numerically. Composition over steps is
//! additive, and the ledger converts to `(ε, δ)` by
//! `ε = min_α RDP(α) + ln(1/δ) / (α − 1)` or, at fixed ε,
//! `δ = min_α exp((α − 1)(RDP(α) − ε))`.

use alloc::vec::Vec;

use crate::math::{exp, floor, ln, ln_gamma, log_add_exp, log_sum_exp};
use crate::{Error, Result};

/// Default order grid: quarter steps up to 12, integers up to 64, then a
/// sparse tail for very small spends.
pub fn default_orders() -> Vec<f64> {
    let mut orders = alloc::vec![1.1, 1.25];
    let mut a = 1.5;
    while a <= 12.0 {
        orders.push(a);
        a += 0.25;
    }
    orders.extend((13..=64).map(f64::from));
    orders.extend([80.0, 96.0, 128.0, 192.0, 256.0, 512.0]);
    orders
}

fn is_integer(order: f64) -> bool {
    floor(order) == order
}

fn check_mechanism(q: f64, sigma: f64) -> Result<()> {
    if !(q > 0.0 && q <= 1.0) {
        return Err(Error::InvalidConfig(alloc::format!("sampling ratio {q} outside (0, 1]")));
    }
    if sigma == 0.0 {
        return Err(Error::InfinitePrivacyLoss);
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::InvalidConfig(alloc::format!("noise multiplier {sigma} must be positive")));
    }
    Ok(())
}

fn log_binomial(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `ln A_α` by binomial expansion; `order` must be an integer ≥ 2 and
/// `q < 1`.
fn log_a_integer(order: f64, q: f64, sigma: f64) -> f64 {
    let n = order as u64;
    let (lq, l1q) = (ln(q), ln(1.0 - q));
    let two_s2 = 2.0 * sigma * sigma;
    let terms: Vec<f64> = (0..=n)
        .map(|k| {
            let kf = k as f64;
            log_binomial(order, kf) + (order - kf) * l1q + kf * lq + (kf * kf - kf) / two_s2
        })
        .collect();
    log_sum_exp(&terms)
}

/// `ln A_α` by trapezoidal quadrature of the expectation. The integrand is
/// a pair of Gaussian-like bumps centred at 0 and α (width σ) and analytic
/// in a strip of half-width πσ², so the trapezoid rule converges
/// geometrically once the step is a fraction of both σ and σ².
fn log_a_quadrature(order: f64, q: f64, sigma: f64) -> f64 {
    let (lq, l1q) = (ln(q), ln(1.0 - q));
    let two_s2 = 2.0 * sigma * sigma;
    let log_norm = -ln(sigma) - 0.5 * ln(2.0 * core::f64::consts::PI);
    let lo = -12.0 * sigma;
    let hi = order + 12.0 * sigma;
    let mut h = (sigma / 10.0).min(sigma * sigma / 4.0);
    let max_points = 2_000_000.0;
    if (hi - lo) / h > max_points {
        h = (hi - lo) / max_points;
    }
    let n = ((hi - lo) / h) as usize + 1;
    let mut logs = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let z = lo + i as f64 * h;
        let mix = log_add_exp(l1q, lq + (2.0 * z - 1.0) / two_s2);
        logs.push(log_norm - z * z / two_s2 + order * mix);
    }
    log_sum_exp(&logs) + ln(h)
}

/// Per-step RDP of the sampled Gaussian at `order`.
pub fn rdp_step(order: f64, q: f64, sigma: f64) -> Result<f64> {
    check_mechanism(q, sigma)?;
    if !(order > 1.0) {
        return Err(Error::InvalidConfig(alloc::format!("Rényi order {order} must exceed 1")));
    }
    if q == 1.0 {
        return Ok(order / (2.0 * sigma * sigma));
    }
    let log_a = if is_integer(order) { log_a_integer(order, q, sigma) } else { log_a_quadrature(order, q, sigma) };
    // A_α ≥ 1 analytically; rounding can dip just below
    Ok((log_a / (order - 1.0)).max(0.0))
}

/// An `(ε, δ)` conversion result and the order that achieved it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Conversion {
    pub value: f64,
    /// `None` when nothing has been charged.
    pub order: Option<f64>,
}

/// Accumulated RDP ledger over a fixed order grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PrivacyAccountant {
    orders: Vec<f64>,
    rdp: Vec<f64>,
    steps: u64,
    // last (q, σ) and its per-step RDP vector
    cache: Option<(f64, f64, Vec<f64>)>,
}

impl Default for PrivacyAccountant {
    fn default() -> Self {
        Self::new()
    }
}

impl PrivacyAccountant {
    pub fn new() -> Self {
        Self::with_orders(default_orders()).expect("default orders are valid")
    }

    pub fn with_orders(orders: Vec<f64>) -> Result<Self> {
        if orders.is_empty() || orders.iter().any(|&a| !(a > 1.0) || !a.is_finite()) {
            return Err(Error::InvalidConfig("Rényi orders must be finite and greater than 1".into()));
        }
        let rdp = alloc::vec![0.0; orders.len()];
        Ok(Self { orders, rdp, steps: 0, cache: None })
    }

    pub fn orders(&self) -> &[f64] {
        &self.orders
    }

    /// Accumulated RDP per order, aligned with [`Self::orders`].
    pub fn rdp(&self) -> &[f64] {
        &self.rdp
    }

    pub fn steps_charged(&self) -> u64 {
        self.steps
    }

    fn step_vector(&mut self, q: f64, sigma: f64) -> Result<&[f64]> {
        let hit =
            matches!(&self.cache, Some((cq, cs, _)) if cq.to_bits() == q.to_bits() && cs.to_bits() == sigma.to_bits());
        if !hit {
            let v = self.orders.iter().map(|&a| rdp_step(a, q, sigma)).collect::<Result<Vec<_>>>()?;
            self.cache = Some((q, sigma, v));
        }
        Ok(&self.cache.as_ref().expect("filled above").2)
    }

    /// Charges one step of the sampled Gaussian with ratio `q`, multiplier `σ`.
    pub fn accumulate(&mut self, q: f64, sigma: f64) -> Result<()> {
        self.accumulate_steps(q, sigma, 1)
    }

    /// Charges `count` identical steps at once.
    pub fn accumulate_steps(&mut self, q: f64, sigma: f64, count: u64) -> Result<()> {
        check_mechanism(q, sigma)?;
        let per_step = self.step_vector(q, sigma)?.to_vec();
        for (acc, s) in self.rdp.iter_mut().zip(&per_step) {
            *acc += s * count as f64;
        }
        self.steps += count;
        Ok(())
    }

    /// Smallest ε such that the run is (ε, δ)-DP.
    pub fn epsilon(&self, delta: f64) -> Result<Conversion> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidConfig(alloc::format!("target delta {delta} outside (0, 1)")));
        }
        if self.steps == 0 {
            return Ok(Conversion { value: 0.0, order: None });
        }
        let log_inv_delta = -ln(delta);
        let (value, order) = self
            .orders
            .iter()
            .zip(&self.rdp)
            .map(|(&a, &r)| (r + log_inv_delta / (a - 1.0), a))
            .fold((f64::INFINITY, self.orders[0]), |best, cur| if cur.0 < best.0 { cur } else { best });
        Ok(Conversion { value, order: Some(order) })
    }

    /// Smallest δ (clamped to 1) such that the run is (ε, δ)-DP.
    pub fn delta(&self, epsilon: f64) -> Result<Conversion> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("target epsilon {epsilon} must be non-negative")));
        }
        if self.steps == 0 {
            return Ok(Conversion { value: 0.0, order: None });
        }
        let (log_delta, order) = self
            .orders
            .iter()
            .zip(&self.rdp)
            .map(|(&a, &r)| ((a - 1.0) * (r - epsilon), a))
            .fold((f64::INFINITY, self.orders[0]), |best, cur| if cur.0 < best.0 { cur } else { best });
        Ok(Conversion { value: exp(log_delta.min(0.0)), order: Some(order) })
    }
}
