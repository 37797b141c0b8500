//! Exact finite-n analysis of the SIC decoding chain under Rayleigh fading.
//!
//! Rank-j decoding success is equivalent to `V_j >= c` for a weighted sum of
//! independent unit exponentials `V_j = sum_k b_jk X_k`; this module builds
//! the weight rows, their closed-form moments, and the exact marginal success
//! probabilities `p_V(j)` by numerical transform inversion (perfect
//! cancellation only, xi = 0).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::AsymptoticCurve;
use crate::error::{Error, Result};
use crate::fading::CalibratedThreshold;
use crate::numerics::laplace::{ExponentialSum, InversionParams};

/// Scenario parameters: node count, target SNIR, residual interference
/// fraction, and the calibrated decoding threshold.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    pub n: usize,
    /// Target SNIR (linear scale).
    pub gamma: f64,
    /// Residual interference fraction in [0, 1); 0 is perfect cancellation.
    pub xi: f64,
    pub threshold: CalibratedThreshold,
}

impl SystemConfig {
    pub fn with_gamma(
        n: usize,
        gamma: f64,
        xi: f64,
        threshold: CalibratedThreshold,
    ) -> Result<Self> {
        if n < 1 {
            return Err(Error::InvalidParameter("need n >= 1".to_string()));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "gamma must be positive (got {gamma})"
            )));
        }
        if !(0.0..1.0).contains(&xi) {
            return Err(Error::InvalidParameter(format!(
                "xi must lie in [0, 1) (got {xi})"
            )));
        }
        Ok(Self {
            n,
            gamma,
            xi,
            threshold,
        })
    }

    /// Scaled regime: gamma = 1 / (alpha n).
    pub fn with_alpha(
        n: usize,
        alpha: f64,
        xi: f64,
        threshold: CalibratedThreshold,
    ) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive (got {alpha})"
            )));
        }
        Self::with_gamma(n, 1.0 / (alpha * n as f64), xi, threshold)
    }

    /// The scale constant alpha = 1 / (gamma n).
    pub fn alpha(&self) -> f64 {
        1.0 / (self.gamma * self.n as f64)
    }

    /// Common factor 1 + j gamma - (j-1) gamma xi of the rank-j weight row.
    pub(crate) fn lambda(&self, j: usize) -> f64 {
        1.0 + j as f64 * self.gamma - (j as f64 - 1.0) * self.gamma * self.xi
    }
}

/// One row of decoding weights: `V_j = sum_{k=1..n} b_jk X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct SicCoefficients {
    pub j: usize,
    /// b_{jk} for k = 1..n (index k-1).
    pub row: Vec<f64>,
}

/// Rank-j weight row: b_jk = -gamma xi for k < j and
/// (1 + j gamma - (j-1) gamma xi)/k - gamma for k >= j.
pub fn coefficients(config: &SystemConfig, j: usize) -> Result<SicCoefficients> {
    if j < 1 || j > config.n {
        return Err(Error::InvalidParameter(format!(
            "rank j = {j} out of range 1..={}",
            config.n
        )));
    }
    let lambda = config.lambda(j);
    let mut row = Vec::with_capacity(config.n);
    for k in 1..=config.n {
        if k < j {
            row.push(-config.gamma * config.xi);
        } else {
            row.push(lambda / k as f64 - config.gamma);
        }
    }
    Ok(SicCoefficients { j, row })
}

/// Compensated (Kahan) running sum.
#[derive(Debug, Clone, Copy, Default)]
struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Harmonic numbers H_0..H_n by compensated summation.
pub fn harmonic_numbers(n: usize) -> Vec<f64> {
    let mut h = Vec::with_capacity(n + 1);
    let mut acc = Kahan::default();
    h.push(0.0);
    for k in 1..=n {
        acc.add(1.0 / k as f64);
        h.push(acc.sum);
    }
    h
}

/// Closed-form mean and standard deviation sequences of the rank variables.
#[derive(Debug, Clone)]
pub struct MomentProfile {
    pub n: usize,
    pub gamma: f64,
    pub xi: f64,
    /// mu_j for j = 1..n (index j-1).
    pub mu: Vec<f64>,
    /// sigma_j for j = 1..n (index j-1).
    pub sigma: Vec<f64>,
    /// H_0..H_n.
    pub harmonics: Vec<f64>,
}

impl MomentProfile {
    /// Slope factor A_j(n) = a_j(n) = 1 + (xi + (1-xi) j) / (alpha n).
    pub fn slope_factor(&self, j: usize) -> f64 {
        1.0 + self.gamma * (self.xi + (1.0 - self.xi) * j as f64)
    }

    /// Offset B_j(n) = (n - (1-xi)(j-1)) / (alpha n).
    pub fn offset(&self, j: usize) -> f64 {
        self.gamma * (self.n as f64 - (1.0 - self.xi) * (j as f64 - 1.0))
    }

    /// Mean absolute deviation between the mean sequence and the limit curve
    /// f evaluated at j/n.
    pub fn mean_abs_deviation(&self) -> f64 {
        let alpha = 1.0 / (self.gamma * self.n as f64);
        let curve = AsymptoticCurve::new(alpha, self.xi).expect("valid curve parameters");
        let mut acc = Kahan::default();
        for j in 1..=self.n {
            acc.add((self.mu[j - 1] - curve.value(j as f64 / self.n as f64)).abs());
        }
        acc.sum / self.n as f64
    }

    /// Bound (H_n + (ln n + 1)/alpha) / n on the mean absolute deviation.
    pub fn mean_abs_deviation_bound(&self) -> f64 {
        let alpha = 1.0 / (self.gamma * self.n as f64);
        let n = self.n as f64;
        (self.harmonics[self.n] + ((n).ln() + 1.0) / alpha) / n
    }
}

/// Closed-form moment sequences: for each rank j,
/// mu_j = A_j (H_n - H_{j-1}) - B_j and
/// sigma_j^2 = a_j^2 S2_j - 2 a_j gamma (H_n - H_{j-1})
///            + gamma^2 (n - j + 1 + (j-1) xi^2)
/// with S2_j the tail sum of 1/k^2.
pub fn moment_profile(config: &SystemConfig) -> MomentProfile {
    let n = config.n;
    let harmonics = harmonic_numbers(n);
    // backward tail sums of 1/k^2, compensated
    let mut tail_sq = vec![0.0; n + 2];
    let mut acc = Kahan::default();
    for k in (1..=n).rev() {
        acc.add(1.0 / (k as f64 * k as f64));
        tail_sq[k] = acc.sum;
    }

    let gamma = config.gamma;
    let xi = config.xi;
    let mut mu = Vec::with_capacity(n);
    let mut sigma = Vec::with_capacity(n);
    for j in 1..=n {
        let a = config.lambda(j);
        let h_tail = harmonics[n] - harmonics[j - 1];
        let b = gamma * (n as f64 - (1.0 - xi) * (j as f64 - 1.0));
        mu.push(a * h_tail - b);
        let var = a * a * tail_sq[j] - 2.0 * a * gamma * h_tail
            + gamma * gamma * ((n - j + 1) as f64 + (j as f64 - 1.0) * xi * xi);
        sigma.push(var.max(0.0).sqrt());
    }
    MomentProfile {
        n,
        gamma,
        xi,
        mu,
        sigma,
        harmonics,
    }
}

/// Reference evaluation of the rank-j mean and variance as direct compensated
/// sums of the weight row and its squares.
pub fn direct_moment_sums(config: &SystemConfig, j: usize) -> Result<(f64, f64)> {
    let coeffs = coefficients(config, j)?;
    let mut m = Kahan::default();
    let mut v = Kahan::default();
    for &b in &coeffs.row {
        m.add(b);
        v.add(b * b);
    }
    Ok((m.sum, v.sum))
}

/// Exact marginal success probabilities p_V(j) = P(V_j >= c) for j = 1..n.
///
/// Restricted to perfect cancellation (xi = 0); residual interference makes
/// the joint law analytically inaccessible and is handled by Monte Carlo.
/// Per-rank inversions are independent and run in parallel with results
/// identical to sequential evaluation.
pub fn pv_curve(config: &SystemConfig, params: &InversionParams) -> Result<Vec<f64>> {
    if config.xi > 0.0 {
        return Err(Error::ResidualInterferenceUnsupported { xi: config.xi });
    }
    let c = config.threshold.c;
    (1..=config.n)
        .into_par_iter()
        .map(|j| {
            let coeffs = coefficients(config, j)?;
            ExponentialSum::new(&coeffs.row).ccdf(c, params)
        })
        .collect()
}

/// A row of the exact curve: rank, normalized rank, closed-form moments, and
/// the marginal success probability.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CurveRow {
    pub j: usize,
    pub x: f64,
    pub mu: f64,
    pub sigma: f64,
    pub p_v: f64,
}

/// Moments and marginal probabilities in one table (xi = 0).
pub fn curve_rows(config: &SystemConfig, params: &InversionParams) -> Result<Vec<CurveRow>> {
    let profile = moment_profile(config);
    let pv = pv_curve(config, params)?;
    Ok((1..=config.n)
        .map(|j| CurveRow {
            j,
            x: j as f64 / config.n as f64,
            mu: profile.mu[j - 1],
            sigma: profile.sigma[j - 1],
            p_v: pv[j - 1],
        })
        .collect())
}

/// Normalized marginal curve with the location where it first drops below
/// one half, reported alongside the asymptotic decodable fraction for
/// comparison.
#[derive(Debug, Clone)]
pub struct TransitionProfile {
    /// (j/n, p_V(j)) pairs.
    pub points: Vec<(f64, f64)>,
    /// Smallest j/n with p_V(j) < 1/2, if the curve drops that far.
    pub location: Option<f64>,
    /// Asymptotic decodable fraction for the same (alpha, xi, c).
    pub zeta: f64,
}

/// Exact marginal curve plus its transition diagnostic (xi = 0).
pub fn transition_profile(
    config: &SystemConfig,
    params: &InversionParams,
) -> Result<TransitionProfile> {
    let pv = pv_curve(config, params)?;
    let n = config.n as f64;
    let points: Vec<(f64, f64)> = pv
        .iter()
        .enumerate()
        .map(|(i, p)| ((i + 1) as f64 / n, *p))
        .collect();
    let location = points.iter().find(|(_, p)| *p < 0.5).map(|(x, _)| *x);
    let curve = AsymptoticCurve::new(config.alpha(), config.xi)?;
    let zeta = crate::asymptotics::zeta(&curve, config.threshold.c)?.zeta;
    Ok(TransitionProfile {
        points,
        location,
        zeta,
    })
}
