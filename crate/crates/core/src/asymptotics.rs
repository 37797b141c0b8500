//! Large-n theory for Rayleigh fading under the scaled target SNIR
//! gamma = 1/(alpha n).
//!
//! The rank-j decoding margins concentrate on the curve
//! `f(x) = -(1 + (1-xi) x / alpha) ln x - (1 - (1-xi) x)/alpha`, x = j/n.
//! The decodable fraction is the largest prefix of (0, 1] on which f stays at
//! or above the threshold c, and the asymptotic sum-rate follows as
//! `zeta / (alpha ln 2)`. A capture-only (no cancellation) baseline is
//! provided for comparison.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::roots::{find_root, RootBracket};

const INV_E: f64 = 0.36787944117144233; // 1/e

/// The limit curve f for a given (alpha, xi), with its stationary points
/// when they exist.
#[derive(Debug, Clone, Copy)]
pub struct AsymptoticCurve {
    pub alpha: f64,
    pub xi: f64,
    /// beta = alpha / (1 - xi); the curve shape depends only on beta.
    pub beta: f64,
    /// (x1, x2) roots of beta + x ln x = 0 with x1 < 1/e < x2, present iff
    /// beta < 1/e. x1 is a local minimum of f, x2 a local maximum.
    pub stationary: Option<(f64, f64)>,
}

impl AsymptoticCurve {
    pub fn new(alpha: f64, xi: f64) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive (got {alpha})"
            )));
        }
        if !(0.0..1.0).contains(&xi) {
            return Err(Error::InvalidParameter(format!(
                "xi must lie in [0, 1) (got {xi})"
            )));
        }
        let beta = alpha / (1.0 - xi);
        let stationary = if beta < INV_E {
            let g = |x: f64| beta + x * x.ln();
            let b1 = RootBracket::evaluate(&g, 1e-18, INV_E)?;
            let x1 = find_root(g, b1, 1e-14)?;
            let b2 = RootBracket::evaluate(&g, INV_E, 1.0)?;
            let x2 = find_root(g, b2, 1e-14)?;
            Some((x1, x2))
        } else {
            None
        };
        Ok(Self {
            alpha,
            xi,
            beta,
            stationary,
        })
    }

    /// f(x) for x in (0, 1].
    pub fn value(&self, x: f64) -> f64 {
        debug_assert!(x > 0.0 && x <= 1.0);
        -(1.0 + (1.0 - self.xi) * x / self.alpha) * x.ln()
            - (1.0 - (1.0 - self.xi) * x) / self.alpha
    }

    /// The beta-only part: f(x) = -1/alpha + g_beta(x).
    pub fn g_beta(beta: f64, x: f64) -> f64 {
        -(1.0 + x / beta) * x.ln() + x / beta
    }
}

/// Shape classification of the limit curve against the threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Regime {
    /// No stationary points: f decreases through c exactly once.
    Monotone,
    /// Local minimum stays at or above c: the crossing sits past the local
    /// maximum.
    BimodalAboveC,
    /// Local minimum dips below c: decoding is blocked at the dip and the
    /// decodable prefix ends before it.
    BimodalBlocking,
}

/// Decodable fraction and asymptotic sum-rate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct AsymptoticResult {
    pub zeta: f64,
    /// zeta / (alpha ln 2) in bit/s/Hz.
    pub u_infinity: f64,
    pub regime: Regime,
}

/// Largest x such that f >= c on all of (0, x), i.e. the asymptotic fraction
/// of decodable transmissions, with the resulting sum-rate.
pub fn zeta(curve: &AsymptoticCurve, c: f64) -> Result<AsymptoticResult> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "threshold c must be positive (got {c})"
        )));
    }
    let f = |x: f64| curve.value(x) - c;
    // f tends to +infinity as x -> 0+; a point comfortably inside the
    // positive region:
    let lo = (-(c + 1.0 / curve.alpha) - 30.0).exp().max(1e-300);
    if f(lo) <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "alpha = {} too small: decodable prefix below floating-point resolution",
            curve.alpha
        )));
    }

    let (z, regime) = match curve.stationary {
        Some((x1, _)) if curve.value(x1) < c => {
            let bracket = RootBracket::evaluate(&f, lo, x1)?;
            (find_root(f, bracket, 1e-12)?, Regime::BimodalBlocking)
        }
        Some((_, x2)) => {
            if f(x2) <= 0.0 {
                (x2, Regime::BimodalAboveC)
            } else {
                let bracket = RootBracket::evaluate(&f, x2, 1.0)?;
                (find_root(f, bracket, 1e-12)?, Regime::BimodalAboveC)
            }
        }
        None => {
            let bracket = RootBracket::evaluate(&f, lo, 1.0)?;
            (find_root(f, bracket, 1e-12)?, Regime::Monotone)
        }
    };
    Ok(AsymptoticResult {
        zeta: z,
        u_infinity: z / (curve.alpha * std::f64::consts::LN_2),
        regime,
    })
}

/// Residual-interference level above which the decodable fraction is a
/// continuous function of alpha (no jump): xi >= 1 - e/(3 - c).
pub fn critical_xi(c: f64) -> f64 {
    1.0 - std::f64::consts::E / (3.0 - c)
}

/// The alpha at which the local minimum of f touches c, where zeta(alpha)
/// jumps. None when no jump exists for this (xi, c) or it lies outside
/// the stationary-point domain.
pub fn jump_alpha(xi: f64, c: f64) -> Result<Option<f64>> {
    if xi >= critical_xi(c) {
        return Ok(None);
    }
    let alpha_top = (1.0 - xi) * INV_E;
    let dip = |alpha: f64| -> Result<f64> {
        let curve = AsymptoticCurve::new(alpha, xi)?;
        let (x1, _) = curve.stationary.expect("beta < 1/e in jump search");
        Ok(curve.value(x1) - c)
    };
    // The dip height is strictly increasing in alpha on (0, (1-xi)/e).
    let mut lo = 0.02 * alpha_top;
    if dip(lo)? >= 0.0 {
        while lo > 1e-6 && dip(lo)? >= 0.0 {
            lo *= 0.5;
        }
        if dip(lo)? >= 0.0 {
            return Ok(None);
        }
    }
    let mut hi = alpha_top * (1.0 - 1e-9);
    if dip(hi)? <= 0.0 {
        return Ok(None);
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if dip(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(0.5 * (lo + hi)))
}

/// Search controls for [`optimize_alpha`].
#[derive(Debug, Clone, Copy)]
pub struct SearchInterval {
    pub lo: f64,
    pub hi: f64,
    pub tol: f64,
}

impl SearchInterval {
    pub fn new(lo: f64, hi: f64, tol: f64) -> Result<Self> {
        if !(lo > 0.0 && hi > lo) || !(tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "degenerate search interval [{lo}, {hi}] / tol {tol}"
            )));
        }
        Ok(Self { lo, hi, tol })
    }
}

/// Maximize the asymptotic sum-rate over alpha for fixed (xi, c).
///
/// zeta(alpha) can jump where the dip of f touches c; the search localizes
/// the jump and optimizes each continuity piece (coarse grid, then
/// golden-section refinement). Returns (alpha*, U*).
pub fn optimize_alpha(xi: f64, c: f64, search: &SearchInterval) -> Result<(f64, f64)> {
    let u_of = |alpha: f64| -> Result<f64> {
        let curve = AsymptoticCurve::new(alpha, xi)?;
        Ok(zeta(&curve, c)?.u_infinity)
    };
    let mut pieces: Vec<(f64, f64)> = Vec::new();
    match jump_alpha(xi, c)? {
        Some(aj) if aj > search.lo && aj < search.hi => {
            // resolve the jump to 1e-4 and optimize each side
            let delta = 1e-4_f64.min(0.5 * (search.hi - search.lo));
            pieces.push((search.lo, (aj - delta).max(search.lo)));
            pieces.push((aj + delta * 1e-3, search.hi));
        }
        _ => pieces.push((search.lo, search.hi)),
    }

    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for (lo, hi) in pieces {
        if !(hi > lo) {
            continue;
        }
        let grid = 400;
        let mut best_i = 0usize;
        let mut best_u = f64::NEG_INFINITY;
        for i in 0..=grid {
            let a = lo + (hi - lo) * i as f64 / grid as f64;
            let u = u_of(a)?;
            if u > best_u {
                best_u = u;
                best_i = i;
            }
        }
        let a_lo = lo + (hi - lo) * best_i.saturating_sub(1) as f64 / grid as f64;
        let a_hi = lo + (hi - lo) * (best_i + 1).min(grid) as f64 / grid as f64;
        let (a_star, u_star) = golden_max(&u_of, a_lo, a_hi, search.tol)?;
        if u_star > best.1 {
            best = (a_star, u_star);
        }
    }
    Ok(best)
}

fn golden_max<F: Fn(f64) -> Result<f64>>(
    f: &F,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    let phi = 0.6180339887498949;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    while (b - a) > tol {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = f(x2)?;
        }
    }
    let mid = 0.5 * (a + b);
    Ok((mid, f(mid)?))
}

/// Mean decoded packets and sum-rate of a capture-only receiver (no
/// cancellation): every packet is decoded independently.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CaptureResult {
    /// Mean decoded packets (1 - eps) n / (1 + gamma)^{n-1}.
    pub m_n: f64,
    /// Finite-n sum-rate log2(1 + gamma) m_n.
    pub u_n: f64,
    /// Limit under gamma = 1/(alpha n): (1 - eps) e^{-1/alpha} / (alpha ln 2).
    pub u_infinity: f64,
}

/// Capture-only baseline at finite n.
pub fn capture_baseline(n: usize, gamma: f64, epsilon: f64) -> Result<CaptureResult> {
    if n < 1 {
        return Err(Error::InvalidParameter("need n >= 1".to_string()));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive (got {gamma})"
        )));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1) (got {epsilon})"
        )));
    }
    let m_n = ((1.0 - epsilon).ln() + (n as f64).ln() - (n as f64 - 1.0) * gamma.ln_1p()).exp();
    let u_n = gamma.ln_1p() / std::f64::consts::LN_2 * m_n;
    let alpha = 1.0 / (gamma * n as f64);
    let u_infinity = (1.0 - epsilon) * (-1.0 / alpha).exp() / (alpha * std::f64::consts::LN_2);
    Ok(CaptureResult {
        m_n,
        u_n,
        u_infinity,
    })
}

/// Sum-rate delivered by `mean_decoded` packets per slot at target SNIR
/// `gamma`: U = log2(1 + gamma) * mean_decoded.
pub fn sum_rate(n: usize, gamma: f64, mean_decoded: f64) -> Result<f64> {
    if !(0.0..=n as f64).contains(&mean_decoded) {
        return Err(Error::InvalidParameter(format!(
            "mean_decoded = {mean_decoded} outside [0, {n}]"
        )));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must be positive (got {gamma})"
        )));
    }
    Ok(gamma.ln_1p() / std::f64::consts::LN_2 * mean_decoded)
}

#[cfg(test)]
mod tests {
    use super::*;

    const C: f64 = 0.1053605156578263;

    #[test]
    fn curve_fixed_points() {
        // f(1) = -xi/alpha
        let c0 = AsymptoticCurve::new(0.32, 0.0).unwrap();
        assert!(c0.value(1.0).abs() < 1e-14);
        let c1 = AsymptoticCurve::new(0.4, 0.25).unwrap();
        assert!((c1.value(1.0) - (-0.25 / 0.4)).abs() < 1e-13);

        // beta = 1/e: f(1/e) = 3 - e/(1-xi)
        let ce = AsymptoticCurve::new(INV_E, 0.0).unwrap();
        assert!((ce.value(INV_E) - (3.0 - std::f64::consts::E)).abs() < 1e-12);
    }

    #[test]
    fn curve_matches_beta_decomposition() {
        for &(alpha, xi) in &[(0.32, 0.0), (0.5, 0.2), (0.9, 0.6)] {
            let curve = AsymptoticCurve::new(alpha, xi).unwrap();
            let mut x = 0.01;
            while x <= 1.0 {
                let via_g = -1.0 / alpha + AsymptoticCurve::g_beta(curve.beta, x);
                assert!(
                    (curve.value(x) - via_g).abs() < 1e-12,
                    "alpha={alpha} xi={xi} x={x}"
                );
                x += 0.0173;
            }
        }
    }

    /// Grid-scan oracle at step 1e-6 for the stationary equation.
    fn scan_root(beta: f64, lo: f64, hi: f64) -> f64 {
        let mut best = lo;
        let mut best_val = f64::INFINITY;
        let steps = ((hi - lo) / 1e-6) as usize;
        for i in 0..=steps {
            let x = lo + 1e-6 * i as f64;
            let v = (beta + x * x.ln()).abs();
            if v < best_val {
                best_val = v;
                best = x;
            }
        }
        best
    }

    #[test]
    fn stationary_points() {
        let curve = AsymptoticCurve::new(0.32, 0.0).unwrap();
        let (x1, x2) = curve.stationary.unwrap();
        let o1 = scan_root(0.32, 1e-6, INV_E);
        let o2 = scan_root(0.32, INV_E, 1.0);
        assert!((x1 - o1).abs() < 2e-6, "{x1} vs {o1}");
        assert!((x2 - o2).abs() < 2e-6, "{x2} vs {o2}");
        assert!((x1 - 0.199).abs() < 3e-3);
        assert!((x2 - 0.57).abs() < 2e-3);
        assert!(x1 < INV_E && INV_E < x2);
        // dip height quoted against the threshold scale
        assert!((curve.value(x1) - 0.115).abs() < 1e-3);

        // existence boundary: beta just below vs just above 1/e
        assert!(AsymptoticCurve::new(INV_E - 1e-4, 0.0)
            .unwrap()
            .stationary
            .is_some());
        assert!(AsymptoticCurve::new(INV_E + 1e-4, 0.0)
            .unwrap()
            .stationary
            .is_none());
        assert!(AsymptoticCurve::new(0.38, 0.0)
            .unwrap()
            .stationary
            .is_none());
    }

    #[test]
    fn lower_stationary_point_increases_with_beta() {
        let mut last = 0.0;
        for i in 1..=20 {
            let beta = INV_E * i as f64 / 21.0;
            let curve = AsymptoticCurve::new(beta, 0.0).unwrap();
            let (x1, _) = curve.stationary.unwrap();
            assert!(x1 > last, "beta={beta}");
            last = x1;
        }
        // approaching the merge point: x1 -> 1/e as beta -> 1/e
        let near = AsymptoticCurve::new(INV_E * (1.0 - 1e-4), 0.0).unwrap();
        let (x1, x2) = near.stationary.unwrap();
        assert!(x1 > last);
        assert!(x1 < INV_E && x1 > INV_E - 1e-2);
        assert!(x2 > INV_E && x2 < INV_E + 1e-2);
    }

    #[test]
    fn zeta_reference_values() {
        let r32 = zeta(&AsymptoticCurve::new(0.32, 0.0).unwrap(), C).unwrap();
        assert_eq!(r32.regime, Regime::BimodalAboveC);
        assert!((r32.zeta - 0.8787).abs() < 5e-4, "zeta = {}", r32.zeta);
        assert!(
            (r32.u_infinity - 3.96).abs() < 0.02,
            "u = {}",
            r32.u_infinity
        );

        let r38 = zeta(&AsymptoticCurve::new(0.38, 0.0).unwrap(), C).unwrap();
        assert_eq!(r38.regime, Regime::Monotone);
        assert!((r38.zeta - 0.8834).abs() < 5e-4, "zeta = {}", r38.zeta);
    }

    #[test]
    fn zeta_definition_holds() {
        for &(alpha, xi) in &[(0.32, 0.0), (0.38, 0.0), (0.25, 0.0), (0.5, 0.3)] {
            let curve = AsymptoticCurve::new(alpha, xi).unwrap();
            let r = zeta(&curve, C).unwrap();
            let delta = 1e-6;
            let mut min_f = f64::INFINITY;
            let grid = 10_000;
            for i in 1..grid {
                let x = delta + (r.zeta - 2.0 * delta) * i as f64 / grid as f64;
                min_f = min_f.min(curve.value(x));
            }
            assert!(min_f >= C - 1e-9, "alpha={alpha} xi={xi}: min f {min_f}");
            if r.regime != Regime::BimodalAboveC || curve.value(1.0_f64.min(r.zeta + delta)) < C {
                assert!(
                    curve.value((r.zeta + delta).min(1.0)) < C,
                    "alpha={alpha} xi={xi}: no crossing just past zeta"
                );
            }
        }
    }

    #[test]
    fn zeta_matches_brute_force_scan() {
        // sup-scan at step 1e-5 over a 20-point (alpha, xi) grid
        for &alpha in &[0.22, 0.3, 0.38, 0.5, 0.9] {
            for &xi in &[0.0, 0.05, 0.3, 0.6] {
                let curve = AsymptoticCurve::new(alpha, xi).unwrap();
                let r = zeta(&curve, C).unwrap();
                let mut z_scan = 1e-5;
                let mut x = 1e-5;
                while x <= 1.0 {
                    if curve.value(x) < C {
                        break;
                    }
                    z_scan = x;
                    x += 1e-5;
                }
                assert!(
                    (r.zeta - z_scan).abs() < 1e-4,
                    "alpha={alpha} xi={xi}: {} vs scan {z_scan}",
                    r.zeta
                );
            }
        }
    }

    #[test]
    fn continuity_of_zeta_across_alpha() {
        // xi above the critical level: no jump; xi = 0: jump present.
        let crit = critical_xi(C);
        assert!((crit - 0.0609).abs() < 5e-4, "critical xi = {crit}");

        let max_step = |xi: f64| -> f64 {
            let mut last = None;
            let mut worst: f64 = 0.0;
            let mut a = 0.30;
            while a <= 0.45 {
                let z = zeta(&AsymptoticCurve::new(a, xi).unwrap(), C).unwrap().zeta;
                if let Some(prev) = last {
                    worst = worst.max((z - prev) as f64).max(prev - z);
                }
                last = Some(z);
                a += 0.0005;
            }
            worst
        };
        assert!(max_step(0.07) < 0.02, "xi=0.07 should be continuous");
        assert!(max_step(0.0) > 0.3, "xi=0 should jump");
    }

    #[test]
    fn optimal_alpha_reference() {
        let search = SearchInterval::new(0.05, 2.0, 1e-5).unwrap();
        let (a0, u0) = optimize_alpha(0.0, C, &search).unwrap();
        assert!(u0 > 3.5 && u0 < 4.2, "u*(0) = {u0}");
        assert!(a0 > 0.25 && a0 < 0.4, "alpha*(0) = {a0}");
        let (_, u1) = optimize_alpha(0.1, C, &search).unwrap();
        assert!(u1 > 1.7 && u1 < 2.3, "u*(0.1) = {u1}");
        assert!(SearchInterval::new(0.5, 0.5, 1e-5).is_err());
    }

    #[test]
    fn capture_reference() {
        let r1 = capture_baseline(1, 0.3, 0.1).unwrap();
        assert!((r1.m_n - 0.9).abs() < 1e-14);

        // alpha = 1 maximizes: U* = (1 - eps)/(e ln 2)
        let n = 10_000usize;
        let r = capture_baseline(n, 1.0 / n as f64, 0.1).unwrap();
        let u_star = 0.9 / (std::f64::consts::E * std::f64::consts::LN_2);
        assert!((r.u_infinity - u_star).abs() < 1e-12);
        assert!((u_star - 0.4777).abs() < 5e-5);
        // finite-n sum-rate within 1% of the limit at n = 1e4
        assert!(((r.u_n - r.u_infinity) / r.u_infinity).abs() < 0.01);

        assert!(capture_baseline(0, 1.0, 0.1).is_err());
        assert!(capture_baseline(5, 1.0, 1.5).is_err());
    }

    #[test]
    fn sum_rate_examples() {
        assert_eq!(sum_rate(10, 0.5, 0.0).unwrap(), 0.0);
        assert!((sum_rate(10, 1.0, 1.0).unwrap() - 1.0).abs() < 1e-15);
        // scaled regime consistency: U_n within 2% of zeta/(alpha ln 2)
        let n = 1000usize;
        let alpha = 0.32;
        let z = zeta(&AsymptoticCurve::new(alpha, 0.0).unwrap(), C).unwrap();
        let u_n = sum_rate(n, 1.0 / (alpha * n as f64), z.zeta * n as f64).unwrap();
        assert!(((u_n - z.u_infinity) / z.u_infinity).abs() < 0.02);
        assert!(sum_rate(10, 0.5, 11.0).is_err());
        assert!(sum_rate(10, 0.5, -0.1).is_err());
    }
}
