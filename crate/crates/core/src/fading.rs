//! Channel gain models (mean-1 nonnegative random variables), power-control
//! calibration, and descending order-statistics sampling.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::numerics::roots::{find_root, RootBracket};
use crate::numerics::special::{inverse_regularized_gamma, ln_gamma, regularized_gamma_pair};

/// A mean-1 channel power gain distribution with analytic CCDF, inverse CCDF
/// and density. Values are immutable; all methods are pure.
#[derive(Debug, Clone, PartialEq)]
pub enum FadingModel {
    /// Rayleigh fading: the power gain is unit exponential, G(t) = e^{-t}.
    Rayleigh,
    /// Mean-1 Gamma gain with shape `eta` (rate also `eta`); `1/eta` is the
    /// squared coefficient of variation.
    Gamma { eta: f64 },
    /// Rayleigh fading combined with two-level transmit power randomization
    /// of spread `b`: the gain is X*Z with Z = 1/b w.p. b/(1+b) and Z = b
    /// w.p. 1/(1+b).
    TwoLevel { b: f64 },
}

/// Rayleigh (unit exponential) gain model.
pub fn make_rayleigh() -> FadingModel {
    FadingModel::Rayleigh
}

/// Mean-1 Gamma gain model with shape `eta > 0`.
pub fn make_gamma(eta: f64) -> Result<FadingModel> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "gamma shape must be positive (got {eta})"
        )));
    }
    Ok(FadingModel::Gamma { eta })
}

/// Two-level power randomization over Rayleigh fading, spread `b >= 1`.
pub fn make_two_level(b: f64) -> Result<FadingModel> {
    if !(b >= 1.0) || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "two-level spread must satisfy b >= 1 (got {b})"
        )));
    }
    Ok(FadingModel::TwoLevel { b })
}

impl FadingModel {
    /// Model selection string: "rayleigh", "gamma:<eta>", "two-level:<b>".
    pub fn name(&self) -> String {
        match self {
            FadingModel::Rayleigh => "rayleigh".to_string(),
            FadingModel::Gamma { eta } => format!("gamma:{eta}"),
            FadingModel::TwoLevel { b } => format!("two-level:{b}"),
        }
    }

    /// Parse a model selection string.
    pub fn parse(spec: &str) -> Result<FadingModel> {
        let spec = spec.trim();
        if spec == "rayleigh" {
            return Ok(FadingModel::Rayleigh);
        }
        if let Some(rest) = spec.strip_prefix("gamma:") {
            let eta: f64 = rest
                .parse()
                .map_err(|_| Error::InvalidParameter(format!("bad gamma shape in '{spec}'")))?;
            return make_gamma(eta);
        }
        if let Some(rest) = spec.strip_prefix("two-level:") {
            let b: f64 = rest.parse().map_err(|_| {
                Error::InvalidParameter(format!("bad two-level spread in '{spec}'"))
            })?;
            return make_two_level(b);
        }
        Err(Error::InvalidParameter(format!(
            "unknown fading model '{spec}' (expected rayleigh, gamma:<eta>, two-level:<b>)"
        )))
    }

    /// CCDF G(t) = P(Y > t).
    pub fn ccdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        match self {
            FadingModel::Rayleigh => (-t).exp(),
            FadingModel::Gamma { eta } => regularized_gamma_pair(*eta, eta * t)
                .map(|(_, q)| q)
                .unwrap_or(f64::NAN),
            FadingModel::TwoLevel { b } => ((b * (-t * b).exp()) + (-t / b).exp()) / (1.0 + b),
        }
    }

    /// Inverse CCDF: the t >= 0 with G(t) = u, for u in (0, 1].
    pub fn inverse_ccdf(&self, u: f64) -> f64 {
        if u >= 1.0 {
            return 0.0;
        }
        assert!(u > 0.0, "inverse CCDF needs u in (0, 1]");
        match self {
            FadingModel::Rayleigh => -u.ln(),
            FadingModel::Gamma { eta } => inverse_regularized_gamma(*eta, 1.0 - u)
                .map(|x| x / eta)
                .unwrap_or(f64::NAN),
            FadingModel::TwoLevel { b } => {
                let hi = b * (1.0 / u).ln() + 1.0;
                let g = |t: f64| self.ccdf(t) - u;
                let bracket = RootBracket::new(0.0, hi, 1.0 - u, g(hi))
                    .expect("two-level inverse CCDF bracket");
                find_root(g, bracket, 1e-14).expect("two-level inverse CCDF")
            }
        }
    }

    /// Squared coefficient of variation of the gain (variance over squared
    /// mean; the mean is 1 by construction).
    pub fn scov(&self) -> f64 {
        match self {
            FadingModel::Rayleigh => 1.0,
            FadingModel::Gamma { eta } => 1.0 / eta,
            FadingModel::TwoLevel { b } => 2.0 * (b + 1.0 / b - 1.0) - 1.0,
        }
    }

    /// Density of the gain.
    pub fn pdf(&self, t: f64) -> f64 {
        if t < 0.0 {
            return 0.0;
        }
        match self {
            FadingModel::Rayleigh => (-t).exp(),
            FadingModel::Gamma { eta } => {
                if t == 0.0 {
                    return if *eta > 1.0 {
                        0.0
                    } else if *eta == 1.0 {
                        1.0
                    } else {
                        f64::INFINITY
                    };
                }
                (eta * eta.ln() + (eta - 1.0) * t.ln() - eta * t - ln_gamma(*eta)).exp()
            }
            FadingModel::TwoLevel { b } => {
                (b * b * (-t * b).exp() + (-t / b).exp() / b) / (1.0 + b)
            }
        }
    }

    /// One gain draw by inverse-CCDF sampling (a single RNG draw).
    fn draw<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        // map [0,1) onto (0,1] so the inverse CCDF stays finite
        self.inverse_ccdf(1.0 - u)
    }

    /// n iid gains, sorted descending. Deterministic given the seed; the
    /// stable sort breaks ties by original draw index.
    pub fn sample_gains(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_gains_with(&mut rng, n)
    }

    /// Same as [`FadingModel::sample_gains`] with a caller-provided stream.
    pub fn sample_gains_with<R: Rng>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let mut gains: Vec<f64> = (0..n).map(|_| self.draw(rng)).collect();
        gains.sort_by(|a, b| b.total_cmp(a));
        gains
    }
}

impl Serialize for FadingModel {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for FadingModel {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        FadingModel::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Power-control calibration: the decoding threshold c = G^{-1}(1 - epsilon)
/// ties the target SNIR gamma to the operating SNR S0 = gamma / c, so a
/// single transmitting node succeeds with probability exactly 1 - epsilon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibratedThreshold {
    pub epsilon: f64,
    pub c: f64,
    /// S0 / gamma = 1 / c.
    pub s0_over_gamma: f64,
}

/// Calibrate the threshold for a model and single-node outage target.
pub fn calibrate(model: &FadingModel, epsilon: f64) -> Result<CalibratedThreshold> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0, 1) (got {epsilon})"
        )));
    }
    let c = model.inverse_ccdf(1.0 - epsilon);
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "calibration produced a non-positive threshold c = {c}"
        )));
    }
    Ok(CalibratedThreshold {
        epsilon,
        c,
        s0_over_gamma: 1.0 / c,
    })
}

/// Descending order statistics of n unit exponentials via the independent
/// spacings representation Y_(k) = sum_{j=k..n} X_j / j.
///
/// Distributionally identical to `make_rayleigh().sample_gains(n, seed)`
/// (exercised by test, not assumed); it is the independent sampling route for
/// the rank variables of the exact analysis.
pub fn sample_exponential_spacings(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_exponential_spacings_with(&mut rng, n)
}

/// Same as [`sample_exponential_spacings`] with a caller-provided stream.
pub fn sample_exponential_spacings_with<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut y = vec![0.0; n];
    let x: Vec<f64> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            -(1.0 - u).ln()
        })
        .collect();
    let mut acc = 0.0;
    for k in (0..n).rev() {
        acc += x[k] / (k + 1) as f64;
        y[k] = acc;
    }
    y
}

/// Two-level transmit power randomization: Z = 1/b with probability
/// b/(1+b), Z = b with probability 1/(1+b). E[Z] = 1 exactly; combined with
/// Rayleigh fading the squared coefficient of variation of Y = XZ is
/// 2(b + 1/b - 1) - 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRandomization {
    pub b: f64,
}

impl PowerRandomization {
    pub fn new(b: f64) -> Result<Self> {
        if !(b >= 1.0) || !b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "two-level spread must satisfy b >= 1 (got {b})"
            )));
        }
        Ok(Self { b })
    }

    pub fn level_low(&self) -> f64 {
        1.0 / self.b
    }

    pub fn level_high(&self) -> f64 {
        self.b
    }

    pub fn prob_low(&self) -> f64 {
        self.b / (1.0 + self.b)
    }

    pub fn prob_high(&self) -> f64 {
        1.0 / (1.0 + self.b)
    }

    /// Squared coefficient of variation of the composite gain Y = XZ.
    pub fn scov(&self) -> f64 {
        2.0 * (self.b + 1.0 / self.b - 1.0) - 1.0
    }

    /// The composite gain as a fading model (mixture CCDF).
    pub fn fading_model(&self) -> FadingModel {
        FadingModel::TwoLevel { b: self.b }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const C: f64 = 0.1053605156578263;

    #[test]
    fn rayleigh_basics() {
        let m = make_rayleigh();
        assert_eq!(m.ccdf(0.0), 1.0);
        assert!((m.ccdf(1.0) - (-1.0_f64).exp()).abs() < 1e-15);
        assert!((m.inverse_ccdf(0.9) - C).abs() < 1e-12);
    }

    #[test]
    fn calibration_examples() {
        let m = make_rayleigh();
        let t = calibrate(&m, 0.1).unwrap();
        assert!((t.c - C).abs() < 1e-12);
        assert!((t.s0_over_gamma - 1.0 / C).abs() < 1e-9);
        // monotone toward zero
        let mut last = t.c;
        for eps in [0.05, 0.01, 0.001] {
            let c = calibrate(&m, eps).unwrap().c;
            assert!(c < last && c > 0.0);
            last = c;
        }
        assert!(calibrate(&m, 0.0).is_err());
        assert!(calibrate(&m, 1.0).is_err());

        // Gamma eta=4: c solves P(4, 4c) = 0.1; oracle by bisection.
        let g = make_gamma(4.0).unwrap();
        let c4 = calibrate(&g, 0.1).unwrap().c;
        let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            let p = crate::numerics::special::regularized_gamma(4.0, 4.0 * mid).unwrap();
            if p < 0.1 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((c4 - 0.5 * (lo + hi)).abs() < 1e-10, "c4 = {c4}");
    }

    #[test]
    fn gamma_shape_one_is_rayleigh() {
        let g = make_gamma(1.0).unwrap();
        let r = make_rayleigh();
        let mut t = 1e-4;
        while t <= 20.0 {
            assert!((g.ccdf(t) - r.ccdf(t)).abs() < 1e-12, "t = {t}");
            assert!((g.pdf(t) - r.pdf(t)).abs() < 1e-12, "t = {t}");
            t *= 1.6;
        }
        // c for eta = 1, eps = 0.1 reduces to -ln(0.9)
        assert!((calibrate(&g, 0.1).unwrap().c - C).abs() < 1e-10);
    }

    #[test]
    fn gamma_rejects_bad_shape() {
        assert!(make_gamma(0.0).is_err());
        assert!(make_gamma(-1.0).is_err());
    }

    #[test]
    fn inverse_ccdf_round_trip() {
        let models = [
            make_rayleigh(),
            make_gamma(0.5).unwrap(),
            make_gamma(2.0).unwrap(),
            make_gamma(4.0).unwrap(),
            make_two_level(2.0).unwrap(),
            make_two_level(5.0).unwrap(),
        ];
        for m in &models {
            let mut u = 1e-8;
            while u <= 1.0 {
                let t = m.inverse_ccdf(u);
                let back = m.ccdf(t);
                assert!(
                    (back - u).abs() < 1e-10,
                    "{}: u={u} t={t} back={back}",
                    m.name()
                );
                u *= 3.7;
            }
        }
    }

    #[test]
    fn ccdf_integrates_to_unit_mean() {
        use crate::numerics::quadrature::{integrate, QuadratureParams, SingularEndpoints};
        let cases = [
            (make_rayleigh(), 60.0),
            (make_gamma(0.5).unwrap(), 200.0),
            (make_gamma(2.0).unwrap(), 60.0),
            (make_two_level(5.0).unwrap(), 320.0),
        ];
        let params = QuadratureParams {
            abs_tol: 1e-9,
            rel_tol: 1e-9,
            max_subdivisions: 600,
        };
        for (m, upper) in cases {
            let mean =
                integrate(|t| m.ccdf(t), 0.0, upper, &params, SingularEndpoints::NONE).unwrap();
            assert!((mean - 1.0).abs() < 1e-6, "{}: mean {mean}", m.name());
        }
    }

    #[test]
    fn sample_mean_is_one() {
        for m in [make_rayleigh(), make_gamma(2.0).unwrap()] {
            let n = 1_000_000;
            let gains = m.sample_gains(n, 7);
            let mean: f64 = gains.iter().sum::<f64>() / n as f64;
            let sd = match &m {
                FadingModel::Gamma { eta } => (1.0 / eta).sqrt(),
                _ => 1.0,
            };
            let band = 4.0 * sd / (n as f64).sqrt();
            assert!((mean - 1.0).abs() < band, "{}: mean {mean}", m.name());
        }
    }

    #[test]
    fn gamma_two_sample_variance() {
        let m = make_gamma(2.0).unwrap();
        let n = 1_000_000;
        let gains = m.sample_gains(n, 11);
        let mean: f64 = gains.iter().sum::<f64>() / n as f64;
        let var: f64 = gains.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
        // Var = 1/eta = 0.5; SE of the sample variance from exact moments of
        // the Gamma(2, 2) law: Var(Y^2)/n-based 3 sigma band.
        let se = (5.25_f64 / n as f64).sqrt();
        assert!((var - 0.5).abs() < 3.0 * se, "var {var}");
    }

    #[test]
    fn spacings_match_examples() {
        let y1 = sample_exponential_spacings(1, 3);
        assert_eq!(y1.len(), 1);
        // n = 2: Y_(2) = X_2 / 2, Y_(1) = X_1 + X_2 / 2, replayed from the
        // same stream.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u1: f64 = rng.random();
        let u2: f64 = rng.random();
        let x1 = -(1.0 - u1).ln();
        let x2 = -(1.0 - u2).ln();
        let y = sample_exponential_spacings(2, 9);
        assert!((y[1] - x2 / 2.0).abs() < 1e-15);
        assert!((y[0] - (x1 + x2 / 2.0)).abs() < 1e-15);
        assert!(y[0] >= y[1]);
    }

    #[test]
    fn spacings_mean_matches_harmonic_difference() {
        // E[Y_(k)] = H_n - H_{k-1}; 1e4 replications, ranks {1, n/2, n}.
        let n = 32usize;
        let reps = 10_000;
        let mut sums = vec![0.0; n];
        for r in 0..reps {
            let y = sample_exponential_spacings(n, 1000 + r as u64);
            for k in 0..n {
                sums[k] += y[k];
            }
        }
        let h = |m: usize| (1..=m).map(|k| 1.0 / k as f64).sum::<f64>();
        for &k in &[1usize, n / 2, n] {
            let mean = sums[k - 1] / reps as f64;
            let expect = h(n) - h(k - 1);
            // Var(Y_(k)) = sum_{j=k..n} 1/j^2
            let var: f64 = (k..=n).map(|j| 1.0 / (j * j) as f64).sum();
            let band = 3.0 * (var / reps as f64).sqrt();
            assert!(
                (mean - expect).abs() < band,
                "rank {k}: mean {mean} expect {expect} band {band}"
            );
        }
    }

    #[test]
    fn minimum_rank_is_exponential_n() {
        // KS test of Y_(n) against Exp(n) at the 1% level.
        let n = 8usize;
        let reps = 10_000usize;
        let mut mins: Vec<f64> = (0..reps)
            .map(|r| make_rayleigh().sample_gains(n, 50_000 + r as u64)[n - 1])
            .collect();
        mins.sort_by(|a, b| a.total_cmp(b));
        let mut d: f64 = 0.0;
        for (i, v) in mins.iter().enumerate() {
            let cdf = 1.0 - (-(n as f64) * v).exp();
            let emp_hi = (i + 1) as f64 / reps as f64;
            let emp_lo = i as f64 / reps as f64;
            d = d.max((cdf - emp_lo).abs()).max((cdf - emp_hi).abs());
        }
        let critical = 1.628 / (reps as f64).sqrt();
        assert!(d < critical, "KS distance {d} >= {critical}");
    }

    #[test]
    fn spacings_and_sorted_sampling_agree_in_law() {
        // Two-sample KS per rank, n = 6, 1e4 replications, 1% level.
        let n = 6usize;
        let reps = 10_000usize;
        let mut by_rank_a: Vec<Vec<f64>> = vec![Vec::new(); n];
        let mut by_rank_b: Vec<Vec<f64>> = vec![Vec::new(); n];
        for r in 0..reps {
            let a = sample_exponential_spacings(n, 777_000 + r as u64);
            let b = make_rayleigh().sample_gains(n, 888_000 + r as u64);
            for k in 0..n {
                by_rank_a[k].push(a[k]);
                by_rank_b[k].push(b[k]);
            }
        }
        let critical = 1.628 * (2.0 / reps as f64).sqrt();
        for k in 0..n {
            let d = two_sample_ks(&mut by_rank_a[k], &mut by_rank_b[k]);
            assert!(d < critical, "rank {}: KS {d} >= {critical}", k + 1);
        }
    }

    fn two_sample_ks(a: &mut [f64], b: &mut [f64]) -> f64 {
        a.sort_by(|x, y| x.total_cmp(y));
        b.sort_by(|x, y| x.total_cmp(y));
        let (mut i, mut j) = (0usize, 0usize);
        let mut d: f64 = 0.0;
        while i < a.len() && j < b.len() {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            let fa = i as f64 / a.len() as f64;
            let fb = j as f64 / b.len() as f64;
            d = d.max((fa - fb).abs());
        }
        d
    }

    #[test]
    fn power_randomization_moments() {
        // E[Z] = 1 exactly: integer identity b + b^2 = b(1 + b) scaled by the
        // common denominator b(1+b).
        for b in [1i64, 2, 5] {
            assert_eq!(b + b * b, b * (1 + b));
        }
        let pr = PowerRandomization::new(2.0).unwrap();
        let ez = pr.level_low() * pr.prob_low() + pr.level_high() * pr.prob_high();
        assert!((ez - 1.0).abs() < 1e-15);
        assert!(PowerRandomization::new(0.5).is_err());

        // b = 1 collapses to plain Rayleigh
        let flat = PowerRandomization::new(1.0).unwrap();
        assert!((flat.scov() - 1.0).abs() < 1e-15);
        let m = flat.fading_model();
        assert!((m.ccdf(1.3) - (-1.3_f64).exp()).abs() < 1e-12);

        // sample SCOV within 3 sigma of 2(b + 1/b - 1) - 1
        for b in [1.0, 2.0, 5.0] {
            let pr = PowerRandomization::new(b).unwrap();
            let model = pr.fading_model();
            let n = 200_000;
            let gains = model.sample_gains(n, 4242);
            let m1: f64 = gains.iter().sum::<f64>() / n as f64;
            let m2: f64 = gains.iter().map(|y| y * y).sum::<f64>() / n as f64;
            let scov = m2 / (m1 * m1) - 1.0;
            // delta-method SE from exact moments E[Y^k] = k! E[Z^k]
            let zk = |k: i32| -> f64 {
                pr.level_low().powi(k) * pr.prob_low() + pr.level_high().powi(k) * pr.prob_high()
            };
            let (e2, e3, e4) = (2.0 * zk(2), 6.0 * zk(3), 24.0 * zk(4));
            let var_m2 = (e4 - e2 * e2) / n as f64;
            let var_m1 = (e2 - 1.0) / n as f64;
            let cov = (e3 - e2) / n as f64;
            let se = (var_m2 + 4.0 * e2 * e2 * var_m1 - 4.0 * e2 * cov)
                .abs()
                .sqrt();
            assert!(
                (scov - pr.scov()).abs() < 3.0 * se,
                "b={b}: scov {scov} vs {} (3se {})",
                pr.scov(),
                3.0 * se
            );
        }
    }

    #[test]
    fn model_parse_round_trip() {
        for spec in ["rayleigh", "gamma:2", "two-level:5"] {
            let m = FadingModel::parse(spec).unwrap();
            assert_eq!(m.name(), spec);
        }
        assert!(FadingModel::parse("rice:3").is_err());
        assert!(FadingModel::parse("gamma:x").is_err());
    }

    proptest! {
        #[test]
        fn inverse_is_right_inverse(u in 1e-8f64..1.0, eta in 0.3f64..8.0) {
            let m = make_gamma(eta).unwrap();
            let t = m.inverse_ccdf(u);
            prop_assert!((m.ccdf(t) - u).abs() < 1e-9);
        }
    }
}
