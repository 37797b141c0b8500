//! Monte Carlo simulation of the SIC decoding chain and of capture-only
//! reception, for any fading model.
//!
//! Determinism contract: every replication draws from its own counter-based
//! substream (ChaCha8, stream = replication index, seeded by the master
//! seed), and all reductions are integer accumulations, so a report is
//! bit-identical for a given (plan, seed) regardless of the parallelism
//! degree.

use std::time::Instant;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fading::{calibrate, make_rayleigh, FadingModel};
use crate::sic_exact::{coefficients, SystemConfig};

/// Receiver discipline to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodingMode {
    /// Successive cancellation: ranks are decoded strongest-first and the
    /// chain halts at the first failure.
    Sic,
    /// Capture only: every packet is decoded independently against the full
    /// interference; the residual-interference fraction is ignored.
    Capture,
}

/// A complete simulation request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationPlan {
    pub config: SystemConfig,
    pub model: FadingModel,
    pub replications: usize,
    pub master_seed: u64,
    pub mode: DecodingMode,
}

impl SimulationPlan {
    pub fn new(
        config: SystemConfig,
        model: FadingModel,
        replications: usize,
        master_seed: u64,
        mode: DecodingMode,
    ) -> Result<Self> {
        if replications < 1 {
            return Err(Error::InvalidParameter(
                "replications must be at least 1".to_string(),
            ));
        }
        Ok(Self {
            config,
            model,
            replications,
            master_seed,
            mode,
        })
    }
}

/// Simulation output.
#[derive(Debug, Clone, Serialize)]
pub struct SimulationReport {
    pub n: usize,
    pub mode: DecodingMode,
    pub replications: usize,
    pub seed: u64,
    /// Counts of the decoded packet count, indices 0..=n; sums to
    /// `replications`.
    pub decoded_count_histogram: Vec<u64>,
    pub mean_decoded: f64,
    pub mean_decoded_std_error: f64,
    /// Marginal frequency of the rank-j decoding inequality (irrespective of
    /// earlier ranks), j = 1..n.
    pub per_rank_success_freq: Vec<f64>,
    /// For Rayleigh fading the rank-j inequality is the event V_j >= c, so
    /// these frequencies estimate the exact marginals; None otherwise.
    pub marginal_vj_freq: Option<Vec<f64>>,
    pub wall_time_seconds: f64,
}

#[derive(Clone)]
struct Accum {
    hist: Vec<u64>,
    rank_success: Vec<u64>,
}

impl Accum {
    fn new(n: usize) -> Self {
        Self {
            hist: vec![0; n + 1],
            rank_success: vec![0; n],
        }
    }

    fn merge(mut self, other: Accum) -> Accum {
        for (a, b) in self.hist.iter_mut().zip(other.hist) {
            *a += b;
        }
        for (a, b) in self.rank_success.iter_mut().zip(other.rank_success) {
            *a += b;
        }
        self
    }
}

/// Run the plan. Interference sums are maintained by prefix/suffix
/// accumulation, O(n) per replication beyond the sort.
pub fn run(plan: &SimulationPlan) -> SimulationReport {
    let start = Instant::now();
    let n = plan.config.n;
    let gamma = plan.config.gamma;
    let xi = plan.config.xi;
    let c = plan.config.threshold.c;
    let reps = plan.replications;

    let accum = (0..reps as u64)
        .into_par_iter()
        .fold(
            || Accum::new(n),
            |mut acc, rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(plan.master_seed);
                rng.set_stream(rep);
                match plan.mode {
                    DecodingMode::Sic => {
                        let gains = plan.model.sample_gains_with(&mut rng, n);
                        let total: f64 = gains.iter().sum();
                        let mut prefix = 0.0;
                        let mut first_failure = None;
                        for (j, &y) in gains.iter().enumerate() {
                            let suffix = total - prefix - y;
                            let ok = y >= c + gamma * suffix + gamma * xi * prefix;
                            if ok {
                                acc.rank_success[j] += 1;
                            } else if first_failure.is_none() {
                                first_failure = Some(j);
                            }
                            prefix += y;
                        }
                        acc.hist[first_failure.unwrap_or(n)] += 1;
                    }
                    DecodingMode::Capture => {
                        let gains: Vec<f64> = (0..n)
                            .map(|_| {
                                let u: f64 = rng.random();
                                plan.model.inverse_ccdf(1.0 - u)
                            })
                            .collect();
                        let total: f64 = gains.iter().sum();
                        let mut decoded = 0usize;
                        for (j, &y) in gains.iter().enumerate() {
                            if y * (1.0 + gamma) >= c + gamma * total {
                                decoded += 1;
                                acc.rank_success[j] += 1;
                            }
                        }
                        acc.hist[decoded] += 1;
                    }
                }
                acc
            },
        )
        .reduce(|| Accum::new(n), Accum::merge);

    let r = reps as f64;
    let mean: f64 = accum
        .hist
        .iter()
        .enumerate()
        .map(|(m, &count)| m as f64 * count as f64)
        .sum::<f64>()
        / r;
    let second: f64 = accum
        .hist
        .iter()
        .enumerate()
        .map(|(m, &count)| (m * m) as f64 * count as f64)
        .sum::<f64>()
        / r;
    let std_error = ((second - mean * mean).max(0.0) / r).sqrt();
    let per_rank: Vec<f64> = accum.rank_success.iter().map(|&s| s as f64 / r).collect();
    let marginal_vj = match (&plan.model, plan.mode) {
        (FadingModel::Rayleigh, DecodingMode::Sic) => Some(per_rank.clone()),
        _ => None,
    };

    SimulationReport {
        n,
        mode: plan.mode,
        replications: reps,
        seed: plan.master_seed,
        decoded_count_histogram: accum.hist,
        mean_decoded: mean,
        mean_decoded_std_error: std_error,
        per_rank_success_freq: per_rank,
        marginal_vj_freq: marginal_vj,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    }
}

/// Empirical marginals of the rank variables, with binomial standard errors.
#[derive(Debug, Clone, Serialize)]
pub struct VjMarginals {
    pub freq: Vec<f64>,
    pub std_err: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
}

/// Empirical P(V_j >= c) for all ranks, assembling every rank variable from
/// one shared exponential draw vector per replication (Rayleigh only).
pub fn sample_vj_marginals(
    model: &FadingModel,
    config: &SystemConfig,
    replications: usize,
    seed: u64,
) -> Result<VjMarginals> {
    if *model != FadingModel::Rayleigh {
        return Err(Error::InvalidParameter(format!(
            "rank-variable marginals require the rayleigh model (got {})",
            model.name()
        )));
    }
    if replications < 1 {
        return Err(Error::InvalidParameter(
            "replications must be at least 1".to_string(),
        ));
    }
    let n = config.n;
    let gamma = config.gamma;
    let xi = config.xi;
    let c = config.threshold.c;

    let counts = (0..replications as u64)
        .into_par_iter()
        .fold(
            || vec![0u64; n],
            |mut acc, rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(rep);
                let x: Vec<f64> = (0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        -(1.0 - u).ln()
                    })
                    .collect();
                // suffix sums of x_k and x_k / k, prefix sums of x_k
                let mut suffix_scaled = 0.0;
                let mut suffix_plain = 0.0;
                let mut scaled = vec![0.0; n + 1];
                let mut plain = vec![0.0; n + 1];
                for k in (0..n).rev() {
                    suffix_scaled += x[k] / (k + 1) as f64;
                    suffix_plain += x[k];
                    scaled[k] = suffix_scaled;
                    plain[k] = suffix_plain;
                }
                let mut prefix = 0.0;
                for j in 1..=n {
                    let lambda = 1.0 + j as f64 * gamma - (j as f64 - 1.0) * gamma * xi;
                    let v = lambda * scaled[j - 1] - gamma * plain[j - 1] - gamma * xi * prefix;
                    if v >= c {
                        acc[j - 1] += 1;
                    }
                    prefix += x[j - 1];
                }
                acc
            },
        )
        .reduce(
            || vec![0u64; n],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );

    let r = replications as f64;
    let freq: Vec<f64> = counts.iter().map(|&k| k as f64 / r).collect();
    let std_err: Vec<f64> = freq.iter().map(|&f| (f * (1.0 - f) / r).sqrt()).collect();
    Ok(VjMarginals {
        freq,
        std_err,
        replications,
        seed,
    })
}

/// Result of replaying the decoding chain through both the SNIR-form and the
/// rank-variable form on shared randomness.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct EquivalenceReport {
    pub replications: usize,
    /// Replications whose decoded counts genuinely disagree (outside the
    /// boundary slack band).
    pub mismatches: usize,
    /// Rank decisions falling inside the floating-point slack band; counted
    /// as agreeing under both forms.
    pub boundary_flagged: usize,
}

/// Executable check that the SNIR-form chain and the V_j-form chain decode
/// identical counts. A relative slack of 1e-9 absorbs floating-point
/// reassociation at the decision boundary.
pub fn dual_form_equivalence(
    config: &SystemConfig,
    replications: usize,
    seed: u64,
) -> EquivalenceReport {
    let n = config.n;
    let gamma = config.gamma;
    let xi = config.xi;
    let c = config.threshold.c;
    let slack = 1e-9 * c.max(1.0);
    let rows: Vec<Vec<f64>> = (1..=n)
        .map(|j| coefficients(config, j).expect("rank in range").row)
        .collect();

    let (mismatches, flagged) = (0..replications as u64)
        .into_par_iter()
        .fold(
            || (0usize, 0usize),
            |(mut bad, mut flags), rep| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(rep);
                let x: Vec<f64> = (0..n)
                    .map(|_| {
                        let u: f64 = rng.random();
                        -(1.0 - u).ln()
                    })
                    .collect();
                // descending order statistics from the shared draws
                let mut gains = vec![0.0; n];
                let mut acc = 0.0;
                for k in (0..n).rev() {
                    acc += x[k] / (k + 1) as f64;
                    gains[k] = acc;
                }
                let total: f64 = gains.iter().sum();
                let mut prefix = 0.0;
                let mut disagree = false;
                for j in 0..n {
                    let suffix = total - prefix - gains[j];
                    let d_snir = gains[j] - (c + gamma * suffix + gamma * xi * prefix);
                    let v: f64 = rows[j].iter().zip(&x).map(|(b, xk)| b * xk).sum();
                    let d_v = v - c;
                    let snir_ok = d_snir >= 0.0;
                    let v_ok = d_v >= 0.0;
                    if snir_ok != v_ok {
                        if d_snir.abs() <= slack || d_v.abs() <= slack {
                            flags += 1;
                        } else {
                            disagree = true;
                            break;
                        }
                    }
                    if !snir_ok {
                        break; // both chains halt here
                    }
                    prefix += gains[j];
                }
                if disagree {
                    bad += 1;
                }
                (bad, flags)
            },
        )
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));

    EquivalenceReport {
        replications,
        mismatches,
        boundary_flagged: flagged,
    }
}

/// One row of a convergence study.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub mean_decoded_over_n: f64,
    /// Width of the normalized rank interval over which the per-rank success
    /// frequency falls from 0.9 to 0.1.
    pub sharpness: f64,
}

/// Width of the drop of the per-rank frequency curve from 0.9 to 0.1, in
/// units of j/n. The left edge is the last rank still at or above 0.9 (the
/// argmax when the curve never reaches 0.9); the right edge is the first
/// later rank at or below 0.1 (1.0 if it never drops that far).
pub fn transition_sharpness(freq: &[f64]) -> f64 {
    let n = freq.len();
    if n == 0 {
        return 0.0;
    }
    let hi_idx = freq
        .iter()
        .enumerate()
        .filter(|(_, f)| **f >= 0.9)
        .map(|(i, _)| i)
        .next_back();
    let left = match hi_idx {
        Some(i) => i,
        None => freq
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0),
    };
    let right = (left + 1..n)
        .find(|&i| freq[i] <= 0.1)
        .map(|i| (i + 1) as f64 / n as f64)
        .unwrap_or(1.0);
    (right - (left + 1) as f64 / n as f64).max(0.0)
}

/// SIC Monte Carlo across an ascending ladder of node counts, reporting the
/// normalized mean decoded count and the transition sharpness.
pub fn convergence_study(
    alpha: f64,
    xi: f64,
    epsilon: f64,
    n_list: &[usize],
    replications: usize,
    seed: u64,
) -> Result<Vec<ConvergenceRow>> {
    if n_list.is_empty() {
        return Err(Error::InvalidParameter("empty n list".to_string()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(
            "n list must be strictly ascending".to_string(),
        ));
    }
    let model = make_rayleigh();
    let threshold = calibrate(&model, epsilon)?;
    let mut rows = Vec::with_capacity(n_list.len());
    for (i, &n) in n_list.iter().enumerate() {
        let config = SystemConfig::with_alpha(n, alpha, xi, threshold)?;
        let plan = SimulationPlan::new(
            config,
            model.clone(),
            replications,
            seed + i as u64,
            DecodingMode::Sic,
        )?;
        let report = run(&plan);
        rows.push(ConvergenceRow {
            n,
            mean_decoded_over_n: report.mean_decoded / n as f64,
            sharpness: transition_sharpness(&report.per_rank_success_freq),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fading::make_gamma;
    use crate::numerics::laplace::InversionParams;
    use crate::sic_exact::{moment_profile, pv_curve};

    fn rayleigh_config(n: usize, alpha: f64, xi: f64) -> SystemConfig {
        let th = calibrate(&make_rayleigh(), 0.1).unwrap();
        SystemConfig::with_alpha(n, alpha, xi, th).unwrap()
    }

    #[test]
    fn single_node_calibration_identity() {
        for model in [make_rayleigh(), make_gamma(2.0).unwrap()] {
            let th = calibrate(&model, 0.1).unwrap();
            let config = SystemConfig::with_gamma(1, 0.7, 0.0, th).unwrap();
            let plan =
                SimulationPlan::new(config, model.clone(), 100_000, 42, DecodingMode::Sic).unwrap();
            let report = run(&plan);
            let se = (0.1f64 * 0.9 / 100_000.0).sqrt();
            assert!(
                (report.mean_decoded - 0.9).abs() <= 3.0 * se,
                "{}: {}",
                model.name(),
                report.mean_decoded
            );
        }
    }

    #[test]
    fn capture_mode_matches_closed_form() {
        let n = 50usize;
        let gamma = 1.0 / n as f64;
        let th = calibrate(&make_rayleigh(), 0.1).unwrap();
        let config = SystemConfig::with_gamma(n, gamma, 0.0, th).unwrap();
        let reps = 100_000usize;
        let plan =
            SimulationPlan::new(config, make_rayleigh(), reps, 7, DecodingMode::Capture).unwrap();
        let report = run(&plan);
        let exact = crate::asymptotics::capture_baseline(n, gamma, 0.1)
            .unwrap()
            .m_n;
        let se = report.mean_decoded_std_error;
        assert!(
            (report.mean_decoded - exact).abs() <= 3.0 * se,
            "{} vs {exact} (3se {})",
            report.mean_decoded,
            3.0 * se
        );
        // histogram invariant
        let total: u64 = report.decoded_count_histogram.iter().sum();
        assert_eq!(total, reps as u64);
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let config = rayleigh_config(64, 0.32, 0.1);
        let plan =
            SimulationPlan::new(config, make_rayleigh(), 5_000, 99, DecodingMode::Sic).unwrap();
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| run(&plan));
        let multi = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| run(&plan));
        assert_eq!(
            single.decoded_count_histogram,
            multi.decoded_count_histogram
        );
        assert_eq!(single.per_rank_success_freq, multi.per_rank_success_freq);
        assert_eq!(single.mean_decoded.to_bits(), multi.mean_decoded.to_bits());
    }

    #[test]
    fn dual_form_chains_agree() {
        for xi in [0.0, 0.1] {
            let config = rayleigh_config(16, 0.32, xi);
            let report = dual_form_equivalence(&config, 20_000, 1234);
            assert_eq!(report.mismatches, 0, "xi = {xi}");
        }
    }

    #[test]
    fn vj_marginals_match_exact_curve() {
        let config = rayleigh_config(40, 0.32, 0.0);
        let reps = 100_000usize;
        let marg = sample_vj_marginals(&make_rayleigh(), &config, reps, 5).unwrap();
        let pv = pv_curve(&config, &InversionParams::default()).unwrap();
        for (j, (&freq, &p)) in marg.freq.iter().zip(&pv).enumerate() {
            let se = (p * (1.0 - p) / reps as f64).sqrt().max(1e-9);
            assert!((freq - p).abs() <= 3.5 * se, "j={}: {freq} vs {p}", j + 1);
        }
    }

    #[test]
    fn vj_boundary_rank_frequency() {
        let n = 5usize;
        let config = rayleigh_config(n, 0.32, 0.0);
        let reps = 100_000usize;
        let marg = sample_vj_marginals(&make_rayleigh(), &config, reps, 77).unwrap();
        let exact = 0.9f64.powi(n as i32);
        let se = (exact * (1.0 - exact) / reps as f64).sqrt();
        assert!((marg.freq[n - 1] - exact).abs() <= 3.0 * se);
        // residual interference keeps marginals sane and roughly monotone
        let config = rayleigh_config(60, 0.32, 0.1);
        let marg = sample_vj_marginals(&make_rayleigh(), &config, 50_000, 3).unwrap();
        for j in 1..60 {
            assert!(marg.freq[j] <= marg.freq[j - 1] + 0.02, "j = {j}");
        }
    }

    #[test]
    fn vj_marginals_reject_non_rayleigh() {
        let config = rayleigh_config(4, 0.32, 0.0);
        assert!(sample_vj_marginals(&make_gamma(2.0).unwrap(), &config, 10, 0).is_err());
    }

    #[test]
    fn empirical_variance_matches_closed_form() {
        // moment cross-check at a mid rank
        let n = 32usize;
        let config = rayleigh_config(n, 0.32, 0.0);
        let profile = moment_profile(&config);
        let j = 16usize;
        let row = coefficients(&config, j).unwrap().row;
        let reps = 200_000usize;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        let mut sum4 = 0.0;
        for rep in 0..reps {
            let mut rng = ChaCha8Rng::seed_from_u64(2024);
            rng.set_stream(rep as u64);
            let v: f64 = row
                .iter()
                .map(|b| {
                    let u: f64 = rng.random();
                    b * -(1.0 - u).ln()
                })
                .sum();
            sum += v;
            sum2 += v * v;
            sum4 += v.powi(4);
        }
        let r = reps as f64;
        let mean = sum / r;
        let var = sum2 / r - mean * mean;
        let m4 = sum4 / r;
        let se_var = ((m4 - var * var).max(0.0) / r).sqrt();
        let expected = profile.sigma[j - 1].powi(2);
        assert!(
            (var - expected).abs() <= 4.0 * se_var,
            "var {var} vs {expected} (4se {})",
            4.0 * se_var
        );
    }

    #[test]
    fn convergence_study_shapes() {
        let rows = convergence_study(0.38, 0.0, 0.1, &[30], 4_000, 5).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].sharpness >= 0.0 && rows[0].sharpness <= 1.0);
        assert!(convergence_study(0.38, 0.0, 0.1, &[], 10, 5).is_err());
        assert!(convergence_study(0.38, 0.0, 0.1, &[50, 50], 10, 5).is_err());
    }

    #[test]
    fn sharpness_helper() {
        // clean staircase
        let freq: Vec<f64> = (0..10).map(|i| if i < 5 { 0.95 } else { 0.05 }).collect();
        let s = transition_sharpness(&freq);
        assert!((s - 0.1).abs() < 1e-12, "{s}");
        // never reaches 0.9: falls back to the argmax
        let freq = vec![0.5, 0.8, 0.6, 0.05];
        let s = transition_sharpness(&freq);
        assert!((s - 0.5).abs() < 1e-12, "{s}");
    }

    #[test]
    fn plan_validation() {
        let config = rayleigh_config(4, 0.32, 0.0);
        assert!(SimulationPlan::new(config, make_rayleigh(), 0, 1, DecodingMode::Sic).is_err());
    }

    #[test]
    fn plan_round_trips_through_json() {
        let config = rayleigh_config(8, 0.32, 0.1);
        let plan = SimulationPlan::new(
            config,
            make_gamma(2.0).unwrap(),
            500,
            9,
            DecodingMode::Capture,
        )
        .unwrap();
        let text = serde_json::to_string(&plan).unwrap();
        assert!(
            text.contains("\"gamma:2\""),
            "model serialized by name: {text}"
        );
        let back: SimulationPlan = serde_json::from_str(&text).unwrap();
        assert_eq!(back.model, plan.model);
        assert_eq!(back.replications, plan.replications);
        assert_eq!(back.mode, plan.mode);
        assert!((back.config.gamma - plan.config.gamma).abs() < 1e-15);
    }
}
