//! Command implementations: compute with the core library, emit CSV + SVG,
//! finish with the run manifest.

use std::path::PathBuf;

use sicasy_core::asymptotics::{optimize_alpha, zeta, AsymptoticCurve, Regime, SearchInterval};
use sicasy_core::fading::{calibrate, make_rayleigh, FadingModel};
use sicasy_core::general_fading::gamma_sum_rate_sweep;
use sicasy_core::montecarlo::{run, DecodingMode, SimulationPlan};
use sicasy_core::numerics::laplace::InversionParams;
use sicasy_core::sic_exact::{curve_rows, moment_profile, SystemConfig};

use crate::output::{Cell, RunWriter};
use crate::svg::{Plot, Series};
use crate::{CliError, Flags};

fn out_dir(flags: &Flags) -> Result<PathBuf, CliError> {
    Ok(PathBuf::from(flags.require("out")?))
}

fn epsilon(flags: &Flags) -> Result<f64, CliError> {
    let eps = flags.parse_f64("epsilon")?.unwrap_or(0.1);
    if !(eps > 0.0 && eps < 1.0) {
        return Err(CliError::Usage(format!(
            "--epsilon must lie in (0, 1), got {eps}"
        )));
    }
    Ok(eps)
}

fn alpha_grid(flags: &Flags) -> Result<Vec<f64>, CliError> {
    let lo = flags.require_f64("alpha-min")?;
    let hi = flags.require_f64("alpha-max")?;
    let steps = flags.parse_usize("alpha-steps")?.unwrap_or(80);
    grid(lo, hi, steps, "alpha")
}

fn grid(lo: f64, hi: f64, steps: usize, what: &str) -> Result<Vec<f64>, CliError> {
    if !(lo > 0.0 && hi >= lo) || steps < 1 {
        return Err(CliError::Usage(format!(
            "empty or invalid {what} range [{lo}, {hi}] with {steps} steps"
        )));
    }
    if steps == 1 || hi == lo {
        return Ok(vec![lo]);
    }
    Ok((0..steps)
        .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
        .collect())
}

/// Exact marginal curve (j/n, p_V(j)) with the asymptotic fraction marker.
pub fn pv_curve(flags: &Flags) -> Result<(), CliError> {
    let n = flags
        .parse_usize("n")?
        .ok_or_else(|| CliError::Usage("missing required flag --n".into()))?;
    let alpha = flags.require_f64("alpha")?;
    let eps = epsilon(flags)?;
    let dir = out_dir(flags)?;

    let threshold = calibrate(&make_rayleigh(), eps)?;
    let config = SystemConfig::with_alpha(n, alpha, 0.0, threshold)?;
    let rows = curve_rows(&config, &InversionParams::default())?;
    let z = zeta(&AsymptoticCurve::new(alpha, 0.0)?, threshold.c)?;

    let mut writer = RunWriter::new(&dir, "pv-curve", flags.as_map())?;
    writer.write_csv(
        "pv_curve.csv",
        "pv-curve",
        &["x", "p_v"],
        rows.iter().map(|r| vec![Cell::Num(r.x), Cell::Num(r.p_v)]),
    )?;
    writer.write_csv(
        "sic_detail.csv",
        "pv-curve-detail",
        &["j", "x", "mu", "sigma", "p_v"],
        rows.iter().map(|r| {
            vec![
                Cell::Int(r.j as i64),
                Cell::Num(r.x),
                Cell::Num(r.mu),
                Cell::Num(r.sigma),
                Cell::Num(r.p_v),
            ]
        }),
    )?;

    let mut plot = Plot::new(
        &format!("Per-rank success probability (n = {n}, alpha = {alpha})"),
        "j / n",
        "P(V_j >= c)",
    );
    plot.series.push(Series {
        label: "p_V".into(),
        color: "#1f77b4",
        dashed: false,
        points: rows.iter().map(|r| (r.x, r.p_v)).collect(),
    });
    plot.vlines.push((z.zeta, format!("zeta = {:.4}", z.zeta)));
    writer.write_bytes("pv_curve.svg", plot.render().as_bytes())?;
    writer.finish()
}

/// Mean/one-sigma bands of the rank variables with the limit curve overlay,
/// in linear and log scales, plus the mean-deviation summary.
pub fn moments(flags: &Flags) -> Result<(), CliError> {
    let n = flags
        .parse_usize("n")?
        .ok_or_else(|| CliError::Usage("missing required flag --n".into()))?;
    let alpha = flags.require_f64("alpha")?;
    let xi = flags.parse_f64("xi")?.unwrap_or(0.0);
    let eps = epsilon(flags)?;
    let dir = out_dir(flags)?;

    let threshold = calibrate(&make_rayleigh(), eps)?;
    let config = SystemConfig::with_alpha(n, alpha, xi, threshold)?;
    let profile = moment_profile(&config);
    let curve = AsymptoticCurve::new(alpha, xi)?;

    let mut writer = RunWriter::new(&dir, "moments", flags.as_map())?;
    writer.write_csv(
        "moments.csv",
        "moments",
        &["x", "mu", "mu_minus_sigma", "mu_plus_sigma", "f"],
        (1..=n).map(|j| {
            let x = j as f64 / n as f64;
            let mu = profile.mu[j - 1];
            let s = profile.sigma[j - 1];
            vec![
                Cell::Num(x),
                Cell::Num(mu),
                Cell::Num(mu - s),
                Cell::Num(mu + s),
                Cell::Num(curve.value(x)),
            ]
        }),
    )?;
    writer.write_csv(
        "moments_summary.csv",
        "moments-summary",
        &["n", "alpha", "xi", "delta_mean", "delta_bound"],
        std::iter::once(vec![
            Cell::Int(n as i64),
            Cell::Num(alpha),
            Cell::Num(xi),
            Cell::Num(profile.mean_abs_deviation()),
            Cell::Num(profile.mean_abs_deviation_bound()),
        ]),
    )?;

    for (name, log_y) in [("moments_linear.svg", false), ("moments_log.svg", true)] {
        let mut plot = Plot::new(
            &format!("Rank-variable moments (n = {n}, alpha = {alpha}, xi = {xi})"),
            "j / n",
            "mean +/- one deviation",
        );
        plot.log_y = log_y;
        plot.band = Some(
            (1..=n)
                .map(|j| {
                    let x = j as f64 / n as f64;
                    let mu = profile.mu[j - 1];
                    let s = profile.sigma[j - 1];
                    (x, mu - s, mu + s)
                })
                .collect(),
        );
        plot.series.push(Series {
            label: "mean".into(),
            color: "#1f77b4",
            dashed: false,
            points: (1..=n)
                .map(|j| (j as f64 / n as f64, profile.mu[j - 1]))
                .collect(),
        });
        plot.series.push(Series {
            label: "limit curve".into(),
            color: "#d62728",
            dashed: true,
            points: (1..=n)
                .map(|j| {
                    let x = j as f64 / n as f64;
                    (x, curve.value(x))
                })
                .collect(),
        });
        writer.write_bytes(name, plot.render().as_bytes())?;
    }
    writer.finish()
}

/// Asymptotic sum-rate as a function of alpha at fixed xi.
pub fn sumrate(flags: &Flags) -> Result<(), CliError> {
    let xi = flags.parse_f64("xi")?.unwrap_or(0.0);
    let eps = epsilon(flags)?;
    let alphas = alpha_grid(flags)?;
    let dir = out_dir(flags)?;
    let c = calibrate(&make_rayleigh(), eps)?.c;

    let mut rows = Vec::with_capacity(alphas.len());
    for &alpha in &alphas {
        let r = zeta(&AsymptoticCurve::new(alpha, xi)?, c)?;
        rows.push((alpha, r.zeta, r.u_infinity, r.regime));
    }
    let capture_level = (1.0 - eps) / (std::f64::consts::E * std::f64::consts::LN_2);

    let mut writer = RunWriter::new(&dir, "sumrate", flags.as_map())?;
    writer.write_csv(
        "sumrate.csv",
        "sumrate",
        &["alpha", "zeta", "u_infinity", "regime"],
        rows.iter().map(|(a, z, u, regime)| {
            vec![
                Cell::Num(*a),
                Cell::Num(*z),
                Cell::Num(*u),
                Cell::Text(
                    match regime {
                        Regime::Monotone => "monotone",
                        Regime::BimodalAboveC => "bimodal-above-c",
                        Regime::BimodalBlocking => "bimodal-blocking",
                    }
                    .to_string(),
                ),
            ]
        }),
    )?;
    let mut plot = Plot::new(
        &format!("Asymptotic sum-rate vs alpha (xi = {xi}, eps = {eps})"),
        "alpha",
        "U (bit/s/Hz)",
    );
    plot.series.push(Series {
        label: "U(alpha)".into(),
        color: "#1f77b4",
        dashed: false,
        points: rows.iter().map(|(a, _, u, _)| (*a, *u)).collect(),
    });
    plot.hlines.push((
        capture_level,
        format!("capture-only optimum {capture_level:.4}"),
    ));
    writer.write_bytes("sumrate.svg", plot.render().as_bytes())?;
    writer.finish()
}

/// Optimal alpha and the peak sum-rate over a xi range.
pub fn optimal(flags: &Flags) -> Result<(), CliError> {
    let lo = flags.require_f64("xi-min")?;
    let hi = flags.require_f64("xi-max")?;
    let steps = flags.parse_usize("xi-steps")?.unwrap_or(17);
    if !(lo >= 0.0 && hi < 1.0 && hi >= lo) || steps < 1 {
        return Err(CliError::Usage(format!(
            "invalid xi range [{lo}, {hi}] with {steps} steps"
        )));
    }
    let eps = epsilon(flags)?;
    let dir = out_dir(flags)?;
    let c = calibrate(&make_rayleigh(), eps)?.c;
    let search = SearchInterval::new(0.05, 2.0, 1e-5)?;

    let xis: Vec<f64> = if steps == 1 || hi == lo {
        vec![lo]
    } else {
        (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect()
    };
    let mut rows = Vec::with_capacity(xis.len());
    for &xi in &xis {
        let (alpha_star, u_star) = optimize_alpha(xi, c, &search)?;
        rows.push((xi, alpha_star, u_star));
    }

    let mut writer = RunWriter::new(&dir, "optimal", flags.as_map())?;
    writer.write_csv(
        "optimal.csv",
        "optimal",
        &["xi", "alpha_star", "u_star"],
        rows.iter()
            .map(|(x, a, u)| vec![Cell::Num(*x), Cell::Num(*a), Cell::Num(*u)]),
    )?;
    let mut plot = Plot::new("Peak asymptotic sum-rate vs xi", "xi", "U* (bit/s/Hz)");
    plot.series.push(Series {
        label: "U*".into(),
        color: "#1f77b4",
        dashed: false,
        points: rows.iter().map(|(x, _, u)| (*x, *u)).collect(),
    });
    writer.write_bytes("optimal_u.svg", plot.render().as_bytes())?;
    let mut plot = Plot::new("Optimal alpha vs xi", "xi", "alpha*");
    plot.series.push(Series {
        label: "alpha*".into(),
        color: "#2ca02c",
        dashed: false,
        points: rows.iter().map(|(x, a, _)| (*x, *a)).collect(),
    });
    writer.write_bytes("optimal_alpha.svg", plot.render().as_bytes())?;
    writer.finish()
}

/// Generalized-fading sum-rate sweep: either a family of Gamma shapes
/// (`--etas`, closed-form specialization) or any single model (`--model`,
/// quadrature route), over an alpha grid, with per-model maxima.
pub fn general(flags: &Flags) -> Result<(), CliError> {
    let eps = epsilon(flags)?;
    let alphas = alpha_grid(flags)?;
    let dir = out_dir(flags)?;

    // (model label, scov, per-alpha x*) rows plus per-model maxima
    struct ModelCurve {
        label: String,
        scov: f64,
        cells: Vec<(f64, f64, f64)>, // (alpha, x_star, u)
        alpha_star: f64,
        u_star: f64,
    }
    let mut curves: Vec<ModelCurve> = Vec::new();

    match (flags.get("etas"), flags.get("model")) {
        (Some(list), None) => {
            let etas: Vec<f64> = list
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|_| CliError::Usage(format!("bad eta value '{s}' in --etas")))
                })
                .collect::<Result<_, _>>()?;
            let sweep = gamma_sum_rate_sweep(&etas, &alphas, eps)?;
            for (i, &eta) in etas.iter().enumerate() {
                let cells = sweep
                    .rows
                    .iter()
                    .filter(|r| r.eta == eta)
                    .map(|r| (r.alpha, r.x_star, r.u_infinity))
                    .collect();
                curves.push(ModelCurve {
                    label: format!("gamma:{eta}"),
                    scov: 1.0 / eta,
                    cells,
                    alpha_star: sweep.maxima[i].alpha_star,
                    u_star: sweep.maxima[i].u_star,
                });
            }
        }
        (None, Some(spec)) => {
            let model = FadingModel::parse(spec).map_err(|e| CliError::Usage(e.to_string()))?;
            let mut cells = Vec::with_capacity(alphas.len());
            let mut best = (alphas[0], f64::NEG_INFINITY);
            for &alpha in &alphas {
                let g = sicasy_core::general_fading::solve_y_star(&model, alpha, eps)?;
                cells.push((alpha, g.x_star, g.u_infinity));
                if g.u_infinity > best.1 {
                    best = (alpha, g.u_infinity);
                }
            }
            curves.push(ModelCurve {
                label: model.name(),
                scov: model.scov(),
                cells,
                alpha_star: best.0,
                u_star: best.1,
            });
        }
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--etas and --model are mutually exclusive".into(),
            ))
        }
        (None, None) => {
            return Err(CliError::Usage(
                "general needs --etas <list> or --model <spec>".into(),
            ))
        }
    }

    let mut writer = RunWriter::new(&dir, "general", flags.as_map())?;
    writer.write_csv(
        "general.csv",
        "general",
        &["model", "scov", "alpha", "x_star", "u_infinity"],
        curves.iter().flat_map(|c| {
            c.cells.iter().map(|(a, x, u)| {
                vec![
                    Cell::Text(c.label.clone()),
                    Cell::Num(c.scov),
                    Cell::Num(*a),
                    Cell::Num(*x),
                    Cell::Num(*u),
                ]
            })
        }),
    )?;
    writer.write_csv(
        "general_max.csv",
        "general-max",
        &["model", "scov", "alpha_star", "u_star"],
        curves.iter().map(|c| {
            vec![
                Cell::Text(c.label.clone()),
                Cell::Num(c.scov),
                Cell::Num(c.alpha_star),
                Cell::Num(c.u_star),
            ]
        }),
    )?;

    let palette = [
        "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
    ];
    let mut plot = Plot::new(
        &format!("Asymptotic sum-rate under generalized fading (eps = {eps})"),
        "alpha",
        "U (bit/s/Hz)",
    );
    for (i, c) in curves.iter().enumerate() {
        plot.series.push(Series {
            label: format!("{} (SCOV {:.3})", c.label, c.scov),
            color: palette[i % palette.len()],
            dashed: false,
            points: c.cells.iter().map(|(a, _, u)| (*a, *u)).collect(),
        });
    }
    writer.write_bytes("general_sumrate.svg", plot.render().as_bytes())?;
    let mut plot = Plot::new("Peak sum-rate vs gain variability", "SCOV", "U* (bit/s/Hz)");
    let mut pts: Vec<(f64, f64)> = curves.iter().map(|c| (c.scov, c.u_star)).collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    plot.series.push(Series {
        label: "U*(SCOV)".into(),
        color: "#1f77b4",
        dashed: false,
        points: pts,
    });
    writer.write_bytes("general_max.svg", plot.render().as_bytes())?;
    writer.finish()
}

/// Monte Carlo simulation, from flags or a JSON config mirroring them.
pub fn simulate(flags: &Flags) -> Result<(), CliError> {
    let dir = out_dir(flags)?;
    let mut params = flags.as_map();
    let mut config_path: Option<String> = None;

    // Flags win over config values when both are present.
    if let Some(path) = flags.get("config") {
        config_path = Some(path.to_string());
        let text = std::fs::read_to_string(path)?;
        let json: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("bad config JSON {path}: {e}")))?;
        let obj = json
            .as_object()
            .ok_or_else(|| CliError::Usage("config JSON must be an object".into()))?;
        for (k, v) in obj {
            let rendered = match v {
                serde_json::Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            params.entry(k.clone()).or_insert(rendered);
        }
    }
    let lookup = |name: &str| params.get(name).cloned();

    let n: usize = lookup("n")
        .ok_or_else(|| CliError::Usage("missing n (flag or config)".into()))?
        .parse()
        .map_err(|_| CliError::Usage("n must be a count".into()))?;
    let alpha: Option<f64> = match lookup("alpha") {
        Some(s) => Some(
            s.parse()
                .map_err(|_| CliError::Usage("alpha must be a number".into()))?,
        ),
        None => None,
    };
    let gamma: Option<f64> = match lookup("gamma") {
        Some(s) => Some(
            s.parse()
                .map_err(|_| CliError::Usage("gamma must be a number".into()))?,
        ),
        None => None,
    };
    let xi: f64 = match lookup("xi") {
        Some(s) => s
            .parse()
            .map_err(|_| CliError::Usage("xi must be a number".into()))?,
        None => 0.0,
    };
    let eps: f64 = match lookup("epsilon") {
        Some(s) => s
            .parse()
            .map_err(|_| CliError::Usage("epsilon must be a number".into()))?,
        None => 0.1,
    };
    let model = FadingModel::parse(&lookup("model").unwrap_or_else(|| "rayleigh".into()))
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let replications: usize = match lookup("replications") {
        Some(s) => s
            .parse()
            .map_err(|_| CliError::Usage("replications must be a count".into()))?,
        None => 10_000,
    };
    let seed: u64 = match lookup("seed") {
        Some(s) => s
            .parse()
            .map_err(|_| CliError::Usage("seed must be an unsigned integer".into()))?,
        None => 1,
    };
    let mode = match lookup("mode").as_deref().unwrap_or("sic") {
        "sic" => DecodingMode::Sic,
        "capture" => DecodingMode::Capture,
        other => {
            return Err(CliError::Usage(format!(
                "mode must be 'sic' or 'capture', got '{other}'"
            )))
        }
    };

    let threshold = calibrate(&model, eps)?;
    let config = match (alpha, gamma) {
        (Some(_), Some(_)) => {
            return Err(CliError::Usage(
                "--alpha and --gamma are mutually exclusive".into(),
            ))
        }
        (Some(a), None) => SystemConfig::with_alpha(n, a, xi, threshold)?,
        (None, Some(g)) => SystemConfig::with_gamma(n, g, xi, threshold)?,
        (None, None) => {
            return Err(CliError::Usage(
                "one of --alpha or --gamma is required".into(),
            ))
        }
    };
    let plan = SimulationPlan::new(config, model, replications, seed, mode)?;
    let report = run(&plan);

    let mut writer = RunWriter::new(&dir, "simulate", params.clone())?;
    if let Some(path) = &config_path {
        writer.set_input_config(path);
    }
    writer.write_csv(
        "histogram.csv",
        "simulate-histogram",
        &["decoded", "count"],
        report
            .decoded_count_histogram
            .iter()
            .enumerate()
            .map(|(m, &count)| vec![Cell::Int(m as i64), Cell::Int(count as i64)]),
    )?;
    writer.write_csv(
        "per_rank.csv",
        "simulate-per-rank",
        &["j", "x", "success_freq"],
        report
            .per_rank_success_freq
            .iter()
            .enumerate()
            .map(|(i, &f)| {
                vec![
                    Cell::Int((i + 1) as i64),
                    Cell::Num((i + 1) as f64 / report.n as f64),
                    Cell::Num(f),
                ]
            }),
    )?;
    writer.write_bytes(
        "report.json",
        (serde_json::to_string_pretty(&report).expect("report serialization") + "\n").as_bytes(),
    )?;

    let mut plot = Plot::new(
        &format!(
            "Per-rank success frequency ({} reps, mean decoded {:.2})",
            report.replications, report.mean_decoded
        ),
        "j / n",
        "frequency",
    );
    plot.series.push(Series {
        label: "success freq".into(),
        color: "#1f77b4",
        dashed: false,
        points: report
            .per_rank_success_freq
            .iter()
            .enumerate()
            .map(|(i, &f)| ((i + 1) as f64 / report.n as f64, f))
            .collect(),
    });
    writer.write_bytes("per_rank.svg", plot.render().as_bytes())?;
    writer.finish()?;

    // headline result for scripted callers
    println!(
        "mean_decoded {} std_error {} replications {}",
        report.mean_decoded, report.mean_decoded_std_error, report.replications
    );
    Ok(())
}
