//! Command-line front end: exact curves, asymptotic sweeps, and Monte Carlo
//! simulation, emitted as versioned CSV tables plus self-contained SVG plots,
//! with a run manifest hashing every artifact.

mod commands;
mod output;
mod svg;

use std::collections::BTreeMap;
use std::process::ExitCode;

/// Command failure classes, mapped onto exit codes: 2 for invalid arguments,
/// 3 for numerical or I/O failures.
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<sicasy_core::Error> for CliError {
    fn from(e: sicasy_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("i/o error: {e}"))
    }
}

const USAGE: &str = "\
sicasy <command> [flags]

Commands:
  pv-curve   exact per-rank success probabilities (perfect cancellation)
             --n N --alpha A [--epsilon E] --out DIR
  moments    closed-form mean/deviation bands with the limit-curve overlay
             --n N --alpha A [--xi X] [--epsilon E] --out DIR
  sumrate    asymptotic sum-rate sweep over alpha
             --xi X --alpha-min A --alpha-max B [--alpha-steps K] [--epsilon E] --out DIR
  optimal    optimal alpha and peak sum-rate as functions of xi
             --xi-min A --xi-max B [--xi-steps K] [--epsilon E] --out DIR
  general    generalized-fading sum-rate sweep over (SCOV, alpha)
             (--etas LIST | --model SPEC) --alpha-min A --alpha-max B
             [--alpha-steps K] [--epsilon E] --out DIR
  simulate   Monte Carlo run of the decoding chain
             (--config FILE | --n N (--alpha A | --gamma G) [--xi X] [--epsilon E]
              [--model M] [--replications R] [--seed S] [--mode sic|capture]) --out DIR

Common flags: --n, --alpha, --gamma (exclusive with --alpha), --xi, --epsilon,
--model (rayleigh | gamma:<eta> | two-level:<b>), --replications, --seed, --out.
SICASY_THREADS caps the worker thread count.
Exit codes: 0 success, 2 invalid arguments, 3 numerical failure.
";

/// Parsed `--key value` flags.
pub struct Flags {
    values: BTreeMap<String, String>,
}

impl Flags {
    fn parse(args: &[String]) -> Result<Self, CliError> {
        let mut values = BTreeMap::new();
        let mut it = args.iter();
        while let Some(key) = it.next() {
            let Some(name) = key.strip_prefix("--") else {
                return Err(CliError::Usage(format!("unexpected argument '{key}'")));
            };
            let Some(value) = it.next() else {
                return Err(CliError::Usage(format!("flag --{name} needs a value")));
            };
            if values.insert(name.to_string(), value.clone()).is_some() {
                return Err(CliError::Usage(format!("flag --{name} given twice")));
            }
        }
        Ok(Self { values })
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.values.get(name).map(|s| s.as_str())
    }

    pub fn require(&self, name: &str) -> Result<&str, CliError> {
        self.get(name)
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{name}")))
    }

    pub fn parse_f64(&self, name: &str) -> Result<Option<f64>, CliError> {
        self.get(name)
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("--{name}: '{s}' is not a number")))
            })
            .transpose()
    }

    pub fn require_f64(&self, name: &str) -> Result<f64, CliError> {
        self.parse_f64(name)?
            .ok_or_else(|| CliError::Usage(format!("missing required flag --{name}")))
    }

    pub fn parse_usize(&self, name: &str) -> Result<Option<usize>, CliError> {
        self.get(name)
            .map(|s| {
                s.parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("--{name}: '{s}' is not a count")))
            })
            .transpose()
    }

    pub fn parse_u64(&self, name: &str) -> Result<Option<u64>, CliError> {
        self.get(name)
            .map(|s| {
                s.parse::<u64>()
                    .map_err(|_| CliError::Usage(format!("--{name}: '{s}' is not a seed")))
            })
            .transpose()
    }

    /// All flags as strings, for the run manifest.
    pub fn as_map(&self) -> BTreeMap<String, String> {
        self.values.clone()
    }
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("SICASY_THREADS") {
        if let Ok(t) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build_global();
        }
    }
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(command) = args.first().cloned() else {
        eprintln!("{USAGE}");
        return ExitCode::from(2);
    };
    let result = Flags::parse(&args[1..]).and_then(|flags| match command.as_str() {
        "pv-curve" => commands::pv_curve(&flags),
        "moments" => commands::moments(&flags),
        "sumrate" => commands::sumrate(&flags),
        "optimal" => commands::optimal(&flags),
        "general" => commands::general(&flags),
        "simulate" => commands::simulate(&flags),
        "help" | "--help" | "-h" => {
            println!("{USAGE}");
            Ok(())
        }
        other => Err(CliError::Usage(format!("unknown command '{other}'"))),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}\n\n{USAGE}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
