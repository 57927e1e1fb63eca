//! Seeded experiment runner behind the `prefixsim` binary.
//!
//! Each subcommand runs independent trials in parallel, trial `i` drawing all
//! of its randomness from the stream keyed by `(seed, i)`. A run produces one
//! JSON line per trial followed by a summary line; the summary carries the
//! configuration, the oracle ledger, the statistical checks and the wall
//! clock. Everything except the wall clock is a function of the configuration.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, RngCore};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::adhoc::hard::{effective_samples, gen_hard_instance, off_path_posterior, Label};
use crate::adhoc::thresholds::threshold_constants;
use crate::adhoc::{gen_instance, tester_width, test_ad_hoc};
use crate::bits::{BitString, Prefix};
use crate::distance::{pipeline_budget, tv_pipeline, TvParams};
use crate::divergence::{kl_divergence, tv_distance};
use crate::error::{domain, Error, Result};
use crate::lab::verify_lemmas;
use crate::oracle::{ConditionalSampler, PrefixOracle};
use crate::reduction::{interval_breakdown, IntervalDistribution};
use crate::rng::{tags, RandomStream};
use crate::simulation::{init_simulation, preprocess, SimulationState, MAX_PREPROCESS_N};
use crate::tree::MarginalTree;

/// Environment variable naming the directory for records when `--output` is
/// absent.
pub const OUTPUT_DIR_ENV: &str = "PREFIXSIM_OUTPUT_DIR";

#[derive(Clone, Debug, Parser, Serialize)]
#[command(name = "prefixsim", version, about = "Seeded experiments on simulation from prefix conditional samples")]
pub struct ExperimentConfig {
    #[command(subcommand)]
    pub command: Command,

    /// Write JSON lines here instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    /// Also write the per-trial fields as CSV.
    #[arg(long, global = true)]
    pub csv: Option<PathBuf>,
}

#[derive(Clone, Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case", tag = "command")]
pub enum Command {
    /// Learn random trees with the eager simulation and measure D_KL(μ̃‖μ).
    Simulate(SimulateArgs),
    /// Estimate d_TV between random tree pairs through two lazy simulations.
    EstimateTv(EstimateTvArgs),
    /// Run the Poissonized tester on balanced and biased ad-hoc instances.
    Adhoc(AdhocArgs),
    /// Measure effective samples on hard yes-instances.
    HardInstance(HardInstanceArgs),
    /// Check the divergence inequalities on random instances.
    VerifyLemmas(VerifyLemmasArgs),
    /// Compare simulations through the interval adapter with direct runs.
    ReduceInterval(ReduceIntervalArgs),
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 6)]
    pub n: usize,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    #[arg(long, default_value_t = 300)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct EstimateTvArgs {
    #[arg(long, default_value_t = 4)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct AdhocArgs {
    /// Instance length. Defaults to the tester width ⌈15/r²⌉.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    #[arg(long, default_value_t = 1.0 / 13.0)]
    pub r: f64,
    #[arg(long, default_value_t = 300)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct HardInstanceArgs {
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 1000)]
    pub trials: usize,
    /// Draws per instance.
    #[arg(long, default_value_t = 100)]
    pub draws: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct VerifyLemmasArgs {
    /// Random instances per checker.
    #[arg(long, default_value_t = 10_000)]
    pub sweep: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Clone, Debug, Args, Serialize)]
pub struct ReduceIntervalArgs {
    #[arg(long, default_value_t = 8)]
    pub domain_size: usize,
    #[arg(long, default_value_t = 0.25)]
    pub delta: f64,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// A named pass/fail statistic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
        }
    }
}

/// Oracle calls summed over all trials.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct BudgetTotals {
    pub conditional_calls: u64,
    pub marginal_calls: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub config: Value,
    pub trials: Vec<Value>,
    pub summary: Value,
    pub checks: Vec<Check>,
    pub budget: BudgetTotals,
    pub wall_clock_secs: f64,
    pub version: &'static str,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Trial lines, then the summary line.
    pub fn write_jsonl(&self, mut out: impl Write) -> Result<()> {
        for trial in &self.trials {
            serde_json::to_writer(&mut out, trial)?;
            out.write_all(b"\n")?;
        }
        let summary = json!({
            "summary": self.summary,
            "config": self.config,
            "checks": self.checks,
            "budget": self.budget,
            "passed": self.passed(),
            "wall_clock_secs": self.wall_clock_secs,
            "version": self.version,
        });
        serde_json::to_writer(&mut out, &summary)?;
        out.write_all(b"\n")?;
        Ok(())
    }

    /// Trial fields as CSV, columns from the first trial. Nested values are
    /// written as JSON.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let Some(Value::Object(first)) = self.trials.first() else {
            writer.flush()?;
            return Ok(());
        };
        let columns: Vec<&String> = first.keys().collect();
        writer
            .write_record(columns.iter().map(|c| c.as_str()))
            .map_err(csv_error)?;
        for trial in &self.trials {
            let row = columns.iter().map(|c| match &trial[c.as_str()] {
                Value::String(s) => s.clone(),
                Value::Null => String::new(),
                v => v.to_string(),
            });
            writer.write_record(row).map_err(csv_error)?;
        }
        writer.flush()?;
        Ok(())
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Simulate(_) => "simulate",
            Command::EstimateTv(_) => "estimate-tv",
            Command::Adhoc(_) => "adhoc",
            Command::HardInstance(_) => "hard-instance",
            Command::VerifyLemmas(_) => "verify-lemmas",
            Command::ReduceInterval(_) => "reduce-interval",
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Command::Simulate(a) => a.seed,
            Command::EstimateTv(a) => a.seed,
            Command::Adhoc(a) => a.seed,
            Command::HardInstance(a) => a.seed,
            Command::VerifyLemmas(a) => a.seed,
            Command::ReduceInterval(a) => a.seed,
        }
    }
}

impl ExperimentConfig {
    /// Where the JSON lines go: `--output`, else a file named after the
    /// command and seed in `$PREFIXSIM_OUTPUT_DIR`, else stdout (`None`).
    pub fn output_path(&self) -> Option<PathBuf> {
        self.output.clone().or_else(|| {
            std::env::var_os(OUTPUT_DIR_ENV).map(|dir| {
                Path::new(&dir).join(format!("{}-{}.jsonl", self.command.name(), self.command.seed()))
            })
        })
    }

    /// Writes the record to its destinations.
    pub fn emit(&self, record: &RunRecord) -> Result<()> {
        match self.output_path() {
            Some(path) => {
                if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                    std::fs::create_dir_all(dir)?;
                }
                let mut out = BufWriter::new(File::create(path)?);
                record.write_jsonl(&mut out)?;
                out.flush()?;
            }
            None => {
                let stdout = std::io::stdout();
                let mut out = stdout.lock();
                record.write_jsonl(&mut out)?;
            }
        }
        if let Some(path) = &self.csv {
            record.write_csv(BufWriter::new(File::create(path)?))?;
        }
        Ok(())
    }
}

fn trial_stream(seed: u64, i: usize) -> RandomStream {
    RandomStream::for_index(seed, tags::TRIAL, i as u64)
}

fn positive(name: &str, v: usize) -> Result<()> {
    if v == 0 {
        return domain(format!("--{name} must be positive"));
    }
    Ok(())
}

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let k = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / k;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

struct Outcome {
    trials: Vec<Value>,
    summary: Value,
    checks: Vec<Check>,
    budget: BudgetTotals,
}

/// Validates the configuration, runs every trial and collects the record.
pub fn run(config: &ExperimentConfig) -> Result<RunRecord> {
    let start = Instant::now();
    let outcome = match &config.command {
        Command::Simulate(a) => simulate(a)?,
        Command::EstimateTv(a) => estimate(a)?,
        Command::Adhoc(a) => adhoc(a)?,
        Command::HardInstance(a) => hard(a)?,
        Command::VerifyLemmas(a) => lemmas(a)?,
        Command::ReduceInterval(a) => reduce(a)?,
    };
    Ok(RunRecord {
        config: serde_json::to_value(&config.command)?,
        trials: outcome.trials,
        summary: outcome.summary,
        checks: outcome.checks,
        budget: outcome.budget,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION"),
    })
}

fn simulate(a: &SimulateArgs) -> Result<Outcome> {
    positive("n", a.n)?;
    positive("trials", a.trials)?;
    if a.n > MAX_PREPROCESS_N {
        return domain(format!("--n must be at most {MAX_PREPROCESS_N}"));
    }
    crate::simulation::samples_per_edge(a.n, a.delta)?;
    let results: Vec<(f64, u64)> = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_stream(a.seed, i);
            let mu = MarginalTree::random(a.n, 0.2, 0.8, &mut rng)?;
            let mut oracle = PrefixOracle::new(mu.clone());
            let learned = preprocess(&mut oracle, a.delta, rng.next_u64())?;
            Ok((kl_divergence(learned.tree(), &mu)?, oracle.budget().conditional_calls))
        })
        .collect::<Result<_>>()?;
    let kls: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (mean, se) = mean_and_se(&kls);
    let bound = a.delta + 3.0 * se;
    Ok(Outcome {
        trials: results
            .iter()
            .enumerate()
            .map(|(i, (kl, calls))| json!({"trial": i, "kl": kl, "conditional_calls": calls}))
            .collect(),
        summary: json!({"mean_kl": mean, "standard_error": se, "bound": bound}),
        checks: vec![Check::new("mean_kl <= delta + 3*se", mean <= bound)],
        budget: BudgetTotals {
            conditional_calls: results.iter().map(|r| r.1).sum(),
            marginal_calls: 0,
        },
    })
}

fn estimate(a: &EstimateTvArgs) -> Result<Outcome> {
    positive("n", a.n)?;
    positive("trials", a.trials)?;
    if a.n > 12 {
        return domain("--n must be at most 12");
    }
    let params = TvParams::default();
    let closed_form = pipeline_budget(a.n, a.epsilon, &params)?;
    let reports: Vec<(f64, crate::distance::PipelineReport)> = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_stream(a.seed, i);
            let mu = MarginalTree::random(a.n, 0.2, 0.8, &mut rng)?;
            let tau = MarginalTree::random(a.n, 0.2, 0.8, &mut rng)?;
            let exact = tv_distance(&mu, &tau)?;
            let report = tv_pipeline(PrefixOracle::new(mu), PrefixOracle::new(tau), a.epsilon, &params, rng.next_u64())?;
            Ok((exact, report))
        })
        .collect::<Result<_>>()?;
    let within = reports
        .iter()
        .filter(|(exact, r)| (r.estimate - exact).abs() <= a.epsilon)
        .count();
    let spent = |r: &crate::distance::PipelineReport| r.budget_a.conditional_calls + r.budget_b.conditional_calls;
    let at_closed_form = reports.iter().filter(|(_, r)| spent(r) == closed_form).count();
    let rate = within as f64 / a.trials as f64;
    Ok(Outcome {
        trials: reports
            .iter()
            .enumerate()
            .map(|(i, (exact, r))| {
                json!({
                    "trial": i,
                    "estimate": r.estimate,
                    "exact": exact,
                    "error": (r.estimate - exact).abs(),
                    "budget_a": r.budget_a.conditional_calls,
                    "budget_b": r.budget_b.conditional_calls,
                })
            })
            .collect(),
        summary: json!({
            "epsilon": a.epsilon,
            "delta": crate::distance::pipeline_delta(a.epsilon),
            "within_epsilon_rate": rate,
            "closed_form_budget": closed_form,
            "trials_at_closed_form": at_closed_form,
        }),
        checks: vec![
            Check::new("within_epsilon_rate >= 2/3", 3 * within >= 2 * a.trials),
            Check::new("budget <= closed form", reports.iter().all(|(_, r)| spent(r) <= closed_form)),
        ],
        budget: BudgetTotals {
            conditional_calls: reports.iter().map(|(_, r)| spent(r)).sum(),
            marginal_calls: 0,
        },
    })
}

fn adhoc(a: &AdhocArgs) -> Result<Outcome> {
    positive("trials", a.trials)?;
    let n = match a.n {
        Some(n) => n,
        None => tester_width(a.r)?,
    };
    // range checks before any sampling
    gen_instance(1, a.delta, a.r, &mut RandomStream::from_seed(0))?;
    let width = tester_width(a.r)?;
    if n < width {
        return domain(format!("--n = {n} is below the tester width {width}"));
    }
    crate::adhoc::tester_rate(a.delta)?;
    let rows: Vec<Value> = (0..a.trials)
        .into_par_iter()
        .flat_map_iter(|i| {
            [(Label::Yes, 0.0), (Label::No, a.r)].into_iter().enumerate().map(move |(side, (label, bias))| {
                let mut rng = trial_stream(a.seed, 2 * i + side);
                let trial_seed = rng.next_u64();
                let mut inst = gen_instance(n, a.delta, bias, &mut rng)?;
                let out = test_ad_hoc(&mut inst, a.delta, a.r, &mut rng)?;
                Ok(json!({
                    "trial": i,
                    "label": label,
                    "verdict": out.verdict,
                    "x": out.x,
                    "loop_count": out.loop_count,
                    "threshold": out.threshold,
                    "seed": trial_seed,
                }))
            })
        })
        .collect::<Result<_>>()?;
    let count = |label: &str, verdict: &str| {
        rows.iter()
            .filter(|r| r["label"] == label && r["verdict"] == verdict)
            .count() as f64
    };
    let trials = a.trials as f64;
    let accept_rate = count("yes", "accept") / trials;
    let reject_rate = count("no", "reject") / trials;
    let draws: u64 = rows.iter().map(|r| r["loop_count"].as_u64().unwrap_or(0)).sum();
    Ok(Outcome {
        summary: json!({
            "n": n,
            "n_prime": width,
            "q": crate::adhoc::tester_rate(a.delta)?,
            "accept_rate": accept_rate,
            "reject_rate": reject_rate,
        }),
        trials: rows,
        checks: vec![
            Check::new("accept_rate >= 0.6", accept_rate >= 0.6),
            Check::new("reject_rate >= 0.6", reject_rate >= 0.6),
        ],
        budget: BudgetTotals {
            conditional_calls: draws,
            marginal_calls: 0,
        },
    })
}

fn hard(a: &HardInstanceArgs) -> Result<Outcome> {
    positive("n", a.n)?;
    positive("trials", a.trials)?;
    positive("draws", a.draws)?;
    let probe = gen_hard_instance(a.n, a.epsilon, Label::Yes, 0)?;
    let delta = probe.delta();
    let rows: Vec<(f64, u64)> = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_stream(a.seed, i);
            let inst = gen_hard_instance(a.n, a.epsilon, Label::Yes, rng.next_u64())?;
            let mut oracle = inst.oracle();
            let total: usize = (0..a.draws)
                .map(|_| effective_samples(&mut oracle, &Prefix::empty(), inst.challenge(), &mut rng))
                .sum();
            Ok((total as f64 / a.draws as f64, oracle.budget().conditional_calls))
        })
        .collect::<Result<_>>()?;
    let per_trial: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let (mean, se) = mean_and_se(&per_trial);
    let band = 2.0 / (1.0 - delta) + 4.0 * se;
    let mut summary = json!({
        "delta": delta,
        "mean_effective": mean,
        "standard_error": se,
        "band": band,
    });
    if let Ok(c) = threshold_constants(a.n as f64, a.epsilon) {
        summary["k_h"] = json!(c.k_h);
        summary["k_l"] = json!(c.k_l);
        summary["ln_p_h"] = json!(c.ln_p_h);
        summary["ln_p_l"] = json!(c.ln_p_l);
        summary["gap"] = json!(c.gap());
    }
    Ok(Outcome {
        trials: per_trial
            .iter()
            .enumerate()
            .map(|(i, m)| json!({"trial": i, "label": Label::Yes, "mean_effective": m}))
            .collect(),
        summary,
        checks: vec![
            Check::new("mean_effective <= 3", mean <= 3.0),
            Check::new("mean_effective <= 2/(1-delta) + 4*se", mean <= band),
        ],
        budget: BudgetTotals {
            conditional_calls: rows.iter().map(|r| r.1).sum(),
            marginal_calls: 0,
        },
    })
}

fn lemmas(a: &VerifyLemmasArgs) -> Result<Outcome> {
    positive("sweep", a.sweep)?;
    let results = verify_lemmas(a.sweep, a.seed)?;
    let grid = crate::lab::binomial_kl_grid(crate::lab::MAX_BINOMIAL_M, 100)?;
    // off-path signs are uniform given the challenge, under both labels
    let r = BigRational::new(BigInt::from(1), BigInt::from(3));
    let uniform = BigRational::new(BigInt::from(1), BigInt::from(16));
    let mut posterior_ok = true;
    for label in [Label::Yes, Label::No] {
        for x in BitString::all(3) {
            posterior_ok &= off_path_posterior(3, &r, label, &x)?.values().all(|p| *p == uniform);
        }
    }
    let mut checks: Vec<Check> = results.iter().map(|r| Check::new(r.name, r.passed)).collect();
    checks.push(Check::new("off_path_posterior_uniform", posterior_ok));
    Ok(Outcome {
        trials: results.iter().map(|r| serde_json::to_value(r).expect("plain struct")).collect(),
        summary: json!({
            "binomial_max_scaled": grid.max_scaled,
            "binomial_argmax_m": grid.argmax_m,
            "binomial_argmax_p": grid.argmax_p,
        }),
        checks,
        budget: BudgetTotals::default(),
    })
}

/// Scripted interaction: queries of fixed elements interleaved with samples.
fn interact<S: ConditionalSampler>(sim: &mut SimulationState<S>, rng: &mut RandomStream, steps: usize) -> Result<Vec<(String, u64)>> {
    let n = sim.n();
    let mut out = Vec::with_capacity(steps);
    for _ in 0..steps {
        if rng.random::<bool>() {
            let x = BitString::from_index(n, rng.random_range(0..1usize << n));
            out.push((x.to_string(), sim.query(&x)?.to_bits()));
        } else {
            let (x, p) = sim.sample(rng);
            out.push((x.to_string(), p.to_bits()));
        }
    }
    Ok(out)
}

fn reduce(a: &ReduceIntervalArgs) -> Result<Outcome> {
    positive("trials", a.trials)?;
    let adapter = interval_breakdown(a.domain_size)?;
    if adapter.height() > 16 {
        return domain("--domain-size must be at most 2^16");
    }
    crate::simulation::samples_per_edge(adapter.height(), a.delta)?;
    let rows: Vec<(bool, u64, u64)> = (0..a.trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = trial_stream(a.seed, i);
            let native = IntervalDistribution::random(a.domain_size, &mut rng)?;
            let direct = native.encoded(&adapter)?;
            let sim_seed = rng.next_u64();
            let user_seed = rng.next_u64();
            let mut via = init_simulation(adapter.adapt(native)?, a.delta, sim_seed)?;
            let mut plain = init_simulation(PrefixOracle::new(direct), a.delta, sim_seed)?;
            let left = interact(&mut via, &mut RandomStream::from_seed(user_seed), 64)?;
            let right = interact(&mut plain, &mut RandomStream::from_seed(user_seed), 64)?;
            let calls = via.budget().conditional_calls;
            let same = left == right && calls == plain.budget().conditional_calls;
            Ok((same, calls, via.oracle().sampler().native_calls()))
        })
        .collect::<Result<_>>()?;
    let identical = rows.iter().filter(|r| r.0).count();
    Ok(Outcome {
        trials: rows
            .iter()
            .enumerate()
            .map(|(i, (same, calls, native))| {
                json!({"trial": i, "identical": same, "conditional_calls": calls, "native_calls": native})
            })
            .collect(),
        summary: json!({"height": adapter.height(), "identical_trials": identical}),
        checks: vec![Check::new("adapter runs bit-identical", identical == a.trials)],
        budget: BudgetTotals {
            conditional_calls: rows.iter().map(|r| r.1).sum(),
            marginal_calls: 0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> ExperimentConfig {
        ExperimentConfig::try_parse_from(std::iter::once("prefixsim").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parses_symbol_flags() {
        let c = parse(&["adhoc", "--delta", "0.3", "--r", "0.0769", "--trials", "5", "--seed", "3"]);
        match c.command {
            Command::Adhoc(a) => {
                assert_eq!(a.delta, 0.3);
                assert_eq!(a.r, 0.0769);
                assert_eq!(a.n, None);
            }
            other => panic!("parsed {other:?}"),
        }
        assert!(ExperimentConfig::try_parse_from(["prefixsim", "simulate", "--bogus"]).is_err());
    }

    #[test]
    fn invalid_parameters_are_domain_errors() {
        for args in [
            &["simulate", "--n", "0"][..],
            &["simulate", "--n", "21"],
            &["simulate", "--delta", "0"],
            &["estimate-tv", "--epsilon", "1.5"],
            &["adhoc", "--delta", "0.4"],
            &["adhoc", "--n", "10"],
            &["hard-instance", "--epsilon", "0"],
            &["reduce-interval", "--domain-size", "0"],
            &["verify-lemmas", "--sweep", "0"],
        ] {
            assert!(matches!(run(&parse(args)), Err(Error::Domain(_))), "{args:?}");
        }
    }

    #[test]
    fn small_runs_pass_and_repeat() {
        let c = parse(&["simulate", "--n", "3", "--delta", "0.5", "--trials", "20", "--seed", "4"]);
        let a = run(&c).unwrap();
        let b = run(&c).unwrap();
        assert!(a.passed());
        assert_eq!(a.trials, b.trials);
        assert_eq!(a.budget.conditional_calls, 20 * 7 * 6);
    }

    #[test]
    fn csv_has_header_and_rows() {
        let c = parse(&["reduce-interval", "--domain-size", "5", "--trials", "3"]);
        let record = run(&c).unwrap();
        assert!(record.passed());
        let mut buf = Vec::new();
        record.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.starts_with("conditional_calls,identical,native_calls,trial"));
    }
}
