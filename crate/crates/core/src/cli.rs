//! Command-line front end. Every subcommand is a thin adapter over the
//! library; exit codes are 0 success, 1 negative result, 2 usage error and
//! 3 input error.

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::belief;
use crate::error::{Error, Result};
use crate::evaluate::{self, Witness, DEFAULT_POOL_CAP};
use crate::exec::{with_jobs, Execution};
use crate::extreal::{ExtReal, ExtRealVector};
use crate::geometry;
use crate::model::{self, Document, Pomdp};
use crate::montecarlo::{self, SampleConfig, Sampler, ESTIMATE_CSV_HEADER};
use crate::payoff::MultiPayoff;
use crate::rational::{self, Rational};
use crate::strategy::{self, FiniteMemoryStrategy, FiniteMixture, MemorySkeleton, PureStrategy};
use crate::synthesis::{self, Mode, Pool};

#[derive(Parser, Debug)]
#[command(name = "payset", version, about = "Exact multi-objective analysis of finite (PO)MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Model file (JSON).
    model: PathBuf,
    /// Initial state (defaults to the first state).
    #[arg(long)]
    state: Option<String>,
    /// Machine-readable JSON on stdout.
    #[arg(long)]
    json: bool,
    /// Output file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 keeps the default).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args, Debug, Clone)]
struct PoolArgs {
    /// `memoryless`, `counter:<H>` or `file:<path>`.
    #[arg(long, default_value = "memoryless")]
    skeleton: String,
    /// Largest number of pure strategies to enumerate.
    #[arg(long, default_value_t = DEFAULT_POOL_CAP)]
    cap: u128,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum ModeArg {
    Equals,
    Dominates,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the model against the well-formedness rules.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Expected payoff of a strategy file, or of every pure strategy of a skeleton.
    Evaluate {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pool: PoolArgs,
        /// Strategy or mixture file, or `always:<action>`.
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Extreme points and Pareto frontier of the pure payoff set.
    Frontier {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pool: PoolArgs,
    },
    /// A small mixture realizing or dominating a target.
    Achieve {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pool: PoolArgs,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, value_enum, default_value = "equals")]
        mode: ModeArg,
    },
    /// A mixture approximating a target with infinite components.
    Approx {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pool: PoolArgs,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long, default_value = "1/10")]
        eps: String,
        #[arg(long = "bigM", default_value = "10")]
        big_m: String,
    },
    /// Lexicographic maximum over the pure pool.
    Lexopt {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        pool: PoolArgs,
    },
    /// Integrability of each payoff dimension.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Belief-support graph in DOT.
    BeliefGraph {
        #[command(flatten)]
        common: Common,
    },
    /// Monte-Carlo estimate of the expected payoff.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Strategy or mixture file, or `always:<action>`.
        #[arg(long)]
        strategy: String,
        #[arg(long, default_value_t = 100)]
        horizon: usize,
        #[arg(long, default_value_t = 10_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Exact payoffs of `switch:<a>:<b>` strategies (a for n rounds, then b)
    /// for n = 1..=horizon, against always-a.
    Probe {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        family: String,
        #[arg(long, default_value_t = 12)]
        horizon: usize,
    },
}

/// Runs the command line `argv` (including the program name).
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let jobs = common_of(&cli.command).jobs;
    match with_jobs(jobs, || dispatch(&cli.command)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotAchievable
        | Error::NotInHull
        | Error::NotDominated
        | Error::InfeasibleApproximation(_)
        | Error::UndefinedExpectation(_)
        | Error::SingularSystem
        | Error::PreconditionViolated(_) => 1,
        _ => 3,
    }
}

fn common_of(c: &Command) -> &Common {
    match c {
        Command::Validate { common }
        | Command::Evaluate { common, .. }
        | Command::Frontier { common, .. }
        | Command::Achieve { common, .. }
        | Command::Approx { common, .. }
        | Command::Lexopt { common, .. }
        | Command::Classify { common }
        | Command::BeliefGraph { common }
        | Command::Simulate { common, .. }
        | Command::Probe { common, .. } => common,
    }
}

struct Loaded {
    doc: Document,
    s0: usize,
    f: MultiPayoff,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn load(common: &Common) -> Result<Loaded> {
    let doc = model::load_document(&read(&common.model)?)?;
    let s0 = match &common.state {
        Some(s) => doc.model.state_index(s)?,
        None => 0,
    };
    let f = MultiPayoff::resolve(&doc.model, &doc.payoffs)?;
    Ok(Loaded { doc, s0, f })
}

fn skeleton(m: &Pomdp, spec: &str) -> Result<MemorySkeleton> {
    match spec.strip_prefix("file:") {
        Some(path) => strategy::load_skeleton(m, &read(Path::new(path))?),
        None => strategy::named_skeleton(m, spec),
    }
}

fn pool(l: &Loaded, args: &PoolArgs) -> Result<Pool> {
    let sk = skeleton(&l.doc.model, &args.skeleton)?;
    Pool::enumerate(&l.doc.model, l.s0, &l.f, &sk, args.cap, Execution::default())
}

enum StrategyArg {
    Behavioural(FiniteMemoryStrategy),
    Mixture(FiniteMixture),
}

fn load_strategy_arg(m: &Pomdp, spec: &str) -> Result<StrategyArg> {
    if let Some(a) = spec.strip_prefix("always:") {
        return Ok(StrategyArg::Behavioural(FiniteMemoryStrategy::always(m, m.action_index(a)?)));
    }
    let text = read(Path::new(spec))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    if value.get("support").is_some() {
        Ok(StrategyArg::Mixture(strategy::load_mixture(m, &text)?))
    } else if value.get("mixture").is_some() {
        Ok(StrategyArg::Mixture(strategy::load_mixture(m, &value["mixture"].to_string())?))
    } else {
        Ok(StrategyArg::Behavioural(strategy::load_strategy(m, &text)?))
    }
}

/// `13/4 (3.25)`.
fn show(x: &ExtReal) -> String {
    match x {
        ExtReal::Finite(r) if r.is_integer() => rational::format(r),
        ExtReal::Finite(r) => format!("{} ({})", rational::format(r), decimal(r)),
        other => other.to_string(),
    }
}

fn decimal(r: &Rational) -> String {
    let s = format!("{:.6}", rational::to_f64(r));
    let s = s.trim_end_matches('0').trim_end_matches('.');
    s.to_string()
}

fn show_vec(v: &ExtRealVector) -> String {
    format!("({})", v.0.iter().map(show).collect::<Vec<_>>().join(", "))
}

fn emit(text: &str) -> Result<()> {
    print!("{text}");
    if !text.ends_with('\n') {
        println!();
    }
    Ok(())
}

fn write_out(common: &Common, text: &str) -> Result<()> {
    if let Some(path) = &common.out {
        std::fs::write(path, text)?;
    }
    Ok(())
}

fn pretty(v: &serde_json::Value) -> String {
    serde_json::to_string_pretty(v).expect("json value serializes")
}

fn pool_rows(m: &Pomdp, pool: &Pool) -> serde_json::Value {
    json!(pool
        .members
        .iter()
        .enumerate()
        .map(|(i, (s, v))| json!({ "index": i, "vector": v, "strategy": strategy_json(m, s) }))
        .collect::<Vec<_>>())
}

fn strategy_json(m: &Pomdp, s: &PureStrategy) -> serde_json::Value {
    serde_json::from_str(&strategy::strategy_to_json(m, &s.to_behavioural())).expect("strategy json is valid")
}

fn dispatch(command: &Command) -> Result<i32> {
    match command {
        Command::Validate { common } => {
            let m = model::load_model(&read(&common.model)?)?;
            let report = model::validate(&m);
            if common.json {
                emit(&serde_json::to_string_pretty(&report)?)?;
            } else if report.ok {
                emit("ok")?;
            } else {
                for v in &report.violations {
                    println!("{}\t{}\t{}", v.rule, v.location, v.message);
                }
            }
            Ok(if report.ok { 0 } else { 1 })
        }

        Command::Evaluate { common, pool: pa, strategy } => {
            let l = load(common)?;
            let m = &l.doc.model;
            if let Some(spec) = strategy {
                let v = match load_strategy_arg(m, spec)? {
                    StrategyArg::Behavioural(s) => evaluate::expected_payoff(m, &s, l.s0, &l.f)?,
                    StrategyArg::Mixture(mu) => evaluate::mixed_expected_payoff(m, &mu, l.s0, &l.f)?,
                };
                if common.json {
                    emit(&pretty(&json!({ "vector": v })))?;
                } else {
                    emit(&show_vec(&v))?;
                }
                return Ok(0);
            }
            let p = pool(&l, pa)?;
            if common.json {
                emit(&pretty(&pool_rows(m, &p)))?;
            } else {
                for (i, (_, v)) in p.members.iter().enumerate() {
                    println!("{i}\t{}", show_vec(v));
                }
            }
            Ok(0)
        }

        Command::Frontier { common, pool: pa } => {
            let l = load(common)?;
            let p = pool(&l, pa)?;
            let vectors = p.vectors();
            let pareto = geometry::pareto_frontier(&vectors);
            let (finite_idx, points): (Vec<usize>, Vec<geometry::Point>) =
                vectors.iter().enumerate().filter_map(|(i, v)| v.to_rationals().map(|r| (i, r))).unzip();
            let hull = if points.is_empty() { None } else { Some(geometry::convex_hull(&points)?) };
            let extreme: Vec<usize> = hull.as_ref().map_or(Vec::new(), |h| h.vertices.iter().map(|&k| finite_idx[k]).collect());
            let mut csv = String::from("index,vector,extreme,pareto\n");
            for (i, v) in vectors.iter().enumerate() {
                let cells: Vec<String> = v.0.iter().map(ToString::to_string).collect();
                csv.push_str(&format!("{i},\"{}\",{},{}\n", cells.join(","), extreme.contains(&i), pareto.contains(&i)));
            }
            write_out(common, &csv)?;
            if common.json {
                let mut out = json!({ "pool": { "skeleton": p.label, "size": p.len() }, "vectors": vectors, "extreme": extreme, "pareto": pareto });
                if let Some(h) = &hull {
                    out["hull"] = h.to_json();
                }
                emit(&pretty(&out))?;
            } else {
                println!("index\tvector\textreme\tpareto");
                for (i, v) in vectors.iter().enumerate() {
                    println!("{i}\t{}\t{}\t{}", show_vec(v), extreme.contains(&i), pareto.contains(&i));
                }
            }
            Ok(0)
        }

        Command::Achieve { common, pool: pa, target, mode } => {
            let l = load(common)?;
            let target = ExtRealVector::parse(target)?;
            let p = pool(&l, pa)?;
            let mode = match mode {
                ModeArg::Equals => Mode::Equals,
                ModeArg::Dominates => Mode::Dominates,
            };
            let cert = synthesis::achieve(&l.doc.model, l.s0, &l.f, &target, &p, mode)?;
            report_certificate(common, &l.doc.model, &cert)
        }

        Command::Approx { common, pool: pa, target, eps, big_m } => {
            let l = load(common)?;
            let target = ExtRealVector::parse(target)?;
            let (eps, big_m) = (rational::parse(eps)?, rational::parse(big_m)?);
            let p = pool(&l, pa)?;
            let cert = synthesis::approximate(&l.doc.model, l.s0, &l.f, &target, &eps, &big_m, &p)?;
            report_certificate(common, &l.doc.model, &cert)
        }

        Command::Lexopt { common, pool: pa } => {
            let l = load(common)?;
            let p = pool(&l, pa)?;
            let r = synthesis::lex_optimize(&p)?;
            if common.json {
                let out = json!({
                    "index": r.index,
                    "vector": r.vector,
                    "certified": r.certified,
                    "strategy": strategy_json(&l.doc.model, &r.winner),
                    "pool": { "skeleton": p.label, "size": p.len() },
                });
                emit(&pretty(&out))?;
            } else {
                emit(&format!("pool member {} with {}", r.index, show_vec(&r.vector)))?;
            }
            write_out(common, &strategy::strategy_to_json(&l.doc.model, &r.winner.to_behavioural()))?;
            Ok(0)
        }

        Command::Classify { common } => {
            let l = load(common)?;
            let m = &l.doc.model;
            let verdicts = evaluate::classify_integrability(m, &l.f, l.s0)?;
            let rows: Vec<serde_json::Value> = verdicts
                .iter()
                .map(|v| {
                    let witness = match &v.witness {
                        Witness::None => json!(null),
                        Witness::Strategy(s) => serde_json::from_str(&strategy::strategy_to_json(m, s)).expect("valid"),
                        Witness::EndComponent(states) => {
                            json!({ "end_component": states.iter().map(|&s| m.states[s].clone()).collect::<Vec<_>>() })
                        }
                        Witness::Note(n) => json!({ "note": n }),
                    };
                    json!({ "payoff": v.label, "verdict": v.verdict, "witness": witness })
                })
                .collect();
            if common.json {
                emit(&pretty(&json!(rows)))?;
            } else {
                for v in &verdicts {
                    println!("{}\t{:?}", v.label, v.verdict);
                }
            }
            Ok(0)
        }

        Command::BeliefGraph { common } => {
            let m = model::load_model(&read(&common.model)?)?;
            let s0 = match &common.state {
                Some(s) => m.state_index(s)?,
                None => 0,
            };
            let g = belief::belief_graph(&m, s0);
            let dot = belief::to_dot(&m, &g);
            write_out(common, &dot)?;
            if common.out.is_none() || common.json {
                emit(&dot)?;
            }
            Ok(0)
        }

        Command::Simulate { common, strategy: spec, horizon, samples, seed } => {
            let l = load(common)?;
            let m = &l.doc.model;
            let cfg = SampleConfig::new(*samples, *horizon, *seed);
            let arg = load_strategy_arg(m, spec)?;
            let sampler = match &arg {
                StrategyArg::Behavioural(s) => Sampler::Behavioural(s),
                StrategyArg::Mixture(mu) => Sampler::Mixture(mu),
            };
            let est = montecarlo::estimate_expectation(m, sampler, l.s0, &l.f, &cfg)?;
            let csv = format!("{ESTIMATE_CSV_HEADER}{}", est.to_csv(spec));
            write_out(common, &csv)?;
            if common.json {
                let out = json!({
                    "mean": est.mean,
                    "stderr": est.stderr,
                    "n": est.n,
                    "bias_bound": est.bias_bound.iter().map(|b| b.as_ref().map(rational::format)).collect::<Vec<_>>(),
                    "censored": est.censored,
                    "seed": est.seed,
                });
                emit(&pretty(&out))?;
            } else {
                emit(&csv)?;
            }
            Ok(0)
        }

        Command::Probe { common, family, horizon } => {
            let l = load(common)?;
            let m = &l.doc.model;
            let parts: Vec<&str> = family.split(':').collect();
            let ["switch", first, then] = parts[..] else {
                return Err(Error::InvalidArgument(format!("unknown family `{family}`; expected switch:<a>:<b>")));
            };
            let (a, b) = (m.action_index(first)?, m.action_index(then)?);
            let fam = |n: usize| -> Result<FiniteMemoryStrategy> {
                let sk = Arc::new(MemorySkeleton::counter(m, n));
                Ok(PureStrategy::uniform_choice(m, sk, |mem, _| if mem < n { a } else { b }).to_behavioural())
            };
            let limit = FiniteMemoryStrategy::always(m, a);
            let indices: Vec<usize> = (1..=*horizon).collect();
            let table = montecarlo::convergence_probe(m, fam, &limit, l.s0, &l.f, &indices, horizon + 2)?;
            write_out(common, &table.to_csv())?;
            if common.json {
                let rows: Vec<serde_json::Value> = table
                    .rows
                    .iter()
                    .map(|r| json!({ "index": r.index, "vector": r.vector, "distance": rational::format(&r.distance) }))
                    .collect();
                emit(&pretty(&json!({ "limit": table.limit, "rows": rows })))?;
            } else {
                for r in &table.rows {
                    println!("{}\t{}\t{}", r.index, show_vec(&r.vector), rational::format(&r.distance));
                }
                println!("limit\t{}", show_vec(&table.limit));
            }
            Ok(0)
        }
    }
}

fn report_certificate(common: &Common, m: &Pomdp, cert: &synthesis::MixtureCertificate) -> Result<i32> {
    write_out(common, &strategy::mixture_to_json(m, &cert.mixture))?;
    if common.json {
        emit(&pretty(&cert.to_json(m)))?;
    } else {
        println!("target   {}", show_vec(&cert.target));
        println!("realized {}", show_vec(&cert.realized));
        for (i, w) in cert.members.iter().zip(&cert.mixture.weights) {
            println!("  pool member {i} with weight {}", show(&ExtReal::Finite(w.clone())));
        }
    }
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_2() {
        assert_eq!(run(["payset"]), 2);
        assert_eq!(run(["payset", "frobnicate"]), 2);
    }

    #[test]
    fn missing_file_is_input_error() {
        assert_eq!(run(["payset", "validate", "/nonexistent/model.json"]), 3);
    }

    #[test]
    fn shows_rationals_with_decimals() {
        assert_eq!(show(&ExtReal::Finite(rational::ratio(13, 4))), "13/4 (3.25)");
        assert_eq!(show(&ExtReal::Finite(rational::int(2))), "2");
        assert_eq!(show(&ExtReal::PosInf), "+inf");
    }
}
