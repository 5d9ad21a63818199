mod cache;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use depthlab::analysis::{
    depth, diagonal_from_census, k_t, q_t, slow_growth_audit, speedup_demo, AnalysisError,
    BudgetPolicy, Transform,
};
use depthlab::bits::BitsError;
use depthlab::census::{census_to_string, load_census, BuildOptions, CensusError};
use depthlab::proxy::{proxy_depth_report, CorpusItem, CorpusKind, CostModel, ProxyError};
use depthlab::verify::{refute_shallow, run_scenario, Refutation, Scenario, Verdict, VerifyError};
use depthlab::{BitString, CensusParams, HaltingCensus};

use cache::{write_atomic, CensusCache};

/// Bounded logical depth experiments on the UM-1 machine.
#[derive(Parser)]
#[command(name = "depthlab", version)]
struct Cli {
    /// Worker threads for enumeration and proxy runs.
    #[arg(long, global = true, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..=1024))]
    workers: u64,
    /// Census cache directory.
    #[arg(long, global = true, env = "DEPTHLAB_CACHE")]
    cache: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate every halting program up to the given bounds.
    Census {
        #[arg(short = 'L')]
        max_program_bits: usize,
        #[arg(short = 't')]
        max_steps: u64,
        /// Longest output kept (defaults to L).
        #[arg(long)]
        cap: Option<usize>,
        /// Write the census file here; without it the file is printed.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Shortest program length printing x.
    Kt(Query),
    /// Time-bounded algorithmic probability of x.
    Qt(Query),
    /// Bounded depth of x at significance s.
    Depth {
        #[command(flatten)]
        query: Query,
        #[arg(short = 's', default_value_t = 0)]
        significance: usize,
    },
    /// Find a string of length n with small fast probability.
    Diagonal {
        #[arg(short = 'n')]
        n: usize,
        #[arg(short = 'T')]
        step_bound: u64,
        #[arg(short = 'L')]
        program_bound: usize,
        #[arg(long, default_value_t = 0)]
        margin: usize,
        /// Also write the certificate here.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
    /// Compare depth before and after simple transforms.
    Audit {
        #[command(flatten)]
        source: CensusSource,
        /// Allowed depth increase in steps.
        #[arg(long, default_value_t = 0)]
        budget: u64,
        /// Comma-separated transforms (default: all).
        #[arg(long, value_delimiter = ',')]
        transforms: Vec<String>,
    },
    /// Depth from the stored census versus a fresh enumeration.
    Speedup {
        #[command(flatten)]
        query: Query,
        #[arg(short = 's', default_value_t = 0)]
        significance: usize,
        /// Report wall-clock timings (makes output non-reproducible).
        #[arg(long)]
        timing: bool,
    },
    /// Run a prover/verifier scenario.
    Verify {
        #[arg(long)]
        scenario: PathBuf,
        /// Override the scenario's sampling seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Search for a fast program printing x below a depth threshold.
    Refute {
        #[arg(short = 'x', value_parser = parse_bits)]
        x: BitString,
        #[arg(long)]
        threshold: u64,
        #[arg(short = 'L')]
        max_program_bits: usize,
        #[arg(short = 't')]
        max_steps: u64,
    },
    /// Compression proxy on synthetic corpora.
    Proxy {
        /// Corpus item as constant:N:BYTE, noise:N:SEED or structured:WIDTH:GENERATIONS.
        #[arg(long = "corpus")]
        corpus: Vec<String>,
        /// Decoder costs per token, literal byte and match byte.
        #[arg(long, default_value = "1,1,1")]
        model: String,
        /// Write the CSV report here.
        #[arg(short = 'o', long)]
        output: Option<PathBuf>,
    },
}

/// Either a census file or bounds to build one from.
#[derive(Args)]
struct CensusSource {
    /// Census file to read.
    #[arg(short = 'c', long = "census", conflicts_with_all = ["max_program_bits", "max_steps", "cap", "per_output_length"])]
    file: Option<PathBuf>,
    #[arg(short = 'L')]
    max_program_bits: Option<usize>,
    #[arg(short = 't', conflicts_with = "per_output_length")]
    max_steps: Option<u64>,
    /// Longest output kept (defaults to max(L, |x|)).
    #[arg(long)]
    cap: Option<usize>,
    /// Step budget c*|x|^k instead of a fixed -t.
    #[arg(long, value_name = "C,K")]
    per_output_length: Option<String>,
}

#[derive(Args)]
struct Query {
    #[command(flatten)]
    source: CensusSource,
    #[arg(short = 'x', value_parser = parse_bits)]
    x: BitString,
}

fn parse_bits(s: &str) -> Result<BitString, BitsError> {
    s.parse()
}

/// Argument problems found after parsing; reported like clap errors.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

struct Ctx {
    format: Format,
    cache: CensusCache,
    workers: usize,
}

impl CensusSource {
    fn resolve(&self, ctx: &Ctx, x: Option<&BitString>) -> Result<HaltingCensus> {
        if let Some(path) = &self.file {
            return load_census(path).with_context(|| format!("reading {}", path.display()));
        }
        let l = self
            .max_program_bits
            .ok_or_else(|| usage("give a census file with -c or bounds with -L and -t"))?;
        let t = match (&self.max_steps, &self.per_output_length) {
            (Some(t), _) => *t,
            (None, Some(text)) => {
                let policy: BudgetPolicy = format!("per-output-length:{text}")
                    .parse()
                    .map_err(|_| usage(format!("--per-output-length expects C,K, got {text:?}")))?;
                let x = x.ok_or_else(|| usage("--per-output-length needs a target string"))?;
                policy.steps_for(x.len())
            }
            (None, None) => return Err(usage("give a step budget with -t or --per-output-length")),
        };
        let cap = self.cap.unwrap_or_else(|| l.max(x.map_or(0, BitString::len)));
        let params = CensusParams::with_output_cap(l, t, cap)?;
        Ok(ctx.cache.get(&params)?.0)
    }
}

fn emit<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn emit_csv(header: &str, rows: impl IntoIterator<Item = String>) {
    println!("{header}");
    for row in rows {
        println!("{row}");
    }
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or_else(String::new, T::to_string)
}

fn bounds_json(c: &HaltingCensus) -> serde_json::Value {
    json!({ "L": c.params().max_program_bits(), "t": c.params().max_steps() })
}

/// Outcome of a subcommand that ran to completion.
enum Done {
    Ok,
    /// The computation succeeded but its answer is "no".
    Refused(serde_json::Value),
}

fn dispatch(cli: Cli) -> Result<Done> {
    let workers = usize::try_from(cli.workers).expect("bounded by the parser");
    let ctx = Ctx {
        format: cli.format,
        cache: CensusCache::new(
            cli.cache,
            BuildOptions {
                workers,
                ..BuildOptions::default()
            },
        ),
        workers,
    };
    let csv = ctx.format == Format::Csv;

    match cli.command {
        Command::Census {
            max_program_bits,
            max_steps,
            cap,
            output,
        } => {
            let params = CensusParams::with_output_cap(
                max_program_bits,
                max_steps,
                cap.unwrap_or(max_program_bits),
            )?;
            let (census, origin) = ctx.cache.get(&params)?;
            let Some(path) = output else {
                print!("{}", census_to_string(&census));
                return Ok(Done::Ok);
            };
            write_atomic(&path, &census_to_string(&census))?;
            if csv {
                emit_csv(
                    "key,count,kraft,checksum,source",
                    [format!(
                        "{},{},{},{},{}",
                        params.cache_key(),
                        census.count(),
                        census.kraft(),
                        census.checksum(),
                        origin.as_str()
                    )],
                );
            } else {
                emit(&json!({
                    "key": params.cache_key(),
                    "path": path.display().to_string(),
                    "count": census.count(),
                    "kraft": census.kraft().to_string(),
                    "checksum": census.checksum(),
                    "source": origin.as_str(),
                }))?;
            }
        }
        Command::Kt(q) => {
            let census = q.source.resolve(&ctx, Some(&q.x))?;
            let k = k_t(&census, &q.x);
            if csv {
                emit_csv("x,k_t", [format!("{},{}", q.x, k.map_or("none-found".into(), |k| k.to_string()))]);
            } else {
                let k = k.map_or(json!("none-found"), |k| json!(k));
                emit(&json!({ "x": q.x, "k_t": k, "bounds": bounds_json(&census) }))?;
            }
        }
        Command::Qt(q) => {
            let census = q.source.resolve(&ctx, Some(&q.x))?;
            let value = q_t(&census, &q.x);
            if csv {
                emit_csv("x,q_t", [format!("{},{}", q.x, value)]);
            } else {
                emit(&json!({ "x": q.x, "q_t": value, "bounds": bounds_json(&census) }))?;
            }
        }
        Command::Depth { query, significance } => {
            let census = query.source.resolve(&ctx, Some(&query.x))?;
            let r = depth(&census, &query.x, significance);
            if csv {
                emit_csv(
                    "x,k_hat,q_hat,s,depth_hat,witness",
                    [format!(
                        "{},{},{},{},{},{}",
                        r.x,
                        r.k_hat.map_or("none-found".into(), |k| k.to_string()),
                        r.q_hat,
                        r.s,
                        r.depth_hat,
                        opt(&r.witness.as_ref().map(|p| p.bits().to_string()))
                    )],
                );
            } else {
                emit(&r)?;
            }
        }
        Command::Diagonal {
            n,
            step_bound,
            program_bound,
            margin,
            output,
        } => {
            let params = CensusParams::with_output_cap(program_bound, step_bound, program_bound.max(n))?;
            let (census, _) = ctx.cache.get(&params)?;
            let cert = match diagonal_from_census(&census, n, margin) {
                Err(AnalysisError::NoDeepString {
                    n,
                    step_bound,
                    program_bound,
                }) => {
                    return Ok(Done::Refused(json!({
                        "error": "no-deep-string-at-these-bounds",
                        "n": n,
                        "T": step_bound,
                        "L": program_bound,
                        "margin": margin,
                    })))
                }
                other => other?,
            };
            if let Some(path) = output {
                write_atomic(&path, &format!("{}\n", serde_json::to_string_pretty(&cert)?))?;
            }
            if csv {
                emit_csv(
                    "x,n,T,L,margin,q_fast,threshold,census_ref",
                    [format!(
                        "{},{},{},{},{},{},{},{}",
                        cert.x, cert.n, cert.step_bound, cert.program_bound, cert.margin, cert.q_fast, cert.threshold, cert.census_ref
                    )],
                );
            } else {
                emit(&cert)?;
            }
        }
        Command::Audit {
            source,
            budget,
            transforms,
        } => {
            let transforms: Vec<Transform> = if transforms.is_empty() {
                Transform::ALL.to_vec()
            } else {
                transforms
                    .iter()
                    .map(|t| t.parse().map_err(|_| usage(format!("unknown transform {t:?}"))))
                    .collect::<Result<_>>()?
            };
            let census = source.resolve(&ctx, None)?;
            let report = slow_growth_audit(&census, &transforms, budget);
            if csv {
                emit_csv(
                    "x,transform,depth_x,depth_fx,flagged",
                    report.rows.iter().map(|r| {
                        format!("{},{},{},{},{}", r.x, r.transform.name(), r.depth_x, r.depth_fx, r.flagged)
                    }),
                );
            } else {
                emit(&report)?;
            }
        }
        Command::Speedup {
            query,
            significance,
            timing,
        } => {
            let census = query.source.resolve(&ctx, Some(&query.x))?;
            let mut record = speedup_demo(&query.x, &census, significance, ctx.cache.options())?;
            if !timing {
                record.lookup_cost.nanos = 0;
                record.enumeration_cost.nanos = 0;
            }
            if csv {
                emit_csv(
                    "x,depth_hat,lookup_programs,lookup_nanos,enum_nodes,enum_steps,enum_nanos",
                    [format!(
                        "{},{},{},{},{},{},{}",
                        record.x,
                        record.lookup_report.depth_hat,
                        record.lookup_cost.programs_examined,
                        record.lookup_cost.nanos,
                        record.enumeration_cost.nodes,
                        record.enumeration_cost.machine_steps,
                        record.enumeration_cost.nanos
                    )],
                );
            } else {
                emit(&record)?;
            }
        }
        Command::Verify { scenario, seed } => {
            if csv {
                return Err(usage("verify prints a JSON transcript; --format csv is not available"));
            }
            let text = fs::read_to_string(&scenario)
                .with_context(|| format!("reading {}", scenario.display()))?;
            let mut sc: Scenario = serde_json::from_str(&text)
                .map_err(|e| usage(format!("invalid scenario {}: {e}", scenario.display())))?;
            if let Some(seed) = seed {
                sc.seed = seed;
            }
            let transcript = run_scenario(&sc, ctx.cache.options())?;
            emit(&transcript)?;
            if let Verdict::Reject(reason) = &transcript.verdict {
                return Ok(Done::Refused(json!({ "error": "reject", "reason": reason })));
            }
        }
        Command::Refute {
            x,
            threshold,
            max_program_bits,
            max_steps,
        } => {
            let result = refute_shallow(&x, threshold, max_program_bits, max_steps, ctx.cache.options())?;
            if csv {
                let (found, program, steps) = match &result {
                    Refutation::Found { program, steps } => (true, program.bits().to_string(), steps.to_string()),
                    Refutation::NoRefutationFound => (false, String::new(), String::new()),
                };
                emit_csv("x,threshold,found,program,steps", [format!("{x},{threshold},{found},{program},{steps}")]);
            } else {
                emit(&json!({ "x": x, "threshold": threshold, "result": result }))?;
            }
        }
        Command::Proxy { corpus, model, output } => {
            let model = CostModel::parse(&model)
                .ok_or_else(|| usage(format!("--model expects three non-negative integers a,b,c (not all zero), got {model:?}")))?;
            let specs = if corpus.is_empty() {
                vec![
                    "constant:65536:65".to_string(),
                    "noise:65536:1".to_string(),
                    "structured:256:2048".to_string(),
                ]
            } else {
                corpus
            };
            let items = specs
                .iter()
                .map(|s| s.parse::<CorpusKind>().map(CorpusItem::new))
                .collect::<Result<Vec<_>, _>>()?;
            let experiment = proxy_depth_report(&items, &model, ctx.workers)?;
            let table = experiment.to_csv();
            if let Some(path) = output {
                write_atomic(&path, &table)?;
            }
            if csv {
                print!("{table}");
            } else {
                emit(&experiment)?;
            }
        }
    }
    Ok(Done::Ok)
}

/// Errors caused by how the command was called rather than by the math.
fn is_usage_error(err: &anyhow::Error) -> bool {
    err.chain().any(|cause| {
        cause.is::<UsageError>()
            || cause.is::<BitsError>()
            || matches!(cause.downcast_ref(), Some(CensusError::InvalidParams(_)))
            || matches!(cause.downcast_ref(), Some(AnalysisError::InvalidArgument(_)))
            || matches!(
                cause.downcast_ref(),
                Some(VerifyError::InvalidArgument(_) | VerifyError::Scenario(_))
            )
            || matches!(cause.downcast_ref(), Some(ProxyError::InvalidCorpus(_)))
    })
}

fn error_kind(err: &anyhow::Error) -> &'static str {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<CensusError>() {
            return match e {
                CensusError::NodeBudgetExceeded { .. } => "node-budget-exceeded",
                CensusError::VersionMismatch { .. } => "machine-version-mismatch",
                CensusError::ChecksumMismatch { .. } => "checksum-mismatch",
                CensusError::Malformed(_) => "malformed-census",
                CensusError::Io(_) => "io",
                _ => "census",
            };
        }
        if cause.is::<AnalysisError>() {
            return "analysis";
        }
        if cause.is::<ProxyError>() {
            return "proxy";
        }
        if cause.is::<std::io::Error>() {
            return "io";
        }
    }
    "failure"
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) if err.use_stderr() => {
            let text = err.render().to_string();
            eprint!("{text}");
            if !text.contains("Usage:") {
                eprintln!("\n{}", Cli::command().render_usage());
            }
            return ExitCode::from(2);
        }
        Err(err) => err.exit(),
    };
    match dispatch(cli) {
        Ok(Done::Ok) => ExitCode::SUCCESS,
        Ok(Done::Refused(detail)) => {
            eprintln!("{detail}");
            ExitCode::from(1)
        }
        Err(err) if is_usage_error(&err) => {
            eprintln!("error: {err:#}\n");
            eprintln!("{}", Cli::command().render_usage());
            eprintln!("\nFor more information, try '--help'.");
            ExitCode::from(2)
        }
        Err(err) => {
            eprintln!("{}", json!({ "error": error_kind(&err), "message": format!("{err:#}") }));
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn usage_errors_are_classified() {
        assert!(is_usage_error(&usage("x")));
        let e: anyhow::Error = CensusError::InvalidParams("L".into()).into();
        assert!(is_usage_error(&e));
        let e: anyhow::Error = CensusError::Malformed("x".into()).into();
        assert!(!is_usage_error(&e));
        assert_eq!(error_kind(&e), "malformed-census");
    }
}
