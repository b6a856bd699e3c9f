use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use mms_core::bounds::{BoundParams, BoundTable};
use mms_core::instance::{lift_allocation, make_instance, to_ordered, Allocation, Instance, ItemKind};
use mms_core::io::{instance_to_json, parse_allocation, parse_instance, OrderedFile};
use mms_core::mms::{mms_value_capped, OracleMethod, DEFAULT_ORACLE_CAP};
use mms_core::reductions::{replay_trace, verify_trace_steps_with, ReductionTrace};
use mms_core::solver::{solve_chores_with, solve_with, SolveOutcome, SolverConfig};
use mms_core::value::{format_rational, int, parse_rational, WireRational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "mms", version, about = "Maximin-share allocations for goods and chores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Goods,
    Chores,
}

impl From<Kind> for ItemKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Goods => ItemKind::Goods,
            Kind::Chores => ItemKind::Chores,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Oracle {
    Exhaustive,
    Bnb,
}

impl From<Oracle> for OracleMethod {
    fn from(o: Oracle) -> Self {
        match o {
            Oracle::Exhaustive => OracleMethod::Exhaustive,
            Oracle::Bnb => OracleMethod::BranchAndBound,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write random instances with uniform integer values
    Gen {
        #[arg(long, value_enum, default_value = "goods")]
        kind: Kind,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 20)]
        max_value: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Solve instances; exit code 0 if all solved, 2 if any is unresolved
    Solve {
        #[arg(long, required = true, num_args = 1..)]
        input: Vec<PathBuf>,
        /// Outcome file for a single input (default: stdout)
        #[arg(long, conflicts_with = "out_dir")]
        out: Option<PathBuf>,
        /// Directory for `<name>.outcome.json` files
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Trace file for a single input
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "bnb")]
        oracle: Oracle,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: u64,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check an allocation or solve outcome; exit code 2 if a check fails
    Verify {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        result: PathBuf,
        /// Only check structure, not shares or step validity
        #[arg(long)]
        skip_mu: bool,
        #[arg(long, value_enum, default_value = "bnb")]
        oracle: Oracle,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: u64,
    },
    /// Print the agent threshold n_c and the required-agents count
    Bound {
        #[arg(long, allow_negative_numbers = true)]
        c: i64,
        #[arg(long, value_enum, default_value = "goods")]
        kind: Kind,
        #[arg(long)]
        alpha_goods: Option<String>,
        #[arg(long)]
        alpha_chores: Option<String>,
    },
    /// Sort every agent's row (goods best first, chores worst first)
    Order {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print each agent's maximin share and a witness partition
    Mms {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum, default_value = "bnb")]
        oracle: Oracle,
        #[arg(long, default_value_t = DEFAULT_ORACLE_CAP)]
        oracle_cap: u64,
    },
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Gen {
            kind,
            n,
            m,
            max_value,
            seed,
            count,
            out_dir,
        } => gen(kind.into(), n, m, max_value, seed, count, &out_dir),
        Command::Solve {
            input,
            out,
            out_dir,
            trace_out,
            oracle,
            oracle_cap,
            jobs,
        } => {
            let config = SolverConfig {
                oracle_cap,
                method: oracle.into(),
                ..SolverConfig::default()
            };
            solve(
                &input,
                out.as_deref(),
                out_dir.as_deref(),
                trace_out.as_deref(),
                &config,
                jobs,
            )
        }
        Command::Verify {
            instance,
            result,
            skip_mu,
            oracle,
            oracle_cap,
        } => verify(&instance, &result, skip_mu, oracle.into(), oracle_cap),
        Command::Bound {
            c,
            kind,
            alpha_goods,
            alpha_chores,
        } => bound(c, kind.into(), alpha_goods, alpha_chores),
        Command::Order { input, out } => {
            let ordered = to_ordered(&read_instance(&input)?);
            let text = serde_json::to_string_pretty(&OrderedFile::from(&ordered))?;
            emit(out.as_deref(), &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Mms {
            input,
            oracle,
            oracle_cap,
        } => {
            let inst = read_instance(&input)?;
            let mut agents = Vec::new();
            for a in 1..=inst.n() {
                let rec = mms_value_capped(&inst, a, oracle.into(), oracle_cap)?;
                agents.push(json!({"agent": a, "mu": WireRational(rec.mu), "witness": rec.witness}));
            }
            println!("{}", serde_json::to_string_pretty(&json!({ "agents": agents }))?);
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).with_context(|| format!("parsing {}", path.display()))
}

fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => fs::write(p, format!("{text}\n")).with_context(|| format!("writing {}", p.display())),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn gen(
    kind: ItemKind,
    n: usize,
    m: usize,
    max_value: u32,
    seed: u64,
    count: usize,
    out_dir: &Path,
) -> anyhow::Result<ExitCode> {
    if n == 0 || count == 0 || max_value == 0 {
        bail!("--n, --count and --max-value must be at least 1");
    }
    fs::create_dir_all(out_dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sign = if kind == ItemKind::Chores { -1 } else { 1 };
    for i in 0..count {
        let rows = (0..n)
            .map(|_| {
                (0..m)
                    .map(|_| int(sign * i64::from(rng.gen_range(0..=max_value))))
                    .collect()
            })
            .collect();
        let inst = make_instance(kind, rows)?;
        fs::write(
            out_dir.join(format!("instance_{i:04}.json")),
            instance_to_json(&inst) + "\n",
        )?;
    }
    Ok(ExitCode::SUCCESS)
}

/// The outcome plus, when solved, each agent's share and received value.
fn outcome_json(inst: &Instance, outcome: &SolveOutcome, config: &SolverConfig) -> anyhow::Result<Value> {
    let mut v = serde_json::to_value(outcome)?;
    if let Some(alloc) = outcome.allocation.as_ref() {
        let mut rows = Vec::new();
        for a in 1..=inst.n() {
            let mu = mms_value_capped(inst, a, config.method, config.oracle_cap)?.mu;
            let got = inst.bundle_value(a, alloc.bundle(a));
            rows.push(json!({"agent": a, "mu": WireRational(mu.clone()), "value": WireRational(got.clone()), "ok": got >= mu}));
        }
        v["certificate"] = Value::Array(rows);
    }
    Ok(v)
}

fn solve_one(path: &Path, config: &SolverConfig) -> anyhow::Result<(Instance, SolveOutcome)> {
    let inst = read_instance(path)?;
    let outcome = match inst.kind() {
        ItemKind::Goods => solve_with(&inst, config),
        ItemKind::Chores => solve_chores_with(&inst, config),
    };
    Ok((inst, outcome))
}

fn solve(
    inputs: &[PathBuf],
    out: Option<&Path>,
    out_dir: Option<&Path>,
    trace_out: Option<&Path>,
    config: &SolverConfig,
    jobs: usize,
) -> anyhow::Result<ExitCode> {
    if inputs.len() > 1 && out_dir.is_none() {
        bail!("several inputs need --out-dir");
    }
    if inputs.len() > 1 && trace_out.is_some() {
        bail!("--trace-out takes a single input");
    }
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
    }
    let jobs = jobs.clamp(1, inputs.len());
    let chunk = inputs.len().div_ceil(jobs);
    let results: Vec<anyhow::Result<bool>> = std::thread::scope(|s| {
        let handles: Vec<_> = inputs
            .chunks(chunk)
            .map(|part| {
                s.spawn(move || {
                    part.iter()
                        .map(|path| {
                            let (inst, outcome) = solve_one(path, config)?;
                            let text = serde_json::to_string_pretty(&outcome_json(&inst, &outcome, config)?)?;
                            match out_dir {
                                Some(dir) => {
                                    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
                                    fs::write(dir.join(format!("{stem}.outcome.json")), text + "\n")?;
                                }
                                None => emit(out, &text)?,
                            }
                            if let (Some(t), Some(trace)) = (trace_out, outcome.trace.as_ref()) {
                                fs::write(t, serde_json::to_string_pretty(trace)? + "\n")?;
                            }
                            let status = if outcome.is_solved() { "solved" } else { "unresolved" };
                            eprintln!("{}: {status}", path.display());
                            Ok(outcome.is_solved())
                        })
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("solver thread panicked"))
            .collect()
    });
    let mut all_solved = true;
    for r in results {
        all_solved &= r?;
    }
    Ok(if all_solved {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    })
}

fn verify(instance: &Path, result: &Path, skip_mu: bool, method: OracleMethod, cap: u64) -> anyhow::Result<ExitCode> {
    let inst = read_instance(instance)?;
    let text = fs::read_to_string(result).with_context(|| format!("reading {}", result.display()))?;
    let value: Value = serde_json::from_str(&text).context("parsing result")?;
    let (alloc, trace): (Option<Allocation>, Option<ReductionTrace>) = if value.get("bundles").is_some() {
        (Some(parse_allocation(&text)?), None)
    } else {
        let alloc = value
            .get("allocation")
            .filter(|v| !v.is_null())
            .map(|v| serde_json::from_value(v.clone()))
            .transpose()?;
        let trace = value
            .get("trace")
            .filter(|v| !v.is_null())
            .map(|v| serde_json::from_value(v.clone()))
            .transpose()?;
        (alloc, trace)
    };
    let mut ok = true;
    let mut check = |pass: bool, line: String| {
        println!("[{}] {line}", if pass { "ok" } else { "FAIL" });
        ok &= pass;
    };

    match &alloc {
        None => check(false, "no allocation present".into()),
        Some(alloc) => {
            let shape = alloc.len() == inst.n() && alloc.check_partition(inst.m()).is_ok();
            check(
                shape,
                format!("allocation partitions {} items over {} agents", inst.m(), inst.n()),
            );
            if shape {
                for a in 1..=inst.n() {
                    let got = inst.bundle_value(a, alloc.bundle(a));
                    if skip_mu {
                        println!("       agent {a}: value {}", format_rational(&got));
                        continue;
                    }
                    let mu = mms_value_capped(&inst, a, method, cap)?.mu;
                    check(
                        got >= mu,
                        format!(
                            "agent {a}: value {} vs share {}",
                            format_rational(&got),
                            format_rational(&mu)
                        ),
                    );
                }
            }
        }
    }

    if let Some(trace) = &trace {
        let ordered = to_ordered(&inst);
        match replay_trace(inst.n(), inst.m(), trace) {
            Err(e) => check(false, format!("trace replay: {e}")),
            Ok(combined) => {
                check(
                    true,
                    format!("trace replay partitions the items ({} steps)", trace.steps.len()),
                );
                let lifted = lift_allocation(&ordered, &combined, &inst)?;
                check(
                    alloc.as_ref() == Some(&lifted),
                    "trace lifts to the reported allocation".into(),
                );
            }
        }
        if !skip_mu {
            let verdicts = verify_trace_steps_with(&ordered.instance, trace, method, cap)?;
            for (k, (step, pass)) in trace.steps.iter().zip(verdicts).enumerate() {
                check(pass, format!("step {} ({}) is a valid reduction", k + 1, step.rule));
            }
        }
    }
    println!("{}", if ok { "verified" } else { "verification failed" });
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn bound(
    c: i64,
    kind: ItemKind,
    alpha_goods: Option<String>,
    alpha_chores: Option<String>,
) -> anyhow::Result<ExitCode> {
    let mut params = BoundParams::default();
    if let Some(a) = alpha_goods {
        params.alpha_goods = parse_rational(&a)?;
    }
    if let Some(a) = alpha_chores {
        params.alpha_chores = parse_rational(&a)?;
    }
    params.validate()?;
    let table = BoundTable::new(params);
    let n_c = table.n_c(kind, c)?;
    let required = match kind {
        ItemKind::Goods => table.required_agents_goods(c),
        ItemKind::Chores => table.required_agents_chores(c),
    };
    println!("kind={} c={c} n_c={n_c}", kind.name());
    match required {
        Ok(r) => println!("required_agents={r} within_n_c={}", r <= n_c),
        Err(e) => println!("required_agents=n/a ({e})"),
    }
    Ok(ExitCode::SUCCESS)
}
