//! Command-line front end: fuse domains, generate problems, validate plans,
//! solve tasks, and run batch experiments.
//!
//! Exit codes: 0 on success, 1 for a negative result (invalid plan, no plan
//! found), 2 for usage or input errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};

use pddlgen::fusion::{fuse_pair, GenerationParams};
use pddlgen::harness::{
    run_depth, run_sweep, solved_fractions, sweep_csv, BaseTask, ExperimentConfig, ItemStatus,
};
use pddlgen::model::{Domain, Problem};
use pddlgen::parser::{
    parse_domain, parse_plan, parse_problem, print_domain, print_plan,
};
use pddlgen::planner::{ground, search, SearchOutcome, DEFAULT_GROUND_CAP};
use pddlgen::probgen::{generate, write_record, GenerationRecord};
use pddlgen::validator::{validate_plan, Validation};

#[derive(Parser)]
#[command(
    name = "pddlgen",
    about = "Generate novel planning domains by fusing and mutating existing ones, \
             with guaranteed-solvable problems and a built-in planner",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

fn prob_in_unit(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if (0.0..=1.0).contains(&v) {
        Ok(v)
    } else {
        Err(format!("`{s}` is not in [0, 1]"))
    }
}

/// Mutation knobs shared by every generating subcommand.
#[derive(Args, Clone)]
struct ParamArgs {
    /// Probability of adding a precondition to each action
    #[arg(long, default_value_t = 0.5, value_parser = prob_in_unit)]
    prob_add_pre: f64,
    /// Probability of adding an effect to each action
    #[arg(long, default_value_t = 0.5, value_parser = prob_in_unit)]
    prob_add_eff: f64,
    /// Probability of removing a precondition from each action
    #[arg(long, default_value_t = 0.0, value_parser = prob_in_unit)]
    prob_rem_pre: f64,
    /// Probability of removing an effect from each action
    #[arg(long, default_value_t = 0.3, value_parser = prob_in_unit)]
    prob_rem_eff: f64,
    /// Probability that an added literal is negated
    #[arg(long, default_value_t = 0.5, value_parser = prob_in_unit)]
    prob_neg: f64,
    /// Per-atom goal sampling probability
    #[arg(long, default_value_t = 0.3, value_parser = prob_in_unit)]
    goal_prob: f64,
    /// Cap on objects per type in generated problems
    #[arg(long)]
    num_objs: Option<usize>,
    /// Repair delete-only predicates so every deletion is reversible
    #[arg(long)]
    rev: bool,
    /// Random-walk length for problem generation
    #[arg(long, default_value_t = 20)]
    walk_len: usize,
    /// Master random seed
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

impl ParamArgs {
    fn to_params(&self) -> GenerationParams {
        GenerationParams {
            prob_add_pre: self.prob_add_pre,
            prob_add_eff: self.prob_add_eff,
            prob_rem_pre: self.prob_rem_pre,
            prob_rem_eff: self.prob_rem_eff,
            prob_neg: self.prob_neg,
            goal_prob: self.goal_prob,
            num_objs: self.num_objs,
            rev_flag: self.rev,
            walk_len: self.walk_len,
            seed: self.seed,
        }
    }
}

/// Budget and batch knobs shared by the experiment subcommands.
#[derive(Args, Clone)]
struct BatchArgs {
    /// Directory whose subdirectories each hold domain.pddl and problem.pddl
    #[arg(long)]
    bases: PathBuf,
    /// Items per cell
    #[arg(long, default_value_t = 10)]
    items: u64,
    /// Wall-clock budget per item, in seconds (0 disables the time budget)
    #[arg(long, default_value_t = 60.0)]
    time_budget: f64,
    /// Expansion cap per item
    #[arg(long, default_value_t = 1_000_000)]
    node_cap: u64,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Line-oriented `key = value` config file applied before flags
    #[arg(long)]
    config: Option<PathBuf>,
    /// Directory to write per-item record directories into
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse two domains into a mutated combination
    Fuse {
        domain1: PathBuf,
        domain2: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Write the fused domain here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Write the decision trace log here
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Fuse two base pairs and generate a solvable problem with witness
    Genprob {
        domain1: PathBuf,
        problem1: PathBuf,
        domain2: PathBuf,
        problem2: PathBuf,
        #[command(flatten)]
        params: ParamArgs,
        /// Directory to write the record directory into
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Replay a plan against a domain and problem
    Validate {
        domain: PathBuf,
        problem: PathBuf,
        plan: PathBuf,
    },
    /// Search for a plan with the built-in planner
    Solve {
        domain: PathBuf,
        problem: PathBuf,
        /// Wall-clock budget in seconds (0 disables the time budget)
        #[arg(long, default_value_t = 60.0)]
        time_budget: f64,
        /// Expansion cap
        #[arg(long, default_value_t = 1_000_000)]
        node_cap: u64,
    },
    /// Measure solvability as fusion depth increases
    Depth {
        /// Comma-separated fusion depths to run
        #[arg(long, default_value = "1,2,3", value_delimiter = ',')]
        depths: Vec<u32>,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        batch: BatchArgs,
    },
    /// Run the 54-cell factorial parameter sweep and emit CSV
    Sweep {
        /// Fusion depth for every cell
        #[arg(long, default_value_t = 1)]
        depth: u32,
        #[command(flatten)]
        params: ParamArgs,
        #[command(flatten)]
        batch: BatchArgs,
        /// Write the CSV here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

/// Errors that should exit with code 2.
struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn read(path: &Path) -> Result<String, UsageError> {
    std::fs::read_to_string(path)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())))
}

fn load_domain(path: &Path) -> Result<Domain, UsageError> {
    parse_domain(&read(path)?).map_err(|r| UsageError(format!("{}: {r}", path.display())))
}

fn load_problem(path: &Path, domain: &Domain) -> Result<Problem, UsageError> {
    parse_problem(&read(path)?, domain).map_err(|r| UsageError(format!("{}: {r}", path.display())))
}

fn load_bases(dir: &Path) -> Result<Vec<BaseTask>, UsageError> {
    let mut bases = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| UsageError(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    entries.sort();
    for entry in entries {
        let domain_file = entry.join("domain.pddl");
        let problem_file = entry.join("problem.pddl");
        if !domain_file.is_file() || !problem_file.is_file() {
            continue;
        }
        let domain = load_domain(&domain_file)?;
        let problem = load_problem(&problem_file, &domain)?;
        let name = entry
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| domain.name.clone());
        bases.push(BaseTask {
            name,
            domain,
            problem,
        });
    }
    if bases.len() < 2 {
        return Err(UsageError(format!(
            "{} holds {} usable base pairs; need at least 2",
            dir.display(),
            bases.len()
        )));
    }
    Ok(bases)
}

fn write_out(path: Option<&Path>, text: &str) -> Result<(), UsageError> {
    match path {
        Some(p) => std::fs::write(p, text)
            .map_err(|e| UsageError(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn time_budget(secs: f64) -> Option<Duration> {
    (secs > 0.0).then(|| Duration::from_secs_f64(secs))
}

fn experiment_config(
    params: &ParamArgs,
    batch: &BatchArgs,
    depths: Vec<u32>,
) -> Result<ExperimentConfig, UsageError> {
    let mut cfg = ExperimentConfig {
        params: params.to_params(),
        depths,
        items_per_cell: batch.items,
        time_budget: time_budget(batch.time_budget),
        node_cap: batch.node_cap,
        num_objs: params.num_objs,
        seed: params.seed,
        jobs: batch.jobs,
    };
    if let Some(path) = &batch.config {
        cfg.apply_kv(&read(path)?)
            .map_err(|e| UsageError(format!("{}: {e}", path.display())))?;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<ExitCode, UsageError> {
    match cli.command {
        Command::Fuse {
            domain1,
            domain2,
            params,
            output,
            trace,
        } => {
            let d1 = load_domain(&domain1)?;
            let d2 = load_domain(&domain2)?;
            let p = params.to_params();
            let mut rng = pddlgen::seed::rng_from(p.seed);
            let (fused, fusion_trace, _) = fuse_pair(&d1, &d2, &p, &mut rng)?;
            write_out(output.as_deref(), &print_domain(&fused))?;
            if let Some(path) = trace {
                write_out(Some(&path), &fusion_trace.to_log())?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Genprob {
            domain1,
            problem1,
            domain2,
            problem2,
            params,
            out,
        } => {
            let d1 = load_domain(&domain1)?;
            let p1 = load_problem(&problem1, &d1)?;
            let d2 = load_domain(&domain2)?;
            let p2 = load_problem(&problem2, &d2)?;
            let p = params.to_params();
            let mut rng = pddlgen::seed::rng_from(p.seed);
            let (fused, trace, renames) = fuse_pair(&d1, &d2, &p, &mut rng)?;
            let (problem, witness) = generate(&fused, &p1, &p2, &renames, &p, p.seed, 1, 0)?;
            let record = GenerationRecord {
                pair: format!("{}-{}", d1.name, d2.name),
                depth: 1,
                seed: p.seed,
                domain: fused,
                problem,
                witness,
                params: p,
                trace,
            };
            let dir = write_record(&out, &record)?;
            println!("{}", dir.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate {
            domain,
            problem,
            plan,
        } => {
            let d = load_domain(&domain)?;
            let p = load_problem(&problem, &d)?;
            let pl = parse_plan(&read(&plan)?)
                .map_err(|r| UsageError(format!("{}: {r}", plan.display())))?;
            match validate_plan(&d, &p, &pl)? {
                Validation::Valid { steps, .. } => {
                    println!("VALID steps={steps}");
                    Ok(ExitCode::SUCCESS)
                }
                Validation::Invalid { step, reason } => {
                    println!("INVALID step={step} reason={}", reason.code());
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Command::Solve {
            domain,
            problem,
            time_budget: secs,
            node_cap,
        } => {
            let d = load_domain(&domain)?;
            let p = load_problem(&problem, &d)?;
            let task = ground(&d, &p, DEFAULT_GROUND_CAP)?;
            let result = search(&task, time_budget(secs), node_cap);
            match result.outcome {
                SearchOutcome::Solved { plan } => {
                    print!("{}", print_plan(&plan));
                    println!(
                        "; expansions={} time={:.3} length={}",
                        result.expansions,
                        result.elapsed.as_secs_f64(),
                        plan.steps.len()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                SearchOutcome::Unsolvable => {
                    println!("; unsolvable expansions={}", result.expansions);
                    Ok(ExitCode::FAILURE)
                }
                SearchOutcome::Budget(b) => {
                    println!(
                        "; budget-exhausted kind={} expansions={}",
                        match b {
                            pddlgen::planner::Budget::TimeOut => "time",
                            pddlgen::planner::Budget::NodeCap => "nodes",
                        },
                        result.expansions
                    );
                    Ok(ExitCode::FAILURE)
                }
            }
        }
        Command::Depth {
            depths,
            params,
            batch,
        } => {
            let bases = load_bases(&batch.bases)?;
            let cfg = experiment_config(&params, &batch, depths)?;
            let results = run_depth(&bases, &cfg);
            for r in &results {
                println!(
                    "depth={} item={} pair={} seed={} status={} witness_valid={} \
                     plan_len={} expansions={} time={:.3}",
                    r.depth,
                    r.item,
                    r.pair,
                    r.seed,
                    r.status.label(),
                    r.witness_valid,
                    r.plan_len.map_or(-1i64, |l| l as i64),
                    r.expansions,
                    r.elapsed.as_secs_f64()
                );
                if let (Some(dir), Some(record)) = (&batch.out, &r.record) {
                    write_record(dir, record)?;
                }
            }
            for (depth, fraction) in solved_fractions(&results) {
                println!("summary depth={depth} solved={fraction:.3}");
            }
            let all_witness_valid = results.iter().all(|r| r.witness_valid);
            let any_solved = results.iter().any(|r| r.status == ItemStatus::Solved);
            if all_witness_valid && any_solved {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Sweep {
            depth,
            params,
            batch,
            output,
        } => {
            let bases = load_bases(&batch.bases)?;
            let cfg = experiment_config(&params, &batch, vec![depth])?;
            let rows = run_sweep(&bases, &cfg);
            write_out(output.as_deref(), &sweep_csv(&rows))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
