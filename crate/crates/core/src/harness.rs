//! Batch experiments: depth runs (how solvability degrades as domains are
//! fused repeatedly) and factorial parameter sweeps with CSV output. All
//! per-item randomness is derived from the master seed, so runs reproduce
//! exactly and items can execute in parallel in any order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use rayon::prelude::*;

use crate::fusion::{fuse_pair, FusionTrace, GenerationParams};
use crate::model::{Domain, Problem};
use crate::planner::{ground, search, SearchOutcome, DEFAULT_GROUND_CAP};
use crate::probgen::{generate, GenerationRecord};
use crate::seed;
use crate::validator::{validate_plan, Validation};

/// A named base domain/problem pair the experiments draw from.
#[derive(Debug, Clone)]
pub struct BaseTask {
    pub name: String,
    pub domain: Domain,
    pub problem: Problem,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub params: GenerationParams,
    pub depths: Vec<u32>,
    pub items_per_cell: u64,
    pub time_budget: Option<Duration>,
    pub node_cap: u64,
    pub num_objs: Option<usize>,
    pub seed: u64,
    pub jobs: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: GenerationParams::default(),
            depths: vec![1],
            items_per_cell: 10,
            time_budget: Some(Duration::from_secs(60)),
            node_cap: 1_000_000,
            num_objs: None,
            seed: 42,
            jobs: None,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Malformed { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value for `{key}`: {value}")]
    BadValue {
        line: usize,
        key: String,
        value: String,
    },
}

impl ExperimentConfig {
    /// Applies a line-oriented `key = value` config text. `#` starts a
    /// comment; blank lines are skipped. Unknown keys are errors.
    pub fn apply_kv(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or(ConfigError::Malformed { line })?;
            let (key, value) = (key.trim(), value.trim());
            let bad = || ConfigError::BadValue {
                line,
                key: key.to_string(),
                value: value.to_string(),
            };
            match key {
                "prob_add_pre" => self.params.prob_add_pre = value.parse().map_err(|_| bad())?,
                "prob_add_eff" => self.params.prob_add_eff = value.parse().map_err(|_| bad())?,
                "prob_rem_pre" => self.params.prob_rem_pre = value.parse().map_err(|_| bad())?,
                "prob_rem_eff" => self.params.prob_rem_eff = value.parse().map_err(|_| bad())?,
                "prob_neg" => self.params.prob_neg = value.parse().map_err(|_| bad())?,
                "goal_prob" => self.params.goal_prob = value.parse().map_err(|_| bad())?,
                "walk_len" => self.params.walk_len = value.parse().map_err(|_| bad())?,
                "rev_flag" => self.params.rev_flag = value.parse().map_err(|_| bad())?,
                "num_objs" => {
                    let n: usize = value.parse().map_err(|_| bad())?;
                    self.num_objs = Some(n);
                }
                "depths" => {
                    self.depths = value
                        .split(',')
                        .map(|d| d.trim().parse::<u32>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| bad())?;
                }
                "items_per_cell" => self.items_per_cell = value.parse().map_err(|_| bad())?,
                "time_budget_secs" => {
                    self.time_budget =
                        Some(Duration::from_secs_f64(value.parse().map_err(|_| bad())?));
                }
                "node_cap" => self.node_cap = value.parse().map_err(|_| bad())?,
                "seed" => self.seed = value.parse().map_err(|_| bad())?,
                "jobs" => self.jobs = Some(value.parse().map_err(|_| bad())?),
                _ => {
                    return Err(ConfigError::UnknownKey {
                        line,
                        key: key.to_string(),
                    })
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ItemStatus {
    Solved,
    Unsolvable,
    TimedOut,
    NodeCapped,
    GenerationFailed,
}

impl ItemStatus {
    pub fn label(self) -> &'static str {
        match self {
            ItemStatus::Solved => "solved",
            ItemStatus::Unsolvable => "unsolvable",
            ItemStatus::TimedOut => "timeout",
            ItemStatus::NodeCapped => "node-cap",
            ItemStatus::GenerationFailed => "gen-failed",
        }
    }
}

#[derive(Debug, Clone)]
pub struct ItemResult {
    pub depth: u32,
    pub item: u64,
    pub pair: String,
    pub seed: u64,
    pub status: ItemStatus,
    pub witness_valid: bool,
    pub plan_len: Option<usize>,
    pub expansions: u64,
    pub elapsed: Duration,
    /// The full generated record when generation succeeded.
    pub record: Option<GenerationRecord>,
}

/// Builds a depth-`depth` fusion chain starting from a deterministically
/// chosen base pair, folding one further base in per extra level. Bases are
/// never fused with themselves.
fn compose_chain(
    bases: &[BaseTask],
    depth: u32,
    params: &GenerationParams,
    rng: &mut impl rand::Rng,
) -> Result<(Domain, Problem, FusionTrace, String), crate::probgen::ProbGenError> {
    assert!(depth >= 1 && bases.len() >= 2);
    let a = rng.gen_range(0..bases.len());
    let mut b = rng.gen_range(0..bases.len() - 1);
    if b >= a {
        b += 1;
    }
    let mut pair = format!("{}-{}", bases[a].name, bases[b].name);
    let (mut domain, mut trace, renames) =
        fuse_pair(&bases[a].domain, &bases[b].domain, params, rng)?;
    // Intermediate levels carry the full object/init union forward; the walk
    // and goal are sampled only at the final level.
    let mut walk_params = params.clone();
    walk_params.num_objs = None;
    fn merge_level(
        d: &Domain,
        p1: &Problem,
        p2: &Problem,
        rn: &crate::fusion::RenameMap,
        pr: &GenerationParams,
        rng: &mut impl rand::Rng,
    ) -> Result<Problem, crate::probgen::ProbGenError> {
        let (objects, init) =
            crate::probgen::build_objects_and_init(d, p1, p2, rn, pr.num_objs, rng)?;
        Problem::validated(
            format!("{}-prob", d.name),
            d.name.clone(),
            objects,
            init,
            Default::default(),
            d,
        )
        .map_err(crate::probgen::ProbGenError::from)
    }
    let mut merged = merge_level(
        &domain,
        &bases[a].problem,
        &bases[b].problem,
        &renames,
        &walk_params,
        rng,
    )?;
    let mut last = b;
    for _ in 1..depth {
        let mut c = rng.gen_range(0..bases.len() - 1);
        if c >= last {
            c += 1;
        }
        let (next, next_trace, renames) = fuse_pair(&domain, &bases[c].domain, params, rng)?;
        merged = merge_level(&next, &merged, &bases[c].problem, &renames, &walk_params, rng)?;
        domain = next;
        trace = FusionTrace {
            renames: trace.renames,
            events: {
                let mut e = trace.events;
                e.extend(next_trace.events);
                e
            },
        };
        pair = format!("{pair}-{}", bases[c].name);
        last = c;
    }
    Ok((domain, merged, trace, pair))
}

/// Runs one item end to end: compose, generate, validate the witness, and
/// attempt to solve with the planner under the configured budgets.
fn run_item(bases: &[BaseTask], cfg: &ExperimentConfig, depth: u32, item: u64) -> ItemResult {
    let item_seed = seed::derive(cfg.seed, &[u64::from(depth), item]);
    let mut rng = seed::rng_from(item_seed);
    let mut params = cfg.params.clone();
    params.num_objs = cfg.num_objs;
    params.seed = item_seed;

    let failed = |pair: String| ItemResult {
        depth,
        item,
        pair,
        seed: item_seed,
        status: ItemStatus::GenerationFailed,
        witness_valid: false,
        plan_len: None,
        expansions: 0,
        elapsed: Duration::ZERO,
        record: None,
    };

    let (domain, merged, trace, pair) =
        match compose_chain(bases, depth, &params, &mut rng) {
            Ok(out) => out,
            Err(_) => return failed(String::from("unpaired")),
        };
    let dummy = Problem {
        name: merged.name.clone(),
        domain_name: merged.domain_name.clone(),
        objects: vec![],
        init: Default::default(),
        goal: Default::default(),
    };
    // The chain already merged objects and init, so the final generate call
    // unions against an empty second side with identity renames.
    let (problem, witness) = match generate(
        &domain,
        &merged,
        &dummy,
        &Default::default(),
        &params,
        cfg.seed,
        depth,
        item,
    ) {
        Ok(out) => out,
        Err(_) => return failed(pair),
    };

    let witness_valid = matches!(
        validate_plan(&domain, &problem, &witness),
        Ok(Validation::Valid { .. })
    );
    let record = GenerationRecord {
        domain: domain.clone(),
        problem: problem.clone(),
        witness,
        params: params.clone(),
        trace,
        pair: pair.clone(),
        depth,
        seed: item_seed,
    };

    let (status, plan_len, expansions, elapsed) =
        match ground(&domain, &problem, DEFAULT_GROUND_CAP) {
            Err(_) => (ItemStatus::GenerationFailed, None, 0, Duration::ZERO),
            Ok(task) => {
                let result = search(&task, cfg.time_budget, cfg.node_cap);
                let status = match &result.outcome {
                    SearchOutcome::Solved { .. } => ItemStatus::Solved,
                    SearchOutcome::Unsolvable => ItemStatus::Unsolvable,
                    SearchOutcome::Budget(crate::planner::Budget::TimeOut) => ItemStatus::TimedOut,
                    SearchOutcome::Budget(crate::planner::Budget::NodeCap) => {
                        ItemStatus::NodeCapped
                    }
                };
                let plan_len = match result.outcome {
                    SearchOutcome::Solved { plan } => Some(plan.steps.len()),
                    _ => None,
                };
                (status, plan_len, result.expansions, result.elapsed)
            }
        };

    ItemResult {
        depth,
        item,
        pair,
        seed: item_seed,
        status,
        witness_valid,
        plan_len,
        expansions,
        elapsed,
        record: Some(record),
    }
}

fn with_pool<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        None => f(),
    }
}

/// Runs `items_per_cell` items at every configured depth. Results come back
/// in (depth, item) order regardless of scheduling.
pub fn run_depth(bases: &[BaseTask], cfg: &ExperimentConfig) -> Vec<ItemResult> {
    let cells: Vec<(u32, u64)> = cfg
        .depths
        .iter()
        .flat_map(|&d| (0..cfg.items_per_cell).map(move |i| (d, i)))
        .collect();
    with_pool(cfg.jobs, || {
        cells
            .par_iter()
            .map(|&(depth, item)| run_item(bases, cfg, depth, item))
            .collect()
    })
}

/// Fraction of items solved per depth, in depth order.
pub fn solved_fractions(results: &[ItemResult]) -> Vec<(u32, f64)> {
    let mut per_depth: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    for r in results {
        let e = per_depth.entry(r.depth).or_default();
        e.1 += 1;
        if r.status == ItemStatus::Solved {
            e.0 += 1;
        }
    }
    per_depth
        .into_iter()
        .map(|(d, (solved, total))| (d, solved as f64 / total as f64))
        .collect()
}

/// The factorial sweep grid: three precondition-probability pairs, three
/// effect-probability pairs, three negation probabilities, and both
/// reversibility settings — 54 cells.
pub const SWEEP_PRE_PAIRS: [(f64, f64); 3] = [(0.3, 0.1), (0.5, 0.3), (0.7, 0.5)];
pub const SWEEP_EFF_PAIRS: [(f64, f64); 3] = [(0.3, 0.1), (0.5, 0.3), (0.7, 0.5)];
pub const SWEEP_NEG: [f64; 3] = [0.3, 0.5, 0.7];
pub const SWEEP_REV: [bool; 2] = [false, true];

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub add_pre: f64,
    pub rem_pre: f64,
    pub add_eff: f64,
    pub rem_eff: f64,
    pub neg: f64,
    pub rev: bool,
    pub num_objs: Option<usize>,
    pub depth: u32,
    pub seed: u64,
    pub solved_count: u64,
    pub total: u64,
    pub mean_plan_length: f64,
    /// Quantized to 0.1 s so reruns of a deterministic configuration print
    /// identical CSV bytes.
    pub mean_time_secs: f64,
    pub witness_valid: u64,
}

/// Runs the 54-cell factorial sweep at one (depth, num_objs) setting. Cell
/// seeds derive from the cell's grid index, so each cell reproduces in
/// isolation.
pub fn run_sweep(bases: &[BaseTask], cfg: &ExperimentConfig) -> Vec<SweepRow> {
    let depth = cfg.depths.first().copied().unwrap_or(1);
    let mut grid = Vec::new();
    for &(add_pre, rem_pre) in &SWEEP_PRE_PAIRS {
        for &(add_eff, rem_eff) in &SWEEP_EFF_PAIRS {
            for &neg in &SWEEP_NEG {
                for &rev in &SWEEP_REV {
                    grid.push((add_pre, rem_pre, add_eff, rem_eff, neg, rev));
                }
            }
        }
    }
    with_pool(cfg.jobs, || {
        grid.par_iter()
            .enumerate()
            .map(|(cell, &(add_pre, rem_pre, add_eff, rem_eff, neg, rev))| {
                let mut cell_cfg = cfg.clone();
                cell_cfg.params.prob_add_pre = add_pre;
                cell_cfg.params.prob_rem_pre = rem_pre;
                cell_cfg.params.prob_add_eff = add_eff;
                cell_cfg.params.prob_rem_eff = rem_eff;
                cell_cfg.params.prob_neg = neg;
                cell_cfg.params.rev_flag = rev;
                cell_cfg.seed = seed::derive(cfg.seed, &[u64::from(depth), cell as u64]);
                let results: Vec<ItemResult> = (0..cfg.items_per_cell)
                    .map(|i| run_item(bases, &cell_cfg, depth, i))
                    .collect();
                let solved: Vec<&ItemResult> = results
                    .iter()
                    .filter(|r| r.status == ItemStatus::Solved)
                    .collect();
                let mean_plan_length = if solved.is_empty() {
                    0.0
                } else {
                    solved.iter().filter_map(|r| r.plan_len).sum::<usize>() as f64
                        / solved.len() as f64
                };
                let mean_secs = results
                    .iter()
                    .map(|r| r.elapsed.as_secs_f64())
                    .sum::<f64>()
                    / results.len().max(1) as f64;
                SweepRow {
                    add_pre,
                    rem_pre,
                    add_eff,
                    rem_eff,
                    neg,
                    rev,
                    num_objs: cfg.num_objs,
                    depth,
                    seed: cell_cfg.seed,
                    solved_count: solved.len() as u64,
                    total: results.len() as u64,
                    mean_plan_length,
                    mean_time_secs: (mean_secs * 10.0).round() / 10.0,
                    witness_valid: results.iter().filter(|r| r.witness_valid).count() as u64,
                }
            })
            .collect()
    })
}

pub const SWEEP_CSV_HEADER: &str = "add_pre,rem_pre,add_eff,rem_eff,neg,rev,num_objs,depth,seed,\
solved_count,total,mean_plan_length,mean_time,witness_valid";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let num_objs = r
            .num_objs
            .map_or_else(|| "none".to_string(), |n| n.to_string());
        let _ = writeln!(
            out,
            "{:.2},{:.2},{:.2},{:.2},{:.2},{},{},{},{},{},{},{:.2},{:.1},{}",
            r.add_pre,
            r.rem_pre,
            r.add_eff,
            r.rem_eff,
            r.neg,
            r.rev,
            num_objs,
            r.depth,
            r.seed,
            r.solved_count,
            r.total,
            r.mean_plan_length,
            r.mean_time_secs,
            r.witness_valid,
        );
    }
    out
}
