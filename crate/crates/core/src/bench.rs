//! Single solves with verification, and benchmark suites reported as CSV.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::{keg, knapsack, lotsizing, KegGame};
use crate::instance::Instance;
use crate::model::{expected_payoff, joint_payoff, BilateralGame, JointDistribution, Profile};
use crate::oracle::{direct_pns, verify_ce, verify_ne, VerificationReport, ENUMERATION_CAP};
use crate::pns::{CeObjective, SearchOptions, SizeRule};
use crate::sgm::{self, Initialization, Method, SgmConfig, SgmOutcome, Solution, Status};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveMethod {
    Sgm,
    Msgm,
    Ce,
    Potential,
    Oracle,
}

impl SolveMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolveMethod::Sgm => "sgm",
            SolveMethod::Msgm => "msgm",
            SolveMethod::Ce => "ce",
            SolveMethod::Potential => "potential",
            SolveMethod::Oracle => "oracle",
        }
    }
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolveMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgm" => Ok(SolveMethod::Sgm),
            "msgm" | "m-sgm" => Ok(SolveMethod::Msgm),
            "ce" => Ok(SolveMethod::Ce),
            "potential" => Ok(SolveMethod::Potential),
            "oracle" | "direct-pns" => Ok(SolveMethod::Oracle),
            other => Err(Error::InvalidInput(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Equilibrium,
    IterationLimit,
    TimeLimit,
}

impl From<Status> for RunStatus {
    fn from(s: Status) -> Self {
        match s {
            Status::Equilibrium => RunStatus::Equilibrium,
            Status::IterationLimit => RunStatus::IterationLimit,
            Status::TimeLimit => RunStatus::TimeLimit,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EquilibriumKind {
    Pure,
    Mixed,
    Correlated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub max_gap: f64,
    pub epsilon: f64,
}

impl From<&VerificationReport> for Verdict {
    fn from(r: &VerificationReport) -> Self {
        Verdict { pass: r.pass, max_gap: r.max_gap, epsilon: r.epsilon }
    }
}

/// Result of one solve, as written by the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    pub game: String,
    pub method: SolveMethod,
    pub status: RunStatus,
    pub time_ms: f64,
    /// Forward steps of the sampled methods; improving moves for potential ascent.
    pub iterations: usize,
    pub backtracks: usize,
    #[serde(default)]
    pub kind: Option<EquilibriumKind>,
    #[serde(default)]
    pub support_sizes: Vec<usize>,
    /// Strategies per player in the last sampled game.
    #[serde(default)]
    pub sampled_sizes: Vec<usize>,
    pub epsilon: f64,
    pub verdict: Verdict,
    #[serde(default)]
    pub payoffs: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_support: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_based_ne: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub social_tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub social_sigma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub price_of_ne: Option<f64>,
    /// Per country, `1 - standalone / equilibrium payoff`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub standalone_decrease: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub social_opt_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<JointDistribution>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_ne: Option<Profile>,
}

impl RunRecord {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("record serializes");
        s.push('\n');
        s
    }

    /// Sampled games visited, counting the initial one.
    pub fn sampled_games(&self) -> usize {
        self.iterations + 1
    }
}

/// Tolerance conventions: zero for the binary games, 1e-6 otherwise.
pub fn default_epsilon(inst: &Instance) -> f64 {
    match inst {
        Instance::Knapsack(_) | Instance::Keg(_) => 0.0,
        Instance::LotSizing(_) | Instance::Duopoly(_) => 1e-6,
    }
}

pub fn default_initialization(inst: &Instance) -> Initialization {
    match inst {
        Instance::Keg(_) => Initialization::Optimistic,
        _ => Initialization::Alone,
    }
}

#[derive(Clone, Debug)]
pub struct SolveOptions {
    pub epsilon: Option<f64>,
    pub max_iterations: usize,
    pub time_limit: Duration,
    pub initialization: Option<Initialization>,
    pub size_rule: SizeRule,
    pub ce_objective: CeObjective,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            epsilon: None,
            max_iterations: 10_000,
            time_limit: Duration::from_secs(3600),
            initialization: None,
            size_rule: SizeRule::Guided,
            ce_objective: CeObjective::MaxWelfare,
        }
    }
}

fn kind_of(profile: &Profile) -> EquilibriumKind {
    if profile.is_pure() {
        EquilibriumKind::Pure
    } else {
        EquilibriumKind::Mixed
    }
}

fn all_payoffs(game: &dyn BilateralGame, profile: &Profile) -> Result<Vec<f64>> {
    (0..game.num_players()).map(|p| expected_payoff(game, profile, p)).collect()
}

fn blank(inst: &Instance, id: &str, method: SolveMethod, epsilon: f64) -> RunRecord {
    RunRecord {
        instance: id.to_string(),
        game: inst.kind().to_string(),
        method,
        status: RunStatus::Equilibrium,
        time_ms: 0.0,
        iterations: 0,
        backtracks: 0,
        kind: None,
        support_sizes: Vec::new(),
        sampled_sizes: Vec::new(),
        epsilon,
        verdict: Verdict { pass: false, max_gap: f64::NAN, epsilon },
        payoffs: Vec::new(),
        tau_support: None,
        tau_based_ne: None,
        social_tau: None,
        social_sigma: None,
        price_of_ne: None,
        standalone_decrease: None,
        social_opt_ms: None,
        profile: None,
        tau: None,
        tau_ne: None,
    }
}

fn keg_extras(g: &KegGame, record: &mut RunRecord) {
    let Some(payoffs) = record.profile.as_ref().map(|_| record.payoffs.clone()) else {
        return;
    };
    let start = Instant::now();
    let (opt, _) = g.social_optimum();
    record.social_opt_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    let welfare: f64 = payoffs.iter().sum();
    record.price_of_ne = Some(if opt > 0.0 { welfare / opt } else { 1.0 });
    record.standalone_decrease = Some(
        (0..2)
            .map(|p| {
                let eq = payoffs[p];
                if eq > 0.0 {
                    1.0 - g.standalone_value(p) / eq
                } else {
                    0.0
                }
            })
            .collect(),
    );
}

/// Solves an instance with the chosen method and verifies the result with
/// the oracle.
pub fn solve(inst: &Instance, id: &str, method: SolveMethod, opts: &SolveOptions) -> Result<RunRecord> {
    let game = inst.game();
    let epsilon = opts.epsilon.unwrap_or_else(|| default_epsilon(inst));
    let mut record = blank(inst, id, method, epsilon);
    match method {
        SolveMethod::Sgm | SolveMethod::Msgm | SolveMethod::Ce => {
            let mut cfg = SgmConfig::new(match method {
                SolveMethod::Sgm => Method::Sgm,
                SolveMethod::Msgm => Method::Msgm,
                _ => Method::Ce,
            });
            cfg.epsilon = epsilon;
            cfg.max_iterations = opts.max_iterations;
            cfg.time_limit = opts.time_limit;
            cfg.initialization = opts.initialization.clone().unwrap_or_else(|| default_initialization(inst));
            cfg.size_rule = opts.size_rule;
            cfg.ce_objective = opts.ce_objective;
            let out = sgm::run(game, &cfg)?;
            fill_from_outcome(game, &mut record, out)?;
        }
        SolveMethod::Potential => {
            let Instance::LotSizing(g) = inst else {
                return Err(Error::Unsupported(format!("potential ascent needs a lot-sizing instance, got {}", inst.kind())));
            };
            let start = Instant::now();
            let zero = (0..g.players.len()).map(|p| g.zero_strategy(p)).collect();
            let (x, moves) = g.potential_ascent(zero, 1e-9)?;
            record.time_ms = start.elapsed().as_secs_f64() * 1e3;
            record.iterations = moves;
            let profile = Profile::pure(x);
            record.sampled_sizes = vec![1; g.players.len()];
            set_profile(game, &mut record, profile)?;
        }
        SolveMethod::Oracle => {
            let start = Instant::now();
            let mut search = SearchOptions::new(game.num_players());
            search.caps = (0..game.num_players()).map(|p| game.support_cap(p)).collect();
            search.deadline = Some(start + opts.time_limit);
            match direct_pns(game, ENUMERATION_CAP, Some(search)) {
                Ok((profile, sg)) => {
                    record.time_ms = start.elapsed().as_secs_f64() * 1e3;
                    record.sampled_sizes = sg.sizes();
                    set_profile(game, &mut record, profile)?;
                }
                Err(Error::TimeLimit) => {
                    record.time_ms = start.elapsed().as_secs_f64() * 1e3;
                    record.status = RunStatus::TimeLimit;
                    return Ok(record);
                }
                Err(e) => return Err(e),
            }
        }
    }
    if let Instance::Keg(g) = inst {
        keg_extras(g, &mut record);
    }
    Ok(record)
}

fn set_profile(game: &dyn BilateralGame, record: &mut RunRecord, profile: Profile) -> Result<()> {
    record.kind = Some(kind_of(&profile));
    record.support_sizes = profile.support_sizes();
    record.payoffs = all_payoffs(game, &profile)?;
    record.verdict = Verdict::from(&verify_ne(game, &profile, record.epsilon)?);
    record.profile = Some(profile);
    Ok(())
}

fn fill_from_outcome(game: &dyn BilateralGame, record: &mut RunRecord, out: SgmOutcome) -> Result<()> {
    record.status = out.status.into();
    record.time_ms = out.elapsed.as_secs_f64() * 1e3;
    record.iterations = out.iterations;
    record.backtracks = out.backtracks;
    record.sampled_sizes = out.sizes.clone();
    match out.solution {
        Solution::Mixed(profile) => set_profile(game, record, profile)?,
        Solution::Correlated { tau, tau_ne } => {
            record.kind = Some(EquilibriumKind::Correlated);
            record.tau_support = Some(tau.support_size());
            record.payoffs = (0..game.num_players()).map(|p| joint_payoff(game, &tau, p)).collect();
            record.social_tau = Some(record.payoffs.iter().sum());
            record.verdict = Verdict::from(&verify_ce(game, &tau, record.epsilon)?);
            if out.status == Status::Equilibrium {
                record.tau_based_ne = Some(tau_ne.is_some());
            }
            record.tau = Some(tau);
            record.tau_ne = tau_ne;
        }
    }
    Ok(())
}

/// Re-runs the oracle on a stored record.
pub fn verify_record(inst: &Instance, record: &RunRecord) -> Result<VerificationReport> {
    let game = inst.game();
    match (&record.profile, &record.tau) {
        (Some(profile), _) => verify_ne(game, profile, record.epsilon),
        (None, Some(tau)) => verify_ce(game, tau, record.epsilon),
        (None, None) => Err(Error::InvalidInput("record holds no profile or distribution".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Knapsack2p,
    Knapsack3p,
    Keg,
    LotSizing,
    CeKnapsack,
    DirectPns,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knapsack-2p" => Ok(Suite::Knapsack2p),
            "knapsack-3p" => Ok(Suite::Knapsack3p),
            "keg" => Ok(Suite::Keg),
            "lotsizing" => Ok(Suite::LotSizing),
            "ce-knapsack" => Ok(Suite::CeKnapsack),
            "direct-pns" => Ok(Suite::DirectPns),
            other => Err(Error::InvalidInput(format!("unknown suite {other:?}"))),
        }
    }
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Knapsack2p => "knapsack-2p",
            Suite::Knapsack3p => "knapsack-3p",
            Suite::Keg => "keg",
            Suite::LotSizing => "lotsizing",
            Suite::CeKnapsack => "ce-knapsack",
            Suite::DirectPns => "direct-pns",
        }
    }

    /// CSV header row.
    pub fn header(self) -> &'static [&'static str] {
        match self {
            Suite::Knapsack2p => &["n", "INS", "method", "time", "iter", "pNE", "mNE", "|S1|", "|S2|", "numb. back", "verified"],
            Suite::Knapsack3p => &["n", "INS", "method", "time", "iter", "pNE", "mNE", "|S1|", "|S2|", "|S3|", "numb. back", "verified"],
            Suite::Keg => &[
                "|V|",
                "INS",
                "method",
                "time",
                "iter",
                "pNE",
                "|S1|",
                "|S2|",
                "numb. back",
                "Price of NE",
                "PiA decrease",
                "PiB decrease",
                "Social opt time",
                "|supp(tau)|",
                "verified",
            ],
            Suite::LotSizing => &["m", "T", "INS", "method", "time", "iter", "|S1|", "|S2|", "|S3|", "numb. back", "pNE", "verified"],
            Suite::CeKnapsack => &[
                "n",
                "m",
                "INS",
                "method",
                "time",
                "iter",
                "tau-based NE?",
                "|supp(tau)|",
                "|S1|",
                "|S2|",
                "|S3|",
                "1-Social(sigma)/Social(tau)",
                "verified",
            ],
            Suite::DirectPns => {
                &["n", "m", "INS", "method", "time", "iter", "pNE", "mNE", "|S1|", "|S2|", "|S3|", "numb. back", "verified"]
            }
        }
    }

    /// Size parameters per group: `n`, `n`, `|V|`, `(m, T)`, `(n, m)`, `(n, m)`.
    pub fn default_sizes(self) -> Vec<Vec<usize>> {
        match self {
            Suite::Knapsack2p => vec![vec![20], vec![40], vec![80], vec![100]],
            Suite::Knapsack3p => vec![vec![10], vec![20], vec![40]],
            Suite::Keg => vec![vec![20], vec![40], vec![80]],
            Suite::LotSizing => [2, 3].iter().flat_map(|&m| [10, 20, 50, 100].map(|t| vec![m, t])).collect(),
            Suite::CeKnapsack => vec![vec![20, 2], vec![40, 2], vec![10, 3], vec![20, 3]],
            Suite::DirectPns => vec![vec![5, 2], vec![7, 2], vec![5, 3], vec![7, 3]],
        }
    }

    fn arity(self) -> usize {
        match self {
            Suite::Knapsack2p | Suite::Knapsack3p | Suite::Keg => 1,
            _ => 2,
        }
    }

    fn methods(self) -> &'static [SolveMethod] {
        match self {
            Suite::Knapsack2p | Suite::Knapsack3p => &[SolveMethod::Msgm, SolveMethod::Sgm],
            Suite::Keg => &[SolveMethod::Msgm, SolveMethod::Sgm, SolveMethod::Ce],
            Suite::LotSizing => &[SolveMethod::Msgm, SolveMethod::Sgm, SolveMethod::Potential],
            Suite::CeKnapsack => &[SolveMethod::Ce],
            Suite::DirectPns => &[SolveMethod::Msgm, SolveMethod::Oracle],
        }
    }
}

/// Seed of instance `ins` in a size group.
pub fn instance_seed(base: u64, suite: Suite, size: &[usize], ins: usize) -> u64 {
    let mut h = base ^ 0x9e37_79b9_7f4a_7c15;
    for v in std::iter::once(suite as usize).chain(size.iter().copied()).chain(std::iter::once(ins)) {
        h = h.wrapping_mul(0x0100_0000_01b3).wrapping_add(v as u64 + 1);
    }
    h
}

/// Builds instance `ins` of a size group.
pub fn suite_instance(suite: Suite, size: &[usize], ins: usize, base_seed: u64) -> Result<Instance> {
    if size.len() != suite.arity() || size.contains(&0) {
        return Err(Error::InvalidInput(format!("suite {} needs {} positive size parameters", suite.name(), suite.arity())));
    }
    let seed = instance_seed(base_seed, suite, size, ins);
    Ok(match suite {
        Suite::Knapsack2p => Instance::Knapsack(knapsack::generate(size[0], 2, ins as u32 % 10, seed)),
        Suite::Knapsack3p => Instance::Knapsack(knapsack::generate(size[0], 3, ins as u32 % 10, seed)),
        Suite::CeKnapsack | Suite::DirectPns => Instance::Knapsack(knapsack::generate(size[0], size[1], ins as u32 % 10, seed)),
        Suite::Keg => {
            let graph = keg::generate(size[0], keg::default_density(size[0]), seed);
            Instance::Keg(KegGame::new(graph, true))
        }
        Suite::LotSizing => Instance::LotSizing(lotsizing::generate(size[0], size[1], seed)),
    })
}

#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub suite: Suite,
    pub sizes: Vec<Vec<usize>>,
    pub instances: usize,
    pub time_limit: Duration,
    pub max_iterations: usize,
    pub jobs: usize,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(suite: Suite) -> Self {
        BenchConfig {
            suite,
            sizes: suite.default_sizes(),
            instances: 10,
            time_limit: Duration::from_secs(3600),
            max_iterations: 10_000,
            jobs: 1,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Num(f64),
    Empty,
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Text(s) => f.write_str(s),
            Cell::Int(v) => write!(f, "{v}"),
            Cell::Num(v) => write!(f, "{v:.4}"),
            Cell::Empty => Ok(()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct BenchRow {
    pub size: Vec<usize>,
    pub ins: usize,
    pub record: RunRecord,
    /// Welfare of the depth-first equilibrium, for correlated runs.
    pub reference_welfare: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub suite: Suite,
    pub rows: Vec<BenchRow>,
}

fn text(s: impl Into<String>) -> Cell {
    Cell::Text(s.into())
}

fn sizes_cells(sizes: &[usize], count: usize) -> Vec<Cell> {
    (0..count).map(|p| sizes.get(p).map_or(Cell::Empty, |&v| Cell::Int(v as i64))).collect()
}

fn timed_out(r: &RunRecord) -> bool {
    r.status != RunStatus::Equilibrium
}

impl BenchRow {
    fn cells(&self, suite: Suite) -> Vec<Cell> {
        let r = &self.record;
        let time = if timed_out(r) { text("tl") } else { Cell::Num(r.time_ms / 1e3) };
        let iter = match r.method {
            SolveMethod::Oracle => Cell::Empty,
            SolveMethod::Potential => Cell::Int(r.iterations as i64),
            _ => Cell::Int(r.sampled_games() as i64),
        };
        let pure = r.kind == Some(EquilibriumKind::Pure);
        let pne = Cell::Int(i64::from(pure));
        let mne = if pure || r.kind.is_none() { text("-") } else { text(format!("{:?}", r.support_sizes)) };
        let verified = text(if r.verdict.pass { "yes" } else { "no" });
        let back = Cell::Int(r.backtracks as i64);
        let size: Vec<Cell> = self.size.iter().map(|&v| Cell::Int(v as i64)).collect();
        let mut row = size;
        row.push(Cell::Int(self.ins as i64));
        row.push(text(r.method.name()));
        row.push(time);
        row.push(iter);
        match suite {
            Suite::Knapsack2p | Suite::Knapsack3p => {
                row.extend([pne, mne]);
                row.extend(sizes_cells(&r.sampled_sizes, if suite == Suite::Knapsack2p { 2 } else { 3 }));
                row.extend([back, verified]);
            }
            Suite::Keg => {
                row.push(if r.kind == Some(EquilibriumKind::Correlated) { Cell::Empty } else { pne });
                row.extend(sizes_cells(&r.sampled_sizes, 2));
                row.push(back);
                row.push(r.price_of_ne.map_or(Cell::Empty, Cell::Num));
                let dec = r.standalone_decrease.clone().unwrap_or_default();
                row.extend((0..2).map(|p| dec.get(p).map_or(Cell::Empty, |v| Cell::Num(*v))));
                row.push(r.social_opt_ms.map_or(Cell::Empty, |v| Cell::Num(v / 1e3)));
                row.push(r.tau_support.map_or(Cell::Empty, |v| Cell::Int(v as i64)));
                row.push(verified);
            }
            Suite::LotSizing => {
                row.extend(sizes_cells(&r.sampled_sizes, 3));
                row.extend([back, pne, verified]);
            }
            Suite::CeKnapsack => {
                row.push(match r.tau_based_ne {
                    Some(true) => text("YES"),
                    Some(false) => text("NO"),
                    None => Cell::Empty,
                });
                row.push(r.tau_support.map_or(Cell::Empty, |v| Cell::Int(v as i64)));
                row.extend(sizes_cells(&r.sampled_sizes, 3));
                row.push(match (self.reference_welfare, r.social_tau) {
                    (Some(s), Some(t)) if t != 0.0 => Cell::Num(1.0 - s / t),
                    _ => Cell::Empty,
                });
                row.push(verified);
            }
            Suite::DirectPns => {
                row.extend([pne, mne]);
                row.extend(sizes_cells(&r.sampled_sizes, 3));
                row.extend([back, verified]);
            }
        }
        row
    }
}

impl BenchReport {
    /// Per-instance rows followed, for each size and method, by an average
    /// row over the runs that finished.
    pub fn table(&self) -> Vec<Vec<Cell>> {
        let suite = self.suite;
        let ncols = suite.header().len();
        let key_len = suite.arity();
        let mut out = Vec::new();
        let mut groups: Vec<(Vec<usize>, SolveMethod)> = Vec::new();
        for r in &self.rows {
            let g = (r.size.clone(), r.record.method);
            if !groups.contains(&g) {
                groups.push(g);
            }
        }
        for (size, method) in groups {
            let members: Vec<&BenchRow> = self.rows.iter().filter(|r| r.size == size && r.record.method == method).collect();
            let cells: Vec<Vec<Cell>> = members.iter().map(|r| r.cells(suite)).collect();
            let done: Vec<&Vec<Cell>> = members.iter().zip(&cells).filter(|(r, _)| !timed_out(&r.record)).map(|(_, c)| c).collect();
            out.extend(cells.iter().cloned());
            let mut avg: Vec<Cell> = size.iter().map(|&v| Cell::Int(v as i64)).collect();
            avg.push(text("avg"));
            avg.push(text(method.name()));
            for col in key_len + 2..ncols {
                let vals: Vec<f64> = done
                    .iter()
                    .filter_map(|c| match &c[col] {
                        Cell::Int(v) => Some(*v as f64),
                        Cell::Num(v) => Some(*v),
                        Cell::Text(s) if s == "yes" || s == "YES" => Some(1.0),
                        Cell::Text(s) if s == "no" || s == "NO" => Some(0.0),
                        _ => None,
                    })
                    .collect();
                avg.push(if vals.is_empty() { Cell::Empty } else { Cell::Num(vals.iter().sum::<f64>() / vals.len() as f64) });
            }
            out.push(avg);
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut csv = csv::Writer::from_writer(w);
        let io = |e: csv::Error| Error::InvalidInput(format!("writing CSV: {e}"));
        csv.write_record(self.suite.header()).map_err(io)?;
        for row in self.table() {
            csv.write_record(row.iter().map(ToString::to_string)).map_err(io)?;
        }
        csv.flush().map_err(|e| Error::InvalidInput(format!("writing CSV: {e}")))?;
        Ok(())
    }
}

struct Job {
    size: Vec<usize>,
    ins: usize,
}

fn run_job(cfg: &BenchConfig, job: &Job) -> Result<Vec<BenchRow>> {
    let suite = cfg.suite;
    let inst = suite_instance(suite, &job.size, job.ins, cfg.seed)?;
    let id = format!("{}-{}-{}", suite.name(), job.size.iter().map(ToString::to_string).collect::<Vec<_>>().join("x"), job.ins);
    let opts = SolveOptions { max_iterations: cfg.max_iterations, time_limit: cfg.time_limit, ..SolveOptions::default() };
    let mut rows = Vec::new();
    for &method in suite.methods() {
        let record = solve(&inst, &id, method, &opts)?;
        rows.push(BenchRow { size: job.size.clone(), ins: job.ins, reference_welfare: None, record });
    }
    if suite == Suite::CeKnapsack {
        let record = solve(&inst, &id, SolveMethod::Msgm, &opts)?;
        let welfare_ne = (record.status == RunStatus::Equilibrium).then(|| record.payoffs.iter().sum::<f64>());
        for r in &mut rows {
            r.reference_welfare = welfare_ne;
        }
    }
    Ok(rows)
}

/// Generates and solves every instance of a suite.
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    for s in &cfg.sizes {
        if s.len() != cfg.suite.arity() {
            return Err(Error::InvalidInput(format!("suite {} needs {} size parameters per group", cfg.suite.name(), cfg.suite.arity())));
        }
    }
    let jobs: Vec<Job> = cfg.sizes.iter().flat_map(|s| (0..cfg.instances).map(move |ins| Job { size: s.clone(), ins })).collect();
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(cfg.jobs.max(1)).build().map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let results: Vec<Result<Vec<BenchRow>>> = pool.install(|| jobs.par_iter().map(|j| run_job(cfg, j)).collect());
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    Ok(BenchReport { suite: cfg.suite, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_round_trip() {
        for m in [SolveMethod::Sgm, SolveMethod::Msgm, SolveMethod::Ce, SolveMethod::Potential, SolveMethod::Oracle] {
            assert_eq!(m.name().parse::<SolveMethod>().unwrap(), m);
        }
        assert!("simplex".parse::<SolveMethod>().is_err());
    }

    #[test]
    fn seeds_differ_across_groups() {
        let a = instance_seed(1, Suite::Knapsack2p, &[20], 0);
        assert_ne!(a, instance_seed(1, Suite::Knapsack2p, &[20], 1));
        assert_ne!(a, instance_seed(1, Suite::Knapsack3p, &[20], 0));
        assert_eq!(a, instance_seed(1, Suite::Knapsack2p, &[20], 0));
    }
}
