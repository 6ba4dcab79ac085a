//! Sampled generation methods.
//!
//! Each method grows a finite sampled game by best responses until the
//! equilibrium of the sample admits no profitable deviation in the full game.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::model::{expected_payoff, BilateralGame, JointDistribution, MixedStrategy, Profile, PureStrategy};
use crate::pns::{default_order, find_ne, solve_ce, CeObjective, SampledJoint, SearchOptions, SizeRule, SolveConstraints};
use crate::sampled::{DeviationRecord, SampledGame, SampledProfile};

/// Relative slack added to every deviation threshold.
pub const DEVIATION_SLACK: f64 = 1e-9;

/// Threshold a deviation value must exceed to count as profitable.
pub fn deviation_threshold(current: f64, epsilon: f64) -> f64 {
    current + epsilon + DEVIATION_SLACK * current.abs().max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    Sgm,
    Msgm,
    Ce,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Initialization {
    /// Best response of each player with every opponent switched off.
    Alone,
    /// Each player's optimum when it also controls the shared decisions.
    Optimistic,
    /// Given strategy lists.
    Custom(Vec<Vec<PureStrategy>>),
}

#[derive(Clone, Debug)]
pub struct SgmConfig {
    pub epsilon: f64,
    pub max_iterations: usize,
    pub time_limit: Duration,
    pub method: Method,
    pub initialization: Initialization,
    pub ce_objective: CeObjective,
    /// Restrict support sizes by the game's known bounds.
    pub support_caps: bool,
    pub size_rule: SizeRule,
    /// Recorded with results; the drivers themselves are deterministic.
    pub seed: u64,
}

impl SgmConfig {
    pub fn new(method: Method) -> Self {
        SgmConfig {
            epsilon: 0.0,
            max_iterations: 10_000,
            time_limit: Duration::from_secs(3600),
            method,
            initialization: Initialization::Alone,
            ce_objective: CeObjective::MaxWelfare,
            support_caps: true,
            size_rule: SizeRule::Guided,
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidInput(format!("epsilon must be finite and nonnegative, got {}", self.epsilon)));
        }
        if self.max_iterations == 0 || self.time_limit.is_zero() {
            return Err(Error::InvalidInput("limits must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Equilibrium,
    IterationLimit,
    TimeLimit,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Solution {
    Mixed(Profile),
    Correlated {
        tau: JointDistribution,
        /// Nash equilibrium supported on the positive marginals of `tau`
        /// with the same payoffs, when one exists.
        tau_ne: Option<Profile>,
    },
}

impl Solution {
    pub fn profile(&self) -> Option<&Profile> {
        match self {
            Solution::Mixed(p) => Some(p),
            Solution::Correlated { .. } => None,
        }
    }

    pub fn tau(&self) -> Option<&JointDistribution> {
        match self {
            Solution::Correlated { tau, .. } => Some(tau),
            Solution::Mixed(_) => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SgmOutcome {
    pub status: Status,
    pub solution: Solution,
    /// Forward steps, each adding one strategy.
    pub iterations: usize,
    pub backtracks: usize,
    /// Index of the sampled game holding the returned solution.
    pub final_index: usize,
    pub sizes: Vec<usize>,
    pub elapsed: Duration,
    pub payoffs: Vec<f64>,
    /// Best deviation value per player at the last check. For correlated
    /// solutions, the value of the best recommendation-wise deviation plan.
    pub certificate: Vec<f64>,
    /// Every strategy added by a forward step, in order.
    pub added: Vec<(usize, PureStrategy)>,
    pub sampled: SampledGame,
}

/// Initial strategy lists, one per player.
pub fn initialization(game: &dyn BilateralGame, mode: &Initialization) -> Result<Vec<Vec<PureStrategy>>> {
    let m = game.num_players();
    match mode {
        Initialization::Alone => {
            let zero = Profile::pure((0..m).map(|p| game.zero_strategy(p)).collect());
            (0..m).map(|p| Ok(vec![game.best_response(p, &zero)?])).collect()
        }
        Initialization::Optimistic => (0..m).map(|p| Ok(vec![game.optimistic_strategy(p)?])).collect(),
        Initialization::Custom(lists) => {
            if lists.len() != m || lists.iter().any(Vec::is_empty) {
                return Err(Error::InvalidInput(format!("custom initialization needs {m} nonempty lists")));
            }
            Ok(lists.clone())
        }
    }
}

/// Players by decreasing number of iterations since their last deviation,
/// ties by index. Players without deviations are the stalest.
pub fn player_order(num_players: usize, log: &[DeviationRecord]) -> Vec<usize> {
    let mut last: Vec<Option<usize>> = vec![None; num_players];
    for r in log {
        if r.player < num_players {
            last[r.player] = Some(last[r.player].map_or(r.iteration, |v| v.max(r.iteration)));
        }
    }
    let mut order: Vec<usize> = (0..num_players).collect();
    // None sorts before Some, so older entries come first.
    order.sort_by_key(|&p| last[p]);
    order
}

/// A profitable deviation of player `p` against `profile`, with its value.
///
/// Fails when the best response is already sampled yet beats the threshold,
/// which means the sampled equilibrium was solved beyond tolerance.
pub fn deviation_reaction(
    game: &dyn BilateralGame,
    p: usize,
    profile: &Profile,
    current: f64,
    epsilon: f64,
    sampled: Option<&SampledGame>,
) -> Result<(Option<PureStrategy>, f64)> {
    let x = game.best_response(p, profile)?;
    let value = expected_payoff(game, &profile.with(p, MixedStrategy::pure(x.clone())), p)?;
    if value <= deviation_threshold(current, epsilon) {
        return Ok((None, value));
    }
    if let Some(sg) = sampled {
        if sg.index_of(p, &x).is_some() {
            return Err(Error::Internal(format!(
                "player {p} best response is already sampled but improves {current} to {value}; \
                 sampled equilibrium violates its conditions beyond tolerance"
            )));
        }
    }
    Ok((Some(x), value))
}

struct Clock {
    start: Instant,
    deadline: Instant,
}

impl Clock {
    fn new(limit: Duration) -> Self {
        let start = Instant::now();
        Clock { start, deadline: start + limit }
    }

    fn expired(&self) -> bool {
        Instant::now() > self.deadline
    }
}

fn search_options(game: &dyn BilateralGame, config: &SgmConfig, clock: &Clock) -> SearchOptions {
    let m = game.num_players();
    let mut opts = SearchOptions::new(m);
    if config.support_caps {
        opts.caps = (0..m).map(|p| game.support_cap(p)).collect();
    }
    opts.deadline = Some(clock.deadline);
    opts
}

fn payoffs(game: &dyn BilateralGame, profile: &Profile) -> Result<Vec<f64>> {
    (0..game.num_players()).map(|p| expected_payoff(game, profile, p)).collect()
}

/// Runs the driver selected by `config.method`.
pub fn run(game: &dyn BilateralGame, config: &SgmConfig) -> Result<SgmOutcome> {
    match config.method {
        Method::Sgm => run_sgm(game, config),
        Method::Msgm => run_msgm(game, config),
        Method::Ce => run_sgm_ce(game, config),
    }
}

struct Check {
    deviation: Option<(usize, PureStrategy)>,
    certificate: Vec<f64>,
    payoffs: Vec<f64>,
}

/// Step 2: asks players in order for a profitable deviation.
fn termination_check(game: &dyn BilateralGame, sg: &SampledGame, profile: &Profile, eps: f64) -> Result<Check> {
    let m = game.num_players();
    let current = payoffs(game, profile)?;
    let mut certificate = current.clone();
    for p in player_order(m, sg.deviation_log()) {
        let (dev, value) = deviation_reaction(game, p, profile, current[p], eps, Some(sg))?;
        certificate[p] = value;
        if let Some(x) = dev {
            return Ok(Check { deviation: Some((p, x)), certificate, payoffs: current });
        }
    }
    Ok(Check { deviation: None, certificate, payoffs: current })
}

fn initial_equilibrium(sg: &SampledGame, game: &dyn BilateralGame, config: &SgmConfig, opts: &SearchOptions) -> Result<SampledProfile> {
    if sg.sizes().iter().all(|&n| n == 1) {
        return Ok(sg.point(&vec![0; sg.num_players()]));
    }
    let order = default_order(sg, &[], &opts.caps, config.size_rule);
    find_ne(sg, &order, &SolveConstraints::none(), opts)?
        .ok_or_else(|| Error::Internal(format!("no equilibrium found in the initial sampled game of {} players", game.num_players())))
}

/// Basic sampled generation method.
pub fn run_sgm(game: &dyn BilateralGame, config: &SgmConfig) -> Result<SgmOutcome> {
    config.validate()?;
    let clock = Clock::new(config.time_limit);
    let opts = search_options(game, config, &clock);
    let mut sg = SampledGame::assemble(game, initialization(game, &config.initialization)?)?;
    let sp = initial_equilibrium(&sg, game, config, &opts)?;
    let mut profile = sg.to_profile(&sp);
    let mut history = vec![profile.clone()];
    let mut added = Vec::new();
    let mut k = 0;
    loop {
        let check = termination_check(game, &sg, &profile, config.epsilon)?;
        let finish = |status, sg: SampledGame, added, k| SgmOutcome {
            status,
            solution: Solution::Mixed(profile.clone()),
            iterations: k,
            backtracks: 0,
            final_index: k,
            sizes: sg.sizes(),
            elapsed: clock.start.elapsed(),
            payoffs: check.payoffs.clone(),
            certificate: check.certificate.clone(),
            added,
            sampled: sg,
        };
        let Some((p, x)) = check.deviation.clone() else {
            return Ok(finish(Status::Equilibrium, sg, added, k));
        };
        if k >= config.max_iterations {
            return Ok(finish(Status::IterationLimit, sg, added, k));
        }
        if clock.expired() {
            return Ok(finish(Status::TimeLimit, sg, added, k));
        }
        k += 1;
        sg.add_strategy(game, p, x.clone(), k)?;
        added.push((p, x));
        let order = default_order(&sg, &history, &opts.caps, config.size_rule);
        match find_ne(&sg, &order, &SolveConstraints::none(), &opts) {
            Ok(Some(sp)) => {
                profile = sg.to_profile(&sp);
                history.push(profile.clone());
            }
            Ok(None) => return Err(Error::Internal(format!("sampled game {k} has no equilibrium in the searched supports"))),
            Err(Error::TimeLimit) => return Ok(finish(Status::TimeLimit, sg, added, k)),
            Err(e) => return Err(e),
        }
    }
}

/// Depth-first sampled generation with forced supports and backtracking.
pub fn run_msgm(game: &dyn BilateralGame, config: &SgmConfig) -> Result<SgmOutcome> {
    config.validate()?;
    let clock = Clock::new(config.time_limit);
    let opts = search_options(game, config, &clock);
    let init = initialization(game, &config.initialization)?;
    if init.iter().any(|l| l.len() != 1) {
        return Err(Error::InvalidInput("the depth-first method starts from exactly one strategy per player".into()));
    }
    let m = game.num_players();
    let mut sg = SampledGame::assemble(game, init)?;
    // sigma[j] is the equilibrium of sampled game j.
    let mut sigma: Vec<Profile> = vec![sg.to_profile(&sg.point(&vec![0; m]))];
    // dev[j]: strategies added when moving forward into level j.
    let mut dev: Vec<Vec<(usize, PureStrategy)>> = vec![Vec::new(); 3];
    let mut forced: Vec<Option<(usize, PureStrategy)>> = vec![None];
    let mut added = Vec::new();
    let (mut k, mut iterations, mut backtracks) = (0usize, 0usize, 0usize);
    let ensure = |dev: &mut Vec<Vec<(usize, PureStrategy)>>, n: usize| {
        if dev.len() <= n {
            dev.resize(n + 1, Vec::new());
        }
    };
    loop {
        // Step 2.
        let profile = sigma[k].clone();
        let check = termination_check(game, &sg, &profile, config.epsilon)?;
        let finish = |status, sg: SampledGame, added, iterations, backtracks, k| SgmOutcome {
            status,
            solution: Solution::Mixed(profile.clone()),
            iterations,
            backtracks,
            final_index: k,
            sizes: sg.sizes(),
            elapsed: clock.start.elapsed(),
            payoffs: check.payoffs.clone(),
            certificate: check.certificate.clone(),
            added,
            sampled: sg,
        };
        let Some((p, x)) = check.deviation.clone() else {
            return Ok(finish(Status::Equilibrium, sg, added, iterations, backtracks, k));
        };
        if iterations >= config.max_iterations {
            return Ok(finish(Status::IterationLimit, sg, added, iterations, backtracks, k));
        }
        if clock.expired() {
            return Ok(finish(Status::TimeLimit, sg, added, iterations, backtracks, k));
        }
        // Step 3.
        k += 1;
        iterations += 1;
        ensure(&mut dev, k + 2);
        dev[k].push((p, x.clone()));
        sg.add_strategy(game, p, x.clone(), iterations)?;
        added.push((p, x.clone()));
        dev[k + 2].clear();
        forced.truncate(k);
        forced.push(Some((p, x)));
        // Step 4, repeated while backtracking.
        loop {
            let history = &sigma[..k];
            let order = default_order(&sg, history, &opts.caps, config.size_rule);
            let (fp, fx) = forced[k].clone().expect("forced strategy at every positive level");
            let excluded = dev[k + 1].iter().filter_map(|(q, y)| sg.index_of(*q, y).map(|i| (*q, i))).collect();
            let cons = SolveConstraints { forced: Some((fp, sg.index_of(fp, &fx).expect("forced strategy is sampled"))), excluded };
            match find_ne(&sg, &order, &cons, &opts) {
                Ok(Some(sp)) => {
                    sigma.truncate(k);
                    sigma.push(sg.to_profile(&sp));
                    break;
                }
                Ok(None) => {
                    if k <= 1 {
                        return Err(Error::Internal("backtracking reached the initial sampled game".into()));
                    }
                    backtracks += 1;
                    let removal = std::mem::take(&mut dev[k + 1]);
                    if !removal.is_empty() {
                        sg.remove_strategies(&removal)?;
                    }
                    sigma.truncate(k - 1);
                    ensure(&mut dev, k + 2);
                    dev[k + 2].clear();
                    k -= 1;
                }
                Err(Error::TimeLimit) => {
                    let last = sigma.len() - 1;
                    let profile = sigma[last].clone();
                    let current = payoffs(game, &profile)?;
                    return Ok(SgmOutcome {
                        status: Status::TimeLimit,
                        solution: Solution::Mixed(profile),
                        iterations,
                        backtracks,
                        final_index: last,
                        sizes: sg.sizes(),
                        elapsed: clock.start.elapsed(),
                        certificate: current.clone(),
                        payoffs: current,
                        added,
                        sampled: sg,
                    });
                }
                Err(e) => return Err(e),
            }
        }
    }
}

/// Payoff-preserving Nash equilibrium inside the support of a correlated one.
///
/// Strategies without marginal mass are excluded and each player's payoff is
/// pinned to its value under `tau`.
pub fn tau_based_ne(sg: &SampledGame, tau: &SampledJoint, opts: &SearchOptions, rule: SizeRule) -> Result<Option<SampledProfile>> {
    let m = sg.num_players();
    let mut excluded = Vec::new();
    for p in 0..m {
        for (i, q) in tau.marginal(p).iter().enumerate() {
            if *q <= 0.0 {
                excluded.push((p, i));
            }
        }
    }
    let mut opts = opts.clone();
    opts.fixed_values = Some((0..m).map(|p| tau.expected_payoff(sg, p)).collect());
    let order = default_order(sg, &[], &opts.caps, rule);
    find_ne(sg, &order, &SolveConstraints { forced: None, excluded }, &opts)
}

/// Sampled generation of a correlated equilibrium.
pub fn run_sgm_ce(game: &dyn BilateralGame, config: &SgmConfig) -> Result<SgmOutcome> {
    config.validate()?;
    let clock = Clock::new(config.time_limit);
    let opts = search_options(game, config, &clock);
    let m = game.num_players();
    let mut sg = SampledGame::assemble(game, initialization(game, &config.initialization)?)?;
    let mut added = Vec::new();
    let mut k = 0;
    loop {
        let tau = solve_ce(&sg, config.ce_objective)?;
        let dist = tau.to_distribution(&sg);
        let current: Vec<f64> = (0..m).map(|p| crate::model::joint_payoff(game, &dist, p)).collect();
        let mut certificate = vec![0.0; m];
        let mut deviation = None;
        'players: for p in player_order(m, sg.deviation_log()) {
            for (i, x) in sg.strategies(p).iter().enumerate() {
                if tau.marginal(p)[i] <= 0.0 {
                    continue;
                }
                let Some((mass, cond)) = dist.conditional(p, x) else {
                    continue;
                };
                let rec = mass * expected_payoff(game, &cond, p)?;
                let best = game.best_response(p, &cond)?;
                let value = mass * expected_payoff(game, &cond.with(p, MixedStrategy::pure(best.clone())), p)?;
                certificate[p] += value.max(rec);
                if value > deviation_threshold(rec, config.epsilon) {
                    if sg.index_of(p, &best).is_some() {
                        return Err(Error::Internal(format!(
                            "player {p} sampled deviation improves recommendation value {rec} to {value}; \
                             correlated program solved beyond tolerance"
                        )));
                    }
                    deviation = Some((p, best));
                    break 'players;
                }
            }
        }
        let status = match &deviation {
            None => Some(Status::Equilibrium),
            Some(_) if k >= config.max_iterations => Some(Status::IterationLimit),
            Some(_) if clock.expired() => Some(Status::TimeLimit),
            Some(_) => None,
        };
        if let Some(status) = status {
            let tau_ne = if status == Status::Equilibrium {
                match tau_based_ne(&sg, &tau, &opts, config.size_rule) {
                    Ok(found) => found.map(|sp| sg.to_profile(&sp)),
                    Err(Error::TimeLimit) => None,
                    Err(e) => return Err(e),
                }
            } else {
                None
            };
            return Ok(SgmOutcome {
                status,
                solution: Solution::Correlated { tau: dist, tau_ne },
                iterations: k,
                backtracks: 0,
                final_index: k,
                sizes: sg.sizes(),
                elapsed: clock.start.elapsed(),
                payoffs: current,
                certificate,
                added,
                sampled: sg,
            });
        }
        let (p, x) = deviation.expect("deviation present");
        k += 1;
        sg.add_strategy(game, p, x.clone(), k)?;
        added.push((p, x));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(player: usize, iteration: usize) -> DeviationRecord {
        DeviationRecord { player, strategy: PureStrategy::binary(&[1]), iteration }
    }

    #[test]
    fn order_without_history() {
        assert_eq!(player_order(3, &[]), vec![0, 1, 2]);
    }

    #[test]
    fn latest_deviator_goes_last() {
        assert_eq!(player_order(3, &[rec(1, 4)]), vec![0, 2, 1]);
        assert_eq!(player_order(2, &[rec(0, 1), rec(1, 2)]), vec![0, 1]);
    }

    #[test]
    fn silent_player_stays_first() {
        let mut log = Vec::new();
        for it in 1..=6 {
            log.push(rec((it + 1) % 2, it));
            if it >= 2 {
                assert_eq!(player_order(3, &log)[0], 2);
            }
        }
    }

    #[test]
    fn threshold_has_relative_slack() {
        assert!(deviation_threshold(1e6, 0.0) > 1e6);
        assert_eq!(deviation_threshold(0.0, 0.5), 0.5 + DEVIATION_SLACK);
    }
}
