//! Brute-force baselines and equilibrium certificates.
//!
//! Verification calls the game's best-response engine on the plain game
//! description and never reads sampled-game caches.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{expected_payoff, BilateralGame, JointDistribution, MixedStrategy, Profile, PureStrategy};
use crate::pns::{default_order, find_ne, SearchOptions, SizeRule, SolveConstraints};
use crate::sampled::SampledGame;
use crate::sgm::deviation_threshold;

/// Default limit on the number of binary variables enumerated per player.
pub const ENUMERATION_CAP: usize = 20;

/// All feasible 0/1 strategies of player `p`.
pub fn enumerate_strategies(game: &dyn BilateralGame, p: usize, cap: usize) -> Result<Vec<PureStrategy>> {
    if !game.is_binary(p) {
        return Err(Error::Refused(format!("player {p} has non-binary variables")));
    }
    let n = game.dimension(p);
    if n > cap {
        return Err(Error::Refused(format!("player {p} has {n} variables, enumeration cap is {cap}")));
    }
    let mut out = Vec::new();
    let mut bits = vec![0u8; n];
    for mask in 0u64..(1u64 << n) {
        for (i, b) in bits.iter_mut().enumerate() {
            *b = ((mask >> i) & 1) as u8;
        }
        let x = PureStrategy::binary(&bits);
        if game.is_feasible(p, &x) {
            out.push(x);
        }
    }
    Ok(out)
}

/// Support enumeration on the full game with every strategy listed.
///
/// Returns the equilibrium and the sampled game holding all strategies.
pub fn direct_pns(game: &dyn BilateralGame, cap: usize, options: Option<SearchOptions>) -> Result<(Profile, SampledGame)> {
    let m = game.num_players();
    let mut lists = Vec::with_capacity(m);
    for p in 0..m {
        let all = enumerate_strategies(game, p, cap)?;
        if all.is_empty() {
            return Err(Error::NoStrategy { player: p, reason: "no feasible strategy".into() });
        }
        lists.push(all);
    }
    let sg = SampledGame::assemble(game, lists)?;
    let opts = options.unwrap_or_else(|| {
        let mut o = SearchOptions::new(m);
        o.caps = (0..m).map(|p| game.support_cap(p)).collect();
        o
    });
    let order = default_order(&sg, &[], &opts.caps, SizeRule::Guided);
    let sp = find_ne(&sg, &order, &SolveConstraints::none(), &opts)?
        .ok_or_else(|| Error::Internal("support enumeration found no equilibrium of a finite game".into()))?;
    Ok((sg.to_profile(&sp), sg))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlayerCheck {
    /// Expected payoff under the checked solution.
    pub current: f64,
    /// Value of the best deviation.
    pub best: f64,
    /// Largest single gain from deviating.
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerificationReport {
    pub players: Vec<PlayerCheck>,
    pub max_gap: f64,
    pub epsilon: f64,
    pub pass: bool,
}

impl VerificationReport {
    fn build(players: Vec<PlayerCheck>, epsilon: f64, pass: bool) -> Self {
        let max_gap = players.iter().map(|c| c.gap).fold(f64::NEG_INFINITY, f64::max);
        VerificationReport { players, max_gap, epsilon, pass }
    }
}

/// Checks that no player gains more than `epsilon` by a unilateral deviation.
pub fn verify_ne(game: &dyn BilateralGame, profile: &Profile, epsilon: f64) -> Result<VerificationReport> {
    let mut checks = Vec::with_capacity(game.num_players());
    let mut pass = true;
    for p in 0..game.num_players() {
        let current = expected_payoff(game, profile, p)?;
        let x = game.best_response(p, profile)?;
        let best = expected_payoff(game, &profile.with(p, MixedStrategy::pure(x)), p)?;
        pass &= best <= deviation_threshold(current, epsilon);
        checks.push(PlayerCheck { current, best, gap: best - current });
    }
    Ok(VerificationReport::build(checks, epsilon, pass))
}

/// Checks that no player gains more than `epsilon` by deviating from any
/// recommendation, with gains weighted by the recommendation's probability.
pub fn verify_ce(game: &dyn BilateralGame, tau: &JointDistribution, epsilon: f64) -> Result<VerificationReport> {
    let m = game.num_players();
    if tau.num_players() != m {
        return Err(Error::InvalidInput(format!("distribution has {} players, game has {m}", tau.num_players())));
    }
    let mut checks = Vec::with_capacity(m);
    let mut pass = true;
    for p in 0..m {
        let mut check = PlayerCheck { current: 0.0, best: 0.0, gap: f64::NEG_INFINITY };
        for (rec, _) in tau.marginal(p) {
            let Some((mass, cond)) = tau.conditional(p, &rec) else {
                continue;
            };
            let here = mass * expected_payoff(game, &cond, p)?;
            let x = game.best_response(p, &cond)?;
            let there = mass * expected_payoff(game, &cond.with(p, MixedStrategy::pure(x)), p)?;
            pass &= there <= deviation_threshold(here, epsilon);
            check.current += here;
            check.best += there.max(here);
            check.gap = check.gap.max(there - here);
        }
        checks.push(check);
    }
    Ok(VerificationReport::build(checks, epsilon, pass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::DuopolyGame;

    #[test]
    fn duopoly_origin_passes() {
        let g = DuopolyGame::new();
        let prof = Profile::pure(vec![DuopolyGame::strategy(0.0), DuopolyGame::strategy(0.0)]);
        let r = verify_ne(&g, &prof, 0.0).unwrap();
        assert!(r.pass);
        assert_eq!(r.max_gap, 0.0);
        let off = Profile::pure(vec![DuopolyGame::strategy(1.0), DuopolyGame::strategy(0.0)]);
        assert!(!verify_ne(&g, &off, 0.0).unwrap().pass);
    }

    #[test]
    fn refuses_continuous_and_large() {
        let g = DuopolyGame::new();
        assert!(matches!(enumerate_strategies(&g, 0, 20), Err(Error::Refused(_))));
        let k = crate::games::knapsack::generate(21, 2, 5, 1);
        assert!(matches!(enumerate_strategies(&k, 0, 20), Err(Error::Refused(_))));
    }
}
