//! Strategies, profiles and the bilateral game abstraction.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when snapping integral coordinates.
pub const SNAP_TOL: f64 = 1e-6;
/// Tolerance for comparing continuous coordinates.
pub const COORD_TOL: f64 = 1e-9;
/// Tolerance on probability sums.
pub const PROB_TOL: f64 = 1e-9;

/// One player's decision vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "RawPure")]
pub struct PureStrategy {
    values: Vec<f64>,
    integral: Vec<bool>,
}

#[derive(Deserialize)]
struct RawPure {
    values: Vec<f64>,
    integral: Vec<bool>,
}

impl TryFrom<RawPure> for PureStrategy {
    type Error = Error;

    fn try_from(raw: RawPure) -> Result<Self> {
        PureStrategy::new(raw.values, raw.integral)
    }
}

#[derive(Deserialize)]
struct RawMixed {
    atoms: Vec<(PureStrategy, f64)>,
}

impl TryFrom<RawMixed> for MixedStrategy {
    type Error = Error;

    fn try_from(raw: RawMixed) -> Result<Self> {
        MixedStrategy::new(raw.atoms)
    }
}

#[derive(Deserialize)]
struct RawJoint {
    atoms: Vec<(Vec<PureStrategy>, f64)>,
}

impl TryFrom<RawJoint> for JointDistribution {
    type Error = Error;

    fn try_from(raw: RawJoint) -> Result<Self> {
        JointDistribution::new(raw.atoms)
    }
}

impl PureStrategy {
    /// Builds a strategy, snapping coordinates flagged integral.
    pub fn new(values: Vec<f64>, integral: Vec<bool>) -> Result<Self> {
        if values.len() != integral.len() {
            return Err(Error::InvalidInput(format!("strategy has {} values but {} integrality flags", values.len(), integral.len())));
        }
        let mut values = values;
        for (i, v) in values.iter_mut().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidInput(format!("coordinate {i} is not finite")));
            }
            if integral[i] {
                let r = v.round();
                if (*v - r).abs() > SNAP_TOL {
                    return Err(Error::InvalidInput(format!("coordinate {i} = {v} is not integral")));
                }
                *v = if r == 0.0 { 0.0 } else { r };
            }
        }
        Ok(PureStrategy { values, integral })
    }

    /// A 0/1 vector.
    pub fn binary(bits: &[u8]) -> Self {
        PureStrategy { values: bits.iter().map(|&b| f64::from(b)).collect(), integral: vec![true; bits.len()] }
    }

    /// A vector of continuous coordinates.
    pub fn continuous(values: Vec<f64>) -> Self {
        let n = values.len();
        PureStrategy::new(values, vec![false; n]).expect("finite continuous strategy")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn integrality(&self) -> &[bool] {
        &self.integral
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when every coordinate is 0 or 1 and flagged integral.
    pub fn is_binary(&self) -> bool {
        self.values.iter().zip(&self.integral).all(|(v, &f)| f && (*v == 0.0 || *v == 1.0))
    }
}

impl PartialEq for PureStrategy {
    fn eq(&self, other: &Self) -> bool {
        self.values.len() == other.values.len()
            && self.values.iter().zip(&other.values).zip(&self.integral).all(
                |((a, b), &int)| {
                    if int {
                        a == b
                    } else {
                        (a - b).abs() <= COORD_TOL
                    }
                },
            )
    }
}

/// A finitely supported distribution over one player's strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMixed")]
pub struct MixedStrategy {
    atoms: Vec<(PureStrategy, f64)>,
}

impl MixedStrategy {
    pub fn new(atoms: Vec<(PureStrategy, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("mixed strategy without atoms".into()));
        }
        let mut total = 0.0;
        for (i, (s, p)) in atoms.iter().enumerate() {
            if !(p.is_finite() && *p >= 0.0 && *p <= 1.0 + PROB_TOL) {
                return Err(Error::InvalidInput(format!("probability {p} out of range")));
            }
            total += p;
            if atoms[..i].iter().any(|(t, _)| t == s) {
                return Err(Error::InvalidInput("mixed strategy repeats an atom".into()));
            }
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}")));
        }
        Ok(MixedStrategy { atoms })
    }

    pub fn pure(s: PureStrategy) -> Self {
        MixedStrategy { atoms: vec![(s, 1.0)] }
    }

    pub fn atoms(&self) -> &[(PureStrategy, f64)] {
        &self.atoms
    }

    /// Atoms played with positive probability.
    pub fn support(&self) -> impl Iterator<Item = &(PureStrategy, f64)> {
        self.atoms.iter().filter(|(_, p)| *p > 0.0)
    }

    pub fn support_size(&self) -> usize {
        self.support().count()
    }

    pub fn probability_of(&self, s: &PureStrategy) -> f64 {
        self.atoms.iter().find(|(t, _)| t == s).map_or(0.0, |(_, p)| *p)
    }

    /// Expected decision vector.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.atoms[0].0.len();
        let mut m = vec![0.0; n];
        for (s, p) in &self.atoms {
            for (mi, v) in m.iter_mut().zip(s.values()) {
                *mi += p * v;
            }
        }
        m
    }

    /// The single support strategy if the distribution is a point mass.
    pub fn as_pure(&self) -> Option<&PureStrategy> {
        let mut it = self.support();
        match (it.next(), it.next()) {
            (Some((s, _)), None) => Some(s),
            _ => None,
        }
    }
}

/// One mixed strategy per player.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    players: Vec<MixedStrategy>,
}

impl Profile {
    pub fn new(players: Vec<MixedStrategy>) -> Self {
        Profile { players }
    }

    pub fn pure(strategies: Vec<PureStrategy>) -> Self {
        Profile { players: strategies.into_iter().map(MixedStrategy::pure).collect() }
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn player(&self, p: usize) -> &MixedStrategy {
        &self.players[p]
    }

    pub fn players(&self) -> &[MixedStrategy] {
        &self.players
    }

    /// Replaces one player's strategy.
    pub fn with(&self, p: usize, s: MixedStrategy) -> Profile {
        let mut players = self.players.clone();
        players[p] = s;
        Profile { players }
    }

    pub fn is_pure(&self) -> bool {
        self.players.iter().all(|s| s.as_pure().is_some())
    }

    pub fn support_sizes(&self) -> Vec<usize> {
        self.players.iter().map(MixedStrategy::support_size).collect()
    }
}

/// A distribution over pure profiles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawJoint")]
pub struct JointDistribution {
    atoms: Vec<(Vec<PureStrategy>, f64)>,
}

impl JointDistribution {
    pub fn new(atoms: Vec<(Vec<PureStrategy>, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidInput("joint distribution without atoms".into()));
        }
        let m = atoms[0].0.len();
        let mut total = 0.0;
        for (i, (x, p)) in atoms.iter().enumerate() {
            if x.len() != m {
                return Err(Error::InvalidInput("atoms with differing player counts".into()));
            }
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::InvalidInput(format!("probability {p} out of range")));
            }
            total += p;
            if atoms[..i].iter().any(|(y, _)| y == x) {
                return Err(Error::InvalidInput("joint distribution repeats an atom".into()));
            }
        }
        if (total - 1.0).abs() > PROB_TOL {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}")));
        }
        Ok(JointDistribution { atoms })
    }

    pub fn point(x: Vec<PureStrategy>) -> Self {
        JointDistribution { atoms: vec![(x, 1.0)] }
    }

    pub fn atoms(&self) -> &[(Vec<PureStrategy>, f64)] {
        &self.atoms
    }

    pub fn num_players(&self) -> usize {
        self.atoms[0].0.len()
    }

    pub fn support_size(&self) -> usize {
        self.atoms.iter().filter(|(_, p)| *p > 0.0).count()
    }

    /// Marginal distribution of one player, atoms with positive mass only.
    pub fn marginal(&self, p: usize) -> Vec<(PureStrategy, f64)> {
        let mut out: Vec<(PureStrategy, f64)> = Vec::new();
        for (x, prob) in &self.atoms {
            if *prob <= 0.0 {
                continue;
            }
            match out.iter_mut().find(|(s, _)| *s == x[p]) {
                Some(entry) => entry.1 += prob,
                None => out.push((x[p].clone(), *prob)),
            }
        }
        out
    }

    /// Product of the opponents' conditional marginals given player `p` plays `rec`.
    ///
    /// Returns the conditioning mass and a profile whose entry `p` is `rec`.
    pub fn conditional(&self, p: usize, rec: &PureStrategy) -> Option<(f64, Profile)> {
        let m = self.num_players();
        let mut mass = 0.0;
        let mut parts: Vec<Vec<(PureStrategy, f64)>> = vec![Vec::new(); m];
        for (x, prob) in &self.atoms {
            if *prob <= 0.0 || x[p] != *rec {
                continue;
            }
            mass += prob;
            for k in 0..m {
                if k == p {
                    continue;
                }
                match parts[k].iter_mut().find(|(s, _)| *s == x[k]) {
                    Some(entry) => entry.1 += prob,
                    None => parts[k].push((x[k].clone(), *prob)),
                }
            }
        }
        if mass <= 0.0 {
            return None;
        }
        let players = (0..m)
            .map(|k| {
                if k == p {
                    MixedStrategy::pure(rec.clone())
                } else {
                    let atoms = parts[k].iter().map(|(s, q)| (s.clone(), q / mass)).collect();
                    MixedStrategy { atoms }
                }
            })
            .collect();
        Some((mass, Profile::new(players)))
    }
}

/// A game whose payoffs split into an own term and pairwise interaction terms.
///
/// `Π^p(x) = own_payoff(p, x^p) + Σ_{k≠p} pair_payoff(p, x^p, k, x^k)`.
pub trait BilateralGame: Send + Sync {
    fn num_players(&self) -> usize;

    fn dimension(&self, p: usize) -> usize;

    fn own_payoff(&self, p: usize, x: &PureStrategy) -> f64;

    fn pair_payoff(&self, p: usize, x: &PureStrategy, k: usize, y: &PureStrategy) -> f64;

    fn is_feasible(&self, p: usize, x: &PureStrategy) -> bool;

    /// An optimal strategy of player `p` against the opponents in `profile`.
    ///
    /// Entry `p` of the profile is ignored.
    fn best_response(&self, p: usize, profile: &Profile) -> Result<PureStrategy>;

    /// Largest support any equilibrium needs for player `p`, when known.
    fn support_cap(&self, _p: usize) -> Option<usize> {
        None
    }

    /// The all-zero decision vector, used to switch opponents off.
    fn zero_strategy(&self, p: usize) -> PureStrategy;

    /// Strategy of player `p` when it also controls the shared decisions.
    fn optimistic_strategy(&self, _p: usize) -> Result<PureStrategy> {
        Err(Error::Unsupported("optimistic initialization is not available for this game".into()))
    }

    /// True when every decision variable of player `p` is binary.
    fn is_binary(&self, _p: usize) -> bool {
        false
    }

    /// Payoff of player `p` at a pure profile.
    fn payoff(&self, p: usize, x: &[PureStrategy]) -> f64 {
        let mut v = self.own_payoff(p, &x[p]);
        for (k, y) in x.iter().enumerate() {
            if k != p {
                v += self.pair_payoff(p, &x[p], k, y);
            }
        }
        v
    }
}

fn check_dimensions(game: &dyn BilateralGame, profile: &Profile) -> Result<()> {
    if profile.num_players() != game.num_players() {
        return Err(Error::InvalidInput(format!("profile has {} players, game has {}", profile.num_players(), game.num_players())));
    }
    for (p, s) in profile.players().iter().enumerate() {
        for (x, _) in s.atoms() {
            if x.len() != game.dimension(p) {
                return Err(Error::InvalidInput(format!("player {p} strategy has dimension {}, expected {}", x.len(), game.dimension(p))));
            }
        }
    }
    Ok(())
}

/// Expected payoff of player `p` under independent mixing.
///
/// Uses the bilateral split, so the cost is linear in the number of opponents.
pub fn expected_payoff(game: &dyn BilateralGame, profile: &Profile, p: usize) -> Result<f64> {
    check_dimensions(game, profile)?;
    Ok(expected_payoff_unchecked(game, profile, p))
}

pub(crate) fn expected_payoff_unchecked(game: &dyn BilateralGame, profile: &Profile, p: usize) -> f64 {
    let mine = profile.player(p);
    let mut total = 0.0;
    for (x, px) in mine.support() {
        let mut v = game.own_payoff(p, x);
        for (k, other) in profile.players().iter().enumerate() {
            if k == p {
                continue;
            }
            for (y, py) in other.support() {
                v += py * game.pair_payoff(p, x, k, y);
            }
        }
        total += px * v;
    }
    total
}

/// Expected payoff of player `p` under a joint distribution.
pub fn joint_payoff(game: &dyn BilateralGame, tau: &JointDistribution, p: usize) -> f64 {
    tau.atoms().iter().map(|(x, prob)| prob * game.payoff(p, x)).sum()
}
