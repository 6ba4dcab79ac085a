//! Finite restrictions of a game stored in polymatrix form.

use crate::error::{Error, Result};
use crate::model::{BilateralGame, MixedStrategy, Profile, PureStrategy};

/// A strategy that entered the sampled game through a profitable deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct DeviationRecord {
    pub player: usize,
    pub strategy: PureStrategy,
    pub iteration: usize,
}

/// Strategy subsets with cached own and pairwise payoff terms.
///
/// `pair[p][k][i][j]` holds the interaction term of player `p` playing its
/// `i`-th strategy against player `k` playing its `j`-th strategy.
#[derive(Clone, Debug)]
pub struct SampledGame {
    strategies: Vec<Vec<PureStrategy>>,
    own: Vec<Vec<f64>>,
    pair: Vec<Vec<Vec<Vec<f64>>>>,
    log: Vec<DeviationRecord>,
}

/// A mixed profile over sampled-game indices: `probs[p][i]` is the weight of
/// the `i`-th strategy of player `p`.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledProfile {
    pub probs: Vec<Vec<f64>>,
}

impl SampledProfile {
    pub fn support(&self, p: usize) -> Vec<usize> {
        self.probs[p].iter().enumerate().filter(|(_, &q)| q > 0.0).map(|(i, _)| i).collect()
    }
}

impl SampledGame {
    /// Builds the sampled game from one nonempty strategy list per player.
    pub fn assemble(game: &dyn BilateralGame, initial: Vec<Vec<PureStrategy>>) -> Result<Self> {
        let m = game.num_players();
        if initial.len() != m {
            return Err(Error::InvalidInput(format!("expected {m} strategy lists, got {}", initial.len())));
        }
        let mut sg = SampledGame {
            strategies: vec![Vec::new(); m],
            own: vec![Vec::new(); m],
            pair: (0..m).map(|_| vec![Vec::new(); m]).collect(),
            log: Vec::new(),
        };
        for (p, list) in initial.iter().enumerate() {
            if list.is_empty() {
                return Err(Error::InvalidInput(format!("player {p} has an empty strategy list")));
            }
            for x in list {
                sg.check_strategy(game, p, x)?;
                if sg.strategies[p].contains(x) {
                    return Err(Error::DuplicateStrategy { player: p });
                }
                sg.strategies[p].push(x.clone());
            }
        }
        for p in 0..m {
            sg.own[p] = sg.strategies[p].iter().map(|x| game.own_payoff(p, x)).collect();
            for k in 0..m {
                if k == p {
                    continue;
                }
                sg.pair[p][k] =
                    sg.strategies[p].iter().map(|x| sg.strategies[k].iter().map(|y| game.pair_payoff(p, x, k, y)).collect()).collect();
            }
        }
        Ok(sg)
    }

    fn check_strategy(&self, game: &dyn BilateralGame, p: usize, x: &PureStrategy) -> Result<()> {
        if x.len() != game.dimension(p) {
            return Err(Error::InvalidInput(format!("player {p} strategy has dimension {}, expected {}", x.len(), game.dimension(p))));
        }
        if !game.is_feasible(p, x) {
            return Err(Error::InvalidInput(format!("strategy {:?} is infeasible for player {p}", x.values())));
        }
        Ok(())
    }

    /// Appends a strategy for player `p` and records it as a deviation.
    pub fn add_strategy(&mut self, game: &dyn BilateralGame, p: usize, x: PureStrategy, iteration: usize) -> Result<usize> {
        self.check_strategy(game, p, &x)?;
        if self.strategies[p].contains(&x) {
            return Err(Error::DuplicateStrategy { player: p });
        }
        let m = self.num_players();
        self.own[p].push(game.own_payoff(p, &x));
        for k in 0..m {
            if k == p {
                continue;
            }
            let row = self.strategies[k].iter().map(|y| game.pair_payoff(p, &x, k, y)).collect();
            self.pair[p][k].push(row);
            for (j, y) in self.strategies[k].iter().enumerate() {
                let v = game.pair_payoff(k, y, p, &x);
                self.pair[k][p][j].push(v);
            }
        }
        self.strategies[p].push(x.clone());
        self.log.push(DeviationRecord { player: p, strategy: x, iteration });
        Ok(self.strategies[p].len() - 1)
    }

    /// Removes strategies together with their cache rows and log entries.
    pub fn remove_strategies(&mut self, removals: &[(usize, PureStrategy)]) -> Result<()> {
        let m = self.num_players();
        let mut drop: Vec<Vec<usize>> = vec![Vec::new(); m];
        for (p, x) in removals {
            if *p >= m {
                return Err(Error::InvalidInput(format!("no player {p}")));
            }
            let i = self.index_of(*p, x).ok_or_else(|| Error::InvalidInput(format!("player {p} strategy {:?} not sampled", x.values())))?;
            if !drop[*p].contains(&i) {
                drop[*p].push(i);
            }
        }
        for p in 0..m {
            if drop[p].len() >= self.strategies[p].len() {
                return Err(Error::InvalidInput(format!("removal would leave player {p} without strategies")));
            }
        }
        for p in 0..m {
            let mut idx = drop[p].clone();
            idx.sort_unstable_by(|a, b| b.cmp(a));
            for &i in &idx {
                self.strategies[p].remove(i);
                self.own[p].remove(i);
                for k in 0..m {
                    if k == p {
                        continue;
                    }
                    self.pair[p][k].remove(i);
                    for row in &mut self.pair[k][p] {
                        row.remove(i);
                    }
                }
            }
        }
        self.log.retain(|r| !removals.iter().any(|(p, x)| r.player == *p && r.strategy == *x));
        Ok(())
    }

    pub fn num_players(&self) -> usize {
        self.strategies.len()
    }

    pub fn num_strategies(&self, p: usize) -> usize {
        self.strategies[p].len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.strategies.iter().map(Vec::len).collect()
    }

    pub fn total_size(&self) -> usize {
        self.strategies.iter().map(Vec::len).sum()
    }

    pub fn strategies(&self, p: usize) -> &[PureStrategy] {
        &self.strategies[p]
    }

    pub fn strategy(&self, p: usize, i: usize) -> &PureStrategy {
        &self.strategies[p][i]
    }

    pub fn index_of(&self, p: usize, x: &PureStrategy) -> Option<usize> {
        self.strategies[p].iter().position(|s| s == x)
    }

    pub fn deviation_log(&self) -> &[DeviationRecord] {
        &self.log
    }

    #[inline]
    pub fn own(&self, p: usize, i: usize) -> f64 {
        self.own[p][i]
    }

    #[inline]
    pub fn pair(&self, p: usize, i: usize, k: usize, j: usize) -> f64 {
        self.pair[p][k][i][j]
    }

    pub fn pair_row(&self, p: usize, i: usize, k: usize) -> &[f64] {
        &self.pair[p][k][i]
    }

    /// Payoff of player `p` at the pure profile given by indices.
    pub fn payoff(&self, p: usize, idx: &[usize]) -> f64 {
        let mut v = self.own[p][idx[p]];
        for (k, &j) in idx.iter().enumerate() {
            if k != p {
                v += self.pair[p][k][idx[p]][j];
            }
        }
        v
    }

    /// Payoff of player `p` playing strategy `i` against the mixed opponents.
    pub fn payoff_against(&self, p: usize, i: usize, sp: &SampledProfile) -> f64 {
        let mut v = self.own[p][i];
        for k in 0..self.num_players() {
            if k == p {
                continue;
            }
            let row = &self.pair[p][k][i];
            for (j, &q) in sp.probs[k].iter().enumerate() {
                if q > 0.0 {
                    v += q * row[j];
                }
            }
        }
        v
    }

    pub fn expected_payoff(&self, p: usize, sp: &SampledProfile) -> f64 {
        sp.probs[p].iter().enumerate().filter(|(_, &q)| q > 0.0).map(|(i, &q)| q * self.payoff_against(p, i, sp)).sum()
    }

    /// Converts index weights into a profile over strategies, dropping zero atoms.
    pub fn to_profile(&self, sp: &SampledProfile) -> Profile {
        let players = sp
            .probs
            .iter()
            .enumerate()
            .map(|(p, probs)| {
                let mut atoms: Vec<(PureStrategy, f64)> =
                    probs.iter().enumerate().filter(|(_, &q)| q > 0.0).map(|(i, &q)| (self.strategies[p][i].clone(), q)).collect();
                let total: f64 = atoms.iter().map(|a| a.1).sum();
                for a in &mut atoms {
                    a.1 /= total;
                }
                MixedStrategy::new(atoms).expect("normalized sampled profile")
            })
            .collect();
        Profile::new(players)
    }

    /// Index weights of a profile whose supports lie in the sampled game.
    pub fn from_profile(&self, profile: &Profile) -> Option<SampledProfile> {
        let mut probs = Vec::with_capacity(self.num_players());
        for p in 0..self.num_players() {
            let mut row = vec![0.0; self.num_strategies(p)];
            for (x, q) in profile.player(p).support() {
                row[self.index_of(p, x)?] += q;
            }
            probs.push(row);
        }
        Some(SampledProfile { probs })
    }

    /// Point mass on the given indices.
    pub fn point(&self, idx: &[usize]) -> SampledProfile {
        let probs = idx
            .iter()
            .enumerate()
            .map(|(p, &i)| {
                let mut row = vec![0.0; self.num_strategies(p)];
                row[i] = 1.0;
                row
            })
            .collect();
        SampledProfile { probs }
    }

    /// True when the cached terms agree with a fresh evaluation.
    pub fn caches_match(&self, game: &dyn BilateralGame, tol: f64) -> bool {
        let m = self.num_players();
        for p in 0..m {
            for (i, x) in self.strategies[p].iter().enumerate() {
                if (self.own[p][i] - game.own_payoff(p, x)).abs() > tol {
                    return false;
                }
                for k in 0..m {
                    if k == p {
                        continue;
                    }
                    for (j, y) in self.strategies[k].iter().enumerate() {
                        if (self.pair[p][k][i][j] - game.pair_payoff(p, x, k, y)).abs() > tol {
                            return false;
                        }
                    }
                }
            }
        }
        true
    }

    /// Cache equality with another sampled game, strategy by strategy.
    pub fn same_as(&self, other: &SampledGame) -> bool {
        self.strategies == other.strategies && self.own == other.own && self.pair == other.pair
    }
}
