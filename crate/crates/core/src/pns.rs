//! Equilibria of sampled games by support enumeration.
//!
//! Support-size vectors are tried in a given order. For each one, supports are
//! fixed player by player and strategies that are conditionally dominated
//! against the remaining candidates are removed before a linear feasibility
//! problem decides whether an equilibrium with those supports exists.

use std::cmp::Ordering;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::lp::{solve_lp, LpProblem, Relation};
use crate::model::Profile;
use crate::sampled::{SampledGame, SampledProfile};

/// Gap a dominator must exceed on every opponent profile.
pub const DOMINANCE_TOL: f64 = 1e-9;
/// Smallest probability accepted for a forced strategy.
pub const FORCED_MIN: f64 = 1e-9;

/// One support per player, as indices into the sampled strategy lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SupportProfile {
    pub sets: Vec<Vec<usize>>,
}

/// Order in which support sizes and strategies are tried.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EnumerationOrder {
    pub sizes: Vec<Vec<usize>>,
    pub strategies: Vec<Vec<usize>>,
}

/// Strategies that must, or must not, appear in the support.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SolveConstraints {
    pub forced: Option<(usize, usize)>,
    pub excluded: Vec<(usize, usize)>,
}

impl SolveConstraints {
    pub fn none() -> Self {
        Self::default()
    }

    fn is_excluded(&self, p: usize, i: usize) -> bool {
        self.excluded.contains(&(p, i))
    }
}

/// Equilibrium notion encoded by the feasibility rows.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum FeasibilityMode {
    /// Support strategies earn the best payoff exactly.
    Exact,
    /// Every support strategy is within the given slack of every strategy.
    WellSupported(f64),
}

/// Priority of the size-ordering keys.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum SizeRule {
    /// Balance and total size first (balance leads for two players, total
    /// size for more), then distance to the previous equilibrium's sizes.
    #[default]
    Guided,
    /// Distance to the previous equilibrium's sizes first. Two players:
    /// balance, distance, distance to the sizes plus one, total. More players:
    /// distance, distance plus one, total, balance. Without history: total
    /// then balance for two players, balance then total otherwise.
    Literal,
}

#[derive(Clone, Debug)]
pub struct SearchOptions {
    pub pruning: bool,
    pub caps: Vec<Option<usize>>,
    pub mode: FeasibilityMode,
    /// Pins each player's equilibrium payoff.
    pub fixed_values: Option<Vec<f64>>,
    pub deadline: Option<Instant>,
}

impl SearchOptions {
    pub fn new(m: usize) -> Self {
        SearchOptions { pruning: true, caps: vec![None; m], mode: FeasibilityMode::Exact, fixed_values: None, deadline: None }
    }
}

/// Whether strategy `x` of player `p` is strictly beaten by some other
/// strategy of `p` against every opponent profile drawn from `others`.
///
/// `others[p]` is ignored. Every strategy of `p` may act as dominator.
pub fn conditionally_dominated(sg: &SampledGame, p: usize, x: usize, others: &[Vec<usize>]) -> bool {
    let m = sg.num_players();
    (0..sg.num_strategies(p)).any(|d| {
        if d == x {
            return false;
        }
        let mut gap = sg.own(p, d) - sg.own(p, x);
        for (k, set) in others.iter().enumerate().take(m) {
            if k == p {
                continue;
            }
            let (rd, rx) = (sg.pair_row(p, d, k), sg.pair_row(p, x, k));
            let worst = set.iter().map(|&r| rd[r] - rx[r]).fold(f64::INFINITY, f64::min);
            gap += worst;
        }
        gap > DOMINANCE_TOL
    })
}

/// Solves the feasibility problem for fixed supports.
///
/// Returns the equilibrium if one exists with exactly these supports (up to
/// zero weights). With a forced strategy its weight is maximized and must be
/// positive.
pub fn solve_feasibility(
    sg: &SampledGame,
    support: &SupportProfile,
    mode: FeasibilityMode,
    fixed_values: Option<&[f64]>,
    forced: Option<(usize, usize)>,
) -> Result<Option<SampledProfile>> {
    let m = sg.num_players();
    if support.sets.len() != m || support.sets.iter().any(Vec::is_empty) {
        return Err(Error::InvalidInput("support needs one nonempty set per player".into()));
    }
    let mut offset = Vec::with_capacity(m);
    let mut nvars = 0;
    for set in &support.sets {
        offset.push(nvars);
        nvars += set.len();
    }
    let use_v = mode == FeasibilityMode::Exact && fixed_values.is_none();
    let v_start = nvars;
    if use_v {
        nvars += m;
    }
    let mut lp = LpProblem::new(nvars);
    if use_v {
        for p in 0..m {
            lp.set_free(v_start + p);
        }
    }

    // Coefficients of Σ_k Σ_y b(x, y) σ^k(y) for strategy i of player p.
    let interaction = |p: usize, i: usize| -> Vec<f64> {
        let mut row = vec![0.0; nvars];
        for k in 0..m {
            if k == p {
                continue;
            }
            let pr = sg.pair_row(p, i, k);
            for (t, &j) in support.sets[k].iter().enumerate() {
                row[offset[k] + t] = pr[j];
            }
        }
        row
    };

    for p in 0..m {
        match mode {
            FeasibilityMode::Exact => {
                for i in 0..sg.num_strategies(p) {
                    let mut row: Vec<f64> = interaction(p, i).into_iter().map(|c| -c).collect();
                    let mut rhs = sg.own(p, i);
                    match fixed_values {
                        Some(v) => rhs -= v[p],
                        None => row[v_start + p] = 1.0,
                    }
                    let rel = if support.sets[p].contains(&i) { Relation::Eq } else { Relation::Ge };
                    lp.add(row, rel, rhs);
                }
            }
            FeasibilityMode::WellSupported(eps) => {
                for &s in &support.sets[p] {
                    let rs = interaction(p, s);
                    for i in 0..sg.num_strategies(p) {
                        if i == s {
                            continue;
                        }
                        let ri = interaction(p, i);
                        let row: Vec<f64> = rs.iter().zip(&ri).map(|(a, b)| a - b).collect();
                        lp.add(row, Relation::Ge, sg.own(p, i) - sg.own(p, s) - eps);
                    }
                }
                if let Some(v) = fixed_values {
                    let s = support.sets[p][0];
                    let row: Vec<f64> = interaction(p, s);
                    lp.add(row, Relation::Eq, v[p] - sg.own(p, s));
                }
            }
        }
        let mut simplex = vec![0.0; nvars];
        for t in 0..support.sets[p].len() {
            simplex[offset[p] + t] = 1.0;
        }
        lp.add(simplex, Relation::Eq, 1.0);
    }

    let mut forced_var = None;
    if let Some((fp, fi)) = forced {
        if let Some(t) = support.sets[fp].iter().position(|&i| i == fi) {
            let mut c = vec![0.0; nvars];
            c[offset[fp] + t] = 1.0;
            lp.maximize(c);
            forced_var = Some(offset[fp] + t);
        } else {
            return Ok(None);
        }
    }

    let res = solve_lp(&lp)?;
    if !res.is_solved() {
        return Ok(None);
    }
    if let Some(j) = forced_var {
        if res.x[j] <= FORCED_MIN {
            return Ok(None);
        }
    }
    let mut probs = Vec::with_capacity(m);
    for p in 0..m {
        let mut row = vec![0.0; sg.num_strategies(p)];
        let mut total = 0.0;
        for (t, &i) in support.sets[p].iter().enumerate() {
            let q = res.x[offset[p] + t].max(0.0);
            row[i] = q;
            total += q;
        }
        if total <= 0.0 {
            return Ok(None);
        }
        for q in &mut row {
            *q /= total;
        }
        probs.push(row);
    }
    Ok(Some(SampledProfile { probs }))
}

fn balance(s: &[usize]) -> usize {
    let (lo, hi) = s.iter().fold((usize::MAX, 0), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    hi - lo
}

fn total(s: &[usize]) -> usize {
    s.iter().sum()
}

fn distance(s: &[usize], prev: &[usize], shift: usize) -> usize {
    s.iter().zip(prev).map(|(&a, &b)| a.abs_diff(b + shift)).max().unwrap_or(0)
}

/// Orders every support-size vector within `limits`.
///
/// The last profile of `history` supplies the previous support sizes.
pub fn sort_sizes(limits: &[usize], history: &[Profile], rule: SizeRule) -> Vec<Vec<usize>> {
    let m = limits.len();
    let prev = history.last().map(Profile::support_sizes);
    let mut all: Vec<Vec<usize>> = vec![Vec::new()];
    for &lim in limits {
        let mut next = Vec::with_capacity(all.len() * lim);
        for s in &all {
            for v in 1..=lim {
                let mut t = s.clone();
                t.push(v);
                next.push(t);
            }
        }
        all = next;
    }
    let key = |s: &Vec<usize>| -> Vec<usize> {
        let (b, t) = (balance(s), total(s));
        match (&prev, rule) {
            (Some(pr), SizeRule::Guided) => {
                let (d, d1) = (distance(s, pr, 0), distance(s, pr, 1));
                if m == 2 {
                    vec![b, t, d, d1]
                } else {
                    vec![t, b, d, d1]
                }
            }
            (None, SizeRule::Guided) => {
                if m == 2 {
                    vec![b, t]
                } else {
                    vec![t, b]
                }
            }
            (Some(pr), SizeRule::Literal) => {
                let (d, d1) = (distance(s, pr, 0), distance(s, pr, 1));
                if m == 2 {
                    vec![b, d, d1, t]
                } else {
                    vec![d, d1, t, b]
                }
            }
            (None, SizeRule::Literal) => {
                if m == 2 {
                    vec![t, b]
                } else {
                    vec![b, t]
                }
            }
        }
    };
    all.sort_by(|a, b| key(a).cmp(&key(b)).then_with(|| a.cmp(b)));
    all
}

/// Per player, strategies by decreasing weight in the last equilibrium of
/// `history`, ties kept in insertion order.
pub fn sort_strategies(sg: &SampledGame, history: &[Profile]) -> Vec<Vec<usize>> {
    (0..sg.num_players())
        .map(|p| {
            let mut idx: Vec<usize> = (0..sg.num_strategies(p)).collect();
            if let Some(prev) = history.last() {
                let w: Vec<f64> = sg.strategies(p).iter().map(|s| prev.player(p).probability_of(s)).collect();
                idx.sort_by(|&a, &b| w[b].partial_cmp(&w[a]).unwrap_or(Ordering::Equal));
            }
            idx
        })
        .collect()
}

/// Default enumeration order for a sampled game given past equilibria.
pub fn default_order(sg: &SampledGame, history: &[Profile], caps: &[Option<usize>], rule: SizeRule) -> EnumerationOrder {
    let limits: Vec<usize> = (0..sg.num_players())
        .map(|p| {
            let n = sg.num_strategies(p);
            caps.get(p).copied().flatten().map_or(n, |c| c.min(n))
        })
        .collect();
    EnumerationOrder { sizes: sort_sizes(&limits, history, rule), strategies: sort_strategies(sg, history) }
}

struct Search<'a> {
    sg: &'a SampledGame,
    cons: &'a SolveConstraints,
    opts: &'a SearchOptions,
    sizes: Vec<usize>,
}

impl Search<'_> {
    /// Removes dominated candidates to a fixed point. Players below `fixed`
    /// have their supports pinned; a dominated pinned strategy fails the branch.
    fn prune(&self, dom: &mut [Vec<usize>], fixed: usize) -> bool {
        let m = dom.len();
        loop {
            let mut changed = false;
            for j in 0..m {
                let mut t = 0;
                while t < dom[j].len() {
                    let a = dom[j][t];
                    if conditionally_dominated(self.sg, j, a, dom) {
                        if j < fixed || self.cons.forced == Some((j, a)) {
                            return false;
                        }
                        dom[j].remove(t);
                        changed = true;
                        if dom[j].len() < self.sizes[j] {
                            return false;
                        }
                    } else {
                        t += 1;
                    }
                }
            }
            if !changed {
                return true;
            }
        }
    }

    fn recurse(&self, i: usize, dom: &[Vec<usize>]) -> Result<Option<SampledProfile>> {
        let m = dom.len();
        if i == m {
            if let Some(d) = self.opts.deadline {
                if Instant::now() > d {
                    return Err(Error::TimeLimit);
                }
            }
            let support = SupportProfile { sets: dom.to_vec() };
            return solve_feasibility(self.sg, &support, self.opts.mode, self.opts.fixed_values.as_deref(), self.cons.forced);
        }
        let size = self.sizes[i];
        let cand = &dom[i];
        if cand.len() < size {
            return Ok(None);
        }
        let must = match self.cons.forced {
            Some((fp, fi)) if fp == i => {
                if !cand.contains(&fi) {
                    return Ok(None);
                }
                Some(fi)
            }
            _ => None,
        };
        let mut comb: Vec<usize> = (0..size).collect();
        loop {
            let set: Vec<usize> = comb.iter().map(|&c| cand[c]).collect();
            if must.is_none_or(|f| set.contains(&f)) {
                let mut next = dom.to_vec();
                next[i] = set;
                let alive = !self.opts.pruning || self.prune(&mut next, i + 1);
                if alive {
                    if let Some(found) = self.recurse(i + 1, &next)? {
                        return Ok(Some(found));
                    }
                }
            }
            if !advance(&mut comb, cand.len()) {
                return Ok(None);
            }
        }
    }
}

/// Next combination in lexicographic order; false when exhausted.
fn advance(comb: &mut [usize], n: usize) -> bool {
    let k = comb.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if comb[i] < n - k + i {
            comb[i] += 1;
            for j in i + 1..k {
                comb[j] = comb[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Searches the sampled game for an equilibrium following `order`.
///
/// Returns `None` when no support satisfying the constraints admits an
/// equilibrium.
pub fn find_ne(
    sg: &SampledGame,
    order: &EnumerationOrder,
    cons: &SolveConstraints,
    opts: &SearchOptions,
) -> Result<Option<SampledProfile>> {
    let m = sg.num_players();
    if let Some((fp, fi)) = cons.forced {
        if cons.is_excluded(fp, fi) {
            return Err(Error::InvalidInput("forced strategy is also excluded".into()));
        }
    }
    let base: Vec<Vec<usize>> =
        (0..m).map(|p| order.strategies[p].iter().copied().filter(|&i| !cons.is_excluded(p, i)).collect()).collect();
    for sizes in &order.sizes {
        if sizes.len() != m {
            return Err(Error::InvalidInput("size vector of wrong length".into()));
        }
        let capped = sizes
            .iter()
            .enumerate()
            .any(|(p, &s)| s == 0 || s > base[p].len() || opts.caps.get(p).copied().flatten().is_some_and(|c| s > c));
        if capped {
            continue;
        }
        let search = Search { sg, cons, opts, sizes: sizes.clone() };
        let mut dom = base.clone();
        if opts.pruning && !search.prune(&mut dom, 0) {
            continue;
        }
        if let Some(found) = search.recurse(0, &dom)? {
            return Ok(Some(found));
        }
    }
    Ok(None)
}

/// Objective of the correlated-equilibrium program.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CeObjective {
    FeasibleOnly,
    MaxWelfare,
}

/// A distribution over index profiles of a sampled game, listed in
/// lexicographic order of the index tuples.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledJoint {
    pub sizes: Vec<usize>,
    pub probs: Vec<f64>,
}

impl SampledJoint {
    pub fn tuple(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.sizes.len()];
        for p in (0..self.sizes.len()).rev() {
            idx[p] = flat % self.sizes[p];
            flat /= self.sizes[p];
        }
        idx
    }

    /// Atoms with positive mass.
    pub fn atoms(&self) -> Vec<(Vec<usize>, f64)> {
        self.probs.iter().enumerate().filter(|(_, &q)| q > 0.0).map(|(f, &q)| (self.tuple(f), q)).collect()
    }

    pub fn marginal(&self, p: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.sizes[p]];
        for (idx, q) in self.atoms() {
            out[idx[p]] += q;
        }
        out
    }

    pub fn expected_payoff(&self, sg: &SampledGame, p: usize) -> f64 {
        self.atoms().iter().map(|(idx, q)| q * sg.payoff(p, idx)).sum()
    }

    pub fn to_distribution(&self, sg: &SampledGame) -> crate::model::JointDistribution {
        let atoms = self
            .atoms()
            .into_iter()
            .map(|(idx, q)| {
                let x = idx.iter().enumerate().map(|(p, &i)| sg.strategy(p, i).clone()).collect();
                (x, q)
            })
            .collect();
        crate::model::JointDistribution::new(atoms).expect("normalized sampled distribution")
    }
}

/// Largest cross product the correlated-equilibrium program accepts.
pub const CE_MAX_ATOMS: usize = 20_000;

/// Solves the correlated-equilibrium program of a sampled game.
pub fn solve_ce(sg: &SampledGame, objective: CeObjective) -> Result<SampledJoint> {
    let m = sg.num_players();
    let sizes = sg.sizes();
    let n: usize = sizes.iter().product();
    if n > CE_MAX_ATOMS {
        return Err(Error::Unsupported(format!("{n} joint profiles exceed the limit of {CE_MAX_ATOMS}")));
    }
    let mut joint = SampledJoint { sizes: sizes.clone(), probs: vec![0.0; n] };
    let tuples: Vec<Vec<usize>> = (0..n).map(|f| joint.tuple(f)).collect();
    let mut lp = LpProblem::new(n);
    for p in 0..m {
        for rec in 0..sizes[p] {
            for dev in 0..sizes[p] {
                if dev == rec {
                    continue;
                }
                let mut row = vec![0.0; n];
                let mut any = false;
                for (f, idx) in tuples.iter().enumerate() {
                    if idx[p] != rec {
                        continue;
                    }
                    let mut d = sg.own(p, rec) - sg.own(p, dev);
                    for (k, &j) in idx.iter().enumerate() {
                        if k != p {
                            d += sg.pair(p, rec, k, j) - sg.pair(p, dev, k, j);
                        }
                    }
                    row[f] = d;
                    any |= d != 0.0;
                }
                if any {
                    lp.add(row, Relation::Ge, 0.0);
                }
            }
        }
    }
    lp.add(vec![1.0; n], Relation::Eq, 1.0);
    if objective == CeObjective::MaxWelfare {
        let c = tuples.iter().map(|idx| (0..m).map(|p| sg.payoff(p, idx)).sum()).collect();
        lp.maximize(c);
    }
    let res = solve_lp(&lp)?;
    if !res.is_solved() {
        return Err(Error::Internal(format!("correlated-equilibrium program reported {:?}", res.status)));
    }
    let mut total = 0.0;
    for (f, v) in res.x.iter().enumerate() {
        let q = if *v > 1e-12 { *v } else { 0.0 };
        joint.probs[f] = q;
        total += q;
    }
    for q in &mut joint.probs {
        *q /= total;
    }
    Ok(joint)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_in_order() {
        let mut c = vec![0, 1];
        let mut seen = vec![c.clone()];
        while advance(&mut c, 4) {
            seen.push(c.clone());
        }
        assert_eq!(seen, vec![vec![0, 1], vec![0, 2], vec![0, 3], vec![1, 2], vec![1, 3], vec![2, 3]]);
    }

    #[test]
    fn literal_rule_without_history() {
        let order = sort_sizes(&[2, 2], &[], SizeRule::Literal);
        assert_eq!(order, vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
        assert_eq!(sort_sizes(&[1, 1], &[], SizeRule::Guided), vec![vec![1, 1]]);
    }

    #[test]
    fn guided_rule_two_players() {
        let order = sort_sizes(&[2, 2], &[], SizeRule::Guided);
        assert_eq!(order, vec![vec![1, 1], vec![2, 2], vec![1, 2], vec![2, 1]]);
    }
}
