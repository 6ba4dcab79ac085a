//! Knapsack game: each player packs its own knapsack, and items picked by
//! several players interact through pairwise coefficients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{BilateralGame, Profile, PureStrategy};

/// Largest item count the exhaustive best response accepts.
pub const EXHAUSTIVE_MAX_ITEMS: usize = 20;
/// Bound on items times total absolute weight, which sizes the DP table.
pub const DP_MAX_CELLS: u128 = 50_000_000;

/// A side constraint `lo ≤ w·x ≤ hi` on one player's items.
#[derive(Clone, Debug, PartialEq)]
pub struct RangeRow {
    pub w: Vec<i64>,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

impl RangeRow {
    fn holds(&self, x: &[f64]) -> bool {
        let s: f64 = self.w.iter().zip(x).map(|(w, v)| *w as f64 * v).sum();
        self.lo.is_none_or(|lo| s >= lo - 1e-9) && self.hi.is_none_or(|hi| s <= hi + 1e-9)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnapsackPlayer {
    pub v: Vec<f64>,
    pub w: Vec<i64>,
    pub budget: f64,
    /// `c[k][i]`: interaction of item `i` with opponent `k`; empty for self.
    pub c: Vec<Vec<f64>>,
    pub rows: Vec<RangeRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KnapsackGame {
    pub n: usize,
    pub players: Vec<KnapsackPlayer>,
}

impl KnapsackGame {
    pub fn new(n: usize, players: Vec<KnapsackPlayer>) -> Result<Self> {
        let m = players.len();
        if m == 0 {
            return Err(Error::InvalidInput("knapsack game needs at least one player".into()));
        }
        for (p, pl) in players.iter().enumerate() {
            if pl.v.len() != n || pl.w.len() != n {
                return Err(Error::InvalidInput(format!("player {p}: v and w need {n} entries")));
            }
            if !pl.budget.is_finite() || pl.v.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!("player {p}: non-finite data")));
            }
            if pl.c.len() != m {
                return Err(Error::InvalidInput(format!("player {p}: interaction table needs {m} entries")));
            }
            for (k, ck) in pl.c.iter().enumerate() {
                let want = if k == p { 0 } else { n };
                if ck.len() != want && !(k == p && ck.len() == n) {
                    return Err(Error::InvalidInput(format!("player {p}: interactions with {k} need {n} entries")));
                }
                if ck.iter().any(|x| !x.is_finite()) {
                    return Err(Error::InvalidInput(format!("player {p}: non-finite interactions")));
                }
            }
            let spread: u128 = pl.w.iter().map(|w| u128::from(w.unsigned_abs())).sum();
            if spread.saturating_mul(n as u128) > DP_MAX_CELLS {
                return Err(Error::Unsupported(format!(
                    "player {p}: weights too large for the capacity table (n·Σ|w| above {DP_MAX_CELLS})"
                )));
            }
            for row in &pl.rows {
                if row.w.len() != n {
                    return Err(Error::InvalidInput(format!("player {p}: side row needs {n} weights")));
                }
            }
        }
        Ok(KnapsackGame { n, players })
    }

    /// Objective coefficient of each item against the expected opponent picks.
    pub fn profits(&self, p: usize, profile: &Profile) -> Vec<f64> {
        let pl = &self.players[p];
        let mut profit = pl.v.clone();
        for (k, s) in profile.players().iter().enumerate() {
            if k == p {
                continue;
            }
            let mean = s.mean();
            for i in 0..self.n {
                profit[i] += pl.c[k][i] * mean[i];
            }
        }
        profit
    }

    fn feasible_bits(&self, p: usize, x: &[f64]) -> bool {
        let pl = &self.players[p];
        let load: f64 = pl.w.iter().zip(x).map(|(w, v)| *w as f64 * v).sum();
        load <= pl.budget + 1e-9 && pl.rows.iter().all(|r| r.holds(x))
    }

    /// Maximizes `profit·x` over the player's feasible 0/1 vectors.
    pub fn optimize(&self, p: usize, profit: &[f64]) -> Result<PureStrategy> {
        if self.players[p].rows.is_empty() {
            self.dp(p, profit)
        } else {
            self.exhaustive(p, profit)
        }
    }

    fn dp(&self, p: usize, profit: &[f64]) -> Result<PureStrategy> {
        let pl = &self.players[p];
        let n = self.n;
        let mut x = vec![0u8; n];
        let shift: i64 = pl.w.iter().filter(|w| **w < 0).map(|w| -w).sum();
        let cap = (pl.budget + shift as f64 + 1e-9).floor();
        if cap < 0.0 {
            return Err(Error::NoStrategy { player: p, reason: "budget below the least attainable weight".into() });
        }
        // Items kept in the DP: (index, weight, gain, complemented).
        let mut items: Vec<(usize, usize, f64, bool)> = Vec::new();
        for i in 0..n {
            let w = pl.w[i];
            if w == 0 {
                x[i] = u8::from(profit[i] > 0.0);
            } else if w > 0 {
                if profit[i] > 0.0 && (w as f64) <= cap {
                    items.push((i, w as usize, profit[i], false));
                }
            } else {
                x[i] = 1;
                if profit[i] < 0.0 && ((-w) as f64) <= cap {
                    items.push((i, (-w) as usize, -profit[i], true));
                }
            }
        }
        let total_w: usize = items.iter().map(|it| it.1).sum();
        let cap = (cap as usize).min(total_w);
        let mut best = vec![0.0f64; cap + 1];
        let mut take = vec![false; items.len() * (cap + 1)];
        for (t, &(_, w, g, _)) in items.iter().enumerate() {
            for c in (w..=cap).rev() {
                let cand = best[c - w] + g;
                if cand > best[c] + 1e-12 {
                    best[c] = cand;
                    take[t * (cap + 1) + c] = true;
                }
            }
        }
        let mut c = cap;
        for t in (0..items.len()).rev() {
            if take[t * (cap + 1) + c] {
                let (i, w, _, flipped) = items[t];
                x[i] = if flipped { 0 } else { 1 };
                c -= w;
            }
        }
        Ok(PureStrategy::binary(&x))
    }

    fn exhaustive(&self, p: usize, profit: &[f64]) -> Result<PureStrategy> {
        let n = self.n;
        if n > EXHAUSTIVE_MAX_ITEMS {
            return Err(Error::Unsupported(format!("side constraints need exhaustive search, limited to {EXHAUSTIVE_MAX_ITEMS} items")));
        }
        let mut best: Option<(f64, u32)> = None;
        let mut bits = vec![0.0; n];
        for mask in 0u32..(1u32 << n) {
            for (i, b) in bits.iter_mut().enumerate() {
                *b = f64::from((mask >> i) & 1);
            }
            if !self.feasible_bits(p, &bits) {
                continue;
            }
            let val: f64 = profit.iter().zip(&bits).map(|(a, b)| a * b).sum();
            if best.is_none_or(|(bv, _)| val > bv + 1e-12) {
                best = Some((val, mask));
            }
        }
        let (_, mask) = best.ok_or_else(|| Error::NoStrategy { player: p, reason: "no 0/1 vector satisfies the constraints".into() })?;
        let bits: Vec<u8> = (0..n).map(|i| ((mask >> i) & 1) as u8).collect();
        Ok(PureStrategy::binary(&bits))
    }
}

impl BilateralGame for KnapsackGame {
    fn num_players(&self) -> usize {
        self.players.len()
    }

    fn dimension(&self, _p: usize) -> usize {
        self.n
    }

    fn own_payoff(&self, p: usize, x: &PureStrategy) -> f64 {
        self.players[p].v.iter().zip(x.values()).map(|(a, b)| a * b).sum()
    }

    fn pair_payoff(&self, p: usize, x: &PureStrategy, k: usize, y: &PureStrategy) -> f64 {
        let c = &self.players[p].c[k];
        x.values().iter().zip(y.values()).zip(c).map(|((a, b), c)| c * a * b).sum()
    }

    fn is_feasible(&self, p: usize, x: &PureStrategy) -> bool {
        x.len() == self.n && x.is_binary() && self.feasible_bits(p, x.values())
    }

    fn best_response(&self, p: usize, profile: &Profile) -> Result<PureStrategy> {
        let profit = self.profits(p, profile);
        self.optimize(p, &profit)
    }

    fn support_cap(&self, _p: usize) -> Option<usize> {
        Some(self.n)
    }

    fn zero_strategy(&self, _p: usize) -> PureStrategy {
        PureStrategy::binary(&vec![0; self.n])
    }

    fn is_binary(&self, _p: usize) -> bool {
        true
    }
}

/// Random knapsack game.
///
/// Draws use ChaCha8 seeded with `seed`. For each player in turn: `n` values,
/// `n` weights, then `n` interaction coefficients per opponent in ascending
/// opponent order, all uniform integers in [-100, 100]. The budget is
/// `floor(ins / 11 · Σ w)`.
pub fn generate(n: usize, m: usize, ins: u32, seed: u64) -> KnapsackGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut players = Vec::with_capacity(m);
    for p in 0..m {
        let v: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(-100i32..=100))).collect();
        let w: Vec<i64> = (0..n).map(|_| i64::from(rng.gen_range(-100i32..=100))).collect();
        let c =
            (0..m).map(|k| if k == p { Vec::new() } else { (0..n).map(|_| f64::from(rng.gen_range(-100i32..=100))).collect() }).collect();
        let sum_w: i64 = w.iter().sum();
        let budget = (i64::from(ins) * sum_w).div_euclid(11) as f64;
        players.push(KnapsackPlayer { v, w, budget, c, rows: Vec::new() });
    }
    KnapsackGame { n, players }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute(game: &KnapsackGame, p: usize, profit: &[f64]) -> Option<f64> {
        let n = game.n;
        let mut best = None::<f64>;
        for mask in 0u32..(1 << n) {
            let bits: Vec<f64> = (0..n).map(|i| f64::from((mask >> i) & 1)).collect();
            if !game.feasible_bits(p, &bits) {
                continue;
            }
            let v: f64 = profit.iter().zip(&bits).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        best
    }

    #[test]
    fn dp_matches_enumeration_small() {
        for seed in 0..40 {
            let g = generate(8, 2, (seed % 10) as u32, seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
            let profit: Vec<f64> = (0..8).map(|_| rng.gen_range(-150.0..150.0)).collect();
            match brute(&g, 0, &profit) {
                None => assert!(g.optimize(0, &profit).is_err()),
                Some(v) => {
                    let x = g.optimize(0, &profit).unwrap();
                    assert!(g.is_feasible(0, &x));
                    let got: f64 = profit.iter().zip(x.values()).map(|(a, b)| a * b).sum();
                    assert!((got - v).abs() < 1e-9, "seed {seed}: {got} vs {v}");
                }
            }
        }
    }

    #[test]
    fn generator_is_deterministic_and_floors_budget() {
        let a = generate(20, 2, 3, 7);
        let b = generate(20, 2, 3, 7);
        assert_eq!(a, b);
        for pl in &a.players {
            let s: i64 = pl.w.iter().sum();
            assert_eq!(pl.budget, (3.0 * s as f64 / 11.0).floor());
        }
    }

    #[test]
    fn negative_profits_give_empty_selection() {
        let g = KnapsackGame::new(
            3,
            vec![KnapsackPlayer { v: vec![-1.0, -2.0, -3.0], w: vec![1, 1, 1], budget: 2.0, c: vec![vec![]], rows: vec![] }],
        )
        .unwrap();
        let x = g.optimize(0, &[-1.0, -2.0, -3.0]).unwrap();
        assert_eq!(x, PureStrategy::binary(&[0, 0, 0]));
    }

    #[test]
    fn infeasible_budget_is_reported() {
        let g =
            KnapsackGame::new(2, vec![KnapsackPlayer { v: vec![1.0, 1.0], w: vec![-1, 2], budget: -2.0, c: vec![vec![]], rows: vec![] }])
                .unwrap();
        assert!(matches!(g.optimize(0, &[1.0, 1.0]), Err(Error::NoStrategy { .. })));
    }
}
