//! Competitive uncapacitated lot-sizing game.
//!
//! Firms produce for a shared market with linear inverse demand per period.
//! A decision vector of length `4T` holds setups `y`, production `x`, sales
//! `q` and end-of-period stock `h`, in that order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{BilateralGame, Profile, PureStrategy};

#[derive(Clone, Debug, PartialEq)]
pub struct LotPlayer {
    pub setup: Vec<f64>,
    pub unit: Vec<f64>,
    pub holding: Vec<f64>,
    /// Production capacity; `None` means unbounded.
    pub capacity: Vec<Option<f64>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LotSizingGame {
    pub periods: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub players: Vec<LotPlayer>,
}

impl LotSizingGame {
    pub fn new(periods: usize, a: Vec<f64>, b: Vec<f64>, players: Vec<LotPlayer>) -> Result<Self> {
        if periods == 0 {
            return Err(Error::InvalidInput("at least one period is required".into()));
        }
        if players.is_empty() {
            return Err(Error::InvalidInput("at least one player is required".into()));
        }
        if a.len() != periods || b.len() != periods {
            return Err(Error::InvalidInput(format!("market data needs {periods} periods")));
        }
        if b.iter().any(|v| !(v.is_finite() && *v > 0.0)) || a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("slopes must be positive and intercepts finite".into()));
        }
        for (p, pl) in players.iter().enumerate() {
            if pl.setup.len() != periods || pl.unit.len() != periods || pl.holding.len() != periods || pl.capacity.len() != periods {
                return Err(Error::InvalidInput(format!("player {p}: cost data needs {periods} periods")));
            }
            let finite = pl.setup.iter().chain(&pl.unit).chain(&pl.holding).all(|v| v.is_finite());
            if !finite || pl.capacity.iter().flatten().any(|v| !(v.is_finite() && *v >= 0.0)) {
                return Err(Error::InvalidInput(format!("player {p}: non-finite or negative cost data")));
            }
        }
        Ok(LotSizingGame { periods, a, b, players })
    }

    pub fn num_periods(&self) -> usize {
        self.periods
    }

    fn mask(&self) -> Vec<bool> {
        let t = self.periods;
        (0..4 * t).map(|i| i < t).collect()
    }

    /// Sales of a decision vector.
    pub fn sales<'a>(&self, s: &'a PureStrategy) -> &'a [f64] {
        let t = self.periods;
        &s.values()[2 * t..3 * t]
    }

    /// Builds the plan that sells `q` and produces each period's sales in
    /// that same period.
    pub fn plan(&self, q: &[f64]) -> Result<PureStrategy> {
        let t = self.periods;
        if q.len() != t {
            return Err(Error::InvalidInput(format!("plan needs {t} quantities")));
        }
        let mut v = Vec::with_capacity(4 * t);
        v.extend(q.iter().map(|&qt| if qt > 0.0 { 1.0 } else { 0.0 }));
        v.extend_from_slice(q);
        v.extend_from_slice(q);
        v.extend(std::iter::repeat_n(0.0, t));
        PureStrategy::new(v, self.mask())
    }

    fn check_regime(&self, p: usize) -> Result<()> {
        let pl = &self.players[p];
        if pl.holding.iter().any(|h| *h != 0.0) {
            return Err(Error::Unsupported("inventory costs are not supported by the best-response engine".into()));
        }
        if pl.setup.iter().any(|f| *f < 0.0) {
            return Err(Error::Unsupported("negative setup costs are not supported".into()));
        }
        // A capacity is harmless when it exceeds everything a firm could sell
        // from that period on.
        let t = self.periods;
        for s in 0..t {
            if let Some(cap) = pl.capacity[s] {
                let demand: f64 = (s..t).map(|u| self.a[u].max(0.0) / (2.0 * self.b[u])).sum();
                if cap + 1e-9 < demand {
                    return Err(Error::Unsupported(format!(
                        "capacity {cap} in period {} can bind; only uncapacitated instances are supported",
                        s + 1
                    )));
                }
            }
        }
        Ok(())
    }

    /// Expected total sales of the opponents of `p`, per period.
    pub fn opponent_sales(&self, p: usize, profile: &Profile) -> Vec<f64> {
        let t = self.periods;
        let mut qbar = vec![0.0; t];
        for (k, s) in profile.players().iter().enumerate() {
            if k == p {
                continue;
            }
            for (x, prob) in s.support() {
                for (u, q) in qbar.iter_mut().enumerate() {
                    *q += prob * x.values()[2 * t + u];
                }
            }
        }
        qbar
    }

    /// Optimal sale in period `u` at marginal cost `c` and its profit.
    fn sale(&self, u: usize, qbar: f64, c: f64) -> (f64, f64) {
        let margin = self.a[u] - self.b[u] * qbar - c;
        if margin <= 0.0 {
            (0.0, 0.0)
        } else {
            let q = margin / (2.0 * self.b[u]);
            (q, margin * margin / (4.0 * self.b[u]))
        }
    }

    /// Profit-maximizing plan against fixed opponent sales.
    ///
    /// Setups are chosen by a dynamic program over the period of the next
    /// setup; every period is served by its latest setup.
    pub fn optimize(&self, p: usize, qbar: &[f64]) -> Result<PureStrategy> {
        self.check_regime(p)?;
        let t = self.periods;
        let pl = &self.players[p];
        // best[s]: value of periods s.. given a setup at s; next[s]: following setup.
        let mut best = vec![0.0; t + 1];
        let mut next = vec![t; t + 1];
        for s in (0..t).rev() {
            let mut run = 0.0;
            let mut top = f64::NEG_INFINITY;
            let mut arg = t;
            for e in s + 1..=t {
                run += self.sale(e - 1, qbar[e - 1], pl.unit[s]).1;
                let tail = if e < t { best[e] } else { 0.0 };
                let v = run + tail;
                if v > top + 1e-12 {
                    top = v;
                    arg = e;
                }
            }
            best[s] = top - pl.setup[s];
            next[s] = arg;
        }
        let mut first = None;
        let mut top = 0.0;
        for s in 0..t {
            if best[s] > top + 1e-12 {
                top = best[s];
                first = Some(s);
            }
        }
        let mut y = vec![0.0; t];
        let mut x = vec![0.0; t];
        let mut q = vec![0.0; t];
        let mut s = match first {
            Some(s) => s,
            None => t,
        };
        while s < t {
            let e = next[s];
            y[s] = 1.0;
            for u in s..e {
                q[u] = self.sale(u, qbar[u], pl.unit[s]).0;
                x[s] += q[u];
            }
            s = e;
        }
        let mut h = vec![0.0; t];
        let mut stock = 0.0;
        for u in 0..t {
            stock += x[u] - q[u];
            h[u] = if stock.abs() < 1e-12 { 0.0 } else { stock };
        }
        let mut v = y;
        v.extend(x);
        v.extend(q);
        v.extend(h);
        PureStrategy::new(v, self.mask())
    }

    /// Exact potential of the game at a pure profile.
    pub fn potential(&self, x: &[PureStrategy]) -> f64 {
        let t = self.periods;
        let mut phi = 0.0;
        for u in 0..t {
            let qs: Vec<f64> = x.iter().map(|s| s.values()[2 * t + u]).collect();
            let sum: f64 = qs.iter().sum();
            let sq: f64 = qs.iter().map(|q| q * q).sum();
            let cross = (sum * sum - sq) / 2.0;
            phi += self.a[u] * sum - self.b[u] * sq - self.b[u] * cross;
        }
        for (p, s) in x.iter().enumerate() {
            phi -= self.costs(p, s);
        }
        phi
    }

    fn costs(&self, p: usize, s: &PureStrategy) -> f64 {
        let t = self.periods;
        let pl = &self.players[p];
        let v = s.values();
        (0..t).map(|u| pl.setup[u] * v[u] + pl.unit[u] * v[t + u] + pl.holding[u] * v[3 * t + u]).sum()
    }

    /// Round-robin best responses until no firm gains more than `tol`.
    ///
    /// Returns the pure profile and the number of improving moves.
    pub fn potential_ascent(&self, start: Vec<PureStrategy>, tol: f64) -> Result<(Vec<PureStrategy>, usize)> {
        let m = self.players.len();
        if start.len() != m {
            return Err(Error::InvalidInput(format!("start profile needs {m} strategies")));
        }
        let mut x = start;
        let mut moves = 0usize;
        loop {
            let mut improved = false;
            for p in 0..m {
                let profile = Profile::pure(x.clone());
                let qbar = self.opponent_sales(p, &profile);
                let br = self.optimize(p, &qbar)?;
                let mut trial = x.clone();
                trial[p] = br.clone();
                if self.payoff(p, &trial) > self.payoff(p, &x) + tol {
                    x = trial;
                    moves += 1;
                    improved = true;
                }
            }
            if !improved {
                return Ok((x, moves));
            }
        }
    }
}

impl BilateralGame for LotSizingGame {
    fn num_players(&self) -> usize {
        self.players.len()
    }

    fn dimension(&self, _p: usize) -> usize {
        4 * self.periods
    }

    fn own_payoff(&self, p: usize, s: &PureStrategy) -> f64 {
        let t = self.periods;
        let v = s.values();
        let revenue: f64 = (0..t)
            .map(|u| {
                let q = v[2 * t + u];
                (self.a[u] - self.b[u] * q) * q
            })
            .sum();
        revenue - self.costs(p, s)
    }

    fn pair_payoff(&self, _p: usize, s: &PureStrategy, _k: usize, r: &PureStrategy) -> f64 {
        let t = self.periods;
        let (v, w) = (s.values(), r.values());
        -(0..t).map(|u| self.b[u] * v[2 * t + u] * w[2 * t + u]).sum::<f64>()
    }

    fn is_feasible(&self, p: usize, s: &PureStrategy) -> bool {
        let t = self.periods;
        if s.len() != 4 * t {
            return false;
        }
        let v = s.values();
        let pl = &self.players[p];
        let mut stock = 0.0;
        for u in 0..t {
            let (y, x, q, h) = (v[u], v[t + u], v[2 * t + u], v[3 * t + u]);
            if !(y == 0.0 || y == 1.0) || x < -1e-9 || q < -1e-9 || h < -1e-9 {
                return false;
            }
            if y == 0.0 && x > 1e-9 {
                return false;
            }
            if let Some(cap) = pl.capacity[u] {
                if x > cap * y + 1e-9 {
                    return false;
                }
            }
            if (stock + x - q - h).abs() > 1e-6 * (1.0 + x.abs() + q.abs()) {
                return false;
            }
            stock = h;
        }
        stock.abs() <= 1e-6
    }

    fn best_response(&self, p: usize, profile: &Profile) -> Result<PureStrategy> {
        let qbar = self.opponent_sales(p, profile);
        self.optimize(p, &qbar)
    }

    fn zero_strategy(&self, _p: usize) -> PureStrategy {
        PureStrategy::new(vec![0.0; 4 * self.periods], self.mask()).expect("zero plan")
    }
}

/// Random lot-sizing game.
///
/// ChaCha8 seeded with `seed` draws, in order: `a_t` in [20,30] and `b_t` in
/// [1,3] for every period, then for each player `F_t` in [10,20] and `C_t` in
/// [5,10] for every period. All draws are uniform integers; holding costs are
/// zero and capacities unbounded.
pub fn generate(m: usize, periods: usize, seed: u64) -> LotSizingGame {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = (0..periods).map(|_| f64::from(rng.gen_range(20i32..=30))).collect();
    let b = (0..periods).map(|_| f64::from(rng.gen_range(1i32..=3))).collect();
    let players = (0..m)
        .map(|_| {
            let setup = (0..periods).map(|_| f64::from(rng.gen_range(10i32..=20))).collect();
            let unit = (0..periods).map(|_| f64::from(rng.gen_range(5i32..=10))).collect();
            LotPlayer { setup, unit, holding: vec![0.0; periods], capacity: vec![None; periods] }
        })
        .collect();
    LotSizingGame { periods, a, b, players }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example() -> LotSizingGame {
        let pl = LotPlayer { setup: vec![15.0], unit: vec![0.0], holding: vec![0.0], capacity: vec![Some(15.0)] };
        LotSizingGame::new(1, vec![15.0], vec![1.0], vec![pl.clone(), pl]).unwrap()
    }

    #[test]
    fn monopoly_reply() {
        let g = example();
        let x = g.optimize(0, &[0.0]).unwrap();
        assert!((g.sales(&x)[0] - 7.5).abs() < 1e-12);
        assert!((g.own_payoff(0, &x) - 41.25).abs() < 1e-12);
    }

    #[test]
    fn stays_out_against_monopolist() {
        let g = example();
        let x = g.optimize(1, &[7.5]).unwrap();
        assert_eq!(g.sales(&x)[0], 0.0);
        let inside = g.plan(&[3.75]).unwrap();
        let out = g.plan(&[7.5]).unwrap();
        assert!((g.payoff(1, &[out, inside]) + 0.9375).abs() < 1e-12);
    }

    #[test]
    fn binding_capacity_is_unsupported() {
        let mut g = example();
        g.players[0].capacity[0] = Some(3.0);
        assert!(matches!(g.optimize(0, &[0.0]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn generator_ranges() {
        let g = generate(3, 50, 1);
        assert!(g.a.iter().all(|v| (20.0..=30.0).contains(v)));
        assert!(g.b.iter().all(|v| (1.0..=3.0).contains(v)));
        for pl in &g.players {
            assert!(pl.setup.iter().all(|v| (10.0..=20.0).contains(v)));
            assert!(pl.unit.iter().all(|v| (5.0..=10.0).contains(v)));
        }
    }
}
