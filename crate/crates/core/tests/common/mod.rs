#![allow(dead_code)]

use ipg_core::games::keg::KegGraph;
use ipg_core::games::knapsack::{KnapsackPlayer, RangeRow};
use ipg_core::games::{KegGame, KnapsackGame, LotPlayer, LotSizingGame};
use ipg_core::lp::{LpProblem, Relation};
use ipg_core::model::expected_payoff;
use ipg_core::oracle::enumerate_strategies;
use ipg_core::{BilateralGame, MixedStrategy, Profile, PureStrategy};
use rand::Rng;

pub fn bits(b: &[u8]) -> PureStrategy {
    PureStrategy::binary(b)
}

fn player(v: &[f64], w: &[i64], budget: f64, c: Vec<Vec<f64>>) -> KnapsackPlayer {
    KnapsackPlayer { v: v.to_vec(), w: w.to_vec(), budget, c, rows: Vec::new() }
}

/// Two-player knapsack game whose depth-first run backtracks once.
pub fn backtracking_game() -> KnapsackGame {
    let a = player(&[15.0, 8.0, -3.0, 43.0, -15.0], &[70, -79, -8, -62, -96], -140.0, vec![vec![], vec![39.0, -90.0, 11.0, -84.0, -43.0]]);
    let b = player(&[24.0, 13.0, 44.0, -1.0, -45.0], &[69, 25, -39, -74, 70], 40.8, vec![vec![-73.0, -58.0, -78.0, -49.0, 72.0], vec![]]);
    KnapsackGame::new(5, vec![a, b]).unwrap()
}

/// Each player has the single feasible strategy (1,0).
pub fn single_strategy_game() -> KnapsackGame {
    let mk = || {
        let mut p = player(&[0.0, 0.0], &[1, 3], 2.0, vec![vec![], vec![]]);
        p.rows.push(RangeRow { w: vec![1, 3], lo: Some(1.0), hi: Some(2.0) });
        p
    };
    let (mut a, mut b) = (mk(), mk());
    a.c[1] = vec![5.0, 23.0];
    b.c[0] = vec![5.0, 23.0];
    KnapsackGame::new(2, vec![a, b]).unwrap()
}

/// Game with pure equilibria ((0,0),(0,0)) and ((0,1),(0,1)).
pub fn two_equilibria_game() -> KnapsackGame {
    let a = player(&[0.0, 0.0], &[2, 2], 3.0, vec![vec![], vec![12.0, 5.0]]);
    let b = player(&[100.0, 0.0], &[2, 1], 1.0, vec![vec![12.0, 5.0], vec![]]);
    KnapsackGame::new(2, vec![a, b]).unwrap()
}

/// One-period duopoly on a market with intercept 15 and slope 1.
pub fn lot_example() -> LotSizingGame {
    let p = || LotPlayer { setup: vec![15.0], unit: vec![0.0], holding: vec![0.0], capacity: vec![Some(15.0)] };
    LotSizingGame::new(1, vec![15.0], vec![1.0], vec![p(), p()]).unwrap()
}

/// Lot-sizing strategy with production `q` in a one-period game.
pub fn lot_plan(g: &LotSizingGame, q: f64) -> PureStrategy {
    g.plan(&[q]).unwrap()
}

/// Thirteen-vertex graph with national 2-cycles and international cycles.
pub fn thirteen_vertex_graph(maximal: bool) -> KegGame {
    let in_b = [4u64, 7, 10, 13];
    let vertices: Vec<(u64, usize)> = (1..=13).map(|v| (v, usize::from(in_b.contains(&v)))).collect();
    let arcs = vec![
        (1, 2),
        (2, 1),
        (2, 3),
        (3, 2),
        (3, 4),
        (4, 3),
        (5, 6),
        (6, 5),
        (7, 5),
        (6, 7),
        (8, 9),
        (9, 8),
        (10, 8),
        (9, 10),
        (11, 12),
        (12, 11),
        (13, 11),
        (12, 13),
    ];
    KegGame::new(KegGraph::new(vertices, arcs, 3).unwrap(), maximal)
}

/// Largest objective over the vertices of a bounded LP, or `None` when no
/// vertex is feasible. Every combination of active constraints is solved.
pub fn vertex_enumeration(lp: &LpProblem) -> Option<f64> {
    let n = lp.num_vars();
    let c = lp.objective.clone().unwrap_or_else(|| vec![0.0; n]);
    let mut eqs = Vec::new();
    let mut planes = Vec::new();
    for row in &lp.constraints {
        match row.relation {
            Relation::Eq => eqs.push((row.coeffs.clone(), row.rhs)),
            _ => planes.push((row.coeffs.clone(), row.rhs)),
        }
    }
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        planes.push((e.clone(), lp.lower[j]));
        planes.push((e, lp.upper[j]));
    }
    if eqs.len() > n {
        return None;
    }
    let k = n - eqs.len();
    let mut best: Option<f64> = None;
    let mut pick: Vec<usize> = (0..k).collect();
    loop {
        let mut rows: Vec<(Vec<f64>, f64)> = eqs.clone();
        rows.extend(pick.iter().map(|&i| planes[i].clone()));
        if let Some(x) = solve_square(rows) {
            if feasible(lp, &x) {
                let v: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
                best = Some(best.map_or(v, |b: f64| b.max(v)));
            }
        }
        if !next_combination(&mut pick, planes.len()) {
            return best;
        }
    }
}

fn next_combination(c: &mut [usize], n: usize) -> bool {
    let k = c.len();
    for i in (0..k).rev() {
        if c[i] < n - k + i {
            c[i] += 1;
            for j in i + 1..k {
                c[j] = c[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn solve_square(mut rows: Vec<(Vec<f64>, f64)>) -> Option<Vec<f64>> {
    let n = rows.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&a, &b| rows[a].0[col].abs().total_cmp(&rows[b].0[col].abs()))?;
        if rows[piv].0[col].abs() < 1e-10 {
            return None;
        }
        rows.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = rows[r].0[col] / rows[col].0[col];
                if f != 0.0 {
                    let (src, rhs) = (rows[col].0.clone(), rows[col].1);
                    for (v, s) in rows[r].0.iter_mut().zip(&src) {
                        *v -= f * s;
                    }
                    rows[r].1 -= f * rhs;
                }
            }
        }
    }
    Some((0..n).map(|i| rows[i].1 / rows[i].0[i]).collect())
}

fn feasible(lp: &LpProblem, x: &[f64]) -> bool {
    let tol = 1e-9;
    if x.iter().enumerate().any(|(j, &v)| v < lp.lower[j] - tol || v > lp.upper[j] + tol) {
        return false;
    }
    lp.constraints.iter().all(|row| {
        let lhs: f64 = row.coeffs.iter().zip(x).map(|(a, b)| a * b).sum();
        match row.relation {
            Relation::Le => lhs <= row.rhs + tol,
            Relation::Ge => lhs >= row.rhs - tol,
            Relation::Eq => (lhs - row.rhs).abs() <= tol,
        }
    })
}

/// Random LP on a box with up to `max_vars` variables and `max_rows` rows.
pub fn random_lp(rng: &mut impl Rng, max_vars: usize, max_rows: usize) -> LpProblem {
    let n = rng.gen_range(1..=max_vars);
    let rows = rng.gen_range(1..=max_rows);
    let mut lp = LpProblem::new(n);
    for j in 0..n {
        let lo = f64::from(rng.gen_range(-3..=1));
        let hi = lo + f64::from(rng.gen_range(1..=6));
        lp.set_bounds(j, lo, hi);
    }
    for i in 0..rows {
        let a: Vec<f64> = (0..n).map(|_| f64::from(rng.gen_range(-5..=5))).collect();
        let rel = match rng.gen_range(0..10) {
            0 if i == 0 => Relation::Eq,
            0..=5 => Relation::Le,
            _ => Relation::Ge,
        };
        lp.add(a, rel, f64::from(rng.gen_range(-6..=6)));
    }
    lp.maximize((0..n).map(|_| f64::from(rng.gen_range(-4..=4))).collect());
    lp
}

/// Best value of player `p` against `profile`, by listing every feasible
/// strategy.
pub fn brute_best_value(game: &dyn BilateralGame, p: usize, profile: &Profile) -> f64 {
    enumerate_strategies(game, p, 22)
        .unwrap()
        .into_iter()
        .map(|x| expected_payoff(game, &profile.with(p, MixedStrategy::pure(x)), p).unwrap())
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Random mixed profile over listed feasible strategies.
pub fn random_profile(game: &dyn BilateralGame, rng: &mut impl Rng, max_support: usize) -> Profile {
    let players = (0..game.num_players())
        .map(|p| {
            let all = enumerate_strategies(game, p, 22).unwrap();
            let k = rng.gen_range(1..=max_support.min(all.len()));
            let mut picked: Vec<PureStrategy> = Vec::new();
            while picked.len() < k {
                let x = all[rng.gen_range(0..all.len())].clone();
                if !picked.contains(&x) {
                    picked.push(x);
                }
            }
            let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.1..1.0)).collect();
            let total: f64 = w.iter().sum();
            MixedStrategy::new(picked.into_iter().zip(w.iter().map(|v| v / total)).collect()).unwrap()
        })
        .collect();
    Profile::new(players)
}

/// Best profit of a lot-sizing firm facing opponent sales `qbar`, trying
/// every setup pattern and serving each period from its cheapest open setup.
pub fn lot_brute_value(g: &LotSizingGame, p: usize, qbar: &[f64]) -> f64 {
    let t = g.periods;
    let pl = &g.players[p];
    let mut best = 0.0f64;
    for mask in 0u32..(1u32 << t) {
        let mut value = 0.0;
        for s in 0..t {
            if mask >> s & 1 == 1 {
                value -= pl.setup[s];
            }
        }
        for u in 0..t {
            let mut cost = f64::INFINITY;
            let mut carry = 0.0;
            for s in (0..=u).rev() {
                if s < u {
                    carry += pl.holding[s];
                }
                if mask >> s & 1 == 1 {
                    cost = cost.min(pl.unit[s] + carry);
                }
            }
            if cost.is_finite() {
                let margin = g.a[u] - g.b[u] * qbar[u] - cost;
                if margin > 0.0 {
                    value += margin * margin / (4.0 * g.b[u]);
                }
            }
        }
        best = best.max(value);
    }
    best
}
