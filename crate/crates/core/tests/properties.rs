mod common;

use common::*;
use ipg_core::games::{keg, knapsack, lotsizing, DuopolyGame, KegGame, KnapsackGame, LotSizingGame};
use ipg_core::lp::{solve_lp, LpStatus, Relation};
use ipg_core::model::expected_payoff;
use ipg_core::oracle::{direct_pns, enumerate_strategies, verify_ne, ENUMERATION_CAP};
use ipg_core::pns::{
    default_order, find_ne, solve_ce, solve_feasibility, sort_sizes, CeObjective, FeasibilityMode, SearchOptions, SizeRule,
    SolveConstraints, SupportProfile,
};
use ipg_core::sgm::{run, Method, SgmConfig, Status};
use ipg_core::{BilateralGame, MixedStrategy, Profile, PureStrategy, SampledGame, SampledProfile};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn knapsack_payoff(g: &KnapsackGame, p: usize, x: &[PureStrategy]) -> f64 {
    let pl = &g.players[p];
    let mut v = 0.0;
    for i in 0..g.n {
        let xi = x[p].values()[i];
        v += pl.v[i] * xi;
        for (k, y) in x.iter().enumerate() {
            if k != p {
                v += pl.c[k][i] * xi * y.values()[i];
            }
        }
    }
    v
}

fn lot_payoff(g: &LotSizingGame, p: usize, x: &[PureStrategy]) -> f64 {
    let t = g.periods;
    let pl = &g.players[p];
    let v = x[p].values();
    let mut total = 0.0;
    for u in 0..t {
        let market: f64 = x.iter().map(|s| s.values()[2 * t + u]).sum();
        total += (g.a[u] - g.b[u] * market) * v[2 * t + u];
        total -= pl.setup[u] * v[u] + pl.unit[u] * v[t + u] + pl.holding[u] * v[3 * t + u];
    }
    total
}

fn keg_payoff(g: &KegGame, p: usize, x: &[PureStrategy]) -> f64 {
    let mut total = 0.0;
    for (j, &c) in g.national[p].iter().enumerate() {
        total += g.cycles[c].weight[p] as f64 * x[p].values()[j];
    }
    let (op, ok) = (g.national[p].len(), g.national[1 - p].len());
    for (j, &c) in g.international.iter().enumerate() {
        if x[p].values()[op + j] == 1.0 && x[1 - p].values()[ok + j] == 1.0 {
            total += g.cycles[c].weight[p] as f64;
        }
    }
    total
}

fn random_pure(game: &dyn BilateralGame, rng: &mut ChaCha8Rng) -> Option<Vec<PureStrategy>> {
    (0..game.num_players())
        .map(|p| {
            let all = enumerate_strategies(game, p, ENUMERATION_CAP).ok()?;
            (!all.is_empty()).then(|| all[rng.gen_range(0..all.len())].clone())
        })
        .collect()
}

fn lot_random_plan(g: &LotSizingGame, rng: &mut ChaCha8Rng) -> PureStrategy {
    let q: Vec<f64> = (0..g.periods).map(|u| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..g.a[u] / g.b[u]) }).collect();
    g.plan(&q).unwrap()
}

/// Random small sampled game drawn from a knapsack instance.
fn small_sampled(seed: u64) -> Option<(KnapsackGame, SampledGame)> {
    let mut r = rng(seed);
    let m = r.gen_range(2..=3);
    let n = r.gen_range(3..=5);
    let g = knapsack::generate(n, m, r.gen_range(3..=8), seed);
    let mut lists = Vec::new();
    for p in 0..m {
        let mut all = enumerate_strategies(&g, p, ENUMERATION_CAP).unwrap();
        if all.is_empty() {
            return None;
        }
        let k = r.gen_range(1..=4.min(all.len()));
        let mut pick = Vec::new();
        for _ in 0..k {
            pick.push(all.swap_remove(r.gen_range(0..all.len())));
        }
        lists.push(pick);
    }
    let sg = SampledGame::assemble(&g, lists).unwrap();
    Some((g, sg))
}

fn sampled_ne(sg: &SampledGame, sp: &SampledProfile) -> bool {
    (0..sg.num_players()).all(|p| {
        let v = sg.expected_payoff(p, sp);
        (0..sg.num_strategies(p)).all(|i| sg.payoff_against(p, i, sp) <= v + 1e-6)
    })
}

fn all_supports(size: usize) -> Vec<Vec<usize>> {
    (1u32..(1 << size)).map(|mask| (0..size).filter(|i| mask >> i & 1 == 1).collect()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decomposition_matches_direct_formulas(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = knapsack::generate(r.gen_range(1..=8), r.gen_range(2..=3), r.gen_range(0..=9), seed);
        if let Some(x) = random_pure(&k, &mut r) {
            for p in 0..k.num_players() {
                prop_assert!((k.payoff(p, &x) - knapsack_payoff(&k, p, &x)).abs() < 1e-9);
            }
        }
        let l = lotsizing::generate(r.gen_range(2..=3), r.gen_range(1..=6), seed);
        let x: Vec<PureStrategy> = (0..l.players.len()).map(|_| lot_random_plan(&l, &mut r)).collect();
        for p in 0..l.players.len() {
            prop_assert!((l.payoff(p, &x) - lot_payoff(&l, p, &x)).abs() < 1e-9);
        }
        let v = r.gen_range(4..=10);
        let kg = KegGame::new(keg::generate(v, keg::default_density(v), seed), false);
        if let Some(x) = random_pure(&kg, &mut r) {
            for p in 0..2 {
                prop_assert!((kg.payoff(p, &x) - keg_payoff(&kg, p, &x)).abs() < 1e-9);
            }
        }
        let d = DuopolyGame::new();
        let (a, b) = (r.gen_range(0.0..20.0), r.gen_range(0.0..20.0));
        let x = vec![DuopolyGame::strategy(a), DuopolyGame::strategy(b)];
        prop_assert!((d.payoff(0, &x) - (-a * a + a * b)).abs() < 1e-9);
    }

    #[test]
    fn expected_payoff_sums_the_cross_product(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = knapsack::generate(r.gen_range(2..=6), 3, r.gen_range(4..=9), seed);
        if (0..3).any(|p| enumerate_strategies(&g, p, ENUMERATION_CAP).unwrap().is_empty()) {
            return Ok(());
        }
        let prof = random_profile(&g, &mut r, 4);
        let atoms: Vec<&[(PureStrategy, f64)]> = prof.players().iter().map(MixedStrategy::atoms).collect();
        for p in 0..3 {
            let mut brute = 0.0;
            for a in atoms[0] {
                for b in atoms[1] {
                    for c in atoms[2] {
                        let x = vec![a.0.clone(), b.0.clone(), c.0.clone()];
                        brute += a.1 * b.1 * c.1 * g.payoff(p, &x);
                    }
                }
            }
            prop_assert!((expected_payoff(&g, &prof, p).unwrap() - brute).abs() < 1e-9);
        }
    }

    #[test]
    fn caches_survive_adds_and_removals(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = knapsack::generate(r.gen_range(3..=6), r.gen_range(2..=3), r.gen_range(4..=9), seed);
        let m = g.num_players();
        let mut pools = Vec::new();
        for p in 0..m {
            let all = enumerate_strategies(&g, p, ENUMERATION_CAP).unwrap();
            if all.is_empty() {
                return Ok(());
            }
            pools.push(all);
        }
        let mut sg = SampledGame::assemble(&g, pools.iter().map(|a| vec![a[0].clone()]).collect()).unwrap();
        for it in 0..20 {
            let p = r.gen_range(0..m);
            if r.gen_bool(0.65) {
                let x = pools[p][r.gen_range(0..pools[p].len())].clone();
                if sg.index_of(p, &x).is_none() {
                    sg.add_strategy(&g, p, x, it).unwrap();
                }
            } else if sg.num_strategies(p) > 1 {
                let x = sg.strategy(p, r.gen_range(0..sg.num_strategies(p))).clone();
                sg.remove_strategies(&[(p, x)]).unwrap();
            }
            prop_assert!(sg.caches_match(&g, 1e-12));
            let fresh = SampledGame::assemble(&g, (0..m).map(|p| sg.strategies(p).to_vec()).collect()).unwrap();
            for p in 0..m {
                for i in 0..sg.num_strategies(p) {
                    prop_assert_eq!(sg.own(p, i), fresh.own(p, i));
                    for k in (0..m).filter(|&k| k != p) {
                        prop_assert_eq!(sg.pair_row(p, i, k), fresh.pair_row(p, i, k));
                    }
                }
            }
        }
    }

    #[test]
    fn lp_matches_vertex_enumeration(seed in any::<u64>()) {
        let lp = random_lp(&mut rng(seed), 5, 6);
        let res = solve_lp(&lp).unwrap();
        match vertex_enumeration(&lp) {
            None => prop_assert_eq!(res.status, LpStatus::Infeasible),
            Some(best) => {
                prop_assert_eq!(res.status, LpStatus::Optimal);
                prop_assert!((res.objective - best).abs() < 1e-8, "{} vs {}", res.objective, best);
                for row in &lp.constraints {
                    let lhs: f64 = row.coeffs.iter().zip(&res.x).map(|(a, b)| a * b).sum();
                    let ok = match row.relation {
                        Relation::Le => lhs <= row.rhs + 1e-7,
                        Relation::Ge => lhs >= row.rhs - 1e-7,
                        Relation::Eq => (lhs - row.rhs).abs() <= 1e-7,
                    };
                    prop_assert!(ok);
                }
            }
        }
    }

    #[test]
    fn found_equilibria_hold_on_the_sample(seed in any::<u64>()) {
        let Some((_, sg)) = small_sampled(seed) else { return Ok(()) };
        let m = sg.num_players();
        let mut opts = SearchOptions::new(m);
        let order = default_order(&sg, &[], &opts.caps, SizeRule::Guided);
        let pruned = find_ne(&sg, &order, &SolveConstraints::none(), &opts).unwrap().unwrap();
        opts.pruning = false;
        let plain = find_ne(&sg, &order, &SolveConstraints::none(), &opts).unwrap().unwrap();
        prop_assert!(sampled_ne(&sg, &pruned));
        prop_assert!(sampled_ne(&sg, &plain));
    }

    #[test]
    fn forced_and_excluded_are_honoured(seed in any::<u64>()) {
        let Some((_, sg)) = small_sampled(seed) else { return Ok(()) };
        let m = sg.num_players();
        let opts = SearchOptions::new(m);
        let order = default_order(&sg, &[], &opts.caps, SizeRule::Guided);
        let mut r = rng(seed ^ 1);
        let fp = r.gen_range(0..m);
        let fi = r.gen_range(0..sg.num_strategies(fp));
        let excluded: Vec<(usize, usize)> = (0..m)
            .flat_map(|p| (0..sg.num_strategies(p)).map(move |i| (p, i)))
            .filter(|&(p, i)| (p, i) != (fp, fi) && sg.num_strategies(p) > 1 && i == sg.num_strategies(p) - 1)
            .collect();
        let cons = SolveConstraints { forced: Some((fp, fi)), excluded: excluded.clone() };
        if let Some(sp) = find_ne(&sg, &order, &cons, &opts).unwrap() {
            prop_assert!(sp.probs[fp][fi] > 1e-9);
            for &(p, i) in &excluded {
                prop_assert_eq!(sp.probs[p][i], 0.0);
            }
            prop_assert!(sampled_ne(&sg, &sp));
        }
    }

    #[test]
    fn ce_rows_hold(seed in any::<u64>()) {
        let Some((_, sg)) = small_sampled(seed) else { return Ok(()) };
        let tau = solve_ce(&sg, CeObjective::MaxWelfare).unwrap();
        let atoms = tau.atoms();
        let total: f64 = atoms.iter().map(|a| a.1).sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
        for p in 0..sg.num_players() {
            for rec in 0..sg.num_strategies(p) {
                for dev in 0..sg.num_strategies(p) {
                    let mut gain = 0.0;
                    for (idx, q) in &atoms {
                        if idx[p] == rec {
                            let mut alt = idx.clone();
                            alt[p] = dev;
                            gain += q * (sg.payoff(p, &alt) - sg.payoff(p, idx));
                        }
                    }
                    prop_assert!(gain <= 1e-7 * (1.0 + total), "player {} gains {}", p, gain);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn knapsack_engine_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = knapsack::generate(r.gen_range(1..=12), r.gen_range(2..=3), r.gen_range(0..=9), seed);
        if (0..g.num_players()).any(|p| enumerate_strategies(&g, p, ENUMERATION_CAP).unwrap().is_empty()) {
            return Ok(());
        }
        let prof = random_profile(&g, &mut r, 3);
        for p in 0..g.num_players() {
            let x = g.best_response(p, &prof).unwrap();
            prop_assert!(g.is_feasible(p, &x));
            let v = expected_payoff(&g, &prof.with(p, MixedStrategy::pure(x)), p).unwrap();
            prop_assert!((v - brute_best_value(&g, p, &prof)).abs() < 1e-9);
        }
    }

    #[test]
    fn keg_engine_matches_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let v = r.gen_range(4..=14);
        let graph = keg::generate(v, keg::default_density(v), seed);
        let maximal = r.gen_bool(0.5);
        let g = KegGame::new(graph, maximal);
        if (0..2).any(|p| g.dimension(p) > 20) {
            return Ok(());
        }
        let prof = random_profile(&g, &mut r, 3);
        for p in 0..2 {
            let x = g.best_response(p, &prof).unwrap();
            prop_assert!(g.is_feasible(p, &x));
            if maximal {
                prop_assert!(g.is_maximal(p, &x));
            }
            let val = expected_payoff(&g, &prof.with(p, MixedStrategy::pure(x)), p).unwrap();
            prop_assert!((val - brute_best_value(&g, p, &prof)).abs() < 1e-9);
        }
    }

    #[test]
    fn lot_engine_matches_setup_enumeration(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = lotsizing::generate(2, r.gen_range(1..=12), seed);
        let prof = Profile::pure(vec![lot_random_plan(&g, &mut r), lot_random_plan(&g, &mut r)]);
        for p in 0..2 {
            let x = g.best_response(p, &prof).unwrap();
            prop_assert!(g.is_feasible(p, &x));
            let val = expected_payoff(&g, &prof.with(p, MixedStrategy::pure(x)), p).unwrap();
            let qbar = g.opponent_sales(p, &prof);
            prop_assert!((val - lot_brute_value(&g, p, &qbar)).abs() < 1e-9);
        }
    }

    #[test]
    fn potential_tracks_unilateral_changes(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = r.gen_range(2..=3);
        let g = lotsizing::generate(m, r.gen_range(1..=8), seed);
        let mut x: Vec<PureStrategy> = (0..m).map(|_| lot_random_plan(&g, &mut r)).collect();
        for _ in 0..20 {
            let p = r.gen_range(0..m);
            let mut y = x.clone();
            y[p] = lot_random_plan(&g, &mut r);
            let d_phi = g.potential(&y) - g.potential(&x);
            let d_pi = g.payoff(p, &y) - g.payoff(p, &x);
            prop_assert!((d_phi - d_pi).abs() < 1e-8);
            x = y;
        }
    }

    #[test]
    fn drivers_and_direct_enumeration_all_verify(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = knapsack::generate(r.gen_range(3..=6), r.gen_range(2..=3), r.gen_range(3..=8), seed);
        if (0..g.num_players()).any(|p| enumerate_strategies(&g, p, ENUMERATION_CAP).unwrap().is_empty()) {
            return Ok(());
        }
        for method in [Method::Sgm, Method::Msgm] {
            let out = run(&g, &SgmConfig::new(method)).unwrap();
            prop_assert_eq!(out.status, Status::Equilibrium);
            let prof = out.solution.profile().unwrap();
            prop_assert!(verify_ne(&g, prof, 0.0).unwrap().pass);
            if method == Method::Sgm {
                prop_assert_eq!(out.sampled.total_size(), g.num_players() + out.iterations);
                prop_assert_eq!(out.added.len(), out.iterations);
            }
        }
        let (prof, _) = direct_pns(&g, ENUMERATION_CAP, None).unwrap();
        prop_assert!(verify_ne(&g, &prof, 0.0).unwrap().pass);
        prop_assert!(prof.support_sizes().iter().all(|&s| s <= g.n));
    }

    #[test]
    fn ce_driver_verifies(seed in any::<u64>()) {
        let mut r = rng(seed);
        let g = knapsack::generate(r.gen_range(3..=8), 2, r.gen_range(3..=8), seed);
        if (0..2).any(|p| enumerate_strategies(&g, p, ENUMERATION_CAP).unwrap().is_empty()) {
            return Ok(());
        }
        let out = run(&g, &SgmConfig::new(Method::Ce)).unwrap();
        prop_assert_eq!(out.status, Status::Equilibrium);
        let tau = out.solution.tau().unwrap();
        prop_assert!(ipg_core::oracle::verify_ce(&g, tau, 1e-6).unwrap().pass);
    }
}

#[test]
fn exhaustive_supports_agree_with_pruned_search() {
    // Whenever the pruned search reports no equilibrium with a forced
    // strategy, no support containing it is feasible.
    for seed in 0..40u64 {
        let Some((_, sg)) = small_sampled(seed) else { continue };
        if sg.num_players() != 2 {
            continue;
        }
        let opts = SearchOptions::new(2);
        let order = default_order(&sg, &[], &opts.caps, SizeRule::Guided);
        for fi in 0..sg.num_strategies(0) {
            let cons = SolveConstraints { forced: Some((0, fi)), excluded: Vec::new() };
            let found = find_ne(&sg, &order, &cons, &opts).unwrap().is_some();
            let mut any = false;
            for a in all_supports(sg.num_strategies(0)).into_iter().filter(|s| s.contains(&fi)) {
                for b in all_supports(sg.num_strategies(1)) {
                    let support = SupportProfile { sets: vec![a.clone(), b] };
                    any |= solve_feasibility(&sg, &support, FeasibilityMode::Exact, None, Some((0, fi))).unwrap().is_some();
                }
            }
            assert_eq!(found, any, "seed {seed}, forced {fi}");
        }
    }
}

#[test]
fn size_orders() {
    assert_eq!(sort_sizes(&[2, 2], &[], SizeRule::Literal), vec![vec![1, 1], vec![1, 2], vec![2, 1], vec![2, 2]]);
    let s = DuopolyGame::strategy;
    let mixed = MixedStrategy::new(vec![(s(1.0), 0.5), (s(2.0), 0.5)]).unwrap();
    let prev = Profile::new(vec![mixed.clone(), mixed]);
    let order = sort_sizes(&[3, 3], std::slice::from_ref(&prev), SizeRule::Literal);
    let pos = |v: &[usize]| order.iter().position(|o| o == v).unwrap();
    assert!(pos(&[2, 2]) < pos(&[1, 1]));
    assert_eq!(order[0], vec![2, 2]);
    assert_eq!(sort_sizes(&[1, 1], &[], SizeRule::Literal), vec![vec![1, 1]]);
    assert_eq!(sort_sizes(&[1, 1], &[prev], SizeRule::Guided), vec![vec![1, 1]]);
}
