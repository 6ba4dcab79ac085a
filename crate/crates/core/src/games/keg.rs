//! Two-country kidney exchange game.
//!
//! Each country selects cycles of its compatibility graph. National cycles are
//! decided alone; an international cycle is executed only when both countries
//! select it. A country earns one unit per own patient transplanted.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{BilateralGame, Profile, PureStrategy};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CycleClass {
    National(usize),
    International,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cycle {
    /// Vertex indices, smallest first, in arc order.
    pub vertices: Vec<usize>,
    pub class: CycleClass,
    /// Patients of each country on the cycle.
    pub weight: [usize; 2],
}

impl Cycle {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }
}

/// A compatibility digraph with country labels.
#[derive(Clone, Debug, PartialEq)]
pub struct KegGraph {
    pub ids: Vec<u64>,
    /// 0 for country A, 1 for country B.
    pub country: Vec<usize>,
    pub arcs: Vec<(usize, usize)>,
    pub max_len: usize,
}

impl KegGraph {
    pub fn new(vertices: Vec<(u64, usize)>, arcs_by_id: Vec<(u64, u64)>, max_len: usize) -> Result<Self> {
        if !(2..=3).contains(&max_len) {
            return Err(Error::Unsupported(format!("cycle length bound {max_len}; only 2 and 3 are supported")));
        }
        let mut ids = Vec::with_capacity(vertices.len());
        let mut country = Vec::with_capacity(vertices.len());
        for (id, c) in vertices {
            if c > 1 {
                return Err(Error::InvalidInput(format!("vertex {id}: country must be A or B")));
            }
            if ids.contains(&id) {
                return Err(Error::InvalidInput(format!("vertex {id} listed twice")));
            }
            ids.push(id);
            country.push(c);
        }
        let mut arcs = Vec::with_capacity(arcs_by_id.len());
        for (u, v) in arcs_by_id {
            let iu = ids.iter().position(|x| *x == u);
            let iv = ids.iter().position(|x| *x == v);
            match (iu, iv) {
                (Some(a), Some(b)) if a != b => {
                    if !arcs.contains(&(a, b)) {
                        arcs.push((a, b));
                    }
                }
                (Some(_), Some(_)) => return Err(Error::InvalidInput(format!("self-loop at vertex {u}"))),
                _ => return Err(Error::InvalidInput(format!("arc ({u},{v}) names an unknown vertex"))),
            }
        }
        Ok(KegGraph { ids, country, arcs, max_len })
    }

    pub fn num_vertices(&self) -> usize {
        self.ids.len()
    }

    /// All vertex-simple cycles of length at most `max_len`, once per rotation.
    pub fn cycles(&self) -> Vec<Cycle> {
        let n = self.num_vertices();
        let mut out_adj = vec![Vec::new(); n];
        let mut has = vec![vec![false; n]; n];
        for &(u, v) in &self.arcs {
            out_adj[u].push(v);
            has[u][v] = true;
        }
        for list in &mut out_adj {
            list.sort_unstable();
        }
        let mut cycles = Vec::new();
        for s in 0..n {
            for &a in &out_adj[s] {
                if a <= s {
                    continue;
                }
                if has[a][s] {
                    cycles.push(vec![s, a]);
                }
                if self.max_len >= 3 {
                    for &b in &out_adj[a] {
                        if b > s && b != a && has[b][s] {
                            cycles.push(vec![s, a, b]);
                        }
                    }
                }
            }
        }
        cycles
            .into_iter()
            .map(|vertices| {
                let mut weight = [0usize; 2];
                for &v in &vertices {
                    weight[self.country[v]] += 1;
                }
                let class = if weight[1] == 0 {
                    CycleClass::National(0)
                } else if weight[0] == 0 {
                    CycleClass::National(1)
                } else {
                    CycleClass::International
                };
                Cycle { vertices, class, weight }
            })
            .collect()
    }
}

/// Weighted packing of vertex-disjoint cycles by depth-first branch and bound.
///
/// Each candidate carries the vertices it blocks and a nonnegative gain. The
/// bound gives every free vertex the best gain per blocked vertex among the
/// compatible remaining candidates.
pub fn pack(candidates: &[(Vec<usize>, f64)], num_vertices: usize) -> (f64, Vec<usize>) {
    let mut order: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].1 > 0.0).collect();
    order.sort_by(|&a, &b| candidates[b].1.partial_cmp(&candidates[a].1).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b)));
    let mut search = Packer {
        cands: candidates,
        order,
        used: vec![false; num_vertices],
        ratio: vec![0.0; num_vertices],
        chosen: Vec::new(),
        best_value: 0.0,
        best: Vec::new(),
    };
    search.dfs(0, 0.0);
    let mut best = search.best;
    best.sort_unstable();
    (search.best_value, best)
}

struct Packer<'a> {
    cands: &'a [(Vec<usize>, f64)],
    order: Vec<usize>,
    used: Vec<bool>,
    ratio: Vec<f64>,
    chosen: Vec<usize>,
    best_value: f64,
    best: Vec<usize>,
}

impl Packer<'_> {
    fn fits(&self, c: usize) -> bool {
        self.cands[c].0.iter().all(|&v| !self.used[v])
    }

    fn bound(&mut self, from: usize) -> f64 {
        let mut touched = Vec::new();
        for &c in &self.order[from..] {
            if !self.fits(c) {
                continue;
            }
            let (verts, gain) = &self.cands[c];
            let r = gain / verts.len() as f64;
            for &v in verts {
                if self.ratio[v] == 0.0 {
                    touched.push(v);
                }
                if r > self.ratio[v] {
                    self.ratio[v] = r;
                }
            }
        }
        let mut total = 0.0;
        for v in touched {
            total += self.ratio[v];
            self.ratio[v] = 0.0;
        }
        total
    }

    fn dfs(&mut self, from: usize, value: f64) {
        if value > self.best_value + 1e-12 {
            self.best_value = value;
            self.best = self.chosen.clone();
        }
        if from >= self.order.len() || value + self.bound(from) <= self.best_value + 1e-12 {
            return;
        }
        let c = self.order[from];
        if self.fits(c) {
            for &v in &self.cands[c].0 {
                self.used[v] = true;
            }
            self.chosen.push(c);
            self.dfs(from + 1, value + self.cands[c].1);
            self.chosen.pop();
            for &v in &self.cands[c].0 {
                self.used[v] = false;
            }
        }
        self.dfs(from + 1, value);
    }
}

/// The two-player game over a graph's cycles.
///
/// Player `p`'s decision vector lists its national cycles first and then all
/// international cycles, in enumeration order.
#[derive(Clone, Debug)]
pub struct KegGame {
    pub graph: KegGraph,
    pub cycles: Vec<Cycle>,
    pub national: [Vec<usize>; 2],
    pub international: Vec<usize>,
    /// Restrict both players to maximal strategies.
    pub maximal: bool,
}

impl KegGame {
    pub fn new(graph: KegGraph, maximal: bool) -> Self {
        let cycles = graph.cycles();
        let mut national = [Vec::new(), Vec::new()];
        let mut international = Vec::new();
        for (i, c) in cycles.iter().enumerate() {
            match c.class {
                CycleClass::National(p) => national[p].push(i),
                CycleClass::International => international.push(i),
            }
        }
        KegGame { graph, cycles, national, international, maximal }
    }

    /// Cycle index behind each coordinate of player `p`'s decision vector.
    pub fn columns(&self, p: usize) -> Vec<usize> {
        self.national[p].iter().chain(&self.international).copied().collect()
    }

    fn own_vertices(&self, p: usize, cycle: usize) -> Vec<usize> {
        self.cycles[cycle].vertices.iter().copied().filter(|&v| self.graph.country[v] == p).collect()
    }

    fn strategy_from(cols: &[usize], selected: &[usize]) -> PureStrategy {
        let mut bits = vec![0u8; cols.len()];
        for &s in selected {
            bits[s] = 1;
        }
        PureStrategy::binary(&bits)
    }

    /// Sets zero entries to one while the selection stays feasible.
    pub fn close(&self, p: usize, x: &PureStrategy) -> PureStrategy {
        let cols = self.columns(p);
        let mut used = vec![false; self.graph.num_vertices()];
        let mut bits: Vec<u8> = x.values().iter().map(|v| u8::from(*v > 0.5)).collect();
        for (j, &c) in cols.iter().enumerate() {
            if bits[j] == 1 {
                for v in self.own_vertices(p, c) {
                    used[v] = true;
                }
            }
        }
        for (j, &c) in cols.iter().enumerate() {
            if bits[j] == 0 {
                let own = self.own_vertices(p, c);
                if own.iter().all(|&v| !used[v]) {
                    for v in own {
                        used[v] = true;
                    }
                    bits[j] = 1;
                }
            }
        }
        PureStrategy::binary(&bits)
    }

    /// True when no zero entry can be raised to one feasibly.
    pub fn is_maximal(&self, p: usize, x: &PureStrategy) -> bool {
        self.close(p, x) == *x
    }

    /// Best selection for the given per-coordinate gains.
    pub fn optimize(&self, p: usize, gains: &[f64]) -> PureStrategy {
        let cols = self.columns(p);
        let cands: Vec<(Vec<usize>, f64)> = cols.iter().zip(gains).map(|(&c, &g)| (self.own_vertices(p, c), g)).collect();
        let (_, sel) = pack(&cands, self.graph.num_vertices());
        let x = Self::strategy_from(&cols, &sel);
        if self.maximal {
            self.close(p, &x)
        } else {
            x
        }
    }

    /// Best total number of transplants over all cycles.
    pub fn social_optimum(&self) -> (f64, Vec<usize>) {
        let cands: Vec<(Vec<usize>, f64)> = self.cycles.iter().map(|c| (c.vertices.clone(), c.len() as f64)).collect();
        pack(&cands, self.graph.num_vertices())
    }

    /// Value of country `p` acting alone with national cycles only.
    pub fn standalone_value(&self, p: usize) -> f64 {
        let cands: Vec<(Vec<usize>, f64)> =
            self.national[p].iter().map(|&c| (self.cycles[c].vertices.clone(), self.cycles[c].weight[p] as f64)).collect();
        pack(&cands, self.graph.num_vertices()).0
    }

    /// Executed transplants for a pure profile.
    pub fn social_welfare(&self, x: &[PureStrategy]) -> f64 {
        self.payoff(0, x) + self.payoff(1, x)
    }

    fn gains(&self, p: usize, profile: &Profile) -> Vec<f64> {
        let k = 1 - p;
        let mut g: Vec<f64> = self.national[p].iter().map(|&c| self.cycles[c].weight[p] as f64).collect();
        let off = self.national[k].len();
        let mut agree = vec![0.0; self.international.len()];
        for (y, q) in profile.player(k).support() {
            for (j, a) in agree.iter_mut().enumerate() {
                *a += q * y.values()[off + j];
            }
        }
        for (j, &c) in self.international.iter().enumerate() {
            g.push(self.cycles[c].weight[p] as f64 * agree[j]);
        }
        g
    }
}

impl BilateralGame for KegGame {
    fn num_players(&self) -> usize {
        2
    }

    fn dimension(&self, p: usize) -> usize {
        self.national[p].len() + self.international.len()
    }

    fn own_payoff(&self, p: usize, x: &PureStrategy) -> f64 {
        self.national[p].iter().zip(x.values()).map(|(&c, v)| self.cycles[c].weight[p] as f64 * v).sum()
    }

    fn pair_payoff(&self, p: usize, x: &PureStrategy, k: usize, y: &PureStrategy) -> f64 {
        let (op, ok) = (self.national[p].len(), self.national[k].len());
        self.international.iter().enumerate().map(|(j, &c)| self.cycles[c].weight[p] as f64 * x.values()[op + j] * y.values()[ok + j]).sum()
    }

    fn is_feasible(&self, p: usize, x: &PureStrategy) -> bool {
        if x.len() != self.dimension(p) || !x.is_binary() {
            return false;
        }
        let mut used = vec![false; self.graph.num_vertices()];
        for (j, &c) in self.columns(p).iter().enumerate() {
            if x.values()[j] == 1.0 {
                for v in self.own_vertices(p, c) {
                    if used[v] {
                        return false;
                    }
                    used[v] = true;
                }
            }
        }
        !self.maximal || self.is_maximal(p, x)
    }

    fn best_response(&self, p: usize, profile: &Profile) -> Result<PureStrategy> {
        let g = self.gains(p, profile);
        Ok(self.optimize(p, &g))
    }

    fn support_cap(&self, p: usize) -> Option<usize> {
        Some(self.dimension(p).max(1))
    }

    fn zero_strategy(&self, p: usize) -> PureStrategy {
        PureStrategy::binary(&vec![0; self.dimension(p)])
    }

    /// Country `p` picks national and international cycles as if it also
    /// decided for the other country, so international cycles must be
    /// disjoint on every vertex.
    fn optimistic_strategy(&self, p: usize) -> Result<PureStrategy> {
        let cols = self.columns(p);
        let cands: Vec<(Vec<usize>, f64)> =
            cols.iter().map(|&c| (self.cycles[c].vertices.clone(), self.cycles[c].weight[p] as f64)).collect();
        let (_, sel) = pack(&cands, self.graph.num_vertices());
        let x = Self::strategy_from(&cols, &sel);
        Ok(if self.maximal { self.close(p, &x) } else { x })
    }

    fn is_binary(&self, _p: usize) -> bool {
        true
    }
}

/// Random compatibility graph.
///
/// Vertices get ids `1..=n`; the first `n/2` belong to country A. Each ordered
/// pair of distinct vertices becomes an arc with probability `density`, drawn
/// from ChaCha8 seeded with `seed` in row-major pair order.
pub fn generate(n: usize, density: f64, seed: u64) -> KegGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices: Vec<(u64, usize)> = (0..n).map(|i| (i as u64 + 1, usize::from(i >= n / 2))).collect();
    let mut arcs = Vec::new();
    for u in 0..n {
        for v in 0..n {
            if u != v && rng.gen_bool(density.clamp(0.0, 1.0)) {
                arcs.push((u as u64 + 1, v as u64 + 1));
            }
        }
    }
    KegGraph::new(vertices, arcs, 3).expect("generated graph is well formed")
}

/// Arc density used when none is given: about four outgoing arcs per vertex.
pub fn default_density(n: usize) -> f64 {
    if n <= 1 {
        0.0
    } else {
        (4.0 / n as f64).min(0.3)
    }
}
