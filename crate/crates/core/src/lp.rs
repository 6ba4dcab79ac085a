//! Dense two-phase primal simplex.
//!
//! Small dense problems only: every row is stored in full and every pivot
//! touches the whole tableau.

use crate::error::{Error, Result};

/// Tolerance on the final row check, scaled by the row magnitude.
pub const ROW_TOL: f64 = 1e-7;
/// Tolerance on variable bounds.
pub const BOUND_TOL: f64 = 1e-9;

const COST_TOL: f64 = 1e-9;
const ELIGIBLE_TOL: f64 = 1e-9;
const PIVOT_MIN: f64 = 1e-11;
const DEGENERACY_STREAK: usize = 50;
/// Tableau entries smaller than this after a pivot are treated as round-off.
const DROP_TOL: f64 = 1e-13;
const HARRIS_SLACK: f64 = 1e-12;
const PERTURB: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Debug)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A linear program in the form `max c·x` subject to rows and bounds.
///
/// Lower bounds default to 0 and upper bounds to `+inf`. Without an
/// objective only a feasible point is sought.
#[derive(Clone, Debug)]
pub struct LpProblem {
    pub objective: Option<Vec<f64>>,
    pub constraints: Vec<Constraint>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Feasible,
    Infeasible,
    Unbounded,
}

#[derive(Clone, Debug)]
pub struct LpResult {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
}

impl LpResult {
    pub fn is_solved(&self) -> bool {
        matches!(self.status, LpStatus::Optimal | LpStatus::Feasible)
    }
}

impl LpProblem {
    pub fn new(num_vars: usize) -> Self {
        LpProblem { objective: None, constraints: Vec::new(), lower: vec![0.0; num_vars], upper: vec![f64::INFINITY; num_vars] }
    }

    pub fn num_vars(&self) -> usize {
        self.lower.len()
    }

    pub fn maximize(&mut self, c: Vec<f64>) {
        self.objective = Some(c);
    }

    pub fn add(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint { coeffs, relation, rhs });
    }

    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn set_free(&mut self, j: usize) {
        self.set_bounds(j, f64::NEG_INFINITY, f64::INFINITY);
    }

    fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        if self.upper.len() != n {
            return Err(Error::InvalidInput("bound vectors differ in length".into()));
        }
        if let Some(c) = &self.objective {
            if c.len() != n || c.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("objective must be finite with one entry per variable".into()));
            }
        }
        for (i, row) in self.constraints.iter().enumerate() {
            if row.coeffs.len() != n {
                return Err(Error::InvalidInput(format!("row {i} has {} coefficients, expected {n}", row.coeffs.len())));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!("row {i} has non-finite data")));
            }
        }
        for j in 0..n {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(Error::InvalidInput(format!("variable {j} has unusable bounds")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
enum VarMap {
    Shift { col: usize, lo: f64 },
    Mirror { col: usize, hi: f64 },
    Split { pos: usize, neg: usize },
}

struct Tableau {
    rows: usize,
    width: usize,
    data: Vec<f64>,
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.width - 1)
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let w = self.width;
        let p = self.data[r * w + e];
        let inv = 1.0 / p;
        for v in &mut self.data[r * w..(r + 1) * w] {
            *v *= inv;
        }
        self.data[r * w + e] = 1.0;
        let (before, rest) = self.data.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for chunk in before.chunks_exact_mut(w).chain(after.chunks_exact_mut(w)) {
            let f = chunk[e];
            if f != 0.0 {
                for (v, pv) in chunk.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                    if v.abs() < DROP_TOL {
                        *v = 0.0;
                    }
                }
                chunk[e] = 0.0;
            }
        }
        let f = self.obj[e];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.obj[e] = 0.0;
        }
        self.basis[r] = e;
    }

    fn set_costs(&mut self, cost: &[f64]) {
        let w = self.width;
        for j in 0..w {
            self.obj[j] = if j + 1 < w { -cost[j] } else { 0.0 };
        }
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb != 0.0 {
                for j in 0..w {
                    self.obj[j] += cb * self.data[i * w + j];
                }
            }
        }
    }

    /// Minimum-ratio row, ties broken by the smallest basic index.
    fn bland_row(&self, e: usize) -> Option<(usize, f64)> {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..self.rows {
            let a = self.at(i, e);
            if a <= ELIGIBLE_TOL {
                continue;
            }
            let ratio = self.rhs(i).max(0.0) / a;
            leave = match leave {
                Some((r, best)) => {
                    let tie = (ratio - best).abs() <= 1e-12 * (1.0 + best.abs());
                    if (ratio < best && !tie) || (tie && self.basis[i] < self.basis[r]) {
                        Some((i, ratio))
                    } else {
                        Some((r, best))
                    }
                }
                None => Some((i, ratio)),
            };
        }
        leave
    }

    /// Two-pass ratio test: among rows whose ratio is within a small
    /// feasibility slack of the minimum, take the largest pivot.
    fn harris_row(&self, e: usize) -> Option<(usize, f64)> {
        let mut bound = f64::INFINITY;
        for i in 0..self.rows {
            let a = self.at(i, e);
            if a > ELIGIBLE_TOL {
                bound = bound.min((self.rhs(i).max(0.0) + HARRIS_SLACK) / a);
            }
        }
        if bound == f64::INFINITY {
            return None;
        }
        let mut leave: Option<(usize, f64)> = None;
        let mut best_a = 0.0;
        for i in 0..self.rows {
            let a = self.at(i, e);
            if a > ELIGIBLE_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                if ratio <= bound && a > best_a {
                    best_a = a;
                    leave = Some((i, ratio));
                }
            }
        }
        leave
    }

    /// Maximizes the cost row currently loaded. Returns false when unbounded.
    fn optimize(&mut self, allowed: usize) -> Result<bool> {
        let mut bland = false;
        let mut streak = 0usize;
        let limit = 50_000 + 20 * (self.rows + self.width);
        for _ in 0..limit {
            let mut enter = None;
            let mut best = -COST_TOL;
            for j in 0..allowed {
                let d = self.obj[j];
                if d < best {
                    enter = Some(j);
                    if bland {
                        break;
                    }
                    best = d;
                }
            }
            let Some(e) = enter else { return Ok(true) };

            let leave = if bland { self.bland_row(e) } else { self.harris_row(e) };
            let Some((r, ratio)) = leave else { return Ok(false) };
            let p = self.at(r, e);
            if p.abs() < PIVOT_MIN {
                return Err(Error::SolverFailure(format!("pivot {p:e} below threshold at row {r}, column {e}")));
            }
            if ratio <= 1e-12 {
                streak += 1;
                if streak >= DEGENERACY_STREAK {
                    bland = true;
                }
            } else {
                streak = 0;
            }
            self.pivot(r, e);
        }
        Err(Error::SolverFailure(format!("no convergence after {limit} pivots")))
    }
}

/// Solves a linear program with the two-phase primal simplex method.
///
/// Dantzig pricing switches to Bland's rule after a streak of degenerate
/// pivots. The returned point is recomputed from the final basis and checked
/// against every row before being reported.
pub fn solve_lp(problem: &LpProblem) -> Result<LpResult> {
    problem.validate()?;
    match solve_with(problem, true) {
        Ok(res) => Ok(res),
        Err(Error::SolverFailure(_)) => solve_with(problem, false),
        Err(e) => Err(e),
    }
}

fn solve_with(problem: &LpProblem, perturb: bool) -> Result<LpResult> {
    let n = problem.num_vars();

    let mut maps = Vec::with_capacity(n);
    let mut ncols = 0usize;
    let mut extra_rows: Vec<(usize, f64)> = Vec::new();
    for j in 0..n {
        let (lo, hi) = (problem.lower[j], problem.upper[j]);
        if lo.is_finite() {
            maps.push(VarMap::Shift { col: ncols, lo });
            if hi.is_finite() {
                if hi < lo - BOUND_TOL {
                    return Ok(infeasible(n));
                }
                extra_rows.push((ncols, (hi - lo).max(0.0)));
            }
            ncols += 1;
        } else if hi.is_finite() {
            maps.push(VarMap::Mirror { col: ncols, hi });
            ncols += 1;
        } else {
            maps.push(VarMap::Split { pos: ncols, neg: ncols + 1 });
            ncols += 2;
        }
    }

    // Standard-form rows over structural columns.
    let mut std_rows: Vec<(Vec<f64>, Relation, f64)> = Vec::new();
    for row in &problem.constraints {
        let mut a = vec![0.0; ncols];
        let mut b = row.rhs;
        for (j, &c) in row.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            match maps[j] {
                VarMap::Shift { col, lo } => {
                    a[col] += c;
                    b -= c * lo;
                }
                VarMap::Mirror { col, hi } => {
                    a[col] -= c;
                    b -= c * hi;
                }
                VarMap::Split { pos, neg } => {
                    a[pos] += c;
                    a[neg] -= c;
                }
            }
        }
        std_rows.push((a, row.relation, b));
    }
    for &(col, cap) in &extra_rows {
        let mut a = vec![0.0; ncols];
        a[col] = 1.0;
        std_rows.push((a, Relation::Le, cap));
    }
    for (a, rel, b) in &mut std_rows {
        let big = a.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        if big > 0.0 {
            for v in a.iter_mut() {
                *v /= big;
            }
            *b /= big;
        }
        if *b < 0.0 || (*b == 0.0 && *rel == Relation::Ge) {
            for v in a.iter_mut() {
                *v = -*v;
            }
            *b = -*b;
            *rel = match *rel {
                Relation::Le => Relation::Ge,
                Relation::Ge => Relation::Le,
                Relation::Eq => Relation::Eq,
            };
        }
    }

    let m = std_rows.len();
    let n_slack = std_rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = std_rows.iter().filter(|r| r.1 != Relation::Le).count();
    let art_start = ncols + n_slack;
    let width = art_start + n_art + 1;

    let mut tab = Tableau { rows: m, width, data: vec![0.0; m * width], obj: vec![0.0; width], basis: vec![0; m] };
    let mut slack = ncols;
    let mut art = art_start;
    for (i, (a, rel, b)) in std_rows.iter().enumerate() {
        let row = &mut tab.data[i * width..(i + 1) * width];
        row[..ncols].copy_from_slice(a);
        row[width - 1] = *b;
        match rel {
            Relation::Le => {
                row[slack] = 1.0;
                tab.basis[i] = slack;
                slack += 1;
            }
            Relation::Ge => {
                row[slack] = -1.0;
                slack += 1;
                row[art] = 1.0;
                tab.basis[i] = art;
                art += 1;
            }
            Relation::Eq => {
                row[art] = 1.0;
                tab.basis[i] = art;
                art += 1;
            }
        }
    }
    let original = tab.data.clone();
    if perturb {
        // Relaxing inequality rows by distinct tiny amounts breaks the ties
        // that make homogeneous systems stall; the final point is recomputed
        // from the unperturbed rows.
        for (i, (_, rel, b)) in std_rows.iter().enumerate() {
            if *rel == Relation::Le {
                let u = ((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) >> 11) as f64 / (1u64 << 53) as f64;
                tab.data[i * width + width - 1] += PERTURB * (1.0 + b.abs()) * (1.0 + u);
            }
        }
    }

    let b_scale = std_rows.iter().fold(1.0f64, |s, r| s.max(r.2.abs()));
    if n_art > 0 {
        let mut cost = vec![0.0; width - 1];
        for c in cost.iter_mut().skip(art_start) {
            *c = -1.0;
        }
        tab.set_costs(&cost);
        tab.optimize(width - 1)?;
        let infeasibility = -tab.obj[width - 1];
        if infeasibility > 1e-9 * b_scale {
            return Ok(infeasible(n));
        }
        for i in 0..m {
            if tab.basis[i] < art_start {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..art_start {
                let v = tab.at(i, j).abs();
                if v > ELIGIBLE_TOL && best.is_none_or(|(_, bv)| v > bv) {
                    best = Some((j, v));
                }
            }
            if let Some((j, _)) = best {
                tab.pivot(i, j);
            }
        }
    }

    let mut cost = vec![0.0; width - 1];
    if let Some(c) = &problem.objective {
        for (j, &cj) in c.iter().enumerate() {
            match maps[j] {
                VarMap::Shift { col, .. } => cost[col] += cj,
                VarMap::Mirror { col, .. } => cost[col] -= cj,
                VarMap::Split { pos, neg } => {
                    cost[pos] += cj;
                    cost[neg] -= cj;
                }
            }
        }
        tab.set_costs(&cost);
        if !tab.optimize(art_start)? {
            return Ok(LpResult { status: LpStatus::Unbounded, x: vec![0.0; n], objective: f64::INFINITY });
        }
    }

    let mut cols = vec![0.0; width - 1];
    for i in 0..m {
        cols[tab.basis[i]] = tab.rhs(i).max(0.0);
    }
    if let Some(refined) = refine(&original, width, &tab.basis) {
        cols = refined;
    }

    let mut x = vec![0.0; n];
    for j in 0..n {
        x[j] = match maps[j] {
            VarMap::Shift { col, lo } => lo + cols[col],
            VarMap::Mirror { col, hi } => hi - cols[col],
            VarMap::Split { pos, neg } => cols[pos] - cols[neg],
        };
    }
    check(problem, &mut x)?;
    let objective = match &problem.objective {
        Some(c) => c.iter().zip(&x).map(|(a, b)| a * b).sum(),
        None => 0.0,
    };
    Ok(LpResult { status: if problem.objective.is_some() { LpStatus::Optimal } else { LpStatus::Feasible }, x, objective })
}

fn infeasible(n: usize) -> LpResult {
    LpResult { status: LpStatus::Infeasible, x: vec![0.0; n], objective: f64::NEG_INFINITY }
}

/// Re-solves `B x_B = b` from the original rows to shed pivot round-off.
fn refine(original: &[f64], width: usize, basis: &[usize]) -> Option<Vec<f64>> {
    let m = basis.len();
    if m == 0 {
        return Some(vec![0.0; width - 1]);
    }
    let mut a = vec![0.0; m * (m + 1)];
    for i in 0..m {
        for (k, &col) in basis.iter().enumerate() {
            a[i * (m + 1) + k] = original[i * width + col];
        }
        a[i * (m + 1) + m] = original[i * width + width - 1];
    }
    let sol = gauss(&mut a, m)?;
    if sol.iter().any(|v| *v < -1e-7 || !v.is_finite()) {
        return None;
    }
    let mut cols = vec![0.0; width - 1];
    for (k, &col) in basis.iter().enumerate() {
        cols[col] = sol[k].max(0.0);
    }
    Some(cols)
}

/// Gaussian elimination with partial pivoting on an augmented `m x (m+1)` matrix.
fn gauss(a: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let w = m + 1;
    for c in 0..m {
        let mut p = c;
        for r in c + 1..m {
            if a[r * w + c].abs() > a[p * w + c].abs() {
                p = r;
            }
        }
        if a[p * w + c].abs() < 1e-12 {
            return None;
        }
        if p != c {
            for j in 0..w {
                a.swap(c * w + j, p * w + j);
            }
        }
        let d = a[c * w + c];
        for r in c + 1..m {
            let f = a[r * w + c] / d;
            if f != 0.0 {
                for j in c..w {
                    a[r * w + j] -= f * a[c * w + j];
                }
            }
        }
    }
    let mut x = vec![0.0; m];
    for c in (0..m).rev() {
        let mut s = a[c * w + m];
        for j in c + 1..m {
            s -= a[c * w + j] * x[j];
        }
        x[c] = s / a[c * w + c];
    }
    Some(x)
}

fn check(problem: &LpProblem, x: &mut [f64]) -> Result<()> {
    for j in 0..x.len() {
        let (lo, hi) = (problem.lower[j], problem.upper[j]);
        if x[j] < lo {
            if x[j] < lo - BOUND_TOL {
                return Err(Error::SolverFailure(format!("variable {j} = {} below bound {lo}", x[j])));
            }
            x[j] = lo;
        }
        if x[j] > hi {
            if x[j] > hi + BOUND_TOL {
                return Err(Error::SolverFailure(format!("variable {j} = {} above bound {hi}", x[j])));
            }
            x[j] = hi;
        }
    }
    for (i, row) in problem.constraints.iter().enumerate() {
        let mut lhs = 0.0;
        let mut scale = row.rhs.abs().max(1.0);
        for (a, v) in row.coeffs.iter().zip(x.iter()) {
            let t = a * v;
            lhs += t;
            scale = scale.max(t.abs());
        }
        let tol = ROW_TOL * scale;
        let ok = match row.relation {
            Relation::Le => lhs <= row.rhs + tol,
            Relation::Ge => lhs >= row.rhs - tol,
            Relation::Eq => (lhs - row.rhs).abs() <= tol,
        };
        if !ok {
            return Err(Error::SolverFailure(format!("row {i} violated after solve: lhs {lhs}, rhs {}", row.rhs)));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_max() {
        let mut p = LpProblem::new(2);
        p.maximize(vec![1.0, 1.0]);
        p.add(vec![1.0, 1.0], Relation::Le, 1.0);
        let r = solve_lp(&p).unwrap();
        assert_eq!(r.status, LpStatus::Optimal);
        assert!((r.objective - 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_bound_conflict() {
        let mut p = LpProblem::new(1);
        p.add(vec![1.0], Relation::Le, -1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut p = LpProblem::new(2);
        p.maximize(vec![1.0, 0.0]);
        p.add(vec![1.0, -1.0], Relation::Le, 1.0);
        assert_eq!(solve_lp(&p).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn free_and_bounded_variables() {
        // max -y s.t. y >= x - 3, y >= 1 - x, x in [0, 10], y free
        let mut p = LpProblem::new(2);
        p.set_bounds(0, 0.0, 10.0);
        p.set_free(1);
        p.maximize(vec![0.0, -1.0]);
        p.add(vec![-1.0, 1.0], Relation::Ge, -3.0);
        p.add(vec![1.0, 1.0], Relation::Ge, 1.0);
        let r = solve_lp(&p).unwrap();
        assert!((r.objective + -1.0).abs() < 1e-9, "{:?}", r);
        assert!((r.x[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equalities() {
        let mut p = LpProblem::new(2);
        p.add(vec![1.0, 1.0], Relation::Eq, 1.0);
        p.add(vec![2.0, 2.0], Relation::Eq, 2.0);
        p.maximize(vec![1.0, 2.0]);
        let r = solve_lp(&p).unwrap();
        assert!((r.objective - 2.0).abs() < 1e-12);
    }

    #[test]
    fn upper_bound_only() {
        let mut p = LpProblem::new(1);
        p.set_bounds(0, f64::NEG_INFINITY, 4.0);
        p.maximize(vec![1.0]);
        let r = solve_lp(&p).unwrap();
        assert!((r.x[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_ragged_rows() {
        let mut p = LpProblem::new(2);
        p.add(vec![1.0], Relation::Le, 1.0);
        assert!(solve_lp(&p).is_err());
    }
}
