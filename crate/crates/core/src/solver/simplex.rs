//! Bounded-variable dense-tableau simplex.
//!
//! Layout: structural variables first, then one slack per row
//! (`≤` slack in [0, ∞), `≥` slack in (-∞, 0], `=` slack fixed at 0), so the
//! initial slack basis is the identity and the slack block of the tableau is
//! `B⁻¹` throughout. Every 50 pivots the basic values and reduced costs are
//! recomputed from the original data through that block; a full tableau
//! rebuild from the basis is the fallback when residuals degrade.

use super::{record_lp_audit, Problem, Sense, SolveStats, Solution, SolverError, Status};
use super::{DUAL_TOL, FEAS_TOL};

const PIVOT_TOL: f64 = 1e-9;
const REFRESH_INTERVAL: u64 = 50;
const STALL_LIMIT: u32 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum VarState {
    Basic(u32),
    AtLower,
    AtUpper,
    /// Nonbasic free variable resting at zero.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpOutcome {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

pub(crate) struct Tableau {
    m: usize,
    n_struct: usize,
    ncols: usize,
    // original data
    cols: Vec<Vec<(u32, f64)>>,
    cost: Vec<f64>,
    rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    // state
    t: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<u32>,
    state: Vec<VarState>,
    d: Vec<f64>,
    bland: bool,
    stall: u32,
    pub pivots: u64,
    pub refreshes: u64,
    pub rebuilds: u64,
    max_pivots: u64,
}

impl Tableau {
    pub fn new(p: &Problem) -> Tableau {
        let m = p.constraints.len();
        let n = p.num_vars();
        let ncols = n + m;

        let mut cols: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
        for (i, row) in p.constraints.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                cols[j].push((i as u32, a));
            }
        }

        let mut lower = Vec::with_capacity(ncols);
        let mut upper = Vec::with_capacity(ncols);
        lower.extend_from_slice(&p.lower);
        upper.extend_from_slice(&p.upper);
        for row in &p.constraints {
            match row.sense {
                Sense::Le => {
                    lower.push(0.0);
                    upper.push(f64::INFINITY);
                }
                Sense::Ge => {
                    lower.push(f64::NEG_INFINITY);
                    upper.push(0.0);
                }
                Sense::Eq => {
                    lower.push(0.0);
                    upper.push(0.0);
                }
            }
        }

        let mut cost = vec![0.0; ncols];
        cost[..n].copy_from_slice(&p.objective);

        let mut t = vec![0.0; m * ncols];
        for (j, col) in cols.iter().enumerate() {
            for &(i, a) in col {
                t[i as usize * ncols + j] = a;
            }
        }
        for i in 0..m {
            t[i * ncols + n + i] = 1.0;
        }

        let mut state = Vec::with_capacity(ncols);
        for j in 0..n {
            state.push(initial_state(lower[j], upper[j]));
        }
        for i in 0..m {
            state.push(VarState::Basic(i as u32));
        }

        let mut tab = Tableau {
            m,
            n_struct: n,
            ncols,
            cols,
            cost: cost.clone(),
            rhs: p.constraints.iter().map(|r| r.rhs).collect(),
            lower,
            upper,
            t,
            xb: vec![0.0; m],
            basis: (n as u32..(n + m) as u32).collect(),
            state,
            d: cost,
            bland: false,
            stall: 0,
            pivots: 0,
            refreshes: 0,
            rebuilds: 0,
            max_pivots: 50_000 + 200 * m as u64,
        };
        tab.refresh_values();
        tab
    }


    pub fn nonbasic_value(&self, j: usize) -> f64 {
        match self.state[j] {
            VarState::Basic(r) => self.xb[r as usize],
            VarState::AtLower => self.lower[j],
            VarState::AtUpper => self.upper[j],
            VarState::Free => 0.0,
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.upper[j] - self.lower[j] < 1e-12
    }

    /// Recomputes basic values and reduced costs exactly from the original
    /// data, using the slack block of the tableau as `B⁻¹`.
    pub fn refresh(&mut self) {
        self.refresh_duals();
        self.refresh_values();
        self.refreshes += 1;
    }

    fn refresh_duals(&mut self) {
        let (m, n, ncols) = (self.m, self.n_struct, self.ncols);
        let mut pi = vec![0.0; m];
        for r in 0..m {
            let cb = self.cost[self.basis[r] as usize];
            if cb != 0.0 {
                let row = &self.t[r * ncols + n..r * ncols + ncols];
                for (k, &v) in row.iter().enumerate() {
                    pi[k] += cb * v;
                }
            }
        }
        for j in 0..n {
            let mut dj = self.cost[j];
            for &(i, a) in &self.cols[j] {
                dj -= pi[i as usize] * a;
            }
            self.d[j] = dj;
        }
        for k in 0..m {
            self.d[n + k] = -pi[k];
        }
        for r in 0..m {
            self.d[self.basis[r] as usize] = 0.0;
        }
    }

    pub fn refresh_values(&mut self) {
        let (m, n, ncols) = (self.m, self.n_struct, self.ncols);
        let mut v = self.rhs.clone();
        for j in 0..n {
            if matches!(self.state[j], VarState::Basic(_)) {
                continue;
            }
            let xj = self.nonbasic_value(j);
            if xj != 0.0 {
                for &(i, a) in &self.cols[j] {
                    v[i as usize] -= a * xj;
                }
            }
        }
        // nonbasic slacks always rest at zero
        for r in 0..m {
            let row = &self.t[r * ncols + n..r * ncols + ncols];
            let mut acc = 0.0;
            for (k, &b) in row.iter().enumerate() {
                acc += b * v[k];
            }
            self.xb[r] = acc;
        }
    }

    /// Rebuilds the whole tableau from the original data for the current
    /// basis via Gauss-Jordan elimination with row pivoting.
    fn rebuild(&mut self) -> Result<(), SolverError> {
        let (m, n, ncols) = (self.m, self.n_struct, self.ncols);
        self.t.iter_mut().for_each(|v| *v = 0.0);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, a) in col {
                self.t[i as usize * ncols + j] = a;
            }
        }
        for i in 0..m {
            self.t[i * ncols + n + i] = 1.0;
        }
        let basis_cols: Vec<u32> = self.basis.clone();
        let mut row_of = vec![u32::MAX; basis_cols.len()];
        let mut pivoted = vec![false; m];
        for (k, &q) in basis_cols.iter().enumerate() {
            let q = q as usize;
            let mut best = (0usize, 0.0f64);
            for r in 0..m {
                if !pivoted[r] {
                    let v = self.t[r * ncols + q].abs();
                    if v > best.1 {
                        best = (r, v);
                    }
                }
            }
            if best.1 < 1e-11 {
                return Err(SolverError::NumericalFailure(
                    "singular basis during rebuild".to_string(),
                ));
            }
            let r = best.0;
            self.eliminate(r, q);
            pivoted[r] = true;
            row_of[k] = r as u32;
        }
        for (k, &q) in basis_cols.iter().enumerate() {
            let r = row_of[k] as usize;
            self.basis[r] = q;
            self.state[q as usize] = VarState::Basic(r as u32);
        }
        self.rebuilds += 1;
        self.refresh();
        Ok(())
    }

    fn eliminate(&mut self, r: usize, q: usize) {
        let ncols = self.ncols;
        let piv = self.t[r * ncols + q];
        let inv = 1.0 / piv;
        for v in &mut self.t[r * ncols..(r + 1) * ncols] {
            *v *= inv;
        }
        self.t[r * ncols + q] = 1.0;
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let factor = self.t[i * ncols + q];
            if factor == 0.0 {
                continue;
            }
            let (head, tail) = self.t.split_at_mut(r.max(i) * ncols);
            let (src, dst) = if r < i {
                (&head[r * ncols..r * ncols + ncols], &mut tail[..ncols])
            } else {
                (&tail[..ncols], &mut head[i * ncols..i * ncols + ncols])
            };
            for (dv, sv) in dst.iter_mut().zip(src.iter()) {
                *dv -= factor * sv;
            }
            self.t[i * ncols + q] = 0.0;
        }
    }

    fn violation(&self, r: usize) -> f64 {
        let j = self.basis[r] as usize;
        let x = self.xb[r];
        let lo = self.lower[j];
        let hi = self.upper[j];
        if x < lo {
            lo - x
        } else if x > hi {
            x - hi
        } else {
            0.0
        }
    }

    fn feas_tol(&self, j: usize) -> f64 {
        let lo = if self.lower[j].is_finite() { self.lower[j].abs() } else { 0.0 };
        let hi = if self.upper[j].is_finite() { self.upper[j].abs() } else { 0.0 };
        FEAS_TOL * (1.0 + lo.max(hi))
    }

    fn total_infeasibility(&self) -> f64 {
        (0..self.m).map(|r| {
            let v = self.violation(r);
            let j = self.basis[r] as usize;
            if v > self.feas_tol(j) { v } else { 0.0 }
        }).sum()
    }

    // ---------------------------------------------------------------- phase 1

    fn phase1(&mut self) -> LpOutcome {
        loop {
            if self.pivots >= self.max_pivots {
                return LpOutcome::IterationLimit;
            }
            if self.pivots % REFRESH_INTERVAL == 0 {
                self.refresh_values();
            }
            // infeasibility gradient over basic variables
            let mut kappa = vec![0.0f64; self.m];
            let mut infeasible = false;
            for r in 0..self.m {
                let j = self.basis[r] as usize;
                let tol = self.feas_tol(j);
                if self.xb[r] < self.lower[j] - tol {
                    kappa[r] = -1.0;
                    infeasible = true;
                } else if self.xb[r] > self.upper[j] + tol {
                    kappa[r] = 1.0;
                    infeasible = true;
                }
            }
            if !infeasible {
                return LpOutcome::Optimal; // phase 1 done: primal feasible
            }
            // d1[j] = dΦ/dx_j = -Σ_r kappa_r T[r][j]
            let mut entering: Option<(usize, i8, f64)> = None;
            for j in 0..self.ncols {
                if matches!(self.state[j], VarState::Basic(_)) || self.is_fixed(j) {
                    continue;
                }
                let mut d1 = 0.0;
                for r in 0..self.m {
                    let k = kappa[r];
                    if k != 0.0 {
                        d1 -= k * self.t[r * self.ncols + j];
                    }
                }
                let cand: Option<i8> = match self.state[j] {
                    VarState::AtLower | VarState::Free if d1 < -1e-9 => Some(1),
                    VarState::AtUpper if d1 > 1e-9 => Some(-1),
                    VarState::Free if d1 > 1e-9 => Some(-1),
                    _ => None,
                };
                if let Some(dir) = cand {
                    let score = d1.abs();
                    let better = match entering {
                        None => true,
                        Some((bj, _, bscore)) => {
                            if self.bland {
                                j < bj
                            } else {
                                score > bscore
                            }
                        }
                    };
                    if better {
                        entering = Some((j, dir, score));
                        if self.bland {
                            break;
                        }
                    }
                }
            }
            let Some((q, dir, _)) = entering else {
                return LpOutcome::Infeasible; // phase-1 optimal but infeasible
            };
            let before = self.total_infeasibility();
            if !self.step(q, dir, true) {
                return LpOutcome::Infeasible;
            }
            let after = self.total_infeasibility();
            self.note_progress(before - after > 1e-12);
        }
    }

    // ---------------------------------------------------------------- phase 2

    fn phase2(&mut self) -> LpOutcome {
        loop {
            if self.pivots >= self.max_pivots {
                return LpOutcome::IterationLimit;
            }
            if self.pivots % REFRESH_INTERVAL == 0 {
                self.refresh();
            }
            let Some((q, dir)) = self.price() else {
                return LpOutcome::Optimal;
            };
            let before: f64 = self.objective_value();
            if !self.step(q, dir, false) {
                return LpOutcome::Unbounded;
            }
            let after = self.objective_value();
            self.note_progress(before - after > 1e-12);
        }
    }

    fn price(&self) -> Option<(usize, i8)> {
        let mut best: Option<(usize, i8, f64)> = None;
        for j in 0..self.ncols {
            if matches!(self.state[j], VarState::Basic(_)) || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let tol = DUAL_TOL * (1.0 + self.cost[j].abs());
            let cand: Option<i8> = match self.state[j] {
                VarState::AtLower if dj < -tol => Some(1),
                VarState::AtUpper if dj > tol => Some(-1),
                VarState::Free if dj < -tol => Some(1),
                VarState::Free if dj > tol => Some(-1),
                _ => None,
            };
            if let Some(dir) = cand {
                let score = dj.abs();
                let better = match best {
                    None => true,
                    Some((bj, _, bscore)) => {
                        if self.bland {
                            j < bj
                        } else {
                            score > bscore
                        }
                    }
                };
                if better {
                    best = Some((j, dir, score));
                    if self.bland {
                        break;
                    }
                }
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// One primal ratio-test step for entering `q` moving in direction `dir`.
    /// In phase 1, infeasible basics block at the bound they are approaching
    /// from outside. Returns false when unblocked (phase 2: unbounded).
    fn step(&mut self, q: usize, dir: i8, phase1: bool) -> bool {
        let dirf = dir as f64;
        let mut t_best = f64::INFINITY;
        // bound flip of the entering variable itself
        let span = self.upper[q] - self.lower[q];
        let mut leave: Option<(usize, bool)> = None; // (row, to_upper)
        if span.is_finite() {
            t_best = span;
        }
        let mut best_alpha = 0.0f64;
        for r in 0..self.m {
            let alpha = self.t[r * self.ncols + q];
            if alpha.abs() < PIVOT_TOL {
                continue;
            }
            let slope = -dirf * alpha; // d x_basic / d t
            let bj = self.basis[r] as usize;
            let x = self.xb[r];
            let (limit, to_upper) = if slope > 0.0 {
                if phase1 && x < self.lower[bj] {
                    (self.lower[bj], false) // approaching violated lower bound
                } else if self.upper[bj].is_finite() {
                    (self.upper[bj], true)
                } else {
                    continue;
                }
            } else if phase1 && x > self.upper[bj] {
                (self.upper[bj], true)
            } else if self.lower[bj].is_finite() {
                (self.lower[bj], false)
            } else {
                continue;
            };
            let t_r = ((limit - x) / slope).max(0.0);
            let better = t_r < t_best - 1e-10
                || (t_r < t_best + 1e-10
                    && (alpha.abs() > best_alpha
                        || (leave.is_some()
                            && self.bland
                            && (self.basis[r] as usize)
                                < self.basis[leave.unwrap().0] as usize)));
            if better {
                t_best = t_r;
                leave = Some((r, to_upper));
                best_alpha = alpha.abs();
            }
        }
        if !t_best.is_finite() {
            return false;
        }
        let t_step = t_best.max(0.0);
        // move all basic values
        if t_step > 0.0 {
            for r in 0..self.m {
                let alpha = self.t[r * self.ncols + q];
                if alpha != 0.0 {
                    self.xb[r] -= dirf * t_step * alpha;
                }
            }
        }
        let entering_value = self.nonbasic_value(q) + dirf * t_step;
        match leave {
            None => {
                // bound flip, no basis change
                self.state[q] = if dir > 0 { VarState::AtUpper } else { VarState::AtLower };
                self.pivots += 1;
            }
            Some((r, to_upper)) => {
                let leaving = self.basis[r] as usize;
                self.state[leaving] = if to_upper { VarState::AtUpper } else { VarState::AtLower };
                // snap the leaving variable exactly onto its bound
                let _ = leaving;
                self.pivot(r, q);
                self.xb[r] = entering_value;
            }
        }
        true
    }

    /// Gauss-Jordan pivot plus reduced-cost update; the caller fixes `xb[r]`.
    fn pivot(&mut self, r: usize, q: usize) {
        self.eliminate(r, q);
        let dq = self.d[q];
        if dq != 0.0 {
            let row = &self.t[r * self.ncols..(r + 1) * self.ncols];
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    self.d[j] -= dq * v;
                }
            }
        }
        self.d[q] = 0.0;
        self.basis[r] = q as u32;
        self.state[q] = VarState::Basic(r as u32);
        self.pivots += 1;
    }

    fn note_progress(&mut self, progressed: bool) {
        if progressed {
            self.stall = 0;
            self.bland = false;
        } else {
            self.stall += 1;
            if self.stall >= STALL_LIMIT {
                self.bland = true;
            }
        }
    }

    // ------------------------------------------------------------ dual simplex

    /// Re-optimizes after bound changes starting from a dual-feasible basis.
    pub fn dual_resolve(&mut self) -> LpOutcome {
        // restore dual feasibility of nonbasic statuses by bound flips
        for j in 0..self.ncols {
            if matches!(self.state[j], VarState::Basic(_)) || self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            match self.state[j] {
                VarState::AtLower if dj < -DUAL_TOL && self.upper[j].is_finite() => {
                    self.state[j] = VarState::AtUpper;
                }
                VarState::AtUpper if dj > DUAL_TOL && self.lower[j].is_finite() => {
                    self.state[j] = VarState::AtLower;
                }
                _ => {}
            }
        }
        self.refresh_values();
        loop {
            if self.pivots >= self.max_pivots {
                return LpOutcome::IterationLimit;
            }
            if self.pivots % REFRESH_INTERVAL == 0 {
                self.refresh_values();
            }
            // most violated basic row
            let mut worst: Option<(usize, f64)> = None;
            for r in 0..self.m {
                let v = self.violation(r);
                let j = self.basis[r] as usize;
                if v > self.feas_tol(j) && worst.map_or(true, |(_, wv)| v > wv) {
                    worst = Some((r, v));
                }
            }
            let Some((r, _)) = worst else {
                // primal feasible; polish with primal pricing in case duals drifted
                self.refresh();
                return self.phase2();
            };
            let bj = self.basis[r] as usize;
            let below = self.xb[r] < self.lower[bj];
            let bound = if below { self.lower[bj] } else { self.upper[bj] };
            // entering column by dual ratio test
            let mut enter: Option<(usize, f64, f64)> = None; // (col, ratio, |alpha|)
            for j in 0..self.ncols {
                if matches!(self.state[j], VarState::Basic(_)) || self.is_fixed(j) {
                    continue;
                }
                let alpha = self.t[r * self.ncols + j];
                if alpha.abs() < PIVOT_TOL {
                    continue;
                }
                let eligible = match self.state[j] {
                    VarState::AtLower => {
                        if below { alpha < 0.0 } else { alpha > 0.0 }
                    }
                    VarState::AtUpper => {
                        if below { alpha > 0.0 } else { alpha < 0.0 }
                    }
                    // a free nonbasic variable can compensate in either
                    // direction
                    VarState::Free => true,
                    VarState::Basic(_) => false,
                };
                if !eligible {
                    continue;
                }
                let ratio = (self.d[j] / alpha).abs();
                let better = match enter {
                    None => true,
                    Some((ej, er, ea)) => {
                        if self.bland {
                            j < ej
                        } else {
                            ratio < er - 1e-12 || (ratio < er + 1e-12 && alpha.abs() > ea)
                        }
                    }
                };
                if better {
                    enter = Some((j, ratio, alpha.abs()));
                }
            }
            let Some((q, _, _)) = enter else {
                return LpOutcome::Infeasible;
            };
            let alpha = self.t[r * self.ncols + q];
            let delta = (self.xb[r] - bound) / alpha; // change of entering value
            let entering_value = self.nonbasic_value(q) + delta;
            for i in 0..self.m {
                if i == r {
                    continue;
                }
                let a = self.t[i * self.ncols + q];
                if a != 0.0 {
                    self.xb[i] -= delta * a;
                }
            }
            self.state[bj] = if below { VarState::AtLower } else { VarState::AtUpper };
            self.pivot(r, q);
            self.xb[r] = entering_value;
            self.note_progress(delta.abs() > 1e-12);
        }
    }

    // ------------------------------------------------------------- top level

    pub fn primal_solve(&mut self) -> LpOutcome {
        let p1 = self.phase1();
        if p1 != LpOutcome::Optimal {
            return p1;
        }
        self.refresh();
        let out = self.phase2();
        if out != LpOutcome::Optimal {
            return out;
        }
        // exact verification; continue pivoting if the refreshed data disagrees
        self.refresh();
        if self.total_infeasibility() > 0.0 {
            let p1 = self.phase1();
            if p1 != LpOutcome::Optimal {
                return p1;
            }
        }
        if self.price().is_some() {
            return self.phase2();
        }
        LpOutcome::Optimal
    }

    /// Resets to the all-slack basis and re-solves from scratch.
    pub fn reset_and_solve(&mut self) -> LpOutcome {
        let (m, n, ncols) = (self.m, self.n_struct, self.ncols);
        self.t.iter_mut().for_each(|v| *v = 0.0);
        for (j, col) in self.cols.iter().enumerate() {
            for &(i, a) in col {
                self.t[i as usize * ncols + j] = a;
            }
        }
        for i in 0..m {
            self.t[i * ncols + n + i] = 1.0;
        }
        for j in 0..n {
            self.state[j] = initial_state(self.lower[j], self.upper[j]);
        }
        for i in 0..m {
            self.basis[i] = (n + i) as u32;
            self.state[n + i] = VarState::Basic(i as u32);
        }
        self.d.copy_from_slice(&self.cost);
        self.bland = false;
        self.stall = 0;
        self.refresh_values();
        self.primal_solve()
    }

    pub fn set_var_bounds(&mut self, j: usize, lo: f64, hi: f64) {
        self.lower[j] = lo;
        self.upper[j] = hi;
        match self.state[j] {
            VarState::Basic(_) => {}
            _ => {
                self.state[j] = if lo.is_finite() {
                    VarState::AtLower
                } else if hi.is_finite() {
                    VarState::AtUpper
                } else {
                    VarState::Free
                };
                // caller refreshes values before re-solving
            }
        }
    }

    pub fn objective_value(&self) -> f64 {
        (0..self.ncols)
            .map(|j| self.cost[j] * self.nonbasic_value(j))
            .sum()
    }

    pub fn primal_values(&self) -> Vec<f64> {
        (0..self.n_struct).map(|j| self.nonbasic_value(j)).collect()
    }

    /// Textbook row duals `π = c_B B⁻¹`, read off the slack reduced costs.
    pub fn row_duals_raw(&self) -> Vec<f64> {
        (0..self.m).map(|k| -self.d[self.n_struct + k]).collect()
    }

    /// (primal residual, dual residual, duality gap), exact from input data.
    pub fn residuals(&self) -> (f64, f64, f64) {
        let x: Vec<f64> = (0..self.ncols).map(|j| self.nonbasic_value(j)).collect();
        let mut primal: f64 = 0.0;
        for (j, &xj) in x.iter().enumerate() {
            let lo = self.lower[j];
            let hi = self.upper[j];
            let scale = 1.0 + xj.abs();
            if xj < lo {
                primal = primal.max((lo - xj) / scale);
            }
            if xj > hi {
                primal = primal.max((xj - hi) / scale);
            }
        }
        // row balance: Ax + s = b
        let mut activity = self.rhs.clone();
        for (j, col) in self.cols.iter().enumerate() {
            if x[j] != 0.0 {
                for &(i, a) in col {
                    activity[i as usize] -= a * x[j];
                }
            }
        }
        for i in 0..self.m {
            let resid = (activity[i] - x[self.n_struct + i]).abs();
            primal = primal.max(resid / (1.0 + self.rhs[i].abs()));
        }
        // dual sign conditions on refreshed reduced costs
        let mut dual: f64 = 0.0;
        for j in 0..self.ncols {
            if self.is_fixed(j) {
                continue;
            }
            let dj = self.d[j];
            let scale = 1.0 + self.cost[j].abs();
            match self.state[j] {
                VarState::Basic(_) => {}
                VarState::AtLower => dual = dual.max(-dj / scale),
                VarState::AtUpper => dual = dual.max(dj / scale),
                VarState::Free => dual = dual.max(dj.abs() / scale),
            }
        }
        // gap: cᵀx vs πᵀb + Σ_nonbasic d_j x_j
        let pi = self.row_duals_raw();
        let mut dual_obj: f64 = pi.iter().zip(self.rhs.iter()).map(|(p, b)| p * b).sum();
        for j in 0..self.ncols {
            if !matches!(self.state[j], VarState::Basic(_)) {
                let xj = self.nonbasic_value(j);
                if xj != 0.0 {
                    dual_obj += self.d[j] * xj;
                }
            }
        }
        let obj = self.objective_value();
        let gap = (obj - dual_obj).abs();
        (primal, dual, gap)
    }

    pub fn needs_rebuild(&self) -> bool {
        let (p, d, _) = self.residuals();
        p > 1e-5 || d > 1e-5
    }

    pub fn try_rebuild(&mut self) -> Result<(), SolverError> {
        self.rebuild()
    }
}

fn initial_state(lo: f64, hi: f64) -> VarState {
    if lo.is_finite() {
        VarState::AtLower
    } else if hi.is_finite() {
        VarState::AtUpper
    } else {
        VarState::Free
    }
}

/// Solves a pure LP and packages the audited solution.
pub(crate) fn solve(p: &Problem) -> Result<Solution, SolverError> {
    let mut tab = Tableau::new(p);
    let mut outcome = tab.primal_solve();
    if outcome == LpOutcome::Optimal && tab.needs_rebuild() {
        tab.try_rebuild()?;
        outcome = tab.primal_solve();
    }
    finalize(p, &mut tab, outcome)
}

pub(crate) fn finalize(
    p: &Problem,
    tab: &mut Tableau,
    outcome: LpOutcome,
) -> Result<Solution, SolverError> {
    let status = match outcome {
        LpOutcome::Optimal => Status::Optimal,
        LpOutcome::Infeasible => Status::Infeasible,
        LpOutcome::Unbounded => Status::Unbounded,
        LpOutcome::IterationLimit => Status::IterationLimit,
    };
    let mut stats = SolveStats {
        pivots: tab.pivots,
        refreshes: tab.refreshes,
        rebuilds: tab.rebuilds,
        ..SolveStats::default()
    };
    if status != Status::Optimal {
        return Ok(Solution {
            status,
            objective: f64::NAN,
            primal: Vec::new(),
            row_duals: Vec::new(),
            stats,
        });
    }
    tab.refresh();
    let (pr, dr, gap) = tab.residuals();
    stats.primal_residual = pr;
    stats.dual_residual = dr;
    stats.duality_gap = gap;
    let objective = tab.objective_value();
    if pr > 1e-6 || dr > 1e-6 {
        return Err(SolverError::NumericalFailure(format!(
            "residuals beyond tolerance: primal {pr:.3e}, dual {dr:.3e}"
        )));
    }
    let gap_ok = gap <= 1e-6 * (1.0 + objective.abs());
    record_lp_audit(gap_ok);
    if !gap_ok {
        return Err(SolverError::NumericalFailure(format!(
            "duality gap {gap:.3e} beyond tolerance"
        )));
    }
    // report duals nonnegative for inequality rows
    let raw = tab.row_duals_raw();
    let row_duals = p
        .constraints
        .iter()
        .zip(raw.iter())
        .map(|(row, &pi)| match row.sense {
            Sense::Le => -pi,
            Sense::Ge | Sense::Eq => pi,
        })
        .collect();
    Ok(Solution {
        status,
        objective,
        primal: tab.primal_values(),
        row_duals,
        stats,
    })
}
