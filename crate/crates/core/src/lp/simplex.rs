//! Dense two-phase primal simplex on a full tableau.
//!
//! Standard form: free variables are split as `v = v⁺ − v⁻`, every row gets a
//! slack, rows are scaled to unit max-norm, and rows with a negative
//! right-hand side are negated and given an artificial column for phase 1.
//!
//! Pricing is Dantzig's rule. After a run of consecutive degenerate pivots
//! the phase switches permanently to Bland's rule (smallest index entering,
//! smallest basic index on ratio ties), which guarantees termination.

use std::sync::Arc;

use super::{LinearProgram, LpBackend, LpError, LpSolution, LpStatus, VarBound, WarmStart};

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-9;
const DROP_TOL: f64 = 1e-14;
const RESIDUAL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug)]
pub struct SimplexOptions {
    /// Pivot cap across both phases; `None` picks a size-dependent default.
    pub max_iterations: Option<usize>,
    /// Consecutive degenerate pivots tolerated before switching to Bland's rule.
    pub degenerate_switch: usize,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self { max_iterations: None, degenerate_switch: 50 }
    }
}

/// The bundled solver.
#[derive(Clone, Copy, Debug, Default)]
pub struct DenseSimplex {
    pub options: SimplexOptions,
}

impl LpBackend for DenseSimplex {
    fn solve(&self, lp: &LinearProgram, warm: Option<&WarmStart>) -> Result<LpSolution, LpError> {
        lp.validate()?;
        let fingerprint = lp.constraint_fingerprint();
        let mut tab = None;
        if let Some(w) = warm.filter(|w| w.fingerprint == fingerprint) {
            tab = match &w.state {
                Some(state) => Some(Tableau::clone(state)),
                None => Tableau::build(lp).refactor(&w.basis),
            };
        }
        let warm_started = tab.is_some();
        let mut tab = tab.unwrap_or_else(|| Tableau::build(lp));
        let limit = self
            .options
            .max_iterations
            .unwrap_or_else(|| 50_000.max(20 * (tab.m + tab.ncols)));
        let mut iterations = 0;

        if !warm_started && tab.art_start < tab.ncols {
            let costs: Vec<f64> =
                (0..tab.ncols).map(|j| if j >= tab.art_start { -1.0 } else { 0.0 }).collect();
            tab.set_costs(&costs);
            match tab.run(&self.options, limit, &mut iterations, true)? {
                Phase::Optimal => {}
                Phase::Unbounded(_) => {
                    return Err(LpError::Numerical("phase 1 reported unbounded".into()))
                }
            }
            let infeasibility: f64 = tab
                .basis
                .iter()
                .enumerate()
                .filter(|(_, &b)| b >= tab.art_start)
                .map(|(i, _)| tab.rhs(i).max(0.0))
                .sum();
            let scale = 1.0 + tab.max_abs_rhs();
            if infeasibility > 1e-9 * scale {
                return Ok(LpSolution {
                    status: LpStatus::Infeasible,
                    x: vec![0.0; lp.num_vars()],
                    objective: f64::NAN,
                    duals: None,
                    ray: None,
                    iterations,
                    warm: None,
                });
            }
            tab.drive_out_artificials();
        }

        let costs = tab.phase2_costs(lp);
        tab.set_costs(&costs);
        let outcome = tab.run(&self.options, limit, &mut iterations, false)?;
        let mut x = tab.primal(lp.num_vars());

        match outcome {
            Phase::Unbounded(q) => {
                let ray = tab.ray(q, lp.num_vars());
                verify_ray(lp, &ray)?;
                Ok(LpSolution {
                    status: LpStatus::Unbounded,
                    objective: lp.objective_value(&x),
                    x,
                    duals: None,
                    ray: Some(ray),
                    iterations,
                    warm: None,
                })
            }
            Phase::Optimal => {
                if max_violation(lp, &tab, &x) > RESIDUAL_TOL {
                    if let Some(polished) = tab.polish(lp) {
                        x = polished;
                    }
                    let v = max_violation(lp, &tab, &x);
                    if v > 1e-7 {
                        return Err(LpError::Numerical(format!(
                            "scaled residual {v:.3e} after refactorization"
                        )));
                    }
                    if v > RESIDUAL_TOL {
                        log::warn!("simplex finished with scaled residual {v:.3e}");
                    }
                }
                let duals = tab.duals();
                let warm = WarmStart {
                    fingerprint,
                    basis: tab.basis.clone(),
                    state: Some(Arc::new(tab)),
                };
                Ok(LpSolution {
                    status: LpStatus::Optimal,
                    objective: lp.objective_value(&x),
                    x,
                    duals: Some(duals),
                    ray: None,
                    iterations,
                    warm: Some(warm),
                })
            }
        }
    }

    fn name(&self) -> &str {
        "dense-simplex"
    }
}

fn max_violation(lp: &LinearProgram, tab: &Tableau, x: &[f64]) -> f64 {
    let mut worst = 0.0f64;
    for (r, row) in lp.rows.iter().enumerate() {
        let excess = (lp.row_activity(r, x) - row.rhs) / tab.row_scale[r];
        worst = worst.max(excess);
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        if *b == VarBound::NonNegative {
            worst = worst.max(-x[j]);
        }
    }
    worst
}

fn verify_ray(lp: &LinearProgram, ray: &[f64]) -> Result<(), LpError> {
    let gain = lp.objective_value(ray);
    let norm = ray.iter().map(|v| v.abs()).fold(0.0, f64::max);
    if !(gain > 0.0) || norm == 0.0 {
        return Err(LpError::Numerical("unbounded ray does not improve the objective".into()));
    }
    for (r, row) in lp.rows.iter().enumerate() {
        let scale = row.coeffs.iter().map(|c| c.1.abs()).fold(0.0, f64::max).max(1e-300);
        if lp.row_activity(r, ray) / scale > 1e-7 * norm {
            return Err(LpError::Numerical(format!("unbounded ray violates row {r}")));
        }
    }
    for (j, b) in lp.bounds.iter().enumerate() {
        if *b == VarBound::NonNegative && ray[j] < -1e-7 * norm {
            return Err(LpError::Numerical("unbounded ray violates a sign bound".into()));
        }
    }
    Ok(())
}

enum Phase {
    Optimal,
    Unbounded(usize),
}

/// Column `j` of the standard form maps to original variable `var` with `sign`.
#[derive(Clone, Copy, Debug)]
struct StructCol {
    var: usize,
    sign: f64,
}

#[derive(Clone, Debug)]
pub(crate) struct Tableau {
    m: usize,
    ncols: usize,
    width: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    red: Vec<f64>,
    structs: Vec<StructCol>,
    slack_start: usize,
    art_start: usize,
    row_scale: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let mut structs = Vec::new();
        let mut var_cols = vec![(usize::MAX, usize::MAX); lp.num_vars()];
        for (j, b) in lp.bounds.iter().enumerate() {
            var_cols[j].0 = structs.len();
            structs.push(StructCol { var: j, sign: 1.0 });
            if *b == VarBound::Free {
                var_cols[j].1 = structs.len();
                structs.push(StructCol { var: j, sign: -1.0 });
            }
        }
        let m = lp.num_rows();
        let slack_start = structs.len();
        let art_start = slack_start + m;

        let mut row_scale = Vec::with_capacity(m);
        let mut row_sign = Vec::with_capacity(m);
        for row in &lp.rows {
            let s = row.coeffs.iter().map(|c| c.1.abs()).fold(0.0, f64::max);
            let s = if s > 0.0 { s } else { 1.0 };
            row_scale.push(s);
            row_sign.push(if row.rhs / s < 0.0 { -1.0 } else { 1.0 });
        }
        let n_art = row_sign.iter().filter(|&&s| s < 0.0).count();
        let ncols = art_start + n_art;
        let width = ncols + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = Vec::with_capacity(m);
        let mut next_art = art_start;
        for (i, row) in lp.rows.iter().enumerate() {
            let f = row_sign[i] / row_scale[i];
            let r = &mut data[i * width..(i + 1) * width];
            for &(j, a) in &row.coeffs {
                let (p, q) = var_cols[j];
                r[p] += f * a;
                if q != usize::MAX {
                    r[q] -= f * a;
                }
            }
            r[slack_start + i] = row_sign[i];
            r[ncols] = f * row.rhs;
            if row_sign[i] < 0.0 {
                r[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(slack_start + i);
            }
        }
        Self {
            m,
            ncols,
            width,
            data,
            basis,
            red: vec![0.0; width],
            structs,
            slack_start,
            art_start,
            row_scale,
        }
    }

    #[inline]
    fn rhs(&self, i: usize) -> f64 {
        self.data[i * self.width + self.ncols]
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn max_abs_rhs(&self) -> f64 {
        (0..self.m).map(|i| self.rhs(i).abs()).fold(0.0, f64::max)
    }

    fn phase2_costs(&self, lp: &LinearProgram) -> Vec<f64> {
        let mut c = vec![0.0; self.ncols];
        for (j, s) in self.structs.iter().enumerate() {
            c[j] = s.sign * lp.objective[s.var];
        }
        c
    }

    /// Installs `costs` and recomputes the reduced-cost row `c − c_B B⁻¹A`.
    fn set_costs(&mut self, costs: &[f64]) {
        let w = self.width;
        self.red.iter_mut().for_each(|v| *v = 0.0);
        self.red[..self.ncols].copy_from_slice(costs);
        for i in 0..self.m {
            let cb = costs[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.data[i * w..(i + 1) * w];
            for (r, a) in self.red.iter_mut().zip(row) {
                *r -= cb * a;
            }
        }
        for &b in &self.basis {
            self.red[b] = 0.0;
        }
    }

    fn enterable(&self, j: usize, phase1: bool) -> bool {
        phase1 || j < self.art_start
    }

    fn run(
        &mut self,
        opts: &SimplexOptions,
        limit: usize,
        iterations: &mut usize,
        phase1: bool,
    ) -> Result<Phase, LpError> {
        let mut bland = false;
        let mut degenerate_run = 0usize;
        loop {
            let entering = if bland {
                (0..self.ncols).find(|&j| self.enterable(j, phase1) && self.red[j] > OPT_TOL)
            } else {
                let mut best = None;
                let mut best_val = OPT_TOL;
                for j in 0..self.ncols {
                    if self.red[j] > best_val && self.enterable(j, phase1) {
                        best_val = self.red[j];
                        best = Some(j);
                    }
                }
                best
            };
            let Some(q) = entering else {
                return Ok(Phase::Optimal);
            };

            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for i in 0..self.m {
                let a = self.at(i, q);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(i).max(0.0) / a;
                let better = match leave {
                    None => true,
                    Some(l) => {
                        let tie = (ratio - best_ratio).abs() <= 1e-12 * (1.0 + best_ratio.abs());
                        if tie {
                            if bland {
                                self.basis[i] < self.basis[l]
                            } else {
                                a > self.at(l, q)
                            }
                        } else {
                            ratio < best_ratio
                        }
                    }
                };
                if better {
                    leave = Some(i);
                    best_ratio = ratio.min(best_ratio);
                }
            }
            let Some(p) = leave else {
                return Ok(Phase::Unbounded(q));
            };

            *iterations += 1;
            if *iterations > limit {
                return Err(LpError::IterationLimit(limit));
            }
            if best_ratio <= 1e-12 {
                degenerate_run += 1;
                if degenerate_run > opts.degenerate_switch {
                    bland = true;
                }
            } else {
                degenerate_run = 0;
            }
            self.pivot(p, q);
        }
    }

    fn pivot(&mut self, p: usize, q: usize) {
        let w = self.width;
        let piv = self.data[p * w + q];
        {
            let prow = &mut self.data[p * w..(p + 1) * w];
            for v in prow.iter_mut() {
                *v /= piv;
            }
            prow[q] = 1.0;
        }
        let prow: Vec<f64> = self.data[p * w..(p + 1) * w].to_vec();
        let nz: Vec<usize> = (0..w).filter(|&j| prow[j] != 0.0).collect();
        for i in 0..self.m {
            if i == p {
                continue;
            }
            let f = self.data[i * w + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[i * w..(i + 1) * w];
            for &j in &nz {
                let v = row[j] - f * prow[j];
                row[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            row[q] = 0.0;
        }
        let f = self.red[q];
        if f != 0.0 {
            for &j in &nz {
                let v = self.red[j] - f * prow[j];
                self.red[j] = if v.abs() < DROP_TOL { 0.0 } else { v };
            }
            self.red[q] = 0.0;
        }
        self.basis[p] = q;
    }

    /// Pivots basic artificials (at zero level) out wherever a usable column exists.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if self.basis[i] < self.art_start {
                continue;
            }
            let mut best = None;
            let mut best_abs = 1e-9;
            for j in 0..self.art_start {
                let a = self.at(i, j).abs();
                if a > best_abs && !self.basis.contains(&j) {
                    best_abs = a;
                    best = Some(j);
                }
            }
            if let Some(j) = best {
                self.pivot(i, j);
            }
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut vals = vec![0.0; self.ncols];
        for (i, &b) in self.basis.iter().enumerate() {
            vals[b] = self.rhs(i);
        }
        vals
    }

    fn primal(&self, num_vars: usize) -> Vec<f64> {
        let vals = self.column_values();
        let mut x = vec![0.0; num_vars];
        for (j, s) in self.structs.iter().enumerate() {
            x[s.var] += s.sign * vals[j];
        }
        x
    }

    fn ray(&self, q: usize, num_vars: usize) -> Vec<f64> {
        let mut dir = vec![0.0; self.ncols];
        dir[q] = 1.0;
        for (i, &b) in self.basis.iter().enumerate() {
            dir[b] -= self.at(i, q);
        }
        let mut ray = vec![0.0; num_vars];
        for (j, s) in self.structs.iter().enumerate() {
            ray[s.var] += s.sign * dir[j];
        }
        ray
    }

    /// Row multipliers of the original (unscaled) rows.
    fn duals(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| {
                let y = -self.red[self.slack_start + i] / self.row_scale[i];
                if y.abs() < 1e-13 {
                    0.0
                } else {
                    y
                }
            })
            .collect()
    }

    /// Recomputes the basic values from the original data by Gaussian
    /// elimination on the basis matrix.
    fn polish(&self, lp: &LinearProgram) -> Option<Vec<f64>> {
        let m = self.m;
        let fresh = Tableau::build(lp);
        let mut mat = vec![0.0; m * (m + 1)];
        for i in 0..m {
            for (c, &b) in self.basis.iter().enumerate() {
                mat[i * (m + 1) + c] = fresh.at(i, b);
            }
            mat[i * (m + 1) + m] = fresh.rhs(i);
        }
        let sol = gauss_solve(&mut mat, m)?;
        let mut vals = vec![0.0; self.ncols];
        for (c, &b) in self.basis.iter().enumerate() {
            vals[b] = sol[c];
        }
        let mut x = vec![0.0; lp.num_vars()];
        for (j, s) in self.structs.iter().enumerate() {
            x[s.var] += s.sign * vals[j];
        }
        Some(x)
    }

    /// Rebuilds the tableau for `basis`; `None` if singular or infeasible.
    fn refactor(mut self, basis: &[usize]) -> Option<Self> {
        if basis.len() != self.m || basis.iter().any(|&b| b >= self.ncols) {
            return None;
        }
        let mut assigned = vec![false; self.m];
        let mut order: Vec<usize> = basis.to_vec();
        // already-basic columns (slacks/artificials) first keeps pivots sparse
        order.sort_by_key(|b| !self.basis.contains(b));
        for &col in &order {
            if let Some(i) = self.basis.iter().position(|&b| b == col) {
                if !assigned[i] {
                    assigned[i] = true;
                    continue;
                }
            }
            let mut best = None;
            let mut best_abs = 1e-9;
            for i in 0..self.m {
                if !assigned[i] && self.at(i, col).abs() > best_abs {
                    best_abs = self.at(i, col).abs();
                    best = Some(i);
                }
            }
            let i = best?;
            self.pivot(i, col);
            assigned[i] = true;
        }
        let scale = 1.0 + self.max_abs_rhs();
        if (0..self.m).any(|i| self.rhs(i) < -1e-9 * scale) {
            return None;
        }
        if self
            .basis
            .iter()
            .enumerate()
            .any(|(i, &b)| b >= self.art_start && self.rhs(i) > 1e-9 * scale)
        {
            return None;
        }
        Some(self)
    }
}

/// Solves the `m × m` system stored row-major with the rhs in column `m`.
fn gauss_solve(mat: &mut [f64], m: usize) -> Option<Vec<f64>> {
    let w = m + 1;
    for col in 0..m {
        let piv = (col..m).max_by(|&a, &b| {
            mat[a * w + col].abs().partial_cmp(&mat[b * w + col].abs()).unwrap()
        })?;
        if mat[piv * w + col].abs() < 1e-14 {
            return None;
        }
        if piv != col {
            for j in 0..w {
                mat.swap(piv * w + j, col * w + j);
            }
        }
        let d = mat[col * w + col];
        for r in col + 1..m {
            let f = mat[r * w + col] / d;
            if f == 0.0 {
                continue;
            }
            for j in col..w {
                mat[r * w + j] -= f * mat[col * w + j];
            }
        }
    }
    let mut x = vec![0.0; m];
    for r in (0..m).rev() {
        let mut s = mat[r * w + m];
        for j in r + 1..m {
            s -= mat[r * w + j] * x[j];
        }
        x[r] = s / mat[r * w + r];
    }
    Some(x)
}
