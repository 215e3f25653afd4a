//! Linear programs for fixed sites and the free-site feasibility system.
//!
//! Column layout is fixed for every fixed-site program: `γ_2..γ_k` (free,
//! `γ_1 = 0`), then `ε` (free), then the margin-error slacks `ξ ≥ 0` in
//! `(l, j)` lexicographic order. Rows appear in the same `(l, j)` order.

use crate::error::{Error, Result};
use crate::geometry::{dot, Dataset, PowerDiagram, SiteSet, Slacks, SoftSolution, Variant, TAU_NUM};
use crate::lp::{LinearProgram, LpSolution, LpStatus, VarBound};

/// Penalty coefficient `f_t = (t + ½)/(t(t + 1))`, strictly between
/// `1/(t + 1)` and `1/t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CoefficientF {
    pub t: usize,
    pub value: f64,
}

impl CoefficientF {
    pub fn new(t: usize) -> Result<Self> {
        if t == 0 {
            return Err(Error::InvalidParameter(
                "t must be at least 1; use the hard-margin program for t = 0".into(),
            ));
        }
        let tf = t as f64;
        Ok(Self { t, value: (tf + 0.5) / (tf * (tf + 1.0)) })
    }
}

/// `σ_ij = max_{x ∈ C_i} s_ijᵀx` for all ordered pairs, with pair distances.
#[derive(Clone, Debug, PartialEq)]
pub struct SigmaMatrix {
    k: usize,
    sigma: Vec<f64>,
    dist: Vec<f64>,
}

impl SigmaMatrix {
    pub fn new(data: &Dataset, sites: &SiteSet) -> Result<Self> {
        check_inputs(data, sites)?;
        let k = sites.k();
        let mut sigma = vec![f64::NEG_INFINITY; k * k];
        let mut dist = vec![0.0; k * k];
        for i in 0..k {
            for j in (0..k).filter(|&j| j != i) {
                let (dir, norm) = sites.pair_direction(i, j)?;
                dist[i * k + j] = norm;
                sigma[i * k + j] =
                    data.members(i).map(|l| dot(&dir, data.point(l))).fold(f64::NEG_INFINITY, f64::max);
            }
        }
        Ok(Self { k, sigma, dist })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sigma(&self, i: usize, j: usize) -> f64 {
        self.sigma[i * self.k + j]
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.k + j]
    }

    /// Unnormalized `σ′_ij = max_{x ∈ C_i} (s_j − s_i)ᵀx`.
    pub fn sigma_unnormalized(&self, i: usize, j: usize) -> f64 {
        self.sigma(i, j) * self.distance(i, j)
    }
}

fn check_inputs(data: &Dataset, sites: &SiteSet) -> Result<()> {
    if data.d() != sites.d() {
        return Err(Error::DimensionMismatch { expected: sites.d(), actual: data.d() });
    }
    if data.k() != sites.k() {
        return Err(Error::ClusterMismatch { expected: sites.k(), actual: data.k() });
    }
    Ok(())
}

/// Column of `γ_i` (none for `γ_1`, which is fixed to zero).
fn gamma_col(i: usize) -> Option<usize> {
    i.checked_sub(1)
}

/// Pushes the coefficients of `ε − (γ_j − γ_i)/d` for a row.
fn margin_row(k: usize, i: usize, j: usize, norm: f64) -> Vec<(usize, f64)> {
    let mut coeffs = Vec::with_capacity(4);
    if let Some(c) = gamma_col(j) {
        coeffs.push((c, -1.0 / norm));
    }
    if let Some(c) = gamma_col(i) {
        coeffs.push((c, 1.0 / norm));
    }
    coeffs.sort_by_key(|c| c.0);
    coeffs.push((k - 1, 1.0));
    coeffs
}

fn base_names(k: usize) -> Vec<String> {
    let mut names: Vec<String> = (2..=k).map(|i| format!("G{i}")).collect();
    names.push("EPS".into());
    names
}

/// Hard-margin program over `γ_2..γ_k, ε`: `max ε` s.t. `σ_ij + ε ≤ γ_ij`
/// for all ordered pairs, `k(k − 1)` rows.
pub fn build_pspd_fixed(sigma: &SigmaMatrix) -> LinearProgram {
    let k = sigma.k();
    let mut objective = vec![0.0; k];
    objective[k - 1] = 1.0;
    let mut lp = LinearProgram::new(objective, vec![VarBound::Free; k]).with_names(base_names(k));
    for i in 0..k {
        for j in (0..k).filter(|&j| j != i) {
            lp.add_row(margin_row(k, i, j, sigma.distance(i, j)), -sigma.sigma(i, j));
        }
    }
    lp
}

/// Hard-margin program with one row per (point, other cluster) pair instead
/// of the aggregated `σ`. Same optimum as [`build_pspd_fixed`].
pub fn build_pspd_pointwise(data: &Dataset, sites: &SiteSet) -> Result<LinearProgram> {
    check_inputs(data, sites)?;
    let k = sites.k();
    let mut objective = vec![0.0; k];
    objective[k - 1] = 1.0;
    let mut lp = LinearProgram::new(objective, vec![VarBound::Free; k]).with_names(base_names(k));
    for (l, x) in data.points().enumerate() {
        let i = data.label(l);
        for j in (0..k).filter(|&j| j != i) {
            let (dir, norm) = sites.pair_direction(i, j)?;
            lp.add_row(margin_row(k, i, j, norm), -dot(&dir, x));
        }
    }
    Ok(lp)
}

fn build_soft(data: &Dataset, sites: &SiteSet, t: usize, variant: Variant) -> Result<LinearProgram> {
    check_inputs(data, sites)?;
    let f = CoefficientF::new(t)?.value;
    let (n, k) = (data.n(), sites.k());
    let n_xi = match variant {
        Variant::Mme => n * (k - 1),
        Variant::Mep => n,
    };
    let nv = k + n_xi;
    let mut objective = vec![-f; nv];
    objective[..k - 1].iter_mut().for_each(|c| *c = 0.0);
    objective[k - 1] = 1.0;
    let mut bounds = vec![VarBound::Free; k];
    bounds.resize(nv, VarBound::NonNegative);
    let mut names = base_names(k);
    names.extend((1..=n_xi).map(|m| format!("X{m}")));
    let mut lp = LinearProgram::new(objective, bounds).with_names(names);

    let mut dirs = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            dirs.push(if i == j { None } else { Some(sites.pair_direction(i, j)?) });
        }
    }
    let mut pair = 0;
    for (l, x) in data.points().enumerate() {
        let i = data.label(l);
        for j in (0..k).filter(|&j| j != i) {
            let (dir, norm) = dirs[i * k + j].as_ref().expect("off-diagonal pair");
            let mut coeffs = margin_row(k, i, j, *norm);
            let xi = match variant {
                Variant::Mme => k + pair,
                Variant::Mep => k + l,
            };
            coeffs.push((xi, -1.0));
            lp.add_row(coeffs, -dot(dir, x));
            pair += 1;
        }
    }
    Ok(lp)
}

/// Soft program with one `ξ_jl` per pair: `max ε − f_t Σ ξ_jl`.
pub fn build_pmme_fixed(data: &Dataset, sites: &SiteSet, t: usize) -> Result<LinearProgram> {
    build_soft(data, sites, t, Variant::Mme)
}

/// Soft program with one `ξ_l` per point: `max ε − f_t Σ ξ_l`.
pub fn build_pmep_fixed(data: &Dataset, sites: &SiteSet, t: usize) -> Result<LinearProgram> {
    build_soft(data, sites, t, Variant::Mep)
}

pub fn build_soft_fixed(
    data: &Dataset,
    sites: &SiteSet,
    t: usize,
    variant: Variant,
) -> Result<LinearProgram> {
    build_soft(data, sites, t, variant)
}

/// Feasibility system for a separating diagram with free sites.
///
/// Columns: site coordinates `s_1..s_k` (`k·d`, free), then `γ_2..γ_k`
/// (free, `γ_1 = 0`). Rows: `(s_j − s_i)ᵀx_l − (γ_j − γ_i) ≤ 0` for every
/// point and `j ≠ c(l)`, then `(s_j − s_i)ᵀ(c_j − c_i) ≥ 1` for `i < j`.
pub fn build_feasibility_free_sites(data: &Dataset) -> LinearProgram {
    let (k, d) = (data.k(), data.d());
    let nv = k * d + k - 1;
    let mut names: Vec<String> =
        (0..k).flat_map(|i| (0..d).map(move |a| format!("S{}_{}", i + 1, a + 1))).collect();
    names.extend((2..=k).map(|i| format!("G{i}")));
    let mut lp = LinearProgram::new(vec![0.0; nv], vec![VarBound::Free; nv]).with_names(names);
    let site = |i: usize, a: usize| i * d + a;
    let gamma = |i: usize| gamma_col(i).map(|c| k * d + c);

    for (l, x) in data.points().enumerate() {
        let i = data.label(l);
        for j in (0..k).filter(|&j| j != i) {
            let mut coeffs = Vec::with_capacity(2 * d + 2);
            for (a, &xa) in x.iter().enumerate() {
                coeffs.push((site(j, a), xa));
                coeffs.push((site(i, a), -xa));
            }
            if let Some(c) = gamma(j) {
                coeffs.push((c, -1.0));
            }
            if let Some(c) = gamma(i) {
                coeffs.push((c, 1.0));
            }
            lp.add_row(coeffs, 0.0);
        }
    }
    let means = data.cluster_means();
    for i in 0..k {
        for j in i + 1..k {
            let mut coeffs = Vec::with_capacity(2 * d);
            for a in 0..d {
                let diff = means[j][a] - means[i][a];
                coeffs.push((site(j, a), -diff));
                coeffs.push((site(i, a), diff));
            }
            lp.add_row(coeffs, -1.0);
        }
    }
    lp
}

/// Result of reading a fixed-site soft program back.
#[derive(Clone, Debug, PartialEq)]
pub enum SoftOutcome {
    Optimal(SoftSolution),
    /// The program is positively unbounded; read as `ε* = +∞`.
    Unbounded,
}

impl SoftOutcome {
    pub fn solution(&self) -> Option<&SoftSolution> {
        match self {
            SoftOutcome::Optimal(s) => Some(s),
            SoftOutcome::Unbounded => None,
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.solution().map_or(f64::INFINITY, |s| s.epsilon)
    }
}

fn gamma_from_columns(x: &[f64], k: usize) -> Vec<f64> {
    std::iter::once(0.0).chain(x[..k - 1].iter().copied()).collect()
}

/// Reads `(γ, ε, ξ)` off a fixed-site soft program's solution, clamping
/// `ξ ∈ (−τ_num, 0)` to zero.
pub fn extract_soft_solution(
    sol: &LpSolution,
    data: &Dataset,
    sites: &SiteSet,
    variant: Variant,
) -> Result<SoftOutcome> {
    match sol.status {
        LpStatus::Unbounded => return Ok(SoftOutcome::Unbounded),
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Optimal => {}
    }
    let k = sites.k();
    let n_xi = match variant {
        Variant::Mme => data.n() * (k - 1),
        Variant::Mep => data.n(),
    };
    if sol.x.len() != k + n_xi {
        return Err(Error::DimensionMismatch { expected: k + n_xi, actual: sol.x.len() });
    }
    let xi: Vec<f64> = sol.x[k..]
        .iter()
        .map(|&v| if v < 0.0 && v > -TAU_NUM { 0.0 } else { v })
        .collect();
    let diagram = PowerDiagram::new(sites.clone(), gamma_from_columns(&sol.x, k))?;
    let xi = match variant {
        Variant::Mme => Slacks::PerPair(xi),
        Variant::Mep => Slacks::PerPoint(xi),
    };
    Ok(SoftOutcome::Optimal(SoftSolution { diagram, epsilon: sol.x[k - 1], xi }))
}

/// Hard-margin diagram and margin read off a [`build_pspd_fixed`] solution.
pub fn extract_hard_solution(sol: &LpSolution, sites: &SiteSet) -> Result<(PowerDiagram, f64)> {
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Err(Error::Infeasible),
        LpStatus::Unbounded => return Ok((PowerDiagram::new(sites.clone(), vec![0.0; sites.k()])?, f64::INFINITY)),
    }
    let k = sites.k();
    Ok((PowerDiagram::new(sites.clone(), gamma_from_columns(&sol.x, k))?, sol.x[k - 1]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp;

    fn one_d(c1: &[f64], c2: &[f64]) -> Dataset {
        let pts = c1.iter().chain(c2).map(|&x| vec![x]).collect();
        let labels = std::iter::repeat_n(0, c1.len()).chain(std::iter::repeat_n(1, c2.len())).collect();
        Dataset::new(pts, labels, 2).unwrap()
    }

    fn sites(v: &[f64]) -> SiteSet {
        SiteSet::new(v.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn f_t_bounds() {
        assert!(CoefficientF::new(0).is_err());
        for t in 1..=1_000_000usize {
            let f = CoefficientF::new(t).unwrap().value;
            let tf = t as f64;
            assert!(1.0 / (tf + 1.0) < f && f < 1.0 / tf, "t = {t}");
        }
        assert_eq!(CoefficientF::new(1).unwrap().value, 0.75);
    }

    #[test]
    fn sigma_bounds_mean_projection() {
        let data = one_d(&[0.0, 1.0, 6.0], &[4.0, 5.0]);
        let s = sites(&[0.0, 5.0]);
        let sig = SigmaMatrix::new(&data, &s).unwrap();
        assert_eq!(sig.sigma(0, 1), 6.0);
        assert_eq!(sig.sigma(1, 0), -4.0);
        assert_eq!(sig.sigma_unnormalized(0, 1), 30.0);
        assert!(sig.sigma(0, 1) >= 7.0 / 3.0);
    }

    #[test]
    fn pspd_symmetric_pair() {
        let data = one_d(&[-1.0], &[1.0]);
        let s = sites(&[-1.0, 1.0]);
        let lp = build_pspd_fixed(&SigmaMatrix::new(&data, &s).unwrap());
        assert_eq!(lp.num_rows(), 2);
        assert_eq!(lp.num_vars(), 2);
        let sol = lp::solve(&lp, None).unwrap();
        let (p, eps) = extract_hard_solution(&sol, &s).unwrap();
        assert!((eps - 1.0).abs() < 1e-12);
        assert!(p.gamma[1].abs() < 1e-12);
    }

    #[test]
    fn pspd_hand_instance() {
        let data = one_d(&[0.0, 1.0, 6.0], &[4.0, 5.0]);
        let s = sites(&[0.0, 5.0]);
        let sol = lp::solve(&build_pspd_fixed(&SigmaMatrix::new(&data, &s).unwrap()), None).unwrap();
        let (p, eps) = extract_hard_solution(&sol, &s).unwrap();
        assert!((eps + 1.0).abs() < 1e-9);
        assert!((p.gamma[1] - 25.0).abs() < 1e-9);
        assert!((p.margin_of(&data).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn shapes_of_soft_programs() {
        let data = one_d(&[0.0, 1.0, 6.0], &[4.0, 5.0]);
        let s = sites(&[0.0, 5.0]);
        let mme = build_pmme_fixed(&data, &s, 1).unwrap();
        let mep = build_pmep_fixed(&data, &s, 1).unwrap();
        // k = 2: one ξ per point either way, identical programs
        assert_eq!(mme.rows, mep.rows);
        assert_eq!(mme.objective, mep.objective);
        assert_eq!(mme.num_vars(), 2 + 5);
        assert!(matches!(build_pmep_fixed(&data, &s, 0), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn soft_symmetric_pair_t1_keeps_hard_margin() {
        let data = one_d(&[-1.0], &[1.0]);
        let s = sites(&[-1.0, 1.0]);
        let sol = lp::solve(&build_pmep_fixed(&data, &s, 1).unwrap(), None).unwrap();
        let SoftOutcome::Optimal(soft) = extract_soft_solution(&sol, &data, &s, Variant::Mep).unwrap() else {
            panic!("expected optimum");
        };
        assert!((soft.epsilon - 1.0).abs() < 1e-9);
        assert!(soft.xi.sum().abs() < 1e-9);
        let e = crate::geometry::extract_errors(&soft, &data, TAU_NUM).unwrap();
        assert_eq!(e.support_vector_points, vec![0, 1]);
    }

    #[test]
    fn clamps_tiny_negative_xi() {
        let data = one_d(&[-1.0], &[1.0]);
        let s = sites(&[-1.0, 1.0]);
        let sol = LpSolution {
            status: LpStatus::Optimal,
            x: vec![0.0, 1.0, -1e-10, 0.5],
            objective: 0.0,
            duals: None,
            ray: None,
            iterations: 0,
            warm: None,
        };
        let out = extract_soft_solution(&sol, &data, &s, Variant::Mep).unwrap();
        assert_eq!(out.solution().unwrap().xi, Slacks::PerPoint(vec![0.0, 0.5]));
        let unbounded = LpSolution { status: LpStatus::Unbounded, ..sol };
        assert_eq!(extract_soft_solution(&unbounded, &data, &s, Variant::Mep).unwrap(), SoftOutcome::Unbounded);
    }

    #[test]
    fn hand_instance_unbounded_at_t_max() {
        let data = one_d(&[0.0, 1.0, 6.0], &[4.0, 5.0]);
        let s = sites(&[0.0, 5.0]);
        let sol = lp::solve(&build_pmep_fixed(&data, &s, 5).unwrap(), None).unwrap();
        assert_eq!(sol.status, LpStatus::Unbounded);
    }

    #[test]
    fn feasibility_system_shape() {
        let data = Dataset::new(
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![5.0, 5.0], vec![9.0, 0.0]],
            vec![0, 0, 1, 2],
            3,
        )
        .unwrap();
        let lp = build_feasibility_free_sites(&data);
        assert_eq!(lp.num_vars(), 3 * 2 + 2);
        assert_eq!(lp.num_rows(), 4 * 2 + 3);
        assert_eq!(lp::solve_feasibility(&lp).unwrap().status, LpStatus::Optimal);
    }

    #[test]
    fn interleaved_clusters_infeasible() {
        // {0, 3} vs {1}: the middle point cannot be cut out in 1-D
        let data = one_d(&[0.0, 3.0], &[1.0]);
        let lp = build_feasibility_free_sites(&data);
        assert_eq!(lp::solve_feasibility(&lp).unwrap().status, LpStatus::Infeasible);
        // equal means are rejected before any program is built
        assert!(Dataset::new(vec![vec![0.0], vec![2.0], vec![1.0]], vec![0, 0, 1], 2).is_err());
    }

    #[test]
    fn singletons_feasible() {
        let data = one_d(&[0.0], &[1.0]);
        let sol = lp::solve_feasibility(&build_feasibility_free_sites(&data)).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        let symmetric = one_d(&[-1.0], &[1.0]);
        let sol = lp::solve_feasibility(&build_feasibility_free_sites(&symmetric)).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
    }
}
