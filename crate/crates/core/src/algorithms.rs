//! Outlier detection and threshold search over fixed sites.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::formulations::{
    build_pspd_fixed, build_soft_fixed, extract_hard_solution, extract_soft_solution, SigmaMatrix,
    SoftOutcome,
};
use crate::geometry::{Dataset, PowerDiagram, SiteSet, SoftSolution, Variant, TAU_NUM};
use crate::lp::{LpBackend, WarmStart};

/// A point flagged by [`spd_od`]. For MME, `multiplicity` counts its
/// margin-error pairs; for MEP it is always 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Outlier {
    pub point: usize,
    pub multiplicity: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutlierReport {
    pub solution: SoftSolution,
    pub outliers: Vec<Outlier>,
}

impl OutlierReport {
    pub fn points(&self) -> Vec<usize> {
        self.outliers.iter().map(|o| o.point).collect()
    }

    /// Margin-error pairs for MME, points for MEP.
    pub fn error_count(&self) -> usize {
        self.outliers.iter().map(|o| o.multiplicity).sum()
    }
}

/// Solves the soft program at `t` and optionally warm starts it.
pub fn solve_soft(
    backend: &dyn LpBackend,
    data: &Dataset,
    sites: &SiteSet,
    t: usize,
    variant: Variant,
    warm: Option<&WarmStart>,
) -> Result<(SoftOutcome, f64, Option<WarmStart>)> {
    let lp = build_soft_fixed(data, sites, t, variant)?;
    let sol = backend.solve(&lp, warm)?;
    let outcome = extract_soft_solution(&sol, data, sites, variant)?;
    let theta = match outcome {
        SoftOutcome::Optimal(_) => sol.objective,
        SoftOutcome::Unbounded => f64::INFINITY,
    };
    Ok((outcome, theta, sol.warm))
}

/// Solves the hard-margin program; `ε = +∞` if it is unbounded.
pub fn solve_hard(backend: &dyn LpBackend, data: &Dataset, sites: &SiteSet) -> Result<(PowerDiagram, f64)> {
    let lp = build_pspd_fixed(&SigmaMatrix::new(data, sites)?);
    extract_hard_solution(&backend.solve(&lp, None)?, sites)
}

fn check_t(data: &Dataset, variant: Variant, t: usize) -> Result<usize> {
    let t_max = variant.max_t(data.n(), data.k());
    if t == 0 || t > t_max {
        return Err(Error::InvalidParameter(format!("t = {t} outside 1..={t_max}")));
    }
    Ok(t_max)
}

/// Outlier detection: one soft LP at `t`, outliers are the points with
/// positive margin-error slack.
pub fn spd_od(
    backend: &dyn LpBackend,
    data: &Dataset,
    sites: &SiteSet,
    t: usize,
    variant: Variant,
) -> Result<OutlierReport> {
    check_t(data, variant, t)?;
    let (outcome, _, _) = solve_soft(backend, data, sites, t, variant, None)?;
    let SoftOutcome::Optimal(solution) = outcome else {
        return Err(Error::Unbounded { t });
    };
    let per_point = (data.k() - 1) * usize::from(variant == Variant::Mme) + usize::from(variant == Variant::Mep);
    let outliers = solution
        .xi
        .values()
        .chunks(per_point)
        .enumerate()
        .filter_map(|(point, xs)| {
            let multiplicity = xs.iter().filter(|&&v| v > TAU_NUM).count();
            (multiplicity > 0).then_some(Outlier { point, multiplicity })
        })
        .collect();
    Ok(OutlierReport { solution, outliers })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ThresholdResult {
    /// `t_min / t_max`.
    pub tau: f64,
    pub t_min: usize,
    /// `n` for MEP, `(k − 1)n` for MME.
    pub t_max: usize,
    pub variant: Variant,
    /// Diagram solved at `t_min`; `None` when that program is unbounded.
    pub diagram: Option<PowerDiagram>,
    pub epsilon: f64,
    pub lp_solve_count: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchOptions {
    /// Reuse the previous probe's basis; all probes share one constraint system.
    pub warm_start: bool,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self { warm_start: true }
    }
}

/// Smallest `t` whose soft program reaches a nonnegative margin, found by
/// binary search.
pub fn ls_spd(backend: &dyn LpBackend, data: &Dataset, sites: &SiteSet, variant: Variant) -> Result<ThresholdResult> {
    ls_spd_with(backend, data, sites, variant, SearchOptions::default())
}

pub fn ls_spd_with(
    backend: &dyn LpBackend,
    data: &Dataset,
    sites: &SiteSet,
    variant: Variant,
    options: SearchOptions,
) -> Result<ThresholdResult> {
    let t_max = variant.max_t(data.n(), data.k());
    let (diagram, epsilon) = solve_hard(backend, data, sites)?;
    let mut count = 1;
    if epsilon >= -TAU_NUM {
        return Ok(ThresholdResult {
            tau: 0.0,
            t_min: 0,
            t_max,
            variant,
            diagram: Some(diagram),
            epsilon,
            lp_solve_count: count,
        });
    }

    let mut probes: BTreeMap<usize, (Option<PowerDiagram>, f64)> = BTreeMap::new();
    let mut warm: Option<WarmStart> = None;
    let (mut lo, mut hi) = (1, t_max);
    while lo < hi {
        let mid = (lo + hi) / 2;
        let (outcome, _, next) = solve_soft(backend, data, sites, mid, variant, warm.as_ref())?;
        count += 1;
        if options.warm_start && next.is_some() {
            warm = next;
        }
        let eps = outcome.epsilon();
        log::debug!("probe t = {mid}: epsilon = {eps}");
        probes.insert(mid, (outcome.solution().map(|s| s.diagram.clone()), eps));
        if eps >= -TAU_NUM {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }

    // every t_min < t_max was probed; t_max itself is always unbounded
    let (diagram, epsilon) = probes.remove(&lo).unwrap_or((None, f64::INFINITY));
    Ok(ThresholdResult {
        tau: lo as f64 / t_max as f64,
        t_min: lo,
        t_max,
        variant,
        diagram,
        epsilon,
        lp_solve_count: count,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CurvePoint {
    pub t: usize,
    /// `+∞` when the program is unbounded.
    pub epsilon: f64,
    /// Optimal objective `ε − f_t Σξ`; equals `ε` at `t = 0`.
    pub theta: f64,
}

fn curve_point(
    backend: &dyn LpBackend,
    data: &Dataset,
    sites: &SiteSet,
    variant: Variant,
    t: usize,
    warm: Option<&WarmStart>,
) -> Result<(CurvePoint, Option<WarmStart>)> {
    if t == 0 {
        let (_, eps) = solve_hard(backend, data, sites)?;
        return Ok((CurvePoint { t, epsilon: eps, theta: eps }, None));
    }
    let (outcome, theta, next) = solve_soft(backend, data, sites, t, variant, warm)?;
    Ok((CurvePoint { t, epsilon: outcome.epsilon(), theta }, next))
}

/// `ε*(t)` and `Θ*(t)` for each requested `t`; `t = 0` is the hard-margin
/// program. Without warm starts the solves run on all available cores.
pub fn epsilon_curve(
    backend: &dyn LpBackend,
    data: &Dataset,
    sites: &SiteSet,
    variant: Variant,
    ts: &[usize],
    warm_start: bool,
) -> Result<Vec<CurvePoint>> {
    let t_max = variant.max_t(data.n(), data.k());
    if let Some(&t) = ts.iter().find(|&&t| t > t_max) {
        return Err(Error::InvalidParameter(format!("t = {t} outside 0..={t_max}")));
    }
    if warm_start {
        let mut warm = None;
        let mut out = Vec::with_capacity(ts.len());
        for &t in ts {
            let (p, next) = curve_point(backend, data, sites, variant, t, warm.as_ref())?;
            if next.is_some() {
                warm = next;
            }
            out.push(p);
        }
        return Ok(out);
    }
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(ts.len().max(1));
    let chunk = ts.len().div_ceil(threads).max(1);
    std::thread::scope(|scope| {
        let handles: Vec<_> = ts
            .chunks(chunk)
            .map(|part| {
                scope.spawn(move || {
                    part.iter()
                        .map(|&t| curve_point(backend, data, sites, variant, t, None).map(|p| p.0))
                        .collect::<Result<Vec<_>>>()
                })
            })
            .collect();
        let mut out = Vec::with_capacity(ts.len());
        for h in handles {
            out.extend(h.join().expect("curve worker panicked")?);
        }
        Ok(out)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::DenseSimplex;

    fn one_d(c1: &[f64], c2: &[f64]) -> Dataset {
        let pts = c1.iter().chain(c2).map(|&x| vec![x]).collect();
        let labels = std::iter::repeat_n(0, c1.len()).chain(std::iter::repeat_n(1, c2.len())).collect();
        Dataset::new(pts, labels, 2).unwrap()
    }

    fn sites(v: &[f64]) -> SiteSet {
        SiteSet::new(v.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn symmetric_pair_exits_after_one_solve() {
        let data = one_d(&[-1.0], &[1.0]);
        let r = ls_spd(&DenseSimplex::default(), &data, &sites(&[-1.0, 1.0]), Variant::Mep).unwrap();
        assert_eq!((r.t_min, r.tau, r.lp_solve_count), (0, 0.0, 1));
        assert!((r.epsilon - 1.0).abs() < 1e-9);
    }

    // ε*(t) on this instance, from an independent LP solve: −1, −1 at t = 1
    // and ε = 2 with γ_2 = 15 at t = 2, 3; unbounded from t = 4.
    #[test]
    fn hand_instance_threshold() {
        let data = one_d(&[0.0, 1.0, 6.0], &[4.0, 5.0]);
        let s = sites(&[0.0, 5.0]);
        let backend = DenseSimplex::default();
        let r = ls_spd(&backend, &data, &s, Variant::Mep).unwrap();
        assert_eq!(r.t_min, 2);
        assert_eq!(r.tau, 0.4);
        assert!((r.epsilon - 2.0).abs() < 1e-9);
        assert!(r.lp_solve_count <= 4);
        let curve = epsilon_curve(&backend, &data, &s, Variant::Mep, &[0, 1, 2, 3, 4, 5], true).unwrap();
        let eps: Vec<f64> = curve.iter().map(|p| p.epsilon).collect();
        for (got, want) in eps.iter().zip([-1.0, -1.0, 2.0, 2.0]) {
            assert!((got - want).abs() < 1e-9, "{eps:?}");
        }
        assert!(eps[4].is_infinite() && eps[5].is_infinite());
        let cold = epsilon_curve(&backend, &data, &s, Variant::Mep, &[0, 1, 2, 3, 4, 5], false).unwrap();
        assert_eq!(cold.len(), 6);
        for (a, b) in curve.iter().zip(&cold) {
            assert!(a.epsilon == b.epsilon || (a.epsilon - b.epsilon).abs() < 1e-9);
        }
    }

    #[test]
    fn hand_instance_outliers() {
        let data = one_d(&[0.0, 1.0, 6.0], &[4.0, 5.0]);
        let backend = DenseSimplex::default();
        let r = spd_od(&backend, &data, &sites(&[0.0, 5.0]), 2, Variant::Mep).unwrap();
        assert!(r.error_count() <= 2);
        assert!((r.solution.epsilon - 2.0).abs() < 1e-9);
        assert!(matches!(
            spd_od(&backend, &data, &sites(&[0.0, 5.0]), 5, Variant::Mep),
            Err(Error::Unbounded { t: 5 })
        ));
        assert!(spd_od(&backend, &data, &sites(&[0.0, 5.0]), 0, Variant::Mep).is_err());
    }

    #[test]
    fn warm_and_cold_agree() {
        let data = one_d(&[0.0, 1.0, 6.0, 2.5], &[4.0, 5.0, 0.5]);
        let s = data.mean_sites().unwrap();
        let backend = DenseSimplex::default();
        for v in [Variant::Mep, Variant::Mme] {
            let a = ls_spd_with(&backend, &data, &s, v, SearchOptions { warm_start: true }).unwrap();
            let b = ls_spd_with(&backend, &data, &s, v, SearchOptions { warm_start: false }).unwrap();
            assert_eq!((a.t_min, a.tau), (b.t_min, b.tau));
        }
    }
}
