//! Local optimization of the margin programs with the sites as variables.
//!
//! The objective at a site set `S` is the optimum of the fixed-site program,
//! which is invariant under scaling and translating `S`. The normalization
//! `(s_j − s_i)ᵀ(c_j − c_i) ≥ 1` enters a penalized objective
//! `Θ − ρ Σ max(0, 1 − (s_j − s_i)ᵀ(c_j − c_i))²` that is climbed by
//! central-difference gradient steps with Armijo backtracking. Accepted
//! iterates are rescaled so the normalization holds and must not lower `Θ`.

use serde::Serialize;

use crate::algorithms::{solve_hard, solve_soft};
use crate::error::{Error, Result};
use crate::formulations::SoftOutcome;
use crate::geometry::{dot, Dataset, PowerDiagram, SiteSet, Slacks, Variant};
use crate::lp::LpBackend;

/// Which program to optimize.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FreeVariant {
    Spd,
    Mme,
    Mep,
}

impl std::str::FromStr for FreeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "spd" => Ok(Self::Spd),
            "mme" => Ok(Self::Mme),
            "mep" => Ok(Self::Mep),
            other => Err(Error::InvalidParameter(format!("unknown variant {other:?}"))),
        }
    }
}

impl std::fmt::Display for FreeVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Spd => "spd",
            Self::Mme => "mme",
            Self::Mep => "mep",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalOptions {
    pub max_iterations: usize,
    /// Stop once an accepted step improves `Θ` by less than this.
    pub tolerance: f64,
    /// Initial penalty weight, doubled while trial points stay infeasible.
    pub rho: f64,
    pub armijo_c: f64,
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LocalOptions {
    fn default() -> Self {
        Self { max_iterations: 500, tolerance: 1e-3, rho: 1e3, armijo_c: 1e-4, shrink: 0.5, max_backtracks: 40 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalSolveReport {
    pub variant: FreeVariant,
    pub t: usize,
    pub diagram: PowerDiagram,
    pub epsilon: f64,
    /// Margin-error slacks; `None` for the hard-margin program.
    pub xi: Option<Slacks>,
    pub theta: f64,
    pub initial_theta: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Euclidean norm of the normalization shortfalls at the returned sites.
    pub violation: f64,
    pub rho: f64,
}

/// Fixed-site optimum at one site set.
#[derive(Clone, Debug)]
struct Evaluation {
    diagram: PowerDiagram,
    epsilon: f64,
    xi: Option<Slacks>,
    theta: f64,
}

struct Problem<'a> {
    backend: &'a dyn LpBackend,
    data: &'a Dataset,
    variant: FreeVariant,
    t: usize,
    means: &'a [Vec<f64>],
}

impl Problem<'_> {
    /// `None` if the sites are degenerate or the program is unbounded there.
    fn evaluate(&self, sites: &[Vec<f64>]) -> Result<Option<Evaluation>> {
        let Ok(sites) = SiteSet::new(sites.to_vec()) else { return Ok(None) };
        let variant = match self.variant {
            FreeVariant::Spd => {
                let (diagram, epsilon) = solve_hard(self.backend, self.data, &sites)?;
                if !epsilon.is_finite() {
                    return Ok(None);
                }
                return Ok(Some(Evaluation { diagram, epsilon, xi: None, theta: epsilon }));
            }
            FreeVariant::Mme => Variant::Mme,
            FreeVariant::Mep => Variant::Mep,
        };
        let (outcome, theta, _) = solve_soft(self.backend, self.data, &sites, self.t, variant, None)?;
        Ok(match outcome {
            SoftOutcome::Optimal(s) => Some(Evaluation { diagram: s.diagram, epsilon: s.epsilon, xi: Some(s.xi), theta }),
            SoftOutcome::Unbounded => None,
        })
    }

    /// `(s_j − s_i)ᵀ(c_j − c_i)` for all `i < j`.
    fn normalization(&self, sites: &[Vec<f64>]) -> Vec<f64> {
        let k = sites.len();
        let mut out = Vec::with_capacity(k * (k - 1) / 2);
        for i in 0..k {
            for j in i + 1..k {
                let ds: Vec<f64> = sites[j].iter().zip(&sites[i]).map(|(a, b)| a - b).collect();
                let dc: Vec<f64> = self.means[j].iter().zip(&self.means[i]).map(|(a, b)| a - b).collect();
                out.push(dot(&ds, &dc));
            }
        }
        out
    }

    fn shortfall(&self, sites: &[Vec<f64>]) -> f64 {
        self.normalization(sites).iter().map(|g| (1.0 - g).max(0.0).powi(2)).sum()
    }

    fn penalized(&self, sites: &[Vec<f64>], rho: f64) -> Result<f64> {
        Ok(match self.evaluate(sites)? {
            Some(e) => e.theta - rho * self.shortfall(sites),
            None => f64::NEG_INFINITY,
        })
    }

    /// Scales `sites` so that the smallest normalization value is exactly 1;
    /// `None` if some pair has a non-positive value.
    fn normalize(&self, sites: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
        let min = self.normalization(sites).into_iter().fold(f64::INFINITY, f64::min);
        (min > 0.0 && min.is_finite()).then(|| scale(sites, 1.0 / min))
    }
}

fn scale(sites: &[Vec<f64>], f: f64) -> Vec<Vec<f64>> {
    sites.iter().map(|s| s.iter().map(|v| v * f).collect()).collect()
}

fn flat(sites: &[Vec<f64>]) -> Vec<f64> {
    sites.iter().flatten().copied().collect()
}

fn unflat(v: &[f64], d: usize) -> Vec<Vec<f64>> {
    v.chunks(d).map(<[f64]>::to_vec).collect()
}

fn min_site_distance(sites: &[Vec<f64>]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..sites.len() {
        for j in i + 1..sites.len() {
            m = m.min(crate::geometry::dist(&sites[i], &sites[j]));
        }
    }
    m
}

fn report(
    problem: &Problem<'_>,
    eval: &Evaluation,
    initial_theta: f64,
    iterations: usize,
    converged: bool,
    rho: f64,
) -> LocalSolveReport {
    LocalSolveReport {
        variant: problem.variant,
        t: problem.t,
        diagram: eval.diagram.clone(),
        epsilon: eval.epsilon,
        xi: eval.xi.clone(),
        theta: eval.theta,
        initial_theta,
        iterations,
        converged,
        violation: problem.shortfall(eval.diagram.sites.as_slice()).sqrt(),
        rho,
    }
}

/// Climbs the free-site program from `start` (or the cluster means scaled by
/// `1/δ`, `δ = min_{i<j} ‖c_j − c_i‖²`). `t` is ignored for [`FreeVariant::Spd`].
pub fn local_optimize(
    backend: &dyn LpBackend,
    data: &Dataset,
    variant: FreeVariant,
    t: usize,
    start: Option<&SiteSet>,
    options: &LocalOptions,
) -> Result<LocalSolveReport> {
    let t = match variant {
        FreeVariant::Spd => 0,
        FreeVariant::Mme | FreeVariant::Mep => {
            let v = if variant == FreeVariant::Mme { Variant::Mme } else { Variant::Mep };
            let t_max = v.max_t(data.n(), data.k());
            if t == 0 || t >= t_max {
                return Err(Error::InvalidParameter(format!("t = {t} outside 1..{t_max}")));
            }
            t
        }
    };
    let means = data.cluster_means();
    let problem = Problem { backend, data, variant, t, means };

    let initial: Vec<Vec<f64>> = match start {
        Some(s) => {
            if s.k() != data.k() {
                return Err(Error::ClusterMismatch { expected: data.k(), actual: s.k() });
            }
            if s.d() != data.d() {
                return Err(Error::DimensionMismatch { expected: data.d(), actual: s.d() });
            }
            s.as_slice().to_vec()
        }
        None => {
            let mut delta = f64::INFINITY;
            for i in 0..data.k() {
                for j in i + 1..data.k() {
                    delta = delta.min(crate::geometry::dist(&means[i], &means[j]).powi(2));
                }
            }
            scale(means, 1.0 / delta)
        }
    };
    let initial = problem.normalize(&initial).unwrap_or(initial);
    let Some(mut current) = problem.evaluate(&initial)? else {
        return Err(Error::Unbounded { t });
    };
    let initial_theta = current.theta;
    let mut sites = initial;
    let mut rho = options.rho;
    let mut step = 0.25 * min_site_distance(&sites);
    let d = data.d();

    for iteration in 1..=options.max_iterations {
        if !current.theta.is_finite() {
            return Err(Error::NonFinite {
                iteration,
                last: Box::new(report(&problem, &current, initial_theta, iteration - 1, false, rho)),
            });
        }
        let x = flat(&sites);
        let base = problem.penalized(&sites, rho)?;
        let mut grad = vec![0.0; x.len()];
        for c in 0..x.len() {
            let h = 1e-6 * (1.0 + x[c].abs());
            let mut xp = x.clone();
            xp[c] += h;
            let mut xm = x.clone();
            xm[c] -= h;
            let fp = problem.penalized(&unflat(&xp, d), rho)?;
            let fm = problem.penalized(&unflat(&xm, d), rho)?;
            grad[c] = match (fp.is_finite(), fm.is_finite()) {
                (true, true) => (fp - fm) / (2.0 * h),
                (true, false) => (fp - base) / h,
                (false, true) => (base - fm) / h,
                (false, false) => 0.0,
            };
            if grad[c].is_nan() {
                return Err(Error::NonFinite {
                    iteration,
                    last: Box::new(report(&problem, &current, initial_theta, iteration - 1, false, rho)),
                });
            }
        }
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            return Ok(report(&problem, &current, initial_theta, iteration - 1, true, rho));
        }

        let mut alpha = step / gnorm;
        let mut accepted = None;
        let mut infeasible_trials = 0;
        for _ in 0..options.max_backtracks {
            let trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a + alpha * g).collect();
            let trial = unflat(&trial, d);
            let value = problem.penalized(&trial, rho)?;
            if value >= base + options.armijo_c * alpha * gnorm * gnorm {
                match problem.normalize(&trial) {
                    Some(scaled) => match problem.evaluate(&scaled)? {
                        Some(e) if e.theta >= current.theta => {
                            accepted = Some((scaled, e, alpha * gnorm));
                            break;
                        }
                        _ => {}
                    },
                    None => infeasible_trials += 1,
                }
            }
            alpha *= options.shrink;
        }
        if infeasible_trials > 0 {
            rho *= 2.0;
        }
        let Some((next_sites, next, length)) = accepted else {
            log::debug!("no ascent step at iteration {iteration}");
            return Ok(report(&problem, &current, initial_theta, iteration - 1, true, rho));
        };
        let improvement = next.theta - current.theta;
        log::debug!("iteration {iteration}: theta = {} (+{improvement})", next.theta);
        // the rescaled sites set the length scale of the next step
        let rescale = min_site_distance(&next_sites) / min_site_distance(&sites).max(f64::MIN_POSITIVE);
        step = (2.0 * length * rescale).max(1e-12);
        sites = next_sites;
        current = next;
        if improvement < options.tolerance {
            return Ok(report(&problem, &current, initial_theta, iteration, true, rho));
        }
    }
    Ok(report(&problem, &current, initial_theta, options.max_iterations, false, rho))
}
