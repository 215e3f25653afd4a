//! Brute-force oracles, classifier evaluation and instance generators.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::algorithms::{solve_hard, solve_soft, ThresholdResult};
use crate::error::{Error, Result};
use crate::formulations::build_soft_fixed;
use crate::geometry::{dist, Dataset, PowerDiagram, SiteSet, Variant, TAU_NUM};
use crate::lp::LpBackend;

/// Largest point count accepted by [`brute_force_balanced_lsa`].
pub const LSA_MAX_POINTS: usize = 12;

/// Clustering of `points` with the given cluster sizes minimizing the total
/// squared distance to the assigned sites. Label sequences are enumerated in
/// lexicographic order and the first minimizer wins.
pub fn brute_force_balanced_lsa(points: &[Vec<f64>], sites: &SiteSet, shape: &[usize]) -> Result<Dataset> {
    let n = points.len();
    let k = sites.k();
    if shape.len() != k {
        return Err(Error::ClusterMismatch { expected: k, actual: shape.len() });
    }
    if shape.iter().sum::<usize>() != n {
        return Err(Error::InvalidParameter(format!("shape sums to {}, expected {n}", shape.iter().sum::<usize>())));
    }
    if n > LSA_MAX_POINTS {
        return Err(Error::InvalidParameter(format!("{n} points exceed the enumeration limit {LSA_MAX_POINTS}")));
    }
    if let Some(p) = points.iter().find(|p| p.len() != sites.d()) {
        return Err(Error::DimensionMismatch { expected: sites.d(), actual: p.len() });
    }
    let cost: Vec<Vec<f64>> =
        points.iter().map(|x| (0..k).map(|i| dist(sites.site(i), x).powi(2)).collect()).collect();

    struct Search<'a> {
        cost: &'a [Vec<f64>],
        remaining: Vec<usize>,
        current: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }
    impl Search<'_> {
        fn go(&mut self, l: usize, acc: f64) {
            if l == self.cost.len() {
                if self.best.as_ref().is_none_or(|b| acc < b.0) {
                    self.best = Some((acc, self.current.clone()));
                }
                return;
            }
            for i in 0..self.remaining.len() {
                if self.remaining[i] == 0 {
                    continue;
                }
                self.remaining[i] -= 1;
                self.current.push(i);
                self.go(l + 1, acc + self.cost[l][i]);
                self.current.pop();
                self.remaining[i] += 1;
            }
        }
    }
    let mut search = Search { cost: &cost, remaining: shape.to_vec(), current: Vec::with_capacity(n), best: None };
    search.go(0, 0.0);
    let (_, labels) = search.best.ok_or_else(|| Error::InvalidParameter("no clustering of this shape".into()))?;
    Dataset::new(points.to_vec(), labels, k)
}

/// Smallest `t` with `ε*(t) ≥ −τ_num`, by solving every program in turn.
/// Returns `t_max` if no smaller `t` qualifies.
pub fn brute_force_threshold(
    backend: &dyn LpBackend,
    data: &Dataset,
    sites: &SiteSet,
    variant: Variant,
) -> Result<usize> {
    let (_, eps) = solve_hard(backend, data, sites)?;
    if eps >= -TAU_NUM {
        return Ok(0);
    }
    let t_max = variant.max_t(data.n(), data.k());
    for t in 1..t_max {
        let (outcome, _, _) = solve_soft(backend, data, sites, t, variant, None)?;
        if outcome.epsilon() >= -TAU_NUM {
            return Ok(t);
        }
    }
    Ok(t_max)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    /// `confusion[true][predicted]`.
    pub confusion: Vec<Vec<usize>>,
    pub misclassified: usize,
    pub total: usize,
    pub rate: f64,
    pub threshold: Option<ThresholdResult>,
    /// Wall-clock seconds of each LP solve that produced the diagram.
    pub solve_seconds: Vec<f64>,
}

/// Classifies every test point and tallies the confusion matrix.
pub fn evaluate_classifier(diagram: &PowerDiagram, test: &Dataset) -> Result<EvalReport> {
    if test.d() != diagram.d() {
        return Err(Error::DimensionMismatch { expected: diagram.d(), actual: test.d() });
    }
    if test.k() != diagram.k() {
        return Err(Error::ClusterMismatch { expected: diagram.k(), actual: test.k() });
    }
    let k = diagram.k();
    let mut confusion = vec![vec![0; k]; k];
    for (l, x) in test.points().enumerate() {
        confusion[test.label(l)][diagram.classify(x)?] += 1;
    }
    let total = test.n();
    let misclassified = total - (0..k).map(|i| confusion[i][i]).sum::<usize>();
    Ok(EvalReport {
        confusion,
        misclassified,
        total,
        rate: misclassified as f64 / total as f64,
        threshold: None,
        solve_seconds: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TimingRow {
    pub t: usize,
    pub rows: usize,
    pub cols: usize,
    pub seconds: Vec<f64>,
}

impl TimingRow {
    pub fn mean(&self) -> f64 {
        self.seconds.iter().sum::<f64>() / self.seconds.len().max(1) as f64
    }
}

/// Builds each soft program once and times `repeats` cold solves of it.
pub fn timing_report(
    backend: &dyn LpBackend,
    data: &Dataset,
    sites: &SiteSet,
    variant: Variant,
    ts: &[usize],
    repeats: usize,
) -> Result<Vec<TimingRow>> {
    ts.iter()
        .map(|&t| {
            let lp = build_soft_fixed(data, sites, t, variant)?;
            log::info!("t = {t}: {} rows, {} columns", lp.num_rows(), lp.num_vars());
            let seconds = (0..repeats)
                .map(|_| {
                    let start = Instant::now();
                    backend.solve(&lp, None)?;
                    Ok(start.elapsed().as_secs_f64())
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(TimingRow { t, rows: lp.num_rows(), cols: lp.num_vars(), seconds })
        })
        .collect()
}

/// Uniform points in `[-scale, scale]^d`.
pub fn random_points<R: Rng + ?Sized>(rng: &mut R, n: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.gen_range(-scale..=scale)).collect()).collect()
}

/// Random composition of `n` into `k` positive parts.
pub fn random_shape<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Vec<usize> {
    assert!(k >= 1 && n >= k, "need at least one point per cluster");
    let mut cuts: Vec<usize> = (1..n).collect();
    cuts.shuffle(rng);
    let mut cuts = cuts[..k - 1].to_vec();
    cuts.sort_unstable();
    let mut shape = Vec::with_capacity(k);
    let mut prev = 0;
    for c in cuts.into_iter().chain(std::iter::once(n)) {
        shape.push(c - prev);
        prev = c;
    }
    shape
}

/// Gaussian blobs around uniform centers in `[-10, 10]^d`, one blob per
/// entry of `shape`. Redraws until the cluster means are distinct.
pub fn gaussian_clusters<R: Rng + ?Sized>(rng: &mut R, shape: &[usize], d: usize, spread: f64) -> Dataset {
    let noise = Normal::new(0.0, spread).expect("finite positive spread");
    loop {
        let centers = random_points(rng, shape.len(), d, 10.0);
        let mut points = Vec::new();
        let mut labels = Vec::new();
        for (i, (&size, c)) in shape.iter().zip(&centers).enumerate() {
            for _ in 0..size {
                points.push(c.iter().map(|&m| m + noise.sample(rng)).collect());
                labels.push(i);
            }
        }
        if let Ok(data) = Dataset::new(points, labels, shape.len()) {
            return data;
        }
    }
}

/// Random balanced least-squares assignment: uniform points and sites, a
/// random shape, clustered by [`brute_force_balanced_lsa`].
pub fn random_lsa<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize, d: usize) -> (Dataset, SiteSet) {
    loop {
        let points = random_points(rng, n, d, 10.0);
        let Ok(sites) = SiteSet::new(random_points(rng, k, d, 10.0)) else { continue };
        let shape = random_shape(rng, n, k);
        if let Ok(data) = brute_force_balanced_lsa(&points, &sites, &shape) {
            return (data, sites);
        }
    }
}

/// Copy of `data` with point `l` moved to cluster `to`.
pub fn flip_label(data: &Dataset, l: usize, to: usize) -> Result<Dataset> {
    if l >= data.n() || to >= data.k() {
        return Err(Error::InvalidParameter(format!("cannot move point {l} to cluster {to}")));
    }
    let mut labels = data.labels().to_vec();
    labels[l] = to;
    Dataset::new(data.to_rows(), labels, data.k())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algorithms::ls_spd;
    use crate::lp::DenseSimplex;
    use rand::SeedableRng;

    fn pts(v: &[f64]) -> Vec<Vec<f64>> {
        v.iter().map(|&x| vec![x]).collect()
    }

    #[test]
    fn lsa_examples() {
        let s = SiteSet::new(pts(&[-1.0, 1.0])).unwrap();
        let d = brute_force_balanced_lsa(&pts(&[-1.0, 1.0]), &s, &[1, 1]).unwrap();
        assert_eq!(d.labels(), &[0, 1]);
        let s = SiteSet::new(pts(&[0.0, 10.0])).unwrap();
        let d = brute_force_balanced_lsa(&pts(&[0.0, 1.0, 10.0]), &s, &[2, 1]).unwrap();
        assert_eq!(d.labels(), &[0, 0, 1]);
        assert!(brute_force_balanced_lsa(&pts(&[0.0, 1.0, 10.0]), &s, &[1, 1]).is_err());
    }

    #[test]
    fn lsa_ties_go_to_first_sequence() {
        let s = SiteSet::new(pts(&[-1.0, 1.0])).unwrap();
        // both points at 0: every assignment costs 2
        let pts = vec![vec![0.0], vec![0.0], vec![5.0]];
        let d = brute_force_balanced_lsa(&pts, &s, &[1, 2]);
        // labels (0, 1, 1) first; means 0 and 2.5 are distinct
        assert_eq!(d.unwrap().labels(), &[0, 1, 1]);
    }

    #[test]
    fn confusion_matrix() {
        let s = SiteSet::new(pts(&[0.0, 5.0])).unwrap();
        let p = PowerDiagram::new(s, vec![0.0, 12.5]).unwrap();
        let test = Dataset::new(pts(&[0.0, 3.0, 4.0, 1.0]), vec![0, 0, 1, 1], 2).unwrap();
        let r = evaluate_classifier(&p, &test).unwrap();
        assert_eq!(r.confusion, vec![vec![1, 1], vec![1, 1]]);
        assert_eq!(r.misclassified, 2);
        assert_eq!(r.rate, 0.5);
    }

    #[test]
    fn threshold_oracle_matches_hand_instance() {
        let data = Dataset::new(pts(&[0.0, 1.0, 6.0, 4.0, 5.0]), vec![0, 0, 0, 1, 1], 2).unwrap();
        let s = SiteSet::new(pts(&[0.0, 5.0])).unwrap();
        let b = DenseSimplex::default();
        assert_eq!(brute_force_threshold(&b, &data, &s, Variant::Mep).unwrap(), 2);
        assert_eq!(ls_spd(&b, &data, &s, Variant::Mep).unwrap().t_min, 2);
    }

    #[test]
    fn timing_shapes() {
        let data = Dataset::new(pts(&[0.0, 1.0, 6.0, 4.0, 5.0]), vec![0, 0, 0, 1, 1], 2).unwrap();
        let s = data.mean_sites().unwrap();
        let rows = timing_report(&DenseSimplex::default(), &data, &s, Variant::Mme, &[1, 2], 3).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].rows, rows[0].cols, rows[0].seconds.len()), (5, 7, 3));
    }

    #[test]
    fn shapes_are_positive_compositions() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let s = random_shape(&mut rng, 9, 4);
            assert_eq!(s.iter().sum::<usize>(), 9);
            assert!(s.iter().all(|&c| c >= 1));
        }
    }
}
