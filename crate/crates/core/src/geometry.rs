//! Clustered point sets, site sets and power diagrams in the `(S, γ)` form.
//!
//! A power diagram with sites `s_1..s_k` and weights `w_1..w_k` has cells
//! `P_i = {x : ‖s_i − x‖² − w_i ≤ ‖s_j − x‖² − w_j ∀ j}`. Writing
//! `γ_i = ½(s_iᵀs_i − w_i)` turns every cell into the polyhedron
//! `(s_j − s_i)ᵀx ≤ γ_j − γ_i`, which is the form all linear programs in this
//! crate work with.
//!
//! Cluster and site indices are zero-based throughout the library. File
//! formats and the CLI present clusters one-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for sign tests on slacks and `ξ` values.
pub const TAU_NUM: f64 = 1e-7;
/// Minimum distance between two sites for them to count as distinct.
pub const TAU_SITE: f64 = 1e-10;

/// Which kind of margin error is counted and penalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Multiclass margin errors: one slack per (point, other cluster) pair.
    Mme,
    /// Margin error points: one slack per point.
    Mep,
}

impl Variant {
    /// Largest meaningful `t`: `n` for MEP, `(k − 1)·n` for MME.
    pub fn max_t(self, n: usize, k: usize) -> usize {
        match self {
            Variant::Mep => n,
            Variant::Mme => (k - 1) * n,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::Mme => f.write_str("mme"),
            Variant::Mep => f.write_str("mep"),
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mme" => Ok(Variant::Mme),
            "mep" => Ok(Variant::Mep),
            other => Err(Error::InvalidParameter(format!("unknown variant '{other}'"))),
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Points in `ℝ^d` together with a partition into `k` nonempty clusters.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    d: usize,
    k: usize,
    coords: Vec<f64>,
    labels: Vec<usize>,
    means: Vec<Vec<f64>>,
    sizes: Vec<usize>,
}

impl Dataset {
    /// Builds a dataset from points and zero-based labels in `0..k`.
    ///
    /// Rejects fewer than two points or clusters, empty clusters, ragged or
    /// non-finite coordinates, and coinciding cluster means.
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<usize>, k: usize) -> Result<Self> {
        let n = points.len();
        if n < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 points, got {n}")));
        }
        if k < 2 {
            return Err(Error::InvalidDataset(format!("need at least 2 clusters, got {k}")));
        }
        if labels.len() != n {
            return Err(Error::InvalidDataset(format!(
                "{} labels for {n} points",
                labels.len()
            )));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::InvalidDataset("points have dimension 0".into()));
        }
        let mut coords = Vec::with_capacity(n * d);
        for (l, p) in points.iter().enumerate() {
            if p.len() != d {
                return Err(Error::InvalidDataset(format!(
                    "point {l} has dimension {}, expected {d}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("point {l} has a non-finite coordinate")));
            }
            coords.extend_from_slice(p);
        }
        let mut sizes = vec![0usize; k];
        let mut sums = vec![vec![0.0; d]; k];
        for (l, &c) in labels.iter().enumerate() {
            if c >= k {
                return Err(Error::InvalidDataset(format!(
                    "label {} of point {l} out of range 1..={k}",
                    c + 1
                )));
            }
            sizes[c] += 1;
            for (s, v) in sums[c].iter_mut().zip(&points[l]) {
                *s += v;
            }
        }
        if let Some(empty) = sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidDataset(format!("cluster {} is empty", empty + 1)));
        }
        let means: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&sizes)
            .map(|(s, &m)| s.into_iter().map(|v| v / m as f64).collect())
            .collect();
        for i in 0..k {
            for j in i + 1..k {
                if means[i] == means[j] {
                    return Err(Error::InvalidDataset(format!(
                        "clusters {} and {} have identical means",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        Ok(Self { d, k, coords, labels, means, sizes })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn point(&self, l: usize) -> &[f64] {
        &self.coords[l * self.d..(l + 1) * self.d]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.d)
    }

    /// Zero-based cluster of point `l`.
    pub fn label(&self, l: usize) -> usize {
        self.labels[l]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Arithmetic means `c_i` of the clusters.
    pub fn cluster_means(&self) -> &[Vec<f64>] {
        &self.means
    }

    /// Cluster sizes `|C_1|, …, |C_k|`.
    pub fn shape(&self) -> &[usize] {
        &self.sizes
    }

    /// Indices of the points in cluster `i`.
    pub fn members(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        self.labels.iter().enumerate().filter(move |(_, &c)| c == i).map(|(l, _)| l)
    }

    /// Point coordinates as owned rows.
    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.points().map(<[f64]>::to_vec).collect()
    }

    /// Sites placed at the cluster means.
    pub fn mean_sites(&self) -> Result<SiteSet> {
        SiteSet::new(self.means.clone())
    }
}

/// `k` pairwise distinct sites in `ℝ^d`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SiteSet {
    sites: Vec<Vec<f64>>,
}

impl SiteSet {
    pub fn new(sites: Vec<Vec<f64>>) -> Result<Self> {
        if sites.len() < 2 {
            return Err(Error::InvalidSites(format!("need at least 2 sites, got {}", sites.len())));
        }
        let d = sites[0].len();
        if d == 0 {
            return Err(Error::InvalidSites("sites have dimension 0".into()));
        }
        for (i, s) in sites.iter().enumerate() {
            if s.len() != d {
                return Err(Error::InvalidSites(format!(
                    "site {} has dimension {}, expected {d}",
                    i + 1,
                    s.len()
                )));
            }
            if s.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidSites(format!("site {} is not finite", i + 1)));
            }
        }
        for i in 0..sites.len() {
            for j in i + 1..sites.len() {
                if dist(&sites[i], &sites[j]) <= TAU_SITE {
                    return Err(Error::DegenerateSitePair { i, j });
                }
            }
        }
        Ok(Self { sites })
    }

    pub fn k(&self) -> usize {
        self.sites.len()
    }

    pub fn d(&self) -> usize {
        self.sites[0].len()
    }

    pub fn site(&self, i: usize) -> &[f64] {
        &self.sites[i]
    }

    pub fn as_slice(&self) -> &[Vec<f64>] {
        &self.sites
    }

    /// Unit direction `s_ij = (s_j − s_i)/‖s_j − s_i‖` and the distance.
    pub fn pair_direction(&self, i: usize, j: usize) -> Result<(Vec<f64>, f64)> {
        let (si, sj) = (&self.sites[i], &self.sites[j]);
        let norm = dist(si, sj);
        if i == j || norm <= TAU_SITE {
            return Err(Error::DegenerateSitePair { i, j });
        }
        Ok((sj.iter().zip(si).map(|(b, a)| (b - a) / norm).collect(), norm))
    }

    /// Uniformly scaled copy `δ·S`.
    pub fn scaled(&self, delta: f64) -> Result<Self> {
        Self::new(self.sites.iter().map(|s| s.iter().map(|v| v * delta).collect()).collect())
    }
}

impl TryFrom<Vec<Vec<f64>>> for SiteSet {
    type Error = Error;

    fn try_from(v: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<SiteSet> for Vec<Vec<f64>> {
    fn from(s: SiteSet) -> Self {
        s.sites
    }
}

/// Free-standing form of [`SiteSet::pair_direction`].
pub fn pair_direction(sites: &SiteSet, i: usize, j: usize) -> Result<(Vec<f64>, f64)> {
    sites.pair_direction(i, j)
}

/// `γ_i = ½(s_iᵀs_i − w_i)`.
pub fn gamma_from_weights(sites: &SiteSet, weights: &[f64]) -> Vec<f64> {
    sites.as_slice().iter().zip(weights).map(|(s, w)| 0.5 * (dot(s, s) - w)).collect()
}

/// `w_i = s_iᵀs_i − 2γ_i`, the inverse of [`gamma_from_weights`].
pub fn weights_from_gamma(sites: &SiteSet, gamma: &[f64]) -> Vec<f64> {
    sites.as_slice().iter().zip(gamma).map(|(s, g)| dot(s, s) - 2.0 * g).collect()
}

/// Classification of a dataset against a power diagram.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Separation {
    StrictlySeparating,
    Separating,
    NotSeparating,
}

/// Power diagram given by sites and a raw (unnormalized) `γ` vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerDiagram {
    pub sites: SiteSet,
    pub gamma: Vec<f64>,
}

impl PowerDiagram {
    pub fn new(sites: SiteSet, gamma: Vec<f64>) -> Result<Self> {
        if gamma.len() != sites.k() {
            return Err(Error::ClusterMismatch { expected: sites.k(), actual: gamma.len() });
        }
        Ok(Self { sites, gamma })
    }

    pub fn from_weights(sites: SiteSet, weights: &[f64]) -> Result<Self> {
        let gamma = gamma_from_weights(&sites, weights);
        Self::new(sites, gamma)
    }

    pub fn k(&self) -> usize {
        self.sites.k()
    }

    pub fn d(&self) -> usize {
        self.sites.d()
    }

    pub fn weights(&self) -> Vec<f64> {
        weights_from_gamma(&self.sites, &self.gamma)
    }

    /// Copy with `γ_1 = 0`; cells are unchanged by the shift.
    pub fn normalized(&self) -> Self {
        let g0 = self.gamma[0];
        Self { sites: self.sites.clone(), gamma: self.gamma.iter().map(|g| g - g0).collect() }
    }

    /// `γ_ij = (γ_j − γ_i)/‖s_j − s_i‖`.
    pub fn gamma_pair(&self, i: usize, j: usize) -> Result<f64> {
        let (_, norm) = self.sites.pair_direction(i, j)?;
        Ok((self.gamma[j] - self.gamma[i]) / norm)
    }

    /// Power function `p_i(x) = ‖s_i − x‖² − w_i`.
    pub fn power(&self, i: usize, x: &[f64]) -> f64 {
        let s = self.sites.site(i);
        let w = dot(s, s) - 2.0 * self.gamma[i];
        let d = dist(s, x);
        d * d - w
    }

    /// Cell containing `x`: `argmin_i (γ_i − s_iᵀx)`, ties to the smallest index.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        if x.len() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), actual: x.len() });
        }
        let mut best = 0;
        let mut best_val = f64::INFINITY;
        for i in 0..self.k() {
            let v = self.gamma[i] - dot(self.sites.site(i), x);
            if v < best_val {
                best = i;
                best_val = v;
            }
        }
        Ok(best)
    }

    /// Normalized slack `γ_ij − s_ijᵀx` of point `x` from cell `i` against cell `j`.
    pub fn pair_slack(&self, i: usize, j: usize, x: &[f64]) -> Result<f64> {
        let (dir, norm) = self.sites.pair_direction(i, j)?;
        Ok((self.gamma[j] - self.gamma[i]) / norm - dot(&dir, x))
    }

    fn check_compatible(&self, data: &Dataset) -> Result<()> {
        if data.d() != self.d() {
            return Err(Error::DimensionMismatch { expected: self.d(), actual: data.d() });
        }
        if data.k() != self.k() {
            return Err(Error::ClusterMismatch { expected: self.k(), actual: data.k() });
        }
        Ok(())
    }

    /// Slacks `γ_ij − s_ijᵀx_l` for every point `l` and every `j ≠ c(l)`,
    /// in `(l, j)` lexicographic order.
    pub fn slacks(&self, data: &Dataset) -> Result<Vec<PairSlack>> {
        self.check_compatible(data)?;
        let k = self.k();
        let mut dirs = Vec::with_capacity(k * k);
        for i in 0..k {
            for j in 0..k {
                dirs.push(if i == j { None } else { Some(self.sites.pair_direction(i, j)?) });
            }
        }
        let mut out = Vec::with_capacity(data.n() * (k - 1));
        for (l, x) in data.points().enumerate() {
            let i = data.label(l);
            for j in (0..k).filter(|&j| j != i) {
                let (dir, norm) = dirs[i * k + j].as_ref().expect("off-diagonal pair");
                let slack = (self.gamma[j] - self.gamma[i]) / norm - dot(dir, x);
                out.push(PairSlack { point: l, other: j, slack });
            }
        }
        Ok(out)
    }

    /// Largest `ε` with `s_ijᵀx_l + ε ≤ γ_ij` for all points; may be negative.
    pub fn margin_of(&self, data: &Dataset) -> Result<f64> {
        Ok(self.slacks(data)?.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min))
    }

    /// Checks `C_i ⊂ P_i` and `C_i ⊄ P_j` for all clusters.
    ///
    /// `C_i ⊄ P_j` is tested per ordered pair: some point of `C_i` must have
    /// slack above `tol` against `j`.
    pub fn verify_separating(&self, data: &Dataset, tol: f64) -> Result<Separation> {
        let slacks = self.slacks(data)?;
        let margin = slacks.iter().map(|p| p.slack).fold(f64::INFINITY, f64::min);
        if margin > tol {
            return Ok(Separation::StrictlySeparating);
        }
        if margin < -tol {
            return Ok(Separation::NotSeparating);
        }
        let k = self.k();
        let mut witnessed = vec![false; k * k];
        for p in &slacks {
            if p.slack > tol {
                witnessed[data.label(p.point) * k + p.other] = true;
            }
        }
        let all = (0..k).all(|i| (0..k).filter(|&j| j != i).all(|j| witnessed[i * k + j]));
        Ok(if all { Separation::Separating } else { Separation::NotSeparating })
    }
}

/// Slack of one (point, other cluster) pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairSlack {
    pub point: usize,
    pub other: usize,
    pub slack: f64,
}

/// Margin-error slacks of a soft power diagram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Slacks {
    /// `ξ_jl` in `(l, j)` lexicographic order, `j ≠ c(l)`; length `n(k − 1)`.
    PerPair(Vec<f64>),
    /// `ξ_l`, one per point.
    PerPoint(Vec<f64>),
}

impl Slacks {
    pub fn variant(&self) -> Variant {
        match self {
            Slacks::PerPair(_) => Variant::Mme,
            Slacks::PerPoint(_) => Variant::Mep,
        }
    }

    pub fn values(&self) -> &[f64] {
        match self {
            Slacks::PerPair(v) | Slacks::PerPoint(v) => v,
        }
    }

    pub fn sum(&self) -> f64 {
        self.values().iter().sum()
    }
}

/// Soft power diagram `(S, γ, ε, ξ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoftSolution {
    pub diagram: PowerDiagram,
    pub epsilon: f64,
    pub xi: Slacks,
}

impl SoftSolution {
    pub fn variant(&self) -> Variant {
        self.xi.variant()
    }

    /// `ξ` applicable to pair `(l, j)`, given the pair's position in
    /// `(l, j)` lexicographic order.
    fn xi_for(&self, pair_index: usize, point: usize) -> f64 {
        match &self.xi {
            Slacks::PerPair(v) => v[pair_index],
            Slacks::PerPoint(v) => v[point],
        }
    }

    /// Checks `ξ ≥ −tol` and `s_ijᵀx_l + ε ≤ γ_ij + ξ + tol` for every pair.
    pub fn is_consistent(&self, data: &Dataset, tol: f64) -> Result<bool> {
        if self.xi.values().iter().any(|&x| x < -tol) {
            return Ok(false);
        }
        let slacks = self.diagram.slacks(data)?;
        let expected = match self.variant() {
            Variant::Mme => slacks.len(),
            Variant::Mep => data.n(),
        };
        if self.xi.values().len() != expected {
            return Ok(false);
        }
        Ok(slacks
            .iter()
            .enumerate()
            .all(|(idx, p)| self.epsilon - p.slack <= self.xi_for(idx, p.point) + tol))
    }
}

/// Margin errors and support vectors of a soft power diagram, counted both
/// per pair and per point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ErrorSets {
    /// `(l, j)` with `γ_ij − s_ijᵀx_l − ε < −tol`.
    pub margin_error_pairs: Vec<(usize, usize)>,
    /// `(l, j)` with `γ_ij − s_ijᵀx_l − ε ≤ tol`.
    pub support_vector_pairs: Vec<(usize, usize)>,
    /// Points with at least one margin-error pair.
    pub margin_error_points: Vec<usize>,
    /// Points with at least one support-vector pair.
    pub support_vector_points: Vec<usize>,
}

impl ErrorSets {
    pub fn margin_error_count(&self, variant: Variant) -> usize {
        match variant {
            Variant::Mme => self.margin_error_pairs.len(),
            Variant::Mep => self.margin_error_points.len(),
        }
    }

    pub fn support_vector_count(&self, variant: Variant) -> usize {
        match variant {
            Variant::Mme => self.support_vector_pairs.len(),
            Variant::Mep => self.support_vector_points.len(),
        }
    }
}

/// Margin errors and support vectors of `(γ, ε)` measured on `data`.
pub fn extract_errors_at(
    diagram: &PowerDiagram,
    epsilon: f64,
    data: &Dataset,
    tol: f64,
) -> Result<ErrorSets> {
    let mut out = ErrorSets::default();
    for p in diagram.slacks(data)? {
        let s = p.slack - epsilon;
        if s <= tol {
            out.support_vector_pairs.push((p.point, p.other));
            if out.support_vector_points.last() != Some(&p.point) {
                out.support_vector_points.push(p.point);
            }
        }
        if s < -tol {
            out.margin_error_pairs.push((p.point, p.other));
            if out.margin_error_points.last() != Some(&p.point) {
                out.margin_error_points.push(p.point);
            }
        }
    }
    Ok(out)
}

/// Margin errors and support vectors of a soft solution.
pub fn extract_errors(sol: &SoftSolution, data: &Dataset, tol: f64) -> Result<ErrorSets> {
    extract_errors_at(&sol.diagram, sol.epsilon, data, tol)
}
