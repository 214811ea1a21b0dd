//! Covers of parameter sets, lattice discretization of ball priors, and closed-form
//! regret bound evaluators. All logarithms are natural.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::belief::{log_sum_exp, DiscreteBelief};
use crate::error::{check_index, invalid, Error, Result};
use crate::model::{euclidean, norm, BanditModel, ParameterGrid};

/// A greedy epsilon-cover of a grid's atoms with its nearest-center partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverPartition {
    pub epsilon: f64,
    /// Grid index of each center.
    pub center_atoms: Vec<usize>,
    /// Center index of each atom.
    pub assignment: Vec<usize>,
}

impl CoverPartition {
    pub fn n_centers(&self) -> usize {
        self.center_atoms.len()
    }

    /// Prior mass `Q1(cell)` of every cell.
    pub fn cell_masses(&self, prior: &[f64]) -> Result<Vec<f64>> {
        if prior.len() != self.assignment.len() {
            return Err(Error::DimensionMismatch {
                expected: self.assignment.len(),
                got: prior.len(),
            });
        }
        let mut mass = vec![0.0; self.n_centers()];
        for (c, w) in self.assignment.iter().zip(prior) {
            mass[*c] += w;
        }
        Ok(mass)
    }

    /// Center coordinates.
    pub fn centers<'g>(&self, grid: &'g ParameterGrid) -> Vec<&'g [f64]> {
        self.center_atoms
            .iter()
            .filter_map(|i| grid.point(*i))
            .collect()
    }
}

type Cell = Vec<i64>;

struct Buckets {
    size: f64,
    map: HashMap<Cell, Vec<usize>>,
}

impl Buckets {
    fn new(size: f64) -> Self {
        Self {
            size,
            map: HashMap::new(),
        }
    }

    fn cell(&self, p: &[f64]) -> Cell {
        p.iter().map(|v| (v / self.size).floor() as i64).collect()
    }

    fn insert(&mut self, p: &[f64], id: usize) {
        self.map.entry(self.cell(p)).or_default().push(id);
    }

    /// Ids stored in the `3^d` cells around `p`.
    fn neighbours(&self, p: &[f64], out: &mut Vec<usize>) {
        out.clear();
        let base = self.cell(p);
        let d = base.len();
        let mut offset = vec![-1i64; d];
        loop {
            let key: Cell = base.iter().zip(&offset).map(|(b, o)| b + o).collect();
            if let Some(ids) = self.map.get(&key) {
                out.extend_from_slice(ids);
            }
            let mut j = 0;
            while j < d {
                offset[j] += 1;
                if offset[j] <= 1 {
                    break;
                }
                offset[j] = -1;
                j += 1;
            }
            if j == d {
                break;
            }
        }
    }
}

const BUCKET_MAX_DIM: usize = 6;

/// Greedy Euclidean epsilon-cover: scanning atoms in order, each atom farther
/// than `epsilon` from every existing center becomes a center. Atoms are then
/// assigned to their nearest center (lowest index on ties).
pub fn build_cover(grid: &ParameterGrid, epsilon: f64) -> Result<CoverPartition> {
    check_epsilon(epsilon)?;
    if grid.is_tabular() {
        return Err(invalid("covers need vector atoms"));
    }
    if grid.dim() > BUCKET_MAX_DIM {
        let points: Vec<&[f64]> = grid.points().collect();
        return build_cover_with(&points, epsilon, euclidean);
    }
    let points: Vec<&[f64]> = grid.points().collect();
    let mut buckets = Buckets::new(epsilon);
    let mut centers: Vec<usize> = Vec::new();
    let mut near = Vec::new();
    for (i, p) in points.iter().enumerate() {
        buckets.neighbours(p, &mut near);
        let covered = near.iter().any(|c| euclidean(p, points[centers[*c]]) <= epsilon);
        if !covered {
            buckets.insert(p, centers.len());
            centers.push(i);
        }
    }
    let mut assignment = Vec::with_capacity(points.len());
    for p in &points {
        buckets.neighbours(p, &mut near);
        near.sort_unstable();
        let mut best = (f64::INFINITY, usize::MAX);
        for c in &near {
            let dist = euclidean(p, points[centers[*c]]);
            if dist < best.0 {
                best = (dist, *c);
            }
        }
        assignment.push(best.1);
    }
    Ok(CoverPartition {
        epsilon,
        center_atoms: centers,
        assignment,
    })
}

/// Greedy cover under an arbitrary metric, by exhaustive search.
pub fn build_cover_with<F>(points: &[&[f64]], epsilon: f64, metric: F) -> Result<CoverPartition>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    check_epsilon(epsilon)?;
    let mut centers: Vec<usize> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        if !centers.iter().any(|c| metric(p, points[*c]) <= epsilon) {
            centers.push(i);
        }
    }
    let assignment = points
        .iter()
        .map(|p| {
            let mut best = (f64::INFINITY, 0);
            for (j, c) in centers.iter().enumerate() {
                let dist = metric(p, points[*c]);
                if dist < best.0 {
                    best = (dist, j);
                }
            }
            best.1
        })
        .collect();
    Ok(CoverPartition {
        epsilon,
        center_atoms: centers,
        assignment,
    })
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if epsilon > 0.0 && epsilon.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("epsilon must be positive, got {epsilon}")))
    }
}

/// `ceil((2S/eps + 1)^d)`, returned as a real.
pub fn ball_cover_bound(radius: f64, dim: usize, epsilon: f64) -> f64 {
    (2.0 * radius / epsilon + 1.0).powi(dim as i32).ceil()
}

/// Both sides of the covering chain for one trajectory:
/// `lhs = log prod p_true - log sum_theta Q1(theta) prod p_theta` and
/// `rhs = -log Q1(cell of true atom) + 2 C eps T`.
pub fn cover_information_bound(
    grid: &ParameterGrid,
    model: &BanditModel,
    true_atom: usize,
    trajectory: &[(usize, usize, f64)],
    cover: &CoverPartition,
    lipschitz: f64,
) -> Result<(f64, f64)> {
    check_index("atom", true_atom, grid.len())?;
    model.check_grid(grid)?;
    let mut log_weights: Vec<f64> = grid.prior().iter().map(|w| w.ln()).collect();
    for &(x, a, loss) in trajectory {
        for (i, lw) in log_weights.iter_mut().enumerate() {
            *lw += model.log_likelihood(model.grid_param(grid, i), x, a, loss)?;
        }
    }
    cover_chain(grid.prior(), &log_weights, true_atom, cover, lipschitz, trajectory.len())
}

/// The covering chain from a belief that started at the grid prior.
pub fn cover_chain_from_belief(
    belief: &DiscreteBelief,
    true_atom: usize,
    cover: &CoverPartition,
    lipschitz: f64,
) -> Result<(f64, f64)> {
    cover_chain(
        belief.grid().prior(),
        belief.log_weights(),
        true_atom,
        cover,
        lipschitz,
        belief.rounds(),
    )
}

fn cover_chain(
    prior: &[f64],
    log_weights: &[f64],
    true_atom: usize,
    cover: &CoverPartition,
    lipschitz: f64,
    horizon: usize,
) -> Result<(f64, f64)> {
    check_index("atom", true_atom, prior.len())?;
    if prior[true_atom] == 0.0 {
        return Err(invalid("true atom has zero prior mass"));
    }
    let masses = cover.cell_masses(prior)?;
    let lhs = (log_weights[true_atom] - prior[true_atom].ln()) - log_sum_exp(log_weights);
    let cell = masses[cover.assignment[true_atom]];
    let rhs = -cell.ln() + 2.0 * lipschitz * cover.epsilon * horizon as f64;
    Ok((lhs, rhs))
}

/// Prior density used to weight lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PriorDensity {
    Uniform,
    /// Isotropic normal with standard deviation `scale`.
    Gaussian { scale: f64 },
}

/// Lattice `spacing * Z^d` intersected with the closed ball of `radius`, weighted
/// by `density` and renormalized.
pub fn discretize_ball(dim: usize, radius: f64, spacing: f64, density: PriorDensity) -> Result<ParameterGrid> {
    if dim == 0 {
        return Err(invalid("dimension must be >= 1"));
    }
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(invalid(format!("radius must be nonnegative, got {radius}")));
    }
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(invalid(format!("spacing must be positive, got {spacing}")));
    }
    if let PriorDensity::Gaussian { scale } = density {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(invalid(format!("density scale must be positive, got {scale}")));
        }
    }
    let m = (radius / spacing + 1e-9).floor() as i64;
    let side = (2 * m + 1) as usize;
    let total = side
        .checked_pow(dim as u32)
        .filter(|n| *n <= 50_000_000)
        .ok_or_else(|| invalid("lattice too large"))?;
    let mut flat = Vec::new();
    let mut weights = Vec::new();
    let mut idx = vec![-m; dim];
    let mut point = vec![0.0; dim];
    for _ in 0..total {
        for (p, k) in point.iter_mut().zip(&idx) {
            *p = *k as f64 * spacing;
        }
        let r = norm(&point);
        if r <= radius {
            flat.extend_from_slice(&point);
            weights.push(match density {
                PriorDensity::Uniform => 1.0,
                PriorDensity::Gaussian { scale } => (-0.5 * r * r / (scale * scale)).exp(),
            });
        }
        for k in idx.iter_mut() {
            *k += 1;
            if *k <= m {
                break;
            }
            *k = -m;
        }
    }
    let prior = crate::model::normalize_weights(&weights)?;
    ParameterGrid::from_flat(dim, flat, prior, Some(radius))
}

/// `sqrt(rho T H)`.
pub fn bound_theorem1(rho: f64, horizon: f64, entropy: f64) -> f64 {
    (rho * horizon * entropy).sqrt()
}

/// `sqrt(rho T (cover_log + 2 eps C T))` at one `eps`.
pub fn bound_theorem2(rho: f64, horizon: f64, cover_log: f64, epsilon: f64, lipschitz: f64) -> f64 {
    (rho * horizon * (cover_log + 2.0 * epsilon * lipschitz * horizon)).sqrt()
}

/// Minimum of [`bound_theorem2`] over `(epsilon, cover_log)` candidates.
pub fn bound_theorem2_min(rho: f64, horizon: f64, candidates: &[(f64, f64)], lipschitz: f64) -> Option<f64> {
    candidates
        .iter()
        .map(|(eps, log_n)| bound_theorem2(rho, horizon, *log_n, *eps, lipschitz))
        .min_by(f64::total_cmp)
}

/// `sqrt(2 K T log N)`.
pub fn bound_theorem3(n_actions: f64, horizon: f64, n_atoms: f64) -> f64 {
    (2.0 * n_actions * horizon * n_atoms.ln()).sqrt()
}

/// `sqrt(2 K T (d log(2 S C T + 1) + 1))`.
pub fn bound_theorem4(n_actions: f64, horizon: f64, dim: f64, radius: f64, lipschitz: f64) -> f64 {
    let inner = dim * (2.0 * radius * lipschitz * horizon + 1.0).ln() + 1.0;
    (2.0 * n_actions * horizon * inner).sqrt()
}

/// `min{d, 2 (1 + log K)}`.
pub fn lemma3_ratio_bound(dim: f64, n_actions: f64) -> f64 {
    dim.min(2.0 * (1.0 + n_actions.ln()))
}

/// `2 d log(1 + T lambda B^2 / (d sigma^2))`.
pub fn elliptical_potential_bound(dim: f64, horizon: f64, prior_scale: f64, feature_bound: f64, noise_std: f64) -> f64 {
    2.0 * dim * elliptical_log(dim, horizon, prior_scale, feature_bound, noise_std)
}

fn elliptical_log(dim: f64, horizon: f64, prior_scale: f64, feature_bound: f64, noise_std: f64) -> f64 {
    (horizon * prior_scale * feature_bound * feature_bound / (dim * noise_std * noise_std)).ln_1p()
}

/// `sqrt(2 d T min{2 (1 + log K), d} log(1 + T lambda B^2 / (d sigma^2)))`.
pub fn bound_gaussian(
    dim: f64,
    horizon: f64,
    n_actions: f64,
    prior_scale: f64,
    feature_bound: f64,
    noise_std: f64,
) -> f64 {
    let log_term = elliptical_log(dim, horizon, prior_scale, feature_bound, noise_std);
    (2.0 * dim * horizon * lemma3_ratio_bound(dim, n_actions) * log_term).sqrt()
}
