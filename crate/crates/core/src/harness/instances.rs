//! Random instance generators shared by the verification suites and tests.

use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::model::{BanditModel, FeatureMap, ParameterGrid};

/// Random probability vector; roughly one entry in `zero_every` is set to 0
/// (never all of them).
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize, zero_every: Option<usize>) -> Vec<f64> {
    let mut w: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    if let Some(every) = zero_every {
        for v in w.iter_mut() {
            if rng.random_range(0..every) == 0 {
                *v = 0.0;
            }
        }
        if w.iter().all(|v| *v == 0.0) {
            w[rng.random_range(0..n)] = 1.0;
        }
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|v| v / total).collect()
}

/// Uniform mean-loss table with a random prior over `n_atoms` tabular atoms.
pub fn random_tabular<R: Rng + ?Sized>(
    rng: &mut R,
    n_atoms: usize,
    n_contexts: usize,
    n_actions: usize,
) -> Result<(Arc<ParameterGrid>, BanditModel)> {
    let table = (0..n_atoms * n_contexts * n_actions).map(|_| rng.random::<f64>()).collect();
    let model = BanditModel::tabular_bernoulli(n_atoms, n_contexts, n_actions, table)?;
    let grid = ParameterGrid::tabular(random_simplex(rng, n_atoms, None))?;
    Ok((Arc::new(grid), model))
}

/// Uniform point in the `dim`-ball of `radius`.
pub fn random_in_ball<R: Rng + ?Sized>(rng: &mut R, dim: usize, radius: f64) -> Vec<f64> {
    let dir = random_unit(rng, dim);
    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    dir.iter().map(|v| v * r).collect()
}

/// Uniform point on the unit sphere in `dim` dimensions.
pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            return v.iter().map(|x| x / n).collect();
        }
    }
}

/// Bernoulli model whose mean loss is linear in a `dim`-dimensional parameter,
/// realized as a table over vector atoms.
///
/// For `dim = 1`: `theta, phi in [0, 1]`. For `dim >= 2`: `theta = (c, u)` with
/// `c in [0.25, 0.75]`, `|u| <= 0.25`, and `phi = (1, v)` with `|v| <= 1`, so
/// `<theta, phi> in [0, 1]`.
pub fn random_linear_bernoulli<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_atoms: usize,
    n_contexts: usize,
    n_actions: usize,
) -> Result<(Arc<ParameterGrid>, BanditModel)> {
    let atoms: Vec<Vec<f64>> = (0..n_atoms)
        .map(|_| {
            if dim == 1 {
                vec![rng.random::<f64>()]
            } else {
                let mut t = vec![rng.random_range(0.25..=0.75)];
                t.extend(random_in_ball(rng, dim - 1, 0.25));
                t
            }
        })
        .collect();
    let features: Vec<Vec<f64>> = (0..n_contexts * n_actions)
        .map(|_| {
            if dim == 1 {
                vec![rng.random::<f64>()]
            } else {
                let mut f = vec![1.0];
                f.extend(random_in_ball(rng, dim - 1, 1.0));
                f
            }
        })
        .collect();
    let mut table = Vec::with_capacity(n_atoms * n_contexts * n_actions);
    for theta in &atoms {
        for phi in &features {
            let v: f64 = theta.iter().zip(phi).map(|(a, b)| a * b).sum();
            table.push(v.clamp(0.0, 1.0));
        }
    }
    let model = BanditModel::tabular_bernoulli(n_atoms, n_contexts, n_actions, table)?;
    let prior = random_simplex(rng, n_atoms, None);
    let grid = ParameterGrid::from_points(atoms, prior, None)?;
    Ok((Arc::new(grid), model))
}

/// Unit-norm features for every context and action.
pub fn random_unit_features<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_contexts: usize,
    n_actions: usize,
) -> Result<FeatureMap> {
    let data = (0..n_contexts * n_actions)
        .flat_map(|_| random_unit(rng, dim))
        .collect();
    FeatureMap::new(dim, n_contexts, n_actions, data)
}

/// Features drawn uniformly from the ball of radius `bound`.
pub fn random_ball_features<R: Rng + ?Sized>(
    rng: &mut R,
    dim: usize,
    n_contexts: usize,
    n_actions: usize,
    bound: f64,
) -> Result<FeatureMap> {
    let data = (0..n_contexts * n_actions)
        .flat_map(|_| random_in_ball(rng, dim, bound))
        .collect();
    FeatureMap::new(dim, n_contexts, n_actions, data)
}
