//! Exact posterior maintenance.
//!
//! [`DiscreteBelief`] keeps unnormalized log weights over the atoms of a
//! [`ParameterGrid`]; they start at `log Q_1` and accumulate log-likelihoods, so
//! `logsumexp(log_weights)` is always the log prior-mixture evidence of the data
//! absorbed so far. [`GaussianBelief`] is the conjugate posterior for a
//! `N(0, lambda I)` prior with Gaussian noise, kept in precision form.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_index, invalid, Error, Result};
use crate::model::{bernoulli_outcome, BanditModel, LossTable, ParameterGrid};

/// Posterior over the atoms of a grid.
#[derive(Debug, Clone)]
pub struct DiscreteBelief {
    grid: Arc<ParameterGrid>,
    log_weights: Vec<f64>,
    rounds: usize,
}

impl DiscreteBelief {
    /// The prior `Q_1`.
    pub fn new(grid: Arc<ParameterGrid>) -> Self {
        let log_weights = grid.prior().iter().map(|w| w.ln()).collect();
        Self {
            grid,
            log_weights,
            rounds: 0,
        }
    }

    /// A belief with explicit weights over the grid atoms (normalized here).
    pub fn from_weights(grid: Arc<ParameterGrid>, weights: &[f64]) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: weights.len(),
            });
        }
        let w = crate::model::normalize_weights(weights)?;
        Ok(Self {
            grid,
            log_weights: w.iter().map(|w| w.ln()).collect(),
            rounds: 0,
        })
    }

    pub fn grid(&self) -> &Arc<ParameterGrid> {
        &self.grid
    }

    /// Number of observations absorbed.
    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// `log sum_i exp(log_weights[i])`.
    pub fn log_evidence(&self) -> f64 {
        log_sum_exp(&self.log_weights)
    }

    /// Normalized posterior weights `Q_t`.
    pub fn weights(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.log_weights.len());
        normalized_exp(&self.log_weights, &mut out);
        out
    }

    /// Absorbs one observation by Bayes' rule.
    pub fn update(&mut self, model: &BanditModel, x: usize, a: usize, loss: f64) -> Result<()> {
        model.check_grid(&self.grid)?;
        let mut next = Vec::with_capacity(self.log_weights.len());
        for (i, lw) in self.log_weights.iter().enumerate() {
            let ll = model.log_likelihood(model.grid_param(&self.grid, i), x, a, loss)?;
            next.push(lw + ll);
        }
        self.commit(next, x, a, loss)
    }

    /// Same as [`DiscreteBelief::update`] using precomputed log-likelihoods.
    pub fn update_with_table(&mut self, table: &LossTable, x: usize, a: usize, loss: f64) -> Result<()> {
        if table.n_atoms() != self.log_weights.len() {
            return Err(Error::DimensionMismatch {
                expected: self.log_weights.len(),
                got: table.n_atoms(),
            });
        }
        check_index("context", x, table.n_contexts())?;
        check_index("action", a, table.n_actions())?;
        let column = table.log_lik_column(x, a, bernoulli_outcome(loss)?);
        let next = self
            .log_weights
            .iter()
            .zip(column)
            .map(|(lw, ll)| lw + ll)
            .collect();
        self.commit(next, x, a, loss)
    }

    fn commit(&mut self, next: Vec<f64>, x: usize, a: usize, loss: f64) -> Result<()> {
        let max = next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::InconsistentEvidence { x, a, loss });
        }
        if !max.is_finite() || next.iter().any(|v| v.is_nan()) {
            return Err(Error::Numeric("non-finite posterior log weight".into()));
        }
        self.log_weights = next;
        self.rounds += 1;
        Ok(())
    }

    /// Draws an atom index with probability `Q_t(atom)`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let max = self
            .log_weights
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mass: Vec<f64> = self.log_weights.iter().map(|lw| (lw - max).exp()).collect();
        let total: f64 = mass.iter().sum();
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last_positive = 0;
        for (i, m) in mass.iter().enumerate() {
            if *m > 0.0 {
                acc += m;
                last_positive = i;
                if target < acc {
                    return i;
                }
            }
        }
        last_positive
    }

    pub fn snapshot(&self) -> BeliefSnapshot {
        BeliefSnapshot::Discrete {
            rounds: self.rounds,
            weights: self.weights(),
        }
    }
}

/// Shannon entropy `-sum w log w` in nats, with `0 log 0 = 0`.
pub fn entropy(weights: &[f64]) -> f64 {
    -weights
        .iter()
        .filter(|w| **w > 0.0)
        .map(|w| w * w.ln())
        .sum::<f64>()
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

pub(crate) fn normalized_exp(log_weights: &[f64], out: &mut Vec<f64>) {
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    out.clear();
    out.extend(log_weights.iter().map(|lw| (lw - max).exp()));
    let total: f64 = out.iter().sum();
    for w in out.iter_mut() {
        *w /= total;
    }
}

/// One observed round `(context, action, loss)`.
pub type Observation = (usize, usize, f64);

/// Both sides of the Bayesian telescoping identity for one trajectory.
///
/// `lhs` sums `log p_{true,t}(L_t) / pbar_t(L_t)` with the posterior predictive
/// `pbar_t` evaluated before each sequential update; `rhs` is the single
/// log-ratio of the true atom's likelihood against the prior-mixture evidence.
pub fn telescoping_check(
    grid: &Arc<ParameterGrid>,
    model: &BanditModel,
    true_atom: usize,
    trajectory: &[Observation],
) -> Result<(f64, f64)> {
    check_index("atom", true_atom, grid.len())?;
    model.check_grid(grid)?;
    let n = grid.len();
    let mut belief = DiscreteBelief::new(grid.clone());
    let mut cumulative = vec![0.0; n];
    let mut ll = vec![0.0; n];
    let mut terms = vec![0.0; n];
    let mut lhs = 0.0;
    for &(x, a, loss) in trajectory {
        for (i, slot) in ll.iter_mut().enumerate() {
            *slot = model.log_likelihood(model.grid_param(grid, i), x, a, loss)?;
        }
        if ll[true_atom] == f64::NEG_INFINITY {
            return Err(invalid("trajectory is impossible under the true atom"));
        }
        let q = belief.weights();
        for i in 0..n {
            terms[i] = if q[i] > 0.0 { q[i].ln() + ll[i] } else { f64::NEG_INFINITY };
        }
        let log_predictive = log_sum_exp(&terms);
        lhs += ll[true_atom] - log_predictive;
        belief.update(model, x, a, loss)?;
        for (c, l) in cumulative.iter_mut().zip(&ll) {
            *c += l;
        }
    }
    for (i, slot) in terms.iter_mut().enumerate() {
        let w = grid.prior()[i];
        *slot = if w > 0.0 { w.ln() + cumulative[i] } else { f64::NEG_INFINITY };
    }
    let rhs = if trajectory.is_empty() {
        0.0
    } else {
        cumulative[true_atom] - log_sum_exp(&terms)
    };
    Ok((lhs, rhs))
}

/// Conjugate posterior `N(mean, cov)` for `theta ~ N(0, lambda I)` and
/// `L ~ N(<theta, phi>, sigma^2)`.
///
/// Stores the precision `P = I / lambda + sum phi phi^T / sigma^2` and
/// `b = sum phi L / sigma^2`; mean and covariance are derived on demand.
#[derive(Debug, Clone)]
pub struct GaussianBelief {
    prior_scale: f64,
    noise_var: f64,
    precision: DMatrix<f64>,
    weighted_sum: DVector<f64>,
    rounds: usize,
}

impl GaussianBelief {
    pub fn new(dim: usize, prior_scale: f64, noise_var: f64) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dimension must be >= 1"));
        }
        if !(prior_scale > 0.0 && prior_scale.is_finite()) {
            return Err(invalid(format!("prior scale must be positive, got {prior_scale}")));
        }
        if !(noise_var > 0.0 && noise_var.is_finite()) {
            return Err(invalid(format!("noise variance must be positive, got {noise_var}")));
        }
        Ok(Self {
            prior_scale,
            noise_var,
            precision: DMatrix::identity(dim, dim) / prior_scale,
            weighted_sum: DVector::zeros(dim),
            rounds: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.weighted_sum.len()
    }

    pub fn prior_scale(&self) -> f64 {
        self.prior_scale
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    /// Design matrix `V_t = sum phi phi^T + (sigma^2 / lambda) I = sigma^2 P`.
    pub fn gram(&self) -> DMatrix<f64> {
        &self.precision * self.noise_var
    }

    fn check_feature(&self, feature: &[f64]) -> Result<()> {
        if feature.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: feature.len(),
            });
        }
        Ok(())
    }

    pub fn update(&mut self, feature: &[f64], loss: f64) -> Result<()> {
        self.check_feature(feature)?;
        if !loss.is_finite() {
            return Err(invalid(format!("loss must be finite, got {loss}")));
        }
        let phi = DVector::from_column_slice(feature);
        self.precision += &phi * phi.transpose() / self.noise_var;
        self.weighted_sum += &phi * (loss / self.noise_var);
        self.rounds += 1;
        Ok(())
    }

    fn precision_cholesky(&self) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
        self.precision
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numeric("posterior precision is not positive definite".into()))
    }

    pub fn mean(&self) -> Result<DVector<f64>> {
        Ok(self.precision_cholesky()?.solve(&self.weighted_sum))
    }

    pub fn covariance(&self) -> Result<DMatrix<f64>> {
        let inv = self.precision_cholesky()?.inverse();
        Ok((&inv + inv.transpose()) * 0.5)
    }

    /// Lower Cholesky factor of the covariance.
    pub fn covariance_factor(&self) -> Result<DMatrix<f64>> {
        let cov = self.covariance()?;
        cov.cholesky()
            .map(|c| c.l())
            .ok_or_else(|| Error::Numeric("posterior covariance is not positive definite".into()))
    }

    /// `phi^T cov phi`, the posterior variance of `<theta, phi>`.
    pub fn predictive_variance(&self, feature: &[f64]) -> Result<f64> {
        self.check_feature(feature)?;
        let phi = DVector::from_column_slice(feature);
        let solved = self.precision_cholesky()?.solve(&phi);
        Ok(phi.dot(&solved).max(0.0))
    }

    /// `phi^T V_t^{-1} phi`, the elliptical-potential term.
    pub fn potential(&self, feature: &[f64]) -> Result<f64> {
        Ok(self.predictive_variance(feature)? / self.noise_var)
    }

    /// `mean + L z` with `L L^T = cov` and `z` standard normal.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        let mean = self.mean()?;
        let factor = self.covariance_factor()?;
        Ok(sample_with_factor(&mean, &factor, rng))
    }

    pub fn snapshot(&self) -> Result<BeliefSnapshot> {
        let cov = self.covariance()?;
        Ok(BeliefSnapshot::Gaussian {
            rounds: self.rounds,
            mean: self.mean()?.iter().copied().collect(),
            covariance: cov.row_iter().map(|r| r.iter().copied().collect()).collect(),
        })
    }
}

pub(crate) fn sample_with_factor<R: Rng + ?Sized>(
    mean: &DVector<f64>,
    factor: &DMatrix<f64>,
    rng: &mut R,
) -> Vec<f64> {
    let d = mean.len();
    let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
    (0..d)
        .map(|i| mean[i] + (0..=i).map(|j| factor[(i, j)] * z[j]).sum::<f64>())
        .collect()
}

/// Either kind of posterior.
#[derive(Debug, Clone)]
pub enum Belief {
    Discrete(DiscreteBelief),
    Gaussian(GaussianBelief),
}

/// A posterior draw: a grid atom or a parameter vector.
#[derive(Debug, Clone, PartialEq)]
pub enum Sample {
    Atom(usize),
    Vector(Vec<f64>),
}

impl Belief {
    /// `theta_t ~ Q_t`.
    pub fn posterior_sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Sample> {
        match self {
            Belief::Discrete(b) => Ok(Sample::Atom(b.sample(rng))),
            Belief::Gaussian(b) => Ok(Sample::Vector(b.sample(rng)?)),
        }
    }

    pub fn snapshot(&self) -> Result<BeliefSnapshot> {
        match self {
            Belief::Discrete(b) => Ok(b.snapshot()),
            Belief::Gaussian(b) => b.snapshot(),
        }
    }
}

/// JSON form of a belief for diagnostic dumps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BeliefSnapshot {
    Discrete {
        rounds: usize,
        weights: Vec<f64>,
    },
    Gaussian {
        rounds: usize,
        mean: Vec<f64>,
        covariance: Vec<Vec<f64>>,
    },
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::FeatureMap;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_atom() -> (Arc<ParameterGrid>, BanditModel) {
        let grid = Arc::new(ParameterGrid::uniform_tabular(2).unwrap());
        let model = BanditModel::tabular_bernoulli(2, 1, 1, vec![0.2, 0.8]).unwrap();
        (grid, model)
    }

    #[test]
    fn prior_weights_at_t0() {
        let grid = Arc::new(ParameterGrid::tabular(vec![0.1, 0.2, 0.7]).unwrap());
        let b = DiscreteBelief::new(grid);
        for (w, p) in b.weights().iter().zip([0.1, 0.2, 0.7]) {
            assert!((w - p).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_bayes_updates() {
        let (grid, model) = two_atom();
        let mut b = DiscreteBelief::new(grid);
        b.update(&model, 0, 0, 1.0).unwrap();
        let w = b.weights();
        assert!((w[0] - 0.2).abs() < 1e-12 && (w[1] - 0.8).abs() < 1e-12);
        b.update(&model, 0, 0, 1.0).unwrap();
        let w = b.weights();
        assert!((w[0] - 0.04 / 0.68).abs() < 1e-12);
        assert!((w[1] - 0.64 / 0.68).abs() < 1e-12);
        assert_eq!(b.rounds(), 2);
    }

    #[test]
    fn identical_atoms_keep_their_ratio() {
        let grid = Arc::new(ParameterGrid::tabular(vec![0.2, 0.3, 0.5]).unwrap());
        let model = BanditModel::tabular_bernoulli(3, 1, 1, vec![0.5, 0.5, 0.9]).unwrap();
        let mut b = DiscreteBelief::new(grid);
        for loss in [1.0, 0.0, 0.0, 1.0] {
            b.update(&model, 0, 0, loss).unwrap();
        }
        let w = b.weights();
        assert!((w[0] / w[1] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_observation_is_rejected() {
        let grid = Arc::new(ParameterGrid::uniform_tabular(2).unwrap());
        let model = BanditModel::tabular_bernoulli(2, 1, 1, vec![0.0, 0.0]).unwrap();
        let mut b = DiscreteBelief::new(grid);
        let before = b.log_weights().to_vec();
        assert!(matches!(
            b.update(&model, 0, 0, 1.0),
            Err(Error::InconsistentEvidence { .. })
        ));
        assert_eq!(b.log_weights(), &before[..]);
        assert_eq!(b.rounds(), 0);
    }

    #[test]
    fn degenerate_atom_keeps_index_with_zero_mass() {
        let grid = Arc::new(ParameterGrid::uniform_tabular(2).unwrap());
        let model = BanditModel::tabular_bernoulli(2, 1, 1, vec![0.0, 0.5]).unwrap();
        let mut b = DiscreteBelief::new(grid);
        b.update(&model, 0, 0, 1.0).unwrap();
        assert_eq!(b.weights(), vec![0.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for _ in 0..100 {
            assert_eq!(b.sample(&mut rng), 1);
        }
    }

    #[test]
    fn table_update_matches_model_update() {
        let fm = FeatureMap::new(2, 1, 2, vec![1.0, 0.0, 0.3, -0.8]).unwrap();
        let model = BanditModel::logistic_linear(fm).unwrap();
        let grid = Arc::new(
            ParameterGrid::from_points(
                vec![vec![0.1, 0.2], vec![-0.5, 0.4], vec![0.9, -0.1]],
                vec![0.2, 0.3, 0.5],
                None,
            )
            .unwrap(),
        );
        let table = model.tabulate(&grid).unwrap();
        let mut a = DiscreteBelief::new(grid.clone());
        let mut b = DiscreteBelief::new(grid);
        for (i, loss) in [1.0, 0.0, 0.0, 1.0, 1.0].iter().enumerate() {
            a.update(&model, 0, i % 2, *loss).unwrap();
            b.update_with_table(&table, 0, i % 2, *loss).unwrap();
        }
        assert_eq!(a.log_weights(), b.log_weights());
    }

    #[test]
    fn entropy_examples() {
        assert!((entropy(&[0.125; 8]) - 8f64.ln()).abs() < 1e-15);
        assert_eq!(entropy(&[0.0, 1.0, 0.0]), 0.0);
        assert!((entropy(&[0.25, 0.75]) - 0.562335144618808).abs() < 1e-12);
        let g = ParameterGrid::uniform_tabular(8).unwrap();
        assert!((g.prior_entropy() - 8f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn telescoping_trivial_cases() {
        let (grid, model) = two_atom();
        assert_eq!(telescoping_check(&grid, &model, 0, &[]).unwrap(), (0.0, 0.0));
        let single = Arc::new(ParameterGrid::uniform_tabular(1).unwrap());
        let m1 = BanditModel::tabular_bernoulli(1, 1, 1, vec![0.3]).unwrap();
        let (l, r) = telescoping_check(&single, &m1, 0, &[(0, 0, 1.0), (0, 0, 0.0)]).unwrap();
        assert!(l.abs() < 1e-15 && r.abs() < 1e-15);
        assert!(telescoping_check(&grid, &model, 2, &[]).is_err());
    }

    #[test]
    fn gaussian_prior_and_one_step() {
        let mut g = GaussianBelief::new(1, 1.0, 1.0).unwrap();
        assert_eq!(g.mean().unwrap()[0], 0.0);
        assert!((g.covariance().unwrap()[(0, 0)] - 1.0).abs() < 1e-15);
        g.update(&[1.0], 1.0).unwrap();
        assert!((g.mean().unwrap()[0] - 0.5).abs() < 1e-15);
        assert!((g.covariance().unwrap()[(0, 0)] - 0.5).abs() < 1e-15);
        assert!(g.update(&[1.0], f64::INFINITY).is_err());
        assert!(g.update(&[1.0, 0.0], 1.0).is_err());
    }

    #[test]
    fn gaussian_zero_feature_is_uninformative() {
        let mut g = GaussianBelief::new(3, 2.0, 0.5).unwrap();
        g.update(&[0.3, -0.1, 0.4], 0.7).unwrap();
        let (m, c) = (g.mean().unwrap(), g.covariance().unwrap());
        g.update(&[0.0, 0.0, 0.0], 12.0).unwrap();
        assert!((g.mean().unwrap() - m).norm() < 1e-15);
        assert!((g.covariance().unwrap() - c).norm() < 1e-15);
    }

    #[test]
    fn gaussian_sample_moments() {
        let g = GaussianBelief::new(1, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let mean: f64 = (0..n).map(|_| g.sample(&mut rng).unwrap()[0]).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.02, "mean={mean}");
    }

    #[test]
    fn discrete_sampling_frequencies() {
        let grid = Arc::new(ParameterGrid::uniform_tabular(2).unwrap());
        let b = DiscreteBelief::new(grid);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 100_000;
        let hits = (0..n).filter(|_| b.sample(&mut rng) == 0).count() as f64;
        let sd = (n as f64 * 0.25).sqrt();
        assert!((hits - 0.5 * n as f64).abs() < 3.0 * sd);
        let point = Arc::new(ParameterGrid::tabular(vec![0.0, 1.0, 0.0]).unwrap());
        let pb = DiscreteBelief::new(point);
        assert!((0..1000).all(|_| pb.sample(&mut rng) == 1));
    }

    #[test]
    fn snapshots_serialize() {
        let (grid, _) = two_atom();
        let s = serde_json::to_string(&DiscreteBelief::new(grid).snapshot()).unwrap();
        assert_eq!(s, r#"{"kind":"discrete","rounds":0,"weights":[0.5,0.5]}"#);
        let g = GaussianBelief::new(2, 1.0, 1.0).unwrap();
        let v: serde_json::Value = serde_json::to_value(g.snapshot().unwrap()).unwrap();
        assert_eq!(v["covariance"][1][1], 1.0);
    }

    proptest! {
        #[test]
        fn updates_commute(
            table in prop::collection::vec(0.01f64..0.99, 12),
            obs in prop::collection::vec((0usize..2, 0usize..2, prop::bool::ANY), 1..25),
            seed in any::<u64>(),
        ) {
            // 3 atoms, 2 contexts, 2 actions
            let grid = Arc::new(ParameterGrid::tabular(vec![0.2, 0.5, 0.3]).unwrap());
            let model = BanditModel::tabular_bernoulli(3, 2, 2, table).unwrap();
            let mut forward = DiscreteBelief::new(grid.clone());
            for &(x, a, l) in &obs {
                forward.update(&model, x, a, if l { 1.0 } else { 0.0 }).unwrap();
            }
            let mut shuffled = obs.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for i in (1..shuffled.len()).rev() {
                let j = rng.random_range(0..=i);
                shuffled.swap(i, j);
            }
            let mut other = DiscreteBelief::new(grid);
            for &(x, a, l) in &shuffled {
                other.update(&model, x, a, if l { 1.0 } else { 0.0 }).unwrap();
            }
            for (p, q) in forward.weights().iter().zip(other.weights()) {
                prop_assert!((p - q).abs() < 1e-10);
            }
            let s: f64 = forward.weights().iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-10);
        }

        #[test]
        fn gaussian_matches_batch_solve(
            d in 1usize..=8,
            t in 0usize..=100,
            lambda in 0.2f64..5.0,
            sigma in 0.3f64..3.0,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut g = GaussianBelief::new(d, lambda, sigma * sigma).unwrap();
            let mut design = DMatrix::<f64>::identity(d, d) * (sigma * sigma / lambda);
            let mut rhs = DVector::<f64>::zeros(d);
            for _ in 0..t {
                let phi: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let loss: f64 = rng.random_range(-2.0..2.0);
                g.update(&phi, loss).unwrap();
                let v = DVector::from_column_slice(&phi);
                design += &v * v.transpose();
                rhs += v * loss;
            }
            // brute-force ridge normal equations
            let lu = design.clone().lu();
            let mean = lu.solve(&rhs).unwrap();
            let cov = lu.try_inverse().unwrap() * (sigma * sigma);
            prop_assert!((g.mean().unwrap() - mean).amax() < 1e-8);
            prop_assert!((g.covariance().unwrap() - cov).amax() < 1e-8);
        }
    }
}
