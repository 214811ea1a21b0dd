//! Parameter grids, feature maps and the likelihood families.
//!
//! A [`ParameterGrid`] is the finite support of the prior: either opaque atoms
//! (tabular models, `dim == 0`) or points of `R^d`. A [`BanditModel`] maps a
//! parameter, a context index and an action index to a loss distribution whose
//! mean is `mean_loss`. Losses follow the "lower is better" convention.
//!
//! Four families are supported:
//!
//! | kind              | mean loss                 | loss distribution |
//! |-------------------|---------------------------|-------------------|
//! | `TabularBernoulli`| table lookup              | Bernoulli         |
//! | `LogisticLinear`  | `sigmoid(<theta, phi>)`   | Bernoulli         |
//! | `LogisticGeneral` | `sigmoid(f_theta(x, a))`  | Bernoulli         |
//! | `GaussianLinear`  | `<theta, phi>`            | Normal(mean, s^2) |

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::agent::argmin;
use crate::error::{check_index, invalid, Error, Result};

/// Tolerance on the prior normalization.
pub const PRIOR_SUM_TOL: f64 = 1e-12;

/// A parameter as seen by a likelihood: an atom index (tabular) or a vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param<'a> {
    Index(usize),
    Vector(&'a [f64]),
}

/// Finite prior support `Theta_1` with weights `Q_1`.
#[derive(Debug, Clone, Serialize)]
pub struct ParameterGrid {
    dim: usize,
    n_atoms: usize,
    points: Vec<f64>,
    prior: Vec<f64>,
    radius: f64,
}

impl ParameterGrid {
    /// Opaque atoms for tabular models.
    pub fn tabular(prior: Vec<f64>) -> Result<Self> {
        validate_prior(&prior, prior.len())?;
        Ok(Self {
            dim: 0,
            n_atoms: prior.len(),
            points: Vec::new(),
            prior,
            radius: 0.0,
        })
    }

    pub fn uniform_tabular(n_atoms: usize) -> Result<Self> {
        if n_atoms == 0 {
            return Err(invalid("grid needs at least one atom"));
        }
        Self::tabular(vec![1.0 / n_atoms as f64; n_atoms])
    }

    /// Vector atoms. `radius = None` uses the largest atom norm.
    pub fn from_points(points: Vec<Vec<f64>>, prior: Vec<f64>, radius: Option<f64>) -> Result<Self> {
        let n_atoms = points.len();
        if n_atoms == 0 {
            return Err(invalid("grid needs at least one atom"));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(invalid("vector atoms must have dimension >= 1"));
        }
        let mut flat = Vec::with_capacity(n_atoms * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(invalid("atom coordinates must be finite"));
            }
            flat.extend_from_slice(p);
        }
        Self::from_flat(dim, flat, prior, radius)
    }

    pub(crate) fn from_flat(dim: usize, flat: Vec<f64>, prior: Vec<f64>, radius: Option<f64>) -> Result<Self> {
        let n_atoms = flat.len() / dim;
        validate_prior(&prior, n_atoms)?;
        let max_norm = flat
            .chunks_exact(dim)
            .map(norm)
            .fold(0.0_f64, f64::max);
        let radius = match radius {
            Some(r) => {
                if !(r >= 0.0 && r.is_finite()) {
                    return Err(invalid(format!("radius must be finite and >= 0, got {r}")));
                }
                if max_norm > r + 1e-12 {
                    return Err(invalid(format!(
                        "atom norm {max_norm} exceeds declared radius {r}"
                    )));
                }
                r
            }
            None => max_norm,
        };
        let mut seen = HashSet::with_capacity(n_atoms);
        for (i, p) in flat.chunks_exact(dim).enumerate() {
            let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
            if !seen.insert(key) {
                return Err(invalid(format!("atom {i} duplicates an earlier atom")));
            }
        }
        Ok(Self {
            dim,
            n_atoms,
            points: flat,
            prior,
            radius,
        })
    }

    /// Same atoms, different prior.
    pub fn with_prior(&self, prior: Vec<f64>) -> Result<Self> {
        validate_prior(&prior, self.n_atoms)?;
        Ok(Self {
            prior,
            ..self.clone()
        })
    }

    pub fn len(&self) -> usize {
        self.n_atoms
    }

    pub fn is_empty(&self) -> bool {
        self.n_atoms == 0
    }

    /// 0 for tabular grids.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }

    pub fn is_tabular(&self) -> bool {
        self.dim == 0
    }

    pub fn atom(&self, i: usize) -> Param<'_> {
        if self.dim == 0 {
            Param::Index(i)
        } else {
            Param::Vector(&self.points[i * self.dim..(i + 1) * self.dim])
        }
    }

    /// Coordinates of a vector atom; `None` for tabular grids.
    pub fn point(&self, i: usize) -> Option<&[f64]> {
        (self.dim > 0 && i < self.n_atoms).then(|| &self.points[i * self.dim..(i + 1) * self.dim])
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim.max(1)).take(if self.dim == 0 { 0 } else { self.n_atoms })
    }

    /// Shannon entropy of the prior in nats.
    pub fn prior_entropy(&self) -> f64 {
        crate::belief::entropy(&self.prior)
    }
}

fn validate_prior(prior: &[f64], n_atoms: usize) -> Result<()> {
    if prior.len() != n_atoms {
        return Err(Error::DimensionMismatch {
            expected: n_atoms,
            got: prior.len(),
        });
    }
    if n_atoms == 0 {
        return Err(invalid("grid needs at least one atom"));
    }
    if let Some(w) = prior.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(invalid(format!("prior weight {w} is not a finite nonnegative number")));
    }
    let sum: f64 = prior.iter().sum();
    if (sum - 1.0).abs() > PRIOR_SUM_TOL {
        return Err(invalid(format!("prior weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Scales nonnegative weights to sum to one.
pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>> {
    let sum: f64 = weights.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) || weights.iter().any(|w| *w < 0.0) {
        return Err(invalid("weights must be nonnegative with a positive finite sum"));
    }
    Ok(weights.iter().map(|w| w / sum).collect())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `phi(x, a)` for every context/action pair, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMap {
    dim: usize,
    n_contexts: usize,
    n_actions: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(dim: usize, n_contexts: usize, n_actions: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("feature dimension must be >= 1"));
        }
        if n_contexts == 0 || n_actions == 0 {
            return Err(invalid("feature map needs at least one context and one action"));
        }
        let expected = dim * n_contexts * n_actions;
        if data.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("features must be finite"));
        }
        Ok(Self {
            dim,
            n_contexts,
            n_actions,
            data,
        })
    }

    /// `features[x][a]` is the d-vector for context `x` and action `a`.
    pub fn from_nested(features: &[Vec<Vec<f64>>]) -> Result<Self> {
        let n_contexts = features.len();
        let n_actions = features.first().map_or(0, Vec::len);
        let dim = features
            .first()
            .and_then(|c| c.first())
            .map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_contexts * n_actions * dim);
        for ctx in features {
            if ctx.len() != n_actions {
                return Err(Error::DimensionMismatch {
                    expected: n_actions,
                    got: ctx.len(),
                });
            }
            for phi in ctx {
                if phi.len() != dim {
                    return Err(Error::DimensionMismatch {
                        expected: dim,
                        got: phi.len(),
                    });
                }
                data.extend_from_slice(phi);
            }
        }
        Self::new(dim, n_contexts, n_actions, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_contexts(&self) -> usize {
        self.n_contexts
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn get(&self, x: usize, a: usize) -> &[f64] {
        let start = (x * self.n_actions + a) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// All `K` feature vectors of one context.
    pub fn context(&self, x: usize) -> Vec<&[f64]> {
        (0..self.n_actions).map(|a| self.get(x, a)).collect()
    }

    /// `B = max ||phi(x, a)||`.
    pub fn max_norm(&self) -> f64 {
        self.data
            .chunks_exact(self.dim)
            .map(norm)
            .fold(0.0, f64::max)
    }
}

/// Logit callback `f_theta(x, a)` for [`ModelKind::LogisticGeneral`].
pub type LogitFn = Arc<dyn Fn(&[f64], usize, usize) -> f64 + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    TabularBernoulli,
    LogisticLinear,
    LogisticGeneral,
    GaussianLinear,
}

#[derive(Clone)]
enum Family {
    Tabular { n_atoms: usize, table: Vec<f64> },
    LogisticLinear { features: FeatureMap },
    LogisticGeneral { dim: usize, logit: LogitFn, lipschitz: f64 },
    GaussianLinear { features: FeatureMap, noise_std: f64 },
}

/// Likelihood model `P_{theta, x, a}` over a finite context set and `K` actions.
#[derive(Clone)]
pub struct BanditModel {
    n_contexts: usize,
    n_actions: usize,
    family: Family,
}

impl fmt::Debug for BanditModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BanditModel")
            .field("kind", &self.kind())
            .field("n_contexts", &self.n_contexts)
            .field("n_actions", &self.n_actions)
            .field("dim", &self.dim())
            .finish()
    }
}

fn check_shape(n_contexts: usize, n_actions: usize) -> Result<()> {
    if n_contexts == 0 {
        return Err(invalid("model needs at least one context"));
    }
    if n_actions == 0 {
        return Err(invalid("model needs at least one action"));
    }
    Ok(())
}

impl BanditModel {
    /// `table` is row-major over `(atom, context, action)`.
    pub fn tabular_bernoulli(
        n_atoms: usize,
        n_contexts: usize,
        n_actions: usize,
        table: Vec<f64>,
    ) -> Result<Self> {
        check_shape(n_contexts, n_actions)?;
        let expected = n_atoms * n_contexts * n_actions;
        if table.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                got: table.len(),
            });
        }
        if let Some(v) = table.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(invalid(format!("tabular mean loss {v} outside [0, 1]")));
        }
        Ok(Self {
            n_contexts,
            n_actions,
            family: Family::Tabular { n_atoms, table },
        })
    }

    pub fn logistic_linear(features: FeatureMap) -> Result<Self> {
        Ok(Self {
            n_contexts: features.n_contexts(),
            n_actions: features.n_actions(),
            family: Family::LogisticLinear { features },
        })
    }

    /// `lipschitz` is the caller's claim about `f_theta` in `theta`; see
    /// [`BanditModel::audit_lipschitz`].
    pub fn logistic_general<F>(
        dim: usize,
        n_contexts: usize,
        n_actions: usize,
        logit: F,
        lipschitz: f64,
    ) -> Result<Self>
    where
        F: Fn(&[f64], usize, usize) -> f64 + Send + Sync + 'static,
    {
        check_shape(n_contexts, n_actions)?;
        if dim == 0 {
            return Err(invalid("parameter dimension must be >= 1"));
        }
        if !(lipschitz > 0.0 && lipschitz.is_finite()) {
            return Err(invalid(format!("Lipschitz constant must be positive, got {lipschitz}")));
        }
        Ok(Self {
            n_contexts,
            n_actions,
            family: Family::LogisticGeneral {
                dim,
                logit: Arc::new(logit),
                lipschitz,
            },
        })
    }

    pub fn gaussian_linear(features: FeatureMap, noise_std: f64) -> Result<Self> {
        if !(noise_std > 0.0 && noise_std.is_finite()) {
            return Err(invalid(format!("noise_std must be positive, got {noise_std}")));
        }
        Ok(Self {
            n_contexts: features.n_contexts(),
            n_actions: features.n_actions(),
            family: Family::GaussianLinear { features, noise_std },
        })
    }

    pub fn kind(&self) -> ModelKind {
        match self.family {
            Family::Tabular { .. } => ModelKind::TabularBernoulli,
            Family::LogisticLinear { .. } => ModelKind::LogisticLinear,
            Family::LogisticGeneral { .. } => ModelKind::LogisticGeneral,
            Family::GaussianLinear { .. } => ModelKind::GaussianLinear,
        }
    }

    pub fn n_contexts(&self) -> usize {
        self.n_contexts
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Parameter dimension; 0 for tabular models.
    pub fn dim(&self) -> usize {
        match &self.family {
            Family::Tabular { .. } => 0,
            Family::LogisticLinear { features } | Family::GaussianLinear { features, .. } => {
                features.dim()
            }
            Family::LogisticGeneral { dim, .. } => *dim,
        }
    }

    pub fn is_bernoulli(&self) -> bool {
        !matches!(self.family, Family::GaussianLinear { .. })
    }

    pub fn features(&self) -> Option<&FeatureMap> {
        match &self.family {
            Family::LogisticLinear { features } | Family::GaussianLinear { features, .. } => {
                Some(features)
            }
            _ => None,
        }
    }

    pub fn noise_std(&self) -> Option<f64> {
        match self.family {
            Family::GaussianLinear { noise_std, .. } => Some(noise_std),
            _ => None,
        }
    }

    /// Lipschitz constant of the log-likelihood in `theta`: `B` for linear
    /// logits, the declared constant for general logits.
    pub fn lipschitz_constant(&self) -> Option<f64> {
        match &self.family {
            Family::LogisticLinear { features } => Some(features.max_norm()),
            Family::LogisticGeneral { lipschitz, .. } => Some(*lipschitz),
            _ => None,
        }
    }

    /// Checks that `grid` atoms can be fed to this model.
    pub fn check_grid(&self, grid: &ParameterGrid) -> Result<()> {
        match &self.family {
            // vector atoms are fine: the table is indexed by atom position
            Family::Tabular { n_atoms, .. } => {
                if grid.len() != *n_atoms {
                    return Err(Error::DimensionMismatch {
                        expected: *n_atoms,
                        got: grid.len(),
                    });
                }
                Ok(())
            }
            _ => {
                if grid.dim() != self.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim(),
                        got: grid.dim(),
                    });
                }
                Ok(())
            }
        }
    }

    fn check_xa(&self, x: usize, a: usize) -> Result<()> {
        check_index("context", x, self.n_contexts)?;
        check_index("action", a, self.n_actions)
    }

    fn vector<'a>(&self, theta: Param<'a>) -> Result<&'a [f64]> {
        match theta {
            Param::Vector(v) => {
                if v.len() != self.dim() {
                    return Err(Error::DimensionMismatch {
                        expected: self.dim(),
                        got: v.len(),
                    });
                }
                Ok(v)
            }
            Param::Index(_) => Err(invalid("vector-parameter model given an atom index")),
        }
    }

    /// Tabular models accept an index; a grid with vector atoms passes vectors,
    /// so tabular lookups need the index form.
    fn table_entry(&self, theta: Param<'_>, x: usize, a: usize) -> Result<f64> {
        let Family::Tabular { n_atoms, table } = &self.family else {
            unreachable!()
        };
        match theta {
            Param::Index(i) => {
                check_index("atom", i, *n_atoms)?;
                Ok(table[(i * self.n_contexts + x) * self.n_actions + a])
            }
            Param::Vector(_) => Err(invalid("tabular model needs an atom index")),
        }
    }

    /// Logit `f_theta(x, a)` for logistic kinds.
    pub fn logit(&self, theta: Param<'_>, x: usize, a: usize) -> Result<f64> {
        self.check_xa(x, a)?;
        let z = match &self.family {
            Family::LogisticLinear { features } => dot(self.vector(theta)?, features.get(x, a)),
            Family::LogisticGeneral { logit, .. } => logit(self.vector(theta)?, x, a),
            _ => return Err(invalid("logit is only defined for logistic models")),
        };
        if !z.is_finite() {
            return Err(Error::Numeric(format!("non-finite logit {z} at (x={x}, a={a})")));
        }
        Ok(z)
    }

    /// Mean loss `l(theta, x, a)`.
    pub fn mean_loss(&self, theta: Param<'_>, x: usize, a: usize) -> Result<f64> {
        self.check_xa(x, a)?;
        match &self.family {
            Family::Tabular { .. } => self.table_entry(theta, x, a),
            Family::LogisticLinear { .. } | Family::LogisticGeneral { .. } => {
                Ok(sigmoid(self.logit(theta, x, a)?))
            }
            Family::GaussianLinear { features, .. } => Ok(dot(self.vector(theta)?, features.get(x, a))),
        }
    }

    /// `log P_{theta, x, a}(loss)`. Returns `-inf` for an outcome a degenerate
    /// Bernoulli mean rules out.
    pub fn log_likelihood(&self, theta: Param<'_>, x: usize, a: usize, loss: f64) -> Result<f64> {
        self.check_xa(x, a)?;
        match &self.family {
            Family::Tabular { .. } => {
                let one = bernoulli_outcome(loss)?;
                let p = self.table_entry(theta, x, a)?;
                Ok(if one { p.ln() } else { (-p).ln_1p() })
            }
            Family::LogisticLinear { .. } | Family::LogisticGeneral { .. } => {
                let one = bernoulli_outcome(loss)?;
                let z = self.logit(theta, x, a)?;
                Ok(if one { log_sigmoid(z) } else { log_sigmoid(-z) })
            }
            Family::GaussianLinear { features, noise_std } => {
                if !loss.is_finite() {
                    return Err(invalid(format!("loss must be finite, got {loss}")));
                }
                let mu = dot(self.vector(theta)?, features.get(x, a));
                Ok(gaussian_log_density(loss, mu, *noise_std))
            }
        }
    }

    /// Draws `L ~ P_{theta, x, a}`.
    pub fn sample_loss<R: Rng + ?Sized>(&self, theta: Param<'_>, x: usize, a: usize, rng: &mut R) -> Result<f64> {
        let mean = self.mean_loss(theta, x, a)?;
        Ok(match &self.family {
            Family::GaussianLinear { noise_std, .. } => {
                let z: f64 = StandardNormal.sample(rng);
                mean + noise_std * z
            }
            _ => bernoulli_draw(mean, rng),
        })
    }

    /// Largest `|log P_theta(L) - log P_theta'(L)| / ||theta - theta'||` over the
    /// given `(theta, theta', x, a)` pairs and `L in {0, 1}`.
    pub fn audit_lipschitz(&self, pairs: &[(&[f64], &[f64], usize, usize)]) -> Result<f64> {
        if !matches!(
            self.family,
            Family::LogisticLinear { .. } | Family::LogisticGeneral { .. }
        ) {
            return Err(invalid("Lipschitz audit applies to logistic models"));
        }
        let mut worst = 0.0_f64;
        for (i, &(theta, other, x, a)) in pairs.iter().enumerate() {
            let dist = euclidean(theta, other);
            if dist == 0.0 {
                return Err(invalid(format!("pair {i} has identical atoms")));
            }
            for loss in [0.0, 1.0] {
                let lhs = self.log_likelihood(Param::Vector(theta), x, a, loss)?;
                let rhs = self.log_likelihood(Param::Vector(other), x, a, loss)?;
                worst = worst.max((lhs - rhs).abs() / dist);
            }
        }
        Ok(worst)
    }

    /// Precomputes mean losses, log-likelihoods and per-atom optimal actions over
    /// a grid. Bernoulli models only.
    pub fn tabulate(&self, grid: &ParameterGrid) -> Result<LossTable> {
        if !self.is_bernoulli() {
            return Err(invalid("loss tables need a Bernoulli model"));
        }
        self.check_grid(grid)?;
        let n = grid.len();
        let (nx, k) = (self.n_contexts, self.n_actions);
        let mut mean = vec![0.0; n * nx * k];
        let mut log_p1 = vec![0.0; n * nx * k];
        let mut log_p0 = vec![0.0; n * nx * k];
        let mut optimal = vec![0usize; n * nx];
        let mut row = vec![0.0; k];
        for i in 0..n {
            let theta = self.grid_param(grid, i);
            for x in 0..nx {
                for (a, slot) in row.iter_mut().enumerate() {
                    let idx = (x * k + a) * n + i;
                    let m = self.mean_loss(theta, x, a)?;
                    mean[idx] = m;
                    log_p1[idx] = self.log_likelihood(theta, x, a, 1.0)?;
                    log_p0[idx] = self.log_likelihood(theta, x, a, 0.0)?;
                    *slot = m;
                }
                optimal[x * n + i] = argmin(&row);
            }
        }
        Ok(LossTable {
            n_atoms: n,
            n_contexts: nx,
            n_actions: k,
            mean,
            log_p1,
            log_p0,
            optimal,
        })
    }

    /// The parameter form this model expects for grid atom `i`.
    pub fn grid_param<'g>(&self, grid: &'g ParameterGrid, i: usize) -> Param<'g> {
        match self.family {
            Family::Tabular { .. } => Param::Index(i),
            _ => grid.atom(i),
        }
    }
}

/// Dense per-atom view of a Bernoulli model over a grid.
///
/// Columns are stored contiguously per `(context, action)` so that a posterior
/// update touches one slice.
#[derive(Debug, Clone)]
pub struct LossTable {
    n_atoms: usize,
    n_contexts: usize,
    n_actions: usize,
    mean: Vec<f64>,
    log_p1: Vec<f64>,
    log_p0: Vec<f64>,
    optimal: Vec<usize>,
}

impl LossTable {
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn n_contexts(&self) -> usize {
        self.n_contexts
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    fn col(&self, x: usize, a: usize) -> std::ops::Range<usize> {
        let start = (x * self.n_actions + a) * self.n_atoms;
        start..start + self.n_atoms
    }

    pub fn mean(&self, atom: usize, x: usize, a: usize) -> f64 {
        self.mean[(x * self.n_actions + a) * self.n_atoms + atom]
    }

    /// Mean losses of every atom at `(x, a)`.
    pub fn mean_column(&self, x: usize, a: usize) -> &[f64] {
        &self.mean[self.col(x, a)]
    }

    /// Log-likelihoods of every atom for the observed binary loss.
    pub fn log_lik_column(&self, x: usize, a: usize, loss_is_one: bool) -> &[f64] {
        if loss_is_one {
            &self.log_p1[self.col(x, a)]
        } else {
            &self.log_p0[self.col(x, a)]
        }
    }

    pub fn optimal_action(&self, atom: usize, x: usize) -> usize {
        self.optimal[x * self.n_atoms + atom]
    }

    pub fn optimal_actions(&self, x: usize) -> &[usize] {
        &self.optimal[x * self.n_atoms..(x + 1) * self.n_atoms]
    }
}

pub(crate) fn bernoulli_outcome(loss: f64) -> Result<bool> {
    if loss == 1.0 {
        Ok(true)
    } else if loss == 0.0 {
        Ok(false)
    } else {
        Err(invalid(format!("Bernoulli loss must be 0 or 1, got {loss}")))
    }
}

pub(crate) fn bernoulli_draw<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < mean {
        1.0
    } else {
        0.0
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log sigmoid(z)` without overflow for large `|z|`.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

pub(crate) fn gaussian_log_density(x: f64, mu: f64, std: f64) -> f64 {
    let r = (x - mu) / std;
    -0.5 * r * r - (std * (2.0 * std::f64::consts::PI).sqrt()).ln()
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn one_dim_logistic(phi: f64) -> BanditModel {
        let fm = FeatureMap::new(1, 1, 2, vec![phi, 0.0]).unwrap();
        BanditModel::logistic_linear(fm).unwrap()
    }

    #[test]
    fn sigmoid_values() {
        let m = one_dim_logistic(1.0);
        assert_eq!(m.mean_loss(Param::Vector(&[0.0]), 0, 0).unwrap(), 0.5);
        let v = m.mean_loss(Param::Vector(&[2.0]), 0, 0).unwrap();
        assert!((v - 0.880797077977882).abs() < 1e-12);
    }

    #[test]
    fn tabular_lookup_and_range_errors() {
        let m = BanditModel::tabular_bernoulli(1, 1, 2, vec![0.3, 0.7]).unwrap();
        assert_eq!(m.mean_loss(Param::Index(0), 0, 0).unwrap(), 0.3);
        assert!(matches!(
            m.mean_loss(Param::Index(0), 0, 2),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            m.mean_loss(Param::Index(1), 0, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(m.mean_loss(Param::Index(0), 1, 0).is_err());
        assert!(BanditModel::tabular_bernoulli(1, 1, 2, vec![0.3, 1.2]).is_err());
    }

    #[test]
    fn log_likelihood_examples() {
        let m = BanditModel::tabular_bernoulli(1, 1, 2, vec![0.5, 0.0]).unwrap();
        let ll = m.log_likelihood(Param::Index(0), 0, 0, 1.0).unwrap();
        assert!((ll + std::f64::consts::LN_2).abs() < 1e-12);
        // degenerate mean 0 contradicted by a loss of 1
        assert_eq!(m.log_likelihood(Param::Index(0), 0, 1, 1.0).unwrap(), f64::NEG_INFINITY);
        assert_eq!(m.log_likelihood(Param::Index(0), 0, 1, 0.0).unwrap(), 0.0);
        assert!(m.log_likelihood(Param::Index(0), 0, 0, 0.5).is_err());

        let lg = one_dim_logistic(1.0);
        let ll0 = lg.log_likelihood(Param::Vector(&[0.0]), 0, 0, 0.0).unwrap();
        assert!((ll0 - 0.5f64.ln()).abs() < 1e-15);

        let fm = FeatureMap::new(1, 1, 2, vec![1.0, 0.0]).unwrap();
        let g = BanditModel::gaussian_linear(fm, 1.0).unwrap();
        let lg0 = g.log_likelihood(Param::Vector(&[0.0]), 0, 0, 0.0).unwrap();
        assert!((lg0 + 0.918938533204673).abs() < 1e-12);
        assert!(g.log_likelihood(Param::Vector(&[0.0]), 0, 0, f64::NAN).is_err());
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(800.0)).abs() < 1e-300);
        assert!((log_sigmoid(-800.0) + 800.0).abs() < 1e-9);
        for z in [-30.0, -2.0, -1e-3, 0.0, 0.7, 25.0] {
            assert!((log_sigmoid(z) - sigmoid(z).ln()).abs() < 1e-12, "z={z}");
        }
    }

    #[test]
    fn lipschitz_audit_examples() {
        let m = one_dim_logistic(1.0);
        let r = m.audit_lipschitz(&[(&[0.0], &[1.0], 0, 0)]).unwrap();
        // L = 1 contributes |log s(0) - log s(1)| = 0.379885, L = 0 gives 0.620115
        let l1 = (sigmoid(0.0).ln() - sigmoid(1.0).ln()).abs();
        assert!((l1 - 0.379885).abs() < 1e-6);
        assert!((r - 0.6201145069582775).abs() < 1e-12);
        assert!(r <= 1.0);
        // identical logits: phi(x, 1) = 0
        let r0 = m.audit_lipschitz(&[(&[0.0], &[1.0], 0, 1)]).unwrap();
        assert_eq!(r0, 0.0);
        assert!(m.audit_lipschitz(&[(&[0.5], &[0.5], 0, 0)]).is_err());
    }

    #[test]
    fn lipschitz_audit_random_pairs_in_unit_ball() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let d = 3;
        let mut data = Vec::new();
        for _ in 0..(4 * 3) {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let n = norm(&v);
            data.extend(v.iter().map(|x| x / n));
        }
        let m = BanditModel::logistic_linear(FeatureMap::new(d, 4, 3, data).unwrap()).unwrap();
        let c = m.lipschitz_constant().unwrap();
        assert!((c - 1.0).abs() < 1e-12);
        let mut pts = Vec::new();
        for _ in 0..20_000 {
            let v: Vec<f64> = (0..d).map(|_| rng.random_range(-0.57..0.57)).collect();
            pts.push(v);
        }
        let pairs: Vec<(&[f64], &[f64], usize, usize)> = pts
            .chunks_exact(2)
            .enumerate()
            .map(|(i, p)| (p[0].as_slice(), p[1].as_slice(), i % 4, i % 3))
            .collect();
        let worst = m.audit_lipschitz(&pairs).unwrap();
        assert!(worst <= c, "worst={worst}");
    }

    #[test]
    fn bernoulli_probabilities_sum_to_one() {
        let general = BanditModel::logistic_general(
            2,
            2,
            2,
            |th: &[f64], x, a| (th[0] * (x as f64 + 1.0)).sin() + th[1] * a as f64,
            2.0,
        )
        .unwrap();
        for z in [-5.0, -0.3, 0.0, 1.1, 4.0] {
            let th = [z, 0.5 * z];
            for x in 0..2 {
                for a in 0..2 {
                    let p1 = general.log_likelihood(Param::Vector(&th), x, a, 1.0).unwrap().exp();
                    let p0 = general.log_likelihood(Param::Vector(&th), x, a, 0.0).unwrap().exp();
                    assert!((p1 + p0 - 1.0).abs() < 1e-10);
                    let m = general.mean_loss(Param::Vector(&th), x, a).unwrap();
                    assert!((0.0..=1.0).contains(&m));
                }
            }
        }
    }

    #[test]
    fn grid_validation() {
        assert!(ParameterGrid::tabular(vec![0.5, 0.4]).is_err());
        assert!(ParameterGrid::tabular(vec![1.5, -0.5]).is_err());
        assert!(ParameterGrid::from_points(vec![vec![0.0, 1.0], vec![0.0, 1.0]], vec![0.5, 0.5], None).is_err());
        assert!(ParameterGrid::from_points(vec![vec![0.0, 2.0]], vec![1.0], Some(1.0)).is_err());
        let g = ParameterGrid::from_points(vec![vec![0.0, 1.0], vec![0.5, 0.0]], vec![0.5, 0.5], None).unwrap();
        assert_eq!(g.dim(), 2);
        assert!((g.radius() - 1.0).abs() < 1e-15);
        assert_eq!(g.point(1), Some(&[0.5, 0.0][..]));
        assert_eq!(g.points().count(), 2);
    }

    #[test]
    fn table_matches_model() {
        let fm = FeatureMap::new(2, 2, 3, vec![1.0, 0.0, 0.0, 1.0, 0.5, 0.5, -1.0, 0.0, 0.0, -1.0, 0.3, 0.2]).unwrap();
        let m = BanditModel::logistic_linear(fm).unwrap();
        let g = ParameterGrid::from_points(vec![vec![0.1, -0.2], vec![0.4, 0.3]], vec![0.5, 0.5], None).unwrap();
        let t = m.tabulate(&g).unwrap();
        for i in 0..2 {
            for x in 0..2 {
                for a in 0..3 {
                    let want = m.mean_loss(g.atom(i), x, a).unwrap();
                    assert_eq!(t.mean(i, x, a), want);
                    assert_eq!(t.log_lik_column(x, a, true)[i], m.log_likelihood(g.atom(i), x, a, 1.0).unwrap());
                }
            }
        }
    }
}
