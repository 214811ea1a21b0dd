//! Information-theoretic diagnostics of a single round.
//!
//! Discrete quantities are exact finite sums over atoms and actions. Everything
//! is computed from a [`PosteriorSlice`]: the normalized posterior weights, the
//! per-atom mean-loss rows at the current context and each atom's optimal action.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::agent::{argmin, optimal_action, PolicySnapshot};
use crate::belief::{DiscreteBelief, GaussianBelief};
use crate::error::{check_index, invalid, Error, Result};
use crate::model::{dot, BanditModel, LossTable};

/// Slack used by the per-round inequality checks.
pub const CHECK_TOL: f64 = 1e-10;

/// Relative singular-value cutoff for [`numerical_rank`].
pub const RANK_TOL: f64 = 1e-9;

fn check_probability(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in [0, 1], got {v}")))
    }
}

fn xlogy_ratio(p: f64, q: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if q == 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).ln()
    }
}

pub(crate) fn kl_bernoulli(p: f64, q: f64) -> f64 {
    (xlogy_ratio(p, q) + xlogy_ratio(1.0 - p, 1.0 - q)).max(0.0)
}

/// Binary relative entropy `g(p || q)` in nats.
pub fn binary_relative_entropy(p: f64, q: f64) -> Result<f64> {
    check_probability("p", p)?;
    check_probability("q", q)?;
    Ok(kl_bernoulli(p, q))
}

/// Closed-form convex conjugate `g*(u || q) = log(1 + q (e^u - 1))`.
pub fn conjugate_g(u: f64, q: f64) -> Result<f64> {
    check_probability("q", q)?;
    if u.is_nan() || u == f64::INFINITY {
        return Err(invalid(format!("u must be finite or -inf, got {u}")));
    }
    if u == f64::NEG_INFINITY {
        return Ok((-q).ln_1p());
    }
    if u <= 30.0 {
        Ok((q * u.exp_m1()).ln_1p())
    } else {
        Ok(u + (q + (1.0 - q) * (-u).exp()).ln())
    }
}

/// Brute-force `max_p { p u - g(p || q) }` over `grid_points` evenly spaced `p`.
pub fn conjugate_sup_oracle(u: f64, q: f64, grid_points: usize) -> Result<f64> {
    check_probability("q", q)?;
    if grid_points < 2 {
        return Err(invalid("the oracle needs at least two grid points"));
    }
    let last = (grid_points - 1) as f64;
    let mut best = f64::NEG_INFINITY;
    for j in 0..grid_points {
        let p = j as f64 / last;
        let value = p * u - kl_bernoulli(p, q);
        if value > best {
            best = value;
        }
    }
    Ok(best)
}

/// Quadratic upper bound `q (u + u^2 / 2)` on `g*(u || q)`, valid for `u <= 0`.
pub fn conjugate_upper_bound(u: f64, q: f64) -> f64 {
    q * (u + 0.5 * u * u)
}

/// Posterior weights and per-atom loss rows at one context.
#[derive(Debug, Clone)]
pub struct PosteriorSlice {
    weights: Vec<f64>,
    means: Vec<f64>,
    optimal: Vec<usize>,
    n_actions: usize,
}

impl PosteriorSlice {
    /// `means` is row-major `[atom][action]`.
    pub fn new(weights: Vec<f64>, means: Vec<f64>, n_actions: usize) -> Result<Self> {
        if n_actions == 0 {
            return Err(invalid("need at least one action"));
        }
        if means.len() != weights.len() * n_actions {
            return Err(Error::DimensionMismatch {
                expected: weights.len() * n_actions,
                got: means.len(),
            });
        }
        let optimal = means.chunks(n_actions).map(argmin).collect();
        Ok(Self {
            weights,
            means,
            optimal,
            n_actions,
        })
    }

    pub fn from_belief(belief: &DiscreteBelief, model: &BanditModel, x: usize) -> Result<Self> {
        let grid = belief.grid();
        model.check_grid(grid)?;
        check_index("context", x, model.n_contexts())?;
        let k = model.n_actions();
        let mut means = Vec::with_capacity(grid.len() * k);
        for i in 0..grid.len() {
            let theta = model.grid_param(grid, i);
            for a in 0..k {
                means.push(model.mean_loss(theta, x, a)?);
            }
        }
        let slice = Self::new(belief.weights(), means, k)?;
        debug_assert!((0..grid.len())
            .all(|i| optimal_action(model, model.grid_param(grid, i), x).ok() == Some(slice.optimal[i])));
        Ok(slice)
    }

    pub fn from_table(weights: Vec<f64>, table: &LossTable, x: usize) -> Result<Self> {
        check_index("context", x, table.n_contexts())?;
        let (n, k) = (table.n_atoms(), table.n_actions());
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: weights.len(),
            });
        }
        let mut means = vec![0.0; n * k];
        for a in 0..k {
            for (i, m) in table.mean_column(x, a).iter().enumerate() {
                means[i * k + a] = *m;
            }
        }
        Ok(Self {
            weights,
            means,
            optimal: table.optimal_actions(x).to_vec(),
            n_actions: k,
        })
    }

    pub fn n_atoms(&self) -> usize {
        self.weights.len()
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.means[i * self.n_actions..(i + 1) * self.n_actions]
    }

    fn live(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, w)| **w > 0.0)
            .map(|(i, w)| (i, *w))
    }

    /// Thompson Sampling's action distribution.
    pub fn policy(&self) -> PolicySnapshot {
        let mut probs = vec![0.0; self.n_actions];
        for (i, w) in self.live() {
            probs[self.optimal[i]] += w;
        }
        PolicySnapshot {
            action_probs: probs,
            approximate: false,
        }
    }

    /// `lbar(x, a)` for every action.
    pub fn posterior_mean_losses(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_actions];
        for (i, w) in self.live() {
            for (o, m) in out.iter_mut().zip(self.row(i)) {
                *o += w * m;
            }
        }
        out
    }

    fn check_policy(&self, policy: &PolicySnapshot) -> Result<()> {
        if policy.action_probs.len() != self.n_actions {
            return Err(Error::DimensionMismatch {
                expected: self.n_actions,
                got: policy.action_probs.len(),
            });
        }
        Ok(())
    }

    /// `sum_a pi(a) sum_theta Q(theta) g(l(theta, a) || lbar(a))`.
    pub fn information_gain(&self, policy: &PolicySnapshot) -> Result<f64> {
        self.check_policy(policy)?;
        let lbar = self.posterior_mean_losses();
        let mut total = 0.0;
        for (i, w) in self.live() {
            let row = self.row(i);
            for (a, pi) in policy.action_probs.iter().enumerate() {
                if *pi > 0.0 {
                    total += pi * w * kl_bernoulli(row[a], lbar[a]);
                }
            }
        }
        Ok(total)
    }

    /// Expected regret `E[l(theta, A) - l(theta, A*)]` with `A ~ pi` independent
    /// of `theta ~ Q`. Summed as nonnegative per-atom gaps.
    pub fn expected_regret(&self, policy: &PolicySnapshot) -> Result<f64> {
        self.check_policy(policy)?;
        let mut total = 0.0;
        for (i, w) in self.live() {
            let row = self.row(i);
            let best = row[self.optimal[i]];
            let gap: f64 = policy
                .action_probs
                .iter()
                .zip(row)
                .map(|(pi, m)| pi * (m - best))
                .sum();
            total += w * gap;
        }
        Ok(total)
    }

    /// `sum_a pi(a) sum_theta Q(theta) (lbar(a) - l(theta, a))^2`.
    pub fn loss_variance(&self, policy: &PolicySnapshot) -> Result<f64> {
        self.check_policy(policy)?;
        let lbar = self.posterior_mean_losses();
        let mut total = 0.0;
        for (i, w) in self.live() {
            for ((pi, m), mu) in policy.action_probs.iter().zip(self.row(i)).zip(&lbar) {
                total += pi * w * (mu - m) * (mu - m);
            }
        }
        Ok(total)
    }

    /// The matrix `M[a][a'] = sqrt(pi_a pi_a') (lbar(a) - E[l(theta, a) | A* = a'])`
    /// with `pi` the Thompson Sampling distribution.
    pub fn regret_matrix(&self) -> DMatrix<f64> {
        let k = self.n_actions;
        let pi = self.policy().action_probs;
        let lbar = self.posterior_mean_losses();
        // cond[(a, a')] accumulates sum over atoms with optimum a' of w l(theta, a)
        let mut cond = DMatrix::<f64>::zeros(k, k);
        for (i, w) in self.live() {
            let col = self.optimal[i];
            for (a, m) in self.row(i).iter().enumerate() {
                cond[(a, col)] += w * m;
            }
        }
        DMatrix::from_fn(k, k, |a, b| {
            if pi[a] > 0.0 && pi[b] > 0.0 {
                (pi[a] * pi[b]).sqrt() * (lbar[a] - cond[(a, b)] / pi[b])
            } else {
                0.0
            }
        })
    }

    /// All Bernoulli diagnostics for the given policy.
    pub fn diagnostics(&self, policy: &PolicySnapshot) -> Result<RoundDiagnostics> {
        let regret = self.expected_regret(policy)?;
        let info_gain = self.information_gain(policy)?;
        let variance = self.loss_variance(policy)?;
        let mean_loss_sum: f64 = self.posterior_mean_losses().iter().sum();
        let lifted_ratio = Ratio::new(regret * regret, info_gain);
        let decoupling = Ratio::new(regret * regret, variance);
        let k = self.n_actions as f64;
        let mut checks = vec![
            BoundCheck::le("lemma6", regret, (2.0 * info_gain * mean_loss_sum).sqrt(), CHECK_TOL),
            BoundCheck::le("pinsker", 2.0 * variance, info_gain, CHECK_TOL),
        ];
        if let Ratio::Defined { value: rho } = lifted_ratio {
            checks.push(BoundCheck::le("lemma1", rho, 2.0 * k, 1e-9));
        }
        Ok(RoundDiagnostics {
            expected_regret: regret,
            info_gain,
            lifted_ratio,
            decoupling,
            posterior_variance: variance,
            mean_loss_sum,
            bound_checks: checks,
        })
    }
}

/// `sum_theta Q(theta) l(theta, x, a)`.
pub fn posterior_mean_loss(belief: &DiscreteBelief, model: &BanditModel, x: usize, a: usize) -> Result<f64> {
    check_index("action", a, model.n_actions())?;
    Ok(PosteriorSlice::from_belief(belief, model, x)?.posterior_mean_losses()[a])
}

pub fn lifted_information_gain(
    belief: &DiscreteBelief,
    policy: &PolicySnapshot,
    model: &BanditModel,
    x: usize,
) -> Result<f64> {
    bernoulli_only(model)?;
    PosteriorSlice::from_belief(belief, model, x)?.information_gain(policy)
}

pub fn expected_instant_regret(
    belief: &DiscreteBelief,
    policy: &PolicySnapshot,
    model: &BanditModel,
    x: usize,
) -> Result<f64> {
    PosteriorSlice::from_belief(belief, model, x)?.expected_regret(policy)
}

pub fn posterior_loss_variance(
    belief: &DiscreteBelief,
    policy: &PolicySnapshot,
    model: &BanditModel,
    x: usize,
) -> Result<f64> {
    PosteriorSlice::from_belief(belief, model, x)?.loss_variance(policy)
}

/// `regret^2 / I_t`.
pub fn lifted_information_ratio(
    belief: &DiscreteBelief,
    policy: &PolicySnapshot,
    model: &BanditModel,
    x: usize,
) -> Result<Ratio> {
    bernoulli_only(model)?;
    let slice = PosteriorSlice::from_belief(belief, model, x)?;
    let r = slice.expected_regret(policy)?;
    Ok(Ratio::new(r * r, slice.information_gain(policy)?))
}

/// `regret^2 / posterior loss variance`.
pub fn decoupling_coefficient(
    belief: &DiscreteBelief,
    policy: &PolicySnapshot,
    model: &BanditModel,
    x: usize,
) -> Result<Ratio> {
    let slice = PosteriorSlice::from_belief(belief, model, x)?;
    let r = slice.expected_regret(policy)?;
    Ok(Ratio::new(r * r, slice.loss_variance(policy)?))
}

pub fn regret_matrix(belief: &DiscreteBelief, model: &BanditModel, x: usize) -> Result<DMatrix<f64>> {
    Ok(PosteriorSlice::from_belief(belief, model, x)?.regret_matrix())
}

fn bernoulli_only(model: &BanditModel) -> Result<()> {
    if model.is_bernoulli() {
        Ok(())
    } else {
        Err(invalid("information gain in closed form needs a Bernoulli model"))
    }
}

/// Number of singular values above `RANK_TOL` times the largest.
pub fn numerical_rank(m: &DMatrix<f64>) -> usize {
    let sv = m.singular_values();
    let top = sv.iter().copied().fold(0.0_f64, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * top).count()
}

/// A ratio whose denominator may vanish.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Ratio {
    Defined { value: f64 },
    Undefined { numerator: f64 },
}

impl Ratio {
    pub fn new(numerator: f64, denominator: f64) -> Self {
        if denominator > 0.0 {
            Ratio::Defined {
                value: numerator / denominator,
            }
        } else {
            Ratio::Undefined { numerator }
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Ratio::Defined { value } => Some(*value),
            Ratio::Undefined { .. } => None,
        }
    }
}

/// A named inequality `lhs <= rhs + tol`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundCheck {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

impl BoundCheck {
    pub fn le(name: &str, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            holds: lhs <= rhs + tol,
        }
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Per-round diagnostics against the pre-update posterior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundDiagnostics {
    pub expected_regret: f64,
    pub info_gain: f64,
    pub lifted_ratio: Ratio,
    pub decoupling: Ratio,
    pub posterior_variance: f64,
    /// `sum_a lbar(x, a)`.
    pub mean_loss_sum: f64,
    pub bound_checks: Vec<BoundCheck>,
}

impl RoundDiagnostics {
    pub fn all_hold(&self) -> bool {
        self.bound_checks.iter().all(|c| c.holds)
    }
}

/// Closed-form quantities of a Gaussian round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianRound {
    /// Posterior variance of `<theta, phi(x, a)>` per action.
    pub sigma_sq: Vec<f64>,
    /// `sum_a pi(a) log(1 + sigma_sq[a] / noise_var) / 2`.
    pub info_gain_exact: f64,
    /// `sum_a pi(a) sigma_sq[a]`.
    pub info_gain_surrogate: f64,
}

pub fn gaussian_round_quantities(
    belief: &GaussianBelief,
    features: &[&[f64]],
    policy_probs: &[f64],
) -> Result<GaussianRound> {
    if features.len() != policy_probs.len() {
        return Err(Error::DimensionMismatch {
            expected: features.len(),
            got: policy_probs.len(),
        });
    }
    let sigma_sq = features
        .iter()
        .map(|phi| belief.predictive_variance(phi))
        .collect::<Result<Vec<_>>>()?;
    let noise = belief.noise_var();
    let mut exact = 0.0;
    let mut surrogate = 0.0;
    for (s, pi) in sigma_sq.iter().zip(policy_probs) {
        exact += pi * 0.5 * (s / noise).ln_1p();
        surrogate += pi * s;
    }
    Ok(GaussianRound {
        sigma_sq,
        info_gain_exact: exact,
        info_gain_surrogate: surrogate,
    })
}

/// Monte Carlo estimate of a Gaussian round's regret and surrogate ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianRatioEstimate {
    pub draws: usize,
    /// Empirical distribution of the sampled optimal action.
    pub policy: Vec<f64>,
    pub regret: f64,
    pub regret_se: f64,
    /// `sum_a pi(a) sigma_sq[a]` under the empirical policy.
    pub surrogate_gain: f64,
    pub ratio: f64,
    /// Delta-method standard error of `ratio`.
    pub ratio_se: f64,
}

/// Estimates `E[<mean - theta, phi(A*)>]` and `E[sigma_sq(A*)]` from `draws`
/// posterior samples, where `A*` is the sample's optimal action.
pub fn gaussian_ratio_estimate<R: Rng + ?Sized>(
    belief: &GaussianBelief,
    features: &[&[f64]],
    draws: usize,
    rng: &mut R,
) -> Result<GaussianRatioEstimate> {
    if draws < 2 {
        return Err(invalid("need at least two draws"));
    }
    if features.is_empty() {
        return Err(invalid("need at least one action"));
    }
    let mean = belief.mean()?;
    let factor = belief.covariance_factor()?;
    let sigma_sq = features
        .iter()
        .map(|phi| belief.predictive_variance(phi))
        .collect::<Result<Vec<_>>>()?;
    let mean_losses: Vec<f64> = features.iter().map(|phi| dot(mean.as_slice(), phi)).collect();
    let (d, k) = (mean.len(), features.len());
    // theta = mean + L z, so <theta, phi_a> = <mean, phi_a> + <z, L^T phi_a>
    let projected: Vec<f64> = features
        .iter()
        .flat_map(|phi| {
            let factor = &factor;
            (0..d).map(move |j| (j..d).map(|i| factor[(i, j)] * phi[i]).sum::<f64>())
        })
        .collect();
    let draw = match d {
        1 => draw_moments::<1, R>,
        2 => draw_moments::<2, R>,
        3 => draw_moments::<3, R>,
        4 => draw_moments::<4, R>,
        5 => draw_moments::<5, R>,
        6 => draw_moments::<6, R>,
        7 => draw_moments::<7, R>,
        8 => draw_moments::<8, R>,
        _ => draw_moments::<0, R>,
    };
    let Moments {
        counts,
        sr,
        ss,
        srr,
        sss,
        srs,
    } = draw(d, &projected, &mean_losses, &sigma_sq, draws, rng);
    debug_assert_eq!(counts.len(), k);
    let n = draws as f64;
    let (mr, ms) = (sr / n, ss / n);
    let var_r = (srr / n - mr * mr).max(0.0) * n / (n - 1.0);
    let var_s = (sss / n - ms * ms).max(0.0) * n / (n - 1.0);
    let cov_rs = (srs / n - mr * ms) * n / (n - 1.0);
    let (ratio, ratio_se) = if ms > 0.0 {
        let gr = 2.0 * mr / ms;
        let gs = -mr * mr / (ms * ms);
        let v = (gr * gr * var_r + gs * gs * var_s + 2.0 * gr * gs * cov_rs) / n;
        (mr * mr / ms, v.max(0.0).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(GaussianRatioEstimate {
        draws,
        policy: counts.iter().map(|c| *c as f64 / n).collect(),
        regret: mr,
        regret_se: (var_r / n).sqrt(),
        surrogate_gain: ms,
        ratio,
        ratio_se,
    })
}

struct Moments {
    counts: Vec<usize>,
    sr: f64,
    ss: f64,
    srr: f64,
    sss: f64,
    srs: f64,
}

/// Sums of `r = <mean - theta, phi(A*)>` and `s = sigma_sq(A*)` over posterior
/// draws. `D` fixes the dimension at compile time; `D = 0` reads it from `dim`.
fn draw_moments<const D: usize, R: Rng + ?Sized>(
    dim: usize,
    projected: &[f64],
    mean_losses: &[f64],
    sigma_sq: &[f64],
    draws: usize,
    rng: &mut R,
) -> Moments {
    let d = if D == 0 { dim } else { D };
    let mut m = Moments {
        counts: vec![0; mean_losses.len()],
        sr: 0.0,
        ss: 0.0,
        srr: 0.0,
        sss: 0.0,
        srs: 0.0,
    };
    let mut z = vec![0.0; d];
    for _ in 0..draws {
        for zj in z.iter_mut() {
            *zj = StandardNormal.sample(rng);
        }
        let z = &z[..d];
        // branch-free argmin, ties to the lowest index
        let (mut a, mut best, mut noise) = (0, f64::INFINITY, 0.0);
        for (b, (w, ml)) in projected.chunks_exact(d).zip(mean_losses).enumerate() {
            let w = &w[..d];
            let mut e = 0.0;
            for j in 0..d {
                e += z[j] * w[j];
            }
            let v = ml + e;
            let lower = v < best;
            a = if lower { b } else { a };
            noise = if lower { e } else { noise };
            best = if lower { v } else { best };
        }
        m.counts[a] += 1;
        let (r, s) = (-noise, sigma_sq[a]);
        m.sr += r;
        m.ss += s;
        m.srr += r * r;
        m.sss += s * s;
        m.srs += r * s;
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::exact_policy;
    use crate::model::ParameterGrid;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn crossed() -> (DiscreteBelief, BanditModel) {
        let grid = Arc::new(ParameterGrid::uniform_tabular(2).unwrap());
        let model = BanditModel::tabular_bernoulli(2, 1, 2, vec![0.0, 1.0, 1.0, 0.0]).unwrap();
        (DiscreteBelief::new(grid), model)
    }

    #[test]
    fn relative_entropy_examples() {
        close(binary_relative_entropy(0.5, 0.5).unwrap(), 0.0, 0.0);
        close(binary_relative_entropy(1.0, 0.5).unwrap(), 2f64.ln(), 1e-15);
        close(binary_relative_entropy(0.2, 0.5).unwrap(), 0.192745, 1e-6);
        assert_eq!(binary_relative_entropy(0.5, 0.0).unwrap(), f64::INFINITY);
        assert_eq!(binary_relative_entropy(0.0, 0.0).unwrap(), 0.0);
        assert!(binary_relative_entropy(1.1, 0.5).is_err());
        assert!(binary_relative_entropy(0.5, -0.1).is_err());
    }

    #[test]
    fn relative_entropy_vanishes_only_on_diagonal() {
        for i in 0..100 {
            for j in 0..100 {
                let (p, q) = (i as f64 / 99.0, j as f64 / 99.0);
                let g = binary_relative_entropy(p, q).unwrap();
                if i == j {
                    assert_eq!(g, 0.0);
                } else {
                    assert!(g > 0.0, "g({p}||{q}) = {g}");
                }
            }
        }
    }

    #[test]
    fn conjugate_examples() {
        for q in [0.0, 0.3, 1.0] {
            assert_eq!(conjugate_g(0.0, q).unwrap(), 0.0);
        }
        assert_eq!(conjugate_g(5.0, 0.0).unwrap(), 0.0);
        close(conjugate_g(-2.0, 0.5).unwrap(), (0.5 + 0.5 * (-2f64).exp()).ln(), 1e-15);
        assert_eq!(conjugate_g(f64::NEG_INFINITY, 1.0).unwrap(), f64::NEG_INFINITY);
        close(conjugate_g(800.0, 0.5).unwrap(), 800.0 + 0.5f64.ln(), 1e-9);
        close(conjugate_sup_oracle(0.0, 0.5, 1000).unwrap(), 0.0, 1e-6);
        close(conjugate_sup_oracle(-2.0, 0.5, 100_000).unwrap(), -0.566219, 1e-5);
        assert!(conjugate_upper_bound(-2.0, 0.5) >= conjugate_sup_oracle(-2.0, 0.5, 100_000).unwrap());
    }

    #[test]
    fn crossed_instance_values() {
        let (b, model) = crossed();
        let pi = exact_policy(&b, &model, 0).unwrap();
        assert_eq!(pi.action_probs, vec![0.5, 0.5]);
        close(expected_instant_regret(&b, &pi, &model, 0).unwrap(), 0.5, 1e-15);
        close(posterior_loss_variance(&b, &pi, &model, 0).unwrap(), 0.25, 1e-15);
        let delta = decoupling_coefficient(&b, &pi, &model, 0).unwrap();
        close(delta.value().unwrap(), 1.0, 1e-12);
        let m = regret_matrix(&b, &model, 0).unwrap();
        close(m.trace(), 0.5, 1e-12);
    }

    #[test]
    fn single_action_gain_and_ratio() {
        let grid = Arc::new(ParameterGrid::uniform_tabular(2).unwrap());
        let model = BanditModel::tabular_bernoulli(2, 1, 1, vec![0.2, 0.8]).unwrap();
        let b = DiscreteBelief::new(grid);
        let pi = exact_policy(&b, &model, 0).unwrap();
        close(lifted_information_gain(&b, &pi, &model, 0).unwrap(), 0.192745, 1e-6);
        close(posterior_mean_loss(&b, &model, 0, 0).unwrap(), 0.5, 1e-15);
    }

    #[test]
    fn two_action_ratio_example() {
        let grid = Arc::new(ParameterGrid::uniform_tabular(2).unwrap());
        let model = BanditModel::tabular_bernoulli(2, 1, 2, vec![0.2, 0.8, 0.8, 0.2]).unwrap();
        let b = DiscreteBelief::new(grid);
        let pi = exact_policy(&b, &model, 0).unwrap();
        let slice = PosteriorSlice::from_belief(&b, &model, 0).unwrap();
        let d = slice.diagnostics(&pi).unwrap();
        assert!(d.all_hold());
        let rho = d.lifted_ratio.value().unwrap();
        // regret 0.3, gain 0.192745
        close(rho, 0.09 / 0.19274475702175753, 1e-9);
        assert!(rho <= 2.0 * d.mean_loss_sum);
    }

    #[test]
    fn point_mass_is_undefined() {
        let grid = Arc::new(ParameterGrid::uniform_tabular(1).unwrap());
        let model = BanditModel::tabular_bernoulli(1, 1, 2, vec![0.3, 0.6]).unwrap();
        let b = DiscreteBelief::new(grid);
        let pi = exact_policy(&b, &model, 0).unwrap();
        assert_eq!(
            lifted_information_ratio(&b, &pi, &model, 0).unwrap(),
            Ratio::Undefined { numerator: 0.0 }
        );
        assert_eq!(
            decoupling_coefficient(&b, &pi, &model, 0).unwrap(),
            Ratio::Undefined { numerator: 0.0 }
        );
        assert_eq!(regret_matrix(&b, &model, 0).unwrap().norm(), 0.0);
        assert_eq!(lifted_information_gain(&b, &pi, &model, 0).unwrap(), 0.0);
    }

    #[test]
    fn identical_rows_carry_no_information() {
        let grid = Arc::new(ParameterGrid::tabular(vec![0.1, 0.6, 0.3]).unwrap());
        let model = BanditModel::tabular_bernoulli(3, 1, 2, vec![0.3, 0.7, 0.3, 0.7, 0.3, 0.7]).unwrap();
        let b = DiscreteBelief::new(grid);
        let pi = exact_policy(&b, &model, 0).unwrap();
        assert_eq!(lifted_information_gain(&b, &pi, &model, 0).unwrap(), 0.0);
        assert_eq!(expected_instant_regret(&b, &pi, &model, 0).unwrap(), 0.0);
    }

    #[test]
    fn weighted_mean_loss() {
        let grid = Arc::new(ParameterGrid::tabular(vec![0.25, 0.75]).unwrap());
        let model = BanditModel::tabular_bernoulli(2, 1, 1, vec![0.0, 1.0]).unwrap();
        let b = DiscreteBelief::new(grid);
        close(posterior_mean_loss(&b, &model, 0, 0).unwrap(), 0.75, 1e-15);
    }

    #[test]
    fn table_slice_matches_model_slice() {
        let grid = Arc::new(ParameterGrid::tabular(vec![0.2, 0.5, 0.3]).unwrap());
        let table = vec![0.1, 0.4, 0.9, 0.2, 0.6, 0.6, 0.3, 0.2, 0.8, 0.5, 0.5, 0.1];
        let model = BanditModel::tabular_bernoulli(3, 2, 2, table).unwrap();
        let b = DiscreteBelief::new(grid.clone());
        let lt = model.tabulate(&grid).unwrap();
        for x in 0..2 {
            let s1 = PosteriorSlice::from_belief(&b, &model, x).unwrap();
            let s2 = PosteriorSlice::from_table(b.weights(), &lt, x).unwrap();
            assert_eq!(s1.policy(), s2.policy());
            let pi = s1.policy();
            assert_eq!(s1.diagnostics(&pi).unwrap(), s2.diagnostics(&pi).unwrap());
        }
    }

    #[test]
    fn gaussian_round_examples() {
        let g = GaussianBelief::new(2, 1.0, 1.0).unwrap();
        let e1 = [1.0, 0.0];
        let zero = [0.0, 0.0];
        let r = gaussian_round_quantities(&g, &[&e1, &zero], &[0.5, 0.5]).unwrap();
        assert_eq!(r.sigma_sq, vec![1.0, 0.0]);
        close(r.info_gain_exact, 0.5 * 0.5 * 2f64.ln(), 1e-15);
        close(r.info_gain_surrogate, 0.5, 1e-15);
    }

    #[test]
    fn gaussian_symmetric_ratio() {
        // two opposite features: A* = sign of theta, regret = E|theta| = sqrt(2/pi)
        let g = GaussianBelief::new(1, 1.0, 1.0).unwrap();
        let (p, m) = ([1.0], [-1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let est = gaussian_ratio_estimate(&g, &[&p, &m], 200_000, &mut rng).unwrap();
        let expected = (2.0 / std::f64::consts::PI).sqrt();
        assert!((est.regret - expected).abs() < 4.0 * est.regret_se);
        assert!((est.ratio - expected * expected).abs() < 4.0 * est.ratio_se + 1e-12);
        assert!(est.ratio <= 1.0);
    }

    proptest! {
        #[test]
        fn conjugate_below_quadratic(u in -20.0f64..=0.0, q in 0.0f64..=1.0) {
            prop_assert!(conjugate_g(u, q).unwrap() <= conjugate_upper_bound(u, q) + 1e-12);
        }

        #[test]
        fn random_rounds_obey_lemma6_and_trace(
            k in 1usize..=6,
            n in 1usize..=12,
            seed in any::<u64>(),
        ) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
            let total: f64 = weights.iter().sum();
            let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
            let means: Vec<f64> = (0..n * k).map(|_| rng.random::<f64>()).collect();
            let slice = PosteriorSlice::new(weights, means, k).unwrap();
            let pi = slice.policy();
            let d = slice.diagnostics(&pi).unwrap();
            prop_assert!(d.all_hold(), "{:?}", d.bound_checks);
            prop_assert!((slice.regret_matrix().trace() - d.expected_regret).abs() < 1e-10);
        }
    }
}
