//! Thompson Sampling action selection and its exact action distribution.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{sample_with_factor, Belief, DiscreteBelief, GaussianBelief, Sample};
use crate::error::{check_index, invalid, Result};
use crate::model::{BanditModel, LossTable, Param};

/// Index of the smallest entry; ties go to the lowest index.
pub(crate) fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Action distribution `pi_t(. | x)` of the policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySnapshot {
    pub action_probs: Vec<f64>,
    /// True when estimated by Monte Carlo rather than computed exactly.
    #[serde(default)]
    pub approximate: bool,
}

impl PolicySnapshot {
    pub fn n_actions(&self) -> usize {
        self.action_probs.len()
    }
}

/// `argmin_a mean_loss(theta, x, a)`.
pub fn optimal_action(model: &BanditModel, theta: Param<'_>, x: usize) -> Result<usize> {
    check_index("context", x, model.n_contexts())?;
    let row = (0..model.n_actions())
        .map(|a| model.mean_loss(theta, x, a))
        .collect::<Result<Vec<_>>>()?;
    Ok(argmin(&row))
}

/// Posterior probability that each action is optimal at context `x`.
pub fn exact_policy(belief: &DiscreteBelief, model: &BanditModel, x: usize) -> Result<PolicySnapshot> {
    let grid = belief.grid();
    model.check_grid(grid)?;
    let weights = belief.weights();
    let mut probs = vec![0.0; model.n_actions()];
    for (i, w) in weights.iter().enumerate() {
        if *w > 0.0 {
            probs[optimal_action(model, model.grid_param(grid, i), x)?] += w;
        }
    }
    Ok(PolicySnapshot {
        action_probs: probs,
        approximate: false,
    })
}

/// [`exact_policy`] from normalized weights and a precomputed table.
pub fn exact_policy_from_table(weights: &[f64], table: &LossTable, x: usize) -> Result<PolicySnapshot> {
    check_index("context", x, table.n_contexts())?;
    let mut probs = vec![0.0; table.n_actions()];
    for (w, a) in weights.iter().zip(table.optimal_actions(x)) {
        probs[*a] += w;
    }
    Ok(PolicySnapshot {
        action_probs: probs,
        approximate: false,
    })
}

/// One Thompson Sampling step: draw `theta_t ~ Q_t` and play its optimal action.
pub fn ts_act<R: Rng + ?Sized>(belief: &Belief, model: &BanditModel, x: usize, rng: &mut R) -> Result<usize> {
    match belief.posterior_sample(rng)? {
        Sample::Atom(i) => {
            let Belief::Discrete(b) = belief else { unreachable!() };
            optimal_action(model, model.grid_param(b.grid(), i), x)
        }
        Sample::Vector(theta) => {
            if theta.len() != model.dim() {
                return Err(invalid("posterior dimension does not match the model"));
            }
            optimal_action(model, Param::Vector(&theta), x)
        }
    }
}

/// Thompson Sampling on a discrete belief using a precomputed table.
pub fn ts_act_table<R: Rng + ?Sized>(belief: &DiscreteBelief, table: &LossTable, x: usize, rng: &mut R) -> usize {
    table.optimal_action(belief.sample(rng), x)
}

/// Monte Carlo estimate of the Gaussian-posterior policy from `draws` samples.
pub fn gaussian_policy_estimate<R: Rng + ?Sized>(
    belief: &GaussianBelief,
    model: &BanditModel,
    x: usize,
    draws: usize,
    rng: &mut R,
) -> Result<PolicySnapshot> {
    if draws == 0 {
        return Err(invalid("draw count must be positive"));
    }
    let mean = belief.mean()?;
    let factor = belief.covariance_factor()?;
    let mut counts = vec![0usize; model.n_actions()];
    for _ in 0..draws {
        let theta = sample_with_factor(&mean, &factor, rng);
        counts[optimal_action(model, Param::Vector(&theta), x)?] += 1;
    }
    Ok(PolicySnapshot {
        action_probs: counts.iter().map(|c| *c as f64 / draws as f64).collect(),
        approximate: true,
    })
}
