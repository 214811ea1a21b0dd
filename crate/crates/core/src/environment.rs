//! Context adversaries and the interaction loop.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::agent::{argmin, optimal_action};
use crate::belief::{DiscreteBelief, GaussianBelief, Observation};
use crate::error::{invalid, Error, Result};
use crate::infodiag::{
    gaussian_ratio_estimate, gaussian_round_quantities, GaussianRatioEstimate, PosteriorSlice, RoundDiagnostics,
};
use crate::model::{bernoulli_draw, dot, BanditModel, LossTable, Param, ParameterGrid};

/// Stream id of the adversary's generator; the agent and environment use stream 0.
const ADVERSARY_STREAM: u64 = 1;

/// Largest table (atoms x contexts x actions) precomputed for a Bernoulli run.
const TABLE_LIMIT: usize = 1 << 26;

/// Everything the adversary may look at: past contexts, actions and losses.
#[derive(Debug, Clone, Default)]
pub struct History {
    observations: Vec<Observation>,
}

impl History {
    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    fn push(&mut self, obs: Observation) {
        self.observations.push(obs);
    }
}

/// Adaptive context rule: visible history and a private generator in, context out.
pub type AdaptiveFn = Arc<dyn Fn(&History, &mut ChaCha8Rng) -> usize + Send + Sync>;

#[derive(Clone)]
pub enum ContextAdversary {
    /// Cycles through the given contexts.
    FixedSequence(Vec<usize>),
    IidUniform,
    RoundRobin,
    Adaptive(AdaptiveFn),
}

impl fmt::Debug for ContextAdversary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ContextAdversary::FixedSequence(s) => f.debug_tuple("FixedSequence").field(s).finish(),
            ContextAdversary::IidUniform => f.write_str("IidUniform"),
            ContextAdversary::RoundRobin => f.write_str("RoundRobin"),
            ContextAdversary::Adaptive(_) => f.write_str("Adaptive(..)"),
        }
    }
}

impl ContextAdversary {
    pub fn validate(&self, n_contexts: usize) -> Result<()> {
        if let ContextAdversary::FixedSequence(seq) = self {
            if seq.is_empty() {
                return Err(invalid("context sequence is empty"));
            }
            if let Some(x) = seq.iter().find(|x| **x >= n_contexts) {
                return Err(Error::IndexOutOfRange {
                    what: "context",
                    index: *x,
                    len: n_contexts,
                });
            }
        }
        Ok(())
    }

    pub fn choose(&self, history: &History, n_contexts: usize, rng: &mut ChaCha8Rng) -> Result<usize> {
        let t = history.len();
        let x = match self {
            ContextAdversary::FixedSequence(seq) => seq[t % seq.len()],
            ContextAdversary::IidUniform => rng.random_range(0..n_contexts),
            ContextAdversary::RoundRobin => t % n_contexts,
            ContextAdversary::Adaptive(f) => f(history, rng),
        };
        if x >= n_contexts {
            return Err(Error::IndexOutOfRange {
                what: "context",
                index: x,
                len: n_contexts,
            });
        }
        Ok(x)
    }
}

/// Generators for one episode: agent/environment stream and adversary stream.
pub fn episode_rngs(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let main = ChaCha8Rng::seed_from_u64(seed);
    let mut adversary = ChaCha8Rng::seed_from_u64(seed);
    adversary.set_stream(ADVERSARY_STREAM);
    (main, adversary)
}

/// Gaussian-run extras for one round, taken before the update.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianRoundRecord {
    /// `phi^T V_t^{-1} phi` for the played feature.
    pub potential: f64,
    /// Posterior variance of each action's mean loss.
    pub sigma_sq: Vec<f64>,
    pub ratio_estimate: Option<GaussianRatioEstimate>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// 1-based round index.
    pub t: usize,
    pub x: usize,
    pub a: usize,
    pub loss: f64,
    pub optimal_action: usize,
    pub instant_regret: f64,
    pub cum_regret: f64,
    pub diagnostics: Option<RoundDiagnostics>,
    pub gaussian: Option<GaussianRoundRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    /// Index of the true atom for grid priors.
    pub true_atom: Option<usize>,
    /// True parameter for vector models.
    pub true_theta: Option<Vec<f64>>,
    pub rounds: Vec<RoundRecord>,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn cumulative_regret(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.cum_regret).collect()
    }

    pub fn trajectory(&self) -> Vec<Observation> {
        self.rounds.iter().map(|r| (r.x, r.a, r.loss)).collect()
    }
}

/// A finished discrete episode with its final posterior.
#[derive(Debug, Clone)]
pub struct Episode {
    pub record: RunRecord,
    pub belief: DiscreteBelief,
}

/// Thompson Sampling over a grid prior.
#[derive(Debug, Clone)]
pub struct Simulator {
    grid: Arc<ParameterGrid>,
    model: Arc<BanditModel>,
    table: Option<LossTable>,
}

impl Simulator {
    pub fn new(grid: Arc<ParameterGrid>, model: Arc<BanditModel>) -> Result<Self> {
        model.check_grid(&grid)?;
        let cells = grid.len() * model.n_contexts() * model.n_actions();
        let table = if model.is_bernoulli() && cells <= TABLE_LIMIT {
            Some(model.tabulate(&grid)?)
        } else {
            None
        };
        Ok(Self { grid, model, table })
    }

    pub fn grid(&self) -> &Arc<ParameterGrid> {
        &self.grid
    }

    pub fn model(&self) -> &Arc<BanditModel> {
        &self.model
    }

    pub fn table(&self) -> Option<&LossTable> {
        self.table.as_ref()
    }

    fn mean(&self, atom: usize, x: usize, a: usize) -> Result<f64> {
        match &self.table {
            Some(t) => Ok(t.mean(atom, x, a)),
            None => self.model.mean_loss(self.model.grid_param(&self.grid, atom), x, a),
        }
    }

    fn best(&self, atom: usize, x: usize) -> Result<usize> {
        match &self.table {
            Some(t) => Ok(t.optimal_action(atom, x)),
            None => optimal_action(&self.model, self.model.grid_param(&self.grid, atom), x),
        }
    }

    pub fn run(&self, adversary: &ContextAdversary, horizon: usize, seed: u64, diagnostics: bool) -> Result<RunRecord> {
        Ok(self.run_episode(adversary, horizon, seed, diagnostics)?.record)
    }

    /// One episode: `theta* ~ Q1`, then `horizon` rounds of Thompson Sampling.
    pub fn run_episode(
        &self,
        adversary: &ContextAdversary,
        horizon: usize,
        seed: u64,
        diagnostics: bool,
    ) -> Result<Episode> {
        if horizon == 0 {
            return Err(invalid("horizon must be >= 1"));
        }
        let nx = self.model.n_contexts();
        adversary.validate(nx)?;
        let (mut rng, mut adv_rng) = episode_rngs(seed);
        let mut belief = DiscreteBelief::new(self.grid.clone());
        let star = belief.sample(&mut rng);
        let mut history = History::default();
        let mut rounds = Vec::with_capacity(horizon);
        let mut cum = 0.0;
        for t in 1..=horizon {
            let x = adversary.choose(&history, nx, &mut adv_rng)?;
            let diag = if diagnostics {
                let slice = match &self.table {
                    Some(table) => PosteriorSlice::from_table(belief.weights(), table, x)?,
                    None => PosteriorSlice::from_belief(&belief, &self.model, x)?,
                };
                Some(slice.diagnostics(&slice.policy())?)
            } else {
                None
            };
            let a = self.best(belief.sample(&mut rng), x)?;
            let loss = match &self.table {
                Some(table) => bernoulli_draw(table.mean(star, x, a), &mut rng),
                None => self
                    .model
                    .sample_loss(self.model.grid_param(&self.grid, star), x, a, &mut rng)?,
            };
            let opt = self.best(star, x)?;
            let regret = self.mean(star, x, a)? - self.mean(star, x, opt)?;
            cum += regret;
            match &self.table {
                Some(table) => belief.update_with_table(table, x, a, loss)?,
                None => belief.update(&self.model, x, a, loss)?,
            }
            history.push((x, a, loss));
            rounds.push(RoundRecord {
                t,
                x,
                a,
                loss,
                optimal_action: opt,
                instant_regret: regret,
                cum_regret: cum,
                diagnostics: diag,
                gaussian: None,
            });
        }
        Ok(Episode {
            record: RunRecord {
                true_atom: Some(star),
                true_theta: self.grid.point(star).map(<[f64]>::to_vec),
                rounds,
            },
            belief,
        })
    }
}

/// Convenience wrapper around [`Simulator`].
pub fn run_episode(
    grid: Arc<ParameterGrid>,
    model: Arc<BanditModel>,
    adversary: &ContextAdversary,
    horizon: usize,
    seed: u64,
    diagnostics: bool,
) -> Result<RunRecord> {
    Simulator::new(grid, model)?.run(adversary, horizon, seed, diagnostics)
}

/// Thompson Sampling with the conjugate Gaussian posterior, `theta* ~ N(0, lambda I)`.
#[derive(Debug, Clone)]
pub struct GaussianSimulator {
    model: Arc<BanditModel>,
    prior_scale: f64,
    /// Posterior draws per round for the ratio estimate; 0 disables it.
    pub ratio_draws: usize,
}

impl GaussianSimulator {
    pub fn new(model: Arc<BanditModel>, prior_scale: f64) -> Result<Self> {
        if model.noise_std().is_none() {
            return Err(invalid("the conjugate simulator needs a Gaussian-linear model"));
        }
        if !(prior_scale > 0.0 && prior_scale.is_finite()) {
            return Err(invalid(format!("prior scale must be positive, got {prior_scale}")));
        }
        Ok(Self {
            model,
            prior_scale,
            ratio_draws: 0,
        })
    }

    pub fn with_ratio_draws(mut self, draws: usize) -> Self {
        self.ratio_draws = draws;
        self
    }

    pub fn run(&self, adversary: &ContextAdversary, horizon: usize, seed: u64, diagnostics: bool) -> Result<RunRecord> {
        if horizon == 0 {
            return Err(invalid("horizon must be >= 1"));
        }
        let model = &*self.model;
        let features = model.features().ok_or_else(|| invalid("missing feature map"))?;
        let noise = model.noise_std().unwrap_or(1.0);
        let (nx, k, d) = (model.n_contexts(), model.n_actions(), model.dim());
        adversary.validate(nx)?;
        let (mut rng, mut adv_rng) = episode_rngs(seed);
        let star: Vec<f64> = (0..d)
            .map(|_| self.prior_scale.sqrt() * {
                let z: f64 = StandardNormal.sample(&mut rng);
                z
            })
            .collect();
        let mut belief = GaussianBelief::new(d, self.prior_scale, noise * noise)?;
        let mut history = History::default();
        let mut rounds = Vec::with_capacity(horizon);
        let mut cum = 0.0;
        let mut losses = vec![0.0; k];
        for t in 1..=horizon {
            let x = adversary.choose(&history, nx, &mut adv_rng)?;
            let phis = features.context(x);
            let mean = belief.mean()?;
            let factor = belief.covariance_factor()?;
            let theta = crate::belief::sample_with_factor(&mean, &factor, &mut rng);
            for (l, phi) in losses.iter_mut().zip(&phis) {
                *l = dot(&theta, phi);
            }
            let a = argmin(&losses);
            let gaussian = if diagnostics {
                let ratio_estimate = if self.ratio_draws > 0 {
                    Some(gaussian_ratio_estimate(&belief, &phis, self.ratio_draws, &mut rng)?)
                } else {
                    None
                };
                let quantities = gaussian_round_quantities(&belief, &phis, &one_hot(k, a))?;
                Some(GaussianRoundRecord {
                    potential: quantities.sigma_sq[a] / belief.noise_var(),
                    sigma_sq: quantities.sigma_sq,
                    ratio_estimate,
                })
            } else {
                None
            };
            let loss = model.sample_loss(Param::Vector(&star), x, a, &mut rng)?;
            let opt = optimal_action(model, Param::Vector(&star), x)?;
            let regret = dot(&star, phis[a]) - dot(&star, phis[opt]);
            cum += regret;
            belief.update(phis[a], loss)?;
            history.push((x, a, loss));
            rounds.push(RoundRecord {
                t,
                x,
                a,
                loss,
                optimal_action: opt,
                instant_regret: regret,
                cum_regret: cum,
                diagnostics: None,
                gaussian,
            });
        }
        Ok(RunRecord {
            true_atom: None,
            true_theta: Some(star),
            rounds,
        })
    }
}

fn one_hot(k: usize, a: usize) -> Vec<f64> {
    let mut v = vec![0.0; k];
    v[a] = 1.0;
    v
}

/// Index of the action whose loss encodes the optimal action.
pub const REVEAL_ACTION: usize = 0;

/// Two contexts, `K` actions, one atom per assignment of an optimal action to each
/// context, uniform prior, round-robin contexts. With `s = a*(x)` counted from 1,
/// the reveal action's loss is `1 - 10^-s`; if `s = 1` every other action loses 1,
/// otherwise action `s` loses 0 and the rest lose 0.5.
pub fn revealing_instance(n_actions: usize) -> Result<(Arc<ParameterGrid>, BanditModel, ContextAdversary)> {
    if !(2..=6).contains(&n_actions) {
        return Err(invalid(format!("revealing instance needs 2 <= K <= 6, got {n_actions}")));
    }
    let k = n_actions;
    let nx = 2;
    let n_atoms = k * k;
    let mut table = Vec::with_capacity(n_atoms * nx * k);
    for atom in 0..n_atoms {
        for x in 0..nx {
            let star = revealing_optimum(atom, x, k);
            for a in 0..k {
                table.push(revealing_loss(star, a));
            }
        }
    }
    let model = BanditModel::tabular_bernoulli(n_atoms, nx, k, table)?;
    let grid = Arc::new(ParameterGrid::uniform_tabular(n_atoms)?);
    Ok((grid, model, ContextAdversary::RoundRobin))
}

/// Optimal action (0-based) of `atom` at context `x` in [`revealing_instance`].
pub fn revealing_optimum(atom: usize, x: usize, n_actions: usize) -> usize {
    if x == 0 {
        atom % n_actions
    } else {
        atom / n_actions
    }
}

fn revealing_loss(star: usize, a: usize) -> f64 {
    if a == REVEAL_ACTION {
        1.0 - 10f64.powi(-(star as i32 + 1))
    } else if star == REVEAL_ACTION {
        1.0
    } else if a == star {
        0.0
    } else {
        0.5
    }
}
