//! Built-in verification suites over randomized instances with fixed seeds.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::instances::{random_in_ball, random_linear_bernoulli, random_simplex, random_tabular, random_unit_features};
use super::seeds::derive_run_seed;
use crate::agent::optimal_action;
use crate::belief::{telescoping_check, DiscreteBelief, GaussianBelief};
use crate::environment::{ContextAdversary, GaussianSimulator, Simulator};
use crate::error::{invalid, Error, Result};
use crate::geometry::{
    ball_cover_bound, bound_gaussian, bound_theorem1, bound_theorem2, bound_theorem3, bound_theorem4, build_cover,
    cover_chain_from_belief, discretize_ball, elliptical_potential_bound, lemma3_ratio_bound, PriorDensity,
};
use crate::infodiag::{
    conjugate_g, conjugate_sup_oracle, conjugate_upper_bound, numerical_rank, PosteriorSlice,
};
use crate::model::{euclidean, BanditModel, ParameterGrid};

/// Master seed of every suite.
pub const VERIFY_SEED: u64 = 0x5EED_2024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Conjugacy,
    Telescoping,
    Lemma1,
    Lemma2,
    Lemma6,
    Lemma8,
    Gaussian,
    Covers,
    Bounds,
    All,
}

impl Suite {
    pub const EACH: [Suite; 9] = [
        Suite::Conjugacy,
        Suite::Telescoping,
        Suite::Lemma1,
        Suite::Lemma2,
        Suite::Lemma6,
        Suite::Lemma8,
        Suite::Gaussian,
        Suite::Covers,
        Suite::Bounds,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Conjugacy => "conjugacy",
            Suite::Telescoping => "telescoping",
            Suite::Lemma1 => "lemma1",
            Suite::Lemma2 => "lemma2",
            Suite::Lemma6 => "lemma6",
            Suite::Lemma8 => "lemma8",
            Suite::Gaussian => "gaussian",
            Suite::Covers => "covers",
            Suite::Bounds => "bounds",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .iter()
            .chain(std::iter::once(&Suite::All))
            .find(|x| x.name() == s)
            .copied()
            .ok_or_else(|| invalid(format!("unknown suite `{s}`")))
    }
}

/// Outcome of one named check; `observed <= limit` is the pass condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyCheck {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub limit: f64,
    /// Instance seed at the worst observation.
    pub seed: Option<u64>,
    pub note: Option<String>,
}

impl fmt::Display for VerifyCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}/{}: observed {:.6e}, limit {:.6e}, margin {:.3e}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.observed,
            self.limit,
            self.limit - self.observed
        )?;
        if let Some(s) = self.seed {
            write!(f, " (seed {s:#x})")?;
        }
        if let Some(n) = &self.note {
            write!(f, " -- {n}")?;
        }
        Ok(())
    }
}

/// Tracks the worst `observed` against a fixed limit.
struct Worst {
    suite: &'static str,
    name: &'static str,
    limit: f64,
    observed: f64,
    seed: Option<u64>,
    failed: bool,
}

impl Worst {
    fn new(suite: &'static str, name: &'static str, limit: f64) -> Self {
        Self {
            suite,
            name,
            limit,
            observed: f64::NEG_INFINITY,
            seed: None,
            failed: false,
        }
    }

    fn see(&mut self, value: f64, seed: u64) {
        if value > self.observed || value.is_nan() {
            self.observed = value;
            self.seed = Some(seed);
        }
        if value.is_nan() || value > self.limit {
            self.failed = true;
        }
    }

    fn finish(self, strict: bool) -> VerifyCheck {
        let passed = !self.failed && if strict { self.observed < self.limit } else { self.observed <= self.limit };
        VerifyCheck {
            suite: self.suite.to_string(),
            name: self.name.to_string(),
            passed,
            observed: self.observed,
            limit: self.limit,
            seed: self.seed,
            note: None,
        }
    }
}

pub fn run_suite(suite: Suite) -> Result<Vec<VerifyCheck>> {
    match suite {
        Suite::Conjugacy => conjugacy(),
        Suite::Telescoping => telescoping(),
        Suite::Lemma1 => bernoulli_rounds(true),
        Suite::Lemma6 => bernoulli_rounds(false),
        Suite::Lemma2 => linear_rounds(true),
        Suite::Lemma8 => linear_rounds(false),
        Suite::Gaussian => gaussian(),
        Suite::Covers => covers(),
        Suite::Bounds => bounds(),
        Suite::All => {
            let mut out = Vec::new();
            for s in Suite::EACH {
                out.extend(run_suite(s)?);
            }
            Ok(out)
        }
    }
}

pub const CONJUGACY_U: [f64; 9] = [-10.0, -5.0, -2.0, -1.0, -0.1, 0.0, 0.5, 1.0, 3.0];
pub const CONJUGACY_Q: [f64; 5] = [0.01, 0.1, 0.5, 0.9, 0.99];

fn conjugacy() -> Result<Vec<VerifyCheck>> {
    let mut diff = Worst::new("conjugacy", "closed_form_vs_grid_oracle", 1e-5);
    let mut upper = Worst::new("conjugacy", "quadratic_upper_bound", 1e-12);
    for u in CONJUGACY_U {
        for q in CONJUGACY_Q {
            let closed = conjugate_g(u, q)?;
            diff.see((closed - conjugate_sup_oracle(u, q, 100_000)?).abs(), 0);
            if u <= 0.0 {
                upper.see(closed - conjugate_upper_bound(u, q), 0);
            }
        }
    }
    Ok(vec![diff.finish(true), upper.finish(false)])
}

fn telescoping() -> Result<Vec<VerifyCheck>> {
    let mut worst = Worst::new("telescoping", "max_abs_lhs_minus_rhs", 1e-8);
    for i in 0..100 {
        let seed = derive_run_seed(VERIFY_SEED, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(1..=50);
        let (nx, k) = (rng.random_range(1..=4), rng.random_range(1..=5));
        let horizon = rng.random_range(0..=100);
        let (grid, model) = random_tabular(&mut rng, n, nx, k)?;
        let star = DiscreteBelief::new(grid.clone()).sample(&mut rng);
        let traj = random_trajectory(&mut rng, &model, star, horizon)?;
        let (lhs, rhs) = telescoping_check(&grid, &model, star, &traj)?;
        worst.see((lhs - rhs).abs(), seed);
    }
    Ok(vec![worst.finish(true)])
}

/// Uniform contexts and actions, losses drawn from the given tabular atom.
pub fn random_trajectory<R: Rng + ?Sized>(
    rng: &mut R,
    model: &BanditModel,
    atom: usize,
    horizon: usize,
) -> Result<Vec<(usize, usize, f64)>> {
    (0..horizon)
        .map(|_| {
            let x = rng.random_range(0..model.n_contexts());
            let a = rng.random_range(0..model.n_actions());
            let loss = model.sample_loss(crate::model::Param::Index(atom), x, a, rng)?;
            Ok((x, a, loss))
        })
        .collect()
}

fn bernoulli_rounds(lemma1: bool) -> Result<Vec<VerifyCheck>> {
    let mut ratio = Worst::new("lemma1", "max_rho_over_2k", 1.0);
    let mut l6 = Worst::new("lemma6", "max_regret_minus_sqrt_2_i_sum_lbar", 1e-10);
    let mut l6_rho = Worst::new("lemma6", "max_rho_minus_2_sum_lbar", 1e-9);
    for i in 0..1000 {
        let seed = derive_run_seed(VERIFY_SEED ^ 0x6, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = rng.random_range(1..=8);
        let n = rng.random_range(1..=50);
        let weights = random_simplex(&mut rng, n, Some(4));
        let means: Vec<f64> = (0..n * k).map(|_| bernoulli_mean(&mut rng)).collect();
        let slice = PosteriorSlice::new(weights, means, k)?;
        let d = slice.diagnostics(&slice.policy())?;
        l6.see(d.expected_regret - (2.0 * d.info_gain * d.mean_loss_sum).sqrt(), seed);
        if let Some(rho) = d.lifted_ratio.value() {
            ratio.see(rho / (2.0 * k as f64), seed);
            l6_rho.see(rho - 2.0 * d.mean_loss_sum, seed);
        } else if d.expected_regret > 0.0 {
            l6.see(f64::INFINITY, seed);
        }
    }
    Ok(if lemma1 {
        vec![ratio.finish(true)]
    } else {
        vec![l6.finish(false), l6_rho.finish(false)]
    })
}

/// Mostly uniform, sometimes exactly 0 or 1, sometimes repeated.
fn bernoulli_mean<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    match rng.random_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        2 => 0.5,
        _ => rng.random(),
    }
}

fn linear_rounds(lemma2: bool) -> Result<Vec<VerifyCheck>> {
    let mut pinsker = Worst::new("lemma2", "max_2var_minus_gain", 1e-10);
    let mut rho_half = Worst::new("lemma2", "max_rho_minus_d_over_2", 1e-9);
    let mut delta = Worst::new("lemma8", "max_delta_minus_d", 1e-9);
    let mut rank = Worst::new("lemma8", "max_rank_minus_d", 0.0);
    let mut trace = Worst::new("lemma8", "max_abs_trace_minus_regret", 1e-10);
    let mut cs = Worst::new("lemma8", "max_trace_sq_minus_rank_frob_sq", 1e-12);
    for i in 0..200 {
        let seed = derive_run_seed(VERIFY_SEED ^ 0x8, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=3);
        let k = rng.random_range(2..=10);
        let n = rng.random_range(2..=40);
        let nx = rng.random_range(1..=3);
        let (grid, model) = random_linear_bernoulli(&mut rng, d, n, nx, k)?;
        let df = d as f64;
        for_each_posterior(&mut rng, grid, &model, 8, |slice| {
            let diag = slice.diagnostics(&slice.policy())?;
            pinsker.see(2.0 * diag.posterior_variance - diag.info_gain, seed);
            if let Some(rho) = diag.lifted_ratio.value() {
                rho_half.see(rho - df / 2.0, seed);
            }
            if let Some(dl) = diag.decoupling.value() {
                delta.see(dl - df, seed);
            }
            let m = slice.regret_matrix();
            let r = numerical_rank(&m);
            rank.see(r as f64 - df, seed);
            trace.see((m.trace() - diag.expected_regret).abs(), seed);
            cs.see(m.trace().powi(2) - r as f64 * m.norm_squared(), seed);
            Ok(())
        })?;
    }
    Ok(if lemma2 {
        vec![pinsker.finish(false), rho_half.finish(false)]
    } else {
        vec![delta.finish(false), rank.finish(false), trace.finish(false), cs.finish(false)]
    })
}

/// Visits the prior and the posteriors along a short Thompson Sampling trajectory.
pub fn for_each_posterior<R, F>(
    rng: &mut R,
    grid: Arc<ParameterGrid>,
    model: &BanditModel,
    rounds: usize,
    mut visit: F,
) -> Result<()>
where
    R: Rng + ?Sized,
    F: FnMut(&PosteriorSlice) -> Result<()>,
{
    let mut belief = DiscreteBelief::new(grid.clone());
    let star = belief.sample(rng);
    for _ in 0..rounds {
        let x = rng.random_range(0..model.n_contexts());
        let slice = PosteriorSlice::from_belief(&belief, model, x)?;
        visit(&slice)?;
        let a = optimal_action(model, model.grid_param(&grid, belief.sample(rng)), x)?;
        let loss = model.sample_loss(model.grid_param(&grid, star), x, a, rng)?;
        belief.update(model, x, a, loss)?;
    }
    Ok(())
}

fn gaussian() -> Result<Vec<VerifyCheck>> {
    let mut batch = Worst::new("gaussian", "max_abs_diff_vs_batch_solve", 1e-8);
    for i in 0..20 {
        let seed = derive_run_seed(VERIFY_SEED ^ 0x9, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=8);
        let t = rng.random_range(0..=100);
        let (lambda, sigma) = (rng.random_range(0.5..2.0), rng.random_range(0.5..2.0));
        let mut g = GaussianBelief::new(d, lambda, sigma * sigma)?;
        let mut v = DMatrix::<f64>::identity(d, d) * (sigma * sigma / lambda);
        let mut b = DVector::<f64>::zeros(d);
        for _ in 0..t {
            let phi = random_in_ball(&mut rng, d, 1.0);
            let loss: f64 = rng.random_range(-1.0..1.0);
            g.update(&phi, loss)?;
            let p = DVector::from_column_slice(&phi);
            v += &p * p.transpose();
            b += p * loss;
        }
        let lu = v.lu();
        let mean = lu.solve(&b).ok_or_else(|| Error::Numeric("singular design".into()))?;
        let cov = lu.try_inverse().ok_or_else(|| Error::Numeric("singular design".into()))? * (sigma * sigma);
        batch.see((g.mean()? - mean).amax().max((g.covariance()? - cov).amax()), seed);
    }

    let mut ratio = Worst::new("gaussian", "max_rho_minus_3se_minus_lemma3_bound", 1e-6);
    let mut potential = Worst::new("gaussian", "max_potential_sum_minus_bound", 0.0);
    for (j, (d, k)) in [(2usize, 2usize), (3, 2), (4, 8)].into_iter().enumerate() {
        let seed = derive_run_seed(VERIFY_SEED ^ 0xA, j as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fm = random_unit_features(&mut rng, d, 4, k)?;
        let model = Arc::new(BanditModel::gaussian_linear(fm, 1.0)?);
        let sim = GaussianSimulator::new(model, 1.0)?.with_ratio_draws(4000);
        let horizon = 40;
        let rec = sim.run(&ContextAdversary::IidUniform, horizon, seed, true)?;
        let limit = lemma3_ratio_bound(d as f64, k as f64);
        let mut sum = 0.0;
        for r in &rec.rounds {
            let g = r.gaussian.as_ref().ok_or_else(|| invalid("missing Gaussian diagnostics"))?;
            sum += g.potential;
            if let Some(e) = &g.ratio_estimate {
                ratio.see(e.ratio - 3.0 * e.ratio_se - limit, seed);
            }
        }
        potential.see(sum - elliptical_potential_bound(d as f64, horizon as f64, 1.0, 1.0, 1.0), seed);
    }
    Ok(vec![batch.finish(false), ratio.finish(false), potential.finish(false)])
}

fn covers() -> Result<Vec<VerifyCheck>> {
    let mut within = Worst::new("covers", "max_atom_to_center_minus_eps", 1e-12);
    let mut diameter = Worst::new("covers", "max_cell_diameter_minus_2eps", 1e-12);
    let mut count = Worst::new("covers", "max_centers_over_ball_bound", 1.0);
    for i in 0..20 {
        let seed = derive_run_seed(VERIFY_SEED ^ 0xC, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..=4);
        let eps = rng.random_range(0.1..1.0);
        let pts: Vec<Vec<f64>> = (0..1000).map(|_| random_in_ball(&mut rng, d, 1.0)).collect();
        let grid = ParameterGrid::from_points(pts, vec![1e-3; 1000], Some(1.0))?;
        let cover = build_cover(&grid, eps)?;
        let centers = cover.centers(&grid);
        let points: Vec<&[f64]> = grid.points().collect();
        for (a, p) in points.iter().enumerate() {
            within.see(euclidean(p, centers[cover.assignment[a]]) - eps, seed);
        }
        let mut cells: Vec<Vec<usize>> = vec![Vec::new(); cover.n_centers()];
        for (a, c) in cover.assignment.iter().enumerate() {
            cells[*c].push(a);
        }
        for cell in &cells {
            for (x, &p) in cell.iter().enumerate() {
                for &q in &cell[x + 1..] {
                    diameter.see(euclidean(points[p], points[q]) - 2.0 * eps, seed);
                }
            }
        }
        count.see(cover.n_centers() as f64 / ball_cover_bound(1.0, d, eps), seed);
    }

    let mut chain = Worst::new("covers", "max_chain_lhs_minus_rhs", 1e-8);
    let horizon = 50;
    let grid = Arc::new(discretize_ball(2, 1.0, 0.05, PriorDensity::Uniform)?);
    let eps = 1.0 / horizon as f64;
    let cover = build_cover(&grid, eps)?;
    for i in 0..10 {
        let seed = derive_run_seed(VERIFY_SEED ^ 0xD, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fm = super::instances::random_ball_features(&mut rng, 2, 3, 3, 1.0)?;
        let model = Arc::new(BanditModel::logistic_linear(fm)?);
        let c = model.lipschitz_constant().unwrap_or(1.0);
        let sim = Simulator::new(grid.clone(), model)?;
        let ep = sim.run_episode(&ContextAdversary::IidUniform, horizon, seed, false)?;
        let star = ep.record.true_atom.ok_or_else(|| invalid("missing true atom"))?;
        let (lhs, rhs) = cover_chain_from_belief(&ep.belief, star, &cover, c)?;
        chain.see(lhs - rhs, seed);
    }
    Ok(vec![
        within.finish(false),
        diameter.finish(false),
        count.finish(false),
        chain.finish(false),
    ])
}

fn bounds() -> Result<Vec<VerifyCheck>> {
    let exact = |name: &'static str, got: f64, want: f64| {
        let mut w = Worst::new("bounds", name, 1e-9);
        w.see((got - want).abs(), 0);
        w.finish(false)
    };
    let (k, t, d, s, c) = (3.0_f64, 100.0_f64, 2.0_f64, 1.0_f64, 1.0_f64);
    let log_n = d * (2.0 * s * c * t + 1.0).ln();
    let thm2 = bound_theorem2(2.0 * k, t, log_n, 1.0 / (c * t), c);
    let thm4 = bound_theorem4(k, t, d, s, c);
    let mut gap = exact("theorem2_vs_theorem4_constant_gap", thm2 * thm2 - thm4 * thm4, 2.0 * k * t);
    gap.note = Some(format!(
        "constants differ: cover form at eps=1/(CT) gives {thm2:.4}, logistic closed form gives {thm4:.4}"
    ));
    Ok(vec![
        exact("theorem1_example", bound_theorem1(4.0, 100.0, 16f64.ln()), (400.0 * 16f64.ln()).sqrt()),
        exact("theorem3_example", bound_theorem3(2.0, 200.0, 16.0), (800.0 * 16f64.ln()).sqrt()),
        exact("theorem4_example", thm4, (600.0 * (2.0 * 201f64.ln() + 1.0)).sqrt()),
        exact("gaussian_example", bound_gaussian(2.0, 100.0, 2.0, 1.0, 1.0, 1.0), (800.0 * 51f64.ln()).sqrt()),
        exact("ball_cover_example", ball_cover_bound(1.0, 2, 0.5), 25.0),
        gap,
    ])
}
