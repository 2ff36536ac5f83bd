use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::data::ResponseMatrix;
use crate::error::{IrtError, Result};
use crate::model::{logistic, logit};

use super::likelihood::{cell_log_likelihood, ItemKernel};
use super::{GuessingMode, McmcConfig, ModelSpec, PriorSpec, SlopeMode};

/// Sweeps between proposal-scale adjustments during burn-in.
pub(crate) const ADAPT_WINDOW: usize = 50;
const TARGET_ACCEPTANCE: f64 = 0.33;
const MIN_SCALE: f64 = 1e-5;
const MAX_SCALE: f64 = 50.0;
/// Spread of the per-chain perturbation of starting values.
const INIT_JITTER: f64 = 0.5;

pub(crate) struct ChainOutput {
    pub draws: Vec<f64>,
    pub acceptance: Vec<(String, f64)>,
}

/// Independent stream per chain, derived from the run seed.
pub(crate) fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Random-walk scales and acceptance counters for one group of scalars.
pub(crate) struct Block {
    name: &'static str,
    pub scale: Vec<f64>,
    window: Vec<u32>,
    accepted: u64,
    proposed: u64,
}

impl Block {
    pub(crate) fn new(name: &'static str, len: usize, scale: f64) -> Self {
        Block {
            name,
            scale: vec![scale; len],
            window: vec![0; len],
            accepted: 0,
            proposed: 0,
        }
    }

    #[inline]
    pub(crate) fn record(&mut self, k: usize, accepted: bool, counting: bool) {
        if accepted {
            self.window[k] += 1;
        }
        if counting {
            self.proposed += 1;
            self.accepted += accepted as u64;
        }
    }

    pub(crate) fn adapt(&mut self) {
        for (s, w) in self.scale.iter_mut().zip(self.window.iter_mut()) {
            let rate = *w as f64 / ADAPT_WINDOW as f64;
            *s = (*s * (1.5 * (rate - TARGET_ACCEPTANCE)).exp()).clamp(MIN_SCALE, MAX_SCALE);
            *w = 0;
        }
    }

    pub(crate) fn rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }
}

struct Chain<'a> {
    u: &'a ResponseMatrix,
    spec: &'a ModelSpec,
    priors: &'a PriorSpec,
    n_items: usize,
    /// `g(θ_j)`
    eta: Vec<f64>,
    /// `g(b_i)`
    gamma: Vec<f64>,
    /// `ln β` or `ln a_i`
    log_slope: Vec<f64>,
    /// `logit c_i`, empty when guessing is fixed
    guess_logit: Vec<f64>,
    kernel: ItemKernel,
    /// Current log-likelihood of every cell, row-major.
    cache: Vec<f64>,
    scratch: Vec<f64>,
    abilities: Block,
    difficulties: Block,
    slopes: Block,
    guessing: Block,
}

pub(crate) fn standardize(xs: &mut [f64]) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = (xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    for x in xs.iter_mut() {
        *x = if sd > 0.0 { (*x - mean) / sd } else { 0.0 };
    }
}

pub(crate) fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

impl<'a> Chain<'a> {
    fn init(
        u: &'a ResponseMatrix,
        spec: &'a ModelSpec,
        priors: &'a PriorSpec,
        cfg: &McmcConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Self> {
        let (n, m) = (u.n_subjects(), u.n_items());
        let space = &spec.space;

        let mut z: Vec<f64> = u
            .subject_scores()
            .iter()
            .map(|&s| logit((s as f64 + 0.5) / (m as f64 + 1.0)))
            .collect();
        standardize(&mut z);
        let eta: Vec<f64> = z
            .iter()
            .map(|&zj| {
                let y = priors.ability.transformed_at_normal_quantile(zj, space)
                    + INIT_JITTER * normal(rng);
                if space.contains(space.untransform(y)) {
                    y
                } else {
                    priors.ability.transformed_at_normal_quantile(0.0, space)
                }
            })
            .collect();

        let mut gamma: Vec<f64> = u
            .item_totals()
            .iter()
            .map(|&t| logit(1.0 - (t as f64 + 0.5) / (n as f64 + 1.0)))
            .collect();
        standardize(&mut gamma);
        for g in gamma.iter_mut() {
            *g += INIT_JITTER * normal(rng);
        }
        if priors.zero_sum_difficulties {
            let mean = gamma.iter().sum::<f64>() / m as f64;
            gamma.iter_mut().for_each(|g| *g -= mean);
        }

        let n_slopes = match spec.slope {
            SlopeMode::SharedDispersion => 1,
            SlopeMode::PerItem => m,
        };
        let log_slope: Vec<f64> = (0..n_slopes).map(|_| 0.2 * normal(rng)).collect();
        let guess_logit: Vec<f64> = match spec.guessing {
            GuessingMode::Fixed => Vec::new(),
            GuessingMode::Free => {
                let g = priors.guessing;
                let mean = g.alpha / (g.alpha + g.beta);
                (0..m).map(|_| logit(mean) + 0.2 * normal(rng)).collect()
            }
        };

        let slopes: Vec<f64> = log_slope.iter().map(|l| l.exp()).collect();
        let guesses: Vec<f64> = guess_logit.iter().map(|&l| logistic(l)).collect();
        let kernel = ItemKernel::new(spec, &slopes, &gamma, &guesses);

        let mut cache = vec![0.0; n * m];
        for j in 0..n {
            let row = u.row(j);
            for i in 0..m {
                let x = kernel.slope[i] * eta[j] - kernel.offset[i];
                cache[j * m + i] = cell_log_likelihood(row[i] == 1, x, kernel.guessing[i]);
            }
        }
        if cache.iter().any(|v| !v.is_finite()) {
            return Err(IrtError::Initialization(
                "log-likelihood is not finite at the starting values".into(),
            ));
        }

        let p = cfg.proposal;
        Ok(Chain {
            u,
            spec,
            priors,
            n_items: m,
            eta,
            gamma,
            log_slope,
            guess_logit,
            kernel,
            cache,
            scratch: vec![0.0; n * m],
            abilities: Block::new("ability", n, p.ability),
            difficulties: Block::new("difficulty", m, p.difficulty),
            slopes: Block::new(
                match spec.slope {
                    SlopeMode::SharedDispersion => "dispersion",
                    SlopeMode::PerItem => "discrimination",
                },
                n_slopes,
                p.slope,
            ),
            guessing: Block::new("guessing", guess_logit_len(spec, m), p.guessing),
        })
    }

    fn update_abilities(&mut self, rng: &mut ChaCha8Rng, counting: bool) {
        let m = self.n_items;
        let space = &self.spec.space;
        let prior = &self.priors.ability;
        for j in 0..self.eta.len() {
            let current = self.eta[j];
            let prop = current + self.abilities.scale[j] * normal(rng);
            let log_u = rng.random::<f64>().ln();
            if !space.contains(space.untransform(prop)) {
                self.abilities.record(j, false, counting);
                continue;
            }
            let row = self.u.row(j);
            let buf = &mut self.scratch[..m];
            let mut new_sum = 0.0;
            for i in 0..m {
                let x = self.kernel.slope[i] * prop - self.kernel.offset[i];
                let v = cell_log_likelihood(row[i] == 1, x, self.kernel.guessing[i]);
                buf[i] = v;
                new_sum += v;
            }
            let cached = &mut self.cache[j * m..(j + 1) * m];
            let old_sum: f64 = cached.iter().sum();
            let log_ratio = new_sum - old_sum + prior.ln_density_transformed(prop, space)
                - prior.ln_density_transformed(current, space);
            let accepted = log_u < log_ratio;
            if accepted {
                self.eta[j] = prop;
                cached.copy_from_slice(buf);
            }
            self.abilities.record(j, accepted, counting);
        }
    }

    /// Evaluates item `i`'s column under candidate coefficients into
    /// `scratch[..n]` and returns `(new_sum, old_sum)`.
    fn column_delta(&mut self, i: usize, slope: f64, offset: f64, c: f64) -> (f64, f64) {
        let m = self.n_items;
        let mut new_sum = 0.0;
        let mut old_sum = 0.0;
        for (j, &eta) in self.eta.iter().enumerate() {
            let positive = self.u.get(j, i);
            let v = cell_log_likelihood(positive, slope * eta - offset, c);
            self.scratch[j] = v;
            new_sum += v;
            old_sum += self.cache[j * m + i];
        }
        (new_sum, old_sum)
    }

    fn commit_column(&mut self, i: usize) {
        let m = self.n_items;
        for j in 0..self.eta.len() {
            self.cache[j * m + i] = self.scratch[j];
        }
    }

    fn offset_for(&self, gamma: f64, slope: f64) -> f64 {
        match self.spec.slope {
            SlopeMode::SharedDispersion => gamma,
            SlopeMode::PerItem => slope * gamma,
        }
    }

    fn update_difficulties(&mut self, rng: &mut ChaCha8Rng, counting: bool) {
        let space = self.spec.space;
        let prior = self.priors.difficulty;
        for i in 0..self.n_items {
            let current = self.gamma[i];
            let prop = current + self.difficulties.scale[i] * normal(rng);
            let log_u = rng.random::<f64>().ln();
            if !space.contains(space.untransform(prop)) {
                self.difficulties.record(i, false, counting);
                continue;
            }
            let slope = self.kernel.slope[i];
            let offset = self.offset_for(prop, slope);
            let (new_sum, old_sum) = self.column_delta(i, slope, offset, self.kernel.guessing[i]);
            let log_ratio = new_sum - old_sum + prior.ln_density_transformed(prop, &space)
                - prior.ln_density_transformed(current, &space);
            let accepted = log_u < log_ratio;
            if accepted {
                self.gamma[i] = prop;
                self.kernel.offset[i] = offset;
                self.commit_column(i);
            }
            self.difficulties.record(i, accepted, counting);
        }
    }

    fn slope_log_prior(&self, log_slope: f64) -> f64 {
        let s = log_slope.exp();
        -0.5 * self.priors.slope.precision * s * s + log_slope
    }

    fn update_slopes(&mut self, rng: &mut ChaCha8Rng, counting: bool) {
        match self.spec.slope {
            SlopeMode::SharedDispersion => self.update_dispersion(rng, counting),
            SlopeMode::PerItem => {
                let d = self.spec.scaling;
                for i in 0..self.n_items {
                    let current = self.log_slope[i];
                    let prop = current + self.slopes.scale[i] * normal(rng);
                    let log_u = rng.random::<f64>().ln();
                    let slope = d * prop.exp();
                    let offset = slope * self.gamma[i];
                    let (new_sum, old_sum) =
                        self.column_delta(i, slope, offset, self.kernel.guessing[i]);
                    let log_ratio = new_sum - old_sum + self.slope_log_prior(prop)
                        - self.slope_log_prior(current);
                    let accepted = log_u < log_ratio;
                    if accepted {
                        self.log_slope[i] = prop;
                        self.kernel.slope[i] = slope;
                        self.kernel.offset[i] = offset;
                        self.commit_column(i);
                    }
                    self.slopes.record(i, accepted, counting);
                }
            }
        }
    }

    fn update_dispersion(&mut self, rng: &mut ChaCha8Rng, counting: bool) {
        let m = self.n_items;
        let current = self.log_slope[0];
        let prop = current + self.slopes.scale[0] * normal(rng);
        let log_u = rng.random::<f64>().ln();
        let beta = prop.exp();
        let mut new_sum = 0.0;
        for (j, &eta) in self.eta.iter().enumerate() {
            let row = self.u.row(j);
            let out = &mut self.scratch[j * m..(j + 1) * m];
            for i in 0..m {
                let v = cell_log_likelihood(
                    row[i] == 1,
                    beta * eta - self.kernel.offset[i],
                    self.kernel.guessing[i],
                );
                out[i] = v;
                new_sum += v;
            }
        }
        let old_sum: f64 = self.cache.iter().sum();
        let log_ratio =
            new_sum - old_sum + self.slope_log_prior(prop) - self.slope_log_prior(current);
        let accepted = log_u < log_ratio;
        if accepted {
            self.log_slope[0] = prop;
            self.kernel.slope.iter_mut().for_each(|s| *s = beta);
            std::mem::swap(&mut self.cache, &mut self.scratch);
        }
        self.slopes.record(0, accepted, counting);
    }

    fn update_guessing(&mut self, rng: &mut ChaCha8Rng, counting: bool) {
        let prior = self.priors.guessing;
        let log_prior = |l: f64| {
            let c = logistic(l);
            prior.alpha * c.ln() + prior.beta * (-c).ln_1p()
        };
        for i in 0..self.guess_logit.len() {
            let current = self.guess_logit[i];
            let prop = current + self.guessing.scale[i] * normal(rng);
            let log_u = rng.random::<f64>().ln();
            let c = logistic(prop);
            if !(c > 0.0 && c < 1.0) {
                self.guessing.record(i, false, counting);
                continue;
            }
            let (new_sum, old_sum) =
                self.column_delta(i, self.kernel.slope[i], self.kernel.offset[i], c);
            let log_ratio = new_sum - old_sum + log_prior(prop) - log_prior(current);
            let accepted = log_u < log_ratio;
            if accepted {
                self.guess_logit[i] = prop;
                self.kernel.guessing[i] = c;
                self.commit_column(i);
            }
            self.guessing.record(i, accepted, counting);
        }
    }

    /// Shifts `g(b)` to mean zero and moves `g(θ)` so every predictor is
    /// unchanged.
    fn recenter(&mut self) {
        let m = self.n_items as f64;
        let shift = self.gamma.iter().sum::<f64>() / m;
        if shift == 0.0 {
            return;
        }
        let eta_shift = match self.spec.slope {
            SlopeMode::SharedDispersion => shift / self.log_slope[0].exp(),
            SlopeMode::PerItem => shift,
        };
        // A shift that would push a value onto a domain boundary is deferred
        // to a later sweep.
        let space = &self.spec.space;
        let inside = |y: f64| space.contains(space.untransform(y));
        if !(self.gamma.iter().all(|&g| inside(g - shift))
            && self.eta.iter().all(|&e| inside(e - eta_shift)))
        {
            return;
        }
        for g in self.gamma.iter_mut() {
            *g -= shift;
        }
        for e in self.eta.iter_mut() {
            *e -= eta_shift;
        }
        for i in 0..self.n_items {
            self.kernel.offset[i] = self.offset_for(self.gamma[i], self.kernel.slope[i]);
        }
    }

    fn sweep(&mut self, rng: &mut ChaCha8Rng, counting: bool) {
        self.update_abilities(rng, counting);
        self.update_difficulties(rng, counting);
        self.update_slopes(rng, counting);
        if !self.guess_logit.is_empty() {
            self.update_guessing(rng, counting);
        }
        if self.priors.zero_sum_difficulties {
            self.recenter();
        }
    }

    fn adapt(&mut self) {
        self.abilities.adapt();
        self.difficulties.adapt();
        self.slopes.adapt();
        self.guessing.adapt();
    }

    fn record(&self, out: &mut Vec<f64>) {
        let space = &self.spec.space;
        out.extend(self.log_slope.iter().map(|l| l.exp()));
        out.extend(self.guess_logit.iter().map(|&l| logistic(l)));
        out.extend(self.gamma.iter().map(|&g| space.untransform(g)));
        out.extend(self.eta.iter().map(|&e| space.untransform(e)));
    }

    fn acceptance(&self) -> Vec<(String, f64)> {
        let mut blocks = vec![&self.abilities, &self.difficulties, &self.slopes];
        if !self.guess_logit.is_empty() {
            blocks.push(&self.guessing);
        }
        blocks
            .into_iter()
            .map(|b| (b.name.to_string(), b.rate()))
            .collect()
    }
}

fn guess_logit_len(spec: &ModelSpec, m: usize) -> usize {
    match spec.guessing {
        GuessingMode::Fixed => 0,
        GuessingMode::Free => m,
    }
}

pub(crate) fn run_chain(
    u: &ResponseMatrix,
    spec: &ModelSpec,
    priors: &PriorSpec,
    cfg: &McmcConfig,
    chain: usize,
) -> Result<ChainOutput> {
    let mut rng = chain_rng(cfg.seed, chain);
    let mut state = Chain::init(u, spec, priors, cfg, &mut rng)?;
    let n_params = state.log_slope.len()
        + state.guess_logit.len()
        + state.gamma.len()
        + state.eta.len();
    let mut draws = Vec::with_capacity(cfg.retained_per_chain() * n_params);
    for t in 0..cfg.iterations {
        let burning = t < cfg.burn_in;
        state.sweep(&mut rng, !burning);
        if burning {
            if cfg.adapt && (t + 1) % ADAPT_WINDOW == 0 {
                state.adapt();
            }
        } else if (t - cfg.burn_in + 1).is_multiple_of(cfg.thin) {
            state.record(&mut draws);
        }
    }
    Ok(ChainOutput {
        draws,
        acceptance: state.acceptance(),
    })
}
