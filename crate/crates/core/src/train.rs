//! Alternating minimax training with per-checkpoint bound tracking.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bounds::{prop1_check, BoundContext, BoundEvalConfig, BoundReport, Hypothesis, LossSpec, RiskMode};
use crate::bundle::{AChoice, ArchConfig, BundleGrads, ModelBundle, NetId, Side};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{AdamConfig, AdamState};
use crate::objectives::{
    alignment_objective, cyclegan_objective, objective_i, objective_j, AlignmentMode, GeneratorLoss,
    ObjectiveWeights,
};
use crate::synth::DomainDataset;
use crate::transport::CostSpec;

/// Ground cost of the reconstruction terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ReconCost {
    SmoothedZeroOne,
    L1,
    L2,
}

impl ReconCost {
    pub fn name(self) -> &'static str {
        match self {
            ReconCost::SmoothedZeroOne => "c_gamma",
            ReconCost::L1 => "l1",
            ReconCost::L2 => "l2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "c_gamma" => Ok(ReconCost::SmoothedZeroOne),
            "l1" => Ok(ReconCost::L1),
            "l2" => Ok(ReconCost::L2),
            other => Err(Error::InvalidConfig(format!("unknown reconstruction cost `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlphaSchedule {
    Constant,
    /// `alpha * (2 / (1 + exp(-10 t/T)) - 1)`.
    Ramp,
}

impl AlphaSchedule {
    pub fn name(self) -> &'static str {
        match self {
            AlphaSchedule::Constant => "constant",
            AlphaSchedule::Ramp => "ramp",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "constant" => Ok(AlphaSchedule::Constant),
            "ramp" => Ok(AlphaSchedule::Ramp),
            other => Err(Error::InvalidConfig(format!("unknown alpha schedule `{other}`"))),
        }
    }

    pub fn at(self, alpha: f64, iteration: u64, iterations: u64) -> f64 {
        match self {
            AlphaSchedule::Constant => alpha,
            AlphaSchedule::Ramp => {
                let p = if iterations == 0 {
                    1.0
                } else {
                    iteration as f64 / iterations as f64
                };
                alpha * (2.0 / (1.0 + (-10.0 * p).exp()) - 1.0)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub alpha: f64,
    pub beta: f64,
    pub theta: f64,
    pub gamma: f64,
    pub p_exponent: f64,
    pub recon_cost: ReconCost,
    pub a_choice: AChoice,
    pub arch: ArchConfig,
    pub batch_size: usize,
    pub iterations: u64,
    pub eval_every: u64,
    pub seed: u64,
    pub adam: AdamConfig,
    pub d_steps: usize,
    pub g_steps: usize,
    pub alignment: AlignmentMode,
    pub align_weight: f64,
    pub alpha_schedule: AlphaSchedule,
    pub tie_generators: bool,
    pub generator_loss: GeneratorLoss,
    pub clamp_epsilon: f64,
    pub risk_mode: RiskMode,
    pub ws_batch: usize,
    pub ws_repeats: usize,
    pub slack: f64,
    pub reporting_m: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.1,
            beta: 1.0,
            theta: 1.0,
            gamma: 100.0,
            p_exponent: 1.0,
            recon_cost: ReconCost::L2,
            a_choice: AChoice::G1,
            arch: ArchConfig::default(),
            batch_size: 128,
            iterations: 5000,
            eval_every: 100,
            seed: 0,
            adam: AdamConfig {
                beta1: 0.5,
                ..AdamConfig::default()
            },
            d_steps: 1,
            g_steps: 1,
            alignment: AlignmentMode::None,
            align_weight: 1.0,
            alpha_schedule: AlphaSchedule::Constant,
            tie_generators: false,
            generator_loss: GeneratorLoss::NonSaturating,
            clamp_epsilon: 1e-3,
            risk_mode: RiskMode::PosteriorWeighted,
            ws_batch: 1000,
            ws_repeats: 10,
            slack: 0.05,
            reporting_m: 1.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("theta", self.theta),
            ("align_weight", self.align_weight),
            ("slack", self.slack),
        ];
        for (name, v) in weights {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        let positive = [
            ("gamma", self.gamma),
            ("p_exponent", self.p_exponent),
            ("lr", self.adam.lr),
            ("reporting_m", self.reporting_m),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let counts = [
            ("batch_size", self.batch_size as u64),
            ("eval_every", self.eval_every),
            ("d_steps", self.d_steps as u64),
            ("g_steps", self.g_steps as u64),
            ("ws_batch", self.ws_batch as u64),
            ("ws_repeats", self.ws_repeats as u64),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(self.clamp_epsilon > 0.0 && self.clamp_epsilon < 0.5) {
            return Err(Error::InvalidConfig(format!("clamp_epsilon {} outside (0, 0.5)", self.clamp_epsilon)));
        }
        Ok(())
    }

    pub fn recon_spec(&self) -> CostSpec {
        match self.recon_cost {
            ReconCost::SmoothedZeroOne => CostSpec {
                exponent: self.p_exponent,
                ..CostSpec::smoothed(self.gamma)
            },
            ReconCost::L1 => CostSpec::lp(1.0, self.p_exponent),
            ReconCost::L2 => CostSpec::lp(2.0, self.p_exponent),
        }
    }

    pub fn weights(&self, alpha: f64) -> ObjectiveWeights {
        ObjectiveWeights {
            alpha,
            beta: self.beta,
            theta: self.theta,
            recon: self.recon_spec(),
            clamp_epsilon: self.clamp_epsilon,
            generator_loss: self.generator_loss,
        }
    }

    pub fn bound_eval(&self) -> BoundEvalConfig {
        BoundEvalConfig {
            gamma: self.gamma,
            slack: self.slack,
            ws_batch: self.ws_batch,
            ws_repeats: self.ws_repeats,
            mode: self.risk_mode,
            reporting_m: self.reporting_m,
            seed: derive_seed(self.seed, 99),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MetricsRow {
    pub iteration: u64,
    pub objective_i: f64,
    pub objective_j: f64,
    pub recon_source: f64,
    pub recon_target: f64,
    pub divergence_proxy: f64,
    pub classifier_loss: f64,
    pub source_accuracy: f64,
    pub target_accuracy: f64,
    pub report: BoundReport,
    /// Risk of the source hypothesis composed with the target-to-source map,
    /// and of the source hypothesis on transported target points.
    pub prop1: (f64, f64),
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsLog {
    pub rows: Vec<MetricsRow>,
}

impl MetricsLog {
    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    pub fn first(&self) -> Option<&MetricsRow> {
        self.rows.first()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Divergence {
    pub iteration: u64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub bundle: ModelBundle,
    pub log: MetricsLog,
    /// Set when training stopped on a non-finite value.
    pub diverged: Option<Divergence>,
}

/// Adam state per network, created lazily.
#[derive(Clone, Debug, Default)]
pub struct BundleOptimizer {
    config: AdamConfig,
    states: BTreeMap<NetId, AdamState>,
}

impl BundleOptimizer {
    pub fn new(config: AdamConfig) -> Self {
        BundleOptimizer {
            config,
            states: BTreeMap::new(),
        }
    }

    /// Descends along `grads` (ascends when `ascend`) for every listed network.
    pub fn step(&mut self, bundle: &mut ModelBundle, grads: &BundleGrads, ascend: bool) -> Result<()> {
        for id in grads.ids().collect::<Vec<_>>() {
            let mut g = grads.get(id).expect("listed").clone();
            if ascend {
                g.scale(-1.0);
            }
            let net = bundle
                .net_mut(id)
                .ok_or_else(|| Error::InvalidConfig(format!("no network {}", id.name())))?;
            let cfg = self.config;
            let state = self.states.entry(id).or_insert_with(|| AdamState::new(&net.params, cfg));
            state.update(&mut net.params, &g)?;
        }
        Ok(())
    }
}

/// Sample and class indices used to draw alignment batches.
struct ClassPools {
    source: Vec<Vec<usize>>,
    target: Vec<Vec<usize>>,
}

impl ClassPools {
    fn new(source: &DomainDataset, target: &DomainDataset, classes: usize) -> Self {
        let mut s = vec![Vec::new(); classes];
        for (i, smp) in source.samples.iter().enumerate() {
            if let Some(pool) = s.get_mut(smp.y as usize) {
                pool.push(i);
            }
        }
        let mut t = vec![Vec::new(); classes];
        if let Some(mask) = &target.labeled {
            for (&i, &y) in mask.indices.iter().zip(&mask.labels) {
                if let Some(pool) = t.get_mut(y as usize) {
                    pool.push(i);
                }
            }
        }
        ClassPools { source: s, target: t }
    }

    fn draw(pools: &[Vec<usize>], x: &Matrix, per_class: usize, rng: &mut ChaCha8Rng) -> Vec<Matrix> {
        pools
            .iter()
            .map(|pool| {
                if pool.is_empty() {
                    return Matrix::zeros(0, x.cols());
                }
                let idx: Vec<usize> = (0..per_class).map(|_| pool[rng.random_range(0..pool.len())]).collect();
                x.select_rows(&idx)
            })
            .collect()
    }
}

fn accuracy(q: &[f64], y: &[u8]) -> f64 {
    let hits = q.iter().zip(y).filter(|(&q, &y)| u8::from(q >= 0.5) == y).count();
    hits as f64 / q.len().max(1) as f64
}

fn is_divergence(e: &Error) -> bool {
    matches!(e, Error::NonFinite(_))
}

/// Fixed data used at every checkpoint.
struct Evaluator {
    ctx: BoundContext,
    loss: LossSpec,
    bound: BoundEvalConfig,
    eval_xs: Matrix,
    eval_ys: Vec<u8>,
    eval_xt: Matrix,
}

impl Evaluator {
    fn new(cfg: &TrainConfig, source: &DomainDataset, target: &DomainDataset) -> Result<Self> {
        let ctx = BoundContext::new(source, target);
        let ns = source.len().min(1000);
        let nt = target.len().min(1000);
        let si: Vec<usize> = (0..ns).collect();
        let ti: Vec<usize> = (0..nt).collect();
        Ok(Evaluator {
            eval_xs: ctx.source.x.select_rows(&si),
            eval_ys: ctx.source.y[..ns].to_vec(),
            eval_xt: ctx.target.x.select_rows(&ti),
            ctx,
            loss: LossSpec::logistic(cfg.clamp_epsilon)?,
            bound: cfg.bound_eval(),
        })
    }

    fn row(&self, bundle: &ModelBundle, cfg: &TrainConfig, iteration: u64) -> Result<MetricsRow> {
        let alpha = cfg.alpha_schedule.at(cfg.alpha, iteration, cfg.iterations);
        let w = cfg.weights(alpha);
        let oi = objective_i(bundle, &self.eval_xs, &self.eval_ys, &self.eval_xt, &w)?;
        let oj = objective_j(bundle, &self.eval_xs, &self.eval_xt, cfg.clamp_epsilon)?;
        let eps = cfg.clamp_epsilon;
        let qs = bundle.predict(&self.ctx.source.x, Side::Source, eps)?;
        let qt = bundle.predict(&self.ctx.target.x, Side::Target, eps)?;
        let report = self.ctx.report(bundle, &self.loss, &self.bound, iteration)?;
        let h_s = Hypothesis::new(bundle.source_hypothesis(), eps);
        let prop1 = prop1_check(&h_s, &bundle.map_ts(), &self.ctx.target, &self.loss, cfg.risk_mode)?;
        Ok(MetricsRow {
            iteration,
            objective_i: oi.value,
            objective_j: oj.value,
            recon_source: oi.terms.recon_source,
            recon_target: oi.terms.recon_target,
            divergence_proxy: oj.value,
            classifier_loss: oi.terms.classifier,
            source_accuracy: accuracy(&qs, &self.ctx.source.y),
            target_accuracy: accuracy(&qt, &self.ctx.target.y),
            report,
            prop1,
        })
    }
}

/// Fresh bundle for `cfg`: default architectures, class heads when aligning,
/// optional encoder/decoder tying.
pub fn init_bundle(cfg: &TrainConfig) -> Result<ModelBundle> {
    let heads = if cfg.alignment == AlignmentMode::None { 0 } else { 2 };
    let mut b = ModelBundle::new(cfg.arch, cfg.a_choice, heads, derive_seed(cfg.seed, 0))?;
    if cfg.tie_generators {
        b.tie_encoders_decoders()?;
    }
    Ok(b)
}

pub fn train(cfg: &TrainConfig, source: &DomainDataset, target: &DomainDataset) -> Result<TrainOutcome> {
    train_from(init_bundle(cfg)?, cfg, source, target)
}

/// One D ascent step on J (plus the discriminator side of the alignment term)
/// then one descent step on I (plus the generator side) per iteration.
pub fn train_from(
    mut bundle: ModelBundle,
    cfg: &TrainConfig,
    source: &DomainDataset,
    target: &DomainDataset,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    bundle.validate()?;
    if source.is_empty() || target.is_empty() {
        return Err(Error::InvalidConfig("training needs nonempty source and target datasets".into()));
    }
    let eval = Evaluator::new(cfg, source, target)?;
    let xs = &eval.ctx.source.x;
    let ys = &eval.ctx.source.y;
    let xt = &eval.ctx.target.x;
    let pools = (cfg.alignment != AlignmentMode::None).then(|| ClassPools::new(source, target, bundle.heads.len()));
    let per_class = (cfg.batch_size / 2).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 50));
    let mut d_opt = BundleOptimizer::new(cfg.adam);
    let mut g_opt = BundleOptimizer::new(cfg.adam);
    let mut log = MetricsLog::default();

    let fail = |bundle: ModelBundle, log: MetricsLog, iteration: u64, e: Error| -> Result<TrainOutcome> {
        if is_divergence(&e) {
            Ok(TrainOutcome {
                bundle,
                log,
                diverged: Some(Divergence {
                    iteration,
                    reason: e.to_string(),
                }),
            })
        } else {
            Err(e)
        }
    };

    match eval.row(&bundle, cfg, 0) {
        Ok(r) => log.rows.push(r),
        Err(e) => return fail(bundle, log, 0, e),
    }
    for t in 1..=cfg.iterations {
        let alpha = cfg.alpha_schedule.at(cfg.alpha, t, cfg.iterations);
        let w = cfg.weights(alpha);
        let step = (|| -> Result<()> {
            for _ in 0..cfg.d_steps {
                let si: Vec<usize> = (0..cfg.batch_size).map(|_| rng.random_range(0..xs.rows())).collect();
                let ti: Vec<usize> = (0..cfg.batch_size).map(|_| rng.random_range(0..xt.rows())).collect();
                let mut grads = objective_j(&bundle, &xs.select_rows(&si), &xt.select_rows(&ti), cfg.clamp_epsilon)?.grads;
                if let Some(p) = &pools {
                    let src = ClassPools::draw(&p.source, xs, per_class, &mut rng);
                    let tgt = ClassPools::draw(&p.target, xt, per_class, &mut rng);
                    let mut a = alignment_objective(&bundle, &src, &tgt, cfg.alignment, cfg.align_weight, cfg.generator_loss, cfg.clamp_epsilon)?.grads;
                    a.retain(NetId::is_discriminator);
                    grads.merge(&a, 1.0);
                }
                d_opt.step(&mut bundle, &grads, true)?;
            }
            for _ in 0..cfg.g_steps {
                let si: Vec<usize> = (0..cfg.batch_size).map(|_| rng.random_range(0..xs.rows())).collect();
                let ti: Vec<usize> = (0..cfg.batch_size).map(|_| rng.random_range(0..xt.rows())).collect();
                let y: Vec<u8> = si.iter().map(|&i| ys[i]).collect();
                let mut grads = objective_i(&bundle, &xs.select_rows(&si), &y, &xt.select_rows(&ti), &w)?.grads;
                if let Some(p) = &pools {
                    let src = ClassPools::draw(&p.source, xs, per_class, &mut rng);
                    let tgt = ClassPools::draw(&p.target, xt, per_class, &mut rng);
                    let mut a = alignment_objective(&bundle, &src, &tgt, cfg.alignment, cfg.align_weight, cfg.generator_loss, cfg.clamp_epsilon)?.grads;
                    a.retain(|id| !id.is_discriminator());
                    grads.merge(&a, 1.0);
                }
                bundle.fold_tied_grads(&mut grads);
                g_opt.step(&mut bundle, &grads, false)?;
                bundle.sync_ties();
            }
            if !bundle.is_finite() {
                return Err(Error::NonFinite(format!("parameters after iteration {t}")));
            }
            Ok(())
        })();
        if let Err(e) = step {
            return fail(bundle, log, t, e);
        }
        if t % cfg.eval_every == 0 || t == cfg.iterations {
            match eval.row(&bundle, cfg, t) {
                Ok(r) => log.rows.push(r),
                Err(e) => return fail(bundle, log, t, e),
            }
        }
    }
    Ok(TrainOutcome {
        bundle,
        log,
        diverged: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CycleConfig {
    pub alpha: f64,
    pub generator_loss: GeneratorLoss,
    pub symmetric: bool,
    pub batch_size: usize,
    pub iterations: u64,
    pub seed: u64,
    pub adam: AdamConfig,
    pub clamp_epsilon: f64,
}

impl Default for CycleConfig {
    fn default() -> Self {
        CycleConfig {
            alpha: 1.0,
            generator_loss: GeneratorLoss::NonSaturating,
            symmetric: false,
            batch_size: 64,
            iterations: 3000,
            seed: 0,
            adam: AdamConfig {
                lr: 1e-2,
                ..AdamConfig::default()
            },
            clamp_epsilon: 1e-3,
        }
    }
}

/// Alternating training of the cycle objective: discriminators ascend, the
/// two maps descend. Returns the final objective value.
pub fn train_cycle(bundle: &mut ModelBundle, source: &Matrix, target: &Matrix, cfg: &CycleConfig) -> Result<f64> {
    bundle.check_cycle_layout()?;
    if source.rows() == 0 || target.rows() == 0 || cfg.batch_size == 0 {
        return Err(Error::InvalidConfig("cycle training needs data and a positive batch size".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 60));
    let mut d_opt = BundleOptimizer::new(cfg.adam);
    let mut g_opt = BundleOptimizer::new(cfg.adam);
    let mut value = f64::NAN;
    for _ in 0..cfg.iterations {
        let si: Vec<usize> = (0..cfg.batch_size).map(|_| rng.random_range(0..source.rows())).collect();
        let ti: Vec<usize> = (0..cfg.batch_size).map(|_| rng.random_range(0..target.rows())).collect();
        let (bs, bt) = (source.select_rows(&si), target.select_rows(&ti));
        let e = cyclegan_objective(bundle, &bs, &bt, cfg.alpha, cfg.symmetric, cfg.generator_loss, cfg.clamp_epsilon)?;
        let mut d = e.grads.clone();
        d.retain(NetId::is_discriminator);
        d_opt.step(bundle, &d, true)?;
        let e = cyclegan_objective(bundle, &bs, &bt, cfg.alpha, cfg.symmetric, cfg.generator_loss, cfg.clamp_epsilon)?;
        let mut g = e.grads;
        g.retain(|id| !id.is_discriminator());
        g_opt.step(bundle, &g, false)?;
        value = e.value;
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{make_scenario, ScenarioSpec};

    fn small_cfg() -> TrainConfig {
        TrainConfig {
            iterations: 40,
            eval_every: 20,
            batch_size: 32,
            ws_batch: 100,
            ws_repeats: 2,
            ..TrainConfig::default()
        }
    }

    fn data() -> crate::synth::Scenario {
        make_scenario(&ScenarioSpec::paper_default(), 400, 400, 1).unwrap()
    }

    #[test]
    fn zero_iterations_single_row() {
        let sc = data();
        let cfg = TrainConfig {
            iterations: 0,
            ..small_cfg()
        };
        let out = train(&cfg, &sc.source, &sc.target).unwrap();
        assert_eq!(out.log.rows.len(), 1);
        assert_eq!(out.log.rows[0].iteration, 0);
        assert_eq!(out.bundle, init_bundle(&cfg).unwrap());
    }

    #[test]
    fn deterministic_and_increasing() {
        let sc = data();
        let cfg = small_cfg();
        let a = train(&cfg, &sc.source, &sc.target).unwrap();
        let b = train(&cfg, &sc.source, &sc.target).unwrap();
        assert_eq!(a.log, b.log);
        let iters: Vec<u64> = a.log.rows.iter().map(|r| r.iteration).collect();
        assert_eq!(iters, vec![0, 20, 40]);
        for r in &a.log.rows {
            assert!(r.report.is_finite());
            assert!((r.prop1.0 - r.prop1.1).abs() <= 1e-12);
        }
    }

    #[test]
    fn last_checkpoint_logged_off_schedule() {
        let sc = data();
        let cfg = TrainConfig {
            iterations: 25,
            ..small_cfg()
        };
        let out = train(&cfg, &sc.source, &sc.target).unwrap();
        let iters: Vec<u64> = out.log.rows.iter().map(|r| r.iteration).collect();
        assert_eq!(iters, vec![0, 20, 25]);
    }

    #[test]
    fn alternation_contract() {
        let sc = data();
        let cfg = TrainConfig {
            iterations: 1,
            d_steps: 1,
            g_steps: 1,
            ..small_cfg()
        };
        let init = init_bundle(&cfg).unwrap();
        let out = train(&cfg, &sc.source, &sc.target).unwrap();
        assert_ne!(out.bundle.d, init.d);
        assert_ne!(out.bundle.g1, init.g1);
        // With only D steps the generators stay put.
        let cfg_d = TrainConfig {
            g_steps: 1,
            beta: 0.0,
            theta: 0.0,
            alpha: 0.0,
            ..cfg
        };
        let out = train(&cfg_d, &sc.source, &sc.target).unwrap();
        assert_ne!(out.bundle.d, init.d);
        assert_eq!(out.bundle.h1.params, init.h1.params);
    }

    #[test]
    fn divergence_is_reported() {
        let sc = data();
        let cfg = TrainConfig {
            adam: AdamConfig {
                lr: 1e300,
                ..AdamConfig::default()
            },
            ..small_cfg()
        };
        let out = train(&cfg, &sc.source, &sc.target).unwrap();
        assert!(out.diverged.is_some());
        assert!(!out.log.rows.is_empty());
    }

    #[test]
    fn invalid_config_rejected() {
        let sc = data();
        let cfg = TrainConfig {
            alpha: -1.0,
            ..small_cfg()
        };
        assert!(train(&cfg, &sc.source, &sc.target).is_err());
    }

    #[test]
    fn ramp_schedule() {
        assert_eq!(AlphaSchedule::Ramp.at(0.1, 0, 100), 0.0);
        assert!((AlphaSchedule::Ramp.at(0.1, 100, 100) - 0.1).abs() < 1e-5);
        assert_eq!(AlphaSchedule::Constant.at(0.1, 3, 100), 0.1);
    }

    #[test]
    fn alignment_run_uses_heads() {
        let sc = make_scenario(&ScenarioSpec::alignment_study(0.5, false), 400, 400, 2).unwrap();
        let cfg = TrainConfig {
            alignment: AlignmentMode::Proper,
            iterations: 5,
            ..small_cfg()
        };
        let init = init_bundle(&cfg).unwrap();
        let out = train(&cfg, &sc.source, &sc.target).unwrap();
        assert_eq!(out.bundle.heads.len(), 2);
        assert_ne!(out.bundle.heads[0], init.heads[0]);
    }
}
