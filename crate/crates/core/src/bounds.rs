//! Risks, the supervisor-discrepancy term, and the per-checkpoint transfer
//! bound report `gap <= M * (ws + min_delta)`.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bundle::{ModelBundle, Pipeline};
use crate::derive_seed;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;
use crate::synth::{bayes_posterior, DomainDataset, GaussianMixtureSpec};
use crate::transport::ws_zero_one_estimate;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossKind {
    Logistic,
    ZeroOne,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossSpec {
    pub kind: LossKind,
    pub clamp_epsilon: f64,
    pub bound_m: f64,
}

impl LossSpec {
    /// Cross-entropy on predictions clamped to `[eps, 1 - eps]`, bounded by `-ln eps`.
    pub fn logistic(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 0.5) {
            return Err(Error::InvalidConfig(format!("clamp epsilon {eps} outside (0, 0.5)")));
        }
        Ok(LossSpec {
            kind: LossKind::Logistic,
            clamp_epsilon: eps,
            bound_m: -eps.ln(),
        })
    }

    pub fn zero_one() -> Self {
        LossSpec {
            kind: LossKind::ZeroOne,
            clamp_epsilon: 1e-3,
            bound_m: 1.0,
        }
    }

    pub fn clamp(&self, q: f64) -> f64 {
        q.clamp(self.clamp_epsilon, 1.0 - self.clamp_epsilon)
    }

    /// `l(y, q)` for a class-1 probability `q`.
    pub fn loss(&self, y: u8, q: f64) -> f64 {
        match self.kind {
            LossKind::Logistic => {
                let q = self.clamp(q);
                if y == 1 {
                    -q.ln()
                } else {
                    -(1.0 - q).ln()
                }
            }
            LossKind::ZeroOne => {
                if u8::from(q >= 0.5) == y {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RiskMode {
    SampledLabels,
    PosteriorWeighted,
}

impl RiskMode {
    pub fn name(self) -> &'static str {
        match self {
            RiskMode::SampledLabels => "sampled_labels",
            RiskMode::PosteriorWeighted => "posterior_weighted",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "sampled_labels" => Ok(RiskMode::SampledLabels),
            "posterior_weighted" => Ok(RiskMode::PosteriorWeighted),
            other => Err(Error::InvalidConfig(format!("unknown risk mode `{other}`"))),
        }
    }
}

/// A composed map to a class-1 probability, clamped on output.
#[derive(Clone, Debug)]
pub struct Hypothesis<'a> {
    pub pipeline: Pipeline<'a>,
    pub clamp_epsilon: f64,
}

impl<'a> Hypothesis<'a> {
    pub fn new(pipeline: Pipeline<'a>, clamp_epsilon: f64) -> Self {
        Hypothesis {
            pipeline,
            clamp_epsilon,
        }
    }

    pub fn probabilities(&self, x: &Matrix) -> Result<Vec<f64>> {
        let out = self.pipeline.apply(x)?;
        if out.cols() != 1 {
            return Err(Error::dim("hypothesis output", 1, out.cols()));
        }
        let e = self.clamp_epsilon;
        Ok(out.data().iter().map(|q| q.clamp(e, 1.0 - e)).collect())
    }
}

/// Risk of given predictions against sampled labels or carried posteriors.
pub fn risk_of_predictions(
    q: &[f64],
    labels: &[u8],
    posterior1: Option<&[f64]>,
    loss: &LossSpec,
    mode: RiskMode,
) -> Result<f64> {
    if q.is_empty() {
        return Err(Error::InvalidConfig("risk of an empty dataset".into()));
    }
    let total: f64 = match mode {
        RiskMode::SampledLabels => q.iter().zip(labels).map(|(&q, &y)| loss.loss(y, q)).sum(),
        RiskMode::PosteriorWeighted => {
            let p = posterior1.ok_or_else(|| {
                Error::MissingPosterior("posterior_weighted risk needs posterior1 on every sample".into())
            })?;
            q.iter()
                .zip(p)
                .map(|(&q, &p1)| p1 * loss.loss(1, q) + (1.0 - p1) * loss.loss(0, q))
                .sum()
        }
    };
    Ok(total / q.len() as f64)
}

/// Feature matrix, labels, and posteriors of a dataset, extracted once.
#[derive(Clone, Debug)]
pub struct EvalSet {
    pub x: Matrix,
    pub y: Vec<u8>,
    pub posterior1: Option<Vec<f64>>,
}

impl EvalSet {
    pub fn from_dataset(ds: &DomainDataset) -> Self {
        EvalSet {
            x: ds.features(),
            y: ds.labels(),
            posterior1: ds.posteriors(),
        }
    }

    pub fn risk(&self, h: &Hypothesis, loss: &LossSpec, mode: RiskMode) -> Result<f64> {
        let q = h.probabilities(&self.x)?;
        risk_of_predictions(&q, &self.y, self.posterior1.as_deref(), loss, mode)
    }
}

pub fn empirical_risk(h: &Hypothesis, ds: &DomainDataset, loss: &LossSpec, mode: RiskMode) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::InvalidConfig("risk of an empty dataset".into()));
    }
    if mode == RiskMode::PosteriorWeighted && ds.posteriors().is_none() {
        return Err(Error::MissingPosterior("posterior_weighted risk needs posterior1 on every sample".into()));
    }
    EvalSet::from_dataset(ds).risk(h, loss, mode)
}

pub fn risk_gap(
    h_s: &Hypothesis,
    h_t: &Hypothesis,
    source: &DomainDataset,
    target: &DomainDataset,
    loss: &LossSpec,
    mode: RiskMode,
) -> Result<f64> {
    let rs = empirical_risk(h_s, source, loss, mode)?;
    let rt = empirical_risk(h_t, target, loss, mode)?;
    Ok((rt - rs).abs())
}

/// Risk of `h_s o map_h` on the target set and risk of `h_s` on the
/// transported set `map_h(target)` with labels carried over.
pub fn prop1_check(
    h_s: &Hypothesis,
    map_h: &Pipeline,
    target: &EvalSet,
    loss: &LossSpec,
    mode: RiskMode,
) -> Result<(f64, f64)> {
    let composed = Hypothesis::new(map_h.then(&h_s.pipeline), h_s.clamp_epsilon);
    let r_target = target.risk(&composed, loss, mode)?;
    let transported = EvalSet {
        x: map_h.apply(&target.x)?,
        y: target.y.clone(),
        posterior1: target.posterior1.clone(),
    };
    let r_push = transported.risk(h_s, loss, mode)?;
    Ok((r_target, r_push))
}

/// Closed-form class posteriors of both domains.
#[derive(Clone, Debug)]
pub struct Oracles {
    pub source: GaussianMixtureSpec,
    pub target: GaussianMixtureSpec,
}

impl Oracles {
    pub fn from_datasets(source: &DomainDataset, target: &DomainDataset) -> Option<Self> {
        Some(Oracles {
            source: source.generator.clone()?,
            target: target.generator.clone()?,
        })
    }
}

fn posterior1_rows(spec: &GaussianMixtureSpec, x: &Matrix) -> Result<Vec<f64>> {
    if x.cols() != spec.dim() {
        return Err(Error::dim("posterior oracle input", spec.dim(), x.cols()));
    }
    par::map_indexed(x.rows(), |i| bayes_posterior(spec, x.row(i)).map(|p| p.1))
        .into_iter()
        .collect()
}

fn mean_l1_gap(a: &[f64], b: &[f64]) -> f64 {
    let s: f64 = a.iter().zip(b).map(|(p, q)| 2.0 * (p - q).abs()).sum();
    s / a.len().max(1) as f64
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DeltaP {
    pub pushforward: f64,
    pub source: f64,
    pub min: f64,
}

/// `E_t |p_t(.|x) - p_s(.|map_ts x)|_1` and `E_s |p_t(.|map_st x) - p_s(.|x)|_1`.
pub fn delta_p_term(
    map_ts: &Pipeline,
    map_st: &Pipeline,
    source_x: &Matrix,
    target_x: &Matrix,
    oracles: Option<&Oracles>,
) -> Result<DeltaP> {
    let o = oracles.ok_or_else(|| {
        Error::MissingOracle(
            "supervisor discrepancy is a synthetic-only estimator: posterior oracles for both domains are required"
                .into(),
        )
    })?;
    let pt = posterior1_rows(&o.target, target_x)?;
    let ps_moved = posterior1_rows(&o.source, &map_ts.apply(target_x)?)?;
    let ps = posterior1_rows(&o.source, source_x)?;
    let pt_moved = posterior1_rows(&o.target, &map_st.apply(source_x)?)?;
    let pushforward = mean_l1_gap(&pt, &ps_moved);
    let source = mean_l1_gap(&pt_moved, &ps);
    Ok(DeltaP {
        pushforward,
        source,
        min: pushforward.min(source),
    })
}

/// Mean over `repeats` of the smoothed 0/1 Wasserstein estimate between a
/// source batch and the transported target batch. When both sets have the same
/// size the two batches use the same row indices.
pub fn ws_term(
    source_x: &Matrix,
    transported_x: &Matrix,
    gamma: f64,
    batch: usize,
    repeats: usize,
    seed: u64,
) -> Result<f64> {
    let b = batch.min(source_x.rows()).min(transported_x.rows());
    if b == 0 || repeats == 0 {
        return Err(Error::InvalidConfig("ws term needs a nonempty batch and at least one repeat".into()));
    }
    let coupled = source_x.rows() == transported_x.rows();
    let values: Vec<Result<f64>> = par::map_indexed(repeats, |r| {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u64));
        let si = sample(&mut rng, source_x.rows(), b).into_vec();
        let ti = if coupled {
            si.clone()
        } else {
            sample(&mut rng, transported_x.rows(), b).into_vec()
        };
        ws_zero_one_estimate(&source_x.select_rows(&si), &transported_x.select_rows(&ti), gamma)
    });
    let mut sum = 0.0;
    for v in values {
        sum += v?;
    }
    Ok(sum / repeats as f64)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundEvalConfig {
    pub gamma: f64,
    pub slack: f64,
    pub ws_batch: usize,
    pub ws_repeats: usize,
    pub mode: RiskMode,
    /// `M` used in `bound_value`; the clamp-implied constant is reported alongside.
    pub reporting_m: f64,
    pub seed: u64,
}

impl Default for BoundEvalConfig {
    fn default() -> Self {
        BoundEvalConfig {
            gamma: 100.0,
            slack: 0.05,
            ws_batch: 1000,
            ws_repeats: 10,
            mode: RiskMode::PosteriorWeighted,
            reporting_m: 1.0,
            seed: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub checkpoint: u64,
    pub risk_source: f64,
    pub risk_target: f64,
    pub gap: f64,
    pub ws_term: f64,
    pub delta_p_pushforward: f64,
    pub delta_p_source: f64,
    pub min_delta: f64,
    pub bound_m: f64,
    pub clamp_m: f64,
    pub bound_value: f64,
    pub holds: bool,
    pub slack: f64,
}

impl BoundReport {
    pub fn is_finite(&self) -> bool {
        [
            self.risk_source,
            self.risk_target,
            self.gap,
            self.ws_term,
            self.delta_p_pushforward,
            self.delta_p_source,
            self.min_delta,
            self.bound_value,
        ]
        .iter()
        .all(|v| v.is_finite())
    }
}

/// Everything needed to evaluate a bundle against a fixed pair of datasets.
#[derive(Clone, Debug)]
pub struct BoundContext {
    pub source: EvalSet,
    pub target: EvalSet,
    pub oracles: Option<Oracles>,
}

impl BoundContext {
    pub fn new(source: &DomainDataset, target: &DomainDataset) -> Self {
        BoundContext {
            source: EvalSet::from_dataset(source),
            target: EvalSet::from_dataset(target),
            oracles: Oracles::from_datasets(source, target),
        }
    }

    pub fn report(
        &self,
        bundle: &ModelBundle,
        loss: &LossSpec,
        cfg: &BoundEvalConfig,
        checkpoint: u64,
    ) -> Result<BoundReport> {
        let eps = loss.clamp_epsilon;
        let h_s = Hypothesis::new(bundle.source_hypothesis(), eps);
        let h_t = Hypothesis::new(bundle.target_hypothesis(), eps);
        let risk_source = self.source.risk(&h_s, loss, cfg.mode)?;
        let risk_target = self.target.risk(&h_t, loss, cfg.mode)?;
        let gap = (risk_target - risk_source).abs();
        let map_ts = bundle.map_ts();
        let transported = map_ts.apply(&self.target.x)?;
        let ws = ws_term(
            &self.source.x,
            &transported,
            cfg.gamma,
            cfg.ws_batch,
            cfg.ws_repeats,
            derive_seed(cfg.seed, checkpoint),
        )?;
        let dp = delta_p_term(
            &map_ts,
            &bundle.map_st(),
            &self.source.x,
            &self.target.x,
            self.oracles.as_ref(),
        )?;
        let bound_value = cfg.reporting_m * (ws + dp.min);
        let report = BoundReport {
            checkpoint,
            risk_source,
            risk_target,
            gap,
            ws_term: ws,
            delta_p_pushforward: dp.pushforward,
            delta_p_source: dp.source,
            min_delta: dp.min,
            bound_m: cfg.reporting_m,
            clamp_m: loss.bound_m,
            bound_value,
            holds: gap <= bound_value + cfg.slack,
            slack: cfg.slack,
        };
        if !report.is_finite() {
            return Err(Error::NonFinite(format!("bound report at checkpoint {checkpoint}")));
        }
        Ok(report)
    }
}

pub fn theorem1_report(
    bundle: &ModelBundle,
    source: &DomainDataset,
    target: &DomainDataset,
    loss: &LossSpec,
    cfg: &BoundEvalConfig,
    checkpoint: u64,
) -> Result<BoundReport> {
    BoundContext::new(source, target).report(bundle, loss, cfg, checkpoint)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::{AChoice, ArchConfig};
    use crate::nn::{Activation, MlpSpec, Network};
    use crate::synth::{make_scenario, AffineMap, ScenarioSpec};

    fn constant_net(dim: usize, q: f64) -> Network {
        let spec = MlpSpec::new(vec![dim, 1], vec![Activation::Sigmoid]).unwrap();
        let mut n = Network::new(spec, 0);
        n.params = n.params.zeros_like();
        n.params.layers[0].bias[0] = (q / (1.0 - q)).ln();
        n
    }

    fn scenario() -> crate::synth::Scenario {
        make_scenario(&ScenarioSpec::paper_default(), 500, 500, 3).unwrap()
    }

    #[test]
    fn constant_half_predictor_costs_ln2() {
        let sc = scenario();
        let net = constant_net(10, 0.5);
        let h = Hypothesis::new(Pipeline::new(vec![&net]), 1e-3);
        let loss = LossSpec::logistic(1e-3).unwrap();
        for mode in [RiskMode::SampledLabels, RiskMode::PosteriorWeighted] {
            let r = empirical_risk(&h, &sc.source, &loss, mode).unwrap();
            assert!((r - std::f64::consts::LN_2).abs() < 1e-12);
        }
    }

    #[test]
    fn clamp_boundary_and_zero_one() {
        let loss = LossSpec::logistic(1e-3).unwrap();
        let r = risk_of_predictions(&[1.0; 4], &[1; 4], None, &loss, RiskMode::SampledLabels).unwrap();
        assert!((r + (1.0f64 - 1e-3).ln()).abs() < 1e-15);
        assert!((loss.bound_m - 6.907755).abs() < 1e-6);
        let zo = LossSpec::zero_one();
        let r = risk_of_predictions(&[0.9, 0.1, 0.6], &[1, 0, 1], None, &zo, RiskMode::SampledLabels).unwrap();
        assert_eq!(r, 0.0);
        assert_eq!(zo.bound_m, 1.0);
    }

    #[test]
    fn posterior_mode_requires_posteriors() {
        let loss = LossSpec::logistic(1e-3).unwrap();
        let err = risk_of_predictions(&[0.5], &[1], None, &loss, RiskMode::PosteriorWeighted);
        assert!(matches!(err, Err(Error::MissingPosterior(_))));
    }

    #[test]
    fn gap_of_identical_terms_is_zero() {
        let sc = scenario();
        let b = ModelBundle::new(ArchConfig::default(), AChoice::G1, 0, 1).unwrap();
        let h = Hypothesis::new(b.source_hypothesis(), 1e-3);
        let loss = LossSpec::logistic(1e-3).unwrap();
        let g = risk_gap(&h, &h, &sc.source, &sc.source, &loss, RiskMode::PosteriorWeighted).unwrap();
        assert_eq!(g, 0.0);
    }

    #[test]
    fn prop1_same_composition() {
        let sc = scenario();
        let b = ModelBundle::new(ArchConfig::default(), AChoice::G1, 0, 5).unwrap();
        let loss = LossSpec::logistic(1e-3).unwrap();
        let target = EvalSet::from_dataset(&sc.target);
        let h = Hypothesis::new(b.source_hypothesis(), 1e-3);
        let (a, p) = prop1_check(&h, &b.map_ts(), &target, &loss, RiskMode::PosteriorWeighted).unwrap();
        assert!((a - p).abs() <= 1e-12);
        let (a, p) = prop1_check(&h, &Pipeline::identity(), &target, &loss, RiskMode::SampledLabels).unwrap();
        let raw = target.risk(&h, &loss, RiskMode::SampledLabels).unwrap();
        assert_eq!(a, raw);
        assert_eq!(p, raw);
    }

    #[test]
    fn missing_oracle_message() {
        let x = Matrix::zeros(2, 10);
        let err = delta_p_term(&Pipeline::identity(), &Pipeline::identity(), &x, &x, None).unwrap_err();
        assert!(err.to_string().contains("synthetic-only estimator"));
    }

    #[test]
    fn opposite_deterministic_posteriors_give_two() {
        assert_eq!(mean_l1_gap(&[1.0, 1.0], &[0.0, 0.0]), 2.0);
    }

    #[test]
    fn ws_term_of_coupled_identical_sets_is_zero() {
        let sc = scenario();
        let x = sc.source.features();
        assert_eq!(ws_term(&x, &x, 100.0, 200, 3, 1).unwrap(), 0.0);
    }

    #[test]
    fn report_invariants_on_random_bundle() {
        let sc = scenario();
        let b = ModelBundle::new(ArchConfig::default(), AChoice::G1, 0, 9).unwrap();
        let loss = LossSpec::logistic(1e-3).unwrap();
        let cfg = BoundEvalConfig {
            ws_batch: 200,
            ws_repeats: 2,
            ..BoundEvalConfig::default()
        };
        let r = theorem1_report(&b, &sc.source, &sc.target, &loss, &cfg, 0).unwrap();
        assert!(r.is_finite());
        assert_eq!(r.min_delta, r.delta_p_pushforward.min(r.delta_p_source));
        assert_eq!(r.bound_value, r.bound_m * (r.ws_term + r.min_delta));
        assert!((0.0..=2.0).contains(&r.delta_p_pushforward));
        assert!(r.risk_source <= loss.bound_m && r.risk_target <= loss.bound_m);
        assert!(r.holds);
    }

    #[test]
    fn flipped_translation_has_large_delta_near_modes() {
        let map = AffineMap::translation(vec![3.0; 10]);
        let sc = make_scenario(&ScenarioSpec::ideal_translation(map.clone(), true), 4000, 4000, 4).unwrap();
        let o = Oracles::from_datasets(&sc.source, &sc.target).unwrap();
        let near: Vec<usize> = sc
            .source
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| {
                let m = s.x.iter().sum::<f64>() / 10.0;
                (m - 1.0).abs() < 0.15 || (m - 2.0).abs() < 0.15
            })
            .map(|(i, _)| i)
            .take(1000)
            .collect();
        assert!(near.len() >= 500);
        let xs = sc.source.features().select_rows(&near);
        let xt = sc.target.features().select_rows(&near);
        let ts = affine_net(&map.inverse().unwrap());
        let st = affine_net(&map);
        let dp = delta_p_term(&Pipeline::new(vec![&ts]), &Pipeline::new(vec![&st]), &xs, &xt, Some(&o)).unwrap();
        assert!(dp.pushforward >= 1.9 && dp.source >= 1.9, "{dp:?}");
    }

    fn affine_net(map: &AffineMap) -> Network {
        let d = map.dim();
        let spec = MlpSpec::new(vec![d, d], vec![Activation::Identity]).unwrap();
        let mut n = Network::new(spec, 0);
        n.params.layers[0].weight = map.matrix.clone();
        n.params.layers[0].bias = map.offset.clone();
        n
    }
}
