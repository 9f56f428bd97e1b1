use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Debug, PartialEq)]
pub struct Component {
    pub weight: f64,
    pub mean: Vec<f64>,
    /// Diagonal of the covariance.
    pub var: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaussianMixtureSpec {
    components: Vec<Component>,
    dim: usize,
}

impl GaussianMixtureSpec {
    /// Weights must be nonnegative and sum to 1 within 1e-12; a zero weight
    /// is allowed so a component can be switched off.
    pub fn new(components: Vec<Component>) -> Result<Self> {
        let dim = components
            .first()
            .map(|c| c.mean.len())
            .ok_or_else(|| Error::InvalidMixture("no components".into()))?;
        if dim == 0 {
            return Err(Error::InvalidMixture("dimension must be >= 1".into()));
        }
        let mut total = 0.0;
        for (k, c) in components.iter().enumerate() {
            if c.mean.len() != dim || c.var.len() != dim {
                return Err(Error::InvalidMixture(format!("component {k} has wrong dimension")));
            }
            if !(c.weight >= 0.0) || !c.weight.is_finite() {
                return Err(Error::InvalidMixture(format!("component {k} weight {}", c.weight)));
            }
            if c.var.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::InvalidMixture(format!("component {k} has non-positive variance")));
            }
            if c.mean.iter().any(|m| !m.is_finite()) {
                return Err(Error::InvalidMixture(format!("component {k} mean is not finite")));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidMixture(format!("weights sum to {total}")));
        }
        Ok(GaussianMixtureSpec { components, dim })
    }

    /// Equal isotropic covariance `var * I` for every component.
    pub fn isotropic(weights: &[f64], means: &[Vec<f64>], var: f64) -> Result<Self> {
        let comps = weights
            .iter()
            .zip(means)
            .map(|(&w, m)| Component {
                weight: w,
                mean: m.clone(),
                var: vec![var; m.len()],
            })
            .collect();
        GaussianMixtureSpec::new(comps)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> Vec<f64> {
        self.components.iter().map(|c| c.weight).collect()
    }

    /// Same components in reverse order, which swaps binary labels.
    pub fn reversed(&self) -> Self {
        let mut components = self.components.clone();
        components.reverse();
        GaussianMixtureSpec {
            components,
            dim: self.dim,
        }
    }

    pub fn log_density_component(&self, k: usize, x: &[f64]) -> f64 {
        let c = &self.components[k];
        let mut acc = 0.0;
        for ((xi, mi), vi) in x.iter().zip(&c.mean).zip(&c.var) {
            let d = xi - mi;
            acc += d * d / vi + vi.ln();
        }
        -0.5 * (acc + self.dim as f64 * (2.0 * std::f64::consts::PI).ln())
    }
}

/// Source and target laws of the reference synthetic problem: two-component
/// mixtures in R^10 with identity covariance.
pub fn paper_default_specs() -> (GaussianMixtureSpec, GaussianMixtureSpec) {
    let d = 10;
    let source = GaussianMixtureSpec::isotropic(&[0.5, 0.5], &[vec![1.0; d], vec![2.0; d]], 1.0)
        .expect("valid source spec");
    let target = GaussianMixtureSpec::isotropic(
        &[1.0 / 3.0, 2.0 / 3.0],
        &[vec![4.0; d], vec![5.0; d]],
        1.0,
    )
    .expect("valid target spec");
    (source, target)
}

/// `(p(y=0|x), p(y=1|x))` for a two-component mixture, via the log-odds.
pub fn bayes_posterior(spec: &GaussianMixtureSpec, x: &[f64]) -> Result<(f64, f64)> {
    if spec.components.len() != 2 {
        return Err(Error::InvalidMixture(format!(
            "binary posterior needs 2 components, got {}",
            spec.components.len()
        )));
    }
    if x.len() != spec.dim {
        return Err(Error::dim("posterior input", spec.dim, x.len()));
    }
    let c = &spec.components;
    let log_odds = c[1].weight.ln() - c[0].weight.ln() + spec.log_density_component(1, x)
        - spec.log_density_component(0, x);
    let p1 = if log_odds.is_nan() {
        // both weights zero cannot happen for a valid spec; guard anyway
        0.5
    } else {
        crate::nn::sigmoid(log_odds)
    };
    Ok((1.0 - p1, p1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainTag {
    Source,
    Target,
}

impl DomainTag {
    pub fn name(self) -> &'static str {
        match self {
            DomainTag::Source => "source",
            DomainTag::Target => "target",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub x: Vec<f64>,
    pub y: u8,
    /// True `p(y=1|x)` when the generating law is known.
    pub posterior1: Option<f64>,
}

/// Target samples whose labels are revealed to the learner. `labels` may
/// differ from the samples' own labels when a scenario flips them.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledMask {
    pub indices: Vec<usize>,
    pub labels: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainDataset {
    pub samples: Vec<LabeledSample>,
    pub tag: DomainTag,
    pub generator: Option<GaussianMixtureSpec>,
    pub seed: u64,
    pub labeled: Option<LabeledMask>,
}

impl DomainDataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.x.len())
    }

    pub fn features(&self) -> Matrix {
        let rows: Vec<&[f64]> = self.samples.iter().map(|s| s.x.as_slice()).collect();
        Matrix::from_rows(&rows)
    }

    pub fn labels(&self) -> Vec<u8> {
        self.samples.iter().map(|s| s.y).collect()
    }

    pub fn posteriors(&self) -> Option<Vec<f64>> {
        self.samples.iter().map(|s| s.posterior1).collect()
    }

    pub fn labeled_count(&self) -> usize {
        self.labeled.as_ref().map_or(0, |m| m.indices.len())
    }
}

pub fn sample_mixture(
    spec: &GaussianMixtureSpec,
    n: usize,
    seed: u64,
    tag: DomainTag,
) -> Result<DomainDataset> {
    if n == 0 {
        return Err(Error::InvalidMixture("sample count must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let binary = spec.components.len() == 2;
    let last_positive = spec
        .components
        .iter()
        .rposition(|c| c.weight > 0.0)
        .unwrap_or(0);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut k = last_positive;
        for (i, c) in spec.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                k = i;
                break;
            }
        }
        let c = &spec.components[k];
        let x: Vec<f64> = c
            .mean
            .iter()
            .zip(&c.var)
            .map(|(m, v)| {
                let z: f64 = rng.sample(StandardNormal);
                m + v.sqrt() * z
            })
            .collect();
        let posterior1 = if binary {
            Some(bayes_posterior(spec, &x)?.1)
        } else {
            None
        };
        samples.push(LabeledSample {
            x,
            y: k as u8,
            posterior1,
        });
    }
    Ok(DomainDataset {
        samples,
        tag,
        generator: Some(spec.clone()),
        seed,
        labeled: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn normal_pdf(spec: &GaussianMixtureSpec, k: usize, x: &[f64]) -> f64 {
        let c = &spec.components()[k];
        let mut p = 1.0;
        for ((xi, mi), vi) in x.iter().zip(&c.mean).zip(&c.var) {
            p *= (-(xi - mi) * (xi - mi) / (2.0 * vi)).exp() / (2.0 * std::f64::consts::PI * vi).sqrt();
        }
        p
    }

    #[test]
    fn default_specs() {
        let (s, t) = paper_default_specs();
        assert_eq!(s.weights(), vec![0.5, 0.5]);
        assert_eq!(t.weights(), vec![1.0 / 3.0, 2.0 / 3.0]);
        assert_eq!((s.dim(), t.dim()), (10, 10));
        assert_eq!(t.components()[1].mean, vec![5.0; 10]);
    }

    #[test]
    fn validation() {
        assert!(GaussianMixtureSpec::isotropic(&[0.5, 0.6], &[vec![0.0], vec![1.0]], 1.0).is_err());
        assert!(GaussianMixtureSpec::isotropic(&[0.5, 0.5], &[vec![0.0], vec![1.0]], 0.0).is_err());
        assert!(GaussianMixtureSpec::isotropic(&[1.0, 0.0], &[vec![0.0], vec![1.0]], 1.0).is_ok());
    }

    #[test]
    fn posterior_closed_forms() {
        let (s, _) = paper_default_specs();
        let (p0, p1) = bayes_posterior(&s, &[1.5; 10]).unwrap();
        assert!((p1 - 0.5).abs() < 1e-15 && (p0 - 0.5).abs() < 1e-15);
        let (_, p1) = bayes_posterior(&s, &[1.0; 10]).unwrap();
        let expect = 1.0 / (1.0 + 5f64.exp());
        assert!((p1 - expect).abs() < 1e-15);
        assert!((p1 - 0.0066929).abs() < 1e-7);
    }

    #[test]
    fn posterior_rejects_three_components() {
        let s = GaussianMixtureSpec::isotropic(&[0.2, 0.3, 0.5], &[vec![0.0], vec![1.0], vec![2.0]], 1.0)
            .unwrap();
        assert!(bayes_posterior(&s, &[0.0]).is_err());
        let (b, _) = paper_default_specs();
        assert!(bayes_posterior(&b, &[0.0; 3]).is_err());
    }

    #[test]
    fn posterior_matches_direct_density_ratio() {
        let (s, t) = paper_default_specs();
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for i in 0..200 {
            let spec = if i % 2 == 0 { &s } else { &t };
            let center = if i % 2 == 0 { 1.5 } else { 4.5 };
            let x: Vec<f64> = (0..10).map(|_| center + 0.4 * rand::Rng::sample::<f64, _>(&mut rng, StandardNormal)).collect();
            let w = spec.weights();
            let a = w[0] * normal_pdf(spec, 0, &x);
            let b = w[1] * normal_pdf(spec, 1, &x);
            let direct = b / (a + b);
            let (_, p1) = bayes_posterior(spec, &x).unwrap();
            assert!((p1 - direct).abs() < 1e-9, "{p1} vs {direct}");
        }
    }

    #[test]
    fn sampling_fraction_and_means() {
        let (s, _) = paper_default_specs();
        let ds = sample_mixture(&s, 10_000, 1, DomainTag::Source).unwrap();
        let frac0 = ds.samples.iter().filter(|x| x.y == 0).count() as f64 / 10_000.0;
        assert!((frac0 - 0.5).abs() <= 0.02, "{frac0}");

        let big = sample_mixture(&s, 50_000, 2, DomainTag::Source).unwrap();
        for k in 0..2u8 {
            let members: Vec<_> = big.samples.iter().filter(|x| x.y == k).collect();
            for j in 0..10 {
                let m = members.iter().map(|x| x.x[j]).sum::<f64>() / members.len() as f64;
                assert!((m - s.components()[k as usize].mean[j]).abs() < 0.05);
            }
        }
    }

    #[test]
    fn sampling_determinism_and_forced_component() {
        let (s, _) = paper_default_specs();
        let a = sample_mixture(&s, 1, 42, DomainTag::Source).unwrap();
        let b = sample_mixture(&s, 1, 42, DomainTag::Source).unwrap();
        assert_eq!(a, b);
        let forced = GaussianMixtureSpec::isotropic(&[1.0, 0.0], &[vec![0.0; 2], vec![3.0; 2]], 1.0).unwrap();
        let ds = sample_mixture(&forced, 500, 3, DomainTag::Source).unwrap();
        assert!(ds.samples.iter().all(|x| x.y == 0));
        assert!(ds.samples.iter().all(|x| x.posterior1 == Some(0.0)));
        assert!(sample_mixture(&s, 0, 1, DomainTag::Source).is_err());
    }

    #[test]
    fn carried_posteriors_match_oracle() {
        let (_, t) = paper_default_specs();
        let ds = sample_mixture(&t, 300, 5, DomainTag::Target).unwrap();
        for smp in &ds.samples {
            let (_, p1) = bayes_posterior(&t, &smp.x).unwrap();
            assert!((smp.posterior1.unwrap() - p1).abs() <= 1e-12);
        }
    }

    proptest! {
        #[test]
        fn posterior_normalizes_exactly(x in proptest::collection::vec(-20.0f64..20.0, 10)) {
            let (s, t) = paper_default_specs();
            for spec in [&s, &t] {
                let (p0, p1) = bayes_posterior(spec, &x).unwrap();
                prop_assert_eq!(p0 + p1, 1.0);
                prop_assert!((0.0..=1.0).contains(&p1));
            }
        }
    }
}
