use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::error::{Error, Result};
use crate::matrix::Matrix;

use super::mixture::{
    bayes_posterior, paper_default_specs, sample_mixture, Component, DomainDataset, DomainTag,
    GaussianMixtureSpec, LabeledMask, LabeledSample,
};

/// `x -> matrix * x + offset` on R^d.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineMap {
    pub matrix: Matrix,
    pub offset: Vec<f64>,
}

impl AffineMap {
    pub fn new(matrix: Matrix, offset: Vec<f64>) -> Result<Self> {
        if matrix.rows() != matrix.cols() || matrix.rows() != offset.len() {
            return Err(Error::InvalidScenario("affine map must be square with matching offset".into()));
        }
        Ok(AffineMap { matrix, offset })
    }

    pub fn translation(offset: Vec<f64>) -> Self {
        AffineMap {
            matrix: Matrix::identity(offset.len()),
            offset,
        }
    }

    pub fn dim(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let mut acc = 0.0;
                for (a, xj) in self.matrix.row(i).iter().zip(x) {
                    acc += a * xj;
                }
                acc + self.offset[i]
            })
            .collect()
    }

    /// Inverse via Gauss-Jordan elimination with partial pivoting.
    pub fn inverse(&self) -> Result<AffineMap> {
        let n = self.dim();
        let mut a = self.matrix.clone();
        let mut inv = Matrix::identity(n);
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&i, &j| a[(i, col)].abs().total_cmp(&a[(j, col)].abs()))
                .unwrap();
            if a[(pivot, col)].abs() < 1e-14 {
                return Err(Error::InvalidScenario("affine map is singular".into()));
            }
            for j in 0..n {
                let (t1, t2) = (a[(col, j)], inv[(col, j)]);
                a[(col, j)] = a[(pivot, j)];
                inv[(col, j)] = inv[(pivot, j)];
                a[(pivot, j)] = t1;
                inv[(pivot, j)] = t2;
            }
            let p = a[(col, col)];
            for j in 0..n {
                a[(col, j)] /= p;
                inv[(col, j)] /= p;
            }
            for i in 0..n {
                if i != col {
                    let f = a[(i, col)];
                    if f != 0.0 {
                        for j in 0..n {
                            a[(i, j)] -= f * a[(col, j)];
                            inv[(i, j)] -= f * inv[(col, j)];
                        }
                    }
                }
            }
        }
        let shifted = AffineMap {
            matrix: inv.clone(),
            offset: vec![0.0; n],
        }
        .apply(&self.offset);
        Ok(AffineMap {
            matrix: inv,
            offset: shifted.into_iter().map(|v| -v).collect(),
        })
    }

    /// Law of `map(x)` for `x ~ spec`. The result must stay diagonal.
    pub fn pushforward(&self, spec: &GaussianMixtureSpec) -> Result<GaussianMixtureSpec> {
        let n = self.dim();
        if spec.dim() != n {
            return Err(Error::dim("pushforward", n, spec.dim()));
        }
        let mut comps = Vec::new();
        for c in spec.components() {
            let mut var = vec![0.0; n];
            #[allow(clippy::needless_range_loop)]
            for i in 0..n {
                for j in 0..n {
                    let cov: f64 = (0..n)
                        .map(|k| self.matrix[(i, k)] * c.var[k] * self.matrix[(j, k)])
                        .sum();
                    if i == j {
                        var[i] = cov;
                    } else if cov.abs() > 1e-12 {
                        return Err(Error::InvalidScenario(
                            "map does not preserve diagonal covariance".into(),
                        ));
                    }
                }
            }
            comps.push(Component {
                weight: c.weight,
                mean: self.apply(&c.mean),
                var,
            });
        }
        GaussianMixtureSpec::new(comps)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioKind {
    PaperDefault,
    IdealTranslation,
    AlignmentStudy,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::PaperDefault => "paper_default",
            ScenarioKind::IdealTranslation => "ideal_translation",
            ScenarioKind::AlignmentStudy => "alignment_study",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "paper_default" => Ok(ScenarioKind::PaperDefault),
            "ideal_translation" => Ok(ScenarioKind::IdealTranslation),
            "alignment_study" => Ok(ScenarioKind::AlignmentStudy),
            other => Err(Error::InvalidScenario(format!("unknown scenario kind `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    /// Ideal translation: the map swaps class identities. Alignment study:
    /// revealed target labels are flipped.
    pub label_flip: bool,
    pub labeled_ratio: f64,
    pub true_map: Option<AffineMap>,
}

impl ScenarioSpec {
    pub fn paper_default() -> Self {
        ScenarioSpec {
            kind: ScenarioKind::PaperDefault,
            label_flip: false,
            labeled_ratio: 0.0,
            true_map: None,
        }
    }

    pub fn ideal_translation(map: AffineMap, label_flip: bool) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::IdealTranslation,
            label_flip,
            labeled_ratio: 0.0,
            true_map: Some(map),
        }
    }

    pub fn alignment_study(ratio: f64, label_flip: bool) -> Self {
        ScenarioSpec {
            kind: ScenarioKind::AlignmentStudy,
            label_flip,
            labeled_ratio: ratio,
            true_map: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.labeled_ratio) {
            return Err(Error::InvalidScenario(format!(
                "labeled ratio {} outside [0, 1]",
                self.labeled_ratio
            )));
        }
        match (self.kind, &self.true_map) {
            (ScenarioKind::IdealTranslation, None) => {
                Err(Error::InvalidScenario("ideal_translation needs a true map".into()))
            }
            (ScenarioKind::IdealTranslation, Some(_)) => Ok(()),
            (_, Some(_)) => Err(Error::InvalidScenario(format!(
                "{} takes no true map",
                self.kind.name()
            ))),
            _ => Ok(()),
        }
    }

    /// Flat `key = value` form.
    pub fn to_kv(&self) -> BTreeMap<String, String> {
        let mut kv = BTreeMap::new();
        kv.insert("kind".into(), self.kind.name().into());
        kv.insert("label_flip".into(), self.label_flip.to_string());
        kv.insert("labeled_ratio".into(), format!("{}", self.labeled_ratio));
        if let Some(m) = &self.true_map {
            let join = |v: &[f64]| v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",");
            kv.insert("true_map.matrix".into(), join(m.matrix.data()));
            kv.insert("true_map.offset".into(), join(&m.offset));
        }
        kv
    }

    pub fn from_kv(kv: &BTreeMap<String, String>) -> Result<Self> {
        let get = |k: &str| kv.get(k).map(String::as_str);
        let kind = ScenarioKind::parse(get("kind").unwrap_or("paper_default"))?;
        let label_flip = match get("label_flip").unwrap_or("false") {
            "true" | "1" => true,
            "false" | "0" => false,
            v => return Err(Error::InvalidScenario(format!("label_flip = {v}"))),
        };
        let num = |k: &str, s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| Error::InvalidScenario(format!("{k} = {s}")))
        };
        let labeled_ratio = num("labeled_ratio", get("labeled_ratio").unwrap_or("0"))?;
        let list = |k: &str| -> Result<Option<Vec<f64>>> {
            get(k)
                .map(|s| s.split(',').map(|v| num(k, v)).collect::<Result<Vec<_>>>())
                .transpose()
        };
        let true_map = match (list("true_map.matrix")?, list("true_map.offset")?) {
            (Some(m), Some(o)) => {
                let d = o.len();
                Some(AffineMap::new(Matrix::from_vec(d, d, m)?, o)?)
            }
            (None, None) => None,
            _ => return Err(Error::InvalidScenario("true_map needs matrix and offset".into())),
        };
        let spec = ScenarioSpec {
            kind,
            label_flip,
            labeled_ratio,
            true_map,
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Clone, Debug)]
pub struct Scenario {
    pub source: DomainDataset,
    pub target: DomainDataset,
    /// Source-to-target map for ideal translations.
    pub oracle: Option<AffineMap>,
}

/// Builds a source/target pair.
///
/// Ideal translations push each source sample through the true map, so target
/// sample `i` is the image of source sample `i` and `n_target <= n_source`.
pub fn make_scenario(spec: &ScenarioSpec, n_source: usize, n_target: usize, seed: u64) -> Result<Scenario> {
    spec.validate()?;
    let (src_spec, tgt_spec) = paper_default_specs();
    let source = sample_mixture(&src_spec, n_source, derive_seed(seed, 1), DomainTag::Source)?;
    match spec.kind {
        ScenarioKind::PaperDefault => {
            let target = sample_mixture(&tgt_spec, n_target, derive_seed(seed, 2), DomainTag::Target)?;
            Ok(Scenario {
                source,
                target,
                oracle: None,
            })
        }
        ScenarioKind::IdealTranslation => {
            let map = spec.true_map.clone().expect("validated");
            if map.dim() != src_spec.dim() {
                return Err(Error::dim("true map", src_spec.dim(), map.dim()));
            }
            if n_target == 0 || n_target > n_source {
                return Err(Error::InvalidScenario(format!(
                    "ideal translation needs 1 <= n_target <= n_source, got {n_target}"
                )));
            }
            let mut pushed = map.pushforward(&src_spec)?;
            if spec.label_flip {
                pushed = pushed.reversed();
            }
            let samples = source.samples[..n_target]
                .iter()
                .map(|s| {
                    let x = map.apply(&s.x);
                    let posterior1 = Some(bayes_posterior(&pushed, &x)?.1);
                    Ok(LabeledSample {
                        x,
                        y: if spec.label_flip { 1 - s.y } else { s.y },
                        posterior1,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let target = DomainDataset {
                samples,
                tag: DomainTag::Target,
                generator: Some(pushed),
                seed: derive_seed(seed, 2),
                labeled: None,
            };
            Ok(Scenario {
                source,
                target,
                oracle: Some(map),
            })
        }
        ScenarioKind::AlignmentStudy => {
            let mut target =
                sample_mixture(&tgt_spec, n_target, derive_seed(seed, 2), DomainTag::Target)?;
            let count = (spec.labeled_ratio * n_target as f64).floor() as usize;
            let mut order: Vec<usize> = (0..n_target).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(seed, 3)));
            let mut indices = order[..count].to_vec();
            indices.sort_unstable();
            let labels = indices
                .iter()
                .map(|&i| {
                    let y = target.samples[i].y;
                    if spec.label_flip {
                        1 - y
                    } else {
                        y
                    }
                })
                .collect();
            target.labeled = Some(LabeledMask { indices, labels });
            Ok(Scenario {
                source,
                target,
                oracle: None,
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shift3() -> AffineMap {
        AffineMap::translation(vec![3.0; 10])
    }

    #[test]
    fn translation_pushforward_shifts_means() {
        let (s, _) = paper_default_specs();
        let t = shift3().pushforward(&s).unwrap();
        assert_eq!(t.components()[0].mean, vec![4.0; 10]);
        assert_eq!(t.components()[1].mean, vec![5.0; 10]);
        assert_eq!(t.weights(), vec![0.5, 0.5]);
        assert_eq!(t.components()[0].var, vec![1.0; 10]);
    }

    #[test]
    fn inverse_round_trips() {
        let mut m = Matrix::identity(3);
        m[(0, 1)] = 2.0;
        m[(2, 0)] = -1.0;
        m[(1, 1)] = 0.5;
        let map = AffineMap::new(m, vec![1.0, -2.0, 0.5]).unwrap();
        let inv = map.inverse().unwrap();
        let x = [0.3, -1.7, 2.2];
        let back = inv.apply(&map.apply(&x));
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(AffineMap::new(Matrix::zeros(2, 2), vec![0.0; 2]).unwrap().inverse().is_err());
    }

    #[test]
    fn ideal_translation_is_harmonic() {
        let spec = ScenarioSpec::ideal_translation(shift3(), false);
        let sc = make_scenario(&spec, 500, 500, 9).unwrap();
        let src_spec = sc.source.generator.clone().unwrap();
        let inv = sc.oracle.as_ref().unwrap().inverse().unwrap();
        for s in &sc.target.samples {
            let (_, p_src) = bayes_posterior(&src_spec, &inv.apply(&s.x)).unwrap();
            assert!((s.posterior1.unwrap() - p_src).abs() <= 1e-12);
        }
        assert_eq!(sc.source.labels(), sc.target.labels());
    }

    #[test]
    fn ideal_translation_flip_swaps_labels() {
        let spec = ScenarioSpec::ideal_translation(shift3(), true);
        let sc = make_scenario(&spec, 100, 100, 9).unwrap();
        for (s, t) in sc.source.samples.iter().zip(&sc.target.samples) {
            assert_eq!(t.y, 1 - s.y);
            assert!((t.posterior1.unwrap() - (1.0 - s.posterior1.unwrap())).abs() < 1e-12);
        }
    }

    #[test]
    fn alignment_masks() {
        let empty = make_scenario(&ScenarioSpec::alignment_study(0.0, false), 100, 100, 1).unwrap();
        assert_eq!(empty.target.labeled_count(), 0);

        let quarter = make_scenario(&ScenarioSpec::alignment_study(0.25, false), 100, 10_000, 1).unwrap();
        assert_eq!(quarter.target.labeled_count(), 2500);
        let mask = quarter.target.labeled.as_ref().unwrap();
        for (&i, &y) in mask.indices.iter().zip(&mask.labels) {
            assert_eq!(quarter.target.samples[i].y, y);
        }

        let flipped = make_scenario(&ScenarioSpec::alignment_study(0.25, true), 100, 10_000, 1).unwrap();
        let fm = flipped.target.labeled.as_ref().unwrap();
        assert_eq!(fm.indices, mask.indices);
        for (&i, &y) in fm.indices.iter().zip(&fm.labels) {
            assert_eq!(y, 1 - flipped.target.samples[i].y);
        }
    }

    #[test]
    fn rejects_bad_ratio_and_map_placement() {
        assert!(make_scenario(&ScenarioSpec::alignment_study(1.5, false), 10, 10, 0).is_err());
        assert!(make_scenario(&ScenarioSpec::alignment_study(-0.1, false), 10, 10, 0).is_err());
        let mut bad = ScenarioSpec::paper_default();
        bad.true_map = Some(shift3());
        assert!(bad.validate().is_err());
    }

    #[test]
    fn scenarios_are_deterministic() {
        let spec = ScenarioSpec::alignment_study(0.1, false);
        let a = make_scenario(&spec, 200, 200, 4).unwrap();
        let b = make_scenario(&spec, 200, 200, 4).unwrap();
        assert_eq!(a.source, b.source);
        assert_eq!(a.target, b.target);
    }

    #[test]
    fn kv_round_trip() {
        let spec = ScenarioSpec::ideal_translation(shift3(), true);
        assert_eq!(ScenarioSpec::from_kv(&spec.to_kv()).unwrap(), spec);
        let a = ScenarioSpec::alignment_study(0.15, false);
        assert_eq!(ScenarioSpec::from_kv(&a.to_kv()).unwrap(), a);
    }
}
