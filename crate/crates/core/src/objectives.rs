//! Training objectives over a [`ModelBundle`] with exact gradients.
//!
//! Every objective returns its value together with the gradient of that value
//! for each network it depends on. Minimax objectives report the gradient for
//! both players; the trainer ascends on discriminator entries and descends on
//! the rest.

use crate::bundle::{AChoice, BundleGrads, ModelBundle, NetId};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::nn::{MlpParams, Network};
use crate::transport::{smoothed_zero_one, smoothed_zero_one_slope, CostKind, CostSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ObjectiveWeights {
    /// Adversarial weight.
    pub alpha: f64,
    /// Classifier weight.
    pub beta: f64,
    /// Reconstruction weight.
    pub theta: f64,
    /// Ground cost and exponent of the reconstruction terms.
    pub recon: CostSpec,
    /// Clamp applied to classifier and discriminator outputs before logs.
    pub clamp_epsilon: f64,
    pub generator_loss: GeneratorLoss,
}

/// How the generators' adversarial term is formed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GeneratorLoss {
    /// Minimize `E_s log D(G1 x) + E_t log(1 - D(H1 x))`, the discriminator's own objective.
    Saturating,
    /// Minimize `-E_s log(1 - D(G1 x)) - E_t log D(H1 x)`, the same game with
    /// domain labels inverted; keeps gradients alive when D is confident.
    NonSaturating,
}

impl GeneratorLoss {
    pub fn name(self) -> &'static str {
        match self {
            GeneratorLoss::Saturating => "saturating",
            GeneratorLoss::NonSaturating => "non_saturating",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "saturating" => Ok(GeneratorLoss::Saturating),
            "non_saturating" => Ok(GeneratorLoss::NonSaturating),
            other => Err(Error::InvalidConfig(format!("unknown generator loss `{other}`"))),
        }
    }
}

impl Default for ObjectiveWeights {
    fn default() -> Self {
        ObjectiveWeights {
            alpha: 0.1,
            beta: 1.0,
            theta: 1.0,
            recon: CostSpec::smoothed(100.0),
            clamp_epsilon: 1e-3,
            generator_loss: GeneratorLoss::Saturating,
        }
    }
}

/// Unweighted terms of the generator objective.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Terms {
    pub recon_source: f64,
    pub recon_target: f64,
    pub classifier: f64,
    pub adversarial: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveEval {
    pub value: f64,
    pub grads: BundleGrads,
    pub terms: Terms,
    /// Classes whose alignment term was skipped for lack of samples.
    pub skipped: Vec<usize>,
}

fn finite(v: f64, term: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite(term.to_string()))
    }
}

fn nonempty(x: &Matrix, what: &str) -> Result<()> {
    if x.rows() == 0 {
        return Err(Error::InvalidConfig(format!("{what} batch is empty")));
    }
    Ok(())
}

/// Per-row ground cost between `x_i` and `y_i` and its gradient in `y_i`.
fn row_cost(kind: &CostKind, x: &[f64], y: &[f64], grad: &mut [f64]) -> f64 {
    match *kind {
        CostKind::ZeroOne => {
            grad.iter_mut().for_each(|g| *g = 0.0);
            if x != y {
                1.0
            } else {
                0.0
            }
        }
        CostKind::SmoothedZeroOne { gamma } => {
            let d = crate::transport::euclidean(x, y);
            let scale = if d > 0.0 {
                smoothed_zero_one_slope(gamma, d) / d
            } else {
                0.0
            };
            for ((g, a), b) in grad.iter_mut().zip(x).zip(y) {
                *g = scale * (b - a);
            }
            smoothed_zero_one(gamma, d)
        }
        CostKind::Lp { norm_order: q } => {
            if q == 1.0 {
                let mut c = 0.0;
                for ((g, a), b) in grad.iter_mut().zip(x).zip(y) {
                    let diff = b - a;
                    *g = if diff > 0.0 {
                        1.0
                    } else if diff < 0.0 {
                        -1.0
                    } else {
                        0.0
                    };
                    c += diff.abs();
                }
                c
            } else {
                let c = x
                    .iter()
                    .zip(y)
                    .map(|(a, b)| (b - a).abs().powf(q))
                    .sum::<f64>()
                    .powf(1.0 / q);
                for ((g, a), b) in grad.iter_mut().zip(x).zip(y) {
                    let diff = b - a;
                    *g = if c > 0.0 {
                        diff.signum() * diff.abs().powf(q - 1.0) * c.powf(1.0 - q)
                    } else {
                        0.0
                    };
                }
                c
            }
        }
    }
}

/// `(mean_i c(x_i, y_i)^p)^(1/p)` and its gradient in `y`.
pub fn reconstruction(x: &Matrix, y: &Matrix, spec: &CostSpec) -> Result<(f64, Matrix)> {
    if x.rows() != y.rows() || x.cols() != y.cols() {
        return Err(Error::dim("reconstruction pair", x.cols(), y.cols()));
    }
    let n = x.rows();
    let p = spec.exponent;
    let mut grad = Matrix::zeros(n, x.cols());
    let mut costs = Vec::with_capacity(n);
    for i in 0..n {
        costs.push(row_cost(&spec.kind, x.row(i), y.row(i), grad.row_mut(i)));
    }
    let s = costs.iter().map(|c| if p == 1.0 { *c } else { c.powf(p) }).sum::<f64>() / n as f64;
    let value = if p == 1.0 { s } else { s.powf(1.0 / p) };
    for (i, c) in costs.iter().enumerate() {
        let w = if p == 1.0 {
            1.0 / n as f64
        } else if s > 0.0 && *c > 0.0 {
            s.powf(1.0 / p - 1.0) * c.powf(p - 1.0) / n as f64
        } else {
            0.0
        };
        grad.row_mut(i).iter_mut().for_each(|g| *g *= w);
    }
    Ok((value, grad))
}

/// Mean binary cross-entropy of clamped predictions and its gradient in the
/// raw predictions (zero where the clamp is active).
fn cross_entropy(q: &Matrix, labels: &[u8], eps: f64) -> Result<(f64, Matrix)> {
    if labels.len() != q.rows() {
        return Err(Error::dim("classifier labels", q.rows(), labels.len()));
    }
    let n = q.rows() as f64;
    let mut grad = Matrix::zeros(q.rows(), 1);
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        let raw = q[(i, 0)];
        let c = raw.clamp(eps, 1.0 - eps);
        let inside = raw > eps && raw < 1.0 - eps;
        if y == 1 {
            total -= c.ln();
            if inside {
                grad[(i, 0)] = -1.0 / (c * n);
            }
        } else {
            total -= (1.0 - c).ln();
            if inside {
                grad[(i, 0)] = 1.0 / ((1.0 - c) * n);
            }
        }
    }
    Ok((total / n, grad))
}

/// `mean log D(real) + mean log(1 - D(fake))` on clamped outputs, with
/// gradients in the raw outputs.
fn gan_value(real: &Matrix, fake: &Matrix, eps: f64) -> (f64, Matrix, Matrix) {
    let nr = real.rows() as f64;
    let nf = fake.rows() as f64;
    let mut gr = Matrix::zeros(real.rows(), 1);
    let mut gf = Matrix::zeros(fake.rows(), 1);
    let mut vr = 0.0;
    for i in 0..real.rows() {
        let raw = real[(i, 0)];
        let c = raw.clamp(eps, 1.0 - eps);
        vr += c.ln();
        if raw > eps && raw < 1.0 - eps {
            gr[(i, 0)] = 1.0 / (c * nr);
        }
    }
    let mut vf = 0.0;
    for i in 0..fake.rows() {
        let raw = fake[(i, 0)];
        let c = raw.clamp(eps, 1.0 - eps);
        vf += (1.0 - c).ln();
        if raw > eps && raw < 1.0 - eps {
            gf[(i, 0)] = -1.0 / ((1.0 - c) * nf);
        }
    }
    (vr / nr + vf / nf, gr, gf)
}

fn scaled(m: &Matrix, s: f64) -> Matrix {
    m.map(|v| v * s)
}

/// Runs a discriminator on real and fake inputs and accumulates its parameter
/// gradient (scaled) under `id`. Returns the value and the gradients in both
/// inputs; with the non-saturating form the input gradients are those of the
/// label-inverted value.
#[allow(clippy::too_many_arguments)]
fn discriminate(
    net: &Network,
    id: NetId,
    real: &Matrix,
    fake: &Matrix,
    weight: f64,
    generator_loss: GeneratorLoss,
    eps: f64,
    grads: &mut BundleGrads,
) -> Result<(f64, Matrix, Matrix)> {
    let (dr, tr) = net.forward(real)?;
    let (df, tf) = net.forward(fake)?;
    let (v, gr, gf) = gan_value(&dr, &df, eps);
    let (pr, mut xr) = net.backward(&tr, &scaled(&gr, weight))?;
    let (pf, mut xf) = net.backward(&tf, &scaled(&gf, weight))?;
    grads.accumulate(id, &pr, 1.0);
    grads.accumulate(id, &pf, 1.0);
    if generator_loss == GeneratorLoss::NonSaturating {
        let (_, gf, gr) = gan_value(&df, &dr, eps);
        xr = net.backward(&tr, &scaled(&gr, -weight))?.1;
        xf = net.backward(&tf, &scaled(&gf, -weight))?.1;
    }
    Ok((v, xr, xf))
}

/// Generator objective: weighted reconstruction, classifier, and adversarial
/// terms. Gradients for G1, G2, H1, H2 and C; D is held fixed.
pub fn objective_i(
    bundle: &ModelBundle,
    source_x: &Matrix,
    source_y: &[u8],
    target_x: &Matrix,
    w: &ObjectiveWeights,
) -> Result<ObjectiveEval> {
    nonempty(source_x, "source")?;
    nonempty(target_x, "target")?;
    let eps = w.clamp_epsilon;
    let mut grads = BundleGrads::new();

    let (gs, g1_trace) = bundle.g1.forward(source_x)?;
    let (ht, h1_trace) = bundle.h1.forward(target_x)?;
    let mut grad_gs = Matrix::zeros(gs.rows(), gs.cols());
    let mut grad_ht = Matrix::zeros(ht.rows(), ht.cols());

    let (rs, h2_trace) = bundle.h2.forward(&gs)?;
    let (recon_source, g_rs) = reconstruction(source_x, &rs, &w.recon)?;
    let recon_source = finite(recon_source, "objective I: source reconstruction")?;
    let (rt, g2_trace) = bundle.g2.forward(&ht)?;
    let (recon_target, g_rt) = reconstruction(target_x, &rt, &w.recon)?;
    let recon_target = finite(recon_target, "objective I: target reconstruction")?;
    if w.theta != 0.0 {
        let (p, gx) = bundle.h2.backward(&h2_trace, &scaled(&g_rs, w.theta))?;
        grads.accumulate(NetId::H2, &p, 1.0);
        grad_gs.add_scaled(&gx, 1.0);
        let (p, gx) = bundle.g2.backward(&g2_trace, &scaled(&g_rt, w.theta))?;
        grads.accumulate(NetId::G2, &p, 1.0);
        grad_ht.add_scaled(&gx, 1.0);
    } else {
        grads.accumulate(NetId::H2, &bundle.h2.params.zeros_like(), 1.0);
        grads.accumulate(NetId::G2, &bundle.g2.params.zeros_like(), 1.0);
    }

    let clf_input = match bundle.a_choice {
        AChoice::G1 => &gs,
        AChoice::Identity => source_x,
    };
    let (q, c_trace) = bundle.c.forward(clf_input)?;
    let (classifier, g_q) = cross_entropy(&q, source_y, eps)?;
    let classifier = finite(classifier, "objective I: classifier")?;
    let (p, gx) = bundle.c.backward(&c_trace, &scaled(&g_q, w.beta))?;
    grads.accumulate(NetId::C, &p, 1.0);
    if bundle.a_choice == AChoice::G1 {
        grad_gs.add_scaled(&gx, 1.0);
    }

    let (ds, ds_trace) = bundle.d.forward(&gs)?;
    let (dt, dt_trace) = bundle.d.forward(&ht)?;
    let (adversarial, g_ds, g_dt) = match w.generator_loss {
        GeneratorLoss::Saturating => gan_value(&ds, &dt, eps),
        GeneratorLoss::NonSaturating => {
            let (v, g_dt, g_ds) = gan_value(&dt, &ds, eps);
            (-v, scaled(&g_ds, -1.0), scaled(&g_dt, -1.0))
        }
    };
    let adversarial = finite(adversarial, "objective I: adversarial")?;
    if w.alpha != 0.0 {
        let (_, gx) = bundle.d.backward(&ds_trace, &scaled(&g_ds, w.alpha))?;
        grad_gs.add_scaled(&gx, 1.0);
        let (_, gx) = bundle.d.backward(&dt_trace, &scaled(&g_dt, w.alpha))?;
        grad_ht.add_scaled(&gx, 1.0);
    }

    let (p, _) = bundle.g1.backward(&g1_trace, &grad_gs)?;
    grads.accumulate(NetId::G1, &p, 1.0);
    let (p, _) = bundle.h1.backward(&h1_trace, &grad_ht)?;
    grads.accumulate(NetId::H1, &p, 1.0);

    let value = w.theta * (recon_source + recon_target) + w.beta * classifier + w.alpha * adversarial;
    let value = finite(value, "objective I")?;
    if !grads.is_finite() {
        return Err(Error::NonFinite("objective I gradients".into()));
    }
    Ok(ObjectiveEval {
        value,
        grads,
        terms: Terms {
            recon_source,
            recon_target,
            classifier,
            adversarial,
        },
        skipped: Vec::new(),
    })
}

/// Discriminator objective on the joint embeddings; gradient for D only.
pub fn objective_j(bundle: &ModelBundle, source_x: &Matrix, target_x: &Matrix, eps: f64) -> Result<ObjectiveEval> {
    nonempty(source_x, "source")?;
    nonempty(target_x, "target")?;
    let gs = bundle.g1.apply(source_x)?;
    let ht = bundle.h1.apply(target_x)?;
    let mut grads = BundleGrads::new();
    let (value, _, _) = discriminate(&bundle.d, NetId::D, &gs, &ht, 1.0, GeneratorLoss::Saturating, eps, &mut grads)?;
    let value = finite(value, "objective J")?;
    Ok(ObjectiveEval {
        value,
        grads,
        terms: Terms {
            adversarial: value,
            ..Terms::default()
        },
        skipped: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlignmentMode {
    None,
    Proper,
    Improper,
}

impl AlignmentMode {
    pub fn name(self) -> &'static str {
        match self {
            AlignmentMode::None => "none",
            AlignmentMode::Proper => "proper",
            AlignmentMode::Improper => "improper",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "none" => Ok(AlignmentMode::None),
            "proper" => Ok(AlignmentMode::Proper),
            "improper" => Ok(AlignmentMode::Improper),
            other => Err(Error::InvalidConfig(format!("unknown alignment mode `{other}`"))),
        }
    }

    /// Target class paired with source class `k` out of `classes`.
    pub fn matched(self, k: usize, classes: usize) -> usize {
        match self {
            AlignmentMode::Improper => (k + 1) % classes,
            _ => k,
        }
    }
}

/// One GAN pair per class: head `k` on D's trunk separates `G1(source class k)`
/// from `H1(target class matched(k))`. Gradients for the heads and D's trunk
/// are those of the returned value. G1 and H1 gradients follow
/// `generator_loss`: with the non-saturating form they are gradients of the
/// label-inverted value.
pub fn alignment_objective(
    bundle: &ModelBundle,
    source_by_class: &[Matrix],
    target_by_class: &[Matrix],
    mode: AlignmentMode,
    weight: f64,
    generator_loss: GeneratorLoss,
    eps: f64,
) -> Result<ObjectiveEval> {
    if mode == AlignmentMode::None {
        return Err(Error::InvalidConfig("alignment objective with mode none".into()));
    }
    let classes = source_by_class.len();
    if target_by_class.len() != classes || bundle.heads.len() < classes {
        return Err(Error::InvalidConfig(format!(
            "alignment needs {classes} target class batches and heads, got {} and {}",
            target_by_class.len(),
            bundle.heads.len()
        )));
    }
    let (trunk, _) = bundle.d.split_last()?;
    let mut grads = BundleGrads::new();
    let mut trunk_grads: Option<MlpParams> = None;
    let mut value = 0.0;
    let mut skipped = Vec::new();
    for k in 0..classes {
        let xs = &source_by_class[k];
        let xt = &target_by_class[mode.matched(k, classes)];
        if xs.rows() == 0 || xt.rows() == 0 {
            skipped.push(k);
            continue;
        }
        let (gs, g1_trace) = bundle.g1.forward(xs)?;
        let (ht, h1_trace) = bundle.h1.forward(xt)?;
        let (zs, zs_trace) = trunk.forward(&gs)?;
        let (zt, zt_trace) = trunk.forward(&ht)?;
        let (v, gzs, gzt) = discriminate(
            &bundle.heads[k],
            NetId::Head(k),
            &zs,
            &zt,
            weight,
            GeneratorLoss::Saturating,
            eps,
            &mut grads,
        )?;
        value += weight * finite(v, "alignment objective")?;
        let (ps, mut gxs) = trunk.backward(&zs_trace, &gzs)?;
        let (pt, mut gxt) = trunk.backward(&zt_trace, &gzt)?;
        if generator_loss == GeneratorLoss::NonSaturating {
            let head = &bundle.heads[k];
            let (qs, qs_trace) = head.forward(&zs)?;
            let (qt, qt_trace) = head.forward(&zt)?;
            let (_, g_qt, g_qs) = gan_value(&qt, &qs, eps);
            let (_, gz) = head.backward(&qs_trace, &scaled(&g_qs, -weight))?;
            gxs = trunk.backward(&zs_trace, &gz)?.1;
            let (_, gz) = head.backward(&qt_trace, &scaled(&g_qt, -weight))?;
            gxt = trunk.backward(&zt_trace, &gz)?.1;
        }
        let acc = trunk_grads.get_or_insert_with(|| trunk.params.zeros_like());
        acc.add_scaled(&ps, 1.0);
        acc.add_scaled(&pt, 1.0);
        let (p, _) = bundle.g1.backward(&g1_trace, &gxs)?;
        grads.accumulate(NetId::G1, &p, 1.0);
        let (p, _) = bundle.h1.backward(&h1_trace, &gxt)?;
        grads.accumulate(NetId::H1, &p, 1.0);
    }
    if let Some(t) = trunk_grads {
        let mut d = bundle.d.params.zeros_like();
        for (dst, src) in d.layers.iter_mut().zip(t.layers) {
            *dst = src;
        }
        grads.accumulate(NetId::D, &d, 1.0);
    }
    if !grads.is_finite() {
        return Err(Error::NonFinite("alignment objective gradients".into()));
    }
    Ok(ObjectiveEval {
        value,
        grads,
        terms: Terms {
            adversarial: value,
            ..Terms::default()
        },
        skipped,
    })
}

/// Cycle objective with `H = H1`, `G = G2`: L1 cycle cost on the target plus
/// a source-space GAN term on `H(target)`. The symmetrized form adds the
/// source cycle and a target-space GAN term on `G(source)` through `D_aux`.
/// Gradients for H and G follow `generator_loss` as in [`objective_i`].
pub fn cyclegan_objective(
    bundle: &ModelBundle,
    source_x: &Matrix,
    target_x: &Matrix,
    alpha: f64,
    symmetric: bool,
    generator_loss: GeneratorLoss,
    eps: f64,
) -> Result<ObjectiveEval> {
    bundle.check_cycle_layout()?;
    nonempty(source_x, "source")?;
    nonempty(target_x, "target")?;
    let l1 = CostSpec::lp(1.0, 1.0);
    let (h, g) = (&bundle.h1, &bundle.g2);
    let mut grads = BundleGrads::new();

    let (ht, h_trace) = h.forward(target_x)?;
    let (cyc, g_trace) = g.forward(&ht)?;
    let (recon_target, g_cyc) = reconstruction(target_x, &cyc, &l1)?;
    let recon_target = finite(recon_target, "cycle objective: target cycle")?;
    let (p, mut grad_ht) = g.backward(&g_trace, &g_cyc)?;
    grads.accumulate(NetId::G2, &p, 1.0);
    let (adv, _, gx) = discriminate(&bundle.d, NetId::D, source_x, &ht, alpha, generator_loss, eps, &mut grads)?;
    let adversarial = finite(adv, "cycle objective: source divergence")?;
    grad_ht.add_scaled(&gx, 1.0);
    let (p, _) = h.backward(&h_trace, &grad_ht)?;
    grads.accumulate(NetId::H1, &p, 1.0);
    let mut value = recon_target + alpha * adversarial;
    let mut terms = Terms {
        recon_target,
        adversarial,
        ..Terms::default()
    };

    if symmetric {
        let d_aux = bundle
            .d_aux
            .as_ref()
            .ok_or_else(|| Error::InvalidConfig("symmetrized cycle objective needs D_aux".into()))?;
        let (gs, gs_trace) = g.forward(source_x)?;
        let (cyc, hc_trace) = h.forward(&gs)?;
        let (recon_source, g_cyc) = reconstruction(source_x, &cyc, &l1)?;
        let recon_source = finite(recon_source, "cycle objective: source cycle")?;
        let (p, mut grad_gs) = h.backward(&hc_trace, &g_cyc)?;
        grads.accumulate(NetId::H1, &p, 1.0);
        let (adv, _, gx) = discriminate(d_aux, NetId::DAux, target_x, &gs, alpha, generator_loss, eps, &mut grads)?;
        let adv = finite(adv, "cycle objective: target divergence")?;
        grad_gs.add_scaled(&gx, 1.0);
        let (p, _) = g.backward(&gs_trace, &grad_gs)?;
        grads.accumulate(NetId::G2, &p, 1.0);
        value += recon_source + alpha * adv;
        terms.recon_source = recon_source;
        terms.adversarial += adv;
    }
    Ok(ObjectiveEval {
        value: finite(value, "cycle objective")?,
        grads,
        terms,
        skipped: Vec::new(),
    })
}
