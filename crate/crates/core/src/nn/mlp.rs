use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::matrix::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Activation {
    Relu,
    Sigmoid,
    Identity,
}

impl Activation {
    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim() {
            "relu" => Ok(Activation::Relu),
            "sigmoid" => Ok(Activation::Sigmoid),
            "identity" => Ok(Activation::Identity),
            other => Err(Error::InvalidSpec(format!("unknown activation `{other}`"))),
        }
    }

    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => post * (1.0 - post),
            Activation::Identity => 1.0,
        }
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Layer widths (input first) and one activation per non-input layer.
/// A spec with a single dimension and no layers is the identity map.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct MlpSpec {
    layer_dims: Vec<usize>,
    activations: Vec<Activation>,
}

impl MlpSpec {
    pub fn new(layer_dims: Vec<usize>, activations: Vec<Activation>) -> Result<Self> {
        if layer_dims.is_empty() {
            return Err(Error::InvalidSpec("no layer dimensions".into()));
        }
        if activations.len() + 1 != layer_dims.len() {
            return Err(Error::InvalidSpec(format!(
                "{} activations for {} layer dims",
                activations.len(),
                layer_dims.len()
            )));
        }
        if layer_dims.contains(&0) {
            return Err(Error::InvalidSpec("layer dims must be >= 1".into()));
        }
        Ok(MlpSpec {
            layer_dims,
            activations,
        })
    }

    pub fn identity(dim: usize) -> Self {
        MlpSpec {
            layer_dims: vec![dim.max(1)],
            activations: Vec::new(),
        }
    }

    pub fn layer_dims(&self) -> &[usize] {
        &self.layer_dims
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn input_dim(&self) -> usize {
        self.layer_dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_dims.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.activations.len()
    }

    pub fn is_identity(&self) -> bool {
        self.activations.is_empty()
    }

    /// Header text used by parameter checkpoints, e.g. `dims=10,5,5;act=relu,relu`.
    pub fn header(&self) -> String {
        let dims: Vec<String> = self.layer_dims.iter().map(|d| d.to_string()).collect();
        let acts: Vec<&str> = self.activations.iter().map(|a| a.name()).collect();
        format!("dims={};act={}", dims.join(","), acts.join(","))
    }

    pub fn parse_header(line: &str) -> Result<Self> {
        let bad = || Error::Format(format!("bad spec header `{line}`"));
        let (dims, acts) = line.trim().split_once(';').ok_or_else(bad)?;
        let dims = dims.strip_prefix("dims=").ok_or_else(bad)?;
        let acts = acts.strip_prefix("act=").ok_or_else(bad)?;
        let layer_dims = dims
            .split(',')
            .map(|d| d.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<Vec<_>>>()?;
        let activations = if acts.is_empty() {
            Vec::new()
        } else {
            acts.split(',').map(Activation::parse).collect::<Result<Vec<_>>>()?
        };
        MlpSpec::new(layer_dims, activations)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    /// `out_dim x in_dim`.
    pub weight: Matrix,
    pub bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MlpParams {
    pub layers: Vec<Layer>,
}

impl MlpParams {
    pub fn zeros(spec: &MlpSpec) -> Self {
        let layers = spec
            .layer_dims
            .windows(2)
            .map(|w| Layer {
                weight: Matrix::zeros(w[1], w[0]),
                bias: vec![0.0; w[1]],
            })
            .collect();
        MlpParams { layers }
    }

    pub fn zeros_like(&self) -> Self {
        MlpParams {
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    weight: Matrix::zeros(l.weight.rows(), l.weight.cols()),
                    bias: vec![0.0; l.bias.len()],
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.data().len() + l.bias.len())
            .sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn locate(&self, mut idx: usize) -> (usize, bool, usize) {
        for (li, l) in self.layers.iter().enumerate() {
            let nw = l.weight.data().len();
            if idx < nw {
                return (li, true, idx);
            }
            idx -= nw;
            if idx < l.bias.len() {
                return (li, false, idx);
            }
            idx -= l.bias.len();
        }
        panic!("parameter index out of range");
    }

    /// Flat view: per layer, weights row-major then biases.
    pub fn get(&self, idx: usize) -> f64 {
        let (l, w, i) = self.locate(idx);
        if w {
            self.layers[l].weight.data()[i]
        } else {
            self.layers[l].bias[i]
        }
    }

    pub fn set(&mut self, idx: usize, value: f64) {
        let (l, w, i) = self.locate(idx);
        if w {
            self.layers[l].weight.data_mut()[i] = value;
        } else {
            self.layers[l].bias[i] = value;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.layers
            .iter()
            .flat_map(|l| l.weight.data().iter().chain(l.bias.iter()).copied())
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = &mut f64> + '_ {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weight.data_mut().iter_mut().chain(l.bias.iter_mut()))
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(f64::is_finite)
    }

    pub fn add_scaled(&mut self, other: &MlpParams, scale: f64) {
        for (a, b) in self.iter_mut().zip(other.iter()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.iter_mut().for_each(|v| *v *= s);
    }

    pub fn matches(&self, spec: &MlpSpec) -> bool {
        self.layers.len() == spec.num_layers()
            && self.layers.iter().enumerate().all(|(i, l)| {
                l.weight.rows() == spec.layer_dims[i + 1]
                    && l.weight.cols() == spec.layer_dims[i]
                    && l.bias.len() == spec.layer_dims[i + 1]
            })
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(spec: &MlpSpec, seed: u64) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = MlpParams::zeros(spec);
    for layer in &mut params.layers {
        let fan_out = layer.weight.rows() as f64;
        let fan_in = layer.weight.cols() as f64;
        let limit = (6.0 / (fan_in + fan_out)).sqrt();
        for w in layer.weight.data_mut() {
            *w = rng.random_range(-limit..=limit);
        }
    }
    params
}

/// Pre- and post-activation values of every layer for one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub input: Matrix,
    pub pre: Vec<Matrix>,
    pub post: Vec<Matrix>,
}

impl ForwardTrace {
    pub fn output(&self) -> &Matrix {
        self.post.last().unwrap_or(&self.input)
    }
}

fn check_params(spec: &MlpSpec, params: &MlpParams) -> Result<()> {
    if !params.matches(spec) {
        return Err(Error::InvalidSpec(format!(
            "parameters do not match spec {}",
            spec.header()
        )));
    }
    Ok(())
}

pub fn forward(spec: &MlpSpec, params: &MlpParams, x: &Matrix) -> Result<(Matrix, ForwardTrace)> {
    check_params(spec, params)?;
    if x.cols() != spec.input_dim() {
        return Err(Error::dim("layer 0 input", spec.input_dim(), x.cols()));
    }
    let n = x.rows();
    let mut pre_all = Vec::with_capacity(spec.num_layers());
    let mut post_all: Vec<Matrix> = Vec::with_capacity(spec.num_layers());
    for (li, (layer, act)) in params.layers.iter().zip(&spec.activations).enumerate() {
        let input = if li == 0 { x } else { &post_all[li - 1] };
        let (out_dim, in_dim) = (layer.weight.rows(), layer.weight.cols());
        let mut pre = Matrix::zeros(n, out_dim);
        for b in 0..n {
            let xin = input.row(b);
            let row = pre.row_mut(b);
            for (o, r) in row.iter_mut().enumerate() {
                let w = &layer.weight.data()[o * in_dim..(o + 1) * in_dim];
                let mut acc = layer.bias[o];
                for (wi, xi) in w.iter().zip(xin) {
                    acc += wi * xi;
                }
                *r = acc;
            }
        }
        let post = pre.map(|z| act.apply(z));
        pre_all.push(pre);
        post_all.push(post);
    }
    let trace = ForwardTrace {
        input: x.clone(),
        pre: pre_all,
        post: post_all,
    };
    Ok((trace.output().clone(), trace))
}

/// Reverse-mode gradients of `<grad_out, outputs>` with respect to parameters
/// and inputs. Batch entries are summed; callers fold in any mean weighting.
pub fn backward(
    spec: &MlpSpec,
    params: &MlpParams,
    trace: &ForwardTrace,
    grad_out: &Matrix,
) -> Result<(MlpParams, Matrix)> {
    check_params(spec, params)?;
    if trace.pre.len() != spec.num_layers() || trace.input.cols() != spec.input_dim() {
        return Err(Error::InvalidSpec("trace does not match spec".into()));
    }
    let out = trace.output();
    if grad_out.rows() != out.rows() || grad_out.cols() != out.cols() {
        return Err(Error::dim(
            "backward grad_out",
            out.rows() * out.cols(),
            grad_out.rows() * grad_out.cols(),
        ));
    }
    let n = grad_out.rows();
    let mut grads = params.zeros_like();
    let mut upstream = grad_out.clone();
    for li in (0..spec.num_layers()).rev() {
        let layer = &params.layers[li];
        let act = spec.activations[li];
        let (out_dim, in_dim) = (layer.weight.rows(), layer.weight.cols());
        let pre = &trace.pre[li];
        let post = &trace.post[li];
        let input = if li == 0 { &trace.input } else { &trace.post[li - 1] };
        let mut delta = Matrix::zeros(n, out_dim);
        for b in 0..n {
            for o in 0..out_dim {
                delta[(b, o)] = upstream[(b, o)] * act.derivative(pre[(b, o)], post[(b, o)]);
            }
        }
        let g = &mut grads.layers[li];
        for b in 0..n {
            let xin = input.row(b);
            for o in 0..out_dim {
                let d = delta[(b, o)];
                g.bias[o] += d;
                let gw = &mut g.weight.data_mut()[o * in_dim..(o + 1) * in_dim];
                for (gwi, xi) in gw.iter_mut().zip(xin) {
                    *gwi += d * xi;
                }
            }
        }
        let mut down = Matrix::zeros(n, in_dim);
        for b in 0..n {
            let row = down.row_mut(b);
            for o in 0..out_dim {
                let d = delta[(b, o)];
                let w = &layer.weight.data()[o * in_dim..(o + 1) * in_dim];
                for (r, wi) in row.iter_mut().zip(w) {
                    *r += d * wi;
                }
            }
        }
        upstream = down;
    }
    Ok((grads, upstream))
}

/// A spec together with its parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    pub spec: MlpSpec,
    pub params: MlpParams,
}

impl Network {
    pub fn new(spec: MlpSpec, seed: u64) -> Self {
        let params = init_params(&spec, seed);
        Network { spec, params }
    }

    pub fn from_parts(spec: MlpSpec, params: MlpParams) -> Result<Self> {
        check_params(&spec, &params)?;
        Ok(Network { spec, params })
    }

    pub fn identity(dim: usize) -> Self {
        let spec = MlpSpec::identity(dim);
        let params = MlpParams::zeros(&spec);
        Network { spec, params }
    }

    pub fn is_identity(&self) -> bool {
        self.spec.is_identity()
    }

    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, ForwardTrace)> {
        forward(&self.spec, &self.params, x)
    }

    pub fn apply(&self, x: &Matrix) -> Result<Matrix> {
        Ok(self.forward(x)?.0)
    }

    pub fn backward(&self, trace: &ForwardTrace, grad_out: &Matrix) -> Result<(MlpParams, Matrix)> {
        backward(&self.spec, &self.params, trace, grad_out)
    }

    /// Splits off the last layer: `(trunk, head)` with `head(trunk(x)) == self(x)`.
    pub fn split_last(&self) -> Result<(Network, Network)> {
        let l = self.spec.num_layers();
        if l == 0 {
            return Err(Error::InvalidSpec("cannot split an identity network".into()));
        }
        let dims = &self.spec.layer_dims;
        let trunk = Network {
            spec: MlpSpec::new(dims[..l].to_vec(), self.spec.activations[..l - 1].to_vec())?,
            params: MlpParams {
                layers: self.params.layers[..l - 1].to_vec(),
            },
        };
        let head = Network {
            spec: MlpSpec::new(dims[l - 1..].to_vec(), vec![self.spec.activations[l - 1]])?,
            params: MlpParams {
                layers: vec![self.params.layers[l - 1].clone()],
            },
        };
        Ok((trunk, head))
    }
}

/// `|a - n| / max(|a|, |n|)`, or 0 when both magnitudes are below 1e-12.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let scale = analytic.abs().max(numeric.abs());
    if scale < 1e-12 {
        0.0
    } else {
        (analytic - numeric).abs() / scale
    }
}

/// Central-difference check of an analytic gradient over every parameter.
pub fn grad_check_params<F>(objective: F, params: &MlpParams, eps: f64) -> Result<f64>
where
    F: Fn(&MlpParams) -> Result<(f64, MlpParams)>,
{
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig("grad_check eps must be positive".into()));
    }
    let (_, analytic) = objective(params)?;
    let mut probe = params.clone();
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let orig = params.get(i);
        probe.set(i, orig + eps);
        let up = objective(&probe)?.0;
        probe.set(i, orig - eps);
        let down = objective(&probe)?.0;
        probe.set(i, orig);
        let numeric = (up - down) / (2.0 * eps);
        worst = worst.max(relative_error(analytic.get(i), numeric));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(dims: &[usize], acts: &[Activation]) -> MlpSpec {
        MlpSpec::new(dims.to_vec(), acts.to_vec()).unwrap()
    }

    #[test]
    fn spec_validation() {
        assert!(MlpSpec::new(vec![2, 3], vec![]).is_err());
        assert!(MlpSpec::new(vec![2, 0], vec![Activation::Relu]).is_err());
        assert!(MlpSpec::new(vec![], vec![]).is_err());
        let s = spec(&[10, 5, 5], &[Activation::Relu, Activation::Relu]);
        assert_eq!(s.header(), "dims=10,5,5;act=relu,relu");
        assert_eq!(MlpSpec::parse_header(&s.header()).unwrap(), s);
        assert_eq!(MlpSpec::parse_header("dims=3;act=").unwrap(), MlpSpec::identity(3));
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let s = spec(&[10, 5, 5], &[Activation::Relu, Activation::Relu]);
        let a = init_params(&s, 7);
        let b = init_params(&s, 7);
        assert_eq!(a, b);
        assert!(a.layers.iter().all(|l| l.bias.iter().all(|&v| v == 0.0)));
        assert_ne!(a, init_params(&s, 8));
    }

    #[test]
    fn init_respects_glorot_limit() {
        let s = spec(&[2, 3], &[Activation::Identity]);
        let limit = (6.0f64 / 5.0).sqrt();
        let p = init_params(&s, 0);
        assert!(p.layers[0].weight.data().iter().all(|w| w.abs() <= limit));
    }

    #[test]
    fn zero_params_sigmoid_gives_half() {
        let s = spec(&[4, 3, 1], &[Activation::Relu, Activation::Sigmoid]);
        let p = MlpParams::zeros(&s);
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0, 0.5], vec![0.0; 4]]);
        let (y, _) = forward(&s, &p, &x).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn identity_layer_passes_input_through() {
        let s = spec(&[3, 3], &[Activation::Identity]);
        let mut p = MlpParams::zeros(&s);
        p.layers[0].weight = Matrix::identity(3);
        let x = Matrix::from_rows(&[vec![1.5, -2.0, 7.0]]);
        assert_eq!(forward(&s, &p, &x).unwrap().0, x);
    }

    #[test]
    fn hand_evaluated_relu_layer() {
        let s = spec(&[2, 2], &[Activation::Relu]);
        let mut p = MlpParams::zeros(&s);
        p.layers[0].weight = Matrix::from_rows(&[vec![1.0, -1.0], vec![0.0, 1.0]]);
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]);
        let (y, _) = forward(&s, &p, &x).unwrap();
        assert_eq!(y.row(0), &[0.0, 2.0]);
    }

    #[test]
    fn forward_rejects_wrong_width() {
        let s = spec(&[3, 2], &[Activation::Relu]);
        let p = MlpParams::zeros(&s);
        let err = forward(&s, &p, &Matrix::zeros(1, 4)).unwrap_err();
        assert!(err.to_string().contains("layer 0"));
    }

    #[test]
    fn identity_spec_forward_and_backward() {
        let net = Network::identity(3);
        let x = Matrix::from_rows(&[vec![1.0, 2.0, 3.0]]);
        let (y, tr) = net.forward(&x).unwrap();
        assert_eq!(y, x);
        let (g, gi) = net.backward(&tr, &x).unwrap();
        assert!(g.is_empty());
        assert_eq!(gi, x);
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let s = spec(&[3, 4, 2], &[Activation::Sigmoid, Activation::Identity]);
        let p = init_params(&s, 3);
        let x = Matrix::from_rows(&[vec![0.1, 0.2, 0.3], vec![1.0, -1.0, 0.0]]);
        let (_, tr) = forward(&s, &p, &x).unwrap();
        let (g, gi) = backward(&s, &p, &tr, &Matrix::zeros(2, 2)).unwrap();
        assert!(g.iter().all(|v| v == 0.0));
        assert!(gi.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_layer_weight_gradient_is_outer_product_sum() {
        let s = spec(&[2, 2], &[Activation::Identity]);
        let p = init_params(&s, 1);
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]);
        let g_out = Matrix::from_rows(&[vec![0.5, -1.0], vec![2.0, 1.0]]);
        let (_, tr) = forward(&s, &p, &x).unwrap();
        let (g, _) = backward(&s, &p, &tr, &g_out).unwrap();
        for o in 0..2 {
            for i in 0..2 {
                let expect: f64 = (0..2).map(|b| g_out[(b, o)] * x[(b, i)]).sum();
                assert!((g.layers[0].weight[(o, i)] - expect).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let s = spec(
            &[3, 4, 4, 2],
            &[Activation::Sigmoid, Activation::Identity, Activation::Sigmoid],
        );
        let x = Matrix::from_rows(&[vec![0.3, -0.7, 1.1], vec![-1.2, 0.4, 0.9], vec![0.05, 0.6, -0.3]]);
        let g_out = Matrix::from_rows(&[vec![0.7, -0.2], vec![1.3, 0.4], vec![-0.5, 0.9]]);
        let p = init_params(&s, 11);
        let objective = |q: &MlpParams| -> Result<(f64, MlpParams)> {
            let (y, tr) = forward(&s, q, &x)?;
            let v: f64 = y.data().iter().zip(g_out.data()).map(|(a, b)| a * b).sum();
            let (g, _) = backward(&s, q, &tr, &g_out)?;
            Ok((v, g))
        };
        let err = grad_check_params(objective, &p, 1e-5).unwrap();
        assert!(err <= 1e-6, "relative error {err}");
    }

    #[test]
    fn input_gradient_matches_finite_differences() {
        let s = spec(&[2, 3, 1], &[Activation::Sigmoid, Activation::Sigmoid]);
        let p = init_params(&s, 5);
        let x = Matrix::from_rows(&[vec![0.4, -0.9]]);
        let (_, tr) = forward(&s, &p, &x).unwrap();
        let (_, gi) = backward(&s, &p, &tr, &Matrix::from_rows(&[vec![1.0]])).unwrap();
        for i in 0..2 {
            let mut up = x.clone();
            up[(0, i)] += 1e-5;
            let mut dn = x.clone();
            dn[(0, i)] -= 1e-5;
            let fd = (forward(&s, &p, &up).unwrap().0[(0, 0)] - forward(&s, &p, &dn).unwrap().0[(0, 0)]) / 2e-5;
            assert!(relative_error(gi[(0, i)], fd) < 1e-6);
        }
    }

    #[test]
    fn trace_replay_and_backward_are_pure() {
        let s = spec(&[3, 5, 2], &[Activation::Relu, Activation::Sigmoid]);
        let p = init_params(&s, 2);
        let x = Matrix::from_rows(&[vec![0.5, -0.1, 2.0], vec![1.0, 1.0, -1.0]]);
        let (y, tr) = forward(&s, &p, &x).unwrap();
        let (y2, tr2) = forward(&s, &p, &tr.input).unwrap();
        assert_eq!(y, y2);
        assert_eq!(tr, tr2);
        let before = tr.clone();
        let g = Matrix::from_rows(&[vec![1.0, 2.0], vec![-1.0, 0.5]]);
        let a = backward(&s, &p, &tr, &g).unwrap();
        let b = backward(&s, &p, &tr, &g).unwrap();
        assert_eq!(a, b);
        assert_eq!(tr, before);
    }

    #[test]
    fn split_last_recomposes() {
        let s = spec(&[5, 5, 1], &[Activation::Relu, Activation::Sigmoid]);
        let net = Network::new(s, 4);
        let (trunk, head) = net.split_last().unwrap();
        let x = Matrix::from_rows(&[vec![0.1, 0.2, -0.3, 0.4, 1.0]]);
        let direct = net.apply(&x).unwrap();
        let composed = head.apply(&trunk.apply(&x).unwrap()).unwrap();
        assert_eq!(direct, composed);
    }

    #[test]
    fn grad_check_quadratic() {
        let s = spec(&[3, 2], &[Activation::Relu]);
        let p = init_params(&s, 9);
        let err = grad_check_params(
            |q| Ok((0.5 * q.iter().map(|v| v * v).sum::<f64>(), q.clone())),
            &p,
            1e-5,
        )
        .unwrap();
        assert!(err <= 1e-8, "{err}");
        let err = grad_check_params(|q| Ok((3.0, q.zeros_like())), &p, 1e-5).unwrap();
        assert_eq!(err, 0.0);
    }
}
