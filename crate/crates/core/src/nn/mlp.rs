//! Multilayer perceptron with cached activations for backpropagation.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linear::Linear;
use super::noisy::{NoiseAssignment, NoiseKind, NoisyLinear};
use super::tensor::{check_finite_array, ParamTensor, Real};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
    LeakyRelu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    #[default]
    None,
    Tanh,
}

const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy)]
enum Act {
    Identity,
    Tanh,
    Relu,
    LeakyRelu,
}

impl Act {
    fn apply<T: Real>(self, a: &mut Array2<T>) {
        match self {
            Act::Identity => {}
            Act::Tanh => a.mapv_inplace(|v| v.tanh()),
            Act::Relu => a.mapv_inplace(|v| if v > T::zero() { v } else { T::zero() }),
            Act::LeakyRelu => {
                let s = T::of(LEAKY_SLOPE);
                a.mapv_inplace(|v| if v > T::zero() { v } else { v * s })
            }
        }
    }

    /// Multiplies `grad` by the activation derivative, expressed through the output.
    fn backprop<T: Real>(self, out: &Array2<T>, grad: &mut Array2<T>) {
        match self {
            Act::Identity => {}
            Act::Tanh => grad.zip_mut_with(out, |g, &y| *g *= T::one() - y * y),
            Act::Relu => grad.zip_mut_with(out, |g, &y| {
                if y <= T::zero() {
                    *g = T::zero()
                }
            }),
            Act::LeakyRelu => {
                let s = T::of(LEAKY_SLOPE);
                grad.zip_mut_with(out, |g, &y| {
                    if y <= T::zero() {
                        *g *= s
                    }
                })
            }
        }
    }
}

impl From<Activation> for Act {
    fn from(a: Activation) -> Self {
        match a {
            Activation::Tanh => Act::Tanh,
            Activation::Relu => Act::Relu,
            Activation::LeakyRelu => Act::LeakyRelu,
        }
    }
}

/// Architecture of an MLP. `layer_widths` lists every layer's output width,
/// so `[64, 64, 4]` is two hidden layers of 64 and a 4-wide output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub layer_widths: Vec<usize>,
    pub activation: Activation,
    #[serde(default)]
    pub output_activation: OutputActivation,
}

impl MlpSpec {
    pub fn new(input_dim: usize, layer_widths: &[usize], activation: Activation) -> Self {
        Self {
            input_dim,
            layer_widths: layer_widths.to_vec(),
            activation,
            output_activation: OutputActivation::None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_widths.is_empty() {
            return Err(Error::Config("an MLP needs at least one layer".into()));
        }
        if self.input_dim == 0 || self.layer_widths.contains(&0) {
            return Err(Error::Config(format!("MLP widths must be positive: {self:?}")));
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_widths.last().expect("validated")
    }
}

/// Noisy replacement for the last `layers` layers of a network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoisySpec {
    pub layers: usize,
    pub sigma_init: f64,
    pub kind: NoiseKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer<T> {
    Dense(Linear<T>),
    Noisy(NoisyLinear<T>),
}

impl<T: Real> Layer<T> {
    pub fn input_dim(&self) -> usize {
        match self {
            Layer::Dense(l) => l.input_dim(),
            Layer::Noisy(l) => l.input_dim(),
        }
    }

    pub fn output_dim(&self) -> usize {
        match self {
            Layer::Dense(l) => l.output_dim(),
            Layer::Noisy(l) => l.output_dim(),
        }
    }

    pub fn params(&self) -> Vec<(&'static str, &ParamTensor<T>)> {
        match self {
            Layer::Dense(l) => vec![("weight", &l.weight), ("bias", &l.bias)],
            Layer::Noisy(l) => vec![
                ("mu_w", &l.mu_w),
                ("sigma_w", &l.sigma_w),
                ("mu_b", &l.mu_b),
                ("sigma_b", &l.sigma_b),
            ],
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor<T>> {
        match self {
            Layer::Dense(l) => vec![&mut l.weight, &mut l.bias],
            Layer::Noisy(l) => vec![&mut l.mu_w, &mut l.sigma_w, &mut l.mu_b, &mut l.sigma_b],
        }
    }
}

#[derive(Debug, Clone)]
struct Cache<T> {
    inputs: Vec<Array2<T>>,
    outputs: Vec<Array2<T>>,
}

#[derive(Debug, Clone)]
pub struct Mlp<T> {
    spec: MlpSpec,
    pub layers: Vec<Layer<T>>,
    noise: Vec<Option<NoiseAssignment<T>>>,
    cache: Option<Cache<T>>,
}

impl<T: Real> Mlp<T> {
    /// Orthogonal init: `hidden_gain` for hidden layers, `output_gain` for the last, zero biases.
    pub fn new<R: Rng + ?Sized>(
        spec: MlpSpec,
        hidden_gain: f64,
        output_gain: f64,
        noisy: Option<NoisySpec>,
        rng: &mut R,
    ) -> Result<Self> {
        spec.validate()?;
        let n = spec.layer_widths.len();
        let noisy_from = noisy.map(|s| n.saturating_sub(s.layers)).unwrap_or(n);
        let mut layers = Vec::with_capacity(n);
        let mut input = spec.input_dim;
        for (i, &width) in spec.layer_widths.iter().enumerate() {
            let gain = if i + 1 == n { output_gain } else { hidden_gain };
            let layer = match noisy {
                Some(ns) if i >= noisy_from => {
                    Layer::Noisy(NoisyLinear::new(input, width, gain, ns.sigma_init, ns.kind, rng))
                }
                _ => Layer::Dense(Linear::orthogonal(input, width, gain, rng)),
            };
            layers.push(layer);
            input = width;
        }
        Ok(Self::from_layers(spec, layers))
    }

    /// Dense network with every layer drawn by [`Linear::uniform_fan_in`].
    pub fn uniform_fan_in<R: Rng + ?Sized>(spec: MlpSpec, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let mut input = spec.input_dim;
        let mut layers = Vec::with_capacity(spec.layer_widths.len());
        for &w in &spec.layer_widths {
            layers.push(Layer::Dense(Linear::uniform_fan_in(input, w, rng)));
            input = w;
        }
        Ok(Self::from_layers(spec, layers))
    }

    /// All-zero dense network.
    pub fn zeros(spec: MlpSpec) -> Result<Self> {
        spec.validate()?;
        let mut input = spec.input_dim;
        let layers = spec
            .layer_widths
            .iter()
            .map(|&w| {
                let l = Layer::Dense(Linear::zeros(input, w));
                input = w;
                l
            })
            .collect();
        Ok(Self::from_layers(spec, layers))
    }

    fn from_layers(spec: MlpSpec, layers: Vec<Layer<T>>) -> Self {
        let noise = vec![None; layers.len()];
        Self {
            spec,
            layers,
            noise,
            cache: None,
        }
    }

    pub fn spec(&self) -> &MlpSpec {
        &self.spec
    }

    pub fn input_dim(&self) -> usize {
        self.spec.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.spec.output_dim()
    }

    pub fn is_noisy(&self) -> bool {
        self.layers.iter().any(|l| matches!(l, Layer::Noisy(_)))
    }

    fn act(&self, i: usize) -> Act {
        if i + 1 == self.layers.len() {
            match self.spec.output_activation {
                OutputActivation::None => Act::Identity,
                OutputActivation::Tanh => Act::Tanh,
            }
        } else {
            self.spec.activation.into()
        }
    }

    /// Draw fresh noise for every noisy layer, either one draw for the whole
    /// batch (`rows = None`) or one per row.
    pub fn resample_noise<R: Rng + ?Sized>(&mut self, rows: Option<usize>, rng: &mut R) {
        for (layer, slot) in self.layers.iter().zip(self.noise.iter_mut()) {
            if let Layer::Noisy(l) = layer {
                *slot = Some(match rows {
                    None => NoiseAssignment::Shared(l.sample_noise(rng)),
                    Some(n) => NoiseAssignment::PerRow((0..n).map(|_| l.sample_noise(rng)).collect()),
                });
            }
        }
    }

    /// Noisy layers fall back to their mean weights.
    pub fn clear_noise(&mut self) {
        self.noise.iter_mut().for_each(|n| *n = None);
    }

    pub fn set_noise(&mut self, layer: usize, noise: NoiseAssignment<T>) -> Result<()> {
        match self.layers.get(layer) {
            Some(Layer::Noisy(_)) => {
                self.noise[layer] = Some(noise);
                Ok(())
            }
            _ => Err(Error::Usage(format!("layer {layer} is not a noisy layer"))),
        }
    }

    fn layer_forward(&self, i: usize, x: &Array2<T>) -> Result<Array2<T>> {
        match &self.layers[i] {
            Layer::Dense(l) => l.forward(x),
            Layer::Noisy(l) => match &self.noise[i] {
                Some(n) => l.forward(x, n),
                None => l.forward(x, &NoiseAssignment::Shared(l.zero_noise())),
            },
        }
    }

    fn check_input(&self, x: &Array2<T>) -> Result<()> {
        if x.ncols() != self.spec.input_dim {
            return Err(Error::Config(format!(
                "network expects input width {}, got {}",
                self.spec.input_dim,
                x.ncols()
            )));
        }
        Ok(())
    }

    /// Forward pass without caching.
    pub fn predict(&self, x: &Array2<T>) -> Result<Array2<T>> {
        self.check_input(x)?;
        let mut h = x.to_owned();
        for i in 0..self.layers.len() {
            let mut y = self.layer_forward(i, &h)?;
            self.act(i).apply(&mut y);
            h = y;
        }
        check_finite_array(&h, "network output")?;
        Ok(h)
    }

    /// Forward pass that caches activations for [`Mlp::backward`].
    pub fn forward(&mut self, x: &Array2<T>) -> Result<Array2<T>> {
        self.check_input(x)?;
        let n = self.layers.len();
        let mut inputs = Vec::with_capacity(n);
        let mut outputs = Vec::with_capacity(n);
        let mut h = x.to_owned();
        for i in 0..n {
            let mut y = self.layer_forward(i, &h)?;
            self.act(i).apply(&mut y);
            inputs.push(h);
            h = y.clone();
            outputs.push(y);
        }
        check_finite_array(&h, "network output")?;
        self.cache = Some(Cache { inputs, outputs });
        Ok(h)
    }

    /// Backpropagates `grad_out` through the cached forward pass, accumulating
    /// into parameter gradients. Returns the gradient with respect to the input.
    pub fn backward(&mut self, grad_out: &Array2<T>) -> Result<Array2<T>> {
        let cache = self
            .cache
            .take()
            .ok_or_else(|| Error::Usage("backward called without a cached forward pass".into()))?;
        let n = self.layers.len();
        if grad_out.dim() != cache.outputs[n - 1].dim() {
            return Err(Error::Shape(format!(
                "upstream gradient {:?} does not match output {:?}",
                grad_out.dim(),
                cache.outputs[n - 1].dim()
            )));
        }
        let mut g = grad_out.to_owned();
        for i in (0..n).rev() {
            self.act(i).backprop(&cache.outputs[i], &mut g);
            let x = &cache.inputs[i];
            g = match &mut self.layers[i] {
                Layer::Dense(l) => l.backward(x, &g),
                Layer::Noisy(l) => match &self.noise[i] {
                    None => l.backward(x, &g, &l.zero_noise()),
                    Some(NoiseAssignment::Shared(s)) => l.backward(x, &g, s),
                    Some(NoiseAssignment::PerRow(_)) => {
                        return Err(Error::Usage("backward through per-row noise is unsupported".into()))
                    }
                },
            };
        }
        Ok(g)
    }

    pub fn named_params(&self) -> Vec<(String, &ParamTensor<T>)> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.params().into_iter().map(move |(n, p)| (format!("layers.{i}.{n}"), p)))
            .collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor<T>> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }

    pub fn zero_grad(&mut self) {
        self.params_mut().into_iter().for_each(|p| p.zero_grad());
    }

    pub fn param_count(&self) -> usize {
        self.named_params().iter().map(|(_, p)| p.len()).sum()
    }

    /// Same architecture and values in another precision; noise and cache are dropped.
    pub fn cast<U: Real>(&self) -> Mlp<U> {
        let layers = self
            .layers
            .iter()
            .map(|l| match l {
                Layer::Dense(d) => Layer::Dense(Linear {
                    weight: d.weight.cast(),
                    bias: d.bias.cast(),
                }),
                Layer::Noisy(n) => Layer::Noisy(NoisyLinear {
                    mu_w: n.mu_w.cast(),
                    sigma_w: n.sigma_w.cast(),
                    mu_b: n.mu_b.cast(),
                    sigma_b: n.sigma_b.cast(),
                    kind: n.kind,
                }),
            })
            .collect();
        Mlp::from_layers(self.spec.clone(), layers)
    }
}
