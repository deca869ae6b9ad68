//! Fully connected network with a flat parameter vector and hand-written
//! reverse mode.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array1, Array2, ArrayView2, Axis};

use crate::error::{check_len, Error, Result};
use crate::forcing::{ForcingSample, Rng};
use crate::mesh::Point;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Swish,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => z.tanh(),
            Activation::Swish => z / (1.0 + (-z).exp()),
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
            Activation::Swish => {
                let s = 1.0 / (1.0 + (-z).exp());
                s + z * s * (1.0 - s)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FinalActivation {
    Linear,
    /// `bound * tanh(z / bound)`.
    Bounded(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputEncoding {
    /// The raw parameter vector ω.
    OmegaVector,
    /// `f(·; ω)` sampled at every DOF coordinate.
    FAtDofs,
}

macro_rules! text_enum {
    ($t:ty { $($v:expr => $s:literal),* $(,)? }) => {
        impl fmt::Display for $t {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                $(if *self == $v { return f.write_str($s); })*
                unreachable!()
            }
        }
        impl FromStr for $t {
            type Err = Error;
            fn from_str(s: &str) -> Result<Self> {
                match s {
                    $($s => Ok($v),)*
                    _ => Err(Error::invalid(format!("unknown {} `{s}`", stringify!($t)))),
                }
            }
        }
    };
}

text_enum!(Activation { Activation::Tanh => "tanh", Activation::Swish => "swish" });
text_enum!(InputEncoding { InputEncoding::OmegaVector => "omega_vector", InputEncoding::FAtDofs => "f_at_dofs" });

impl fmt::Display for FinalActivation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FinalActivation::Linear => f.write_str("linear"),
            FinalActivation::Bounded(b) => write!(f, "bounded:{b:?}"),
        }
    }
}

impl FromStr for FinalActivation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "linear" {
            return Ok(FinalActivation::Linear);
        }
        let bound = s
            .strip_prefix("bounded:")
            .and_then(|b| b.parse::<f64>().ok())
            .filter(|b| *b > 0.0)
            .ok_or_else(|| Error::invalid(format!("final activation `{s}`: want linear or bounded:<B>")))?;
        Ok(FinalActivation::Bounded(bound))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkConfig {
    pub input_encoding: InputEncoding,
    pub input_dim: usize,
    pub hidden: Vec<usize>,
    pub activation: Activation,
    pub output_dim: usize,
    pub final_activation: FinalActivation,
    pub init_seed: u64,
    /// Inputs are multiplied by this before the first layer.
    pub input_scale: f64,
    /// Outputs are multiplied by this after the last layer.
    pub output_scale: f64,
}

impl NetworkConfig {
    /// `[128, 128, 128]` tanh MLP with a linear head.
    pub fn new(input_encoding: InputEncoding, input_dim: usize, output_dim: usize) -> Self {
        NetworkConfig {
            input_encoding,
            input_dim,
            hidden: vec![128, 128, 128],
            activation: Activation::Tanh,
            output_dim,
            final_activation: FinalActivation::Linear,
            init_seed: 0,
            input_scale: 1.0,
            output_scale: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 || self.hidden.iter().any(|&w| w == 0) {
            return Err(Error::invalid("network widths must be at least 1"));
        }
        if !(self.input_scale.is_finite() && self.output_scale.is_finite() && self.output_scale != 0.0) {
            return Err(Error::invalid("network scales must be finite and the output scale nonzero"));
        }
        Ok(())
    }

    /// `(fan_in, fan_out)` of every affine layer.
    pub fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut widths = vec![self.input_dim];
        widths.extend(&self.hidden);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }

    pub fn param_count(&self) -> usize {
        self.layer_shapes().iter().map(|(i, o)| i * o + o).sum()
    }
}

/// Network input for one forcing sample.
pub fn encode_input(encoding: InputEncoding, sample: &ForcingSample, dof_coords: &[Point]) -> Vec<f64> {
    match encoding {
        InputEncoding::OmegaVector => sample.omega.clone(),
        InputEncoding::FAtDofs => sample.eval_many(dof_coords),
    }
}

#[derive(Debug, Clone, Copy)]
struct LayerOffsets {
    fan_in: usize,
    fan_out: usize,
    w: usize,
    b: usize,
}

/// Intermediate values kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Layer inputs, `a_0 = scaled x`.
    inputs: Vec<Array2<f64>>,
    /// Pre-activations of every layer.
    pre: Vec<Array2<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    params: Vec<f64>,
    layout: Vec<(usize, usize, usize, usize)>,
}

impl Network {
    /// Uniform initialization in `±1/sqrt(fan_in)`, biases zero.
    pub fn new(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = Rng::new(config.init_seed);
        let mut net = Network::zeros(config)?;
        let layers: Vec<LayerOffsets> = net.offsets().collect();
        for l in layers {
            let bound = 1.0 / (l.fan_in as f64).sqrt();
            for p in &mut net.params[l.w..l.w + l.fan_in * l.fan_out] {
                *p = rng.uniform(-bound, bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let mut layout = Vec::new();
        let mut off = 0;
        for (i, o) in config.layer_shapes() {
            layout.push((i, o, off, off + i * o));
            off += i * o + o;
        }
        Ok(Network {
            params: vec![0.0; off],
            config,
            layout,
        })
    }

    pub fn from_params(config: NetworkConfig, params: Vec<f64>) -> Result<Self> {
        let mut net = Network::zeros(config)?;
        check_len(net.params.len(), params.len())?;
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("network parameters must be finite"));
        }
        net.params = params;
        Ok(net)
    }

    fn offsets(&self) -> impl Iterator<Item = LayerOffsets> + '_ {
        self.layout.iter().map(|&(fan_in, fan_out, w, b)| LayerOffsets {
            fan_in,
            fan_out,
            w,
            b,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn weights(&self, l: LayerOffsets) -> ArrayView2<'_, f64> {
        ArrayView2::from_shape((l.fan_in, l.fan_out), &self.params[l.w..l.b]).expect("layout")
    }

    /// Batched forward pass; rows of `x` are samples.
    pub fn forward_batch(&self, x: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        if x.ncols() != self.config.input_dim {
            return Err(Error::ShapeMismatch {
                expected: self.config.input_dim,
                got: x.ncols(),
            });
        }
        let last = self.layout.len() - 1;
        let mut a = x * self.config.input_scale;
        let mut cache = ForwardCache {
            inputs: Vec::with_capacity(self.layout.len()),
            pre: Vec::with_capacity(self.layout.len()),
        };
        for (k, l) in self.offsets().enumerate() {
            let b = ArrayView2::from_shape((1, l.fan_out), &self.params[l.b..l.b + l.fan_out]).expect("layout");
            let z = a.dot(&self.weights(l)) + &b;
            let next = if k < last {
                let act = self.config.activation;
                z.mapv(|v| act.apply(v))
            } else {
                let s = self.config.output_scale;
                match self.config.final_activation {
                    FinalActivation::Linear => &z * s,
                    FinalActivation::Bounded(bound) => z.mapv(|v| s * bound * (v / bound).tanh()),
                }
            };
            cache.inputs.push(std::mem::replace(&mut a, next));
            cache.pre.push(z);
        }
        Ok((a, cache))
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.config.input_dim, x.len())?;
        let xb = Array2::from_shape_vec((1, x.len()), x.to_vec()).expect("row");
        Ok(self.forward_batch(&xb)?.0.into_raw_vec_and_offset().0)
    }

    /// Parameter gradient given `d loss / d output` for every row.
    pub fn backward(&self, cache: &ForwardCache, d_out: &Array2<f64>) -> Vec<f64> {
        let mut grads = vec![0.0; self.params.len()];
        let last = self.layout.len() - 1;
        let s = self.config.output_scale;
        let mut dz: Array2<f64> = match self.config.final_activation {
            FinalActivation::Linear => d_out * s,
            FinalActivation::Bounded(bound) => {
                let mut g = d_out.clone();
                g.zip_mut_with(&cache.pre[last], |g, &z| {
                    let t = (z / bound).tanh();
                    *g *= s * (1.0 - t * t);
                });
                g
            }
        };
        let offsets: Vec<LayerOffsets> = self.offsets().collect();
        for k in (0..=last).rev() {
            let l = offsets[k];
            let dw = cache.inputs[k].t().dot(&dz);
            grads[l.w..l.b].copy_from_slice(dw.as_standard_layout().as_slice().expect("contiguous"));
            let db: Array1<f64> = dz.sum_axis(Axis(0));
            grads[l.b..l.b + l.fan_out].copy_from_slice(db.as_slice().expect("contiguous"));
            if k == 0 {
                break;
            }
            let mut da = dz.dot(&self.weights(l).t());
            let act = self.config.activation;
            da.zip_mut_with(&cache.pre[k - 1], |g, &z| *g *= act.derivative(z));
            dz = da;
        }
        grads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(act: Activation, fin: FinalActivation) -> Network {
        let mut c = NetworkConfig::new(InputEncoding::OmegaVector, 3, 2);
        c.hidden = vec![4, 5];
        c.activation = act;
        c.final_activation = fin;
        c.init_seed = 3;
        c.input_scale = 0.7;
        c.output_scale = 1.3;
        let mut net = Network::new(c).unwrap();
        // nonzero biases so their gradients are exercised
        let mut rng = Rng::new(17);
        for p in net.params_mut() {
            *p += 0.1 * rng.uniform(-1.0, 1.0);
        }
        net
    }

    #[test]
    fn zero_network_outputs_zero() {
        let net = Network::zeros(NetworkConfig::new(InputEncoding::FAtDofs, 5, 3)).unwrap();
        assert_eq!(net.forward(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap(), vec![0.0; 3]);
    }

    #[test]
    fn deterministic_and_shape_checked() {
        let a = small(Activation::Tanh, FinalActivation::Linear);
        let b = small(Activation::Tanh, FinalActivation::Linear);
        assert_eq!(a.forward(&[0.1, 0.2, 0.3]).unwrap(), b.forward(&[0.1, 0.2, 0.3]).unwrap());
        assert!(matches!(a.forward(&[1.0]), Err(Error::ShapeMismatch { .. })));
        assert_eq!(a.param_count(), 3 * 4 + 4 + 4 * 5 + 5 + 5 * 2 + 2);
    }

    #[test]
    fn init_within_fan_in_bound() {
        let net = Network::new(NetworkConfig::new(InputEncoding::FAtDofs, 49, 47)).unwrap();
        let layers: Vec<LayerOffsets> = net.offsets().collect();
        for l in layers {
            let bound = 1.0 / (l.fan_in as f64).sqrt();
            assert!(net.params[l.w..l.b].iter().all(|w| w.abs() <= bound));
            assert!(net.params[l.b..l.b + l.fan_out].iter().all(|&b| b == 0.0));
        }
    }

    #[test]
    fn backward_matches_finite_differences() {
        let x = Array2::from_shape_vec((2, 3), vec![0.3, -0.5, 0.9, 1.1, 0.2, -0.4]).unwrap();
        // loss = sum(c ⊙ y) so d loss / d y = c
        let c = Array2::from_shape_vec((2, 2), vec![0.7, -1.2, 0.4, 0.9]).unwrap();
        for act in [Activation::Tanh, Activation::Swish] {
            for fin in [FinalActivation::Linear, FinalActivation::Bounded(2.0)] {
                let net = small(act, fin);
                let (_, cache) = net.forward_batch(&x).unwrap();
                let g = net.backward(&cache, &c);
                let h = 1e-6;
                for i in 0..net.param_count() {
                    let eval = |d: f64| {
                        let mut n = net.clone();
                        n.params[i] += d;
                        (n.forward_batch(&x).unwrap().0 * &c).sum()
                    };
                    let fd = (eval(h) - eval(-h)) / (2.0 * h);
                    assert!((fd - g[i]).abs() <= 1e-7 * (1.0 + fd.abs()), "{act} {fin} param {i}: {fd} vs {}", g[i]);
                }
            }
        }
    }

    #[test]
    fn text_forms_round_trip() {
        for a in [Activation::Tanh, Activation::Swish] {
            assert_eq!(a.to_string().parse::<Activation>().unwrap(), a);
        }
        for f in [FinalActivation::Linear, FinalActivation::Bounded(3.5)] {
            assert_eq!(f.to_string().parse::<FinalActivation>().unwrap(), f);
        }
        assert!("bounded:-1".parse::<FinalActivation>().is_err());
        assert_eq!("f_at_dofs".parse::<InputEncoding>().unwrap(), InputEncoding::FAtDofs);
    }
}
