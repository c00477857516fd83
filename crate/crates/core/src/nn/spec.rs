//! Architecture descriptions.
//!
//! A [`ModelSpec`] is a plain sequential stack of convolutions, dense layers,
//! ReLUs and max-pools over a `[channels, height, width]` input, optionally
//! preceded by a frozen per-pixel standardization. It has a compact textual
//! form used by config files, e.g.
//! `standardize,conv:4:3:1:1,relu,maxpool:2,conv:8:3:1:1,relu,maxpool:2,dense:10`.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::params::{LayerKind, ParamLayer, ParamSet};
use crate::error::{invalid, Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Conv {
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        bias: bool,
    },
    Dense {
        width: usize,
        bias: bool,
    },
    Relu,
    MaxPool {
        size: usize,
    },
    /// `(x - shift) * scale` elementwise, with `shift` and `scale` held as the
    /// two filters of one batch-statistic block. Only valid as the first layer.
    Standardize,
}

impl LayerSpec {
    pub fn conv(out_channels: usize, kernel: usize, stride: usize, padding: usize) -> Self {
        LayerSpec::Conv {
            out_channels,
            kernel,
            stride,
            padding,
            bias: true,
        }
    }

    pub fn dense(width: usize) -> Self {
        LayerSpec::Dense { width, bias: true }
    }

    pub fn dense_no_bias(width: usize) -> Self {
        LayerSpec::Dense { width, bias: false }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            LayerSpec::Conv {
                out_channels,
                kernel,
                stride,
                padding,
                bias,
            } => {
                write!(f, "conv:{out_channels}:{kernel}:{stride}:{padding}")?;
                if !bias {
                    f.write_str(":nobias")?;
                }
                Ok(())
            }
            LayerSpec::Dense { width, bias } => {
                write!(f, "dense:{width}")?;
                if !bias {
                    f.write_str(":nobias")?;
                }
                Ok(())
            }
            LayerSpec::Relu => f.write_str("relu"),
            LayerSpec::MaxPool { size } => write!(f, "maxpool:{size}"),
            LayerSpec::Standardize => f.write_str("standardize"),
        }
    }
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        let mut parts: Vec<&str> = token.trim().split(':').collect();
        let bias = if parts.last() == Some(&"nobias") {
            parts.pop();
            false
        } else {
            true
        };
        let num = |s: &str| -> Result<usize> {
            s.parse::<usize>()
                .map_err(|_| invalid!("bad number {s:?} in layer {token:?}"))
        };
        match parts.as_slice() {
            ["conv", out, k] => Ok(LayerSpec::Conv {
                out_channels: num(out)?,
                kernel: num(k)?,
                stride: 1,
                padding: 0,
                bias,
            }),
            ["conv", out, k, s] => Ok(LayerSpec::Conv {
                out_channels: num(out)?,
                kernel: num(k)?,
                stride: num(s)?,
                padding: 0,
                bias,
            }),
            ["conv", out, k, s, p] => Ok(LayerSpec::Conv {
                out_channels: num(out)?,
                kernel: num(k)?,
                stride: num(s)?,
                padding: num(p)?,
                bias,
            }),
            ["dense", w] => Ok(LayerSpec::Dense {
                width: num(w)?,
                bias,
            }),
            ["relu"] if bias => Ok(LayerSpec::Relu),
            ["maxpool", s] if bias => Ok(LayerSpec::MaxPool { size: num(s)? }),
            ["standardize"] if bias => Ok(LayerSpec::Standardize),
            _ => Err(invalid!("unrecognized layer {token:?}")),
        }
    }
}

/// Activation extent between layers, `[channels, height, width]`.
/// Dense outputs are reported as `[width, 1, 1]`.
pub type Extent = [usize; 3];

/// A validated sequential architecture.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    input: Extent,
    layers: Vec<LayerSpec>,
    extents: Vec<Extent>,
}

impl ModelSpec {
    pub fn new(input: Extent, layers: Vec<LayerSpec>) -> Result<Self> {
        if input.contains(&0) {
            return Err(invalid!("input extent {input:?} has a zero dimension"));
        }
        let mut extents = vec![input];
        let mut cur = input;
        for (i, layer) in layers.iter().enumerate() {
            cur = match *layer {
                LayerSpec::Conv {
                    out_channels,
                    kernel,
                    stride,
                    padding,
                    ..
                } => {
                    if out_channels == 0 || kernel == 0 || stride == 0 {
                        return Err(invalid!("layer {i} ({layer}) has a zero size"));
                    }
                    if cur[1] + 2 * padding < kernel || cur[2] + 2 * padding < kernel {
                        return Err(invalid!(
                            "layer {i} ({layer}): kernel larger than padded input {cur:?}"
                        ));
                    }
                    let h = (cur[1] + 2 * padding - kernel) / stride + 1;
                    let w = (cur[2] + 2 * padding - kernel) / stride + 1;
                    [out_channels, h, w]
                }
                LayerSpec::Dense { width, .. } => {
                    if width == 0 {
                        return Err(invalid!("layer {i} ({layer}) has zero width"));
                    }
                    [width, 1, 1]
                }
                LayerSpec::Relu => cur,
                LayerSpec::MaxPool { size } => {
                    if size == 0 || cur[1] < size || cur[2] < size {
                        return Err(invalid!(
                            "layer {i} ({layer}) cannot pool input {cur:?}"
                        ));
                    }
                    [cur[0], cur[1] / size, cur[2] / size]
                }
                LayerSpec::Standardize => {
                    if i != 0 {
                        return Err(invalid!("standardize is only allowed as the first layer"));
                    }
                    cur
                }
            };
            extents.push(cur);
        }
        match layers.last() {
            Some(LayerSpec::Dense { .. }) => {}
            _ => return Err(invalid!("the last layer must be dense (it produces the logits)")),
        }
        Ok(Self {
            input,
            layers,
            extents,
        })
    }

    /// Parse the comma-separated layer list, e.g. `dense:32,relu,dense:2`.
    pub fn parse(input: Extent, arch: &str) -> Result<Self> {
        let layers = arch
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<LayerSpec>>>()?;
        Self::new(input, layers)
    }

    /// Standardization, a stride-1 and a stride-2 conv, then a one-hidden-layer
    /// dense head.
    pub fn desk_cnn(input: Extent, classes: usize) -> Result<Self> {
        Self::new(
            input,
            vec![
                LayerSpec::Standardize,
                LayerSpec::conv(8, 3, 1, 1),
                LayerSpec::Relu,
                LayerSpec::conv(8, 3, 2, 1),
                LayerSpec::Relu,
                LayerSpec::dense(32),
                LayerSpec::Relu,
                LayerSpec::dense(classes),
            ],
        )
    }

    pub fn mlp(input: Extent, hidden: &[usize], classes: usize) -> Result<Self> {
        let mut layers = Vec::new();
        for &h in hidden {
            layers.push(LayerSpec::dense(h));
            layers.push(LayerSpec::Relu);
        }
        layers.push(LayerSpec::dense(classes));
        Self::new(input, layers)
    }

    pub fn input(&self) -> Extent {
        self.input
    }

    pub fn input_len(&self) -> usize {
        self.input.iter().product()
    }

    pub fn layers(&self) -> &[LayerSpec] {
        &self.layers
    }

    /// Extent entering layer `i`; index `layers().len()` is the logits.
    pub fn extent(&self, i: usize) -> Extent {
        self.extents[i]
    }

    pub fn classes(&self) -> usize {
        self.extents.last().map(|e| e[0]).unwrap_or(0)
    }

    /// The layer list in its textual form.
    pub fn arch(&self) -> String {
        self.layers
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join(",")
    }

    /// Kinds and filter shapes of every parameter block, in `ParamSet` order.
    pub fn param_layout(&self) -> Vec<(LayerKind, usize, Vec<usize>)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            let inp = self.extents[i];
            match *layer {
                LayerSpec::Conv {
                    out_channels,
                    kernel,
                    bias,
                    ..
                } => {
                    out.push((LayerKind::Conv, out_channels, vec![inp[0], kernel, kernel]));
                    if bias {
                        out.push((LayerKind::Bias, 1, vec![out_channels]));
                    }
                }
                LayerSpec::Dense { width, bias } => {
                    out.push((LayerKind::Dense, width, vec![inp.iter().product()]));
                    if bias {
                        out.push((LayerKind::Bias, 1, vec![width]));
                    }
                }
                LayerSpec::Standardize => {
                    out.push((LayerKind::BatchStat, 2, inp.to_vec()));
                }
                _ => {}
            }
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.param_layout()
            .iter()
            .map(|(_, n, shape)| n * shape.iter().product::<usize>())
            .sum()
    }

    /// Seeded fan-in-scaled uniform initialization, `U(-sqrt(6/fan_in), sqrt(6/fan_in))`.
    /// Biases start at zero; standardization starts as the identity
    /// (shift 0, scale 1).
    pub fn init(&self, seed: u64) -> ParamSet {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = self
            .param_layout()
            .into_iter()
            .map(|(kind, count, shape)| {
                let fan_in: usize = shape.iter().product();
                let bound = (6.0 / fan_in as f64).sqrt();
                let filters = (0..count)
                    .map(|j| {
                        let data = match kind {
                            // shift = 0, scale = 1
                            LayerKind::BatchStat => vec![j as f64; fan_in],
                            LayerKind::Bias => vec![0.0; fan_in],
                            _ => (0..fan_in)
                                .map(|_| rng.random_range(-bound..bound))
                                .collect(),
                        };
                        Tensor::new(shape.clone(), data).expect("layout shape")
                    })
                    .collect();
                ParamLayer::new(kind, filters)
            })
            .collect();
        ParamSet::new(layers)
    }

    pub fn has_standardize(&self) -> bool {
        self.layers.first() == Some(&LayerSpec::Standardize)
    }

    /// Check that `params` has exactly the block structure this spec expects.
    pub fn check_params(&self, params: &ParamSet) -> Result<()> {
        let layout = self.param_layout();
        if layout.len() != params.layers().len() {
            return Err(crate::error::shape_err!(
                "architecture expects {} parameter blocks, weights have {}",
                layout.len(),
                params.layers().len()
            ));
        }
        for (i, ((kind, count, shape), layer)) in layout.iter().zip(params.layers()).enumerate() {
            if *kind != layer.kind() || *count != layer.filters().len() {
                return Err(crate::error::shape_err!(
                    "parameter block {i}: expected {count} {kind:?} filters, found {} {:?}",
                    layer.filters().len(),
                    layer.kind()
                ));
            }
            if let Some(f) = layer.filters().iter().find(|f| f.shape() != shape.as_slice()) {
                return Err(crate::error::shape_err!(
                    "parameter block {i}: filter shape {:?}, expected {shape:?}",
                    f.shape()
                ));
            }
        }
        Ok(())
    }
}

/// Parse an extent written as `CxHxW` (or `D` for a flat input).
pub fn parse_extent(s: &str) -> Result<Extent> {
    let dims = s
        .split('x')
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .map_err(|_| invalid!("bad input extent {s:?}"))
        })
        .collect::<Result<Vec<_>>>()?;
    match dims.as_slice() {
        [d] => Ok([*d, 1, 1]),
        [c, h, w] => Ok([*c, *h, *w]),
        _ => Err(invalid!("input extent {s:?} must be CxHxW or D")),
    }
}
