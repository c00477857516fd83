//! Forward and reverse-mode passes over a [`ModelSpec`] + [`ParamSet`].
//!
//! Every sample is processed independently, so batches are split into fixed
//! chunks that run in parallel. Parameter gradients are summed inside a chunk
//! in sample order and across chunks in chunk order, which keeps the result
//! bit-identical regardless of how many worker threads exist.

use rayon::prelude::*;

use super::params::{ParamLayer, ParamSet};
use super::spec::{LayerSpec, ModelSpec};
use crate::error::{shape_err, Error, Result};
use crate::tensor::Tensor;

const CHUNK: usize = 16;

/// Reverse-mode gradients of the mean cross-entropy of a batch.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// The mean cross-entropy the gradients belong to.
    pub loss: f64,
    pub wrt_params: ParamSet,
    pub wrt_input: Tensor,
}

/// A spec together with weights it accepts.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: ModelSpec,
    params: ParamSet,
}

impl Network {
    pub fn new(spec: ModelSpec, params: ParamSet) -> Result<Self> {
        spec.check_params(&params)?;
        Ok(Self { spec, params })
    }

    /// Freshly initialized weights for `spec`.
    pub fn init(spec: ModelSpec, seed: u64) -> Self {
        let params = spec.init(seed);
        Self { spec, params }
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn into_params(self) -> ParamSet {
        self.params
    }

    pub fn set_params(&mut self, params: ParamSet) -> Result<()> {
        self.spec.check_params(&params)?;
        self.params = params;
        Ok(())
    }

    pub fn forward(&self, batch: &Tensor) -> Result<Tensor> {
        forward(&self.spec, &self.params, batch)
    }

    pub fn loss(&self, batch: &Tensor, labels: &[usize]) -> Result<f64> {
        cross_entropy(&self.forward(batch)?, labels)
    }

    pub fn backward(&self, batch: &Tensor, labels: &[usize]) -> Result<Gradients> {
        backward(&self.spec, &self.params, batch, labels)
    }

    /// Gradient of the mean loss with respect to the input only.
    pub fn input_gradient(&self, batch: &Tensor, labels: &[usize]) -> Result<(f64, Tensor)> {
        let out = run_backward(&self.spec, &self.params, batch, labels, false)?;
        Ok((out.mean_loss(), out.wrt_input))
    }
}

/// Logits `[batch, classes]` for a batch `[batch, C, H, W]`.
pub fn forward(spec: &ModelSpec, params: &ParamSet, batch: &Tensor) -> Result<Tensor> {
    let n = check_batch(spec, batch)?;
    spec.check_params(params)?;
    let classes = spec.classes();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| sample_forward(spec, params, batch.row(i), None))
        .collect();
    let data: Vec<f64> = rows.into_iter().flatten().collect();
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite logits".into()));
    }
    Tensor::new(vec![n, classes], data)
}

/// Mean over the batch of `-log softmax(logits)[label]`.
pub fn cross_entropy(logits: &Tensor, labels: &[usize]) -> Result<f64> {
    let (n, classes) = match logits.shape() {
        [n, c] => (*n, *c),
        s => return Err(shape_err!("logits must be [batch, classes], got {s:?}")),
    };
    check_labels(labels, n, classes)?;
    if n == 0 {
        return Err(shape_err!("empty batch"));
    }
    let mut total = 0.0;
    for (i, &y) in labels.iter().enumerate() {
        total += sample_loss(logits.row(i), y);
    }
    Ok(total / n as f64)
}

/// Exact gradients of `cross_entropy(forward(batch), labels)` with respect to
/// every parameter and every input value.
pub fn backward(
    spec: &ModelSpec,
    params: &ParamSet,
    batch: &Tensor,
    labels: &[usize],
) -> Result<Gradients> {
    let out = run_backward(spec, params, batch, labels, true)?;
    Ok(Gradients {
        loss: out.mean_loss(),
        wrt_params: out.wrt_params.expect("parameter gradients requested"),
        wrt_input: out.wrt_input,
    })
}

/// Index of the largest logit; the first one wins ties.
pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

pub(crate) struct BackwardOutput {
    pub sample_losses: Vec<f64>,
    pub predictions: Vec<usize>,
    pub wrt_params: Option<ParamSet>,
    pub wrt_input: Tensor,
}

impl BackwardOutput {
    pub fn mean_loss(&self) -> f64 {
        self.sample_losses.iter().sum::<f64>() / self.sample_losses.len() as f64
    }
}

pub(crate) fn run_backward(
    spec: &ModelSpec,
    params: &ParamSet,
    batch: &Tensor,
    labels: &[usize],
    want_params: bool,
) -> Result<BackwardOutput> {
    let n = check_batch(spec, batch)?;
    if n == 0 {
        return Err(shape_err!("empty batch"));
    }
    spec.check_params(params)?;
    check_labels(labels, n, spec.classes())?;
    let scale = 1.0 / n as f64;

    struct ChunkOut {
        losses: Vec<f64>,
        preds: Vec<usize>,
        grads: Option<Vec<Vec<f64>>>,
        input: Vec<f64>,
    }

    let chunks: Vec<ChunkOut> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut grads = want_params.then(|| grad_buffers(params));
            let mut out = ChunkOut {
                losses: Vec::with_capacity(hi - lo),
                preds: Vec::with_capacity(hi - lo),
                grads: None,
                input: Vec::with_capacity((hi - lo) * spec.input_len()),
            };
            for i in lo..hi {
                let mut trace = Trace::default();
                let logits = sample_forward(spec, params, batch.row(i), Some(&mut trace));
                let y = labels[i];
                out.losses.push(sample_loss(&logits, y));
                out.preds.push(argmax(&logits));
                let mut g = softmax(&logits);
                g[y] -= 1.0;
                for v in &mut g {
                    *v *= scale;
                }
                let gin = sample_backward(spec, params, &trace, g, grads.as_mut());
                out.input.extend_from_slice(&gin);
            }
            out.grads = grads;
            out
        })
        .collect();

    let mut sample_losses = Vec::with_capacity(n);
    let mut predictions = Vec::with_capacity(n);
    let mut input = Vec::with_capacity(n * spec.input_len());
    let mut total: Option<Vec<Vec<f64>>> = None;
    for chunk in chunks {
        sample_losses.extend(chunk.losses);
        predictions.extend(chunk.preds);
        input.extend(chunk.input);
        if let Some(g) = chunk.grads {
            match total.as_mut() {
                None => total = Some(g),
                Some(t) => {
                    for (tb, gb) in t.iter_mut().zip(&g) {
                        for (a, b) in tb.iter_mut().zip(gb) {
                            *a += b;
                        }
                    }
                }
            }
        }
    }
    if sample_losses.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite loss".into()));
    }
    let wrt_params = total.map(|bufs| buffers_to_params(params, bufs));
    Ok(BackwardOutput {
        sample_losses,
        predictions,
        wrt_params,
        wrt_input: Tensor::new(batch.shape().to_vec(), input)?,
    })
}

fn check_batch(spec: &ModelSpec, batch: &Tensor) -> Result<usize> {
    let shape = batch.shape();
    let [c, h, w] = spec.input();
    let ok = match shape {
        [_, bc, bh, bw] => [*bc, *bh, *bw] == [c, h, w],
        [_, d] => h == 1 && w == 1 && *d == c,
        _ => false,
    };
    if !ok {
        return Err(shape_err!(
            "batch shape {shape:?} does not match model input [N, {c}, {h}, {w}]"
        ));
    }
    Ok(shape[0])
}

fn check_labels(labels: &[usize], n: usize, classes: usize) -> Result<()> {
    if labels.len() != n {
        return Err(shape_err!("{} labels for a batch of {n}", labels.len()));
    }
    if let Some((index, &label)) = labels.iter().enumerate().find(|(_, &y)| y >= classes) {
        return Err(Error::LabelOutOfRange {
            index,
            label,
            classes,
        });
    }
    Ok(())
}

fn sample_loss(logits: &[f64], y: usize) -> f64 {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let s: f64 = logits.iter().map(|z| (z - m).exp()).sum();
    m + s.ln() - logits[y]
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

#[derive(Default)]
struct Trace {
    /// Input to every layer.
    acts: Vec<Vec<f64>>,
    /// Argmax source index per pooled output (empty for other layers).
    pool: Vec<Vec<usize>>,
}

/// Weight block index and optional bias block index of every parameterized layer.
fn block_indices(spec: &ModelSpec) -> impl Iterator<Item = Option<(usize, Option<usize>)>> + '_ {
    let mut next = 0;
    spec.layers().iter().map(move |l| match *l {
        LayerSpec::Conv { bias, .. } | LayerSpec::Dense { bias, .. } => {
            let w = next;
            next += 1;
            let b = bias.then(|| {
                next += 1;
                next - 1
            });
            Some((w, b))
        }
        LayerSpec::Standardize => {
            next += 1;
            Some((next - 1, None))
        }
        _ => None,
    })
}

fn sample_forward(
    spec: &ModelSpec,
    params: &ParamSet,
    x: &[f64],
    mut trace: Option<&mut Trace>,
) -> Vec<f64> {
    let mut cur = x.to_vec();
    for (i, (layer, blocks)) in spec.layers().iter().zip(block_indices(spec)).enumerate() {
        let [c, h, w] = spec.extent(i);
        let [oc, oh, ow] = spec.extent(i + 1);
        let mut pool_idx = Vec::new();
        let next = match *layer {
            LayerSpec::Conv {
                kernel,
                stride,
                padding,
                ..
            } => {
                let (wb, bb) = blocks.expect("conv has parameters");
                let filters = params.layers()[wb].filters();
                let bias = bb.map(|b| params.layers()[b].filters()[0].data());
                let mut out = vec![0.0; oc * oh * ow];
                for (o, filter) in filters.iter().enumerate() {
                    let wt = filter.data();
                    let b0 = bias.map_or(0.0, |b| b[o]);
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut s = b0;
                            for ch in 0..c {
                                for ky in 0..kernel {
                                    let iy = (oy * stride + ky) as isize - padding as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    let row = (ch * h + iy as usize) * w;
                                    let wrow = (ch * kernel + ky) * kernel;
                                    for kx in 0..kernel {
                                        let ix = (ox * stride + kx) as isize - padding as isize;
                                        if ix < 0 || ix >= w as isize {
                                            continue;
                                        }
                                        s += wt[wrow + kx] * cur[row + ix as usize];
                                    }
                                }
                            }
                            out[(o * oh + oy) * ow + ox] = s;
                        }
                    }
                }
                out
            }
            LayerSpec::Dense { .. } => {
                let (wb, bb) = blocks.expect("dense has parameters");
                let filters = params.layers()[wb].filters();
                let bias = bb.map(|b| params.layers()[b].filters()[0].data());
                filters
                    .iter()
                    .enumerate()
                    .map(|(o, f)| {
                        let mut s = bias.map_or(0.0, |b| b[o]);
                        for (a, b) in f.data().iter().zip(&cur) {
                            s += a * b;
                        }
                        s
                    })
                    .collect()
            }
            LayerSpec::Relu => cur.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
            LayerSpec::Standardize => {
                let (sb, _) = blocks.expect("standardize has parameters");
                let stats = params.layers()[sb].filters();
                cur.iter()
                    .zip(stats[0].data().iter().zip(stats[1].data()))
                    .map(|(&x, (&m, &k))| (x - m) * k)
                    .collect()
            }
            LayerSpec::MaxPool { size } => {
                let mut out = Vec::with_capacity(oc * oh * ow);
                for ch in 0..c {
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let mut best = (ch * h + oy * size) * w + ox * size;
                            for dy in 0..size {
                                for dx in 0..size {
                                    let k = (ch * h + oy * size + dy) * w + ox * size + dx;
                                    if cur[k] > cur[best] {
                                        best = k;
                                    }
                                }
                            }
                            out.push(cur[best]);
                            pool_idx.push(best);
                        }
                    }
                }
                out
            }
        };
        if let Some(t) = trace.as_deref_mut() {
            t.acts.push(std::mem::replace(&mut cur, next));
            t.pool.push(pool_idx);
        } else {
            cur = next;
        }
    }
    cur
}

fn grad_buffers(params: &ParamSet) -> Vec<Vec<f64>> {
    params
        .layers()
        .iter()
        .map(|l| vec![0.0; l.filters().iter().map(Tensor::len).sum()])
        .collect()
}

fn buffers_to_params(template: &ParamSet, bufs: Vec<Vec<f64>>) -> ParamSet {
    let layers = template
        .layers()
        .iter()
        .zip(bufs)
        .map(|(l, buf)| {
            let mut at = 0;
            let filters = l
                .filters()
                .iter()
                .map(|f| {
                    let n = f.len();
                    let t = Tensor::new(f.shape().to_vec(), buf[at..at + n].to_vec())
                        .expect("template shape");
                    at += n;
                    t
                })
                .collect();
            ParamLayer::new(l.kind(), filters)
        })
        .collect();
    ParamSet::new(layers)
}

fn sample_backward(
    spec: &ModelSpec,
    params: &ParamSet,
    trace: &Trace,
    grad_logits: Vec<f64>,
    mut grads: Option<&mut Vec<Vec<f64>>>,
) -> Vec<f64> {
    let blocks: Vec<_> = block_indices(spec).collect();
    let mut g = grad_logits;
    for i in (0..spec.layers().len()).rev() {
        let input = &trace.acts[i];
        let [c, h, w] = spec.extent(i);
        let [_, oh, ow] = spec.extent(i + 1);
        g = match spec.layers()[i] {
            LayerSpec::Conv {
                kernel,
                stride,
                padding,
                ..
            } => {
                let (wb, bb) = blocks[i].expect("conv has parameters");
                let filters = params.layers()[wb].filters();
                let flen = c * kernel * kernel;
                let mut gin = vec![0.0; input.len()];
                for (o, filter) in filters.iter().enumerate() {
                    let wt = filter.data();
                    for oy in 0..oh {
                        for ox in 0..ow {
                            let go = g[(o * oh + oy) * ow + ox];
                            if go == 0.0 {
                                continue;
                            }
                            if let (Some(gr), Some(b)) = (grads.as_deref_mut(), bb) {
                                gr[b][o] += go;
                            }
                            for ch in 0..c {
                                for ky in 0..kernel {
                                    let iy = (oy * stride + ky) as isize - padding as isize;
                                    if iy < 0 || iy >= h as isize {
                                        continue;
                                    }
                                    let row = (ch * h + iy as usize) * w;
                                    let wrow = (ch * kernel + ky) * kernel;
                                    for kx in 0..kernel {
                                        let ix = (ox * stride + kx) as isize - padding as isize;
                                        if ix < 0 || ix >= w as isize {
                                            continue;
                                        }
                                        let k = row + ix as usize;
                                        gin[k] += go * wt[wrow + kx];
                                        if let Some(gr) = grads.as_deref_mut() {
                                            gr[wb][o * flen + wrow + kx] += go * input[k];
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                gin
            }
            LayerSpec::Dense { .. } => {
                let (wb, bb) = blocks[i].expect("dense has parameters");
                let filters = params.layers()[wb].filters();
                let flen = input.len();
                let mut gin = vec![0.0; flen];
                for (o, filter) in filters.iter().enumerate() {
                    let go = g[o];
                    if go == 0.0 {
                        continue;
                    }
                    for (gi, wv) in gin.iter_mut().zip(filter.data()) {
                        *gi += go * wv;
                    }
                    if let Some(gr) = grads.as_deref_mut() {
                        for (gw, xv) in gr[wb][o * flen..(o + 1) * flen].iter_mut().zip(input) {
                            *gw += go * xv;
                        }
                        if let Some(b) = bb {
                            gr[b][o] += go;
                        }
                    }
                }
                gin
            }
            LayerSpec::Relu => input
                .iter()
                .zip(&g)
                .map(|(&x, &go)| if x > 0.0 { go } else { 0.0 })
                .collect(),
            LayerSpec::Standardize => {
                let (sb, _) = blocks[i].expect("standardize has parameters");
                let stats = params.layers()[sb].filters();
                let (shift, scale) = (stats[0].data(), stats[1].data());
                if let Some(gr) = grads.as_deref_mut() {
                    let n = input.len();
                    for k in 0..n {
                        gr[sb][k] -= scale[k] * g[k];
                        gr[sb][n + k] += (input[k] - shift[k]) * g[k];
                    }
                }
                g.iter().zip(scale).map(|(go, k)| go * k).collect()
            }
            LayerSpec::MaxPool { .. } => {
                let mut gin = vec![0.0; input.len()];
                for (&src, &go) in trace.pool[i].iter().zip(&g) {
                    gin[src] += go;
                }
                gin
            }
        };
    }
    g
}
