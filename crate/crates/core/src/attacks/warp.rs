//! Flow fields and differentiable bilinear warping.
//!
//! Output pixel `(i, j)` samples the source image at `(i + Δu, j + Δv)`, with
//! `u` running down the rows and `v` across the columns. The value is the
//! bilinear blend of the four surrounding integer pixels; neighbours outside
//! the image replicate the nearest border pixel.

use crate::error::{shape_err, Result};
use crate::tensor::{image_extent, Tensor};

/// Per-pixel displacements `(Δu, Δv)`, stored as `[H, W, 2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl FlowField {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; height * width * 2],
        }
    }

    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != height * width * 2 {
            return Err(shape_err!(
                "flow of {height}x{width} needs {} values, got {}",
                height * width * 2,
                data.len()
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(crate::error::invalid!("flow values must be finite"));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        let k = (i * self.width + j) * 2;
        (self.data[k], self.data[k + 1])
    }

    pub fn set(&mut self, i: usize, j: usize, du: f64, dv: f64) {
        let k = (i * self.width + j) * 2;
        self.data[k] = du;
        self.data[k + 1] = dv;
    }

    /// Largest absolute displacement component.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Warp `image` (`[C, H, W]` or `[H, W]`) by `flow`.
pub fn bilinear_warp(image: &Tensor, flow: &FlowField) -> Result<Tensor> {
    let [c, h, w] = image_extent(image)?;
    if flow.height != h || flow.width != w {
        return Err(shape_err!(
            "flow extent {}x{} does not match image {h}x{w}",
            flow.height,
            flow.width
        ));
    }
    let out = warp_raw(image.data(), [c, h, w], &flow.data);
    Tensor::new(image.shape().to_vec(), out)
}

struct Corners {
    rows: [usize; 2],
    cols: [usize; 2],
    fu: f64,
    fv: f64,
}

#[inline]
fn corners(i: usize, j: usize, du: f64, dv: f64, h: usize, w: usize) -> Corners {
    let u = i as f64 + du;
    let v = j as f64 + dv;
    let u0 = u.floor();
    let v0 = v.floor();
    let clamp = |p: f64, n: usize| -> usize { p.max(0.0).min((n - 1) as f64) as usize };
    Corners {
        rows: [clamp(u0, h), clamp(u0 + 1.0, h)],
        cols: [clamp(v0, w), clamp(v0 + 1.0, w)],
        fu: u - u0,
        fv: v - v0,
    }
}

pub(crate) fn warp_raw(img: &[f64], [c, h, w]: [usize; 3], flow: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; c * h * w];
    for i in 0..h {
        for j in 0..w {
            let k = (i * w + j) * 2;
            let q = corners(i, j, flow[k], flow[k + 1], h, w);
            let (a, b) = (1.0 - q.fu, q.fu);
            let (l, r) = (1.0 - q.fv, q.fv);
            for ch in 0..c {
                let px = |y: usize, x: usize| img[(ch * h + y) * w + x];
                out[(ch * h + i) * w + j] = a * l * px(q.rows[0], q.cols[0])
                    + a * r * px(q.rows[0], q.cols[1])
                    + b * l * px(q.rows[1], q.cols[0])
                    + b * r * px(q.rows[1], q.cols[1]);
            }
        }
    }
    out
}

/// Chain rule through the warp: given `∂L/∂out`, return `∂L/∂flow` (`[H, W, 2]`).
pub(crate) fn warp_flow_grad(
    img: &[f64],
    [c, h, w]: [usize; 3],
    flow: &[f64],
    grad_out: &[f64],
) -> Vec<f64> {
    let mut g = vec![0.0; h * w * 2];
    for i in 0..h {
        for j in 0..w {
            let k = (i * w + j) * 2;
            let q = corners(i, j, flow[k], flow[k + 1], h, w);
            let mut gu = 0.0;
            let mut gv = 0.0;
            for ch in 0..c {
                let px = |y: usize, x: usize| img[(ch * h + y) * w + x];
                let go = grad_out[(ch * h + i) * w + j];
                let (p00, p01) = (px(q.rows[0], q.cols[0]), px(q.rows[0], q.cols[1]));
                let (p10, p11) = (px(q.rows[1], q.cols[0]), px(q.rows[1], q.cols[1]));
                gu += go * ((1.0 - q.fv) * (p10 - p00) + q.fv * (p11 - p01));
                gv += go * ((1.0 - q.fu) * (p01 - p00) + q.fu * (p11 - p10));
            }
            g[k] = gu;
            g[k + 1] = gv;
        }
    }
    g
}

/// Total variation of the flow over right and down neighbour pairs,
/// `Σ sqrt(‖Δu_p − Δu_q‖² + ‖Δv_p − Δv_q‖² + ε)`, and its gradient.
pub(crate) fn flow_tv(flow: &[f64], h: usize, w: usize) -> (f64, Vec<f64>) {
    const SMOOTH: f64 = 1e-8;
    let mut total = 0.0;
    let mut g = vec![0.0; flow.len()];
    for i in 0..h {
        for j in 0..w {
            let p = (i * w + j) * 2;
            let mut pair = |q: usize| {
                let du = flow[p] - flow[q];
                let dv = flow[p + 1] - flow[q + 1];
                let s = (du * du + dv * dv + SMOOTH).sqrt();
                total += s;
                g[p] += du / s;
                g[q] -= du / s;
                g[p + 1] += dv / s;
                g[q + 1] -= dv / s;
            };
            if j + 1 < w {
                pair(p + 2);
            }
            if i + 1 < h {
                pair(p + 2 * w);
            }
        }
    }
    (total, g)
}
