//! Contour and surface renderings of a loss grid as binary PPM or SVG.
//!
//! Colors come from filled bands between log-spaced levels spanning the
//! finite loss range; `inf` cells land in the top band. Rendering is a pure
//! function of the grid and the options, so identical inputs give identical
//! bytes.

use std::fmt::Write as _;

use advscape_core::landscape::SurfaceGrid;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Style {
    Contour,
    Surface,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Ppm,
    Svg,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlotOptions {
    pub style: Style,
    pub format: Format,
    pub width: usize,
    pub height: usize,
    pub levels: usize,
}

impl Default for PlotOptions {
    fn default() -> Self {
        Self {
            style: Style::Contour,
            format: Format::Ppm,
            width: 480,
            height: 360,
            levels: 12,
        }
    }
}

type Rgb = [u8; 3];

const PALETTE: [Rgb; 6] = [
    [68, 1, 84],
    [65, 68, 135],
    [42, 120, 142],
    [34, 168, 132],
    [122, 209, 81],
    [253, 231, 37],
];

fn band_color(band: usize, bands: usize) -> Rgb {
    if bands <= 1 {
        return PALETTE[0];
    }
    let t = band as f64 / (bands - 1) as f64 * (PALETTE.len() - 1) as f64;
    let k = (t.floor() as usize).min(PALETTE.len() - 2);
    let f = t - k as f64;
    let mut out = [0u8; 3];
    for c in 0..3 {
        out[c] = (PALETTE[k][c] as f64 * (1.0 - f) + PALETTE[k + 1][c] as f64 * f).round() as u8;
    }
    out
}

/// Log-spaced band boundaries over the finite range of a grid.
#[derive(Debug, Clone)]
pub struct Levels {
    lo: f64,
    hi: f64,
    thresholds: Vec<f64>,
}

impl Levels {
    pub fn for_grid(grid: &SurfaceGrid, bands: usize) -> Result<Self> {
        let (lo, hi) = grid
            .finite_range()
            .ok_or_else(|| CliError::Core(advscape_core::Error::Numeric("grid has no finite cells".into())))?;
        if bands == 0 {
            return Err(CliError::Config("plot needs at least one level".into()));
        }
        let floor = if lo > 0.0 {
            lo
        } else {
            grid.losses
                .iter()
                .flatten()
                .copied()
                .filter(|v| v.is_finite() && *v > 0.0)
                .fold(f64::INFINITY, f64::min)
                .min(hi * 1e-6)
        };
        let thresholds = if hi > lo && floor > 0.0 {
            let (a, b) = (floor.ln(), hi.ln());
            (1..bands)
                .map(|k| (a + (b - a) * k as f64 / bands as f64).exp())
                .collect()
        } else {
            Vec::new()
        };
        Ok(Self {
            lo: floor,
            hi,
            thresholds,
        })
    }

    pub fn bands(&self) -> usize {
        self.thresholds.len() + 1
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn band(&self, v: f64) -> usize {
        if v.is_nan() || v == f64::INFINITY {
            return self.bands() - 1;
        }
        self.thresholds.partition_point(|&t| t <= v)
    }

    fn color(&self, v: f64) -> Rgb {
        band_color(self.band(v), self.bands())
    }

    /// Height in `[0, 1]` on the log scale.
    fn height(&self, v: f64) -> f64 {
        if !(v < f64::INFINITY) {
            return 1.0;
        }
        if self.hi <= self.lo || self.lo <= 0.0 {
            return 0.0;
        }
        ((v.max(self.lo).ln() - self.lo.ln()) / (self.hi.ln() - self.lo.ln())).clamp(0.0, 1.0)
    }
}

pub fn render(grid: &SurfaceGrid, opts: &PlotOptions) -> Result<Vec<u8>> {
    if opts.width == 0 || opts.height == 0 {
        return Err(CliError::Config("plot size must be positive".into()));
    }
    let levels = Levels::for_grid(grid, opts.levels)?;
    Ok(match (opts.style, opts.format) {
        (Style::Contour, Format::Ppm) => ppm(opts, &contour_raster(grid, &levels, opts)),
        (Style::Contour, Format::Svg) => contour_svg(grid, &levels, opts).into_bytes(),
        (Style::Surface, Format::Ppm) => ppm(opts, &surface_raster(grid, &levels, opts)),
        (Style::Surface, Format::Svg) => surface_svg(grid, &levels, opts).into_bytes(),
    })
}

fn ppm(opts: &PlotOptions, pixels: &[Rgb]) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", opts.width, opts.height).into_bytes();
    out.extend(pixels.iter().flatten());
    out
}

/// Bracketing index and weight of `x` on a strictly increasing axis.
fn locate(axis: &[f64], x: f64) -> (usize, f64) {
    if axis.len() == 1 {
        return (0, 0.0);
    }
    let i = axis.partition_point(|&a| a <= x).clamp(1, axis.len() - 1) - 1;
    let t = ((x - axis[i]) / (axis[i + 1] - axis[i])).clamp(0.0, 1.0);
    (i, t)
}

fn sample(grid: &SurfaceGrid, alpha: f64, beta: f64) -> f64 {
    let (i, s) = locate(&grid.alphas, alpha);
    let (j, t) = locate(&grid.betas, beta);
    let i1 = (i + 1).min(grid.alphas.len() - 1);
    let j1 = (j + 1).min(grid.betas.len() - 1);
    let c = [grid.get(i, j), grid.get(i1, j), grid.get(i, j1), grid.get(i1, j1)];
    if c.iter().any(|v| !v.is_finite()) {
        return f64::INFINITY;
    }
    (1.0 - s) * (1.0 - t) * c[0] + s * (1.0 - t) * c[1] + (1.0 - s) * t * c[2] + s * t * c[3]
}

fn span(axis: &[f64]) -> (f64, f64) {
    (axis[0], axis[axis.len() - 1])
}

/// Alpha runs left to right and beta bottom to top.
fn contour_raster(grid: &SurfaceGrid, levels: &Levels, opts: &PlotOptions) -> Vec<Rgb> {
    let (a0, a1) = span(&grid.alphas);
    let (b0, b1) = span(&grid.betas);
    let mut px = Vec::with_capacity(opts.width * opts.height);
    for y in 0..opts.height {
        let beta = b1 - (y as f64 + 0.5) / opts.height as f64 * (b1 - b0);
        for x in 0..opts.width {
            let alpha = a0 + (x as f64 + 0.5) / opts.width as f64 * (a1 - a0);
            px.push(levels.color(sample(grid, alpha, beta)));
        }
    }
    px
}

fn hex(c: Rgb) -> String {
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Cell boundaries halfway between neighbouring axis points.
fn edges(axis: &[f64]) -> Vec<f64> {
    let n = axis.len();
    let mut e = Vec::with_capacity(n + 1);
    e.push(axis[0]);
    for k in 1..n {
        e.push(0.5 * (axis[k - 1] + axis[k]));
    }
    e.push(axis[n - 1]);
    e
}

fn contour_svg(grid: &SurfaceGrid, levels: &Levels, opts: &PlotOptions) -> String {
    let (w, h) = (opts.width as f64, opts.height as f64);
    let (a0, a1) = span(&grid.alphas);
    let (b0, b1) = span(&grid.betas);
    let sx = |a: f64| if a1 > a0 { (a - a0) / (a1 - a0) * w } else { 0.5 * w };
    let sy = |b: f64| if b1 > b0 { (b1 - b) / (b1 - b0) * h } else { 0.5 * h };
    let mut out = svg_open(opts);
    let (ea, eb) = (edges(&grid.alphas), edges(&grid.betas));
    for i in 0..grid.alphas.len() {
        for j in 0..grid.betas.len() {
            let (x0, x1) = (sx(ea[i]), sx(ea[i + 1]));
            let (y0, y1) = (sy(eb[j + 1]), sy(eb[j]));
            let (x0, x1) = if a1 > a0 { (x0, x1) } else { (0.0, w) };
            let (y0, y1) = if b1 > b0 { (y0, y1) } else { (0.0, h) };
            let _ = writeln!(
                out,
                r#"<rect x="{x0:.2}" y="{y0:.2}" width="{:.2}" height="{:.2}" fill="{}"/>"#,
                x1 - x0,
                y1 - y0,
                hex(levels.color(grid.get(i, j)))
            );
        }
    }
    for &level in levels.thresholds() {
        let mut d = String::new();
        for ((p, q), _) in isolines(grid, level) {
            let _ = write!(d, "M{:.2} {:.2}L{:.2} {:.2}", sx(p.0), sy(p.1), sx(q.0), sy(q.1));
        }
        if !d.is_empty() {
            let _ = writeln!(out, r#"<path d="{d}" fill="none" stroke="black" stroke-width="0.6"/>"#);
        }
    }
    out.push_str("</svg>\n");
    out
}

type Point = (f64, f64);

/// Marching-squares segments of the level set `loss = level`, in
/// `(alpha, beta)` coordinates. Squares touching an `inf` cell are skipped.
fn isolines(grid: &SurfaceGrid, level: f64) -> Vec<((Point, Point), usize)> {
    let mut segs = Vec::new();
    let (na, nb) = (grid.alphas.len(), grid.betas.len());
    for i in 0..na.saturating_sub(1) {
        for j in 0..nb.saturating_sub(1) {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let v: Vec<f64> = corners.iter().map(|&(a, b)| grid.get(a, b)).collect();
            if v.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let mut hits = Vec::with_capacity(4);
            for k in 0..4 {
                let (c0, c1) = (corners[k], corners[(k + 1) % 4]);
                let (v0, v1) = (v[k], v[(k + 1) % 4]);
                if (v0 < level) != (v1 < level) {
                    let t = (level - v0) / (v1 - v0);
                    let p0 = (grid.alphas[c0.0], grid.betas[c0.1]);
                    let p1 = (grid.alphas[c1.0], grid.betas[c1.1]);
                    hits.push((p0.0 + t * (p1.0 - p0.0), p0.1 + t * (p1.1 - p0.1)));
                }
            }
            for pair in hits.chunks_exact(2) {
                segs.push(((pair[0], pair[1]), i * nb + j));
            }
        }
    }
    segs
}

fn svg_open(opts: &PlotOptions) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n<rect width=\"{w}\" height=\"{h}\" fill=\"white\"/>\n",
        w = opts.width,
        h = opts.height
    )
}

struct Quad {
    corners: [Point; 4],
    depth: f64,
    color: Rgb,
}

/// Project the grid as a height field seen from a fixed camera and return
/// its quads in back-to-front order, in pixel coordinates.
fn surface_quads(grid: &SurfaceGrid, levels: &Levels, opts: &PlotOptions) -> Vec<Quad> {
    let (a0, a1) = span(&grid.alphas);
    let (b0, b1) = span(&grid.betas);
    let unit = |v: f64, lo: f64, hi: f64| if hi > lo { 2.0 * (v - lo) / (hi - lo) - 1.0 } else { 0.0 };
    let (az, el) = (std::f64::consts::FRAC_PI_4, 0.55f64);
    let (ca, sa, ce, se) = (az.cos(), az.sin(), el.cos(), el.sin());
    let light = {
        let l = [-0.4, -0.6, 0.7];
        let n: f64 = l[0] * l[0] + l[1] * l[1] + l[2] * l[2];
        [l[0] / n.sqrt(), l[1] / n.sqrt(), l[2] / n.sqrt()]
    };
    let world = |i: usize, j: usize| -> [f64; 3] {
        [
            unit(grid.alphas[i], a0, a1),
            unit(grid.betas[j], b0, b1),
            1.2 * levels.height(grid.get(i, j)),
        ]
    };
    let project = |p: [f64; 3]| -> (Point, f64) {
        let x = p[0] * ca - p[1] * sa;
        let y = p[0] * sa + p[1] * ca;
        ((x, p[2] * ce + y * se), y * ce - p[2] * se)
    };
    let (na, nb) = (grid.alphas.len(), grid.betas.len());
    let mut quads = Vec::new();
    for i in 0..na.saturating_sub(1).max(1).min(na) {
        for j in 0..nb.saturating_sub(1).max(1).min(nb) {
            let idx = [(i, j), ((i + 1).min(na - 1), j), ((i + 1).min(na - 1), (j + 1).min(nb - 1)), (i, (j + 1).min(nb - 1))];
            let w: Vec<[f64; 3]> = idx.iter().map(|&(a, b)| world(a, b)).collect();
            let e1 = [w[2][0] - w[0][0], w[2][1] - w[0][1], w[2][2] - w[0][2]];
            let e2 = [w[3][0] - w[1][0], w[3][1] - w[1][1], w[3][2] - w[1][2]];
            let n = [
                e1[1] * e2[2] - e1[2] * e2[1],
                e1[2] * e2[0] - e1[0] * e2[2],
                e1[0] * e2[1] - e1[1] * e2[0],
            ];
            let norm = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
            let shade = if norm > 0.0 {
                let lambert = ((n[0] * light[0] + n[1] * light[1] + n[2] * light[2]) / norm).abs();
                0.45 + 0.55 * lambert
            } else {
                1.0
            };
            let mean = idx.iter().map(|&(a, b)| grid.get(a, b)).sum::<f64>() / 4.0;
            let base = levels.color(mean);
            let color = base.map(|c| (c as f64 * shade).round().min(255.0) as u8);
            let proj: Vec<(Point, f64)> = w.iter().map(|&p| project(p)).collect();
            quads.push(Quad {
                corners: [proj[0].0, proj[1].0, proj[2].0, proj[3].0],
                depth: proj.iter().map(|p| p.1).sum::<f64>() / 4.0,
                color,
            });
        }
    }
    quads.sort_by(|a, b| b.depth.total_cmp(&a.depth));
    // Fit the projected scene into the canvas with a margin.
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for q in &quads {
        for &(x, y) in &q.corners {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
    }
    let (w, h) = (opts.width as f64, opts.height as f64);
    let scale = 0.9 * (w / (x1 - x0).max(1e-12)).min(h / (y1 - y0).max(1e-12));
    let (cx, cy) = (0.5 * (x0 + x1), 0.5 * (y0 + y1));
    for q in &mut quads {
        for c in &mut q.corners {
            *c = (0.5 * w + (c.0 - cx) * scale, 0.5 * h - (c.1 - cy) * scale);
        }
    }
    quads
}

fn fill_triangle(px: &mut [Rgb], opts: &PlotOptions, t: [Point; 3], color: Rgb) {
    let area = (t[1].0 - t[0].0) * (t[2].1 - t[0].1) - (t[2].0 - t[0].0) * (t[1].1 - t[0].1);
    if area == 0.0 {
        return;
    }
    let xs = t.iter().map(|p| p.0);
    let ys = t.iter().map(|p| p.1);
    let lo_x = xs.clone().fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let hi_x = (xs.fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(opts.width);
    let lo_y = ys.clone().fold(f64::INFINITY, f64::min).floor().max(0.0) as usize;
    let hi_y = (ys.fold(f64::NEG_INFINITY, f64::max).ceil() as usize).min(opts.height);
    let edge = |a: Point, b: Point, p: Point| (b.0 - a.0) * (p.1 - a.1) - (p.0 - a.0) * (b.1 - a.1);
    for y in lo_y..hi_y {
        for x in lo_x..hi_x {
            let p = (x as f64 + 0.5, y as f64 + 0.5);
            let w = [edge(t[1], t[2], p), edge(t[2], t[0], p), edge(t[0], t[1], p)];
            let inside = if area > 0.0 { w.iter().all(|&v| v >= 0.0) } else { w.iter().all(|&v| v <= 0.0) };
            if inside {
                px[y * opts.width + x] = color;
            }
        }
    }
}

fn surface_raster(grid: &SurfaceGrid, levels: &Levels, opts: &PlotOptions) -> Vec<Rgb> {
    let mut px = vec![[255u8; 3]; opts.width * opts.height];
    for q in surface_quads(grid, levels, opts) {
        let c = q.corners;
        fill_triangle(&mut px, opts, [c[0], c[1], c[2]], q.color);
        fill_triangle(&mut px, opts, [c[0], c[2], c[3]], q.color);
    }
    px
}

fn surface_svg(grid: &SurfaceGrid, levels: &Levels, opts: &PlotOptions) -> String {
    let mut out = svg_open(opts);
    for q in surface_quads(grid, levels, opts) {
        let pts: Vec<String> = q.corners.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let _ = writeln!(out, r#"<polygon points="{}" fill="{}"/>"#, pts.join(" "), hex(q.color));
    }
    out.push_str("</svg>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use advscape_core::landscape::{linspace, GridMetadata};

    fn grid(f: impl Fn(f64, f64) -> f64, n: usize) -> SurfaceGrid {
        let axis = linspace(-1.0, 1.0, n);
        let losses: Vec<Vec<f64>> = axis.iter().map(|&a| axis.iter().map(|&b| f(a, b)).collect()).collect();
        SurfaceGrid {
            center_loss: f(0.0, 0.0),
            alphas: axis.clone(),
            betas: axis,
            losses,
            metadata: GridMetadata::default(),
        }
    }

    #[test]
    fn levels_are_log_spaced() {
        let g = grid(|a, b| 0.01 + a * a + b * b, 5);
        let l = Levels::for_grid(&g, 4).unwrap();
        let t = l.thresholds();
        assert_eq!(t.len(), 3);
        assert!((t[1] / t[0] - t[2] / t[1]).abs() < 1e-9);
        assert_eq!(l.band(0.01), 0);
        assert_eq!(l.band(f64::INFINITY), 3);
    }

    #[test]
    fn zero_minimum_uses_smallest_positive() {
        let g = grid(|a, b| a * a + b * b, 5);
        let l = Levels::for_grid(&g, 3).unwrap();
        assert!(l.thresholds().iter().all(|&t| t > 0.0));
        assert_eq!(l.band(0.0), 0);
    }

    #[test]
    fn all_inf_is_rejected() {
        let g = grid(|_, _| f64::INFINITY, 3);
        let err = render(&g, &PlotOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }

    #[test]
    fn surface_svg_has_one_polygon_per_cell() {
        let g = grid(|a, b| 1.0 + a * a + b * b, 6);
        let opts = PlotOptions { style: Style::Surface, format: Format::Svg, ..PlotOptions::default() };
        let svg = String::from_utf8(render(&g, &opts).unwrap()).unwrap();
        assert_eq!(svg.matches("<polygon").count(), 25);
    }
}
