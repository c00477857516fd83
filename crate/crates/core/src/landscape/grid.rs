//! Surface grids and their CSV form.
//!
//! The CSV has the header `alpha,beta,loss` and one row per cell in
//! alpha-major order. Numbers are written with 17 significant digits
//! (`{:.16e}`); cells whose loss was not finite are written as `inf`.

use std::fmt::Write;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct GridMetadata {
    pub model_id: String,
    pub eval_set_id: String,
    pub direction_seeds: (u64, u64),
    pub normalized: bool,
}

/// Losses `f(α, β)` on a lattice; `losses[i][j]` belongs to `(alphas[i], betas[j])`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGrid {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    pub losses: Vec<Vec<f64>>,
    pub center_loss: f64,
    pub metadata: GridMetadata,
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub(crate) fn check_axis(name: &str, axis: &[f64]) -> Result<()> {
    if axis.is_empty() {
        return Err(invalid!("{name} axis is empty"));
    }
    if axis.iter().any(|v| !v.is_finite()) {
        return Err(invalid!("{name} axis has non-finite values"));
    }
    if axis.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid!("{name} axis must be strictly increasing"));
    }
    Ok(())
}

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else {
        format!("{v:.16e}")
    }
}

impl SurfaceGrid {
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.losses[i][j]
    }

    /// Index of `(0, 0)`, if both axes contain zero.
    pub fn origin(&self) -> Option<(usize, usize)> {
        let i = self.alphas.iter().position(|&a| a == 0.0)?;
        let j = self.betas.iter().position(|&b| b == 0.0)?;
        Some((i, j))
    }

    pub fn finite_range(&self) -> Option<(f64, f64)> {
        let mut it = self.losses.iter().flatten().copied().filter(|v| v.is_finite());
        let first = it.next()?;
        Some(it.fold((first, first), |(lo, hi), v| (lo.min(v), hi.max(v))))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta,loss\n");
        for (i, a) in self.alphas.iter().enumerate() {
            for (j, b) in self.betas.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{},{},{}",
                    fmt_num(*a),
                    fmt_num(*b),
                    fmt_num(self.losses[i][j])
                );
            }
        }
        out
    }

    /// Parse a CSV grid. Metadata is not part of the CSV and comes back empty;
    /// `center_loss` is taken from the `(0, 0)` cell when present.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next().map(str::trim) != Some("alpha,beta,loss") {
            return Err(invalid!("grid CSV must start with the header alpha,beta,loss"));
        }
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse = |s: &str| -> Result<f64> {
                match s.trim() {
                    "inf" => Ok(f64::INFINITY),
                    t => t
                        .parse::<f64>()
                        .map_err(|_| invalid!("line {}: bad number {t:?}", n + 2)),
                }
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(invalid!("line {}: expected 3 fields", n + 2));
            }
            rows.push((parse(fields[0])?, parse(fields[1])?, parse(fields[2])?));
        }
        if rows.is_empty() {
            return Err(invalid!("grid CSV has no cells"));
        }
        let nb = rows.iter().take_while(|r| r.0 == rows[0].0).count();
        if rows.len() % nb != 0 {
            return Err(invalid!("grid CSV is not rectangular"));
        }
        let na = rows.len() / nb;
        let alphas: Vec<f64> = (0..na).map(|i| rows[i * nb].0).collect();
        let betas: Vec<f64> = rows[..nb].iter().map(|r| r.1).collect();
        check_axis("alpha", &alphas)?;
        check_axis("beta", &betas)?;
        let mut losses = vec![vec![0.0; nb]; na];
        for (k, &(a, b, l)) in rows.iter().enumerate() {
            let (i, j) = (k / nb, k % nb);
            if a != alphas[i] || b != betas[j] {
                return Err(invalid!("grid CSV row {} is out of alpha-major order", k + 2));
            }
            if l.is_nan() || l < 0.0 {
                return Err(invalid!("grid CSV row {} has invalid loss", k + 2));
            }
            losses[i][j] = l;
        }
        let mut grid = SurfaceGrid {
            alphas,
            betas,
            losses,
            center_loss: f64::NAN,
            metadata: GridMetadata::default(),
        };
        if let Some((i, j)) = grid.origin() {
            grid.center_loss = grid.losses[i][j];
        }
        Ok(grid)
    }

    /// Sidecar text: `key = value` lines describing how the grid was made.
    pub fn manifest(&self) -> String {
        let m = &self.metadata;
        let axis = |v: &[f64]| {
            format!(
                "{}:{}:{}",
                fmt_num(*v.first().unwrap_or(&0.0)),
                fmt_num(*v.last().unwrap_or(&0.0)),
                v.len()
            )
        };
        format!(
            "model = {}\neval_set = {}\ndelta_seed = {}\neta_seed = {}\nnormalized = {}\nalphas = {}\nbetas = {}\ncenter_loss = {}\n",
            m.model_id,
            m.eval_set_id,
            m.direction_seeds.0,
            m.direction_seeds.1,
            m.normalized,
            axis(&self.alphas),
            axis(&self.betas),
            fmt_num(self.center_loss)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn linspace_hits_zero() {
        let a = linspace(-1.0, 1.0, 51);
        assert_eq!(a.len(), 51);
        assert_eq!(a[25], 0.0);
        assert_eq!(a[0], -1.0);
        assert_eq!(a[50], 1.0);
    }

    #[test]
    fn rejects_bad_csv() {
        assert!(SurfaceGrid::from_csv("a,b,c\n").is_err());
        assert!(SurfaceGrid::from_csv("alpha,beta,loss\n").is_err());
        assert!(SurfaceGrid::from_csv("alpha,beta,loss\n0,0,x\n").is_err());
        assert!(SurfaceGrid::from_csv("alpha,beta,loss\n0,0,1\n0,1,1\n1,0,1\n").is_err());
        assert!(SurfaceGrid::from_csv("alpha,beta,loss\n0,0,-1\n").is_err());
    }

    #[test]
    fn inf_token() {
        let g = SurfaceGrid::from_csv("alpha,beta,loss\n0,0,1.5\n0,1,inf\n").unwrap();
        assert_eq!(g.losses[0][1], f64::INFINITY);
        assert!(g.to_csv().contains(",inf\n"));
        assert_eq!(g.center_loss, 1.5);
    }

    proptest! {
        #[test]
        fn csv_rewrite_is_byte_identical(
            na in 1usize..5,
            nb in 1usize..5,
            vals in proptest::collection::vec(0.0f64..1e6, 25),
        ) {
            let alphas = linspace(-1.3, 0.7, na);
            let betas = linspace(-0.1, 2.9, nb);
            let losses: Vec<Vec<f64>> = (0..na)
                .map(|i| (0..nb).map(|j| if (i + j) % 7 == 6 { f64::INFINITY } else { vals[i * 5 + j] / 3.0 }).collect())
                .collect();
            let grid = SurfaceGrid { alphas, betas, losses, center_loss: 0.0, metadata: GridMetadata::default() };
            let first = grid.to_csv();
            let again = SurfaceGrid::from_csv(&first).unwrap().to_csv();
            prop_assert_eq!(first, again);
        }
    }
}
