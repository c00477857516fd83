//! Model weights organized as layers of filters.

use crate::error::{shape_err, Result};
use crate::tensor::Tensor;

/// What a parameter block is. Each conv output channel and each dense output
/// neuron is one filter; bias and batch-statistic vectors are a single filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Conv,
    Dense,
    Bias,
    BatchStat,
}

impl LayerKind {
    pub fn tag(self) -> u8 {
        match self {
            LayerKind::Conv => 0,
            LayerKind::Dense => 1,
            LayerKind::Bias => 2,
            LayerKind::BatchStat => 3,
        }
    }

    pub fn from_tag(tag: u8) -> Option<Self> {
        Some(match tag {
            0 => LayerKind::Conv,
            1 => LayerKind::Dense,
            2 => LayerKind::Bias,
            3 => LayerKind::BatchStat,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamLayer {
    kind: LayerKind,
    filters: Vec<Tensor>,
}

impl ParamLayer {
    pub fn new(kind: LayerKind, filters: Vec<Tensor>) -> Self {
        Self { kind, filters }
    }

    pub fn kind(&self) -> LayerKind {
        self.kind
    }

    pub fn filters(&self) -> &[Tensor] {
        &self.filters
    }

    pub fn filters_mut(&mut self) -> &mut [Tensor] {
        &mut self.filters
    }

    /// Filter `j`, the block `θ_{i,j}` that filter normalization rescales.
    pub fn filter(&self, j: usize) -> &Tensor {
        &self.filters[j]
    }
}

/// Weights of a whole model: an ordered list of parameter blocks.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParamSet {
    layers: Vec<ParamLayer>,
}

impl ParamSet {
    pub fn new(layers: Vec<ParamLayer>) -> Self {
        Self { layers }
    }

    pub fn layers(&self) -> &[ParamLayer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [ParamLayer] {
        &mut self.layers
    }

    pub fn filter(&self, layer: usize, j: usize) -> &Tensor {
        &self.layers[layer].filters[j]
    }

    pub fn len(&self) -> usize {
        self.filters().map(Tensor::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every filter, in layer order.
    pub fn filters(&self) -> impl Iterator<Item = &Tensor> {
        self.layers.iter().flat_map(|l| l.filters.iter())
    }

    pub fn filters_mut(&mut self) -> impl Iterator<Item = &mut Tensor> {
        self.layers.iter_mut().flat_map(|l| l.filters.iter_mut())
    }

    /// A zero-valued set with the same block structure.
    pub fn zeros_like(&self) -> Self {
        self.map(|_| 0.0)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            layers: self
                .layers
                .iter()
                .map(|l| ParamLayer {
                    kind: l.kind,
                    filters: l.filters.iter().map(|t| t.map(&f)).collect(),
                })
                .collect(),
        }
    }

    /// All values concatenated in layer/filter/row-major order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for f in self.filters() {
            out.extend_from_slice(f.data());
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten) using `self` as the template.
    pub fn with_values(&self, values: &[f64]) -> Result<Self> {
        if values.len() != self.len() {
            return Err(shape_err!(
                "{} values for a parameter set of {}",
                values.len(),
                self.len()
            ));
        }
        let mut out = self.clone();
        let mut at = 0;
        for f in out.filters_mut() {
            let n = f.len();
            f.data_mut().copy_from_slice(&values[at..at + n]);
            at += n;
        }
        Ok(out)
    }

    /// Same number of blocks, kinds and filter shapes.
    pub fn is_congruent(&self, other: &ParamSet) -> bool {
        self.layers.len() == other.layers.len()
            && self.layers.iter().zip(&other.layers).all(|(a, b)| {
                a.kind == b.kind
                    && a.filters.len() == b.filters.len()
                    && a.filters
                        .iter()
                        .zip(&b.filters)
                        .all(|(x, y)| x.shape() == y.shape())
            })
    }

    pub(crate) fn ensure_congruent(&self, other: &ParamSet, what: &str) -> Result<()> {
        if self.is_congruent(other) {
            Ok(())
        } else {
            Err(shape_err!("{what} is not shape-congruent with the parameters"))
        }
    }

    /// Elementwise combination with a congruent set.
    pub fn zip_with(&self, other: &ParamSet, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.ensure_congruent(other, "operand")?;
        let mut out = self.clone();
        for (dst, src) in out.filters_mut().zip(other.filters()) {
            for (d, s) in dst.data_mut().iter_mut().zip(src.data()) {
                *d = f(*d, *s);
            }
        }
        Ok(out)
    }

    pub fn all_finite(&self) -> bool {
        self.filters().all(Tensor::all_finite)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ParamSet {
        ParamSet::new(vec![
            ParamLayer::new(
                LayerKind::Dense,
                vec![Tensor::from_vec(vec![1.0, 2.0]), Tensor::from_vec(vec![3.0, 4.0])],
            ),
            ParamLayer::new(LayerKind::Bias, vec![Tensor::from_vec(vec![5.0, 6.0])]),
        ])
    }

    #[test]
    fn flatten_and_rebuild() {
        let p = sample();
        let flat = p.flatten();
        assert_eq!(flat, vec![1., 2., 3., 4., 5., 6.]);
        assert_eq!(p.with_values(&flat).unwrap(), p);
        assert!(p.with_values(&flat[1..]).is_err());
    }

    #[test]
    fn congruence() {
        let p = sample();
        assert!(p.is_congruent(&p.zeros_like()));
        let other = ParamSet::new(vec![ParamLayer::new(LayerKind::Bias, vec![])]);
        assert!(!p.is_congruent(&other));
        assert!(p.zip_with(&other, |a, _| a).is_err());
    }

    #[test]
    fn kind_tags_round_trip() {
        for k in [LayerKind::Conv, LayerKind::Dense, LayerKind::Bias, LayerKind::BatchStat] {
            assert_eq!(LayerKind::from_tag(k.tag()), Some(k));
        }
        assert_eq!(LayerKind::from_tag(9), None);
    }
}
