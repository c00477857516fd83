use crate::attacks::AttackConfig;
use crate::error::{invalid, shape_err, Result};
use crate::tensor::Tensor;

/// Where a dataset's samples came from.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Clean,
    /// Every sample was produced by this attack from a clean source.
    Attack(AttackConfig),
    /// The first `clean` samples are clean; the rest are their adversarial
    /// counterparts, in the same order.
    Union { clean: usize, attack: AttackConfig },
}

/// Images `[N, C, H, W]` with values in `[0, 1]` and one class index each.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    images: Tensor,
    labels: Vec<usize>,
    provenance: Provenance,
}

impl LabeledDataset {
    pub fn new(images: Tensor, labels: Vec<usize>, provenance: Provenance) -> Result<Self> {
        let n = match images.shape() {
            [n, c, h, w] if *c > 0 && *h > 0 && *w > 0 => *n,
            s => return Err(shape_err!("dataset images must be [N, C, H, W], got {s:?}")),
        };
        if n == 0 {
            return Err(invalid!("a dataset needs at least one sample"));
        }
        if labels.len() != n {
            return Err(shape_err!("{} labels for {n} images", labels.len()));
        }
        if let Some(k) = images.data().iter().position(|v| !(0.0..=1.0).contains(v)) {
            return Err(invalid!(
                "pixel {} of image {} is {}, outside [0, 1]",
                k % images.row_len(),
                k / images.row_len(),
                images.data()[k]
            ));
        }
        if let Provenance::Union { clean, .. } = provenance {
            if clean * 2 != n {
                return Err(invalid!("union of {clean} clean samples must hold {} samples, has {n}", clean * 2));
            }
        }
        Ok(Self {
            images,
            labels,
            provenance,
        })
    }

    pub fn clean(images: Tensor, labels: Vec<usize>) -> Result<Self> {
        Self::new(images, labels, Provenance::Clean)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn images(&self) -> &Tensor {
        &self.images
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Result<Self> {
        if let Provenance::Union { clean, .. } = provenance {
            if clean * 2 != self.len() {
                return Err(invalid!("union provenance does not fit {} samples", self.len()));
            }
        }
        self.provenance = provenance;
        Ok(self)
    }

    /// `[C, H, W]`.
    pub fn extent(&self) -> [usize; 3] {
        let s = self.images.shape();
        [s[1], s[2], s[3]]
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn image(&self, i: usize) -> Tensor {
        let [c, h, w] = self.extent();
        Tensor::new(vec![c, h, w], self.images.row(i).to_vec()).expect("row extent")
    }

    /// Whether sample `i` is an adversarial counterpart.
    pub fn is_adversarial(&self, i: usize) -> bool {
        match self.provenance {
            Provenance::Clean => false,
            Provenance::Attack(_) => true,
            Provenance::Union { clean, .. } => i >= clean,
        }
    }

    /// The samples at `indices`, in order, as a clean-or-attack subset.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if let Some(&i) = indices.iter().find(|&&i| i >= self.len()) {
            return Err(invalid!("index {i} out of range for {} samples", self.len()));
        }
        let provenance = match &self.provenance {
            Provenance::Union { .. } => Provenance::Clean,
            p => p.clone(),
        };
        Self::new(
            self.images.gather_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            provenance,
        )
    }

    /// The first `n` samples (or all, if fewer).
    pub fn head(&self, n: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }
}
