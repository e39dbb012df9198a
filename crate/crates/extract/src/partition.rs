use dfax_nn::Tensor;

use crate::error::ExtractError;

/// Partition of the d-dimensional state space into labeled cells.
///
/// An optional oblique root hyperplane splits the space in two; below it,
/// each side refines through axis-aligned threshold splits. Cell ids stay
/// dense in [0, n_leaves) across refinements: a split keeps the old id on
/// the low side and allocates the next id for the high side.
#[derive(Debug, Clone)]
pub struct Partition {
    dim: usize,
    root: Option<Hyperplane>,
    nodes: Vec<Node>,
    side_roots: Vec<usize>,
    n_leaves: usize,
}

#[derive(Debug, Clone)]
struct Hyperplane {
    weights: Vec<f64>,
    bias: f64,
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(usize),
    Split { split_dim: usize, threshold: f64, low: usize, high: usize },
}

impl Partition {
    /// One cell covering the whole space.
    pub fn trivial(dim: usize) -> Partition {
        assert!(dim > 0, "dimension must be positive");
        Partition {
            dim,
            root: None,
            nodes: vec![Node::Leaf(0)],
            side_roots: vec![0],
            n_leaves: 1,
        }
    }

    /// Two cells split by `weights . v + bias > 0`: cell 0 is the closed
    /// non-positive side, cell 1 the positive side.
    pub fn hyperplane(weights: Vec<f64>, bias: f64) -> Result<Partition, ExtractError> {
        if weights.is_empty() {
            return Err(ExtractError::InvalidConfig("hyperplane needs at least one dimension".into()));
        }
        if !bias.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(ExtractError::InvalidConfig("hyperplane coefficients must be finite".into()));
        }
        Ok(Partition {
            dim: weights.len(),
            root: Some(Hyperplane { weights, bias }),
            nodes: vec![Node::Leaf(0), Node::Leaf(1)],
            side_roots: vec![0, 1],
            n_leaves: 2,
        })
    }

    /// Root split along a two-way linear classifier's decision boundary:
    /// cell 1 is the region the classifier labels 1 (second logit strictly
    /// larger), cell 0 everything else, matching a tie-to-0 label rule.
    pub fn from_classifier(weights: &Tensor, bias: &Tensor) -> Result<Partition, ExtractError> {
        if weights.cols() != 2 || weights.rows() == 0 || bias.rows() != 1 || bias.cols() != 2 {
            return Err(ExtractError::InvalidConfig(format!(
                "classifier must be [d,2] weights with [1,2] bias, got [{},{}] and [{},{}]",
                weights.rows(),
                weights.cols(),
                bias.rows(),
                bias.cols()
            )));
        }
        let diff: Vec<f64> = (0..weights.rows()).map(|i| weights.at(i, 1) - weights.at(i, 0)).collect();
        Partition::hyperplane(diff, bias.at(0, 1) - bias.at(0, 0))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_leaves(&self) -> usize {
        self.n_leaves
    }

    /// The cell containing `v`.
    pub fn locate(&self, v: &[f64]) -> Result<usize, ExtractError> {
        match self.nodes[self.leaf_node(v)?] {
            Node::Leaf(id) => Ok(id),
            Node::Split { .. } => unreachable!("leaf_node returns leaves"),
        }
    }

    fn leaf_node(&self, v: &[f64]) -> Result<usize, ExtractError> {
        if v.len() != self.dim {
            return Err(ExtractError::DimensionMismatch { expected: self.dim, found: v.len() });
        }
        let side = match &self.root {
            None => 0,
            Some(plane) => {
                let score: f64 =
                    plane.weights.iter().zip(v).map(|(w, x)| w * x).sum::<f64>() + plane.bias;
                usize::from(score > 0.0)
            }
        };
        let mut index = self.side_roots[side];
        loop {
            match &self.nodes[index] {
                Node::Leaf(_) => return Ok(index),
                Node::Split { split_dim, threshold, low, high } => {
                    index = if v[*split_dim] <= *threshold { *low } else { *high };
                }
            }
        }
    }

    /// Splits `cell` so that `a` and `b` end up in different cells, along the
    /// coordinate where they differ most, thresholded at the midpoint. The
    /// low side keeps the old id; the new id is returned. Fails when the
    /// vectors cannot be told apart along any axis.
    pub fn refine(&mut self, cell: usize, a: &[f64], b: &[f64]) -> Result<usize, ExtractError> {
        let cell_a = self.locate(a)?;
        let cell_b = self.locate(b)?;
        if cell_a != cell || cell_b != cell {
            return Err(ExtractError::CellMismatch { expected: cell, found_a: cell_a, found_b: cell_b });
        }

        let mut split_dim = 0usize;
        let mut best = -1.0f64;
        for (i, (&x, &y)) in a.iter().zip(b).enumerate() {
            let gap = (x - y).abs();
            if gap > best {
                best = gap;
                split_dim = i;
            }
        }
        if best == 0.0 {
            return Err(ExtractError::CannotSplit { cell, reason: "vectors are identical".into() });
        }
        let threshold = (a[split_dim] + b[split_dim]) / 2.0;
        if (a[split_dim] <= threshold) == (b[split_dim] <= threshold) {
            // Adjacent floats can round the midpoint onto the larger value.
            return Err(ExtractError::CannotSplit {
                cell,
                reason: "coordinates too close for a separating threshold".into(),
            });
        }

        let node = self.leaf_node(a)?;
        let new_id = self.n_leaves;
        let low = self.nodes.len();
        self.nodes.push(Node::Leaf(cell));
        let high = self.nodes.len();
        self.nodes.push(Node::Leaf(new_id));
        self.nodes[node] = Node::Split { split_dim, threshold, low, high };
        self.n_leaves += 1;
        Ok(new_id)
    }
}
