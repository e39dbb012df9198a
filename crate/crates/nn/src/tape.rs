use crate::kernels::{mm_nn, mm_nt, mm_tn};
use crate::{NnError, ParamStore, Tensor};
use std::collections::HashMap;

/// Epsilon inside the layer-norm variance square root.
pub const LAYER_NORM_EPS: f64 = 1e-12;

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodeId(usize);

/// Normalization axis for softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

enum Op {
    Constant,
    Param(String),
    MatMul(NodeId, NodeId),
    /// a · bᵀ, with b stored row-major as [n, k].
    MatMulNT(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// Matrix plus a `[1, n]` row broadcast over rows.
    AddRow(NodeId, NodeId),
    AddScalar(NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    /// Matrix times a `[1, n]` row broadcast over rows.
    MulRow(NodeId, NodeId),
    Scale(NodeId, f64),
    SliceRows(NodeId, usize),
    SliceCols(NodeId, usize),
    ConcatCols(NodeId, NodeId),
    Embedding(NodeId, Vec<usize>),
    LayerNorm(NodeId),
    Softmax(NodeId, Axis),
    Relu(NodeId),
    Gelu(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Abs(NodeId),
    Sum(NodeId),
    CrossEntropy(NodeId, usize),
}

struct Node {
    op: Op,
    value: Tensor,
    /// Op-specific cache reused by backward (inverse std per row for
    /// layer norm, class probabilities for cross entropy).
    aux: Vec<f64>,
}

/// Recorded forward pass: an append-only operation graph where every node's
/// inputs precede it, plus the values computed along the way.
#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
    param_ids: HashMap<String, NodeId>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    /// Scalar payload of a `[1, 1]` node.
    pub fn item(&self, id: NodeId) -> f64 {
        self.nodes[id.0].value.item()
    }

    fn push(&mut self, op: Op, value: Tensor, aux: Vec<f64>, context: &str) -> Result<NodeId, NnError> {
        value.ensure_finite(context)?;
        self.nodes.push(Node { op, value, aux });
        Ok(NodeId(self.nodes.len() - 1))
    }

    /// Record a value that requires no gradient.
    pub fn constant(&mut self, value: Tensor) -> Result<NodeId, NnError> {
        self.push(Op::Constant, value, Vec::new(), "constant")
    }

    /// Record a named parameter leaf. Repeated requests for the same name
    /// return the same node, so gradients accumulate in one place.
    pub fn param(&mut self, store: &ParamStore, name: &str) -> Result<NodeId, NnError> {
        if let Some(&id) = self.param_ids.get(name) {
            return Ok(id);
        }
        let value = store.get(name)?.clone();
        let id = self.push(Op::Param(name.to_string()), value, Vec::new(), "param")?;
        self.param_ids.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        let (va, vb) = (self.value(a), self.value(b));
        let (m, k, n) = (va.rows(), va.cols(), vb.cols());
        if vb.rows() != k {
            return Err(NnError::ShapeMismatch(format!(
                "matmul {:?} x {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let mut out = vec![0.0; m * n];
        mm_nn(va.data(), vb.data(), m, k, n, &mut out);
        let t = Tensor::matrix(m, n, out)?;
        self.push(Op::MatMul(a, b), t, Vec::new(), "matmul")
    }

    /// a · bᵀ for b stored as [n, k]; the attention-score product.
    pub fn matmul_nt(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        let (va, vb) = (self.value(a), self.value(b));
        let (m, k, n) = (va.rows(), va.cols(), vb.rows());
        if vb.cols() != k {
            return Err(NnError::ShapeMismatch(format!(
                "matmul_nt {:?} x {:?}ᵀ",
                va.shape(),
                vb.shape()
            )));
        }
        let mut out = vec![0.0; m * n];
        mm_nt(va.data(), vb.data(), m, k, n, &mut out);
        let t = Tensor::matrix(m, n, out)?;
        self.push(Op::MatMulNT(a, b), t, Vec::new(), "matmul_nt")
    }

    fn zip_same_shape(
        &mut self,
        a: NodeId,
        b: NodeId,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
        context: &str,
    ) -> Result<NodeId, NnError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.shape() != vb.shape() {
            return Err(NnError::ShapeMismatch(format!(
                "{context} {:?} vs {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let data: Vec<f64> = va.data().iter().zip(vb.data()).map(|(&x, &y)| f(x, y)).collect();
        let t = Tensor::new(va.shape().to_vec(), data)?;
        self.push(op, t, Vec::new(), context)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.zip_same_shape(a, b, |x, y| x + y, Op::Add(a, b), "add")
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.zip_same_shape(a, b, |x, y| x - y, Op::Sub(a, b), "sub")
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        self.zip_same_shape(a, b, |x, y| x * y, Op::Mul(a, b), "mul")
    }

    fn row_broadcast(
        &mut self,
        a: NodeId,
        row: NodeId,
        f: impl Fn(f64, f64) -> f64,
        op: Op,
        context: &str,
    ) -> Result<NodeId, NnError> {
        let (va, vr) = (self.value(a), self.value(row));
        if vr.rows() != 1 || vr.cols() != va.cols() {
            return Err(NnError::ShapeMismatch(format!(
                "{context} {:?} with row {:?}",
                va.shape(),
                vr.shape()
            )));
        }
        let n = va.cols();
        let data: Vec<f64> = va
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| f(x, vr.data()[i % n]))
            .collect();
        let t = Tensor::matrix(va.rows(), n, data)?;
        self.push(op, t, Vec::new(), context)
    }

    /// Broadcast-add a `[1, n]` row to every row of a `[m, n]` matrix.
    pub fn add_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId, NnError> {
        self.row_broadcast(a, row, |x, y| x + y, Op::AddRow(a, row), "add_row")
    }

    /// Broadcast-multiply each row of a `[m, n]` matrix by a `[1, n]` row.
    pub fn mul_row(&mut self, a: NodeId, row: NodeId) -> Result<NodeId, NnError> {
        self.row_broadcast(a, row, |x, y| x * y, Op::MulRow(a, row), "mul_row")
    }

    pub fn add_scalar(&mut self, a: NodeId, c: f64) -> Result<NodeId, NnError> {
        let va = self.value(a);
        let data: Vec<f64> = va.data().iter().map(|&x| x + c).collect();
        let t = Tensor::new(va.shape().to_vec(), data)?;
        self.push(Op::AddScalar(a), t, Vec::new(), "add_scalar")
    }

    pub fn scale(&mut self, a: NodeId, s: f64) -> Result<NodeId, NnError> {
        let va = self.value(a);
        let data: Vec<f64> = va.data().iter().map(|&x| x * s).collect();
        let t = Tensor::new(va.shape().to_vec(), data)?;
        self.push(Op::Scale(a, s), t, Vec::new(), "scale")
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId, NnError> {
        let va = self.value(a);
        if start >= end || end > va.rows() {
            return Err(NnError::ShapeMismatch(format!(
                "slice_rows {start}..{end} of {:?}",
                va.shape()
            )));
        }
        let n = va.cols();
        let data = va.data()[start * n..end * n].to_vec();
        let t = Tensor::matrix(end - start, n, data)?;
        self.push(Op::SliceRows(a, start), t, Vec::new(), "slice_rows")
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, end: usize) -> Result<NodeId, NnError> {
        let va = self.value(a);
        if start >= end || end > va.cols() {
            return Err(NnError::ShapeMismatch(format!(
                "slice_cols {start}..{end} of {:?}",
                va.shape()
            )));
        }
        let (m, n) = (va.rows(), va.cols());
        let width = end - start;
        let mut data = Vec::with_capacity(m * width);
        for r in 0..m {
            data.extend_from_slice(&va.data()[r * n + start..r * n + end]);
        }
        let t = Tensor::matrix(m, width, data)?;
        self.push(Op::SliceCols(a, start), t, Vec::new(), "slice_cols")
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, NnError> {
        let (va, vb) = (self.value(a), self.value(b));
        if va.rows() != vb.rows() {
            return Err(NnError::ShapeMismatch(format!(
                "concat_cols {:?} with {:?}",
                va.shape(),
                vb.shape()
            )));
        }
        let (m, ca, cb) = (va.rows(), va.cols(), vb.cols());
        let mut data = Vec::with_capacity(m * (ca + cb));
        for r in 0..m {
            data.extend_from_slice(va.row_slice(r));
            data.extend_from_slice(vb.row_slice(r));
        }
        let t = Tensor::matrix(m, ca + cb, data)?;
        self.push(Op::ConcatCols(a, b), t, Vec::new(), "concat_cols")
    }

    /// Gather rows of an embedding table: output row i is table[ids[i]].
    pub fn embedding(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId, NnError> {
        let vt = self.value(table);
        if ids.is_empty() {
            return Err(NnError::ShapeMismatch("embedding of an empty id list".into()));
        }
        if let Some(&bad) = ids.iter().find(|&&i| i >= vt.rows()) {
            return Err(NnError::ShapeMismatch(format!(
                "embedding id {bad} out of range for table with {} rows",
                vt.rows()
            )));
        }
        let d = vt.cols();
        let mut data = Vec::with_capacity(ids.len() * d);
        for &i in ids {
            data.extend_from_slice(vt.row_slice(i));
        }
        let t = Tensor::matrix(ids.len(), d, data)?;
        self.push(Op::Embedding(table, ids.to_vec()), t, Vec::new(), "embedding")
    }

    /// Per-row standardization: (x − mean) / sqrt(var + ε), no affine part.
    /// Output rows have mean 0 and variance 1 (up to ε) by construction.
    pub fn layer_norm(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        let va = self.value(a);
        let (m, n) = (va.rows(), va.cols());
        let mut data = Vec::with_capacity(m * n);
        let mut inv_std = Vec::with_capacity(m);
        for r in 0..m {
            let row = va.row_slice(r);
            let mean = row.iter().sum::<f64>() / n as f64;
            let var = row.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
            let inv = 1.0 / (var + LAYER_NORM_EPS).sqrt();
            inv_std.push(inv);
            data.extend(row.iter().map(|&x| (x - mean) * inv));
        }
        let t = Tensor::matrix(m, n, data)?;
        self.push(Op::LayerNorm(a), t, inv_std, "layer_norm")
    }

    /// Softmax along the given axis; each row (or column) sums to one.
    pub fn softmax(&mut self, a: NodeId, axis: Axis) -> Result<NodeId, NnError> {
        let va = self.value(a);
        let (m, n) = (va.rows(), va.cols());
        let mut data = vec![0.0; m * n];
        match axis {
            Axis::Rows => {
                for r in 0..m {
                    softmax_slice(va.row_slice(r), &mut data[r * n..(r + 1) * n]);
                }
            }
            Axis::Cols => {
                let mut col = vec![0.0; m];
                let mut out = vec![0.0; m];
                for c in 0..n {
                    for r in 0..m {
                        col[r] = va.at(r, c);
                    }
                    softmax_slice(&col, &mut out);
                    for r in 0..m {
                        data[r * n + c] = out[r];
                    }
                }
            }
        }
        let t = Tensor::matrix(m, n, data)?;
        self.push(Op::Softmax(a, axis), t, Vec::new(), "softmax")
    }

    fn map_unary(
        &mut self,
        a: NodeId,
        f: impl Fn(f64) -> f64,
        op: Op,
        context: &str,
    ) -> Result<NodeId, NnError> {
        let va = self.value(a);
        let data: Vec<f64> = va.data().iter().map(|&x| f(x)).collect();
        let t = Tensor::new(va.shape().to_vec(), data)?;
        self.push(op, t, Vec::new(), context)
    }

    pub fn relu(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        self.map_unary(a, |x| x.max(0.0), Op::Relu(a), "relu")
    }

    /// Tanh-approximation gelu.
    pub fn gelu(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        self.map_unary(a, gelu_value, Op::Gelu(a), "gelu")
    }

    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        self.map_unary(a, f64::tanh, Op::Tanh(a), "tanh")
    }

    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        self.map_unary(a, |x| 1.0 / (1.0 + (-x).exp()), Op::Sigmoid(a), "sigmoid")
    }

    pub fn abs(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        self.map_unary(a, f64::abs, Op::Abs(a), "abs")
    }

    /// Sum of all entries, as a `[1, 1]` scalar.
    pub fn sum(&mut self, a: NodeId) -> Result<NodeId, NnError> {
        let total: f64 = self.value(a).data().iter().sum();
        self.push(Op::Sum(a), Tensor::scalar(total), Vec::new(), "sum")
    }

    /// Fused softmax + negative log likelihood for a single `[1, C]` logits
    /// row against an integer class label.
    pub fn cross_entropy(&mut self, logits: NodeId, label: usize) -> Result<NodeId, NnError> {
        let vl = self.value(logits);
        if vl.rows() != 1 || vl.cols() < 2 {
            return Err(NnError::ShapeMismatch(format!(
                "cross_entropy expects one logits row with >= 2 classes, got {:?}",
                vl.shape()
            )));
        }
        if label >= vl.cols() {
            return Err(NnError::ShapeMismatch(format!(
                "label {label} out of range for {} classes",
                vl.cols()
            )));
        }
        let row = vl.row_slice(0);
        let mut probs = vec![0.0; row.len()];
        softmax_slice(row, &mut probs);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|&x| (x - max).exp()).sum::<f64>().ln();
        let loss = lse - row[label];
        self.push(Op::CrossEntropy(logits, label), Tensor::scalar(loss), probs, "cross_entropy")
    }

    /// Reverse-mode gradients of a scalar loss with respect to every
    /// parameter in `params`. Parameters the loss never touched get zero
    /// gradients of the matching shape.
    pub fn backward(&self, loss: NodeId, params: &ParamStore) -> Result<ParamStore, NnError> {
        let loss_value = &self.nodes[loss.0].value;
        if loss_value.len() != 1 {
            return Err(NnError::NotScalar(loss_value.shape().to_vec()));
        }
        let mut grads: Vec<Option<Vec<f64>>> = Vec::with_capacity(loss.0 + 1);
        grads.resize_with(loss.0 + 1, || None);
        grads[loss.0] = Some(vec![1.0]);

        let mut out = ParamStore::new();
        for id in (0..=loss.0).rev() {
            let Some(g) = grads[id].take() else { continue };
            let node = &self.nodes[id];
            match &node.op {
                Op::Constant => {}
                Op::Param(name) => {
                    let tensor = Tensor::new(node.value.shape().to_vec(), g)
                        .map_err(|_| NnError::NonFinite(format!("gradient of '{name}'")))?;
                    out.insert(name.clone(), tensor);
                }
                Op::MatMul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, k, n) = (va.rows(), va.cols(), vb.cols());
                    with_grad(&mut grads, a.0, m * k, |da| {
                        mm_nt(&g, vb.data(), m, n, k, da);
                    });
                    with_grad(&mut grads, b.0, k * n, |db| {
                        mm_tn(va.data(), &g, m, k, n, db);
                    });
                }
                Op::MatMulNT(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (m, k, n) = (va.rows(), va.cols(), vb.rows());
                    with_grad(&mut grads, a.0, m * k, |da| {
                        mm_nn(&g, vb.data(), m, n, k, da);
                    });
                    with_grad(&mut grads, b.0, n * k, |db| {
                        mm_tn(&g, va.data(), m, n, k, db);
                    });
                }
                Op::Add(a, b) => {
                    add_assign(&mut grads, a.0, &g);
                    add_assign(&mut grads, b.0, &g);
                }
                Op::AddScalar(a) => add_assign(&mut grads, a.0, &g),
                Op::Sub(a, b) => {
                    add_assign(&mut grads, a.0, &g);
                    with_grad(&mut grads, b.0, g.len(), |db| {
                        for (d, &gv) in db.iter_mut().zip(&g) {
                            *d -= gv;
                        }
                    });
                }
                Op::AddRow(a, row) => {
                    add_assign(&mut grads, a.0, &g);
                    let n = self.nodes[row.0].value.cols();
                    with_grad(&mut grads, row.0, n, |dr| {
                        for (i, &gv) in g.iter().enumerate() {
                            dr[i % n] += gv;
                        }
                    });
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    with_grad(&mut grads, a.0, g.len(), |da| {
                        for ((d, &gv), &bv) in da.iter_mut().zip(&g).zip(vb.data()) {
                            *d += gv * bv;
                        }
                    });
                    with_grad(&mut grads, b.0, g.len(), |db| {
                        for ((d, &gv), &av) in db.iter_mut().zip(&g).zip(va.data()) {
                            *d += gv * av;
                        }
                    });
                }
                Op::MulRow(a, row) => {
                    let (va, vr) = (&self.nodes[a.0].value, &self.nodes[row.0].value);
                    let n = vr.cols();
                    with_grad(&mut grads, a.0, g.len(), |da| {
                        for (i, (d, &gv)) in da.iter_mut().zip(&g).enumerate() {
                            *d += gv * vr.data()[i % n];
                        }
                    });
                    with_grad(&mut grads, row.0, n, |dr| {
                        for (i, &gv) in g.iter().enumerate() {
                            dr[i % n] += gv * va.data()[i];
                        }
                    });
                }
                Op::Scale(a, s) => {
                    let s = *s;
                    with_grad(&mut grads, a.0, g.len(), |da| {
                        for (d, &gv) in da.iter_mut().zip(&g) {
                            *d += s * gv;
                        }
                    });
                }
                Op::SliceRows(a, start) => {
                    let va = &self.nodes[a.0].value;
                    let offset = start * va.cols();
                    with_grad(&mut grads, a.0, va.len(), |da| {
                        for (d, &gv) in da[offset..offset + g.len()].iter_mut().zip(&g) {
                            *d += gv;
                        }
                    });
                }
                Op::SliceCols(a, start) => {
                    let va = &self.nodes[a.0].value;
                    let (n, width) = (va.cols(), node.value.cols());
                    with_grad(&mut grads, a.0, va.len(), |da| {
                        for r in 0..node.value.rows() {
                            for c in 0..width {
                                da[r * n + start + c] += g[r * width + c];
                            }
                        }
                    });
                }
                Op::ConcatCols(a, b) => {
                    let (va, vb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
                    let (ca, cb) = (va.cols(), vb.cols());
                    let total = ca + cb;
                    with_grad(&mut grads, a.0, va.len(), |da| {
                        for r in 0..va.rows() {
                            for c in 0..ca {
                                da[r * ca + c] += g[r * total + c];
                            }
                        }
                    });
                    with_grad(&mut grads, b.0, vb.len(), |db| {
                        for r in 0..vb.rows() {
                            for c in 0..cb {
                                db[r * cb + c] += g[r * total + ca + c];
                            }
                        }
                    });
                }
                Op::Embedding(table, ids) => {
                    let vt = &self.nodes[table.0].value;
                    let d = vt.cols();
                    with_grad(&mut grads, table.0, vt.len(), |dt| {
                        for (row, &id) in ids.iter().enumerate() {
                            for c in 0..d {
                                dt[id * d + c] += g[row * d + c];
                            }
                        }
                    });
                }
                Op::LayerNorm(a) => {
                    let y = &node.value;
                    let (m, n) = (y.rows(), y.cols());
                    with_grad(&mut grads, a.0, m * n, |da| {
                        for r in 0..m {
                            let yr = y.row_slice(r);
                            let gr = &g[r * n..(r + 1) * n];
                            let mean_g = gr.iter().sum::<f64>() / n as f64;
                            let mean_gy =
                                gr.iter().zip(yr).map(|(&gv, &yv)| gv * yv).sum::<f64>() / n as f64;
                            let inv = node.aux[r];
                            for c in 0..n {
                                da[r * n + c] += inv * (gr[c] - mean_g - yr[c] * mean_gy);
                            }
                        }
                    });
                }
                Op::Softmax(a, axis) => {
                    let p = &node.value;
                    let (m, n) = (p.rows(), p.cols());
                    with_grad(&mut grads, a.0, m * n, |da| match axis {
                        Axis::Rows => {
                            for r in 0..m {
                                let pr = p.row_slice(r);
                                let gr = &g[r * n..(r + 1) * n];
                                let dot: f64 = pr.iter().zip(gr).map(|(&pv, &gv)| pv * gv).sum();
                                for c in 0..n {
                                    da[r * n + c] += pr[c] * (gr[c] - dot);
                                }
                            }
                        }
                        Axis::Cols => {
                            for c in 0..n {
                                let dot: f64 =
                                    (0..m).map(|r| p.at(r, c) * g[r * n + c]).sum();
                                for r in 0..m {
                                    da[r * n + c] += p.at(r, c) * (g[r * n + c] - dot);
                                }
                            }
                        }
                    });
                }
                Op::Relu(a) => {
                    let va = &self.nodes[a.0].value;
                    with_grad(&mut grads, a.0, g.len(), |da| {
                        for ((d, &gv), &x) in da.iter_mut().zip(&g).zip(va.data()) {
                            if x > 0.0 {
                                *d += gv;
                            }
                        }
                    });
                }
                Op::Gelu(a) => {
                    let va = &self.nodes[a.0].value;
                    with_grad(&mut grads, a.0, g.len(), |da| {
                        for ((d, &gv), &x) in da.iter_mut().zip(&g).zip(va.data()) {
                            *d += gv * gelu_derivative(x);
                        }
                    });
                }
                Op::Tanh(a) => {
                    let y = &node.value;
                    with_grad(&mut grads, a.0, g.len(), |da| {
                        for ((d, &gv), &yv) in da.iter_mut().zip(&g).zip(y.data()) {
                            *d += gv * (1.0 - yv * yv);
                        }
                    });
                }
                Op::Sigmoid(a) => {
                    let y = &node.value;
                    with_grad(&mut grads, a.0, g.len(), |da| {
                        for ((d, &gv), &yv) in da.iter_mut().zip(&g).zip(y.data()) {
                            *d += gv * yv * (1.0 - yv);
                        }
                    });
                }
                Op::Abs(a) => {
                    let va = &self.nodes[a.0].value;
                    with_grad(&mut grads, a.0, g.len(), |da| {
                        for ((d, &gv), &x) in da.iter_mut().zip(&g).zip(va.data()) {
                            // Subgradient 0 at the kink.
                            *d += gv * if x > 0.0 { 1.0 } else if x < 0.0 { -1.0 } else { 0.0 };
                        }
                    });
                }
                Op::Sum(a) => {
                    let len = self.nodes[a.0].value.len();
                    let gv = g[0];
                    with_grad(&mut grads, a.0, len, |da| {
                        for d in da {
                            *d += gv;
                        }
                    });
                }
                Op::CrossEntropy(logits, label) => {
                    let gv = g[0];
                    let label = *label;
                    with_grad(&mut grads, logits.0, node.aux.len(), |dl| {
                        for (c, d) in dl.iter_mut().enumerate() {
                            let onehot = if c == label { 1.0 } else { 0.0 };
                            *d += gv * (node.aux[c] - onehot);
                        }
                    });
                }
            }
        }

        for (name, tensor) in params.iter() {
            if !out.contains(name) {
                out.insert(name, Tensor::zeros(tensor.rows(), tensor.cols()));
            }
        }
        Ok(out)
    }
}

/// Numerically stable softmax of one slice.
fn softmax_slice(input: &[f64], out: &mut [f64]) {
    let max = input.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &x) in out.iter_mut().zip(input) {
        *o = (x - max).exp();
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

fn gelu_value(x: f64) -> f64 {
    0.5 * x * (1.0 + (GELU_C * (x + GELU_A * x * x * x)).tanh())
}

fn gelu_derivative(x: f64) -> f64 {
    let t = (GELU_C * (x + GELU_A * x * x * x)).tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// Fetch-or-zero-init the gradient slot for a node, then let the caller
/// accumulate into it.
fn with_grad(grads: &mut [Option<Vec<f64>>], id: usize, len: usize, f: impl FnOnce(&mut [f64])) {
    let slot = grads[id].get_or_insert_with(|| vec![0.0; len]);
    debug_assert_eq!(slot.len(), len);
    f(slot);
}

fn add_assign(grads: &mut [Option<Vec<f64>>], id: usize, g: &[f64]) {
    with_grad(grads, id, g.len(), |d| {
        for (dv, &gv) in d.iter_mut().zip(g) {
            *dv += gv;
        }
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_with(entries: &[(&str, Tensor)]) -> ParamStore {
        let mut s = ParamStore::new();
        for (name, t) in entries {
            s.insert(*name, t.clone());
        }
        s
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::matrix(2, 3, vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0]).unwrap()).unwrap();
        let p = tape.softmax(x, Axis::Rows).unwrap();
        let v = tape.value(p);
        assert!((v.at(0, 0) - 1.0 / 3.0).abs() < 1e-12);
        for r in 0..2 {
            let total: f64 = v.row_slice(r).iter().sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_of_two_zeros_is_half() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::row(vec![0.0, 0.0])).unwrap();
        let p = tape.softmax(x, Axis::Rows).unwrap();
        assert_eq!(tape.value(p).data(), &[0.5, 0.5]);
    }

    #[test]
    fn matmul_identity_is_identity() {
        let mut tape = Tape::new();
        let eye = tape
            .constant(Tensor::matrix(3, 3, vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]).unwrap())
            .unwrap();
        let a = Tensor::matrix(3, 2, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let an = tape.constant(a.clone()).unwrap();
        let out = tape.matmul(eye, an).unwrap();
        assert_eq!(tape.value(out), &a);
    }

    #[test]
    fn layer_norm_rows_are_standardized() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::matrix(2, 4, vec![1.0, 2.0, 3.0, 4.0, -1.0, 0.5, 2.0, 10.0]).unwrap()).unwrap();
        let y = tape.layer_norm(x).unwrap();
        let v = tape.value(y);
        for r in 0..2 {
            let row = v.row_slice(r);
            let mean: f64 = row.iter().sum::<f64>() / 4.0;
            let var: f64 = row.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / 4.0;
            assert!(mean.abs() < 1e-9, "row {r} mean {mean}");
            assert!((var - 1.0).abs() < 1e-9, "row {r} var {var}");
        }
    }

    #[test]
    fn cross_entropy_uniform_logits_is_ln2() {
        let mut tape = Tape::new();
        let logits = tape.constant(Tensor::row(vec![0.0, 0.0])).unwrap();
        let loss = tape.cross_entropy(logits, 1).unwrap();
        assert!((tape.item(loss) - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn sum_gradient_is_all_ones() {
        let store = store_with(&[("w", Tensor::matrix(2, 2, vec![1.0, 2.0, 3.0, 4.0]).unwrap())]);
        let mut tape = Tape::new();
        let w = tape.param(&store, "w").unwrap();
        let loss = tape.sum(w).unwrap();
        let grads = tape.backward(loss, &store).unwrap();
        assert_eq!(grads.get("w").unwrap().data(), &[1.0, 1.0, 1.0, 1.0]);
    }

    #[test]
    fn cross_entropy_gradient_is_probs_minus_onehot() {
        let store = store_with(&[("logits", Tensor::row(vec![0.4, -0.2]))]);
        let mut tape = Tape::new();
        let l = tape.param(&store, "logits").unwrap();
        let loss = tape.cross_entropy(l, 1).unwrap();
        let grads = tape.backward(loss, &store).unwrap();
        let g = grads.get("logits").unwrap().data();
        let e0 = (0.4f64).exp();
        let e1 = (-0.2f64).exp();
        let p0 = e0 / (e0 + e1);
        assert!((g[0] - p0).abs() < 1e-12);
        assert!((g[1] - (1.0 - p0 - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn unreached_params_get_zero_gradients() {
        let store = store_with(&[
            ("used", Tensor::scalar(2.0)),
            ("unused", Tensor::matrix(2, 3, vec![0.0; 6]).unwrap()),
        ]);
        let mut tape = Tape::new();
        let w = tape.param(&store, "used").unwrap();
        let loss = tape.sum(w).unwrap();
        let grads = tape.backward(loss, &store).unwrap();
        assert_eq!(grads.get("unused").unwrap().shape(), &[2, 3]);
        assert!(grads.get("unused").unwrap().data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn backward_requires_scalar_loss() {
        let store = store_with(&[("w", Tensor::row(vec![1.0, 2.0]))]);
        let mut tape = Tape::new();
        let w = tape.param(&store, "w").unwrap();
        assert!(matches!(tape.backward(w, &store), Err(NnError::NotScalar(_))));
    }

    #[test]
    fn backward_is_linear_in_loss_scaling() {
        let store = store_with(&[("w", Tensor::row(vec![0.3, -0.7, 1.1]))]);
        let run = |factor: f64| {
            let mut tape = Tape::new();
            let w = tape.param(&store, "w").unwrap();
            let sq = tape.mul(w, w).unwrap();
            let s = tape.sum(sq).unwrap();
            let loss = tape.scale(s, factor).unwrap();
            let grads = tape.backward(loss, &store).unwrap();
            grads.get("w").unwrap().data().to_vec()
        };
        let g1 = run(1.0);
        let g3 = run(3.0);
        for (a, b) in g1.iter().zip(&g3) {
            assert!((3.0 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn repeated_param_requests_share_one_node() {
        let store = store_with(&[("w", Tensor::row(vec![2.0]))]);
        let mut tape = Tape::new();
        let w1 = tape.param(&store, "w").unwrap();
        let w2 = tape.param(&store, "w").unwrap();
        assert_eq!(w1, w2);
        // loss = w·w; gradient must combine both uses: d(w²)/dw = 2w = 4.
        let prod = tape.mul(w1, w2).unwrap();
        let loss = tape.sum(prod).unwrap();
        let grads = tape.backward(loss, &store).unwrap();
        assert_eq!(grads.get("w").unwrap().data(), &[4.0]);
    }

    #[test]
    fn shape_errors_are_reported() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::matrix(2, 3, vec![0.0; 6]).unwrap()).unwrap();
        let b = tape.constant(Tensor::matrix(2, 2, vec![0.0; 4]).unwrap()).unwrap();
        assert!(tape.matmul(a, b).is_err());
        assert!(tape.add(a, b).is_err());
        assert!(tape.slice_cols(a, 2, 2).is_err());
        assert!(tape.embedding(a, &[5]).is_err());
        let logits = tape.constant(Tensor::row(vec![0.0, 0.0])).unwrap();
        assert!(tape.cross_entropy(logits, 2).is_err());
    }
}
