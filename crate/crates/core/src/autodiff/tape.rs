//! Tape-based reverse-mode differentiation.
//!
//! Every primitive appends a node holding its forward value; [`Tape::backward`]
//! walks the nodes once in reverse insertion order, which is a valid reverse
//! topological order because inputs always precede their consumers.

use super::{AutodiffError, Tensor};

/// Handle to a node recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Rows,
    Cols,
}

#[derive(Clone, Debug)]
enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// matrix + row vector, broadcast over rows
    AddRow(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Scale(NodeId, f64),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Softplus(NodeId),
    Square(NodeId),
    Reciprocal(NodeId),
    Sum(NodeId),
    SumCols(NodeId),
    Mean(NodeId),
    Concat(Vec<NodeId>, Axis),
    Slice {
        input: NodeId,
        axis: Axis,
        start: usize,
    },
    LogSumExpCols(NodeId),
    Transpose(NodeId),
}

#[derive(Clone, Debug)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Ordered record of primitive operations.
#[derive(Clone, Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of a scalar loss with respect to every node on the tape.
#[derive(Clone, Debug)]
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
    shapes: Vec<Vec<usize>>,
}

impl Gradients {
    /// Gradient with respect to `id`; all zeros when `id` did not
    /// participate in the loss.
    pub fn wrt(&self, id: NodeId) -> Tensor {
        match &self.grads[id.0] {
            Some(g) => g.clone(),
            None => Tensor::zeros(&self.shapes[id.0]),
        }
    }

    pub fn take(&mut self, id: NodeId) -> Tensor {
        match self.grads[id.0].take() {
            Some(g) => g,
            None => Tensor::zeros(&self.shapes[id.0]),
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor {
        &self.nodes[id.0].value
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        NodeId(self.nodes.len() - 1)
    }

    fn rg(&self, ids: &[NodeId]) -> bool {
        ids.iter().any(|id| self.nodes[id.0].requires_grad)
    }

    /// Differentiable leaf (a parameter).
    pub fn param(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, true)
    }

    /// Non-differentiable leaf (data, noise, masks).
    pub fn constant(&mut self, value: Tensor) -> NodeId {
        self.push(value, Op::Leaf, false)
    }

    fn unary(&mut self, a: NodeId, op: Op, f: impl Fn(f64) -> f64) -> NodeId {
        let value = self.value(a).map(f);
        let rg = self.rg(&[a]);
        self.push(value, op, rg)
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.cols() != tb.rows() {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        let value = ta.matmul_raw(tb);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::MatMul(a, b), rg))
    }

    fn same_shape(&self, op: &'static str, a: NodeId, b: NodeId) -> Result<(), AutodiffError> {
        let (ta, tb) = (self.value(a), self.value(b));
        if ta.dims2() != tb.dims2() {
            return Err(AutodiffError::ShapeMismatch {
                op,
                lhs: ta.shape().to_vec(),
                rhs: tb.shape().to_vec(),
            });
        }
        Ok(())
    }

    /// Elementwise sum. `b` may also be a `[1, n]` row added to every row
    /// of an `[m, n]` matrix `a` (bias add); no other broadcasting.
    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        let (ra, ca) = self.value(a).dims2();
        let (rb, cb) = self.value(b).dims2();
        if rb == 1 && ra > 1 && ca == cb {
            let row = self.value(b).data().to_vec();
            let mut value = self.value(a).clone();
            for r in value.data_mut().chunks_mut(ca) {
                for (v, &bias) in r.iter_mut().zip(&row) {
                    *v += bias;
                }
            }
            let rg = self.rg(&[a, b]);
            return Ok(self.push(value, Op::AddRow(a, b), rg));
        }
        self.same_shape("add", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x + y);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.same_shape("sub", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x - y);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.same_shape("mul", a, b)?;
        let value = self.value(a).zip_map(self.value(b), |x, y| x * y);
        let rg = self.rg(&[a, b]);
        Ok(self.push(value, Op::Mul(a, b), rg))
    }

    pub fn scale(&mut self, a: NodeId, c: f64) -> NodeId {
        self.unary(a, Op::Scale(a, c), |x| c * x)
    }

    pub fn sigmoid(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Sigmoid(a), sigmoid)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Tanh(a), f64::tanh)
    }

    pub fn exp(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Exp(a), f64::exp)
    }

    pub fn log(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Log(a), f64::ln)
    }

    pub fn softplus(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Softplus(a), softplus)
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Square(a), |x| x * x)
    }

    pub fn reciprocal(&mut self, a: NodeId) -> NodeId {
        self.unary(a, Op::Reciprocal(a), |x| 1.0 / x)
    }

    /// Sum of all entries, `[1, 1]`.
    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let value = Tensor::scalar(self.value(a).sum());
        let rg = self.rg(&[a]);
        self.push(value, Op::Sum(a), rg)
    }

    /// Mean of all entries, `[1, 1]`.
    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let value = Tensor::scalar(t.sum() / t.len() as f64);
        let rg = self.rg(&[a]);
        self.push(value, Op::Mean(a), rg)
    }

    /// Per-row sum across columns: `[m, n] -> [m, 1]`.
    pub fn sum_cols(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let (m, n) = t.dims2();
        let data = t.data().chunks(n).map(|r| r.iter().sum()).collect();
        let value = Tensor::new(vec![m, 1], data).expect("nonempty");
        let rg = self.rg(&[a]);
        self.push(value, Op::SumCols(a), rg)
    }

    /// Per-row log-sum-exp across columns: `[m, n] -> [m, 1]`.
    pub fn log_sum_exp(&mut self, a: NodeId) -> NodeId {
        let t = self.value(a);
        let (m, n) = t.dims2();
        let data = t.data().chunks(n).map(log_sum_exp_slice).collect();
        let value = Tensor::new(vec![m, 1], data).expect("nonempty");
        let rg = self.rg(&[a]);
        self.push(value, Op::LogSumExpCols(a), rg)
    }

    pub fn transpose(&mut self, a: NodeId) -> NodeId {
        let value = self.value(a).transpose();
        let rg = self.rg(&[a]);
        self.push(value, Op::Transpose(a), rg)
    }

    pub fn concat(&mut self, inputs: &[NodeId], axis: Axis) -> Result<NodeId, AutodiffError> {
        let first = *inputs.first().ok_or(AutodiffError::EmptyConcat)?;
        let (r0, c0) = self.value(first).dims2();
        for &id in &inputs[1..] {
            let (r, c) = self.value(id).dims2();
            let ok = match axis {
                Axis::Rows => c == c0,
                Axis::Cols => r == r0,
            };
            if !ok {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat",
                    lhs: vec![r0, c0],
                    rhs: vec![r, c],
                });
            }
        }
        let value = match axis {
            Axis::Rows => {
                let rows: usize = inputs.iter().map(|&id| self.value(id).rows()).sum();
                let mut data = Vec::with_capacity(rows * c0);
                for &id in inputs {
                    data.extend_from_slice(self.value(id).data());
                }
                Tensor::new(vec![rows, c0], data)?
            }
            Axis::Cols => {
                let cols: usize = inputs.iter().map(|&id| self.value(id).cols()).sum();
                let mut data = Vec::with_capacity(r0 * cols);
                for r in 0..r0 {
                    for &id in inputs {
                        data.extend_from_slice(self.value(id).row_slice(r));
                    }
                }
                Tensor::new(vec![r0, cols], data)?
            }
        };
        let rg = self.rg(inputs);
        Ok(self.push(value, Op::Concat(inputs.to_vec(), axis), rg))
    }

    /// Contiguous range `start..start + len` along `axis`.
    pub fn slice(
        &mut self,
        a: NodeId,
        axis: Axis,
        start: usize,
        len: usize,
    ) -> Result<NodeId, AutodiffError> {
        let t = self.value(a);
        let (m, n) = t.dims2();
        let extent = match axis {
            Axis::Rows => m,
            Axis::Cols => n,
        };
        if len == 0 || start + len > extent {
            return Err(AutodiffError::SliceOutOfRange { start, len, extent });
        }
        let value = match axis {
            Axis::Rows => Tensor::new(vec![len, n], t.data()[start * n..(start + len) * n].to_vec())?,
            Axis::Cols => {
                let mut data = Vec::with_capacity(m * len);
                for r in 0..m {
                    data.extend_from_slice(&t.row_slice(r)[start..start + len]);
                }
                Tensor::new(vec![m, len], data)?
            }
        };
        let rg = self.rg(&[a]);
        Ok(self.push(value, Op::Slice { input: a, axis, start }, rg))
    }

    /// Reverse pass from a scalar `loss`.
    pub fn backward(&self, loss: NodeId) -> Result<Gradients, AutodiffError> {
        let lv = self.value(loss);
        if !lv.is_scalar() {
            return Err(AutodiffError::NonScalarLoss(lv.shape().to_vec()));
        }
        let mut grads: Vec<Option<Tensor>> = vec![None; loss.0 + 1];
        grads[loss.0] = Some(Tensor::ones(lv.shape()));

        for idx in (0..=loss.0).rev() {
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            let Some(g) = grads[idx].take() else {
                continue;
            };
            self.propagate(node, &g, &mut grads);
            grads[idx] = Some(g);
        }

        grads.resize(self.nodes.len(), None);
        Ok(Gradients {
            grads,
            shapes: self.nodes.iter().map(|n| n.value.shape().to_vec()).collect(),
        })
    }

    fn accumulate(&self, grads: &mut [Option<Tensor>], id: NodeId, g: Tensor) {
        if !self.nodes[id.0].requires_grad {
            return;
        }
        match &mut grads[id.0] {
            Some(acc) => acc.add_assign(&g),
            slot @ None => {
                let shape = self.nodes[id.0].value.shape().to_vec();
                *slot = Some(g.reshape_unchecked(shape));
            }
        }
    }

    fn propagate(&self, node: &Node, g: &Tensor, grads: &mut [Option<Tensor>]) {
        let y = &node.value;
        match &node.op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                if self.nodes[a.0].requires_grad {
                    self.accumulate(grads, *a, g.matmul_raw(&vb.transpose()));
                }
                if self.nodes[b.0].requires_grad {
                    self.accumulate(grads, *b, va.transpose().matmul_raw(g));
                }
            }
            Op::Add(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.clone());
            }
            Op::AddRow(a, b) => {
                self.accumulate(grads, *a, g.clone());
                if self.nodes[b.0].requires_grad {
                    let n = g.cols();
                    let mut col = vec![0.0; n];
                    for r in g.data().chunks(n) {
                        for (c, v) in col.iter_mut().zip(r) {
                            *c += v;
                        }
                    }
                    self.accumulate(grads, *b, Tensor::row(&col));
                }
            }
            Op::Sub(a, b) => {
                self.accumulate(grads, *a, g.clone());
                self.accumulate(grads, *b, g.map(|v| -v));
            }
            Op::Mul(a, b) => {
                let (va, vb) = (self.value(*a), self.value(*b));
                if self.nodes[a.0].requires_grad {
                    self.accumulate(grads, *a, g.zip_map(vb, |x, y| x * y));
                }
                if self.nodes[b.0].requires_grad {
                    self.accumulate(grads, *b, g.zip_map(va, |x, y| x * y));
                }
            }
            Op::Scale(a, c) => self.accumulate(grads, *a, g.map(|v| c * v)),
            Op::Sigmoid(a) => self.accumulate(grads, *a, g.zip_map(y, |d, s| d * s * (1.0 - s))),
            Op::Tanh(a) => self.accumulate(grads, *a, g.zip_map(y, |d, t| d * (1.0 - t * t))),
            Op::Exp(a) => self.accumulate(grads, *a, g.zip_map(y, |d, e| d * e)),
            Op::Log(a) => {
                let x = self.value(*a);
                self.accumulate(grads, *a, g.zip_map(x, |d, x| d / x));
            }
            Op::Softplus(a) => {
                let x = self.value(*a);
                self.accumulate(grads, *a, g.zip_map(x, |d, x| d * sigmoid(x)));
            }
            Op::Square(a) => {
                let x = self.value(*a);
                self.accumulate(grads, *a, g.zip_map(x, |d, x| 2.0 * d * x));
            }
            Op::Reciprocal(a) => self.accumulate(grads, *a, g.zip_map(y, |d, r| -d * r * r)),
            Op::Sum(a) => {
                let d = g.data()[0];
                self.accumulate(grads, *a, Tensor::filled(self.value(*a).shape(), d));
            }
            Op::Mean(a) => {
                let x = self.value(*a);
                let d = g.data()[0] / x.len() as f64;
                self.accumulate(grads, *a, Tensor::filled(x.shape(), d));
            }
            Op::SumCols(a) => {
                let x = self.value(*a);
                let n = x.cols();
                let data = g.data().iter().flat_map(|&d| std::iter::repeat_n(d, n)).collect();
                self.accumulate(grads, *a, Tensor::new(x.shape().to_vec(), data).expect("shape"));
            }
            Op::LogSumExpCols(a) => {
                let x = self.value(*a);
                let n = x.cols();
                let mut data = Vec::with_capacity(x.len());
                for (r, row) in x.data().chunks(n).enumerate() {
                    let (lse, d) = (y.data()[r], g.data()[r]);
                    data.extend(row.iter().map(|&v| d * (v - lse).exp()));
                }
                self.accumulate(grads, *a, Tensor::new(x.shape().to_vec(), data).expect("shape"));
            }
            Op::Transpose(a) => self.accumulate(grads, *a, g.transpose()),
            Op::Concat(inputs, axis) => {
                let mut offset = 0;
                for &id in inputs {
                    let (r, c) = self.value(id).dims2();
                    if !self.nodes[id.0].requires_grad {
                        offset += if *axis == Axis::Rows { r } else { c };
                        continue;
                    }
                    let part = match axis {
                        Axis::Rows => {
                            let n = g.cols();
                            let d = g.data()[offset * n..(offset + r) * n].to_vec();
                            offset += r;
                            d
                        }
                        Axis::Cols => {
                            let mut d = Vec::with_capacity(r * c);
                            for row in 0..r {
                                d.extend_from_slice(&g.row_slice(row)[offset..offset + c]);
                            }
                            offset += c;
                            d
                        }
                    };
                    let t = Tensor::new(vec![r, c], part).expect("shape");
                    self.accumulate(grads, id, t);
                }
            }
            Op::Slice { input, axis, start } => {
                let x = self.value(*input);
                let (m, n) = x.dims2();
                let mut full = vec![0.0; m * n];
                match axis {
                    Axis::Rows => {
                        full[start * n..start * n + g.len()].copy_from_slice(g.data());
                    }
                    Axis::Cols => {
                        let len = g.cols();
                        for r in 0..m {
                            full[r * n + start..r * n + start + len].copy_from_slice(g.row_slice(r));
                        }
                    }
                }
                let t = Tensor::new(x.shape().to_vec(), full).expect("shape");
                self.accumulate(grads, *input, t);
            }
        }
    }
}

pub fn log_sum_exp_slice(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|&x| (x - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_identity() {
        let mut tape = Tape::new();
        let i3 = tape.constant(Tensor::identity(3));
        let v = tape.constant(Tensor::column(&[1.5, -2.0, 4.0]));
        let out = tape.matmul(i3, v).unwrap();
        assert_eq!(tape.value(out).data(), &[1.5, -2.0, 4.0]);
    }

    #[test]
    fn matmul_shape_mismatch() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::zeros(&[2, 3]));
        let b = tape.constant(Tensor::zeros(&[2, 3]));
        assert!(matches!(
            tape.matmul(a, b),
            Err(AutodiffError::ShapeMismatch { op: "matmul", .. })
        ));
    }

    #[test]
    fn sigmoid_at_zero() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::scalar(0.0));
        let s = tape.sigmoid(x);
        assert_eq!(tape.value(s).data()[0], 0.5);
    }

    #[test]
    fn log_sum_exp_of_equal_pair() {
        for a in [-30.0, 0.0, 2.5, 700.0] {
            let mut tape = Tape::new();
            let x = tape.constant(Tensor::row(&[a, a]));
            let l = tape.log_sum_exp(x);
            let direct = a + 2f64.ln();
            assert!((tape.value(l).data()[0] - direct).abs() <= 1e-12 * direct.abs().max(1.0));
        }
    }

    #[test]
    fn gradient_of_sum_is_ones() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::matrix(2, 3, vec![0.3, -1.0, 2.0, 5.0, 0.0, 1.0]).unwrap());
        let s = tape.sum(x);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.wrt(x), Tensor::ones(&[2, 3]));
    }

    #[test]
    fn gradient_of_half_quadratic_is_x() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::column(&[1.0, -2.0, 0.5]));
        let xt = tape.transpose(x);
        let q = tape.matmul(xt, x).unwrap();
        let half = tape.scale(q, 0.5);
        let g = tape.backward(half).unwrap();
        assert_eq!(g.wrt(x).data(), &[1.0, -2.0, 0.5]);
    }

    #[test]
    fn non_scalar_loss_rejected() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::zeros(&[2, 2]));
        assert!(matches!(tape.backward(x), Err(AutodiffError::NonScalarLoss(_))));
    }

    #[test]
    fn unused_param_gets_zero_gradient() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::row(&[1.0, 2.0]));
        let unused = tape.param(Tensor::row(&[3.0]));
        let s = tape.sum(x);
        let g = tape.backward(s).unwrap();
        assert_eq!(g.wrt(unused), Tensor::zeros(&[1, 1]));
    }

    #[test]
    fn bias_add_broadcasts_rows_only() {
        let mut tape = Tape::new();
        let m = tape.param(Tensor::zeros(&[3, 2]));
        let b = tape.param(Tensor::row(&[1.0, 2.0]));
        let s = tape.add(m, b).unwrap();
        assert_eq!(tape.value(s).data(), &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        let total = tape.sum(s);
        let g = tape.backward(total).unwrap();
        assert_eq!(g.wrt(b).data(), &[3.0, 3.0]);

        let col = tape.param(Tensor::column(&[1.0, 2.0, 3.0]));
        assert!(tape.add(m, col).is_err());
    }

    #[test]
    fn shared_input_accumulates() {
        let mut tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0));
        let y = tape.mul(x, x).unwrap();
        let z = tape.add(y, x).unwrap();
        let g = tape.backward(z).unwrap();
        assert_eq!(g.wrt(x).data()[0], 7.0);
    }
}
