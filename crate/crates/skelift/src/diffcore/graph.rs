//! Reverse-mode differentiation over a deterministically ordered tape.
//!
//! Only the primitives the pose pipeline needs are implemented, all with
//! analytic gradients. The tape is an append-only `Vec`, so forward values,
//! backward sweeps, and therefore gradients are bit-reproducible.

use crate::error::{Error, Result};

use super::tensor::{matmul_raw, Tensor};

/// Elementwise nonlinearity kinds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    LeakyRelu(f64),
    Sigmoid,
}

impl Activation {
    pub fn apply(&self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::LeakyRelu(slope) => {
                if v > 0.0 {
                    v
                } else {
                    slope * v
                }
            }
            Activation::Sigmoid => 1.0 / (1.0 + (-v).exp()),
        }
    }

    /// Derivative as a function of the input (and the saved output for sigmoid).
    /// relu'(0) = 0, leaky'(0) = slope.
    fn derivative(&self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(slope) => {
                if x > 0.0 {
                    1.0
                } else {
                    *slope
                }
            }
            Activation::Sigmoid => y * (1.0 - y),
        }
    }
}

#[derive(Debug, Clone)]
enum Op {
    Leaf,
    MatMul(usize, usize),
    ConcatCols(usize, usize),
    Act(usize, Activation),
    TemporalConv { x: usize, kernel: usize, dilation: usize },
    Softmax(usize),
    Add(usize, usize),
    Sub(usize, usize),
    Scale(usize, f64),
    AddRowBias(usize, usize),
    Reshape(usize),
    SumSquares(usize),
    Dot(usize, usize),
    CenterRows(usize, usize),
}

struct Node {
    op: Op,
    value: Tensor,
    requires_grad: bool,
}

/// Handle to a value on a [`Graph`] tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

/// Append-only computation tape.
#[derive(Default)]
pub struct Graph {
    nodes: Vec<Node>,
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&mut self, op: Op, value: Tensor, requires_grad: bool) -> Var {
        self.nodes.push(Node { op, value, requires_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs_grad(&self, ids: &[usize]) -> bool {
        ids.iter().any(|&i| self.nodes[i].requires_grad)
    }

    /// Non-differentiated leaf (network inputs, constants).
    pub fn input(&mut self, t: Tensor) -> Var {
        self.push(Op::Leaf, t, false)
    }

    /// Differentiated leaf (parameters).
    pub fn param(&mut self, t: Tensor) -> Var {
        self.push(Op::Leaf, t, true)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if !ta.is_matrix() || !tb.is_matrix() || ta.cols() != tb.rows() {
            return Err(Error::Shape(format!(
                "matmul: incompatible shapes {:?} x {:?}",
                ta.shape(),
                tb.shape()
            )));
        }
        let value = matmul_raw(ta, tb);
        let rg = self.needs_grad(&[a.0, b.0]);
        Ok(self.push(Op::MatMul(a.0, b.0), value, rg))
    }

    /// Columns of `a` followed by columns of `b`; row counts must agree.
    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if !ta.is_matrix() || !tb.is_matrix() || ta.rows() != tb.rows() {
            return Err(Error::Shape(format!(
                "concat: row counts differ, {:?} vs {:?}",
                ta.shape(),
                tb.shape()
            )));
        }
        let (m, p, q) = (ta.rows(), ta.cols(), tb.cols());
        let mut out = Tensor::zeros(vec![m, p + q]);
        for i in 0..m {
            for j in 0..p {
                out.set2(i, j, ta.at2(i, j));
            }
            for j in 0..q {
                out.set2(i, p + j, tb.at2(i, j));
            }
        }
        let rg = self.needs_grad(&[a.0, b.0]);
        Ok(self.push(Op::ConcatCols(a.0, b.0), out, rg))
    }

    pub fn activation(&mut self, x: Var, kind: Activation) -> Var {
        let value = self.nodes[x.0].value.map(|v| kind.apply(v));
        let rg = self.needs_grad(&[x.0]);
        self.push(Op::Act(x.0, kind), value, rg)
    }

    /// Valid (no padding) dilated 1-D convolution along time.
    ///
    /// `x` is `[T, C_in]`, `kernel` is `[k, C_in, C_out]`; output is
    /// `[T - (k-1)*dilation, C_out]`.
    pub fn temporal_conv(&mut self, x: Var, kernel: Var, dilation: usize) -> Result<Var> {
        if dilation == 0 {
            return Err(Error::Validation("dilation must be >= 1".into()));
        }
        let (tx, tk) = (&self.nodes[x.0].value, &self.nodes[kernel.0].value);
        if tx.shape().len() != 2 || tk.shape().len() != 3 {
            return Err(Error::Shape(format!(
                "temporal_conv: expected x [T,C_in], kernel [k,C_in,C_out]; got {:?}, {:?}",
                tx.shape(),
                tk.shape()
            )));
        }
        let (t_len, c_in) = (tx.shape()[0], tx.shape()[1]);
        let (k, kc_in, c_out) = (tk.shape()[0], tk.shape()[1], tk.shape()[2]);
        if kc_in != c_in {
            return Err(Error::Shape(format!(
                "temporal_conv: kernel expects {kc_in} input channels, x has {c_in}"
            )));
        }
        let needed = (k - 1) * dilation + 1;
        if t_len < needed {
            return Err(Error::Shape(format!(
                "temporal_conv: window of {t_len} frames too short, need at least {needed}"
            )));
        }
        let t_out = t_len - (k - 1) * dilation;
        let mut out = Tensor::zeros(vec![t_out, c_out]);
        let xd = tx.data();
        let kd = tk.data();
        {
            let od = out.data_mut();
            for t in 0..t_out {
                for i in 0..k {
                    let row = &xd[(t + i * dilation) * c_in..(t + i * dilation + 1) * c_in];
                    for ci in 0..c_in {
                        let xv = row[ci];
                        if xv == 0.0 {
                            continue;
                        }
                        let kt = &kd[(i * c_in + ci) * c_out..(i * c_in + ci + 1) * c_out];
                        let orow = &mut od[t * c_out..(t + 1) * c_out];
                        for co in 0..c_out {
                            orow[co] += xv * kt[co];
                        }
                    }
                }
            }
        }
        let rg = self.needs_grad(&[x.0, kernel.0]);
        Ok(self.push(Op::TemporalConv { x: x.0, kernel: kernel.0, dilation }, out, rg))
    }

    /// Numerically stable softmax over a 1-D tensor.
    pub fn softmax(&mut self, x: Var) -> Result<Var> {
        let tx = &self.nodes[x.0].value;
        if tx.shape().len() != 1 {
            return Err(Error::Shape(format!("softmax expects a vector, got {:?}", tx.shape())));
        }
        let probs = softmax_stable(tx.data());
        let value = Tensor::new(vec![tx.numel()], probs)?;
        let rg = self.needs_grad(&[x.0]);
        Ok(self.push(Op::Softmax(x.0), value, rg))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_elementwise(a, b, |x, y| x + y, |g| Op::Add(g.0, g.1))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.zip_elementwise(a, b, |x, y| x - y, |g| Op::Sub(g.0, g.1))
    }

    fn zip_elementwise(
        &mut self,
        a: Var,
        b: Var,
        f: impl Fn(f64, f64) -> f64,
        op: impl Fn((usize, usize)) -> Op,
    ) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape() != tb.shape() {
            return Err(Error::Shape(format!(
                "elementwise op: shapes {:?} and {:?} differ",
                ta.shape(),
                tb.shape()
            )));
        }
        let data: Vec<f64> = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        let value = Tensor::new(ta.shape().to_vec(), data)?;
        let rg = self.needs_grad(&[a.0, b.0]);
        Ok(self.push(op((a.0, b.0)), value, rg))
    }

    pub fn scale(&mut self, x: Var, factor: f64) -> Var {
        let value = self.nodes[x.0].value.map(|v| v * factor);
        let rg = self.needs_grad(&[x.0]);
        self.push(Op::Scale(x.0, factor), value, rg)
    }

    /// Adds a bias vector to every row of a matrix.
    pub fn add_row_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (tx, tb) = (&self.nodes[x.0].value, &self.nodes[bias.0].value);
        if !tx.is_matrix() || tb.shape().len() != 1 || tb.numel() != tx.cols() {
            return Err(Error::Shape(format!(
                "add_row_bias: x {:?} with bias {:?}",
                tx.shape(),
                tb.shape()
            )));
        }
        let (m, n) = (tx.rows(), tx.cols());
        let mut out = Tensor::zeros(vec![m, n]);
        for i in 0..m {
            for j in 0..n {
                out.set2(i, j, tx.at2(i, j) + tb.data()[j]);
            }
        }
        let rg = self.needs_grad(&[x.0, bias.0]);
        Ok(self.push(Op::AddRowBias(x.0, bias.0), out, rg))
    }

    pub fn reshape(&mut self, x: Var, shape: Vec<usize>) -> Result<Var> {
        let value = self.nodes[x.0].value.reshaped(shape)?;
        let rg = self.needs_grad(&[x.0]);
        Ok(self.push(Op::Reshape(x.0), value, rg))
    }

    /// Sum of squared entries, as a scalar.
    pub fn sum_squares(&mut self, x: Var) -> Var {
        let s: f64 = self.nodes[x.0].value.data().iter().map(|v| v * v).sum();
        let rg = self.needs_grad(&[x.0]);
        self.push(Op::SumSquares(x.0), Tensor::scalar(s), rg)
    }

    /// Dot product of two equal-length vectors, as a scalar.
    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        if ta.shape() != tb.shape() || ta.shape().len() != 1 {
            return Err(Error::Shape(format!(
                "dot: expected equal-length vectors, got {:?} and {:?}",
                ta.shape(),
                tb.shape()
            )));
        }
        let s: f64 = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).sum();
        let rg = self.needs_grad(&[a.0, b.0]);
        Ok(self.push(Op::Dot(a.0, b.0), Tensor::scalar(s), rg))
    }

    /// Subtracts row `root` from every row: the output's root row is zero.
    pub fn center_rows(&mut self, x: Var, root: usize) -> Result<Var> {
        let tx = &self.nodes[x.0].value;
        if !tx.is_matrix() || root >= tx.rows() {
            return Err(Error::Shape(format!(
                "center_rows: root {root} out of bounds for {:?}",
                tx.shape()
            )));
        }
        let (m, n) = (tx.rows(), tx.cols());
        let mut out = Tensor::zeros(vec![m, n]);
        for i in 0..m {
            for j in 0..n {
                out.set2(i, j, tx.at2(i, j) - tx.at2(root, j));
            }
        }
        let rg = self.needs_grad(&[x.0]);
        Ok(self.push(Op::CenterRows(x.0, root), out, rg))
    }

    /// Mean of a list of scalar vars.
    pub fn mean_scalars(&mut self, items: &[Var]) -> Result<Var> {
        if items.is_empty() {
            return Err(Error::Validation("mean over empty list".into()));
        }
        let mut acc = items[0];
        for &v in &items[1..] {
            acc = self.add(acc, v)?;
        }
        Ok(self.scale(acc, 1.0 / items.len() as f64))
    }

    /// Reverse sweep from a scalar loss; returns one gradient slot per node.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let loss_t = &self.nodes[loss.0].value;
        if loss_t.numel() != 1 {
            return Err(Error::Shape(format!(
                "backward expects a scalar loss, got {:?}",
                loss_t.shape()
            )));
        }
        if !loss_t.all_finite() {
            return Err(Error::Evaluation("non-finite loss".into()));
        }
        let mut grads: Vec<Option<Tensor>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(Tensor::scalar(1.0));

        for idx in (0..=loss.0).rev() {
            let up = match grads[idx].take() {
                Some(g) => g,
                None => continue,
            };
            if !self.nodes[idx].requires_grad && !matches!(self.nodes[idx].op, Op::Leaf) {
                // Subtree holds no parameters; nothing to propagate.
                grads[idx] = Some(up);
                continue;
            }
            match &self.nodes[idx].op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let (ta, tb) = (&self.nodes[*a].value, &self.nodes[*b].value);
                    if self.nodes[*a].requires_grad {
                        let da = matmul_raw(&up, &tb.transpose2());
                        accumulate(&mut grads[*a], da);
                    }
                    if self.nodes[*b].requires_grad {
                        let db = matmul_raw(&ta.transpose2(), &up);
                        accumulate(&mut grads[*b], db);
                    }
                }
                Op::ConcatCols(a, b) => {
                    let p = self.nodes[*a].value.cols();
                    let q = self.nodes[*b].value.cols();
                    let m = up.rows();
                    if self.nodes[*a].requires_grad {
                        let mut da = Tensor::zeros(vec![m, p]);
                        for i in 0..m {
                            for j in 0..p {
                                da.set2(i, j, up.at2(i, j));
                            }
                        }
                        accumulate(&mut grads[*a], da);
                    }
                    if self.nodes[*b].requires_grad {
                        let mut db = Tensor::zeros(vec![m, q]);
                        for i in 0..m {
                            for j in 0..q {
                                db.set2(i, j, up.at2(i, p + j));
                            }
                        }
                        accumulate(&mut grads[*b], db);
                    }
                }
                Op::Act(x, kind) => {
                    if self.nodes[*x].requires_grad {
                        let tx = &self.nodes[*x].value;
                        let ty = &self.nodes[idx].value;
                        let data: Vec<f64> = tx
                            .data()
                            .iter()
                            .zip(ty.data())
                            .zip(up.data())
                            .map(|((&xv, &yv), &g)| g * kind.derivative(xv, yv))
                            .collect();
                        accumulate(&mut grads[*x], Tensor::new(tx.shape().to_vec(), data)?);
                    }
                }
                Op::TemporalConv { x, kernel, dilation } => {
                    let tx = &self.nodes[*x].value;
                    let tk = &self.nodes[*kernel].value;
                    let (c_in, k, c_out) = (tx.shape()[1], tk.shape()[0], tk.shape()[2]);
                    let t_out = up.shape()[0];
                    if self.nodes[*x].requires_grad {
                        let mut dx = Tensor::zeros(tx.shape().to_vec());
                        for t in 0..t_out {
                            for i in 0..k {
                                for ci in 0..c_in {
                                    let mut acc = 0.0;
                                    for co in 0..c_out {
                                        acc += up.at2(t, co) * tk.data()[(i * c_in + ci) * c_out + co];
                                    }
                                    let r = t + i * dilation;
                                    let cur = dx.at2(r, ci);
                                    dx.set2(r, ci, cur + acc);
                                }
                            }
                        }
                        accumulate(&mut grads[*x], dx);
                    }
                    if self.nodes[*kernel].requires_grad {
                        let mut dk = Tensor::zeros(tk.shape().to_vec());
                        {
                            let dkd = dk.data_mut();
                            for t in 0..t_out {
                                for i in 0..k {
                                    for ci in 0..c_in {
                                        let xv = tx.at2(t + i * dilation, ci);
                                        if xv == 0.0 {
                                            continue;
                                        }
                                        for co in 0..c_out {
                                            dkd[(i * c_in + ci) * c_out + co] += up.at2(t, co) * xv;
                                        }
                                    }
                                }
                            }
                        }
                        accumulate(&mut grads[*kernel], dk);
                    }
                }
                Op::Softmax(x) => {
                    if self.nodes[*x].requires_grad {
                        let p = self.nodes[idx].value.data();
                        let dy = up.data();
                        let inner: f64 = p.iter().zip(dy).map(|(&pi, &gi)| pi * gi).sum();
                        let data: Vec<f64> =
                            p.iter().zip(dy).map(|(&pi, &gi)| pi * (gi - inner)).collect();
                        accumulate(&mut grads[*x], Tensor::new(vec![p.len()], data)?);
                    }
                }
                Op::Add(a, b) => {
                    if self.nodes[*a].requires_grad {
                        accumulate(&mut grads[*a], up.clone());
                    }
                    if self.nodes[*b].requires_grad {
                        accumulate(&mut grads[*b], up.clone());
                    }
                }
                Op::Sub(a, b) => {
                    if self.nodes[*a].requires_grad {
                        accumulate(&mut grads[*a], up.clone());
                    }
                    if self.nodes[*b].requires_grad {
                        accumulate(&mut grads[*b], up.map(|v| -v));
                    }
                }
                Op::Scale(x, factor) => {
                    if self.nodes[*x].requires_grad {
                        accumulate(&mut grads[*x], up.map(|v| v * factor));
                    }
                }
                Op::AddRowBias(x, bias) => {
                    if self.nodes[*x].requires_grad {
                        accumulate(&mut grads[*x], up.clone());
                    }
                    if self.nodes[*bias].requires_grad {
                        let (m, n) = (up.rows(), up.cols());
                        let mut db = vec![0.0; n];
                        for i in 0..m {
                            for (j, slot) in db.iter_mut().enumerate() {
                                *slot += up.at2(i, j);
                            }
                        }
                        accumulate(&mut grads[*bias], Tensor::new(vec![n], db)?);
                    }
                }
                Op::Reshape(x) => {
                    if self.nodes[*x].requires_grad {
                        let dx = up.reshaped(self.nodes[*x].value.shape().to_vec())?;
                        accumulate(&mut grads[*x], dx);
                    }
                }
                Op::SumSquares(x) => {
                    if self.nodes[*x].requires_grad {
                        let g = up.item()?;
                        accumulate(&mut grads[*x], self.nodes[*x].value.map(|v| 2.0 * v * g));
                    }
                }
                Op::Dot(a, b) => {
                    let g = up.item()?;
                    if self.nodes[*a].requires_grad {
                        accumulate(&mut grads[*a], self.nodes[*b].value.map(|v| v * g));
                    }
                    if self.nodes[*b].requires_grad {
                        accumulate(&mut grads[*b], self.nodes[*a].value.map(|v| v * g));
                    }
                }
                Op::CenterRows(x, root) => {
                    if self.nodes[*x].requires_grad {
                        let (m, n) = (up.rows(), up.cols());
                        let mut dx = Tensor::zeros(vec![m, n]);
                        for i in 0..m {
                            for j in 0..n {
                                dx.set2(i, j, up.at2(i, j));
                            }
                        }
                        for j in 0..n {
                            let mut col_sum = 0.0;
                            for i in 0..m {
                                col_sum += up.at2(i, j);
                            }
                            let cur = dx.at2(*root, j);
                            dx.set2(*root, j, cur - col_sum);
                        }
                        accumulate(&mut grads[*x], dx);
                    }
                }
            }
            grads[idx] = Some(up);
        }
        Ok(Gradients { grads })
    }
}

fn accumulate(slot: &mut Option<Tensor>, add: Tensor) {
    match slot {
        Some(existing) => {
            for (a, b) in existing.data_mut().iter_mut().zip(add.data()) {
                *a += b;
            }
        }
        None => *slot = Some(add),
    }
}

/// Gradients of one backward sweep, indexed by [`Var`].
pub struct Gradients {
    grads: Vec<Option<Tensor>>,
}

impl Gradients {
    pub fn get(&self, v: Var) -> Option<&Tensor> {
        self.grads.get(v.0).and_then(|g| g.as_ref())
    }
}

/// Max-subtracted softmax over a slice.
pub fn softmax_stable(xs: &[f64]) -> Vec<f64> {
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = xs.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// A parameter store bound into a graph, one leaf per tensor.
pub struct BoundParams {
    vars: Vec<(String, Var)>,
}

impl BoundParams {
    /// Binds every parameter as a differentiated leaf.
    pub fn bind(g: &mut Graph, params: &super::params::ParamStore) -> Self {
        let vars = params.iter().map(|(name, t)| (name.clone(), g.param(t.clone()))).collect();
        Self { vars }
    }

    /// Binds every parameter as a frozen (non-differentiated) leaf.
    pub fn bind_frozen(g: &mut Graph, params: &super::params::ParamStore) -> Self {
        let vars = params.iter().map(|(name, t)| (name.clone(), g.input(t.clone()))).collect();
        Self { vars }
    }

    pub fn var(&self, name: &str) -> Result<Var> {
        self.vars
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, v)| *v)
            .ok_or_else(|| Error::Validation(format!("unbound parameter '{name}'")))
    }

    /// Reads the gradients of every bound parameter after a backward sweep.
    /// Parameters the loss never touched get zero gradients.
    pub fn collect_grads(&self, g: &Graph, grads: &Gradients) -> Result<super::params::ParamStore> {
        let mut out = super::params::ParamStore::new();
        for (name, v) in &self.vars {
            let t = grads
                .get(*v)
                .cloned()
                .unwrap_or_else(|| Tensor::zeros(g.value(*v).shape().to_vec()));
            out.insert(name.clone(), t)?;
        }
        Ok(out)
    }
}
