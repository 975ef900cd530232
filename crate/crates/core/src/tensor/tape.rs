use alloc::vec;
use alloc::vec::Vec;

use super::{gemm, Result, Tensor, TensorError};

/// Index of a trainable tensor in the parameter slice a tape reads from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

/// Handle to a node recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug)]
enum Op {
    Constant,
    Param(usize),
    MatMul(Var, Var),
    Add(Var, Var),
    AddBias(Var, Var),
    Scale(Var, f64),
    Tanh(Var),
    Sigmoid(Var),
    Mul(Var, Var),
    Softmax { x: Var, axis: usize },
    Concat { parts: Vec<Var>, axis: usize },
    Lookup { table: Var, indices: Vec<usize> },
    Dropout { x: Var, mask: Vec<f64> },
    Nll { dist: Var, target: usize, weight: f64, clamped: bool },
    Transpose(Var),
    SliceCols { x: Var, start: usize },
    Sum(Vec<Var>),
}

#[derive(Debug)]
struct Node {
    op: Op,
    /// `None` for parameter leaves, whose value lives in the parameter slice.
    value: Option<Tensor>,
    needs_grad: bool,
}

/// Probability floor used by the likelihood primitive.
pub const NLL_FLOOR: f64 = 1e-12;

/// Records primitive operations in evaluation order; [`Tape::backward`]
/// replays them in reverse, so every node is visited once.
pub struct Tape<'p> {
    params: &'p [Tensor],
    param_nodes: Vec<Option<Var>>,
    nodes: Vec<Node>,
    clamp_count: usize,
}

/// Gradients indexed by [`ParamId`]; `None` where a parameter was unused.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub tensors: Vec<Option<Tensor>>,
}

impl Grads {
    pub fn empty(count: usize) -> Self {
        Grads { tensors: vec![None; count] }
    }

    pub fn get(&self, id: ParamId) -> Option<&Tensor> {
        self.tensors[id.0].as_ref()
    }

    /// `self += k * other`, in parameter order.
    pub fn accumulate(&mut self, other: &Grads, k: f64) {
        for (mine, theirs) in self.tensors.iter_mut().zip(&other.tensors) {
            let Some(t) = theirs else { continue };
            match mine {
                Some(m) => {
                    for (a, b) in m.data_mut().iter_mut().zip(t.data()) {
                        *a += k * b;
                    }
                }
                None => {
                    let mut c = t.clone();
                    c.scale_assign(k);
                    *mine = Some(c);
                }
            }
        }
    }

    pub fn global_norm(&self) -> f64 {
        libm::sqrt(self.tensors.iter().flatten().map(Tensor::squared_norm).sum())
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors.iter_mut().flatten() {
            t.scale_assign(k);
        }
    }
}

fn shape_err(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::Shape { op, left: a.shape().to_vec(), right: b.shape().to_vec() }
}

fn rank2(op: &'static str, t: &Tensor) -> Result<()> {
    if t.rank() == 2 {
        Ok(())
    } else {
        Err(TensorError::Invalid { op, reason: alloc::format!("expected rank 2, got shape {:?}", t.shape()) })
    }
}

/// `tanh`, via one `exp` away from zero where that loses no precision.
fn tanh(x: f64) -> f64 {
    let a = x.abs();
    if a < 0.55 {
        return libm::tanh(x);
    }
    let e = libm::exp(-2.0 * a);
    let t = (1.0 - e) / (1.0 + e);
    if x < 0.0 {
        -t
    } else {
        t
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + libm::exp(-x))
    } else {
        let e = libm::exp(x);
        e / (1.0 + e)
    }
}

/// Softmax of `x` into `out`, leaving masked entries at exactly zero.
fn softmax_into(x: &[f64], masked: Option<&[bool]>, out: &mut [f64]) -> bool {
    let live = |i: usize| masked.map_or(true, |m| !m[i]);
    let mut max = f64::NEG_INFINITY;
    for (i, &v) in x.iter().enumerate() {
        if live(i) && v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return false;
    }
    let mut sum = 0.0;
    for (i, (&v, o)) in x.iter().zip(out.iter_mut()).enumerate() {
        *o = if live(i) { libm::exp(v - max) } else { 0.0 };
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    true
}

impl<'p> Tape<'p> {
    pub fn new(params: &'p [Tensor]) -> Self {
        Tape { params, param_nodes: vec![None; params.len()], nodes: Vec::with_capacity(256), clamp_count: 0 }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Likelihood evaluations whose target probability hit [`NLL_FLOOR`].
    pub fn clamp_count(&self) -> usize {
        self.clamp_count
    }

    pub fn value(&self, v: Var) -> &Tensor {
        let node = &self.nodes[v.0];
        match (&node.value, &node.op) {
            (Some(t), _) => t,
            (None, Op::Param(i)) => &self.params[*i],
            _ => unreachable!("only parameter nodes omit values"),
        }
    }

    fn push(&mut self, op: Op, value: Tensor, needs_grad: bool) -> Var {
        self.nodes.push(Node { op, value: Some(value), needs_grad });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    pub fn constant(&mut self, t: Tensor) -> Var {
        self.push(Op::Constant, t, false)
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.param_nodes[id.0] {
            return v;
        }
        self.nodes.push(Node { op: Op::Param(id.0), value: None, needs_grad: true });
        let v = Var(self.nodes.len() - 1);
        self.param_nodes[id.0] = Some(v);
        v
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        rank2("matmul", ta)?;
        rank2("matmul", tb)?;
        if ta.cols() != tb.rows() {
            return Err(shape_err("matmul", ta, tb));
        }
        let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
        let mut out = Tensor::zeros(m, n);
        gemm(m, k, n, 1.0, ta.data(), false, tb.data(), false, 0.0, out.data_mut());
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::MatMul(a, b), out, g))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.same_shape(tb) {
            return Err(shape_err("add", ta, tb));
        }
        let mut out = ta.clone();
        out.add_assign(tb);
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Add(a, b), out, g))
    }

    /// Adds a `1 x c` bias to every row of an `r x c` matrix.
    pub fn add_bias(&mut self, x: Var, bias: Var) -> Result<Var> {
        let (tx, tb) = (self.value(x), self.value(bias));
        rank2("add_bias", tx)?;
        if tb.rank() != 2 || tb.rows() != 1 || tb.cols() != tx.cols() {
            return Err(shape_err("add_bias", tx, tb));
        }
        let mut out = tx.clone();
        let c = tx.cols();
        for row in out.data_mut().chunks_mut(c) {
            for (o, b) in row.iter_mut().zip(tb.data()) {
                *o += b;
            }
        }
        let g = self.needs(x) || self.needs(bias);
        Ok(self.push(Op::AddBias(x, bias), out, g))
    }

    pub fn scale(&mut self, x: Var, k: f64) -> Var {
        let mut out = self.value(x).clone();
        out.scale_assign(k);
        let g = self.needs(x);
        self.push(Op::Scale(x, k), out, g)
    }

    pub fn tanh(&mut self, x: Var) -> Var {
        let mut out = self.value(x).clone();
        for v in out.data_mut() {
            *v = tanh(*v);
        }
        let g = self.needs(x);
        self.push(Op::Tanh(x), out, g)
    }

    pub fn sigmoid(&mut self, x: Var) -> Var {
        let mut out = self.value(x).clone();
        for v in out.data_mut() {
            *v = sigmoid(*v);
        }
        let g = self.needs(x);
        self.push(Op::Sigmoid(x), out, g)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        if !ta.same_shape(tb) {
            return Err(shape_err("mul", ta, tb));
        }
        let data = ta.data().iter().zip(tb.data()).map(|(x, y)| x * y).collect();
        let out = Tensor::new(ta.shape().to_vec(), data)?;
        let g = self.needs(a) || self.needs(b);
        Ok(self.push(Op::Mul(a, b), out, g))
    }

    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        self.masked_softmax(x, axis, None)
    }

    /// Softmax along `axis` (0 = down columns, 1 = along rows). Positions
    /// flagged in `masked` (indexed along the axis) get exactly zero mass.
    pub fn masked_softmax(&mut self, x: Var, axis: usize, masked: Option<&[bool]>) -> Result<Var> {
        let tx = self.value(x);
        rank2("softmax", tx)?;
        if axis > 1 {
            return Err(TensorError::Invalid { op: "softmax", reason: alloc::format!("axis {axis} on rank 2") });
        }
        let (r, c) = (tx.rows(), tx.cols());
        let extent = if axis == 1 { c } else { r };
        if let Some(m) = masked {
            if m.len() != extent {
                return Err(TensorError::Invalid {
                    op: "softmax",
                    reason: alloc::format!("mask of length {} for axis extent {extent}", m.len()),
                });
            }
        }
        let mut out = Tensor::zeros(r, c);
        let ok = if axis == 1 {
            tx.data()
                .chunks(c)
                .zip(out.data_mut().chunks_mut(c))
                .all(|(xi, oi)| softmax_into(xi, masked, oi))
        } else {
            let mut col = vec![0.0; r];
            let mut res = vec![0.0; r];
            let mut ok = true;
            for j in 0..c {
                for i in 0..r {
                    col[i] = tx.data()[i * c + j];
                }
                ok &= softmax_into(&col, masked, &mut res);
                for i in 0..r {
                    out.data_mut()[i * c + j] = res[i];
                }
            }
            ok
        };
        if !ok {
            return Err(TensorError::Invalid { op: "softmax", reason: "every position is masked".into() });
        }
        let g = self.needs(x);
        Ok(self.push(Op::Softmax { x, axis }, out, g))
    }

    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = self.value(*parts.first().ok_or(TensorError::Invalid {
            op: "concat",
            reason: "no inputs".into(),
        })?);
        rank2("concat", first)?;
        let (r0, c0) = (first.rows(), first.cols());
        let mut rows = 0;
        let mut cols = 0;
        for &p in parts {
            let t = self.value(p);
            rank2("concat", t)?;
            match axis {
                0 if t.cols() == c0 => rows += t.rows(),
                1 if t.rows() == r0 => cols += t.cols(),
                0 | 1 => return Err(shape_err("concat", first, t)),
                _ => return Err(TensorError::Invalid { op: "concat", reason: alloc::format!("axis {axis}") }),
            }
        }
        let out = if axis == 0 {
            let mut data = Vec::with_capacity(rows * c0);
            for &p in parts {
                data.extend_from_slice(self.value(p).data());
            }
            Tensor::from_rows(rows, c0, data)?
        } else {
            let mut out = Tensor::zeros(r0, cols);
            let mut offset = 0;
            for &p in parts {
                let t = self.value(p);
                let w = t.cols();
                for i in 0..r0 {
                    out.data_mut()[i * cols + offset..i * cols + offset + w].copy_from_slice(t.row_slice(i));
                }
                offset += w;
            }
            out
        };
        let g = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(Op::Concat { parts: parts.to_vec(), axis }, out, g))
    }

    /// Gathers rows of `table`, one per index.
    pub fn lookup(&mut self, table: Var, indices: &[usize]) -> Result<Var> {
        let t = self.value(table);
        rank2("embedding_lookup", t)?;
        if indices.is_empty() {
            return Err(TensorError::Invalid { op: "embedding_lookup", reason: "no indices".into() });
        }
        let mut data = Vec::with_capacity(indices.len() * t.cols());
        for &i in indices {
            if i >= t.rows() {
                return Err(TensorError::Index { op: "embedding_lookup", index: i, len: t.rows() });
            }
            data.extend_from_slice(t.row_slice(i));
        }
        let out = Tensor::from_rows(indices.len(), t.cols(), data)?;
        let g = self.needs(table);
        Ok(self.push(Op::Lookup { table, indices: indices.to_vec() }, out, g))
    }

    /// Inverted dropout. Identity when `train` is false or `p` is zero.
    pub fn dropout(&mut self, x: Var, p: f64, seed: u64, train: bool) -> Result<Var> {
        if !(0.0..1.0).contains(&p) {
            return Err(TensorError::Invalid { op: "dropout", reason: alloc::format!("rate {p} outside [0, 1)") });
        }
        if !train || p == 0.0 {
            return Ok(x);
        }
        use rand::Rng as _;
        let mut rng = crate::rng::rng(seed);
        let keep = 1.0 / (1.0 - p);
        let tx = self.value(x);
        let mask: Vec<f64> = (0..tx.len()).map(|_| if rng.random::<f64>() < p { 0.0 } else { keep }).collect();
        let data = tx.data().iter().zip(&mask).map(|(v, m)| v * m).collect();
        let out = Tensor::new(tx.shape().to_vec(), data)?;
        let g = self.needs(x);
        Ok(self.push(Op::Dropout { x, mask }, out, g))
    }

    /// `-weight * ln(dist[target])` for a `1 x K` distribution. Probabilities
    /// below [`NLL_FLOOR`] are clamped and counted.
    pub fn nll(&mut self, dist: Var, target: usize, weight: f64) -> Result<Var> {
        let t = self.value(dist);
        if t.rank() != 2 || t.rows() != 1 {
            return Err(TensorError::Invalid {
                op: "negative_log_likelihood",
                reason: alloc::format!("expected a 1 x K distribution, got {:?}", t.shape()),
            });
        }
        if target >= t.cols() {
            return Err(TensorError::Index { op: "negative_log_likelihood", index: target, len: t.cols() });
        }
        let p = t.data()[target];
        let clamped = p < NLL_FLOOR;
        if clamped {
            self.clamp_count += 1;
        }
        let out = Tensor::scalar(-weight * libm::log(p.max(NLL_FLOOR)));
        let g = self.needs(dist);
        Ok(self.push(Op::Nll { dist, target, weight, clamped }, out, g))
    }

    pub fn transpose(&mut self, x: Var) -> Result<Var> {
        let t = self.value(x);
        rank2("transpose", t)?;
        let (r, c) = (t.rows(), t.cols());
        let mut out = Tensor::zeros(c, r);
        for i in 0..r {
            for j in 0..c {
                out.data_mut()[j * r + i] = t.data()[i * c + j];
            }
        }
        let g = self.needs(x);
        Ok(self.push(Op::Transpose(x), out, g))
    }

    pub fn slice_cols(&mut self, x: Var, start: usize, len: usize) -> Result<Var> {
        let t = self.value(x);
        rank2("slice_cols", t)?;
        if len == 0 || start + len > t.cols() {
            return Err(TensorError::Invalid {
                op: "slice_cols",
                reason: alloc::format!("columns {start}..{} of {}", start + len, t.cols()),
            });
        }
        let r = t.rows();
        let mut data = Vec::with_capacity(r * len);
        for i in 0..r {
            data.extend_from_slice(&t.row_slice(i)[start..start + len]);
        }
        let out = Tensor::from_rows(r, len, data)?;
        let g = self.needs(x);
        Ok(self.push(Op::SliceCols { x, start }, out, g))
    }

    /// Elementwise sum of same-shaped inputs.
    pub fn sum(&mut self, parts: &[Var]) -> Result<Var> {
        let first = *parts.first().ok_or(TensorError::Invalid { op: "sum", reason: "no inputs".into() })?;
        let mut out = self.value(first).clone();
        for &p in &parts[1..] {
            let t = self.value(p);
            if !t.same_shape(&out) {
                return Err(shape_err("sum", &out, t));
            }
            out.add_assign(t);
        }
        let g = parts.iter().any(|&p| self.needs(p));
        Ok(self.push(Op::Sum(parts.to_vec()), out, g))
    }

    /// Reverse pass from a `1 x 1` output. Returns parameter gradients.
    pub fn backward(&self, output: Var) -> Result<Grads> {
        let mut grads = Grads::empty(self.params.len());
        self.backward_into(output, &mut grads, 1.0)?;
        Ok(grads)
    }

    /// Reverse pass adding `scale` times the parameter gradients into `acc`.
    pub fn backward_into(&self, output: Var, acc: &mut Grads, scale: f64) -> Result<()> {
        let out = self.value(output);
        if out.len() != 1 {
            return Err(TensorError::Invalid {
                op: "backward",
                reason: alloc::format!("output must be scalar, got {:?}", out.shape()),
            });
        }
        let mut grads: Vec<Option<Tensor>> = (0..=output.0).map(|_| None).collect();
        grads[output.0] = Some(Tensor::new(out.shape().to_vec(), vec![1.0])?);
        if acc.tensors.len() != self.params.len() {
            return Err(TensorError::Invalid {
                op: "backward",
                reason: alloc::format!("{} gradient slots for {} parameters", acc.tensors.len(), self.params.len()),
            });
        }

        for idx in (0..=output.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            let y = self.value(Var(idx));
            match &node.op {
                Op::Constant => {}
                Op::Param(i) => match &mut acc.tensors[*i] {
                    Some(t) => {
                        for (a, b) in t.data_mut().iter_mut().zip(g.data()) {
                            *a += scale * b;
                        }
                    }
                    slot @ None => {
                        let mut g = g;
                        if scale != 1.0 {
                            g.scale_assign(scale);
                        }
                        *slot = Some(g);
                    }
                },
                Op::MatMul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    let (m, k, n) = (ta.rows(), ta.cols(), tb.cols());
                    if self.needs(*a) {
                        let da = slot(&mut grads, *a, ta);
                        gemm(m, n, k, 1.0, g.data(), false, tb.data(), true, 1.0, da.data_mut());
                    }
                    if self.needs(*b) {
                        let db = slot(&mut grads, *b, tb);
                        gemm(k, m, n, 1.0, ta.data(), true, g.data(), false, 1.0, db.data_mut());
                    }
                }
                Op::Add(a, b) => {
                    for v in [*a, *b] {
                        if self.needs(v) {
                            slot(&mut grads, v, self.value(v)).add_assign(&g);
                        }
                    }
                }
                Op::AddBias(x, b) => {
                    if self.needs(*x) {
                        slot(&mut grads, *x, self.value(*x)).add_assign(&g);
                    }
                    if self.needs(*b) {
                        let tb = self.value(*b);
                        let db = slot(&mut grads, *b, tb);
                        for row in g.data().chunks(tb.cols()) {
                            for (d, v) in db.data_mut().iter_mut().zip(row) {
                                *d += v;
                            }
                        }
                    }
                }
                Op::Scale(x, k) => {
                    let dx = slot(&mut grads, *x, self.value(*x));
                    for (d, v) in dx.data_mut().iter_mut().zip(g.data()) {
                        *d += k * v;
                    }
                }
                Op::Tanh(x) => {
                    let dx = slot(&mut grads, *x, self.value(*x));
                    for ((d, v), yv) in dx.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                        *d += v * (1.0 - yv * yv);
                    }
                }
                Op::Sigmoid(x) => {
                    let dx = slot(&mut grads, *x, self.value(*x));
                    for ((d, v), yv) in dx.data_mut().iter_mut().zip(g.data()).zip(y.data()) {
                        *d += v * yv * (1.0 - yv);
                    }
                }
                Op::Mul(a, b) => {
                    let (ta, tb) = (self.value(*a), self.value(*b));
                    if self.needs(*a) {
                        let da = slot(&mut grads, *a, ta);
                        for ((d, v), w) in da.data_mut().iter_mut().zip(g.data()).zip(tb.data()) {
                            *d += v * w;
                        }
                    }
                    if self.needs(*b) {
                        let db = slot(&mut grads, *b, tb);
                        for ((d, v), w) in db.data_mut().iter_mut().zip(g.data()).zip(ta.data()) {
                            *d += v * w;
                        }
                    }
                }
                Op::Softmax { x, axis } => {
                    let (r, c) = (y.rows(), y.cols());
                    let dx = slot(&mut grads, *x, self.value(*x));
                    let (outer, inner, stride_o, stride_i) = if *axis == 1 { (r, c, c, 1) } else { (c, r, 1, c) };
                    for o in 0..outer {
                        let at = |i: usize| o * stride_o + i * stride_i;
                        let dot: f64 = (0..inner).map(|i| g.data()[at(i)] * y.data()[at(i)]).sum();
                        for i in 0..inner {
                            dx.data_mut()[at(i)] += y.data()[at(i)] * (g.data()[at(i)] - dot);
                        }
                    }
                }
                Op::Concat { parts, axis } => {
                    let cols = y.cols();
                    let mut offset = 0;
                    for &p in parts {
                        let tp = self.value(p);
                        let (pr, pc) = (tp.rows(), tp.cols());
                        if self.needs(p) {
                            let dp = slot(&mut grads, p, tp);
                            if *axis == 0 {
                                for (d, v) in dp.data_mut().iter_mut().zip(&g.data()[offset * cols..]) {
                                    *d += v;
                                }
                            } else {
                                for i in 0..pr {
                                    let src = &g.data()[i * cols + offset..i * cols + offset + pc];
                                    for (d, v) in dp.data_mut()[i * pc..(i + 1) * pc].iter_mut().zip(src) {
                                        *d += v;
                                    }
                                }
                            }
                        }
                        offset += if *axis == 0 { pr } else { pc };
                    }
                }
                Op::Lookup { table, indices } => {
                    let tt = self.value(*table);
                    let c = tt.cols();
                    let dt = slot(&mut grads, *table, tt);
                    for (r, &i) in indices.iter().enumerate() {
                        for (d, v) in dt.data_mut()[i * c..(i + 1) * c].iter_mut().zip(&g.data()[r * c..(r + 1) * c]) {
                            *d += v;
                        }
                    }
                }
                Op::Dropout { x, mask } => {
                    let dx = slot(&mut grads, *x, self.value(*x));
                    for ((d, v), m) in dx.data_mut().iter_mut().zip(g.data()).zip(mask) {
                        *d += v * m;
                    }
                }
                Op::Nll { dist, target, weight, clamped } => {
                    if !clamped {
                        let td = self.value(*dist);
                        let p = td.data()[*target];
                        let dd = slot(&mut grads, *dist, td);
                        dd.data_mut()[*target] += -weight / p * g.item();
                    }
                }
                Op::Transpose(x) => {
                    let (r, c) = (y.rows(), y.cols());
                    let dx = slot(&mut grads, *x, self.value(*x));
                    for i in 0..r {
                        for j in 0..c {
                            dx.data_mut()[j * r + i] += g.data()[i * c + j];
                        }
                    }
                }
                Op::SliceCols { x, start } => {
                    let tx = self.value(*x);
                    let (xc, len) = (tx.cols(), y.cols());
                    let dx = slot(&mut grads, *x, tx);
                    for i in 0..y.rows() {
                        let dst = &mut dx.data_mut()[i * xc + start..i * xc + start + len];
                        for (d, v) in dst.iter_mut().zip(g.row_slice(i)) {
                            *d += v;
                        }
                    }
                }
                Op::Sum(parts) => {
                    for &p in parts {
                        if self.needs(p) {
                            slot(&mut grads, p, self.value(p)).add_assign(&g);
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// The gradient accumulator of node `v`, created as zeros shaped like `like`.
fn slot<'g>(grads: &'g mut [Option<Tensor>], v: Var, like: &Tensor) -> &'g mut Tensor {
    grads[v.0].get_or_insert_with(|| Tensor::new(like.shape().to_vec(), vec![0.0; like.len()]).unwrap())
}
