use rand::Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone)]
enum Op {
    Constant,
    Param(usize),
    Affine { x: Var, w: Var, b: Var },
    Relu(Var),
    Dropout { x: Var, mask: Vec<f64> },
    Conv { x: Var, kernel: Var, dilation: usize },
    MaxPool { x: Var, argmax: Vec<usize> },
    AvgPool { x: Var, window: usize, skip: usize },
    Add(Var, Var),
    Sub(Var, Var),
    Mix { a: Var, b: Var, alpha: f64 },
    PadLeft { x: Var, pad: usize },
    Sum(Vec<Var>),
    Mse { pred: Var, target: Var },
}

#[derive(Debug, Clone)]
struct Node {
    value: Tensor,
    op: Op,
    requires_grad: bool,
}

/// Append-only record of a forward computation, replayed in reverse by [`Tape::backward`].
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

/// Gradients of one scalar output with respect to every recorded node.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
    params: Vec<(usize, usize)>,
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> Error {
    Error::ShapeMismatch {
        op,
        expected: a.shape_string(),
        found: b.shape_string(),
    }
}

/// Elementwise `alpha * a + (1 - alpha) * b`. The endpoints return one input exactly.
pub fn convex_mix(alpha: f64, a: &[f64], b: &[f64]) -> Vec<f64> {
    if alpha == 0.0 {
        b.to_vec()
    } else if alpha == 1.0 {
        a.to_vec()
    } else {
        let beta = 1.0 - alpha;
        a.iter().zip(b).map(|(a, b)| alpha * a + beta * b).collect()
    }
}

fn accumulate(slot: &mut Option<Vec<f64>>, len: usize) -> &mut Vec<f64> {
    slot.get_or_insert_with(|| vec![0.0; len])
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn needs(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.nodes[v.0].requires_grad)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    /// A leaf that receives no gradient.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Constant, false)
    }

    /// A trainable leaf; `index` identifies the parameter in [`Gradients::params`].
    pub fn param(&mut self, index: usize, value: Tensor) -> Var {
        self.push(value, Op::Param(index), true)
    }

    /// `y = x W^T + b` for `x: [n]` or `[B, n]`, `W: [m, n]`, `b: [m]`.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let (xv, wv, bv) = (self.value(x), self.value(w), self.value(b));
        let (rows, n) = xv.rows_cols();
        let (m, wn) = wv.rows_cols();
        if wv.shape().len() != 2 || wn != n || xv.shape().len() > 2 {
            return Err(mismatch("affine", &Tensor::zeros(&[m, n]), wv));
        }
        if bv.len() != m {
            return Err(mismatch("affine", &Tensor::zeros(&[m]), bv));
        }
        let (xd, wd, bd) = (xv.data(), wv.data(), bv.data());
        let mut out = Vec::with_capacity(rows * m);
        for r in 0..rows {
            let xr = &xd[r * n..(r + 1) * n];
            for i in 0..m {
                let wr = &wd[i * n..(i + 1) * n];
                let dot: f64 = xr.iter().zip(wr).map(|(a, b)| a * b).sum();
                out.push(dot + bd[i]);
            }
        }
        let shape = if xv.shape().len() == 2 { vec![rows, m] } else { vec![m] };
        let value = Tensor::new(shape, out)?;
        let rg = self.needs(&[x, w, b]);
        Ok(self.push(value, Op::Affine { x, w, b }, rg))
    }

    /// Elementwise `max(0, x)`; the subgradient at 0 is 0.
    pub fn relu(&mut self, x: Var) -> Var {
        let xv = self.value(x);
        let value = xv.with_shape_of(xv.data().iter().map(|v| v.max(0.0)).collect());
        let rg = self.needs(&[x]);
        self.push(value, Op::Relu(x), rg)
    }

    /// Inverted dropout. Outside training, or with `rate == 0`, returns `x` itself.
    pub fn dropout<R: Rng + ?Sized>(&mut self, x: Var, rate: f64, rng: &mut R, training: bool) -> Var {
        if !training || rate == 0.0 {
            return x;
        }
        let keep = 1.0 / (1.0 - rate);
        let xv = self.value(x);
        let mask: Vec<f64> = (0..xv.len())
            .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
            .collect();
        let value = xv.with_shape_of(xv.data().iter().zip(&mask).map(|(v, m)| v * m).collect());
        let rg = self.needs(&[x]);
        self.push(value, Op::Dropout { x, mask }, rg)
    }

    /// Causal valid convolution per row: `y_t = sum_j kernel_j * x_{t - j*dilation}`.
    pub fn dilated_conv1d(&mut self, x: Var, kernel: Var, dilation: usize) -> Result<Var> {
        let (xv, kv) = (self.value(x), self.value(kernel));
        let k = kv.len();
        if k == 0 || dilation == 0 {
            return Err(Error::InvalidConfig("convolution needs kernel >= 1 and dilation >= 1".into()));
        }
        let (rows, t) = xv.rows_cols();
        let span = (k - 1) * dilation;
        if t < span + 1 {
            return Err(Error::InputTooShort {
                op: "dilated_conv1d",
                len: t,
                required: span + 1,
            });
        }
        let t_out = t - span;
        let (xd, kd) = (xv.data(), kv.data());
        let mut out = vec![0.0; rows * t_out];
        for r in 0..rows {
            let xr = &xd[r * t..(r + 1) * t];
            let yr = &mut out[r * t_out..(r + 1) * t_out];
            for (j, &kj) in kd.iter().enumerate() {
                let start = span - j * dilation;
                for (y, xv) in yr.iter_mut().zip(&xr[start..start + t_out]) {
                    *y += kj * xv;
                }
            }
        }
        let shape = if xv.shape().len() == 2 { vec![rows, t_out] } else { vec![t_out] };
        let value = Tensor::new(shape, out)?;
        let rg = self.needs(&[x, kernel]);
        Ok(self.push(value, Op::Conv { x, kernel, dilation }, rg))
    }

    fn pool_geometry(&self, x: Var, window: usize, op: &'static str) -> Result<(usize, usize, usize, usize)> {
        if window == 0 {
            return Err(Error::InvalidConfig("pooling window must be >= 1".into()));
        }
        let (rows, t) = self.value(x).rows_cols();
        if t < window {
            return Err(Error::InputTooShort {
                op,
                len: t,
                required: window,
            });
        }
        let t_out = t / window;
        // The oldest `t % window` samples are dropped so the newest sample is always pooled.
        Ok((rows, t, t_out, t % window))
    }

    fn pooled_shape(&self, x: Var, rows: usize, t_out: usize) -> Vec<usize> {
        if self.value(x).shape().len() == 2 {
            vec![rows, t_out]
        } else {
            vec![t_out]
        }
    }

    /// Non-overlapping max pooling with stride `window`; ties go to the first index.
    pub fn maxpool1d(&mut self, x: Var, window: usize) -> Result<Var> {
        let (rows, t, t_out, skip) = self.pool_geometry(x, window, "maxpool1d")?;
        let xd = self.value(x).data();
        let mut out = Vec::with_capacity(rows * t_out);
        let mut argmax = Vec::with_capacity(rows * t_out);
        for r in 0..rows {
            for o in 0..t_out {
                let start = r * t + skip + o * window;
                let mut best = start;
                for i in start + 1..start + window {
                    if xd[i] > xd[best] {
                        best = i;
                    }
                }
                out.push(xd[best]);
                argmax.push(best);
            }
        }
        let value = Tensor::new(self.pooled_shape(x, rows, t_out), out)?;
        let rg = self.needs(&[x]);
        Ok(self.push(value, Op::MaxPool { x, argmax }, rg))
    }

    /// Non-overlapping average pooling with stride `window`.
    pub fn avgpool1d(&mut self, x: Var, window: usize) -> Result<Var> {
        let (rows, t, t_out, skip) = self.pool_geometry(x, window, "avgpool1d")?;
        let xd = self.value(x).data();
        let mut out = Vec::with_capacity(rows * t_out);
        for r in 0..rows {
            for o in 0..t_out {
                let start = r * t + skip + o * window;
                out.push(xd[start..start + window].iter().sum::<f64>() / window as f64);
            }
        }
        let value = Tensor::new(self.pooled_shape(x, rows, t_out), out)?;
        let rg = self.needs(&[x]);
        Ok(self.push(value, Op::AvgPool { x, window, skip }, rg))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        let (av, bv) = (self.value(a), self.value(b));
        if av.shape() != bv.shape() {
            return Err(mismatch(op, av, bv));
        }
        Ok(())
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let (av, bv) = (self.value(a), self.value(b));
        let value = av.with_shape_of(av.data().iter().zip(bv.data()).map(|(x, y)| x + y).collect());
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Add(a, b), rg))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let (av, bv) = (self.value(a), self.value(b));
        let value = av.with_shape_of(av.data().iter().zip(bv.data()).map(|(x, y)| x - y).collect());
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Sub(a, b), rg))
    }

    /// `alpha * a + (1 - alpha) * b`, computed by [`convex_mix`].
    /// With `alpha == 0` this records nothing and returns `b`.
    pub fn mix(&mut self, alpha: f64, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mix", a, b)?;
        if alpha == 0.0 {
            return Ok(b);
        }
        let (av, bv) = (self.value(a), self.value(b));
        let value = av.with_shape_of(convex_mix(alpha, av.data(), bv.data()));
        let rg = self.needs(&[a, b]);
        Ok(self.push(value, Op::Mix { a, b, alpha }, rg))
    }

    /// Prepends `pad` zeros to every row.
    pub fn pad_left(&mut self, x: Var, pad: usize) -> Var {
        if pad == 0 {
            return x;
        }
        let xv = self.value(x);
        let (rows, t) = xv.rows_cols();
        let mut out = Vec::with_capacity(rows * (t + pad));
        for r in 0..rows {
            out.extend(std::iter::repeat_n(0.0, pad));
            out.extend_from_slice(xv.row(r));
        }
        let shape = if xv.shape().len() == 2 { vec![rows, t + pad] } else { vec![t + pad] };
        let value = Tensor::new(shape, out).expect("padded shape");
        let rg = self.needs(&[x]);
        self.push(value, Op::PadLeft { x, pad }, rg)
    }

    /// Left-to-right elementwise sum. A single term is returned unchanged.
    pub fn sum(&mut self, terms: &[Var]) -> Result<Var> {
        let (&first, rest) = terms
            .split_first()
            .ok_or_else(|| Error::InvalidConfig("sum of zero terms".into()))?;
        if rest.is_empty() {
            return Ok(first);
        }
        for &t in rest {
            self.same_shape("sum", first, t)?;
        }
        let mut acc = self.value(first).data().to_vec();
        for &t in rest {
            for (a, v) in acc.iter_mut().zip(self.value(t).data()) {
                *a += v;
            }
        }
        let value = self.value(first).with_shape_of(acc);
        let rg = self.needs(terms);
        Ok(self.push(value, Op::Sum(terms.to_vec()), rg))
    }

    /// Mean squared error over all elements, as a scalar.
    pub fn mse_loss(&mut self, pred: Var, target: Var) -> Result<Var> {
        self.same_shape("mse_loss", pred, target)?;
        let (pv, tv) = (self.value(pred), self.value(target));
        let n = pv.len().max(1) as f64;
        let loss = pv
            .data()
            .iter()
            .zip(tv.data())
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n;
        let rg = self.needs(&[pred, target]);
        Ok(self.push(Tensor::scalar(loss), Op::Mse { pred, target }, rg))
    }

    /// Reverse sweep from the scalar `output`. Every node is visited once, in reverse
    /// append order, and gradients of fanned-out values accumulate.
    pub fn backward(&self, output: Var) -> Result<Gradients> {
        let out = self.value(output);
        if out.len() != 1 {
            return Err(Error::ShapeMismatch {
                op: "backward",
                expected: "scalar output".into(),
                found: out.shape_string(),
            });
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; output.0 + 1];
        grads[output.0] = Some(vec![1.0]);

        for i in (0..=output.0).rev() {
            let node = &self.nodes[i];
            if !node.requires_grad {
                continue;
            }
            let (lower, upper) = grads.split_at_mut(i);
            let Some(g) = upper[0].as_deref() else {
                continue;
            };
            let live = |v: &Var| self.nodes[v.0].requires_grad;
            match &node.op {
                Op::Constant | Op::Param(_) => {}
                Op::Affine { x, w, b } => {
                    let (xv, wv) = (self.value(*x), self.value(*w));
                    let (rows, n) = xv.rows_cols();
                    let (m, _) = wv.rows_cols();
                    if live(x) {
                        let gx = accumulate(&mut lower[x.0], rows * n);
                        let wd = wv.data();
                        for r in 0..rows {
                            let gxr = &mut gx[r * n..(r + 1) * n];
                            for i in 0..m {
                                let gri = g[r * m + i];
                                if gri != 0.0 {
                                    for (a, w) in gxr.iter_mut().zip(&wd[i * n..(i + 1) * n]) {
                                        *a += gri * w;
                                    }
                                }
                            }
                        }
                    }
                    if live(w) {
                        let gw = accumulate(&mut lower[w.0], m * n);
                        let xd = xv.data();
                        for r in 0..rows {
                            let xr = &xd[r * n..(r + 1) * n];
                            for i in 0..m {
                                let gri = g[r * m + i];
                                if gri != 0.0 {
                                    for (a, xv) in gw[i * n..(i + 1) * n].iter_mut().zip(xr) {
                                        *a += gri * xv;
                                    }
                                }
                            }
                        }
                    }
                    if live(b) {
                        let gb = accumulate(&mut lower[b.0], m);
                        for r in 0..rows {
                            for (a, gv) in gb.iter_mut().zip(&g[r * m..(r + 1) * m]) {
                                *a += gv;
                            }
                        }
                    }
                }
                Op::Relu(x) => {
                    let xd = self.value(*x).data();
                    let gx = accumulate(&mut lower[x.0], xd.len());
                    for ((a, gv), xv) in gx.iter_mut().zip(g).zip(xd) {
                        if *xv > 0.0 {
                            *a += gv;
                        }
                    }
                }
                Op::Dropout { x, mask } => {
                    let gx = accumulate(&mut lower[x.0], mask.len());
                    for ((a, gv), m) in gx.iter_mut().zip(g).zip(mask) {
                        *a += gv * m;
                    }
                }
                Op::Conv { x, kernel, dilation } => {
                    let (xv, kv) = (self.value(*x), self.value(*kernel));
                    let (rows, t) = xv.rows_cols();
                    let k = kv.len();
                    let span = (k - 1) * dilation;
                    let t_out = t - span;
                    if live(x) {
                        let gx = accumulate(&mut lower[x.0], rows * t);
                        for r in 0..rows {
                            let gr = &g[r * t_out..(r + 1) * t_out];
                            for (j, &kj) in kv.data().iter().enumerate() {
                                let start = r * t + span - j * dilation;
                                for (a, gv) in gx[start..start + t_out].iter_mut().zip(gr) {
                                    *a += kj * gv;
                                }
                            }
                        }
                    }
                    if live(kernel) {
                        let gk = accumulate(&mut lower[kernel.0], k);
                        let xd = xv.data();
                        for r in 0..rows {
                            let gr = &g[r * t_out..(r + 1) * t_out];
                            for (j, a) in gk.iter_mut().enumerate() {
                                let start = r * t + span - j * dilation;
                                *a += gr.iter().zip(&xd[start..start + t_out]).map(|(g, x)| g * x).sum::<f64>();
                            }
                        }
                    }
                }
                Op::MaxPool { x, argmax } => {
                    let gx = accumulate(&mut lower[x.0], self.value(*x).len());
                    for (&idx, gv) in argmax.iter().zip(g) {
                        gx[idx] += gv;
                    }
                }
                Op::AvgPool { x, window, skip } => {
                    let (rows, t) = self.value(*x).rows_cols();
                    let t_out = t / window;
                    let gx = accumulate(&mut lower[x.0], rows * t);
                    let scale = 1.0 / *window as f64;
                    for r in 0..rows {
                        for o in 0..t_out {
                            let gv = g[r * t_out + o] * scale;
                            let start = r * t + skip + o * window;
                            for a in &mut gx[start..start + window] {
                                *a += gv;
                            }
                        }
                    }
                }
                Op::Add(a, b) | Op::Sub(a, b) => {
                    let negate = matches!(node.op, Op::Sub(..));
                    if live(a) {
                        for (s, gv) in accumulate(&mut lower[a.0], g.len()).iter_mut().zip(g) {
                            *s += gv;
                        }
                    }
                    if live(b) {
                        for (s, gv) in accumulate(&mut lower[b.0], g.len()).iter_mut().zip(g) {
                            if negate {
                                *s -= gv;
                            } else {
                                *s += gv;
                            }
                        }
                    }
                }
                Op::Mix { a, b, alpha } => {
                    let beta = 1.0 - alpha;
                    if live(a) {
                        for (s, gv) in accumulate(&mut lower[a.0], g.len()).iter_mut().zip(g) {
                            *s += alpha * gv;
                        }
                    }
                    if live(b) {
                        for (s, gv) in accumulate(&mut lower[b.0], g.len()).iter_mut().zip(g) {
                            *s += beta * gv;
                        }
                    }
                }
                Op::PadLeft { x, pad } => {
                    let (rows, t) = self.value(*x).rows_cols();
                    let width = t + pad;
                    let gx = accumulate(&mut lower[x.0], rows * t);
                    for r in 0..rows {
                        for (a, gv) in gx[r * t..(r + 1) * t].iter_mut().zip(&g[r * width + pad..(r + 1) * width]) {
                            *a += gv;
                        }
                    }
                }
                Op::Sum(terms) => {
                    for t in terms.iter().filter(|t| live(t)) {
                        for (s, gv) in accumulate(&mut lower[t.0], g.len()).iter_mut().zip(g) {
                            *s += gv;
                        }
                    }
                }
                Op::Mse { pred, target } => {
                    let (pv, tv) = (self.value(*pred), self.value(*target));
                    let scale = 2.0 * g[0] / pv.len().max(1) as f64;
                    if live(pred) {
                        let gp = accumulate(&mut lower[pred.0], pv.len());
                        for ((a, p), t) in gp.iter_mut().zip(pv.data()).zip(tv.data()) {
                            *a += scale * (p - t);
                        }
                    }
                    if live(target) {
                        let gt = accumulate(&mut lower[target.0], tv.len());
                        for ((a, p), t) in gt.iter_mut().zip(pv.data()).zip(tv.data()) {
                            *a -= scale * (p - t);
                        }
                    }
                }
            }
        }

        let params = self.nodes[..=output.0]
            .iter()
            .enumerate()
            .filter_map(|(i, n)| match n.op {
                Op::Param(p) => Some((p, i)),
                _ => None,
            })
            .collect();
        Ok(Gradients { grads, params })
    }
}

impl Gradients {
    /// Gradient with respect to a recorded node, or `None` if it received none.
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads.get(v.0).and_then(|g| g.as_deref())
    }

    /// Per-parameter gradients, summed over every node registered with that index.
    /// Parameters that did not influence the output get exact zeros.
    pub fn params(&self, shapes: &[&[usize]]) -> Vec<Tensor> {
        let mut out: Vec<Tensor> = shapes.iter().map(|s| Tensor::zeros(s)).collect();
        for &(p, node) in &self.params {
            if let (Some(dst), Some(Some(g))) = (out.get_mut(p), self.grads.get(node)) {
                for (a, v) in dst.data_mut().iter_mut().zip(g) {
                    *a += v;
                }
            }
        }
        out
    }
}
