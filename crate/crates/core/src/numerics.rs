//! Dense double-precision kernels with hand-written backward passes.

use rand::Rng;

use crate::error::{Error, Result};

/// Layer-norm epsilon used by the model.
pub const LN_EPS: f64 = 1e-5;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor2 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Tensor2 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Tensor2 { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape(format!(
                "{} values for a {rows}x{cols} tensor",
                data.len()
            )));
        }
        Ok(Tensor2 { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::Shape("ragged rows".into()));
        }
        Ok(Tensor2 { rows: rows.len(), cols, data: rows.concat() })
    }

    /// A 1×n row vector.
    pub fn row_vector(values: Vec<f64>) -> Self {
        Tensor2 { rows: 1, cols: values.len(), data: values }
    }

    pub fn identity(n: usize) -> Self {
        let mut t = Tensor2::zeros(n, n);
        for i in 0..n {
            t[(i, i)] = 1.0;
        }
        t
    }

    pub fn uniform<R: Rng>(rows: usize, cols: usize, bound: f64, rng: &mut R) -> Self {
        let data = (0..rows * cols).map(|_| rng.gen_range(-bound..=bound)).collect();
        Tensor2 { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// New tensor made of the given rows, in order.
    pub fn gather_rows(&self, idx: &[usize]) -> Tensor2 {
        let mut data = Vec::with_capacity(idx.len() * self.cols);
        for &i in idx {
            data.extend_from_slice(self.row(i));
        }
        Tensor2 { rows: idx.len(), cols: self.cols, data }
    }

    pub fn transpose(&self) -> Tensor2 {
        let mut t = Tensor2::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn fill(&mut self, v: f64) {
        self.data.iter_mut().for_each(|x| *x = v);
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|x| *x *= s);
    }

    /// `self += other`, shapes must agree.
    pub fn add_assign(&mut self, other: &Tensor2) {
        assert_eq!(self.shape(), other.shape(), "add_assign shape mismatch");
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    pub fn sum_squares(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl std::ops::Index<(usize, usize)> for Tensor2 {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.cols + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for Tensor2 {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `a · b`.
pub fn matmul(a: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    if a.cols != b.rows {
        return Err(Error::Shape(format!(
            "matmul {}x{} by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Tensor2::zeros(a.rows, b.cols);
    for i in 0..a.rows {
        let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
        for (k, &av) in a.row(i).iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            for (o, bv) in orow.iter_mut().zip(b.row(k)) {
                *o += av * bv;
            }
        }
    }
    Ok(out)
}

/// `a · bᵀ`.
pub fn matmul_bt(a: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    if a.cols != b.cols {
        return Err(Error::Shape(format!(
            "matmul_bt {}x{} by ({}x{})ᵀ",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Tensor2::zeros(a.rows, b.rows);
    for i in 0..a.rows {
        for j in 0..b.rows {
            out[(i, j)] = dot(a.row(i), b.row(j));
        }
    }
    Ok(out)
}

/// `aᵀ · b`.
pub fn matmul_at(a: &Tensor2, b: &Tensor2) -> Result<Tensor2> {
    if a.rows != b.rows {
        return Err(Error::Shape(format!(
            "matmul_at ({}x{})ᵀ by {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    let mut out = Tensor2::zeros(a.cols, b.cols);
    for k in 0..a.rows {
        for (i, &av) in a.row(k).iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let orow = &mut out.data[i * b.cols..(i + 1) * b.cols];
            for (o, bv) in orow.iter_mut().zip(b.row(k)) {
                *o += av * bv;
            }
        }
    }
    Ok(out)
}

/// Gradients of `c = a · b` given `dc`.
pub fn matmul_backward(a: &Tensor2, b: &Tensor2, dc: &Tensor2) -> Result<(Tensor2, Tensor2)> {
    Ok((matmul_bt(dc, b)?, matmul_at(a, dc)?))
}

/// Row-wise softmax. `mask[j] == false` gives column `j` weight 0 in every row.
pub fn softmax_rows(x: &Tensor2, mask: Option<&[bool]>) -> Result<Tensor2> {
    if let Some(m) = mask {
        if m.len() != x.cols {
            return Err(Error::Shape(format!("mask of {} for {} columns", m.len(), x.cols)));
        }
        if x.rows > 0 && !m.iter().any(|&b| b) {
            return Err(Error::Invalid("softmax over a fully masked row".into()));
        }
    }
    if x.rows > 0 && x.cols == 0 {
        return Err(Error::Invalid("softmax over an empty row".into()));
    }
    let keep = |j: usize| mask.is_none_or(|m| m[j]);
    let mut out = Tensor2::zeros(x.rows, x.cols);
    for r in 0..x.rows {
        let row = x.row(r);
        let max = (0..x.cols)
            .filter(|&j| keep(j))
            .map(|j| row[j])
            .fold(f64::NEG_INFINITY, f64::max);
        let orow = out.row_mut(r);
        let mut sum = 0.0;
        for j in 0..row.len() {
            if keep(j) {
                orow[j] = (row[j] - max).exp();
                sum += orow[j];
            }
        }
        orow.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(out)
}

/// Gradient of the softmax input given its output `y` and `dy`.
pub fn softmax_rows_backward(y: &Tensor2, dy: &Tensor2) -> Tensor2 {
    let mut dx = Tensor2::zeros(y.rows, y.cols);
    for r in 0..y.rows {
        let (yr, dyr) = (y.row(r), dy.row(r));
        let s = dot(yr, dyr);
        for (j, d) in dx.row_mut(r).iter_mut().enumerate() {
            *d = yr[j] * (dyr[j] - s);
        }
    }
    dx
}

#[derive(Debug, Clone)]
pub struct LayerNormCache {
    /// Standardized rows before the affine map.
    pub xhat: Tensor2,
    pub inv_std: Vec<f64>,
}

/// Per-row standardization followed by `gain ⊙ x̂ + bias`.
pub fn layer_norm(x: &Tensor2, gain: &[f64], bias: &[f64], eps: f64) -> Result<Tensor2> {
    layer_norm_forward(x, gain, bias, eps).map(|(y, _)| y)
}

pub fn layer_norm_forward(
    x: &Tensor2,
    gain: &[f64],
    bias: &[f64],
    eps: f64,
) -> Result<(Tensor2, LayerNormCache)> {
    if gain.len() != x.cols || bias.len() != x.cols {
        return Err(Error::Shape(format!(
            "layer norm gain/bias of {}/{} for {} columns",
            gain.len(),
            bias.len(),
            x.cols
        )));
    }
    let n = x.cols as f64;
    let mut xhat = Tensor2::zeros(x.rows, x.cols);
    let mut y = Tensor2::zeros(x.rows, x.cols);
    let mut inv_std = Vec::with_capacity(x.rows);
    for r in 0..x.rows {
        let row = x.row(r);
        let mean = row.iter().sum::<f64>() / n;
        let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let is = 1.0 / (var + eps).sqrt();
        inv_std.push(is);
        for c in 0..x.cols {
            let h = (row[c] - mean) * is;
            xhat[(r, c)] = h;
            y[(r, c)] = gain[c] * h + bias[c];
        }
    }
    Ok((y, LayerNormCache { xhat, inv_std }))
}

/// Returns `(dx, dgain, dbias)`.
pub fn layer_norm_backward(cache: &LayerNormCache, gain: &[f64], dy: &Tensor2) -> (Tensor2, Vec<f64>, Vec<f64>) {
    let (rows, cols) = dy.shape();
    let n = cols as f64;
    let mut dx = Tensor2::zeros(rows, cols);
    let mut dgain = vec![0.0; cols];
    let mut dbias = vec![0.0; cols];
    for r in 0..rows {
        let (xh, dyr) = (cache.xhat.row(r), dy.row(r));
        let dxhat: Vec<f64> = (0..cols).map(|c| dyr[c] * gain[c]).collect();
        for c in 0..cols {
            dgain[c] += dyr[c] * xh[c];
            dbias[c] += dyr[c];
        }
        let mean_d = dxhat.iter().sum::<f64>() / n;
        let mean_dx = dot(&dxhat, xh) / n;
        for (c, d) in dx.row_mut(r).iter_mut().enumerate() {
            *d = cache.inv_std[r] * (dxhat[c] - mean_d - xh[c] * mean_dx);
        }
    }
    (dx, dgain, dbias)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// One LSTM direction; gate blocks are ordered input, forget, cell, output.
#[derive(Debug, Clone, PartialEq)]
pub struct LstmParams {
    /// 4h × d
    pub w_ih: Tensor2,
    /// 4h × h
    pub w_hh: Tensor2,
    /// 1 × 4h
    pub bias: Tensor2,
}

impl LstmParams {
    /// Weights uniform in ±1/√h, forget-gate bias 1, other biases 0.
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let bound = 1.0 / (hidden as f64).sqrt();
        let mut bias = Tensor2::zeros(1, 4 * hidden);
        bias.as_mut_slice()[hidden..2 * hidden].fill(1.0);
        LstmParams {
            w_ih: Tensor2::uniform(4 * hidden, input, bound, rng),
            w_hh: Tensor2::uniform(4 * hidden, hidden, bound, rng),
            bias,
        }
    }

    pub fn zeros_like(&self) -> Self {
        LstmParams {
            w_ih: Tensor2::zeros(self.w_ih.rows, self.w_ih.cols),
            w_hh: Tensor2::zeros(self.w_hh.rows, self.w_hh.cols),
            bias: Tensor2::zeros(1, self.bias.cols),
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.cols
    }

    pub fn input(&self) -> usize {
        self.w_ih.cols
    }
}

#[derive(Debug, Clone)]
pub struct LstmCache {
    /// Post-activation gates per step, each 4h wide.
    gates: Vec<Vec<f64>>,
    /// Cell state per step.
    c: Vec<Vec<f64>>,
    tanh_c: Vec<Vec<f64>>,
    /// Hidden outputs, n × h.
    pub h: Tensor2,
}

/// Runs the LSTM over the rows of `x` from first to last.
pub fn lstm_forward(x: &Tensor2, p: &LstmParams) -> Result<LstmCache> {
    let hd = p.hidden();
    if x.cols != p.input() {
        return Err(Error::Shape(format!("LSTM input {} vs {}", x.cols, p.input())));
    }
    let n = x.rows;
    let mut cache = LstmCache {
        gates: Vec::with_capacity(n),
        c: Vec::with_capacity(n),
        tanh_c: Vec::with_capacity(n),
        h: Tensor2::zeros(n, hd),
    };
    let mut h_prev = vec![0.0; hd];
    let mut c_prev = vec![0.0; hd];
    for t in 0..n {
        let xt = x.row(t);
        let mut a: Vec<f64> = p.bias.as_slice().to_vec();
        for (j, aj) in a.iter_mut().enumerate() {
            *aj += dot(p.w_ih.row(j), xt) + dot(p.w_hh.row(j), &h_prev);
        }
        for j in 0..hd {
            a[j] = sigmoid(a[j]);
            a[hd + j] = sigmoid(a[hd + j]);
            a[2 * hd + j] = a[2 * hd + j].tanh();
            a[3 * hd + j] = sigmoid(a[3 * hd + j]);
        }
        let c: Vec<f64> = (0..hd).map(|j| a[hd + j] * c_prev[j] + a[j] * a[2 * hd + j]).collect();
        let tc: Vec<f64> = c.iter().map(|v| v.tanh()).collect();
        for j in 0..hd {
            cache.h[(t, j)] = a[3 * hd + j] * tc[j];
        }
        h_prev = cache.h.row(t).to_vec();
        c_prev = c.clone();
        cache.gates.push(a);
        cache.c.push(c);
        cache.tanh_c.push(tc);
    }
    Ok(cache)
}

/// Back-propagates `dh` (n × h) through a forward run; parameter gradients
/// are added into `grads`, the input gradient is returned.
pub fn lstm_backward(x: &Tensor2, p: &LstmParams, cache: &LstmCache, dh: &Tensor2, grads: &mut LstmParams) -> Tensor2 {
    let hd = p.hidden();
    let n = x.rows;
    let mut dx = Tensor2::zeros(n, x.cols);
    let mut dh_next = vec![0.0; hd];
    let mut dc_next = vec![0.0; hd];
    let zeros = vec![0.0; hd];
    let mut da = vec![0.0; 4 * hd];
    for t in (0..n).rev() {
        let g = &cache.gates[t];
        let tc = &cache.tanh_c[t];
        let c_prev = if t > 0 { &cache.c[t - 1] } else { &zeros };
        let h_prev = if t > 0 { cache.h.row(t - 1) } else { &zeros[..] };
        for j in 0..hd {
            let (i, f, gg, o) = (g[j], g[hd + j], g[2 * hd + j], g[3 * hd + j]);
            let dht = dh[(t, j)] + dh_next[j];
            let dc = dht * o * (1.0 - tc[j] * tc[j]) + dc_next[j];
            da[j] = dc * gg * i * (1.0 - i);
            da[hd + j] = dc * c_prev[j] * f * (1.0 - f);
            da[2 * hd + j] = dc * i * (1.0 - gg * gg);
            da[3 * hd + j] = dht * tc[j] * o * (1.0 - o);
            dc_next[j] = dc * f;
        }
        let xt = x.row(t);
        dh_next.fill(0.0);
        let dxt = dx.row_mut(t);
        for (r, &d) in da.iter().enumerate() {
            if d == 0.0 {
                continue;
            }
            grads.bias.as_mut_slice()[r] += d;
            for (gw, xv) in grads.w_ih.row_mut(r).iter_mut().zip(xt) {
                *gw += d * xv;
            }
            for (gw, hv) in grads.w_hh.row_mut(r).iter_mut().zip(h_prev) {
                *gw += d * hv;
            }
            for (o, wv) in dxt.iter_mut().zip(p.w_ih.row(r)) {
                *o += d * wv;
            }
            for (o, wv) in dh_next.iter_mut().zip(p.w_hh.row(r)) {
                *o += d * wv;
            }
        }
    }
    dx
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams {
    pub fwd: LstmParams,
    pub bwd: LstmParams,
}

impl BiLstmParams {
    pub fn init<R: Rng>(input: usize, hidden: usize, rng: &mut R) -> Self {
        let fwd = LstmParams::init(input, hidden, rng);
        let bwd = LstmParams::init(input, hidden, rng);
        BiLstmParams { fwd, bwd }
    }

    pub fn zeros_like(&self) -> Self {
        BiLstmParams { fwd: self.fwd.zeros_like(), bwd: self.bwd.zeros_like() }
    }
}

#[derive(Debug, Clone)]
pub struct BiLstmCache {
    fwd: LstmCache,
    bwd: LstmCache,
    reversed: Tensor2,
    /// n × 2h, forward state then backward state per row.
    pub out: Tensor2,
}

fn reverse_rows(x: &Tensor2) -> Tensor2 {
    let idx: Vec<usize> = (0..x.rows).rev().collect();
    x.gather_rows(&idx)
}

pub fn bilstm_forward(x: &Tensor2, p: &BiLstmParams) -> Result<BiLstmCache> {
    let fwd = lstm_forward(x, &p.fwd)?;
    let reversed = reverse_rows(x);
    let bwd = lstm_forward(&reversed, &p.bwd)?;
    let n = x.rows;
    let hd = p.fwd.hidden();
    let mut out = Tensor2::zeros(n, 2 * hd);
    for t in 0..n {
        let row = out.row_mut(t);
        row[..hd].copy_from_slice(fwd.h.row(t));
        row[hd..].copy_from_slice(bwd.h.row(n - 1 - t));
    }
    Ok(BiLstmCache { fwd, bwd, reversed, out })
}

/// Row t of the output is `[forward state at t; backward state at t]`.
pub fn bilstm_encode(x: &Tensor2, p: &BiLstmParams) -> Result<Tensor2> {
    if x.rows == 0 {
        return Err(Error::Invalid("BiLSTM over an empty sequence".into()));
    }
    bilstm_forward(x, p).map(|c| c.out)
}

pub fn bilstm_backward(
    x: &Tensor2,
    p: &BiLstmParams,
    cache: &BiLstmCache,
    dout: &Tensor2,
    grads: &mut BiLstmParams,
) -> Tensor2 {
    let n = x.rows;
    let hd = p.fwd.hidden();
    let mut dfwd = Tensor2::zeros(n, hd);
    let mut dbwd = Tensor2::zeros(n, hd);
    for t in 0..n {
        dfwd.row_mut(t).copy_from_slice(&dout.row(t)[..hd]);
        dbwd.row_mut(n - 1 - t).copy_from_slice(&dout.row(t)[hd..]);
    }
    let mut dx = lstm_backward(x, &p.fwd, &cache.fwd, &dfwd, &mut grads.fwd);
    let dxr = lstm_backward(&cache.reversed, &p.bwd, &cache.bwd, &dbwd, &mut grads.bwd);
    for t in 0..n {
        for (a, b) in dx.row_mut(t).iter_mut().zip(dxr.row(n - 1 - t)) {
            *a += b;
        }
    }
    dx
}

/// Denominator floor for the relative error, so that gradients which are
/// zero up to rounding do not blow the ratio up.
pub const FD_FLOOR: f64 = 1e-6;

/// Largest elementwise relative error between `analytic` and central
/// differences `(f(x+ε) − f(x−ε)) / 2ε` of `f` at `x`.
pub fn finite_diff_check<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], analytic: &[f64], eps: f64) -> f64 {
    assert_eq!(x.len(), analytic.len(), "gradient length mismatch");
    let mut p = x.to_vec();
    let mut worst = 0.0f64;
    for i in 0..p.len() {
        let orig = p[i];
        p[i] = orig + eps;
        let up = f(&p);
        p[i] = orig - eps;
        let down = f(&p);
        p[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        let denom = analytic[i].abs().max(numeric.abs()).max(FD_FLOOR);
        worst = worst.max((analytic[i] - numeric).abs() / denom);
    }
    worst
}
