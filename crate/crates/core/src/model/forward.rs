use rand::RngCore;

use super::config::{ConvVariant, ModelConfig};
use super::params::{BlockLayout, BlockParams, Dense, ModelParams, StackLayout};
use crate::error::{Error, Result};
use crate::nn::{convex_mix, Tape, Tensor, Var};
use crate::series::{check_finite, Series};
use crate::wavelet::{mdwd_with_boundary, WaveletPyramid};

/// Whether dropout is active, and the generator that draws its masks.
pub struct Mode<'a> {
    rng: Option<&'a mut dyn RngCore>,
}

impl<'a> Mode<'a> {
    pub fn inference() -> Self {
        Mode { rng: None }
    }

    pub fn training(rng: &'a mut dyn RngCore) -> Self {
        Mode { rng: Some(rng) }
    }

    pub fn is_training(&self) -> bool {
        self.rng.is_some()
    }

    fn dropout(&mut self, tape: &mut Tape, x: Var, rate: f64) -> Var {
        match self.rng.as_deref_mut() {
            Some(rng) => tape.dropout(x, rate, rng, true),
            None => x,
        }
    }
}

/// Per-window interpretability output: what each stack saw and produced.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastBundle {
    /// Sum of the stack forecasts, accumulated in stack order.
    pub global: Series,
    pub per_stack_forecast: Vec<Series>,
    /// Stack backcasts, left-padded with zeros to the lookback length.
    pub per_stack_backcast: Vec<Series>,
    /// Stack inputs after infusion, before the conv front end.
    pub stack_inputs: Vec<Series>,
    /// Wavelet branch blended into each stack; empty when the wavelet is detached.
    pub infused_signals: Vec<Series>,
}

/// Tape handles for one stack.
#[derive(Debug, Clone)]
pub struct StackVars {
    pub residual: Var,
    pub input: Var,
    pub wavelet: Option<Var>,
    pub conv_out: Var,
    pub block_inputs: Vec<Var>,
    pub block_backcasts: Vec<Var>,
    pub block_forecasts: Vec<Var>,
    /// Summed block backcasts at conv length.
    pub backcast_raw: Var,
    /// `backcast_raw` left-padded to the lookback length.
    pub backcast: Var,
    pub forecast: Var,
}

/// Tape handles for a full forward pass.
#[derive(Debug, Clone)]
pub struct ForwardVars {
    pub params: Vec<Var>,
    pub input: Var,
    pub stacks: Vec<StackVars>,
    pub global: Var,
}

/// Branch blended into stack `stack` (1-based): the coarsest approximation for the first
/// stack, then details from coarse to fine.
pub fn wavelet_branch(pyramid: &WaveletPyramid, stack: usize) -> Result<&Series> {
    let n = pyramid.levels() + 1;
    if stack == 0 || stack > n {
        return Err(Error::MissingPyramidLevel { level: stack });
    }
    if stack == 1 {
        pyramid.approx(n - 1)
    } else {
        pyramid.detail(n - stack + 1)
    }
    .map_err(|_| Error::MissingPyramidLevel { level: n - stack + 1 })
}

/// Stack input: `alpha * branch + (1 - alpha) * residual`, where the residual is `x` for
/// the first stack and the previous stack's input minus its backcast afterwards.
///
/// `prev` is `(previous input, previous backcast)`, both at lookback length.
pub fn infuse(
    stack: usize,
    x: &[f64],
    prev: Option<(&[f64], &[f64])>,
    pyramid: &WaveletPyramid,
    alpha: f64,
) -> Result<Series> {
    let branch = wavelet_branch(pyramid, stack)?;
    let residual: Vec<f64> = if stack == 1 {
        x.to_vec()
    } else {
        let (input, backcast) = prev.ok_or(Error::MissingPredecessor { stack })?;
        input.iter().zip(backcast).map(|(a, b)| a - b).collect()
    };
    if branch.len() != residual.len() {
        return Err(Error::ShapeMismatch {
            op: "infuse",
            expected: format!("length {}", branch.len()),
            found: format!("length {}", residual.len()),
        });
    }
    Ok(Series::new(convex_mix(alpha, branch, &residual)))
}

fn dense(tape: &mut Tape, pv: &[Var], x: Var, d: Dense) -> Result<Var> {
    tape.affine(x, pv[d.weight], pv[d.bias])
}

fn block_vars(
    tape: &mut Tape,
    x: Var,
    layout: &BlockLayout,
    pv: &[Var],
    dropout: f64,
    mode: &mut Mode,
) -> Result<(Var, Var)> {
    let mut h = x;
    for d in &layout.trunk {
        h = dense(tape, pv, h, *d)?;
        h = tape.relu(h);
        h = mode.dropout(tape, h, dropout);
    }
    let theta_b = dense(tape, pv, h, layout.theta_backcast)?;
    let theta_f = dense(tape, pv, h, layout.theta_forecast)?;
    let backcast = dense(tape, pv, theta_b, layout.backcast)?;
    let forecast = dense(tape, pv, theta_f, layout.forecast)?;
    Ok((backcast, forecast))
}

/// Conv front end of stack `i` (0-based) on the tape.
pub fn stack_conv_on_tape(
    tape: &mut Tape,
    x: Var,
    i: usize,
    layout: &StackLayout,
    pv: &[Var],
    cfg: &ModelConfig,
) -> Result<Var> {
    let k = cfg.kernel_size(i);
    match cfg.conv_variant(i) {
        ConvVariant::None => Ok(x),
        ConvVariant::Dcn => layout
            .conv
            .iter()
            .zip(cfg.dilations())
            .try_fold(x, |h, (&kernel, d)| tape.dilated_conv1d(h, pv[kernel], d)),
        ConvVariant::Cnn => layout
            .conv
            .iter()
            .try_fold(x, |h, &kernel| tape.dilated_conv1d(h, pv[kernel], 1)),
        ConvVariant::MaxPool => tape.maxpool1d(x, k),
        ConvVariant::AvgPool => tape.avgpool1d(x, k),
    }
}

struct StackBody {
    block_inputs: Vec<Var>,
    block_backcasts: Vec<Var>,
    block_forecasts: Vec<Var>,
    backcast: Var,
    forecast: Var,
}

fn stack_body(
    tape: &mut Tape,
    conv_out: Var,
    layout: &StackLayout,
    pv: &[Var],
    dropout: f64,
    mode: &mut Mode,
) -> Result<StackBody> {
    let mut block_in = conv_out;
    let mut body = StackBody {
        block_inputs: Vec::new(),
        block_backcasts: Vec::new(),
        block_forecasts: Vec::new(),
        backcast: conv_out,
        forecast: conv_out,
    };
    for (k, block) in layout.blocks.iter().enumerate() {
        if k > 0 {
            block_in = tape.sub(block_in, body.block_backcasts[k - 1])?;
        }
        let (bc, fc) = block_vars(tape, block_in, block, pv, dropout, mode)?;
        body.block_inputs.push(block_in);
        body.block_backcasts.push(bc);
        body.block_forecasts.push(fc);
    }
    body.backcast = tape.sum(&body.block_backcasts)?;
    body.forecast = tape.sum(&body.block_forecasts)?;
    Ok(body)
}

fn batch_pyramids(cfg: &ModelConfig, inputs: &Tensor) -> Result<Vec<Tensor>> {
    let (rows, t) = inputs.rows_cols();
    let mut per_stack = vec![Vec::with_capacity(rows * t); cfg.n_stacks];
    for r in 0..rows {
        let pyramid = mdwd_with_boundary(inputs.row(r), cfg.wavelet_levels(), cfg.wavelet, cfg.boundary)?;
        for (s, buf) in per_stack.iter_mut().enumerate() {
            buf.extend_from_slice(wavelet_branch(&pyramid, s + 1)?);
        }
    }
    per_stack
        .into_iter()
        .map(|data| Tensor::new(inputs.shape().to_vec(), data))
        .collect()
}

/// Records the whole model on `tape` for a `[B, T]` (or `[T]`) batch of windows.
pub fn forward_on_tape(
    tape: &mut Tape,
    params: &ModelParams,
    cfg: &ModelConfig,
    inputs: &Tensor,
    mode: &mut Mode,
) -> Result<ForwardVars> {
    let (_, t) = inputs.rows_cols();
    if t != cfg.lookback || inputs.shape().len() > 2 {
        return Err(Error::ShapeMismatch {
            op: "model_forward",
            expected: format!("windows of length {}", cfg.lookback),
            found: format!("{:?}", inputs.shape()),
        });
    }
    check_finite(inputs.data())?;
    let pv: Vec<Var> = params
        .store()
        .tensors()
        .iter()
        .enumerate()
        .map(|(i, p)| tape.param(i, p.clone()))
        .collect();
    let branches = if cfg.uses_wavelet() {
        Some(batch_pyramids(cfg, inputs)?)
    } else {
        None
    };

    let x = tape.constant(inputs.clone());
    let mut stacks: Vec<StackVars> = Vec::with_capacity(cfg.n_stacks);
    for (i, layout) in params.stacks().iter().enumerate() {
        let residual = match stacks.last() {
            None => x,
            Some(prev) => tape.sub(prev.input, prev.backcast)?,
        };
        let (input, wavelet) = match &branches {
            Some(b) => {
                let w = tape.constant(b[i].clone());
                (tape.mix(cfg.alpha, w, residual)?, Some(w))
            }
            None => (residual, None),
        };
        let conv_out = stack_conv_on_tape(tape, input, i, layout, &pv, cfg)?;
        let body = stack_body(tape, conv_out, layout, &pv, cfg.dropout, mode)?;
        let backcast = tape.pad_left(body.backcast, cfg.lookback - layout.conv_out_len);
        stacks.push(StackVars {
            residual,
            input,
            wavelet,
            conv_out,
            block_inputs: body.block_inputs,
            block_backcasts: body.block_backcasts,
            block_forecasts: body.block_forecasts,
            backcast_raw: body.backcast,
            backcast,
            forecast: body.forecast,
        });
    }
    let forecasts: Vec<Var> = stacks.iter().map(|s| s.forecast).collect();
    let global = tape.sum(&forecasts)?;
    Ok(ForwardVars {
        params: pv,
        input: x,
        stacks,
        global,
    })
}

fn row_series(tape: &Tape, v: Var, r: usize) -> Series {
    Series::from(tape.value(v).row(r))
}

/// Splits a recorded batch into one bundle per window.
pub fn bundles_from_tape(tape: &Tape, vars: &ForwardVars) -> Vec<ForecastBundle> {
    let (rows, _) = tape.value(vars.global).rows_cols();
    (0..rows)
        .map(|r| ForecastBundle {
            global: row_series(tape, vars.global, r),
            per_stack_forecast: vars.stacks.iter().map(|s| row_series(tape, s.forecast, r)).collect(),
            per_stack_backcast: vars.stacks.iter().map(|s| row_series(tape, s.backcast, r)).collect(),
            stack_inputs: vars.stacks.iter().map(|s| row_series(tape, s.input, r)).collect(),
            infused_signals: vars
                .stacks
                .iter()
                .filter_map(|s| s.wavelet.map(|w| row_series(tape, w, r)))
                .collect(),
        })
        .collect()
}

/// Inference on one window.
pub fn model_forward(x: &[f64], params: &ModelParams, cfg: &ModelConfig) -> Result<ForecastBundle> {
    let mut tape = Tape::new();
    let vars = forward_on_tape(&mut tape, params, cfg, &Tensor::vector(x.to_vec()), &mut Mode::inference())?;
    Ok(bundles_from_tape(&tape, &vars).remove(0))
}

/// Inference on many windows at once; returns global forecasts as `[B, H]`.
pub fn predict_batch(inputs: &Tensor, params: &ModelParams, cfg: &ModelConfig) -> Result<Tensor> {
    let mut tape = Tape::new();
    let vars = forward_on_tape(&mut tape, params, cfg, inputs, &mut Mode::inference())?;
    Ok(tape.value(vars.global).clone())
}

/// Inference forecasts for each window, batched in chunks.
pub fn predict(windows: &[&[f64]], params: &ModelParams, cfg: &ModelConfig) -> Result<Vec<Series>> {
    let mut out = Vec::with_capacity(windows.len());
    for chunk in windows.chunks(256) {
        let batch = predict_batch(&Tensor::from_rows(chunk)?, params, cfg)?;
        let (rows, _) = batch.rows_cols();
        out.extend((0..rows).map(|r| Series::from(batch.row(r))));
    }
    Ok(out)
}

/// One block on its own: trunk, coefficient heads and linear projections.
pub fn block_forward(x: &[f64], params: &BlockParams) -> Result<(Series, Series)> {
    let mut tape = Tape::new();
    let mut pv = Vec::new();
    let mut dense = |tape: &mut Tape, (w, b): &(Tensor, Tensor)| {
        pv.push(tape.constant(w.clone()));
        pv.push(tape.constant(b.clone()));
        Dense {
            weight: pv.len() - 2,
            bias: pv.len() - 1,
        }
    };
    let layout = BlockLayout {
        trunk: params.trunk.iter().map(|p| dense(&mut tape, p)).collect(),
        theta_backcast: dense(&mut tape, &params.theta_backcast),
        theta_forecast: dense(&mut tape, &params.theta_forecast),
        backcast: dense(&mut tape, &params.backcast),
        forecast: dense(&mut tape, &params.forecast),
    };
    let xv = tape.constant(Tensor::vector(x.to_vec()));
    let (bc, fc) = block_vars(&mut tape, xv, &layout, &pv, 0.0, &mut Mode::inference())?;
    Ok((Series::from(tape.value(bc).data()), Series::from(tape.value(fc).data())))
}

/// Conv front end of stack `stack` (0-based) applied to a single input.
pub fn stack_conv(x_in: &[f64], stack: usize, params: &ModelParams, cfg: &ModelConfig) -> Result<Series> {
    let mut tape = Tape::new();
    let pv: Vec<Var> = params.store().tensors().iter().map(|p| tape.constant(p.clone())).collect();
    let x = tape.constant(Tensor::vector(x_in.to_vec()));
    let y = stack_conv_on_tape(&mut tape, x, stack, &params.stacks()[stack], &pv, cfg)?;
    Ok(Series::from(tape.value(y).data()))
}

/// Output of one stack on a single input.
#[derive(Debug, Clone, PartialEq)]
pub struct StackOutput {
    /// Summed block backcasts, left-padded to the input length.
    pub backcast: Series,
    pub forecast: Series,
    pub conv_out: Series,
    /// The stack's own input, passed on to the next infusion step.
    pub residual_out: Series,
}

/// Conv front end plus blocks of stack `stack` (0-based), in inference mode.
pub fn stack_forward(x_in: &[f64], stack: usize, params: &ModelParams, cfg: &ModelConfig) -> Result<StackOutput> {
    let mut tape = Tape::new();
    let pv: Vec<Var> = params.store().tensors().iter().map(|p| tape.constant(p.clone())).collect();
    let x = tape.constant(Tensor::vector(x_in.to_vec()));
    let layout = &params.stacks()[stack];
    let conv_out = stack_conv_on_tape(&mut tape, x, stack, layout, &pv, cfg)?;
    let body = stack_body(&mut tape, conv_out, layout, &pv, 0.0, &mut Mode::inference())?;
    let pad = x_in.len() - tape.value(body.backcast).len();
    let backcast = tape.pad_left(body.backcast, pad);
    Ok(StackOutput {
        backcast: Series::from(tape.value(backcast).data()),
        forecast: Series::from(tape.value(body.forecast).data()),
        conv_out: Series::from(tape.value(conv_out).data()),
        residual_out: Series::from(x_in),
    })
}
