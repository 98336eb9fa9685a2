//! The wavelet-infused stack architecture.

mod config;
mod forward;
mod params;

pub use config::{ConvVariant, ModelConfig, PerStack};
pub use forward::{
    block_forward, bundles_from_tape, forward_on_tape, infuse, model_forward, predict, predict_batch,
    stack_conv, stack_conv_on_tape, stack_forward, wavelet_branch, ForecastBundle, ForwardVars, Mode,
    StackOutput, StackVars,
};
pub use params::{BlockLayout, BlockParams, Dense, ModelParams, ParamStore, StackLayout};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Tensor;
    use crate::wavelet::{mdwd, WaveletKind};

    fn mat(rows: usize, cols: usize, v: &[f64]) -> Tensor {
        Tensor::matrix(rows, cols, v.to_vec()).unwrap()
    }

    #[test]
    fn infuse_endpoints_and_mix() {
        let x: Vec<f64> = (0..8).map(|t| t as f64).collect();
        let p = mdwd(&x, 1, WaveletKind::Haar).unwrap();
        let prev_in = vec![1.0; 8];
        let prev_bc = vec![0.25; 8];
        let out = infuse(2, &x, Some((&prev_in, &prev_bc)), &p, 0.0).unwrap();
        assert_eq!(out.values(), &[0.75; 8]);
        let out = infuse(1, &x, None, &p, 1.0).unwrap();
        assert_eq!(&out, p.approx(1).unwrap());
        assert!(matches!(infuse(2, &x, None, &p, 0.4), Err(crate::Error::MissingPredecessor { stack: 2 })));
        assert!(matches!(infuse(3, &x, None, &p, 0.4), Err(crate::Error::MissingPyramidLevel { .. })));
    }

    #[test]
    fn infuse_elementwise_example() {
        // Branch [1, 1] against residual [0, 2]: a two-sample constant has no detail,
        // so build the pyramid from [1, 1] and use the first stack.
        let p = mdwd(&[1.0, 1.0], 1, WaveletKind::Haar).unwrap();
        let out = infuse(1, &[0.0, 2.0], None, &p, 0.4).unwrap();
        assert!((out[0] - 0.4).abs() < 1e-15 && (out[1] - 1.6).abs() < 1e-15, "{out:?}");
    }

    fn toy_block() -> BlockParams {
        BlockParams {
            trunk: vec![(mat(2, 2, &[1.0, -1.0, 0.5, 2.0]), Tensor::vector(vec![0.1, -0.2]))],
            theta_backcast: (mat(2, 2, &[1.0, 0.0, 1.0, 1.0]), Tensor::vector(vec![0.0, 0.5])),
            theta_forecast: (mat(1, 2, &[2.0, -1.0]), Tensor::vector(vec![0.3])),
            backcast: (mat(2, 2, &[1.0, 2.0, 0.0, -1.0]), Tensor::vector(vec![0.0, 0.0])),
            forecast: (mat(3, 1, &[1.0, 2.0, -3.0]), Tensor::vector(vec![1.0, 0.0, 0.0])),
        }
    }

    #[test]
    fn block_matches_hand_computation() {
        let x = [2.0, 1.0];
        // h = relu([2-1+0.1, 1+2-0.2]) = [1.1, 2.8]
        // theta_b = [1.1, 1.1+2.8+0.5] = [1.1, 4.4]; backcast = [1.1+8.8, -4.4] = [9.9, -4.4]
        // theta_f = [2.2-2.8+0.3] = [-0.3]; forecast = [-0.3+1, -0.6, 0.9]
        let (bc, fc) = block_forward(&x, &toy_block()).unwrap();
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12);
        assert!(close(&bc, &[9.9, -4.4]), "{bc:?}");
        assert!(close(&fc, &[0.7, -0.6, 0.9]), "{fc:?}");
    }

    #[test]
    fn zero_block_and_bias_path() {
        let mut b = toy_block();
        let zero = |t: &Tensor| Tensor::zeros(t.shape());
        let zeroed = BlockParams {
            trunk: b.trunk.iter().map(|(w, c)| (zero(w), zero(c))).collect(),
            theta_backcast: (zero(&b.theta_backcast.0), zero(&b.theta_backcast.1)),
            theta_forecast: (zero(&b.theta_forecast.0), zero(&b.theta_forecast.1)),
            backcast: (zero(&b.backcast.0), zero(&b.backcast.1)),
            forecast: (zero(&b.forecast.0), zero(&b.forecast.1)),
        };
        let (bc, fc) = block_forward(&[3.0, -7.0], &zeroed).unwrap();
        assert!(bc.iter().chain(fc.iter()).all(|v| *v == 0.0));

        b = zeroed;
        b.forecast.1 = Tensor::vector(vec![1.0; 3]);
        for x in [[3.0, -7.0], [0.0, 100.0]] {
            let (_, fc) = block_forward(&x, &b).unwrap();
            assert_eq!(fc.values(), &[1.0, 1.0, 1.0]);
        }
    }

    #[test]
    fn block_rejects_wrong_input_length() {
        assert!(matches!(
            block_forward(&[1.0, 2.0, 3.0], &toy_block()),
            Err(crate::Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn conv_front_ends() {
        let base = ModelConfig {
            n_stacks: 1,
            alpha: 0.0,
            blocks_per_stack: 1,
            lookback: 720,
            kernel_sizes: Some(vec![3]),
            dilations: Some(vec![1, 2, 4]),
            ..ModelConfig::default()
        };
        let x: Vec<f64> = (0..720).map(|t| (t as f64 * 0.1).sin()).collect();
        let p = ModelParams::init(&base).unwrap();
        let y = stack_conv(&x, 0, &p, &base).unwrap();
        assert_eq!(y.len(), 706);
        // Delta kernels at init: the chain is a pure truncation of the oldest samples.
        assert_eq!(y.values(), &x[14..]);

        let none = ModelConfig {
            conv_variant: PerStack::All(ConvVariant::None),
            ..base.clone()
        };
        let p = ModelParams::init(&none).unwrap();
        assert_eq!(stack_conv(&x, 0, &p, &none).unwrap().values(), &x[..]);

        let pool = ModelConfig {
            conv_variant: PerStack::All(ConvVariant::MaxPool),
            kernel_sizes: Some(vec![4]),
            ..base.clone()
        };
        let p = ModelParams::init(&pool).unwrap();
        assert_eq!(stack_conv(&x, 0, &p, &pool).unwrap().len(), 180);
    }

    #[test]
    fn single_block_stack_is_the_block() {
        let cfg = ModelConfig {
            n_stacks: 1,
            alpha: 0.0,
            blocks_per_stack: 1,
            lookback: 16,
            horizon: 3,
            hidden_depth: 2,
            hidden_width: 4,
            conv_variant: PerStack::All(ConvVariant::None),
            ..ModelConfig::default()
        };
        let p = ModelParams::init(&cfg).unwrap();
        let x: Vec<f64> = (0..16).map(|t| (t as f64).cos()).collect();
        let s = stack_forward(&x, 0, &p, &cfg).unwrap();
        let (bc, fc) = block_forward(&x, &p.block(0, 0)).unwrap();
        assert_eq!(s.backcast, bc);
        assert_eq!(s.forecast, fc);
        assert_eq!(s.residual_out.values(), &x[..]);
    }
}
