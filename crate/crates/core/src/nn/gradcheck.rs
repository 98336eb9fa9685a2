use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Outcome of comparing tape gradients with central differences.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter, element)` where the largest error occurred.
    pub worst: Option<(usize, usize)>,
    pub checked: usize,
    pub analytic: Vec<Tensor>,
}

/// Denominator floor for [`relative_error`]. Below it the comparison is effectively
/// absolute, since central differences of near-zero gradients are pure roundoff.
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff == 0.0 {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

fn evaluate<F>(f: &F, params: &[Tensor]) -> Result<(Tape, Var, Vec<Var>)>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().enumerate().map(|(i, p)| tape.param(i, p.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let value = tape.value(out);
    if value.len() != 1 || !value.item().is_finite() {
        return Err(Error::NonFiniteLoss { batch: None });
    }
    Ok((tape, out, vars))
}

/// Checks every element of every parameter: `(f(θ+ε) - f(θ-ε)) / 2ε` against backprop.
///
/// `f` receives the tape and one [`Var`] per parameter and must return a scalar.
pub fn grad_check<F>(f: F, params: &[Tensor], eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let (tape, out, _) = evaluate(&f, params)?;
    let shapes: Vec<&[usize]> = params.iter().map(|p| p.shape()).collect();
    let analytic = tape.backward(out)?.params(&shapes);
    drop(tape);

    let mut work = params.to_vec();
    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
        analytic,
    };
    let scalar = |work: &[Tensor]| -> Result<f64> {
        let (tape, out, _) = evaluate(&f, work)?;
        Ok(tape.value(out).item())
    };
    for p in 0..work.len() {
        for e in 0..work[p].len() {
            let orig = work[p].data()[e];
            work[p].data_mut()[e] = orig + eps;
            let plus = scalar(&work)?;
            work[p].data_mut()[e] = orig - eps;
            let minus = scalar(&work)?;
            work[p].data_mut()[e] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(report.analytic[p].data()[e], numeric);
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some((p, e));
            }
            report.checked += 1;
        }
    }
    Ok(report)
}
