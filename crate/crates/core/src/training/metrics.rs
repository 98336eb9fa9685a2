use crate::error::{Error, Result};

fn check(op: &'static str, pred: &[f64], target: &[f64]) -> Result<()> {
    if pred.len() != target.len() || pred.is_empty() {
        return Err(Error::ShapeMismatch {
            op,
            expected: format!("length {}", target.len()),
            found: format!("length {}", pred.len()),
        });
    }
    Ok(())
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64> {
    check("mse", pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}

pub fn mae(pred: &[f64], target: &[f64]) -> Result<f64> {
    check("mae", pred, target)?;
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// Mean squared and absolute error at each horizon step, averaged over windows.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonMetrics {
    pub mse: Vec<f64>,
    pub mae: Vec<f64>,
}

impl HorizonMetrics {
    pub fn overall_mse(&self) -> f64 {
        self.mse.iter().sum::<f64>() / self.mse.len() as f64
    }

    pub fn overall_mae(&self) -> f64 {
        self.mae.iter().sum::<f64>() / self.mae.len() as f64
    }
}

pub fn horizon_metrics<P: AsRef<[f64]>, T: AsRef<[f64]>>(preds: &[P], targets: &[T]) -> Result<HorizonMetrics> {
    if preds.len() != targets.len() || preds.is_empty() {
        return Err(Error::ShapeMismatch {
            op: "horizon_metrics",
            expected: format!("{} windows", targets.len()),
            found: format!("{} windows", preds.len()),
        });
    }
    let h = targets[0].as_ref().len();
    let mut out = HorizonMetrics {
        mse: vec![0.0; h],
        mae: vec![0.0; h],
    };
    for (p, t) in preds.iter().zip(targets) {
        let (p, t) = (p.as_ref(), t.as_ref());
        check("horizon_metrics", p, t)?;
        if t.len() != h {
            return Err(Error::ShapeMismatch {
                op: "horizon_metrics",
                expected: format!("length {h}"),
                found: format!("length {}", t.len()),
            });
        }
        for j in 0..h {
            let e = p[j] - t[j];
            out.mse[j] += e * e;
            out.mae[j] += e.abs();
        }
    }
    let n = preds.len() as f64;
    out.mse.iter_mut().chain(out.mae.iter_mut()).for_each(|v| *v /= n);
    Ok(out)
}

/// Last observed value repeated over the horizon.
pub fn persistence_forecast(window: &[f64], horizon: usize) -> Vec<f64> {
    vec![*window.last().unwrap_or(&0.0); horizon]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let t = [0.5, -1.0, 2.0, 0.0];
        assert_eq!(mse(&t, &t).unwrap(), 0.0);
        assert_eq!(mse(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        assert_eq!(mae(&[1.0, -1.0], &[0.0, 0.0]).unwrap(), 1.0);
        let p = [3.0, 0.0, 0.0, 0.0];
        let z = [0.0; 4];
        assert_eq!(mse(&p, &z).unwrap(), 2.25);
        assert_eq!(mae(&p, &z).unwrap(), 0.75);
        assert!(mse(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn per_horizon() {
        let m = horizon_metrics(&[vec![1.0, 0.0], vec![3.0, 0.0]], &[vec![0.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.mse, vec![5.0, 0.5]);
        assert_eq!(m.mae, vec![2.0, 0.5]);
        assert_eq!(m.overall_mse(), 2.75);
        assert_eq!(persistence_forecast(&[1.0, 4.0], 3), vec![4.0; 3]);
    }
}
