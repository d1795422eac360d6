//! Relative L² loss.

use crate::{OpError, Result};

/// `‖p − t‖ / ‖t‖`.
pub fn relative_l2(pred: &[f64], target: &[f64]) -> Result<f64> {
    let (diff, norm) = norms(pred, target)?;
    Ok(diff / norm)
}

/// Loss and its gradient with respect to `pred`, scaled by `weight`.
pub fn relative_l2_grad(pred: &[f64], target: &[f64], weight: f64) -> Result<(f64, Vec<f64>)> {
    let (diff, norm) = norms(pred, target)?;
    let loss = diff / norm;
    if diff == 0.0 {
        return Ok((0.0, vec![0.0; pred.len()]));
    }
    let s = weight / (diff * norm);
    let grad = pred.iter().zip(target).map(|(p, t)| s * (p - t)).collect();
    Ok((loss, grad))
}

fn norms(pred: &[f64], target: &[f64]) -> Result<(f64, f64)> {
    if pred.len() != target.len() {
        return Err(OpError::Shape(format!(
            "prediction has {} values, target {}",
            pred.len(),
            target.len()
        )));
    }
    let norm = target.iter().map(|t| t * t).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(OpError::NonFinite("relative error: target has zero norm".into()));
    }
    let diff = pred
        .iter()
        .zip(target)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        .sqrt();
    if !diff.is_finite() {
        return Err(OpError::NonFinite("prediction".into()));
    }
    Ok((diff, norm))
}
