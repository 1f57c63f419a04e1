//! Calibration quality metrics.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricError {
    #[error("{gt} ground-truth values but {eta} simulated values")]
    LengthMismatch { gt: usize, eta: usize },
    #[error("no paths to evaluate")]
    Empty,
    #[error("ground-truth travel times sum to zero")]
    ZeroGroundTruth,
}

/// Normalized RMSE of path travel times:
/// `(|P| / Σ y^GT) · sqrt((1/|P|) Σ (eta_p − y_p^GT)²)`.
pub fn nrmse(gt: &[f64], eta: &[f64]) -> Result<f64, MetricError> {
    if gt.len() != eta.len() {
        return Err(MetricError::LengthMismatch { gt: gt.len(), eta: eta.len() });
    }
    if gt.is_empty() {
        return Err(MetricError::Empty);
    }
    let gt_sum: f64 = gt.iter().sum();
    if gt_sum == 0.0 {
        return Err(MetricError::ZeroGroundTruth);
    }
    let n = gt.len() as f64;
    let sq: f64 = gt.iter().zip(eta).map(|(g, e)| (e - g) * (e - g)).sum();
    Ok(n / gt_sum * libm::sqrt(sq / n))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_match_is_zero() {
        assert_eq!(nrmse(&[100.0, 250.0], &[100.0, 250.0]), Ok(0.0));
    }

    #[test]
    fn single_path_fifty_percent() {
        assert_eq!(nrmse(&[100.0], &[150.0]), Ok(0.5));
    }

    #[test]
    fn uniform_shift() {
        let v = nrmse(&[100.0, 300.0], &[140.0, 340.0]).unwrap();
        assert!((v - 0.2).abs() < 1e-15);
    }

    #[test]
    fn zero_ground_truth_errors() {
        assert_eq!(nrmse(&[0.0, 0.0], &[1.0, 2.0]), Err(MetricError::ZeroGroundTruth));
        assert_eq!(nrmse(&[], &[]), Err(MetricError::Empty));
    }
}
