use odcal_core::{nrmse, MetricError};
use proptest::prelude::*;

#[test]
fn hand_values() {
    assert_eq!(nrmse(&[100.0], &[150.0]), Ok(0.5));
    let v = nrmse(&[100.0, 300.0], &[140.0, 340.0]).unwrap();
    assert!((v - 0.2).abs() < 1e-15);
    assert_eq!(nrmse(&[100.0, 300.0], &[100.0, 300.0]), Ok(0.0));
}

#[test]
fn degenerate_inputs() {
    assert_eq!(nrmse(&[], &[]), Err(MetricError::Empty));
    assert_eq!(nrmse(&[0.0, 0.0], &[1.0, 2.0]), Err(MetricError::ZeroGroundTruth));
    assert_eq!(nrmse(&[1.0], &[1.0, 2.0]), Err(MetricError::LengthMismatch { gt: 1, eta: 2 }));
}

proptest! {
    #[test]
    fn equals_rmse_over_mean(
        pairs in proptest::collection::vec((1.0f64..5000.0, 0.0f64..8000.0), 1..60),
    ) {
        let (gt, eta): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let n = gt.len() as f64;
        let rmse = (gt.iter().zip(&eta).map(|(g, e)| (g - e) * (g - e)).sum::<f64>() / n).sqrt();
        let expected = rmse / (gt.iter().sum::<f64>() / n);
        let got = nrmse(&gt, &eta).unwrap();
        prop_assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
    }

    #[test]
    fn scale_invariant(
        pairs in proptest::collection::vec((1.0f64..5000.0, 0.0f64..8000.0), 1..30),
        s in 0.01f64..100.0,
    ) {
        let (gt, eta): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let a = nrmse(&gt, &eta).unwrap();
        let gs: Vec<f64> = gt.iter().map(|v| v * s).collect();
        let es: Vec<f64> = eta.iter().map(|v| v * s).collect();
        let b = nrmse(&gs, &es).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * a.max(1.0));
    }
}
