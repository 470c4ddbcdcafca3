use super::{GridKind, RasterGrid};
use crate::error::{Error, Result};

/// Weights of the segmentation loss `w_bce * BCE + w_dice * (1 - Dice)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub bce: f64,
    pub dice: f64,
    pub eps: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            bce: 0.8,
            dice: 0.2,
            eps: 1e-7,
        }
    }
}

/// Weighted binary cross-entropy plus soft-Dice loss of a probability mask
/// against a binary target. Predictions are clamped to `[eps, 1 - eps]`.
pub fn combined_loss(pred: &RasterGrid, target: &RasterGrid, weights: LossWeights) -> Result<f64> {
    pred.expect_kind(GridKind::Probability)?;
    target.expect_kind(GridKind::Binary)?;
    if pred.width() != target.width() || pred.height() != target.height() {
        return Err(Error::Dimension(format!(
            "prediction is {}x{}, target is {}x{}",
            pred.width(),
            pred.height(),
            target.width(),
            target.height()
        )));
    }
    let n = pred.values().len();
    if n == 0 {
        return Err(Error::Dimension("empty grids".into()));
    }
    let eps = weights.eps;
    let (mut bce, mut inter, mut sum_p, mut sum_t) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (&p, &t) in pred.values().iter().zip(target.values()) {
        let p = f64::from(p).clamp(eps, 1.0 - eps);
        let t = f64::from(t);
        bce -= t * p.ln() + (1.0 - t) * (1.0 - p).ln();
        inter += p * t;
        sum_p += p;
        sum_t += t;
    }
    let bce = bce / n as f64;
    let dice = (2.0 * inter + eps) / (sum_p + sum_t + eps);
    Ok(weights.bce * bce + weights.dice * (1.0 - dice))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::GeoTransform;

    fn grid(vals: Vec<f32>, kind: GridKind) -> RasterGrid {
        let w = vals.len();
        RasterGrid::new(w, 1, vals, GeoTransform::identity(), kind).unwrap()
    }

    #[test]
    fn perfect_prediction_is_near_zero() {
        let t: Vec<f32> = (0..64).map(|i| (i % 3 == 0) as u8 as f32).collect();
        let loss = combined_loss(
            &grid(t.clone(), GridKind::Probability),
            &grid(t, GridKind::Binary),
            LossWeights::default(),
        )
        .unwrap();
        assert!(loss.abs() < 1e-5, "{loss}");
    }

    #[test]
    fn closed_form_half_and_half() {
        let p = grid(vec![0.5; 100], GridKind::Probability);
        let t = grid(
            (0..100).map(|i| (i < 50) as u8 as f32).collect(),
            GridKind::Binary,
        );
        let loss = combined_loss(&p, &t, LossWeights::default()).unwrap();
        let expected = 0.8 * std::f64::consts::LN_2 + 0.2 * 0.5;
        assert!((loss - expected).abs() < 1e-6);
        // 0.65449 is this value with ln 2 rounded to 0.6931.
        assert!((loss - 0.65449).abs() < 5e-5);
    }

    #[test]
    fn shape_mismatch_is_dimension_error() {
        let p = grid(vec![0.5; 4], GridKind::Probability);
        let t = grid(vec![1.0; 5], GridKind::Binary);
        assert!(matches!(
            combined_loss(&p, &t, LossWeights::default()),
            Err(Error::Dimension(_))
        ));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn nonnegative_and_moving_toward_target_decreases(
                pairs in proptest::collection::vec((0.02f32..0.98, any::<bool>()), 2..40),
                pick in any::<proptest::sample::Index>(),
            ) {
                let preds: Vec<f32> = pairs.iter().map(|p| p.0).collect();
                let targets: Vec<f32> = pairs.iter().map(|p| p.1 as u8 as f32).collect();
                let tg = grid(targets.clone(), GridKind::Binary);
                let base = combined_loss(&grid(preds.clone(), GridKind::Probability), &tg, LossWeights::default()).unwrap();
                prop_assert!(base >= 0.0);
                let i = pick.index(preds.len());
                let mut moved = preds.clone();
                moved[i] += (targets[i] - moved[i]) * 0.5;
                let after = combined_loss(&grid(moved, GridKind::Probability), &tg, LossWeights::default()).unwrap();
                prop_assert!(after < base, "{} !< {}", after, base);
            }
        }
    }
}
