//! Binary cross-entropy on a single sigmoid output.

/// Predictions are clamped into this range before the logs.
pub const PROB_CLAMP: f64 = 1e-12;

/// Loss and its gradient with respect to the prediction.
///
/// `label` is 0.0 or 1.0. Returns `(-(y ln p + (1-y) ln(1-p)), (p-y)/(p(1-p)))`
/// evaluated at the clamped prediction.
pub fn bce_loss(prediction: f64, label: f64) -> (f64, f64) {
    let p = prediction.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
    let loss = -(label * p.ln() + (1.0 - label) * (1.0 - p).ln());
    let grad = (p - label) / (p * (1.0 - p));
    (loss, grad)
}
