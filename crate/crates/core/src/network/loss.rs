use crate::Real;

pub const BCE_CLAMP: f64 = 1e-7;

/// Binary cross entropy summed over all elements, with predictions clamped
/// into `[1e-7, 1 - 1e-7]`. Returns the loss and `dL/dy_hat` evaluated at
/// the clamped predictions.
pub fn bce_loss<T: Real>(target: &[T], pred: &[T]) -> (f64, Vec<T>) {
    let mut loss = 0.0;
    let grad = target
        .iter()
        .zip(pred)
        .map(|(&y, &p)| {
            let y = y.as_f64();
            let p = p.as_f64().clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
            loss += -y * p.ln() - (1.0 - y) * (1.0 - p).ln();
            T::from_f64((p - y) / (p * (1.0 - p)))
        })
        .collect();
    (loss, grad)
}

/// Gradient with respect to the sigmoid logits, `y_hat - y`.
pub fn bce_logit_grad<T: Real>(target: &[T], pred: &[T]) -> Vec<T> {
    target.iter().zip(pred).map(|(&y, &p)| p - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_everywhere() {
        let (l, _) = bce_loss(&[0.5f64; 360], &[0.5f64; 360]);
        assert!((l - 360.0 * 2f64.ln()).abs() < 1e-9);
        assert!((l - 249.53).abs() < 0.01);
    }

    #[test]
    fn minimum_at_target() {
        let y: Vec<f64> = (0..360).map(|i| ((i as f64) * 0.37).sin().abs()).collect();
        let (base, g) = bce_loss(&y, &y);
        // interior targets: gradient vanishes at the minimum
        for (gi, yi) in g.iter().zip(&y) {
            if *yi > 1e-6 && *yi < 1.0 - 1e-6 {
                assert!(gi.abs() < 1e-6);
            }
        }
        for k in [0usize, 17, 200, 359] {
            for d in [-0.01, 0.01] {
                let mut p = y.clone();
                p[k] = (p[k] + d).clamp(0.0, 1.0);
                if p[k] != y[k] {
                    assert!(bce_loss(&y, &p).0 > base);
                }
            }
        }
    }

    #[test]
    fn clamped_one_hot() {
        let mut y = vec![0.0f64; 360];
        let mut p = vec![0.0f64; 360];
        y[10] = 1.0;
        p[10] = 1.0 - 1e-7;
        let (l, _) = bce_loss(&y, &p);
        // 360 terms of -ln(1 - 1e-7) ~ 3.6e-5
        assert!(l < 1e-4, "{l}");
    }
}
