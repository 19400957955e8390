//! Cent-scale pitch representation.
//!
//! Pitches are measured in cents relative to 10 Hz. The network output is a
//! 360-bin grid spaced 20 cents apart starting at C1 (32.70 Hz); the last
//! bin sits at 2068.8 Hz, a little above B7 (1975.5 Hz). Training targets
//! are Gaussian bumps (std 25 cents) centered on the true pitch, and
//! estimates are decoded as the activation-weighted mean of the bin centers.

use crate::{Error, Result};

pub const F_REF: f64 = 10.0;
pub const N_BINS: usize = 360;
pub const BIN_CENTS: f64 = 20.0;
/// C1, the first bin center.
pub const F_LOW: f64 = 32.70;
pub const TARGET_STD_CENTS: f64 = 25.0;

pub fn freq_to_cents(f: f64) -> Result<f64> {
    if f.is_nan() || f <= 0.0 {
        return Err(Error::NonPositiveFrequency(f));
    }
    Ok(1200.0 * (f / F_REF).log2())
}

pub fn cents_to_freq(c: f64) -> f64 {
    F_REF * (c / 1200.0).exp2()
}

/// Bin centers in cents, strictly increasing by exactly 20.
#[derive(Debug, Clone, PartialEq)]
pub struct CentGrid {
    centers: Vec<f64>,
}

impl Default for CentGrid {
    fn default() -> Self {
        build_grid()
    }
}

pub fn build_grid() -> CentGrid {
    let first = 1200.0 * (F_LOW / F_REF).log2();
    CentGrid {
        centers: (0..N_BINS).map(|i| first + BIN_CENTS * i as f64).collect(),
    }
}

impl CentGrid {
    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn first(&self) -> f64 {
        self.centers[0]
    }

    pub fn last(&self) -> f64 {
        self.centers[N_BINS - 1]
    }

    /// Lowest / highest representable frequency in Hz.
    pub fn freq_range(&self) -> (f64, f64) {
        (cents_to_freq(self.first()), cents_to_freq(self.last()))
    }

    /// Gaussian-blurred target, peak 1 at `c_true`, no renormalization.
    pub fn encode_target(&self, c_true: f64) -> Vec<f64> {
        let denom = 2.0 * TARGET_STD_CENTS * TARGET_STD_CENTS;
        self.centers
            .iter()
            .map(|&c| (-(c - c_true) * (c - c_true) / denom).exp())
            .collect()
    }

    /// Writes the target into an `f32` slice of length 360.
    pub fn encode_target_into(&self, c_true: f64, out: &mut [f32]) {
        let denom = 2.0 * TARGET_STD_CENTS * TARGET_STD_CENTS;
        for (o, &c) in out.iter_mut().zip(&self.centers) {
            *o = (-(c - c_true) * (c - c_true) / denom).exp() as f32;
        }
    }

    /// Weighted average of the bin centers over all 360 bins.
    pub fn decode<T: Copy + Into<f64>>(&self, activation: &[T]) -> Result<f64> {
        if activation.len() != self.centers.len() {
            return Err(Error::ShapeMismatch(format!(
                "activation has {} bins, grid has {}",
                activation.len(),
                self.centers.len()
            )));
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (&a, &c) in activation.iter().zip(&self.centers) {
            let a: f64 = a.into();
            num += a * c;
            den += a;
        }
        if den <= 0.0 || !den.is_finite() {
            return Err(Error::Unvoiced);
        }
        Ok(num / den)
    }
}

/// Peak activation.
pub fn confidence<T: Copy + Into<f64>>(activation: &[T]) -> f64 {
    activation
        .iter()
        .map(|&a| a.into())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cents_reference_points() {
        assert_eq!(freq_to_cents(10.0).unwrap(), 0.0);
        assert_abs_diff_eq!(freq_to_cents(20.0).unwrap(), 1200.0, epsilon = 1e-12);
        // 1200 * log2(3.27) evaluated with mpmath: 2051.1487...
        assert_abs_diff_eq!(freq_to_cents(32.70).unwrap(), 2051.1487, epsilon = 1e-3);
        assert!(freq_to_cents(0.0).is_err());
        assert!(freq_to_cents(-5.0).is_err());
        assert_eq!(cents_to_freq(0.0), 10.0);
        assert_abs_diff_eq!(cents_to_freq(1200.0), 20.0, epsilon = 1e-12);
    }

    #[test]
    fn grid_anchors() {
        let g = build_grid();
        assert_eq!(g.len(), 360);
        let (lo, hi) = g.freq_range();
        assert!((lo - 32.70).abs() < 0.01);
        // C1 + 359 * 20 cents; 32.70 * 2^(7180/1200) = 2068.762 (mpmath)
        assert!((hi - 2068.762).abs() < 1e-3, "{hi}");
        // B7 is 71 semitones above C1, i.e. bin 356 (index 355)
        let b7 = cents_to_freq(g.centers()[355]);
        assert!((b7 - 1975.5).abs() < 1.0, "{b7}");
        assert!((freq_to_cents(b7).unwrap() - freq_to_cents(1975.5).unwrap()).abs() < 0.5);
        assert_abs_diff_eq!(g.last() - g.first(), 7180.0, epsilon = 1e-9);
        for w in g.centers().windows(2) {
            assert_abs_diff_eq!(w[1] - w[0], 20.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn target_values() {
        let g = build_grid();
        let c = g.centers()[100];
        let y = g.encode_target(c);
        assert_eq!(y[100], 1.0);
        assert_abs_diff_eq!(y[101], (-0.32f64).exp(), epsilon = 1e-12);
        assert_abs_diff_eq!(y[101], 0.7261, epsilon = 1e-4);
        let y = g.encode_target(c + 25.0);
        // |c_101 - (c + 25)| = 5, |c_100 - (c+25)| = 25
        assert_abs_diff_eq!(y[100], 0.6065, epsilon = 1e-4);
    }

    #[test]
    fn decode_cases() {
        let g = build_grid();
        let mut one_hot = vec![0.0f64; 360];
        one_hot[42] = 1.0;
        assert_abs_diff_eq!(g.decode(&one_hot).unwrap(), g.centers()[42], epsilon = 1e-9);
        let uniform = vec![0.3f64; 360];
        assert_abs_diff_eq!(
            g.decode(&uniform).unwrap(),
            (g.first() + g.last()) / 2.0,
            epsilon = 1e-9
        );
        assert!(matches!(g.decode(&[0.0f64; 360]), Err(Error::Unvoiced)));
        assert!(g.decode(&[1.0f64; 10]).is_err());
    }

    #[test]
    fn confidence_cases() {
        assert_eq!(confidence(&[0.0f64; 360]), 0.0);
        let mut one_hot = vec![0.0f64; 360];
        one_hot[7] = 1.0;
        assert_eq!(confidence(&one_hot), 1.0);
        let g = build_grid();
        assert_eq!(confidence(&g.encode_target(g.centers()[200])), 1.0);
    }

    proptest::proptest! {
        #[test]
        fn cents_roundtrip(x in 0.0f64..10000.0) {
            let back = freq_to_cents(cents_to_freq(x)).unwrap();
            proptest::prop_assert!((back - x).abs() < 1e-9);
        }

        #[test]
        fn decode_homogeneous(alpha in 1e-3f64..1e3, seed in 0u64..1000) {
            let g = build_grid();
            let act: Vec<f64> = (0..360).map(|i| (((i as u64 * 2654435761 + seed) % 1000) as f64) / 1000.0).collect();
            let scaled: Vec<f64> = act.iter().map(|a| a * alpha).collect();
            let a = g.decode(&act).unwrap();
            let b = g.decode(&scaled).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-9);
        }

        #[test]
        fn decode_translation(center in 40usize..300, shift in -20isize..20) {
            let g = build_grid();
            let pattern = [0.1, 0.4, 1.0, 0.7, 0.2];
            let place = |at: isize| {
                let mut v = vec![0.0f64; 360];
                for (j, &p) in pattern.iter().enumerate() {
                    v[(at + j as isize) as usize] = p;
                }
                v
            };
            let a = g.decode(&place(center as isize)).unwrap();
            let b = g.decode(&place(center as isize + shift)).unwrap();
            proptest::prop_assert!((b - a - 20.0 * shift as f64).abs() < 1e-8);
        }

        #[test]
        fn target_symmetric(bin in 20usize..340, delta in 0.0f64..19.0) {
            let g = build_grid();
            let c = g.centers()[bin];
            let up = g.encode_target(c + delta);
            let down = g.encode_target(c - delta);
            for k in 1..15 {
                proptest::prop_assert!((up[bin + k] - down[bin - k]).abs() < 1e-12);
            }
        }
    }
}
