/// Weighted least-squares fit constrained to be non-increasing, by pool
/// adjacent violators.
///
/// `values` are ordered by the independent variable (ascending price here).
/// Zero-weight points are fitted to their pooled neighbours' level.
pub fn isotonic_non_increasing(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len(), "one weight per value");
    // Each block: (weighted mean, total weight, number of points).
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(values.len());
    for (&y, &w) in values.iter().zip(weights) {
        blocks.push((y, w, 1));
        while blocks.len() >= 2 {
            let (m2, w2, n2) = blocks[blocks.len() - 1];
            let (m1, w1, n1) = blocks[blocks.len() - 2];
            // A later block above an earlier one violates "non-increasing".
            if m2 <= m1 {
                break;
            }
            let w = w1 + w2;
            let m = if w > 0.0 {
                (m1 * w1 + m2 * w2) / w
            } else {
                (m1 * n1 as f64 + m2 * n2 as f64) / (n1 + n2) as f64
            };
            blocks.truncate(blocks.len() - 2);
            blocks.push((m, w, n1 + n2));
        }
    }
    blocks
        .into_iter()
        .flat_map(|(m, _, n)| std::iter::repeat_n(m, n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn already_monotone_is_unchanged() {
        let y = [0.9, 0.7, 0.7, 0.1];
        assert_eq!(isotonic_non_increasing(&y, &[1.0; 4]), y.to_vec());
    }

    #[test]
    fn pools_violators_with_weights() {
        // 0.2 then 0.6 violates; pooled weighted mean = (0.2*1 + 0.6*3)/4 = 0.5.
        let fit = isotonic_non_increasing(&[0.8, 0.2, 0.6, 0.1], &[1.0, 1.0, 3.0, 1.0]);
        let expected = [0.8, 0.5, 0.5, 0.1];
        assert!(fit.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12), "{fit:?}");
    }

    #[test]
    fn cascade_merges_backwards() {
        let fit = isotonic_non_increasing(&[0.1, 0.2, 0.9], &[1.0, 1.0, 1.0]);
        assert!((fit[0] - 0.4).abs() < 1e-12);
        assert!(fit.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn matches_brute_force_on_small_grid() {
        // Exhaustive check: among non-increasing candidates on a fine lattice,
        // none has lower weighted squared error than the PAVA fit.
        let y = [0.3, 0.5, 0.2, 0.4];
        let w = [2.0, 1.0, 1.0, 3.0];
        let fit = isotonic_non_increasing(&y, &w);
        let sse = |f: &[f64]| {
            f.iter()
                .zip(&y)
                .zip(&w)
                .map(|((a, b), w)| w * (a - b).powi(2))
                .sum::<f64>()
        };
        let best = sse(&fit);
        let lattice: Vec<f64> = (0..=20).map(|i| f64::from(i) * 0.05).collect();
        for &a in &lattice {
            for &b in lattice.iter().filter(|&&b| b <= a) {
                for &c in lattice.iter().filter(|&&c| c <= b) {
                    for &d in lattice.iter().filter(|&&d| d <= c) {
                        assert!(sse(&[a, b, c, d]) >= best - 1e-12);
                    }
                }
            }
        }
    }
}
