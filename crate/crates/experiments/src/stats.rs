//! Small least-squares fits and correlation.

/// Slope and intercept of the least-squares line through `(x_i, y_i)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<(f64, f64)> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    Some((slope, my - slope * mx))
}

/// Least squares `y ≈ c + b₁ x₁ + b₂ x₂`; returns `(b₁, b₂, c)`.
pub fn plane_fit(x1: &[f64], x2: &[f64], y: &[f64]) -> Option<(f64, f64, f64)> {
    let n = y.len();
    if n < 3 || x1.len() != n || x2.len() != n {
        return None;
    }
    let m = |v: &[f64]| v.iter().sum::<f64>() / n as f64;
    let (m1, m2, my) = (m(x1), m(x2), m(y));
    let mut s = [[0.0; 2]; 2];
    let mut r = [0.0; 2];
    for i in 0..n {
        let a = [x1[i] - m1, x2[i] - m2];
        for j in 0..2 {
            for k in 0..2 {
                s[j][k] += a[j] * a[k];
            }
            r[j] += a[j] * (y[i] - my);
        }
    }
    let det = s[0][0] * s[1][1] - s[0][1] * s[1][0];
    if det.abs() <= 1e-12 * (s[0][0] * s[1][1]).abs() || det == 0.0 {
        return None;
    }
    let b1 = (r[0] * s[1][1] - r[1] * s[0][1]) / det;
    let b2 = (s[0][0] * r[1] - s[1][0] * r[0]) / det;
    Some((b1, b2, my - b1 * m1 - b2 * m2))
}

/// Pearson correlation; `None` when either sample is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    if n < 2 || b.len() != n {
        return None;
    }
    let ma = a.iter().sum::<f64>() / n as f64;
    let mb = b.iter().sum::<f64>() / n as f64;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some(sab / (saa * sbb).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn fits_recover_exact_models() {
        let x = [1.0, 2.0, 4.0, 7.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        let (s, c) = linear_fit(&x, &y).unwrap();
        assert_relative_eq!(s, 3.0, epsilon = 1e-12);
        assert_relative_eq!(c, -1.0, epsilon = 1e-12);
        let x2 = [0.5, -1.0, 2.0, 3.0];
        let y: Vec<f64> = x.iter().zip(&x2).map(|(a, b)| 0.5 * a - 2.0 * b + 4.0).collect();
        let (b1, b2, c) = plane_fit(&x, &x2, &y).unwrap();
        assert_relative_eq!(b1, 0.5, epsilon = 1e-12);
        assert_relative_eq!(b2, -2.0, epsilon = 1e-12);
        assert_relative_eq!(c, 4.0, epsilon = 1e-12);
        assert!(linear_fit(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }

    #[test]
    fn correlation() {
        assert_relative_eq!(pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.5]).unwrap(), 0.9979487157886733, epsilon = 1e-12);
        assert_relative_eq!(pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert!(pearson(&[1.0, 1.0], &[0.0, 1.0]).is_none());
    }
}
