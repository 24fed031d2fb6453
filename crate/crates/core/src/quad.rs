//! Uniform-grid quadrature and interpolation.

use std::ops::{Add, Mul};

/// Composite Simpson weights for `n` equally spaced samples with spacing `h`.
///
/// An even number of intervals uses the plain 1-4-2-…-4-1 rule; an odd number
/// closes the last three intervals with the 3/8 rule. Two samples fall back to
/// the trapezoid.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match n {
        0 | 1 => return w,
        2 => {
            w[0] = 0.5 * h;
            w[1] = 0.5 * h;
            return w;
        }
        _ => {}
    }
    let intervals = n - 1;
    let simpson_end = if intervals % 2 == 0 { intervals } else { intervals - 3 };
    for i in (0..simpson_end).step_by(2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    if simpson_end < intervals {
        let s = simpson_end;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}

pub fn simpson<T>(values: &[T], h: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    simpson_weights(values.len(), h)
        .iter()
        .zip(values)
        .fold(T::default(), |acc, (&w, &v)| acc + v * w)
}

/// Simpson estimate from every other sample, for a refinement comparison.
pub fn simpson_coarse<T>(values: &[T], h: f64) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    let coarse: Vec<T> = values.iter().step_by(2).copied().collect();
    if (values.len() - 1) % 2 == 0 {
        simpson(&coarse, 2.0 * h)
    } else {
        // The last interval is not on the coarse grid; add it by trapezoid.
        let n = values.len();
        simpson(&coarse, 2.0 * h) + (values[n - 2] + values[n - 1]) * (0.5 * h)
    }
}

/// Four-point Lagrange interpolation on the uniform grid `start + i·h`.
///
/// Returns the stencil start index and weights; evaluates exactly at nodes.
pub fn cubic_stencil(start: f64, h: f64, n: usize, x: f64) -> (usize, [f64; 4]) {
    debug_assert!(n >= 4);
    let s = (x - start) / h;
    let nearest = s.round();
    if (s - nearest).abs() < 1e-9 && nearest >= 0.0 && (nearest as usize) < n {
        let i = nearest as usize;
        let base = i.saturating_sub(1).min(n - 4);
        let mut w = [0.0; 4];
        w[i - base] = 1.0;
        return (base, w);
    }
    let i = (s.floor().max(0.0) as usize).min(n - 2);
    let base = i.saturating_sub(1).min(n - 4);
    let u = s - base as f64;
    let w = [
        -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
        u * (u - 2.0) * (u - 3.0) / 2.0,
        -u * (u - 1.0) * (u - 3.0) / 2.0,
        u * (u - 1.0) * (u - 2.0) / 6.0,
    ];
    (base, w)
}

pub fn apply_stencil<T>(values: &[T], base: usize, w: &[f64; 4]) -> T
where
    T: Copy + Default + Add<Output = T> + Mul<f64, Output = T>,
{
    (0..4).fold(T::default(), |acc, k| acc + values[base + k] * w[k])
}

/// Value at `x = 0` of the cubic through four samples at `x_k = -(k+1)·h`
/// (or `+(k+1)·h`), i.e. one-sided extrapolation to a grid edge.
pub fn extrapolate_to_origin(samples: [f64; 4]) -> f64 {
    // Lagrange weights at 0 for nodes 1, 2, 3, 4 (in units of h).
    4.0 * samples[0] - 6.0 * samples[1] + 4.0 * samples[2] - samples[3]
}
