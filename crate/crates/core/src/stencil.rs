//! Finite-difference weights, local polynomial interpolation and
//! end-corrected trapezoid quadrature on uniform grids.

/// Fornberg's recursion: weights `w[d][k]` such that
/// `f^(d)(z) ≈ Σ_k w[d][k] f(x_k)` for `d = 0..=max_order`.
pub fn fornberg_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut c = vec![vec![0.0; n]; max_order + 1];
    if n == 0 {
        return c;
    }
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil width used for a derivative of the given order: five points for
/// first and second derivatives, seven for the third.
pub fn stencil_width(order: usize) -> usize {
    match order {
        0..=2 => 5,
        _ => 7,
    }
}

/// Start index and weights (already divided by `h^order`) of the stencil for
/// the `order`-th derivative at sample `i` of `len` uniform samples. Central
/// in the interior; near the ends the window is shifted and widened to
/// `order + 4` points so the accuracy stays fourth order.
pub fn derivative_stencil(i: usize, len: usize, order: usize, h: f64) -> (usize, Vec<f64>) {
    let central = stencil_width(order);
    let centered = i >= central / 2 && i + central / 2 < len;
    let width = if centered { central } else { central.max(order + 4) }.min(len);
    let start = i.saturating_sub(width / 2).min(len - width);
    let offsets: Vec<f64> = (start..start + width).map(|k| k as f64 - i as f64).collect();
    let w = fornberg_weights(0.0, &offsets, order);
    let scale = h.powi(order as i32);
    (start, w[order].iter().map(|v| v / scale).collect())
}

/// Four-point Lagrange interpolation on uniform samples: returns the start
/// index and the weights for the value (`order == 0`) or first derivative at
/// fractional position `pos` (in units of the spacing `h`).
pub fn cubic_weights(pos: f64, len: usize, order: usize, h: f64) -> (usize, [f64; 4]) {
    debug_assert!(len >= 4);
    let base = pos.floor().clamp(0.0, (len - 1) as f64) as usize;
    let start = base.saturating_sub(1).min(len - 4);
    let offsets: Vec<f64> = (start..start + 4).map(|k| k as f64).collect();
    let w = fornberg_weights(pos, &offsets, order);
    let scale = h.powi(order as i32);
    let mut out = [0.0; 4];
    for (o, v) in out.iter_mut().zip(&w[order]) {
        *o = v / scale;
    }
    (start, out)
}

/// Cubic Hermite interpolation on one interval from values and derivatives.
pub fn hermite(s: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> f64 {
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1
}

/// Trapezoid rule with Gregory end corrections (fourth order for smooth
/// integrands) over uniformly spaced samples.
pub fn gregory(values: &[f64], h: f64) -> f64 {
    let n = values.len();
    match n {
        0 | 1 => 0.0,
        2 => 0.5 * h * (values[0] + values[1]),
        3 => h / 3.0 * (values[0] + 4.0 * values[1] + values[2]),
        _ => {
            let trap: f64 = values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1]);
            let left = -3.0 * values[0] + 4.0 * values[1] - values[2];
            let right = 3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3];
            h * trap - h / 24.0 * (right - left)
        }
    }
}

/// Integral over `[lo, hi]` of the piecewise-cubic interpolant of uniform
/// samples `values[k]` at `t0 + k h`. Each cell uses the four nearest
/// samples; partial cells at the ends are integrated exactly.
pub fn integrate_cubic(values: &[f64], t0: f64, h: f64, lo: f64, hi: f64) -> f64 {
    let len = values.len();
    if len < 4 || hi <= lo {
        return 0.0;
    }
    let last = t0 + (len - 1) as f64 * h;
    let lo = lo.max(t0);
    let hi = hi.min(last);
    if hi <= lo {
        return 0.0;
    }
    let first_cell = (((lo - t0) / h).floor() as usize).min(len - 2);
    let last_cell = ((((hi - t0) / h).ceil() as usize).max(1) - 1).min(len - 2);
    let mut total = 0.0;
    for cell in first_cell..=last_cell {
        let a = t0 + cell as f64 * h;
        let from = ((lo - a) / h).clamp(0.0, 1.0);
        let to = ((hi - a) / h).clamp(0.0, 1.0);
        if to <= from {
            continue;
        }
        let start = cell.saturating_sub(1).min(len - 4);
        // Local coordinate s in units of h, measured from node `start`.
        let offset = (cell - start) as f64;
        let nodes: Vec<f64> = (0..4).map(|k| k as f64).collect();
        // Integrate the Lagrange basis polynomials with 3-point Gauss rule.
        let (gx, gw) = gauss3();
        let mut cell_sum = 0.0;
        for (x, w) in gx.iter().zip(gw) {
            let s = from + (to - from) * 0.5 * (x + 1.0);
            let lw = fornberg_weights(offset + s, &nodes, 0);
            let v: f64 = lw[0]
                .iter()
                .zip(&values[start..start + 4])
                .map(|(l, y)| l * y)
                .sum();
            cell_sum += w * v;
        }
        total += cell_sum * 0.5 * (to - from) * h;
    }
    total
}

fn gauss3() -> ([f64; 3], [f64; 3]) {
    let r = (3.0_f64 / 5.0).sqrt();
    ([-r, 0.0, r], [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0])
}
