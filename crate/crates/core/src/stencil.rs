//! Central finite-difference stencils.
//!
//! Periodic stencils act along one axis of an `n x n` grid stored with the x
//! index varying fastest (`node = iy * n + ix`). Reflective stencils act on a
//! staggered colatitude grid `theta_j = (j + 1/2) h`; values beyond either
//! pole are supplied by reflection with a parity of `+1` or `-1`.

/// Coefficients of the central first-derivative stencil, offsets `1..=width`.
pub fn central_coeffs(order: usize) -> &'static [f64] {
    match order {
        2 => &[0.5],
        4 => &[2.0 / 3.0, -1.0 / 12.0],
        _ => panic!("unsupported stencil order {order}"),
    }
}

/// First derivative along `axis` of a periodic `n x n` grid.
pub fn periodic_d1(u: &[f64], n: usize, axis: usize, h: f64, order: usize, out: &mut [f64]) {
    let coeffs = central_coeffs(order);
    let inv_h = 1.0 / h;
    for iy in 0..n {
        for ix in 0..n {
            let mut acc = 0.0;
            for (k, &c) in coeffs.iter().enumerate() {
                let o = k + 1;
                let (p, m) = if axis == 0 {
                    (iy * n + (ix + o) % n, iy * n + (ix + n - o) % n)
                } else {
                    (((iy + o) % n) * n + ix, ((iy + n - o) % n) * n + ix)
                };
                acc += c * (u[p] - u[m]);
            }
            out[iy * n + ix] = acc * inv_h;
        }
    }
}

/// Index into a staggered pole-to-pole grid with reflection; returns the node
/// and the sign picked up by the reflection.
#[inline]
pub fn reflect(j: isize, m: usize, parity: f64) -> (usize, f64) {
    let m = m as isize;
    if j < 0 {
        ((-j - 1) as usize, parity)
    } else if j >= m {
        ((2 * m - 1 - j) as usize, parity)
    } else {
        (j as usize, 1.0)
    }
}

/// First derivative on the staggered colatitude grid.
pub fn reflective_d1(u: &[f64], h: f64, order: usize, parity: f64, out: &mut [f64]) {
    let m = u.len();
    let coeffs = central_coeffs(order);
    for j in 0..m {
        let mut acc = 0.0;
        for (k, &c) in coeffs.iter().enumerate() {
            let o = (k + 1) as isize;
            let (p, sp) = reflect(j as isize + o, m, parity);
            let (q, sq) = reflect(j as isize - o, m, parity);
            acc += c * (sp * u[p] - sq * u[q]);
        }
        out[j] = acc / h;
    }
}

/// Even-parity extrapolation of staggered values to the two poles.
pub fn pole_values(u: &[f64]) -> (f64, f64) {
    let m = u.len();
    let north = (9.0 * u[0] - u[1]) / 8.0;
    let south = (9.0 * u[m - 1] - u[m - 2]) / 8.0;
    (north, south)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn periodic_error(n: usize, order: usize) -> f64 {
        let l = 2.0 * PI;
        let h = l / n as f64;
        let mut u = vec![0.0; n * n];
        let mut exact = vec![0.0; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let x = ix as f64 * h;
                let y = iy as f64 * h;
                u[iy * n + ix] = (x + 0.3).sin() * (2.0 * y).cos();
                exact[iy * n + ix] = -2.0 * (x + 0.3).sin() * (2.0 * y).sin();
            }
        }
        let mut d = vec![0.0; n * n];
        periodic_d1(&u, n, 1, h, order, &mut d);
        d.iter()
            .zip(&exact)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn periodic_orders() {
        for order in [2, 4] {
            let e1 = periodic_error(32, order);
            let e2 = periodic_error(64, order);
            let p = (e1 / e2).log2();
            assert!((p - order as f64).abs() < 0.2, "order {order}: observed {p}");
        }
    }

    #[test]
    fn reflective_parities() {
        for order in [2, 4] {
            let mut errs = vec![];
            for m in [32usize, 64] {
                let h = PI / m as f64;
                let th: Vec<f64> = (0..m).map(|j| (j as f64 + 0.5) * h).collect();
                // even function: cos(2 theta); odd function: sin(theta) + sin(3 theta)
                let even: Vec<f64> = th.iter().map(|t| (2.0 * t).cos()).collect();
                let odd: Vec<f64> = th.iter().map(|t| t.sin() + (3.0 * t).sin()).collect();
                let mut de = vec![0.0; m];
                let mut dodd = vec![0.0; m];
                reflective_d1(&even, h, order, 1.0, &mut de);
                reflective_d1(&odd, h, order, -1.0, &mut dodd);
                let mut e: f64 = 0.0;
                for j in 0..m {
                    e = e.max((de[j] + 2.0 * (2.0 * th[j]).sin()).abs());
                    e = e.max((dodd[j] - th[j].cos() - 3.0 * (3.0 * th[j]).cos()).abs());
                }
                errs.push(e);
            }
            let p = (errs[0] / errs[1]).log2();
            assert!((p - order as f64).abs() < 0.3, "order {order}: observed {p}");
        }
    }

    #[test]
    fn pole_extrapolation_is_second_order() {
        let m = 64;
        let h = PI / m as f64;
        let u: Vec<f64> = (0..m)
            .map(|j| 1.0 + 0.3 * ((j as f64 + 0.5) * h).cos().powi(2))
            .collect();
        let (n, s) = pole_values(&u);
        assert!((n - 1.3).abs() < 1e-5 && (s - 1.3).abs() < 1e-5);
    }
}
