//! Roots of monic cubic polynomials with complex coefficients.
//!
//! The resolvent denominator of the measured two-level system is a cubic in
//! the mode energy whose roots can come close to degeneracy when the
//! coupling is weak, so the closed-form (Cardano) solution is avoided.
//! Roots are computed as eigenvalues of the companion matrix via a shifted
//! complex QR iteration, then polished with one Newton step each on the
//! original polynomial.

use num_complex::Complex64;

/// Evaluate z^3 + c2 z^2 + c1 z + c0 by Horner's scheme.
pub fn eval(c2: Complex64, c1: Complex64, c0: Complex64, z: Complex64) -> Complex64 {
    ((z + c2) * z + c1) * z + c0
}

/// Derivative 3 z^2 + 2 c2 z + c1.
pub fn eval_deriv(c2: Complex64, c1: Complex64, z: Complex64) -> Complex64 {
    (3.0 * z + 2.0 * c2) * z + c1
}

/// Complex Givens rotation zeroing the second component of (a, b):
/// returns (c, s) with c real, such that
/// [ c        s ] [a]   [r]
/// [-conj(s)  c ] [b] = [0].
fn givens(a: Complex64, b: Complex64) -> (f64, Complex64) {
    let na = a.norm();
    let nb = b.norm();
    if nb == 0.0 {
        return (1.0, Complex64::new(0.0, 0.0));
    }
    if na == 0.0 {
        return (0.0, Complex64::new(1.0, 0.0));
    }
    let r = (na * na + nb * nb).sqrt();
    let c = na / r;
    let s = (a / na) * b.conj() / r;
    (c, s)
}

/// Eigenvalues of a 2x2 complex matrix by the stable quadratic formula.
fn eig2(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> (Complex64, Complex64) {
    let tr = a + d;
    let det = a * d - b * c;
    let disc = (tr * tr - 4.0 * det).sqrt();
    // Pick the sign that avoids cancellation in tr ± disc.
    let q = if (tr + disc).norm() >= (tr - disc).norm() {
        0.5 * (tr + disc)
    } else {
        0.5 * (tr - disc)
    };
    if q.norm() == 0.0 {
        (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0))
    } else {
        (q, det / q)
    }
}

/// Roots of z^3 + c2 z^2 + c1 z + c0.
///
/// No ordering is guaranteed. Multiple roots are returned with the usual
/// O(eps^(1/2..1/3)) accuracy loss of any backward-stable method.
pub fn roots(c2: Complex64, c1: Complex64, c0: Complex64) -> [Complex64; 3] {
    // Companion matrix (upper Hessenberg):
    //     [ -c2  -c1  -c0 ]
    // H = [  1    0    0  ]
    //     [  0    1    0  ]
    let mut h = [
        [-c2, -c1, -c0],
        [
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
        [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
        ],
    ];

    let scale = c2.norm().max(c1.norm().sqrt()).max(c0.norm().cbrt()).max(1.0);
    let tiny = f64::EPSILON * scale;

    let mut out = [Complex64::new(0.0, 0.0); 3];
    let mut found = 0usize;

    // Deflate from the bottom: n is the active block size.
    let mut n = 3usize;
    let mut iters = 0;
    while n > 1 && iters < 200 {
        iters += 1;
        // Check for negligible subdiagonal entries (relative criterion).
        let sub = h[n - 1][n - 2].norm();
        let local = h[n - 1][n - 1].norm() + h[n - 2][n - 2].norm();
        if sub <= f64::EPSILON * local.max(tiny) {
            out[found] = h[n - 1][n - 1];
            found += 1;
            n -= 1;
            continue;
        }
        if n == 3 {
            let sub1 = h[1][0].norm();
            let local1 = h[0][0].norm() + h[1][1].norm();
            if sub1 <= f64::EPSILON * local1.max(tiny) {
                // Top 1x1 decoupled; finish with the bottom 2x2.
                out[found] = h[0][0];
                found += 1;
                let (l1, l2) = eig2(h[1][1], h[1][2], h[2][1], h[2][2]);
                out[found] = l1;
                out[found + 1] = l2;
                found += 2;
                n = 0;
                break;
            }
        }
        if n == 2 {
            let (l1, l2) = eig2(h[0][0], h[0][1], h[1][0], h[1][1]);
            out[found] = l1;
            out[found + 1] = l2;
            found += 2;
            n = 0;
            break;
        }

        // Wilkinson shift from the trailing 2x2 of the active 3x3 block.
        let (l1, l2) = eig2(h[1][1], h[1][2], h[2][1], h[2][2]);
        let t = h[2][2];
        let shift = if (l1 - t).norm() <= (l2 - t).norm() {
            l1
        } else {
            l2
        };

        // One implicit QR sweep: H - shift = QR, H <- RQ + shift,
        // realized as two Givens rotations on rows/columns (0,1) and (1,2).
        for (i, row) in h.iter_mut().enumerate() {
            row[i] -= shift;
        }
        let mut rots = [(1.0f64, Complex64::new(0.0, 0.0)); 2];
        for (k, rot) in rots.iter_mut().enumerate() {
            let (c, s) = givens(h[k][k], h[k + 1][k]);
            *rot = (c, s);
            let (top, bottom) = h.split_at_mut(k + 1);
            let upper = &mut top[k];
            let lower = &mut bottom[0];
            for (x_ref, y_ref) in upper.iter_mut().zip(lower.iter_mut()) {
                let (x, y) = (*x_ref, *y_ref);
                *x_ref = c * x + s * y;
                *y_ref = -s.conj() * x + c * y;
            }
        }
        for (k, &(c, s)) in rots.iter().enumerate() {
            for row in &mut h {
                let (x, y) = (row[k], row[k + 1]);
                row[k] = c * x + s.conj() * y;
                row[k + 1] = -s * x + c * y;
            }
        }
        for (i, row) in h.iter_mut().enumerate() {
            row[i] += shift;
        }
    }
    if n == 1 {
        out[found] = h[0][0];
        found += 1;
    }
    debug_assert_eq!(found, 3);

    // One Newton polish per root on the original cubic.
    for r in &mut out {
        for _ in 0..2 {
            let p = eval(c2, c1, c0, *r);
            let dp = eval_deriv(c2, c1, *r);
            if dp.norm() <= f64::EPSILON * scale * scale {
                break;
            }
            let step = p / dp;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            *r -= step;
        }
    }
    out
}
