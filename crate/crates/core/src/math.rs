//! Small dense linear algebra and numerics used by the dispersion and
//! Maxwell–Bloch modules: complex cubic roots, 3x3 eigenproblems, 3x3
//! matrix exponentials, adaptive quadrature and bracketed root finding.

use num_complex::Complex64;

pub type C64 = Complex64;
pub type Mat3 = [[C64; 3]; 3];
pub type Vec3 = [C64; 3];

/// Roots of the monic cubic `x^3 + a x^2 + b x + c` with complex
/// coefficients, polished by two Newton iterations each.
pub fn cubic_roots(a: C64, b: C64, c: C64) -> [C64; 3] {
    let third = 1.0 / 3.0;
    // Depressed cubic t^3 + p t + q, x = t - a/3.
    let shift = a * third;
    let p = b - a * a * third;
    let q = a * (2.0 * a * a - 9.0 * b) / 27.0 + c;

    let roots_t: [C64; 3] = if p.norm() < 1e-300 && q.norm() < 1e-300 {
        [C64::new(0.0, 0.0); 3]
    } else {
        let disc = (q * q * 0.25 + p * p * p / 27.0).sqrt();
        // Pick the branch with less cancellation.
        let w0 = -q * 0.5 + disc;
        let w1 = -q * 0.5 - disc;
        let w = if w0.norm() >= w1.norm() { w0 } else { w1 };
        let u = w.cbrt();
        if u.norm() < 1e-300 {
            // p ~ 0: three cube roots of -q.
            let r = (-q).cbrt();
            let om = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
            [r, r * om, r * om * om]
        } else {
            let om = C64::from_polar(1.0, 2.0 * std::f64::consts::PI / 3.0);
            let mut out = [C64::new(0.0, 0.0); 3];
            let mut uk = u;
            for slot in &mut out {
                *slot = uk - p / (3.0 * uk);
                uk *= om;
            }
            out
        }
    };

    let mut roots = [C64::new(0.0, 0.0); 3];
    for (i, t) in roots_t.iter().enumerate() {
        let mut x = t - shift;
        for _ in 0..2 {
            let f = ((x + a) * x + b) * x + c;
            let df = (3.0 * x + 2.0 * a) * x + b;
            if df.norm() > 1e-300 {
                x -= f / df;
            }
        }
        roots[i] = x;
    }
    roots
}

/// Eigenvalues of a 3x3 complex matrix via its characteristic polynomial.
pub fn eigenvalues3(m: &Mat3) -> [C64; 3] {
    let tr = m[0][0] + m[1][1] + m[2][2];
    let m2 = m[0][0] * m[1][1] - m[0][1] * m[1][0]
        + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let det = det3(m);
    cubic_roots(-tr, m2, -det)
}

pub fn det3(m: &Mat3) -> C64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm2(v: Vec3) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

/// Right eigenvector for an eigenvalue of a 3x3 matrix, normalized to unit
/// Euclidean norm. Returns `None` when the eigenvalue is (numerically)
/// defective so no one-dimensional null direction can be isolated.
pub fn eigenvector3(m: &Mat3, lambda: C64) -> Option<Vec3> {
    let r = [
        [m[0][0] - lambda, m[0][1], m[0][2]],
        [m[1][0], m[1][1] - lambda, m[1][2]],
        [m[2][0], m[2][1], m[2][2] - lambda],
    ];
    // The null direction is orthogonal (unconjugated) to two independent
    // rows; try the three row pairs and keep the largest cross product.
    let candidates = [
        cross(r[0], r[1]),
        cross(r[0], r[2]),
        cross(r[1], r[2]),
    ];
    let scale: f64 = r
        .iter()
        .map(|row| row.iter().map(|z| z.norm()).sum::<f64>())
        .sum::<f64>()
        .max(1e-300);
    let best = candidates
        .into_iter()
        .max_by(|a, b| norm2(*a).total_cmp(&norm2(*b)))
        .unwrap();
    let n = norm2(best).sqrt();
    if n < 1e-10 * scale * scale {
        return None;
    }
    Some([best[0] / n, best[1] / n, best[2] / n])
}

pub fn matmul3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[C64::new(0.0, 0.0); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn matvec3(m: &Mat3, v: Vec3) -> Vec3 {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

pub fn identity3() -> Mat3 {
    let mut m = [[C64::new(0.0, 0.0); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = C64::new(1.0, 0.0);
    }
    m
}

fn one_norm(m: &Mat3) -> f64 {
    (0..3)
        .map(|j| (0..3).map(|i| m[i][j].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(M)` for a 3x3 complex matrix by scaling-and-squaring with a Taylor
/// series. Accurate to machine precision for the mildly sized generators
/// appearing in one time step.
pub fn expm3(m: &Mat3) -> Mat3 {
    let nrm = one_norm(m);
    let s = if nrm > 0.25 {
        (nrm / 0.25).log2().ceil() as u32
    } else {
        0
    };
    let scale = 1.0 / f64::powi(2.0, s as i32);
    let a: Mat3 = {
        let mut a = *m;
        for row in &mut a {
            for z in row {
                *z *= scale;
            }
        }
        a
    };
    let mut result = identity3();
    let mut term = identity3();
    for k in 1..=16 {
        term = matmul3(&term, &a);
        let f = 1.0 / (k as f64);
        for row in &mut term {
            for z in row {
                *z *= f;
            }
        }
        for i in 0..3 {
            for j in 0..3 {
                result[i][j] += term[i][j];
            }
        }
        if one_norm(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..s {
        result = matmul3(&result, &result);
    }
    result
}

/// Adaptive Simpson quadrature of `f` on `[a, b]` to relative tolerance
/// `rel_tol` (with a small absolute floor).
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
    }
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        m: f64,
        fm: f64,
        eps: f64,
        depth: u32,
    ) -> f64 {
        let (left, lm, flm) = simpson(f, a, fa, m, fm);
        let (right, rm, frm) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * eps {
            left + right + delta / 15.0
        } else {
            recurse(f, a, fa, m, fm, left, lm, flm, eps * 0.5, depth - 1)
                + recurse(f, m, fm, b, fb, right, rm, frm, eps * 0.5, depth - 1)
        }
    }
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, m, fm) = simpson(f, a, fa, b, fb);
    let eps = rel_tol * whole.abs().max(1e-12 * (b - a).abs());
    recurse(f, a, fa, b, fb, whole, m, fm, eps, 48)
}

/// Bisection for `f(x) = 0` on a bracketing interval, to absolute
/// tolerance `tol` in `x`.
pub fn bisect(f: &dyn Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Option<f64> {
    let mut flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.signum() == fhi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() < tol {
            return Some(mid);
        }
        if fm.signum() == flo.signum() {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let sx: f64 = x.iter().sum();
    let sy: f64 = y.iter().sum();
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let denom = n * sxx - sx * sx;
    let slope = (n * sxy - sx * sy) / denom;
    (slope, (sy - slope * sx) / n)
}
