//! Reduction of simulated profiles to scalar observables: peak tracking
//! by parabolic interpolation, widths by FWHM and second moment, hole and
//! narrow-peak geometry for defect runs, and profile comparisons.

use crate::error::{CoreError, Result};

/// Parabolic refinement of the global maximum of `y` on a uniform grid.
pub fn parabolic_peak(x0: f64, dx: f64, y: &[f64]) -> (f64, f64) {
    let (imax, &vmax) = y
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.total_cmp(b))
        .expect("non-empty profile");
    if imax == 0 || imax == y.len() - 1 {
        return (x0 + imax as f64 * dx, vmax);
    }
    let (l, r) = (y[imax - 1], y[imax + 1]);
    let denom = l - 2.0 * vmax + r;
    if denom >= 0.0 {
        return (x0 + imax as f64 * dx, vmax);
    }
    let frac = 0.5 * (l - r) / denom;
    (
        x0 + (imax as f64 + frac) * dx,
        vmax - 0.25 * (l - r) * frac,
    )
}

/// Full width at half maximum around the global peak, with linear
/// interpolation of the crossings. `baseline` is subtracted first.
pub fn fwhm(x0: f64, dx: f64, y: &[f64], baseline: f64) -> Option<f64> {
    let (imax, &vmax) = y
        .iter()
        .enumerate()
        .max_by(|(_, a), (_, b)| a.total_cmp(b))?;
    let half = baseline + 0.5 * (vmax - baseline);
    let mut left = None;
    for i in (1..=imax).rev() {
        if y[i - 1] <= half && y[i] > half {
            let f = (half - y[i - 1]) / (y[i] - y[i - 1]);
            left = Some((i - 1) as f64 + f);
            break;
        }
    }
    let mut right = None;
    for i in imax..y.len() - 1 {
        if y[i] > half && y[i + 1] <= half {
            let f = (y[i] - half) / (y[i] - y[i + 1]);
            right = Some(i as f64 + f);
            break;
        }
    }
    match (left, right) {
        (Some(l), Some(r)) => Some((r - l) * dx),
        _ => None,
    }
    .map(|w| {
        let _ = x0;
        w
    })
}

/// Root-mean-square width of `y` treated as a density, within
/// `[x_lo, x_hi]`.
pub fn rms_width(x0: f64, dx: f64, y: &[f64], x_lo: f64, x_hi: f64) -> f64 {
    let mut w0 = 0.0;
    let mut w1 = 0.0;
    let mut w2 = 0.0;
    for (i, &v) in y.iter().enumerate() {
        let x = x0 + i as f64 * dx;
        if x < x_lo || x > x_hi {
            continue;
        }
        w0 += v;
        w1 += v * x;
        w2 += v * x * x;
    }
    if w0 <= 0.0 {
        return 0.0;
    }
    let mean = w1 / w0;
    (w2 / w0 - mean * mean).max(0.0).sqrt()
}

/// Local maxima of `y` with prominence at least `min_prominence`
/// (absolute units), sorted by position.
pub fn local_maxima(y: &[f64], min_prominence: f64) -> Vec<(usize, f64)> {
    let n = y.len();
    let mut out = Vec::new();
    for i in 1..n - 1 {
        if !(y[i] > y[i - 1] && y[i] >= y[i + 1]) {
            continue;
        }
        // Prominence: drop to the highest of the two key saddles.
        let mut left_min = y[i];
        let mut j = i;
        while j > 0 && y[j - 1] <= y[i] {
            j -= 1;
            left_min = left_min.min(y[j]);
            if y[j] > y[i] {
                break;
            }
        }
        if j == 0 {
            left_min = left_min.min(y[0]);
        }
        let mut right_min = y[i];
        let mut j = i;
        while j + 1 < n && y[j + 1] <= y[i] {
            j += 1;
            right_min = right_min.min(y[j]);
            if y[j] > y[i] {
                break;
            }
        }
        if j == n - 1 {
            right_min = right_min.min(y[n - 1]);
        }
        let prominence = y[i] - left_min.max(right_min);
        if prominence >= min_prominence {
            out.push((i, y[i]));
        }
    }
    out
}

/// Candidate peaks within 10% of the global maximum. More than one is
/// reported as [`CoreError::PeakAmbiguous`] alongside the candidates.
pub fn unambiguous_peak(
    x0: f64,
    dx: f64,
    y: &[f64],
) -> std::result::Result<(f64, f64), (CoreError, Vec<(f64, f64)>)> {
    let global = y.iter().cloned().fold(0.0f64, f64::max);
    let candidates: Vec<(f64, f64)> = local_maxima(y, 0.05 * global)
        .into_iter()
        .filter(|(_, v)| *v >= 0.9 * global)
        .map(|(i, v)| (x0 + i as f64 * dx, v))
        .collect();
    if candidates.len() > 1 {
        return Err((
            CoreError::PeakAmbiguous {
                n: candidates.len(),
            },
            candidates,
        ));
    }
    Ok(parabolic_peak(x0, dx, y))
}

/// Geometry of a depleted region (hole) inside `[x_lo, x_hi]`: width at
/// half depth between the local floor and the surrounding baseline.
#[derive(Debug, Clone, Copy)]
pub struct HoleMeasure {
    pub center: f64,
    pub width: f64,
    pub floor: f64,
    pub baseline: f64,
}

pub fn measure_hole(x0: f64, dx: f64, y: &[f64], x_lo: f64, x_hi: f64) -> Result<HoleMeasure> {
    let lo = (((x_lo - x0) / dx).ceil() as usize).min(y.len() - 1);
    let hi = (((x_hi - x0) / dx).floor() as usize).min(y.len() - 1);
    if lo + 4 >= hi {
        return Err(CoreError::InvalidParameter("hole window too narrow".into()));
    }
    let (imin, floor) = y[lo..=hi]
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.total_cmp(b))
        .map(|(i, &v)| (lo + i, v))
        .unwrap();
    // Baseline from the highest levels flanking the hole inside the window.
    let left_base = y[lo..imin].iter().cloned().fold(f64::MIN, f64::max);
    let right_base = y[imin..=hi].iter().cloned().fold(f64::MIN, f64::max);
    let baseline = 0.5 * (left_base + right_base);
    if !(baseline > floor) {
        return Err(CoreError::InvalidParameter(
            "no depleted region in window".into(),
        ));
    }
    let half = floor + 0.5 * (baseline - floor);
    let mut left = None;
    for i in (lo + 1..=imin).rev() {
        if y[i] < half && y[i - 1] >= half {
            let f = (y[i - 1] - half) / (y[i - 1] - y[i]);
            left = Some((i - 1) as f64 + f);
            break;
        }
    }
    let mut right = None;
    for i in imin..hi {
        if y[i] < half && y[i + 1] >= half {
            let f = (half - y[i]) / (y[i + 1] - y[i]);
            right = Some(i as f64 + f);
            break;
        }
    }
    let (l, r) = match (left, right) {
        (Some(l), Some(r)) => (l, r),
        _ => {
            return Err(CoreError::InvalidParameter(
                "hole half-depth crossings not found".into(),
            ))
        }
    };
    Ok(HoleMeasure {
        center: x0 + 0.5 * (l + r) * dx,
        width: (r - l) * dx,
        floor,
        baseline,
    })
}

/// Relative L2 distance between two profiles on the same grid.
pub fn l2_relative(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        num += (x - y) * (x - y);
        den += y * y;
    }
    (num / den.max(1e-300)).sqrt()
}

/// Relative L2 distance after aligning `a` to `b` by their (parabolic)
/// peak positions, with linear interpolation of the fractional shift.
pub fn aligned_l2_relative(x0: f64, dx: f64, a: &[f64], b: &[f64]) -> f64 {
    let (xa, _) = parabolic_peak(x0, dx, a);
    let (xb, _) = parabolic_peak(x0, dx, b);
    let shift = (xa - xb) / dx; // cells to move a backwards
    let n = a.len() as isize;
    let sample = |arr: &[f64], pos: f64| -> f64 {
        let i0 = pos.floor() as isize;
        let f = pos - i0 as f64;
        let wrap = |i: isize| arr[i.rem_euclid(n) as usize];
        wrap(i0) * (1.0 - f) + wrap(i0 + 1) * f
    };
    let shifted: Vec<f64> = (0..a.len())
        .map(|i| sample(a, i as f64 + shift))
        .collect();
    l2_relative(&shifted, b)
}

/// Interpolate `y` (on `x0 + i dx`) at positions `xs` (linear).
pub fn resample(x0: f64, dx: f64, y: &[f64], xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .map(|&x| {
            let pos = (x - x0) / dx;
            let i0 = pos.floor();
            let f = pos - i0;
            let i = i0 as isize;
            let n = y.len() as isize;
            if i < 0 || i + 1 >= n {
                0.0
            } else {
                y[i as usize] * (1.0 - f) + y[(i + 1) as usize] * f
            }
        })
        .collect()
}
