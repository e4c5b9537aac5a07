//! Optical response of a dressed three-level medium: susceptibility,
//! polariton band structure, group velocity, decay, reflectivity and the
//! EIT transmission window.
//!
//! Conventions: time dependence `e^{-i w t}`, so decay means `Im w < 0`.
//! All quantities are expressed in units of the probe carrier `omega_p`
//! (frequencies) and `k_p = omega_p / c` (wave vectors) with `c = 1`;
//! `omega_p` is kept as an explicit parameter so the formulas remain
//! readable against their dimensional form.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::math::{self, Mat3};

/// Material and dressing parameters of one EIT medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EitParams {
    /// Dimensionless light-matter coupling D.
    pub coupling_d: f64,
    /// Probe carrier frequency (1 in normalized units).
    pub omega_p: f64,
    /// Excited-state decay rate.
    pub gamma_e: f64,
    /// Metastable dephasing rate.
    pub gamma_m: f64,
    /// Control Rabi frequency.
    pub omega_c: f64,
    /// One-photon detuning.
    pub delta_e: f64,
    /// Two-photon (Raman) detuning.
    pub delta_r: f64,
}

impl EitParams {
    /// Resonantly dressed medium with everything else zero.
    pub fn resonant(coupling_d: f64, omega_c: f64) -> Self {
        Self {
            coupling_d,
            omega_p: 1.0,
            gamma_e: 0.0,
            gamma_m: 0.0,
            omega_c,
            delta_e: 0.0,
            delta_r: 0.0,
        }
    }

    pub fn with_gamma_e(mut self, gamma_e: f64) -> Self {
        self.gamma_e = gamma_e;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.coupling_d < 0.0
            || self.gamma_e < 0.0
            || self.gamma_m < 0.0
            || self.omega_c < 0.0
            || self.omega_p <= 0.0
        {
            return Err(CoreError::InvalidParameter(format!(
                "EitParams out of range: {self:?}"
            )));
        }
        Ok(())
    }

    /// Control field to dress this medium to a given dark-polariton group
    /// velocity (inverse of [`group_velocity_resonance`]).
    pub fn omega_c_for_group_velocity(&self, v_gr: f64) -> f64 {
        assert!(v_gr > 0.0 && v_gr < 1.0, "need 0 < v_gr < c");
        2.0 * (self.coupling_d * self.omega_p * self.omega_p * v_gr / (1.0 - v_gr)).sqrt()
    }
}

/// Substitute `f(k)` for the free-field `c^2 k^2` in the MSVEA dispersion
/// `w(k) = (f(k) + omega_p^2) / (2 omega_p)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DispersionSubstitute {
    /// The bare MSVEA form `f(k) = c^2 k^2`.
    Quadratic,
    /// `f(k) = wp^2 [1 + 2b Erf(sqrt(pi) (|k| - k_p) / (2 b k_p))]`,
    /// linear at `+-k_p` with slope matching `c|k|` and saturating at a
    /// half-bandwidth `b` (in units of `omega_p`) away from the carrier.
    ErfShaped { half_bandwidth: f64 },
}

impl Default for DispersionSubstitute {
    fn default() -> Self {
        // Half-bandwidth of 0.5 omega_p.
        DispersionSubstitute::ErfShaped {
            half_bandwidth: 0.5,
        }
    }
}

impl DispersionSubstitute {
    /// `f(k)` in units of `omega_p^2`.
    pub fn f_of_k(&self, k: f64, omega_p: f64) -> f64 {
        let k_p = omega_p; // c = 1
        match *self {
            DispersionSubstitute::Quadratic => k * k,
            DispersionSubstitute::ErfShaped { half_bandwidth: b } => {
                let arg = std::f64::consts::PI.sqrt() * (k.abs() - k_p) / (2.0 * b * k_p);
                omega_p * omega_p * (1.0 + 2.0 * b * libm::erf(arg))
            }
        }
    }

    /// Free-field dispersion `w(k) = (f(k)/omega_p + omega_p)/2`.
    pub fn omega(&self, k: f64, omega_p: f64) -> f64 {
        0.5 * (self.f_of_k(k, omega_p) / omega_p + omega_p)
    }

    /// Envelope frequency `w(k) - omega_p` entering the split-step phase.
    pub fn envelope_omega(&self, k: f64, omega_p: f64) -> f64 {
        self.omega(k, omega_p) - omega_p
    }

    /// Forward wave vector whose free dispersion matches `omega_p + detuning`.
    pub fn carrier_wavenumber(&self, detuning: f64, omega_p: f64) -> f64 {
        let target = omega_p * omega_p + 2.0 * omega_p * detuning;
        match *self {
            DispersionSubstitute::Quadratic => target.max(0.0).sqrt(),
            DispersionSubstitute::ErfShaped { .. } => {
                // f is strictly increasing for k > 0; Newton from k_p.
                let k_p = omega_p;
                let mut k = k_p;
                for _ in 0..60 {
                    let f = self.f_of_k(k, omega_p) - target;
                    let h = 1e-7 * k_p;
                    let df = (self.f_of_k(k + h, omega_p) - self.f_of_k(k - h, omega_p)) / (2.0 * h);
                    let step = f / df;
                    k -= step;
                    if step.abs() < 1e-14 * k_p {
                        break;
                    }
                }
                k
            }
        }
    }
}

/// One point of the three-branch polariton dispersion.
///
/// Branches are sorted ascending by real part; `weights[b]` holds the
/// normalized `(|E|^2, |rho_eg|^2, |rho_mg|^2)` composition of branch `b`.
#[derive(Debug, Clone, Copy)]
pub struct PolaritonPoint {
    pub k: f64,
    pub omega: [Complex64; 3],
    pub weights: [[f64; 3]; 3],
    /// Two eigenvalues coincide within 1e-9 omega_p; ordering between the
    /// flagged pair is not meaningful.
    pub degenerate: bool,
}

impl PolaritonPoint {
    /// Index of the middle (dark) branch in the sorted triple.
    pub const DARK: usize = 1;
}

/// Linear susceptibility of the dressed medium at the probe carrier.
///
/// Conventions: exactly zero on the two-photon resonance
/// (`delta_r = 0`, `gamma_m = 0`, `omega_c > 0`); with `omega_c = 0` the
/// dressing term is dropped and the bare two-level Lorentzian is returned.
pub fn susceptibility(p: &EitParams) -> Result<Complex64> {
    p.validate()?;
    if p.omega_c > 0.0 && p.delta_r == 0.0 && p.gamma_m == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let inner = if p.omega_c == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        let half = 0.5 * p.omega_c;
        Complex64::new(half * half, 0.0) / Complex64::new(p.delta_r, -0.5 * p.gamma_m)
    };
    let denom = Complex64::new(p.delta_e, -0.5 * p.gamma_e) - inner;
    if denom.norm() == 0.0 {
        return Err(CoreError::DegenerateDenominator);
    }
    Ok(2.0 * p.coupling_d * p.omega_p / denom)
}

/// The 3x3 non-Hermitian matrix of the linearized Maxwell-Bloch system in
/// k-space, in the total-frequency convention (`omega`, not the envelope
/// frequency `omega - omega_p`).
pub fn mb_matrix(p: &EitParams, sub: &DispersionSubstitute, k: f64) -> Mat3 {
    let wp = p.omega_p;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let coupling = -(p.coupling_d).sqrt() * wp;
    [
        [c(sub.omega(k, wp), 0.0), c(coupling, 0.0), c(0.0, 0.0)],
        [
            c(coupling, 0.0),
            c(wp + p.delta_e, -0.5 * p.gamma_e),
            c(0.5 * p.omega_c, 0.0),
        ],
        [
            c(0.0, 0.0),
            c(0.5 * p.omega_c, 0.0),
            c(wp + p.delta_r, -0.5 * p.gamma_m),
        ],
    ]
}

const DEGENERACY_TOL: f64 = 1e-9;

/// Eigen-decomposition of [`mb_matrix`] at one wave vector.
pub fn polariton_branches(
    p: &EitParams,
    sub: &DispersionSubstitute,
    k: f64,
) -> Result<PolaritonPoint> {
    p.validate()?;
    let m = mb_matrix(p, sub, k);
    let mut omega = math::eigenvalues3(&m);
    omega.sort_by(|a, b| a.re.total_cmp(&b.re));
    let degenerate = omega
        .windows(2)
        .any(|w| (w[1] - w[0]).norm() < DEGENERACY_TOL * p.omega_p);

    let mut weights = [[0.0; 3]; 3];
    let decoupled = p.coupling_d.sqrt() * p.omega_p < 1e-15 && p.omega_c < 1e-15;
    if decoupled {
        // Diagonal matrix: match each eigenvalue to its diagonal entry.
        let diag = [m[0][0], m[1][1], m[2][2]];
        for (b, w) in omega.iter().zip(weights.iter_mut()) {
            let (idx, _) = diag
                .iter()
                .enumerate()
                .min_by(|(_, x), (_, y)| (*x - b).norm().total_cmp(&(*y - b).norm()))
                .unwrap();
            w[idx] = 1.0;
        }
    } else {
        for (b, w) in omega.iter().zip(weights.iter_mut()) {
            if let Some(v) = math::eigenvector3(&m, *b) {
                let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
                for (wi, vi) in w.iter_mut().zip(v.iter()) {
                    *wi = vi.norm_sqr() / total;
                }
            } else {
                // Defective pair: split the remaining weight evenly and
                // rely on the degeneracy flag.
                *w = [1.0 / 3.0; 3];
            }
        }
    }
    Ok(PolaritonPoint {
        k,
        omega,
        weights,
        degenerate,
    })
}

/// [`polariton_branches`] over a k-scan with branch tracking: on
/// near-degeneracy the previous point's ordering is continued by
/// eigenvector overlap instead of re-sorting.
pub fn band_scan(
    p: &EitParams,
    sub: &DispersionSubstitute,
    ks: &[f64],
) -> Result<Vec<PolaritonPoint>> {
    let mut out = Vec::with_capacity(ks.len());
    let mut prev_weights: Option<[[f64; 3]; 3]> = None;
    for &k in ks {
        let mut pt = polariton_branches(p, sub, k)?;
        if pt.degenerate {
            if let Some(prev) = prev_weights {
                best_permutation(&mut pt, &prev);
            }
        }
        prev_weights = Some(pt.weights);
        out.push(pt);
    }
    Ok(out)
}

/// Permute the branches of `pt` to maximize weight-vector overlap with a
/// previous point (used only across flagged degeneracies).
fn best_permutation(pt: &mut PolaritonPoint, prev: &[[f64; 3]; 3]) {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    let score = |perm: &[usize; 3]| -> f64 {
        (0..3)
            .map(|i| {
                prev[i]
                    .iter()
                    .zip(pt.weights[perm[i]].iter())
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
            })
            .sum()
    };
    let best = PERMS
        .iter()
        .max_by(|a, b| score(a).total_cmp(&score(b)))
        .unwrap();
    pt.omega = [pt.omega[best[0]], pt.omega[best[1]], pt.omega[best[2]]];
    pt.weights = [pt.weights[best[0]], pt.weights[best[1]], pt.weights[best[2]]];
}

/// Dark-polariton group velocity on two-photon resonance,
/// `v_gr = c / (1 + D wp^2 / (Omega_c/2)^2)`; the `Omega_c = 0` limit
/// returns exactly 0.
pub fn group_velocity_resonance(p: &EitParams) -> f64 {
    if p.omega_c == 0.0 {
        return 0.0;
    }
    let half = 0.5 * p.omega_c;
    1.0 / (1.0 + p.coupling_d * p.omega_p * p.omega_p / (half * half))
}

/// Per-branch `(v_gr(k), gamma(k)) = (c w_photon, gamma_e w_eg)` from the
/// radiation/matter composition of a dispersion point.
pub fn branch_velocity_and_decay(pt: &PolaritonPoint, p: &EitParams) -> [(f64, f64); 3] {
    let mut out = [(0.0, 0.0); 3];
    for (o, w) in out.iter_mut().zip(pt.weights.iter()) {
        *o = (w[0], p.gamma_e * w[1]);
    }
    out
}

/// Second derivative of the dark-branch dispersion at resonance,
/// `d2w/dk2 = -i (gamma_e/c) D wp^2 / (Omega_c/2)^4 v_gr^3`
/// (purely imaginary to leading order).
pub fn curvature_resonance(p: &EitParams) -> Complex64 {
    if p.omega_c == 0.0 || p.gamma_e == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let half = 0.5 * p.omega_c;
    let v = group_velocity_resonance(p);
    let mag = p.gamma_e * p.coupling_d * p.omega_p * p.omega_p / half.powi(4) * v.powi(3);
    Complex64::new(0.0, -mag)
}

/// Diffusion coefficient of the effective polariton-flow model,
/// `D_eff = v_gr c gamma_e / (D wp^2)` (units `omega_p / k_p^2`).
///
/// Coincides with `i * curvature_resonance` in the deep slow-light limit;
/// at moderate `v_gr/c` the two differ and this is the form entering the
/// intensity equation.
pub fn diffusion_coefficient(p: &EitParams) -> f64 {
    if p.coupling_d == 0.0 {
        return 0.0;
    }
    group_velocity_resonance(p) * p.gamma_e / (p.coupling_d * p.omega_p * p.omega_p)
}

/// Normal-incidence reflectivity of a monochromatic wave at the interface
/// with a semi-infinite medium, in the MSVEA wave-vector convention.
#[derive(Debug, Clone, Copy)]
pub struct Reflectivity {
    pub r: Complex64,
    /// The in-medium radicand has negative real part; the root with
    /// decaying transmission (`Im k' > 0`) was selected.
    pub evanescent: bool,
}

pub fn reflectivity(p: &EitParams, omega: f64) -> Result<Reflectivity> {
    let nu = (omega - p.omega_p) / p.omega_p;
    let vac_radicand = 1.0 + 2.0 * nu;
    if vac_radicand <= 0.0 {
        return Err(CoreError::InvalidParameter(format!(
            "omega = {omega} is outside the forward MSVEA branch"
        )));
    }
    // Susceptibility at the actual probe frequency: detunings shift by
    // omega - omega_p.
    let shifted = EitParams {
        delta_e: p.delta_e - nu * p.omega_p,
        delta_r: p.delta_r - nu * p.omega_p,
        ..*p
    };
    let chi = susceptibility(&shifted)?;
    let med_radicand = Complex64::new(1.0 + 2.0 * nu, 0.0) + chi;
    let mut kp_ratio = med_radicand.sqrt() / vac_radicand.sqrt();
    if kp_ratio.im < 0.0 {
        kp_ratio = -kp_ratio;
    }
    Ok(Reflectivity {
        r: (1.0 - kp_ratio) / (1.0 + kp_ratio),
        evanescent: med_radicand.re < 0.0,
    })
}

/// Width of the Gaussian transmission window of a sample of length `l`
/// (standard deviation of `|T(w)|^2 = exp(-(w-wp)^2 / 2 dw^2)`).
pub fn transmission_window(p: &EitParams, l: f64) -> Result<f64> {
    if l <= 0.0 || p.gamma_e <= 0.0 || p.omega_c <= 0.0 {
        return Err(CoreError::InvalidParameter(
            "transmission window needs L > 0, gamma_e > 0, Omega_c > 0".into(),
        ));
    }
    let half = 0.5 * p.omega_c;
    Ok(std::f64::consts::FRAC_1_SQRT_2 * half * half
        / (p.gamma_e * p.coupling_d * p.omega_p * p.omega_p).sqrt()
        * (1.0 / l).sqrt())
}

/// `|dOmega_c/dt| / (D wp^2)`: much less than 1 means the ramp is
/// adiabatic with respect to the interband splitting.
pub fn adiabaticity_margin(ramp_rate: f64, p: &EitParams) -> f64 {
    ramp_rate.abs() / (p.coupling_d * p.omega_p * p.omega_p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use proptest::prelude::*;

    fn fig1_params() -> EitParams {
        // sqrt(D) = 0.1, Omega_c = 0.04 wp, gamma_e = 0.01 wp, resonant.
        EitParams::resonant(0.01, 0.04).with_gamma_e(0.01)
    }

    fn fig2_params() -> EitParams {
        EitParams::resonant(0.01, 0.07).with_gamma_e(1e-3)
    }

    #[test]
    fn susceptibility_zero_on_two_photon_resonance() {
        let p = EitParams::resonant(0.01, 0.07);
        assert_eq!(susceptibility(&p).unwrap(), Complex64::new(0.0, 0.0));
    }

    #[test]
    fn susceptibility_undressed_lorentzian() {
        let p = EitParams {
            omega_c: 0.0,
            delta_e: 2e-3,
            gamma_e: 1e-3,
            delta_r: 0.7, // irrelevant with Omega_c = 0
            ..EitParams::resonant(0.01, 0.0)
        };
        let want = 2.0 * 0.01 / Complex64::new(2e-3, -0.5e-3);
        let got = susceptibility(&p).unwrap();
        assert!((got - want).norm() < 1e-15);
    }

    #[test]
    fn susceptibility_degenerate_denominator() {
        let p = EitParams::resonant(0.01, 0.0);
        assert!(matches!(
            susceptibility(&p),
            Err(CoreError::DegenerateDenominator)
        ));
    }

    #[test]
    fn susceptibility_detuned_frozen_value_and_eigen_cross_check() {
        let p = EitParams {
            delta_e: 1e-4,
            delta_r: 1e-4,
            ..fig2_params()
        };
        let chi = susceptibility(&p).unwrap();
        // Frozen by direct evaluation of the closed form.
        assert_relative_eq!(chi.re, -1.6326663863933586e-3, max_relative = 1e-12);
        assert_relative_eq!(chi.im, 6.663998834249089e-8, max_relative = 1e-9);

        // Dual route: every eigenvalue of the 3x3 system satisfies the
        // scalar dispersion relation nu = u - chi(nu)/2 with the
        // susceptibility evaluated at the (complex) envelope frequency nu.
        let sub = DispersionSubstitute::default();
        let k = 1.0;
        let u = 0.5 * (sub.f_of_k(k, 1.0) - 1.0);
        let pt = polariton_branches(&p, &sub, k).unwrap();
        for w in pt.omega {
            let nu = w - 1.0;
            let inner = Complex64::new(0.25 * p.omega_c * p.omega_c, 0.0)
                / (Complex64::new(p.delta_r, -0.5 * p.gamma_m) - nu);
            let denom = Complex64::new(p.delta_e, -0.5 * p.gamma_e) - nu - inner;
            let chi_nu = 2.0 * p.coupling_d / denom;
            let residual = (nu - (u - 0.5 * chi_nu)).norm();
            assert!(residual < 1e-10, "residual {residual}");
        }
    }

    #[test]
    fn f_of_k_anchors() {
        let sub = DispersionSubstitute::default();
        assert_abs_diff_eq!(sub.f_of_k(1.0, 1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sub.f_of_k(-1.0, 1.0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sub.f_of_k(50.0, 1.0), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            DispersionSubstitute::Quadratic.f_of_k(2.0, 1.0),
            4.0,
            epsilon = 1e-15
        );
        // Slope of w(k) at +-k_p equals +-c.
        let h = 1e-6;
        let slope = (sub.omega(1.0 + h, 1.0) - sub.omega(1.0 - h, 1.0)) / (2.0 * h);
        assert_abs_diff_eq!(slope, 1.0, epsilon = 1e-10);
        let slope_b = (sub.omega(-1.0 + h, 1.0) - sub.omega(-1.0 - h, 1.0)) / (2.0 * h);
        assert_abs_diff_eq!(slope_b, -1.0, epsilon = 1e-10);
    }

    #[test]
    fn carrier_wavenumber_inverts_dispersion() {
        let sub = DispersionSubstitute::default();
        for detuning in [-0.05, 0.0, 0.02, 0.1] {
            let k = sub.carrier_wavenumber(detuning, 1.0);
            assert_abs_diff_eq!(sub.omega(k, 1.0), 1.0 + detuning, epsilon = 1e-12);
        }
    }

    #[test]
    fn rabi_splitting_at_resonance() {
        // gamma_e = gamma_m = 0 example: splitting 2 sqrt(D + (Oc/2)^2),
        // dark branch exactly at omega_p.
        let p = EitParams::resonant(0.01, 0.04);
        let sub = DispersionSubstitute::default();
        let pt = polariton_branches(&p, &sub, 1.0).unwrap();
        let s = pt.omega[2].re - pt.omega[0].re;
        let closed = 2.0 * (0.01_f64 + 0.02 * 0.02).sqrt();
        assert_abs_diff_eq!(s, closed, epsilon = 1e-12);
        // The light-matter contribution extracted from the computed gap is
        // exactly 2 sqrt(D) wp = 0.2 wp.
        let coupling = 2.0 * ((0.5 * s).powi(2) - 0.02 * 0.02).sqrt();
        assert_abs_diff_eq!(coupling, 0.2, epsilon = 1e-12);
        assert!((pt.omega[1] - Complex64::new(1.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn decoupled_medium_reduces_to_free_roots() {
        let p = EitParams::resonant(0.0, 0.0);
        let sub = DispersionSubstitute::default();
        let k = 1.3;
        let pt = polariton_branches(&p, &sub, k).unwrap();
        let photon = sub.omega(k, 1.0);
        let found = pt
            .omega
            .iter()
            .zip(pt.weights.iter())
            .find(|(w, _)| (w.re - photon).abs() < 1e-12)
            .expect("photonic root present");
        assert_eq!(found.1[0], 1.0);
    }

    #[test]
    fn dark_branch_curvature_matches_finite_differences() {
        let p = fig1_params();
        let sub = DispersionSubstitute::default();
        let h = 1e-3;
        let dark = |k: f64| polariton_branches(&p, &sub, k).unwrap().omega[PolaritonPoint::DARK];
        let fd = (dark(1.0 + h) - 2.0 * dark(1.0) + dark(1.0 - h)) / (h * h);
        let formula = curvature_resonance(&p);
        assert!(
            (fd - formula).norm() / formula.norm() < 0.02,
            "fd {fd} vs formula {formula}"
        );
    }

    #[test]
    fn velocity_decay_consistency_on_dark_branch() {
        let p = fig1_params();
        let sub = DispersionSubstitute::default();
        // c * w_photon equals dRe(w)/dk within 2% over |k - kp| < 0.05.
        let h = 1e-4;
        for k in [0.96, 0.99, 1.0, 1.02, 1.045] {
            let pt = polariton_branches(&p, &sub, k).unwrap();
            let (v_w, gamma_w) = branch_velocity_and_decay(&pt, &p)[PolaritonPoint::DARK];
            let up = polariton_branches(&p, &sub, k + h).unwrap().omega[1].re;
            let dn = polariton_branches(&p, &sub, k - h).unwrap().omega[1].re;
            let v_fd = (up - dn) / (2.0 * h);
            assert!(
                (v_w - v_fd).abs() / v_fd.abs() < 0.02,
                "k={k}: c w_ph = {v_w} vs dRe/dk = {v_fd}"
            );
            // gamma_e w_eg equals -2 Im(w) within 5% near resonance.
            if (k - 1.0).abs() > 1e-6 && (k - 1.0).abs() <= 0.02 {
                let decay = -2.0 * pt.omega[1].im;
                assert!(
                    (gamma_w - decay).abs() / decay < 0.05,
                    "k={k}: gamma_e w_eg = {gamma_w} vs -2 Im w = {decay}"
                );
            }
        }
        // Spec example: k = 1.02 kp, both within 5% of eigenvalue data.
        let pt = polariton_branches(&p, &sub, 1.02).unwrap();
        let (_, gamma_w) = branch_velocity_and_decay(&pt, &p)[1];
        assert!((gamma_w + 2.0 * pt.omega[1].im).abs() / (2.0 * pt.omega[1].im).abs() < 0.05);
    }

    #[test]
    fn dark_decay_vanishes_at_resonance() {
        let p = fig1_params();
        let pt = polariton_branches(&p, &DispersionSubstitute::default(), 1.0).unwrap();
        assert!(pt.omega[PolaritonPoint::DARK].im.abs() < 1e-13);
        let (_, gamma) = branch_velocity_and_decay(&pt, &p)[PolaritonPoint::DARK];
        assert!(gamma < 1e-12);
    }

    #[test]
    fn quadratic_decay_law() {
        // Parabola fit of gamma(k) over |k - kp| <= 0.02 matches
        // Im(d2w/dk2) within 5%.
        let p = fig1_params();
        let sub = DispersionSubstitute::default();
        let mut qs = Vec::new();
        let mut gs = Vec::new();
        for i in -10..=10 {
            let q = 0.002 * i as f64;
            if q == 0.0 {
                continue;
            }
            let pt = polariton_branches(&p, &sub, 1.0 + q).unwrap();
            let (_, gamma) = branch_velocity_and_decay(&pt, &p)[1];
            qs.push(q * q);
            gs.push(gamma);
        }
        let (curv, _) = crate::math::linear_fit(&qs, &gs);
        let want = -curvature_resonance(&p).im;
        assert!(
            (curv - want).abs() / want < 0.05,
            "fit {curv} vs formula {want}"
        );
    }

    #[test]
    fn group_velocity_values() {
        let p = fig2_params();
        assert_relative_eq!(
            group_velocity_resonance(&p),
            0.10913140311804011,
            max_relative = 1e-12
        );
        // Sodium: D = 3e-9, Omega_c = 2pi 17 MHz, wp = 2pi 508 THz.
        let sodium = EitParams::resonant(3e-9, 17.0e6 / 508.0e12).with_gamma_e(10.0e6 / 508.0e12);
        let v = group_velocity_resonance(&sodium);
        assert!((v - 1e-7).abs() / 1e-7 < 0.07, "v = {v}");
        // Vacuum limit and zero-control limit.
        assert_eq!(group_velocity_resonance(&EitParams::resonant(0.0, 0.1)), 1.0);
        assert_eq!(group_velocity_resonance(&EitParams::resonant(0.01, 0.0)), 0.0);
    }

    #[test]
    fn curvature_and_diffusion_values() {
        let p = fig2_params();
        assert_eq!(
            curvature_resonance(&EitParams::resonant(0.01, 0.07)),
            Complex64::new(0.0, 0.0)
        );
        // D_eff = v_gr c gamma_e / (D wp^2) ~ 0.011 at Fig. 2 parameters.
        assert!((diffusion_coefficient(&p) - 0.011).abs() / 0.011 < 0.02);
        // Sodium: D_eff ~ 6e-7 wp/kp^2.
        let sodium = EitParams::resonant(3e-9, 17.0e6 / 508.0e12).with_gamma_e(10.0e6 / 508.0e12);
        let d_eff = diffusion_coefficient(&sodium);
        assert!((d_eff - 6e-7).abs() / 6e-7 < 0.03, "D_eff = {d_eff}");
    }

    #[test]
    fn reflectivity_cases() {
        // Index-matched: chi = 0 at the two-photon resonance gives r = 0.
        let p = fig2_params();
        let r = reflectivity(&p, 1.0).unwrap();
        assert!(r.r.norm() < 1e-15);
        assert!(!r.evanescent);
        // k'/k = 3 arithmetic: undressed, lossless, chi = 2D/delta_e = 8.
        let arith = EitParams {
            coupling_d: 4.0,
            delta_e: 1.0,
            ..EitParams::resonant(4.0, 0.0)
        };
        let r = reflectivity(&arith, 1.0).unwrap();
        assert_abs_diff_eq!(r.r.re, -0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(r.r.im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn transmission_window_values() {
        let p = fig2_params();
        let w100 = transmission_window(&p, 100.0).unwrap();
        assert_relative_eq!(w100, 0.027391832724372428, max_relative = 1e-12);
        // sqrt(c/L) scaling and (Oc/2)^2 scaling.
        assert_relative_eq!(
            transmission_window(&p, 400.0).unwrap(),
            w100 / 2.0,
            max_relative = 1e-12
        );
        let doubled = EitParams {
            omega_c: 0.14,
            ..p
        };
        assert_relative_eq!(
            transmission_window(&doubled, 100.0).unwrap(),
            4.0 * w100,
            max_relative = 1e-12
        );
    }

    #[test]
    fn adiabaticity_margin_values() {
        let p = fig2_params();
        // Fig. 2 ramps: dOmega = 0.035 over tau = 100 with D = 0.01.
        assert_relative_eq!(
            adiabaticity_margin(0.035 / 100.0, &p),
            0.035,
            max_relative = 1e-12
        );
        assert_eq!(adiabaticity_margin(0.0, &p), 0.0);
        assert_relative_eq!(adiabaticity_margin(0.01, &p), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn band_scan_tracks_branches() {
        let p = fig1_params();
        let sub = DispersionSubstitute::default();
        let ks: Vec<f64> = (0..200).map(|i| 0.9 + 0.2 * i as f64 / 199.0).collect();
        let scan = band_scan(&p, &sub, &ks).unwrap();
        // The dark branch real part is monotone increasing at resonance.
        for w in scan.windows(2) {
            assert!(w[1].omega[1].re >= w[0].omega[1].re - 1e-12);
        }
    }

    proptest! {
        #[test]
        fn weights_normalized_and_branches_decay(
            d in 1e-6f64..0.05,
            oc in 0.0f64..0.2,
            ge in 0.0f64..0.02,
            gm in 0.0f64..1e-4,
            k in 0.5f64..1.5,
        ) {
            let p = EitParams { coupling_d: d, omega_p: 1.0, gamma_e: ge, gamma_m: gm, omega_c: oc, delta_e: 0.0, delta_r: 0.0 };
            let pt = polariton_branches(&p, &DispersionSubstitute::default(), k).unwrap();
            for w in pt.weights {
                let sum: f64 = w.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                prop_assert!(w.iter().all(|&x| x >= -1e-15));
            }
            for w in pt.omega {
                // Non-amplifying medium: Im w <= 0 (tiny numerical slack).
                prop_assert!(w.im <= 1e-10);
            }
        }

        #[test]
        fn reflectivity_bounded_for_passive_media(
            d in 1e-6f64..0.05,
            oc in 0.0f64..0.2,
            ge in 1e-6f64..0.02,
            de in -0.05f64..0.05,
            nu in -0.2f64..0.2,
        ) {
            let p = EitParams { coupling_d: d, omega_p: 1.0, gamma_e: ge, gamma_m: 0.0, omega_c: oc, delta_e: de, delta_r: de, ..EitParams::resonant(d, oc) };
            let r = reflectivity(&p, 1.0 + nu).unwrap();
            prop_assert!(r.r.norm() <= 1.0 + 1e-12);
        }
    }
}
