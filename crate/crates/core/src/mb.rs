//! Split-step spectral integration of the normalized MSVEA Maxwell-Bloch
//! system
//!
//! ```text
//!   dE/dt      = (i/2)(d2/dx2 + 1) E + i sqrt(D) rho_eg
//!   drho_eg/dt = -(gamma_e/2 + i delta_e) rho_eg + i sqrt(D) E - i (Omega_c/2) rho_mg
//!   drho_mg/dt = -(gamma_m/2 + i delta_r) rho_mg - i (Omega_c/2) rho_eg
//! ```
//!
//! with the photonic kinetic term generalized to a substitute dispersion
//! `w(k) = (f(k) + wp^2) / (2 wp)` applied exactly in k-space.
//!
//! All fields are stored in the frame co-rotating with the forward
//! carrier: the solver variable is `u(x) = E(x) e^{-i k_p x}` (and the
//! same phase convention for the coherences), so a resonant forward pulse
//! is a smooth, spatially real envelope and backward waves appear at
//! `k_tilde ~ -2 k_p`. One step is Strang-split: half a kinetic phase,
//! an exact per-cell 3x3 matrix exponential with the control field frozen
//! at the midpoint time, half a kinetic phase. Both sub-steps are
//! unitary for lossless media, so the polariton number
//! `N = int (|E|^2 + |rho_eg|^2 + |rho_mg|^2) dx` is conserved to
//! rounding and monotonically non-increasing with decay.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::dispersion::DispersionSubstitute;
use crate::error::{CoreError, Result};
use crate::grid::Grid;
use crate::math::{self, Mat3};
use crate::medium::{MediumProfile, ModulationProtocol};

const VACUUM: u16 = u16::MAX;
/// Cell count above which the local step runs on the rayon pool.
const PAR_THRESHOLD: usize = 8192;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Forward,
    Backward,
}

/// Gaussian probe pulse, `E = A exp(-(x-x0)^2 / (2 sigma_x^2))` with an
/// optional carrier detuning represented as a phase ramp on the envelope.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PulseSpec {
    /// Temporal width; the vacuum spatial width is `sigma_x = c sigma_t`.
    pub sigma_t: f64,
    pub center_x0: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub detuning: f64,
    #[serde(default = "forward")]
    pub direction: Direction,
}

fn one() -> f64 {
    1.0
}
fn forward() -> Direction {
    Direction::Forward
}

impl PulseSpec {
    pub fn resonant(sigma_t: f64, center_x0: f64) -> Self {
        PulseSpec {
            sigma_t,
            center_x0,
            amplitude: 1.0,
            detuning: 0.0,
            direction: Direction::Forward,
        }
    }

    pub fn sigma_x(&self) -> f64 {
        self.sigma_t // c = 1
    }
}

/// Complex envelopes of the probe field and the two reduced coherences.
#[derive(Debug, Clone)]
pub struct FieldState {
    pub e: Vec<Complex64>,
    pub rho_eg: Vec<Complex64>,
    pub rho_mg: Vec<Complex64>,
    pub t: f64,
}

impl FieldState {
    pub fn zeros(n: usize) -> Self {
        FieldState {
            e: vec![Complex64::default(); n],
            rho_eg: vec![Complex64::default(); n],
            rho_mg: vec![Complex64::default(); n],
            t: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.e.len()
    }

    pub fn is_empty(&self) -> bool {
        self.e.is_empty()
    }

    /// `int (|E|^2 + |rho_eg|^2 + |rho_mg|^2) dx`.
    pub fn polariton_number(&self, dx: f64) -> f64 {
        let sum: f64 = self
            .e
            .iter()
            .zip(&self.rho_eg)
            .zip(&self.rho_mg)
            .map(|((e, p), s)| e.norm_sqr() + p.norm_sqr() + s.norm_sqr())
            .sum();
        sum * dx
    }

    /// Electromagnetic energy `int |E|^2 dx` in normalized units.
    pub fn field_energy(&self, dx: f64) -> f64 {
        self.e.iter().map(|e| e.norm_sqr()).sum::<f64>() * dx
    }

    /// Atomic (excited-state) energy `int |rho_eg|^2 dx`.
    pub fn atomic_energy(&self, dx: f64) -> f64 {
        self.rho_eg.iter().map(|p| p.norm_sqr()).sum::<f64>() * dx
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.e.iter().map(|e| e.norm_sqr()).collect()
    }

    /// Peak of |E|^2 refined by parabolic interpolation: `(x_peak, peak)`.
    pub fn peak(&self, grid: &Grid) -> (f64, f64) {
        let i2 = self.intensity();
        let (imax, &vmax) = i2
            .iter()
            .enumerate()
            .max_by(|(_, a), (_, b)| a.total_cmp(b))
            .expect("non-empty state");
        let n = i2.len();
        let left = i2[(imax + n - 1) % n];
        let right = i2[(imax + 1) % n];
        let denom = left - 2.0 * vmax + right;
        if denom >= 0.0 || denom.abs() < 1e-300 {
            return (grid.x(imax), vmax);
        }
        let frac = 0.5 * (left - right) / denom;
        let peak = vmax - 0.25 * (left - right) * frac;
        (grid.x(imax) + frac * grid.dx(), peak)
    }
}

/// Scalar time series sampled every `diag_every` steps.
#[derive(Debug, Clone, Default)]
pub struct DiagSeries {
    pub t: Vec<f64>,
    pub n_pol: Vec<f64>,
    pub x_peak: Vec<f64>,
    pub e2_peak: Vec<f64>,
    pub w_em: Vec<f64>,
    pub w_at: Vec<f64>,
}

/// Complex field record at a fixed grid plane, one sample per step.
#[derive(Debug, Clone)]
pub struct DetectorTrace {
    pub x: f64,
    pub cell: usize,
    pub t0: f64,
    pub dt: f64,
    pub values: Vec<Complex64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub t_max: f64,
    /// Times at which to keep full snapshots (snapped to step boundaries).
    pub snapshot_times: Vec<f64>,
    /// Diagnostic sampling cadence in steps (0 disables the series).
    pub diag_every: usize,
    /// x positions whose complex field is recorded every step.
    pub detectors: Vec<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub snapshots: Vec<FieldState>,
    pub series: DiagSeries,
    pub detectors: Vec<DetectorTrace>,
}

struct SmoothedCell {
    cell: usize,
    layer: u16,
    sqrt_d: f64,
}

/// Split-step spectral solver bound to one grid/medium/protocol set.
pub struct MbSolver {
    pub grid: Grid,
    pub medium: MediumProfile,
    pub protocols: Vec<ModulationProtocol>,
    pub substitute: DispersionSubstitute,
    fft_fwd: Arc<dyn Fft<f64>>,
    fft_inv: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    phase_half: Vec<Complex64>,
    phase_full: Vec<Complex64>,
    cell_layer: Vec<u16>,
    smoothed: Vec<SmoothedCell>,
    sponge_factor: Option<Vec<f64>>,
}

impl MbSolver {
    pub fn new(
        grid: Grid,
        medium: MediumProfile,
        protocols: Vec<ModulationProtocol>,
        substitute: DispersionSubstitute,
    ) -> Result<Self> {
        grid.validate()?;
        medium.validate()?;
        for p in &protocols {
            p.validate()?;
        }
        for (i, l) in medium.layers.iter().enumerate() {
            if l.protocol >= protocols.len() {
                return Err(CoreError::Config(format!(
                    "{} references protocol {} but only {} exist",
                    l.name(i),
                    l.protocol,
                    protocols.len()
                )));
            }
        }
        if medium.layers.len() >= VACUUM as usize {
            return Err(CoreError::Config("too many layers".into()));
        }
        let bound = dt_bound(&medium, &protocols);
        if grid.dt > bound * (1.0 + 1e-12) {
            return Err(CoreError::CflViolation {
                dt: grid.dt,
                bound,
                context: "MB split-step accuracy bound min(0.1/Omega_max, 0.05/(sqrt(D) wp), tau/50)"
                    .into(),
            });
        }

        let n = grid.n_points;
        let mut planner = FftPlanner::new();
        let fft_fwd = planner.plan_fft_forward(n);
        let fft_inv = planner.plan_fft_inverse(n);

        // Kinetic phases in the co-rotating frame: lab k = k_p + k_tilde.
        let omega_p = 1.0;
        let k_p = omega_p;
        let nu = |kt: f64| substitute.envelope_omega(k_p + kt, omega_p);
        let phase = |dt: f64| -> Vec<Complex64> {
            grid.wavenumbers()
                .iter()
                .map(|&kt| Complex64::from_polar(1.0, -nu(kt) * dt))
                .collect()
        };
        let phase_half = phase(0.5 * grid.dt);
        let phase_full = phase(grid.dt);

        let mut cell_layer = vec![VACUUM; n];
        let mut smoothed = Vec::new();
        for i in 0..n {
            let x = grid.x(i);
            let d = medium.coupling_at(x);
            if d <= 0.0 {
                continue;
            }
            let owner = medium
                .layer_index_at(x)
                .or_else(|| nearest_layer(&medium, x));
            let Some(li) = owner else { continue };
            let bulk_d = medium.layers[li].coupling_d;
            if (d - bulk_d).abs() <= 1e-15 * bulk_d.max(1.0) {
                cell_layer[i] = li as u16;
            } else {
                smoothed.push(SmoothedCell {
                    cell: i,
                    layer: li as u16,
                    sqrt_d: d.sqrt(),
                });
            }
        }

        let sponge_factor = if grid.sponge_width > 0.0 {
            Some(sponge_profile(&grid))
        } else {
            None
        };

        Ok(MbSolver {
            grid,
            medium,
            protocols,
            substitute,
            fft_fwd,
            fft_inv,
            scratch: vec![Complex64::default(); n],
            phase_half,
            phase_full,
            cell_layer,
            smoothed,
            sponge_factor,
        })
    }

    /// Launch a pulse in vacuum. Fails if the `+-4 sigma_x` support
    /// touches any layer.
    pub fn init_state(&self, pulse: &PulseSpec) -> Result<FieldState> {
        let sx = pulse.sigma_x();
        let lo = pulse.center_x0 - 4.0 * sx;
        let hi = pulse.center_x0 + 4.0 * sx;
        for (i, l) in self.medium.layers.iter().enumerate() {
            if lo < l.x_end && hi > l.x_start {
                return Err(CoreError::PulseOverlapsMedium(format!(
                    "support [{lo:.1}, {hi:.1}] intersects {}",
                    l.name(i)
                )));
            }
        }
        let mut state = FieldState::zeros(self.grid.n_points);
        let k0 = self
            .substitute
            .carrier_wavenumber(pulse.detuning, 1.0);
        let k_p = 1.0;
        // Envelope wave number in the co-rotating frame.
        let kt = match pulse.direction {
            Direction::Forward => k0 - k_p,
            Direction::Backward => -k0 - k_p,
        };
        for i in 0..self.grid.n_points {
            let x = self.grid.x(i) - pulse.center_x0;
            let gauss = pulse.amplitude * (-x * x / (2.0 * sx * sx)).exp();
            state.e[i] = Complex64::from_polar(gauss, kt * x);
        }
        Ok(state)
    }

    /// Launch a pulse already inside a homogeneous layer, riding the dark
    /// branch: `rho_mg = (2 sqrt(D)/Omega_c) E`, with the first-order
    /// `rho_eg = -i (1 - v_gr) E' / sqrt(D)` correction. The in-medium
    /// width is `sigma_t v_gr`.
    pub fn init_dark_state(&self, pulse: &PulseSpec, layer_index: usize) -> Result<FieldState> {
        let layer = self
            .medium
            .layers
            .get(layer_index)
            .ok_or_else(|| CoreError::Config(format!("no layer {layer_index}")))?;
        let omega_c = self.protocols[layer.protocol].omega_at(0.0);
        if omega_c <= 0.0 {
            return Err(CoreError::ZeroControlField);
        }
        let p = layer.params(omega_c);
        let v = crate::dispersion::group_velocity_resonance(&p);
        let sigma = pulse.sigma_t * v;
        let lo = pulse.center_x0 - 4.0 * sigma;
        let hi = pulse.center_x0 + 4.0 * sigma;
        if lo < layer.x_start || hi > layer.x_end {
            return Err(CoreError::PulseOverlapsMedium(format!(
                "dark-state support [{lo:.1}, {hi:.1}] not contained in {}",
                layer.name(layer_index)
            )));
        }
        let sqrt_d = layer.coupling_d.sqrt();
        let mut state = FieldState::zeros(self.grid.n_points);
        for i in 0..self.grid.n_points {
            let x = self.grid.x(i) - pulse.center_x0;
            let gauss = pulse.amplitude * (-x * x / (2.0 * sigma * sigma)).exp();
            state.e[i] = Complex64::new(gauss, 0.0);
            state.rho_mg[i] = Complex64::new(2.0 * sqrt_d / omega_c * gauss, 0.0);
            let deriv = -x / (sigma * sigma) * gauss;
            state.rho_eg[i] = Complex64::new(0.0, -(1.0 - v) * deriv / sqrt_d);
        }
        Ok(state)
    }

    /// One Strang step: half kinetic, exact local coupling at the midpoint
    /// control field, half kinetic.
    pub fn step(&mut self, state: &mut FieldState) -> Result<()> {
        self.kinetic(state, Half::Half);
        self.local_step(state, state.t + 0.5 * self.grid.dt);
        self.kinetic(state, Half::Half);
        state.t += self.grid.dt;
        Ok(())
    }

    /// Advance to `options.t_max`, fusing adjacent kinetic half-steps.
    pub fn run(&mut self, state: &mut FieldState, options: &RunOptions) -> Result<RunOutput> {
        let dt = self.grid.dt;
        let steps = ((options.t_max - state.t) / dt).round().max(0.0) as usize;
        let mut snapshot_steps: Vec<usize> = options
            .snapshot_times
            .iter()
            .map(|&ts| (((ts - state.t) / dt).round().max(0.0) as usize).min(steps))
            .collect();
        snapshot_steps.sort_unstable();
        snapshot_steps.dedup();

        let mut out = RunOutput::default();
        let det_cells: Vec<usize> = options
            .detectors
            .iter()
            .map(|&x| self.cell_of(x))
            .collect();
        for (&x, &cell) in options.detectors.iter().zip(&det_cells) {
            out.detectors.push(DetectorTrace {
                x,
                cell,
                t0: state.t,
                dt,
                values: Vec::with_capacity(steps),
            });
        }

        if snapshot_steps.first() == Some(&0) {
            out.snapshots.push(state.clone());
            snapshot_steps.remove(0);
        }
        if options.diag_every > 0 {
            self.record_diag(state, &mut out.series)?;
        }

        let mut in_kinetic_frame = false;
        for step in 1..=steps {
            if !in_kinetic_frame {
                self.kinetic(state, Half::Half);
                in_kinetic_frame = true;
            }
            self.local_step(state, state.t + 0.5 * dt);
            state.t += dt;

            let need_real_frame = snapshot_steps.first() == Some(&step)
                || (options.diag_every > 0 && step % options.diag_every == 0)
                || !out.detectors.is_empty()
                || step == steps;
            if need_real_frame {
                self.kinetic(state, Half::Half);
                in_kinetic_frame = false;
            } else {
                self.kinetic(state, Half::Full);
            }

            if !in_kinetic_frame {
                for trace in &mut out.detectors {
                    trace.values.push(state.e[trace.cell]);
                }
                if options.diag_every > 0 && step % options.diag_every == 0 {
                    if let Err(e) = self.record_diag(state, &mut out.series) {
                        // Keep the failing state reachable for dumps.
                        out.snapshots.push(state.clone());
                        return Err(e);
                    }
                }
                if snapshot_steps.first() == Some(&step) {
                    out.snapshots.push(state.clone());
                    snapshot_steps.remove(0);
                }
            }
        }
        Ok(out)
    }

    fn record_diag(&self, state: &FieldState, series: &mut DiagSeries) -> Result<()> {
        let dx = self.grid.dx();
        let n_pol = state.polariton_number(dx);
        if !n_pol.is_finite() {
            return Err(CoreError::NumericalFailure {
                step: (state.t / self.grid.dt).round() as usize,
                t: state.t,
            });
        }
        let (x_peak, e2_peak) = state.peak(&self.grid);
        series.t.push(state.t);
        series.n_pol.push(n_pol);
        series.x_peak.push(x_peak);
        series.e2_peak.push(e2_peak);
        series.w_em.push(state.field_energy(dx));
        series.w_at.push(state.atomic_energy(dx));
        Ok(())
    }

    pub fn cell_of(&self, x: f64) -> usize {
        (((x - self.grid.x_min) / self.grid.dx()).round() as usize)
            .min(self.grid.n_points - 1)
    }

    fn kinetic(&mut self, state: &mut FieldState, half: Half) {
        let phase = match half {
            Half::Half => &self.phase_half,
            Half::Full => &self.phase_full,
        };
        self.scratch.copy_from_slice(&state.e);
        self.fft_fwd.process(&mut self.scratch);
        for (z, ph) in self.scratch.iter_mut().zip(phase) {
            *z *= ph;
        }
        self.fft_inv.process(&mut self.scratch);
        let norm = 1.0 / self.grid.n_points as f64;
        for (dst, src) in state.e.iter_mut().zip(&self.scratch) {
            *dst = src * norm;
        }
    }

    /// Exact per-cell 3x3 exponential with `Omega_c` frozen at `t_mid`.
    fn local_step(&mut self, state: &mut FieldState, t_mid: f64) {
        let dt = self.grid.dt;
        let omegas: Vec<f64> = self
            .protocols
            .iter()
            .map(|p| p.omega_at(t_mid))
            .collect();
        let layer_mats: Vec<Mat3> = self
            .medium
            .layers
            .iter()
            .map(|l| {
                let u = local_generator(
                    l.coupling_d.sqrt(),
                    l.gamma_e,
                    l.gamma_m,
                    l.delta_e,
                    l.delta_r,
                    omegas[l.protocol],
                    dt,
                );
                math::expm3(&u)
            })
            .collect();

        let cell_layer = &self.cell_layer;
        let apply = |i: usize, e: &mut Complex64, p: &mut Complex64, s: &mut Complex64| {
            let li = cell_layer[i];
            if li == VACUUM {
                return;
            }
            let m = &layer_mats[li as usize];
            let v = math::matvec3(m, [*e, *p, *s]);
            *e = v[0];
            *p = v[1];
            *s = v[2];
        };

        let n = state.len();
        if n >= PAR_THRESHOLD {
            state
                .e
                .par_iter_mut()
                .zip(state.rho_eg.par_iter_mut())
                .zip(state.rho_mg.par_iter_mut())
                .enumerate()
                .for_each(|(i, ((e, p), s))| apply(i, e, p, s));
        } else {
            for i in 0..n {
                let (e, p, s) = (&mut state.e[i], &mut state.rho_eg[i], &mut state.rho_mg[i]);
                apply(i, e, p, s);
            }
        }

        // Interface-smoothed cells carry their own coupling strength.
        for sc in &self.smoothed {
            let l = &self.medium.layers[sc.layer as usize];
            let gen = local_generator(
                sc.sqrt_d,
                l.gamma_e,
                l.gamma_m,
                l.delta_e,
                l.delta_r,
                omegas[l.protocol],
                dt,
            );
            let m = math::expm3(&gen);
            let i = sc.cell;
            let v = math::matvec3(&m, [state.e[i], state.rho_eg[i], state.rho_mg[i]]);
            state.e[i] = v[0];
            state.rho_eg[i] = v[1];
            state.rho_mg[i] = v[2];
        }

        if let Some(sigma) = &self.sponge_factor {
            let dt = self.grid.dt;
            for (e, s) in state.e.iter_mut().zip(sigma) {
                if *s > 0.0 {
                    *e *= (-s * dt).exp();
                }
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Half {
    Half,
    Full,
}

/// Generator of the local (x-diagonal) dynamics times `dt`.
fn local_generator(
    sqrt_d: f64,
    gamma_e: f64,
    gamma_m: f64,
    delta_e: f64,
    delta_r: f64,
    omega_c: f64,
    dt: f64,
) -> Mat3 {
    let c = |re: f64, im: f64| Complex64::new(re * dt, im * dt);
    [
        [c(0.0, 0.0), c(0.0, sqrt_d), c(0.0, 0.0)],
        [
            c(0.0, sqrt_d),
            c(-0.5 * gamma_e, -delta_e),
            c(0.0, -0.5 * omega_c),
        ],
        [
            c(0.0, 0.0),
            c(0.0, -0.5 * omega_c),
            c(-0.5 * gamma_m, -delta_r),
        ],
    ]
}

fn nearest_layer(medium: &MediumProfile, x: f64) -> Option<usize> {
    medium
        .layers
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| {
            let da = (x - a.x_start).abs().min((x - a.x_end).abs());
            let db = (x - b.x_start).abs().min((x - b.x_end).abs());
            da.total_cmp(&db)
        })
        .map(|(i, _)| i)
}

/// `sigma(x)`: raised-cosine-squared absorption strength inside the
/// sponge, zero elsewhere. Peak strength 0.1 omega_p keeps per-wavelength
/// absorption gentle enough to avoid back-reflection.
fn sponge_profile(grid: &Grid) -> Vec<f64> {
    let w = grid.sponge_width;
    let sigma0 = 0.1;
    (0..grid.n_points)
        .map(|i| {
            let x = grid.x(i);
            let d_lo = x - grid.x_min;
            let d_hi = grid.x_max - x;
            let d = d_lo.min(d_hi);
            if d >= w {
                0.0
            } else {
                let s = (1.0 - d / w) * std::f64::consts::FRAC_PI_2;
                sigma0 * s.sin().powi(2)
            }
        })
        .collect()
}

/// Accuracy bound for the split step:
/// `min(0.1/Omega_max, 0.05/(sqrt(D_max) wp), tau_min/50)`.
pub fn dt_bound(medium: &MediumProfile, protocols: &[ModulationProtocol]) -> f64 {
    let mut bound = f64::INFINITY;
    let om_max = protocols
        .iter()
        .map(ModulationProtocol::max_omega)
        .fold(0.0, f64::max);
    if om_max > 0.0 {
        bound = bound.min(0.1 / om_max);
    }
    let sd = medium.max_coupling().sqrt();
    if sd > 0.0 {
        bound = bound.min(0.05 / sd);
    }
    if let Some(tau) = protocols
        .iter()
        .filter_map(ModulationProtocol::min_ramp_time)
        .min_by(f64::total_cmp)
    {
        bound = bound.min(tau / 50.0);
    }
    bound
}

/// Result of a transmission scan at one probe frequency.
#[derive(Debug, Clone, Copy)]
pub struct ScanPoint {
    /// Envelope detuning `omega - omega_p`.
    pub nu: f64,
    pub transmitted: f64,
    pub reflected: f64,
}

/// Scan `|T(w)|^2` and `|r(w)|^2` of a static medium.
///
/// A single broadband pulse is propagated through the medium and through
/// an identical vacuum reference; by linearity the ratio of the recorded
/// spectra at a detector plane behind (in front of) the sample is the
/// amplitude transmission (reflection) at every frequency the pulse
/// carries. Frequencies are evaluated by direct DFT of the time traces.
pub fn transmission_scan(
    medium: &MediumProfile,
    protocols: &[ModulationProtocol],
    substitute: DispersionSubstitute,
    nus: &[f64],
) -> Result<Vec<ScanPoint>> {
    if medium.layers.is_empty() {
        return Err(CoreError::Config("transmission scan needs a medium".into()));
    }
    let x_lo = medium.layers.first().unwrap().x_start;
    let x_hi = medium.layers.last().unwrap().x_end;
    let nu_span = nus
        .iter()
        .fold(0.0f64, |m, &v| m.max(v.abs()))
        .max(1e-4);
    // Bandwidth covering the requested range with amplitude >= e^-2.
    let sigma_t = 2.0 / nu_span;
    let sigma_x = sigma_t;

    let launch = x_lo - 6.0 * sigma_x;
    let det_front = x_lo - 1.5 * sigma_x;
    let det_back = x_hi + 1.5 * sigma_x;
    // Slowest crossing determines the recording window.
    let mut v_min: f64 = 1.0;
    for l in &medium.layers {
        let p = l.params(protocols[l.protocol].omega_at(0.0));
        let v = crate::dispersion::group_velocity_resonance(&p);
        if v > 0.0 {
            v_min = v_min.min(v);
        }
    }
    let t_max = (det_back - launch - (x_hi - x_lo)) + (x_hi - x_lo) / v_min + 14.0 * sigma_t;

    let sponge = 4.5 * sigma_x;
    let x_min = launch - 4.5 * sigma_x - sponge;
    let x_max = det_back + 8.0 * sigma_x + sponge;
    // Resolve the pulse bandwidth comfortably.
    let dx_target = (sigma_x / 16.0).min((x_hi - x_lo) / 8.0);
    let mut n = ((x_max - x_min) / dx_target).ceil() as usize;
    n = n.next_power_of_two().clamp(1024, 1 << 21);
    let dt = dt_bound(medium, protocols).min(0.25 * sigma_t);
    let grid = Grid::new(x_min, x_max, n, dt)?.with_sponge(sponge);

    let pulse = PulseSpec::resonant(sigma_t, launch);
    let options = RunOptions {
        t_max,
        snapshot_times: vec![],
        diag_every: 0,
        detectors: vec![det_front, det_back],
    };

    let run_one = |with_medium: bool| -> Result<RunOutput> {
        let med = if with_medium {
            medium.clone()
        } else {
            MediumProfile::vacuum()
        };
        let mut solver = MbSolver::new(grid, med, protocols.to_vec(), substitute)?;
        let mut state = solver.init_state(&pulse)?;
        solver.run(&mut state, &options)
    };

    let with_medium = run_one(true)?;
    let reference = run_one(false)?;

    // A still-significant field at the back detector at the end of the
    // window means the transient has not passed.
    {
        let trace = &with_medium.detectors[1].values;
        let peak = trace.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let tail_start = trace.len().saturating_sub(trace.len() / 20);
        let tail = trace[tail_start..]
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        if peak > 0.0 && tail > 0.02 * peak {
            return Err(CoreError::NonConverged(format!(
                "residual field {:.2}% of peak at the end of the scan window",
                100.0 * tail / peak
            )));
        }
    }

    let dft = |trace: &[Complex64], nu: f64| -> Complex64 {
        let mut acc = Complex64::default();
        for (i, v) in trace.iter().enumerate() {
            let t = i as f64 * dt;
            acc += v * Complex64::from_polar(1.0, nu * t);
        }
        acc * dt
    };

    let front_med = &with_medium.detectors[0].values;
    let back_med = &with_medium.detectors[1].values;
    let front_ref = &reference.detectors[0].values;
    let back_ref = &reference.detectors[1].values;
    let reflected_series: Vec<Complex64> = front_med
        .iter()
        .zip(front_ref)
        .map(|(a, b)| a - b)
        .collect();

    let mut out = Vec::with_capacity(nus.len());
    for &nu in nus {
        let t_amp = dft(back_med, nu);
        let t_ref = dft(back_ref, nu);
        let r_amp = dft(&reflected_series, nu);
        let r_ref = dft(front_ref, nu);
        if t_ref.norm() < 1e-8 || r_ref.norm() < 1e-8 {
            return Err(CoreError::NonConverged(format!(
                "no incident spectral power at nu = {nu}"
            )));
        }
        out.push(ScanPoint {
            nu,
            transmitted: (t_amp / t_ref).norm_sqr(),
            reflected: (r_amp / r_ref).norm_sqr(),
        });
    }
    Ok(out)
}
