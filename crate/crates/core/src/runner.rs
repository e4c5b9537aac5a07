//! Execution of scenarios: builds the requested engine(s), advances them,
//! collects snapshots/series, and reduces cross-engine comparisons.

use std::sync::Arc;

use num_complex::Complex64;

use crate::dispersion::{self, DispersionSubstitute, EitParams};
use crate::error::Result;
use crate::flow::{AdvectionScheme, FlowBoundary, FlowSolver, IntensityState};
use crate::math;
use crate::mb::{FieldState, MbSolver, RunOptions, RunOutput};
use crate::measure;
use crate::medium::{MediumProfile, ModulationProtocol};
use crate::scenario::{ChainScenario, Engine, Geometry, GriddedScenario, Launch, Scenario};

#[derive(Debug)]
pub struct MbArtifacts {
    pub solver_grid: crate::grid::Grid,
    pub initial: FieldState,
    pub output: RunOutput,
}

#[derive(Debug)]
pub struct FlowArtifacts {
    pub x0: f64,
    pub dx: f64,
    pub initial: Vec<f64>,
    /// `(t, profile)` pairs at the scenario snapshot times.
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub final_state: IntensityState,
}

#[derive(Debug)]
pub struct ChainArtifacts {
    /// Sample spacing of the exit time series.
    pub dt: f64,
    /// Intensity at the exit plane of the last layer, modulated run.
    pub modulated: Vec<f64>,
    /// Same for the unmodulated chain (when requested).
    pub static_reference: Option<Vec<f64>>,
    /// Intensity time series entering the first layer.
    pub incident: Vec<f64>,
}

#[derive(Debug, Default)]
pub struct RunArtifacts {
    pub warnings: Vec<String>,
    pub mb: Option<MbArtifacts>,
    pub flow: Option<FlowArtifacts>,
    pub chain: Option<ChainArtifacts>,
    /// Relative L2 distance between the engines' final intensity
    /// profiles (`engine = both` only).
    pub engine_l2: Option<f64>,
}

pub fn run_scenario(sc: &Scenario) -> Result<RunArtifacts> {
    let warnings = sc.validate()?;
    let mut artifacts = RunArtifacts {
        warnings,
        ..Default::default()
    };
    match &sc.geometry {
        Geometry::Gridded(g) => {
            if matches!(sc.engine, Engine::Mb | Engine::Both) {
                artifacts.mb = Some(run_gridded_mb(g)?);
            }
            if matches!(sc.engine, Engine::Effective | Engine::Both) {
                artifacts.flow = Some(run_gridded_flow(g)?);
            }
            if let (Some(mb), Some(flow)) = (&artifacts.mb, &artifacts.flow) {
                artifacts.engine_l2 = Some(engine_l2(mb, flow));
            }
        }
        Geometry::Chain(c) => {
            artifacts.chain = Some(run_chain(c)?);
        }
    }
    Ok(artifacts)
}

pub fn run_gridded_mb(g: &GriddedScenario) -> Result<MbArtifacts> {
    let mut solver = MbSolver::new(
        g.grid,
        g.medium.clone(),
        g.protocols.clone(),
        g.substitute,
    )?;
    let initial = match g.launch {
        Launch::Vacuum => solver.init_state(&g.pulse)?,
        Launch::DarkState { layer } => solver.init_dark_state(&g.pulse, layer)?,
    };
    let mut state = initial.clone();
    let options = RunOptions {
        t_max: g.t_max,
        snapshot_times: g.snapshot_times.clone(),
        diag_every: g.diag_every,
        detectors: g.detectors.clone(),
    };
    let output = solver.run(&mut state, &options)?;
    Ok(MbArtifacts {
        solver_grid: g.grid,
        initial,
        output,
    })
}

/// Initial intensity profile matching the MB launch.
pub fn initial_intensity(g: &GriddedScenario, x: f64) -> f64 {
    let a2 = g.pulse.amplitude * g.pulse.amplitude;
    match g.launch {
        Launch::Vacuum => {
            let s = g.pulse.sigma_x();
            a2 * (-(x - g.pulse.center_x0).powi(2) / (s * s)).exp()
        }
        Launch::DarkState { layer } => {
            let l = &g.medium.layers[layer];
            let omega_c = g.protocols[l.protocol].omega_at(0.0);
            let v = dispersion::group_velocity_resonance(&l.params(omega_c));
            let s = g.pulse.sigma_t * v;
            a2 * (-(x - g.pulse.center_x0).powi(2) / (s * s)).exp()
        }
    }
}

pub fn run_gridded_flow(g: &GriddedScenario) -> Result<FlowArtifacts> {
    let dx = g.flow_dx.unwrap_or_else(|| g.grid.dx());
    let n = (g.grid.length() / dx).round() as usize;
    let x0 = g.grid.x_min;
    let mut solver = FlowSolver::new(
        x0,
        dx,
        n,
        g.medium.clone(),
        g.protocols.clone(),
        AdvectionScheme::Muscl2,
        true,
        FlowBoundary::Open,
    )?;
    let initial: Vec<f64> = (0..n).map(|i| initial_intensity(g, solver.x(i))).collect();
    let mut state = IntensityState::new(initial.clone());
    let mut snapshots = Vec::new();
    let mut times = g.snapshot_times.clone();
    times.sort_by(f64::total_cmp);
    for ts in times {
        if ts > state.t {
            solver.run_until(&mut state, ts.min(g.t_max))?;
        }
        snapshots.push((state.t, state.i.clone()));
    }
    solver.run_until(&mut state, g.t_max)?;
    Ok(FlowArtifacts {
        x0,
        dx,
        initial,
        snapshots,
        final_state: state,
    })
}

/// Relative L2 distance between the final MB |E|^2 and the effective
/// intensity, over cells carrying at least 0.1% of the peak.
fn engine_l2(mb: &MbArtifacts, flow: &FlowArtifacts) -> f64 {
    let mb_state = mb
        .output
        .snapshots
        .last()
        .expect("final snapshot requested");
    let mb_i = mb_state.intensity();
    let xs: Vec<f64> = (0..flow.final_state.i.len())
        .map(|i| flow.x0 + (i as f64 + 0.5) * flow.dx)
        .collect();
    let mb_resampled = measure::resample(mb.solver_grid.x_min, mb.solver_grid.dx(), &mb_i, &xs);
    let peak = mb_resampled.iter().cloned().fold(0.0, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in flow.final_state.i.iter().zip(&mb_resampled) {
        if *b > 1e-3 * peak || *a > 1e-3 * peak {
            num += (a - b) * (a - b);
            den += b * b;
        }
    }
    (num / den.max(1e-300)).sqrt()
}

/// Conservative fixed step for a chain layer: the stability limit
/// evaluated at the protocol corner times.
fn chain_dt(solver: &FlowSolver, protocols: &[ModulationProtocol], t_max: f64) -> f64 {
    let mut ts = vec![0.0, t_max];
    for p in protocols {
        for s in &p.segments {
            ts.push(s.t_start);
            ts.push(0.5 * (s.t_start + s.t_end));
            ts.push(s.t_end);
        }
    }
    let lim = ts
        .into_iter()
        .filter(|t| (0.0..=t_max).contains(t))
        .map(|t| solver.dt_limit(t))
        .fold(f64::INFINITY, f64::min);
    0.95 * lim
}

pub fn run_chain(c: &ChainScenario) -> Result<ChainArtifacts> {
    let sigma_t = c.sigma_t;
    let peak = c.peak_arrival;
    let incident: Arc<dyn Fn(f64) -> f64 + Send + Sync> =
        Arc::new(move |t: f64| (-(t - peak) * (t - peak) / (sigma_t * sigma_t)).exp());

    let run_once = |protocols: &[ModulationProtocol]| -> Result<(f64, Vec<f64>)> {
        let mut inflow = incident.clone();
        let mut dt_out = 0.0;
        let mut series: Vec<f64> = Vec::new();
        for layer in &c.layers {
            let medium = MediumProfile::new(vec![crate::medium::Layer {
                label: None,
                x_start: 0.0,
                x_end: layer.length,
                coupling_d: layer.coupling_d,
                gamma_e: layer.gamma_e,
                gamma_m: layer.gamma_m,
                delta_e: 0.0,
                delta_r: 0.0,
                protocol: layer.protocol,
            }])?;
            let dx = layer.length / c.cells_per_layer as f64;
            let mut solver = FlowSolver::new(
                0.0,
                dx,
                c.cells_per_layer,
                medium,
                protocols.to_vec(),
                AdvectionScheme::Muscl2,
                c.diffusion_on,
                FlowBoundary::Inflow {
                    profile: inflow.clone(),
                },
            )?;
            let dt = chain_dt(&solver, protocols, c.t_max);
            let mut state = IntensityState::new(vec![0.0; c.cells_per_layer]);
            let steps = (c.t_max / dt).ceil() as usize;
            let mut out = Vec::with_capacity(steps + 1);
            out.push(state.i[c.cells_per_layer - 1]);
            for _ in 0..steps {
                solver.step(&mut state, dt)?;
                out.push(state.i[c.cells_per_layer - 1]);
            }
            dt_out = dt;
            // Vacuum fast-forward to the next layer entrance: exact
            // translation, i.e. a time delay of gap/c.
            let gap = c.gap;
            let series_arc = Arc::new(out.clone());
            let sample = move |t: f64| -> f64 {
                let pos = (t - gap) / dt;
                if pos <= 0.0 {
                    return 0.0;
                }
                let i0 = pos.floor() as usize;
                let f = pos - i0 as f64;
                let a = series_arc.get(i0).copied().unwrap_or(0.0);
                let b = series_arc.get(i0 + 1).copied().unwrap_or(0.0);
                a * (1.0 - f) + b * f
            };
            inflow = Arc::new(sample);
            series = out;
        }
        Ok((dt_out, series))
    };

    let (dt, modulated) = run_once(&c.protocols)?;
    let static_reference = if c.static_reference {
        let held: Vec<ModulationProtocol> = c
            .protocols
            .iter()
            .map(|p| ModulationProtocol::hold(p.omega_at(0.0)))
            .collect();
        let (dt_s, mut series) = run_once(&held)?;
        // Resample onto the modulated clock if the steps differ.
        if (dt_s - dt).abs() > 1e-9 * dt {
            let resampled: Vec<f64> = (0..modulated.len())
                .map(|i| {
                    let pos = i as f64 * dt / dt_s;
                    let i0 = pos.floor() as usize;
                    let f = pos - i0 as f64;
                    let a = series.get(i0).copied().unwrap_or(0.0);
                    let b = series.get(i0 + 1).copied().unwrap_or(0.0);
                    a * (1.0 - f) + b * f
                })
                .collect();
            series = resampled;
        }
        Some(series)
    } else {
        None
    };

    let incident_series: Vec<f64> = (0..modulated.len())
        .map(|i| incident(i as f64 * dt))
        .collect();
    Ok(ChainArtifacts {
        dt,
        modulated,
        static_reference,
        incident: incident_series,
    })
}

/// Adiabaticity margins `max|dOmega_c/dt| / (D wp^2)` for every ramp
/// segment of every protocol, using the largest coupling of the layers
/// driven by that protocol.
#[derive(Debug, Clone, Copy)]
pub struct RampMargin {
    pub protocol: usize,
    pub segment: usize,
    pub margin: f64,
}

pub fn adiabaticity_report(sc: &Scenario) -> Vec<RampMargin> {
    let (protocols, coupling_of): (&[ModulationProtocol], Box<dyn Fn(usize) -> f64>) =
        match &sc.geometry {
            Geometry::Gridded(g) => {
                let medium = g.medium.clone();
                (
                    &g.protocols,
                    Box::new(move |pi: usize| {
                        medium
                            .layers
                            .iter()
                            .filter(|l| l.protocol == pi)
                            .map(|l| l.coupling_d)
                            .fold(0.0, f64::max)
                    }),
                )
            }
            Geometry::Chain(c) => {
                let layers = c.layers.clone();
                (
                    &c.protocols,
                    Box::new(move |pi: usize| {
                        layers
                            .iter()
                            .filter(|l| l.protocol == pi)
                            .map(|l| l.coupling_d)
                            .fold(0.0, f64::max)
                    }),
                )
            }
        };
    let mut out = Vec::new();
    for (pi, p) in protocols.iter().enumerate() {
        let d = coupling_of(pi);
        if d <= 0.0 {
            continue;
        }
        let params = EitParams::resonant(d, 1.0);
        for (si, seg) in p.segments.iter().enumerate() {
            out.push(RampMargin {
                protocol: pi,
                segment: si,
                margin: dispersion::adiabaticity_margin(seg.max_rate(), &params),
            });
        }
    }
    out
}

/// Fraction of the total polariton number outside the instantaneous dark
/// branch, from the spectral decomposition of a (lossless) state in a
/// homogeneous medium.
pub fn dark_state_leakage(
    state: &FieldState,
    grid: &crate::grid::Grid,
    params: &EitParams,
    substitute: &DispersionSubstitute,
) -> f64 {
    let n = grid.n_points;
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut spectra = [state.e.clone(), state.rho_eg.clone(), state.rho_mg.clone()];
    for s in &mut spectra {
        fft.process(s);
    }
    let ks = grid.wavenumbers();
    let k_p = 1.0;
    let mut total = 0.0;
    let mut dark = 0.0;
    for (j, &kt) in ks.iter().enumerate() {
        let psi = [spectra[0][j], spectra[1][j], spectra[2][j]];
        let norm: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
        if norm < 1e-30 {
            continue;
        }
        total += norm;
        let m = dispersion::mb_matrix(params, substitute, k_p + kt);
        let eigs = math::eigenvalues3(&m);
        // Dark branch: middle eigenvalue by real part.
        let mut sorted = eigs;
        sorted.sort_by(|a, b| a.re.total_cmp(&b.re));
        if let Some(v) = math::eigenvector3(&m, sorted[1]) {
            // Lossless medium: Hermitian matrix, orthogonal projector.
            let overlap: Complex64 = v
                .iter()
                .zip(psi.iter())
                .map(|(a, b)| a.conj() * b)
                .sum();
            dark += overlap.norm_sqr();
        }
    }
    if total <= 0.0 {
        return 0.0;
    }
    (1.0 - dark / total).max(0.0)
}

/// Forward/backward split of the field energy by the sign of the lab
/// wave vector `k_p + k_tilde`.
pub fn directional_energy(state: &FieldState, grid: &crate::grid::Grid) -> (f64, f64) {
    let n = grid.n_points;
    let mut planner = rustfft::FftPlanner::new();
    let fft = planner.plan_fft_forward(n);
    let mut spec = state.e.clone();
    fft.process(&mut spec);
    let ks = grid.wavenumbers();
    let mut forward = 0.0;
    let mut backward = 0.0;
    for (z, &kt) in spec.iter().zip(&ks) {
        if 1.0 + kt >= 0.0 {
            forward += z.norm_sqr();
        } else {
            backward += z.norm_sqr();
        }
    }
    let scale = grid.dx() / n as f64; // Parseval for the unnormalized FFT
    (forward * scale, backward * scale)
}
