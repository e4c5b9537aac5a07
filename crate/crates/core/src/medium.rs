//! Piecewise media and time-dependent control-field schedules.

use serde::{Deserialize, Serialize};

use crate::dispersion::EitParams;
use crate::error::{CoreError, Result};

/// One homogeneous slab of EIT medium. Intervals are half-open
/// `[x_start, x_end)`; everything not covered by a layer is vacuum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    #[serde(default)]
    pub label: Option<String>,
    pub x_start: f64,
    pub x_end: f64,
    /// Dimensionless light-matter coupling of this slab.
    pub coupling_d: f64,
    #[serde(default)]
    pub gamma_e: f64,
    #[serde(default)]
    pub gamma_m: f64,
    #[serde(default)]
    pub delta_e: f64,
    #[serde(default)]
    pub delta_r: f64,
    /// Index into the scenario's protocol list.
    pub protocol: usize,
}

impl Layer {
    pub fn name(&self, index: usize) -> String {
        self.label
            .clone()
            .unwrap_or_else(|| format!("layer {index} [{}, {}]", self.x_start, self.x_end))
    }

    pub fn params(&self, omega_c: f64) -> EitParams {
        EitParams {
            coupling_d: self.coupling_d,
            omega_p: 1.0,
            gamma_e: self.gamma_e,
            gamma_m: self.gamma_m,
            omega_c,
            delta_e: self.delta_e,
            delta_r: self.delta_r,
        }
    }
}

/// Ordered, non-overlapping layers plus the interface treatment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MediumProfile {
    pub layers: Vec<Layer>,
    /// Length over which D(x) jumps are smoothed by a raised cosine
    /// (0 = sharp one-cell interfaces).
    #[serde(default)]
    pub interface_smoothing: f64,
}

impl MediumProfile {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        let m = MediumProfile {
            layers,
            interface_smoothing: 0.0,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn vacuum() -> Self {
        MediumProfile {
            layers: Vec::new(),
            interface_smoothing: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (i, l) in self.layers.iter().enumerate() {
            if !(l.x_end > l.x_start) {
                return Err(CoreError::InvalidParameter(format!(
                    "{} is empty or reversed",
                    l.name(i)
                )));
            }
            if l.coupling_d < 0.0 || l.gamma_e < 0.0 || l.gamma_m < 0.0 {
                return Err(CoreError::InvalidParameter(format!(
                    "{} has negative D or decay rate",
                    l.name(i)
                )));
            }
        }
        for i in 1..self.layers.len() {
            let (a, b) = (&self.layers[i - 1], &self.layers[i]);
            if b.x_start < a.x_end {
                return Err(CoreError::LayerOverlap {
                    first: a.name(i - 1),
                    second: b.name(i),
                });
            }
        }
        if self.interface_smoothing < 0.0 {
            return Err(CoreError::InvalidParameter(
                "interface_smoothing must be >= 0".into(),
            ));
        }
        Ok(())
    }

    pub fn layer_index_at(&self, x: f64) -> Option<usize> {
        self.layers
            .iter()
            .position(|l| x >= l.x_start && x < l.x_end)
    }

    /// Coupling D at `x`, including optional raised-cosine interface
    /// smoothing of the jumps.
    pub fn coupling_at(&self, x: f64) -> f64 {
        let w = self.interface_smoothing;
        if w == 0.0 {
            return self
                .layer_index_at(x)
                .map_or(0.0, |i| self.layers[i].coupling_d);
        }
        // Smoothed: each layer contributes a plateau with raised-cosine
        // shoulders of width w centred on its interfaces.
        let ramp = |s: f64| -> f64 {
            if s <= -0.5 {
                0.0
            } else if s >= 0.5 {
                1.0
            } else {
                0.5 * (1.0 + (std::f64::consts::PI * s).sin())
            }
        };
        self.layers
            .iter()
            .map(|l| {
                l.coupling_d * ramp((x - l.x_start) / w) * ramp((l.x_end - x) / w)
            })
            .sum()
    }

    pub fn max_coupling(&self) -> f64 {
        self.layers
            .iter()
            .map(|l| l.coupling_d)
            .fold(0.0, f64::max)
    }
}

/// Shape of one modulation segment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RampShape {
    Hold,
    Linear,
    RaisedCosine,
}

/// One piece of a control-field schedule on `[t_start, t_end)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub omega_start: f64,
    pub omega_end: f64,
    pub shape: RampShape,
}

impl Segment {
    fn value(&self, t: f64) -> f64 {
        let s = ((t - self.t_start) / (self.t_end - self.t_start)).clamp(0.0, 1.0);
        match self.shape {
            RampShape::Hold => self.omega_start,
            RampShape::Linear => self.omega_start + (self.omega_end - self.omega_start) * s,
            RampShape::RaisedCosine => {
                let w = 0.5 * (1.0 - (std::f64::consts::PI * s).cos());
                self.omega_start + (self.omega_end - self.omega_start) * w
            }
        }
    }

    fn rate(&self, t: f64) -> f64 {
        let dur = self.t_end - self.t_start;
        let s = (t - self.t_start) / dur;
        if !(0.0..=1.0).contains(&s) {
            return 0.0;
        }
        match self.shape {
            RampShape::Hold => 0.0,
            RampShape::Linear => (self.omega_end - self.omega_start) / dur,
            RampShape::RaisedCosine => {
                (self.omega_end - self.omega_start) / dur
                    * 0.5
                    * std::f64::consts::PI
                    * (std::f64::consts::PI * s).sin()
            }
        }
    }

    pub fn max_rate(&self) -> f64 {
        let dur = self.t_end - self.t_start;
        let slope = ((self.omega_end - self.omega_start) / dur).abs();
        match self.shape {
            RampShape::Hold => 0.0,
            RampShape::Linear => slope,
            RampShape::RaisedCosine => 0.5 * std::f64::consts::PI * slope,
        }
    }
}

/// Piecewise control-field schedule `Omega_c(t)`. Before the first
/// segment the first `omega_start` holds; after the last, the last
/// `omega_end`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulationProtocol {
    pub segments: Vec<Segment>,
}

impl ModulationProtocol {
    /// Constant control field.
    pub fn hold(omega_c: f64) -> Self {
        ModulationProtocol {
            segments: vec![Segment {
                t_start: 0.0,
                t_end: 1.0,
                omega_start: omega_c,
                omega_end: omega_c,
                shape: RampShape::Hold,
            }],
        }
    }

    /// A single ramp from `omega_0` to `omega_1` over `[t0, t0 + tau]`.
    pub fn single_ramp(omega_0: f64, omega_1: f64, t0: f64, tau: f64, shape: RampShape) -> Self {
        ModulationProtocol {
            segments: vec![Segment {
                t_start: t0,
                t_end: t0 + tau,
                omega_start: omega_0,
                omega_end: omega_1,
                shape,
            }],
        }
    }

    /// Down-ramp at `t0`, hold for `tau_s`, ramp back up: the double-ramp
    /// storage schedule.
    pub fn double_ramp(
        omega_high: f64,
        omega_low: f64,
        t0: f64,
        tau: f64,
        tau_s: f64,
        shape: RampShape,
    ) -> Self {
        ModulationProtocol {
            segments: vec![
                Segment {
                    t_start: t0,
                    t_end: t0 + tau,
                    omega_start: omega_high,
                    omega_end: omega_low,
                    shape,
                },
                Segment {
                    t_start: t0 + tau,
                    t_end: t0 + tau + tau_s,
                    omega_start: omega_low,
                    omega_end: omega_low,
                    shape: RampShape::Hold,
                },
                Segment {
                    t_start: t0 + tau + tau_s,
                    t_end: t0 + 2.0 * tau + tau_s,
                    omega_start: omega_low,
                    omega_end: omega_high,
                    shape,
                },
            ],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(CoreError::Protocol("no segments".into()));
        }
        for s in &self.segments {
            if !(s.t_end > s.t_start) {
                return Err(CoreError::Protocol(format!(
                    "segment [{}, {}] is empty or reversed",
                    s.t_start, s.t_end
                )));
            }
            if s.omega_start < 0.0 || s.omega_end < 0.0 {
                return Err(CoreError::Protocol("Omega_c must stay >= 0".into()));
            }
        }
        for w in self.segments.windows(2) {
            if w[1].t_start < w[0].t_end - 1e-12 {
                return Err(CoreError::Protocol(format!(
                    "segments [{}, {}] and [{}, {}] overlap",
                    w[0].t_start, w[0].t_end, w[1].t_start, w[1].t_end
                )));
            }
        }
        Ok(())
    }

    pub fn omega_at(&self, t: f64) -> f64 {
        let first = &self.segments[0];
        if t < first.t_start {
            return first.omega_start;
        }
        for s in &self.segments {
            if t < s.t_end {
                return s.value(t);
            }
        }
        self.segments.last().unwrap().omega_end
    }

    /// Analytic `dOmega_c/dt` at `t` (zero outside all segments).
    pub fn rate_at(&self, t: f64) -> f64 {
        self.segments
            .iter()
            .find(|s| t >= s.t_start && t < s.t_end)
            .map_or(0.0, |s| s.rate(t))
    }

    /// Largest `|dOmega_c/dt|` over the whole schedule.
    pub fn max_rate(&self) -> f64 {
        self.segments.iter().map(Segment::max_rate).fold(0.0, f64::max)
    }

    pub fn max_omega(&self) -> f64 {
        self.segments
            .iter()
            .flat_map(|s| [s.omega_start, s.omega_end])
            .fold(0.0, f64::max)
    }

    /// Shortest ramp duration (used for the time-step bound).
    pub fn min_ramp_time(&self) -> Option<f64> {
        self.segments
            .iter()
            .filter(|s| s.shape != RampShape::Hold && s.omega_start != s.omega_end)
            .map(|s| s.t_end - s.t_start)
            .min_by(f64::total_cmp)
    }
}
