//! Acceleration to velocity and displacement: cumulative integration
//! followed by zero-phase Butterworth high-pass filtering at each stage.

use rustfft::num_complex::Complex64;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// Filter order used for drift removal.
pub const HIGHPASS_ORDER: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HighpassSpec {
    order: usize,
    cutoff_hz: f64,
    sample_rate_hz: f64,
}

impl HighpassSpec {
    pub fn new(cutoff_hz: f64, sample_rate_hz: f64) -> Result<Self> {
        let valid = cutoff_hz > 0.0
            && sample_rate_hz.is_finite()
            && sample_rate_hz > 0.0
            && cutoff_hz < 0.5 * sample_rate_hz;
        if !valid {
            return Err(Error::InvalidCutoff {
                cutoff_hz,
                sample_rate_hz,
            });
        }
        Ok(Self {
            order: HIGHPASS_ORDER,
            cutoff_hz,
            sample_rate_hz,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cutoff_hz(&self) -> f64 {
        self.cutoff_hz
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }
}

/// One biquad in transposed direct form II, `a[0]` normalized to 1.
/// First-order sections carry `b[2] = a[2] = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sos {
    pub b: [f64; 3],
    pub a: [f64; 3],
}

impl Sos {
    fn dc_gain(&self) -> f64 {
        (self.b[0] + self.b[1] + self.b[2]) / (self.a[0] + self.a[1] + self.a[2])
    }

    /// State reached after a long run of unit input.
    fn step_state(&self) -> [f64; 2] {
        let g = self.dc_gain();
        let z2 = self.b[2] - self.a[2] * g;
        let z1 = self.b[1] - self.a[1] * g + z2;
        [z1, z2]
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        let z2 = z_inv * z_inv;
        (self.b[0] + z_inv * self.b[1] + z2 * self.b[2]) / (self.a[0] + z_inv * self.a[1] + z2 * self.a[2])
    }
}

/// Cascade of second-order sections.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterCoefficients {
    pub sections: Vec<Sos>,
    pub sample_rate_hz: f64,
    pub order: usize,
}

impl FilterCoefficients {
    pub fn response_at(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz / self.sample_rate_hz;
        let z_inv = Complex64::from_polar(1.0, -w);
        self.sections.iter().map(|s| s.response(z_inv)).product()
    }

    pub fn magnitude_at(&self, freq_hz: f64) -> f64 {
        self.response_at(freq_hz).norm()
    }

    fn run(&self, x: &[f64], x0: f64) -> Vec<f64> {
        let mut y = x.to_vec();
        let mut scale = x0;
        for s in &self.sections {
            let [mut z1, mut z2] = s.step_state().map(|z| z * scale);
            for v in y.iter_mut() {
                let xin = *v;
                let out = s.b[0] * xin + z1;
                z1 = s.b[1] * xin - s.a[1] * out + z2;
                z2 = s.b[2] * xin - s.a[2] * out;
                *v = out;
            }
            scale *= s.dc_gain();
        }
        y
    }
}

/// Digital Butterworth high-pass by bilinear transform with the cutoff
/// pre-warped onto the analog axis.
pub fn butterworth_highpass(spec: &HighpassSpec) -> FilterCoefficients {
    let n = spec.order;
    let warped = (PI * spec.cutoff_hz / spec.sample_rate_hz).tan();
    let mut sections = Vec::with_capacity(n.div_ceil(2));
    for k in 0..n / 2 {
        // Conjugate pole pair of the normalized prototype: s^2 + s/Q + 1.
        let inv_q = 2.0 * ((2 * k + 1) as f64 * PI / (2 * n) as f64).sin();
        let w2 = warped * warped;
        let a0 = 1.0 + inv_q * warped + w2;
        sections.push(Sos {
            b: [1.0 / a0, -2.0 / a0, 1.0 / a0],
            a: [1.0, 2.0 * (w2 - 1.0) / a0, (1.0 - inv_q * warped + w2) / a0],
        });
    }
    if n % 2 == 1 {
        let a0 = 1.0 + warped;
        sections.push(Sos {
            b: [1.0 / a0, -1.0 / a0, 0.0],
            a: [1.0, (warped - 1.0) / a0, 0.0],
        });
    }
    FilterCoefficients {
        sections,
        sample_rate_hz: spec.sample_rate_hz,
        order: n,
    }
}

/// How the two passes of [`filtfilt_with`] are started at the record edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeHandling {
    /// Odd-reflection padding of `3 * order` samples plus steady-state
    /// initial conditions scaled to the first padded sample. Exact for
    /// constant offsets.
    #[default]
    OddReflection,
    /// No padding, zero initial state: the signal is taken to be at rest
    /// outside the record. Suited to free responses, which usually begin
    /// at a velocity extremum where a steady-state start would inject a step.
    Rest,
}

/// Zero-phase forward-backward filtering with odd-reflection padding of
/// `3 * order` samples and steady-state initial conditions at both ends.
pub fn filtfilt(coeffs: &FilterCoefficients, s: &TimeSeries) -> Result<TimeSeries> {
    filtfilt_with(coeffs, s, EdgeHandling::OddReflection)
}

pub fn filtfilt_with(coeffs: &FilterCoefficients, s: &TimeSeries, edges: EdgeHandling) -> Result<TimeSeries> {
    let n = s.len();
    let min = 6 * coeffs.order + 1;
    if n < min {
        return Err(Error::SeriesTooShort { len: n, min });
    }
    let x = s.values();
    let out = match edges {
        EdgeHandling::OddReflection => {
            let pad = 3 * coeffs.order;
            let mut ext = Vec::with_capacity(n + 2 * pad);
            ext.extend((1..=pad).rev().map(|i| 2.0 * x[0] - x[i]));
            ext.extend_from_slice(x);
            ext.extend((1..=pad).map(|i| 2.0 * x[n - 1] - x[n - 1 - i]));

            let mut y = coeffs.run(&ext, ext[0]);
            y.reverse();
            let first = y[0];
            let mut y = coeffs.run(&y, first);
            y.reverse();
            y[pad..pad + n].to_vec()
        }
        EdgeHandling::Rest => {
            let mut y = coeffs.run(x, 0.0);
            y.reverse();
            let mut y = coeffs.run(&y, 0.0);
            y.reverse();
            y
        }
    };
    TimeSeries::new(s.t0(), s.dt(), out)
}

/// Subtracts the least-squares straight line through the samples.
pub fn remove_linear_trend(s: &TimeSeries) -> TimeSeries {
    let n = s.len();
    if n < 2 {
        return s.with_values(vec![0.0; n]);
    }
    // Centered abscissa makes the slope and intercept decouple.
    let mid = (n - 1) as f64 / 2.0;
    let (mut sxy, mut sxx, mut sy) = (0.0, 0.0, 0.0);
    for (i, &y) in s.values().iter().enumerate() {
        let x = i as f64 - mid;
        sxy += x * y;
        sxx += x * x;
        sy += y;
    }
    let slope = sxy / sxx;
    let mean = sy / n as f64;
    let values = s
        .values()
        .iter()
        .enumerate()
        .map(|(i, &y)| y - mean - slope * (i as f64 - mid))
        .collect();
    s.with_values(values)
}

/// Velocity and displacement from acceleration. Each integral has its
/// linear trend removed (integration constant and sensor bias) and is then
/// high-pass filtered forward and backward from rest.
pub fn accel_to_state(a: &TimeSeries, spec: &HighpassSpec) -> Result<(TimeSeries, TimeSeries)> {
    check_rate(a, spec)?;
    let coeffs = butterworth_highpass(spec);
    let stage = |s: &TimeSeries| filtfilt_with(&coeffs, &remove_linear_trend(&s.cumtrapz()), EdgeHandling::Rest);
    let qd = stage(a)?;
    let q = stage(&qd)?;
    Ok((q, qd))
}

/// Zero-phase filtering of a measured signal with the same edge handling
/// as [`accel_to_state`]; used to pass acceleration through the filter.
pub fn highpass_measured(s: &TimeSeries, spec: &HighpassSpec) -> Result<TimeSeries> {
    check_rate(s, spec)?;
    filtfilt_with(&butterworth_highpass(spec), &remove_linear_trend(s), EdgeHandling::Rest)
}

fn check_rate(s: &TimeSeries, spec: &HighpassSpec) -> Result<()> {
    let fs = s.sample_rate();
    if ((fs - spec.sample_rate_hz) / fs).abs() > 1e-6 {
        return Err(Error::InvalidCutoff {
            cutoff_hz: spec.cutoff_hz,
            sample_rate_hz: fs,
        });
    }
    Ok(())
}
