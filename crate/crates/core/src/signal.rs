//! Uniformly sampled signals and the numerical kernels shared by every stage:
//! cumulative trapezoidal integration, second-order differentiation, linear
//! interpolation and centered moving averages.

use crate::error::{Error, Result};

/// Relative tolerance used when deciding whether two grids coincide.
const GRID_RTOL: f64 = 1e-9;

/// A real-valued signal sampled at `t0 + i * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidStep(dt));
        }
        if !t0.is_finite() {
            return Err(Error::NonFinite { index: 0, value: t0 });
        }
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self { t0, dt, values })
    }

    /// Samples `f` on `n` points starting at `t0`.
    pub fn from_fn(t0: f64, dt: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..n).map(|i| f(t0 + i as f64 * dt)).collect();
        Self::new(t0, dt, values)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.time(self.len() - 1)
    }

    pub fn sample_rate(&self) -> f64 {
        1.0 / self.dt
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.time(i))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when both series have the same length, start and step.
    pub fn same_grid(&self, other: &TimeSeries) -> bool {
        let tol = GRID_RTOL * self.dt;
        self.len() == other.len()
            && (self.dt - other.dt).abs() <= tol
            && (self.t0 - other.t0).abs() <= tol
    }

    pub fn check_grid(&self, other: &TimeSeries) -> Result<()> {
        if self.same_grid(other) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    /// A series on the same grid with new values. Callers guarantee the
    /// values are finite and the length matches.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> TimeSeries {
        debug_assert_eq!(values.len(), self.len());
        debug_assert!(values.iter().all(|v| v.is_finite()));
        TimeSeries {
            t0: self.t0,
            dt: self.dt,
            values,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<TimeSeries> {
        TimeSeries::new(self.t0, self.dt, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &TimeSeries, f: impl Fn(f64, f64) -> f64) -> Result<TimeSeries> {
        self.check_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        TimeSeries::new(self.t0, self.dt, values)
    }

    /// Samples `start..start + len` as a new series with shifted origin.
    pub fn slice(&self, start: usize, len: usize) -> Result<TimeSeries> {
        if len == 0 || start + len > self.len() {
            return Err(Error::SeriesTooShort {
                len: self.len(),
                min: start + len.max(1),
            });
        }
        Ok(TimeSeries {
            t0: self.time(start),
            dt: self.dt,
            values: self.values[start..start + len].to_vec(),
        })
    }

    /// Index of the first sample at or after `t` (with a small tolerance so
    /// that a query landing on a sample time returns that sample).
    pub fn first_index_at_or_after(&self, t: f64) -> usize {
        let pos = (t - self.t0) / self.dt;
        let idx = (pos - GRID_RTOL).ceil().max(0.0) as usize;
        idx.min(self.len())
    }

    /// Index of the last sample at or before `t`.
    pub fn last_index_at_or_before(&self, t: f64) -> Option<usize> {
        let pos = (t - self.t0) / self.dt;
        if pos < -GRID_RTOL {
            return None;
        }
        Some(((pos + GRID_RTOL).floor() as usize).min(self.len() - 1))
    }

    /// Cumulative trapezoidal integral starting from zero at `t0`.
    pub fn cumtrapz(&self) -> TimeSeries {
        let mut out = Vec::with_capacity(self.len());
        out.push(0.0);
        // Accumulate the unscaled panel sums and multiply by dt once per sample
        // so that exactly representable integrals stay exact.
        let mut acc = 0.0;
        for w in self.values.windows(2) {
            acc += 0.5 * (w[0] + w[1]);
            out.push(acc * self.dt);
        }
        self.with_values(out)
    }

    /// Second-order finite-difference derivative: central in the interior,
    /// one-sided three-point stencils at both ends.
    pub fn central_diff(&self) -> Result<TimeSeries> {
        let n = self.len();
        if n < 3 {
            return Err(Error::SeriesTooShort { len: n, min: 3 });
        }
        let v = &self.values;
        let h2 = 2.0 * self.dt;
        let mut out = Vec::with_capacity(n);
        out.push((-3.0 * v[0] + 4.0 * v[1] - v[2]) / h2);
        out.extend(v.windows(3).map(|w| (w[2] - w[0]) / h2));
        out.push((3.0 * v[n - 1] - 4.0 * v[n - 2] + v[n - 3]) / h2);
        TimeSeries::new(self.t0, self.dt, out)
    }

    /// Linear interpolation at an arbitrary time inside the record.
    pub fn interp_at(&self, t: f64) -> Result<f64> {
        let start = self.t0;
        let end = self.t_end();
        let slack = GRID_RTOL * self.dt;
        if !(t >= start - slack && t <= end + slack) {
            return Err(Error::OutOfRange { t, start, end });
        }
        let pos = ((t - start) / self.dt).max(0.0);
        let i = pos.floor() as usize;
        if i >= self.len() - 1 {
            return Ok(self.values[self.len() - 1]);
        }
        let frac = pos - i as f64;
        let (a, b) = (self.values[i], self.values[i + 1]);
        Ok(a + frac * (b - a))
    }

    /// Centered moving average. Near the edges the window shrinks
    /// symmetrically so every output sample is centered on its input.
    pub fn moving_average(&self, window: usize) -> Result<TimeSeries> {
        let values = moving_average(&self.values, window)?;
        Ok(self.with_values(values))
    }
}

/// Centered moving average over a plain slice; see
/// [`TimeSeries::moving_average`].
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    let n = values.len();
    if window == 0 || window > n {
        return Err(Error::WindowTooLarge { window, len: n });
    }
    if window == 1 {
        return Ok(values.to_vec());
    }
    let left = (window - 1) / 2;
    let right = window - 1 - left;
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in values {
        acc += v;
        prefix.push(acc);
    }
    let out = (0..n)
        .map(|i| {
            let room = i.min(n - 1 - i);
            let (lo, hi) = if room >= right {
                (i - left, i + right)
            } else {
                let h = room.min(left);
                (i - h, i + h)
            };
            (prefix[hi + 1] - prefix[lo]) / (hi - lo + 1) as f64
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn rejects_bad_construction() {
        assert!(matches!(TimeSeries::new(0.0, 0.0, vec![1.0]), Err(Error::InvalidStep(_))));
        assert!(matches!(TimeSeries::new(0.0, 1.0, vec![]), Err(Error::EmptySeries)));
        assert!(matches!(
            TimeSeries::new(0.0, 1.0, vec![1.0, f64::NAN]),
            Err(Error::NonFinite { index: 1, .. })
        ));
        assert!(TimeSeries::new(0.0, 1.0, vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn cumtrapz_constant_is_exact() {
        let s = TimeSeries::new(0.0, 0.001, vec![1.0; 1001]).unwrap();
        let c = s.cumtrapz();
        assert_eq!(c.values()[0], 0.0);
        assert_eq!(*c.values().last().unwrap(), 1.0);
    }

    #[test]
    fn cumtrapz_zero_and_sine() {
        let z = TimeSeries::new(0.0, 0.1, vec![0.0; 50]).unwrap().cumtrapz();
        assert!(z.values().iter().all(|&v| v == 0.0));

        let dt = 1e-4;
        let n = (PI / dt).round() as usize + 1;
        // Use the exact grid ending at pi.
        let dt = PI / (n - 1) as f64;
        let s = TimeSeries::from_fn(0.0, dt, n, f64::sin).unwrap();
        let last = *s.cumtrapz().values().last().unwrap();
        assert!((last - 2.0).abs() < 1e-6, "{last}");
    }

    #[test]
    fn central_diff_cases() {
        let ramp = TimeSeries::from_fn(0.0, 0.01, 100, |t| 3.5 * t).unwrap();
        for v in ramp.central_diff().unwrap().values() {
            assert!((v - 3.5).abs() < 1e-10);
        }
        let c = TimeSeries::new(0.0, 0.01, vec![2.0; 10]).unwrap();
        assert!(c.central_diff().unwrap().values().iter().all(|&v| v == 0.0));

        let s = TimeSeries::from_fn(0.0, 1e-3, 5000, f64::sin).unwrap();
        let d = s.central_diff().unwrap();
        let err = d
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| (v - s.time(i).cos()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");

        let short = TimeSeries::new(0.0, 1.0, vec![1.0, 2.0]).unwrap();
        assert!(matches!(short.central_diff(), Err(Error::SeriesTooShort { len: 2, min: 3 })));
    }

    #[test]
    fn interp_cases() {
        let s = TimeSeries::new(0.0, 1.0, vec![0.0, 2.0]).unwrap();
        assert_eq!(s.interp_at(0.5).unwrap(), 1.0);
        assert_eq!(s.interp_at(1.0).unwrap(), 2.0);
        assert!(matches!(s.interp_at(1.5), Err(Error::OutOfRange { .. })));
        assert!(s.interp_at(-0.1).is_err());

        let sine = TimeSeries::from_fn(0.0, 1e-3, 1000, f64::sin).unwrap();
        assert_eq!(sine.interp_at(sine.time(17)).unwrap(), sine.values()[17]);
        assert!((sine.interp_at(0.42).unwrap() - 0.42f64.sin()).abs() < 1e-6);
    }

    #[test]
    fn moving_average_cases() {
        let s = TimeSeries::from_fn(0.0, 1.0, 20, |t| t * t).unwrap();
        assert_eq!(s.moving_average(1).unwrap(), s);

        let c = TimeSeries::new(0.0, 1.0, vec![4.25; 33]).unwrap();
        for w in [2, 5, 33] {
            for v in c.moving_average(w).unwrap().values() {
                assert!((v - 4.25).abs() < 1e-12);
            }
        }

        let k = 3;
        let alt = TimeSeries::from_fn(0.0, 1.0, 40, |t| if (t as i64) % 2 == 0 { 1.0 } else { -1.0 })
            .unwrap();
        let m = alt.moving_average(2 * k).unwrap();
        for v in &m.values()[k..40 - k] {
            assert!(v.abs() < 1e-12);
        }

        assert!(matches!(c.moving_average(0), Err(Error::WindowTooLarge { .. })));
        assert!(matches!(c.moving_average(34), Err(Error::WindowTooLarge { .. })));
    }

    #[test]
    fn index_helpers() {
        let s = TimeSeries::new(1.0, 0.5, vec![0.0; 5]).unwrap();
        assert_eq!(s.first_index_at_or_after(1.0), 0);
        assert_eq!(s.first_index_at_or_after(1.2), 1);
        assert_eq!(s.first_index_at_or_after(1.5), 1);
        assert_eq!(s.last_index_at_or_before(1.7), Some(1));
        assert_eq!(s.last_index_at_or_before(0.5), None);
        assert_eq!(s.last_index_at_or_before(9.0), Some(4));
    }
}
