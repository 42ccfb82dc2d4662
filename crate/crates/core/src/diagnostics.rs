//! Fourier magnitude spectrum and Morlet scalogram.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::csvio::{fmt_num, write_rows};
use crate::error::{Error, Result};
use crate::signal::TimeSeries;

pub const DEFAULT_OMEGA0: f64 = 6.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub freqs_hz: Vec<f64>,
    /// Normalized to a maximum of 1 unless the input is identically zero.
    pub magnitudes: Vec<f64>,
}

impl Spectrum {
    pub fn peak_hz(&self) -> f64 {
        let i = argmax(&self.magnitudes);
        self.freqs_hz[i]
    }
}

/// One-sided magnitude spectrum of the mean-removed, Hann-windowed signal.
pub fn fft_magnitude(s: &TimeSeries) -> Result<Spectrum> {
    let n = s.len();
    if n < 2 {
        return Err(Error::SeriesTooShort { len: n, min: 2 });
    }
    let mean = s.values().iter().sum::<f64>() / n as f64;
    let mut buf: Vec<Complex64> = s
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let w = 0.5 - 0.5 * (2.0 * PI * i as f64 / (n - 1) as f64).cos();
            Complex64::new((v - mean) * w, 0.0)
        })
        .collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let bins = n / 2 + 1;
    let fs = s.sample_rate();
    let freqs_hz = (0..bins).map(|k| k as f64 * fs / n as f64).collect();
    let mut magnitudes: Vec<f64> = buf[..bins].iter().map(|c| c.norm()).collect();
    normalize(&mut magnitudes);
    Ok(Spectrum { freqs_hz, magnitudes })
}

fn normalize(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(*x));
    if max > 0.0 {
        v.iter_mut().for_each(|x| *x /= max);
    }
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Time-frequency magnitude map, rows indexed by frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    pub freqs_hz: Vec<f64>,
    pub times: Vec<f64>,
    pub magnitudes: Vec<Vec<f64>>,
    /// Lowest frequency free of edge effects at each time, capped at Nyquist.
    pub coi_hz: Vec<f64>,
}

impl Scalogram {
    /// Frequency of the largest magnitude in each time column.
    pub fn ridge(&self) -> Vec<f64> {
        (0..self.times.len())
            .map(|j| {
                let col: Vec<f64> = self.magnitudes.iter().map(|row| row[j]).collect();
                self.freqs_hz[argmax(&col)]
            })
            .collect()
    }
}

/// Continuous wavelet transform with the analytic Morlet wavelet, computed
/// by multiplication in the frequency domain. Scale and frequency are related
/// by `f = omega0 / (2 pi s)`; the wavelet is normalized so that a unit
/// sinusoid produces unit magnitude on its ridge.
pub fn cwt_morlet(s: &TimeSeries, freqs_hz: &[f64], omega0: f64) -> Result<Scalogram> {
    let nyquist_hz = 0.5 * s.sample_rate();
    for &f in freqs_hz {
        if !(f > 0.0 && f.is_finite()) {
            return Err(Error::InvalidFrequency);
        }
        if f >= nyquist_hz {
            return Err(Error::FrequencyAboveNyquist { freq_hz: f, nyquist_hz });
        }
    }
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::InvalidFrequency);
    }
    let n = s.len();
    // Zero padding to at least twice the length keeps the circular
    // convolution from wrapping one edge onto the other.
    let nfft = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(nfft);
    let inverse = planner.plan_fft_inverse(nfft);
    let mut spectrum: Vec<Complex64> = s.values().iter().map(|&v| Complex64::new(v, 0.0)).collect();
    spectrum.resize(nfft, Complex64::new(0.0, 0.0));
    forward.process(&mut spectrum);

    let dw = 2.0 * PI * s.sample_rate() / nfft as f64;
    let mut magnitudes: Vec<Vec<f64>> = freqs_hz
        .par_iter()
        .map(|&f| {
            let scale = omega0 / (2.0 * PI * f);
            let mut buf: Vec<Complex64> = spectrum
                .iter()
                .enumerate()
                .map(|(k, x)| {
                    if k == 0 || k > nfft / 2 {
                        return Complex64::new(0.0, 0.0);
                    }
                    let arg = scale * k as f64 * dw - omega0;
                    x * (2.0 * (-0.5 * arg * arg).exp())
                })
                .collect();
            inverse.process(&mut buf);
            buf[..n].iter().map(|c| c.norm() / nfft as f64).collect()
        })
        .collect();

    let max = magnitudes.iter().flatten().fold(0.0f64, |m, x| m.max(*x));
    if max > 0.0 {
        for row in &mut magnitudes {
            row.iter_mut().for_each(|x| *x /= max);
        }
    }
    let times: Vec<f64> = s.times().collect();
    let (t0, t1) = (s.t0(), s.t_end());
    let coi_hz = times
        .iter()
        .map(|&t| {
            // e-folding time of the Morlet envelope is sqrt(2) * scale.
            let edge = (t - t0).min(t1 - t);
            let f = omega0 * std::f64::consts::SQRT_2 / (2.0 * PI * edge);
            f.min(nyquist_hz)
        })
        .collect();
    Ok(Scalogram {
        freqs_hz: freqs_hz.to_vec(),
        times,
        magnitudes,
        coi_hz,
    })
}

/// `freq_hz,magnitude` rows.
pub fn write_spectrum_csv<W: Write>(sp: &Spectrum, w: W) -> Result<()> {
    let rows = sp.freqs_hz.iter().zip(&sp.magnitudes).map(|(&f, &m)| vec![f, m]);
    write_rows(&["freq_hz", "magnitude"], rows, w)
}

/// Header `t,<f1>,...,<fn>,coi_hz`, then one row per time sample.
pub fn write_scalogram_csv<W: Write>(sc: &Scalogram, w: W) -> Result<()> {
    let freq_names: Vec<String> = sc.freqs_hz.iter().map(|&f| fmt_num(f)).collect();
    let mut header: Vec<&str> = vec!["t"];
    header.extend(freq_names.iter().map(String::as_str));
    header.push("coi_hz");
    let rows = (0..sc.times.len()).map(|j| {
        let mut row = Vec::with_capacity(sc.freqs_hz.len() + 2);
        row.push(sc.times[j]);
        row.extend(sc.magnitudes.iter().map(|m| m[j]));
        row.push(sc.coi_hz[j]);
        row
    });
    write_rows(&header, rows, w)
}

/// `n` frequencies evenly spaced over `[lo, hi]`.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::gen_duffing;

    fn tone(f: f64, secs: f64, fs: f64) -> TimeSeries {
        TimeSeries::from_fn(0.0, 1.0 / fs, (secs * fs) as usize, |t| (2.0 * PI * f * t).sin()).unwrap()
    }

    #[test]
    fn single_tone_peak() {
        let sp = fft_magnitude(&tone(20.0, 10.0, 1000.0)).unwrap();
        assert!((sp.peak_hz() - 20.0).abs() <= 0.1);
        assert_eq!(sp.magnitudes.iter().cloned().fold(0.0, f64::max), 1.0);
    }

    #[test]
    fn zero_signal_spectrum() {
        let s = TimeSeries::new(0.0, 0.01, vec![0.0; 64]).unwrap();
        assert!(fft_magnitude(&s).unwrap().magnitudes.iter().all(|&m| m == 0.0));
        let one = TimeSeries::new(0.0, 0.01, vec![1.0]).unwrap();
        assert!(fft_magnitude(&one).is_err());
    }

    #[test]
    fn two_tone_ratio() {
        let s = TimeSeries::from_fn(0.0, 1e-3, 10_000, |t| {
            (2.0 * PI * 10.0 * t).sin() + 0.5 * (2.0 * PI * 30.0 * t).sin()
        })
        .unwrap();
        let sp = fft_magnitude(&s).unwrap();
        let at = |f: f64| sp.magnitudes[(f / 0.1).round() as usize];
        assert!((at(30.0) / at(10.0) - 0.5).abs() < 0.025);
    }

    #[test]
    fn tone_ridge_is_flat() {
        let s = tone(20.0, 4.0, 1000.0);
        let freqs = linspace(5.0, 60.0, 56);
        let sc = cwt_morlet(&s, &freqs, DEFAULT_OMEGA0).unwrap();
        let ridge = sc.ridge();
        let n = ridge.len();
        assert!(ridge[n / 10..9 * n / 10].iter().all(|&f| (f - 20.0).abs() <= 1.0));
        let max = sc.magnitudes.iter().flatten().cloned().fold(0.0, f64::max);
        assert_eq!(max, 1.0);
        assert!(sc.magnitudes.iter().flatten().all(|&m| (0.0..=1.0).contains(&m)));
    }

    #[test]
    fn chirp_ridge_rises() {
        // Instantaneous frequency 10 + 4 t Hz.
        let s = TimeSeries::from_fn(0.0, 1e-3, 10_000, |t| (2.0 * PI * (10.0 * t + 2.0 * t * t)).sin()).unwrap();
        let freqs = linspace(5.0, 60.0, 111);
        let ridge = cwt_morlet(&s, &freqs, DEFAULT_OMEGA0).unwrap().ridge();
        let interior = &ridge[1000..9000];
        assert!(interior.windows(2).all(|w| w[1] >= w[0]));
        for (i, &f) in interior.iter().enumerate().step_by(500) {
            let t = (1000 + i) as f64 * 1e-3;
            assert!((f - (10.0 + 4.0 * t)).abs() <= 1.5, "t={t} ridge={f}");
        }
    }

    #[test]
    fn duffing_ridge_softens_toward_linear_frequency() {
        let (r, _) = gen_duffing().unwrap();
        let freqs = linspace(5.0, 250.0, 246);
        let sc = cwt_morlet(r.q(), &freqs, DEFAULT_OMEGA0).unwrap();
        let ridge = sc.ridge();
        assert!(ridge[200] > 100.0, "{}", ridge[200]);
        // Oracle: local frequency from the half-periods between sign changes.
        let q = r.q().values();
        let local_hz = |i: usize| {
            let cross: Vec<usize> = (i - 400..i + 400).filter(|&j| q[j] * q[j + 1] < 0.0).collect();
            let span = (cross[cross.len() - 1] - cross[0]) as f64 * 1e-4;
            (cross.len() - 1) as f64 / (2.0 * span)
        };
        for i in [4000, 8000, 9000] {
            let f = local_hz(i);
            assert!((ridge[i] - f).abs() <= 0.06 * f, "t={} ridge={} local={f}", i as f64 * 1e-4, ridge[i]);
        }
        let linear = (300.0f64 / 0.05).sqrt() / (2.0 * PI);
        assert!(ridge[9000] > linear && ridge[9000] < ridge[4000] && ridge[4000] < ridge[200]);
    }

    #[test]
    fn rejects_bad_frequencies() {
        let s = tone(20.0, 1.0, 100.0);
        assert!(matches!(
            cwt_morlet(&s, &[10.0, 50.0], 6.0),
            Err(Error::FrequencyAboveNyquist { .. })
        ));
        assert!(matches!(cwt_morlet(&s, &[0.0], 6.0), Err(Error::InvalidFrequency)));
    }

    #[test]
    fn rows_independent_of_batch() {
        let s = tone(12.0, 2.0, 500.0);
        let freqs = linspace(4.0, 40.0, 37);
        let all = cwt_morlet(&s, &freqs, 6.0).unwrap();
        let max_all = all.magnitudes.iter().flatten().cloned().fold(0.0, f64::max);
        assert_eq!(max_all, 1.0);
        // Row 8 is the 12 Hz ridge row, so it carries the global max in both runs.
        let single = cwt_morlet(&s, &freqs[8..9], 6.0).unwrap();
        assert_eq!(single.magnitudes[0], all.magnitudes[8]);
    }

    #[test]
    fn csv_layout() {
        let s = tone(12.0, 1.0, 100.0);
        let sc = cwt_morlet(&s, &[5.0, 12.0], 6.0).unwrap();
        let mut out = Vec::new();
        write_scalogram_csv(&sc, &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().next().unwrap(), "t,5.0,12.0,coi_hz");
        assert_eq!(text.lines().count(), 101);
        let mut out = Vec::new();
        write_spectrum_csv(&fft_magnitude(&s).unwrap(), &mut out).unwrap();
        assert!(String::from_utf8(out).unwrap().starts_with("freq_hz,magnitude\n"));
    }
}
