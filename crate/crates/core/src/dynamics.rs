//! Forward simulation of single-coordinate oscillators
//!
//! `inertia * qdd + B(q, qd) + K(q) = F(t)`, integrated with the
//! Dormand-Prince 5(4) pair under PI step-size control. Output is emitted on
//! a uniform grid through the pair's continuous extension.

use crate::basis::{BasisLibrary, BasisTerm};
use crate::error::{Error, Result};
use crate::phase1::DampingModel;
use crate::phase2::StiffnessModel;
use crate::response::Response;
use crate::signal::TimeSeries;

/// Inertia plus damping and stiffness models; enough to simulate.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiedSystem {
    pub inertia: f64,
    pub damping: DampingModel,
    pub stiffness: StiffnessModel,
}

impl IdentifiedSystem {
    pub fn new(inertia: f64, damping: DampingModel, stiffness: StiffnessModel) -> Result<Self> {
        if !(inertia > 0.0 && inertia.is_finite()) {
            return Err(Error::InvalidInertia(inertia));
        }
        let all = damping.coeffs().iter().chain(stiffness.coeffs());
        if let Some(&v) = all.clone().find(|v| !v.is_finite()) {
            return Err(Error::Model(format!("non-finite coefficient {v}")));
        }
        Ok(Self {
            inertia,
            damping,
            stiffness,
        })
    }

    /// A system with no damping or stiffness terms.
    pub fn free_particle(inertia: f64) -> Result<Self> {
        Self::new(inertia, DampingModel::zero(), StiffnessModel::zero())
    }
}

/// Sampled external force, linearly interpolated and zero outside the record.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceSignal {
    samples: TimeSeries,
}

impl ForceSignal {
    pub fn new(samples: TimeSeries) -> Self {
        Self { samples }
    }

    pub fn samples(&self) -> &TimeSeries {
        &self.samples
    }

    pub fn at(&self, t: f64) -> f64 {
        self.samples.interp_at(t).unwrap_or(0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSpec {
    pub rtol: f64,
    pub atol: f64,
    pub sample_rate_hz: f64,
    /// Simulated interval is `[0, t_span]`.
    pub t_span: f64,
    pub max_steps: usize,
}

impl SolverSpec {
    pub const DEFAULT_RTOL: f64 = 1e-12;
    pub const DEFAULT_ATOL: f64 = 1e-16;
    pub const DEFAULT_MAX_STEPS: usize = 50_000_000;

    pub fn new(sample_rate_hz: f64, t_span: f64) -> Self {
        Self {
            rtol: Self::DEFAULT_RTOL,
            atol: Self::DEFAULT_ATOL,
            sample_rate_hz,
            t_span,
            max_steps: Self::DEFAULT_MAX_STEPS,
        }
    }

    pub fn with_tolerances(mut self, rtol: f64, atol: f64) -> Self {
        self.rtol = rtol;
        self.atol = atol;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0 && self.rtol < 1.0) {
            return Err(Error::InvalidSolver(format!("rtol {} not in (0, 1)", self.rtol)));
        }
        if !(self.atol > 0.0 && self.atol.is_finite()) {
            return Err(Error::InvalidSolver(format!("atol {} not positive", self.atol)));
        }
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(Error::InvalidSolver(format!("sample rate {}", self.sample_rate_hz)));
        }
        if !(self.t_span >= 0.0 && self.t_span.is_finite()) {
            return Err(Error::InvalidSolver(format!("time span {}", self.t_span)));
        }
        if self.output_len() > 1 << 28 {
            return Err(Error::InvalidSolver("output grid too large".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate_hz
    }

    /// Number of output samples, both ends included.
    pub fn output_len(&self) -> usize {
        (self.t_span * self.sample_rate_hz).round() as usize + 1
    }
}

/// Time derivative of `(q, qd)`.
pub fn rhs(sys: &IdentifiedSystem, t: f64, state: [f64; 2], force: Option<&ForceSignal>) -> [f64; 2] {
    let [q, qd] = state;
    let f = force.map_or(0.0, |f| f.at(t));
    let qdd = (f - sys.damping.eval(q, qd) - sys.stiffness.eval(q)) / sys.inertia;
    [qd, qdd]
}

// Dormand-Prince 5(4) tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
// Difference between the 5th- and 4th-order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// Continuous extension.
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const MIN_SCALE: f64 = 0.2;
const MAX_SCALE: f64 = 5.0;
const PI_BETA: f64 = 0.04;
const PI_ALPHA: f64 = 0.2 - 0.75 * PI_BETA;

type State = [f64; 2];

#[inline]
fn axpy(y: State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

fn error_norm(err: &State, y0: &State, y1: &State, rtol: f64, atol: f64) -> f64 {
    let mut acc = 0.0;
    for i in 0..2 {
        let sk = atol + rtol * y0[i].abs().max(y1[i].abs());
        acc += (err[i] / sk).powi(2);
    }
    (acc / 2.0).sqrt()
}

fn initial_step<F: FnMut(f64, State) -> State>(f: &mut F, y0: State, f0: State, spec: &SolverSpec) -> f64 {
    let scaled = |v: &State, y: &State| {
        let mut acc = 0.0;
        for i in 0..2 {
            let sk = spec.atol + spec.rtol * y[i].abs();
            acc += (v[i] / sk).powi(2);
        }
        (acc / 2.0).sqrt()
    };
    let d0 = scaled(&y0, &y0);
    let d1 = scaled(&f0, &y0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let h0 = h0.min(spec.t_span.max(f64::MIN_POSITIVE));
    let y1 = axpy(y0, &[(1.0, &f0)], h0);
    let f1 = f(h0, y1);
    let diff = [f1[0] - f0[0], f1[1] - f0[1]];
    let d2 = scaled(&diff, &y0) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1)
}

/// Integrates `dy/dt = f(t, y)` from `y(0) = ic` over `[0, t_span]` and
/// returns the trajectory on the uniform output grid of `spec`.
pub fn integrate_rk45<F>(mut f: F, ic: State, spec: &SolverSpec) -> Result<Vec<State>>
where
    F: FnMut(f64, State) -> State,
{
    spec.validate()?;
    let n_out = spec.output_len();
    let dt_out = spec.dt();
    let t_end = (n_out - 1) as f64 * dt_out;
    let mut out = Vec::with_capacity(n_out);
    out.push(ic);
    if n_out == 1 {
        return Ok(out);
    }

    let mut t = 0.0;
    let mut y = ic;
    let mut k1 = f(t, y);
    let mut h = initial_step(&mut f, y, k1, spec).min(t_end);
    let mut err_old: f64 = 1e-4;
    let mut rejected = false;
    let mut steps = 0usize;

    while out.len() < n_out {
        if steps >= spec.max_steps {
            return Err(Error::TooManySteps {
                t,
                max_steps: spec.max_steps,
            });
        }
        if h < 10.0 * f64::EPSILON * t.abs().max(dt_out) {
            return Err(Error::StepSizeUnderflow { t });
        }
        let last = t + h >= t_end || t_end - (t + h) < 1e-12 * t_end;
        if last {
            h = t_end - t;
        }
        steps += 1;

        let k2 = f(t + C2 * h, axpy(y, &[(A21, &k1)], h));
        let k3 = f(t + C3 * h, axpy(y, &[(A31, &k1), (A32, &k2)], h));
        let k4 = f(t + C4 * h, axpy(y, &[(A41, &k1), (A42, &k2), (A43, &k3)], h));
        let k5 = f(t + C5 * h, axpy(y, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)], h));
        let k6 = f(
            t + h,
            axpy(y, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
        );
        let y_new = axpy(y, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)], h);
        let t_new = if last { t_end } else { t + h };
        let k7 = f(t_new, y_new);

        let err_vec = [
            h * (E1 * k1[0] + E3 * k3[0] + E4 * k4[0] + E5 * k5[0] + E6 * k6[0] + E7 * k7[0]),
            h * (E1 * k1[1] + E3 * k3[1] + E4 * k4[1] + E5 * k5[1] + E6 * k6[1] + E7 * k7[1]),
        ];
        let err = error_norm(&err_vec, &y, &y_new, spec.rtol, spec.atol);
        if !err.is_finite() {
            h *= MIN_SCALE;
            rejected = true;
            continue;
        }

        if err <= 1.0 {
            // Emit every output sample in (t, t_new].
            let ydiff = [y_new[0] - y[0], y_new[1] - y[1]];
            let mut r3 = [0.0; 2];
            let mut r4 = [0.0; 2];
            let mut r5 = [0.0; 2];
            for i in 0..2 {
                r3[i] = h * k1[i] - ydiff[i];
                r4[i] = ydiff[i] - h * k7[i] - r3[i];
                r5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
            }
            while out.len() < n_out {
                let idx = out.len();
                let t_out = idx as f64 * dt_out;
                if idx == n_out - 1 && last {
                    out.push(y_new);
                    continue;
                }
                if t_out > t_new {
                    break;
                }
                let th = (t_out - t) / h;
                let th1 = 1.0 - th;
                let mut v = [0.0; 2];
                for i in 0..2 {
                    v[i] = y[i] + th * (ydiff[i] + th1 * (r3[i] + th * (r4[i] + th1 * r5[i])));
                }
                out.push(v);
            }

            let mut scale = SAFETY * err.max(1e-300).powf(-PI_ALPHA) * err_old.powf(PI_BETA);
            scale = scale.clamp(MIN_SCALE, MAX_SCALE);
            if rejected {
                scale = scale.min(1.0);
            }
            err_old = err.max(1e-4);
            rejected = false;
            t = t_new;
            y = y_new;
            k1 = k7;
            h *= scale;
        } else {
            let scale = (SAFETY * err.powf(-PI_ALPHA)).max(MIN_SCALE);
            h *= scale;
            rejected = true;
        }
    }
    Ok(out)
}

/// Simulates an identified system from `ic` (optionally forced) and packs
/// the trajectory, with acceleration recomputed from the model, into a
/// [`Response`].
pub fn simulate(
    sys: &IdentifiedSystem,
    ic: (f64, f64),
    spec: &SolverSpec,
    force: Option<&ForceSignal>,
) -> Result<Response> {
    let traj = integrate_rk45(|t, y| rhs(sys, t, y, force), [ic.0, ic.1], spec)?;
    let dt = spec.dt();
    let qdd: Vec<f64> = traj
        .iter()
        .enumerate()
        .map(|(i, &s)| rhs(sys, i as f64 * dt, s, force)[1])
        .collect();
    pack(traj, qdd, dt, sys.inertia)
}

fn pack(traj: Vec<State>, qdd: Vec<f64>, dt: f64, inertia: f64) -> Result<Response> {
    let q = TimeSeries::new(0.0, dt, traj.iter().map(|s| s[0]).collect())?;
    let qd = TimeSeries::new(0.0, dt, traj.iter().map(|s| s[1]).collect())?;
    let qdd = TimeSeries::new(0.0, dt, qdd)?;
    Response::new(q, qd, Some(qdd), inertia)
}

/// Parameters of the hardening Duffing benchmark with cubic damping.
pub mod duffing {
    pub const MASS: f64 = 0.05;
    pub const B_LINEAR: f64 = 0.5;
    pub const B_NONLINEAR: f64 = 4000.0;
    pub const K_LINEAR: f64 = 300.0;
    pub const K_NONLINEAR: f64 = 3e8;
    pub const IC: (f64, f64) = (0.0, 10.0);
    pub const T_SPAN: f64 = 1.0;
    pub const SAMPLE_RATE_HZ: f64 = 1e4;
}

/// Parameters of the damped pendulum benchmark.
pub mod pendulum {
    pub const MASS: f64 = 2.0;
    pub const LENGTH: f64 = 0.8;
    pub const DAMPING: f64 = 0.1;
    pub const GRAVITY: f64 = 9.81;
    pub const IC: (f64, f64) = (std::f64::consts::FRAC_PI_2, 0.0);
    pub const T_SPAN: f64 = 100.0;
    pub const SAMPLE_RATE_HZ: f64 = 100.0;

    pub fn inertia() -> f64 {
        MASS * LENGTH * LENGTH
    }
}

fn monomials(pairs: &[(u32, u32)]) -> BasisLibrary {
    BasisLibrary::new(pairs.iter().map(|&(a, b)| BasisTerm::new(a, b).expect("non-constant")).collect())
        .expect("distinct terms")
}

/// Ground truth of the Duffing benchmark.
pub fn duffing_truth() -> IdentifiedSystem {
    use duffing::*;
    IdentifiedSystem {
        inertia: MASS,
        damping: DampingModel::new(monomials(&[(0, 1), (2, 1)]), vec![B_LINEAR, B_NONLINEAR]).expect("valid"),
        stiffness: StiffnessModel::new(monomials(&[(1, 0), (3, 0)]), vec![K_LINEAR, K_NONLINEAR]).expect("valid"),
    }
}

/// Free decay of the Duffing benchmark from `x = 0`, `xd = 10 m/s`,
/// sampled at 10 kHz over one second.
pub fn gen_duffing() -> Result<(Response, IdentifiedSystem)> {
    let truth = duffing_truth();
    let spec = SolverSpec::new(duffing::SAMPLE_RATE_HZ, duffing::T_SPAN);
    let r = simulate(&truth, duffing::IC, &spec, None)?;
    Ok((r, truth))
}

/// Ground truth of the pendulum benchmark. The stiffness is the degree-5
/// Taylor polynomial of `m g l sin(theta)`, used for scoring only; the
/// simulation itself uses the sine.
pub fn pendulum_truth() -> IdentifiedSystem {
    use pendulum::*;
    let mgl = MASS * GRAVITY * LENGTH;
    IdentifiedSystem {
        inertia: inertia(),
        damping: DampingModel::new(monomials(&[(0, 1)]), vec![DAMPING * LENGTH * LENGTH]).expect("valid"),
        stiffness: StiffnessModel::new(
            BasisLibrary::polynomial(5),
            vec![mgl, 0.0, -mgl / 6.0, 0.0, mgl / 120.0],
        )
        .expect("valid"),
    }
}

/// Acceleration of the exact pendulum `m l^2 th'' + b l^2 th' + m g l sin(th) = 0`.
pub fn pendulum_accel(theta: f64, omega: f64) -> f64 {
    use pendulum::*;
    -(DAMPING / MASS) * omega - (GRAVITY / LENGTH) * theta.sin()
}

/// Free swing of the pendulum from `pi/2` at rest over 100 s at 100 Hz.
pub fn gen_pendulum() -> Result<(Response, IdentifiedSystem)> {
    let spec = SolverSpec::new(pendulum::SAMPLE_RATE_HZ, pendulum::T_SPAN);
    let ic = pendulum::IC;
    let traj = integrate_rk45(|_, [th, om]| [om, pendulum_accel(th, om)], [ic.0, ic.1], &spec)?;
    let qdd = traj.iter().map(|&[th, om]| pendulum_accel(th, om)).collect();
    let r = pack(traj, qdd, spec.dt(), pendulum::inertia())?;
    Ok((r, pendulum_truth()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear(m: f64, b: f64, k: f64) -> IdentifiedSystem {
        IdentifiedSystem::new(
            m,
            DampingModel::new(monomials(&[(0, 1)]), vec![b]).unwrap(),
            StiffnessModel::new(monomials(&[(1, 0)]), vec![k]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn rhs_cases() {
        let free = IdentifiedSystem::free_particle(1.0).unwrap();
        assert_eq!(rhs(&free, 0.0, [1.0, 2.0], None), [2.0, 0.0]);

        let d = duffing_truth();
        let [v, a] = rhs(&d, 0.0, [0.0, 10.0], None);
        assert_eq!(v, 10.0);
        assert!((a + 100.0).abs() < 1e-12);

        let p = pendulum_truth();
        let theta = 1e-4;
        let [_, a] = rhs(&p, 0.0, [theta, 0.0], None);
        assert!((a / theta + 12.2625).abs() < 1e-6, "{a}");
    }

    #[test]
    fn pendulum_accel_matches_equation() {
        let th: f64 = 0.7;
        let om = -0.3;
        let expected = -(0.1 * 0.64 * om + 2.0 * 9.81 * 0.8 * th.sin()) / 1.28;
        assert!((pendulum_accel(th, om) - expected).abs() < 1e-14);
    }

    #[test]
    fn undamped_oscillator_conserves_energy() {
        let sys = linear(1.0, 0.0, 1.0);
        let spec = SolverSpec::new(100.0, 100.0);
        let r = simulate(&sys, (1.0, 0.0), &spec, None).unwrap();
        let e0 = 0.5;
        let drift = r
            .q()
            .values()
            .iter()
            .zip(r.qd().values())
            .map(|(q, v)| ((0.5 * v * v + 0.5 * q * q) - e0).abs() / e0)
            .fold(0.0, f64::max);
        assert!(drift < 1e-9, "{drift}");
        // Dense output agrees with the closed form.
        for (i, q) in r.q().values().iter().enumerate() {
            assert!((q - r.q().time(i).cos()).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_system_stays_at_rest() {
        let sys = IdentifiedSystem::free_particle(1.0).unwrap();
        let r = simulate(&sys, (0.0, 0.0), &SolverSpec::new(100.0, 2.0), None).unwrap();
        assert_eq!(r.len(), 201);
        assert!(r.q().values().iter().all(|&v| v == 0.0));
        assert!(r.qd().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duffing_benchmark_shape() {
        let (r, _) = gen_duffing().unwrap();
        assert_eq!(r.len(), 10_001);
        assert_eq!(r.kinetic_energy().values()[0], 2.5);
        // Reference values from an independent 8th-order integration.
        let peak = r.q().max_abs();
        assert!((peak / 0.013357968541789 - 1.0).abs() < 1e-9, "{peak}");
        let tail = r.q().values()[9000..].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((tail / 3.702331181713e-4 - 1.0).abs() < 1e-8, "{tail}");
        assert!(tail < 0.03 * peak);
    }

    #[test]
    fn pendulum_benchmark_shape() {
        let (r, truth) = gen_pendulum().unwrap();
        assert_eq!(r.len(), 10_001);
        assert!((r.inertia() - 1.28).abs() < 1e-15);
        let k = truth.stiffness.coeffs();
        assert!((k[0] - 15.696).abs() < 1e-12);
        assert!((k[2] + 2.616).abs() < 1e-12);
        assert!((k[4] - 0.1308).abs() < 1e-12);

        // Softening: the first zero crossing comes after a quarter of the
        // linearized period.
        let quarter = std::f64::consts::PI / (2.0 * (9.81f64 / 0.8).sqrt());
        let first = r.q().values().iter().position(|&v| v <= 0.0).unwrap();
        assert!(r.q().time(first) > quarter);
    }

    #[test]
    fn time_reversal_returns_to_start() {
        let sys = IdentifiedSystem::new(
            0.05,
            DampingModel::zero(),
            StiffnessModel::new(monomials(&[(1, 0), (3, 0)]), vec![300.0, 3e8]).unwrap(),
        )
        .unwrap();
        let spec = SolverSpec::new(1e4, 0.2);
        let fwd = simulate(&sys, (0.0, 10.0), &spec, None).unwrap();
        let n = fwd.len() - 1;
        let (q1, v1) = (fwd.q().values()[n], fwd.qd().values()[n]);
        let back = simulate(&sys, (q1, -v1), &spec, None).unwrap();
        let (q2, v2) = (back.q().values()[n], back.qd().values()[n]);
        assert!(q2.abs() < 1e-6 * fwd.q().max_abs(), "{q2}");
        assert!((v2 + 10.0).abs() < 1e-6 * 10.0, "{v2}");
    }

    #[test]
    fn zero_force_is_bitwise_unforced() {
        let sys = duffing_truth();
        let spec = SolverSpec::new(1e4, 0.05);
        let zero = ForceSignal::new(TimeSeries::new(0.0, 1e-3, vec![0.0; 10]).unwrap());
        let a = simulate(&sys, (0.0, 10.0), &spec, None).unwrap();
        let b = simulate(&sys, (0.0, 10.0), &spec, Some(&zero)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn force_is_zero_outside_record() {
        let f = ForceSignal::new(TimeSeries::new(0.0, 0.01, vec![0.0, 10.0]).unwrap());
        assert_eq!(f.at(0.005), 5.0);
        assert_eq!(f.at(0.02), 0.0);
        assert_eq!(f.at(-1.0), 0.0);
    }

    #[test]
    fn tighter_tolerance_changes_less_than_error() {
        let sys = duffing_truth();
        let coarse = simulate(&sys, (0.0, 10.0), &SolverSpec::new(1e4, 1.0).with_tolerances(1e-8, 1e-12), None).unwrap();
        let fine = simulate(&sys, (0.0, 10.0), &SolverSpec::new(1e4, 1.0).with_tolerances(5e-9, 5e-13), None)
            .unwrap();
        let reference = simulate(&sys, (0.0, 10.0), &SolverSpec::new(1e4, 1.0), None).unwrap();
        let n = coarse.len() - 1;
        let d_cf = (coarse.qd().values()[n] - fine.qd().values()[n]).abs();
        let d_cr = (coarse.qd().values()[n] - reference.qd().values()[n]).abs();
        // The change from halving the tolerance is bounded by the coarse
        // run's actual error (up to a small factor for the fine run's own error).
        assert!(d_cf <= 1.5 * d_cr + 1e-12, "{d_cf} vs {d_cr}");
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let sys = duffing_truth();
        let bad = SolverSpec::new(1e4, 1.0).with_tolerances(0.0, 1e-10);
        assert!(matches!(simulate(&sys, (0.0, 1.0), &bad, None), Err(Error::InvalidSolver(_))));
    }

    #[test]
    fn step_limit_is_reported() {
        let sys = duffing_truth();
        let mut spec = SolverSpec::new(1e4, 1.0);
        spec.max_steps = 10;
        assert!(matches!(simulate(&sys, (0.0, 10.0), &spec, None), Err(Error::TooManySteps { .. })));
    }
}
