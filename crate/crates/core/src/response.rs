use crate::error::{Error, Result};
use crate::signal::TimeSeries;

/// Measured or simulated free response of a single generalized coordinate.
///
/// `inertia` is the effective generalized inertia: mass for translation,
/// `m * l^2` for a pendulum angle. The conjugate momentum is `inertia * qd`.
#[derive(Debug, Clone, PartialEq)]
pub struct Response {
    q: TimeSeries,
    qd: TimeSeries,
    qdd: Option<TimeSeries>,
    inertia: f64,
}

impl Response {
    pub fn new(q: TimeSeries, qd: TimeSeries, qdd: Option<TimeSeries>, inertia: f64) -> Result<Self> {
        if !(inertia > 0.0 && inertia.is_finite()) {
            return Err(Error::InvalidInertia(inertia));
        }
        q.check_grid(&qd)?;
        if let Some(a) = &qdd {
            q.check_grid(a)?;
        }
        Ok(Self { q, qd, qdd, inertia })
    }

    pub fn q(&self) -> &TimeSeries {
        &self.q
    }

    pub fn qd(&self) -> &TimeSeries {
        &self.qd
    }

    pub fn qdd(&self) -> Option<&TimeSeries> {
        self.qdd.as_ref()
    }

    pub fn inertia(&self) -> f64 {
        self.inertia
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Measured acceleration, or the central difference of the velocity.
    pub fn qdd_or_diff(&self) -> Result<TimeSeries> {
        match &self.qdd {
            Some(a) => Ok(a.clone()),
            None => self.qd.central_diff(),
        }
    }

    /// Same response with a different inertia.
    pub fn with_inertia(&self, inertia: f64) -> Result<Self> {
        Self::new(self.q.clone(), self.qd.clone(), self.qdd.clone(), inertia)
    }

    /// Samples `start..start + len` of every channel.
    pub fn slice(&self, start: usize, len: usize) -> Result<Self> {
        Ok(Self {
            q: self.q.slice(start, len)?,
            qd: self.qd.slice(start, len)?,
            qdd: self.qdd.as_ref().map(|a| a.slice(start, len)).transpose()?,
            inertia: self.inertia,
        })
    }

    /// Samples whose time lies in `[from, to]`.
    pub fn window(&self, from: f64, to: f64) -> Result<Self> {
        let start = self.q.first_index_at_or_after(from);
        let end = self
            .q
            .last_index_at_or_before(to)
            .ok_or(Error::OutOfRange {
                t: to,
                start: self.q.t0(),
                end: self.q.t_end(),
            })?;
        if start > end {
            return Err(Error::SeriesTooShort { len: 0, min: 1 });
        }
        self.slice(start, end - start + 1)
    }

    /// Kinetic energy `T = qd * p / 2 = inertia * qd^2 / 2`.
    pub fn kinetic_energy(&self) -> TimeSeries {
        let m = self.inertia;
        self.qd.with_values(self.qd.values().iter().map(|v| 0.5 * m * v * v).collect())
    }
}

/// Kinetic energy of a response; see [`Response::kinetic_energy`].
pub fn kinetic_energy(r: &Response) -> TimeSeries {
    r.kinetic_energy()
}
