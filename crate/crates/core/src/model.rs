//! Static system description: counts, powers, power allocation, node
//! positions and the distance-based pathloss derived from them.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Tolerance on the trace constraint `sum_k lambda_k^2 = 1`.
pub const TRACE_TOLERANCE: f64 = 1e-12;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// Large-scale attenuation `d^(-beta)`.
pub fn pathloss(distance: f64, beta: f64) -> Result<f64> {
    if !(distance > 0.0 && distance.is_finite()) {
        return Err(Error::Domain(format!("distance must be positive, got {distance}")));
    }
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("pathloss exponent must be positive, got {beta}")));
    }
    Ok(distance.powf(-beta))
}

/// Equal power split over `users` streams, `1/sqrt(K)` each.
pub fn uniform_power_allocation(users: usize) -> Result<Vec<f64>> {
    if users == 0 {
        return Err(Error::Domain("power allocation needs at least one user".into()));
    }
    Ok(vec![1.0 / (users as f64).sqrt(); users])
}

/// Counts, powers and allocation of the downlink. Powers are linear (watts).
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// Transmit antennas at the source (M).
    pub antennas: usize,
    /// IRS elements (N).
    pub elements: usize,
    /// Single-antenna users (K).
    pub users: usize,
    /// Pathloss exponent (beta).
    pub pathloss_exponent: f64,
    /// Total transmit power P in watts.
    pub tx_power: f64,
    /// Per-user noise power in watts, length K.
    pub noise: Vec<f64>,
    /// Power-allocation weights lambda_k, length K, with sum of squares 1.
    pub power_alloc: Vec<f64>,
    /// IRS reflection amplitude.
    pub reflection: f64,
}

impl SystemConfig {
    /// Builds a validated configuration with uniform power allocation, equal
    /// noise at every user and unit reflection amplitude.
    pub fn new(
        antennas: usize,
        elements: usize,
        users: usize,
        pathloss_exponent: f64,
        tx_power: f64,
        noise: f64,
    ) -> Result<Self> {
        let power_alloc = uniform_power_allocation(users)?;
        let cfg = SystemConfig {
            antennas,
            elements,
            users,
            pathloss_exponent,
            tx_power,
            noise: vec![noise; users],
            power_alloc,
            reflection: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_power_alloc(mut self, lambda: Vec<f64>) -> Result<Self> {
        self.power_alloc = lambda;
        self.validate()?;
        Ok(self)
    }

    pub fn with_noise(mut self, noise: Vec<f64>) -> Result<Self> {
        self.noise = noise;
        self.validate()?;
        Ok(self)
    }

    pub fn with_reflection(mut self, reflection: f64) -> Result<Self> {
        self.reflection = reflection;
        self.validate()?;
        Ok(self)
    }

    /// Same configuration with a different IRS size.
    pub fn with_elements(&self, elements: usize) -> Result<Self> {
        let mut cfg = self.clone();
        cfg.elements = elements;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 || self.elements == 0 || self.users == 0 {
            return Err(Error::Config(format!(
                "counts must be positive: M={}, N={}, K={}",
                self.antennas, self.elements, self.users
            )));
        }
        if !(self.pathloss_exponent > 0.0 && self.pathloss_exponent.is_finite()) {
            return Err(Error::Config(format!(
                "pathloss exponent must be positive, got {}",
                self.pathloss_exponent
            )));
        }
        if !(self.tx_power > 0.0 && self.tx_power.is_finite()) {
            return Err(Error::Config(format!("transmit power must be positive, got {}", self.tx_power)));
        }
        if self.noise.len() != self.users {
            return Err(Error::Config(format!(
                "expected {} noise powers, got {}",
                self.users,
                self.noise.len()
            )));
        }
        if let Some(bad) = self.noise.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::Config(format!("noise power must be positive, got {bad}")));
        }
        if self.power_alloc.len() != self.users {
            return Err(Error::Config(format!(
                "expected {} power-allocation weights, got {}",
                self.users,
                self.power_alloc.len()
            )));
        }
        let trace: f64 = self.power_alloc.iter().map(|l| l * l).sum();
        if (trace - 1.0).abs() > TRACE_TOLERANCE {
            return Err(Error::Config(format!(
                "power allocation must satisfy sum(lambda^2) = 1, got {trace}"
            )));
        }
        if !(self.reflection > 0.0 && self.reflection.is_finite()) {
            return Err(Error::Config(format!("reflection amplitude must be positive, got {}", self.reflection)));
        }
        Ok(())
    }

    /// Per-stream symbol power `P/K`; multiplies every received signal and
    /// interference term but not the noise.
    pub fn power_scale(&self) -> f64 {
        self.tx_power / self.users as f64
    }
}

/// A position in the plane, in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn scaled(&self, c: f64) -> Point {
        Point::new(self.x * c, self.y * c)
    }
}

/// Users dropped uniformly over an axis-aligned square.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SquareLayout {
    /// Side length L.
    pub side: f64,
    pub center: Point,
}

impl SquareLayout {
    /// Draws `users` positions from the square. The draw depends only on `seed`.
    pub fn sample(&self, users: usize, seed: u64) -> Vec<Point> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let half = self.side / 2.0;
        (0..users)
            .map(|_| {
                let x = self.center.x - half + self.side * rng.random::<f64>();
                let y = self.center.y - half + self.side * rng.random::<f64>();
                Point::new(x, y)
            })
            .collect()
    }
}

/// Node positions. There is no direct source-user link.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    pub source: Point,
    pub irs: Point,
    pub users: Vec<Point>,
}

impl Geometry {
    pub fn new(source: Point, irs: Point, users: Vec<Point>) -> Self {
        Geometry { source, irs, users }
    }

    pub fn with_irs(&self, irs: Point) -> Self {
        Geometry { irs, ..self.clone() }
    }

    pub fn source_irs_distance(&self) -> f64 {
        self.source.distance(&self.irs)
    }

    pub fn irs_user_distances(&self) -> Vec<f64> {
        self.users.iter().map(|u| self.irs.distance(u)).collect()
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Geometry {
        Geometry {
            source: self.source.scaled(c),
            irs: self.irs.scaled(c),
            users: self.users.iter().map(|u| u.scaled(c)).collect(),
        }
    }
}

/// Linear pathlosses of the cascaded links.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkGains {
    /// Source to IRS, `d_sr^(-beta)`.
    pub source_irs: f64,
    /// IRS to each user, `d_rk^(-beta)`.
    pub irs_user: Vec<f64>,
}

impl LinkGains {
    /// Unit pathloss on every link.
    pub fn unit(users: usize) -> Self {
        LinkGains {
            source_irs: 1.0,
            irs_user: vec![1.0; users],
        }
    }

    pub fn users(&self) -> usize {
        self.irs_user.len()
    }
}

/// Pathlosses for every link in `geometry`.
pub fn link_gains(geometry: &Geometry, config: &SystemConfig) -> Result<LinkGains> {
    if geometry.users.len() != config.users {
        return Err(Error::Config(format!(
            "geometry has {} users, configuration has {}",
            geometry.users.len(),
            config.users
        )));
    }
    let beta = config.pathloss_exponent;
    let d_sr = geometry.source_irs_distance();
    if d_sr <= 0.0 {
        return Err(Error::Domain("IRS coincides with the source".into()));
    }
    let source_irs = pathloss(d_sr, beta)?;
    let irs_user = geometry
        .irs_user_distances()
        .into_iter()
        .enumerate()
        .map(|(k, d)| {
            if d <= 0.0 {
                Err(Error::Domain(format!("user {k} coincides with the IRS")))
            } else {
                pathloss(d, beta)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LinkGains { source_irs, irs_user })
}
