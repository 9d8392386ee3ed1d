//! Rayleigh fading draws for the cascaded source -> IRS -> user channel and
//! the exact per-user SINR under unnormalized MRT precoding.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::model::{LinkGains, SystemConfig};

/// How the IRS phases are chosen for each realization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PhasePolicy {
    /// Independent uniform phases on [-pi, pi] per realization.
    #[default]
    Uniform,
    /// All phases zero, so the reflection matrix is `alpha * I`.
    Zero,
}

/// Independent per-trial random streams derived from one master seed.
///
/// Trial `i` always sees the same stream, however trials are partitioned
/// across workers.
#[derive(Debug, Clone)]
pub struct TrialStreams {
    base: ChaCha8Rng,
}

impl TrialStreams {
    pub fn new(seed: u64) -> Self {
        TrialStreams {
            base: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn stream(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = self.base.clone();
        rng.set_stream(trial);
        rng.set_word_pos(0);
        rng
    }
}

/// Circularly-symmetric complex Gaussian with `E|z|^2 = variance`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let a: f64 = rng.sample(StandardNormal);
    let b: f64 = rng.sample(StandardNormal);
    Complex64::new(a, b) * (variance / 2.0).sqrt()
}

/// One fading draw plus the effective channels it induces.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    antennas: usize,
    elements: usize,
    /// Source -> IRS matrix, N x M, row-major (row n is `g_sr^n`).
    pub g_sr: Vec<Complex64>,
    /// IRS -> user vectors, one length-N vector per user.
    pub h_r: Vec<Vec<Complex64>>,
    /// IRS phases.
    pub theta: Vec<f64>,
    pub reflection: f64,
    /// Effective channels `g_k = h_rk^H Gamma G_sr`, one length-M row per user.
    pub g_eff: Vec<Vec<Complex64>>,
}

impl ChannelRealization {
    /// Zero-filled realization with the dimensions of `config`.
    pub fn zeros(config: &SystemConfig) -> Self {
        let (m, n, k) = (config.antennas, config.elements, config.users);
        ChannelRealization {
            antennas: m,
            elements: n,
            g_sr: vec![Complex64::ZERO; n * m],
            h_r: vec![vec![Complex64::ZERO; n]; k],
            theta: vec![0.0; n],
            reflection: config.reflection,
            g_eff: vec![vec![Complex64::ZERO; m]; k],
        }
    }

    /// Builds a realization from explicit draws.
    ///
    /// Panics if the dimensions are inconsistent.
    pub fn from_parts(
        antennas: usize,
        g_sr: Vec<Complex64>,
        h_r: Vec<Vec<Complex64>>,
        theta: Vec<f64>,
        reflection: f64,
    ) -> Self {
        let elements = theta.len();
        assert_eq!(g_sr.len(), elements * antennas, "G_sr must be N x M");
        assert!(h_r.iter().all(|h| h.len() == elements), "h_rk must have length N");
        let mut r = ChannelRealization {
            antennas,
            elements,
            g_sr,
            g_eff: vec![vec![Complex64::ZERO; antennas]; h_r.len()],
            h_r,
            theta,
            reflection,
        };
        r.refresh_effective();
        r
    }

    pub fn antennas(&self) -> usize {
        self.antennas
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn users(&self) -> usize {
        self.h_r.len()
    }

    pub fn g_sr_row(&self, n: usize) -> &[Complex64] {
        &self.g_sr[n * self.antennas..(n + 1) * self.antennas]
    }

    /// Redraws every fading coefficient and phase in place, then refreshes
    /// the effective channels. Draw order: `G_sr` row-major, each `h_rk`,
    /// then the phases.
    pub fn resample<R: Rng + ?Sized>(&mut self, gains: &LinkGains, policy: PhasePolicy, rng: &mut R) {
        debug_assert_eq!(gains.users(), self.users());
        for g in self.g_sr.iter_mut() {
            *g = complex_gaussian(rng, gains.source_irs);
        }
        for (h, &a) in self.h_r.iter_mut().zip(&gains.irs_user) {
            for hn in h.iter_mut() {
                *hn = complex_gaussian(rng, a);
            }
        }
        match policy {
            PhasePolicy::Uniform => {
                for t in self.theta.iter_mut() {
                    *t = rng.random_range(-std::f64::consts::PI..=std::f64::consts::PI);
                }
            }
            PhasePolicy::Zero => self.theta.fill(0.0),
        }
        self.refresh_effective();
    }

    /// `g_k = sum_n conj(h_rk^n) * alpha * e^{j theta_n} * g_sr^n`, freshly
    /// computed from the stored draws.
    pub fn effective_channels(&self) -> Vec<Vec<Complex64>> {
        let mut out = vec![vec![Complex64::ZERO; self.antennas]; self.users()];
        self.write_effective(&mut out);
        out
    }

    fn refresh_effective(&mut self) {
        let mut g = std::mem::take(&mut self.g_eff);
        self.write_effective(&mut g);
        self.g_eff = g;
    }

    fn write_effective(&self, out: &mut [Vec<Complex64>]) {
        let phasors: Vec<Complex64> = self
            .theta
            .iter()
            .map(|t| Complex64::from_polar(self.reflection, *t))
            .collect();
        for (h, g) in self.h_r.iter().zip(out.iter_mut()) {
            g.fill(Complex64::ZERO);
            for (n, (hn, ph)) in h.iter().zip(&phasors).enumerate() {
                let w = hn.conj() * ph;
                for (gm, sm) in g.iter_mut().zip(self.g_sr_row(n)) {
                    *gm += w * sm;
                }
            }
        }
    }

    /// Inner product `g_k g_j^H` of two effective channels.
    #[inline]
    pub fn cross(&self, k: usize, j: usize) -> Complex64 {
        self.g_eff[k]
            .iter()
            .zip(&self.g_eff[j])
            .map(|(a, b)| a * b.conj())
            .sum()
    }

    /// Matrix of `|g_k g_j^H|^2`, row-major K x K.
    pub fn cross_powers(&self, out: &mut Vec<f64>) {
        let k = self.users();
        out.clear();
        out.resize(k * k, 0.0);
        for a in 0..k {
            out[a * k + a] = self.g_eff[a].iter().map(|z| z.norm_sqr()).sum::<f64>().powi(2);
            for b in a + 1..k {
                let p = self.cross(a, b).norm_sqr();
                out[a * k + b] = p;
                out[b * k + a] = p;
            }
        }
    }
}

/// Draws a fresh realization.
pub fn sample_channel<R: Rng + ?Sized>(
    config: &SystemConfig,
    gains: &LinkGains,
    policy: PhasePolicy,
    rng: &mut R,
) -> ChannelRealization {
    let mut r = ChannelRealization::zeros(config);
    r.resample(gains, policy, rng);
    r
}

/// Signal, interference and SINR of one user in one realization, in
/// `P/K`-scaled power units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrSample {
    /// Desired-signal power `(P/K) lambda_k^2 |g_k g_k^H|^2`.
    pub x: f64,
    /// Interference power `(P/K) sum_{j != k} lambda_j^2 |g_k g_j^H|^2`.
    pub z: f64,
    /// Interference plus noise.
    pub y: f64,
    pub gamma: f64,
}

impl SinrSample {
    fn from_parts(x: f64, z: f64, noise: f64) -> Self {
        let y = z + noise;
        SinrSample { x, z, y, gamma: x / y }
    }
}

/// SINR of user `k` under MRT precoding `w_k = g_k^H`.
pub fn sinr_sample(realization: &ChannelRealization, config: &SystemConfig, k: usize) -> SinrSample {
    assert!(k < realization.users(), "user index {k} out of range");
    let scale = config.power_scale();
    let lam = &config.power_alloc;
    let norm2: f64 = realization.g_eff[k].iter().map(|z| z.norm_sqr()).sum();
    let x = scale * lam[k] * lam[k] * norm2 * norm2;
    let z = scale
        * (0..realization.users())
            .filter(|&j| j != k)
            .map(|j| lam[j] * lam[j] * realization.cross(k, j).norm_sqr())
            .sum::<f64>();
    SinrSample::from_parts(x, z, config.noise[k])
}

/// SINR of every user from a precomputed `|g_k g_j^H|^2` matrix.
pub fn sinr_all(cross_powers: &[f64], config: &SystemConfig, out: &mut Vec<SinrSample>) {
    let k_users = config.users;
    let scale = config.power_scale();
    let lam2: Vec<f64> = config.power_alloc.iter().map(|l| l * l).collect();
    out.clear();
    for k in 0..k_users {
        let row = &cross_powers[k * k_users..(k + 1) * k_users];
        let x = scale * lam2[k] * row[k];
        let z = scale
            * row
                .iter()
                .zip(&lam2)
                .enumerate()
                .filter(|(j, _)| *j != k)
                .map(|(_, (p, l))| p * l)
                .sum::<f64>();
        out.push(SinrSample::from_parts(x, z, config.noise[k]));
    }
}
