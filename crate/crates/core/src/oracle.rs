//! Monte-Carlo estimates of the SINR moments and of the SINR CDF, and the
//! harness that checks every closed form against them.
//!
//! Trials are split into [`BATCHES`] contiguous batches. Trial `i` draws
//! from its own stream (see [`TrialStreams`]), batches are reduced in index
//! order, and standard errors come from the spread of the batch means. The
//! results therefore depend only on `(seed, n_trials)`.

use std::fmt::{self, Write as _};
use std::io;

use rayon::prelude::*;

use crate::channel::{sinr_all, ChannelRealization, PhasePolicy, SinrSample, TrialStreams};
use crate::error::{Error, Result};
use crate::model::{LinkGains, SystemConfig};
use crate::moments::{self, Forms, MomentSet, UserLinks, Variant};

/// Number of batches used for batch-means standard errors.
pub const BATCHES: usize = 100;

/// Smallest accepted trial count.
pub const MIN_TRIALS: usize = 1_000;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = CompensatedSum::default();
        iter.into_iter().for_each(|v| s.add(v));
        s
    }
}

/// A point estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n: usize,
}

impl EstimateWithError {
    /// Estimate from per-batch means `(batch_mean, batch_size)` and the
    /// overall value.
    fn from_batches(value: f64, batch_means: &[f64], n: usize) -> Self {
        let b = batch_means.len() as f64;
        let ss: CompensatedSum = batch_means.iter().map(|m| (m - value).powi(2)).collect();
        let std_error = if batch_means.len() > 1 { (ss.value() / (b * (b - 1.0))).sqrt() } else { 0.0 };
        EstimateWithError { value, std_error, n }
    }
}

fn batch_bounds(n: usize) -> Vec<(usize, usize)> {
    (0..BATCHES).map(|b| (b * n / BATCHES, (b + 1) * n / BATCHES)).collect()
}

fn check_trials(n_trials: usize) -> Result<()> {
    if n_trials < MIN_TRIALS {
        return Err(Error::Config(format!("need at least {MIN_TRIALS} trials, got {n_trials}")));
    }
    Ok(())
}

/// Runs `n_trials` channel draws in [`BATCHES`] batches and returns one
/// accumulator per batch, in batch order. `record` sees the per-user SINR
/// samples and the `|g_k g_j^H|^2` matrix of each trial.
pub fn run_batches<A, I, F>(
    config: &SystemConfig,
    gains: &LinkGains,
    policy: PhasePolicy,
    n_trials: usize,
    seed: u64,
    init: I,
    record: F,
) -> Vec<(A, usize)>
where
    A: Send,
    I: Fn() -> A + Sync,
    F: Fn(&mut A, &[SinrSample], &[f64]) + Sync,
{
    let streams = TrialStreams::new(seed);
    batch_bounds(n_trials)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut acc = init();
            let mut r = ChannelRealization::zeros(config);
            let mut cross = Vec::new();
            let mut samples = Vec::with_capacity(config.users);
            for trial in lo..hi {
                let mut rng = streams.stream(trial as u64);
                r.resample(gains, policy, &mut rng);
                r.cross_powers(&mut cross);
                sinr_all(&cross, config, &mut samples);
                record(&mut acc, &samples, &cross);
            }
            (acc, hi - lo)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default)]
struct MomentSums {
    x: CompensatedSum,
    x2: CompensatedSum,
    z: CompensatedSum,
    z2: CompensatedSum,
    xz: CompensatedSum,
    y: CompensatedSum,
    y2: CompensatedSum,
    t1: CompensatedSum,
    t2: CompensatedSum,
}

/// Monte-Carlo moments of one user, each with a batch-means standard error.
///
/// `t1` and `t2` are the unscaled fourth-order cross terms for the first one
/// (resp. two) interferers of the user; absent when there are too few users.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatedMoments {
    pub ex: EstimateWithError,
    pub ex2: EstimateWithError,
    pub ez: EstimateWithError,
    pub ez2: EstimateWithError,
    pub ey: EstimateWithError,
    pub ey2: EstimateWithError,
    pub exz: EstimateWithError,
    pub cov_xy: EstimateWithError,
    pub t1: Option<EstimateWithError>,
    pub t2: Option<EstimateWithError>,
}

impl EstimatedMoments {
    /// Point estimates as a [`MomentSet`].
    pub fn to_moment_set(&self) -> MomentSet {
        MomentSet {
            ex: self.ex.value,
            ex2: self.ex2.value,
            ez: self.ez.value,
            ez2: self.ez2.value,
            ey: self.ey.value,
            ey2: self.ey2.value,
            exz: self.exz.value,
            cov_xy: self.cov_xy.value,
        }
    }
}

/// The other users of `k`, in index order.
fn interferers_of(k: usize, users: usize) -> Vec<usize> {
    (0..users).filter(|&j| j != k).collect()
}

/// Sample means of `X, X^2, Z, Z^2, XZ, Y, Y^2` (and `T1`, `T2`) for user `k`.
pub fn estimate_moments(
    config: &SystemConfig,
    gains: &LinkGains,
    k: usize,
    n_trials: usize,
    seed: u64,
    policy: PhasePolicy,
) -> Result<EstimatedMoments> {
    check_trials(n_trials)?;
    if k >= config.users {
        return Err(Error::Domain(format!("user {k} out of range for K={}", config.users)));
    }
    let others = interferers_of(k, config.users);
    let users = config.users;
    let batches = run_batches(config, gains, policy, n_trials, seed, MomentSums::default, |acc, s, cross| {
        let SinrSample { x, z, y, .. } = s[k];
        acc.x.add(x);
        acc.x2.add(x * x);
        acc.z.add(z);
        acc.z2.add(z * z);
        acc.xz.add(x * z);
        acc.y.add(y);
        acc.y2.add(y * y);
        if let Some(&j) = others.first() {
            let p = cross[k * users + j];
            acc.t1.add(p * p);
            if let Some(&h) = others.get(1) {
                acc.t2.add(p * cross[k * users + h]);
            }
        }
    });

    let n = n_trials as f64;
    let est = |f: fn(&MomentSums) -> CompensatedSum| {
        let total: CompensatedSum = batches.iter().map(|(b, _)| f(b).value()).collect();
        let means: Vec<f64> = batches.iter().map(|(b, c)| f(b).value() / *c as f64).collect();
        EstimateWithError::from_batches(total.value() / n, &means, n_trials)
    };
    let ex = est(|b| b.x);
    let ez = est(|b| b.z);
    let exz = est(|b| b.xz);
    let cov_means: Vec<f64> = batches
        .iter()
        .map(|(b, c)| {
            let c = *c as f64;
            b.xz.value() / c - (b.x.value() / c) * (b.z.value() / c)
        })
        .collect();
    let cov_value = moments::cov_xy(exz.value, ex.value, ez.value);
    Ok(EstimatedMoments {
        ex,
        ex2: est(|b| b.x2),
        ez,
        ez2: est(|b| b.z2),
        ey: est(|b| b.y),
        ey2: est(|b| b.y2),
        exz,
        cov_xy: EstimateWithError::from_batches(cov_value, &cov_means, n_trials),
        t1: (!others.is_empty()).then(|| est(|b| b.t1)),
        t2: (others.len() >= 2).then(|| est(|b| b.t2)),
    })
}

/// Empirical CDF of one user's SINR on a threshold grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    pub thresholds: Vec<f64>,
    pub probabilities: Vec<f64>,
    /// Batch-means standard error of each probability.
    pub std_errors: Vec<f64>,
    pub n: usize,
}

impl EmpiricalCdf {
    /// Largest absolute difference to `cdf` over the grid.
    pub fn max_gap(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        self.thresholds
            .iter()
            .zip(&self.probabilities)
            .map(|(t, p)| (cdf(*t) - p).abs())
            .fold(0.0, f64::max)
    }
}

fn check_thresholds(thresholds: &[f64]) -> Result<()> {
    if thresholds.is_empty() {
        return Err(Error::Domain("threshold grid is empty".into()));
    }
    if thresholds.iter().any(|t| !(*t > 0.0) || !t.is_finite()) {
        return Err(Error::Domain("thresholds must be positive and finite".into()));
    }
    if thresholds.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::Domain("thresholds must be sorted".into()));
    }
    Ok(())
}

/// Fraction of trials with `gamma_k <= threshold`, for every user at once.
/// One channel draw per trial is shared by all users.
pub fn empirical_outage_all(
    config: &SystemConfig,
    gains: &LinkGains,
    thresholds: &[f64],
    n_trials: usize,
    seed: u64,
    policy: PhasePolicy,
) -> Result<Vec<EmpiricalCdf>> {
    check_trials(n_trials)?;
    check_thresholds(thresholds)?;
    let users = config.users;
    let t_len = thresholds.len();
    // hist[k][i] counts trials whose first threshold >= gamma is index i
    // (i = t_len when gamma exceeds every threshold).
    let batches = run_batches(
        config,
        gains,
        policy,
        n_trials,
        seed,
        || vec![0u64; users * (t_len + 1)],
        |hist, s, _| {
            for (k, sample) in s.iter().enumerate() {
                let i = thresholds.partition_point(|t| *t < sample.gamma);
                hist[k * (t_len + 1) + i] += 1;
            }
        },
    );
    let cdf_of = |hist: &[u64], k: usize, count: usize| -> Vec<f64> {
        let mut acc = 0u64;
        hist[k * (t_len + 1)..k * (t_len + 1) + t_len]
            .iter()
            .map(|h| {
                acc += h;
                acc as f64 / count as f64
            })
            .collect()
    };
    let mut total = vec![0u64; users * (t_len + 1)];
    for (h, _) in &batches {
        total.iter_mut().zip(h).for_each(|(a, b)| *a += b);
    }
    Ok((0..users)
        .map(|k| {
            let probabilities = cdf_of(&total, k, n_trials);
            let per_batch: Vec<Vec<f64>> = batches.iter().map(|(h, c)| cdf_of(h, k, *c)).collect();
            let std_errors = (0..t_len)
                .map(|t| {
                    let means: Vec<f64> = per_batch.iter().map(|b| b[t]).collect();
                    EstimateWithError::from_batches(probabilities[t], &means, n_trials).std_error
                })
                .collect();
            EmpiricalCdf {
                thresholds: thresholds.to_vec(),
                probabilities,
                std_errors,
                n: n_trials,
            }
        })
        .collect())
}

/// Empirical outage of user `k` on a sorted threshold grid.
pub fn empirical_outage(
    config: &SystemConfig,
    gains: &LinkGains,
    k: usize,
    thresholds: &[f64],
    n_trials: usize,
    seed: u64,
) -> Result<EmpiricalCdf> {
    if k >= config.users {
        return Err(Error::Domain(format!("user {k} out of range for K={}", config.users)));
    }
    let mut all = empirical_outage_all(config, gains, thresholds, n_trials, seed, PhasePolicy::Uniform)?;
    Ok(all.swap_remove(k))
}

/// Raw SINR samples of user `k` in trial order.
pub fn sample_sinr(
    config: &SystemConfig,
    gains: &LinkGains,
    k: usize,
    n_trials: usize,
    seed: u64,
    policy: PhasePolicy,
) -> Result<Vec<f64>> {
    check_trials(n_trials)?;
    let batches = run_batches(config, gains, policy, n_trials, seed, Vec::new, |v: &mut Vec<f64>, s, _| {
        v.push(s[k].gamma)
    });
    Ok(batches.into_iter().flat_map(|(v, _)| v).collect())
}

/// Outcome of comparing a closed form with its Monte-Carlo estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// The quantity does not exist for this instance (e.g. `T2` with one interferer).
    NotApplicable,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::NotApplicable => "N/A",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerificationRow {
    pub formula: String,
    pub closed_form: f64,
    pub estimate: f64,
    pub std_error: f64,
    pub z: f64,
    pub verdict: Verdict,
}

impl VerificationRow {
    fn compare(formula: &str, closed_form: f64, est: &EstimateWithError, z_threshold: f64) -> Self {
        let diff = closed_form - est.value;
        let (z, verdict) = if est.std_error > 0.0 {
            let z = diff / est.std_error;
            (z, if z.abs() <= z_threshold { Verdict::Pass } else { Verdict::Fail })
        } else {
            let scale = closed_form.abs().max(est.value.abs()).max(f64::MIN_POSITIVE);
            if diff.abs() <= 1e-12 * scale {
                (0.0, Verdict::Pass)
            } else {
                (diff.signum() * f64::INFINITY, Verdict::Fail)
            }
        };
        VerificationRow {
            formula: formula.to_string(),
            closed_form,
            estimate: est.value,
            std_error: est.std_error,
            z,
            verdict,
        }
    }

    fn not_applicable(formula: &str, closed_form: f64) -> Self {
        VerificationRow {
            formula: formula.to_string(),
            closed_form,
            estimate: f64::NAN,
            std_error: f64::NAN,
            z: f64::NAN,
            verdict: Verdict::NotApplicable,
        }
    }
}

/// Closed-form vs Monte-Carlo comparison for one user of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct VerificationReport {
    pub antennas: usize,
    pub elements: usize,
    pub users: usize,
    pub user: usize,
    pub n_trials: usize,
    pub seed: u64,
    pub z_threshold: f64,
    /// Forms the analytic pipeline uses by default.
    pub pipeline_forms: Forms,
    pub rows: Vec<VerificationRow>,
}

/// Row labels, in report order.
pub mod rows {
    pub const EX: &str = "E[X]";
    pub const EX2_PRINTED: &str = "E[X^2] printed";
    pub const EX2_CORRECTED: &str = "E[X^2] corrected";
    pub const EZ: &str = "E[Z]";
    pub const T1: &str = "E[T1]";
    pub const T2: &str = "E[T2]";
    pub const EZ2_PRINTED: &str = "E[Z^2] printed (A,B)";
    pub const EZ2_CORRECTED: &str = "E[Z^2] corrected (A,B)";
    pub const EZ2_TERMS: &str = "E[Z^2] from E[T1],E[T2]";
    pub const EY: &str = "E[Y]";
    pub const EY2: &str = "E[Y^2]";
    pub const EXZ_TYPESET: &str = "E[XZ] typeset (alpha_rk in sum)";
    pub const EXZ_PRINTED: &str = "E[XZ] printed C (alpha_rj)";
    pub const EXZ_CORRECTED: &str = "E[XZ] corrected C";
    pub const COV_PRINTED: &str = "Cov(X,Y) printed C";
    pub const COV_CORRECTED: &str = "Cov(X,Y) corrected C";
}

impl VerificationReport {
    pub fn row(&self, formula: &str) -> Option<&VerificationRow> {
        self.rows.iter().find(|r| r.formula == formula)
    }

    pub fn verdict(&self, formula: &str) -> Option<Verdict> {
        self.row(formula).map(|r| r.verdict)
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "instance M={} N={} K={} user={} trials={} seed={} z_threshold={}",
            self.antennas, self.elements, self.users, self.user, self.n_trials, self.seed, self.z_threshold
        );
        let _ = writeln!(s, "pipeline default: {}", forms_label(&self.pipeline_forms));
        let _ = writeln!(
            s,
            "{:<34} {:>17} {:>17} {:>12} {:>9}  verdict",
            "formula", "closed_form", "estimate", "std_error", "z"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<34} {:>17.10e} {:>17.10e} {:>12.4e} {:>9.2}  {}",
                r.formula, r.closed_form, r.estimate, r.std_error, r.z, r.verdict
            );
        }
        s
    }

    /// CSV header for [`Self::write_csv_rows`].
    pub const CSV_HEADER: &'static str = "M,N,K,user,trials,seed,formula,closed_form,estimate,std_error,z,verdict";

    pub fn write_csv_rows<W: io::Write>(&self, w: &mut W) -> io::Result<()> {
        for r in &self.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},\"{}\",{},{},{},{},{}",
                self.antennas,
                self.elements,
                self.users,
                self.user,
                self.n_trials,
                self.seed,
                r.formula,
                fmt_sig(r.closed_form),
                fmt_sig(r.estimate),
                fmt_sig(r.std_error),
                fmt_sig(r.z),
                r.verdict
            )?;
        }
        Ok(())
    }
}

/// `x2=..., z2=..., xz=...`.
pub fn forms_label(f: &Forms) -> String {
    format!("x2={} z2={} xz={}", f.x2, f.z2, f.xz)
}

/// Ten significant digits.
pub fn fmt_sig(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.9e}")
    } else {
        format!("{v}")
    }
}

/// Compares every closed form with a Monte-Carlo estimate for user `k`.
///
/// A row fails when `|closed_form - estimate| > z_threshold * SE`. The
/// printed and corrected forms of `E[X^2]`, `E[Z^2]` and `E[XZ]` are all
/// reported.
pub fn verify_closed_forms(
    config: &SystemConfig,
    gains: &LinkGains,
    k: usize,
    n_trials: usize,
    seed: u64,
    z_threshold: f64,
) -> Result<VerificationReport> {
    let est = estimate_moments(config, gains, k, n_trials, seed, PhasePolicy::Uniform)?;
    let links = UserLinks::new(config, gains, k);
    let s = config.power_scale();
    let noise = config.noise[k];
    let printed = MomentSet::closed_form(&links, s, noise, Forms::PRINTED);
    let corrected = MomentSet::closed_form(&links, s, noise, Forms::CORRECTED);
    let (m, n, lam, ark, asr, intf) = (
        links.antennas,
        links.elements,
        links.lambda,
        links.alpha_r,
        links.alpha_sr,
        &links.interferers[..],
    );

    let cmp = |name: &str, cf: f64, e: &EstimateWithError| VerificationRow::compare(name, cf, e, z_threshold);
    let mut out = vec![
        cmp(rows::EX, corrected.ex, &est.ex),
        cmp(rows::EX2_PRINTED, printed.ex2, &est.ex2),
        cmp(rows::EX2_CORRECTED, corrected.ex2, &est.ex2),
        cmp(rows::EZ, corrected.ez, &est.ez),
    ];
    let t1_cf = intf.first().map(|j| moments::expected_t1(m, n, asr, ark, j.alpha_r)).unwrap_or(0.0);
    out.push(match &est.t1 {
        Some(e) => cmp(rows::T1, t1_cf, e),
        None => VerificationRow::not_applicable(rows::T1, t1_cf),
    });
    let t2_cf = match intf {
        [j, h, ..] => moments::expected_t2(m, n, asr, ark, j.alpha_r, h.alpha_r),
        _ => 0.0,
    };
    out.push(match &est.t2 {
        Some(e) => cmp(rows::T2, t2_cf, e),
        None => VerificationRow::not_applicable(rows::T2, t2_cf),
    });
    out.extend([
        cmp(rows::EZ2_PRINTED, printed.ez2, &est.ez2),
        cmp(rows::EZ2_CORRECTED, corrected.ez2, &est.ez2),
        cmp(rows::EZ2_TERMS, s * s * moments::expected_z2_from_terms(m, n, asr, ark, intf), &est.ez2),
        cmp(rows::EY, corrected.ey, &est.ey),
        cmp(rows::EY2, corrected.ey2, &est.ey2),
        cmp(
            rows::EXZ_TYPESET,
            s * s * moments::expected_xz_as_typeset(m, n, lam, ark, asr, intf),
            &est.exz,
        ),
        cmp(rows::EXZ_PRINTED, printed.exz, &est.exz),
        cmp(rows::EXZ_CORRECTED, corrected.exz, &est.exz),
        cmp(rows::COV_PRINTED, printed.cov_xy, &est.cov_xy),
        cmp(rows::COV_CORRECTED, corrected.cov_xy, &est.cov_xy),
    ]);
    Ok(VerificationReport {
        antennas: m,
        elements: n,
        users: config.users,
        user: k,
        n_trials,
        seed,
        z_threshold,
        pipeline_forms: Forms::default(),
        rows: out,
    })
}

/// Variant the verification adjudicated for each expression: the printed
/// form when it passed, otherwise the corrected one.
pub fn adjudicated_forms(report: &VerificationReport) -> Forms {
    let pick = |printed: &str| match report.verdict(printed) {
        Some(Verdict::Pass) => Variant::Printed,
        _ => Variant::Corrected,
    };
    Forms {
        x2: pick(rows::EX2_PRINTED),
        z2: pick(rows::EZ2_PRINTED),
        xz: pick(rows::EXZ_PRINTED),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(m: usize, n: usize, k: usize) -> (SystemConfig, LinkGains) {
        (SystemConfig::new(m, n, k, 2.0, k as f64, 1.0).unwrap(), LinkGains::unit(k))
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::default();
        s.add(1e16);
        for _ in 0..1000 {
            s.add(1.0);
        }
        s.add(-1e16);
        assert_eq!(s.value(), 1000.0);
    }

    #[test]
    fn too_few_trials_is_config_error() {
        let (c, g) = unit(1, 1, 2);
        assert!(matches!(estimate_moments(&c, &g, 0, 999, 1, PhasePolicy::Uniform), Err(Error::Config(_))));
    }

    #[test]
    fn single_user_has_exactly_zero_interference() {
        let (c, g) = unit(2, 2, 1);
        let e = estimate_moments(&c, &g, 0, 5_000, 3, PhasePolicy::Uniform).unwrap();
        assert_eq!((e.ez.value, e.ez.std_error), (0.0, 0.0));
        assert_eq!((e.ez2.value, e.ez2.std_error), (0.0, 0.0));
        assert_eq!(e.cov_xy.value, 0.0);
        assert!(e.t1.is_none() && e.t2.is_none());
    }

    #[test]
    fn covariance_is_plug_in_of_moments() {
        let (c, g) = unit(2, 3, 3);
        let e = estimate_moments(&c, &g, 1, 20_000, 5, PhasePolicy::Uniform).unwrap();
        assert_eq!(e.cov_xy.value, e.exz.value - e.ex.value * e.ez.value);
    }

    #[test]
    fn estimates_are_deterministic_across_thread_counts() {
        let (c, g) = unit(2, 2, 3);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| estimate_moments(&c, &g, 0, 10_000, 77, PhasePolicy::Uniform).unwrap())
        };
        let a = run(1);
        assert_eq!(a, run(3));
        assert_eq!(a, run(8));
    }

    #[test]
    fn scalar_channel_moments_match_hand_values() {
        // M = N = 1, K = 2, unit gains, P/K = 1: E[X] = 4 lambda^2 = 2, E[Z] = 1.
        let (c, g) = unit(1, 1, 2);
        let e = estimate_moments(&c, &g, 0, 1_000_000, 11, PhasePolicy::Uniform).unwrap();
        assert!(((e.ex.value - 2.0) / e.ex.std_error).abs() < 4.0, "{:?}", e.ex);
        assert!(((e.ez.value - 1.0) / e.ez.std_error).abs() < 4.0, "{:?}", e.ez);
    }

    #[test]
    fn standard_error_halves_when_trials_quadruple() {
        let (c, g) = unit(3, 4, 3);
        let a = estimate_moments(&c, &g, 0, 100_000, 9, PhasePolicy::Uniform).unwrap();
        let b = estimate_moments(&c, &g, 0, 400_000, 10, PhasePolicy::Uniform).unwrap();
        for (x, y) in [(a.ex, b.ex), (a.ez, b.ez), (a.ey, b.ey)] {
            let ratio = x.std_error / y.std_error;
            assert!((1.6..=2.5).contains(&ratio), "SE ratio {ratio}");
        }
    }

    #[test]
    fn empirical_cdf_edges() {
        let (c, g) = unit(2, 2, 2);
        let samples = sample_sinr(&c, &g, 0, 5_000, 4, PhasePolicy::Uniform).unwrap();
        let lo = samples.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = samples.iter().copied().fold(0.0, f64::max);
        let cdf = empirical_outage(&c, &g, 0, &[lo * 0.5, hi * 2.0], 5_000, 4).unwrap();
        assert_eq!(cdf.probabilities, vec![0.0, 1.0]);
        let cdf = empirical_outage(&c, &g, 0, &[lo, hi], 5_000, 4).unwrap();
        assert_eq!(cdf.probabilities[0], 1.0 / 5_000.0);
        assert_eq!(cdf.probabilities[1], 1.0);
    }

    #[test]
    fn empirical_cdf_matches_sample_count() {
        let (c, g) = unit(2, 3, 3);
        let samples = sample_sinr(&c, &g, 2, 4_000, 8, PhasePolicy::Uniform).unwrap();
        let th = [0.05, 0.2, 0.5, 1.0, 3.0];
        let cdf = empirical_outage(&c, &g, 2, &th, 4_000, 8).unwrap();
        for (t, p) in th.iter().zip(&cdf.probabilities) {
            let count = samples.iter().filter(|s| *s <= t).count();
            assert_eq!(*p, count as f64 / 4_000.0);
        }
        assert!(cdf.probabilities.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn thresholds_are_validated() {
        let (c, g) = unit(1, 1, 2);
        assert!(empirical_outage(&c, &g, 0, &[2.0, 1.0], 1_000, 1).is_err());
        assert!(empirical_outage(&c, &g, 0, &[0.0, 1.0], 1_000, 1).is_err());
        assert!(empirical_outage(&c, &g, 0, &[], 1_000, 1).is_err());
    }

    #[test]
    fn verdict_on_zero_standard_error() {
        let e = EstimateWithError { value: 0.0, std_error: 0.0, n: 10 };
        assert_eq!(VerificationRow::compare("a", 0.0, &e, 4.0).verdict, Verdict::Pass);
        assert_eq!(VerificationRow::compare("a", 1.0, &e, 4.0).verdict, Verdict::Fail);
        let e = EstimateWithError { value: 10.0, std_error: 1.0, n: 10 };
        assert_eq!(VerificationRow::compare("a", 13.9, &e, 4.0).verdict, Verdict::Pass);
        assert_eq!(VerificationRow::compare("a", 14.1, &e, 4.0).verdict, Verdict::Fail);
    }

    #[test]
    fn report_lists_every_formula() {
        let (c, g) = unit(1, 1, 2);
        let r = verify_closed_forms(&c, &g, 0, 10_000, 1, 4.0).unwrap();
        assert_eq!(r.rows.len(), 16);
        assert_eq!(r.verdict(rows::T2), Some(Verdict::NotApplicable));
        let text = r.to_text();
        assert!(text.contains("E[XZ] printed C (alpha_rj)"));
        assert!(text.contains("pipeline default: x2=corrected z2=corrected xz=corrected"));
        let mut csv = Vec::new();
        r.write_csv_rows(&mut csv).unwrap();
        assert_eq!(String::from_utf8(csv).unwrap().lines().count(), 16);
    }
}
