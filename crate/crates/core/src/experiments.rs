//! The full analytic pipeline (moments, Log-Normal fits, ratio law, OP),
//! parameter sweeps with an optional Monte-Carlo overlay, and the search for
//! the IRS size that compensates for a worse IRS position.

use std::fmt::{self, Write as _};
use std::io;
use std::str::FromStr;

use rayon::prelude::*;

use crate::channel::PhasePolicy;
use crate::error::{Error, Result};
use crate::lognormal::{fit_lognormal, log_covariance, outage_probability, ratio_params, LogNormalParams};
use crate::model::{self, db_to_linear, dbm_to_watts, Geometry, LinkGains, Point, SquareLayout, SystemConfig};
use crate::moments::{Forms, MomentSet, UserLinks};
use crate::oracle::{empirical_outage_all, fmt_sig, forms_label};

/// Reference scenario: a source at the origin, the IRS at `(x_R, 5)` and
/// ten users dropped over a 50 m square whose near edge is 150 m away.
pub mod reference {
    pub const ANTENNAS: usize = 8;
    pub const ELEMENTS: usize = 50;
    pub const USERS: usize = 10;
    pub const PATHLOSS_EXPONENT: f64 = 2.0;
    pub const TX_POWER_DBM: f64 = 56.0;
    pub const NOISE_DBM: f64 = -96.0;
    pub const SOURCE: [f64; 2] = [0.0, 0.0];
    pub const IRS: [f64; 2] = [0.0, 5.0];
    pub const LAYOUT_SIDE: f64 = 50.0;
    pub const LAYOUT_DISTANCE: f64 = 150.0;
    pub const LAYOUT_SEED: u64 = 1;
    pub const FADING_SEED: u64 = 42;
}

/// The reference user square: side `L`, centered at `(D + L/2, 0)`.
pub fn reference_layout() -> SquareLayout {
    SquareLayout {
        side: reference::LAYOUT_SIDE,
        center: Point::new(reference::LAYOUT_DISTANCE + reference::LAYOUT_SIDE / 2.0, 0.0),
    }
}

/// A system configuration placed in a geometry, plus the moment forms the
/// analytic pipeline should use.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: SystemConfig,
    pub geometry: Geometry,
    pub forms: Forms,
}

impl Scenario {
    pub fn new(config: SystemConfig, geometry: Geometry) -> Result<Self> {
        if geometry.users.len() != config.users {
            return Err(Error::Config(format!(
                "geometry has {} users, configuration has {}",
                geometry.users.len(),
                config.users
            )));
        }
        Ok(Scenario {
            config,
            geometry,
            forms: Forms::default(),
        })
    }

    /// The reference scenario with users drawn from `layout_seed`.
    pub fn reference(layout_seed: u64) -> Self {
        use reference::*;
        let config = SystemConfig::new(
            ANTENNAS,
            ELEMENTS,
            USERS,
            PATHLOSS_EXPONENT,
            dbm_to_watts(TX_POWER_DBM),
            dbm_to_watts(NOISE_DBM),
        )
        .expect("reference configuration is valid");
        let users = reference_layout().sample(USERS, layout_seed);
        let geometry = Geometry::new(Point::new(SOURCE[0], SOURCE[1]), Point::new(IRS[0], IRS[1]), users);
        Scenario {
            config,
            geometry,
            forms: Forms::default(),
        }
    }

    pub fn gains(&self) -> Result<LinkGains> {
        model::link_gains(&self.geometry, &self.config)
    }

    /// IRS moved to `(x, y_R)`.
    pub fn with_irs_x(&self, x: f64) -> Self {
        let irs = Point::new(x, self.geometry.irs.y);
        Scenario {
            geometry: self.geometry.with_irs(irs),
            ..self.clone()
        }
    }

    pub fn with_elements(&self, elements: usize) -> Result<Self> {
        Ok(Scenario {
            config: self.config.with_elements(elements)?,
            ..self.clone()
        })
    }

    /// Index of the user closest to `p`.
    pub fn nearest_user(&self, p: Point) -> usize {
        self.geometry
            .users
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.distance(&p).total_cmp(&b.1.distance(&p)))
            .map(|(k, _)| k)
            .expect("scenario has at least one user")
    }
}

/// Every intermediate of the analytic pipeline for one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserAnalysis {
    pub moments: MomentSet,
    pub x: LogNormalParams,
    pub y: LogNormalParams,
    pub cov_ln: f64,
    pub gamma: LogNormalParams,
}

impl UserAnalysis {
    /// Outage probability at a linear threshold.
    pub fn outage(&self, threshold: f64) -> Result<f64> {
        outage_probability(&self.gamma, threshold)
    }
}

/// Moments, both Log-Normal fits, the log covariance and the SINR law of user `k`.
pub fn analyze_user(config: &SystemConfig, gains: &LinkGains, k: usize, forms: Forms) -> Result<UserAnalysis> {
    if k >= config.users {
        return Err(Error::Domain(format!("user {k} out of range for K={}", config.users)));
    }
    let links = UserLinks::new(config, gains, k);
    let moments = MomentSet::closed_form(&links, config.power_scale(), config.noise[k], forms);
    let x = fit_lognormal(moments.ex, moments.ex2)?;
    let y = fit_lognormal(moments.ey, moments.ey2)?;
    let cov_ln = log_covariance(moments.cov_xy, moments.ex, moments.ey)?;
    let gamma = ratio_params(&x, &y, cov_ln)?;
    Ok(UserAnalysis {
        moments,
        x,
        y,
        cov_ln,
        gamma,
    })
}

/// Analytic OP of user `k` at a linear threshold.
pub fn analytic_op(scenario: &Scenario, k: usize, threshold: f64) -> Result<f64> {
    let gains = scenario.gains()?;
    analyze_user(&scenario.config, &gains, k, scenario.forms)?.outage(threshold)
}

/// Largest analytic OP over all users at a linear threshold.
pub fn worst_user_op(scenario: &Scenario, threshold: f64) -> Result<f64> {
    let gains = scenario.gains()?;
    (0..scenario.config.users).try_fold(0.0f64, |acc, k| {
        Ok(acc.max(analyze_user(&scenario.config, &gains, k, scenario.forms)?.outage(threshold)?))
    })
}

/// The quantity varied by a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// IRS abscissa `x_R` in meters.
    IrsX,
    /// IRS size N.
    Elements,
    /// SINR threshold in dB.
    ThresholdDb,
}

impl SweepVariable {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVariable::IrsX => "irs_x",
            SweepVariable::Elements => "n_elements",
            SweepVariable::ThresholdDb => "threshold_db",
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepVariable {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "irs_x" => Ok(SweepVariable::IrsX),
            "n_elements" => Ok(SweepVariable::Elements),
            "threshold_db" => Ok(SweepVariable::ThresholdDb),
            other => Err(Error::Config(format!(
                "unknown sweep variable {other:?} (expected irs_x, n_elements or threshold_db)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub variable: SweepVariable,
    pub grid: Vec<f64>,
    pub template: Scenario,
    /// Thresholds evaluated at every grid point; ignored when the threshold
    /// itself is swept.
    pub thresholds_db: Vec<f64>,
    /// Users to report; all when `None`.
    pub users: Option<Vec<usize>>,
    /// Monte-Carlo trials per grid point; no overlay when `None`.
    pub mc_trials: Option<usize>,
    /// Fading seed, shared by every grid point.
    pub seed: u64,
}

fn strictly_increasing(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite()) && v.windows(2).all(|w| w[0] < w[1])
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("sweep grid is empty".into()));
        }
        if !strictly_increasing(&self.grid) {
            return Err(Error::Config("sweep grid must be finite and strictly increasing".into()));
        }
        if self.variable != SweepVariable::ThresholdDb {
            if self.thresholds_db.is_empty() {
                return Err(Error::Config("threshold list is empty".into()));
            }
            if !strictly_increasing(&self.thresholds_db) {
                return Err(Error::Config("thresholds must be finite and strictly increasing".into()));
            }
        }
        if let Some(users) = &self.users {
            if let Some(bad) = users.iter().find(|k| **k >= self.template.config.users) {
                return Err(Error::Config(format!(
                    "user {bad} out of range for K={}",
                    self.template.config.users
                )));
            }
        }
        for v in &self.grid {
            self.point(*v)?;
        }
        Ok(())
    }

    /// Scenario at grid value `v`.
    pub fn point(&self, v: f64) -> Result<Scenario> {
        match self.variable {
            SweepVariable::IrsX => Ok(self.template.with_irs_x(v)),
            SweepVariable::Elements => {
                if v < 1.0 || v.fract() != 0.0 {
                    return Err(Error::Config(format!("IRS size must be a positive integer, got {v}")));
                }
                self.template.with_elements(v as usize)
            }
            SweepVariable::ThresholdDb => Ok(self.template.clone()),
        }
    }

    fn users(&self) -> Vec<usize> {
        self.users.clone().unwrap_or_else(|| (0..self.template.config.users).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub threshold_db: f64,
    pub user: usize,
    pub analytic_op: Option<f64>,
    pub empirical_op: Option<f64>,
    pub empirical_se: Option<f64>,
    /// Why the analytic or empirical value is missing.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub variable: SweepVariable,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// True when at least one row carries an error.
    pub fn has_failures(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    pub const CSV_COLUMNS: &'static str = "variable,value,threshold_db,user,analytic_op,empirical_op,empirical_se,status";

    /// Writes `header` as `# ` comment lines, then the column line and one
    /// line per row.
    pub fn write_csv<W: io::Write>(&self, w: &mut W, header: &[String]) -> io::Result<()> {
        for line in header {
            writeln!(w, "# {line}")?;
        }
        writeln!(w, "{}", Self::CSV_COLUMNS)?;
        let opt = |v: Option<f64>| v.map(fmt_sig).unwrap_or_default();
        for r in &self.rows {
            let status = match &r.error {
                None => "ok".to_string(),
                Some(e) => format!("\"error: {}\"", e.replace('"', "'")),
            };
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                self.variable,
                fmt_sig(r.value),
                fmt_sig(r.threshold_db),
                r.user,
                opt(r.analytic_op),
                opt(r.empirical_op),
                opt(r.empirical_se),
                status
            )?;
        }
        Ok(())
    }
}

/// Analytic (and optionally empirical) OP of each selected user at each
/// threshold, for one scenario. `values[i]` labels the rows of threshold `i`.
fn evaluate_point(
    scenario: &Scenario,
    values: &[f64],
    thresholds_db: &[f64],
    users: &[usize],
    mc_trials: Option<usize>,
    seed: u64,
) -> Vec<SweepRow> {
    let thresholds: Vec<f64> = thresholds_db.iter().map(|t| db_to_linear(*t)).collect();
    let gains = scenario.gains();
    let empirical = match (&gains, mc_trials) {
        (Ok(g), Some(n)) => Some(
            empirical_outage_all(&scenario.config, g, &thresholds, n, seed, PhasePolicy::Uniform)
                .map_err(|e| e.to_string()),
        ),
        _ => None,
    };
    let mut rows = Vec::with_capacity(thresholds.len() * users.len());
    for (i, (&th, &th_db)) in thresholds.iter().zip(thresholds_db).enumerate() {
        for &k in users {
            let analysis = gains
                .as_ref()
                .map_err(|e| e.to_string())
                .and_then(|g| analyze_user(&scenario.config, g, k, scenario.forms).map_err(|e| e.to_string()));
            let mut error = None;
            let analytic_op = match analysis.and_then(|a| a.outage(th).map_err(|e| e.to_string())) {
                Ok(p) => Some(p),
                Err(e) => {
                    error = Some(e);
                    None
                }
            };
            let (empirical_op, empirical_se) = match &empirical {
                Some(Ok(cdfs)) => (Some(cdfs[k].probabilities[i]), Some(cdfs[k].std_errors[i])),
                Some(Err(e)) => {
                    error.get_or_insert_with(|| e.clone());
                    (None, None)
                }
                None => (None, None),
            };
            rows.push(SweepRow {
                value: values[i],
                threshold_db: th_db,
                user: k,
                analytic_op,
                empirical_op,
                empirical_se,
                error,
            });
        }
    }
    rows
}

/// Evaluates every grid point (in parallel) and returns rows in grid order,
/// then threshold order, then user order. Failures at a grid point are
/// recorded in its rows; only an invalid spec is an error.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let users = spec.users();
    let rows = if spec.variable == SweepVariable::ThresholdDb {
        evaluate_point(&spec.template, &spec.grid, &spec.grid, &users, spec.mc_trials, spec.seed)
    } else {
        let per_point: Vec<Vec<SweepRow>> = spec
            .grid
            .par_iter()
            .map(|&v| {
                let scenario = spec.point(v).expect("validated");
                let values = vec![v; spec.thresholds_db.len()];
                evaluate_point(&scenario, &values, &spec.thresholds_db, &users, spec.mc_trials, spec.seed)
            })
            .collect();
        per_point.into_iter().flatten().collect()
    };
    Ok(SweepResult {
        variable: spec.variable,
        rows,
    })
}

/// `key = value` lines describing a scenario, for CSV header blocks.
pub fn describe_scenario(s: &Scenario) -> Vec<String> {
    let c = &s.config;
    let g = &s.geometry;
    let list = |v: &[f64]| v.iter().map(|x| fmt_sig(*x)).collect::<Vec<_>>().join(" ");
    let mut out = vec![
        format!("antennas = {}", c.antennas),
        format!("elements = {}", c.elements),
        format!("users = {}", c.users),
        format!("pathloss_exponent = {}", fmt_sig(c.pathloss_exponent)),
        format!("tx_power_w = {}", fmt_sig(c.tx_power)),
        format!("noise_w = {}", list(&c.noise)),
        format!("power_alloc = {}", list(&c.power_alloc)),
        format!("reflection = {}", fmt_sig(c.reflection)),
        format!("moment_forms = {}", forms_label(&s.forms)),
        format!("source = {} {}", fmt_sig(g.source.x), fmt_sig(g.source.y)),
        format!("irs = {} {}", fmt_sig(g.irs.x), fmt_sig(g.irs.y)),
    ];
    let mut users = String::new();
    for (k, u) in g.users.iter().enumerate() {
        if k > 0 {
            users.push_str("; ");
        }
        let _ = write!(users, "{} {}", fmt_sig(u.x), fmt_sig(u.y));
    }
    out.push(format!("user_positions = {users}"));
    out
}

/// Smallest IRS size meeting an OP target, and the OP it achieves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Compensation {
    pub elements: usize,
    pub op: f64,
}

/// Number of IRS sizes sampled to check that OP decreases over the range.
pub const MONOTONICITY_SAMPLES: usize = 5;

/// Bisection over integer N in `[n_min, n_max]` for the smallest N with
/// analytic OP of user `k` at most `target`.
pub fn find_compensating_n(
    template: &Scenario,
    k: usize,
    threshold: f64,
    target: f64,
    n_min: usize,
    n_max: usize,
) -> Result<Compensation> {
    if !(target > 0.0 && target < 1.0) {
        return Err(Error::Domain(format!("target OP must lie in (0, 1), got {target}")));
    }
    if n_min == 0 || n_min > n_max {
        return Err(Error::Domain(format!("invalid IRS size range [{n_min}, {n_max}]")));
    }
    let gains = template.gains()?;
    let op = |n: usize| -> Result<f64> {
        let config = template.config.with_elements(n)?;
        analyze_user(&config, &gains, k, template.forms)?.outage(threshold)
    };

    let span = n_max - n_min;
    let mut samples: Vec<usize> = (0..MONOTONICITY_SAMPLES)
        .map(|i| n_min + span * i / (MONOTONICITY_SAMPLES - 1))
        .collect();
    samples.dedup();
    let ops = samples.iter().map(|n| op(*n)).collect::<Result<Vec<_>>>()?;
    for (w, o) in samples.windows(2).zip(ops.windows(2)) {
        if o[1] > o[0] {
            return Err(Error::NotMonotone {
                n_lo: w[0],
                op_lo: o[0],
                n_hi: w[1],
                op_hi: o[1],
            });
        }
    }
    let (op_min, op_max) = (ops[0], ops[ops.len() - 1]);
    if op_min <= target {
        return Ok(Compensation {
            elements: n_min,
            op: op_min,
        });
    }
    if op_max > target {
        return Err(Error::Unreachable {
            target,
            n_min,
            n_max,
            op_min,
            op_max,
        });
    }
    let (mut lo, mut hi, mut op_hi) = (n_min, n_max, op_max);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let v = op(mid)?;
        if v <= target {
            hi = mid;
            op_hi = v;
        } else {
            lo = mid;
        }
    }
    Ok(Compensation { elements: hi, op: op_hi })
}

/// Extra IRS elements needed at a moved IRS position to match the OP of a
/// reference position and size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompensationReport {
    pub user: usize,
    pub reference_x: f64,
    pub reference_elements: usize,
    pub reference_op: f64,
    pub moved_x: f64,
    pub moved_elements: usize,
    pub moved_op: f64,
    pub delta: i64,
}

/// OP of user `k` with the IRS at `reference_x` and `reference_n` elements,
/// then the smallest N in `[1, n_max]` reaching that OP at `moved_x`.
pub fn compensation_delta(
    template: &Scenario,
    k: usize,
    threshold: f64,
    reference_x: f64,
    reference_n: usize,
    moved_x: f64,
    n_max: usize,
) -> Result<CompensationReport> {
    let reference = template.with_irs_x(reference_x).with_elements(reference_n)?;
    let reference_op = analytic_op(&reference, k, threshold)?;
    let found = find_compensating_n(&template.with_irs_x(moved_x), k, threshold, reference_op, 1, n_max)?;
    Ok(CompensationReport {
        user: k,
        reference_x,
        reference_elements: reference_n,
        reference_op,
        moved_x,
        moved_elements: found.elements,
        moved_op: found.op,
        delta: found.elements as i64 - reference_n as i64,
    })
}
