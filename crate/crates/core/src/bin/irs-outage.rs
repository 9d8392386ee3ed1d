use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use irs_outage::config::{OneOrMany, RunConfig};
use irs_outage::experiments::{
    compensation_delta, describe_scenario, find_compensating_n, run_sweep, SweepResult, SweepSpec,
    SweepVariable,
};
use irs_outage::model::{db_to_linear, Geometry, LinkGains, Point, SystemConfig};
use irs_outage::moments::Forms;
use irs_outage::oracle::{fmt_sig, forms_label, verify_closed_forms, Verdict, VerificationReport};
use irs_outage::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_INFEASIBLE: u8 = 3;

/// Outage probability of IRS-assisted multi-user MISO downlinks.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Output file; stdout when omitted.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic (and optionally Monte-Carlo) OP of one scenario.
    Op {
        #[command(flatten)]
        overrides: Overrides,
        /// SINR thresholds in dB.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true, default_value = "0")]
        threshold_db: Vec<f64>,
        /// Users to report; all when omitted.
        #[arg(long, value_delimiter = ',')]
        user: Option<Vec<usize>>,
    },
    /// Sweep IRS position, IRS size or threshold.
    Sweep {
        #[command(flatten)]
        overrides: Overrides,
        /// irs_x, n_elements or threshold_db.
        #[arg(long)]
        variable: Option<String>,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        grid: Option<Vec<f64>>,
        /// Thresholds in dB evaluated at every grid point.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        thresholds_db: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        user: Option<Vec<usize>>,
    },
    /// Compare every closed-form moment with a Monte-Carlo estimate.
    ///
    /// Without --scenario, runs unit-pathloss instances with P/K = 1 and unit
    /// noise over (M, N, K) in {1,2,3} x {1,2,4} x {2,3}.
    Verify {
        #[command(flatten)]
        overrides: Overrides,
        /// One instance as M,N,K; repeatable.
        #[arg(long, value_parser = parse_instance)]
        instance: Vec<(usize, usize, usize)>,
        /// Verify the configured scenario (geometry and powers) instead.
        #[arg(long)]
        scenario: bool,
        /// User to verify.
        #[arg(long, default_value_t = 0)]
        user: usize,
        /// Fail when |closed form - estimate| exceeds this many standard errors.
        #[arg(long)]
        z_threshold: Option<f64>,
    },
    /// Smallest IRS size at a moved IRS position that matches the OP of a
    /// reference position and size.
    Compensate {
        #[command(flatten)]
        overrides: Overrides,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        threshold_db: f64,
        /// User whose OP is matched; the one nearest the users' centroid when omitted.
        #[arg(long)]
        user: Option<usize>,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        reference_x: f64,
        /// Reference IRS size; the configured size when omitted.
        #[arg(long)]
        reference_n: Option<usize>,
        #[arg(long, default_value_t = 75.0, allow_negative_numbers = true)]
        moved_x: f64,
        /// Search OP target directly instead of matching the reference.
        #[arg(long)]
        target: Option<f64>,
        #[arg(long, default_value_t = 1)]
        n_min: usize,
        #[arg(long, default_value_t = 1000)]
        n_max: usize,
    },
}

/// Flags that override configuration-file fields.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// BS antennas M
    #[arg(long)]
    antennas: Option<usize>,
    /// IRS elements N
    #[arg(long)]
    elements: Option<usize>,
    /// Users K
    #[arg(long)]
    users: Option<usize>,
    /// Pathloss exponent
    #[arg(long)]
    pathloss_exponent: Option<f64>,
    /// Transmit power in dBm
    #[arg(long, allow_negative_numbers = true)]
    tx_power_dbm: Option<f64>,
    /// Noise power in dBm, shared by all users
    #[arg(long, allow_negative_numbers = true)]
    noise_dbm: Option<f64>,
    /// IRS abscissa in meters.
    #[arg(long, allow_negative_numbers = true)]
    irs_x: Option<f64>,
    /// Seed of the random user layout
    #[arg(long)]
    layout_seed: Option<u64>,
    /// "printed" or "corrected".
    #[arg(long)]
    moment_forms: Option<String>,
    /// Monte-Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Fading seed.
    #[arg(long)]
    seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) {
        let s = &mut c.system;
        s.antennas = self.antennas.or(s.antennas);
        s.elements = self.elements.or(s.elements);
        s.users = self.users.or(s.users);
        s.pathloss_exponent = self.pathloss_exponent.or(s.pathloss_exponent);
        s.tx_power_dbm = self.tx_power_dbm.or(s.tx_power_dbm);
        if let Some(n) = self.noise_dbm {
            s.noise_dbm = Some(OneOrMany::One(n));
        }
        if self.moment_forms.is_some() {
            s.moment_forms = self.moment_forms.clone();
            s.x2_form = None;
            s.z2_form = None;
            s.xz_form = None;
        }
        if let Some(x) = self.irs_x {
            let y = c.geometry.irs.map_or(irs_outage::experiments::reference::IRS[1], |p| p[1]);
            c.geometry.irs = Some([x, y]);
        }
        c.geometry.layout_seed = self.layout_seed.or(c.geometry.layout_seed);
        c.mc.trials = self.trials.or(c.mc.trials);
        c.mc.seed = self.seed.or(c.mc.seed);
    }
}

fn parse_instance(s: &str) -> Result<(usize, usize, usize), String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [m, n, k] => Ok((m, n, k)),
        _ => Err(format!("expected M,N,K, got {s:?}")),
    }
}

/// Error with the exit code it maps to.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Config(_) | Error::Domain(_) => EXIT_CONFIG,
            _ => EXIT_INFEASIBLE,
        };
        Failure { code, error: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

fn load_config(path: &Option<PathBuf>, overrides: &Overrides) -> Result<RunConfig, Failure> {
    let mut c = match path {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    overrides.apply(&mut c);
    Ok(c)
}

fn open_output(path: &Option<PathBuf>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_sweep(
    cli_output: &Option<PathBuf>,
    command: &str,
    config: &RunConfig,
    spec: &SweepSpec,
    result: &SweepResult,
) -> Result<(), Failure> {
    let mut header = vec![format!("irs-outage {command}"), format!("variable = {}", spec.variable)];
    if spec.variable != SweepVariable::ThresholdDb {
        header.push(format!("thresholds_db = {}", join(&spec.thresholds_db)));
    }
    header.push(format!("grid = {}", join(&spec.grid)));
    header.extend(describe_scenario(&spec.template));
    header.extend(config.describe_run());
    let mut out = open_output(cli_output)?;
    result.write_csv(&mut out, &header).context("writing CSV")?;
    out.flush().context("writing CSV")?;
    if result.has_failures() {
        eprintln!("warning: infeasible at one or more grid points; see the status column");
        return Err(Failure {
            code: EXIT_INFEASIBLE,
            error: anyhow::anyhow!("partial results written"),
        });
    }
    Ok(())
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_sig(*x)).collect::<Vec<_>>().join(" ")
}

fn run(cli: Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Op {
            overrides,
            threshold_db,
            user,
        } => {
            let config = load_config(&cli.config, overrides)?;
            let mut thresholds = threshold_db.clone();
            thresholds.sort_by(f64::total_cmp);
            thresholds.dedup();
            let spec = SweepSpec {
                variable: SweepVariable::ThresholdDb,
                grid: thresholds,
                template: config.scenario()?,
                thresholds_db: Vec::new(),
                users: user.clone(),
                mc_trials: config.mc.trials,
                seed: config.fading_seed(),
            };
            let result = run_sweep(&spec)?;
            write_sweep(&cli.output, "op", &config, &spec, &result)
        }
        Command::Sweep {
            overrides,
            variable,
            grid,
            thresholds_db,
            user,
        } => {
            let mut config = load_config(&cli.config, overrides)?;
            let w = &mut config.sweep;
            w.variable = variable.clone().or(w.variable.take());
            w.grid = grid.clone().or(w.grid.take());
            w.thresholds_db = thresholds_db.clone().or(w.thresholds_db.take());
            w.users = user.clone().or(w.users.take());
            let spec = config.sweep_spec()?;
            let result = run_sweep(&spec)?;
            write_sweep(&cli.output, "sweep", &config, &spec, &result)
        }
        Command::Verify {
            overrides,
            instance,
            scenario,
            user,
            z_threshold,
        } => {
            let config = load_config(&cli.config, overrides)?;
            let z = z_threshold.unwrap_or(config.z_threshold());
            let trials = config.mc.trials.unwrap_or(10_000_000);
            let seed = config.fading_seed();
            let mut reports = Vec::new();
            if *scenario {
                let s = config.scenario()?;
                reports.push(verify_closed_forms(&s.config, &s.gains()?, *user, trials, seed, z)?);
            } else {
                let instances = if instance.is_empty() {
                    default_instances()
                } else {
                    instance.clone()
                };
                for (m, n, k) in instances {
                    let c = SystemConfig::new(m, n, k, 2.0, k as f64, 1.0)?;
                    if *user >= k {
                        return Err(Error::Config(format!("user {user} out of range for K={k}")).into());
                    }
                    reports.push(verify_closed_forms(&c, &LinkGains::unit(k), *user, trials, seed, z)?);
                }
            }
            write_verification(&cli.output, &reports, trials, seed, z)
        }
        Command::Compensate {
            overrides,
            threshold_db,
            user,
            reference_x,
            reference_n,
            moved_x,
            target,
            n_min,
            n_max,
        } => {
            let config = load_config(&cli.config, overrides)?;
            let s = config.scenario()?;
            let k = user.unwrap_or_else(|| s.nearest_user(centroid(&s.geometry)));
            if k >= s.config.users {
                return Err(Error::Config(format!("user {k} out of range for K={}", s.config.users)).into());
            }
            let th = db_to_linear(*threshold_db);
            let mut header = vec!["irs-outage compensate".to_string(), format!("threshold_db = {}", fmt_sig(*threshold_db))];
            header.extend(describe_scenario(&s));
            header.push(format!("layout_seed = {}", config.layout_seed()));
            let (columns, row) = match target {
                Some(t) => {
                    let moved = s.with_irs_x(*moved_x);
                    let c = find_compensating_n(&moved, k, th, *t, *n_min, *n_max)?;
                    (
                        "user,moved_x,target_op,moved_elements,moved_op",
                        format!("{k},{},{},{},{}", fmt_sig(*moved_x), fmt_sig(*t), c.elements, fmt_sig(c.op)),
                    )
                }
                None => {
                    let r = compensation_delta(&s, k, th, *reference_x, reference_n.unwrap_or(s.config.elements), *moved_x, *n_max)?;
                    (
                        "user,reference_x,reference_elements,reference_op,moved_x,moved_elements,moved_op,delta",
                        format!(
                            "{},{},{},{},{},{},{},{}",
                            r.user,
                            fmt_sig(r.reference_x),
                            r.reference_elements,
                            fmt_sig(r.reference_op),
                            fmt_sig(r.moved_x),
                            r.moved_elements,
                            fmt_sig(r.moved_op),
                            r.delta
                        ),
                    )
                }
            };
            let mut out = open_output(&cli.output)?;
            for line in header {
                writeln!(out, "# {line}").context("writing CSV")?;
            }
            writeln!(out, "{columns}\n{row}").context("writing CSV")?;
            out.flush().context("writing CSV")?;
            Ok(())
        }
    }
}

fn default_instances() -> Vec<(usize, usize, usize)> {
    let mut v = Vec::new();
    for m in [1, 2, 3] {
        for n in [1, 2, 4] {
            for k in [2, 3] {
                v.push((m, n, k));
            }
        }
    }
    v
}

fn centroid(g: &Geometry) -> Point {
    let n = g.users.len() as f64;
    let (x, y) = g.users.iter().fold((0.0, 0.0), |(x, y), p| (x + p.x, y + p.y));
    Point::new(x / n, y / n)
}

/// Text reports go to stdout; the CSV table goes to `--output` when given.
fn write_verification(
    output: &Option<PathBuf>,
    reports: &[VerificationReport],
    trials: usize,
    seed: u64,
    z: f64,
) -> Result<(), Failure> {
    let mut stdout = io::stdout().lock();
    for r in reports {
        writeln!(stdout, "{}", r.to_text()).context("writing report")?;
    }
    let failed: usize = reports
        .iter()
        .map(|r| r.rows.iter().filter(|row| row.verdict == Verdict::Fail).count())
        .sum();
    writeln!(stdout, "{failed} formula checks failed").context("writing report")?;
    if let Some(path) = output {
        let mut f = BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?);
        let io_err = |e: io::Error| Failure::from(anyhow::Error::from(e));
        writeln!(f, "# irs-outage verify").map_err(io_err)?;
        writeln!(f, "# trials = {trials}").map_err(io_err)?;
        writeln!(f, "# seed = {seed}").map_err(io_err)?;
        writeln!(f, "# z_threshold = {}", fmt_sig(z)).map_err(io_err)?;
        writeln!(f, "# pipeline_default = {}", forms_label(&Forms::default())).map_err(io_err)?;
        writeln!(f, "{}", VerificationReport::CSV_HEADER).map_err(io_err)?;
        for r in reports {
            r.write_csv_rows(&mut f).map_err(io_err)?;
        }
        f.flush().map_err(io_err)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(w) = cli.workers {
        if w == 0 {
            eprintln!("error: --workers must be positive");
            return ExitCode::from(EXIT_CONFIG);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(w).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
