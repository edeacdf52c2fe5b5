//! Subcommands of the `nonloc` binary.
//!
//! Each `cmd_*` function returns its output instead of printing it, so the
//! same code backs the binary and the integration tests. Verdicts are data:
//! only operational failures produce errors.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nonloc_core::random::random_density_matrix;
use nonloc_core::{
    certify_bilocal, certify_gme_bipartite, embed_channel, verify_lifting_identity, BilocalStatus, CertReport,
    DensityMatrix, Family, GmeStatus, IdentityConfig, KPartition, NoiseParameter, SubsystemShape, ThresholdRecord,
};

pub const TOOL_VERSION: &str = concat!("nonloc ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Parser)]
#[command(
    name = "nonloc",
    version,
    about = "Lift local seed states into GME states with bilocal models and certify them"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a lifted state and write it as JSON.
    Construct(ConstructArgs),
    /// Certify GME and bilocality; prints a JSON report.
    Certify(CertifyArgs),
    /// Print the entanglement and locality thresholds as CSV.
    Thresholds(ThresholdArgs),
    /// Scan p and print GME / bilocal verdicts as CSV.
    Sweep(SweepArgs),
    /// Check the locality-transfer identity on random measurements.
    VerifyIdentity(VerifyArgs),
}

fn unit_interval(s: &str) -> std::result::Result<f64, String> {
    let p: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(0.0..=1.0).contains(&p) {
        return Err(format!("{p} is outside [0, 1]"));
    }
    Ok(p)
}

fn positive_step(s: &str) -> std::result::Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("step must be positive, got {v}"));
    }
    Ok(v)
}

#[derive(Debug, Clone, Args)]
pub struct FamilyArgs {
    /// iso-ghz or werner-lift
    #[arg(long)]
    pub family: Family,
    /// Number of parties.
    #[arg(long)]
    pub n: usize,
    /// Size of the first group.
    #[arg(long)]
    pub l: usize,
    /// Local dimension.
    #[arg(long)]
    pub d: usize,
}

#[derive(Debug, Clone, Args)]
pub struct TrialArgs {
    #[arg(long, default_value_t = nonloc_core::locality::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Outcomes per random POVM.
    #[arg(long, default_value_t = nonloc_core::locality::DEFAULT_OUTCOMES)]
    pub outcomes: usize,
}

impl TrialArgs {
    fn config(&self) -> IdentityConfig {
        IdentityConfig {
            trials: self.trials,
            outcomes: self.outcomes,
            rng_seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_parser = unit_interval)]
    pub p: f64,
    #[arg(short = 'o', long = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct CertifyArgs {
    /// Certify a state file instead of a family (GME only).
    #[arg(long, conflicts_with_all = ["family", "n", "l", "d", "p"])]
    pub state: Option<PathBuf>,
    #[arg(long, required_unless_present = "state")]
    pub family: Option<Family>,
    #[arg(long, required_unless_present = "state")]
    pub n: Option<usize>,
    #[arg(long, required_unless_present = "state")]
    pub l: Option<usize>,
    #[arg(long, required_unless_present = "state")]
    pub d: Option<usize>,
    #[arg(long, value_parser = unit_interval, required_unless_present = "state")]
    pub p: Option<f64>,
    /// Bipartition such as `12|34`; defaults to the family's cut.
    #[arg(long)]
    pub partition: Option<KPartition>,
    #[command(flatten)]
    pub trials: TrialArgs,
    /// Include wall_time_ms in the report.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[arg(long, default_value_t = 10)]
    pub d_max: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub family: FamilyArgs,
    #[arg(long, value_parser = unit_interval, default_value_t = 0.0)]
    pub p_min: f64,
    #[arg(long, value_parser = unit_interval, default_value_t = 1.0)]
    pub p_max: f64,
    #[arg(long, value_parser = positive_step, default_value_t = 0.01)]
    pub step: f64,
    #[command(flatten)]
    pub trials: TrialArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// Number of seed parties (groups).
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub d: usize,
    /// Size of the first group when k = 2.
    #[arg(long)]
    pub l: Option<usize>,
    /// Seed family when k = 2; for k >= 3 the seed is a random state.
    #[arg(long)]
    pub family: Option<Family>,
    #[arg(long, value_parser = unit_interval)]
    pub p: Option<f64>,
    /// Comma-separated group sizes for k >= 3, e.g. `2,1,2`.
    #[arg(long, value_delimiter = ',')]
    pub groups: Option<Vec<usize>>,
    #[command(flatten)]
    pub trials: TrialArgs,
}

/// Fixed six decimals with trailing zeros removed: `0.25`, `0.083333`.
pub fn fmt6(x: f64) -> String {
    let s = format!("{x:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    match s {
        "-0" | "" => "0".to_string(),
        other => other.to_string(),
    }
}

fn noise(p: f64) -> Result<NoiseParameter> {
    Ok(NoiseParameter::new(p)?)
}

/// Summary printed after writing the state.
pub fn cmd_construct(args: &ConstructArgs) -> Result<String> {
    let FamilyArgs { family, n, l, d } = args.family;
    let state = family.lifted(n, l, d, noise(args.p)?)?;
    let text = serde_json::to_string(&state)?;
    std::fs::write(&args.out, text + "\n").with_context(|| format!("writing {}", args.out.display()))?;
    Ok(format!(
        "family: {family}\ndims: {:?}\ntrace: {}\nmin_eigenvalue: {}\nwritten: {}\n",
        state.shape().dims(),
        fmt6(state.trace()),
        fmt6(state.min_eigenvalue()?),
        args.out.display()
    ))
}

fn read_state(path: &PathBuf) -> Result<DensityMatrix> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("malformed state file {}", path.display()))
}

pub fn cmd_certify(args: &CertifyArgs) -> Result<CertReport> {
    let start = Instant::now();
    let cfg = args.trials.config();
    let mut report = if let Some(path) = &args.state {
        let state = read_state(path)?;
        let Some(partition) = args.partition.clone() else {
            bail!("--partition is required with --state");
        };
        let verdict = certify_gme_bipartite(&state, &partition)?;
        CertReport {
            tool_version: TOOL_VERSION.into(),
            request: json!({
                "command": "certify",
                "state": path.display().to_string(),
                "dims": state.shape().dims(),
                "partition": partition.to_string(),
                "trials": cfg.trials,
                "seed": cfg.rng_seed,
                "outcomes": cfg.outcomes,
            }),
            threshold_record: ThresholdRecord::for_dim(state.shape().dims()[0])?,
            identity_report: None,
            bilocal: None,
            gme_verdict: Some(verdict),
            wall_time_ms: None,
        }
    } else {
        let (Some(family), Some(n), Some(l), Some(d), Some(p)) = (args.family, args.n, args.l, args.d, args.p) else {
            bail!("--family, --n, --l, --d and --p are required without --state");
        };
        let p = noise(p)?;
        let partition = match &args.partition {
            Some(part) => part.clone(),
            None => KPartition::cut(n, l)?,
        };
        let state = family.lifted(n, l, d, p)?;
        let verdict = certify_gme_bipartite(&state, &partition)?;
        let bilocal = certify_bilocal(family, n, l, d, p, &cfg)?;
        CertReport {
            tool_version: TOOL_VERSION.into(),
            request: json!({
                "command": "certify",
                "family": family,
                "n": n,
                "l": l,
                "d": d,
                "p": p.value(),
                "partition": partition.to_string(),
                "trials": cfg.trials,
                "seed": cfg.rng_seed,
                "outcomes": cfg.outcomes,
            }),
            threshold_record: bilocal.thresholds,
            identity_report: Some(bilocal.identity.clone()),
            bilocal: Some(bilocal),
            gme_verdict: Some(verdict),
            wall_time_ms: None,
        }
    };
    if args.timing {
        report.wall_time_ms = Some(start.elapsed().as_millis() as u64);
    }
    Ok(report)
}

pub fn cmd_thresholds(args: &ThresholdArgs) -> Result<String> {
    if args.d_max < 2 {
        bail!(nonloc_core::Error::InvalidParameter(format!(
            "d_max must be at least 2, got {}",
            args.d_max
        )));
    }
    let mut out = String::from("d,p_entangled,p_local,gap\n");
    for d in 2..=args.d_max {
        let r = ThresholdRecord::for_dim(d)?;
        writeln!(out, "{d},{},{},{}", fmt6(r.p_entangled), fmt6(r.p_local), fmt6(r.gap()))?;
    }
    Ok(out)
}

/// Grid `p_min, p_min + step, …` up to `p_max`; empty when `p_max < p_min`.
pub fn sweep_grid(p_min: f64, p_max: f64, step: f64) -> Vec<f64> {
    if p_max < p_min {
        return Vec::new();
    }
    let count = ((p_max - p_min) / step + 1e-9).floor() as usize + 1;
    (0..count).map(|i| (p_min + i as f64 * step).min(p_max)).collect()
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<String> {
    let FamilyArgs { family, n, l, d } = args.family;
    let partition = KPartition::cut(n, l)?;
    let cfg = args.trials.config();
    let mut out = String::from("p,gme_status,bilocal_status,min_pt_eigenvalue\n");
    for p in sweep_grid(args.p_min, args.p_max, args.step) {
        let p = noise(p)?;
        let verdict = certify_gme_bipartite(&family.lifted(n, l, d, p)?, &partition)?;
        let bilocal = certify_bilocal(family, n, l, d, p, &cfg)?;
        writeln!(
            out,
            "{},{},{},{}",
            fmt6(p.value()),
            gme_label(verdict.status),
            bilocal_label(bilocal.status),
            fmt6(verdict.evidence[0].min_pt_eigenvalue)
        )?;
    }
    Ok(out)
}

pub fn gme_label(status: GmeStatus) -> &'static str {
    match status {
        GmeStatus::Gme => "GME",
        GmeStatus::NotGmeDetected => "NOT-GME-DETECTED",
        GmeStatus::ConditionalGme => "CONDITIONAL-GME",
    }
}

pub fn bilocal_label(status: BilocalStatus) -> &'static str {
    match status {
        BilocalStatus::Certified => "BILOCAL-CERTIFIED",
        BilocalStatus::NotCertified => "NOT-CERTIFIED",
    }
}

/// Splits `n` parties into `k` contiguous groups, larger groups first.
pub fn even_groups(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|i| n / k + usize::from(i < n % k)).collect()
}

pub fn cmd_verify_identity(args: &VerifyArgs) -> Result<CertReport> {
    let cfg = args.trials.config();
    let (n, d, k) = (args.n, args.d, args.k);
    if k < 2 {
        bail!(nonloc_core::Error::InvalidParameter(format!(
            "k must be at least 2, got {k}"
        )));
    }
    let (seed, sizes, request) = if k == 2 {
        let (Some(family), Some(p)) = (args.family, args.p) else {
            bail!(nonloc_core::Error::InvalidParameter(
                "--family and --p are required when k = 2".into()
            ));
        };
        let l = args.l.unwrap_or(n / 2);
        if l == 0 || l >= n {
            bail!(nonloc_core::Error::InvalidParameter(format!(
                "need 1 <= L <= N-1, got N = {n}, L = {l}"
            )));
        }
        let request = json!({
            "command": "verify-identity",
            "k": k, "n": n, "l": l, "d": d,
            "family": family, "p": p,
            "trials": cfg.trials, "seed": cfg.rng_seed, "outcomes": cfg.outcomes,
        });
        (family.seed(d, noise(p)?)?, vec![l, n - l], request)
    } else {
        let sizes = args.groups.clone().unwrap_or_else(|| even_groups(n, k));
        if sizes.len() != k || sizes.iter().sum::<usize>() != n || sizes.contains(&0) {
            bail!(nonloc_core::Error::InvalidParameter(format!(
                "groups {sizes:?} must be {k} positive sizes summing to {n}"
            )));
        }
        let request = json!({
            "command": "verify-identity",
            "k": k, "n": n, "d": d,
            "groups": sizes,
            "seed_state": "random",
            "trials": cfg.trials, "seed": cfg.rng_seed, "outcomes": cfg.outcomes,
        });
        let shape = SubsystemShape::uniform(k, d)?;
        (random_density_matrix(&shape, cfg.rng_seed)?, sizes, request)
    };
    let chans = sizes
        .iter()
        .map(|&m| embed_channel(m, d))
        .collect::<nonloc_core::Result<Vec<_>>>()?;
    let identity = verify_lifting_identity(&seed, &chans, None, &cfg)?;
    Ok(CertReport {
        tool_version: TOOL_VERSION.into(),
        request,
        threshold_record: ThresholdRecord::for_dim(d)?,
        identity_report: Some(identity),
        bilocal: None,
        gme_verdict: None,
        wall_time_ms: None,
    })
}

pub fn report_json(report: &CertReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

/// Runs one subcommand and returns what goes to stdout.
pub fn run(cli: &Cli) -> Result<String> {
    match &cli.command {
        Command::Construct(a) => cmd_construct(a),
        Command::Certify(a) => report_json(&cmd_certify(a)?),
        Command::Thresholds(a) => cmd_thresholds(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::VerifyIdentity(a) => report_json(&cmd_verify_identity(a)?),
    }
}

/// Exit code for an error: 2 for bad parameters, 1 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    use nonloc_core::Error as E;
    match err.downcast_ref::<E>() {
        Some(E::InvalidParameter(_) | E::InvalidPartition(_) | E::SizeCapExceeded { .. }) => 2,
        _ => 1,
    }
}
