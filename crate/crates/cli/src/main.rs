use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use globalcoupling::coupling::sweep_bifurcation;
use globalcoupling::ground_state::ode_residual;
use globalcoupling::report::{round_sig, SIGNIFICANT_DIGITS};
use globalcoupling::verification::{CONSISTENCY_TOL, CertificationReport};
use globalcoupling::{
    certify, classify_existence, generalized_consistency, radial_integral, reconstruct_solution,
    shoot_ground_state, Error, Exponent, ProblemParams, RadialProfile, ShootConfig,
};
use serde_json::{json, Value};

const EXIT_USAGE: u8 = 2;
const EXIT_NONEXISTENCE: u8 = 3;
const EXIT_NUMERICAL: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "globalcoupling", version, about = "Ground states and globally coupled solutions of ΔA − A + Aᵖ − kA∫A² = 0")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Shoot the ground state, optionally write its profile, print a summary.
    GroundState(Common),
    /// Classify existence and multiplicity at one coupling strength.
    Classify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: f64,
    },
    /// Solve the consistency equation for ω.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: f64,
        /// Exponent r of the coupling integral ∫Aʳ.
        #[arg(long, default_value_t = 2.0)]
        r_exp: f64,
    },
    /// Tabulate solution counts over a range of couplings.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// lo:hi:count
        #[arg(long)]
        k_range: KRange,
        #[arg(long, value_enum, default_value_t = Spacing::Linear)]
        spacing: Spacing,
    },
    /// Reconstruct every solution branch and certify it.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        k: f64,
        /// Nonlocal residual threshold, relative to A(0).
        #[arg(long, default_value_t = 1e-5)]
        residual_tol: f64,
        #[arg(long, default_value_t = 1e-4)]
        identity_tol: f64,
        #[arg(long, default_value_t = CONSISTENCY_TOL)]
        consistency_tol: f64,
    },
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Spatial dimension.
    #[arg(long)]
    n: u32,
    /// Nonlinearity exponent: integer, decimal or num/den.
    #[arg(long, value_parser = parse_exponent)]
    p: Exponent,
    #[arg(long, value_enum)]
    format: Option<Format>,
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = ShootConfig::default().r_max)]
    r_max: f64,
    #[arg(long, default_value_t = ShootConfig::default().step)]
    step: f64,
    #[arg(long, default_value_t = ShootConfig::default().amp_tol)]
    amp_tol: f64,
    #[arg(long, default_value_t = ShootConfig::default().max_bisect)]
    max_bisect: usize,
}

impl Common {
    fn shoot_config(&self) -> ShootConfig {
        ShootConfig {
            r_max: self.r_max,
            step: self.step,
            amp_tol: self.amp_tol,
            max_bisect: self.max_bisect,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    StructuredText,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy)]
struct KRange {
    lo: f64,
    hi: f64,
    count: usize,
}

impl FromStr for KRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, count] = parts[..] else {
            return Err("expected lo:hi:count".into());
        };
        let lo: f64 = lo.parse().map_err(|e| format!("bad lower bound: {e}"))?;
        let hi: f64 = hi.parse().map_err(|e| format!("bad upper bound: {e}"))?;
        let count: usize = count.parse().map_err(|e| format!("bad count: {e}"))?;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return Err("range needs 0 < lo < hi".into());
        }
        if count < 2 {
            return Err("range needs at least 2 points".into());
        }
        Ok(Self { lo, hi, count })
    }
}

impl KRange {
    fn values(&self, spacing: Spacing) -> Vec<f64> {
        let m = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / m;
                match spacing {
                    Spacing::Linear => self.lo + t * (self.hi - self.lo),
                    Spacing::Log => (self.lo.ln() + t * (self.hi / self.lo).ln()).exp(),
                }
            })
            .collect()
    }
}

fn parse_exponent(s: &str) -> Result<Exponent, String> {
    s.parse::<Exponent>().map_err(|e| e.to_string())
}

/// Failure carrying its exit status.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_nonexistence() {
            EXIT_NONEXISTENCE
        } else if matches!(e, Error::InvalidParameter(_)) {
            EXIT_USAGE
        } else {
            EXIT_NUMERICAL
        };
        Self { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Self { code: EXIT_NUMERICAL, message: format!("i/o: {e}") }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

fn sig(x: f64) -> String {
    round_sig(x, SIGNIFICANT_DIGITS).to_string()
}

fn sink(path: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

/// Emit flat JSON objects either as JSON lines or as a CSV table keyed on the
/// first object's fields. Arrays become `;`-separated cells.
fn emit(out: &mut dyn Write, format: Format, records: &[Value]) -> io::Result<()> {
    match format {
        Format::StructuredText => {
            for r in records {
                writeln!(out, "{}", serde_json::to_string(r).expect("json value"))?;
            }
        }
        Format::Csv => {
            let Some(first) = records.first().and_then(Value::as_object) else {
                return Ok(());
            };
            let keys: Vec<&String> = first.keys().collect();
            writeln!(out, "{}", keys.iter().map(|k| k.as_str()).collect::<Vec<_>>().join(","))?;
            for r in records {
                let row: Vec<String> = keys.iter().map(|k| csv_cell(r.get(k.as_str()))).collect();
                writeln!(out, "{}", row.join(","))?;
            }
        }
    }
    Ok(())
}

fn csv_cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(Value::Array(xs)) => xs.iter().map(|x| csv_cell(Some(x))).collect::<Vec<_>>().join(";"),
        Some(other) => other.to_string(),
    }
}

fn ground_state(common: &Common) -> Result<(RadialProfile, f64), Failure> {
    let base = shoot_ground_state(common.n, common.p.value(), &common.shoot_config())?;
    let alpha = radial_integral(&base, 2.0)?.value;
    Ok((base, alpha))
}

fn params(common: &Common, k: f64) -> Result<ProblemParams, Failure> {
    Ok(ProblemParams::new(common.n, common.p, k)?)
}

fn cmd_ground_state(common: &Common) -> Result<u8, Failure> {
    let (base, alpha) = ground_state(common)?;
    if let Some(path) = &common.output {
        let mut w = BufWriter::new(File::create(path)?);
        base.write_csv(&mut w)?;
        w.flush()?;
    }
    let decay = base.decay();
    let summary = json!({
        "n": common.n,
        "p": common.p.to_string(),
        "u0": round_sig(base.amplitude(), SIGNIFICANT_DIGITS),
        "alpha": round_sig(alpha, SIGNIFICANT_DIGITS),
        "delta": decay.map(|d| round_sig(d.delta, SIGNIFICANT_DIGITS)),
        "c": decay.map(|d| round_sig(d.c, SIGNIFICANT_DIGITS)),
        "residual": round_sig(ode_residual(&base), SIGNIFICANT_DIGITS),
    });
    let mut out = BufWriter::new(io::stdout());
    emit(&mut out, common.format.unwrap_or(Format::StructuredText), &[summary])?;
    out.flush()?;
    Ok(0)
}

fn cmd_classify(common: &Common, k: f64) -> Result<u8, Failure> {
    let params = params(common, k)?;
    // No ground state exists above the critical exponent; the mass is irrelevant there.
    let alpha = if params.is_supercritical() { f64::NAN } else { ground_state(common)?.1 };
    let result = classify_existence(&params, alpha)?;
    let mut record = serde_json::to_value(&result).expect("serializable record");
    if params.is_supercritical() {
        record["alpha"] = Value::Null;
    }
    let mut out = sink(&common.output)?;
    emit(&mut out, common.format.unwrap_or(Format::StructuredText), &[record])?;
    out.flush()?;
    Ok(if result.count == 0 { EXIT_NONEXISTENCE } else { 0 })
}

fn cmd_solve(common: &Common, k: f64, r_exp: f64) -> Result<u8, Failure> {
    let params = ProblemParams::with_r_exp(common.n, common.p, k, r_exp)?;
    if params.is_supercritical() {
        return Err(Error::SupercriticalExponent { n: common.n, p: common.p.value() }.into());
    }
    let (base, _) = ground_state(common)?;
    let alpha_r = radial_integral(&base, r_exp)?.value;
    let omegas = generalized_consistency(common.n, &common.p, r_exp, k * alpha_r)?;
    let records: Vec<Value> = omegas
        .iter()
        .map(|w| json!({ "k": round_sig(k, SIGNIFICANT_DIGITS), "r_exp": r_exp, "omega": round_sig(*w, SIGNIFICANT_DIGITS) }))
        .collect();
    let mut out = sink(&common.output)?;
    match common.format.unwrap_or(Format::StructuredText) {
        Format::Csv if records.is_empty() => writeln!(out, "k,r_exp,omega")?,
        f => emit(&mut out, f, &records)?,
    }
    out.flush()?;
    Ok(if omegas.is_empty() { EXIT_NONEXISTENCE } else { 0 })
}

fn cmd_sweep(common: &Common, range: KRange, spacing: Spacing) -> Result<u8, Failure> {
    let mut ks = range.values(spacing);
    let supercritical = globalcoupling::exponent::is_supercritical(common.n, &common.p);
    let rows: Vec<(f64, Result<Vec<f64>, String>)> = if supercritical {
        ks.iter().map(|&k| (k, Ok(Vec::new()))).collect()
    } else {
        let (_, alpha) = ground_state(common)?;
        // Put the fold itself on the table when it falls inside the range.
        let probe = classify_existence(&params(common, range.lo)?, alpha)?;
        if let Some(k_star) = probe.k_star {
            if k_star > range.lo && k_star < range.hi && !ks.contains(&k_star) {
                ks.push(k_star);
                ks.sort_by(f64::total_cmp);
            }
        }
        sweep_bifurcation(common.n, &common.p, alpha, &ks)
            .into_iter()
            .map(|row| (row.k, row.outcome.map(|r| r.omegas).map_err(|e| e.to_string())))
            .collect()
    };

    let format = common.format.unwrap_or(Format::Csv);
    let mut out = sink(&common.output)?;
    if format == Format::Csv {
        writeln!(out, "k,count,omega1,omega2")?;
    }
    for (k, outcome) in &rows {
        match (format, outcome) {
            (Format::Csv, Ok(w)) => {
                let cell = |i: usize| w.get(i).map(|x| sig(*x)).unwrap_or_default();
                writeln!(out, "{},{},{},{}", sig(*k), w.len(), cell(0), cell(1))?;
            }
            (Format::Csv, Err(_)) => writeln!(out, "{},error,,", sig(*k))?,
            (Format::StructuredText, Ok(w)) => {
                let omegas: Vec<f64> = w.iter().map(|x| round_sig(*x, SIGNIFICANT_DIGITS)).collect();
                writeln!(out, "{}", json!({ "k": round_sig(*k, SIGNIFICANT_DIGITS), "count": w.len(), "omegas": omegas }))?;
            }
            (Format::StructuredText, Err(e)) => {
                writeln!(out, "{}", json!({ "k": round_sig(*k, SIGNIFICANT_DIGITS), "error": e }))?;
            }
        }
    }
    out.flush()?;
    if rows.iter().all(|(_, r)| r.is_err()) {
        return Ok(EXIT_NUMERICAL);
    }
    Ok(if supercritical { EXIT_NONEXISTENCE } else { 0 })
}

struct Thresholds {
    residual: f64,
    identity: f64,
    consistency: f64,
}

impl Thresholds {
    fn accept(&self, r: &CertificationReport, amplitude: f64) -> bool {
        r.nonlocal_residual <= self.residual * amplitude
            && r.consistency_defect <= self.consistency
            && r.pohozaev_defect <= self.identity
            && r.nehari_defect <= self.identity
    }
}

fn cmd_verify(common: &Common, k: f64, limits: &Thresholds) -> Result<u8, Failure> {
    let params = params(common, k)?;
    if params.is_supercritical() {
        return Err(Error::SupercriticalExponent { n: common.n, p: common.p.value() }.into());
    }
    let (base, alpha) = ground_state(common)?;
    let result = classify_existence(&params, alpha)?;
    if result.count == 0 {
        return Err(Failure {
            code: EXIT_NONEXISTENCE,
            message: format!("no solution exists (case {})", result.theorem_item),
        });
    }
    let mut records = Vec::new();
    let mut accepted = true;
    for &w in &result.omegas {
        let branch = reconstruct_solution(&params, w, &base)?;
        let report = certify(&branch, &params)?;
        accepted &= limits.accept(&report, branch.profile.amplitude());
        records.push(serde_json::to_value(report).expect("serializable record"));
    }
    let mut out = sink(&common.output)?;
    emit(&mut out, common.format.unwrap_or(Format::StructuredText), &records)?;
    out.flush()?;
    if !accepted {
        eprintln!("error: a certification defect exceeds its threshold");
        return Ok(EXIT_NUMERICAL);
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::GroundState(common) => cmd_ground_state(&common),
        Command::Classify { common, k } => cmd_classify(&common, k),
        Command::Solve { common, k, r_exp } => cmd_solve(&common, k, r_exp),
        Command::Sweep { common, k_range, spacing } => cmd_sweep(&common, k_range, spacing),
        Command::Verify { common, k, residual_tol, identity_tol, consistency_tol } => {
            if !(residual_tol > 0.0 && identity_tol > 0.0 && consistency_tol > 0.0) {
                return Err(usage("thresholds must be positive"));
            }
            let limits = Thresholds { residual: residual_tol, identity: identity_tol, consistency: consistency_tol };
            cmd_verify(&common, k, &limits)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
