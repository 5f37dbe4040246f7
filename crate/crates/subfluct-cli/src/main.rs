//! `subfluct`: command-line front end for the substitution fluctuation toolkit.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use subfluct::coboundary::{classify_discrepancy, Analysis, CoboundaryError};
use subfluct::lab::stats::{EmpiricalDistribution, Histogram};
use subfluct::lab::{self, DigitSource, LabError, MarkovSetup};
use subfluct::path_space::{build_state_space, check_eigenfunction, BirkhoffLift};
use subfluct::spectral::{left_eigenvalue, EigenClass};
use subfluct::substitution::{find_seed, is_primitive, theta_matrix};
use subfluct::{Scalar, Substitution};

#[derive(Parser)]
#[command(name = "subfluct", version, about = "Birkhoff-sum fluctuations of primitive substitutions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Incidence matrix, primitivity and spectrum.
    Analyze(RunArgs),
    /// Lifted eigenvectors, Markov kernels, stationary laws and drifts.
    Measures(RunArgs),
    /// Coboundary certificates for every modulus-one eigenfunction.
    Cobound(RunArgs),
    /// Bounded-discrepancy verdict.
    Classify(RunArgs),
    /// Exhaustive CLT along the fixed point (|lambda_f| = 1).
    Clt(RunArgs),
    /// Finite-N law against the Cantor-supported limit (|lambda_f| < 1).
    Cantor(RunArgs),
    /// Renormalised law along N_ell = |theta^ell(a)| (1 < |lambda_f| < lambda).
    Blowup(RunArgs),
    /// CLT along a random one-sided point, centred by a_{v,N}.
    Typical(RunArgs),
    /// Exact total-variation decay between position and chain measures.
    Coupling(RunArgs),
    /// Martingale decomposition harness on the upward chain.
    Mclt(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Substitution, e.g. "a=aab;b=bba".
    #[arg(value_name = "RULES")]
    rules_pos: Option<String>,
    /// Substitution text (alternative to the positional form).
    #[arg(long = "rules", value_name = "TEXT", conflicts_with = "rules_pos")]
    rules: Option<String>,
    /// File with one rule per line or `;`-separated rules.
    #[arg(long, value_name = "PATH", conflicts_with_all = ["rules_pos", "rules"])]
    rules_file: Option<PathBuf>,
    /// Number of positions, or path length for `mclt`.
    #[arg(long)]
    n: Option<u64>,
    /// Monte Carlo seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo sample count (trials for `mclt`).
    #[arg(long)]
    mc: Option<usize>,
    /// Output directory.
    #[arg(long, env = "SUBFLUCT_OUT", default_value = "subfluct-out")]
    out: PathBuf,
    /// Numerical tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Worker threads (results do not depend on it).
    #[arg(long, env = "SUBFLUCT_THREADS")]
    threads: Option<usize>,
    /// Eigenfunction as comma-separated values, e.g. "1,-1" or "0.5,-0.25".
    #[arg(long, value_name = "VALUES", allow_hyphen_values = true)]
    f: Option<String>,
    /// Index of the eigenpair to use (spectral order), instead of --f.
    #[arg(long, conflicts_with = "f")]
    eig: Option<usize>,
    /// Level range for `blowup`, e.g. "8..10" (inclusive).
    #[arg(long)]
    ell: Option<String>,
    /// Shift range for `coupling`, e.g. "1..6" (inclusive).
    #[arg(long)]
    r: Option<String>,
}

/// Everything that determines a report; recorded verbatim in `report.json`.
/// Output directory and thread count are left out on purpose: they do not
/// change results, and leaving them out keeps reports byte-identical.
#[derive(Serialize)]
struct RunConfig {
    command: &'static str,
    substitution: String,
    n: Option<u64>,
    seed: u64,
    mc: Option<usize>,
    tol: f64,
    f: Option<Vec<Scalar>>,
    lambda_f: Option<Scalar>,
    eig: Option<usize>,
    ell: Option<Vec<usize>>,
    r: Option<Vec<usize>>,
}

#[derive(Debug)]
enum Failure {
    /// Bad input: exit 1.
    Invalid { code: &'static str, message: String },
    /// The analysis does not apply to this input: exit 2.
    Refused { code: &'static str, message: String },
}

fn invalid(code: &'static str, message: impl Into<String>) -> Failure {
    Failure::Invalid { code, message: message.into() }
}

fn refused(code: &'static str, message: impl Into<String>) -> Failure {
    Failure::Refused { code, message: message.into() }
}

impl From<LabError> for Failure {
    fn from(e: LabError) -> Self {
        match e {
            LabError::Refused(m) => refused("refused", m),
            LabError::Precondition(m) => invalid("precondition", m),
            LabError::Measure(m) => invalid("budget", m.to_string()),
            other => invalid("analysis", other.to_string()),
        }
    }
}

impl From<CoboundaryError> for Failure {
    fn from(e: CoboundaryError) -> Self {
        invalid("analysis", e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        invalid("io", e.to_string())
    }
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Command::Analyze(a) => ("analyze", a),
            Command::Measures(a) => ("measures", a),
            Command::Cobound(a) => ("cobound", a),
            Command::Classify(a) => ("classify", a),
            Command::Clt(a) => ("clt", a),
            Command::Cantor(a) => ("cantor", a),
            Command::Blowup(a) => ("blowup", a),
            Command::Typical(a) => ("typical", a),
            Command::Coupling(a) => ("coupling", a),
            Command::Mclt(a) => ("mclt", a),
        }
    }
}

fn load_substitution(args: &RunArgs) -> Result<Substitution, Failure> {
    let s = match (&args.rules_pos, &args.rules, &args.rules_file) {
        (Some(t), _, _) | (_, Some(t), _) => Substitution::parse(t),
        (_, _, Some(p)) => {
            let text = fs::read_to_string(p).map_err(|e| invalid("io", format!("{}: {e}", p.display())))?;
            Substitution::parse_file(&text)
        }
        _ => return Err(invalid("usage", "no substitution given (positional RULES, --rules or --rules-file)")),
    }
    .map_err(|e| invalid("parse", e.to_string()))?;
    s.validate().map_err(|e| invalid("validation", e.to_string()))?;
    Ok(s)
}

fn parse_range(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || invalid("usage", format!("bad range {text:?}; expected N or A..B"));
    let (a, b) = match text.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().trim_start_matches('=').parse().map_err(|_| bad())?),
        None => {
            let v = text.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if a > b {
        return Err(bad());
    }
    Ok((a..=b).collect())
}

/// Which eigenvalues a command can use.
#[derive(Clone, Copy, PartialEq)]
enum Want {
    UnitModulus,
    Contracting,
    Expanding,
}

impl Want {
    fn accepts(self, class: EigenClass, value: &Scalar) -> bool {
        match self {
            Want::UnitModulus => class.modulus_one(),
            Want::Contracting => class == EigenClass::ModulusLt1 && !value.is_zero_within(1e-12),
            Want::Expanding => class == EigenClass::ModulusGt1,
        }
    }

    fn describe(self) -> &'static str {
        match self {
            Want::UnitModulus => "of modulus one",
            Want::Contracting => "nonzero of modulus below one",
            Want::Expanding => "strictly between 1 and the Perron-Frobenius eigenvalue in modulus",
        }
    }
}

/// Resolves the eigenfunction from `--f`, `--eig` or the first suitable
/// eigenpair. For unit-modulus commands the first non-coboundary is
/// preferred so the default run is meaningful.
fn pick_eigenfunction(s: &Substitution, args: &RunArgs, an: &Analysis, want: Want) -> Result<(Vec<Scalar>, Scalar), Failure> {
    if let Some(text) = &args.f {
        let f: Vec<Scalar> = text.split(',').map(|x| x.parse::<Scalar>()).collect::<Result<_, _>>().map_err(|e| invalid("usage", e))?;
        if f.len() != s.size() {
            return Err(invalid("usage", format!("--f has {} values for {} letters", f.len(), s.size())));
        }
        let lam = left_eigenvalue(&theta_matrix(s), &f).ok_or_else(|| invalid("usage", "--f is zero"))?;
        check_eigenfunction(s, &f, &lam).map_err(|e| invalid("not_eigenvector", e.to_string()))?;
        return Ok((f, lam));
    }
    let pairs = &an.spectral.decomposition.pairs;
    if let Some(k) = args.eig {
        let p = pairs.get(k).ok_or_else(|| invalid("usage", format!("--eig {k}: only {} eigenpairs", pairs.len())))?;
        return Ok((p.left[0].clone(), p.value.clone()));
    }
    let candidates: Vec<(Vec<Scalar>, Scalar)> = pairs
        .iter()
        .zip(&an.spectral.classes)
        .filter(|(p, &c)| want.accepts(c, &p.value))
        .flat_map(|(p, _)| p.left.iter().map(move |f| (f.clone(), p.value.clone())))
        .collect();
    if want == Want::UnitModulus {
        for (f, lam) in &candidates {
            if !an.certificate(s, f, lam, args.tol)?.is_coboundary {
                return Ok((f.clone(), lam.clone()));
            }
        }
    }
    candidates
        .into_iter()
        .next()
        .ok_or_else(|| refused("no_eigenvalue", format!("no eigenvalue {}", want.describe())))
}

fn write_json(dir: &Path, config: &RunConfig, report: Value) -> Result<(), Failure> {
    let doc = json!({ "config": config, "report": report });
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| invalid("io", e.to_string()))?;
    text.push('\n');
    fs::write(dir.join("report.json"), text)?;
    Ok(())
}

fn write_samples(dir: &Path, name: &str, samples: &[Complex64]) -> Result<(), Failure> {
    let mut out = String::from("n,value_re,value_im\n");
    for (i, z) in samples.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, z.re, z.im));
    }
    fs::write(dir.join(name), out)?;
    Ok(())
}

fn write_hist(dir: &Path, h: &Histogram) -> Result<(), Failure> {
    let mut out = String::from("bin_lo,bin_hi,count\n");
    for (lo, hi, c) in &h.bins {
        out.push_str(&format!("{lo},{hi},{c}\n"));
    }
    fs::write(dir.join("hist.csv"), out)?;
    Ok(())
}

fn write_distribution(dir: &Path, d: &EmpiricalDistribution) -> Result<(), Failure> {
    write_samples(dir, "samples.csv", &d.samples)?;
    write_hist(dir, &d.histogram)
}

fn to_value<T: Serialize>(v: &T) -> Result<Value, Failure> {
    serde_json::to_value(v).map_err(|e| invalid("io", e.to_string()))
}

fn usize_n(n: u64) -> Result<usize, Failure> {
    usize::try_from(n).map_err(|_| invalid("usage", "--n too large"))
}

fn run(name: &'static str, args: &RunArgs) -> Result<(), Failure> {
    let s = load_substitution(args)?;
    let tol = args.tol;
    if !(tol > 0.0 && tol < 1e-2) {
        return Err(invalid("usage", "--tol must lie in (0, 0.01)"));
    }
    let mut config = RunConfig {
        command: name,
        substitution: s.to_string(),
        n: args.n,
        seed: args.seed,
        mc: args.mc,
        tol,
        f: None,
        lambda_f: None,
        eig: args.eig,
        ell: None,
        r: None,
    };
    let an = Analysis::new(&s, tol)?;
    let dir = &args.out;
    fs::create_dir_all(dir)?;

    let eigenfunction = |config: &mut RunConfig, want: Want| -> Result<(Vec<Scalar>, Scalar), Failure> {
        let (f, lam) = pick_eigenfunction(&s, args, &an, want)?;
        config.f = Some(f.clone());
        config.lambda_f = Some(lam.clone());
        Ok((f, lam))
    };

    let report = match name {
        "analyze" => json!({
            "matrix": theta_matrix(&s),
            "primitivity": is_primitive(&s),
            "seed": find_seed(&s).map(|x| json!({ "letter": s.symbol(x.letter).to_string(), "k": x.k })).ok(),
            "spectral": to_value(&an.spectral)?,
        }),
        "measures" => {
            let states: Vec<String> = (0..an.space.len()).map(|i| an.space.render(i)).collect();
            let mut eig = Vec::new();
            for (p, class) in an.spectral.decomposition.pairs.iter().zip(&an.spectral.classes) {
                for f in &p.left {
                    let lift = BirkhoffLift::new(&s, &an.space, f, &p.value).map_err(|e| invalid("analysis", e.to_string()))?;
                    eig.push(json!({
                        "value": p.value,
                        "class": class,
                        "f": f,
                        "f_check": lift.fcheck,
                        "drift": an.drift_of(&s, f, &p.value)?,
                    }));
                }
            }
            json!({ "states": states, "kernels": to_value(&an.kernels)?, "eigenfunctions": eig })
        }
        "cobound" if args.f.is_some() || args.eig.is_some() => {
            let (f, lam) = eigenfunction(&mut config, Want::UnitModulus)?;
            if (lam.abs() - 1.0).abs() > tol {
                return Err(refused("no_eigenvalue", format!("lambda_f = {lam} is not of modulus one")));
            }
            let c = an.certificate(&s, &f, &lam, tol)?;
            json!({ "certificates": [{ "lambda_f": lam, "f": f, "certificate": c }] })
        }
        "cobound" => {
            let mut certs = Vec::new();
            for (p, class) in an.spectral.decomposition.pairs.iter().zip(&an.spectral.classes) {
                if !class.modulus_one() {
                    continue;
                }
                for f in &p.left {
                    let c = an.certificate(&s, f, &p.value, tol)?;
                    certs.push(json!({ "lambda_f": p.value, "f": f, "certificate": c }));
                }
            }
            json!({ "certificates": certs })
        }
        "classify" => to_value(&classify_discrepancy(&s, tol)?)?,
        "clt" => {
            let (f, lam) = eigenfunction(&mut config, Want::UnitModulus)?;
            let n = *config.n.get_or_insert(59_049);
            let r = lab::clt_experiment(&s, &f, &lam, usize_n(n)?, tol)?;
            write_distribution(dir, &r.normalised)?;
            to_value(&r)?
        }
        "cantor" => {
            let (f, lam) = eigenfunction(&mut config, Want::Contracting)?;
            let n = *config.n.get_or_insert(100_000);
            let mc = *config.mc.get_or_insert(10_000);
            let r = lab::cantor_limit_experiment(&s, &f, &lam, usize_n(n)?, mc, args.seed, tol)?;
            write_distribution(dir, &r.empirical)?;
            write_samples(dir, "mc_samples.csv", &r.monte_carlo.samples)?;
            to_value(&r)?
        }
        "blowup" => {
            let (f, lam) = eigenfunction(&mut config, Want::Expanding)?;
            let ells = parse_range(args.ell.as_deref().unwrap_or("6..8"))?;
            config.ell = Some(ells.clone());
            let mc = *config.mc.get_or_insert(10_000);
            let r = lab::blowup_experiment(&s, &f, &lam, &ells, mc, args.seed, tol)?;
            if let Some(last) = r.levels.last() {
                write_distribution(dir, &last.exhaustive)?;
            }
            write_samples(dir, "mc_samples.csv", &r.monte_carlo.samples)?;
            to_value(&r)?
        }
        "typical" => {
            let (f, lam) = eigenfunction(&mut config, Want::UnitModulus)?;
            let n = *config.n.get_or_insert(59_049);
            let r = lab::typical_orbit_experiment(&s, &f, &lam, usize_n(n)?, DigitSource::Random { seed: args.seed }, tol)?;
            write_distribution(dir, &r.normalised)?;
            to_value(&r)?
        }
        "coupling" => {
            let n = *config.n.get_or_insert(729);
            let rs = parse_range(args.r.as_deref().unwrap_or("1..5"))?;
            config.r = Some(rs.clone());
            let a = find_seed(&s).map_err(|e| invalid("validation", e.to_string()))?.letter;
            let r = lab::coupling_decay_experiment(&s, a, n, &rs, 1_000_000, tol)?;
            to_value(&r)?
        }
        "mclt" => {
            let (f, lam) = eigenfunction(&mut config, Want::UnitModulus)?;
            let n = *config.n.get_or_insert(1_000);
            let trials = *config.mc.get_or_insert(1_000);
            let lift = BirkhoffLift::new(&s, &build_state_space(&s), &f, &lam).map_err(|e| invalid("analysis", e.to_string()))?;
            let setup = MarkovSetup::from_kernels(&an.kernels, &lift.fcheck, &lam);
            let r = lab::markov_clt_harness(&setup, usize_n(n)?, trials, args.seed, tol)?;
            write_samples(dir, "samples.csv", &r.samples)?;
            write_hist(dir, &Histogram::of_real(&r.samples, 60))?;
            to_value(&r)?
        }
        _ => unreachable!("clap only yields known commands"),
    };
    write_json(dir, &config, report)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let (name, args) = cli.command.parts();
    if let Some(k) = args.threads {
        if k == 0 || rayon::ThreadPoolBuilder::new().num_threads(k).build_global().is_err() {
            eprintln!("{}", json!({ "error": { "code": "usage", "message": "bad --threads" } }));
            return ExitCode::from(1);
        }
    }
    match run(name, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Invalid { code, message }) => {
            eprintln!("{}", json!({ "error": { "code": code, "message": message } }));
            ExitCode::from(1)
        }
        Err(Failure::Refused { code, message }) => {
            eprintln!("{}", json!({ "error": { "code": code, "message": message } }));
            ExitCode::from(2)
        }
    }
}
