//! `ilf`: membership checks, constructions, simulation and mixability
//! certificates on JSON laws and paths.
//!
//! Exit codes: 0 member / pass / certified, 1 non-member / fail / gate
//! failure, 2 unknown or inconclusive, 64 malformed input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ilf_core::construct::{
    bound_attaining_law, construct_first_time, construct_invariant_with_budget, construct_invariant_with_escape_budget,
    default_budget, density_bound,
};
use ilf_core::io::{law_to_json, parse_density, parse_law, parse_path, path_to_json};
use ilf_core::membership::{
    check_class, check_tv, check_tv_prime, hull_membership_lp, HullOptions, HullOutcome, LawClass, MembershipReport,
    Verdict,
};
use ilf_core::mixability::{
    brute_force_optimum, certify_convex, certify_gap, certify_linear, component_distributions, rearrangement_search,
    MixOutcome, SearchOptions, ORACLE_MAX_LAYERS,
};
use ilf_core::paths::Locator;
use ilf_core::simulate::{compare, mc_law, sweep_law, EmpiricalLaw};
use ilf_core::{format_rational, parse_rational, LocationLaw, Rational};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

const EXIT_MALFORMED: u8 = 64;

#[derive(Parser)]
#[command(name = "ilf", version, about = "Laws of intrinsic location functionals of periodic processes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Write the JSON report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a law against a class or the variation condition.
    Check(CheckArgs),
    /// Block decomposition of an integer step density.
    Decompose {
        law: PathBuf,
    },
    /// Build a path whose locations follow a law.
    Construct(ConstructArgs),
    /// Estimate the law of a locator on a path, optionally against a target.
    #[command(alias = "verify")]
    Simulate(SimulateArgs),
    /// The density bound at t and, with --eps, a law attaining it.
    Bound(BoundArgs),
    /// Mixability certificates for a decreasing density.
    Mix(MixArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassArg {
    #[value(name = "ET")]
    Et,
    #[value(name = "E1T")]
    E1t,
    #[value(name = "EMT")]
    Emt,
    #[value(name = "TV")]
    Tv,
    #[value(name = "TVP")]
    Tvp,
}

#[derive(Args)]
struct CheckArgs {
    law: PathBuf,
    #[arg(long, value_enum, default_value = "ET")]
    class: ClassArg,
    /// Decide membership in the convex hull of the class with an exact LP.
    #[arg(long)]
    hull: bool,
    /// Largest density level allowed in hull candidates.
    #[arg(long)]
    max_level: Option<i128>,
    /// Largest number of hull candidates.
    #[arg(long, default_value_t = HullOptions::default().cap)]
    cap: usize,
}

#[derive(Args)]
struct ConstructArgs {
    /// Target law; not needed for `bound:` constructions.
    law: Option<PathBuf>,
    /// invariant, escape, first-time or bound:t,eps
    #[arg(long, default_value = "invariant")]
    kind: String,
    /// Horizon for `bound:` constructions.
    #[arg(long = "T")]
    horizon: Option<String>,
    /// Boundary budget borrowed for zero boundary atoms.
    #[arg(long)]
    budget: Option<String>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    path: PathBuf,
    /// sup, first-hit:L, last-hit:L, truncated-sup or composite
    #[arg(long, default_value = "sup")]
    locator: String,
    #[arg(long = "T")]
    horizon: Option<String>,
    /// Midpoint grid size.
    #[arg(long, conflicts_with = "mc")]
    grid: Option<usize>,
    /// Monte Carlo sample size.
    #[arg(long)]
    mc: Option<usize>,
    /// Overridden by the SEED environment variable.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    target: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-3)]
    tol_ks: f64,
    #[arg(long, default_value_t = 2e-5)]
    tol_atom: f64,
    /// Write the empirical CDF as CSV.
    #[arg(long, alias = "csv")]
    ecdf: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[arg(long)]
    t: String,
    #[arg(long = "T")]
    horizon: String,
    #[arg(long)]
    eps: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum MixMethod {
    Convex,
    Gap,
    Linear,
    Search,
    Oracle,
}

#[derive(Args)]
struct MixArgs {
    /// Law or density file.
    #[arg(long)]
    density: PathBuf,
    #[arg(long, value_enum, default_value = "convex")]
    method: MixMethod,
    #[arg(long, default_value_t = 64)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Overridden by the SEED environment variable.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// Everything a run depends on; equal manifests give identical outputs.
#[derive(Serialize)]
struct RunManifest {
    subcommand: &'static str,
    inputs: Vec<InputDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    grid_sizes: Vec<usize>,
    version: &'static str,
}

#[derive(Serialize)]
struct InputDigest {
    path: String,
    sha256: String,
}

impl RunManifest {
    fn new(subcommand: &'static str) -> Self {
        Self {
            subcommand,
            inputs: Vec::new(),
            seed: None,
            grid_sizes: Vec::new(),
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    /// Reads an input file and records its digest.
    fn read(&mut self, path: &Path) -> anyhow::Result<String> {
        let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: format!("{:x}", Sha256::digest(&bytes)),
        });
        String::from_utf8(bytes).with_context(|| format!("{} is not UTF-8", path.display()))
    }
}

/// A failure that maps to the malformed-input exit code.
#[derive(Debug)]
struct Malformed(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for Malformed {
    fn from(e: E) -> Self {
        Malformed(e.into())
    }
}

type Run = Result<(Value, u8), Malformed>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_MALFORMED } else { 0 });
        }
    };
    match run(&cli.command) {
        Ok((report, code)) => match emit(cli.out.as_deref(), &report) {
            Ok(()) => ExitCode::from(code),
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(EXIT_MALFORMED)
            }
        },
        Err(Malformed(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(EXIT_MALFORMED)
        }
    }
}

fn emit(out: Option<&Path>, report: &Value) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(command: &Command) -> Run {
    match command {
        Command::Check(args) => cmd_check(args),
        Command::Decompose { law } => cmd_decompose(law),
        Command::Construct(args) => cmd_construct(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Bound(args) => cmd_bound(args),
        Command::Mix(args) => cmd_mix(args),
    }
}

/// The SEED environment variable wins over `--seed`.
fn effective_seed(flag: u64) -> Result<u64, Malformed> {
    match std::env::var("SEED") {
        Ok(v) => v.trim().parse().map_err(|e| Malformed(anyhow!("SEED={v:?}: {e}"))),
        Err(_) => Ok(flag),
    }
}

fn rational_arg(text: &str, name: &str) -> Result<Rational, Malformed> {
    parse_rational(text).map_err(|e| Malformed(anyhow!("--{name}: {e}")))
}

fn verdict_code(verdict: Verdict) -> u8 {
    match verdict {
        Verdict::Member => 0,
        Verdict::NonMember => 1,
        Verdict::Unknown => 2,
    }
}

fn class_of(arg: ClassArg) -> Option<LawClass> {
    match arg {
        ClassArg::Et => Some(LawClass::Extreme),
        ClassArg::E1t => Some(LawClass::Invariant),
        ClassArg::Emt => Some(LawClass::FirstTime),
        ClassArg::Tv | ClassArg::Tvp => None,
    }
}

fn cmd_check(args: &CheckArgs) -> Run {
    let mut manifest = RunManifest::new("check");
    let text = manifest.read(&args.law)?;
    if args.hull {
        let class = class_of(args.class).ok_or_else(|| anyhow!("--hull needs a class: ET, E1T or EMT"))?;
        let law = parse_law(&text)?;
        let options = HullOptions {
            max_level: args.max_level,
            cap: args.cap,
            class,
        };
        let (body, code) = match hull_membership_lp(&law, options) {
            HullOutcome::Certificate(cert) => {
                let components: Vec<Value> = cert
                    .components
                    .iter()
                    .map(|(l, w)| json!({"weight": format_rational(w), "law": law_to_json(l)}))
                    .collect();
                (json!({"verdict": Verdict::Member, "certificate": components}), 0)
            }
            HullOutcome::Report(report) => (serde_json::to_value(&report)?, verdict_code(report.verdict)),
        };
        return Ok((json!({"manifest": manifest, "class": class, "hull": true, "report": body}), code));
    }
    let report: MembershipReport = match args.class {
        ClassArg::Tv => check_tv(&parse_density(&text)?),
        ClassArg::Tvp => check_tv_prime(&parse_density(&text)?),
        other => check_class(&parse_law(&text)?, class_of(other).expect("law class")),
    };
    let code = verdict_code(report.verdict);
    Ok((json!({"manifest": manifest, "report": report}), code))
}

fn cmd_decompose(path: &Path) -> Run {
    let mut manifest = RunManifest::new("decompose");
    let f = parse_density(&manifest.read(path)?)?;
    let d = f.block_decomposition()?;
    let blocks: Vec<Value> = d
        .blocks
        .iter()
        .map(|b| json!({"kind": b.kind, "lower": format_rational(&b.lower), "upper": format_rational(&b.upper)}))
        .collect();
    Ok((json!({"manifest": manifest, "T": format_rational(&d.horizon), "blocks": blocks}), 0))
}

fn gate_report(law: &LocationLaw, class: LawClass, manifest: RunManifest) -> Option<(Value, u8)> {
    let report = check_class(law, class);
    (!report.is_member()).then(|| (json!({"manifest": manifest, "class": class, "gate": report}), 1))
}

fn cmd_construct(args: &ConstructArgs) -> Run {
    let mut manifest = RunManifest::new("construct");
    let budget = match &args.budget {
        Some(b) => rational_arg(b, "budget")?,
        None => default_budget(),
    };
    if let Some(params) = args.kind.strip_prefix("bound:") {
        let (t, eps) = params
            .split_once(',')
            .ok_or_else(|| anyhow!("--kind bound:t,eps needs both t and eps"))?;
        let horizon = match (&args.horizon, &args.law) {
            (Some(h), _) => rational_arg(h, "T")?,
            (None, Some(path)) => parse_density(&manifest.read(path)?)?.horizon(),
            (None, None) => return Err(anyhow!("--kind bound needs --T or a law file").into()),
        };
        let law = bound_attaining_law(rational_arg(t, "kind")?, horizon, rational_arg(eps, "kind")?)?;
        let built = construct_invariant_with_budget(&law, budget)?;
        let plan = serde_json::to_value(&built.plan)?;
        return Ok((
            json!({"manifest": manifest, "kind": "bound", "law": law_to_json(&law), "path": path_to_json(&built.path), "plan": plan}),
            0,
        ));
    }
    let path = args.law.as_ref().ok_or_else(|| anyhow!("a law file is required for --kind {}", args.kind))?;
    let law = parse_law(&manifest.read(path)?)?;
    match args.kind.as_str() {
        "invariant" => {
            if let Some(gate) = gate_report(&law, LawClass::Invariant, manifest) {
                return Ok(gate);
            }
            let built = construct_invariant_with_budget(&law, budget)?;
            let mut manifest = RunManifest::new("construct");
            manifest.read(path)?;
            Ok((
                json!({"manifest": manifest, "kind": "invariant", "path": path_to_json(&built.path),
                       "plan": built.plan, "realized": law_to_json(&built.plan.realized)}),
                0,
            ))
        }
        "escape" => {
            if let Some(gate) = gate_report(&law, LawClass::Extreme, manifest) {
                return Ok(gate);
            }
            let mut manifest = RunManifest::new("construct");
            manifest.read(path)?;
            match construct_invariant_with_escape_budget(&law, budget) {
                Ok(built) => Ok((
                    json!({"manifest": manifest, "kind": "escape", "path": path_to_json(&built.path),
                           "plan": built.plan, "realized": law_to_json(&built.plan.realized)}),
                    0,
                )),
                Err(e @ (ilf_core::Error::MembershipGate { .. } | ilf_core::Error::Precondition(_))) => {
                    Ok((json!({"manifest": manifest, "kind": "escape", "gate": e.to_string()}), 1))
                }
                Err(e) => Err(e.into()),
            }
        }
        "first-time" => {
            if let Some(gate) = gate_report(&law, LawClass::FirstTime, manifest) {
                return Ok(gate);
            }
            let built = construct_first_time(&law)?;
            let mut manifest = RunManifest::new("construct");
            manifest.read(path)?;
            Ok((
                json!({"manifest": manifest, "kind": "first-time", "path": path_to_json(&built.path), "plan": built.plan}),
                0,
            ))
        }
        other => Err(anyhow!("unknown construction kind {other:?}").into()),
    }
}

fn cmd_simulate(args: &SimulateArgs) -> Run {
    let mut manifest = RunManifest::new("simulate");
    let g = parse_path(&manifest.read(&args.path)?)?;
    let locator = Locator::parse(&args.locator)?;
    let target = match &args.target {
        Some(p) => Some(parse_law(&manifest.read(p)?)?),
        None => None,
    };
    let horizon = match (&args.horizon, &target) {
        (Some(h), Some(t)) => {
            let h = rational_arg(h, "T")?;
            if h != t.horizon() {
                return Err(anyhow!("--T {h} does not match the target horizon {}", t.horizon()).into());
            }
            h
        }
        (Some(h), None) => rational_arg(h, "T")?,
        (None, Some(t)) => t.horizon(),
        (None, None) => return Err(anyhow!("--T is required without --target").into()),
    };
    let emp: EmpiricalLaw = match args.mc {
        Some(n) => {
            let seed = effective_seed(args.seed)?;
            manifest.seed = Some(seed);
            manifest.grid_sizes.push(n);
            mc_law(&g, locator, horizon, n, seed)?
        }
        None => {
            let n = args.grid.unwrap_or(10_000);
            manifest.grid_sizes.push(n);
            sweep_law(&g, locator, horizon, n)?
        }
    };
    if let Some(path) = &args.ecdf {
        fs::write(path, emp.ecdf_csv()).with_context(|| format!("writing {}", path.display()))?;
    }
    let mut report = json!({"manifest": manifest, "locator": locator.to_string(), "empirical": emp});
    let mut code = 0;
    if let Some(t) = &target {
        let cmp = compare(t, &emp, args.tol_ks, args.tol_atom)?;
        code = if cmp.pass { 0 } else { 1 };
        report["comparison"] = serde_json::to_value(cmp)?;
    }
    Ok((report, code))
}

fn cmd_bound(args: &BoundArgs) -> Run {
    let manifest = RunManifest::new("bound");
    let t = rational_arg(&args.t, "t")?;
    let horizon = rational_arg(&args.horizon, "T")?;
    let bound = density_bound(t, horizon)?;
    let mut report = json!({"manifest": manifest, "t": format_rational(&t), "T": format_rational(&horizon), "bound": bound});
    if let Some(eps) = &args.eps {
        let law = bound_attaining_law(t, horizon, rational_arg(eps, "eps")?)?;
        let member = check_class(&law, LawClass::Invariant);
        report["law"] = law_to_json(&law);
        report["membership"] = serde_json::to_value(&member)?;
    }
    Ok((report, 0))
}

fn cmd_mix(args: &MixArgs) -> Run {
    let mut manifest = RunManifest::new("mix");
    let f = parse_density(&manifest.read(&args.density)?)?;
    let outcome: MixOutcome = match args.method {
        MixMethod::Convex => certify_convex(&f)?,
        MixMethod::Gap => certify_gap(&f)?,
        MixMethod::Linear => certify_linear(&f)?,
        MixMethod::Search => {
            let seed = effective_seed(args.seed)?;
            manifest.seed = Some(seed);
            manifest.grid_sizes.push(args.n);
            let problem = component_distributions(&f)?;
            rearrangement_search(
                &problem,
                SearchOptions {
                    n: args.n,
                    max_iters: args.max_iters,
                    seed,
                    ..SearchOptions::default()
                },
            )?
        }
        MixMethod::Oracle => {
            manifest.grid_sizes.push(args.n);
            let problem = component_distributions(&f)?;
            let best = brute_force_optimum(&problem, args.n, ORACLE_MAX_LAYERS)?;
            let report = json!({
                "manifest": manifest,
                "method": "oracle",
                "optimum": format_rational(&best.max_row_sum),
                "within_budget": best.max_row_sum <= Rational::from_integer(1),
                "coupling": best,
            });
            let code = if best.max_row_sum <= Rational::from_integer(1) { 0 } else { 2 };
            return Ok((report, code));
        }
    };
    let code = if outcome.is_certified() { 0 } else { 2 };
    Ok((json!({"manifest": manifest, "outcome": outcome}), code))
}
