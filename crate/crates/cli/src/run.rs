//! Subcommand implementations.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use clarkchaos::decomp::{build_operators, deficiency_constraints, find_f1_f2};
use clarkchaos::experiments::{self, ExperimentKind};
use clarkchaos::field::{CanonicalSampler, ExactScalingSampler, PerturbedSampler};
use clarkchaos::rng::{replica_rng, tag};
use clarkchaos::zeros::locate_zeros;
use clarkchaos::{
    build_measure, Atom, ChaosMeasure, ChaosMode, Complex64, DiscPoint, FieldSample, GridSpec, InnerFunctionEval,
    KernelSpec, TrigKernel,
};

use crate::config::{Config, KernelChoice};
use crate::output::{summary_line, Manifest, OutputDir};
use crate::{Cli, CliError, Command, FieldArgs};

/// Runs the parsed command line, printing to `out`.
pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let mut config = Config::load(cli.config.as_deref(), &cli.overrides)?;
    if cli.seed.is_some() {
        config.run.seed = cli.seed;
    }
    if cli.workers.is_some() {
        config.run.workers = cli.workers;
    }
    if let Some(dir) = &cli.out {
        config.run.out = dir.clone();
    }
    match &cli.command {
        Command::SampleField(args) => {
            apply_field_args(&mut config, args);
            sample_field(&config, out)
        }
        Command::DumpMeasure(args) => {
            apply_field_args(&mut config, args);
            dump_measure(&config, out)
        }
        Command::EvalPhi(args) => {
            apply_field_args(&mut config, &args.field);
            let f = match (&args.atoms, args.roots) {
                (Some(spec), _) => InnerFunctionEval::from_atoms(&parse_atoms(spec)?)?,
                (None, Some(n)) => InnerFunctionEval::roots_of_unity(n)?,
                (None, None) => InnerFunctionEval::from_measure(&measure(&config)?)?,
            };
            eval_phi(&f, parse_point(&args.at)?, out)
        }
        Command::FindZeros(args) => {
            apply_field_args(&mut config, &args.field);
            if let Some(r) = args.rmax {
                config.zeros.r_max = r;
            }
            if let Some(b) = args.budget {
                config.zeros.budget = b;
            }
            find_zeros(&config, out)
        }
        Command::Decompose(args) => {
            if args.g_spec.is_some() {
                config.decompose.g_spec = args.g_spec.clone();
            }
            if let Some(d) = args.degree {
                config.decompose.degree = d;
            }
            if let Some(c) = args.cutoff {
                config.decompose.cutoff = c;
            }
            decompose(&config, out)
        }
        Command::Experiment { name } => {
            let kind = ExperimentKind::from_name(name).ok_or_else(|| {
                let names: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                CliError::Config(format!("unknown experiment {name:?}; expected one of {}", names.join(", ")))
            })?;
            run_experiments(&config, &[kind], &format!("experiment {name}"), out)
        }
        Command::All => run_experiments(&config, &ExperimentKind::ALL, "all", out),
    }
}

fn apply_field_args(config: &mut Config, args: &FieldArgs) {
    let f = &mut config.field;
    if let Some(g) = args.gamma {
        f.gamma = g;
    }
    if let Some(n) = args.n {
        f.n = n;
    }
    if args.m.is_some() {
        f.m = args.m;
    }
    if let Some(k) = args.kernel {
        f.kernel = k;
    }
    if args.eps.is_some() {
        f.eps = args.eps;
    }
    if args.g_spec.is_some() {
        f.g_spec = args.g_spec.clone();
    }
    if let Some(c) = args.count {
        f.count = c;
    }
}

fn read_kernel(path: Option<&Path>) -> Result<Option<TrigKernel>, CliError> {
    path.map(|p| {
        let text = std::fs::read_to_string(p)
            .map_err(|e| CliError::Config(format!("cannot read kernel file {}: {e}", p.display())))?;
        TrigKernel::parse(&text).map_err(|e| CliError::Config(format!("kernel file {}: {e}", p.display())))
    })
    .transpose()
}

/// Draws field samples `0..count` of the configured kernel.
fn fields(config: &Config, count: usize) -> Result<Vec<FieldSample>, CliError> {
    let f = &config.field;
    let m = f.grid_size();
    let seed = config.seed();
    let rng = |i: usize| replica_rng(seed, tag("field"), i as u64);
    match f.kernel {
        KernelChoice::Canonical => {
            let sampler = CanonicalSampler::new(f.n, GridSpec::circle(m)?)?;
            Ok((0..count).map(|i| sampler.sample(&mut rng(i))).collect())
        }
        KernelChoice::Perturbed => {
            let g = read_kernel(f.g_spec.as_deref())?
                .ok_or_else(|| CliError::Config("the perturbed kernel needs field.g_spec".into()))?;
            let sampler = PerturbedSampler::new(&KernelSpec::Perturbed(g), f.n, GridSpec::circle(m)?)?;
            Ok((0..count).map(|i| sampler.sample(&mut rng(i))).collect())
        }
        KernelChoice::ExactScaling => {
            let grid = GridSpec::interval(m)?;
            let sampler = ExactScalingSampler::new(f.eps.unwrap_or(2.0 * grid.spacing()), grid)?;
            Ok((0..count).map(|i| sampler.sample(&mut rng(i))).collect())
        }
    }
}

fn measure(config: &Config) -> Result<ChaosMeasure, CliError> {
    let field = fields(config, 1)?.remove(0);
    let gamma = config.field.gamma;
    Ok(build_measure(&field, gamma, ChaosMode::for_gamma(gamma))?)
}

fn sample_field(config: &Config, out: &mut dyn Write) -> Result<(), CliError> {
    for s in fields(config, config.field.count)? {
        writeln!(out, "{}", s.to_text_row())?;
    }
    Ok(())
}

fn dump_measure(config: &Config, out: &mut dyn Write) -> Result<(), CliError> {
    let mu = measure(config)?;
    writeln!(out, "theta,weight")?;
    for (theta, w) in mu.atoms() {
        writeln!(out, "{theta},{w}")?;
    }
    Ok(())
}

fn parse_number(text: &str, what: &str) -> Result<f64, CliError> {
    text.trim().parse().map_err(|_| CliError::Config(format!("cannot parse {what} {text:?}")))
}

fn parse_point(text: &str) -> Result<DiscPoint, CliError> {
    let (x, y) = text
        .split_once(',')
        .ok_or_else(|| CliError::Config(format!("evaluation point {text:?} is not of the form x,y")))?;
    Ok(DiscPoint::new(Complex64::new(parse_number(x, "x")?, parse_number(y, "y")?))?)
}

fn parse_atoms(text: &str) -> Result<Vec<Atom>, CliError> {
    text.split(',')
        .map(|pair| {
            let (t, m) = pair
                .split_once(':')
                .ok_or_else(|| CliError::Config(format!("atom {pair:?} is not of the form theta:mass")))?;
            Ok(Atom { theta: parse_number(t, "angle")?, mass: parse_number(m, "mass")? })
        })
        .collect()
}

// Twelve decimals, without a sign on values that round to zero.
fn fixed(v: f64) -> String {
    let s = format!("{v:.12}");
    match s.strip_prefix('-') {
        Some(rest) if rest.bytes().all(|b| b == b'0' || b == b'.') => rest.to_string(),
        _ => s,
    }
}

fn complex(z: Complex64) -> String {
    let im = fixed(z.im);
    match im.strip_prefix('-') {
        Some(abs) => format!("{} - {abs}i", fixed(z.re)),
        None => format!("{} + {im}i", fixed(z.re)),
    }
}

fn eval_phi(f: &InnerFunctionEval, z: DiscPoint, out: &mut dyn Write) -> Result<(), CliError> {
    let parts = f.parts(z);
    writeln!(out, "h = {}", complex(f.herglotz(z)))?;
    writeln!(out, "phi = {}", complex(f.phi(z)))?;
    writeln!(out, "x = {}", fixed(parts.x))?;
    writeln!(out, "y = {}", fixed(parts.y))?;
    writeln!(out, "log_abs_phi = {}", fixed(f.log_abs_phi(z)))?;
    Ok(())
}

fn find_zeros(config: &Config, out: &mut dyn Write) -> Result<(), CliError> {
    let f = InnerFunctionEval::from_measure(&measure(config)?)?;
    let zs = locate_zeros(&f, config.zeros.r_max, config.zeros.budget)?;
    if zs.is_partial() {
        eprintln!("warning: evaluation budget exhausted; the zero list is incomplete");
    }
    writeln!(out, "re,im,multiplicity,one_minus_abs")?;
    for z in zs.zeros() {
        writeln!(out, "{},{},{},{}", z.re, z.im, z.multiplicity, z.one_minus_abs())?;
    }
    Ok(())
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
}

fn decompose(config: &Config, out: &mut dyn Write) -> Result<(), CliError> {
    let d = &config.decompose;
    let g = read_kernel(d.g_spec.as_deref())?.unwrap_or_else(|| TrigKernel::zero(0));
    let op = build_operators(&g, d.cutoff)?;
    for w in op.warnings() {
        eprintln!("warning: {w}");
    }
    let constraints = deficiency_constraints(&op, d.tol_eig)?;
    let pf = find_f1_f2(&op, &constraints, d.degree, d.grid)?;
    writeln!(out, "l = {}", constraints.len())?;
    writeln!(out, "f1 = {}", join(pf.f1.coeffs()))?;
    writeln!(out, "f2 = {}", join(pf.f2.coeffs()))?;
    writeln!(out, "eps1 = {}", pf.eps1)?;
    writeln!(out, "eps2 = {}", pf.eps2)?;
    writeln!(out, "a_inf = {}", pf.a_inf)?;
    writeln!(out, "residual_min_eigenvalue = {}", pf.residual_min_eigenvalue)?;
    writeln!(out, "constraint_defect = {}", pf.constraint_defect)?;
    Ok(())
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn run_experiments(
    config: &Config,
    kinds: &[ExperimentKind],
    command: &str,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    // Resolve every configuration before any work starts.
    let configs = kinds.iter().map(|&k| Ok((k, config.experiment_config(k)?))).collect::<Result<Vec<_>, CliError>>()?;
    let started = now();
    let mut dir = OutputDir::create(&config.run.out)?;
    let mut seeds = BTreeMap::new();
    for (kind, cfg) in &configs {
        let report = experiments::run(*kind, cfg)?;
        dir.write_report(&report)?;
        seeds.insert(kind.name().to_string(), cfg.master_seed);
        writeln!(out, "{}", summary_line(&report))?;
    }
    let manifest = Manifest {
        artifact: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command: command.to_string(),
        seeds,
        config: config.to_toml(),
        started,
        finished: now(),
        outputs: BTreeMap::new(),
    };
    let path = dir.finish(manifest)?;
    writeln!(out, "manifest: {}", path.display())?;
    Ok(())
}
