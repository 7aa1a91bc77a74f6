//! Command-line front end: derivations and verification as subcommands over
//! file-based models, with machine-readable output.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage/parse/derivation
//! error.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};
use varfield_core::calcforms::Form;
use varfield_core::jetgeom::CancelToken;
use varfield_core::modeldsl::{
    render_form_json, render_form_latex, render_form_plain, ModelSpec, RenderFormat,
};
use varfield_core::numverify::{finite_difference_check, pullback_eval, GridSpec};
use varfield_core::symkernel::rat;
use varfield_core::{numverify, varops, ymcase};

#[derive(Parser)]
#[command(
    name = "varfield",
    about = "Symbolic variational calculus on jet bundles: Euler-Lagrange forms, \
             Noether currents, Jacobi fields, and conservation-law verification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonOpts {
    /// Model file in the varfield model language.
    model: PathBuf,
    /// Output format: plain | latex | json.
    #[arg(long, default_value = "plain")]
    format: String,
    /// Hard cap on the working jet order.
    #[arg(long)]
    max_order: Option<usize>,
    /// Cooperative timeout for long derivations, in seconds.
    #[arg(long)]
    timeout_s: Option<f64>,
}

#[derive(Args, Clone)]
struct GridOpts {
    /// Per-axis sampling as lo:hi:count, comma-separated (a single spec is
    /// replicated across axes).
    #[arg(long)]
    grid: Option<String>,
    /// Absolute tolerance on the reported maximum residual.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Derive the Euler-Lagrange form of the model Lagrangian.
    Elform {
        #[command(flatten)]
        common: CommonOpts,
    },
    /// Noether current for a named vector field.
    Noether {
        #[command(flatten)]
        common: CommonOpts,
        field: String,
    },
    /// Jacobi morphism along a named vertical field.
    Jacobi {
        #[command(flatten)]
        common: CommonOpts,
        field: String,
    },
    /// Decompose an iterated variation along named fields and report the
    /// identity residual.
    Varsplit {
        #[command(flatten)]
        common: CommonOpts,
        /// Comma-separated vector-field names, innermost variation first.
        fields: String,
    },
    /// Conserved current attached to a pair of vertical fields.
    Paircurrent {
        #[command(flatten)]
        common: CommonOpts,
        field1: String,
        field2: String,
    },
    /// Numerical verification along a named section.
    Verify {
        #[command(flatten)]
        common: CommonOpts,
        /// What to verify: extremal | jacobi | paircurrent | firstvar.
        what: String,
        #[arg(long)]
        section: String,
        /// Comma-separated vector-field names where required.
        #[arg(long)]
        fields: Option<String>,
        #[command(flatten)]
        grid: GridOpts,
    },
    /// Run the Yang-Mills pipeline: Euler-Lagrange, Jacobi and pair-current
    /// reference comparisons plus the numeric conservation check.
    YmDemo {
        #[arg(long, default_value_t = 2)]
        dim: u8,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("VARFIELD_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
    }
}

fn load_model(common: &CommonOpts) -> Result<ModelSpec, String> {
    let text = std::fs::read_to_string(&common.model)
        .map_err(|e| format!("cannot read model `{}`: {e}", common.model.display()))?;
    let mut spec = ModelSpec::parse(&text).map_err(|e| e.to_string())?;
    if let Some(cap) = common.max_order {
        let needed = spec.lagrangian_density().max_jet_order();
        if cap < needed {
            return Err(format!(
                "--max-order {cap} is below the Lagrangian's jet order {needed}"
            ));
        }
        spec.ctx_mut().set_order_cap(Some(cap));
    }
    match common.timeout_s {
        Some(t) if t <= 0.0 => return Err("--timeout-s must be positive".into()),
        Some(t) => {
            let token = CancelToken::with_deadline(Instant::now() + Duration::from_secs_f64(t));
            spec.ctx_mut().set_cancel(token);
        }
        None => {}
    }
    Ok(spec)
}

fn format_of(s: &str) -> Result<RenderFormat, String> {
    s.parse()
}

fn print_form(spec: &ModelSpec, form: &Form, fmt: RenderFormat) {
    let out = match fmt {
        RenderFormat::Plain => render_form_plain(spec, form),
        RenderFormat::Latex => render_form_latex(spec, form),
        RenderFormat::Json => render_form_json(spec, form),
    };
    println!("{out}");
}

fn lookup_field<'a>(
    spec: &'a ModelSpec,
    name: &str,
) -> Result<&'a varfield_core::VecField, String> {
    spec.vecfield(name).ok_or_else(|| {
        let known: Vec<&str> = spec.vecfield_names().collect();
        format!("unknown vector field `{name}` (model declares: {})", known.join(", "))
    })
}

fn lookup_section<'a>(
    spec: &'a ModelSpec,
    name: &str,
) -> Result<&'a varfield_core::Section, String> {
    spec.section(name).ok_or_else(|| {
        let known: Vec<&str> = spec.section_names().collect();
        format!("unknown section `{name}` (model declares: {})", known.join(", "))
    })
}

fn parse_grid(spec: &ModelSpec, opts: &GridOpts, default_tol: f64) -> Result<GridSpec, String> {
    let n = spec.base_dim();
    let tol = opts.tol.unwrap_or(default_tol);
    let axes_text = opts.grid.as_deref().unwrap_or("0:1:33");
    let parts: Vec<&str> = axes_text.split(',').collect();
    let parse_axis = |s: &str| -> Result<numverify::Axis, String> {
        let bits: Vec<&str> = s.split(':').collect();
        if bits.len() != 3 {
            return Err(format!("bad grid axis `{s}` (expected lo:hi:count)"));
        }
        Ok(numverify::Axis {
            lo: bits[0].parse().map_err(|_| format!("bad grid bound `{}`", bits[0]))?,
            hi: bits[1].parse().map_err(|_| format!("bad grid bound `{}`", bits[1]))?,
            count: bits[2].parse().map_err(|_| format!("bad grid count `{}`", bits[2]))?,
        })
    };
    let axes = if parts.len() == 1 {
        vec![parse_axis(parts[0])?; n as usize]
    } else {
        parts.iter().map(|s| parse_axis(s)).collect::<Result<_, _>>()?
    };
    Ok(GridSpec { axes, tol, rel_floor: 0.0 })
}

fn split_fields(s: &str) -> Vec<String> {
    s.split(',').map(|x| x.trim().to_string()).filter(|x| !x.is_empty()).collect()
}

fn run(cli: Cli) -> Result<ExitCode, String> {
    match cli.command {
        Command::Elform { common } => {
            let spec = load_model(&common)?;
            let fmt = format_of(&common.format)?;
            let el = varops::euler_lagrange(spec.ctx(), &spec.lagrangian())
                .map_err(|e| e.to_string())?;
            print_form(&spec, el.form(), fmt);
            Ok(ExitCode::SUCCESS)
        }
        Command::Noether { common, field } => {
            let spec = load_model(&common)?;
            let fmt = format_of(&common.format)?;
            let psi = lookup_field(&spec, &field)?;
            let eps = varops::noether_current(spec.ctx(), &spec.lagrangian(), psi)
                .map_err(|e| e.to_string())?;
            print_form(&spec, eps.form(), fmt);
            Ok(ExitCode::SUCCESS)
        }
        Command::Jacobi { common, field } => {
            let spec = load_model(&common)?;
            let fmt = format_of(&common.format)?;
            let psi = lookup_field(&spec, &field)?;
            let j = varops::jacobi_morphism(spec.ctx(), &spec.lagrangian(), psi)
                .map_err(|e| e.to_string())?;
            print_form(&spec, j.form(), fmt);
            Ok(ExitCode::SUCCESS)
        }
        Command::Varsplit { common, fields } => {
            let spec = load_model(&common)?;
            let fmt = format_of(&common.format)?;
            let names = split_fields(&fields);
            if names.is_empty() {
                return Err("varsplit needs at least one field".into());
            }
            let mut list = Vec::new();
            for name in &names {
                list.push(lookup_field(&spec, name)?.clone());
            }
            let split = varops::variation_decompose(spec.ctx(), &spec.lagrangian(), &list)
                .map_err(|e| e.to_string())?;
            println!("euler term:");
            print_form(&spec, &split.euler_term, fmt);
            for (i, t) in split.current_terms.iter().enumerate() {
                println!("current term {}:", i + 1);
                print_form(&spec, t, fmt);
            }
            let residual = split.residual(spec.ctx());
            println!("identity residual:");
            print_form(&spec, &residual, fmt);
            Ok(if residual.is_zero() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Paircurrent { common, field1, field2 } => {
            let spec = load_model(&common)?;
            let fmt = format_of(&common.format)?;
            let psi1 = lookup_field(&spec, &field1)?;
            let psi2 = lookup_field(&spec, &field2)?;
            let current = varops::pair_current(spec.ctx(), &spec.lagrangian(), psi1, psi2)
                .map_err(|e| e.to_string())?;
            print_form(&spec, current.form(), fmt);
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { common, what, section, fields, grid } => {
            let spec = load_model(&common)?;
            let fmt = format_of(&common.format)?;
            let gamma = lookup_section(&spec, &section)?;
            let names = fields.as_deref().map(split_fields).unwrap_or_default();
            let report = match what.as_str() {
                "extremal" => {
                    let g = parse_grid(&spec, &grid, 1e-9)?;
                    let el = varops::euler_lagrange(spec.ctx(), &spec.lagrangian())
                        .map_err(|e| e.to_string())?;
                    let density = varops::onshell_residual(spec.ctx(), &el, gamma);
                    pullback_eval(spec.ctx(), &density, gamma, &g).map_err(|e| e.to_string())?
                }
                "jacobi" => {
                    let g = parse_grid(&spec, &grid, 1e-9)?;
                    let [name] = names.as_slice() else {
                        return Err("verify jacobi needs --fields <one name>".into());
                    };
                    let psi = lookup_field(&spec, name)?;
                    let j = varops::jacobi_morphism(spec.ctx(), &spec.lagrangian(), psi)
                        .map_err(|e| e.to_string())?;
                    let density = varops::onshell_residual(spec.ctx(), &j, gamma);
                    pullback_eval(spec.ctx(), &density, gamma, &g).map_err(|e| e.to_string())?
                }
                "paircurrent" => {
                    let g = parse_grid(&spec, &grid, 1e-9)?;
                    let [n1, n2] = names.as_slice() else {
                        return Err("verify paircurrent needs --fields <two names>".into());
                    };
                    let psi1 = lookup_field(&spec, n1)?;
                    let psi2 = lookup_field(&spec, n2)?;
                    let current =
                        varops::pair_current(spec.ctx(), &spec.lagrangian(), psi1, psi2)
                            .map_err(|e| e.to_string())?;
                    pullback_eval(spec.ctx(), current.form(), gamma, &g)
                        .map_err(|e| e.to_string())?
                }
                "firstvar" => {
                    let g = parse_grid(&spec, &grid, 1e-6)?;
                    let [name] = names.as_slice() else {
                        return Err("verify firstvar needs --fields <one name>".into());
                    };
                    let psi = lookup_field(&spec, name)?;
                    let h = rat(1, 100_000);
                    finite_difference_check(spec.ctx(), &spec.lagrangian(), gamma, psi, &h, &g)
                        .map_err(|e| e.to_string())?
                }
                other => return Err(format!("unknown verification `{other}`")),
            };
            match fmt {
                RenderFormat::Json => println!("{}", report.to_json()),
                _ => println!(
                    "max residual {:.3e} over {} samples: {}",
                    report.max_residual,
                    report.samples,
                    if report.pass { "PASS" } else { "FAIL" }
                ),
            }
            Ok(if report.pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::YmDemo { dim } => ym_demo(dim),
    }
}

fn ym_demo(dim: u8) -> Result<ExitCode, String> {
    let spec = ymcase::build_ym(dim).map_err(|e| e.to_string())?;
    let mut all_pass = true;
    let mut stage = |label: &str, pass: bool| {
        println!("{}: {label}", if pass { "PASS" } else { "FAIL" });
        all_pass &= pass;
    };

    let el = ymcase::compare_euler(&spec).map_err(|e| e.to_string())?;
    stage("Euler-Lagrange form matches the closed-form expression", el.matches());

    let jac = ymcase::compare_jacobi(&spec).map_err(|e| e.to_string())?;
    stage("Jacobi morphism matches the split-system transcription", jac.matches());

    let pair = ymcase::compare_pair_current(&spec).map_err(|e| e.to_string())?;
    let degenerate = ymcase::degenerate_pair_current(&spec).map_err(|e| e.to_string())?;
    stage(
        "pair current matches the transcription and degenerates to zero",
        pair.matches() && degenerate.is_zero(),
    );

    let flat = spec.section("flat").ok_or("model lacks a flat section")?;
    let pw1 = spec.vecfield("pw1").ok_or("model lacks pw1")?;
    let pw2 = spec.vecfield("pw2").ok_or("model lacks pw2")?;
    let current = varops::pair_current(spec.ctx(), &spec.lagrangian(), pw1, pw2)
        .map_err(|e| e.to_string())?;
    let grid = GridSpec::uniform(spec.base_dim(), 0.0, 1.0, 9, 1e-9);
    let report =
        pullback_eval(spec.ctx(), current.form(), flat, &grid).map_err(|e| e.to_string())?;
    stage(
        &format!(
            "plane-wave pair current is conserved along the flat extremal \
             (max residual {:.3e} on {} samples)",
            report.max_residual, report.samples
        ),
        report.pass,
    );

    Ok(if all_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
