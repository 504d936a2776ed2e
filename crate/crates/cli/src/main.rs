//! Command-line front end: parse problem specs, run the spectral and
//! consistency analyses, drive the discrete solver experiments, and emit
//! JSON/CSV reports.
//!
//! Exit codes: 0 on success (whatever the verdict), 2 on structural errors
//! (bad spec, bad grid, unknown ids, I/O), 3 on numerical failures
//! (contour on a zero, solver stagnation, ambiguous classification).

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use nlsmooth::catalog;
use nlsmooth::classifier::{self, ClassifyError};
use nlsmooth::consistency::{check_boundary_data, check_coefficient_condition, dependency_betas, hat_operators};
use nlsmooth::geometry::freeze;
use nlsmooth::pencil::{Band, HalfPlaneCase, Pencil, PencilError, Properness};
use nlsmooth::report;
use nlsmooth::solver::{self, ExperimentConfig, SolverError};
use nlsmooth::{ProblemSpec, Scalar};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

const EXIT_STRUCTURAL: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "nlsmooth", version, about = "Smoothness classification and discrete solution of nonlocal elliptic problems on plane angles")]
struct Cli {
    /// Problem spec as a JSON document.
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Output directory for reports and CSV files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps and experiment batches.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed recorded in the run manifest (for randomized suites).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ProblemSource {
    /// Built-in example id (see `examples list`).
    #[arg(long)]
    example: Option<String>,
    /// Half-plane family: weight sum s = b1(0) + b2(0), split evenly.
    #[arg(long, allow_hyphen_values = true)]
    s: Option<f64>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Band spectrum of the model pencil, per orbit.
    Spectrum {
        #[command(flatten)]
        source: ProblemSource,
        /// Real-part search window.
        #[arg(long, default_value_t = 8.0)]
        window: f64,
    },
    /// Preserves / Border / Violates verdict with obligations and witness.
    Classify {
        #[command(flatten)]
        source: ProblemSource,
    },
    /// Consistency machinery: beta tables, data membership, coefficient
    /// conditions.
    Consistency {
        #[command(flatten)]
        source: ProblemSource,
    },
    /// Run a shipped solver experiment.
    Solve {
        /// Experiment id (see `examples list`).
        #[arg(long)]
        experiment: String,
        #[arg(long)]
        n_omega: Option<usize>,
        #[arg(long)]
        n_t: Option<usize>,
        /// Truncation depth T (inner radius e^{-T}).
        #[arg(long)]
        depth: Option<f64>,
    },
    /// Sweep the half-plane family over the weight sum s.
    Sweep {
        #[arg(long, default_value_t = -3.0, allow_hyphen_values = true)]
        from: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        to: f64,
        #[arg(long, default_value_t = 0.1)]
        step: f64,
    },
    /// Generate the singular witness for a violating problem.
    Witness {
        #[command(flatten)]
        source: ProblemSource,
    },
    /// List shipped example and experiment ids.
    Examples {
        #[command(subcommand)]
        what: ExamplesCmd,
    },
}

#[derive(Subcommand, Clone)]
enum ExamplesCmd {
    List,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(classify_exit(&e))
        }
    }
}

/// Structural problems exit 2, numerical failures exit 3.
fn classify_exit(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(pe) = cause.downcast_ref::<PencilError>() {
            let _ = pe;
            return EXIT_NUMERICAL;
        }
        if let Some(se) = cause.downcast_ref::<SolverError>() {
            return match se {
                SolverError::GridDivisibility(_)
                | SolverError::UnknownExperiment(_)
                | SolverError::NotNested
                | SolverError::OutsideGrid(_)
                | SolverError::ExteriorImageOutside { .. } => EXIT_STRUCTURAL,
                _ => EXIT_NUMERICAL,
            };
        }
        if let Some(ce) = cause.downcast_ref::<ClassifyError>() {
            return match ce {
                ClassifyError::Geometry(_) => EXIT_STRUCTURAL,
                _ => EXIT_NUMERICAL,
            };
        }
        if cause.downcast_ref::<nlsmooth::geometry::GeometryError>().is_some() {
            return EXIT_STRUCTURAL;
        }
        if cause.downcast_ref::<nlsmooth::consistency::ConsistencyError>().is_some() {
            return EXIT_NUMERICAL;
        }
    }
    EXIT_STRUCTURAL
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    write_manifest(cli)?;
    match &cli.command {
        Command::Spectrum { source, window } => cmd_spectrum(cli, source, *window),
        Command::Classify { source } => cmd_classify(cli, source),
        Command::Consistency { source } => cmd_consistency(cli, source),
        Command::Solve { experiment, n_omega, n_t, depth } => {
            cmd_solve(cli, experiment, *n_omega, *n_t, *depth)
        }
        Command::Sweep { from, to, step } => cmd_sweep(cli, *from, *to, *step),
        Command::Witness { source } => cmd_witness(cli, source),
        Command::Examples { what: ExamplesCmd::List } => {
            println!("example specs:");
            for id in catalog::EXAMPLE_IDS {
                println!("  {id}");
            }
            println!("solver experiments:");
            for id in catalog::EXPERIMENT_IDS {
                println!("  {id}");
            }
            Ok(())
        }
    }
}

fn write_manifest(cli: &Cli) -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let manifest = serde_json::json!({
        "tool": "nlsmooth",
        "version": env!("CARGO_PKG_VERSION"),
        "command": args,
        "spec": cli.spec.as_ref().map(|p| p.display().to_string()),
        "out": cli.out.display().to_string(),
        "seed": cli.seed,
    });
    write_file(&cli.out.join("manifest.json"), &pretty(&manifest))
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

fn write_file(path: &Path, content: &str) -> anyhow::Result<()> {
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))
}

fn load_spec(cli: &Cli, source: &ProblemSource) -> anyhow::Result<ProblemSpec> {
    let spec = match (&cli.spec, &source.example, source.s) {
        (Some(path), None, None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading spec {}", path.display()))?;
            let spec: ProblemSpec =
                serde_json::from_str(&text).context("parsing problem spec JSON")?;
            spec
        }
        (None, Some(id), None) => catalog::example_spec(id)
            .with_context(|| format!("unknown example id `{id}`"))?,
        (None, None, Some(s)) => catalog::s_family_spec(s),
        (None, None, None) => anyhow::bail!("provide one of --spec, --example, --s"),
        _ => anyhow::bail!("options --spec, --example, --s are mutually exclusive"),
    };
    spec.validate().context("spec validation failed")?;
    Ok(spec)
}

fn analyze_spec(
    spec: &ProblemSpec,
    window: f64,
) -> anyhow::Result<Vec<nlsmooth::SpectralReport>> {
    let models = freeze(spec).context("freezing spec")?;
    let mut reports = Vec::new();
    for model in &models {
        let pencil = Pencil::new(model);
        let report = pencil
            .analyze(Band::regularity(), (-window, window))
            .with_context(|| format!("spectral analysis of orbit {}", model.orbit_id))?;
        reports.push(report);
    }
    Ok(reports)
}

fn cmd_spectrum(cli: &Cli, source: &ProblemSource, window: f64) -> anyhow::Result<()> {
    let spec = load_spec(cli, source)?;
    let reports = analyze_spec(&spec, window)?;
    let json = report::spectral_json(&reports);
    write_file(&cli.out.join("spectrum.json"), &pretty(&json))?;
    // full reports (profiles included) for downstream tooling
    write_file(
        &cli.out.join("spectrum_full.json"),
        &pretty(&serde_json::to_value(&reports)?),
    )?;
    write_file(&cli.out.join("spectrum.csv"), &report::spectral_csv(&reports))?;
    for rep in &reports {
        if rep.window_warning {
            eprintln!(
                "warning: orbit {}: eigenvalue count changes when the real-part window doubles; \
                 rerun with a larger --window",
                rep.orbit_id
            );
        }
        println!(
            "orbit {}: {} eigenvalue(s) in the band, argument-principle count {}",
            rep.orbit_id,
            rep.eigenvalues.len(),
            rep.argument_principle_count
        );
        for e in &rep.eigenvalues {
            println!(
                "  lambda = {:+.9} {:+.9}i  mult {}  {}",
                e.lambda.re,
                e.lambda.im,
                e.algebraic_multiplicity,
                match e.proper {
                    Properness::Proper => "proper",
                    Properness::Improper => "improper",
                    Properness::Ambiguous => "ambiguous",
                }
            );
        }
    }
    println!("wrote {}", cli.out.join("spectrum.{json,csv}").display());
    Ok(())
}

fn cmd_classify(cli: &Cli, source: &ProblemSource) -> anyhow::Result<()> {
    let spec = load_spec(cli, source)?;
    let verdict = classifier::classify(&spec)?;
    let mut witness_path = None;
    if let Some(w) = &verdict.witness {
        let profiles = cli.out.join("witness_profiles.csv");
        write_file(&profiles, &report::witness_profiles_csv(w))?;
        write_file(&cli.out.join("witness_forcing.csv"), &report::witness_forcing_csv(w))?;
        witness_path = Some(profiles.display().to_string());
    }
    let json = report::verdict_json(&verdict, witness_path.as_deref());
    write_file(&cli.out.join("verdict.json"), &pretty(&json))?;

    println!("verdict: {}", report::verdict_kind_str(verdict.kind));
    for rep in &verdict.per_orbit {
        let spectrum: Vec<String> = rep
            .eigenvalues
            .iter()
            .map(|e| {
                format!(
                    "{:+.6}{:+.6}i ({}, {})",
                    e.lambda.re,
                    e.lambda.im,
                    e.algebraic_multiplicity,
                    match e.proper {
                        Properness::Proper => "proper",
                        Properness::Improper => "improper",
                        Properness::Ambiguous => "ambiguous",
                    }
                )
            })
            .collect();
        println!(
            "  orbit {}: band spectrum [{}]",
            rep.orbit_id,
            spectrum.join(", ")
        );
    }
    for o in &verdict.obligations {
        println!(
            "  obligation (orbit {}, {:?}): {:?} -- {}",
            o.orbit_id, o.kind, o.status, o.description
        );
    }
    if let Some(w) = &verdict.witness {
        println!(
            "  witness: orbit {}, lambda0 = {:+.9}{:+.9}i, log power {}, residuals {:.2e}/{:.2e}",
            w.orbit_id,
            w.lambda0.re,
            w.lambda0.im,
            w.log_power,
            w.interior_residual,
            w.boundary_residual
        );
    }
    println!("wrote {}", cli.out.join("verdict.json").display());
    Ok(())
}

fn cmd_consistency(cli: &Cli, source: &ProblemSource) -> anyhow::Result<()> {
    let spec = load_spec(cli, source)?;
    let models = freeze(&spec)?;
    let frozen = ProblemSpec { orbits: models.clone(), ..spec.clone() };
    let mut out_json = Vec::new();
    for model in &models {
        let hat = hat_operators(model);
        let betas = match dependency_betas(&hat) {
            Ok(b) => b,
            Err(nlsmooth::consistency::ConsistencyError::NoDependence) => {
                println!(
                    "orbit {}: differentiated operators are linearly independent; \
                     no consistency condition applies",
                    model.orbit_id
                );
                continue;
            }
            Err(e) => return Err(e.into()),
        };
        let rhs = check_boundary_data(&frozen, std::slice::from_ref(&betas))?;
        let coef = check_coefficient_condition(&frozen, &betas)?;
        for rep in &rhs {
            write_file(
                &cli.out.join(format!("consistency_orbit{}.csv", rep.orbit_id)),
                &report::consistency_csv(rep, frozen.truncation.epsilon),
            )?;
        }
        println!(
            "orbit {}: rhs class {:?}, coefficient condition {:?}",
            model.orbit_id,
            rhs.first().map(|r| r.aggregate),
            coef.verdict
        );
        out_json.push(serde_json::json!({
            "orbit_id": model.orbit_id,
            "beta_table": serde_json::to_value(&betas)?,
            "rhs": serde_json::to_value(&rhs)?,
            "coefficient_condition": serde_json::to_value(&coef)?,
        }));
    }
    write_file(
        &cli.out.join("consistency.json"),
        &pretty(&serde_json::Value::Array(out_json)),
    )?;
    println!("wrote {}", cli.out.join("consistency.json").display());
    Ok(())
}

fn cmd_solve(
    cli: &Cli,
    experiment: &str,
    n_omega: Option<usize>,
    n_t: Option<usize>,
    depth: Option<f64>,
) -> anyhow::Result<()> {
    let cfg = match (n_omega, n_t, depth) {
        (None, None, None) => None,
        _ => {
            let d: ExperimentConfig<Scalar> = ExperimentConfig::default();
            Some(ExperimentConfig {
                n_omega: n_omega.unwrap_or(d.n_omega),
                n_t: n_t.unwrap_or(d.n_t),
                t_depth: depth.unwrap_or(d.t_depth),
            })
        }
    };
    let run = solver::run_experiment::<Scalar>(experiment, cfg)?;
    write_file(
        &cli.out.join("experiment.json"),
        &pretty(&serde_json::to_value(&run.report)?),
    )?;
    for (i, sol) in run.solutions.iter().enumerate() {
        write_file(&cli.out.join(format!("solution_{i}.csv")), &report::solution_csv(sol))?;
        let bin_name = format!("solution_{i}.f64");
        std::fs::write(cli.out.join(&bin_name), report::solution_binary(sol))?;
        write_file(
            &cli.out.join(format!("solution_{i}.meta.json")),
            &pretty(&report::solution_sidecar(sol, &bin_name)),
        )?;
    }
    println!("experiment {experiment}:");
    println!("{}", pretty(&serde_json::to_value(&run.report)?));
    println!("wrote {}", cli.out.join("experiment.json").display());
    Ok(())
}

fn cmd_sweep(cli: &Cli, from: f64, to: f64, step: f64) -> anyhow::Result<()> {
    anyhow::ensure!(step > 0.0 && to >= from, "need step > 0 and to >= from");
    let n = ((to - from) / step).round() as usize;
    use rayon::prelude::*;
    let rows: Vec<anyhow::Result<(f64, usize, Option<f64>, String)>> = (0..=n)
        .into_par_iter()
        .map(|i| {
            // snap to 12 decimals so grid values like 0.0 stay exact
            let s = ((from + step * i as f64) * 1e12).round() / 1e12;
            let model = catalog::halfpi_model(0, s / 2.0, s / 2.0);
            let pencil = Pencil::new(&model);
            let report = pencil
                .analyze(Band::regularity(), (-8.0, 8.0))
                .map_err(anyhow::Error::from)?;
            let label = match nlsmooth::pencil::laplace_halfpi_oracle(s) {
                HalfPlaneCase::NoEigenvalues => "case1",
                HalfPlaneCase::ProperMinusI => "case2",
                HalfPlaneCase::Improper { .. } => "case3",
            };
            let im_min = report
                .eigenvalues
                .iter()
                .map(|e| e.lambda.im)
                .fold(None, |acc: Option<f64>, im| {
                    Some(acc.map_or(im, |a| a.min(im)))
                });
            Ok((s, report.total_multiplicity(), im_min, label.to_string()))
        })
        .collect();
    let rows: Vec<(f64, usize, Option<f64>, String)> =
        rows.into_iter().collect::<anyhow::Result<_>>()?;
    write_file(&cli.out.join("sweep.csv"), &report::sweep_csv(&rows))?;
    println!("swept {} values of s; wrote {}", rows.len(), cli.out.join("sweep.csv").display());
    Ok(())
}

fn cmd_witness(cli: &Cli, source: &ProblemSource) -> anyhow::Result<()> {
    let spec = load_spec(cli, source)?;
    let verdict = classifier::classify(&spec)?;
    let w = verdict.witness.as_ref().with_context(|| {
        format!(
            "verdict is {}; a singular witness exists only for Violates",
            report::verdict_kind_str(verdict.kind)
        )
    })?;
    write_file(&cli.out.join("witness_profiles.csv"), &report::witness_profiles_csv(w))?;
    write_file(&cli.out.join("witness_forcing.csv"), &report::witness_forcing_csv(w))?;
    let summary = serde_json::json!({
        "orbit_id": w.orbit_id,
        "lambda0": { "re": w.lambda0.re, "im": w.lambda0.im },
        "log_power": w.log_power,
        "cutoff_radius": w.cutoff_radius,
        "interior_residual": w.interior_residual,
        "boundary_residual": w.boundary_residual,
        "w2_dyadic": w.w2_dyadic,
    });
    write_file(&cli.out.join("witness.json"), &pretty(&summary))?;
    println!(
        "witness at orbit {}: lambda0 = {:+.9}{:+.9}i, residuals {:.2e} / {:.2e}",
        w.orbit_id, w.lambda0.re, w.lambda0.im, w.interior_residual, w.boundary_residual
    );
    println!("wrote {}", cli.out.join("witness.json").display());
    Ok(())
}
