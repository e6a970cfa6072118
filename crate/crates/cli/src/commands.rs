use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use bresse_core::evolve::simulate;
use bresse_core::fem::{assemble, sample_initial};
use bresse_core::fitting::fit_decay;
use bresse_core::fixtures::TABLE_ELEMENTS;
use bresse_core::model::{InitialKind, ScenarioConfig, Spacing};
use bresse_core::par::{self, Execution};
use bresse_core::scenario::{config_hash, load_scenario};
use bresse_core::spectral::{
    classify_decay, eigenvalues, imaginary_axis_clearance, lambda_grid, resolvent_envelope,
    resolvent_sweep_with, ResolventSample,
};
use bresse_core::table::{render_table, run_table};
use bresse_core::witness::{check_witness_scenario, resolvent_cross_check, witness_series};
use bresse_core::evolve::{EnergyTrace, TraceSample};

use crate::output::{self, write_csv, write_file, Manifest};
use crate::{Cli, Command, SpacingArg};

/// Bad invocation that is not a scenario or numerical problem.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

struct Context_ {
    cfg: Option<ScenarioConfig>,
    manifest: Manifest,
}

fn load(cli: &Cli, subcommand: &'static str, needs_scenario: bool) -> Result<Context_> {
    let g = &cli.global;
    let cfg = match &g.scenario {
        Some(path) => {
            let mut cfg = load_scenario(path)?;
            if let Some(n) = g.elements {
                cfg.n_elements = n;
            }
            if let Some(seed) = g.seed {
                cfg.run.seed = seed;
                if let InitialKind::RandomHighFreq(_) = cfg.run.initial {
                    cfg.run.initial = InitialKind::RandomHighFreq(seed);
                }
            }
            cfg.validate()?;
            Some(cfg)
        }
        None if needs_scenario => bail!(usage(format!("{subcommand} needs --scenario <path>"))),
        None => None,
    };
    fs::create_dir_all(&g.out).with_context(|| format!("cannot create {}", g.out.display()))?;
    let manifest = Manifest {
        scenario: g.scenario.clone(),
        subcommand,
        out: g.out.clone(),
        seed: cfg.as_ref().map(|c| c.run.seed).or(g.seed),
        config_hash: cfg.as_ref().map(config_hash),
    };
    manifest.write()?;
    Ok(Context_ { cfg, manifest })
}

pub fn run(cli: &Cli) -> Result<()> {
    if let Some(k) = cli.global.threads {
        par::set_threads(k).map_err(usage)?;
    }
    match &cli.command {
        Command::Simulate { tmax, dt, every } => cmd_simulate(cli, *tmax, *dt, *every),
        Command::Sweep {
            lmin,
            lmax,
            samples,
            spacing,
            envelope,
        } => cmd_sweep(cli, *lmin, *lmax, *samples, *spacing, *envelope),
        Command::Spectrum { dump } => cmd_spectrum(cli, *dump),
        Command::Witness { modes, cross_check } => cmd_witness(cli, modes.clone(), *cross_check),
        Command::Classify { input, window } => cmd_classify(input, *window),
        Command::Table => cmd_table(cli),
        Command::Report => cmd_report(&cli.global.out),
    }
}

fn cmd_simulate(cli: &Cli, tmax: Option<f64>, dt: Option<f64>, every: Option<usize>) -> Result<()> {
    let ctx = load(cli, "simulate", true)?;
    let cfg = ctx.cfg.expect("scenario loaded");
    let op = assemble(&cfg)?;
    let t_max = tmax.unwrap_or(cfg.run.t_max);
    let dt = dt.unwrap_or_else(|| cfg.dt());
    let every = every.unwrap_or(cfg.run.sample_every);
    let s0 = sample_initial(&op, &cfg.run.initial)?;
    let trace = simulate(&op, &s0, t_max, dt, every)?;
    let fit = match fit_decay(&trace, cfg.run.window_fraction) {
        Ok(f) => f.to_string(),
        Err(e) => format!("fit unavailable: {e}"),
    };
    let mut body = Vec::new();
    trace.write_csv(&mut body)?;
    let out = &cli.global.out;
    let comments = vec![
        fit.clone(),
        format!("max_balance_residual={:.3e}", trace.max_balance_residual),
        format!("scenario_hash={}", trace.scenario_hash),
    ];
    write_csv(&out.join("trace.csv"), body, &comments, &ctx.manifest.hash())?;
    write_file(&out.join("fit.txt"), &format!("{fit}\nmanifest={}\n", ctx.manifest.hash()))?;
    write_file(&out.join("energy.gp"), &output::trace_plot("trace.csv"))?;
    println!("{fit}");
    Ok(())
}

fn spacing(arg: Option<SpacingArg>, default: Spacing) -> Spacing {
    match arg {
        Some(SpacingArg::Log) => Spacing::Log,
        Some(SpacingArg::Linear) => Spacing::Linear,
        None => default,
    }
}

fn sweep_csv(samples: &[ResolventSample]) -> Vec<u8> {
    let mut s = String::from("lambda,resolvent_norm\n");
    for r in samples {
        let _ = writeln!(s, "{:.16e},{:.16e}", r.lambda, r.norm);
    }
    s.into_bytes()
}

fn cmd_sweep(
    cli: &Cli,
    lmin: Option<f64>,
    lmax: Option<f64>,
    samples: Option<usize>,
    spacing_arg: Option<SpacingArg>,
    envelope: bool,
) -> Result<()> {
    let ctx = load(cli, "sweep", true)?;
    let cfg = ctx.cfg.expect("scenario loaded");
    let op = assemble(&cfg)?;
    let cap = cfg.resolved_frequency_cap();
    let lmax = lmax.or(cfg.run.lambda_max).unwrap_or(cap);
    let lmin = lmin.or(cfg.run.lambda_min).unwrap_or(lmax / 100.0);
    let n = samples.unwrap_or(cfg.run.samples);
    let sweep = if envelope {
        if spacing_arg.is_some() {
            bail!(usage("--envelope always uses log spacing"));
        }
        resolvent_envelope(&op, lmin, lmax, n, Execution::Parallel)?
    } else {
        let sp = spacing(spacing_arg, cfg.run.spacing);
        resolvent_sweep_with(&op, lmin, lmax, n, sp, Execution::Parallel)?
    };
    let out = &cli.global.out;
    let hash = ctx.manifest.hash();
    let report = match classify_decay(&sweep) {
        Ok(c) => c.report(),
        Err(e) => format!("class=unavailable\nreason={e}\n"),
    };
    let kind = if envelope { "envelope" } else { "grid" };
    write_csv(&out.join("sweep.csv"), sweep_csv(&sweep), &[format!("sweep={kind}")], &hash)?;
    write_file(&out.join("classification.txt"), &format!("sweep={kind}\n{report}manifest={hash}\n"))?;
    write_file(&out.join("resolvent.gp"), &output::sweep_plot("sweep.csv"))?;
    print!("{report}");
    Ok(())
}

fn cmd_spectrum(cli: &Cli, dump: bool) -> Result<()> {
    let ctx = load(cli, "spectrum", true)?;
    let cfg = ctx.cfg.expect("scenario loaded");
    let op = assemble(&cfg)?;
    let out = &cli.global.out;
    if dump {
        op.dump_matrices(out)?;
    }
    let ev = eigenvalues(&op)?;
    let cap = cfg.resolved_frequency_cap();
    let grid = lambda_grid(-cap, cap, 401, Spacing::Linear);
    let clearance = imaginary_axis_clearance(&op, &grid)?;
    let mut body = String::from("re,im\n");
    for z in &ev {
        let _ = writeln!(body, "{:.16e},{:.16e}", z.re, z.im);
    }
    let hash = ctx.manifest.hash();
    write_csv(&out.join("spectrum.csv"), body.into_bytes(), &[], &hash)?;
    let max_re = ev.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let summary = format!(
        "eigenvalues={}\nmax_re={max_re:.6e}\nclearance={:.6e}\nclearance_lambda={:.6e}\nclearance_band={:.6e}\nmanifest={hash}\n",
        ev.len(),
        clearance.value,
        clearance.lambda,
        cap
    );
    write_file(&out.join("spectrum.txt"), &summary)?;
    write_file(&out.join("spectrum.gp"), &output::spectrum_plot("spectrum.csv"))?;
    print!("{summary}");
    Ok(())
}

fn cmd_witness(cli: &Cli, modes: Option<Vec<u32>>, cross_check: bool) -> Result<()> {
    let ctx = load(cli, "witness", true)?;
    let cfg = ctx.cfg.expect("scenario loaded");
    check_witness_scenario(&cfg)?;
    let modes = modes.unwrap_or_else(|| cfg.run.modes.clone());
    let report = witness_series(&modes, &cfg.params)?;
    let mut summary = report.summary();
    if cross_check {
        let op = assemble(&cfg)?;
        summary.push_str(&resolvent_cross_check(&op, &modes, &report)?.summary());
    }
    let out = &cli.global.out;
    let hash = ctx.manifest.hash();
    let mut body = Vec::new();
    report.write_csv(&mut body)?;
    write_csv(&out.join("witness.csv"), body, &[], &hash)?;
    write_file(&out.join("witness.txt"), &format!("{summary}manifest={hash}\n"))?;
    write_file(&out.join("witness.gp"), &output::witness_plot("witness.csv"))?;
    print!("{summary}");
    Ok(())
}

fn data_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
}

fn parse_row(line: &str, width: usize, path: &Path) -> Result<Vec<f64>> {
    let v: Vec<f64> = line
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("{}: bad row {line:?}", path.display()))?;
    if v.len() != width {
        bail!(usage(format!("{}: expected {width} columns in {line:?}", path.display())));
    }
    Ok(v)
}

fn cmd_classify(input: &Path, window: f64) -> Result<()> {
    let text = fs::read_to_string(input)
        .map_err(|e| usage(format!("cannot read {}: {e}", input.display())))?;
    let mut lines = data_lines(&text);
    let header = lines.next().unwrap_or("");
    match header.trim() {
        "lambda,resolvent_norm" => {
            let samples = lines
                .map(|l| {
                    let v = parse_row(l, 2, input)?;
                    Ok(ResolventSample {
                        lambda: v[0],
                        norm: v[1],
                        residual: 0.0,
                        iterations: 0,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            print!("{}", classify_decay(&samples)?.report());
        }
        "t,energy,dissipation" => {
            let samples = lines
                .map(|l| {
                    let v = parse_row(l, 3, input)?;
                    Ok(TraceSample {
                        t: v[0],
                        energy: v[1],
                        dissipation: v[2],
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let trace = EnergyTrace {
                samples,
                dt: 0.0,
                scheme: "external",
                scenario_hash: String::new(),
                max_balance_residual: 0.0,
                max_energy_increase: 0.0,
            };
            println!("{}", fit_decay(&trace, window)?);
        }
        other => bail!(usage(format!(
            "{}: unrecognized header {other:?}; expected a sweep or trace CSV",
            input.display()
        ))),
    }
    Ok(())
}

fn cmd_table(cli: &Cli) -> Result<()> {
    let ctx = load(cli, "table", false)?;
    let n = cli.global.elements.unwrap_or(TABLE_ELEMENTS);
    let outcomes = run_table(n, Execution::Parallel);
    let table = render_table(&outcomes);
    write_file(
        &cli.global.out.join("table.txt"),
        &format!("{table}elements={n}\nmanifest={}\n", ctx.manifest.hash()),
    )?;
    print!("{table}");
    Ok(())
}

fn cmd_report(out: &Path) -> Result<()> {
    let sections = [
        ("Manifest", "manifest.txt"),
        ("Energy decay fit", "fit.txt"),
        ("Resolvent classification", "classification.txt"),
        ("Spectrum", "spectrum.txt"),
        ("Witness sequence", "witness.txt"),
        ("Regime table", "table.txt"),
    ];
    let mut md = String::from("# Run report\n");
    let mut found = 0;
    for (title, file) in sections {
        if let Ok(text) = fs::read_to_string(out.join(file)) {
            found += 1;
            let _ = write!(md, "\n## {title}\n\n```\n{text}```\n");
        }
    }
    if found == 0 {
        bail!(usage(format!("no run outputs found in {}", out.display())));
    }
    write_file(&out.join("report.md"), &md)?;
    print!("{md}");
    Ok(())
}
