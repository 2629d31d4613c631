//! Command-line entry point.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use super::config::{parse_config, RunManifest};
use super::output::{fmt_float, fmt_opt, write_diagnostics_csv, write_snapshot, write_table};
use crate::error::{Error, Result};
use crate::operators::{certify, Lemma};
use crate::rothe::{
    epsilon_sweep, mms_verify, run_with, tau_convergence_study, uniqueness_experiment, RunOptions, StepDiagnostics,
};

#[derive(Debug, Parser)]
#[command(
    name = "magheat",
    version,
    about = "Rothe solver and verification suite for the magnetic/heat model"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Single simulation: diagnostics CSV and field snapshots.
    Run(CommonArgs),
    /// Operator certification reports for every lemma.
    Verify(CommonArgs),
    /// Cut-off parameter sweep table.
    SweepEps(CommonArgs),
    /// Time-step Cauchy study table.
    ConvergeTau(CommonArgs),
    /// Perturbation growth (Gronwall) experiment.
    Uniq(CommonArgs),
    /// Manufactured-solution order table.
    Mms(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// Path to the configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Overrides study.seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides output.dir.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn module_of(e: &Error) -> &'static str {
    match e {
        Error::Config(_) | Error::Parse(_) | Error::Io { .. } => "cli_io",
        Error::Construction(_) | Error::IndexOutOfRange { .. } => "grid",
        Error::SizeMismatch { .. } | Error::InvalidArgument(_) => "discrete_ops",
        Error::Precondition(_) => "operators",
        Error::Solver { .. } => "solver",
        Error::Step { .. } => "rothe",
    }
}

/// Parses `args` (including the program name) and runs the subcommand;
/// returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error [{}]: {e}", module_of(&e));
            e.exit_code()
        }
    }
}

fn load(args: &CommonArgs) -> Result<RunManifest> {
    let mut m = parse_config(&args.config)?;
    if let Some(seed) = args.seed {
        m.study.seed = seed;
    }
    if let Some(out) = &args.out {
        m.output.dir = out.clone();
    }
    Ok(m)
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn dispatch(cmd: Command) -> Result<i32> {
    let (args, which) = match &cmd {
        Command::Run(a) => (a, "run"),
        Command::Verify(a) => (a, "verify"),
        Command::SweepEps(a) => (a, "sweep-eps"),
        Command::ConvergeTau(a) => (a, "converge-tau"),
        Command::Uniq(a) => (a, "uniq"),
        Command::Mms(a) => (a, "mms"),
    };
    let m = load(args)?;
    prepare_dir(&m.output.dir)?;
    match which {
        "run" => cmd_run(&m),
        "verify" => cmd_verify(&m),
        "sweep-eps" => cmd_sweep_eps(&m),
        "converge-tau" => cmd_converge_tau(&m),
        "uniq" => cmd_uniq(&m),
        _ => cmd_mms(&m),
    }
}

fn cmd_run(m: &RunManifest) -> Result<i32> {
    let grid = m.grid()?;
    let config = m.model_config();
    let opts = RunOptions {
        snapshot_steps: m.snapshot_steps()?,
        ..Default::default()
    };
    let mut rows: Vec<StepDiagnostics> = Vec::new();
    let every = m.output.csv_every;
    let result = run_with(&grid, &config, opts, &mut |d| {
        if d.step % every == 0 {
            rows.push(d.clone());
        }
    });
    let csv_path = m.output.dir.join("diagnostics.csv");
    write_diagnostics_csv(&csv_path, &rows)?;
    let r = result?;
    for w in &r.warnings {
        eprintln!("warning: {w}");
    }
    for s in &r.snapshots {
        write_snapshot(
            &m.output.dir.join(format!("snapshot_{:06}.txt", s.step)),
            &grid,
            &s.b,
            &s.xi,
            s.t,
        )?;
    }
    if let Some(d) = r.diagnostics.last() {
        println!(
            "steps = {} | t = {} | norm_B_L2 = {} | norm_xi_L2 = {} | lemma6_lhs = {} | lemma7_lhs = {}",
            d.step,
            fmt_float(d.t),
            fmt_float(d.norm_b_l2),
            fmt_float(d.norm_xi_l2),
            fmt_float(d.lemma6_lhs),
            fmt_float(d.lemma7_lhs)
        );
    }
    println!("diagnostics written to {}", csv_path.display());
    Ok(0)
}

fn cmd_verify(m: &RunManifest) -> Result<i32> {
    let grid = m.grid()?;
    let config = m.model_config();
    let mut text = String::new();
    let mut all_pass = true;
    for lemma in Lemma::ALL {
        let block = match certify(lemma, &grid, &config, m.study.trials, m.study.seed) {
            Ok(r) => {
                all_pass &= r.pass;
                r.to_key_value()
            }
            Err(e @ Error::Precondition(_)) => {
                all_pass = false;
                format!("lemma_id = {}\npass = false\nerror = {e}\n", lemma.id())
            }
            Err(e) => return Err(e),
        };
        print!("{block}");
        println!();
        text.push_str(&block);
        text.push('\n');
    }
    let path = m.output.dir.join("certification.txt");
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    Ok(if all_pass { 0 } else { 4 })
}

fn cmd_sweep_eps(m: &RunManifest) -> Result<i32> {
    let grid = m.grid()?;
    let sweep = epsilon_sweep(&grid, &m.model_config(), &m.study.eps_list_or_default())?;
    let rows: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                fmt_float(r.epsilon),
                fmt_float(r.cutoff_residual),
                fmt_float(r.cutoff_bound),
                fmt_opt(r.solution_diff),
                fmt_opt(sweep.residual_ratios.get(k).copied()),
                fmt_float(r.lemma7_final),
                fmt_float(r.max_source),
            ]
        })
        .collect();
    let header = [
        "epsilon",
        "cutoff_residual_L1",
        "cutoff_bound",
        "solution_diff_L2",
        "residual_ratio",
        "lemma7_lhs_final",
        "max_source",
    ];
    emit(m, "eps_sweep.csv", &header, &rows)?;
    Ok(0)
}

fn cmd_converge_tau(m: &RunManifest) -> Result<i32> {
    let grid = m.grid()?;
    let taus = m.study.tau_list_or_default(m.time.t_final);
    let study = tau_convergence_study(&grid, &m.model_config(), &taus)?;
    let rows: Vec<Vec<String>> = study
        .rows
        .iter()
        .map(|r| {
            vec![
                fmt_float(r.tau),
                fmt_float(r.diff_b),
                fmt_float(r.diff_xi),
                fmt_opt(r.order_b),
                fmt_opt(r.order_xi),
            ]
        })
        .collect();
    emit(
        m,
        "tau_study.csv",
        &["tau", "diff_B_L2", "diff_xi_L2", "order_B", "order_xi"],
        &rows,
    )?;
    let gaps: Vec<Vec<String>> = study
        .taus
        .iter()
        .zip(&study.interpolant_gap)
        .map(|(t, g)| vec![fmt_float(*t), fmt_float(g.0), fmt_float(g.1)])
        .collect();
    emit(m, "tau_interpolant_gap.csv", &["tau", "gap_B_L2", "gap_xi_L2"], &gaps)?;
    Ok(0)
}

fn cmd_uniq(m: &RunManifest) -> Result<i32> {
    let grid = m.grid()?;
    let report = uniqueness_experiment(&grid, &m.model_config(), &m.study.delta_list_or_default(), m.study.seed)?;
    let mut energy = Vec::new();
    for s in &report.series {
        for (n, (t, e)) in s.times.iter().zip(&s.energy).enumerate() {
            energy.push(vec![fmt_float(s.delta), n.to_string(), fmt_float(*t), fmt_float(*e)]);
        }
    }
    let path = m.output.dir.join("uniq_energy.csv");
    write_table(&path, &["delta", "step", "t", "energy"], &energy)?;
    let summary: Vec<Vec<String>> = report
        .series
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let ratio = report.series.get(k + 1).and_then(|next| {
                let (a, b) = (s.energy.last()?, next.energy.last()?);
                (next.delta > 0.0 && ((s.delta / next.delta) - 2.0).abs() < 1e-9).then(|| a / b)
            });
            vec![
                fmt_float(s.delta),
                fmt_opt(s.c_hat),
                fmt_float(s.sobolev_ratio),
                fmt_float(s.energy[0]),
                fmt_float(*s.energy.last().unwrap_or(&0.0)),
                fmt_opt(ratio),
            ]
        })
        .collect();
    let header = [
        "delta",
        "c_hat",
        "sobolev_ratio",
        "energy_initial",
        "energy_final",
        "final_ratio_to_half",
    ];
    emit(m, "uniq_summary.csv", &header, &summary)?;
    println!("c_hat_spread = {}", fmt_float(report.c_hat_spread));
    Ok(0)
}

fn cmd_mms(m: &RunManifest) -> Result<i32> {
    let grid = m.grid()?;
    let report = mms_verify(&grid, &m.model_config(), m.study.manufactured)?;
    let mut rows = Vec::new();
    for study in [&report.temporal, &report.spatial] {
        for l in &study.levels {
            rows.push(vec![
                study.name.to_string(),
                fmt_float(l.parameter),
                fmt_float(l.error_b),
                fmt_float(l.error_xi),
                fmt_opt(l.order_b),
                fmt_opt(l.order_xi),
            ]);
        }
    }
    let header = ["study", "parameter", "error_B", "error_xi", "order_B", "order_xi"];
    emit(m, "mms_orders.csv", &header, &rows)?;
    for s in [&report.temporal, &report.spatial] {
        println!(
            "{}: band [{}, {}] fitted_B = {:.4} fitted_xi = {:.4} pass = {}",
            s.name, s.band.0, s.band.1, s.fitted_b, s.fitted_xi, s.pass
        );
    }
    Ok(if report.pass { 0 } else { 4 })
}

/// Writes a table to the output directory and echoes it to stdout.
fn emit(m: &RunManifest, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let path = m.output.dir.join(name);
    write_table(&path, header, rows)?;
    println!("{}", header.join(","));
    for r in rows {
        println!("{}", r.join(","));
    }
    Ok(())
}
