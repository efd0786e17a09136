use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gridval::case_io::PvCase;
use gridval::conic::{dump::write_program, solver_registry};
use gridval::dro_opf::{formulation_registry, solve_opf, OpfOutcome};
use gridval::harness::output;
use gridval::harness::sweep::{sweep_epsilon, training_instance};
use gridval::harness::{init_thread_pool, run_out_of_sample, EpsSpec, RunConfig, Study, SweepRow, SWEEP_LEVELS};
use gridval::uncertainty::LoadCase;
use gridval::valuation::{critical_epsilon, marginal_data_value, DataValueReport, DEFAULT_GRID, DEFAULT_OTHERS};

#[derive(Args, Clone, Default)]
struct Common {
    /// Run configuration JSON; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// MATPOWER case file (default: shipped case33bw).
    #[arg(long, global = true)]
    case: Option<PathBuf>,
    /// Scenario JSON (assets, tariffs, limits, providers).
    #[arg(long, global = true)]
    scenario: Option<PathBuf>,
    /// PV penetration case: low or high.
    #[arg(long, global = true)]
    pv: Option<PvCase>,
    /// Load case: low or high.
    #[arg(long, global = true)]
    load: Option<LoadCase>,
    /// Comma-separated hours 0-23.
    #[arg(long, alias = "hour", global = true, value_delimiter = ',')]
    hours: Option<Vec<usize>>,
    /// Uniform radius, comma-separated per-cluster radii, or `true`.
    #[arg(long, global = true)]
    eps: Option<String>,
    /// Base seed for every random draw
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Training samples per cluster.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// msw-dro or saa
    #[arg(long, global = true)]
    formulation: Option<String>,
    /// Conic solver backend (clarabel)
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one or more hours and report decisions and data value.
    Solve,
    /// Radius sweep, uniform or varying one cluster.
    Sweep {
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<f64>>,
        /// 1-based cluster to vary; the others stay at --others.
        #[arg(long)]
        vary_cluster: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_OTHERS)]
        others: f64,
    },
    /// Out-of-sample validation against a large reference draw.
    Validate {
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long)]
        full: Option<usize>,
        #[arg(long)]
        test: Option<usize>,
    },
    /// Smallest grid radius at which each family's multipliers vanish.
    CriticalEps {
        /// 1-based cluster; all clusters when omitted.
        #[arg(long)]
        cluster: Option<usize>,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_OTHERS)]
        others: f64,
    },
    /// Marginal value of data quality per cluster.
    ValueReport,
    /// Write R, B, a and optionally the assembled program.
    ExportMatrices {
        /// Also dump the program of this formulation for the first hour.
        #[arg(long)]
        program: Option<String>,
    },
}

#[derive(Parser)]
#[command(name = "gridval", version, about = "Data-quality-aware chance-constrained OPF for radial feeders")]
struct Full {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

fn run_config(c: &Common, default_eps: Option<EpsSpec>) -> Result<RunConfig> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => {
            let mut d = RunConfig::default();
            if let Some(e) = default_eps {
                d.eps = e;
            }
            d
        }
    };
    if c.case.is_some() {
        cfg.case = c.case.clone();
    }
    if c.scenario.is_some() {
        cfg.scenario = c.scenario.clone();
    }
    if c.pv.is_some() {
        cfg.pv = c.pv;
    }
    if let Some(l) = c.load {
        cfg.load = l;
    }
    if let Some(h) = &c.hours {
        cfg.hours = h.clone();
    }
    if let Some(e) = &c.eps {
        cfg.eps = EpsSpec::parse(e)?;
    }
    if let Some(s) = c.seed {
        cfg.seed = s;
    }
    if let Some(n) = c.samples {
        cfg.n_samples = n;
    }
    if let Some(f) = &c.formulation {
        cfg.formulation = f.clone();
    }
    if let Some(b) = &c.backend {
        cfg.backend = b.clone();
    }
    if c.out.is_some() {
        cfg.out = c.out.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn emit(out: &Option<PathBuf>, name: &str, content: &str) -> Result<()> {
    if let Some(dir) = out {
        output::write(dir, name, content)?;
    }
    Ok(())
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

#[derive(Serialize)]
struct HourResult {
    hour: usize,
    eps: Vec<f64>,
    outcome: OpfOutcome,
    value: DataValueReport,
}

fn solve_hours(study: &Study, cfg: &RunConfig) -> Result<Vec<HourResult>> {
    let forms = formulation_registry();
    let backends = solver_registry();
    let form = forms.get(&cfg.formulation)?;
    let backend = backends.get(&cfg.backend)?;
    let mut out = Vec::new();
    for &hour in &cfg.hours {
        let eps = cfg.eps.resolve(study.n_clusters(), None)?;
        let inst = training_instance(study, cfg, hour, eps.clone())?;
        let solved = solve_opf(&inst, form, backend, &cfg.solver()).with_context(|| format!("hour {hour}"))?;
        let value = marginal_data_value(&solved.solution, &solved.built, &eps)?;
        out.push(HourResult {
            hour,
            eps,
            outcome: solved.outcome,
            value,
        });
    }
    Ok(out)
}

fn as_rows(results: &[HourResult]) -> Vec<SweepRow> {
    results
        .iter()
        .map(|r| SweepRow {
            hour: r.hour,
            level: r.eps.iter().copied().fold(f64::NAN, f64::max),
            eps: r.eps.clone(),
            objective: Some(r.outcome.objective),
            report: Some(r.value.clone()),
            error: None,
        })
        .collect()
}

fn write_matrix(dir: &Path, name: &str, rows: impl Iterator<Item = Vec<f64>>) -> Result<()> {
    let mut s = String::new();
    for r in rows {
        let row: Vec<String> = r.iter().map(|x| x.to_string()).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    output::write(dir, name, &s)?;
    Ok(())
}

fn run(cli: Full) -> Result<()> {
    init_thread_pool();
    let c = &cli.common;
    match cli.cmd {
        Cmd::Solve => {
            let cfg = run_config(c, None)?;
            let study = cfg.study()?;
            let results = solve_hours(&study, &cfg)?;
            let rows = as_rows(&results);
            emit(&cfg.out, "objective.csv", &output::objective_csv(&rows))?;
            emit(&cfg.out, "mu.csv", &output::mu_csv(&rows))?;
            emit(&cfg.out, "lambda.csv", &output::lambda_csv(&study, &rows))?;
            emit(&cfg.out, "solution.json", &serde_json::to_string_pretty(&results)?)?;
            print_json(&results)
        }
        Cmd::ValueReport => {
            let cfg = run_config(c, None)?;
            let study = cfg.study()?;
            let results = solve_hours(&study, &cfg)?;
            let rows = as_rows(&results);
            emit(&cfg.out, "mu.csv", &output::mu_csv(&rows))?;
            emit(&cfg.out, "lambda.csv", &output::lambda_csv(&study, &rows))?;
            let reports: Vec<_> = results.iter().map(|r| (r.hour, &r.value)).collect();
            print_json(&reports)
        }
        Cmd::Sweep {
            levels,
            vary_cluster,
            others,
        } => {
            let cfg = run_config(c, None)?;
            let study = cfg.study()?;
            let levels = levels.unwrap_or_else(|| SWEEP_LEVELS.to_vec());
            let vary = match vary_cluster {
                Some(0) => bail!("clusters are numbered from 1"),
                Some(f) => Some(f - 1),
                None => None,
            };
            let mut rows = Vec::new();
            for &hour in &cfg.hours {
                rows.extend(sweep_epsilon(&study, &cfg, hour, &levels, vary, others)?);
            }
            emit(&cfg.out, "objective.csv", &output::objective_csv(&rows))?;
            emit(&cfg.out, "mu.csv", &output::mu_csv(&rows))?;
            emit(&cfg.out, "lambda.csv", &output::lambda_csv(&study, &rows))?;
            print_json(&rows)
        }
        Cmd::Validate { replicates, full, test } => {
            let mut cfg = run_config(c, Some(EpsSpec::True))?;
            cfg.replicates = replicates;
            if let Some(n) = full {
                cfg.n_full = n;
            }
            if let Some(n) = test {
                cfg.n_test = n;
            }
            cfg.validate()?;
            let study = cfg.study()?;
            let mut bundles = Vec::new();
            for &hour in &cfg.hours {
                for rep in 0..cfg.replicates {
                    bundles.push(run_out_of_sample(&study, &cfg, hour, rep)?);
                }
            }
            emit(&cfg.out, "cost_oos.csv", &output::cost_oos_csv(&bundles))?;
            emit(&cfg.out, "voltages_oos.csv", &output::voltages_oos_csv(&study, &bundles))?;
            emit(&cfg.out, "oos_summary.csv", &output::oos_summary_csv(&bundles))?;
            emit(&cfg.out, "mu.csv", &output::oos_mu_csv(&bundles))?;
            #[derive(Serialize)]
            struct Summary<'a> {
                hour: usize,
                replicate: usize,
                true_eps: &'a [f64],
                eps: &'a [f64],
                dro_objective: f64,
                dro_mean_cost: f64,
                dro_violation_rate: f64,
                saa_objective: f64,
                saa_mean_cost: f64,
                saa_violation_rate: f64,
            }
            let summary: Vec<_> = bundles
                .iter()
                .map(|b| Summary {
                    hour: b.hour,
                    replicate: b.replicate,
                    true_eps: &b.true_eps,
                    eps: &b.eps,
                    dro_objective: b.dro.objective,
                    dro_mean_cost: b.dro.mean_cost,
                    dro_violation_rate: b.dro.violation_rate,
                    saa_objective: b.saa.objective,
                    saa_mean_cost: b.saa.mean_cost,
                    saa_violation_rate: b.saa.violation_rate,
                })
                .collect();
            print_json(&summary)
        }
        Cmd::CriticalEps { cluster, grid, others } => {
            let cfg = run_config(c, None)?;
            let study = cfg.study()?;
            let grid = grid.unwrap_or_else(|| DEFAULT_GRID.to_vec());
            let clusters: Vec<usize> = match cluster {
                Some(0) => bail!("clusters are numbered from 1"),
                Some(f) if f > study.n_clusters() => bail!("cluster {f} does not exist"),
                Some(f) => vec![f - 1],
                None => (0..study.n_clusters()).collect(),
            };
            let forms = formulation_registry();
            let backends = solver_registry();
            let hour = *cfg.hours.first().ok_or_else(|| anyhow!("no hour"))?;
            let inst = training_instance(&study, &cfg, hour, vec![others; study.n_clusters()])?;
            let mut reports = Vec::new();
            for f in clusters {
                reports.push(critical_epsilon(
                    &inst,
                    f,
                    &grid,
                    others,
                    forms.get(&cfg.formulation)?,
                    backends.get(&cfg.backend)?,
                    &cfg.solver(),
                )?);
            }
            emit(&cfg.out, "critical_eps.csv", &output::critical_eps_csv(&reports))?;
            print_json(&reports)
        }
        Cmd::ExportMatrices { program } => {
            let cfg = run_config(c, None)?;
            let study = cfg.study()?;
            let dir = cfg.out.clone().ok_or_else(|| anyhow!("export-matrices needs --out"))?;
            write_matrix(&dir, "R.csv", study.sens.r.row_iter().map(|r| r.iter().copied().collect()))?;
            write_matrix(&dir, "B.csv", study.sens.b.row_iter().map(|r| r.iter().copied().collect()))?;
            let a: Vec<String> = study.sens.a.iter().map(|v| v.to_string()).collect();
            output::write(&dir, "a.csv", &(a.join("\n") + "\n"))?;
            let buses: Vec<String> = study.net.nodes.iter().map(|n| n.bus_id.to_string()).collect();
            output::write(&dir, "buses.csv", &(buses.join("\n") + "\n"))?;
            if let Some(name) = program {
                let forms = formulation_registry();
                let hour = cfg.hours[0];
                let eps = cfg.eps.resolve(study.n_clusters(), None)?;
                let inst = training_instance(&study, &cfg, hour, eps)?;
                let built = forms.get(&name)?.build(&inst)?;
                let mut buf = Vec::new();
                write_program(&mut buf, &built.program)?;
                output::write(&dir, &format!("program_{name}.txt"), &String::from_utf8(buf)?)?;
            }
            print_json(&serde_json::json!({ "out": dir }))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Full::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                e.exit();
            }
            eprintln!("{}", serde_json::json!({ "error": e.to_string().trim(), "kind": "usage" }));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", serde_json::json!({ "error": format!("{e:#}"), "kind": "runtime" }));
            ExitCode::from(1)
        }
    }
}
