use std::ffi::OsString;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use super::report::{ConfigFile, ParamSet, RunReport};
use super::{export_ampl, export_lp};
use crate::autosim::{parse_trace, simulate};
use crate::builder::build;
use crate::error::{Error, Result};
use crate::netmodel::{format_usd, VariantFlags, VARIANT_NAMES};
use crate::scenarios::{
    run_capacity_what_if, run_figure8, run_redirect_sweep, run_table2, run_table3, sweep_csv,
    sweep_text, ComparisonRecord, WhatIfKind,
};
use crate::solver::{optimize, SolverConfig};

#[derive(Parser, Debug)]
#[command(
    name = "telco-placement",
    version,
    about = "Cost-optimal streaming server placement"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ScenarioName {
    Table2,
    Table3,
    Figure8,
    RedirectSweep,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ExportFormat {
    AmplMod,
    AmplDat,
    Lp,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve one instance to optimality.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated variant switches.
        #[arg(long, value_delimiter = ',', value_parser = clap::builder::PossibleValuesParser::new(VARIANT_NAMES))]
        variant: Vec<String>,
        #[arg(long, value_enum)]
        params: Option<ParamSet>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: ReportFormat,
    },
    /// Run one of the built-in experiments.
    Scenario {
        #[arg(long, value_enum)]
        name: ScenarioName,
        #[arg(long, value_enum, default_value = "effective")]
        params: ParamSet,
        /// Sweep start (figure8: clients at the site; redirect-sweep: clients per secondary).
        #[arg(long)]
        from: Option<i64>,
        #[arg(long)]
        to: Option<i64>,
        #[arg(long)]
        step: Option<i64>,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the model for an external solver.
    Export {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        format: ExportFormat,
        #[arg(long, value_enum)]
        params: Option<ParamSet>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay a demand trace through the reactive scaling loop.
    Simulate {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        params: Option<ParamSet>,
        /// JSON result; the CSV summary goes next to it with a `.csv` extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Runs the command line; returns the process exit code (0 ok, 1 invalid
/// input, 2 infeasible model).
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(Error::Infeasible) => {
            eprintln!("infeasible");
            2
        }
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Solve {
            config,
            variant,
            params,
            out,
            format,
        } => {
            let cfg = ConfigFile::parse(&read(&config)?)?;
            let (mut instance, source) = cfg.instance(params)?;
            for v in &variant {
                instance.variant.apply(v);
            }
            let violations = instance.validate();
            if !violations.is_empty() {
                return Err(Error::Invalid(violations));
            }
            let solver = SolverConfig::default();
            let o = optimize(
                &instance.topology,
                &instance.params,
                &instance.demand,
                &instance.variant,
                &solver,
            )?;
            let report = RunReport::new(&instance, source, solver, o.placement, o.stats);
            let text = match format {
                ReportFormat::Json => report.to_json(),
                ReportFormat::Csv => report.to_csv(),
                ReportFormat::Text => report.to_text(),
            };
            emit(out.as_deref(), &text)
        }
        Command::Scenario {
            name,
            params,
            from,
            to,
            step,
            format,
            out,
        } => {
            let text = run_scenario(name, params, from, to, step, format)?;
            emit(out.as_deref(), &text)
        }
        Command::Export {
            config,
            format,
            params,
            out,
        } => {
            let cfg = ConfigFile::parse(&read(&config)?)?;
            let (instance, _) = cfg.instance(params)?;
            let text = match format {
                ExportFormat::Lp => {
                    let (problem, _) = build(
                        &instance.topology,
                        &instance.params,
                        &instance.demand,
                        &instance.variant,
                    )?;
                    export_lp(&problem)
                }
                ExportFormat::AmplMod | ExportFormat::AmplDat => {
                    let (model, data) = export_ampl(
                        &instance.topology,
                        &instance.params,
                        &instance.demand,
                        &instance.variant,
                    )?;
                    if format == ExportFormat::AmplMod {
                        model
                    } else {
                        data
                    }
                }
            };
            emit(out.as_deref(), &text)
        }
        Command::Simulate {
            trace,
            config,
            params,
            out,
        } => {
            let cfg = ConfigFile::parse(&read(&config)?)?;
            let (prices, _) = cfg.params(params);
            let violations = crate::netmodel::validate(
                &cfg.topology,
                &prices,
                &crate::netmodel::Demand::zeros(&cfg.topology),
                &VariantFlags::default(),
            );
            if !violations.is_empty() {
                return Err(Error::Invalid(violations));
            }
            let events = parse_trace(&read(&trace)?)?;
            let result = simulate(&events, &cfg.topology, &prices, &cfg.sim)?;
            let json = serde_json::to_string_pretty(&result)? + "\n";
            match out {
                Some(path) => {
                    std::fs::write(&path, json)?;
                    std::fs::write(path.with_extension("csv"), result.summary_csv())?;
                }
                None => emit(None, &json)?,
            }
            Ok(())
        }
    }
}

fn comparison_csv(record: &ComparisonRecord) -> String {
    let mut out = String::from("arm,total_usd_per_h,na,np_total,ns_total,feasible\n");
    for arm in &record.arms {
        match &arm.placement {
            Some(p) => out.push_str(&format!(
                "{},{},{},{},{},true\n",
                arm.name,
                format_usd(p.total_cost),
                p.na,
                p.np_total(),
                p.ns_total()
            )),
            None => out.push_str(&format!("{},,0,0,0,false\n", arm.name)),
        }
    }
    out
}

fn run_scenario(
    name: ScenarioName,
    params: ParamSet,
    from: Option<i64>,
    to: Option<i64>,
    step: Option<i64>,
    format: ReportFormat,
) -> Result<String> {
    let prices = params.params();
    match name {
        ScenarioName::Table2 | ScenarioName::Table3 => {
            let (record, kind) = if name == ScenarioName::Table2 {
                (run_table2(&prices)?, WhatIfKind::Topology)
            } else {
                (run_table3(&prices)?, WhatIfKind::Strategy)
            };
            let what_if = run_capacity_what_if(kind, &prices)?;
            Ok(match format {
                ReportFormat::Text => format!("{}\n{}", record.to_text(), what_if.to_text()),
                ReportFormat::Csv => comparison_csv(&record),
                ReportFormat::Json => {
                    let v = json!({
                        "params": params,
                        "comparison": record,
                        "delta_cents": record.delta().map(|d| d as f64 / 1000.0),
                        "relative_delta": record.relative_delta(),
                        "what_if": what_if,
                    });
                    serde_json::to_string_pretty(&v)? + "\n"
                }
            })
        }
        ScenarioName::Figure8 => {
            let rows = run_figure8(
                from.unwrap_or(0),
                to.unwrap_or(400_000),
                step.unwrap_or(20_000),
                &prices,
            )?;
            Ok(match format {
                ReportFormat::Text => format!(
                    "Hourly cost (USD/h) at one primary site by client count\n{}",
                    sweep_text(&rows)
                ),
                ReportFormat::Csv => sweep_csv(&rows),
                ReportFormat::Json => {
                    serde_json::to_string_pretty(&json!({ "params": params, "rows": rows }))? + "\n"
                }
            })
        }
        ScenarioName::RedirectSweep => {
            let sweep = run_redirect_sweep(
                from.unwrap_or(20_000),
                to.unwrap_or(40_000),
                step.unwrap_or(1_000),
                &prices,
            )?;
            Ok(match format {
                ReportFormat::Text => format!(
                    "Layout: {}\n{}Max relative saving: {:.4}%\n",
                    sweep.layout,
                    sweep_text(&sweep.rows),
                    sweep.max_relative_saving * 100.0
                ),
                ReportFormat::Csv => sweep_csv(&sweep.rows),
                ReportFormat::Json => {
                    serde_json::to_string_pretty(&json!({ "params": params, "sweep": sweep }))?
                        + "\n"
                }
            })
        }
    }
}
