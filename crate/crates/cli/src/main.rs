use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use segmarket_core::io::{
    audit_equilibrium, digest, fmt_float, load_dgp, load_market, write_coexistence_csv, write_coverage_csv,
    write_equilibrium_csv, write_experiment_csv, write_placebo_csv, write_regression_csv, write_welfare_csv,
    MarketFile, OutputDir,
};
use segmarket_core::market::MarketConfig;
use segmarket_core::panel::{
    coverage_study, density_regression, did_estimate, dynamic_density_regression, generate_panel, placebo_test,
    DgpSpec, EventFamily, Outcome, PanelDataset,
};
use segmarket_core::solver::{solve, SolverSettings};
use segmarket_core::statics::{
    coexistence_scan, plan, run_planned, scenarios, ClaimVerdict, ExperimentKind, COEXISTENCE_GAPS,
    COEXISTENCE_RATIOS,
};
use segmarket_core::{Error, Result};

#[derive(Parser)]
#[command(name = "segmarket", version, about = "Segmented brokerage markets: equilibria, comparative statics and panel DID")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one market and write the equilibrium.
    Solve {
        #[command(flatten)]
        market: MarketSource,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run comparative-statics experiments on a scenario.
    Experiment {
        /// Scenario id; with --config it only names the run.
        scenario: String,
        /// Market config file replacing the built-in scenario.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Restrict to these experiments (repeatable). Default: the full plan.
        #[arg(long, value_enum)]
        kind: Vec<Kind>,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Synthetic store panels and DID estimation.
    Panel {
        #[command(subcommand)]
        command: PanelCommand,
    },
    /// Validate a config and audit its equilibrium.
    Check {
        #[command(flatten)]
        market: MarketSource,
        /// Validate a panel DGP spec instead of a market.
        #[arg(long, conflicts_with_all = ["config", "scenario"])]
        dgp: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the built-in scenarios as config files.
    Scenarios {
        #[arg(long, default_value = "scenarios")]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum PanelCommand {
    /// Generate a panel and its store map.
    Gen {
        #[command(flatten)]
        dgp: DgpSource,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Event-study, static, density and dynamic regressions.
    Estimate {
        #[command(flatten)]
        data: PanelSource,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Re-estimate with event years shuffled across units.
    Placebo {
        #[command(flatten)]
        data: PanelSource,
        #[arg(long, value_enum, default_value_t = Family::Entry)]
        family: Family,
        #[arg(long, default_value_t = 500)]
        reps: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Confidence-interval coverage of the event-study terms over fresh panels.
    Coverage {
        #[command(flatten)]
        dgp: DgpSource,
        #[arg(long, value_enum, default_value_t = Family::Entry)]
        family: Family,
        #[arg(long, default_value_t = 200)]
        reps: usize,
        #[command(flatten)]
        run: RunArgs,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("market").args(["config", "scenario"])))]
struct MarketSource {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in scenario id.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Args)]
struct DgpSource {
    /// DGP spec file; absent keys take defaults.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Entry)]
    preset: Preset,
}

#[derive(Args)]
struct PanelSource {
    /// Existing panel CSV. Without it a panel is generated from the DGP.
    #[arg(long)]
    panel: Option<PathBuf>,
    #[command(flatten)]
    dgp: DgpSource,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Kind {
    #[value(name = "efficiency_shock")]
    EfficiencyShock,
    #[value(name = "group_efficiency_shock")]
    GroupEfficiencyShock,
    #[value(name = "consolidation_event")]
    ConsolidationEvent,
    #[value(name = "searcher_shock")]
    SearcherShock,
    #[value(name = "coexistence_scan")]
    CoexistenceScan,
}

impl Kind {
    fn matches(self, kind: ExperimentKind) -> bool {
        matches!(
            (self, kind),
            (Kind::EfficiencyShock, ExperimentKind::EfficiencyShock)
                | (Kind::GroupEfficiencyShock, ExperimentKind::GroupEfficiencyShock)
                | (Kind::ConsolidationEvent, ExperimentKind::ConsolidationEvent)
                | (Kind::SearcherShock, ExperimentKind::SearcherShock)
        )
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Entry,
    Consolidation,
}

impl From<Family> for EventFamily {
    fn from(f: Family) -> Self {
        match f {
            Family::Entry => EventFamily::Entry,
            Family::Consolidation => EventFamily::Consolidation,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// Entry effects only.
    Entry,
    /// Consolidation effects only.
    Consolidation,
    /// No injected effects.
    Null,
}

/// How a run ended, short of an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Status {
    Ok,
    NotConverged,
    Violation,
}

impl Status {
    fn code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::NotConverged => 2,
            Status::Violation => 3,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    match run(cli.command) {
        Ok(status) => ExitCode::from(status.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SEGMARKET_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Parse(format!("SEGMARKET_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Parse(e.to_string()))
}

fn run(command: Command) -> Result<Status> {
    match command {
        Command::Solve { market, run } => cmd_solve(&market, &run),
        Command::Experiment {
            scenario,
            config,
            kind,
            run,
        } => cmd_experiment(&scenario, config.as_deref(), &kind, &run),
        Command::Panel { command } => match command {
            PanelCommand::Gen { dgp, run } => cmd_panel_gen(&dgp, &run),
            PanelCommand::Estimate { data, run } => cmd_panel_estimate(&data, &run),
            PanelCommand::Placebo {
                data,
                family,
                reps,
                run,
            } => cmd_panel_placebo(&data, family.into(), reps, &run),
            PanelCommand::Coverage {
                dgp,
                family,
                reps,
                run,
            } => cmd_panel_coverage(&dgp, family.into(), reps, &run),
        },
        Command::Check {
            market,
            dgp,
            seed,
            out,
        } => cmd_check(&market, dgp.as_deref(), seed, out.as_deref()),
        Command::Scenarios { out } => cmd_scenarios(&out),
    }
}

struct Market {
    name: String,
    config: MarketConfig,
    solver: SolverSettings,
    echo: serde_json::Value,
}

impl Market {
    fn from_source(src: &MarketSource) -> Result<Self> {
        match (&src.config, &src.scenario) {
            (Some(path), _) => Self::from_file(path, &path.display().to_string()),
            (None, Some(id)) => Self::from_scenario(id),
            (None, None) => Err(Error::Config {
                key: "--config".into(),
                constraint: "one of --config or --scenario is required".into(),
            }),
        }
    }

    fn from_file(path: &Path, name: &str) -> Result<Self> {
        let loaded = load_market(path)?;
        Ok(Self {
            name: name.to_string(),
            config: loaded.config,
            solver: loaded.solver,
            echo: loaded.echo,
        })
    }

    fn from_scenario(id: &str) -> Result<Self> {
        let config = scenarios::by_id(id)?;
        let solver = SolverSettings::default();
        let echo = serde_json::to_value(MarketFile::from_config(&config, &solver))?;
        Ok(Self {
            name: id.to_string(),
            config,
            solver,
            echo,
        })
    }

    /// Digest of the canonical, defaults-filled config.
    fn digest(&self) -> String {
        digest(self.echo.to_string().as_bytes())
    }

    fn write_echo(&self, out: &mut OutputDir) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.echo)?;
        out.write("config.json", |w| Ok(writeln!(w, "{text}")?))
    }
}

fn write_summary(out: &mut OutputDir, summary: &str) -> Result<()> {
    print!("{summary}");
    out.write("summary.txt", |w| Ok(w.write_all(summary.as_bytes())?))
}

fn cmd_solve(src: &MarketSource, run: &RunArgs) -> Result<Status> {
    let market = Market::from_source(src)?;
    let eq = solve(&market.config, &market.solver, run.seed)?;
    let audit = audit_equilibrium(&market.config, &eq)?;
    let mut out = OutputDir::create(&run.out)?;
    market.write_echo(&mut out)?;
    out.write("equilibrium.csv", |w| write_equilibrium_csv(w, &eq))?;
    out.write("welfare.csv", |w| write_welfare_csv(w, &market.config, &eq))?;

    let mut s = String::new();
    let _ = writeln!(s, "market: {}", market.name);
    let _ = writeln!(
        s,
        "converged: {} after {} sweeps (cycle: {}, multiplicity: {})",
        eq.converged, eq.sweeps_used, eq.cycle_detected, eq.multiplicity
    );
    let _ = writeln!(s, "max unilateral gain: {}", fmt_float(eq.max_unilateral_gain));
    let _ = writeln!(s, "total welfare: {}", fmt_float(eq.outcome.welfare.total_welfare));
    for w in market.config.warnings() {
        let _ = writeln!(s, "warning: {w}");
    }
    let status = audit_status(&audit.violations, eq.converged, &mut s);
    write_summary(&mut out, &s)?;
    out.finish("solve", &market.digest(), run.seed)?;
    Ok(status)
}

fn audit_status(violations: &[String], converged: bool, s: &mut String) -> Status {
    for v in violations {
        let _ = writeln!(s, "violation: {v}");
    }
    if !violations.is_empty() {
        Status::Violation
    } else if !converged {
        Status::NotConverged
    } else {
        Status::Ok
    }
}

fn cmd_experiment(scenario: &str, config: Option<&Path>, kinds: &[Kind], run: &RunArgs) -> Result<Status> {
    let market = match config {
        Some(path) => Market::from_file(path, scenario)?,
        None => Market::from_scenario(scenario)?,
    };
    let tasks: Vec<_> = plan(&market.config, false)
        .into_iter()
        .filter(|t| kinds.is_empty() || kinds.iter().any(|k| k.matches(t.kind())))
        .collect();
    let want_scan = (kinds.is_empty() || kinds.contains(&Kind::CoexistenceScan))
        && market.config.num_intermediaries() >= 2;
    if tasks.is_empty() && !want_scan {
        return Err(Error::Config {
            key: "--kind".into(),
            constraint: format!("no requested experiment applies to `{scenario}`"),
        });
    }
    let reports = tasks
        .par_iter()
        .map(|t| run_planned(&market.name, &market.config, t, &market.solver))
        .collect::<Result<Vec<_>>>()?;
    let scans = if want_scan {
        vec![coexistence_scan(
            &market.name,
            &market.config,
            &COEXISTENCE_RATIOS,
            &COEXISTENCE_GAPS,
            &market.solver,
        )?]
    } else {
        Vec::new()
    };

    let mut out = OutputDir::create(&run.out)?;
    market.write_echo(&mut out)?;
    out.write("experiments.csv", |w| write_experiment_csv(w, &reports))?;
    out.write("coexistence.csv", |w| write_coexistence_csv(w, &scans))?;

    let mut tally = [0usize; 4];
    let verdicts = reports
        .iter()
        .flat_map(|r| r.all_claims())
        .chain(scans.iter().flat_map(|r| r.rows.iter().flat_map(|row| &row.claims)))
        .map(|c| c.verdict);
    for v in verdicts {
        tally[match v {
            ClaimVerdict::Holds => 0,
            ClaimVerdict::Fails => 1,
            ClaimVerdict::NotApplicable => 2,
            ClaimVerdict::Informational => 3,
        }] += 1;
    }
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", market.name);
    for r in &reports {
        let _ = writeln!(
            s,
            "{}: {} (pre converged: {}, post converged: {})",
            r.kind.as_str(),
            r.shock,
            r.pre.converged,
            r.post.converged
        );
        for c in r.failures() {
            let _ = writeln!(s, "  FAILS {}: {} (margin {})", c.id, c.statement, fmt_float(c.margin));
        }
    }
    let _ = writeln!(
        s,
        "claims: {} hold, {} fail, {} not applicable, {} informational",
        tally[0], tally[1], tally[2], tally[3]
    );
    let status = if tally[1] > 0 {
        Status::Violation
    } else if reports.iter().any(|r| !r.pre.converged || !r.post.converged) {
        Status::NotConverged
    } else {
        Status::Ok
    };
    write_summary(&mut out, &s)?;
    out.finish(&format!("experiment {scenario}"), &market.digest(), run.seed)?;
    Ok(status)
}

impl DgpSource {
    fn spec(&self) -> Result<DgpSpec> {
        match &self.config {
            Some(path) => load_dgp(path),
            None => Ok(match self.preset {
                Preset::Entry => DgpSpec::entry_calibrated(),
                Preset::Consolidation => DgpSpec::consolidation_calibrated(),
                Preset::Null => DgpSpec::default(),
            }),
        }
    }
}

fn write_spec(out: &mut OutputDir, spec: &DgpSpec) -> Result<String> {
    let text = serde_json::to_string_pretty(spec)?;
    out.write("dgp.json", |w| Ok(writeln!(w, "{text}")?))?;
    Ok(digest(serde_json::to_string(spec)?.as_bytes()))
}

fn panel_bytes(panel: &PanelDataset) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    panel.write_csv(&mut buf)?;
    Ok(buf)
}

fn cmd_panel_gen(src: &DgpSource, run: &RunArgs) -> Result<Status> {
    let spec = src.spec()?;
    let g = generate_panel(&spec, run.seed)?;
    let mut out = OutputDir::create(&run.out)?;
    let digest = write_spec(&mut out, &spec)?;
    let bytes = panel_bytes(&g.panel)?;
    out.write("panel.csv", |w| Ok(w.write_all(&bytes)?))?;
    out.write("stores.csv", |w| write_records(w, g.map.stores()))?;
    out.write("neighborhoods.csv", |w| write_records(w, g.map.neighborhoods()))?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "panel: {} rows, {} units, years {}-{}",
        g.panel.len(),
        g.panel.num_units(),
        spec.first_year,
        spec.last_year
    );
    let _ = writeln!(s, "units dropped for pre-panel focal stores: {}", g.dropped_units);
    let _ = writeln!(s, "stores: {}", g.map.stores().len());
    write_summary(&mut out, &s)?;
    out.finish("panel gen", &digest, run.seed)?;
    Ok(Status::Ok)
}

fn write_records<T: serde::Serialize>(w: &mut dyn Write, rows: &[T]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(r).map_err(|e| Error::Parse(e.to_string()))?;
    }
    csv.flush()?;
    Ok(())
}

/// Reads the panel or generates it; the digest covers the panel CSV bytes.
fn load_panel(src: &PanelSource, seed: u64, out: &mut OutputDir) -> Result<(PanelDataset, String)> {
    match &src.panel {
        Some(path) => {
            let bytes = std::fs::read(path)?;
            let panel = PanelDataset::read_csv(bytes.as_slice())?;
            Ok((panel, digest(&bytes)))
        }
        None => {
            let spec = src.dgp.spec()?;
            write_spec(out, &spec)?;
            let panel = generate_panel(&spec, seed)?.panel;
            let bytes = panel_bytes(&panel)?;
            out.write("panel.csv", |w| Ok(w.write_all(&bytes)?))?;
            Ok((panel, digest(&bytes)))
        }
    }
}

fn cmd_panel_estimate(src: &PanelSource, run: &RunArgs) -> Result<Status> {
    let mut out = OutputDir::create(&run.out)?;
    let (panel, digest) = load_panel(src, run.seed, &mut out)?;
    let mut s = String::new();
    let _ = writeln!(s, "panel: {} rows, {} units", panel.len(), panel.num_units());
    for outcome in [Outcome::LogNumber, Outcome::PriceConcession] {
        for family in [EventFamily::Entry, EventFamily::Consolidation] {
            let est = did_estimate(&panel, family, outcome)?;
            let stem = format!("{}_{}", family.as_str(), outcome.as_str());
            out.write(&format!("event_{stem}.csv"), |w| write_regression_csv(w, &est.event_study))?;
            out.write(&format!("static_{stem}.csv"), |w| write_regression_csv(w, &est.static_twfe))?;
            let _ = writeln!(s, "{stem}:");
            for t in est.event_study.estimates().iter().chain(&est.static_twfe.estimates()) {
                let _ = writeln!(
                    s,
                    "  {:<22} {:>14} (se {})",
                    t.term,
                    fmt_float(t.estimate),
                    fmt_float(t.std_error)
                );
            }
        }
        let (density, dropped) = density_regression(&panel, outcome)?;
        out.write(&format!("density_{}.csv", outcome.as_str()), |w| write_regression_csv(w, &density))?;
        let dynamic = dynamic_density_regression(&panel, outcome)?;
        out.write(&format!("dynamic_{}.csv", outcome.as_str()), |w| {
            write_regression_csv(w, &dynamic.result)
        })?;
        let _ = writeln!(
            s,
            "density_{}: {} rows without density dropped; dynamic: {} without lag, {} without density",
            outcome.as_str(),
            dropped,
            dynamic.dropped_no_lag,
            dynamic.dropped_no_density
        );
    }
    write_summary(&mut out, &s)?;
    out.finish("panel estimate", &digest, run.seed)?;
    Ok(Status::Ok)
}

fn cmd_panel_placebo(src: &PanelSource, family: EventFamily, reps: usize, run: &RunArgs) -> Result<Status> {
    let mut out = OutputDir::create(&run.out)?;
    let (panel, digest) = load_panel(src, run.seed, &mut out)?;
    let report = placebo_test(&panel, family, reps, run.seed)?;
    out.write("placebo.csv", |w| write_placebo_csv(w, std::slice::from_ref(&report)))?;
    out.write("placebo_t.csv", |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["family", "outcome", "rep", "t"])
            .map_err(|e| Error::Parse(e.to_string()))?;
        for o in &report.outcomes {
            for (k, t) in o.t_stats.iter().enumerate() {
                csv.write_record([family.as_str(), o.outcome.as_str(), &k.to_string(), &fmt_float(*t)])
                    .map_err(|e| Error::Parse(e.to_string()))?;
            }
        }
        csv.flush()?;
        Ok(())
    })?;
    let mut s = String::new();
    for o in &report.outcomes {
        let _ = writeln!(
            s,
            "{} {}: {} reps, |t|>1.645 share {}, |t|>1.96 share {}",
            family.as_str(),
            o.outcome.as_str(),
            report.reps,
            fmt_float(o.reject_10),
            fmt_float(o.reject_05)
        );
    }
    write_summary(&mut out, &s)?;
    out.finish("panel placebo", &digest, run.seed)?;
    Ok(Status::Ok)
}

fn cmd_panel_coverage(src: &DgpSource, family: EventFamily, reps: usize, run: &RunArgs) -> Result<Status> {
    let spec = src.spec()?;
    let rows = coverage_study(&spec, family, reps, run.seed, 0.95)?;
    let mut out = OutputDir::create(&run.out)?;
    let digest = write_spec(&mut out, &spec)?;
    out.write("coverage.csv", |w| write_coverage_csv(w, &rows))?;
    let mut s = String::new();
    for r in &rows {
        let _ = writeln!(
            s,
            "{} {} {}: truth {}, coverage {}",
            r.family.as_str(),
            r.outcome.as_str(),
            r.term,
            fmt_float(r.truth),
            fmt_float(r.rate())
        );
    }
    write_summary(&mut out, &s)?;
    out.finish("panel coverage", &digest, run.seed)?;
    Ok(Status::Ok)
}

fn cmd_check(src: &MarketSource, dgp: Option<&Path>, seed: u64, out: Option<&Path>) -> Result<Status> {
    if let Some(path) = dgp {
        let spec = load_dgp(path)?;
        println!("dgp spec valid: {} years, {} business areas", spec.num_years(), spec.geography.business_areas);
        return Ok(Status::Ok);
    }
    let market = Market::from_source(src)?;
    let eq = solve(&market.config, &market.solver, seed)?;
    let audit = audit_equilibrium(&market.config, &eq)?;
    let mut s = String::new();
    let _ = writeln!(s, "config valid: {}", market.name);
    for w in market.config.warnings() {
        let _ = writeln!(s, "warning: {w}");
    }
    let _ = writeln!(s, "welfare identity gap: {}", fmt_float(audit.identity_gap));
    match audit.max_foc {
        Some(v) => {
            let _ = writeln!(s, "max concession FOC residual: {} over {} cells", fmt_float(v), audit.foc_cells);
        }
        None => {
            let _ = writeln!(s, "concession FOC: no interior cell checked");
        }
    }
    let _ = writeln!(s, "converged: {}", eq.converged);
    let status = audit_status(&audit.violations, eq.converged, &mut s);
    match out {
        Some(dir) => {
            let mut out = OutputDir::create(dir)?;
            market.write_echo(&mut out)?;
            write_summary(&mut out, &s)?;
            out.finish("check", &market.digest(), seed)?;
        }
        None => print!("{s}"),
    }
    Ok(status)
}

fn cmd_scenarios(dir: &Path) -> Result<Status> {
    let mut out = OutputDir::create(dir)?;
    let solver = SolverSettings::default();
    let mut all = String::new();
    for (id, config) in scenarios::library() {
        let text = serde_json::to_string_pretty(&MarketFile::from_config(&config, &solver))?;
        all.push_str(&text);
        out.write(&format!("{id}.json"), |w| Ok(writeln!(w, "{text}")?))?;
        println!("{}", dir.join(format!("{id}.json")).display());
    }
    out.finish("scenarios", &digest(all.as_bytes()), 0)?;
    Ok(Status::Ok)
}
