//! `infocus` command line.
//!
//! Exit codes: 0 ok, 1 gate failed, 2 input or I/O error, 3 rule error,
//! 4 missing test data.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use infocus_core::profiles::{combine, compute_builtin};
use infocus_core::{
    benchmark, evaluate_rule, generate_rule_grid, get_validity, judge, parse_rule, render_rule,
    run_gate, score, validate_project, ContextProfile, DefectProfile, EvaluationError, GateReport,
    ProfileError, ProfileSet, ProjectData, RuleError, SelectionRule, ValidityLedger,
};

use crate::config::CliConfig;
use crate::ingest::{self, Report, ReportFormat};
use crate::ledger::{self, LedgerError};

pub const EXIT_OK: u8 = 0;
pub const EXIT_GATE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;
pub const EXIT_RULE: u8 = 3;
pub const EXIT_NO_TEST_DATA: u8 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "infocus",
    version,
    about = "Focus testing on code units using inspection defect data"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Project bundle (JSON).
    pub project: PathBuf,
    /// Config file with `gate.*`, `criterion.*`, `ledger.path`, `combine.*` keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    pub format: ReportFormat,
}

#[derive(Debug, Args)]
pub struct LedgerArgs {
    /// Validity ledger file; overrides `ledger.path`.
    #[arg(long, env = "INFOCUS_LEDGER")]
    pub ledger: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a project bundle for structural consistency.
    Validate {
        project: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: ReportFormat,
    },
    /// Run the inspection data quality gate.
    Gate {
        #[command(flatten)]
        common: Common,
    },
    /// Print defect profiles.
    Profile {
        #[command(flatten)]
        common: Common,
        /// Comma-separated metric ids; default: every available metric.
        #[arg(long, value_delimiter = ',')]
        metrics: Vec<String>,
    },
    /// Apply selection rules and print the prioritized units.
    Prioritize {
        #[command(flatten)]
        common: Common,
        /// Selection rule, e.g. `top(dc, 2)`.
        #[arg(
            long,
            conflicts_with = "rules_file",
            required_unless_present = "rules_file"
        )]
        rule: Option<String>,
        /// `name: rule` lines; each rule name doubles as its assumption id.
        #[arg(long)]
        rules_file: Option<PathBuf>,
        /// Assumption the rule operationalizes; defaults to the canonical rule text.
        #[arg(long, conflicts_with = "rules_file")]
        assumption_id: Option<String>,
        #[command(flatten)]
        ledger: LedgerArgs,
        /// Only print prioritizations whose assumption has at least this validity.
        #[arg(long)]
        min_validity: Option<u32>,
        /// Proceed even when the quality gate fails.
        #[arg(long)]
        force: bool,
    },
    /// Score a rule against the recorded test outcome.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Selection rule, e.g. `top(dc, 2)`.
        #[arg(long)]
        rule: String,
        /// Append the judged outcome to the ledger.
        #[arg(long)]
        record: bool,
        /// Assumption to record against; defaults to the canonical rule text.
        #[arg(long)]
        assumption_id: Option<String>,
        #[command(flatten)]
        ledger: LedgerArgs,
        /// Proceed even when the quality gate fails.
        #[arg(long)]
        force: bool,
    },
    /// Score many rules and rank them.
    Benchmark {
        /// Project bundle (JSON) with test data.
        project: PathBuf,
        /// Config file, as for the other commands.
        #[arg(long)]
        config: Option<PathBuf>,
        /// `name: rule` lines.
        #[arg(long, conflicts_with = "grid", required_unless_present = "grid")]
        rules_file: Option<PathBuf>,
        /// Rule grid (TOML).
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Ranking CSV destination; the top 5 go to stdout. Without it the
        /// CSV itself goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Proceed even when the quality gate fails.
        #[arg(long)]
        force: bool,
    },
    /// Print the validity of an assumption in a context.
    Validity {
        #[arg(long)]
        assumption_id: String,
        /// Take the context from this project bundle.
        #[arg(long, conflicts_with = "context", required_unless_present = "context")]
        project: Option<PathBuf>,
        /// Context factor `key=value`; repeatable.
        #[arg(long)]
        context: Vec<String>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        ledger: LedgerArgs,
    },
}

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    fn new(code: u8, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }

    fn input(message: impl Into<String>) -> Self {
        Self::new(EXIT_INPUT, message)
    }
}

impl From<LedgerError> for Failure {
    fn from(e: LedgerError) -> Self {
        Failure::input(e.to_string())
    }
}

impl From<ProfileError> for Failure {
    fn from(e: ProfileError) -> Self {
        match e {
            ProfileError::UnknownMetric(_) => Failure::new(EXIT_RULE, e.to_string()),
            _ => Failure::input(e.to_string()),
        }
    }
}

impl From<RuleError> for Failure {
    fn from(e: RuleError) -> Self {
        match e {
            RuleError::DuplicateOutcome { .. } | RuleError::EmptyUnitList => {
                Failure::input(e.to_string())
            }
            _ => Failure::new(EXIT_RULE, e.to_string()),
        }
    }
}

impl From<EvaluationError> for Failure {
    fn from(e: EvaluationError) -> Self {
        match e {
            EvaluationError::Rule { source, rule_name } => {
                let f = Failure::from(source);
                Failure::new(f.code, format!("rule {rule_name}: {}", f.message))
            }
            EvaluationError::MissingTestData
            | EvaluationError::MissingEffortRecord(_)
            | EvaluationError::ZeroTotalEffort => Failure::new(EXIT_NO_TEST_DATA, e.to_string()),
            EvaluationError::DegenerateReduction(_) => Failure::input(e.to_string()),
        }
    }
}

type Outcome = Result<(Vec<u8>, u8), Failure>;

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read(path)?)
        .map_err(|_| Failure::input(format!("{}: not UTF-8", path.display())))
}

fn load_project(path: &Path) -> Result<ProjectData, Failure> {
    ingest::load_project(&read(path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn load_config(path: Option<&Path>) -> Result<CliConfig, Failure> {
    match path {
        None => Ok(CliConfig::default()),
        Some(p) => CliConfig::parse(&read_text(p)?)
            .map_err(|e| Failure::input(format!("{}: {e}", p.display()))),
    }
}

fn render(report: Report<'_>, format: ReportFormat) -> Result<Vec<u8>, Failure> {
    ingest::write_report(report, format).map_err(|e| Failure::input(e.to_string()))
}

fn ledger_path(flag: &LedgerArgs, cfg: &CliConfig) -> Option<PathBuf> {
    flag.ledger.clone().or_else(|| cfg.ledger_path.clone())
}

fn load_ledger(path: Option<&Path>) -> Result<ValidityLedger, Failure> {
    Ok(match path {
        Some(p) => ledger::load(p)?,
        None => ValidityLedger::new(),
    })
}

/// Exit 1 with the report on stderr unless forced.
fn enforce_gate(
    p: &ProjectData,
    cfg: &CliConfig,
    force: bool,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let report: GateReport = run_gate(p, &cfg.gate);
    if report.passed {
        return Ok(());
    }
    let text =
        String::from_utf8(render(Report::Gate(&report), ReportFormat::Text)?).expect("text report");
    if force {
        let _ = writeln!(
            err,
            "warning: quality gate failed, continuing because of --force\n{text}"
        );
        Ok(())
    } else {
        Err(Failure::new(
            EXIT_GATE,
            format!("quality gate failed (use --force to proceed anyway)\n{text}"),
        ))
    }
}

/// Computes the requested metrics, resolving combined ids through the
/// config and their terms recursively.
pub fn profiles_for<'a>(
    p: &ProjectData,
    cfg: &CliConfig,
    metrics: impl IntoIterator<Item = &'a str>,
) -> Result<ProfileSet, Failure> {
    fn add(
        p: &ProjectData,
        cfg: &CliConfig,
        metric: &str,
        set: &mut ProfileSet,
        depth: usize,
    ) -> Result<(), Failure> {
        if set.get(metric).is_some() {
            return Ok(());
        }
        if let Some(spec) = cfg.combined.iter().find(|s| s.id == metric) {
            if depth > cfg.combined.len() {
                return Err(Failure::input(format!(
                    "combined profile {metric} refers to itself"
                )));
            }
            for (term, _) in &spec.terms {
                add(p, cfg, term, set, depth + 1)?;
            }
            let profile = combine(p, spec, set)?;
            set.insert(profile);
            return Ok(());
        }
        set.insert(compute_builtin(p, metric)?);
        Ok(())
    }
    let mut set = ProfileSet::new();
    for m in metrics {
        add(p, cfg, m, &mut set, 0)?;
    }
    Ok(set)
}

fn rule_metrics(rules: &[&SelectionRule]) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for r in rules {
        r.ast.for_each_metric(&mut |m| {
            out.insert(m.to_string());
        });
    }
    out
}

fn parse_rules_file(path: &Path) -> Result<Vec<(String, SelectionRule)>, Failure> {
    let entries = ingest::load_rules_file(&read_text(path)?)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    entries
        .into_iter()
        .map(|(name, src)| {
            let rule = parse_rule(&src)
                .map_err(|e| Failure::new(EXIT_RULE, format!("rule {name}: {e}")))?;
            Ok((name, rule))
        })
        .collect()
}

fn parse_context(pairs: &[String]) -> Result<ContextProfile, Failure> {
    let mut ctx = ContextProfile::new();
    for pair in pairs {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| Failure::input(format!("context {pair:?} is not key=value")))?;
        if k.trim().is_empty() {
            return Err(Failure::input("empty context key"));
        }
        ctx = ctx.with(k.trim(), v.trim());
    }
    Ok(ctx)
}

fn execute(cmd: Command, err: &mut dyn Write) -> Outcome {
    match cmd {
        Command::Validate { project, format } => {
            let p = ingest::load_project_unchecked(&read(&project)?)
                .map_err(|e| Failure::input(format!("{}: {e}", project.display())))?;
            let report = validate_project(&p);
            let code = if report.is_empty() {
                EXIT_OK
            } else {
                EXIT_INPUT
            };
            Ok((render(Report::Validation(&report), format)?, code))
        }
        Command::Gate { common } => {
            let cfg = load_config(common.config.as_deref())?;
            let p = load_project(&common.project)?;
            let report = run_gate(&p, &cfg.gate);
            let code = if report.passed { EXIT_OK } else { EXIT_GATE };
            Ok((render(Report::Gate(&report), common.format)?, code))
        }
        Command::Profile { common, metrics } => {
            let cfg = load_config(common.config.as_deref())?;
            let p = load_project(&common.project)?;
            let profiles: Vec<DefectProfile> = if metrics.is_empty() {
                ProfileSet::for_project(&p, &cfg.combined)?
                    .iter()
                    .cloned()
                    .collect()
            } else {
                let set = profiles_for(&p, &cfg, metrics.iter().map(String::as_str))?;
                metrics
                    .iter()
                    .map(|m| set.get(m).cloned().expect("computed above"))
                    .collect()
            };
            Ok((render(Report::Profiles(&profiles), common.format)?, EXIT_OK))
        }
        Command::Prioritize {
            common,
            rule,
            rules_file,
            assumption_id,
            ledger,
            min_validity,
            force,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let p = load_project(&common.project)?;
            // (rule, assumption id)
            let rules: Vec<(SelectionRule, String)> = match (&rule, &rules_file) {
                (Some(text), _) => {
                    let r = parse_rule(text)?;
                    let id = assumption_id.unwrap_or_else(|| render_rule(&r));
                    vec![(r, id)]
                }
                (None, Some(path)) => parse_rules_file(path)?
                    .into_iter()
                    .map(|(name, r)| (r, name))
                    .collect(),
                (None, None) => unreachable!("clap requires one of --rule, --rules-file"),
            };
            if rules.is_empty() {
                return Err(Failure::input("no rules given"));
            }
            enforce_gate(&p, &cfg, force, err)?;
            let refs: Vec<&SelectionRule> = rules.iter().map(|(r, _)| r).collect();
            let metrics = rule_metrics(&refs);
            let profiles = profiles_for(&p, &cfg, metrics.iter().map(String::as_str))?;
            let ledger = load_ledger(ledger_path(&ledger, &cfg).as_deref())?;
            let min_validity = min_validity.or(cfg.min_validity);

            let mut out = Vec::new();
            for (r, id) in &rules {
                let validity = get_validity(&ledger, &p.context, id);
                if min_validity.is_some_and(|min| validity < min) {
                    let _ = writeln!(err, "skipped {id}: validity {validity} below minimum");
                    continue;
                }
                out.push(evaluate_rule(r, &profiles, &p.units, validity)?);
            }
            let bytes = match (rule.is_some(), out.as_slice()) {
                (true, [single]) => render(Report::Prioritization(single), common.format)?,
                _ => render(Report::Prioritizations(&out), common.format)?,
            };
            Ok((bytes, EXIT_OK))
        }
        Command::Evaluate {
            common,
            rule,
            record,
            assumption_id,
            ledger,
            force,
        } => {
            let cfg = load_config(common.config.as_deref())?;
            let p = load_project(&common.project)?;
            let r = parse_rule(&rule)?;
            if !p.has_test_data() {
                return Err(EvaluationError::MissingTestData.into());
            }
            enforce_gate(&p, &cfg, force, err)?;
            let assumption_id = assumption_id.unwrap_or_else(|| render_rule(&r));
            let ledger_file = ledger_path(&ledger, &cfg);
            if record && ledger_file.is_none() {
                return Err(Failure::input(
                    "--record needs --ledger, INFOCUS_LEDGER or ledger.path",
                ));
            }
            let current = load_ledger(ledger_file.as_deref())?;
            let validity = get_validity(&current, &p.context, &assumption_id);
            let profiles = profiles_for(&p, &cfg, rule_metrics(&[&r]).iter().map(String::as_str))?;
            let pri = evaluate_rule(&r, &profiles, &p.units, validity)?;
            let report = score(&pri, &p)?;
            if record {
                let success = judge(&report, &cfg.criterion);
                let path = ledger_file.expect("checked above");
                ledger::append(
                    &path,
                    &p.context,
                    &assumption_id,
                    &p.run_id,
                    success,
                    &ledger::now_timestamp(),
                )?;
                let _ = writeln!(
                    err,
                    "recorded {assumption_id} run {} success={success} in {}",
                    p.run_id,
                    path.display()
                );
            }
            Ok((render(Report::Evaluation(&report), common.format)?, EXIT_OK))
        }
        Command::Benchmark {
            project,
            config,
            rules_file,
            grid,
            out,
            force,
        } => {
            let cfg = load_config(config.as_deref())?;
            let p = load_project(&project)?;
            let rules = match (&rules_file, &grid) {
                (Some(path), _) => parse_rules_file(path)?,
                (None, Some(path)) => {
                    let spec = ingest::load_grid_spec(&read_text(path)?)
                        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
                    generate_rule_grid(&spec)?
                }
                (None, None) => unreachable!("clap requires one of --rules-file, --grid"),
            };
            if rules.is_empty() {
                return Err(Failure::input("no rules to benchmark"));
            }
            if !p.has_test_data() {
                return Err(EvaluationError::MissingTestData.into());
            }
            enforce_gate(&p, &cfg, force, err)?;
            let refs: Vec<&SelectionRule> = rules.iter().map(|(_, r)| r).collect();
            let profiles = profiles_for(&p, &cfg, rule_metrics(&refs).iter().map(String::as_str))?;
            let table = benchmark(&rules, &p, &profiles, |_, _| 0)?;
            let csv = render(Report::Ranking(&table), ReportFormat::Csv)?;
            match out {
                None => Ok((csv, EXIT_OK)),
                Some(path) => {
                    std::fs::write(&path, &csv)
                        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
                    let top = infocus_core::RankingTable {
                        rows: table.rows.iter().take(5).cloned().collect(),
                    };
                    Ok((render(Report::Ranking(&top), ReportFormat::Text)?, EXIT_OK))
                }
            }
        }
        Command::Validity {
            assumption_id,
            project,
            context,
            config,
            ledger,
        } => {
            let cfg = load_config(config.as_deref())?;
            let ctx = match project {
                Some(path) => load_project(&path)?.context,
                None => parse_context(&context)?,
            };
            let l = load_ledger(ledger_path(&ledger, &cfg).as_deref())?;
            Ok((
                format!("{}\n", get_validity(&l, &ctx, &assumption_id)).into_bytes(),
                EXIT_OK,
            ))
        }
    }
}

/// Runs a parsed command, writing the payload to `out` and diagnostics to
/// `err`. Returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    match execute(cli.command, err) {
        Ok((bytes, code)) => {
            if out.write_all(&bytes).and_then(|_| out.flush()).is_err() {
                return EXIT_INPUT;
            }
            code
        }
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
