use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use impsel_core::analysis::{claim3_closed, claim3_direct, g_monotone_check, g_value, GuaranteeKind, Setting};
use impsel_core::eval::{
    emit_curves, load_instances, run_suite, trial_rng, write_curves_csv, Instance, InstanceSource, PredictionMode,
    TrialConfig,
};
use impsel_core::exact::{
    admissible_correlation_pairs, bound_audit, correlation_probabilities, exact_distribution, impartiality_audit_mode,
    AuditMode,
};
use impsel_core::graph::{all_plurality_graphs, FamilyId, InstanceFamily};
use impsel_core::mechanisms::{run, MechanismKind};
use impsel_core::rational::{parse_rational, ratio, render};
use impsel_core::{MechanismSpec, NominationGraph, Prediction, RationalParam};
use serde_json::{json, Value};

/// Impartial k-selection with predictions: mechanisms, exact oracle, audits
/// and Monte Carlo evaluation.
#[derive(Parser, Debug)]
#[command(name = "impsel", version)]
struct Cli {
    /// Base seed for every random stream.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo trials per instance.
    #[arg(long, global = true, default_value_t = 10_000)]
    trials: u64,
    /// Mechanism parameter ρ as `p/q`.
    #[arg(long, global = true)]
    rho: Option<String>,
    /// Number of vertices to select.
    #[arg(long, global = true)]
    k: Option<usize>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate instances (graph + prediction) as a JSON list.
    Gen {
        #[command(flatten)]
        source: SourceArgs,
        /// Emit only the 1-based instance with this index, as a single object.
        #[arg(long)]
        index: Option<usize>,
    },
    /// Run one draw of a mechanism and print the selected set.
    Run {
        #[command(flatten)]
        mech: MechArgs,
        #[command(flatten)]
        input: GraphArgs,
    },
    /// Exact selection probabilities as `p/q` strings.
    Exact {
        #[command(flatten)]
        mech: MechArgs,
        #[command(flatten)]
        input: GraphArgs,
    },
    /// Check that no vertex can change its own selection probability.
    AuditImpartiality {
        #[command(flatten)]
        mech: MechArgs,
        #[command(flatten)]
        input: GraphArgs,
        /// Audit every instance of a figure family instead of `--graph`.
        #[arg(long, conflicts_with = "graph")]
        family: Option<FamilyId>,
        /// Audit only this vertex.
        #[arg(long)]
        vertex: Option<usize>,
        /// Vary out-edges over single targets only (plurality graphs).
        #[arg(long)]
        plurality: bool,
    },
    /// Check a mechanism against the impossibility inequalities of a setting.
    AuditBounds {
        #[command(flatten)]
        mech: MechArgs,
        /// sel1, sel1-plurality, sel2 or sel3.
        #[arg(long)]
        setting: Setting,
    },
    /// Partition probability identities and the correlation inequality.
    AuditClaims {
        /// Largest k for the closed-form/direct identity.
        #[arg(long, default_value_t = 25)]
        k_max: usize,
        /// Largest k for the monotonicity check.
        #[arg(long, default_value_t = 100)]
        g_max: usize,
        /// Plurality graph size for the correlation inequality.
        #[arg(long, default_value_t = 4)]
        corr_n: usize,
    },
    /// Monte Carlo suite: per-instance ratios and empirical α̂, β̂.
    Eval {
        #[command(flatten)]
        mech: MechArgs,
        #[command(flatten)]
        source: SourceArgs,
    },
    /// Consistency/robustness curves as (kind, k, ρ, α, β) rows.
    Curves {
        /// Comma-separated guarantee kinds.
        #[arg(long, value_delimiter = ',', default_value = "RHO_PARTITION,K_PARTITION_BASELINE")]
        kinds: Vec<GuaranteeKind>,
        #[arg(long, default_value_t = 1)]
        k_min: usize,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        /// Comma-separated ρ values as `p/q`.
        #[arg(long, value_delimiter = ',', default_value = "1/2,1")]
        rhos: Vec<String>,
    },
}

#[derive(Args, Debug)]
struct MechArgs {
    /// Mechanism name, e.g. rho-permutation, fixed-bidirectional, det-k.
    #[arg(long, conflicts_with = "spec")]
    mech: Option<String>,
    /// JSON mechanism spec (required for lotteries).
    #[arg(long)]
    spec: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GraphArgs {
    /// Graph JSON (`{"n":..,"edges":[[u,v],..]}`) or a single instance.
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Comma-separated predicted vertices, in order.
    #[arg(long, value_delimiter = ',')]
    pred: Option<Vec<usize>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Generator {
    Random,
    Plurality,
    Figure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PredMode {
    Accurate,
    Random,
    First,
}

impl From<PredMode> for PredictionMode {
    fn from(m: PredMode) -> Self {
        match m {
            PredMode::Accurate => PredictionMode::Accurate,
            PredMode::Random => PredictionMode::Random,
            PredMode::First => PredictionMode::First,
        }
    }
}

#[derive(Args, Debug)]
struct SourceArgs {
    /// JSON list of instances; overrides the generator.
    #[arg(long)]
    instances: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "random")]
    generator: Generator,
    #[arg(long, default_value_t = 6)]
    n: usize,
    #[arg(long, default_value_t = 0.3)]
    edge_prob: f64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    /// Figure family (fig3, fig4, fig5, fig6) for `--generator figure`.
    #[arg(long)]
    family: Option<FamilyId>,
    /// Pad figure instances with isolated vertices up to this size.
    #[arg(long)]
    family_n: Option<usize>,
    #[arg(long, value_enum, default_value = "accurate")]
    pred_mode: PredMode,
}

/// Marks a failed audit (exit code 1) as opposed to bad input (exit code 2).
#[derive(Debug)]
struct AuditFailed;

impl std::fmt::Display for AuditFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("audit failed")
    }
}

impl std::error::Error for AuditFailed {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<AuditFailed>() => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Gen { source, index } => cmd_gen(cli, source, *index),
        Command::Run { mech, input } => cmd_run(cli, mech, input),
        Command::Exact { mech, input } => cmd_exact(cli, mech, input),
        Command::AuditImpartiality { mech, input, family, vertex, plurality } => {
            cmd_audit_impartiality(cli, mech, input, *family, *vertex, *plurality)
        }
        Command::AuditBounds { mech, setting } => cmd_audit_bounds(cli, mech, *setting),
        Command::AuditClaims { k_max, g_max, corr_n } => cmd_audit_claims(cli, *k_max, *g_max, *corr_n),
        Command::Eval { mech, source } => cmd_eval(cli, mech, source),
        Command::Curves { kinds, k_min, k_max, rhos } => cmd_curves(cli, kinds, *k_min, *k_max, rhos),
    }
}

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn emit_json(cli: &Cli, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    emit(cli, &text)
}

fn format_or(cli: &Cli, default: Format) -> Format {
    cli.format.unwrap_or(default)
}

fn json_only(cli: &Cli) -> Result<()> {
    if format_or(cli, Format::Json) != Format::Json {
        bail!("this command only writes JSON");
    }
    Ok(())
}

fn rho_param(cli: &Cli) -> Result<Option<RationalParam>> {
    cli.rho.as_deref().map(|s| s.parse::<RationalParam>().map_err(Into::into)).transpose()
}

fn load_spec(cli: &Cli, mech: &MechArgs) -> Result<MechanismSpec> {
    match (&mech.mech, &mech.spec) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let spec: MechanismSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            Ok(spec)
        }
        (Some(name), None) => {
            let kind = MechanismKind::from_cli_name(name)?;
            if kind == MechanismKind::Lottery {
                bail!("lotteries need a JSON spec; pass --spec");
            }
            Ok(MechanismSpec::from_parts(kind, rho_param(cli)?, cli.k)?)
        }
        (None, None) => bail!("pass --mech NAME or --spec FILE"),
    }
}

fn uses_prediction(spec: &MechanismSpec) -> bool {
    match spec {
        MechanismSpec::UniformPermutation
        | MechanismSpec::RandomizedBidirectional
        | MechanismSpec::KPartitionBaseline { .. } => false,
        MechanismSpec::Lottery { a, b, .. } => uses_prediction(a) || uses_prediction(b),
        _ => true,
    }
}

fn read_graph_or_instance(path: &Path) -> Result<(NominationGraph, Option<Prediction>)> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("graph").is_some() {
        let inst: Instance = serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?;
        Ok((inst.graph, Some(inst.prediction)))
    } else {
        let g: NominationGraph = serde_json::from_value(value).with_context(|| format!("parsing {}", path.display()))?;
        Ok((g, None))
    }
}

/// The graph plus a prediction matching the spec's k. Prediction-free
/// mechanisms get `0..k` when none is given.
fn load_input(spec: &MechanismSpec, input: &GraphArgs) -> Result<(NominationGraph, Prediction)> {
    let path = input.graph.as_ref().ok_or_else(|| anyhow!("pass --graph FILE"))?;
    let (g, stored) = read_graph_or_instance(path)?;
    let p = match (&input.pred, stored) {
        (Some(v), _) => Prediction::new(v.clone())?,
        (None, Some(p)) => p,
        (None, None) if !uses_prediction(spec) => Prediction::new((0..spec.k()).collect())?,
        (None, None) => bail!("{} needs --pred", spec.kind().cli_name()),
    };
    spec.validate(&g, &p)?;
    Ok((g, p))
}

fn instance_source(cli: &Cli, source: &SourceArgs, k: usize) -> Result<InstanceSource> {
    if let Some(path) = &source.instances {
        return Ok(InstanceSource::File(path.clone()));
    }
    let mode = source.pred_mode.into();
    Ok(match source.generator {
        Generator::Random => InstanceSource::Random {
            n: source.n,
            edge_prob: source.edge_prob,
            count: source.count,
            seed: cli.seed,
            k,
            mode,
        },
        Generator::Plurality => InstanceSource::Plurality { n: source.n, count: source.count, seed: cli.seed, k, mode },
        Generator::Figure => {
            let id = source.family.ok_or_else(|| anyhow!("--generator figure needs --family"))?;
            let family = match source.family_n {
                Some(n) => InstanceFamily::new(id, n)?,
                None => InstanceFamily::minimal(id),
            };
            InstanceSource::Figure(family)
        }
    })
}

fn cmd_gen(cli: &Cli, source: &SourceArgs, index: Option<usize>) -> Result<()> {
    json_only(cli)?;
    let instances = load_instances(&instance_source(cli, source, cli.k.unwrap_or(1))?)?;
    match index {
        None => emit_json(cli, &instances),
        Some(j) => {
            let inst = j
                .checked_sub(1)
                .and_then(|i| instances.get(i))
                .ok_or_else(|| anyhow!("--index {j} outside 1..={}", instances.len()))?;
            emit_json(cli, inst)
        }
    }
}

fn cmd_run(cli: &Cli, mech: &MechArgs, input: &GraphArgs) -> Result<()> {
    let spec = load_spec(cli, mech)?;
    let (g, p) = load_input(&spec, input)?;
    let selected = run(&spec, &g, &p, &mut trial_rng(cli.seed, 0))?;
    match format_or(cli, Format::Json) {
        Format::Json => emit_json(cli, &json!({ "mechanism": spec.to_string(), "seed": cli.seed, "selected": selected })),
        Format::Csv => emit(cli, &selected.iter().fold("vertex\n".to_string(), |acc, v| format!("{acc}{v}\n"))),
    }
}

fn cmd_exact(cli: &Cli, mech: &MechArgs, input: &GraphArgs) -> Result<()> {
    let spec = load_spec(cli, mech)?;
    let (g, p) = load_input(&spec, input)?;
    let dist = exact_distribution(&spec, &g, &p)?;
    match format_or(cli, Format::Json) {
        Format::Json => {
            let map: serde_json::Map<String, Value> =
                dist.probs().iter().map(|(v, r)| (v.to_string(), Value::String(render(r)))).collect();
            emit_json(cli, &map)
        }
        Format::Csv => {
            let body = dist.probs().iter().map(|(v, r)| format!("{v},{}\n", render(r))).collect::<String>();
            emit(cli, &format!("vertex,probability\n{body}"))
        }
    }
}

fn cmd_audit_impartiality(
    cli: &Cli,
    mech: &MechArgs,
    input: &GraphArgs,
    family: Option<FamilyId>,
    vertex: Option<usize>,
    plurality: bool,
) -> Result<()> {
    json_only(cli)?;
    let spec = load_spec(cli, mech)?;
    let instances: Vec<(String, NominationGraph, Prediction)> = match family {
        Some(id) => load_instances(&InstanceSource::Figure(InstanceFamily::minimal(id)))?
            .into_iter()
            .map(|inst| (inst.id, inst.graph, inst.prediction))
            .collect(),
        None => {
            let (g, p) = load_input(&spec, input)?;
            vec![("input".to_string(), g, p)]
        }
    };
    let mode = if plurality { AuditMode::Plurality } else { AuditMode::General };
    let mut checks = Vec::new();
    let mut pass = true;
    for (id, g, p) in &instances {
        spec.validate(g, p)?;
        let vertices: Vec<usize> = match vertex {
            Some(v) => vec![v],
            None => (0..g.n()).collect(),
        };
        for i in vertices {
            let ok = impartiality_audit_mode(&spec, g, p, i, mode)?;
            pass &= ok;
            checks.push(json!({ "instance": id, "vertex": i, "impartial": ok }));
        }
    }
    emit_json(cli, &json!({ "mechanism": spec.to_string(), "plurality": plurality, "checks": checks, "pass": pass }))?;
    if pass {
        Ok(())
    } else {
        Err(AuditFailed.into())
    }
}

fn cmd_audit_bounds(cli: &Cli, mech: &MechArgs, setting: Setting) -> Result<()> {
    json_only(cli)?;
    let spec = load_spec(cli, mech)?;
    let report = bound_audit(setting, &spec)?;
    emit_json(cli, &report)?;
    if report.pass {
        Ok(())
    } else {
        Err(AuditFailed.into())
    }
}

fn cmd_audit_claims(cli: &Cli, k_max: usize, g_max: usize, corr_n: usize) -> Result<()> {
    json_only(cli)?;
    if k_max == 0 || g_max == 0 {
        bail!("--k-max and --g-max must be at least 1");
    }
    if !(2..=7).contains(&corr_n) {
        bail!("--corr-n must lie in 2..=7");
    }
    let mut identity_failures = Vec::new();
    let mut identities = 0;
    for k in 1..=k_max {
        for p in 0..k {
            identities += 1;
            if claim3_closed(k, p)? != claim3_direct(k, p)? {
                identity_failures.push(json!({ "k": k, "p": p }));
            }
        }
    }
    let mut monotone_failures = Vec::new();
    for k in 1..=g_max {
        if !g_monotone_check(k)? {
            monotone_failures.push(k);
        }
    }
    let mut endpoint_failures = Vec::new();
    for k in 2..=g_max.min(10) {
        if g_value(k, k - 1)? != ratio(k as i64 + 1, 2 * k as i64) {
            endpoint_failures.push(k);
        }
    }
    let mut correlation_cases = 0;
    let mut correlation_failures = Vec::new();
    for g in all_plurality_graphs(corr_n) {
        for pred in 0..corr_n {
            for i in (0..corr_n).filter(|&i| i != pred) {
                for (r, s) in admissible_correlation_pairs(&g, pred, i) {
                    correlation_cases += 1;
                    let probs = correlation_probabilities(&g, pred, i, r, s)?;
                    if !probs.holds() {
                        correlation_failures.push(json!({
                            "graph": g, "predicted": pred, "i": i, "r": r, "s": s,
                            "given_s": render(&probs.given_s), "given_r": render(&probs.given_r),
                        }));
                    }
                }
            }
        }
    }
    let pass = identity_failures.is_empty()
        && monotone_failures.is_empty()
        && endpoint_failures.is_empty()
        && correlation_failures.is_empty();
    emit_json(
        cli,
        &json!({
            "identities": { "checked": identities, "failures": identity_failures },
            "monotone": { "k_max": g_max, "failures": monotone_failures },
            "endpoints": { "failures": endpoint_failures },
            "correlation": { "n": corr_n, "checked": correlation_cases, "failures": correlation_failures },
            "pass": pass,
        }),
    )?;
    if pass {
        Ok(())
    } else {
        Err(AuditFailed.into())
    }
}

fn cmd_eval(cli: &Cli, mech: &MechArgs, source: &SourceArgs) -> Result<()> {
    let spec = load_spec(cli, mech)?;
    let cfg = TrialConfig {
        source: instance_source(cli, source, spec.k())?,
        spec,
        trials: cli.trials,
        seed: cli.seed,
    };
    let instances = load_instances(&cfg.source)?;
    let report = run_suite(&cfg, &instances)?;
    match format_or(cli, Format::Json) {
        Format::Json => emit_json(cli, &report),
        Format::Csv => {
            let mut buf = Vec::new();
            report.write_csv(&mut buf)?;
            emit(cli, &String::from_utf8(buf)?)
        }
    }
}

fn cmd_curves(cli: &Cli, kinds: &[GuaranteeKind], k_min: usize, k_max: usize, rhos: &[String]) -> Result<()> {
    if k_min == 0 || k_min > k_max {
        bail!("need 1 <= --k-min <= --k-max");
    }
    let rhos = rhos.iter().map(|s| parse_rational(s)).collect::<impsel_core::Result<Vec<_>>>()?;
    let ks: Vec<usize> = (k_min..=k_max).collect();
    let rows = emit_curves(kinds, &ks, &rhos)?;
    match format_or(cli, Format::Csv) {
        Format::Json => emit_json(cli, &rows),
        Format::Csv => {
            let mut buf = Vec::new();
            write_curves_csv(&rows, &mut buf)?;
            emit(cli, &String::from_utf8(buf)?)
        }
    }
}
