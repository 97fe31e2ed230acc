use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use ensemblelab::adversary::{validate_strategy, AdversaryStrategy, CorruptionPolicy, PriorityScheduler, Silent, StopRule};
use ensemblelab::agreement::composed::DEFAULT_DEPTH;
use ensemblelab::agreement::{
    ams_decision_bound, check_qualitative_validity, check_weak_validity, mimic_strategy, silent_strategy, ElectionModel,
    InputMultiset, QvVerdict, XSpec,
};
use ensemblelab::ensemble::Ensemble;
use ensemblelab::export::{ensemble_to_dot, ensemble_to_json, local_to_dot, local_to_json};
use ensemblelab::local::{build_local_ensemble, divergence_witness, Divergence};
use ensemblelab::model::{Configuration, PartyId, Protocol, SystemParams};
use ensemblelab::protocols::{protocol_by_name, PROTOCOL_NAMES};
use ensemblelab::scenarios::{
    build_scenario, falsification_harness, verify_scenario_pair, PairReport, PointOutcome, ScenarioFile, ScenarioKind,
};
use ensemblelab::Value;

#[derive(Parser)]
#[command(name = "ensemblelab", version, about = "Exact probability ensembles for randomized agreement protocols")]
#[command(after_help = "ENSEMBLELAB_SEED is accepted and ignored: every computation is exact and deterministic.\n\
Exit status: 0 when every requested check passes, 1 when a check fails, 2 on errors.")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Scenario or run parameter file (JSON).
    #[arg(long, global = true)]
    params: Option<PathBuf>,
    /// Depth limit for ensemble construction.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    depth: Option<u64>,
    /// Directory for exports and reports; nothing is written without it.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Structured)]
    format: Format,
    /// Party index for local views.
    #[arg(long, global = true)]
    party: Option<usize>,
    #[arg(long, global = true, default_value = "composed-toy", value_parser = clap::builder::PossibleValuesParser::new(PROTOCOL_NAMES))]
    protocol: String,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Structured,
    Dot,
    Both,
}

impl Format {
    fn structured(self) -> bool {
        self != Format::Dot
    }

    fn dot(self) -> bool {
        self != Format::Structured
    }
}

#[derive(Subcommand)]
enum Command {
    /// Build one ensemble and export it.
    Simulate,
    /// Build the local ensemble of `--party`.
    LocalEnsemble,
    /// Compare two ensembles from the view of `--party`. A reference is a
    /// scenario kind (E1..E4, resolved against `--params`) or a parameter file.
    Indist { left: String, right: String },
    /// Build a lower-bound scenario and check it against E1.
    Scenario,
    /// Qualitative and weak validity verdicts.
    Validity,
    /// Probability that the election first picks a corrupted-only broadcast.
    AmsBound {
        n: usize,
        t: usize,
        f: usize,
        /// `prefix;tail`, e.g. `;3` or `4,3;3`.
        x: String,
    },
    /// Search a grid of inputs for evidence against the validity bound.
    Falsify,
}

/// Run parameters: a protocol run under one of the stock strategies.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunFile {
    t: usize,
    inputs: Vec<Value>,
    #[serde(default)]
    strategy: StrategyFile,
    #[serde(default)]
    depth: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
enum StrategyFile {
    #[default]
    Benign,
    FailureFree,
    Mimic {
        corrupted: Vec<usize>,
        #[serde(default)]
        order: Option<Vec<usize>>,
        bogus: Value,
    },
    Silent {
        corrupted: Vec<usize>,
        #[serde(default)]
        order: Option<Vec<usize>>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ParamsFile {
    Scenario(ScenarioFile),
    Run(RunFile),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct FalsifyFile {
    n: usize,
    t: usize,
    alphabet: Vec<Value>,
    f: Vec<usize>,
    #[serde(default)]
    depth: Option<usize>,
}

struct Built {
    ensemble: Ensemble,
    strategy: AdversaryStrategy,
    initial: Configuration,
    label: String,
}

enum Outcome {
    Pass,
    Fail,
}

fn read_params(path: &Path) -> Result<ParamsFile> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn order_of(n: usize, order: &Option<Vec<usize>>) -> Vec<PartyId> {
    order.clone().unwrap_or_else(|| (0..n).collect()).into_iter().map(PartyId).collect()
}

fn run_strategy(spec: &StrategyFile, n: usize, t: usize) -> AdversaryStrategy {
    let set = |ix: &[usize]| ix.iter().copied().map(PartyId).collect();
    match spec {
        StrategyFile::Benign => AdversaryStrategy::benign(t),
        StrategyFile::FailureFree => AdversaryStrategy::new(
            "failure-free",
            t,
            CorruptionPolicy::none(),
            PriorityScheduler::by_index(n).stop(StopRule::HonestDecided),
            Silent,
        ),
        StrategyFile::Mimic { corrupted, order, bogus } => mimic_strategy(t, set(corrupted), order_of(n, order), bogus.clone()),
        StrategyFile::Silent { corrupted, order } => silent_strategy(t, set(corrupted), order_of(n, order)),
    }
}

impl Cli {
    fn depth_or(&self, file: Option<usize>) -> usize {
        self.depth.map(|d| d as usize).or(file).unwrap_or(DEFAULT_DEPTH)
    }

    fn default_run(&self) -> RunFile {
        let (t, inputs) = match self.protocol.as_str() {
            "coin-demo" => (0, vec![Value::Bot]),
            _ => (1, ["a", "b", "c", "d"].into_iter().map(Value::sym).collect()),
        };
        RunFile {
            t,
            inputs,
            strategy: StrategyFile::Benign,
            depth: None,
        }
    }

    fn build_run(&self, run: &RunFile) -> Result<Built> {
        let n = run.inputs.len();
        let protocol = protocol_by_name(&self.protocol, n, run.t)?;
        let strategy = run_strategy(&run.strategy, n, run.t);
        let initial = Configuration::initial(&run.inputs, protocol.as_ref());
        let ensemble = ensemblelab::ensemble::build_ensemble(protocol, &strategy, initial.clone(), self.depth_or(run.depth))?;
        Ok(Built {
            label: strategy.name.clone(),
            ensemble,
            strategy,
            initial,
        })
    }

    fn build_scenario_file(&self, file: &ScenarioFile) -> Result<Built> {
        let sp = file.to_params()?;
        let protocol = protocol_by_name(&self.protocol, file.n, file.t)?;
        let setup = ensemblelab::scenarios::scenario_setup(file.kind, &sp, protocol)?;
        let run = setup.build(self.depth_or(file.depth))?;
        Ok(Built {
            label: file.kind.to_string(),
            ensemble: run.ensemble,
            strategy: setup.strategy(),
            initial: setup.initial(),
        })
    }

    fn build_params(&self, params: Option<ParamsFile>) -> Result<Built> {
        match params {
            Some(ParamsFile::Scenario(file)) => self.build_scenario_file(&file),
            Some(ParamsFile::Run(run)) => self.build_run(&run),
            None => self.build_run(&self.default_run()),
        }
    }

    fn build_default(&self) -> Result<Built> {
        let params = self.params.as_deref().map(read_params).transpose()?;
        self.build_params(params)
    }

    fn scenario_file(&self) -> Result<ScenarioFile> {
        let path = self.params.as_deref().context("--params must name a scenario file")?;
        match read_params(path)? {
            ParamsFile::Scenario(file) => Ok(file),
            ParamsFile::Run(_) => bail!("{} is not a scenario file", path.display()),
        }
    }

    fn party(&self, ens: &Ensemble) -> Result<PartyId> {
        let p = self.party.context("--party is required")?;
        if p >= ens.params.n {
            bail!("party {p} out of range for n = {}", ens.params.n);
        }
        Ok(PartyId(p))
    }

    fn write(&self, name: &str, contents: &str) -> Result<()> {
        if let Some(dir) = &self.out {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
            println!("wrote {}", path.display());
        }
        Ok(())
    }

    fn export(&self, ens: &Ensemble, stem: &str, focus: PartyId) -> Result<()> {
        if self.format.structured() {
            self.write(&format!("{stem}.json"), &ensemble_to_json(ens))?;
        }
        if self.format.dot() {
            self.write(&format!("{stem}.dot"), &ensemble_to_dot(ens, focus))?;
        }
        Ok(())
    }
}

fn summarize(ens: &Ensemble) -> bool {
    println!("protocol: {}  strategy: {}", ens.protocol.name(), ens.strategy);
    println!("n = {}, t = {}, f = {}", ens.params.n, ens.params.t, ens.params.f);
    println!("nodes: {}  leaves: {}  max depth: {}", ens.len(), ens.leaves().count(), ens.max_depth());
    if ens.is_complete() {
        println!("completeness: complete");
    } else {
        println!("completeness: TRUNCATED (residual mass {})", ens.completeness.residual());
    }
    println!("leaf mass: {}", ens.leaf_mass());
    ens.is_complete()
}

fn print_decisions(ens: &Ensemble, party: PartyId) {
    for v in ens.decided_values(party) {
        let m = ens.decision_probability(party, &v);
        match m.value() {
            Some(p) => println!("  {party} decides {v}: {p}"),
            None => println!("  {party} decides {v}: in [{}, {}]", m.lower, m.upper),
        }
    }
}

fn simulate(cli: &Cli) -> Result<Outcome> {
    let built = cli.build_default()?;
    let ens = &built.ensemble;
    let complete = summarize(ens);
    for p in ens.params.parties() {
        print_decisions(ens, p);
    }
    let params = SystemParams::new(ens.params.n, built.strategy.budget.min(ens.params.n), 0)?;
    let report = validate_strategy(&built.strategy, &params, ens.protocol.as_ref(), &built.initial, ens.max_depth().min(16));
    for v in &report.violations {
        println!("strategy violation ({:?}): {} [{} nodes]", v.kind, v.detail, v.occurrences);
    }
    cli.export(ens, "ensemble", PartyId(cli.party.unwrap_or(0)))?;
    Ok(if complete && report.is_ok() { Outcome::Pass } else { Outcome::Fail })
}

fn local_ensemble(cli: &Cli) -> Result<Outcome> {
    let built = cli.build_default()?;
    let ens = &built.ensemble;
    let party = cli.party(ens)?;
    if !summarize(ens) {
        return Ok(Outcome::Fail);
    }
    let lens = build_local_ensemble(ens, party)?;
    println!("local ensemble of {party}: {} nodes (ensemble has {})", lens.len(), ens.len());
    print_decisions(ens, party);
    let stem = format!("local-{party}");
    if cli.format.structured() {
        cli.write(&format!("{stem}.json"), &local_to_json(&lens))?;
    }
    if cli.format.dot() {
        cli.write(&format!("{stem}.dot"), &local_to_dot(&lens))?;
    }
    Ok(Outcome::Pass)
}

fn resolve(cli: &Cli, reference: &str) -> Result<Built> {
    if let Ok(kind) = reference.parse::<ScenarioKind>() {
        let mut file = cli.scenario_file()?;
        file.kind = kind;
        return cli.build_scenario_file(&file);
    }
    cli.build_params(Some(read_params(Path::new(reference))?))
}

#[derive(Serialize)]
struct IndistReport<'a> {
    left: &'a str,
    right: &'a str,
    party: PartyId,
    indistinguishable: bool,
    witness: Option<Divergence>,
}

fn indist(cli: &Cli, left: &str, right: &str) -> Result<Outcome> {
    let a = resolve(cli, left)?;
    let b = resolve(cli, right)?;
    let party = cli.party(&a.ensemble)?;
    cli.party(&b.ensemble)?;
    let la = build_local_ensemble(&a.ensemble, party)?;
    let lb = build_local_ensemble(&b.ensemble, party)?;
    let witness = divergence_witness(&la, &lb)?;
    match &witness {
        None => println!("{} and {} are indistinguishable to {party}", a.label, b.label),
        Some(w) => println!("{} and {} are distinguishable to {party}: {w}", a.label, b.label),
    }
    let report = IndistReport {
        left,
        right,
        party,
        indistinguishable: witness.is_none(),
        witness: witness.clone(),
    };
    cli.write("indist-report.json", &serde_json::to_string_pretty(&report)?)?;
    Ok(if witness.is_none() { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Serialize)]
struct ScenarioReport {
    kind: ScenarioKind,
    effective_inputs: Vec<Value>,
    f: usize,
    complete: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pair: Option<PairReport>,
}

fn scenario(cli: &Cli) -> Result<Outcome> {
    let file = cli.scenario_file()?;
    let sp = file.to_params()?;
    let depth = cli.depth_or(file.depth);
    let protocol = protocol_by_name(&cli.protocol, file.n, file.t)?;
    let run = build_scenario(file.kind, &sp, protocol.clone(), depth)?;
    println!("scenario {}: inputs {}, f = {}", run.kind, run.effective_inputs, run.f);
    let complete = summarize(&run.ensemble);
    for p in &sp.m_set {
        print_decisions(&run.ensemble, *p);
    }
    let mut pass = complete;
    let mut pair = None;
    if complete && file.kind != ScenarioKind::E1 {
        let e1 = build_scenario(ScenarioKind::E1, &sp, protocol, depth)?;
        let report = verify_scenario_pair(&e1, &run, &sp)?;
        for p in &report.parties {
            let verdict = if p.indistinguishable { "indistinguishable" } else { "distinguishable" };
            print!("(E1,{}) {}: {verdict}", run.kind, p.party);
            match &p.witness {
                Some(w) => println!(", {w}"),
                None => println!(", decision probabilities {}", if p.decisions_equal { "equal" } else { "differ" }),
            }
        }
        pass &= report.pass;
        pair = Some(report);
    }
    let focus = sp.m_set.iter().next().copied().unwrap_or(PartyId(0));
    cli.export(&run.ensemble, &format!("scenario-{}", run.kind), focus)?;
    let report = ScenarioReport {
        kind: run.kind,
        effective_inputs: run.effective_inputs.values().to_vec(),
        f: run.f,
        complete,
        pair,
    };
    cli.write("scenario-report.json", &serde_json::to_string_pretty(&report)?)?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

#[derive(Serialize)]
struct ValidityReport {
    #[serde(flatten)]
    qualitative: QvVerdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    weak_validity: Option<bool>,
}

fn validity(cli: &Cli) -> Result<Outcome> {
    let built = cli.build_default()?;
    let ens = &built.ensemble;
    if !summarize(ens) {
        bail!("validity needs a complete ensemble; raise --depth");
    }
    let vin = InputMultiset::new(ens.inputs());
    println!("inputs: {vin}");
    let verdict = check_qualitative_validity(ens, &vin)?;
    println!("qualitative validity: {verdict}");
    if !verdict.pass {
        println!("gap: {}", &verdict.bound - &verdict.measured);
    }
    let weak = match check_weak_validity(ens, &vin) {
        Ok(holds) => {
            println!("weak validity: {}", if holds { "holds" } else { "violated" });
            Some(holds)
        }
        Err(ensemblelab::Error::Precondition(why)) => {
            println!("weak validity: not applicable ({why})");
            None
        }
        Err(e) => return Err(e.into()),
    };
    let pass = verdict.pass && weak != Some(false);
    let report = ValidityReport {
        qualitative: verdict,
        weak_validity: weak,
    };
    cli.write("validity-report.json", &serde_json::to_string_pretty(&report)?)?;
    Ok(if pass { Outcome::Pass } else { Outcome::Fail })
}

fn ams_bound(n: usize, t: usize, f: usize, x: &str) -> Result<Outcome> {
    let x: XSpec = x.parse()?;
    let model = ElectionModel::new(n, t, f, x)?;
    let q = ams_decision_bound(&model)?;
    if f == 0 {
        println!("Q = {q}");
    } else {
        println!("Q = {q} ≤ {}", model.bound());
    }
    Ok(if q <= model.bound() { Outcome::Pass } else { Outcome::Fail })
}

fn falsify(cli: &Cli) -> Result<Outcome> {
    let spec = match &cli.params {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => FalsifyFile {
            n: 4,
            t: 1,
            alphabet: ["a", "b", "c"].into_iter().map(Value::sym).collect(),
            f: vec![1],
            depth: None,
        },
    };
    let params = SystemParams::new(spec.n, spec.t, 0)?;
    let protocol: Arc<dyn Protocol> = protocol_by_name(&cli.protocol, spec.n, spec.t)?;
    let depth = cli.depth.map(|d| d as usize).or(spec.depth).unwrap_or(64);
    let report = falsification_harness(protocol, params, &spec.alphabet, &spec.f, depth)?;
    for p in &report.points {
        let inputs = InputMultiset::new(p.inputs.clone());
        let line = match &p.outcome {
            PointOutcome::Skipped => "guaranteed branch, skipped".to_string(),
            PointOutcome::Precondition { reason } => format!("precondition failed: {reason}"),
            PointOutcome::NoImprovement => "no strict improvement".to_string(),
            PointOutcome::FirstCase { u, p1, share, measured, bound, violated } => format!(
                "P1({u}) = {p1} > {share}; E3 decides inside its inputs with probability {measured} vs bound {bound}{}",
                if *violated { ", VIOLATED" } else { "" }
            ),
            PointOutcome::SecondCase { w, p1, measured, bound, violated } => format!(
                "P1({w}) = {p1} > 0; E4 decides inside its inputs with probability {measured} vs bound {bound}{}",
                if *violated { ", VIOLATED" } else { "" }
            ),
        };
        println!("{inputs} f={}: {line}", p.f_hat);
    }
    cli.write("falsify-report.json", &serde_json::to_string_pretty(&report)?)?;
    if report.no_strict_improvement() {
        println!("no strict improvement at tested points");
        Ok(Outcome::Pass)
    } else {
        println!("strict improvement evidence at {} points", report.points.len() - report.points.iter().filter(|p| matches!(p.outcome, PointOutcome::Skipped | PointOutcome::NoImprovement)).count());
        Ok(Outcome::Fail)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate => simulate(&cli),
        Command::LocalEnsemble => local_ensemble(&cli),
        Command::Indist { left, right } => indist(&cli, left, right),
        Command::Scenario => scenario(&cli),
        Command::Validity => validity(&cli),
        Command::AmsBound { n, t, f, x } => ams_bound(*n, *t, *f, x),
        Command::Falsify => falsify(&cli),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
