use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use offbranch::cohen::{hair_report, run_generic, CohenCondition};
use offbranch::families::{
    ad_upto, bar_o, box_nodes, canonical_branches, column_multiplicity, meets_infinitude_threshold,
    offbranch_upto, pi_decode, pi_embed, AdReport, Family, Verdict, DEFAULT_CHAIN_THRESHOLD,
};
use offbranch::measure::{self, ClopenSet, Dyadic};
use offbranch::sacks::{fuse, stage_step, EngineConfig, ProdCondition, StageRecord, StageState};
use offbranch::treecore::{is_antichain, max_chain_len, BinNode, Node, NodeSet, TreeNode};
use offbranch::SacksError;

use crate::spec::{parse_family_spec, parse_oracle_spec};
use crate::{CliError, Report};

#[derive(Debug, Parser)]
#[command(
    name = "offbranch",
    version,
    about = "Finite checks for off-branch antichain families"
)]
pub struct Cli {
    /// Write the report to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Embed nodes into the binary tree and check the embedding.
    Embed(EmbedArgs),
    #[command(subcommand)]
    Family(FamilyCommand),
    #[command(subcommand)]
    Cohen(CohenCommand),
    #[command(subcommand)]
    Measure(MeasureCommand),
    /// Translate family members along canonical branches to subsets of ω×ω and back.
    BarO(BarOArgs),
    #[command(subcommand)]
    Sacks(SacksCommand),
    /// Randomized property checks.
    #[command(hide = true)]
    SelfTest(SelfTestArgs),
}

#[derive(Debug, Subcommand)]
pub enum FamilyCommand {
    /// Enumerate each member and look for chains and large intersections.
    Check(FamilyArgs),
}

#[derive(Debug, Subcommand)]
pub enum CohenCommand {
    /// Run a finite generic through every member and report its hair.
    Hair(CohenHairArgs),
}

#[derive(Debug, Subcommand)]
pub enum MeasureCommand {
    /// Measure of the tail unions of a node list.
    Decay(MeasureArgs),
    /// Predecessor bound on the tail windows of a node list.
    Bound(MeasureArgs),
}

#[derive(Debug, Subcommand)]
pub enum SacksCommand {
    /// Run the stage construction against a name oracle.
    Run(SacksRunArgs),
    /// Check that a sequence of conditions fuses.
    FuseCheck(FuseCheckArgs),
}

fn depth_arg(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(0) => Err("depth must be at least 1".into()),
        Ok(d) => Ok(d),
        Err(e) => Err(e.to_string()),
    }
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// Nodes to embed; without any, every node of the window is embedded.
    pub nodes: Vec<Node>,
    #[arg(long, default_value = "4", value_parser = depth_arg)]
    pub depth: usize,
}

#[derive(Debug, Args)]
pub struct FamilyArgs {
    #[arg(long)]
    pub family: PathBuf,
    #[arg(long, default_value = "6", value_parser = depth_arg)]
    pub depth: usize,
}

#[derive(Debug, Args)]
pub struct CohenHairArgs {
    #[arg(long)]
    pub family: PathBuf,
    #[arg(long, default_value = "6", value_parser = depth_arg)]
    pub depth: usize,
    /// Initial condition.
    #[arg(long, default_value = "e")]
    pub start: Node,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct NodeSource {
    /// Use `⟨1⟩, ⟨0,1⟩, ⟨0,0,1⟩, …` with this many entries.
    #[arg(long)]
    pub zeros_then_one: Option<usize>,
    /// JSON array of binary node literals.
    #[arg(long)]
    pub nodes: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub source: NodeSource,
}

#[derive(Debug, Args)]
pub struct BarOArgs {
    #[arg(long)]
    pub family: PathBuf,
    /// Only this member.
    #[arg(long)]
    pub member: Option<String>,
    /// Number of canonical branches.
    #[arg(long, default_value_t = 6)]
    pub branches: usize,
    #[arg(long, default_value = "6", value_parser = depth_arg)]
    pub depth: usize,
}

#[derive(Debug, Args)]
pub struct SacksRunArgs {
    #[arg(long)]
    pub oracle: PathBuf,
    #[arg(long, default_value_t = 2)]
    pub stages: usize,
    /// Family spec whose members, in order, are B_0, B_1, ….
    #[arg(long)]
    pub b_list: PathBuf,
    /// Write the stage records here.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// Depth to which B-list members are enumerated.
    #[arg(long, default_value = "10", value_parser = depth_arg)]
    pub depth: usize,
    #[arg(long, default_value = "8", value_parser = depth_arg)]
    pub fuse_depth: usize,
    #[arg(long, default_value_t = EngineConfig::default().probe_count)]
    pub probe_count: usize,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false, id = "fuse_source")]
pub struct FuseSource {
    /// A trace written by `sacks run`; the run is taken to start from the full product.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// JSON array of conditions, each a map from coordinate to stem literals.
    #[arg(long)]
    pub conditions: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FuseCheckArgs {
    #[command(flatten)]
    pub source: FuseSource,
    #[arg(long, default_value = "8", value_parser = depth_arg)]
    pub depth: usize,
}

#[derive(Debug, Args)]
pub struct SelfTestArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 200)]
    pub cases: usize,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_family(path: &Path) -> Result<Family, CliError> {
    parse_family_spec(&read(path)?)
}

fn json_error(e: serde_json::Error) -> CliError {
    CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    }
}

/// Runs the command and writes its report (and any trace) to disk or stdout.
pub fn run(cli: &Cli) -> Result<Report, CliError> {
    let report = match &cli.command {
        Command::Embed(a) => embed(a),
        Command::Family(FamilyCommand::Check(a)) => family_check(a),
        Command::Cohen(CohenCommand::Hair(a)) => cohen_hair(a),
        Command::Measure(MeasureCommand::Decay(a)) => measure_decay(a),
        Command::Measure(MeasureCommand::Bound(a)) => measure_bound(a),
        Command::BarO(a) => bar_o_cmd(a),
        Command::Sacks(SacksCommand::Run(a)) => sacks_run(a),
        Command::Sacks(SacksCommand::FuseCheck(a)) => fuse_check(a),
        Command::SelfTest(a) => Ok(self_test(a)),
    }?;
    match &cli.output {
        Some(p) => write(p, &report.to_json())?,
        None => print!("{}", report.to_json()),
    }
    Ok(report)
}

#[derive(Serialize)]
struct EmbedRecord {
    node: Node,
    image: BinNode,
    roundtrip: bool,
    order_preserved: bool,
}

fn embed(a: &EmbedArgs) -> Result<Report, CliError> {
    let mut report = Report::new("embed");
    let nodes: Vec<Node> = if a.nodes.is_empty() {
        box_nodes(a.depth, a.depth as u32).collect()
    } else {
        a.nodes.clone()
    };
    let images: Vec<BinNode> = nodes.iter().map(pi_embed).collect();
    for (s, img) in nodes.iter().zip(&images) {
        let roundtrip = report.check(pi_decode(img).as_ref() == Ok(s));
        let order_preserved = report.check(
            nodes
                .iter()
                .zip(&images)
                .all(|(t, timg)| s.is_prefix_of(t) == img.is_prefix_of(timg)),
        );
        report.record(&EmbedRecord {
            node: s.clone(),
            image: img.clone(),
            roundtrip,
            order_preserved,
        });
    }
    Ok(report)
}

#[derive(Serialize)]
struct MemberRecord {
    label: String,
    size: usize,
    antichain: bool,
    longest_chain: usize,
    meets_infinitude_threshold: bool,
    offbranch: AdReport,
}

#[derive(Serialize)]
struct PairRecord {
    a: String,
    b: String,
    intersection: AdReport,
}

fn family_check(a: &FamilyArgs) -> Result<Report, CliError> {
    let family = load_family(&a.family)?;
    let mut report = Report::new("family-check");
    for m in family.members() {
        let t = m.set.enumerate_upto(a.depth);
        let ob = offbranch_upto(&m.set, a.depth, DEFAULT_CHAIN_THRESHOLD);
        report.check(!matches!(ob.verdict, Verdict::ChainFound(_)));
        report.record(&MemberRecord {
            label: m.label.clone(),
            size: t.len(),
            antichain: is_antichain(&t),
            longest_chain: max_chain_len(&t),
            meets_infinitude_threshold: meets_infinitude_threshold(&t, a.depth),
            offbranch: ob,
        });
    }
    let ms = family.members();
    for (i, x) in ms.iter().enumerate() {
        for y in &ms[i + 1..] {
            let r = ad_upto(&x.set, &y.set, a.depth);
            report.check(r.verdict == Verdict::ConsistentWithAd);
            report.record(&PairRecord {
                a: x.label.clone(),
                b: y.label.clone(),
                intersection: r,
            });
        }
    }
    Ok(report)
}

#[derive(Serialize)]
struct HairRow {
    label: String,
    witness: Node,
    witness_level: usize,
    intersection: NodeSet,
    bound_ok: bool,
}

fn cohen_hair(a: &CohenHairArgs) -> Result<Report, CliError> {
    let family = load_family(&a.family)?;
    let targets: Vec<(String, NodeSet)> = family
        .members()
        .iter()
        .map(|m| (m.label.clone(), m.set.enumerate_upto(a.depth)))
        .collect();
    let run = run_generic(&CohenCondition(a.start.clone()), &targets);
    let rows = hair_report(&run, &targets).map_err(|e| CliError::Input(e.to_string()))?;
    let mut report = Report::new("cohen-hair");
    for (r, met) in rows.into_iter().zip(&run.met) {
        report.check(r.bound_ok);
        report.record(&HairRow {
            label: r.label,
            witness: r.witness,
            witness_level: met.level,
            intersection: r.intersection,
            bound_ok: r.bound_ok,
        });
    }
    Ok(report)
}

fn load_nodes(src: &NodeSource) -> Result<Vec<BinNode>, CliError> {
    match (&src.zeros_then_one, &src.nodes) {
        (Some(n), _) => Ok(measure::zeros_then_one(*n)),
        (None, Some(p)) => serde_json::from_str(&read(p)?).map_err(json_error),
        (None, None) => Err(CliError::Input("no node source".into())),
    }
}

#[derive(Serialize)]
struct MeasureRow {
    n: usize,
    stems_count: usize,
    measure: Dyadic,
    bound_rhs: Dyadic,
    holds: bool,
}

fn measure_decay(a: &MeasureArgs) -> Result<Report, CliError> {
    let f = load_nodes(&a.source)?;
    let mut report = Report::new("measure-decay");
    let to = f.len();
    for n in 0..=to {
        let u = measure::window_union(&f, n, to).expect("window in range");
        let m = measure::measure(&u);
        // the union bound: sum of the interval measures
        let rhs: Dyadic = f[n..to]
            .iter()
            .map(|s| Dyadic::pow2_neg(s.level() as u64))
            .sum();
        let holds = report.check(m <= rhs);
        report.record(&MeasureRow {
            n,
            stems_count: u.stems().len(),
            measure: m,
            bound_rhs: rhs,
            holds,
        });
    }
    Ok(report)
}

fn measure_bound(a: &MeasureArgs) -> Result<Report, CliError> {
    let f = load_nodes(&a.source)?;
    let mut report = Report::new("measure-bound");
    let to = f.len();
    for n in 0..to {
        let b = measure::pred_window_bound(&f, n, to).expect("window in range");
        let stems = measure::window_minimal(&f, n, to).expect("window in range");
        let holds = report.check(b.holds);
        report.record(&MeasureRow {
            n,
            stems_count: stems.len(),
            measure: b.lhs,
            bound_rhs: b.rhs,
            holds,
        });
    }
    Ok(report)
}

#[derive(Serialize)]
struct BarORecord {
    label: String,
    pairs: Vec<(usize, usize)>,
    recovered: NodeSet,
    roundtrip_ok: bool,
    antichain: bool,
    column_multiplicity: usize,
}

fn bar_o_cmd(a: &BarOArgs) -> Result<Report, CliError> {
    let family = load_family(&a.family)?;
    let bs = canonical_branches(a.branches);
    let mut report = Report::new("bar-o");
    let members: Vec<_> = match &a.member {
        Some(l) => {
            let m = family
                .members()
                .iter()
                .find(|m| &m.label == l)
                .ok_or_else(|| CliError::UnknownReference(l.clone()))?;
            vec![m]
        }
        None => family.members().iter().collect(),
    };
    for m in members {
        let pairs = bar_o(&m.set, &bs, a.depth).map_err(|e| CliError::Input(e.to_string()))?;
        let recovered =
            offbranch::families::unbar(&pairs, &bs).map_err(|e| CliError::Input(e.to_string()))?;
        let expected: NodeSet = bs
            .iter()
            .flat_map(|b| b.prefixes_upto(a.depth))
            .filter(|s| m.set.contains(s))
            .collect();
        let roundtrip_ok = report.check(recovered == expected);
        let antichain = is_antichain(&m.set.enumerate_upto(a.depth.max(a.branches + 1)));
        let mult = column_multiplicity(&pairs);
        if antichain {
            report.check(mult <= 1);
        }
        report.record(&BarORecord {
            label: m.label.clone(),
            pairs: pairs.into_iter().collect(),
            recovered,
            roundtrip_ok,
            antichain,
            column_multiplicity: mult,
        });
    }
    Ok(report)
}

#[derive(Serialize)]
struct StageSummary {
    stage: usize,
    a_set_size: usize,
    survivors: Vec<Node>,
    #[serde(rename = "S_block")]
    s_block: NodeSet,
    leq_n_check: bool,
    invariant_violations: Vec<String>,
    survivors_in_oracle_set: bool,
    condition: BTreeMap<usize, Vec<String>>,
}

#[derive(Serialize)]
struct FuseRecord {
    fuse_depth: usize,
    fusion_sequence: bool,
    failed_at: Option<usize>,
    agreement: Vec<bool>,
    truncated_perfect: bool,
}

#[derive(Serialize)]
struct EngineFailure {
    stage: usize,
    error: String,
}

fn fuse_record(report: &mut Report, seq: &[ProdCondition], depth: usize) -> FuseRecord {
    let coords = seq
        .iter()
        .flat_map(|p| p.support())
        .max()
        .map_or(1, |c| c + 1);
    match fuse(seq, depth) {
        Ok(f) => {
            report.check(true);
            for &ok in &f.agreement {
                report.check(ok);
            }
            let truncated_perfect = report.check(f.truncated_is_perfect(coords));
            FuseRecord {
                fuse_depth: depth,
                fusion_sequence: true,
                failed_at: None,
                agreement: f.agreement,
                truncated_perfect,
            }
        }
        Err(e) => {
            report.check(false);
            let failed_at = match e {
                SacksError::NotAFusionSequence(n) => Some(n),
                _ => None,
            };
            FuseRecord {
                fuse_depth: depth,
                fusion_sequence: false,
                failed_at,
                agreement: Vec::new(),
                truncated_perfect: false,
            }
        }
    }
}

fn sacks_run(a: &SacksRunArgs) -> Result<Report, CliError> {
    let oracle = parse_oracle_spec(&read(&a.oracle)?)?;
    let b_family = load_family(&a.b_list)?;
    let mut b_list = Vec::with_capacity(b_family.len());
    for m in b_family.members() {
        let t = m.set.enumerate_upto(a.depth);
        if !is_antichain(&t) {
            return Err(CliError::Input(format!(
                "B-list member {:?} is not an antichain",
                m.label
            )));
        }
        b_list.push(t);
    }
    let cfg = EngineConfig {
        probe_count: a.probe_count,
        ..EngineConfig::default()
    };
    let mut report = Report::new("sacks-run");
    let mut states = vec![StageState::initial(ProdCondition::full(), b_list)];
    let mut records: Vec<StageRecord> = Vec::new();
    for _ in 0..a.stages {
        let cur = states.last().unwrap();
        match stage_step(cur, oracle.name.as_ref(), &cfg) {
            Ok((next, rec)) => {
                report.check(rec.leq_n_check);
                let inv = next.check_invariants();
                report.check(inv.is_empty());
                let in_set = rec.survivors.iter().all(|s| oracle.universe.contains(s));
                report.check(in_set);
                report.record(&StageSummary {
                    stage: rec.stage,
                    a_set_size: rec.a_sets.first().map_or(0, |x| x.len()),
                    survivors: rec.survivors.clone(),
                    s_block: rec.s_block.clone(),
                    leq_n_check: rec.leq_n_check,
                    invariant_violations: inv,
                    survivors_in_oracle_set: in_set,
                    condition: rec.condition.clone(),
                });
                states.push(next);
                records.push(rec);
            }
            Err(e @ SacksError::BudgetExceeded { .. }) => {
                return Err(CliError::Input(e.to_string()))
            }
            Err(e) => {
                report.check(false);
                report.record(&EngineFailure {
                    stage: cur.n + 1,
                    error: e.to_string(),
                });
                break;
            }
        }
    }
    let seq: Vec<ProdCondition> = states.iter().map(|s| s.p.clone()).collect();
    let fr = fuse_record(&mut report, &seq, a.fuse_depth);
    report.record(&fr);
    if let Some(path) = &a.trace {
        let v = serde_json::to_value(&records).expect("trace serializes");
        let mut text = serde_json::to_string_pretty(&v).expect("value serializes");
        text.push('\n');
        write(path, &text)?;
    }
    Ok(report)
}

#[derive(serde::Deserialize)]
struct TraceEntry {
    condition: BTreeMap<usize, Vec<String>>,
}

fn fuse_check(a: &FuseCheckArgs) -> Result<Report, CliError> {
    let maps: Vec<BTreeMap<usize, Vec<String>>> = match (&a.source.trace, &a.source.conditions) {
        (Some(p), _) => {
            let entries: Vec<TraceEntry> = serde_json::from_str(&read(p)?).map_err(json_error)?;
            std::iter::once(BTreeMap::new())
                .chain(entries.into_iter().map(|e| e.condition))
                .collect()
        }
        (None, Some(p)) => serde_json::from_str(&read(p)?).map_err(json_error)?,
        (None, None) => return Err(CliError::Input("no condition source".into())),
    };
    let seq = maps
        .iter()
        .map(ProdCondition::from_summary)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Input(e.to_string()))?;
    if seq.is_empty() {
        return Err(CliError::Input("empty condition sequence".into()));
    }
    let mut report = Report::new("fuse-check");
    let fr = fuse_record(&mut report, &seq, a.depth);
    report.record(&fr);
    Ok(report)
}

#[derive(Serialize)]
struct SelfTestRecord {
    property: &'static str,
    cases: usize,
    failures: usize,
}

fn random_bin(rng: &mut ChaCha8Rng, max_len: usize) -> BinNode {
    let len = rng.gen_range(0..=max_len);
    BinNode::from_bools((0..len).map(|_| rng.gen()).collect())
}

fn bitmask6(c: &ClopenSet) -> u64 {
    (0..64u32)
        .filter(|x| {
            let w = BinNode::from_bools((0..6).map(|i| x >> (5 - i) & 1 == 1).collect());
            c.stems().iter().any(|s| s.is_prefix_of(&w))
        })
        .fold(0, |m, x| m | 1 << x)
}

fn self_test(a: &SelfTestArgs) -> Report {
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut report = Report::new("self-test");
    let tally = |report: &mut Report, property, ok: Vec<bool>| {
        let failures = ok.iter().filter(|&&b| !report.check(b)).count();
        report.record(&SelfTestRecord {
            property,
            cases: ok.len(),
            failures,
        });
    };

    let ok = (0..a.cases)
        .map(|_| {
            let len = rng.gen_range(0..5);
            let s = Node::new((0..len).map(|_| rng.gen_range(0..5)).collect());
            let t = Node::new(
                s.coords()
                    .iter()
                    .copied()
                    .take(rng.gen_range(0..=len))
                    .chain((0..rng.gen_range(0..3)).map(|_| rng.gen_range(0..5)))
                    .collect(),
            );
            pi_decode(&pi_embed(&s)).as_ref() == Ok(&s)
                && s.is_prefix_of(&t) == pi_embed(&s).is_prefix_of(&pi_embed(&t))
        })
        .collect();
    tally(&mut report, "pi-roundtrip", ok);

    let ok = (0..a.cases)
        .map(|_| {
            let gen = |rng: &mut ChaCha8Rng| {
                let k = rng.gen_range(0..5);
                ClopenSet::from_stems((0..k).map(|_| random_bin(rng, 6)).collect::<Vec<_>>())
            };
            let (x, y) = (gen(&mut rng), gen(&mut rng));
            let (mx, my) = (bitmask6(&x), bitmask6(&y));
            bitmask6(&measure::union(&x, &y)) == mx | my
                && bitmask6(&measure::meet(&x, &y)) == mx & my
                && bitmask6(&measure::diff(&x, &y)) == mx & !my
                && measure::measure(&x) == Dyadic::new(mx.count_ones(), 6)
        })
        .collect();
    tally(&mut report, "clopen-vs-bitset", ok);

    let ok = (0..a.cases)
        .map(|_| {
            let len = rng.gen_range(1..10);
            let f: Vec<BinNode> = (0..len).map(|_| random_bin(&mut rng, 8)).collect();
            let from = rng.gen_range(0..len);
            measure::pred_window_bound(&f, from, len).is_ok_and(|b| b.holds)
        })
        .collect();
    tally(&mut report, "pred-window-bound", ok);
    report
}
