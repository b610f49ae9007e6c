//! Command-line front door: table lifecycle, hashing, and the analysis
//! suite, all emitting machine-readable JSON on stdout.
//!
//! Exit codes: 0 success, 1 usage error, 2 domain error. Domain errors are
//! printed to stderr as `{"error": CODE, "detail": ...}`; stdout always
//! carries exactly one JSON document (or CSV when requested).

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use num_bigint::BigUint;

use permhash::analysis::{self, Mode};
use permhash::ring::{RingConfig, RingState};
use permhash::ucycle;
use permhash::{
    capacity, derive_key, entropy_guard, first_live, min_key_bits, permute, HashKey,
    InsertionStrategy, NodeId, NodeTable,
};

#[derive(Parser)]
#[command(name = "permhash", version, about = "Consistent hashing with exact uniformity")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create and modify node table files
    Table(TableCmd),
    /// Hash a key against a table
    Hash(HashCmd),
    /// Censuses, remap matrices, and the simple-mod baseline
    Analyze(AnalyzeCmd),
    /// Classic circle algorithm: state files and statistics
    Ring(RingCmd),
    /// Universal cycles of shorthand permutations
    Cycle(CycleCmd),
    /// Key-width capacity bounds
    Capacity(CapacityCmd),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Output {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum Strategy {
    FromStart,
    FromEnd,
}

impl From<Strategy> for InsertionStrategy {
    fn from(s: Strategy) -> Self {
        match s {
            Strategy::FromStart => InsertionStrategy::FromStart,
            Strategy::FromEnd => InsertionStrategy::FromEnd,
        }
    }
}

#[derive(Args)]
struct TableCmd {
    #[command(subcommand)]
    action: TableAction,
}

#[derive(Subcommand)]
enum TableAction {
    /// Create a table file from a list of node labels
    Init {
        #[arg(short = 't', long, env = "PERMHASH_TABLE")]
        table: PathBuf,
        #[arg(long, value_enum, default_value = "from-start")]
        strategy: Strategy,
        nodes: Vec<String>,
    },
    /// Add a node (fills the lowest free slot, else appends)
    Add {
        #[arg(short = 't', long, env = "PERMHASH_TABLE")]
        table: PathBuf,
        node: String,
    },
    /// Remove a node (leaves a free marker unless it is trailing)
    Remove {
        #[arg(short = 't', long, env = "PERMHASH_TABLE")]
        table: PathBuf,
        node: String,
    },
    /// Print the table file
    Show {
        #[arg(short = 't', long, env = "PERMHASH_TABLE")]
        table: PathBuf,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("key").required(true).args(["key_bytes", "key_int"])))]
struct HashCmd {
    #[arg(short = 't', long, env = "PERMHASH_TABLE")]
    table: PathBuf,
    /// Key material, run through the key-derivation function
    #[arg(long)]
    key_bytes: Option<String>,
    /// Integer key, used directly (arbitrary precision)
    #[arg(long)]
    key_int: Option<String>,
    /// Key width in bits: derivation width for --key-bytes (default 512),
    /// declared source width for --key-int (default: smallest byte multiple)
    #[arg(long)]
    key_bits: Option<u64>,
    /// Print the whole permutation instead of the first node
    #[arg(long)]
    full_permutation: bool,
    /// Turn the key-entropy warning into an error
    #[arg(long)]
    strict_entropy: bool,
}

#[derive(Args)]
struct AnalyzeCmd {
    #[command(subcommand)]
    action: AnalyzeAction,
}

#[derive(Args)]
#[command(group(ArgGroup::new("mode").required(true).args(["exact", "samples"])))]
struct ModeArgs {
    /// Enumerate every key in [0, slots!)
    #[arg(long)]
    exact: bool,
    /// Use this many seeded random keys instead
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl ModeArgs {
    fn mode(&self) -> Mode {
        match self.samples {
            Some(samples) => Mode::Sampled {
                samples,
                seed: self.seed,
            },
            None => Mode::Exact,
        }
    }
}

#[derive(Subcommand)]
enum AnalyzeAction {
    /// First-position counts per node over a key range
    Census {
        #[arg(short = 't', long, env = "PERMHASH_TABLE")]
        table: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
        #[arg(long, value_enum, default_value = "json")]
        output: Output,
    },
    /// Key movement matrix between two tables
    Remap {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        #[command(flatten)]
        mode: ModeArgs,
        #[arg(long, value_enum, default_value = "json")]
        output: Output,
    },
    /// Exact survival fraction of the simple-mod hash from n to n+1 codes
    Survival {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        m: u64,
    },
}

#[derive(Args)]
struct RingCmd {
    #[command(subcommand)]
    action: RingAction,
}

#[derive(Subcommand)]
enum RingAction {
    /// Create an empty ring state file
    Init {
        #[arg(short = 'r', long)]
        ring: PathBuf,
        #[arg(long, default_value_t = 32)]
        point_bits: u32,
        #[arg(long, default_value_t = 1)]
        replicas: u32,
    },
    /// Add a node's points to the ring
    Add {
        #[arg(short = 'r', long)]
        ring: PathBuf,
        node: String,
    },
    /// Remove a node's points from the ring
    Remove {
        #[arg(short = 'r', long)]
        ring: PathBuf,
        node: String,
    },
    /// Owner of a key: the next node point around the circle
    Lookup {
        #[arg(short = 'r', long)]
        ring: PathBuf,
        #[arg(long, group = "ringkey")]
        key_bytes: Option<String>,
        #[arg(long, group = "ringkey")]
        key_int: Option<String>,
        #[arg(long)]
        key_bits: Option<u64>,
    },
    /// Segment statistics over fresh random rings
    Stats {
        #[arg(long)]
        nodes: usize,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Measure per-node load spread instead of the median/mean ratio
        #[arg(long)]
        spread: bool,
        #[arg(long, value_enum, default_value = "json")]
        output: Output,
    },
}

#[derive(Args)]
struct CycleCmd {
    #[command(subcommand)]
    action: CycleAction,
}

#[derive(Subcommand)]
enum CycleAction {
    /// Search for a universal cycle of shorthand permutations
    Build {
        /// Node labels; alternatively --n for generated labels
        nodes: Vec<String>,
        #[arg(long, conflicts_with = "nodes")]
        n: Option<usize>,
        #[arg(long)]
        budget: Option<u64>,
        /// Also write the cycle to this file
        #[arg(short = 'o', long)]
        out: Option<PathBuf>,
    },
    /// Check the universal-cycle invariants of a symbol file
    Verify {
        #[arg(short = 'f', long)]
        file: PathBuf,
    },
    /// Substitute removed nodes and print the survivor histogram
    RemoveSim {
        #[arg(short = 'f', long)]
        file: PathBuf,
        #[arg(long, required = true)]
        remove: Vec<String>,
    },
    /// Node for a key on the cycle's circle
    Lookup {
        #[arg(short = 'f', long)]
        file: PathBuf,
        #[arg(long, group = "cyclekey")]
        key_bytes: Option<String>,
        #[arg(long, group = "cyclekey")]
        key_int: Option<String>,
        #[arg(long)]
        key_bits: Option<u64>,
        #[arg(long)]
        remove: Vec<String>,
    },
}

#[derive(Args)]
#[command(group(ArgGroup::new("what").required(true).args(["bits", "nodes"])))]
struct CapacityCmd {
    /// Largest node count a key of this width can choose between
    #[arg(long)]
    bits: Option<u64>,
    /// Smallest key width for this many nodes
    #[arg(long)]
    nodes: Option<u64>,
    /// Extra safety bits on top of log2(nodes!)
    #[arg(long, default_value_t = 0)]
    margin: u64,
}

/// Failures after argument parsing; all exit with code 2.
struct CliError {
    code: String,
    detail: String,
}

impl CliError {
    fn new(code: &str, detail: impl Into<String>) -> Self {
        CliError {
            code: code.to_owned(),
            detail: detail.into(),
        }
    }
}

impl From<permhash::Error> for CliError {
    fn from(err: permhash::Error) -> Self {
        CliError::new(err.code(), err.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(err.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            eprint!("{err}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!(
                "{}",
                serde_json::json!({ "error": err.code, "detail": err.detail })
            );
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Table(cmd) => run_table(cmd.action),
        Command::Hash(cmd) => run_hash(cmd),
        Command::Analyze(cmd) => run_analyze(cmd.action),
        Command::Ring(cmd) => run_ring(cmd.action),
        Command::Cycle(cmd) => run_cycle(cmd.action),
        Command::Capacity(cmd) => run_capacity(cmd),
    }
}

fn read_file(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::new("IO_ERROR", format!("{}: {e}", path.display())))
}

/// Write via a temporary file in the same directory plus rename, so a
/// killed process never leaves a half-written file behind.
fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let map_err = |e: std::io::Error| CliError::new("IO_ERROR", format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(map_err)?;
    tmp.write_all(bytes).map_err(map_err)?;
    tmp.as_file().sync_all().map_err(map_err)?;
    tmp.persist(path)
        .map_err(|e| CliError::new("IO_ERROR", format!("{}: {}", path.display(), e.error)))?;
    Ok(())
}

fn read_table(path: &Path) -> CliResult<NodeTable> {
    Ok(NodeTable::deserialize(&read_file(path)?)?)
}

fn write_table(path: &Path, table: &NodeTable) -> CliResult<()> {
    write_atomic(path, &table.serialize())
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string(value).expect("report serialization cannot fail")
    );
}

fn node_id(label: &str) -> CliResult<NodeId> {
    Ok(NodeId::new(label)?)
}

fn run_table(action: TableAction) -> CliResult<()> {
    match action {
        TableAction::Init {
            table,
            strategy,
            nodes,
        } => {
            let ids = nodes
                .iter()
                .map(|l| node_id(l))
                .collect::<CliResult<Vec<_>>>()?;
            let t = NodeTable::new(ids, strategy.into())?;
            write_table(&table, &t)?;
            print_table(&t);
        }
        TableAction::Add { table, node } => {
            let t = read_table(&table)?.add(node_id(&node)?)?;
            write_table(&table, &t)?;
            print_table(&t);
        }
        TableAction::Remove { table, node } => {
            let t = read_table(&table)?.remove(&node_id(&node)?)?;
            write_table(&table, &t)?;
            print_table(&t);
        }
        TableAction::Show { table } => print_table(&read_table(&table)?),
    }
    Ok(())
}

fn print_table(table: &NodeTable) {
    println!(
        "{}",
        String::from_utf8(table.serialize()).expect("table files are UTF-8")
    );
}

/// Build the key from --key-bytes / --key-int plus the optional width.
fn make_key(
    key_bytes: &Option<String>,
    key_int: &Option<String>,
    key_bits: Option<u64>,
) -> CliResult<HashKey> {
    match (key_bytes, key_int) {
        (Some(bytes), None) => Ok(derive_key(bytes.as_bytes(), key_bits.unwrap_or(512))?),
        (None, Some(int)) => {
            let value = BigUint::from_str(int)
                .map_err(|e| CliError::new("PARSE_ERROR", format!("--key-int: {e}")))?;
            let bits = key_bits.unwrap_or_else(|| value.bits().div_ceil(8).max(1) * 8);
            Ok(HashKey::new(value, bits)?)
        }
        _ => unreachable!("clap enforces exactly one key source"),
    }
}

fn run_hash(cmd: HashCmd) -> CliResult<()> {
    let table = read_table(&cmd.table)?;
    let key = make_key(&cmd.key_bytes, &cmd.key_int, cmd.key_bits)?;
    let guard = entropy_guard(&table, &key);
    if guard.breached {
        if cmd.strict_entropy {
            return Err(CliError::new(
                "ENTROPY_GUARD",
                format!(
                    "table needs {} key bits plus a 32-bit margin, key has {}",
                    guard.required_bits, guard.source_bits
                ),
            ));
        }
        eprintln!(
            "{}",
            serde_json::json!({
                "warning": "entropy_guard",
                "required_bits": guard.required_bits,
                "source_bits": guard.source_bits,
            })
        );
    }
    if cmd.full_permutation {
        let p = permute(&table, &key)?;
        let labels: Vec<&str> = p.iter().map(NodeId::as_str).collect();
        print_json(&labels);
    } else {
        print_json(&first_live(&table, &key)?.as_str());
    }
    Ok(())
}

fn csv_rows(header: &[&str], rows: Vec<Vec<String>>) -> CliResult<()> {
    let mut writer = csv::Writer::from_writer(std::io::stdout());
    let fail = |e: csv::Error| CliError::new("IO_ERROR", e.to_string());
    writer.write_record(header).map_err(fail)?;
    for row in rows {
        writer.write_record(&row).map_err(fail)?;
    }
    writer.flush().map_err(|e| CliError::new("IO_ERROR", e.to_string()))
}

fn run_analyze(action: AnalyzeAction) -> CliResult<()> {
    match action {
        AnalyzeAction::Census {
            table,
            mode,
            output,
        } => {
            let report = analysis::census(&read_table(&table)?, mode.mode())?;
            match output {
                Output::Json => print_json(&report),
                Output::Csv => csv_rows(
                    &["node", "count"],
                    report
                        .counts
                        .iter()
                        .map(|(node, count)| vec![node.clone(), count.to_string()])
                        .collect(),
                )?,
            }
        }
        AnalyzeAction::Remap {
            before,
            after,
            mode,
            output,
        } => {
            let report =
                analysis::remap_matrix(&read_table(&before)?, &read_table(&after)?, mode.mode())?;
            match output {
                Output::Json => print_json(&report),
                Output::Csv => {
                    let mut rows = Vec::new();
                    for (old, row) in &report.matrix {
                        for (new, count) in row {
                            rows.push(vec![old.clone(), new.clone(), count.to_string()]);
                        }
                    }
                    csv_rows(&["old", "new", "count"], rows)?;
                }
            }
        }
        AnalyzeAction::Survival { n, m } => {
            if n == 0 || m == 0 {
                return Err(CliError::new("PARSE_ERROR", "--n and --m must be positive"));
            }
            print_json(&analysis::simple_mod_survival(n, m));
        }
    }
    Ok(())
}

fn read_ring(path: &Path) -> CliResult<RingState> {
    Ok(RingState::deserialize(&read_file(path)?)?)
}

fn write_ring(path: &Path, ring: &RingState) -> CliResult<()> {
    write_atomic(path, &ring.serialize())
}

fn print_ring(ring: &RingState) {
    println!(
        "{}",
        String::from_utf8(ring.serialize()).expect("ring files are UTF-8")
    );
}

fn run_ring(action: RingAction) -> CliResult<()> {
    match action {
        RingAction::Init {
            ring,
            point_bits,
            replicas,
        } => {
            let state = RingState::new(RingConfig::new(point_bits, replicas)?);
            write_ring(&ring, &state)?;
            print_ring(&state);
        }
        RingAction::Add { ring, node } => {
            let state = read_ring(&ring)?.add(node_id(&node)?)?;
            write_ring(&ring, &state)?;
            print_ring(&state);
        }
        RingAction::Remove { ring, node } => {
            let state = read_ring(&ring)?.remove(&node_id(&node)?)?;
            write_ring(&ring, &state)?;
            print_ring(&state);
        }
        RingAction::Lookup {
            ring,
            key_bytes,
            key_int,
            key_bits,
        } => {
            if key_bytes.is_none() && key_int.is_none() {
                return Err(CliError::new(
                    "PARSE_ERROR",
                    "one of --key-bytes or --key-int is required",
                ));
            }
            let state = read_ring(&ring)?;
            let key = make_key(&key_bytes, &key_int, key_bits)?;
            print_json(&state.lookup(&key)?.as_str());
        }
        RingAction::Stats {
            nodes,
            k,
            trials,
            seed,
            spread,
            output,
        } => {
            if nodes == 0 || k == 0 || trials == 0 {
                return Err(CliError::new(
                    "PARSE_ERROR",
                    "--nodes, --k and --trials must be positive",
                ));
            }
            if spread {
                let report = analysis::ring_spread_stats(nodes, k, trials, seed);
                match output {
                    Output::Json => print_json(&report),
                    Output::Csv => csv_rows(
                        &["metric", "mean", "std_error"],
                        vec![
                            vec![
                                "mean_min_ratio".to_owned(),
                                report.mean_min_ratio.mean.to_string(),
                                report.mean_min_ratio.std_error.to_string(),
                            ],
                            vec![
                                "max_mean_ratio".to_owned(),
                                report.max_mean_ratio.mean.to_string(),
                                report.max_mean_ratio.std_error.to_string(),
                            ],
                        ],
                    )?,
                }
            } else {
                let report = analysis::ring_median_mean(nodes * k, trials, seed);
                match output {
                    Output::Json => print_json(&report),
                    Output::Csv => csv_rows(
                        &["metric", "value"],
                        vec![vec![
                            "median_mean_ratio".to_owned(),
                            report.median_mean_ratio.to_string(),
                        ]],
                    )?,
                }
            }
        }
    }
    Ok(())
}

fn read_cycle_file(path: &Path) -> CliResult<Vec<NodeId>> {
    let labels: Vec<String> = serde_json::from_slice(&read_file(path)?).map_err(|e| {
        CliError::new(
            "PARSE_ERROR",
            format!("{}: line {} column {}: {e}", path.display(), e.line(), e.column()),
        )
    })?;
    labels.iter().map(|l| node_id(l)).collect()
}

/// Distinct symbols in first-appearance order; cycle files carry the bare
/// symbol sequence, so the node set is implied.
fn node_set_of(symbols: &[NodeId]) -> Vec<NodeId> {
    let mut nodes: Vec<NodeId> = Vec::new();
    for s in symbols {
        if !nodes.contains(s) {
            nodes.push(s.clone());
        }
    }
    nodes
}

fn removed_set(labels: &[String]) -> CliResult<BTreeSet<NodeId>> {
    labels.iter().map(|l| node_id(l)).collect()
}

fn run_cycle(action: CycleAction) -> CliResult<()> {
    match action {
        CycleAction::Build {
            nodes,
            n,
            budget,
            out,
        } => {
            let ids: Vec<NodeId> = match (n, nodes.is_empty()) {
                (Some(n), _) => (0..n)
                    .map(|i| NodeId::new(format!("n{i}")).expect("generated label"))
                    .collect(),
                (None, false) => nodes
                    .iter()
                    .map(|l| node_id(l))
                    .collect::<CliResult<Vec<_>>>()?,
                (None, true) => {
                    return Err(CliError::new(
                        "PARSE_ERROR",
                        "give node labels or --n",
                    ));
                }
            };
            let cycle = match budget {
                Some(budget) => ucycle::build_cycle_with_budget(&ids, budget)?,
                None => ucycle::build_cycle(&ids)?,
            };
            let labels: Vec<&str> = cycle.symbols().iter().map(NodeId::as_str).collect();
            if let Some(out) = out {
                write_atomic(&out, serde_json::to_string(&labels).unwrap().as_bytes())?;
            }
            print_json(&labels);
        }
        CycleAction::Verify { file } => {
            let symbols = read_cycle_file(&file)?;
            let nodes = node_set_of(&symbols);
            let report = ucycle::verify_cycle(&symbols, &nodes);
            match report.violation {
                None => print_json(&serde_json::json!({ "valid": true })),
                Some(violation) => print_json(&serde_json::json!({
                    "valid": false,
                    "violation": format!("{violation:?}"),
                })),
            }
        }
        CycleAction::RemoveSim { file, remove } => {
            let symbols = read_cycle_file(&file)?;
            let survivors =
                ucycle::substitute_removed(&symbols, &removed_set(&remove)?)?;
            let counts: std::collections::BTreeMap<String, u64> =
                ucycle::count_symbols(&survivors)
                    .into_iter()
                    .map(|(node, count)| (node.as_str().to_owned(), count))
                    .collect();
            print_json(&counts);
        }
        CycleAction::Lookup {
            file,
            key_bytes,
            key_int,
            key_bits,
            remove,
        } => {
            if key_bytes.is_none() && key_int.is_none() {
                return Err(CliError::new(
                    "PARSE_ERROR",
                    "one of --key-bytes or --key-int is required",
                ));
            }
            let symbols = read_cycle_file(&file)?;
            let key = make_key(&key_bytes, &key_int, key_bits)?;
            let node = ucycle::cycle_lookup(&symbols, &key, &removed_set(&remove)?)?;
            print_json(&node.as_str());
        }
    }
    Ok(())
}

fn run_capacity(cmd: CapacityCmd) -> CliResult<()> {
    match (cmd.bits, cmd.nodes) {
        (Some(bits), None) => {
            if bits == 0 {
                return Err(CliError::new("PARSE_ERROR", "--bits must be positive"));
            }
            print_json(&serde_json::json!({ "bits": bits, "max_nodes": capacity(bits) }));
        }
        (None, Some(nodes)) => {
            if nodes == 0 {
                return Err(CliError::new("PARSE_ERROR", "--nodes must be positive"));
            }
            print_json(&serde_json::json!({
                "nodes": nodes,
                "margin": cmd.margin,
                "min_bits": min_key_bits(nodes, cmd.margin),
            }));
        }
        _ => unreachable!("clap enforces exactly one of --bits/--nodes"),
    }
    Ok(())
}
