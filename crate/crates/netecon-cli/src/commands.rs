use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;

use netecon::runner::{self, RunSummary, Snapshot, SweepItem};
use netecon::scenario::ScenarioConfig;

/// Half-open seed range `A:B`.
#[derive(Debug, Clone, Copy)]
pub struct SeedRange {
    pub start: u64,
    pub end: u64,
}

impl FromStr for SeedRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (a, b) = s
            .split_once(':')
            .ok_or_else(|| format!("expected A:B, got `{s}`"))?;
        let start: u64 = a.trim().parse().map_err(|e| format!("bad start: {e}"))?;
        let end: u64 = b.trim().parse().map_err(|e| format!("bad end: {e}"))?;
        if start >= end {
            return Err(format!("empty range {start}:{end}"));
        }
        Ok(SeedRange { start, end })
    }
}

fn load_config(path: Option<&Path>) -> Result<ScenarioConfig> {
    match path {
        None => Ok(ScenarioConfig::default()),
        Some(p) => {
            let text =
                fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
            ScenarioConfig::from_json_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))
        }
    }
}

#[derive(Args)]
pub struct RunArgs {
    /// Seed for prices, returns to scale and shareholding
    #[arg(long)]
    pub s1: u64,
    /// Seed for the trade graph and elasticities
    #[arg(long)]
    pub s2: u64,
    /// JSON config; defaults apply to any omitted field
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Serialize)]
struct RunManifest<'a> {
    config_hash: String,
    #[serde(flatten)]
    summary: &'a RunSummary,
}

pub fn run(args: RunArgs) -> Result<()> {
    let config = load_config(args.config.as_deref())?;
    let result = runner::run_simulation(&config, args.s1, args.s2)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;

    let mut timeseries = String::new();
    timeseries.push_str(
        "period,wage,wage_adjust,producer_wealth,consumer_wealth,gini_producers,gini_consumers,\
         total_utility,leisure_pct,excess_labour,live_producers,shut_firms\n",
    );
    for r in &result.records {
        timeseries.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            r.period,
            r.wage,
            r.wage_adjust,
            r.producer_wealth,
            r.consumer_wealth,
            r.gini_producers,
            r.gini_consumers,
            r.total_utility,
            r.leisure_pct,
            r.excess_labour,
            r.live_producers,
            r.shut_firms
        ));
    }
    fs::write(args.out.join("timeseries.csv"), timeseries)?;

    let mut prices = String::new();
    prices.push_str("period,producer,price,inventory,demand,price_adjust\n");
    for r in &result.records {
        for p in &r.producers {
            prices.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.period, p.id, p.price, p.inventory, p.demand, p.price_adjust
            ));
        }
    }
    fs::write(args.out.join("prices.csv"), prices)?;

    let manifest = RunManifest {
        config_hash: config.fingerprint(),
        summary: &result.summary,
    };
    fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&manifest)?,
    )?;
    fs::write(
        args.out.join("snapshots.json"),
        serde_json::to_string(&result.snapshots)?,
    )?;

    println!(
        "run ({}, {}): {} after {} periods, {} firms shut",
        args.s1, args.s2, result.summary.outcome, result.summary.periods, result.summary.shut_firms
    );
    Ok(())
}

#[derive(Args)]
pub struct SweepArgs {
    /// Single first seed (alternative to --s1-range)
    #[arg(long, conflicts_with = "s1_range")]
    pub s1: Option<u64>,
    /// First-seed range A:B, half-open
    #[arg(long)]
    pub s1_range: Option<SeedRange>,
    /// Single second seed (alternative to --s2-range)
    #[arg(long, conflicts_with = "s2_range")]
    pub s2: Option<u64>,
    /// Second-seed range A:B, half-open
    #[arg(long)]
    pub s2_range: Option<SeedRange>,
    /// Worker count
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory for runs.jsonl
    #[arg(long)]
    pub out: PathBuf,
}

fn expand(single: Option<u64>, range: Option<SeedRange>, flag: &str) -> Result<Vec<u64>> {
    match (single, range) {
        (Some(v), None) => Ok(vec![v]),
        (None, Some(r)) => Ok((r.start..r.end).collect()),
        _ => bail!("exactly one of --{flag} or --{flag}-range is required"),
    }
}

pub fn sweep(args: SweepArgs) -> Result<()> {
    if args.jobs < 1 {
        bail!("--jobs must be at least 1");
    }
    let config = load_config(args.config.as_deref())?;
    config.validate().map_err(anyhow::Error::from)?;
    let s1s = expand(args.s1, args.s1_range, "s1")?;
    let s2s = expand(args.s2, args.s2_range, "s2")?;
    let mut pairs: Vec<(u64, u64)> = s1s
        .iter()
        .flat_map(|&a| s2s.iter().map(move |&b| (a, b)))
        .collect();
    pairs.sort_unstable();

    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let path = args.out.join("runs.jsonl");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    let mut writer = BufWriter::new(file);

    let mut failures = 0usize;
    runner::sweep(&config, &pairs, args.jobs, |_, item| {
        if matches!(item, SweepItem::Failed { .. }) {
            failures += 1;
        }
        // One flushed write per line keeps completed lines valid even if
        // the sweep is interrupted.
        writeln!(writer, "{}", runner::sweep_line(item)).expect("write runs.jsonl");
        writer.flush().expect("flush runs.jsonl");
    });

    println!(
        "sweep: {} runs ({} failed) -> {}",
        pairs.len(),
        failures,
        path.display()
    );
    Ok(())
}

#[derive(Args)]
pub struct SummarizeArgs {
    /// Path to a sweep's runs.jsonl
    pub runs: PathBuf,
}

#[derive(Default)]
struct OutcomeAccum {
    count: u64,
    producer_wealth: f64,
    consumer_wealth: f64,
    shut_firms: f64,
    gini_consumers: f64,
    gini_producers: f64,
    total_utility: f64,
    wage: f64,
    leisure_pct: f64,
}

impl OutcomeAccum {
    fn add(&mut self, s: &RunSummary) {
        self.count += 1;
        self.producer_wealth += s.producer_wealth;
        self.consumer_wealth += s.consumer_wealth;
        self.shut_firms += f64::from(s.shut_firms);
        self.gini_consumers += s.gini_consumers;
        self.gini_producers += s.gini_producers;
        self.total_utility += s.total_utility;
        self.wage += s.wage;
        self.leisure_pct += s.leisure_pct;
    }

    fn means(&self) -> [f64; 8] {
        let n = self.count.max(1) as f64;
        [
            self.producer_wealth / n,
            self.consumer_wealth / n,
            self.shut_firms / n,
            self.gini_consumers / n,
            self.gini_producers / n,
            self.total_utility / n,
            self.wage / n,
            self.leisure_pct / n,
        ]
    }
}

pub fn summarize(args: SummarizeArgs) -> Result<()> {
    let file =
        File::open(&args.runs).with_context(|| format!("opening {}", args.runs.display()))?;
    let reader = BufReader::new(file);

    let mut groups: BTreeMap<String, OutcomeAccum> = BTreeMap::new();
    let mut malformed = 0usize;
    let mut failed = 0usize;
    let mut total = 0usize;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        total += 1;
        match serde_json::from_str::<SweepItem>(&line) {
            Ok(SweepItem::Done(summary)) => {
                groups
                    .entry(summary.outcome.to_string())
                    .or_default()
                    .add(&summary);
            }
            Ok(SweepItem::Failed { .. }) => failed += 1,
            Err(_) => malformed += 1,
        }
    }

    let header = [
        "outcome",
        "count",
        "producer_wealth",
        "consumer_wealth",
        "shut_firms",
        "gini_consumers",
        "gini_producers",
        "total_utility",
        "wage",
        "leisure_pct",
    ];
    let mut csv = header.join(",");
    csv.push('\n');
    println!(
        "{:<20} {:>6} {:>14} {:>14} {:>10} {:>10} {:>10} {:>12} {:>12} {:>11}",
        "outcome",
        "count",
        "prod_wealth",
        "cons_wealth",
        "shut",
        "gini_cons",
        "gini_prod",
        "utility",
        "wage",
        "leisure_pct"
    );
    for (label, acc) in &groups {
        let m = acc.means();
        println!(
            "{:<20} {:>6} {:>14.4e} {:>14.4e} {:>10.4} {:>10.4} {:>10.4} {:>12.4e} {:>12.4e} {:>11.4}",
            label, acc.count, m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7]
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            label, acc.count, m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7]
        ));
    }
    if failed > 0 {
        println!("warning: {failed} failed runs excluded");
    }
    if malformed > 0 {
        println!("warning: {malformed} malformed lines skipped");
    }
    let counted: u64 = groups.values().map(|a| a.count).sum();
    println!("{counted} classified of {total} lines");

    let csv_path = args.runs.with_file_name("summary_table.csv");
    fs::write(&csv_path, csv)?;
    println!("table written to {}", csv_path.display());
    Ok(())
}

#[derive(Args)]
pub struct ExportGraphArgs {
    /// Run directory containing snapshots.json
    #[arg(long)]
    pub out: PathBuf,
    /// Snapshot period to export (0, the halt period, or the horizon)
    #[arg(long)]
    pub period: u32,
}

pub fn export_graph(args: ExportGraphArgs) -> Result<()> {
    let path = args.out.join("snapshots.json");
    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    let snapshots: Vec<Snapshot> = serde_json::from_str(&text)?;
    let snap = snapshots
        .iter()
        .find(|s| s.period == args.period)
        .with_context(|| {
            format!(
                "no snapshot for period {} (stored: {:?})",
                args.period,
                snapshots.iter().map(|s| s.period).collect::<Vec<_>>()
            )
        })?;

    let producer_ids: std::collections::BTreeSet<u32> =
        snap.producers.iter().map(|p| p.id).collect();
    let node = |id: u32| {
        if producer_ids.contains(&id) {
            format!("p{id}")
        } else {
            format!("c{id}")
        }
    };

    let mut dot = String::new();
    dot.push_str("digraph economy {\n  rankdir=LR;\n");
    for p in &snap.producers {
        dot.push_str(&format!(
            "  p{} [role=\"producer\" wealth=\"{}\" price=\"{}\"];\n",
            p.id, p.wealth, p.price
        ));
    }
    for c in &snap.consumers {
        dot.push_str(&format!(
            "  c{} [role=\"consumer\" wealth=\"{}\"];\n",
            c.id, c.wealth
        ));
    }
    for &(seller, buyer) in &snap.edges {
        dot.push_str(&format!("  p{} -> {};\n", seller, node(buyer)));
    }
    dot.push_str("}\n");

    let out_path = args.out.join(format!("graph_t{}.dot", args.period));
    fs::write(&out_path, dot)?;
    println!("graph written to {}", out_path.display());
    Ok(())
}
