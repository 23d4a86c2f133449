use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use spinal_core::partition::Caps;
use spinal_core::pd::{eppf_pd, eprf_pdstar};
use spinal_core::reconstruct::reconstruct_pn_with_diagnostics;
use spinal_core::spinal::{
    coarse_partition_law, composition_law, fine_partition_law, spinal_decompose,
};
use spinal_core::split::shape_distribution;
use spinal_core::{Composition, LevyKernel, PdParams, PnTable, SplitLaw};
use spinal_harness::codec::{self, TableJson, TreeJson};
use spinal_harness::{checks, montecarlo, CheckReport, Error, Result, Status};

#[derive(Parser)]
#[command(
    name = "spinal",
    version,
    about = "Exact and Monte Carlo spinal decompositions of Markov branching trees"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand)]
enum Command {
    /// Partition probability (pd) or rate (pdstar) at --composition.
    Eppf,
    /// Bush rates Φ(r:m) and first-bush probabilities for r ≤ n.
    Rates,
    /// Sample trees on [n] as JSON lines.
    SampleTree,
    /// Sample partitions of [n]: PD by the restaurant process, other
    /// families by their first split.
    SamplePd,
    /// Spinal decomposition of each tree read from --input (or stdin).
    Spinal,
    /// Exact law table.
    Law {
        #[arg(value_enum)]
        kind: LawKind,
    },
    /// Rebuild split probabilities from the Lévy measure.
    Reconstruct,
    /// Run a named check.
    Check {
        #[arg(value_enum)]
        name: CheckName,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum LawKind {
    Shape,
    Coarse,
    Fine,
    Composition,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum CheckName {
    Reroot,
    Factor,
    Lemma15,
    Reversal,
    #[value(alias = "reconstruct")]
    Consistency,
    Independence,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Family {
    Pdstar,
    Pd,
    Brownian,
    Table,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Expect {
    Pass,
    Fail,
}

#[derive(Args)]
struct Opts {
    #[arg(long, global = true, value_enum, default_value = "pdstar")]
    family: Family,
    #[arg(
        long,
        global = true,
        default_value_t = 0.75,
        allow_negative_numbers = true
    )]
    alpha: f64,
    #[arg(long, global = true, default_value_t = -1.0, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, global = true)]
    n: Option<usize>,
    #[arg(long, global = true)]
    nmax: Option<usize>,
    #[arg(long, global = true, default_value_t = 1000)]
    samples: usize,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses one per core. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,
    #[arg(long, global = true, value_enum, default_value = "json")]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Treat inconclusive checks as failures.
    #[arg(long, global = true)]
    strict: bool,
    /// Expected outcome of the checks.
    #[arg(long, global = true, value_enum, default_value = "pass")]
    expect: Expect,
    /// Block sizes, e.g. 2,1.
    #[arg(long, global = true)]
    composition: Option<String>,
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Split table JSON for --family table.
    #[arg(long, global = true)]
    table: Option<PathBuf>,
    /// Run checks over α ∈ {0.6, 0.75, 0.9}, θ ∈ {−1, −0.8, −α/2}.
    #[arg(long, global = true)]
    grid: bool,
}

impl Opts {
    fn params(&self) -> Result<PdParams> {
        Ok(PdParams::new(self.alpha, self.theta)?)
    }

    fn law(&self) -> Result<SplitLaw> {
        match self.family {
            Family::Pdstar => Ok(SplitLaw::PdStar(self.params()?)),
            Family::Brownian => Ok(SplitLaw::Brownian),
            Family::Table => Ok(SplitLaw::Table(self.load_table()?)),
            Family::Pd => Err(Error::Usage(
                "PD is a partition law, not a split law; use --family pdstar".into(),
            )),
        }
    }

    fn load_table(&self) -> Result<PnTable> {
        let path = self
            .table
            .as_ref()
            .ok_or_else(|| Error::Usage("--family table needs --table FILE".into()))?;
        let text = fs::read_to_string(path)?;
        let v: Value = serde_json::from_str(&text).map_err(|e| Error::Input(e.to_string()))?;
        let v = v.get("table").cloned().unwrap_or(v);
        let json: TableJson = serde_json::from_value(v).map_err(|e| Error::Input(e.to_string()))?;
        PnTable::try_from(json)
    }

    fn kernel(&self) -> Result<LevyKernel> {
        match self.family {
            Family::Pdstar => Ok(LevyKernel::PdStar(self.params()?)),
            Family::Brownian => Ok(LevyKernel::Brownian),
            _ => Err(Error::Usage(
                "reconstruction needs --family pdstar or brownian".into(),
            )),
        }
    }

    fn composition(&self) -> Result<Composition> {
        let text = self
            .composition
            .as_ref()
            .ok_or_else(|| Error::Usage("--composition is required".into()))?;
        let parts = text
            .split(',')
            .map(|s| s.trim().parse::<usize>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::Usage(format!("bad --composition {text:?}: {e}")))?;
        if parts.is_empty() {
            return Err(Error::Usage("empty --composition".into()));
        }
        Ok(Composition::new(parts)?)
    }

    fn header(&self, command: &str, n: usize) -> Value {
        let mut v = json!({
            "type": "header",
            "command": command,
            "family": self.family.to_possible_value().unwrap().get_name(),
            "n": n,
            "samples": self.samples,
            "seed": self.seed,
        });
        if matches!(self.family, Family::Pdstar | Family::Pd) {
            v["alpha"] = json!(self.alpha);
            v["theta"] = json!(self.theta);
        }
        v
    }
}

/// What a command did, for the exit code.
enum Outcome {
    Done,
    Checks(Vec<CheckReport>),
    RecordErrors,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = (|| -> Result<Outcome> {
        let mut out: Box<dyn Write> = match &cli.opts.out {
            Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        let outcome = run(&cli.command, &cli.opts, &mut out)?;
        out.flush()?;
        Ok(outcome)
    })();
    match result {
        Ok(Outcome::Done) => ExitCode::SUCCESS,
        Ok(Outcome::RecordErrors) => ExitCode::from(2),
        Ok(Outcome::Checks(reports)) => {
            let ok = reports.iter().all(|r| match cli.opts.expect {
                Expect::Pass => {
                    r.status == Status::Pass
                        || (r.status == Status::Inconclusive && !cli.opts.strict)
                }
                Expect::Fail => r.status == Status::Fail,
            });
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string()}));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(command: &Command, opts: &Opts, out: &mut dyn Write) -> Result<Outcome> {
    match command {
        Command::Eppf => cmd_eppf(opts, out),
        Command::Rates => cmd_rates(opts, out),
        Command::SampleTree => cmd_sample_tree(opts, out),
        Command::SamplePd => cmd_sample_pd(opts, out),
        Command::Spinal => cmd_spinal(opts, out),
        Command::Law { kind } => cmd_law(*kind, opts, out),
        Command::Reconstruct => cmd_reconstruct(opts, out),
        Command::Check { name } => cmd_check(*name, opts, out),
    }
}

fn number(x: f64) -> String {
    if x.is_infinite() && x > 0.0 {
        "\"infinite\"".into()
    } else if x.is_finite() {
        codec::sig15(x)
    } else {
        "null".into()
    }
}

fn cmd_eppf(opts: &Opts, out: &mut dyn Write) -> Result<Outcome> {
    let c = opts.composition()?;
    let value = match opts.family {
        Family::Pd => eppf_pd(&opts.params()?, &c)?,
        Family::Pdstar => eprf_pdstar(&opts.params()?, &c)?,
        _ => {
            let sl = opts.law()?;
            if c.k() < 2 {
                return Err(Error::Usage(
                    "split laws are defined on two or more blocks".into(),
                ));
            }
            sl.conditioned_split(&c)?
        }
    };
    let parts = codec::composition_json(&c);
    match opts.format {
        Format::Json => writeln!(
            out,
            "{{\"composition\":{},\"value\":{}}}",
            json!(parts),
            number(value)
        )?,
        Format::Csv => {
            let v = if value.is_infinite() {
                "infinite".to_string()
            } else {
                codec::sig15(value)
            };
            writeln!(
                out,
                "composition,value\n\"{}\",{v}",
                c.parts()
                    .iter()
                    .map(|p| p.to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            )?
        }
    }
    Ok(Outcome::Done)
}

fn cmd_rates(opts: &Opts, out: &mut dyn Write) -> Result<Outcome> {
    let sl = opts.law()?;
    let n = opts.n.unwrap_or(6);
    let mut rows = Vec::new();
    for r in 1..=n {
        let total = sl.total_split_rate(r + 1)?;
        for m in 1..=r {
            let prob = sl.first_bush_prob(r, m)?;
            rows.push((r, m, prob * total, prob));
        }
    }
    match opts.format {
        Format::Json => {
            for (r, m, rate, prob) in rows {
                writeln!(
                    out,
                    "{}",
                    json!({"r": r, "m": m, "rate": rate, "first_bush_prob": prob})
                )?;
            }
        }
        Format::Csv => {
            writeln!(out, "r,m,rate,first_bush_prob")?;
            for (r, m, rate, prob) in rows {
                writeln!(out, "{r},{m},{rate},{prob}")?;
            }
        }
    }
    Ok(Outcome::Done)
}

fn require_json(opts: &Opts, what: &str) -> Result<()> {
    if opts.format == Format::Csv {
        return Err(Error::Usage(format!(
            "{what} records are nested; only --format json is available"
        )));
    }
    Ok(())
}

fn cmd_sample_tree(opts: &Opts, out: &mut dyn Write) -> Result<Outcome> {
    require_json(opts, "tree")?;
    let sl = opts.law()?;
    let n = opts.n.unwrap_or(4);
    let trees = montecarlo::sample_trees(&sl, n, opts.samples, opts.seed, opts.workers)?;
    writeln!(out, "{}", opts.header("sample-tree", n))?;
    for (i, t) in trees.iter().enumerate() {
        writeln!(
            out,
            "{}",
            json!({"type": "tree", "index": i, "tree": TreeJson::from(t)})
        )?;
    }
    Ok(Outcome::Done)
}

fn cmd_sample_pd(opts: &Opts, out: &mut dyn Write) -> Result<Outcome> {
    require_json(opts, "partition")?;
    let n = opts.n.unwrap_or(4);
    let parts = match opts.family {
        Family::Pd => montecarlo::sample_pd_partitions(
            &opts.params()?,
            n,
            opts.samples,
            opts.seed,
            opts.workers,
        )?,
        _ => montecarlo::sample_splits(&opts.law()?, n, opts.samples, opts.seed, opts.workers)?,
    };
    writeln!(out, "{}", opts.header("sample-pd", n))?;
    for (i, p) in parts.iter().enumerate() {
        writeln!(
            out,
            "{}",
            json!({"type": "partition", "index": i, "blocks": codec::partition_json(p)})
        )?;
    }
    Ok(Outcome::Done)
}

fn cmd_spinal(opts: &Opts, out: &mut dyn Write) -> Result<Outcome> {
    require_json(opts, "spinal")?;
    let reader: Box<dyn BufRead> = match &opts.input {
        Some(p) => Box::new(io::BufReader::new(fs::File::open(p)?)),
        None => Box::new(io::stdin().lock()),
    };
    let mut failed = false;
    for (line_no, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<Value>(&line)
            .map_err(|e| Error::Input(e.to_string()))
            .and_then(|v| codec::tree_from_value(&v));
        let record = match parsed.and_then(|t| t.map(|t| Ok(spinal_decompose(&t)?)).transpose()) {
            Ok(None) => continue,
            Ok(Some(d)) => json!({
                "line": line_no + 1,
                "coarse_ordered": codec::ordered_json(&d.coarse_ordered),
                "coarse": codec::partition_json(&d.coarse),
                "fine": codec::partition_json(&d.fine),
                "composition": codec::composition_json(&d.composition()),
            }),
            Err(e) => {
                failed = true;
                json!({"line": line_no + 1, "error": e.kind(), "message": e.to_string()})
            }
        };
        writeln!(out, "{record}")?;
    }
    Ok(if failed {
        Outcome::RecordErrors
    } else {
        Outcome::Done
    })
}

fn cmd_law(kind: LawKind, opts: &Opts, out: &mut dyn Write) -> Result<Outcome> {
    let sl = opts.law()?;
    let caps = Caps::default();
    let n = opts.n.unwrap_or(4);
    // (json key, csv key, p, reference)
    let mut rows: Vec<(Value, String, f64, Option<f64>)> = Vec::new();
    let stable_alpha = match &sl {
        SplitLaw::PdStar(p) if p.is_stable() => Some(p.alpha()),
        _ => None,
    };
    let name = match kind {
        LawKind::Shape => {
            for (t, p) in shape_distribution(&sl, n, &caps)? {
                rows.push((json!(TreeJson::from(&t)), t.to_string(), p, None));
            }
            "shape"
        }
        LawKind::Composition => {
            for (c, p) in composition_law(&sl, n, &caps)? {
                rows.push((json!(c.parts()), format!("\"{c}\""), p, None));
            }
            "composition"
        }
        LawKind::Coarse | LawKind::Fine => {
            let (law, reference) = if matches!(kind, LawKind::Coarse) {
                (
                    coarse_partition_law(&sl, n, &caps)?,
                    stable_alpha
                        .map(|a| PdParams::new(1.0 - a, 1.0 - a))
                        .transpose()?,
                )
            } else {
                (
                    fine_partition_law(&sl, n, &caps)?,
                    stable_alpha
                        .map(|a| PdParams::new(a, 1.0 - a))
                        .transpose()?,
                )
            };
            for (pi, p) in law {
                let r = reference.map(|q| eppf_pd(&q, &pi.sizes())).transpose()?;
                rows.push((json!(codec::partition_json(&pi)), format!("\"{pi}\""), p, r));
            }
            if matches!(kind, LawKind::Coarse) {
                "coarse"
            } else {
                "fine"
            }
        }
    };
    rows.sort_by(|a, b| b.2.total_cmp(&a.2).then_with(|| a.1.cmp(&b.1)));
    let total: f64 = rows.iter().map(|r| r.2).sum();
    let max_dev = rows
        .iter()
        .filter_map(|r| r.3.map(|q| (r.2 - q).abs()))
        .fold(None, |m: Option<f64>, d| Some(m.map_or(d, |m| m.max(d))));
    if (total - 1.0).abs() > 1e-9 {
        return Err(spinal_core::Error::Numeric(format!("law table sums to {total}")).into());
    }
    match opts.format {
        Format::Json => {
            let entries: Vec<Value> = rows
                .iter()
                .map(|(k, _, p, r)| match r {
                    Some(r) => json!({"key": k, "p": p, "reference": r}),
                    None => json!({"key": k, "p": p}),
                })
                .collect();
            let mut v = json!({"law": name, "n": n, "parameters": checks::law_parameters(&sl), "entries": entries, "total": total});
            if let Some(d) = max_dev {
                v["max_deviation"] = json!(d);
            }
            writeln!(out, "{v}")?;
        }
        Format::Csv => {
            let with_ref = max_dev.is_some();
            writeln!(
                out,
                "{}",
                if with_ref { "key,p,reference" } else { "key,p" }
            )?;
            for (_, k, p, r) in &rows {
                match r {
                    Some(r) => writeln!(out, "{k},{p},{r}")?,
                    None => writeln!(out, "{k},{p}")?,
                }
            }
            writeln!(out, "# total {total}")?;
            if let Some(d) = max_dev {
                writeln!(out, "# max_deviation {d}")?;
            }
        }
    }
    Ok(Outcome::Done)
}

fn cmd_reconstruct(opts: &Opts, out: &mut dyn Write) -> Result<Outcome> {
    require_json(opts, "table")?;
    let kernel = opts.kernel()?;
    let n_max = opts.nmax.unwrap_or(7);
    let (table, diag) = reconstruct_pn_with_diagnostics(&kernel, n_max)?;
    let v = json!({
        "table": TableJson::from(&table),
        "diagnostics": {
            "fill_order_discrepancy": diag.fill_order_discrepancy,
            "normalization_gap": diag.largest_normalization_gap,
            "min_all_singletons": diag.min_all_singletons,
        },
    });
    writeln!(out, "{v}")?;
    Ok(Outcome::Done)
}

fn cmd_check(name: CheckName, opts: &Opts, out: &mut dyn Write) -> Result<Outcome> {
    let laws: Vec<SplitLaw> = if opts.grid {
        if opts.family != Family::Pdstar {
            return Err(Error::Usage("--grid runs over the pdstar family".into()));
        }
        let mut v = Vec::new();
        for a in [0.6, 0.75, 0.9] {
            for t in [-1.0, -0.8, -a / 2.0] {
                v.push(SplitLaw::pdstar(a, t)?);
            }
        }
        v
    } else {
        vec![opts.law()?]
    };
    let mut reports = Vec::new();
    for sl in &laws {
        let r = match name {
            CheckName::Reroot => checks::reroot_check(sl, opts.n.unwrap_or(4))?,
            CheckName::Reversal => checks::reversal_check(sl, opts.n.unwrap_or(8))?,
            CheckName::Lemma15 => checks::lemma15_check(sl, opts.nmax.unwrap_or(6))?,
            CheckName::Factor => checks::factor_check(sl, opts.nmax.unwrap_or(8))?,
            CheckName::Consistency => {
                let kernel = sl.kernel().ok_or_else(|| {
                    Error::Usage("consistency needs a law with a Lévy measure".into())
                })?;
                checks::reconstruction_check(sl, &kernel, opts.nmax.unwrap_or(7))?
            }
            CheckName::Independence => montecarlo::subtree_independence_check(
                sl,
                opts.n.unwrap_or(5),
                opts.samples,
                opts.seed,
                opts.workers,
            )?,
        };
        match opts.format {
            Format::Json => writeln!(out, "{}", r.to_json())?,
            Format::Csv => {
                if reports.is_empty() {
                    writeln!(out, "check,status,statistic,threshold,runtime")?;
                }
                let stat = match &r.statistic {
                    Value::Number(x) => x.to_string(),
                    other => format!("\"{}\"", other.to_string().replace('"', "\"\"")),
                };
                writeln!(
                    out,
                    "{},{},{},{},{}",
                    r.check, r.status, stat, r.threshold, r.runtime
                )?
            }
        }
        reports.push(r);
    }
    Ok(Outcome::Checks(reports))
}
