//! Command-line front end: build algebras, run the superderivation solver,
//! emit the classification tables, and run the acceptance suite.
//!
//! Exit codes: 0 ok, 2 invalid specification, 3 internal consistency
//! failure, 4 table mismatch.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cartan_super::dersolve::{der_full, der_full_both, expected_height, expected_outer_dim, DerMode};
use cartan_super::families::{build, AlgebraSpec, Family, Variant};
use cartan_super::structure::normalizer;
use cartan_super::verify::{self, csv_line, GridRow, Suite, CSV_HEADER};

#[derive(Parser)]
#[command(
    name = "cartan-super",
    about = "Graded Lie superalgebras of Cartan type over GF(p) and their superderivations",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads for grid processing (default: CARTAN_SUPER_JOBS or 1)
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Plain,
    Bar,
    Derived1,
    Derived2,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Variant {
        match v {
            VariantArg::Plain => Variant::Plain,
            VariantArg::Bar => Variant::Bar,
            VariantArg::Derived1 => Variant::Derived1,
            VariantArg::Derived2 => Variant::Derived2,
        }
    }
}

#[derive(Args)]
struct SpecArgs {
    /// Family: W, S, H, K, HO, SHO, KO, SKO
    #[arg(long)]
    family: String,
    #[arg(long)]
    m: usize,
    /// Number of odd variables (fixed to m or m+1 for HO/SHO/KO/SKO)
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: u64,
    /// Truncation exponents, comma separated: --t 2,1
    #[arg(long, value_delimiter = ',')]
    t: Vec<u32>,
    #[arg(long)]
    lambda: Option<u64>,
    #[arg(long, value_enum, default_value = "plain")]
    variant: VariantArg,
}

impl SpecArgs {
    fn to_spec(&self) -> anyhow::Result<AlgebraSpec> {
        let family = Family::parse(&self.family)
            .ok_or_else(|| anyhow::anyhow!("unknown family '{}'", self.family))?;
        AlgebraSpec::new(
            family,
            self.variant.into(),
            self.m,
            self.n,
            self.p,
            self.t.clone(),
            self.lambda,
        )
        .map_err(|e| anyhow::anyhow!("{e}"))
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    WeightReduced,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Table {
    Heights,
    OuterDims,
    Normalizers,
}

#[derive(Subcommand)]
enum Command {
    /// Construct an algebra and print its JSON description
    Build {
        #[command(flatten)]
        spec: SpecArgs,
        /// Output file (stdout when omitted)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Skip the structure-constant table in the output
        #[arg(long)]
        no_constants: bool,
    },
    /// Compute the superderivation report of an algebra
    Der {
        #[command(flatten)]
        spec: SpecArgs,
        #[arg(long, value_enum, default_value = "weight-reduced")]
        mode: ModeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Emit a classification table as CSV over a grid of parameters
    Tables {
        #[arg(value_enum)]
        which: Table,
        /// Grid file (one key=value record per line); default grid when omitted
        #[arg(long)]
        grid: Option<PathBuf>,
        /// Do not fail on mismatching rows
        #[arg(long)]
        report_only: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the acceptance suite
    Verify {
        #[arg(long, default_value = "acceptance")]
        suite: String,
        /// Run a single check group
        #[arg(long)]
        only: Option<String>,
        /// Grid file overriding the built-in verification grid
        #[arg(long)]
        grid: Option<PathBuf>,
    },
}

fn write_out(out: &Option<PathBuf>, data: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, data)?,
        None => {
            std::io::stdout().write_all(data.as_bytes())?;
        }
    }
    Ok(())
}

fn load_grid(grid: &Option<PathBuf>) -> anyhow::Result<Vec<GridRow>> {
    match grid {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| anyhow::anyhow!("cannot read grid file {}: {e}", path.display()))?;
            verify::parse_grid(&text).map_err(|e| anyhow::anyhow!("grid file {}: {e}", path.display()))
        }
        None => Ok(verify::default_grid(std::env::var("CARTAN_SKIP_SLOW").is_ok())),
    }
}

/// Process rows concurrently (bounded by --jobs) but emit in input order.
fn for_rows<T: Send>(
    rows: &[GridRow],
    jobs: usize,
    f: impl Fn(&GridRow) -> T + Sync,
) -> Vec<T> {
    if jobs <= 1 || rows.len() <= 1 {
        return rows.iter().map(f).collect();
    }
    let next = std::sync::atomic::AtomicUsize::new(0);
    let (tx, rx) = std::sync::mpsc::channel::<(usize, T)>();
    std::thread::scope(|scope| {
        for _ in 0..jobs.min(rows.len()) {
            let tx = tx.clone();
            let next = &next;
            let f = &f;
            scope.spawn(move || loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                if i >= rows.len() {
                    break;
                }
                let v = f(&rows[i]);
                if tx.send((i, v)).is_err() {
                    break;
                }
            });
        }
        drop(tx);
    });
    let mut out: Vec<Option<T>> = (0..rows.len()).map(|_| None).collect();
    for (i, v) in rx.iter() {
        out[i] = Some(v);
    }
    out.into_iter().map(|v| v.unwrap()).collect()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let jobs = cli
        .jobs
        .or_else(|| {
            std::env::var("CARTAN_SUPER_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .unwrap_or(1);
    match run(cli.command, jobs) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(command: Command, jobs: usize) -> anyhow::Result<ExitCode> {
    match command {
        Command::Build {
            spec,
            out,
            no_constants,
        } => {
            let spec = spec.to_spec()?;
            let handle = build(&spec).map_err(|e| anyhow::anyhow!("{e}"))?;
            let json = handle.to_json(!no_constants);
            let text = serde_json::to_string_pretty(&json)? + "\n";
            write_out(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Der { spec, mode, out } => {
            let spec = spec.to_spec()?;
            let start = Instant::now();
            let handle = build(&spec).map_err(|e| anyhow::anyhow!("{e}"))?;
            let report = match mode {
                ModeArg::Full => der_full(&handle, DerMode::Full),
                ModeArg::WeightReduced => der_full(&handle, DerMode::WeightReduced),
                ModeArg::Both => der_full_both(&handle),
            };
            let report = match report {
                Ok(r) => r,
                Err(e) => {
                    eprintln!("internal consistency failure: {e}");
                    return Ok(ExitCode::from(3));
                }
            };
            let mut value = serde_json::to_value(&report)?;
            value.as_object_mut().unwrap().insert(
                "metadata".into(),
                serde_json::json!({ "runtime_ms": start.elapsed().as_millis() as u64 }),
            );
            let text = serde_json::to_string_pretty(&value)? + "\n";
            write_out(&out, &text)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Tables {
            which,
            grid,
            report_only,
            out,
        } => {
            let rows = load_grid(&grid)?;
            let mut csv = String::from(CSV_HEADER);
            let mut mismatch = false;
            let lines = for_rows(&rows, jobs, |row| table_row(which, row));
            for (row, line) in rows.iter().zip(lines) {
                let (text, ok) = line;
                if row.asserted && ok == Some(false) {
                    mismatch = true;
                }
                csv.push_str(&text);
            }
            write_out(&out, &csv)?;
            if mismatch && !report_only {
                eprintln!("one or more rows mismatch the expected table");
                return Ok(ExitCode::from(4));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, only, grid } => {
            if suite != "acceptance" {
                anyhow::bail!("unknown suite '{suite}' (only 'acceptance' is defined)");
            }
            let mut s = match grid {
                Some(_) => Suite::new(load_grid(&grid)?),
                None => Suite::with_default_grid(),
            };
            s.run(only.as_deref());
            print!("{}", verify::render_results(&s.results));
            if s.all_passed() {
                Ok(ExitCode::SUCCESS)
            } else {
                Ok(ExitCode::from(4))
            }
        }
    }
}

fn table_row(which: Table, row: &GridRow) -> (String, Option<bool>) {
    match which {
        Table::Heights => {
            let spec2 = row.with_variant(Variant::Derived2);
            let h2 = build(&spec2).expect("grid row failed to build");
            let (_, height) = h2.height_depth();
            let expected = expected_height(&row.spec());
            let ok = expected.map(|e| e == height);
            (
                csv_line(
                    &row.spec(),
                    height,
                    expected.map(|e| e.to_string()).unwrap_or_default(),
                    if row.asserted { ok } else { None },
                ),
                ok,
            )
        }
        Table::OuterDims => {
            let spec = row.spec();
            let Some(expected) = expected_outer_dim(&spec) else {
                return (
                    csv_line(&spec, "", "not specified", None),
                    None,
                );
            };
            let h = build(&spec).expect("grid row failed to build");
            let report = der_full(&h, DerMode::WeightReduced).expect("derivation solve failed");
            let ok = Some(report.outer as u64 == expected);
            (
                csv_line(
                    &spec,
                    report.outer,
                    expected,
                    if row.asserted { ok } else { None },
                ),
                ok,
            )
        }
        Table::Normalizers => {
            let spec = row.spec();
            let h = build(&spec).expect("grid row failed to build");
            let nor = normalizer(&h);
            let expected: Option<usize> = match row.family {
                Family::W => Some(h.dim()),
                Family::K | Family::KO => Some(h.dim()),
                Family::SKO => Some(h.dim() + 1),
                Family::S => build(&row.with_variant(Variant::Bar)).ok().map(|b| b.dim()),
                Family::H | Family::HO | Family::SHO => build(&row.with_variant(Variant::Bar))
                    .ok()
                    .map(|b| b.dim() + 1),
            };
            let ok = expected.map(|e| e == nor.dim);
            (
                csv_line(
                    &spec,
                    nor.dim,
                    expected.map(|e| e.to_string()).unwrap_or_default(),
                    if row.asserted { ok } else { None },
                ),
                ok,
            )
        }
    }
}
