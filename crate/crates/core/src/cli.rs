//! Command-line front end. Every command writes one table, either as CSV with
//! fixed 17-significant-digit formatting or as JSON carrying the run header
//! described by `schema/output.schema.json`.

use std::f64::consts::FRAC_PI_4;
use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::asymptotic::{arcsine_envelope, balanced_upper_envelope};
use crate::error::{Error, Result};
use crate::exact::{distribution, normalized_imbalance, DistributionSeries, Engine, FockInput};
use crate::oracle::{oracle_check, oracle_check_sizes};
use crate::statistics::{
    averaged_distribution_closed, averaged_distribution_direct, correlation_grid_closed,
    correlation_grid_direct, AveragingWindow, CorrelationSource, Normalization, Weighting,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const OUTPUT_SCHEMA: &str = include_str!("../schema/output.schema.json");
pub const THREADS_ENV: &str = "BEAMSPLIT_THREADS";

/// Note recorded with the figure data set about which output points vanish
/// for balanced input.
pub const PARITY_NOTE: &str = "For balanced input the amplitude is nonzero only where N(1+x)/4 is an \
integer, i.e. Nx = 0, ±4, ±8, ... (even m_a). Points with Nx = ±2, ±6, ... (odd m_a) vanish exactly.";

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const REGIME: i32 = 3;
    pub const NUMERICAL: i32 = 4;
    pub const IO: i32 = 5;
    pub const DOMAIN: i32 = 6;
    pub const RESOURCE: i32 = 7;
    pub const RANGE: i32 = 8;
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Usage(_) => exit::USAGE,
        Error::Regime(_) => exit::REGIME,
        Error::Numerical(_) => exit::NUMERICAL,
        Error::Io(_) => exit::IO,
        Error::Domain(_) => exit::DOMAIN,
        Error::Resource(_) => exit::RESOURCE,
        Error::Range(_) => exit::RANGE,
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "beamsplit",
    version,
    about = "Photon-number statistics at a beam splitter output"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Output distribution for one input state.
    Dist(DistArgs),
    /// Per-point comparison of two engines.
    Compare(CompareArgs),
    /// Ensemble average over input imbalance, direct and closed form.
    Average(AverageArgs),
    /// Two-point correlation of the output density over the ensemble.
    Correlate(CorrelateArgs),
    /// Compare the exact engine with the matrix-exponential oracle.
    Verify(VerifyArgs),
    /// Write the six N = 600 series and two reference curves with a manifest.
    Figure2(Figure2Args),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridFilter {
    All,
    Nonzero,
}

#[derive(Args, Debug, Clone)]
pub struct InputArgs {
    #[arg(long)]
    pub n_total: u32,
    /// Signed input imbalance n_a - n_b.
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    pub ny: i64,
    /// Mixing angle; π/4 is the 50:50 splitter.
    #[arg(long, default_value_t = FRAC_PI_4)]
    pub xi: f64,
}

impl InputArgs {
    fn input(&self) -> Result<FockInput> {
        FockInput::from_imbalance(self.n_total, self.ny)
            .and_then(|i| i.with_xi(self.xi))
            .map_err(as_usage)
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Destination file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct DistArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value_t = Engine::Exact)]
    pub engine: Engine,
    #[arg(long, value_enum, default_value_t = GridFilter::All)]
    pub grid: GridFilter,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Reference engine.
    #[arg(long, value_enum, default_value_t = Engine::Exact)]
    pub reference: Engine,
    #[arg(long, value_enum)]
    pub engine: Engine,
    #[arg(long, value_enum, default_value_t = GridFilter::All)]
    pub grid: GridFilter,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct WindowArgs {
    #[arg(long)]
    pub n_total: u32,
    #[arg(long)]
    pub n_bound: u32,
    #[arg(long, value_enum, default_value_t = Weighting::Uniform)]
    pub weighting: Weighting,
    #[arg(long, value_enum, default_value_t = Normalization::Density)]
    pub normalization: Normalization,
}

impl WindowArgs {
    fn window(&self) -> Result<AveragingWindow> {
        let w = AveragingWindow::new(self.n_bound, self.weighting).map_err(as_usage)?;
        w.members(self.n_total).map_err(as_usage)?;
        Ok(w)
    }
}

#[derive(Args, Debug)]
pub struct AverageArgs {
    #[command(flatten)]
    pub window: WindowArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct CorrelateArgs {
    #[command(flatten)]
    pub window: WindowArgs,
    #[arg(long, value_enum, default_value_t = CorrelationSource::Closed)]
    pub source: CorrelationSource,
    /// Keep every k-th interior grid point.
    #[arg(long, default_value_t = 1)]
    pub stride: u32,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Check every N up to this bound.
    #[arg(long, default_value_t = 20)]
    pub n_max: u32,
    /// Angle other than π/4; checks the listed sizes only.
    #[arg(long)]
    pub xi: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Args, Debug)]
pub struct Figure2Args {
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 600)]
    pub n_total: u32,
    #[arg(long, value_delimiter = ',', default_values_t = [0i64, 12, 24])]
    pub ny: Vec<i64>,
}

fn as_usage(err: Error) -> Error {
    match err {
        Error::Domain(msg) => Error::Usage(msg),
        other => other,
    }
}

#[derive(Clone, Debug)]
enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => json!(v),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) | Cell::Empty => Value::Null,
            Cell::Text(s) => json!(s),
        }
    }
}

/// 17 significant digits, round-trip exact.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        // keep the sign bit out of the output
        return format!("{:.16e}", 0.0);
    }
    format!("{v:.16e}")
}

struct Header {
    kind: &'static str,
    n_total: u32,
    ny: Option<i64>,
    xi: f64,
    engine: String,
    extra: Map<String, Value>,
}

struct Table {
    header: Header,
    columns: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
    summary: Vec<(String, Cell)>,
}

impl Table {
    fn csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        for (k, v) in &self.summary {
            s.push_str(&format!("# {k},{}\n", v.csv()));
        }
        s
    }

    fn json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(r)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect(),
                )
            })
            .collect();
        let summary: Map<String, Value> = self
            .summary
            .iter()
            .map(|(k, v)| (k.clone(), v.json()))
            .collect();
        let mut obj = Map::new();
        obj.insert("kind".into(), json!(self.header.kind));
        obj.insert("version".into(), json!(VERSION));
        obj.insert("n_total".into(), json!(self.header.n_total));
        obj.insert("ny".into(), json!(self.header.ny));
        obj.insert("xi".into(), json!(self.header.xi));
        obj.insert("engine".into(), json!(self.header.engine));
        for (k, v) in &self.header.extra {
            obj.insert(k.clone(), v.clone());
        }
        obj.insert("columns".into(), json!(self.columns));
        obj.insert("rows".into(), Value::Array(rows));
        obj.insert("summary".into(), Value::Object(summary));
        Value::Object(obj)
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.csv(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json()).expect("table serializes");
                s.push('\n');
                s
            }
        }
    }
}

fn emit(table: &Table, out: &OutputArgs) -> Result<()> {
    let text = table.render(out.format);
    match &out.output {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub const DIST_COLUMNS: [&str; 7] = [
    "m_a",
    "m_b",
    "x",
    "amplitude_sign",
    "amplitude_log_mag",
    "density",
    "engine",
];

fn series_table(series: &DistributionSeries, grid: GridFilter) -> Table {
    let rows = series
        .points
        .iter()
        .filter(|p| grid == GridFilter::All || !p.amplitude.is_zero())
        .map(|p| {
            vec![
                Cell::Int(p.m_a.into()),
                Cell::Int(p.m_b.into()),
                Cell::Float(p.x),
                Cell::Int(p.amplitude.sign().into()),
                Cell::Float(p.amplitude.log_mag()),
                Cell::Float(p.density),
                Cell::Text(series.engine.name().into()),
            ]
        })
        .collect();
    let mut extra = Map::new();
    extra.insert("within_validity".into(), json!(series.within_validity));
    Table {
        header: Header {
            kind: "distribution",
            n_total: series.input.n_total(),
            ny: Some(series.input.ny()),
            xi: series.input.xi(),
            engine: series.engine.name().into(),
            extra,
        },
        columns: DIST_COLUMNS.to_vec(),
        rows,
        summary: vec![(
            "total_probability".into(),
            Cell::Float(series.total_probability()),
        )],
    }
}

fn dist(args: &DistArgs) -> Result<Table> {
    let series = distribution(&args.input.input()?, args.engine)?;
    Ok(series_table(&series, args.grid))
}

fn relative_error(reference: f64, value: f64) -> f64 {
    if reference == value {
        0.0
    } else {
        (value - reference).abs() / reference.abs()
    }
}

fn compare(args: &CompareArgs) -> Result<Table> {
    let input = args.input.input()?;
    let reference = distribution(&input, args.reference)?;
    let other = distribution(&input, args.engine)?;
    let (mut inner, mut all) = (0.0f64, 0.0f64);
    let mut rows = Vec::new();
    for (a, b) in reference.points.iter().zip(&other.points) {
        if args.grid == GridFilter::Nonzero && a.amplitude.is_zero() {
            continue;
        }
        let err = relative_error(a.density, b.density);
        if !err.is_nan() {
            all = all.max(err);
            if a.x.abs() <= 0.8 {
                inner = inner.max(err);
            }
        }
        rows.push(vec![
            Cell::Int(a.m_a.into()),
            Cell::Int(a.m_b.into()),
            Cell::Float(a.x),
            Cell::Float(a.density),
            Cell::Float(b.density),
            Cell::Float(err),
        ]);
    }
    let mut extra = Map::new();
    extra.insert("reference".into(), json!(args.reference.name()));
    extra.insert("within_validity".into(), json!(other.within_validity));
    Ok(Table {
        header: Header {
            kind: "comparison",
            n_total: input.n_total(),
            ny: Some(input.ny()),
            xi: input.xi(),
            engine: args.engine.name().into(),
            extra,
        },
        columns: vec![
            "m_a",
            "m_b",
            "x",
            "density_reference",
            "density_engine",
            "relative_error",
        ],
        rows,
        summary: vec![
            ("max_relative_error_abs_x_le_0.8".into(), Cell::Float(inner)),
            ("max_relative_error_all".into(), Cell::Float(all)),
        ],
    })
}

fn window_extra(w: &WindowArgs) -> Map<String, Value> {
    let mut extra = Map::new();
    extra.insert("n_bound".into(), json!(w.n_bound));
    extra.insert(
        "weighting".into(),
        serde_json::to_value(w.weighting).expect("enum"),
    );
    extra.insert(
        "normalization".into(),
        serde_json::to_value(w.normalization).expect("enum"),
    );
    extra
}

fn average(args: &AverageArgs) -> Result<Table> {
    let w = &args.window;
    let window = w.window()?;
    let avg = averaged_distribution_direct(w.n_total, &window, w.normalization)?;
    let closed_ok = w.weighting == Weighting::Uniform;
    let mut rows = Vec::new();
    for p in &avg.points {
        let closed = if closed_ok {
            match averaged_distribution_closed(w.n_total, w.n_bound, p.m_a, w.normalization) {
                Ok(v) => Some(v),
                Err(Error::Domain(_) | Error::Regime(_)) => None,
                Err(e) => return Err(e),
            }
        } else {
            None
        };
        let arcsine = arcsine_envelope(p.x).ok().map(|v| {
            if w.normalization == Normalization::HalfDensity {
                v / 2.0
            } else {
                v
            }
        });
        let opt = |v: Option<f64>| v.map_or(Cell::Empty, Cell::Float);
        rows.push(vec![
            Cell::Int(p.m_a.into()),
            Cell::Int((w.n_total - p.m_a).into()),
            Cell::Float(p.x),
            Cell::Float(p.density),
            opt(closed),
            opt(arcsine),
            opt(closed.map(|c| p.density - c)),
        ]);
    }
    Ok(Table {
        header: Header {
            kind: "average",
            n_total: w.n_total,
            ny: None,
            xi: FRAC_PI_4,
            engine: "exact".into(),
            extra: window_extra(w),
        },
        columns: vec![
            "m_a",
            "m_b",
            "x",
            "direct",
            "closed",
            "arcsine",
            "deviation",
        ],
        rows,
        summary: vec![("total_mass".into(), Cell::Float(avg.total_mass))],
    })
}

fn correlate(args: &CorrelateArgs) -> Result<Table> {
    let w = &args.window;
    let window = w.window()?;
    if args.stride == 0 {
        return Err(Error::Usage("stride must be positive".into()));
    }
    let ms: Vec<u32> = (1..w.n_total).step_by(args.stride as usize).collect();
    let grid = match args.source {
        CorrelationSource::Closed => {
            if w.weighting != Weighting::Uniform {
                return Err(Error::Usage(
                    "closed correlation assumes uniform weighting".into(),
                ));
            }
            correlation_grid_closed(w.n_total, w.n_bound, &ms, w.normalization)?
        }
        CorrelationSource::Direct => {
            correlation_grid_direct(w.n_total, &window, &ms, w.normalization)?
        }
    };
    let k = grid.size();
    let mut rows = Vec::with_capacity(k * k);
    for i in 0..k {
        for j in 0..k {
            rows.push(vec![
                Cell::Int(grid.m_values[i].into()),
                Cell::Int(grid.m_values[j].into()),
                Cell::Float(grid.xs[i]),
                Cell::Float(grid.xs[j]),
                Cell::Int(grid.epsilon_mask[i * k + j].into()),
                Cell::Float(grid.at(i, j)),
            ]);
        }
    }
    let mut extra = window_extra(w);
    extra.insert(
        "source".into(),
        serde_json::to_value(args.source).expect("enum"),
    );
    Ok(Table {
        header: Header {
            kind: "correlation",
            n_total: w.n_total,
            ny: None,
            xi: FRAC_PI_4,
            engine: match args.source {
                CorrelationSource::Closed => "closed".into(),
                CorrelationSource::Direct => "exact".into(),
            },
            extra,
        },
        columns: vec!["m_a", "m_a_prime", "x", "x_prime", "epsilon", "value"],
        rows,
        summary: vec![],
    })
}

fn verify(args: &VerifyArgs) -> Result<(Table, bool)> {
    let report = match args.xi {
        None => oracle_check(args.n_max)?,
        Some(xi) => oracle_check_sizes(&(0..=args.n_max).collect::<Vec<_>>(), xi)?,
    };
    let (n, n_a, m_a) = report.worst;
    let table = Table {
        header: Header {
            kind: "verification",
            n_total: args.n_max,
            ny: None,
            xi: report.xi,
            engine: "exact+oracle".into(),
            extra: Map::new(),
        },
        columns: vec![
            "n_max",
            "comparisons",
            "max_deviation",
            "worst_n_total",
            "worst_n_a",
            "worst_m_a",
            "passed",
        ],
        rows: vec![vec![
            Cell::Int(args.n_max.into()),
            Cell::Int(report.comparisons as i64),
            Cell::Float(report.max_deviation),
            Cell::Int(n.into()),
            Cell::Int(n_a.into()),
            Cell::Int(m_a.into()),
            Cell::Text(report.passed.to_string()),
        ]],
        summary: vec![("tolerance".into(), Cell::Float(report.tolerance))],
    };
    Ok((table, report.passed))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn write_file(dir: &Path, name: &str, text: &str) -> Result<Value> {
    fs::write(dir.join(name), text)?;
    Ok(json!({
        "file": name,
        "sha256": hex(&Sha256::digest(text.as_bytes())),
        "bytes": text.len(),
    }))
}

fn envelope_table(n_total: u32, name: &'static str, f: fn(f64) -> Result<f64>) -> Result<Table> {
    let rows = (1..n_total)
        .map(|m| {
            let x = normalized_imbalance(n_total, m);
            Ok(vec![
                Cell::Int(m.into()),
                Cell::Float(x),
                Cell::Float(f(x)?),
            ])
        })
        .collect::<Result<_>>()?;
    Ok(Table {
        header: Header {
            kind: "envelope",
            n_total,
            ny: Some(0),
            xi: FRAC_PI_4,
            engine: name.into(),
            extra: Map::new(),
        },
        columns: vec!["m_a", "x", "density"],
        rows,
        summary: vec![],
    })
}

/// Writes the figure data set and returns the manifest.
pub fn figure2(args: &Figure2Args) -> Result<Value> {
    fs::create_dir_all(&args.out_dir)?;
    let mut files = Vec::new();
    for &ny in &args.ny {
        let input = FockInput::from_imbalance(args.n_total, ny).map_err(as_usage)?;
        for engine in [Engine::Exact, Engine::ImbalancedEq17] {
            let series = distribution(&input, engine)?;
            let name = format!("{}_ny{ny}.csv", engine.name());
            let mut entry = write_file(
                &args.out_dir,
                &name,
                &series_table(&series, GridFilter::All).csv(),
            )?;
            entry["engine"] = json!(engine.name());
            entry["ny"] = json!(ny);
            entry["within_validity"] = json!(series.within_validity);
            files.push(entry);
        }
    }
    for (name, f) in [
        (
            "upper_envelope",
            balanced_upper_envelope as fn(f64) -> Result<f64>,
        ),
        ("arcsine", arcsine_envelope as fn(f64) -> Result<f64>),
    ] {
        let table = envelope_table(args.n_total, name, f)?;
        let mut entry = write_file(&args.out_dir, &format!("{name}.csv"), &table.csv())?;
        entry["engine"] = json!(name);
        entry["ny"] = Value::Null;
        files.push(entry);
    }
    let manifest = json!({
        "kind": "figure2_manifest",
        "version": VERSION,
        "n_total": args.n_total,
        "ny": Value::Null,
        "ny_values": args.ny,
        "xi": FRAC_PI_4,
        "engine": "exact+eq17",
        "density": "(N/2)|A|^2",
        "csv_columns": DIST_COLUMNS,
        "files": files,
        "parity_note": PARITY_NOTE,
    });
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    fs::write(args.out_dir.join("manifest.json"), text)?;
    Ok(manifest)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| {
            Error::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        // A pool may already exist when embedded; the override is best effort.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<i32> {
    configure_threads()?;
    match &cli.command {
        Command::Dist(a) => emit(&dist(a)?, &a.out)?,
        Command::Compare(a) => emit(&compare(a)?, &a.out)?,
        Command::Average(a) => emit(&average(a)?, &a.out)?,
        Command::Correlate(a) => emit(&correlate(a)?, &a.out)?,
        Command::Verify(a) => {
            let (table, passed) = verify(a)?;
            emit(&table, &a.out)?;
            if !passed {
                return Ok(exit::NUMERICAL);
            }
        }
        Command::Figure2(a) => {
            figure2(a)?;
        }
    }
    Ok(exit::SUCCESS)
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                exit::USAGE
            } else {
                exit::SUCCESS
            };
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("beamsplit: {e}");
            exit_code(&e)
        }
    }
}
