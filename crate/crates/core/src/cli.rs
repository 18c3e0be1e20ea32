//! Command-line front end: `fit`, `gof`, `simulate`, `spi` and `droughts`.
//!
//! Exit codes: 0 success, 2 input or configuration error, 3 fit or numeric
//! failure.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::copula::CopulaFamily;
use crate::empirical::{pseudo_observations, RawSample};
use crate::error::{Error, Result};
use crate::estimators::{fit, Method};
use crate::gof::bootstrap_pvalue;
use crate::hydro::{extract_droughts, spi, PrecipSeries, SpiSeries};
use crate::llpt::DEFAULT_K_FRAC;
use crate::simstudy::{run_study, write_csv, StudyConfig};

/// Bootstrap replicates used by `gof` when `-B` is not given.
pub const DEFAULT_BOOTSTRAP: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "copulafit", version, about = "Semiparametric bivariate copula estimation and drought analysis")]
pub struct Cli {
    /// Worker threads (0 = one per core).
    #[arg(long, global = true, env = "COPULAFIT_JOBS", default_value_t = 0)]
    pub jobs: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a copula family to two-column data; prints one JSON line.
    Fit(FitArgs),
    /// Cramer-von Mises bootstrap goodness of fit; prints one JSON line.
    Gof(GofArgs),
    /// Monte Carlo study over a family x tau x n grid; writes CSV.
    Simulate(SimulateArgs),
    /// Monthly SPI from a `year,month,precip_mm` CSV.
    Spi(SpiArgs),
    /// Drought events from a precipitation CSV or an SPI CSV.
    Droughts(DroughtArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// CSV with at least two numeric columns; a header row is optional.
    pub input: PathBuf,
    /// Columns to use, by header name or 0-based index, e.g. `duration,interval`.
    #[arg(long, value_delimiter = ',')]
    pub columns: Option<Vec<String>>,
    #[arg(long)]
    pub family: CopulaFamily,
    /// mpl, mphd, mpnd, mpkld or mpad:<alpha>.
    #[arg(long, default_value = "mpl")]
    pub method: Method,
    /// Neighbour fraction of the LLPT bandwidth.
    #[arg(long, default_value_t = DEFAULT_K_FRAC)]
    pub k_frac: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Bootstrap replicates (at least 99).
    #[arg(short = 'B', long = "bootstrap", default_value_t = DEFAULT_BOOTSTRAP)]
    pub b: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// TOML study configuration; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_delimiter = ',')]
    pub families: Option<Vec<CopulaFamily>>,
    #[arg(long, value_delimiter = ',')]
    pub taus: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<Method>>,
    /// Replications per cell.
    #[arg(short = 'M', long)]
    pub replications: Option<usize>,
    #[arg(long)]
    pub k_frac: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SpiArgs {
    pub input: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub timescale: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DroughtArgs {
    /// `year,month,precip_mm` or `year,month,spi` CSV.
    pub input: PathBuf,
    /// SPI timescale when the input is precipitation.
    #[arg(long, default_value_t = 1)]
    pub timescale: usize,
    /// Write severity as a positive number.
    #[arg(long)]
    pub abs_severity: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Config(_) | Error::Io(_) | Error::Contract(_) | Error::InsufficientData(_) => 2,
        Error::Numeric(_) | Error::DegenerateData(_) | Error::ParameterDomain(_) | Error::Domain(_) => 3,
    }
}

/// Parse arguments, run, and report errors on stderr.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("copulafit: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| match cli.command {
        Command::Fit(a) => cmd_fit(&a),
        Command::Gof(a) => cmd_gof(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Spi(a) => cmd_spi(&a),
        Command::Droughts(a) => cmd_droughts(&a),
    })
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn json_line<T: serde::Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut out = output(path)?;
    let line = serde_json::to_string(value).map_err(|e| Error::Io(e.to_string()))?;
    writeln!(out, "{line}")?;
    out.flush()?;
    Ok(())
}

/// Read two columns of numbers. The first row is a header unless it is
/// entirely numeric. Rows with an empty selected field are skipped,
/// which drops the open interval of a drought CSV's last event.
pub fn read_pairs<R: Read>(reader: R, columns: Option<&[String]>) -> Result<RawSample> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).trim(csv::Trim::All).from_reader(reader);
    let mut rows = rdr.records();
    let first = match rows.next() {
        Some(r) => r.map_err(|e| Error::Parse(format!("row 1: {e}")))?,
        None => return Err(Error::InsufficientData("empty input".into())),
    };
    let has_header = first.iter().any(|f| f.parse::<f64>().is_err());
    let width = first.len();
    let pick = |name: &str| -> Result<usize> {
        if let Ok(i) = name.parse::<usize>() {
            return if i < width { Ok(i) } else { Err(Error::Config(format!("column index {i} out of range ({width} columns)"))) };
        }
        if !has_header {
            return Err(Error::Config(format!("column '{name}' requested but the input has no header")));
        }
        first.iter().position(|h| h == name).ok_or_else(|| Error::Config(format!("no column named '{name}'")))
    };
    let (cx, cy) = match columns {
        Some([a, b]) => (pick(a)?, pick(b)?),
        Some(_) => return Err(Error::Config("--columns takes exactly two names".into())),
        None if width >= 2 => (0, 1),
        None => return Err(Error::Parse(format!("row 1: expected at least two columns, found {width}"))),
    };

    let mut pairs = Vec::new();
    let mut parse_row = |row: usize, rec: &csv::StringRecord| -> Result<()> {
        let field = |c: usize| rec.get(c).ok_or_else(|| Error::Parse(format!("row {row}: missing column {c}")));
        let (fx, fy) = (field(cx)?, field(cy)?);
        if fx.is_empty() || fy.is_empty() {
            return Ok(());
        }
        let num = |s: &str| s.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| Error::Parse(format!("row {row}: '{s}' is not a finite number")));
        pairs.push((num(fx)?, num(fy)?));
        Ok(())
    };
    if !has_header {
        parse_row(1, &first)?;
    }
    for (i, rec) in rows.enumerate() {
        let row = i + 2;
        let rec = rec.map_err(|e| Error::Parse(format!("row {row}: {e}")))?;
        parse_row(row, &rec)?;
    }
    if pairs.len() < 2 {
        return Err(Error::InsufficientData(format!("{} usable rows, need at least 2", pairs.len())));
    }
    RawSample::new(pairs)
}

fn load_pairs(a: &DataArgs) -> Result<RawSample> {
    read_pairs(open(&a.input)?, a.columns.as_deref())
}

pub fn cmd_fit(a: &FitArgs) -> Result<()> {
    let d = &a.data;
    let ps = pseudo_observations(&load_pairs(d)?);
    let r = fit(d.method, d.family, &ps, None, d.k_frac)?;
    json_line(&r, d.out.as_deref())
}

pub fn cmd_gof(a: &GofArgs) -> Result<()> {
    let d = &a.data;
    let ps = pseudo_observations(&load_pairs(d)?);
    let r = bootstrap_pvalue(d.family, &ps, d.method, a.b, d.seed, d.k_frac)?;
    json_line(&r, d.out.as_deref())
}

/// Study configuration from `--config` (or defaults) with flag overrides.
pub fn study_config(a: &SimulateArgs) -> Result<StudyConfig> {
    let mut cfg = match &a.config {
        Some(p) => {
            let mut text = String::new();
            open(p)?.read_to_string(&mut text)?;
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => StudyConfig::default(),
    };
    if let Some(v) = &a.families {
        cfg.families = v.clone();
    }
    if let Some(v) = &a.taus {
        cfg.taus = v.clone();
    }
    if let Some(v) = &a.ns {
        cfg.ns = v.clone();
    }
    if let Some(v) = &a.methods {
        cfg.methods = v.clone();
    }
    if let Some(v) = a.replications {
        cfg.replications = v;
    }
    if let Some(v) = a.k_frac {
        cfg.k_frac = v;
    }
    if let Some(v) = a.seed {
        cfg.master_seed = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn cmd_simulate(a: &SimulateArgs) -> Result<()> {
    let cfg = study_config(a)?;
    log::info!("simulating {} rows at M = {}", cfg.row_count(), cfg.replications);
    let rows = run_study(&cfg)?.into_result()?;
    let mut out = output(a.out.as_deref())?;
    write_csv(&rows, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn cmd_spi(a: &SpiArgs) -> Result<()> {
    let s = spi(&PrecipSeries::from_csv(open(&a.input)?)?, a.timescale)?;
    let mut out = output(a.out.as_deref())?;
    s.write_csv(&mut out)?;
    out.flush()?;
    Ok(())
}

/// SPI from a precipitation CSV, or read directly from an SPI CSV.
pub fn load_spi(path: &Path, timescale: usize) -> Result<SpiSeries> {
    let mut text = String::new();
    open(path)?.read_to_string(&mut text)?;
    let header = text.lines().next().unwrap_or("");
    if header.split(',').any(|h| h.trim() == "spi") {
        SpiSeries::from_csv(text.as_bytes())
    } else {
        spi(&PrecipSeries::from_csv(text.as_bytes())?, timescale)
    }
}

pub fn cmd_droughts(a: &DroughtArgs) -> Result<()> {
    let r = extract_droughts(&load_spi(&a.input, a.timescale)?);
    log::info!("{} drought events", r.events.len());
    let mut out = output(a.out.as_deref())?;
    r.write_csv(&mut out, a.abs_severity)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cols(a: &str, b: &str) -> Vec<String> {
        vec![a.into(), b.into()]
    }

    #[test]
    fn pairs_with_and_without_header() {
        let plain = read_pairs("1,2\n3,4\n5,6\n".as_bytes(), None).unwrap();
        assert_eq!(plain.pairs(), &[(1.0, 2.0), (3.0, 4.0), (5.0, 6.0)]);
        let named = read_pairs("x,y,z\n1,2,3\n4,5,6\n".as_bytes(), Some(&cols("z", "x"))).unwrap();
        assert_eq!(named.pairs(), &[(3.0, 1.0), (6.0, 4.0)]);
        let indexed = read_pairs("x,y,z\n1,2,3\n4,5,6\n".as_bytes(), Some(&cols("1", "2"))).unwrap();
        assert_eq!(indexed.pairs(), &[(2.0, 3.0), (5.0, 6.0)]);
    }

    #[test]
    fn drought_csv_is_readable_as_pairs() {
        let csv = "event,start_year,start_month,duration,severity,interval\n1,2000,1,2,-1.5,3\n2,2000,4,1,-0.2,5\n3,2000,9,3,-2,\n";
        let p = read_pairs(csv.as_bytes(), Some(&cols("duration", "interval"))).unwrap();
        assert_eq!(p.pairs(), &[(2.0, 3.0), (1.0, 5.0)]);
    }

    #[test]
    fn malformed_rows_name_the_row() {
        let e = read_pairs("x,y\n1,2\n3,oops\n".as_bytes(), None).unwrap_err();
        assert!(matches!(&e, Error::Parse(m) if m.contains("row 3")), "{e}");
        assert_eq!(exit_code(&e), 2);
        let e = read_pairs("1,2\n3\n".as_bytes(), None).unwrap_err();
        assert!(matches!(&e, Error::Parse(m) if m.contains("row 2")), "{e}");
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Numeric("x".into())), 3);
        assert_eq!(exit_code(&Error::DegenerateData("x".into())), 3);
    }

    #[test]
    fn simulate_flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.toml");
        std::fs::write(&p, "families = [\"clayton\"]\ntaus = [0.4]\nns = [30]\nreplications = 5\n").unwrap();
        let cli = Cli::try_parse_from(["copulafit", "simulate", "--config", p.to_str().unwrap(), "-M", "7", "--methods", "mpl,mpad:0.5"]).unwrap();
        let Command::Simulate(a) = cli.command else { panic!() };
        let cfg = study_config(&a).unwrap();
        assert_eq!(cfg.replications, 7);
        assert_eq!(cfg.methods, vec![Method::Mpl, Method::MPHD]);
        assert_eq!(cfg.families, vec![CopulaFamily::Clayton]);
        std::fs::write(&p, "bogus = 1\n").unwrap();
        assert!(matches!(study_config(&a), Err(Error::Config(_))));
    }
}
