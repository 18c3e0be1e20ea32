//! Standardized Precipitation Index and drought-event extraction.
//!
//! Gamma distributions are fitted separately for each calendar month, with an
//! explicit probability mass `q` at zero. A drought is a maximal run of
//! negative SPI; its duration, cumulative SPI and start-to-start interval
//! feed the copula fits.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::empirical::RawSample;
use crate::error::{Error, Result};
use crate::special::{digamma, gamma_p, norm_quantile, trigamma};

/// Fewest positive amounts accepted for one calendar month.
pub const MIN_POSITIVE_PER_MONTH: usize = 10;
/// SPI probabilities are clamped to `[P_CLAMP, 1 - P_CLAMP]`.
pub const P_CLAMP: f64 = 1e-6;

const MONTH_NAMES: [&str; 12] = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonthlyPrecip {
    pub year: i32,
    pub month: u32,
    pub precip_mm: f64,
}

/// Contiguous monthly precipitation totals.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecipSeries {
    records: Vec<MonthlyPrecip>,
}

fn next_month(year: i32, month: u32) -> (i32, u32) {
    if month == 12 {
        (year + 1, 1)
    } else {
        (year, month + 1)
    }
}

fn csv_error(e: csv::Error) -> Error {
    match e.position() {
        Some(p) => Error::Parse(format!("row {}: {}", p.line(), e)),
        None => Error::Parse(e.to_string()),
    }
}

impl PrecipSeries {
    /// Validate and sort records; rejects bad months, negative or non-finite
    /// amounts, duplicates and gaps.
    pub fn new(mut records: Vec<MonthlyPrecip>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::InsufficientData("empty precipitation series".into()));
        }
        for r in &records {
            if !(1..=12).contains(&r.month) {
                return Err(Error::Parse(format!("{}-{:02}: month must be 1..12", r.year, r.month)));
            }
            if !(r.precip_mm.is_finite() && r.precip_mm >= 0.0) {
                return Err(Error::Parse(format!("{}-{:02}: precipitation must be finite and nonnegative, got {}", r.year, r.month, r.precip_mm)));
            }
        }
        records.sort_by_key(|r| (r.year, r.month));
        for w in records.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if (a.year, a.month) == (b.year, b.month) {
                return Err(Error::Parse(format!("duplicate month {}-{:02}", a.year, a.month)));
            }
            let (y, m) = next_month(a.year, a.month);
            if (y, m) != (b.year, b.month) {
                return Err(Error::Parse(format!("missing month {y}-{m:02} (gap between {}-{:02} and {}-{:02})", a.year, a.month, b.year, b.month)));
            }
        }
        Ok(PrecipSeries { records })
    }

    /// Consecutive months starting at `(year, month)`.
    pub fn from_amounts(year: i32, month: u32, amounts: &[f64]) -> Result<Self> {
        let mut ym = (year, month);
        let mut records = Vec::with_capacity(amounts.len());
        for &a in amounts {
            records.push(MonthlyPrecip { year: ym.0, month: ym.1, precip_mm: a });
            ym = next_month(ym.0, ym.1);
        }
        Self::new(records)
    }

    /// Parse CSV with header `year,month,precip_mm`.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(csv_error)?.clone();
        if headers.iter().collect::<Vec<_>>() != ["year", "month", "precip_mm"] {
            return Err(Error::Parse(format!("expected header year,month,precip_mm, got {}", headers.iter().collect::<Vec<_>>().join(","))));
        }
        let records = rdr.deserialize().collect::<std::result::Result<Vec<MonthlyPrecip>, _>>().map_err(csv_error)?;
        Self::new(records)
    }

    pub fn records(&self) -> &[MonthlyPrecip] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Zero-inflated gamma law of one calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub shape: f64,
    pub scale: f64,
    /// Probability of a zero amount.
    pub q: f64,
}

impl GammaFit {
    /// `q + (1 - q) G(x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.q;
        }
        self.q + (1.0 - self.q) * gamma_p(self.shape, x / self.scale)
    }

    /// SPI of amount `x`.
    pub fn spi(&self, x: f64) -> f64 {
        norm_quantile(self.cdf(x).clamp(P_CLAMP, 1.0 - P_CLAMP))
    }
}

/// Maximum-likelihood gamma fit on the positive entries of `values`.
/// `label` names the data in error messages.
pub fn fit_gamma(values: &[f64], label: &str) -> Result<GammaFit> {
    let pos: Vec<f64> = values.iter().copied().filter(|&x| x > 0.0).collect();
    if pos.len() < MIN_POSITIVE_PER_MONTH {
        return Err(Error::InsufficientData(format!("{label}: {} positive amounts, need at least {MIN_POSITIVE_PER_MONTH}", pos.len())));
    }
    let m = pos.len() as f64;
    let mean = pos.iter().sum::<f64>() / m;
    let var = pos.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m;
    // s = ln(mean) - mean(ln x) >= 0, zero only for constant data.
    let s = mean.ln() - pos.iter().map(|x| x.ln()).sum::<f64>() / m;
    if var <= 1e-12 * mean * mean || s <= 1e-14 {
        return Err(Error::DegenerateData(format!("{label}: positive amounts have zero variance")));
    }
    // Solve ln k - digamma(k) = s. The left side is convex and decreasing in k.
    let mut k = mean * mean / var;
    let mut converged = false;
    for _ in 0..100 {
        let f = k.ln() - digamma(k) - s;
        let df = 1.0 / k - trigamma(k);
        let mut next = k - f / df;
        if next.is_nan() || next <= 0.0 || next.is_infinite() {
            next = 0.5 * k;
        }
        let done = (next - k).abs() <= 1e-12 * k;
        k = next;
        if done {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::Numeric(format!("{label}: gamma shape iteration did not converge")));
    }
    let q = (values.len() - pos.len()) as f64 / values.len() as f64;
    Ok(GammaFit { shape: k, scale: mean / k, q })
}

/// One fit per calendar month, indexed `month - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonthlyGamma {
    pub fits: [GammaFit; 12],
}

impl MonthlyGamma {
    pub fn month(&self, month: u32) -> &GammaFit {
        &self.fits[month as usize - 1]
    }
}

fn fit_by_month(values: &[(u32, f64)]) -> Result<MonthlyGamma> {
    let mut fits = [GammaFit { shape: 1.0, scale: 1.0, q: 0.0 }; 12];
    for (i, fit) in fits.iter_mut().enumerate() {
        let month: Vec<f64> = values.iter().filter(|(m, _)| *m as usize == i + 1).map(|&(_, x)| x).collect();
        *fit = fit_gamma(&month, MONTH_NAMES[i])?;
    }
    Ok(MonthlyGamma { fits })
}

/// Zero-inflated gamma fit for each calendar month of the raw series.
pub fn fit_gamma_monthly(ps: &PrecipSeries) -> Result<MonthlyGamma> {
    fit_by_month(&ps.records.iter().map(|r| (r.month, r.precip_mm)).collect::<Vec<_>>())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpiValue {
    pub year: i32,
    pub month: u32,
    pub spi: f64,
}

/// SPI values in month order. With timescale `k` the first `k - 1` months
/// have no complete window and are dropped.
#[derive(Debug, Clone, PartialEq)]
pub struct SpiSeries {
    values: Vec<SpiValue>,
    pub timescale: usize,
}

impl SpiSeries {
    /// Consecutive months starting at `(year, month)`.
    pub fn from_values(year: i32, month: u32, spi: &[f64], timescale: usize) -> Result<Self> {
        let mut ym = (year, month);
        let mut values = Vec::with_capacity(spi.len());
        for &s in spi {
            if !s.is_finite() {
                return Err(Error::Parse(format!("{}-{:02}: SPI must be finite", ym.0, ym.1)));
            }
            values.push(SpiValue { year: ym.0, month: ym.1, spi: s });
            ym = next_month(ym.0, ym.1);
        }
        Ok(SpiSeries { values, timescale })
    }

    /// Parse CSV with header `year,month,spi`. Months must be contiguous.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let values = rdr.deserialize().collect::<std::result::Result<Vec<SpiValue>, _>>().map_err(csv_error)?;
        let first = values.first().ok_or_else(|| Error::InsufficientData("empty SPI series".into()))?;
        let series = Self::from_values(first.year, first.month, &values.iter().map(|v| v.spi).collect::<Vec<_>>(), 1)?;
        for (got, want) in values.iter().zip(&series.values) {
            if (got.year, got.month) != (want.year, want.month) {
                return Err(Error::Parse(format!("SPI series is not contiguous: expected {}-{:02}, got {}-{:02}", want.year, want.month, got.year, got.month)));
            }
        }
        Ok(series)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        for v in &self.values {
            w.serialize(v).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn values(&self) -> &[SpiValue] {
        &self.values
    }

    pub fn spi(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.spi).collect()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// SPI over `timescale`-month rolling sums, each calendar month (of the
/// window's last month) with its own fit.
pub fn spi(ps: &PrecipSeries, timescale: usize) -> Result<SpiSeries> {
    if timescale == 0 {
        return Err(Error::Config("timescale must be at least 1 month".into()));
    }
    if ps.len() < timescale {
        return Err(Error::InsufficientData(format!("{} months cannot fill a {timescale}-month window", ps.len())));
    }
    let sums: Vec<(i32, u32, f64)> = ps
        .records
        .windows(timescale)
        .map(|w| {
            let last = w[timescale - 1];
            (last.year, last.month, w.iter().map(|r| r.precip_mm).sum())
        })
        .collect();
    let fits = fit_by_month(&sums.iter().map(|&(_, m, x)| (m, x)).collect::<Vec<_>>())?;
    let values = sums.iter().map(|&(year, month, x)| SpiValue { year, month, spi: fits.month(month).spi(x) }).collect();
    Ok(SpiSeries { values, timescale })
}

/// One drought: a maximal run of negative SPI.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DroughtEvent {
    /// 1-based position of the first month in the SPI series.
    pub start: usize,
    pub start_year: i32,
    pub start_month: u32,
    pub duration: usize,
    /// Sum of SPI over the run; always negative.
    pub severity: f64,
    /// Months from this start to the next event's start.
    pub interval: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DroughtRecord {
    pub events: Vec<DroughtEvent>,
}

pub fn extract_droughts(s: &SpiSeries) -> DroughtRecord {
    let mut events: Vec<DroughtEvent> = Vec::new();
    let mut i = 0;
    let v = &s.values;
    while i < v.len() {
        if v[i].spi >= 0.0 {
            i += 1;
            continue;
        }
        let start = i;
        let mut severity = 0.0;
        while i < v.len() && v[i].spi < 0.0 {
            severity += v[i].spi;
            i += 1;
        }
        if let Some(prev) = events.last_mut() {
            prev.interval = Some(start + 1 - prev.start);
        }
        events.push(DroughtEvent { start: start + 1, start_year: v[start].year, start_month: v[start].month, duration: i - start, severity, interval: None });
    }
    DroughtRecord { events }
}

impl DroughtRecord {
    /// Columns `event,start_year,start_month,duration,severity,interval`;
    /// the last interval is empty. `abs_severity` writes `|S|`.
    pub fn write_csv<W: Write>(&self, writer: W, abs_severity: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(["event", "start_year", "start_month", "duration", "severity", "interval"]).map_err(io)?;
        for (k, e) in self.events.iter().enumerate() {
            let sev = if abs_severity { e.severity.abs() } else { e.severity };
            w.write_record([
                (k + 1).to_string(),
                e.start_year.to_string(),
                e.start_month.to_string(),
                e.duration.to_string(),
                sev.to_string(),
                e.interval.map(|i| i.to_string()).unwrap_or_default(),
            ])
            .map_err(io)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Samples `(S_d, I_d)` and `(D_d, I_d)` over events that have a successor.
#[derive(Debug, Clone, PartialEq)]
pub struct DroughtPairs {
    pub severity_interval: RawSample,
    pub duration_interval: RawSample,
}

pub fn drought_pairs(r: &DroughtRecord) -> Result<DroughtPairs> {
    let usable: Vec<(&DroughtEvent, usize)> = r.events.iter().filter_map(|e| e.interval.map(|i| (e, i))).collect();
    if usable.len() < 2 {
        return Err(Error::InsufficientData(format!("{} drought(s) with a successor, need at least 2", usable.len())));
    }
    Ok(DroughtPairs {
        severity_interval: RawSample::new(usable.iter().map(|(e, i)| (e.severity, *i as f64)).collect())?,
        duration_interval: RawSample::new(usable.iter().map(|(e, i)| (e.duration as f64, *i as f64)).collect())?,
    })
}
