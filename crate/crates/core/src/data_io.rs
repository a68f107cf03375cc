//! Bid matrices: synthetic log-normal generation, CSV ingestion with
//! missing-cell tracking, empirical resampling fills, and reserve rescaling.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;

use crate::{Error, Money, Result};

/// Parameters of the synthetic protocol: each dataset draws a per-bidder
/// median from `(0, median_bound]` and a per-bidder log-space variance from
/// `(0, variance_bound]`, then samples every bid log-normally.
///
/// "Variance" here is the variance of the underlying normal; the median
/// pins that normal's mean at `ln(median)`. This is stated explicitly
/// because the log-normal itself has a different variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticSpec {
    /// Bidders per dataset (`n`).
    pub bidders: usize,
    /// Auctions per dataset (`T`).
    pub auctions: usize,
    /// Upper bound for the per-bidder median draw (`mu`).
    pub median_bound: f64,
    /// Upper bound for the per-bidder log-space variance draw (`sigma`).
    pub variance_bound: f64,
    /// Reserve price the datasets are intended to run under (`r`).
    pub reserve: Money,
    /// Number of independent datasets (`M`).
    pub datasets: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |field: &'static str, reason: &str| {
            Err(Error::InvalidSyntheticField { field, reason: reason.into() })
        };
        if self.bidders == 0 {
            return fail("n", "at least one bidder is required");
        }
        if self.auctions == 0 {
            return fail("T", "at least one auction is required");
        }
        if !(self.median_bound > 0.0) || !self.median_bound.is_finite() {
            return fail("mu", "median bound must be positive and finite");
        }
        if !(self.variance_bound > 0.0) || !self.variance_bound.is_finite() {
            return fail("sigma", "variance bound must be positive and finite");
        }
        if !(self.reserve >= 0.0) || !self.reserve.is_finite() {
            return fail("r", "reserve must be non-negative and finite");
        }
        if self.datasets == 0 {
            return fail("M", "at least one dataset is required");
        }
        Ok(())
    }
}

/// Where a matrix came from, carried through fills and rescaling.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Synthetic { seed: u64, index: usize },
    File(String),
    Memory,
}

/// A dense auctions x bidders matrix of money values with per-cell
/// missingness. Complete matrices (no missing cells) are what simulations
/// consume; loaders flag absent cells rather than zero-filling them, since
/// "no bid observed" and "bid of zero" are different facts.
#[derive(Debug, Clone, PartialEq)]
pub struct BidMatrix {
    auction_ids: Vec<String>,
    bidder_ids: Vec<String>,
    values: Vec<Money>, // row-major, auctions x bidders
    missing: Vec<bool>,
    provenance: Provenance,
}

impl BidMatrix {
    /// Wraps a complete row-major value matrix.
    pub fn from_values(auctions: usize, bidders: usize, values: Vec<Money>) -> Result<Self> {
        if values.len() != auctions * bidders {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("{} values for a {auctions}x{bidders} matrix", values.len()),
            });
        }
        Ok(Self {
            auction_ids: (1..=auctions).map(|t| t.to_string()).collect(),
            bidder_ids: (1..=bidders).map(|i| i.to_string()).collect(),
            missing: vec![false; values.len()],
            values,
            provenance: Provenance::Memory,
        })
    }

    pub fn auction_count(&self) -> usize {
        self.auction_ids.len()
    }

    pub fn bidder_count(&self) -> usize {
        self.bidder_ids.len()
    }

    pub fn auction_ids(&self) -> &[String] {
        &self.auction_ids
    }

    pub fn bidder_ids(&self) -> &[String] {
        &self.bidder_ids
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Value at `(auction, bidder)`; `None` when the cell is missing.
    pub fn cell(&self, auction: usize, bidder: usize) -> Option<Money> {
        let idx = auction * self.bidder_count() + bidder;
        if self.missing[idx] {
            None
        } else {
            Some(self.values[idx])
        }
    }

    /// Value at `(auction, bidder)` of a complete matrix.
    pub fn bid(&self, auction: usize, bidder: usize) -> Money {
        let idx = auction * self.bidder_count() + bidder;
        debug_assert!(!self.missing[idx], "bid() on a missing cell");
        self.values[idx]
    }

    pub fn is_complete(&self) -> bool {
        !self.missing.iter().any(|&m| m)
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().filter(|&&m| m).count()
    }

    /// Bids observed for one bidder (missing cells skipped).
    pub fn observed_column(&self, bidder: usize) -> Vec<Money> {
        (0..self.auction_count()).filter_map(|t| self.cell(t, bidder)).collect()
    }
}

/// Splits one master seed into well-separated per-stream seeds
/// (splitmix64 finalizer over the stream index).
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn dataset_rng(master: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(master, index as u64))
}

/// Generates the spec's `M` datasets. Each dataset derives an independent
/// sub-seed from the master seed by index, draws per-bidder parameters, and
/// fills bids row by row; the whole procedure is a pure function of the
/// spec.
pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Vec<BidMatrix>> {
    spec.validate()?;
    (0..spec.datasets)
        .into_par_iter()
        .map(|index| {
            let mut rng = dataset_rng(spec.seed, index);
            let n = spec.bidders;
            // Half-open (0, bound] draws keep medians and variances away
            // from the degenerate zero.
            let medians: Vec<f64> =
                (0..n).map(|_| spec.median_bound * (1.0 - rng.random::<f64>())).collect();
            let variances: Vec<f64> =
                (0..n).map(|_| spec.variance_bound * (1.0 - rng.random::<f64>())).collect();
            let distributions: Vec<LogNormal<f64>> = medians
                .iter()
                .zip(&variances)
                .map(|(&m, &v)| {
                    LogNormal::new(m.ln(), v.sqrt()).map_err(|e| Error::InvalidSyntheticField {
                        field: "sigma",
                        reason: e.to_string(),
                    })
                })
                .collect::<Result<_>>()?;
            let mut values = Vec::with_capacity(spec.auctions * n);
            for _ in 0..spec.auctions {
                for dist in &distributions {
                    values.push(dist.sample(&mut rng));
                }
            }
            let mut matrix = BidMatrix::from_values(spec.auctions, n, values)?;
            matrix.provenance = Provenance::Synthetic { seed: spec.seed, index };
            Ok(matrix)
        })
        .collect()
}

const LONG_HEADER: [&str; 3] = ["auction_id", "bidder_id", "bid"];

/// Sorts distinct id strings numerically when every id parses as an
/// unsigned integer, lexicographically otherwise.
fn sort_ids(mut ids: Vec<String>) -> Vec<String> {
    if ids.iter().all(|s| s.parse::<u64>().is_ok()) {
        ids.sort_by_key(|s| (s.parse::<u64>().unwrap(), s.clone()));
    } else {
        ids.sort();
    }
    ids
}

/// Loads the long-format schema `auction_id,bidder_id,bid` into a dense
/// matrix over the sorted distinct ids; absent cells are flagged missing.
pub fn load_csv(path: impl AsRef<Path>) -> Result<BidMatrix> {
    let file = std::fs::File::open(path.as_ref())?;
    let mut matrix = load_csv_reader(file)?;
    matrix.provenance = Provenance::File(path.as_ref().display().to_string());
    Ok(matrix)
}

pub fn load_csv_reader<R: Read>(reader: R) -> Result<BidMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    {
        let headers = rdr.headers()?;
        if headers.iter().collect::<Vec<_>>() != LONG_HEADER {
            return Err(Error::CsvFormat {
                line: 1,
                reason: format!("expected header {:?}, found {:?}", LONG_HEADER.join(","), headers),
            });
        }
    }
    let mut triples: Vec<(String, String, Money, u64)> = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 3 {
            return Err(Error::CsvFormat { line, reason: format!("expected 3 fields, found {}", record.len()) });
        }
        let bid: Money = record[2]
            .parse()
            .map_err(|e| Error::CsvFormat { line, reason: format!("bad bid `{}`: {e}", &record[2]) })?;
        if !(bid >= 0.0) || !bid.is_finite() {
            return Err(Error::CsvFormat { line, reason: format!("negative or non-finite bid {bid}") });
        }
        triples.push((record[0].to_string(), record[1].to_string(), bid, line));
    }
    let auction_ids = sort_ids(triples.iter().map(|t| t.0.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect());
    let bidder_ids = sort_ids(triples.iter().map(|t| t.1.clone()).collect::<std::collections::BTreeSet<_>>().into_iter().collect());
    let a_index: std::collections::HashMap<&str, usize> =
        auction_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let b_index: std::collections::HashMap<&str, usize> =
        bidder_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let n = bidder_ids.len();
    let mut values = vec![0.0; auction_ids.len() * n];
    let mut missing = vec![true; auction_ids.len() * n];
    for (auction, bidder, bid, line) in &triples {
        let idx = a_index[auction.as_str()] * n + b_index[bidder.as_str()];
        if !missing[idx] {
            return Err(Error::DuplicateCell { line: *line });
        }
        values[idx] = *bid;
        missing[idx] = false;
    }
    Ok(BidMatrix { auction_ids, bidder_ids, values, missing, provenance: Provenance::Memory })
}

/// Writes the long-format schema; missing cells are simply absent rows.
/// Values print in shortest round-trip form, so `load_csv` of the output
/// reproduces the matrix bit-exactly.
pub fn save_csv<W: Write>(mut writer: W, matrix: &BidMatrix) -> Result<()> {
    writeln!(writer, "{}", LONG_HEADER.join(","))?;
    for (t, auction) in matrix.auction_ids.iter().enumerate() {
        for (i, bidder) in matrix.bidder_ids.iter().enumerate() {
            if let Some(bid) = matrix.cell(t, i) {
                writeln!(writer, "{auction},{bidder},{bid}")?;
            }
        }
    }
    Ok(())
}

/// Writes the wide cache format: first row the bidder ids, then one row per
/// auction (`auction_id` first, empty fields for missing cells).
pub fn write_cache_csv<W: Write>(mut writer: W, matrix: &BidMatrix) -> Result<()> {
    writeln!(writer, "auction_id,{}", matrix.bidder_ids.join(","))?;
    for (t, auction) in matrix.auction_ids.iter().enumerate() {
        let row: Vec<String> = (0..matrix.bidder_count())
            .map(|i| matrix.cell(t, i).map(|b| b.to_string()).unwrap_or_default())
            .collect();
        writeln!(writer, "{auction},{}", row.join(","))?;
    }
    Ok(())
}

/// Reads the wide cache format back; rows keep the file's order.
pub fn read_cache_csv<R: Read>(reader: R) -> Result<BidMatrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let bidder_ids: Vec<String> = {
        let headers = rdr.headers()?;
        if headers.is_empty() || &headers[0] != "auction_id" {
            return Err(Error::CsvFormat { line: 1, reason: "first header field must be auction_id".into() });
        }
        headers.iter().skip(1).map(str::to_string).collect()
    };
    let n = bidder_ids.len();
    let mut auction_ids = Vec::new();
    let mut values = Vec::new();
    let mut missing = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != n + 1 {
            return Err(Error::CsvFormat { line, reason: format!("expected {} fields, found {}", n + 1, record.len()) });
        }
        auction_ids.push(record[0].to_string());
        for field in record.iter().skip(1) {
            if field.is_empty() {
                values.push(0.0);
                missing.push(true);
            } else {
                let bid: Money = field
                    .parse()
                    .map_err(|e| Error::CsvFormat { line, reason: format!("bad bid `{field}`: {e}") })?;
                values.push(bid);
                missing.push(false);
            }
        }
    }
    Ok(BidMatrix { auction_ids, bidder_ids, values, missing, provenance: Provenance::Memory })
}

/// Fills every missing cell with a uniform draw from that bidder's observed
/// multiset, scanning cells in row-major order under a seeded generator.
pub fn fill_missing(matrix: &BidMatrix, seed: u64) -> Result<BidMatrix> {
    let starved: Vec<String> = (0..matrix.bidder_count())
        .filter(|&i| matrix.observed_column(i).is_empty())
        .map(|i| matrix.bidder_ids[i].clone())
        .collect();
    if !starved.is_empty() {
        return Err(Error::NoObservations(starved));
    }
    if matrix.is_complete() {
        return Ok(matrix.clone());
    }
    let observations: Vec<Vec<Money>> = (0..matrix.bidder_count()).map(|i| matrix.observed_column(i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut filled = matrix.clone();
    let n = matrix.bidder_count();
    for t in 0..matrix.auction_count() {
        for i in 0..n {
            let idx = t * n + i;
            if filled.missing[idx] {
                let obs = &observations[i];
                filled.values[idx] = obs[rng.random_range(0..obs.len())];
                filled.missing[idx] = false;
            }
        }
    }
    Ok(filled)
}

/// Divides every bid by the reserve so downstream runs use a reserve of 1.
pub fn scale_to_reserve_units(matrix: &BidMatrix, reserve: Money) -> Result<BidMatrix> {
    if !(reserve > 0.0) || !reserve.is_finite() {
        return Err(Error::NonPositiveReserveScale(reserve));
    }
    let mut scaled = matrix.clone();
    for (idx, value) in scaled.values.iter_mut().enumerate() {
        if !scaled.missing[idx] {
            *value /= reserve;
        }
    }
    Ok(scaled)
}
