//! The `equilibrium` subcommand: reads sweep CSVs, picks an operating point,
//! and evaluates the two-stage participation condition.

use std::collections::BTreeMap;

use auction_attrib_core::evaluation::{read_sweep_csv, SweepRow};
use auction_attrib_core::{equilibrium_condition, EquilibriumOutcome};

use crate::{CmdError, CmdResult, EquilibriumArgs};

/// Collects sweep rows from every parseable CSV in the directory, grouped by
/// mechanism; files with other headers (ranking, metadata) are skipped.
fn collect_rows(dir: &std::path::Path) -> Result<BTreeMap<String, Vec<SweepRow>>, CmdError> {
    let mut by_mechanism: BTreeMap<String, Vec<SweepRow>> = BTreeMap::new();
    let entries = std::fs::read_dir(dir).map_err(anyhow::Error::from)?;
    for entry in entries {
        let path = entry.map_err(anyhow::Error::from)?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("csv") {
            continue;
        }
        let Ok(file) = std::fs::File::open(&path) else { continue };
        let Ok(rows) = read_sweep_csv(file) else { continue };
        for row in rows {
            by_mechanism.entry(row.mechanism.clone()).or_default().push(row);
        }
    }
    if by_mechanism.is_empty() {
        return Err(CmdError::Usage(format!("no sweep CSVs found under {}", dir.display())));
    }
    Ok(by_mechanism)
}

fn nearest_point(rows: &[SweepRow], pct: f64) -> &SweepRow {
    rows.iter()
        .min_by(|a, b| (a.pct_called - pct).abs().total_cmp(&(b.pct_called - pct).abs()))
        .expect("mechanism groups are non-empty")
}

pub(crate) fn run(args: &EquilibriumArgs) -> CmdResult {
    if !(0.0..=1.0).contains(&args.delta) {
        return Err(CmdError::Usage(format!("--delta must lie in [0, 1], got {}", args.delta)));
    }
    let by_mechanism = collect_rows(&args.input)?;
    let mut revenue = BTreeMap::new();
    let mut welfare = BTreeMap::new();
    println!("operating point: grid point nearest {:.0}% called", args.pct * 100.0);
    println!("{:<10} {:>12} {:>14} {:>14}", "mechanism", "pct_called", "revenue", "welfare");
    for (mechanism, rows) in &by_mechanism {
        let point = nearest_point(rows, args.pct);
        println!(
            "{:<10} {:>12.4} {:>14.6} {:>14.6}",
            mechanism, point.pct_called, point.revenue_mean, point.welfare_mean
        );
        revenue.insert(mechanism.clone(), point.revenue_mean);
        welfare.insert(mechanism.clone(), point.welfare_mean);
    }
    let outside = match args.outside {
        Some(u) => u,
        None => match welfare.get(&args.baseline) {
            Some(&u) => u,
            None => {
                return Err(CmdError::Usage(format!(
                    "baseline mechanism `{}` not found in the sweep outputs; pass --u to set the outside option directly",
                    args.baseline
                )))
            }
        },
    };
    println!("outside option u = {outside:.6}   delta = {}", args.delta);
    match equilibrium_condition(&revenue, &welfare, outside, args.delta).map_err(anyhow::Error::from)? {
        EquilibriumOutcome::Participating { chosen, ratio, holds } => {
            println!("chosen mechanism e* = {chosen}");
            println!("max revenue / chosen revenue = {ratio:.6} (excess {:.6})", ratio - 1.0);
            println!("equilibrium condition holds: {holds}");
        }
        EquilibriumOutcome::NoParticipation => {
            println!("no participating equilibrium: every mechanism leaves bidders below their outside option");
        }
    }
    Ok(())
}
