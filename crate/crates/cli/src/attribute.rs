//! The `attribute` subcommand: one bid vector in, a per-bidder table out.

use anyhow::Context;

use auction_attrib_core::{
    attribute, brute_force_shapley, build_first_price_matrix, build_modified_matrix, build_second_price_matrix,
    AttributionMatrix, AuctionGame, AuctionSpec, Mechanism, OrderedBids, ProbabilityProfile,
};

use crate::{AttributeArgs, CmdError, CmdResult};

pub(crate) fn parse_number_list(text: &str) -> Result<Vec<f64>, CmdError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CmdError::Usage(format!("could not parse `{}` as a number: {e}", s.trim())))
        })
        .collect()
}

fn load_profile(path: &std::path::Path, n: usize) -> Result<ProbabilityProfile, CmdError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading profile {}", path.display()))
        .map_err(CmdError::Runtime)?;
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = parse_number_list(line)?;
        if row.len() > n {
            return Err(CmdError::Usage(format!(
                "profile row has {} entries but there are only {n} bidders",
                row.len()
            )));
        }
        row.resize(n, 0.0);
        rows.push(row);
    }
    if rows.len() != n {
        return Err(CmdError::Usage(format!("profile has {} rows, expected one per bidder ({n})", rows.len())));
    }
    ProbabilityProfile::new(rows).map_err(|e| CmdError::Usage(e.to_string()))
}

pub(crate) fn run(args: &AttributeArgs) -> CmdResult {
    let raw = parse_number_list(&args.bids)?;
    if raw.is_empty() {
        return Err(CmdError::Usage("no bids given".into()));
    }
    let mechanism: Mechanism = args.mechanism.parse().map_err(|e| CmdError::Usage(format!("{e}")))?;
    if !(args.reserve >= 0.0) {
        return Err(CmdError::Usage(format!("reserve must be non-negative, got {}", args.reserve)));
    }
    let n = raw.len();
    if mechanism == Mechanism::SecondPrice && n < 2 {
        return Err(CmdError::Usage("second-price attribution needs at least two bidders".into()));
    }

    // Bids below the reserve cannot carry revenue impact; zero them first.
    let effective: Vec<f64> = raw.iter().map(|&b| if b < args.reserve { 0.0 } else { b }).collect();
    let ordered = OrderedBids::from_pairs(effective.iter().copied().enumerate())
        .map_err(|e| CmdError::Usage(e.to_string()))?;

    let matrix: AttributionMatrix = match &args.profile {
        Some(path) => {
            let profile = load_profile(path, n)?;
            build_modified_matrix(&profile, mechanism).map_err(|e| CmdError::Usage(e.to_string()))?
        }
        None => match mechanism {
            Mechanism::FirstPrice => build_first_price_matrix(n)?,
            Mechanism::SecondPrice => build_second_price_matrix(n)?,
        },
    };
    let by_bidder = attribute(&matrix, &ordered)?;

    let revenue = match mechanism {
        Mechanism::FirstPrice => ordered.values()[0],
        Mechanism::SecondPrice => ordered.values().get(1).copied().unwrap_or(0.0),
    };

    println!("mechanism: {mechanism}   reserve: {}   bidders: {n}", args.reserve);
    println!("{:>8} {:>14} {:>14} {:>16}", "bidder", "bid", "effective", "attribution");
    for (idx, &bid) in raw.iter().enumerate() {
        println!("{:>8} {:>14} {:>14} {:>16.10}", idx + 1, bid, effective[idx], by_bidder[&idx]);
    }
    let total: f64 = by_bidder.values().sum();
    println!("sum of attributions: {total:.10}");
    println!("auction revenue:     {revenue:.10}   (|difference| = {:.3e})", (total - revenue).abs());

    if args.oracle {
        if args.profile.is_some() {
            return Err(CmdError::Usage(
                "--oracle checks the symmetric attribution and cannot be combined with --profile".into(),
            ));
        }
        if n > 12 {
            return Err(CmdError::Usage(format!("--oracle enumerates 2^n subsets and is limited to n <= 12, got {n}")));
        }
        let spec = AuctionSpec::new(mechanism, 0.0)?;
        let game = AuctionGame::new(spec, &effective);
        let exact = brute_force_shapley(&game, n)?;
        println!("\noperator entries (row by row):");
        for row in 0..n {
            let cells: Vec<String> = (0..n).map(|col| format!("{:>12.8}", matrix.entry(row, col))).collect();
            println!("  [{}]", cells.join(" "));
        }
        println!("\n{:>8} {:>16} {:>16}", "bidder", "operator", "enumeration");
        let mut worst = 0.0f64;
        for (idx, &oracle_value) in exact.iter().enumerate() {
            let ours = by_bidder[&idx];
            worst = worst.max((ours - oracle_value).abs());
            println!("{:>8} {:>16.10} {:>16.10}", idx + 1, ours, oracle_value);
        }
        println!("max deviation: {worst:.3e}");
    }
    Ok(())
}
