//! The `sweep` subcommand: run every requested mechanism across the grid,
//! write per-mechanism CSVs, a ranking, reproduction metadata, and
//! (optionally) an SVG of the curves.

use std::path::PathBuf;

use anyhow::Context;

use auction_attrib_core::evaluation::{sweep, write_sweep_csv, SweepPoint, SweepResult};
use auction_attrib_core::{
    derive_seed, fill_missing, gen_synthetic, load_csv, scale_to_reserve_units, AuctionSpec, BidMatrix,
    BidVisibility, HeuristicKind, Mechanism, Selector, StreamOptions, SyntheticSpec, Threshold,
};

use crate::{attribute::parse_number_list, CmdError, CmdResult, SweepArgs};

pub(crate) const ALL_TOKENS: [&str; 9] = ["sha", "bar", "win", "spd", "rnk", "bid", "rvc", "rqt", "gra"];

fn parse_tokens(text: &str) -> Result<Vec<String>, CmdError> {
    let tokens: Vec<String> = if text.trim() == "all" {
        ALL_TOKENS.iter().map(|s| s.to_string()).collect()
    } else {
        text.split(',').map(|s| s.trim().to_string()).collect()
    };
    for token in &tokens {
        if !ALL_TOKENS.contains(&token.as_str()) {
            return Err(CmdError::Usage(format!(
                "unknown mechanism token `{token}` (expected one of {} or `all`)",
                ALL_TOKENS.join(", ")
            )));
        }
    }
    if tokens.is_empty() {
        return Err(CmdError::Usage("no mechanisms requested".into()));
    }
    Ok(tokens)
}

fn build_datasets(args: &SweepArgs) -> Result<(Vec<BidMatrix>, f64), CmdError> {
    match &args.input {
        Some(path) => {
            let raw = load_csv(path).map_err(anyhow::Error::from)?;
            let mut variants = Vec::new();
            if raw.is_complete() {
                if args.datasets > 1 {
                    eprintln!("note: input has no missing cells; resampling cannot vary, using one dataset");
                }
                variants.push(raw);
            } else {
                for index in 0..args.datasets {
                    variants.push(fill_missing(&raw, derive_seed(args.seed, 1000 + index as u64))?);
                }
            }
            // Observed bids move into reserve units; streams then run at
            // reserve 1.
            let scaled = variants
                .into_iter()
                .map(|m| scale_to_reserve_units(&m, args.reserve))
                .collect::<Result<Vec<_>, _>>()
                .map_err(anyhow::Error::from)?;
            Ok((scaled, 1.0))
        }
        None => {
            let spec = SyntheticSpec {
                bidders: args.n,
                auctions: args.auctions,
                median_bound: args.mu,
                variance_bound: args.sigma,
                reserve: args.reserve,
                datasets: args.datasets,
                seed: args.seed,
            };
            Ok((gen_synthetic(&spec).map_err(anyhow::Error::from)?, args.reserve))
        }
    }
}

fn points_for(token: &str, grid: &[f64], p_grid: Option<&[f64]>, n: usize, args: &SweepArgs) -> Vec<SweepPoint> {
    match token {
        "rqt" => {
            let dials: Vec<f64> = match p_grid {
                Some(ps) => ps.to_vec(),
                None => grid.iter().map(|f| 1.0 - f).collect(),
            };
            dials.into_iter().map(|p| SweepPoint { dial: p, selector: Selector::Rqt { drop_prob: p } }).collect()
        }
        "gra" => grid
            .iter()
            .map(|&f| {
                let size = args.greedy_size.unwrap_or(((f * n as f64).round() as usize).max(1));
                SweepPoint { dial: f, selector: Selector::Gra { max_size: size, epsilon: args.epsilon } }
            })
            .collect(),
        heuristic => {
            let kind: HeuristicKind = heuristic.parse().expect("token set is validated");
            grid.iter()
                .map(|&f| SweepPoint { dial: f, selector: Selector::Heuristic { kind, threshold: Threshold::TopFraction(f) } })
                .collect()
        }
    }
}

fn write_outputs(
    args: &SweepArgs,
    results: &[SweepResult],
    written: &mut Vec<PathBuf>,
) -> anyhow::Result<()> {
    std::fs::create_dir_all(&args.out)?;
    for result in results {
        let path = args.out.join(format!("{}.csv", result.mechanism));
        let mut file = std::fs::File::create(&path).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        write_sweep_csv(&mut file, result)?;
    }
    let mut ranking: Vec<(&str, f64)> = results.iter().map(|r| (r.mechanism.as_str(), r.score_integral)).collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(b.0)));
    let ranking_path = args.out.join("ranking.csv");
    let mut text = String::from("mechanism,score_integral\n");
    for (mechanism, integral) in &ranking {
        text.push_str(&format!("{mechanism},{integral}\n"));
    }
    std::fs::write(&ranking_path, text)?;
    written.push(ranking_path);

    let metadata = serde_json::json!({
        "command": "sweep",
        "version": env!("CARGO_PKG_VERSION"),
        "mechanisms": results.iter().map(|r| r.mechanism.clone()).collect::<Vec<_>>(),
        "auction_mechanism": args.mechanism,
        "data": match &args.input {
            Some(path) => serde_json::json!({"input": path.display().to_string(), "reserve_units": args.reserve}),
            None => serde_json::json!({
                "synthetic": {"n": args.n, "T": args.auctions, "mu": args.mu, "sigma": args.sigma,
                               "r": args.reserve, "M": args.datasets}
            }),
        },
        "seed": args.seed,
        "theta_grid": args.theta_grid,
        "p_grid": args.p_grid,
        "K": args.greedy_size,
        "epsilon": args.epsilon,
        "called_only": args.called_only,
    });
    let metadata_path = args.out.join("metadata.json");
    std::fs::write(&metadata_path, serde_json::to_string_pretty(&metadata)?)?;
    written.push(metadata_path);

    if args.svg {
        let svg_path = args.out.join("sweep.svg");
        std::fs::write(&svg_path, crate::svg::curves(results))?;
        written.push(svg_path);
    }

    println!("{:<10} {:>16}", "mechanism", "score_integral");
    for (mechanism, integral) in &ranking {
        println!("{mechanism:<10} {integral:>16.6}");
    }
    println!("wrote {} files to {}", written.len(), args.out.display());
    Ok(())
}

pub(crate) fn run(args: &SweepArgs) -> CmdResult {
    let tokens = parse_tokens(&args.mechanisms)?;
    let mechanism: Mechanism = args.mechanism.parse().map_err(|e| CmdError::Usage(format!("{e}")))?;
    let grid = parse_number_list(&args.theta_grid)?;
    if grid.is_empty() || grid.iter().any(|&f| !(f > 0.0 && f <= 1.0)) {
        return Err(CmdError::Usage("--theta-grid entries must lie in (0, 1]".into()));
    }
    let p_grid = match &args.p_grid {
        Some(text) => {
            let ps = parse_number_list(text)?;
            if ps.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(CmdError::Usage("--p-grid entries must lie in [0, 1]".into()));
            }
            Some(ps)
        }
        None => None,
    };
    if !(args.epsilon > 0.0 && args.epsilon <= 1.0) {
        return Err(CmdError::Usage(format!("--epsilon must lie in (0, 1], got {}", args.epsilon)));
    }

    let (datasets, reserve) = build_datasets(args)?;
    let n = datasets[0].bidder_count();
    let auction = AuctionSpec::new(mechanism, reserve).map_err(anyhow::Error::from)?;
    let opts = StreamOptions {
        visibility: if args.called_only { BidVisibility::CalledOnly } else { BidVisibility::Complete },
        ..StreamOptions::default()
    };

    let mut results = Vec::new();
    for (index, token) in tokens.iter().enumerate() {
        let points = points_for(token, &grid, p_grid.as_deref(), n, args);
        let result = sweep(token, &auction, &datasets, &points, derive_seed(args.seed, 0xA0 + index as u64), &opts)
            .map_err(anyhow::Error::from)?;
        results.push(result);
    }

    let mut written = Vec::new();
    if let Err(error) = write_outputs(args, &results, &mut written) {
        for path in written {
            let _ = std::fs::remove_file(path);
        }
        return Err(CmdError::Runtime(error));
    }
    Ok(())
}
