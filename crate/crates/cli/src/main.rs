//! Command-line front end: simulate follower-network growth, replay logs
//! into link contexts, and run the statistics / fitting / clustering
//! pipeline, emitting CSV artifacts.

mod commands;
mod util;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "linkmix",
    version,
    about = "Simulate follower-network growth and infer link-creation strategies from event logs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct CommonArgs {
    /// Input file (event log, or context/fit tables where documented).
    #[arg(long)]
    input: Option<String>,
    /// Directory for output artifacts.
    #[arg(long, default_value = "out")]
    output_dir: String,
    /// Root RNG seed; recorded in every output header.
    #[arg(long)]
    seed: Option<u64>,
    /// key=value defaults, overridden by explicit flags.
    #[arg(long)]
    config: Option<String>,
    /// Worker threads for grid scans and per-user fits.
    #[arg(long)]
    threads: Option<usize>,
    /// Candidate-pool convention: paper (link counter) or users.
    #[arg(long)]
    pool: Option<String>,
    /// Keep already-followed users in candidate sets.
    #[arg(long)]
    include_followed: bool,
    /// Drop the first N links (e.g. warm-up seed edges) before analysis.
    #[arg(long)]
    skip_links: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct GenerateArgs {
    /// Total events to generate.
    #[arg(long)]
    events: Option<u64>,
    /// Strategy mixture "p_traffic,p_structure" (random takes the rest).
    #[arg(long)]
    mix: Option<String>,
    /// Shortcut candidate family: g, o, or guo.
    #[arg(long)]
    flavor: Option<String>,
    /// Users joined up front.
    #[arg(long)]
    seed_users: Option<u32>,
    /// Warm-up random follow edges.
    #[arg(long)]
    seed_edges: Option<u32>,
    /// Event rates "join,post,repost,follow".
    #[arg(long)]
    rates: Option<String>,
    /// Feed window for reposting.
    #[arg(long)]
    feed_window: Option<usize>,
    /// Weight shortcut choices by seen count.
    #[arg(long)]
    traffic_weighted: bool,
    /// Exponent on the seen count when weighting.
    #[arg(long)]
    traffic_exponent: Option<f64>,
    /// Rich-get-richer exponent on post authorship.
    #[arg(long)]
    post_concentration: Option<f64>,
    /// Rich-get-richer exponent on follow creators.
    #[arg(long)]
    follow_concentration: Option<f64>,
    /// Switch to --switch-mix once the creator's in-degree reaches K.
    #[arg(long)]
    switch_k: Option<u32>,
    /// Mixture after the switch, "p_traffic,p_structure".
    #[arg(long)]
    switch_mix: Option<String>,
    /// Planted per-user mixture clusters "w:p1,p2;w:p1,p2;...".
    #[arg(long)]
    user_clusters: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct FitArgs {
    /// Coarse grid step in (0, 0.1].
    #[arg(long)]
    grid_step: Option<f64>,
}

#[derive(Args, Debug, Clone)]
struct ClusterArgs {
    /// Minimum follows for a per-user fit.
    #[arg(long)]
    min_links: Option<usize>,
    /// Model orders tried by cross validation, "lo..hi".
    #[arg(long)]
    k_range: Option<String>,
    /// Cross-validation folds.
    #[arg(long)]
    folds: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic event log and its strategy trace.
    Generate {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        generate: GenerateArgs,
    },
    /// Replay a log and export per-follow link contexts.
    Contexts {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Growth curves, degree histograms, and the mechanism Venn table.
    Stats {
        #[command(flatten)]
        common: CommonArgs,
        /// Samples along the growth curves.
        #[arg(long)]
        samples: Option<usize>,
        /// Log-bin the degree histograms with this base.
        #[arg(long)]
        log_bin_base: Option<f64>,
    },
    /// Null-model z-scores, in-degree stratification, and the CLT check.
    Nulltest {
        #[command(flatten)]
        common: CommonArgs,
        /// Width of linear in-degree bins (default: exact-then-log).
        #[arg(long)]
        k_bin_width: Option<u32>,
        /// Minimum usable links per stratum.
        #[arg(long)]
        min_bin_count: Option<usize>,
    },
    /// Rank-percentile density of chosen shortcut targets.
    Rankbias {
        #[command(flatten)]
        common: CommonArgs,
        /// Percentile bin width.
        #[arg(long)]
        bin_width: Option<f64>,
    },
    /// Per-link traffic efficiency grouped by mechanism.
    Efficiency {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Fit baseline, single, and combined strategy models.
    Fit {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Shortcut family for the combined model: g, o, or guo.
        #[arg(long)]
        flavor: Option<String>,
    },
    /// Per-user combined-model fits.
    FitUsers {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        fit: FitArgs,
        /// Shortcut family for the combined model: g, o, or guo.
        #[arg(long)]
        flavor: Option<String>,
        /// Minimum follows for a per-user fit.
        #[arg(long)]
        min_links: Option<usize>,
    },
    /// Cluster per-user fits into strategy classes.
    Cluster {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
    /// Structural/behavioral profiles of the fitted classes.
    Profiles {
        #[command(flatten)]
        common: CommonArgs,
        /// ternary.csv with per-user class assignments.
        #[arg(long)]
        assignments: Option<String>,
    },
    /// Run every stage in order on one log (generated or provided).
    Pipeline {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        generate: GenerateArgs,
        #[command(flatten)]
        fit: FitArgs,
        #[command(flatten)]
        cluster: ClusterArgs,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            if matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            ) {
                print!("{err}");
                return ExitCode::SUCCESS;
            }
            let rendered = err.render().to_string();
            let first = rendered.lines().next().unwrap_or("bad arguments");
            eprintln!("error: usage: {}", first.trim_start_matches("error: "));
            eprintln!("{rendered}");
            return ExitCode::from(1);
        }
    };

    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {}: {}", err.code_name(), err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), util::CliError> {
    match cli.command {
        Command::Generate { common, generate } => {
            commands::generate(&common, &generate).map(|_| ())
        }
        Command::Contexts { common } => commands::contexts(&common).map(|_| ()),
        Command::Stats {
            common,
            samples,
            log_bin_base,
        } => commands::stats(&common, samples, log_bin_base).map(|_| ()),
        Command::Nulltest {
            common,
            k_bin_width,
            min_bin_count,
        } => commands::nulltest(&common, k_bin_width, min_bin_count).map(|_| ()),
        Command::Rankbias { common, bin_width } => {
            commands::rankbias(&common, bin_width).map(|_| ())
        }
        Command::Efficiency { common } => commands::efficiency(&common).map(|_| ()),
        Command::Fit {
            common,
            fit,
            flavor,
        } => commands::fit(&common, &fit, flavor.as_deref()).map(|_| ()),
        Command::FitUsers {
            common,
            fit,
            flavor,
            min_links,
        } => commands::fit_users(&common, &fit, flavor.as_deref(), min_links).map(|_| ()),
        Command::Cluster { common, cluster } => commands::cluster(&common, &cluster).map(|_| ()),
        Command::Profiles {
            common,
            assignments,
        } => commands::profiles(&common, assignments.as_deref()).map(|_| ()),
        Command::Pipeline {
            common,
            generate,
            fit,
            cluster,
        } => commands::pipeline(&common, &generate, &fit, &cluster),
    }
}
