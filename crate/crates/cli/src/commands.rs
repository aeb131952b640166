//! Subcommand implementations. Every command resolves its parameters from
//! flags over config-file defaults, computes via the core library, and
//! writes headed CSV/TSV artifacts into the output directory.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use linkmix_core::classes::{
    class_profiles, cluster_users, group_by_creator, ClusterConfig, UserClass, UserFit,
    UserFitReport,
};
use linkmix_core::event::{parse_log, write_log, UserId};
use linkmix_core::generator::{
    generate as run_generator, write_trace, GeneratorConfig, RegimeSwitch, StrategyMix,
};
use linkmix_core::likelihood::{
    fit_baseline, fit_combined_with, fit_single_with, grid_points_1d, grid_points_triangle,
    model_comparison, FitResult, GridSpec, Model, ModelTerms, ShortcutComponent, Strategy,
};
use linkmix_core::nullstats::{
    lyapunov_diagnostic, rank_bias, z_by_indegree, z_score, KBinning, Mechanism, NullStatsError,
};
use linkmix_core::replay::{
    link_efficiency, log_bin_histogram, mechanism_overlap, replay, summary_stats, write_contexts,
    LinkContext, NetworkState, PoolMode, ReplayOptions,
};

use crate::util::{
    config_hash, load_contexts, parallel_fit_users, parallel_grid_eval, parse_flavor, parse_k_range,
    parse_mix, parse_pool, parse_rates, parse_user_clusters, pick, pick_with, read_input, CliError,
    ConfigFile, OutDir,
};
use crate::{ClusterArgs, CommonArgs, FitArgs, GenerateArgs};

// Resolved options shared by every subcommand.
struct Resolved {
    cfg: ConfigFile,
    seed: u64,
    threads: usize,
    options: ReplayOptions,
    output_dir: String,
    skip_links: usize,
}

fn resolve_common(common: &CommonArgs) -> Result<Resolved, CliError> {
    let cfg = ConfigFile::load(common.config.as_deref())?;
    let seed = pick(common.seed, &cfg, "seed", 0)?;
    let threads = pick(common.threads, &cfg, "threads", 1)?;
    if threads == 0 {
        return Err(CliError::Usage(String::from("threads must be at least 1")));
    }
    let pool_mode = pick_with(
        common.pool.as_deref(),
        &cfg,
        "pool",
        PoolMode::Paper,
        parse_pool,
    )?;
    let include_followed = if common.include_followed {
        true
    } else {
        pick(None, &cfg, "include_followed", false)?
    };
    let output_dir = if common.output_dir == "out" {
        cfg.get("output_dir").unwrap_or("out").to_string()
    } else {
        common.output_dir.clone()
    };
    let skip_links = pick(common.skip_links, &cfg, "skip_links", 0)?;
    Ok(Resolved {
        cfg,
        seed,
        threads,
        options: ReplayOptions {
            pool_mode,
            include_followed,
        },
        output_dir,
        skip_links,
    })
}

fn skip<'a>(r: &Resolved, contexts: &'a [LinkContext]) -> &'a [LinkContext] {
    &contexts[r.skip_links.min(contexts.len())..]
}

fn pool_name(mode: PoolMode) -> &'static str {
    match mode {
        PoolMode::Paper => "paper",
        PoolMode::Users => "users",
    }
}

fn out_dir(r: &Resolved, canonical: &str) -> Result<OutDir, CliError> {
    let canonical = format!(
        "{canonical};pool={};include_followed={};threads={};skip={}",
        pool_name(r.options.pool_mode),
        r.options.include_followed,
        r.threads,
        r.skip_links
    );
    OutDir::new(&r.output_dir, r.seed, config_hash(&canonical))
}

fn fmt_f(x: f64) -> String {
    if x == f64::NEG_INFINITY {
        String::from("-inf")
    } else {
        format!("{x:.6}")
    }
}

// ---------------------------------------------------------------------------
// generate

fn resolve_generator(
    r: &Resolved,
    args: &GenerateArgs,
) -> Result<GeneratorConfig, CliError> {
    let cfg = &r.cfg;
    let mix = pick_with(args.mix.as_deref(), cfg, "mix", StrategyMix::new(0.0, 0.0).unwrap(), parse_mix)?;
    let flavor = pick_with(args.flavor.as_deref(), cfg, "flavor", ShortcutComponent::Either, parse_flavor)?;
    let rates = pick_with(
        args.rates.as_deref(),
        cfg,
        "rates",
        linkmix_core::generator::EventRates::default(),
        parse_rates,
    )?;
    let switch_k = pick(args.switch_k, cfg, "switch_k", u32::MAX)?;
    let switch_mix = pick_with(args.switch_mix.as_deref(), cfg, "switch_mix", None, |raw| {
        parse_mix(raw).map(Some)
    })?;
    let regime_switch = match (switch_k, switch_mix) {
        (u32::MAX, None) => None,
        (k, Some(mix)) if k != u32::MAX => Some(RegimeSwitch {
            at_in_degree: k,
            mix,
        }),
        _ => {
            return Err(CliError::Usage(String::from(
                "--switch-k and --switch-mix must be given together",
            )))
        }
    };
    let user_mix_clusters = pick_with(
        args.user_clusters.as_deref(),
        cfg,
        "user_clusters",
        Vec::new(),
        parse_user_clusters,
    )?;
    let traffic_weighting = if args.traffic_weighted {
        true
    } else {
        pick(None, cfg, "traffic_weighted", false)?
    };
    let flavor = match flavor {
        ShortcutComponent::Grandparent => linkmix_core::generator::ShortcutFlavor::Grandparent,
        ShortcutComponent::Origin => linkmix_core::generator::ShortcutFlavor::Origin,
        ShortcutComponent::Either => linkmix_core::generator::ShortcutFlavor::Either,
    };
    Ok(GeneratorConfig {
        seed: r.seed,
        n_events: pick(args.events, cfg, "events", 10_000)?,
        seed_users: pick(args.seed_users, cfg, "seed_users", 0)?,
        seed_edges: pick(args.seed_edges, cfg, "seed_edges", 0)?,
        rates,
        mix,
        shortcut_flavor: flavor,
        traffic_weighting,
        traffic_exponent: pick(args.traffic_exponent, cfg, "traffic_exponent", 1.0)?,
        repost_feed_window: pick(args.feed_window, cfg, "feed_window", 20)?,
        regime_switch,
        user_mix_clusters,
        post_concentration: pick(args.post_concentration, cfg, "post_concentration", 0.0)?,
        follow_concentration: pick(args.follow_concentration, cfg, "follow_concentration", 0.0)?,
        trace_enabled: true,
    })
}

fn generator_canonical(config: &GeneratorConfig) -> String {
    format!(
        "cmd=generate;events={};seed_users={};seed_edges={};rates={},{},{},{};mix={},{};flavor={};weighted={};exp={};window={};switch={:?};clusters={};conc={}",
        config.n_events,
        config.seed_users,
        config.seed_edges,
        config.rates.join,
        config.rates.post,
        config.rates.repost,
        config.rates.follow,
        config.mix.traffic,
        config.mix.structure,
        config.shortcut_flavor.as_str(),
        config.traffic_weighting,
        config.traffic_exponent,
        config.repost_feed_window,
        config.regime_switch.map(|s| (s.at_in_degree, s.mix.traffic, s.mix.structure)),
        config.user_mix_clusters.len(),
        config.post_concentration,
    ) + &format!(";fconc={}", config.follow_concentration)
}

pub fn generate(common: &CommonArgs, args: &GenerateArgs) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let config = resolve_generator(&r, args)?;
    let out = out_dir(&r, &generator_canonical(&config))?;
    let result = run_generator(&config)?;
    let log_text = write_log(&result.events)?;
    let mut written = Vec::new();
    written.push(out.write("events.log", &log_text)?);
    let trace = result.trace().expect("tracing is always on in the CLI");
    written.push(out.write("trace.tsv", &write_trace(trace))?);
    Ok(written)
}

// ---------------------------------------------------------------------------
// contexts

pub fn contexts(common: &CommonArgs) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let (_, text) = read_input(common.input.as_deref())?;
    let events = parse_log(&text)?;
    let (_, ctxs) = replay(&events, r.options)?;
    let out = out_dir(&r, "cmd=contexts")?;
    Ok(vec![out.write("contexts.tsv", &write_contexts(&ctxs))?])
}

// ---------------------------------------------------------------------------
// stats

pub fn stats(
    common: &CommonArgs,
    samples: Option<usize>,
    log_bin_base: Option<f64>,
) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let samples = pick(samples, &r.cfg, "samples", 100)?;
    let (_, text) = read_input(common.input.as_deref())?;
    let events = parse_log(&text)?;
    let (state, ctxs) = replay(&events, r.options)?;
    let stats = summary_stats(&state, &events, samples);
    let out = out_dir(&r, &format!("cmd=stats;samples={samples}"))?;
    let mut written = Vec::new();

    let mut growth = String::from("time,users,links,posts,reposts\n");
    for p in &stats.growth {
        let _ = writeln!(
            growth,
            "{},{},{},{},{}",
            fmt_f(p.time),
            p.users,
            p.links,
            p.posts,
            p.reposts
        );
    }
    written.push(out.write("growth.csv", &growth)?);

    let mut hist = String::from("direction,degree_lo,degree_hi,users\n");
    for (direction, exact) in [("in", &stats.in_degree_hist), ("out", &stats.out_degree_hist)] {
        match log_bin_base {
            Some(base) => {
                if base.is_nan() || base <= 1.0 {
                    return Err(CliError::Usage(String::from("log-bin base must be > 1")));
                }
                for (lo, hi, n) in log_bin_histogram(exact, base) {
                    let _ = writeln!(hist, "{direction},{lo},{hi},{n}");
                }
            }
            None => {
                for &(d, n) in exact.iter() {
                    let _ = writeln!(hist, "{direction},{d},{d},{n}");
                }
            }
        }
    }
    written.push(out.write("degree_hist.csv", &hist)?);

    let mut venn = String::from("subset,fraction\n");
    if let Some(report) = mechanism_overlap(&ctxs) {
        for (name, value) in [
            ("none", report.none),
            ("g_only", report.g_only),
            ("o_only", report.o_only),
            ("tri_only", report.tri_only),
            ("g_o", report.g_o),
            ("g_tri", report.g_tri),
            ("o_tri", report.o_tri),
            ("g_o_tri", report.g_o_tri),
            ("marginal_g", report.marginal_g()),
            ("marginal_o", report.marginal_o()),
            ("marginal_tri", report.marginal_tri()),
        ] {
            let _ = writeln!(venn, "{name},{}", fmt_f(value));
        }
    }
    written.push(out.write("overlap.csv", &venn)?);
    Ok(written)
}

// ---------------------------------------------------------------------------
// nulltest

pub fn nulltest(
    common: &CommonArgs,
    k_bin_width: Option<u32>,
    min_bin_count: Option<usize>,
) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let min_count = pick(min_bin_count, &r.cfg, "min_bin_count", 30)?;
    let k_bin_width = pick(k_bin_width, &r.cfg, "k_bin_width", 0)?;
    let binning = if k_bin_width > 0 {
        KBinning::Linear { width: k_bin_width }
    } else {
        KBinning::default()
    };
    let contexts = load_contexts(common.input.as_deref(), r.options)?;
    let contexts = skip(&r, &contexts);
    let out = out_dir(
        &r,
        &format!("cmd=nulltest;k_bin_width={k_bin_width};min={min_count}"),
    )?;
    let mut written = Vec::new();

    let mut zr = String::from("mechanism,s,e,sigma,z,p_value,n_used,n_excluded\n");
    for mech in Mechanism::ALL {
        let report = z_score(contexts, mech)?;
        let _ = writeln!(zr, "{}", linkmix_core::nullstats::zreport_csv_row(&report));
    }
    written.push(out.write("zreport.csv", &zr)?);

    let mut by_k = String::from("mechanism,k_bin_lo,k_bin_hi,z,n,s,e,sigma\n");
    for mech in Mechanism::ALL {
        let strat = z_by_indegree(contexts, mech, binning, min_count)?;
        for bin in &strat.bins {
            let _ = writeln!(
                by_k,
                "{},{},{},{},{},{},{},{}",
                mech.as_str(),
                bin.k_lo,
                bin.k_hi,
                bin.report
                    .z
                    .map(fmt_f)
                    .unwrap_or_else(|| String::from("undefined")),
                bin.report.n_links_used,
                bin.report.s,
                fmt_f(bin.report.e),
                fmt_f(bin.report.sigma),
            );
        }
    }
    written.push(out.write("z_by_k.csv", &by_k)?);

    let mut ly = String::from("mechanism,n,ratio\n");
    for mech in Mechanism::ALL {
        match lyapunov_diagnostic(contexts, mech) {
            Ok(curve) => {
                let stride = (curve.points.len() / 200).max(1);
                for (i, p) in curve.points.iter().enumerate() {
                    if i % stride == 0 || i + 1 == curve.points.len() {
                        let _ = writeln!(ly, "{},{},{:.9}", mech.as_str(), p.n, p.ratio);
                    }
                }
            }
            Err(NullStatsError::NoUsableContexts)
            | Err(NullStatsError::NotEnoughContexts { .. }) => {}
            Err(e) => return Err(e.into()),
        }
    }
    written.push(out.write("lyapunov.csv", &ly)?);
    Ok(written)
}

// ---------------------------------------------------------------------------
// rankbias

pub fn rankbias(common: &CommonArgs, bin_width: Option<f64>) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let width = pick(bin_width, &r.cfg, "bin_width", 5.0)?;
    let contexts = load_contexts(common.input.as_deref(), r.options)?;
    let contexts = skip(&r, &contexts);
    let out = out_dir(&r, &format!("cmd=rankbias;width={width}"))?;
    let mut body = String::from("mechanism,pct_bin_lo,pct_bin_hi,mass,density,n_links\n");
    let mut any = false;
    for mech in [Mechanism::Grandparent, Mechanism::Origin] {
        match rank_bias(contexts, mech, width) {
            Ok(rb) => {
                any = true;
                for bin in &rb.bins {
                    let _ = writeln!(
                        body,
                        "{},{},{},{},{},{}",
                        mech.as_str(),
                        fmt_f(bin.pct_lo),
                        fmt_f(bin.pct_hi),
                        fmt_f(bin.mass),
                        fmt_f(bin.density),
                        rb.n_links
                    );
                }
            }
            Err(NullStatsError::NoUsableContexts) => {}
            Err(e) => return Err(e.into()),
        }
    }
    if !any {
        return Err(CliError::Data(String::from(
            "no follows picked a shortcut candidate out of two or more",
        )));
    }
    Ok(vec![out.write("rank_bias.csv", &body)?])
}

// ---------------------------------------------------------------------------
// efficiency

pub fn efficiency(common: &CommonArgs) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let (_, text) = read_input(common.input.as_deref())?;
    let events = parse_log(&text)?;
    let (state, ctxs) = replay(&events, r.options)?;
    let horizon = state.last_time();
    let report = link_efficiency(&state, &ctxs, horizon)?;
    let out = out_dir(&r, "cmd=efficiency")?;
    let mut body = String::from("group,metric,n,q1,median,mean,q3,p99\n");
    for (group, seen, repost) in &report.groups {
        for (metric, summary) in [("seen", seen), ("repost", repost)] {
            if let Some(s) = summary {
                let _ = writeln!(
                    body,
                    "{},{metric},{},{},{},{},{},{}",
                    group.as_str(),
                    s.n,
                    fmt_f(s.q1),
                    fmt_f(s.median),
                    fmt_f(s.mean),
                    fmt_f(s.q3),
                    fmt_f(s.p99)
                );
            }
        }
    }
    Ok(vec![out.write("efficiency.csv", &body)?])
}

// ---------------------------------------------------------------------------
// fit

struct FitBundle {
    table: Vec<FitResult>,
    curve: String,
    surface: String,
}

fn run_fits(
    contexts: &[LinkContext],
    flavor: ShortcutComponent,
    grid: GridSpec,
    threads: usize,
) -> Result<FitBundle, CliError> {
    let mut fits = vec![fit_baseline(contexts)?];
    let mut curve = String::from("component,p,loglik\n");
    for component in [
        Strategy::Triadic,
        Strategy::Grandparent,
        Strategy::Origin,
        Strategy::Shortcut,
    ] {
        let terms = ModelTerms::single(contexts, component)?;
        fits.push(fit_single_with(&terms, component, grid, |t, ps| {
            parallel_grid_eval(t, ps, threads)
        })?);
        let points: Vec<(f64, f64)> = grid_points_1d(grid.step).into_iter().map(|p| (p, 0.0)).collect();
        let values = parallel_grid_eval(&terms, &points, threads);
        for (&(p, _), &ll) in points.iter().zip(&values) {
            let _ = writeln!(curve, "{},{},{}", component.as_str(), fmt_f(p), fmt_f(ll));
        }
    }
    let mut surface = String::from("p1,p2,loglik\n");
    for shortcut in [
        ShortcutComponent::Grandparent,
        ShortcutComponent::Origin,
        ShortcutComponent::Either,
    ] {
        let terms = ModelTerms::combined(contexts, shortcut)?;
        fits.push(fit_combined_with(&terms, shortcut, grid, |t, ps| {
            parallel_grid_eval(t, ps, threads)
        })?);
        if shortcut == flavor {
            let points = grid_points_triangle(grid.step);
            let values = parallel_grid_eval(&terms, &points, threads);
            for (&(p1, p2), &ll) in points.iter().zip(&values) {
                let _ = writeln!(surface, "{},{},{}", fmt_f(p1), fmt_f(p2), fmt_f(ll));
            }
        }
    }
    Ok(FitBundle {
        table: model_comparison(&fits)?,
        curve,
        surface,
    })
}

fn fit_table_csv(table: &[FitResult]) -> String {
    let mut body = String::from("strategy,model,p1,p2,loglik,n_links,boundary\n");
    for fit in table {
        let (strategy, p1, p2) = match fit.model {
            Model::Baseline => (String::from("baseline"), String::new(), String::new()),
            Model::Single(_) => (String::from("single"), fmt_f(fit.p1), String::new()),
            Model::Combined(_) => (String::from("combined"), fmt_f(fit.p1), fmt_f(fit.p2)),
        };
        let _ = writeln!(
            body,
            "{strategy},{},{p1},{p2},{},{},{}",
            fit.model.label(),
            fmt_f(fit.loglik),
            fit.n_links_used,
            fit.boundary
        );
    }
    body
}

pub fn fit(
    common: &CommonArgs,
    args: &FitArgs,
    flavor: Option<&str>,
) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let grid = GridSpec {
        step: pick(args.grid_step, &r.cfg, "grid_step", 0.01)?,
        ..GridSpec::default()
    };
    let flavor = pick_with(flavor, &r.cfg, "flavor", ShortcutComponent::Either, parse_flavor)?;
    let contexts = load_contexts(common.input.as_deref(), r.options)?;
    let bundle = run_fits(skip(&r, &contexts), flavor, grid, r.threads)?;
    let out = out_dir(
        &r,
        &format!("cmd=fit;step={};flavor={}", grid.step, flavor.as_str()),
    )?;
    Ok(vec![
        out.write("fit.csv", &fit_table_csv(&bundle.table))?,
        out.write("loglik_curve.csv", &bundle.curve)?,
        out.write("loglik_surface.csv", &bundle.surface)?,
    ])
}

// ---------------------------------------------------------------------------
// fit-users

fn user_fits_csv(report: &UserFitReport) -> String {
    let mut body = format!(
        "# skipped_below_min={} skipped_unusable={}\nuser,n_links,p_traffic,p_structure,p_random,loglik\n",
        report.skipped_below_min, report.skipped_unusable
    );
    for fit in &report.fits {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{}",
            fit.user,
            fit.n_links,
            fmt_f(fit.mix.traffic),
            fmt_f(fit.mix.structure),
            fmt_f(fit.mix.random),
            fmt_f(fit.loglik)
        );
    }
    body
}

fn compute_user_fits(
    contexts: &[LinkContext],
    min_links: usize,
    flavor: ShortcutComponent,
    grid: GridSpec,
    threads: usize,
) -> Result<UserFitReport, CliError> {
    let groups = group_by_creator(contexts);
    parallel_fit_users(&groups, min_links, flavor, grid, threads)
}

pub fn fit_users(
    common: &CommonArgs,
    args: &FitArgs,
    flavor: Option<&str>,
    min_links: Option<usize>,
) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let grid = GridSpec {
        step: pick(args.grid_step, &r.cfg, "grid_step", 0.01)?,
        ..GridSpec::default()
    };
    let flavor = pick_with(flavor, &r.cfg, "flavor", ShortcutComponent::Either, parse_flavor)?;
    let min_links = pick(min_links, &r.cfg, "min_links", 20)?;
    let contexts = load_contexts(common.input.as_deref(), r.options)?;
    let report = compute_user_fits(skip(&r, &contexts), min_links, flavor, grid, r.threads)?;
    let out = out_dir(
        &r,
        &format!(
            "cmd=fit-users;step={};flavor={};min_links={min_links}",
            grid.step,
            flavor.as_str()
        ),
    )?;
    Ok(vec![out.write("user_fits.csv", &user_fits_csv(&report))?])
}

// ---------------------------------------------------------------------------
// cluster

fn parse_user_fits(text: &str) -> Result<Vec<UserFit>, CliError> {
    let mut fits = Vec::new();
    for (lineno0, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields[0] == "user" {
            continue;
        }
        if fields.len() != 6 {
            return Err(CliError::Data(format!(
                "user fits line {}: expected 6 fields",
                lineno0 + 1
            )));
        }
        let parse_f = |i: usize| -> Result<f64, CliError> {
            fields[i].parse().map_err(|_| {
                CliError::Data(format!("user fits line {}: bad number", lineno0 + 1))
            })
        };
        fits.push(UserFit {
            user: UserId(fields[0].parse().map_err(|_| {
                CliError::Data(format!("user fits line {}: bad user id", lineno0 + 1))
            })?),
            n_links: fields[1].parse().map_err(|_| {
                CliError::Data(format!("user fits line {}: bad link count", lineno0 + 1))
            })?,
            mix: StrategyMix {
                traffic: parse_f(2)?,
                structure: parse_f(3)?,
                random: parse_f(4)?,
            },
            loglik: parse_f(5)?,
        });
    }
    Ok(fits)
}

fn classes_csv(report: &linkmix_core::classes::ClusterReport) -> String {
    let mut body = format!(
        "# chosen_k={} cv={}\nclass,weight,mean_p_traffic,mean_p_structure,mean_p_random,n_members\n",
        report.chosen_k,
        report
            .cv_scores
            .iter()
            .map(|(k, s)| format!("{k}:{s:.4}"))
            .collect::<Vec<_>>()
            .join(" ")
    );
    for class in &report.classes {
        let _ = writeln!(
            body,
            "{},{},{},{},{},{}",
            class.label,
            fmt_f(class.weight),
            fmt_f(class.mean_mix.traffic),
            fmt_f(class.mean_mix.structure),
            fmt_f(class.mean_mix.random),
            class.members.len()
        );
    }
    body
}

fn ternary_csv(
    fits: &[UserFit],
    report: &linkmix_core::classes::ClusterReport,
) -> String {
    let label_of: BTreeMap<UserId, &str> = report
        .assignments
        .iter()
        .map(|&(u, class)| (u, report.classes[class].label.as_str()))
        .collect();
    let mut body = String::from("user,p_traffic,p_structure,p_random,class\n");
    for fit in fits {
        let _ = writeln!(
            body,
            "{},{},{},{},{}",
            fit.user,
            fmt_f(fit.mix.traffic),
            fmt_f(fit.mix.structure),
            fmt_f(fit.mix.random),
            label_of.get(&fit.user).copied().unwrap_or("unassigned")
        );
    }
    body
}

fn resolve_cluster_config(
    r: &Resolved,
    args: &ClusterArgs,
) -> Result<ClusterConfig, CliError> {
    let (k_min, k_max) = pick_with(
        args.k_range.as_deref(),
        &r.cfg,
        "k_range",
        (1, 8),
        parse_k_range,
    )?;
    Ok(ClusterConfig {
        seed: r.seed,
        k_min,
        k_max,
        folds: pick(args.folds, &r.cfg, "folds", 10)?,
        ..ClusterConfig::default()
    })
}

pub fn cluster(common: &CommonArgs, args: &ClusterArgs) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let config = resolve_cluster_config(&r, args)?;
    let (_, text) = read_input(common.input.as_deref())?;
    let fits = parse_user_fits(&text)?;
    let report = cluster_users(&fits, &config)?;
    let out = out_dir(
        &r,
        &format!(
            "cmd=cluster;k={}..{};folds={}",
            config.k_min, config.k_max, config.folds
        ),
    )?;
    Ok(vec![
        out.write("classes.csv", &classes_csv(&report))?,
        out.write("ternary.csv", &ternary_csv(&fits, &report))?,
    ])
}

// ---------------------------------------------------------------------------
// profiles

fn parse_ternary(text: &str) -> Result<Vec<(UserId, StrategyMix, String)>, CliError> {
    let mut rows = Vec::new();
    for (lineno0, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with("user,") {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CliError::Data(format!(
                "ternary line {}: expected 5 fields",
                lineno0 + 1
            )));
        }
        let parse_f = |i: usize| -> Result<f64, CliError> {
            fields[i]
                .parse()
                .map_err(|_| CliError::Data(format!("ternary line {}: bad number", lineno0 + 1)))
        };
        rows.push((
            UserId(fields[0].parse().map_err(|_| {
                CliError::Data(format!("ternary line {}: bad user id", lineno0 + 1))
            })?),
            StrategyMix {
                traffic: parse_f(1)?,
                structure: parse_f(2)?,
                random: parse_f(3)?,
            },
            fields[4].to_string(),
        ));
    }
    Ok(rows)
}

fn classes_from_ternary(rows: &[(UserId, StrategyMix, String)]) -> Vec<UserClass> {
    let mut by_label: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, (_, _, label)) in rows.iter().enumerate() {
        by_label.entry(label.as_str()).or_default().push(i);
    }
    by_label
        .into_iter()
        .map(|(label, members)| {
            let n = members.len() as f64;
            let mut mean = [0.0f64; 3];
            for &i in &members {
                mean[0] += rows[i].1.traffic;
                mean[1] += rows[i].1.structure;
                mean[2] += rows[i].1.random;
            }
            let mut member_ids: Vec<UserId> = members.iter().map(|&i| rows[i].0).collect();
            member_ids.sort_unstable();
            UserClass {
                label: label.to_string(),
                weight: n / rows.len() as f64,
                mean_mix: StrategyMix {
                    traffic: mean[0] / n,
                    structure: mean[1] / n,
                    random: mean[2] / n,
                },
                covariance: [[0.0; 2]; 2],
                members: member_ids,
            }
        })
        .collect()
}

fn profiles_csv(classes: &[UserClass], state: &NetworkState) -> String {
    let mut body = String::from("class,feature,n,q1,median,mean,q3,p99,low_confidence\n");
    for profile in class_profiles(classes, state) {
        for (feature, s) in &profile.features {
            let _ = writeln!(
                body,
                "{},{},{},{},{},{},{},{},{}",
                profile.label,
                feature.as_str(),
                s.n,
                fmt_f(s.q1),
                fmt_f(s.median),
                fmt_f(s.mean),
                fmt_f(s.q3),
                fmt_f(s.p99),
                profile.low_confidence
            );
        }
    }
    body
}

pub fn profiles(
    common: &CommonArgs,
    assignments: Option<&str>,
) -> Result<Vec<PathBuf>, CliError> {
    let r = resolve_common(common)?;
    let Some(assignments) = assignments else {
        return Err(CliError::Usage(String::from(
            "--assignments (ternary.csv) is required",
        )));
    };
    let (_, log_text) = read_input(common.input.as_deref())?;
    let events = parse_log(&log_text)?;
    let (state, _) = replay(&events, r.options)?;
    let ternary_text = std::fs::read_to_string(assignments)
        .map_err(|e| CliError::Data(format!("assignments {assignments}: {e}")))?;
    let rows = parse_ternary(&ternary_text)?;
    if rows.is_empty() {
        return Err(CliError::Data(String::from("assignments file has no rows")));
    }
    let classes = classes_from_ternary(&rows);
    let out = out_dir(&r, "cmd=profiles")?;
    Ok(vec![out.write("profiles.csv", &profiles_csv(&classes, &state))?])
}

// ---------------------------------------------------------------------------
// pipeline

pub fn pipeline(
    common: &CommonArgs,
    gen_args: &GenerateArgs,
    fit_args: &FitArgs,
    cluster_args: &ClusterArgs,
) -> Result<(), CliError> {
    let r = resolve_common(common)?;
    let grid = GridSpec {
        step: pick(fit_args.grid_step, &r.cfg, "grid_step", 0.01)?,
        ..GridSpec::default()
    };
    let flavor = pick_with(
        gen_args.flavor.as_deref(),
        &r.cfg,
        "flavor",
        ShortcutComponent::Either,
        parse_flavor,
    )?;
    let min_links = pick(None, &r.cfg, "min_links", 20)?;
    let cluster_config = resolve_cluster_config(&r, cluster_args)?;

    let mut notes: Vec<String> = Vec::new();
    let mut artifacts: Vec<PathBuf> = Vec::new();

    // Stage 0: obtain the log.
    let (events, out) = match common.input.as_deref() {
        Some(_) => {
            let (_, text) = read_input(common.input.as_deref())?;
            let out = out_dir(&r, "cmd=pipeline;input=log")?;
            (parse_log(&text)?, out)
        }
        None => {
            let config = resolve_generator(&r, gen_args)?;
            let out = out_dir(&r, &format!("cmd=pipeline;{}", generator_canonical(&config)))?;
            let result = run_generator(&config)?;
            artifacts.push(out.write("events.log", &write_log(&result.events)?)?);
            let trace = result.trace().expect("tracing is always on in the CLI");
            artifacts.push(out.write("trace.tsv", &write_trace(trace))?);
            (result.events, out)
        }
    };

    // Stage 1: replay.
    let (state, contexts) = replay(&events, r.options)?;
    artifacts.push(out.write("contexts.tsv", &write_contexts(&contexts))?);

    // Stage 2: summary statistics.
    let stats = summary_stats(&state, &events, 100);
    let mut growth = String::from("time,users,links,posts,reposts\n");
    for p in &stats.growth {
        let _ = writeln!(
            growth,
            "{},{},{},{},{}",
            fmt_f(p.time),
            p.users,
            p.links,
            p.posts,
            p.reposts
        );
    }
    artifacts.push(out.write("growth.csv", &growth)?);
    let mut hist = String::from("direction,degree_lo,degree_hi,users\n");
    for (direction, exact) in [("in", &stats.in_degree_hist), ("out", &stats.out_degree_hist)] {
        for &(d, n) in exact.iter() {
            let _ = writeln!(hist, "{direction},{d},{d},{n}");
        }
    }
    artifacts.push(out.write("degree_hist.csv", &hist)?);
    let mut venn = String::from("subset,fraction\n");
    let overlap = mechanism_overlap(&contexts);
    if let Some(report) = &overlap {
        for (name, value) in [
            ("none", report.none),
            ("g_only", report.g_only),
            ("o_only", report.o_only),
            ("tri_only", report.tri_only),
            ("g_o", report.g_o),
            ("g_tri", report.g_tri),
            ("o_tri", report.o_tri),
            ("g_o_tri", report.g_o_tri),
            ("marginal_g", report.marginal_g()),
            ("marginal_o", report.marginal_o()),
            ("marginal_tri", report.marginal_tri()),
        ] {
            let _ = writeln!(venn, "{name},{}", fmt_f(value));
        }
    }
    artifacts.push(out.write("overlap.csv", &venn)?);

    // Stage 3: null statistics (over the analysis window).
    let window = skip(&r, &contexts);
    let mut zreport_lines: Vec<String> = Vec::new();
    let mut zr = String::from("mechanism,s,e,sigma,z,p_value,n_used,n_excluded\n");
    for mech in Mechanism::ALL {
        match z_score(window, mech) {
            Ok(report) => {
                let row = linkmix_core::nullstats::zreport_csv_row(&report);
                zreport_lines.push(row.clone());
                let _ = writeln!(zr, "{row}");
            }
            Err(e) => notes.push(format!("z-score {} unavailable: {e}", mech.as_str())),
        }
    }
    artifacts.push(out.write("zreport.csv", &zr)?);

    let mut by_k = String::from("mechanism,k_bin_lo,k_bin_hi,z,n,s,e,sigma\n");
    for mech in Mechanism::ALL {
        if let Ok(strat) = z_by_indegree(window, mech, KBinning::default(), 30) {
            for bin in &strat.bins {
                let _ = writeln!(
                    by_k,
                    "{},{},{},{},{},{},{},{}",
                    mech.as_str(),
                    bin.k_lo,
                    bin.k_hi,
                    bin.report
                        .z
                        .map(fmt_f)
                        .unwrap_or_else(|| String::from("undefined")),
                    bin.report.n_links_used,
                    bin.report.s,
                    fmt_f(bin.report.e),
                    fmt_f(bin.report.sigma),
                );
            }
        }
    }
    artifacts.push(out.write("z_by_k.csv", &by_k)?);

    let mut ly = String::from("mechanism,n,ratio\n");
    for mech in Mechanism::ALL {
        if let Ok(curve) = lyapunov_diagnostic(window, mech) {
            let stride = (curve.points.len() / 200).max(1);
            for (i, p) in curve.points.iter().enumerate() {
                if i % stride == 0 || i + 1 == curve.points.len() {
                    let _ = writeln!(ly, "{},{},{:.9}", mech.as_str(), p.n, p.ratio);
                }
            }
        }
    }
    artifacts.push(out.write("lyapunov.csv", &ly)?);

    // Stage 4: rank bias.
    let mut rb_body = String::from("mechanism,pct_bin_lo,pct_bin_hi,mass,density,n_links\n");
    for mech in [Mechanism::Grandparent, Mechanism::Origin] {
        match rank_bias(window, mech, 5.0) {
            Ok(rb) => {
                for bin in &rb.bins {
                    let _ = writeln!(
                        rb_body,
                        "{},{},{},{},{},{}",
                        mech.as_str(),
                        fmt_f(bin.pct_lo),
                        fmt_f(bin.pct_hi),
                        fmt_f(bin.mass),
                        fmt_f(bin.density),
                        rb.n_links
                    );
                }
            }
            Err(e) => notes.push(format!("rank bias {} unavailable: {e}", mech.as_str())),
        }
    }
    artifacts.push(out.write("rank_bias.csv", &rb_body)?);

    // Stage 5: efficiency.
    match link_efficiency(&state, &contexts, state.last_time()) {
        Ok(report) => {
            let mut body = String::from("group,metric,n,q1,median,mean,q3,p99\n");
            for (group, seen, repost) in &report.groups {
                for (metric, summary) in [("seen", seen), ("repost", repost)] {
                    if let Some(s) = summary {
                        let _ = writeln!(
                            body,
                            "{},{metric},{},{},{},{},{},{}",
                            group.as_str(),
                            s.n,
                            fmt_f(s.q1),
                            fmt_f(s.median),
                            fmt_f(s.mean),
                            fmt_f(s.q3),
                            fmt_f(s.p99)
                        );
                    }
                }
            }
            artifacts.push(out.write("efficiency.csv", &body)?);
        }
        Err(e) => notes.push(format!("efficiency unavailable: {e}")),
    }

    // Stage 6: global fits (over the analysis window).
    let bundle = run_fits(window, flavor, grid, r.threads)?;
    artifacts.push(out.write("fit.csv", &fit_table_csv(&bundle.table))?);
    artifacts.push(out.write("loglik_curve.csv", &bundle.curve)?);
    artifacts.push(out.write("loglik_surface.csv", &bundle.surface)?);

    // Stage 7: per-user fits (over the analysis window).
    let user_report = compute_user_fits(window, min_links, flavor, grid, r.threads)?;
    artifacts.push(out.write("user_fits.csv", &user_fits_csv(&user_report))?);

    // Stage 8: clustering and profiles.
    let mut cluster_summary: Option<String> = None;
    match cluster_users(&user_report.fits, &cluster_config) {
        Ok(report) => {
            artifacts.push(out.write("classes.csv", &classes_csv(&report))?);
            artifacts.push(out.write("ternary.csv", &ternary_csv(&user_report.fits, &report))?);
            artifacts.push(out.write("profiles.csv", &profiles_csv(&report.classes, &state))?);
            cluster_summary = Some(format!(
                "chosen_k={} classes={}",
                report.chosen_k,
                report
                    .classes
                    .iter()
                    .map(|c| format!("{}({})", c.label, c.members.len()))
                    .collect::<Vec<_>>()
                    .join(" ")
            ));
        }
        Err(linkmix_core::classes::ClusterError::NotEnoughFits { needed, got }) => {
            notes.push(format!(
                "clustering skipped: {got} fitted users, need {needed}"
            ));
        }
        Err(e) => return Err(e.into()),
    }

    // Stage 9: the run report.
    let mut report = String::new();
    let _ = writeln!(report, "linkmix pipeline report");
    let _ = writeln!(report, "=======================");
    let _ = writeln!(
        report,
        "events={} users={} follows={} posts={} reposts={}",
        events.len(),
        state.user_count(),
        state.n_follows(),
        state.n_posts(),
        state.n_reposts()
    );
    if let Some(overlap) = &overlap {
        let _ = writeln!(
            report,
            "mechanism marginals: g={:.4} o={:.4} triadic={:.4}",
            overlap.marginal_g(),
            overlap.marginal_o(),
            overlap.marginal_tri()
        );
    }
    for row in &zreport_lines {
        let _ = writeln!(report, "z: {row}");
    }
    let _ = writeln!(report, "model ranking (best first):");
    for fit in &bundle.table {
        let _ = writeln!(
            report,
            "  {:<22} p1={:<10} p2={:<10} loglik={}",
            fit.model.label(),
            fmt_f(fit.p1),
            fmt_f(fit.p2),
            fmt_f(fit.loglik)
        );
    }
    let _ = writeln!(
        report,
        "user fits: {} fitted, {} below min links, {} unusable",
        user_report.fits.len(),
        user_report.skipped_below_min,
        user_report.skipped_unusable
    );
    if let Some(summary) = cluster_summary {
        let _ = writeln!(report, "clustering: {summary}");
    }
    for note in &notes {
        let _ = writeln!(report, "note: {note}");
    }
    let _ = writeln!(report, "artifacts:");
    for path in &artifacts {
        let _ = writeln!(report, "  {}", path.file_name().unwrap().to_string_lossy());
    }
    out.write("report.txt", &report)?;
    Ok(())
}
