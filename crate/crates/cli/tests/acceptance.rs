//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them).
//!
//! The criteria validate the toolkit end to end on synthetic data with
//! planted ground truth: parameter recovery through the binary, exact-
//! arithmetic likelihood checks, null-model calibration against the
//! standard normal, snapshot purity under prefix recomputation, per-link
//! normalization, the in-degree regime-switch crossover, rank-percentile
//! bias shapes, efficiency ordering, planted clustering, and bitwise
//! determinism across reruns and thread counts.

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use linkmix_core::classes::{cluster_users, ClusterConfig, UserFit};
use linkmix_core::event::{EventKind, UserId};
use linkmix_core::generator::{
    generate, EventRates, GeneratorConfig, RegimeSwitch, ShortcutFlavor, StrategyMix,
};
use linkmix_core::likelihood::{
    link_likelihood, loglik_combined, loglik_single, ShortcutComponent, Strategy,
};
use linkmix_core::math;
use linkmix_core::nullstats::{rank_bias, z_by_indegree, z_score, KBinning, Mechanism};
use linkmix_core::replay::{
    link_efficiency, replay, LinkContext, PoolMode, ReplayOptions,
};
use linkmix_core::rng::Rng;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

fn users_options() -> ReplayOptions {
    ReplayOptions {
        pool_mode: PoolMode::Users,
        ..ReplayOptions::default()
    }
}

fn verdict(criterion: u32, name: &str, checks: &[(bool, String)]) {
    let ok = checks.iter().all(|(b, _)| *b);
    let detail = checks
        .iter()
        .map(|(b, d)| format!("[{}] {d}", if *b { "ok" } else { "FAIL" }))
        .collect::<Vec<_>>()
        .join("; ");
    println!(
        "ACCEPTANCE {criterion:02} {}: {name} — {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
    assert!(ok, "criterion {criterion} ({name}): {detail}");
}

fn work_dir(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn linkmix(args: &[&str]) -> std::process::Output {
    let out = Command::new(env!("CARGO_BIN_EXE_linkmix"))
        .args(args)
        .output()
        .expect("spawn linkmix");
    assert!(
        out.status.success(),
        "linkmix {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

// fit.csv rows: (strategy, model, p1, p2, loglik)
type FitRow = (String, String, Option<f64>, Option<f64>, f64);

fn parse_fit_csv(path: &PathBuf) -> Vec<FitRow> {
    let text = fs::read_to_string(path).unwrap();
    let mut rows = Vec::new();
    for line in text.lines() {
        if line.starts_with('#') || line.starts_with("strategy,") || line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        rows.push((
            f[0].to_string(),
            f[1].to_string(),
            f[2].parse().ok(),
            f[3].parse().ok(),
            f[4].parse().unwrap(),
        ));
    }
    rows
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_parameter_recovery() {
    let start = Instant::now();
    let dir = work_dir("c01");
    let dir_s = dir.to_str().unwrap();

    // Combined model: plant (p1, p2) = (0.12, 0.71) with the union flavor
    // and 5e4 mixture-driven follows after a 2000-edge warm-up.
    linkmix(&[
        "generate", "--output-dir", dir_s, "--seed", "2024", "--events", "122000",
        "--seed-users", "400", "--seed-edges", "2000", "--rates", "0,0.28,0.30,0.42",
        "--mix", "0.12,0.71", "--flavor", "guo",
    ]);
    let log = dir.join("events.log");
    let driven = fs::read_to_string(&log)
        .unwrap()
        .lines()
        .filter(|l| l.split('\t').nth(1) == Some("follow"))
        .count()
        - 2000;
    linkmix(&[
        "fit", "--input", log.to_str().unwrap(), "--output-dir", dir_s,
        "--pool", "users", "--skip-links", "2000",
    ]);
    let rows = parse_fit_csv(&dir.join("fit.csv"));
    let (p1, p2) = rows
        .iter()
        .find(|r| r.1 == "shortcut+triadic")
        .map(|r| (r.2.unwrap(), r.3.unwrap()))
        .unwrap();

    // Single model: plant p_triadic = 0.82.
    let dir2 = work_dir("c01b");
    let dir2_s = dir2.to_str().unwrap();
    linkmix(&[
        "generate", "--output-dir", dir2_s, "--seed", "2025", "--events", "122000",
        "--seed-users", "400", "--seed-edges", "2000", "--rates", "0,0.28,0.30,0.42",
        "--mix", "0,0.82",
    ]);
    linkmix(&[
        "fit", "--input", dir2.join("events.log").to_str().unwrap(), "--output-dir", dir2_s,
        "--pool", "users", "--skip-links", "2000",
    ]);
    let rows2 = parse_fit_csv(&dir2.join("fit.csv"));
    let p_tri = rows2
        .iter()
        .find(|r| r.1 == "triadic")
        .map(|r| r.2.unwrap())
        .unwrap();

    let elapsed = start.elapsed().as_secs_f64();
    verdict(
        1,
        "parameter recovery",
        &[
            (
                driven >= 50_000,
                format!("{driven} mixture-driven follows"),
            ),
            (
                math::abs(p1 - 0.12) <= 0.03,
                format!("combined p1 {p1:.4} vs 0.12"),
            ),
            (
                math::abs(p2 - 0.71) <= 0.03,
                format!("combined p2 {p2:.4} vs 0.71"),
            ),
            (
                math::abs(p_tri - 0.82) <= 0.03,
                format!("single p {p_tri:.4} vs 0.82"),
            ),
            (elapsed <= 300.0, format!("runtime {elapsed:.0}s <= 300s")),
        ],
    );
}

// ---------------------------------------------------------------------------

fn big_ratio(num: u64, den: u64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn ln_biguint(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 53 {
        return math::ln(x.to_u64().unwrap() as f64);
    }
    let shift = bits - 53;
    let top: BigUint = x >> shift;
    math::ln(top.to_u64().unwrap() as f64) + shift as f64 * core::f64::consts::LN_2
}

fn ln_rational(r: &BigRational) -> f64 {
    assert!(r.is_positive());
    ln_biguint(r.numer().magnitude()) - ln_biguint(r.denom().magnitude())
}

// Exact product of per-link mixture terms, mirroring the usable-link filter.
fn exact_loglik(
    contexts: &[LinkContext],
    shortcut: Strategy,
    with_triadic: bool,
    p1: (u64, u64),
    p2: (u64, u64),
) -> f64 {
    let p1r = big_ratio(p1.0, p1.1);
    let p2r = big_ratio(p2.0, p2.1);
    let rr = BigRational::from_integer(1.into()) - &p1r - &p2r;
    let mut product = BigRational::from_integer(1.into());
    for ctx in contexts {
        if ctx.pool < 1 {
            continue;
        }
        let coeff = |s: Strategy| -> BigRational {
            let f = link_likelihood(ctx, s).unwrap();
            if f == 0.0 {
                BigRational::zero()
            } else {
                // f is 1/n for the candidate count n.
                big_ratio(1, (1.0 / f) as u64)
            }
        };
        let mut term = &p1r * coeff(shortcut) + &rr * big_ratio(1, ctx.pool);
        if with_triadic {
            term += &p2r * coeff(Strategy::Triadic);
        }
        product *= term;
    }
    ln_rational(&product)
}

#[test]
fn criterion_02_likelihood_exact_rational() {
    let mut rng = Rng::from_seed(555);
    let mut worst_rel = 0.0f64;
    let mut logs = 0usize;
    for seed in 0..50u64 {
        let config = GeneratorConfig {
            seed: 7000 + seed,
            n_events: 60,
            seed_users: 8,
            seed_edges: 5,
            rates: EventRates {
                join: 0.05,
                post: 0.30,
                repost: 0.25,
                follow: 0.40,
            },
            mix: StrategyMix::new(0.25, 0.40).unwrap(),
            ..GeneratorConfig::default()
        };
        let out = generate(&config).unwrap();
        let (_, mut ctxs) = replay(&out.events, users_options()).unwrap();
        ctxs.truncate(20);
        if ctxs.iter().filter(|c| c.pool >= 1).count() < 2 {
            continue;
        }
        logs += 1;

        // Parameters on the 1/64 grid are exact in both arithmetics.
        let k1 = rng.below(40);
        let k2 = rng.below(60 - k1);
        let p1 = k1 as f64 / 64.0;
        let p2 = k2 as f64 / 64.0;

        let combined = loglik_combined(&ctxs, ShortcutComponent::Either, p1, p2).unwrap();
        let exact_c = exact_loglik(&ctxs, Strategy::Shortcut, true, (k1, 64), (k2, 64));
        let rel_c = math::abs(combined - exact_c) / math::abs(exact_c).max(1e-12);
        worst_rel = worst_rel.max(rel_c);

        let single = loglik_single(&ctxs, Strategy::Grandparent, p1).unwrap();
        let exact_s = exact_loglik(&ctxs, Strategy::Grandparent, false, (k1, 64), (0, 64));
        let rel_s = math::abs(single - exact_s) / math::abs(exact_s).max(1e-12);
        worst_rel = worst_rel.max(rel_s);
    }
    verdict(
        2,
        "likelihood equals exact rational evaluation",
        &[
            (logs >= 45, format!("{logs} usable random logs")),
            (
                worst_rel <= 1e-9,
                format!("worst relative error {worst_rel:.2e} <= 1e-9"),
            ),
        ],
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_03_null_calibration() {
    // 200 pure-random runs: per-run z for each mechanism must look N(0,1).
    let mut zs: Vec<Vec<f64>> = vec![Vec::new(), Vec::new(), Vec::new()];
    for s in 0..200u64 {
        let config = GeneratorConfig {
            seed: 1000 + s,
            n_events: 4000,
            seed_users: 100,
            seed_edges: 300,
            rates: EventRates {
                join: 0.0,
                post: 0.30,
                repost: 0.28,
                follow: 0.42,
            },
            mix: StrategyMix::new(0.0, 0.0).unwrap(),
            ..GeneratorConfig::default()
        };
        let out = generate(&config).unwrap();
        let (_, ctxs) = replay(&out.events, users_options()).unwrap();
        for (i, mech) in Mechanism::ALL.iter().enumerate() {
            zs[i].push(z_score(&ctxs, *mech).unwrap().z.unwrap());
        }
    }
    let mut checks = Vec::new();
    for (i, mech) in Mechanism::ALL.iter().enumerate() {
        let (_, p) = math::ks_test_standard_normal(&zs[i]);
        checks.push((
            p > 0.01,
            format!("KS p {} = {p:.3} > 0.01", mech.as_str()),
        ));
    }

    // Planted-mechanism runs must reject hard.
    let planted = [
        (Mechanism::Triadic, StrategyMix::new(0.0, 0.6).unwrap(), ShortcutFlavor::Either),
        (Mechanism::Grandparent, StrategyMix::new(0.6, 0.0).unwrap(), ShortcutFlavor::Grandparent),
        (Mechanism::Origin, StrategyMix::new(0.6, 0.0).unwrap(), ShortcutFlavor::Origin),
    ];
    for (mech, mix, flavor) in planted {
        let config = GeneratorConfig {
            seed: 31337,
            n_events: 8000,
            seed_users: 120,
            seed_edges: 400,
            rates: EventRates {
                join: 0.0,
                post: 0.28,
                repost: 0.30,
                follow: 0.42,
            },
            mix,
            shortcut_flavor: flavor,
            ..GeneratorConfig::default()
        };
        let out = generate(&config).unwrap();
        let (_, ctxs) = replay(&out.events, users_options()).unwrap();
        let z = z_score(&ctxs, mech).unwrap().z.unwrap();
        checks.push((z > 5.0, format!("planted {} z = {z:.1} > 5", mech.as_str())));
    }
    verdict(3, "null-model calibration and detection", &checks);
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_04_snapshot_purity() {
    let config = GeneratorConfig {
        seed: 99,
        n_events: 1000,
        seed_users: 12,
        seed_edges: 15,
        rates: EventRates {
            join: 0.05,
            post: 0.25,
            repost: 0.30,
            follow: 0.40,
        },
        mix: StrategyMix::new(0.30, 0.45).unwrap(),
        ..GeneratorConfig::default()
    };
    let events = generate(&config).unwrap().events;
    let mut checks = Vec::new();
    for pool_mode in [PoolMode::Paper, PoolMode::Users] {
        let options = ReplayOptions {
            pool_mode,
            ..ReplayOptions::default()
        };
        let (_, incremental) = replay(&events, options).unwrap();
        let mut mismatches = 0usize;
        let mut link = 0u64;
        for (at, ev) in events.iter().enumerate() {
            let EventKind::Follow { creator, target } = ev.kind else {
                continue;
            };
            link += 1;
            // Rebuild the state from scratch over the strict prefix.
            let (fresh, _) = replay(&events[..at], options).unwrap();
            let expected = fresh.link_context(creator, target, link);
            if expected != incremental[(link - 1) as usize] {
                mismatches += 1;
            }
        }
        checks.push((
            mismatches == 0,
            format!("{link} links, {mismatches} mismatches ({pool_mode:?} pool)"),
        ));
    }
    verdict(4, "incremental contexts equal prefix recomputation", &checks);
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_05_normalization() {
    let config = GeneratorConfig {
        seed: 77,
        n_events: 300,
        seed_users: 25,
        seed_edges: 40,
        rates: EventRates {
            join: 0.02,
            post: 0.28,
            repost: 0.28,
            follow: 0.42,
        },
        mix: StrategyMix::new(0.25, 0.45).unwrap(),
        ..GeneratorConfig::default()
    };
    let events = generate(&config).unwrap().events;
    let mut worst = 0.0f64;
    let mut sums_checked = 0usize;
    let mut link = 0u64;
    for (at, ev) in events.iter().enumerate() {
        let EventKind::Follow { creator, .. } = ev.kind else {
            continue;
        };
        link += 1;
        let (state, _) = replay(&events[..at], users_options()).unwrap();
        // Candidate enumerations per strategy, from the rebuilt state.
        let pool: Vec<UserId> = (0..state.user_count() as u32)
            .map(UserId)
            .filter(|&u| u != creator && !state.follows(creator, u))
            .collect();
        let cases: Vec<(Strategy, Vec<UserId>)> = vec![
            (Strategy::Random, pool.clone()),
            (Strategy::Triadic, state.triadic_candidates(creator)),
            (
                Strategy::Grandparent,
                state.grandparent_candidates(creator).into_iter().map(|(u, _)| u).collect(),
            ),
            (
                Strategy::Origin,
                state.origin_candidates(creator).into_iter().map(|(u, _)| u).collect(),
            ),
            (
                Strategy::Shortcut,
                state.shortcut_candidates(creator).into_iter().map(|(u, _)| u).collect(),
            ),
        ];
        for (strategy, candidates) in cases {
            if candidates.is_empty() {
                continue;
            }
            let sum: f64 = candidates
                .iter()
                .map(|&t| link_likelihood(&state.link_context(creator, t, link), strategy).unwrap())
                .sum();
            worst = worst.max(math::abs(sum - 1.0));
            sums_checked += 1;
        }
    }
    verdict(
        5,
        "per-strategy likelihood sums to one over candidates",
        &[
            (sums_checked > 300, format!("{sums_checked} strategy sums over {link} links")),
            (worst <= 1e-9, format!("worst |sum - 1| = {worst:.2e} <= 1e-9")),
        ],
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_06_regime_switch_crossover() {
    let config = GeneratorConfig {
        seed: 42,
        n_events: 75_000,
        seed_users: 1500,
        seed_edges: 2000,
        rates: EventRates {
            join: 0.0,
            post: 0.24,
            repost: 0.28,
            follow: 0.48,
        },
        mix: StrategyMix::new(0.05, 0.80).unwrap(),
        regime_switch: Some(RegimeSwitch {
            at_in_degree: 75,
            mix: StrategyMix::new(0.80, 0.05).unwrap(),
        }),
        shortcut_flavor: ShortcutFlavor::Grandparent,
        follow_concentration: 1.3,
        ..GeneratorConfig::default()
    };
    let out = generate(&config).unwrap();
    let (_, ctxs) = replay(&out.events, users_options()).unwrap();
    let binning = KBinning::Linear { width: 10 };
    let g = z_by_indegree(&ctxs, Mechanism::Grandparent, binning, 30).unwrap();
    let tri = z_by_indegree(&ctxs, Mechanism::Triadic, binning, 30).unwrap();

    // Sign of z_triadic - z_grandparent per aligned bin, ascending k.
    let mut deltas: Vec<(u32, f64)> = Vec::new();
    for gb in &g.bins {
        if let Some(tb) = tri.bins.iter().find(|b| b.k_lo == gb.k_lo) {
            if let (Some(zg), Some(zt)) = (gb.report.z, tb.report.z) {
                deltas.push((gb.k_lo, zt - zg));
            }
        }
    }
    let first_negative = deltas.iter().find(|(_, d)| *d < 0.0).map(|&(k, _)| k);
    let flips = deltas
        .windows(2)
        .filter(|w| (w[0].1 < 0.0) != (w[1].1 < 0.0))
        .count();
    let below_ok = deltas.iter().filter(|(k, _)| *k < 60).all(|(_, d)| *d > 0.0);
    let above_ok = deltas.iter().filter(|(k, _)| *k >= 90).all(|(_, d)| *d < 0.0);
    verdict(
        6,
        "stratified z curves cross at the planted switch",
        &[
            (deltas.len() >= 12, format!("{} populated strata", deltas.len())),
            (
                matches!(first_negative, Some(60) | Some(70) | Some(80)),
                format!("crossing enters at k bin {first_negative:?} (switch at 75 +/- one bin)"),
            ),
            (flips == 1, format!("{flips} sign change")),
            (below_ok, String::from("triadic dominates below the switch")),
            (above_ok, String::from("grandparent dominates above the switch")),
        ],
    );
}

// ---------------------------------------------------------------------------

fn rank_quintiles(weighted: bool) -> Vec<f64> {
    let config = GeneratorConfig {
        seed: 9,
        n_events: 20_000,
        seed_users: 150,
        seed_edges: 800,
        rates: EventRates {
            join: 0.0,
            post: 0.28,
            repost: 0.30,
            follow: 0.42,
        },
        mix: StrategyMix::new(0.7, 0.1).unwrap(),
        shortcut_flavor: ShortcutFlavor::Grandparent,
        traffic_weighting: weighted,
        ..GeneratorConfig::default()
    };
    let out = generate(&config).unwrap();
    let (_, ctxs) = replay(&out.events, users_options()).unwrap();
    let rb = rank_bias(&ctxs[800..], Mechanism::Grandparent, 20.0).unwrap();
    rb.bins.iter().map(|b| b.mass * rb.n_links as f64).collect()
}

#[test]
fn criterion_07_rank_bias_shapes() {
    let weighted = rank_quintiles(true);
    let strictly_decreasing = weighted.windows(2).all(|w| w[0] > w[1]);

    let flat = rank_quintiles(false);
    let n: f64 = flat.iter().sum();
    let expected = vec![n / 5.0; 5];
    let (stat, p, _) = math::chi_square_gof(&flat, &expected);
    verdict(
        7,
        "rank-percentile bias",
        &[
            (
                strictly_decreasing,
                format!(
                    "weighted quintile counts strictly decreasing: {:?}",
                    weighted.iter().map(|c| c.round()).collect::<Vec<_>>()
                ),
            ),
            (
                p > 0.01,
                format!("unweighted uniform: chi2 {stat:.2}, p {p:.3} > 0.01"),
            ),
        ],
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_08_efficiency_ordering() {
    let config = GeneratorConfig {
        seed: 13,
        n_events: 20_000,
        seed_users: 150,
        seed_edges: 600,
        rates: EventRates {
            join: 0.0,
            post: 0.28,
            repost: 0.30,
            follow: 0.42,
        },
        mix: StrategyMix::new(0.5, 0.2).unwrap(),
        post_concentration: 1.2,
        ..GeneratorConfig::default()
    };
    let out = generate(&config).unwrap();
    let (state, ctxs) = replay(&out.events, users_options()).unwrap();
    let report = link_efficiency(&state, &ctxs, state.last_time()).unwrap();
    let mut shortcut = Vec::new();
    let mut tri_only = Vec::new();
    for eff in &report.per_link {
        let ctx = &ctxs[(eff.link_index - 1) as usize];
        if ctx.is_guo {
            shortcut.push(eff.eta_seen);
        } else if ctx.is_tri {
            tri_only.push(eff.eta_seen);
        }
    }
    let (ms, _, _) = math::mean_var(&shortcut);
    let (mt, _, _) = math::mean_var(&tri_only);
    let (z, p) = math::welch_z_one_sided(&shortcut, &tri_only);
    verdict(
        8,
        "shortcut links carry more traffic than triadic-only links",
        &[
            (
                ms > mt,
                format!("mean eta_seen: shortcut {ms:.5} > triadic-only {mt:.5}"),
            ),
            (p < 0.01, format!("one-sided z {z:.1}, p {p:.2e} < 0.01")),
        ],
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_09_planted_clustering() {
    // Pairwise distances 0.35-0.53, every coordinate at least four
    // standard deviations away from the simplex boundary so the planted
    // data really is a three-component Gaussian mixture.
    let centers = [[0.20, 0.60], [0.55, 0.20], [0.20, 0.20]];
    let mut k3_selected = 0usize;
    let mut accuracies = Vec::new();
    let mut monotone = true;
    for rep in 0..10u64 {
        let mut rng = Rng::stream(rep, 77);
        let mut fits = Vec::new();
        let mut truth = Vec::new();
        for u in 0..300u32 {
            let c = (u % 3) as usize;
            let (a, b) = rng.normal_pair();
            let p1 = (centers[c][0] + 0.05 * a).clamp(0.0, 1.0);
            let p2 = (centers[c][1] + 0.05 * b).clamp(0.0, 1.0 - p1);
            fits.push(UserFit {
                user: UserId(u),
                n_links: 40,
                mix: StrategyMix {
                    traffic: p1,
                    structure: p2,
                    random: 1.0 - p1 - p2,
                },
                loglik: -1.0,
            });
            truth.push(c);
        }
        let report = cluster_users(
            &fits,
            &ClusterConfig {
                seed: rep,
                ..ClusterConfig::default()
            },
        )
        .unwrap();
        if report.model.reseeded == 0 && report.model.dropped == 0 {
            for w in report.model.ll_history.windows(2) {
                if w[1] < w[0] - 1e-9 * (1.0 + math::abs(w[0])) {
                    monotone = false;
                }
            }
        }
        if report.chosen_k != 3 {
            continue;
        }
        k3_selected += 1;

        // Best assignment of found classes to true clusters.
        let k = report.classes.len();
        let mut best_acc = 0.0f64;
        let mut perm = vec![0usize; k];
        fn perms(k: usize, cur: &mut Vec<usize>, used: &mut Vec<bool>, visit: &mut impl FnMut(&[usize])) {
            if cur.len() == k {
                visit(cur);
                return;
            }
            for i in 0..k {
                if !used[i] {
                    used[i] = true;
                    cur.push(i);
                    perms(k, cur, used, visit);
                    cur.pop();
                    used[i] = false;
                }
            }
        }
        let assignments = &report.assignments;
        perms(k, &mut Vec::new(), &mut vec![false; k], &mut |p| {
            let correct = assignments
                .iter()
                .enumerate()
                .filter(|(i, &(_, class))| p[class] == truth[*i])
                .count();
            let acc = correct as f64 / assignments.len() as f64;
            if acc > best_acc {
                best_acc = acc;
                perm.copy_from_slice(p);
            }
        });
        accuracies.push(best_acc);
    }
    let min_acc = accuracies.iter().copied().fold(1.0f64, f64::min);
    verdict(
        9,
        "planted strategy classes recovered",
        &[
            (
                k3_selected >= 8,
                format!("cross validation picked k=3 in {k3_selected}/10 repetitions"),
            ),
            (
                min_acc >= 0.9,
                format!("assignment accuracy >= 90% (min {:.1}%)", min_acc * 100.0),
            ),
            (monotone, String::from("EM log-likelihood non-decreasing")),
        ],
    );
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_10_determinism() {
    let mut checks = Vec::new();

    // Same seed twice: byte-identical log and trace.
    let a = work_dir("c10a");
    let b = work_dir("c10b");
    for dir in [&a, &b] {
        linkmix(&[
            "generate", "--output-dir", dir.to_str().unwrap(), "--seed", "7",
            "--events", "1000",
        ]);
    }
    let same_log = fs::read(a.join("events.log")).unwrap() == fs::read(b.join("events.log")).unwrap();
    let same_trace = fs::read(a.join("trace.tsv")).unwrap() == fs::read(b.join("trace.tsv")).unwrap();
    checks.push((same_log, String::from("events.log byte-identical across reruns")));
    checks.push((same_trace, String::from("trace.tsv byte-identical across reruns")));

    // A moderate log for fitting.
    let base = work_dir("c10base");
    linkmix(&[
        "generate", "--output-dir", base.to_str().unwrap(), "--seed", "11",
        "--events", "12000", "--seed-users", "150", "--seed-edges", "600",
        "--rates", "0,0.28,0.30,0.42", "--mix", "0.15,0.6",
    ]);
    let log = base.join("events.log");

    // Identical invocations produce byte-identical CSV files.
    let t1a = work_dir("c10t1a");
    let t1b = work_dir("c10t1b");
    for dir in [&t1a, &t1b] {
        linkmix(&[
            "fit", "--input", log.to_str().unwrap(), "--output-dir", dir.to_str().unwrap(),
            "--pool", "users", "--skip-links", "600", "--threads", "1",
        ]);
    }
    for file in ["fit.csv", "loglik_curve.csv", "loglik_surface.csv"] {
        let same = fs::read(t1a.join(file)).unwrap() == fs::read(t1b.join(file)).unwrap();
        checks.push((same, format!("{file} byte-identical across reruns")));
    }

    // Four threads match one thread: same argmax, values within 1e-6.
    let t4 = work_dir("c10t4");
    linkmix(&[
        "fit", "--input", log.to_str().unwrap(), "--output-dir", t4.to_str().unwrap(),
        "--pool", "users", "--skip-links", "600", "--threads", "4",
    ]);
    let rows1 = parse_fit_csv(&t1a.join("fit.csv"));
    let rows4 = parse_fit_csv(&t4.join("fit.csv"));
    let mut same_argmax = rows1.len() == rows4.len();
    let mut max_rel = 0.0f64;
    for (r1, r4) in rows1.iter().zip(&rows4) {
        same_argmax &= r1.0 == r4.0 && r1.1 == r4.1 && r1.2 == r4.2 && r1.3 == r4.3;
        let rel = math::abs(r1.4 - r4.4) / math::abs(r1.4).max(1.0);
        max_rel = max_rel.max(rel);
    }
    checks.push((same_argmax, String::from("threads 1 and 4 give identical argmax rows")));
    checks.push((
        max_rel <= 1e-6,
        format!("loglik values match within {max_rel:.2e} <= 1e-6"),
    ));
    verdict(10, "determinism across reruns and thread counts", &checks);
}
