//! Brute-force cross-check of the incremental replay.
//!
//! `naive` rebuilds every follow's context from scratch out of plain edge
//! lists and nested loops — no shared code with the incremental path — and
//! the tests demand field-for-field agreement on generated logs, plus the
//! bookkeeping invariants (conservation of repost weights, candidate-set
//! monotonicity, snapshot purity).

use linkmix_core::event::{Event, EventKind, MessageId, UserId};
use linkmix_core::generator::{
    generate, EventRates, GeneratorConfig, StrategyMix,
};
use linkmix_core::replay::{replay, LinkContext, PoolMode, ReplayOptions};

mod naive {
    use super::*;
    use std::collections::{BTreeMap, BTreeSet};

    /// Everything recomputed from the raw event prefix, the slow way.
    pub struct NaiveSnapshot {
        pub users: usize,
        pub followees: BTreeMap<UserId, BTreeSet<UserId>>,
        pub gp_counts: BTreeMap<UserId, u32>,
        pub origin_counts: BTreeMap<UserId, u32>,
        pub any_counts: BTreeMap<UserId, u32>,
        pub triadic: BTreeSet<UserId>,
        pub w_seen: BTreeMap<(UserId, UserId), u64>,
        pub w_repost: BTreeMap<(UserId, UserId), u64>,
    }

    /// Replay `events[..upto]` naively from scratch, then report the world
    /// as seen by `viewer`.
    pub fn snapshot(events: &[Event], upto: usize, viewer: UserId) -> NaiveSnapshot {
        let mut users = 0usize;
        // (source, sink) edges in creation order.
        let mut edges: Vec<(UserId, UserId)> = Vec::new();
        // message -> (origin, holder -> parent)
        let mut casc: BTreeMap<MessageId, (UserId, BTreeMap<UserId, Option<UserId>>)> =
            BTreeMap::new();
        let mut gp: BTreeMap<UserId, u32> = BTreeMap::new();
        let mut origin: BTreeMap<UserId, u32> = BTreeMap::new();
        let mut any: BTreeMap<UserId, u32> = BTreeMap::new();
        let mut w_seen: BTreeMap<(UserId, UserId), u64> = BTreeMap::new();
        let mut w_repost: BTreeMap<(UserId, UserId), u64> = BTreeMap::new();

        let followers_of = |edges: &[(UserId, UserId)], holder: UserId| -> Vec<UserId> {
            edges
                .iter()
                .filter(|&&(src, _)| src == holder)
                .map(|&(_, sink)| sink)
                .collect()
        };

        for ev in &events[..upto] {
            match ev.kind {
                EventKind::Join { .. } => users += 1,
                EventKind::Post { author, message } => {
                    let mut holders = BTreeMap::new();
                    holders.insert(author, None);
                    casc.insert(message, (author, holders));
                    for f in followers_of(&edges, author) {
                        *w_seen.entry((author, f)).or_insert(0) += 1;
                        // An original post has no grandparent and its origin
                        // is the direct source: nothing accrues.
                    }
                }
                EventKind::Repost {
                    user,
                    message,
                    parent,
                } => {
                    let (root, holders) = casc.get_mut(&message).unwrap();
                    let root = *root;
                    holders.insert(user, Some(parent));
                    if edges.contains(&(parent, user)) {
                        *w_repost.entry((parent, user)).or_insert(0) += 1;
                    }
                    for f in followers_of(&edges, user) {
                        *w_seen.entry((user, f)).or_insert(0) += 1;
                        if f == viewer {
                            *gp.entry(parent).or_insert(0) += 1;
                            *origin.entry(root).or_insert(0) += 1;
                            *any.entry(parent).or_insert(0) += 1;
                            if root != parent {
                                *any.entry(root).or_insert(0) += 1;
                            }
                        }
                    }
                }
                EventKind::Follow { creator, target } => {
                    edges.push((target, creator));
                }
            }
        }

        let followees: BTreeMap<UserId, BTreeSet<UserId>> = {
            let mut map: BTreeMap<UserId, BTreeSet<UserId>> = BTreeMap::new();
            for &(src, sink) in &edges {
                map.entry(sink).or_default().insert(src);
            }
            map
        };

        // Two-hop enumeration for the viewer.
        let empty = BTreeSet::new();
        let mine = followees.get(&viewer).unwrap_or(&empty);
        let mut triadic = BTreeSet::new();
        for v in mine {
            for w in followees.get(v).unwrap_or(&empty) {
                if *w != viewer && !mine.contains(w) {
                    triadic.insert(*w);
                }
            }
        }

        NaiveSnapshot {
            users,
            followees,
            gp_counts: gp,
            origin_counts: origin,
            any_counts: any,
            triadic,
            w_seen,
            w_repost,
        }
    }

    /// Build the expected context for the follow at position `at` in
    /// `events` (which must be a follow), entirely from the naive snapshot.
    pub fn context(events: &[Event], at: usize, link_index: u64, pool_mode: PoolMode) -> LinkContext {
        let EventKind::Follow { creator, target } = events[at].kind else {
            panic!("event at {at} is not a follow");
        };
        let snap = snapshot(events, at, creator);
        let empty = BTreeSet::new();
        let mine = snap.followees.get(&creator).unwrap_or(&empty);
        let k = mine.len() as u32;
        let pool = match pool_mode {
            PoolMode::Paper => link_index - k as u64 - 1,
            PoolMode::Users => snap.users as u64 - k as u64 - 1,
        };
        let eligible = |u: &UserId| *u != creator && !mine.contains(u);
        let g_set: BTreeSet<UserId> = snap.gp_counts.keys().filter(|u| eligible(u)).copied().collect();
        let o_set: BTreeSet<UserId> =
            snap.origin_counts.keys().filter(|u| eligible(u)).copied().collect();
        let guo: BTreeSet<UserId> = g_set.union(&o_set).copied().collect();
        let is_g = g_set.contains(&target);
        let is_o = o_set.contains(&target);

        let rank = |counts: &BTreeMap<UserId, u32>,
                    set: &BTreeSet<UserId>|
         -> (Option<f64>, Option<u32>) {
            if !set.contains(&target) {
                return (None, None);
            }
            let mine_count = counts[&target];
            let higher = set.iter().filter(|u| counts[u] > mine_count).count();
            let ties = set.iter().filter(|u| counts[u] == mine_count).count();
            let mid = higher as f64 + (ties as f64 + 1.0) / 2.0;
            (
                Some(100.0 * mid / set.len() as f64),
                Some(ties as u32),
            )
        };
        let (rank_pct_g, rank_tie_g) = rank(&snap.gp_counts, &g_set);
        let (rank_pct_o, rank_tie_o) = rank(&snap.origin_counts, &o_set);

        LinkContext {
            link_index,
            creator,
            target,
            k,
            pool,
            n_g: g_set.len() as u32,
            n_o: o_set.len() as u32,
            n_tri: snap.triadic.len() as u32,
            n_guo: guo.len() as u32,
            is_g,
            is_o,
            is_tri: snap.triadic.contains(&target),
            is_guo: is_g || is_o,
            seen_from_target: snap.any_counts.get(&target).copied().unwrap_or(0),
            rank_pct_g,
            rank_tie_g,
            rank_pct_o,
            rank_tie_o,
        }
    }
}

fn rich_log(seed: u64, n_events: u64) -> Vec<Event> {
    let config = GeneratorConfig {
        seed,
        n_events,
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
    generate(&config).unwrap().events
}

#[test]
fn snapshot_purity_against_naive_recomputation() {
    for seed in [3, 7] {
        let events = rich_log(seed, 1000);
        for pool_mode in [PoolMode::Paper, PoolMode::Users] {
            let options = ReplayOptions {
                pool_mode,
                ..ReplayOptions::default()
            };
            let (_, contexts) = replay(&events, options).unwrap();
            let mut link_index = 0u64;
            for (at, ev) in events.iter().enumerate() {
                if !matches!(ev.kind, EventKind::Follow { .. }) {
                    continue;
                }
                link_index += 1;
                let expected = naive::context(&events, at, link_index, pool_mode);
                assert_eq!(
                    contexts[(link_index - 1) as usize],
                    expected,
                    "seed {seed}, link {link_index}, {pool_mode:?}"
                );
            }
        }
    }
}

#[test]
fn edge_weights_match_naive_accounting() {
    let events = rich_log(11, 1500);
    let (state, _) = replay(&events, ReplayOptions::default()).unwrap();
    let snap = naive::snapshot(&events, events.len(), UserId(0));
    for edge in state.edges() {
        let key = (edge.source, edge.sink);
        assert_eq!(edge.w_seen, snap.w_seen.get(&key).copied().unwrap_or(0), "{key:?}");
        assert_eq!(
            edge.w_repost,
            snap.w_repost.get(&key).copied().unwrap_or(0),
            "{key:?}"
        );
    }
    // Conservation: total repost weight equals reposts whose (parent, user)
    // edge existed at repost time.
    let total: u64 = state.edges().iter().map(|e| e.w_repost).sum();
    let naive_total: u64 = snap.w_repost.values().sum();
    assert_eq!(total, naive_total);
}

#[test]
fn triadic_sets_match_brute_force_on_random_graphs() {
    use linkmix_core::rng::Rng;
    // Random follow graphs up to 200 nodes, compared user by user.
    for seed in [1, 2] {
        let mut rng = Rng::from_seed(seed);
        let n_users = 120 + rng.below(81) as usize;
        let mut text = String::new();
        for u in 0..n_users {
            text.push_str(&format!("{u}\tjoin\t{u}\n"));
        }
        let mut edges = std::collections::BTreeSet::new();
        let mut t = n_users;
        for _ in 0..(n_users * 6) {
            let a = rng.below(n_users as u64) as u32;
            let b = rng.below(n_users as u64) as u32;
            if a != b && edges.insert((a, b)) {
                text.push_str(&format!("{t}\tfollow\t{a}\t{b}\n"));
                t += 1;
            }
        }
        let events = linkmix_core::event::parse_log(&text).unwrap();
        let (state, _) = replay(&events, ReplayOptions::default()).unwrap();
        let snap_all = naive::snapshot(&events, events.len(), UserId(0));
        for u in 0..n_users as u32 {
            let viewer = UserId(u);
            let empty = std::collections::BTreeSet::new();
            let mine = snap_all.followees.get(&viewer).unwrap_or(&empty);
            let mut expected = std::collections::BTreeSet::new();
            for v in mine {
                for w in snap_all.followees.get(v).unwrap_or(&empty) {
                    if *w != viewer && !mine.contains(w) {
                        expected.insert(*w);
                    }
                }
            }
            let got: std::collections::BTreeSet<UserId> =
                state.triadic_candidates(viewer).into_iter().collect();
            assert_eq!(got, expected, "viewer {u}");
        }
    }
}

#[test]
fn candidate_sets_shrink_only_by_following_a_candidate() {
    let events = rich_log(19, 4000);
    let (_, contexts) = replay(&events, ReplayOptions::default()).unwrap();
    let mut last: std::collections::BTreeMap<UserId, LinkContext> = Default::default();
    for ctx in &contexts {
        if let Some(prev) = last.get(&ctx.creator) {
            assert!(
                ctx.n_g >= prev.n_g - prev.is_g as u32,
                "n_g dropped too far at link {}",
                ctx.link_index
            );
            assert!(
                ctx.n_o >= prev.n_o - prev.is_o as u32,
                "n_o dropped too far at link {}",
                ctx.link_index
            );
            assert!(
                ctx.n_tri >= prev.n_tri - prev.is_tri as u32,
                "n_tri dropped too far at link {}",
                ctx.link_index
            );
            assert!(ctx.k == prev.k + 1);
        }
        last.insert(ctx.creator, ctx.clone());
    }
}
