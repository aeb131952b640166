//! Incremental replay of an event log.
//!
//! Replaying maintains the follower graph, the cascade forest (who holds
//! which message, reposted from whom), per-viewer exposure counters, and
//! per-edge traffic weights. For every follow event it emits a
//! [`LinkContext`]: the sizes of the creator's grandparent / origin /
//! triadic candidate sets, indicator flags for the actual target, the
//! candidate-pool size, and the target's seen-count rank — all computed
//! from the state *before* the follow is applied.
//!
//! Exposure model: when user `p` posts or reposts message `m`, every
//! current follower `f` of `p` sees it. If `p`'s copy has a cascade parent
//! `q`, then `q` is a grandparent from `f`'s point of view; the cascade
//! root is an origin unless it is `p` itself (a directly received original
//! post is one hop away and creates no shortcut candidate). Each exposure
//! also increments `w_seen` on the edge `(p, f)`; a repost by `f` from `p`
//! increments `w_repost` on that edge when it exists.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::event::{validate_log, Event, EventKind, InvalidLog, MessageId, UserId};
use crate::math::Summary;

/// How the candidate-pool size in [`LinkContext::pool`] is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolMode {
    /// `link_index - k - 1`: the pool grows with the global link counter.
    #[default]
    Paper,
    /// `joined users - k - 1`: the number of users actually available.
    Users,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayOptions {
    pub pool_mode: PoolMode,
    /// Keep already-followed users in the candidate sets instead of
    /// excluding them (sensitivity analysis; the default matches the null
    /// pool, which only contains users not yet followed).
    pub include_followed: bool,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions {
            pool_mode: PoolMode::Paper,
            include_followed: false,
        }
    }
}

/// Per-follow snapshot of everything inference needs, taken before the
/// follow is applied. `link_index` is the 1-based position among follows.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkContext {
    pub link_index: u64,
    pub creator: UserId,
    pub target: UserId,
    /// Creator in-degree (number of users the creator follows).
    pub k: u32,
    /// Candidate-pool size under the replay's [`PoolMode`].
    pub pool: u64,
    pub n_g: u32,
    pub n_o: u32,
    pub n_tri: u32,
    /// Size of the union of grandparent and origin candidate sets.
    pub n_guo: u32,
    pub is_g: bool,
    pub is_o: bool,
    pub is_tri: bool,
    pub is_guo: bool,
    /// Messages from the target (as grandparent or origin) the creator saw.
    pub seen_from_target: u32,
    /// Mid-rank percentile of the target among grandparent candidates by
    /// descending seen-count, in (0, 100]. Present iff `is_g`.
    pub rank_pct_g: Option<f64>,
    /// Size of the target's seen-count tie group among grandparent
    /// candidates. Present iff `is_g`.
    pub rank_tie_g: Option<u32>,
    pub rank_pct_o: Option<f64>,
    pub rank_tie_o: Option<u32>,
}

/// A follower edge: `sink` follows `source`, messages flow source -> sink.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub source: UserId,
    pub sink: UserId,
    pub created_seq: u64,
    pub created_time: f64,
    /// Messages exposed through this edge after its creation.
    pub w_seen: u64,
    /// Reposts by `sink` taken directly from `source` through this edge.
    pub w_repost: u64,
}

#[derive(Debug, Clone, Default)]
struct UserState {
    followees: BTreeSet<UserId>,
    followers: Vec<UserId>,
    gp_seen: BTreeMap<UserId, u32>,
    origin_seen: BTreeMap<UserId, u32>,
    any_seen: BTreeMap<UserId, u32>,
    posts: u32,
    reposts: u32,
    times_reposted: u32,
    join_seq: u64,
}

#[derive(Debug, Clone)]
struct Cascade {
    origin: UserId,
    /// holder -> parent copy (None for the origin's own copy).
    holders: BTreeMap<UserId, Option<UserId>>,
}

/// Incrementally maintained follower graph, cascade forest, and counters.
#[derive(Debug, Clone)]
pub struct NetworkState {
    options: ReplayOptions,
    users: Vec<UserState>,
    edges: Vec<Edge>,
    edge_index: BTreeMap<(UserId, UserId), u32>,
    cascades: BTreeMap<MessageId, Cascade>,
    n_posts: u64,
    n_reposts: u64,
    last_time: f64,
}

impl NetworkState {
    pub fn new(options: ReplayOptions) -> NetworkState {
        NetworkState {
            options,
            users: Vec::new(),
            edges: Vec::new(),
            edge_index: BTreeMap::new(),
            cascades: BTreeMap::new(),
            n_posts: 0,
            n_reposts: 0,
            last_time: 0.0,
        }
    }

    pub fn options(&self) -> &ReplayOptions {
        &self.options
    }

    pub fn user_count(&self) -> usize {
        self.users.len()
    }

    /// Number of users the given user follows (the in-degree convention
    /// used throughout: in-degree counts information sources).
    pub fn in_degree(&self, u: UserId) -> u32 {
        self.users[u.index()].followees.len() as u32
    }

    /// Number of followers of the given user.
    pub fn out_degree(&self, u: UserId) -> u32 {
        self.users[u.index()].followers.len() as u32
    }

    pub fn follows(&self, creator: UserId, source: UserId) -> bool {
        self.users[creator.index()].followees.contains(&source)
    }

    pub fn followees(&self, u: UserId) -> impl Iterator<Item = UserId> + '_ {
        self.users[u.index()].followees.iter().copied()
    }

    pub fn followers(&self, u: UserId) -> &[UserId] {
        &self.users[u.index()].followers
    }

    /// Edges in creation order; edge `i` belongs to link index `i + 1`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, source: UserId, sink: UserId) -> Option<&Edge> {
        self.edge_index
            .get(&(source, sink))
            .map(|&i| &self.edges[i as usize])
    }

    pub fn n_follows(&self) -> u64 {
        self.edges.len() as u64
    }

    pub fn n_posts(&self) -> u64 {
        self.n_posts
    }

    pub fn n_reposts(&self) -> u64 {
        self.n_reposts
    }

    pub fn last_time(&self) -> f64 {
        self.last_time
    }

    pub fn posts_by(&self, u: UserId) -> u32 {
        self.users[u.index()].posts
    }

    pub fn reposts_by(&self, u: UserId) -> u32 {
        self.users[u.index()].reposts
    }

    /// How many times messages originated by this user were reposted.
    pub fn times_reposted(&self, u: UserId) -> u32 {
        self.users[u.index()].times_reposted
    }

    pub fn join_seq(&self, u: UserId) -> u64 {
        self.users[u.index()].join_seq
    }

    /// Exposure counters: grandparent role.
    pub fn gp_seen(&self, viewer: UserId) -> &BTreeMap<UserId, u32> {
        &self.users[viewer.index()].gp_seen
    }

    /// Exposure counters: origin role.
    pub fn origin_seen(&self, viewer: UserId) -> &BTreeMap<UserId, u32> {
        &self.users[viewer.index()].origin_seen
    }

    /// Exposure counters: either role, counted once per reception.
    pub fn any_seen(&self, viewer: UserId) -> &BTreeMap<UserId, u32> {
        &self.users[viewer.index()].any_seen
    }

    pub fn cascade_origin(&self, m: MessageId) -> Option<UserId> {
        self.cascades.get(&m).map(|c| c.origin)
    }

    pub fn holds(&self, m: MessageId, u: UserId) -> bool {
        self.cascades
            .get(&m)
            .map(|c| c.holders.contains_key(&u))
            .unwrap_or(false)
    }

    /// Users the creator could follow at random: joined, not the creator,
    /// not already followed.
    pub fn null_pool_size(&self, creator: UserId) -> u64 {
        self.users.len() as u64 - 1 - self.in_degree(creator) as u64
    }

    fn excluded(&self, creator: UserId, candidate: UserId) -> bool {
        candidate == creator
            || (!self.options.include_followed && self.follows(creator, candidate))
    }

    /// Grandparent candidates of `creator` with their seen counts, ascending
    /// by user id.
    pub fn grandparent_candidates(&self, creator: UserId) -> Vec<(UserId, u32)> {
        self.users[creator.index()]
            .gp_seen
            .iter()
            .filter(|(u, _)| !self.excluded(creator, **u))
            .map(|(&u, &c)| (u, c))
            .collect()
    }

    /// Origin candidates of `creator` with their seen counts.
    pub fn origin_candidates(&self, creator: UserId) -> Vec<(UserId, u32)> {
        self.users[creator.index()]
            .origin_seen
            .iter()
            .filter(|(u, _)| !self.excluded(creator, **u))
            .map(|(&u, &c)| (u, c))
            .collect()
    }

    /// Union of grandparent and origin candidates, with combined seen counts
    /// (one per reception).
    pub fn shortcut_candidates(&self, creator: UserId) -> Vec<(UserId, u32)> {
        let state = &self.users[creator.index()];
        let mut out = Vec::new();
        for &u in state.gp_seen.keys() {
            if !self.excluded(creator, u) {
                out.push((u, *state.any_seen.get(&u).unwrap_or(&0)));
            }
        }
        for &u in state.origin_seen.keys() {
            if !state.gp_seen.contains_key(&u) && !self.excluded(creator, u) {
                out.push((u, *state.any_seen.get(&u).unwrap_or(&0)));
            }
        }
        out.sort_unstable_by_key(|&(u, _)| u);
        out
    }

    /// Users exactly two follow steps away: followees of the creator's
    /// followees, minus exclusions. Enumerated on demand.
    pub fn triadic_candidates(&self, creator: UserId) -> Vec<UserId> {
        let mut set = BTreeSet::new();
        for &v in &self.users[creator.index()].followees {
            for &w in &self.users[v.index()].followees {
                if !self.excluded(creator, w) {
                    set.insert(w);
                }
            }
        }
        set.into_iter().collect()
    }

    /// The snapshot for a prospective follow, from the current state.
    /// `link_index` is 1-based.
    pub fn link_context(&self, creator: UserId, target: UserId, link_index: u64) -> LinkContext {
        let k = self.in_degree(creator);
        let pool = match self.options.pool_mode {
            PoolMode::Paper => link_index - k as u64 - 1,
            PoolMode::Users => self.users.len() as u64 - k as u64 - 1,
        };
        let me = &self.users[creator.index()];

        let mut n_g = 0u32;
        let mut n_o = 0u32;
        let mut n_guo = 0u32;
        for &u in me.gp_seen.keys() {
            if !self.excluded(creator, u) {
                n_g += 1;
                n_guo += 1;
            }
        }
        for &u in me.origin_seen.keys() {
            if !self.excluded(creator, u) {
                n_o += 1;
                if !me.gp_seen.contains_key(&u) {
                    n_guo += 1;
                }
            }
        }
        let is_g = me.gp_seen.contains_key(&target) && !self.excluded(creator, target);
        let is_o = me.origin_seen.contains_key(&target) && !self.excluded(creator, target);

        let tri = self.triadic_candidates(creator);
        let is_tri = tri.binary_search(&target).is_ok();

        let (rank_pct_g, rank_tie_g) = if is_g {
            let (pct, tie) = rank_among(&self.grandparent_candidates(creator), target);
            (Some(pct), Some(tie))
        } else {
            (None, None)
        };
        let (rank_pct_o, rank_tie_o) = if is_o {
            let (pct, tie) = rank_among(&self.origin_candidates(creator), target);
            (Some(pct), Some(tie))
        } else {
            (None, None)
        };

        LinkContext {
            link_index,
            creator,
            target,
            k,
            pool,
            n_g,
            n_o,
            n_tri: tri.len() as u32,
            n_guo,
            is_g,
            is_o,
            is_tri,
            is_guo: is_g || is_o,
            seen_from_target: *me.any_seen.get(&target).unwrap_or(&0),
            rank_pct_g,
            rank_tie_g,
            rank_pct_o,
            rank_tie_o,
        }
    }

    /// Apply one event. The log is assumed valid; [`replay`] validates.
    pub fn apply(&mut self, ev: &Event) {
        self.last_time = ev.time;
        match ev.kind {
            EventKind::Join { user } => {
                debug_assert_eq!(user.index(), self.users.len());
                self.users.push(UserState {
                    join_seq: ev.seq,
                    ..UserState::default()
                });
            }
            EventKind::Post { author, message } => {
                self.n_posts += 1;
                self.users[author.index()].posts += 1;
                let mut holders = BTreeMap::new();
                holders.insert(author, None);
                self.cascades.insert(
                    message,
                    Cascade {
                        origin: author,
                        holders,
                    },
                );
                // Original post: the author is the direct parent for every
                // viewer, so no grandparent/origin candidates accrue.
                self.expose(author, None, None);
            }
            EventKind::Repost { user, message, parent } => {
                self.n_reposts += 1;
                self.users[user.index()].reposts += 1;
                if let Some(&idx) = self.edge_index.get(&(parent, user)) {
                    self.edges[idx as usize].w_repost += 1;
                }
                let cascade = self
                    .cascades
                    .get_mut(&message)
                    .expect("repost of known message");
                let origin = cascade.origin;
                cascade.holders.insert(user, Some(parent));
                self.users[origin.index()].times_reposted += 1;
                // Followers of the reposter see the message with the
                // reposter's parent as grandparent and the root as origin.
                self.expose(user, Some(parent), Some(origin));
            }
            EventKind::Follow { creator, target } => {
                let idx = self.edges.len() as u32;
                self.edges.push(Edge {
                    source: target,
                    sink: creator,
                    created_seq: ev.seq,
                    created_time: ev.time,
                    w_seen: 0,
                    w_repost: 0,
                });
                self.edge_index.insert((target, creator), idx);
                self.users[creator.index()].followees.insert(target);
                self.users[target.index()].followers.push(creator);
            }
        }
    }

    // Expose a message held by `holder` to all current followers.
    fn expose(&mut self, holder: UserId, grandparent: Option<UserId>, origin: Option<UserId>) {
        let followers = core::mem::take(&mut self.users[holder.index()].followers);
        for &f in &followers {
            let idx = self.edge_index[&(holder, f)];
            self.edges[idx as usize].w_seen += 1;
            let viewer = &mut self.users[f.index()];
            if let Some(g) = grandparent {
                bump(&mut viewer.gp_seen, g);
                bump(&mut viewer.any_seen, g);
            }
            if let Some(o) = origin {
                bump(&mut viewer.origin_seen, o);
                if grandparent != Some(o) {
                    bump(&mut viewer.any_seen, o);
                }
            }
        }
        self.users[holder.index()].followers = followers;
    }

    /// `lifetimes()[u]` is how many users joined after user `u`.
    pub fn lifetimes(&self) -> Vec<u64> {
        let mut order: Vec<usize> = (0..self.users.len()).collect();
        order.sort_unstable_by_key(|&i| (self.users[i].join_seq, i));
        let mut out = alloc::vec![0u64; self.users.len()];
        for (rank, &u) in order.iter().enumerate() {
            out[u] = (self.users.len() - 1 - rank) as u64;
        }
        out
    }
}

fn bump(map: &mut BTreeMap<UserId, u32>, key: UserId) {
    let c = map.entry(key).or_insert(0);
    *c = c.saturating_add(1);
}

// Mid-rank percentile of `target` among candidates ordered by descending
// seen count. Returns (percentile in (0, 100], tie-group size).
fn rank_among(candidates: &[(UserId, u32)], target: UserId) -> (f64, u32) {
    let target_count = candidates
        .iter()
        .find(|&&(u, _)| u == target)
        .map(|&(_, c)| c)
        .expect("target must be a candidate");
    let mut higher = 0u32;
    let mut ties = 0u32;
    for &(_, c) in candidates {
        if c > target_count {
            higher += 1;
        } else if c == target_count {
            ties += 1;
        }
    }
    let n = candidates.len() as f64;
    let mid_rank = higher as f64 + (ties as f64 + 1.0) / 2.0;
    (100.0 * mid_rank / n, ties)
}

/// Replay a validated log: the final state plus one context per follow.
pub fn replay(
    events: &[Event],
    options: ReplayOptions,
) -> Result<(NetworkState, Vec<LinkContext>), InvalidLog> {
    let violations = validate_log(events);
    if !violations.is_empty() {
        let total = violations.len();
        return Err(InvalidLog {
            first: violations.into_iter().next().unwrap(),
            total,
        });
    }
    let mut state = NetworkState::new(options);
    let mut contexts = Vec::new();
    for ev in events {
        if let EventKind::Follow { creator, target } = ev.kind {
            let ctx = state.link_context(creator, target, state.n_follows() + 1);
            contexts.push(ctx);
        }
        state.apply(ev);
    }
    Ok((state, contexts))
}

/// Fractions of follows falling in each cell of the {G, O, triadic}
/// indicator Venn diagram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapReport {
    pub n: usize,
    pub g_only: f64,
    pub o_only: f64,
    pub tri_only: f64,
    pub g_o: f64,
    pub g_tri: f64,
    pub o_tri: f64,
    pub g_o_tri: f64,
    pub none: f64,
}

impl OverlapReport {
    pub fn marginal_g(&self) -> f64 {
        self.g_only + self.g_o + self.g_tri + self.g_o_tri
    }

    pub fn marginal_o(&self) -> f64 {
        self.o_only + self.g_o + self.o_tri + self.g_o_tri
    }

    pub fn marginal_tri(&self) -> f64 {
        self.tri_only + self.g_tri + self.o_tri + self.g_o_tri
    }
}

/// Venn proportions of the three mechanisms over all follows.
/// Returns None for an empty context sequence.
pub fn mechanism_overlap(contexts: &[LinkContext]) -> Option<OverlapReport> {
    if contexts.is_empty() {
        return None;
    }
    let mut counts = [0usize; 8];
    for c in contexts {
        let idx = (c.is_g as usize) | (c.is_o as usize) << 1 | (c.is_tri as usize) << 2;
        counts[idx] += 1;
    }
    let n = contexts.len() as f64;
    Some(OverlapReport {
        n: contexts.len(),
        none: counts[0] as f64 / n,
        g_only: counts[1] as f64 / n,
        o_only: counts[2] as f64 / n,
        g_o: counts[3] as f64 / n,
        tri_only: counts[4] as f64 / n,
        g_tri: counts[5] as f64 / n,
        o_tri: counts[6] as f64 / n,
        g_o_tri: counts[7] as f64 / n,
    })
}

/// One sample of the growth curves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GrowthPoint {
    pub time: f64,
    pub users: u64,
    pub links: u64,
    pub posts: u64,
    pub reposts: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryStats {
    pub growth: Vec<GrowthPoint>,
    /// (degree, number of users), ascending by degree, zero included.
    pub in_degree_hist: Vec<(u32, u32)>,
    pub out_degree_hist: Vec<(u32, u32)>,
}

/// Growth curves sampled at `samples` evenly spaced times, plus final
/// in/out degree histograms.
pub fn summary_stats(state: &NetworkState, events: &[Event], samples: usize) -> SummaryStats {
    let samples = samples.max(2);
    let mut growth = Vec::with_capacity(samples);
    if events.is_empty() {
        growth.push(GrowthPoint {
            time: 0.0,
            users: 0,
            links: 0,
            posts: 0,
            reposts: 0,
        });
    } else {
        let t_end = events[events.len() - 1].time;
        let mut counts = (0u64, 0u64, 0u64, 0u64);
        let mut it = events.iter().peekable();
        for i in 0..samples {
            let t = t_end * i as f64 / (samples - 1) as f64;
            while let Some(ev) = it.peek() {
                if ev.time <= t {
                    match ev.kind {
                        EventKind::Join { .. } => counts.0 += 1,
                        EventKind::Follow { .. } => counts.1 += 1,
                        EventKind::Post { .. } => counts.2 += 1,
                        EventKind::Repost { .. } => counts.3 += 1,
                    }
                    it.next();
                } else {
                    break;
                }
            }
            growth.push(GrowthPoint {
                time: t,
                users: counts.0,
                links: counts.1,
                posts: counts.2,
                reposts: counts.3,
            });
        }
    }
    SummaryStats {
        growth,
        in_degree_hist: degree_histogram(state, true),
        out_degree_hist: degree_histogram(state, false),
    }
}

fn degree_histogram(state: &NetworkState, in_degree: bool) -> Vec<(u32, u32)> {
    let mut map: BTreeMap<u32, u32> = BTreeMap::new();
    for u in 0..state.user_count() {
        let uid = UserId(u as u32);
        let d = if in_degree {
            state.in_degree(uid)
        } else {
            state.out_degree(uid)
        };
        *map.entry(d).or_insert(0) += 1;
    }
    map.into_iter().collect()
}

/// Collapse an exact degree histogram into logarithmic bins with the given
/// base (> 1). Degree zero keeps its own bin.
pub fn log_bin_histogram(hist: &[(u32, u32)], base: f64) -> Vec<(u32, u32, u32)> {
    assert!(base > 1.0);
    let mut out: Vec<(u32, u32, u32)> = Vec::new();
    let mut bounds: Vec<(u32, u32)> = alloc::vec![(0, 0)];
    let mut lo = 1u32;
    let max_degree = hist.iter().map(|&(d, _)| d).max().unwrap_or(0);
    while lo <= max_degree {
        let hi_f = crate::math::floor(lo as f64 * base);
        let hi = (hi_f as u32).max(lo);
        bounds.push((lo, hi));
        lo = hi + 1;
    }
    for (lo, hi) in bounds {
        let count: u32 = hist
            .iter()
            .filter(|&&(d, _)| d >= lo && d <= hi)
            .map(|&(_, c)| c)
            .sum();
        if count > 0 {
            out.push((lo, hi, count));
        }
    }
    out
}

/// Mechanism groups for link-efficiency summaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EfficiencyGroup {
    Grandparent,
    Origin,
    /// Grandparent or origin.
    Shortcut,
    /// Triadic and not a shortcut.
    TriadicOnly,
    All,
}

impl EfficiencyGroup {
    pub const ALL: [EfficiencyGroup; 5] = [
        EfficiencyGroup::Grandparent,
        EfficiencyGroup::Origin,
        EfficiencyGroup::Shortcut,
        EfficiencyGroup::TriadicOnly,
        EfficiencyGroup::All,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EfficiencyGroup::Grandparent => "grandparent",
            EfficiencyGroup::Origin => "origin",
            EfficiencyGroup::Shortcut => "shortcut",
            EfficiencyGroup::TriadicOnly => "triadic-only",
            EfficiencyGroup::All => "all",
        }
    }

    fn contains(self, ctx: &LinkContext) -> bool {
        match self {
            EfficiencyGroup::Grandparent => ctx.is_g,
            EfficiencyGroup::Origin => ctx.is_o,
            EfficiencyGroup::Shortcut => ctx.is_guo,
            EfficiencyGroup::TriadicOnly => ctx.is_tri && !ctx.is_guo,
            EfficiencyGroup::All => true,
        }
    }
}

/// Per-link efficiency: traffic through the edge per unit time alive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEfficiency {
    pub link_index: u64,
    pub eta_seen: f64,
    pub eta_repost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyReport {
    pub per_link: Vec<LinkEfficiency>,
    /// Links created exactly at the horizon, excluded from the report.
    pub excluded: usize,
    /// Per group: summaries of eta_seen and eta_repost; None when the group
    /// is empty.
    pub groups: Vec<(EfficiencyGroup, Option<Summary>, Option<Summary>)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyError {
    pub link_index: u64,
    pub created_time: f64,
    pub horizon: f64,
}

impl fmt::Display for EfficiencyError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "link {} created at {} lies beyond the horizon {}",
            self.link_index, self.created_time, self.horizon
        )
    }
}

/// Per-link seen/repost efficiency over the window from link creation to
/// `horizon`, grouped by mechanism. Links created at exactly `horizon` are
/// excluded; a link created after it is an error.
pub fn link_efficiency(
    state: &NetworkState,
    contexts: &[LinkContext],
    horizon: f64,
) -> Result<EfficiencyReport, EfficiencyError> {
    assert_eq!(state.edges().len(), contexts.len());
    let mut per_link = Vec::new();
    let mut excluded = 0usize;
    let mut group_seen: Vec<Vec<f64>> =
        (0..EfficiencyGroup::ALL.len()).map(|_| Vec::new()).collect();
    let mut group_repost: Vec<Vec<f64>> =
        (0..EfficiencyGroup::ALL.len()).map(|_| Vec::new()).collect();

    for (edge, ctx) in state.edges().iter().zip(contexts) {
        if edge.created_time > horizon {
            return Err(EfficiencyError {
                link_index: ctx.link_index,
                created_time: edge.created_time,
                horizon,
            });
        }
        let dt = horizon - edge.created_time;
        if dt == 0.0 {
            excluded += 1;
            continue;
        }
        let eff = LinkEfficiency {
            link_index: ctx.link_index,
            eta_seen: edge.w_seen as f64 / dt,
            eta_repost: edge.w_repost as f64 / dt,
        };
        per_link.push(eff);
        for (gi, group) in EfficiencyGroup::ALL.iter().enumerate() {
            if group.contains(ctx) {
                group_seen[gi].push(eff.eta_seen);
                group_repost[gi].push(eff.eta_repost);
            }
        }
    }

    let groups = EfficiencyGroup::ALL
        .iter()
        .enumerate()
        .map(|(gi, &g)| {
            (
                g,
                Summary::from_values(&group_seen[gi]),
                Summary::from_values(&group_repost[gi]),
            )
        })
        .collect();

    Ok(EfficiencyReport {
        per_link,
        excluded,
        groups,
    })
}

// ---------------------------------------------------------------------------
// LinkContext interchange format: tab-separated, one row per follow, `#`
// header row. This file is the contract between replay and the inference
// modules.

pub const CONTEXT_HEADER: &str = "# link_index\tcreator\ttarget\tk\tpool\tn_g\tn_o\tn_tri\tis_g\tis_o\tis_tri\tseen_from_target\trank_pct_g\trank_pct_o\tn_guo\tis_guo\trank_tie_g\trank_tie_o";

/// Serialize contexts to the interchange format.
pub fn write_contexts(contexts: &[LinkContext]) -> String {
    let mut out = String::new();
    out.push_str(CONTEXT_HEADER);
    out.push('\n');
    for c in contexts {
        let opt_f = |v: Option<f64>| match v {
            Some(x) => format!("{x}"),
            None => String::from("-"),
        };
        let opt_u = |v: Option<u32>| match v {
            Some(x) => format!("{x}"),
            None => String::from("-"),
        };
        out.push_str(&format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
            c.link_index,
            c.creator,
            c.target,
            c.k,
            c.pool,
            c.n_g,
            c.n_o,
            c.n_tri,
            c.is_g as u8,
            c.is_o as u8,
            c.is_tri as u8,
            c.seen_from_target,
            opt_f(c.rank_pct_g),
            opt_f(c.rank_pct_o),
            c.n_guo,
            c.is_guo as u8,
            opt_u(c.rank_tie_g),
            opt_u(c.rank_tie_o),
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContextParseError {
    pub line: usize,
    pub detail: String,
}

impl fmt::Display for ContextParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.detail)
    }
}

/// Parse the interchange format back into contexts.
pub fn parse_contexts(input: &str) -> Result<Vec<LinkContext>, ContextParseError> {
    let mut out = Vec::new();
    for (lineno0, raw) in input.lines().enumerate() {
        let lineno = lineno0 + 1;
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 18 {
            return Err(ContextParseError {
                line: lineno,
                detail: format!("expected 18 fields, got {}", fields.len()),
            });
        }
        let err = |what: &str| ContextParseError {
            line: lineno,
            detail: format!("unparseable {what}"),
        };
        let int = |i: usize, what: &str| -> Result<u64, ContextParseError> {
            fields[i].parse().map_err(|_| err(what))
        };
        let flag = |i: usize, what: &str| -> Result<bool, ContextParseError> {
            match fields[i] {
                "0" => Ok(false),
                "1" => Ok(true),
                _ => Err(err(what)),
            }
        };
        let opt_f = |i: usize, what: &str| -> Result<Option<f64>, ContextParseError> {
            if fields[i] == "-" {
                Ok(None)
            } else {
                fields[i].parse().map(Some).map_err(|_| err(what))
            }
        };
        let opt_u = |i: usize, what: &str| -> Result<Option<u32>, ContextParseError> {
            if fields[i] == "-" {
                Ok(None)
            } else {
                fields[i].parse().map(Some).map_err(|_| err(what))
            }
        };
        out.push(LinkContext {
            link_index: int(0, "link_index")?,
            creator: UserId(int(1, "creator")? as u32),
            target: UserId(int(2, "target")? as u32),
            k: int(3, "k")? as u32,
            pool: int(4, "pool")?,
            n_g: int(5, "n_g")? as u32,
            n_o: int(6, "n_o")? as u32,
            n_tri: int(7, "n_tri")? as u32,
            is_g: flag(8, "is_g")?,
            is_o: flag(9, "is_o")?,
            is_tri: flag(10, "is_tri")?,
            seen_from_target: int(11, "seen_from_target")? as u32,
            rank_pct_g: opt_f(12, "rank_pct_g")?,
            rank_pct_o: opt_f(13, "rank_pct_o")?,
            n_guo: int(14, "n_guo")? as u32,
            is_guo: flag(15, "is_guo")?,
            rank_tie_g: opt_u(16, "rank_tie_g")?,
            rank_tie_o: opt_u(17, "rank_tie_o")?,
        });
    }
    Ok(out)
}
