//! Synthetic event logs under a known link-creation strategy mixture.
//!
//! Every follow event picks a strategy (traffic shortcut, triadic closure,
//! or random) according to the configured mixture, then samples a target
//! uniformly from that strategy's candidate set — the exact generative
//! counterpart of the likelihood model, so fitted parameters can be checked
//! against the planted ones. When the sampled strategy has no candidates
//! the follow falls back to a random target and the fallback is recorded in
//! the trace.
//!
//! The posting side is deliberately simple: posts pick a random author,
//! reposts pick a random (user, feed entry) pair from a sliding window of
//! recently received messages. Reposting received copies is what builds
//! cascades deep enough for grandparents to exist.

use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::event::{Event, EventKind, MessageId, UserId};
use crate::math;
use crate::replay::{NetworkState, ReplayOptions};
use crate::rng::Rng;

/// Point on the strategy simplex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyMix {
    pub traffic: f64,
    pub structure: f64,
    pub random: f64,
}

impl StrategyMix {
    /// Build from the two free coordinates; the random share is the rest.
    pub fn new(traffic: f64, structure: f64) -> Result<StrategyMix, ConfigError> {
        let mix = StrategyMix {
            traffic,
            structure,
            random: 1.0 - traffic - structure,
        };
        mix.validate()?;
        Ok(mix)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let parts = [self.traffic, self.structure, self.random];
        if parts.iter().any(|p| !p.is_finite() || *p < -1e-9 || *p > 1.0 + 1e-9) {
            return Err(ConfigError::BadMix(*self));
        }
        let sum: f64 = parts.iter().sum();
        if math::abs(sum - 1.0) > 1e-9 {
            return Err(ConfigError::BadMix(*self));
        }
        Ok(())
    }
}

/// Which shortcut candidates the traffic strategy draws from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShortcutFlavor {
    Grandparent,
    Origin,
    /// Grandparent-or-origin union.
    #[default]
    Either,
}

impl ShortcutFlavor {
    pub fn as_str(self) -> &'static str {
        match self {
            ShortcutFlavor::Grandparent => "g",
            ShortcutFlavor::Origin => "o",
            ShortcutFlavor::Either => "guo",
        }
    }
}

/// Switch the mixture once the creator's in-degree reaches a threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeSwitch {
    pub at_in_degree: u32,
    pub mix: StrategyMix,
}

/// A planted population cluster: users joining the system draw their
/// personal mixture from these, weighted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixCluster {
    pub weight: f64,
    pub mix: StrategyMix,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRates {
    pub join: f64,
    pub post: f64,
    pub repost: f64,
    pub follow: f64,
}

impl Default for EventRates {
    fn default() -> Self {
        EventRates {
            join: 0.04,
            post: 0.28,
            repost: 0.28,
            follow: 0.40,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorConfig {
    pub seed: u64,
    /// Total number of events to emit.
    pub n_events: u64,
    /// Users joined up front (as the first events), before rate-driven
    /// sampling starts. Keeps early candidate sets from being empty for
    /// every late joiner.
    pub seed_users: u32,
    /// Uniform random follow edges created right after the seed users,
    /// labeled `seed` in the trace. Warms the graph so mixture-driven
    /// follows rarely find empty candidate sets.
    pub seed_edges: u32,
    pub rates: EventRates,
    pub mix: StrategyMix,
    pub shortcut_flavor: ShortcutFlavor,
    /// Bias the traffic strategy toward candidates with higher seen counts.
    pub traffic_weighting: bool,
    /// Weight exponent on the seen count when `traffic_weighting` is on.
    pub traffic_exponent: f64,
    /// How many recently received messages stay repostable per user.
    pub repost_feed_window: usize,
    /// Optional mixture switch by creator in-degree.
    pub regime_switch: Option<RegimeSwitch>,
    /// When non-empty, each joining user draws a personal mixture from
    /// these clusters instead of using `mix`.
    pub user_mix_clusters: Vec<MixCluster>,
    /// Rich-get-richer exponent on post authorship; 0 = uniform authors.
    pub post_concentration: f64,
    /// Rich-get-richer exponent on follow creators (weight (1+k)^g);
    /// 0 = uniform. Spreads in-degrees the way real follower networks do.
    pub follow_concentration: f64,
    pub trace_enabled: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            n_events: 1000,
            seed_users: 0,
            seed_edges: 0,
            rates: EventRates::default(),
            mix: StrategyMix {
                traffic: 0.0,
                structure: 0.0,
                random: 1.0,
            },
            shortcut_flavor: ShortcutFlavor::Either,
            traffic_weighting: false,
            traffic_exponent: 1.0,
            repost_feed_window: 20,
            regime_switch: None,
            user_mix_clusters: Vec::new(),
            post_concentration: 0.0,
            follow_concentration: 0.0,
            trace_enabled: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ConfigError {
    BadMix(StrategyMix),
    BadRates(EventRates),
    BadEventCount,
    BadFeedWindow,
    BadExponent(f64),
    BadClusterWeights,
    /// The generator could not make progress (e.g. zero join rate and no
    /// users to act).
    Stalled { emitted: u64 },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::BadMix(m) => write!(
                f,
                "strategy mix ({}, {}, {}) is not on the simplex",
                m.traffic, m.structure, m.random
            ),
            ConfigError::BadRates(r) => write!(
                f,
                "event rates ({}, {}, {}, {}) must be non-negative and sum to 1",
                r.join, r.post, r.repost, r.follow
            ),
            ConfigError::BadEventCount => write!(f, "n_events must be at least 1"),
            ConfigError::BadFeedWindow => write!(f, "repost_feed_window must be at least 1"),
            ConfigError::BadExponent(e) => write!(f, "traffic exponent {e} must be finite and >= 0"),
            ConfigError::BadClusterWeights => {
                write!(f, "cluster weights must be non-negative with positive sum")
            }
            ConfigError::Stalled { emitted } => {
                write!(f, "generator stalled after {emitted} events")
            }
        }
    }
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.mix.validate()?;
        let r = &self.rates;
        let parts = [r.join, r.post, r.repost, r.follow];
        if parts.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(ConfigError::BadRates(*r));
        }
        if math::abs(parts.iter().sum::<f64>() - 1.0) > 1e-9 {
            return Err(ConfigError::BadRates(*r));
        }
        if self.n_events == 0 {
            return Err(ConfigError::BadEventCount);
        }
        if self.repost_feed_window == 0 {
            return Err(ConfigError::BadFeedWindow);
        }
        if !self.traffic_exponent.is_finite() || self.traffic_exponent < 0.0 {
            return Err(ConfigError::BadExponent(self.traffic_exponent));
        }
        if !self.follow_concentration.is_finite() || self.follow_concentration < 0.0 {
            return Err(ConfigError::BadExponent(self.follow_concentration));
        }
        if !self.post_concentration.is_finite() || self.post_concentration < 0.0 {
            return Err(ConfigError::BadExponent(self.post_concentration));
        }
        if let Some(s) = &self.regime_switch {
            s.mix.validate()?;
        }
        if !self.user_mix_clusters.is_empty() {
            let sum: f64 = self.user_mix_clusters.iter().map(|c| c.weight).sum();
            if self.user_mix_clusters.iter().any(|c| c.weight < 0.0) || sum.is_nan() || sum <= 0.0 {
                return Err(ConfigError::BadClusterWeights);
            }
            for c in &self.user_mix_clusters {
                c.mix.validate()?;
            }
        }
        Ok(())
    }
}

/// Ground-truth label for one follow event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RealizedStrategy {
    Traffic,
    Structure,
    Random,
    /// Traffic was drawn but the shortcut candidate set was empty.
    FallbackFromTraffic,
    /// Structure was drawn but the triadic candidate set was empty.
    FallbackFromStructure,
    /// Warm-up edge created before mixture-driven sampling began.
    Seed,
}

impl RealizedStrategy {
    pub fn as_str(self) -> &'static str {
        match self {
            RealizedStrategy::Traffic => "traffic",
            RealizedStrategy::Structure => "structure",
            RealizedStrategy::Random => "random",
            RealizedStrategy::FallbackFromTraffic => "fallback-from-traffic",
            RealizedStrategy::FallbackFromStructure => "fallback-from-structure",
            RealizedStrategy::Seed => "seed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    /// Event seq of the follow.
    pub seq: u64,
    /// 1-based follow counter.
    pub link_index: u64,
    pub label: RealizedStrategy,
}

/// A step that sampled an action which was impossible in the current state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SkipRecord {
    /// Index of the attempt (monotone, counts both emitted and skipped).
    pub step: u64,
    pub wanted: EventCategory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventCategory {
    Join,
    Post,
    Repost,
    Follow,
}

#[derive(Debug, Clone)]
pub struct GeneratorOutput {
    pub events: Vec<Event>,
    trace: Option<Vec<TraceRecord>>,
    pub skipped: Vec<SkipRecord>,
    /// Planted per-user mixtures: (user, cluster index, mix). Empty unless
    /// `user_mix_clusters` was configured.
    pub user_mixes: Vec<(UserId, usize, StrategyMix)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceDisabled;

impl fmt::Display for TraceDisabled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "generation ran with tracing disabled")
    }
}

impl GeneratorOutput {
    /// Per-follow realized-strategy labels, in follow order.
    pub fn trace(&self) -> Result<&[TraceRecord], TraceDisabled> {
        self.trace.as_deref().ok_or(TraceDisabled)
    }
}

/// Trace file format: `<follow_seq>\t<label>`, one row per follow.
pub fn write_trace(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for t in trace {
        out.push_str(&format!("{}\t{}\n", t.seq, t.label.as_str()));
    }
    out
}

const MAX_CONSECUTIVE_SKIPS: u64 = 1_000_000;
const PICK_ATTEMPTS: u32 = 16;

/// Generate a synthetic log. Deterministic in the config.
pub fn generate(config: &GeneratorConfig) -> Result<GeneratorOutput, ConfigError> {
    config.validate()?;

    let mut rng_kind = Rng::stream(config.seed, 1);
    let mut rng_act = Rng::stream(config.seed, 2);
    let mut rng_follow = Rng::stream(config.seed, 3);
    let mut rng_mix = Rng::stream(config.seed, 4);

    let mut state = NetworkState::new(ReplayOptions::default());
    let mut events: Vec<Event> = Vec::with_capacity(config.n_events as usize);
    let mut trace: Vec<TraceRecord> = Vec::new();
    let mut skipped: Vec<SkipRecord> = Vec::new();
    let mut user_mixes: Vec<(UserId, usize, StrategyMix)> = Vec::new();
    let mut personal_mix: Vec<StrategyMix> = Vec::new();

    // Per-user sliding feed of (message, direct source) pairs.
    let mut feeds: Vec<VecDeque<(MessageId, UserId)>> = Vec::new();
    let mut users_with_feed: Vec<UserId> = Vec::new();
    let mut next_message: u64 = 0;
    let mut step: u64 = 0;
    let mut consecutive_skips: u64 = 0;

    let rate_weights = [
        config.rates.join,
        config.rates.post,
        config.rates.repost,
        config.rates.follow,
    ];

    while (events.len() as u64) < config.n_events && (events.len() as u32) < config.seed_users {
        let seq = events.len() as u64;
        let user = UserId(state.user_count() as u32);
        if !config.user_mix_clusters.is_empty() {
            let weights: Vec<f64> = config.user_mix_clusters.iter().map(|c| c.weight).collect();
            let idx = rng_mix.weighted_index(&weights).unwrap();
            let mix = config.user_mix_clusters[idx].mix;
            personal_mix.push(mix);
            user_mixes.push((user, idx, mix));
        }
        let ev = Event {
            seq,
            time: seq as f64,
            kind: EventKind::Join { user },
        };
        state.apply(&ev);
        feeds.push(VecDeque::new());
        events.push(ev);
    }

    let mut seed_edges_left = config.seed_edges;
    while seed_edges_left > 0 && (events.len() as u64) < config.n_events {
        seed_edges_left -= 1;
        let mut creator = None;
        for _ in 0..PICK_ATTEMPTS {
            if state.user_count() < 2 {
                break;
            }
            let c = UserId(rng_follow.below(state.user_count() as u64) as u32);
            if state.null_pool_size(c) >= 1 {
                creator = Some(c);
                break;
            }
        }
        let Some(creator) = creator else { break };
        let target = random_target(&state, creator, &mut rng_follow);
        let seq = events.len() as u64;
        if config.trace_enabled {
            trace.push(TraceRecord {
                seq,
                link_index: state.n_follows() + 1,
                label: RealizedStrategy::Seed,
            });
        }
        let ev = Event {
            seq,
            time: seq as f64,
            kind: EventKind::Follow { creator, target },
        };
        state.apply(&ev);
        events.push(ev);
    }

    while (events.len() as u64) < config.n_events {
        if consecutive_skips >= MAX_CONSECUTIVE_SKIPS {
            return Err(ConfigError::Stalled {
                emitted: events.len() as u64,
            });
        }
        step += 1;
        let seq = events.len() as u64;
        let time = seq as f64;
        let category = match rng_kind.weighted_index(&rate_weights).unwrap() {
            0 => EventCategory::Join,
            1 => EventCategory::Post,
            2 => EventCategory::Repost,
            _ => EventCategory::Follow,
        };

        let skip = |skipped: &mut Vec<SkipRecord>, consecutive: &mut u64| {
            skipped.push(SkipRecord {
                step,
                wanted: category,
            });
            *consecutive += 1;
        };

        match category {
            EventCategory::Join => {
                let user = UserId(state.user_count() as u32);
                if !config.user_mix_clusters.is_empty() {
                    let weights: Vec<f64> =
                        config.user_mix_clusters.iter().map(|c| c.weight).collect();
                    let idx = rng_mix.weighted_index(&weights).unwrap();
                    let mix = config.user_mix_clusters[idx].mix;
                    personal_mix.push(mix);
                    user_mixes.push((user, idx, mix));
                }
                let ev = Event {
                    seq,
                    time,
                    kind: EventKind::Join { user },
                };
                state.apply(&ev);
                feeds.push(VecDeque::new());
                events.push(ev);
            }
            EventCategory::Post => {
                if state.user_count() == 0 {
                    skip(&mut skipped, &mut consecutive_skips);
                    continue;
                }
                let author = if config.post_concentration > 0.0 {
                    let weights: Vec<f64> = (0..state.user_count())
                        .map(|u| {
                            math::powf(
                                1.0 + state.posts_by(UserId(u as u32)) as f64,
                                config.post_concentration,
                            )
                        })
                        .collect();
                    UserId(rng_act.weighted_index(&weights).unwrap() as u32)
                } else {
                    UserId(rng_act.below(state.user_count() as u64) as u32)
                };
                let message = MessageId(next_message);
                next_message += 1;
                let ev = Event {
                    seq,
                    time,
                    kind: EventKind::Post { author, message },
                };
                state.apply(&ev);
                push_feeds(
                    &state,
                    &mut feeds,
                    &mut users_with_feed,
                    author,
                    message,
                    config.repost_feed_window,
                );
                events.push(ev);
            }
            EventCategory::Repost => {
                let mut done = false;
                for _ in 0..PICK_ATTEMPTS {
                    if users_with_feed.is_empty() {
                        break;
                    }
                    let user = *rng_act.pick(&users_with_feed);
                    let feed = &feeds[user.index()];
                    if feed.is_empty() {
                        continue;
                    }
                    let (message, source) =
                        feed[rng_act.below(feed.len() as u64) as usize];
                    if state.holds(message, user) {
                        continue;
                    }
                    let ev = Event {
                        seq,
                        time,
                        kind: EventKind::Repost {
                            user,
                            message,
                            parent: source,
                        },
                    };
                    state.apply(&ev);
                    push_feeds(
                        &state,
                        &mut feeds,
                        &mut users_with_feed,
                        user,
                        message,
                        config.repost_feed_window,
                    );
                    events.push(ev);
                    done = true;
                    break;
                }
                if !done {
                    skip(&mut skipped, &mut consecutive_skips);
                    continue;
                }
            }
            EventCategory::Follow => {
                let creator = if config.follow_concentration > 0.0 && state.user_count() >= 2 {
                    let weights: Vec<f64> = (0..state.user_count())
                        .map(|u| {
                            let u = UserId(u as u32);
                            if state.null_pool_size(u) >= 1 {
                                math::powf(
                                    1.0 + state.in_degree(u) as f64,
                                    config.follow_concentration,
                                )
                            } else {
                                0.0
                            }
                        })
                        .collect();
                    rng_follow.weighted_index(&weights).map(|u| UserId(u as u32))
                } else {
                    let mut found = None;
                    for _ in 0..PICK_ATTEMPTS {
                        if state.user_count() < 2 {
                            break;
                        }
                        let c = UserId(rng_follow.below(state.user_count() as u64) as u32);
                        if state.null_pool_size(c) >= 1 {
                            found = Some(c);
                            break;
                        }
                    }
                    found
                };
                let Some(creator) = creator else {
                    skip(&mut skipped, &mut consecutive_skips);
                    continue;
                };
                let mix = if !personal_mix.is_empty() {
                    personal_mix[creator.index()]
                } else if let Some(switch) = &config.regime_switch {
                    if state.in_degree(creator) >= switch.at_in_degree {
                        switch.mix
                    } else {
                        config.mix
                    }
                } else {
                    config.mix
                };
                let (target, label) =
                    pick_follow_target(&state, creator, &mix, config, &mut rng_follow);
                if config.trace_enabled {
                    trace.push(TraceRecord {
                        seq,
                        link_index: state.n_follows() + 1,
                        label,
                    });
                }
                let ev = Event {
                    seq,
                    time,
                    kind: EventKind::Follow { creator, target },
                };
                state.apply(&ev);
                events.push(ev);
            }
        }
        consecutive_skips = 0;
    }

    Ok(GeneratorOutput {
        events,
        trace: if config.trace_enabled { Some(trace) } else { None },
        skipped,
        user_mixes,
    })
}

fn push_feeds(
    state: &NetworkState,
    feeds: &mut [VecDeque<(MessageId, UserId)>],
    users_with_feed: &mut Vec<UserId>,
    holder: UserId,
    message: MessageId,
    window: usize,
) {
    for &f in state.followers(holder) {
        let feed = &mut feeds[f.index()];
        if feed.is_empty() {
            users_with_feed.push(f);
        }
        feed.push_back((message, holder));
        if feed.len() > window {
            feed.pop_front();
        }
    }
}

fn pick_follow_target(
    state: &NetworkState,
    creator: UserId,
    mix: &StrategyMix,
    config: &GeneratorConfig,
    rng: &mut Rng,
) -> (UserId, RealizedStrategy) {
    let weights = [mix.traffic, mix.structure, mix.random];
    let strategy = rng.weighted_index(&weights).unwrap_or(2);
    match strategy {
        0 => {
            let cands = match config.shortcut_flavor {
                ShortcutFlavor::Grandparent => state.grandparent_candidates(creator),
                ShortcutFlavor::Origin => state.origin_candidates(creator),
                ShortcutFlavor::Either => state.shortcut_candidates(creator),
            };
            if cands.is_empty() {
                (
                    random_target(state, creator, rng),
                    RealizedStrategy::FallbackFromTraffic,
                )
            } else if config.traffic_weighting {
                let w: Vec<f64> = cands
                    .iter()
                    .map(|&(_, c)| math::powf(c as f64, config.traffic_exponent))
                    .collect();
                let idx = rng.weighted_index(&w).unwrap_or(0);
                (cands[idx].0, RealizedStrategy::Traffic)
            } else {
                (rng.pick(&cands).0, RealizedStrategy::Traffic)
            }
        }
        1 => {
            let cands = state.triadic_candidates(creator);
            if cands.is_empty() {
                (
                    random_target(state, creator, rng),
                    RealizedStrategy::FallbackFromStructure,
                )
            } else {
                (*rng.pick(&cands), RealizedStrategy::Structure)
            }
        }
        _ => (random_target(state, creator, rng), RealizedStrategy::Random),
    }
}

// Uniform draw from the null pool (joined, not self, not followed).
// The caller guarantees the pool is non-empty.
fn random_target(state: &NetworkState, creator: UserId, rng: &mut Rng) -> UserId {
    loop {
        let t = UserId(rng.below(state.user_count() as u64) as u32);
        if t != creator && !state.follows(creator, t) {
            return t;
        }
    }
}
