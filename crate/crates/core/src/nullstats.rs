//! Null-model statistics over link contexts.
//!
//! The null hypothesis: every follow picks its target uniformly among the
//! users not already followed by the creator. Under it, the chance that
//! link `l` lands on a mechanism candidate is `n_mech(l) / pool(l)`, the
//! observed count of mechanism links is a sum of independent Bernoulli
//! draws, and the standardized deviation is asymptotically standard normal.
//! This module computes those probabilities, the z-scores (globally and
//! stratified by creator in-degree), the Lyapunov-condition diagnostic that
//! justifies the normal approximation, and the rank-percentile bias of
//! chosen shortcut targets.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::replay::LinkContext;

/// The three link-creation mechanisms tested against the null.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mechanism {
    Grandparent,
    Origin,
    Triadic,
}

impl Mechanism {
    pub const ALL: [Mechanism; 3] = [
        Mechanism::Grandparent,
        Mechanism::Origin,
        Mechanism::Triadic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Mechanism::Grandparent => "grandparent",
            Mechanism::Origin => "origin",
            Mechanism::Triadic => "triadic",
        }
    }

    pub fn indicator(self, ctx: &LinkContext) -> bool {
        match self {
            Mechanism::Grandparent => ctx.is_g,
            Mechanism::Origin => ctx.is_o,
            Mechanism::Triadic => ctx.is_tri,
        }
    }

    pub fn candidate_count(self, ctx: &LinkContext) -> u32 {
        match self {
            Mechanism::Grandparent => ctx.n_g,
            Mechanism::Origin => ctx.n_o,
            Mechanism::Triadic => ctx.n_tri,
        }
    }
}

impl fmt::Display for Mechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Why a single link has no null probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbabilityError {
    /// Pool below 1: the link is excluded from statistics, not fatal.
    PoolTooSmall,
    /// More candidates than pool members: inconsistent data, fatal.
    CountExceedsPool { count: u32, pool: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NullStatsError {
    /// A link had more mechanism candidates than pool members.
    Inconsistent {
        link_index: u64,
        count: u32,
        pool: u64,
    },
    /// No context had a defined probability.
    NoUsableContexts,
    /// Fewer usable contexts than the operation needs.
    NotEnoughContexts { needed: usize, got: usize },
    /// Rank bias is defined for shortcut mechanisms only.
    NoRankForTriadic,
}

impl fmt::Display for NullStatsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NullStatsError::Inconsistent {
                link_index,
                count,
                pool,
            } => write!(
                f,
                "link {link_index}: {count} candidates exceed pool {pool}"
            ),
            NullStatsError::NoUsableContexts => write!(f, "no usable contexts"),
            NullStatsError::NotEnoughContexts { needed, got } => {
                write!(f, "needed {needed} usable contexts, got {got}")
            }
            NullStatsError::NoRankForTriadic => {
                write!(f, "rank bias applies to grandparent/origin mechanisms only")
            }
        }
    }
}

/// Chance of hitting a mechanism candidate under the null:
/// candidates / pool.
pub fn null_probability(ctx: &LinkContext, mechanism: Mechanism) -> Result<f64, ProbabilityError> {
    let count = mechanism.candidate_count(ctx);
    if ctx.pool < 1 {
        return Err(ProbabilityError::PoolTooSmall);
    }
    if count as u64 > ctx.pool {
        return Err(ProbabilityError::CountExceedsPool {
            count,
            pool: ctx.pool,
        });
    }
    Ok(count as f64 / ctx.pool as f64)
}

/// Null-model test summary for one mechanism.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZReport {
    pub mechanism: Mechanism,
    /// Observed number of mechanism links.
    pub s: u64,
    /// Expected number under the null.
    pub e: f64,
    pub sigma: f64,
    /// None when sigma is zero (all probabilities 0 or 1).
    pub z: Option<f64>,
    /// Two-sided normal p-value, when z is defined.
    pub p_value: Option<f64>,
    /// Links with pool >= 1 entering the sums.
    pub n_links_used: usize,
    /// Links excluded for an undefined probability.
    pub n_links_excluded: usize,
}

/// z-score of a mechanism over a context sequence.
pub fn z_score(contexts: &[LinkContext], mechanism: Mechanism) -> Result<ZReport, NullStatsError> {
    let mut s = 0u64;
    let mut e = 0.0f64;
    let mut var = 0.0f64;
    let mut used = 0usize;
    let mut excluded = 0usize;
    for ctx in contexts {
        match null_probability(ctx, mechanism) {
            Ok(p) => {
                used += 1;
                if mechanism.indicator(ctx) {
                    s += 1;
                }
                e += p;
                var += p * (1.0 - p);
            }
            Err(ProbabilityError::PoolTooSmall) => excluded += 1,
            Err(ProbabilityError::CountExceedsPool { count, pool }) => {
                return Err(NullStatsError::Inconsistent {
                    link_index: ctx.link_index,
                    count,
                    pool,
                })
            }
        }
    }
    if used == 0 {
        return Err(NullStatsError::NoUsableContexts);
    }
    let sigma = math::sqrt(var);
    let z = if sigma > 0.0 {
        Some((s as f64 - e) / sigma)
    } else {
        None
    };
    Ok(ZReport {
        mechanism,
        s,
        e,
        sigma,
        z,
        p_value: z.map(math::normal_p_two_sided),
        n_links_used: used,
        n_links_excluded: excluded,
    })
}

/// One prefix point of the Lyapunov-condition diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LyapunovPoint {
    /// Usable links in the prefix.
    pub n: usize,
    /// Sum of Bernoulli fourth central moments over sigma^4.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LyapunovCurve {
    pub points: Vec<LyapunovPoint>,
    pub final_ratio: f64,
    /// Maximum over the second half of the curve.
    pub max_tail: f64,
}

/// The central-limit condition diagnostic: the ratio must vanish as the
/// prefix grows for the z approximation to hold.
pub fn lyapunov_diagnostic(
    contexts: &[LinkContext],
    mechanism: Mechanism,
) -> Result<LyapunovCurve, NullStatsError> {
    let mut points = Vec::new();
    let mut sum_m4 = 0.0f64;
    let mut sum_var = 0.0f64;
    let mut n = 0usize;
    for ctx in contexts {
        let p = match null_probability(ctx, mechanism) {
            Ok(p) => p,
            Err(ProbabilityError::PoolTooSmall) => continue,
            Err(ProbabilityError::CountExceedsPool { count, pool }) => {
                return Err(NullStatsError::Inconsistent {
                    link_index: ctx.link_index,
                    count,
                    pool,
                })
            }
        };
        n += 1;
        // Bernoulli fourth central moment: p(1-p)(1 - 3p + 3p^2).
        sum_m4 += p * (1.0 - p) * (1.0 - 3.0 * p + 3.0 * p * p);
        sum_var += p * (1.0 - p);
        if sum_var > 0.0 {
            points.push(LyapunovPoint {
                n,
                ratio: sum_m4 / (sum_var * sum_var),
            });
        }
    }
    if n < 2 {
        return Err(NullStatsError::NotEnoughContexts { needed: 2, got: n });
    }
    if points.is_empty() {
        return Err(NullStatsError::NoUsableContexts);
    }
    let final_ratio = points[points.len() - 1].ratio;
    let tail_start = points.len() / 2;
    let max_tail = points[tail_start..]
        .iter()
        .map(|p| p.ratio)
        .fold(0.0f64, f64::max);
    Ok(LyapunovCurve {
        points,
        final_ratio,
        max_tail,
    })
}

/// How creator in-degrees map to strata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KBinning {
    /// One bin per exact in-degree.
    Exact,
    /// Fixed-width bins [0,w), [w,2w), ...
    Linear { width: u32 },
    /// Exact bins up to `exact_upto`, geometric bins above.
    ExactThenLog { exact_upto: u32, base: f64 },
}

impl Default for KBinning {
    fn default() -> Self {
        KBinning::ExactThenLog {
            exact_upto: 100,
            base: 1.3,
        }
    }
}

impl KBinning {
    // Inclusive bin bounds for an in-degree.
    fn bin_of(self, k: u32) -> (u32, u32) {
        match self {
            KBinning::Exact => (k, k),
            KBinning::Linear { width } => {
                let w = width.max(1);
                let lo = (k / w) * w;
                (lo, lo + w - 1)
            }
            KBinning::ExactThenLog { exact_upto, base } => {
                if k <= exact_upto {
                    (k, k)
                } else {
                    let mut lo = exact_upto + 1;
                    loop {
                        let hi = ((math::floor(lo as f64 * base)) as u32).max(lo);
                        if k <= hi {
                            return (lo, hi);
                        }
                        lo = hi + 1;
                    }
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KBinReport {
    pub k_lo: u32,
    pub k_hi: u32,
    pub report: ZReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZByDegree {
    pub mechanism: Mechanism,
    pub bins: Vec<KBinReport>,
    /// Bins left out for having fewer than `min_count` usable links.
    pub omitted_bins: usize,
    pub omitted_links: usize,
}

/// Stratified z-scores: one per in-degree bin with at least `min_count`
/// usable links.
pub fn z_by_indegree(
    contexts: &[LinkContext],
    mechanism: Mechanism,
    binning: KBinning,
    min_count: usize,
) -> Result<ZByDegree, NullStatsError> {
    let mut groups: BTreeMap<(u32, u32), Vec<&LinkContext>> = BTreeMap::new();
    for ctx in contexts {
        groups.entry(binning.bin_of(ctx.k)).or_default().push(ctx);
    }
    let mut bins = Vec::new();
    let mut omitted_bins = 0usize;
    let mut omitted_links = 0usize;
    for ((k_lo, k_hi), group) in groups {
        let usable = group
            .iter()
            .filter(|c| c.pool >= 1)
            .count();
        if usable < min_count.max(1) {
            omitted_bins += 1;
            omitted_links += group.len();
            continue;
        }
        let owned: Vec<LinkContext> = group.into_iter().cloned().collect();
        let report = z_score(&owned, mechanism)?;
        bins.push(KBinReport {
            k_lo,
            k_hi,
            report,
        });
    }
    Ok(ZByDegree {
        mechanism,
        bins,
        omitted_bins,
        omitted_links,
    })
}

/// One percentile bin of the rank-bias density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RankBin {
    pub pct_lo: f64,
    pub pct_hi: f64,
    /// Fraction of qualifying links whose rank interval overlaps this bin.
    pub mass: f64,
    /// mass / (bin width / 100); the histogram integrates to 1.
    pub density: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankBias {
    pub mechanism: Mechanism,
    pub n_links: usize,
    pub bins: Vec<RankBin>,
}

/// Density of the chosen target's seen-count rank percentile among the
/// mechanism candidates, over follows that picked a candidate out of at
/// least two. A link whose seen count ties `g` candidates spanning ranks
/// `[a, b]` spreads its unit mass uniformly over the percentile interval
/// `(100(a-1)/n, 100b/n]`, which makes a uniform chooser produce an exactly
/// flat expected histogram regardless of ties.
pub fn rank_bias(
    contexts: &[LinkContext],
    mechanism: Mechanism,
    bin_width_pct: f64,
) -> Result<RankBias, NullStatsError> {
    let width = if bin_width_pct > 0.0 && bin_width_pct <= 100.0 {
        bin_width_pct
    } else {
        5.0
    };
    let pick = |ctx: &LinkContext| -> Option<(f64, u32, u32)> {
        match mechanism {
            Mechanism::Grandparent => match (ctx.rank_pct_g, ctx.rank_tie_g) {
                (Some(p), Some(t)) if ctx.is_g && ctx.n_g >= 2 => Some((p, t, ctx.n_g)),
                _ => None,
            },
            Mechanism::Origin => match (ctx.rank_pct_o, ctx.rank_tie_o) {
                (Some(p), Some(t)) if ctx.is_o && ctx.n_o >= 2 => Some((p, t, ctx.n_o)),
                _ => None,
            },
            Mechanism::Triadic => None,
        }
    };
    if mechanism == Mechanism::Triadic {
        return Err(NullStatsError::NoRankForTriadic);
    }

    let n_bins = (math::floor(100.0 / width) as usize).max(1);
    let mut mass = alloc::vec![0.0f64; n_bins];
    let mut n_links = 0usize;
    for ctx in contexts {
        let Some((pct, ties, n_cand)) = pick(ctx) else {
            continue;
        };
        n_links += 1;
        let n = n_cand as f64;
        // Recover the tie interval (in rank units) from the mid-rank pct.
        let mid_rank = pct * n / 100.0;
        let a = mid_rank - (ties as f64 - 1.0) / 2.0;
        let b = mid_rank + (ties as f64 - 1.0) / 2.0;
        let lo_pct = 100.0 * (a - 1.0) / n;
        let hi_pct = 100.0 * b / n;
        let span = hi_pct - lo_pct;
        for (i, m) in mass.iter_mut().enumerate() {
            let bin_lo = i as f64 * width;
            let bin_hi = ((i + 1) as f64 * width).min(100.0);
            let overlap = (hi_pct.min(bin_hi) - lo_pct.max(bin_lo)).max(0.0);
            if overlap > 0.0 {
                *m += overlap / span;
            }
        }
    }
    if n_links == 0 {
        return Err(NullStatsError::NoUsableContexts);
    }
    let bins = mass
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let pct_lo = i as f64 * width;
            let pct_hi = ((i + 1) as f64 * width).min(100.0);
            let frac = m / n_links as f64;
            RankBin {
                pct_lo,
                pct_hi,
                mass: frac,
                density: frac / ((pct_hi - pct_lo) / 100.0),
            }
        })
        .collect();
    Ok(RankBias {
        mechanism,
        n_links,
        bins,
    })
}

/// CSV row helpers shared by the CLI.
pub fn zreport_csv_row(r: &ZReport) -> String {
    format!(
        "{},{},{:.6},{:.6},{},{},{},{}",
        r.mechanism.as_str(),
        r.s,
        r.e,
        r.sigma,
        r.z.map(|z| format!("{z:.6}")).unwrap_or_else(|| String::from("undefined")),
        r.p_value
            .map(|p| format!("{p:.6e}"))
            .unwrap_or_else(|| String::from("undefined")),
        r.n_links_used,
        r.n_links_excluded,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::UserId;
    use alloc::vec;

    fn ctx(link_index: u64, k: u32, pool: u64) -> LinkContext {
        LinkContext {
            link_index,
            creator: UserId(0),
            target: UserId(1),
            k,
            pool,
            n_g: 0,
            n_o: 0,
            n_tri: 0,
            n_guo: 0,
            is_g: false,
            is_o: false,
            is_tri: false,
            is_guo: false,
            seen_from_target: 0,
            rank_pct_g: None,
            rank_tie_g: None,
            rank_pct_o: None,
            rank_tie_o: None,
        }
    }

    #[test]
    fn probability_direct_substitution() {
        // link 10, creator in-degree 3: pool = 10 - 3 - 1 = 6, two candidates.
        let mut c = ctx(10, 3, 6);
        c.n_g = 2;
        let p = null_probability(&c, Mechanism::Grandparent).unwrap();
        assert!(math::abs(p - 2.0 / 6.0) < 1e-15);
        c.n_g = 0;
        assert_eq!(null_probability(&c, Mechanism::Grandparent), Ok(0.0));
        c.pool = 0;
        assert_eq!(
            null_probability(&c, Mechanism::Grandparent),
            Err(ProbabilityError::PoolTooSmall)
        );
        c.pool = 3;
        c.n_g = 5;
        assert!(matches!(
            null_probability(&c, Mechanism::Grandparent),
            Err(ProbabilityError::CountExceedsPool { .. })
        ));
    }

    #[test]
    fn z_closed_form() {
        // 100 links, each p = 1/2 and indicator 1: S=100, E=50, sigma=5, z=10.
        let mut contexts = Vec::new();
        for i in 0..100 {
            let mut c = ctx(i + 1, 0, 2);
            c.n_g = 1;
            c.is_g = true;
            contexts.push(c);
        }
        let r = z_score(&contexts, Mechanism::Grandparent).unwrap();
        assert_eq!(r.s, 100);
        assert!(math::abs(r.e - 50.0) < 1e-12);
        assert!(math::abs(r.sigma - 5.0) < 1e-12);
        assert!(math::abs(r.z.unwrap() - 10.0) < 1e-12);
        assert_eq!(r.n_links_used, 100);
    }

    #[test]
    fn z_zero_when_observed_matches_expected() {
        let mut a = ctx(1, 0, 2);
        a.n_g = 1;
        a.is_g = true;
        let mut b = ctx(2, 0, 2);
        b.n_g = 1;
        b.is_g = false;
        let r = z_score(&[a, b], Mechanism::Grandparent).unwrap();
        assert_eq!(r.s, 1);
        assert_eq!(r.z, Some(0.0));
    }

    #[test]
    fn z_flagged_undefined_when_sigma_zero() {
        // All probabilities zero: sigma = 0.
        let contexts = vec![ctx(1, 0, 5), ctx(2, 0, 5)];
        let r = z_score(&contexts, Mechanism::Grandparent).unwrap();
        assert_eq!(r.z, None);
        assert_eq!(r.p_value, None);
    }

    #[test]
    fn z_skips_links_without_pool() {
        let mut a = ctx(1, 0, 0); // excluded
        a.n_g = 0;
        let mut b = ctx(2, 0, 2);
        b.n_g = 1;
        b.is_g = true;
        let r = z_score(&[a, b], Mechanism::Grandparent).unwrap();
        assert_eq!(r.n_links_used, 1);
        assert_eq!(r.n_links_excluded, 1);
        assert!(z_score(&[ctx(1, 0, 0)], Mechanism::Grandparent).is_err());
    }

    #[test]
    fn incremental_sums_match_second_pass_batch() {
        let mut contexts = Vec::new();
        for i in 0..500u64 {
            let mut c = ctx(i + 1, (i % 5) as u32, 4 + i % 11);
            c.n_o = (i % 4) as u32;
            c.is_o = c.n_o > 0 && i % 7 == 0;
            contexts.push(c);
        }
        let report = z_score(&contexts, Mechanism::Origin).unwrap();
        // Second pass: collect probabilities first, then reduce.
        let ps: Vec<f64> = contexts
            .iter()
            .filter_map(|c| null_probability(c, Mechanism::Origin).ok())
            .collect();
        let e: f64 = ps.iter().sum();
        let var: f64 = ps.iter().map(|p| p * (1.0 - p)).sum();
        assert!(math::abs(report.e - e) <= 1e-9 * e.max(1.0));
        assert!(math::abs(report.sigma * report.sigma - var) <= 1e-9 * var.max(1.0));
    }

    #[test]
    fn z_invariant_under_permutation() {
        let mut contexts = Vec::new();
        for i in 0..200u64 {
            let mut c = ctx(i + 1, 0, 3 + (i % 7));
            c.n_g = (i % 3) as u32;
            c.is_g = i % 5 == 0 && c.n_g > 0;
            contexts.push(c);
        }
        let base = z_score(&contexts, Mechanism::Grandparent).unwrap();
        contexts.reverse();
        let rev = z_score(&contexts, Mechanism::Grandparent).unwrap();
        assert_eq!(base.s, rev.s);
        assert!(math::abs(base.e - rev.e) < 1e-9 * base.e.max(1.0));
        assert!(math::abs(base.z.unwrap() - rev.z.unwrap()) < 1e-9);
    }

    #[test]
    fn lyapunov_constant_half() {
        // p = 1/2 per link: ratio at n is 1/n, so 0.01 at n = 100.
        let mut contexts = Vec::new();
        for i in 0..100 {
            let mut c = ctx(i + 1, 0, 2);
            c.n_g = 1;
            contexts.push(c);
        }
        let curve = lyapunov_diagnostic(&contexts, Mechanism::Grandparent).unwrap();
        for p in &curve.points {
            assert!(math::abs(p.ratio - 1.0 / p.n as f64) < 1e-12);
        }
        assert!(math::abs(curve.final_ratio - 0.01) < 1e-12);
        assert!(
            lyapunov_diagnostic(&contexts[..1], Mechanism::Grandparent).is_err(),
            "needs at least two usable contexts"
        );
    }

    #[test]
    fn z_by_indegree_degenerate_binning_matches_global() {
        let mut contexts = Vec::new();
        for i in 0..50 {
            let mut c = ctx(i + 1, 0, 4);
            c.n_tri = 2;
            c.is_tri = i % 2 == 0;
            contexts.push(c);
        }
        let global = z_score(&contexts, Mechanism::Triadic).unwrap();
        let by_k = z_by_indegree(&contexts, Mechanism::Triadic, KBinning::Exact, 30).unwrap();
        assert_eq!(by_k.bins.len(), 1);
        assert_eq!(by_k.bins[0].k_lo, 0);
        assert_eq!(by_k.bins[0].report.s, global.s);
        assert_eq!(by_k.bins[0].report.z, global.z);
    }

    #[test]
    fn z_by_indegree_omits_thin_bins_and_sums_consistently() {
        let mut contexts = Vec::new();
        for i in 0..120u64 {
            let k = (i % 4) as u32; // k in {0,1,2,3}, 30 links each
            let mut c = ctx(i + 1, k, 5);
            c.n_g = 1 + (i % 2) as u32;
            c.is_g = i % 3 == 0;
            contexts.push(c);
        }
        // One extra link at k=9: below min_count, omitted.
        contexts.push({
            let mut c = ctx(121, 9, 5);
            c.n_g = 1;
            c
        });
        let by_k =
            z_by_indegree(&contexts, Mechanism::Grandparent, KBinning::Exact, 30).unwrap();
        assert_eq!(by_k.bins.len(), 4);
        assert_eq!(by_k.omitted_bins, 1);
        assert_eq!(by_k.omitted_links, 1);

        // With min_count 1 and exact bins, per-bin (S - E) sums to global.
        let all = z_by_indegree(&contexts, Mechanism::Grandparent, KBinning::Exact, 1).unwrap();
        let global = z_score(&contexts, Mechanism::Grandparent).unwrap();
        let sum: f64 = all
            .bins
            .iter()
            .map(|b| b.report.s as f64 - b.report.e)
            .sum();
        assert!(math::abs(sum - (global.s as f64 - global.e)) < 1e-9);
    }

    #[test]
    fn binning_bounds() {
        assert_eq!(KBinning::Exact.bin_of(7), (7, 7));
        assert_eq!(KBinning::Linear { width: 10 }.bin_of(75), (70, 79));
        let b = KBinning::default();
        assert_eq!(b.bin_of(100), (100, 100));
        let (lo, hi) = b.bin_of(101);
        assert!(lo == 101 && hi >= lo);
    }

    #[test]
    fn rank_bias_most_seen_target_concentrates_low() {
        // Target always the single most-seen of 20 candidates: rank 1,
        // percentile 5, all mass in the first width-5 bin.
        let mut contexts = Vec::new();
        for i in 0..40 {
            let mut c = ctx(i + 1, 0, 100);
            c.n_o = 20;
            c.is_o = true;
            c.rank_pct_o = Some(5.0);
            c.rank_tie_o = Some(1);
            contexts.push(c);
        }
        let rb = rank_bias(&contexts, Mechanism::Origin, 5.0).unwrap();
        assert_eq!(rb.n_links, 40);
        assert!(math::abs(rb.bins[0].mass - 1.0) < 1e-12);
        assert!(rb.bins[1..].iter().all(|b| b.mass == 0.0));
        // Density integrates to one.
        let total: f64 = rb
            .bins
            .iter()
            .map(|b| b.density * (b.pct_hi - b.pct_lo) / 100.0)
            .sum();
        assert!(math::abs(total - 1.0) < 1e-12);
    }

    #[test]
    fn rank_bias_spreads_ties_flat() {
        // All 4 candidates tied: the interval covers (0, 100] and the mass
        // spreads evenly over every bin.
        let mut c = ctx(1, 0, 100);
        c.n_g = 4;
        c.is_g = true;
        c.rank_pct_g = Some(100.0 * 2.5 / 4.0);
        c.rank_tie_g = Some(4);
        let rb = rank_bias(&[c], Mechanism::Grandparent, 25.0).unwrap();
        for b in &rb.bins {
            assert!(math::abs(b.mass - 0.25) < 1e-12, "bin {b:?}");
        }
    }

    #[test]
    fn rank_bias_requires_qualifying_contexts() {
        // Indicator set but only one candidate: not qualifying.
        let mut c = ctx(1, 0, 100);
        c.n_g = 1;
        c.is_g = true;
        c.rank_pct_g = Some(100.0);
        c.rank_tie_g = Some(1);
        assert_eq!(
            rank_bias(&[c], Mechanism::Grandparent, 5.0),
            Err(NullStatsError::NoUsableContexts)
        );
        assert_eq!(
            rank_bias(&[], Mechanism::Triadic, 5.0),
            Err(NullStatsError::NoRankForTriadic)
        );
    }
}
