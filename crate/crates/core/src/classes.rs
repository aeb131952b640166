//! Per-user strategy fits, EM clustering over the strategy simplex, and
//! structural/behavioral profiles of the resulting classes.
//!
//! Each user with enough follows gets their own combined-model fit; the
//! fitted (traffic, structure) coordinates are then clustered with a
//! Gaussian mixture. The random share is linearly dependent on the other
//! two, so EM runs in the two free coordinates. Model order is chosen by
//! cross validation on held-out log density.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::event::UserId;
use crate::generator::StrategyMix;
use crate::likelihood::{
    fit_combined, FitResult, GridSpec, LikelihoodError, ShortcutComponent,
};
use crate::math::{self, Summary};
use crate::replay::{LinkContext, NetworkState};
use crate::rng::Rng;

/// One user's maximum-likelihood strategy mixture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UserFit {
    pub user: UserId,
    /// Follow links created by this user.
    pub n_links: usize,
    pub mix: StrategyMix,
    pub loglik: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserFitReport {
    /// Ascending by user id.
    pub fits: Vec<UserFit>,
    /// Users with fewer than `min_links` follows.
    pub skipped_below_min: usize,
    /// Users whose links were unusable (no candidate pool).
    pub skipped_unusable: usize,
}

/// Group contexts by their creator, ascending by user id.
pub fn group_by_creator(contexts: &[LinkContext]) -> Vec<(UserId, Vec<LinkContext>)> {
    let mut map: BTreeMap<UserId, Vec<LinkContext>> = BTreeMap::new();
    for c in contexts {
        map.entry(c.creator).or_default().push(c.clone());
    }
    map.into_iter().collect()
}

/// Fit one user's links; None when the user is below `min_links` or the
/// links are unusable.
pub fn fit_user(
    user: UserId,
    contexts: &[LinkContext],
    min_links: usize,
    shortcut: ShortcutComponent,
    grid: GridSpec,
) -> Result<Option<UserFit>, LikelihoodError> {
    if contexts.len() < min_links {
        return Ok(None);
    }
    match fit_combined(contexts, shortcut, grid) {
        Ok(fit) => Ok(Some(user_fit_from(user, contexts.len(), &fit))),
        Err(LikelihoodError::NotEnoughContexts { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn user_fit_from(user: UserId, n_links: usize, fit: &FitResult) -> UserFit {
    UserFit {
        user,
        n_links,
        mix: StrategyMix {
            traffic: fit.p1,
            structure: fit.p2,
            random: (1.0 - fit.p1 - fit.p2).max(0.0),
        },
        loglik: fit.loglik,
    }
}

/// Independent per-user combined fits over everyone with at least
/// `min_links` follows.
pub fn fit_users(
    contexts: &[LinkContext],
    min_links: usize,
    shortcut: ShortcutComponent,
    grid: GridSpec,
) -> Result<UserFitReport, LikelihoodError> {
    let mut fits = Vec::new();
    let mut below = 0usize;
    let mut unusable = 0usize;
    for (user, group) in group_by_creator(contexts) {
        if group.len() < min_links {
            below += 1;
            continue;
        }
        match fit_user(user, &group, min_links, shortcut, grid)? {
            Some(fit) => fits.push(fit),
            None => unusable += 1,
        }
    }
    Ok(UserFitReport {
        fits,
        skipped_below_min: below,
        skipped_unusable: unusable,
    })
}

// ---------------------------------------------------------------------------
// Gaussian mixture EM in the (traffic, structure) plane.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmmComponent {
    pub weight: f64,
    pub mean: [f64; 2],
    /// Row-major 2x2 covariance.
    pub cov: [[f64; 2]; 2],
}

impl GmmComponent {
    fn log_pdf(&self, x: [f64; 2]) -> f64 {
        let det = self.cov[0][0] * self.cov[1][1] - self.cov[0][1] * self.cov[1][0];
        let inv = [
            [self.cov[1][1] / det, -self.cov[0][1] / det],
            [-self.cov[1][0] / det, self.cov[0][0] / det],
        ];
        let d = [x[0] - self.mean[0], x[1] - self.mean[1]];
        let quad = d[0] * (inv[0][0] * d[0] + inv[0][1] * d[1])
            + d[1] * (inv[1][0] * d[0] + inv[1][1] * d[1]);
        -core::f64::consts::LN_2 - ln_pi() - 0.5 * math::ln(det) - 0.5 * quad
    }
}

fn ln_pi() -> f64 {
    math::ln(core::f64::consts::PI)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmModel {
    pub components: Vec<GmmComponent>,
    pub train_ll: f64,
    /// Total log-likelihood after each iteration.
    pub ll_history: Vec<f64>,
    /// Components reseeded after emptying out.
    pub reseeded: usize,
    /// Components dropped after emptying twice.
    pub dropped: usize,
    /// A covariance had to be clamped to the regularization floor.
    pub regularized: bool,
}

impl GmmModel {
    /// Log density of a point under the mixture.
    pub fn log_density(&self, x: [f64; 2]) -> f64 {
        let lw: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                if c.weight > 0.0 {
                    math::ln(c.weight) + c.log_pdf(x)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        log_sum_exp(&lw)
    }

    /// Responsibilities of each component for a point; sums to one.
    pub fn responsibilities(&self, x: [f64; 2]) -> Vec<f64> {
        let lw: Vec<f64> = self
            .components
            .iter()
            .map(|c| {
                if c.weight > 0.0 {
                    math::ln(c.weight) + c.log_pdf(x)
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let norm = log_sum_exp(&lw);
        lw.iter().map(|&l| math::exp(l - norm)).collect()
    }

    /// Hard assignment: component with the highest responsibility, ties
    /// toward the lower index.
    pub fn assign(&self, x: [f64; 2]) -> usize {
        let resp = self.responsibilities(x);
        let mut best = 0usize;
        for (i, &r) in resp.iter().enumerate() {
            if r > resp[best] {
                best = i;
            }
        }
        best
    }
}

fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !m.is_finite() {
        return m;
    }
    let s: f64 = values.iter().map(|&v| math::exp(v - m)).sum();
    m + math::ln(s)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ClusterError {
    NotEnoughFits { needed: usize, got: usize },
    BadConfig(&'static str),
    /// Training log-likelihood decreased beyond tolerance.
    NotMonotone { iteration: usize, prev: f64, now: f64 },
}

impl fmt::Display for ClusterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterError::NotEnoughFits { needed, got } => {
                write!(f, "clustering needs {needed} fits, got {got}")
            }
            ClusterError::BadConfig(what) => write!(f, "bad cluster config: {what}"),
            ClusterError::NotMonotone {
                iteration,
                prev,
                now,
            } => write!(
                f,
                "EM log-likelihood decreased at iteration {iteration}: {prev} -> {now}"
            ),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterConfig {
    pub seed: u64,
    /// Inclusive model-order range tried by cross validation.
    pub k_min: usize,
    pub k_max: usize,
    pub folds: usize,
    /// EM restarts for the final model.
    pub restarts: usize,
    pub max_iterations: usize,
    /// Diagonal floor added to every covariance update.
    pub covariance_floor: f64,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            seed: 0,
            k_min: 1,
            k_max: 8,
            folds: 10,
            restarts: 5,
            max_iterations: 300,
            covariance_floor: 1e-6,
        }
    }
}

/// A fitted mixture component with its hard-assigned members.
#[derive(Debug, Clone, PartialEq)]
pub struct UserClass {
    pub label: String,
    pub weight: f64,
    pub mean_mix: StrategyMix,
    /// Covariance of (traffic, structure).
    pub covariance: [[f64; 2]; 2],
    /// Ascending by user id.
    pub members: Vec<UserId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterReport {
    pub chosen_k: usize,
    /// (k, mean held-out log density) per candidate order.
    pub cv_scores: Vec<(usize, f64)>,
    pub classes: Vec<UserClass>,
    pub model: GmmModel,
    /// (user, class index into `classes`) ascending by user id.
    pub assignments: Vec<(UserId, usize)>,
}

/// Centroids used to name classes when the chosen order is five, in
/// (traffic, structure) coordinates.
const REFERENCE_CLASSES: [(&str, [f64; 2]); 5] = [
    ("info", [0.52, 0.36]),
    ("friend", [0.00, 0.96]),
    ("cfrd", [0.01, 0.80]),
    ("mix", [0.07, 0.63]),
    ("rand", [0.09, 0.32]),
];

/// Cluster fitted users in the (traffic, structure) plane: model order by
/// cross validation, final model from the best of several restarts, hard
/// assignments by maximum responsibility. Deterministic given the seed.
pub fn cluster_users(
    fits: &[UserFit],
    config: &ClusterConfig,
) -> Result<ClusterReport, ClusterError> {
    if fits.len() < 10 {
        return Err(ClusterError::NotEnoughFits {
            needed: 10,
            got: fits.len(),
        });
    }
    if config.k_min < 1 || config.k_max < config.k_min {
        return Err(ClusterError::BadConfig("k range"));
    }
    if config.folds < 2 || config.folds > fits.len() {
        return Err(ClusterError::BadConfig("folds"));
    }
    if config.covariance_floor.is_nan() || config.covariance_floor <= 0.0 {
        return Err(ClusterError::BadConfig("covariance floor"));
    }

    let points: Vec<[f64; 2]> = fits
        .iter()
        .map(|f| [f.mix.traffic, f.mix.structure])
        .collect();

    // Deterministic fold split.
    let mut order: Vec<usize> = (0..points.len()).collect();
    let mut rng = Rng::stream(config.seed, 100);
    for i in (1..order.len()).rev() {
        let j = rng.below(i as u64 + 1) as usize;
        order.swap(i, j);
    }

    let mut cv_scores = Vec::new();
    let mut best_k = config.k_min;
    let mut best_score = f64::NEG_INFINITY;
    for k in config.k_min..=config.k_max {
        let mut total = 0.0f64;
        let mut held_out = 0usize;
        for fold in 0..config.folds {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (pos, &idx) in order.iter().enumerate() {
                if pos % config.folds == fold {
                    test.push(points[idx]);
                } else {
                    train.push(points[idx]);
                }
            }
            if train.len() < k || test.is_empty() {
                continue;
            }
            let mut em_rng = Rng::stream(config.seed, (k as u64) << 32 | fold as u64);
            let model = em_fit(&train, k, config, &mut em_rng)?;
            for &x in &test {
                total += model.log_density(x);
                held_out += 1;
            }
        }
        if held_out == 0 {
            continue;
        }
        let score = total / held_out as f64;
        cv_scores.push((k, score));
        if score > best_score + 1e-12 {
            best_score = score;
            best_k = k;
        }
    }

    // Final model: best training likelihood over restarts.
    let mut final_model: Option<GmmModel> = None;
    for r in 0..config.restarts.max(1) {
        let mut em_rng = Rng::stream(config.seed, (1u64 << 40) | r as u64);
        let model = em_fit(&points, best_k, config, &mut em_rng)?;
        let better = final_model
            .as_ref()
            .map(|m| model.train_ll > m.train_ll)
            .unwrap_or(true);
        if better {
            final_model = Some(model);
        }
    }
    let model = final_model.expect("at least one restart");

    let mut assignments: Vec<(UserId, usize)> = fits
        .iter()
        .zip(&points)
        .map(|(f, &x)| (f.user, model.assign(x)))
        .collect();
    assignments.sort_unstable_by_key(|&(u, _)| u);

    // Order classes by descending weight; remap assignments accordingly.
    let mut class_order: Vec<usize> = (0..model.components.len()).collect();
    class_order.sort_by(|&a, &b| {
        model.components[b]
            .weight
            .partial_cmp(&model.components[a].weight)
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    let mut rank_of = alloc::vec![0usize; model.components.len()];
    for (rank, &orig) in class_order.iter().enumerate() {
        rank_of[orig] = rank;
    }
    for a in assignments.iter_mut() {
        a.1 = rank_of[a.1];
    }

    let labels = class_labels(&class_order, &model);
    let mut classes: Vec<UserClass> = class_order
        .iter()
        .zip(labels)
        .map(|(&orig, label)| {
            let c = &model.components[orig];
            UserClass {
                label,
                weight: c.weight,
                mean_mix: StrategyMix {
                    traffic: c.mean[0],
                    structure: c.mean[1],
                    random: (1.0 - c.mean[0] - c.mean[1]).max(0.0),
                },
                covariance: c.cov,
                members: Vec::new(),
            }
        })
        .collect();
    for &(user, class) in &assignments {
        classes[class].members.push(user);
    }

    Ok(ClusterReport {
        chosen_k: model.components.len(),
        cv_scores,
        classes,
        model,
        assignments,
    })
}

// Names for the classes, in weight-rank order. With five components the
// names come from the nearest reference centroid (unique via best
// permutation); otherwise classes are numbered.
fn class_labels(class_order: &[usize], model: &GmmModel) -> Vec<String> {
    let k = class_order.len();
    if k == REFERENCE_CLASSES.len() {
        let cost = |perm: &[usize]| -> f64 {
            perm.iter()
                .enumerate()
                .map(|(i, &ref_idx)| {
                    let mean = model.components[class_order[i]].mean;
                    let r = REFERENCE_CLASSES[ref_idx].1;
                    let dx = mean[0] - r[0];
                    let dy = mean[1] - r[1];
                    dx * dx + dy * dy
                })
                .sum()
        };
        let mut best: Option<(f64, Vec<usize>)> = None;
        permutations(k, &mut |perm| {
            let c = cost(perm);
            if best.as_ref().map(|(bc, _)| c < *bc).unwrap_or(true) {
                best = Some((c, perm.to_vec()));
            }
        });
        let (_, perm) = best.unwrap();
        perm.iter()
            .map(|&r| String::from(REFERENCE_CLASSES[r].0))
            .collect()
    } else {
        (1..=k).map(|i| format!("class{i}")).collect()
    }
}

fn permutations(k: usize, visit: &mut impl FnMut(&[usize])) {
    let mut items: Vec<usize> = (0..k).collect();
    permute_rec(&mut items, 0, visit);
}

fn permute_rec(items: &mut Vec<usize>, at: usize, visit: &mut impl FnMut(&[usize])) {
    if at == items.len() {
        visit(items);
        return;
    }
    for i in at..items.len() {
        items.swap(at, i);
        permute_rec(items, at + 1, visit);
        items.swap(at, i);
    }
}

// One EM run. Covariances carry a diagonal floor; empty components are
// reseeded at the worst-modeled point once and dropped if they empty again.
fn em_fit(
    points: &[[f64; 2]],
    k: usize,
    config: &ClusterConfig,
    rng: &mut Rng,
) -> Result<GmmModel, ClusterError> {
    let n = points.len();
    let reg = config.covariance_floor;

    // Global moments for initial covariances.
    let mut gmean = [0.0f64; 2];
    for x in points {
        gmean[0] += x[0];
        gmean[1] += x[1];
    }
    gmean[0] /= n as f64;
    gmean[1] /= n as f64;
    let mut gcov = [[0.0f64; 2]; 2];
    for x in points {
        let d = [x[0] - gmean[0], x[1] - gmean[1]];
        gcov[0][0] += d[0] * d[0];
        gcov[0][1] += d[0] * d[1];
        gcov[1][0] += d[1] * d[0];
        gcov[1][1] += d[1] * d[1];
    }
    for row in gcov.iter_mut() {
        for v in row.iter_mut() {
            *v /= n as f64;
        }
    }
    gcov[0][0] += reg;
    gcov[1][1] += reg;

    // k-means++ style seeding.
    let mut centers: Vec<[f64; 2]> = Vec::with_capacity(k);
    centers.push(points[rng.below(n as u64) as usize]);
    while centers.len() < k {
        let d2: Vec<f64> = points
            .iter()
            .map(|x| {
                centers
                    .iter()
                    .map(|c| {
                        let dx = x[0] - c[0];
                        let dy = x[1] - c[1];
                        dx * dx + dy * dy
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let idx = match rng.weighted_index(&d2) {
            Some(i) => i,
            None => rng.below(n as u64) as usize,
        };
        centers.push(points[idx]);
    }

    let mut components: Vec<GmmComponent> = centers
        .into_iter()
        .map(|mean| GmmComponent {
            weight: 1.0 / k as f64,
            mean,
            cov: gcov,
        })
        .collect();

    let mut ll_history: Vec<f64> = Vec::new();
    let mut reseeded_total = 0usize;
    let mut dropped = 0usize;
    let mut regularized = false;
    let mut reseeded_once: Vec<bool> = alloc::vec![false; k];
    let mut prev_ll = f64::NEG_INFINITY;
    let mut structure_changed = true;

    for iteration in 0..config.max_iterations {
        // E-step.
        let kk = components.len();
        let mut resp = alloc::vec![0.0f64; n * kk];
        let mut ll = 0.0f64;
        for (i, &x) in points.iter().enumerate() {
            let lw: Vec<f64> = components
                .iter()
                .map(|c| {
                    if c.weight > 0.0 {
                        math::ln(c.weight) + c.log_pdf(x)
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            let norm = log_sum_exp(&lw);
            ll += norm;
            for (j, &l) in lw.iter().enumerate() {
                resp[i * kk + j] = math::exp(l - norm);
            }
        }

        if !structure_changed && ll < prev_ll - 1e-9 * (1.0 + math::abs(prev_ll)) {
            return Err(ClusterError::NotMonotone {
                iteration,
                prev: prev_ll,
                now: ll,
            });
        }
        ll_history.push(ll);
        let converged = !structure_changed
            && iteration > 0
            && math::abs(ll - prev_ll) <= 1e-9 * (1.0 + math::abs(ll));
        prev_ll = ll;
        structure_changed = false;

        // Empty components: reseed once at the worst-modeled point, then drop.
        let nk: Vec<f64> = (0..kk)
            .map(|j| (0..n).map(|i| resp[i * kk + j]).sum())
            .collect();
        if let Some(j) = nk.iter().position(|&v| v < 1e-10) {
            if reseeded_once[j] {
                components.remove(j);
                reseeded_once.remove(j);
                dropped += 1;
                let total: f64 = components.iter().map(|c| c.weight).sum();
                for c in components.iter_mut() {
                    c.weight /= total;
                }
            } else {
                let model = GmmModel {
                    components: components.clone(),
                    train_ll: ll,
                    ll_history: Vec::new(),
                    reseeded: 0,
                    dropped: 0,
                    regularized,
                };
                let worst = (0..n)
                    .min_by(|&a, &b| {
                        model
                            .log_density(points[a])
                            .partial_cmp(&model.log_density(points[b]))
                            .unwrap_or(core::cmp::Ordering::Equal)
                    })
                    .unwrap_or(0);
                components[j].mean = points[worst];
                components[j].cov = gcov;
                components[j].weight = 1.0 / n as f64;
                reseeded_once[j] = true;
                reseeded_total += 1;
            }
            structure_changed = true;
            continue;
        }

        // M-step.
        for (j, comp) in components.iter_mut().enumerate() {
            let w = nk[j];
            comp.weight = w / n as f64;
            let mut mean = [0.0f64; 2];
            for (i, &x) in points.iter().enumerate() {
                let r = resp[i * kk + j];
                mean[0] += r * x[0];
                mean[1] += r * x[1];
            }
            mean[0] /= w;
            mean[1] /= w;
            let mut cov = [[0.0f64; 2]; 2];
            for (i, &x) in points.iter().enumerate() {
                let r = resp[i * kk + j];
                let d = [x[0] - mean[0], x[1] - mean[1]];
                cov[0][0] += r * d[0] * d[0];
                cov[0][1] += r * d[0] * d[1];
                cov[1][1] += r * d[1] * d[1];
            }
            cov[0][0] /= w;
            cov[0][1] /= w;
            cov[1][0] = cov[0][1];
            cov[1][1] /= w;
            // Constrained M-step: eigenvalues floored at `reg`. Clamping
            // inside the maximization (rather than adding a ridge after it)
            // keeps the ascent property of EM intact.
            let (clamped, did_clamp) = clamp_eigenvalues(cov, reg);
            regularized |= did_clamp;
            comp.mean = mean;
            comp.cov = clamped;
        }

        if converged {
            break;
        }
    }

    let train_ll = *ll_history.last().unwrap_or(&f64::NEG_INFINITY);
    Ok(GmmModel {
        components,
        train_ll,
        ll_history,
        reseeded: reseeded_total,
        dropped,
        regularized,
    })
}

// Floor the eigenvalues of a symmetric 2x2 matrix at `floor`. Returns the
// adjusted matrix and whether anything changed.
fn clamp_eigenvalues(m: [[f64; 2]; 2], floor: f64) -> ([[f64; 2]; 2], bool) {
    let a = m[0][0];
    let b = m[0][1];
    let d = m[1][1];
    let half_tr = (a + d) / 2.0;
    let radius = math::sqrt(((a - d) / 2.0) * ((a - d) / 2.0) + b * b);
    let lo = half_tr - radius;
    let hi = half_tr + radius;
    if lo >= floor {
        return (m, false);
    }
    let lo_c = floor;
    let hi_c = hi.max(floor);
    if radius == 0.0 || b == 0.0 {
        // Already diagonal: clamp in place.
        return ([[a.max(floor), 0.0], [0.0, d.max(floor)]], true);
    }
    // Eigenvector for `hi`: (b, hi - a), normalized.
    let mut vx = b;
    let mut vy = hi - a;
    let norm = math::sqrt(vx * vx + vy * vy);
    vx /= norm;
    vy /= norm;
    // Reconstruct hi_c * v v' + lo_c * u u' with u orthogonal to v.
    let out = [
        [hi_c * vx * vx + lo_c * vy * vy, (hi_c - lo_c) * vx * vy],
        [(hi_c - lo_c) * vx * vy, hi_c * vy * vy + lo_c * vx * vx],
    ];
    (out, true)
}

// ---------------------------------------------------------------------------
// Class feature profiles.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Feature {
    /// Users who joined after this one.
    Lifetime,
    /// Number of users followed.
    InDegree,
    /// in / (in + out) degree.
    InDegreeRatio,
    /// Reposts of messages this user originated.
    TimesReposted,
    /// Original posts.
    Posts,
    /// posts / (posts + reposts).
    PostRatio,
}

impl Feature {
    pub const ALL: [Feature; 6] = [
        Feature::Lifetime,
        Feature::InDegree,
        Feature::InDegreeRatio,
        Feature::TimesReposted,
        Feature::Posts,
        Feature::PostRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Feature::Lifetime => "lifetime",
            Feature::InDegree => "in_degree",
            Feature::InDegreeRatio => "in_degree_ratio",
            Feature::TimesReposted => "times_reposted",
            Feature::Posts => "posts",
            Feature::PostRatio => "post_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassProfile {
    pub label: String,
    pub n_members: usize,
    /// Fewer than two members: summaries are degenerate.
    pub low_confidence: bool,
    pub features: Vec<(Feature, Summary)>,
}

/// Box-plot summaries of the six structural/behavioral features per class.
pub fn class_profiles(classes: &[UserClass], state: &NetworkState) -> Vec<ClassProfile> {
    let lifetimes = state.lifetimes();
    classes
        .iter()
        .map(|class| {
            let mut columns: Vec<Vec<f64>> = (0..Feature::ALL.len()).map(|_| Vec::new()).collect();
            for &u in &class.members {
                let k = state.in_degree(u) as f64;
                let k_out = state.out_degree(u) as f64;
                let posts = state.posts_by(u) as f64;
                let reposts = state.reposts_by(u) as f64;
                columns[0].push(lifetimes[u.index()] as f64);
                columns[1].push(k);
                columns[2].push(if k + k_out > 0.0 { k / (k + k_out) } else { 0.0 });
                columns[3].push(state.times_reposted(u) as f64);
                columns[4].push(posts);
                columns[5].push(if posts + reposts > 0.0 {
                    posts / (posts + reposts)
                } else {
                    0.0
                });
            }
            let features = Feature::ALL
                .iter()
                .zip(&columns)
                .filter_map(|(&f, col)| Summary::from_values(col).map(|s| (f, s)))
                .collect();
            ClassProfile {
                label: class.label.clone(),
                n_members: class.members.len(),
                low_confidence: class.members.len() < 2,
                features,
            }
        })
        .collect()
}
