//! Per-link strategy likelihoods and their maximization.
//!
//! For a follow with context `l`, a strategy explains the chosen target
//! with probability `indicator / candidates` (uniform over its candidate
//! set), and the random residual with `1 / pool`. Mixing the strategies
//! with weights on the simplex gives the per-link likelihood; the total
//! log-likelihood is the sum over links. Maximization is a coarse grid
//! scan plus local refinement — robust, deterministic, and directly
//! comparable across model specifications because every model is scored
//! on the same usable links.
//!
//! Evaluation detail: each usable link is compressed to coefficients
//! `(a, b, c)` with `a = ind_shortcut / n_shortcut`, `b = ind_tri / n_tri`
//! (zero when the indicator is off) and `c = 1 / pool`, so the per-link
//! term is always `ln(p1 a + p2 b + (1 - p1 - p2) c)`. Sums run in link
//! order, which makes the anchoring identities exact at the bit level:
//! a single fit at `p` equals a combined fit at `(p, 0)`, and both reduce
//! to the random baseline at zero.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use crate::replay::LinkContext;

/// The five per-link explanation rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Uniform over the whole pool.
    Random,
    /// Uniform over triadic candidates.
    Triadic,
    /// Uniform over seen grandparents.
    Grandparent,
    /// Uniform over seen origins.
    Origin,
    /// Uniform over the grandparent-or-origin union.
    Shortcut,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Random => "rand",
            Strategy::Triadic => "triadic",
            Strategy::Grandparent => "grandparent",
            Strategy::Origin => "origin",
            Strategy::Shortcut => "shortcut",
        }
    }

    fn indicator(self, ctx: &LinkContext) -> bool {
        match self {
            Strategy::Random => true,
            Strategy::Triadic => ctx.is_tri,
            Strategy::Grandparent => ctx.is_g,
            Strategy::Origin => ctx.is_o,
            Strategy::Shortcut => ctx.is_guo,
        }
    }

    fn candidate_count(self, ctx: &LinkContext) -> u64 {
        match self {
            Strategy::Random => ctx.pool,
            Strategy::Triadic => ctx.n_tri as u64,
            Strategy::Grandparent => ctx.n_g as u64,
            Strategy::Origin => ctx.n_o as u64,
            Strategy::Shortcut => ctx.n_guo as u64,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which shortcut family a combined model pairs with triadic closure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShortcutComponent {
    Grandparent,
    Origin,
    #[default]
    Either,
}

impl ShortcutComponent {
    pub fn strategy(self) -> Strategy {
        match self {
            ShortcutComponent::Grandparent => Strategy::Grandparent,
            ShortcutComponent::Origin => Strategy::Origin,
            ShortcutComponent::Either => Strategy::Shortcut,
        }
    }

    pub fn as_str(self) -> &'static str {
        self.strategy().as_str()
    }
}

/// What a [`FitResult`] describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// Random-only: no free parameter.
    Baseline,
    /// One strategy mixed with random.
    Single(Strategy),
    /// Shortcut + triadic + random.
    Combined(ShortcutComponent),
}

impl Model {
    pub fn label(self) -> String {
        match self {
            Model::Baseline => String::from("rand"),
            Model::Single(s) => String::from(s.as_str()),
            Model::Combined(c) => format!("{}+triadic", c.as_str()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LikelihoodError {
    /// Pool below 1 on a link handed directly to [`link_likelihood`].
    PoolTooSmall { link_index: u64 },
    /// Indicator set while the candidate set is empty.
    Inconsistent { link_index: u64, strategy: Strategy },
    BadParameter { what: &'static str, value: f64 },
    BadGrid { what: &'static str, value: f64 },
    /// Fits need at least two usable contexts.
    NotEnoughContexts { needed: usize, got: usize },
    /// Model comparison across different context sequences.
    ProvenanceMismatch,
    /// Single fits are for non-random strategies.
    RandomHasNoParameter,
}

impl fmt::Display for LikelihoodError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LikelihoodError::PoolTooSmall { link_index } => {
                write!(f, "link {link_index}: empty candidate pool")
            }
            LikelihoodError::Inconsistent {
                link_index,
                strategy,
            } => write!(
                f,
                "link {link_index}: {strategy} indicator set with zero candidates"
            ),
            LikelihoodError::BadParameter { what, value } => {
                write!(f, "parameter {what} = {value} out of range")
            }
            LikelihoodError::BadGrid { what, value } => {
                write!(f, "grid {what} = {value} out of range")
            }
            LikelihoodError::NotEnoughContexts { needed, got } => {
                write!(f, "needed {needed} usable contexts, got {got}")
            }
            LikelihoodError::ProvenanceMismatch => {
                write!(f, "fits were computed on different context sequences")
            }
            LikelihoodError::RandomHasNoParameter => {
                write!(f, "the random strategy is the residual, not a component")
            }
        }
    }
}

/// Likelihood of one link's target under a single strategy.
pub fn link_likelihood(ctx: &LinkContext, strategy: Strategy) -> Result<f64, LikelihoodError> {
    if ctx.pool < 1 {
        return Err(LikelihoodError::PoolTooSmall {
            link_index: ctx.link_index,
        });
    }
    if strategy.indicator(ctx) {
        let n = strategy.candidate_count(ctx);
        if n == 0 {
            return Err(LikelihoodError::Inconsistent {
                link_index: ctx.link_index,
                strategy,
            });
        }
        Ok(1.0 / n as f64)
    } else {
        Ok(0.0)
    }
}

// Per-link coefficients; the term is ln(p1 a + p2 b + (1 - p1 - p2) c).
#[derive(Debug, Clone, Copy)]
struct TermEntry {
    a: f64,
    b: f64,
    c: f64,
}

/// Compressed usable links for one (shortcut, triadic) model family.
/// Built once, evaluated many times on the parameter grid.
#[derive(Debug, Clone)]
pub struct ModelTerms {
    entries: Vec<TermEntry>,
    n_links_excluded: usize,
    fingerprint: u64,
}

impl ModelTerms {
    /// Coefficients for a combined (shortcut + triadic) model.
    pub fn combined(
        contexts: &[LinkContext],
        shortcut: ShortcutComponent,
    ) -> Result<ModelTerms, LikelihoodError> {
        ModelTerms::build(contexts, shortcut.strategy(), Some(Strategy::Triadic))
    }

    /// Coefficients for a single-strategy model (the `b` slot is unused).
    pub fn single(
        contexts: &[LinkContext],
        component: Strategy,
    ) -> Result<ModelTerms, LikelihoodError> {
        if component == Strategy::Random {
            return Err(LikelihoodError::RandomHasNoParameter);
        }
        ModelTerms::build(contexts, component, None)
    }

    fn build(
        contexts: &[LinkContext],
        first: Strategy,
        second: Option<Strategy>,
    ) -> Result<ModelTerms, LikelihoodError> {
        let mut entries = Vec::new();
        let mut excluded = 0usize;
        for ctx in contexts {
            if ctx.pool < 1 {
                excluded += 1;
                continue;
            }
            let coeff = |strategy: Strategy| link_likelihood(ctx, strategy);
            entries.push(TermEntry {
                a: coeff(first)?,
                b: match second {
                    Some(s) => coeff(s)?,
                    None => 0.0,
                },
                c: 1.0 / ctx.pool as f64,
            });
        }
        Ok(ModelTerms {
            entries,
            n_links_excluded: excluded,
            fingerprint: contexts_fingerprint(contexts),
        })
    }

    pub fn n_links_used(&self) -> usize {
        self.entries.len()
    }

    pub fn n_links_excluded(&self) -> usize {
        self.n_links_excluded
    }

    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Log-likelihood of a combined model at (p1, p2).
    pub fn eval(&self, p1: f64, p2: f64) -> f64 {
        let r = 1.0 - p1 - p2;
        let mut sum = 0.0f64;
        for t in &self.entries {
            sum += crate::math::ln(p1 * t.a + p2 * t.b + r * t.c);
        }
        sum
    }
}

/// FNV-1a over the identifying fields of a context sequence; used to refuse
/// comparisons between fits of different data.
pub fn contexts_fingerprint(contexts: &[LinkContext]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    let mut eat = |v: u64| {
        h ^= v;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    eat(contexts.len() as u64);
    for c in contexts {
        eat(c.link_index);
        eat(c.creator.0 as u64);
        eat(c.target.0 as u64);
        eat(c.k as u64);
        eat(c.pool);
        eat(c.n_g as u64 | (c.n_o as u64) << 16 | (c.n_tri as u64) << 32);
        eat(c.n_guo as u64
            | (c.is_g as u64) << 60
            | (c.is_o as u64) << 61
            | (c.is_tri as u64) << 62
            | (c.is_guo as u64) << 63);
    }
    h
}

/// Log-likelihood of one strategy mixed with random at weight `p`.
pub fn loglik_single(
    contexts: &[LinkContext],
    component: Strategy,
    p: f64,
) -> Result<f64, LikelihoodError> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(LikelihoodError::BadParameter {
            what: "p",
            value: p,
        });
    }
    let terms = ModelTerms::single(contexts, component)?;
    Ok(terms.eval(p, 0.0))
}

/// Log-likelihood of shortcut weight `p1` + triadic weight `p2` + random.
pub fn loglik_combined(
    contexts: &[LinkContext],
    shortcut: ShortcutComponent,
    p1: f64,
    p2: f64,
) -> Result<f64, LikelihoodError> {
    check_simplex(p1, p2)?;
    let terms = ModelTerms::combined(contexts, shortcut)?;
    Ok(terms.eval(p1, p2))
}

fn check_simplex(p1: f64, p2: f64) -> Result<(), LikelihoodError> {
    if !(0.0..=1.0).contains(&p1) || !p1.is_finite() {
        return Err(LikelihoodError::BadParameter {
            what: "p1",
            value: p1,
        });
    }
    if !(0.0..=1.0).contains(&p2) || !p2.is_finite() {
        return Err(LikelihoodError::BadParameter {
            what: "p2",
            value: p2,
        });
    }
    if p1 + p2 > 1.0 + 1e-12 {
        return Err(LikelihoodError::BadParameter {
            what: "p1+p2",
            value: p1 + p2,
        });
    }
    Ok(())
}

/// Grid-search settings: coarse scan step and final refinement resolution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub step: f64,
    pub resolution: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            step: 0.01,
            resolution: 1e-4,
        }
    }
}

impl GridSpec {
    fn validate(&self) -> Result<(), LikelihoodError> {
        if !(self.step > 0.0 && self.step <= 0.1) {
            return Err(LikelihoodError::BadGrid {
                what: "step",
                value: self.step,
            });
        }
        if !(self.resolution > 0.0 && self.resolution <= self.step) {
            return Err(LikelihoodError::BadGrid {
                what: "resolution",
                value: self.resolution,
            });
        }
        Ok(())
    }
}

/// A maximized model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub model: Model,
    /// Single-strategy weight, or the shortcut weight of a combined model.
    pub p1: f64,
    /// Triadic weight of a combined model; zero otherwise.
    pub p2: f64,
    pub loglik: f64,
    pub grid_step: f64,
    pub resolution: f64,
    /// Optimum within one coarse step of the simplex boundary.
    pub boundary: bool,
    pub n_links_used: usize,
    pub n_links_excluded: usize,
    /// Fingerprint of the fitted context sequence.
    pub provenance: u64,
}

/// The no-parameter random baseline.
pub fn fit_baseline(contexts: &[LinkContext]) -> Result<FitResult, LikelihoodError> {
    // Any component works: at p = 0 every term reduces to ln(1 / pool).
    let terms = ModelTerms::single(contexts, Strategy::Triadic)?;
    require_usable(&terms)?;
    Ok(FitResult {
        model: Model::Baseline,
        p1: 0.0,
        p2: 0.0,
        loglik: terms.eval(0.0, 0.0),
        grid_step: 0.0,
        resolution: 0.0,
        boundary: false,
        n_links_used: terms.n_links_used(),
        n_links_excluded: terms.n_links_excluded(),
        provenance: terms.fingerprint(),
    })
}

fn require_usable(terms: &ModelTerms) -> Result<(), LikelihoodError> {
    if terms.n_links_used() < 2 {
        return Err(LikelihoodError::NotEnoughContexts {
            needed: 2,
            got: terms.n_links_used(),
        });
    }
    Ok(())
}

/// Inclusive 1-D grid over [0, 1].
pub fn grid_points_1d(step: f64) -> Vec<f64> {
    let n = (1.0 / step) as usize;
    let mut points: Vec<f64> = (0..=n).map(|i| (i as f64 * step).min(1.0)).collect();
    if *points.last().unwrap() < 1.0 {
        points.push(1.0);
    }
    points
}

/// Inclusive triangular grid over {p1, p2 >= 0, p1 + p2 <= 1}.
pub fn grid_points_triangle(step: f64) -> Vec<(f64, f64)> {
    let mut points = Vec::new();
    for &p1 in grid_points_1d(step).iter() {
        for &p2 in grid_points_1d(step).iter() {
            if p1 + p2 <= 1.0 + 1e-12 {
                points.push((p1, p2.min(1.0 - p1)));
            }
        }
    }
    points
}

// Deterministic argmax: highest value, ties broken toward lower parameters.
fn best_point(points: &[(f64, f64)], values: &[f64]) -> ((f64, f64), f64) {
    let mut best = 0usize;
    for i in 1..points.len() {
        let better = values[i] > values[best]
            || (values[i] == values[best]
                && (points[i].0, points[i].1) < (points[best].0, points[best].1));
        if better {
            best = i;
        }
    }
    (points[best], values[best])
}

/// Fit a single strategy with a custom batch evaluator (the CLI uses this
/// to spread grid points over threads; results are identical to the serial
/// path because each point is evaluated independently).
pub fn fit_single_with<F>(
    terms: &ModelTerms,
    component: Strategy,
    grid: GridSpec,
    mut eval_batch: F,
) -> Result<FitResult, LikelihoodError>
where
    F: FnMut(&ModelTerms, &[(f64, f64)]) -> Vec<f64>,
{
    grid.validate()?;
    require_usable(terms)?;
    let mut points: Vec<(f64, f64)> = grid_points_1d(grid.step)
        .into_iter()
        .map(|p| (p, 0.0))
        .collect();
    let mut values = eval_batch(terms, &points);
    let (mut best, mut best_value) = best_point(&points, &values);
    let mut width = grid.step;
    while width > grid.resolution {
        width /= 10.0;
        points = refine_points_1d(best.0, width);
        values = eval_batch(terms, &points);
        let (b, v) = best_point(&points, &values);
        if v > best_value || (v == best_value && b < best) {
            best = b;
            best_value = v;
        }
    }
    Ok(FitResult {
        model: Model::Single(component),
        p1: best.0,
        p2: 0.0,
        loglik: best_value,
        grid_step: grid.step,
        resolution: width,
        boundary: best.0 <= grid.step || best.0 >= 1.0 - grid.step,
        n_links_used: terms.n_links_used(),
        n_links_excluded: terms.n_links_excluded(),
        provenance: terms.fingerprint(),
    })
}

fn refine_points_1d(center: f64, width: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(21);
    for i in -10i32..=10 {
        let p = (center + i as f64 * width).clamp(0.0, 1.0);
        if out.last().map(|&(q, _)| q != p).unwrap_or(true) {
            out.push((p, 0.0));
        }
    }
    out
}

/// Coarse scan + refinement for one strategy mixed with random.
pub fn fit_single(
    contexts: &[LinkContext],
    component: Strategy,
    grid: GridSpec,
) -> Result<FitResult, LikelihoodError> {
    let terms = ModelTerms::single(contexts, component)?;
    fit_single_with(&terms, component, grid, |t, ps| {
        ps.iter().map(|&(p, _)| t.eval(p, 0.0)).collect()
    })
}

/// Combined-fit twin of [`fit_single_with`].
pub fn fit_combined_with<F>(
    terms: &ModelTerms,
    shortcut: ShortcutComponent,
    grid: GridSpec,
    mut eval_batch: F,
) -> Result<FitResult, LikelihoodError>
where
    F: FnMut(&ModelTerms, &[(f64, f64)]) -> Vec<f64>,
{
    grid.validate()?;
    require_usable(terms)?;
    let mut points = grid_points_triangle(grid.step);
    let mut values = eval_batch(terms, &points);
    let (mut best, mut best_value) = best_point(&points, &values);
    let mut width = grid.step;
    while width > grid.resolution {
        width /= 10.0;
        points = refine_points_triangle(best, width);
        values = eval_batch(terms, &points);
        let (b, v) = best_point(&points, &values);
        if v > best_value || (v == best_value && b < best) {
            best = b;
            best_value = v;
        }
    }
    Ok(FitResult {
        model: Model::Combined(shortcut),
        p1: best.0,
        p2: best.1,
        loglik: best_value,
        grid_step: grid.step,
        resolution: width,
        boundary: best.0 <= grid.step
            || best.1 <= grid.step
            || best.0 + best.1 >= 1.0 - grid.step,
        n_links_used: terms.n_links_used(),
        n_links_excluded: terms.n_links_excluded(),
        provenance: terms.fingerprint(),
    })
}

fn refine_points_triangle(center: (f64, f64), width: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for i in -10i32..=10 {
        for j in -10i32..=10 {
            let p1 = (center.0 + i as f64 * width).clamp(0.0, 1.0);
            let p2 = (center.1 + j as f64 * width).clamp(0.0, 1.0);
            if p1 + p2 <= 1.0 + 1e-12 {
                out.push((p1, p2.min(1.0 - p1)));
            }
        }
    }
    out.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    out.dedup();
    out
}

/// Coarse triangular scan + refinement for shortcut + triadic + random.
pub fn fit_combined(
    contexts: &[LinkContext],
    shortcut: ShortcutComponent,
    grid: GridSpec,
) -> Result<FitResult, LikelihoodError> {
    let terms = ModelTerms::combined(contexts, shortcut)?;
    fit_combined_with(&terms, shortcut, grid, |t, ps| {
        ps.iter().map(|&(p1, p2)| t.eval(p1, p2)).collect()
    })
}

/// Rank fits of the same context sequence by maximized log-likelihood.
pub fn model_comparison(fits: &[FitResult]) -> Result<Vec<FitResult>, LikelihoodError> {
    if let Some(first) = fits.first() {
        if fits.iter().any(|f| f.provenance != first.provenance) {
            return Err(LikelihoodError::ProvenanceMismatch);
        }
    }
    let mut sorted = fits.to_vec();
    sorted.sort_by(|x, y| {
        y.loglik
            .partial_cmp(&x.loglik)
            .unwrap_or(core::cmp::Ordering::Equal)
    });
    Ok(sorted)
}
