//! Shared CLI plumbing: errors with exit codes, config-file defaults,
//! deterministic output headers, flag parsing, and thread helpers.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use linkmix_core::event::UserId;
use linkmix_core::generator::{ConfigError, StrategyMix};
use linkmix_core::likelihood::{LikelihoodError, ModelTerms, ShortcutComponent};
use linkmix_core::replay::{LinkContext, PoolMode, ReplayOptions};

/// Failures with their process exit codes: 1 usage, 2 data, 3 numerical.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub fn code_name(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Data(_) => "data",
            CliError::Numeric(_) => "numeric",
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => m,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(format!("io: {e}"))
    }
}

impl From<linkmix_core::event::ParseError> for CliError {
    fn from(e: linkmix_core::event::ParseError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<linkmix_core::event::InvalidLog> for CliError {
    fn from(e: linkmix_core::event::InvalidLog) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<linkmix_core::replay::ContextParseError> for CliError {
    fn from(e: linkmix_core::replay::ContextParseError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        match e {
            ConfigError::Stalled { .. } => CliError::Data(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<LikelihoodError> for CliError {
    fn from(e: LikelihoodError) -> Self {
        match e {
            LikelihoodError::BadGrid { .. } | LikelihoodError::RandomHasNoParameter => {
                CliError::Usage(e.to_string())
            }
            LikelihoodError::BadParameter { .. } => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<linkmix_core::nullstats::NullStatsError> for CliError {
    fn from(e: linkmix_core::nullstats::NullStatsError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<linkmix_core::classes::ClusterError> for CliError {
    fn from(e: linkmix_core::classes::ClusterError) -> Self {
        match e {
            linkmix_core::classes::ClusterError::NotMonotone { .. } => {
                CliError::Numeric(e.to_string())
            }
            linkmix_core::classes::ClusterError::BadConfig(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<linkmix_core::replay::EfficiencyError> for CliError {
    fn from(e: linkmix_core::replay::EfficiencyError) -> Self {
        CliError::Data(e.to_string())
    }
}

/// key=value defaults loaded from --config; explicit flags win.
#[derive(Debug, Default, Clone)]
pub struct ConfigFile {
    values: BTreeMap<String, String>,
}

impl ConfigFile {
    pub fn load(path: Option<&str>) -> Result<ConfigFile, CliError> {
        let Some(path) = path else {
            return Ok(ConfigFile::default());
        };
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("config {path}: {e}")))?;
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config {path} line {}: expected key=value",
                    lineno + 1
                )));
            };
            values.insert(key.trim().to_string(), value.trim().to_string());
        }
        Ok(ConfigFile { values })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(|s| s.as_str())
    }
}

/// Resolve a parameter: explicit flag, then config key, then default.
pub fn pick<T>(flag: Option<T>, cfg: &ConfigFile, key: &str, default: T) -> Result<T, CliError>
where
    T: FromStr,
{
    if let Some(v) = flag {
        return Ok(v);
    }
    match cfg.get(key) {
        Some(raw) => raw
            .parse()
            .map_err(|_| CliError::Usage(format!("config {key}={raw}: unparseable value"))),
        None => Ok(default),
    }
}

/// Same as [`pick`] for values with a custom parser.
pub fn pick_with<T>(
    flag: Option<&str>,
    cfg: &ConfigFile,
    key: &str,
    default: T,
    parse: impl Fn(&str) -> Result<T, CliError>,
) -> Result<T, CliError> {
    if let Some(v) = flag {
        return parse(v);
    }
    match cfg.get(key) {
        Some(raw) => parse(raw),
        None => Ok(default),
    }
}

pub fn parse_mix(raw: &str) -> Result<StrategyMix, CliError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::Usage(format!(
            "mix {raw:?}: expected \"p_traffic,p_structure\""
        )));
    }
    let t: f64 = parts[0]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("mix {raw:?}: bad p_traffic")))?;
    let s: f64 = parts[1]
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("mix {raw:?}: bad p_structure")))?;
    StrategyMix::new(t, s).map_err(|e| CliError::Usage(e.to_string()))
}

pub fn parse_flavor(raw: &str) -> Result<ShortcutComponent, CliError> {
    match raw {
        "g" => Ok(ShortcutComponent::Grandparent),
        "o" => Ok(ShortcutComponent::Origin),
        "guo" => Ok(ShortcutComponent::Either),
        other => Err(CliError::Usage(format!(
            "flavor {other:?}: expected g, o, or guo"
        ))),
    }
}

pub fn parse_pool(raw: &str) -> Result<PoolMode, CliError> {
    match raw {
        "paper" => Ok(PoolMode::Paper),
        "users" => Ok(PoolMode::Users),
        other => Err(CliError::Usage(format!(
            "pool {other:?}: expected paper or users"
        ))),
    }
}

pub fn parse_k_range(raw: &str) -> Result<(usize, usize), CliError> {
    let Some((lo, hi)) = raw.split_once("..") else {
        return Err(CliError::Usage(format!(
            "k-range {raw:?}: expected \"lo..hi\""
        )));
    };
    let lo: usize = lo
        .parse()
        .map_err(|_| CliError::Usage(format!("k-range {raw:?}: bad low bound")))?;
    let hi: usize = hi
        .parse()
        .map_err(|_| CliError::Usage(format!("k-range {raw:?}: bad high bound")))?;
    if lo < 1 || hi < lo {
        return Err(CliError::Usage(format!("k-range {raw:?}: need 1 <= lo <= hi")));
    }
    Ok((lo, hi))
}

pub fn parse_rates(raw: &str) -> Result<linkmix_core::generator::EventRates, CliError> {
    let parts: Vec<&str> = raw.split(',').collect();
    if parts.len() != 4 {
        return Err(CliError::Usage(format!(
            "rates {raw:?}: expected \"join,post,repost,follow\""
        )));
    }
    let mut vals = [0.0f64; 4];
    for (slot, part) in vals.iter_mut().zip(&parts) {
        *slot = part
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("rates {raw:?}: bad value {part:?}")))?;
    }
    Ok(linkmix_core::generator::EventRates {
        join: vals[0],
        post: vals[1],
        repost: vals[2],
        follow: vals[3],
    })
}

/// "w:p1,p2;w:p1,p2;..." planted mixture clusters.
pub fn parse_user_clusters(
    raw: &str,
) -> Result<Vec<linkmix_core::generator::MixCluster>, CliError> {
    let mut out = Vec::new();
    for part in raw.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let Some((w, mix)) = part.split_once(':') else {
            return Err(CliError::Usage(format!(
                "user-clusters {raw:?}: expected \"w:p1,p2\" segments"
            )));
        };
        let weight: f64 = w
            .trim()
            .parse()
            .map_err(|_| CliError::Usage(format!("user-clusters {raw:?}: bad weight {w:?}")))?;
        out.push(linkmix_core::generator::MixCluster {
            weight,
            mix: parse_mix(mix)?,
        });
    }
    if out.is_empty() {
        return Err(CliError::Usage(format!(
            "user-clusters {raw:?}: no clusters given"
        )));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Output files.

/// Output directory with the deterministic header stamped on every file.
pub struct OutDir {
    dir: PathBuf,
    header: String,
}

impl OutDir {
    pub fn new(dir: &str, seed: u64, config_hash: u64) -> Result<OutDir, CliError> {
        let dir = PathBuf::from(dir);
        fs::create_dir_all(&dir)?;
        let header = format!(
            "# linkmix {}\n# seed={} config={:016x}\n",
            env!("CARGO_PKG_VERSION"),
            seed,
            config_hash
        );
        Ok(OutDir { dir, header })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a file with the standard header prepended.
    pub fn write(&self, name: &str, body: &str) -> Result<PathBuf, CliError> {
        let path = self.path(name);
        fs::write(&path, format!("{}{}", self.header, body))?;
        Ok(path)
    }
}

/// FNV-1a over a canonical parameter string.
pub fn config_hash(canonical: &str) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for b in canonical.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

// ---------------------------------------------------------------------------
// Input loading.

pub fn read_input(common_input: Option<&str>) -> Result<(String, String), CliError> {
    let Some(path) = common_input else {
        return Err(CliError::Usage(String::from("--input is required")));
    };
    if !Path::new(path).exists() {
        return Err(CliError::Data(format!("input {path}: no such file")));
    }
    Ok((path.to_string(), fs::read_to_string(path)?))
}

/// Contexts from either an event log (replayed under `options`) or a
/// previously exported context table.
pub fn load_contexts(
    common_input: Option<&str>,
    options: ReplayOptions,
) -> Result<Vec<LinkContext>, CliError> {
    let (path, text) = read_input(common_input)?;
    if looks_like_context_table(&text) {
        Ok(linkmix_core::replay::parse_contexts(&text)?)
    } else {
        let events = linkmix_core::event::parse_log(&text)
            .map_err(|e| CliError::Data(format!("{path}: {e}")))?;
        let (_, contexts) = linkmix_core::replay::replay(&events, options)?;
        Ok(contexts)
    }
}

fn looks_like_context_table(text: &str) -> bool {
    for line in text.lines() {
        if line.starts_with('#') {
            if line.contains("link_index") {
                return true;
            }
            continue;
        }
        if line.is_empty() {
            continue;
        }
        // First data line of an event log has an event keyword second.
        let mut fields = line.split('\t');
        let _time = fields.next();
        return !matches!(
            fields.next(),
            Some("join") | Some("post") | Some("repost") | Some("follow")
        );
    }
    false
}

// ---------------------------------------------------------------------------
// Threads.

/// Evaluate grid points across threads; the per-point result is identical
/// to the serial path, so the argmax cannot depend on the thread count.
pub fn parallel_grid_eval(terms: &ModelTerms, points: &[(f64, f64)], threads: usize) -> Vec<f64> {
    if threads <= 1 || points.len() < 2 * threads {
        return points.iter().map(|&(a, b)| terms.eval(a, b)).collect();
    }
    let chunk = points.len().div_ceil(threads);
    let mut out = vec![0.0f64; points.len()];
    std::thread::scope(|scope| {
        for (slot, ps) in out.chunks_mut(chunk).zip(points.chunks(chunk)) {
            scope.spawn(move || {
                for (o, &(a, b)) in slot.iter_mut().zip(ps) {
                    *o = terms.eval(a, b);
                }
            });
        }
    });
    out
}

/// Per-user fits across threads, merged back in user order.
pub fn parallel_fit_users(
    groups: &[(UserId, Vec<LinkContext>)],
    min_links: usize,
    shortcut: ShortcutComponent,
    grid: linkmix_core::likelihood::GridSpec,
    threads: usize,
) -> Result<linkmix_core::classes::UserFitReport, CliError> {
    use linkmix_core::classes::{fit_user, UserFitReport};

    let threads = threads.max(1);
    let chunk = groups.len().div_ceil(threads).max(1);
    let mut partials: Vec<Result<Vec<Option<linkmix_core::classes::UserFit>>, LikelihoodError>> =
        Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for part in groups.chunks(chunk) {
            handles.push(scope.spawn(move || {
                part.iter()
                    .map(|(user, ctxs)| {
                        if ctxs.len() < min_links {
                            Ok(None)
                        } else {
                            fit_user(*user, ctxs, min_links, shortcut, grid)
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()
            }));
        }
        for h in handles {
            partials.push(h.join().expect("fit worker panicked"));
        }
    });

    let mut fits = Vec::new();
    let mut below = 0usize;
    let mut unusable = 0usize;
    let mut idx = 0usize;
    for partial in partials {
        for slot in partial.map_err(CliError::from)? {
            let (_, ctxs) = &groups[idx];
            idx += 1;
            match slot {
                Some(fit) => fits.push(fit),
                None => {
                    if ctxs.len() < min_links {
                        below += 1;
                    } else {
                        unusable += 1;
                    }
                }
            }
        }
    }
    Ok(UserFitReport {
        fits,
        skipped_below_min: below,
        skipped_unusable: unusable,
    })
}
