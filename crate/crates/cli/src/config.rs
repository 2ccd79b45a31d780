//! Parser for the `critcurve-config v1` document format: a version header
//! followed by `[section]` blocks of `key = value` lines. Parsing is
//! fail-closed: unknown keys are errors (with a nearest-key hint), so a
//! misspelled setting can never silently fall back to a default.

use std::collections::BTreeMap;

use critcurve::InitialDataPreset;

pub const FORMAT_HEADER: &str = "critcurve-config v1";

const KNOWN_KEYS: &[(&str, &str)] = &[
    ("run", "mode"),
    ("run", "seed"),
    ("run", "jobs"),
    ("grid", "n"),
    ("grid", "L"),
    ("grid", "N"),
    ("system", "p"),
    ("system", "q"),
    ("system", "eps"),
    ("system", "s"),
    ("system", "eps_loss"),
    ("data", "a_u0"),
    ("data", "a_u1"),
    ("data", "a_v0"),
    ("data", "a_v1"),
    ("data", "width"),
    ("data", "require_blowup_admissible"),
    ("time", "t_max"),
    ("time", "h"),
    ("time", "sample_every"),
    ("fit", "t_lo"),
    ("fit", "t_hi"),
    ("fit", "tolerance"),
    ("sweep", "p_list"),
    ("sweep", "q_list"),
    ("sweep", "decay_slope_threshold"),
    ("blowup", "r_list"),
    ("blowup", "kappa"),
    ("ineq", "count"),
    ("ineq", "band_limit"),
    ("ineq", "decay"),
];

/// Fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub mode: Option<String>,
    pub seed: u64,
    pub jobs: Option<usize>,
    pub n: usize,
    pub half_length: f64,
    pub points: usize,
    pub p: f64,
    pub q: f64,
    pub eps: f64,
    pub s: f64,
    pub eps_loss: f64,
    pub preset: InitialDataPreset,
    pub t_max: Option<f64>,
    pub h: Option<f64>,
    pub sample_every: usize,
    pub fit_t_lo: Option<f64>,
    pub fit_t_hi: Option<f64>,
    pub fit_tolerance: f64,
    pub p_list: Vec<f64>,
    pub q_list: Vec<f64>,
    pub decay_slope_threshold: f64,
    pub r_list: Vec<f64>,
    pub kappa: Option<u32>,
    pub ineq_count: usize,
    pub ineq_band_limit: f64,
    pub ineq_decay: f64,
}

impl RunConfig {
    pub fn grid(&self) -> Result<std::sync::Arc<critcurve::Grid>, String> {
        critcurve::Grid::new_shared(self.n, self.half_length, self.points)
            .map_err(|e| e.to_string())
    }

    pub fn system_params(&self) -> critcurve::SystemParams {
        critcurve::SystemParams {
            n: self.n,
            p: self.p,
            q: self.q,
            eps: self.eps,
            s: self.s,
            eps_loss: self.eps_loss,
            preset: self.preset.clone(),
        }
    }

    /// Fit window, defaulting to the tail [t_max/5, t_max].
    pub fn fit_window(&self, t_max: f64) -> (f64, f64) {
        (
            self.fit_t_lo.unwrap_or(t_max / 5.0),
            self.fit_t_hi.unwrap_or(t_max),
        )
    }
}

struct RawConfig {
    entries: BTreeMap<(String, String), String>,
}

impl RawConfig {
    fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.entries
            .get(&(section.to_string(), key.to_string()))
            .map(|s| s.as_str())
    }

    fn f64(&self, section: &str, key: &str) -> Result<Option<f64>, String> {
        self.get(section, key)
            .map(|v| {
                v.parse::<f64>()
                    .map_err(|_| format!("[{section}] {key}: expected a number, got \"{v}\""))
            })
            .transpose()
    }

    fn usize(&self, section: &str, key: &str) -> Result<Option<usize>, String> {
        self.get(section, key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| format!("[{section}] {key}: expected a non-negative integer, got \"{v}\""))
            })
            .transpose()
    }

    fn u64(&self, section: &str, key: &str) -> Result<Option<u64>, String> {
        self.get(section, key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| format!("[{section}] {key}: expected a non-negative integer, got \"{v}\""))
            })
            .transpose()
    }

    fn bool(&self, section: &str, key: &str) -> Result<Option<bool>, String> {
        self.get(section, key)
            .map(|v| match v {
                "true" => Ok(true),
                "false" => Ok(false),
                _ => Err(format!("[{section}] {key}: expected true or false, got \"{v}\"")),
            })
            .transpose()
    }

    fn f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, String> {
        self.get(section, key)
            .map(|v| {
                v.split(',')
                    .map(|part| {
                        let part = part.trim();
                        part.parse::<f64>().map_err(|_| {
                            format!("[{section}] {key}: expected a comma-separated number list, got \"{part}\"")
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}

fn edit_distance(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, &ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, &cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

fn nearest_known_key(section: &str, key: &str) -> String {
    let mut best = ("", "", usize::MAX);
    for &(s, k) in KNOWN_KEYS {
        let mut d = edit_distance(key, k);
        if s != section {
            d += 1;
        }
        if d < best.2 {
            best = (s, k, d);
        }
    }
    format!("[{}] {}", best.0, best.1)
}

fn tokenize(text: &str) -> Result<RawConfig, String> {
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) => {
                let line = strip_comment(line);
                if line.is_empty() {
                    continue;
                }
                break line.to_string();
            }
            None => return Err("empty configuration document".into()),
        }
    };
    if header != FORMAT_HEADER {
        return Err(format!(
            "first line must be \"{FORMAT_HEADER}\", got \"{header}\""
        ));
    }

    let mut entries = BTreeMap::new();
    let mut section = String::new();
    for (lineno, raw_line) in lines {
        let line = strip_comment(raw_line);
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            section = name.trim().to_string();
            if !KNOWN_KEYS.iter().any(|&(s, _)| s == section) {
                return Err(format!(
                    "line {}: unknown section [{section}]",
                    lineno + 1
                ));
            }
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(format!(
                "line {}: expected \"key = value\", got \"{line}\"",
                lineno + 1
            ));
        };
        if section.is_empty() {
            return Err(format!(
                "line {}: key outside any [section]",
                lineno + 1
            ));
        }
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if !KNOWN_KEYS.iter().any(|&(s, k)| s == section && k == key) {
            return Err(format!(
                "line {}: unknown key \"{key}\" in [{section}]; nearest known key is {}",
                lineno + 1,
                nearest_known_key(&section, &key)
            ));
        }
        if entries
            .insert((section.clone(), key.clone()), value)
            .is_some()
        {
            return Err(format!(
                "line {}: duplicate key \"{key}\" in [{section}]",
                lineno + 1
            ));
        }
    }
    Ok(RawConfig { entries })
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(pos) => line[..pos].trim(),
        None => line.trim(),
    }
}

fn require<T>(value: Option<T>, section: &str, key: &str) -> Result<T, String> {
    value.ok_or_else(|| format!("missing required key \"{key}\" in [{section}]"))
}

/// Parse and fully validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig, String> {
    let raw = tokenize(text)?;

    let n = require(raw.usize("grid", "n")?, "grid", "n")?;
    if n != 1 && n != 2 {
        return Err(format!("[grid] n = {n} is outside the supported dimensions {{1, 2}}"));
    }
    let half_length = require(raw.f64("grid", "L")?, "grid", "L")?;
    if !(half_length > 0.0 && half_length.is_finite()) {
        return Err(format!("[grid] L = {half_length} must be a positive half-length"));
    }
    let points = require(raw.usize("grid", "N")?, "grid", "N")?;
    if points < 8 || !points.is_power_of_two() {
        return Err(format!(
            "[grid] N = {points} must be a power of two >= 8 (aliasing hazard otherwise)"
        ));
    }

    let p = require(raw.f64("system", "p")?, "system", "p")?;
    let q = require(raw.f64("system", "q")?, "system", "q")?;
    if !(p > 1.0) || !(q > 1.0) {
        return Err(format!(
            "[system] p = {p}, q = {q} violate min{{p, q}} > 1 (the coupled system requires both nonlinearity exponents above 1)"
        ));
    }
    let eps = raw.f64("system", "eps")?.unwrap_or(0.01);
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(format!("[system] eps = {eps} must be >= 0"));
    }
    let s = match raw.f64("system", "s")? {
        Some(s) if s >= 0.0 => s,
        Some(s) => return Err(format!("[system] s = {s} must be >= 0")),
        None => {
            if n == 1 {
                0.75
            } else {
                1.2
            }
        }
    };
    let eps_loss = raw.f64("system", "eps_loss")?.unwrap_or(0.01);
    if !(eps_loss > 0.0) {
        return Err(format!("[system] eps_loss = {eps_loss} must be positive"));
    }

    let preset = InitialDataPreset {
        a_u0: raw.f64("data", "a_u0")?.unwrap_or(1.0),
        a_u1: raw.f64("data", "a_u1")?.unwrap_or(1.0),
        a_v0: raw.f64("data", "a_v0")?.unwrap_or(1.0),
        a_v1: raw.f64("data", "a_v1")?.unwrap_or(1.0),
        width: raw.f64("data", "width")?.unwrap_or(1.0),
    };
    if !(preset.width > 0.0) {
        return Err(format!("[data] width = {} must be positive", preset.width));
    }
    if raw.bool("data", "require_blowup_admissible")?.unwrap_or(false)
        && !preset.is_blowup_admissible()
    {
        return Err(
            "[data] preset is not blow-up admissible: needs mean of u1 and of v0 + v1 positive"
                .into(),
        );
    }

    let t_max = raw.f64("time", "t_max")?;
    if let Some(t) = t_max {
        if !(t > 0.0 && t.is_finite()) {
            return Err(format!("[time] t_max = {t} must be positive"));
        }
    }
    let h = raw.f64("time", "h")?;
    if let Some(h) = h {
        if !(h > 0.0 && h.is_finite()) {
            return Err(format!("[time] h = {h} must be positive"));
        }
    }
    let sample_every = raw.usize("time", "sample_every")?.unwrap_or(10);
    if sample_every == 0 {
        return Err("[time] sample_every must be >= 1".into());
    }

    let fit_t_lo = raw.f64("fit", "t_lo")?;
    let fit_t_hi = raw.f64("fit", "t_hi")?;
    if let (Some(lo), Some(hi)) = (fit_t_lo, fit_t_hi) {
        if !(lo < hi) {
            return Err(format!("[fit] window t_lo = {lo} must precede t_hi = {hi}"));
        }
    }
    let fit_tolerance = raw.f64("fit", "tolerance")?.unwrap_or(0.10);
    if !(fit_tolerance >= 0.0) {
        return Err(format!("[fit] tolerance = {fit_tolerance} must be >= 0"));
    }

    let p_list = raw.f64_list("sweep", "p_list")?.unwrap_or_default();
    let q_list = raw.f64_list("sweep", "q_list")?.unwrap_or_default();
    for &e in p_list.iter().chain(&q_list) {
        if !(e > 1.0) {
            return Err(format!(
                "[sweep] exponent {e} violates min{{p, q}} > 1 (every sweep cell must satisfy it)"
            ));
        }
    }
    let decay_slope_threshold = raw.f64("sweep", "decay_slope_threshold")?.unwrap_or(-0.05);

    let r_list = raw
        .f64_list("blowup", "r_list")?
        .unwrap_or_else(|| vec![2.0, 4.0, 8.0, 16.0]);
    for &r in &r_list {
        if !(r >= 1.0) {
            return Err(format!("[blowup] R = {r} must be >= 1"));
        }
    }
    let kappa = match raw.get("blowup", "kappa") {
        None => None,
        Some("auto") => None,
        Some(v) => {
            let k: u32 = v
                .parse()
                .map_err(|_| format!("[blowup] kappa: expected \"auto\" or an integer, got \"{v}\""))?;
            if k < 2 {
                return Err(format!("[blowup] kappa = {k} must be >= 2"));
            }
            Some(k)
        }
    };

    let ineq_count = raw.usize("ineq", "count")?.unwrap_or(100);
    if ineq_count == 0 {
        return Err("[ineq] count must be >= 1".into());
    }
    let ineq_band_limit = raw.f64("ineq", "band_limit")?.unwrap_or(0.5);
    if !(ineq_band_limit > 0.0 && ineq_band_limit <= 2.0 / 3.0) {
        return Err(format!(
            "[ineq] band_limit = {ineq_band_limit} must lie in (0, 2/3]"
        ));
    }
    let ineq_decay = raw.f64("ineq", "decay")?.unwrap_or(1.0);

    let jobs = raw.usize("run", "jobs")?;
    if jobs == Some(0) {
        return Err("[run] jobs must be >= 1".into());
    }

    Ok(RunConfig {
        mode: raw.get("run", "mode").map(|s| s.to_string()),
        seed: raw.u64("run", "seed")?.unwrap_or(0),
        jobs,
        n,
        half_length,
        points,
        p,
        q,
        eps,
        s,
        eps_loss,
        preset,
        t_max,
        h,
        sample_every,
        fit_t_lo,
        fit_t_hi,
        fit_tolerance,
        p_list,
        q_list,
        decay_slope_threshold,
        r_list,
        kappa,
        ineq_count,
        ineq_band_limit,
        ineq_decay,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "critcurve-config v1\n\
[grid]\nn = 1\nL = 200\nN = 2048\n\
[system]\np = 2\nq = 2\neps = 0.01\n\
[time]\nt_max = 500\n";

    #[test]
    fn minimal_simulate_config_parses() {
        let cfg = parse_config(MINIMAL).unwrap();
        assert_eq!(cfg.n, 1);
        assert_eq!(cfg.points, 2048);
        assert_eq!(cfg.t_max, Some(500.0));
        assert_eq!(cfg.s, 0.75);
        assert_eq!(cfg.r_list, vec![2.0, 4.0, 8.0, 16.0]);
    }

    #[test]
    fn small_exponent_is_rejected_with_the_rule() {
        let text = MINIMAL.replace("p = 2", "p = 0.9");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("min{p, q} > 1"), "{err}");
    }

    #[test]
    fn unknown_key_is_fail_closed_with_hint() {
        let text = format!("{MINIMAL}[system]\ndampingg = 1\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("unknown key"), "{err}");
        assert!(err.contains("nearest known key"), "{err}");
    }

    #[test]
    fn version_header_is_required() {
        let err = parse_config("critcurve-config v2\n[grid]\nn = 1\n").unwrap_err();
        assert!(err.contains("critcurve-config v1"), "{err}");
    }

    #[test]
    fn duplicate_sections_merge_but_duplicate_keys_error() {
        let text = format!("{MINIMAL}[grid]\nn = 1\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("duplicate"), "{err}");
    }

    #[test]
    fn bad_grid_points_are_rejected() {
        let text = MINIMAL.replace("N = 2048", "N = 1000");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("power of two"), "{err}");
    }

    #[test]
    fn admissibility_flag_checks_preset() {
        let text = format!("{MINIMAL}[data]\na_u1 = -1\nrequire_blowup_admissible = true\n");
        let err = parse_config(&text).unwrap_err();
        assert!(err.contains("admissible"), "{err}");
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let text = "# leading comment\n\ncritcurve-config v1\n[grid]\nn = 1  # inline\nL = 10\nN = 64\n[system]\np = 2\nq = 2\n";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.points, 64);
        assert_eq!(cfg.t_max, None);
    }
}
