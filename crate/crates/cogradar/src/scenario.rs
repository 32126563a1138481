//! Scenario configuration: what the radar faces (targets over pulse
//! intervals, disturbance), how it is built (array, detector, agent), and
//! how the experiment runs (policy, pulse count, Monte Carlo replication).
//!
//! Scenarios live in a flat line-oriented text format with `[section]`
//! headers, `key = value` lines, `#` comments, and one `[[target]]` section
//! per target event. Omitted sections fall back to the documented defaults,
//! so a minimal file only names what it changes. Six bundled presets cover
//! the stationary four-target setup, antenna/ROC sweep bases, an angle
//! switch, staged SNR fading, and a five-interval appearing/disappearing
//! target sequence.

use crate::agent::{AgentConfig, RewardRule};
use crate::array::ArrayConfig;
use crate::detector::DetectorConfig;
use crate::disturbance::{ridge_poles, DisturbanceSpec};
use crate::error::{Error, Result};
use crate::C64;
use std::fmt::Write as _;

/// One target occupying a grid frequency over an inclusive pulse interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetEvent {
    pub from_pulse: usize,
    pub to_pulse: usize,
    pub nu: f64,
    pub snr_db: f64,
}

impl TargetEvent {
    pub fn active_at(&self, pulse: usize) -> bool {
        (self.from_pulse..=self.to_pulse).contains(&pulse)
    }
}

/// Which controller drives the transmit beam.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Policy {
    /// SARSA-selected bin count, max-min beams.
    Rl,
    /// Equal-power identity weights every pulse.
    Omnidirectional,
    /// Max-min beams toward all currently flagged bins, no learning.
    AdaptiveNoRl,
}

impl Policy {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "rl" => Ok(Policy::Rl),
            "omnidirectional" | "omni" => Ok(Policy::Omnidirectional),
            "adaptive-no-rl" | "adaptive" => Ok(Policy::AdaptiveNoRl),
            other => Err(Error::invalid(format!(
                "unknown policy `{other}` (expected rl, omnidirectional, or adaptive-no-rl)"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Policy::Rl => "rl",
            Policy::Omnidirectional => "omnidirectional",
            Policy::AdaptiveNoRl => "adaptive-no-rl",
        }
    }
}

/// A complete, validated experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub cfg: ArrayConfig,
    pub disturbance: DisturbanceSpec,
    pub events: Vec<TargetEvent>,
    /// Pulses per episode (K).
    pub pulses: usize,
    pub mc_runs: usize,
    pub detector: DetectorConfig,
    pub policy: Policy,
    pub agent: AgentConfig,
    pub seed: u64,
    /// Transmit power budget P_T.
    pub total_power: f64,
    /// Warm-up samples discarded per disturbance draw.
    pub burn_in: usize,
    /// Draw one disturbance per pulse shared by all bins instead of
    /// independent per-bin draws.
    pub shared_disturbance: bool,
}

impl Scenario {
    /// Checks cross-field invariants; every constructor path funnels here.
    pub fn validate(&self) -> Result<()> {
        if self.pulses == 0 {
            return Err(Error::invalid("pulse count must be >= 1"));
        }
        if self.mc_runs == 0 {
            return Err(Error::invalid("mc_runs must be >= 1"));
        }
        if !(self.total_power > 0.0) {
            return Err(Error::invalid("total power must be positive"));
        }
        if self.burn_in < 10 * self.disturbance.order() {
            return Err(Error::invalid(format!(
                "burn_in {} below 10x the AR order {}",
                self.burn_in,
                self.disturbance.order()
            )));
        }
        for ev in &self.events {
            if ev.from_pulse > ev.to_pulse {
                return Err(Error::invalid(format!(
                    "target interval [{}, {}] is reversed",
                    ev.from_pulse, ev.to_pulse
                )));
            }
            if ev.to_pulse >= self.pulses {
                return Err(Error::invalid(format!(
                    "target interval end {} outside the {}-pulse episode",
                    ev.to_pulse, self.pulses
                )));
            }
            self.bin_of(ev.nu)?;
        }
        // One target per bin per pulse: reject overlapping same-bin events.
        for (i, a) in self.events.iter().enumerate() {
            for b in &self.events[i + 1..] {
                let same_bin = (a.nu - b.nu).abs() < 1e-9;
                let overlap = a.from_pulse <= b.to_pulse && b.from_pulse <= a.to_pulse;
                if same_bin && overlap {
                    return Err(Error::invalid(format!(
                        "two targets occupy frequency {} on overlapping pulse intervals",
                        a.nu
                    )));
                }
            }
        }
        Ok(())
    }

    /// Grid index hosting frequency `nu`.
    pub fn bin_of(&self, nu: f64) -> Result<usize> {
        self.cfg
            .grid
            .iter()
            .position(|&g| (g - nu).abs() < 1e-9)
            .ok_or_else(|| {
                Error::invalid(format!("target frequency {nu} is not on the angle grid"))
            })
    }

    /// Targets active at a pulse, as (bin, snr_db) pairs.
    pub fn targets_at(&self, pulse: usize) -> Vec<(usize, f64)> {
        self.events
            .iter()
            .filter(|ev| ev.active_at(pulse))
            .map(|ev| (self.bin_of(ev.nu).expect("validated"), ev.snr_db))
            .collect()
    }

    /// Canonical text form; `parse` of the output reproduces the scenario
    /// exactly.
    pub fn emit(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[array]");
        let _ = writeln!(s, "ntx = {}", self.cfg.n_tx);
        let _ = writeln!(s, "nrx = {}", self.cfg.n_rx);
        let grid: Vec<String> = self.cfg.grid.iter().map(|v| format!("{v}")).collect();
        let _ = writeln!(s, "grid = {}", grid.join(", "));
        let _ = writeln!(s);
        let _ = writeln!(s, "[disturbance]");
        let taps: Vec<String> = self
            .disturbance
            .taps()
            .iter()
            .map(|c| format!("{}{}{}i", c.re, if c.im < 0.0 { "" } else { "+" }, c.im))
            .collect();
        let _ = writeln!(s, "taps = {}", taps.join(", "));
        let _ = writeln!(s, "mu = {}", self.disturbance.mu());
        let _ = writeln!(s, "sigma2 = {}", self.disturbance.sigma2());
        let _ = writeln!(s);
        let _ = writeln!(s, "[detector]");
        let _ = writeln!(s, "pfa = {}", self.detector.pfa);
        match self.detector.lag {
            Some(l) => {
                let _ = writeln!(s, "lag = {l}");
            }
            None => {
                let _ = writeln!(s, "lag = auto");
            }
        }
        let _ = writeln!(s, "guard_scale = {}", self.detector.guard_scale);
        let _ = writeln!(s, "shared_cov = {}", self.detector.shared_cov);
        let _ = writeln!(s);
        let _ = writeln!(s, "[agent]");
        let _ = writeln!(s, "learning_rate = {}", self.agent.learning_rate);
        let _ = writeln!(s, "discount = {}", self.agent.discount);
        let _ = writeln!(s, "epsilon = {}", self.agent.epsilon);
        let _ = writeln!(s, "epsilon_decay = {}", self.agent.epsilon_decay);
        let _ = writeln!(s, "max_targets = {}", self.agent.max_targets);
        let rule = match self.agent.reward_rule {
            RewardRule::ChosenSet => "chosen-set",
            RewardRule::FlagCount => "flag-count",
        };
        let _ = writeln!(s, "reward_rule = {rule}");
        let _ = writeln!(s);
        let _ = writeln!(s, "[simulation]");
        let _ = writeln!(s, "pulses = {}", self.pulses);
        let _ = writeln!(s, "mc_runs = {}", self.mc_runs);
        let _ = writeln!(s, "policy = {}", self.policy.as_str());
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "total_power = {}", self.total_power);
        let _ = writeln!(s, "burn_in = {}", self.burn_in);
        let _ = writeln!(s, "shared_disturbance = {}", self.shared_disturbance);
        for ev in &self.events {
            let _ = writeln!(s);
            let _ = writeln!(s, "[[target]]");
            let _ = writeln!(s, "from = {}", ev.from_pulse);
            let _ = writeln!(s, "to = {}", ev.to_pulse);
            let _ = writeln!(s, "nu = {}", ev.nu);
            let _ = writeln!(s, "snr_db = {}", ev.snr_db);
        }
        s
    }
}

fn default_disturbance() -> DisturbanceSpec {
    DisturbanceSpec::from_poles(&ridge_poles(), 2.0, 1.0).expect("bundled poles are stable")
}

fn base_scenario() -> Scenario {
    Scenario {
        cfg: ArrayConfig::new(32, 32, ArrayConfig::default_grid()).expect("static config"),
        disturbance: default_disturbance(),
        events: Vec::new(),
        pulses: 50,
        mc_runs: 200,
        detector: DetectorConfig::new(1e-2).expect("static pfa"),
        policy: Policy::Rl,
        agent: AgentConfig::default()
            .with_epsilon_decay(0.9)
            .expect("static decay"),
        seed: 1,
        total_power: 1.0,
        burn_in: DisturbanceSpec::DEFAULT_BURN_IN,
        shared_disturbance: false,
    }
}

fn span_events(nu_snr: &[(f64, f64)], from: usize, to: usize) -> Vec<TargetEvent> {
    nu_snr
        .iter()
        .map(|&(nu, snr_db)| TargetEvent {
            from_pulse: from,
            to_pulse: to,
            nu,
            snr_db,
        })
        .collect()
}

/// The stationary four-target layout shared by several presets.
const FOUR_TARGETS: [(f64, f64); 4] = [(-0.2, -5.0), (0.0, -8.0), (0.2, -10.0), (0.3, -9.0)];

/// Bundled experiment presets by name (`scenario1` … `scenario6`).
pub fn preset(name: &str) -> Result<Scenario> {
    let scenario = match name {
        // Stationary four targets; scenario2/scenario3 reuse the same
        // layout as sweep bases (antenna counts, false-alarm rates).
        "scenario1" | "scenario2" | "scenario3" => {
            let mut s = base_scenario();
            s.events = span_events(&FOUR_TARGETS, 0, 49);
            s
        }
        // Angle switch halfway through a 100-pulse episode.
        "scenario4" => {
            let mut s = base_scenario();
            s.pulses = 100;
            s.mc_runs = 100;
            s.events = span_events(&FOUR_TARGETS, 0, 49);
            s.events.extend(span_events(
                &[(-0.05, -5.0), (0.05, -8.0), (0.25, -10.0), (0.35, -9.0)],
                50,
                99,
            ));
            s
        }
        // Staged power fade: each 30-pulse stage scales target power to
        // 100%, 80%, 60%, then 40% of nominal.
        "scenario5" => {
            let mut s = base_scenario();
            s.pulses = 100;
            s.mc_runs = 100;
            s.events.clear();
            let stages = [(0usize, 29usize, 1.0), (30, 59, 0.8), (60, 89, 0.6), (90, 99, 0.4)];
            for (from, to, factor) in stages {
                let faded: Vec<(f64, f64)> = FOUR_TARGETS
                    .iter()
                    .map(|&(nu, snr)| (nu, snr + 10.0 * f64::log10(factor)))
                    .collect();
                s.events.extend(span_events(&faded, from, to));
            }
            s
        }
        // Appearing/disappearing targets over five intervals at a stricter
        // false-alarm rate.
        "scenario6" => {
            let mut s = base_scenario();
            s.pulses = 60;
            s.mc_runs = 100;
            s.detector = DetectorConfig::new(1e-4).expect("static pfa");
            s.events = span_events(&[(-0.2, -5.0), (0.0, -9.0)], 0, 9);
            s.events.extend(span_events(
                &[
                    (-0.2, -6.0),
                    (0.0, -8.0),
                    (0.15, -10.0),
                    (0.25, -11.0),
                    (0.3, -12.0),
                ],
                20,
                34,
            ));
            s.events.extend(span_events(&[(0.0, -9.0), (0.2, -8.0)], 35, 49));
            s.events.extend(span_events(
                &[(-0.05, -8.0), (0.05, -7.0), (0.25, -10.0), (0.35, -13.0)],
                50,
                59,
            ));
            s
        }
        other => {
            return Err(Error::invalid(format!(
                "unknown preset `{other}` (expected scenario1..scenario6)"
            )))
        }
    };
    scenario.validate()?;
    Ok(scenario)
}

#[derive(Default)]
struct RawSection {
    name: String,
    line: usize,
    keys: Vec<(String, String, usize)>,
}

fn parse_err(line: usize, field: &str, message: impl Into<String>) -> Error {
    Error::ScenarioParse {
        line,
        field: field.to_string(),
        message: message.into(),
    }
}

/// Parses the scenario text format, filling documented defaults for every
/// omitted section or key.
pub fn parse(text: &str) -> Result<Scenario> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(p) => &raw_line[..p],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix("[[").and_then(|s| s.strip_suffix("]]")) {
            sections.push(RawSection {
                name: format!("[[{}]]", name.trim()),
                line: line_no,
                keys: Vec::new(),
            });
        } else if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            sections.push(RawSection {
                name: name.trim().to_string(),
                line: line_no,
                keys: Vec::new(),
            });
        } else if let Some((key, value)) = line.split_once('=') {
            let section = sections
                .last_mut()
                .ok_or_else(|| parse_err(line_no, key.trim(), "key before any [section]"))?;
            section
                .keys
                .push((key.trim().to_string(), value.trim().to_string(), line_no));
        } else {
            return Err(parse_err(
                line_no,
                line,
                "expected `key = value`, `[section]`, or `[[target]]`",
            ));
        }
    }

    let mut scenario = Scenario {
        cfg: ArrayConfig::new(32, 32, ArrayConfig::default_grid()).expect("static"),
        disturbance: default_disturbance(),
        events: Vec::new(),
        pulses: 50,
        mc_runs: 200,
        detector: DetectorConfig::new(1e-2).expect("static"),
        policy: Policy::Rl,
        agent: AgentConfig::default(),
        seed: 1,
        total_power: 1.0,
        burn_in: DisturbanceSpec::DEFAULT_BURN_IN,
        shared_disturbance: false,
    };

    for section in &sections {
        match section.name.as_str() {
            "array" => apply_array(section, &mut scenario)?,
            "disturbance" => apply_disturbance(section, &mut scenario)?,
            "detector" => apply_detector(section, &mut scenario)?,
            "agent" => apply_agent(section, &mut scenario)?,
            "simulation" => apply_simulation(section, &mut scenario)?,
            "[[target]]" => apply_target(section, &mut scenario)?,
            other => {
                return Err(parse_err(
                    section.line,
                    other,
                    "unknown section (expected array, disturbance, detector, agent, simulation, or [[target]])",
                ))
            }
        }
    }

    scenario.validate().map_err(|e| match e {
        Error::InvalidArgument(msg) => parse_err(0, "scenario", msg),
        other => other,
    })?;
    Ok(scenario)
}

fn parse_f64(value: &str, line: usize, field: &str) -> Result<f64> {
    value
        .parse()
        .map_err(|_| parse_err(line, field, format!("`{value}` is not a number")))
}

fn parse_usize(value: &str, line: usize, field: &str) -> Result<usize> {
    value
        .parse()
        .map_err(|_| parse_err(line, field, format!("`{value}` is not a nonnegative integer")))
}

fn parse_bool(value: &str, line: usize, field: &str) -> Result<bool> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(parse_err(line, field, format!("`{value}` is not true/false"))),
    }
}

fn apply_array(section: &RawSection, scenario: &mut Scenario) -> Result<()> {
    let mut n_tx = scenario.cfg.n_tx;
    let mut n_rx = scenario.cfg.n_rx;
    let mut grid = scenario.cfg.grid.clone();
    for (key, value, line) in &section.keys {
        match key.as_str() {
            "ntx" => n_tx = parse_usize(value, *line, key)?,
            "nrx" => n_rx = parse_usize(value, *line, key)?,
            "grid" => {
                grid = value
                    .split(',')
                    .map(|v| parse_f64(v.trim(), *line, key))
                    .collect::<Result<_>>()?;
            }
            _ => return Err(parse_err(*line, key, "unknown key in [array]")),
        }
    }
    scenario.cfg = ArrayConfig::new(n_tx, n_rx, grid)
        .map_err(|e| parse_err(section.line, "array", e.to_string()))?;
    Ok(())
}

fn parse_complex(value: &str, line: usize, field: &str) -> Result<C64> {
    // `a+bi` / `a-bi` / bare real; num-complex's parser handles the forms.
    value
        .parse::<C64>()
        .map_err(|_| parse_err(line, field, format!("`{value}` is not a complex `a+bi` value")))
}

fn apply_disturbance(section: &RawSection, scenario: &mut Scenario) -> Result<()> {
    let mut taps: Option<Vec<C64>> = None;
    let mut poles: Option<Vec<(f64, f64)>> = None;
    let mut mu = scenario.disturbance.mu();
    let mut sigma2 = scenario.disturbance.sigma2();
    let mut build_line = section.line;
    for (key, value, line) in &section.keys {
        match key.as_str() {
            "taps" => {
                build_line = *line;
                taps = Some(
                    value
                        .split(',')
                        .map(|v| parse_complex(v.trim(), *line, key))
                        .collect::<Result<_>>()?,
                );
            }
            "poles" => {
                build_line = *line;
                // `mag@cycles` means mag·e^{j·2π·cycles}.
                poles = Some(
                    value
                        .split(',')
                        .map(|v| {
                            let v = v.trim();
                            let (mag, cyc) = v.split_once('@').ok_or_else(|| {
                                parse_err(*line, key, format!("`{v}` is not `mag@cycles`"))
                            })?;
                            Ok((
                                parse_f64(mag.trim(), *line, key)?,
                                parse_f64(cyc.trim(), *line, key)?,
                            ))
                        })
                        .collect::<Result<_>>()?,
                );
            }
            "mu" => {
                build_line = *line;
                mu = parse_f64(value, *line, key)?;
            }
            "sigma2" => {
                build_line = *line;
                sigma2 = parse_f64(value, *line, key)?;
            }
            _ => return Err(parse_err(*line, key, "unknown key in [disturbance]")),
        }
    }
    if taps.is_some() && poles.is_some() {
        return Err(parse_err(
            build_line,
            "taps",
            "give either taps or poles, not both",
        ));
    }
    let built = match (taps, poles) {
        (Some(t), None) => DisturbanceSpec::new(t, mu, sigma2),
        (None, Some(p)) => DisturbanceSpec::from_poles(&p, mu, sigma2),
        (None, None) => DisturbanceSpec::new(scenario.disturbance.taps().to_vec(), mu, sigma2),
        (Some(_), Some(_)) => unreachable!(),
    };
    scenario.disturbance =
        built.map_err(|e| parse_err(build_line, "disturbance", e.to_string()))?;
    Ok(())
}

fn apply_detector(section: &RawSection, scenario: &mut Scenario) -> Result<()> {
    for (key, value, line) in &section.keys {
        match key.as_str() {
            "pfa" => {
                let pfa = parse_f64(value, *line, key)?;
                scenario.detector = DetectorConfig::new(pfa).map_err(|e| {
                    parse_err(*line, key, e.to_string())
                })?;
                scenario.detector.lag = None;
            }
            "lag" => {
                scenario.detector.lag = if value == &"auto" {
                    None
                } else {
                    Some(parse_usize(value, *line, key)?)
                };
            }
            "guard_scale" => {
                let g = parse_f64(value, *line, key)?;
                if !(g >= 0.0) {
                    return Err(parse_err(*line, key, "guard_scale must be >= 0"));
                }
                scenario.detector.guard_scale = g;
            }
            "shared_cov" => scenario.detector.shared_cov = parse_bool(value, *line, key)?,
            _ => return Err(parse_err(*line, key, "unknown key in [detector]")),
        }
    }
    Ok(())
}

fn apply_agent(section: &RawSection, scenario: &mut Scenario) -> Result<()> {
    let mut cfg = scenario.agent.clone();
    for (key, value, line) in &section.keys {
        match key.as_str() {
            "learning_rate" => cfg.learning_rate = parse_f64(value, *line, key)?,
            "discount" => cfg.discount = parse_f64(value, *line, key)?,
            "epsilon" => cfg.epsilon = parse_f64(value, *line, key)?,
            "epsilon_decay" => cfg.epsilon_decay = parse_f64(value, *line, key)?,
            "max_targets" => cfg.max_targets = parse_usize(value, *line, key)?,
            "reward_rule" => {
                cfg.reward_rule = match value.as_str() {
                    "chosen-set" => RewardRule::ChosenSet,
                    "flag-count" => RewardRule::FlagCount,
                    other => {
                        return Err(parse_err(
                            *line,
                            key,
                            format!("`{other}` is not chosen-set or flag-count"),
                        ))
                    }
                };
            }
            _ => return Err(parse_err(*line, key, "unknown key in [agent]")),
        }
    }
    // Revalidate ranges through the constructor.
    let rebuilt = AgentConfig::new(cfg.learning_rate, cfg.discount, cfg.epsilon, cfg.max_targets)
        .and_then(|c| c.with_epsilon_decay(cfg.epsilon_decay))
        .map_err(|e| parse_err(section.line, "agent", e.to_string()))?;
    scenario.agent = AgentConfig {
        reward_rule: cfg.reward_rule,
        ..rebuilt
    };
    Ok(())
}

fn apply_simulation(section: &RawSection, scenario: &mut Scenario) -> Result<()> {
    for (key, value, line) in &section.keys {
        match key.as_str() {
            "pulses" => scenario.pulses = parse_usize(value, *line, key)?,
            "mc_runs" => scenario.mc_runs = parse_usize(value, *line, key)?,
            "policy" => {
                scenario.policy =
                    Policy::parse(value).map_err(|e| parse_err(*line, key, e.to_string()))?
            }
            "seed" => {
                scenario.seed = value
                    .parse()
                    .map_err(|_| parse_err(*line, key, format!("`{value}` is not a seed")))?
            }
            "total_power" => scenario.total_power = parse_f64(value, *line, key)?,
            "burn_in" => scenario.burn_in = parse_usize(value, *line, key)?,
            "shared_disturbance" => scenario.shared_disturbance = parse_bool(value, *line, key)?,
            _ => return Err(parse_err(*line, key, "unknown key in [simulation]")),
        }
    }
    Ok(())
}

fn apply_target(section: &RawSection, scenario: &mut Scenario) -> Result<()> {
    let mut from = None;
    let mut to = None;
    let mut nu = None;
    let mut snr_db = None;
    for (key, value, line) in &section.keys {
        match key.as_str() {
            "from" => from = Some(parse_usize(value, *line, key)?),
            "to" => to = Some(parse_usize(value, *line, key)?),
            "nu" => nu = Some(parse_f64(value, *line, key)?),
            "snr_db" => snr_db = Some(parse_f64(value, *line, key)?),
            _ => return Err(parse_err(*line, key, "unknown key in [[target]]")),
        }
    }
    let nu = nu.ok_or_else(|| parse_err(section.line, "nu", "[[target]] needs nu"))?;
    let snr_db =
        snr_db.ok_or_else(|| parse_err(section.line, "snr_db", "[[target]] needs snr_db"))?;
    scenario.events.push(TargetEvent {
        from_pulse: from.unwrap_or(0),
        to_pulse: to.unwrap_or(scenario.pulses.saturating_sub(1)),
        nu,
        snr_db,
    });
    Ok(())
}
