//! The divider configuration file format: a flat key-value schema, one
//! `key = value` pair per line, `#` comments. Lists are comma separated;
//! stages repeat the `stage` key as `name:readout_iteration:mantissa_bits`
//! with an optional fourth `input_frac_bits` field.
//!
//! The shipped presets are embedded here so the files on disk and the
//! constructors in [`crate::presets`] cannot drift apart.

use crate::engine::{DividerConfig, FactorMode, StageSpec};
use crate::recip::BipartiteConfig;

pub const THREESTAGE_CFG: &str = include_str!("../configs/threestage.cfg");
pub const TWOSTAGE_CFG: &str = include_str!("../configs/twostage.cfg");
pub const TOY_CFG: &str = include_str!("../configs/toy.cfg");

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("missing key {0}")]
    Missing(&'static str),
    #[error("unknown sweep knob {0:?}")]
    UnknownKnob(String),
}

fn parse_err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Parse { line, message: message.into() }
}

struct RawConfig {
    scalars: std::collections::HashMap<String, (usize, String)>,
    stages: Vec<(usize, String)>,
}

fn lex(text: &str) -> Result<RawConfig, ConfigError> {
    let mut scalars = std::collections::HashMap::new();
    let mut stages = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.split_once('#') {
            Some((body, _)) => body,
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, "expected key = value"))?;
        let key = key.trim();
        let value = value.trim().to_string();
        if key == "stage" {
            stages.push((line_no, value));
        } else if scalars.insert(key.to_string(), (line_no, value)).is_some() {
            return Err(parse_err(line_no, format!("duplicate key {key}")));
        }
    }
    Ok(RawConfig { scalars, stages })
}

impl RawConfig {
    fn take(&mut self, key: &'static str) -> Result<(usize, String), ConfigError> {
        self.scalars.remove(key).ok_or(ConfigError::Missing(key))
    }

    fn u32(&mut self, key: &'static str) -> Result<u32, ConfigError> {
        let (line, v) = self.take(key)?;
        v.parse().map_err(|_| parse_err(line, format!("{key} must be an unsigned integer")))
    }

    fn i64(&mut self, key: &'static str) -> Result<i64, ConfigError> {
        let (line, v) = self.take(key)?;
        v.parse().map_err(|_| parse_err(line, format!("{key} must be an integer")))
    }

    fn bool(&mut self, key: &'static str) -> Result<bool, ConfigError> {
        let (line, v) = self.take(key)?;
        match v.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(parse_err(line, format!("{key} must be true or false"))),
        }
    }

    fn u32_list(&mut self, key: &'static str) -> Result<Vec<u32>, ConfigError> {
        let (line, v) = self.take(key)?;
        v.split(',')
            .map(|p| p.trim().parse().map_err(|_| parse_err(line, format!("{key}: bad entry {p:?}"))))
            .collect()
    }
}

/// Parses a configuration from its file text.
pub fn parse(text: &str) -> Result<DividerConfig, ConfigError> {
    let mut raw = lex(text)?;
    let iterations = raw.u32("iterations")? as usize;
    let n_frac_bits = raw.u32_list("n_frac_bits")?;
    let d_frac_bits = raw.u32_list("d_frac_bits")?;
    let f_frac_bits = raw.u32_list("f_frac_bits")?;
    let f_omit_bits = raw.u32_list("f_omit_bits")?;
    let (mode_line, mode) = raw.take("factor_mode")?;
    let factor_mode = match mode.as_str() {
        "ones_complement" => FactorMode::OnesComplement,
        "twos_complement" => FactorMode::TwosComplement,
        other => {
            return Err(parse_err(
                mode_line,
                format!("factor_mode must be ones_complement or twos_complement, got {other:?}"),
            ))
        }
    };
    let bias_ulps = raw.i64("bias_ulps")?;
    let table = BipartiteConfig {
        n1: raw.u32("table_n1")?,
        n2: raw.u32("table_n2")?,
        n3: raw.u32("table_n3")?,
        large_out_bits: raw.u32("table_large_out_bits")?,
        small_out_bits: raw.u32("table_small_out_bits")?,
        sub_bits: raw.u32("table_sub_bits")?,
        out_frac_bits: raw.u32("table_out_frac_bits")?,
        implied_leading_bit: raw.bool("table_implied_leading_bit")?,
    };
    if raw.stages.is_empty() {
        return Err(ConfigError::Missing("stage"));
    }
    let mut stages = Vec::new();
    for (line, text) in std::mem::take(&mut raw.stages) {
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 && parts.len() != 4 {
            return Err(parse_err(line, "stage needs name:readout_iteration:mantissa_bits[:input_frac_bits]"));
        }
        let iteration: usize =
            parts[1].trim().parse().map_err(|_| parse_err(line, "bad readout iteration"))?;
        let mantissa: u32 = parts[2].trim().parse().map_err(|_| parse_err(line, "bad mantissa bits"))?;
        let mut spec = StageSpec::new(parts[0].trim(), iteration, mantissa);
        if parts.len() == 4 {
            spec.input_frac_bits =
                parts[3].trim().parse().map_err(|_| parse_err(line, "bad input fraction bits"))?;
        }
        stages.push(spec);
    }
    if let Some((key, (line, _))) = raw.scalars.iter().next() {
        return Err(parse_err(*line, format!("unknown key {key}")));
    }
    Ok(DividerConfig {
        iterations,
        n_frac_bits,
        d_frac_bits,
        f_frac_bits,
        f_omit_bits,
        factor_mode,
        bias_ulps,
        stages,
        table,
    })
}

/// Serializes a configuration back to file text.
pub fn to_text(config: &DividerConfig) -> String {
    let list = |v: &[u32]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",");
    let mut out = String::new();
    out.push_str(&format!("iterations = {}\n", config.iterations));
    out.push_str(&format!("n_frac_bits = {}\n", list(&config.n_frac_bits)));
    out.push_str(&format!("d_frac_bits = {}\n", list(&config.d_frac_bits)));
    out.push_str(&format!("f_frac_bits = {}\n", list(&config.f_frac_bits)));
    out.push_str(&format!("f_omit_bits = {}\n", list(&config.f_omit_bits)));
    out.push_str(&format!(
        "factor_mode = {}\n",
        match config.factor_mode {
            FactorMode::OnesComplement => "ones_complement",
            FactorMode::TwosComplement => "twos_complement",
        }
    ));
    out.push_str(&format!("bias_ulps = {}\n", config.bias_ulps));
    for s in &config.stages {
        if s.input_frac_bits == s.mantissa_bits {
            out.push_str(&format!("stage = {}:{}:{}\n", s.name, s.readout_iteration, s.mantissa_bits));
        } else {
            out.push_str(&format!(
                "stage = {}:{}:{}:{}\n",
                s.name, s.readout_iteration, s.mantissa_bits, s.input_frac_bits
            ));
        }
    }
    let t = &config.table;
    out.push_str(&format!("table_n1 = {}\n", t.n1));
    out.push_str(&format!("table_n2 = {}\n", t.n2));
    out.push_str(&format!("table_n3 = {}\n", t.n3));
    out.push_str(&format!("table_large_out_bits = {}\n", t.large_out_bits));
    out.push_str(&format!("table_small_out_bits = {}\n", t.small_out_bits));
    out.push_str(&format!("table_sub_bits = {}\n", t.sub_bits));
    out.push_str(&format!("table_out_frac_bits = {}\n", t.out_frac_bits));
    out.push_str(&format!("table_implied_leading_bit = {}\n", t.implied_leading_bit));
    out
}

/// Loads a configuration from a path, or from a builtin preset when the
/// argument names one and no such file exists.
pub fn load(path_or_preset: &str) -> Result<DividerConfig, String> {
    let path = std::path::Path::new(path_or_preset);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{path_or_preset}: {e}"))?;
        return parse(&text).map_err(|e| format!("{path_or_preset}: {e}"));
    }
    if let Some(cfg) = crate::presets::by_name(path_or_preset) {
        return Ok(cfg);
    }
    Err(format!(
        "{path_or_preset}: no such file, and not a preset (available: {})",
        crate::presets::PRESET_NAMES.join(", ")
    ))
}

/// The wordlength knobs the sweep explores. `n<i>`, `d<i>` and `f<i>` set a
/// single per-iteration width, `bias` sets the bias, and `ulp` sets every
/// numerator/denominator width and the last factor to a uniform value.
pub fn apply_knob(config: &mut DividerConfig, knob: &str, value: i64) -> Result<(), ConfigError> {
    let bad = || ConfigError::UnknownKnob(knob.to_string());
    let index = |rest: &str, len: usize| -> Result<usize, ConfigError> {
        let i: usize = rest.parse().map_err(|_| bad())?;
        if i < len {
            Ok(i)
        } else {
            Err(bad())
        }
    };
    if knob == "bias" {
        config.bias_ulps = value;
        return Ok(());
    }
    let width = u32::try_from(value).map_err(|_| bad())?;
    if knob == "ulp" {
        let k = config.iterations;
        config.n_frac_bits = vec![width; k + 1];
        config.d_frac_bits = vec![width; k];
        config.f_frac_bits[k - 1] = width;
        return Ok(());
    }
    if let Some(rest) = knob.strip_prefix('n') {
        let i = index(rest, config.n_frac_bits.len())?;
        config.n_frac_bits[i] = width;
    } else if let Some(rest) = knob.strip_prefix('d') {
        let i = index(rest, config.d_frac_bits.len())?;
        config.d_frac_bits[i] = width;
    } else if let Some(rest) = knob.strip_prefix('f') {
        let i = index(rest, config.f_frac_bits.len())?;
        config.f_frac_bits[i] = width;
    } else {
        return Err(bad());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;

    #[test]
    fn shipped_files_match_the_constructors() {
        assert_eq!(parse(THREESTAGE_CFG).unwrap(), presets::three_stage());
        assert_eq!(parse(TWOSTAGE_CFG).unwrap(), presets::two_stage());
        assert_eq!(parse(TOY_CFG).unwrap(), presets::toy());
    }

    #[test]
    fn round_trip_every_preset() {
        for name in presets::PRESET_NAMES {
            let cfg = presets::by_name(name).unwrap();
            let text = to_text(&cfg);
            assert_eq!(parse(&text).unwrap(), cfg, "round trip failed for {name}");
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = "iterations = x\n";
        match parse(bad) {
            Err(ConfigError::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
        let dup = "iterations = 2\niterations = 3\n";
        assert!(matches!(parse(dup), Err(ConfigError::Parse { line: 2, .. })));
        let unknown = format!("{}weird_key = 3\n", to_text(&presets::toy()));
        assert!(matches!(parse(&unknown), Err(ConfigError::Parse { .. })));
        assert!(matches!(parse(""), Err(ConfigError::Missing(_))));
    }

    #[test]
    fn knobs_mutate_the_right_fields() {
        let mut cfg = presets::three_stage();
        apply_knob(&mut cfg, "f1", 56).unwrap();
        assert_eq!(cfg.f_frac_bits[1], 56);
        apply_knob(&mut cfg, "n0", 66).unwrap();
        assert_eq!(cfg.n_frac_bits[0], 66);
        apply_knob(&mut cfg, "bias", 5).unwrap();
        assert_eq!(cfg.bias_ulps, 5);
        apply_knob(&mut cfg, "ulp", 66).unwrap();
        assert_eq!(cfg.n_frac_bits, vec![66, 66, 66, 66]);
        assert_eq!(cfg.d_frac_bits, vec![66, 66, 66]);
        assert_eq!(cfg.f_frac_bits[2], 66);
        assert!(apply_knob(&mut cfg, "q7", 1).is_err());
        assert!(apply_knob(&mut cfg, "n9", 1).is_err());
    }

    #[test]
    fn load_falls_back_to_presets() {
        assert_eq!(load("twostage").unwrap(), presets::two_stage());
        assert!(load("definitely-not-a-preset").is_err());
    }
}
