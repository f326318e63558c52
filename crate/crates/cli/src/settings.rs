//! Flat `key = value` settings shared by config files and command-line flags.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use chdr_rt::harness::{ProcessingModel, ScenarioConfig};
use chdr_rt::upols::ChannelMatrix;

pub const SEED_ENV: &str = "CHDR_RT_SEED";

/// Every key a config file may set.
pub const KEYS: &[&str] = &[
    "mode",
    "ports",
    "spp",
    "fs",
    "seed",
    "cir",
    "precision",
    "blocks",
    "capacity_bytes",
    "adc_delay",
    "dac_delay",
    "status_cadence",
    "latency",
    "jitter",
    "uplink_latency",
    "downlink_latency",
    "uplink_jitter",
    "downlink_jitter",
    "uplink_drops",
    "downlink_drops",
    "reorder",
    "proc_base",
    "proc_jitter",
    "proc_outlier",
    "proc_outlier_prob",
    "lead",
    "late",
    "excitation_len",
    "excitation_periods",
    "excitation_amplitude",
    "bin_width_us",
    "out",
];

#[derive(Debug, Default, Clone)]
pub struct Settings {
    values: BTreeMap<String, String>,
    /// Relative `cir` paths in a file resolve against the file's directory.
    base_dir: Option<PathBuf>,
}

impl Settings {
    pub fn parse(text: &str, base_dir: Option<PathBuf>) -> Result<Self, String> {
        let mut s = Settings { values: BTreeMap::new(), base_dir };
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", n + 1))?;
            s.set(k.trim(), v.trim()).map_err(|e| format!("line {}: {e}", n + 1))?;
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text, path.parent().map(Path::to_path_buf)).map_err(|e| format!("{}: {e}", path.display()))
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        if !KEYS.contains(&key) {
            return Err(format!("unknown key {key:?}"));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    /// Command-line value for `key`; wins over the file and is resolved
    /// against the working directory.
    pub fn override_with(&mut self, key: &str, value: Option<String>) {
        if let Some(v) = value {
            self.values.insert(key.to_string(), v);
            if key == "cir" {
                self.base_dir = None;
            }
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn num<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        self.get(key)
            .map(|v| v.parse::<T>().map_err(|_| format!("{key}: cannot parse {v:?}")))
            .transpose()
    }

    pub fn out_dir(&self) -> Option<PathBuf> {
        self.get("out").map(PathBuf::from)
    }

    pub fn seed(&self) -> Result<u64, String> {
        if let Some(s) = self.num("seed")? {
            return Ok(s);
        }
        match std::env::var(SEED_ENV) {
            Ok(v) => v.trim().parse().map_err(|_| format!("{SEED_ENV}: cannot parse {v:?}")),
            Err(_) => Ok(0),
        }
    }

    fn cir_path(&self) -> Option<PathBuf> {
        let p = PathBuf::from(self.get("cir")?);
        Some(match &self.base_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p,
        })
    }

    pub fn scenario(&self) -> Result<ScenarioConfig, String> {
        let mut cfg = ScenarioConfig::default();
        if let Some(m) = self.get("mode") {
            cfg.mode = m.parse().map_err(|e: chdr_rt::harness::HarnessError| e.to_string())?;
        }
        if let Some(p) = self.get("precision") {
            cfg.precision = p.parse().map_err(|e: chdr_rt::harness::HarnessError| e.to_string())?;
        }
        macro_rules! apply {
            ($($key:literal => $field:expr),* $(,)?) => {
                $(if let Some(v) = self.num($key)? { $field = v; })*
            };
        }
        apply! {
            "ports" => cfg.ports,
            "spp" => cfg.device.spp,
            "fs" => cfg.device.sample_rate,
            "blocks" => cfg.duration_blocks,
            "capacity_bytes" => cfg.device.capacity_bytes,
            "adc_delay" => cfg.device.adc_delay,
            "dac_delay" => cfg.device.dac_delay,
            "status_cadence" => cfg.device.status_cadence,
            "latency" => cfg.uplink.latency,
            "latency" => cfg.downlink.latency,
            "jitter" => cfg.uplink.jitter_max,
            "jitter" => cfg.downlink.jitter_max,
            "uplink_latency" => cfg.uplink.latency,
            "downlink_latency" => cfg.downlink.latency,
            "uplink_jitter" => cfg.uplink.jitter_max,
            "downlink_jitter" => cfg.downlink.jitter_max,
            "reorder" => cfg.uplink.reorder,
            "reorder" => cfg.downlink.reorder,
            "lead" => cfg.lead_margin,
            "excitation_len" => cfg.excitation.len,
            "excitation_periods" => cfg.excitation.periods,
            "excitation_amplitude" => cfg.excitation.amplitude,
            "bin_width_us" => cfg.bin_width_us,
        }
        let mut p = ProcessingModel::default();
        apply! {
            "proc_base" => p.base,
            "proc_jitter" => p.jitter_max,
            "proc_outlier" => p.outlier,
            "proc_outlier_prob" => p.outlier_prob,
        }
        cfg.processing = p;
        if let Some(v) = self.get("uplink_drops") {
            cfg.uplink.drop_plan = list(v, "uplink_drops")?.into_iter().collect();
        }
        if let Some(v) = self.get("downlink_drops") {
            cfg.downlink.drop_plan = list(v, "downlink_drops")?.into_iter().collect();
        }
        if let Some(v) = self.get("late") {
            cfg.late_packets = v
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|pair| {
                    let (k, d) = pair.split_once(':').ok_or_else(|| format!("late: expected ordinal:ticks, got {pair:?}"))?;
                    Ok((parse(k, "late")?, parse(d, "late")?))
                })
                .collect::<Result<_, String>>()?;
        }
        if let Some(path) = self.cir_path() {
            let bytes = std::fs::read(&path).map_err(|e| format!("cir {}: {e}", path.display()))?;
            cfg.cir = Some(ChannelMatrix::parse(&bytes).map_err(|e| format!("cir {}: {e}", path.display()))?);
        }
        cfg.seed = self.seed()?;
        cfg.validate().map_err(|e| e.to_string())?;
        Ok(cfg)
    }
}

fn parse<T: std::str::FromStr>(v: &str, key: &str) -> Result<T, String> {
    v.trim().parse().map_err(|_| format!("{key}: cannot parse {v:?}"))
}

fn list(v: &str, key: &str) -> Result<Vec<u64>, String> {
    v.split(',').filter(|s| !s.trim().is_empty()).map(|s| parse(s, key)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_values_and_overrides() {
        let mut s = Settings::parse("spp = 256  # packet size\n\nmode=passthrough\nlatency = 40\n", None).unwrap();
        s.override_with("spp", Some("512".into()));
        s.override_with("seed", None);
        let cfg = s.scenario().unwrap();
        assert_eq!(cfg.device.spp, 512);
        assert_eq!(cfg.uplink.latency, 40);
        assert_eq!(cfg.downlink.latency, 40);
    }

    #[test]
    fn specific_link_keys_win_over_shorthand() {
        let s = Settings::parse("latency = 40\nuplink_latency = 7\n", None).unwrap();
        let cfg = s.scenario().unwrap();
        assert_eq!((cfg.uplink.latency, cfg.downlink.latency), (7, 40));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        assert!(Settings::parse("spp = 1\nspeed = 3\n", None).unwrap_err().contains("line 2"));
        assert!(Settings::parse("spp 256\n", None).is_err());
        let s = Settings::parse("spp = lots\n", None).unwrap();
        assert!(s.scenario().unwrap_err().contains("spp"));
    }

    #[test]
    fn lists() {
        let s = Settings::parse("uplink_drops = 3, 10\nlate = 6:300,9:20\n", None).unwrap();
        let cfg = s.scenario().unwrap();
        assert_eq!(cfg.uplink.drop_plan.iter().copied().collect::<Vec<_>>(), vec![3, 10]);
        assert_eq!(cfg.late_packets, vec![(6, 300), (9, 20)]);
    }
}
