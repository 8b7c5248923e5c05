//! Experiment configuration: flat INI-style sections of `key = value` lines.
//!
//! Parsing is strict: unknown sections and unknown keys are errors naming the
//! offender, which is what the `validate` subcommand surfaces.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::circuit::SolveSettings;
use crate::device::DeviceParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown section [{0}]")]
    UnknownSection(String),
    #[error("unknown key `{key}` in section [{section}]")]
    UnknownKey { section: String, key: String },
    #[error("missing key `{key}` in section [{section}]")]
    MissingKey { section: String, key: String },
    #[error("bad value for `{key}` in [{section}]: {msg}")]
    InvalidValue { section: String, key: String, msg: String },
    #[error("missing section [{0}]")]
    MissingSection(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("device parameters: {0}")]
    Device(#[from] crate::device::DeviceError),
}

/// FNV-1a over the raw config text; stamped into every emitted CSV.
pub fn config_hash(text: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in text.as_bytes() {
        h ^= *b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[derive(Debug, Default)]
struct RawSection {
    values: BTreeMap<String, (String, usize)>,
}

fn parse_ini(text: &str) -> Result<BTreeMap<String, RawSection>, ConfigError> {
    let mut sections: BTreeMap<String, RawSection> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                msg: format!("unterminated section header `{raw}`"),
            })?;
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                return Err(ConfigError::Syntax {
                    line: line_no,
                    msg: format!("duplicate section [{name}]"),
                });
            }
            sections.insert(name.clone(), RawSection::default());
            current = Some(name);
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            msg: format!("expected `key = value`, got `{raw}`"),
        })?;
        let section = current.clone().ok_or_else(|| ConfigError::Syntax {
            line: line_no,
            msg: "key outside any [section]".into(),
        })?;
        let entry = sections.get_mut(&section).expect("section exists");
        let key = key.trim().to_string();
        if entry.values.contains_key(&key) {
            return Err(ConfigError::Syntax {
                line: line_no,
                msg: format!("duplicate key `{key}` in [{section}]"),
            });
        }
        entry.values.insert(key, (value.trim().to_string(), line_no));
    }
    Ok(sections)
}

/// Typed view over one section that tracks which keys were consumed.
struct Section {
    name: String,
    values: BTreeMap<String, (String, usize)>,
}

impl Section {
    fn get<T: FromStr>(&mut self, key: &str) -> Result<T, ConfigError> {
        match self.take(key)? {
            Some(v) => Ok(v),
            None => Err(ConfigError::MissingKey { section: self.name.clone(), key: key.into() }),
        }
    }

    fn get_or<T: FromStr>(&mut self, key: &str, default: T) -> Result<T, ConfigError> {
        Ok(self.take(key)?.unwrap_or(default))
    }

    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.values.remove(key) {
            None => Ok(None),
            Some((text, _)) => text.parse::<T>().map(Some).map_err(|_| {
                ConfigError::InvalidValue {
                    section: self.name.clone(),
                    key: key.into(),
                    msg: format!("cannot parse `{text}`"),
                }
            }),
        }
    }

    fn take_list_f64(&mut self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.values.remove(key) {
            None => Ok(None),
            Some((text, _)) => {
                let mut out = Vec::new();
                for piece in text.split(',') {
                    let piece = piece.trim();
                    if piece.is_empty() {
                        continue;
                    }
                    out.push(piece.parse::<f64>().map_err(|_| ConfigError::InvalidValue {
                        section: self.name.clone(),
                        key: key.into(),
                        msg: format!("cannot parse `{piece}` as a number"),
                    })?);
                }
                if out.is_empty() {
                    return Err(ConfigError::InvalidValue {
                        section: self.name.clone(),
                        key: key.into(),
                        msg: "empty list".into(),
                    });
                }
                Ok(Some(out))
            }
        }
    }

    fn take_list_usize(&mut self, key: &str) -> Result<Option<Vec<usize>>, ConfigError> {
        Ok(self.take_list_f64(key)?.map(|v| v.iter().map(|x| *x as usize).collect()))
    }

    fn finish(self) -> Result<(), ConfigError> {
        if let Some(key) = self.values.into_keys().next() {
            return Err(ConfigError::UnknownKey { section: self.name, key });
        }
        Ok(())
    }
}

/// Which benchmark the experiment runs and its generation parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum TaskConfig {
    MemoryCapacity { samples: usize, dt: f64, input_low: f64, input_high: f64, max_delay: usize },
    Hhg { samples: usize, dt: f64, f_hz: f64, triangle_kmax: usize, square_kmax: usize },
    Mso { samples: usize, dt: f64, horizon: f64 },
    Narma10 { samples: usize, dt: f64 },
}

impl TaskConfig {
    pub fn dt(&self) -> f64 {
        match self {
            TaskConfig::MemoryCapacity { dt, .. }
            | TaskConfig::Hhg { dt, .. }
            | TaskConfig::Mso { dt, .. }
            | TaskConfig::Narma10 { dt, .. } => *dt,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            TaskConfig::MemoryCapacity { .. } => "memory_capacity",
            TaskConfig::Hhg { .. } => "hhg",
            TaskConfig::Mso { .. } => "mso",
            TaskConfig::Narma10 { .. } => "narma10",
        }
    }

    /// Name of the per-trial metric that cell aggregation summarizes.
    pub fn primary_metric(&self) -> &'static str {
        match self {
            TaskConfig::MemoryCapacity { .. } => "capacity",
            TaskConfig::Hhg { .. } => "mse_combined",
            TaskConfig::Mso { .. } | TaskConfig::Narma10 { .. } => "nrmse",
        }
    }

    /// Whether larger primary-metric values are better.
    pub fn maximize_metric(&self) -> bool {
        matches!(self, TaskConfig::MemoryCapacity { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    Scr,
    SingleNetwork,
    SigmoidScr,
}

impl ArchKind {
    pub fn name(&self) -> &'static str {
        match self {
            ArchKind::Scr => "scr",
            ArchKind::SingleNetwork => "single-network",
            ArchKind::SigmoidScr => "sigmoid-scr",
        }
    }
}

/// Architecture parameters shared by the three reservoir kinds.
#[derive(Debug, Clone, PartialEq)]
pub struct ArchConfig {
    pub kind: ArchKind,
    pub n_nodes: usize,
    pub k_degree: usize,
    pub network_size_range: (usize, usize),
    pub substeps: usize,
    pub drive_clip: f64,
    /// single-network: circuit nodes of the one network
    pub circuit_nodes: usize,
    /// single-network: number of differential readout pairs
    pub readout_pairs: usize,
    /// input weight coefficient used by `run` (1x1 grid)
    pub v: f64,
    /// ring weight used by `run` (1x1 grid)
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub ridge: f64,
    pub washout: usize,
    pub train_fraction: f64,
    /// Evaluate on the training rows (the fixed-input protocol).
    pub eval_on_train: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    /// Readout signal counts: SCR node counts and single-network pair counts.
    pub readout_counts: Vec<usize>,
}

/// Fully parsed experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub trials: usize,
    pub output_dir: PathBuf,
    pub threads: usize,
    pub task: TaskConfig,
    pub architecture: ArchConfig,
    pub sweep: Option<(Vec<f64>, Vec<f64>)>,
    pub device: DeviceParams,
    pub solve: SolveSettings,
    pub train: TrainConfig,
    pub compare: Option<CompareConfig>,
    pub config_hash: u64,
}

impl ExperimentConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, ConfigError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses and validates. `base_dir` anchors relative file references.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let hash = config_hash(text);
        let mut sections = parse_ini(text)?;
        let mut section = |name: &str| -> Result<Section, ConfigError> {
            sections
                .remove(name)
                .map(|raw| Section { name: name.to_string(), values: raw.values })
                .ok_or_else(|| ConfigError::MissingSection(name.to_string()))
        };

        let mut exp = section("experiment")?;
        let name: String = exp.get_or("name", "experiment".to_string())?;
        let seed: u64 = exp.get("seed")?;
        let trials: usize = exp.get_or("trials", 50)?;
        let output_dir: String = exp.get_or("output_dir", "out".to_string())?;
        let threads: usize = exp.get_or("threads", 0)?;
        exp.finish()?;
        if trials < 1 {
            return Err(ConfigError::InvalidValue {
                section: "experiment".into(),
                key: "trials".into(),
                msg: "trials must be at least 1".into(),
            });
        }

        let mut task_sec = section("task")?;
        let kind: String = task_sec.get("kind")?;
        let samples: usize = task_sec.get("samples")?;
        let dt: f64 = task_sec.get("dt")?;
        let task = match kind.as_str() {
            "memory_capacity" => TaskConfig::MemoryCapacity {
                samples,
                dt,
                input_low: task_sec.get_or("input_low", -0.8)?,
                input_high: task_sec.get_or("input_high", 0.8)?,
                max_delay: task_sec.get_or("max_delay", 10)?,
            },
            "hhg" => TaskConfig::Hhg {
                samples,
                dt,
                f_hz: task_sec.get_or("f_hz", 20.0)?,
                triangle_kmax: task_sec.get_or("triangle_kmax", 100)?,
                square_kmax: task_sec.get_or("square_kmax", 200)?,
            },
            "mso" => TaskConfig::Mso { samples, dt, horizon: task_sec.get_or("horizon", 5e-3)? },
            "narma10" => TaskConfig::Narma10 { samples, dt },
            other => {
                return Err(ConfigError::InvalidValue {
                    section: "task".into(),
                    key: "kind".into(),
                    msg: format!("unknown task `{other}`"),
                })
            }
        };
        task_sec.finish()?;

        let mut arch_sec = section("architecture")?;
        let arch_kind: String = arch_sec.get("kind")?;
        let kind = match arch_kind.as_str() {
            "scr" => ArchKind::Scr,
            "single-network" => ArchKind::SingleNetwork,
            "sigmoid-scr" => ArchKind::SigmoidScr,
            other => {
                return Err(ConfigError::InvalidValue {
                    section: "architecture".into(),
                    key: "kind".into(),
                    msg: format!("unknown architecture `{other}`"),
                })
            }
        };
        let architecture = ArchConfig {
            kind,
            n_nodes: arch_sec.get_or("n_nodes", 20)?,
            k_degree: arch_sec.get_or("k_degree", 4)?,
            network_size_range: (
                arch_sec.get_or("network_min_nodes", 20)?,
                arch_sec.get_or("network_max_nodes", 32)?,
            ),
            substeps: arch_sec.get_or("substeps", 10)?,
            drive_clip: arch_sec.get_or("drive_clip", 16.0)?,
            circuit_nodes: arch_sec.get_or("circuit_nodes", 60)?,
            readout_pairs: arch_sec.get_or("readout_pairs", 16)?,
            v: arch_sec.get("v")?,
            lambda: arch_sec.get_or("lambda", 0.0)?,
        };
        arch_sec.finish()?;

        let sweep = match sections.remove("sweep") {
            None => None,
            Some(raw) => {
                let mut s = Section { name: "sweep".into(), values: raw.values };
                let v = s.take_list_f64("v")?.ok_or(ConfigError::MissingKey {
                    section: "sweep".into(),
                    key: "v".into(),
                })?;
                let lambda = s.take_list_f64("lambda")?.unwrap_or_else(|| vec![architecture.lambda]);
                s.finish()?;
                Some((v, lambda))
            }
        };

        let device = match sections.remove("device") {
            None => DeviceParams::default(),
            Some(raw) => {
                let mut s = Section { name: "device".into(), values: raw.values };
                if let Some(file) = s.take::<String>("params_file")? {
                    s.finish()?;
                    let path = base_dir.join(file);
                    DeviceParams::from_file(path)?
                } else {
                    let params = DeviceParams::new(
                        s.get("sigma")?,
                        s.get("beta")?,
                        s.get("gamma")?,
                        s.get("delta")?,
                        s.get("lambda_rate")?,
                        s.get("eta")?,
                        s.get("tau")?,
                    )?;
                    s.finish()?;
                    params
                }
            }
        };

        let solve = match sections.remove("solver") {
            None => SolveSettings::default(),
            Some(raw) => {
                let mut s = Section { name: "solver".into(), values: raw.values };
                let defaults = SolveSettings::default();
                let settings = SolveSettings {
                    max_fixed_point_iters: s.get_or("max_iters", defaults.max_fixed_point_iters)?,
                    voltage_tolerance: s.get_or("voltage_tolerance", defaults.voltage_tolerance)?,
                    min_conductance: s.get_or("min_conductance", defaults.min_conductance)?,
                    ground_leak: s.get_or("ground_leak", defaults.ground_leak)?,
                };
                s.finish()?;
                settings
            }
        };

        let train = match sections.remove("train") {
            None => TrainConfig { ridge: 1e-8, washout: 100, train_fraction: 0.7, eval_on_train: false },
            Some(raw) => {
                let mut s = Section { name: "train".into(), values: raw.values };
                let cfg = TrainConfig {
                    ridge: s.get_or("ridge", 1e-8)?,
                    washout: s.get_or("washout", 100)?,
                    train_fraction: s.get_or("train_fraction", 0.7)?,
                    eval_on_train: s.get_or("eval_on_train", false)?,
                };
                s.finish()?;
                cfg
            }
        };

        let compare = match sections.remove("compare") {
            None => None,
            Some(raw) => {
                let mut s = Section { name: "compare".into(), values: raw.values };
                let counts = s.take_list_usize("readout_counts")?.ok_or(ConfigError::MissingKey {
                    section: "compare".into(),
                    key: "readout_counts".into(),
                })?;
                s.finish()?;
                Some(CompareConfig { readout_counts: counts })
            }
        };

        if let Some(name) = sections.into_keys().next() {
            return Err(ConfigError::UnknownSection(name));
        }

        Ok(ExperimentConfig {
            name,
            seed,
            trials,
            output_dir: PathBuf::from(output_dir),
            threads,
            task,
            architecture,
            sweep,
            device,
            solve,
            train,
            compare,
            config_hash: hash,
        })
    }

    /// The 1x1 grid used by the `run` subcommand.
    pub fn single_cell_grid(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![self.architecture.v], vec![self.architecture.lambda])
    }

    /// The full grid used by the `sweep` subcommand.
    pub fn sweep_grid(&self) -> Result<(Vec<f64>, Vec<f64>), ConfigError> {
        self.sweep.clone().ok_or(ConfigError::MissingSection("sweep".into()))
    }
}
