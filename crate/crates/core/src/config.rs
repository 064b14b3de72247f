//! Run configuration shared by the CLI subcommands.
//!
//! A TOML file supplies defaults; command-line flags override single fields.

use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::control::ResolutionPolicy;
use crate::degree_stats::FitMode;
use crate::error::{Error, Result};
use crate::evolution::{EvolutionConfig, XAxis};
use crate::graph::ReciprocalWeight;
use crate::install::ConflictMode;
use crate::null_model::DEFAULT_SWAPS_PER_EDGE;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputFormat {
    /// Decide from the first non-comment line.
    #[default]
    Auto,
    /// Debian `Packages` index.
    Packages,
    /// `DEP`/`CON`/`NODE` edge list.
    Edges,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub path: PathBuf,
    /// Release label; defaults to the file name.
    #[serde(default)]
    pub label: Option<String>,
    #[serde(default)]
    pub date: Option<NaiveDate>,
}

impl InputSpec {
    pub fn new(path: impl Into<PathBuf>) -> Self {
        InputSpec {
            path: path.into(),
            label: None,
            date: None,
        }
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| {
            self.path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| self.path.display().to_string())
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Input files, oldest release first.
    pub inputs: Vec<InputSpec>,
    pub format: InputFormat,
    pub policy: ResolutionPolicy,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub jobs: Option<usize>,
    pub louvain_restarts: usize,
    pub weighting: ReciprocalWeight,
    pub major_threshold: f64,
    pub modularity_randomizations: usize,
    pub install_networks: usize,
    pub install_replicates: usize,
    pub swaps_per_edge: usize,
    pub conflicts: ConflictMode,
    pub fit_mode: FitMode,
    pub bin_base: f64,
    pub x_axis: XAxis,
    pub drop_last_release: bool,
    pub ensembles: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let evo = EvolutionConfig::default();
        RunConfig {
            inputs: Vec::new(),
            format: InputFormat::Auto,
            policy: ResolutionPolicy::default(),
            seed: None,
            output_dir: None,
            jobs: None,
            louvain_restarts: evo.louvain_restarts,
            weighting: evo.weighting,
            major_threshold: evo.major_threshold,
            modularity_randomizations: evo.modularity_randomizations,
            install_networks: evo.install_networks,
            install_replicates: evo.install_replicates,
            swaps_per_edge: DEFAULT_SWAPS_PER_EDGE,
            conflicts: evo.conflicts,
            fit_mode: FitMode::Binned,
            bin_base: 2.0,
            x_axis: evo.x_axis,
            drop_last_release: evo.drop_last_release,
            ensembles: evo.ensembles,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Read a config file. Relative input paths are resolved against the
    /// file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let mut config = Self::from_toml(&text)
            .map_err(|e| Error::Config(format!("{}: {}", path.display(), e.to_string().trim_start_matches("config: "))))?;
        let base = path.parent().unwrap_or(Path::new(""));
        for input in &mut config.inputs {
            if input.path.is_relative() {
                input.path = base.join(&input.path);
            }
        }
        if let Some(dir) = &mut config.output_dir {
            if dir.is_relative() {
                *dir = base.join(&*dir);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("louvain_restarts", self.louvain_restarts),
            ("install_replicates", self.install_replicates),
            ("swaps_per_edge", self.swaps_per_edge),
        ];
        for (name, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        for (name, v) in [
            ("modularity_randomizations", self.modularity_randomizations),
            ("install_networks", self.install_networks),
        ] {
            if v < 2 {
                return Err(Error::Config(format!("{name} must be >= 2 (an ensemble needs a spread)")));
            }
        }
        if self.jobs == Some(0) {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        if !(self.major_threshold > 0.0 && self.major_threshold < 1.0) {
            return Err(Error::Config("major_threshold must lie in (0, 1)".into()));
        }
        if !(self.bin_base > 1.0) {
            return Err(Error::Config("bin_base must be > 1".into()));
        }
        Ok(())
    }

    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            x_axis: self.x_axis,
            drop_last_release: self.drop_last_release,
            louvain_restarts: self.louvain_restarts,
            weighting: self.weighting,
            major_threshold: self.major_threshold,
            ensembles: self.ensembles,
            modularity_randomizations: self.modularity_randomizations,
            install_networks: self.install_networks,
            install_replicates: self.install_replicates,
            swaps_per_edge: self.swaps_per_edge,
            conflicts: self.conflicts,
        }
    }

    /// SHA-256 over everything that can change results: the command, the
    /// analysis settings, the seed and the input contents (`input_digests`,
    /// in input order). Paths, output locations and the job count are left
    /// out.
    pub fn digest(&self, command: &str, input_digests: &[String]) -> String {
        let mut value = serde_json::to_value(self).expect("config serialises");
        let map = value.as_object_mut().expect("config is an object");
        map.remove("jobs");
        map.remove("output_dir");
        map.remove("inputs");
        let inputs: Vec<serde_json::Value> = self
            .inputs
            .iter()
            .zip(input_digests)
            .map(|(i, d)| serde_json::json!({ "label": i.label(), "date": i.date, "sha256": d }))
            .collect();
        map.insert("inputs".into(), inputs.into());
        map.insert("command".into(), command.into());
        hex::encode(Sha256::digest(serde_json::to_vec(&value).expect("json")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_full_file() {
        let c = RunConfig::from_toml(
            r#"
            seed = 42
            louvain_restarts = 5
            conflicts = "symmetric"
            x_axis = "date"
            [policy]
            alternatives = "all_alternatives"
            [[inputs]]
            path = "a/Packages"
            label = "hamm"
            date = "1998-07-24"
            "#,
        )
        .unwrap();
        assert_eq!(c.seed, Some(42));
        assert_eq!(c.louvain_restarts, 5);
        assert_eq!(c.conflicts, ConflictMode::Symmetric);
        assert_eq!(c.inputs[0].label(), "hamm");
        assert_eq!(c.inputs[0].date, NaiveDate::from_ymd_opt(1998, 7, 24));
        assert_eq!(c.install_networks, 100);
        assert_eq!(c.modularity_randomizations, 1000);
        assert_eq!(c.install_replicates, 1000);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_unknown_keys_and_bad_counts() {
        assert!(matches!(RunConfig::from_toml("sede = 1"), Err(Error::Config(_))));
        let c = RunConfig {
            install_replicates: 0,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn digest_ignores_jobs_and_paths() {
        let a = RunConfig {
            seed: Some(1),
            inputs: vec![InputSpec::new("x/one.edges")],
            ..Default::default()
        };
        let mut b = a.clone();
        b.jobs = Some(7);
        b.output_dir = Some("elsewhere".into());
        b.inputs[0].path = "y/one.edges".into();
        let d = ["abc".to_string()];
        assert_eq!(a.digest("simulate", &d), b.digest("simulate", &d));
        assert_ne!(a.digest("simulate", &d), a.digest("community", &d));
        assert_ne!(a.digest("simulate", &d), a.digest("simulate", &["abd".to_string()]));
        b.seed = Some(2);
        assert_ne!(a.digest("simulate", &d), b.digest("simulate", &d));
    }

    #[test]
    fn label_defaults_to_file_name() {
        assert_eq!(InputSpec::new("dir/Packages.hamm").label(), "Packages.hamm");
    }
}
