use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use labelbridge::annotator::{ClientConfig, HttpConfig, MockFallback, PricingConfig};
use labelbridge::prompting::RequestConfig;
use labelbridge::sampler::{DEFAULT_BASE_TARGET, DEFAULT_NEXT_FRACTION};
use labelbridge::softprompt::{AssembleConfig, GameToken};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Everything a run depends on. Relative paths resolve against the config
/// file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub registry: Option<PathBuf>,
    /// Bundled taxonomy when absent.
    pub taxonomy: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub request: RequestConfig,
    #[serde(default)]
    pub endpoint: HttpConfig,
    #[serde(default)]
    pub client: ClientSection,
    #[serde(default)]
    pub pricing: PricingConfig,
    #[serde(default)]
    pub mock: MockSection,
    #[serde(default)]
    pub transfer: TransferSection,
    #[serde(default)]
    pub sample: SampleSection,
    #[serde(default)]
    pub assemble: AssembleSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// Client settings; the jitter seed comes from the run seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientSection {
    pub parallelism: usize,
    pub max_attempts: u32,
    pub base_delay_ms: u64,
    pub max_delay_ms: u64,
}

impl Default for ClientSection {
    fn default() -> Self {
        let c = ClientConfig::default();
        ClientSection {
            parallelism: c.parallelism,
            max_attempts: c.max_attempts,
            base_delay_ms: c.base_delay_ms,
            max_delay_ms: c.max_delay_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FallbackKind {
    #[default]
    Fail,
    Echo,
    Fixed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MockSection {
    /// JSONL of scripted responses keyed by record id.
    pub fixture: Option<PathBuf>,
    pub fallback: FallbackKind,
    /// Body for the `fixed` fallback.
    pub fixed_body: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferSection {
    /// Add span annotations to the unified rows.
    pub include_spans: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub base_target: usize,
    pub next_fraction: f64,
}

impl Default for SampleSection {
    fn default() -> Self {
        SampleSection {
            base_target: DEFAULT_BASE_TARGET,
            next_fraction: DEFAULT_NEXT_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssembleSection {
    #[serde(flatten)]
    pub layout: AssembleConfig,
    /// Origin name to game token.
    pub token_map: BTreeMap<String, GameToken>,
    /// Use this token for every record regardless of origin.
    pub override_token: Option<GameToken>,
}

impl Default for AssembleSection {
    fn default() -> Self {
        AssembleSection {
            layout: AssembleConfig::default(),
            token_map: labelbridge::softprompt::default_token_map(),
            override_token: None,
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            registry: None,
            taxonomy: None,
            output_dir: default_output_dir(),
            seed: 0,
            request: RequestConfig::default(),
            endpoint: HttpConfig::default(),
            client: ClientSection::default(),
            pricing: PricingConfig::default(),
            mock: MockSection::default(),
            transfer: TransferSection::default(),
            sample: SampleSection::default(),
            assemble: AssembleSection::default(),
        }
    }
}

impl RunConfig {
    /// Reads a TOML config, resolves its relative paths and checks that
    /// every referenced file exists.
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve(base);
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        self.registry.as_mut().map(fix);
        self.taxonomy.as_mut().map(fix);
        self.mock.fixture.as_mut().map(fix);
        fix(&mut self.output_dir);
    }

    pub fn validate(&self) -> Result<(), CliError> {
        for p in [&self.registry, &self.taxonomy, &self.mock.fixture].into_iter().flatten() {
            if !p.is_file() {
                return Err(CliError::Config(format!("file not found: {}", p.display())));
            }
        }
        if !(0.0..=2.0).contains(&self.request.temperature) {
            return Err(CliError::Config(format!(
                "temperature {} outside [0, 2]",
                self.request.temperature
            )));
        }
        if self.client.max_attempts == 0 {
            return Err(CliError::Config("client.max_attempts must be at least 1".into()));
        }
        self.pricing.validate().map_err(CliError::Config)?;
        if self.mock.fallback == FallbackKind::Fixed && self.mock.fixed_body.is_none() {
            return Err(CliError::Config("mock.fallback = \"fixed\" needs mock.fixed_body".into()));
        }
        if !(0.0..=1.0).contains(&self.sample.next_fraction) {
            return Err(CliError::Config("sample.next_fraction outside [0, 1]".into()));
        }
        Ok(())
    }

    pub fn client_config(&self) -> ClientConfig {
        ClientConfig {
            parallelism: self.client.parallelism,
            max_attempts: self.client.max_attempts,
            base_delay_ms: self.client.base_delay_ms,
            max_delay_ms: self.client.max_delay_ms,
            jitter_seed: self.seed,
        }
    }

    pub fn mock_fallback(&self) -> MockFallback {
        match self.mock.fallback {
            FallbackKind::Fail => MockFallback::Fail,
            FallbackKind::Echo => MockFallback::Echo,
            FallbackKind::Fixed => MockFallback::Fixed(self.mock.fixed_body.clone().unwrap_or_default()),
        }
    }

    /// Hash of the settings that influence artifact content. The output
    /// directory and absolute locations of inputs are left out so the same
    /// run hashes identically wherever it is executed.
    pub fn content_hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let strip = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                *path = path.file_name().map(PathBuf::from).unwrap_or_default();
            }
        };
        strip(&mut c.registry);
        strip(&mut c.taxonomy);
        strip(&mut c.mock.fixture);
        let json = serde_json::to_vec(&c).expect("config serializes");
        labelbridge::util::sha256_hex(&json)
    }
}
