//! Monte-Carlo campaigns, anneal-distribution and timing reports, and the
//! external sampler bridge.

pub mod bridge;
pub mod campaign;
pub mod config;
pub mod report;

pub use bridge::{bridge_client_sample, serve_local, BridgeEndpoint, BridgeSampler, LocalBackend};
pub use campaign::{run_campaign, CampaignReport, MethodOutcome, MethodSummary, TrialRecord, CSV_HEADER};
pub use config::{parse_config_toml, ConfigError, ConfigFile, ExperimentConfig, Method, SamplerKind};
pub use report::{report_anneal_distribution, report_timing, AnnealReport, AnnealRow, TimingReport};
