//! Experiment pipeline: configuration, artifact persistence and the six
//! commands behind the CLI.

mod commands;
mod config;
mod persist;
mod report;

pub use commands::{
    build_table, collect_data, collect_seed, evaluation_seed, generate_scenarios, load_corpus,
    load_estimators, load_result_sets, load_scenarios, load_table, pipeline, report,
    result_set_name, run, train, CorpusManifest, ScenarioFile, TrainingReport,
    CORPUS_SCHEMA_VERSION, SCENARIO_SCHEMA_VERSION,
};
pub use config::{
    parse_mode, ExperimentConfig, PolicyKind, SystemParams, TrainingParams, CONFIG_SCHEMA_VERSION,
};
pub use persist::{
    fmt17, read_json, read_jsonl, to_json_bytes, write_atomic, write_csv, write_json, write_jsonl,
};
pub use report::{
    mean_stderr, write_report, HourlySeries, ResultSet, ScenarioResult, HOURS,
    RESULT_SCHEMA_VERSION, SUMMARY_NOTE,
};
