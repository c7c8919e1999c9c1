mod annotate;
mod cluster;
mod llm;
mod metrics;
mod rank;
mod sample;
mod synth;
mod vqa;

use anyhow::Result;
use clap::ValueEnum;

use crate::config::FileConfig;
use crate::error::invalid;
use crate::{Command, MetricsCommand};

pub fn dispatch(command: &Command, config: &FileConfig) -> Result<()> {
    match command {
        Command::Sample(a) => sample::run(a, &config.sample),
        Command::Cluster(a) => cluster::run(a, &config.cluster),
        Command::Synth(a) => synth::run(a, &config.synth, &config.llm),
        Command::SplitElements(a) => llm::split_elements(a, &config.llm),
        Command::GenQuestions(a) => llm::gen_questions(a, &config.llm),
        Command::Aggregate(a) => annotate::aggregate(a),
        Command::Sigma(a) => annotate::sigma(a, &config.annotation),
        Command::Stats(a) => annotate::stats(a, &config.annotation),
        Command::ScoreVqa(a) => vqa::run(a, &config.vqa),
        Command::Metrics(MetricsCommand::Corr(a)) => metrics::corr(a),
        Command::Metrics(MetricsCommand::Fine(a)) => metrics::fine(a, &config.metrics),
        Command::Metrics(MetricsCommand::Structural(a)) => metrics::structural(a, &config.metrics),
        Command::Rank(a) => rank::run(a, &config.report),
    }
}

/// Flag, then config file, then default.
fn resolve<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Flag, then a config-file string parsed as the flag's value type, then default.
fn resolve_enum<T: ValueEnum + Clone>(
    flag: Option<T>,
    file: Option<&str>,
    key: &str,
    default: T,
) -> Result<T> {
    if let Some(v) = flag {
        return Ok(v);
    }
    match file {
        Some(s) => T::from_str(s, true)
            .map_err(|_| invalid(format!("config `{key}`: unknown value `{s}`"))),
        None => Ok(default),
    }
}

fn value_name<T: ValueEnum>(v: &T) -> String {
    v.to_possible_value()
        .map(|p| p.get_name().to_string())
        .unwrap_or_default()
}
