//! Library side of the `kecurv` command line tool.

pub mod cache;
pub mod config;
pub mod output;
pub mod suites;

use cache::Cache;
use config::Config;
use output::{Bundle, SuiteResult};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(String, #[source] std::io::Error),
    #[error("output: {0}")]
    Output(String),
    #[error(transparent)]
    Core(#[from] kecurv::Error),
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => 2,
            _ => 1,
        }
    }
}

/// Runs the configured suites. With `parallel` each suite gets its own thread;
/// results keep the configured order either way.
pub fn run_all(config: &Config, cache: &Cache, parallel: bool) -> Bundle {
    let names = &config.verify.suites;
    let results: Vec<SuiteResult> = if parallel {
        std::thread::scope(|s| {
            let handles: Vec<_> = names.iter().map(|n| s.spawn(move || suites::run_suite(n, config, cache))).collect();
            handles
                .into_iter()
                .zip(names)
                .map(|(h, n)| {
                    h.join().unwrap_or_else(|_| SuiteResult {
                        suite: n.clone(),
                        reports: Vec::new(),
                        tables: Vec::new(),
                        error: Some(format!("{n}: panicked")),
                    })
                })
                .collect()
        })
    } else {
        names.iter().map(|n| suites::run_suite(n, config, cache)).collect()
    };
    Bundle::new(config, results)
}
