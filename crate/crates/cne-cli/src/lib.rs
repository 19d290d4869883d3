//! The `cne` command: reproducible vocabulary building, walk dumps,
//! training, embedding export, and link-prediction evaluation.
//!
//! Exit codes: 0 success, 1 any runtime or config error (one-line message
//! on stderr), 2 usage errors.

pub mod commands;
pub mod config;

use clap::Parser;

use config::{parse_config, Cli, Command};

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // help and version print to stdout and succeed; everything
            // else is a usage error
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };

    let cfg = match parse_config(&cli.overrides) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("cne: {e:#}");
            return 1;
        }
    };

    if cfg.workers > 0 {
        // ignore failure: a pool may already exist inside a test harness
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global();
    }

    let result = match cli.command {
        Command::BuildVocab => commands::build_vocab(&cfg),
        Command::Walk => commands::walk(&cfg),
        Command::Train => commands::train_model(&cfg),
        Command::Embed => commands::embed(&cfg),
        Command::Eval => commands::eval(&cfg),
    };

    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("cne {}: {e:#}", cli.command.name());
            1
        }
    }
}
