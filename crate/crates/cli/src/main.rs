use std::process::ExitCode;

use clap::Parser;
use pseudosphere_cli::{run_pipeline, Cli, RunConfig};

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli).and_then(|c| run_pipeline(&c));
    match result {
        Ok(outcome) => {
            let r = &outcome.report;
            println!(
                "wrote {} members to {} ({} big-cell violations, {} angle-singular nodes)",
                r.members.len(),
                r.config.out.display(),
                r.frame.big_cell_violations,
                r.frame.angle_singular_nodes
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
