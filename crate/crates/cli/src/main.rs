use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;
use reifenberg_cli::{execute, thread_count, Cli, RunManifest};

fn run(cli: &Cli) -> Result<RunManifest> {
    if let Some(n) = thread_count(cli.threads)? {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let cfg = cli.load_config()?;
    execute(cli.command, &cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    match run(&cli) {
        Ok(m) => {
            for c in &m.certificates {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            println!("bundle: {} ({} files)", m.config.output.display(), m.files.len());
            if m.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
