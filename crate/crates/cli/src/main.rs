use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

/// Run a Feynman-Kac exit-time experiment described by a TOML config.
#[derive(Parser, Debug)]
#[command(name = "fkexit", version)]
struct Args {
    /// experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// overrides mc.seed
    #[arg(long)]
    seed: Option<u64>,
    /// worker threads; 0 uses all cores. Results do not depend on it.
    #[arg(long, default_value_t = 1)]
    workers: usize,
    /// output directory
    #[arg(long, env = "FKEXIT_OUT_DIR", default_value = ".")]
    out: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = fk_cli::load_config(&args.config, args.seed).and_then(|cfg| fk_cli::run(&cfg, args.workers, &args.out));
    match result {
        Ok(o) => {
            println!("config-hash {}", o.config_hash);
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
