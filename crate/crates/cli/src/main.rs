use clap::Parser;
use dirquant::{run, RunConfig};

fn main() {
    let cfg = RunConfig::parse();
    match run(&cfg) {
        Ok(out) => {
            for w in out.warnings {
                eprintln!("warning: {w}");
            }
        }
        Err(e) => {
            if cfg.json_errors {
                eprintln!("{}", e.to_json());
            } else {
                eprintln!("{}", e.report());
            }
            std::process::exit(e.exit_code());
        }
    }
}
