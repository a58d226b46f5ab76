use clap::Parser;
use robscatter_cli::{run, Cli};

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {}", e);
        std::process::exit(e.exit_code());
    }
}
