use clap::Parser;

use isorep::cli::{run, Cli, RunConfig};

fn main() {
    let config = RunConfig::from(Cli::parse());
    std::process::exit(run(&config));
}
