use clap::Parser;

fn main() {
    std::process::exit(advscape_cli::run(advscape_cli::Cli::parse()));
}
