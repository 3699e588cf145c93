use clap::Parser;

fn main() {
    let cli = quadlab::cli::Cli::parse();
    std::process::exit(quadlab::cli::run(cli));
}
