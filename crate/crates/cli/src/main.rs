use clap::Parser;

fn main() {
    let cli = optpop_cli::Cli::parse();
    std::process::exit(optpop_cli::run(cli));
}
