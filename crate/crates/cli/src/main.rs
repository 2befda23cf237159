use clap::Parser;

fn main() {
    std::process::exit(debtgame_cli::run(debtgame_cli::Cli::parse()));
}
