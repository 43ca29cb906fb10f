use clap::Parser;

fn main() {
    let cli = linkgame::cli::Cli::parse();
    std::process::exit(linkgame::cli::run(&cli));
}
