use clap::Parser;

fn main() {
    let cli = plap::cli::Cli::parse();
    std::process::exit(plap::cli::main_with(cli));
}
