use clap::Parser;

fn main() {
    let cli = varx::cli::Cli::parse();
    std::process::exit(varx::cli::run(cli));
}
