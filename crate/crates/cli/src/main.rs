use clap::Parser;

fn main() {
    let cli = ndw_cli::Cli::parse();
    std::process::exit(ndw_cli::execute(&cli));
}
