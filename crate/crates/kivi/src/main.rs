use clap::Parser;

fn main() {
    let cli = kivi::cli::Cli::parse();
    if let Err(e) = kivi::cli::execute(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
