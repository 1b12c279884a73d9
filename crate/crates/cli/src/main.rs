use clap::Parser;

fn main() {
    let cli = hcflow_cli::Cli::parse();
    if let Err(e) = hcflow_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
