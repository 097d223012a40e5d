use clap::Parser;

fn main() {
    let cli = cardsdp_cli::Cli::parse();
    if let Err(err) = cardsdp_cli::run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
