use clap::Parser;

fn main() {
    let cli = armwise_cli::Cli::parse();
    if let Err(e) = armwise_cli::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
