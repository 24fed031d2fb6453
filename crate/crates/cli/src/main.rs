use clap::Parser;

fn main() {
    let cli = bloch_cli::Cli::parse();
    match bloch_cli::run(&cli) {
        Ok(summary) => println!("{summary}"),
        Err(e) => {
            eprintln!("bloch {}: {e}", cli.command.name());
            std::process::exit(e.exit_code());
        }
    }
}
