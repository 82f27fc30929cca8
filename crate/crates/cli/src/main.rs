use clap::Parser;
use relaysim_cli::args::Cli;

fn main() {
    let cli = Cli::parse();
    if let Err(err) = relaysim_cli::dispatch(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}
