use clap::Parser;

use wedge_chain::app;
use wedge_chain::config::{Cli, RunConfig};

fn main() {
    // clap exits with 2 on usage errors and 0 on --help.
    let cli = Cli::parse();
    let result = RunConfig::resolve(cli).and_then(|cfg| app::run(&cfg));
    match result {
        Ok(outcome) => {
            if let Some(text) = outcome.stdout {
                print!("{text}");
            }
            println!("{}", outcome.summary);
        }
        Err(e) => {
            eprintln!("wedge-chain: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
