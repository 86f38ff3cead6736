use clap::Parser;
use szego_lab::cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_configuration() {
                2
            } else {
                1
            }
        }
    };
    std::process::exit(code);
}
