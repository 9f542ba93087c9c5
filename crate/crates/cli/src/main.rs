use clap::Parser;
use nessim_cli::{run, Args};

fn main() {
    let args = Args::parse();
    match run(&args) {
        Ok(files) => {
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Err(e) => {
            eprintln!("nessim: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
