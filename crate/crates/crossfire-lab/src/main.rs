use crossfire_lab::cli;

fn main() {
    if let Err(e) = cli::run() {
        eprintln!("error: {e}");
        std::process::exit(cli::exit_code(&e));
    }
}
