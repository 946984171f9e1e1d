fn main() {
    std::process::exit(repulse::cli::run_cli(std::env::args_os()));
}
