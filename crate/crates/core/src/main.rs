fn main() {
    std::process::exit(cbist::cli::run_cli(std::env::args_os()));
}
