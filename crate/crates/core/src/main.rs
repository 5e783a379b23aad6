fn main() {
    std::process::exit(tnale::cli::run_from_args(std::env::args_os().collect()));
}
