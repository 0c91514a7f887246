fn main() {
    std::process::exit(hystdiff_cli::main_with_args(std::env::args_os()));
}
