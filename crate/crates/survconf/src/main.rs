fn main() {
    std::process::exit(survconf::cli::main_with_args(std::env::args_os()));
}
