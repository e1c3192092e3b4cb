fn main() {
    std::process::exit(gchp::cli::main_with_args(std::env::args_os()));
}
