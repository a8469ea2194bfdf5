fn main() {
    std::process::exit(wiener_bounds::cli::main_with_args(std::env::args_os()));
}
