fn main() {
    std::process::exit(colorsim::cli::main_with_args(std::env::args_os()));
}
