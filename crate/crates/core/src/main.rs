fn main() {
    std::process::exit(rotset::cli::main_with_args(std::env::args_os()));
}
