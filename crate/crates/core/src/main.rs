fn main() {
    std::process::exit(med::cli::main_with_args(std::env::args_os()));
}
