fn main() {
    std::process::exit(uccrl::cli::main_with_args(std::env::args_os()));
}
