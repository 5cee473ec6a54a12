fn main() {
    std::process::exit(convexreg::cli::main_with_args(std::env::args_os()));
}
