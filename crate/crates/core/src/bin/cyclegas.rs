fn main() {
    std::process::exit(cyclegas::cli::main_with_args(std::env::args_os()));
}
