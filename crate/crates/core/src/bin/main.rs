fn main() {
    std::process::exit(delay_attractor::cli::main_with(std::env::args_os()));
}
