fn main() {
    std::process::exit(m3lab::cli::main_with_args(std::env::args_os()));
}
