fn main() {
    std::process::exit(fracdyn::cli::main_with_args(std::env::args_os()));
}
