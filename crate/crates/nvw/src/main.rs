fn main() {
    std::process::exit(nvw::cli::main_with_args(std::env::args_os()));
}
