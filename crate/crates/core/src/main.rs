fn main() {
    std::process::exit(radproj::cli::main_with_args(std::env::args_os()));
}
