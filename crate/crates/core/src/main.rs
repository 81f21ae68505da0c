fn main() {
    std::process::exit(eigenhess::cli::run(std::env::args_os()));
}
