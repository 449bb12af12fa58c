fn main() {
    std::process::exit(eosvac::cli::run(std::env::args_os()));
}
