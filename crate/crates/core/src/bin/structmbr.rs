fn main() {
    std::process::exit(structmbr::cli::run(std::env::args_os()));
}
