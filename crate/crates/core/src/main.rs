fn main() {
    std::process::exit(ctsf::cli::run(std::env::args_os()));
}
