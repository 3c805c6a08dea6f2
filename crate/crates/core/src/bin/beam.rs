fn main() {
    std::process::exit(beam::cli::run(std::env::args_os()));
}
