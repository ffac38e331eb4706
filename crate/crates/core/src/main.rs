fn main() {
    std::process::exit(thinfiber::cli::run(std::env::args_os()));
}
