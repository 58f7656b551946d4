fn main() {
    std::process::exit(pianoq::cli::run(std::env::args_os()));
}
