fn main() {
    std::process::exit(qmot::cli::run(std::env::args_os()));
}
