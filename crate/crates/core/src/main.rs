fn main() {
    std::process::exit(splinefit::cli::run(std::env::args_os()));
}
