fn main() {
    std::process::exit(pestcast::cli::run(std::env::args_os()));
}
