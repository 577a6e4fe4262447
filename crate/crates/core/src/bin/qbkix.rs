fn main() {
    std::process::exit(qbkix::cli::run(std::env::args_os()));
}
