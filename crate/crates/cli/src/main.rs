fn main() {
    lsipp_cli::init_logging();
    std::process::exit(lsipp_cli::run(std::env::args_os()));
}
