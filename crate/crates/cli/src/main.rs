fn main() {
    std::process::exit(tracelab_cli::run(std::env::args_os()));
}
