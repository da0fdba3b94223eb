fn main() {
    std::process::exit(cylnls::cli::run(std::env::args_os()));
}
