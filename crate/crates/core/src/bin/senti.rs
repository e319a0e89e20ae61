fn main() {
    std::process::exit(senti_core::cli::run(std::env::args_os()));
}
