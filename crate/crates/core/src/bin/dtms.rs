fn main() {
    std::process::exit(dtms::cli::run(std::env::args_os()));
}
