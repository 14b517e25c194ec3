fn main() {
    std::process::exit(multistable::cli::run(std::env::args_os()));
}
