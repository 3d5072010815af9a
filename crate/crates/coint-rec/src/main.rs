fn main() {
    std::process::exit(coint_rec::cli::run(std::env::args_os()));
}
