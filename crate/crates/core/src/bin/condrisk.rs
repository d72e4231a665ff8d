fn main() {
    std::process::exit(condrisk::cli::run(std::env::args_os()));
}
