fn main() {
    std::process::exit(open_kitaev::cli::run(std::env::args_os()));
}
