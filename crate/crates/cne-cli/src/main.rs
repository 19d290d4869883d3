fn main() {
    std::process::exit(cne_cli::run(std::env::args_os()));
}
