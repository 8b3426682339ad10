fn main() {
    std::process::exit(aiin_cli::run(std::env::args_os()));
}
