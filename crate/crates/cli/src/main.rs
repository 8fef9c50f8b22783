fn main() {
    std::process::exit(doslab_cli::run(std::env::args_os()));
}
