fn main() {
    std::process::exit(textscene::cli::main_with(std::env::args_os()));
}
