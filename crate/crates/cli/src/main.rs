fn main() {
    std::process::exit(nlab_cli::main_with(std::env::args_os()));
}
