fn main() {
    std::process::exit(section_lab::cli::main_with_args(std::env::args_os()));
}
