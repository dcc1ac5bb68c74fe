fn main() {
    std::process::exit(relaynav::cli::main_from(std::env::args_os()));
}
