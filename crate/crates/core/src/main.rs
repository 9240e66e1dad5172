fn main() {
    std::process::exit(krigesense::cli::main(std::env::args_os()));
}
