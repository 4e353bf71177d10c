fn main() {
    std::process::exit(schisto_core::cli::cli_main(std::env::args_os()));
}
