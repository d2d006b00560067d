fn main() {
    std::process::exit(psychfm::cli::cli_main(std::env::args_os()));
}
